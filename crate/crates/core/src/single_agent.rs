//! One agent, many actions.
//!
//! The agent picks any subset of actions; `f` gives the success probability
//! and costs are additive. Under a linear contract `α` the agent's utility is
//! `α f(S) − c(S)` and the principal keeps `(1 − α) f(S)`. As `α` grows the
//! agent's best response walks up the upper envelope of the lines
//! `α ↦ α f(S) − c(S)`; the points where it changes are the critical values,
//! and an optimal contract always sits at one of them (or at zero).

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::demand::{validate_costs, BestResponder, Engine};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::setfn::{check_class, SetClass, SetFunction};
use crate::subset::Subset;

#[derive(Clone, Debug, PartialEq)]
pub struct SingleAgentInstance {
    f: SetFunction,
    costs: Vec<Rational>,
}

/// Shared validation for instances whose `f` is a success probability.
pub(crate) fn validate_probability(f: &SetFunction) -> Result<()> {
    let top = f.value(f.ground())?;
    if top > Rational::one() {
        return Err(Error::field(
            "function",
            format!("f of the full set is {}, above 1", rational::format(&top)),
        ));
    }
    Ok(())
}

impl SingleAgentInstance {
    pub fn new(f: SetFunction, costs: Vec<Rational>) -> Result<Self> {
        validate_costs(f.n(), &costs)?;
        validate_probability(&f)?;
        Ok(SingleAgentInstance { f, costs })
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }

    pub fn function(&self) -> &SetFunction {
        &self.f
    }

    pub fn costs(&self) -> &[Rational] {
        &self.costs
    }

    pub fn cost(&self, s: Subset) -> Rational {
        s.iter().map(|i| &self.costs[i]).sum()
    }

    pub fn responder(&self, engine: Engine) -> Result<BestResponder<'_>> {
        BestResponder::new(&self.f, &self.costs, engine)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Utilities {
    pub agent: Rational,
    pub principal: Rational,
    pub welfare: Rational,
}

fn check_unit(name: &str, x: &Rational) -> Result<()> {
    if x.is_negative() || *x > Rational::one() {
        return Err(Error::invalid(format!("{name} = {} is outside [0, 1]", rational::format(x))));
    }
    Ok(())
}

pub fn utilities(inst: &SingleAgentInstance, alpha: &Rational, s: Subset) -> Result<Utilities> {
    check_unit("alpha", alpha)?;
    let value = inst.f.value(s)?;
    let cost = inst.cost(s);
    Ok(Utilities {
        agent: alpha * &value - &cost,
        principal: (Rational::one() - alpha) * &value,
        welfare: value - cost,
    })
}

/// A point where the best response switches from `before` to `after`; at
/// the point itself the agent already plays `after`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalValue {
    pub alpha: Rational,
    pub before: Subset,
    pub after: Subset,
}

/// Critical values in `(lo, hi]`, ascending, by recursive bisection at the
/// intersection of the two boundary responses.
///
/// For `(L, R]` with responses `S_L ≠ S_R`, the lines of `S_L` and `S_R` meet
/// at `M = Δc / Δf`. If nothing beats them at `M`, then `M` is the only
/// critical value in the interval; otherwise recurse on `(L, M]` and `(M, R]`.
pub fn enumerate_critical_values(
    inst: &SingleAgentInstance,
    lo: &Rational,
    hi: &Rational,
    engine: Engine,
) -> Result<Vec<CriticalValue>> {
    check_unit("L", lo)?;
    check_unit("R", hi)?;
    if lo >= hi {
        return Err(Error::invalid("need L < R"));
    }
    let responder = inst.responder(engine)?;
    critical_values_with(&responder, lo, hi)
}

pub(crate) fn critical_values_with(responder: &BestResponder<'_>, lo: &Rational, hi: &Rational) -> Result<Vec<CriticalValue>> {
    let s_lo = responder.respond(lo)?;
    let s_hi = responder.respond(hi)?;
    let mut out = Vec::new();
    // Each call either emits a critical value or splits off a new one, so
    // an exact oracle never exceeds this budget.
    let mut budget = 4usize << responder.function().n();
    bisect(responder, lo.clone(), s_lo, hi.clone(), s_hi, &mut out, &mut budget)?;
    Ok(out)
}

fn bisect(
    responder: &BestResponder<'_>,
    lo: Rational,
    s_lo: Subset,
    hi: Rational,
    s_hi: Subset,
    out: &mut Vec<CriticalValue>,
    budget: &mut usize,
) -> Result<()> {
    if s_lo == s_hi {
        return Ok(());
    }
    if *budget == 0 {
        return Err(Error::Consistency("critical-value recursion did not terminate".into()));
    }
    *budget -= 1;
    let f = responder.function();
    let (f_lo, f_hi) = (f.at(s_lo), f.at(s_hi));
    let (c_lo, c_hi) = (responder.cost(s_lo), responder.cost(s_hi));
    if f_lo == f_hi && c_lo == c_hi {
        return Ok(());
    }
    if f_hi <= f_lo {
        return Err(Error::Consistency(format!(
            "best response {s_hi} at {} does not improve on {s_lo} at {}; the demand engine is not exact for this function",
            rational::format(&hi),
            rational::format(&lo)
        )));
    }
    let mid = (&c_hi - &c_lo) / (&f_hi - &f_lo);
    if mid <= lo || mid > hi {
        return Err(Error::Consistency(format!(
            "intersection {} falls outside ({}, {}]",
            rational::format(&mid),
            rational::format(&lo),
            rational::format(&hi)
        )));
    }
    let s_mid = responder.respond(&mid)?;
    let u_mid = &mid * f.at(s_mid) - responder.cost(s_mid);
    let u_lo = &mid * &f_lo - &c_lo;
    if u_mid == u_lo {
        out.push(CriticalValue { alpha: mid, before: s_lo, after: s_hi });
        return Ok(());
    }
    if u_mid < u_lo {
        return Err(Error::Consistency("best response is beaten at a probe point".into()));
    }
    bisect(responder, lo, s_lo, mid.clone(), s_mid, out, budget)?;
    bisect(responder, mid, s_mid, hi, s_hi, out, budget)
}

/// Interval of contracts inducing `set`: `[alpha_lo, alpha_hi)`, except the
/// last segment of an envelope, which is closed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvelopeSegment {
    pub set: Subset,
    pub alpha_lo: Rational,
    pub alpha_hi: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub segments: Vec<EnvelopeSegment>,
    pub critical_values: Vec<CriticalValue>,
}

/// Upper envelope of the agent's utility over `[lo, hi]`.
pub fn envelope(inst: &SingleAgentInstance, lo: &Rational, hi: &Rational, engine: Engine) -> Result<Envelope> {
    let critical_values = enumerate_critical_values(inst, lo, hi, engine)?;
    let start = inst.responder(engine)?.respond(lo)?;
    Ok(Envelope { segments: segments_from(lo, hi, start, &critical_values), critical_values })
}

fn segments_from(lo: &Rational, hi: &Rational, start: Subset, cvs: &[CriticalValue]) -> Vec<EnvelopeSegment> {
    let mut segments = Vec::with_capacity(cvs.len() + 1);
    let mut current = (start, lo.clone());
    for cv in cvs {
        segments.push(EnvelopeSegment { set: current.0, alpha_lo: current.1, alpha_hi: cv.alpha.clone() });
        current = (cv.after, cv.alpha.clone());
    }
    segments.push(EnvelopeSegment { set: current.0, alpha_lo: current.1, alpha_hi: hi.clone() });
    segments
}

/// CSV rows `alpha_lo,alpha_hi,set_bitmask,f,cost` with exact fractions.
pub fn envelope_csv(inst: &SingleAgentInstance, env: &Envelope) -> String {
    let mut out = String::from("alpha_lo,alpha_hi,set_bitmask,f,cost\n");
    for seg in &env.segments {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            rational::format(&seg.alpha_lo),
            rational::format(&seg.alpha_hi),
            seg.set.0,
            rational::format(&inst.f.at(seg.set)),
            rational::format(&inst.cost(seg.set)),
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractResult {
    pub alpha: Rational,
    pub set: Subset,
    pub principal_utility: Rational,
    pub agent_utility: Rational,
}

impl ContractResult {
    fn evaluate(responder: &BestResponder<'_>, alpha: Rational) -> Result<Self> {
        let set = responder.respond(&alpha)?;
        let value = responder.function().at(set);
        Ok(ContractResult {
            principal_utility: (Rational::one() - &alpha) * &value,
            agent_utility: &alpha * &value - responder.cost(set),
            alpha,
            set,
        })
    }
}

/// Best of the candidates by principal utility; earlier candidates win ties,
/// so callers pass them in ascending `α`.
fn best_of(responder: &BestResponder<'_>, candidates: impl IntoIterator<Item = Rational>) -> Result<ContractResult> {
    let mut best: Option<ContractResult> = None;
    for alpha in candidates {
        let r = ContractResult::evaluate(responder, alpha)?;
        let better = match &best {
            None => true,
            Some(b) => r.principal_utility > b.principal_utility
                || (r.principal_utility == b.principal_utility && r.alpha == b.alpha && r.set < b.set),
        };
        if better {
            best = Some(r);
        }
    }
    best.ok_or_else(|| Error::Consistency("no candidate contracts".into()))
}

/// Exact optimal linear contract: the best of `α = 0` and every critical
/// value (each the cheapest contract inducing its segment's set).
pub fn optimal_contract(inst: &SingleAgentInstance, engine: Engine) -> Result<ContractResult> {
    let responder = inst.responder(engine)?;
    let cvs = critical_values_with(&responder, &Rational::zero(), &Rational::one())?;
    best_of(&responder, std::iter::once(Rational::zero()).chain(cvs.into_iter().map(|cv| cv.alpha)))
}

const GRID_BITS: u64 = 48;

/// `x` rounded up to a dyadic rational with about [`GRID_BITS`] significant
/// bits, for `0 < x <= 1`.
fn round_up_dyadic(x: &Rational) -> Rational {
    let shift = GRID_BITS + x.denom().bits() - x.numer().bits();
    let scaled = x.numer() << shift;
    let (q, r) = num_integer::Integer::div_rem(&scaled, x.denom());
    let q = if r.is_zero() { q } else { q + 1 };
    Rational::new(q, BigInt::one() << shift)
}

/// Contracts evaluated by [`fptas_contract`], ascending.
///
/// The shares `1 − α` form a geometric sequence with ratio at least `1 − ε`
/// (each term rounded up to a short dyadic), running from 1 down past
/// `W / 2^n`, where `W` is the maximum welfare. The optimal contract leaves
/// the principal at least `W / 2^n`, so it lies above the last grid point and
/// some grid point sits within a `(1 − ε)` factor of it from the right.
pub fn fptas_grid(inst: &SingleAgentInstance, epsilon: &Rational, engine: Engine) -> Result<Vec<Rational>> {
    let responder = inst.responder(engine)?;
    fptas_grid_with(&responder, epsilon)
}

fn fptas_grid_with(responder: &BestResponder<'_>, epsilon: &Rational) -> Result<Vec<Rational>> {
    if !epsilon.is_positive() || *epsilon >= Rational::one() {
        return Err(Error::invalid(format!("epsilon = {} must lie in (0, 1)", rational::format(epsilon))));
    }
    let f = responder.function();
    let one = Rational::one();
    let top = responder.respond(&one)?;
    let welfare = f.at(top) - responder.cost(top);
    let mut grid = vec![Rational::zero()];
    if welfare.is_positive() {
        let floor = welfare / Rational::from_integer(BigInt::one() << f.n());
        let ratio = &one - epsilon;
        let mut share = one.clone();
        loop {
            let next = round_up_dyadic(&(&share * &ratio));
            if next >= share {
                return Err(Error::invalid("epsilon too small for the contract grid"));
            }
            share = next;
            grid.push(&one - &share);
            if share <= floor {
                break;
            }
        }
    }
    grid.push(one);
    Ok(grid)
}

/// `(1 − ε)`-approximate contract from best-response queries on a grid.
pub fn fptas_contract(inst: &SingleAgentInstance, epsilon: &Rational, engine: Engine) -> Result<ContractResult> {
    let responder = inst.responder(engine)?;
    let grid = fptas_grid_with(&responder, epsilon)?;
    best_of(&responder, grid)
}

/// Envelope of a supermodular instance as a nested chain of sets, one entry
/// per critical value: `(α, set induced from α on)`.
pub fn supermodular_chain(inst: &SingleAgentInstance) -> Result<Vec<(Rational, Subset)>> {
    if !check_class(&inst.f, &SetClass::Supermodular)? {
        return Err(Error::invalid("reward function is not supermodular"));
    }
    let cvs = enumerate_critical_values(inst, &Rational::zero(), &Rational::one(), Engine::Brute)?;
    for cv in &cvs {
        if !cv.before.is_subset_of(cv.after) {
            return Err(Error::Consistency(format!(
                "best responses {} and {} at {} are not nested",
                cv.before,
                cv.after,
                rational::format(&cv.alpha)
            )));
        }
    }
    if cvs.len() > inst.n() {
        return Err(Error::Consistency(format!("{} critical values exceed n = {}", cvs.len(), inst.n())));
    }
    Ok(cvs.into_iter().map(|cv| (cv.alpha, cv.after)).collect())
}
