//! Many agents, one binary action each.
//!
//! Agent `i` either works (cost `c_i`) or shirks; `f(S)` is the success
//! probability when exactly the agents in `S` work. A contract pays agent
//! `i` the share `α_i` of the reward on success.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::demand::{cost_of, validate_costs};
use crate::error::{Error, Result};
use crate::rational::{self, sqrt_fixed, to_fixed, Extended, Rational};
use crate::setfn::{check_class, Kind, Repr, SetClass, SetFunction};
use crate::single_agent::validate_probability;
use crate::subset::{all_subsets, Subset};
use crate::ensure_exhaustive;

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryTeamInstance {
    f: SetFunction,
    costs: Vec<Rational>,
}

impl BinaryTeamInstance {
    pub fn new(f: SetFunction, costs: Vec<Rational>) -> Result<Self> {
        validate_costs(f.n(), &costs)?;
        validate_probability(&f)?;
        Ok(BinaryTeamInstance { f, costs })
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

    fn check(&self, s: Subset) -> Result<()> {
        self.f.value(s).map(|_| ())
    }
}

/// Payment shares together with the team they are meant to incentivize.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeamContract {
    pub alpha: Vec<Rational>,
    pub set: Subset,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MinPayment {
    Contract(TeamContract),
    /// `agent` has positive cost but adds nothing to the team.
    Unincentivizable { agent: usize },
}

/// Cheapest shares making `s` an equilibrium: `α_i = c_i / f(i | S∖{i})`
/// on `s`, zero elsewhere, with `0/0 = 0`.
pub fn min_payment_contract(inst: &BinaryTeamInstance, s: Subset) -> Result<MinPayment> {
    inst.check(s)?;
    let mut alpha = vec![Rational::zero(); inst.n()];
    for i in s.iter() {
        let marginal = inst.f.marginal_of(i, s.without(i));
        if marginal.is_zero() {
            if inst.costs[i].is_positive() {
                return Ok(MinPayment::Unincentivizable { agent: i });
            }
        } else {
            alpha[i] = &inst.costs[i] / marginal;
        }
    }
    Ok(MinPayment::Contract(TeamContract { alpha, set: s }))
}

/// Principal's profit `g(S) = (1 − Σ α_i) f(S)` at minimum payments.
pub fn team_profit(inst: &BinaryTeamInstance, s: Subset) -> Result<Extended> {
    Ok(match min_payment_contract(inst, s)? {
        MinPayment::Unincentivizable { .. } => Extended::NegInfinity,
        MinPayment::Contract(c) => {
            let paid: Rational = c.alpha.iter().sum();
            Extended::Finite((Rational::one() - paid) * inst.f.at(s))
        }
    })
}

/// Whether `s` is a Nash equilibrium under shares `alpha`: no working agent
/// gains by shirking and no idle agent gains by joining.
pub fn is_nash_team(inst: &BinaryTeamInstance, alpha: &[Rational], s: Subset) -> Result<bool> {
    inst.check(s)?;
    if alpha.len() != inst.n() {
        return Err(Error::invalid(format!("{} shares for {} agents", alpha.len(), inst.n())));
    }
    if alpha.iter().any(Signed::is_negative) {
        return Err(Error::invalid("shares must be nonnegative"));
    }
    let f_s = inst.f.at(s);
    Ok((0..inst.n()).all(|i| {
        let a = &alpha[i];
        if s.contains(i) {
            a * &f_s - &inst.costs[i] >= a * inst.f.at(s.without(i))
        } else {
            a * &f_s >= a * inst.f.at(s.with(i)) - &inst.costs[i]
        }
    }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeamOptimum {
    pub set: Subset,
    pub profit: Rational,
}

/// Exhaustive maximizer of `g`; ties go to larger `f`, then smaller bitmask.
pub fn brute_force_optimal_team(inst: &BinaryTeamInstance) -> Result<TeamOptimum> {
    ensure_exhaustive(inst.n())?;
    let mut best = TeamOptimum { set: Subset::EMPTY, profit: Rational::zero() };
    for s in all_subsets(inst.n()).skip(1) {
        if let Extended::Finite(g) = team_profit(inst, s)? {
            let better = match g.cmp(&best.profit) {
                Ordering::Greater => true,
                Ordering::Equal => inst.f.at(s) > inst.f.at(best.set),
                Ordering::Less => false,
            };
            if better {
                best = TeamOptimum { set: s, profit: g };
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingleAgentChoice {
    pub agent: usize,
    /// `g({agent})`; may be negative (or `-inf`), in which case hiring
    /// nobody, at profit zero, is the better contract.
    pub profit: Extended,
}

impl SingleAgentChoice {
    /// The team actually worth contracting: the agent if its profit is
    /// positive, otherwise nobody.
    pub fn as_optimum(&self) -> TeamOptimum {
        match &self.profit {
            Extended::Finite(g) if g.is_positive() => {
                TeamOptimum { set: Subset::singleton(self.agent), profit: g.clone() }
            }
            _ => TeamOptimum { set: Subset::EMPTY, profit: Rational::zero() },
        }
    }
}

/// Best one-agent team by `g({i})`; smaller index on ties.
pub fn best_single_agent(inst: &BinaryTeamInstance) -> Result<SingleAgentChoice> {
    let mut best: Option<SingleAgentChoice> = None;
    for i in 0..inst.n() {
        let profit = team_profit(inst, Subset::singleton(i))?;
        if best.as_ref().is_none_or(|b| profit > b.profit) {
            best = Some(SingleAgentChoice { agent: i, profit });
        }
    }
    best.ok_or_else(|| Error::invalid("instance has no agents"))
}

/// `(1 − ε)`-approximate team for additive `f` by rounding agent values to
/// multiples of `δb` (`δ = ε/n`, `b` a guess for the largest value in the
/// optimal team) and solving a knapsack over rounded totals.
pub fn fptas_additive_team(inst: &BinaryTeamInstance, epsilon: &Rational) -> Result<TeamOptimum> {
    let weights = match inst.f.repr() {
        Repr::Additive { weights } => weights,
        _ => return Err(Error::invalid("the additive-team FPTAS needs an additive reward function")),
    };
    if !epsilon.is_positive() || *epsilon >= Rational::one() {
        return Err(Error::invalid(format!("epsilon = {} must lie in (0, 1)", rational::format(epsilon))));
    }
    let n = inst.n();
    // Agents worth nothing only add cost (or nothing, at zero cost).
    let useful: Vec<usize> = (0..n).filter(|&i| weights[i].is_positive()).collect();
    let ratios: Vec<Rational> = (0..n)
        .map(|i| if weights[i].is_positive() { &inst.costs[i] / &weights[i] } else { Rational::zero() })
        .collect();

    let mut guesses: Vec<&Rational> = useful.iter().map(|&i| &weights[i]).collect();
    guesses.sort();
    guesses.dedup();

    let mut best_estimate = Rational::zero();
    let mut best_set = Subset::EMPTY;
    for b in guesses {
        let unit = epsilon * b / Rational::from_integer(BigInt::from(n));
        let eligible: Vec<(usize, usize)> = useful
            .iter()
            .filter(|&&i| weights[i] <= *b)
            .map(|&i| {
                let r = (&weights[i] / &unit).floor().to_integer();
                (i, usize::try_from(r).expect("rounded values are at most n/ε"))
            })
            .collect();
        let total: usize = eligible.iter().map(|e| e.1).sum();
        // cheapest[t]: minimum payment ratio reaching rounded total exactly t.
        let mut cheapest: Vec<Option<(Rational, Subset)>> = vec![None; total + 1];
        cheapest[0] = Some((Rational::zero(), Subset::EMPTY));
        for &(i, r) in &eligible {
            for t in (r..=total).rev() {
                if let Some((ratio, set)) = &cheapest[t - r] {
                    let candidate = ratio + &ratios[i];
                    if cheapest[t].as_ref().is_none_or(|(c, _)| candidate < *c) {
                        cheapest[t] = Some((candidate, set.with(i)));
                    }
                }
            }
        }
        // Threshold x = kδb is met by any total t >= k.
        let mut suffix: Option<(Rational, Subset)> = None;
        for k in (1..=total).rev() {
            if let Some((c, s)) = &cheapest[k] {
                if suffix.as_ref().is_none_or(|(best, _)| c < best) {
                    suffix = Some((c.clone(), *s));
                }
            }
            if let Some((c, s)) = &suffix {
                let estimate = (Rational::one() - c) * &unit * Rational::from_integer(BigInt::from(k));
                if estimate > best_estimate {
                    best_estimate = estimate;
                    best_set = *s;
                }
            }
        }
    }
    let profit = team_profit(inst, best_set)?
        .finite()
        .cloned()
        .ok_or_else(|| Error::Consistency("FPTAS picked an unincentivizable team".into()))?;
    Ok(TeamOptimum { set: best_set, profit })
}

/// Shrinks `t` while keeping `f ≥ psi`: repeatedly drops the highest-index
/// element whose removal stays at or above `psi`.
///
/// For submodular `f` the result `U` has `psi ≤ f(U) ≤ psi + max_{i∈T} f({i})`
/// and every marginal `f(i | U∖{i})` at least its value inside `t`.
pub fn scale_down_submodular(f: &SetFunction, t: Subset, psi: &Rational) -> Result<Subset> {
    let top = f.value(t)?;
    if psi.is_negative() || *psi >= top {
        return Err(Error::invalid(format!(
            "psi = {} must lie in [0, f(T)) = [0, {})",
            rational::format(psi),
            rational::format(&top)
        )));
    }
    let mut u = t;
    'shrink: loop {
        for i in (0..f.n()).rev().filter(|&i| u.contains(i)) {
            if f.at(u.without(i)) >= *psi {
                u = u.without(i);
                continue 'shrink;
            }
        }
        return Ok(u);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeamApprox {
    pub set: Subset,
    /// Minimum payments for `set`.
    pub alpha: Vec<Rational>,
    pub profit: Rational,
    /// Guessed values of `f(S*)` that were tried.
    pub guesses: Vec<Rational>,
}

const FIXED_BITS: usize = 256;

/// Demand over subsets of `pool` at prices `p_i = ½√(c_i v)`.
///
/// Surpluses are compared in 256-bit fixed point. Differences too close to
/// call are settled exactly when the two sets differ in at most one priced
/// element (one square root, compared by squaring); otherwise they are
/// treated as ties, which go to larger `f`, then smaller bitmask.
fn sqrt_price_demand(inst: &BinaryTeamInstance, pool: Subset, v: &Rational) -> Subset {
    let quarter = Rational::new(1.into(), 4.into());
    let squared: Vec<Rational> = inst.costs.iter().map(|c| c * v * &quarter).collect();
    let price: Vec<BigInt> = squared.iter().map(|p2| sqrt_fixed(p2, FIXED_BITS)).collect();
    let slack = BigInt::from(2 * (inst.n() + 1));
    let surplus = |s: Subset| -> BigInt {
        s.iter().fold(to_fixed(&inst.f.at(s), FIXED_BITS), |acc, i| acc - &price[i])
    };
    // Sign of (f(a) − p(a)) − (f(b) − p(b)) when the fixed-point values are close.
    let exact_cmp = |a: Subset, b: Subset| -> Option<Ordering> {
        let df = inst.f.at(a) - inst.f.at(b);
        let priced: Vec<usize> = a.union(b).difference(a.intersection(b)).iter().filter(|&i| squared[i].is_positive()).collect();
        match priced.as_slice() {
            [] => Some(df.cmp(&Rational::zero())),
            [j] => {
                // Compare df with +p_j (j ∈ a) or −p_j (j ∈ b).
                let p2 = &squared[*j];
                let sign = if a.contains(*j) { 1 } else { -1 };
                let ord = match (df.is_negative(), sign) {
                    (false, -1) => Ordering::Greater,
                    (true, 1) => Ordering::Less,
                    (false, _) => (&df * &df).cmp(p2),
                    (true, _) => p2.cmp(&(&df * &df)),
                };
                Some(ord)
            }
            _ => None,
        }
    };
    let mut best = Subset::EMPTY;
    let mut best_surplus = surplus(best);
    for s in pool.subsets().skip(1) {
        let sur = surplus(s);
        let diff = &sur - &best_surplus;
        let ord = if diff.abs() > slack {
            diff.cmp(&BigInt::zero())
        } else {
            exact_cmp(s, best).unwrap_or(Ordering::Equal)
        };
        let better = match ord {
            Ordering::Greater => true,
            Ordering::Equal => inst.f.at(s) > inst.f.at(best),
            Ordering::Less => false,
        };
        if better {
            best = s;
            best_surplus = sur;
        }
    }
    best
}

/// Constant-factor team for submodular `f`.
///
/// Candidates are the best single agent and, for each guess `v` of the
/// optimal team's value, the demand set of the small agents (`c_i ≤ f({i})/2`)
/// at prices `½√(c_i v)`, scaled down to value about `v/32`. Guesses are
/// `2^k · max f({i})` over small agents `i`, for `k = 0..=⌈log₂ n⌉ + 1`.
pub fn constant_approx_submodular_team(inst: &BinaryTeamInstance) -> Result<TeamApprox> {
    if inst.f.kind() != Kind::Additive && !check_class(&inst.f, &SetClass::Submodular)? {
        return Err(Error::invalid("reward function is not submodular"));
    }
    ensure_exhaustive(inst.n())?;
    let n = inst.n();
    let small = Subset::from_elements(
        (0..n).filter(|&i| inst.costs[i].clone() * Rational::from_integer(2.into()) <= inst.f.at(Subset::singleton(i))),
    );
    let mut best = best_single_agent(inst)?.as_optimum();
    let base = small.iter().map(|i| inst.f.at(Subset::singleton(i))).max().unwrap_or_else(Rational::zero);
    let mut guesses = Vec::new();
    if base.is_positive() {
        let rounds = usize::BITS - (n.max(1) - 1).leading_zeros() + 1;
        let mut v = base;
        for _ in 0..=rounds {
            guesses.push(v.clone());
            v *= Rational::from_integer(2.into());
        }
    }
    for v in &guesses {
        let t = sqrt_price_demand(inst, small, v);
        let psi = v / Rational::from_integer(32.into());
        let u = if inst.f.at(t) > psi { scale_down_submodular(&inst.f, t, &psi)? } else { t };
        if let Extended::Finite(g) = team_profit(inst, u)? {
            if g > best.profit {
                best = TeamOptimum { set: u, profit: g };
            }
        }
    }
    let alpha = match min_payment_contract(inst, best.set)? {
        MinPayment::Contract(c) => c.alpha,
        MinPayment::Unincentivizable { .. } => unreachable!("chosen teams have finite profit"),
    };
    Ok(TeamApprox { set: best.set, alpha, profit: best.profit, guesses })
}

/// Total minimum payment cost `c(S)`, convenient for reports.
pub fn team_cost(inst: &BinaryTeamInstance, s: Subset) -> Rational {
    cost_of(&inst.costs, s)
}
