//! Demand queries and agent best responses.
//!
//! Every engine breaks ties the same way: maximum surplus first, then larger
//! `f`, then the smallest bitmask (or smallest index inside the greedy loops).
//! Larger `f` is what makes the agent's choice favor the principal.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::setfn::SetFunction;
use crate::subset::Subset;
use crate::ensure_exhaustive;

/// Nonnegative per-element prices.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceVector(Vec<Rational>);

impl PriceVector {
    pub fn new(prices: Vec<Rational>) -> Result<Self> {
        if let Some(i) = prices.iter().position(Signed::is_negative) {
            return Err(Error::invalid(format!("price p[{i}] is negative")));
        }
        Ok(PriceVector(prices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn cost(&self, s: Subset) -> Rational {
        s.iter().map(|i| &self.0[i]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandResult {
    pub set: Subset,
    /// `f(set) − p(set)`.
    pub surplus: Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Brute,
    /// Exact for gross-substitutes functions.
    Gs,
    /// Exact for ultra (well-layered) functions.
    Ultra,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(Engine::Brute),
            "gs" => Ok(Engine::Gs),
            "ultra" => Ok(Engine::Ultra),
            other => Err(Error::invalid(format!("unknown engine {other:?} (brute|gs|ultra)"))),
        }
    }
}

fn check_prices(f: &SetFunction, p: &PriceVector) -> Result<()> {
    if p.len() != f.n() {
        return Err(Error::invalid(format!(
            "price vector has {} entries for a {}-element ground set",
            p.len(),
            f.n()
        )));
    }
    Ok(())
}

/// Global maximizer of `f(S) − p(S)` by scanning all subsets.
pub fn brute_force_demand(f: &SetFunction, p: &PriceVector) -> Result<DemandResult> {
    check_prices(f, p)?;
    ensure_exhaustive(f.n())?;
    let table = f.table();
    let size = 1usize << f.n();
    let mut price_sums: Vec<Rational> = Vec::with_capacity(size);
    price_sums.push(Rational::zero());
    let mut best = 0usize;
    let mut best_surplus = Rational::zero();
    for s in 1..size {
        let low = s.trailing_zeros() as usize;
        let sum = &price_sums[s & (s - 1)] + &p.0[low];
        let surplus = &table[s] - &sum;
        price_sums.push(sum);
        let better = match surplus.cmp(&best_surplus) {
            Ordering::Greater => true,
            Ordering::Equal => table[s] > table[best],
            Ordering::Less => false,
        };
        if better {
            best = s;
            best_surplus = surplus;
        }
    }
    Ok(DemandResult { set: Subset(best as u32), surplus: best_surplus })
}

/// The element outside `s` maximizing `f(x|s) − p(x)`; ties go to the larger
/// marginal value, then the smaller index. Returns (index, surplus, marginal).
fn best_addition(f: &SetFunction, p: &PriceVector, s: Subset) -> Option<(usize, Rational, Rational)> {
    let base = f.at(s);
    let mut best: Option<(usize, Rational, Rational)> = None;
    for x in (0..f.n()).filter(|&x| !s.contains(x)) {
        let marginal = f.at(s.with(x)) - &base;
        let surplus = &marginal - &p.0[x];
        let better = match &best {
            None => true,
            Some((_, bs, bm)) => match surplus.cmp(bs) {
                Ordering::Greater => true,
                Ordering::Equal => marginal > *bm,
                Ordering::Less => false,
            },
        };
        if better {
            best = Some((x, surplus, marginal));
        }
    }
    best
}

/// Greedy demand for gross-substitutes functions: keep adding the element of
/// largest marginal surplus while that surplus is positive. An element with
/// zero surplus but positive marginal value is still added, so that ties go
/// toward the larger `f`.
pub fn greedy_gs_demand(f: &SetFunction, p: &PriceVector) -> Result<DemandResult> {
    check_prices(f, p)?;
    let mut s = Subset::EMPTY;
    while let Some((x, surplus, marginal)) = best_addition(f, p, s) {
        let admit = surplus.is_positive() || (surplus.is_zero() && marginal.is_positive());
        if !admit {
            break;
        }
        s = s.with(x);
    }
    Ok(DemandResult { set: s, surplus: f.at(s) - p.cost(s) })
}

/// The full greedy chain `S_0 ⊂ S_1 ⊂ … ⊂ S_n`, ignoring the sign of the
/// marginal surplus.
pub(crate) fn greedy_chain(f: &SetFunction, p: &PriceVector) -> Vec<Subset> {
    let mut chain = Vec::with_capacity(f.n() + 1);
    let mut s = Subset::EMPTY;
    chain.push(s);
    while let Some((x, _, _)) = best_addition(f, p, s) {
        s = s.with(x);
        chain.push(s);
    }
    chain
}

/// Greedy demand for ultra functions: build the whole chain, then return the
/// prefix of largest surplus (ties: larger `f`, then the shorter prefix).
pub fn greedy_ultra_demand(f: &SetFunction, p: &PriceVector) -> Result<DemandResult> {
    check_prices(f, p)?;
    let mut best: Option<(Subset, Rational, Rational)> = None;
    for s in greedy_chain(f, p) {
        let value = f.at(s);
        let surplus = &value - p.cost(s);
        let better = match &best {
            None => true,
            Some((_, bs, bv)) => match surplus.cmp(bs) {
                Ordering::Greater => true,
                Ordering::Equal => value > *bv,
                Ordering::Less => false,
            },
        };
        if better {
            best = Some((s, surplus, value));
        }
    }
    let (set, surplus, _) = best.expect("chain always contains the empty set");
    Ok(DemandResult { set, surplus })
}

pub fn demand(f: &SetFunction, p: &PriceVector, engine: Engine) -> Result<DemandResult> {
    match engine {
        Engine::Brute => brute_force_demand(f, p),
        Engine::Gs => greedy_gs_demand(f, p),
        Engine::Ultra => greedy_ultra_demand(f, p),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BestResponse {
    pub set: Subset,
    /// `α f(set) − c(set)`.
    pub agent_utility: Rational,
}

pub(crate) fn validate_costs(n: usize, costs: &[Rational]) -> Result<()> {
    if costs.len() != n {
        return Err(Error::invalid(format!(
            "cost vector has {} entries for {n} actions",
            costs.len()
        )));
    }
    if let Some(i) = costs.iter().position(Signed::is_negative) {
        return Err(Error::invalid(format!("cost c[{i}] is negative")));
    }
    Ok(())
}

fn validate_alpha(alpha: &Rational) -> Result<()> {
    if alpha.is_negative() || *alpha > Rational::from_integer(1.into()) {
        return Err(Error::invalid(format!(
            "contract {} is outside [0, 1]",
            crate::rational::format(alpha)
        )));
    }
    Ok(())
}

pub(crate) fn cost_of(costs: &[Rational], s: Subset) -> Rational {
    s.iter().map(|i| &costs[i]).sum()
}

/// Response to a zero contract: among zero-cost actions, the smallest-bitmask
/// subset of maximum `f`. By monotonicity that is found by dropping, from the
/// highest index down, every action whose removal keeps `f` unchanged.
pub(crate) fn zero_contract_response(f: &SetFunction, costs: &[Rational]) -> Subset {
    let free = Subset::from_elements((0..f.n()).filter(|&i| costs[i].is_zero()));
    let top = f.at(free);
    let mut s = free;
    for i in (0..f.n()).rev().filter(|&i| free.contains(i)) {
        if f.at(s.without(i)) == top {
            s = s.without(i);
        }
    }
    s
}

/// The agent's best response to a linear contract `alpha`: a demand query at
/// prices `c/α`. At `α = 0` costly actions are unaffordable and the answer is
/// the canonical max-`f` set of free actions.
pub fn best_response(f: &SetFunction, costs: &[Rational], alpha: &Rational, engine: Engine) -> Result<BestResponse> {
    validate_costs(f.n(), costs)?;
    validate_alpha(alpha)?;
    let set = if alpha.is_zero() {
        zero_contract_response(f, costs)
    } else {
        let p = PriceVector::new(costs.iter().map(|c| c / alpha).collect())?;
        demand(f, &p, engine)?.set
    };
    Ok(BestResponse { set, agent_utility: alpha * f.at(set) - cost_of(costs, set) })
}

/// Best-response oracle for repeated queries against one instance.
///
/// With the brute-force engine the subset space is scanned once up front and
/// reduced to the sets not dominated in (higher `f`, lower cost); every
/// query then scans only that frontier.
pub struct BestResponder<'a> {
    f: &'a SetFunction,
    costs: &'a [Rational],
    engine: Engine,
    /// (set, f, cost) sorted by f descending; cost strictly decreasing.
    frontier: Vec<(Subset, Rational, Rational)>,
    at_zero: Subset,
}

impl<'a> BestResponder<'a> {
    pub fn new(f: &'a SetFunction, costs: &'a [Rational], engine: Engine) -> Result<Self> {
        validate_costs(f.n(), costs)?;
        let mut frontier = Vec::new();
        if engine == Engine::Brute {
            ensure_exhaustive(f.n())?;
            let table = f.table();
            let mut cost_table: Vec<Rational> = vec![Rational::zero(); 1 << f.n()];
            for s in 1..cost_table.len() {
                let low = s.trailing_zeros() as usize;
                cost_table[s] = &cost_table[s & (s - 1)] + &costs[low];
            }
            let mut order: Vec<usize> = (0..cost_table.len()).collect();
            order.sort_by(|&a, &b| {
                table[b]
                    .cmp(&table[a])
                    .then_with(|| cost_table[a].cmp(&cost_table[b]))
                    .then(a.cmp(&b))
            });
            let mut cheapest: Option<&Rational> = None;
            for s in order {
                if cheapest.is_none_or(|c| cost_table[s] < *c) {
                    cheapest = Some(&cost_table[s]);
                    frontier.push((Subset(s as u32), table[s].clone(), cost_table[s].clone()));
                }
            }
        }
        let at_zero = zero_contract_response(f, costs);
        Ok(BestResponder { f, costs, engine, frontier, at_zero })
    }

    pub fn function(&self) -> &SetFunction {
        self.f
    }

    pub fn costs(&self) -> &[Rational] {
        self.costs
    }

    pub fn respond(&self, alpha: &Rational) -> Result<Subset> {
        validate_alpha(alpha)?;
        if alpha.is_zero() {
            return Ok(self.at_zero);
        }
        match self.engine {
            Engine::Brute => {
                // Frontier order is f-descending, so the first maximizer wins ties.
                let mut best: Option<(Subset, Rational)> = None;
                for (s, fv, cv) in &self.frontier {
                    let u = alpha * fv - cv;
                    if best.as_ref().is_none_or(|(_, b)| u > *b) {
                        best = Some((*s, u));
                    }
                }
                Ok(best.map(|(s, _)| s).unwrap_or(Subset::EMPTY))
            }
            engine => {
                let p = PriceVector::new(self.costs.iter().map(|c| c / alpha).collect())?;
                Ok(demand(self.f, &p, engine)?.set)
            }
        }
    }

    pub fn cost(&self, s: Subset) -> Rational {
        cost_of(self.costs, s)
    }
}
