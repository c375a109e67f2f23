//! Many agents, each owning a disjoint set of actions.
//!
//! Agent `i` picks `S_i ⊆ A_i`; the profile is the union. Under shares `α`
//! agent `i` gets `α_i f(S) − c(S_i)` and the principal keeps
//! `(1 − Σα_i) f(S)`. The game has the exact potential
//! `φ(S) = f(S) − Σ_i c(S_i)/α_i`, so pure equilibria always exist.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use crate::demand::{cost_of, validate_costs};
use crate::error::{Error, Result};
use crate::ensure_exhaustive;
use crate::rational::{self, Extended, Rational};
use crate::setfn::SetFunction;
use crate::single_agent::{validate_probability, SingleAgentInstance};
use crate::subset::{all_subsets, Subset};
use crate::team_binary::BinaryTeamInstance;

/// A profile is the set of all chosen actions; agent `i`'s part is its
/// intersection with `A_i`.
pub type ActionProfile = Subset;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiTeamInstance {
    f: SetFunction,
    costs: Vec<Rational>,
    /// `A_i` as bitmasks over actions.
    parts: Vec<Subset>,
}

impl MultiTeamInstance {
    /// `partition[i]` lists the actions of agent `i`; every action must
    /// belong to exactly one agent.
    pub fn new(partition: Vec<Vec<usize>>, f: SetFunction, costs: Vec<Rational>) -> Result<Self> {
        let m = f.n();
        if partition.is_empty() {
            return Err(Error::field("partition", "needs at least one agent"));
        }
        let mut owner: Vec<Option<usize>> = vec![None; m];
        let mut parts = Vec::with_capacity(partition.len());
        for (i, actions) in partition.iter().enumerate() {
            for &a in actions {
                if a >= m {
                    return Err(Error::field("partition", format!("agent {i} lists action {a}, but there are {m} actions")));
                }
                if let Some(j) = owner[a] {
                    return Err(Error::field("partition", format!("action {a} belongs to agents {j} and {i}")));
                }
                owner[a] = Some(i);
            }
            parts.push(Subset::from_elements(actions.iter().copied()));
        }
        if let Some(a) = owner.iter().position(Option::is_none) {
            return Err(Error::field("partition", format!("action {a} belongs to no agent")));
        }
        validate_costs(m, &costs).map_err(|e| Error::field("costs", e.to_string()))?;
        validate_probability(&f)?;
        Ok(MultiTeamInstance { f, costs, parts })
    }

    /// One action per agent.
    pub fn from_binary(inst: &BinaryTeamInstance) -> Self {
        MultiTeamInstance {
            parts: (0..inst.n()).map(Subset::singleton).collect(),
            f: inst.function().clone(),
            costs: inst.costs().to_vec(),
        }
    }

    /// A single agent owning every action.
    pub fn from_single(inst: &SingleAgentInstance) -> Self {
        MultiTeamInstance { parts: vec![inst.function().ground()], f: inst.function().clone(), costs: inst.costs().to_vec() }
    }

    pub fn agents(&self) -> usize {
        self.parts.len()
    }

    pub fn actions(&self) -> usize {
        self.f.n()
    }

    pub fn function(&self) -> &SetFunction {
        &self.f
    }

    pub fn costs(&self) -> &[Rational] {
        &self.costs
    }

    pub fn part(&self, agent: usize) -> Subset {
        self.parts[agent]
    }

    pub fn partition_lists(&self) -> Vec<Vec<usize>> {
        self.parts.iter().map(|p| p.iter().collect()).collect()
    }

    fn check(&self, alpha: &VectorContract, s: ActionProfile) -> Result<()> {
        if alpha.len() != self.agents() {
            return Err(Error::invalid(format!("{} shares for {} agents", alpha.len(), self.agents())));
        }
        self.f.value(s).map(|_| ())
    }

    /// `α_i f(S_i ∪ rest) − c(S_i)`.
    fn agent_utility(&self, alpha: &Rational, own: Subset, rest: Subset) -> Rational {
        alpha * self.f.at(own.union(rest)) - cost_of(&self.costs, own)
    }

    /// Agent `i`'s best reply to the rest of `s`, ties to larger `f`, then
    /// smaller bitmask.
    fn best_reply(&self, alpha: &VectorContract, agent: usize, s: ActionProfile) -> (Subset, Rational) {
        let rest = s.difference(self.parts[agent]);
        let a = &alpha.0[agent];
        let mut best = Subset::EMPTY;
        let mut best_u = self.agent_utility(a, best, rest);
        for t in self.parts[agent].subsets().skip(1) {
            let u = self.agent_utility(a, t, rest);
            let better = match u.cmp(&best_u) {
                Ordering::Greater => true,
                Ordering::Equal => self.f.at(t.union(rest)) > self.f.at(best.union(rest)),
                Ordering::Less => false,
            };
            if better {
                best = t;
                best_u = u;
            }
        }
        (best, best_u)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorContract(Vec<Rational>);

impl VectorContract {
    pub fn new(alpha: Vec<Rational>) -> Result<Self> {
        if let Some(i) = alpha.iter().position(Signed::is_negative) {
            return Err(Error::invalid(format!("share alpha[{i}] is negative")));
        }
        Ok(VectorContract(alpha))
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
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileUtilities {
    pub agents: Vec<Rational>,
    pub principal: Rational,
}

pub fn profile_utilities(inst: &MultiTeamInstance, alpha: &VectorContract, s: ActionProfile) -> Result<ProfileUtilities> {
    inst.check(alpha, s)?;
    let value = inst.f.at(s);
    let agents = (0..inst.agents())
        .map(|i| &alpha.0[i] * &value - cost_of(&inst.costs, s.intersection(inst.parts[i])))
        .collect();
    let paid: Rational = alpha.0.iter().sum();
    Ok(ProfileUtilities { agents, principal: (Rational::one() - paid) * value })
}

/// `φ(S) = f(S) − Σ c(S_i)/α_i`, with `c/0 = ∞` for positive `c` and `0/0 = 0`.
pub fn potential(inst: &MultiTeamInstance, alpha: &VectorContract, s: ActionProfile) -> Result<Extended> {
    inst.check(alpha, s)?;
    Ok(potential_of(inst, alpha, s))
}

fn potential_of(inst: &MultiTeamInstance, alpha: &VectorContract, s: ActionProfile) -> Extended {
    let mut phi = inst.f.at(s);
    for (i, part) in inst.parts.iter().enumerate() {
        let c = cost_of(&inst.costs, s.intersection(*part));
        if c.is_zero() {
            continue;
        }
        if alpha.0[i].is_zero() {
            return Extended::NegInfinity;
        }
        phi -= c / &alpha.0[i];
    }
    Extended::Finite(phi)
}

/// Whether every agent's part of `s` is a best reply to the others.
pub fn is_nash_profile(inst: &MultiTeamInstance, alpha: &VectorContract, s: ActionProfile) -> Result<bool> {
    inst.check(alpha, s)?;
    Ok(nash(inst, alpha, s))
}

fn nash(inst: &MultiTeamInstance, alpha: &VectorContract, s: ActionProfile) -> bool {
    (0..inst.agents()).all(|i| {
        let own = s.intersection(inst.parts[i]);
        let current = inst.agent_utility(&alpha.0[i], own, s.difference(own));
        inst.best_reply(alpha, i, s).1 <= current
    })
}

/// Whether no agent gains by dropping to a subset of its own actions.
pub fn is_subset_stable(inst: &MultiTeamInstance, alpha: &VectorContract, s: ActionProfile) -> Result<bool> {
    inst.check(alpha, s)?;
    Ok((0..inst.agents()).all(|i| {
        let own = s.intersection(inst.parts[i]);
        let rest = s.difference(own);
        let current = inst.agent_utility(&alpha.0[i], own, rest);
        own.subsets().all(|t| inst.agent_utility(&alpha.0[i], t, rest) <= current)
    }))
}

/// Global potential maximizer (ties: larger `f`, then smaller bitmask).
pub fn find_equilibrium(inst: &MultiTeamInstance, alpha: &VectorContract) -> Result<ActionProfile> {
    ensure_exhaustive(inst.actions())?;
    inst.check(alpha, Subset::EMPTY)?;
    let mut best = Subset::EMPTY;
    let mut best_phi = potential_of(inst, alpha, best);
    for s in all_subsets(inst.actions()).skip(1) {
        let phi = potential_of(inst, alpha, s);
        let better = match phi.cmp(&best_phi) {
            Ordering::Greater => true,
            Ordering::Equal => inst.f.at(s) > inst.f.at(best),
            Ordering::Less => false,
        };
        if better {
            best = s;
            best_phi = phi;
        }
    }
    if !nash(inst, alpha, best) {
        return Err(Error::Consistency(format!("potential maximizer {best} is not an equilibrium")));
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicsStep {
    pub round: usize,
    pub agent: usize,
    pub profile: ActionProfile,
    pub potential: Extended,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dynamics {
    pub profile: ActionProfile,
    /// Every move, in order; empty when the start is already an equilibrium.
    pub trace: Vec<DynamicsStep>,
    /// False if `max_rounds` ran out before a fixed point.
    pub converged: bool,
}

/// Round-robin best-reply dynamics. An agent moves only when its best reply
/// strictly beats its current choice, so the potential rises with each move.
pub fn best_response_dynamics(
    inst: &MultiTeamInstance,
    alpha: &VectorContract,
    start: ActionProfile,
    max_rounds: usize,
) -> Result<Dynamics> {
    inst.check(alpha, start)?;
    let mut s = start;
    let mut trace = Vec::new();
    for round in 1..=max_rounds {
        let mut moved = false;
        for i in 0..inst.agents() {
            let own = s.intersection(inst.parts[i]);
            let current = inst.agent_utility(&alpha.0[i], own, s.difference(own));
            let (reply, u) = inst.best_reply(alpha, i, s);
            if u > current {
                s = s.difference(own).union(reply);
                trace.push(DynamicsStep { round, agent: i, profile: s, potential: potential_of(inst, alpha, s) });
                moved = true;
            }
        }
        if !moved {
            return Ok(Dynamics { profile: s, trace, converged: true });
        }
    }
    let converged = nash(inst, alpha, s);
    Ok(Dynamics { profile: s, trace, converged })
}

/// `2α + ε` componentwise.
pub fn doubling_contract(alpha: &VectorContract, epsilon: &Rational) -> Result<VectorContract> {
    if !epsilon.is_positive() {
        return Err(Error::invalid(format!("epsilon = {} must be positive", rational::format(epsilon))));
    }
    let two = Rational::from_integer(2.into());
    Ok(VectorContract(alpha.0.iter().map(|a| a * &two + epsilon).collect()))
}

/// Every pure equilibrium, by `f` descending then bitmask.
pub fn enumerate_equilibria(inst: &MultiTeamInstance, alpha: &VectorContract) -> Result<Vec<ActionProfile>> {
    ensure_exhaustive(inst.actions())?;
    inst.check(alpha, Subset::EMPTY)?;
    let mut out: Vec<ActionProfile> = all_subsets(inst.actions()).filter(|&s| nash(inst, alpha, s)).collect();
    out.sort_by(|&a, &b| inst.f.at(b).cmp(&inst.f.at(a)).then(a.cmp(&b)));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquilibriumRow {
    pub profile: ActionProfile,
    pub f: Rational,
    pub potential: Extended,
    pub utilities: ProfileUtilities,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquilibriumReport {
    pub rows: Vec<EquilibriumRow>,
    /// The potential maximizer.
    pub selected: ActionProfile,
    pub best_principal: Rational,
    pub worst_principal: Rational,
}

pub fn equilibrium_report(inst: &MultiTeamInstance, alpha: &VectorContract) -> Result<EquilibriumReport> {
    let selected = find_equilibrium(inst, alpha)?;
    let rows = enumerate_equilibria(inst, alpha)?
        .into_iter()
        .map(|s| {
            Ok(EquilibriumRow {
                profile: s,
                f: inst.f.at(s),
                potential: potential_of(inst, alpha, s),
                utilities: profile_utilities(inst, alpha, s)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let principal = rows.iter().map(|r| &r.utilities.principal);
    let best_principal = principal.clone().max().cloned().expect("equilibria exist");
    let worst_principal = principal.min().cloned().expect("equilibria exist");
    Ok(EquilibriumReport { rows, selected, best_principal, worst_principal })
}

/// CSV rows `profile_bitmask,f,potential,principal_utility,agent_1,…`.
pub fn equilibrium_csv(report: &EquilibriumReport, agents: usize) -> String {
    let mut out = String::from("profile_bitmask,f,potential,principal_utility");
    for i in 1..=agents {
        out.push_str(&format!(",agent_{i}"));
    }
    out.push('\n');
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{}",
            row.profile.0,
            rational::format(&row.f),
            row.potential,
            rational::format(&row.utilities.principal)
        ));
        for u in &row.utilities.agents {
            out.push_str(&format!(",{}", rational::format(u)));
        }
        out.push('\n');
    }
    out
}

/// CSV rows `round,agent,profile_bitmask,potential`, starting with the
/// initial profile at round 0.
pub fn dynamics_csv(inst: &MultiTeamInstance, alpha: &VectorContract, start: ActionProfile, run: &Dynamics) -> String {
    let mut out = String::from("round,agent,profile_bitmask,potential\n");
    out.push_str(&format!("0,,{},{}\n", start.0, potential_of(inst, alpha, start)));
    for step in &run.trace {
        out.push_str(&format!("{},{},{},{}\n", step.round, step.agent + 1, step.profile.0, step.potential));
    }
    out
}
