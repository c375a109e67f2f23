//! Instance files, the bundled worked examples, and seeded generators.
//!
//! Files are JSON with every number written as a rational string, so nothing
//! passes through binary floating point. Element and action indices in files
//! are 0-based, matching bit positions in subset bitmasks.
//!
//! ```json
//! {
//!   "model": "single_agent",
//!   "n": 2,
//!   "function": { "kind": "additive", "weights": ["1/2", "0.25"] },
//!   "costs": ["1/10", "0"]
//! }
//! ```

use std::path::Path;
use std::str::FromStr;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, int, ratio, Rational};
use crate::setfn::{Repr, SetFunction, MAX_COVERAGE_ITEMS};
use crate::single_agent::SingleAgentInstance;
use crate::subset::Subset;
use crate::team_binary::BinaryTeamInstance;
use crate::team_multi::MultiTeamInstance;
use crate::MAX_ELEMENTS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    SingleAgent,
    BinaryTeam,
    MultiTeam,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::SingleAgent => "single_agent",
            Model::BinaryTeam => "binary_team",
            Model::MultiTeam => "multi_team",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    SingleAgent(SingleAgentInstance),
    BinaryTeam(BinaryTeamInstance),
    MultiTeam(MultiTeamInstance),
}

impl Instance {
    pub fn model(&self) -> Model {
        match self {
            Instance::SingleAgent(_) => Model::SingleAgent,
            Instance::BinaryTeam(_) => Model::BinaryTeam,
            Instance::MultiTeam(_) => Model::MultiTeam,
        }
    }

    pub fn function(&self) -> &SetFunction {
        match self {
            Instance::SingleAgent(i) => i.function(),
            Instance::BinaryTeam(i) => i.function(),
            Instance::MultiTeam(i) => i.function(),
        }
    }

    pub fn costs(&self) -> &[Rational] {
        match self {
            Instance::SingleAgent(i) => i.costs(),
            Instance::BinaryTeam(i) => i.costs(),
            Instance::MultiTeam(i) => i.costs(),
        }
    }

    pub fn as_single_agent(&self) -> Option<&SingleAgentInstance> {
        match self {
            Instance::SingleAgent(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_binary_team(&self) -> Option<&BinaryTeamInstance> {
        match self {
            Instance::BinaryTeam(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_multi_team(&self) -> Option<&MultiTeamInstance> {
        match self {
            Instance::MultiTeam(i) => Some(i),
            _ => None,
        }
    }
}

// ---- wire format ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    agents: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<Vec<Vec<usize>>>,
    function: FunctionDoc,
    costs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FunctionDoc {
    Explicit { n: usize, table: Vec<String> },
    Additive { weights: Vec<String> },
    Coverage { item_weights: Vec<String>, covers: Vec<Vec<usize>> },
    Xos { n: usize, clauses: Vec<Vec<String>> },
    SupermodularSquare { weights: Vec<String> },
}

fn parse_list(field: &str, values: &[String]) -> Result<Vec<Rational>> {
    values
        .iter()
        .enumerate()
        .map(|(i, s)| rational::parse(s).map_err(|e| Error::field(format!("{field}[{i}]"), e.to_string())))
        .collect()
}

fn format_list(values: &[Rational]) -> Vec<String> {
    values.iter().map(rational::format).collect()
}

impl FunctionDoc {
    fn build(&self) -> Result<SetFunction> {
        let built = match self {
            FunctionDoc::Explicit { n, table } => {
                if *n > MAX_ELEMENTS {
                    return Err(Error::field("function.n", format!("{n} exceeds {MAX_ELEMENTS}")));
                }
                SetFunction::explicit(*n, parse_list("function.table", table)?)
            }
            FunctionDoc::Additive { weights } => SetFunction::additive(parse_list("function.weights", weights)?),
            FunctionDoc::Coverage { item_weights, covers } => {
                SetFunction::coverage(parse_list("function.item_weights", item_weights)?, covers.clone())
            }
            FunctionDoc::Xos { n, clauses } => {
                let parsed = clauses
                    .iter()
                    .enumerate()
                    .map(|(k, c)| parse_list(&format!("function.clauses[{k}]"), c))
                    .collect::<Result<Vec<_>>>()?;
                SetFunction::xos(*n, parsed)
            }
            FunctionDoc::SupermodularSquare { weights } => {
                SetFunction::supermodular_square(parse_list("function.weights", weights)?)
            }
        };
        built.map_err(|e| match e {
            Error::InvalidField { .. } => e,
            other => Error::field("function", other.to_string()),
        })
    }

    fn from_function(f: &SetFunction) -> Self {
        match f.repr() {
            Repr::Explicit { table } => FunctionDoc::Explicit { n: f.n(), table: format_list(table) },
            Repr::Additive { weights } => FunctionDoc::Additive { weights: format_list(weights) },
            Repr::Coverage { item_weights, covers } => FunctionDoc::Coverage {
                item_weights: format_list(item_weights),
                covers: covers
                    .iter()
                    .map(|&m| (0..MAX_COVERAGE_ITEMS).filter(|&u| m >> u & 1 == 1).collect())
                    .collect(),
            },
            Repr::Xos { clauses } => {
                FunctionDoc::Xos { n: f.n(), clauses: clauses.iter().map(|c| format_list(c)).collect() }
            }
            Repr::SupermodularSquare { weights } => FunctionDoc::SupermodularSquare { weights: format_list(weights) },
        }
    }
}

fn reject(field: &str, model: Model, present: bool) -> Result<()> {
    if present {
        return Err(Error::field(field, format!("not used by the {} model", model.name())));
    }
    Ok(())
}

/// Parses an instance document.
pub fn from_json(text: &str) -> Result<Instance> {
    let doc: Document = serde_json::from_str(text).map_err(|e| Error::field("document", e.to_string()))?;
    let f = doc.function.build()?;
    let costs = parse_list("costs", &doc.costs)?;
    let attach = |e: Error| match e {
        Error::InvalidField { .. } => e,
        other => Error::field("costs", other.to_string()),
    };
    match doc.model {
        Model::SingleAgent | Model::BinaryTeam => {
            reject("agents", doc.model, doc.agents.is_some())?;
            reject("partition", doc.model, doc.partition.is_some())?;
            match doc.n {
                None => return Err(Error::field("n", "missing")),
                Some(n) if n != f.n() => {
                    return Err(Error::field("n", format!("{n} does not match the function's {} elements", f.n())))
                }
                _ => {}
            }
            Ok(if doc.model == Model::SingleAgent {
                Instance::SingleAgent(SingleAgentInstance::new(f, costs).map_err(attach)?)
            } else {
                Instance::BinaryTeam(BinaryTeamInstance::new(f, costs).map_err(attach)?)
            })
        }
        Model::MultiTeam => {
            reject("n", doc.model, doc.n.is_some())?;
            let partition = doc.partition.ok_or_else(|| Error::field("partition", "missing"))?;
            if let Some(a) = doc.agents {
                if a != partition.len() {
                    return Err(Error::field("agents", format!("{a} does not match the partition's {} parts", partition.len())));
                }
            }
            Ok(Instance::MultiTeam(MultiTeamInstance::new(partition, f, costs)?))
        }
    }
}

/// Canonical pretty JSON, newline-terminated. Rationals are written in lowest
/// terms, so `to_json(from_json(x))` is a fixed point after one round.
pub fn to_json(inst: &Instance) -> String {
    let (n, agents, partition) = match inst {
        Instance::SingleAgent(i) => (Some(i.n()), None, None),
        Instance::BinaryTeam(i) => (Some(i.n()), None, None),
        Instance::MultiTeam(i) => (None, Some(i.agents()), Some(i.partition_lists())),
    };
    let doc = Document {
        model: inst.model(),
        n,
        agents,
        partition,
        function: FunctionDoc::from_function(inst.function()),
        costs: format_list(inst.costs()),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("instance documents always serialize");
    out.push('\n');
    out
}

pub fn load(path: impl AsRef<Path>) -> Result<Instance> {
    from_json(&std::fs::read_to_string(path)?)
}

pub fn save(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json(inst))?;
    Ok(())
}

// ---- worked examples ----

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleName {
    /// Three actions, additive reward.
    Ex3_1,
    /// Three actions, gross-substitutes reward.
    Ex3_2,
    /// Two agents with a submodular team reward.
    Ex4_1,
}

impl FromStr for ExampleName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex3_1" => Ok(ExampleName::Ex3_1),
            "ex3_2" => Ok(ExampleName::Ex3_2),
            "ex4_1" => Ok(ExampleName::Ex4_1),
            other => Err(Error::UnknownExample(other.to_string())),
        }
    }
}

pub fn example(name: ExampleName) -> Instance {
    let build = || -> Result<Instance> {
        Ok(match name {
            ExampleName::Ex3_1 => Instance::SingleAgent(SingleAgentInstance::new(
                SetFunction::additive(vec![ratio(3, 10), ratio(1, 5), ratio(1, 2)])?,
                vec![ratio(1, 10), ratio(1, 10), ratio(2, 5)],
            )?),
            ExampleName::Ex3_2 => Instance::SingleAgent(SingleAgentInstance::new(
                SetFunction::explicit(
                    3,
                    vec![
                        int(0),
                        ratio(1, 4),
                        ratio(1, 2),
                        ratio(11, 20),
                        ratio(1, 4),
                        ratio(1, 2),
                        ratio(3, 4),
                        ratio(4, 5),
                    ],
                )?,
                vec![ratio(1, 80), ratio(3, 80), ratio(1, 8)],
            )?),
            ExampleName::Ex4_1 => Instance::BinaryTeam(BinaryTeamInstance::new(
                SetFunction::explicit(2, vec![int(0), ratio(1, 2), ratio(1, 2), ratio(3, 4)])?,
                vec![ratio(1, 4), ratio(1, 4)],
            )?),
        })
    };
    build().expect("bundled examples are valid")
}

pub fn named_example(name: &str) -> Result<Instance> {
    Ok(example(name.parse()?))
}

// ---- generators ----

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Additive,
    Coverage,
    Xos,
    SupermodularSquare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    Additive,
    Coverage,
    Xos,
    SupermodularSquare,
    BinaryTeam,
    MultiTeam,
}

impl FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "additive" => GenKind::Additive,
            "coverage" => GenKind::Coverage,
            "xos" => GenKind::Xos,
            "supermodular_square" => GenKind::SupermodularSquare,
            "binary_team" => GenKind::BinaryTeam,
            "multi_team" => GenKind::MultiTeam,
            other => return Err(Error::invalid(format!("unknown generator kind {other:?}"))),
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<GenKind>()? {
            GenKind::Additive => Ok(Family::Additive),
            GenKind::Coverage => Ok(Family::Coverage),
            GenKind::Xos => Ok(Family::Xos),
            GenKind::SupermodularSquare => Ok(Family::SupermodularSquare),
            _ => Err(Error::invalid(format!("{s:?} is not a reward-function family"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    /// Coverage universe size; defaults to `2n`, capped at 64.
    pub items: Option<usize>,
    /// Probability that an element covers a given item.
    pub density: f64,
    /// Number of XOS clauses.
    pub clauses: usize,
    /// Agents in a multi-team instance; defaults to `ceil(n / 2)`.
    pub agents: Option<usize>,
    /// Reward family for the team models.
    pub base: Family,
    /// Costs are drawn from `{k/100 : 1 <= k <= 100 · cost_scale · m_i}`.
    pub cost_scale: Rational,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { items: None, density: 0.3, clauses: 3, agents: None, base: Family::Coverage, cost_scale: Rational::one() }
    }
}

/// Deterministic random instance. Rewards are scaled so that `f` of the
/// full set is 1.
///
/// Each cost `c_i` is `k/100` with `k` uniform on `1..=⌊100 · cost_scale · m_i⌋`
/// (zero when that range is empty), where `m_i` is the larger of `f({i})`
/// and the marginal of `i` on everything else.
pub fn generate(kind: GenKind, n: usize, seed: u64, params: &GenParams) -> Result<Instance> {
    if n == 0 || n > MAX_ELEMENTS {
        return Err(Error::invalid(format!("n = {n} must lie in 1..={MAX_ELEMENTS}")));
    }
    if !(0.0..=1.0).contains(&params.density) {
        return Err(Error::invalid("density must lie in [0, 1]"));
    }
    if params.clauses == 0 {
        return Err(Error::invalid("clauses must be positive"));
    }
    if params.cost_scale < Rational::zero() {
        return Err(Error::invalid("cost_scale must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = match kind {
        GenKind::Additive => Family::Additive,
        GenKind::Coverage => Family::Coverage,
        GenKind::Xos => Family::Xos,
        GenKind::SupermodularSquare => Family::SupermodularSquare,
        GenKind::BinaryTeam | GenKind::MultiTeam => params.base,
    };
    let f = random_function(family, n, params, &mut rng)?;
    let costs = random_costs(&f, &params.cost_scale, &mut rng);
    Ok(match kind {
        GenKind::BinaryTeam => Instance::BinaryTeam(BinaryTeamInstance::new(f, costs)?),
        GenKind::MultiTeam => {
            let agents = params.agents.unwrap_or(n.div_ceil(2));
            if agents == 0 || agents > n {
                return Err(Error::invalid(format!("agents = {agents} must lie in 1..={n}")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                order.swap(i, rng.gen_range(0..=i));
            }
            let mut partition = vec![Vec::new(); agents];
            for (pos, &action) in order.iter().enumerate() {
                partition[pos % agents].push(action);
            }
            for part in &mut partition {
                part.sort_unstable();
            }
            Instance::MultiTeam(MultiTeamInstance::new(partition, f, costs)?)
        }
        _ => Instance::SingleAgent(SingleAgentInstance::new(f, costs)?),
    })
}

fn random_function(family: Family, n: usize, params: &GenParams, rng: &mut ChaCha8Rng) -> Result<SetFunction> {
    match family {
        Family::Additive => {
            let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=100)).collect();
            let total: i64 = raw.iter().sum();
            SetFunction::additive(raw.iter().map(|&w| ratio(w, total)).collect())
        }
        Family::Coverage => {
            let items = params.items.unwrap_or(2 * n).min(MAX_COVERAGE_ITEMS);
            if items == 0 {
                return Err(Error::invalid("coverage needs at least one item"));
            }
            let mut covers: Vec<Vec<usize>> =
                (0..n).map(|_| (0..items).filter(|_| rng.gen_bool(params.density)).collect()).collect();
            for u in 0..items {
                if !covers.iter().any(|c| c.contains(&u)) {
                    let j = rng.gen_range(0..n);
                    covers[j].push(u);
                    covers[j].sort_unstable();
                }
            }
            let raw: Vec<i64> = (0..items).map(|_| rng.gen_range(1..=10)).collect();
            let total: i64 = raw.iter().sum();
            SetFunction::coverage(raw.iter().map(|&w| ratio(w, total)).collect(), covers)
        }
        Family::Xos => {
            let mut raw: Vec<Vec<i64>> =
                (0..params.clauses).map(|_| (0..n).map(|_| rng.gen_range(0..=10)).collect()).collect();
            if raw.iter().all(|c| c.iter().all(|&w| w == 0)) {
                raw[0][0] = 1;
            }
            let top = raw.iter().map(|c| c.iter().sum::<i64>()).max().unwrap_or(1);
            SetFunction::xos(n, raw.iter().map(|c| c.iter().map(|&w| ratio(w, top)).collect()).collect())
        }
        Family::SupermodularSquare => {
            SetFunction::supermodular_square((0..n).map(|_| int(rng.gen_range(1..=10))).collect())
        }
    }
}

fn random_costs(f: &SetFunction, scale: &Rational, rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let ground = f.ground();
    let top = f.at(ground);
    (0..f.n())
        .map(|i| {
            let single = f.at(Subset::singleton(i));
            let last = &top - f.at(ground.without(i));
            let m = single.max(last);
            let bound = (m * scale * int(100)).floor().to_integer();
            let bound: i64 = bound.try_into().unwrap_or(i64::MAX);
            if bound <= 0 {
                Rational::zero()
            } else {
                ratio(rng.gen_range(1..=bound), 100)
            }
        })
        .collect()
}
