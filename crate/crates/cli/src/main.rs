//! `contract-kit` command-line front end.
//!
//! Every command prints one JSON report on stdout. Exit status is 0 on
//! success, 1 when `check-class` answers "no", and 2 for usage errors, bad
//! input, or a command that does not apply to the instance's model.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use contract_kit::demand::{demand, Engine, PriceVector};
use contract_kit::instances::{self, Family, GenKind, GenParams, Instance};
use contract_kit::rational::{self, to_decimal, Rational};
use contract_kit::setfn::{check_class, well_layered_probe, Repr, SetClass, WellLayered};
use contract_kit::single_agent::{self, ContractResult, SingleAgentInstance};
use contract_kit::team_binary::{self, BinaryTeamInstance, MinPayment};
use contract_kit::team_multi::{self, MultiTeamInstance, VectorContract};
use contract_kit::{exhaustive_limit, Subset};

#[derive(Parser)]
#[command(name = "contract-kit", version, about = "Optimal and approximate linear contracts")]
struct Cli {
    /// Add a 20-digit decimal rendering next to every exact value.
    #[arg(long, global = true)]
    decimals: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide membership of the reward function in a class (exit 0 yes, 1 no).
    CheckClass {
        #[arg(long)]
        instance: String,
        /// additive, submodular, supermodular, subadditive, gs, xos or well_layered.
        #[arg(long)]
        class: String,
        /// Random price vectors tried by the well_layered probe.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Demand query at the given prices.
    Demand {
        #[arg(long)]
        instance: String,
        /// Comma-separated prices, as p/q or decimals.
        #[arg(long)]
        prices: String,
        #[arg(long, default_value = "brute")]
        engine: String,
    },
    /// Agent's upper envelope and critical values (single agent).
    Envelope {
        #[arg(long)]
        instance: String,
        #[arg(long, default_value = "0")]
        from: String,
        #[arg(long, default_value = "1")]
        to: String,
        #[arg(long, default_value = "brute")]
        engine: String,
        /// Write the segments as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact optimal contract (single agent or binary-action team).
    Optimal {
        #[arg(long)]
        instance: String,
        #[arg(long, default_value = "brute")]
        engine: String,
    },
    /// (1 − eps)-approximate contract (single agent, or additive team).
    Fptas {
        #[arg(long)]
        instance: String,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value = "brute")]
        engine: String,
    },
    /// Constant-factor team contract for a submodular binary-action team.
    TeamApprox {
        #[arg(long)]
        instance: String,
    },
    /// Pure equilibria under a contract vector, or a best-reply dynamics run.
    Equilibria {
        #[arg(long)]
        instance: String,
        /// Comma-separated shares, one per agent.
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        dynamics: bool,
        /// Starting profile for --dynamics, as a bitmask over actions.
        #[arg(long, default_value_t = 0)]
        start: u32,
        #[arg(long, default_value_t = 1000)]
        max_rounds: usize,
        /// Write the equilibrium list (or the dynamics trace) as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded random instance.
    Gen {
        /// additive, coverage, xos, supermodular_square, binary_team or multi_team.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        items: Option<usize>,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long, default_value_t = 3)]
        clauses: usize,
        #[arg(long)]
        agents: Option<usize>,
        /// Reward family for team kinds.
        #[arg(long, default_value = "coverage")]
        base: String,
        #[arg(long, default_value = "1")]
        cost_scale: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckClass { .. } => "check-class",
            Command::Demand { .. } => "demand",
            Command::Envelope { .. } => "envelope",
            Command::Optimal { .. } => "optimal",
            Command::Fptas { .. } => "fptas",
            Command::TeamApprox { .. } => "team-approx",
            Command::Equilibria { .. } => "equilibria",
            Command::Gen { .. } => "gen",
        }
    }

    fn instance(&self) -> Option<&str> {
        match self {
            Command::CheckClass { instance, .. }
            | Command::Demand { instance, .. }
            | Command::Envelope { instance, .. }
            | Command::Optimal { instance, .. }
            | Command::Fptas { instance, .. }
            | Command::TeamApprox { instance }
            | Command::Equilibria { instance, .. } => Some(instance),
            Command::Gen { .. } => None,
        }
    }
}

/// Builds report objects, adding `<key>_decimal` fields when asked.
struct Reporter {
    decimals: bool,
}

impl Reporter {
    fn put(&self, map: &mut Map<String, Value>, key: &str, r: &Rational) {
        map.insert(key.into(), json!(rational::format(r)));
        if self.decimals {
            map.insert(format!("{key}_decimal"), json!(to_decimal(r, 20)));
        }
    }

    fn put_list(&self, map: &mut Map<String, Value>, key: &str, rs: &[Rational]) {
        map.insert(key.into(), json!(rs.iter().map(rational::format).collect::<Vec<_>>()));
        if self.decimals {
            map.insert(format!("{key}_decimal"), json!(rs.iter().map(|r| to_decimal(r, 20)).collect::<Vec<_>>()));
        }
    }
}

fn put_set(map: &mut Map<String, Value>, key: &str, s: Subset) {
    map.insert(key.into(), json!(s.iter().map(|i| i + 1).collect::<Vec<_>>()));
    map.insert(format!("{key}_bitmask"), json!(s.0));
}

fn digest(inst: &Instance) -> String {
    hex::encode(Sha256::digest(instances::to_json(inst).as_bytes()))
}

/// A path, or the name of a bundled example such as `ex3_1`.
fn load(spec: &str) -> Result<Instance> {
    let path = Path::new(spec);
    if path.exists() {
        return instances::load(path).with_context(|| format!("loading {spec}"));
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    instances::named_example(stem).map_err(|_| anyhow!("{spec}: no such file or bundled example"))
}

fn parse_rational(what: &str, s: &str) -> Result<Rational> {
    rational::parse(s.trim()).with_context(|| format!("parsing {what}"))
}

fn parse_list(what: &str, s: &str) -> Result<Vec<Rational>> {
    s.split(',').map(|x| parse_rational(what, x)).collect()
}

fn engine(s: &str) -> Result<Engine> {
    s.parse().map_err(|e| anyhow!("{e}"))
}

fn need_single<'a>(inst: &'a Instance, command: &str) -> Result<&'a SingleAgentInstance> {
    inst.as_single_agent()
        .ok_or_else(|| anyhow!("`{command}` needs a single_agent instance, got {}", inst.model().name()))
}

fn need_team<'a>(inst: &'a Instance, command: &str) -> Result<&'a BinaryTeamInstance> {
    inst.as_binary_team()
        .ok_or_else(|| anyhow!("`{command}` needs a binary_team instance, got {}", inst.model().name()))
}

fn contract_report(rep: &Reporter, inst: &SingleAgentInstance, r: &ContractResult) -> Map<String, Value> {
    let mut m = Map::new();
    rep.put(&mut m, "alpha", &r.alpha);
    put_set(&mut m, "set", r.set);
    rep.put(&mut m, "f", &inst.function().value(r.set).expect("reported sets are in range"));
    rep.put(&mut m, "cost", &inst.cost(r.set));
    rep.put(&mut m, "principal_utility", &r.principal_utility);
    rep.put(&mut m, "agent_utility", &r.agent_utility);
    m
}

fn team_report(rep: &Reporter, inst: &BinaryTeamInstance, set: Subset, profit: &Rational) -> Result<Map<String, Value>> {
    let mut m = Map::new();
    put_set(&mut m, "set", set);
    match team_binary::min_payment_contract(inst, set)? {
        MinPayment::Contract(c) => rep.put_list(&mut m, "alpha", &c.alpha),
        MinPayment::Unincentivizable { agent } => bail!("agent {} cannot be incentivized", agent + 1),
    }
    rep.put(&mut m, "f", &inst.function().value(set)?);
    rep.put(&mut m, "profit", profit);
    Ok(m)
}

fn class_of(name: &str, inst: &Instance) -> Result<SetClass> {
    Ok(match name {
        "additive" => SetClass::Additive,
        "submodular" => SetClass::Submodular,
        "supermodular" => SetClass::Supermodular,
        "subadditive" => SetClass::Subadditive,
        "gs" => SetClass::GrossSubstitutes,
        "xos" => match inst.function().repr() {
            Repr::Xos { clauses } => SetClass::XosCertificate(clauses.clone()),
            Repr::Additive { weights } => SetClass::XosCertificate(vec![weights.clone()]),
            _ => bail!("xos membership is checked against clauses; this function has none"),
        },
        other => bail!("unknown class {other:?}"),
    })
}

/// Runs a command; `Ok((report, code))`.
fn run(cli: Cli) -> Result<(Value, u8)> {
    let rep = Reporter { decimals: cli.decimals };
    let mut out = Map::new();
    let mut code = 0u8;
    let command = cli.command.name();
    let inst = cli.command.instance().map(load).transpose()?;
    out.insert("command".into(), json!(command));
    if let Some(inst) = &inst {
        out.insert("instance_digest".into(), json!(digest(inst)));
        out.insert("model".into(), json!(inst.model().name()));
    }
    let mut result = Map::new();

    match cli.command {
        Command::CheckClass { class, trials, seed, .. } => {
            let inst = inst.as_ref().expect("loaded");
            let verdict = if class == "well_layered" {
                match well_layered_probe(inst.function(), trials, seed)? {
                    WellLayered::Consistent => true,
                    WellLayered::Counterexample(p) => {
                        rep.put_list(&mut result, "counterexample_prices", p.as_slice());
                        false
                    }
                }
            } else {
                check_class(inst.function(), &class_of(&class, inst)?)?
            };
            result.insert("class".into(), json!(class));
            result.insert("member".into(), json!(verdict));
            if class == "well_layered" {
                result.insert("note".into(), json!(format!("probed {trials} random price vectors")));
            }
            code = if verdict { 0 } else { 1 };
        }
        Command::Demand { prices, engine: e, .. } => {
            let inst = inst.as_ref().expect("loaded");
            let p = PriceVector::new(parse_list("prices", &prices)?)?;
            if p.len() != inst.function().n() {
                bail!("{} prices for {} elements", p.len(), inst.function().n());
            }
            let d = demand(inst.function(), &p, engine(&e)?)?;
            put_set(&mut result, "set", d.set);
            rep.put(&mut result, "value", &inst.function().value(d.set)?);
            rep.put(&mut result, "surplus", &d.surplus);
        }
        Command::Envelope { from, to, engine: e, out: csv, .. } => {
            let single = need_single(inst.as_ref().expect("loaded"), "envelope")?;
            let (lo, hi) = (parse_rational("--from", &from)?, parse_rational("--to", &to)?);
            let env = single_agent::envelope(single, &lo, &hi, engine(&e)?)?;
            let segments: Vec<Value> = env
                .segments
                .iter()
                .map(|s| {
                    let mut m = Map::new();
                    put_set(&mut m, "set", s.set);
                    rep.put(&mut m, "alpha_lo", &s.alpha_lo);
                    rep.put(&mut m, "alpha_hi", &s.alpha_hi);
                    rep.put(&mut m, "f", &single.function().value(s.set).expect("in range"));
                    rep.put(&mut m, "cost", &single.cost(s.set));
                    Value::Object(m)
                })
                .collect();
            let critical: Vec<Value> = env
                .critical_values
                .iter()
                .map(|c| {
                    let mut m = Map::new();
                    rep.put(&mut m, "alpha", &c.alpha);
                    put_set(&mut m, "before", c.before);
                    put_set(&mut m, "after", c.after);
                    Value::Object(m)
                })
                .collect();
            result.insert("critical_value_count".into(), json!(critical.len()));
            result.insert("segments".into(), Value::Array(segments));
            result.insert("critical_values".into(), Value::Array(critical));
            if let Some(path) = csv {
                std::fs::write(&path, single_agent::envelope_csv(single, &env))
                    .with_context(|| format!("writing {}", path.display()))?;
                result.insert("csv".into(), json!(path.display().to_string()));
            }
        }
        Command::Optimal { engine: e, .. } => match inst.as_ref().expect("loaded") {
            Instance::SingleAgent(single) => {
                let r = single_agent::optimal_contract(single, engine(&e)?)?;
                result = contract_report(&rep, single, &r);
            }
            Instance::BinaryTeam(team) => {
                let opt = team_binary::brute_force_optimal_team(team)?;
                result = team_report(&rep, team, opt.set, &opt.profit)?;
            }
            Instance::MultiTeam(_) => bail!("`optimal` supports single_agent and binary_team instances, got multi_team"),
        },
        Command::Fptas { eps, engine: e, .. } => {
            let eps = parse_rational("--eps", &eps)?;
            rep.put(&mut result, "epsilon", &eps);
            match inst.as_ref().expect("loaded") {
                Instance::SingleAgent(single) => {
                    let r = single_agent::fptas_contract(single, &eps, engine(&e)?)?;
                    result.extend(contract_report(&rep, single, &r));
                }
                Instance::BinaryTeam(team) => {
                    if !matches!(team.function().repr(), Repr::Additive { .. }) {
                        bail!("`fptas` on a binary_team instance needs an additive reward function");
                    }
                    let r = team_binary::fptas_additive_team(team, &eps)?;
                    result.extend(team_report(&rep, team, r.set, &r.profit)?);
                }
                Instance::MultiTeam(_) => bail!("`fptas` supports single_agent and binary_team instances, got multi_team"),
            }
        }
        Command::TeamApprox { .. } => {
            let team = need_team(inst.as_ref().expect("loaded"), "team-approx")?;
            let r = team_binary::constant_approx_submodular_team(team)?;
            result = team_report(&rep, team, r.set, &r.profit)?;
            rep.put_list(&mut result, "guesses", &r.guesses);
            if team.n() <= exhaustive_limit() {
                let opt = team_binary::brute_force_optimal_team(team)?;
                rep.put(&mut result, "optimum", &opt.profit);
                if opt.profit > Rational::from_integer(0.into()) {
                    rep.put(&mut result, "ratio", &(&r.profit / &opt.profit));
                }
            }
        }
        Command::Equilibria { alpha, dynamics, start, max_rounds, out: csv, .. } => {
            let multi = match inst.as_ref().expect("loaded") {
                Instance::MultiTeam(m) => m.clone(),
                Instance::BinaryTeam(t) => MultiTeamInstance::from_binary(t),
                Instance::SingleAgent(_) => bail!("`equilibria` needs a multi_team or binary_team instance, got single_agent"),
            };
            let alpha = VectorContract::new(parse_list("--alpha", &alpha)?)?;
            if alpha.len() != multi.agents() {
                bail!("{} shares for {} agents", alpha.len(), multi.agents());
            }
            rep.put_list(&mut result, "alpha", alpha.as_slice());
            if dynamics {
                let start = Subset(start);
                let run = team_multi::best_response_dynamics(&multi, &alpha, start, max_rounds)?;
                put_set(&mut result, "start", start);
                put_set(&mut result, "profile", run.profile);
                result.insert("converged".into(), json!(run.converged));
                result.insert("moves".into(), json!(run.trace.len()));
                let trace = team_multi::dynamics_csv(&multi, &alpha, start, &run);
                match csv {
                    Some(path) => {
                        std::fs::write(&path, &trace).with_context(|| format!("writing {}", path.display()))?;
                        result.insert("csv".into(), json!(path.display().to_string()));
                    }
                    None => {
                        result.insert("trace_csv".into(), json!(trace));
                    }
                }
            } else {
                let report = team_multi::equilibrium_report(&multi, &alpha)?;
                let rows: Vec<Value> = report
                    .rows
                    .iter()
                    .map(|r| {
                        let mut m = Map::new();
                        put_set(&mut m, "profile", r.profile);
                        rep.put(&mut m, "f", &r.f);
                        m.insert("potential".into(), json!(r.potential.to_string()));
                        rep.put(&mut m, "principal_utility", &r.utilities.principal);
                        rep.put_list(&mut m, "agent_utilities", &r.utilities.agents);
                        Value::Object(m)
                    })
                    .collect();
                put_set(&mut result, "selected", report.selected);
                rep.put(&mut result, "best_principal_utility", &report.best_principal);
                rep.put(&mut result, "worst_principal_utility", &report.worst_principal);
                result.insert("equilibria".into(), Value::Array(rows));
                if let Some(path) = csv {
                    std::fs::write(&path, team_multi::equilibrium_csv(&report, multi.agents()))
                        .with_context(|| format!("writing {}", path.display()))?;
                    result.insert("csv".into(), json!(path.display().to_string()));
                }
            }
        }
        Command::Gen { kind, n, seed, out: path, items, density, clauses, agents, base, cost_scale } => {
            let params = GenParams {
                items,
                density,
                clauses,
                agents,
                base: base.parse::<Family>()?,
                cost_scale: parse_rational("--cost-scale", &cost_scale)?,
            };
            let inst = instances::generate(kind.parse::<GenKind>()?, n, seed, &params)?;
            instances::save(&inst, &path).with_context(|| format!("writing {}", path.display()))?;
            out.insert("instance_digest".into(), json!(digest(&inst)));
            out.insert("model".into(), json!(inst.model().name()));
            result.insert("path".into(), json!(path.display().to_string()));
        }
    }
    out.insert("result".into(), Value::Object(result));
    Ok((Value::Object(out), code))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((report, code)) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
