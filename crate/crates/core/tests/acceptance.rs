//! Acceptance criteria, one line each. Runs as a plain binary so the
//! report is printed even when everything passes.

mod common;

use std::time::{Duration, Instant};

use contract_kit::demand::{
    best_response, brute_force_demand, greedy_gs_demand, greedy_ultra_demand, Engine, PriceVector,
};
use contract_kit::instances::{example, generate, ExampleName, Family, GenKind, GenParams, Instance};
use contract_kit::rational::{int, ratio, to_f64};
use contract_kit::setfn::{check_class, SetClass};
use contract_kit::single_agent::{
    envelope, fptas_contract, optimal_contract, supermodular_chain, SingleAgentInstance,
};
use contract_kit::subset::all_subsets;
use contract_kit::team_binary::{
    constant_approx_submodular_team, fptas_additive_team, is_nash_team, min_payment_contract, team_profit,
    BinaryTeamInstance, MinPayment,
};
use contract_kit::team_multi::{
    best_response_dynamics, doubling_contract, enumerate_equilibria, find_equilibrium, is_nash_profile,
    is_subset_stable, potential, MultiTeamInstance, VectorContract,
};
use contract_kit::{Extended, Rational, Subset};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn set(elems: &[usize]) -> Subset {
    Subset::from_elements(elems.iter().map(|e| e - 1))
}

fn single(inst: Instance) -> SingleAgentInstance {
    inst.as_single_agent().unwrap().clone()
}

// 1
fn example_additive() -> Outcome {
    let inst = single(example(ExampleName::Ex3_1));
    for engine in [Engine::Brute, Engine::Gs, Engine::Ultra] {
        let env = envelope(&inst, &int(0), &int(1), engine).map_err(|e| e.to_string())?;
        let sets: Vec<Subset> = env.segments.iter().map(|s| s.set).collect();
        let alphas: Vec<Rational> = env.critical_values.iter().map(|c| c.alpha.clone()).collect();
        ensure(sets == vec![Subset::EMPTY, set(&[1]), set(&[1, 2]), set(&[1, 2, 3])], || format!("{engine:?}: sets {sets:?}"))?;
        ensure(alphas == vec![ratio(1, 3), ratio(1, 2), ratio(4, 5)], || format!("{engine:?}: breakpoints {alphas:?}"))?;
        let opt = optimal_contract(&inst, engine).map_err(|e| e.to_string())?;
        ensure(
            (opt.alpha.clone(), opt.set, opt.principal_utility.clone()) == (ratio(1, 2), set(&[1, 2]), ratio(1, 4)),
            || format!("{engine:?}: optimum {opt:?}"),
        )?;
    }
    ensure(hull_optimum(inst.function(), inst.costs()) == ratio(1, 4), || "oracle optimum differs".into())?;
    Ok("breakpoints 1/3, 1/2, 4/5; optimum alpha=1/2 on {1,2} with utility 1/4".into())
}

// 2
fn example_gs() -> Outcome {
    let inst = single(example(ExampleName::Ex3_2));
    let env = envelope(&inst, &int(0), &int(1), Engine::Gs).map_err(|e| e.to_string())?;
    let sets: Vec<Subset> = env.segments.iter().map(|s| s.set).collect();
    let alphas: Vec<Rational> = env.critical_values.iter().map(|c| c.alpha.clone()).collect();
    ensure(
        sets == vec![Subset::EMPTY, set(&[1]), set(&[2]), set(&[1, 2]), set(&[1, 2, 3])],
        || format!("sets {sets:?}"),
    )?;
    ensure(alphas == vec![ratio(1, 20), ratio(1, 10), ratio(1, 4), ratio(1, 2)], || format!("breakpoints {alphas:?}"))?;
    let f = inst.function();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..1000 {
        let p = PriceVector::new(random_prices(f, &mut rng)).unwrap();
        let b = brute_force_demand(f, &p).unwrap();
        let g = greedy_gs_demand(f, &p).unwrap();
        let u = greedy_ultra_demand(f, &p).unwrap();
        ensure(b == g && b == u, || format!("price vector {k}: brute {b:?}, gs {g:?}, ultra {u:?}"))?;
    }
    Ok("envelope matches; 1000 price vectors, engines agree".into())
}

// 3
fn example_team() -> Outcome {
    let inst = example(ExampleName::Ex4_1).as_binary_team().unwrap().clone();
    let g = |s| team_profit(&inst, s).unwrap();
    ensure(g(set(&[1])) == Extended::Finite(ratio(1, 4)), || "g({1})".into())?;
    ensure(g(set(&[2])) == Extended::Finite(ratio(1, 4)), || "g({2})".into())?;
    ensure(g(set(&[1, 2])) == Extended::Finite(ratio(-3, 4)), || "g({1,2})".into())?;
    match min_payment_contract(&inst, set(&[1, 2])).unwrap() {
        MinPayment::Contract(c) => ensure(c.alpha == vec![int(1), int(1)], || format!("payments {:?}", c.alpha))?,
        other => return Err(format!("{other:?}")),
    }
    let opt = contract_kit::team_binary::brute_force_optimal_team(&inst).unwrap();
    ensure(opt.set.len() == 1 && opt.profit == ratio(1, 4), || format!("optimum {opt:?}"))?;
    Ok("g({1}) = g({2}) = 1/4, payments (1,1), g({1,2}) = -3/4, optimum {1}".into())
}

/// Additive and gross-substitutes coverage instances.
fn gs_corpus() -> (Vec<SingleAgentInstance>, usize) {
    let mut out = Vec::new();
    for seed in 0..100u64 {
        let n = 2 + (seed as usize % 9);
        out.push(single(generate(GenKind::Additive, n, seed, &GenParams::default()).unwrap()));
    }
    let mut coverage = 0;
    let mut seed = 0u64;
    while coverage < 150 {
        let n = 3 + (seed as usize % 8);
        let params = GenParams { items: Some(n), density: 0.1 + 0.05 * (seed % 3) as f64, ..Default::default() };
        let inst = single(generate(GenKind::Coverage, n, 1000 + seed, &params).unwrap());
        seed += 1;
        if check_class(inst.function(), &SetClass::GrossSubstitutes).unwrap() {
            coverage += 1;
            out.push(inst);
        }
    }
    let non_additive = out.iter().filter(|i| !check_class(i.function(), &SetClass::Additive).unwrap()).count();
    (out, non_additive)
}

// 4
fn oracle_equivalence(corpus: &[SingleAgentInstance], non_additive: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (k, inst) in corpus.iter().enumerate() {
        let f = inst.function();
        for _ in 0..50 {
            let p = PriceVector::new(random_prices(f, &mut rng)).unwrap();
            let b = brute_force_demand(f, &p).unwrap();
            let g = greedy_gs_demand(f, &p).unwrap();
            let u = greedy_ultra_demand(f, &p).unwrap();
            ensure(b == g, || format!("instance {k}: gs {g:?} vs brute {b:?} at {:?}", p.as_slice()))?;
            ensure(b == u, || format!("instance {k}: ultra {u:?} vs brute {b:?} at {:?}", p.as_slice()))?;
        }
    }
    Ok(format!("{} instances ({} not additive) x 50 price vectors", corpus.len(), non_additive))
}

// 5
fn critical_value_bounds(corpus: &[SingleAgentInstance]) -> Outcome {
    let mut most = 0usize;
    for (k, inst) in corpus.iter().enumerate() {
        let n = inst.n();
        let env = envelope(inst, &int(0), &int(1), Engine::Gs).map_err(|e| e.to_string())?;
        let count = env.critical_values.len();
        ensure(count <= n * (n + 1) / 2, || format!("instance {k}: {count} critical values for n = {n}"))?;
        most = most.max(count);
        let oracle: Vec<Rational> = hull_envelope(inst.function(), inst.costs()).into_iter().skip(1).map(|x| x.0).collect();
        let got: Vec<Rational> = env.critical_values.iter().map(|c| c.alpha.clone()).collect();
        ensure(got == oracle, || format!("instance {k}: breakpoints differ from the hull oracle"))?;
    }
    let mut chains = 0;
    let mut longest = 0;
    for seed in 0..200u64 {
        let n = 2 + (seed as usize % 9);
        let params = GenParams { cost_scale: ratio(1 + (seed % 4) as i64, 4), ..Default::default() };
        let inst = single(generate(GenKind::SupermodularSquare, n, seed, &params).unwrap());
        let chain = supermodular_chain(&inst).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(chain.len() <= n, || format!("seed {seed}: {} breakpoints for n = {n}", chain.len()))?;
        let env = hull_envelope(inst.function(), inst.costs());
        for w in env.windows(2) {
            ensure(w[0].1.is_subset_of(w[1].1), || format!("seed {seed}: oracle chain not nested"))?;
        }
        let sets: Vec<Subset> = env.iter().skip(1).map(|x| x.1).collect();
        ensure(chain.iter().map(|x| x.1).collect::<Vec<_>>() == sets, || format!("seed {seed}: chain differs from oracle"))?;
        chains += 1;
        longest = longest.max(chain.len());
    }
    Ok(format!(
        "GS corpus max {most} critical values; {chains} supermodular chains nested, longest {longest}"
    ))
}

fn mixed_single_corpus() -> Vec<SingleAgentInstance> {
    let kinds = [GenKind::Additive, GenKind::Coverage, GenKind::Xos, GenKind::SupermodularSquare];
    (0..200u64)
        .map(|seed| {
            let n = if seed % 10 == 0 { 12 } else { 2 + (seed as usize % 9) };
            let params = GenParams { cost_scale: ratio(1 + (seed % 3) as i64, 2), ..Default::default() };
            single(generate(kinds[seed as usize % 4], n, seed, &params).unwrap())
        })
        .collect()
}

// 6
fn fptas_guarantees() -> Outcome {
    let epsilons = [ratio(1, 2), ratio(1, 10), ratio(1, 100)];
    let corpus = mixed_single_corpus();
    let mut worst = f64::INFINITY;
    for (k, inst) in corpus.iter().enumerate() {
        let opt = hull_optimum(inst.function(), inst.costs());
        let exact = optimal_contract(inst, Engine::Brute).map_err(|e| e.to_string())?;
        ensure(exact.principal_utility == opt, || format!("instance {k}: optimal_contract disagrees with oracle"))?;
        for eps in &epsilons {
            let got = fptas_contract(inst, eps, Engine::Brute).map_err(|e| e.to_string())?.principal_utility;
            ensure(got >= (int(1) - eps) * &opt, || format!("instance {k}, eps {eps}: {got} < (1-eps)·{opt}"))?;
            if opt.is_positive() {
                worst = worst.min(to_f64(&(got / &opt)));
            }
        }
    }
    let mut team_worst = f64::INFINITY;
    for seed in 0..200u64 {
        let n = if seed % 10 == 0 { 12 } else { 1 + (seed as usize % 10) };
        let params = GenParams { base: Family::Additive, cost_scale: ratio(1 + (seed % 3) as i64, 2), ..Default::default() };
        let inst = generate(GenKind::BinaryTeam, n, seed, &params).unwrap();
        let team = inst.as_binary_team().unwrap();
        let (_, gstar) = naive_optimal_team(team.function(), team.costs());
        for eps in &epsilons {
            let got = fptas_additive_team(team, eps).map_err(|e| e.to_string())?.profit;
            ensure(got >= (int(1) - eps) * &gstar, || format!("team seed {seed}, eps {eps}: {got} < (1-eps)·{gstar}"))?;
            if gstar.is_positive() {
                team_worst = team_worst.min(to_f64(&(got / &gstar)));
            }
        }
    }
    Ok(format!(
        "200 single-agent + 200 additive-team instances x 3 epsilons; worst ratios {worst:.4} and {team_worst:.4}"
    ))
}

// 7
fn constant_factor() -> Outcome {
    let mut ratios = Vec::new();
    let mut pipeline_wins = 0;
    for seed in 0..200u64 {
        let n = 2 + (seed as usize % 9);
        let params = GenParams { cost_scale: ratio(1 + (seed % 4) as i64, 4), ..Default::default() };
        let inst = generate(GenKind::BinaryTeam, n, seed, &params).unwrap();
        let team = inst.as_binary_team().unwrap();
        let (_, gstar) = naive_optimal_team(team.function(), team.costs());
        let got = constant_approx_submodular_team(team).map_err(|e| e.to_string())?;
        ensure(naive_profit(team.function(), team.costs(), got.set) == Some(got.profit.clone()), || {
            format!("seed {seed}: reported profit is not g of the reported set")
        })?;
        ensure(got.profit.clone() * int(128) >= gstar, || format!("seed {seed}: {} < {gstar}/128", got.profit))?;
        if got.set.len() > 1 {
            pipeline_wins += 1;
        }
        if gstar.is_positive() {
            ratios.push(to_f64(&(got.profit / &gstar)));
        }
    }
    let (min, median, mean) = summary(ratios.clone());
    Ok(format!(
        "200 coverage instances; ratio to optimum min {min:.3}, median {median:.3}, mean {mean:.3} over {} with positive optimum; {pipeline_wins} multi-agent picks",
        ratios.len()
    ))
}

fn sqrt_sum_at_most(costs: &[Rational], s: Subset, fs: &Rational) -> bool {
    let c: Vec<&Rational> = s.iter().map(|i| &costs[i]).collect();
    match c.as_slice() {
        [] => true,
        [a] => *a <= fs,
        [a, b] => {
            // √a + √b ≤ √f  ⇔  2√(ab) ≤ f − a − b  ⇔  rhs ≥ 0 and 4ab ≤ rhs².
            let rhs = fs - *a - *b;
            !rhs.is_negative() && int(4) * *a * *b <= &rhs * &rhs
        }
        _ => c.iter().map(|x| to_f64(x).sqrt()).sum::<f64>() <= to_f64(fs).sqrt() + 1e-9,
    }
}

// 8
fn xos_properties() -> Outcome {
    let mut premise_hits = 0usize;
    let mut nonempty = 0usize;
    for seed in 0..200u64 {
        let n = 2 + (seed as usize % 9);
        let params = GenParams {
            base: Family::Xos,
            clauses: 2 + (seed % 3) as usize,
            cost_scale: ratio(1 + (seed % 4) as i64, 4),
            ..Default::default()
        };
        let inst = generate(GenKind::BinaryTeam, n, seed, &params).unwrap();
        let (f, c) = (inst.function(), inst.costs());
        let (star, gstar) = naive_optimal_team(f, c);
        if !star.is_empty() {
            nonempty += 1;
        }
        let small = Subset::from_elements((0..n).filter(|&i| &c[i] * int(2) <= f.value(Subset::singleton(i)).unwrap()));
        let best_single = (0..n)
            .filter_map(|i| naive_profit(f, c, Subset::singleton(i)))
            .max()
            .unwrap_or_else(Rational::zero)
            .max(Rational::zero());
        let bound = f.value(star.intersection(small)).unwrap() + best_single;
        ensure(gstar <= bound, || format!("seed {seed}: decomposition {gstar} > {bound}"))?;
        for s in star.subsets() {
            let fs = f.value(s).unwrap();
            ensure(sqrt_sum_at_most(c, s, &fs), || format!("seed {seed}: sqrt-cost bound fails on {s}"))?;
        }
        for s in all_subsets(n) {
            let fs = f.value(s).unwrap();
            if !fs.is_positive() {
                continue;
            }
            let premise = s.iter().all(|i| {
                let m = &fs - f.value(s.without(i)).unwrap();
                !m.is_negative() && &m * &m >= int(2) * &c[i] * &fs
            });
            if premise {
                premise_hits += 1;
                let g = naive_profit(f, c, s);
                ensure(g.as_ref().is_some_and(|g| g * int(2) >= fs), || format!("seed {seed}: half-reward fails on {s}"))?;
            }
        }
    }
    Ok(format!("200 XOS instances ({nonempty} with nonempty optimum); half-reward premise met by {premise_hits} sets"))
}

fn random_contract(agents: usize, rng: &mut ChaCha8Rng) -> VectorContract {
    VectorContract::new((0..agents).map(|_| ratio(rng.gen_range(0..=40), 100)).collect()).unwrap()
}

// 9
fn equilibria() -> Outcome {
    let bases = [Family::Coverage, Family::Additive, Family::Xos, Family::SupermodularSquare];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut doubling_checks = 0usize;
    let mut moves = 0usize;
    for seed in 0..200u64 {
        let m = 2 + (seed as usize % 9);
        let params = GenParams {
            base: bases[seed as usize % 4],
            agents: Some(1 + (seed as usize / 4) % m),
            ..Default::default()
        };
        let inst = generate(GenKind::MultiTeam, m, seed, &params).unwrap();
        let inst = inst.as_multi_team().unwrap();
        let f = inst.function();
        let submodular = check_class(f, &SetClass::Submodular).unwrap();
        for _ in 0..3 {
            let alpha = random_contract(inst.agents(), &mut rng);
            let eq = enumerate_equilibria(inst, &alpha).unwrap();
            ensure(!eq.is_empty(), || format!("seed {seed}: no equilibrium"))?;
            let chosen = find_equilibrium(inst, &alpha).map_err(|e| e.to_string())?;
            ensure(eq.contains(&chosen), || format!("seed {seed}: selected profile is not an equilibrium"))?;

            let start = Subset(rng.gen_range(0..1u32 << m));
            let run = best_response_dynamics(inst, &alpha, start, 10_000).unwrap();
            ensure(run.converged && is_nash_profile(inst, &alpha, run.profile).unwrap(), || {
                format!("seed {seed}: dynamics did not reach an equilibrium")
            })?;
            let mut prev = potential(inst, &alpha, start).unwrap();
            for step in &run.trace {
                let strict = prev.is_finite();
                ensure(step.potential > prev || (!strict && step.potential >= prev), || {
                    format!("seed {seed}: potential fell or stalled along the dynamics")
                })?;
                prev = step.potential.clone();
            }
            moves += run.trace.len();

            if submodular {
                let stable_best = all_subsets(m)
                    .filter(|&s| is_subset_stable(inst, &alpha, s).unwrap())
                    .map(|s| f.value(s).unwrap())
                    .max()
                    .unwrap();
                for eps in [ratio(1, 100), ratio(1, 10)] {
                    let doubled = doubling_contract(&alpha, &eps).unwrap();
                    for s in enumerate_equilibria(inst, &doubled).unwrap() {
                        let fs = f.value(s).unwrap();
                        ensure(fs * int(2) >= stable_best, || {
                            format!("seed {seed}: equilibrium {s} of the doubled contract loses half of {stable_best}")
                        })?;
                        doubling_checks += 1;
                    }
                }
            }
        }
    }
    Ok(format!("600 (instance, contract) pairs; {moves} improving moves; {doubling_checks} doubled-contract equilibria checked"))
}

// 10
fn specialization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let bases = [Family::Coverage, Family::Additive, Family::Xos, Family::SupermodularSquare];
    let mut verdicts = 0usize;
    for seed in 0..100u64 {
        let n = 1 + (seed as usize % 8);
        let params = GenParams { base: bases[seed as usize % 4], ..Default::default() };
        let inst = generate(GenKind::BinaryTeam, n, seed, &params).unwrap();
        let team: &BinaryTeamInstance = inst.as_binary_team().unwrap();
        let multi = MultiTeamInstance::from_binary(team);
        let mut contracts: Vec<Vec<Rational>> = (0..3).map(|_| (0..n).map(|_| random_alpha(&mut rng)).collect()).collect();
        for s in all_subsets(n) {
            if let MinPayment::Contract(c) = min_payment_contract(team, s).unwrap() {
                contracts.push(c.alpha);
            }
        }
        for alpha in contracts {
            let vc = VectorContract::new(alpha.clone()).unwrap();
            for s in all_subsets(n) {
                let a = is_nash_team(team, &alpha, s).unwrap();
                let b = is_nash_profile(&multi, &vc, s).unwrap();
                ensure(a == b, || format!("seed {seed}: verdicts differ on {s}"))?;
                verdicts += 1;
            }
        }
    }
    let kinds = [GenKind::Additive, GenKind::Coverage, GenKind::Xos, GenKind::SupermodularSquare];
    for seed in 0..100u64 {
        let n = 1 + (seed as usize % 8);
        let inst = single(generate(kinds[seed as usize % 4], n, seed, &GenParams::default()).unwrap());
        let multi = MultiTeamInstance::from_single(&inst);
        let alpha = ratio(rng.gen_range(1..=1000), 1000);
        let vc = VectorContract::new(vec![alpha.clone()]).unwrap();
        let eq = find_equilibrium(&multi, &vc).unwrap();
        let br = best_response(inst.function(), inst.costs(), &alpha, Engine::Brute).unwrap().set;
        ensure(eq == br, || format!("seed {seed}: equilibrium {eq} vs best response {br}"))?;
        let oracle = naive_best_response(inst.function(), inst.costs(), &alpha);
        ensure(eq == oracle, || format!("seed {seed}: equilibrium {eq} vs oracle {oracle}"))?;
    }
    Ok(format!("{verdicts} Nash verdicts agree; 100 single-agent best responses agree"))
}

fn main() {
    let (gs, non_additive) = gs_corpus();
    let criteria: Vec<Criterion> = vec![
        ("additive example envelope and optimum", Duration::from_secs(1), Box::new(example_additive)),
        ("gross-substitutes example envelope and engine agreement", Duration::from_secs(5), Box::new(example_gs)),
        ("team example profits and payments", Duration::from_secs(1), Box::new(example_team)),
        ("demand oracle equivalence on GS corpus", Duration::from_secs(120), Box::new(|| oracle_equivalence(&gs, non_additive))),
        ("critical-value bounds", Duration::from_secs(120), Box::new(|| critical_value_bounds(&gs))),
        ("FPTAS guarantees", Duration::from_secs(300), Box::new(fptas_guarantees)),
        ("constant-factor team pipeline", Duration::from_secs(300), Box::new(constant_factor)),
        ("decomposition, sqrt-cost and half-reward properties", Duration::from_secs(180), Box::new(xos_properties)),
        ("equilibria, dynamics and doubling", Duration::from_secs(300), Box::new(equilibria)),
        ("specialization consistency", Duration::from_secs(60), Box::new(specialization)),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let verdict = match (&outcome, took <= *limit) {
            (Ok(_), true) => "PASS",
            _ => {
                failed += 1;
                "FAIL"
            }
        };
        let detail = match &outcome {
            Ok(d) if took <= *limit => d.clone(),
            Ok(d) => format!("{d}; over the {limit:?} budget"),
            Err(e) => e.clone(),
        };
        println!("criterion {:>2} {verdict} [{:.2?}] {name}: {detail}", k + 1, took);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
