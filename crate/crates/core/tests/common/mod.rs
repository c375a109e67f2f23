//! Brute-force oracles written from the definitions, sharing nothing with
//! the library beyond value queries.
#![allow(dead_code)]

use contract_kit::rational::{int, ratio};
use contract_kit::setfn::SetFunction;
use contract_kit::subset::all_subsets;
use contract_kit::{Rational, Subset};
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn values(f: &SetFunction) -> Vec<Rational> {
    all_subsets(f.n()).map(|s| f.value(s).unwrap()).collect()
}

pub fn costs_of(c: &[Rational], n: usize) -> Vec<Rational> {
    all_subsets(n).map(|s| s.iter().map(|i| c[i].clone()).sum()).collect()
}

/// Max surplus, then larger f, then smaller bitmask.
pub fn naive_demand(f: &SetFunction, p: &[Rational]) -> (Subset, Rational) {
    let v = values(f);
    let price = costs_of(p, f.n());
    let mut best = 0usize;
    for s in 1..v.len() {
        let (a, b) = (&v[s] - &price[s], &v[best] - &price[best]);
        if a > b || (a == b && v[s] > v[best]) {
            best = s;
        }
    }
    (Subset(best as u32), &v[best] - &price[best])
}

/// Utility-maximizing set under share `alpha`, ties to larger f then smaller
/// bitmask. At zero every set of positive cost is strictly worse than free ones.
pub fn naive_best_response(f: &SetFunction, c: &[Rational], alpha: &Rational) -> Subset {
    let v = values(f);
    let cost = costs_of(c, f.n());
    let mut best = 0usize;
    for s in 1..v.len() {
        let (a, b) = (alpha * &v[s] - &cost[s], alpha * &v[best] - &cost[best]);
        if a > b || (a == b && v[s] > v[best]) {
            best = s;
        }
    }
    Subset(best as u32)
}

/// Envelope from the lower convex hull of the points `(f(S), c(S))`:
/// `(0, S_0)` followed by `(critical value, set)` for every kink in `(0, 1]`.
pub fn hull_envelope(f: &SetFunction, c: &[Rational]) -> Vec<(Rational, Subset)> {
    let v = values(f);
    let cost = costs_of(c, f.n());
    let start = (0..v.len())
        .filter(|&s| cost[s].is_zero())
        .fold(0usize, |b, s| if v[s] > v[b] { s } else { b });
    let mut out = vec![(int(0), Subset(start as u32))];
    let mut cur = start;
    loop {
        let mut next: Option<(Rational, usize)> = None;
        for s in 0..v.len() {
            if v[s] <= v[cur] {
                continue;
            }
            let slope = (&cost[s] - &cost[cur]) / (&v[s] - &v[cur]);
            let take = match &next {
                None => true,
                Some((m, b)) => {
                    slope < *m || (slope == *m && (v[s] > v[*b] || (v[s] == v[*b] && cost[s] < cost[*b])))
                }
            };
            if take {
                next = Some((slope, s));
            }
        }
        match next {
            Some((m, s)) if m <= int(1) => {
                out.push((m, Subset(s as u32)));
                cur = s;
            }
            _ => return out,
        }
    }
}

/// Optimal principal utility over the hull's candidate contracts.
pub fn hull_optimum(f: &SetFunction, c: &[Rational]) -> Rational {
    hull_envelope(f, c)
        .into_iter()
        .map(|(a, s)| (int(1) - a) * f.value(s).unwrap())
        .max()
        .unwrap()
}

/// `g(S)` from its definition, `None` when some positive cost meets a zero marginal.
pub fn naive_profit(f: &SetFunction, c: &[Rational], s: Subset) -> Option<Rational> {
    let fs = f.value(s).unwrap();
    let mut paid = Rational::zero();
    for i in s.iter() {
        let m = &fs - f.value(s.without(i)).unwrap();
        if m.is_zero() {
            if c[i].is_positive() {
                return None;
            }
        } else {
            paid += &c[i] / m;
        }
    }
    Some((Rational::one() - paid) * fs)
}

/// `(S*, g*)` with ties to larger f, then smaller bitmask.
pub fn naive_optimal_team(f: &SetFunction, c: &[Rational]) -> (Subset, Rational) {
    let mut best = (Subset::EMPTY, int(0));
    for s in all_subsets(f.n()).skip(1) {
        if let Some(g) = naive_profit(f, c, s) {
            if g > best.1 || (g == best.1 && f.value(s).unwrap() > f.value(best.0).unwrap()) {
                best = (s, g);
            }
        }
    }
    best
}

/// Strictly positive prices `k / 9973`, up to about twice the element's
/// largest marginal, so that every element is sometimes worth buying.
pub fn random_prices(f: &SetFunction, rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let ground = f.ground();
    let top = f.value(ground).unwrap();
    (0..f.n())
        .map(|i| {
            let single = f.value(Subset::singleton(i)).unwrap();
            let last = &top - f.value(ground.without(i)).unwrap();
            let m = single.max(last);
            let hi = (m * int(2 * 9973)).ceil().to_integer();
            let hi: i64 = hi.try_into().unwrap();
            ratio(rng.gen_range(1..=hi.max(1)), 9973)
        })
        .collect()
}

pub fn random_alpha(rng: &mut ChaCha8Rng) -> Rational {
    ratio(rng.gen_range(0..=1000), 1000)
}

/// Small summary of a sample: min, median, mean.
pub fn summary(mut xs: Vec<f64>) -> (f64, f64, f64) {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs[0], xs[xs.len() / 2], mean)
}
