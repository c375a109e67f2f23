//! Monotone normalized set functions over small ground sets.
//!
//! Every representation answers value queries exactly. A full value table is
//! built lazily on first use by the exhaustive routines and cached for the
//! lifetime of the function.

use std::sync::OnceLock;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::demand::{self, PriceVector};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::subset::{all_subsets, Subset};
use crate::{ensure_exhaustive, MAX_ELEMENTS};

/// Ground sets up to this size keep a full value table.
const TABULATE_LIMIT: usize = 16;

/// Maximum number of universe items a coverage function may use.
pub const MAX_COVERAGE_ITEMS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Explicit,
    Additive,
    Coverage,
    Xos,
    SupermodularSquare,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Repr {
    /// Value per subset, indexed by bitmask.
    Explicit { table: Vec<Rational> },
    Additive { weights: Vec<Rational> },
    /// `covers[j]` is the bitmask of universe items covered by element `j`.
    Coverage { item_weights: Vec<Rational>, covers: Vec<u64> },
    /// Maximum over additive clauses, each a weight vector of length `n`.
    Xos { clauses: Vec<Vec<Rational>> },
    /// `f(S) = w(S)^2 / w([n])^2`.
    SupermodularSquare { weights: Vec<Rational> },
}

#[derive(Debug)]
pub struct SetFunction {
    n: usize,
    repr: Repr,
    table: OnceLock<Vec<Rational>>,
}

impl Clone for SetFunction {
    fn clone(&self) -> Self {
        let table = OnceLock::new();
        if let Some(t) = self.table.get() {
            let _ = table.set(t.clone());
        }
        SetFunction { n: self.n, repr: self.repr.clone(), table }
    }
}

impl PartialEq for SetFunction {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.repr == other.repr
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_ELEMENTS {
        return Err(Error::invalid(format!(
            "ground set of {n} elements exceeds the maximum of {MAX_ELEMENTS}"
        )));
    }
    Ok(())
}

fn check_nonnegative(what: &str, values: &[Rational]) -> Result<()> {
    match values.iter().position(|v| v.is_negative()) {
        Some(i) => Err(Error::invalid(format!("{what}[{i}] is negative"))),
        None => Ok(()),
    }
}

impl SetFunction {
    /// Builds an explicit table, rejecting non-normalized or non-monotone input.
    pub fn explicit(n: usize, table: Vec<Rational>) -> Result<Self> {
        check_size(n)?;
        if table.len() != 1 << n {
            return Err(Error::invalid(format!(
                "explicit table has {} entries, expected 2^{n} = {}",
                table.len(),
                1usize << n
            )));
        }
        if !table[0].is_zero() {
            return Err(Error::NotNormalized(rational::format(&table[0])));
        }
        for s in all_subsets(n) {
            for i in (0..n).filter(|&i| !s.contains(i)) {
                let t = s.with(i);
                if table[s.0 as usize] > table[t.0 as usize] {
                    return Err(Error::NotMonotone {
                        smaller: s.to_string(),
                        larger: t.to_string(),
                    });
                }
            }
        }
        Ok(Self::from_repr(n, Repr::Explicit { table }))
    }

    pub fn additive(weights: Vec<Rational>) -> Result<Self> {
        check_size(weights.len())?;
        check_nonnegative("weights", &weights)?;
        Ok(Self::from_repr(weights.len(), Repr::Additive { weights }))
    }

    /// `covers[j]` lists the universe items covered by element `j`.
    pub fn coverage(item_weights: Vec<Rational>, covers: Vec<Vec<usize>>) -> Result<Self> {
        check_size(covers.len())?;
        check_nonnegative("item_weights", &item_weights)?;
        if item_weights.len() > MAX_COVERAGE_ITEMS {
            return Err(Error::invalid(format!(
                "coverage universe of {} items exceeds {MAX_COVERAGE_ITEMS}",
                item_weights.len()
            )));
        }
        let mut masks = Vec::with_capacity(covers.len());
        for (j, items) in covers.iter().enumerate() {
            let mut mask = 0u64;
            for &u in items {
                if u >= item_weights.len() {
                    return Err(Error::invalid(format!(
                        "element {j} covers item {u}, but only {} items exist",
                        item_weights.len()
                    )));
                }
                mask |= 1 << u;
            }
            masks.push(mask);
        }
        Ok(Self::from_repr(covers.len(), Repr::Coverage { item_weights, covers: masks }))
    }

    pub fn xos(n: usize, clauses: Vec<Vec<Rational>>) -> Result<Self> {
        check_size(n)?;
        if clauses.is_empty() {
            return Err(Error::invalid("an XOS function needs at least one clause"));
        }
        for (k, clause) in clauses.iter().enumerate() {
            if clause.len() != n {
                return Err(Error::invalid(format!(
                    "clause {k} has {} weights, expected {n}",
                    clause.len()
                )));
            }
            check_nonnegative(&format!("clauses[{k}]"), clause)?;
        }
        Ok(Self::from_repr(n, Repr::Xos { clauses }))
    }

    pub fn supermodular_square(weights: Vec<Rational>) -> Result<Self> {
        check_size(weights.len())?;
        check_nonnegative("weights", &weights)?;
        if weights.iter().all(Zero::is_zero) {
            return Err(Error::invalid("supermodular-square weights must not all be zero"));
        }
        Ok(Self::from_repr(weights.len(), Repr::SupermodularSquare { weights }))
    }

    fn from_repr(n: usize, repr: Repr) -> Self {
        SetFunction { n, repr, table: OnceLock::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn kind(&self) -> Kind {
        match self.repr {
            Repr::Explicit { .. } => Kind::Explicit,
            Repr::Additive { .. } => Kind::Additive,
            Repr::Coverage { .. } => Kind::Coverage,
            Repr::Xos { .. } => Kind::Xos,
            Repr::SupermodularSquare { .. } => Kind::SupermodularSquare,
        }
    }

    pub fn ground(&self) -> Subset {
        Subset::full(self.n)
    }

    fn check_subset(&self, s: Subset) -> Result<()> {
        if !s.is_subset_of(self.ground()) {
            return Err(Error::invalid(format!(
                "bitmask {:#b} has bits outside the {}-element ground set",
                s.0, self.n
            )));
        }
        Ok(())
    }

    /// Value query `f(S)`.
    pub fn value(&self, s: Subset) -> Result<Rational> {
        self.check_subset(s)?;
        Ok(self.at(s))
    }

    /// Marginal value `f(S | T) = f(S ∪ T) − f(T)`.
    pub fn marginal(&self, s: Subset, t: Subset) -> Result<Rational> {
        self.check_subset(s)?;
        self.check_subset(t)?;
        Ok(self.at(s.union(t)) - self.at(t))
    }

    /// Unchecked value query for callers that already validated `s`. Small
    /// ground sets are tabulated on first use.
    pub(crate) fn at(&self, s: Subset) -> Rational {
        debug_assert!(s.is_subset_of(self.ground()));
        if self.n <= TABULATE_LIMIT {
            return self.table()[s.0 as usize].clone();
        }
        match self.table.get() {
            Some(t) => t[s.0 as usize].clone(),
            None => self.evaluate(s),
        }
    }

    pub(crate) fn marginal_of(&self, i: usize, s: Subset) -> Rational {
        self.at(s.with(i)) - self.at(s)
    }

    fn evaluate(&self, s: Subset) -> Rational {
        match &self.repr {
            Repr::Explicit { table } => table[s.0 as usize].clone(),
            Repr::Additive { weights } => s.iter().map(|i| &weights[i]).sum(),
            Repr::Coverage { item_weights, covers } => {
                let covered = s.iter().fold(0u64, |acc, j| acc | covers[j]);
                (0..item_weights.len())
                    .filter(|u| covered >> u & 1 == 1)
                    .map(|u| &item_weights[u])
                    .sum()
            }
            Repr::Xos { clauses } => clauses
                .iter()
                .map(|c| s.iter().map(|i| &c[i]).sum::<Rational>())
                .max()
                .unwrap_or_else(Rational::zero),
            Repr::SupermodularSquare { weights } => {
                let part: Rational = s.iter().map(|i| &weights[i]).sum();
                let total: Rational = weights.iter().sum();
                (&part * &part) / (&total * &total)
            }
        }
    }

    /// Full value table indexed by bitmask, computed once.
    pub fn table(&self) -> &[Rational] {
        self.table.get_or_init(|| match &self.repr {
            Repr::Explicit { table } => table.clone(),
            Repr::Additive { weights } => {
                let mut t = vec![Rational::zero(); 1 << self.n];
                for s in 1..(1usize << self.n) {
                    let low = s.trailing_zeros() as usize;
                    t[s] = &t[s & (s - 1)] + &weights[low];
                }
                t
            }
            _ => all_subsets(self.n).map(|s| self.evaluate(s)).collect(),
        })
    }

    /// Largest singleton value `max_i f({i})`, zero on an empty ground set.
    pub fn max_singleton(&self) -> Rational {
        (0..self.n)
            .map(|i| self.at(Subset::singleton(i)))
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

/// Classes that [`check_class`] can decide exhaustively.
#[derive(Clone, Debug, PartialEq)]
pub enum SetClass {
    Additive,
    Submodular,
    Supermodular,
    Subadditive,
    GrossSubstitutes,
    /// Verifies that the given additive clauses reproduce `f` exactly.
    XosCertificate(Vec<Vec<Rational>>),
}

impl SetClass {
    pub fn name(&self) -> &'static str {
        match self {
            SetClass::Additive => "additive",
            SetClass::Submodular => "submodular",
            SetClass::Supermodular => "supermodular",
            SetClass::Subadditive => "subadditive",
            SetClass::GrossSubstitutes => "gs",
            SetClass::XosCertificate(_) => "xos_certificate",
        }
    }
}

/// Exact class membership by exhaustive verification of the defining
/// inequalities. Refuses ground sets above the exhaustive limit.
pub fn check_class(f: &SetFunction, class: &SetClass) -> Result<bool> {
    ensure_exhaustive(f.n())?;
    let n = f.n();
    let t = f.table();
    let v = |s: u32| &t[s as usize];
    Ok(match class {
        SetClass::Additive => (1u32..1 << n).all(|s| {
            let low = s & s.wrapping_neg();
            *v(s) == v(s & (s - 1)) + v(low)
        }),
        // Local (pairwise) form, equivalent to the S ⊆ T definition.
        SetClass::Submodular => pairwise(n, |s, i, j| v(s | i) + v(s | j) >= v(s) + v(s | i | j)),
        SetClass::Supermodular => pairwise(n, |s, i, j| v(s | i) + v(s | j) <= v(s) + v(s | i | j)),
        SetClass::Subadditive => {
            // For monotone f, disjoint pairs suffice.
            all_subsets(n).all(|u| {
                u.subsets()
                    .filter(|a| !a.is_empty() && a.0 < u.0 - a.0)
                    .all(|a| v(a.0) + v(u.0 - a.0) >= *v(u.0))
            })
        }
        SetClass::GrossSubstitutes => {
            pairwise(n, |s, i, j| v(s | i) + v(s | j) >= v(s) + v(s | i | j)) && triplet(n, t)
        }
        SetClass::XosCertificate(clauses) => {
            if clauses.is_empty() || clauses.iter().any(|c| c.len() != n || c.iter().any(Signed::is_negative)) {
                return Err(Error::invalid(format!(
                    "XOS certificate needs non-empty nonnegative clauses of length {n}"
                )));
            }
            all_subsets(n).all(|s| {
                let best = clauses
                    .iter()
                    .map(|c| s.iter().map(|i| &c[i]).sum::<Rational>())
                    .max()
                    .unwrap();
                best == t[s.0 as usize]
            })
        }
    })
}

fn pairwise(n: usize, ok: impl Fn(u32, u32, u32) -> bool) -> bool {
    all_subsets(n).all(|s| {
        (0..n).filter(|&i| !s.contains(i)).all(|i| {
            (i + 1..n)
                .filter(|&j| !s.contains(j))
                .all(|j| ok(s.0, 1 << i, 1 << j))
        })
    })
}

/// Triplet condition: for every S and distinct i, j, k outside S, the maximum
/// of f(a|S) + f(bc|S) over the three ways of singling out one element is
/// attained at least twice.
fn triplet(n: usize, t: &[Rational]) -> bool {
    let v = |s: u32| &t[s as usize];
    all_subsets(n).all(|s| {
        let base = v(s.0);
        let free: Vec<u32> = (0..n).filter(|&i| !s.contains(i)).map(|i| 1u32 << i).collect();
        for (a, &x) in free.iter().enumerate() {
            for (b, &y) in free.iter().enumerate().skip(a + 1) {
                for &z in free.iter().skip(b + 1) {
                    let m = |single: u32, pair: u32| v(s.0 | single) + v(s.0 | pair) - base - base;
                    let sums = [m(x, y | z), m(y, x | z), m(z, x | y)];
                    let top = sums.iter().max().unwrap();
                    if sums.iter().filter(|q| *q == top).count() < 2 {
                        return false;
                    }
                }
            }
        }
        true
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum WellLayered {
    Consistent,
    Counterexample(PriceVector),
}

/// Whether the greedy chain under `p` is optimal at every cardinality.
pub fn well_layered_at(f: &SetFunction, p: &PriceVector) -> Result<bool> {
    ensure_exhaustive(f.n())?;
    if p.len() != f.n() {
        return Err(Error::invalid("price vector length does not match the ground set"));
    }
    let t = f.table();
    let chain = demand::greedy_chain(f, p);
    let mut best: Vec<Option<Rational>> = vec![None; f.n() + 1];
    for s in all_subsets(f.n()) {
        let surplus = &t[s.0 as usize] - p.cost(s);
        let slot = &mut best[s.len()];
        if slot.as_ref().is_none_or(|b| surplus > *b) {
            *slot = Some(surplus);
        }
    }
    Ok(chain.iter().all(|s| {
        let surplus = &t[s.0 as usize] - p.cost(*s);
        Some(surplus) == best[s.len()]
    }))
}

/// Samples random rational price vectors and checks the well-layered property
/// for each. A `Consistent` answer is evidence, not a certificate.
pub fn well_layered_probe(f: &SetFunction, trials: usize, seed: u64) -> Result<WellLayered> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    ensure_exhaustive(f.n())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = f.at(f.ground()).max(rational::int(1));
    for _ in 0..trials {
        let prices = (0..f.n())
            .map(|_| {
                let den: i64 = rng.gen_range(1..=60);
                let num: i64 = rng.gen_range(0..=den);
                rational::ratio(num, den) * &scale
            })
            .collect();
        let p = PriceVector::new(prices)?;
        if !well_layered_at(f, &p)? {
            return Ok(WellLayered::Counterexample(p));
        }
    }
    Ok(WellLayered::Consistent)
}
