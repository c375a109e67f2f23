use std::fmt;

/// A subset of a ground set of at most 32 elements, as a bitmask: bit `j` set
/// means element `j` (0-indexed) is present. Ordering is by bitmask value,
/// which is the deterministic final tie-break used throughout the crate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(n: usize) -> Subset {
        if n >= 32 {
            Subset(u32::MAX)
        } else {
            Subset((1u32 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Subset {
        Subset(1 << i)
    }

    pub fn from_elements<I: IntoIterator<Item = usize>>(elems: I) -> Subset {
        Subset(elems.into_iter().fold(0, |acc, i| acc | (1 << i)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Subset {
        Subset(self.0 | 1 << i)
    }

    pub fn without(self, i: usize) -> Subset {
        Subset(self.0 & !(1 << i))
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn difference(self, other: Subset) -> Subset {
        Subset(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Largest element index, if any.
    pub fn max_element(self) -> Option<usize> {
        (self.0 != 0).then(|| 31 - self.0.leading_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        })
    }

    /// All subsets of `self`, in increasing bitmask order.
    pub fn subsets(self) -> impl Iterator<Item = Subset> {
        let mask = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask { None } else { Some(cur.wrapping_sub(mask) & mask) };
            Some(Subset(cur))
        })
    }

    /// Human-facing rendering with 1-indexed elements, e.g. `{1,2}`.
    pub fn display_one_based(self) -> String {
        let items: Vec<String> = self.iter().map(|i| (i + 1).to_string()).collect();
        format!("{{{}}}", items.join(","))
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_one_based())
    }
}

/// Iterator over every subset of `{0..n}` in increasing bitmask order.
pub fn all_subsets(n: usize) -> impl Iterator<Item = Subset> {
    Subset::full(n).subsets()
}
