//! Sparse multisets of jumps (unordered histories).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::lattice::{GroupElement, JumpSet};

/// A finitely supported map `jump -> count`; zero counts are never stored.
///
/// Ordered by total count first, then lexicographically on the sorted `(jump, count)` list.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    counts: SmallVec<[(GroupElement, u32); 3]>,
    total: u64,
}

impl MultiIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from `(jump, count)` pairs; repeated jumps accumulate and zeros are dropped.
    pub fn from_counts(pairs: impl IntoIterator<Item = (GroupElement, u32)>) -> Self {
        let mut m = Self::new();
        for (g, n) in pairs {
            m.add(&g, n);
        }
        m
    }

    /// Multiset of the given jumps.
    pub fn from_jumps<'a>(jumps: impl IntoIterator<Item = &'a GroupElement>) -> Self {
        let mut m = Self::new();
        for g in jumps {
            m.increment(g);
        }
        m
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, g: &GroupElement) -> u32 {
        match self.position(g) {
            Ok(i) => self.counts[i].1,
            Err(_) => 0,
        }
    }

    /// Nonzero entries in canonical jump order.
    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, u32)> + '_ {
        self.counts.iter().map(|(g, n)| (g, *n))
    }

    /// Jumps with positive count.
    pub fn support(&self) -> impl Iterator<Item = &GroupElement> + '_ {
        self.counts.iter().map(|(g, _)| g)
    }

    pub fn is_supported_by(&self, jumps: &JumpSet) -> bool {
        self.support().all(|g| jumps.contains(g))
    }

    pub fn increment(&mut self, g: &GroupElement) {
        self.add(g, 1);
    }

    pub fn add(&mut self, g: &GroupElement, n: u32) {
        if n == 0 {
            return;
        }
        match self.position(g) {
            Ok(i) => self.counts[i].1 += n,
            Err(i) => self.counts.insert(i, (g.clone(), n)),
        }
        self.total += u64::from(n);
    }

    /// `self + δ_g`.
    pub fn incremented(&self, g: &GroupElement) -> Self {
        let mut m = self.clone();
        m.increment(g);
        m
    }

    /// `self - δ_g`, or `None` when the count of `g` is zero.
    pub fn decremented(&self, g: &GroupElement) -> Option<Self> {
        let i = self.position(g).ok()?;
        let mut m = self.clone();
        if m.counts[i].1 == 1 {
            m.counts.remove(i);
        } else {
            m.counts[i].1 -= 1;
        }
        m.total -= 1;
        Some(m)
    }

    /// Lexicographically largest jump with positive count.
    pub fn last_jump(&self) -> Option<&GroupElement> {
        self.counts.last().map(|(g, _)| g)
    }

    /// Coordinate-wise sum of two multi-indices.
    pub fn merged(&self, other: &Self) -> Self {
        let mut m = self.clone();
        for (g, n) in other.iter() {
            m.add(g, n);
        }
        m
    }

    /// Expands into a jump sequence in canonical order (each jump repeated by its count).
    pub fn to_jumps(&self) -> Vec<GroupElement> {
        self.counts
            .iter()
            .flat_map(|(g, n)| std::iter::repeat_n(g.clone(), *n as usize))
            .collect()
    }

    fn position(&self, g: &GroupElement) -> Result<usize, usize> {
        self.counts.binary_search_by(|(h, _)| h.cmp(g))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total.cmp(&other.total).then_with(|| self.counts.cmp(&other.counts))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `{[-1]:1,[1]:2}`; the empty index prints as `{}`.
impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (g, n)) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{g}:{n}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for MultiIndex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let inner = s
            .trim()
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| format!("expected `{{[g]:n,...}}`, got `{s}`"))?
            .trim();
        let mut m = MultiIndex::new();
        let mut rest = inner;
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(|| format!("unterminated jump in `{s}`"))?;
            let g: GroupElement = rest[..=close].parse()?;
            let after = rest[close + 1..].trim_start();
            let after = after.strip_prefix(':').ok_or_else(|| format!("missing `:` in `{s}`"))?;
            let end = after.find(',').unwrap_or(after.len());
            let n: u32 = after[..end].trim().parse().map_err(|e| format!("bad count in `{s}`: {e}"))?;
            m.add(&g, n);
            rest = after[end..].trim_start().strip_prefix(',').unwrap_or("").trim_start();
        }
        Ok(m)
    }
}

/// All multi-indices over `jumps` with total count `<= max_total`, in canonical order.
pub fn enumerate_multi_indices(jumps: &JumpSet, max_total: u64) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex::new()];
    let mut frontier = vec![MultiIndex::new()];
    for _ in 0..max_total {
        let mut next = Vec::new();
        for m in &frontier {
            // Only extend with jumps >= the current last jump so each index appears once.
            for g in jumps.iter().filter(|g| m.last_jump().is_none_or(|l| *g >= l)) {
                next.push(m.incremented(g));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort();
    out
}
