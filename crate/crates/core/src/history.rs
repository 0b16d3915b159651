//! Ordered and unordered per-site histories of a walk.

use rustc_hash::FxHashMap;

use crate::lattice::GroupElement;
use crate::multi_index::MultiIndex;

/// Tracks, for every site, the jumps taken out of it so far.
///
/// Ordered histories (the jump sequences themselves) are kept only when requested
/// at construction; the unordered histories are always maintained.
#[derive(Clone, Debug)]
pub struct HistoryTracker {
    ordered: Option<FxHashMap<GroupElement, Vec<GroupElement>>>,
    unordered: FxHashMap<GroupElement, MultiIndex>,
    current: GroupElement,
    steps: u64,
    empty: MultiIndex,
}

impl HistoryTracker {
    pub fn new(dim: usize) -> Self {
        Self {
            ordered: None,
            unordered: FxHashMap::default(),
            current: GroupElement::zero(dim),
            steps: 0,
            empty: MultiIndex::new(),
        }
    }

    /// Tracker that also retains ordered histories.
    pub fn with_ordered(dim: usize) -> Self {
        Self { ordered: Some(FxHashMap::default()), ..Self::new(dim) }
    }

    /// Takes `jump` from the current site.
    pub fn record_step(&mut self, jump: &GroupElement) {
        if let Some(ordered) = &mut self.ordered {
            ordered.entry(self.current.clone()).or_default().push(jump.clone());
        }
        match self.unordered.get_mut(&self.current) {
            Some(m) => m.increment(jump),
            None => {
                self.unordered.insert(self.current.clone(), MultiIndex::from_jumps([jump]));
            }
        }
        self.current.shift(jump).expect("jump dimension matches the walk");
        self.steps += 1;
    }

    /// Unordered history of the currently occupied site.
    pub fn local_unordered(&self) -> &MultiIndex {
        self.unordered_at(&self.current)
    }

    /// Unordered history of `site`; empty if it was never departed from.
    pub fn unordered_at(&self, site: &GroupElement) -> &MultiIndex {
        self.unordered.get(site).unwrap_or(&self.empty)
    }

    /// Ordered history of `site`, if ordered histories are retained.
    pub fn ordered_at(&self, site: &GroupElement) -> Option<&[GroupElement]> {
        self.ordered.as_ref().map(|o| o.get(site).map_or(&[][..], Vec::as_slice))
    }

    pub fn current_site(&self) -> &GroupElement {
        &self.current
    }

    pub fn step_count(&self) -> u64 {
        self.steps
    }

    /// Sites departed from at least once.
    pub fn departed_sites(&self) -> impl Iterator<Item = (&GroupElement, &MultiIndex)> + '_ {
        self.unordered.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(x: i64) -> GroupElement {
        GroupElement::scalar(x)
    }

    fn idx(pairs: &[(i64, u32)]) -> MultiIndex {
        MultiIndex::from_counts(pairs.iter().map(|&(g, n)| (s(g), n)))
    }

    fn replay(xs: &[i64]) -> HistoryTracker {
        let mut t = HistoryTracker::with_ordered(1);
        for &x in xs {
            t.record_step(&s(x));
        }
        t
    }

    #[test]
    fn first_step() {
        let t = replay(&[1]);
        assert_eq!(t.ordered_at(&s(0)).unwrap(), &[s(1)]);
        assert_eq!(t.unordered_at(&s(0)), &idx(&[(1, 1)]));
        assert_eq!(t.current_site(), &s(1));
        assert_eq!(t.step_count(), 1);
    }

    #[test]
    fn back_and_forth_trace() {
        let t = replay(&[1, -1, 1]);
        assert_eq!(t.ordered_at(&s(0)).unwrap(), &[s(1), s(1)]);
        assert_eq!(t.ordered_at(&s(1)).unwrap(), &[s(-1)]);
        assert_eq!(t.ordered_at(&s(7)).unwrap(), &[] as &[GroupElement]);
    }

    #[test]
    fn local_unordered_examples() {
        assert!(HistoryTracker::new(1).local_unordered().is_empty());
        assert_eq!(replay(&[1, -1]).local_unordered(), &idx(&[(1, 1)]));
        assert_eq!(replay(&[1, -1, 1, -1]).local_unordered(), &idx(&[(1, 2)]));
        // Visited but never departed: empty.
        assert!(replay(&[1]).local_unordered().is_empty());
    }

    #[test]
    fn ordered_histories_are_optional() {
        let mut t = HistoryTracker::new(1);
        t.record_step(&s(1));
        assert!(t.ordered_at(&s(0)).is_none());
    }

    /// Counts departures from `X_n` among the first `n` jumps, the slow way.
    fn brute_force_local(xs: &[i64], n: usize) -> MultiIndex {
        let pos: Vec<i64> = std::iter::once(0).chain(xs.iter().scan(0, |p, x| {
            *p += x;
            Some(*p)
        })).collect();
        let here = pos[n];
        let mut m = MultiIndex::new();
        for l in 0..n {
            if pos[l] == here {
                m.increment(&s(xs[l]));
            }
        }
        m
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn local_history_matches_recount(xs in prop::collection::vec(prop::sample::select(vec![-2i64, -1, 0, 1, 2]), 0..40)) {
            let mut t = HistoryTracker::with_ordered(1);
            for n in 0..=xs.len() {
                prop_assert_eq!(t.local_unordered(), &brute_force_local(&xs, n));
                if n < xs.len() {
                    t.record_step(&s(xs[n]));
                }
            }
            let mut total = 0;
            for (site, m) in t.departed_sites() {
                prop_assert_eq!(&MultiIndex::from_jumps(t.ordered_at(site).unwrap()), m);
                total += m.total();
            }
            prop_assert_eq!(total, t.step_count());
        }
    }
}
