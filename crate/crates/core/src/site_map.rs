//! Per-site storage. On `Z` sites are kept in a dense array that grows in both
//! directions; in higher dimensions a hash map is used.

use rustc_hash::FxHashMap;

use crate::lattice::GroupElement;

#[derive(Clone, Debug)]
pub(crate) enum SiteMap<V> {
    Line { origin: i64, slots: Vec<Option<V>>, len: usize },
    Grid(FxHashMap<GroupElement, V>),
}

impl<V> SiteMap<V> {
    pub fn new(dim: usize) -> Self {
        if dim == 1 {
            SiteMap::Line { origin: 0, slots: Vec::new(), len: 0 }
        } else {
            SiteMap::Grid(FxHashMap::default())
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SiteMap::Line { len, .. } => *len,
            SiteMap::Grid(m) => m.len(),
        }
    }

    fn slot(origin: i64, slots_len: usize, x: &GroupElement) -> Option<usize> {
        let i = x.coords()[0].checked_sub(origin)?;
        (i >= 0 && (i as usize) < slots_len).then_some(i as usize)
    }

    pub fn get(&self, x: &GroupElement) -> Option<&V> {
        match self {
            SiteMap::Line { origin, slots, .. } => slots[Self::slot(*origin, slots.len(), x)?].as_ref(),
            SiteMap::Grid(m) => m.get(x),
        }
    }

    /// The value at `x`, inserting `make()` first if absent.
    pub fn get_or_insert_with(&mut self, x: &GroupElement, make: impl FnOnce() -> V) -> &mut V {
        match self {
            SiteMap::Line { origin, slots, len } => {
                let c = x.coords()[0];
                if slots.is_empty() {
                    *origin = c;
                }
                if c < *origin {
                    let grow = ((*origin - c) as usize).max(slots.len());
                    let mut fresh: Vec<Option<V>> = Vec::with_capacity(grow + slots.len());
                    fresh.resize_with(grow, || None);
                    fresh.append(slots);
                    *slots = fresh;
                    *origin -= grow as i64;
                }
                let i = (c - *origin) as usize;
                if i >= slots.len() {
                    let target = (i + 1).max(2 * slots.len());
                    slots.resize_with(target, || None);
                }
                let slot = &mut slots[i];
                if slot.is_none() {
                    *len += 1;
                }
                slot.get_or_insert_with(make)
            }
            SiteMap::Grid(m) => {
                if !m.contains_key(x) {
                    m.insert(x.clone(), make());
                }
                m.get_mut(x).expect("just inserted")
            }
        }
    }

    pub fn insert(&mut self, x: &GroupElement, v: V) {
        let mut v = Some(v);
        let slot = self.get_or_insert_with(x, || v.take().expect("once"));
        if let Some(v) = v {
            *slot = v;
        }
    }

    #[cfg(test)]
    pub fn values(&self) -> Box<dyn Iterator<Item = &V> + '_> {
        match self {
            SiteMap::Line { slots, .. } => Box::new(slots.iter().flatten()),
            SiteMap::Grid(m) => Box::new(m.values()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    proptest! {
        #[test]
        fn agrees_with_a_btree_map(ops in prop::collection::vec((-50i64..50, 0u32..100), 0..200), dim in 1usize..3) {
            let mut map = SiteMap::new(dim);
            let mut oracle = BTreeMap::new();
            for (c, v) in ops {
                let x = GroupElement::new(std::iter::repeat_n(c, dim));
                map.insert(&x, v);
                oracle.insert(x, v);
            }
            prop_assert_eq!(map.len(), oracle.len());
            for (x, v) in &oracle {
                prop_assert_eq!(map.get(x), Some(v));
            }
            prop_assert_eq!(map.get(&GroupElement::new(std::iter::repeat_n(99, dim))), None);
            let mut got: Vec<u32> = map.values().copied().collect();
            let mut want: Vec<u32> = oracle.values().copied().collect();
            got.sort();
            want.sort();
            prop_assert_eq!(got, want);
        }
    }
}
