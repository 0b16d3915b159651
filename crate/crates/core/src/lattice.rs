//! Points and jumps of the integer lattice `Z^d`.
//!
//! Text form of an element is `[c_1,...,c_d]`, e.g. `[1,-2]`.

use std::fmt;
use std::ops::{Add, Neg};
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A site or a jump in `Z^d`.
///
/// Ordering is lexicographic on the coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    coords: SmallVec<[i64; 2]>,
}

impl GroupElement {
    pub fn new(coords: impl IntoIterator<Item = i64>) -> Self {
        Self { coords: coords.into_iter().collect() }
    }

    pub fn zero(dim: usize) -> Self {
        Self { coords: SmallVec::from_elem(0, dim) }
    }

    /// One-dimensional element.
    pub fn scalar(x: i64) -> Self {
        Self::new([x])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Sup norm.
    pub fn max_abs(&self) -> i64 {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect() })
    }

    /// Adds `jump` in place.
    pub fn shift(&mut self, jump: &Self) -> Result<()> {
        self.check_dim(jump)?;
        for (a, b) in self.coords.iter_mut().zip(&jump.coords) {
            *a += b;
        }
        Ok(())
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

impl Add for &GroupElement {
    type Output = GroupElement;

    /// Panics on dimension mismatch; use [`GroupElement::checked_add`] for untrusted input.
    fn add(self, rhs: &GroupElement) -> GroupElement {
        self.checked_add(rhs).expect("dimension mismatch")
    }
}

impl Neg for &GroupElement {
    type Output = GroupElement;

    fn neg(self) -> GroupElement {
        GroupElement { coords: self.coords.iter().map(|c| -c).collect() }
    }
}

impl Neg for GroupElement {
    type Output = GroupElement;

    fn neg(self) -> GroupElement {
        -&self
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for GroupElement {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| format!("expected `[c1,...,cd]`, got `{s}`"))?;
        if inner.trim().is_empty() {
            return Err("empty coordinate list".into());
        }
        inner
            .split(',')
            .map(|c| c.trim().parse::<i64>().map_err(|e| format!("bad coordinate `{c}`: {e}")))
            .collect::<std::result::Result<SmallVec<_>, _>>()
            .map(|coords| Self { coords })
    }
}

/// A finite set of distinct jumps, kept in canonical (lexicographic) order.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct JumpSet {
    jumps: Vec<GroupElement>,
}

impl JumpSet {
    /// Sorts and deduplicates; all jumps must share one dimension.
    pub fn new(jumps: impl IntoIterator<Item = GroupElement>) -> Result<Self> {
        let mut jumps: Vec<_> = jumps.into_iter().collect();
        if let Some(first) = jumps.first() {
            let d = first.dim();
            if let Some(bad) = jumps.iter().find(|j| j.dim() != d) {
                return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
            }
        }
        jumps.sort();
        jumps.dedup();
        Ok(Self { jumps })
    }

    /// Shorthand for one-dimensional jump sets.
    pub fn scalars(xs: impl IntoIterator<Item = i64>) -> Self {
        Self::new(xs.into_iter().map(GroupElement::scalar)).expect("1-d jumps")
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.jumps.first().map(GroupElement::dim)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GroupElement> {
        self.jumps.iter()
    }

    pub fn as_slice(&self) -> &[GroupElement] {
        &self.jumps
    }

    pub fn index_of(&self, jump: &GroupElement) -> Option<usize> {
        self.jumps.binary_search(jump).ok()
    }

    pub fn contains(&self, jump: &GroupElement) -> bool {
        self.index_of(jump).is_some()
    }

    pub fn get(&self, i: usize) -> Option<&GroupElement> {
        self.jumps.get(i)
    }

    pub fn is_subset(&self, other: &JumpSet) -> bool {
        self.jumps.iter().all(|j| other.contains(j))
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &JumpSet) -> JumpSet {
        JumpSet { jumps: self.jumps.iter().filter(|j| !other.contains(j)).cloned().collect() }
    }
}

impl fmt::Debug for JumpSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.jumps).finish()
    }
}

impl<'a> IntoIterator for &'a JumpSet {
    type Item = &'a GroupElement;
    type IntoIter = std::slice::Iter<'a, GroupElement>;

    fn into_iter(self) -> Self::IntoIter {
        self.jumps.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(c: &[i64]) -> GroupElement {
        GroupElement::new(c.iter().copied())
    }

    #[test]
    fn addition_examples() {
        assert_eq!(&g(&[0]) + &g(&[0]), g(&[0]));
        assert_eq!(&g(&[1, 2]) + &g(&[-1, 3]), g(&[0, 5]));
        assert_eq!(&g(&[2]) + &g(&[-2]), g(&[0]));
    }

    #[test]
    fn negation_examples() {
        assert_eq!(-g(&[0]), g(&[0]));
        assert_eq!(-g(&[3, -1]), g(&[-3, 1]));
        assert_eq!(-(-g(&[5])), g(&[5]));
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let err = g(&[1]).checked_add(&g(&[1, 2])).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 1, found: 2 });
        assert!(JumpSet::new([g(&[1]), g(&[1, 0])]).is_err());
    }

    #[test]
    fn text_form() {
        assert_eq!(g(&[1, -2]).to_string(), "[1,-2]");
        assert_eq!("[1,-2]".parse::<GroupElement>().unwrap(), g(&[1, -2]));
        assert_eq!(" [ 7 ] ".parse::<GroupElement>().unwrap(), g(&[7]));
        assert!("1,2".parse::<GroupElement>().is_err());
        assert!("[]".parse::<GroupElement>().is_err());
        assert!("[1,x]".parse::<GroupElement>().is_err());
    }

    #[test]
    fn jump_set_is_canonical() {
        let set = JumpSet::scalars([2, -1, 1, 2]);
        assert_eq!(set.as_slice(), &[g(&[-1]), g(&[1]), g(&[2])]);
        assert_eq!(set.index_of(&g(&[1])), Some(1));
        assert_eq!(set.index_of(&g(&[0])), None);
        assert_eq!(set.difference(&JumpSet::scalars([1])), JumpSet::scalars([-1, 2]));
    }

    fn element(d: usize) -> impl Strategy<Value = GroupElement> {
        prop::collection::vec(-1000i64..1000, d).prop_map(GroupElement::new)
    }

    proptest! {
        #[test]
        fn group_laws((a, b, c) in (1usize..4).prop_flat_map(|d| (element(d), element(d), element(d)))) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a + &GroupElement::zero(a.dim()), a.clone());
            prop_assert!((&a + &(-&a)).is_zero());
            prop_assert_eq!(a.to_string().parse::<GroupElement>().unwrap(), a);
        }
    }
}
