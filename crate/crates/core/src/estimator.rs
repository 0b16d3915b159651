//! Single-trajectory inference.
//!
//! Every step of the observed walk is filed under the unordered history of the
//! site it departs from. Within one history the filed jumps form an iid sequence
//! whose law is the reinforcement `V(history)`, and different histories are
//! independent; frequencies within a stream are therefore unbiased estimates of
//! `V`, unlike frequencies collected per site.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use rustc_hash::{FxBuildHasher, FxHashMap};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::lattice::{GroupElement, JumpSet};
use crate::multi_index::MultiIndex;
use crate::scalar::Scalar;
use crate::site_map::SiteMap;
use crate::trajectory::Trajectory;

/// Jumps stored as indices into the alphabet.
type Stream = SmallVec<[u16; 8]>;

/// Per-history streams of next jumps, in order of occurrence.
///
/// Histories are numbered in order of first departure; only histories from
/// which the walk departed at least once are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorState {
    dim: usize,
    alphabet: JumpSet,
    streams: IndexMap<MultiIndex, Stream, FxBuildHasher>,
    source_length: u64,
}

/// Files every step of `traj` under the local unordered history before the step.
///
/// With `declared`, jumps outside it are rejected and it becomes the estimate's
/// alphabet; otherwise the alphabet is the set of observed jumps.
pub fn ingest(traj: &Trajectory, declared: Option<&JumpSet>) -> Result<EstimatorState> {
    let alphabet = match declared {
        Some(set) => {
            traj.check_alphabet(set)?;
            set.clone()
        }
        None => traj.alphabet(),
    };
    assert!(alphabet.len() <= usize::from(u16::MAX), "alphabet too large");
    let mut streams: IndexMap<MultiIndex, Stream, FxBuildHasher> = IndexMap::default();
    // Each departed site remembers (history id before its last departure, that jump).
    let mut sites: SiteMap<(u32, u16)> = SiteMap::new(traj.dim());
    let mut empty = None;
    let mut successor: FxHashMap<(u32, u16), u32> = FxHashMap::default();
    let mut here = GroupElement::zero(traj.dim());
    for jump in traj.jumps() {
        let code = alphabet.index_of(jump).expect("checked against the alphabet") as u16;
        let id = match sites.get(&here) {
            None => *empty.get_or_insert_with(|| intern(&mut streams, MultiIndex::new())),
            Some(&(prev, last)) => *successor.entry((prev, last)).or_insert_with(|| {
                let (key, _) = streams.get_index(prev as usize).expect("interned");
                let next = key.incremented(&alphabet.as_slice()[last as usize]);
                intern(&mut streams, next) as u32
            }) as usize,
        };
        streams[id].push(code);
        sites.insert(&here, (id as u32, code));
        here.shift(jump)?;
    }
    Ok(EstimatorState { dim: traj.dim(), alphabet, streams, source_length: traj.len() as u64 })
}

fn intern(streams: &mut IndexMap<MultiIndex, Stream, FxBuildHasher>, key: MultiIndex) -> usize {
    match streams.get_index_of(&key) {
        Some(i) => i,
        None => streams.insert_full(key, Stream::new()).0,
    }
}

impl EstimatorState {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet(&self) -> &JumpSet {
        &self.alphabet
    }

    pub fn source_length(&self) -> u64 {
        self.source_length
    }

    pub fn history_id(&self, n: &MultiIndex) -> Option<usize> {
        self.streams.get_index_of(n)
    }

    pub fn history(&self, id: usize) -> Option<&MultiIndex> {
        self.streams.get_index(id).map(|(k, _)| k)
    }

    /// The stream `Δ_1, Δ_2, ...` for history `n`.
    pub fn stream(&self, n: &MultiIndex) -> Option<Vec<GroupElement>> {
        self.streams.get(n).map(|s| s.iter().map(|&c| self.alphabet.as_slice()[c as usize].clone()).collect())
    }

    /// `i`-th (0-based) entry of the stream of history number `id`.
    pub fn stream_entry(&self, id: usize, i: usize) -> Option<&GroupElement> {
        let (_, s) = self.streams.get_index(id)?;
        s.get(i).map(|&c| &self.alphabet.as_slice()[c as usize])
    }

    /// Alphabet index of the `i`-th (0-based) entry of the stream of history number `id`.
    pub fn stream_code(&self, id: usize, i: usize) -> Option<u16> {
        let (_, s) = self.streams.get_index(id)?;
        s.get(i).copied()
    }

    pub fn stream_len(&self, n: &MultiIndex) -> usize {
        self.streams.get(n).map_or(0, |s| s.len())
    }

    pub fn num_histories(&self) -> usize {
        self.streams.len()
    }

    /// Occurrences of each alphabet jump in the stream of `n`.
    pub fn jump_counts(&self, n: &MultiIndex) -> Option<Vec<u64>> {
        let s = self.streams.get(n)?;
        let mut counts = vec![0u64; self.alphabet.len()];
        for &c in s {
            counts[c as usize] += 1;
        }
        Some(counts)
    }

    /// All histories with their streams, in canonical history order.
    pub fn streams_sorted(&self) -> Vec<(&MultiIndex, Vec<GroupElement>)> {
        let mut keys: Vec<&MultiIndex> = self.streams.keys().collect();
        keys.sort();
        keys.into_iter().map(|k| (k, self.stream(k).expect("present"))).collect()
    }

    /// Appends the streams of an independent trajectory of the same walk.
    ///
    /// Only whole-trajectory states may be merged; splitting one trajectory and
    /// merging the parts would mislabel histories.
    pub fn merge(&mut self, other: EstimatorState) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let alphabet =
            JumpSet::new(self.alphabet.iter().chain(other.alphabet.iter()).cloned()).expect("same dimension");
        let recode = |from: &JumpSet| -> Vec<u16> {
            from.iter().map(|g| alphabet.index_of(g).expect("union") as u16).collect()
        };
        let (mine, theirs) = (recode(&self.alphabet), recode(&other.alphabet));
        for s in self.streams.values_mut() {
            for c in s.iter_mut() {
                *c = mine[*c as usize];
            }
        }
        for (k, s) in other.streams {
            self.streams.entry(k).or_default().extend(s.iter().map(|&c| theirs[c as usize]));
        }
        self.alphabet = alphabet;
        self.source_length += other.source_length;
        Ok(())
    }

    /// Stream frequencies for history `n`.
    pub fn empirical_v<T: Scalar>(&self, n: &MultiIndex) -> Result<VEstimate<T>> {
        let counts = self.jump_counts(n).ok_or_else(|| Error::NoObservations(n.clone()))?;
        let count: u64 = counts.iter().sum();
        let probs = counts.iter().map(|&c| T::count(c) / T::count(count)).collect();
        Ok(VEstimate { history: n.clone(), jumps: self.alphabet.clone(), probs, count })
    }

    /// Histories observed at least `min_count` times, sorted by total then lexicographically.
    pub fn observed_histories(&self, min_count: usize) -> Vec<MultiIndex> {
        let mut v: Vec<MultiIndex> =
            self.streams.iter().filter(|(_, s)| s.len() >= min_count.max(1)).map(|(k, _)| k.clone()).collect();
        v.sort();
        v
    }
}

/// Estimated reinforcement at one history.
#[derive(Clone, Debug, PartialEq)]
pub struct VEstimate<T> {
    pub history: MultiIndex,
    pub jumps: JumpSet,
    /// Aligned with `jumps`.
    pub probs: Vec<T>,
    pub count: u64,
}

impl<T: Scalar> VEstimate<T> {
    pub fn prob(&self, g: &GroupElement) -> T {
        self.jumps.index_of(g).map_or(T::zero(), |i| self.probs[i])
    }

    /// Binomial standard errors `sqrt(p(1-p)/count)`.
    pub fn standard_errors(&self) -> Vec<T> {
        let n = T::count(self.count);
        self.probs.iter().map(|&p| (p * (T::one() - p) / n).sqrt()).collect()
    }
}

/// Observed split of the jumps into returning (`r`) and non-returning (`t`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalClassification {
    pub r: JumpSet,
    pub t: JumpSet,
    /// Number of certified returns per jump in `r`.
    pub evidence: BTreeMap<GroupElement, u64>,
}

/// A jump `g` taken at time `n` is certified returning when the walk is back at
/// `X_n` at some later time. Only certified jumps enter `r`, so `r` never
/// contains a jump that cannot return.
pub fn classify_r_t_empirical(traj: &Trajectory) -> EmpiricalClassification {
    let positions = traj.positions();
    let mut last_visit: SiteMap<usize> = SiteMap::new(traj.dim());
    for (n, x) in positions.iter().enumerate() {
        last_visit.insert(x, n);
    }
    let mut evidence: BTreeMap<GroupElement, u64> = BTreeMap::new();
    for (n, jump) in traj.jumps().iter().enumerate() {
        if last_visit.get(&positions[n]).is_some_and(|&last| last > n) {
            *evidence.entry(jump.clone()).or_insert(0) += 1;
        }
    }
    let r = JumpSet::new(evidence.keys().cloned()).expect("uniform dimension");
    let t = traj.alphabet().difference(&r);
    EmpiricalClassification { r, t, evidence }
}

/// Departure frequencies out of one site.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteEstimate<T> {
    pub site: GroupElement,
    pub jumps: JumpSet,
    pub probs: Vec<T>,
    pub count: u64,
}

/// Frequencies of the jumps taken out of `site`. A consistent estimate of the
/// environment at `site` only when the walk is recurrent.
pub fn estimate_site_environment<T: Scalar>(traj: &Trajectory, site: &GroupElement) -> Result<SiteEstimate<T>> {
    let jumps = traj.alphabet();
    let mut counts = vec![0u64; jumps.len()];
    let mut here = GroupElement::zero(traj.dim());
    for j in traj.jumps() {
        if &here == site {
            counts[jumps.index_of(j).expect("from alphabet")] += 1;
        }
        here.shift(j)?;
    }
    let count: u64 = counts.iter().sum();
    if count == 0 {
        return Err(Error::NeverDeparted(site.clone()));
    }
    let probs = counts.iter().map(|&c| T::count(c) / T::count(count)).collect();
    Ok(SiteEstimate { site: site.clone(), jumps, probs, count })
}

/// Per-site frequency estimate of `E[ν_jump]` from sites visited at least
/// `min_visits` times: the mean over those sites of their departure frequency.
///
/// This is biased for transient walks; it is kept as a baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct NaiveEstimate<T> {
    pub mean: T,
    /// Standard error of the mean across sites.
    pub se: T,
    pub sites: usize,
}

pub fn naive_site_frequency<T: Scalar>(traj: &Trajectory, jump: &GroupElement, min_visits: u64) -> Option<NaiveEstimate<T>> {
    let positions = traj.positions();
    let mut visits: FxHashMap<&GroupElement, u64> = FxHashMap::default();
    for x in &positions {
        *visits.entry(x).or_insert(0) += 1;
    }
    // (departures, departures along `jump`) per site
    let mut tallies: FxHashMap<&GroupElement, (u64, u64)> = FxHashMap::default();
    for (n, j) in traj.jumps().iter().enumerate() {
        let t = tallies.entry(&positions[n]).or_insert((0, 0));
        t.0 += 1;
        t.1 += u64::from(j == jump);
    }
    let freqs: Vec<T> = tallies
        .iter()
        .filter(|(x, _)| visits[*x] >= min_visits)
        .map(|(_, &(n, k))| T::count(k) / T::count(n))
        .collect();
    if freqs.len() < 2 {
        return None;
    }
    let m = T::count(freqs.len() as u64);
    let mean = freqs.iter().copied().sum::<T>() / m;
    let var = freqs.iter().map(|&f| (f - mean) * (f - mean)).sum::<T>() / (m - T::one());
    Some(NaiveEstimate { mean, se: (var / m).sqrt(), sites: freqs.len() })
}

/// Descriptive statistics for judging recurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceReport {
    /// Fraction of times `1..=L` at which the walk stands on a previously visited site.
    pub revisit_fraction: f64,
    /// Largest number of times `0..=L` spent on one site.
    pub max_visits: u64,
    pub distinct_sites: usize,
}

pub fn recurrence_diagnostic(traj: &Trajectory) -> RecurrenceReport {
    let mut visits: FxHashMap<GroupElement, u64> = FxHashMap::default();
    let mut revisits = 0u64;
    for (n, x) in traj.positions().into_iter().enumerate() {
        let v = visits.entry(x).or_insert(0);
        if n > 0 && *v > 0 {
            revisits += 1;
        }
        *v += 1;
    }
    RecurrenceReport {
        revisit_fraction: if traj.is_empty() { 0.0 } else { revisits as f64 / traj.len() as f64 },
        max_visits: visits.values().copied().max().unwrap_or(0),
        distinct_sites: visits.len(),
    }
}

/// Counts of consecutive departures `(g, h)` from the same site: `h` was the
/// next jump taken out of a site whose previous departure was `g`.
pub fn same_site_successions(traj: &Trajectory) -> BTreeMap<(GroupElement, GroupElement), u64> {
    let mut last: FxHashMap<GroupElement, GroupElement> = FxHashMap::default();
    let mut out = BTreeMap::new();
    let mut here = GroupElement::zero(traj.dim());
    for j in traj.jumps() {
        if let Some(prev) = last.insert(here.clone(), j.clone()) {
            *out.entry((prev, j.clone())).or_insert(0) += 1;
        }
        here.shift(j).expect("uniform dimension");
    }
    out
}
