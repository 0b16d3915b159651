//! Replica trajectories built by re-threading the steps of one observed walk.
//!
//! Replica 1 uses the odd-numbered entries of each history stream, replica 2 the
//! even-numbered ones; each replica consults the stream of its *own* local
//! history. More replicas come from splitting replica 2 again, and so on. No
//! probability is ever evaluated: the construction only moves observed steps.

use rustc_hash::FxHashMap;

use crate::estimator::{ingest, EstimatorState};
use crate::lattice::GroupElement;
use crate::multi_index::MultiIndex;
use crate::site_map::SiteMap;
use crate::trajectory::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// Stream positions 1, 3, 5, ... (1-based).
    Odd,
    /// Stream positions 2, 4, 6, ...
    Even,
}

impl Parity {
    /// 0-based stream index of the `occurrence`-th (1-based) use of a history.
    pub fn stream_index(self, occurrence: usize) -> usize {
        match self {
            Parity::Odd => 2 * occurrence - 2,
            Parity::Even => 2 * occurrence - 1,
        }
    }
}

/// Read positions of one replica into the streams of a state.
#[derive(Clone, Debug)]
pub struct StreamCursor {
    parity: Parity,
    /// Uses so far, per history id of the source state.
    uses: Vec<u32>,
}

impl StreamCursor {
    pub fn new(parity: Parity, histories: usize) -> Self {
        Self { parity, uses: vec![0; histories] }
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Alphabet index of the next jump for history number `id`, or `None` when
    /// that stream is exhausted for this parity.
    fn next(&mut self, state: &EstimatorState, id: usize) -> Option<u16> {
        let occurrence = self.uses[id] as usize + 1;
        let code = state.stream_code(id, self.parity.stream_index(occurrence))?;
        self.uses[id] += 1;
        Some(code)
    }

    /// `(history, 0-based stream index)` of every consumed element, sorted.
    pub fn consumed(&self, state: &EstimatorState) -> Vec<(MultiIndex, usize)> {
        let mut out: Vec<_> = self
            .uses
            .iter()
            .enumerate()
            .flat_map(|(id, &k)| {
                let n = state.history(id).expect("id from this state");
                (1..=k as usize).map(move |i| (n.clone(), self.parity.stream_index(i)))
            })
            .collect();
        out.sort();
        out
    }
}

/// One extracted walk.
#[derive(Clone, Debug)]
pub struct Replica {
    pub trajectory: Trajectory,
    /// History whose stream ran out, if the walk stopped before `max_steps`.
    pub blocked_at: Option<MultiIndex>,
    pub cursor: StreamCursor,
}

impl Replica {
    pub fn truncated(&self) -> bool {
        self.blocked_at.is_some()
    }
}

/// Runs one replica of the given parity for at most `max_steps` steps.
pub fn extract(state: &EstimatorState, parity: Parity, max_steps: usize) -> Replica {
    let jumps = state.alphabet().as_slice();
    let mut cursor = StreamCursor::new(parity, state.num_histories());
    let mut trajectory = Trajectory::new(state.dim());
    let mut blocked_at = None;
    // The replica's own history at each departed site, as (source history id
    // before the last departure, that jump); successors are looked up in the source.
    let mut sites: SiteMap<(usize, u16)> = SiteMap::new(state.dim());
    let mut successor: FxHashMap<(usize, u16), Option<usize>> = FxHashMap::default();
    let empty = state.history_id(&MultiIndex::new());
    let mut here = GroupElement::zero(state.dim());
    while trajectory.len() < max_steps {
        let id = match sites.get(&here) {
            None => empty,
            Some(&(prev, code)) => *successor.entry((prev, code)).or_insert_with(|| {
                let n = state.history(prev).expect("interned").incremented(&jumps[code as usize]);
                state.history_id(&n)
            }),
        };
        let Some(code) = id.and_then(|id| cursor.next(state, id)) else {
            blocked_at = Some(match (id, sites.get(&here)) {
                (Some(id), _) => state.history(id).expect("interned").clone(),
                (None, None) => MultiIndex::new(),
                (None, Some(&(prev, code))) => state.history(prev).expect("interned").incremented(&jumps[code as usize]),
            });
            break;
        };
        let id = id.expect("stream found");
        sites.insert(&here, (id, code));
        let jump = &jumps[code as usize];
        here.shift(jump).expect("uniform dimension");
        trajectory.push(jump.clone());
    }
    Replica { trajectory, blocked_at, cursor }
}

/// The odd and even replicas of `state`.
pub fn extract_pair(state: &EstimatorState, max_steps: usize) -> (Replica, Replica) {
    (extract(state, Parity::Odd, max_steps), extract(state, Parity::Even, max_steps))
}

/// `k` replicas by repeated splitting: `traj -> (X1, X2)`, `X2 -> (X3, X4)`,
/// `X4 -> (X5, X6)`, ..., returning `X1, X3, X5, ...`.
///
/// `max_steps` caps the returned replicas; the even walks that feed the next
/// split are extracted in full.
pub fn extract_many(traj: &Trajectory, k: usize, max_steps: usize) -> Vec<Replica> {
    let mut out = Vec::with_capacity(k);
    let mut source = traj.clone();
    for _ in 0..k {
        let state = ingest(&source, None).expect("no declared alphabet to violate");
        out.push(extract(&state, Parity::Odd, max_steps));
        if out.len() == k {
            break;
        }
        source = extract(&state, Parity::Even, usize::MAX).trajectory;
    }
    out
}
