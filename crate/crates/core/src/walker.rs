//! Walk simulation: the quenched walk in a sampled environment, and the
//! edge-oriented reinforced walk driven by a reinforcement function of the
//! local unordered history. With `V` the moment ratio of the law, both
//! produce the same annealed law.

use std::cell::RefCell;
use std::sync::Arc;

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::environment::{inverse_cdf, Environment, EnvironmentLaw, SiteLaw};
use crate::error::Result;
use crate::history::HistoryTracker;
use crate::multi_index::MultiIndex;
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng_from_seed, SimRng};
pub use crate::trajectory::Trajectory;

/// A reinforcement function: unordered history -> law of the next jump.
pub trait ReinforcementOracle<T> {
    fn reinforcement(&self, history: &MultiIndex) -> Result<SiteLaw<T>>;
}

impl<T: Scalar> ReinforcementOracle<T> for EnvironmentLaw<T> {
    fn reinforcement(&self, history: &MultiIndex) -> Result<SiteLaw<T>> {
        self.analytic_v_law(history)
    }
}

impl<T, F> ReinforcementOracle<T> for F
where
    F: Fn(&MultiIndex) -> Result<SiteLaw<T>>,
{
    fn reinforcement(&self, history: &MultiIndex) -> Result<SiteLaw<T>> {
        self(history)
    }
}

/// Memoizes an oracle per history. Not `Sync`; use one per thread.
pub struct CachedOracle<T, O> {
    inner: O,
    cache: RefCell<FxHashMap<MultiIndex, SiteLaw<T>>>,
}

impl<T, O> CachedOracle<T, O> {
    pub fn new(inner: O) -> Self {
        Self { inner, cache: RefCell::new(FxHashMap::default()) }
    }
}

impl<T: Clone, O: ReinforcementOracle<T>> ReinforcementOracle<T> for CachedOracle<T, O> {
    fn reinforcement(&self, history: &MultiIndex) -> Result<SiteLaw<T>> {
        if let Some(v) = self.cache.borrow().get(history) {
            return Ok(v.clone());
        }
        let v = self.inner.reinforcement(history)?;
        self.cache.borrow_mut().insert(history.clone(), v.clone());
        Ok(v)
    }
}

/// Annealed walk: draws an environment from `law` and runs `steps` Markov moves in it.
///
/// Environment and walk use the `"environment"` and `"walk"` sub-streams of `seed`.
pub fn simulate_quenched<T: Scalar>(law: &Arc<EnvironmentLaw<T>>, seed: u64, steps: usize) -> Trajectory {
    let mut env = Environment::new(law.clone(), derive_seed(seed, "environment"));
    let mut rng = rng_from_seed(derive_seed(seed, "walk"));
    simulate_in_environment(&mut env, &mut rng, steps)
}

/// Quenched walk in a given environment.
pub fn simulate_in_environment<T: Scalar>(env: &mut Environment<T>, rng: &mut SimRng, steps: usize) -> Trajectory {
    let jumps = env.law().shared_jumps().clone();
    let dim = jumps.dim().expect("law has jumps");
    let mut traj = Trajectory::new(dim);
    let mut here = crate::lattice::GroupElement::zero(dim);
    for _ in 0..steps {
        let u = T::lit(rng.random::<f64>());
        let i = inverse_cdf(env.site_probs(&here), u);
        let jump = &jumps.as_slice()[i];
        here.shift(jump).expect("same dimension");
        traj.push(jump.clone());
    }
    traj
}

/// Reinforced walk: each jump is drawn from `oracle(local unordered history)`.
///
/// Fails with the offending history if the oracle rejects one.
pub fn simulate_reinforced<T: Scalar, O: ReinforcementOracle<T> + ?Sized>(
    oracle: &O,
    dim: usize,
    seed: u64,
    steps: usize,
) -> Result<Trajectory> {
    let mut rng = rng_from_seed(derive_seed(seed, "walk"));
    let mut tracker = HistoryTracker::new(dim);
    let mut traj = Trajectory::new(dim);
    for _ in 0..steps {
        let law = oracle.reinforcement(tracker.local_unordered())?;
        let u = T::lit(rng.random::<f64>());
        let jump = law.jumps().as_slice()[law.sample_index(u)].clone();
        tracker.record_step(&jump);
        traj.push(jump);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::lattice::{GroupElement, JumpSet};
    use crate::seed::indexed_seed;

    fn s(x: i64) -> GroupElement {
        GroupElement::scalar(x)
    }

    #[test]
    fn deterministic_drift() {
        let law = Arc::new(EnvironmentLaw::<f64>::deterministic(&[s(1)], vec![1.0]).unwrap());
        assert_eq!(simulate_quenched(&law, 1, 5), Trajectory::scalars([1; 5]));
        assert!(simulate_quenched(&law, 1, 0).is_empty());
    }

    #[test]
    fn seeds_reproduce_bit_for_bit() {
        let law = Arc::new(EnvironmentLaw::dirichlet(&[s(1), s(-1)], &[2.0, 1.0]).unwrap());
        assert_eq!(simulate_quenched(&law, 42, 500), simulate_quenched(&law, 42, 500));
        assert_ne!(simulate_quenched(&law, 42, 500), simulate_quenched(&law, 43, 500));
        let a = simulate_reinforced(law.as_ref(), 1, 42, 500).unwrap();
        assert_eq!(a, simulate_reinforced(law.as_ref(), 1, 42, 500).unwrap());
    }

    #[test]
    fn first_jump_of_fair_two_step_law() {
        let law = Arc::new(EnvironmentLaw::deterministic(&[s(1), s(2)], vec![0.5, 0.5]).unwrap());
        let ones = (0..10_000).filter(|&i| simulate_quenched(&law, indexed_seed(5, i), 1).jumps()[0] == s(1)).count();
        assert!((ones as f64 / 1e4 - 0.5).abs() < 0.02, "{ones}");
    }

    #[test]
    fn constant_oracle_drifts() {
        let jumps = Arc::new(JumpSet::scalars([-1, 1]));
        let oracle = |_: &MultiIndex| SiteLaw::<f64>::point_mass(jumps.clone(), &s(1));
        assert_eq!(simulate_reinforced(&oracle, 1, 0, 6).unwrap(), Trajectory::scalars([1; 6]));
    }

    #[test]
    fn dirichlet_first_step_probability() {
        let law = EnvironmentLaw::dirichlet(&[s(1), s(-1)], &[2.0, 1.0]).unwrap();
        let oracle = CachedOracle::new(law.clone());
        let ups = (0..10_000)
            .filter(|&i| simulate_reinforced(&oracle, 1, indexed_seed(9, i), 1).unwrap().jumps()[0] == s(1))
            .count();
        assert!((ups as f64 / 1e4 - 2.0 / 3.0).abs() < 0.02, "{ups}");
    }

    #[test]
    fn mixture_reinforcement_after_return() {
        // Condition on the walk leaving the origin by +1 and coming back: the
        // next departure from the origin is +1 with probability 0.82.
        let law = EnvironmentLaw::mixture(&[s(-1), s(1)], &[(0.5, vec![0.9, 0.1]), (0.5, vec![0.1, 0.9])]).unwrap();
        let oracle = CachedOracle::new(law.clone());
        let (mut hits, mut events) = (0u32, 0u32);
        for i in 0..40_000 {
            let t = simulate_reinforced(&oracle, 1, indexed_seed(11, i), 3).unwrap();
            if t.jumps()[0] == s(1) && t.jumps()[1] == s(-1) {
                events += 1;
                hits += u32::from(t.jumps()[2] == s(1));
            }
        }
        let p = f64::from(hits) / f64::from(events);
        assert!(events > 5_000);
        assert!((p - 0.82).abs() < 0.03, "{p} over {events}");
    }

    #[test]
    fn impossible_history_aborts_with_the_history() {
        let jumps = Arc::new(JumpSet::scalars([-1, 1]));
        let oracle = |n: &MultiIndex| {
            if n.is_empty() {
                SiteLaw::<f64>::point_mass(jumps.clone(), &s(1))
            } else {
                Err(Error::ImpossibleHistory(n.clone()))
            }
        };
        // Fresh sites only while drifting right; never revisits, so no error.
        assert!(simulate_reinforced(&oracle, 1, 0, 10).is_ok());
        let oracle2 = |n: &MultiIndex| {
            if n.is_empty() {
                SiteLaw::new(jumps.clone(), vec![0.5f64, 0.5])
            } else {
                Err(Error::ImpossibleHistory(n.clone()))
            }
        };
        match simulate_reinforced(&oracle2, 1, 0, 1000) {
            Err(Error::ImpossibleHistory(n)) => assert_eq!(n.total(), 1),
            other => panic!("expected an impossible history, got {other:?}"),
        }
    }
}
