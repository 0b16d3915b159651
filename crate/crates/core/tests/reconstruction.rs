use std::sync::Arc;

use proptest::prelude::*;
use rwre::estimator::{classify_r_t_empirical, ingest};
use rwre::fixtures::example1_laws;
use rwre::multi_index::enumerate_multi_indices;
use rwre::reconstruction::{
    analytic_moment_table, build_moment_table, cdf_bernstein, default_grid, moment_along_path,
    reconstruct_environment_law, MomentSource, ReconstructionParams, TableOracle, Verdict,
};
use rwre::walker::simulate_quenched;
use rwre::{EnvironmentLaw, EnvironmentLaw32, GroupElement, JumpSet, MultiIndex};

fn s(x: i64) -> GroupElement {
    GroupElement::scalar(x)
}

fn params(min_count: usize) -> ReconstructionParams<f64> {
    ReconstructionParams { max_total: 60, degree: 60, grid: Vec::new(), min_count }
}

#[test]
fn one_dirichlet_trajectory_recovers_beta_2_1() {
    let law = Arc::new(EnvironmentLaw::dirichlet(&[s(1), s(-1)], &[2.0, 1.0]).unwrap());
    let traj = simulate_quenched(&law, 41, 1_000_000);
    let state = ingest(&traj, None).unwrap();
    let rec = reconstruct_environment_law(&state, &classify_r_t_empirical(&traj), &params(200)).unwrap();
    assert_eq!(rec.verdict, Verdict::Complete);
    assert_eq!(rec.variables, vec![s(1)]);
    let cdf = rec.cdf.unwrap();
    let err = cdf.points.iter().map(|(a, v)| (v - a[0] * a[0]).abs()).fold(0.0, f64::max);
    assert!(err <= 0.08, "sup error {err} at effective degree {}", rec.effective_degree);
}

#[test]
fn two_transient_jumps_give_moments_only() {
    let (_, coin) = example1_laws();
    let traj = simulate_quenched(&Arc::new(coin), 42, 10_000);
    let state = ingest(&traj, None).unwrap();
    let rec = reconstruct_environment_law(&state, &classify_r_t_empirical(&traj), &params(30)).unwrap();
    assert_eq!(rec.verdict, Verdict::MomentsOnly);
    assert!(rec.cdf.is_none());
    // Only the fresh-site moments are identified, and they are the coin-flip ones.
    let m = rec.table.get(&MultiIndex::from_counts([(s(1), 1)])).unwrap();
    assert!((m - 0.5).abs() < 0.03, "{m}");
}

#[test]
fn uniform_environment_converges_with_degree() {
    // Dirichlet(1,1): ν_{+1} is uniform, its CDF is the identity.
    let law = EnvironmentLaw::dirichlet(&[s(1), s(-1)], &[1.0, 1.0]).unwrap();
    let table = analytic_moment_table(&law, law.jumps(), 160);
    let err = |d: u64| {
        default_grid::<f64>(1)
            .iter()
            .map(|a| (cdf_bernstein(&table, &[s(1)], a, d).unwrap() - a[0]).abs())
            .fold(0.0, f64::max)
    };
    let errors: Vec<f64> = [10, 20, 40, 80, 160].iter().map(|&d| err(d)).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[4] < 0.01, "{errors:?}");
}

#[test]
fn estimated_table_is_truncated_where_data_runs_out() {
    let mut oracle = TableOracle::new(JumpSet::scalars([-1, 1]));
    oracle.insert(MultiIndex::new(), vec![0.4, 0.6]);
    let rec = rwre::reconstruction::reconstruct_from_oracle(
        &oracle,
        &JumpSet::scalars([-1, 1]),
        &JumpSet::default(),
        MomentSource::Empirical,
        &params(1),
    )
    .unwrap();
    assert_eq!(rec.effective_degree, 1);
    assert!(rec.table.is_truncated());
    let cdf = rec.cdf.unwrap();
    // At degree one only k = 0 is admitted, so every value is E[1 - U] = E[ν_{-1}].
    assert!(cdf.points.iter().all(|(_, v)| (v - 0.4).abs() < 1e-12));
}

fn dirichlet_law() -> impl Strategy<Value = EnvironmentLaw> {
    (prop::sample::subsequence(vec![-2i64, -1, 0, 1, 2], 2..=3), prop::collection::vec(0.3f64..4.0, 3)).prop_map(
        |(xs, alphas)| {
            let jumps: Vec<GroupElement> = xs.iter().map(|&x| s(x)).collect();
            EnvironmentLaw::dirichlet(&jumps, &alphas[..jumps.len()]).unwrap()
        },
    )
}

proptest! {
    #[test]
    fn every_ordering_of_a_history_gives_its_moment(law in dirichlet_law(), total in 0u64..7, pick in any::<u64>(), perm in any::<u64>()) {
        let all = enumerate_multi_indices(law.jumps(), total);
        let n = &all[(pick % all.len() as u64) as usize];
        let mut path = n.to_jumps();
        let mut state = perm;
        for i in (1..path.len()).rev() {
            state = rwre::seed::mix64(state);
            path.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let along: f64 = moment_along_path(&law, &path).unwrap();
        prop_assert!((along - law.mixed_moment(n)).abs() <= 1e-12);
    }

    #[test]
    fn telescoped_table_matches_closed_form(law in dirichlet_law()) {
        let table = build_moment_table(&law, &enumerate_multi_indices(law.jumps(), 6), &JumpSet::default(), MomentSource::Analytic);
        for (n, m) in &table.entries {
            prop_assert!((m - law.mixed_moment(n)).abs() <= 1e-10);
        }
    }

    #[test]
    fn cdf_is_monotone_and_bounded(alphas in prop::collection::vec(0.3f64..4.0, 2), degree in 1u64..40) {
        let law = EnvironmentLaw::dirichlet(&[s(-1), s(1)], &alphas).unwrap();
        let table = analytic_moment_table(&law, law.jumps(), degree);
        let mut last = 0.0;
        for k in 1..=20 {
            let v = cdf_bernstein(&table, &[s(1)], &[k as f64 / 20.0], degree).unwrap();
            prop_assert!(v >= last - 1e-12 && v <= 1.0 + 1e-12, "{} after {}", v, last);
            last = v;
        }
        // At a = 1 every term but k = degree is admitted.
        let top = law.mixed_moment(&MultiIndex::from_counts([(s(1), degree as u32)]));
        prop_assert!((last - (1.0 - top)).abs() <= 1e-9);
    }

    #[test]
    fn single_precision_cdf_tracks_double(alphas in prop::collection::vec(0.5f64..3.0, 2), a in 0.05f64..1.0) {
        let jumps = [s(-1), s(1)];
        let wide = EnvironmentLaw::dirichlet(&jumps, &alphas).unwrap();
        let narrow = EnvironmentLaw32::dirichlet(&jumps, &[alphas[0] as f32, alphas[1] as f32]).unwrap();
        let x = cdf_bernstein(&analytic_moment_table(&wide, wide.jumps(), 20), &[s(1)], &[a], 20).unwrap();
        let y = cdf_bernstein(&analytic_moment_table(&narrow, narrow.jumps(), 20), &[s(1)], &[a as f32], 20).unwrap();
        prop_assert!((x - f64::from(y)).abs() < 1e-4, "{} vs {}", x, y);
    }
}
