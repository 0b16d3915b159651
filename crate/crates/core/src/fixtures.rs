//! The two walks on `Z` with `card T = 2` used as reference fixtures.
//!
//! Example 1: a deterministic environment `(1/2, 1/2)` on `{+1, +2}` and a
//! coin-tossed environment (all mass on `+1` or all on `+2`). The walks have
//! the same law, so no single trajectory can tell the two environment laws apart.
//!
//! Example 2: with probability 1/2 a site stays put or moves `+1` with
//! probability 1/2 each, otherwise it moves `+2`. Here the law is identified
//! from one trajectory by run-length statistics of the `0` jumps.

use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::environment::EnvironmentLaw;
use crate::estimator::{classify_r_t_empirical, ingest, same_site_successions};
use crate::lattice::{GroupElement, JumpSet};
use crate::multi_index::MultiIndex;
use crate::seed::derive_seed;
use crate::statlab::{chisq_gof, chisq_homogeneity, tv_distance, CountTable};
use crate::trajectory::Trajectory;
use crate::walker::simulate_quenched;

const ALPHA: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureReport {
    pub name: &'static str,
    pub steps: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Named estimates, in a fixed order.
    pub values: Vec<(String, f64)>,
}

impl FixtureReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    fn check(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(Check { name, passed, detail });
    }
}

fn s(x: i64) -> GroupElement {
    GroupElement::scalar(x)
}

/// (deterministic, coin-tossed)
pub fn example1_laws() -> (EnvironmentLaw<f64>, EnvironmentLaw<f64>) {
    let jumps = [s(1), s(2)];
    let det = EnvironmentLaw::deterministic(&jumps, vec![0.5, 0.5]).expect("valid law");
    let coin = EnvironmentLaw::mixture(&jumps, &[(0.5, vec![1.0, 0.0]), (0.5, vec![0.0, 1.0])]).expect("valid law");
    (det, coin)
}

pub fn example2_law() -> EnvironmentLaw<f64> {
    EnvironmentLaw::mixture(&[s(0), s(1), s(2)], &[(0.5, vec![0.5, 0.5, 0.0]), (0.5, vec![0.0, 0.0, 1.0])])
        .expect("valid law")
}

pub fn run_example1(seed: u64, steps: usize) -> FixtureReport {
    let (det, coin) = example1_laws();
    let a = simulate_quenched(&Arc::new(det), derive_seed(seed, "example1/deterministic"), steps);
    let b = simulate_quenched(&Arc::new(coin), derive_seed(seed, "example1/coin"), steps);
    let mut report = FixtureReport { name: "example1", steps, seed, checks: Vec::new(), values: Vec::new() };

    let jumps = JumpSet::scalars([1, 2]);
    let fresh = |t: &Trajectory| -> Vec<u64> {
        let state = ingest(t, Some(&jumps)).expect("alphabet");
        state.jump_counts(&MultiIndex::new()).unwrap_or_else(|| vec![0; jumps.len()])
    };
    let (ca, cb) = (fresh(&a), fresh(&b));
    let freq = |c: &[u64]| -> Vec<f64> {
        let n: u64 = c.iter().sum();
        c.iter().map(|&k| k as f64 / n.max(1) as f64).collect()
    };
    let (pa, pb) = (freq(&ca), freq(&cb));
    report.values.push(("deterministic.V(0).[1]".into(), pa[0]));
    report.values.push(("coin.V(0).[1]".into(), pb[0]));

    match chisq_homogeneity::<f64>(&ca, &cb) {
        Ok(test) => {
            report.values.push(("chisq.pvalue".into(), test.pvalue));
            report.check("same fresh-site law", !test.rejects(ALPHA), format!("chi-square {:.3}, p = {:.4}", test.stat, test.pvalue));
        }
        Err(e) => report.check("same fresh-site law", false, e.to_string()),
    }
    let tv = tv_distance(&pa, &pb).unwrap_or(1.0);
    report.values.push(("tv".into(), tv));
    report.check("first-step TV <= 0.01", tv <= 0.01, format!("TV = {tv:.5}"));

    for (label, t) in [("deterministic", &a), ("coin", &b)] {
        let c = classify_r_t_empirical(t);
        let ok = c.r.is_empty() && c.t == jumps;
        let name = if label == "coin" { "coin: T = {1,2}" } else { "deterministic: T = {1,2}" };
        report.check(name, ok, format!("R = {}, T = {}", fmt_set(&c.r), fmt_set(&c.t)));
    }
    report
}

/// Jumps taken out of each departed site, in order; the site still occupied at
/// the end of the trajectory is dropped when its last departure was a `0`
/// (or it never departed), since its sequence may be incomplete.
fn completed_departures(traj: &Trajectory) -> Vec<Vec<GroupElement>> {
    let mut order: Vec<GroupElement> = Vec::new();
    let mut seqs: FxHashMap<GroupElement, Vec<GroupElement>> = FxHashMap::default();
    let mut here = GroupElement::zero(traj.dim());
    for j in traj.jumps() {
        seqs.entry(here.clone())
            .or_insert_with(|| {
                order.push(here.clone());
                Vec::new()
            })
            .push(j.clone());
        here.shift(j).expect("uniform dimension");
    }
    order
        .into_iter()
        .filter_map(|x| seqs.remove(&x))
        .filter(|seq| seq.last().is_some_and(|g| !g.is_zero()))
        .collect()
}

pub fn run_example2(seed: u64, steps: usize) -> FixtureReport {
    let traj = simulate_quenched(&Arc::new(example2_law()), derive_seed(seed, "example2"), steps);
    let mut report = FixtureReport { name: "example2", steps, seed, checks: Vec::new(), values: Vec::new() };

    let c = classify_r_t_empirical(&traj);
    report.check(
        "R = {0}, T = {1,2}",
        c.r == JumpSet::scalars([0]) && c.t == JumpSet::scalars([1, 2]),
        format!("R = {}, T = {}", fmt_set(&c.r), fmt_set(&c.t)),
    );

    let succ = same_site_successions(&traj);
    let zero_two = succ.get(&(s(0), s(2))).copied().unwrap_or(0);
    report.values.push(("successions.[0]->[2]".into(), zero_two as f64));
    report.check("no 0 -> 2 succession", zero_two == 0, format!("{zero_two} occurrences"));

    let seqs = completed_departures(&traj);
    let (mut zeros_before_one, mut ones, mut twos) = (Vec::new(), 0u64, 0u64);
    for seq in &seqs {
        let zeros = seq.iter().take_while(|g| g.is_zero()).count() as u64;
        match seq.last().and_then(|g| g.coords().first().copied()) {
            Some(1) => {
                ones += 1;
                zeros_before_one.push(zeros);
            }
            Some(2) => twos += 1,
            _ => {}
        }
    }
    let visited = ones + twos;
    if visited == 0 || ones == 0 {
        report.check("enough completed sites", false, format!("{visited} sites"));
        return report;
    }

    // Geometric run length P(j zeros) = a^j (1 - a) among sites that leave by +1.
    let total_zeros: u64 = zeros_before_one.iter().sum();
    let a_hat = total_zeros as f64 / (total_zeros + ones) as f64;
    report.values.push(("a".into(), a_hat));
    report.check("a = 0.5 +- 0.02", (a_hat - 0.5).abs() <= 0.02, format!("a = {a_hat:.4} from {ones} sites"));

    let max_run = 12u64;
    let runs = CountTable::from_samples(zeros_before_one.iter().map(|&j| j.min(max_run)));
    let labels: Vec<u64> = (0..=max_run).collect();
    let observed = CountTable { counts: labels.iter().map(|j| runs.get(j)).collect(), labels };
    let geo: Vec<f64> = (0..=max_run)
        .map(|j| if j < max_run { a_hat.powi(j as i32) * (1.0 - a_hat) } else { a_hat.powi(max_run as i32) })
        .collect();
    match chisq_gof(&observed, &geo) {
        Ok(test) => report.check(
            "0-run lengths are geometric",
            !test.rejects(ALPHA),
            format!("chi-square {:.3} on {} dof, p = {:.4}", test.stat, test.dof, test.pvalue),
        ),
        Err(e) => report.check("0-run lengths are geometric", false, e.to_string()),
    }

    // Sites with at least one 0 fix a from the runs beyond the first 0 alone;
    // the share of 0-capable sites that leave at once must then be 1 - a.
    let with_zero: Vec<u64> = zeros_before_one.iter().filter(|&&j| j > 0).map(|&j| j - 1).collect();
    let n_zero = with_zero.len() as f64;
    let extra: u64 = with_zero.iter().sum();
    let a_tail = extra as f64 / (extra as f64 + n_zero);
    let n_direct = zeros_before_one.iter().filter(|&&j| j == 0).count() as f64;
    let p_direct = n_direct / (n_direct + n_zero);
    let var = p_direct * (1.0 - p_direct) / (n_direct + n_zero) + a_tail * (1.0 - a_tail).powi(2) / n_zero;
    let z = (p_direct - (1.0 - a_tail)) / var.sqrt();
    report.values.push(("direct_one_share".into(), p_direct));
    report.values.push(("predicted_direct_one_share".into(), 1.0 - a_tail));
    report.check(
        "direct +1 share matches 1 - a",
        z.abs() <= 3.0,
        format!("observed {p_direct:.4}, predicted {:.4}, z = {z:.2}", 1.0 - a_tail),
    );

    let w1 = ones as f64 / visited as f64;
    let w2 = twos as f64 / visited as f64;
    report.values.push(("weight.stay_or_step".into(), w1));
    report.values.push(("weight.jump_two".into(), w2));
    report.check(
        "weights = 0.5 +- 0.03",
        (w1 - 0.5).abs() <= 0.03 && (w2 - 0.5).abs() <= 0.03,
        format!("{w1:.4} / {w2:.4} over {visited} sites"),
    );
    report
}

fn fmt_set(set: &JumpSet) -> String {
    let items: Vec<String> = set.iter().map(|g| g.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completed_departures_drop_the_open_site() {
        let t = Trajectory::scalars([0, 0, 1, 2, 0]);
        let seqs = completed_departures(&t);
        assert_eq!(seqs, vec![vec![s(0), s(0), s(1)], vec![s(2)]]);
    }

    #[test]
    fn small_runs_pass() {
        assert!(run_example1(3, 50_000).passed());
        let r = run_example2(3, 50_000);
        assert!(r.checks.iter().any(|c| c.name == "no 0 -> 2 succession" && c.passed));
        assert_eq!(r.value("successions.[0]->[2]"), Some(0.0));
    }
}
