//! From reinforcement values to moments of the environment law, and from
//! moments to CDF values.
//!
//! Rearranging the moment ratio gives `E[ν_e ∏ν^n] = V_e(n) · E[∏ν^n]`, so every
//! mixed moment over the returning jumps telescopes from `M(0) = 1` along a
//! chain of single increments. Moments carrying one non-returning jump are
//! available as terminal entries. CDF values then follow from the multinomial
//! (Bernstein) partial sums of the Hausdorff moment problem.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::environment::SiteLaw;
use crate::error::{Error, Result};
use crate::estimator::{EmpiricalClassification, EstimatorState};
use crate::lattice::{GroupElement, JumpSet};
use crate::multi_index::{enumerate_multi_indices, MultiIndex};
use crate::scalar::Scalar;
use crate::walker::ReinforcementOracle;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentSource {
    Analytic,
    Empirical,
}

/// Mixed moments `E[∏_g ν_g^{n_g}]` indexed by multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable<T> {
    /// Jumps whose powers may be arbitrary (the returning jumps).
    pub jumps: JumpSet,
    /// Jumps that appear at most once, in terminal entries.
    pub terminal_jumps: JumpSet,
    pub entries: BTreeMap<MultiIndex, T>,
    pub terminal: BTreeSet<MultiIndex>,
    pub source: MomentSource,
    /// Histories at which the reinforcement was unavailable, so the table stops there.
    pub missing: BTreeSet<MultiIndex>,
}

impl<T: Scalar> MomentTable<T> {
    pub fn get(&self, n: &MultiIndex) -> Option<T> {
        self.entries.get(n).copied()
    }

    pub fn max_total(&self) -> u64 {
        self.entries.keys().map(MultiIndex::total).max().unwrap_or(0)
    }

    pub fn is_truncated(&self) -> bool {
        !self.missing.is_empty()
    }

    /// Largest `D` such that every index over `jumps` with total `<= D` is present.
    pub fn complete_degree(&self) -> u64 {
        let mut d = 0;
        let top = self.max_total();
        loop {
            if d >= top {
                return d;
            }
            let next = enumerate_multi_indices(&self.jumps, d + 1);
            if next.iter().any(|n| !self.entries.contains_key(n)) {
                return d;
            }
            d += 1;
        }
    }
}

/// Product of `V_{e_i}(e_1 + ... + e_{i-1})` along the given increments.
pub fn moment_along_path<T: Scalar, O: ReinforcementOracle<T> + ?Sized>(
    oracle: &O,
    increments: &[GroupElement],
) -> Result<T> {
    let mut n = MultiIndex::new();
    let mut m = T::one();
    for e in increments {
        m = m * oracle.reinforcement(&n)?.prob(e);
        n.increment(e);
    }
    Ok(m)
}

/// Builds `M(n)` for every requested `n` (and the predecessors its chain needs)
/// along the canonical path: `n` extends `n - δ_e` where `e` is the
/// lexicographically largest jump of `n`. For each stored `n` and each
/// `t ∈ jumps_t`, the terminal entry `M(n + δ_t) = V_t(n) M(n)` is added.
pub fn build_moment_table<T: Scalar, O: ReinforcementOracle<T> + ?Sized>(
    oracle: &O,
    histories: &[MultiIndex],
    jumps_t: &JumpSet,
    source: MomentSource,
) -> MomentTable<T> {
    let mut requested: Vec<&MultiIndex> = histories.iter().collect();
    requested.sort();
    let jumps = JumpSet::new(histories.iter().flat_map(|n| n.support().cloned())).expect("uniform dimension");

    let mut entries: BTreeMap<MultiIndex, T> = BTreeMap::new();
    let mut missing = BTreeSet::new();
    let mut vcache: FxHashMap<MultiIndex, Option<SiteLaw<T>>> = FxHashMap::default();
    let mut v_at = |p: &MultiIndex, missing: &mut BTreeSet<MultiIndex>| -> Option<SiteLaw<T>> {
        vcache
            .entry(p.clone())
            .or_insert_with(|| match oracle.reinforcement(p) {
                Ok(v) => Some(v),
                Err(_) => {
                    missing.insert(p.clone());
                    None
                }
            })
            .clone()
    };

    entries.insert(MultiIndex::new(), T::one());
    for n in requested {
        if entries.contains_key(n) {
            continue;
        }
        // Walk down the canonical chain to the deepest stored ancestor, then back up.
        let mut chain = vec![n.clone()];
        while let Some(prev) = chain.last().and_then(|m| m.decremented(m.last_jump().expect("nonempty"))) {
            if entries.contains_key(&prev) {
                break;
            }
            chain.push(prev);
        }
        for m in chain.iter().rev() {
            let e = m.last_jump().expect("nonempty").clone();
            let prev = m.decremented(&e).expect("count positive");
            let Some(&base) = entries.get(&prev) else { break };
            let Some(v) = v_at(&prev, &mut missing) else { break };
            entries.insert(m.clone(), v.prob(&e) * base);
        }
    }

    let mut terminal = BTreeSet::new();
    if !jumps_t.is_empty() {
        let bases: Vec<(MultiIndex, T)> = entries.iter().map(|(k, v)| (k.clone(), *v)).collect();
        for (n, base) in bases {
            let Some(v) = v_at(&n, &mut missing) else { continue };
            for t in jumps_t {
                let key = n.incremented(t);
                entries.insert(key.clone(), v.prob(t) * base);
                terminal.insert(key);
            }
        }
    }

    MomentTable { jumps, terminal_jumps: jumps_t.clone(), entries, terminal, source, missing }
}

/// Exact mixed moments of a known law, for comparison and for oracle tables.
pub fn analytic_moment_table<T: Scalar>(
    law: &crate::environment::EnvironmentLaw<T>,
    jumps: &JumpSet,
    max_total: u64,
) -> MomentTable<T> {
    let entries = enumerate_multi_indices(jumps, max_total).into_iter().map(|n| {
        let m = law.mixed_moment(&n);
        (n, m)
    });
    MomentTable {
        jumps: jumps.clone(),
        terminal_jumps: JumpSet::default(),
        entries: entries.collect(),
        terminal: BTreeSet::new(),
        source: MomentSource::Analytic,
        missing: BTreeSet::new(),
    }
}

/// `ln k!` for `k = 0..=n`, by summing logarithms.
fn ln_factorials<T: Scalar>(n: u64) -> Vec<T> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = T::zero();
    out.push(acc);
    for k in 1..=n {
        acc = acc + T::count(k).ln();
        out.push(acc);
    }
    out
}

/// `n! / (n - Σk)! ∏ k_i!` as an exact integer, or `None` on overflow.
fn multinomial(n: u64, ks: &[u64]) -> Option<u128> {
    // Product of binomials, each built up exactly: C(m, j) = C(m, j-1) (m-j+1) / j.
    let mut out: u128 = 1;
    let mut m = n;
    for &k in ks {
        let mut c: u128 = 1;
        for j in 1..=k {
            c = c.checked_mul(u128::from(m - j + 1))? / u128::from(j);
        }
        out = out.checked_mul(c)?;
        m -= k;
    }
    Some(out)
}

/// Up to this degree the approximation is summed directly with integer coefficients.
const EXACT_DEGREE: u64 = 30;

fn coefficient<T: Scalar>(n: u64, ks: &[u64], lnf: &[T]) -> T {
    match multinomial(n, ks).and_then(T::from_u128) {
        Some(c) if c.is_finite() => c,
        _ => {
            let used: u64 = ks.iter().sum();
            (lnf[n as usize] - lnf[(n - used) as usize] - ks.iter().map(|&k| lnf[k as usize]).sum::<T>()).exp()
        }
    }
}

/// Visits every `(k_1, ..., k_l)` with `Σ k_i <= n` and each `k_i` admitted by `admit(i, k_i)`.
fn for_each_composition(l: usize, n: u64, admit: &dyn Fn(usize, u64) -> bool, f: &mut dyn FnMut(&[u64])) {
    fn rec(i: usize, rest: u64, ks: &mut Vec<u64>, l: usize, admit: &dyn Fn(usize, u64) -> bool, f: &mut dyn FnMut(&[u64])) {
        if i == l {
            f(ks);
            return;
        }
        for k in 0..=rest {
            if !admit(i, k) {
                // Admissibility is a prefix condition in k.
                break;
            }
            ks.push(k);
            rec(i + 1, rest - k, ks, l, admit, f);
            ks.pop();
        }
    }
    rec(0, n, &mut Vec::with_capacity(l), l, admit, f);
}

/// `E[(1 - Σ U_i)^{k0} ∏ U_i^{k_i}]` from the table, with `U_i = ν_{variables[i]}`.
fn complement_moment<T: Scalar>(
    table: &MomentTable<T>,
    variables: &[GroupElement],
    complement: Option<&GroupElement>,
    k0: u64,
    ks: &[u64],
    lnf: &[T],
) -> Result<T> {
    let base = MultiIndex::from_counts(variables.iter().cloned().zip(ks.iter().map(|&k| k as u32)));
    let lookup = |n: &MultiIndex| table.get(n).ok_or_else(|| Error::InsufficientTable(n.clone()));
    if k0 == 0 {
        return lookup(&base);
    }
    if let Some(c) = complement {
        let mut n = base;
        n.add(c, k0 as u32);
        return lookup(&n);
    }
    // (1 - ΣU)^{k0} = Σ_j k0!/(j_0! j_1! ... j_l!) (-1)^{|j|} ∏ U_i^{j_i}
    let mut sum = T::zero();
    let mut err = None;
    for_each_composition(variables.len(), k0, &|_, _| true, &mut |js| {
        if err.is_some() {
            return;
        }
        let used: u64 = js.iter().sum();
        let coef = coefficient(k0, js, lnf);
        let mut n = base.clone();
        for (g, &j) in variables.iter().zip(js) {
            n.add(g, j as u32);
        }
        match lookup(&n) {
            Ok(m) => {
                let term = coef * m;
                sum = if used % 2 == 0 { sum + term } else { sum - term };
            }
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(sum),
    }
}

/// The single jump that completes `variables` to a probability vector, if the
/// table has one: no terminal jumps and exactly one non-variable jump.
fn complement_jump<'a, T>(table: &'a MomentTable<T>, variables: &[GroupElement]) -> Option<&'a GroupElement> {
    if !table.terminal_jumps.is_empty() {
        return None;
    }
    let mut rest = table.jumps.iter().filter(|g| !variables.contains(g));
    match (rest.next(), rest.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

/// Degree-`degree` multinomial approximation of `P(U_1 < a_1, ..., U_l < a_l)`:
///
/// `Σ_{k_0+...+k_l = n, k_i/n < a_i} n!/(k_0!...k_l!) E[(1 - ΣU)^{k_0} ∏ U_i^{k_i}]`.
///
/// When the table's jumps are exactly `variables` plus one more jump `c` (and no
/// terminal jumps), `1 - ΣU = ν_c` and the expectations are read off directly;
/// otherwise the complement power is expanded into an alternating sum of stored
/// moments, which loses precision at high degree.
pub fn cdf_bernstein<T: Scalar>(table: &MomentTable<T>, variables: &[GroupElement], a: &[T], degree: u64) -> Result<T> {
    if variables.is_empty() || variables.len() != a.len() {
        return Err(Error::Domain(format!("{} variables but {} thresholds", variables.len(), a.len())));
    }
    if let Some(bad) = a.iter().find(|&&x| !(x > T::zero() && x <= T::one())) {
        return Err(Error::Domain(format!("threshold {bad} outside (0, 1]")));
    }
    if degree == 0 {
        return Err(Error::Domain("degree must be positive".into()));
    }
    let lnf = ln_factorials::<T>(degree);
    let complement = complement_jump(table, variables);
    let n_t = T::count(degree);
    let admit = |i: usize, k: u64| T::count(k) / n_t < a[i];
    let mut err = None;
    if degree <= EXACT_DEGREE {
        let mut sum = T::zero();
        for_each_composition(variables.len(), degree, &admit, &mut |ks| {
            if err.is_some() {
                return;
            }
            let k0 = degree - ks.iter().sum::<u64>();
            match complement_moment(table, variables, complement, k0, ks, &lnf) {
                Ok(m) => sum = sum + coefficient(degree, ks, &lnf) * m,
                Err(e) => err = Some(e),
            }
        });
        return err.map_or(Ok(sum), Err);
    }

    // Positive and negative parts accumulated in log space with a running max shift.
    let mut terms: Vec<(T, T)> = Vec::new();
    for_each_composition(variables.len(), degree, &admit, &mut |ks| {
        if err.is_some() {
            return;
        }
        let used: u64 = ks.iter().sum();
        let k0 = degree - used;
        let ln_coef = lnf[degree as usize] - lnf[k0 as usize] - ks.iter().map(|&k| lnf[k as usize]).sum::<T>();
        match complement_moment(table, variables, complement, k0, ks, &lnf) {
            Ok(m) if m != T::zero() => terms.push((ln_coef + m.abs().ln(), m.signum())),
            Ok(_) => {}
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let shift = terms.iter().map(|t| t.0).fold(T::neg_infinity(), T::max);
    if shift == T::neg_infinity() {
        return Ok(T::zero());
    }
    let scaled: T = terms.iter().map(|&(l, s)| s * (l - shift).exp()).sum();
    Ok(scaled * shift.exp())
}

/// CDF values on a grid of threshold vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfGrid<T> {
    pub variables: Vec<GroupElement>,
    pub degree: u64,
    pub points: Vec<(Vec<T>, T)>,
}

pub fn cdf_grid<T: Scalar>(
    table: &MomentTable<T>,
    variables: &[GroupElement],
    grid: &[Vec<T>],
    degree: u64,
) -> Result<CdfGrid<T>> {
    let points = grid
        .iter()
        .map(|a| cdf_bernstein(table, variables, a, degree).map(|v| (a.clone(), v)))
        .collect::<Result<_>>()?;
    Ok(CdfGrid { variables: variables.to_vec(), degree, points })
}

/// Default thresholds for `l` variables: `{0.1, ..., 0.9}` without the dyadic 0.5, as a product grid.
pub fn default_grid<T: Scalar>(l: usize) -> Vec<Vec<T>> {
    let axis: Vec<T> = [0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9].iter().map(|&x| T::lit(x)).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..l {
        out = out
            .into_iter()
            .flat_map(|p| axis.iter().map(move |&x| [p.clone(), vec![x]].concat()))
            .collect();
    }
    out
}

/// Reinforcement values looked up from a finite table (e.g. estimated stream frequencies).
#[derive(Clone, Debug)]
pub struct TableOracle<T> {
    jumps: Arc<JumpSet>,
    values: FxHashMap<MultiIndex, Vec<T>>,
}

impl<T: Scalar> TableOracle<T> {
    pub fn new(jumps: JumpSet) -> Self {
        Self { jumps: Arc::new(jumps), values: FxHashMap::default() }
    }

    /// `probs` aligned with the oracle's jumps.
    pub fn insert(&mut self, n: MultiIndex, probs: Vec<T>) {
        self.values.insert(n, probs);
    }

    /// Stream frequencies of every history observed at least `min_count` times.
    pub fn from_state(state: &EstimatorState, min_count: usize) -> Self {
        let mut oracle = Self::new(state.alphabet().clone());
        for n in state.observed_histories(min_count) {
            let v = state.empirical_v::<T>(&n).expect("observed");
            oracle.insert(n, v.probs);
        }
        oracle
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<T: Scalar> ReinforcementOracle<T> for TableOracle<T> {
    fn reinforcement(&self, history: &MultiIndex) -> Result<SiteLaw<T>> {
        self.values
            .get(history)
            .map(|p| SiteLaw::from_parts_unchecked(self.jumps.clone(), p.clone()))
            .ok_or_else(|| Error::NoObservations(history.clone()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// At most one non-returning jump: the trajectory determines the law of the environment.
    Complete,
    /// Two or more non-returning jumps: only the moments are determined.
    MomentsOnly,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Complete => "complete",
            Verdict::MomentsOnly => "moments-only",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionParams<T> {
    pub max_total: u64,
    pub degree: u64,
    /// Empty means [`default_grid`].
    pub grid: Vec<Vec<T>>,
    pub min_count: usize,
}

#[derive(Clone, Debug)]
pub struct Reconstruction<T> {
    pub table: MomentTable<T>,
    pub verdict: Verdict,
    /// Jumps whose joint CDF is reported (the first returning jump is expressed
    /// through the others when there is no non-returning jump).
    pub variables: Vec<GroupElement>,
    /// Degree actually used: the requested one capped by the table's complete degree.
    pub effective_degree: u64,
    pub cdf: Option<CdfGrid<T>>,
    /// Why no CDF was produced, when `cdf` is `None`.
    pub note: Option<String>,
}

/// Estimated reinforcement -> moment table -> CDF grid, for an ingested trajectory.
pub fn reconstruct_environment_law<T: Scalar>(
    state: &EstimatorState,
    classification: &EmpiricalClassification,
    params: &ReconstructionParams<T>,
) -> Result<Reconstruction<T>> {
    let oracle = TableOracle::<T>::from_state(state, params.min_count);
    reconstruct_from_oracle(&oracle, &classification.r, &classification.t, MomentSource::Empirical, params)
}

pub fn reconstruct_from_oracle<T: Scalar, O: ReinforcementOracle<T> + ?Sized>(
    oracle: &O,
    r: &JumpSet,
    t: &JumpSet,
    source: MomentSource,
    params: &ReconstructionParams<T>,
) -> Result<Reconstruction<T>> {
    let histories = enumerate_multi_indices(r, params.max_total);
    let mut table = build_moment_table(oracle, &histories, t, source);
    table.jumps = r.clone();

    let verdict = if t.len() <= 1 { Verdict::Complete } else { Verdict::MomentsOnly };
    let variables: Vec<GroupElement> = match t.len() {
        0 => r.iter().skip(1).cloned().collect(),
        1 => r.as_slice().to_vec(),
        _ => Vec::new(),
    };
    let effective_degree = params.degree.min(table.complete_degree());

    let note = if verdict == Verdict::MomentsOnly {
        Some("two or more non-returning jumps: the environment law is not identified".to_string())
    } else if variables.is_empty() {
        Some("environment is degenerate: no free variables".to_string())
    } else if variables.len() > 2 {
        Some(format!("CDF grids are limited to two variables, found {}", variables.len()))
    } else if effective_degree == 0 {
        Some("moment table is empty beyond degree 0".to_string())
    } else {
        None
    };

    let cdf = if note.is_none() {
        let grid = if params.grid.is_empty() { default_grid(variables.len()) } else { params.grid.clone() };
        if let Some(bad) = grid.iter().find(|p| p.len() != variables.len()) {
            return Err(Error::Config(format!(
                "grid point has {} coordinates, expected {}",
                bad.len(),
                variables.len()
            )));
        }
        Some(cdf_grid(&table, &variables, &grid, effective_degree)?)
    } else {
        None
    };
    Ok(Reconstruction { table, verdict, variables, effective_degree, cdf, note })
}
