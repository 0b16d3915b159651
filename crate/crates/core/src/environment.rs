//! Site environments: the law `μ` of the transition vector at one site, iid
//! per-site sampling, closed-form mixed moments, and the reinforcement
//! function those moments induce on unordered histories.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::lattice::{GroupElement, JumpSet};
pub use crate::multi_index::MultiIndex;
use crate::scalar::{log_sum_exp, Scalar};
use crate::seed::{rng_from_seed, site_seed};
use crate::site_map::SiteMap;

/// Transition probabilities out of one site, dense over a shared [`JumpSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct SiteLaw<T> {
    jumps: Arc<JumpSet>,
    probs: Vec<T>,
}

impl<T: Scalar> SiteLaw<T> {
    /// `probs` is aligned with the canonical order of `jumps`.
    pub fn new(jumps: Arc<JumpSet>, probs: Vec<T>) -> Result<Self> {
        check_probability_vector(&probs, jumps.len())?;
        Ok(Self { jumps, probs })
    }

    pub fn point_mass(jumps: Arc<JumpSet>, jump: &GroupElement) -> Result<Self> {
        let i = jumps
            .index_of(jump)
            .ok_or_else(|| Error::InvalidLaw(format!("{jump} is not a declared jump")))?;
        let mut probs = vec![T::zero(); jumps.len()];
        probs[i] = T::one();
        Ok(Self { jumps, probs })
    }

    pub(crate) fn from_parts_unchecked(jumps: Arc<JumpSet>, probs: Vec<T>) -> Self {
        Self { jumps, probs }
    }

    pub fn jumps(&self) -> &JumpSet {
        &self.jumps
    }

    pub fn shared_jumps(&self) -> &Arc<JumpSet> {
        &self.jumps
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// Probability of `jump`; zero outside the jump set.
    pub fn prob(&self, jump: &GroupElement) -> T {
        self.jumps.index_of(jump).map_or(T::zero(), |i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, T)> + '_ {
        self.jumps.iter().zip(self.probs.iter().copied())
    }

    /// Inverse-CDF draw over the canonical jump order, `u` uniform on `[0, 1)`.
    pub fn sample_index(&self, u: T) -> usize {
        inverse_cdf(&self.probs, u)
    }
}

pub(crate) fn inverse_cdf<T: Scalar>(probs: &[T], u: T) -> usize {
    let mut acc = T::zero();
    for (i, &p) in probs.iter().enumerate() {
        acc = acc + p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` above the accumulated mass: take the last supported jump.
    probs.iter().rposition(|&p| p > T::zero()).unwrap_or(0)
}

fn check_probability_vector<T: Scalar>(probs: &[T], len: usize) -> Result<()> {
    if probs.len() != len {
        return Err(Error::InvalidLaw(format!("expected {len} probabilities, got {}", probs.len())));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < T::zero()) {
        return Err(Error::InvalidLaw("probabilities must be finite and nonnegative".into()));
    }
    let sum: T = probs.iter().copied().sum();
    if (sum - T::one()).abs() > T::unit_sum_tol() {
        return Err(Error::InvalidLaw(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureAtom<T> {
    pub weight: T,
    /// Aligned with the canonical jump order.
    pub probs: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LawKind<T> {
    /// Finitely many atoms with weights.
    Mixture(Vec<MixtureAtom<T>>),
    /// Dirichlet with the given concentration per jump (canonical order).
    Dirichlet(Vec<T>),
}

/// The common law `μ` of the site environments.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentLaw<T> {
    jumps: Arc<JumpSet>,
    kind: LawKind<T>,
}

/// Puts values given in caller order into canonical jump order.
fn canonicalize<T: Copy>(jumps: &[GroupElement], values: &[T]) -> Result<(JumpSet, Vec<T>)> {
    if jumps.is_empty() {
        return Err(Error::InvalidLaw("no jumps declared".into()));
    }
    if values.len() != jumps.len() {
        return Err(Error::InvalidLaw(format!(
            "expected {} values aligned with the jumps, got {}",
            jumps.len(),
            values.len()
        )));
    }
    let set = JumpSet::new(jumps.iter().cloned())?;
    if set.len() != jumps.len() {
        return Err(Error::InvalidLaw("duplicate jumps".into()));
    }
    let mut out = vec![values[0]; jumps.len()];
    for (g, &v) in jumps.iter().zip(values) {
        out[set.index_of(g).expect("member")] = v;
    }
    Ok((set, out))
}

impl<T: Scalar> EnvironmentLaw<T> {
    /// Finite mixture; each atom's probabilities are aligned with `jumps` as given.
    pub fn mixture(jumps: &[GroupElement], atoms: &[(T, Vec<T>)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidLaw("mixture needs at least one atom".into()));
        }
        let mut canonical = Vec::with_capacity(atoms.len());
        let mut set = JumpSet::default();
        for (w, p) in atoms {
            let (s, probs) = canonicalize(jumps, p)?;
            check_probability_vector(&probs, s.len())?;
            if !w.is_finite() || *w < T::zero() {
                return Err(Error::InvalidLaw("mixture weights must be nonnegative".into()));
            }
            set = s;
            canonical.push(MixtureAtom { weight: *w, probs });
        }
        let total: T = canonical.iter().map(|a| a.weight).sum();
        if (total - T::one()).abs() > T::unit_sum_tol() {
            return Err(Error::InvalidLaw(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self { jumps: Arc::new(set), kind: LawKind::Mixture(canonical) })
    }

    /// Non-random environment: every site carries `probs`.
    pub fn deterministic(jumps: &[GroupElement], probs: Vec<T>) -> Result<Self> {
        Self::mixture(jumps, &[(T::one(), probs)])
    }

    /// Dirichlet law; `alphas` aligned with `jumps` as given.
    pub fn dirichlet(jumps: &[GroupElement], alphas: &[T]) -> Result<Self> {
        let (set, alphas) = canonicalize(jumps, alphas)?;
        if alphas.iter().any(|a| !a.is_finite() || *a <= T::zero()) {
            return Err(Error::InvalidLaw("Dirichlet concentrations must be positive".into()));
        }
        Ok(Self { jumps: Arc::new(set), kind: LawKind::Dirichlet(alphas) })
    }

    pub fn jumps(&self) -> &JumpSet {
        &self.jumps
    }

    pub fn shared_jumps(&self) -> &Arc<JumpSet> {
        &self.jumps
    }

    pub fn kind(&self) -> &LawKind<T> {
        &self.kind
    }

    /// The set `E` of jumps with `P(ν_g > 0) > 0`.
    pub fn support(&self) -> JumpSet {
        let keep: Vec<GroupElement> = match &self.kind {
            LawKind::Dirichlet(_) => self.jumps.as_slice().to_vec(),
            LawKind::Mixture(atoms) => self
                .jumps
                .iter()
                .enumerate()
                .filter(|(i, _)| atoms.iter().any(|a| a.weight > T::zero() && a.probs[*i] > T::zero()))
                .map(|(_, g)| g.clone())
                .collect(),
        };
        JumpSet::new(keep).expect("subset of a valid set")
    }

    /// Mean of `ν_g` for every jump, canonical order.
    pub fn mean(&self) -> Vec<T> {
        match &self.kind {
            LawKind::Mixture(atoms) => (0..self.jumps.len())
                .map(|i| atoms.iter().map(|a| a.weight * a.probs[i]).sum())
                .collect(),
            LawKind::Dirichlet(alphas) => {
                let total: T = alphas.iter().copied().sum();
                alphas.iter().map(|&a| a / total).collect()
            }
        }
    }

    /// Dense exponent vector of `n`, or `None` if `n` uses an undeclared jump.
    fn exponents(&self, n: &MultiIndex) -> Option<Vec<u32>> {
        let mut e = vec![0u32; self.jumps.len()];
        for (g, c) in n.iter() {
            e[self.jumps.index_of(g)?] = c;
        }
        Some(e)
    }

    /// `E[∏_g ν_g^{n_g}]` in closed form; zero for indices outside the law's jumps.
    pub fn mixed_moment(&self, n: &MultiIndex) -> T {
        let Some(exps) = self.exponents(n) else {
            return T::zero();
        };
        match &self.kind {
            LawKind::Mixture(atoms) => atoms
                .iter()
                .map(|a| {
                    a.probs
                        .iter()
                        .zip(&exps)
                        .fold(a.weight, |acc, (&p, &k)| acc * p.powi(k as i32))
                })
                .sum(),
            LawKind::Dirichlet(alphas) => {
                // ∏_g (α_g)^(n_g) / (Σα)^(Σn): numerator and denominator have the same
                // number of factors, so take the ratios pairwise to stay in range.
                let total_alpha: T = alphas.iter().copied().sum();
                let numer = alphas
                    .iter()
                    .zip(&exps)
                    .flat_map(|(&a, &k)| (0..k).map(move |j| a + T::count(u64::from(j))));
                numer
                    .enumerate()
                    .fold(T::one(), |acc, (j, x)| acc * x / (total_alpha + T::count(j as u64)))
            }
        }
    }

    /// `ln E[∏_g ν_g^{n_g}]`; `-inf` when the moment vanishes.
    pub fn log_mixed_moment(&self, n: &MultiIndex) -> T {
        let Some(exps) = self.exponents(n) else {
            return T::neg_infinity();
        };
        match &self.kind {
            LawKind::Mixture(atoms) => log_sum_exp(atoms.iter().filter(|a| a.weight > T::zero()).map(|a| {
                a.probs.iter().zip(&exps).fold(a.weight.ln(), |acc, (&p, &k)| {
                    if k == 0 {
                        acc
                    } else {
                        acc + T::count(u64::from(k)) * p.ln()
                    }
                })
            })),
            LawKind::Dirichlet(alphas) => {
                let total_alpha: T = alphas.iter().copied().sum();
                let numer: T = alphas
                    .iter()
                    .zip(&exps)
                    .flat_map(|(&a, &k)| (0..k).map(move |j| (a + T::count(u64::from(j))).ln()))
                    .sum();
                let denom: T = (0..n.total()).map(|j| (total_alpha + T::count(j)).ln()).sum();
                numer - denom
            }
        }
    }

    /// Reinforcement probability `E[ν_e ∏ν^n] / E[∏ν^n]` of jumping along `e`
    /// after the unordered history `n`.
    pub fn analytic_v(&self, n: &MultiIndex, e: &GroupElement) -> Result<T> {
        let direct = self.mixed_moment(n);
        if direct.is_normal() && direct > T::epsilon() {
            return Ok(self.mixed_moment(&n.incremented(e)) / direct);
        }
        // Deep histories underflow; fall back to the log ratio.
        let base = self.log_mixed_moment(n);
        if base == T::neg_infinity() {
            return Err(Error::ImpossibleHistory(n.clone()));
        }
        let num = self.log_mixed_moment(&n.incremented(e));
        Ok(if num == T::neg_infinity() { T::zero() } else { (num - base).exp() })
    }

    /// The whole vector `V(n)` as a site law over the law's jumps.
    pub fn analytic_v_law(&self, n: &MultiIndex) -> Result<SiteLaw<T>> {
        let probs = self.jumps.iter().map(|e| self.analytic_v(n, e)).collect::<Result<Vec<_>>>()?;
        Ok(SiteLaw::from_parts_unchecked(self.jumps.clone(), probs))
    }

    /// Draws the environment of one site; deterministic in `(master_seed, site)`.
    pub fn draw_site(&self, master_seed: u64, site: &GroupElement) -> SiteDraw<T> {
        let mut rng = rng_from_seed(site_seed(master_seed, site));
        match &self.kind {
            LawKind::Mixture(atoms) => {
                let weights: Vec<T> = atoms.iter().map(|a| a.weight).collect();
                let u = T::lit(rng.random::<f64>());
                SiteDraw::Atom(inverse_cdf(&weights, u) as u32)
            }
            LawKind::Dirichlet(alphas) => {
                let draws: Vec<f64> = alphas
                    .iter()
                    .map(|a| {
                        let a = a.to_f64().expect("finite");
                        Gamma::new(a, 1.0).expect("positive shape").sample(&mut rng)
                    })
                    .collect();
                let sum: f64 = draws.iter().sum();
                let probs = if sum > 0.0 {
                    draws.iter().map(|x| T::lit(x / sum)).collect()
                } else {
                    // Every gamma variate underflowed (tiny concentrations).
                    let best = alphas
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
                        .map_or(0, |(i, _)| i);
                    (0..alphas.len()).map(|i| if i == best { T::one() } else { T::zero() }).collect()
                };
                SiteDraw::Probs(probs)
            }
        }
    }

    fn draw_probs<'a>(&'a self, draw: &'a SiteDraw<T>) -> &'a [T] {
        match (draw, &self.kind) {
            (SiteDraw::Atom(k), LawKind::Mixture(atoms)) => &atoms[*k as usize].probs,
            (SiteDraw::Probs(p), _) => p,
            (SiteDraw::Atom(_), LawKind::Dirichlet(_)) => unreachable!("atoms only come from mixtures"),
        }
    }
}

/// What was drawn at a site: an atom index (mixtures) or a probability vector.
#[derive(Clone, Debug, PartialEq)]
pub enum SiteDraw<T> {
    Atom(u32),
    Probs(Vec<T>),
}

/// A realized iid environment, materialized lazily site by site.
#[derive(Clone, Debug)]
pub struct Environment<T> {
    law: Arc<EnvironmentLaw<T>>,
    master_seed: u64,
    realized: SiteMap<SiteDraw<T>>,
}

impl<T: Scalar> Environment<T> {
    pub fn new(law: Arc<EnvironmentLaw<T>>, master_seed: u64) -> Self {
        let dim = law.jumps().dim().unwrap_or(1);
        Self { law, master_seed, realized: SiteMap::new(dim) }
    }

    pub fn law(&self) -> &EnvironmentLaw<T> {
        &self.law
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Number of sites materialized so far.
    pub fn materialized(&self) -> usize {
        self.realized.len()
    }

    /// Transition probabilities at `site` in canonical jump order.
    pub fn site_probs(&mut self, site: &GroupElement) -> &[T] {
        let law = &self.law;
        if let LawKind::Mixture(atoms) = &law.kind {
            if atoms.len() == 1 {
                return &atoms[0].probs;
            }
        }
        let seed = self.master_seed;
        law.draw_probs(self.realized.get_or_insert_with(site, || law.draw_site(seed, site)))
    }

    pub fn sample_site_law(&mut self, site: &GroupElement) -> SiteLaw<T> {
        let probs = self.site_probs(site).to_vec();
        SiteLaw::from_parts_unchecked(self.law.shared_jumps().clone(), probs)
    }
}

/// Split of the jump set `E` into returning jumps `R` and transient jumps `T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalyticClassification {
    pub r: JumpSet,
    pub t: JumpSet,
    /// The search exhausted every reachable partial sum, so the split is exact.
    pub saturated: bool,
}

/// Decides which jumps `r` admit `-r = e_1 + ... + e_n` with `e_i ∈ E`, `1 <= n <= bound`.
///
/// Breadth-first search over partial sums confined to the box of sup-radius `2·d·M`
/// (`M` the largest jump coordinate). By the Steinitz lemma every zero-sum sequence of
/// jumps can be reordered so that its partial sums stay in that box, so a saturated
/// search decides membership exactly.
pub fn classify_r_t_analytic(jumps: &JumpSet, bound: usize) -> AnalyticClassification {
    let Some(dim) = jumps.dim() else {
        return AnalyticClassification { r: JumpSet::default(), t: JumpSet::default(), saturated: true };
    };
    let radius = 2 * dim as i64 * jumps.iter().map(GroupElement::max_abs).max().unwrap_or(0).max(1);
    let in_box = |g: &GroupElement| g.max_abs() <= radius;

    let mut seen: FxHashSet<GroupElement> = jumps.iter().filter(|g| in_box(g)).cloned().collect();
    let mut frontier: Vec<GroupElement> = seen.iter().cloned().collect();
    frontier.sort();
    let mut level = 1;
    while !frontier.is_empty() && level < bound {
        let mut next = Vec::new();
        for s in &frontier {
            for e in jumps {
                let candidate = s + e;
                if in_box(&candidate) && seen.insert(candidate.clone()) {
                    next.push(candidate);
                }
            }
        }
        frontier = next;
        level += 1;
    }
    let saturated = frontier.is_empty();
    let r = JumpSet::new(jumps.iter().filter(|g| seen.contains(&-*g)).cloned()).expect("subset");
    let t = jumps.difference(&r);
    AnalyticClassification { r, t, saturated }
}

/// Search bound that always saturates for `jumps`.
pub fn saturating_bound(jumps: &JumpSet) -> usize {
    let dim = jumps.dim().unwrap_or(1);
    let radius = 2 * dim * jumps.iter().map(|g| g.max_abs() as usize).max().unwrap_or(0).max(1);
    (2 * radius + 1).pow(dim as u32) + 1
}
