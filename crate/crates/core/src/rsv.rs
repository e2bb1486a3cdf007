//! Source variance (SV) and relative source variance (RSV) of representation
//! units.
//!
//! `SV_i(A, b)` is the variance of unit `i` when source A varies and source B
//! is held at `b`; `RSV_i(a, b) = (SV_i(A, b) - SV_i(B, a)) / (SV_i(A, b) + SV_i(B, a))`
//! is `+1` for a unit that only listens to A and `-1` for one that only
//! listens to B.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::seq::SliceRandom;
use rand_distr::{Beta, Distribution, Normal, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Maps a pair of source inputs to unit activations.
///
/// Evaluation must be deterministic; implementations are shared across threads
/// when `Sync`.
pub trait RepresentationProbe {
    fn unit_count(&self) -> usize;
    fn eval(&self, a: &[f64], b: &[f64], out: &mut [f64]);
}

impl<P: RepresentationProbe + ?Sized> RepresentationProbe for &P {
    fn unit_count(&self) -> usize {
        (**self).unit_count()
    }

    fn eval(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        (**self).eval(a, b, out)
    }
}

/// Probe built from a closure.
pub struct FnProbe<F> {
    units: usize,
    f: F,
}

impl<F: Fn(&[f64], &[f64], &mut [f64])> FnProbe<F> {
    pub fn new(units: usize, f: F) -> Self {
        FnProbe { units, f }
    }
}

impl<F: Fn(&[f64], &[f64], &mut [f64])> RepresentationProbe for FnProbe<F> {
    fn unit_count(&self) -> usize {
        self.units
    }

    fn eval(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        (self.f)(a, b, out)
    }
}

/// The probe with its two sources exchanged.
pub struct Swapped<P>(pub P);

impl<P: RepresentationProbe> RepresentationProbe for Swapped<P> {
    fn unit_count(&self) -> usize {
        self.0.unit_count()
    }

    fn eval(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        self.0.eval(b, a, out)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct RsvConfig {
    /// Number of fixed (a, b) pairs, K.
    pub fixed_samples: usize,
    /// Number of draws of the varying source per fixed pair, M.
    pub variation_samples: usize,
    pub seed: u64,
    pub dead_unit_epsilon: f64,
}

impl Default for RsvConfig {
    fn default() -> Self {
        RsvConfig {
            fixed_samples: 32,
            variation_samples: 256,
            seed: 0,
            dead_unit_epsilon: 1e-12,
        }
    }
}

impl RsvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fixed_samples < 1 {
            return Err(invalid("fixed_samples", "K must be >= 1"));
        }
        if self.variation_samples < 2 {
            return Err(invalid("variation_samples", "M must be >= 2"));
        }
        if !(self.dead_unit_epsilon >= 0.0) {
            return Err(invalid("dead_unit_epsilon", "must be >= 0"));
        }
        Ok(())
    }
}

/// Unbiased per-unit variance of `f(a, fixed_b)` over `a_samples`.
pub fn source_variance<P, S>(probe: &P, fixed_b: &[f64], a_samples: &[S]) -> Result<Vec<f64>>
where
    P: RepresentationProbe + ?Sized,
    S: AsRef<[f64]>,
{
    if a_samples.len() < 2 {
        return Err(invalid("a_samples", "need at least 2 samples"));
    }
    let units = probe.unit_count();
    let mut acc = VarianceAccumulator::new(units);
    let mut out = vec![0.0; units];
    for a in a_samples {
        probe.eval(a.as_ref(), fixed_b, &mut out);
        acc.push(&out);
    }
    Ok(acc.finish())
}

/// Per-unit variance of `f(fixed_a, b)` over `b_samples`.
pub fn source_variance_b<P, S>(probe: &P, fixed_a: &[f64], b_samples: &[S]) -> Result<Vec<f64>>
where
    P: RepresentationProbe + ?Sized,
    S: AsRef<[f64]>,
{
    source_variance(&Swapped(probe), fixed_a, b_samples)
}

/// Welford accumulation, one lane per unit.
struct VarianceAccumulator {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl VarianceAccumulator {
    fn new(units: usize) -> Self {
        VarianceAccumulator {
            n: 0,
            mean: vec![0.0; units],
            m2: vec![0.0; units],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    fn finish(self) -> Vec<f64> {
        let denom = (self.n - 1) as f64;
        self.m2.into_iter().map(|s| (s / denom).max(0.0)).collect()
    }
}

/// RSV of a single unit; `(0, true)` when the unit is dead.
pub fn rsv_pair(sv_a: f64, sv_b: f64, epsilon: f64) -> Result<(f64, bool)> {
    if !(sv_a >= 0.0) || !(sv_b >= 0.0) {
        return Err(invalid("source variance", "must be finite and >= 0"));
    }
    let total = sv_a + sv_b;
    if total < epsilon || total == 0.0 {
        return Ok((0.0, true));
    }
    Ok(((sv_a - sv_b) / total, false))
}

pub const HISTOGRAM_BINS: usize = 41;
const BIN_WIDTH: f64 = 2.0 / (HISTOGRAM_BINS as f64 - 1.0);

/// 41 equal bins whose centres are `-1, -0.95, ..., 1`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn from_values<'a>(values: impl IntoIterator<Item = &'a f64>) -> Self {
        let edges = (0..=HISTOGRAM_BINS)
            .map(|i| -1.0 - BIN_WIDTH / 2.0 + BIN_WIDTH * i as f64)
            .collect();
        let mut counts = vec![0; HISTOGRAM_BINS];
        for v in values {
            let bin = ((v + 1.0) / BIN_WIDTH).round();
            let bin = (bin.max(0.0) as usize).min(HISTOGRAM_BINS - 1);
            counts[bin] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// RSV values indexed `[unit][fixed pair]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RsvDistribution {
    pub unit_count: usize,
    pub fixed_samples: usize,
    /// Row-major `unit_count x fixed_samples`.
    pub values: Vec<f64>,
    pub dead: Vec<bool>,
    pub histogram: Histogram,
}

impl RsvDistribution {
    fn from_parts(
        unit_count: usize,
        fixed_samples: usize,
        values: Vec<f64>,
        dead: Vec<bool>,
    ) -> Self {
        let histogram = Histogram::from_values(
            values
                .iter()
                .zip(&dead)
                .filter(|(_, d)| !**d)
                .map(|(v, _)| v),
        );
        RsvDistribution {
            unit_count,
            fixed_samples,
            values,
            dead,
            histogram,
        }
    }

    pub fn value(&self, unit: usize, pair: usize) -> f64 {
        self.values[unit * self.fixed_samples + pair]
    }

    pub fn live_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.dead)
            .filter(|(_, d)| !**d)
            .map(|(v, _)| *v)
    }

    /// Mean RSV of each unit over its live pairs (`None` for fully dead units).
    pub fn unit_means(&self) -> Vec<Option<f64>> {
        (0..self.unit_count)
            .map(|u| {
                let row = u * self.fixed_samples..(u + 1) * self.fixed_samples;
                let live: Vec<f64> = self.values[row.clone()]
                    .iter()
                    .zip(&self.dead[row])
                    .filter(|(_, d)| !**d)
                    .map(|(v, _)| *v)
                    .collect();
                if live.is_empty() {
                    None
                } else {
                    Some(live.iter().sum::<f64>() / live.len() as f64)
                }
            })
            .collect()
    }
}

/// Computes the RSV of every unit for each fixed pair, given the draws of the
/// varying source for that pair.
fn rsv_from_draws<P, V>(
    probe: &P,
    fixed: &[(V, V)],
    mut draws: impl FnMut(usize) -> (Vec<V>, Vec<V>),
    epsilon: f64,
) -> Result<RsvDistribution>
where
    P: RepresentationProbe + ?Sized,
    V: AsRef<[f64]>,
{
    let units = probe.unit_count();
    let k = fixed.len();
    let mut values = vec![0.0; units * k];
    let mut dead = vec![false; units * k];
    for (j, (a, b)) in fixed.iter().enumerate() {
        let (vary_a, vary_b) = draws(j);
        let sv_a = source_variance(probe, b.as_ref(), &vary_a)?;
        let sv_b = source_variance_b(probe, a.as_ref(), &vary_b)?;
        for u in 0..units {
            let (r, d) = rsv_pair(sv_a[u], sv_b[u], epsilon)?;
            values[u * k + j] = r;
            dead[u * k + j] = d;
        }
    }
    Ok(RsvDistribution::from_parts(units, k, values, dead))
}

/// RSV distribution from two pools of source samples.
///
/// One shuffled index order (shared by both pools) selects the `K` fixed pairs
/// (the `j`-th fixed `a` is paired with the `j`-th fixed `b`) and the `M`
/// varying draws, which are disjoint from the fixed ones. Both pools therefore
/// need at least `K + M` entries.
pub fn rsv_distribution<P, S>(
    probe: &P,
    a_pool: &[S],
    b_pool: &[S],
    config: &RsvConfig,
) -> Result<RsvDistribution>
where
    P: RepresentationProbe + ?Sized,
    S: AsRef<[f64]>,
{
    let (fixed_idx, vary_idx) = draw_indices(a_pool.len().min(b_pool.len()), config)?;
    let fixed: Vec<(&[f64], &[f64])> = fixed_idx
        .iter()
        .map(|&i| (a_pool[i].as_ref(), b_pool[i].as_ref()))
        .collect();
    let vary_a: Vec<&[f64]> = vary_idx.iter().map(|&i| a_pool[i].as_ref()).collect();
    let vary_b: Vec<&[f64]> = vary_idx.iter().map(|&i| b_pool[i].as_ref()).collect();
    rsv_from_draws(
        probe,
        &fixed,
        |_| (vary_a.clone(), vary_b.clone()),
        config.dead_unit_epsilon,
    )
}

/// Precomputed activations for RSV analysis.
///
/// `vary_a` holds, for each fixed pair `j` and draw `m`, the activations with
/// source A varied and B held at `b_j`, laid out `[pair][draw][unit]`;
/// `vary_b` likewise with B varied.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationDump {
    pub unit_count: usize,
    pub fixed_samples: usize,
    pub variation_samples: usize,
    pub vary_a: Vec<f64>,
    pub vary_b: Vec<f64>,
}

impl ActivationDump {
    pub fn validate(&self) -> Result<()> {
        let expected = self.unit_count * self.fixed_samples * self.variation_samples;
        if self.unit_count == 0 || self.fixed_samples == 0 {
            return Err(invalid("dump", "unit_count and K must be positive"));
        }
        if self.variation_samples < 2 {
            return Err(invalid("dump", "M must be >= 2"));
        }
        for (what, v) in [("vary_a", &self.vary_a), ("vary_b", &self.vary_b)] {
            if v.len() != expected {
                return Err(Error::Length {
                    what,
                    expected,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(what, "activations must be finite"));
            }
        }
        Ok(())
    }

    /// Records the activations a probe produces for the draws
    /// [`rsv_distribution`] would use.
    pub fn record<P, S>(probe: &P, a_pool: &[S], b_pool: &[S], config: &RsvConfig) -> Result<Self>
    where
        P: RepresentationProbe + ?Sized,
        S: AsRef<[f64]>,
    {
        let (fixed_idx, vary_idx) = draw_indices(a_pool.len().min(b_pool.len()), config)?;
        let units = probe.unit_count();
        let mut vary_a = Vec::new();
        let mut vary_b = Vec::new();
        let mut out = vec![0.0; units];
        for &j in &fixed_idx {
            for &m in &vary_idx {
                probe.eval(a_pool[m].as_ref(), b_pool[j].as_ref(), &mut out);
                vary_a.extend_from_slice(&out);
            }
            for &m in &vary_idx {
                probe.eval(a_pool[j].as_ref(), b_pool[m].as_ref(), &mut out);
                vary_b.extend_from_slice(&out);
            }
        }
        Ok(ActivationDump {
            unit_count: units,
            fixed_samples: fixed_idx.len(),
            variation_samples: vary_idx.len(),
            vary_a,
            vary_b,
        })
    }
}

/// RSV distribution from recorded activations.
pub fn rsv_from_activations(dump: &ActivationDump, epsilon: f64) -> Result<RsvDistribution> {
    dump.validate()?;
    let (u, k, m) = (dump.unit_count, dump.fixed_samples, dump.variation_samples);
    let mut values = vec![0.0; u * k];
    let mut dead = vec![false; u * k];
    for j in 0..k {
        let block = |v: &[f64]| {
            let mut acc = VarianceAccumulator::new(u);
            for draw in v[j * m * u..(j + 1) * m * u].chunks_exact(u) {
                acc.push(draw);
            }
            acc.finish()
        };
        let sv_a = block(&dump.vary_a);
        let sv_b = block(&dump.vary_b);
        for unit in 0..u {
            let (r, d) = rsv_pair(sv_a[unit], sv_b[unit], epsilon)?;
            values[unit * k + j] = r;
            dead[unit * k + j] = d;
        }
    }
    Ok(RsvDistribution::from_parts(u, k, values, dead))
}

fn draw_indices(available: usize, config: &RsvConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    config.validate()?;
    let required = config.fixed_samples + config.variation_samples;
    if available < required {
        return Err(Error::PoolExhausted { required, available });
    }
    let mut order: Vec<usize> = (0..available).collect();
    order.shuffle(&mut rng::stream(config.seed, 0));
    let vary = order[config.fixed_samples..required].to_vec();
    order.truncate(config.fixed_samples);
    Ok((order, vary))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolarizationIndex {
    pub mean_abs: f64,
    pub frac_polarized: f64,
}

/// Threshold on `|RSV|` above which a value counts as polarized.
pub const POLARIZED_ABOVE: f64 = 0.9;

pub fn polarization_index(dist: &RsvDistribution) -> Result<PolarizationIndex> {
    polarization_of(dist.live_values())
}

pub fn polarization_of(values: impl IntoIterator<Item = f64>) -> Result<PolarizationIndex> {
    let mut n = 0usize;
    let mut abs_sum = 0.0;
    let mut polarized = 0usize;
    for v in values {
        n += 1;
        abs_sum += v.abs();
        if v.abs() > POLARIZED_ABOVE {
            polarized += 1;
        }
    }
    if n == 0 {
        return Err(Error::AllDead);
    }
    Ok(PolarizationIndex {
        mean_abs: abs_sum / n as f64,
        frac_polarized: polarized as f64 / n as f64,
    })
}

/// Softmax of a vector of per-source variances (n-source generalisation).
///
/// Unlike the two-source RSV this is not scale invariant and does not reduce
/// to it for `n = 2`.
pub fn generalized_rsv(sv: &[f64]) -> Result<Vec<f64>> {
    if sv.len() < 2 {
        return Err(invalid("sv", "need at least two sources"));
    }
    if sv.iter().any(|v| !v.is_finite()) {
        return Err(invalid("sv", "entries must be finite"));
    }
    let max = sv.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let exps: Vec<f64> = sv.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Conditional variances of `z = x0 + w n_a + (1 - w) n_b` given each source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormSv {
    /// `Var(z | x_a)`: what is left when A is known, i.e. `SV(B, a)`.
    pub sv_given_a: f64,
    /// `Var(z | x_b)`, i.e. `SV(A, b)`.
    pub sv_given_b: f64,
}

impl ClosedFormSv {
    /// RSV in the `(SV(A, b) - SV(B, a)) / (...)` convention.
    pub fn rsv(&self) -> f64 {
        (self.sv_given_b - self.sv_given_a) / (self.sv_given_b + self.sv_given_a)
    }
}

pub fn synthetic_closed_form_sv(
    w: f64,
    sigma0: f64,
    sigma_a: f64,
    sigma_b: f64,
) -> Result<ClosedFormSv> {
    if !(0.0..=1.0).contains(&w) {
        return Err(invalid("w", "must lie in [0, 1]"));
    }
    if !(sigma0 > 0.0 && sigma_a > 0.0 && sigma_b > 0.0) {
        return Err(invalid("sigma", "standard deviations must be > 0"));
    }
    let (v0, va, vb) = (sigma0 * sigma0, sigma_a * sigma_a, sigma_b * sigma_b);
    let var_z = v0 + w * w * va + (1.0 - w) * (1.0 - w) * vb;
    let cov_a = v0 + w * va;
    let cov_b = v0 + (1.0 - w) * vb;
    Ok(ClosedFormSv {
        sv_given_a: (var_z - cov_a * cov_a / (v0 + va)).max(0.0),
        sv_given_b: (var_z - cov_b * cov_b / (v0 + vb)).max(0.0),
    })
}

/// Linear-Gaussian representation with a shared component:
/// `x_a = x0 + n_a`, `x_b = x0 + n_b`, `z_i = w_i x_a + (1 - w_i) x_b` (or the
/// reversed combination for a `mixing` fraction of units), `w_i ~ Beta(alpha, beta)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SyntheticRsvModel {
    pub alpha: f64,
    pub beta: f64,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub sigma0: f64,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub sigma_a: f64,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub sigma_b: f64,
    pub unit_count: usize,
    #[cfg_attr(feature = "serde", serde(default = "half"))]
    pub mixing: f64,
}

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}

#[cfg(feature = "serde")]
fn half() -> f64 {
    0.5
}

impl SyntheticRsvModel {
    pub fn new(alpha: f64, beta: f64, unit_count: usize) -> Self {
        SyntheticRsvModel {
            alpha,
            beta,
            sigma0: 1.0,
            sigma_a: 1.0,
            sigma_b: 1.0,
            unit_count,
            mixing: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(invalid("alpha/beta", "shape parameters must be > 0"));
        }
        if !(self.sigma0 > 0.0 && self.sigma_a > 0.0 && self.sigma_b > 0.0) {
            return Err(invalid("sigma", "standard deviations must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return Err(invalid("mixing", "must lie in [0, 1]"));
        }
        if self.unit_count == 0 {
            return Err(invalid("unit_count", "must be positive"));
        }
        Ok(())
    }

    /// Draws the unit weights; the first `round(mixing * N)` units are reversed.
    pub fn sample_units(&self, seed: u64) -> Result<SyntheticProbe> {
        self.validate()?;
        let beta = Beta::new(self.alpha, self.beta)
            .map_err(|_| invalid("alpha/beta", "invalid Beta parameters"))?;
        let mut rng = rng::stream(seed, 1);
        let weights = (0..self.unit_count)
            .map(|_| beta.sample(&mut rng))
            .collect();
        let reversed_count = (self.mixing * self.unit_count as f64).round() as usize;
        Ok(SyntheticProbe::new(weights, reversed_count))
    }
}

/// Probe over scalar sources `a = x_a`, `b = x_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProbe {
    pub weights: Vec<f64>,
    /// Units `0..reversed` use `w x_b + (1 - w) x_a`.
    pub reversed: usize,
}

impl SyntheticProbe {
    pub fn new(weights: Vec<f64>, reversed: usize) -> Self {
        SyntheticProbe { weights, reversed }
    }

    /// Weight of `x_a` in unit `i`.
    pub fn weight_on_a(&self, i: usize) -> f64 {
        if i < self.reversed {
            1.0 - self.weights[i]
        } else {
            self.weights[i]
        }
    }
}

impl RepresentationProbe for SyntheticProbe {
    fn unit_count(&self) -> usize {
        self.weights.len()
    }

    fn eval(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let (xa, xb) = (a[0], b[0]);
        for (i, o) in out.iter_mut().enumerate() {
            let wa = self.weight_on_a(i);
            *o = wa * xa + (1.0 - wa) * xb;
        }
    }
}

/// Samples the synthetic model's sources. Fixed pairs come from the joint
/// distribution; the varying source is drawn from its conditional
/// distribution given the fixed one, so the SV estimates the conditional
/// variances the closed form describes.
pub fn sample_synthetic_model(
    model: &SyntheticRsvModel,
    config: &RsvConfig,
) -> Result<(SyntheticProbe, RsvDistribution)> {
    config.validate()?;
    let probe = model.sample_units(config.seed)?;
    let dist = synthetic_rsv(&probe, model, config)?;
    Ok((probe, dist))
}

/// RSV of an arbitrary probe driven by the synthetic model's sources.
pub fn synthetic_rsv<P: RepresentationProbe + ?Sized>(
    probe: &P,
    model: &SyntheticRsvModel,
    config: &RsvConfig,
) -> Result<RsvDistribution> {
    config.validate()?;
    model.validate()?;
    let (v0, va, vb) = (
        model.sigma0 * model.sigma0,
        model.sigma_a * model.sigma_a,
        model.sigma_b * model.sigma_b,
    );
    let gauss =
        |sd: f64| Normal::new(0.0, sd).map_err(|_| invalid("sigma", "invalid standard deviation"));
    let (d0, da, db) = (
        gauss(model.sigma0)?,
        gauss(model.sigma_a)?,
        gauss(model.sigma_b)?,
    );
    let mut rng_fixed = rng::stream(config.seed, 2);
    let fixed: Vec<([f64; 1], [f64; 1])> = (0..config.fixed_samples)
        .map(|_| {
            let x0 = d0.sample(&mut rng_fixed);
            (
                [x0 + da.sample(&mut rng_fixed)],
                [x0 + db.sample(&mut rng_fixed)],
            )
        })
        .collect();
    // x_a | x_b ~ N(v0 / (v0 + vb) x_b, v0 + va - v0^2 / (v0 + vb)), and symmetrically.
    let a_given_b = (v0 / (v0 + vb), (v0 + va - v0 * v0 / (v0 + vb)).sqrt());
    let b_given_a = (v0 / (v0 + va), (v0 + vb - v0 * v0 / (v0 + va)).sqrt());
    let m = config.variation_samples;
    let mut rng_vary = rng::stream(config.seed, 3);
    let fixed_ref = &fixed;
    rsv_from_draws(
        probe,
        &fixed,
        |j| {
            let (a, b) = fixed_ref[j];
            let mut draw = |given: f64, (slope, sd): (f64, f64)| -> [f64; 1] {
                let z: f64 = StandardNormal.sample(&mut rng_vary);
                [slope * given + sd * z]
            };
            let vary_a: Vec<[f64; 1]> = (0..m).map(|_| draw(b[0], a_given_b)).collect();
            let vary_b: Vec<[f64; 1]> = (0..m).map(|_| draw(a[0], b_given_a)).collect();
            (vary_a, vary_b)
        },
        config.dead_unit_epsilon,
    )
}
