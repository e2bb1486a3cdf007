//! Closed-form learning dynamics of shallow and two-layer linear networks
//! trained with squared error on whitened inputs.
//!
//! With whitened inputs the loss only sees the output/input cross-correlation
//! `sigma`. A shallow network relaxes every weight independently towards the
//! matching entry of `sigma`. A two-layer network learns the singular modes of
//! `sigma` one at a time, each with a sigmoidal mode strength, so removing an
//! input column (a source) reshapes the modes and can delay learning of the
//! other sources.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::gradsim::onset_index;
use crate::linalg::{svd, Matrix};

/// Output x input cross-correlation matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrossCorrelation(Matrix);

impl CrossCorrelation {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::Empty {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        if let Some((row, col)) = matrix.first_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        Ok(CrossCorrelation(matrix))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn n_outputs(&self) -> usize {
        self.0.rows()
    }

    pub fn n_inputs(&self) -> usize {
        self.0.cols()
    }

    /// The 5x8 task with all sources present.
    pub fn appendix_pre() -> Self {
        Self::from_rows(&APPENDIX_PRE).expect("fixture is valid")
    }

    /// [`CrossCorrelation::appendix_pre`] with its third source zeroed.
    pub fn appendix_post() -> Self {
        Self::from_rows(&APPENDIX_POST).expect("fixture is valid")
    }

    /// Looks up a named fixture (`appendix-pre`, `appendix-post`).
    pub fn fixture(name: &str) -> Option<Self> {
        match name {
            "appendix-pre" => Some(Self::appendix_pre()),
            "appendix-post" => Some(Self::appendix_post()),
            _ => None,
        }
    }
}

const APPENDIX_PRE: [[f64; 8]; 5] = [
    [1., 0., 3., 1., 0., 0., 0., 0.],
    [1., 0., 0., 0., 1., 0., 0., 0.],
    [0., 1., 0., 0., 0., 1., 0., 0.],
    [0., 1., 0., 0., 0., 0., 1., 0.],
    [0., 0., 3., 0., 0., 0., 0., 1.],
];

const APPENDIX_POST: [[f64; 8]; 5] = [
    [1., 0., 0., 1., 0., 0., 0., 0.],
    [1., 0., 0., 0., 1., 0., 0., 0.],
    [0., 1., 0., 0., 0., 1., 0., 0.],
    [0., 1., 0., 0., 0., 0., 1., 0.],
    [0., 0., 0., 0., 0., 0., 0., 1.],
];

/// Singular values at or below this are treated as zero by [`mode_strength`].
pub const ZERO_MODE_EPS: f64 = 1e-12;

/// Default threshold separating active from inactive modes.
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-12;

/// SVD factors of a cross-correlation matrix, one mode per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModes {
    pub left_vectors: Matrix,
    pub singular_values: Vec<f64>,
    pub right_vectors: Matrix,
    pub rank: usize,
    pub rank_threshold: f64,
}

impl SpectralModes {
    pub fn mode_count(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_active(&self, mode: usize) -> bool {
        self.singular_values[mode] > self.rank_threshold
    }

    pub fn u(&self, mode: usize) -> Vec<f64> {
        self.left_vectors.column(mode)
    }

    pub fn v(&self, mode: usize) -> Vec<f64> {
        self.right_vectors.column(mode)
    }

    /// `U diag(values) V^T` over the selected modes.
    pub fn compose(&self, values: &[f64], active_only: bool) -> Matrix {
        let (m, n) = (self.left_vectors.rows(), self.right_vectors.rows());
        let mut out = Matrix::zeros(m, n);
        for (mode, value) in values.iter().enumerate() {
            if active_only && !self.is_active(mode) {
                continue;
            }
            let (u, v) = (self.u(mode), self.v(mode));
            for i in 0..m {
                let ui = value * u[i];
                for j in 0..n {
                    out[(i, j)] += ui * v[j];
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix {
        self.compose(&self.singular_values, false)
    }

    /// Strength of every mode inside `w`: `u_a^T w v_a`.
    pub fn project(&self, w: &Matrix) -> Vec<f64> {
        (0..self.mode_count())
            .map(|mode| {
                let (u, v) = (self.u(mode), self.v(mode));
                let mut acc = 0.0;
                for i in 0..w.rows() {
                    for j in 0..w.cols() {
                        acc += u[i] * w[(i, j)] * v[j];
                    }
                }
                acc
            })
            .collect()
    }
}

pub fn decompose(sigma: &CrossCorrelation) -> Result<SpectralModes> {
    decompose_with_threshold(sigma, DEFAULT_RANK_THRESHOLD)
}

pub fn decompose_with_threshold(sigma: &CrossCorrelation, threshold: f64) -> Result<SpectralModes> {
    let d = svd(sigma.matrix())?;
    let rank = d.s.iter().filter(|s| **s > threshold).count();
    Ok(SpectralModes {
        left_vectors: d.u,
        singular_values: d.s,
        right_vectors: d.v,
        rank,
        rank_threshold: threshold,
    })
}

/// Strength `a(t)` of a mode with singular value `s` in a two-layer linear
/// network started from `a0` under gradient flow with time constant `tau`.
///
/// For `s <= 1e-12` the `s -> 0` limit `a0 / (1 + 2 a0 t / tau)` is returned.
pub fn mode_strength(s: f64, a0: f64, tau: f64, t: f64) -> Result<f64> {
    if !(a0 > 0.0) || !a0.is_finite() {
        return Err(invalid("a0", "must be finite and > 0"));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid("tau", "must be finite and > 0"));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid("s", "must be finite and >= 0"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", "must be finite and >= 0"));
    }
    if s <= ZERO_MODE_EPS {
        return Ok(a0 / (1.0 + 2.0 * a0 * t / tau));
    }
    // Logistic form s / (1 + (s/a0 - 1) e^{-2st/tau}); algebraically identical
    // to the ratio of exponentials but never overflows.
    let decay = (-2.0 * s * t / tau).exp();
    Ok(s / (1.0 + (s / a0 - 1.0) * decay))
}

/// Time constant, per-mode initial strengths and evaluation grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DynamicsParams {
    pub tau: f64,
    pub a0: Vec<f64>,
    pub time_grid: Vec<f64>,
}

impl DynamicsParams {
    pub const DEFAULT_TAU: f64 = 100.0;
    pub const DEFAULT_A0: f64 = 1e-4;

    pub fn uniform(mode_count: usize, a0: f64, tau: f64, time_grid: Vec<f64>) -> Self {
        DynamicsParams {
            tau,
            a0: vec![a0; mode_count],
            time_grid,
        }
    }

    /// `points` evenly spaced times on `[0, t_max]`.
    pub fn linear_grid(t_max: f64, points: usize) -> Vec<f64> {
        if points < 2 {
            return vec![0.0];
        }
        (0..points)
            .map(|i| t_max * i as f64 / (points - 1) as f64)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(invalid("tau", "must be finite and > 0"));
        }
        if self.a0.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(invalid("a0", "every entry must be finite and > 0"));
        }
        if self.time_grid.is_empty() {
            return Err(invalid("time_grid", "must not be empty"));
        }
        if self.time_grid[0] < 0.0 || self.time_grid.iter().any(|t| !t.is_finite()) {
            return Err(invalid("time_grid", "times must be finite and >= 0"));
        }
        if self.time_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("time_grid", "must be strictly increasing"));
        }
        Ok(())
    }

    /// Active modes whose initial strength is not below their singular value.
    /// The closed form still holds there, but the mode shrinks instead of
    /// growing.
    pub fn flagged_modes(&self, modes: &SpectralModes) -> Vec<usize> {
        (0..modes.mode_count().min(self.a0.len()))
            .filter(|&m| modes.is_active(m) && self.a0[m] >= modes.singular_values[m])
            .collect()
    }
}

/// Product weight `W(t) = sum_a a_a(t) u_a v_a^T` over the active modes.
pub fn weight_matrix_at(modes: &SpectralModes, params: &DynamicsParams, t: f64) -> Result<Matrix> {
    if params.a0.len() != modes.mode_count() {
        return Err(Error::Length {
            what: "a0",
            expected: modes.mode_count(),
            actual: params.a0.len(),
        });
    }
    let strengths = modes
        .singular_values
        .iter()
        .zip(&params.a0)
        .map(|(s, a0)| mode_strength(*s, *a0, params.tau, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(modes.compose(&strengths, true))
}

/// Shallow network weights `sigma + (w0 - sigma) e^{-t/tau}`.
pub fn shallow_weight_at(
    sigma: &CrossCorrelation,
    tau: f64,
    t: f64,
    w0: &Matrix,
) -> Result<Matrix> {
    let target = sigma.matrix();
    if w0.shape() != target.shape() {
        return Err(Error::Shape {
            expected: target.shape(),
            actual: w0.shape(),
        });
    }
    if !(tau > 0.0) {
        return Err(invalid("tau", "must be > 0"));
    }
    let decay = (-t / tau).exp();
    let mut out = target.clone();
    for (o, (s, w)) in out
        .as_mut_slice()
        .iter_mut()
        .zip(target.as_slice().iter().zip(w0.as_slice()))
    {
        *o = s + (w - s) * decay;
    }
    Ok(out)
}

/// Copy of `sigma` with source column `k` zeroed (shape preserved).
pub fn counterfactual_drop(sigma: &CrossCorrelation, k: usize) -> Result<CrossCorrelation> {
    if k >= sigma.n_inputs() {
        return Err(Error::OutOfRange {
            what: "source",
            index: k,
            len: sigma.n_inputs(),
        });
    }
    let mut m = sigma.matrix().clone();
    for i in 0..m.rows() {
        m[(i, k)] = 0.0;
    }
    Ok(CrossCorrelation(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Model {
    Shallow,
    Deep,
}

/// Euclidean norm of one input column of `W(t)` over a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTrajectory {
    pub source_index: usize,
    pub times: Vec<f64>,
    pub weight_norm: Vec<f64>,
}

/// Product weights on the time grid. The shallow model starts from zero
/// weights; the deep model from `a0` on every mode.
pub fn weight_trajectory(
    sigma: &CrossCorrelation,
    params: &DynamicsParams,
    model: Model,
) -> Result<Vec<Matrix>> {
    params.validate()?;
    match model {
        Model::Deep => {
            let modes = decompose(sigma)?;
            params
                .time_grid
                .iter()
                .map(|t| weight_matrix_at(&modes, params, *t))
                .collect()
        }
        Model::Shallow => {
            let w0 = Matrix::zeros(sigma.n_outputs(), sigma.n_inputs());
            params
                .time_grid
                .iter()
                .map(|t| shallow_weight_at(sigma, params.tau, *t, &w0))
                .collect()
        }
    }
}

pub fn source_trajectories(
    sigma: &CrossCorrelation,
    params: &DynamicsParams,
    model: Model,
) -> Result<Vec<SourceTrajectory>> {
    let weights = weight_trajectory(sigma, params, model)?;
    Ok(column_trajectories(&weights, &params.time_grid))
}

pub(crate) fn column_trajectories(weights: &[Matrix], times: &[f64]) -> Vec<SourceTrajectory> {
    let n_inputs = weights.first().map_or(0, Matrix::cols);
    (0..n_inputs)
        .map(|k| SourceTrajectory {
            source_index: k,
            times: times.to_vec(),
            weight_norm: weights.iter().map(|w| w.column_norm(k)).collect(),
        })
        .collect()
}

/// Fraction of the final weight norm that marks a source as learned.
pub const ONSET_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SourceComparison {
    pub source_index: usize,
    pub max_abs_diff: f64,
    pub onset_full: Option<f64>,
    pub onset_dropped: Option<f64>,
}

impl SourceComparison {
    /// Onset delay caused by the drop; positive when learning is delayed.
    pub fn onset_delta(&self) -> Option<f64> {
        Some(self.onset_dropped? - self.onset_full?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualReport {
    pub model: Model,
    pub dropped_source: usize,
    pub full: Vec<SourceTrajectory>,
    pub dropped: Vec<SourceTrajectory>,
    /// One entry per surviving source.
    pub surviving: Vec<SourceComparison>,
}

/// Trains on `sigma` and on `sigma` without source `k`, both from the start,
/// and compares the surviving sources.
pub fn compare_counterfactual(
    sigma: &CrossCorrelation,
    k: usize,
    params: &DynamicsParams,
    model: Model,
) -> Result<CounterfactualReport> {
    let post = counterfactual_drop(sigma, k)?;
    let full = source_trajectories(sigma, params, model)?;
    let dropped = source_trajectories(&post, params, model)?;
    let time_at = |idx: Option<usize>| idx.map(|i| params.time_grid[i]);
    let surviving = full
        .iter()
        .zip(&dropped)
        .filter(|(f, _)| f.source_index != k)
        .map(|(f, d)| SourceComparison {
            source_index: f.source_index,
            max_abs_diff: f
                .weight_norm
                .iter()
                .zip(&d.weight_norm)
                .fold(0.0, |m, (a, b)| m.max((a - b).abs())),
            onset_full: time_at(onset_index(&f.weight_norm, ONSET_FRACTION)),
            onset_dropped: time_at(onset_index(&d.weight_norm, ONSET_FRACTION)),
        })
        .collect();
    Ok(CounterfactualReport {
        model,
        dropped_source: k,
        full,
        dropped,
        surviving,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_strength_examples() {
        assert_eq!(mode_strength(1.0, 0.01, 1.0, 0.0).unwrap(), 0.01);
        assert!((mode_strength(1.0, 0.01, 1.0, 50.0).unwrap() - 1.0).abs() < 1e-9);
        assert!((mode_strength(0.0, 0.5, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let mid = 99f64.ln() / 2.0;
        assert!((mode_strength(1.0, 0.01, 1.0, mid).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mode_strength_matches_ratio_form() {
        // The exponential-ratio form, evaluated where it does not overflow.
        for &(s, a0, tau, t) in &[
            (2.0, 0.1, 1.0, 1.0),
            (0.7, 0.3, 3.0, 2.5),
            (0.5, 0.9, 1.0, 0.4),
        ] {
            let e: f64 = (2.0 * s * t / tau as f64).exp();
            let ratio = s * e / (e - 1.0 + s / a0);
            assert!((mode_strength(s, a0, tau, t).unwrap() - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_strength_rejects_bad_a0() {
        assert!(mode_strength(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(mode_strength(1.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn drop_examples() {
        let post = counterfactual_drop(&CrossCorrelation::appendix_pre(), 2).unwrap();
        assert_eq!(post, CrossCorrelation::appendix_post());
        let zero = CrossCorrelation::new(Matrix::zeros(2, 3)).unwrap();
        assert_eq!(counterfactual_drop(&zero, 1).unwrap(), zero);
        let id = CrossCorrelation::new(Matrix::identity(3)).unwrap();
        let dropped = counterfactual_drop(&id, 0).unwrap();
        assert_eq!(dropped.matrix(), &Matrix::diag(&[0.0, 1.0, 1.0]));
        assert!(counterfactual_drop(&id, 3).is_err());
    }

    #[test]
    fn rank_one_outer_product() {
        let u = [
            2.0 / 3.0_f64.sqrt(),
            2.0 / 3.0_f64.sqrt(),
            2.0 / 3.0_f64.sqrt(),
        ];
        let v = [0.6, 0.8];
        let rows: Vec<Vec<f64>> = u
            .iter()
            .map(|a| v.iter().map(|b| a * b).collect())
            .collect();
        let modes = decompose(&CrossCorrelation::from_rows(&rows).unwrap()).unwrap();
        assert!((modes.singular_values[0] - 2.0).abs() < 1e-12);
        assert!(modes.singular_values[1].abs() < 1e-12);
        assert_eq!(modes.rank, 1);
    }

    #[test]
    fn weight_matrix_limits() {
        let sigma = CrossCorrelation::appendix_pre();
        let modes = decompose(&sigma).unwrap();
        let params = DynamicsParams::uniform(5, 1e-3, 1.0, vec![0.0]);
        let w0 = weight_matrix_at(&modes, &params, 0.0).unwrap();
        let expected = modes.compose(&[1e-3; 5], true);
        assert!(w0.max_abs_diff(&expected).unwrap() < 1e-15);
        let smin = modes.singular_values[modes.rank - 1];
        let late = weight_matrix_at(&modes, &params, 50.0 / smin).unwrap();
        assert!(late.max_abs_diff(sigma.matrix()).unwrap() <= 1e-6);
    }

    #[test]
    fn a0_length_mismatch() {
        let modes = decompose(&CrossCorrelation::appendix_pre()).unwrap();
        let params = DynamicsParams::uniform(3, 1e-3, 1.0, vec![0.0]);
        assert!(matches!(
            weight_matrix_at(&modes, &params, 0.0),
            Err(Error::Length { .. })
        ));
    }

    #[test]
    fn shallow_limits() {
        let sigma = CrossCorrelation::appendix_pre();
        let w0 = Matrix::zeros(5, 8);
        assert_eq!(shallow_weight_at(&sigma, 2.0, 0.0, &w0).unwrap(), w0);
        let late = shallow_weight_at(&sigma, 2.0, 100.0, &w0).unwrap();
        assert!(late.max_abs_diff(sigma.matrix()).unwrap() <= 1e-9);
        assert!(shallow_weight_at(&sigma, 1.0, 1.0, &Matrix::zeros(8, 5)).is_err());
    }

    #[test]
    fn params_validation() {
        let mut p = DynamicsParams::uniform(2, 1e-4, 100.0, vec![0.0, 1.0]);
        assert!(p.validate().is_ok());
        p.time_grid = vec![0.0, 0.0];
        assert!(p.validate().is_err());
        p.time_grid = vec![0.0];
        p.tau = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn flagged_modes_reports_large_a0() {
        let modes = decompose(&CrossCorrelation::appendix_post()).unwrap();
        let p = DynamicsParams::uniform(5, 1.2, 1.0, vec![0.0]);
        // s = (sqrt 3, sqrt 3, 1, 1, 1)
        assert_eq!(p.flagged_modes(&modes), vec![2, 3, 4]);
    }
}
