//! Plain gradient descent on linear chains `W = W_D ... W_1` against the
//! whitened-input squared error `1/2 ||W - sigma||_F^2`, with the target
//! correlation allowed to change at phase boundaries.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::lindyn::{decompose, CrossCorrelation, SourceTrajectory};
use crate::rng;

/// Layers are stored input-first: `layers[0]` is `W_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearChain {
    layers: Vec<Matrix>,
}

impl LinearChain {
    pub fn new(layers: Vec<Matrix>) -> Result<Self> {
        if layers.is_empty() {
            return Err(invalid("layers", "a chain needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[1].cols() != pair[0].rows() {
                return Err(Error::Shape {
                    expected: (pair[1].rows(), pair[0].rows()),
                    actual: pair[1].shape(),
                });
            }
        }
        for layer in &layers {
            if let Some((row, col)) = layer.first_non_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(LinearChain { layers })
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].rows()
    }

    /// Width of the first hidden layer (equals `n_outputs` for depth 1).
    pub fn hidden_width(&self) -> usize {
        self.layers[0].rows()
    }

    pub fn product(&self) -> Matrix {
        let mut acc = self.layers[0].clone();
        for layer in &self.layers[1..] {
            acc = layer
                .matmul(&acc)
                .expect("chain shapes checked on construction");
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum Init {
    /// I.i.d. Gaussian entries with standard deviation `scale`.
    SmallRandom { scale: f64 },
    /// Depth-2 chain whose product is `U diag(a0) V^T` of the first target.
    Spectral { a0: Vec<f64> },
}

impl Default for Init {
    fn default() -> Self {
        Init::SmallRandom { scale: 1e-3 }
    }
}

/// Builds a chain with input/output sizes taken from `sigma`.
pub fn init_chain(
    sigma: &CrossCorrelation,
    hidden_width: usize,
    depth: usize,
    init: &Init,
    seed: u64,
) -> Result<LinearChain> {
    let (n_out, n_in) = (sigma.n_outputs(), sigma.n_inputs());
    if depth == 0 || hidden_width == 0 {
        return Err(invalid("depth", "depth and hidden width must be positive"));
    }
    match init {
        Init::SmallRandom { scale } => {
            let mut rng = rng::stream(seed, 0);
            let layers = (0..depth)
                .map(|i| {
                    let rows = if i + 1 == depth { n_out } else { hidden_width };
                    let cols = if i == 0 { n_in } else { hidden_width };
                    let data = (0..rows * cols)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            scale * z
                        })
                        .collect();
                    Matrix::from_vec(rows, cols, data)
                })
                .collect::<Result<Vec<_>>>()?;
            LinearChain::new(layers)
        }
        Init::Spectral { a0 } => {
            if depth != 2 {
                return Err(invalid("init", "spectral initialisation needs depth 2"));
            }
            let modes = decompose(sigma)?;
            let r = modes.mode_count();
            if a0.len() != r {
                return Err(Error::Length {
                    what: "a0",
                    expected: r,
                    actual: a0.len(),
                });
            }
            if hidden_width < r {
                return Err(invalid(
                    "hidden_width",
                    "must be at least the number of modes",
                ));
            }
            if a0.iter().any(|a| !(*a > 0.0)) {
                return Err(invalid("a0", "entries must be > 0"));
            }
            let mut w1 = Matrix::zeros(hidden_width, n_in);
            let mut w2 = Matrix::zeros(n_out, hidden_width);
            for (mode, a) in a0.iter().enumerate() {
                let root = a.sqrt();
                for j in 0..n_in {
                    w1[(mode, j)] = root * modes.right_vectors[(j, mode)];
                }
                for i in 0..n_out {
                    w2[(i, mode)] = modes.left_vectors[(i, mode)] * root;
                }
            }
            LinearChain::new(alloc::vec![w1, w2])
        }
    }
}

/// `1/2 ||W - sigma||_F^2`, the whitened squared error up to a constant.
pub fn loss(chain: &LinearChain, sigma: &CrossCorrelation) -> Result<f64> {
    let w = chain.product();
    Ok(0.5 * w.sub(sigma.matrix())?.frobenius_sq())
}

/// Exact per-layer gradients of [`loss`].
pub fn gradient(chain: &LinearChain, sigma: &CrossCorrelation) -> Result<Vec<Matrix>> {
    let layers = chain.layers();
    let depth = layers.len();
    // prefix[i] = W_i ... W_1 (prefix[0] = identity on inputs)
    let mut prefix = Vec::with_capacity(depth + 1);
    prefix.push(Matrix::identity(chain.n_inputs()));
    for layer in layers {
        let next = layer.matmul(prefix.last().expect("non-empty"))?;
        prefix.push(next);
    }
    let error = prefix[depth].sub(sigma.matrix())?;
    // Walk from the top, carrying suffix^T E = (W_D ... W_{i+1})^T E.
    let mut back = error;
    let mut grads = Vec::with_capacity(depth);
    for i in (0..depth).rev() {
        grads.push(back.matmul(&prefix[i].transpose())?);
        if i > 0 {
            back = layers[i].transpose().matmul(&back)?;
        }
    }
    grads.reverse();
    Ok(grads)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub sigma: CrossCorrelation,
    pub steps: Range<usize>,
}

/// Target correlations over contiguous step ranges covering `0..total`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    phases: Vec<Phase>,
}

impl PhaseSchedule {
    pub fn new(phases: Vec<Phase>) -> Result<Self> {
        let first = phases
            .first()
            .ok_or_else(|| invalid("phases", "empty schedule"))?;
        if first.steps.start != 0 {
            return Err(invalid("phases", "first phase must start at step 0"));
        }
        let shape = first.sigma.matrix().shape();
        for (i, p) in phases.iter().enumerate() {
            if p.steps.end <= p.steps.start {
                return Err(invalid(
                    "phases",
                    "every phase must cover at least one step",
                ));
            }
            if i > 0 && p.steps.start != phases[i - 1].steps.end {
                return Err(invalid("phases", "phases must be contiguous"));
            }
            if p.sigma.matrix().shape() != shape {
                return Err(Error::Shape {
                    expected: shape,
                    actual: p.sigma.matrix().shape(),
                });
            }
        }
        Ok(PhaseSchedule { phases })
    }

    pub fn constant(sigma: CrossCorrelation, total_steps: usize) -> Result<Self> {
        Self::new(alloc::vec![Phase {
            sigma,
            steps: 0..total_steps,
        }])
    }

    /// `deficit` for the first `deficit_steps`, then `clean`.
    pub fn with_initial_deficit(
        deficit: CrossCorrelation,
        clean: CrossCorrelation,
        deficit_steps: usize,
        total_steps: usize,
    ) -> Result<Self> {
        if deficit_steps == 0 {
            return Self::constant(clean, total_steps);
        }
        if deficit_steps >= total_steps {
            return Self::constant(deficit, total_steps);
        }
        Self::new(alloc::vec![
            Phase {
                sigma: deficit,
                steps: 0..deficit_steps,
            },
            Phase {
                sigma: clean,
                steps: deficit_steps..total_steps,
            },
        ])
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn total_steps(&self) -> usize {
        self.phases.last().map_or(0, |p| p.steps.end)
    }

    pub fn sigma_at(&self, step: usize) -> &CrossCorrelation {
        self.phases
            .iter()
            .find(|p| p.steps.contains(&step))
            .map_or(&self.phases[self.phases.len() - 1].sigma, |p| &p.sigma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub eta: f64,
    pub record_stride: usize,
    pub init: Init,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(invalid("eta", "must be finite and > 0"));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride", "must be positive"));
        }
        Ok(())
    }

    /// Learning rate `eta_normalized / s_max(sigma)`, i.e. `eta_normalized`
    /// expressed in units of the fastest mode's time constant.
    pub fn normalized_eta(eta_normalized: f64, sigma: &CrossCorrelation) -> Result<f64> {
        let s_max = decompose(sigma)?.singular_values[0];
        if s_max <= 0.0 {
            return Ok(eta_normalized);
        }
        Ok(eta_normalized / s_max)
    }
}

/// Recorded products; `time[i] = eta * steps[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrajectory {
    pub eta: f64,
    pub steps: Vec<usize>,
    pub products: Vec<Matrix>,
    pub losses: Vec<f64>,
    pub warnings: Vec<String>,
}

impl SimTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|s| self.eta * *s as f64).collect()
    }

    pub fn source_trajectories(&self) -> Vec<SourceTrajectory> {
        crate::lindyn::column_trajectories(&self.products, &self.times())
    }
}

/// Divergence report carrying everything recorded before the blow-up.
#[derive(Debug, Clone, PartialEq)]
pub struct Diverged {
    pub step: usize,
    pub partial: SimTrajectory,
}

impl From<Diverged> for Error {
    fn from(d: Diverged) -> Self {
        Error::Diverged { step: d.step }
    }
}

/// Runs `W_i <- W_i - eta * grad_i` for every step of the schedule, recording
/// the product every `record_stride` steps and after the last step.
pub fn simulate(
    chain: &mut LinearChain,
    schedule: &PhaseSchedule,
    config: &SimConfig,
) -> core::result::Result<SimTrajectory, Diverged> {
    let mut traj = SimTrajectory {
        eta: config.eta,
        steps: Vec::new(),
        products: Vec::new(),
        losses: Vec::new(),
        warnings: Vec::new(),
    };
    if let Err(e) = config.validate() {
        traj.warnings.push(alloc::format!("{e}"));
        return Err(Diverged {
            step: 0,
            partial: traj,
        });
    }
    for phase in schedule.phases() {
        if let Ok(modes) = decompose(&phase.sigma) {
            let s_max = modes.singular_values[0];
            if config.eta * s_max >= 1.0 {
                let msg = alloc::format!(
                    "eta * s_max = {} >= 1 for phase starting at step {}",
                    config.eta * s_max,
                    phase.steps.start
                );
                log::warn!("{msg}");
                traj.warnings.push(msg);
            }
        }
    }

    let total = schedule.total_steps();
    let record = |traj: &mut SimTrajectory, chain: &LinearChain, step: usize| {
        let w = chain.product();
        let sigma = schedule.sigma_at(step.min(total.saturating_sub(1)));
        let l = 0.5
            * w.sub(sigma.matrix())
                .map(|d| d.frobenius_sq())
                .unwrap_or(f64::NAN);
        traj.steps.push(step);
        traj.products.push(w);
        traj.losses.push(l);
    };

    record(&mut traj, chain, 0);
    for step in 0..total {
        let sigma = schedule.sigma_at(step);
        let grads = match gradient(chain, sigma) {
            Ok(g) => g,
            Err(_) => {
                return Err(Diverged {
                    step,
                    partial: traj,
                })
            }
        };
        for (layer, g) in chain.layers.iter_mut().zip(&grads) {
            layer
                .axpy(-config.eta, g)
                .expect("gradient shape matches layer");
        }
        if chain.layers.iter().any(|l| l.first_non_finite().is_some()) {
            return Err(Diverged {
                step: step + 1,
                partial: traj,
            });
        }
        let done = step + 1;
        if done % config.record_stride == 0 || done == total {
            record(&mut traj, chain, done);
        }
    }
    Ok(traj)
}

/// Index of the first norm reaching `fraction` of the final norm, `None` when
/// the final norm is below `1e-9`.
pub fn onset_index(norms: &[f64], fraction: f64) -> Option<usize> {
    let last = *norms.last()?;
    if last < 1e-9 {
        return None;
    }
    norms.iter().position(|n| *n >= fraction * last)
}

/// First recorded step at which each source column reaches `fraction` of its
/// final norm.
pub fn onset_times(traj: &SimTrajectory, fraction: f64) -> Vec<Option<usize>> {
    traj.source_trajectories()
        .iter()
        .map(|s| onset_index(&s.weight_norm, fraction).map(|i| traj.steps[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindyn::shallow_weight_at;

    fn fd_gradient(chain: &LinearChain, sigma: &CrossCorrelation, layer: usize, idx: usize) -> f64 {
        let h = 1e-5;
        let mut plus = chain.clone();
        plus.layers[layer].as_mut_slice()[idx] += h;
        let mut minus = chain.clone();
        minus.layers[layer].as_mut_slice()[idx] -= h;
        (loss(&plus, sigma).unwrap() - loss(&minus, sigma).unwrap()) / (2.0 * h)
    }

    #[test]
    fn depth_one_at_optimum_has_zero_gradient() {
        let sigma = CrossCorrelation::appendix_pre();
        let chain = LinearChain::new(alloc::vec![sigma.matrix().clone()]).unwrap();
        let g = gradient(&chain, &sigma).unwrap();
        assert_eq!(g[0].max_abs(), 0.0);
    }

    #[test]
    fn origin_is_a_saddle() {
        let sigma = CrossCorrelation::appendix_pre();
        let mut chain = init_chain(&sigma, 6, 2, &Init::SmallRandom { scale: 0.1 }, 3).unwrap();
        chain.layers[0] = Matrix::zeros(6, 8);
        chain.layers[1] = Matrix::zeros(5, 6);
        let g = gradient(&chain, &sigma).unwrap();
        assert_eq!(g[0].max_abs(), 0.0);
        assert_eq!(g[1].max_abs(), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let sigma =
            CrossCorrelation::from_rows(&[[1.0, -0.5, 0.2, 0.0], [0.3, 0.8, -1.0, 0.4]]).unwrap();
        let chain = init_chain(&sigma, 3, 3, &Init::SmallRandom { scale: 0.7 }, 11).unwrap();
        let g = gradient(&chain, &sigma).unwrap();
        for (l, gl) in g.iter().enumerate() {
            for idx in 0..gl.as_slice().len() {
                let fd = fd_gradient(&chain, &sigma, l, idx);
                let an = gl.as_slice()[idx];
                let rel = (fd - an).abs() / an.abs().max(fd.abs()).max(1e-8);
                assert!(rel < 1e-6, "layer {l} idx {idx}: {an} vs {fd}");
            }
        }
    }

    #[test]
    fn spectral_init_product() {
        let sigma = CrossCorrelation::appendix_pre();
        let a0 = alloc::vec![1e-2, 2e-2, 3e-2, 4e-2, 5e-2];
        let chain = init_chain(&sigma, 7, 2, &Init::Spectral { a0: a0.clone() }, 0).unwrap();
        let modes = decompose(&sigma).unwrap();
        let expected = modes.compose(&a0, false);
        assert!(chain.product().max_abs_diff(&expected).unwrap() <= 1e-12);
        assert!(init_chain(&sigma, 7, 3, &Init::Spectral { a0 }, 0).is_err());
    }

    #[test]
    fn zero_scale_and_determinism() {
        let sigma = CrossCorrelation::appendix_pre();
        let z = init_chain(&sigma, 4, 3, &Init::SmallRandom { scale: 0.0 }, 9).unwrap();
        assert!(z.layers().iter().all(|l| l.max_abs() == 0.0));
        let a = init_chain(&sigma, 4, 3, &Init::default(), 9).unwrap();
        let b = init_chain(&sigma, 4, 3, &Init::default(), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shallow_simulation_tracks_closed_form() {
        let sigma = CrossCorrelation::appendix_pre();
        let eta = 1e-3;
        let mut chain = LinearChain::new(alloc::vec![Matrix::zeros(5, 8)]).unwrap();
        let schedule = PhaseSchedule::constant(sigma.clone(), 8000).unwrap();
        let config = SimConfig {
            eta,
            record_stride: 10,
            init: Init::default(),
        };
        let traj = simulate(&mut chain, &schedule, &config).unwrap();
        let w0 = Matrix::zeros(5, 8);
        for (step, w) in traj.steps.iter().zip(&traj.products) {
            let exact = shallow_weight_at(&sigma, 1.0, eta * *step as f64, &w0).unwrap();
            assert!(w.max_abs_diff(&exact).unwrap() <= 1e-3);
        }
    }

    #[test]
    fn zero_target_shrinks_product() {
        let sigma = CrossCorrelation::new(Matrix::zeros(3, 4)).unwrap();
        let mut chain = init_chain(&sigma, 5, 3, &Init::SmallRandom { scale: 0.5 }, 1).unwrap();
        let schedule = PhaseSchedule::constant(sigma, 500).unwrap();
        let config = SimConfig {
            eta: 0.05,
            record_stride: 1,
            init: Init::default(),
        };
        let traj = simulate(&mut chain, &schedule, &config).unwrap();
        let norms: Vec<f64> = traj.products.iter().map(Matrix::frobenius).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn divergence_is_reported() {
        let sigma = CrossCorrelation::appendix_pre();
        let mut chain = init_chain(&sigma, 6, 2, &Init::SmallRandom { scale: 1.0 }, 2).unwrap();
        let schedule = PhaseSchedule::constant(sigma, 10_000).unwrap();
        let config = SimConfig {
            eta: 5.0,
            record_stride: 1,
            init: Init::default(),
        };
        let err = simulate(&mut chain, &schedule, &config).unwrap_err();
        assert!(err.step > 0 && err.step < 10_000);
        assert!(!err.partial.warnings.is_empty());
    }

    #[test]
    fn schedule_validation() {
        let s = CrossCorrelation::appendix_pre();
        let gap = PhaseSchedule::new(alloc::vec![
            Phase {
                sigma: s.clone(),
                steps: 0..5
            },
            Phase {
                sigma: s.clone(),
                steps: 6..10
            },
        ]);
        assert!(gap.is_err());
        let late = PhaseSchedule::new(alloc::vec![Phase {
            sigma: s,
            steps: 1..5
        }]);
        assert!(late.is_err());
    }

    #[test]
    fn onset_examples() {
        assert_eq!(onset_index(&[0.0, 0.1, 0.6, 1.0, 1.0], 0.5), Some(2));
        assert_eq!(onset_index(&[0.0, 0.0, 0.0], 0.5), None);
    }
}
