//! Minibatch SGD under deficit schedules, and the metrics recorded per run.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::seq::SliceRandom;
use rand::Rng;

use super::net::{evaluate, training_step, LabelMode, LossMode, NetConfig, PathwayNet};
use super::task::{
    apply_blur, apply_dissociation, generate_task, Batch, Pathway, TaskData, TaskSpec,
};
use crate::error::{invalid, Result};
use crate::rng;
use crate::rsv::{polarization_index, rsv_distribution, Histogram, PolarizationIndex, RsvConfig};

const STREAM_SHUFFLE: u64 = 1;
const STREAM_DEFICIT: u64 = 2;
const STREAM_MASK: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)
)]
pub enum DeficitKind {
    #[default]
    None,
    /// `gain * view + noise` on one pathway.
    Blur {
        pathway: Pathway,
        gain: f64,
        noise_std: f64,
    },
    Dissociation,
}

/// Epochs during which the deficit is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)
)]
pub enum Window {
    /// `[0, epochs)`.
    Initial { epochs: usize },
    /// `[start, start + length)`.
    Sliding { start: usize, length: usize },
}

impl Default for Window {
    fn default() -> Self {
        Window::Initial { epochs: 0 }
    }
}

impl Window {
    pub fn start(&self) -> usize {
        match *self {
            Window::Initial { .. } => 0,
            Window::Sliding { start, .. } => start,
        }
    }

    pub fn end(&self) -> usize {
        match *self {
            Window::Initial { epochs } => epochs,
            Window::Sliding { start, length } => start + length,
        }
    }

    pub fn len(&self) -> usize {
        self.end() - self.start()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, epoch: usize) -> bool {
        (self.start()..self.end()).contains(&epoch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct DeficitSchedule {
    pub kind: DeficitKind,
    pub window: Window,
}

impl DeficitSchedule {
    pub const NONE: DeficitSchedule = DeficitSchedule {
        kind: DeficitKind::None,
        window: Window::Initial { epochs: 0 },
    };

    pub fn initial(kind: DeficitKind, epochs: usize) -> Self {
        DeficitSchedule {
            kind,
            window: Window::Initial { epochs },
        }
    }

    pub fn sliding(kind: DeficitKind, start: usize, length: usize) -> Self {
        DeficitSchedule {
            kind,
            window: Window::Sliding { start, length },
        }
    }

    pub fn validate(&self, total_epochs: usize) -> Result<()> {
        if self.window.end() > total_epochs {
            return Err(invalid(
                "window",
                alloc::format!(
                    "ends at epoch {} but training has {total_epochs}",
                    self.window.end()
                ),
            ));
        }
        if let DeficitKind::Blur {
            gain, noise_std, ..
        } = self.kind
        {
            if !(0.0..=1.0).contains(&gain) {
                return Err(invalid("gain", "must lie in [0, 1]"));
            }
            if !(noise_std >= 0.0) || !noise_std.is_finite() {
                return Err(invalid("noise_std", "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn active(&self, epoch: usize) -> bool {
        self.kind != DeficitKind::None && self.window.contains(epoch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct OptimConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// Per-epoch learning-rate factor; 1 keeps the rate fixed.
    pub decay: f64,
    pub batch_size: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            learning_rate: 0.05,
            momentum: 0.0,
            decay: 1.0,
            batch_size: 64,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(invalid("learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid("momentum", "must lie in [0, 1)"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(invalid("decay", "must lie in (0, 1]"));
        }
        if self.batch_size < 2 {
            return Err(invalid("batch_size", "must be >= 2"));
        }
        Ok(())
    }

    pub fn rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay.powi(epoch as i32)
    }
}

/// Everything needed to reproduce one training run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct RunConfig {
    pub task: TaskSpec,
    pub net: NetConfig,
    pub optim: OptimConfig,
    pub epochs: usize,
    pub schedule: DeficitSchedule,
    /// Weight of the cross-reconstruction loss; needs `net.reconstruction`.
    pub reconstruction: f64,
    /// Evaluate usable information per pathway; also turns on train-time
    /// pathway masking with `mask_probability`.
    pub usable_information: bool,
    pub mask_probability: f64,
    /// RSV of the final representation; `None` skips it.
    pub rsv: Option<RsvConfig>,
    /// Network initialisation and every training-time random stream.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: TaskSpec::default(),
            net: NetConfig::default(),
            optim: OptimConfig::default(),
            epochs: 60,
            schedule: DeficitSchedule::NONE,
            reconstruction: 0.0,
            usable_information: false,
            mask_probability: 0.1,
            rsv: Some(RsvConfig::default()),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        self.optim.validate()?;
        if self.epochs == 0 {
            return Err(invalid("epochs", "must be >= 1"));
        }
        self.schedule.validate(self.epochs)?;
        if !(self.reconstruction >= 0.0) || !self.reconstruction.is_finite() {
            return Err(invalid("reconstruction", "must be finite and >= 0"));
        }
        if self.reconstruction > 0.0 && !self.net.reconstruction {
            return Err(invalid(
                "reconstruction",
                "net.reconstruction must be enabled",
            ));
        }
        if !(0.0..=0.5).contains(&self.mask_probability) {
            return Err(invalid("mask_probability", "must lie in [0, 0.5]"));
        }
        if let Some(rsv) = &self.rsv {
            rsv.validate()?;
        }
        Ok(())
    }

    /// Train-time masking probability actually used.
    pub fn effective_mask_probability(&self) -> f64 {
        if self.usable_information {
            self.mask_probability
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub learning_rate: f64,
    pub deficit_active: bool,
    /// Mean training objective over the epoch's batches.
    pub train_loss: f64,
    /// Accuracy of the head that received the loss, against the training labels.
    pub train_accuracy: f64,
    /// Fused head on clean test pairs.
    pub test_loss: f64,
    pub test_accuracy: f64,
}

/// Usable information `log2 C - CE` (bits) on the test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsableInformation {
    pub both: f64,
    /// Pathway B masked.
    pub a_only: f64,
    /// Pathway A masked.
    pub b_only: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsvSummary {
    pub polarization: PolarizationIndex,
    pub histogram: Histogram,
    pub unit_means: Vec<Option<f64>>,
    pub dead_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: RunConfig,
    pub seed: u64,
    pub epochs: Vec<EpochMetrics>,
    /// Epoch at which the loss became non-finite; metrics stop before it.
    pub diverged_at: Option<usize>,
    pub rsv: Option<RsvSummary>,
    pub usable: Option<UsableInformation>,
}

impl RunRecord {
    pub fn final_test_accuracy(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.test_accuracy)
    }

    pub fn completed(&self) -> bool {
        self.diverged_at.is_none() && self.epochs.len() == self.config.epochs
    }
}

/// Generates the task and trains on it.
pub fn run(config: &RunConfig) -> Result<RunRecord> {
    config.validate()?;
    let data = generate_task(&config.task)?;
    train(&data, config).map(|(_, record)| record)
}

/// Trains a fresh network on `data`; returns the final network and its record.
pub fn train(data: &TaskData, config: &RunConfig) -> Result<(PathwayNet, RunRecord)> {
    config.validate()?;
    let mut net = PathwayNet::new(
        &config.net,
        data.spec.view_dim,
        data.spec.class_count,
        config.seed,
    )?;
    let record = train_net(&mut net, data, config)?;
    Ok((net, record))
}

/// Trains `net` in place.
pub fn train_net(net: &mut PathwayNet, data: &TaskData, config: &RunConfig) -> Result<RunRecord> {
    config.validate()?;
    if net.view_dim() != data.spec.view_dim || net.classes() != data.spec.class_count {
        return Err(invalid("net", "network shape does not match the task"));
    }
    let mut shuffle_rng = rng::stream(config.seed, STREAM_SHUFFLE);
    let mut deficit_rng = rng::stream(config.seed, STREAM_DEFICIT);
    let mut mask_rng = rng::stream(config.seed, STREAM_MASK);
    let mask_p = config.effective_mask_probability();
    let dim = data.spec.view_dim;
    let mut velocity: Option<Vec<Vec<f64>>> = (config.optim.momentum > 0.0)
        .then(|| net.params().iter().map(|p| vec![0.0; p.len()]).collect());
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut diverged_at = None;

    'outer: for epoch in 0..config.epochs {
        let lr = config.optim.rate_at(epoch);
        let active = config.schedule.active(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        let mut correct = 0usize;
        for chunk in order.chunks(config.optim.batch_size) {
            let mut batch = Batch::from_samples(dim, chunk.iter().map(|&i| &data.train[i]));
            let mut labels = LabelMode::Fused;
            if active {
                match config.schedule.kind {
                    DeficitKind::None => {}
                    DeficitKind::Blur {
                        pathway,
                        gain,
                        noise_std,
                    } => {
                        for i in 0..batch.len() {
                            apply_blur(
                                batch.view_mut(pathway, i),
                                gain,
                                noise_std,
                                &mut deficit_rng,
                            );
                        }
                    }
                    DeficitKind::Dissociation => {
                        if batch.len() >= 2 {
                            apply_dissociation(&mut batch, &mut deficit_rng)?;
                            labels = LabelMode::PerView;
                        }
                    }
                }
            }
            if mask_p > 0.0 {
                for i in 0..batch.len() {
                    let u: f64 = mask_rng.random();
                    if u < mask_p {
                        batch.view_mut(Pathway::A, i).fill(0.0);
                    } else if u < 2.0 * mask_p {
                        batch.view_mut(Pathway::B, i).fill(0.0);
                    }
                }
            }
            let mode = LossMode {
                labels,
                reconstruction: config.reconstruction,
            };
            let step = training_step(net, &batch, mode)?;
            if !step.loss.is_finite() {
                diverged_at = Some(epoch);
                break 'outer;
            }
            loss_sum += step.loss;
            batches += 1;
            correct += step.correct;
            update(
                net,
                &step.gradients,
                lr,
                config.optim.momentum,
                velocity.as_mut(),
            );
        }
        if !net.is_finite() {
            diverged_at = Some(epoch);
            break;
        }
        let (test_loss, test_accuracy) = evaluate(net, &data.test, None);
        epochs.push(EpochMetrics {
            epoch,
            learning_rate: lr,
            deficit_active: active,
            train_loss: loss_sum / batches as f64,
            train_accuracy: correct as f64 / data.train.len() as f64,
            test_loss,
            test_accuracy,
        });
    }
    if let Some(epoch) = diverged_at {
        log::warn!("training diverged at epoch {epoch}");
    }

    let usable = (config.usable_information && diverged_at.is_none())
        .then(|| usable_information_all(net, data));
    let rsv = match (&config.rsv, diverged_at) {
        (Some(rsv_config), None) => Some(rsv_summary(net, data, rsv_config)?),
        _ => None,
    };
    Ok(RunRecord {
        config: config.clone(),
        seed: config.seed,
        epochs,
        diverged_at,
        rsv,
        usable,
    })
}

fn update(
    net: &mut PathwayNet,
    grads: &PathwayNet,
    lr: f64,
    momentum: f64,
    velocity: Option<&mut Vec<Vec<f64>>>,
) {
    let g = grads.params();
    match velocity {
        None => {
            for (p, g) in net.params_mut().into_iter().zip(g) {
                for (w, d) in p.iter_mut().zip(g) {
                    *w -= lr * d;
                }
            }
        }
        Some(vel) => {
            for ((p, g), v) in net.params_mut().into_iter().zip(g).zip(vel.iter_mut()) {
                for ((w, d), m) in p.iter_mut().zip(g).zip(v.iter_mut()) {
                    *m = momentum * *m + d;
                    *w -= lr * *m;
                }
            }
        }
    }
}

/// `log2 C - CE_bits` on the test set with `masked` input zeroed.
pub fn usable_information(net: &PathwayNet, data: &TaskData, masked: Option<Pathway>) -> f64 {
    let (ce_nats, _) = evaluate(net, &data.test, masked);
    (net.classes() as f64).log2() - ce_nats / core::f64::consts::LN_2
}

pub fn usable_information_all(net: &PathwayNet, data: &TaskData) -> UsableInformation {
    UsableInformation {
        both: usable_information(net, data, None),
        a_only: usable_information(net, data, Some(Pathway::B)),
        b_only: usable_information(net, data, Some(Pathway::A)),
    }
}

/// RSV of the last trunk activation, using the test set's views as pools.
pub fn rsv_summary(net: &PathwayNet, data: &TaskData, config: &RsvConfig) -> Result<RsvSummary> {
    let a_pool: Vec<&[f64]> = data.test.iter().map(|s| &s.view_a[..]).collect();
    let b_pool: Vec<&[f64]> = data.test.iter().map(|s| &s.view_b[..]).collect();
    let dist = rsv_distribution(net, &a_pool, &b_pool, config)?;
    let dead = dist.dead.iter().filter(|d| **d).count();
    let polarization = match polarization_index(&dist) {
        Ok(p) => p,
        Err(crate::Error::AllDead) => PolarizationIndex {
            mean_abs: f64::NAN,
            frac_polarized: f64::NAN,
        },
        Err(e) => return Err(e),
    };
    Ok(RsvSummary {
        polarization,
        unit_means: dist.unit_means(),
        dead_fraction: dead as f64 / dist.dead.len() as f64,
        histogram: dist.histogram,
    })
}
