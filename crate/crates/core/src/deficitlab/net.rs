//! Two-pathway network with additive fusion and hand-written backprop.
//!
//! ```text
//! view_a -> enc_a (affine + relu) -\
//!                                   + -> trunk blocks -> z -> fused head
//! view_b -> enc_b (affine + relu) -/                       \-> per-view heads
//! ```
//! Optional cross-reconstruction decoders map each pathway output to the
//! other raw view.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::task::{Batch, MultiViewSample, Pathway};
use crate::error::{invalid, Result};
use crate::rng;
use crate::rsv::RepresentationProbe;

/// Affine map `y = W x + b`, `W` row-major `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            w: vec![0.0; inputs * outputs],
            b: vec![0.0; outputs],
        }
    }

    /// Gaussian weights with variance `gain / fan_in`, zero bias.
    fn random<R: Rng>(inputs: usize, outputs: usize, gain: f64, rng: &mut R) -> Self {
        let sd = (gain / inputs as f64).sqrt();
        let w = (0..inputs * outputs)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            })
            .collect();
        Dense {
            inputs,
            outputs,
            w,
            b: vec![0.0; outputs],
        }
    }

    #[inline]
    pub fn forward(&self, x: &[f64], y: &mut [f64]) {
        for (o, (row, bias)) in y
            .iter_mut()
            .zip(self.w.chunks_exact(self.inputs).zip(&self.b))
        {
            *o = bias + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Accumulates parameter gradients into `grad` and, when given, writes the
    /// input gradient into `dx`.
    #[inline]
    fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense, dx: Option<&mut [f64]>) {
        for ((g_row, gb), d) in grad
            .w
            .chunks_exact_mut(self.inputs)
            .zip(grad.b.iter_mut())
            .zip(dy)
        {
            if *d == 0.0 {
                continue;
            }
            *gb += d;
            for (g, v) in g_row.iter_mut().zip(x) {
                *g += d * v;
            }
        }
        if let Some(dx) = dx {
            dx.fill(0.0);
            for (row, d) in self.w.chunks_exact(self.inputs).zip(dy) {
                if *d == 0.0 {
                    continue;
                }
                for (o, w) in dx.iter_mut().zip(row) {
                    *o += d * w;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    #[default]
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, x: &mut [f64]) {
        if self == Activation::Relu {
            x.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }

    /// Masks `d` by the derivative evaluated at the activation output `y`.
    #[inline]
    fn backprop(self, y: &[f64], d: &mut [f64]) {
        if self == Activation::Relu {
            for (g, v) in d.iter_mut().zip(y) {
                if *v <= 0.0 {
                    *g = 0.0;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct NetConfig {
    pub encoder_width: usize,
    pub trunk_width: usize,
    pub trunk_blocks: usize,
    pub trunk_activation: Activation,
    /// Build the cross-reconstruction decoders.
    pub reconstruction: bool,
    /// Multiplies the standard deviation of every initial weight.
    pub init_scale: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            encoder_width: 64,
            trunk_width: 64,
            trunk_blocks: 2,
            trunk_activation: Activation::Relu,
            reconstruction: false,
            init_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathwayNet {
    pub enc_a: Dense,
    pub enc_b: Dense,
    pub trunk: Vec<Dense>,
    pub trunk_activation: Activation,
    pub head_fused: Dense,
    pub head_a: Dense,
    pub head_b: Dense,
    /// Pathway A output -> view B.
    pub dec_ab: Option<Dense>,
    /// Pathway B output -> view A.
    pub dec_ba: Option<Dense>,
}

impl PathwayNet {
    pub fn new(config: &NetConfig, view_dim: usize, classes: usize, seed: u64) -> Result<Self> {
        if config.trunk_blocks == 0 {
            return Err(invalid("trunk_blocks", "must be >= 1"));
        }
        if config.encoder_width == 0 || config.trunk_width == 0 || view_dim == 0 || classes < 2 {
            return Err(invalid("net", "widths must be positive and classes >= 2"));
        }
        if !(config.init_scale >= 0.0) || !config.init_scale.is_finite() {
            return Err(invalid("init_scale", "must be finite and >= 0"));
        }
        let mut rng = rng::stream(seed, 10);
        let k = config.init_scale * config.init_scale;
        let relu_gain = 2.0 * k;
        let enc_a = Dense::random(view_dim, config.encoder_width, relu_gain, &mut rng);
        let enc_b = Dense::random(view_dim, config.encoder_width, relu_gain, &mut rng);
        let trunk_gain = k * match config.trunk_activation {
            Activation::Relu => 2.0,
            Activation::Linear => 1.0,
        };
        let trunk = (0..config.trunk_blocks)
            .map(|i| {
                let inputs = if i == 0 {
                    config.encoder_width
                } else {
                    config.trunk_width
                };
                Dense::random(inputs, config.trunk_width, trunk_gain, &mut rng)
            })
            .collect();
        let head_fused = Dense::random(config.trunk_width, classes, k, &mut rng);
        let head_a = Dense::random(config.trunk_width, classes, k, &mut rng);
        let head_b = Dense::random(config.trunk_width, classes, k, &mut rng);
        let (dec_ab, dec_ba) = if config.reconstruction {
            (
                Some(Dense::random(config.encoder_width, view_dim, k, &mut rng)),
                Some(Dense::random(config.encoder_width, view_dim, k, &mut rng)),
            )
        } else {
            (None, None)
        };
        Ok(PathwayNet {
            enc_a,
            enc_b,
            trunk,
            trunk_activation: config.trunk_activation,
            head_fused,
            head_a,
            head_b,
            dec_ab,
            dec_ba,
        })
    }

    pub fn view_dim(&self) -> usize {
        self.enc_a.inputs
    }

    pub fn classes(&self) -> usize {
        self.head_fused.outputs
    }

    pub fn representation_width(&self) -> usize {
        self.head_fused.inputs
    }

    /// Same architecture, every parameter zero.
    pub fn zeros_like(&self) -> Self {
        let z = |d: &Dense| Dense::zeros(d.inputs, d.outputs);
        PathwayNet {
            enc_a: z(&self.enc_a),
            enc_b: z(&self.enc_b),
            trunk: self.trunk.iter().map(z).collect(),
            trunk_activation: self.trunk_activation,
            head_fused: z(&self.head_fused),
            head_a: z(&self.head_a),
            head_b: z(&self.head_b),
            dec_ab: self.dec_ab.as_ref().map(z),
            dec_ba: self.dec_ba.as_ref().map(z),
        }
    }

    fn layers(&self) -> Vec<&Dense> {
        let mut v = vec![&self.enc_a, &self.enc_b];
        v.extend(self.trunk.iter());
        v.extend([&self.head_fused, &self.head_a, &self.head_b]);
        v.extend(self.dec_ab.iter());
        v.extend(self.dec_ba.iter());
        v
    }

    fn layers_mut(&mut self) -> Vec<&mut Dense> {
        let mut v = vec![&mut self.enc_a, &mut self.enc_b];
        v.extend(self.trunk.iter_mut());
        v.extend([&mut self.head_fused, &mut self.head_a, &mut self.head_b]);
        v.extend(self.dec_ab.iter_mut());
        v.extend(self.dec_ba.iter_mut());
        v
    }

    /// Every parameter buffer in a fixed order.
    pub fn params(&self) -> Vec<&[f64]> {
        self.layers()
            .into_iter()
            .flat_map(|d| [&d.w[..], &d.b[..]])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .into_iter()
            .flat_map(|d| [&mut d.w[..], &mut d.b[..]])
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params()
            .iter()
            .all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// Swaps the two pathways (encoders, per-view heads, decoders).
    pub fn swap_pathways(&mut self) {
        core::mem::swap(&mut self.enc_a, &mut self.enc_b);
        core::mem::swap(&mut self.head_a, &mut self.head_b);
        core::mem::swap(&mut self.dec_ab, &mut self.dec_ba);
    }

    pub fn head(&self, side: Option<Pathway>) -> &Dense {
        match side {
            None => &self.head_fused,
            Some(Pathway::A) => &self.head_a,
            Some(Pathway::B) => &self.head_b,
        }
    }

    pub fn forward(&self, view_a: &[f64], view_b: &[f64]) -> ForwardOutput {
        let mut trace = Trace::new(self);
        self.forward_into(view_a, view_b, &mut trace);
        let logits = |d: &Dense| {
            let mut out = vec![0.0; d.outputs];
            d.forward(&trace.z(), &mut out);
            out
        };
        let decode = |d: &Option<Dense>, p: &[f64]| {
            d.as_ref().map(|d| {
                let mut out = vec![0.0; d.outputs];
                d.forward(p, &mut out);
                out
            })
        };
        ForwardOutput {
            logits_fused: logits(&self.head_fused),
            logits_a: logits(&self.head_a),
            logits_b: logits(&self.head_b),
            recon_b_from_a: decode(&self.dec_ab, &trace.pa),
            recon_a_from_b: decode(&self.dec_ba, &trace.pb),
            fused: trace.h.clone(),
            z: trace.z().to_vec(),
            pathway_a: trace.pa,
            pathway_b: trace.pb,
        }
    }

    /// Representation `z` only (last trunk activation).
    pub fn representation(&self, view_a: &[f64], view_b: &[f64], out: &mut [f64]) {
        let mut trace = Trace::new(self);
        self.forward_into(view_a, view_b, &mut trace);
        out.copy_from_slice(trace.z());
    }

    fn forward_into(&self, view_a: &[f64], view_b: &[f64], t: &mut Trace) {
        self.enc_a.forward(view_a, &mut t.pa);
        Activation::Relu.apply(&mut t.pa);
        self.enc_b.forward(view_b, &mut t.pb);
        Activation::Relu.apply(&mut t.pb);
        for ((h, a), b) in t.h.iter_mut().zip(&t.pa).zip(&t.pb) {
            *h = a + b;
        }
        for (i, block) in self.trunk.iter().enumerate() {
            let (before, after) = t.acts.split_at_mut(i);
            let input: &[f64] = if i == 0 { &t.h } else { &before[i - 1] };
            block.forward(input, &mut after[0]);
            self.trunk_activation.apply(&mut after[0]);
        }
    }
}

/// Intermediate activations of one sample.
struct Trace {
    pa: Vec<f64>,
    pb: Vec<f64>,
    h: Vec<f64>,
    acts: Vec<Vec<f64>>,
}

impl Trace {
    fn new(net: &PathwayNet) -> Self {
        Trace {
            pa: vec![0.0; net.enc_a.outputs],
            pb: vec![0.0; net.enc_b.outputs],
            h: vec![0.0; net.enc_a.outputs],
            acts: net.trunk.iter().map(|d| vec![0.0; d.outputs]).collect(),
        }
    }

    fn z(&self) -> &[f64] {
        &self.acts[self.acts.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub pathway_a: Vec<f64>,
    pub pathway_b: Vec<f64>,
    pub fused: Vec<f64>,
    pub z: Vec<f64>,
    pub logits_fused: Vec<f64>,
    pub logits_a: Vec<f64>,
    pub logits_b: Vec<f64>,
    pub recon_b_from_a: Option<Vec<f64>>,
    pub recon_a_from_b: Option<Vec<f64>>,
}

/// Which heads receive the classification loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Cross-entropy on the fused head.
    Fused,
    /// Cross-entropy on the per-view head named by each sample's label side.
    PerView,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossMode {
    pub labels: LabelMode,
    /// Weight of the cross-reconstruction MSE; 0 disables it.
    pub reconstruction: f64,
}

impl LossMode {
    pub const NORMAL: LossMode = LossMode {
        labels: LabelMode::Fused,
        reconstruction: 0.0,
    };
    pub const DISSOCIATION: LossMode = LossMode {
        labels: LabelMode::PerView,
        reconstruction: 0.0,
    };

    pub fn with_reconstruction(self, lambda: f64) -> Self {
        LossMode {
            reconstruction: lambda,
            ..self
        }
    }
}

/// Log-softmax cross-entropy (nats); writes `softmax - onehot` into `grad`.
pub fn cross_entropy(logits: &[f64], label: usize, grad: &mut [f64]) -> f64 {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let mut total = 0.0;
    for (g, l) in grad.iter_mut().zip(logits) {
        *g = (l - max).exp();
        total += *g;
    }
    for g in grad.iter_mut() {
        *g /= total;
    }
    let loss = -(logits[label] - max - total.ln());
    grad[label] -= 1.0;
    loss
}

/// Mean loss over the batch and its exact gradient.
pub fn loss_and_gradients(
    net: &PathwayNet,
    batch: &Batch,
    mode: LossMode,
) -> Result<(f64, PathwayNet)> {
    let step = training_step(net, batch, mode)?;
    Ok((step.loss, step.gradients))
}

/// Result of one forward/backward pass over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub loss: f64,
    pub gradients: PathwayNet,
    /// Samples whose loss-receiving head predicted the training label.
    pub correct: usize,
}

pub fn training_step(net: &PathwayNet, batch: &Batch, mode: LossMode) -> Result<StepOutput> {
    let n = batch.len();
    if n == 0 {
        return Err(invalid("batch", "empty batch"));
    }
    if mode.labels == LabelMode::PerView && batch.label_side.is_none() {
        return Err(invalid("batch", "per-view loss needs label-side markers"));
    }
    let recon = mode.reconstruction != 0.0;
    if recon && (net.dec_ab.is_none() || net.dec_ba.is_none()) {
        return Err(invalid(
            "reconstruction",
            "network has no reconstruction decoders",
        ));
    }
    let mut grads = net.zeros_like();
    let mut trace = Trace::new(net);
    let classes = net.classes();
    let enc_w = net.enc_a.outputs;
    let dim = net.view_dim();
    let mut dlogits = vec![0.0; classes];
    let mut dz: Vec<Vec<f64>> = net.trunk.iter().map(|d| vec![0.0; d.outputs]).collect();
    let mut dh = vec![0.0; enc_w];
    let mut dpa = vec![0.0; enc_w];
    let mut dpb = vec![0.0; enc_w];
    let mut rec = vec![0.0; dim];
    let mut drec = vec![0.0; dim];
    let mut tmp = vec![0.0; enc_w];
    let mut logits = vec![0.0; classes];
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    let mut correct = 0;

    for i in 0..n {
        let (xa, xb) = (batch.view_a(i), batch.view_b(i));
        net.forward_into(xa, xb, &mut trace);
        let side = match mode.labels {
            LabelMode::Fused => None,
            LabelMode::PerView => Some(batch.label_side.as_ref().expect("checked")[i]),
        };
        let head = net.head(side);
        head.forward(trace.z(), &mut logits);
        total += cross_entropy(&logits, batch.labels[i], &mut dlogits);
        correct += usize::from(argmax(&logits) == batch.labels[i]);
        dlogits.iter_mut().for_each(|g| *g *= inv_n);
        let last = dz.len() - 1;
        let head_grad = match side {
            None => &mut grads.head_fused,
            Some(Pathway::A) => &mut grads.head_a,
            Some(Pathway::B) => &mut grads.head_b,
        };
        head.backward(trace.z(), &dlogits, head_grad, Some(&mut dz[last]));

        for k in (0..net.trunk.len()).rev() {
            net.trunk_activation.backprop(&trace.acts[k], &mut dz[k]);
            let (lower, upper) = dz.split_at_mut(k);
            let input: &[f64] = if k == 0 { &trace.h } else { &trace.acts[k - 1] };
            let dx: &mut [f64] = if k == 0 { &mut dh } else { &mut lower[k - 1] };
            net.trunk[k].backward(input, &upper[0], &mut grads.trunk[k], Some(dx));
        }
        dpa.copy_from_slice(&dh);
        dpb.copy_from_slice(&dh);

        if recon {
            let scale = 2.0 * mode.reconstruction * inv_n / dim as f64;
            for (dec, dec_grad, p, target, dp) in [
                (
                    net.dec_ab.as_ref(),
                    grads.dec_ab.as_mut(),
                    &trace.pa,
                    xb,
                    &mut dpa,
                ),
                (
                    net.dec_ba.as_ref(),
                    grads.dec_ba.as_mut(),
                    &trace.pb,
                    xa,
                    &mut dpb,
                ),
            ] {
                let (dec, dec_grad) = (dec.expect("checked"), dec_grad.expect("checked"));
                dec.forward(p, &mut rec);
                let mut sq = 0.0;
                for ((d, r), t) in drec.iter_mut().zip(&rec).zip(target) {
                    let e = r - t;
                    sq += e * e;
                    *d = scale * e;
                }
                total += mode.reconstruction * sq / dim as f64;
                dec.backward(p, &drec, dec_grad, Some(&mut tmp));
                for (a, b) in dp.iter_mut().zip(&tmp) {
                    *a += b;
                }
            }
        }

        Activation::Relu.backprop(&trace.pa, &mut dpa);
        net.enc_a.backward(xa, &dpa, &mut grads.enc_a, None);
        Activation::Relu.backprop(&trace.pb, &mut dpb);
        net.enc_b.backward(xb, &dpb, &mut grads.enc_b, None);
    }
    Ok(StepOutput {
        loss: total * inv_n,
        gradients: grads,
        correct,
    })
}

/// Index of the largest entry (first on ties).
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Fused-head cross-entropy (nats) and accuracy over samples, optionally with
/// one pathway's input replaced by zeros.
pub fn evaluate(
    net: &PathwayNet,
    samples: &[MultiViewSample],
    masked: Option<Pathway>,
) -> (f64, f64) {
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut trace = Trace::new(net);
    let zero = vec![0.0; net.view_dim()];
    let mut logits = vec![0.0; net.classes()];
    let mut scratch = vec![0.0; net.classes()];
    let mut loss = 0.0;
    let mut correct = 0usize;
    for s in samples {
        let a = if masked == Some(Pathway::A) {
            &zero
        } else {
            &s.view_a
        };
        let b = if masked == Some(Pathway::B) {
            &zero
        } else {
            &s.view_b
        };
        net.forward_into(a, b, &mut trace);
        net.head_fused.forward(trace.z(), &mut logits);
        loss += cross_entropy(&logits, s.label, &mut scratch);
        correct += usize::from(argmax(&logits) == s.label);
    }
    let n = samples.len() as f64;
    (loss / n, correct as f64 / n)
}

impl RepresentationProbe for PathwayNet {
    fn unit_count(&self) -> usize {
        self.representation_width()
    }

    fn eval(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        self.representation(a, b, out);
    }
}

/// Mean loss only (no gradients), same definition as [`loss_and_gradients`].
pub fn batch_loss(net: &PathwayNet, batch: &Batch, mode: LossMode) -> Result<f64> {
    let n = batch.len();
    if n == 0 {
        return Err(invalid("batch", "empty batch"));
    }
    let mut scratch = vec![0.0; net.classes()];
    let mut total = 0.0;
    for i in 0..n {
        let out = net.forward(batch.view_a(i), batch.view_b(i));
        let logits = match mode.labels {
            LabelMode::Fused => &out.logits_fused,
            LabelMode::PerView => match batch
                .label_side
                .as_ref()
                .ok_or_else(|| invalid("batch", "per-view loss needs label-side markers"))?[i]
            {
                Pathway::A => &out.logits_a,
                Pathway::B => &out.logits_b,
            },
        };
        total += cross_entropy(logits, batch.labels[i], &mut scratch);
        if mode.reconstruction != 0.0 {
            let dim = net.view_dim() as f64;
            let rb = out.recon_b_from_a.as_ref().ok_or_else(|| {
                invalid("reconstruction", "network has no reconstruction decoders")
            })?;
            let ra = out.recon_a_from_b.as_ref().expect("decoders come in pairs");
            let sq =
                |r: &[f64], t: &[f64]| r.iter().zip(t).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
            total +=
                mode.reconstruction * (sq(rb, batch.view_b(i)) + sq(ra, batch.view_a(i))) / dim;
        }
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deficitlab::task::{apply_dissociation, generate_task, TaskSpec};

    fn small_config() -> NetConfig {
        NetConfig {
            encoder_width: 6,
            trunk_width: 5,
            trunk_blocks: 2,
            trunk_activation: Activation::Relu,
            reconstruction: true,
            init_scale: 1.0,
        }
    }

    #[test]
    fn zero_net_gives_uniform_prediction() {
        let net = PathwayNet::new(&small_config(), 24, 4, 0)
            .unwrap()
            .zeros_like();
        let data = generate_task(&TaskSpec::default()).unwrap();
        let batch = Batch::from_samples(24, data.train.iter().take(8));
        let loss = batch_loss(&net, &batch, LossMode::NORMAL).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn additive_fusion_with_zero_view() {
        let net = PathwayNet::new(&small_config(), 24, 4, 1).unwrap();
        let data = generate_task(&TaskSpec::default()).unwrap();
        let s = &data.train[0];
        let zero = vec![0.0; 24];
        let out = net.forward(&s.view_a, &zero);
        let bias_b: Vec<f64> = net.enc_b.b.iter().map(|b| b.max(0.0)).collect();
        for ((h, a), b) in out.fused.iter().zip(&out.pathway_a).zip(&bias_b) {
            assert_eq!(*h, a + b);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let net = PathwayNet::new(&small_config(), 24, 4, 2).unwrap();
        let data = generate_task(&TaskSpec::default()).unwrap();
        let s = &data.train[3];
        assert_eq!(
            net.forward(&s.view_a, &s.view_b),
            net.forward(&s.view_a, &s.view_b)
        );
    }

    #[test]
    fn per_view_mode_needs_markers() {
        let net = PathwayNet::new(&small_config(), 24, 4, 2).unwrap();
        let data = generate_task(&TaskSpec::default()).unwrap();
        let batch = Batch::from_samples(24, data.train.iter().take(4));
        assert!(loss_and_gradients(&net, &batch, LossMode::DISSOCIATION).is_err());
    }

    #[test]
    fn zero_lambda_matches_plain_loss_bit_exactly() {
        let net = PathwayNet::new(&small_config(), 24, 4, 3).unwrap();
        let data = generate_task(&TaskSpec::default()).unwrap();
        let batch = Batch::from_samples(24, data.train.iter().take(16));
        let plain = loss_and_gradients(&net, &batch, LossMode::NORMAL).unwrap();
        let zero =
            loss_and_gradients(&net, &batch, LossMode::NORMAL.with_reconstruction(0.0)).unwrap();
        assert_eq!(plain, zero);
    }

    #[test]
    fn batch_loss_agrees_with_gradient_pass() {
        let net = PathwayNet::new(&small_config(), 24, 4, 4).unwrap();
        let data = generate_task(&TaskSpec::default()).unwrap();
        let mut batch = Batch::from_samples(24, data.train.iter().take(16));
        apply_dissociation(&mut batch, &mut rng::stream(0, 1)).unwrap();
        let mode = LossMode::DISSOCIATION.with_reconstruction(0.3);
        let (l, _) = loss_and_gradients(&net, &batch, mode).unwrap();
        assert!((l - batch_loss(&net, &batch, mode).unwrap()).abs() < 1e-12);
    }
}
