//! Synthetic two-view classification task with controlled common, unique and
//! synergistic content, plus the input perturbations used as deficits.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::rng;

/// Label bits of one kind and how they are written into a view.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct ChannelSpec {
    /// Label bits carried by this component.
    pub bits: usize,
    /// Channels per bit; every channel of a bit repeats the same signal.
    pub width: usize,
    /// Signal amplitude per channel.
    pub strength: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec::none()
    }
}

impl ChannelSpec {
    pub const fn none() -> Self {
        ChannelSpec {
            bits: 0,
            width: 1,
            strength: 1.0,
        }
    }

    pub const fn new(bits: usize, width: usize, strength: f64) -> Self {
        ChannelSpec {
            bits,
            width,
            strength,
        }
    }

    fn span(&self) -> usize {
        self.bits * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct TaskSpec {
    pub class_count: usize,
    pub view_dim: usize,
    /// Visible in both views.
    pub common: ChannelSpec,
    /// Visible in view A only.
    pub unique_a: ChannelSpec,
    /// Visible in view B only.
    pub unique_b: ChannelSpec,
    /// Readable only from the product of paired channels across views.
    pub synergy: ChannelSpec,
    pub noise_std: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl Default for TaskSpec {
    /// Four classes: one synergistic bit and one common bit.
    fn default() -> Self {
        TaskSpec {
            class_count: 4,
            view_dim: 24,
            common: ChannelSpec::new(1, 2, 1.0),
            unique_a: ChannelSpec::none(),
            unique_b: ChannelSpec::none(),
            synergy: ChannelSpec::new(1, 2, 1.0),
            noise_std: 0.5,
            train_size: 2000,
            test_size: 1000,
            seed: 0,
        }
    }
}

impl TaskSpec {
    /// Eight classes: one unique bit per view and one synergistic bit.
    pub fn synergy_unique() -> Self {
        TaskSpec {
            class_count: 8,
            common: ChannelSpec::none(),
            unique_a: ChannelSpec::new(1, 2, 1.0),
            unique_b: ChannelSpec::new(1, 2, 1.0),
            synergy: ChannelSpec::new(1, 2, 1.0),
            ..TaskSpec::default()
        }
    }

    pub fn synergy_only() -> Self {
        TaskSpec {
            class_count: 4,
            common: ChannelSpec::none(),
            synergy: ChannelSpec::new(2, 2, 1.0),
            ..TaskSpec::default()
        }
    }

    pub fn common_only() -> Self {
        TaskSpec {
            class_count: 4,
            common: ChannelSpec::new(2, 2, 1.0),
            synergy: ChannelSpec::none(),
            ..TaskSpec::default()
        }
    }

    pub fn unique_only() -> Self {
        TaskSpec {
            class_count: 4,
            common: ChannelSpec::none(),
            unique_a: ChannelSpec::new(1, 2, 1.0),
            unique_b: ChannelSpec::new(1, 2, 1.0),
            synergy: ChannelSpec::none(),
            ..TaskSpec::default()
        }
    }

    /// Mostly common bits, with a little synergy.
    pub fn common_dominant() -> Self {
        TaskSpec {
            class_count: 8,
            common: ChannelSpec::new(2, 2, 1.0),
            synergy: ChannelSpec::new(1, 2, 1.0),
            ..TaskSpec::default()
        }
    }

    pub fn total_bits(&self) -> usize {
        self.common.bits + self.unique_a.bits + self.unique_b.bits + self.synergy.bits
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(invalid("class_count", "need at least two classes"));
        }
        let bits = self.total_bits();
        if bits >= usize::BITS as usize || 1usize << bits != self.class_count {
            return Err(invalid(
                "class_count",
                alloc::format!(
                    "{} classes cannot be encoded by {bits} label bits",
                    self.class_count
                ),
            ));
        }
        for (name, c) in [
            ("common", self.common),
            ("unique_a", self.unique_a),
            ("unique_b", self.unique_b),
            ("synergy", self.synergy),
        ] {
            if c.width == 0 || !(c.strength >= 0.0) || !c.strength.is_finite() {
                return Err(invalid(
                    "channels",
                    alloc::format!("{name}: width must be positive and strength >= 0"),
                ));
            }
        }
        if self.layout().end > self.view_dim {
            return Err(invalid(
                "view_dim",
                alloc::format!(
                    "{} channels needed, view has {}",
                    self.layout().end,
                    self.view_dim
                ),
            ));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(invalid("noise_std", "must be finite and >= 0"));
        }
        if self.train_size == 0 || self.test_size == 0 {
            return Err(invalid(
                "train_size",
                "train and test sets must be non-empty",
            ));
        }
        Ok(())
    }

    /// Start offsets of the channel blocks inside a view.
    pub fn layout(&self) -> Layout {
        let common = 0;
        let unique = common + self.common.span();
        let synergy = unique + self.unique_a.span().max(self.unique_b.span());
        Layout {
            common,
            unique,
            synergy,
            end: synergy + self.synergy.span(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub common: usize,
    pub unique: usize,
    pub synergy: usize,
    pub end: usize,
}

/// Which latent bits produced a sample, in label bit order
/// (common, unique A, unique B, synergy), plus the hidden sign drawn for each
/// synergy bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub bits: Vec<u8>,
    pub synergy_signs: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewSample {
    pub view_a: Vec<f64>,
    pub view_b: Vec<f64>,
    pub label: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub spec: TaskSpec,
    pub train: Vec<MultiViewSample>,
    pub test: Vec<MultiViewSample>,
}

pub fn generate_task(spec: &TaskSpec) -> Result<TaskData> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, 0);
    let train = (0..spec.train_size)
        .map(|_| draw_sample(spec, &mut rng))
        .collect();
    let test = (0..spec.test_size)
        .map(|_| draw_sample(spec, &mut rng))
        .collect();
    Ok(TaskData {
        spec: spec.clone(),
        train,
        test,
    })
}

fn draw_sample<R: Rng>(spec: &TaskSpec, rng: &mut R) -> MultiViewSample {
    let layout = spec.layout();
    let bits: Vec<u8> = (0..spec.total_bits())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let label = bits
        .iter()
        .enumerate()
        .map(|(k, b)| (*b as usize) << k)
        .sum();
    let pm = |b: u8| if b == 1 { 1.0 } else { -1.0 };
    let mut a = vec![0.0; spec.view_dim];
    let mut b = vec![0.0; spec.view_dim];
    let mut bit = 0;

    let c = spec.common;
    for k in 0..c.bits {
        let v = c.strength * pm(bits[bit]);
        for w in 0..c.width {
            a[layout.common + k * c.width + w] = v;
            b[layout.common + k * c.width + w] = v;
        }
        bit += 1;
    }
    for (spec_u, view) in [(spec.unique_a, &mut a), (spec.unique_b, &mut b)] {
        for k in 0..spec_u.bits {
            let v = spec_u.strength * pm(bits[bit]);
            for w in 0..spec_u.width {
                view[layout.unique + k * spec_u.width + w] = v;
            }
            bit += 1;
        }
    }
    let s = spec.synergy;
    let mut signs = Vec::with_capacity(s.bits);
    for k in 0..s.bits {
        let r: i8 = if rng.random::<bool>() { 1 } else { -1 };
        signs.push(r);
        let va = s.strength * r as f64;
        let vb = va * pm(bits[bit]);
        for w in 0..s.width {
            a[layout.synergy + k * s.width + w] = va;
            b[layout.synergy + k * s.width + w] = vb;
        }
        bit += 1;
    }
    if spec.noise_std > 0.0 {
        for x in a.iter_mut().chain(b.iter_mut()) {
            let z: f64 = StandardNormal.sample(rng);
            *x += spec.noise_std * z;
        }
    }
    MultiViewSample {
        view_a: a,
        view_b: b,
        label,
        provenance: Provenance {
            bits,
            synergy_signs: signs,
        },
    }
}

/// `gain * view + N(0, noise_std^2)` per entry.
pub fn apply_blur<R: Rng + ?Sized>(view: &mut [f64], gain: f64, noise_std: f64, rng: &mut R) {
    for x in view.iter_mut() {
        *x *= gain;
        if noise_std > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            *x += noise_std * z;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Pathway {
    A,
    B,
}

impl Pathway {
    pub fn other(self) -> Pathway {
        match self {
            Pathway::A => Pathway::B,
            Pathway::B => Pathway::A,
        }
    }
}

/// A minibatch in flat row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub dim: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub labels: Vec<usize>,
    /// Dissociated batches: which view supplied each sample's label.
    pub label_side: Option<Vec<Pathway>>,
}

impl Batch {
    pub fn from_samples<'s>(
        dim: usize,
        samples: impl IntoIterator<Item = &'s MultiViewSample>,
    ) -> Self {
        let mut batch = Batch {
            dim,
            a: Vec::new(),
            b: Vec::new(),
            labels: Vec::new(),
            label_side: None,
        };
        for s in samples {
            batch.a.extend_from_slice(&s.view_a);
            batch.b.extend_from_slice(&s.view_b);
            batch.labels.push(s.label);
        }
        batch
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn view_a(&self, i: usize) -> &[f64] {
        &self.a[i * self.dim..(i + 1) * self.dim]
    }

    pub fn view_b(&self, i: usize) -> &[f64] {
        &self.b[i * self.dim..(i + 1) * self.dim]
    }

    pub fn view_mut(&mut self, pathway: Pathway, i: usize) -> &mut [f64] {
        let d = self.dim;
        match pathway {
            Pathway::A => &mut self.a[i * d..(i + 1) * d],
            Pathway::B => &mut self.b[i * d..(i + 1) * d],
        }
    }
}

/// Breaks the pairing between views: view B is shuffled across the batch by a
/// uniform permutation and each sample's label is taken from view A's or view
/// B's source sample with probability 1/2. Returns the permutation used
/// (`new_b[i] = old_b[perm[i]]`).
pub fn apply_dissociation<R: Rng + ?Sized>(batch: &mut Batch, rng: &mut R) -> Result<Vec<usize>> {
    let n = batch.len();
    if n < 2 {
        return Err(invalid("batch", "dissociation needs at least two samples"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let d = batch.dim;
    let old_b = core::mem::take(&mut batch.b);
    batch.b = Vec::with_capacity(old_b.len());
    for &p in &perm {
        batch.b.extend_from_slice(&old_b[p * d..(p + 1) * d]);
    }
    let old_labels = batch.labels.clone();
    let mut sides = Vec::with_capacity(n);
    for i in 0..n {
        if rng.random::<bool>() {
            sides.push(Pathway::A);
        } else {
            batch.labels[i] = old_labels[perm[i]];
            sides.push(Pathway::B);
        }
    }
    batch.label_side = Some(sides);
    Ok(perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_count_must_match_bits() {
        let spec = TaskSpec {
            class_count: 6,
            ..TaskSpec::default()
        };
        assert!(spec.validate().is_err());
        assert!(TaskSpec::default().validate().is_ok());
        assert!(TaskSpec::synergy_unique().validate().is_ok());
    }

    #[test]
    fn layout_must_fit() {
        let spec = TaskSpec {
            view_dim: 3,
            ..TaskSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn noiseless_views_encode_bits() {
        let spec = TaskSpec {
            noise_std: 0.0,
            ..TaskSpec::synergy_unique()
        };
        let data = generate_task(&spec).unwrap();
        let l = spec.layout();
        for s in &data.train {
            let bits = &s.provenance.bits;
            assert_eq!(s.label, (bits[0] + 2 * bits[1] + 4 * bits[2]) as usize);
            assert_eq!(s.view_a[l.unique] > 0.0, bits[0] == 1);
            assert_eq!(s.view_b[l.unique] > 0.0, bits[1] == 1);
            let product = s.view_a[l.synergy] * s.view_b[l.synergy];
            assert_eq!(product > 0.0, bits[2] == 1);
            assert_eq!(s.view_a[l.synergy], s.provenance.synergy_signs[0] as f64);
            assert!(s.view_a[l.end..].iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn blur_identity_and_zero_gain() {
        let mut rng = rng::stream(0, 0);
        let mut v = vec![1.0, -2.0, 3.0];
        apply_blur(&mut v, 1.0, 0.0, &mut rng);
        assert_eq!(v, vec![1.0, -2.0, 3.0]);
        apply_blur(&mut v, 0.0, 0.0, &mut rng);
        assert_eq!(v, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn dissociation_needs_two_samples() {
        let data = generate_task(&TaskSpec::default()).unwrap();
        let mut batch = Batch::from_samples(24, data.train.iter().take(1));
        assert!(apply_dissociation(&mut batch, &mut rng::stream(1, 1)).is_err());
    }

    #[test]
    fn dissociation_labels_follow_sides() {
        let data = generate_task(&TaskSpec::default()).unwrap();
        let samples: Vec<_> = data.train.iter().take(64).collect();
        let mut batch = Batch::from_samples(24, samples.iter().copied());
        let perm = apply_dissociation(&mut batch, &mut rng::stream(2, 1)).unwrap();
        let sides = batch.label_side.clone().unwrap();
        for i in 0..64 {
            assert_eq!(batch.view_a(i), &samples[i].view_a[..]);
            assert_eq!(batch.view_b(i), &samples[perm[i]].view_b[..]);
            let expected = match sides[i] {
                Pathway::A => samples[i].label,
                Pathway::B => samples[perm[i]].label,
            };
            assert_eq!(batch.labels[i], expected);
        }
    }
}
