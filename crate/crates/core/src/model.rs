//! The LeNet-5 classifier: construction, forward/backward passes, minibatch
//! SGD training and binary checkpoints.
//!
//! Layer roster (input zero-padded from 28x28 to 32x32):
//!
//! ```text
//! 1x32x32 -C1-> 6x28x28 -S2-> 6x14x14 -C3-> 16x10x10 -S4-> 16x5x5 -C5-> 120x1x1 -F6-> 84 -out-> 10
//! ```
//!
//! C1, C3, C5 and F6 are followed by tanh. C3 is fully connected across the
//! six S2 maps.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::mnist::{Image, LabeledDataset, IMAGE_SIDE};
use crate::tensor::{
    avgpool2_backward, avgpool2_forward, conv2d_backward, conv2d_backward_params, conv2d_forward, cross_entropy,
    dense_backward, dense_forward, softmax, softmax_xent_grad, tanh_backward, tanh_forward, ProbVector, Tensor,
};
use crate::{Error, Result};

/// Side length of the padded network input.
pub const INPUT_SIDE: usize = 32;
/// Zero border added on each side of a 28x28 image.
pub const INPUT_PAD: usize = (INPUT_SIDE - IMAGE_SIDE) / 2;

pub const CHECKPOINT_MAGIC: &[u8; 7] = b"LN5CKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Parameter names and shapes in checkpoint order.
const ROSTER: [(&str, &[usize]); 10] = [
    ("c1.weight", &[6, 1, 5, 5]),
    ("c1.bias", &[6]),
    ("c3.weight", &[16, 6, 5, 5]),
    ("c3.bias", &[16]),
    ("c5.weight", &[120, 16, 5, 5]),
    ("c5.bias", &[120]),
    ("f6.weight", &[84, 120]),
    ("f6.bias", &[84]),
    ("out.weight", &[10, 84]),
    ("out.bias", &[10]),
];

/// SHA-256 of the textual layer roster, stored in every checkpoint.
pub fn architecture_fingerprint() -> [u8; 32] {
    let mut roster = String::from("lenet5");
    for (name, dims) in ROSTER {
        let dims: Vec<String> = dims.iter().map(ToString::to_string).collect();
        roster.push_str(&format!(";{name}={}", dims.join("x")));
    }
    Sha256::digest(roster.as_bytes()).into()
}

/// Zero-pads a 28x28 image into the `[1, 32, 32]` network input.
pub fn pad_image(image: &Image) -> Tensor {
    let mut padded = Tensor::zeros(&[1, INPUT_SIDE, INPUT_SIDE]);
    let data = padded.data_mut();
    for (row, src) in image.pixels().chunks_exact(IMAGE_SIDE).enumerate() {
        let start = (row + INPUT_PAD) * INPUT_SIDE + INPUT_PAD;
        data[start..start + IMAGE_SIDE].copy_from_slice(src);
    }
    padded
}

/// Crops the central 28x28 window of a `[1, 32, 32]` tensor.
fn crop_input(padded: &Tensor) -> Tensor {
    let mut out = Vec::with_capacity(IMAGE_SIDE * IMAGE_SIDE);
    for row in 0..IMAGE_SIDE {
        let start = (row + INPUT_PAD) * INPUT_SIDE + INPUT_PAD;
        out.extend_from_slice(&padded.data()[start..start + IMAGE_SIDE]);
    }
    Tensor::new(vec![1, IMAGE_SIDE, IMAGE_SIDE], out).expect("crop shape")
}

/// Trainable parameters of the network. Also used as the container for
/// parameter gradients, which share the same shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    params: Vec<Tensor>,
}

/// Per-layer activations kept from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Tensor,
    c1: Tensor,
    s2: Tensor,
    c3: Tensor,
    s4: Tensor,
    c5: Tensor,
    f6: Tensor,
    logits: Tensor,
}

impl ForwardCache {
    pub fn logits(&self) -> &Tensor {
        &self.logits
    }

    /// Output shapes of every stage, input first.
    pub fn shape_chain(&self) -> Vec<Vec<usize>> {
        [
            &self.input,
            &self.c1,
            &self.s2,
            &self.c3,
            &self.s4,
            &self.c5,
            &self.f6,
            &self.logits,
        ]
        .iter()
        .map(|t| t.shape().to_vec())
        .collect()
    }
}

/// Shape, parameter count and connection count of one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSummary {
    pub name: &'static str,
    pub output_shape: Vec<usize>,
    pub params: usize,
    pub connections: usize,
}

impl Model {
    /// Fresh model with weights uniform in `±1/sqrt(fan_in)` and zero biases.
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ROSTER
            .iter()
            .map(|(name, dims)| {
                let mut t = Tensor::zeros(dims);
                if name.ends_with(".weight") {
                    let fan_in: usize = dims[1..].iter().product();
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    for v in t.data_mut() {
                        *v = rng.gen_range(-bound..bound);
                    }
                }
                t
            })
            .collect();
        Model { params }
    }

    /// Model with every parameter zero.
    pub fn zeros() -> Self {
        Model {
            params: ROSTER.iter().map(|(_, dims)| Tensor::zeros(dims)).collect(),
        }
    }

    /// Builds a model from named tensors in roster order.
    pub fn from_params(params: Vec<Tensor>) -> Result<Self> {
        if params.len() != ROSTER.len() {
            return Err(Error::Architecture);
        }
        for (t, (_, dims)) in params.iter().zip(ROSTER) {
            if t.shape() != dims {
                return Err(Error::Architecture);
            }
        }
        Ok(Model { params })
    }

    pub fn named_params(&self) -> impl Iterator<Item = (&'static str, &Tensor)> {
        ROSTER.iter().map(|(n, _)| *n).zip(&self.params)
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(Tensor::is_finite)
    }

    pub fn summary() -> Vec<LayerSummary> {
        let conv = |name, out: [usize; 3], c_in: usize| {
            let per_unit = c_in * 25 + 1;
            LayerSummary {
                name,
                output_shape: out.to_vec(),
                params: out[0] * per_unit,
                connections: out.iter().product::<usize>() * per_unit,
            }
        };
        let pool = |name, out: [usize; 3]| LayerSummary {
            name,
            output_shape: out.to_vec(),
            params: 0,
            connections: out.iter().product::<usize>() * 4,
        };
        let dense = |name, m: usize, n: usize| LayerSummary {
            name,
            output_shape: vec![m],
            params: m * (n + 1),
            connections: m * (n + 1),
        };
        vec![
            conv("C1", [6, 28, 28], 1),
            pool("S2", [6, 14, 14]),
            conv("C3", [16, 10, 10], 6),
            pool("S4", [16, 5, 5]),
            conv("C5", [120, 1, 1], 16),
            dense("F6", 84, 120),
            dense("output", 10, 84),
        ]
    }

    /// Forward pass on an already padded `[1, 32, 32]` input.
    pub fn forward_padded(&self, input: Tensor) -> Result<ForwardCache> {
        if input.shape() != [1, INPUT_SIDE, INPUT_SIDE] {
            return Err(Error::dim(format!(
                "model input must be [1, {INPUT_SIDE}, {INPUT_SIDE}], got {:?}",
                input.shape()
            )));
        }
        let p = &self.params;
        let c1 = tanh_forward(&conv2d_forward(&input, &p[0], &p[1], 1)?)?;
        let s2 = avgpool2_forward(&c1)?;
        let c3 = tanh_forward(&conv2d_forward(&s2, &p[2], &p[3], 1)?)?;
        let s4 = avgpool2_forward(&c3)?;
        let c5 = tanh_forward(&conv2d_forward(&s4, &p[4], &p[5], 1)?)?;
        let f6 = tanh_forward(&dense_forward(&c5, &p[6], &p[7])?)?;
        let logits = dense_forward(&f6, &p[8], &p[9])?;
        Ok(ForwardCache {
            input,
            c1,
            s2,
            c3,
            s4,
            c5,
            f6,
            logits,
        })
    }

    pub fn forward(&self, image: &Image) -> Result<(Tensor, ForwardCache)> {
        let cache = self.forward_padded(pad_image(image))?;
        Ok((cache.logits.clone(), cache))
    }

    pub fn logits(&self, image: &Image) -> Result<Tensor> {
        Ok(self.forward_padded(pad_image(image))?.logits)
    }

    pub fn predict_proba(&self, image: &Image) -> Result<ProbVector> {
        softmax(&self.logits(image)?)
    }

    /// Most likely class, smallest index on ties.
    pub fn predict(&self, image: &Image) -> Result<usize> {
        Ok(crate::tensor::argmax(self.logits(image)?.data()))
    }

    /// Backpropagates a logit-space cotangent. Returns parameter gradients and,
    /// when requested, the gradient with respect to the padded input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_logits: &Tensor,
        want_input: bool,
    ) -> Result<(Model, Option<Tensor>)> {
        let p = &self.params;
        let out = dense_backward(grad_logits, &cache.f6, &p[8])?;
        let f6_pre = tanh_backward(&out.input, &cache.f6)?;
        let f6 = dense_backward(&f6_pre, &cache.c5, &p[6])?;
        let c5_pre = tanh_backward(&f6.input, &cache.c5)?;
        let c5 = conv2d_backward(&c5_pre, &cache.s4, &p[4], 1)?;
        let s4 = avgpool2_backward(&c5.input)?;
        let c3_pre = tanh_backward(&s4, &cache.c3)?;
        let c3 = conv2d_backward(&c3_pre, &cache.s2, &p[2], 1)?;
        let s2 = avgpool2_backward(&c3.input)?;
        let c1_pre = tanh_backward(&s2, &cache.c1)?;
        let (c1_k, c1_b, input_grad) = if want_input {
            let g = conv2d_backward(&c1_pre, &cache.input, &p[0], 1)?;
            (g.kernels, g.bias, Some(g.input))
        } else {
            let (k, b) = conv2d_backward_params(&c1_pre, &cache.input, &p[0], 1)?;
            (k, b, None)
        };
        let grads = Model {
            params: vec![
                c1_k,
                c1_b,
                c3.kernels,
                c3.bias,
                c5.kernels,
                c5.bias,
                f6.weights,
                f6.bias,
                out.weights,
                out.bias,
            ],
        };
        Ok((grads, input_grad))
    }

    /// Cross-entropy loss of `image` against `label`.
    pub fn loss(&self, image: &Image, label: usize) -> Result<f64> {
        cross_entropy(&ProbVector::one_hot(label)?, &self.predict_proba(image)?)
    }

    /// Loss and parameter gradients for a single sample.
    pub fn loss_and_gradients(&self, image: &Image, label: usize) -> Result<(f64, Model)> {
        let target = ProbVector::one_hot(label)?;
        let cache = self.forward_padded(pad_image(image))?;
        let loss = cross_entropy(&target, &softmax(&cache.logits)?)?;
        let grad_logits = softmax_xent_grad(&target, &cache.logits)?;
        let (grads, _) = self.backward(&cache, &grad_logits, false)?;
        Ok((loss, grads))
    }

    /// Like [`Model::loss_and_gradients`], but non-finite logits yield a NaN
    /// loss so the trainer can report divergence.
    fn training_step(&self, image: &Image, label: usize) -> Result<(f64, Model)> {
        let cache = match self.forward_padded(pad_image(image)) {
            Ok(cache) if cache.logits.is_finite() => cache,
            // overflowing activations are rejected by tanh as non-finite
            Ok(_) | Err(Error::Validation(_)) => return Ok((f64::NAN, Model::zeros())),
            Err(e) => return Err(e),
        };
        let target = ProbVector::one_hot(label)?;
        let loss = cross_entropy(&target, &softmax(&cache.logits)?)?;
        let grad_logits = softmax_xent_grad(&target, &cache.logits)?;
        let (grads, _) = self.backward(&cache, &grad_logits, false)?;
        Ok((loss, grads))
    }

    /// Gradient of the cross-entropy loss with respect to the 28x28 image,
    /// shaped `[1, 28, 28]`. The padding border is cropped away.
    pub fn input_gradient(&self, image: &Image, label: usize) -> Result<Tensor> {
        let target = ProbVector::one_hot(label)?;
        let cache = self.forward_padded(pad_image(image))?;
        let grad_logits = softmax_xent_grad(&target, &cache.logits)?;
        let (_, input_grad) = self.backward(&cache, &grad_logits, true)?;
        Ok(crop_input(&input_grad.expect("input gradient requested")))
    }

    /// Mean cross-entropy over a dataset.
    pub fn mean_loss(&self, data: &LabeledDataset) -> Result<f64> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let losses = map_samples(data, |img, label| self.loss(img, label))?;
        Ok(losses.iter().sum::<f64>() / data.len() as f64)
    }

    /// Fraction of samples whose predicted class equals the label.
    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let hits = map_samples(data, |img, label| Ok(self.predict(img)? == label))?;
        Ok(hits.iter().filter(|&&h| h).count() as f64 / data.len() as f64)
    }

    fn sgd_update(&mut self, grads: &Model, scale: f64) {
        for (p, g) in self.params.iter_mut().zip(&grads.params) {
            for (w, d) in p.data_mut().iter_mut().zip(g.data()) {
                *w -= scale * d;
            }
        }
    }

    fn add_assign(&mut self, other: &Model) {
        for (p, g) in self.params.iter_mut().zip(&other.params) {
            for (a, b) in p.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
    }

    /// Minibatch SGD. `on_epoch` is called after every epoch with its stats.
    pub fn train(
        &mut self,
        train: &LabeledDataset,
        validation: &LabeledDataset,
        config: &TrainConfig,
        mut on_epoch: impl FnMut(&EpochStats),
    ) -> Result<TrainingReport> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::validation("training set is empty"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut report = TrainingReport::default();

        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut loss_sum = 0.0;
            for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
                let results = crate::par::map_slice(batch, |&i| {
                    let (img, label) = train.get(i).expect("shuffled index in range");
                    self.training_step(img, label as usize)
                })?;
                let mut total = Model::zeros();
                let mut batch_loss = 0.0;
                for (loss, grads) in &results {
                    batch_loss += loss;
                    total.add_assign(grads);
                }
                if !batch_loss.is_finite() {
                    return Err(Error::Training {
                        epoch,
                        batch: batch_idx,
                        loss: batch_loss,
                    });
                }
                loss_sum += batch_loss;
                self.sgd_update(&total, config.learning_rate / batch.len() as f64);
                if !self.is_finite() {
                    return Err(Error::Training {
                        epoch,
                        batch: batch_idx,
                        loss: f64::NAN,
                    });
                }
            }
            let validation_accuracy = if validation.is_empty() {
                None
            } else {
                Some(self.accuracy(validation)?)
            };
            let stats = EpochStats {
                epoch,
                mean_loss: loss_sum / train.len() as f64,
                validation_accuracy,
            };
            on_epoch(&stats);
            report.epochs.push(stats);
            if validation_accuracy.is_some_and(|a| a >= config.validation_target_accuracy) {
                report.reached_target = true;
                break;
            }
        }
        report.final_validation_accuracy = report.epochs.last().and_then(|e| e.validation_accuracy);
        Ok(report)
    }

    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.param_count() * 8);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_be_bytes());
        out.extend_from_slice(&architecture_fingerprint());
        for (name, t) in self.named_params() {
            out.extend_from_slice(&(name.len() as u16).to_be_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.rank() as u8);
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_be_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(CHECKPOINT_MAGIC.len())? != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a LeNet-5 checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}, expected {CHECKPOINT_VERSION}"
            )));
        }
        if r.take(32)? != architecture_fingerprint() {
            return Err(Error::Architecture);
        }
        let mut params = Vec::with_capacity(ROSTER.len());
        for (name, dims) in ROSTER {
            let name_len = r.u16()? as usize;
            let found = r.take(name_len)?;
            if found != name.as_bytes() {
                return Err(Error::Format(format!(
                    "expected parameter {name}, found {}",
                    String::from_utf8_lossy(found)
                )));
            }
            let rank = r.take(1)?[0] as usize;
            let shape = (0..rank)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            if shape != dims {
                return Err(Error::Architecture);
            }
            let n: usize = shape.iter().product();
            let data = r
                .take(n * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_be_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            params.push(Tensor::new(shape, data)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after the last parameter",
                bytes.len() - r.pos
            )));
        }
        Model::from_params(params)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let slice = self.bytes.get(self.pos..end).ok_or(Error::Truncated {
            expected: end,
            actual: self.bytes.len(),
        })?;
        self.pos = end;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, model.to_checkpoint_bytes()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading checkpoint {}", path.display()), e))?;
    Model::from_checkpoint_bytes(&bytes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Training stops early once validation accuracy reaches this value.
    pub validation_target_accuracy: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            learning_rate: 0.1,
            seed: 42,
            validation_target_accuracy: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::validation("epochs and batch_size must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::validation(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.validation_target_accuracy > 0.0 && self.validation_target_accuracy <= 1.0) {
            return Err(Error::validation("validation_target_accuracy must be in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    pub epochs: Vec<EpochStats>,
    pub final_validation_accuracy: Option<f64>,
    pub reached_target: bool,
}

fn map_samples<T: Send>(data: &LabeledDataset, f: impl Fn(&Image, usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let indices: Vec<usize> = (0..data.len()).collect();
    crate::par::map_slice(&indices, |&i| {
        let (img, label) = data.get(i).expect("index in range");
        f(img, label as usize)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mnist::Split;

    fn random_image(seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new((0..784).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn shape_chain() {
        let model = Model::new(1);
        let (logits, cache) = model.forward(&Image::blank()).unwrap();
        assert_eq!(logits.shape(), &[10]);
        let expected: Vec<Vec<usize>> = vec![
            vec![1, 32, 32],
            vec![6, 28, 28],
            vec![6, 14, 14],
            vec![16, 10, 10],
            vec![16, 5, 5],
            vec![120, 1, 1],
            vec![84],
            vec![10],
        ];
        assert_eq!(cache.shape_chain(), expected);
    }

    #[test]
    fn zero_model_is_uniform() {
        let p = Model::zeros().predict_proba(&random_image(3)).unwrap();
        assert!(p.probs().iter().all(|&v| v == 0.1));
    }

    #[test]
    fn seeded_init_is_deterministic() {
        assert_eq!(Model::new(9), Model::new(9));
        assert_ne!(Model::new(9), Model::new(10));
        let m = Model::new(9);
        let c5 = &m.params()[4];
        let bound = 1.0 / 400f64.sqrt();
        assert!(c5.data().iter().all(|v| v.abs() <= bound));
        assert!(m.params()[5].data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_is_pure_and_padding_consistent() {
        let model = Model::new(2);
        let img = random_image(5);
        let a = model.logits(&img).unwrap();
        let b = model.logits(&img).unwrap();
        assert_eq!(a, b);
        let c = model.forward_padded(pad_image(&img)).unwrap();
        assert_eq!(&a, c.logits());
    }

    #[test]
    fn rejects_wrong_input_shape() {
        let model = Model::new(2);
        assert!(matches!(
            model.forward_padded(Tensor::zeros(&[1, 28, 28])),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let p = Model::new(4).predict_proba(&random_image(6)).unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn input_gradient_shape() {
        let g = Model::new(4).input_gradient(&random_image(7), 3).unwrap();
        assert_eq!(g.shape(), &[1, 28, 28]);
        assert!(g.is_finite());
    }

    #[test]
    fn summary_counts() {
        let s = Model::summary();
        assert_eq!(s[0].connections, 122_304);
        assert_eq!(s[4].connections, 48_120);
        assert_eq!(s[5].params, 10_164);
        let total: usize = s.iter().map(|l| l.params).sum();
        assert_eq!(total, Model::new(0).param_count());
    }

    #[test]
    fn checkpoint_round_trip_and_errors() {
        let model = Model::new(11);
        let bytes = model.to_checkpoint_bytes();
        let loaded = Model::from_checkpoint_bytes(&bytes).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(loaded.to_checkpoint_bytes(), bytes);

        let mut bad_version = bytes.clone();
        bad_version[10] = 2;
        assert!(matches!(
            Model::from_checkpoint_bytes(&bad_version),
            Err(Error::Format(_))
        ));

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            Model::from_checkpoint_bytes(&bad_magic),
            Err(Error::Format(_))
        ));

        let mut bad_fp = bytes.clone();
        bad_fp[20] ^= 0xff;
        assert!(matches!(
            Model::from_checkpoint_bytes(&bad_fp),
            Err(Error::Architecture)
        ));

        assert!(matches!(
            Model::from_checkpoint_bytes(&bytes[..bytes.len() - 3]),
            Err(Error::Truncated { .. })
        ));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(Model::from_checkpoint_bytes(&trailing), Err(Error::Format(_))));
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let images: Vec<Image> = (0..8).map(random_image).collect();
        let labels = (0..8).map(|i| i as u8).collect();
        let data = LabeledDataset::new(images, labels, Split::Train).unwrap();
        let mut model = Model::new(3);
        let before = model.clone();
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 3,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let report = model.train(&data, &data, &cfg, |_| {}).unwrap();
        assert_eq!(model, before);
        assert_eq!(report.epochs.len(), 1);
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            learning_rate: f64::NAN,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let images: Vec<Image> = (0..4).map(random_image).collect();
        let data = LabeledDataset::new(images, vec![0, 1, 2, 3], Split::Train).unwrap();
        let mut model = Model::new(3);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 2,
            learning_rate: 1e307,
            ..TrainConfig::default()
        };
        let err = model.train(&data, &data, &cfg, |_| {}).unwrap_err();
        assert!(matches!(err, Error::Training { .. }), "{err}");
    }
}
