//! Dense `f64` tensors and the layer primitives the network is built from.
//!
//! Every forward function here has a matching backward function that returns
//! the exact analytic gradient. All functions are pure: inputs are borrowed
//! immutably and fresh tensors are returned.

use std::fmt;

use crate::{Error, Result, NUM_CLASSES};

/// Floor applied to probabilities before taking a logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

/// Pixels whose absolute difference exceeds this count towards L0.
pub const L0_THRESHOLD: f64 = 1e-12;

/// Dense row-major tensor of `f64` values.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::dim(format!(
                "invalid shape {shape:?}: dimensions must be positive"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::dim(format!(
                "shape {shape:?} holds {expected} values but data has {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    /// Zero-filled tensor. Panics if any dimension is zero.
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(
            !shape.is_empty() && shape.iter().all(|&d| d > 0),
            "invalid shape {shape:?}"
        );
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![data.len()], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Tensor::new(shape, self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    fn expect_rank(&self, rank: usize, what: &str) -> Result<()> {
        if self.rank() != rank {
            return Err(Error::dim(format!(
                "{what} must have rank {rank}, got shape {:?}",
                self.shape
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const PREVIEW: usize = 8;
        write!(f, "Tensor{:?}", self.shape)?;
        let head = &self.data[..self.data.len().min(PREVIEW)];
        write!(f, " {head:?}")?;
        if self.data.len() > PREVIEW {
            write!(f, " ..")?;
        }
        Ok(())
    }
}

/// Gradients produced by [`conv2d_backward`].
#[derive(Debug, Clone)]
pub struct Conv2dGrads {
    pub input: Tensor,
    pub kernels: Tensor,
    pub bias: Tensor,
}

/// Gradients produced by [`dense_backward`].
#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

struct ConvGeometry {
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    k: usize,
    stride: usize,
    out_h: usize,
    out_w: usize,
}

fn conv_geometry(input: &Tensor, kernels: &Tensor, stride: usize) -> Result<ConvGeometry> {
    input.expect_rank(3, "conv input")?;
    kernels.expect_rank(4, "conv kernels")?;
    if stride == 0 {
        return Err(Error::dim("conv stride must be positive"));
    }
    let (c_in, h, w) = (input.shape[0], input.shape[1], input.shape[2]);
    let (c_out, kc, kh, kw) = (kernels.shape[0], kernels.shape[1], kernels.shape[2], kernels.shape[3]);
    if kc != c_in {
        return Err(Error::dim(format!(
            "conv channel axis: input has {c_in} channels, kernels expect {kc}"
        )));
    }
    if kh != kw {
        return Err(Error::dim(format!(
            "conv kernel axes: kernels must be square, got {kh}x{kw}"
        )));
    }
    let k = kh;
    if h < k || w < k {
        return Err(Error::dim(format!(
            "conv spatial axes: input {h}x{w} is smaller than kernel {k}x{k}"
        )));
    }
    if (h - k) % stride != 0 || (w - k) % stride != 0 {
        return Err(Error::dim(format!(
            "conv spatial axes: ({h}-{k}) and ({w}-{k}) must be divisible by stride {stride}"
        )));
    }
    Ok(ConvGeometry {
        c_in,
        h,
        w,
        c_out,
        k,
        stride,
        out_h: (h - k) / stride + 1,
        out_w: (w - k) / stride + 1,
    })
}

/// Unrolls every receptive field into a `[C_in * k * k, out_h * out_w]`
/// row-major matrix. Row order is `(c_in, row, col)` of the kernel window.
fn im2col(input: &Tensor, g: &ConvGeometry) -> Vec<f64> {
    let plane = g.out_h * g.out_w;
    let mut cols = vec![0.0; g.c_in * g.k * g.k * plane];
    let mut j = 0;
    for ci in 0..g.c_in {
        let in_c = &input.data[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ki in 0..g.k {
            for kj in 0..g.k {
                let dst = &mut cols[j * plane..(j + 1) * plane];
                for oy in 0..g.out_h {
                    let row = &in_c[(oy * g.stride + ki) * g.w..];
                    let dst_row = &mut dst[oy * g.out_w..(oy + 1) * g.out_w];
                    if g.stride == 1 {
                        dst_row.copy_from_slice(&row[kj..kj + g.out_w]);
                    } else {
                        for (ox, d) in dst_row.iter_mut().enumerate() {
                            *d = row[ox * g.stride + kj];
                        }
                    }
                }
                j += 1;
            }
        }
    }
    cols
}

/// Scatter-adds an unrolled `[C_in * k * k, out_h * out_w]` gradient back onto the input grid.
fn col2im(cols: &[f64], g: &ConvGeometry) -> Vec<f64> {
    let plane = g.out_h * g.out_w;
    let mut grad = vec![0.0; g.c_in * g.h * g.w];
    let mut j = 0;
    for ci in 0..g.c_in {
        let gi_c = &mut grad[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ki in 0..g.k {
            for kj in 0..g.k {
                let src = &cols[j * plane..(j + 1) * plane];
                for oy in 0..g.out_h {
                    let gi_row = &mut gi_c[(oy * g.stride + ki) * g.w..];
                    let src_row = &src[oy * g.out_w..(oy + 1) * g.out_w];
                    for (ox, &v) in src_row.iter().enumerate() {
                        gi_row[ox * g.stride + kj] += v;
                    }
                }
                j += 1;
            }
        }
    }
    grad
}

/// Valid (unpadded) 2-D cross-correlation.
///
/// `input` is `[C_in, H, W]`, `kernels` is `[C_out, C_in, k, k]` and `bias`
/// is `[C_out]`. Each output value accumulates `bias` first and then the
/// window products in `(c_in, row, col)` order.
pub fn conv2d_forward(input: &Tensor, kernels: &Tensor, bias: &Tensor, stride: usize) -> Result<Tensor> {
    let g = conv_geometry(input, kernels, stride)?;
    if bias.len() != g.c_out {
        return Err(Error::dim(format!(
            "conv bias axis: expected {} values, got {}",
            g.c_out,
            bias.len()
        )));
    }
    let plane = g.out_h * g.out_w;
    let window = g.c_in * g.k * g.k;
    let cols = im2col(input, &g);
    let mut out = vec![0.0; g.c_out * plane];
    for (co, out_c) in out.chunks_exact_mut(plane).enumerate() {
        let w_row = &kernels.data[co * window..(co + 1) * window];
        if plane == 1 {
            let mut acc = bias.data[co];
            for (&wv, &x) in w_row.iter().zip(&cols) {
                acc += x * wv;
            }
            out_c[0] = acc;
            continue;
        }
        out_c.fill(bias.data[co]);
        for (&wv, col) in w_row.iter().zip(cols.chunks_exact(plane)) {
            for (o, &x) in out_c.iter_mut().zip(col) {
                *o += x * wv;
            }
        }
    }
    Tensor::new(vec![g.c_out, g.out_h, g.out_w], out)
}

/// Exact gradients of [`conv2d_forward`] with respect to input, kernels and bias.
pub fn conv2d_backward(grad_out: &Tensor, input: &Tensor, kernels: &Tensor, stride: usize) -> Result<Conv2dGrads> {
    let (kernels_grad, bias_grad, input_grad) = conv2d_backward_impl(grad_out, input, kernels, stride, true)?;
    Ok(Conv2dGrads {
        input: input_grad.expect("input gradient requested"),
        kernels: kernels_grad,
        bias: bias_grad,
    })
}

/// Like [`conv2d_backward`] but skips the input gradient. Used for the first
/// layer during training where nothing upstream needs it.
pub(crate) fn conv2d_backward_params(
    grad_out: &Tensor,
    input: &Tensor,
    kernels: &Tensor,
    stride: usize,
) -> Result<(Tensor, Tensor)> {
    let (kg, bg, _) = conv2d_backward_impl(grad_out, input, kernels, stride, false)?;
    Ok((kg, bg))
}

fn conv2d_backward_impl(
    grad_out: &Tensor,
    input: &Tensor,
    kernels: &Tensor,
    stride: usize,
    want_input: bool,
) -> Result<(Tensor, Tensor, Option<Tensor>)> {
    let g = conv_geometry(input, kernels, stride)?;
    if grad_out.shape != [g.c_out, g.out_h, g.out_w] {
        return Err(Error::dim(format!(
            "conv grad_out: expected shape [{}, {}, {}], got {:?}",
            g.c_out, g.out_h, g.out_w, grad_out.shape
        )));
    }
    let plane = g.out_h * g.out_w;
    let window = g.c_in * g.k * g.k;
    let cols = im2col(input, &g);
    let mut grad_k = vec![0.0; kernels.len()];
    let mut grad_b = vec![0.0; g.c_out];
    let mut grad_cols = if want_input { vec![0.0; cols.len()] } else { Vec::new() };

    for (co, go) in grad_out.data.chunks_exact(plane).enumerate() {
        grad_b[co] = go.iter().sum();
        let gk_row = &mut grad_k[co * window..(co + 1) * window];
        for (gk, col) in gk_row.iter_mut().zip(cols.chunks_exact(plane)) {
            *gk = go.iter().zip(col).map(|(d, x)| d * x).sum();
        }
        if want_input {
            let w_row = &kernels.data[co * window..(co + 1) * window];
            for (&wv, gcol) in w_row.iter().zip(grad_cols.chunks_exact_mut(plane)) {
                for (gc, &d) in gcol.iter_mut().zip(go) {
                    *gc += d * wv;
                }
            }
        }
    }

    let grad_input = if want_input {
        Some(Tensor::new(input.shape.clone(), col2im(&grad_cols, &g))?)
    } else {
        None
    };
    Ok((
        Tensor::new(kernels.shape.clone(), grad_k)?,
        Tensor::new(vec![g.c_out], grad_b)?,
        grad_input,
    ))
}

/// Non-overlapping 2x2 mean pooling over `[C, H, W]`.
pub fn avgpool2_forward(input: &Tensor) -> Result<Tensor> {
    input.expect_rank(3, "avgpool input")?;
    let (c, h, w) = (input.shape[0], input.shape[1], input.shape[2]);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::dim(format!("avgpool spatial axes must be even, got {h}x{w}")));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let src = &input.data[ch * h * w..(ch + 1) * h * w];
        for oy in 0..oh {
            let r0 = &src[2 * oy * w..(2 * oy + 1) * w];
            let r1 = &src[(2 * oy + 1) * w..(2 * oy + 2) * w];
            for ox in 0..ow {
                let s = r0[2 * ox] + r0[2 * ox + 1] + r1[2 * ox] + r1[2 * ox + 1];
                out.push(s / 4.0);
            }
        }
    }
    Tensor::new(vec![c, oh, ow], out)
}

/// Spreads each pooled gradient uniformly (`grad / 4`) over its 2x2 block.
pub fn avgpool2_backward(grad_out: &Tensor) -> Result<Tensor> {
    grad_out.expect_rank(3, "avgpool grad_out")?;
    let (c, oh, ow) = (grad_out.shape[0], grad_out.shape[1], grad_out.shape[2]);
    let (h, w) = (oh * 2, ow * 2);
    let mut grad = vec![0.0; c * h * w];
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let q = grad_out.data[(ch * oh + oy) * ow + ox] / 4.0;
                let base = ch * h * w + 2 * oy * w + 2 * ox;
                grad[base] = q;
                grad[base + 1] = q;
                grad[base + w] = q;
                grad[base + w + 1] = q;
            }
        }
    }
    Tensor::new(vec![c, h, w], grad)
}

/// `weights * input + bias`. `input` may have any shape; it is read flat.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    weights.expect_rank(2, "dense weights")?;
    let (m, n) = (weights.shape[0], weights.shape[1]);
    if input.len() != n {
        return Err(Error::dim(format!(
            "dense input length {} does not match weight columns {n}",
            input.len()
        )));
    }
    if bias.len() != m {
        return Err(Error::dim(format!(
            "dense bias length {} does not match weight rows {m}",
            bias.len()
        )));
    }
    let out = weights
        .data
        .chunks_exact(n)
        .zip(&bias.data)
        .map(|(row, &b)| b + row.iter().zip(&input.data).map(|(w, x)| w * x).sum::<f64>())
        .collect();
    Tensor::new(vec![m], out)
}

pub fn dense_backward(grad_out: &Tensor, input: &Tensor, weights: &Tensor) -> Result<DenseGrads> {
    weights.expect_rank(2, "dense weights")?;
    let (m, n) = (weights.shape[0], weights.shape[1]);
    if input.len() != n || grad_out.len() != m {
        return Err(Error::dim(format!(
            "dense backward: weights are {m}x{n}, input has {} values, grad_out has {}",
            input.len(),
            grad_out.len()
        )));
    }
    let mut grad_in = vec![0.0; n];
    let mut grad_w = vec![0.0; m * n];
    for (i, &d) in grad_out.data.iter().enumerate() {
        let w_row = &weights.data[i * n..(i + 1) * n];
        let gw_row = &mut grad_w[i * n..(i + 1) * n];
        for j in 0..n {
            gw_row[j] = d * input.data[j];
            grad_in[j] += d * w_row[j];
        }
    }
    Ok(DenseGrads {
        input: Tensor::new(input.shape.clone(), grad_in)?,
        weights: Tensor::new(weights.shape.clone(), grad_w)?,
        bias: Tensor::new(vec![m], grad_out.data.clone())?,
    })
}

pub fn tanh_forward(input: &Tensor) -> Result<Tensor> {
    if let Some(i) = input.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::validation(format!(
            "tanh input is not finite at index {i}: {}",
            input.data[i]
        )));
    }
    Ok(input.map(f64::tanh))
}

/// Backward of tanh given the forward *output*: `grad * (1 - y^2)`.
pub fn tanh_backward(grad_out: &Tensor, output: &Tensor) -> Result<Tensor> {
    if grad_out.shape != output.shape {
        return Err(Error::dim(format!(
            "tanh backward: grad_out {:?} vs output {:?}",
            grad_out.shape, output.shape
        )));
    }
    let data = grad_out
        .data
        .iter()
        .zip(&output.data)
        .map(|(g, y)| g * (1.0 - y * y))
        .collect();
    Tensor::new(output.shape.clone(), data)
}

/// A probability distribution over the ten digit classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbVector([f64; NUM_CLASSES]);

impl ProbVector {
    /// Validates that every value lies in `[0, 1]` and the total is 1 within `1e-9`.
    pub fn new(probs: [f64; NUM_CLASSES]) -> Result<Self> {
        if let Some(i) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::validation(format!("probability {i} out of range: {}", probs[i])));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("probabilities sum to {total}, not 1")));
        }
        Ok(ProbVector(probs))
    }

    pub fn one_hot(class: usize) -> Result<Self> {
        if class >= NUM_CLASSES {
            return Err(Error::validation(format!("class {class} is not in 0..{NUM_CLASSES}")));
        }
        let mut p = [0.0; NUM_CLASSES];
        p[class] = 1.0;
        Ok(ProbVector(p))
    }

    pub fn probs(&self) -> &[f64; NUM_CLASSES] {
        &self.0
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    /// Index of the largest probability; ties go to the smallest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// The class index if this vector is exactly one-hot.
    pub fn one_hot_class(&self) -> Option<usize> {
        let hot = self.0.iter().position(|&p| p == 1.0)?;
        self.0
            .iter()
            .enumerate()
            .all(|(i, &p)| i == hot || p == 0.0)
            .then_some(hot)
    }
}

/// Index of the largest value, smallest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Max-shifted softmax over an arbitrary-length slice.
pub fn softmax_slice(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn softmax(logits: &Tensor) -> Result<ProbVector> {
    if logits.len() != NUM_CLASSES {
        return Err(Error::dim(format!(
            "softmax expects {NUM_CLASSES} logits, got {}",
            logits.len()
        )));
    }
    if !logits.is_finite() {
        return Err(Error::validation("softmax logits must be finite"));
    }
    let mut probs = [0.0; NUM_CLASSES];
    probs.copy_from_slice(&softmax_slice(logits.data()));
    Ok(ProbVector(probs))
}

/// `-sum(y_true * ln(max(y_pred, LOG_FLOOR)))` for a one-hot `y_true`.
pub fn cross_entropy(y_true: &ProbVector, y_pred: &ProbVector) -> Result<f64> {
    let class = y_true
        .one_hot_class()
        .ok_or_else(|| Error::validation("cross-entropy target must be one-hot"))?;
    Ok(-y_pred.get(class).max(LOG_FLOOR).ln())
}

/// Gradient of `cross_entropy(y_true, softmax(logits))` with respect to the
/// logits, which is exactly `softmax(logits) - y_true`.
pub fn softmax_xent_grad(y_true: &ProbVector, logits: &Tensor) -> Result<Tensor> {
    if y_true.one_hot_class().is_none() {
        return Err(Error::validation("cross-entropy target must be one-hot"));
    }
    let y_pred = softmax(logits)?;
    let grad = y_pred.0.iter().zip(&y_true.0).map(|(p, y)| p - y).collect();
    Tensor::new(vec![NUM_CLASSES], grad)
}

/// L0 / L2 / L-infinity distances between two images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationMetrics {
    pub l0: usize,
    pub l2: f64,
    pub linf: f64,
}

pub fn lp_metrics(a: &[f64], b: &[f64]) -> Result<PerturbationMetrics> {
    if a.len() != b.len() {
        return Err(Error::dim(format!("lp metrics: {} vs {} pixels", a.len(), b.len())));
    }
    let mut m = PerturbationMetrics {
        l0: 0,
        l2: 0.0,
        linf: 0.0,
    };
    let mut sq = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).abs();
        if d > L0_THRESHOLD {
            m.l0 += 1;
        }
        sq += d * d;
        m.linf = m.linf.max(d);
    }
    m.l2 = sq.sqrt();
    Ok(m)
}
