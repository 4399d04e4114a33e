//! Differentiable building blocks: graph-convolution and dense layers with
//! explicit analytic backward passes, the weighted reconstruction and KL
//! losses, Glorot initialization, and Adam. There is no autodiff graph; the
//! model is small and fixed, and every backward pass here is checked against
//! the finite-difference oracle in `tensor::gradcheck`.

use crate::error::{Error, Result};
use crate::graph::ReconTarget;
use crate::scalar::{sigmoid, softplus};
use crate::tensor::RngStream;
use crate::{Mat, SpMat};

/// log σ values are clamped to this symmetric range before exponentiation,
/// which bounds σ² in [e^−20, e^20] and keeps the KL loss overflow-free.
pub const LOG_SIGMA_CLAMP: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
    Sigmoid,
}

impl Activation {
    pub fn apply(&self, pre: &Mat) -> Mat {
        match self {
            Activation::Relu => pre.map(|v| v.max(0.0)),
            Activation::Linear => pre.clone(),
            Activation::Sigmoid => pre.map(sigmoid),
        }
    }

    /// `upstream ⊙ φ′(pre)`: the gradient at the pre-activation.
    pub fn backprop(&self, upstream: &Mat, pre: &Mat) -> Result<Mat> {
        match self {
            Activation::Relu => upstream.zip_map(pre, |u, p| if p > 0.0 { u } else { 0.0 }),
            Activation::Linear => Ok(upstream.clone()),
            Activation::Sigmoid => upstream.zip_map(pre, |u, p| {
                let s = sigmoid(p);
                u * s * (1.0 - s)
            }),
        }
    }
}

/// One layer's parameters. GCN layers carry no bias (the propagation rule is
/// weight-only); discriminator dense layers carry one.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub weight: Mat,
    pub bias: Option<Mat>,
    pub activation: Activation,
}

impl LayerParams {
    pub fn new(weight: Mat, bias: Option<Mat>, activation: Activation) -> Result<Self> {
        if let Some(b) = &bias {
            if b.shape() != (1, weight.cols()) {
                return Err(Error::shape(
                    "LayerParams bias",
                    b.shape(),
                    (1, weight.cols()),
                ));
            }
        }
        Ok(LayerParams {
            weight,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Values a backward pass needs from its forward pass: the matrix that fed
/// the weight product and the pre-activation. Single-use; a second take is
/// a state error.
#[derive(Debug)]
pub struct LayerCache {
    stored: Option<(Mat, Mat)>,
}

impl LayerCache {
    fn new(input: Mat, pre_activation: Mat) -> Self {
        LayerCache {
            stored: Some((input, pre_activation)),
        }
    }

    fn take(&mut self) -> Result<(Mat, Mat)> {
        self.stored
            .take()
            .ok_or_else(|| Error::State("layer cache already consumed by a backward pass".into()))
    }
}

/// φ(spmm(norm_adj, z) · W): one graph convolution.
pub fn gcn_layer_forward(z: &Mat, norm_adj: &SpMat, p: &LayerParams) -> Result<(Mat, LayerCache)> {
    let propagated = norm_adj.spmm(z)?;
    let pre = propagated.matmul(&p.weight)?;
    let out = p.activation.apply(&pre);
    Ok((out, LayerCache::new(propagated, pre)))
}

/// Gradients of a graph convolution: `grad_w = (Â·z)ᵀ·(upstream ⊙ φ′)` and
/// `grad_z = Âᵀ·((upstream ⊙ φ′)·Wᵀ)`, using that Â is symmetric.
pub fn gcn_layer_backward(
    upstream: &Mat,
    cache: &mut LayerCache,
    norm_adj: &SpMat,
    p: &LayerParams,
) -> Result<(Mat, Mat)> {
    let (propagated, pre) = cache.take()?;
    let delta = p.activation.backprop(upstream, &pre)?;
    let grad_w = propagated.matmul_tn(&delta)?;
    let grad_z = norm_adj.spmm(&delta.matmul_nt(&p.weight)?)?;
    Ok((grad_z, grad_w))
}

/// φ(x·W + bias): one fully-connected layer, bias broadcast over rows.
pub fn dense_layer_forward(x: &Mat, p: &LayerParams) -> Result<(Mat, LayerCache)> {
    let mut pre = x.matmul(&p.weight)?;
    if let Some(b) = &p.bias {
        let bias_row = b.row(0);
        for i in 0..pre.rows() {
            for (o, &bv) in pre.row_mut(i).iter_mut().zip(bias_row) {
                *o += bv;
            }
        }
    }
    let out = p.activation.apply(&pre);
    Ok((out, LayerCache::new(x.clone(), pre)))
}

pub struct DenseGrads {
    pub input: Mat,
    pub weight: Mat,
    pub bias: Option<Mat>,
}

pub fn dense_layer_backward(
    upstream: &Mat,
    cache: &mut LayerCache,
    p: &LayerParams,
) -> Result<DenseGrads> {
    let (input, pre) = cache.take()?;
    let delta = p.activation.backprop(upstream, &pre)?;
    let weight = input.matmul_tn(&delta)?;
    let bias = p.bias.as_ref().map(|_| delta.col_sums());
    let input = delta.matmul_nt(&p.weight)?;
    Ok(DenseGrads {
        input,
        weight,
        bias,
    })
}

/// Uniform Glorot initialization: entries in ±sqrt(6/(in_dim + out_dim)).
pub fn glorot_init(in_dim: usize, out_dim: usize, rng: &mut RngStream) -> Mat {
    assert!(in_dim > 0 && out_dim > 0, "glorot dims must be positive");
    let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
    rng.uniform_matrix(in_dim, out_dim, -limit, limit)
}

/// Weighted binary cross entropy over every entry of an n×n logit matrix
/// against the sparse reconstruction target:
///
///   loss = norm · mean[ pos_weight·y·softplus(−x) + (1−y)·softplus(x) ]
///   grad = norm/n² · ( σ(x)·(1 + (pos_weight−1)·y) − pos_weight·y )
///
/// Stable for large |x| (softplus and σ never exponentiate positives). This
/// is the reference implementation; training uses the fused row-block path
/// in `model::recon_loss_grad_z`, which never materializes the logits.
pub fn weighted_bce_with_logits(logits: &Mat, target: &ReconTarget) -> Result<(f64, Mat)> {
    let n = target.labels.rows();
    if logits.shape() != (n, n) {
        return Err(Error::shape(
            "weighted_bce_with_logits",
            logits.shape(),
            (n, n),
        ));
    }
    if !logits.is_finite() {
        return Err(Error::Numeric(
            "non-finite logits in reconstruction loss".into(),
        ));
    }
    let pw = target.pos_weight;
    let scale = target.norm / (n * n) as f64;
    let mut loss = 0.0;
    let mut grad = Mat::zeros(n, n);
    for i in 0..n {
        let (lcols, lvals) = target.labels.row(i);
        let mut ptr = 0usize;
        let grad_row = grad.row_mut(i);
        for (j, g) in grad_row.iter_mut().enumerate() {
            let x = logits[(i, j)];
            let y = if ptr < lcols.len() && lcols[ptr] == j {
                ptr += 1;
                lvals[ptr - 1]
            } else {
                0.0
            };
            loss += pw * y * softplus(-x) + (1.0 - y) * softplus(x);
            *g = scale * (sigmoid(x) * (1.0 + (pw - 1.0) * y) - pw * y);
        }
    }
    Ok((target.norm * loss / (n * n) as f64, grad))
}

/// KL divergence of the factorized Gaussian posterior from the standard
/// normal prior, averaged over nodes:
///
///   loss = (1/n)·Σ ½(μ² + σ² − 1 − 2·log σ),  σ = exp(log σ)
///   grad_mu = μ/n,   grad_log_sigma = (σ² − 1)/n
///
/// log σ is clamped to ±[`LOG_SIGMA_CLAMP`] before exponentiation; the
/// gradient uses the clamped σ as well, so it matches finite differences
/// everywhere inside the clamp range.
pub fn kl_to_standard_normal(mu: &Mat, log_sigma: &Mat) -> Result<(f64, Mat, Mat)> {
    if mu.shape() != log_sigma.shape() {
        return Err(Error::shape(
            "kl_to_standard_normal",
            mu.shape(),
            log_sigma.shape(),
        ));
    }
    let n = mu.rows() as f64;
    let mut loss = 0.0;
    let mut grad_mu = Mat::zeros(mu.rows(), mu.cols());
    let mut grad_ls = Mat::zeros(mu.rows(), mu.cols());
    for idx in 0..mu.data().len() {
        let m = mu.data()[idx];
        let ls = log_sigma.data()[idx].clamp(-LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP);
        let s2 = (2.0 * ls).exp();
        loss += 0.5 * (m * m + s2 - 1.0 - 2.0 * ls);
        grad_mu.data_mut()[idx] = m / n;
        grad_ls.data_mut()[idx] = (s2 - 1.0) / n;
    }
    loss /= n;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("non-finite KL loss {loss}")));
    }
    Ok((loss, grad_mu, grad_ls))
}

/// Per-parameter Adam state. `m`/`v` are the first/second moment estimates,
/// zero-initialized; `t` counts completed steps.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Mat,
    v: Mat,
    t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize, lr: f64) -> Self {
        AdamState {
            m: Mat::zeros(rows, cols),
            v: Mat::zeros(rows, cols),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn for_param(param: &Mat, lr: f64) -> Self {
        Self::new(param.rows(), param.cols(), lr)
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update; increments the step count.
pub fn adam_step(param: &mut Mat, grad: &Mat, state: &mut AdamState) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.m.shape() {
        return Err(Error::shape("adam_step", param.shape(), grad.shape()));
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    for idx in 0..param.data().len() {
        let g = grad.data()[idx];
        let m = &mut state.m.data_mut()[idx];
        *m = state.beta1 * *m + (1.0 - state.beta1) * g;
        let m_hat = *m / bc1;
        let v = &mut state.v.data_mut()[idx];
        *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
        let v_hat = *v / bc2;
        param.data_mut()[idx] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// Inverted-dropout mask: entries are 0 with probability `p`, else 1/(1−p),
/// so the expected activation is unchanged. The training default is p = 0
/// (dropout off), in which case callers skip the mask entirely.
pub fn dropout_mask(rng: &mut RngStream, rows: usize, cols: usize, p: f64) -> Result<Mat> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Argument(format!(
            "dropout probability {p} outside [0, 1)"
        )));
    }
    let keep = 1.0 / (1.0 - p);
    Ok(Mat::from_fn(rows, cols, |_, _| {
        if rng.uniform_f64() < p {
            0.0
        } else {
            keep
        }
    }))
}
