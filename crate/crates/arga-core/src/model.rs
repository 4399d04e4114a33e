//! Model assembly: the two-layer GCN encoder (deterministic and
//! variational), the inner-product decoder, the prior-matching
//! discriminator, and the checkpoint format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ReconTarget;
use crate::nn::{
    dense_layer_backward, dense_layer_forward, glorot_init, kl_to_standard_normal, Activation,
    LayerCache, LayerParams, LOG_SIGMA_CLAMP,
};
use crate::scalar::{sigmoid, softplus};
use crate::tensor::RngStream;
use crate::{Mat, SpMat};

/// Model family. ARGA/ARVGA train the adversarial regularizer; GAE/VGAE are
/// the same autoencoders with it disabled. The V-variants are variational.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Arga,
    Arvga,
    Gae,
    Vgae,
}

impl Variant {
    pub fn is_variational(self) -> bool {
        matches!(self, Variant::Arvga | Variant::Vgae)
    }

    pub fn is_adversarial(self) -> bool {
        matches!(self, Variant::Arga | Variant::Arvga)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Arga => "arga",
            Variant::Arvga => "arvga",
            Variant::Gae => "gae",
            Variant::Vgae => "vgae",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "arga" => Ok(Variant::Arga),
            "arvga" => Ok(Variant::Arvga),
            "gae" => Ok(Variant::Gae),
            "vgae" => Ok(Variant::Vgae),
            other => Err(Error::Config(format!(
                "unknown variant {other:?}; expected arga, arvga, gae, or vgae"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Feature matrix handed to the encoder. The loader produces dense features;
/// the trainer converts sparse ones (citation bags-of-words are ~1% dense)
/// to CSR for a much cheaper first-layer product. Both paths compute the
/// same values up to floating-point associativity.
#[derive(Clone, Copy, Debug)]
pub enum FeatureRef<'a> {
    Dense(&'a Mat),
    Sparse(&'a SpMat),
}

impl<'a> FeatureRef<'a> {
    pub fn rows(&self) -> usize {
        match self {
            FeatureRef::Dense(m) => m.rows(),
            FeatureRef::Sparse(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            FeatureRef::Dense(m) => m.cols(),
            FeatureRef::Sparse(s) => s.cols(),
        }
    }

    /// X·W.
    fn times(&self, w: &Mat) -> Result<Mat> {
        match self {
            FeatureRef::Dense(m) => m.matmul(w),
            FeatureRef::Sparse(s) => s.spmm(w),
        }
    }

    /// Xᵀ·G.
    fn t_times(&self, g: &Mat) -> Result<Mat> {
        match self {
            FeatureRef::Dense(m) => m.matmul_tn(g),
            FeatureRef::Sparse(s) => s.spmm_at(g),
        }
    }
}

/// Encoder weights: W⁰ (relu, m×h), W¹ (linear, h×d), and for variational
/// variants the parallel log σ head W¹_σ sharing the W⁰ hidden layer.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub w0: LayerParams,
    pub w1: LayerParams,
    pub w1_sigma: Option<LayerParams>,
}

impl EncoderParams {
    /// Glorot-initialized encoder. Each matrix draws from its own rng
    /// substream, so the presence of the σ head never shifts other draws.
    pub fn init(
        in_dim: usize,
        hidden_dim: usize,
        embed_dim: usize,
        variational: bool,
        rng: &RngStream,
    ) -> Self {
        let w0 = glorot_init(in_dim, hidden_dim, &mut rng.substream(0));
        let w1 = glorot_init(hidden_dim, embed_dim, &mut rng.substream(1));
        let w1_sigma =
            variational.then(|| glorot_init(hidden_dim, embed_dim, &mut rng.substream(2)));
        EncoderParams {
            w0: LayerParams::new(w0, None, Activation::Relu).unwrap(),
            w1: LayerParams::new(w1, None, Activation::Linear).unwrap(),
            w1_sigma: w1_sigma.map(|w| LayerParams::new(w, None, Activation::Linear).unwrap()),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w0.in_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w0.out_dim()
    }

    pub fn embed_dim(&self) -> usize {
        self.w1.out_dim()
    }
}

/// The latent prior the discriminator holds codes against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorKind {
    StandardGaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PriorSpec {
    pub kind: PriorKind,
    pub dim: usize,
}

impl PriorSpec {
    pub fn standard_gaussian(dim: usize) -> Self {
        PriorSpec {
            kind: PriorKind::StandardGaussian,
            dim,
        }
    }

    /// m independent draws, one per row.
    pub fn sample(&self, m: usize, rng: &mut RngStream) -> Mat {
        match self.kind {
            PriorKind::StandardGaussian => rng.normal_matrix::<f64>(m, self.dim),
        }
    }
}

/// Discriminator widths: embedding → 16 → 64 → 1.
pub const DISC_HIDDEN: [usize; 2] = [16, 64];

/// Three-layer MLP telling prior samples (positive class) from encoder
/// outputs. Hidden layers relu, final layer emits one logit per row.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorParams {
    pub layers: [LayerParams; 3],
}

impl DiscriminatorParams {
    pub fn init(embed_dim: usize, rng: &RngStream) -> Self {
        let dims = [embed_dim, DISC_HIDDEN[0], DISC_HIDDEN[1], 1];
        let acts = [Activation::Relu, Activation::Relu, Activation::Linear];
        let layers = std::array::from_fn(|k| {
            let w = glorot_init(dims[k], dims[k + 1], &mut rng.substream(k as u64));
            let b = Mat::zeros(1, dims[k + 1]);
            LayerParams::new(w, Some(b), acts[k]).unwrap()
        });
        DiscriminatorParams { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }
}

/// What the encoder backward pass needs from the forward pass.
#[derive(Debug)]
struct EncoderCache {
    pre0: Mat,
    hidden: Mat,
    /// First-layer dropout mask, when one was applied.
    dropout: Option<Mat>,
    /// ε and the clamped σ of the reparameterized draw (variational only).
    noise: Option<(Mat, Mat)>,
}

/// Encoder forward result. For deterministic encodes `z` is the linear head
/// output and `mu`/`log_sigma` are absent; for variational encodes
/// `z = μ + σ⊙ε` with σ = exp(clamped log σ).
#[derive(Debug)]
pub struct EncoderOutput {
    pub z: Mat,
    pub mu: Option<Mat>,
    pub log_sigma: Option<Mat>,
    cache: Option<EncoderCache>,
}

/// Gradients for every encoder weight matrix.
#[derive(Debug)]
pub struct EncoderGrads {
    pub w0: Mat,
    pub w1: Mat,
    pub w1_sigma: Option<Mat>,
}

fn forward_shared_hidden(
    x: FeatureRef,
    norm_adj: &SpMat,
    p: &EncoderParams,
    dropout: Option<&Mat>,
) -> Result<EncoderCache> {
    // Â·(X·W⁰) rather than (Â·X)·W⁰: same result up to float associativity,
    // but it keeps the big n×m product on the sparse side.
    let mut xw = x.times(&p.w0.weight)?;
    if let Some(mask) = dropout {
        xw = xw.zip_map(mask, |a, b| a * b)?;
    }
    let pre0 = norm_adj.spmm(&xw)?;
    let hidden = p.w0.activation.apply(&pre0);
    Ok(EncoderCache {
        pre0,
        hidden,
        dropout: dropout.cloned(),
        noise: None,
    })
}

fn head_forward(hidden: &Mat, norm_adj: &SpMat, head: &LayerParams) -> Result<Mat> {
    norm_adj.spmm(&hidden.matmul(&head.weight)?)
}

/// Deterministic encode: z = linear GCN head over the relu GCN hidden layer.
/// Variational parameter sets are accepted; their σ head is simply unused,
/// which is also how inference-time embeddings are produced for those
/// variants (the mean, noise-free).
pub fn encode(x: FeatureRef, norm_adj: &SpMat, p: &EncoderParams) -> Result<EncoderOutput> {
    encode_dropout(x, norm_adj, p, None)
}

/// Variational encode with the reparameterization trick: both heads share
/// the hidden layer; z = μ + exp(log σ)⊙ε, ε ~ N(0, I), log σ clamped to
/// ±[`LOG_SIGMA_CLAMP`] before exponentiation.
pub fn encode_variational(
    x: FeatureRef,
    norm_adj: &SpMat,
    p: &EncoderParams,
    rng: &mut RngStream,
) -> Result<EncoderOutput> {
    encode_variational_dropout(x, norm_adj, p, rng, None)
}

pub fn encode_variational_dropout(
    x: FeatureRef,
    norm_adj: &SpMat,
    p: &EncoderParams,
    rng: &mut RngStream,
    dropout: Option<&Mat>,
) -> Result<EncoderOutput> {
    let sigma_head = p
        .w1_sigma
        .as_ref()
        .ok_or_else(|| Error::Config("variational encode requires the w1_sigma head".into()))?;
    let mut cache = forward_shared_hidden(x, norm_adj, p, dropout)?;
    let mu = head_forward(&cache.hidden, norm_adj, &p.w1)?;
    let log_sigma = head_forward(&cache.hidden, norm_adj, sigma_head)?;
    let sigma = log_sigma.map(|v| v.clamp(-LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP).exp());
    let eps = rng.normal_matrix::<f64>(mu.rows(), mu.cols());
    let mut z = mu.clone();
    for idx in 0..z.data().len() {
        z.data_mut()[idx] += sigma.data()[idx] * eps.data()[idx];
    }
    cache.noise = Some((eps, sigma));
    Ok(EncoderOutput {
        z,
        mu: Some(mu),
        log_sigma: Some(log_sigma),
        cache: Some(cache),
    })
}

/// Dropout-aware deterministic encode (training-time hook; `mask` scales the
/// first layer's X·W⁰ product).
pub fn encode_dropout(
    x: FeatureRef,
    norm_adj: &SpMat,
    p: &EncoderParams,
    mask: Option<&Mat>,
) -> Result<EncoderOutput> {
    let cache = forward_shared_hidden(x, norm_adj, p, mask)?;
    let z = head_forward(&cache.hidden, norm_adj, &p.w1)?;
    Ok(EncoderOutput {
        z,
        mu: None,
        log_sigma: None,
        cache: Some(cache),
    })
}

/// Backpropagates through the encoder, consuming the forward cache.
///
/// `grad_z` is the gradient at the encoder output (the sampled z for
/// variational encodes). `grad_mu`/`grad_log_sigma` add gradients applied
/// directly to the heads (the KL term); they must be None for deterministic
/// encodes. Gradients flow through the reparameterization as
/// ∂z/∂μ = 1 and ∂z/∂(log σ) = σ⊙ε.
pub fn encoder_backward(
    out: &mut EncoderOutput,
    grad_z: &Mat,
    grad_mu: Option<&Mat>,
    grad_log_sigma: Option<&Mat>,
    x: FeatureRef,
    norm_adj: &SpMat,
    p: &EncoderParams,
) -> Result<EncoderGrads> {
    let cache = out
        .cache
        .take()
        .ok_or_else(|| Error::State("encoder cache already consumed".into()))?;

    // Mean head (the only head for deterministic encodes): the head computed
    // Â·(hidden·W), so grad_u = Â·grad_head (Â symmetric), grad_W = hiddenᵀ·grad_u,
    // and the hidden-layer gradient accumulates grad_u·Wᵀ per head.
    let (grad_w1, mut grad_hidden, grad_w1_sigma) = match (&cache.noise, &p.w1_sigma) {
        (Some((eps, sigma)), Some(sigma_head)) => {
            let mut grad_mu_total = grad_z.clone();
            if let Some(extra) = grad_mu {
                grad_mu_total.add_scaled(extra, 1.0)?;
            }
            let mut grad_ls_total = grad_z
                .zip_map(eps, |g, e| g * e)?
                .zip_map(sigma, |g, s| g * s)?;
            if let Some(extra) = grad_log_sigma {
                grad_ls_total.add_scaled(extra, 1.0)?;
            }
            let gu_mu = norm_adj.spmm(&grad_mu_total)?;
            let gu_ls = norm_adj.spmm(&grad_ls_total)?;
            let grad_w1 = cache.hidden.matmul_tn(&gu_mu)?;
            let grad_w1_sigma = cache.hidden.matmul_tn(&gu_ls)?;
            let mut grad_hidden = gu_mu.matmul_nt(&p.w1.weight)?;
            grad_hidden = grad_hidden.add(&gu_ls.matmul_nt(&sigma_head.weight)?)?;
            (grad_w1, grad_hidden, Some(grad_w1_sigma))
        }
        (None, _) => {
            if grad_mu.is_some() || grad_log_sigma.is_some() {
                return Err(Error::Argument(
                    "head gradients supplied for a deterministic encode".into(),
                ));
            }
            let gu = norm_adj.spmm(grad_z)?;
            let grad_w1 = cache.hidden.matmul_tn(&gu)?;
            let grad_hidden = gu.matmul_nt(&p.w1.weight)?;
            (grad_w1, grad_hidden, None)
        }
        (Some(_), None) => {
            return Err(Error::State(
                "variational cache without a sigma head".into(),
            ));
        }
    };

    // First layer: hidden = relu(Â·((X·W⁰) ⊙ mask)).
    grad_hidden = p.w0.activation.backprop(&grad_hidden, &cache.pre0)?;
    let mut gu0 = norm_adj.spmm(&grad_hidden)?;
    if let Some(mask) = &cache.dropout {
        gu0 = gu0.zip_map(mask, |g, m| g * m)?;
    }
    let grad_w0 = x.t_times(&gu0)?;

    Ok(EncoderGrads {
        w0: grad_w0,
        w1: grad_w1,
        w1_sigma: grad_w1_sigma,
    })
}

/// z·zᵀ: the inner-product decoder's logits, symmetric by construction.
/// The sigmoid is deferred to the loss or to metric computation. Quadratic
/// in n; training uses [`recon_loss_grad_z`] instead.
pub fn decode_logits(z: &Mat) -> Mat {
    z.matmul_nt(z).expect("z·zᵀ dims always agree")
}

/// Fused reconstruction pass: the weighted BCE of `nn::weighted_bce_with_logits`
/// evaluated over the decoder logits z·zᵀ, plus the loss gradient at z,
/// computed one row block at a time without materializing the n×n matrices.
///
/// With G the logit gradient, symmetry of both z·zᵀ and the target gives
/// ∂loss/∂z = (G + Gᵀ)·z = 2·G·z; row i is accumulated as 2·Σ_j g_ij·z_j.
/// One exp and one ln_1p serve softplus(±x) and σ(x) per entry, which is
/// what makes full-batch training on 20k-node graphs tractable.
pub fn recon_loss_grad_z(z: &Mat, target: &ReconTarget) -> Result<(f64, Mat)> {
    let n = target.labels.rows();
    if z.rows() != n {
        return Err(Error::shape("recon_loss_grad_z", z.shape(), (n, n)));
    }
    let d = z.cols();
    let pw = target.pos_weight;
    let scale = target.norm / (n * n) as f64;
    let mut loss = 0.0f64;
    let mut grad = Mat::zeros(n, d);
    for i in 0..n {
        let zi = z.row(i).to_vec();
        let (lcols, lvals) = target.labels.row(i);
        let mut ptr = 0usize;
        let mut acc = vec![0.0f64; d];
        for j in 0..n {
            let zj = z.row(j);
            let mut x = 0.0;
            for k in 0..d {
                x += zi[k] * zj[k];
            }
            let y = if ptr < lcols.len() && lcols[ptr] == j {
                ptr += 1;
                lvals[ptr - 1]
            } else {
                0.0
            };
            // softplus(±x) = max(±x, 0) + ln(1 + e^(−|x|)); one exp + one
            // ln_1p yields both branches and the sigmoid.
            let e = (-x.abs()).exp();
            let lp = e.ln_1p();
            let sp_pos = x.max(0.0) + lp;
            let sp_neg = (-x).max(0.0) + lp;
            let sig = if x >= 0.0 {
                1.0 / (1.0 + e)
            } else {
                e / (1.0 + e)
            };
            loss += pw * y * sp_neg + (1.0 - y) * sp_pos;
            let g = scale * (sig * (1.0 + (pw - 1.0) * y) - pw * y);
            for k in 0..d {
                acc[k] += g * zj[k];
            }
        }
        let grad_row = grad.row_mut(i);
        for k in 0..d {
            grad_row[k] = 2.0 * acc[k];
        }
    }
    let loss = target.norm * loss / (n * n) as f64;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite reconstruction loss {loss}"
        )));
    }
    Ok((loss, grad))
}

/// Variational reconstruction objective: fused reconstruction loss on the
/// sampled z plus the KL term on (μ, log σ). Returns both loss components
/// and the gradients needed by [`encoder_backward`].
pub fn variational_recon_loss(
    out: &EncoderOutput,
    target: &ReconTarget,
) -> Result<(f64, f64, Mat, Mat, Mat)> {
    let mu = out
        .mu
        .as_ref()
        .ok_or_else(|| Error::Argument("variational loss requires mu".into()))?;
    let log_sigma = out
        .log_sigma
        .as_ref()
        .ok_or_else(|| Error::Argument("variational loss requires log_sigma".into()))?;
    let (recon, grad_z) = recon_loss_grad_z(&out.z, target)?;
    let (kl, grad_mu, grad_ls) = objective_kl(mu, log_sigma)?;
    Ok((recon, kl, grad_z, grad_mu, grad_ls))
}

/// KL term as it enters the training objective: kl_to_standard_normal
/// weighted by a further 1/n, so the total reduction is per-entry like the
/// reconstruction term. At per-node weight the prior pull flattens the
/// embedding on graphs beyond a few hundred nodes.
pub fn objective_kl(mu: &Mat, log_sigma: &Mat) -> Result<(f64, Mat, Mat)> {
    let (kl, grad_mu, grad_ls) = kl_to_standard_normal(mu, log_sigma)?;
    let w = 1.0 / mu.rows() as f64;
    Ok((kl * w, grad_mu.scale(w), grad_ls.scale(w)))
}

/// Discriminator forward caches, one per layer.
pub struct DiscCache {
    caches: [LayerCache; 3],
}

/// Per-layer discriminator gradients plus the gradient at the input samples
/// (the path generator updates flow through).
pub struct DiscGrads {
    pub weights: [Mat; 3],
    pub biases: [Mat; 3],
    pub input: Mat,
}

/// Scores rows independently: logits of "this row came from the prior".
pub fn discriminate(samples: &Mat, p: &DiscriminatorParams) -> Result<(Mat, DiscCache)> {
    if samples.cols() != p.in_dim() {
        return Err(Error::shape(
            "discriminate",
            samples.shape(),
            (samples.rows(), p.in_dim()),
        ));
    }
    let (h1, c1) = dense_layer_forward(samples, &p.layers[0])?;
    let (h2, c2) = dense_layer_forward(&h1, &p.layers[1])?;
    let (logits, c3) = dense_layer_forward(&h2, &p.layers[2])?;
    Ok((
        logits,
        DiscCache {
            caches: [c1, c2, c3],
        },
    ))
}

pub fn discriminate_backward(
    upstream: &Mat,
    cache: &mut DiscCache,
    p: &DiscriminatorParams,
) -> Result<DiscGrads> {
    let [c1, c2, c3] = &mut cache.caches;
    let g3 = dense_layer_backward(upstream, c3, &p.layers[2])?;
    let g2 = dense_layer_backward(&g3.input, c2, &p.layers[1])?;
    let g1 = dense_layer_backward(&g2.input, c1, &p.layers[0])?;
    Ok(DiscGrads {
        weights: [g1.weight, g2.weight, g3.weight],
        biases: [
            g1.bias.expect("discriminator layers carry biases"),
            g2.bias.expect("discriminator layers carry biases"),
            g3.bias.expect("discriminator layers carry biases"),
        ],
        input: g1.input,
    })
}

/// Binary cross entropy of independent discriminator logits against a
/// constant label, mean-reduced with an extra 1/`denom` factor so callers
/// can average over the combined positive+negative batch. Returns the loss
/// contribution and the upstream gradient for `discriminate_backward`.
pub fn disc_bce(logits: &Mat, label: f64, denom: f64) -> (f64, Mat) {
    let mut loss = 0.0;
    let grad = logits.map(|t| {
        loss += if label > 0.5 {
            softplus(-t)
        } else {
            softplus(t)
        };
        (sigmoid(t) - label) / denom
    });
    (loss / denom, grad)
}

/// Checkpoint header. The binary payload holds every weight matrix as flat
/// little-endian f64 rows, in the order listed by `arrays`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub variant: Variant,
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub seed: u64,
    pub arrays: Vec<(String, usize, usize)>,
}

fn push_array(order: &mut Vec<(String, Mat)>, name: &str, m: &Mat) {
    order.push((name.to_string(), m.clone()));
}

fn checkpoint_arrays(enc: &EncoderParams, disc: &DiscriminatorParams) -> Vec<(String, Mat)> {
    let mut order = Vec::new();
    push_array(&mut order, "w0", &enc.w0.weight);
    push_array(&mut order, "w1", &enc.w1.weight);
    if let Some(s) = &enc.w1_sigma {
        push_array(&mut order, "w1_sigma", &s.weight);
    }
    for (k, layer) in disc.layers.iter().enumerate() {
        push_array(&mut order, &format!("disc{}_w", k + 1), &layer.weight);
        push_array(
            &mut order,
            &format!("disc{}_b", k + 1),
            layer.bias.as_ref().expect("disc bias"),
        );
    }
    order
}

/// Writes `[JSON header]\n[flat binary f64 arrays]`. Arrays appear in fixed
/// order: w0, w1, w1_sigma (variational only), then the discriminator
/// layers' weight and bias pairs.
pub fn save_checkpoint(
    path: &Path,
    variant: Variant,
    seed: u64,
    enc: &EncoderParams,
    disc: &DiscriminatorParams,
) -> Result<()> {
    let arrays = checkpoint_arrays(enc, disc);
    let meta = CheckpointMeta {
        variant,
        in_dim: enc.in_dim(),
        hidden_dim: enc.hidden_dim(),
        embed_dim: enc.embed_dim(),
        seed,
        arrays: arrays
            .iter()
            .map(|(n, m)| (n.clone(), m.rows(), m.cols()))
            .collect(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &meta)
        .map_err(|e| Error::Config(format!("checkpoint header: {e}")))?;
    w.write_all(b"\n")?;
    for (_, m) in &arrays {
        for v in m.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(
    path: &Path,
) -> Result<(CheckpointMeta, EncoderParams, DiscriminatorParams)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte).map_err(|_| Error::Format {
            path: path.display().to_string(),
            line: 1,
            msg: "checkpoint header is not newline-terminated".into(),
        })?;
        if byte[0] == b'\n' {
            break;
        }
        header.push(byte[0]);
    }
    let meta: CheckpointMeta = serde_json::from_slice(&header).map_err(|e| Error::Format {
        path: path.display().to_string(),
        line: 1,
        msg: format!("bad checkpoint header: {e}"),
    })?;

    let mut read_mat = |rows: usize, cols: usize| -> Result<Mat> {
        let mut buf = vec![0u8; rows * cols * 8];
        r.read_exact(&mut buf).map_err(|_| Error::Format {
            path: path.display().to_string(),
            line: 1,
            msg: "checkpoint payload truncated".into(),
        })?;
        let data: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Mat::from_vec(rows, cols, data)
    };

    let mut mats = std::collections::HashMap::new();
    for (name, rows, cols) in &meta.arrays {
        mats.insert(name.clone(), read_mat(*rows, *cols)?);
    }
    let missing = |name: &str| Error::Format {
        path: path.display().to_string(),
        line: 1,
        msg: format!("checkpoint missing array {name:?}"),
    };
    let mut take = |name: &str| mats.remove(name).ok_or_else(|| missing(name));

    let enc = EncoderParams {
        w0: LayerParams::new(take("w0")?, None, Activation::Relu)?,
        w1: LayerParams::new(take("w1")?, None, Activation::Linear)?,
        w1_sigma: if meta.variant.is_variational() {
            Some(LayerParams::new(
                take("w1_sigma")?,
                None,
                Activation::Linear,
            )?)
        } else {
            None
        },
    };
    let acts = [Activation::Relu, Activation::Relu, Activation::Linear];
    let mut layers = Vec::with_capacity(3);
    for (k, &act) in acts.iter().enumerate() {
        layers.push(LayerParams::new(
            take(&format!("disc{}_w", k + 1))?,
            Some(take(&format!("disc{}_b", k + 1))?),
            act,
        )?);
    }
    let disc = DiscriminatorParams {
        layers: layers.try_into().expect("exactly three layers"),
    };
    Ok((meta, enc, disc))
}
