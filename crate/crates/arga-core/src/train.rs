//! The alternating training loop: discriminator steps on prior-vs-encoder
//! samples, a generator step pushing the encoder toward the prior, and a
//! reconstruction step on the decoder loss (plus KL for variational
//! variants).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate_link_prediction, EvalSide};
use crate::graph::{
    build_normalized_adjacency, build_recon_target, row_normalize_features, EdgeSplit, Graph,
    ReconTarget,
};
use crate::model::{
    disc_bce, discriminate, discriminate_backward, encode, encode_dropout,
    encode_variational_dropout, encoder_backward, objective_kl, recon_loss_grad_z,
    DiscriminatorParams, EncoderGrads, EncoderOutput, EncoderParams, FeatureRef, PriorSpec,
    Variant,
};
use crate::nn::{adam_step, dropout_mask, AdamState};
use crate::scalar::{sigmoid, softplus};
use crate::tensor::RngStream;
use crate::{Mat, SpMat};

/// Feature matrices sparser than this train through a CSR copy.
const SPARSE_FEATURE_DENSITY: f64 = 0.25;

/// Full training configuration. The JSON run config mirrors these fields
/// one-for-one; absent fields keep the Cora defaults.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub variant: Variant,
    /// Outer iterations T.
    pub iterations: usize,
    /// Discriminator updates per outer iteration K.
    pub disc_steps: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    /// Autoencoder learning rate.
    pub lr: f64,
    /// Discriminator and generator learning rate.
    pub disc_lr: f64,
    /// Rows sampled per discriminator step; None trains full-batch.
    pub sample_size: Option<usize>,
    pub seed: u64,
    /// Scales the generator objective; 0 disables encoder prior-matching.
    pub adversarial_weight: f64,
    /// First-layer dropout rate during training.
    pub dropout: f64,
    /// L1 row normalization of input features.
    pub normalize_features: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            variant: Variant::Arga,
            iterations: 200,
            disc_steps: 1,
            embed_dim: 16,
            hidden_dim: 32,
            lr: 1e-2,
            disc_lr: 1e-3,
            sample_size: None,
            seed: 0,
            adversarial_weight: 1.0,
            dropout: 0.0,
            normalize_features: true,
        }
    }
}

impl Hyperparams {
    /// Built-in per-dataset profiles. PubMed trains ten times longer with a
    /// hotter discriminator; everything else uses the Cora/Citeseer profile.
    /// Variational variants get a doubled autoencoder rate and a longer
    /// schedule: the sampled-z gradient advances roughly half as far per
    /// iteration as the deterministic one, and is still climbing where the
    /// deterministic variants have flattened.
    pub fn for_dataset(dataset: &str, variant: Variant) -> Self {
        let mut hp = Hyperparams {
            variant,
            ..Hyperparams::default()
        };
        if variant.is_variational() {
            hp.lr = 2e-2;
            hp.iterations = 300;
        }
        if dataset.eq_ignore_ascii_case("pubmed") {
            hp.iterations = 2000;
            hp.disc_lr = 8e-3;
        }
        hp
    }

    // Negated comparisons are load-bearing: a NaN rate must fail validation,
    // and NaN compares false on both sides.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.disc_steps == 0 {
            return Err(Error::Config(
                "iterations and disc_steps must be at least 1".into(),
            ));
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config(
                "embed_dim and hidden_dim must be at least 1".into(),
            ));
        }
        if !(self.lr > 0.0) || !(self.disc_lr > 0.0) {
            return Err(Error::Config("lr and disc_lr must be positive".into()));
        }
        if !(self.adversarial_weight >= 0.0) {
            return Err(Error::Config(
                "adversarial_weight must be non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        if self.sample_size == Some(0) {
            return Err(Error::Config(
                "sample_size must be at least 1 (or null for full batch)".into(),
            ));
        }
        Ok(())
    }
}

/// Partial config: every field optional, unknown keys rejected. Applied on
/// top of a profile so JSON files and CLI flags can override selectively.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperparamsPatch {
    pub variant: Option<Variant>,
    pub iterations: Option<usize>,
    pub disc_steps: Option<usize>,
    pub embed_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub lr: Option<f64>,
    pub disc_lr: Option<f64>,
    // Double-wrapped so `"sample_size": null` explicitly selects full batch.
    #[serde(deserialize_with = "present_or_null")]
    pub sample_size: Option<Option<usize>>,
    pub seed: Option<u64>,
    pub adversarial_weight: Option<f64>,
    pub dropout: Option<f64>,
    pub normalize_features: Option<bool>,
}

// A present key deserializes to Some(inner), null included; only an absent
// key leaves the outer Option at its None default.
fn present_or_null<'de, D>(d: D) -> std::result::Result<Option<Option<usize>>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    Ok(Some(Option::<usize>::deserialize(d)?))
}

impl Hyperparams {
    pub fn apply(&mut self, p: &HyperparamsPatch) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = p.$field { self.$field = v; })*
            };
        }
        set!(
            variant,
            iterations,
            disc_steps,
            embed_dim,
            hidden_dim,
            lr,
            disc_lr,
            sample_size,
            seed,
            adversarial_weight,
            dropout,
            normalize_features
        );
    }
}

/// One line of the training log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLosses {
    pub iter: usize,
    pub recon: f64,
    pub kl: f64,
    pub disc: f64,
    pub gen: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_ap: Option<f64>,
}

impl Default for IterationLosses {
    fn default() -> Self {
        IterationLosses {
            iter: 0,
            recon: 0.0,
            kl: 0.0,
            disc: 0.0,
            gen: 0.0,
            val_auc: None,
            val_ap: None,
        }
    }
}

struct EncoderAdam {
    w0: AdamState,
    w1: AdamState,
    w1_sigma: Option<AdamState>,
}

impl EncoderAdam {
    fn new(enc: &EncoderParams, lr: f64) -> Self {
        EncoderAdam {
            w0: AdamState::for_param(&enc.w0.weight, lr),
            w1: AdamState::for_param(&enc.w1.weight, lr),
            w1_sigma: enc
                .w1_sigma
                .as_ref()
                .map(|p| AdamState::for_param(&p.weight, lr)),
        }
    }

    fn apply(&mut self, enc: &mut EncoderParams, g: &EncoderGrads) -> Result<()> {
        adam_step(&mut enc.w0.weight, &g.w0, &mut self.w0)?;
        adam_step(&mut enc.w1.weight, &g.w1, &mut self.w1)?;
        if let (Some(head), Some(grad), Some(state)) = (
            enc.w1_sigma.as_mut(),
            g.w1_sigma.as_ref(),
            self.w1_sigma.as_mut(),
        ) {
            adam_step(&mut head.weight, grad, state)?;
        }
        Ok(())
    }
}

struct DiscAdam {
    weights: [AdamState; 3],
    biases: [AdamState; 3],
}

impl DiscAdam {
    fn new(disc: &DiscriminatorParams, lr: f64) -> Self {
        DiscAdam {
            weights: std::array::from_fn(|k| AdamState::for_param(&disc.layers[k].weight, lr)),
            biases: std::array::from_fn(|k| {
                AdamState::for_param(disc.layers[k].bias.as_ref().expect("disc bias"), lr)
            }),
        }
    }
}

/// Final model state handed back by [`train`].
#[derive(Clone, Debug)]
pub struct TrainState {
    pub encoder: EncoderParams,
    pub discriminator: DiscriminatorParams,
    pub iteration: usize,
    pub history: Vec<IterationLosses>,
}

/// Owns parameters, optimizer state, and the rng streams of one run.
/// Borrows the preprocessed inputs (features, normalized adjacency,
/// reconstruction target) from the caller.
pub struct Trainer<'a> {
    pub hp: Hyperparams,
    features: FeatureRef<'a>,
    norm_adj: &'a SpMat,
    target: &'a ReconTarget,
    pub encoder: EncoderParams,
    pub discriminator: DiscriminatorParams,
    prior: PriorSpec,
    ae_opt: EncoderAdam,
    gen_opt: EncoderAdam,
    disc_opt: DiscAdam,
    eps_rng: RngStream,
    prior_rng: RngStream,
    sample_rng: RngStream,
    dropout_rng: RngStream,
    pub history: Vec<IterationLosses>,
}

impl<'a> Trainer<'a> {
    pub fn new(
        features: FeatureRef<'a>,
        norm_adj: &'a SpMat,
        target: &'a ReconTarget,
        hp: Hyperparams,
    ) -> Result<Self> {
        hp.validate()?;
        let n = features.rows();
        if norm_adj.rows() != n || norm_adj.cols() != n {
            return Err(Error::shape(
                "Trainer::new adjacency",
                norm_adj.shape(),
                (n, n),
            ));
        }
        if target.labels.rows() != n {
            return Err(Error::shape(
                "Trainer::new target",
                target.labels.shape(),
                (n, n),
            ));
        }
        if let Some(m) = hp.sample_size {
            if m > n {
                return Err(Error::Config(format!(
                    "sample_size {m} exceeds node count {n}"
                )));
            }
        }
        let root = RngStream::new(hp.seed);
        let init = root.substream(1);
        let encoder = EncoderParams::init(
            features.cols(),
            hp.hidden_dim,
            hp.embed_dim,
            hp.variant.is_variational(),
            &init,
        );
        let discriminator = DiscriminatorParams::init(hp.embed_dim, &init.substream(3));
        let ae_opt = EncoderAdam::new(&encoder, hp.lr);
        let gen_opt = EncoderAdam::new(&encoder, hp.disc_lr);
        let disc_opt = DiscAdam::new(&discriminator, hp.disc_lr);
        Ok(Trainer {
            hp,
            features,
            norm_adj,
            target,
            encoder,
            discriminator,
            prior: PriorSpec::standard_gaussian(hp.embed_dim),
            ae_opt,
            gen_opt,
            disc_opt,
            eps_rng: root.substream(2),
            prior_rng: root.substream(3),
            sample_rng: root.substream(4),
            dropout_rng: root.substream(5),
            history: Vec::new(),
        })
    }

    fn n(&self) -> usize {
        self.features.rows()
    }

    /// One training-mode forward pass (dropout active, variational variants
    /// sample fresh ε).
    fn forward(&mut self) -> Result<EncoderOutput> {
        let mask = if self.hp.dropout > 0.0 {
            let (rows, cols) = (self.n(), self.hp.hidden_dim);
            Some(dropout_mask(
                &mut self.dropout_rng,
                rows,
                cols,
                self.hp.dropout,
            )?)
        } else {
            None
        };
        if self.hp.variant.is_variational() {
            encode_variational_dropout(
                self.features,
                self.norm_adj,
                &self.encoder,
                &mut self.eps_rng,
                mask.as_ref(),
            )
        } else {
            encode_dropout(self.features, self.norm_adj, &self.encoder, mask.as_ref())
        }
    }

    /// Noise-free embedding with current weights (μ for variational
    /// variants): what evaluation and the final return value use.
    pub fn inference_embedding(&self) -> Result<Mat> {
        Ok(encode(self.features, self.norm_adj, &self.encoder)?.z)
    }

    /// One discriminator update: score m prior draws (label 1) against m
    /// encoder rows sampled without replacement (label 0), descend the mean
    /// cross entropy. Encoder parameters are never touched.
    pub fn discriminator_step(&mut self, z: &Mat) -> Result<f64> {
        let n = z.rows();
        let m = self.hp.sample_size.unwrap_or(n);
        let rows = if m == n {
            (0..n).collect::<Vec<_>>()
        } else {
            self.sample_rng.sample_indices(n, m)
        };
        let prior_draws = self.prior.sample(m, &mut self.prior_rng);
        let d = z.cols();
        let mut stacked = Mat::zeros(2 * m, d);
        for (r, row) in prior_draws.data().chunks(d).enumerate() {
            stacked.row_mut(r).copy_from_slice(row);
        }
        for (r, &idx) in rows.iter().enumerate() {
            stacked.row_mut(m + r).copy_from_slice(z.row(idx));
        }
        let (logits, mut cache) = discriminate(&stacked, &self.discriminator)?;
        let denom = 2.0 * m as f64;
        let mut loss = 0.0;
        let mut upstream = Mat::zeros(2 * m, 1);
        for r in 0..2 * m {
            let t = logits[(r, 0)];
            if r < m {
                loss += softplus(-t);
                upstream[(r, 0)] = (sigmoid(t) - 1.0) / denom;
            } else {
                loss += softplus(t);
                upstream[(r, 0)] = sigmoid(t) / denom;
            }
        }
        let loss = loss / denom;
        if !loss.is_finite() {
            return Err(Error::Numeric("non-finite discriminator loss".into()));
        }
        let grads = discriminate_backward(&upstream, &mut cache, &self.discriminator)?;
        for k in 0..3 {
            adam_step(
                &mut self.discriminator.layers[k].weight,
                &grads.weights[k],
                &mut self.disc_opt.weights[k],
            )?;
            adam_step(
                self.discriminator.layers[k]
                    .bias
                    .as_mut()
                    .expect("disc bias"),
                &grads.biases[k],
                &mut self.disc_opt.biases[k],
            )?;
        }
        Ok(loss)
    }

    /// One generator update: the encoder descends
    /// adversarial_weight · mean(−log D(z)) through the frozen
    /// discriminator. Consumes the forward cache in `out`.
    pub fn generator_step(&mut self, out: &mut EncoderOutput) -> Result<f64> {
        let n = out.z.rows() as f64;
        let aw = self.hp.adversarial_weight;
        if aw == 0.0 {
            return Ok(0.0);
        }
        let (logits, mut cache) = discriminate(&out.z, &self.discriminator)?;
        // Non-saturating loss: label-1 BCE on encoder rows, scaled by aw.
        let (loss, upstream) = disc_bce(&logits, 1.0, n / aw);
        if !loss.is_finite() {
            return Err(Error::Numeric("non-finite generator loss".into()));
        }
        let disc_grads = discriminate_backward(&upstream, &mut cache, &self.discriminator)?;
        let grads = encoder_backward(
            out,
            &disc_grads.input,
            None,
            None,
            self.features,
            self.norm_adj,
            &self.encoder,
        )?;
        self.gen_opt.apply(&mut self.encoder, &grads)?;
        Ok(loss)
    }

    /// One autoencoder update on the reconstruction loss (plus KL for
    /// variational variants). Takes a forward pass with a live cache, or
    /// runs a fresh one when `out` is None. Returns (recon, kl).
    pub fn reconstruction_step(&mut self, out: Option<EncoderOutput>) -> Result<(f64, f64)> {
        let mut out = match out {
            Some(o) => o,
            None => self.forward()?,
        };
        let (recon, grad_z) = recon_loss_grad_z(&out.z, self.target)?;
        let (kl, grads) = if self.hp.variant.is_variational() {
            let mu = out.mu.as_ref().expect("variational forward carries mu");
            let ls = out
                .log_sigma
                .as_ref()
                .expect("variational forward carries log_sigma");
            let (kl, grad_mu, grad_ls) = objective_kl(mu, ls)?;
            let grads = encoder_backward(
                &mut out,
                &grad_z,
                Some(&grad_mu),
                Some(&grad_ls),
                self.features,
                self.norm_adj,
                &self.encoder,
            )?;
            (kl, grads)
        } else {
            let grads = encoder_backward(
                &mut out,
                &grad_z,
                None,
                None,
                self.features,
                self.norm_adj,
                &self.encoder,
            )?;
            (0.0, grads)
        };
        self.ae_opt.apply(&mut self.encoder, &grads)?;
        Ok((recon, kl))
    }

    /// Runs the full alternating loop, invoking `on_iter` after each outer
    /// iteration. Validation metrics are computed every 10 iterations when a
    /// split is supplied.
    pub fn run(
        &mut self,
        split: Option<&EdgeSplit>,
        mut on_iter: impl FnMut(&IterationLosses),
    ) -> Result<()> {
        let adversarial = self.hp.variant.is_adversarial();
        for it in 1..=self.hp.iterations {
            let mut record = IterationLosses {
                iter: it,
                ..IterationLosses::default()
            };

            let mut fwd = self.forward()?;
            if adversarial {
                let mut disc_total = 0.0;
                for _ in 0..self.hp.disc_steps {
                    disc_total += self.discriminator_step(&fwd.z)?;
                }
                record.disc = disc_total / self.hp.disc_steps as f64;

                record.gen = self.generator_step(&mut fwd)?;

                // The generator step moved the encoder; reconstruct from a
                // fresh forward pass.
                let (recon, kl) = self.reconstruction_step(None)?;
                record.recon = recon;
                record.kl = kl;
            } else {
                let (recon, kl) = self.reconstruction_step(Some(fwd))?;
                record.recon = recon;
                record.kl = kl;
            }

            for (name, value) in [
                ("recon", record.recon),
                ("kl", record.kl),
                ("disc", record.disc),
                ("gen", record.gen),
            ] {
                if !value.is_finite() {
                    return Err(Error::Numeric(format!(
                        "{name} loss diverged at iteration {it}: {value}"
                    )));
                }
            }

            if let Some(split) = split {
                if it % 10 == 0 {
                    let z = self.inference_embedding()?;
                    let link = evaluate_link_prediction(&z, split, EvalSide::Val)?;
                    record.val_auc = Some(link.auc);
                    record.val_ap = Some(link.ap);
                }
            }

            on_iter(&record);
            self.history.push(record);
        }
        Ok(())
    }

    pub fn into_state(self) -> TrainState {
        TrainState {
            encoder: self.encoder,
            discriminator: self.discriminator,
            iteration: self.history.len(),
            history: self.history,
        }
    }
}

/// Preprocessed training inputs, owned. Keeps the borrowed-input [`Trainer`]
/// usable from code that starts with a [`Graph`].
pub struct PreparedInputs {
    pub dense_features: Option<Mat>,
    pub sparse_features: Option<SpMat>,
    pub norm_adj: SpMat,
    pub target: ReconTarget,
}

impl PreparedInputs {
    /// Row-normalizes features per `hp`, picks the dense or CSR feature
    /// path by density, and builds the normalized adjacency and
    /// reconstruction target from `adjacency` (the train adjacency when a
    /// split is in play).
    pub fn build(g: &Graph, adjacency: &SpMat, hp: &Hyperparams) -> Self {
        let feats = if hp.normalize_features {
            row_normalize_features(&g.features)
        } else {
            g.features.clone()
        };
        let nonzero = feats.data().iter().filter(|v| **v != 0.0).count();
        let density = nonzero as f64 / (feats.rows() * feats.cols().max(1)) as f64;
        let (dense_features, sparse_features) = if density < SPARSE_FEATURE_DENSITY {
            (None, Some(SpMat::from_dense(&feats)))
        } else {
            (Some(feats), None)
        };
        PreparedInputs {
            dense_features,
            sparse_features,
            norm_adj: build_normalized_adjacency(adjacency),
            target: build_recon_target(adjacency),
        }
    }

    pub fn features(&self) -> FeatureRef<'_> {
        match (&self.dense_features, &self.sparse_features) {
            (Some(d), _) => FeatureRef::Dense(d),
            (_, Some(s)) => FeatureRef::Sparse(s),
            _ => unreachable!("PreparedInputs always stores one feature form"),
        }
    }
}

/// End-to-end training: preprocess, run T iterations, return the final
/// noise-free embedding and the trained state. Trains against the split's
/// train adjacency when one is supplied (with validation metrics every 10
/// iterations), else against the full graph.
pub fn train(
    g: &Graph,
    split: Option<&EdgeSplit>,
    hp: &Hyperparams,
    on_iter: impl FnMut(&IterationLosses),
) -> Result<(Mat, TrainState)> {
    let adjacency = split.map(|s| &s.train_adjacency).unwrap_or(&g.adjacency);
    let prepared = PreparedInputs::build(g, adjacency, hp);
    let mut trainer = Trainer::new(
        prepared.features(),
        &prepared.norm_adj,
        &prepared.target,
        *hp,
    )?;
    trainer.run(split, on_iter)?;
    let z = trainer.inference_embedding()?;
    Ok((z, trainer.into_state()))
}
