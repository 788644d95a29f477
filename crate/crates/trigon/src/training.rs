//! A small deterministic embedding trainer.
//!
//! The encoder is a stand-in for the feature extractor of a full pipeline:
//! identity, a single linear layer, or one hidden layer with a rectifier,
//! optionally followed by output L2 normalization. Training is plain
//! mini-batch gradient descent with a fixed learning rate; given equal seeds
//! it is bit-reproducible.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::Triplet;
use crate::losses::{
    angular_loss_batch, combined_loss_batch, npair_loss_batch, triplet_loss, triplet_loss_batch,
    AngularParams,
};
use crate::sampling::{LabeledDataset, NPairSampler, TripletSampler};
use crate::scalar::{from_f64, Scalar};
use crate::vecmath;

/// Divides a vector by its Euclidean norm.
pub fn l2_normalize<S: Scalar>(x: &[S]) -> Result<Vec<S>> {
    let norm = vecmath::norm(x);
    if norm <= S::zero() {
        return Err(Error::numerical("cannot normalize a zero vector"));
    }
    Ok(x.iter().map(|&v| v / norm).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Identity,
    Linear,
    /// One hidden layer with a rectifier between the two linear maps.
    OneHidden,
}

/// Trainable encoder mapping input vectors to embeddings.
///
/// Weight matrices are stored row-major, `w[row * in_dim + col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel<S> {
    kind: EncoderKind,
    input_dim: usize,
    embed_dim: usize,
    hidden_dim: usize,
    w1: Vec<S>,
    b1: Vec<S>,
    w2: Vec<S>,
    b2: Vec<S>,
    normalize_output: bool,
}

/// Intermediates saved by [`EncoderModel::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<S> {
    inputs: Vec<Vec<S>>,
    /// Post-rectifier hidden activations (one-hidden encoders only).
    hidden: Vec<Vec<S>>,
    /// Pre-normalization outputs.
    raw: Vec<Vec<S>>,
    /// Pre-normalization norms; 0 marks a zero vector passed through.
    norms: Vec<S>,
}

/// Parameter gradients, shape-aligned with the model's weight vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads<S> {
    pub w1: Vec<S>,
    pub b1: Vec<S>,
    pub w2: Vec<S>,
    pub b2: Vec<S>,
}

impl<S: Scalar> EncoderModel<S> {
    /// Identity encoder; requires equal input and embedding dimensions by
    /// construction.
    pub fn identity(dim: usize, normalize_output: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("encoder dimension must be >= 1"));
        }
        Ok(Self {
            kind: EncoderKind::Identity,
            input_dim: dim,
            embed_dim: dim,
            hidden_dim: 0,
            w1: Vec::new(),
            b1: Vec::new(),
            w2: Vec::new(),
            b2: Vec::new(),
            normalize_output,
        })
    }

    /// Randomly initialized encoder. All weights and biases are drawn
    /// uniformly from `[-1/√fan_in, +1/√fan_in]` in a fixed order (w1, b1,
    /// w2, b2), so equal seeds give equal models.
    pub fn init(
        kind: EncoderKind,
        input_dim: usize,
        embed_dim: usize,
        hidden_dim: usize,
        normalize_output: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if input_dim == 0 || embed_dim == 0 {
            return Err(Error::invalid("encoder dimensions must be >= 1"));
        }
        match kind {
            EncoderKind::Identity => {
                if input_dim != embed_dim {
                    return Err(Error::invalid(
                        "identity encoder needs input_dim == embed_dim",
                    ));
                }
                Self::identity(input_dim, normalize_output)
            }
            EncoderKind::Linear => {
                let bound = 1.0 / (input_dim as f64).sqrt();
                let w1 = draw_uniform(rng, embed_dim * input_dim, bound);
                let b1 = draw_uniform(rng, embed_dim, bound);
                Ok(Self {
                    kind,
                    input_dim,
                    embed_dim,
                    hidden_dim: 0,
                    w1,
                    b1,
                    w2: Vec::new(),
                    b2: Vec::new(),
                    normalize_output,
                })
            }
            EncoderKind::OneHidden => {
                if hidden_dim == 0 {
                    return Err(Error::invalid("one-hidden encoder needs hidden_dim >= 1"));
                }
                let bound1 = 1.0 / (input_dim as f64).sqrt();
                let bound2 = 1.0 / (hidden_dim as f64).sqrt();
                let w1 = draw_uniform(rng, hidden_dim * input_dim, bound1);
                let b1 = draw_uniform(rng, hidden_dim, bound1);
                let w2 = draw_uniform(rng, embed_dim * hidden_dim, bound2);
                let b2 = draw_uniform(rng, embed_dim, bound2);
                Ok(Self {
                    kind,
                    input_dim,
                    embed_dim,
                    hidden_dim,
                    w1,
                    b1,
                    w2,
                    b2,
                    normalize_output,
                })
            }
        }
    }

    /// Linear encoder from explicit parameters (row-major weight).
    pub fn linear_from_parts(
        weight: Vec<S>,
        bias: Vec<S>,
        input_dim: usize,
        embed_dim: usize,
        normalize_output: bool,
    ) -> Result<Self> {
        if weight.len() != embed_dim * input_dim || bias.len() != embed_dim {
            return Err(Error::invalid("linear parameter shapes are inconsistent"));
        }
        Ok(Self {
            kind: EncoderKind::Linear,
            input_dim,
            embed_dim,
            hidden_dim: 0,
            w1: weight,
            b1: bias,
            w2: Vec::new(),
            b2: Vec::new(),
            normalize_output,
        })
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn normalize_output(&self) -> bool {
        self.normalize_output
    }

    pub fn weights1(&self) -> &[S] {
        &self.w1
    }

    pub fn bias1(&self) -> &[S] {
        &self.b1
    }

    pub fn weights2(&self) -> &[S] {
        &self.w2
    }

    pub fn bias2(&self) -> &[S] {
        &self.b2
    }

    /// Rebuilds a model from persisted pieces, validating all shapes.
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw_parts(
        kind: EncoderKind,
        input_dim: usize,
        embed_dim: usize,
        hidden_dim: usize,
        normalize_output: bool,
        w1: Vec<S>,
        b1: Vec<S>,
        w2: Vec<S>,
        b2: Vec<S>,
    ) -> Result<Self> {
        if input_dim == 0 || embed_dim == 0 {
            return Err(Error::invalid("encoder dimensions must be >= 1"));
        }
        let shapes_ok = match kind {
            EncoderKind::Identity => {
                input_dim == embed_dim
                    && hidden_dim == 0
                    && w1.is_empty()
                    && b1.is_empty()
                    && w2.is_empty()
                    && b2.is_empty()
            }
            EncoderKind::Linear => {
                hidden_dim == 0
                    && w1.len() == embed_dim * input_dim
                    && b1.len() == embed_dim
                    && w2.is_empty()
                    && b2.is_empty()
            }
            EncoderKind::OneHidden => {
                hidden_dim >= 1
                    && w1.len() == hidden_dim * input_dim
                    && b1.len() == hidden_dim
                    && w2.len() == embed_dim * hidden_dim
                    && b2.len() == embed_dim
            }
        };
        if !shapes_ok {
            return Err(Error::invalid("parameter shapes are inconsistent"));
        }
        Ok(Self {
            kind,
            input_dim,
            embed_dim,
            hidden_dim,
            w1,
            b1,
            w2,
            b2,
            normalize_output,
        })
    }

    /// All parameters flattened in the fixed order w1, b1, w2, b2.
    pub fn flat_parameters(&self) -> Vec<S> {
        let mut out =
            Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len());
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.extend_from_slice(&self.b2);
        out
    }

    /// Overwrites all parameters from a flat slice in the same order.
    pub fn set_flat_parameters(&mut self, flat: &[S]) -> Result<()> {
        let expected = self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len();
        if flat.len() != expected {
            return Err(Error::invalid(format!(
                "expected {expected} parameters, got {}",
                flat.len()
            )));
        }
        let mut offset = 0;
        for field in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            let len = field.len();
            field.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }

    /// Maps a batch of inputs to embeddings, keeping the intermediates
    /// needed by [`EncoderModel::backward`].
    pub fn forward(&self, batch: &[Vec<S>]) -> Result<(Vec<Vec<S>>, ForwardCache<S>)> {
        for (i, x) in batch.iter().enumerate() {
            if x.len() != self.input_dim {
                return Err(Error::invalid(format!(
                    "input {i} has dimension {}, encoder expects {}",
                    x.len(),
                    self.input_dim
                )));
            }
        }
        let mut hidden = Vec::new();
        let raw: Vec<Vec<S>> = match self.kind {
            EncoderKind::Identity => batch.to_vec(),
            EncoderKind::Linear => batch
                .iter()
                .map(|x| affine(&self.w1, &self.b1, x, self.embed_dim, self.input_dim))
                .collect(),
            EncoderKind::OneHidden => {
                hidden.reserve(batch.len());
                batch
                    .iter()
                    .map(|x| {
                        let mut h = affine(&self.w1, &self.b1, x, self.hidden_dim, self.input_dim);
                        for v in h.iter_mut() {
                            if *v < S::zero() {
                                *v = S::zero();
                            }
                        }
                        let out = affine(&self.w2, &self.b2, &h, self.embed_dim, self.hidden_dim);
                        hidden.push(h);
                        out
                    })
                    .collect()
            }
        };
        let mut norms = vec![S::zero(); raw.len()];
        let outputs: Vec<Vec<S>> = if self.normalize_output {
            raw.iter()
                .enumerate()
                .map(|(i, r)| {
                    let n = vecmath::norm(r);
                    norms[i] = n;
                    if n > S::zero() {
                        r.iter().map(|&v| v / n).collect()
                    } else {
                        r.clone()
                    }
                })
                .collect()
        } else {
            raw.clone()
        };
        let cache = ForwardCache {
            inputs: batch.to_vec(),
            hidden,
            raw,
            norms,
        };
        Ok((outputs, cache))
    }

    /// Embeddings only, for inference paths that never backpropagate.
    pub fn embed(&self, batch: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
        Ok(self.forward(batch)?.0)
    }

    /// Exact chain-rule gradients for parameters and inputs, including the
    /// normalization Jacobian when output normalization is enabled.
    pub fn backward(
        &self,
        cache: &ForwardCache<S>,
        grad_embeddings: &[Vec<S>],
    ) -> Result<(ParamGrads<S>, Vec<Vec<S>>)> {
        if grad_embeddings.len() != cache.inputs.len() {
            return Err(Error::invalid(format!(
                "cache holds {} samples but received {} gradients",
                cache.inputs.len(),
                grad_embeddings.len()
            )));
        }
        if cache.raw.len() != cache.inputs.len()
            || (self.kind == EncoderKind::OneHidden && cache.hidden.len() != cache.inputs.len())
        {
            return Err(Error::invalid("stale forward cache"));
        }
        for (i, g) in grad_embeddings.iter().enumerate() {
            if g.len() != self.embed_dim {
                return Err(Error::invalid(format!(
                    "gradient {i} has dimension {}, embeddings have {}",
                    g.len(),
                    self.embed_dim
                )));
            }
            if cache.inputs[i].len() != self.input_dim || cache.raw[i].len() != self.embed_dim {
                return Err(Error::invalid("cache shapes do not match this model"));
            }
        }

        let mut grads = ParamGrads {
            w1: vec![S::zero(); self.w1.len()],
            b1: vec![S::zero(); self.b1.len()],
            w2: vec![S::zero(); self.w2.len()],
            b2: vec![S::zero(); self.b2.len()],
        };
        let mut input_grads = Vec::with_capacity(cache.inputs.len());

        for (i, upstream) in grad_embeddings.iter().enumerate() {
            // Through y = raw / ‖raw‖: g_raw = (g − (g·y) y) / ‖raw‖.
            let g_raw: Vec<S> = if self.normalize_output && cache.norms[i] > S::zero() {
                let n = cache.norms[i];
                let y: Vec<S> = cache.raw[i].iter().map(|&v| v / n).collect();
                let g_dot_y = vecmath::dot(upstream, &y);
                upstream
                    .iter()
                    .zip(&y)
                    .map(|(&g, &yi)| (g - g_dot_y * yi) / n)
                    .collect()
            } else {
                upstream.clone()
            };

            match self.kind {
                EncoderKind::Identity => input_grads.push(g_raw),
                EncoderKind::Linear => {
                    let x = &cache.inputs[i];
                    accumulate_affine(
                        &mut grads.w1,
                        &mut grads.b1,
                        &g_raw,
                        x,
                        self.embed_dim,
                        self.input_dim,
                    );
                    input_grads.push(affine_transpose(
                        &self.w1,
                        &g_raw,
                        self.embed_dim,
                        self.input_dim,
                    ));
                }
                EncoderKind::OneHidden => {
                    let x = &cache.inputs[i];
                    let h = &cache.hidden[i];
                    accumulate_affine(
                        &mut grads.w2,
                        &mut grads.b2,
                        &g_raw,
                        h,
                        self.embed_dim,
                        self.hidden_dim,
                    );
                    let mut g_hidden =
                        affine_transpose(&self.w2, &g_raw, self.embed_dim, self.hidden_dim);
                    for (g, &act) in g_hidden.iter_mut().zip(h) {
                        if act <= S::zero() {
                            *g = S::zero();
                        }
                    }
                    accumulate_affine(
                        &mut grads.w1,
                        &mut grads.b1,
                        &g_hidden,
                        x,
                        self.hidden_dim,
                        self.input_dim,
                    );
                    input_grads.push(affine_transpose(
                        &self.w1,
                        &g_hidden,
                        self.hidden_dim,
                        self.input_dim,
                    ));
                }
            }
        }
        Ok((grads, input_grads))
    }

    fn apply_update(&mut self, grads: &ParamGrads<S>, learning_rate: S) {
        for (params, grad) in [
            (&mut self.w1, &grads.w1),
            (&mut self.b1, &grads.b1),
            (&mut self.w2, &grads.w2),
            (&mut self.b2, &grads.b2),
        ] {
            for (p, &g) in params.iter_mut().zip(grad.iter()) {
                *p -= learning_rate * g;
            }
        }
    }
}

/// `out[r] = b[r] + Σ_c w[r, c] x[c]`.
fn affine<S: Scalar>(w: &[S], b: &[S], x: &[S], rows: usize, cols: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        out.push(b[r] + vecmath::dot(row, x));
    }
    out
}

/// `out[c] = Σ_r w[r, c] g[r]` (the transpose map).
fn affine_transpose<S: Scalar>(w: &[S], g: &[S], rows: usize, cols: usize) -> Vec<S> {
    let mut out = vec![S::zero(); cols];
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        for (o, &wv) in out.iter_mut().zip(row) {
            *o += wv * g[r];
        }
    }
    out
}

/// `dw[r, c] += g[r] x[c]`, `db[r] += g[r]`.
fn accumulate_affine<S: Scalar>(
    dw: &mut [S],
    db: &mut [S],
    g: &[S],
    x: &[S],
    rows: usize,
    cols: usize,
) {
    for r in 0..rows {
        db[r] += g[r];
        let row = &mut dw[r * cols..(r + 1) * cols];
        for (d, &xv) in row.iter_mut().zip(x) {
            *d += g[r] * xv;
        }
    }
}

fn draw_uniform<S: Scalar>(rng: &mut ChaCha8Rng, count: usize, bound: f64) -> Vec<S> {
    (0..count)
        .map(|_| from_f64::<S>(rng.random_range(-bound..bound)))
        .collect()
}

/// Which objective the trainer minimizes, and under which sampling regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Hinge triplet loss over disjoint triplets (3 samples each).
    TripletDisjoint,
    /// Hinge triplet loss tuplet-expanded over N-pair batches.
    TripletNPair,
    /// Batch angular log-sum-exp loss over N-pair batches.
    Angular,
    /// N-pair loss.
    NPair,
    /// N-pair plus weighted batch angular loss.
    NPairAngular,
}

impl LossKind {
    pub fn needs_alpha(self) -> bool {
        matches!(self, LossKind::Angular | LossKind::NPairAngular)
    }

    pub fn uses_npair_sampling(self) -> bool {
        !matches!(self, LossKind::TripletDisjoint)
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub loss: LossKind,
    /// Angular margin in degrees; required by the angular losses.
    pub alpha_degrees: Option<f64>,
    pub margin: f64,
    pub lambda: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub encoder: EncoderKind,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub normalize_output: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::NPairAngular,
            alpha_degrees: Some(45.0),
            margin: 0.1,
            lambda: 2.0,
            batch_size: 32,
            iterations: 2000,
            learning_rate: 0.05,
            seed: 0,
            encoder: EncoderKind::Linear,
            embed_dim: 16,
            hidden_dim: 32,
            normalize_output: false,
        }
    }
}

impl TrainConfig {
    fn validate<S: Scalar>(&self, data: &LabeledDataset<S>) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive and finite"));
        }
        if self.margin < 0.0 {
            return Err(Error::invalid("margin must be nonnegative"));
        }
        if self.lambda < 0.0 {
            return Err(Error::invalid("lambda must be nonnegative"));
        }
        if self.loss.needs_alpha() && self.alpha_degrees.is_none() {
            return Err(Error::invalid("this loss requires an alpha value"));
        }
        if self.loss.uses_npair_sampling() {
            if self.batch_size < 4 || !self.batch_size.is_multiple_of(2) {
                return Err(Error::invalid(
                    "N-pair-sampled losses need an even batch size of at least 4",
                ));
            }
        } else if self.batch_size < 3 {
            return Err(Error::invalid(
                "disjoint-triplet training needs a batch size of at least 3",
            ));
        }
        if self.encoder == EncoderKind::Identity && self.embed_dim != data.dim() {
            return Err(Error::invalid(
                "identity encoder needs embed_dim equal to the data dimension",
            ));
        }
        Ok(())
    }
}

/// Runs the sample → forward → loss → backward → update loop and returns the
/// trained model with the per-iteration loss history.
pub fn train<S: Scalar>(
    data: &LabeledDataset<S>,
    config: &TrainConfig,
) -> Result<(EncoderModel<S>, Vec<S>)> {
    config.validate(data)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = EncoderModel::init(
        config.encoder,
        data.dim(),
        config.embed_dim,
        config.hidden_dim,
        config.normalize_output,
        &mut init_rng,
    )?;

    // The sampler consumes an independent, equally seeded stream so that
    // model size does not perturb the sample sequence.
    let mut sampler_rng = ChaCha8Rng::seed_from_u64(config.seed);
    sampler_rng.set_stream(1);

    let margin = from_f64::<S>(config.margin);
    let lambda = from_f64::<S>(config.lambda);
    let params = match config.alpha_degrees {
        Some(alpha) => Some(AngularParams::<S>::new(alpha)?),
        None => None,
    };

    let mut history = Vec::with_capacity(config.iterations);
    match config.loss {
        LossKind::TripletDisjoint => {
            let triplets_per_batch = config.batch_size / 3;
            let mut sampler = TripletSampler::with_rng(data, sampler_rng)?;
            for iteration in 0..config.iterations {
                let triplets = sampler.sample(triplets_per_batch);
                let mut inputs = Vec::with_capacity(triplets.len() * 3);
                for t in &triplets {
                    inputs.push(t.anchor().to_vec());
                    inputs.push(t.positive().to_vec());
                    inputs.push(t.negative().to_vec());
                }
                let (embeddings, cache) = model.forward(&inputs)?;
                if embeddings.iter().any(|e| !vecmath::is_finite(e)) {
                    return Err(Error::Diverged { iteration });
                }
                let inv = S::one() / from_f64::<S>(triplets.len() as f64);
                let mut value = S::zero();
                let mut slot_grads = vec![vec![S::zero(); model.embed_dim()]; inputs.len()];
                for k in 0..triplets.len() {
                    let t = Triplet::new(
                        embeddings[3 * k].clone(),
                        embeddings[3 * k + 1].clone(),
                        embeddings[3 * k + 2].clone(),
                    )
                    .expect("finite embeddings");
                    let res = triplet_loss(&t, margin)?;
                    value += res.value * inv;
                    for role in 0..3 {
                        vecmath::add_scaled(&mut slot_grads[3 * k + role], inv, &res.gradients[role]);
                    }
                }
                step_and_record(
                    &mut model,
                    &cache,
                    &slot_grads,
                    value,
                    config,
                    iteration,
                    &mut history,
                )?;
            }
        }
        _ => {
            let mut sampler = NPairSampler::with_rng(data, sampler_rng);
            for iteration in 0..config.iterations {
                let batch = sampler.sample(config.batch_size)?;
                let (embeddings, cache) = model.forward(batch.vectors())?;
                if embeddings.iter().any(|e| !vecmath::is_finite(e)) {
                    return Err(Error::Diverged { iteration });
                }
                let embedded = batch
                    .with_vectors(embeddings)
                    .expect("finite embeddings keep the batch valid");
                let result = match config.loss {
                    LossKind::TripletNPair => triplet_loss_batch(&embedded, margin)?,
                    LossKind::Angular => {
                        angular_loss_batch(&embedded, params.as_ref().expect("validated"))
                    }
                    LossKind::NPair => npair_loss_batch(&embedded),
                    LossKind::NPairAngular => combined_loss_batch(
                        &embedded,
                        params.as_ref().expect("validated"),
                        lambda,
                    )?,
                    LossKind::TripletDisjoint => unreachable!(),
                };
                step_and_record(
                    &mut model,
                    &cache,
                    &result.gradients,
                    result.value,
                    config,
                    iteration,
                    &mut history,
                )?;
            }
        }
    }
    Ok((model, history))
}

fn step_and_record<S: Scalar>(
    model: &mut EncoderModel<S>,
    cache: &ForwardCache<S>,
    slot_grads: &[Vec<S>],
    value: S,
    config: &TrainConfig,
    iteration: usize,
    history: &mut Vec<S>,
) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::Diverged { iteration });
    }
    let (param_grads, _) = model.backward(cache, slot_grads)?;
    model.apply_update(&param_grads, from_f64(config.learning_rate));
    history.push(value);
    Ok(())
}

/// Synthetic Gaussian-cluster dataset: `classes` isotropic centers scaled by
/// `center_scale`, `per_class` samples per center with noise `noise_sigma`.
/// Zero noise produces exact duplicates within each class.
pub fn generate_synthetic<S: Scalar>(
    classes: usize,
    per_class: usize,
    dim: usize,
    center_scale: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<LabeledDataset<S>> {
    if classes < 2 || per_class < 2 || dim < 2 {
        return Err(Error::invalid(
            "synthetic data needs classes >= 2, per_class >= 2, dim >= 2",
        ));
    }
    if !(center_scale > 0.0 && center_scale.is_finite()) {
        return Err(Error::invalid("center scale must be positive"));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::invalid("noise sigma must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            (0..dim)
                .map(|_| center_scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect()
        })
        .collect();
    let mut samples = Vec::with_capacity(classes * per_class);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            let v: Vec<S> = center
                .iter()
                .map(|&c| {
                    let noise: f64 =
                        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                    from_f64::<S>(c + noise_sigma * noise)
                })
                .collect();
            samples.push((v, label));
        }
    }
    LabeledDataset::new(samples)
}
