//! Verification harness comparing analytic loss gradients against the
//! central finite-difference oracle on randomized instances, plus the random
//! triplet/batch/transform generators the comparisons (and the test suites)
//! are built on.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::Triplet;
use crate::losses::{
    self, angular_loss, angular_loss_batch, combined_loss_batch, npair_loss_batch, triplet_loss,
    triplet_loss_batch, AngularParams, LossResult,
};
use crate::sampling::{LabeledDataset, NPairBatch};
use crate::scalar::{from_f64, Scalar};
use crate::vecmath;

/// Which loss a gradient check targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradCheckTarget {
    /// Per-triplet hinge loss.
    Triplet,
    /// Per-triplet angular hinge loss.
    Angular,
    /// Batch angular log-sum-exp loss.
    AngularBatch,
    /// N-pair loss.
    NPair,
    /// N-pair plus weighted batch angular loss.
    Combined,
    /// Tuplet-expanded triplet hinge under N-pair sampling.
    TripletBatch,
}

impl GradCheckTarget {
    pub fn is_batch(self) -> bool {
        !matches!(self, GradCheckTarget::Triplet | GradCheckTarget::Angular)
    }

    /// Whether the loss has hinge kinks that finite differences cannot
    /// straddle; the smooth log-sum-exp losses have none.
    pub fn has_kinks(self) -> bool {
        matches!(
            self,
            GradCheckTarget::Triplet | GradCheckTarget::Angular | GradCheckTarget::TripletBatch
        )
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    /// Instances to compare (kink-adjacent draws are replaced, not counted).
    pub trials: usize,
    /// Embedding dimension of the random instances.
    pub dim: usize,
    pub seed: u64,
    /// Central-difference step.
    pub step: f64,
    /// Half-width of the excluded band around hinge kinks.
    pub kink_band: f64,
    /// Pairs per random batch for the batch losses (N = 2 × pairs).
    pub batch_pairs: usize,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            dim: 8,
            seed: 0,
            step: 1e-5,
            kink_band: 1e-3,
            batch_pairs: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub target: GradCheckTarget,
    pub trials: usize,
    /// Draws discarded for falling inside the kink band.
    pub skipped_kinks: usize,
    /// Worst per-input error `‖analytic − fd‖∞ / max(1, ‖fd‖∞)` over all
    /// compared instances.
    pub max_rel_error: f64,
}

/// Compares analytic and finite-difference gradients on `config.trials`
/// random instances of the target loss.
pub fn run_grad_check<S: Scalar>(
    target: GradCheckTarget,
    config: &GradCheckConfig,
) -> Result<GradCheckReport> {
    if config.trials == 0 {
        return Err(Error::invalid("grad check needs at least one trial"));
    }
    if config.dim == 0 {
        return Err(Error::invalid("grad check dimension must be >= 1"));
    }
    if config.batch_pairs < 2 {
        return Err(Error::invalid("grad check batches need at least 2 pairs"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let step = from_f64::<S>(config.step);
    let mut skipped = 0usize;
    let mut max_rel_error = 0.0f64;
    let mut compared = 0usize;

    // Cap on kink-adjacent redraws so a degenerate configuration cannot spin.
    let max_attempts = config.trials.saturating_mul(20).max(1000);
    let mut attempts = 0usize;

    while compared < config.trials {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::numerical(
                "too many kink-adjacent draws; widen the instance distribution",
            ));
        }
        let margin = from_f64::<S>(rng.random_range(0.25..1.5));
        let params = AngularParams::<S>::new(rng.random_range(15.0..75.0))?;
        let lambda = from_f64::<S>(2.0);

        let error = match target {
            GradCheckTarget::Triplet | GradCheckTarget::Angular => {
                let t = random_triplet::<S>(&mut rng, config.dim);
                if target.has_kinks() && near_triplet_kink(&t, margin, &params, target, config) {
                    skipped += 1;
                    continue;
                }
                let analytic: LossResult<S> = match target {
                    GradCheckTarget::Triplet => triplet_loss(&t, margin)?,
                    GradCheckTarget::Angular => angular_loss(&t, &params),
                    _ => unreachable!(),
                };
                let inputs = [
                    t.anchor().to_vec(),
                    t.positive().to_vec(),
                    t.negative().to_vec(),
                ];
                let fd = losses::finite_difference_gradient(
                    |xs: &[Vec<S>]| {
                        let t = Triplet::new(xs[0].clone(), xs[1].clone(), xs[2].clone())
                            .expect("perturbed triplet stays valid");
                        match target {
                            GradCheckTarget::Triplet => {
                                triplet_loss(&t, margin).expect("margin validated").value
                            }
                            GradCheckTarget::Angular => angular_loss(&t, &params).value,
                            _ => unreachable!(),
                        }
                    },
                    &inputs,
                    step,
                )?;
                max_component_error(&analytic.gradients, &fd)
            }
            _ => {
                let batch = random_batch::<S>(&mut rng, config.batch_pairs, config.dim);
                if target == GradCheckTarget::TripletBatch
                    && near_expanded_kink(&batch, margin, config)
                {
                    skipped += 1;
                    continue;
                }
                let analytic = match target {
                    GradCheckTarget::AngularBatch => angular_loss_batch(&batch, &params),
                    GradCheckTarget::NPair => npair_loss_batch(&batch),
                    GradCheckTarget::Combined => combined_loss_batch(&batch, &params, lambda)?,
                    GradCheckTarget::TripletBatch => triplet_loss_batch(&batch, margin)?,
                    _ => unreachable!(),
                };
                // The value-only evaluators agree bit for bit with the full
                // losses (covered by a test), so differentiating them checks
                // the same function.
                let mut scratch = batch.clone();
                let fd = losses::finite_difference_gradient(
                    |vectors: &[Vec<S>]| {
                        scratch.copy_vectors_from(vectors);
                        match target {
                            GradCheckTarget::AngularBatch => {
                                losses::angular_loss_batch_value(&scratch, &params)
                            }
                            GradCheckTarget::NPair => losses::npair_loss_batch_value(&scratch),
                            GradCheckTarget::Combined => {
                                losses::combined_loss_batch_value(&scratch, &params, lambda)
                                    .expect("lambda validated")
                            }
                            GradCheckTarget::TripletBatch => {
                                losses::triplet_loss_batch_value(&scratch, margin)
                                    .expect("margin validated")
                            }
                            _ => unreachable!(),
                        }
                    },
                    batch.vectors(),
                    step,
                )?;
                max_component_error(&analytic.gradients, &fd)
            }
        };
        max_rel_error = max_rel_error.max(error);
        compared += 1;
    }

    Ok(GradCheckReport {
        target,
        trials: compared,
        skipped_kinks: skipped,
        max_rel_error,
    })
}

fn near_triplet_kink<S: Scalar>(
    t: &Triplet<S>,
    margin: S,
    params: &AngularParams<S>,
    target: GradCheckTarget,
    config: &GradCheckConfig,
) -> bool {
    let band = from_f64::<S>(config.kink_band);
    let arg = match target {
        GradCheckTarget::Triplet => {
            vecmath::squared_distance(t.anchor(), t.positive())
                - vecmath::squared_distance(t.anchor(), t.negative())
                + margin
        }
        GradCheckTarget::Angular => {
            let four = from_f64::<S>(4.0);
            let g = crate::geometry::triangle_geometry(t);
            vecmath::squared_distance(t.anchor(), t.positive())
                - four
                    * params.tan_sq_alpha()
                    * g.negative_to_center_dist
                    * g.negative_to_center_dist
        }
        _ => unreachable!(),
    };
    arg.abs() < band
}

fn near_expanded_kink<S: Scalar>(batch: &NPairBatch<S>, margin: S, config: &GradCheckConfig) -> bool {
    let band = from_f64::<S>(config.kink_band);
    for (a_slot, p_slot) in batch.tuplets() {
        let ap = vecmath::squared_distance(batch.vector(a_slot), batch.vector(p_slot));
        for n_slot in batch.negative_slots(a_slot) {
            let arg =
                ap - vecmath::squared_distance(batch.vector(a_slot), batch.vector(n_slot)) + margin;
            if arg.abs() < band {
                return true;
            }
        }
    }
    false
}

/// Worst per-input gradient discrepancy, `‖a − f‖∞ / max(1, ‖f‖∞)` maximized
/// over the input vectors.
pub fn max_component_error<S: Scalar>(analytic: &[Vec<S>], fd: &[Vec<S>]) -> f64 {
    let mut worst = 0.0f64;
    for (a, f) in analytic.iter().zip(fd) {
        let mut diff = 0.0f64;
        let mut scale = 1.0f64;
        for (&x, &y) in a.iter().zip(f) {
            let xf = x.to_f64().unwrap_or(f64::NAN);
            let yf = y.to_f64().unwrap_or(f64::NAN);
            diff = diff.max((xf - yf).abs());
            scale = scale.max(yf.abs());
        }
        worst = worst.max(diff / scale);
    }
    worst
}

/// Seeded generator for randomized checks.
pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A triplet with components uniform in `(-1, 1)`.
pub fn random_triplet<S: Scalar>(rng: &mut ChaCha8Rng, dim: usize) -> Triplet<S> {
    Triplet::new(
        random_vector(rng, dim),
        random_vector(rng, dim),
        random_vector(rng, dim),
    )
    .expect("random components are finite")
}

/// A triplet of unit-norm vectors (uniform direction).
pub fn random_unit_triplet<S: Scalar>(rng: &mut ChaCha8Rng, dim: usize) -> Triplet<S> {
    Triplet::new(
        random_unit_vector(rng, dim),
        random_unit_vector(rng, dim),
        random_unit_vector(rng, dim),
    )
    .expect("unit vectors are finite")
}

/// An N-pair batch of `num_pairs` classes with components uniform in
/// `(-1, 1)`; slot `i` originates from dataset position `i`.
pub fn random_batch<S: Scalar>(
    rng: &mut ChaCha8Rng,
    num_pairs: usize,
    dim: usize,
) -> NPairBatch<S> {
    let samples: Vec<(Vec<S>, usize)> = (0..num_pairs)
        .flat_map(|class| {
            let a = (random_vector::<S>(rng, dim), class);
            let b = (random_vector::<S>(rng, dim), class);
            [a, b]
        })
        .collect();
    let data = LabeledDataset::new(samples).expect("generated samples are valid");
    let pairs: Vec<(usize, usize)> = (0..num_pairs).map(|k| (2 * k, 2 * k + 1)).collect();
    NPairBatch::from_dataset(&data, &pairs).expect("generated pairs are valid")
}

pub fn random_vector<S: Scalar>(rng: &mut ChaCha8Rng, dim: usize) -> Vec<S> {
    (0..dim)
        .map(|_| from_f64::<S>(rng.random_range(-1.0..1.0)))
        .collect()
}

fn random_unit_vector<S: Scalar>(rng: &mut ChaCha8Rng, dim: usize) -> Vec<S> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| from_f64::<S>(x / norm)).collect();
        }
    }
}

/// A uniformly random rotation (orthogonal matrix with positive column
/// signs fixed by Gram-Schmidt), returned row-major.
pub fn random_rotation<S: Scalar>(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<S>> {
    loop {
        let mut rows: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        let mut ok = true;
        for i in 0..dim {
            for k in 0..i {
                let proj: f64 = (0..dim).map(|j| rows[i][j] * rows[k][j]).sum();
                let (head, tail) = rows.split_at_mut(i);
                for (v, &b) in tail[0].iter_mut().zip(&head[k]) {
                    *v -= proj * b;
                }
            }
            let norm = rows[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for v in rows[i].iter_mut() {
                *v /= norm;
            }
        }
        if ok {
            return rows
                .into_iter()
                .map(|r| r.into_iter().map(from_f64::<S>).collect())
                .collect();
        }
    }
}

/// A random similarity transform: scale in `(0.1, 3)`, rotation, shift with
/// components in `(-2, 2)`.
pub fn random_similarity<S: Scalar>(
    rng: &mut ChaCha8Rng,
    dim: usize,
) -> (S, Vec<Vec<S>>, Vec<S>) {
    let scale = from_f64::<S>(rng.random_range(0.1..3.0));
    let rotation = random_rotation::<S>(rng, dim);
    let shift = (0..dim)
        .map(|_| from_f64::<S>(rng.random_range(-2.0..2.0)))
        .collect();
    (scale, rotation, shift)
}

/// Applies `x ↦ scale · R x + shift` to all three triplet members.
pub fn apply_similarity<S: Scalar>(
    t: &Triplet<S>,
    scale: S,
    rotation: &[Vec<S>],
    shift: &[S],
) -> Triplet<S> {
    let map = |x: &[S]| -> Vec<S> {
        rotation
            .iter()
            .zip(shift)
            .map(|(row, &b)| scale * vecmath::dot(row, x) + b)
            .collect()
    };
    Triplet::new(map(t.anchor()), map(t.positive()), map(t.negative()))
        .expect("similarity image is finite")
}
