//! Retrieval and clustering evaluation over class-disjoint splits:
//! Recall@R nearest-neighbor scoring, seeded k-means (k-means++ with
//! restarts), normalized mutual information and pairwise F1.
//!
//! Neighbor ranking uses squared Euclidean distances with ties broken by
//! ascending sample index, so reports are identical across runs and
//! platforms.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sampling::LabeledDataset;
use crate::scalar::{from_f64, Scalar};
use crate::vecmath::squared_distance;

/// Scores of one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// Recall@R per requested R, monotone nondecreasing in R.
    pub recall_at: BTreeMap<usize, f64>,
    pub nmi: f64,
    pub f1: f64,
    /// Number of k-means clusters used.
    pub k_used: usize,
    pub num_queries: usize,
}

impl MetricReport {
    /// Line-oriented text form: a comment header followed by one
    /// `metric<TAB>value` pair per line with fixed 6-decimal formatting.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# num_queries={} k_used={}", self.num_queries, self.k_used);
        for (&r, &score) in &self.recall_at {
            let _ = writeln!(out, "recall@{r}\t{score:.6}");
        }
        let _ = writeln!(out, "nmi\t{:.6}", self.nmi);
        let _ = writeln!(out, "f1\t{:.6}", self.f1);
        out
    }
}

/// Partitions the class labels (not the samples) into disjoint train/test
/// sides; every sample follows its class. `train_fraction` is the fraction
/// of classes that go to the training side, rounded to the nearest count.
pub fn split_by_class<S: Scalar>(
    data: &LabeledDataset<S>,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset<S>, LabeledDataset<S>)> {
    if data.num_classes() < 2 {
        return Err(Error::invalid("class split needs at least two classes"));
    }
    if !(train_fraction.is_finite() && train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(
            "train fraction must lie strictly between 0 and 1",
        ));
    }
    let mut classes = data.class_labels();
    let n_train = (train_fraction * classes.len() as f64).round() as usize;
    if n_train == 0 || n_train == classes.len() {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} leaves one side of the split empty"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates over the ascending label list.
    for i in (1..classes.len()).rev() {
        let j = rng.random_range(0..=i);
        classes.swap(i, j);
    }
    let train_labels: std::collections::BTreeSet<usize> =
        classes[..n_train].iter().copied().collect();

    let mut train = Vec::new();
    let mut test = Vec::new();
    for i in 0..data.len() {
        let sample = (data.vector(i).to_vec(), data.label(i));
        if train_labels.contains(&data.label(i)) {
            train.push(sample);
        } else {
            test.push(sample);
        }
    }
    Ok((LabeledDataset::new(train)?, LabeledDataset::new(test)?))
}

/// Fraction of queries whose `R` nearest neighbors (squared Euclidean, self
/// excluded, ties by ascending index) contain at least one sample of the
/// same class, for each requested `R`.
pub fn recall_at_r<S: Scalar>(
    embeddings: &[Vec<S>],
    labels: &[usize],
    r_values: &[usize],
) -> Result<BTreeMap<usize, f64>> {
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::invalid("recall needs at least two samples"));
    }
    if labels.len() != n {
        return Err(Error::invalid("embedding/label count mismatch"));
    }
    if r_values.is_empty() {
        return Err(Error::invalid("at least one R value is required"));
    }
    for &r in r_values {
        if r == 0 || r >= n {
            return Err(Error::invalid(format!(
                "R must satisfy 0 < R < {n}, got {r}"
            )));
        }
    }
    let dim = embeddings[0].len();
    if embeddings.iter().any(|e| e.len() != dim) {
        return Err(Error::invalid("embeddings disagree in dimension"));
    }

    let max_r = *r_values.iter().max().expect("nonempty");
    let mut hits: BTreeMap<usize, usize> = r_values.iter().map(|&r| (r, 0)).collect();
    let mut candidates: Vec<(S, usize)> = Vec::with_capacity(n - 1);
    for q in 0..n {
        candidates.clear();
        for j in 0..n {
            if j != q {
                candidates.push((squared_distance(&embeddings[q], &embeddings[j]), j));
            }
        }
        let cmp = |a: &(S, usize), b: &(S, usize)| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        };
        // Partial selection of the top max_r, then an exact sort of that
        // prefix; the full-sort oracle in the tests covers the same ranking.
        if max_r < candidates.len() {
            candidates.select_nth_unstable_by(max_r - 1, cmp);
        }
        let prefix = &mut candidates[..max_r];
        prefix.sort_unstable_by(cmp);

        for (&r, count) in hits.iter_mut() {
            if prefix[..r].iter().any(|&(_, j)| labels[j] == labels[q]) {
                *count += 1;
            }
        }
    }
    Ok(hits
        .into_iter()
        .map(|(r, count)| (r, count as f64 / n as f64))
        .collect())
}

/// Lloyd's algorithm from k-means++ seeding; 10 restarts on sub-streams of
/// the seed, keeping the assignment with the lowest within-cluster sum of
/// squares. Converges when no centroid moves more than 1e-6, or after 300
/// iterations.
pub fn kmeans<S: Scalar>(embeddings: &[Vec<S>], k: usize, seed: u64) -> Result<Vec<usize>> {
    const RESTARTS: u64 = 10;
    const MAX_ITERATIONS: usize = 300;

    let n = embeddings.len();
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if k > n {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the number of samples {n}"
        )));
    }
    let tol_sq = from_f64::<S>(1e-6 * 1e-6);

    let mut best: Option<(S, Vec<usize>)> = None;
    for restart in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart);
        let mut centroids = kmeans_pp_init(embeddings, k, &mut rng);
        let mut assignment = vec![0usize; n];
        for _ in 0..MAX_ITERATIONS {
            for (i, e) in embeddings.iter().enumerate() {
                assignment[i] = nearest_centroid(e, &centroids);
            }
            let mut moved = S::zero();
            for (c, centroid) in centroids.iter_mut().enumerate() {
                let members: Vec<usize> =
                    (0..n).filter(|&i| assignment[i] == c).collect();
                if members.is_empty() {
                    continue; // keep the previous centroid
                }
                let inv = S::one() / from_f64::<S>(members.len() as f64);
                let mut mean = vec![S::zero(); centroid.len()];
                for &i in &members {
                    for (m, &v) in mean.iter_mut().zip(&embeddings[i]) {
                        *m += v;
                    }
                }
                for m in mean.iter_mut() {
                    *m *= inv;
                }
                moved = moved.max(squared_distance(&mean, centroid));
                *centroid = mean;
            }
            if moved < tol_sq {
                break;
            }
        }
        for (i, e) in embeddings.iter().enumerate() {
            assignment[i] = nearest_centroid(e, &centroids);
        }
        let inertia = (0..n)
            .map(|i| squared_distance(&embeddings[i], &centroids[assignment[i]]))
            .fold(S::zero(), |acc, d| acc + d);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, assignment.clone()));
        }
    }
    Ok(best.expect("at least one restart").1)
}

fn nearest_centroid<S: Scalar>(point: &[S], centroids: &[Vec<S>]) -> usize {
    let mut best = 0usize;
    let mut best_dist = squared_distance(point, &centroids[0]);
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let d = squared_distance(point, centroid);
        if d < best_dist {
            best = c;
            best_dist = d;
        }
    }
    best
}

/// k-means++ seeding: first centroid uniform, then proportional to the
/// squared distance to the nearest chosen centroid. If every remaining
/// point coincides with a centroid, the lowest-index unchosen point is
/// taken, keeping the draw deterministic.
fn kmeans_pp_init<S: Scalar>(
    embeddings: &[Vec<S>],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<S>> {
    let n = embeddings.len();
    let mut chosen_idx = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    chosen_idx.push(first);
    let mut dist_sq: Vec<S> = embeddings
        .iter()
        .map(|e| squared_distance(e, &embeddings[first]))
        .collect();
    while chosen_idx.len() < k {
        let total = dist_sq.iter().fold(S::zero(), |acc, &d| acc + d);
        let next = if total > S::zero() {
            let threshold = from_f64::<S>(rng.random::<f64>()) * total;
            let mut acc = S::zero();
            let mut picked = n - 1;
            for (i, &d) in dist_sq.iter().enumerate() {
                acc += d;
                if acc > threshold {
                    picked = i;
                    break;
                }
            }
            picked
        } else {
            (0..n)
                .find(|i| !chosen_idx.contains(i))
                .expect("k <= n leaves an unchosen point")
        };
        chosen_idx.push(next);
        for (d, e) in dist_sq.iter_mut().zip(embeddings) {
            let nd = squared_distance(e, &embeddings[next]);
            if nd < *d {
                *d = nd;
            }
        }
    }
    chosen_idx
        .into_iter()
        .map(|i| embeddings[i].clone())
        .collect()
}

/// Mutual information between two partitions, normalized by the arithmetic
/// mean of their entropies; 1.0 when both partitions are single-cluster.
pub fn nmi(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid("partition length mismatch"));
    }
    if predicted.is_empty() {
        return Err(Error::invalid("partitions must be nonempty"));
    }
    let n = predicted.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut count_p: BTreeMap<usize, usize> = BTreeMap::new();
    let mut count_t: BTreeMap<usize, usize> = BTreeMap::new();
    for (&p, &t) in predicted.iter().zip(truth) {
        *joint.entry((p, t)).or_insert(0) += 1;
        *count_p.entry(p).or_insert(0) += 1;
        *count_t.entry(t).or_insert(0) += 1;
    }
    let entropy = |counts: &BTreeMap<usize, usize>| -> f64 {
        counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_p = entropy(&count_p);
    let h_t = entropy(&count_t);
    if h_p + h_t == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (&(p, t), &c) in &joint {
        let p_joint = c as f64 / n;
        let p_p = count_p[&p] as f64 / n;
        let p_t = count_t[&t] as f64 / n;
        mi += p_joint * (p_joint / (p_p * p_t)).ln();
    }
    Ok((2.0 * mi / (h_p + h_t)).clamp(0.0, 1.0))
}

/// Precision/recall of the predicate "same predicted cluster" against
/// "same true class" over all unordered sample pairs; F1 is their harmonic
/// mean, 0 when both are 0.
pub fn pairwise_f1(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid("partition length mismatch"));
    }
    if predicted.len() < 2 {
        return Err(Error::invalid("pairwise F1 needs at least two samples"));
    }
    let mut joint: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut count_p: BTreeMap<usize, u64> = BTreeMap::new();
    let mut count_t: BTreeMap<usize, u64> = BTreeMap::new();
    for (&p, &t) in predicted.iter().zip(truth) {
        *joint.entry((p, t)).or_insert(0) += 1;
        *count_p.entry(p).or_insert(0) += 1;
        *count_t.entry(t).or_insert(0) += 1;
    }
    let pairs = |c: u64| c * (c - 1) / 2;
    let true_positive: u64 = joint.values().map(|&c| pairs(c)).sum();
    let predicted_positive: u64 = count_p.values().map(|&c| pairs(c)).sum();
    let actual_positive: u64 = count_t.values().map(|&c| pairs(c)).sum();
    let precision = if predicted_positive > 0 {
        true_positive as f64 / predicted_positive as f64
    } else {
        0.0
    };
    let recall = if actual_positive > 0 {
        true_positive as f64 / actual_positive as f64
    } else {
        0.0
    };
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Full evaluation: Recall@R for every requested R, then k-means clustering
/// (k defaults to the number of distinct true classes) scored by NMI and
/// pairwise F1.
pub fn evaluate<S: Scalar>(
    embeddings: &[Vec<S>],
    labels: &[usize],
    r_values: &[usize],
    k: Option<usize>,
    seed: u64,
) -> Result<MetricReport> {
    let recall = recall_at_r(embeddings, labels, r_values)?;
    let k_used = match k {
        Some(k) => k,
        None => {
            let distinct: std::collections::BTreeSet<usize> = labels.iter().copied().collect();
            distinct.len()
        }
    };
    let assignment = kmeans(embeddings, k_used, seed)?;
    let nmi_score = nmi(&assignment, labels)?;
    let f1_score = pairwise_f1(&assignment, labels)?;
    Ok(MetricReport {
        recall_at: recall,
        nmi: nmi_score,
        f1: f1_score,
        k_used,
        num_queries: embeddings.len(),
    })
}
