//! Labeled datasets and the two mini-batch regimes: disjoint triplets and
//! N-pair tuplet batches.
//!
//! All sampling is driven by a seeded ChaCha8 generator (`rand_chacha`), so
//! identical `(dataset, parameters, seed)` produce identical batches on every
//! platform. Samplers own their generator; one instance is single-consumer,
//! independent instances with distinct seeds may run concurrently.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Triplet;
use crate::scalar::Scalar;
use crate::vecmath;

/// An ordered list of `(vector, label)` samples with an inverted class index.
#[derive(Debug, Clone)]
pub struct LabeledDataset<S> {
    vectors: Vec<Vec<S>>,
    labels: Vec<usize>,
    dim: usize,
    class_index: BTreeMap<usize, Vec<usize>>,
}

impl<S: Scalar> LabeledDataset<S> {
    pub fn new(samples: Vec<(Vec<S>, usize)>) -> Result<Self> {
        let (vectors, labels): (Vec<_>, Vec<_>) = samples.into_iter().unzip();
        Self::from_parts(vectors, labels)
    }

    pub fn from_parts(vectors: Vec<Vec<S>>, labels: Vec<usize>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::invalid("dataset must contain at least one sample"));
        }
        if vectors.len() != labels.len() {
            return Err(Error::invalid(format!(
                "vector/label count mismatch: {} vs {}",
                vectors.len(),
                labels.len()
            )));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::invalid("dataset vectors must have dimension >= 1"));
        }
        let mut class_index: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, (v, &label)) in vectors.iter().zip(&labels).enumerate() {
            if v.len() != dim {
                return Err(Error::invalid(format!(
                    "sample {i} has dimension {} but the dataset has dimension {dim}",
                    v.len()
                )));
            }
            if !vecmath::is_finite(v) {
                return Err(Error::invalid(format!(
                    "sample {i} contains non-finite components"
                )));
            }
            class_index.entry(label).or_default().push(i);
        }
        Ok(Self {
            vectors,
            labels,
            dim,
            class_index,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, index: usize) -> &[S] {
        &self.vectors[index]
    }

    pub fn vectors(&self) -> &[Vec<S>] {
        &self.vectors
    }

    pub fn label(&self, index: usize) -> usize {
        self.labels[index]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.class_index.len()
    }

    /// Class labels in ascending order.
    pub fn class_labels(&self) -> Vec<usize> {
        self.class_index.keys().copied().collect()
    }

    /// Sample positions of one class, in dataset order.
    pub fn class_members(&self, label: usize) -> Option<&[usize]> {
        self.class_index.get(&label).map(|v| v.as_slice())
    }

    /// Labels of classes holding at least `min` samples, ascending.
    pub fn classes_with_at_least(&self, min: usize) -> Vec<usize> {
        self.class_index
            .iter()
            .filter(|(_, members)| members.len() >= min)
            .map(|(&label, _)| label)
            .collect()
    }
}

/// `N` samples arranged as `N/2` class-disjoint pairs. Slots `2k` and
/// `2k + 1` hold the k-th pair; every slot anchors exactly one tuplet whose
/// positive is its pair partner and whose negatives are the `N − 2` samples
/// with a different label.
#[derive(Debug, Clone)]
pub struct NPairBatch<S> {
    vectors: Vec<Vec<S>>,
    labels: Vec<usize>,
    /// Originating dataset positions, slot-aligned.
    positions: Vec<usize>,
}

impl<S: Scalar> NPairBatch<S> {
    /// Builds a batch from `(anchor_position, positive_position)` pairs of
    /// dataset indices and validates every batch invariant.
    pub fn from_dataset(data: &LabeledDataset<S>, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut vectors = Vec::with_capacity(pairs.len() * 2);
        let mut labels = Vec::with_capacity(pairs.len() * 2);
        let mut positions = Vec::with_capacity(pairs.len() * 2);
        for &(a, p) in pairs {
            if a >= data.len() || p >= data.len() {
                return Err(Error::invalid(format!(
                    "pair position out of range: ({a}, {p}) with {} samples",
                    data.len()
                )));
            }
            vectors.push(data.vector(a).to_vec());
            vectors.push(data.vector(p).to_vec());
            labels.push(data.label(a));
            labels.push(data.label(p));
            positions.push(a);
            positions.push(p);
        }
        let batch = Self {
            vectors,
            labels,
            positions,
        };
        batch.validate()?;
        Ok(batch)
    }

    /// Re-checks every invariant: even size of at least 4, equal dimensions,
    /// matching labels within pairs, pairwise-distinct labels across pairs,
    /// distinct dataset positions within pairs.
    pub fn validate(&self) -> Result<()> {
        let n = self.vectors.len();
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "an N-pair batch needs an even size of at least 4, got {n}"
            )));
        }
        if self.labels.len() != n || self.positions.len() != n {
            return Err(Error::invalid("batch slot arrays disagree in length"));
        }
        let dim = self.vectors[0].len();
        let mut seen_labels = BTreeMap::new();
        for k in 0..n / 2 {
            let (a, p) = (2 * k, 2 * k + 1);
            if self.vectors[a].len() != dim || self.vectors[p].len() != dim {
                return Err(Error::invalid("batch vectors disagree in dimension"));
            }
            if !vecmath::is_finite(&self.vectors[a]) || !vecmath::is_finite(&self.vectors[p]) {
                return Err(Error::invalid("batch vectors must be finite"));
            }
            if self.labels[a] != self.labels[p] {
                return Err(Error::invalid(format!(
                    "pair {k} mixes labels {} and {}",
                    self.labels[a], self.labels[p]
                )));
            }
            if self.positions[a] == self.positions[p] {
                return Err(Error::invalid(format!(
                    "pair {k} uses dataset position {} twice",
                    self.positions[a]
                )));
            }
            if seen_labels.insert(self.labels[a], k).is_some() {
                return Err(Error::invalid(format!(
                    "label {} appears in more than one pair",
                    self.labels[a]
                )));
            }
        }
        Ok(())
    }

    /// Number of samples `N`.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn num_pairs(&self) -> usize {
        self.vectors.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vector(&self, slot: usize) -> &[S] {
        &self.vectors[slot]
    }

    pub fn vectors(&self) -> &[Vec<S>] {
        &self.vectors
    }

    pub fn label(&self, slot: usize) -> usize {
        self.labels[slot]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Dataset positions backing each slot.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// The `N` anchor tuplets as `(anchor_slot, positive_slot)`.
    pub fn tuplets(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_pairs()).flat_map(|k| [(2 * k, 2 * k + 1), (2 * k + 1, 2 * k)])
    }

    /// Slots whose label differs from the anchor's, ascending.
    pub fn negative_slots(&self, anchor_slot: usize) -> Vec<usize> {
        let label = self.labels[anchor_slot];
        (0..self.len()).filter(|&s| self.labels[s] != label).collect()
    }

    /// Overwrites slot vectors in place without re-validation; for the
    /// gradient-check hot loop, where perturbations keep the batch valid.
    pub(crate) fn copy_vectors_from(&mut self, vectors: &[Vec<S>]) {
        debug_assert_eq!(vectors.len(), self.vectors.len());
        for (dst, src) in self.vectors.iter_mut().zip(vectors) {
            dst.copy_from_slice(src);
        }
    }

    /// Same batch structure over new per-slot vectors (e.g. encoder outputs).
    pub fn with_vectors(&self, vectors: Vec<Vec<S>>) -> Result<Self> {
        if vectors.len() != self.vectors.len() {
            return Err(Error::invalid(format!(
                "replacement vector count {} does not match batch size {}",
                vectors.len(),
                self.vectors.len()
            )));
        }
        let batch = Self {
            vectors,
            labels: self.labels.clone(),
            positions: self.positions.clone(),
        };
        batch.validate()?;
        Ok(batch)
    }
}

/// Draws independent `(anchor, positive, negative)` triplets with
/// `label(a) = label(p) ≠ label(n)` and `a ≠ p` as dataset positions.
pub struct TripletSampler<'a, S> {
    data: &'a LabeledDataset<S>,
    rng: ChaCha8Rng,
    /// Classes holding at least two samples, ascending.
    anchor_classes: Vec<usize>,
}

impl<'a, S: Scalar> TripletSampler<'a, S> {
    pub fn new(data: &'a LabeledDataset<S>, seed: u64) -> Result<Self> {
        Self::with_rng(data, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(data: &'a LabeledDataset<S>, rng: ChaCha8Rng) -> Result<Self> {
        if data.num_classes() < 2 {
            return Err(Error::sampling(
                "triplet sampling needs at least two classes",
            ));
        }
        let anchor_classes = data.classes_with_at_least(2);
        if anchor_classes.is_empty() {
            return Err(Error::sampling(
                "triplet sampling needs a class with at least two samples",
            ));
        }
        Ok(Self {
            data,
            rng,
            anchor_classes,
        })
    }

    /// One triplet: uniform anchor class among the eligible ones, two
    /// distinct members, then a uniform negative among all samples of any
    /// other class.
    pub fn sample_triplet(&mut self) -> Triplet<S> {
        let class = self.anchor_classes[self.rng.random_range(0..self.anchor_classes.len())];
        let members = self.data.class_members(class).expect("class exists");
        let (a, p) = draw_distinct_pair(&mut self.rng, members);

        let outside = self.data.len() - members.len();
        debug_assert!(outside > 0, "checked at construction: >= 2 classes");
        let pick = self.rng.random_range(0..outside);
        let negative = nth_position_excluding(self.data.len(), members, pick);

        Triplet::new(
            self.data.vector(a).to_vec(),
            self.data.vector(p).to_vec(),
            self.data.vector(negative).to_vec(),
        )
        .expect("dataset invariants guarantee a valid triplet")
    }

    pub fn sample(&mut self, count: usize) -> Vec<Triplet<S>> {
        (0..count).map(|_| self.sample_triplet()).collect()
    }
}

/// Draws N-pair batches: `n/2` distinct classes without replacement, two
/// distinct samples from each.
pub struct NPairSampler<'a, S> {
    data: &'a LabeledDataset<S>,
    rng: ChaCha8Rng,
    /// Classes holding at least two samples, ascending.
    eligible: Vec<usize>,
}

impl<'a, S: Scalar> NPairSampler<'a, S> {
    pub fn new(data: &'a LabeledDataset<S>, seed: u64) -> Self {
        Self::with_rng(data, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(data: &'a LabeledDataset<S>, rng: ChaCha8Rng) -> Self {
        let eligible = data.classes_with_at_least(2);
        Self { data, rng, eligible }
    }

    pub fn sample(&mut self, n: usize) -> Result<NPairBatch<S>> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "N-pair batch size must be even and at least 4, got {n}"
            )));
        }
        let wanted = n / 2;
        if self.eligible.len() < wanted {
            return Err(Error::sampling(format!(
                "need {wanted} classes with at least two samples, found {}",
                self.eligible.len()
            )));
        }
        let mut classes = self.eligible.clone();
        let (chosen, _) = classes.partial_shuffle(&mut self.rng, wanted);
        let mut pairs = Vec::with_capacity(wanted);
        for &class in chosen.iter() {
            let members = self.data.class_members(class).expect("class exists");
            pairs.push(draw_distinct_pair(&mut self.rng, members));
        }
        NPairBatch::from_dataset(self.data, &pairs)
    }
}

/// `count` disjoint triplets, reproducible from the seed.
pub fn sample_disjoint_triplets<S: Scalar>(
    data: &LabeledDataset<S>,
    count: usize,
    seed: u64,
) -> Result<Vec<Triplet<S>>> {
    if count == 0 {
        return Err(Error::invalid("triplet count must be positive"));
    }
    Ok(TripletSampler::new(data, seed)?.sample(count))
}

/// One N-pair batch of size `n`, reproducible from the seed.
pub fn sample_npair_batch<S: Scalar>(
    data: &LabeledDataset<S>,
    n: usize,
    seed: u64,
) -> Result<NPairBatch<S>> {
    NPairSampler::new(data, seed).sample(n)
}

/// Two distinct positions drawn uniformly from `members`.
fn draw_distinct_pair(rng: &mut ChaCha8Rng, members: &[usize]) -> (usize, usize) {
    debug_assert!(members.len() >= 2);
    let first = rng.random_range(0..members.len());
    let mut second = rng.random_range(0..members.len() - 1);
    if second >= first {
        second += 1;
    }
    (members[first], members[second])
}

/// The `pick`-th position in `0..len` not contained in the sorted `excluded`.
fn nth_position_excluding(len: usize, excluded: &[usize], pick: usize) -> usize {
    let mut remaining = pick;
    let mut ex = excluded.iter().peekable();
    for pos in 0..len {
        if ex.peek() == Some(&&pos) {
            ex.next();
            continue;
        }
        if remaining == 0 {
            return pos;
        }
        remaining -= 1;
    }
    unreachable!("pick is within the complement size")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn toy_dataset(classes: usize, per_class: usize) -> LabeledDataset<f64> {
        let samples = (0..classes)
            .flat_map(|c| {
                (0..per_class).map(move |m| {
                    (
                        vec![c as f64, m as f64, c as f64 * 0.5],
                        c,
                    )
                })
            })
            .collect();
        LabeledDataset::new(samples).unwrap()
    }

    #[test]
    fn dataset_validates_inputs() {
        assert!(LabeledDataset::<f64>::new(vec![]).is_err());
        assert!(LabeledDataset::new(vec![(vec![1.0], 0), (vec![1.0, 2.0], 1)]).is_err());
        assert!(LabeledDataset::new(vec![(vec![f64::NAN], 0)]).is_err());
    }

    #[test]
    fn class_index_inverts_label_column() {
        let data = toy_dataset(3, 4);
        for (label, members) in data.class_labels().iter().map(|&l| (l, data.class_members(l).unwrap())) {
            for &m in members {
                assert_eq!(data.label(m), label);
            }
        }
        let total: usize = data
            .class_labels()
            .iter()
            .map(|&l| data.class_members(l).unwrap().len())
            .sum();
        assert_eq!(total, data.len());
    }

    #[test]
    fn disjoint_triplets_satisfy_label_constraints() {
        let data = toy_dataset(2, 2);
        let triplets = sample_disjoint_triplets(&data, 1, 42).unwrap();
        assert_eq!(triplets.len(), 1);
        // Allocate labels back by matching vectors.
        let find = |v: &[f64]| (0..data.len()).find(|&i| data.vector(i) == v).unwrap();
        for t in &triplets {
            let (a, p, n) = (find(t.anchor()), find(t.positive()), find(t.negative()));
            assert_eq!(data.label(a), data.label(p));
            assert_ne!(data.label(a), data.label(n));
            assert_ne!(a, p);
        }
    }

    #[test]
    fn single_class_dataset_cannot_be_sampled() {
        let data = toy_dataset(1, 5);
        assert!(matches!(
            sample_disjoint_triplets(&data, 3, 0),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn triplet_sampling_is_deterministic() {
        let data = toy_dataset(5, 4);
        let a = sample_disjoint_triplets(&data, 20, 123).unwrap();
        let b = sample_disjoint_triplets(&data, 20, 123).unwrap();
        assert_eq!(a, b);
        let c = sample_disjoint_triplets(&data, 20, 124).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn npair_batch_shape_and_labels() {
        let data = toy_dataset(64, 2);
        let batch = sample_npair_batch(&data, 128, 9).unwrap();
        assert_eq!(batch.len(), 128);
        assert_eq!(batch.num_pairs(), 64);
        let labels: BTreeSet<usize> = (0..batch.num_pairs()).map(|k| batch.label(2 * k)).collect();
        assert_eq!(labels.len(), 64);
        batch.validate().unwrap();
    }

    #[test]
    fn npair_rejects_odd_and_undersized_requests() {
        let data = toy_dataset(4, 3);
        assert!(matches!(
            sample_npair_batch(&data, 3, 0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            sample_npair_batch(&data, 2, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn npair_needs_enough_eligible_classes() {
        let data = toy_dataset(3, 2);
        assert!(matches!(
            sample_npair_batch(&data, 8, 0),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn npair_sampling_is_deterministic() {
        let data = toy_dataset(10, 3);
        let a = sample_npair_batch(&data, 12, 77).unwrap();
        let b = sample_npair_batch(&data, 12, 77).unwrap();
        assert_eq!(a.positions(), b.positions());
    }

    #[test]
    fn tuplet_expansion_counts() {
        let data = toy_dataset(5, 2);
        let batch = sample_npair_batch(&data, 10, 3).unwrap();
        let tuplets: Vec<_> = batch.tuplets().collect();
        assert_eq!(tuplets.len(), batch.len());
        let anchors: BTreeSet<usize> = tuplets.iter().map(|&(a, _)| a).collect();
        assert_eq!(anchors.len(), batch.len(), "every sample anchors once");
        for &(a, p) in &tuplets {
            assert_eq!(batch.label(a), batch.label(p));
            assert_eq!(batch.negative_slots(a).len(), batch.len() - 2);
        }
    }

    #[test]
    fn every_eligible_class_appears_over_many_seeds() {
        let data = toy_dataset(6, 2);
        let mut seen = BTreeSet::new();
        for seed in 0..200 {
            let batch = sample_npair_batch(&data, 4, seed).unwrap();
            for slot in 0..batch.len() {
                seen.insert(batch.label(slot));
            }
        }
        assert_eq!(seen.len(), 6, "coverage smoke test");
    }

    #[test]
    fn two_sample_classes_yield_deterministic_pairs() {
        let data = toy_dataset(2, 2);
        let batch = sample_npair_batch(&data, 4, 1).unwrap();
        for k in 0..batch.num_pairs() {
            let (a, p) = (batch.positions()[2 * k], batch.positions()[2 * k + 1]);
            assert_ne!(a, p);
        }
    }

    #[test]
    fn batch_with_vectors_replaces_payload_only() {
        let data = toy_dataset(3, 2);
        let batch = sample_npair_batch(&data, 4, 5).unwrap();
        let new_vecs: Vec<Vec<f64>> = (0..batch.len()).map(|i| vec![i as f64; 2]).collect();
        let replaced = batch.with_vectors(new_vecs).unwrap();
        assert_eq!(replaced.labels(), batch.labels());
        assert_eq!(replaced.dim(), 2);
        assert!(batch.with_vectors(vec![vec![0.0]]).is_err());
    }
}
