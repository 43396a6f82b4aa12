use super::config::Sampler;
use super::logits::ProbabilityDistribution;
use super::{Result, SamplingError};

/// Vocabulary indices that survive a truncation rule, in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeepSet(Vec<usize>);

impl KeepSet {
    /// Sorts and validates a caller-supplied index set against `vocab_size`.
    pub fn new(mut indices: Vec<usize>, vocab_size: usize) -> Result<Self> {
        indices.sort_unstable();
        let before = indices.len();
        indices.dedup();
        if indices.is_empty() {
            return Err(SamplingError::InvalidConfig("keep set must be non-empty".into()));
        }
        if before != indices.len() {
            return Err(SamplingError::InvalidConfig("keep set indices must be unique".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= vocab_size) {
            return Err(SamplingError::InvalidConfig(format!(
                "keep index {bad} out of range for vocabulary of {vocab_size}"
            )));
        }
        Ok(Self(indices))
    }

    pub fn all(vocab_size: usize) -> Self {
        Self((0..vocab_size).collect())
    }

    fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        Self(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn is_subset_of(&self, other: &KeepSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }
}

/// Indices ordered by descending probability, ties by ascending index.
fn ranked(probs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    // stable sort keeps equal probabilities in index order
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    order
}

pub fn truncate_top_k(dist: &ProbabilityDistribution, k: usize) -> KeepSet {
    let n = dist.len();
    if k >= n {
        return KeepSet::all(n);
    }
    let mut order = ranked(dist.probs());
    order.truncate(k.max(1));
    KeepSet::from_unsorted(order)
}

/// Smallest descending-probability prefix whose cumulative mass reaches `p`.
pub fn truncate_top_p(dist: &ProbabilityDistribution, p: f64) -> KeepSet {
    let n = dist.len();
    if p >= 1.0 {
        return KeepSet::all(n);
    }
    let probs = dist.probs();
    let mut kept = Vec::new();
    let mut mass = 0.0;
    for i in ranked(probs) {
        kept.push(i);
        mass += probs[i];
        if mass >= p {
            break;
        }
    }
    KeepSet::from_unsorted(kept)
}

/// Keeps index `i` iff `probs[i] >= p_base * max_j probs[j]`.
pub fn truncate_min_p(dist: &ProbabilityDistribution, p_base: f64) -> KeepSet {
    let probs = dist.probs();
    let threshold = p_base * dist.max_prob();
    let kept: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] >= threshold).collect();
    if kept.is_empty() {
        // only reachable with p_base > 1, which config validation rejects
        return KeepSet(vec![dist.argmax()]);
    }
    KeepSet(kept)
}

/// Applies the truncation rule of `sampler`; basic keeps everything.
pub fn truncate(dist: &ProbabilityDistribution, sampler: &Sampler) -> KeepSet {
    match *sampler {
        Sampler::Basic => KeepSet::all(dist.len()),
        Sampler::TopK(k) => truncate_top_k(dist, k),
        Sampler::TopP(p) => truncate_top_p(dist, p),
        Sampler::MinP(p) => truncate_min_p(dist, p),
    }
}

/// Zeroes everything outside `keep` and rescales the rest to unit mass.
/// A keep set covering the whole vocabulary returns the input unchanged.
pub fn renormalize(dist: &ProbabilityDistribution, keep: &KeepSet) -> Result<ProbabilityDistribution> {
    let n = dist.len();
    if keep.indices().last().is_some_and(|&i| i >= n) {
        return Err(SamplingError::InvalidConfig("keep set exceeds vocabulary".into()));
    }
    if keep.len() == n {
        return Ok(dist.clone());
    }
    let probs = dist.probs();
    let mass: f64 = keep.indices().iter().map(|&i| probs[i]).sum();
    if mass.is_nan() || mass <= 0.0 {
        return Err(SamplingError::DegenerateKeepSet);
    }
    let mut out = vec![0.0; n];
    for &i in keep.indices() {
        out[i] = probs[i] / mass;
    }
    Ok(ProbabilityDistribution::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use crate::sampling::{stable_softmax, LogitVector};

    fn dist(p: &[f64]) -> ProbabilityDistribution {
        ProbabilityDistribution::new(p.to_vec()).unwrap()
    }

    const P4: [f64; 4] = [0.5, 0.3, 0.15, 0.05];

    /// Sort-and-take oracle.
    fn top_k_oracle(p: &[f64], k: usize) -> Vec<usize> {
        let mut pairs: Vec<(f64, usize)> = p.iter().copied().zip(0..).collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut out: Vec<usize> = pairs.into_iter().take(k).map(|(_, i)| i).collect();
        out.sort();
        out
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(truncate_top_k(&dist(&P4), 2).indices(), &top_k_oracle(&P4, 2)[..]);
        assert_eq!(truncate_top_k(&dist(&P4), 2).indices(), &[0, 1]);
        assert_eq!(truncate_top_k(&dist(&P4), 100).indices(), &[0, 1, 2, 3]);
        assert_eq!(truncate_top_k(&dist(&[0.4, 0.4, 0.2]), 1).indices(), &[0]);
        assert_eq!(truncate_top_k(&dist(&[0.2, 0.4, 0.4]), 1).indices(), &[1]);
    }

    #[test]
    fn top_p_examples() {
        assert_eq!(truncate_top_p(&dist(&P4), 0.8).indices(), &[0, 1]);
        assert_eq!(truncate_top_p(&dist(&P4), 1.0).indices(), &[0, 1, 2, 3]);
        assert_eq!(truncate_top_p(&dist(&[0.9, 0.1]), 0.05).indices(), &[0]);
        assert_eq!(truncate_top_p(&dist(&P4), 0.81).indices(), &[0, 1, 2]);
    }

    #[test]
    fn min_p_examples() {
        assert_eq!(truncate_min_p(&dist(&P4), 0.2).indices(), &[0, 1, 2]);
        assert_eq!(truncate_min_p(&dist(&P4), 1e-9).indices(), &[0, 1, 2, 3]);
        assert_eq!(truncate_min_p(&dist(&[0.25; 4]), 1.0).indices(), &[0, 1, 2, 3]);
        // inclusive at the exact threshold: 0.1 / 0.5 == 0.2
        assert_eq!(truncate_min_p(&dist(&[0.5, 0.4, 0.1]), 0.2).indices(), &[0, 1, 2]);
    }

    #[test]
    fn renormalize_examples() {
        let r = renormalize(&dist(&P4), &KeepSet::new(vec![0, 1, 2], 4).unwrap()).unwrap();
        let want = [0.5 / 0.95, 0.3 / 0.95, 0.15 / 0.95, 0.0];
        for (g, w) in r.probs().iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!((r.probs()[0] - 0.52632).abs() < 1e-5);
        assert!((r.probs()[2] - 0.15789).abs() < 1e-5);

        let d = dist(&P4);
        assert_eq!(renormalize(&d, &KeepSet::all(4)).unwrap(), d);

        let r = renormalize(&dist(&[0.9, 0.1]), &KeepSet::new(vec![0], 2).unwrap()).unwrap();
        assert_eq!(r.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn renormalize_zero_mass_keep_is_error() {
        let d = dist(&[1.0, 0.0, 0.0]);
        let keep = KeepSet::new(vec![1, 2], 3).unwrap();
        assert_eq!(renormalize(&d, &keep), Err(SamplingError::DegenerateKeepSet));
    }

    #[test]
    fn keep_set_validation() {
        assert!(KeepSet::new(vec![], 3).is_err());
        assert!(KeepSet::new(vec![1, 1], 3).is_err());
        assert!(KeepSet::new(vec![3], 3).is_err());
        assert_eq!(KeepSet::new(vec![2, 0], 3).unwrap().indices(), &[0, 2]);
    }

    fn arb_dist() -> impl Strategy<Value = ProbabilityDistribution> {
        prop::collection::vec(-20.0f64..20.0, 1..64)
            .prop_map(|v| stable_softmax(&LogitVector::new(v).unwrap()))
    }

    proptest! {
        #[test]
        fn keep_sets_contain_argmax(d in arb_dist(), k in 1usize..80, p in 1e-6f64..=1.0) {
            let am = d.argmax();
            for keep in [truncate_top_k(&d, k), truncate_top_p(&d, p), truncate_min_p(&d, p)] {
                prop_assert!(!keep.is_empty());
                prop_assert!(keep.contains(am));
                prop_assert!(keep.indices().windows(2).all(|w| w[0] < w[1]));
            }
        }

        #[test]
        fn top_k_size_and_oracle(d in arb_dist(), k in 1usize..80) {
            let keep = truncate_top_k(&d, k);
            prop_assert_eq!(keep.len(), k.min(d.len()));
            prop_assert_eq!(keep.indices(), &top_k_oracle(d.probs(), k)[..]);
        }

        #[test]
        fn min_p_shrinks_as_p_grows(d in arb_dist(), a in 1e-6f64..=1.0, b in 1e-6f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(truncate_min_p(&d, hi).is_subset_of(&truncate_min_p(&d, lo)));
        }

        #[test]
        fn top_p_grows_as_p_grows(d in arb_dist(), a in 1e-6f64..=1.0, b in 1e-6f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(truncate_top_p(&d, lo).is_subset_of(&truncate_top_p(&d, hi)));
        }

        #[test]
        fn renormalized_mass_is_one(d in arb_dist(), p in 1e-6f64..=1.0) {
            let keep = truncate_min_p(&d, p);
            let r = renormalize(&d, &keep).unwrap();
            prop_assert!((r.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for (i, &q) in r.probs().iter().enumerate() {
                prop_assert_eq!(q > 0.0, keep.contains(i) && d.probs()[i] > 0.0);
            }
        }
    }
}
