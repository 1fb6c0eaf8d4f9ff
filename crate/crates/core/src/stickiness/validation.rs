//! Hold-out evaluation: stratified splitting and the Brier score.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    /// Indices into the input, ascending.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits indices so each outcome class contributes `round(n_class *
/// test_fraction)` rows to the test set. Deterministic per seed.
pub fn stratified_split(outcomes: &[bool], test_fraction: f64, seed: u64) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Stratification(format!(
            "test fraction {test_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..outcomes.len()).filter(|&i| outcomes[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {} has {} row(s); at least 2 are required",
                u8::from(class),
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let k = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Mean squared error of probabilistic predictions against 0/1 outcomes.
pub fn brier_score(predictions: &[f64], outcomes: &[u8]) -> Result<f64> {
    if predictions.len() != outcomes.len() {
        return Err(Error::Shape { expected: predictions.len(), actual: outcomes.len() });
    }
    if predictions.is_empty() {
        return Err(Error::InsufficientData("brier score of no predictions".into()));
    }
    let mut sum = 0.0;
    for (&p, &o) in predictions.iter().zip(outcomes) {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("prediction {p} outside [0, 1]")));
        }
        if o > 1 {
            return Err(Error::domain(format!("outcome {o} is not 0 or 1")));
        }
        sum += (p - o as f64).powi(2);
    }
    Ok(sum / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(accepts: usize, rejects: usize) -> Vec<bool> {
        // interleave so class membership is not positional
        let mut v: Vec<bool> = (0..accepts).map(|_| true).chain((0..rejects).map(|_| false)).collect();
        v.rotate_left(accepts / 3);
        v
    }

    #[test]
    fn split_counts_follow_class_sizes() {
        let y = corpus(700, 300);
        let s = stratified_split(&y, 0.3, 1).unwrap();
        let test_accepts = s.test.iter().filter(|&&i| y[i]).count();
        assert_eq!(test_accepts, 210);
        assert_eq!(s.test.len() - test_accepts, 90);
        assert_eq!(s.train.len() + s.test.len(), 1000);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let y = corpus(700, 300);
        assert_eq!(stratified_split(&y, 0.3, 5).unwrap(), stratified_split(&y, 0.3, 5).unwrap());
        let a = stratified_split(&y, 0.3, 5).unwrap();
        let b = stratified_split(&y, 0.3, 6).unwrap();
        assert_ne!(a.test, b.test);
        let ratio = |s: &Split| s.test.iter().filter(|&&i| y[i]).count();
        assert_eq!(ratio(&a), ratio(&b));
    }

    #[test]
    fn tiny_class_is_rejected() {
        let mut y = vec![true; 50];
        y[3] = false;
        assert!(matches!(stratified_split(&y, 0.3, 1), Err(Error::Stratification(_))));
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier_score(&[1.0, 0.0], &[1, 0]).unwrap(), 0.0);
        assert_eq!(brier_score(&[0.5; 4], &[1, 0, 0, 1]).unwrap(), 0.25);
        assert!((brier_score(&[0.8, 0.3], &[1, 0]).unwrap() - 0.065).abs() < 1e-15);
        assert!(brier_score(&[1.2], &[1]).is_err());
        assert!(brier_score(&[0.2], &[1, 0]).is_err());
    }

    proptest! {
        #[test]
        fn brier_label_flip_symmetry(pairs in proptest::collection::vec((0.0f64..=1.0, 0u8..2), 1..50)) {
            let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
            let o: Vec<u8> = pairs.iter().map(|x| x.1).collect();
            let pf: Vec<f64> = p.iter().map(|x| 1.0 - x).collect();
            let of: Vec<u8> = o.iter().map(|x| 1 - x).collect();
            prop_assert!((brier_score(&p, &o).unwrap() - brier_score(&pf, &of).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn split_preserves_class_ratio(accepts in 200usize..3000, rejects in 200usize..3000, seed in 0u64..100) {
            let y = corpus(accepts, rejects);
            let s = stratified_split(&y, 0.3, seed).unwrap();
            let overall = accepts as f64 / (accepts + rejects) as f64;
            let rate = |idx: &[usize]| idx.iter().filter(|&&i| y[i]).count() as f64 / idx.len() as f64;
            prop_assert!((rate(&s.test) - overall).abs() <= 0.005);
            prop_assert!((rate(&s.train) - overall).abs() <= 0.005);
        }
    }
}
