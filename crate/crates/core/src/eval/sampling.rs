use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{check_labels, Error, FeatureMatrix, Label, Result};

fn class_indices(y: &[Label]) -> (Vec<usize>, Vec<usize>) {
    (0..y.len()).partition(|&i| y[i] == 1)
}

/// Indices of a 50-50 random under-sample: the minority class whole, the
/// majority drawn without replacement, order shuffled.
pub fn rus_indices(y: &[Label], seed: u64) -> Result<Vec<usize>> {
    check_labels(y)?;
    let (pos, neg) = class_indices(y);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Resample("under-sampling needs both classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (minority, mut majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    majority.shuffle(&mut rng);
    majority.truncate(minority.len());
    let mut out = minority;
    out.extend(majority);
    out.shuffle(&mut rng);
    Ok(out)
}

pub fn random_under_sample(x: &FeatureMatrix, y: &[Label], seed: u64) -> Result<(FeatureMatrix, Vec<Label>)> {
    if x.rows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    let idx = rus_indices(y, seed)?;
    Ok((x.select_rows(&idx), idx.iter().map(|&i| y[i]).collect()))
}

/// Train and test index sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class proportional split. The test set has `ceil(fraction * S)`
/// samples: every class first gets `floor(fraction * n_c)`, the remainder goes
/// to the classes with the largest fractional parts (positive class first on
/// ties). Each class keeps at least one sample on both sides.
pub fn stratified_split(y: &[Label], test_fraction: f64, seed: u64) -> Result<Split> {
    check_labels(y)?;
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} must lie in (0, 1)"
        )));
    }
    let (pos, neg) = class_indices(y);
    for (name, c) in [("positive", &pos), ("negative", &neg)] {
        if c.len() < 2 {
            return Err(Error::Split(format!(
                "{name} class has {} samples, at least 2 are required",
                c.len()
            )));
        }
    }

    let classes = [pos, neg];
    let exact: Vec<f64> = classes.iter().map(|c| test_fraction * c.len() as f64).collect();
    let mut take: Vec<usize> = exact.iter().map(|v| v.floor() as usize).collect();
    let target = (test_fraction * y.len() as f64 - 1e-9).ceil() as usize;
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let mut remaining = target.saturating_sub(take.iter().sum());
    for &c in &order {
        if remaining > 0 && take[c] < classes[c].len() {
            take[c] += 1;
            remaining -= 1;
        }
    }
    for (t, c) in take.iter_mut().zip(&classes) {
        *t = (*t).clamp(1, c.len() - 1);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (mut members, t) in classes.into_iter().zip(take) {
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..t]);
        train.extend_from_slice(&members[t..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    fn labels(pos: usize, neg: usize) -> Vec<Label> {
        let mut y = vec![1; pos];
        y.extend(vec![-1; neg]);
        y
    }

    #[test]
    fn rus_balances_classes() {
        let y = labels(30, 70);
        let x = FeatureMatrix::new(100, 1, (0..100).map(f64::from).collect()).unwrap();
        let (xs, ys) = random_under_sample(&x, &y, 3).unwrap();
        assert_eq!(ys.iter().filter(|&&l| l == 1).count(), 30);
        assert_eq!(ys.len(), 60);
        for (r, &l) in xs.row_iter().zip(&ys) {
            // the row value is the original index
            assert_eq!(y[r[0] as usize], l);
        }
        assert_eq!(rus_indices(&y, 3).unwrap(), rus_indices(&y, 3).unwrap());
    }

    #[test]
    fn rus_on_balanced_input_is_permutation() {
        let y = labels(5, 5);
        let mut idx = rus_indices(&y, 9).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn rus_single_class() {
        assert!(matches!(rus_indices(&[1, 1], 0), Err(Error::Resample(_))));
    }

    #[test]
    fn split_sizes() {
        // 2727 images, roughly the defect ratio of the castings set
        let y = labels(1000, 1727);
        let s = stratified_split(&y, 0.2, 0).unwrap();
        assert_eq!(s.test.len(), 546);
        assert_eq!(s.train.len(), 2727 - 546);
        let s = stratified_split(&labels(5, 5), 0.5, 0).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (5, 5));
    }

    #[test]
    fn split_partitions_and_is_deterministic() {
        let y = labels(13, 29);
        for seed in 0..20 {
            let s = stratified_split(&y, 0.3, seed).unwrap();
            assert_eq!(s, stratified_split(&y, 0.3, seed).unwrap());
            let train: HashSet<_> = s.train.iter().collect();
            assert!(s.test.iter().all(|i| !train.contains(i)));
            assert_eq!(s.train.len() + s.test.len(), y.len());
        }
    }

    #[test]
    fn split_errors() {
        assert!(matches!(stratified_split(&labels(1, 5), 0.2, 0), Err(Error::Split(_))));
        assert!(matches!(stratified_split(&labels(3, 5), 1.0, 0), Err(Error::Config(_))));
    }
}
