use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Test indices of each fold.
///
/// Indices are shuffled with a seeded generator and cut into contiguous
/// blocks, the first `n % k` blocks one larger. With `labels`, each class is
/// shuffled on its own and dealt round-robin so folds keep the class mix.
pub fn fold_indices(n: usize, k: usize, seed: u64, labels: Option<&[bool]>) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::Config(format!("{n} rows cannot fill {k} folds")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    match labels {
        None => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let mut at = 0;
            for (f, fold) in folds.iter_mut().enumerate() {
                let size = n / k + usize::from(f < n % k);
                fold.extend_from_slice(&perm[at..at + size]);
                at += size;
            }
        }
        Some(y) => {
            if y.len() != n {
                return Err(Error::Validation(format!("{} labels for {n} rows", y.len())));
            }
            let mut pos: Vec<usize> = (0..n).filter(|&i| y[i]).collect();
            let mut neg: Vec<usize> = (0..n).filter(|&i| !y[i]).collect();
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            for (slot, i) in pos.into_iter().chain(neg).enumerate() {
                folds[slot % k].push(i);
            }
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Train/test pairs, one per fold.
pub fn splits(folds: &[Vec<usize>]) -> Vec<Split> {
    (0..folds.len())
        .map(|f| {
            let mut train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            train.sort_unstable();
            Split {
                train,
                test: folds[f].clone(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_rows_five_folds() {
        let folds = fold_indices(10, 5, 3, None).unwrap();
        assert!(folds.iter().all(|f| f.len() == 2));
        for s in splits(&folds) {
            assert_eq!(s.train.len(), 8);
            assert!(s.test.iter().all(|i| !s.train.contains(i)));
        }
    }

    #[test]
    fn remainder_goes_to_first_folds() {
        let sizes: Vec<usize> = fold_indices(12, 5, 0, None).unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 2, 2, 2]);
    }

    #[test]
    fn stratified_folds_keep_class_mix() {
        let y: Vec<bool> = (0..50).map(|i| i % 5 == 0).collect();
        for f in fold_indices(50, 5, 1, Some(&y)).unwrap() {
            assert_eq!(f.iter().filter(|&&i| y[i]).count(), 2);
        }
    }

    #[test]
    fn too_few_rows() {
        assert!(fold_indices(3, 5, 0, None).is_err());
    }
}
