//! Content-grouped k-fold partitions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::provenance::config_hash;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fold {
    /// Item indices.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Sources whose items form the test set.
    pub test_sources: Vec<String>,
}

/// Splits items into `k` folds such that all items of one source land in
/// the same test fold. Sources are sorted, shuffled with `seed`, and dealt
/// into `k` groups whose sizes differ by at most one.
pub fn kfold_splits(sources: &[String], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k}, need at least 2")));
    }
    let mut distinct: Vec<&String> = sources.iter().collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} distinct sources for {k} folds",
            distinct.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    distinct.shuffle(&mut rng);
    let (base, extra) = (distinct.len() / k, distinct.len() % k);
    let mut groups = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut g: Vec<String> = distinct[at..at + size].iter().map(|s| s.to_string()).collect();
        g.sort();
        groups.push(g);
        at += size;
    }
    Ok(groups
        .into_iter()
        .map(|g| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..sources.len()).partition(|&i| g.binary_search(&sources[i]).is_ok());
            Fold {
                train,
                test,
                test_sources: g,
            }
        })
        .collect())
}

/// Hash identifying a fold definition.
pub fn fold_hash(folds: &[Fold]) -> String {
    let groups: Vec<&Vec<String>> = folds.iter().map(|f| &f.test_sources).collect();
    config_hash(&groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn items(sources: usize, per: usize) -> Vec<String> {
        (0..sources)
            .flat_map(|s| std::iter::repeat_n(format!("m{s:02}"), per))
            .collect()
    }

    #[test]
    fn forty_sources_five_folds() {
        let it = items(40, 28);
        let folds = kfold_splits(&it, 5, 1).unwrap();
        for f in &folds {
            assert_eq!(f.test_sources.len(), 8);
            assert_eq!(f.test.len(), 224);
            assert_eq!(f.train.len(), 1120 - 224);
        }
    }

    #[test]
    fn two_sources_two_folds() {
        let it = items(2, 3);
        let folds = kfold_splits(&it, 2, 9).unwrap();
        for f in &folds {
            assert_eq!(f.test_sources.len(), 1);
            assert!(f.test.iter().all(|&i| it[i] == f.test_sources[0]));
        }
    }

    #[test]
    fn errors_and_determinism() {
        assert!(kfold_splits(&items(3, 2), 4, 0).is_err());
        assert!(kfold_splits(&items(3, 2), 1, 0).is_err());
        let it = items(10, 4);
        assert_eq!(kfold_splits(&it, 3, 5).unwrap(), kfold_splits(&it, 3, 5).unwrap());
        assert_eq!(
            fold_hash(&kfold_splits(&it, 3, 5).unwrap()),
            fold_hash(&kfold_splits(&it, 3, 5).unwrap())
        );
    }

    proptest! {
        #[test]
        fn partition_properties(
            raw in prop::collection::vec(0u8..12, 1..120),
            k in 2usize..6,
            seed in any::<u64>(),
        ) {
            let src: Vec<String> = raw.iter().map(|s| format!("s{s}")).collect();
            let mut d = src.clone();
            d.sort();
            d.dedup();
            let res = kfold_splits(&src, k, seed);
            if d.len() < k {
                prop_assert!(res.is_err());
                return Ok(());
            }
            let folds = res.unwrap();
            let mut seen = vec![0usize; src.len()];
            for f in &folds {
                for &i in &f.test {
                    seen[i] += 1;
                }
                prop_assert_eq!(f.test.len() + f.train.len(), src.len());
                for &i in &f.train {
                    prop_assert!(!f.test_sources.contains(&src[i]));
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let sizes: Vec<usize> = folds.iter().map(|f| f.test_sources.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
