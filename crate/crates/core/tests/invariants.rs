use std::collections::BTreeSet;

use dhqi_core::eval::{correlation_metrics, kfold_splits, spearman};
use dhqi_core::mesh::{load_mesh, mean_scaled_dihedral, save_mesh, scaled_dihedral_angles};
use dhqi_core::synth::icosphere;
use proptest::prelude::*;

fn rotate(p: [f64; 3], (a, b): (f64, f64)) -> [f64; 3] {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let [x, y, z] = p;
    let (x, y) = (ca * x - sa * y, sa * x + ca * y);
    let (y, z) = (cb * y - sb * z, sb * y + cb * z);
    [x, y, z]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dihedral_is_similarity_invariant(
        a in -3.0..3.0f64, b in -3.0..3.0f64, s in 0.01..100.0f64,
        t in prop::array::uniform3(-50.0..50.0f64),
    ) {
        let mesh = icosphere(2);
        let base = mean_scaled_dihedral(&mesh).unwrap();
        let mut moved = mesh.clone();
        for v in &mut moved.vertices {
            let r = rotate(*v, (a, b));
            *v = [r[0] * s + t[0], r[1] * s + t[1], r[2] * s + t[2]];
        }
        prop_assert!((mean_scaled_dihedral(&moved).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn scaled_angles_are_in_unit_interval(sub in 0u32..3) {
        let set = scaled_dihedral_angles(&icosphere(sub)).unwrap();
        prop_assert!(set.angles.iter().all(|a| (0.0..=1.0).contains(a)));
    }

    #[test]
    fn folds_partition_items_by_source(
        groups in prop::collection::vec(0usize..12, 10..80), k in 2usize..6, seed: u64,
    ) {
        let sources: Vec<String> = groups.iter().map(|g| format!("s{g}")).collect();
        let distinct = sources.iter().collect::<BTreeSet<_>>().len();
        prop_assume!(distinct >= k);
        let folds = kfold_splits(&sources, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![0; sources.len()];
        for f in &folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            let train: BTreeSet<_> = f.train.iter().map(|&i| &sources[i]).collect();
            prop_assert!(f.test.iter().all(|&i| !train.contains(&sources[i])));
            prop_assert_eq!(f.train.len() + f.test.len(), sources.len());
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert_eq!(&folds, &kfold_splits(&sources, k, seed).unwrap());
    }

    #[test]
    fn rank_metrics_ignore_monotone_transforms(
        xs in prop::collection::vec(-10.0..10.0f64, 5..60), noise in prop::collection::vec(-3.0..3.0f64, 60),
    ) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, n)| x + n).collect();
        let warped: Vec<f64> = xs.iter().map(|x| (x * 0.3).exp() * 5.0 - 2.0).collect();
        let (a, b) = (correlation_metrics(&xs, &ys), correlation_metrics(&warped, &ys));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a.srcc - b.srcc).abs() < 1e-12 || (a.srcc.is_nan() && b.srcc.is_nan()));
            prop_assert!((a.krcc - b.krcc).abs() < 1e-12 || (a.krcc.is_nan() && b.krcc.is_nan()));
        }
        if let Ok(r) = spearman(&xs, &ys) {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}

#[test]
fn obj_round_trip_preserves_geometry() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = icosphere(2);
    let path = tmp.path().join("sphere.obj");
    save_mesh(&mesh, &path, Some("round trip")).unwrap();
    let (back, _) = load_mesh(&path).unwrap();
    assert_eq!(back.faces.len(), mesh.faces.len());
    assert_eq!(back.vertices.len(), mesh.vertices.len());
    for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
        for d in 0..3 {
            assert!((a[d] - b[d]).abs() < 1e-9);
        }
    }
    let (ma, mb) = (mean_scaled_dihedral(&back).unwrap(), mean_scaled_dihedral(&mesh).unwrap());
    assert!((ma - mb).abs() < 1e-9);
}
