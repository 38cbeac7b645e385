//! Grouped k-fold benchmark of zero-shot or SVR-refined scores against MOS.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::kfold::{fold_hash, kfold_splits};
use super::metrics::{correlation_metrics, Metrics};
use super::svr::{svr_predict, svr_train, SvrParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub id: String,
    pub source: String,
    pub mos: f64,
    /// Sub-scores used as SVR features.
    pub features: Vec<f64>,
    /// Zero-shot score.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[serde(rename = "zeroshot")]
    ZeroShot,
    Svr,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zeroshot" | "zero-shot" => Ok(Method::ZeroShot),
            "svr" => Ok(Method::Svr),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_sources: Vec<String>,
    pub train_size: usize,
    pub test_size: usize,
    /// False in zero-shot mode.
    pub trained: bool,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub method: Method,
    pub k: usize,
    pub seed: u64,
    pub items: usize,
    pub srcc: f64,
    pub plcc: f64,
    pub krcc: f64,
    pub rmse: f64,
    pub folds: Vec<FoldReport>,
    pub fold_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svr: Option<SvrParams>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

pub fn run_benchmark(
    items: &[BenchmarkItem],
    method: Method,
    k: usize,
    seed: u64,
    svr: &SvrParams,
) -> Result<BenchmarkReport> {
    if items.is_empty() {
        return Err(Error::Empty("benchmark items"));
    }
    if let Some(bad) = items.iter().find(|i| !i.mos.is_finite()) {
        return Err(Error::InvalidArgument(format!("item {} has no usable MOS", bad.id)));
    }
    let sources: Vec<String> = items.iter().map(|i| i.source.clone()).collect();
    let folds = kfold_splits(&sources, k, seed)?;
    let reports: Vec<FoldReport> = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let mos: Vec<f64> = fold.test.iter().map(|&i| items[i].mos).collect();
            let pred = match method {
                Method::ZeroShot => fold.test.iter().map(|&i| items[i].score).collect(),
                Method::Svr => {
                    let x: Vec<Vec<f64>> =
                        fold.train.iter().map(|&i| items[i].features.clone()).collect();
                    let y: Vec<f64> = fold.train.iter().map(|&i| items[i].mos).collect();
                    let model = svr_train(&x, &y, svr)?;
                    let t: Vec<Vec<f64>> =
                        fold.test.iter().map(|&i| items[i].features.clone()).collect();
                    svr_predict(&model, &t)?
                }
            };
            Ok(FoldReport {
                fold: f,
                test_sources: fold.test_sources.clone(),
                train_size: fold.train.len(),
                test_size: fold.test.len(),
                trained: method == Method::Svr,
                metrics: correlation_metrics(&pred, &mos)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BenchmarkReport {
        method,
        k,
        seed,
        items: items.len(),
        srcc: mean(reports.iter().map(|r| r.metrics.srcc)),
        plcc: mean(reports.iter().map(|r| r.metrics.plcc)),
        krcc: mean(reports.iter().map(|r| r.metrics.krcc)),
        rmse: mean(reports.iter().map(|r| r.metrics.rmse)),
        fold_hash: fold_hash(&folds),
        folds: reports,
        svr: (method == Method::Svr).then_some(*svr),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(score_is_mos: bool) -> Vec<BenchmarkItem> {
        (0..10)
            .flat_map(|s| {
                (0..8).map(move |d| {
                    let mos = 5.0 - 0.5 * d as f64 + 0.13 * s as f64 * (d % 3) as f64 / 3.0;
                    BenchmarkItem {
                        id: format!("m{s}_{d}"),
                        source: format!("m{s}"),
                        mos,
                        features: vec![mos * 0.1, (mos * 0.7).sin(), d as f64],
                        score: if score_is_mos { mos } else { 0.0 },
                    }
                })
            })
            .collect()
    }

    #[test]
    fn perfect_predictions_every_fold() {
        let r = run_benchmark(&items(true), Method::ZeroShot, 5, 3, &SvrParams::default()).unwrap();
        assert_eq!(r.folds.len(), 5);
        for f in &r.folds {
            assert_eq!(f.metrics.srcc, 1.0);
            assert!((f.metrics.plcc - 1.0).abs() < 1e-9);
            assert!(f.metrics.rmse < 1e-6);
            assert!(!f.trained);
        }
    }

    #[test]
    fn svr_mode_trains_and_stays_in_range() {
        let r = run_benchmark(&items(false), Method::Svr, 5, 3, &SvrParams::default()).unwrap();
        for f in &r.folds {
            assert!(f.trained);
            assert!((-1.0..=1.0).contains(&f.metrics.srcc));
            assert!(f.metrics.rmse >= 0.0);
        }
        assert!(r.srcc > 0.8, "{}", r.srcc);
        assert!(r.svr.is_some());
    }

    #[test]
    fn missing_mos_rejected() {
        let mut it = items(true);
        it[3].mos = f64::NAN;
        assert!(run_benchmark(&it, Method::ZeroShot, 5, 0, &SvrParams::default()).is_err());
        assert_eq!("zero-shot".parse::<Method>().unwrap(), Method::ZeroShot);
    }
}
