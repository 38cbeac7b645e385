//! Mean opinion scores from raw subjective ratings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

use super::metrics::spearman;

/// Sparse subject × item ratings, kept in insertion order of subjects.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingsMatrix {
    subjects: Vec<String>,
    ratings: Vec<BTreeMap<String, f64>>,
}

impl RatingsMatrix {
    pub fn new() -> Self {
        RatingsMatrix::default()
    }

    pub fn insert(&mut self, subject: &str, item: &str, rating: f64) {
        let s = match self.subjects.iter().position(|x| x == subject) {
            Some(i) => i,
            None => {
                self.subjects.push(subject.to_string());
                self.ratings.push(BTreeMap::new());
                self.subjects.len() - 1
            }
        };
        self.ratings[s].insert(item.to_string(), rating);
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.iter().all(|r| r.is_empty())
    }

    /// Reads `subject_id,item_id,rating` rows; a header row is optional.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
        let mut m = RatingsMatrix::new();
        for (i, rec) in rdr.records().enumerate() {
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let rec = rec.map_err(|e| parse_err(e.to_string()))?;
            if rec.len() != 3 {
                return Err(parse_err(format!("expected 3 fields, got {}", rec.len())));
            }
            let rating = match rec[2].parse::<f64>() {
                Ok(r) => r,
                Err(_) if i == 0 => continue,
                Err(e) => return Err(parse_err(e.to_string())),
            };
            m.insert(&rec[0], &rec[1], rating);
        }
        Ok(m)
    }
}

/// Reads `item_id,mos` rows; a header row is optional.
pub fn read_mos_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        if rec.len() != 2 {
            return Err(parse_err(format!("expected 2 fields, got {}", rec.len())));
        }
        match rec[1].parse::<f64>() {
            Ok(v) => {
                out.insert(rec[0].to_string(), v);
            }
            Err(_) if i == 0 => continue,
            Err(e) => return Err(parse_err(e.to_string())),
        }
    }
    Ok(out)
}

/// Per-subject z-scores using the sample standard deviation.
pub fn z_scores(ratings: &RatingsMatrix) -> Result<Vec<BTreeMap<String, f64>>> {
    if ratings.is_empty() {
        return Err(Error::Empty("ratings matrix"));
    }
    let mut bad = Vec::new();
    let mut out = Vec::with_capacity(ratings.ratings.len());
    for (name, row) in ratings.subjects.iter().zip(&ratings.ratings) {
        let n = row.len();
        if n < 2 {
            bad.push(format!("{name} (fewer than 2 ratings)"));
            out.push(BTreeMap::new());
            continue;
        }
        let mu = row.values().sum::<f64>() / n as f64;
        let var = row.values().map(|r| (r - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if sd == 0.0 {
            bad.push(format!("{name} (constant ratings)"));
            out.push(BTreeMap::new());
            continue;
        }
        out.push(row.iter().map(|(k, r)| (k.clone(), (r - mu) / sd)).collect());
    }
    if !bad.is_empty() {
        return Err(Error::InsufficientData(format!(
            "cannot z-score subjects: {}",
            bad.join(", ")
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MosTable {
    pub mos: BTreeMap<String, f64>,
    /// Subjects dropped by screening.
    pub rejected: Vec<String>,
}

/// Optional panel-consistency screening: a subject is dropped when the
/// Spearman correlation between their z-scores and the panel mean over the
/// items they rated falls below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Screening {
    pub threshold: f64,
}

impl Default for Screening {
    fn default() -> Self {
        Screening { threshold: 0.5 }
    }
}

/// z-scores rescaled so the global minimum is 0 and maximum 5, averaged
/// per item.
pub fn compute_mos(ratings: &RatingsMatrix, screening: Option<Screening>) -> Result<MosTable> {
    let mut z = z_scores(ratings)?;
    let mut rejected = Vec::new();
    if let Some(s) = screening {
        let panel = item_means(&z);
        let keep: Vec<bool> = z
            .iter()
            .map(|row| {
                let (a, b): (Vec<f64>, Vec<f64>) = row.iter().map(|(k, v)| (*v, panel[k])).unzip();
                match spearman(&a, &b) {
                    Ok(r) if r.is_finite() => r >= s.threshold,
                    _ => true,
                }
            })
            .collect();
        if keep.iter().all(|k| !k) {
            return Err(Error::InsufficientData("screening rejected every subject".into()));
        }
        for (i, k) in keep.iter().enumerate().rev() {
            if !k {
                rejected.push(ratings.subjects[i].clone());
                z.remove(i);
            }
        }
        rejected.reverse();
    }
    let (lo, hi) = z
        .iter()
        .flat_map(|r| r.values())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let rescaled: Vec<BTreeMap<String, f64>> = z
        .into_iter()
        .map(|row| row.into_iter().map(|(k, v)| (k, 5.0 * (v - lo) / span)).collect())
        .collect();
    Ok(MosTable {
        mos: item_means(&rescaled),
        rejected,
    })
}

fn item_means(rows: &[BTreeMap<String, f64>]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for row in rows {
        for (k, v) in row {
            let e = acc.entry(k.clone()).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(scores: &[f64]) -> RatingsMatrix {
        let mut m = RatingsMatrix::new();
        for (i, &s) in scores.iter().enumerate() {
            m.insert("s1", &format!("i{i}"), s);
        }
        m
    }

    #[test]
    fn z_of_subject_mean_is_zero() {
        let z = z_scores(&single(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        assert_eq!(z[0]["i2"], 0.0);
        assert!((z[0]["i4"] - 2.0 / 2.5f64.sqrt()).abs() < 1e-12);
        assert!((z[0]["i4"] - 1.2649).abs() < 1e-4);
    }

    #[test]
    fn rescaled_range() {
        let mut m = single(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        for (i, s) in [2.0, 2.5, 3.0, 4.5, 4.0].iter().enumerate() {
            m.insert("s2", &format!("i{i}"), *s);
        }
        let t = compute_mos(&m, None).unwrap();
        assert!(t.mos.values().all(|v| (0.0..=5.0).contains(v)));
    }

    #[test]
    fn constant_subject_rejected() {
        let mut m = single(&[1.0, 2.0, 3.0]);
        for i in 0..3 {
            m.insert("lazy", &format!("i{i}"), 3.0);
        }
        let err = compute_mos(&m, None).unwrap_err();
        assert!(err.to_string().contains("lazy"), "{err}");
        assert!(compute_mos(&RatingsMatrix::new(), None).is_err());
    }

    #[test]
    fn scale_differences_do_not_change_ranking() {
        let mut m = RatingsMatrix::new();
        let a = [1.0, 2.0, 4.0, 3.0, 5.0];
        for (i, &s) in a.iter().enumerate() {
            m.insert("a", &format!("i{i}"), s);
            m.insert("b", &format!("i{i}"), 2.0 + 0.5 * s);
        }
        let t = compute_mos(&m, None).unwrap();
        let z = z_scores(&m).unwrap();
        for k in t.mos.keys() {
            assert!((z[0][k] - z[1][k]).abs() < 1e-12);
        }
        let mut order: Vec<_> = t.mos.iter().collect();
        order.sort_by(|x, y| x.1.total_cmp(y.1));
        let names: Vec<&str> = order.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(names, ["i0", "i1", "i3", "i2", "i4"]);
    }

    #[test]
    fn screening_drops_contrarian() {
        let mut m = RatingsMatrix::new();
        for (i, s) in [1.0, 2.0, 3.0, 4.0, 5.0].iter().enumerate() {
            m.insert("a", &format!("i{i}"), *s);
            m.insert("b", &format!("i{i}"), s + 0.1 * (i % 2) as f64);
            m.insert("c", &format!("i{i}"), 6.0 - s);
        }
        let t = compute_mos(&m, Some(Screening::default())).unwrap();
        assert_eq!(t.rejected, vec!["c".to_string()]);
    }
}
