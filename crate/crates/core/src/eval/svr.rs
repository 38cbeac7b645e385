//! ε-support vector regression with an RBF kernel, solved by sequential
//! minimal optimization with second-order working-set selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// `None` means `1 / feature dimension`.
    pub gamma: Option<f64>,
    /// KKT violation tolerance.
    pub tolerance: f64,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 100.0,
            epsilon: 0.1,
            gamma: None,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub gamma: f64,
    /// Standardized support vectors and their coefficients `α − α*`.
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (-gamma * d).exp()
}

pub fn svr_train(features: &[Vec<f64>], targets: &[f64], params: &SvrParams) -> Result<SvrModel> {
    let l = features.len();
    if l != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: targets.len(),
        });
    }
    if l < 5 {
        return Err(Error::InsufficientData(format!("{l} training samples, need 5")));
    }
    if !(params.c > 0.0) || params.epsilon < 0.0 || params.gamma.is_some_and(|g| !(g > 0.0)) {
        return Err(Error::InvalidArgument(format!("bad SVR parameters {params:?}")));
    }
    if targets.iter().all(|&t| t == targets[0]) {
        return Err(Error::Degenerate("all training targets are equal".into()));
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(Error::InvalidArgument("empty feature vectors".into()));
    }
    if let Some(bad) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let mean: Vec<f64> = (0..dim)
        .map(|d| features.iter().map(|f| f[d]).sum::<f64>() / l as f64)
        .collect();
    let scale: Vec<f64> = (0..dim)
        .map(|d| {
            let v = features.iter().map(|f| (f[d] - mean[d]).powi(2)).sum::<f64>() / l as f64;
            if v > 0.0 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let xs: Vec<Vec<f64>> = features
        .iter()
        .map(|f| (0..dim).map(|d| (f[d] - mean[d]) / scale[d]).collect())
        .collect();
    let gamma = params.gamma.unwrap_or(1.0 / dim as f64);
    let mut kernel = vec![0.0; l * l];
    for i in 0..l {
        for j in i..l {
            let k = rbf(gamma, &xs[i], &xs[j]);
            kernel[i * l + j] = k;
            kernel[j * l + i] = k;
        }
    }
    let (alpha, rho, iterations) = solve(&kernel, targets, params);
    let mut support = Vec::new();
    let mut coef = Vec::new();
    for i in 0..l {
        let c = alpha[i] - alpha[i + l];
        if c != 0.0 {
            support.push(xs[i].clone());
            coef.push(c);
        }
    }
    Ok(SvrModel {
        mean,
        scale,
        gamma,
        support,
        coef,
        rho,
        iterations,
    })
}

/// Dual solver over the `2l` variables `(α, α*)`; returns them with the
/// bias term `rho` and the iteration count.
fn solve(kernel: &[f64], z: &[f64], params: &SvrParams) -> (Vec<f64>, f64, usize) {
    let l = z.len();
    let n = 2 * l;
    let c = params.c;
    let eps = params.epsilon;
    let tau = 1e-12;
    let y = |t: usize| if t < l { 1.0 } else { -1.0 };
    let k = |a: usize, b: usize| kernel[(a % l) * l + (b % l)];
    let mut alpha = vec![0.0; n];
    let mut grad: Vec<f64> = (0..n)
        .map(|t| if t < l { eps - z[t] } else { eps + z[t - l] })
        .collect();
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;
    let max_iter = (100 * n).max(10_000_000);
    let mut iter = 0;
    while iter < max_iter {
        // select i
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            let in_up = if y(t) > 0.0 { !is_upper(alpha[t]) } else { !is_lower(alpha[t]) };
            if in_up && -y(t) * grad[t] >= gmax {
                gmax = -y(t) * grad[t];
                i_sel = t;
            }
        }
        if i_sel == usize::MAX {
            break;
        }
        let i = i_sel;
        // select j
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            let in_low = if y(t) > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let yg = y(t) * grad[t];
            gmax2 = gmax2.max(yg);
            let b = gmax + yg;
            if b > 0.0 {
                let mut a = k(i, i) + k(t, t) - 2.0 * y(i) * y(t) * k(i, t);
                if a <= 0.0 {
                    a = tau;
                }
                let obj = -(b * b) / a;
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = t;
                }
            }
        }
        if gmax + gmax2 < params.tolerance || j_sel == usize::MAX {
            break;
        }
        let j = j_sel;
        iter += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = k(i, j);
        let mut quad = k(i, i) + k(j, j) - 2.0 * kij;
        if quad <= 0.0 {
            quad = tau;
        }
        if y(i) != y(j) {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y(t) * (y(i) * k(t, i) * di + y(j) * k(t, j) * dj);
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y(t) * grad[t];
        if is_upper(alpha[t]) {
            if y(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum += yg;
            free += 1;
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
    (alpha, rho, iter)
}

impl SvrModel {
    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        let s: Vec<f64> = x
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), sd)| (v - m) / sd)
            .collect();
        let f: f64 = self
            .support
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * rbf(self.gamma, sv, &s))
            .sum();
        Ok(f - self.rho)
    }
}

pub fn svr_predict(model: &SvrModel, features: &[Vec<f64>]) -> Result<Vec<f64>> {
    features.iter().map(|f| model.predict_one(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let y = x.iter().map(|v| 1.0 + 2.0 * v[0] - v[1] + 0.5 * v[2]).collect();
        (x, y)
    }

    fn rmse(a: &[f64], b: &[f64]) -> f64 {
        (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
    }

    #[test]
    fn fits_linear_targets() {
        let (x, y) = linear_data(120, 1);
        let p = SvrParams {
            epsilon: 0.01,
            ..Default::default()
        };
        let m = svr_train(&x, &y, &p).unwrap();
        let pred = svr_predict(&m, &x).unwrap();
        assert!(rmse(&pred, &y) <= 0.05, "{}", rmse(&pred, &y));
    }

    #[test]
    fn training_points_are_interpolated() {
        let (x, y) = linear_data(40, 2);
        let p = SvrParams {
            c: 1e4,
            epsilon: 0.001,
            ..Default::default()
        };
        let m = svr_train(&x, &y, &p).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((m.predict_one(xi).unwrap() - yi).abs() <= 0.001 + 0.05);
        }
    }

    #[test]
    fn tiny_c_collapses_to_center() {
        // symmetric targets: the centre of the ε-insensitive loss is the mean
        let x: Vec<Vec<f64>> = (0..21).map(|i| vec![i as f64, (i * i) as f64 % 7.0]).collect();
        let y: Vec<f64> = (0..21).map(|i| (i as f64 - 10.0) * 0.3 + 2.0).collect();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let m = svr_train(&x, &y, &SvrParams { c: 1e-8, ..Default::default() }).unwrap();
        let pred = svr_predict(&m, &x).unwrap();
        for p in &pred {
            assert!((p - mean).abs() < 1e-3, "{p} vs {mean}");
        }
    }

    #[test]
    fn far_point_predicts_bias() {
        let (x, y) = linear_data(30, 3);
        let m = svr_train(&x, &y, &SvrParams::default()).unwrap();
        let far = m.predict_one(&[1e6, -1e6, 1e6]).unwrap();
        assert!((far + m.rho).abs() < 1e-12);
    }

    #[test]
    fn batch_equals_single_and_checks_dims() {
        let (x, y) = linear_data(30, 4);
        let m = svr_train(&x, &y, &SvrParams::default()).unwrap();
        let batch = svr_predict(&m, &x).unwrap();
        for (xi, b) in x.iter().zip(&batch) {
            assert_eq!(m.predict_one(xi).unwrap(), *b);
        }
        assert!(m.predict_one(&[1.0]).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let (x, _) = linear_data(10, 5);
        assert!(svr_train(&x, &[1.0; 10], &SvrParams::default()).is_err());
        assert!(svr_train(&x[..4], &[1.0, 2.0, 3.0, 4.0], &SvrParams::default()).is_err());
        let y: Vec<f64> = (0..10).map(f64::from).collect();
        assert!(svr_train(&x, &y, &SvrParams { c: 0.0, ..Default::default() }).is_err());
    }
}
