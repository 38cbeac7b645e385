//! Five-parameter logistic mapping of objective scores onto the MOS scale.

use nalgebra::{Matrix5, Vector5};
use serde::Serialize;

use crate::error::{Error, Result};

/// `β₁(½ − 1/(1 + e^{β₂(x − β₃)})) + β₄x + β₅`
pub fn logistic5(beta: &[f64; 5], x: f64) -> f64 {
    let s = 1.0 / (1.0 + (beta[1] * (x - beta[2])).exp());
    beta[0] * (0.5 - s) + beta[3] * x + beta[4]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mapping {
    Logistic { beta: [f64; 5], iterations: usize },
    /// Least-squares line; `reason` says why the logistic was not used.
    Linear { slope: f64, intercept: f64, reason: String },
}

impl Mapping {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Mapping::Logistic { beta, .. } => logistic5(beta, x),
            Mapping::Linear { slope, intercept, .. } => slope * x + intercept,
        }
    }

    pub fn apply_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self, Mapping::Linear { .. })
    }
}

pub const MAX_ITERATIONS: usize = 200;
pub const REL_TOL: f64 = 1e-10;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sse(beta: &[f64; 5], x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(&a, &b)| (logistic5(beta, a) - b).powi(2)).sum()
}

/// Ordinary least squares line; slope 0 for constant `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Damped Gauss-Newton (Levenberg-Marquardt) from `beta`. Returns the
/// fitted parameters, iterations used and final SSE.
fn levenberg_marquardt(mut beta: [f64; 5], x: &[f64], y: &[f64]) -> Option<([f64; 5], usize, f64)> {
    let mut cost = sse(&beta, x, y);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = Matrix5::<f64>::zeros();
        let mut jtr = Vector5::<f64>::zeros();
        for (&xi, &yi) in x.iter().zip(y) {
            let s = 1.0 / (1.0 + (beta[1] * (xi - beta[2])).exp());
            let ds = s * (1.0 - s);
            let j = Vector5::new(
                0.5 - s,
                beta[0] * ds * (xi - beta[2]),
                -beta[0] * ds * beta[1],
                xi,
                1.0,
            );
            let r = yi - logistic5(&beta, xi);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for k in 0..5 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial: [f64; 5] = std::array::from_fn(|k| beta[k] + step[k]);
            let c = sse(&trial, x, y);
            if c.is_finite() && c <= cost {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                beta = trial;
                cost = c;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if rel < REL_TOL {
                    return Some((beta, iterations, cost));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no descent direction left: at a (local) minimum
            return Some((beta, iterations, cost));
        }
    }
    cost.is_finite().then_some((beta, iterations, cost))
}

/// Fits the five-parameter logistic by least squares and keeps it unless
/// the input is degenerate or a straight line fits at least as well.
pub fn logistic_remap(pred: &[f64], mos: &[f64]) -> Result<Mapping> {
    if pred.len() != mos.len() {
        return Err(Error::DimensionMismatch {
            expected: pred.len(),
            got: mos.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty("no scores to map"));
    }
    let (slope, intercept) = linear_fit(pred, mos);
    let linear = |reason: &str| Mapping::Linear {
        slope,
        intercept,
        reason: reason.to_string(),
    };
    if pred.len() < 6 {
        return Ok(linear("fewer than 6 points"));
    }
    let sd = {
        let m = mean(pred);
        (pred.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (pred.len() - 1) as f64).sqrt()
    };
    if sd == 0.0 {
        return Ok(linear("constant predictions"));
    }
    let range = mos.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - mos.iter().cloned().fold(f64::INFINITY, f64::min);
    let init = |b1: f64| [b1, 1.0 / sd, mean(pred), 0.0, mean(mos)];
    let best = [range, -range]
        .into_iter()
        .filter_map(|b1| levenberg_marquardt(init(b1), pred, mos))
        .min_by(|a, b| a.2.total_cmp(&b.2));
    let linear_sse: f64 = pred
        .iter()
        .zip(mos)
        .map(|(p, m)| (slope * p + intercept - m).powi(2))
        .sum();
    match best {
        None => Ok(linear("logistic fit did not converge")),
        Some((beta, iterations, cost)) => {
            if cost > linear_sse {
                Ok(linear("linear fit has lower residual"))
            } else {
                Ok(Mapping::Logistic { beta, iterations })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_planted_curve() {
        let beta = [3.5, 2.0, 0.4, 0.15, 2.4];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..80).map(|_| rng.random_range(-2.0..2.5)).collect();
        let y: Vec<f64> = x.iter().map(|&v| logistic5(&beta, v)).collect();
        let m = logistic_remap(&x, &y).unwrap();
        assert!(!m.is_fallback(), "{m:?}");
        let fit = m.apply_all(&x);
        let rmse = (fit.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 80.0).sqrt();
        assert!(rmse < 1e-6, "{rmse}");
    }

    #[test]
    fn linear_data_is_no_worse_than_line() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.7 * v - 1.0).collect();
        let m = logistic_remap(&x, &y).unwrap();
        let (s, c) = linear_fit(&x, &y);
        let lin: f64 = x.iter().zip(&y).map(|(a, b)| (s * a + c - b).powi(2)).sum::<f64>();
        let got: f64 = x.iter().zip(&y).map(|(a, b)| (m.apply(*a) - b).powi(2)).sum::<f64>();
        assert!((got / 30.0).sqrt() <= (lin / 30.0).sqrt() + 1e-9);
    }

    #[test]
    fn degenerate_inputs_fall_back() {
        assert!(logistic_remap(&[2.0; 10], &[1.0, 2.0, 3.0, 4.0, 5.0, 1.0, 2.0, 3.0, 4.0, 5.0])
            .unwrap()
            .is_fallback());
        assert!(logistic_remap(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().is_fallback());
    }
}
