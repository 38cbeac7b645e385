//! Moment-matching fits of the generalized Gaussian (GGD) and asymmetric
//! generalized Gaussian (AGGD) families, using a lookup over the shape
//! parameter on `[0.2, 10]` in steps of 0.001.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const SHAPE_MIN: f64 = 0.2;
const SHAPE_STEP: f64 = 0.001;
const SHAPE_COUNT: usize = 9801; // 0.2 ..= 10.0
const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdParams {
    pub alpha: f64,
    /// Scale: root mean square of the samples.
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggdParams {
    /// Mean of the fitted distribution.
    pub eta: f64,
    pub alpha: f64,
    pub sigma_l: f64,
    pub sigma_r: f64,
}

struct ShapeTable {
    shapes: Vec<f64>,
    /// Γ(1/a)Γ(3/a)/Γ(2/a)², decreasing in `a`.
    ratio: Vec<f64>,
}

fn table() -> &'static ShapeTable {
    static TABLE: OnceLock<ShapeTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let shapes: Vec<f64> = (0..SHAPE_COUNT)
            .map(|i| SHAPE_MIN + i as f64 * SHAPE_STEP)
            .collect();
        let ratio = shapes.iter().map(|&a| ggd_moment_ratio(a)).collect();
        ShapeTable { shapes, ratio }
    })
}

/// `E[x²] / E[|x|]²` of a zero-mean GGD with shape `alpha`.
pub fn ggd_moment_ratio(alpha: f64) -> f64 {
    (ln_gamma(1.0 / alpha) + ln_gamma(3.0 / alpha) - 2.0 * ln_gamma(2.0 / alpha)).exp()
}

fn check(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples, need at least {MIN_SAMPLES}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }
    Ok(())
}

fn nearest_shape(target: f64, map: impl Fn(f64) -> f64) -> f64 {
    let t = table();
    let mut best = 0;
    let mut best_err = f64::INFINITY;
    for (i, &r) in t.ratio.iter().enumerate() {
        let err = (map(r) - target).abs();
        if err < best_err {
            best_err = err;
            best = i;
        }
    }
    t.shapes[best]
}

pub fn fit_ggd(samples: &[f64]) -> Result<GgdParams> {
    check(samples)?;
    let n = samples.len() as f64;
    let second = samples.iter().map(|x| x * x).sum::<f64>() / n;
    let abs_mean = samples.iter().map(|x| x.abs()).sum::<f64>() / n;
    let rho = second / (abs_mean * abs_mean);
    Ok(GgdParams {
        alpha: nearest_shape(rho, |r| r),
        sigma: second.sqrt(),
    })
}

pub fn fit_aggd(samples: &[f64]) -> Result<AggdParams> {
    check(samples)?;
    let (mut left_sq, mut left_n, mut right_sq, mut right_n) = (0.0, 0usize, 0.0, 0usize);
    let (mut abs_sum, mut sq_sum) = (0.0, 0.0);
    for &x in samples {
        if x < 0.0 {
            left_sq += x * x;
            left_n += 1;
        } else if x > 0.0 {
            right_sq += x * x;
            right_n += 1;
        }
        abs_sum += x.abs();
        sq_sum += x * x;
    }
    let sigma_l = if left_n > 0 { (left_sq / left_n as f64).sqrt() } else { 0.0 };
    let sigma_r = if right_n > 0 { (right_sq / right_n as f64).sqrt() } else { 0.0 };
    let n = samples.len() as f64;
    let r_hat = (abs_sum / n).powi(2) / (sq_sum / n);

    // one-sided samples: treat the empty side as vanishing relative to the other
    let gamma_hat = if sigma_r > 0.0 { sigma_l / sigma_r } else { f64::INFINITY };
    let correction = if gamma_hat.is_finite() {
        (gamma_hat.powi(3) + 1.0) * (gamma_hat + 1.0) / (gamma_hat * gamma_hat + 1.0).powi(2)
    } else {
        1.0
    };
    let r_norm = r_hat * correction;
    let alpha = nearest_shape(r_norm, |r| 1.0 / r);

    let g1 = ln_gamma(1.0 / alpha);
    let g2 = ln_gamma(2.0 / alpha);
    let g3 = ln_gamma(3.0 / alpha);
    let spread = ((g1 - g3) * 0.5).exp();
    let beta_l = sigma_l * spread;
    let beta_r = sigma_r * spread;
    let eta = (beta_r - beta_l) * (g2 - g1).exp();
    Ok(AggdParams {
        eta,
        alpha,
        sigma_l,
        sigma_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma, Normal};

    /// GGD draws via |x| = s * G^(1/α), G ~ Gamma(1/α, 1), random sign.
    fn ggd_samples(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Gamma::new(1.0 / alpha, 1.0).unwrap();
        (0..n)
            .map(|i| {
                let m = g.sample(&mut rng).powf(1.0 / alpha);
                if i % 2 == 0 { m } else { -m }
            })
            .collect()
    }

    #[test]
    fn gaussian_ratio_is_half_pi() {
        assert!((ggd_moment_ratio(2.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn gaussian_and_laplacian_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
        let a = fit_ggd(&xs).unwrap().alpha;
        assert!((1.9..=2.1).contains(&a), "{a}");

        let lap = ggd_samples(1.0, 100_000, 2);
        let a = fit_ggd(&lap).unwrap().alpha;
        assert!((0.9..=1.1).contains(&a), "{a}");
    }

    #[test]
    fn shape_recovery_within_ten_percent() {
        for (i, alpha) in [0.5, 1.0, 2.0, 4.0].into_iter().enumerate() {
            let xs = ggd_samples(alpha, 100_000, 10 + i as u64);
            let est = fit_ggd(&xs).unwrap().alpha;
            assert!((est - alpha).abs() <= 0.1 * alpha, "alpha {alpha}: {est}");
        }
    }

    #[test]
    fn constant_samples_rejected() {
        assert!(matches!(fit_ggd(&[3.0; 500]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_aggd(&[0.0; 500]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_ggd(&[1.0, 2.0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn aggd_symmetric_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
        let p = fit_aggd(&xs).unwrap();
        assert!((p.sigma_l - p.sigma_r).abs() / p.sigma_l < 0.05, "{p:?}");
        assert!(p.eta.abs() < 0.02, "{p:?}");
        assert!((1.9..=2.1).contains(&p.alpha), "{p:?}");
    }

    #[test]
    fn aggd_half_gaussian_is_lopsided() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| { let x: f64 = normal.sample(&mut rng); x.abs() }).collect();
        let p = fit_aggd(&xs).unwrap();
        assert!(p.sigma_l < 0.2 * p.sigma_r, "{p:?}");
        assert!(p.eta > 0.0);
    }
}
