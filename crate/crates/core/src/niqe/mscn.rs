use crate::error::{Error, Result};
use crate::raster::Plane;

const WINDOW_RADIUS: usize = 3;
const WINDOW_SIGMA: f64 = 7.0 / 6.0;
/// Stabilizing constant in the divisive normalization (0..255 scale).
const NORMALIZER: f64 = 1.0;
pub const MIN_SIDE: usize = 16;

/// Mean-subtracted contrast-normalized coefficients together with the local
/// deviation field they were normalized by.
#[derive(Debug, Clone)]
pub struct MscnField {
    pub coefficients: Plane,
    pub sigma: Plane,
}

fn window() -> [f64; 2 * WINDOW_RADIUS + 1] {
    let mut w = [0.0; 2 * WINDOW_RADIUS + 1];
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - WINDOW_RADIUS as f64;
        *v = (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

/// Separable 7×7 Gaussian filter with replicated borders.
fn blur(p: &Plane) -> Plane {
    let w = window();
    let r = WINDOW_RADIUS as isize;
    let (width, height) = (p.width as isize, p.height as isize);
    let mut tmp = vec![0.0; p.data.len()];
    for y in 0..height {
        let row = &p.data[(y * width) as usize..((y + 1) * width) as usize];
        for x in 0..width {
            let mut acc = 0.0;
            for k in -r..=r {
                let xx = (x + k).clamp(0, width - 1);
                acc += w[(k + r) as usize] * row[xx as usize];
            }
            tmp[(y * width + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0; p.data.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for k in -r..=r {
                let yy = (y + k).clamp(0, height - 1);
                acc += w[(k + r) as usize] * tmp[(yy * width + x) as usize];
            }
            out[(y * width + x) as usize] = acc;
        }
    }
    Plane::new(p.width, p.height, out)
}

/// `(I - μ) / (σ + 1)` with Gaussian-weighted local mean μ and deviation σ.
pub fn mscn_transform(gray: &Plane) -> Result<MscnField> {
    if gray.width < MIN_SIDE || gray.height < MIN_SIDE {
        return Err(Error::TooSmall {
            width: gray.width,
            height: gray.height,
            min: MIN_SIDE,
        });
    }
    let mu = blur(gray);
    let squares = Plane::new(
        gray.width,
        gray.height,
        gray.data.iter().map(|v| v * v).collect(),
    );
    let mu_sq = blur(&squares);
    let sigma: Vec<f64> = mu_sq
        .data
        .iter()
        .zip(&mu.data)
        .map(|(s, m)| (s - m * m).abs().sqrt())
        .collect();
    let coefficients = gray
        .data
        .iter()
        .zip(&mu.data)
        .zip(&sigma)
        .map(|((i, m), s)| (i - m) / (s + NORMALIZER))
        .collect();
    Ok(MscnField {
        coefficients: Plane::new(gray.width, gray.height, coefficients),
        sigma: Plane::new(gray.width, gray.height, sigma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_image_is_all_zero() {
        let f = mscn_transform(&Plane::filled(32, 20, 117.0)).unwrap();
        assert!(f.coefficients.data.iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn checkerboard_is_zero_mean() {
        let (w, h) = (64, 64);
        let data = (0..w * h)
            .map(|i| if (i % w + i / w) % 2 == 0 { 0.0 } else { 255.0 })
            .collect();
        let f = mscn_transform(&Plane::new(w, h, data)).unwrap();
        let mean = f.coefficients.data.iter().sum::<f64>() / (w * h) as f64;
        assert!(mean.abs() < 0.01, "{mean}");
    }

    #[test]
    fn white_noise_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (w, h) = (256, 256);
        let data = (0..w * h).map(|_| rng.random_range(0.0..255.0)).collect();
        let f = mscn_transform(&Plane::new(w, h, data)).unwrap();
        let xs = &f.coefficients.data;
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let skew = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n / var.powf(1.5);
        assert!(skew.abs() < 0.1, "{skew}");
    }

    #[test]
    fn undersized() {
        assert!(matches!(
            mscn_transform(&Plane::filled(15, 40, 0.0)),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn window_is_normalized() {
        assert!((window().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
