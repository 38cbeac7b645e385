use image::RgbImage;

use crate::error::{Error, Result};

// D65 reference white, 2° observer.
const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// CIELAB (D65) of an 8-bit sRGB triple.
pub fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(|c| srgb_to_linear(c as f64 / 255.0));
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let fx = lab_f(x / WHITE[0]);
    let fy = lab_f(y / WHITE[1]);
    let fz = lab_f(z / WHITE[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// `sqrt(std(a)^2 + std(b)^2)` over LAB samples, population std. L is ignored.
pub fn colorfulness_of_lab(lab: &[[f64; 3]]) -> Result<f64> {
    if lab.is_empty() {
        return Err(Error::Empty("zero-pixel image"));
    }
    let n = lab.len() as f64;
    let (mut ma, mut mb) = (0.0, 0.0);
    for p in lab {
        ma += p[1];
        mb += p[2];
    }
    ma /= n;
    mb /= n;
    let (mut va, mut vb) = (0.0, 0.0);
    for p in lab {
        va += (p[1] - ma) * (p[1] - ma);
        vb += (p[2] - mb) * (p[2] - mb);
    }
    Ok((va / n + vb / n).sqrt())
}

/// Colorfulness of a texture map in CIELAB.
pub fn colorfulness(texture: &RgbImage) -> Result<f64> {
    let lab: Vec<[f64; 3]> = texture.pixels().map(|p| srgb_to_lab(p.0)).collect();
    colorfulness_of_lab(&lab)
}
