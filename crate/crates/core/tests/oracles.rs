//! Checks against values computed outside this crate.

use dhqi_core::mesh::{colorfulness, srgb_to_lab};
use dhqi_core::quality::geometry_loss_from_mean;
use dhqi_core::semantic::sigmoid;
use image::{Rgb, RgbImage};

// Published CIELAB (D65) coordinates of the sRGB primaries.
const RED_LAB: [f64; 3] = [53.2408, 80.0925, 67.2032];
const BLUE_LAB: [f64; 3] = [32.2970, 79.1875, -107.8602];
const WHITE_LAB: [f64; 3] = [100.0, 0.0, 0.0];

fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

#[test]
fn lab_of_primaries() {
    assert!(close3(srgb_to_lab([255, 0, 0]), RED_LAB, 2e-3));
    assert!(close3(srgb_to_lab([0, 0, 255]), BLUE_LAB, 2e-3));
    assert!(close3(srgb_to_lab([255, 255, 255]), WHITE_LAB, 2e-3));
    assert!(close3(srgb_to_lab([0, 0, 0]), [0.0; 3], 1e-9));
}

#[test]
fn colorfulness_of_half_red_half_blue() {
    let img = RgbImage::from_fn(64, 32, |x, _| if x < 32 { Rgb([255, 0, 0]) } else { Rgb([0, 0, 255]) });
    // two equal point masses: each std is half the gap
    let sa = (RED_LAB[1] - BLUE_LAB[1]).abs() / 2.0;
    let sb = (RED_LAB[2] - BLUE_LAB[2]).abs() / 2.0;
    let expect = (sa * sa + sb * sb).sqrt();
    assert!((colorfulness(&img).unwrap() - expect).abs() < 5e-3);
}

#[test]
fn flat_texture_has_no_colorfulness() {
    let img = RgbImage::from_pixel(16, 16, Rgb([200, 30, 90]));
    assert!(colorfulness(&img).unwrap().abs() < 1e-12);
}

#[test]
fn geometry_loss_values() {
    // 1 / (1 + e^θ)
    assert!((geometry_loss_from_mean(0.0) - 0.5).abs() < 1e-15);
    assert!((geometry_loss_from_mean(1.0) - 0.268_941_421_369_995_1).abs() < 1e-15);
    assert!((sigmoid(2.0) - 0.880_797_077_977_882_3).abs() < 1e-15);
}
