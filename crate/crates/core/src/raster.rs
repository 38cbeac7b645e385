//! 8-bit RGB rasters and single-channel float planes.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};

/// Row-major single-channel image of `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(width * height, data.len());
        Plane {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Plane::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn sub_plane(&self, x0: usize, y0: usize, w: usize, h: usize) -> Plane {
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Plane::new(w, h, data)
    }

    /// Rotates 90° counter-clockwise.
    pub fn rotate90(&self) -> Plane {
        let (w, h) = (self.width, self.height);
        let mut data = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                // (x, y) -> (y, w - 1 - x) in a h-wide image
                data[(w - 1 - x) * h + y] = self.at(x, y);
            }
        }
        Plane::new(h, w, data)
    }
}

/// ITU-R BT.601 luma on the 0..255 scale.
pub fn luminance(img: &RgbImage) -> Plane {
    let data = img
        .pixels()
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect();
    Plane::new(img.width() as usize, img.height() as usize, data)
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path)?.to_rgb8())
}

/// Writes an 8-bit RGB PNG with optional `tEXt` metadata.
pub fn save_png(img: &RgbImage, path: impl AsRef<Path>, text: &[(&str, &str)]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width(), img.height());
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    for (k, v) in text {
        enc.add_text_chunk(k.to_string(), v.to_string())
            .map_err(|e| Error::InvalidArgument(format!("png text chunk: {e}")))?;
    }
    let to_io = |e: png::EncodingError| Error::io(path, std::io::Error::other(e.to_string()));
    let mut writer = enc.write_header().map_err(to_io)?;
    writer.write_image_data(img.as_raw()).map_err(to_io)?;
    writer.finish().map_err(to_io)?;
    Ok(())
}

/// Result of [`crop_background`].
#[derive(Debug, Clone, PartialEq)]
pub struct Cropped {
    pub image: RgbImage,
    /// `(x, y, width, height)` of the kept region in the input.
    pub region: (u32, u32, u32, u32),
    /// No pixel differed from the background; the input is returned whole.
    pub empty_content: bool,
}

/// Minimal axis-aligned sub-image holding every pixel that differs from
/// `background` by more than `tolerance` in some channel.
pub fn crop_background(img: &RgbImage, background: [u8; 3], tolerance: u8) -> Cropped {
    let (w, h) = img.dimensions();
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
    for (x, y, p) in img.enumerate_pixels() {
        let differs = (0..3).any(|c| p[c].abs_diff(background[c]) > tolerance);
        if differs {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
    }
    if x0 == u32::MAX {
        return Cropped {
            image: img.clone(),
            region: (0, 0, w, h),
            empty_content: true,
        };
    }
    let (cw, ch) = (x1 - x0 + 1, y1 - y0 + 1);
    Cropped {
        image: image::imageops::crop_imm(img, x0, y0, cw, ch).to_image(),
        region: (x0, y0, cw, ch),
        empty_content: false,
    }
}

/// Pads to a square canvas of `fill`, content centered.
pub fn letterbox_square(img: &RgbImage, fill: [u8; 3]) -> RgbImage {
    let (w, h) = img.dimensions();
    let side = w.max(h);
    let mut out = RgbImage::from_pixel(side, side, Rgb(fill));
    let (ox, oy) = ((side - w) / 2, (side - h) / 2);
    image::imageops::replace(&mut out, img, ox as i64, oy as i64);
    out
}

/// Area-averaging (box filter) resample to an arbitrary size. Each output
/// pixel averages the input footprint it covers, with fractional weights at
/// the footprint edges. Upsampling degenerates to nearest-neighbour.
pub fn resize_box(img: &RgbImage, out_w: u32, out_h: u32) -> RgbImage {
    let (w, h) = img.dimensions();
    if (w, h) == (out_w, out_h) {
        return img.clone();
    }
    let xs = footprints(w, out_w);
    let ys = footprints(h, out_h);
    let mut out = RgbImage::new(out_w, out_h);
    for (oy, ywts) in ys.iter().enumerate() {
        for (ox, xwts) in xs.iter().enumerate() {
            let mut acc = [0.0f64; 3];
            let mut total = 0.0;
            for &(iy, wy) in ywts {
                for &(ix, wx) in xwts {
                    let p = img.get_pixel(ix, iy);
                    let wgt = wx * wy;
                    for c in 0..3 {
                        acc[c] += wgt * p[c] as f64;
                    }
                    total += wgt;
                }
            }
            let px = acc.map(|v| (v / total).round().clamp(0.0, 255.0) as u8);
            out.put_pixel(ox as u32, oy as u32, Rgb(px));
        }
    }
    out
}

fn footprints(n_in: u32, n_out: u32) -> Vec<Vec<(u32, f64)>> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|o| {
            let start = o as f64 * scale;
            let end = start + scale;
            if scale <= 1.0 {
                let idx = ((start + end) * 0.5).floor().min((n_in - 1) as f64) as u32;
                return vec![(idx, 1.0)];
            }
            let mut v = Vec::new();
            let mut i = start.floor() as u32;
            while (i as f64) < end && i < n_in {
                let lo = start.max(i as f64);
                let hi = end.min(i as f64 + 1.0);
                if hi > lo {
                    v.push((i, hi - lo));
                }
                i += 1;
            }
            v
        })
        .collect()
}

/// Bilinear resample, used only to enlarge undersized views.
pub fn resize_bilinear(img: &RgbImage, out_w: u32, out_h: u32) -> RgbImage {
    image::imageops::resize(img, out_w, out_h, image::imageops::FilterType::Triangle)
}

/// Letterboxes onto `fill` and box-resamples to `side`².
pub fn square_resize(img: &RgbImage, side: u32, fill: [u8; 3]) -> RgbImage {
    resize_box(&letterbox_square(img, fill), side, side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn blank_image_is_flagged() {
        let img = RgbImage::from_pixel(16, 8, Rgb([255, 255, 255]));
        let c = crop_background(&img, [255, 255, 255], 2);
        assert!(c.empty_content);
        assert_eq!(c.image, img);
    }

    #[test]
    fn single_pixel_bound() {
        let mut img = RgbImage::from_pixel(40, 40, Rgb([255, 255, 255]));
        img.put_pixel(10, 20, Rgb([255, 0, 0]));
        let c = crop_background(&img, [255, 255, 255], 2);
        assert_eq!(c.region, (10, 20, 1, 1));
        assert_eq!(c.image.get_pixel(0, 0), &Rgb([255, 0, 0]));
    }

    #[test]
    fn tolerance_is_respected() {
        let mut img = RgbImage::from_pixel(5, 5, Rgb([255, 255, 255]));
        img.put_pixel(1, 1, Rgb([253, 255, 255]));
        assert!(crop_background(&img, [255, 255, 255], 2).empty_content);
        img.put_pixel(3, 3, Rgb([252, 255, 255]));
        assert_eq!(crop_background(&img, [255, 255, 255], 2).region, (3, 3, 1, 1));
    }

    #[test]
    fn box_resize_averages_blocks() {
        let mut img = RgbImage::new(4, 2);
        for (x, _, p) in img.enumerate_pixels_mut() {
            *p = Rgb([if x < 2 { 0 } else { 200 }; 3]);
        }
        let out = resize_box(&img, 2, 1);
        assert_eq!(out.get_pixel(0, 0), &Rgb([0; 3]));
        assert_eq!(out.get_pixel(1, 0), &Rgb([200; 3]));
        let half = resize_box(&img, 1, 1);
        assert_eq!(half.get_pixel(0, 0), &Rgb([100; 3]));
    }

    #[test]
    fn letterbox_centers() {
        let img = RgbImage::from_pixel(2, 4, Rgb([0, 0, 0]));
        let sq = letterbox_square(&img, [255, 255, 255]);
        assert_eq!(sq.dimensions(), (4, 4));
        assert_eq!(sq.get_pixel(0, 0), &Rgb([255; 3]));
        assert_eq!(sq.get_pixel(1, 0), &Rgb([0; 3]));
    }

    #[test]
    fn rotate_plane_four_times_is_identity() {
        let p = Plane::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = p.rotate90();
        assert_eq!((r.width, r.height), (2, 3));
        assert_eq!(r.data, vec![3.0, 6.0, 2.0, 5.0, 1.0, 4.0]);
        assert_eq!(r.rotate90().rotate90().rotate90(), p);
    }

    proptest! {
        #[test]
        fn crop_is_idempotent(
            w in 1u32..24, h in 1u32..24,
            dots in prop::collection::vec((0u32..24, 0u32..24, 0u8..=255), 0..6),
        ) {
            let mut img = RgbImage::from_pixel(w, h, Rgb([255, 255, 255]));
            for (x, y, v) in dots {
                if x < w && y < h { img.put_pixel(x, y, Rgb([v, 255, v])); }
            }
            let once = crop_background(&img, [255, 255, 255], 2);
            let twice = crop_background(&once.image, [255, 255, 255], 2);
            prop_assert_eq!(&once.image, &twice.image);
        }
    }
}
