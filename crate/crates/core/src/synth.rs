//! Deterministic procedural samples: natural-looking photographs
//! (dead-leaves model) and textured human-like meshes. Used as fixtures and
//! for desk-scale experiments when no scanned assets are at hand.

use std::f64::consts::PI;

use image::{imageops, Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::mesh::{Face, Mesh};

/// Dead-leaves image: occluding discs with power-law radii, shaded
/// interiors and fine grain, lightly blurred.
pub fn natural_image(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e61_7475_7261_6c21);
    let (w, h) = (width as usize, height as usize);
    let mut buf = vec![[0.0f32; 3]; w * h];
    let base = [
        rng.random_range(60.0..200.0f32),
        rng.random_range(60.0..200.0f32),
        rng.random_range(60.0..200.0f32),
    ];
    for px in buf.iter_mut() {
        *px = base;
    }
    let r_min = 2.0f64;
    let r_max = (w.max(h) as f64 / 3.0).max(4.0);
    let discs = (w * h) / 60 + 50;
    for _ in 0..discs {
        // density ∝ r^-3 via inverse CDF
        let u: f64 = rng.random();
        let r = 1.0 / ((1.0 - u) / (r_min * r_min) + u / (r_max * r_max)).sqrt();
        let cx = rng.random_range(-r..w as f64 + r);
        let cy = rng.random_range(-r..h as f64 + r);
        let color = [
            rng.random_range(10.0..245.0f32),
            rng.random_range(10.0..245.0f32),
            rng.random_range(10.0..245.0f32),
        ];
        let (gx, gy) = (rng.random_range(-1.0..1.0f64), rng.random_range(-1.0..1.0f64));
        let x0 = (cx - r).floor().max(0.0) as usize;
        let x1 = ((cx + r).ceil() as usize).min(w);
        let y0 = (cy - r).floor().max(0.0) as usize;
        let y1 = ((cy + r).ceil() as usize).min(h);
        for y in y0..y1 {
            for x in x0..x1 {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                if dx * dx + dy * dy <= r * r {
                    let shade = (1.0 + 0.25 * (gx * dx + gy * dy) / r) as f32;
                    buf[y * w + x] = color.map(|c| c * shade);
                }
            }
        }
    }
    let grain = Normal::new(0.0, 2.0f32).unwrap();
    let mut img = RgbImage::new(width, height);
    for (i, p) in img.pixels_mut().enumerate() {
        let v = buf[i];
        *p = Rgb(v.map(|c| (c + grain.sample(&mut rng)).round().clamp(0.0, 255.0) as u8));
    }
    imageops::blur(&img, 0.6)
}

/// Smooth lattice value noise in `[-1, 1]`, periodic in `x` with `period`.
struct ValueNoise {
    seed: u64,
}

impl ValueNoise {
    fn hash(&self, ix: i64, iy: i64) -> f64 {
        let mut z = self.seed
            ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn sample(&self, x: f64, y: f64, period: i64) -> f64 {
        let (fx, fy) = (x.floor(), y.floor());
        let (tx, ty) = (x - fx, y - fy);
        let sx = tx * tx * (3.0 - 2.0 * tx);
        let sy = ty * ty * (3.0 - 2.0 * ty);
        let (ix, iy) = (fx as i64, fy as i64);
        let wrap = |i: i64| if period > 0 { i.rem_euclid(period) } else { i };
        let v00 = self.hash(wrap(ix), iy);
        let v10 = self.hash(wrap(ix + 1), iy);
        let v01 = self.hash(wrap(ix), iy + 1);
        let v11 = self.hash(wrap(ix + 1), iy + 1);
        let a = v00 + (v10 - v00) * sx;
        let b = v01 + (v11 - v01) * sx;
        a + (b - a) * sy
    }

    /// Fractal sum of `octaves` layers starting at `freq` cells per unit.
    fn fbm(&self, x: f64, y: f64, freq: f64, octaves: u32, periodic: bool) -> f64 {
        let mut total = 0.0;
        let mut amp = 1.0;
        let mut norm = 0.0;
        let mut f = freq;
        for o in 0..octaves {
            let period = if periodic { f.round() as i64 } else { 0 };
            total += amp * self.sample(x * f + o as f64 * 17.3, y * f, period);
            norm += amp;
            amp *= 0.5;
            f *= 2.0;
        }
        total / norm
    }
}

/// Unit icosphere with `subdivisions` rounds of 4-to-1 splitting
/// (20·4ⁿ faces), untextured.
pub fn icosphere(subdivisions: u32) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<[f64; 3]> = [
        [-1.0, t, 0.0], [1.0, t, 0.0], [-1.0, -t, 0.0], [1.0, -t, 0.0],
        [0.0, -1.0, t], [0.0, 1.0, t], [0.0, -1.0, -t], [0.0, 1.0, -t],
        [t, 0.0, -1.0], [t, 0.0, 1.0], [-t, 0.0, -1.0], [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let mut tris: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid = std::collections::HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<[f64; 3]>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (vertices[a as usize], vertices[b as usize]);
                vertices.push(normalize([0, 1, 2].map(|d| p[d] + q[d])));
                vertices.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    Mesh {
        vertices,
        uvs: Vec::new(),
        faces: tris.into_iter().map(|t| Face::new(t, None)).collect(),
        texture: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Material {
    Skin,
    Head,
    Shirt,
    Trousers,
    Shoe,
}

struct Part {
    center: [f64; 3],
    /// Principal direction (unit).
    axis: [f64; 3],
    half_length: f64,
    /// Radii along the two directions perpendicular to `axis`.
    radius: [f64; 2],
    /// 0 gives an ellipsoid; towards 1 the profile becomes a capsule.
    bluntness: f64,
    material: Material,
}

/// Parameters of a generated human-like model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanSpec {
    pub seed: u64,
    /// Approximate number of triangles.
    pub target_faces: usize,
    /// Side of the square texture atlas; a multiple of 64.
    pub texture_size: u32,
}

impl Default for HumanSpec {
    fn default() -> Self {
        HumanSpec {
            seed: 1,
            target_faces: 40_000,
            texture_size: 2048,
        }
    }
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|c| c / n)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn body_parts(rng: &mut ChaCha8Rng) -> Vec<Part> {
    let mut j = |s: f64| 1.0 + rng.random_range(-s..s);
    let height = 1.75 * j(0.06);
    let girth = j(0.12);
    let h = |y: f64| y * height / 1.75;
    let down = [0.0, -1.0, 0.0];
    let mut parts = vec![
        Part { center: [0.0, h(1.62), 0.0], axis: [0.0, 1.0, 0.0], half_length: h(0.115), radius: [0.09, 0.10], bluntness: 0.1, material: Material::Head },
        Part { center: [0.0, h(1.48), 0.0], axis: [0.0, 1.0, 0.0], half_length: h(0.07), radius: [0.05 * girth, 0.05 * girth], bluntness: 0.7, material: Material::Skin },
        Part { center: [0.0, h(1.26), 0.0], axis: [0.0, 1.0, 0.0], half_length: h(0.22), radius: [0.17 * girth, 0.11 * girth], bluntness: 0.6, material: Material::Shirt },
        Part { center: [0.0, h(0.99), 0.0], axis: [0.0, 1.0, 0.0], half_length: h(0.12), radius: [0.16 * girth, 0.10 * girth], bluntness: 0.5, material: Material::Trousers },
    ];
    for side in [-1.0, 1.0] {
        let tilt = normalize([side * 0.18, -1.0, 0.0]);
        parts.extend([
            Part { center: [side * 0.225 * girth, h(1.26), 0.0], axis: tilt, half_length: h(0.16), radius: [0.048 * girth, 0.048 * girth], bluntness: 0.6, material: Material::Shirt },
            Part { center: [side * 0.28 * girth, h(0.98), 0.01], axis: tilt, half_length: h(0.14), radius: [0.039, 0.036], bluntness: 0.6, material: Material::Skin },
            Part { center: [side * 0.31 * girth, h(0.78), 0.02], axis: tilt, half_length: h(0.08), radius: [0.025, 0.045], bluntness: 0.3, material: Material::Skin },
            Part { center: [side * 0.095 * girth, h(0.69), 0.0], axis: down, half_length: h(0.22), radius: [0.075 * girth, 0.075 * girth], bluntness: 0.6, material: Material::Trousers },
            Part { center: [side * 0.095 * girth, h(0.29), -0.01], axis: down, half_length: h(0.2), radius: [0.055, 0.055], bluntness: 0.6, material: Material::Trousers },
            Part { center: [side * 0.095 * girth, 0.045, 0.04], axis: [0.0, 0.0, 1.0], half_length: 0.13, radius: [0.045, 0.04], bluntness: 0.4, material: Material::Shoe },
        ]);
    }
    parts
}

/// Generates a closed, consistently wound, textured human-like mesh
/// (y up, +z facing forward, about 1.75 units tall).
pub fn human(spec: &HumanSpec) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let parts = body_parts(&mut rng);
    let detail = ValueNoise { seed: spec.seed.wrapping_mul(31) ^ 0xD37A_11 };

    // resolution ∝ size, scaled to the face budget
    let sizes: Vec<(f64, f64)> = parts
        .iter()
        .map(|p| {
            let circ = PI * (p.radius[0] + p.radius[1]);
            let len = 2.0 * p.half_length + 0.5 * (p.radius[0] + p.radius[1]);
            (circ, len)
        })
        .collect();
    let area: f64 = sizes.iter().map(|(c, l)| c * l).sum();
    let k = (spec.target_faces as f64 / (2.0 * area)).sqrt();

    let tiles_per_side = 4usize;
    let tile = 1.0 / tiles_per_side as f64;
    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    let mut faces = Vec::new();

    for (pi, (part, &(circ, len))) in parts.iter().zip(&sizes).enumerate() {
        let n_lon = ((circ * k).round() as usize).max(8);
        let n_lat = ((len * k).round() as usize).max(4);
        let (tu, tv) = ((pi % tiles_per_side) as f64 * tile, (pi / tiles_per_side) as f64 * tile);
        let inset = 0.02 * tile;
        let uv_of = |s: f64, t: f64| {
            [tu + inset + s * (tile - 2.0 * inset), 1.0 - (tv + inset + t * (tile - 2.0 * inset))]
        };

        let helper = if part.axis[1].abs() > 0.9 { [0.0, 0.0, 1.0] } else { [0.0, 1.0, 0.0] };
        let e1 = normalize(cross(helper, part.axis));
        let e2 = cross(part.axis, e1);
        let amp_fold = 0.0035;
        let amp_fine = 0.0012;

        let base = vertices.len() as u32;
        let uv_base = uvs.len() as u32;
        // ring vertices, then the two poles
        for i in 1..n_lat {
            let theta = PI * i as f64 / n_lat as f64;
            let along = theta.cos() * part.half_length;
            let s = theta.sin();
            let profile = s.powf(1.0 - 0.6 * part.bluntness);
            for jl in 0..n_lon {
                let phi = 2.0 * PI * jl as f64 / n_lon as f64;
                let (c, sn) = (phi.cos(), phi.sin());
                let radial = [c * part.radius[0], sn * part.radius[1]];
                let u = jl as f64 / n_lon as f64;
                let t = i as f64 / n_lat as f64;
                let bump = s
                    * (amp_fold * detail.fbm(u, t * 3.0 + pi as f64, 6.0, 2, true)
                        + amp_fine * detail.fbm(u, t * 5.0 + 50.0 + pi as f64, 28.0, 2, true));
                let dir = [0, 1, 2].map(|d| c * e1[d] + sn * e2[d]);
                vertices.push([0, 1, 2].map(|d| {
                    part.center[d]
                        + along * part.axis[d]
                        + profile * (radial[0] * e1[d] + radial[1] * e2[d])
                        + bump * dir[d]
                }));
            }
        }
        let top = vertices.len() as u32;
        vertices.push([0, 1, 2].map(|d| part.center[d] + part.half_length * part.axis[d]));
        let bottom = top + 1;
        vertices.push([0, 1, 2].map(|d| part.center[d] - part.half_length * part.axis[d]));

        // uv grid has a duplicated seam column; poles get one uv per segment
        for i in 1..n_lat {
            for jl in 0..=n_lon {
                uvs.push(uv_of(jl as f64 / n_lon as f64, i as f64 / n_lat as f64));
            }
        }
        let uv_top = uvs.len() as u32;
        for jl in 0..n_lon {
            uvs.push(uv_of((jl as f64 + 0.5) / n_lon as f64, 0.0));
        }
        let uv_bottom = uvs.len() as u32;
        for jl in 0..n_lon {
            uvs.push(uv_of((jl as f64 + 0.5) / n_lon as f64, 1.0));
        }

        let vid = |ring: usize, jl: usize| base + (ring * n_lon + jl % n_lon) as u32;
        let tid = |ring: usize, jl: usize| uv_base + (ring * (n_lon + 1) + jl) as u32;
        // (e1, e2, axis) is right-handed; outward order is theta then phi
        for jl in 0..n_lon {
            faces.push(Face::new(
                [top, vid(0, jl), vid(0, jl + 1)],
                Some([uv_top + jl as u32, tid(0, jl), tid(0, jl + 1)]),
            ));
        }
        for ring in 0..n_lat - 2 {
            for jl in 0..n_lon {
                let (a, b) = (vid(ring, jl), vid(ring, jl + 1));
                let (c, d) = (vid(ring + 1, jl), vid(ring + 1, jl + 1));
                let (ta, tb) = (tid(ring, jl), tid(ring, jl + 1));
                let (tc, td) = (tid(ring + 1, jl), tid(ring + 1, jl + 1));
                faces.push(Face::new([a, c, d], Some([ta, tc, td])));
                faces.push(Face::new([a, d, b], Some([ta, td, tb])));
            }
        }
        let last = n_lat - 2;
        for jl in 0..n_lon {
            faces.push(Face::new(
                [bottom, vid(last, jl + 1), vid(last, jl)],
                Some([uv_bottom + jl as u32, tid(last, jl + 1), tid(last, jl)]),
            ));
        }
    }

    let texture = human_texture(spec, &parts);
    Mesh {
        vertices,
        uvs,
        faces,
        texture: Some(texture),
    }
}

fn human_texture(spec: &HumanSpec, parts: &[Part]) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x7E87_0000);
    let size = spec.texture_size;
    let noise = ValueNoise { seed: spec.seed ^ 0xABCD };
    let skin = [
        rng.random_range(150.0..235.0),
        rng.random_range(105.0..180.0),
        rng.random_range(80.0..150.0),
    ];
    let hair = [
        rng.random_range(20.0..110.0),
        rng.random_range(15.0..70.0),
        rng.random_range(10.0..45.0),
    ];
    let shirt = [
        rng.random_range(30.0..230.0),
        rng.random_range(30.0..230.0),
        rng.random_range(30.0..230.0),
    ];
    let stripe = [
        rng.random_range(20.0..240.0),
        rng.random_range(20.0..240.0),
        rng.random_range(20.0..240.0),
    ];
    let trousers = [
        rng.random_range(30.0..90.0),
        rng.random_range(40.0..100.0),
        rng.random_range(80.0..170.0),
    ];
    let shoe = [
        rng.random_range(20.0..80.0),
        rng.random_range(15.0..60.0),
        rng.random_range(10.0..50.0),
    ];
    let stripe_freq = rng.random_range(6.0..14.0);

    let tiles = 4u32;
    let tile_px = size / tiles;
    let mut img = RgbImage::from_pixel(size, size, Rgb([128, 128, 128]));
    for (pi, part) in parts.iter().enumerate() {
        let (ox, oy) = ((pi as u32 % tiles) * tile_px, (pi as u32 / tiles) * tile_px);
        for y in 0..tile_px {
            for x in 0..tile_px {
                let s = x as f64 / tile_px as f64;
                let t = y as f64 / tile_px as f64;
                let (gx, gy) = ((ox + x) as f64 / size as f64, (oy + y) as f64 / size as f64);
                let low = noise.fbm(gx, gy, 8.0, 3, false);
                let fine = noise.fbm(gx + 3.1, gy + 7.7, 160.0, 3, false);
                let rgb: [f64; 3] = match part.material {
                    Material::Skin => skin.map(|c| c * (1.0 + 0.06 * low + 0.05 * fine)),
                    Material::Head => {
                        let hairline = 0.38 + 0.04 * (2.0 * PI * 3.0 * s).sin();
                        if t < hairline || (s > 0.3 && s < 0.7 && t < 0.55) {
                            let strand = noise.fbm(gx * 0.2, gy * 6.0, 300.0, 2, false);
                            hair.map(|c| c * (1.0 + 0.25 * strand + 0.1 * low))
                        } else {
                            skin.map(|c| c * (1.0 + 0.05 * low + 0.04 * fine))
                        }
                    }
                    Material::Shirt => {
                        let band = (2.0 * PI * stripe_freq * t).sin() > 0.55;
                        let base = if band { stripe } else { shirt };
                        let weave = ((x % 4) as f64 - 1.5) * 0.015 + ((y % 4) as f64 - 1.5) * 0.015;
                        base.map(|c| c * (1.0 + 0.12 * low + 0.08 * fine + weave))
                    }
                    Material::Trousers => {
                        let twill = (((x + y) % 6) as f64 / 6.0 - 0.5) * 0.12;
                        trousers.map(|c| c * (1.0 + 0.15 * low + 0.1 * fine + twill))
                    }
                    Material::Shoe => shoe.map(|c| c * (1.0 + 0.2 * low + 0.08 * fine)),
                };
                img.put_pixel(
                    ox + x,
                    oy + y,
                    Rgb(rgb.map(|c| c.round().clamp(0.0, 255.0) as u8)),
                );
            }
        }
    }
    img
}
