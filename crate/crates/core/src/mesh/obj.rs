//! Wavefront OBJ/MTL subset: `v`, `vt`, `vn` (ignored), `f` with
//! `v`, `v/vt`, `v/vt/vn` or `v//vn` corners, `mtllib`/`usemtl` resolving one
//! diffuse (`map_Kd`) texture.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{Face, ManifoldSummary, Mesh};
use crate::error::{Error, Result};
use crate::raster;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadReport {
    pub vertices: usize,
    pub faces: usize,
    /// Polygons with more than three corners that were fan-triangulated.
    pub polygons_triangulated: usize,
    pub textured: bool,
    /// Distinct diffuse maps referenced; only the first is used.
    pub diffuse_maps: usize,
    pub manifold: ManifoldSummary,
}

struct Material {
    diffuse: Option<String>,
}

/// Loads a mesh and its diffuse texture.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<(Mesh, LoadReport)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));

    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut uvs: Vec<[f64; 2]> = Vec::new();
    let mut normals = 0usize;
    let mut faces: Vec<Face> = Vec::new();
    let mut materials: HashMap<String, Material> = HashMap::new();
    let mut used_maps: Vec<String> = Vec::new();
    let mut fanned = 0usize;

    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "v" => {
                let c = parse_floats::<3>(&mut tokens)
                    .ok_or_else(|| parse_err(line_no, "vertex needs 3 coordinates".into()))?;
                vertices.push(c);
            }
            "vt" => {
                let mut rest: Vec<&str> = tokens.collect();
                if rest.len() == 1 {
                    rest.push("0");
                }
                let c = parse_floats::<2>(&mut rest.into_iter())
                    .ok_or_else(|| parse_err(line_no, "texture coordinate needs 2 values".into()))?;
                uvs.push(c);
            }
            "vn" => normals += 1,
            "f" => {
                let mut corners = Vec::new();
                for tok in tokens {
                    corners.push(parse_corner(tok, vertices.len(), uvs.len(), normals).map_err(
                        |e| match e {
                            CornerError::Malformed => {
                                parse_err(line_no, format!("malformed face corner '{tok}'"))
                            }
                            CornerError::Range { kind, index, len } => Error::IndexOutOfRange {
                                path: path.to_path_buf(),
                                line: line_no,
                                kind,
                                index,
                                len,
                            },
                        },
                    )?);
                }
                if corners.len() < 3 {
                    return Err(parse_err(line_no, "face needs at least 3 corners".into()));
                }
                let textured = corners.iter().all(|c| c.1.is_some());
                if corners.len() > 3 {
                    fanned += 1;
                }
                for k in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[k], corners[k + 1]];
                    let uv = textured.then(|| tri.map(|c| c.1.unwrap()));
                    faces.push(Face::new(tri.map(|c| c.0), uv));
                }
            }
            "mtllib" => {
                let name = line["mtllib".len()..].trim();
                let mtl_path = dir.join(name);
                let mtl_text = fs::read_to_string(&mtl_path).map_err(|e| Error::io(&mtl_path, e))?;
                parse_mtl(&mtl_text, &mut materials);
            }
            "usemtl" => {
                let name = line["usemtl".len()..].trim();
                if let Some(map) = materials.get(name).and_then(|m| m.diffuse.clone()) {
                    if !used_maps.contains(&map) {
                        used_maps.push(map);
                    }
                }
            }
            _ => {}
        }
    }

    if used_maps.is_empty() {
        // No usemtl; a library with a single textured material still applies.
        let mut maps: Vec<String> = materials.values().filter_map(|m| m.diffuse.clone()).collect();
        maps.sort();
        maps.dedup();
        if maps.len() == 1 {
            used_maps = maps;
        }
    }

    let texture = match used_maps.first() {
        Some(name) => {
            let tex_path = dir.join(name);
            if !tex_path.is_file() {
                return Err(Error::MissingTexture {
                    path: path.to_path_buf(),
                    texture: tex_path,
                });
            }
            Some(raster::load_rgb(&tex_path)?)
        }
        None => None,
    };
    if used_maps.len() > 1 {
        log::warn!(
            "{}: {} diffuse maps referenced, using {}",
            path.display(),
            used_maps.len(),
            used_maps[0]
        );
    }

    let mesh = Mesh {
        vertices,
        uvs,
        faces,
        texture,
    };
    let report = LoadReport {
        vertices: mesh.vertices.len(),
        faces: mesh.faces.len(),
        polygons_triangulated: fanned,
        textured: mesh.texture.is_some(),
        diffuse_maps: used_maps.len(),
        manifold: mesh.manifold_summary(),
    };
    if report.manifold.inconsistent_winding_edges > 0 {
        log::warn!(
            "{}: {} edges with inconsistent winding",
            path.display(),
            report.manifold.inconsistent_winding_edges
        );
    }
    Ok((mesh, report))
}

fn parse_floats<'a, const N: usize>(tokens: &mut impl Iterator<Item = &'a str>) -> Option<[f64; N]> {
    let mut out = [0.0; N];
    for slot in out.iter_mut() {
        *slot = tokens.next()?.parse().ok()?;
    }
    Some(out)
}

enum CornerError {
    Malformed,
    Range {
        kind: &'static str,
        index: i64,
        len: usize,
    },
}

fn resolve(token: &str, len: usize, kind: &'static str) -> Result<u32, CornerError> {
    let index: i64 = token.parse().map_err(|_| CornerError::Malformed)?;
    let resolved = if index > 0 {
        index - 1
    } else if index < 0 {
        len as i64 + index
    } else {
        -1
    };
    if resolved < 0 || resolved >= len as i64 {
        return Err(CornerError::Range { kind, index, len });
    }
    Ok(resolved as u32)
}

fn parse_corner(
    tok: &str,
    nv: usize,
    nt: usize,
    nn: usize,
) -> Result<(u32, Option<u32>), CornerError> {
    let mut parts = tok.split('/');
    let v = resolve(parts.next().unwrap_or(""), nv, "vertex")?;
    let t = match parts.next() {
        None | Some("") => None,
        Some(s) => Some(resolve(s, nt, "texture coordinate")?),
    };
    if let Some(n) = parts.next() {
        if !n.is_empty() {
            resolve(n, nn, "normal")?;
        }
    }
    if parts.next().is_some() {
        return Err(CornerError::Malformed);
    }
    Ok((v, t))
}

fn parse_mtl(text: &str, materials: &mut HashMap<String, Material>) {
    let mut current: Option<String> = None;
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("newmtl") => {
                let name = line["newmtl".len()..].trim().to_string();
                materials.insert(name.clone(), Material { diffuse: None });
                current = Some(name);
            }
            Some("map_Kd") => {
                // options (-s, -o, ...) precede the file name
                if let (Some(name), Some(file)) = (&current, tokens.last()) {
                    if let Some(m) = materials.get_mut(name) {
                        m.diffuse = Some(file.to_string());
                    }
                }
            }
            _ => {}
        }
    }
}

/// Writes `path` as OBJ. A texture, when present, goes next to it as
/// `<stem>.png` referenced from `<stem>.mtl`.
pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>, comment: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidArgument(format!("bad output path {}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));

    let mut out = String::with_capacity(mesh.vertices.len() * 40 + mesh.faces.len() * 30);
    if let Some(c) = comment {
        for line in c.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    if mesh.texture.is_some() {
        let _ = writeln!(out, "mtllib {stem}.mtl\nusemtl material0");
    }
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
    }
    for t in &mesh.uvs {
        let _ = writeln!(out, "vt {} {}", t[0], t[1]);
    }
    for f in &mesh.faces {
        match f.uv {
            Some(t) => {
                let _ = writeln!(
                    out,
                    "f {}/{} {}/{} {}/{}",
                    f.v[0] + 1,
                    t[0] + 1,
                    f.v[1] + 1,
                    t[1] + 1,
                    f.v[2] + 1,
                    t[2] + 1
                );
            }
            None => {
                let _ = writeln!(out, "f {} {} {}", f.v[0] + 1, f.v[1] + 1, f.v[2] + 1);
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;

    if let Some(tex) = &mesh.texture {
        let mtl_path: PathBuf = dir.join(format!("{stem}.mtl"));
        let mtl = format!("newmtl material0\nKd 1 1 1\nmap_Kd {stem}.png\n");
        fs::write(&mtl_path, mtl).map_err(|e| Error::io(&mtl_path, e))?;
        let meta: Vec<(&str, &str)> = comment.map(|c| vec![("Comment", c)]).unwrap_or_default();
        raster::save_png(tex, dir.join(format!("{stem}.png")), &meta)?;
    }
    Ok(())
}
