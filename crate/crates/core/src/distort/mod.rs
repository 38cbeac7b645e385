//! The seven distortion families and labelled-corpus generation.

mod ops;
mod simplify;

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::{load_mesh, save_mesh, Mesh};

pub use ops::{
    apply_color_noise, apply_geometry_noise, compress_texture, downsample_texture,
    quantize_positions, quantize_uvs, NoiseUnits,
};
pub use simplify::simplify_mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DistortionKind {
    /// Gaussian noise on vertex positions.
    GN,
    /// Gaussian noise on texture colors.
    CN,
    /// Face simplification.
    FS,
    /// Position quantization.
    PC,
    /// UV quantization.
    UMC,
    /// Texture downsampling.
    TD,
    /// Texture JPEG compression.
    TC,
}

impl DistortionKind {
    pub const ALL: [DistortionKind; 7] = [
        DistortionKind::GN,
        DistortionKind::CN,
        DistortionKind::FS,
        DistortionKind::PC,
        DistortionKind::UMC,
        DistortionKind::TD,
        DistortionKind::TC,
    ];

    /// Parameters for levels 1 (mildest) to 4 (strongest).
    pub fn levels(self) -> [f64; 4] {
        match self {
            DistortionKind::GN => [0.05, 0.1, 0.15, 0.2],
            DistortionKind::CN => [20.0, 40.0, 60.0, 80.0],
            DistortionKind::FS => [0.4, 0.2, 0.1, 0.05],
            DistortionKind::PC => [9.0, 8.0, 7.0, 6.0],
            DistortionKind::UMC => [9.0, 8.0, 7.0, 6.0],
            DistortionKind::TD => [2.0, 4.0, 8.0, 16.0],
            DistortionKind::TC => [20.0, 15.0, 10.0, 3.0],
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, DistortionKind::GN | DistortionKind::CN)
    }

    pub fn touches_texture(self) -> bool {
        matches!(self, DistortionKind::CN | DistortionKind::TD | DistortionKind::TC)
    }
}

impl fmt::Display for DistortionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for DistortionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DistortionKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown distortion kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub kind: DistortionKind,
    /// 1..=4.
    pub level: u8,
    pub parameter: f64,
    /// Present for stochastic kinds.
    pub seed: Option<u64>,
}

impl DistortionSpec {
    pub fn new(kind: DistortionKind, level: u8, seed: u64) -> Result<Self> {
        if !(1..=4).contains(&level) {
            return Err(Error::InvalidArgument(format!("level {level} outside 1..=4")));
        }
        Ok(DistortionSpec {
            kind,
            level,
            parameter: kind.levels()[level as usize - 1],
            seed: kind.is_stochastic().then_some(seed),
        })
    }
}

/// Applies one distortion to a copy of `mesh`.
pub fn apply_distortion(mesh: &Mesh, spec: &DistortionSpec, units: NoiseUnits) -> Result<Mesh> {
    let p = spec.parameter;
    let seed = spec.seed.unwrap_or(0);
    let with_texture = |f: &dyn Fn(&image::RgbImage) -> Result<image::RgbImage>| -> Result<Mesh> {
        let tex = mesh.texture.as_ref().ok_or_else(|| {
            Error::InvalidArgument(format!("{} needs a textured mesh", spec.kind))
        })?;
        let mut out = mesh.clone();
        out.texture = Some(f(tex)?);
        Ok(out)
    };
    match spec.kind {
        DistortionKind::GN => apply_geometry_noise(mesh, p, seed, units),
        DistortionKind::CN => with_texture(&|t| apply_color_noise(t, p, seed)),
        DistortionKind::FS => simplify_mesh(mesh, p),
        DistortionKind::PC => quantize_positions(mesh, p as u32),
        DistortionKind::UMC => quantize_uvs(mesh, p as u32),
        DistortionKind::TD => with_texture(&|t| downsample_texture(t, p as u32)),
        DistortionKind::TC => with_texture(&|t| compress_texture(t, p as u8)),
    }
}

/// One line of the JSON-lines corpus manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub source: String,
    pub kind: DistortionKind,
    pub level: u8,
    pub parameter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Relative to the manifest's directory.
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mos: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<NoiseUnits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl ManifestEntry {
    /// Stable item identifier used to join with MOS tables.
    pub fn item_id(&self) -> String {
        format!("{}_{}{}", self.source, self.kind, self.level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusOptions {
    pub seed: u64,
    pub kinds: Vec<DistortionKind>,
    pub levels: Vec<u8>,
    pub units: NoiseUnits,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            seed: 0,
            kinds: DistortionKind::ALL.to_vec(),
            levels: vec![1, 2, 3, 4],
            units: NoiseUnits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusFailure {
    pub source: String,
    pub kind: Option<DistortionKind>,
    pub level: Option<u8>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub manifest: PathBuf,
    pub entries: Vec<ManifestEntry>,
    pub failures: Vec<CorpusFailure>,
}

/// Per-job seed derived from the corpus seed and the job identity.
pub fn job_seed(seed: u64, source: &str, kind: DistortionKind, level: u8) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(source.as_bytes());
    h.update([0]);
    h.update(kind.to_string().as_bytes());
    h.update([level]);
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Unique identifiers from file stems, suffixing repeats.
fn source_ids(sources: &[PathBuf]) -> Vec<String> {
    let mut seen = std::collections::HashMap::<String, usize>::new();
    sources
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".into());
            let n = seen.entry(stem.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                stem
            } else {
                format!("{stem}_{n}")
            }
        })
        .collect()
}

/// Materializes every requested (source, kind, level) under `out_dir` and
/// writes `manifest.jsonl`. Individual failures are collected, not fatal.
pub fn generate_corpus(
    sources: &[PathBuf],
    out_dir: &Path,
    options: &CorpusOptions,
    config_hash: &str,
) -> Result<CorpusReport> {
    for &l in &options.levels {
        if !(1..=4).contains(&l) {
            return Err(Error::InvalidArgument(format!("level {l} outside 1..=4")));
        }
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ids = source_ids(sources);
    let per_source: Vec<(Vec<ManifestEntry>, Vec<CorpusFailure>)> = sources
        .par_iter()
        .zip(&ids)
        .map(|(path, id)| corpus_for_source(path, id, out_dir, options, config_hash))
        .collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (e, f) in per_source {
        entries.extend(e);
        failures.extend(f);
    }
    let manifest = out_dir.join("manifest.jsonl");
    write_manifest(&manifest, &entries)?;
    Ok(CorpusReport {
        manifest,
        entries,
        failures,
    })
}

fn corpus_for_source(
    path: &Path,
    id: &str,
    out_dir: &Path,
    options: &CorpusOptions,
    config_hash: &str,
) -> (Vec<ManifestEntry>, Vec<CorpusFailure>) {
    let fail = |kind, level, e: Error| CorpusFailure {
        source: id.to_string(),
        kind,
        level,
        error: e.to_string(),
    };
    let mesh = match load_mesh(path) {
        Ok((m, _)) => m,
        Err(e) => return (Vec::new(), vec![fail(None, None, e)]),
    };
    let dir = out_dir.join(id);
    if let Err(e) = fs::create_dir_all(&dir) {
        return (Vec::new(), vec![fail(None, None, Error::io(&dir, e))]);
    }
    let jobs: Vec<(DistortionKind, u8)> = options
        .kinds
        .iter()
        .flat_map(|&k| options.levels.iter().map(move |&l| (k, l)))
        .collect();
    let results: Vec<Result<ManifestEntry, CorpusFailure>> = jobs
        .par_iter()
        .map(|&(kind, level)| {
            let seed = job_seed(options.seed, id, kind, level);
            let spec = DistortionSpec::new(kind, level, seed).map_err(|e| fail(Some(kind), Some(level), e))?;
            let out = apply_distortion(&mesh, &spec, options.units)
                .map_err(|e| fail(Some(kind), Some(level), e))?;
            let name = format!("{id}_{kind}{level}");
            let file = dir.join(format!("{name}.obj"));
            let comment = format!("config {config_hash}\n{id} {kind} level {level} parameter {}", spec.parameter);
            save_mesh(&out, &file, Some(&comment)).map_err(|e| fail(Some(kind), Some(level), e))?;
            Ok(ManifestEntry {
                source: id.to_string(),
                kind,
                level,
                parameter: spec.parameter,
                seed: spec.seed,
                path: format!("{id}/{name}.obj"),
                mos: None,
                units: (kind == DistortionKind::GN).then_some(options.units),
                config_hash: Some(config_hash.to_string()),
            })
        })
        .collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) => entries.push(e),
            Err(f) => failures.push(f),
        }
    }
    (entries, failures)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut out = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut out, e)?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        entries.push(e);
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{human, HumanSpec};

    #[test]
    fn level_tables() {
        assert_eq!(DistortionKind::ALL.len() * 4, 28);
        assert_eq!(DistortionKind::TD.levels(), [2.0, 4.0, 8.0, 16.0]);
        let s = DistortionSpec::new(DistortionKind::GN, 4, 9).unwrap();
        assert_eq!((s.parameter, s.seed), (0.2, Some(9)));
        assert_eq!(DistortionSpec::new(DistortionKind::FS, 1, 9).unwrap().seed, None);
        assert!(DistortionSpec::new(DistortionKind::FS, 5, 9).is_err());
        assert_eq!("umc".parse::<DistortionKind>().unwrap(), DistortionKind::UMC);
        assert!("xx".parse::<DistortionKind>().is_err());
    }

    #[test]
    fn corpus_for_one_source() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("src");
        fs::create_dir_all(&src).unwrap();
        let m = human(&HumanSpec {
            seed: 4,
            target_faces: 1500,
            texture_size: 64,
        });
        save_mesh(&m, src.join("h.obj"), None).unwrap();
        let sources = vec![src.join("h.obj"), src.join("missing.obj")];
        let out = dir.path().join("out");
        let opts = CorpusOptions {
            seed: 3,
            ..Default::default()
        };
        let report = generate_corpus(&sources, &out, &opts, "abc").unwrap();
        assert_eq!(report.entries.len(), 28);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(read_manifest(&report.manifest).unwrap(), report.entries);
        for e in &report.entries {
            assert!(out.join(&e.path).exists(), "{}", e.path);
            assert_eq!(e.seed.is_some(), e.kind.is_stochastic());
        }
    }

    #[test]
    fn untextured_mesh_rejects_texture_kinds() {
        let m = crate::synth::icosphere(1);
        let s = DistortionSpec::new(DistortionKind::TC, 1, 0).unwrap();
        assert!(apply_distortion(&m, &s, NoiseUnits::default()).is_err());
    }
}
