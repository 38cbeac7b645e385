use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use dhqi_core::distort::{generate_corpus, read_manifest, CorpusOptions, DistortionKind, NoiseUnits};
use dhqi_core::eval::{
    compute_mos, read_mos_csv, run_benchmark, BenchmarkItem, Method, RatingsMatrix, Screening,
    SvrParams,
};
use dhqi_core::mesh::load_mesh;
use dhqi_core::niqe::{fit_pristine_model, MvgModel};
use dhqi_core::provenance::{config_hash, VERSION};
use dhqi_core::quality::{score_mesh, QualityReport, ScoreConfig};
use dhqi_core::raster::{load_rgb, save_png};
use dhqi_core::render::{render_cube_projections, RenderConfig};
use dhqi_core::semantic::{EmbeddingProvider, PromptPairSet, Subject};
use dhqi_core::Error;

use super::embedder::EmbedderSpec;
use super::{
    BenchmarkArgs, CharacterizeArgs, Command, DistortArgs, FitNiqeArgs, RenderArgs, RenderOptions,
    ScoreArgs, ScoringOptions,
};

pub enum Outcome {
    Complete,
    /// Some items of a batch failed; the rest were written.
    Partial,
}

pub enum Failure {
    Usage(String),
    Fatal(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Fatal(e)
    }
}

type Run = Result<Outcome, Failure>;

pub fn run(command: Command) -> Run {
    match command {
        Command::Characterize(a) => characterize(a),
        Command::Render(a) => render(a),
        Command::Distort(a) => distort(a),
        Command::FitNiqe(a) => fit_niqe(a),
        Command::Score(a) => score(a),
        Command::Benchmark(a) => benchmark(a),
    }
}

fn outcome(failures: usize) -> Outcome {
    if failures == 0 {
        Outcome::Complete
    } else {
        Outcome::Partial
    }
}

fn has_ext(p: &Path, exts: &[&str]) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// Files as given, directories expanded to their matching children (sorted).
fn collect_inputs(inputs: &[PathBuf], exts: &[&str]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && has_ext(f, exts))
                .collect();
            found.sort();
            out.extend(found);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(Failure::Usage(format!("{} does not exist", p.display())));
        }
    }
    if out.is_empty() {
        return Err(Failure::Usage(format!(
            "no input files with extension {}",
            exts.join("/")
        )));
    }
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into())
}

fn write_out(out: Option<&Path>, body: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| Error::io(p, e).into()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| Error::io("<stdout>", e).into())
        }
    }
}

fn to_json<T: Serialize>(v: &T, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(v).expect("serializable")
    } else {
        serde_json::to_string(v).expect("serializable")
    }
}

fn report_failures(failures: &[(String, String)]) {
    for (item, err) in failures {
        eprintln!("{}", json!({ "item": item, "error": err }));
    }
}

fn characterize(a: CharacterizeArgs) -> Run {
    let files = collect_inputs(&a.inputs, &["obj"])?;
    let hash = config_hash(&json!({ "command": "characterize", "version": VERSION }));
    let results: Vec<_> = files
        .par_iter()
        .map(|p| load_mesh(p).and_then(|(m, _)| m.characterize()))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::Fatal(Error::InvalidArgument(format!("csv: {e}")));
    w.write_record(["model", "gi", "cf", "config_hash"]).map_err(csv_err)?;
    let mut failures = Vec::new();
    for (p, r) in files.iter().zip(results) {
        match r {
            Ok(c) => w
                .write_record([stem(p), c.gi.to_string(), c.cf.to_string(), hash.clone()])
                .map_err(csv_err)?,
            Err(e) => failures.push((p.display().to_string(), e.to_string())),
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    write_out(a.out.as_deref(), &String::from_utf8_lossy(&bytes))?;
    report_failures(&failures);
    Ok(outcome(failures.len()))
}

fn render_config(o: &RenderOptions) -> Result<RenderConfig, Failure> {
    let cfg = RenderConfig {
        canvas: o.canvas,
        downsample_to: o.downsample,
        ..RenderConfig::default()
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn render(a: RenderArgs) -> Run {
    if !a.mesh.is_file() {
        return Err(Failure::Usage(format!("{} does not exist", a.mesh.display())));
    }
    let cfg = render_config(&a.render)?;
    let hash = config_hash(&json!({ "command": "render", "render": cfg, "version": VERSION }));
    let (mesh, _) = load_mesh(&a.mesh)?;
    let set = render_cube_projections(&mesh, &cfg)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let name = stem(&a.mesh);
    let mut views = Vec::new();
    for v in &set.views {
        let file = format!("{name}_{}.png", v.axis.label());
        save_png(&v.image, a.out_dir.join(&file), &[("config_hash", &hash)])?;
        views.push(json!({
            "axis": v.axis.label(),
            "file": file,
            "width": v.image.width(),
            "height": v.image.height(),
            "empty": v.empty_content,
        }));
    }
    let meta = json!({
        "model": name,
        "untextured": set.untextured,
        "views": views,
        "render": cfg,
        "config_hash": hash,
        "version": VERSION,
    });
    let path = a.out_dir.join(format!("{name}_views.json"));
    fs::write(&path, to_json(&meta, true)).map_err(|e| Error::io(&path, e))?;
    Ok(Outcome::Complete)
}

fn distort(a: DistortArgs) -> Run {
    let sources = collect_inputs(&a.sources, &["obj"])?;
    let kinds = match &a.kinds {
        Some(ks) => ks
            .iter()
            .map(|k| k.parse::<DistortionKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Usage(e.to_string()))?,
        None => DistortionKind::ALL.to_vec(),
    };
    let levels = a.levels.clone().unwrap_or_else(|| vec![1, 2, 3, 4]);
    if let Some(l) = levels.iter().find(|l| !(1..=4).contains(*l)) {
        return Err(Failure::Usage(format!("level {l} outside 1..=4")));
    }
    let units: NoiseUnits = serde_json::from_value(json!(a.units))
        .map_err(|_| Failure::Usage(format!("unknown noise units {:?}", a.units)))?;
    let options = CorpusOptions {
        seed: a.seed,
        kinds,
        levels,
        units,
    };
    let hash = config_hash(&json!({
        "command": "distort",
        "seed": options.seed,
        "kinds": options.kinds,
        "levels": options.levels,
        "units": options.units,
        "version": VERSION,
    }));
    let report = generate_corpus(&sources, &a.out, &options, &hash)?;
    let summary = json!({
        "manifest": report.manifest,
        "entries": report.entries.len(),
        "failures": report.failures,
        "config_hash": hash,
    });
    println!("{}", to_json(&summary, true));
    Ok(outcome(report.failures.len()))
}

fn fit_niqe(a: FitNiqeArgs) -> Run {
    let roots: Vec<PathBuf> = a.corpus.iter().chain(&a.inputs).cloned().collect();
    let files = collect_inputs(&roots, &["png", "jpg", "jpeg", "bmp", "tif", "tiff"])?;
    let images = files
        .par_iter()
        .map(|p| load_rgb(p))
        .collect::<Result<Vec<_>, _>>()?;
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    let hash = config_hash(&json!({ "command": "fit-niqe", "images": names, "version": VERSION }));
    let model = fit_pristine_model(&images)?;
    let body = format!(
        "{}# pristine NIQE model fitted on {} images\n# config_hash {hash}\n",
        model.to_text(),
        images.len()
    );
    fs::write(&a.out, body).map_err(|e| Error::io(&a.out, e))?;
    println!(
        "{}",
        to_json(
            &json!({ "model": a.out, "id": model.id(), "images": images.len(), "config_hash": hash }),
            true
        )
    );
    Ok(Outcome::Complete)
}

struct Scorer {
    config: ScoreConfig,
    provider: Option<Box<dyn EmbeddingProvider>>,
    niqe: MvgModel,
}

impl Scorer {
    fn new(o: &ScoringOptions) -> Result<Self, Failure> {
        let subject = match o.subject.to_ascii_lowercase().as_str() {
            "body" => Subject::Body,
            "face" => Subject::Face,
            s => return Err(Failure::Usage(format!("unknown subject {s:?}; body or face"))),
        };
        let prompts = match &o.prompts {
            Some(p) if !p.is_file() => {
                return Err(Failure::Usage(format!("{} does not exist", p.display())))
            }
            Some(p) => PromptPairSet::load(p, subject)?,
            None => PromptPairSet::default_for(subject),
        };
        if !(o.c1 > 0.0 && o.c1.is_finite()) {
            return Err(Failure::Usage(format!("--c1 {} must be positive", o.c1)));
        }
        let niqe = match &o.niqe_model {
            Some(p) if !p.is_file() => {
                return Err(Failure::Usage(format!("{} does not exist", p.display())))
            }
            Some(p) => MvgModel::load(p)?,
            None => MvgModel::shipped(),
        };
        let provider = EmbedderSpec::resolve(o.embedder.clone()).build()?;
        if provider.is_none() {
            log::warn!("no embedder configured; semantic affinity is excluded from the index");
        }
        Ok(Scorer {
            config: ScoreConfig {
                render: render_config(&o.render)?,
                prompts,
                c1: o.c1,
            },
            provider,
            niqe,
        })
    }

    fn score(&self, name: &str, path: &Path) -> Result<QualityReport, Error> {
        let (mesh, _) = load_mesh(path)?;
        score_mesh(name, &mesh, &self.config, self.provider.as_deref(), &self.niqe)
    }
}

fn score(a: ScoreArgs) -> Run {
    for m in &a.meshes {
        if !m.is_file() {
            return Err(Failure::Usage(format!("{} does not exist", m.display())));
        }
    }
    let scorer = Scorer::new(&a.scoring)?;
    let results: Vec<_> = a
        .meshes
        .par_iter()
        .map(|p| scorer.score(&stem(p), p))
        .collect();
    let mut body = String::new();
    let mut failures = Vec::new();
    let single = a.meshes.len() == 1;
    for (p, r) in a.meshes.iter().zip(results) {
        match r {
            Ok(rep) => {
                body.push_str(&to_json(&rep, single));
                body.push('\n');
            }
            Err(e) => failures.push((p.display().to_string(), e.to_string())),
        }
    }
    if single && !failures.is_empty() {
        return Err(Failure::Fatal(Error::InvalidArgument(format!(
            "{}: {}",
            failures[0].0, failures[0].1
        ))));
    }
    write_out(a.out.as_deref(), &body)?;
    report_failures(&failures);
    Ok(outcome(failures.len()))
}

fn benchmark(a: BenchmarkArgs) -> Run {
    if !a.manifest.is_file() {
        return Err(Failure::Usage(format!("{} does not exist", a.manifest.display())));
    }
    let method: Method = a.mode.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let svr = SvrParams {
        c: a.svr_c,
        epsilon: a.svr_epsilon,
        gamma: a.svr_gamma,
        ..SvrParams::default()
    };
    let entries = read_manifest(&a.manifest)?;
    let base = a.manifest.parent().unwrap_or(Path::new(".")).to_path_buf();

    let table: Option<BTreeMap<String, f64>> = match (&a.mos, &a.ratings) {
        (Some(p), _) => Some(read_mos_csv(p)?),
        (None, Some(p)) => {
            let screening = a.screen.map(|threshold| Screening { threshold });
            let t = compute_mos(&RatingsMatrix::from_csv(p)?, screening)?;
            if !t.rejected.is_empty() {
                log::info!("screening rejected {} subjects: {:?}", t.rejected.len(), t.rejected);
            }
            Some(t.mos)
        }
        (None, None) => None,
    };
    let mut missing = Vec::new();
    let mut jobs = Vec::new();
    for e in &entries {
        let id = e.item_id();
        let path = base.join(&e.path);
        let mos = match &table {
            Some(t) => t.get(&id).or_else(|| t.get(&stem(&path))).copied(),
            None => e.mos,
        };
        match mos {
            Some(m) => jobs.push((id, e.source.clone(), path, m)),
            None => missing.push(id),
        }
    }
    if !missing.is_empty() {
        let shown: Vec<_> = missing.iter().take(10).cloned().collect();
        return Err(Failure::Fatal(Error::InsufficientData(format!(
            "{} items have no MOS: {}{}",
            missing.len(),
            shown.join(", "),
            if missing.len() > 10 { ", ..." } else { "" }
        ))));
    }

    let scorer = Scorer::new(&a.scoring)?;
    let scored: Vec<_> = jobs
        .par_iter()
        .map(|(id, _, path, _)| scorer.score(id, path))
        .collect();
    let mut items = Vec::new();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for ((id, source, _, mos), r) in jobs.into_iter().zip(scored) {
        match r {
            Ok(rep) => {
                let mut features: Vec<f64> = rep.q_a.into_iter().collect();
                features.extend([rep.q_n, rep.q_g]);
                items.push(BenchmarkItem {
                    id,
                    source,
                    mos,
                    features,
                    score: rep.q_dhqi,
                });
                reports.push(rep);
            }
            Err(e) => failures.push((id, e.to_string())),
        }
    }
    if let Some(p) = &a.scores_out {
        let body: String = reports.iter().map(|r| to_json(r, false) + "\n").collect();
        fs::write(p, body).map_err(|e| Error::io(p, e))?;
    }
    let hash = config_hash(&json!({
        "command": "benchmark",
        "score": config_hash(&scorer.config),
        "provider": scorer.provider.as_ref().map(|p| p.id()),
        "niqe_model": scorer.niqe.id(),
        "mode": method,
        "k": a.k,
        "seed": a.seed,
        "svr": svr,
        "version": VERSION,
    }));
    let report = run_benchmark(&items, method, a.k, a.seed, &svr)?;
    let failure_list: Vec<_> = failures
        .iter()
        .map(|(item, error)| json!({ "item": item, "error": error }))
        .collect();
    let out = json!({
        "report": report,
        "failures": failure_list,
        "provider": scorer.provider.as_ref().map(|p| p.id()),
        "niqe_model": scorer.niqe.id(),
        "config_hash": hash,
        "version": VERSION,
    });
    write_out(a.out.as_deref(), &(to_json(&out, true) + "\n"))?;
    report_failures(&failures);
    Ok(outcome(failures.len()))
}
