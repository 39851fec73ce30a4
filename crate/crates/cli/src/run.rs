//! Frame and dataset runners with on-disk artifacts and provenance.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use salient_core::eval::{ImageScore, SkippedImage};
use salient_core::imageio::{read_salmap, write_salmap_gray, write_salmap_heatmap};
use salient_core::{evaluate_dataset, run_pipeline, write_tensor, BenchmarkReport, FrameOutputs, OccupancyGrid, SalMap, SensorPose, TensorFile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::dataset::Dataset;

pub const PROVENANCE_FILE: &str = "provenance.toml";
pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
const TOOL: &str = concat!("salient ", env!("CARGO_PKG_VERSION"));

type Prior = (OccupancyGrid, BTreeMap<String, SensorPose>);

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// Digest of a map's exact `f64` values, row-major little-endian.
pub fn map_digest(map: &SalMap) -> String {
    let mut h = Sha256::new();
    h.update((map.width() as u64).to_le_bytes());
    h.update((map.height() as u64).to_le_bytes());
    for v in map.as_slice() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to reproduce a frame's outputs bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: String,
    pub frame_id: String,
    pub variant: String,
    pub space_saliency: bool,
    pub normals_degenerate: bool,
    /// Digest of the final map before 8-bit quantization.
    pub final_digest: String,
    pub runtime_s: f64,
    /// Canonical configuration the frame ran with.
    pub config: String,
    pub inputs: BTreeMap<String, InputRecord>,
    pub outputs: BTreeMap<String, String>,
}

impl Provenance {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("malformed provenance {}", path.display()))
    }
}

/// Named maps written for every frame, final first.
pub fn named_maps(o: &FrameOutputs) -> [(&'static str, &SalMap); 9] {
    [
        ("final", &o.final_map),
        ("rgb_top_down", &o.top_down),
        ("rgb_bottom_up", &o.bottom_up),
        ("rgb", &o.rgb),
        ("depth", &o.depth),
        ("center_bias", &o.center_bias),
        ("normals", &o.normals),
        ("rgbd", &o.rgbd),
        ("space", &o.space),
    ]
}

/// Config text that determines frame outputs; paths are dropped.
pub fn canonical_config(cfg: &Config) -> String {
    let mut c = cfg.clone();
    c.dataset = None;
    c.out = None;
    c.to_toml()
}

#[derive(Debug, Clone)]
pub struct FrameResult {
    pub id: String,
    /// Outputs were already up to date and nothing was recomputed.
    pub reused: bool,
    pub provenance: Provenance,
}

pub fn frame_dir(out: &Path, id: &str) -> PathBuf {
    out.join(id)
}

/// Runs the pipeline on one frame in memory.
pub fn compute_frame(cfg: &Config, ds: &Dataset, id: &str, prior: Option<&Prior>) -> Result<FrameOutputs> {
    let inputs = ds.load_frame(id, cfg, prior)?;
    let out = run_pipeline(&inputs, &cfg.params()).with_context(|| format!("frame {id}"))?;
    if cfg!(debug_assertions) {
        for (name, m) in named_maps(&out) {
            debug_assert!(m.as_slice().iter().all(|v| (0.0..=1.0).contains(v)), "{name} map left [0, 1]");
        }
    }
    Ok(out)
}

fn hash_inputs(files: &BTreeMap<String, PathBuf>) -> Result<BTreeMap<String, InputRecord>> {
    files
        .iter()
        .map(|(role, path)| {
            Ok((
                role.clone(),
                InputRecord {
                    path: path.clone(),
                    sha256: file_sha256(path)?,
                },
            ))
        })
        .collect()
}

fn up_to_date(dir: &Path, config: &str, inputs: &BTreeMap<String, InputRecord>) -> Option<Provenance> {
    let p = Provenance::load(&dir.join(PROVENANCE_FILE)).ok()?;
    if p.tool != TOOL || p.config != config || &p.inputs != inputs {
        return None;
    }
    for (name, digest) in &p.outputs {
        if file_sha256(&dir.join(name)).ok()? != *digest {
            return None;
        }
    }
    Some(p)
}

/// Runs one frame and writes its maps and provenance under `out/<id>/`.
/// Frames whose provenance matches the current config and inputs are
/// skipped unless `force` is set.
pub fn run_frame(cfg: &Config, ds: &Dataset, id: &str, prior: Option<&Prior>, out: &Path, force: bool) -> Result<FrameResult> {
    let files = ds.frame_files(id, cfg)?;
    let inputs = hash_inputs(&files)?;
    let config = canonical_config(cfg);
    let dir = frame_dir(out, id);
    if !force {
        if let Some(provenance) = up_to_date(&dir, &config, &inputs) {
            log::info!("frame {id}: up to date");
            return Ok(FrameResult {
                id: id.to_string(),
                reused: true,
                provenance,
            });
        }
    }
    let start = Instant::now();
    let maps = compute_frame(cfg, ds, id, prior)?;
    let runtime_s = start.elapsed().as_secs_f64();

    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    // A stale provenance must not survive a partial rewrite.
    let _ = fs::remove_file(dir.join(PROVENANCE_FILE));
    let mut written = Vec::new();
    for (name, m) in named_maps(&maps) {
        let gray = format!("{name}.png");
        let heat = format!("{name}_heat.png");
        write_salmap_gray(m, dir.join(&gray))?;
        write_salmap_heatmap(m, dir.join(&heat))?;
        written.extend([gray, heat]);
    }
    let f = &maps.final_map;
    let tensor = TensorFile::new(
        vec![f.height(), f.width()],
        f.as_slice().iter().map(|&v| v as f32).collect(),
    )?;
    write_tensor(&tensor, dir.join("final.smt"))?;
    written.push("final.smt".to_string());
    let outputs = written
        .into_iter()
        .map(|n| Ok((n.clone(), file_sha256(&dir.join(&n))?)))
        .collect::<Result<_>>()?;

    let provenance = Provenance {
        tool: TOOL.to_string(),
        frame_id: id.to_string(),
        variant: cfg.variant.as_str().to_string(),
        space_saliency: cfg.space_saliency,
        normals_degenerate: maps.normals_degenerate,
        final_digest: map_digest(f),
        runtime_s,
        config,
        inputs,
        outputs,
    };
    let text = toml::to_string(&provenance).context("serializing provenance")?;
    let path = dir.join(PROVENANCE_FILE);
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    log::info!("frame {id}: {runtime_s:.2} s");
    Ok(FrameResult {
        id: id.to_string(),
        reused: false,
        provenance,
    })
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub force: bool,
    /// Worker threads; 0 picks one per core.
    pub jobs: usize,
}

#[derive(Debug, Clone)]
pub struct DatasetRun {
    pub report: BenchmarkReport,
    pub computed: usize,
    pub reused: usize,
}

/// Runs every frame, scores the written 8-bit maps against the ground
/// truth and writes `report.csv` and `summary.txt` into the output root.
pub fn run_dataset(cfg: &Config, ds: &Dataset, opts: &RunOptions) -> Result<DatasetRun> {
    if ds.ids().is_empty() {
        bail!("dataset {} has no frames under rgb/", ds.root().display());
    }
    let prior = if cfg.space_saliency { Some(ds.space_prior()?) } else { None };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .context("cannot start worker pool")?;
    let results: Vec<(String, Result<FrameResult>)> = pool.install(|| {
        ds.ids()
            .par_iter()
            .map(|id| (id.clone(), run_frame(cfg, ds, id, prior.as_ref(), &opts.out, opts.force)))
            .collect()
    });

    let mut skipped = Vec::new();
    let mut pairs = Vec::new();
    let mut runtimes = Vec::new();
    let (mut computed, mut reused) = (0, 0);
    for (id, r) in results {
        let loaded = r.and_then(|fr| {
            if fr.reused {
                reused += 1;
            } else {
                computed += 1;
            }
            runtimes.push(fr.provenance.runtime_s);
            let map = read_salmap(frame_dir(&opts.out, &id).join("final.png"))?;
            Ok((map, ds.load_mask(&id)?))
        });
        match loaded {
            Ok((map, mask)) => pairs.push((id, map, mask)),
            Err(e) => {
                log::warn!("skipping frame {id}: {e:#}");
                skipped.push(SkippedImage {
                    image_id: id,
                    reason: format!("{e:#}"),
                });
            }
        }
    }
    let mut report = if pairs.is_empty() {
        BenchmarkReport::default()
    } else {
        evaluate_dataset(&pairs, cfg.thresholds)?
    };
    report.skipped.extend(skipped);
    report.skipped.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    report.runtimes = runtimes;
    write_report(&report, &opts.out, &run_header(cfg))?;
    Ok(DatasetRun { report, computed, reused })
}

fn run_header(cfg: &Config) -> String {
    format!(
        "variant: {}\nspace saliency: {}\n",
        cfg.variant.as_str(),
        if cfg.space_saliency { "on" } else { "off" }
    )
}

pub fn write_report(report: &BenchmarkReport, dir: &Path, header: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    report.write_csv(dir.join(REPORT_FILE))?;
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, format!("{header}{}", report.summary())).with_context(|| format!("cannot write {}", path.display()))
}

/// Scores saved predictions against a directory of ground-truth masks.
/// A prediction for `<id>` is `pred/<id>.png` or `pred/<id>/final.png`.
pub fn evaluate_predictions(pred: &Path, gt: &Path, thresholds: usize) -> Result<BenchmarkReport> {
    let mut ids = Vec::new();
    for e in fs::read_dir(gt).with_context(|| format!("cannot list ground truth {}", gt.display()))? {
        let path = e?.path();
        if path.extension().and_then(|x| x.to_str()) == Some("png") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push(stem.to_string());
            }
        }
    }
    if ids.is_empty() {
        bail!("no ground-truth masks in {}", gt.display());
    }
    ids.sort();
    let loaded: Vec<(String, Result<(SalMap, salient_core::Mask)>)> = ids
        .par_iter()
        .map(|id| {
            let r = (|| {
                let flat = pred.join(format!("{id}.png"));
                let nested = pred.join(id).join("final.png");
                let p = if flat.is_file() { flat } else { nested };
                if !p.is_file() {
                    bail!("no prediction {} or {}", pred.join(format!("{id}.png")).display(), p.display());
                }
                let map = read_salmap(&p)?;
                let mask = salient_core::imageio::read_mask(gt.join(format!("{id}.png")))?;
                Ok((map, mask))
            })();
            (id.clone(), r)
        })
        .collect();
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (id, r) in loaded {
        match r {
            Ok((m, g)) => pairs.push((id, m, g)),
            Err(e) => skipped.push(SkippedImage {
                image_id: id,
                reason: format!("{e:#}"),
            }),
        }
    }
    let mut report = if pairs.is_empty() {
        BenchmarkReport::default()
    } else {
        evaluate_dataset(&pairs, thresholds)?
    };
    report.skipped.extend(skipped);
    report.skipped.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(report)
}

/// Reads a `image_id,auc` report back.
pub fn read_report_csv(path: &Path) -> Result<Vec<ImageScore>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    if lines.next() != Some("image_id,auc") {
        bail!("{} lacks the image_id,auc header", path.display());
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (id, auc) = l.rsplit_once(',').with_context(|| format!("bad report line {l:?}"))?;
            Ok(ImageScore {
                image_id: id.to_string(),
                auc: auc.parse().with_context(|| format!("bad AUC in {l:?}"))?,
            })
        })
        .collect()
}
