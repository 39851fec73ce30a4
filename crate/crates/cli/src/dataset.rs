//! On-disk dataset layout.
//!
//! ```text
//! <root>/rgb/<id>.png            8-bit color frame
//! <root>/depth/<id>.png          16-bit depth, raw units scaled by `depth_scale`
//! <root>/gt/<id>.png             8-bit mask, foreground above 127
//! <root>/scores/<id>/manifest.txt  score stack (objectness variants)
//! <root>/gbp/<id>/manifest.txt     gradient stack (gbp variant)
//! <root>/map/map.yaml            prior occupancy map (space saliency)
//! <root>/poses/poses.txt         `id x y theta height tilt` per frame
//! ```
//!
//! Frame ids are the file stems under `rgb/`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use salient_core::imageio::{read_depth, read_mask, read_rgb};
use salient_core::space::{read_map, read_poses};
use salient_core::stack_io::{read_gradient_stack, read_score_stack, GRADIENT_MANIFEST, SCORE_MANIFEST};
use salient_core::{FrameInputs, Mask, OccupancyGrid, SensorPose, SpaceInputs, Variant};

use crate::config::Config;

#[derive(Debug, Clone)]
pub struct Dataset {
    root: PathBuf,
    ids: Vec<String>,
}

impl Dataset {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let rgb = root.join("rgb");
        let entries = fs::read_dir(&rgb)
            .with_context(|| format!("dataset {} has no rgb/ directory", root.display()))?;
        let mut ids = Vec::new();
        for e in entries {
            let path = e?.path();
            if path.extension().and_then(|x| x.to_str()) == Some("png") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(Self { root, ids })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Resolves a frame by id, or by position in id order when `key` is a
    /// number that is not itself an id.
    pub fn resolve(&self, key: &str) -> Result<String> {
        if self.ids.iter().any(|i| i == key) {
            return Ok(key.to_string());
        }
        if let Ok(n) = key.parse::<usize>() {
            if let Some(id) = self.ids.get(n) {
                return Ok(id.clone());
            }
        }
        bail!(
            "frame {key:?} not found: no {} and {} frames in the dataset",
            self.rgb_path(key).display(),
            self.ids.len()
        )
    }

    pub fn rgb_path(&self, id: &str) -> PathBuf {
        self.root.join("rgb").join(format!("{id}.png"))
    }

    pub fn depth_path(&self, id: &str) -> PathBuf {
        self.root.join("depth").join(format!("{id}.png"))
    }

    pub fn gt_path(&self, id: &str) -> PathBuf {
        self.root.join("gt").join(format!("{id}.png"))
    }

    pub fn score_manifest(&self, id: &str) -> PathBuf {
        self.root.join("scores").join(id).join(SCORE_MANIFEST)
    }

    pub fn gradient_manifest(&self, id: &str) -> PathBuf {
        self.root.join("gbp").join(id).join(GRADIENT_MANIFEST)
    }

    pub fn map_path(&self) -> PathBuf {
        self.root.join("map").join("map.yaml")
    }

    pub fn poses_path(&self) -> PathBuf {
        self.root.join("poses").join("poses.txt")
    }

    /// Every file a frame reads under `cfg`, keyed by a short role name.
    /// Missing required files are reported by name.
    pub fn frame_files(&self, id: &str, cfg: &Config) -> Result<BTreeMap<String, PathBuf>> {
        let mut files = BTreeMap::new();
        files.insert("rgb".to_string(), self.rgb_path(id));
        files.insert("depth".to_string(), self.depth_path(id));
        match cfg.variant {
            Variant::Gbp => {
                let m = self.gradient_manifest(id);
                files.extend(stack_files(&m, "gradient manifest")?.into_iter().map(|(k, v)| (format!("gbp/{k}"), v)));
            }
            Variant::Objectness | Variant::NonObjectness => {
                let m = self.score_manifest(id);
                files.extend(stack_files(&m, "score manifest")?.into_iter().map(|(k, v)| (format!("scores/{k}"), v)));
            }
        }
        if cfg.space_saliency {
            files.insert("map".to_string(), self.map_path());
            if let Ok(text) = fs::read_to_string(self.map_path()) {
                if let Some(img) = text.lines().find_map(|l| l.trim().strip_prefix("image:")) {
                    files.insert("map/image".to_string(), self.root.join("map").join(img.trim()));
                }
            }
            files.insert("poses".to_string(), self.poses_path());
        }
        for (role, path) in &files {
            if !path.is_file() {
                bail!("frame {id}: missing {role} file {}", path.display());
            }
        }
        Ok(files)
    }

    /// Prior map and all poses, loaded once per run.
    pub fn space_prior(&self) -> Result<(OccupancyGrid, BTreeMap<String, SensorPose>)> {
        let map = self.map_path();
        if !map.is_file() {
            bail!("space saliency needs the prior map {}", map.display());
        }
        let poses = self.poses_path();
        if !poses.is_file() {
            bail!("space saliency needs the pose file {}", poses.display());
        }
        let grid = read_map(&map).with_context(|| format!("loading {}", map.display()))?;
        let poses = read_poses(&poses).with_context(|| format!("loading {}", poses.display()))?;
        Ok((grid, poses))
    }

    pub fn load_frame(&self, id: &str, cfg: &Config, prior: Option<&(OccupancyGrid, BTreeMap<String, SensorPose>)>) -> Result<FrameInputs> {
        let rgb = read_rgb(self.rgb_path(id)).with_context(|| format!("frame {id}: rgb"))?;
        let depth = read_depth(self.depth_path(id), cfg.depth_scale).with_context(|| format!("frame {id}: depth"))?;
        let (mut scores, mut gradients) = (None, None);
        match cfg.variant {
            Variant::Gbp => {
                let m = self.gradient_manifest(id);
                if !m.is_file() {
                    bail!("frame {id}: gbp variant needs the gradient manifest {}", m.display());
                }
                gradients = Some(read_gradient_stack(&m).with_context(|| format!("frame {id}: gradients"))?);
            }
            Variant::Objectness | Variant::NonObjectness => {
                let m = self.score_manifest(id);
                if !m.is_file() {
                    bail!("frame {id}: {} variant needs the score manifest {}", cfg.variant.as_str(), m.display());
                }
                scores = Some(read_score_stack(&m).with_context(|| format!("frame {id}: scores"))?.0);
            }
        }
        let space = match (cfg.space_saliency, prior) {
            (false, _) => None,
            (true, None) => bail!("space saliency enabled but no prior map loaded"),
            (true, Some((grid, poses))) => {
                let pose = poses
                    .get(id)
                    .with_context(|| format!("frame {id}: no pose in {}", self.poses_path().display()))?;
                Some(SpaceInputs { grid: grid.clone(), pose: *pose })
            }
        };
        Ok(FrameInputs {
            rgb,
            depth,
            intrinsics: cfg.intrinsics,
            scores,
            gradients,
            space,
        })
    }

    pub fn load_mask(&self, id: &str) -> Result<Mask> {
        let p = self.gt_path(id);
        read_mask(&p).with_context(|| format!("ground truth {}", p.display()))
    }
}

/// The manifest plus every tensor it names.
fn stack_files(manifest: &Path, what: &str) -> Result<BTreeMap<String, PathBuf>> {
    let text = fs::read_to_string(manifest).with_context(|| format!("missing {what} {}", manifest.display()))?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let mut out = BTreeMap::new();
    out.insert("manifest.txt".to_string(), manifest.to_path_buf());
    for line in text.lines() {
        let toks: Vec<&str> = line.split('#').next().unwrap_or("").split_whitespace().collect();
        if toks.first() == Some(&"tensor") {
            if let Some(name) = toks.last() {
                out.insert(name.to_string(), dir.join(name));
            }
        }
    }
    Ok(out)
}
