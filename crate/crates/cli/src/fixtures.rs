//! Deterministic synthetic dataset: a small room with a known cabinet and
//! one new box per frame, plus the score and gradient stacks a network
//! would produce for it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salient_core::imageio::{write_depth, write_mask, write_rgb};
use salient_core::pooling::ChannelTensor;
use salient_core::space::{write_map, Cell};
use salient_core::stack_io::{write_gradient_stack, write_score_stack};
use salient_core::{
    CameraIntrinsics, DepthMap, GradientLayer, GradientStack, Grid, Mask, OccupancyGrid, RgbImage, ScoreMapStack,
    SensorPose,
};

use crate::config::Config;

pub const FRAMES: usize = 10;
pub const WIDTH: usize = 320;
pub const HEIGHT: usize = 240;
pub const GBP_LAYERS: [(u32, usize); 3] = [(3, 4), (4, 8), (5, 16)];
const GBP_CHANNELS: usize = 4;
const SEED: u64 = 0x5eed_0bec7;
const MAX_RANGE: f64 = 8.0;

const CLASSES: [&str; 20] = [
    "aeroplane", "bicycle", "bird", "boat", "bottle", "bus", "car", "cat", "chair", "cow",
    "diningtable", "dog", "horse", "motorbike", "person", "pottedplant", "sheep", "sofa", "train", "tvmonitor",
];
const BOX_CLASSES: [usize; 3] = [4, 8, 19];
const CABINET_CLASS: usize = 10;
const PALETTE: [[f64; 3]; 5] = [
    [225.0, 40.0, 35.0],
    [35.0, 175.0, 70.0],
    [40.0, 85.0, 225.0],
    [235.0, 205.0, 30.0],
    [205.0, 60.0, 205.0],
];

pub fn intrinsics() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 262.5,
        fy: 262.5,
        cx: 159.5,
        cy: 119.5,
    }
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Aabb {
    /// Entry distance and outward face normal along `o + t d`.
    fn hit(&self, o: [f64; 3], d: [f64; 3]) -> Option<(f64, [f64; 3])> {
        let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
        let mut normal = [0.0; 3];
        for k in 0..3 {
            if d[k].abs() < 1e-15 {
                if o[k] < self.lo[k] || o[k] > self.hi[k] {
                    return None;
                }
                continue;
            }
            let (a, b) = ((self.lo[k] - o[k]) / d[k], (self.hi[k] - o[k]) / d[k]);
            let near = a.min(b);
            if near > t0 {
                t0 = near;
                normal = [0.0; 3];
                normal[k] = -d[k].signum();
            }
            t1 = t1.min(a.max(b));
        }
        (t0 <= t1 && t0 > 0.0).then_some((t0, normal))
    }
}

// Room interior: x in [-2.4, 2.4], y in [-2, 2], walls beyond.
const BACK_WALL: f64 = 2.4;
const SIDE_WALL: f64 = 2.0;
const CABINET: Aabb = Aabb {
    lo: [1.3, 0.7, 0.0],
    hi: [1.9, 1.3, 0.9],
};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Surface {
    Floor,
    BackWall,
    SideWall,
    Cabinet,
    Box,
}

struct Scene {
    pose: SensorPose,
    boxed: Aabb,
    color: [f64; 3],
    class: usize,
}

/// Camera axes (right, down, forward) in world coordinates.
fn axes(pose: &SensorPose) -> [[f64; 3]; 3] {
    let (st, ct) = pose.sensor_tilt.sin_cos();
    let (sh, ch) = pose.theta.sin_cos();
    [[sh, -ch, 0.0], [-st * ch, -st * sh, -ct], [ct * ch, ct * sh, -st]]
}

fn trace(scene: &Scene, o: [f64; 3], d: [f64; 3]) -> Option<(f64, Surface, [f64; 3])> {
    let mut best: Option<(f64, Surface, [f64; 3])> = None;
    let mut offer = |t: f64, s: Surface, n: [f64; 3]| {
        if t > 0.0 && best.is_none_or(|b| t < b.0) {
            best = Some((t, s, n));
        }
    };
    if d[2] < 0.0 {
        offer(-o[2] / d[2], Surface::Floor, [0.0, 0.0, 1.0]);
    }
    if d[0] > 0.0 {
        offer((BACK_WALL - o[0]) / d[0], Surface::BackWall, [-1.0, 0.0, 0.0]);
    }
    if d[1] > 0.0 {
        offer((SIDE_WALL - o[1]) / d[1], Surface::SideWall, [0.0, -1.0, 0.0]);
    } else if d[1] < 0.0 {
        offer((-SIDE_WALL - o[1]) / d[1], Surface::SideWall, [0.0, 1.0, 0.0]);
    }
    if let Some((t, n)) = CABINET.hit(o, d) {
        offer(t, Surface::Cabinet, n);
    }
    if let Some((t, n)) = scene.boxed.hit(o, d) {
        offer(t, Surface::Box, n);
    }
    best
}

struct Frame {
    rgb: RgbImage,
    depth: DepthMap,
    surface: Vec<Option<Surface>>,
}

fn render(scene: &Scene, rng: &mut ChaCha8Rng) -> Frame {
    let k = intrinsics();
    let [r, dn, f] = axes(&scene.pose);
    let o = [scene.pose.x, scene.pose.y, scene.pose.sensor_height];
    let light = {
        let l = [-0.45, 0.35, 0.82];
        let n = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2] as f64).sqrt();
        [l[0] / n, l[1] / n, l[2] / n]
    };
    let mut rgb = RgbImage::new(WIDTH as u32, HEIGHT as u32);
    let mut depth = vec![0.0; WIDTH * HEIGHT];
    let mut surface = vec![None; WIDTH * HEIGHT];
    for py in 0..HEIGHT {
        for px in 0..WIDTH {
            let u = (px as f64 - k.cx) / k.fx;
            let w = (py as f64 - k.cy) / k.fy;
            let d = [0, 1, 2].map(|i| r[i] * u + dn[i] * w + f[i]);
            let Some((t, s, n)) = trace(scene, o, d) else {
                continue;
            };
            let p = [0, 1, 2].map(|i| o[i] + t * d[i]);
            let base = match s {
                Surface::Floor => {
                    // Faint tiles so the floor is not a flat field.
                    let tile = ((p[0] / 0.5).floor() + (p[1] / 0.5).floor()).rem_euclid(2.0);
                    [118.0 + 6.0 * tile, 112.0 + 6.0 * tile, 104.0 + 6.0 * tile]
                }
                Surface::BackWall => [198.0, 192.0, 180.0],
                Surface::SideWall => [182.0, 186.0, 190.0],
                Surface::Cabinet => [128.0, 92.0, 62.0],
                Surface::Box => scene.color,
            };
            let shade = 0.6 + 0.4 * (n[0] * light[0] + n[1] * light[1] + n[2] * light[2]).max(0.0);
            let px_rgb = base.map(|c| (c * shade + rng.gen_range(-5.0..5.0)).round().clamp(0.0, 255.0) as u8);
            rgb.put_pixel(px as u32, py as u32, image::Rgb(px_rgb));
            let i = py * WIDTH + px;
            surface[i] = Some(s);
            // Structured-light style: a few dropouts and noise growing with range.
            if t < MAX_RANGE && rng.gen::<f64>() > 0.003 {
                depth[i] = t + rng.gen_range(-1.0..1.0) * 0.0015 * t * t;
            }
        }
    }
    Frame {
        rgb,
        depth: DepthMap::new(WIDTH, HEIGHT, depth).expect("sized depth"),
        surface,
    }
}

fn sample_scene(rng: &mut ChaCha8Rng) -> Scene {
    let pose = SensorPose::new(
        -1.0 + rng.gen_range(-0.15..0.15),
        rng.gen_range(-0.2..0.2),
        rng.gen_range(-0.12..0.12),
        1.0,
        0.35 + rng.gen_range(-0.04..0.04),
    )
    .expect("finite pose");
    let (sx, sy, sz) = (rng.gen_range(0.3..0.45), rng.gen_range(0.3..0.45), rng.gen_range(0.3..0.55));
    let (cx, cy) = (rng.gen_range(0.3..1.0), rng.gen_range(-0.9..0.3));
    let color = PALETTE[rng.gen_range(0..PALETTE.len())];
    let class = BOX_CLASSES[rng.gen_range(0..BOX_CLASSES.len())];
    Scene {
        pose,
        boxed: Aabb {
            lo: [cx - sx / 2.0, cy - sy / 2.0, 0.0],
            hi: [cx + sx / 2.0, cy + sy / 2.0, sz],
        },
        color,
        class,
    }
}

/// Prior map of the room without any box: walls and the cabinet occupied,
/// the interior free, the area behind the robot unexplored.
pub fn prior_map() -> OccupancyGrid {
    let (res, origin, n) = (0.05, (-3.0, -3.0), 120);
    let mut grid = OccupancyGrid::filled(res, origin, n, n, Cell::Free).expect("valid grid");
    let margin = 0.03;
    for iy in 0..n {
        for ix in 0..n {
            let x0 = origin.0 + ix as f64 * res;
            let y0 = origin.1 + iy as f64 * res;
            let (x1, y1) = (x0 + res, y0 + res);
            let wall = x1 > BACK_WALL - margin || y1 > SIDE_WALL - margin || y0 < -SIDE_WALL + margin;
            let cabinet = x1 > CABINET.lo[0] - margin
                && x0 < CABINET.hi[0] + margin
                && y1 > CABINET.lo[1] - margin
                && y0 < CABINET.hi[1] + margin;
            if wall || cabinet {
                grid.set(ix, iy, Cell::Occupied);
            } else if x1 < -2.4 {
                grid.set(ix, iy, Cell::Unknown);
            }
        }
    }
    grid
}

/// Block average of a per-pixel indicator over `s x s` cells.
fn coverage(surface: &[Option<Surface>], which: Surface, s: usize) -> Grid {
    let (w, h) = (WIDTH / s, HEIGHT / s);
    Grid::from_fn(w, h, |x, y| {
        let mut n = 0;
        for yy in y * s..(y + 1) * s {
            for xx in x * s..(x + 1) * s {
                n += (surface[yy * WIDTH + xx] == Some(which)) as usize;
            }
        }
        n as f64 / (s * s) as f64
    })
}

/// Gradient magnitudes for the three top classes: the box class first,
/// then the cabinet, then a diffuse runner-up.
fn gradients(frame: &Frame, scene: &Scene, rng: &mut ChaCha8Rng) -> (GradientStack, Vec<(u32, usize, Vec<f32>, [usize; 3])>) {
    let weights = [(1.0, 0.3, 0.06), (0.5, 0.8, 0.06), (0.4, 0.2, 0.12)];
    let mut layers = Vec::new();
    let mut files = Vec::new();
    for &(id, stride) in &GBP_LAYERS {
        let boxed = coverage(&frame.surface, Surface::Box, stride);
        let cab = coverage(&frame.surface, Surface::Cabinet, stride);
        let (w, h) = (boxed.width(), boxed.height());
        let mut per_class = Vec::new();
        for (rank, &(wb, wc, noise)) in weights.iter().enumerate() {
            let mut data = Vec::with_capacity(GBP_CHANNELS * w * h);
            for _ in 0..GBP_CHANNELS {
                for (b, c) in boxed.as_slice().iter().zip(cab.as_slice()) {
                    let v = (wb * b + wc * c) * rng.gen_range(0.6..1.0) + rng.gen_range(0.0..noise);
                    data.push(v as f32);
                }
            }
            per_class.push(ChannelTensor::new(GBP_CHANNELS, h, w, data.iter().map(|&v| v as f64).collect()).expect("sized"));
            files.push((id, rank, data, [GBP_CHANNELS, h, w]));
        }
        layers.push(GradientLayer { id, per_class });
    }
    let labels = vec![
        CLASSES[scene.class].to_string(),
        CLASSES[CABINET_CLASS].to_string(),
        CLASSES[17].to_string(),
    ];
    (GradientStack::new(labels, layers).expect("consistent stack"), files)
}

/// Pre-softmax scores for 20 classes plus background.
fn scores(frame: &Frame, scene: &Scene, rng: &mut ChaCha8Rng) -> ScoreMapStack {
    let mut classes: Vec<Grid> = (0..CLASSES.len())
        .map(|_| Grid::from_fn(WIDTH, HEIGHT, |_, _| rng.gen_range(-1.0..0.5)))
        .collect();
    let mut background = Grid::zeros(WIDTH, HEIGHT);
    for (i, s) in frame.surface.iter().enumerate() {
        let (x, y) = (i % WIDTH, i / WIDTH);
        match s {
            Some(Surface::Box) => classes[scene.class].set(x, y, 6.0 + rng.gen_range(-1.0..1.0)),
            Some(Surface::Cabinet) => classes[CABINET_CLASS].set(x, y, 4.0 + rng.gen_range(-1.0..1.0)),
            _ => background.set(x, y, 5.0 + rng.gen_range(-1.0..1.0)),
        }
    }
    ScoreMapStack::new(classes, Some(background)).expect("consistent stack")
}

/// Writes the synthetic dataset and returns its frame ids.
pub fn make_fixtures(out: &Path) -> Result<Vec<String>> {
    for sub in ["rgb", "depth", "gt", "scores", "gbp", "map", "poses"] {
        let d = out.join(sub);
        fs::create_dir_all(&d).with_context(|| format!("cannot create {}", d.display()))?;
    }
    let mut ids = Vec::new();
    let mut poses = String::from("# id x y theta sensor_height sensor_tilt\n");
    for i in 0..FRAMES {
        let id = format!("{i:04}");
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + i as u64);
        // Resample until the box is clearly in view.
        let (scene, frame) = loop {
            let scene = sample_scene(&mut rng);
            let frame = render(&scene, &mut rng);
            let n = frame.surface.iter().filter(|s| **s == Some(Surface::Box)).count();
            if n > 2500 {
                break (scene, frame);
            }
        };
        write_rgb(&frame.rgb, out.join("rgb").join(format!("{id}.png")))?;
        write_depth(&frame.depth, out.join("depth").join(format!("{id}.png")), salient_core::imageio::DEFAULT_DEPTH_SCALE)?;
        let mask = Mask::new(WIDTH, HEIGHT, frame.surface.iter().map(|s| *s == Some(Surface::Box)).collect())?;
        write_mask(&mask, out.join("gt").join(format!("{id}.png")))?;
        let score = scores(&frame, &scene, &mut rng);
        let names: Vec<String> = CLASSES.iter().map(|s| s.to_string()).collect();
        write_score_stack(out.join("scores").join(&id), &score, &names)?;
        let (g, files) = gradients(&frame, &scene, &mut rng);
        write_gradient_stack(out.join("gbp").join(&id), &g, &files)?;
        let p = scene.pose;
        writeln!(poses, "{id} {} {} {} {} {}", p.x, p.y, p.theta, p.sensor_height, p.sensor_tilt).unwrap();
        ids.push(id);
    }
    fs::write(out.join("poses").join("poses.txt"), poses).context("writing poses")?;
    write_map(out.join("map"), "map", &prior_map())?;
    let cfg = Config {
        intrinsics: intrinsics(),
        dataset: Some(".".into()),
        ..Config::default()
    };
    let text = format!("# Synthetic fixture dataset; paths are relative to this file.\n{}", cfg.to_toml());
    fs::write(out.join("config.toml"), text).context("writing config.toml")?;
    Ok(ids)
}
