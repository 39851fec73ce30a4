use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Free,
    Occupied,
    Unknown,
}

impl Cell {
    /// Map-server trinary interpretation of an 8-bit gray level.
    pub fn from_gray(v: u8) -> Self {
        let occupancy = (255.0 - v as f64) / 255.0;
        if occupancy > 0.65 {
            Cell::Occupied
        } else if occupancy < 0.196 {
            Cell::Free
        } else {
            Cell::Unknown
        }
    }

    pub fn to_gray(self) -> u8 {
        match self {
            Cell::Occupied => 0,
            Cell::Free => 254,
            Cell::Unknown => 205,
        }
    }
}

/// Prior 2D map. Cell `(ix, iy)` covers world `x` in
/// `[ox + ix*res, ox + (ix+1)*res)` and likewise for `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    resolution: f64,
    origin: (f64, f64),
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl OccupancyGrid {
    pub fn new(resolution: f64, origin: (f64, f64), width: usize, height: usize, cells: Vec<Cell>) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidArgument(format!("map resolution must be positive, got {resolution}")));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(Error::InvalidArgument("map origin must be finite".into()));
        }
        if cells.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "map {width}x{height} needs {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(Self {
            resolution,
            origin,
            width,
            height,
            cells,
        })
    }

    pub fn filled(resolution: f64, origin: (f64, f64), width: usize, height: usize, cell: Cell) -> Result<Self> {
        Self::new(resolution, origin, width, height, vec![cell; width * height])
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell(&self, ix: usize, iy: usize) -> Cell {
        self.cells[iy * self.width + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, c: Cell) {
        self.cells[iy * self.width + ix] = c;
    }

    /// Cell containing a world point, if inside the map.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        // The epsilon keeps points on a cell boundary from falling into the
        // lower cell through rounding of the division.
        let fx = ((x - self.origin.0) / self.resolution + 1e-9).floor();
        let fy = ((y - self.origin.1) / self.resolution + 1e-9).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.origin.0 + (ix as f64 + 0.5) * self.resolution,
            self.origin.1 + (iy as f64 + 0.5) * self.resolution,
        )
    }
}

/// Reads a binary (P5) PGM. Row 0 of the image is the map's top, i.e. the
/// highest `y`.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::malformed("pgm", path, "unexpected end of header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::malformed("pgm", path, "only binary P5 maps are supported"));
    }
    let mut num = |what: &str| -> Result<usize> {
        token()?
            .parse()
            .map_err(|_| Error::malformed("pgm", path, format!("bad {what}")))
    };
    let (w, h, maxval) = (num("width")?, num("height")?, num("maxval")?);
    if maxval == 0 || maxval > 255 {
        return Err(Error::malformed("pgm", path, format!("unsupported maxval {maxval}")));
    }
    let start = pos + 1;
    let need = w * h;
    if bytes.len() < start + need {
        return Err(Error::malformed("pgm", path, "truncated pixel data"));
    }
    let data = bytes[start..start + need]
        .iter()
        .map(|&v| ((v as usize * 255) / maxval) as u8)
        .collect();
    Ok((w, h, data))
}

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads a map from its metadata file (`image`, `resolution`, `origin`).
pub fn read_map(meta: impl AsRef<Path>) -> Result<OccupancyGrid> {
    let meta = meta.as_ref();
    let text = fs::read_to_string(meta).map_err(|e| Error::io(meta, e))?;
    let mut image: Option<PathBuf> = None;
    let mut resolution = None;
    let mut origin = None;
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(Error::malformed("map metadata", meta, format!("line {}: expected key: value", ln + 1)));
        };
        let value = value.trim();
        let bad = |what: &str| Error::malformed("map metadata", meta, format!("line {}: bad {what}", ln + 1));
        match key.trim() {
            "image" => image = Some(PathBuf::from(value)),
            "resolution" => resolution = Some(value.parse::<f64>().map_err(|_| bad("resolution"))?),
            "origin" => {
                let nums: Vec<f64> = value
                    .trim_start_matches('[')
                    .trim_end_matches(']')
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("origin"))?;
                if nums.len() < 2 {
                    return Err(bad("origin"));
                }
                origin = Some((nums[0], nums[1]));
            }
            "negate" | "occupied_thresh" | "free_thresh" | "mode" => {}
            other => {
                return Err(Error::malformed("map metadata", meta, format!("line {}: unknown key {other:?}", ln + 1)))
            }
        }
    }
    let missing = |k: &str| Error::malformed("map metadata", meta, format!("missing {k}"));
    let image = image.ok_or_else(|| missing("image"))?;
    let resolution = resolution.ok_or_else(|| missing("resolution"))?;
    let origin = origin.ok_or_else(|| missing("origin"))?;
    let image = if image.is_absolute() {
        image
    } else {
        meta.parent().unwrap_or(Path::new(".")).join(image)
    };
    let (w, h, pixels) = read_pgm(&image)?;
    let mut cells = vec![Cell::Unknown; w * h];
    for row in 0..h {
        for x in 0..w {
            cells[(h - 1 - row) * w + x] = Cell::from_gray(pixels[row * w + x]);
        }
    }
    OccupancyGrid::new(resolution, origin, w, h, cells)
}

/// Writes `<stem>.pgm` and its metadata file `<stem>.yaml` into `dir`.
pub fn write_map(dir: impl AsRef<Path>, stem: &str, grid: &OccupancyGrid) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (w, h) = (grid.width, grid.height);
    let mut pixels = vec![0u8; w * h];
    for row in 0..h {
        for x in 0..w {
            pixels[row * w + x] = grid.cell(x, h - 1 - row).to_gray();
        }
    }
    write_pgm(dir.join(format!("{stem}.pgm")), w, h, &pixels)?;
    let meta = dir.join(format!("{stem}.yaml"));
    let text = format!(
        "image: {stem}.pgm\nresolution: {}\norigin: [{}, {}, 0.0]\nnegate: 0\noccupied_thresh: 0.65\nfree_thresh: 0.196\n",
        grid.resolution, grid.origin.0, grid.origin.1
    );
    fs::write(&meta, text).map_err(|e| Error::io(&meta, e))?;
    Ok(meta)
}
