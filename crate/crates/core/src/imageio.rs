//! PNG input/output for frames, depth, masks and heatmaps.

use std::path::Path;

use image::{GrayImage, ImageBuffer, Luma, Rgb};

pub use image::RgbImage;

use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::map::{Mask, SalMap};

/// Meters per raw unit of Kinect-style 16-bit depth PNGs, which store millimeters.
pub const DEFAULT_DEPTH_SCALE: f64 = 0.001;

fn image_err(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    Ok(image::open(path).map_err(|e| image_err(path, e))?.to_rgb8())
}

pub fn write_rgb(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    img.save(path).map_err(|e| image_err(path, e))
}

/// Reads a 16-bit gray depth PNG; raw units are multiplied by `scale`
/// to obtain meters.
pub fn read_depth(path: impl AsRef<Path>, scale: f64) -> Result<DepthMap> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| image_err(path, e))?;
    let gray = match img {
        image::DynamicImage::ImageLuma16(g) => g,
        other => {
            return Err(Error::malformed(
                "depth",
                path,
                format!("expected 16-bit grayscale, found {:?}", other.color()),
            ))
        }
    };
    let (w, h) = gray.dimensions();
    DepthMap::new(
        w as usize,
        h as usize,
        gray.as_raw().iter().map(|&v| v as f64 * scale).collect(),
    )
}

pub fn write_depth(depth: &DepthMap, path: impl AsRef<Path>, scale: f64) -> Result<()> {
    let path = path.as_ref();
    let raw: Vec<u16> = depth
        .as_slice()
        .iter()
        .map(|&d| (d / scale).round().clamp(0.0, u16::MAX as f64) as u16)
        .collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width() as u32, depth.height() as u32, raw)
            .expect("buffer sized from depth map");
    img.save(path).map_err(|e| image_err(path, e))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let gray = image::open(path).map_err(|e| image_err(path, e))?.to_luma8();
    let (w, h) = gray.dimensions();
    Mask::from_gray8(w as usize, h as usize, gray.as_raw())
}

pub fn write_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let raw = mask.as_slice().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, raw)
        .expect("buffer sized from mask");
    img.save(path).map_err(|e| image_err(path, e))
}

pub fn salmap_to_gray(map: &SalMap) -> GrayImage {
    let raw = map
        .as_slice()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect();
    GrayImage::from_raw(map.width() as u32, map.height() as u32, raw).expect("buffer sized from map")
}

/// Reads an 8-bit gray saliency image back into `[0, 1]`.
pub fn read_salmap(path: impl AsRef<Path>) -> Result<SalMap> {
    let path = path.as_ref();
    let gray = image::open(path).map_err(|e| image_err(path, e))?.to_luma8();
    let (w, h) = gray.dimensions();
    let grid = crate::map::Grid::new(
        w as usize,
        h as usize,
        gray.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
    )?;
    SalMap::try_from_grid(grid)
}

pub fn write_salmap_gray(map: &SalMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    salmap_to_gray(map).save(path).map_err(|e| image_err(path, e))
}

/// Color-mapped heatmap (blue through cyan, yellow to red).
pub fn salmap_to_heatmap(map: &SalMap) -> RgbImage {
    let mut img = RgbImage::new(map.width() as u32, map.height() as u32);
    for (px, &v) in img.pixels_mut().zip(map.as_slice()) {
        *px = jet(v);
    }
    img
}

pub fn write_salmap_heatmap(map: &SalMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    salmap_to_heatmap(map).save(path).map_err(|e| image_err(path, e))
}

fn jet(v: f64) -> Rgb<u8> {
    let v = v.clamp(0.0, 1.0);
    let channel = |offset: f64| (1.5 - (4.0 * v - offset).abs()).clamp(0.0, 1.0);
    let to8 = |c: f64| (c * 255.0).round() as u8;
    Rgb([to8(channel(3.0)), to8(channel(2.0)), to8(channel(1.0))])
}
