use crate::depth::OrganizedCloud;
use crate::error::Result;
use crate::filter::gaussian_blur;
use crate::map::{ensure_same_extent, minmax_normalize, Grid, SalMap};
use crate::space::grid::{Cell, OccupancyGrid};
use crate::space::projection::{PixelCell, ProjectedCells};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChangeParams {
    /// Live points needed before a cell counts as occupied now.
    pub min_points: usize,
    pub unknown_score: f64,
    /// Gaussian smoothing of the per-pixel scores, pixels.
    pub smoothing_sigma: f64,
}

impl Default for ChangeParams {
    fn default() -> Self {
        Self {
            min_points: 5,
            unknown_score: 0.5,
            smoothing_sigma: 3.0,
        }
    }
}

/// Per-pixel change evidence before smoothing: 1 where a previously free
/// cell is now occupied, `unknown_score` over unmapped territory, 0 elsewhere.
pub fn change_scores(projected: &ProjectedCells, grid: &OccupancyGrid, params: &ChangeParams) -> Grid {
    let mut counts = vec![0usize; grid.width() * grid.height()];
    for c in &projected.cells {
        if let PixelCell::Cell { ix, iy } = *c {
            counts[iy * grid.width() + ix] += 1;
        }
    }
    let data = projected
        .cells
        .iter()
        .map(|c| match *c {
            PixelCell::Unassigned => 0.0,
            PixelCell::OutOfMap => params.unknown_score,
            PixelCell::Cell { ix, iy } => match grid.cell(ix, iy) {
                Cell::Free if counts[iy * grid.width() + ix] >= params.min_points => 1.0,
                Cell::Unknown => params.unknown_score,
                _ => 0.0,
            },
        })
        .collect();
    Grid::new(projected.width, projected.height, data).expect("one score per pixel")
}

/// Smoothed change map.
pub fn change_map(projected: &ProjectedCells, grid: &OccupancyGrid, params: &ChangeParams) -> Grid {
    gaussian_blur(&change_scores(projected, grid, params), params.smoothing_sigma)
}

/// Change map attenuated with depth and normalized.
///
/// `eta` sets the depth spread as a fraction of the farthest depth.
pub fn space_saliency(change: &Grid, cloud: &OrganizedCloud, eta: f64) -> Result<SalMap> {
    ensure_same_extent(change.width(), change.height(), cloud.width(), cloud.height())?;
    let (Some(d_min), Some(d_max)) = (cloud.min_valid_depth(), cloud.max_valid_depth()) else {
        return Ok(SalMap::zeros(change.width(), change.height()));
    };
    let sigma = eta * d_max;
    let denom = 2.0 * sigma * sigma;
    let data = change
        .as_slice()
        .iter()
        .zip(cloud.points())
        .map(|(&c, p)| {
            let d = if p.valid { p.d } else { d_min };
            c * (-(d - d_min) / denom).exp()
        })
        .collect();
    minmax_normalize(&Grid::new(change.width(), change.height(), data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::CloudPoint;

    fn cells(v: Vec<PixelCell>) -> ProjectedCells {
        ProjectedCells {
            width: v.len(),
            height: 1,
            cells: v,
        }
    }

    #[test]
    fn consistent_scan_has_no_change() {
        let mut grid = OccupancyGrid::filled(0.1, (0.0, 0.0), 4, 4, Cell::Free).unwrap();
        grid.set(2, 2, Cell::Occupied);
        let p = cells(vec![PixelCell::Cell { ix: 2, iy: 2 }; 10]);
        assert!(change_map(&p, &grid, &ChangeParams::default()).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn new_object_needs_enough_points() {
        let grid = OccupancyGrid::filled(0.1, (0.0, 0.0), 4, 4, Cell::Free).unwrap();
        let few = cells(vec![PixelCell::Cell { ix: 1, iy: 1 }; 4]);
        assert!(change_scores(&few, &grid, &ChangeParams::default()).as_slice().iter().all(|&v| v == 0.0));
        let many = cells(vec![PixelCell::Cell { ix: 1, iy: 1 }; 5]);
        assert!(change_scores(&many, &grid, &ChangeParams::default()).as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn unknown_territory_scores_half() {
        let grid = OccupancyGrid::filled(0.1, (0.0, 0.0), 4, 4, Cell::Unknown).unwrap();
        let p = cells(vec![PixelCell::Cell { ix: 0, iy: 0 }, PixelCell::Cell { ix: 3, iy: 1 }, PixelCell::OutOfMap]);
        assert_eq!(change_scores(&p, &grid, &ChangeParams::default()).as_slice(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn nearer_change_scores_higher() {
        let change = Grid::new(3, 1, vec![1.0, 1.0, 0.0]).unwrap();
        let pts = [1.0, 3.0, 2.0].map(|d| CloudPoint { h: 0.0, v: 0.0, d, valid: true });
        let cloud = OrganizedCloud::new(3, 1, pts.to_vec()).unwrap();
        let s = space_saliency(&change, &cloud, 0.25).unwrap();
        assert!(s.as_slice()[0] > s.as_slice()[1]);
        assert_eq!(s.as_slice()[0], 1.0);
    }

    #[test]
    fn zero_change_is_zero_map() {
        let cloud = OrganizedCloud::new(2, 1, vec![CloudPoint { h: 0.0, v: 0.0, d: 1.0, valid: true }; 2]).unwrap();
        let s = space_saliency(&Grid::zeros(2, 1), &cloud, 0.25).unwrap();
        assert_eq!(s.as_slice(), &[0.0, 0.0]);
    }
}
