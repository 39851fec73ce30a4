//! Top-down space-based saliency: changes between the live cloud and a prior
//! occupancy map.

mod change;
mod grid;
mod pose;
mod projection;

pub use change::{change_map, change_scores, space_saliency, ChangeParams};
pub use grid::{read_map, read_pgm, write_map, write_pgm, Cell, OccupancyGrid};
pub use pose::{read_poses, SensorPose};
pub use projection::{project_cloud, PixelCell, ProjectedCells, ProjectionParams};
