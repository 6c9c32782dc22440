//! Planar convex shapes, obstacle environments and the GJK distance oracle.

mod environment;
mod gjk;
mod grid;
mod shape;

pub use environment::{generate_environment, Bounds, Environment, GenerateParams, ENVIRONMENT_FORMAT_VERSION};
pub use gjk::{gjk_distance, GJK_MAX_ITERATIONS, GJK_TOLERANCE};
pub use grid::{import_occupancy_grid, OccupancyGrid};
pub use shape::{ConvexShape, Point, Pose2, RobotFootprint};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("environment has no obstacles")]
    NoObstacles,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("grid parse error at line {line}, byte {offset}: {message}")]
    GridParse {
        line: usize,
        offset: usize,
        message: String,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}
