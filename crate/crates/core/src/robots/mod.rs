//! Noisy plants, filters, tracking controllers, and Dubins steering.

pub mod dubins;
pub mod estimate;
pub mod plants;
pub mod track;

pub use dubins::{wrap_angle, DubinsPath, DubinsWord};
pub use estimate::{kalman_update, lqr_gain, stationary_covariance, Belief, ControlError, LqrSolution};
pub use plants::{DubinsPlant, LinearPlant};
pub use track::{DubinsSystem, GoalRegion, LinearSystem, Outcome, RobotSystem, Rollout};
