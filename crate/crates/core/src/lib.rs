pub mod chance;
pub mod geometry;
pub mod gp;
pub mod harness;
pub mod planners;
pub mod robots;
pub mod shgo;
