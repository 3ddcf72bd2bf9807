pub mod boundary_field;
pub mod cli;
pub mod config;
pub mod estimator;
pub mod geometry;
pub mod kernels;
pub mod picard;
pub mod rng;
pub mod scenarios;
