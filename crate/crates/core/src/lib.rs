//! Control synthesis, simulation and spectral analysis for the wave equation
//! `u_tt - u_xx + q(x) u = 0` on a lasso graph.

pub mod control;
pub mod error;
pub mod fdsim;
pub mod graph;
pub mod kernels;
pub mod moments;
pub mod spectral;
pub mod volterra;
pub mod wave_rep;

pub use error::{Error, Result};
