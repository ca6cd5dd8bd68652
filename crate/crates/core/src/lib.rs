//! Finite-difference and spectral simulator for one-dimensional stochastic
//! moving boundary problems in the centred frame `(u₁, u₂, p)`.

pub mod coefficients;
pub mod error;
pub mod experiments;
pub mod frame;
pub mod grid;
pub mod noise;
pub mod solver;
pub mod spectral;

pub use coefficients::{CoefficientSet, InterfaceIndex, InterfaceRate, TruncationSpec};
pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, Norm, State};
pub use noise::{AmbientGrid, ColoredNoise, GaussianKernel, Kernel, NoiseIncrement, NoiseStream};
pub use solver::{solve, SolveConfig, Trajectory};
pub use spectral::SpectralOperator;
