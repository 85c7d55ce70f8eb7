pub mod cli;
pub mod contour;
pub mod diagnostics;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod kernels;
pub mod quadrature;
pub mod special;
pub mod zseries;

pub use dispersion::{build_table, Alpha, FrequencyTable};
pub use error::{Error, Result};
pub use grid::{GridFunction, SpectralField};
pub use zseries::ZSeries;
