//! Multimode quadrature squeezing of a degenerate confocal OPO below
//! threshold, including diffraction inside a thick nonlinear crystal.
//!
//! The crate is organised along the physics pipeline:
//!
//! * [`params`]: cavity, crystal and pump configuration and derived scales;
//! * [`kernels`]: the parametric coupling kernel in near and far field;
//! * [`iosolver`]: the input/output Bogoliubov transform `(U, V)`;
//! * [`homodyne`]: detection geometry, shot noise and squeezing spectra;
//! * [`scenario`]: configuration files, figure presets and CSV output.

pub mod error;
pub mod homodyne;
pub mod iosolver;
pub mod kernels;
pub mod params;
pub mod quad;
pub mod scenario;

pub use error::{Error, Result};
pub use params::{DerivedScales, OpoParams, PumpProfile};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/parameters.md")]
    struct Parameters;
    #[doc = include_str!("../../../book/src/kernel.md")]
    struct Kernel;
    #[doc = include_str!("../../../book/src/input-output.md")]
    struct InputOutput;
    #[doc = include_str!("../../../book/src/detection.md")]
    struct Detection;
    #[doc = include_str!("../../../book/src/scenarios.md")]
    struct Scenarios;
}
