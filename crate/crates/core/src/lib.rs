//! Finite-data certification of macroscopic quantum mechanics with cubic
//! phase states: position statistics under classical and quantum dynamics,
//! visibility and likelihood-ratio tests, Monte-Carlo power analysis and the
//! number of measurements needed to reject classical mechanics.

pub mod charfunc;
pub mod dist;
pub mod error;
pub mod export;
pub mod figures;
pub mod montecarlo;
pub mod params;
pub mod power;
pub mod stats;
pub mod wigner;

pub use charfunc::{cf_1d, cf_2d, cumulant, Hypothesis, TwoModeCubicCF};
pub use error::{Error, Result};
pub use params::{from_physical, CubicParams, NoiseParams, PhysicalProtocol, Violation};
