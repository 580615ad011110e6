//! Multiparameter quantum estimation: information matrices, scalar
//! Cramér-Rao type bounds including the Holevo bound, model classification,
//! imaging and interferometry models, and estimation simulations.
//!
//! Numerical code is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases at the crate root fix it to `f64`.

pub mod bounds;
pub mod classify;
pub mod error;
pub mod imaging;
pub mod information;
pub mod model;
pub mod multiphase;
pub mod operators;
mod optimize;
pub mod random;
pub mod scalar;
pub mod sdp;
pub mod simulate;
pub mod tolerances;
pub mod zoo;

pub use error::{QestError, Result};
pub use scalar::Real;
pub use tolerances::Tolerances;

pub use optimize::{nelder_mead, Minimum};

pub type HermitianOperator = operators::HermitianOperator<f64>;
pub type DensityMatrix = operators::DensityMatrix<f64>;
pub type StatisticalModel = model::StatisticalModel<f64>;
pub type ModelPoint = model::ModelPoint<f64>;
pub type Povm = information::Povm<f64>;
pub type InfoMatrices = information::InfoMatrices<f64>;
pub type WeightMatrix = bounds::WeightMatrix<f64>;
pub type BoundsReport = bounds::BoundsReport<f64>;
pub type HolevoCertificate = bounds::HolevoCertificate<f64>;
pub type ClassificationReport = classify::ClassificationReport<f64>;
pub type SdpProblem = sdp::SdpProblem<f64>;
pub type SdpSolution = sdp::SdpSolution<f64>;
pub type GaussianPsf = imaging::GaussianPsf<f64>;
pub type SourceScene = imaging::SourceScene<f64>;
pub type MultiphaseProbe = multiphase::MultiphaseProbe<f64>;
