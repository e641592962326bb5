//! Greedy beam-codebook refinement for phased-array receivers whose
//! azimuthal orientation is random.
//!
//! The full quantized codebook of an `L x L` array with `N`-bit elements has
//! `2^(N L^2)` entries. [`refine::refine`] shrinks it to a handful of
//! codewords that keep received power within `gamma` dB of the rounded-MRC
//! maximum on every training orientation; [`eval`] measures how well that
//! holds on held-out orientations and against a hierarchical baseline.
//!
//! Numeric routines are generic over [`Scalar`] (`f32` or `f64`). The
//! aliases below fix the scalar to `f64`, which is what the file formats use.

pub mod array;
pub mod beamsel;
pub mod channel;
pub mod error;
pub mod eval;
pub mod hier;
pub mod io;
pub mod refine;
pub mod rng;
pub mod scalar;

pub use array::{ArrayConfig, Codebook, SteeringVector};
pub use error::{Error, Result};
pub use eval::{GapMode, GapReport, PairedReport, ReportFormat};
pub use hier::HierCodebook;
pub use refine::RefinementResult;
pub use scalar::Scalar;

pub type Complex64 = num_complex::Complex<f64>;
pub type ChannelRealization = channel::ChannelRealization<f64>;
pub type ComplexWeights = array::ComplexWeights<f64>;
pub type PowerDb = beamsel::PowerDb<f64>;
pub type TrainingSet = refine::TrainingSet<f64>;
pub type TrainingSample = refine::TrainingSample<f64>;
pub type HierSearch = hier::HierSearch<f64>;

pub type ChannelRealizationF32 = channel::ChannelRealization<f32>;
pub type PowerDbF32 = beamsel::PowerDb<f32>;
pub type TrainingSetF32 = refine::TrainingSet<f32>;
