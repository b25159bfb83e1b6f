//! Evidence-based conjunction risk assessment from sequences of conjunction
//! data messages (CDMs).
//!
//! Each CDM is reduced to a 5-vector (miss components and covariance entries
//! in the impact plane). A sequence of CDMs is weighted by age, every
//! component gets a probability box and a family of nested intervals, and
//! the product of those intervals forms a Dempster-Shafer focal-element set.
//! Bounding the probability of collision over each focal element yields
//! belief and plausibility curves, which the classifier maps onto six
//! operational classes.
//!
//! Numerical types are generic over [`Real`]; `f64` aliases are exported
//! for convenience.

pub mod batch_harness;
pub mod cdm_model;
pub mod cdm_weighting;
pub mod classifier;
pub mod config;
pub mod error;
pub mod evidence_core;
pub mod pbox_builder;
pub mod poc_engine;
pub mod quadrature;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CdmRecordF64 = cdm_model::CdmRecord<f64>;
pub type CdmRecordF32 = cdm_model::CdmRecord<f32>;
pub type EventSequenceF64 = cdm_model::EventSequence<f64>;
pub type EventSequenceF32 = cdm_model::EventSequence<f32>;
pub type Cov2F64 = cdm_model::Cov2<f64>;
pub type Cov2F32 = cdm_model::Cov2<f32>;
pub type PrefixAnalysisF64 = batch_harness::PrefixAnalysis<f64>;
pub type EventAnalysisF64 = batch_harness::EventAnalysis<f64>;
pub type PBoxF64 = pbox_builder::PBox<f64>;
pub type BelPlCurveF64 = evidence_core::BelPlCurve<f64>;
