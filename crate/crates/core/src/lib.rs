//! Direction finding with a mechanically rotatable planar array of directive
//! elements.
//!
//! The numeric core is generic over the real scalar (`f32` or `f64`); the
//! `*F64` / `*F32` aliases below fix it for callers that do not care.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crlb;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod pattern;
pub mod rotation_loop;
pub mod scalar;
pub mod seed;
pub mod selftest;
pub mod signal;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ArrayGeometryF64 = geometry::ArrayGeometry<f64>;
pub type ArrayGeometryF32 = geometry::ArrayGeometry<f32>;
pub type DirectionF64 = geometry::Direction<f64>;
pub type DirectionF32 = geometry::Direction<f32>;
pub type OrientationF64 = geometry::Orientation<f64>;
pub type OrientationF32 = geometry::Orientation<f32>;
pub type PatternParamsF64 = pattern::PatternParams<f64>;
pub type PatternParamsF32 = pattern::PatternParams<f32>;
pub type SourceParamsF64 = signal::SourceParams<f64>;
pub type SourceParamsF32 = signal::SourceParams<f32>;
pub type SnapshotBlockF64 = signal::SnapshotBlock<f64>;
pub type SnapshotBlockF32 = signal::SnapshotBlock<f32>;
pub type DoaEstimateF64 = estimator::DoaEstimate<f64>;
pub type DoaEstimateF32 = estimator::DoaEstimate<f32>;
pub type CrlbReportF64 = crlb::CrlbReport<f64>;
pub type CrlbReportF32 = crlb::CrlbReport<f32>;
pub type FimEntriesF64 = crlb::FimEntries<f64>;
pub type FimEntriesF32 = crlb::FimEntries<f32>;
pub type RunResultF64 = rotation_loop::RunResult<f64>;
pub type RunResultF32 = rotation_loop::RunResult<f32>;
