//! Conformal differential-geometry engine.
//!
//! Builds curvature and tractor-calculus objects from a coordinate metric and
//! numerically verifies the prolongation of the conformal Killing equation on
//! forms, the associated conformally invariant connections, and helicity
//! raising/lowering constructions.
//!
//! The pipeline: symbolic metric components ([`expr`]) are evaluated into
//! truncated Taylor jets ([`jet`]), dense tensor algebra runs over them
//! ([`tensor`], [`geometry`]), and the form/tractor layers implement the
//! conformal machinery ([`forms`], [`tractor`], [`prolong`], [`helicity`]).
//! The [`harness`] module orchestrates verification suites and reports.

pub mod expr;
pub mod forms;
pub mod geometry;
pub mod harness;
pub mod helicity;
pub mod jet;
pub mod metric;
pub mod prolong;
pub mod tensor;
pub mod tractor;

/// Double-precision jets, the default numeric substrate.
pub type Jet64 = jet::Jet<f64>;
/// Dense tensor of double-precision jets.
pub type JetTensor = tensor::Tensor<Jet64>;
/// Dense tensor of plain doubles.
pub type Tensor64 = tensor::Tensor<f64>;
/// Geometry stack at double precision.
pub type Geometry64 = geometry::Geometry<f64>;
