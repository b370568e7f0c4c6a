//! Topological degree for compact perturbations of identity on a separable
//! Hilbert space, computed through finite-dimensional Galerkin sections.
//!
//! A *local map* is `f = id - F` on a bounded region of l2, where `F` is a
//! compact map and the zero set of `f` stays inside the region. The degree of
//! such a map is obtained by projecting the compact part onto the first `n`
//! basis directions, taking the Brouwer degree of the finite-dimensional
//! section, and certifying that the resulting integer has stabilized. The
//! crate provides:
//!
//! * [`hilbert`] — finitely supported vectors, orthogonal projections and
//!   block basis rotations;
//! * [`region`] — bounded regions (shape-times-tail products and unions of
//!   balls) with exact slicing and boundary nets;
//! * [`map`] — compact map specifications with certified tail moduli, local
//!   maps, gradient local maps, Galerkin sections and suspensions;
//! * [`expr`] — a small potential-expression language with symbolic
//!   gradients;
//! * [`catalog`] — ready-made maps of prescribed degree, including the
//!   concentric-circles example on an annulus;
//! * [`brouwer`] — the finite-dimensional degree engine (regular-value
//!   preimage counting) plus independent winding, sign-change and simplicial
//!   boundary oracles;
//! * [`pipeline`] — boundary-gap certification, dimension selection, the
//!   stabilized degree `Deg`, and region/basis independence checks;
//! * [`otopy`] — time-parametrized families, family gap certificates,
//!   suspension of finite-dimensional otopies, and invariance audits.

#![forbid(unsafe_code)]

pub mod brouwer;
pub mod catalog;
pub mod config;
pub mod error;
pub mod expr;
mod gap;
pub mod hilbert;
pub mod map;
pub mod otopy;
pub mod pipeline;
pub mod region;
pub mod report;
pub mod shape;

pub use brouwer::{DegreeCertificate, DegreeMethod, FiniteMap};
pub use config::EngineConfig;
pub use error::DegreeError;
pub use hilbert::{BlockRotation, HilbertVector};
pub use map::{CompactMapSpec, GradientLocalMap, LocalMap};
pub use otopy::{GradientOtopy, Otopy, OtopyDomain};
pub use pipeline::{DegreeReport, GapCertificate};
pub use region::Region;
pub use shape::Shape;
