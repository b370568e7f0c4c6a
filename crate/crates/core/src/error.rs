//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building maps or computing degrees.
///
/// Variants marked "certified failure" describe mathematically meaningful
/// outcomes (a gap that cannot be established, a stabilization window that
/// disagrees); callers such as the CLI distinguish them from usage errors.
#[derive(Debug, Error)]
pub enum DegreeError {
    /// Evaluation requested outside the closure of the map domain.
    #[error("point lies outside the closure of the map domain")]
    OutOfDomain,

    /// Galerkin section requested below the region slice dimension.
    #[error("dimension {n} is below the region slice dimension {min}")]
    DimensionTooSmall { n: usize, min: usize },

    /// A boundary-gap certificate could not be established. Certified failure.
    #[error("gap certificate failed: {0}")]
    GapFailure(String),

    /// Straight-line homotopy endpoints live on different regions.
    #[error("local maps live on different regions")]
    RegionMismatch,

    /// A block rotation was built from a non-orthogonal matrix.
    #[error("matrix is not orthogonal: residual {residual:e} exceeds {tol:e}")]
    NotOrthogonal { residual: f64, tol: f64 },

    /// A point of the compact set touches the boundary of the ambient region.
    #[error("point lies on or outside the boundary of the ambient region")]
    NotInterior,

    /// The sampled boundary minimum never cleared the mesh padding.
    /// Certified failure: the map may vanish on the boundary.
    #[error("no boundary gap: sampled minimum {min:e} at mesh {mesh:e}")]
    NoGap { min: f64, mesh: f64 },

    /// The tail-bound modulus did not drop below epsilon within the cap.
    #[error("tail bound still {value:e} >= epsilon {epsilon:e} at dimension cap {cap}")]
    TailBoundStalls { epsilon: f64, value: f64, cap: usize },

    /// The window of finite-dimensional degrees is not constant.
    /// Certified failure: signals a broken tail bound or an engine miss.
    #[error("stabilization window disagrees: {0:?}")]
    StabilizationFailure(Vec<(usize, i64)>),

    /// A zero of the map lies outside the candidate region.
    #[error("a zero of the map lies outside the candidate region")]
    EnclosureFailure,

    /// The region cannot be carried exactly through the requested rotation.
    #[error("region shape cannot be rotated exactly (ball regions only)")]
    ShapeNotRotatable,

    /// Every regular-value draw produced a near-singular Jacobian.
    #[error("all {draws} regular-value draws hit near-singular Jacobians")]
    DegenerateValue { draws: usize },

    /// The finite-dimensional engine needs a positive boundary gap.
    #[error("no boundary gap supplied for the finite-dimensional degree")]
    BoundaryGapMissing,

    /// Newton start budget exhausted before two grid densities agreed.
    #[error("newton budget exceeded: {0}")]
    NewtonBudgetExceeded(String),

    /// Simplicial boundary refinement did not stabilize within budget.
    #[error("mesh budget exceeded before the simplicial degree stabilized")]
    MeshBudgetExceeded,

    /// A finite-dimensional otopy exceeded its declared bound.
    #[error("finite-dimensional otopy exceeds its declared bound {bound}")]
    Unbounded { bound: f64 },

    /// Otopy domain pieces do not cover the time interval.
    #[error("otopy domain pieces do not cover [0,1] (gap near t={t})")]
    PieceMismatch { t: f64 },

    /// Certified otopy endpoints computed different degrees.
    /// Certified failure: indicates an engine or certificate bug.
    #[error("certified otopy endpoints disagree: {0} vs {1}")]
    InvarianceFailure(i64, i64),

    /// The winding oracle needs circle/rectangle boundary loops.
    #[error("winding oracle requires a dim-2 region with circle/rectangle loops")]
    WindingUnsupported,

    /// The simplicial oracle needs a triangulable boundary in dim <= 3.
    #[error("simplicial oracle cannot triangulate this region boundary")]
    TriangulationUnsupported,

    /// The sign-change oracle needs a dim-1 region.
    #[error("sign-change oracle requires a dim-1 interval region")]
    IntervalUnsupported,

    /// Potential-expression parse failure (syntax, arity, differentiability).
    #[error(transparent)]
    Parse(#[from] crate::expr::ParseError),

    /// Construction-time audit failure (Lipschitz or tail-bound spot check,
    /// gradient/finite-difference mismatch).
    #[error("map audit failed: {0}")]
    AuditFailure(String),

    /// Catch-all for invalid arguments to constructors.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl DegreeError {
    /// True for outcomes that are mathematically meaningful rather than
    /// usage errors; the CLI maps these to exit status 2.
    pub fn is_certified_failure(&self) -> bool {
        matches!(
            self,
            DegreeError::GapFailure(_)
                | DegreeError::NoGap { .. }
                | DegreeError::TailBoundStalls { .. }
                | DegreeError::StabilizationFailure(_)
                | DegreeError::EnclosureFailure
                | DegreeError::DegenerateValue { .. }
                | DegreeError::NewtonBudgetExceeded(_)
                | DegreeError::MeshBudgetExceeded
                | DegreeError::InvarianceFailure(_, _)
                | DegreeError::Unbounded { .. }
                | DegreeError::AuditFailure(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, DegreeError>;
