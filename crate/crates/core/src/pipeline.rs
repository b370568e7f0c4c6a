//! The stabilized degree: boundary-gap estimation, Galerkin dimension
//! selection, the constant window of finite-dimensional degrees, and the
//! neighborhood/basis independence checks.
//!
//! `compute_deg` runs the whole construction: certify `|f| >= 2*epsilon` on
//! the region boundary, pick the smallest `N` with `tau(R, N) < epsilon`
//! (so the sections satisfy `|f_n| >= epsilon` on the sliced boundaries),
//! compute `deg(f_n, U_n)` for `n = N ..= N + w`, and insist the window is
//! constant. A disagreeing window is a hard error, never averaged away.

use crate::brouwer::{brouwer_degree, DegreeCertificate};
use crate::config::EngineConfig;
use crate::error::{DegreeError, Result};
use crate::hilbert::{BlockRotation, HilbertVector};
use crate::map::{CompactMapSpec, LocalMap};
use crate::region::Region;
use rayon::prelude::*;
use serde::Serialize;

pub use crate::gap::{
    certify_finite_gap, certify_gap, certify_gap_family, FamilyGapProblem, FiniteGap,
    GapCertificate, GapPlan, GapProblem,
};

/// Certified boundary gap for a local map: `|f| >= 2*epsilon` on the domain
/// boundary, by Lipschitz-padded sampling plus the tail extension.
pub fn estimate_gap(f: &LocalMap, cfg: &EngineConfig) -> Result<GapCertificate> {
    let compact = |x: &HilbertVector| f.compact.evaluate(x);
    let tail = |r: f64, n: usize| f.compact.tail_bound(r, n);
    let sens = |n: usize| f.compact.tail_sensitivity(n);
    let problem = GapProblem {
        region: &f.domain,
        compact: &compact,
        lipschitz: f.compact.lipschitz,
        tail_bound: &tail,
        tail_sensitivity: &sens,
        input_dim_cap: f.compact.input_dim_cap,
    };
    certify_gap(&problem, cfg).map(|(cert, _)| cert)
}

/// Smallest `n >= slice_dim` with `tau(R, n) < epsilon`.
pub fn select_n(
    compact: &CompactMapSpec,
    epsilon: f64,
    radius: f64,
    slice_dim: usize,
    cfg: &EngineConfig,
) -> Result<usize> {
    assert!(epsilon > 0.0);
    let mut value = f64::INFINITY;
    for n in slice_dim..=cfg.dimension_cap {
        value = compact.tail_bound(radius, n);
        if value < epsilon {
            return Ok(n);
        }
    }
    Err(DegreeError::TailBoundStalls {
        epsilon,
        value,
        cap: cfg.dimension_cap,
    })
}

/// The stabilized degree with its full audit trail.
#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    pub map_name: String,
    pub gap: GapCertificate,
    /// First Galerkin dimension of the window.
    pub n_start: usize,
    /// `(n, deg(f_n, U_n))` over the stabilization window.
    pub window: Vec<(usize, i64)>,
    pub value: i64,
    pub certificates: Vec<DegreeCertificate>,
    /// `tau(R, n)` per window member.
    pub tail_bounds: Vec<f64>,
    pub seed: u64,
}

/// Runs gap estimation, dimension selection and the stabilization window.
pub fn compute_deg(f: &LocalMap, cfg: &EngineConfig) -> Result<DegreeReport> {
    let cert = estimate_gap(f, cfg)?;
    compute_deg_with_gap(f, cert, cfg)
}

/// Same with a pre-certified gap (used when a certificate transports
/// exactly, e.g. through a basis rotation).
pub fn compute_deg_with_gap(
    f: &LocalMap,
    gap: GapCertificate,
    cfg: &EngineConfig,
) -> Result<DegreeReport> {
    if !gap.sound || !(gap.epsilon > 0.0) {
        return Err(DegreeError::BoundaryGapMissing);
    }
    let radius = f.domain.bounding_radius();
    let n_start = select_n(&f.compact, gap.epsilon, radius, f.domain.slice_dim(), cfg)?;
    let dims: Vec<usize> = (n_start..=n_start + cfg.window).collect();
    let results: Vec<Result<(usize, DegreeCertificate)>> = dims
        .par_iter()
        .map(|&n| {
            let fm = f.galerkin(n)?;
            let cert = brouwer_degree(&fm, gap.epsilon, cfg)?;
            Ok((n, cert))
        })
        .collect();
    let mut window = Vec::with_capacity(dims.len());
    let mut certificates = Vec::with_capacity(dims.len());
    for r in results {
        let (n, cert) = r?;
        window.push((n, cert.value));
        certificates.push(cert);
    }
    let value = window[0].1;
    if window.iter().any(|&(_, d)| d != value) {
        return Err(DegreeError::StabilizationFailure(window));
    }
    let tail_bounds = dims
        .iter()
        .map(|&n| f.compact.tail_bound(radius, n))
        .collect();
    Ok(DegreeReport {
        map_name: f.name.clone(),
        gap,
        n_start,
        window,
        value,
        certificates,
        tail_bounds,
        seed: cfg.seed,
    })
}

/// Recomputes the degree over a smaller/larger enclosing region and compares.
///
/// The zeros found over the original region must lie inside the candidate
/// region; a zero in `U_n \ U'_n` is an `EnclosureFailure`.
pub fn check_region_independence(
    f: &LocalMap,
    candidate: &Region,
    cfg: &EngineConfig,
) -> Result<bool> {
    let base = compute_deg(f, cfg)?;
    for cert in &base.certificates {
        for (zero, _) in &cert.zeros_found {
            let shape = candidate.slice(zero.len())?;
            if !shape.contains(zero) {
                return Err(DegreeError::EnclosureFailure);
            }
        }
    }
    let restricted = LocalMap {
        name: format!("{}|restricted", f.name),
        compact: f.compact.clone(),
        domain: candidate.clone(),
        ambient: f.ambient.clone(),
    };
    let other = compute_deg(&restricted, cfg)?;
    Ok(other.value == base.value)
}

/// Conjugates the map by a block rotation, carries the region and the gap
/// certificate through the isometry, and compares degrees.
pub fn check_basis_independence(
    f: &LocalMap,
    q: &BlockRotation,
    cfg: &EngineConfig,
) -> Result<bool> {
    let base = compute_deg(f, cfg)?;
    let rotated = rotate_local_map(f, q)?;
    // |Q f(Q^T x)| = |f(Q^T x)|: the boundary gap transports exactly, and
    // for n >= q.dim the projections commute with Q, so the tail data is
    // unchanged where the certificate uses it.
    let other = compute_deg_with_gap(&rotated, base.gap.clone(), cfg)?;
    Ok(other.value == base.value)
}

/// `g(x) = Q f(Q^T x)` with domain `Q(U)` and transported moduli.
pub fn rotate_local_map(f: &LocalMap, q: &BlockRotation) -> Result<LocalMap> {
    let domain = f.domain.rotate(q)?;
    let qdim = q.dim();
    let inner = f.compact.clone();
    let q_apply = q.clone();
    let eval = move |x: &HilbertVector| {
        let back = q_apply.apply_transpose(x);
        q_apply.apply(&inner.evaluate(&back))
    };
    // Coarse but sound fallbacks below the rotation block; exact transport
    // above it.
    let f0 = f.compact.evaluate(&HilbertVector::zero()).norm();
    let radius = f.domain.bounding_radius();
    let coarse = f.compact.lipschitz * radius + f0;
    let tb = f.compact.clone();
    let tail = move |r: f64, n: usize| {
        if n >= qdim {
            tb.tail_bound(r, n)
        } else {
            coarse
        }
    };
    let sens_src = f.compact.clone();
    let lip = f.compact.lipschitz;
    let sens = move |n: usize| {
        if n >= qdim {
            sens_src.tail_sensitivity(n)
        } else {
            lip
        }
    };
    let mut spec = CompactMapSpec::new(eval, tail, f.compact.lipschitz).with_tail_sensitivity(sens);
    if let Some(m) = f.compact.output_dim_cap {
        spec = spec.with_output_dim_cap(m.max(qdim));
    }
    if let Some(j) = f.compact.input_dim_cap {
        spec = spec.with_input_dim_cap(j.max(qdim));
    }
    Ok(LocalMap {
        name: format!("{}|rotated{}", f.name, qdim),
        compact: spec,
        domain,
        ambient: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::Shape;

    fn cfg() -> EngineConfig {
        EngineConfig::with_seed(5)
    }

    fn identity_on_ball() -> LocalMap {
        LocalMap::new(
            "identity",
            CompactMapSpec::finite_rank(|_| HilbertVector::zero(), 1, 0.0, |_| 0.0)
                .with_input_dim_cap(1),
            Region::ball(HilbertVector::zero(), 1.0),
        )
    }

    #[test]
    fn select_n_finite_rank() {
        let spec = CompactMapSpec::finite_rank(|_| HilbertVector::zero(), 3, 0.0, |_| 1.0);
        assert_eq!(select_n(&spec, 0.5, 1.0, 1, &cfg()).unwrap(), 3);
        assert_eq!(select_n(&spec, 0.5, 1.0, 4, &cfg()).unwrap(), 4);
    }

    #[test]
    fn select_n_geometric_tail() {
        // tau(R, n) = R / 2^n, R = 1, eps = 0.01: N = 7.
        let spec = CompactMapSpec::new(
            |_| HilbertVector::zero(),
            |r, n| r / 2f64.powi(n as i32),
            0.0,
        );
        assert_eq!(select_n(&spec, 0.01, 1.0, 1, &cfg()).unwrap(), 7);
    }

    #[test]
    fn select_n_harmonic_tail() {
        // tau(R, n) = R / (n + 1), R = 2, eps = 0.1: N = 20.
        let spec = CompactMapSpec::new(
            |_| HilbertVector::zero(),
            |r, n| r / (n as f64 + 1.0),
            0.0,
        );
        assert_eq!(select_n(&spec, 0.1, 2.0, 1, &cfg()).unwrap(), 20);
    }

    #[test]
    fn select_n_can_stall() {
        let spec = CompactMapSpec::new(|_| HilbertVector::zero(), |_, _| 1.0, 0.0);
        assert!(matches!(
            select_n(&spec, 0.5, 1.0, 1, &cfg()),
            Err(DegreeError::TailBoundStalls { .. })
        ));
    }

    #[test]
    fn identity_has_degree_one_with_constant_window() {
        let report = compute_deg(&identity_on_ball(), &cfg()).unwrap();
        assert_eq!(report.value, 1);
        assert_eq!(report.window.len(), cfg().window + 1);
        assert!(report.window.iter().all(|&(_, d)| d == 1));
        assert!(report.gap.sound && report.gap.audit());
    }

    #[test]
    fn empty_zero_set_has_degree_zero() {
        // F constant at 3 e1: f(x) = x - 3 e1 never vanishes on |x| < 1.
        let c = HilbertVector::new([(1, 3.0)]);
        let cc = c.clone();
        let map = LocalMap::new(
            "shifted",
            CompactMapSpec::finite_rank(move |_| cc.clone(), 1, 0.0, |_| 3.0)
                .with_input_dim_cap(1),
            Region::ball(HilbertVector::zero(), 1.0),
        );
        let report = compute_deg(&map, &cfg()).unwrap();
        assert_eq!(report.value, 0);
        assert!(report.certificates.iter().all(|c| c.zeros_found.is_empty()));
    }

    #[test]
    fn region_shrink_preserves_degree() {
        let f = identity_on_ball();
        let smaller = Region::ball(HilbertVector::zero(), 0.8);
        assert!(check_region_independence(&f, &smaller, &cfg()).unwrap());
    }

    #[test]
    fn excluding_the_zero_is_an_enclosure_failure() {
        let f = identity_on_ball();
        let off = Region::ball(HilbertVector::new([(1, 0.9)]), 0.05);
        assert!(matches!(
            check_region_independence(&f, &off, &cfg()),
            Err(DegreeError::EnclosureFailure)
        ));
    }

    #[test]
    fn identity_rotation_check_is_trivially_true() {
        let f = identity_on_ball();
        let q = BlockRotation::identity(4);
        assert!(check_basis_independence(&f, &q, &cfg()).unwrap());
    }
}
