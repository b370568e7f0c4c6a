//! Time-parametrized families `h(t, x) = x - F(t, x)`: admissibility
//! certification, gradient families, suspension of finite-dimensional
//! families, and the degree-invariance audit.

use crate::brouwer::FiniteMap;
use crate::config::EngineConfig;
use crate::error::{DegreeError, Result};
use crate::gap::{certify_gap_family, FamilyGapProblem, GapCertificate};
use crate::hilbert::HilbertVector;
use crate::map::{CompactMapSpec, GradientLocalMap, LocalMap};
use crate::pipeline::{compute_deg, DegreeReport};
use crate::region::Region;
use crate::shape::Shape;
use std::sync::Arc;

pub type OtopyCompactFn = Arc<dyn Fn(f64, &HilbertVector) -> HilbertVector + Send + Sync>;
pub type OtopyPotentialFn = Arc<dyn Fn(f64, &HilbertVector) -> f64 + Send + Sync>;

/// Domain of a family: constant in `t`, or finitely many `t`-pieces with
/// their own regions. Pieces must cover `[0, 1]`.
#[derive(Clone)]
pub enum OtopyDomain {
    Constant(Region),
    Pieces(Vec<(f64, f64, Region)>),
}

impl OtopyDomain {
    fn pieces(&self) -> Vec<(f64, f64, &Region)> {
        match self {
            OtopyDomain::Constant(r) => vec![(0.0, 1.0, r)],
            OtopyDomain::Pieces(ps) => ps.iter().map(|(a, b, r)| (*a, *b, r)).collect(),
        }
    }

    /// Region owning time `t` (pieces are checked for coverage separately).
    fn region_at(&self, t: f64) -> Option<&Region> {
        self.pieces()
            .into_iter()
            .find(|(a, b, _)| *a - 1e-12 <= t && t <= *b + 1e-12)
            .map(|(_, _, r)| r)
    }
}

/// A candidate otopy `h(t, x) = x - F(t, x)` with tail data uniform in `t`.
/// Certification (the nonvanishing boundary gap) is a separate step.
#[derive(Clone)]
pub struct Otopy {
    pub name: String,
    compact_t: OtopyCompactFn,
    tail_bound: Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>,
    tail_sensitivity: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    pub input_dim_cap: Option<usize>,
    pub lipschitz_x: f64,
    pub lipschitz_t: f64,
    pub domain: OtopyDomain,
}

impl Otopy {
    pub fn new(
        name: impl Into<String>,
        compact_t: impl Fn(f64, &HilbertVector) -> HilbertVector + Send + Sync + 'static,
        tail_bound: impl Fn(f64, usize) -> f64 + Send + Sync + 'static,
        lipschitz_x: f64,
        lipschitz_t: f64,
        domain: OtopyDomain,
    ) -> Self {
        let lip = lipschitz_x;
        Otopy {
            name: name.into(),
            compact_t: Arc::new(compact_t),
            tail_bound: Arc::new(tail_bound),
            tail_sensitivity: Arc::new(move |_| lip),
            input_dim_cap: None,
            lipschitz_x,
            lipschitz_t,
            domain,
        }
    }

    pub fn with_tail_sensitivity(
        mut self,
        lambda: impl Fn(usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.tail_sensitivity = Arc::new(lambda);
        self
    }

    pub fn with_input_dim_cap(mut self, j: usize) -> Self {
        self.input_dim_cap = Some(j);
        self
    }

    pub fn compact_at(&self, t: f64, x: &HilbertVector) -> HilbertVector {
        (self.compact_t)(t, x)
    }

    /// `h_t(x) = x - F(t, x)`.
    pub fn value(&self, t: f64, x: &HilbertVector) -> HilbertVector {
        x.sub(&self.compact_at(t, x))
    }

    /// Freezes the family at time `t` into a local map on its region.
    pub fn at_time(&self, t: f64) -> Result<LocalMap> {
        let region = self
            .domain
            .region_at(t)
            .ok_or(DegreeError::PieceMismatch { t })?
            .clone();
        Ok(self.as_local_map(t, region))
    }

    fn as_local_map(&self, t: f64, region: Region) -> LocalMap {
        let inner = self.compact_t.clone();
        let tb = self.tail_bound.clone();
        let sens = self.tail_sensitivity.clone();
        let mut spec = CompactMapSpec::new(
            move |x: &HilbertVector| inner(t, x),
            move |r, n| tb(r, n),
            self.lipschitz_x,
        )
        .with_tail_sensitivity(move |n| sens(n));
        if let Some(j) = self.input_dim_cap {
            spec = spec.with_input_dim_cap(j);
        }
        LocalMap::new(format!("{}@t={}", self.name, t), spec, region)
    }

    pub fn endpoint0(&self) -> Result<LocalMap> {
        self.at_time(0.0)
    }

    pub fn endpoint1(&self) -> Result<LocalMap> {
        self.at_time(1.0)
    }
}

/// Straight-line homotopy `h(t, x) = (1-t) f(x) + t g(x)` between local maps
/// on the same region.
pub fn straight_line_homotopy(f: &LocalMap, g: &LocalMap) -> Result<Otopy> {
    if f.domain != g.domain {
        return Err(DegreeError::RegionMismatch);
    }
    let radius = f.domain.bounding_radius();
    let f0 = f.compact.evaluate(&HilbertVector::zero()).norm();
    let g0 = g.compact.evaluate(&HilbertVector::zero()).norm();
    // |d/dt h| = |F_f - F_g| <= |F_f| + |F_g|, bounded on the region.
    let lipschitz_t =
        (f.compact.lipschitz * radius + f0) + (g.compact.lipschitz * radius + g0);
    let (cf, cg) = (f.compact.clone(), g.compact.clone());
    let (tf, tg) = (f.compact.clone(), g.compact.clone());
    let (sf, sg) = (f.compact.clone(), g.compact.clone());
    let mut h = Otopy::new(
        format!("line[{} -> {}]", f.name, g.name),
        move |t, x| cf.evaluate(x).scale(1.0 - t).add(&cg.evaluate(x).scale(t)),
        move |r, n| tf.tail_bound(r, n).max(tg.tail_bound(r, n)),
        f.compact.lipschitz.max(g.compact.lipschitz),
        lipschitz_t,
        OtopyDomain::Constant(f.domain.clone()),
    )
    .with_tail_sensitivity(move |n| sf.tail_sensitivity(n).max(sg.tail_sensitivity(n)));
    if let (Some(a), Some(b)) = (f.compact.input_dim_cap, g.compact.input_dim_cap) {
        h = h.with_input_dim_cap(a.max(b));
    }
    Ok(h)
}

/// Certifies the family: the boundary gap holds at every sampled `(t, x)`
/// with Lipschitz padding in both directions, per domain piece.
pub fn certify_otopy(h: &Otopy, cfg: &EngineConfig) -> Result<GapCertificate> {
    let pieces = h.domain.pieces();
    check_coverage(&pieces)?;
    let mut combined: Option<GapCertificate> = None;
    for (t0, t1, region) in pieces {
        let compact_t = |t: f64, x: &HilbertVector| h.compact_at(t, x);
        let tb = |r: f64, n: usize| (h.tail_bound)(r, n);
        let sens = |n: usize| (h.tail_sensitivity)(n);
        let problem = FamilyGapProblem {
            region,
            compact_t: &compact_t,
            lipschitz_x: h.lipschitz_x,
            lipschitz_t: h.lipschitz_t,
            tail_bound: &tb,
            tail_sensitivity: &sens,
            input_dim_cap: h.input_dim_cap,
            t_range: (t0, t1),
        };
        let cert = certify_gap_family(&problem, cfg)?;
        combined = Some(match combined {
            None => cert,
            Some(acc) => GapCertificate {
                epsilon: acc.epsilon.min(cert.epsilon),
                mesh: acc.mesh.max(cert.mesh),
                boundary_min_sampled: acc.boundary_min_sampled.min(cert.boundary_min_sampled),
                lipschitz_used: acc.lipschitz_used.max(cert.lipschitz_used),
                sound: acc.sound && cert.sound,
                cert_dim: acc.cert_dim.max(cert.cert_dim),
                tail_defect: acc.tail_defect.max(cert.tail_defect),
                tail_adjusted_bound: acc.tail_adjusted_bound.min(cert.tail_adjusted_bound),
            },
        });
    }
    Ok(combined.expect("at least one piece"))
}

fn check_coverage(pieces: &[(f64, f64, &Region)]) -> Result<()> {
    let mut spans: Vec<(f64, f64)> = pieces.iter().map(|(a, b, _)| (*a, *b)).collect();
    spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut reach = 0.0f64;
    if spans.first().map_or(true, |s| s.0 > 1e-12) {
        return Err(DegreeError::PieceMismatch { t: 0.0 });
    }
    for (a, b) in spans {
        if a > reach + 1e-12 {
            return Err(DegreeError::PieceMismatch { t: reach });
        }
        reach = reach.max(b);
    }
    if reach < 1.0 - 1e-12 {
        return Err(DegreeError::PieceMismatch { t: reach });
    }
    Ok(())
}

/// Certifies the family and checks `Deg(h_0) = Deg(h_1)`; for piecewise
/// domains the junction times are also compared across both regions
/// (restriction property).
pub fn invariance_audit(h: &Otopy, cfg: &EngineConfig) -> Result<(DegreeReport, DegreeReport)> {
    certify_otopy(h, cfg)?;
    let pieces = h.domain.pieces();
    // Junction consistency between neighboring pieces.
    let mut sorted = pieces.clone();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in sorted.windows(2) {
        let (_, b0, r0) = &w[0];
        let (a1, _, r1) = &w[1];
        if (b0 - a1).abs() < 1e-9 {
            let left = compute_deg(&h.as_local_map(*b0, (*r0).clone()), cfg)?;
            let right = compute_deg(&h.as_local_map(*b0, (*r1).clone()), cfg)?;
            if left.value != right.value {
                return Err(DegreeError::InvarianceFailure(left.value, right.value));
            }
        }
    }
    let d0 = compute_deg(&h.endpoint0()?, cfg)?;
    let d1 = compute_deg(&h.endpoint1()?, cfg)?;
    if d0.value != d1.value {
        return Err(DegreeError::InvarianceFailure(d0.value, d1.value));
    }
    Ok((d0, d1))
}

/// A gradient family: the compact part is the x-gradient of a potential.
#[derive(Clone)]
pub struct GradientOtopy {
    pub otopy: Otopy,
    potential_t: OtopyPotentialFn,
}

impl GradientOtopy {
    pub fn new(
        otopy: Otopy,
        potential_t: impl Fn(f64, &HilbertVector) -> f64 + Send + Sync + 'static,
        cfg: &EngineConfig,
    ) -> Result<Self> {
        let g = GradientOtopy {
            otopy,
            potential_t: Arc::new(potential_t),
        };
        g.audit_gradient(cfg, 20)?;
        Ok(g)
    }

    pub fn potential(&self, t: f64, x: &HilbertVector) -> f64 {
        (self.potential_t)(t, x)
    }

    /// Central-difference x-gradient of the potential against `h(t, .)` at
    /// random `(t, x)` samples.
    pub fn audit_gradient(&self, cfg: &EngineConfig, samples: usize) -> Result<()> {
        use rand::Rng;
        let mut rng = cfg.rng(0x07C9);
        let h = cfg.grad_check_step;
        let tol = cfg.grad_check_tol;
        for _ in 0..samples {
            let t: f64 = rng.gen_range(0.0..=1.0);
            let region = self
                .otopy
                .domain
                .region_at(t)
                .ok_or(DegreeError::PieceMismatch { t })?;
            let x = region.sample_point(&mut rng);
            let hx = self.otopy.value(t, &x);
            let mut active: Vec<u32> = (1..=region.slice_dim() as u32).collect();
            for &(i, _) in x.coords() {
                if !active.contains(&i) {
                    active.push(i);
                }
            }
            for i in active {
                let e = HilbertVector::basis(i);
                let fp = (self.potential_t)(t, &x.axpy(h, &e));
                let fm = (self.potential_t)(t, &x.axpy(-h, &e));
                let fd = (fp - fm) / (2.0 * h);
                if (fd - hx.get(i)).abs() > tol {
                    return Err(DegreeError::AuditFailure(format!(
                        "gradient otopy audit failed on {} at t={t}, coordinate {i}: fd {fd} vs h {}",
                        self.otopy.name,
                        hx.get(i)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A bounded finite-dimensional family `k(t, x)` on a region slice of `V_n`,
/// not necessarily of the form identity-minus-compact.
#[derive(Clone)]
pub struct FiniteOtopy {
    pub dim: usize,
    pub eval: Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>,
    pub domain: Shape,
    pub lipschitz_x: f64,
    pub lipschitz_t: f64,
}

impl FiniteOtopy {
    pub fn at_time(&self, t: f64, slice_dim: usize) -> FiniteMap {
        let eval = self.eval.clone();
        FiniteMap::new(
            self.dim,
            Arc::new(move |x: &[f64]| eval(t, x)),
            self.domain.clone(),
            slice_dim,
        )
    }
}

/// Suspends a bounded finite-dimensional family to the full space:
/// `h(t, (x, y)) = (k(t, x), y)`. Boundedness of `k` makes `id - k` compact
/// as a finite-rank map; the bound is spot-checked and `Unbounded` reported
/// on violation.
pub fn suspend_finite_otopy(
    k: &FiniteOtopy,
    bound: f64,
    tail_radius: f64,
    cfg: &EngineConfig,
) -> Result<Otopy> {
    let n = k.dim;
    // Spot-check |k| <= bound over a solid net times a t-grid.
    let net = k.domain.solid_net(0.1 * (1.0 + k.domain.bounding_radius()), cfg.mesh_cap)?;
    for ti in 0..=16 {
        let t = ti as f64 / 16.0;
        for p in &net.points {
            let v = (k.eval)(t, p);
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > bound {
                return Err(DegreeError::Unbounded { bound });
            }
        }
    }
    let eval = k.eval.clone();
    let radius = k.domain.bounding_radius();
    let sup_f = radius + bound;
    let compact_t = move |t: f64, x: &HilbertVector| {
        // F(t, x) = x_n - k(t, x_n) embedded in V_n.
        let head = x.to_dense(n);
        let kx = eval(t, &head);
        let diff: Vec<f64> = head.iter().zip(&kx).map(|(a, b)| a - b).collect();
        HilbertVector::from_dense(&diff)
    };
    let region = Region::Product {
        dim: n,
        shape: k.domain.clone(),
        tail_radius,
    };
    Ok(Otopy::new(
        "suspended_finite_otopy",
        compact_t,
        move |_r, m| if m >= n { 0.0 } else { sup_f },
        1.0 + k.lipschitz_x,
        k.lipschitz_t,
        OtopyDomain::Constant(region),
    )
    .with_input_dim_cap(n))
}

/// One certified link of a suspension chain.
pub enum ChainStep {
    /// Exact domain change justified by the restriction property.
    Restriction { from: Region, to: Region },
    /// A certified straight-line family on a fixed region.
    Line {
        otopy: Otopy,
        certificate: GapCertificate,
    },
}

/// The certified chain connecting a local map to the suspension of its
/// Galerkin section.
pub struct SuspensionChain {
    pub steps: Vec<ChainStep>,
    pub terminal: LocalMap,
    /// Dimension at which the straight-line step certified.
    pub n_used: usize,
    /// Present when the input was gradient: the certified line carries the
    /// interpolated potential and the terminal map its suspended potential.
    pub gradient_line: Option<GradientOtopy>,
    pub terminal_gradient: Option<GradientLocalMap>,
}

/// Connects `f` to `\Sigma f_n` by a certified straight-line family on the
/// domain, followed by the exact restriction onto the suspension's region.
/// Searches upward from the stabilization dimension for the first `n` at
/// which the family certifies.
pub fn approximate_by_suspension(f: &LocalMap, cfg: &EngineConfig) -> Result<SuspensionChain> {
    approximate_chain(f, None, cfg)
}

/// Gradient version: every chain element carries a potential and passes the
/// finite-difference audit.
pub fn approximate_by_suspension_gradient(
    f: &GradientLocalMap,
    cfg: &EngineConfig,
) -> Result<SuspensionChain> {
    approximate_chain(&f.map, Some(f), cfg)
}

fn approximate_chain(
    f: &LocalMap,
    gradient: Option<&GradientLocalMap>,
    cfg: &EngineConfig,
) -> Result<SuspensionChain> {
    let gap = crate::pipeline::estimate_gap(f, cfg)?;
    let radius = f.domain.bounding_radius();
    let n0 = crate::pipeline::select_n(
        &f.compact,
        gap.epsilon,
        radius,
        f.domain.slice_dim(),
        cfg,
    )?;
    let tail_excess = match &f.domain {
        Region::Product { tail_radius, .. } => *tail_radius,
        Region::Balls(balls) => balls.iter().map(|(_, r)| *r).fold(0.0, f64::max),
    };
    let mut last_err: Option<DegreeError> = None;
    for n in n0..=cfg.dimension_cap.min(n0 + 12) {
        let suspended = match f.suspend(n, cfg) {
            Ok(s) => s,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        // The line lives on the original domain; the t-derivative bound is
        // |F(x) - P_n F(P_n x)| <= tau(R, n) + lambda(n) * tail_excess.
        let lipschitz_t =
            f.compact.tail_bound(radius, n) + f.compact.tail_sensitivity(n) * tail_excess;
        let (cf, cs) = (f.compact.clone(), suspended.compact.clone());
        let (tf, ts) = (f.compact.clone(), suspended.compact.clone());
        let (sf, ss) = (f.compact.clone(), suspended.compact.clone());
        let mut line = Otopy::new(
            format!("{} -> suspension_{}", f.name, n),
            move |t, x| cf.evaluate(x).scale(1.0 - t).add(&cs.evaluate(x).scale(t)),
            move |r, m| tf.tail_bound(r, m).max(ts.tail_bound(r, m)),
            f.compact.lipschitz,
            lipschitz_t,
            OtopyDomain::Constant(f.domain.clone()),
        )
        .with_tail_sensitivity(move |m| sf.tail_sensitivity(m).max(ss.tail_sensitivity(m)));
        if let Some(j) = f.compact.input_dim_cap {
            line = line.with_input_dim_cap(j.max(n));
        }
        match certify_otopy(&line, cfg) {
            Ok(certificate) => {
                let restriction = ChainStep::Restriction {
                    from: f.domain.clone(),
                    to: suspended.domain.clone(),
                };
                let (gradient_line, terminal_gradient) = match gradient {
                    None => (None, None),
                    Some(g) => {
                        let phi = g.clone();
                        let gline = GradientOtopy::new(
                            line.clone(),
                            move |t, x: &HilbertVector| {
                                let head = x.project(n as u32);
                                let susp =
                                    phi.potential(&head) + 0.5 * x.sub(&head).norm_sq();
                                (1.0 - t) * phi.potential(x) + t * susp
                            },
                            cfg,
                        )?;
                        let term = g.suspend(n, cfg)?;
                        (Some(gline), Some(term))
                    }
                };
                return Ok(SuspensionChain {
                    steps: vec![
                        ChainStep::Line {
                            otopy: line,
                            certificate,
                        },
                        restriction,
                    ],
                    terminal: suspended,
                    n_used: n,
                    gradient_line,
                    terminal_gradient,
                });
            }
            Err(e @ DegreeError::GapFailure(_)) | Err(e @ DegreeError::NoGap { .. }) => {
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(DegreeError::GapFailure(format!(
        "no dimension up to {} certified the straight-line family ({})",
        cfg.dimension_cap.min(n0 + 12),
        last_err.map_or("no attempts".into(), |e| e.to_string())
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EngineConfig {
        EngineConfig::with_seed(23)
    }

    fn identity_map() -> LocalMap {
        LocalMap::new(
            "identity",
            CompactMapSpec::finite_rank(|_| HilbertVector::zero(), 1, 0.0, |_| 0.0)
                .with_input_dim_cap(1),
            Region::ball(HilbertVector::zero(), 1.0),
        )
    }

    #[test]
    fn constant_family_reduces_to_the_map_gap() {
        let f = identity_map();
        let h = straight_line_homotopy(&f, &f).unwrap();
        // Endpoints agree with f exactly.
        let x = HilbertVector::new([(1, 0.4), (3, 0.2)]);
        assert_eq!(h.value(0.0, &x), x);
        assert_eq!(h.value(1.0, &x), x);
        let cert = certify_otopy(&h, &cfg()).unwrap();
        assert!(cert.sound);
        assert!((cert.epsilon - 0.5).abs() < 0.1, "epsilon {}", cert.epsilon);
    }

    #[test]
    fn region_mismatch_is_rejected() {
        let f = identity_map();
        let g = LocalMap::new(
            "identity_smaller",
            f.compact.clone(),
            Region::ball(HilbertVector::zero(), 0.5),
        );
        assert!(matches!(
            straight_line_homotopy(&f, &g),
            Err(DegreeError::RegionMismatch)
        ));
    }

    #[test]
    fn zero_crossing_family_fails_certification() {
        // h(t, x) = x - 2t e1 passes a zero through the boundary at t = 1/2.
        let h = Otopy::new(
            "escaping",
            |t, _x: &HilbertVector| HilbertVector::new([(1, 2.0 * t)]),
            |_, n| if n >= 1 { 0.0 } else { 2.0 },
            0.0,
            2.0,
            OtopyDomain::Constant(Region::ball(HilbertVector::zero(), 1.0)),
        )
        .with_input_dim_cap(1);
        let res = certify_otopy(&h, &cfg());
        assert!(
            matches!(res, Err(DegreeError::GapFailure(_)) | Err(DegreeError::NoGap { .. })),
            "{res:?}"
        );
    }

    #[test]
    fn piece_coverage_is_checked() {
        let r = Region::ball(HilbertVector::zero(), 1.0);
        let h = Otopy::new(
            "gappy",
            |_t, _x: &HilbertVector| HilbertVector::zero(),
            |_, _| 0.0,
            0.0,
            0.0,
            OtopyDomain::Pieces(vec![(0.0, 0.4, r.clone()), (0.6, 1.0, r)]),
        );
        assert!(matches!(
            certify_otopy(&h, &cfg()),
            Err(DegreeError::PieceMismatch { .. })
        ));
    }

    #[test]
    fn constant_family_audit_returns_equal_reports() {
        let f = identity_map();
        let h = straight_line_homotopy(&f, &f).unwrap();
        let (d0, d1) = invariance_audit(&h, &cfg()).unwrap();
        assert_eq!(d0.value, 1);
        assert_eq!(d1.value, 1);
    }

    #[test]
    fn suspension_chain_for_identity_is_trivial() {
        let f = identity_map();
        let chain = approximate_by_suspension(&f, &cfg()).unwrap();
        let x = HilbertVector::new([(1, 0.2), (4, 0.3)]);
        assert_eq!(chain.terminal.f_unchecked(&x), x);
    }

    #[test]
    fn suspend_finite_identity_family() {
        let k = FiniteOtopy {
            dim: 2,
            eval: Arc::new(|_t, x: &[f64]| x.to_vec()),
            domain: Shape::ball(vec![0.0, 0.0], 1.0),
            lipschitz_x: 1.0,
            lipschitz_t: 0.0,
        };
        let h = suspend_finite_otopy(&k, 1.5, 1.0, &cfg()).unwrap();
        let (d0, d1) = invariance_audit(&h, &cfg()).unwrap();
        assert_eq!(d0.value, 1);
        assert_eq!(d1.value, 1);
    }

    #[test]
    fn escaping_finite_family_is_unbounded() {
        let k = FiniteOtopy {
            dim: 2,
            eval: Arc::new(|t, x: &[f64]| vec![x[0] + 50.0 * t, x[1]]),
            domain: Shape::ball(vec![0.0, 0.0], 1.0),
            lipschitz_x: 1.0,
            lipschitz_t: 50.0,
        };
        assert!(matches!(
            suspend_finite_otopy(&k, 2.0, 1.0, &cfg()),
            Err(DegreeError::Unbounded { .. })
        ));
    }
}
