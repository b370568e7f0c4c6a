//! Compact maps, local maps, gradient local maps, Galerkin sections and
//! suspensions.
//!
//! A [`CompactMapSpec`] packages the evaluation oracle for `F` with the data
//! that makes the degree construction computable: a certified tail modulus
//! `tau(R, n)` bounding `|F(x) - P_n F(x)|` on the ball of radius `R`, a
//! Lipschitz modulus, and optional finite-rank / finite-input flags. A
//! [`LocalMap`] is `f = id - F` on a bounded region enclosing the zero set.

use crate::brouwer::FiniteMap;
use crate::config::EngineConfig;
use crate::error::{DegreeError, Result};
use crate::gap;
use crate::hilbert::HilbertVector;
use crate::region::Region;
use std::sync::Arc;

pub type MapFn = Arc<dyn Fn(&HilbertVector) -> HilbertVector + Send + Sync>;
pub type TailBoundFn = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;
pub type TailSensFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;
pub type PotentialFn = Arc<dyn Fn(&HilbertVector) -> f64 + Send + Sync>;

/// Evaluation oracle for a compact map `F` plus the moduli that
/// operationalize compactness at desk scale.
#[derive(Clone)]
pub struct CompactMapSpec {
    evaluate: MapFn,
    tail_bound: TailBoundFn,
    /// `|F(x) - F(y)| <= lipschitz * |x - y|` on the declared region.
    pub lipschitz: f64,
    /// `Some(m)` when `F(E)` lies in `V_m`.
    pub output_dim_cap: Option<usize>,
    /// `Some(j)` when `F(x) = F(P_j x)`.
    pub input_dim_cap: Option<usize>,
    tail_sensitivity: Option<TailSensFn>,
}

impl CompactMapSpec {
    pub fn new(
        evaluate: impl Fn(&HilbertVector) -> HilbertVector + Send + Sync + 'static,
        tail_bound: impl Fn(f64, usize) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
    ) -> Self {
        CompactMapSpec {
            evaluate: Arc::new(evaluate),
            tail_bound: Arc::new(tail_bound),
            lipschitz,
            output_dim_cap: None,
            input_dim_cap: None,
            tail_sensitivity: None,
        }
    }

    /// A finite-rank map into `V_m`: the tail bound vanishes for `n >= m`
    /// and falls back to `sup_f(R)` below the rank.
    pub fn finite_rank(
        evaluate: impl Fn(&HilbertVector) -> HilbertVector + Send + Sync + 'static,
        m: usize,
        lipschitz: f64,
        sup_f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CompactMapSpec::new(
            evaluate,
            move |r, n| if n >= m { 0.0 } else { sup_f(r) },
            lipschitz,
        )
        .with_output_dim_cap(m)
    }

    pub fn with_output_dim_cap(mut self, m: usize) -> Self {
        self.output_dim_cap = Some(m);
        self
    }

    pub fn with_input_dim_cap(mut self, j: usize) -> Self {
        self.input_dim_cap = Some(j);
        self
    }

    /// Overrides the tail input sensitivity `lambda(n)` (defaults to the
    /// Lipschitz modulus, or zero past an input cap).
    pub fn with_tail_sensitivity(
        mut self,
        lambda: impl Fn(usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.tail_sensitivity = Some(Arc::new(lambda));
        self
    }

    pub fn evaluate(&self, x: &HilbertVector) -> HilbertVector {
        (self.evaluate)(x)
    }

    pub fn tail_bound(&self, radius: f64, n: usize) -> f64 {
        if self.output_dim_cap.map_or(false, |m| n >= m) {
            return 0.0;
        }
        (self.tail_bound)(radius, n)
    }

    /// `lambda(n)`: Lipschitz constant of `F` under perturbations orthogonal
    /// to `V_n`.
    pub fn tail_sensitivity(&self, n: usize) -> f64 {
        if self.input_dim_cap.map_or(false, |j| n >= j) {
            return 0.0;
        }
        match &self.tail_sensitivity {
            Some(l) => l(n),
            None => self.lipschitz,
        }
    }
}

/// `f = id - F` on a bounded region with the zero set inside.
#[derive(Clone)]
pub struct LocalMap {
    pub name: String,
    pub compact: CompactMapSpec,
    pub domain: Region,
    /// Ambient open set; `None` means all of the space.
    pub ambient: Option<Region>,
}

impl LocalMap {
    pub fn new(name: impl Into<String>, compact: CompactMapSpec, domain: Region) -> Self {
        LocalMap {
            name: name.into(),
            compact,
            domain,
            ambient: None,
        }
    }

    pub fn with_ambient(mut self, ambient: Region) -> Self {
        self.ambient = Some(ambient);
        self
    }

    /// `f(x) = x - F(x)`; requires `x` in the closure of the domain.
    pub fn evaluate_f(&self, x: &HilbertVector) -> Result<HilbertVector> {
        if !self.domain.contains_closure(x) {
            return Err(DegreeError::OutOfDomain);
        }
        Ok(self.f_unchecked(x))
    }

    /// `f` without the membership guard (engine internals sample slightly
    /// outside the closure; the catalog formulas extend continuously).
    pub fn f_unchecked(&self, x: &HilbertVector) -> HilbertVector {
        x.sub(&self.compact.evaluate(x))
    }

    /// The Galerkin section `f_n(x) = x - P_n F(x)` on `U_n`, packaged for
    /// the finite-dimensional engine.
    pub fn galerkin(&self, n: usize) -> Result<FiniteMap> {
        let shape = self.domain.slice(n)?;
        let compact = self.compact.clone();
        let eval = move |xs: &[f64]| -> Vec<f64> {
            let x = HilbertVector::from_dense(xs);
            x.sub(&compact.evaluate(&x).project(n as u32)).to_dense(n)
        };
        Ok(FiniteMap::new(
            n,
            Arc::new(eval),
            shape,
            self.domain.slice_dim(),
        ))
    }

    /// The suspension `x - P_n F(P_n x)` on `P_n^{-1}(U_n)` cut by a tail
    /// ball: same zeros as `f_n` embedded in `V_n`, finite rank `n`.
    ///
    /// Fails with `GapFailure` when no positive boundary gap for `f_n` on the
    /// sliced boundary can be certified.
    pub fn suspend(&self, n: usize, cfg: &EngineConfig) -> Result<LocalMap> {
        let slice_shape = self.domain.slice(n)?;
        let fm = self.galerkin(n)?;
        let modulus = move |p: &[f64]| {
            let v = fm.eval(p);
            v.iter().map(|a| a * a).sum::<f64>().sqrt()
        };
        gap::certify_finite_gap(&slice_shape, &modulus, 1.0 + self.compact.lipschitz, cfg)
            .map_err(|e| match e {
                DegreeError::NoGap { min, mesh } => DegreeError::GapFailure(format!(
                    "suspension at n={n}: no certified gap for the section (min {min:e} at mesh {mesh:e})"
                )),
                other => other,
            })?;
        let tail_radius = match &self.domain {
            Region::Product { tail_radius, .. } => *tail_radius,
            Region::Balls(balls) => balls.iter().map(|(_, r)| *r).fold(0.0, f64::max),
        };
        let inner = self.compact.clone();
        let tb = self.compact.clone();
        let lam = self.compact.clone();
        let spec = CompactMapSpec::new(
            move |x: &HilbertVector| inner.evaluate(&x.project(n as u32)).project(n as u32),
            move |r, m| {
                if m >= n {
                    0.0
                } else {
                    tb.tail_bound(r, m)
                }
            },
            self.compact.lipschitz,
        )
        .with_output_dim_cap(n)
        .with_input_dim_cap(n)
        .with_tail_sensitivity(move |m| {
            if m >= n {
                0.0
            } else {
                lam.tail_sensitivity(m)
            }
        });
        let mut out = LocalMap::new(
            format!("{}|suspended_{}", self.name, n),
            spec,
            Region::Product {
                dim: n,
                shape: slice_shape,
                tail_radius,
            },
        );
        out.ambient = self.ambient.clone();
        Ok(out)
    }

    /// Spot-checks the tail bound and the Lipschitz modulus on random domain
    /// points; violation is a construction error.
    pub fn audit_moduli(&self, cfg: &EngineConfig, samples: usize) -> Result<()> {
        let mut rng = cfg.rng(0xA0D1);
        let radius = self.domain.bounding_radius();
        let dims: Vec<usize> = {
            let lo = self.domain.slice_dim();
            (lo..lo + 8).collect()
        };
        let mut pts = Vec::with_capacity(samples);
        for _ in 0..samples {
            pts.push(self.domain.sample_point(&mut rng));
        }
        for x in &pts {
            let fx = self.compact.evaluate(x);
            for &n in &dims {
                let defect = fx.sub(&fx.project(n as u32)).norm();
                let bound = self.compact.tail_bound(radius.max(x.norm()), n);
                if defect > bound + 1e-9 {
                    return Err(DegreeError::AuditFailure(format!(
                        "tail defect {defect:e} exceeds tau(R, {n}) = {bound:e} on {}",
                        self.name
                    )));
                }
            }
        }
        // tau must be nonincreasing in n.
        for &n in &dims {
            let a = self.compact.tail_bound(radius, n);
            let b = self.compact.tail_bound(radius, n + 1);
            if b > a + 1e-12 {
                return Err(DegreeError::AuditFailure(format!(
                    "tau(R, n) increases from {a:e} to {b:e} at n={n} on {}",
                    self.name
                )));
            }
        }
        for pair in pts.chunks_exact(2) {
            let (x, y) = (&pair[0], &pair[1]);
            let lhs = self.compact.evaluate(x).sub(&self.compact.evaluate(y)).norm();
            let rhs = self.compact.lipschitz * x.dist(y);
            if lhs > rhs + 1e-9 {
                return Err(DegreeError::AuditFailure(format!(
                    "Lipschitz violation on {}: |F(x)-F(y)| = {lhs:e} > L|x-y| = {rhs:e}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// A local map that is the gradient of a C1 potential.
#[derive(Clone)]
pub struct GradientLocalMap {
    pub map: LocalMap,
    potential: PotentialFn,
}

impl GradientLocalMap {
    /// Wraps a local map with its potential and spot-checks that the
    /// central-difference gradient matches `f` at a few domain points.
    pub fn new(
        map: LocalMap,
        potential: impl Fn(&HilbertVector) -> f64 + Send + Sync + 'static,
        cfg: &EngineConfig,
    ) -> Result<Self> {
        let g = GradientLocalMap {
            map,
            potential: Arc::new(potential),
        };
        g.audit_gradient(cfg, 20)?;
        Ok(g)
    }

    pub fn potential(&self, x: &HilbertVector) -> f64 {
        (self.potential)(x)
    }

    pub fn local_map(&self) -> &LocalMap {
        &self.map
    }

    /// Central finite differences of the potential over the active support
    /// against `f = id - F`, at `samples` random domain points.
    pub fn audit_gradient(&self, cfg: &EngineConfig, samples: usize) -> Result<()> {
        let mut rng = cfg.rng(0x56AD ^ self.map.name.len() as u64);
        let h = cfg.grad_check_step;
        let tol = cfg.grad_check_tol;
        for _ in 0..samples {
            let x = self.map.domain.sample_point(&mut rng);
            let fx = self.map.f_unchecked(&x);
            let mut active: Vec<u32> = (1..=self.map.domain.slice_dim() as u32).collect();
            for &(i, _) in x.coords() {
                if !active.contains(&i) {
                    active.push(i);
                }
            }
            for i in active {
                let e = HilbertVector::basis(i);
                let fp = (self.potential)(&x.axpy(h, &e));
                let fm = (self.potential)(&x.axpy(-h, &e));
                let fd = (fp - fm) / (2.0 * h);
                let diff = (fd - fx.get(i)).abs();
                if diff > tol {
                    return Err(DegreeError::AuditFailure(format!(
                        "gradient audit failed on {} at coordinate {}: fd {} vs f {} (diff {:e})",
                        self.map.name,
                        i,
                        fd,
                        fx.get(i),
                        diff
                    )));
                }
            }
        }
        Ok(())
    }

    /// Suspension with the matching potential `phi(P_n x) + |x - P_n x|^2/2`.
    pub fn suspend(&self, n: usize, cfg: &EngineConfig) -> Result<GradientLocalMap> {
        let map = self.map.suspend(n, cfg)?;
        let phi = self.potential.clone();
        GradientLocalMap::new(
            map,
            move |x: &HilbertVector| {
                let head = x.project(n as u32);
                phi(&head) + 0.5 * x.sub(&head).norm_sq()
            },
            cfg,
        )
    }
}

/// Covering construction for a finite set `K` inside an open region: returns
/// `U`, a union of balls `B(x_i, R_i/2)` with closure in the ambient region,
/// and the dimension `N` past which every projection `P_n(cl U)` stays inside.
///
/// With no ambient region the whole space absorbs every projection and
/// `N = 1`.
pub fn safe_neighborhood(
    points: &[HilbertVector],
    ambient: Option<&Region>,
) -> Result<(Region, usize)> {
    assert!(!points.is_empty());
    let mut balls = Vec::with_capacity(points.len());
    let mut big_n = 1usize;
    for x in points {
        let r_x = match ambient {
            None => 1.0,
            Some(omega) => {
                let depth = omega.interior_depth_lb(x);
                if depth <= 0.0 {
                    return Err(DegreeError::NotInterior);
                }
                depth
            }
        };
        balls.push((x.clone(), r_x / 2.0));
        if ambient.is_some() {
            // Smallest n with |x - P_n x| < R_x / 2; exact from the support.
            let mut n = 1usize;
            loop {
                if x.tail(n as u32).norm() < r_x / 2.0 {
                    break;
                }
                n += 1;
            }
            big_n = big_n.max(n);
        }
    }
    Ok((Region::ball_union(balls), big_n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::Shape;

    fn cfg() -> EngineConfig {
        EngineConfig::with_seed(11)
    }

    fn identity_map(region: Region) -> LocalMap {
        LocalMap::new(
            "identity",
            CompactMapSpec::finite_rank(|_| HilbertVector::zero(), 1, 0.0, |_| 0.0)
                .with_input_dim_cap(1),
            region,
        )
    }

    #[test]
    fn zero_compact_part_gives_identity() {
        let f = identity_map(Region::ball(HilbertVector::zero(), 1.0));
        let x = HilbertVector::new([(1, 0.3), (4, -0.2)]);
        assert_eq!(f.evaluate_f(&x).unwrap(), x);
    }

    #[test]
    fn forced_cancellation_in_first_coordinate() {
        // F(x) = x_1 e_1 makes f kill the first coordinate.
        let spec = CompactMapSpec::finite_rank(
            |x: &HilbertVector| HilbertVector::new([(1, x.get(1))]),
            1,
            1.0,
            |r| r,
        )
        .with_input_dim_cap(1);
        let f = LocalMap::new("kill1", spec, Region::ball(HilbertVector::zero(), 1.0));
        let out = f.evaluate_f(&HilbertVector::new([(1, 0.5)])).unwrap();
        assert_eq!(out, HilbertVector::zero());
        let out2 = f
            .evaluate_f(&HilbertVector::new([(1, 0.3), (2, 0.4)]))
            .unwrap();
        assert_eq!(out2, HilbertVector::new([(2, 0.4)]));
    }

    #[test]
    fn doubled_projection_flips_sign() {
        // F(x) = 2 P_1 x: f(0.3 e1 + 0.4 e2) = (-0.3, 0.4).
        let spec = CompactMapSpec::finite_rank(
            |x: &HilbertVector| x.project(1).scale(2.0),
            1,
            2.0,
            |r| 2.0 * r,
        )
        .with_input_dim_cap(1);
        let f = LocalMap::new("double1", spec, Region::ball(HilbertVector::zero(), 1.0));
        let out = f
            .evaluate_f(&HilbertVector::new([(1, 0.3), (2, 0.4)]))
            .unwrap();
        assert_eq!(out, HilbertVector::new([(1, -0.3), (2, 0.4)]));
    }

    #[test]
    fn out_of_domain_is_detected() {
        let f = identity_map(Region::ball(HilbertVector::zero(), 1.0));
        let far = HilbertVector::new([(3, 5.0)]);
        assert!(matches!(f.evaluate_f(&far), Err(DegreeError::OutOfDomain)));
    }

    #[test]
    fn galerkin_requires_enough_dimensions() {
        let region = Region::product(Shape::ball(vec![0.0, 0.0], 1.0), 1.0);
        let f = identity_map(region);
        assert!(matches!(
            f.galerkin(1),
            Err(DegreeError::DimensionTooSmall { .. })
        ));
        assert!(f.galerkin(2).is_ok());
    }

    #[test]
    fn constant_high_output_projects_to_identity() {
        // F = c e_{n+1} constant: f_n is the identity on U_n.
        let n = 3usize;
        let spec = CompactMapSpec::finite_rank(
            move |_x: &HilbertVector| HilbertVector::new([(n as u32 + 1, 0.7)]),
            n + 1,
            0.0,
            |_| 0.7,
        );
        let f = LocalMap::new(
            "const_high",
            spec,
            Region::product(Shape::ball(vec![0.0, 0.0], 1.0), 1.0),
        );
        let fm = f.galerkin(n).unwrap();
        let v = fm.eval(&[0.2, -0.1, 0.4]);
        assert_eq!(v, vec![0.2, -0.1, 0.4]);
    }

    #[test]
    fn diagonal_galerkin_values() {
        // F(x)_i = x_i / 2^i: f_2 at (1, 1) = (0.5, 0.75).
        let spec = CompactMapSpec::new(
            |x: &HilbertVector| {
                HilbertVector::new(
                    x.coords()
                        .iter()
                        .map(|&(i, v)| (i, v / 2f64.powi(i as i32))),
                )
            },
            |r, n| r / 2f64.powi(n as i32 + 1),
            0.5,
        );
        let f = LocalMap::new(
            "diag",
            spec,
            Region::product(Shape::ball(vec![0.0, 0.0], 2.0), 1.0),
        );
        let fm = f.galerkin(2).unwrap();
        assert_eq!(fm.eval(&[1.0, 1.0]), vec![0.5, 0.75]);
    }

    #[test]
    fn suspension_of_identity_is_identity() {
        let f = identity_map(Region::product(Shape::ball(vec![0.0, 0.0], 1.0), 1.0));
        let s = f.suspend(4, &cfg()).unwrap();
        assert_eq!(s.compact.output_dim_cap, Some(4));
        assert_eq!(s.compact.tail_bound(5.0, 4), 0.0);
        let x = HilbertVector::new([(1, 0.2), (6, 0.1)]);
        assert_eq!(s.f_unchecked(&x), x);
    }

    #[test]
    fn gradient_audit_accepts_bowl_and_rejects_mismatch() {
        let region = Region::ball(HilbertVector::zero(), 1.0);
        let spec = CompactMapSpec::finite_rank(|_| HilbertVector::zero(), 1, 0.0, |_| 0.0)
            .with_input_dim_cap(1);
        let f = LocalMap::new("bowl", spec.clone(), region.clone());
        // Potential |x|^2/2 has gradient exactly id.
        assert!(GradientLocalMap::new(f, |x| 0.5 * x.norm_sq(), &cfg()).is_ok());
        let g = LocalMap::new("bad", spec, region);
        let res = GradientLocalMap::new(g, |x| x.norm_sq(), &cfg());
        assert!(matches!(res, Err(DegreeError::AuditFailure(_))));
    }

    #[test]
    fn safe_neighborhood_without_ambient_is_dimension_one() {
        let k = [HilbertVector::new([(1, 1.0), (5, 2.0)])];
        let (u, n) = safe_neighborhood(&k, None).unwrap();
        assert_eq!(n, 1);
        assert!(u.contains(&k[0]));
    }

    #[test]
    fn safe_neighborhood_ball_ambient() {
        // Omega = ball(0, 2), K = {e1}: covering ball radius <= 1/2, N = 1.
        let omega = Region::ball(HilbertVector::zero(), 2.0);
        let k = [HilbertVector::basis(1)];
        let (u, n) = safe_neighborhood(&k, Some(&omega)).unwrap();
        assert_eq!(n, 1);
        match &u {
            Region::Balls(balls) => assert!(balls[0].1 <= 0.5 + 1e-12),
            _ => panic!("expected ball union"),
        }
        // Projections of the closure stay inside for n in N..N+5.
        for m in 1..=6u32 {
            for t in [0.0, 0.5, 1.0] {
                let y = k[0].axpy(t * 0.5, &HilbertVector::basis(2));
                assert!(omega.contains(&y.project(m)));
            }
        }
    }

    #[test]
    fn safe_neighborhood_needs_high_projection_for_offset_ambient() {
        // Omega centered on coordinate 5: projections below 5 fall outside.
        let omega = Region::ball(HilbertVector::new([(5, 2.0)]), 1.0);
        let x = HilbertVector::new([(1, 0.1), (5, 2.0), (6, 0.2)]);
        let (u, n) = safe_neighborhood(&[x.clone()], Some(&omega)).unwrap();
        assert!(n >= 5, "N = {n}");
        assert!(u.contains(&x));
        assert!(!omega.contains(&x.project(4)));
        for m in n..n + 6 {
            assert!(omega.contains(&x.project(m as u32)));
        }
    }

    #[test]
    fn boundary_point_of_ambient_is_rejected() {
        let omega = Region::ball(HilbertVector::zero(), 1.0);
        let x = HilbertVector::basis(1); // exactly on the boundary
        assert!(matches!(
            safe_neighborhood(&[x], Some(&omega)),
            Err(DegreeError::NotInterior)
        ));
    }

    #[test]
    fn tail_bound_audit_catches_lies() {
        // Claims tau = 0 but outputs into coordinate 9.
        let spec = CompactMapSpec::new(
            |_x: &HilbertVector| HilbertVector::new([(9, 0.5)]),
            |_, _| 0.0,
            0.0,
        );
        let f = LocalMap::new("liar", spec, Region::ball(HilbertVector::zero(), 1.0));
        assert!(matches!(
            f.audit_moduli(&cfg(), 16),
            Err(DegreeError::AuditFailure(_))
        ));
    }
}
