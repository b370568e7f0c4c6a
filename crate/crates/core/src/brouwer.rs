//! Finite-dimensional Brouwer degree.
//!
//! The primary method counts preimages of a random regular value near zero:
//! multi-start damped Newton from a deterministic seed grid, clustering of
//! the solutions, and the signed sum of Jacobian determinants. Misses are
//! guarded by doubling the grid density until two consecutive densities
//! agree. Three independent oracles cross-check the engine on low
//! dimensions: winding of the boundary field (dim 2), endpoint sign data
//! (dim 1), and a signed covering count of the normalized field on a
//! triangulated boundary (dim <= 3).

use crate::config::EngineConfig;
use crate::error::{DegreeError, Result};
use crate::shape::{Loop2, Shape};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

pub type FiniteEval = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type FiniteJac = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A continuous map on the closure of a finite-dimensional region slice.
#[derive(Clone)]
pub struct FiniteMap {
    pub dim: usize,
    eval: FiniteEval,
    jac: Option<FiniteJac>,
    pub shape: Shape,
    /// Coordinates `<= slice_dim` carry the region's shape data and are
    /// seeded densely; the rest default to a sparse stencil.
    pub slice_dim: usize,
}

impl FiniteMap {
    pub fn new(dim: usize, eval: FiniteEval, shape: Shape, slice_dim: usize) -> Self {
        assert_eq!(shape.dim(), dim);
        FiniteMap {
            dim,
            eval,
            jac: None,
            shape,
            slice_dim: slice_dim.min(dim),
        }
    }

    pub fn with_jacobian(mut self, jac: FiniteJac) -> Self {
        self.jac = Some(jac);
        self
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    /// Jacobian oracle: supplied closure, or forward differences.
    pub fn jacobian(&self, x: &[f64], fd_step: f64) -> DMatrix<f64> {
        if let Some(j) = &self.jac {
            return j(x);
        }
        let f0 = self.eval(x);
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        let mut xp = x.to_vec();
        for col in 0..n {
            xp[col] += fd_step;
            let fp = self.eval(&xp);
            xp[col] = x[col];
            for row in 0..n {
                m[(row, col)] = (fp[row] - f0[row]) / fd_step;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DegreeMethod {
    PreimageCount,
    Winding,
    SignChange,
    SimplicialBoundary,
}

/// Auditable outcome of a finite-dimensional degree computation.
#[derive(Debug, Clone, Serialize)]
pub struct DegreeCertificate {
    pub value: i64,
    pub method: DegreeMethod,
    pub regular_value_used: Vec<f64>,
    /// `(point, sign of det J)` for each distinct preimage.
    pub zeros_found: Vec<(Vec<f64>, i8)>,
    pub residuals: Vec<f64>,
    pub seed: u64,
    pub newton_starts: usize,
}

/// Brouwer degree by regular-value preimage counting.
///
/// `gap` must lower-bound `|f|` on the region boundary; the regular value is
/// drawn with `|y| < gap/2`, so preimages cannot hide near the boundary.
pub fn brouwer_degree(f: &FiniteMap, gap: f64, cfg: &EngineConfig) -> Result<DegreeCertificate> {
    if !(gap > 0.0) {
        return Err(DegreeError::BoundaryGapMissing);
    }
    let mut prev: Option<DegreeCertificate> = None;
    for level in 0..=cfg.max_grid_doublings {
        let density = cfg.newton_density * (1u64 << level) as f64;
        let cert = count_preimages(f, gap, density, level, cfg)?;
        if let Some(p) = prev {
            if p.value == cert.value {
                return Ok(cert);
            }
        }
        prev = Some(cert);
    }
    Err(DegreeError::NewtonBudgetExceeded(format!(
        "grid densities disagree after {} doublings",
        cfg.max_grid_doublings
    )))
}

fn count_preimages(
    f: &FiniteMap,
    gap: f64,
    density: f64,
    level: usize,
    cfg: &EngineConfig,
) -> Result<DegreeCertificate> {
    let seeds = seed_grid(f, density, level, cfg)?;
    let mut rng = cfg.rng(0x00B2_0000 ^ (f.dim as u64) << 8 ^ level as u64);
    let mut last_err = DegreeError::DegenerateValue {
        draws: cfg.max_value_draws,
    };
    for _ in 0..cfg.max_value_draws {
        let y = random_in_ball(f.dim, gap / 2.0, &mut rng);
        match try_value(f, &y, &seeds, cfg) {
            Ok(cert) => return Ok(cert),
            Err(e @ DegreeError::DegenerateValue { .. }) => {
                last_err = e;
                continue;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err)
}

fn try_value(
    f: &FiniteMap,
    y: &[f64],
    seeds: &[Vec<f64>],
    cfg: &EngineConfig,
) -> Result<DegreeCertificate> {
    let roots: Vec<Vec<f64>> = seeds
        .par_iter()
        .filter_map(|s| newton_solve(f, y, s, cfg))
        .collect();
    let mut roots = roots;
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut reps: Vec<Vec<f64>> = Vec::new();
    'outer: for r in roots {
        for rep in &reps {
            if dist(&r, rep) < cfg.cluster_radius {
                continue 'outer;
            }
        }
        reps.push(r);
    }
    let mut zeros = Vec::with_capacity(reps.len());
    let mut residuals = Vec::with_capacity(reps.len());
    let mut value = 0i64;
    for rep in reps {
        let fx = f.eval(&rep);
        let res = dist(&fx, y);
        if res > cfg.residual_tol {
            continue;
        }
        let det = f.jacobian(&rep, cfg.jacobian_fd_step).lu().determinant();
        if det.abs() < cfg.jacobian_min_det {
            return Err(DegreeError::DegenerateValue { draws: 1 });
        }
        let sign = if det > 0.0 { 1i8 } else { -1i8 };
        value += sign as i64;
        zeros.push((rep, sign));
        residuals.push(res);
    }
    Ok(DegreeCertificate {
        value,
        method: DegreeMethod::PreimageCount,
        regular_value_used: y.to_vec(),
        zeros_found: zeros,
        residuals,
        seed: cfg.seed,
        newton_starts: seeds.len(),
    })
}

/// Deterministic seed grid: a lattice over the slice coordinates at the
/// requested per-unit-volume density, crossed with either a full lattice or
/// a sparse one-hot stencil over the tail coordinates.
fn seed_grid(
    f: &FiniteMap,
    density: f64,
    level: usize,
    cfg: &EngineConfig,
) -> Result<Vec<Vec<f64>>> {
    let (lo, hi) = f.shape.bounding_box();
    let s = f.slice_dim.min(f.dim).max(1);
    let delta = density.powf(-1.0 / s as f64);
    let axis_points = |a: f64, b: f64| -> Vec<f64> {
        let count = (((b - a) / delta).ceil() as usize).max(1) + 1;
        (0..count)
            .map(|i| a + (b - a) * (i as f64 + 0.5) / count as f64)
            .collect()
    };
    // Slice block lattice.
    let mut slice_pts: Vec<Vec<f64>> = vec![Vec::new()];
    for k in 0..s {
        let axis = axis_points(lo[k], hi[k]);
        let mut next = Vec::with_capacity(slice_pts.len() * axis.len());
        for p in &slice_pts {
            for &v in &axis {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        slice_pts = next;
        if slice_pts.len() > cfg.max_newton_starts {
            return Err(DegreeError::NewtonBudgetExceeded(format!(
                "slice seed lattice exceeds {} starts",
                cfg.max_newton_starts
            )));
        }
    }
    let tail_axes = f.dim - s;
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    if tail_axes == 0 {
        seeds = slice_pts;
    } else if cfg.sparse_tail_seeding {
        // Stencil: tail at center, plus one-hot offsets at a few magnitudes.
        let mid: Vec<f64> = (s..f.dim).map(|k| 0.5 * (lo[k] + hi[k])).collect();
        let fracs: Vec<f64> = (0..=level + 1).map(|j| 0.35 / (1 << j) as f64).collect();
        for p in &slice_pts {
            let mut base = p.clone();
            base.extend_from_slice(&mid);
            seeds.push(base.clone());
            for axis in 0..tail_axes {
                let half = 0.5 * (hi[s + axis] - lo[s + axis]);
                for &frac in &fracs {
                    for sign in [-1.0, 1.0] {
                        let mut q = base.clone();
                        q[s + axis] += sign * frac * 2.0 * half;
                        seeds.push(q);
                    }
                }
            }
        }
    } else {
        let mut tails: Vec<Vec<f64>> = vec![Vec::new()];
        for k in s..f.dim {
            let axis = axis_points(lo[k], hi[k]);
            let mut next = Vec::with_capacity(tails.len() * axis.len());
            for p in &tails {
                for &v in &axis {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            tails = next;
            if slice_pts.len() * tails.len() > cfg.max_newton_starts {
                return Err(DegreeError::NewtonBudgetExceeded(
                    "full tail lattice exceeds the start budget".into(),
                ));
            }
        }
        for p in &slice_pts {
            for t in &tails {
                let mut q = p.clone();
                q.extend_from_slice(t);
                seeds.push(q);
            }
        }
    }
    // Keep starts on or near the region; drop the far-outside bulk.
    let diam = dist(&lo, &hi);
    seeds.retain(|q| f.shape.outside_dist_lb(q) <= 0.05 * diam);
    if seeds.is_empty() {
        seeds.push(lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect());
    }
    if seeds.len() > cfg.max_newton_starts {
        return Err(DegreeError::NewtonBudgetExceeded(format!(
            "{} starts exceed the budget {}",
            seeds.len(),
            cfg.max_newton_starts
        )));
    }
    Ok(seeds)
}

fn newton_solve(f: &FiniteMap, y: &[f64], seed: &[f64], cfg: &EngineConfig) -> Option<Vec<f64>> {
    let mut x = seed.to_vec();
    let escape = 4.0 * (1.0 + f.shape.bounding_radius());
    let mut res = residual(f, &x, y)?;
    for _ in 0..cfg.newton_max_iters {
        if res <= cfg.newton_tol {
            return if f.shape.contains(&x) { Some(x) } else { None };
        }
        let j = f.jacobian(&x, cfg.jacobian_fd_step);
        let rhs = DVector::from_iterator(
            f.dim,
            f.eval(&x).iter().zip(y).map(|(a, b)| a - b),
        );
        let lu = j.lu();
        let dx = lu.solve(&rhs)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let cand: Vec<f64> = x
                .iter()
                .zip(dx.iter())
                .map(|(a, d)| a - lambda * d)
                .collect();
            if let Some(r) = residual(f, &cand, y) {
                if r < res {
                    x = cand;
                    res = r;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() > escape {
            return None;
        }
    }
    if res <= cfg.newton_tol && f.shape.contains(&x) {
        Some(x)
    } else {
        None
    }
}

fn residual(f: &FiniteMap, x: &[f64], y: &[f64]) -> Option<f64> {
    let v = f.eval(x);
    let r = dist(&v, y);
    if r.is_finite() {
        Some(r)
    } else {
        None
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn random_in_ball(dim: usize, radius: f64, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..dim)
            .map(|_| {
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n < 1e-9 {
            continue;
        }
        let u: f64 = rng.gen_range(0.0f64..1.0);
        let r = radius * u.powf(1.0 / dim as f64) * 0.98;
        return dir.into_iter().map(|v| v * r / n).collect();
    }
}

// ---------------------------------------------------------------------------
// Winding oracle (dim 2)
// ---------------------------------------------------------------------------

/// Total winding of `f` along the oriented boundary loops of a planar
/// region: outer loops positively, hole loops negatively. Independent of the
/// preimage engine.
pub fn winding_oracle(f: &FiniteMap, gap: f64) -> Result<i64> {
    if f.dim != 2 {
        return Err(DegreeError::WindingUnsupported);
    }
    let loops = f.shape.loops2().ok_or(DegreeError::WindingUnsupported)?;
    let mut total = 0i64;
    for l in loops {
        let (w, orientation) = loop_winding(f, &l, gap)?;
        total += w * orientation as i64;
    }
    Ok(total)
}

fn loop_points(l: &Loop2, n: usize) -> (Vec<[f64; 2]>, i32) {
    match l {
        Loop2::Circle {
            center,
            radius,
            orientation,
        } => (
            (0..n)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / n as f64;
                    [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                })
                .collect(),
            *orientation,
        ),
        Loop2::Rect {
            min,
            max,
            orientation,
        } => {
            let per_side = (n / 4).max(2);
            let mut pts = Vec::with_capacity(4 * per_side);
            for k in 0..per_side {
                let t = k as f64 / per_side as f64;
                pts.push([min[0] + (max[0] - min[0]) * t, min[1]]);
            }
            for k in 0..per_side {
                let t = k as f64 / per_side as f64;
                pts.push([max[0], min[1] + (max[1] - min[1]) * t]);
            }
            for k in 0..per_side {
                let t = k as f64 / per_side as f64;
                pts.push([max[0] - (max[0] - min[0]) * t, max[1]]);
            }
            for k in 0..per_side {
                let t = k as f64 / per_side as f64;
                pts.push([min[0], max[1] - (max[1] - min[1]) * t]);
            }
            (pts, *orientation)
        }
    }
}

fn loop_winding(f: &FiniteMap, l: &Loop2, gap: f64) -> Result<(i64, i32)> {
    let mut n = 64usize;
    loop {
        let (pts, orientation) = loop_points(l, n);
        let angles: Vec<f64> = pts
            .iter()
            .map(|p| {
                let v = f.eval(&[p[0], p[1]]);
                let norm = v[0].hypot(v[1]);
                if norm < gap / 2.0 {
                    Err(DegreeError::GapFailure(format!(
                        "|f| = {norm:e} < gap/2 at boundary sample ({}, {})",
                        p[0], p[1]
                    )))
                } else {
                    Ok(v[1].atan2(v[0]))
                }
            })
            .collect::<Result<_>>()?;
        let mut accum = 0.0;
        let mut fine = true;
        for k in 0..angles.len() {
            let next = angles[(k + 1) % angles.len()];
            let mut d = next - angles[k];
            while d > std::f64::consts::PI {
                d -= std::f64::consts::TAU;
            }
            while d < -std::f64::consts::PI {
                d += std::f64::consts::TAU;
            }
            if d.abs() >= std::f64::consts::FRAC_PI_4 {
                fine = false;
                break;
            }
            accum += d;
        }
        if fine {
            let w = (accum / std::f64::consts::TAU).round();
            if (accum / std::f64::consts::TAU - w).abs() > 0.05 {
                return Err(DegreeError::MeshBudgetExceeded);
            }
            return Ok((w as i64, orientation));
        }
        n *= 2;
        if n > 1 << 22 {
            return Err(DegreeError::MeshBudgetExceeded);
        }
    }
}

// ---------------------------------------------------------------------------
// Sign-change oracle (dim 1)
// ---------------------------------------------------------------------------

/// Degree over a union of intervals: `(sign f(b) - sign f(a)) / 2` summed.
pub fn sign_change_oracle(f: &FiniteMap, gap: f64) -> Result<i64> {
    if f.dim != 1 {
        return Err(DegreeError::IntervalUnsupported);
    }
    let intervals = f
        .shape
        .intervals()
        .ok_or(DegreeError::IntervalUnsupported)?;
    let mut total = 0i64;
    for (a, b) in intervals {
        let fa = f.eval(&[a])[0];
        let fb = f.eval(&[b])[0];
        if fa.abs() < gap / 2.0 || fb.abs() < gap / 2.0 {
            return Err(DegreeError::GapFailure(format!(
                "|f| below gap/2 at interval endpoint ({a}, {b})"
            )));
        }
        total += ((fb.signum() - fa.signum()) / 2.0) as i64;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Simplicial boundary oracle (dim <= 3)
// ---------------------------------------------------------------------------

/// Degree from boundary data only: the signed number of times the normalized
/// field covers a generic direction, on a refined boundary mesh. Dim 1 falls
/// back to endpoint signs; dim 2 counts crossings of a generic angle.
pub fn simplicial_boundary_oracle(
    f: &FiniteMap,
    gap: f64,
    cfg: &EngineConfig,
) -> Result<i64> {
    match f.dim {
        1 => sign_change_oracle(f, gap),
        2 => crossing_count_2d(f, gap, cfg),
        3 => covering_count_3d(f, gap, cfg),
        _ => Err(DegreeError::TriangulationUnsupported),
    }
}

/// Counts signed crossings of the normalized boundary field through a
/// generic direction; equals the winding but computed combinatorially.
fn crossing_count_2d(f: &FiniteMap, gap: f64, cfg: &EngineConfig) -> Result<i64> {
    let loops = f.shape.loops2().ok_or(DegreeError::WindingUnsupported)?;
    let mut rng = cfg.rng(0x513C);
    'direction: for _ in 0..10 {
        let target: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut total = 0i64;
        let mut prev_count: Option<i64> = None;
        let mut n = 128usize;
        loop {
            total = 0;
            let mut ambiguous = false;
            for l in &loops {
                let (pts, orientation) = loop_points(l, n);
                let mut angles = Vec::with_capacity(pts.len());
                for p in &pts {
                    let v = f.eval(&[p[0], p[1]]);
                    let norm = v[0].hypot(v[1]);
                    if norm < gap / 2.0 {
                        return Err(DegreeError::GapFailure(format!(
                            "|f| = {norm:e} < gap/2 at boundary sample"
                        )));
                    }
                    angles.push(v[1].atan2(v[0]));
                }
                let mut crossings = 0i64;
                for k in 0..angles.len() {
                    let a = angles[k];
                    let b = angles[(k + 1) % angles.len()];
                    let mut d = b - a;
                    while d > std::f64::consts::PI {
                        d -= std::f64::consts::TAU;
                    }
                    while d < -std::f64::consts::PI {
                        d += std::f64::consts::TAU;
                    }
                    if d.abs() >= std::f64::consts::FRAC_PI_4 {
                        ambiguous = true;
                        break;
                    }
                    // Signed crossing of the ray `angle = target`.
                    let rel_a = wrap_angle(a - target);
                    let rel_b = wrap_angle(a + d - target);
                    if rel_a.abs() < 1e-9 || rel_b.abs() < 1e-9 {
                        ambiguous = true;
                        break;
                    }
                    if rel_a < 0.0 && rel_b > 0.0 && d > 0.0 {
                        crossings += 1;
                    } else if rel_a > 0.0 && rel_b < 0.0 && d < 0.0 {
                        crossings -= 1;
                    }
                }
                if ambiguous {
                    break;
                }
                total += crossings * *match l {
                    Loop2::Circle { orientation, .. } | Loop2::Rect { orientation, .. } => {
                        orientation
                    }
                } as i64;
            }
            if ambiguous {
                n *= 2;
                if n > 1 << 22 {
                    continue 'direction;
                }
                continue;
            }
            if let Some(p) = prev_count {
                if p == total {
                    return Ok(total);
                }
            }
            prev_count = Some(total);
            n *= 2;
            if n > 1 << 22 {
                continue 'direction;
            }
        }
    }
    Err(DegreeError::MeshBudgetExceeded)
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    }
    if a < -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

fn covering_count_3d(f: &FiniteMap, gap: f64, cfg: &EngineConfig) -> Result<i64> {
    let mut rng = cfg.rng(0x3D51);
    let mut prev: Option<i64> = None;
    for level in 0..5 {
        let tris = f
            .shape
            .triangulate_boundary(level)
            .ok_or(DegreeError::TriangulationUnsupported)?;
        // Normalize the field at each vertex, reject if the gap fails.
        let mapped: Vec<[[f64; 3]; 3]> = tris
            .par_iter()
            .map(|t| {
                let mut out = [[0.0; 3]; 3];
                for (k, p) in t.iter().enumerate() {
                    let v = f.eval(p);
                    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    if n < gap / 2.0 {
                        return Err(DegreeError::GapFailure(format!(
                            "|f| = {n:e} < gap/2 at boundary vertex"
                        )));
                    }
                    out[k] = [v[0] / n, v[1] / n, v[2] / n];
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let count = 'direction: {
            for _ in 0..12 {
                let u = random_unit3(&mut rng);
                match covering_for_direction(&mapped, u) {
                    Some(c) => break 'direction Some(c),
                    None => continue,
                }
            }
            None
        };
        let Some(count) = count else {
            continue;
        };
        if prev == Some(count) {
            return Ok(count);
        }
        prev = Some(count);
    }
    Err(DegreeError::MeshBudgetExceeded)
}

/// Signed number of spherical triangles covering direction `u`; `None` when
/// a triangle is too close to degenerate for a safe call.
fn covering_for_direction(tris: &[[[f64; 3]; 3]], u: [f64; 3]) -> Option<i64> {
    let mut total = 0i64;
    for t in tris {
        let m = DMatrix::from_fn(3, 3, |r, c| t[c][r]);
        let det = m.clone().lu().determinant();
        let rhs = DVector::from_column_slice(&u);
        if det.abs() < 1e-12 {
            // Degenerate image triangle: covers nothing measurable, but a
            // near-boundary u would be unsafe.
            continue;
        }
        let lam = m.lu().solve(&rhs)?;
        let (l0, l1, l2) = (lam[0], lam[1], lam[2]);
        let min_l = l0.min(l1).min(l2);
        if min_l > 1e-7 {
            total += if det > 0.0 { 1 } else { -1 };
        } else if min_l > -1e-7 {
            // u sits on the edge of a spherical triangle: redraw.
            return None;
        }
    }
    Some(total)
}

fn random_unit3(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n < 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map2(shape: Shape, f: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static) -> FiniteMap {
        FiniteMap::new(
            2,
            Arc::new(move |x: &[f64]| {
                let (a, b) = f(x[0], x[1]);
                vec![a, b]
            }),
            shape,
            2,
        )
    }

    fn disc() -> Shape {
        Shape::ball(vec![0.0, 0.0], 1.0)
    }

    #[test]
    fn identity_on_disc_has_degree_one() {
        let f = map2(disc(), |x, y| (x, y));
        let cfg = EngineConfig::default();
        let cert = brouwer_degree(&f, 1.0, &cfg).unwrap();
        assert_eq!(cert.value, 1);
        assert_eq!(cert.zeros_found.len(), 1);
        assert_eq!(winding_oracle(&f, 1.0).unwrap(), 1);
        assert_eq!(simplicial_boundary_oracle(&f, 1.0, &cfg).unwrap(), 1);
    }

    #[test]
    fn reflection_has_degree_minus_one() {
        let f = map2(disc(), |x, y| (x, -y));
        let cfg = EngineConfig::default();
        assert_eq!(brouwer_degree(&f, 1.0, &cfg).unwrap().value, -1);
        assert_eq!(winding_oracle(&f, 1.0).unwrap(), -1);
        assert_eq!(simplicial_boundary_oracle(&f, 1.0, &cfg).unwrap(), -1);
    }

    #[test]
    fn conjugate_square_field_has_degree_minus_two() {
        // grad of Re(z^3)/3 is (x^2 - y^2, -2xy): winding -2 around 0.
        let f = map2(disc(), |x, y| (x * x - y * y, -2.0 * x * y));
        let cfg = EngineConfig::default();
        let gap = 0.8; // |f| = |z|^2 = 1 on the unit circle
        assert_eq!(winding_oracle(&f, gap).unwrap(), -2);
        assert_eq!(brouwer_degree(&f, gap, &cfg).unwrap().value, -2);
        assert_eq!(simplicial_boundary_oracle(&f, gap, &cfg).unwrap(), -2);
    }

    #[test]
    fn sign_change_counts_matched_zeros() {
        let shape = Shape::axis_box(vec![-1.0], vec![1.0]);
        let lin = FiniteMap::new(1, Arc::new(|x: &[f64]| vec![x[0]]), shape.clone(), 1);
        assert_eq!(sign_change_oracle(&lin, 1.0).unwrap(), 1);
        let neg = FiniteMap::new(1, Arc::new(|x: &[f64]| vec![-x[0]]), shape.clone(), 1);
        assert_eq!(sign_change_oracle(&neg, 1.0).unwrap(), -1);
        let quad = FiniteMap::new(
            1,
            Arc::new(|x: &[f64]| vec![x[0] * x[0] - 0.25]),
            shape,
            1,
        );
        assert_eq!(sign_change_oracle(&quad, 0.5).unwrap(), 0);
    }

    #[test]
    fn identity_and_antipode_in_dim_3() {
        let ball = Shape::ball(vec![0.0, 0.0, 0.0], 1.0);
        let cfg = EngineConfig::default();
        let ident = FiniteMap::new(3, Arc::new(|x: &[f64]| x.to_vec()), ball.clone(), 3);
        assert_eq!(simplicial_boundary_oracle(&ident, 1.0, &cfg).unwrap(), 1);
        assert_eq!(brouwer_degree(&ident, 1.0, &cfg).unwrap().value, 1);
        let anti = FiniteMap::new(
            3,
            Arc::new(|x: &[f64]| x.iter().map(|v| -v).collect()),
            ball,
            3,
        );
        assert_eq!(simplicial_boundary_oracle(&anti, 1.0, &cfg).unwrap(), -1);
        assert_eq!(brouwer_degree(&anti, 1.0, &cfg).unwrap().value, -1);
    }

    #[test]
    fn suspension_to_dim_3_keeps_degree() {
        // (x, -y) suspended by an extra identity coordinate on a cylinder.
        let cyl = Shape::prod(disc(), Shape::ball(vec![0.0], 0.5));
        let f = FiniteMap::new(
            3,
            Arc::new(|x: &[f64]| vec![x[0], -x[1], x[2]]),
            cyl,
            3,
        );
        let cfg = EngineConfig::default();
        assert_eq!(brouwer_degree(&f, 0.5, &cfg).unwrap().value, -1);
        assert_eq!(simplicial_boundary_oracle(&f, 0.5, &cfg).unwrap(), -1);
    }

    #[test]
    fn annulus_winding_cancels() {
        // Radial-distance gradient field on the annulus: outer and inner
        // windings are both +1, with opposite loop orientations.
        let ann = Shape::annulus([0.0, 0.0], 0.5, 1.5);
        let f = map2(ann, |x, y| {
            let r = x.hypot(y);
            let s = 2.0 * (r - 1.0) / r;
            (s * x, s * y)
        });
        assert_eq!(winding_oracle(&f, 0.5).unwrap(), 0);
        let cfg = EngineConfig::default();
        assert_eq!(simplicial_boundary_oracle(&f, 0.5, &cfg).unwrap(), 0);
        assert_eq!(brouwer_degree(&f, 0.5, &cfg).unwrap().value, 0);
    }

    #[test]
    fn degree_respects_excision() {
        // Shrinking the disc around the only zero keeps the degree.
        let small = Shape::ball(vec![0.0, 0.0], 0.3);
        let f = map2(small, |x, y| (x, -y));
        let cfg = EngineConfig::default();
        assert_eq!(brouwer_degree(&f, 0.3, &cfg).unwrap().value, -1);
    }

    #[test]
    fn missing_gap_is_rejected() {
        let f = map2(disc(), |x, y| (x, y));
        let cfg = EngineConfig::default();
        assert!(matches!(
            brouwer_degree(&f, 0.0, &cfg),
            Err(DegreeError::BoundaryGapMissing)
        ));
    }

    #[test]
    fn engine_is_deterministic_across_worker_counts() {
        let f = map2(disc(), |x, y| (x * x - y * y, -2.0 * x * y));
        let cfg = EngineConfig::default();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| brouwer_degree(&f, 0.8, &cfg).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.value, b.value);
        assert_eq!(a.regular_value_used, b.regular_value_used);
        assert_eq!(a.zeros_found.len(), b.zeros_found.len());
        for (za, zb) in a.zeros_found.iter().zip(&b.zeros_found) {
            assert_eq!(za.1, zb.1);
            assert!(dist(&za.0, &zb.0) < 1e-9);
        }
    }
}
