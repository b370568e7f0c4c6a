//! Exact finite-dimensional geometry for region slices: membership, depth
//! bounds, and covering nets of solids and boundaries.
//!
//! Every net constructor returns its points together with a *claimed
//! covering radius*: every point of the target set (solid or boundary) is
//! within that distance of some returned point. Gap certificates rely on
//! this claim, so the constructions are deliberately conservative and the
//! claim is exercised by randomized tests.

use crate::error::{DegreeError, Result};

/// An open subset of R^d assembled from balls and axis-aligned boxes by
/// union, subtraction of a closed hole, and cartesian product.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    AxisBox { min: Vec<f64>, max: Vec<f64> },
    Union(Vec<Shape>),
    /// `base` minus the closure of `hole`.
    Diff { base: Box<Shape>, hole: Box<Shape> },
    /// Cartesian product on consecutive coordinate blocks.
    Prod(Box<Shape>, Box<Shape>),
}

/// A finite point cloud together with the radius within which it covers its
/// target set.
#[derive(Debug, Clone)]
pub struct Net {
    pub points: Vec<Vec<f64>>,
    pub covering: f64,
}

/// Oriented boundary loop of a planar shape: `orientation` +1 for outer
/// loops, -1 for hole loops.
#[derive(Debug, Clone)]
pub enum Loop2 {
    Circle { center: [f64; 2], radius: f64, orientation: i32 },
    Rect { min: [f64; 2], max: [f64; 2], orientation: i32 },
}

/// Oriented triangle of a boundary surface in R^3 (outward orientation).
pub type Tri3 = [[f64; 3]; 3];

impl Shape {
    pub fn ball(center: Vec<f64>, radius: f64) -> Shape {
        assert!(radius > 0.0 && !center.is_empty());
        Shape::Ball { center, radius }
    }

    pub fn axis_box(min: Vec<f64>, max: Vec<f64>) -> Shape {
        assert_eq!(min.len(), max.len());
        assert!(!min.is_empty());
        assert!(min.iter().zip(&max).all(|(a, b)| a < b));
        Shape::AxisBox { min, max }
    }

    pub fn union(parts: Vec<Shape>) -> Shape {
        assert!(!parts.is_empty());
        let d = parts[0].dim();
        assert!(parts.iter().all(|s| s.dim() == d));
        Shape::Union(parts)
    }

    pub fn diff(base: Shape, hole: Shape) -> Shape {
        assert_eq!(base.dim(), hole.dim());
        Shape::Diff { base: Box::new(base), hole: Box::new(hole) }
    }

    pub fn prod(a: Shape, b: Shape) -> Shape {
        Shape::Prod(Box::new(a), Box::new(b))
    }

    /// Annulus `inner < |z - center| < outer` in the plane.
    pub fn annulus(center: [f64; 2], inner: f64, outer: f64) -> Shape {
        assert!(0.0 < inner && inner < outer);
        Shape::diff(
            Shape::ball(center.to_vec(), outer),
            Shape::ball(center.to_vec(), inner),
        )
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Ball { center, .. } => center.len(),
            Shape::AxisBox { min, .. } => min.len(),
            Shape::Union(parts) => parts[0].dim(),
            Shape::Diff { base, .. } => base.dim(),
            Shape::Prod(a, b) => a.dim() + b.dim(),
        }
    }

    /// Open membership.
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Shape::Ball { center, radius } => dist(p, center) < *radius,
            Shape::AxisBox { min, max } => {
                p.iter().zip(min).all(|(x, a)| x > a) && p.iter().zip(max).all(|(x, b)| x < b)
            }
            Shape::Union(parts) => parts.iter().any(|s| s.contains(p)),
            Shape::Diff { base, hole } => base.contains(p) && !hole.contains_closure(p),
            Shape::Prod(a, b) => {
                let (pa, pb) = p.split_at(a.dim());
                a.contains(pa) && b.contains(pb)
            }
        }
    }

    /// Closure membership (conservative for `Diff`: a point of the hole
    /// boundary counts as belonging to the closure).
    pub fn contains_closure(&self, p: &[f64]) -> bool {
        match self {
            Shape::Ball { center, radius } => dist(p, center) <= *radius,
            Shape::AxisBox { min, max } => {
                p.iter().zip(min).all(|(x, a)| x >= a) && p.iter().zip(max).all(|(x, b)| x <= b)
            }
            Shape::Union(parts) => parts.iter().any(|s| s.contains_closure(p)),
            Shape::Diff { base, hole } => {
                base.contains_closure(p) && hole.outside_dist_lb(p) >= 0.0 && !hole.contains(p)
            }
            Shape::Prod(a, b) => {
                let (pa, pb) = p.split_at(a.dim());
                a.contains_closure(pa) && b.contains_closure(pb)
            }
        }
    }

    /// Lower bound on the depth of `p` inside the shape: `B(p, d)` is
    /// contained in the shape for every `d <` the returned value. Zero when
    /// nothing can be guaranteed.
    pub fn inside_depth_lb(&self, p: &[f64]) -> f64 {
        let v = match self {
            Shape::Ball { center, radius } => radius - dist(p, center),
            Shape::AxisBox { min, max } => p
                .iter()
                .zip(min.iter().zip(max))
                .map(|(x, (a, b))| (x - a).min(b - x))
                .fold(f64::INFINITY, f64::min),
            Shape::Union(parts) => parts
                .iter()
                .map(|s| s.inside_depth_lb(p))
                .fold(0.0, f64::max),
            Shape::Diff { base, hole } => {
                base.inside_depth_lb(p).min(hole.outside_dist_lb(p))
            }
            Shape::Prod(a, b) => {
                let (pa, pb) = p.split_at(a.dim());
                a.inside_depth_lb(pa).min(b.inside_depth_lb(pb))
            }
        };
        v.max(0.0)
    }

    /// Lower bound on the distance from `p` to the closure: `B(p, d)` misses
    /// the closure for every `d <` the returned value.
    pub fn outside_dist_lb(&self, p: &[f64]) -> f64 {
        let v = match self {
            Shape::Ball { center, radius } => dist(p, center) - radius,
            Shape::AxisBox { min, max } => p
                .iter()
                .zip(min.iter().zip(max))
                .map(|(x, (a, b))| {
                    if x < a {
                        a - x
                    } else if x > b {
                        x - b
                    } else {
                        0.0
                    }
                })
                .map(|d| d * d)
                .sum::<f64>()
                .sqrt(),
            Shape::Union(parts) => parts
                .iter()
                .map(|s| s.outside_dist_lb(p))
                .fold(f64::INFINITY, f64::min),
            Shape::Diff { base, hole } => {
                base.outside_dist_lb(p).max(hole.inside_depth_lb(p))
            }
            Shape::Prod(a, b) => {
                let (pa, pb) = p.split_at(a.dim());
                a.outside_dist_lb(pa).max(b.outside_dist_lb(pb))
            }
        };
        v.max(0.0)
    }

    /// Axis-aligned bounding box of the closure.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Shape::AxisBox { min, max } => (min.clone(), max.clone()),
            Shape::Union(parts) => {
                let mut it = parts.iter().map(|s| s.bounding_box());
                let (mut lo, mut hi) = it.next().unwrap();
                for (l, h) in it {
                    for k in 0..lo.len() {
                        lo[k] = lo[k].min(l[k]);
                        hi[k] = hi[k].max(h[k]);
                    }
                }
                (lo, hi)
            }
            Shape::Diff { base, .. } => base.bounding_box(),
            Shape::Prod(a, b) => {
                let (mut lo, mut hi) = a.bounding_box();
                let (lb, hb) = b.bounding_box();
                lo.extend(lb);
                hi.extend(hb);
                (lo, hi)
            }
        }
    }

    /// Max of |p| over the closure (via the bounding box).
    pub fn bounding_radius(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Covering net of the closure with claimed covering radius `<= h`.
    pub fn solid_net(&self, h: f64, cap: usize) -> Result<Net> {
        assert!(h > 0.0);
        match self {
            Shape::Ball { center, radius } => {
                let d = center.len();
                let delta = h / (d as f64).sqrt();
                let pts = lattice_in_box(
                    &center.iter().map(|c| c - radius).collect::<Vec<_>>(),
                    &center.iter().map(|c| c + radius).collect::<Vec<_>>(),
                    delta,
                    cap,
                )?;
                let points = pts
                    .into_iter()
                    .map(|p| clamp_to_ball(p, center, *radius))
                    .collect();
                Ok(Net { points, covering: h })
            }
            Shape::AxisBox { min, max } => {
                let d = min.len();
                let delta = 2.0 * h / (d as f64).sqrt();
                let points = lattice_in_box(min, max, delta, cap)?;
                Ok(Net { points, covering: h })
            }
            Shape::Union(parts) => {
                let mut points = Vec::new();
                let mut covering: f64 = 0.0;
                for s in parts {
                    let n = s.solid_net(h, cap.saturating_sub(points.len()))?;
                    covering = covering.max(n.covering);
                    points.extend(n.points);
                }
                Ok(Net { points, covering })
            }
            Shape::Diff { base, hole } => {
                let n = base.solid_net(h, cap)?;
                let margin = n.covering * (1.0 + 1e-9);
                let points = n
                    .points
                    .into_iter()
                    .filter(|p| hole.inside_depth_lb(p) <= margin)
                    .collect();
                Ok(Net { points, covering: n.covering })
            }
            Shape::Prod(a, b) => {
                let ha = h / std::f64::consts::SQRT_2;
                let na = a.solid_net(ha, cap)?;
                let nb = b.solid_net(ha, cap)?;
                product_net(&na, &nb, cap)
            }
        }
    }

    /// Covering net of the boundary with claimed covering radius `<= h`.
    ///
    /// The net may contain extra points within `h` of the boundary (inside or
    /// outside); consumers taking minima over the net stay conservative.
    pub fn boundary_net(&self, h: f64, cap: usize) -> Result<Net> {
        assert!(h > 0.0);
        match self {
            Shape::Ball { center, radius } => sphere_net(center, *radius, h, cap),
            Shape::AxisBox { min, max } => {
                let d = min.len();
                if d == 1 {
                    return Ok(Net {
                        points: vec![vec![min[0]], vec![max[0]]],
                        covering: 0.0,
                    });
                }
                let mut points = Vec::new();
                for axis in 0..d {
                    let (rmin, rmax): (Vec<f64>, Vec<f64>) = (
                        min.iter()
                            .enumerate()
                            .filter(|&(k, _)| k != axis)
                            .map(|(_, &v)| v)
                            .collect(),
                        max.iter()
                            .enumerate()
                            .filter(|&(k, _)| k != axis)
                            .map(|(_, &v)| v)
                            .collect(),
                    );
                    let face = Shape::AxisBox { min: rmin, max: rmax }
                        .solid_net(h, cap.saturating_sub(points.len()))?;
                    for fixed in [min[axis], max[axis]] {
                        for p in &face.points {
                            let mut q = Vec::with_capacity(d);
                            q.extend_from_slice(&p[..axis]);
                            q.push(fixed);
                            q.extend_from_slice(&p[axis..]);
                            points.push(q);
                        }
                    }
                    if points.len() > cap {
                        return Err(DegreeError::MeshBudgetExceeded);
                    }
                }
                Ok(Net { points, covering: h })
            }
            Shape::Union(parts) => {
                let mut points = Vec::new();
                let mut covering: f64 = 0.0;
                for s in parts {
                    let n = s.boundary_net(h, cap.saturating_sub(points.len()))?;
                    let margin = n.covering.max(h) * (1.0 + 1e-9);
                    covering = covering.max(n.covering);
                    points.extend(
                        n.points
                            .into_iter()
                            .filter(|p| self.inside_depth_lb(p) <= margin),
                    );
                }
                Ok(Net { points, covering })
            }
            Shape::Diff { base, hole } => {
                let nb = base.boundary_net(h, cap)?;
                let mb = nb.covering.max(h) * (1.0 + 1e-9);
                let mut points: Vec<Vec<f64>> = nb
                    .points
                    .into_iter()
                    .filter(|p| hole.inside_depth_lb(p) <= mb)
                    .collect();
                let nh = hole.boundary_net(h, cap.saturating_sub(points.len()))?;
                let mh = nh.covering.max(h) * (1.0 + 1e-9);
                let mut covering = nb.covering.max(nh.covering);
                points.extend(
                    nh.points
                        .into_iter()
                        .filter(|p| base.outside_dist_lb(p) <= mh),
                );
                covering = covering.max(h);
                if points.len() > cap {
                    return Err(DegreeError::MeshBudgetExceeded);
                }
                Ok(Net { points, covering })
            }
            Shape::Prod(a, b) => {
                let ha = h / std::f64::consts::SQRT_2;
                let mut parts = Vec::new();
                {
                    let na = a.boundary_net(ha, cap)?;
                    let nb = b.solid_net(ha, cap)?;
                    parts.push(product_net(&na, &nb, cap)?);
                }
                {
                    let na = a.solid_net(ha, cap)?;
                    let nb = b.boundary_net(ha, cap)?;
                    parts.push(product_net(&na, &nb, cap)?);
                }
                let covering = parts.iter().map(|n| n.covering).fold(0.0, f64::max);
                let points: Vec<_> = parts.into_iter().flat_map(|n| n.points).collect();
                if points.len() > cap {
                    return Err(DegreeError::MeshBudgetExceeded);
                }
                Ok(Net { points, covering })
            }
        }
    }

    /// Oriented boundary loops for planar shapes, when representable as
    /// disjoint circles/rectangles (outer) and nested holes (inner).
    pub fn loops2(&self) -> Option<Vec<Loop2>> {
        if self.dim() != 2 {
            return None;
        }
        self.loops2_oriented(1)
    }

    fn loops2_oriented(&self, orientation: i32) -> Option<Vec<Loop2>> {
        match self {
            Shape::Ball { center, radius } => Some(vec![Loop2::Circle {
                center: [center[0], center[1]],
                radius: *radius,
                orientation,
            }]),
            Shape::AxisBox { min, max } => Some(vec![Loop2::Rect {
                min: [min[0], min[1]],
                max: [max[0], max[1]],
                orientation,
            }]),
            Shape::Union(parts) => {
                // Loops are only meaningful for pairwise disjoint closures.
                for (i, a) in parts.iter().enumerate() {
                    for b in parts.iter().skip(i + 1) {
                        if !disjoint_closures(a, b) {
                            return None;
                        }
                    }
                }
                let mut loops = Vec::new();
                for s in parts {
                    loops.extend(s.loops2_oriented(orientation)?);
                }
                Some(loops)
            }
            Shape::Diff { base, hole } => {
                if !hole_strictly_inside(hole, base) {
                    return None;
                }
                let mut loops = base.loops2_oriented(orientation)?;
                loops.extend(hole.loops2_oriented(-orientation)?);
                Some(loops)
            }
            Shape::Prod(a, b) => {
                // A product of two 1-d intervals is a rectangle.
                let ia = a.intervals()?;
                let ib = b.intervals()?;
                if ia.len() != 1 || ib.len() != 1 {
                    return None;
                }
                Some(vec![Loop2::Rect {
                    min: [ia[0].0, ib[0].0],
                    max: [ia[0].1, ib[0].1],
                    orientation,
                }])
            }
        }
    }

    /// Disjoint open intervals for dim-1 shapes, sorted.
    pub fn intervals(&self) -> Option<Vec<(f64, f64)>> {
        if self.dim() != 1 {
            return None;
        }
        match self {
            Shape::Ball { center, radius } => Some(vec![(center[0] - radius, center[0] + radius)]),
            Shape::AxisBox { min, max } => Some(vec![(min[0], max[0])]),
            Shape::Union(parts) => {
                let mut all = Vec::new();
                for s in parts {
                    all.extend(s.intervals()?);
                }
                all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                // Merge overlaps.
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (a, b) in all {
                    match merged.last_mut() {
                        Some(last) if a <= last.1 => last.1 = last.1.max(b),
                        _ => merged.push((a, b)),
                    }
                }
                Some(merged)
            }
            Shape::Diff { base, hole } => {
                let pos = base.intervals()?;
                let neg = hole.intervals()?;
                let mut out = Vec::new();
                for (a, b) in pos {
                    let mut pieces = vec![(a, b)];
                    for &(ha, hb) in &neg {
                        let mut next = Vec::new();
                        for (pa, pb) in pieces {
                            if hb <= pa || ha >= pb {
                                next.push((pa, pb));
                            } else {
                                if ha > pa {
                                    next.push((pa, ha));
                                }
                                if hb < pb {
                                    next.push((hb, pb));
                                }
                            }
                        }
                        pieces = next;
                    }
                    out.extend(pieces);
                }
                out.retain(|(a, b)| b > a);
                out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                Some(out)
            }
            Shape::Prod(_, _) => None,
        }
    }

    /// Outward-oriented boundary triangulation for dim-3 shapes built from
    /// balls, boxes, disc-times-interval products, their disjoint unions and
    /// nested differences. `level` controls refinement (vertices per arc).
    pub fn triangulate_boundary(&self, level: usize) -> Option<Vec<Tri3>> {
        if self.dim() != 3 {
            return None;
        }
        self.tris_oriented(level, false)
    }

    fn tris_oriented(&self, level: usize, flip: bool) -> Option<Vec<Tri3>> {
        let n = 8 * (1 << level);
        match self {
            Shape::Ball { center, radius } => Some(sphere_tris(
                [center[0], center[1], center[2]],
                *radius,
                n,
                flip,
            )),
            Shape::AxisBox { min, max } => Some(box_tris(
                [min[0], min[1], min[2]],
                [max[0], max[1], max[2]],
                n / 2,
                flip,
            )),
            Shape::Union(parts) => {
                for (i, a) in parts.iter().enumerate() {
                    for b in parts.iter().skip(i + 1) {
                        if !disjoint_closures(a, b) {
                            return None;
                        }
                    }
                }
                let mut tris = Vec::new();
                for s in parts {
                    tris.extend(s.tris_oriented(level, flip)?);
                }
                Some(tris)
            }
            Shape::Diff { base, hole } => {
                if !hole_strictly_inside(hole, base) {
                    return None;
                }
                let mut tris = base.tris_oriented(level, flip)?;
                tris.extend(hole.tris_oriented(level, !flip)?);
                Some(tris)
            }
            Shape::Prod(a, b) => {
                // disc x interval or interval x disc: a cylinder.
                match (a.dim(), b.dim()) {
                    (2, 1) => {
                        let (c, r) = as_disc(a)?;
                        let (lo, hi) = b.intervals().and_then(single)?;
                        Some(cylinder_tris(c, r, lo, hi, n, [0, 1, 2], flip))
                    }
                    (1, 2) => {
                        let (c, r) = as_disc(b)?;
                        let (lo, hi) = a.intervals().and_then(single)?;
                        // Axis coordinate comes first: permute (axis, u, v).
                        Some(cylinder_tris(c, r, lo, hi, n, [2, 0, 1], flip))
                    }
                    _ => None,
                }
            }
        }
    }
}

fn single<T: Copy>(v: Vec<T>) -> Option<T> {
    if v.len() == 1 {
        Some(v[0])
    } else {
        None
    }
}

fn as_disc(s: &Shape) -> Option<([f64; 2], f64)> {
    match s {
        Shape::Ball { center, radius } if center.len() == 2 => {
            Some(([center[0], center[1]], *radius))
        }
        _ => None,
    }
}

fn disjoint_closures(a: &Shape, b: &Shape) -> bool {
    // Conservative: bounding boxes must be separated on some axis.
    let (la, ha) = a.bounding_box();
    let (lb, hb) = b.bounding_box();
    la.iter()
        .zip(&ha)
        .zip(lb.iter().zip(&hb))
        .any(|((la, ha), (lb, hb))| *ha < *lb || *hb < *la)
}

fn hole_strictly_inside(hole: &Shape, base: &Shape) -> bool {
    // Conservative: the hole's bounding-box corners must be strictly inside
    // the base, checked through the depth bound at the hole's circumradius.
    let (lo, hi) = hole.bounding_box();
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let circum = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| 0.25 * (b - a) * (b - a))
        .sum::<f64>()
        .sqrt();
    base.inside_depth_lb(&center) > circum
}

fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn clamp_to_ball(mut p: Vec<f64>, center: &[f64], radius: f64) -> Vec<f64> {
    let d = dist(&p, center);
    if d > radius {
        let s = radius / d;
        for (x, c) in p.iter_mut().zip(center) {
            *x = c + (*x - c) * s;
        }
    }
    p
}

/// Lattice with per-axis spacing `<= delta`, endpoints included.
fn lattice_in_box(lo: &[f64], hi: &[f64], delta: f64, cap: usize) -> Result<Vec<Vec<f64>>> {
    let d = lo.len();
    if d == 0 {
        return Ok(vec![Vec::new()]);
    }
    let counts: Vec<usize> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| (((b - a) / delta).ceil() as usize).max(1) + 1)
        .collect();
    let total: usize = counts.iter().try_fold(1usize, |acc, &c| {
        acc.checked_mul(c).filter(|&t| t <= cap)
    })
    .ok_or(DegreeError::MeshBudgetExceeded)?;
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    loop {
        out.push(
            (0..d)
                .map(|k| {
                    let steps = (counts[k] - 1).max(1) as f64;
                    lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / steps
                })
                .collect(),
        );
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == d {
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Covering net of the sphere `|p - center| = radius` with radius `<= h`.
fn sphere_net(center: &[f64], radius: f64, h: f64, cap: usize) -> Result<Net> {
    let d = center.len();
    match d {
        1 => Ok(Net {
            points: vec![vec![center[0] - radius], vec![center[0] + radius]],
            covering: 0.0,
        }),
        2 => {
            let count = ((std::f64::consts::PI * radius / h).ceil() as usize).max(8);
            if count > cap {
                return Err(DegreeError::MeshBudgetExceeded);
            }
            let points = (0..count)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                    vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                })
                .collect();
            // Chord covering radius: half the arc length bounds it.
            Ok(Net {
                points,
                covering: std::f64::consts::PI * radius / count as f64,
            })
        }
        _ => {
            // Lattice ring projected to the sphere. For a lattice of spacing
            // delta, any sphere point has a lattice point within
            // delta*sqrt(d)/2; projecting moves it at most that much again.
            let delta = h / (d as f64).sqrt();
            let ring = delta * (d as f64).sqrt();
            let lo: Vec<f64> = center.iter().map(|c| c - radius - delta).collect();
            let hi: Vec<f64> = center.iter().map(|c| c + radius + delta).collect();
            let pts = lattice_in_box(&lo, &hi, delta, cap.saturating_mul(8))?;
            let mut points = Vec::new();
            for p in pts {
                let r = dist(&p, center);
                if (r - radius).abs() <= ring && r > 1e-12 {
                    let s = radius / r;
                    points.push(
                        p.iter()
                            .zip(center)
                            .map(|(x, c)| c + (x - c) * s)
                            .collect(),
                    );
                }
            }
            if points.len() > cap {
                return Err(DegreeError::MeshBudgetExceeded);
            }
            if points.is_empty() {
                return Err(DegreeError::MeshBudgetExceeded);
            }
            Ok(Net { points, covering: h })
        }
    }
}

fn product_net(a: &Net, b: &Net, cap: usize) -> Result<Net> {
    let total = a
        .points
        .len()
        .checked_mul(b.points.len())
        .filter(|&t| t <= cap)
        .ok_or(DegreeError::MeshBudgetExceeded)?;
    let mut points = Vec::with_capacity(total);
    for pa in &a.points {
        for pb in &b.points {
            let mut q = Vec::with_capacity(pa.len() + pb.len());
            q.extend_from_slice(pa);
            q.extend_from_slice(pb);
            points.push(q);
        }
    }
    Ok(Net {
        points,
        covering: a.covering.hypot(b.covering),
    })
}

// ---------------------------------------------------------------------------
// Triangulations (dim 3)
// ---------------------------------------------------------------------------

fn sphere_tris(center: [f64; 3], radius: f64, n: usize, flip: bool) -> Vec<Tri3> {
    // Latitude/longitude grid; orientation outward unless flipped.
    let n_lat = n.max(4);
    let n_lon = 2 * n_lat;
    let vertex = |i: usize, j: usize| -> [f64; 3] {
        let theta = std::f64::consts::PI * i as f64 / n_lat as f64;
        let phi = 2.0 * std::f64::consts::PI * j as f64 / n_lon as f64;
        [
            center[0] + radius * theta.sin() * phi.cos(),
            center[1] + radius * theta.sin() * phi.sin(),
            center[2] + radius * theta.cos(),
        ]
    };
    let mut tris = Vec::new();
    for i in 0..n_lat {
        for j in 0..n_lon {
            let (a, b, c, d) = (
                vertex(i, j),
                vertex(i + 1, j),
                vertex(i + 1, j + 1),
                vertex(i, j + 1),
            );
            if i > 0 {
                tris.push(orient([a, b, d], flip));
            }
            if i + 1 < n_lat {
                tris.push(orient([b, c, d], flip));
            }
        }
    }
    tris
}

fn box_tris(min: [f64; 3], max: [f64; 3], n: usize, flip: bool) -> Vec<Tri3> {
    let n = n.max(2);
    let mut tris = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for (fixed, outward_flip) in [(min[axis], true), (max[axis], false)] {
            for i in 0..n {
                for j in 0..n {
                    let at = |i: usize, j: usize| -> [f64; 3] {
                        let mut p = [0.0; 3];
                        p[axis] = fixed;
                        p[u] = min[u] + (max[u] - min[u]) * i as f64 / n as f64;
                        p[v] = min[v] + (max[v] - min[v]) * j as f64 / n as f64;
                        p
                    };
                    let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
                    // (u, v, axis) is a right-handed frame, so the natural
                    // orientation points along +axis; flip on the min face.
                    let fl = flip ^ outward_flip;
                    tris.push(orient([a, b, c], fl));
                    tris.push(orient([a, c, d], fl));
                }
            }
        }
    }
    tris
}

/// Cylinder `{(u, v) in disc(c, r)} x {w in [lo, hi]}` with the coordinate
/// roles given by `perm`: local (u, v, w) lands in slots `perm[0..3]`.
fn cylinder_tris(
    c: [f64; 2],
    r: f64,
    lo: f64,
    hi: f64,
    n: usize,
    perm: [usize; 3],
    flip: bool,
) -> Vec<Tri3> {
    let n = n.max(8);
    let place = |u: f64, v: f64, w: f64| -> [f64; 3] {
        let mut p = [0.0; 3];
        p[perm[0]] = u;
        p[perm[1]] = v;
        p[perm[2]] = w;
        p
    };
    // The permutation may be orientation-reversing.
    let perm_flip = !is_even_perm(perm);
    let fl = flip ^ perm_flip;
    let mut tris = Vec::new();
    let n_h = ((hi - lo) / (2.0 * std::f64::consts::PI * r / n as f64)).ceil() as usize + 1;
    // Side wall.
    for k in 0..n {
        let (t0, t1) = (
            2.0 * std::f64::consts::PI * k as f64 / n as f64,
            2.0 * std::f64::consts::PI * (k + 1) as f64 / n as f64,
        );
        for m in 0..n_h {
            let (w0, w1) = (
                lo + (hi - lo) * m as f64 / n_h as f64,
                lo + (hi - lo) * (m + 1) as f64 / n_h as f64,
            );
            let p = |t: f64, w: f64| place(c[0] + r * t.cos(), c[1] + r * t.sin(), w);
            // Outward normal points radially: (t, w) ordering gives it.
            tris.push(orient([p(t0, w0), p(t1, w0), p(t1, w1)], fl));
            tris.push(orient([p(t0, w0), p(t1, w1), p(t0, w1)], fl));
        }
    }
    // Caps: triangle fans over rings, top (+w) keeps orientation, bottom flips.
    for (w, cap_flip) in [(hi, false), (lo, true)] {
        let rings = (n / 4).max(2);
        for ring in 0..rings {
            let (r0, r1) = (
                r * ring as f64 / rings as f64,
                r * (ring + 1) as f64 / rings as f64,
            );
            for k in 0..n {
                let (t0, t1) = (
                    2.0 * std::f64::consts::PI * k as f64 / n as f64,
                    2.0 * std::f64::consts::PI * (k + 1) as f64 / n as f64,
                );
                let p = |rr: f64, t: f64| place(c[0] + rr * t.cos(), c[1] + rr * t.sin(), w);
                let f2 = fl ^ cap_flip;
                if ring == 0 {
                    tris.push(orient([p(0.0, t0), p(r1, t0), p(r1, t1)], f2));
                } else {
                    tris.push(orient([p(r0, t0), p(r1, t0), p(r1, t1)], f2));
                    tris.push(orient([p(r0, t0), p(r1, t1), p(r0, t1)], f2));
                }
            }
        }
    }
    tris
}

fn is_even_perm(p: [usize; 3]) -> bool {
    matches!(p, [0, 1, 2] | [1, 2, 0] | [2, 0, 1])
}

fn orient(t: Tri3, flip: bool) -> Tri3 {
    if flip {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const CAP: usize = 2_000_000;

    fn annulus() -> Shape {
        Shape::annulus([0.0, 0.0], 0.5, 1.5)
    }

    #[test]
    fn membership_of_annulus() {
        let s = annulus();
        assert!(s.contains(&[1.0, 0.0]));
        assert!(!s.contains(&[0.2, 0.0]));
        assert!(!s.contains(&[0.5, 0.0])); // hole boundary excluded
        assert!(!s.contains(&[1.6, 0.0]));
        assert!(s.contains_closure(&[1.5, 0.0]));
        assert!(s.contains_closure(&[0.5, 0.0]));
    }

    #[test]
    fn depth_bounds_are_safe() {
        let s = annulus();
        let p = [1.0, 0.0];
        let depth = s.inside_depth_lb(&p);
        assert!(depth > 0.4 && depth <= 0.5 + 1e-12);
        assert!(s.outside_dist_lb(&[0.1, 0.0]) > 0.3);
    }

    #[test]
    fn intervals_subtract_holes() {
        let s = Shape::diff(
            Shape::axis_box(vec![-1.0], vec![1.0]),
            Shape::ball(vec![0.0], 0.25),
        );
        let iv = s.intervals().unwrap();
        assert_eq!(iv.len(), 2);
        assert!((iv[0].1 - -0.25).abs() < 1e-12);
        assert!((iv[1].0 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn annulus_has_two_loops() {
        let loops = annulus().loops2().unwrap();
        assert_eq!(loops.len(), 2);
        let orientations: Vec<i32> = loops
            .iter()
            .map(|l| match l {
                Loop2::Circle { orientation, .. } | Loop2::Rect { orientation, .. } => *orientation,
            })
            .collect();
        assert!(orientations.contains(&1) && orientations.contains(&-1));
    }

    /// Random boundary points must be within the claimed covering radius.
    #[test]
    fn boundary_nets_cover_their_boundaries() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let shapes: Vec<(Shape, Box<dyn Fn(&mut rand_chacha::ChaCha8Rng) -> Vec<f64>>)> = vec![
            (
                Shape::ball(vec![0.5, -0.25], 1.25),
                Box::new(|rng| {
                    let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    vec![0.5 + 1.25 * t.cos(), -0.25 + 1.25 * t.sin()]
                }),
            ),
            (
                annulus(),
                Box::new(|rng| {
                    let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let r = if rng.gen_bool(0.5) { 0.5 } else { 1.5 };
                    vec![r * t.cos(), r * t.sin()]
                }),
            ),
            (
                Shape::prod(Shape::ball(vec![0.0, 0.0], 1.0), Shape::ball(vec![0.0], 0.8)),
                Box::new(|rng| {
                    // Either the side wall or a cap of the cylinder.
                    let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    if rng.gen_bool(0.5) {
                        let w: f64 = rng.gen_range(-0.8..0.8);
                        vec![t.cos(), t.sin(), w]
                    } else {
                        let r = rng.gen_range(0.0..1.0f64).sqrt();
                        let w = if rng.gen_bool(0.5) { 0.8 } else { -0.8 };
                        vec![r * t.cos(), r * t.sin(), w]
                    }
                }),
            ),
            (
                Shape::axis_box(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 3.0]),
                Box::new(|rng| {
                    let mut p = vec![
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0.0..0.5),
                        rng.gen_range(2.0..3.0),
                    ];
                    let axis = rng.gen_range(0..3usize);
                    let ends = [[-1.0, 1.0], [0.0, 0.5], [2.0, 3.0]];
                    p[axis] = ends[axis][rng.gen_range(0..2usize)];
                    p
                }),
            ),
        ];
        for (shape, sample) in &shapes {
            let net = shape.boundary_net(0.2, CAP).unwrap();
            assert!(net.covering <= 0.2 + 1e-12);
            for _ in 0..200 {
                let x = sample(&mut rng);
                let nearest = net
                    .points
                    .iter()
                    .map(|p| dist(p, &x))
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    nearest <= net.covering * (1.0 + 1e-9),
                    "{:?}: boundary point {:?} at distance {} > covering {}",
                    shape,
                    x,
                    nearest,
                    net.covering
                );
            }
        }
    }

    #[test]
    fn solid_nets_cover_their_interiors() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let shape = Shape::diff(
            Shape::ball(vec![0.0, 0.0], 1.5),
            Shape::ball(vec![0.0, 0.0], 0.5),
        );
        let net = shape.solid_net(0.15, CAP).unwrap();
        for _ in 0..300 {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r: f64 = rng.gen_range(0.5..1.5);
            let x = vec![r * t.cos(), r * t.sin()];
            let nearest = net
                .points
                .iter()
                .map(|p| dist(p, &x))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= net.covering * (1.0 + 1e-9));
        }
    }

    #[test]
    fn sphere_net_in_dim_4_covers() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let center = vec![0.0; 4];
        let net = sphere_net(&center, 1.0, 0.35, CAP).unwrap();
        for _ in 0..200 {
            let mut x: Vec<f64> = (0..4)
                .map(|_| {
                    let u1: f64 = rng.gen_range(1e-9..1.0);
                    let u2: f64 = rng.gen_range(0.0..1.0);
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                })
                .collect();
            let n = dist(&x, &center);
            x.iter_mut().for_each(|v| *v /= n);
            let nearest = net
                .points
                .iter()
                .map(|p| dist(p, &x))
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= net.covering * (1.0 + 1e-9), "dist {}", nearest);
        }
    }

    #[test]
    fn triangulations_are_closed_surfaces() {
        // A closed oriented surface has zero net flux of a constant field:
        // sum of signed-area vectors vanishes.
        let shapes = [
            Shape::ball(vec![0.1, -0.2, 0.3], 0.7),
            Shape::axis_box(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 0.5]),
            Shape::prod(Shape::ball(vec![0.0, 0.0], 1.0), Shape::ball(vec![0.0], 0.4)),
        ];
        for s in &shapes {
            let tris = s.triangulate_boundary(1).unwrap();
            let mut flux = [0.0f64; 3];
            let mut volume = 0.0;
            for t in &tris {
                let u = sub3(t[1], t[0]);
                let v = sub3(t[2], t[0]);
                let n = cross3(u, v);
                for k in 0..3 {
                    flux[k] += 0.5 * n[k];
                }
                // Divergence theorem: 6V = sum over tris of det[a b c].
                volume += det3(t[0], t[1], t[2]) / 6.0;
            }
            for k in 0..3 {
                assert!(flux[k].abs() < 1e-9, "flux {:?} on {:?}", flux, s);
            }
            assert!(volume > 0.0, "orientation inward on {:?}", s);
        }
    }

    fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
        a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0])
    }
}
