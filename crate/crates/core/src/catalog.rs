//! Ready-made maps with known degrees: gradient blocks of prescribed
//! degree, the concentric-circles annulus example, a rank-one cubic on an
//! interval, and randomized finite-rank-plus-decaying-tail maps for
//! stabilization torture tests.
//!
//! Planar gradient fields cannot wind more than +1 around an isolated zero,
//! so positive degrees are assembled from separated +1 bowls while degree
//! `-k` comes from one conjugate-power block `grad Re(z^{k+1})/(k+1)`, whose
//! field is `conj(z)^k` with winding `-k`.

use crate::config::EngineConfig;
use crate::error::{DegreeError, Result};
use crate::expr::Expr;
use crate::hilbert::HilbertVector;
use crate::map::{CompactMapSpec, GradientLocalMap, LocalMap};
use crate::region::Region;
use crate::shape::Shape;
use rand::Rng;

pub use crate::expr::parse as parse_potential;

/// Ball radius of one block.
const BLOCK_RADIUS: f64 = 0.5;
/// Center spacing: 3x the diameter keeps gap certificates uniform.
const BLOCK_SPACING: f64 = 3.0;

#[derive(Debug, Clone, Copy)]
enum Block {
    /// Radial bowl `|w|^2 / 2`: gradient `w`, degree +1.
    Bowl,
    /// `Re(w^{k+1}) / (k+1)`: gradient `conj(w)^k`, degree `-k`.
    Conj(u32),
}

impl Block {
    fn degree(self) -> i64 {
        match self {
            Block::Bowl => 1,
            Block::Conj(k) => -(k as i64),
        }
    }

    fn potential(self, w: [f64; 2]) -> f64 {
        match self {
            Block::Bowl => 0.5 * (w[0] * w[0] + w[1] * w[1]),
            Block::Conj(k) => {
                let p = complex_pow(w, k + 1);
                p[0] / (k as f64 + 1.0)
            }
        }
    }

    fn field(self, w: [f64; 2]) -> [f64; 2] {
        match self {
            Block::Bowl => w,
            Block::Conj(k) => {
                let p = complex_pow(w, k);
                [p[0], -p[1]]
            }
        }
    }
}

fn complex_pow(w: [f64; 2], k: u32) -> [f64; 2] {
    let mut acc = [1.0, 0.0];
    for _ in 0..k {
        acc = [acc[0] * w[0] - acc[1] * w[1], acc[0] * w[1] + acc[1] * w[0]];
    }
    acc
}

/// A gradient local map with `Deg = m`: bowls and conjugate-power blocks in
/// separated Hilbert balls, degrees summing to `m`.
pub fn standard_gradient_map(m: i64, cfg: &EngineConfig) -> Result<GradientLocalMap> {
    let blocks: Vec<Block> = if m > 0 {
        vec![Block::Bowl; m as usize]
    } else if m < 0 {
        vec![Block::Conj((-m) as u32)]
    } else {
        vec![Block::Bowl, Block::Conj(1)]
    };
    let count = blocks.len();
    let centers: Vec<[f64; 2]> = (0..count)
        .map(|j| {
            let x = BLOCK_SPACING * j as f64 - BLOCK_SPACING * (count - 1) as f64 / 2.0;
            [x, 0.0]
        })
        .collect();
    let region = Region::balls(
        centers
            .iter()
            .map(|c| {
                (
                    HilbertVector::new([(1, c[0]), (2, c[1])]),
                    BLOCK_RADIUS,
                )
            })
            .collect(),
    );
    let max_center = centers.iter().map(|c| c[0].abs()).fold(0.0, f64::max);
    // Within a block: Lip(id - grad) <= 2; across separated blocks the
    // bound |F(x)-F(y)| <= |x-y| + |f(x)| + |f(y)| over separation >= 2
    // adds max|c| + 1.
    let lipschitz = 3.0 + max_center;

    let nearest = move |slice: [f64; 2], centers: &[[f64; 2]]| -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in centers.iter().enumerate() {
            let d = (slice[0] - c[0]).hypot(slice[1] - c[1]);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    };

    let (bl, ce) = (blocks.clone(), centers.clone());
    let eval = move |x: &HilbertVector| -> HilbertVector {
        let s = x.to_dense(2);
        let j = nearest([s[0], s[1]], &ce);
        let w = [s[0] - ce[j][0], s[1] - ce[j][1]];
        let g = bl[j].field(w);
        // F = x - grad(Phi) = (slice - g, 0).
        HilbertVector::new([(1, s[0] - g[0]), (2, s[1] - g[1])])
    };
    let spec = CompactMapSpec::new(
        eval,
        move |_r, n| if n >= 2 { 0.0 } else { 2.0 + max_center },
        lipschitz,
    )
    .with_output_dim_cap(2)
    .with_input_dim_cap(2);
    let map = LocalMap::new(format!("standard_gradient_map(m={m})"), spec, region);
    map.audit_moduli(cfg, 32)?;

    let (bl, ce) = (blocks, centers);
    let potential = move |x: &HilbertVector| -> f64 {
        let s = x.to_dense(2);
        let j = nearest([s[0], s[1]], &ce);
        let w = [s[0] - ce[j][0], s[1] - ce[j][1]];
        bl[j].potential(w) + 0.5 * x.tail(2).norm_sq()
    };
    GradientLocalMap::new(map, potential, cfg)
}

/// The concentric-circles example: `f_i = grad(phi_i) x id` on the annulus
/// `1/2 < |z| < 3/2` times a tail ball. `phi_0 = (|z|-1)^2` on both sides of
/// the unit circle; `phi_1` flips the sign inside. The zero set of either
/// map is the unit circle, and both degrees vanish.
pub fn annulus_example(i: u8, cfg: &EngineConfig) -> Result<GradientLocalMap> {
    if i > 1 {
        return Err(DegreeError::InvalidArgument(
            "annulus_example index must be 0 or 1".into(),
        ));
    }
    let src = if i == 0 {
        "rad(1,2,1,2)"
    } else {
        "srad(1,2,1,2)"
    };
    let expr = parse_potential(src)?;
    let region = Region::product(Shape::annulus([0.0, 0.0], 0.5, 1.5), 1.0);
    // Hessian of phi_i: radial 2, tangential 2(1 - 1/|z|), largest at
    // |z| = 1/2; Lip(grad phi) <= 2 on the annulus, so Lip(F) <= 3.
    gradient_map_from_expr(format!("annulus(i={i})"), &expr, region, 3.0, cfg)
}

/// Rank-one cubic on an interval: `f(x) = x1^3 - x1` on `(-2, 2)` times a
/// tail ball, three simple zeros with signs +, -, +, degree 1.
pub fn finite_rank_test(cfg: &EngineConfig) -> Result<GradientLocalMap> {
    let expr = parse_potential("0.25*x1^4 - 0.5*x1^2")?;
    let region = Region::product(Shape::ball(vec![0.0], 2.0), 1.0);
    // f' = 3x^2 - 1 in [-1, 11] on [-2, 2]: Lip(F) = Lip(id - f) <= 10.
    gradient_map_from_expr("finite_rank_test".to_string(), &expr, region, 10.0, cfg)
}

/// A gradient map with empty zero set: `f(x) = x - 3 e1` on the unit ball.
pub fn empty_map(cfg: &EngineConfig) -> Result<GradientLocalMap> {
    let c = HilbertVector::new([(1, 3.0)]);
    let cc = c.clone();
    let spec = CompactMapSpec::finite_rank(move |_| cc.clone(), 1, 0.0, |_| 3.0)
        .with_input_dim_cap(1);
    let map = LocalMap::new(
        "empty_map",
        spec,
        Region::ball(HilbertVector::zero(), 1.0),
    );
    GradientLocalMap::new(map, |x| 0.5 * x.norm_sq() - 3.0 * x.get(1), cfg)
}

/// Builds a gradient local map from a slice potential: the full potential is
/// `phi(P_k x) + |x - P_k x|^2 / 2`, so `F(x) = (slice - grad(phi), 0)` is
/// finite rank with input cap `k`.
pub fn gradient_map_from_expr(
    name: String,
    expr: &Expr,
    region: Region,
    lipschitz: f64,
    cfg: &EngineConfig,
) -> Result<GradientLocalMap> {
    let k = region.slice_dim();
    if expr.max_var() as usize > k {
        return Err(DegreeError::InvalidArgument(format!(
            "potential uses x{} but the region slice dimension is {k}",
            expr.max_var()
        )));
    }
    let grads = expr.gradient(k as u32);
    let radius = region.bounding_radius();
    let sup_f = lipschitz * radius + 2.0 * radius;
    let g2 = grads.clone();
    let eval = move |x: &HilbertVector| -> HilbertVector {
        let s = x.to_dense(k);
        HilbertVector::new(
            g2.iter()
                .enumerate()
                .map(|(idx, g)| (idx as u32 + 1, s[idx] - g.eval(&s))),
        )
    };
    let spec = CompactMapSpec::new(
        eval,
        move |_r, n| if n >= k { 0.0 } else { sup_f },
        lipschitz,
    )
    .with_output_dim_cap(k)
    .with_input_dim_cap(k);
    let map = LocalMap::new(name, spec, region);
    map.audit_moduli(cfg, 32)?;
    let phi = expr.clone();
    let potential = move |x: &HilbertVector| -> f64 {
        let s = x.to_dense(k);
        phi.eval(&s) + 0.5 * x.tail(k as u32).norm_sq()
    };
    GradientLocalMap::new(map, potential, cfg)
}

/// A randomized map with a planar block of known degree plus a diagonal tail
/// `F_i(x) = d_i x_i` with `|d_i| <= 0.9 * 2^{-(i+1)}`, so the tail modulus
/// `tau(R, n) = R * 2^{-n}` is certified for `n >= 2`. Returns the map and
/// its expected degree.
pub fn random_tail_map(salt: u64, cfg: &EngineConfig) -> Result<(LocalMap, i64)> {
    let mut rng = cfg.rng(0x7A11 ^ salt.wrapping_mul(0x9E37_79B9));
    let kind: u8 = rng.gen_range(0..4);
    let center = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
    let (block_field, degree): (Box<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>, i64) = match kind
    {
        0 => (Box::new(|w: [f64; 2]| w), 1),
        1 => (Box::new(|w: [f64; 2]| [w[0], -w[1]]), -1),
        2 => (
            Box::new(|w: [f64; 2]| {
                let p = complex_pow(w, 2);
                [p[0], -p[1]]
            }),
            -2,
        ),
        _ => (
            // A rigid rotation by 40 degrees: still degree 1.
            Box::new(|w: [f64; 2]| {
                let (c, s) = (0.766044443118978f64, 0.642787609686539f64);
                [c * w[0] - s * w[1], s * w[0] + c * w[1]]
            }),
            1,
        ),
    };
    // Diagonal decay coefficients on coordinates 3..=24.
    let coeffs: Vec<f64> = (3..=24)
        .map(|i| {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            sign * rng.gen_range(0.2..0.9) * 0.5f64.powi(i as i32 + 1)
        })
        .collect();
    let lam: Vec<f64> = (0..32)
        .map(|n| {
            coeffs
                .iter()
                .enumerate()
                .filter(|(idx, _)| idx + 3 > n)
                .map(|(_, d)| d.abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let c2 = coeffs.clone();
    let eval = move |x: &HilbertVector| -> HilbertVector {
        let s = x.to_dense(2);
        let w = [s[0] - center[0], s[1] - center[1]];
        let g = block_field(w);
        let mut coords = vec![(1, s[0] - g[0]), (2, s[1] - g[1])];
        for &(i, v) in x.coords() {
            if i >= 3 {
                let idx = i as usize - 3;
                if idx < c2.len() {
                    coords.push((i, c2[idx] * v));
                }
            }
        }
        HilbertVector::new(coords)
    };
    let sup_low = 6.0;
    let spec = CompactMapSpec::new(
        eval,
        move |r, n| {
            if n >= 2 {
                r * 0.5f64.powi(n as i32)
            } else {
                sup_low
            }
        },
        4.5,
    )
    .with_tail_sensitivity(move |n| *lam.get(n).unwrap_or(&0.0));
    let region = Region::product(Shape::ball(vec![0.0, 0.0], 1.2), 1.0);
    let map = LocalMap::new(format!("random_tail_map({salt})"), spec, region);
    map.audit_moduli(cfg, 24)?;
    Ok((map, degree))
}

/// Either flavor of catalog map.
pub enum CatalogMap {
    Gradient(GradientLocalMap),
    Plain(LocalMap),
}

impl CatalogMap {
    pub fn local_map(&self) -> &LocalMap {
        match self {
            CatalogMap::Gradient(g) => g.local_map(),
            CatalogMap::Plain(f) => f,
        }
    }

    pub fn gradient(&self) -> Option<&GradientLocalMap> {
        match self {
            CatalogMap::Gradient(g) => Some(g),
            CatalogMap::Plain(_) => None,
        }
    }
}

/// A named catalog entry with its parameter description and expected degree.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub expected_degree: &'static str,
    pub description: &'static str,
}

pub fn list() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "standard_gradient_map",
            params: "m: integer",
            expected_degree: "m",
            description: "bowls and conjugate-power blocks in separated balls, degrees summing to m",
        },
        CatalogEntry {
            name: "annulus",
            params: "i: 0 or 1",
            expected_degree: "0",
            description: "concentric-circles potentials on 1/2 < |z| < 3/2; zero set is the unit circle",
        },
        CatalogEntry {
            name: "finite_rank_test",
            params: "none",
            expected_degree: "1",
            description: "rank-one cubic x^3 - x on (-2, 2) with three simple zeros",
        },
        CatalogEntry {
            name: "empty",
            params: "none",
            expected_degree: "0",
            description: "constant shift with empty zero set on the unit ball",
        },
        CatalogEntry {
            name: "random_tail",
            params: "salt: integer",
            expected_degree: "recorded per salt",
            description: "planar block plus diagonal decaying tail, tau(R,n) = R/2^n",
        },
    ]
}

/// Builds a catalog map by name. `m` feeds `standard_gradient_map`, `i` the
/// annulus index, `salt` the randomized tail map.
pub fn build(
    name: &str,
    m: Option<i64>,
    i: Option<u8>,
    salt: Option<u64>,
    cfg: &EngineConfig,
) -> Result<CatalogMap> {
    match name {
        "standard_gradient_map" => {
            let m = m.ok_or_else(|| {
                DegreeError::InvalidArgument("standard_gradient_map needs parameter m".into())
            })?;
            Ok(CatalogMap::Gradient(standard_gradient_map(m, cfg)?))
        }
        "annulus" => Ok(CatalogMap::Gradient(annulus_example(i.unwrap_or(0), cfg)?)),
        "finite_rank_test" => Ok(CatalogMap::Gradient(finite_rank_test(cfg)?)),
        "empty" => Ok(CatalogMap::Gradient(empty_map(cfg)?)),
        "random_tail" => {
            let (map, _) = random_tail_map(salt.unwrap_or(0), cfg)?;
            Ok(CatalogMap::Plain(map))
        }
        other => Err(DegreeError::InvalidArgument(format!(
            "unknown catalog map '{other}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EngineConfig {
        EngineConfig::with_seed(7)
    }

    #[test]
    fn annulus_vanishes_on_the_unit_circle() {
        let f = annulus_example(0, &cfg()).unwrap();
        let z = HilbertVector::new([(1, 1.0)]);
        let v = f.local_map().evaluate_f(&z).unwrap();
        assert!(v.norm() < 1e-12, "|f| = {}", v.norm());
        // And is nonzero off the circle.
        let z2 = HilbertVector::new([(1, 1.3)]);
        assert!(f.local_map().evaluate_f(&z2).unwrap().norm() > 0.1);
    }

    #[test]
    fn annulus_field_is_radial_distance_gradient() {
        let f = annulus_example(0, &cfg()).unwrap();
        let z = HilbertVector::new([(1, 0.0), (2, 1.4)]);
        let v = f.local_map().evaluate_f(&z).unwrap();
        // grad phi_0 = 2(|z|-1) z/|z| = (0, 0.8).
        assert!((v.get(2) - 0.8).abs() < 1e-12);
        assert!(v.get(1).abs() < 1e-12);
    }

    #[test]
    fn annulus_variants_agree_outside_and_flip_inside() {
        let f0 = annulus_example(0, &cfg()).unwrap();
        let f1 = annulus_example(1, &cfg()).unwrap();
        let outside = HilbertVector::new([(1, 1.25)]);
        let inside = HilbertVector::new([(1, 0.75)]);
        let (a, b) = (
            f0.local_map().evaluate_f(&outside).unwrap(),
            f1.local_map().evaluate_f(&outside).unwrap(),
        );
        assert!(a.sub(&b).norm() < 1e-12);
        let (c, d) = (
            f0.local_map().evaluate_f(&inside).unwrap(),
            f1.local_map().evaluate_f(&inside).unwrap(),
        );
        // phi_0 gradient points inward below the circle, phi_1 outward.
        assert!((c.get(1) + d.get(1)).abs() < 1e-12);
        assert!(c.get(1) < 0.0 && d.get(1) > 0.0);
    }

    #[test]
    fn standard_map_blocks_have_designed_zeros() {
        let f = standard_gradient_map(-2, &cfg()).unwrap();
        let v = f.local_map().evaluate_f(&HilbertVector::zero());
        // single conj block centered at the origin
        assert!(v.unwrap().norm() < 1e-12);
        let g = standard_gradient_map(3, &cfg()).unwrap();
        match &g.local_map().domain {
            Region::Balls(balls) => {
                assert_eq!(balls.len(), 3);
                for (c, _) in balls {
                    assert!(g.local_map().evaluate_f(c).unwrap().norm() < 1e-12);
                }
            }
            _ => panic!("expected ball union"),
        }
    }

    #[test]
    fn gradient_audits_pass_at_scale() {
        let cfg = cfg();
        for m in [-2, 0, 1] {
            standard_gradient_map(m, &cfg)
                .unwrap()
                .audit_gradient(&cfg, 100)
                .unwrap();
        }
        annulus_example(1, &cfg).unwrap().audit_gradient(&cfg, 100).unwrap();
        finite_rank_test(&cfg).unwrap().audit_gradient(&cfg, 100).unwrap();
    }

    #[test]
    fn random_tail_maps_respect_their_moduli() {
        let cfg = cfg();
        for salt in 0..5 {
            let (map, deg) = random_tail_map(salt, &cfg).unwrap();
            assert!(deg.abs() <= 2);
            map.audit_moduli(&cfg, 24).unwrap();
            // Tail defect really is below R/2^n on a deep vector.
            let x = HilbertVector::new([(1, 0.1), (5, 0.5), (9, 0.4)]);
            let fx = map.compact.evaluate(&x);
            for n in 2..10usize {
                let defect = fx.sub(&fx.project(n as u32)).norm();
                assert!(defect <= x.norm() * 0.5f64.powi(n as i32) + 1e-12);
            }
        }
    }

    #[test]
    fn catalog_build_dispatch() {
        let cfg = cfg();
        assert!(build("standard_gradient_map", Some(-1), None, None, &cfg).is_ok());
        assert!(build("annulus", None, Some(1), None, &cfg).is_ok());
        assert!(build("finite_rank_test", None, None, None, &cfg).is_ok());
        assert!(build("empty", None, None, None, &cfg).is_ok());
        assert!(build("nope", None, None, None, &cfg).is_err());
        assert_eq!(list().len(), 5);
    }
}
