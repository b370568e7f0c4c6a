//! Bounded open regions of the Hilbert space with exact finite-dimensional
//! slices.
//!
//! Two families cover every computation in the crate:
//!
//! * [`Region::Product`] — a finite-dimensional shape times a tail ball
//!   `{ |x - P_k x| < r }`. Slices `U ∩ V_n` are exactly representable as
//!   shape-times-ball products.
//! * [`Region::Balls`] — a disjoint union of genuine Hilbert balls
//!   `{ |x - c| < rho }` with finitely supported centers. This family is
//!   closed under block rotations, which the basis-independence checks need.

use crate::error::{DegreeError, Result};
use crate::hilbert::{BlockRotation, HilbertVector};
use crate::shape::Shape;
use rand::Rng;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum Region {
    /// `slice_shape x { tail with |x - P_dim x| < tail_radius }`.
    Product {
        dim: usize,
        shape: Shape,
        tail_radius: f64,
    },
    /// Disjoint union of Hilbert balls `(center, radius)`.
    Balls(Vec<(HilbertVector, f64)>),
}

impl Region {
    pub fn product(shape: Shape, tail_radius: f64) -> Region {
        assert!(tail_radius > 0.0);
        Region::Product {
            dim: shape.dim(),
            shape,
            tail_radius,
        }
    }

    /// A single Hilbert ball.
    pub fn ball(center: HilbertVector, radius: f64) -> Region {
        Region::Balls(vec![(center, radius)])
    }

    /// A disjoint union of Hilbert balls; panics if two closures intersect.
    pub fn balls(balls: Vec<(HilbertVector, f64)>) -> Region {
        let region = Region::ball_union(balls);
        assert!(region.is_separated(), "ball union requires separated closures");
        region
    }

    /// A union of Hilbert balls with no separation requirement (used by
    /// covering constructions); gap certification requires separation.
    pub fn ball_union(balls: Vec<(HilbertVector, f64)>) -> Region {
        assert!(!balls.is_empty());
        assert!(balls.iter().all(|(_, r)| *r > 0.0));
        Region::Balls(balls)
    }

    /// True when all ball closures are pairwise disjoint (vacuously true for
    /// product regions).
    pub fn is_separated(&self) -> bool {
        match self {
            Region::Product { .. } => true,
            Region::Balls(balls) => balls.iter().enumerate().all(|(i, (ci, ri))| {
                balls
                    .iter()
                    .skip(i + 1)
                    .all(|(cj, rj)| ci.dist(cj) > ri + rj)
            }),
        }
    }

    /// Smallest `n` for which `U ∩ V_n` captures the region's shape data.
    pub fn slice_dim(&self) -> usize {
        match self {
            Region::Product { dim, .. } => *dim,
            Region::Balls(balls) => balls
                .iter()
                .map(|(c, _)| c.support_max() as usize)
                .max()
                .unwrap()
                .max(1),
        }
    }

    /// Explicit bound on |x| over the closure.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Region::Product {
                shape, tail_radius, ..
            } => shape.bounding_radius().hypot(*tail_radius),
            Region::Balls(balls) => balls
                .iter()
                .map(|(c, r)| c.norm() + r)
                .fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, x: &HilbertVector) -> bool {
        match self {
            Region::Product {
                dim,
                shape,
                tail_radius,
            } => {
                shape.contains(&x.to_dense(*dim)) && x.tail(*dim as u32).norm() < *tail_radius
            }
            Region::Balls(balls) => balls.iter().any(|(c, r)| x.dist(c) < *r),
        }
    }

    pub fn contains_closure(&self, x: &HilbertVector) -> bool {
        match self {
            Region::Product {
                dim,
                shape,
                tail_radius,
            } => {
                shape.contains_closure(&x.to_dense(*dim))
                    && x.tail(*dim as u32).norm() <= *tail_radius
            }
            Region::Balls(balls) => balls.iter().any(|(c, r)| x.dist(c) <= *r),
        }
    }

    /// Lower bound on the distance from `x` to the complement; positive only
    /// for provably interior points.
    pub fn interior_depth_lb(&self, x: &HilbertVector) -> f64 {
        match self {
            Region::Product {
                dim,
                shape,
                tail_radius,
            } => {
                let slice_depth = shape.inside_depth_lb(&x.to_dense(*dim));
                let tail_depth = tail_radius - x.tail(*dim as u32).norm();
                slice_depth.min(tail_depth).max(0.0)
            }
            Region::Balls(balls) => balls
                .iter()
                .map(|(c, r)| r - x.dist(c))
                .fold(0.0, f64::max),
        }
    }

    /// The slice `U ∩ V_n` as a dim-`n` shape. Requires `n >= slice_dim`.
    pub fn slice(&self, n: usize) -> Result<Shape> {
        let min = self.slice_dim();
        if n < min {
            return Err(DegreeError::DimensionTooSmall { n, min });
        }
        match self {
            Region::Product {
                dim,
                shape,
                tail_radius,
            } => {
                if n == *dim {
                    Ok(shape.clone())
                } else {
                    Ok(Shape::prod(
                        shape.clone(),
                        Shape::ball(vec![0.0; n - dim], *tail_radius),
                    ))
                }
            }
            Region::Balls(balls) => {
                let parts: Vec<Shape> = balls
                    .iter()
                    .map(|(c, r)| Shape::ball(c.to_dense(n), *r))
                    .collect();
                Ok(if parts.len() == 1 {
                    parts.into_iter().next().unwrap()
                } else {
                    Shape::union(parts)
                })
            }
        }
    }

    /// Image of the region under a block rotation, when exactly
    /// representable: ball unions always rotate; product regions rotate only
    /// when the rotation acts inside the slice block and every atom is a ball.
    pub fn rotate(&self, q: &BlockRotation) -> Result<Region> {
        match self {
            Region::Balls(balls) => Ok(Region::Balls(
                balls
                    .iter()
                    .map(|(c, r)| (q.apply(c), *r))
                    .collect(),
            )),
            Region::Product {
                dim,
                shape,
                tail_radius,
            } => {
                if q.dim() > *dim {
                    return Err(DegreeError::ShapeNotRotatable);
                }
                Ok(Region::Product {
                    dim: *dim,
                    shape: rotate_shape(shape, q)?,
                    tail_radius: *tail_radius,
                })
            }
        }
    }

    /// A random point of the region: used by audits and samplers. Tail mass
    /// (for product regions) is placed on coordinates `dim+1 ..= dim+3`.
    pub fn sample_point(&self, rng: &mut impl Rng) -> HilbertVector {
        match self {
            Region::Product {
                dim,
                shape,
                tail_radius,
            } => {
                let (lo, hi) = shape.bounding_box();
                let slice = loop {
                    let p: Vec<f64> = lo
                        .iter()
                        .zip(&hi)
                        .map(|(a, b)| rng.gen_range(*a..=*b))
                        .collect();
                    if shape.contains(&p) {
                        break p;
                    }
                };
                let mut coords: Vec<(u32, f64)> = slice
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| (k as u32 + 1, v))
                    .collect();
                let scale = tail_radius * rng.gen_range(0.0..0.9);
                let dir: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
                for (k, v) in dir.iter().enumerate() {
                    coords.push((*dim as u32 + 1 + k as u32, scale * v / norm));
                }
                HilbertVector::new(coords)
            }
            Region::Balls(balls) => {
                let (c, r) = &balls[rng.gen_range(0..balls.len())];
                let n = c.support_max().max(2);
                let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
                let scale = r * rng.gen_range(0.0..0.95);
                c.add(&HilbertVector::new(
                    dir.iter()
                        .enumerate()
                        .map(|(k, v)| (k as u32 + 1, scale * v / norm)),
                ))
            }
        }
    }
}

fn rotate_shape(shape: &Shape, q: &BlockRotation) -> Result<Shape> {
    match shape {
        Shape::Ball { center, radius } => {
            let c = HilbertVector::from_dense(center);
            Ok(Shape::Ball {
                center: q.apply(&c).to_dense(center.len()),
                radius: *radius,
            })
        }
        Shape::Union(parts) => Ok(Shape::Union(
            parts
                .iter()
                .map(|s| rotate_shape(s, q))
                .collect::<Result<_>>()?,
        )),
        Shape::Diff { base, hole } => Ok(Shape::Diff {
            base: Box::new(rotate_shape(base, q)?),
            hole: Box::new(rotate_shape(hole, q)?),
        }),
        Shape::AxisBox { .. } | Shape::Prod(..) => Err(DegreeError::ShapeNotRotatable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn annulus_region() -> Region {
        Region::product(Shape::annulus([0.0, 0.0], 0.5, 1.5), 1.0)
    }

    #[test]
    fn product_membership_couples_slice_and_tail() {
        let u = annulus_region();
        let inside = HilbertVector::new([(1, 1.0), (3, 0.5)]);
        assert!(u.contains(&inside));
        let tail_too_big = HilbertVector::new([(1, 1.0), (3, 1.5)]);
        assert!(!u.contains(&tail_too_big));
        let slice_outside = HilbertVector::new([(1, 0.2)]);
        assert!(!u.contains(&slice_outside));
    }

    #[test]
    fn slicing_is_exact() {
        let u = annulus_region();
        let s2 = u.slice(2).unwrap();
        assert!(s2.contains(&[1.0, 0.0]));
        let s4 = u.slice(4).unwrap();
        assert!(s4.contains(&[1.0, 0.0, 0.4, 0.3]));
        assert!(!s4.contains(&[1.0, 0.0, 0.9, 0.8])); // tail ball violated
        assert!(matches!(u.slice(1), Err(DegreeError::DimensionTooSmall { .. })));
    }

    #[test]
    fn hilbert_ball_slices_are_balls() {
        let c = HilbertVector::new([(1, 1.0), (3, -0.5)]);
        let u = Region::ball(c.clone(), 2.0);
        assert_eq!(u.slice_dim(), 3);
        let s = u.slice(5).unwrap();
        assert!(s.contains(&[1.0, 0.0, -0.5, 0.0, 1.9]));
        assert!(u.contains(&HilbertVector::new([(1, 1.0), (7, 1.9)])));
        assert!((u.bounding_radius() - (c.norm() + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn ball_regions_rotate_exactly() {
        let u = Region::ball(HilbertVector::basis(1), 0.5);
        let q = BlockRotation::planar(2, 1, 2, std::f64::consts::FRAC_PI_2);
        let v = u.rotate(&q).unwrap();
        assert!(v.contains(&HilbertVector::new([(2, 1.0), (1, 0.1)])));
        assert!(!v.contains(&HilbertVector::basis(1)));
    }

    #[test]
    fn box_products_refuse_rotation() {
        let u = Region::product(Shape::axis_box(vec![-1.0, -1.0], vec![1.0, 1.0]), 1.0);
        let q = BlockRotation::planar(2, 1, 2, 0.7);
        assert!(matches!(u.rotate(&q), Err(DegreeError::ShapeNotRotatable)));
    }

    #[test]
    fn sampled_points_are_members() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let regions = [
            annulus_region(),
            Region::ball(HilbertVector::new([(2, 1.5)]), 1.0),
        ];
        for u in &regions {
            for _ in 0..50 {
                let x = u.sample_point(&mut rng);
                assert!(u.contains(&x), "{:?} not in {:?}", x, u);
            }
        }
    }
}
