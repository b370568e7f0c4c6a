//! Finitely supported vectors of l2, orthogonal projections and block
//! basis rotations.
//!
//! Every computation in the degree construction touches only finitely many
//! coordinates once a Galerkin dimension is fixed, so points of the Hilbert
//! space are stored exactly as sorted `(index, value)` pairs with the
//! infinite tail implicitly zero.

use crate::error::{DegreeError, Result};
use nalgebra::DMatrix;
use rand::Rng;

/// Orthogonality tolerance for [`BlockRotation`] construction.
pub const ROTATION_ORTHO_TOL: f64 = 1e-12;

/// A point of l2 with finite support.
///
/// Canonical form: indices strictly increasing, 1-based, no stored zeros.
/// Equality is structural, which is exact because construction canonicalizes.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HilbertVector {
    coords: Vec<(u32, f64)>,
}

impl HilbertVector {
    /// The zero vector.
    pub fn zero() -> Self {
        HilbertVector { coords: Vec::new() }
    }

    /// The basis vector `e_i`, `i >= 1`.
    pub fn basis(i: u32) -> Self {
        assert!(i >= 1, "basis indices are 1-based");
        HilbertVector {
            coords: vec![(i, 1.0)],
        }
    }

    /// Builds a vector from arbitrary `(index, value)` pairs, summing
    /// duplicates and dropping zeros. Indices must be >= 1.
    pub fn new(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut v: Vec<(u32, f64)> = pairs.into_iter().collect();
        assert!(v.iter().all(|&(i, _)| i >= 1), "indices are 1-based");
        v.sort_by_key(|&(i, _)| i);
        let mut coords: Vec<(u32, f64)> = Vec::with_capacity(v.len());
        for (i, x) in v {
            match coords.last_mut() {
                Some((j, y)) if *j == i => *y += x,
                _ => coords.push((i, x)),
            }
        }
        coords.retain(|&(_, x)| x != 0.0);
        HilbertVector { coords }
    }

    /// The stored coordinates in canonical order.
    pub fn coords(&self) -> &[(u32, f64)] {
        &self.coords
    }

    /// Coordinate `i` (zero if not stored).
    pub fn get(&self, i: u32) -> f64 {
        match self.coords.binary_search_by_key(&i, |&(j, _)| j) {
            Ok(k) => self.coords[k].1,
            Err(_) => 0.0,
        }
    }

    /// Largest stored index, 0 for the zero vector.
    pub fn support_max(&self) -> u32 {
        self.coords.last().map_or(0, |&(i, _)| i)
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|&(_, x)| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product by merge walk over the two supports.
    pub fn inner(&self, other: &Self) -> f64 {
        let (mut a, mut b) = (self.coords.iter().peekable(), other.coords.iter().peekable());
        let mut acc = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.coords.len() + other.coords.len());
        let (mut p, mut q) = (0, 0);
        while p < self.coords.len() || q < other.coords.len() {
            let i = self.coords.get(p).map_or(u32::MAX, |&(i, _)| i);
            let j = other.coords.get(q).map_or(u32::MAX, |&(j, _)| j);
            let (idx, val) = match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    p += 1;
                    (i, self.coords[p - 1].1)
                }
                std::cmp::Ordering::Greater => {
                    q += 1;
                    (j, a * other.coords[q - 1].1)
                }
                std::cmp::Ordering::Equal => {
                    p += 1;
                    q += 1;
                    (i, self.coords[p - 1].1 + a * other.coords[q - 1].1)
                }
            };
            if val != 0.0 {
                out.push((idx, val));
            }
        }
        HilbertVector { coords: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, a: f64) -> Self {
        if a == 0.0 {
            return HilbertVector::zero();
        }
        HilbertVector {
            coords: self.coords.iter().map(|&(i, x)| (i, a * x)).collect(),
        }
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }

    /// Orthogonal projection onto `span{e_1..e_n}`: drops indices above `n`.
    pub fn project(&self, n: u32) -> Self {
        assert!(n >= 1, "projection dimension must be positive");
        let cut = self.coords.partition_point(|&(i, _)| i <= n);
        HilbertVector {
            coords: self.coords[..cut].to_vec(),
        }
    }

    /// The complementary tail `x - P_n x`.
    pub fn tail(&self, n: u32) -> Self {
        let cut = self.coords.partition_point(|&(i, _)| i <= n);
        HilbertVector {
            coords: self.coords[cut..].to_vec(),
        }
    }

    /// First `n` coordinates as a dense slice (index `i` at position `i-1`).
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(i, x) in &self.coords {
            let i = i as usize;
            if i <= n {
                out[i - 1] = x;
            }
        }
        out
    }

    /// Builds a vector from a dense slice, position `k` becoming index `k+1`.
    pub fn from_dense(v: &[f64]) -> Self {
        HilbertVector {
            coords: v
                .iter()
                .enumerate()
                .filter(|&(_, &x)| x != 0.0)
                .map(|(k, &x)| (k as u32 + 1, x))
                .collect(),
        }
    }
}

/// An orthogonal change of basis acting on `span{e_1..e_dim}` and as the
/// identity beyond. Used by the basis-independence checks.
#[derive(Debug, Clone)]
pub struct BlockRotation {
    dim: usize,
    mat: DMatrix<f64>,
}

impl BlockRotation {
    /// Validates `Q^T Q = I` within [`ROTATION_ORTHO_TOL`].
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if !mat.is_square() || mat.nrows() == 0 {
            return Err(DegreeError::InvalidArgument(
                "rotation matrix must be square and nonempty".into(),
            ));
        }
        let dim = mat.nrows();
        let gram = mat.transpose() * &mat;
        let residual = (&gram - DMatrix::<f64>::identity(dim, dim)).abs().max();
        if residual > ROTATION_ORTHO_TOL {
            return Err(DegreeError::NotOrthogonal {
                residual,
                tol: ROTATION_ORTHO_TOL,
            });
        }
        Ok(BlockRotation { dim, mat })
    }

    pub fn identity(dim: usize) -> Self {
        BlockRotation {
            dim,
            mat: DMatrix::identity(dim, dim),
        }
    }

    /// Rotation by `theta` in the `(i, j)` coordinate plane (1-based).
    pub fn planar(dim: usize, i: u32, j: u32, theta: f64) -> Self {
        assert!(i >= 1 && j >= 1 && i != j);
        assert!((i as usize) <= dim && (j as usize) <= dim);
        let (i, j) = (i as usize - 1, j as usize - 1);
        let mut mat = DMatrix::identity(dim, dim);
        let (c, s) = (theta.cos(), theta.sin());
        mat[(i, i)] = c;
        mat[(j, j)] = c;
        mat[(i, j)] = -s;
        mat[(j, i)] = s;
        BlockRotation { dim, mat }
    }

    /// A Haar-ish random orthogonal block from the QR factorization of a
    /// Gaussian matrix, with column signs fixed by the R diagonal.
    pub fn random(dim: usize, rng: &mut impl Rng) -> Self {
        let raw = DMatrix::from_fn(dim, dim, |_, _| {
            // Box-Muller keeps us independent of rand_distr.
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        });
        let qr = raw.qr();
        let mut q = qr.q();
        let r = qr.r();
        for k in 0..dim {
            if r[(k, k)] < 0.0 {
                for row in 0..dim {
                    q[(row, k)] = -q[(row, k)];
                }
            }
        }
        BlockRotation { dim, mat: q }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Applies the rotation; coordinates above `dim` are untouched.
    pub fn apply(&self, x: &HilbertVector) -> HilbertVector {
        self.apply_mat(&self.mat, x)
    }

    /// Applies the transpose (= inverse) rotation.
    pub fn apply_transpose(&self, x: &HilbertVector) -> HilbertVector {
        self.apply_mat(&self.mat.transpose(), x)
    }

    fn apply_mat(&self, m: &DMatrix<f64>, x: &HilbertVector) -> HilbertVector {
        let head = nalgebra::DVector::from_vec(x.to_dense(self.dim));
        let rotated = m * head;
        let head_vec = HilbertVector::from_dense(rotated.as_slice());
        head_vec.add(&x.tail(self.dim as u32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    const LIN_TOL: f64 = 1e-10;

    fn hv(pairs: &[(u32, f64)]) -> HilbertVector {
        HilbertVector::new(pairs.iter().copied())
    }

    #[test]
    fn project_truncates_by_definition() {
        let x = hv(&[(1, 1.0), (5, 2.0)]);
        assert_eq!(x.project(3), hv(&[(1, 1.0)]));
    }

    #[test]
    fn project_is_identity_inside_support() {
        let x = hv(&[(1, 0.25), (2, -1.5), (3, 4.0)]);
        assert_eq!(x.project(3), x);
        assert_eq!(x.project(7), x);
    }

    #[test]
    fn dropped_tail_norm_is_pythagorean() {
        let x = hv(&[(1, 3.0), (4, 4.0)]);
        assert_abs_diff_eq!(x.sub(&x.project(3)).norm(), 4.0, epsilon = LIN_TOL);
    }

    #[test]
    fn identity_rotation_is_identity() {
        let q = BlockRotation::identity(4);
        let x = hv(&[(2, 1.5), (6, -0.5)]);
        assert_eq!(q.apply(&x), x);
    }

    #[test]
    fn quarter_turn_moves_e1_to_e2() {
        let q = BlockRotation::planar(2, 1, 2, std::f64::consts::FRAC_PI_2);
        let y = q.apply(&HilbertVector::basis(1));
        assert!(y.sub(&HilbertVector::basis(2)).norm() < LIN_TOL);
    }

    #[test]
    fn random_rotation_preserves_norm() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let q = BlockRotation::random(5, &mut rng);
            let x = hv(&[(1, 0.3), (3, -2.0), (5, 1.1), (9, 4.0)]);
            let y = q.apply(&x);
            assert!((y.norm() - x.norm()).abs() <= 1e-10 * x.norm().max(1.0));
            // Coordinates beyond the block are untouched.
            assert_eq!(y.get(9), 4.0);
        }
    }

    #[test]
    fn non_orthogonal_matrix_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            BlockRotation::new(m),
            Err(DegreeError::NotOrthogonal { .. })
        ));
    }

    fn sparse_vec() -> impl Strategy<Value = HilbertVector> {
        proptest::collection::vec((1u32..40, -10.0f64..10.0), 0..8)
            .prop_map(HilbertVector::new)
    }

    proptest! {
        #[test]
        fn project_is_idempotent(x in sparse_vec(), n in 1u32..50) {
            prop_assert_eq!(x.project(n).project(n), x.project(n));
        }

        #[test]
        fn project_is_a_contraction(x in sparse_vec(), n in 1u32..50) {
            prop_assert!(x.project(n).norm() <= x.norm() + LIN_TOL);
        }

        #[test]
        fn projection_is_self_adjoint(x in sparse_vec(), y in sparse_vec(), n in 1u32..50) {
            let lhs = x.project(n).inner(&y);
            let rhs = x.inner(&y.project(n));
            prop_assert!((lhs - rhs).abs() <= LIN_TOL * (1.0 + x.norm() * y.norm()));
        }

        #[test]
        fn project_converges_past_support(x in sparse_vec()) {
            let n = x.support_max().max(1);
            prop_assert_eq!(x.project(n), x.clone());
        }

        #[test]
        fn projection_is_linear(x in sparse_vec(), y in sparse_vec(), a in -3.0f64..3.0, n in 1u32..50) {
            let lhs = x.axpy(a, &y).project(n);
            let rhs = x.project(n).axpy(a, &y.project(n));
            prop_assert!(lhs.sub(&rhs).norm() <= LIN_TOL * (1.0 + lhs.norm()));
        }

        #[test]
        fn rotations_preserve_inner_products(x in sparse_vec(), y in sparse_vec(), seed in 0u64..500, dim in 2usize..7) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let q = BlockRotation::random(dim, &mut rng);
            let lhs = q.apply(&x).inner(&q.apply(&y));
            let rhs = x.inner(&y);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + x.norm() * y.norm()));
        }

        #[test]
        fn rotation_transpose_inverts(x in sparse_vec(), seed in 0u64..500, dim in 2usize..7) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let q = BlockRotation::random(dim, &mut rng);
            let back = q.apply_transpose(&q.apply(&x));
            prop_assert!(back.sub(&x).norm() <= 1e-10 * (1.0 + x.norm()));
        }
    }
}
