//! Engine knobs with the crate-wide defaults.

use serde::Serialize;

/// Tunable parameters shared by the gap certifier, the Newton engine and the
/// degree pipeline. All randomness is derived from `seed`; results are
/// identical for any `workers` value.
#[derive(Debug, Clone, Serialize)]
pub struct EngineConfig {
    /// Master seed; recorded in every certificate.
    pub seed: u64,
    /// Worker threads for parallel sections (0 = library default).
    pub workers: usize,
    /// Stabilization window width `w`: degrees checked for `n = N ..= N+w`.
    pub window: usize,
    /// Newton starts per unit volume in the slice dimensions.
    pub newton_density: f64,
    /// Seed tail coordinates with a sparse stencil instead of a full lattice.
    pub sparse_tail_seeding: bool,
    pub newton_max_iters: usize,
    /// Convergence target for Newton residuals.
    pub newton_tol: f64,
    /// Residual bound for a listed zero in a degree certificate.
    pub residual_tol: f64,
    /// Distinct-solution clustering radius.
    pub cluster_radius: f64,
    /// |det J| below this is treated as a degenerate regular value.
    pub jacobian_min_det: f64,
    /// Forward-difference step for Jacobian oracles.
    pub jacobian_fd_step: f64,
    /// Fresh regular-value draws before giving up.
    pub max_value_draws: usize,
    /// Grid-density doublings allowed before reporting a budget error.
    pub max_grid_doublings: usize,
    pub max_newton_starts: usize,
    /// Cap for the Galerkin dimension search in `select_n`.
    pub dimension_cap: usize,
    /// Cap for the certification dimension of boundary-gap certificates.
    pub max_cert_dim: usize,
    /// Cap on boundary/solid net sizes.
    pub mesh_cap: usize,
    pub max_mesh_halvings: usize,
    /// Starting boundary mesh for gap certification.
    pub initial_mesh: f64,
    /// Central-difference step for gradient audits.
    pub grad_check_step: f64,
    /// Absolute tolerance for gradient audits.
    pub grad_check_tol: f64,
    /// Sample count for gradient audits.
    pub grad_check_samples: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed: 0,
            workers: 0,
            window: 3,
            newton_density: 8.0,
            sparse_tail_seeding: true,
            newton_max_iters: 60,
            newton_tol: 1e-12,
            residual_tol: 1e-9,
            cluster_radius: 1e-6,
            jacobian_min_det: 1e-8,
            jacobian_fd_step: 1e-6,
            max_value_draws: 10,
            max_grid_doublings: 3,
            max_newton_starts: 400_000,
            dimension_cap: 64,
            max_cert_dim: 9,
            mesh_cap: 4_000_000,
            max_mesh_halvings: 18,
            initial_mesh: 0.25,
            grad_check_step: 1e-5,
            grad_check_tol: 1e-4,
            grad_check_samples: 100,
        }
    }
}

impl EngineConfig {
    pub fn with_seed(seed: u64) -> Self {
        EngineConfig {
            seed,
            ..EngineConfig::default()
        }
    }

    /// Deterministic per-purpose RNG stream.
    pub fn rng(&self, salt: u64) -> rand_chacha::ChaCha8Rng {
        use rand::SeedableRng;
        rand_chacha::ChaCha8Rng::seed_from_u64(
            self.seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(salt),
        )
    }
}
