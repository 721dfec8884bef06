//! Numerical tolerances and size caps.
//!
//! Every subspace identity in this crate is exact mathematics; the thresholds
//! below decide when two floating-point objects count as equal.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerance {
    /// Pivots below `tol_rank` times the largest pivot count as zero when
    /// deciding the rank of a set of generators.
    pub tol_rank: f64,
    /// Allowed deviation of `QᵀQ` from the identity for frames and isometries.
    pub tol_orth: f64,
    /// Projector identities (idempotence, orthogonality of pieces, intersection property).
    pub tol_proj: f64,
    /// Subspace equality and containment.
    pub tol_eq: f64,
    /// Gram matrices need `λ_min > tol_pd * λ_max`.
    pub tol_pd: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            tol_rank: 1e-10,
            tol_orth: 1e-10,
            tol_proj: 1e-8,
            tol_eq: 1e-8,
            tol_pd: 1e-14,
        }
    }
}

impl Tolerance {
    pub fn is_valid(&self) -> bool {
        [self.tol_rank, self.tol_orth, self.tol_proj, self.tol_eq, self.tol_pd]
            .iter()
            .all(|t| t.is_finite() && *t > 0.0)
    }
}

/// Caps guarding the exponential constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    pub max_dim: usize,
    pub max_lower_sets: usize,
    pub max_states: usize,
    pub max_monomials: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_dim: 2000,
            max_lower_sets: 4096,
            max_states: 4096,
            max_monomials: 1024,
        }
    }
}
