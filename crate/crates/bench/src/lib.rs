//! Seeded fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sample_design::oracle::sample_feasible_dual_state;
use sample_design::problem::random_linear_gaussian;
use sample_design::{DualState, ProblemInstance, SymMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Linear-Gaussian instance with `k = p + 2` (capped at `n`).
pub fn instance(n: usize, p: usize, seed: u64) -> ProblemInstance {
    random_linear_gaussian(&mut rng(seed), n, p, (p + 2).min(n)).expect("valid sizes")
}

/// Random feasible dual point for `instance`.
pub fn dual_state(instance: &ProblemInstance, seed: u64) -> DualState {
    sample_feasible_dual_state(&mut rng(seed), &instance.psi)
}

/// Symmetric matrix with entries uniform in `[-1, 1)`.
pub fn symmetric(dim: usize, seed: u64) -> SymMatrix {
    let mut r = rng(seed);
    let mut entries = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let v = r.random_range(-1.0..1.0);
            entries[i * dim + j] = v;
            entries[j * dim + i] = v;
        }
    }
    SymMatrix::from_row_major(dim, &entries).expect("symmetric by construction")
}
