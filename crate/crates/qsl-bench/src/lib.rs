//! Deterministic input generators shared by the benchmarks.

use qsl_core::linalg::{C64, CMatrix};
use qsl_core::lindblad::Lindbladian;
use qsl_core::quantum::DensityMatrix;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn seeded_matrix(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
    .expect("finite entries")
}

pub fn seeded_hermitian(dim: usize, seed: u64) -> CMatrix {
    let m = seeded_matrix(dim, seed);
    (&m + &m.dagger()).scale(C64::new(0.5, 0.0))
}

pub fn seeded_pure_state(dim: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    DensityMatrix::from_state_vector(&v).expect("nonzero vector")
}

pub fn seeded_lindbladian(dim: usize, n_jumps: usize, seed: u64) -> Lindbladian {
    let h = seeded_hermitian(dim, seed);
    let jumps: Vec<CMatrix> = (1..=n_jumps)
        .map(|k| seeded_matrix(dim, seed + k as u64).scale(C64::new(0.5, 0.0)))
        .collect();
    Lindbladian::new(h, jumps).expect("consistent dimensions")
}
