//! Deterministic workloads shared by the criterion benches.

use khess::{EigenSpectrum, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `count` spectra of dimension `n` with entries uniform in `[-1, 2)`.
pub fn random_spectra(n: usize, count: usize, seed: u64) -> Vec<EigenSpectrum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let v = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();
            EigenSpectrum::new(v).expect("finite samples")
        })
        .collect()
}

/// Random symmetric `n × n` matrices with entries uniform in `[-1, 1)`.
pub fn random_matrices(n: usize, count: usize, seed: u64) -> Vec<SymMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let x = rng.gen_range(-1.0..1.0);
                    a[i * n + j] = x;
                    a[j * n + i] = x;
                }
            }
            SymMatrix::new(n, a).expect("symmetric by construction")
        })
        .collect()
}
