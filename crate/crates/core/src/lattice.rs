//! Randomly shifted Kronecker (Richtmyer) lattice with the baker's
//! periodizing transform.
//!
//! Point `i` in dimension `j` is `frac(i * alpha_j + shift_j)` with
//! `alpha_j = frac(sqrt(p_j))` for the `j`-th prime, folded by
//! `t -> 1 - |2t - 1|`.

use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct KroneckerLattice {
    alphas: Vec<f64>,
}

impl KroneckerLattice {
    pub fn new(dim: usize) -> Self {
        let alphas = first_primes(dim)
            .into_iter()
            .map(|p| {
                let s = libm::sqrt(p as f64);
                s - libm::floor(s)
            })
            .collect();
        Self { alphas }
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    /// Writes point `index` under `shift` into `out`; all coordinates lie in
    /// `[0, 1]`.
    #[inline]
    pub fn point(&self, index: u64, shift: &[f64], out: &mut [f64]) {
        let i = index as f64;
        for ((o, &a), &s) in out.iter_mut().zip(&self.alphas).zip(shift) {
            let t = i * a + s;
            let t = t - libm::floor(t);
            *o = 1.0 - libm::fabs(2.0 * t - 1.0);
        }
    }
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| !candidate.is_multiple_of(p)) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}
