//! Seeded samplers for unitaries and states.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, ComplexMatrix};

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable 64-bit seed derived from a master seed and a tag path (FNV-1a).
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    };
    eat(&master.to_le_bytes());
    for p in parts {
        eat(p.as_bytes());
        eat(&[0xff]);
    }
    h
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im)
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unitary: QR of a complex Gaussian matrix, with the phases of
/// `R`'s diagonal pushed into `Q`.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let z = ginibre(dim, dim, rng).to_nalgebra();
    let qr = z.qr();
    let q = qr.q();
    let r = qr.r();
    let phases: Vec<Complex64> = (0..dim)
        .map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) }
        })
        .collect();
    ComplexMatrix::from_fn(dim, dim, |row, col| q[(row, col)] * phases[col])
}

/// Uniformly random pure state (normalized complex Gaussian vector).
pub fn random_pure(dim: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Full-rank random density matrix `G G† / tr(G G†)` from a square Ginibre matrix.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    hermitize(&m.scale_real(1.0 / t))
}

/// Random density matrix of the given rank.
pub fn random_density_rank(dim: usize, rank: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(dim, rank, rng);
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    hermitize(&m.scale_real(1.0 / t))
}

pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    hermitize(&g)
}

/// Random probability vector of the given length (normalized exponentials).
pub fn random_probabilities(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// `(m + m†)/2`.
pub(crate) fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + &m.adjoint()).scale_real(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = rng_from_seed(1);
        for d in [1, 2, 4, 8] {
            assert!(haar_unitary(d, &mut rng).is_unitary(1e-12));
        }
    }

    #[test]
    fn haar_second_moment() {
        let mut rng = rng_from_seed(2024);
        let n = 1000;
        let mean: f64 = (0..n).map(|_| haar_unitary(2, &mut rng).trace().norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() <= 0.15, "E|tr U|^2 = {mean}");
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(derive_seed(7, &["convexity", "1"]), derive_seed(7, &["convexity", "1"]));
        assert_ne!(derive_seed(7, &["convexity", "1"]), derive_seed(7, &["convexity", "2"]));
        assert_ne!(derive_seed(7, &["ab", "c"]), derive_seed(7, &["a", "bc"]));
    }

    #[test]
    fn random_density_is_state() {
        let mut rng = rng_from_seed(4);
        let rho = random_density(4, &mut rng);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.is_hermitian(1e-14));
    }
}
