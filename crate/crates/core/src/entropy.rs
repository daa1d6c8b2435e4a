//! Entropic quantities, in bits.

use crate::error::{Error, Result};
use crate::linalg::{eigvals_hermitian, ComplexMatrix};
use crate::states::{BipartiteState, DensityMatrix};

/// `-x log₂ x` with `0 log 0 = 0`; tiny negative eigenvalues count as zero.
fn eta_log(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// `x log₂ x`, zero at zero.
fn xlogx(x: f64) -> f64 {
    -eta_log(x)
}

pub fn entropy_of_matrix(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigvals_hermitian(m)?.into_iter().map(eta_log).sum::<f64>().max(0.0))
}

/// `H(ρ) = -Σ λ_i log₂ λ_i`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_matrix(rho.matrix())
}

/// `I(A;B|E) = H(AE) + H(BE) - H(ABE) - H(E)` for a state whose layout has
/// registers named `A`, `B` and `E`. Small negative values are clipped to zero.
pub fn conditional_mutual_information(rho_abe: &DensityMatrix) -> Result<f64> {
    for r in ["A", "B", "E"] {
        if !rho_abe.layout().contains(r) {
            return Err(Error::Argument(format!("missing register `{r}`")));
        }
    }
    let h = |keep: &[&str]| -> Result<f64> { von_neumann_entropy(&rho_abe.reduce(keep)?) };
    let cmi = h(&["A", "E"])? + h(&["B", "E"])? - h(&["A", "B", "E"])? - h(&["E"])?;
    Ok(cmi.max(0.0))
}

/// `I(A;B) = H(A) + H(B) - H(AB)`.
pub fn mutual_information(rho: &BipartiteState) -> Result<f64> {
    let ha = von_neumann_entropy(&rho.reduced_a()?)?;
    let hb = von_neumann_entropy(&rho.reduced_b()?)?;
    let hab = von_neumann_entropy(rho.state())?;
    Ok((ha + hb - hab).max(0.0))
}

/// Squashed entanglement evaluated at the trivial extension: `½ I(A;B)`.
/// Always an upper bound on `E_sq`.
pub fn squashed_trivial_upper(rho: &BipartiteState) -> Result<f64> {
    Ok(0.5 * mutual_information(rho)?)
}

/// Entropy of `½|ψ₁⟩⟨ψ₁| + ½|ψ₂⟩⟨ψ₂|` with overlap magnitude `x = |⟨ψ₁|ψ₂⟩|`:
/// `1 - ½(1-x)log₂(1-x) - ½(1+x)log₂(1+x)`.
pub fn binary_mixture_entropy(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Argument(format!("overlap must lie in [0, 1), got {x}")));
    }
    Ok(1.0 - 0.5 * xlogx(1.0 - x) - 0.5 * xlogx(1.0 + x))
}

/// `H*(η) = 1 - ½η log₂η - ½(2-η)log₂(2-η)`, the mixture entropy at overlap `1 - η`.
pub fn h_star(eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Argument(format!("η must lie in [0, 1], got {eta}")));
    }
    Ok(1.0 - 0.5 * xlogx(eta) - 0.5 * xlogx(2.0 - eta))
}

/// `g₂(δ) = (δ+1)log₂(δ+1) - δ log₂ δ`, with `g₂(0) = 0`.
pub fn g2(delta: f64) -> Result<f64> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::Argument(format!("g2 needs δ >= 0, got {delta}")));
    }
    Ok(xlogx(delta + 1.0) - xlogx(delta))
}
