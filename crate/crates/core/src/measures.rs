//! Error functionals, bound certificates and the squashed-entanglement route.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::entropy::{g2, h_star, squashed_trivial_upper};
use crate::error::{Error, Result};
use crate::locc::{apply_with_key, is_efficient_keyed, EfficiencyReport, KeyedChannelFamily, LoccCircuit};
use crate::poly::Polynomial;
use crate::states::{epr_amplitudes, epr_pairs, fidelity_matrices, BipartiteState, Key, KeyedStateFamily};

/// Slack added to ε when verifying certificates.
pub const VERIFY_TOL: f64 = 1e-9;

/// Grid `{0.01, …, 0.99}` scanned by [`counterexample_eta_threshold`].
pub const ETA_GRID_STEPS: u32 = 99;

/// `1 − ⟨φ^{⊗m}| g(ρ) |φ^{⊗m}⟩`.
pub fn p_err_distill(g: &LoccCircuit, rho: &BipartiteState, m: usize) -> Result<f64> {
    p_err_distill_keyed(g, rho, m, &Key::empty())
}

pub fn p_err_distill_keyed(g: &LoccCircuit, rho: &BipartiteState, m: usize, key: &Key) -> Result<f64> {
    if g.output_cut() != (m, m) {
        return Err(Error::Shape(format!("distillation witness outputs {:?}, expected ({m}, {m})", g.output_cut())));
    }
    let out = apply_with_key(g, rho, key)?;
    let f = out.state().expectation(&epr_amplitudes(m))?;
    Ok((1.0 - f).clamp(0.0, 1.0))
}

/// `1 − F(g(Φ^{⊗n}), ρ)`.
pub fn p_err_dilute(g: &LoccCircuit, target: &BipartiteState, n: usize) -> Result<f64> {
    p_err_dilute_keyed(g, target, n, &Key::empty())
}

pub fn p_err_dilute_keyed(g: &LoccCircuit, target: &BipartiteState, n: usize, key: &Key) -> Result<f64> {
    if g.input_cut() != (n, n) {
        return Err(Error::Shape(format!("dilution witness takes {:?}, expected ({n}, {n})", g.input_cut())));
    }
    if g.output_cut() != target.cut() {
        return Err(Error::Shape(format!(
            "dilution witness outputs {:?}, target has cut {:?}",
            g.output_cut(),
            target.cut()
        )));
    }
    let out = apply_with_key(g, &epr_pairs(n)?, key)?;
    let f = fidelity_matrices(out.matrix(), target.matrix())?;
    Ok((1.0 - f).clamp(0.0, 1.0))
}

/// Error budget `ε(λ)`.
pub type Schedule = Arc<dyn Fn(u32) -> f64 + Send + Sync>;

pub fn constant_schedule(eps: f64) -> Schedule {
    Arc::new(move |_| eps)
}

/// Claim that `m(λ)` is a valid lower bound on the distillable entanglement of `family`.
#[derive(Clone)]
pub struct DistillationCertificate {
    pub name: String,
    pub family: KeyedStateFamily,
    pub m: Polynomial,
    pub epsilon: Schedule,
    pub witness: KeyedChannelFamily,
}

impl DistillationCertificate {
    pub fn new(
        name: impl Into<String>,
        family: impl Into<KeyedStateFamily>,
        m: Polynomial,
        epsilon: Schedule,
        witness: impl Into<KeyedChannelFamily>,
    ) -> Self {
        Self {
            name: name.into(),
            family: family.into(),
            m,
            epsilon,
            witness: witness.into(),
        }
    }
}

/// Claim that `n(λ)` is a valid upper bound on the entanglement cost of `family`.
#[derive(Clone)]
pub struct DilutionCertificate {
    pub name: String,
    pub family: KeyedStateFamily,
    pub n: Polynomial,
    pub epsilon: Schedule,
    pub witness: KeyedChannelFamily,
}

impl DilutionCertificate {
    pub fn new(
        name: impl Into<String>,
        family: impl Into<KeyedStateFamily>,
        n: Polynomial,
        epsilon: Schedule,
        witness: impl Into<KeyedChannelFamily>,
    ) -> Self {
        Self {
            name: name.into(),
            family: family.into(),
            n,
            epsilon,
            witness: witness.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEntry {
    pub lambda: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub p_err: f64,
    pub epsilon: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub certificate: String,
    pub lambdas: Vec<LambdaEntry>,
    pub efficiency: EfficiencyReport,
    pub pass: bool,
}

impl CertificateReport {
    /// Largest error over all entries.
    pub fn max_p_err(&self) -> f64 {
        self.lambdas.iter().map(|e| e.p_err).fold(0.0, f64::max)
    }
}

fn run_certificate(
    name: &str,
    family: &KeyedStateFamily,
    witness: &KeyedChannelFamily,
    epsilon: &Schedule,
    lambdas: &[u32],
    p_err: impl Fn(&LoccCircuit, &BipartiteState, u32, &Key) -> Result<f64>,
) -> Result<CertificateReport> {
    let mut entries = Vec::new();
    for &lambda in lambdas {
        let eps = epsilon(lambda);
        for key in family.keys(lambda) {
            let rho = family.generate(lambda, &key)?;
            let g = witness.generate(lambda, &key)?;
            let p = p_err(&g, &rho, lambda, &key)?;
            entries.push(LambdaEntry {
                lambda,
                key: (!key.is_empty()).then(|| key.to_string()),
                p_err: p,
                epsilon: eps,
                pass: p <= eps + VERIFY_TOL,
            });
        }
    }
    let efficiency = is_efficient_keyed(witness, lambdas);
    let pass = efficiency.pass && entries.iter().all(|e| e.pass);
    Ok(CertificateReport {
        certificate: name.to_string(),
        lambdas: entries,
        efficiency,
        pass,
    })
}

/// Checks `p_err ≤ ε(λ) + 1e-9` at every λ and key, plus the witness budget.
pub fn verify_distillation_certificate(cert: &DistillationCertificate, lambdas: &[u32]) -> Result<CertificateReport> {
    run_certificate(&cert.name, &cert.family, &cert.witness, &cert.epsilon, lambdas, |g, rho, lambda, key| {
        p_err_distill_keyed(g, rho, cert.m.count(lambda), key)
    })
}

/// Dilution analogue of [`verify_distillation_certificate`]; the witness input is `Φ^{⊗n(λ)}`.
pub fn verify_dilution_certificate(cert: &DilutionCertificate, lambdas: &[u32]) -> Result<CertificateReport> {
    run_certificate(&cert.name, &cert.family, &cert.witness, &cert.epsilon, lambdas, |g, rho, lambda, key| {
        p_err_dilute_keyed(g, rho, cert.n.count(lambda), key)
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Argument(format!("ε must lie in [0, 1), got {eps}")));
    }
    Ok(())
}

/// `(½ I(A;B) + g₂(√ε)) / (1 − √ε)`, an upper bound on `E_D^ε(ρ)`.
pub fn distillable_upper_via_squashed(rho: &BipartiteState, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let s = eps.sqrt();
    Ok((squashed_trivial_upper(rho)? + g2(s)?) / (1.0 - s))
}

/// Right side `2(g₂(√ε) + m√ε)` of the threshold condition.
pub fn threshold_rhs(m: usize, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let s = eps.sqrt();
    Ok(2.0 * (g2(s)? + m as f64 * s))
}

/// Smallest `η = i/100` with `H*(η) > 2(g₂(√ε) + m√ε)`, if any.
pub fn counterexample_eta_threshold(m: usize, eps: f64) -> Result<Option<f64>> {
    let rhs = threshold_rhs(m, eps)?;
    for i in 1..=ETA_GRID_STEPS {
        let eta = f64::from(i) / 100.0;
        if h_star(eta)? > rhs {
            return Ok(Some(eta));
        }
    }
    Ok(None)
}
