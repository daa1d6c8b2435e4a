//! Executable property checks. Every check returns [`CheckRecord`]s with the
//! measured sides, the slack and the tolerance used.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::locc::gates::{cnot, LocalLayer};
use crate::locc::protocols::{keyed_rotate, keyed_unrotate, teleport_dilution, unrotate_distillation, StatePrep};
use crate::locc::{
    apply, compose, conjugate_by_local_unitary, tensor, ChannelFamily, Gate, GateBudget,
    KeyedChannelFamily, LoccCircuit, Registers, Wire,
};
use crate::measures::{
    constant_schedule, counterexample_eta_threshold, distillable_upper_via_squashed, p_err_dilute_keyed,
    p_err_distill_keyed, verify_dilution_certificate, verify_distillation_certificate, CertificateReport,
    DilutionCertificate, DistillationCertificate, VERIFY_TOL,
};
use crate::packing::{epr_overlap, greedy_packing, DEFAULT_MAX_REJECTIONS};
use crate::poly::Polynomial;
use crate::random::{derive_seed, haar_unitary, random_density, random_probabilities, random_pure, rng_from_seed, SimRng};
use crate::states::{
    epr_pairs, mixture, pauli_key_pairs, pauli_key_split, pauli_keyed_family, pauli_shift, rotated_epr, BipartiteState,
    Key, StateFamily,
};

/// Default tolerance for equalities.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Margin required by strict inequalities.
pub const STRICT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// Outcome of one check. `pass` holds iff `slack ≥ −tolerance`; inconclusive
/// records carry no slack and do not pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub lambda: Option<u32>,
    pub key: Option<String>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub status: Status,
    pub detail: Option<String>,
}

impl CheckRecord {
    fn with_slack(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64, tolerance: f64) -> Self {
        let pass = slack >= -tolerance;
        Self {
            name: name.into(),
            lambda: None,
            key: None,
            lhs,
            rhs,
            slack: Some(slack),
            tolerance,
            pass,
            status: if pass { Status::Pass } else { Status::Fail },
            detail: None,
        }
    }

    /// `lhs = rhs` within `tolerance`.
    pub fn equality(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::with_slack(name, lhs, rhs, 0.0 - (lhs - rhs).abs(), tolerance)
    }

    /// `lhs ≤ rhs` within `tolerance`.
    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::with_slack(name, lhs, rhs, rhs - lhs, tolerance)
    }

    pub fn inconclusive(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            lambda: None,
            key: None,
            lhs: 0.0,
            rhs: 0.0,
            slack: None,
            tolerance: 0.0,
            pass: false,
            status: Status::Inconclusive,
            detail: Some(detail.into()),
        }
    }

    pub fn at_lambda(mut self, lambda: u32) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn at_key(mut self, key: impl Into<String>) -> Self {
        self.key = Some(key.into());
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// Failed and not inconclusive.
    pub fn is_failure(&self) -> bool {
        self.status == Status::Fail
    }
}

fn check_ensemble(states: &[BipartiteState], p: &[f64]) -> Result<()> {
    if states.is_empty() || states.len() != p.len() {
        return Err(Error::Shape(format!("{} states with {} weights", states.len(), p.len())));
    }
    Ok(())
}

fn key_label(key: &Key) -> Option<String> {
    (!key.is_empty()).then(|| key.to_string())
}

fn labeled(mut r: CheckRecord, key: &Key) -> CheckRecord {
    r.key = key_label(key);
    r
}

pub fn check_convexity_distillation(g: &LoccCircuit, states: &[BipartiteState], p: &[f64], m: usize) -> Result<CheckRecord> {
    check_convexity_distillation_keyed(g, &Key::empty(), states, p, m)
}

/// `p_err(g, Σ p_x ρ_x) = Σ p_x p_err(g, ρ_x)` for a keyed witness.
pub fn check_convexity_distillation_keyed(
    g: &LoccCircuit,
    key: &Key,
    states: &[BipartiteState],
    p: &[f64],
    m: usize,
) -> Result<CheckRecord> {
    check_ensemble(states, p)?;
    let eps = p_err_distill_keyed(g, &mixture(states, p)?, m, key)?;
    let mut avg = 0.0;
    for (s, w) in states.iter().zip(p) {
        avg += w * p_err_distill_keyed(g, s, m, key)?;
    }
    Ok(labeled(CheckRecord::equality("convexity-distillation", eps, avg, DEFAULT_TOLERANCE), key))
}

pub fn check_concavity_dilution(g: &LoccCircuit, states: &[BipartiteState], p: &[f64], n: usize) -> Result<CheckRecord> {
    check_concavity_dilution_keyed(g, &Key::empty(), states, p, n)
}

/// `p_err_dilute(g, Σ p_x ρ_x) ≤ Σ p_x p_err_dilute(g, ρ_x)`.
pub fn check_concavity_dilution_keyed(
    g: &LoccCircuit,
    key: &Key,
    states: &[BipartiteState],
    p: &[f64],
    n: usize,
) -> Result<CheckRecord> {
    check_ensemble(states, p)?;
    let eps = p_err_dilute_keyed(g, &mixture(states, p)?, n, key)?;
    let mut avg = 0.0;
    for (s, w) in states.iter().zip(p) {
        avg += w * p_err_dilute_keyed(g, s, n, key)?;
    }
    Ok(labeled(CheckRecord::at_most("concavity-dilution", eps, avg, DEFAULT_TOLERANCE), key))
}

fn joint_key(k1: &Key, k2: &Key) -> Key {
    Key(k1.bits().iter().chain(k2.bits()).copied().collect())
}

fn pair_label(k1: &Key, k2: &Key) -> Option<String> {
    (!k1.is_empty() || !k2.is_empty()).then(|| format!("{k1},{k2}"))
}

pub fn check_superadditivity_distillation(
    g1: &LoccCircuit,
    g2: &LoccCircuit,
    rho1: &BipartiteState,
    rho2: &BipartiteState,
    m1: usize,
    m2: usize,
) -> Result<CheckRecord> {
    check_superadditivity_distillation_keyed((g1, &Key::empty()), (g2, &Key::empty()), rho1, rho2, m1, m2)
}

/// `ε₁₂ = 1 − (1−ε₁)(1−ε₂)` for `g1 ⊗ g2` on `ρ₁ ⊗ ρ₂`. Each witness reads
/// its own key; the tensor reads their concatenation, which lands on the
/// right ancillas when each witness's key fills its `A'` and `B'`.
pub fn check_superadditivity_distillation_keyed(
    (g1, k1): (&LoccCircuit, &Key),
    (g2, k2): (&LoccCircuit, &Key),
    rho1: &BipartiteState,
    rho2: &BipartiteState,
    m1: usize,
    m2: usize,
) -> Result<CheckRecord> {
    let e1 = p_err_distill_keyed(g1, rho1, m1, k1)?;
    let e2 = p_err_distill_keyed(g2, rho2, m2, k2)?;
    let e12 = p_err_distill_keyed(&tensor(g1, g2)?, &rho1.tensor(rho2)?, m1 + m2, &joint_key(k1, k2))?;
    let mut r = CheckRecord::equality("superadditivity-distillation", e12, 1.0 - (1.0 - e1) * (1.0 - e2), DEFAULT_TOLERANCE)
        .with_detail(format!("eps1={e1:e} eps2={e2:e} sum_bound_slack={:e}", e1 + e2 - e12));
    r.key = pair_label(k1, k2);
    Ok(r)
}

pub fn check_subadditivity_cost(
    g1: &LoccCircuit,
    g2: &LoccCircuit,
    rho1: &BipartiteState,
    rho2: &BipartiteState,
    n1: usize,
    n2: usize,
) -> Result<CheckRecord> {
    check_subadditivity_cost_keyed((g1, &Key::empty()), (g2, &Key::empty()), rho1, rho2, n1, n2)
}

/// Dilution mirror of [`check_superadditivity_distillation_keyed`].
pub fn check_subadditivity_cost_keyed(
    (g1, k1): (&LoccCircuit, &Key),
    (g2, k2): (&LoccCircuit, &Key),
    rho1: &BipartiteState,
    rho2: &BipartiteState,
    n1: usize,
    n2: usize,
) -> Result<CheckRecord> {
    let e1 = p_err_dilute_keyed(g1, rho1, n1, k1)?;
    let e2 = p_err_dilute_keyed(g2, rho2, n2, k2)?;
    let e12 = p_err_dilute_keyed(&tensor(g1, g2)?, &rho1.tensor(rho2)?, n1 + n2, &joint_key(k1, k2))?;
    let mut r = CheckRecord::equality("subadditivity-cost", e12, 1.0 - (1.0 - e1) * (1.0 - e2), DEFAULT_TOLERANCE)
        .with_detail(format!("eps1={e1:e} eps2={e2:e} sum_bound_slack={:e}", e1 + e2 - e12));
    r.key = pair_label(k1, k2);
    Ok(r)
}

pub fn check_lu_invariance_cost(g: &LoccCircuit, target: &BipartiteState, layer: &LocalLayer, n: usize) -> Result<CheckRecord> {
    check_lu_invariance_cost_keyed(g, &Key::empty(), target, layer, n)
}

/// The conjugated witness reaches the conjugated target with the same error.
pub fn check_lu_invariance_cost_keyed(
    g: &LoccCircuit,
    key: &Key,
    target: &BipartiteState,
    layer: &LocalLayer,
    n: usize,
) -> Result<CheckRecord> {
    let (m_a, m_b) = target.cut();
    let (ua, ub) = layer.unitaries(m_a, m_b)?;
    let conj = conjugate_by_local_unitary(g, layer)?;
    let before = p_err_dilute_keyed(g, target, n, key)?;
    let after = p_err_dilute_keyed(&conj, &target.local_conjugate(&ua, &ub)?, n, key)?;
    let delta = conj.gate_count() - g.gate_count();
    Ok(labeled(CheckRecord::equality("lu-invariance-cost", after, before, DEFAULT_TOLERANCE), key).with_detail(format!(
        "gate_delta={delta} decomposition_len={} gates={}",
        layer.len(),
        conj.gate_count()
    )))
}

pub fn check_lu_invariance_distillation(g: &LoccCircuit, rho: &BipartiteState, layer: &LocalLayer, m: usize) -> Result<CheckRecord> {
    check_lu_invariance_distillation_keyed(g, &Key::empty(), rho, layer, m)
}

/// Pre-composing with the inverse layer undoes a local rotation of the input.
pub fn check_lu_invariance_distillation_keyed(
    g: &LoccCircuit,
    key: &Key,
    rho: &BipartiteState,
    layer: &LocalLayer,
    m: usize,
) -> Result<CheckRecord> {
    let (n_a, n_b) = rho.cut();
    let (ua, ub) = layer.unitaries(n_a, n_b)?;
    let undo = layer.inverse().to_circuit(n_a, n_b)?;
    let pre = compose(g, &undo)?;
    let before = p_err_distill_keyed(g, rho, m, key)?;
    let after = p_err_distill_keyed(&pre, &rho.local_conjugate(&ua, &ub)?, m, key)?;
    let delta = pre.gate_count() - g.gate_count();
    Ok(labeled(CheckRecord::equality("lu-invariance-distillation", after, before, DEFAULT_TOLERANCE), key).with_detail(
        format!("gate_delta={delta} decomposition_len={} gates={}", layer.len(), pre.gate_count()),
    ))
}

pub fn check_locc_monotonicity_cost(g: &LoccCircuit, post: &LoccCircuit, target: &BipartiteState, n: usize) -> Result<CheckRecord> {
    check_locc_monotonicity_cost_keyed(g, &Key::empty(), post, target, n)
}

/// `p_err(post ∘ g, post(ρ)) ≤ p_err(g, ρ)`.
pub fn check_locc_monotonicity_cost_keyed(
    g: &LoccCircuit,
    key: &Key,
    post: &LoccCircuit,
    target: &BipartiteState,
    n: usize,
) -> Result<CheckRecord> {
    let composed = compose(post, g)?;
    let after = p_err_dilute_keyed(&composed, &apply(post, target)?, n, key)?;
    let before = p_err_dilute_keyed(g, target, n, key)?;
    Ok(labeled(CheckRecord::at_most("locc-monotonicity-cost", after, before, DEFAULT_TOLERANCE), key)
        .with_detail(format!("gates={}", composed.gate_count())))
}

pub fn check_locc_monotonicity_distillation(
    g: &LoccCircuit,
    pre_map: &LoccCircuit,
    rho: &BipartiteState,
    m: usize,
) -> Result<CheckRecord> {
    check_locc_monotonicity_distillation_keyed(g, &Key::empty(), pre_map, rho, m)
}

/// `p_err(g ∘ pre, ρ) = p_err(g, pre(ρ))`. For keyed witnesses `pre_map` must
/// use no ancillas, so the key stays on `g`'s registers.
pub fn check_locc_monotonicity_distillation_keyed(
    g: &LoccCircuit,
    key: &Key,
    pre_map: &LoccCircuit,
    rho: &BipartiteState,
    m: usize,
) -> Result<CheckRecord> {
    if !key.is_empty() && (pre_map.registers().t_a > 0 || pre_map.registers().t_b > 0) {
        return Err(Error::Precondition("keyed composition needs an ancilla-free pre-map".into()));
    }
    let composed = compose(g, pre_map)?;
    let lhs = p_err_distill_keyed(&composed, rho, m, key)?;
    let rhs = p_err_distill_keyed(g, &apply(pre_map, rho)?, m, key)?;
    Ok(labeled(CheckRecord::equality("locc-monotonicity-distillation", lhs, rhs, DEFAULT_TOLERANCE), key)
        .with_detail(format!("gates={}", composed.gate_count())))
}

fn counterexample_name(m: usize, eps: f64) -> String {
    format!("noninvariance-counterexample[m={m},eps={eps}]")
}

/// Threshold η, a 2-member η-separated packing, and the bound
/// `distillable_upper_via_squashed(½Φ_U₁ + ½Φ_U₂, ε) < m − 1e-6`.
pub fn run_noninvariance_counterexample(m: usize, eps: f64, seed: u64) -> Result<CheckRecord> {
    let name = counterexample_name(m, eps);
    let Some(eta) = counterexample_eta_threshold(m, eps)? else {
        return Ok(CheckRecord::inconclusive(name, "no grid η satisfies the threshold inequality"));
    };
    let packing = greedy_packing(m, eta, DEFAULT_MAX_REJECTIONS, seed)?;
    if packing.len() < 2 {
        return Ok(CheckRecord::inconclusive(name, format!("packing at η={eta} has a single member")));
    }
    let (u1, u2) = (&packing.members[0], &packing.members[1]);
    let overlap = epr_overlap(u1, u2, m)?.norm();
    let psi = mixture(&[rotated_epr(u1, m)?, rotated_epr(u2, m)?], &[0.5, 0.5])?;
    let upper = distillable_upper_via_squashed(&psi, eps)?;
    Ok(CheckRecord::at_most(name, upper, m as f64 - STRICT_MARGIN, 0.0)
        .with_detail(format!("eta={eta} overlap={overlap:.12} upper={upper:.12}")))
}

/// Random two-round LOCC channel on a `(1, 1)` input with one ancilla per side
/// and one classical wire.
pub fn random_locc(rng: &mut impl Rng) -> Result<LoccCircuit> {
    let regs = Registers { n_a: 1, t_a: 1, q: 1, n_b: 1, t_b: 1 };
    let mut b = LoccCircuit::builder(regs);
    b.alice(Gate::unitary(haar_unitary(4, rng), [Wire::a(0), Wire::ap(0)])?)
        .alice(Gate::unitary(cnot(), [Wire::ap(0), Wire::c(0)])?)
        .alice(Gate::measure([Wire::c(0)])?)
        .bob(Gate::controlled([Wire::c(0)], haar_unitary(4, rng), [Wire::b(0), Wire::bp(0)])?)
        .next_round()
        .alice(Gate::controlled([Wire::c(0)], haar_unitary(2, rng), [Wire::a(0)])?);
    b.build()
}

/// Ancilla-free LOCC map on a `(1, 1)` input: Alice rotates and measures into
/// `C`, Bob rotates conditioned on the outcome.
pub fn random_ancilla_free_locc(rng: &mut impl Rng) -> Result<LoccCircuit> {
    let regs = Registers { n_a: 1, t_a: 0, q: 1, n_b: 1, t_b: 0 };
    let mut b = LoccCircuit::builder(regs);
    b.alice(Gate::unitary(haar_unitary(2, rng), [Wire::a(0)])?)
        .alice(Gate::unitary(cnot(), [Wire::a(0), Wire::c(0)])?)
        .bob(Gate::controlled([Wire::c(0)], haar_unitary(2, rng), [Wire::b(0)])?)
        .bob(Gate::unitary(haar_unitary(2, rng), [Wire::b(0)])?);
    b.build()
}

fn random_mixed_pair(rng: &mut impl Rng) -> Result<BipartiteState> {
    BipartiteState::new(random_density(4, rng), 1, 1)
}

fn random_pure_pair(rng: &mut impl Rng) -> Result<BipartiteState> {
    BipartiteState::from_pure(random_pure(4, rng), 1, 1)
}

/// Selects which checks a suite run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    All,
    Convexity,
    Concavity,
    Superadditivity,
    Subadditivity,
    LuInvariance,
    Monotonicity,
    Certificates,
    Counterexample,
    Keyed,
}

impl Suite {
    pub const NAMES: [&'static str; 10] = [
        "all",
        "convexity",
        "concavity",
        "superadditivity",
        "subadditivity",
        "lu-invariance",
        "monotonicity",
        "certificates",
        "counterexample",
        "keyed",
    ];

    const PARTS: [Suite; 9] = [
        Suite::Convexity,
        Suite::Concavity,
        Suite::Superadditivity,
        Suite::Subadditivity,
        Suite::LuInvariance,
        Suite::Monotonicity,
        Suite::Certificates,
        Suite::Counterexample,
        Suite::Keyed,
    ];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "convexity" => Suite::Convexity,
            "concavity" => Suite::Concavity,
            "superadditivity" => Suite::Superadditivity,
            "subadditivity" => Suite::Subadditivity,
            "lu-invariance" => Suite::LuInvariance,
            "monotonicity" => Suite::Monotonicity,
            "certificates" => Suite::Certificates,
            "counterexample" => Suite::Counterexample,
            "keyed" => Suite::Keyed,
            _ => return Err(Error::Argument(format!("unknown suite `{s}`; expected one of {}", Suite::NAMES.join(", ")))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub lambdas: Vec<u32>,
    pub seed: u64,
    /// Overrides the equality tolerance of every record when set.
    pub tolerance: Option<f64>,
    /// Key lengths used by the keyed suite.
    pub kappas: Vec<usize>,
}

impl SuiteConfig {
    pub fn new(lambdas: Vec<u32>, seed: u64) -> Self {
        Self {
            lambdas,
            seed,
            tolerance: None,
            kappas: vec![1, 2],
        }
    }
}

/// Counterexample parameter sets `(m, ε)` run by the suite.
pub const COUNTEREXAMPLE_CASES: [(usize, f64); 3] = [(1, 0.0), (1, 1e-4), (2, 0.25)];

struct Runner<'a> {
    cfg: &'a SuiteConfig,
    records: Vec<CheckRecord>,
}

impl Runner<'_> {
    fn rng(&self, name: &str, lambda: u32, key: &str) -> SimRng {
        rng_from_seed(derive_seed(self.cfg.seed, &[name, &lambda.to_string(), key]))
    }

    fn push(&mut self, r: CheckRecord, lambda: u32) {
        self.records.push(r.at_lambda(lambda));
    }

    fn convexity(&mut self, lambda: u32) -> Result<()> {
        let mut rng = self.rng("convexity-distillation", lambda, "");
        let g = random_locc(&mut rng)?;
        let states = (0..3).map(|_| random_mixed_pair(&mut rng)).collect::<Result<Vec<_>>>()?;
        let p = random_probabilities(3, &mut rng);
        let r = check_convexity_distillation(&g, &states, &p, 1)?;
        self.push(r, lambda);
        Ok(())
    }

    fn concavity(&mut self, lambda: u32) -> Result<()> {
        let mut rng = self.rng("concavity-dilution", lambda, "");
        let g = random_locc(&mut rng)?;
        let states = (0..3).map(|_| random_pure_pair(&mut rng)).collect::<Result<Vec<_>>>()?;
        let p = random_probabilities(3, &mut rng);
        let r = check_concavity_dilution(&g, &states, &p, 1)?;
        self.push(r, lambda);
        Ok(())
    }

    fn superadditivity(&mut self, lambda: u32) -> Result<()> {
        let mut rng = self.rng("superadditivity-distillation", lambda, "");
        let (g1, g2) = (random_locc(&mut rng)?, random_locc(&mut rng)?);
        let (r1, r2) = (random_mixed_pair(&mut rng)?, random_mixed_pair(&mut rng)?);
        let r = check_superadditivity_distillation(&g1, &g2, &r1, &r2, 1, 1)?;
        self.push(r, lambda);

        // exact witnesses on rotated EPR inputs
        let (u, v) = (haar_unitary(2, &mut rng), haar_unitary(2, &mut rng));
        let r = check_superadditivity_distillation(
            &unrotate_distillation(&u, 1)?,
            &unrotate_distillation(&v, 1)?,
            &rotated_epr(&u, 1)?,
            &rotated_epr(&v, 1)?,
            1,
            1,
        )?;
        self.push(r.at_key("unrotate"), lambda);
        Ok(())
    }

    fn subadditivity(&mut self, lambda: u32) -> Result<()> {
        let mut rng = self.rng("subadditivity-cost", lambda, "");
        let (g1, g2) = (random_locc(&mut rng)?, random_locc(&mut rng)?);
        let (t1, t2) = (random_pure_pair(&mut rng)?, random_pure_pair(&mut rng)?);
        let r = check_subadditivity_cost(&g1, &g2, &t1, &t2, 1, 1)?;
        self.push(r, lambda);

        let (p1, p2) = (random_pure(4, &mut rng), random_pure(4, &mut rng));
        let r = check_subadditivity_cost(
            &teleport_dilution(&StatePrep::pure(&p1, 1, 1)?)?,
            &teleport_dilution(&StatePrep::pure(&p2, 1, 1)?)?,
            &BipartiteState::from_pure(p1, 1, 1)?,
            &BipartiteState::from_pure(p2, 1, 1)?,
            1,
            1,
        )?;
        self.push(r.at_key("teleport"), lambda);
        Ok(())
    }

    fn lu_invariance(&mut self, lambda: u32) -> Result<()> {
        let mut rng = self.rng("lu-invariance-cost", lambda, "");
        let psi = random_pure(4, &mut rng);
        let g = teleport_dilution(&StatePrep::pure(&psi, 1, 1)?)?;
        let layer = LocalLayer::random(1, 1, false, &mut rng);
        let r = check_lu_invariance_cost(&g, &BipartiteState::from_pure(psi, 1, 1)?, &layer, 1)?;
        self.push(r, lambda);

        let mut rng = self.rng("lu-invariance-distillation", lambda, "");
        let g = random_locc(&mut rng)?;
        let rho = random_mixed_pair(&mut rng)?;
        let layer = LocalLayer::random(1, 1, false, &mut rng);
        let r = check_lu_invariance_distillation(&g, &rho, &layer, 1)?;
        self.push(r, lambda);
        Ok(())
    }

    fn monotonicity(&mut self, lambda: u32) -> Result<()> {
        let mut rng = self.rng("locc-monotonicity-cost", lambda, "");
        let g = random_locc(&mut rng)?;
        let post = random_locc(&mut rng)?;
        let target = random_pure_pair(&mut rng)?;
        let r = check_locc_monotonicity_cost(&g, &post, &target, 1)?;
        self.push(r, lambda);

        let mut rng = self.rng("locc-monotonicity-distillation", lambda, "");
        let g = random_locc(&mut rng)?;
        let pre = random_locc(&mut rng)?;
        let rho = random_mixed_pair(&mut rng)?;
        let r = check_locc_monotonicity_distillation(&g, &pre, &rho, 1)?;
        self.push(r, lambda);
        Ok(())
    }

    fn certificate_records(&mut self, report: &CertificateReport) {
        for e in &report.lambdas {
            let mut r = CheckRecord::at_most(report.certificate.clone(), e.p_err, e.epsilon, VERIFY_TOL).at_lambda(e.lambda);
            r.key = e.key.clone();
            self.records.push(r);
        }
    }

    fn efficiency_record(&mut self, report: &CertificateReport, lambda: u32) {
        let count = report.efficiency.violations.len() as f64;
        let mut r = CheckRecord::at_most(format!("{}-efficiency", report.certificate), count, 0.0, 0.0).at_lambda(lambda);
        if let Some(v) = report.efficiency.violations.first() {
            r = r.with_detail(v.message.clone());
        }
        self.records.push(r);
    }

    fn certificates(&mut self, lambda: u32) -> Result<()> {
        let seed = derive_seed(self.cfg.seed, &["certificate-distillation-rotated", &lambda.to_string()]);
        let u = haar_unitary(2, &mut rng_from_seed(seed));
        let (u1, u2) = (u.clone(), u);
        let fam = StateFamily::new("rotated-epr", Polynomial::constant(1.0), Polynomial::constant(1.0), move |_| {
            rotated_epr(&u1, 1)
        });
        let witness = ChannelFamily::new("unrotate", GateBudget::new(Polynomial::constant(1.0)), move |_| {
            unrotate_distillation(&u2, 1)
        });
        let cert = DistillationCertificate::new(
            "certificate-distillation-rotated",
            fam,
            Polynomial::constant(1.0),
            constant_schedule(0.0),
            witness,
        );
        let report = verify_distillation_certificate(&cert, &[lambda])?;
        self.certificate_records(&report);
        self.efficiency_record(&report, lambda);

        let epr = StateFamily::new("epr", Polynomial::identity(), Polynomial::identity(), |l| epr_pairs(l as usize));
        let identity = ChannelFamily::new("identity", GateBudget::new(Polynomial::constant(0.0)), |l| {
            Ok(LoccCircuit::identity(l as usize, l as usize))
        });
        let cert = DistillationCertificate::new(
            "certificate-distillation-epr",
            epr.clone(),
            Polynomial::identity(),
            constant_schedule(0.0),
            identity,
        );
        let report = verify_distillation_certificate(&cert, &[lambda])?;
        self.certificate_records(&report);
        self.efficiency_record(&report, lambda);

        let teleport = ChannelFamily::new("teleport", GateBudget::new(Polynomial::linear(0.0, 12.0)), |l| {
            teleport_dilution(&StatePrep::epr(l as usize))
        });
        let cert =
            DilutionCertificate::new("certificate-dilution-epr", epr, Polynomial::identity(), constant_schedule(0.0), teleport);
        let report = verify_dilution_certificate(&cert, &[lambda])?;
        self.certificate_records(&report);
        self.efficiency_record(&report, lambda);
        Ok(())
    }

    fn counterexamples(&mut self) -> Result<()> {
        for (m, eps) in COUNTEREXAMPLE_CASES {
            let seed = derive_seed(self.cfg.seed, &[&counterexample_name(m, eps)]);
            self.records.push(run_noninvariance_counterexample(m, eps, seed)?);
        }
        Ok(())
    }

    fn keyed(&mut self, lambda: u32) -> Result<()> {
        for kappa in self.cfg.kappas.clone() {
            let records = run_keyed_suite(kappa, &[lambda], self.cfg.seed)?;
            self.records.extend(records);
        }
        Ok(())
    }

    fn run(&mut self, suite: Suite, lambda: u32) -> Result<()> {
        match suite {
            Suite::All => {
                for part in Suite::PARTS {
                    if part != Suite::Counterexample {
                        self.run(part, lambda)?;
                    }
                }
                Ok(())
            }
            Suite::Convexity => self.convexity(lambda),
            Suite::Concavity => self.concavity(lambda),
            Suite::Superadditivity => self.superadditivity(lambda),
            Suite::Subadditivity => self.subadditivity(lambda),
            Suite::LuInvariance => self.lu_invariance(lambda),
            Suite::Monotonicity => self.monotonicity(lambda),
            Suite::Certificates => self.certificates(lambda),
            Suite::Counterexample => Ok(()),
            Suite::Keyed => self.keyed(lambda),
        }
    }
}

/// Sorts by check name, then λ, then key.
pub fn canonical_sort(records: &mut [CheckRecord]) {
    records.sort_by(|a, b| (&a.name, a.lambda, &a.key).cmp(&(&b.name, b.lambda, &b.key)));
}

/// Runs `suite` over the configured λ values with per-check seeds derived from
/// `(seed, check name, λ, key)`. Records come back in canonical order.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    if cfg.lambdas.is_empty() {
        return Err(Error::Argument("empty λ list".into()));
    }
    if let Some(&bad) = cfg.lambdas.iter().find(|&&l| l == 0) {
        return Err(Error::Argument(format!("λ must be at least 1, got {bad}")));
    }
    if let Some(t) = cfg.tolerance {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Argument(format!("tolerance must be a finite nonnegative number, got {t}")));
        }
    }
    if let Some(&k) = cfg.kappas.iter().find(|&&k| k > 3) {
        return Err(Error::Argument(format!("key length {k} exceeds the supported maximum of 3")));
    }
    let mut runner = Runner { cfg, records: Vec::new() };
    for &lambda in &cfg.lambdas {
        runner.run(suite, lambda)?;
    }
    if matches!(suite, Suite::All | Suite::Counterexample) {
        runner.counterexamples()?;
    }
    let mut records = runner.records;
    if let Some(t) = cfg.tolerance {
        for r in records.iter_mut().filter(|r| r.status != Status::Inconclusive && r.tolerance > 0.0) {
            r.tolerance = t;
            r.pass = r.slack.is_some_and(|s| s >= -t);
            r.status = if r.pass { Status::Pass } else { Status::Fail };
        }
    }
    canonical_sort(&mut records);
    Ok(records)
}

/// `Φ_{σ(k)}`-rotation of an arbitrary state on `m` pairs: Bob's side is
/// conjugated by the key's Pauli shift.
fn key_rotate(rho: &BipartiteState, key: &Key, m: usize) -> Result<BipartiteState> {
    let (a, b) = pauli_key_split(key, m);
    rho.local_conjugate(&ComplexMatrix::identity(1 << m), &pauli_shift(&a, &b)?)
}

fn keyed_witnesses(kappa: usize) -> (KeyedChannelFamily, KeyedChannelFamily) {
    let m = pauli_key_pairs(kappa);
    let budget = GateBudget::new(Polynomial::constant((2 * m + 2 * kappa) as f64));
    let distill = KeyedChannelFamily::new("keyed-unrotate", Polynomial::constant(kappa as f64), budget.clone(), move |_, _| {
        keyed_unrotate(kappa)
    });
    let dilute = KeyedChannelFamily::new("keyed-rotate", Polynomial::constant(kappa as f64), budget, move |_, _| {
        keyed_rotate(kappa)
    });
    (distill, dilute)
}

/// Per-key certificate records plus one uniformity record requiring a single
/// ε to cover every key, and one efficiency record.
pub fn keyed_certificate_records(report: &CertificateReport, epsilon: f64, lambda: u32) -> Vec<CheckRecord> {
    let mut out: Vec<CheckRecord> = report
        .lambdas
        .iter()
        .map(|e| {
            let mut r = CheckRecord::at_most(report.certificate.clone(), e.p_err, e.epsilon, VERIFY_TOL).at_lambda(e.lambda);
            r.key = e.key.clone();
            r
        })
        .collect();
    out.push(
        CheckRecord::at_most(format!("{}-uniform", report.certificate), report.max_p_err(), epsilon, VERIFY_TOL)
            .at_lambda(lambda),
    );
    let violations = report.efficiency.violations.len() as f64;
    out.push(CheckRecord::at_most(format!("{}-efficiency", report.certificate), violations, 0.0, 0.0).at_lambda(lambda));
    out
}

/// Keyed variants of every check over the stock Pauli-keyed family with key
/// length `kappa`: certificates for both directions, then each one-shot
/// check per key (per key pair for the tensor checks).
pub fn run_keyed_suite(kappa: usize, lambdas: &[u32], seed: u64) -> Result<Vec<CheckRecord>> {
    let fam = pauli_keyed_family(kappa);
    let m = pauli_key_pairs(kappa);
    let (distill, dilute) = keyed_witnesses(kappa);
    let prefix = format!("keyed[k={kappa}]");
    let name = |check: &str| format!("{prefix}-{check}");
    let mut out = Vec::new();
    for &lambda in lambdas {
        let cert = DistillationCertificate::new(
            name("certificate-distillation"),
            fam.clone(),
            Polynomial::constant(m as f64),
            constant_schedule(0.0),
            distill.clone(),
        );
        out.extend(keyed_certificate_records(&verify_distillation_certificate(&cert, &[lambda])?, 0.0, lambda));
        let cert = DilutionCertificate::new(
            name("certificate-dilution"),
            fam.clone(),
            Polynomial::constant(m as f64),
            constant_schedule(0.0),
            dilute.clone(),
        );
        out.extend(keyed_certificate_records(&verify_dilution_certificate(&cert, &[lambda])?, 0.0, lambda));

        let keys = fam.keys(lambda);
        for key in &keys {
            let ks = key.to_string();
            let rng_for = |check: &str| rng_from_seed(derive_seed(seed, &[&name(check), &lambda.to_string(), &ks]));
            let g_d = distill.generate(lambda, key)?;
            let g_c = dilute.generate(lambda, key)?;
            let rho_k = fam.generate(lambda, key)?;
            let d = 1usize << (2 * m);

            let mut rng = rng_for("convexity-distillation");
            let states = (0..3)
                .map(|_| key_rotate(&BipartiteState::new(random_density(d, &mut rng), m, m)?, key, m))
                .collect::<Result<Vec<_>>>()?;
            let p = random_probabilities(3, &mut rng);
            out.push(rename(check_convexity_distillation_keyed(&g_d, key, &states, &p, m)?, &prefix, lambda));

            let mut rng = rng_for("concavity-dilution");
            let other = key_rotate(&BipartiteState::from_pure(random_pure(d, &mut rng), m, m)?, key, m)?;
            let p = random_probabilities(2, &mut rng);
            out.push(rename(check_concavity_dilution_keyed(&g_c, key, &[rho_k.clone(), other], &p, m)?, &prefix, lambda));

            let mut rng = rng_for("lu-invariance-cost");
            let layer = LocalLayer::random(m, m, true, &mut rng);
            out.push(rename(check_lu_invariance_cost_keyed(&g_c, key, &rho_k, &layer, m)?, &prefix, lambda));

            let mut rng = rng_for("lu-invariance-distillation");
            let layer = LocalLayer::random(m, m, true, &mut rng);
            let noisy = key_rotate(&BipartiteState::new(random_density(d, &mut rng), m, m)?, key, m)?;
            out.push(rename(check_lu_invariance_distillation_keyed(&g_d, key, &noisy, &layer, m)?, &prefix, lambda));

            if m == 1 {
                let mut rng = rng_for("locc-monotonicity-cost");
                let post = random_locc(&mut rng)?;
                out.push(rename(check_locc_monotonicity_cost_keyed(&g_c, key, &post, &rho_k, m)?, &prefix, lambda));

                let mut rng = rng_for("locc-monotonicity-distillation");
                let pre = random_ancilla_free_locc(&mut rng)?;
                let noisy = key_rotate(&random_mixed_pair(&mut rng)?, key, m)?;
                out.push(rename(
                    check_locc_monotonicity_distillation_keyed(&g_d, key, &pre, &noisy, m)?,
                    &prefix,
                    lambda,
                ));
            }

            if kappa <= 2 {
                for key2 in &keys {
                    let rho2 = fam.generate(lambda, key2)?;
                    let g_d2 = distill.generate(lambda, key2)?;
                    let g_c2 = dilute.generate(lambda, key2)?;
                    out.push(rename(
                        check_superadditivity_distillation_keyed((&g_d, key), (&g_d2, key2), &rho_k, &rho2, m, m)?,
                        &prefix,
                        lambda,
                    ));
                    out.push(rename(
                        check_subadditivity_cost_keyed((&g_c, key), (&g_c2, key2), &rho_k, &rho2, m, m)?,
                        &prefix,
                        lambda,
                    ));
                }
            }
        }
    }
    canonical_sort(&mut out);
    Ok(out)
}

fn rename(mut r: CheckRecord, prefix: &str, lambda: u32) -> CheckRecord {
    r.name = format!("{prefix}-{}", r.name);
    r.at_lambda(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locc::gates::{pauli_x, LocalGate};
    use crate::locc::protocols::keyed_identity;
    use crate::states::epr_amplitudes;

    fn zero_pair() -> BipartiteState {
        BipartiteState::basis(&[false], &[false])
    }

    #[test]
    fn record_invariant() {
        let r = CheckRecord::equality("x", 1.0, 1.0 + 1e-10, 1e-9);
        assert!(r.pass && r.status == Status::Pass);
        let r = CheckRecord::at_most("x", 1.0, 0.5, 1e-9);
        assert!(!r.pass && r.is_failure());
        assert_eq!(r.slack, Some(-0.5));
        let r = CheckRecord::inconclusive("x", "why");
        assert!(!r.pass && !r.is_failure());
    }

    #[test]
    fn convexity_examples() {
        let id = LoccCircuit::identity(1, 1);
        let phi = epr_pairs(1).unwrap();
        let r = check_convexity_distillation(&id, &[phi.clone(), zero_pair()], &[0.5, 0.5], 1).unwrap();
        assert!((r.lhs - 0.25).abs() < 1e-12 && r.pass);
        let r = check_convexity_distillation(&id, &[zero_pair(), zero_pair()], &[0.3, 0.7], 1).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-12 && (r.rhs - 0.5).abs() < 1e-12);
        let mut rng = rng_from_seed(120);
        for _ in 0..5 {
            let g = random_locc(&mut rng).unwrap();
            let states: Vec<_> = (0..3).map(|_| random_mixed_pair(&mut rng).unwrap()).collect();
            let p = random_probabilities(3, &mut rng);
            assert!(check_convexity_distillation(&g, &states, &p, 1).unwrap().pass);
        }
        assert!(check_convexity_distillation(&id, &[phi], &[0.5, 0.5], 1).is_err());
    }

    #[test]
    fn concavity_examples() {
        let id = LoccCircuit::identity(1, 1);
        let phi = epr_pairs(1).unwrap();
        let r = check_concavity_dilution(&id, &[phi.clone(), zero_pair()], &[0.5, 0.5], 1).unwrap();
        assert!((r.lhs - 0.25).abs() < 1e-9);
        assert!((r.rhs - 0.25).abs() < 1e-9);
        assert!(r.pass);
        let r = check_concavity_dilution(&id, &[zero_pair()], &[1.0], 1).unwrap();
        assert!((r.lhs - r.rhs).abs() < 1e-12);
    }

    #[test]
    fn tensor_checks() {
        let mut rng = rng_from_seed(121);
        let (u, v) = (haar_unitary(2, &mut rng), haar_unitary(2, &mut rng));
        let r = check_superadditivity_distillation(
            &unrotate_distillation(&u, 1).unwrap(),
            &unrotate_distillation(&v, 1).unwrap(),
            &rotated_epr(&u, 1).unwrap(),
            &rotated_epr(&v, 1).unwrap(),
            1,
            1,
        )
        .unwrap();
        assert!(r.pass && r.lhs <= 1e-9);

        // ε₁ = ε₂ = ½ gives ¾
        let id = LoccCircuit::identity(1, 1);
        let r = check_superadditivity_distillation(&id, &id, &zero_pair(), &zero_pair(), 1, 1).unwrap();
        assert!((r.lhs - 0.75).abs() < 1e-9 && r.pass);

        let psi = random_pure(4, &mut rng);
        let t = BipartiteState::from_pure(psi.clone(), 1, 1).unwrap();
        let g = teleport_dilution(&StatePrep::pure(&psi, 1, 1).unwrap()).unwrap();
        let r = check_subadditivity_cost(&g, &g, &t, &t, 1, 1).unwrap();
        assert!(r.pass && r.lhs <= 1e-9);
        // ε₁ = 0, ε₂ = x
        let r = check_subadditivity_cost(&id, &id, &epr_pairs(1).unwrap(), &t, 1, 1).unwrap();
        let x = crate::measures::p_err_dilute(&id, &t, 1).unwrap();
        assert!((r.lhs - x).abs() < 1e-9 && r.pass);
    }

    #[test]
    fn lu_checks() {
        let phi = epr_pairs(1).unwrap();
        let g = teleport_dilution(&StatePrep::epr(1)).unwrap();
        let r = check_lu_invariance_cost(&g, &phi, &LocalLayer::default(), 1).unwrap();
        assert!(r.pass && r.detail.as_deref().unwrap().starts_with("gate_delta=0"));
        let x = LocalLayer::new(vec![], vec![LocalGate::new(pauli_x(), [0]).unwrap()]);
        let r = check_lu_invariance_cost(&g, &phi, &x, 1).unwrap();
        assert!(r.pass && r.detail.as_deref().unwrap().starts_with("gate_delta=1"));

        let u = pauli_x();
        let r = check_lu_invariance_distillation(&unrotate_distillation(&u, 1).unwrap(), &rotated_epr(&u, 1).unwrap(), &x, 1).unwrap();
        assert!(r.pass && r.lhs < 1e-9);
        let mut rng = rng_from_seed(122);
        let layer = LocalLayer::random(1, 1, false, &mut rng);
        let r = check_lu_invariance_distillation(&random_locc(&mut rng).unwrap(), &random_mixed_pair(&mut rng).unwrap(), &layer, 1).unwrap();
        assert!(r.pass);
        assert!(r.detail.unwrap().starts_with("gate_delta=2"));
    }

    #[test]
    fn monotonicity_checks() {
        let id = LoccCircuit::identity(1, 1);
        let mut rng = rng_from_seed(123);
        let target = random_pure_pair(&mut rng).unwrap();
        let r = check_locc_monotonicity_cost(&random_locc(&mut rng).unwrap(), &id, &target, 1).unwrap();
        assert!(r.pass && (r.lhs - r.rhs).abs() < 1e-9);

        // Bob measures his qubit into C: partial dephasing
        let mut b = LoccCircuit::builder(Registers { n_a: 1, t_a: 0, q: 1, n_b: 1, t_b: 0 });
        b.bob(Gate::unitary(cnot(), [Wire::b(0), Wire::c(0)]).unwrap());
        let dephase = b.build().unwrap();
        let g = teleport_dilution(&StatePrep::epr(1)).unwrap();
        assert!(check_locc_monotonicity_cost(&g, &dephase, &epr_pairs(1).unwrap(), 1).unwrap().pass);
        // trace out Bob's qubit and replace it with a fresh ancilla
        let mut b = LoccCircuit::builder(Registers { n_a: 1, t_a: 0, q: 0, n_b: 1, t_b: 1 });
        b.outputs(vec![Wire::a(0)], vec![Wire::bp(0)]);
        let replace = b.build().unwrap();
        assert!(check_locc_monotonicity_cost(&random_locc(&mut rng).unwrap(), &replace, &target, 1).unwrap().pass);

        let u = haar_unitary(2, &mut rng);
        let r = check_locc_monotonicity_distillation(&id, &unrotate_distillation(&u, 1).unwrap(), &rotated_epr(&u, 1).unwrap(), 1).unwrap();
        assert!(r.pass && r.lhs < 1e-9);
        let r = check_locc_monotonicity_distillation(&id, &id, &target, 1).unwrap();
        assert!(r.pass);
        let r = check_locc_monotonicity_distillation(&random_locc(&mut rng).unwrap(), &random_ancilla_free_locc(&mut rng).unwrap(), &target, 1).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn counterexample_cases() {
        let r = run_noninvariance_counterexample(1, 0.0, 1).unwrap();
        assert!(r.pass, "{r:?}");
        // η ≥ 0.5 bound: ½ I(A;B) ≤ 1 − ½ H[0.5]
        assert!(r.lhs < 1.0 - 0.5 * crate::entropy::binary_mixture_entropy(0.5).unwrap() + 0.5);
        let r = run_noninvariance_counterexample(1, 1e-4, 2).unwrap();
        assert!(r.pass, "{r:?}");
        let r = run_noninvariance_counterexample(2, 0.25, 3).unwrap();
        assert_eq!(r.status, Status::Inconclusive);
    }

    #[test]
    fn keyed_suite_passes_and_mismatch_fails() {
        let records = run_keyed_suite(1, &[1], 5).unwrap();
        assert!(records.iter().all(|r| r.pass), "{:?}", records.iter().find(|r| !r.pass));
        assert!(records.iter().any(|r| r.name.contains("superadditivity") && r.key.as_deref() == Some("1,0")));

        let fam = pauli_keyed_family(1);
        let witness = KeyedChannelFamily::new("mismatched", Polynomial::constant(1.0), GateBudget::new(Polynomial::constant(4.0)), |_, _| {
            keyed_identity(1)
        });
        let cert = DistillationCertificate::new("mismatched", fam, Polynomial::constant(1.0), constant_schedule(0.0), witness);
        let report = verify_distillation_certificate(&cert, &[1]).unwrap();
        let recs = keyed_certificate_records(&report, 0.0, 1);
        let failing: Vec<_> = recs.iter().filter(|r| r.is_failure()).map(|r| (r.name.clone(), r.key.clone())).collect();
        assert_eq!(
            failing,
            vec![("mismatched".to_string(), Some("1".to_string())), ("mismatched-uniform".to_string(), None)]
        );
    }

    #[test]
    fn suite_is_deterministic_and_sorted() {
        let cfg = SuiteConfig::new(vec![1], 7);
        let a = run_suite(Suite::Convexity, &cfg).unwrap();
        let b = run_suite(Suite::Convexity, &cfg).unwrap();
        assert_eq!(a, b);
        let all = run_suite(Suite::Monotonicity, &SuiteConfig::new(vec![2, 1], 7)).unwrap();
        let keys: Vec<_> = all.iter().map(|r| (r.name.clone(), r.lambda)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(run_suite(Suite::All, &SuiteConfig::new(vec![0], 7)).is_err());
        assert!("nope".parse::<Suite>().is_err());
        assert_eq!("lu-invariance".parse::<Suite>().unwrap(), Suite::LuInvariance);
    }

    #[test]
    fn tolerance_override_applies() {
        let mut cfg = SuiteConfig::new(vec![1], 7);
        cfg.tolerance = Some(-0.0);
        let recs = run_suite(Suite::Convexity, &cfg).unwrap();
        assert!(recs.iter().all(|r| r.tolerance == 0.0));
        cfg.tolerance = Some(f64::NAN);
        assert!(run_suite(Suite::Convexity, &cfg).is_err());
    }

    #[test]
    fn epr_overlap_of_key_rotation() {
        let key = Key::from_index(1, 1);
        let rotated = key_rotate(&epr_pairs(1).unwrap(), &key, 1).unwrap();
        assert!(rotated.state().expectation(&epr_amplitudes(1)).unwrap() < 1e-12);
    }
}
