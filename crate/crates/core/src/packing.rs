//! Separated packings of rotated EPR states and the cardinality estimates
//! that go with them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::locc::GateBudget;
use crate::random::{haar_unitary, rng_from_seed};
use crate::states::{pauli_shift, rotated_epr_amplitudes, Key};

pub const DEFAULT_MAX_REJECTIONS: usize = 500;
/// Largest `m` the constructor handles (orbit scans grow as `4^m`).
pub const MAX_PACKING_M: usize = 2;
const SEPARATION_TOL: f64 = 1e-9;
const UNITARY_TOL: f64 = 1e-9;

fn check_pair(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<()> {
    if u.rows() != v.rows() || !u.is_square() || !v.is_square() {
        return Err(Error::Shape(format!(
            "unitaries of shapes {}x{} and {}x{}",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    if !u.is_unitary(UNITARY_TOL) || !v.is_unitary(UNITARY_TOL) {
        return Err(Error::NotUnitary("packing inputs must be unitary within 1e-9".into()));
    }
    Ok(())
}

/// `‖U − V‖₂`.
pub fn frobenius_distance(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<f64> {
    check_pair(u, v)?;
    Ok((u - v).frobenius_norm())
}

/// `⟨φ^{⊗m}|(I⊗U†)(I⊗V)|φ^{⊗m}⟩`, computed from the two state vectors.
pub fn epr_overlap(u: &ComplexMatrix, v: &ComplexMatrix, m: usize) -> Result<Complex64> {
    check_pair(u, v)?;
    let a = rotated_epr_amplitudes(u, m)?;
    let b = rotated_epr_amplitudes(v, m)?;
    Ok(a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum())
}

/// `{σ_X(a)σ_Z(b) V}` over all `a, b ∈ {0,1}^m`, with `a = idx mod 2^m`, `b = idx / 2^m`.
pub fn pauli_orbit(v: &ComplexMatrix, m: usize) -> Result<Vec<ComplexMatrix>> {
    let d = 1usize << m;
    if v.rows() != d || !v.is_square() {
        return Err(Error::Shape(format!("expected a {d}x{d} unitary")));
    }
    (0..d * d)
        .map(|idx| {
            let a = Key::from_index(idx % d, m);
            let b = Key::from_index(idx / d, m);
            pauli_shift(a.bits(), b.bits())?.matmul(v)
        })
        .collect()
}

/// `√F(Φ_U, Φ_V) = |tr(U†V)| / 2^m`.
fn root_fidelity(u: &ComplexMatrix, v: &ComplexMatrix) -> f64 {
    let d = u.rows();
    let tr: Complex64 = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| u[(r, c)].conj() * v[(r, c)]).sum();
    tr.norm() / d as f64
}

/// Largest root fidelity between `v` and any member of `orbit`.
fn max_orbit_overlap(orbit: &[ComplexMatrix], v: &ComplexMatrix) -> f64 {
    orbit.iter().map(|p| root_fidelity(p, v)).fold(0.0, f64::max)
}

/// Members whose Pauli orbits are pairwise `(1−η)`-separated in root fidelity.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryPacking {
    pub m: usize,
    pub eta: f64,
    pub seed: u64,
    pub members: Vec<ComplexMatrix>,
}

impl UnitaryPacking {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn to_json(&self) -> PackingJson {
        PackingJson {
            m: self.m,
            eta: self.eta,
            seed: self.seed,
            members: self
                .members
                .iter()
                .map(|u| MatrixJson { re: u.re(), im: u.im() })
                .collect(),
        }
    }

    pub fn from_json(json: &PackingJson) -> Result<Self> {
        let d = 1usize << json.m;
        let members = json
            .members
            .iter()
            .map(|mj| ComplexMatrix::from_parts(d, d, &mj.re, &mj.im))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m: json.m,
            eta: json.eta,
            seed: json.seed,
            members,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingJson {
    pub m: usize,
    pub eta: f64,
    pub seed: u64,
    pub members: Vec<MatrixJson>,
}

/// Greedy packing from Haar candidates: a candidate is kept when it is
/// separated from every member's orbit; stops after `max_rejections`
/// consecutive rejections.
pub fn greedy_packing(m: usize, eta: f64, max_rejections: usize, seed: u64) -> Result<UnitaryPacking> {
    if m == 0 || m > MAX_PACKING_M {
        return Err(Error::Argument(format!("packing supports m in 1..={MAX_PACKING_M}, got {m}")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Argument(format!("η must lie in (0, 1), got {eta}")));
    }
    let d = 1usize << m;
    let bound = 1.0 - eta + SEPARATION_TOL;
    let mut rng = rng_from_seed(seed);
    let mut members = Vec::new();
    let mut orbits: Vec<Vec<ComplexMatrix>> = Vec::new();
    let mut rejections = 0;
    while rejections < max_rejections || members.is_empty() {
        let cand = haar_unitary(d, &mut rng);
        if orbits.iter().all(|o| max_orbit_overlap(o, &cand) <= bound) {
            orbits.push(pauli_orbit(&cand, m)?);
            members.push(cand);
            rejections = 0;
        } else {
            rejections += 1;
        }
    }
    Ok(UnitaryPacking { m, eta, seed, members })
}

/// True iff every cross-orbit pair has `√F ≤ 1 − η` (within 1e-9).
pub fn separation_check(p: &UnitaryPacking, m: usize) -> bool {
    let d = 1usize << m;
    if p.members.iter().any(|u| u.rows() != d || !u.is_square() || !u.is_unitary(UNITARY_TOL)) {
        return false;
    }
    let bound = 1.0 - p.eta + SEPARATION_TOL;
    let Ok(orbits) = p.members.iter().map(|u| pauli_orbit(u, m)).collect::<Result<Vec<_>>>() else {
        return false;
    };
    (0..p.members.len()).all(|i| (i + 1..p.members.len()).all(|j| max_orbit_overlap(&orbits[i], &p.members[j]) <= bound))
}

/// `(2c√d/η)^{d²} ≤ N_η ≤ (2C√d/η)^{d²}`, stored as base-2 logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetBoundEstimate {
    pub d: usize,
    pub eta: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub log2_lower: f64,
    pub log2_upper: f64,
}

pub fn net_cardinality_bounds(d: usize, eta: f64, c: f64, big_c: f64) -> Result<NetBoundEstimate> {
    if d == 0 || !(eta > 0.0) || !(c > 0.0) || !(big_c > 0.0) {
        return Err(Error::Argument(format!(
            "net bounds need positive d, η, c, C; got ({d}, {eta}, {c}, {big_c})"
        )));
    }
    let df = d as f64;
    let log = |k: f64| df * df * (2.0 * k * df.sqrt() / eta).log2();
    Ok(NetBoundEstimate {
        d,
        eta,
        c_lower: c,
        c_upper: big_c,
        log2_lower: log(c),
        log2_upper: log(big_c),
    })
}

/// `log₂|circuits| − log₂|packing| ≈ poly(λ) − ω·2^{2m}·log₂(1/η)`; negative
/// values mean the packing outnumbers the circuits.
pub fn counting_ratio_log(poly: &GateBudget, m: usize, eta: f64, lambda: u32, omega: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Argument(format!("η must lie in (0, 1), got {eta}")));
    }
    let exponent = i32::try_from(2 * m).map_err(|_| Error::Argument(format!("m = {m} too large")))?;
    Ok(poly.eval(lambda) - omega * 2f64.powi(exponent) * (1.0 / eta).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locc::gates::{pauli_x, pauli_z};
    use crate::poly::Polynomial;
    use crate::random::rng_from_seed;
    use proptest::prelude::*;

    #[test]
    fn frobenius_examples() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(frobenius_distance(&id, &id).unwrap(), 0.0);
        assert!((frobenius_distance(&id, &pauli_x()).unwrap() - 2.0).abs() < 1e-12);
        let mut rng = rng_from_seed(110);
        for d in [2, 4] {
            let u = haar_unitary(d, &mut rng);
            let v = haar_unitary(d, &mut rng);
            let dist = frobenius_distance(&u, &v).unwrap();
            assert!(dist <= 2.0 * (d as f64).sqrt() + 1e-12);
            assert!((dist - frobenius_distance(&v, &u).unwrap()).abs() < 1e-12);
        }
        assert!(frobenius_distance(&id, &ComplexMatrix::identity(4)).is_err());
        assert!(frobenius_distance(&id, &ComplexMatrix::diag(&[1.0, 0.5])).is_err());
    }

    #[test]
    fn overlap_examples() {
        let id = ComplexMatrix::identity(2);
        assert!((epr_overlap(&id, &id, 1).unwrap() - 1.0).norm() < 1e-12);
        assert!(epr_overlap(&id, &pauli_x(), 1).unwrap().norm() < 1e-12);
        assert!(epr_overlap(&id, &ComplexMatrix::identity(4), 1).is_err());
    }

    #[test]
    fn orbit_examples() {
        let orbit = pauli_orbit(&ComplexMatrix::identity(2), 1).unwrap();
        let xz = &pauli_x() * &pauli_z();
        let expected = [ComplexMatrix::identity(2), pauli_x(), pauli_z(), xz];
        assert_eq!(orbit.len(), 4);
        for (got, want) in orbit.iter().zip(&expected) {
            assert!(got.max_abs_diff(want) < 1e-15);
        }
        let mut rng = rng_from_seed(111);
        let v = haar_unitary(4, &mut rng);
        let orbit = pauli_orbit(&v, 2).unwrap();
        assert_eq!(orbit.len(), 16);
        assert!(orbit[0].max_abs_diff(&v) < 1e-15);
        for (i, a) in orbit.iter().enumerate() {
            assert!(a.is_unitary(1e-12));
            for b in &orbit[i + 1..] {
                assert!(frobenius_distance(a, b).unwrap() > 1e-9);
            }
        }
    }

    #[test]
    fn near_one_eta_gives_singleton() {
        for seed in 0..5 {
            let p = greedy_packing(1, 0.99, 200, seed).unwrap();
            assert_eq!(p.len(), 1);
            assert!(separation_check(&p, 1));
        }
    }

    #[test]
    fn half_eta_at_m1_is_a_singleton() {
        // the 4 orbit coefficients of U†V have squared moduli summing to 1, so
        // one of them is at least 1/2 and η = 0.5 admits only a measure-zero tie
        let p = greedy_packing(1, 0.5, 300, 7).unwrap();
        assert_eq!(p.len(), 1);
        let p = greedy_packing(1, 0.3, 300, 7).unwrap();
        assert!(p.len() >= 2);
        assert!(separation_check(&p, 1));
        assert_eq!(greedy_packing(1, 0.3, 300, 7).unwrap(), p);
    }

    #[test]
    fn m2_packings_are_separated() {
        let p = greedy_packing(2, 0.5, 100, 3).unwrap();
        assert!(p.len() >= 2);
        assert!(separation_check(&p, 2));
    }

    #[test]
    fn separation_check_examples() {
        let mut rng = rng_from_seed(112);
        let u = haar_unitary(2, &mut rng);
        let single = UnitaryPacking { m: 1, eta: 0.3, seed: 0, members: vec![u.clone()] };
        assert!(separation_check(&single, 1));
        let dup = UnitaryPacking { members: vec![u.clone(), u], ..single };
        assert!(!separation_check(&dup, 1));
    }

    #[test]
    fn constructor_rejects_bad_arguments() {
        assert!(greedy_packing(3, 0.5, 10, 0).is_err());
        assert!(greedy_packing(0, 0.5, 10, 0).is_err());
        assert!(greedy_packing(1, 1.0, 10, 0).is_err());
        assert!(greedy_packing(1, 0.0, 10, 0).is_err());
        assert_eq!(greedy_packing(1, 0.3, 0, 0).unwrap().len(), 1);
    }

    #[test]
    fn packing_size_nonincreasing_in_eta() {
        for seed in [1, 2, 3] {
            let sizes: Vec<usize> = (1..=9).map(|i| greedy_packing(1, f64::from(i) / 10.0, 200, seed).unwrap().len()).collect();
            assert!(sizes.windows(2).all(|w| w[0] >= w[1]), "seed {seed}: {sizes:?}");
        }
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let p = greedy_packing(1, 0.3, 100, 9).unwrap();
        let text = serde_json::to_string(&p.to_json()).unwrap();
        let back = UnitaryPacking::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn net_bound_examples() {
        let b = net_cardinality_bounds(2, 0.5, 1.0, 1.0).unwrap();
        assert!((b.log2_lower - 10.0).abs() < 1e-12);
        assert_eq!(b.log2_lower, b.log2_upper);
        let half = net_cardinality_bounds(2, 0.25, 0.5, 2.0).unwrap();
        let full = net_cardinality_bounds(2, 0.5, 0.5, 2.0).unwrap();
        assert!(half.log2_lower > full.log2_lower && half.log2_upper > full.log2_upper);
        assert!(full.log2_lower <= full.log2_upper);
        assert!(net_cardinality_bounds(2, 0.0, 1.0, 1.0).is_err());
        assert!(net_cardinality_bounds(2, 0.5, -1.0, 1.0).is_err());
    }

    #[test]
    fn counting_ratio_examples() {
        let sq = GateBudget::new(Polynomial::monomial(1.0, 2));
        assert!((counting_ratio_log(&sq, 3, 0.5, 4, 1.0).unwrap() + 48.0).abs() < 1e-12);
        assert!(counting_ratio_log(&sq, 0, 0.5, 4, 1.0).unwrap() > 0.0);
        let vals: Vec<f64> = (0..5).map(|m| counting_ratio_log(&sq, m, 0.5, 4, 1.0).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(counting_ratio_log(&sq, 3, 1.0, 4, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn overlap_distance_identity(seed in any::<u64>(), m in 1usize..=2) {
            let mut rng = rng_from_seed(seed);
            let u = haar_unitary(1 << m, &mut rng);
            let v = haar_unitary(1 << m, &mut rng);
            let lhs = epr_overlap(&u, &v, m).unwrap().re;
            let dist = frobenius_distance(&u, &v).unwrap();
            let rhs = 1.0 - dist * dist / f64::from(1u32 << (m + 1));
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn greedy_output_is_separated(seed in any::<u64>(), i in 1u32..10) {
            let p = greedy_packing(1, f64::from(i) / 10.0, 60, seed).unwrap();
            prop_assert!(!p.is_empty());
            prop_assert!(separation_check(&p, 1));
        }
    }
}
