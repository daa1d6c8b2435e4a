//! Stock protocols: local unrotation, teleportation-based dilution and one
//! recurrence round of BBPSSW distillation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::circuit::{Gate, LoccCircuit, Registers, Wire};
use super::gates::{cnot, hadamard, pauli_x, pauli_z, sequence_unitary, swap, LocalGate};
use super::sim::apply;
use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix};
use crate::states::{epr_pairs, pauli_key_pairs, BipartiteState};

/// Largest register handled by a single gate payload.
const MAX_PREP_PART: usize = 2;

/// Bob-only circuit applying `u†` to his `m` qubits; maps `Φ_U` to `Φ^{⊗m}`.
pub fn unrotate_distillation(u: &ComplexMatrix, m: usize) -> Result<LoccCircuit> {
    if m == 0 || m > MAX_PREP_PART {
        return Err(Error::Argument(format!("unrotation supports 1..={MAX_PREP_PART} pairs, got {m}")));
    }
    if u.rows() != 1 << m || !u.is_square() {
        return Err(Error::Shape(format!("expected a {0}x{0} unitary", 1 << m)));
    }
    let regs = Registers {
        n_a: m,
        n_b: m,
        ..Registers::default()
    };
    let mut b = LoccCircuit::builder(regs);
    b.bob(Gate::unitary(u.adjoint(), (0..m).map(Wire::b).collect::<Vec<_>>())?);
    b.build()
}

/// Keyed witness for the stock Pauli-keyed family: Bob undoes
/// `X^a Z^b` with gates controlled on his copy of the key in `B'`.
pub fn keyed_unrotate(kappa: usize) -> Result<LoccCircuit> {
    let m = pauli_key_pairs(kappa);
    let mut b = LoccCircuit::builder(keyed_registers(m, kappa));
    for i in 0..m {
        if i < kappa {
            b.bob(Gate::controlled([Wire::bp(i)], pauli_x(), [Wire::b(i)])?);
        }
        if m + i < kappa {
            b.bob(Gate::controlled([Wire::bp(m + i)], pauli_z(), [Wire::b(i)])?);
        }
    }
    b.build()
}

/// Keyed dilution witness for the stock family: Bob turns `Φ^{⊗m}` into
/// `Φ_{σ_X(a)σ_Z(b)}` with gates controlled on his key copy.
pub fn keyed_rotate(kappa: usize) -> Result<LoccCircuit> {
    let m = pauli_key_pairs(kappa);
    let mut b = LoccCircuit::builder(keyed_registers(m, kappa));
    for i in 0..m {
        if m + i < kappa {
            b.bob(Gate::controlled([Wire::bp(m + i)], pauli_z(), [Wire::b(i)])?);
        }
        if i < kappa {
            b.bob(Gate::controlled([Wire::bp(i)], pauli_x(), [Wire::b(i)])?);
        }
    }
    b.build()
}

/// Same registers as [`keyed_unrotate`] but no gates: correct only for the all-zero key.
pub fn keyed_identity(kappa: usize) -> Result<LoccCircuit> {
    LoccCircuit::builder(keyed_registers(pauli_key_pairs(kappa), kappa)).build()
}

fn keyed_registers(m: usize, kappa: usize) -> Registers {
    Registers {
        n_a: m,
        t_a: kappa,
        q: 0,
        n_b: m,
        t_b: kappa,
    }
}

/// Gate list preparing a pure state on `a_qubits + b_qubits` qubits from
/// `|0…0⟩`, A-part first. Used by Alice on her ancilla block.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePrep {
    pub gates: Vec<LocalGate>,
    pub a_qubits: usize,
    pub b_qubits: usize,
}

impl StatePrep {
    pub fn new(gates: Vec<LocalGate>, a_qubits: usize, b_qubits: usize) -> Result<Self> {
        let n = a_qubits + b_qubits;
        if let Some(q) = gates.iter().flat_map(|g| g.qubits.iter()).find(|&&q| q >= n) {
            return Err(Error::Shape(format!("prep gate on qubit {q} of a {n}-qubit register")));
        }
        Ok(Self {
            gates,
            a_qubits,
            b_qubits,
        })
    }

    /// `|φ^{⊗n}⟩`: a Hadamard and a CNOT per pair.
    pub fn epr(n: usize) -> Self {
        let mut gates = Vec::with_capacity(2 * n);
        for i in 0..n {
            gates.push(LocalGate::new(hadamard(), [i]).expect("static gate"));
            gates.push(LocalGate::new(cnot(), [i, n + i]).expect("static gate"));
        }
        Self {
            gates,
            a_qubits: n,
            b_qubits: n,
        }
    }

    /// Prepares an arbitrary pure state via its Schmidt decomposition:
    /// coefficients on the first `r = min(k, n)` A qubits, `r` CNOTs across,
    /// then one local basis change per part. Parts hold at most two qubits.
    pub fn pure(psi: &[Complex64], k: usize, n: usize) -> Result<Self> {
        if !(1..=MAX_PREP_PART).contains(&k) || !(1..=MAX_PREP_PART).contains(&n) {
            return Err(Error::Argument(format!(
                "Schmidt preparation supports parts of 1..={MAX_PREP_PART} qubits, got ({k}, {n})"
            )));
        }
        let (da, db) = (1usize << k, 1usize << n);
        if psi.len() != da * db {
            return Err(Error::Shape(format!("expected {} amplitudes, got {}", da * db, psi.len())));
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("amplitudes have norm² {norm}")));
        }
        let svd = DMatrix::from_row_slice(da, db, psi).svd(true, true);
        let u = ComplexMatrix::from_nalgebra(svd.u.as_ref().expect("requested U"));
        let v_t = ComplexMatrix::from_nalgebra(svd.v_t.as_ref().expect("requested V^T"));
        let s = &svd.singular_values;
        let r = k.min(n);

        let coeffs: Vec<Complex64> = (0..1 << r).map(|l| c64(s[l], 0.0)).collect();
        let mut gates = vec![LocalGate::new(complete_unitary(&[(0, coeffs)], 1 << r), (0..r).collect::<Vec<_>>())?];
        for j in 0..r {
            gates.push(LocalGate::new(cnot(), [j, k + j])?);
        }
        let cols_a: Vec<_> = (0..1 << r).map(|l| (l << (k - r), (0..da).map(|i| u[(i, l)]).collect())).collect();
        let cols_b: Vec<_> = (0..1 << r).map(|l| (l << (n - r), (0..db).map(|j| v_t[(l, j)]).collect())).collect();
        gates.push(LocalGate::new(complete_unitary(&cols_a, da), (0..k).collect::<Vec<_>>())?);
        gates.push(LocalGate::new(complete_unitary(&cols_b, db), (k..k + n).collect::<Vec<_>>())?);
        Self::new(gates, k, n)
    }

    pub fn num_qubits(&self) -> usize {
        self.a_qubits + self.b_qubits
    }

    /// The prepared amplitudes.
    pub fn state(&self) -> Result<Vec<Complex64>> {
        let u = sequence_unitary(&self.gates, self.num_qubits())?;
        Ok((0..u.rows()).map(|r| u[(r, 0)]).collect())
    }
}

/// Unitary whose column `i` is `v` for each `(i, v)`; remaining columns come
/// from Gram-Schmidt on the standard basis. Input columns must be orthonormal.
fn complete_unitary(fixed: &[(usize, Vec<Complex64>)], d: usize) -> ComplexMatrix {
    let mut cols: Vec<Option<Vec<Complex64>>> = vec![None; d];
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for (i, v) in fixed {
        cols[*i] = Some(v.clone());
        basis.push(v.clone());
    }
    let mut e = 0;
    for slot in cols.iter_mut().filter(|c| c.is_none()) {
        loop {
            let mut v = vec![c64(0.0, 0.0); d];
            v[e] = c64(1.0, 0.0);
            e += 1;
            // two passes keep the result orthogonal to machine precision
            for b in basis.iter().chain(&basis) {
                let ov: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= ov * bi;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                let v: Vec<_> = v.iter().map(|z| z / norm).collect();
                basis.push(v.clone());
                *slot = Some(v);
                break;
            }
        }
    }
    ComplexMatrix::from_fn(d, d, |r, c| cols[c].as_ref().expect("filled")[r])
}

/// Teleportation-based dilution. Within her first half-round Alice moves each
/// EPR half from `A[i]` to `C[n+i]`, prepares the target with its A-part on
/// the freed `A` wires (spilling into `A'` when `k > n`) and its B-part on
/// `C[0..n]`, then Bell-rotates each `(C[i], C[n+i])` pair. The pinch that
/// closes her half-round is the Bell measurement; Bob applies `X^{C[n+i]}`
/// and `Z^{C[i]}` to `B[i]`.
///
/// Input `Φ^{⊗n}` with `n = prep.b_qubits`; output is the prepared target.
pub fn teleport_dilution(prep: &StatePrep) -> Result<LoccCircuit> {
    let (k, n) = (prep.a_qubits, prep.b_qubits);
    let regs = Registers {
        n_a: n,
        t_a: k.saturating_sub(n),
        q: 2 * n,
        n_b: n,
        t_b: 0,
    };
    let a_part = |j: usize| if j < n { Wire::a(j) } else { Wire::ap(j - n) };
    let target = |j: usize| if j < k { a_part(j) } else { Wire::c(j - k) };
    let mut b = LoccCircuit::builder(regs);
    for i in 0..n {
        b.alice(Gate::unitary(swap(), [Wire::a(i), Wire::c(n + i)])?);
    }
    for g in &prep.gates {
        b.alice(g.on_wires(target)?);
    }
    for i in 0..n {
        b.alice(Gate::unitary(cnot(), [Wire::c(i), Wire::c(n + i)])?)
            .alice(Gate::unitary(hadamard(), [Wire::c(i)])?)
            .alice(Gate::measure([Wire::c(i), Wire::c(n + i)])?);
    }
    for i in 0..n {
        b.bob(Gate::controlled([Wire::c(n + i)], pauli_x(), [Wire::b(i)])?)
            .bob(Gate::controlled([Wire::c(i)], pauli_z(), [Wire::b(i)])?);
    }
    b.outputs((0..k).map(a_part).collect(), (0..n).map(Wire::b).collect());
    b.build()
}

/// `F Φ + (1−F)/3 (I − Φ)` on one pair.
pub fn isotropic_state(f: f64) -> Result<BipartiteState> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::Argument(format!("fidelity {f} outside [0, 1]")));
    }
    let phi = epr_pairs(1)?;
    let w = (1.0 - f) / 3.0;
    let m = &phi.matrix().scale_real(f - w) + &ComplexMatrix::identity(4).scale_real(w);
    BipartiteState::new(m, 1, 1)
}

fn bbpssw_circuit(flagged: bool) -> Result<LoccCircuit> {
    let regs = Registers {
        n_a: 2,
        t_a: if flagged { 2 } else { 1 },
        q: 2,
        n_b: 2,
        t_b: 1,
    };
    let mut b = LoccCircuit::builder(regs);
    b.alice(Gate::unitary(cnot(), [Wire::a(0), Wire::a(1)])?)
        .alice(Gate::unitary(cnot(), [Wire::a(1), Wire::c(0)])?)
        .alice(Gate::measure([Wire::c(0)])?)
        .bob(Gate::unitary(cnot(), [Wire::b(0), Wire::b(1)])?)
        .bob(Gate::unitary(cnot(), [Wire::b(1), Wire::c(1)])?)
        .bob(Gate::measure([Wire::c(1)])?)
        .bob(Gate::unitary(cnot(), [Wire::c(0), Wire::c(1)])?)
        .next_round();
    // C1 now holds the parity flag; on failure both swap in |0⟩
    if flagged {
        b.alice(Gate::unitary(cnot(), [Wire::c(1), Wire::ap(1)])?);
    }
    b.alice(Gate::controlled([Wire::c(1)], swap(), [Wire::a(0), Wire::ap(0)])?)
        .bob(Gate::controlled([Wire::c(1)], swap(), [Wire::b(0), Wire::bp(0)])?);
    let out_a = if flagged { vec![Wire::a(0), Wire::ap(1)] } else { vec![Wire::a(0)] };
    b.outputs(out_a, vec![Wire::b(0)]);
    b.build()
}

/// One BBPSSW recurrence round on two pairs `(A0,B0)`, `(A1,B1)`: bilateral
/// CNOT, both sides measure the target pair, the parity flag lands in `C1`.
/// Keeps the first pair on agreement and outputs `|00⟩` otherwise.
pub fn bbpssw_round() -> Result<LoccCircuit> {
    bbpssw_circuit(false)
}

/// Variant of [`bbpssw_round`] that also hands Alice a copy of the flag as a
/// second output qubit, so the success branch can be read off.
pub fn bbpssw_flagged() -> Result<LoccCircuit> {
    bbpssw_circuit(true)
}

/// Success probability and normalized success-branch state of one round on `ρ ⊗ ρ`.
pub fn bbpssw_success_branch(pair: &BipartiteState) -> Result<(f64, BipartiteState)> {
    if pair.cut() != (1, 1) {
        return Err(Error::Shape(format!("expected one pair, got cut {:?}", pair.cut())));
    }
    let out = apply(&bbpssw_flagged()?, &pair.tensor(pair)?)?;
    // output order A0, flag, B0; flag = 0 rows are 0, 1, 4, 5
    let keep = [0usize, 1, 4, 5];
    let block = ComplexMatrix::from_fn(4, 4, |r, c| out.matrix()[(keep[r], keep[c])]);
    let p = block.trace().re;
    if p <= 0.0 {
        return Err(Error::Precondition("success branch has zero probability".into()));
    }
    Ok((p, BipartiteState::new(block.scale_real(1.0 / p), 1, 1)?))
}

/// Matrix of the bilateral CNOT on `(A0, A1, B0, B1)`.
#[cfg(test)]
pub(crate) fn bilateral_cnot() -> ComplexMatrix {
    use super::gates::embed_gate;
    &embed_gate(&cnot(), &[0, 1], 4) * &embed_gate(&cnot(), &[2, 3], 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::partial_trace_qubits;
    use crate::random::{haar_unitary, random_density, random_pure, rng_from_seed};
    use crate::states::{fidelity_matrices, pauli_keyed_family, rotated_epr};
    use crate::locc::apply_with_key;

    fn overlap(out: &BipartiteState, psi: &[Complex64]) -> f64 {
        out.state().expectation(psi).unwrap()
    }

    #[test]
    fn unrotate_restores_epr() {
        let mut rng = rng_from_seed(90);
        for m in 1..=2 {
            for _ in 0..10 {
                let u = haar_unitary(1 << m, &mut rng);
                let out = apply(&unrotate_distillation(&u, m).unwrap(), &rotated_epr(&u, m).unwrap()).unwrap();
                assert!(out.matrix().max_abs_diff(epr_pairs(m).unwrap().matrix()) < 1e-9);
            }
        }
        let x = unrotate_distillation(&pauli_x(), 1).unwrap();
        let out = apply(&x, &rotated_epr(&pauli_x(), 1).unwrap()).unwrap();
        assert!((overlap(&out, &crate::states::epr_amplitudes(1)) - 1.0).abs() < 1e-9);
        assert!(unrotate_distillation(&ComplexMatrix::diag(&[1.0, 0.5]), 1).is_err());
        assert!(unrotate_distillation(&ComplexMatrix::identity(8), 3).is_err());
    }

    #[test]
    fn unrotate_by_identity_is_identity_channel() {
        let g = unrotate_distillation(&ComplexMatrix::identity(2), 1).unwrap();
        let rho = BipartiteState::new(random_density(4, &mut rng_from_seed(91)), 1, 1).unwrap();
        assert!(apply(&g, &rho).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn keyed_unrotate_handles_every_key() {
        for kappa in 0..=3 {
            let fam = pauli_keyed_family(kappa);
            let g = keyed_unrotate(kappa).unwrap();
            let m = pauli_key_pairs(kappa);
            let target = epr_pairs(m).unwrap();
            for key in fam.keys(1) {
                let out = apply_with_key(&g, &fam.generate(1, &key).unwrap(), &key).unwrap();
                assert!(out.matrix().max_abs_diff(target.matrix()) < 1e-9, "κ={kappa} key={key}");
            }
        }
    }

    #[test]
    fn keyed_rotate_prepares_every_key() {
        for kappa in 0..=3 {
            let fam = pauli_keyed_family(kappa);
            let g = keyed_rotate(kappa).unwrap();
            let input = epr_pairs(pauli_key_pairs(kappa)).unwrap();
            for key in fam.keys(1) {
                let out = apply_with_key(&g, &input, &key).unwrap();
                assert!(out.matrix().max_abs_diff(fam.generate(1, &key).unwrap().matrix()) < 1e-9);
            }
        }
    }

    #[test]
    fn keyed_identity_fails_off_zero_key() {
        let fam = pauli_keyed_family(2);
        let g = keyed_identity(2).unwrap();
        let phi = crate::states::epr_amplitudes(1);
        for key in fam.keys(1) {
            let out = apply_with_key(&g, &fam.generate(1, &key).unwrap(), &key).unwrap();
            let f = overlap(&out, &phi);
            if key.bits().iter().any(|&b| b) {
                assert!(f < 1e-9, "key {key}");
            } else {
                assert!((f - 1.0).abs() < 1e-9);
            }
        }
        assert_eq!(keyed_identity(2).unwrap().gate_count(), 4);
        assert_eq!(keyed_unrotate(2).unwrap().gate_count(), 4 + 2);
    }

    #[test]
    fn schmidt_prep_reproduces_state() {
        let mut rng = rng_from_seed(92);
        for (k, n) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            for _ in 0..5 {
                let psi = random_pure(1 << (k + n), &mut rng);
                let prep = StatePrep::pure(&psi, k, n).unwrap();
                let got = prep.state().unwrap();
                let ov: Complex64 = psi.iter().zip(&got).map(|(a, b)| a.conj() * b).sum();
                assert!((ov.norm() - 1.0).abs() < 1e-9, "({k}, {n})");
            }
        }
        // degenerate Schmidt spectrum and product states
        for psi in [crate::states::epr_amplitudes(2), {
            let mut v = vec![c64(0.0, 0.0); 4];
            v[0] = c64(1.0, 0.0);
            v
        }] {
            let q = psi.len().trailing_zeros() as usize / 2;
            let got = StatePrep::pure(&psi, q, q).unwrap().state().unwrap();
            let ov: Complex64 = psi.iter().zip(&got).map(|(a, b)| a.conj() * b).sum();
            assert!((ov.norm() - 1.0).abs() < 1e-9);
        }
        assert!(StatePrep::pure(&[c64(1.0, 0.0); 4], 1, 1).is_err());
        assert!(StatePrep::pure(&random_pure(64, &mut rng), 3, 3).is_err());
    }

    #[test]
    fn epr_prep_matches_epr_pairs() {
        for n in 1..=3 {
            let got = StatePrep::epr(n).state().unwrap();
            let want = crate::states::epr_amplitudes(n);
            assert!(got.iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-12));
        }
    }

    #[test]
    fn teleport_prepares_targets() {
        let mut rng = rng_from_seed(93);
        for (k, n) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            for _ in 0..3 {
                let psi = random_pure(1 << (k + n), &mut rng);
                let g = teleport_dilution(&StatePrep::pure(&psi, k, n).unwrap()).unwrap();
                let out = apply(&g, &epr_pairs(n).unwrap()).unwrap();
                assert_eq!(out.cut(), (k, n));
                assert!((overlap(&out, &psi) - 1.0).abs() < 1e-9, "({k}, {n})");
            }
        }
    }

    #[test]
    fn teleport_of_epr_and_product_targets() {
        let g = teleport_dilution(&StatePrep::epr(1)).unwrap();
        let out = apply(&g, &epr_pairs(1).unwrap()).unwrap();
        assert!(out.matrix().max_abs_diff(epr_pairs(1).unwrap().matrix()) < 1e-9);

        let zero = StatePrep::new(vec![], 1, 1).unwrap();
        let out = apply(&teleport_dilution(&zero).unwrap(), &epr_pairs(1).unwrap()).unwrap();
        assert!((out.matrix()[(0, 0)].re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn teleport_gate_count_is_constructive() {
        let prep = StatePrep::epr(1);
        let g = teleport_dilution(&prep).unwrap();
        // prep 2; move, Bell CNOT, H; measure 2 wires; two corrections; q = 2
        assert_eq!(g.gate_count(), 2 + 3 + 2 + 2 + 2);
        let two = teleport_dilution(&StatePrep::epr(2)).unwrap();
        assert_eq!(two.gate_count(), 4 + 2 * (3 + 2 + 2) + 4);
    }

    #[test]
    fn teleport_respects_cap() {
        let g = teleport_dilution(&StatePrep::epr(3)).unwrap();
        assert_eq!(g.registers().total(), 12);
        let out = apply(&g, &epr_pairs(3).unwrap()).unwrap();
        assert!(out.matrix().max_abs_diff(epr_pairs(3).unwrap().matrix()) < 1e-9);
        assert!(matches!(teleport_dilution(&StatePrep::epr(4)), Err(Error::Size(_))));
    }

    /// Dense 4-qubit oracle: bilateral CNOT, project the target pair onto
    /// agreeing outcomes, trace it out; failures contribute `|00⟩⟨00|`.
    fn bbpssw_oracle(pair: &BipartiteState) -> (f64, ComplexMatrix, ComplexMatrix) {
        // reorder ρ⊗ρ = (A0 B0)(A1 B1) into A0 A1 B0 B1
        let joint = crate::linalg::tensor_product(pair.matrix(), pair.matrix()).unwrap();
        let joint = crate::linalg::permute_qubits(&joint, &[0, 2, 1, 3]).unwrap();
        let rho = joint.conjugate_by(&bilateral_cnot()).unwrap();
        let mut success = ComplexMatrix::zeros(4, 4);
        let mut fail_p = 0.0;
        for (a1, b1) in [(0usize, 0usize), (1, 1), (0, 1), (1, 0)] {
            let proj = ComplexMatrix::from_fn(16, 16, |r, c| {
                let ok = r == c && (r >> 2) & 1 == a1 && r & 1 == b1;
                c64(if ok { 1.0 } else { 0.0 }, 0.0)
            });
            let branch = &(&proj * &rho) * &proj;
            let reduced = partial_trace_qubits(&branch, 4, &[0, 2]).unwrap();
            if a1 == b1 {
                success = &success + &reduced;
            } else {
                fail_p += reduced.trace().re;
            }
        }
        let p = success.trace().re;
        let full = &success + &ComplexMatrix::basis_projector(4, 0).scale_real(fail_p);
        (p, success.scale_real(1.0 / p), full)
    }

    #[test]
    fn bbpssw_matches_dense_oracle() {
        let mut rng = rng_from_seed(94);
        let mut inputs = vec![isotropic_state(0.8).unwrap()];
        for _ in 0..3 {
            inputs.push(BipartiteState::new(random_density(4, &mut rng), 1, 1).unwrap());
        }
        let round = bbpssw_round().unwrap();
        for pair in &inputs {
            let (p, cond, full) = bbpssw_oracle(pair);
            let out = apply(&round, &pair.tensor(pair).unwrap()).unwrap();
            assert!(out.matrix().max_abs_diff(&full) < 1e-9);
            let (p_s, branch) = bbpssw_success_branch(pair).unwrap();
            assert!((p - p_s).abs() < 1e-9);
            assert!(branch.matrix().max_abs_diff(&cond) < 1e-9);
        }
    }

    #[test]
    fn bbpssw_improves_isotropic_fidelity() {
        let phi = crate::states::epr_amplitudes(1);
        let (p, branch) = bbpssw_success_branch(&isotropic_state(0.8).unwrap()).unwrap();
        let f = overlap(&branch, &phi);
        assert!((f - 145.0 / 173.0).abs() < 1e-9);
        assert!((p - 0.768_888_888_888_888_9).abs() < 1e-9);
        assert!(f > 0.8);
    }

    #[test]
    fn bbpssw_on_pure_and_product_inputs() {
        let phi = epr_pairs(1).unwrap();
        let (p, branch) = bbpssw_success_branch(&phi).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!((fidelity_matrices(branch.matrix(), phi.matrix()).unwrap() - 1.0).abs() < 1e-9);

        let zero = BipartiteState::basis(&[false], &[false]);
        let out = apply(&bbpssw_round().unwrap(), &zero.tensor(&zero).unwrap()).unwrap();
        assert!(overlap(&out, &crate::states::epr_amplitudes(1)) <= 0.5 + 1e-12);
        assert!(bbpssw_success_branch(&phi.tensor(&phi).unwrap()).is_err());
    }

    #[test]
    fn isotropic_state_is_valid() {
        let s = isotropic_state(0.8).unwrap();
        assert!((overlap(&s, &crate::states::epr_amplitudes(1)) - 0.8).abs() < 1e-12);
        assert!(isotropic_state(1.2).is_err());
    }
}
