//! Gate tables and party-local gate sequences.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;

use super::circuit::{Gate, LoccCircuit, Registers, Wire};
use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix};
use crate::random::haar_unitary;

pub use crate::states::{pauli_x, pauli_z};

pub fn hadamard() -> ComplexMatrix {
    ComplexMatrix::from_real(&[&[FRAC_1_SQRT_2, FRAC_1_SQRT_2], &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]]).expect("static gate")
}

/// Control on the first wire, target on the second.
pub fn cnot() -> ComplexMatrix {
    ComplexMatrix::from_real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ])
    .expect("static gate")
}

pub fn swap() -> ComplexMatrix {
    ComplexMatrix::from_real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
    .expect("static gate")
}

/// Gathers the bits of an `m`-qubit index at `qubits` (first qubit most significant).
fn gather_bits(index: usize, qubits: &[usize], m: usize) -> usize {
    qubits.iter().fold(0, |acc, &q| (acc << 1) | ((index >> (m - 1 - q)) & 1))
}

/// `u` acting on `qubits` of an `m`-qubit system, as a `2^m × 2^m` matrix.
pub fn embed_gate(u: &ComplexMatrix, qubits: &[usize], m: usize) -> ComplexMatrix {
    let mask = qubits.iter().fold(0usize, |a, &q| a | 1 << (m - 1 - q));
    ComplexMatrix::from_fn(1 << m, 1 << m, |r, c| {
        if r & !mask != c & !mask {
            c64(0.0, 0.0)
        } else {
            u[(gather_bits(r, qubits, m), gather_bits(c, qubits, m))]
        }
    })
}

/// A unitary on at most two qubits of one party's register, indexed relative to that register.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGate {
    pub matrix: ComplexMatrix,
    pub qubits: Vec<usize>,
}

impl LocalGate {
    pub fn new(matrix: ComplexMatrix, qubits: impl Into<Vec<usize>>) -> Result<Self> {
        let qubits = qubits.into();
        // reuse the circuit gate validation for the payload
        Gate::unitary(matrix.clone(), qubits.iter().map(|&q| Wire::a(q)).collect::<Vec<_>>())?;
        Ok(Self { matrix, qubits })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            qubits: self.qubits.clone(),
        }
    }

    pub(crate) fn on_wires(&self, wire: impl Fn(usize) -> Wire) -> Result<Gate> {
        Gate::unitary(self.matrix.clone(), self.qubits.iter().map(|&q| wire(q)).collect::<Vec<_>>())
    }

    fn max_qubit(&self) -> usize {
        self.qubits.iter().copied().max().unwrap_or(0)
    }
}

/// Product of a gate sequence on `m` qubits (first gate applied first).
pub fn sequence_unitary(gates: &[LocalGate], m: usize) -> Result<ComplexMatrix> {
    let mut u = ComplexMatrix::identity(1 << m);
    for g in gates {
        if g.max_qubit() >= m {
            return Err(Error::Shape(format!("gate on qubit {} of a {m}-qubit register", g.max_qubit())));
        }
        u = embed_gate(&g.matrix, &g.qubits, m).matmul(&u)?;
    }
    Ok(u)
}

/// A layer of local unitaries `u_A ⊗ u_B` given by gate decompositions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalLayer {
    pub alice: Vec<LocalGate>,
    pub bob: Vec<LocalGate>,
}

impl LocalLayer {
    pub fn new(alice: Vec<LocalGate>, bob: Vec<LocalGate>) -> Self {
        Self { alice, bob }
    }

    /// Number of gates in the decompositions.
    pub fn len(&self) -> usize {
        self.alice.len() + self.bob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(u_A, u_B)` on `m_a` and `m_b` qubits.
    pub fn unitaries(&self, m_a: usize, m_b: usize) -> Result<(ComplexMatrix, ComplexMatrix)> {
        Ok((sequence_unitary(&self.alice, m_a)?, sequence_unitary(&self.bob, m_b)?))
    }

    /// Decomposition of `(u_A ⊗ u_B)†`.
    pub fn inverse(&self) -> Self {
        Self {
            alice: self.alice.iter().rev().map(LocalGate::adjoint).collect(),
            bob: self.bob.iter().rev().map(LocalGate::adjoint).collect(),
        }
    }

    /// Haar single-qubit gates on every qubit, plus one Haar two-qubit gate per
    /// party with at least two qubits when `entangling` is set.
    pub fn random(m_a: usize, m_b: usize, entangling: bool, rng: &mut impl Rng) -> Self {
        let mut side = |m: usize| {
            let mut gates: Vec<LocalGate> = (0..m)
                .map(|q| LocalGate {
                    matrix: haar_unitary(2, rng),
                    qubits: vec![q],
                })
                .collect();
            if entangling && m >= 2 {
                gates.push(LocalGate {
                    matrix: haar_unitary(4, rng),
                    qubits: vec![0, 1],
                });
            }
            gates
        };
        let alice = side(m_a);
        let bob = side(m_b);
        Self { alice, bob }
    }

    /// The layer as a one-round channel on an `(n_a, n_b)` input.
    pub fn to_circuit(&self, n_a: usize, n_b: usize) -> Result<LoccCircuit> {
        let regs = Registers {
            n_a,
            n_b,
            ..Registers::default()
        };
        let mut b = LoccCircuit::builder(regs);
        for g in &self.alice {
            b.alice(g.on_wires(Wire::a)?);
        }
        for g in &self.bob {
            b.bob(g.on_wires(Wire::b)?);
        }
        b.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tensor_product;
    use crate::random::rng_from_seed;

    #[test]
    fn static_gates_are_unitary() {
        for g in [hadamard(), cnot(), swap(), pauli_x(), pauli_z()] {
            assert!(g.is_unitary(1e-12));
        }
    }

    #[test]
    fn embedding_matches_kronecker() {
        let mut rng = rng_from_seed(60);
        let u = haar_unitary(2, &mut rng);
        let e = embed_gate(&u, &[1], 3);
        let k = tensor_product(&tensor_product(&ComplexMatrix::identity(2), &u).unwrap(), &ComplexMatrix::identity(2)).unwrap();
        assert!(e.max_abs_diff(&k) < 1e-15);
        // reversed wires of a CNOT: control on qubit 1, target on qubit 0
        let rev = embed_gate(&cnot(), &[1, 0], 2);
        let expected = &(&swap() * &cnot()) * &swap();
        assert!(rev.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn inverse_layer_undoes_layer() {
        let mut rng = rng_from_seed(61);
        let layer = LocalLayer::random(2, 1, true, &mut rng);
        assert_eq!(layer.len(), 2 + 1 + 1);
        let (ua, ub) = layer.unitaries(2, 1).unwrap();
        let (va, vb) = layer.inverse().unitaries(2, 1).unwrap();
        assert!((&va * &ua).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        assert!((&vb * &ub).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn local_gate_validation() {
        assert!(LocalGate::new(hadamard(), [0, 1]).is_err());
        assert!(LocalGate::new(ComplexMatrix::diag(&[1.0, 0.0]), [0]).is_err());
        assert!(LocalGate::new(cnot(), [1, 0]).is_ok());
        assert!(sequence_unitary(&[LocalGate::new(hadamard(), [2]).unwrap()], 2).is_err());
    }
}
