//! Exact density-matrix semantics of circuit-represented LOCC channels.

use num_complex::Complex64;

use super::circuit::{Gate, GateKind, LoccCircuit, Reg, Registers, Wire};
use crate::error::{Error, Result};
use crate::linalg::{c64, partial_trace_qubits, scatter_bits, ComplexMatrix, MAX_QUBITS};
use crate::states::{BipartiteState, Key, TRACE_TOL};

/// Density matrix of `n` qubits stored row-major; the simulator's working state.
/// Entries outside `support × support` are exactly zero, so kernels only visit
/// rows and columns in `support` (ancillas in basis states keep it small).
pub(crate) struct Register {
    n: usize,
    rho: Vec<Complex64>,
    support: Vec<usize>,
    in_support: Vec<bool>,
}

impl Register {
    fn new(n: usize, rho: Vec<Complex64>, support: Vec<usize>) -> Self {
        let mut in_support = vec![false; 1 << n];
        for &i in &support {
            in_support[i] = true;
        }
        let mut reg = Self { n, rho, support: Vec::new(), in_support };
        reg.sync_support();
        reg
    }

    #[cfg(test)]
    fn dense(n: usize, rho: Vec<Complex64>) -> Self {
        Self::new(n, rho, (0..1 << n).collect())
    }

    fn sync_support(&mut self) {
        self.support = (0..self.dim()).filter(|&i| self.in_support[i]).collect();
    }

    fn dim(&self) -> usize {
        1 << self.n
    }

    fn bit(&self, position: usize) -> usize {
        1 << (self.n - 1 - position)
    }

    /// `ρ ↦ U ρ U†` with `U` acting on `targets` when all `controls` are 1.
    fn conjugate(&mut self, u: &ComplexMatrix, targets: &[usize], controls: &[usize]) {
        let d = self.dim();
        let k = targets.len();
        let offsets: Vec<usize> = (0..1usize << k).map(|j| scatter_bits(j, targets, self.n)).collect();
        let tmask = offsets.iter().fold(0, |a, &o| a | o);
        let cmask = controls.iter().fold(0, |a, &p| a | self.bit(p));
        let mut bases: Vec<usize> = self
            .support
            .iter()
            .filter(|&&i| i & cmask == cmask)
            .map(|&i| i & !tmask)
            .collect();
        bases.sort_unstable();
        bases.dedup();
        let old_support = self.support.clone();
        for &base in &bases {
            for &o in &offsets {
                self.in_support[base | o] = true;
            }
        }
        self.sync_support();

        let dk = offsets.len();
        let u_entries = u.data();
        let mut buf = vec![Complex64::default(); dk];

        // rows: ρ ← U ρ, nonzero columns are the old support
        for &base in &bases {
            for &col in &old_support {
                for (j, &o) in offsets.iter().enumerate() {
                    buf[j] = self.rho[(base | o) * d + col];
                }
                for (i, &o) in offsets.iter().enumerate() {
                    let row = &u_entries[i * dk..(i + 1) * dk];
                    self.rho[(base | o) * d + col] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
                }
            }
        }
        // columns: ρ ← ρ U†
        for &row in &self.support {
            let line = &mut self.rho[row * d..(row + 1) * d];
            for &base in &bases {
                for (j, &o) in offsets.iter().enumerate() {
                    buf[j] = line[base | o];
                }
                for (i, &o) in offsets.iter().enumerate() {
                    let urow = &u_entries[i * dk..(i + 1) * dk];
                    line[base | o] = urow.iter().zip(&buf).map(|(a, b)| a.conj() * b).sum();
                }
            }
        }
    }

    /// Full computational-basis dephasing of the given qubits.
    pub(crate) fn pinch(&mut self, positions: &[usize]) {
        let mask = positions.iter().fold(0, |a, &p| a | self.bit(p));
        if mask == 0 {
            return;
        }
        let d = self.dim();
        for &r in &self.support {
            for &c in &self.support {
                if (r ^ c) & mask != 0 {
                    self.rho[r * d + c] = Complex64::default();
                }
            }
        }
    }
}

fn positions(regs: &Registers, wires: &[Wire]) -> Vec<usize> {
    wires.iter().map(|&w| regs.position(w)).collect()
}

fn apply_gate(state: &mut Register, regs: &Registers, gate: &Gate) {
    let targets = positions(regs, gate.wires());
    match gate.kind() {
        GateKind::Unitary(u) => state.conjugate(u, &targets, &[]),
        GateKind::Controlled { controls, matrix } => state.conjugate(matrix, &targets, &positions(regs, controls)),
        GateKind::MeasurePinch => state.pinch(&targets),
    }
}

/// Applies the channel to `input` with ancillas in `|0…0⟩`.
pub fn apply(circuit: &LoccCircuit, input: &BipartiteState) -> Result<BipartiteState> {
    apply_with_key(circuit, input, &Key::empty())
}

/// Applies the channel with the first `|k|` qubits of both `A'` and `B'`
/// initialized to `|k⟩`.
pub fn apply_with_key(circuit: &LoccCircuit, input: &BipartiteState, key: &Key) -> Result<BipartiteState> {
    let regs = *circuit.registers();
    if input.cut() != circuit.input_cut() {
        return Err(Error::Shape(format!(
            "circuit expects a {:?} input, got {:?}",
            circuit.input_cut(),
            input.cut()
        )));
    }
    if key.len() > regs.t_a || key.len() > regs.t_b {
        return Err(Error::Shape(format!(
            "key of length {} does not fit the ancilla registers ({}, {})",
            key.len(),
            regs.t_a,
            regs.t_b
        )));
    }
    let n = regs.total();
    if n > MAX_QUBITS {
        return Err(Error::Size(format!("simulation needs {n} qubits, cap is {MAX_QUBITS}")));
    }

    let mut state = embed(&regs, input.matrix(), key);
    let c_wires: Vec<usize> = (0..regs.q).map(|i| regs.position(Wire::c(i))).collect();
    for round in circuit.rounds() {
        for g in &round.alice {
            apply_gate(&mut state, &regs, g);
        }
        state.pinch(&c_wires);
        for g in &round.bob {
            apply_gate(&mut state, &regs, g);
        }
        state.pinch(&c_wires);
    }

    let keep: Vec<usize> = positions(&regs, circuit.outputs_a())
        .into_iter()
        .chain(positions(&regs, circuit.outputs_b()))
        .collect();
    let full = ComplexMatrix::new(state.dim(), state.dim(), state.rho)?;
    let out = partial_trace_qubits(&full, n, &keep)?;
    let trace = out.trace();
    if (trace - c64(1.0, 0.0)).norm() > TRACE_TOL {
        return Err(Error::InvalidState(format!("channel output has trace {}", trace.re)));
    }
    let (m_a, m_b) = circuit.output_cut();
    Ok(BipartiteState::from_computed(out, m_a, m_b))
}

/// Places the input on `A`, `B` and the ancillas in their initial basis state.
fn embed(regs: &Registers, input: &ComplexMatrix, key: &Key) -> Register {
    let n = regs.total();
    let d = 1usize << n;
    let input_positions: Vec<usize> = (0..regs.n_a)
        .map(|i| regs.position(Wire::a(i)))
        .chain((0..regs.n_b).map(|i| regs.position(Wire::b(i))))
        .collect();
    let mut init = 0usize;
    for (i, &bit) in key.bits().iter().enumerate() {
        if bit {
            for reg in [Reg::Ap, Reg::Bp] {
                init |= 1 << (n - 1 - regs.position(Wire::new(reg, i)));
            }
        }
    }
    let idx: Vec<usize> = (0..input.rows())
        .map(|v| scatter_bits(v, &input_positions, n) | init)
        .collect();
    let mut rho = vec![Complex64::default(); d * d];
    for (r, &fr) in idx.iter().enumerate() {
        for (c, &fc) in idx.iter().enumerate() {
            rho[fr * d + fc] = input[(r, c)];
        }
    }
    Register::new(n, rho, idx)
}
