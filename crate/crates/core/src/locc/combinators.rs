//! Channel combinators. Each one relabels wires only, so gate counts add exactly.

use super::circuit::{LoccCircuit, Reg, Registers, Round, Wire};
use super::gates::LocalLayer;
use crate::error::{Error, Result};

/// Offsets added to each register's wire indices when embedding a circuit.
#[derive(Clone, Copy, Default)]
struct Shift {
    a: usize,
    ap: usize,
    c: usize,
    b: usize,
    bp: usize,
}

impl Shift {
    fn apply(self, w: Wire) -> Wire {
        let add = match w.reg {
            Reg::A => self.a,
            Reg::Ap => self.ap,
            Reg::C => self.c,
            Reg::B => self.b,
            Reg::Bp => self.bp,
        };
        Wire::new(w.reg, w.index + add)
    }
}

fn remap_round(round: &Round, f: impl Fn(Wire) -> Wire + Copy) -> Round {
    Round {
        alice: round.alice.iter().map(|g| g.remap(f)).collect(),
        bob: round.bob.iter().map(|g| g.remap(f)).collect(),
    }
}

/// `g1 ⊗ g2`: `g1` on the first block of every register, `g2` on the second.
/// The input is `ρ₁ ⊗ ρ₂` with Alice's qubits `A₁A₂` before Bob's `B₁B₂`
/// (see [`crate::states::BipartiteState::tensor`]); outputs are grouped the same way.
pub fn tensor(g1: &LoccCircuit, g2: &LoccCircuit) -> Result<LoccCircuit> {
    let r1 = g1.registers();
    let r2 = g2.registers();
    let regs = Registers {
        n_a: r1.n_a + r2.n_a,
        t_a: r1.t_a + r2.t_a,
        q: r1.q + r2.q,
        n_b: r1.n_b + r2.n_b,
        t_b: r1.t_b + r2.t_b,
    };
    let shift = Shift {
        a: r1.n_a,
        ap: r1.t_a,
        c: r1.q,
        b: r1.n_b,
        bp: r1.t_b,
    };
    let second = |w| shift.apply(w);
    let rounds = (0..g1.num_rounds().max(g2.num_rounds()))
        .map(|i| {
            let mut round = g1.rounds().get(i).cloned().unwrap_or_default();
            if let Some(r) = g2.rounds().get(i) {
                let r = remap_round(r, second);
                round.alice.extend(r.alice);
                round.bob.extend(r.bob);
            }
            round
        })
        .collect();
    let out_a = g1.outputs_a().iter().copied().chain(g2.outputs_a().iter().map(|&w| second(w))).collect();
    let out_b = g1.outputs_b().iter().copied().chain(g2.outputs_b().iter().map(|&w| second(w))).collect();
    LoccCircuit::new(regs, rounds, out_a, out_b)
}

/// `second ∘ first`: `first`'s output wires become `second`'s input; `second`
/// gets fresh ancilla and classical wires after `first`'s.
pub fn compose(second: &LoccCircuit, first: &LoccCircuit) -> Result<LoccCircuit> {
    if second.input_cut() != first.output_cut() {
        return Err(Error::Shape(format!(
            "cannot feed a {:?} output into a {:?} input",
            first.output_cut(),
            second.input_cut()
        )));
    }
    let r1 = first.registers();
    let r2 = second.registers();
    let regs = Registers {
        n_a: r1.n_a,
        t_a: r1.t_a + r2.t_a,
        q: r1.q + r2.q,
        n_b: r1.n_b,
        t_b: r1.t_b + r2.t_b,
    };
    let out_a1 = first.outputs_a().to_vec();
    let out_b1 = first.outputs_b().to_vec();
    let (ta1, q1, tb1) = (r1.t_a, r1.q, r1.t_b);
    let map = move |w: Wire| match w.reg {
        Reg::A => out_a1[w.index],
        Reg::Ap => Wire::ap(ta1 + w.index),
        Reg::C => Wire::c(q1 + w.index),
        Reg::B => out_b1[w.index],
        Reg::Bp => Wire::bp(tb1 + w.index),
    };
    let mut rounds = first.rounds().to_vec();
    rounds.extend(second.rounds().iter().map(|r| remap_round(r, &map)));
    let out_a = second.outputs_a().iter().map(|&w| map(w)).collect();
    let out_b = second.outputs_b().iter().map(|&w| map(w)).collect();
    LoccCircuit::new(regs, rounds, out_a, out_b)
}

/// Appends a round applying the layer's local unitaries to `g`'s outputs, so
/// the result realizes `(u_A ⊗ u_B) g(·) (u_A ⊗ u_B)†`.
pub fn conjugate_by_local_unitary(g: &LoccCircuit, layer: &LocalLayer) -> Result<LoccCircuit> {
    let (m_a, m_b) = g.output_cut();
    // validates qubit ranges and payloads
    layer.unitaries(m_a, m_b)?;
    let out_a = g.outputs_a();
    let out_b = g.outputs_b();
    let mut round = Round::default();
    for lg in &layer.alice {
        round.alice.push(lg.on_wires(|q| out_a[q])?);
    }
    for lg in &layer.bob {
        round.bob.push(lg.on_wires(|q| out_b[q])?);
    }
    let mut rounds = g.rounds().to_vec();
    rounds.push(round);
    LoccCircuit::new(*g.registers(), rounds, out_a.to_vec(), out_b.to_vec())
}
