//! Circuit-represented LOCC channels: registers `A, A', C, B, B'`, rounds of
//! Alice and Bob gates with `C` pinched after each half-round.

mod circuit;
pub mod combinators;
pub mod family;
pub mod gates;
pub mod protocols;
mod sim;

pub use circuit::{
    CircuitBuilder, CircuitJson, Gate, GateJson, GateKind, LoccCircuit, Reg, Registers, RegistersJson, Round,
    RoundJson, Wire, MAX_GATE_QUBITS,
};
pub use combinators::{compose, conjugate_by_local_unitary, tensor};
pub use family::{
    is_efficient, is_efficient_keyed, ChannelFamily, EfficiencyReport, GateBudget, KeyedChannelFamily, Violation,
};
pub use gates::{LocalGate, LocalLayer};
pub use sim::{apply, apply_with_key};
