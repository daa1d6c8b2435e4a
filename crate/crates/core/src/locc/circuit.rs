use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, MAX_QUBITS};

/// Largest number of target wires a single unitary payload may act on.
pub const MAX_GATE_QUBITS: usize = 2;
const UNITARY_TOL: f64 = 1e-9;

/// The five registers of a circuit-represented LOCC channel.
///
/// Alice owns `A` (input) and `A'` (ancilla), Bob owns `B` and `B'`, and `C`
/// is the shared classical register both parties may act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reg {
    A,
    Ap,
    C,
    B,
    Bp,
}

impl Reg {
    fn tag(self) -> &'static str {
        match self {
            Reg::A => "A",
            Reg::Ap => "Ap",
            Reg::C => "C",
            Reg::B => "B",
            Reg::Bp => "Bp",
        }
    }

    fn alice_may_touch(self) -> bool {
        matches!(self, Reg::A | Reg::Ap | Reg::C)
    }

    fn bob_may_touch(self) -> bool {
        matches!(self, Reg::B | Reg::Bp | Reg::C)
    }
}

/// One qubit of one register. Serialized as `"<reg>:<index>"`, e.g. `"Ap:1"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Wire {
    pub reg: Reg,
    pub index: usize,
}

impl Wire {
    pub const fn new(reg: Reg, index: usize) -> Self {
        Self { reg, index }
    }

    pub const fn a(i: usize) -> Self {
        Self::new(Reg::A, i)
    }

    pub const fn ap(i: usize) -> Self {
        Self::new(Reg::Ap, i)
    }

    pub const fn c(i: usize) -> Self {
        Self::new(Reg::C, i)
    }

    pub const fn b(i: usize) -> Self {
        Self::new(Reg::B, i)
    }

    pub const fn bp(i: usize) -> Self {
        Self::new(Reg::Bp, i)
    }
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.reg.tag(), self.index)
    }
}

impl From<Wire> for String {
    fn from(w: Wire) -> String {
        w.to_string()
    }
}

impl TryFrom<String> for Wire {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        let (tag, idx) = s
            .split_once(':')
            .ok_or_else(|| Error::Argument(format!("malformed wire `{s}`")))?;
        let reg = match tag {
            "A" => Reg::A,
            "Ap" => Reg::Ap,
            "C" => Reg::C,
            "B" => Reg::B,
            "Bp" => Reg::Bp,
            _ => return Err(Error::Argument(format!("unknown register in wire `{s}`"))),
        };
        let index = idx
            .parse()
            .map_err(|_| Error::Argument(format!("malformed wire index in `{s}`")))?;
        Ok(Wire { reg, index })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    /// Unitary on the target wires.
    Unitary(ComplexMatrix),
    /// Unitary on the targets, applied when every control wire reads 1.
    Controlled { controls: Vec<Wire>, matrix: ComplexMatrix },
    /// Full computational-basis dephasing of the listed `C` wires.
    MeasurePinch,
}

/// A gate together with its target wires. The first target is the most
/// significant qubit of the payload matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    wires: Vec<Wire>,
}

impl Gate {
    pub fn unitary(matrix: ComplexMatrix, wires: impl Into<Vec<Wire>>) -> Result<Self> {
        let gate = Self {
            kind: GateKind::Unitary(matrix),
            wires: wires.into(),
        };
        gate.validate_payload()?;
        Ok(gate)
    }

    pub fn controlled(controls: impl Into<Vec<Wire>>, matrix: ComplexMatrix, wires: impl Into<Vec<Wire>>) -> Result<Self> {
        let controls = controls.into();
        if controls.is_empty() {
            return Err(Error::Argument("controlled gate needs at least one control".into()));
        }
        let gate = Self {
            kind: GateKind::Controlled { controls, matrix },
            wires: wires.into(),
        };
        gate.validate_payload()?;
        Ok(gate)
    }

    pub fn measure(wires: impl Into<Vec<Wire>>) -> Result<Self> {
        let wires = wires.into();
        if wires.is_empty() || wires.iter().any(|w| w.reg != Reg::C) {
            return Err(Error::Argument("measure-pinch acts on a nonempty set of C wires".into()));
        }
        let gate = Self {
            kind: GateKind::MeasurePinch,
            wires,
        };
        gate.check_distinct()?;
        Ok(gate)
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn controls(&self) -> &[Wire] {
        match &self.kind {
            GateKind::Controlled { controls, .. } => controls,
            _ => &[],
        }
    }

    pub fn matrix(&self) -> Option<&ComplexMatrix> {
        match &self.kind {
            GateKind::Unitary(m) | GateKind::Controlled { matrix: m, .. } => Some(m),
            GateKind::MeasurePinch => None,
        }
    }

    /// Every wire the gate reads or writes.
    pub fn all_wires(&self) -> impl Iterator<Item = &Wire> {
        self.wires.iter().chain(self.controls())
    }

    /// Contribution to the circuit size: one per unitary, one per pinched wire.
    pub fn cost(&self) -> usize {
        match self.kind {
            GateKind::MeasurePinch => self.wires.len(),
            _ => 1,
        }
    }

    /// Same gate with every wire passed through `f`.
    pub(crate) fn remap(&self, f: impl Fn(Wire) -> Wire) -> Self {
        let wires = self.wires.iter().map(|&w| f(w)).collect();
        let kind = match &self.kind {
            GateKind::Controlled { controls, matrix } => GateKind::Controlled {
                controls: controls.iter().map(|&w| f(w)).collect(),
                matrix: matrix.clone(),
            },
            other => other.clone(),
        };
        Self { kind, wires }
    }

    fn check_distinct(&self) -> Result<()> {
        let all: Vec<&Wire> = self.all_wires().collect();
        for (i, w) in all.iter().enumerate() {
            if all[..i].contains(w) {
                return Err(Error::Argument(format!("wire {w} used twice in one gate")));
            }
        }
        Ok(())
    }

    fn validate_payload(&self) -> Result<()> {
        let k = self.wires.len();
        if k == 0 || k > MAX_GATE_QUBITS {
            return Err(Error::Argument(format!(
                "unitary payloads act on 1..={MAX_GATE_QUBITS} wires, got {k}"
            )));
        }
        let m = self.matrix().expect("payload gate");
        if m.rows() != 1 << k || !m.is_square() {
            return Err(Error::Shape(format!("{k}-wire gate needs a {0}x{0} matrix", 1 << k)));
        }
        if !m.is_unitary(UNITARY_TOL) {
            return Err(Error::NotUnitary("gate payload is not unitary within 1e-9".into()));
        }
        self.check_distinct()
    }
}

/// Register sizes `(n_A, t_A, q, n_B, t_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Registers {
    #[serde(rename = "nA")]
    pub n_a: usize,
    #[serde(rename = "tA")]
    pub t_a: usize,
    pub q: usize,
    #[serde(rename = "nB")]
    pub n_b: usize,
    #[serde(rename = "tB")]
    pub t_b: usize,
}

impl Registers {
    pub fn total(&self) -> usize {
        self.n_a + self.t_a + self.q + self.n_b + self.t_b
    }

    pub fn size(&self, reg: Reg) -> usize {
        match reg {
            Reg::A => self.n_a,
            Reg::Ap => self.t_a,
            Reg::C => self.q,
            Reg::B => self.n_b,
            Reg::Bp => self.t_b,
        }
    }

    /// Position of a wire in the simulation order `A, A', C, B, B'`.
    pub fn position(&self, w: Wire) -> usize {
        let offset = match w.reg {
            Reg::A => 0,
            Reg::Ap => self.n_a,
            Reg::C => self.n_a + self.t_a,
            Reg::B => self.n_a + self.t_a + self.q,
            Reg::Bp => self.n_a + self.t_a + self.q + self.n_b,
        };
        offset + w.index
    }

    fn contains(&self, w: Wire) -> bool {
        w.index < self.size(w.reg)
    }

    /// First `m` wires of `(A, A')`.
    pub fn default_outputs_a(&self, m: usize) -> Vec<Wire> {
        (0..self.n_a).map(Wire::a).chain((0..self.t_a).map(Wire::ap)).take(m).collect()
    }

    /// First `m` wires of `(B, B')`.
    pub fn default_outputs_b(&self, m: usize) -> Vec<Wire> {
        (0..self.n_b).map(Wire::b).chain((0..self.t_b).map(Wire::bp)).take(m).collect()
    }
}

/// One round: Alice's gates, a pinch of `C`, Bob's gates, a pinch of `C`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Round {
    pub alice: Vec<Gate>,
    pub bob: Vec<Gate>,
}

/// Circuit representation of an LOCC channel.
///
/// The input occupies `A` and `B`; `A'`, `B'` and `C` start in `|0…0⟩` (or a
/// key, see [`crate::locc::apply_with_key`]). The output keeps the wires in
/// `out_a` followed by `out_b` and traces out everything else.
#[derive(Debug, Clone, PartialEq)]
pub struct LoccCircuit {
    regs: Registers,
    rounds: Vec<Round>,
    out_a: Vec<Wire>,
    out_b: Vec<Wire>,
}

impl LoccCircuit {
    pub fn new(regs: Registers, rounds: Vec<Round>, out_a: Vec<Wire>, out_b: Vec<Wire>) -> Result<Self> {
        let c = Self { regs, rounds, out_a, out_b };
        c.validate()?;
        Ok(c)
    }

    pub fn builder(regs: Registers) -> CircuitBuilder {
        CircuitBuilder::new(regs)
    }

    /// Identity channel on an `(n_a, n_b)` input: one empty round.
    pub fn identity(n_a: usize, n_b: usize) -> Self {
        let regs = Registers {
            n_a,
            n_b,
            ..Registers::default()
        };
        Self::builder(regs).build().expect("identity circuit is valid")
    }

    fn validate(&self) -> Result<()> {
        if self.regs.total() > MAX_QUBITS {
            return Err(Error::Size(format!(
                "circuit spans {} qubits, cap is {MAX_QUBITS}",
                self.regs.total()
            )));
        }
        for (r, round) in self.rounds.iter().enumerate() {
            for (party, gates, allowed) in [
                ("Alice", &round.alice, Reg::alice_may_touch as fn(Reg) -> bool),
                ("Bob", &round.bob, Reg::bob_may_touch as fn(Reg) -> bool),
            ] {
                for g in gates {
                    for &w in g.all_wires() {
                        if !self.regs.contains(w) {
                            return Err(Error::Argument(format!("round {r}: wire {w} out of range")));
                        }
                        if !allowed(w.reg) {
                            return Err(Error::Argument(format!("round {r}: {party} may not act on {w}")));
                        }
                    }
                }
            }
        }
        let check_outputs = |outs: &[Wire], regs: [Reg; 2], side: &str| -> Result<()> {
            for (i, &w) in outs.iter().enumerate() {
                if !regs.contains(&w.reg) || !self.regs.contains(w) {
                    return Err(Error::Argument(format!("{side} output wire {w} is not a valid {side} wire")));
                }
                if outs[..i].contains(&w) {
                    return Err(Error::Argument(format!("{side} output wire {w} listed twice")));
                }
            }
            Ok(())
        };
        check_outputs(&self.out_a, [Reg::A, Reg::Ap], "Alice")?;
        check_outputs(&self.out_b, [Reg::B, Reg::Bp], "Bob")?;
        Ok(())
    }

    pub fn registers(&self) -> &Registers {
        &self.regs
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn outputs_a(&self) -> &[Wire] {
        &self.out_a
    }

    pub fn outputs_b(&self) -> &[Wire] {
        &self.out_b
    }

    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn input_cut(&self) -> (usize, usize) {
        (self.regs.n_a, self.regs.n_b)
    }

    pub fn output_cut(&self) -> (usize, usize) {
        (self.out_a.len(), self.out_b.len())
    }

    pub fn num_gates(&self) -> usize {
        self.rounds.iter().map(|r| r.alice.len() + r.bob.len()).sum()
    }

    /// Circuit size: one unit per unitary gate, per pinched wire in each
    /// measure-pinch gate, and per ancilla qubit in `A'`, `B'` and `C`.
    pub fn gate_count(&self) -> usize {
        let gates: usize = self
            .rounds
            .iter()
            .flat_map(|r| r.alice.iter().chain(&r.bob))
            .map(Gate::cost)
            .sum();
        gates + self.regs.t_a + self.regs.t_b + self.regs.q
    }

    fn uses_default_outputs(&self) -> (bool, bool) {
        (
            self.out_a == self.regs.default_outputs_a(self.out_a.len()),
            self.out_b == self.regs.default_outputs_b(self.out_b.len()),
        )
    }

    pub fn to_json(&self) -> CircuitJson {
        let (default_a, default_b) = self.uses_default_outputs();
        CircuitJson {
            registers: RegistersJson {
                regs: self.regs,
                m_a: self.out_a.len(),
                m_b: self.out_b.len(),
            },
            rounds: self
                .rounds
                .iter()
                .map(|r| RoundJson {
                    alice: r.alice.iter().map(GateJson::from).collect(),
                    bob: r.bob.iter().map(GateJson::from).collect(),
                })
                .collect(),
            out_a: (!default_a).then(|| self.out_a.clone()),
            out_b: (!default_b).then(|| self.out_b.clone()),
        }
    }

    pub fn from_json(json: &CircuitJson) -> Result<Self> {
        let regs = json.registers.regs;
        let rounds = json
            .rounds
            .iter()
            .map(|r| {
                Ok(Round {
                    alice: r.alice.iter().map(Gate::try_from).collect::<Result<_>>()?,
                    bob: r.bob.iter().map(Gate::try_from).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let out_a = json
            .out_a
            .clone()
            .unwrap_or_else(|| regs.default_outputs_a(json.registers.m_a));
        let out_b = json
            .out_b
            .clone()
            .unwrap_or_else(|| regs.default_outputs_b(json.registers.m_b));
        if out_a.len() != json.registers.m_a || out_b.len() != json.registers.m_b {
            return Err(Error::Shape("output wire lists disagree with mA/mB".into()));
        }
        if json.registers.m_a > regs.n_a + regs.t_a || json.registers.m_b > regs.n_b + regs.t_b {
            return Err(Error::Shape("output sizes exceed the available wires".into()));
        }
        Self::new(regs, rounds, out_a, out_b)
    }
}

/// Incremental construction of a [`LoccCircuit`]; starts with one empty round.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    regs: Registers,
    rounds: Vec<Round>,
    out_a: Option<Vec<Wire>>,
    out_b: Option<Vec<Wire>>,
}

impl CircuitBuilder {
    pub fn new(regs: Registers) -> Self {
        Self {
            regs,
            rounds: vec![Round::default()],
            out_a: None,
            out_b: None,
        }
    }

    pub fn alice(&mut self, gate: Gate) -> &mut Self {
        self.rounds.last_mut().expect("at least one round").alice.push(gate);
        self
    }

    pub fn bob(&mut self, gate: Gate) -> &mut Self {
        self.rounds.last_mut().expect("at least one round").bob.push(gate);
        self
    }

    pub fn next_round(&mut self) -> &mut Self {
        self.rounds.push(Round::default());
        self
    }

    /// Keep the first `m_a` wires of `(A, A')` and the first `m_b` of `(B, B')`.
    pub fn output_sizes(&mut self, m_a: usize, m_b: usize) -> &mut Self {
        self.out_a = Some(self.regs.default_outputs_a(m_a));
        self.out_b = Some(self.regs.default_outputs_b(m_b));
        self
    }

    pub fn outputs(&mut self, out_a: Vec<Wire>, out_b: Vec<Wire>) -> &mut Self {
        self.out_a = Some(out_a);
        self.out_b = Some(out_b);
        self
    }

    /// Defaults to outputs of the same size as the inputs.
    pub fn build(&self) -> Result<LoccCircuit> {
        let out_a = self.out_a.clone().unwrap_or_else(|| self.regs.default_outputs_a(self.regs.n_a));
        let out_b = self.out_b.clone().unwrap_or_else(|| self.regs.default_outputs_b(self.regs.n_b));
        LoccCircuit::new(self.regs, self.rounds.clone(), out_a, out_b)
    }
}

/// Wire format of a circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitJson {
    pub registers: RegistersJson,
    pub rounds: Vec<RoundJson>,
    #[serde(rename = "outA", default, skip_serializing_if = "Option::is_none")]
    pub out_a: Option<Vec<Wire>>,
    #[serde(rename = "outB", default, skip_serializing_if = "Option::is_none")]
    pub out_b: Option<Vec<Wire>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistersJson {
    #[serde(flatten)]
    pub regs: Registers,
    #[serde(rename = "mA")]
    pub m_a: usize,
    #[serde(rename = "mB")]
    pub m_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundJson {
    pub alice: Vec<GateJson>,
    pub bob: Vec<GateJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateJson {
    pub kind: String,
    pub wires: Vec<Wire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<Vec<Wire>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

impl From<&Gate> for GateJson {
    fn from(g: &Gate) -> Self {
        let (kind, controls) = match &g.kind {
            GateKind::Unitary(_) => ("unitary", None),
            GateKind::Controlled { controls, .. } => ("controlled", Some(controls.clone())),
            GateKind::MeasurePinch => ("measure", None),
        };
        Self {
            kind: kind.into(),
            wires: g.wires.clone(),
            controls,
            re: g.matrix().map(ComplexMatrix::re),
            im: g.matrix().map(ComplexMatrix::im),
        }
    }
}

impl TryFrom<&GateJson> for Gate {
    type Error = Error;

    fn try_from(j: &GateJson) -> Result<Self> {
        let payload = || -> Result<ComplexMatrix> {
            let re = j.re.as_deref().ok_or_else(|| Error::Argument("gate payload missing `re`".into()))?;
            let im = j.im.as_deref().ok_or_else(|| Error::Argument("gate payload missing `im`".into()))?;
            let d = 1usize << j.wires.len();
            ComplexMatrix::from_parts(d, d, re, im)
        };
        match j.kind.as_str() {
            "unitary" => Gate::unitary(payload()?, j.wires.clone()),
            "controlled" => Gate::controlled(
                j.controls.clone().unwrap_or_default(),
                payload()?,
                j.wires.clone(),
            ),
            "measure" => Gate::measure(j.wires.clone()),
            other => Err(Error::Argument(format!("unknown gate kind `{other}`"))),
        }
    }
}
