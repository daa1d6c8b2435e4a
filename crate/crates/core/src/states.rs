//! Density matrices, bipartite states and the state families certificates are stated over.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, eig_hermitian, eigvals_hermitian, partial_trace, permute_qubits, tensor_product, trace_norm_hermitian,
    ComplexMatrix, RegisterLayout, EIG_CLIP, HERMITIAN_TOL,
};
use crate::poly::Polynomial;

/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-9;
/// Largest number of EPR pairs [`epr_pairs`] will build.
pub const MAX_EPR_PAIRS: usize = 7;
/// A state whose largest eigenvalue is within this of its trace is treated as pure by [`fidelity`].
const PURE_TOL: f64 = 1e-12;

/// Unit-trace positive semidefinite matrix on a register layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    layout: RegisterLayout,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, layout: RegisterLayout) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != layout.dim() {
            return Err(Error::Shape(format!(
                "layout has {} qubits but matrix is {}x{}",
                layout.total_qubits(),
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::InvalidState("density matrix is not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr - c64(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {} differs from 1", tr.re)));
        }
        let min = eigvals_hermitian(&matrix)?[0];
        if min < -EIG_CLIP {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix, layout })
    }

    /// Wraps a matrix produced by a trace-preserving computation; only the
    /// Hermitian part is kept.
    pub(crate) fn from_computed(matrix: ComplexMatrix, layout: RegisterLayout) -> Self {
        debug_assert_eq!(matrix.rows(), layout.dim());
        let matrix = crate::random::hermitize(&matrix);
        Self { matrix, layout }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            matrix: ComplexMatrix::outer(&psi.amplitudes),
            layout: psi.layout.clone(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.total_qubits()
    }

    pub fn reduce(&self, keep: &[&str]) -> Result<Self> {
        let m = partial_trace(&self.matrix, &self.layout, keep)?;
        Ok(Self::from_computed(m, self.layout.restrict(keep)?))
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> Result<f64> {
        expectation(&self.matrix, psi)
    }

    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        Ok(Self::from_computed(self.matrix.conjugate_by(u)?, self.layout.clone()))
    }
}

/// Normalized state vector on a register layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    layout: RegisterLayout,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>, layout: RegisterLayout) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::Shape(format!(
                "layout has dimension {} but {} amplitudes given",
                layout.dim(),
                amplitudes.len()
            )));
        }
        let norm = amplitudes.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes, layout })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

/// Density matrix on `n_a` Alice qubits followed by `n_b` Bob qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    state: DensityMatrix,
    n_a: usize,
    n_b: usize,
}

impl BipartiteState {
    pub fn new(matrix: ComplexMatrix, n_a: usize, n_b: usize) -> Result<Self> {
        let state = DensityMatrix::new(matrix, RegisterLayout::bipartite(n_a, n_b))?;
        Ok(Self { state, n_a, n_b })
    }

    pub(crate) fn from_computed(matrix: ComplexMatrix, n_a: usize, n_b: usize) -> Self {
        Self {
            state: DensityMatrix::from_computed(matrix, RegisterLayout::bipartite(n_a, n_b)),
            n_a,
            n_b,
        }
    }

    /// Pure state from amplitudes in A-major order.
    pub fn from_pure(amplitudes: Vec<Complex64>, n_a: usize, n_b: usize) -> Result<Self> {
        let psi = PureState::new(amplitudes, RegisterLayout::bipartite(n_a, n_b))?;
        Ok(Self {
            state: psi.density(),
            n_a,
            n_b,
        })
    }

    /// `ρ_A ⊗ ρ_B`.
    pub fn product(rho_a: &ComplexMatrix, rho_b: &ComplexMatrix) -> Result<Self> {
        let n_a = rho_a.num_qubits().ok_or_else(|| Error::Shape("ρ_A is not a qubit operator".into()))?;
        let n_b = rho_b.num_qubits().ok_or_else(|| Error::Shape("ρ_B is not a qubit operator".into()))?;
        Self::new(tensor_product(rho_a, rho_b)?, n_a, n_b)
    }

    /// Computational basis product state `|bits_a⟩|bits_b⟩`.
    pub fn basis(bits_a: &[bool], bits_b: &[bool]) -> Self {
        let n = bits_a.len() + bits_b.len();
        let idx = bits_a.iter().chain(bits_b).fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
        Self::from_computed(ComplexMatrix::basis_projector(1 << n, idx), bits_a.len(), bits_b.len())
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.state.matrix()
    }

    pub fn cut(&self) -> (usize, usize) {
        (self.n_a, self.n_b)
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn reduced_a(&self) -> Result<DensityMatrix> {
        self.state.reduce(&["A"])
    }

    pub fn reduced_b(&self) -> Result<DensityMatrix> {
        self.state.reduce(&["B"])
    }

    /// `ρ₁ ⊗ ρ₂` regrouped so that all Alice qubits (A₁A₂) precede all Bob qubits (B₁B₂).
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let joint = tensor_product(self.matrix(), other.matrix())?;
        let (a1, b1, a2, b2) = (self.n_a, self.n_b, other.n_a, other.n_b);
        // joint qubit order is A1 B1 A2 B2
        let order: Vec<usize> = (0..a1)
            .chain(a1 + b1..a1 + b1 + a2)
            .chain(a1..a1 + b1)
            .chain(a1 + b1 + a2..a1 + b1 + a2 + b2)
            .collect();
        Ok(Self::from_computed(permute_qubits(&joint, &order)?, a1 + a2, b1 + b2))
    }

    /// `(u_a ⊗ u_b) ρ (u_a ⊗ u_b)†`.
    pub fn local_conjugate(&self, u_a: &ComplexMatrix, u_b: &ComplexMatrix) -> Result<Self> {
        if u_a.rows() != 1 << self.n_a || u_b.rows() != 1 << self.n_b {
            return Err(Error::Shape("local unitaries do not match the cut".into()));
        }
        let u = tensor_product(u_a, u_b)?;
        Ok(Self::from_computed(self.matrix().conjugate_by(&u)?, self.n_a, self.n_b))
    }

    pub fn to_json(&self) -> StateJson {
        StateJson {
            dims: [self.matrix().rows(), self.matrix().cols()],
            cut: [self.n_a, self.n_b],
            re: self.matrix().re(),
            im: self.matrix().im(),
        }
    }

    pub fn from_json(json: &StateJson) -> Result<Self> {
        let m = ComplexMatrix::from_parts(json.dims[0], json.dims[1], &json.re, &json.im)?;
        Self::new(m, json.cut[0], json.cut[1])
    }
}

/// Serialized bipartite state: row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub dims: [usize; 2],
    pub cut: [usize; 2],
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Bit string used as a family key; displayed most significant bit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Key(pub Vec<bool>);

impl Key {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn from_index(value: usize, len: usize) -> Self {
        Self((0..len).map(|j| (value >> (len - 1 - j)) & 1 == 1).collect())
    }

    /// All keys of length `len` in lexicographic order.
    pub fn all(len: usize) -> Vec<Self> {
        (0..1usize << len).map(|v| Self::from_index(v, len)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Key {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Argument(format!("invalid key bit `{c}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Key)
    }
}

pub type StateGenerator = Arc<dyn Fn(u32) -> Result<BipartiteState> + Send + Sync>;
pub type KeyedStateGenerator = Arc<dyn Fn(u32, &Key) -> Result<BipartiteState> + Send + Sync>;

/// λ-indexed family of bipartite states with polynomial register sizes.
#[derive(Clone)]
pub struct StateFamily {
    pub name: String,
    pub n_a: Polynomial,
    pub n_b: Polynomial,
    generator: StateGenerator,
}

impl StateFamily {
    pub fn new(
        name: impl Into<String>,
        n_a: Polynomial,
        n_b: Polynomial,
        generator: impl Fn(u32) -> Result<BipartiteState> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            n_a,
            n_b,
            generator: Arc::new(generator),
        }
    }

    pub fn generate(&self, lambda: u32) -> Result<BipartiteState> {
        let state = (self.generator)(lambda)?;
        check_family_cut(&state, self.n_a.count(lambda), self.n_b.count(lambda), lambda)?;
        Ok(state)
    }
}

fn check_family_cut(state: &BipartiteState, n_a: usize, n_b: usize, lambda: u32) -> Result<()> {
    if state.cut() != (n_a, n_b) {
        return Err(Error::Shape(format!(
            "family member at λ={lambda} has cut {:?}, declared ({n_a}, {n_b})",
            state.cut()
        )));
    }
    Ok(())
}

/// Key-indexed family `ρ^{λ,k}` with keys of length κ(λ).
#[derive(Clone)]
pub struct KeyedStateFamily {
    pub name: String,
    pub key_len: Polynomial,
    pub n_a: Polynomial,
    pub n_b: Polynomial,
    generator: KeyedStateGenerator,
}

impl KeyedStateFamily {
    pub fn new(
        name: impl Into<String>,
        key_len: Polynomial,
        n_a: Polynomial,
        n_b: Polynomial,
        generator: impl Fn(u32, &Key) -> Result<BipartiteState> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            key_len,
            n_a,
            n_b,
            generator: Arc::new(generator),
        }
    }

    pub fn keys(&self, lambda: u32) -> Vec<Key> {
        Key::all(self.key_len.count(lambda))
    }

    pub fn generate(&self, lambda: u32, key: &Key) -> Result<BipartiteState> {
        let kappa = self.key_len.count(lambda);
        if key.len() != kappa {
            return Err(Error::Argument(format!("key length {} but κ({lambda}) = {kappa}", key.len())));
        }
        let state = (self.generator)(lambda, key)?;
        check_family_cut(&state, self.n_a.count(lambda), self.n_b.count(lambda), lambda)?;
        Ok(state)
    }
}

impl From<StateFamily> for KeyedStateFamily {
    fn from(f: StateFamily) -> Self {
        let generator = f.generator;
        Self {
            name: f.name,
            key_len: Polynomial::constant(0.0),
            n_a: f.n_a,
            n_b: f.n_b,
            generator: Arc::new(move |lambda, _key| generator(lambda)),
        }
    }
}

/// Amplitudes of `|φ^{⊗n}⟩` with every Alice qubit before every Bob qubit.
pub fn epr_amplitudes(n: usize) -> Vec<Complex64> {
    let d = 1usize << n;
    let amp = c64(1.0 / (d as f64).sqrt(), 0.0);
    let mut v = vec![c64(0.0, 0.0); d * d];
    for i in 0..d {
        v[i * d + i] = amp;
    }
    v
}

/// `Φ^{⊗n}`: pair `i` spans Alice qubit `i` and Bob qubit `i`.
pub fn epr_pairs(n: usize) -> Result<BipartiteState> {
    if !(1..=MAX_EPR_PAIRS).contains(&n) {
        return Err(Error::Size(format!("EPR pair count must be in 1..={MAX_EPR_PAIRS}, got {n}")));
    }
    Ok(BipartiteState::from_computed(ComplexMatrix::outer(&epr_amplitudes(n)), n, n))
}

fn expectation(m: &ComplexMatrix, psi: &[Complex64]) -> Result<f64> {
    let v = m.apply(psi)?;
    Ok(psi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<Complex64>().re)
}

/// `F(ρ, σ) = ‖√ρ √σ‖₁²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    fidelity_matrices(rho.matrix(), sigma.matrix())
}

/// Fidelity of two density matrices given as raw matrices.
///
/// If either argument is numerically rank one the value is `λ_max ⟨ψ|σ|ψ⟩`;
/// otherwise it is `(Σ √μ_i)²` over the eigenvalues `μ_i` of `√ρ σ √ρ`.
pub fn fidelity_matrices(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.rows() != sigma.rows() || !rho.is_square() || !sigma.is_square() {
        return Err(Error::Argument(format!(
            "fidelity of {}x{} and {}x{} matrices",
            rho.rows(),
            rho.cols(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    let (values_r, vecs_r) = eig_hermitian(rho)?;
    let (values_s, vecs_s) = eig_hermitian(sigma)?;
    let d = rho.rows();
    let column = |v: &ComplexMatrix, k: usize| -> Vec<Complex64> { (0..d).map(|r| v[(r, k)]).collect() };
    let top_r = values_r[d - 1];
    let top_s = values_s[d - 1];
    let f = if top_r >= rho.trace().re - PURE_TOL {
        top_r * expectation(sigma, &column(&vecs_r, d - 1))?
    } else if top_s >= sigma.trace().re - PURE_TOL {
        top_s * expectation(rho, &column(&vecs_s, d - 1))?
    } else {
        if values_r[0] < -EIG_CLIP {
            return Err(Error::NotPsd(values_r[0]));
        }
        let roots: Vec<f64> = values_r.iter().map(|x| x.max(0.0).sqrt()).collect();
        let sqrt_rho = ComplexMatrix::from_fn(d, d, |r, c| {
            (0..d).map(|k| vecs_r[(r, k)] * roots[k] * vecs_r[(c, k)].conj()).sum()
        });
        let inner = crate::random::hermitize(&(&(&sqrt_rho * sigma) * &sqrt_rho));
        let mu = eigvals_hermitian(&inner)?;
        if mu[0] < -EIG_CLIP {
            return Err(Error::NotPsd(mu[0]));
        }
        let s: f64 = mu.iter().map(|x| x.max(0.0).sqrt()).sum();
        s * s
    };
    Ok(f.clamp(0.0, 1.0))
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    trace_distance_matrices(rho.matrix(), sigma.matrix())
}

pub fn trace_distance_matrices(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.rows() != sigma.rows() || rho.cols() != sigma.cols() {
        return Err(Error::Argument("trace distance of states with different dimensions".into()));
    }
    Ok((0.5 * trace_norm_hermitian(&(rho - sigma))?).clamp(0.0, 1.0))
}

const PAULI_X: [[f64; 2]; 2] = [[0.0, 1.0], [1.0, 0.0]];
const PAULI_Z: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, -1.0]];

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(&[&PAULI_X[0], &PAULI_X[1]]).expect("static gate")
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(&[&PAULI_Z[0], &PAULI_Z[1]]).expect("static gate")
}

/// `σ_X(a) σ_Z(b) = ⊗_i X^{a_i} Z^{b_i}`.
pub fn pauli_shift(a: &[bool], b: &[bool]) -> Result<ComplexMatrix> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!("shift strings have lengths {} and {}", a.len(), b.len())));
    }
    let x = pauli_x();
    let z = pauli_z();
    let id = ComplexMatrix::identity(2);
    a.iter().zip(b).try_fold(ComplexMatrix::identity(1), |acc, (&ai, &bi)| {
        let local = match (ai, bi) {
            (false, false) => id.clone(),
            (true, false) => x.clone(),
            (false, true) => z.clone(),
            (true, true) => &x * &z,
        };
        tensor_product(&acc, &local)
    })
}

/// Splits a key into Pauli shift strings `(a, b)` of length `m`, padding with zeros.
pub fn pauli_key_split(key: &Key, m: usize) -> (Vec<bool>, Vec<bool>) {
    let bits = key.bits();
    let a = (0..m).map(|i| bits.get(i).copied().unwrap_or(false)).collect();
    let b = (0..m).map(|i| bits.get(m + i).copied().unwrap_or(false)).collect();
    (a, b)
}

/// Number of EPR pairs used by the stock Pauli-keyed family for key length κ.
pub fn pauli_key_pairs(kappa: usize) -> usize {
    kappa.div_ceil(2).max(1)
}

/// `(I ⊗ U)|φ^{⊗m}⟩` as amplitudes.
pub fn rotated_epr_amplitudes(u: &ComplexMatrix, m: usize) -> Result<Vec<Complex64>> {
    let d = 1usize << m;
    if u.rows() != d || !u.is_square() {
        return Err(Error::Shape(format!("expected a {d}x{d} unitary")));
    }
    if !u.is_unitary(1e-9) {
        return Err(Error::NotUnitary("rotation is not unitary within 1e-9".into()));
    }
    let amp = 1.0 / (d as f64).sqrt();
    let mut v = vec![c64(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            v[i * d + j] = u[(j, i)] * amp;
        }
    }
    Ok(v)
}

/// `Φ_U = (I ⊗ U) Φ^{⊗m} (I ⊗ U)†`.
pub fn rotated_epr(u: &ComplexMatrix, m: usize) -> Result<BipartiteState> {
    let v = rotated_epr_amplitudes(u, m)?;
    Ok(BipartiteState::from_computed(ComplexMatrix::outer(&v), m, m))
}

/// The stock keyed family `ρ^k = Φ_{σ_X(a)σ_Z(b)}` with `(a, b)` read from the key.
pub fn pauli_keyed_family(kappa: usize) -> KeyedStateFamily {
    let m = pauli_key_pairs(kappa);
    KeyedStateFamily::new(
        format!("pauli-rotated-epr(k={kappa})"),
        Polynomial::constant(kappa as f64),
        Polynomial::constant(m as f64),
        Polynomial::constant(m as f64),
        move |_lambda, key| {
            let (a, b) = pauli_key_split(key, m);
            rotated_epr(&pauli_shift(&a, &b)?, m)
        },
    )
}

/// `Σ_x p_x ρ_x`.
pub fn mixture(states: &[BipartiteState], p: &[f64]) -> Result<BipartiteState> {
    let first = states.first().ok_or_else(|| Error::Argument("empty ensemble".into()))?;
    if states.len() != p.len() {
        return Err(Error::Argument(format!("{} states but {} weights", states.len(), p.len())));
    }
    if p.iter().any(|&w| !(0.0..=1.0).contains(&w)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Argument("weights must form a probability vector".into()));
    }
    if states.iter().any(|s| s.cut() != first.cut()) {
        return Err(Error::Shape("ensemble members have different cuts".into()));
    }
    let d = first.matrix().rows();
    let mut acc = ComplexMatrix::zeros(d, d);
    for (s, &w) in states.iter().zip(p) {
        acc = &acc + &s.matrix().scale_real(w);
    }
    Ok(BipartiteState::from_computed(acc, first.n_a, first.n_b))
}
