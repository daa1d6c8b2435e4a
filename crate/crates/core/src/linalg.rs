//! Dense complex matrices over qubit registers.
//!
//! Index convention: a matrix acting on `n` qubits has dimension `2^n`, and
//! qubit 0 is the most significant bit of the row/column index. When several
//! registers are laid out with [`RegisterLayout`], the register order is the
//! tensor order.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of qubits any simulated operator may span.
pub const MAX_QUBITS: usize = 14;
/// Entrywise tolerance for `m == m†`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues in `[-EIG_CLIP, 0)` are treated as zero by PSD operations.
pub const EIG_CLIP: f64 = 1e-10;

pub const fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const MAX_DIM: usize = 1 << MAX_QUBITS;

/// Row-major dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Argument("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from separate real and imaginary parts (row-major).
    pub fn from_parts(rows: usize, cols: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::Shape("real and imaginary parts differ in length".into()));
        }
        let data = re.iter().zip(im).map(|(&a, &b)| c64(a, b)).collect();
        Self::new(rows, cols, data)
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    /// Real-valued matrix from rows; convenient for gate tables.
    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| c64(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::default(); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, dim, |r, c| if r == c { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
    }

    pub fn diag(values: &[f64]) -> Self {
        let d = values.len();
        Self::from_fn(d, d, |r, c| if r == c { c64(values[r], 0.0) } else { c64(0.0, 0.0) })
    }

    /// `|v⟩⟨v|` for a column vector `v`.
    pub fn outer(v: &[Complex64]) -> Self {
        let d = v.len();
        Self::from_fn(d, d, |r, c| v[r] * v[c].conj())
    }

    /// `|i⟩⟨i|` in dimension `dim`.
    pub fn basis_projector(dim: usize, i: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        m[(i, i)] = c64(1.0, 0.0);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn re(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.im).collect()
    }

    /// Number of qubits when the matrix is square with a power-of-two dimension.
    pub fn num_qubits(&self) -> Option<usize> {
        (self.is_square() && self.rows.is_power_of_two()).then(|| self.rows.trailing_zeros() as usize)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c64(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::default() {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.cols != v.len() {
            return Err(Error::Shape(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Self) -> Result<Self> {
        u.matmul(self)?.matmul(&u.adjoint())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| (r..self.cols).all(|c| (self[(r, c)] - self[(c, r)].conj()).norm() <= tol))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && self
                .adjoint()
                .matmul(self)
                .map(|p| p.max_abs_diff(&Self::identity(self.rows)) <= tol)
                .unwrap_or(false)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on shape mismatch; use [`ComplexMatrix::matmul`] for a fallible product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

/// Named qubit registers in tensor order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    registers: Vec<(String, usize)>,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(registers: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let registers: Vec<(String, usize)> = registers.into_iter().map(|(n, q)| (n.into(), q)).collect();
        for (i, (name, _)) in registers.iter().enumerate() {
            if registers[..i].iter().any(|(other, _)| other == name) {
                return Err(Error::Argument(format!("duplicate register name `{name}`")));
            }
        }
        Ok(Self { registers })
    }

    /// The two-register layout `A:n_a, B:n_b` used by bipartite states.
    pub fn bipartite(n_a: usize, n_b: usize) -> Self {
        Self {
            registers: vec![("A".into(), n_a), ("B".into(), n_b)],
        }
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.registers
    }

    pub fn total_qubits(&self) -> usize {
        self.registers.iter().map(|(_, q)| q).sum()
    }

    pub fn dim(&self) -> usize {
        1 << self.total_qubits()
    }

    pub fn qubits_of(&self, name: &str) -> Result<std::ops::Range<usize>> {
        let mut offset = 0;
        for (n, q) in &self.registers {
            if n == name {
                return Ok(offset..offset + q);
            }
            offset += q;
        }
        Err(Error::Argument(format!("unknown register `{name}`")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|(n, _)| n == name)
    }

    /// Layout restricted to `keep`, preserving the original register order.
    pub fn restrict(&self, keep: &[&str]) -> Result<Self> {
        for k in keep {
            if !self.contains(k) {
                return Err(Error::Argument(format!("unknown register `{k}`")));
            }
        }
        Ok(Self {
            registers: self
                .registers
                .iter()
                .filter(|(n, _)| keep.contains(&n.as_str()))
                .cloned()
                .collect(),
        })
    }
}

/// Kronecker product with `a`'s indices most significant.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::Size(format!(
            "tensor product of dimension {rows}x{cols} exceeds the {MAX_QUBITS}-qubit cap"
        )));
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x == Complex64::default() {
                continue;
            }
            for br in 0..b.rows {
                let dst = (ar * b.rows + br) * cols + ac * b.cols;
                let src = &b.data[br * b.cols..(br + 1) * b.cols];
                for (d, y) in out.data[dst..dst + b.cols].iter_mut().zip(src) {
                    *d = x * y;
                }
            }
        }
    }
    Ok(out)
}

/// Scatters the bits of `value` (MSB first, `positions.len()` bits) onto qubit
/// `positions` of an `n`-qubit index.
pub(crate) fn scatter_bits(value: usize, positions: &[usize], n: usize) -> usize {
    let k = positions.len();
    positions
        .iter()
        .enumerate()
        .filter(|(j, _)| (value >> (k - 1 - j)) & 1 == 1)
        .fold(0, |acc, (_, &p)| acc | 1 << (n - 1 - p))
}

/// Traces out every qubit not listed in `keep`. The result's qubit order follows `keep`.
pub fn partial_trace_qubits(m: &ComplexMatrix, n: usize, keep: &[usize]) -> Result<ComplexMatrix> {
    if m.rows != 1 << n || !m.is_square() {
        return Err(Error::Shape(format!("expected a {0}x{0} matrix", 1usize << n)));
    }
    if keep.iter().any(|&q| q >= n) {
        return Err(Error::Argument("kept qubit out of range".into()));
    }
    for (i, q) in keep.iter().enumerate() {
        if keep[..i].contains(q) {
            return Err(Error::Argument(format!("qubit {q} kept twice")));
        }
    }
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let kept_idx: Vec<usize> = (0..1usize << keep.len()).map(|v| scatter_bits(v, keep, n)).collect();
    let traced_idx: Vec<usize> = (0..1usize << traced.len()).map(|v| scatter_bits(v, &traced, n)).collect();
    let dk = kept_idx.len();
    let dim = m.rows;
    let mut out = ComplexMatrix::zeros(dk, dk);
    for (r, &rk) in kept_idx.iter().enumerate() {
        for (c, &ck) in kept_idx.iter().enumerate() {
            out[(r, c)] = traced_idx.iter().map(|&t| m.data[(rk | t) * dim + (ck | t)]).sum();
        }
    }
    Ok(out)
}

/// Reorders qubits: qubit `j` of the result is qubit `order[j]` of `m`.
pub fn permute_qubits(m: &ComplexMatrix, order: &[usize]) -> Result<ComplexMatrix> {
    let n = order.len();
    if m.rows != 1 << n || !m.is_square() {
        return Err(Error::Shape(format!("expected a {0}x{0} matrix", 1usize << n)));
    }
    let mut seen = vec![false; n];
    for &q in order {
        if q >= n || std::mem::replace(&mut seen[q], true) {
            return Err(Error::Argument("qubit order must be a permutation".into()));
        }
    }
    let idx: Vec<usize> = (0..m.rows).map(|v| scatter_bits(v, order, n)).collect();
    Ok(ComplexMatrix::from_fn(m.rows, m.rows, |r, c| m.data[idx[r] * m.rows + idx[c]]))
}

/// Partial trace keeping the named registers (in layout order).
pub fn partial_trace(m: &ComplexMatrix, layout: &RegisterLayout, keep: &[&str]) -> Result<ComplexMatrix> {
    let n = layout.total_qubits();
    let mut qubits = Vec::new();
    for (name, _) in layout.registers() {
        if keep.contains(&name.as_str()) {
            qubits.extend(layout.qubits_of(name)?);
        }
    }
    for k in keep {
        if !layout.contains(k) {
            return Err(Error::Argument(format!("unknown register `{k}`")));
        }
    }
    partial_trace_qubits(m, n, &qubits)
}

/// Hermitian eigendecomposition with ascending eigenvalues; eigenvectors are the columns.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::Precondition("matrix is not Hermitian within 1e-10".into()));
    }
    let (raw, vecs) = symmetric_eigen(m)?;
    let mut order: Vec<usize> = (0..m.rows).collect();
    order.sort_by(|&i, &j| raw[i].total_cmp(&raw[j]));
    let values = order.iter().map(|&i| raw[i]).collect();
    let vectors = ComplexMatrix::from_fn(m.rows, m.rows, |r, c| vecs[(r, order[c])]);
    Ok((values, vectors))
}

/// nalgebra's QR iteration can return NaN on highly degenerate inputs such as
/// `Φ^{⊗3}`; on NaN the matrix is conjugated by the unitary DFT and retried.
fn symmetric_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let sym = (&m.to_nalgebra() + &m.to_nalgebra().adjoint()) * c64(0.5, 0.0);
    let finite = |e: &nalgebra::SymmetricEigen<Complex64, nalgebra::Dyn>| {
        e.eigenvalues.iter().all(|x| x.is_finite()) && e.eigenvectors.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    };
    let eig = sym.clone().symmetric_eigen();
    if finite(&eig) {
        return Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors));
    }
    let d = m.rows;
    let scale = 1.0 / (d as f64).sqrt();
    let dft = DMatrix::from_fn(d, d, |r, c| {
        Complex64::from_polar(scale, -2.0 * std::f64::consts::PI * ((r * c) % d) as f64 / d as f64)
    });
    let rotated = &dft * &sym * dft.adjoint();
    let rotated = (&rotated + &rotated.adjoint()) * c64(0.5, 0.0);
    let eig = rotated.symmetric_eigen();
    if !finite(&eig) {
        return Err(Error::Precondition("eigendecomposition did not converge".into()));
    }
    Ok((eig.eigenvalues.iter().copied().collect(), dft.adjoint() * eig.eigenvectors))
}

/// Eigenvalues only, ascending.
pub fn eigvals_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::Precondition("matrix is not Hermitian within 1e-10".into()));
    }
    let sym = (&m.to_nalgebra() + &m.to_nalgebra().adjoint()) * c64(0.5, 0.0);
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    if values.iter().any(|x| !x.is_finite()) {
        values = symmetric_eigen(m)?.0;
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// `V f(Λ) V†` for a Hermitian `m`.
pub fn hermitian_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let (values, v) = eig_hermitian(m)?;
    let d = values.len();
    let fv: Vec<f64> = values.into_iter().map(f).collect();
    Ok(ComplexMatrix::from_fn(d, d, |r, c| {
        (0..d).map(|k| v[(r, k)] * fv[k] * v[(c, k)].conj()).sum()
    }))
}

/// Principal square root of a PSD matrix; eigenvalues in `[-1e-10, 0)` are clipped.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, _) = eig_hermitian(m)?;
    if let Some(&min) = values.first() {
        if min < -EIG_CLIP {
            return Err(Error::NotPsd(min));
        }
    }
    hermitian_function(m, |x| x.max(0.0).sqrt())
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    m.to_nalgebra().singular_values().iter().copied().collect()
}

/// Order of a Schatten norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchattenP {
    Finite(f64),
    Infinity,
}

impl SchattenP {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Argument(format!("Schatten order must be >= 1, got {p}")));
        }
        Ok(if p.is_infinite() { Self::Infinity } else { Self::Finite(p) })
    }
}

/// `‖m‖_p = (Σ s_i^p)^{1/p}` over singular values; `p = ∞` is the operator norm.
pub fn schatten_norm(m: &ComplexMatrix, p: f64) -> Result<f64> {
    let p = SchattenP::new(p)?;
    if !m.is_square() {
        return Err(Error::Shape("Schatten norm expects a square matrix".into()));
    }
    let sv = singular_values(m);
    Ok(match p {
        SchattenP::Infinity => sv.into_iter().fold(0.0, f64::max),
        SchattenP::Finite(p) if p == 1.0 => sv.into_iter().sum(),
        SchattenP::Finite(p) if p == 2.0 => sv.into_iter().map(|s| s * s).sum::<f64>().sqrt(),
        SchattenP::Finite(p) => sv.into_iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p),
    })
}

/// Hermitian trace norm `Σ|λ_i|`; cheaper and more accurate than an SVD for Hermitian input.
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigvals_hermitian(m)?.into_iter().map(f64::abs).sum())
}
