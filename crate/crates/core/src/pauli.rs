//! Weighted Pauli-string sums.
//!
//! Qubit 0 is the least significant bit of a basis index. String labels are
//! printed with qubit 0 rightmost, so `"ZI"` is Z on qubit 1.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

/// Largest register that is ever realized densely.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Coefficients below this magnitude are dropped after decomposition.
pub const PRUNE_TOL: f64 = 1e-13;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliOp::I,
            (true, false) => PauliOp::X,
            (true, true) => PauliOp::Y,
            (false, true) => PauliOp::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            PauliOp::I => (false, false),
            PauliOp::X => (true, false),
            PauliOp::Y => (true, true),
            PauliOp::Z => (false, true),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliOp::I),
            'X' => Some(PauliOp::X),
            'Y' => Some(PauliOp::Y),
            'Z' => Some(PauliOp::Z),
            _ => None,
        }
    }

    /// 2x2 matrix, row-major.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let i = Complex64::new(0.0, 1.0);
        match self {
            PauliOp::I => [[C1, C0], [C0, C1]],
            PauliOp::X => [[C0, C1], [C1, C0]],
            PauliOp::Y => [[C0, -i], [i, C0]],
            PauliOp::Z => [[C1, C0], [C0, -C1]],
        }
    }
}

/// Tensor product of single-qubit Paulis; `ops[q]` acts on qubit `q`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    ops: Vec<PauliOp>,
}

impl PauliString {
    pub fn new(ops: Vec<PauliOp>) -> Self {
        PauliString { ops }
    }

    pub fn identity(n: usize) -> Self {
        PauliString {
            ops: vec![PauliOp::I; n],
        }
    }

    /// Parse a label with qubit 0 rightmost.
    pub fn from_label(label: &str) -> SimResult<Self> {
        let ops = label
            .chars()
            .rev()
            .map(|c| PauliOp::from_char(c).ok_or_else(|| SimError::BadArgs(format!("bad Pauli label {label}"))))
            .collect::<SimResult<Vec<_>>>()?;
        Ok(PauliString { ops })
    }

    /// Build from symplectic masks (bit q of `x`/`z` for qubit q).
    pub fn from_masks(n: usize, x: u64, z: u64) -> Self {
        let ops = (0..n)
            .map(|q| PauliOp::from_bits(x >> q & 1 == 1, z >> q & 1 == 1))
            .collect();
        PauliString { ops }
    }

    /// Single non-identity factor `op` on qubit `q`.
    pub fn single(n: usize, q: usize, op: PauliOp) -> Self {
        let mut s = Self::identity(n);
        s.ops[q] = op;
        s
    }

    pub fn n(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[PauliOp] {
        &self.ops
    }

    pub fn label(&self) -> String {
        self.ops.iter().rev().map(|o| o.to_char()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&o| o == PauliOp::I)
    }

    pub fn weight(&self) -> usize {
        self.ops.iter().filter(|&&o| o != PauliOp::I).count()
    }

    /// Qubits with a non-identity factor, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&q| self.ops[q] != PauliOp::I).collect()
    }

    pub fn masks(&self) -> (u64, u64) {
        let mut x = 0u64;
        let mut z = 0u64;
        for (q, op) in self.ops.iter().enumerate() {
            let (bx, bz) = op.bits();
            x |= (bx as u64) << q;
            z |= (bz as u64) << q;
        }
        (x, z)
    }

    /// Product `self * other` as (phase, string).
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        assert_eq!(self.n(), other.n());
        let mut phase = C1;
        let i = Complex64::new(0.0, 1.0);
        let ops = self
            .ops
            .iter()
            .zip(&other.ops)
            .map(|(&a, &b)| {
                use PauliOp::*;
                let (p, r) = match (a, b) {
                    (I, o) | (o, I) => (C1, o),
                    (X, X) | (Y, Y) | (Z, Z) => (C1, I),
                    (X, Y) => (i, Z),
                    (Y, X) => (-i, Z),
                    (Y, Z) => (i, X),
                    (Z, Y) => (-i, X),
                    (Z, X) => (i, Y),
                    (X, Z) => (-i, Y),
                };
                phase *= p;
                r
            })
            .collect();
        (phase, PauliString { ops })
    }

    /// Relabel onto a larger register: local qubit `q` goes to `map[q]`.
    pub fn embed(&self, map: &[usize], total_n: usize) -> PauliString {
        let mut out = Self::identity(total_n);
        for (q, &op) in self.ops.iter().enumerate() {
            out.ops[map[q]] = op;
        }
        out
    }

    /// Action on a basis state: `P|b> = phase |b'>`.
    pub fn apply_basis(&self, b: u64) -> (Complex64, u64) {
        let (x, z) = self.masks();
        basis_action(x, z, b)
    }
}

/// `P|b> = i^{|x&z|} (-1)^{|z&b|} |b ^ x>`.
pub(crate) fn basis_action(x: u64, z: u64, b: u64) -> (Complex64, u64) {
    let ny = (x & z).count_ones() % 4;
    let mut ph = match ny {
        0 => C1,
        1 => Complex64::new(0.0, 1.0),
        2 => -C1,
        _ => Complex64::new(0.0, -1.0),
    };
    if (z & b).count_ones() % 2 == 1 {
        ph = -ph;
    }
    (ph, b ^ x)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Sum of Pauli strings with complex weights; zero weights are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

/// JSON shape of a single term.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PauliTermJson {
    pub paulis: String,
    pub re: f64,
    pub im: f64,
}

impl PauliSum {
    pub fn new(n: usize) -> Self {
        PauliSum {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (PauliString, Complex64)>>(n: usize, it: I) -> Self {
        let mut s = Self::new(n);
        for (p, c) in it {
            s.add_term(p, c);
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or(C0)
    }

    pub fn add_term(&mut self, p: PauliString, c: Complex64) {
        assert_eq!(p.n(), self.n, "qubit count mismatch");
        if let Some(v) = self.terms.get_mut(&p) {
            *v += c;
            if v.norm() == 0.0 {
                self.terms.remove(&p);
            }
        } else if c.norm() != 0.0 {
            self.terms.insert(p, c);
        }
    }

    pub fn add(&self, other: &PauliSum) -> PauliSum {
        let mut out = self.clone();
        for (p, c) in other.terms() {
            out.add_term(p.clone(), *c);
        }
        out
    }

    pub fn scale(&self, a: Complex64) -> PauliSum {
        PauliSum::from_terms(self.n, self.terms.iter().map(|(p, c)| (p.clone(), c * a)))
    }

    pub fn mul(&self, other: &PauliSum) -> PauliSum {
        let mut out = PauliSum::new(self.n);
        for (p, a) in self.terms() {
            for (q, b) in other.terms() {
                let (ph, r) = p.mul(q);
                out.add_term(r, ph * a * b);
            }
        }
        out
    }

    /// Drop terms with `|c| < tol`.
    pub fn pruned(&self, tol: f64) -> PauliSum {
        PauliSum {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() >= tol)
                .map(|(p, c)| (p.clone(), *c))
                .collect(),
        }
    }

    pub fn identity_coeff(&self) -> Complex64 {
        self.coeff(&PauliString::identity(self.n))
    }

    pub fn without_identity(&self) -> PauliSum {
        let mut out = self.clone();
        out.terms.remove(&PauliString::identity(self.n));
        out
    }

    /// Largest coefficient magnitude (c_P candidate).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Sum of coefficient magnitudes.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Hermitian iff every coefficient is real (all Pauli strings are Hermitian).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Union of the supports of all terms.
    pub fn support(&self) -> Vec<usize> {
        let mut mask = 0u64;
        for p in self.terms.keys() {
            let (x, z) = p.masks();
            mask |= x | z;
        }
        (0..self.n).filter(|q| mask >> q & 1 == 1).collect()
    }

    /// Relabel onto a larger register.
    pub fn embed(&self, map: &[usize], total_n: usize) -> PauliSum {
        PauliSum::from_terms(
            total_n,
            self.terms.iter().map(|(p, c)| (p.embed(map, total_n), *c)),
        )
    }

    pub fn to_matrix(&self) -> SimResult<DMatrix<Complex64>> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(SimError::TooLarge {
                what: "qubits",
                got: self.n,
                limit: MAX_DENSE_QUBITS,
            });
        }
        let dim = 1usize << self.n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (p, c) in &self.terms {
            let (x, z) = p.masks();
            for b in 0..dim as u64 {
                let (ph, b2) = basis_action(x, z, b);
                m[(b2 as usize, b as usize)] += c * ph;
            }
        }
        Ok(m)
    }

    /// `c_P = Tr(M P) / 2^n` for every string, via one Walsh-Hadamard
    /// transform per X-mask.
    pub fn decompose_hermitian(m: &DMatrix<Complex64>) -> SimResult<PauliSum> {
        let dim = m.nrows();
        if m.ncols() != dim || dim == 0 || !dim.is_power_of_two() {
            return Err(SimError::BadDim(dim.max(m.ncols())));
        }
        let n = dim.trailing_zeros() as usize;
        if n > MAX_DENSE_QUBITS {
            return Err(SimError::TooLarge {
                what: "qubits",
                got: n,
                limit: MAX_DENSE_QUBITS,
            });
        }
        let dev = crate::dense::hermitian_deviation(m);
        if dev > 1e-10 {
            return Err(SimError::NonHermitian(dev));
        }
        let mut out = PauliSum::new(n);
        let norm = 1.0 / dim as f64;
        let mut f = vec![C0; dim];
        for x in 0..dim {
            // Tr(M P) = i^{|x&z|} sum_b (-1)^{z.b} M[b, b^x]
            for b in 0..dim {
                f[b] = m[(b, b ^ x)];
            }
            walsh_hadamard(&mut f);
            for (z, v) in f.iter().enumerate() {
                let ny = (x & z).count_ones() % 4;
                let ph = match ny {
                    0 => C1,
                    1 => Complex64::new(0.0, 1.0),
                    2 => -C1,
                    _ => Complex64::new(0.0, -1.0),
                };
                let c = v * ph * norm;
                if c.norm() >= PRUNE_TOL {
                    // Hermitian input gives real weights; drop the round-off imaginary part.
                    let c = Complex64::new(c.re, if c.im.abs() < 1e-12 { 0.0 } else { c.im });
                    out.terms
                        .insert(PauliString::from_masks(n, x as u64, z as u64), c);
                }
            }
        }
        Ok(out)
    }

    /// Diagonal operator with value `v_min + b*step` on basis index `b`.
    ///
    /// With `b_j = (1 - z_j)/2` this is `(v_min + step(N-1)/2) I - sum_j step 2^{j-1} Z_j`.
    pub fn decompose_evenly_spaced_diagonal(n_q: usize, v_min: f64, step: f64) -> PauliSum {
        assert!(n_q >= 1 && step > 0.0);
        let nn = (1u64 << n_q) as f64;
        let mut out = PauliSum::new(n_q);
        let mean = v_min + step * (nn - 1.0) / 2.0;
        if mean.abs() > PRUNE_TOL * (1.0 + v_min.abs()) {
            out.add_term(PauliString::identity(n_q), Complex64::new(mean, 0.0));
        }
        for j in 0..n_q {
            let w = -step * (1u64 << j) as f64 / 2.0;
            out.add_term(PauliString::single(n_q, j, PauliOp::Z), Complex64::new(w, 0.0));
        }
        out
    }

    pub fn to_json_terms(&self) -> Vec<PauliTermJson> {
        self.terms
            .iter()
            .map(|(p, c)| PauliTermJson {
                paulis: p.label(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn from_json_terms(n: usize, terms: &[PauliTermJson]) -> SimResult<PauliSum> {
        let mut out = PauliSum::new(n);
        for t in terms {
            let p = PauliString::from_label(&t.paulis)?;
            if p.n() != n {
                return Err(SimError::BadArgs(format!("label {} has wrong length", t.paulis)));
            }
            out.add_term(p, Complex64::new(t.re, t.im));
        }
        Ok(out)
    }
}

fn walsh_hadamard(f: &mut [Complex64]) {
    let n = f.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (f[j], f[j + h]);
                f[j] = a + b;
                f[j + h] = a - b;
            }
        }
        h *= 2;
    }
}
