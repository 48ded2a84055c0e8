//! Gate-level circuit IR and its dense simulation.
//!
//! Gates may carry multi-qubit controls (`Mc`) and uniformly controlled
//! rotations (`UcRy`) until lowering replaces them with Rx, Rz and CNOT.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dense::DenseOperator;
use crate::error::{SimError, SimResult};

pub type Mat2 = [[Complex64; 2]; 2];

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    /// `diag(1, e^{i theta})`.
    Phase(usize, f64),
    /// Arbitrary single-qubit unitary.
    U(usize, Mat2),
    /// `(control, target)`.
    Cnot(usize, usize),
    Swap(usize, usize),
    GlobalPhase(f64),
    /// `body` applied when every `(qubit, value)` control matches.
    Mc {
        controls: Vec<(usize, bool)>,
        body: Vec<Gate>,
    },
    /// `Ry(angles[j])` on `target` for control pattern `j`; `controls[0]` is the
    /// most significant bit of `j`.
    UcRy {
        controls: Vec<usize>,
        target: usize,
        angles: Vec<f64>,
    },
    Barrier,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Register {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub registers: Vec<Register>,
    /// Trailing clean work qubits added by lowering.
    pub work_qubits: usize,
}

pub fn mat_rx(t: f64) -> Mat2 {
    let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
    [[Complex64::new(c, 0.0), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), Complex64::new(c, 0.0)]]
}

pub fn mat_ry(t: f64) -> Mat2 {
    let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
    [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
}

pub fn mat_rz(t: f64) -> Mat2 {
    [[Complex64::from_polar(1.0, -t / 2.0), C0], [C0, Complex64::from_polar(1.0, t / 2.0)]]
}

pub fn mat_phase(t: f64) -> Mat2 {
    [[C1, C0], [C0, Complex64::from_polar(1.0, t)]]
}

pub fn mat_h() -> Mat2 {
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[r, r], [r, -r]]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut o = [[C0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    o
}

pub fn mat_dagger(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

impl Gate {
    /// 2x2 matrix and target of a single-qubit gate.
    pub fn single_qubit(&self) -> Option<(usize, Mat2)> {
        let i = Complex64::new(0.0, 1.0);
        Some(match *self {
            Gate::H(q) => (q, mat_h()),
            Gate::X(q) => (q, [[C0, C1], [C1, C0]]),
            Gate::Y(q) => (q, [[C0, -i], [i, C0]]),
            Gate::Z(q) => (q, [[C1, C0], [C0, -C1]]),
            Gate::Rx(q, t) => (q, mat_rx(t)),
            Gate::Ry(q, t) => (q, mat_ry(t)),
            Gate::Rz(q, t) => (q, mat_rz(t)),
            Gate::Phase(q, t) => (q, mat_phase(t)),
            Gate::U(q, m) => (q, m),
            _ => return None,
        })
    }

    pub fn dagger(&self) -> Gate {
        match self {
            Gate::Rx(q, t) => Gate::Rx(*q, -t),
            Gate::Ry(q, t) => Gate::Ry(*q, -t),
            Gate::Rz(q, t) => Gate::Rz(*q, -t),
            Gate::Phase(q, t) => Gate::Phase(*q, -t),
            Gate::U(q, m) => Gate::U(*q, mat_dagger(m)),
            Gate::GlobalPhase(t) => Gate::GlobalPhase(-t),
            Gate::Mc { controls, body } => Gate::Mc {
                controls: controls.clone(),
                body: body.iter().rev().map(|g| g.dagger()).collect(),
            },
            Gate::UcRy {
                controls,
                target,
                angles,
            } => Gate::UcRy {
                controls: controls.clone(),
                target: *target,
                angles: angles.iter().map(|a| -a).collect(),
            },
            g => g.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::Y(_) => "y",
            Gate::Z(_) => "z",
            Gate::Rx(..) => "rx",
            Gate::Ry(..) => "ry",
            Gate::Rz(..) => "rz",
            Gate::Phase(..) => "phase",
            Gate::U(..) => "u",
            Gate::Cnot(..) => "cnot",
            Gate::Swap(..) => "swap",
            Gate::GlobalPhase(_) => "global_phase",
            Gate::Mc { .. } => "mc",
            Gate::UcRy { .. } => "ucry",
            Gate::Barrier => "barrier",
        }
    }

    /// Highest qubit index touched, if any.
    pub fn max_qubit(&self) -> Option<usize> {
        match self {
            Gate::Cnot(a, b) | Gate::Swap(a, b) => Some(*a.max(b)),
            Gate::GlobalPhase(_) | Gate::Barrier => None,
            Gate::Mc { controls, body } => controls
                .iter()
                .map(|c| c.0)
                .chain(body.iter().filter_map(|g| g.max_qubit()))
                .max(),
            Gate::UcRy { controls, target, .. } => controls.iter().copied().chain([*target]).max(),
            g => g.single_qubit().map(|(q, _)| q),
        }
    }

    /// Wrap in controls.
    pub fn controlled(self, controls: Vec<(usize, bool)>) -> Gate {
        if controls.is_empty() {
            return self;
        }
        match self {
            Gate::Mc { controls: mut c2, body } => {
                let mut c = controls;
                c.append(&mut c2);
                Gate::Mc { controls: c, body }
            }
            g => Gate::Mc {
                controls,
                body: vec![g],
            },
        }
    }
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
            registers: Vec::new(),
            work_qubits: 0,
        }
    }

    pub fn with_register(mut self, name: &str, start: usize, len: usize) -> Self {
        self.registers.push(Register {
            name: name.to_string(),
            start,
            len,
        });
        self
    }

    pub fn push(&mut self, g: Gate) {
        self.gates.push(g);
    }

    pub fn extend(&mut self, gs: impl IntoIterator<Item = Gate>) {
        self.gates.extend(gs);
    }

    pub fn append(&mut self, other: &Circuit) {
        self.gates.extend(other.gates.iter().cloned());
    }

    pub fn dagger(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(|g| g.dagger()).collect(),
            registers: self.registers.clone(),
            work_qubits: self.work_qubits,
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        for g in &self.gates {
            if let Some(q) = g.max_qubit() {
                if q >= self.n_qubits {
                    return Err(SimError::BadArgs(format!(
                        "gate {} touches qubit {q} outside {} qubits",
                        g.name(),
                        self.n_qubits
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of primitive gates sitting under at least one control.
    pub fn controlled_gate_count(&self) -> usize {
        fn prim(g: &Gate) -> usize {
            match g {
                Gate::Mc { body, .. } => body.iter().map(prim).sum(),
                Gate::UcRy { angles, .. } => angles.len(),
                Gate::Barrier => 0,
                _ => 1,
            }
        }
        self.gates
            .iter()
            .map(|g| match g {
                Gate::Mc { body, .. } => body.iter().map(prim).sum(),
                _ => 0,
            })
            .sum()
    }

    /// Apply to one state vector.
    pub fn apply(&self, state: &mut [Complex64]) {
        for g in &self.gates {
            apply_gate(state, g, 0, 0);
        }
    }

    /// Apply to every column of `m`.
    pub fn apply_to_columns(&self, m: &mut DenseOperator) {
        let rows = m.nrows();
        assert_eq!(rows, 1 << self.n_qubits);
        m.as_mut_slice().par_chunks_mut(rows).for_each(|col| self.apply(col));
    }

    pub fn unitary(&self) -> SimResult<DenseOperator> {
        if self.n_qubits > 14 {
            return Err(SimError::TooLarge {
                what: "circuit qubits",
                got: self.n_qubits,
                limit: 14,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::identity(dim, dim);
        self.apply_to_columns(&mut m);
        Ok(m)
    }

    /// Unitary restricted to the subspace where the trailing work qubits are |0>.
    pub fn unitary_on_clean_work(&self) -> SimResult<DenseOperator> {
        let u = self.unitary()?;
        let d = 1usize << (self.n_qubits - self.work_qubits);
        Ok(u.view((0, 0), (d, d)).into_owned())
    }
}

/// Standard QFT `|j> -> N^{-1/2} sum_k e^{2 pi i jk/N} |k>` on `qubits` (LSB first).
pub fn qft_gates(qubits: &[usize]) -> Vec<Gate> {
    let n = qubits.len();
    let mut out = Vec::new();
    for i in (0..n).rev() {
        out.push(Gate::H(qubits[i]));
        for m in (0..i).rev() {
            let ang = 2.0 * std::f64::consts::PI / (1u64 << (i - m + 1)) as f64;
            out.push(Gate::Mc {
                controls: vec![(qubits[m], true)],
                body: vec![Gate::Phase(qubits[i], ang)],
            });
        }
    }
    for b in 0..n / 2 {
        out.push(Gate::Swap(qubits[b], qubits[n - 1 - b]));
    }
    out
}

/// Centered FT on one site: `e^{2 pi i s^2/N} D QFT D` with `D = diag(e^{-2 pi i s j/N})`.
pub fn symmetric_ft_gates(qubits: &[usize]) -> Vec<Gate> {
    let n = qubits.len();
    let big_n = (1u64 << n) as f64;
    let s = (big_n - 1.0) / 2.0;
    let tau = 2.0 * std::f64::consts::PI;
    let d: Vec<Gate> = qubits
        .iter()
        .enumerate()
        .map(|(b, &q)| Gate::Phase(q, -tau * s * (1u64 << b) as f64 / big_n))
        .collect();
    let mut out = d.clone();
    out.extend(qft_gates(qubits));
    out.extend(d);
    out.push(Gate::GlobalPhase(tau * s * s / big_n));
    out
}

fn apply_1q(state: &mut [Complex64], q: usize, m: &Mat2, mask: usize, val: usize) {
    let bit = 1usize << q;
    for i in 0..state.len() {
        if i & bit != 0 || i & mask != val {
            continue;
        }
        let j = i | bit;
        let (a, b) = (state[i], state[j]);
        state[i] = m[0][0] * a + m[0][1] * b;
        state[j] = m[1][0] * a + m[1][1] * b;
    }
}

/// Apply `g` on the subspace where `i & mask == val`.
pub fn apply_gate(state: &mut [Complex64], g: &Gate, mask: usize, val: usize) {
    match g {
        Gate::Barrier => {}
        Gate::GlobalPhase(t) => {
            let ph = Complex64::from_polar(1.0, *t);
            for (i, a) in state.iter_mut().enumerate() {
                if i & mask == val {
                    *a *= ph;
                }
            }
        }
        Gate::Cnot(c, t) => {
            let x = [[C0, C1], [C1, C0]];
            apply_1q(state, *t, &x, mask | 1 << c, val | 1 << c);
        }
        Gate::Swap(a, b) => {
            let (ba, bb) = (1usize << a, 1usize << b);
            for i in 0..state.len() {
                if i & mask == val && i & ba != 0 && i & bb == 0 {
                    state.swap(i, i ^ ba ^ bb);
                }
            }
        }
        Gate::Mc { controls, body } => {
            let mut m = mask;
            let mut v = val;
            for &(q, on) in controls {
                m |= 1 << q;
                if on {
                    v |= 1 << q;
                }
            }
            for b in body {
                apply_gate(state, b, m, v);
            }
        }
        Gate::UcRy {
            controls,
            target,
            angles,
        } => {
            let l = controls.len();
            let mut m = mask;
            for &q in controls {
                m |= 1 << q;
            }
            for (j, &a) in angles.iter().enumerate() {
                let mut v = val;
                for (k, &q) in controls.iter().enumerate() {
                    if j >> (l - 1 - k) & 1 == 1 {
                        v |= 1 << q;
                    }
                }
                apply_1q(state, *target, &mat_ry(a), m, v);
            }
        }
        g => {
            let (q, m) = g.single_qubit().expect("single-qubit gate");
            apply_1q(state, q, &m, mask, val);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cnot_matrix() {
        let mut c = Circuit::new(2);
        c.push(Gate::Cnot(0, 1));
        let u = c.unitary().unwrap();
        // |01> (q0=1) -> |11>
        assert_eq!(u[(3, 1)], C1);
        assert_eq!(u[(0, 0)], C1);
        assert_eq!(u[(1, 3)], C1);
    }

    #[test]
    fn dagger_inverts() {
        let mut c = Circuit::new(3);
        c.push(Gate::H(0));
        c.push(Gate::Rx(1, 0.3));
        c.push(Gate::Mc {
            controls: vec![(0, true), (2, false)],
            body: vec![Gate::Ry(1, 0.7), Gate::Phase(1, 0.2)],
        });
        c.push(Gate::UcRy {
            controls: vec![0, 1],
            target: 2,
            angles: vec![0.1, 0.2, 0.3, 0.4],
        });
        c.push(Gate::GlobalPhase(0.4));
        let u = c.unitary().unwrap();
        let ud = c.dagger().unitary().unwrap();
        let prod = ud * u;
        assert!(crate::dense::max_abs(&(prod - DenseOperator::identity(8, 8))) < 1e-14);
    }

    #[test]
    fn ucry_pattern_order() {
        // controls[0] is the MSB: pattern 2 means controls[0]=1, controls[1]=0
        let mut c = Circuit::new(3);
        c.push(Gate::UcRy {
            controls: vec![0, 1],
            target: 2,
            angles: vec![0.0, 0.0, std::f64::consts::PI, 0.0],
        });
        let mut s = vec![C0; 8];
        s[1] = C1; // q0 = 1
        c.apply(&mut s);
        assert!((s[5].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn controlled_gate_count_counts_body() {
        let mut c = Circuit::new(3);
        c.push(Gate::X(0));
        c.push(Gate::Mc {
            controls: vec![(0, true)],
            body: vec![Gate::X(1), Gate::Z(2)],
        });
        assert_eq!(c.controlled_gate_count(), 2);
    }

    #[test]
    fn ft_gates_match_dense() {
        for n in 1..=4 {
            let q: Vec<usize> = (0..n).collect();
            let mut c = Circuit::new(n);
            c.extend(symmetric_ft_gates(&q));
            let u = c.unitary().unwrap();
            let want = crate::dense::symmetric_ft(1 << n);
            assert!(crate::dense::max_abs(&(u - want)) < 1e-12, "n={n}");
        }
    }
}
