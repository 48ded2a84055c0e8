//! LCU block encodings: PREP by a binary tree of uniformly controlled Ry,
//! SEL as index-controlled Pauli strings.
//!
//! Qubit layout: system qubits `0..n`, index register `n..n+k` (bit `b` of the
//! branch index on qubit `n+b`). The identity coefficient is split off as an
//! energy shift unless kept explicitly.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{symmetric_ft_gates, Circuit, Gate};
use crate::dense::DenseOperator;
use crate::error::{SimError, SimResult};
use crate::field::{Basis, DigitizedLattice};
use crate::pauli::{PauliOp, PauliString, PauliSum};

/// Largest `n + k` accepted for block encodings.
pub const MAX_BE_QUBITS: usize = 14;

const COEFF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LcuMethod {
    Naive,
    Ft,
}

impl LcuMethod {
    pub fn name(self) -> &'static str {
        match self {
            LcuMethod::Naive => "naive",
            LcuMethod::Ft => "ft",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityHandling {
    /// Identity coefficient becomes `energy_shift`.
    Drop,
    /// Identity is an ordinary LCU branch.
    Keep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LcuTerm {
    pub pauli: String,
    pub beta: f64,
    pub negative: bool,
    pub basis: Basis,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct BlockEncoding {
    pub method: LcuMethod,
    pub n_system: usize,
    pub k: usize,
    pub alpha: f64,
    pub energy_shift: f64,
    pub terms: Vec<LcuTerm>,
    /// `beta` per branch index, zero for unused indices.
    pub weights: Vec<f64>,
    pub prep: Vec<Gate>,
    pub sel: Vec<Gate>,
    /// SEL gates that need no control in a controlled SEL: the FT pair
    /// around the momentum branches cancels whenever those branches idle.
    pub sel_bare: Vec<bool>,
}

/// How the ft method wraps its momentum branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FtWrap {
    /// Plain FT pair, never controlled.
    Bare,
    /// FT pair controlled on the basis tag bit.
    Tagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LcuOptions {
    pub identity: IdentityHandling,
    pub ft_wrap: FtWrap,
}

impl Default for LcuOptions {
    fn default() -> Self {
        LcuOptions {
            identity: IdentityHandling::Drop,
            ft_wrap: FtWrap::Bare,
        }
    }
}

/// Binary-tree state preparation of `sqrt(w_i / sum w)` on `qubits` (LSB first).
pub fn prep_gates(weights: &[f64], qubits: &[usize]) -> Vec<Gate> {
    let k = qubits.len();
    assert_eq!(weights.len(), 1 << k);
    let mut out = Vec::with_capacity(k);
    for level in 0..k {
        let target = qubits[k - 1 - level];
        let span = 1usize << (k - level);
        let angles: Vec<f64> = (0..1usize << level)
            .map(|j| {
                let block = &weights[j * span..(j + 1) * span];
                let left: f64 = block[..span / 2].iter().sum();
                let right: f64 = block[span / 2..].iter().sum();
                2.0 * right.max(0.0).sqrt().atan2(left.max(0.0).sqrt())
            })
            .collect();
        if level == 0 {
            out.push(Gate::Ry(target, angles[0]));
        } else {
            out.push(Gate::UcRy {
                controls: (0..level).map(|i| qubits[k - 1 - i]).collect(),
                target,
                angles,
            });
        }
    }
    out
}

/// PREP for `betas` on `ceil(log2 M)` fresh qubits.
pub fn build_prep(betas: &[f64]) -> SimResult<Circuit> {
    if betas.iter().any(|&b| b <= 0.0 || !b.is_finite()) {
        return Err(SimError::BadArgs("PREP weights must be positive".into()));
    }
    let k = index_bits(betas.len());
    let mut w = betas.to_vec();
    w.resize(1 << k, 0.0);
    let qubits: Vec<usize> = (0..k).collect();
    let mut c = Circuit::new(k);
    c.extend(prep_gates(&w, &qubits));
    Ok(c)
}

fn index_bits(m: usize) -> usize {
    if m <= 1 {
        0
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

fn pauli_gates(p: &PauliString) -> Vec<Gate> {
    p.ops()
        .iter()
        .enumerate()
        .filter_map(|(q, op)| match op {
            PauliOp::I => None,
            PauliOp::X => Some(Gate::X(q)),
            PauliOp::Y => Some(Gate::Y(q)),
            PauliOp::Z => Some(Gate::Z(q)),
        })
        .collect()
}

struct Branch {
    pauli: PauliString,
    coeff: f64,
    basis: Basis,
}

fn real_terms(ps: &PauliSum, keep_identity: bool, basis: Basis) -> SimResult<(Vec<Branch>, f64)> {
    let mut shift = 0.0;
    let mut out = Vec::new();
    for (p, c) in ps.terms() {
        if c.im.abs() > 1e-9 * c.norm().max(1.0) {
            return Err(SimError::NonHermitian(c.im.abs()));
        }
        if p.is_identity() && !keep_identity {
            shift += c.re;
            continue;
        }
        if c.re.abs() <= COEFF_TOL {
            continue;
        }
        out.push(Branch {
            pauli: p.clone(),
            coeff: c.re,
            basis,
        });
    }
    Ok((out, shift))
}

impl BlockEncoding {
    /// Plain Pauli LCU of a Hermitian `PauliSum`.
    pub fn from_pauli_sum(ps: &PauliSum, identity: IdentityHandling) -> SimResult<BlockEncoding> {
        let (branches, shift) = real_terms(ps, identity == IdentityHandling::Keep, Basis::Field)?;
        let k = index_bits(branches.len());
        let slots: Vec<usize> = (0..branches.len()).collect();
        Self::assemble(LcuMethod::Naive, ps.n(), k, branches, slots, shift, None)
    }

    fn assemble(
        method: LcuMethod,
        n: usize,
        k: usize,
        branches: Vec<Branch>,
        slots: Vec<usize>,
        shift: f64,
        ft: Option<(usize, Vec<Gate>, FtWrap)>,
    ) -> SimResult<BlockEncoding> {
        if n + k > MAX_BE_QUBITS {
            return Err(SimError::TooLarge {
                what: "block-encoding qubits",
                got: n + k,
                limit: MAX_BE_QUBITS,
            });
        }
        let idx: Vec<usize> = (n..n + k).collect();
        let mut weights = vec![0.0; 1 << k];
        let mut terms = Vec::with_capacity(branches.len());
        let mut field_sel = Vec::new();
        let mut mom_sel = Vec::new();
        for (b, &slot) in branches.iter().zip(&slots) {
            weights[slot] = b.coeff.abs();
            let controls: Vec<(usize, bool)> = (0..k).map(|j| (idx[j], slot >> j & 1 == 1)).collect();
            let mut body = pauli_gates(&b.pauli);
            if b.coeff < 0.0 {
                body.push(Gate::GlobalPhase(std::f64::consts::PI));
            }
            let g = Gate::Mc { controls, body };
            match b.basis {
                Basis::Field => field_sel.push(g),
                Basis::Momentum => mom_sel.push(g),
            }
            terms.push(LcuTerm {
                pauli: b.pauli.label(),
                beta: b.coeff.abs(),
                negative: b.coeff < 0.0,
                basis: b.basis,
                index: slot,
            });
        }
        let mut sel_bare = vec![false; field_sel.len()];
        let mut sel = field_sel;
        let n_mom = mom_sel.len();
        match ft {
            Some((tag, ft_gates, FtWrap::Tagged)) => {
                let ft_dag: Vec<Gate> = ft_gates.iter().rev().map(|g| g.dagger()).collect();
                sel.push(Gate::Mc {
                    controls: vec![(tag, true)],
                    body: ft_dag,
                });
                sel.extend(mom_sel);
                sel.push(Gate::Mc {
                    controls: vec![(tag, true)],
                    body: ft_gates,
                });
                sel_bare.resize(sel.len(), false);
            }
            Some((_, ft_gates, FtWrap::Bare)) => {
                let ft_dag: Vec<Gate> = ft_gates.iter().rev().map(|g| g.dagger()).collect();
                sel_bare.extend(std::iter::repeat_n(true, ft_dag.len()));
                sel.extend(ft_dag);
                sel_bare.extend(std::iter::repeat_n(false, n_mom));
                sel.extend(mom_sel);
                sel_bare.extend(std::iter::repeat_n(true, ft_gates.len()));
                sel.extend(ft_gates);
            }
            None => {
                sel.extend(mom_sel);
                sel_bare.resize(sel.len(), false);
            }
        }
        let alpha = weights.iter().sum();
        let prep = prep_gates(&weights, &idx);
        Ok(BlockEncoding {
            method,
            n_system: n,
            k,
            alpha,
            energy_shift: shift,
            terms,
            weights,
            prep,
            sel,
            sel_bare,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_system + self.k
    }

    pub fn index_qubits(&self) -> Vec<usize> {
        (self.n_system..self.n_system + self.k).collect()
    }

    fn circuit(&self, gates: Vec<Gate>) -> Circuit {
        let mut c = Circuit::new(self.n_qubits())
            .with_register("system", 0, self.n_system)
            .with_register("index", self.n_system, self.k);
        c.extend(gates);
        c
    }

    pub fn prep_circuit(&self) -> Circuit {
        self.circuit(self.prep.clone())
    }

    pub fn sel_circuit(&self) -> Circuit {
        self.circuit(self.sel.clone())
    }

    /// PREP, SEL, PREP dagger.
    pub fn assembled(&self) -> Circuit {
        let mut g = self.prep.clone();
        g.extend(self.sel.iter().cloned());
        g.extend(self.prep.iter().rev().map(|g| g.dagger()));
        self.circuit(g)
    }

    /// `PREP|0>` on the index register, computed from the weights.
    pub fn signal_state(&self) -> Vec<Complex64> {
        if self.alpha == 0.0 {
            let mut v = vec![Complex64::new(0.0, 0.0); 1 << self.k];
            v[0] = Complex64::new(1.0, 0.0);
            return v;
        }
        self.weights
            .iter()
            .map(|w| Complex64::new((w / self.alpha).sqrt(), 0.0))
            .collect()
    }

    /// Number of SEL branches by basis.
    pub fn branch_counts(&self) -> (usize, usize) {
        let m = self.terms.iter().filter(|t| t.basis == Basis::Momentum).count();
        (self.terms.len() - m, m)
    }
}

/// LCU of the lattice Hamiltonian with the identity split off.
pub fn build_lcu(lat: &DigitizedLattice, method: LcuMethod) -> SimResult<BlockEncoding> {
    build_lcu_with(lat, method, LcuOptions::default())
}

pub fn build_lcu_with(lat: &DigitizedLattice, method: LcuMethod, opts: LcuOptions) -> SimResult<BlockEncoding> {
    let keep = opts.identity == IdentityHandling::Keep;
    let n = lat.n_qubits;
    match method {
        LcuMethod::Naive => {
            let h = lat.dense_hamiltonian()?;
            let ps = PauliSum::decompose_hermitian(&h)?;
            let (branches, shift) = real_terms(&ps, keep, Basis::Field)?;
            let k = index_bits(branches.len());
            let slots = (0..branches.len()).collect();
            BlockEncoding::assemble(method, n, k, branches, slots, shift, None)
        }
        LcuMethod::Ft => {
            // FT conjugation maps the identity to itself, so all identity
            // coefficients merge into one field-basis identity string.
            let mut field = lat.field_part();
            let mut mom = PauliSum::new(n);
            for (_, p) in lat.momentum_parts() {
                mom = mom.add(&p);
            }
            let id = PauliString::identity(n);
            field.add_term(id.clone(), mom.identity_coeff());
            let mom = mom.without_identity();
            let (mut fb, shift) = real_terms(&field, keep, Basis::Field)?;
            let (mb, _) = real_terms(&mom, keep, Basis::Momentum)?;
            if mb.is_empty() {
                let k = index_bits(fb.len());
                let slots = (0..fb.len()).collect();
                return BlockEncoding::assemble(method, n, k, fb, slots, shift, None);
            }
            let half = index_bits(fb.len().max(mb.len()));
            let k = half + 1;
            let mut slots: Vec<usize> = (0..fb.len()).collect();
            slots.extend((0..mb.len()).map(|j| (1 << half) + j));
            let mut ft = Vec::new();
            for s in 0..lat.n_sites {
                ft.extend(symmetric_ft_gates(&lat.site_qubits(s)));
            }
            fb.extend(mb);
            BlockEncoding::assemble(method, n, k, fb, slots, shift, Some((n + half, ft, opts.ft_wrap)))
        }
    }
}

/// Apply `c` to the inputs `anc (x) e_a` for every system basis state `a` and
/// project the output onto `bra (x) 1`. Ancillas occupy the high qubits.
pub fn project_block(
    c: &Circuit,
    n_sys: usize,
    ket: &[Complex64],
    bra: &[Complex64],
) -> SimResult<DenseOperator> {
    let ds = 1usize << n_sys;
    let da = 1usize << (c.n_qubits - n_sys);
    if ket.len() != da || bra.len() != da {
        return Err(SimError::BadDim(ket.len()));
    }
    if c.n_qubits > 20 {
        return Err(SimError::TooLarge {
            what: "simulated qubits",
            got: c.n_qubits,
            limit: 20,
        });
    }
    let cols: Vec<Vec<Complex64>> = (0..ds)
        .into_par_iter()
        .map(|a| {
            let mut v = vec![Complex64::new(0.0, 0.0); ds * da];
            for (i, g) in ket.iter().enumerate() {
                v[i * ds + a] = *g;
            }
            c.apply(&mut v);
            (0..ds)
                .map(|r| (0..da).map(|i| bra[i].conj() * v[i * ds + r]).sum())
                .collect()
        })
        .collect();
    Ok(DenseOperator::from_fn(ds, ds, |r, a| cols[a][r]))
}

fn zero_state(k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << k];
    v[0] = Complex64::new(1.0, 0.0);
    v
}

/// `<0|PREP^dagger SEL PREP|0>` on the system, equal to `(H - shift)/alpha`.
pub fn extract_block(be: &BlockEncoding) -> SimResult<DenseOperator> {
    let z = zero_state(be.k);
    project_block(&be.assembled(), be.n_system, &z, &z)
}

/// Block of SEL alone with the signal state `PREP|0>`.
pub fn extract_block_sel(be: &BlockEncoding) -> SimResult<DenseOperator> {
    let g = be.signal_state();
    project_block(&be.sel_circuit(), be.n_system, &g, &g)
}

/// `alpha * block + shift`, which should reproduce the Hamiltonian.
pub fn reconstruct(be: &BlockEncoding, block: &DenseOperator) -> DenseOperator {
    let d = block.nrows();
    block * Complex64::new(be.alpha, 0.0) + DenseOperator::identity(d, d) * Complex64::new(be.energy_shift, 0.0)
}

/// Dense check of one block encoding of a lattice.
#[derive(Debug, Clone, Serialize)]
pub struct BeReport {
    pub method: LcuMethod,
    pub options: LcuOptions,
    pub alpha: f64,
    pub energy_shift: f64,
    pub k: usize,
    pub n_qubits: usize,
    pub field_branches: usize,
    pub momentum_branches: usize,
    /// `||alpha <0|U|0> + shift - H||`.
    pub error: f64,
}

pub fn verify(lat: &DigitizedLattice, method: LcuMethod, opts: LcuOptions) -> SimResult<BeReport> {
    let be = build_lcu_with(lat, method, opts)?;
    if be.n_qubits() > MAX_BE_QUBITS {
        return Err(SimError::TooLarge {
            what: "block-encoding qubits",
            got: be.n_qubits(),
            limit: MAX_BE_QUBITS,
        });
    }
    let h = lat.dense_hamiltonian()?;
    let rec = reconstruct(&be, &extract_block(&be)?);
    let (field_branches, momentum_branches) = be.branch_counts();
    Ok(BeReport {
        method,
        options: opts,
        alpha: be.alpha,
        energy_shift: be.energy_shift,
        k: be.k,
        n_qubits: be.n_qubits(),
        field_branches,
        momentum_branches,
        error: crate::dense::spectral_norm(&(rec - h)),
    })
}

/// Largest entry of `SEL^2 - 1`, column by column.
pub fn sel_squared_error(be: &BlockEncoding) -> f64 {
    let c = be.sel_circuit();
    let dim = 1usize << c.n_qubits;
    (0..dim)
        .into_par_iter()
        .map(|col| {
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            v[col] = Complex64::new(1.0, 0.0);
            c.apply(&mut v);
            c.apply(&mut v);
            v[col] -= Complex64::new(1.0, 0.0);
            v.iter().map(|z| z.norm()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Probability that the index register reads `|0...0>` after the assembled
/// circuit acts on `|0>|psi>`.
pub fn success_probability(be: &BlockEncoding, psi: &[Complex64]) -> f64 {
    let c = be.assembled();
    let ds = 1usize << be.n_system;
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << c.n_qubits];
    v[..ds].copy_from_slice(psi);
    c.apply(&mut v);
    v[..ds].iter().map(|z| z.norm_sqr()).sum()
}
