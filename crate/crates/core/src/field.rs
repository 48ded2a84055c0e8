//! Digitized lattice phi^4 Hamiltonian.
//!
//! Each site carries `n_q` qubits (site `s` owns qubits `s*n_q .. (s+1)*n_q`).
//! The field takes `2^n_q` evenly spaced values in `[-phi_max, phi_max]`,
//! ascending with the basis index. The conjugate momentum is diagonal in the
//! basis reached by the centered Fourier transform, `pi = FT pi_p FT^dagger`.
//! By default `pi_max = pi/d_phi`; `MomentumGrid::Conjugate` instead uses the
//! spacing `2 pi/(N d_phi)` that makes the FT an exact conjugate pair.
//!
//! The Hamiltonian is
//! `sum_i [pi_i^2/2 + m^2 phi_i^2/2 + lambda/24 phi_i^4] + sum_<ij> (phi_i - phi_j)^2/2`
//! with one term per site and one term per link.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::dense::{self, DenseOperator};
use crate::error::{SimError, SimResult};
use crate::pauli::{PauliOp, PauliString, PauliSum, PRUNE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Digitization {
    pub n_q: usize,
    pub phi_max: f64,
    pub d_phi: f64,
    pub pi_max: f64,
    pub d_pi: f64,
    pub grid: MomentumGrid,
}

/// How the momentum values are spaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentumGrid {
    /// `pi_max = pi/d_phi`, `d_pi = 2 pi_max/(N-1)`.
    #[default]
    Cutoff,
    /// `d_pi = 2 pi/(N d_phi)`; ground energies converge exponentially in `n_q`.
    Conjugate,
}

pub fn digitize(n_q: usize) -> SimResult<Digitization> {
    digitize_with(n_q, MomentumGrid::Cutoff)
}

pub fn digitize_with(n_q: usize, grid: MomentumGrid) -> SimResult<Digitization> {
    if !(1..=8).contains(&n_q) {
        return Err(SimError::BadArgs(format!("n_q must be in 1..=8, got {n_q}")));
    }
    let nn = (1usize << n_q) as f64;
    let phi_max = nn * (2.0 * std::f64::consts::PI / (2.0 * nn + 1.0)).sqrt();
    let d_phi = 2.0 * phi_max / (nn - 1.0);
    let (pi_max, d_pi) = match grid {
        MomentumGrid::Cutoff => {
            let pi_max = std::f64::consts::PI / d_phi;
            (pi_max, 2.0 * pi_max / (nn - 1.0))
        }
        MomentumGrid::Conjugate => {
            let d_pi = 2.0 * std::f64::consts::PI / (nn * d_phi);
            (0.5 * (nn - 1.0) * d_pi, d_pi)
        }
    };
    Ok(Digitization {
        n_q,
        phi_max,
        d_phi,
        pi_max,
        d_pi,
        grid,
    })
}

impl Digitization {
    pub fn levels(&self) -> usize {
        1 << self.n_q
    }

    pub fn phi_values(&self) -> Vec<f64> {
        (0..self.levels()).map(|b| -self.phi_max + b as f64 * self.d_phi).collect()
    }

    pub fn pi_values(&self) -> Vec<f64> {
        (0..self.levels()).map(|b| -self.pi_max + b as f64 * self.d_pi).collect()
    }

    /// Field operator on `n_q` local qubits.
    pub fn phi_op(&self) -> PauliSum {
        PauliSum::decompose_evenly_spaced_diagonal(self.n_q, -self.phi_max, self.d_phi)
    }

    /// Momentum operator in its own eigenbasis, on `n_q` local qubits.
    pub fn pi_op(&self) -> PauliSum {
        PauliSum::decompose_evenly_spaced_diagonal(self.n_q, -self.pi_max, self.d_pi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Field,
    Momentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    Pi2,
    Phi2,
    Phi4,
    Link,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// One diagonal piece of a term. `pauli` acts on the full register; for
/// `Basis::Momentum` it is diagonal after conjugation by the site FT.
#[derive(Debug, Clone)]
pub struct Piece {
    pub kind: PieceKind,
    pub basis: Basis,
    pub sites: Vec<usize>,
    pub pauli: PauliSum,
}

/// A Hamiltonian term H_J: one site or one link.
#[derive(Debug, Clone)]
pub struct Term {
    pub sites: Vec<usize>,
    pub pieces: Vec<Piece>,
}

impl Term {
    pub fn is_link(&self) -> bool {
        self.sites.len() == 2
    }

    pub fn pauli_count(&self) -> usize {
        self.pieces.iter().map(|p| p.pauli.len()).sum()
    }

    pub fn one_norm(&self) -> f64 {
        self.pieces.iter().map(|p| p.pauli.one_norm()).sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.pieces.iter().map(|p| p.pauli.max_abs_coeff()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct DigitizedLattice {
    pub dims: Vec<usize>,
    pub d: usize,
    pub m: f64,
    pub lambda: f64,
    pub dig: Digitization,
    pub boundary: Boundary,
    pub n_sites: usize,
    pub n_qubits: usize,
    /// Site terms (ascending site) followed by link terms.
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HamiltonianMetrics {
    pub n_h: usize,
    pub n_p: usize,
    pub c_p: f64,
    pub norm1: f64,
    pub induced1: f64,
    pub n_ind: usize,
    pub n_lambda: usize,
    pub d: usize,
    /// Largest per-term one-norm, an upper bound on max ||H_J||.
    pub max_term_norm: f64,
    pub linear_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeOptions {
    pub boundary: Boundary,
    pub grid: MomentumGrid,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions {
            boundary: Boundary::Open,
            grid: MomentumGrid::Cutoff,
        }
    }
}

pub fn build_hamiltonian(dims: &[usize], m: f64, lambda: f64, n_q: usize) -> SimResult<DigitizedLattice> {
    build_hamiltonian_with(dims, m, lambda, n_q, LatticeOptions::default())
}

fn clean(ps: PauliSum) -> PauliSum {
    let scale = ps.max_abs_coeff().max(1.0);
    ps.pruned(PRUNE_TOL * scale)
}

pub fn build_hamiltonian_with(
    dims: &[usize],
    m: f64,
    lambda: f64,
    n_q: usize,
    opts: LatticeOptions,
) -> SimResult<DigitizedLattice> {
    let boundary = opts.boundary;
    if dims.is_empty() || dims.contains(&0) {
        return Err(SimError::BadArgs("lattice dimensions must be positive".into()));
    }
    let dig = digitize_with(n_q, opts.grid)?;
    let n_sites: usize = dims.iter().product();
    let n_qubits = n_sites * n_q;
    if n_qubits > 63 {
        return Err(SimError::TooLarge {
            what: "qubits",
            got: n_qubits,
            limit: 63,
        });
    }
    let half = Complex64::new(0.5, 0.0);
    let phi = dig.phi_op();
    let pi = dig.pi_op();
    let phi2 = phi.mul(&phi);
    let phi4 = phi2.mul(&phi2);
    let pi2_piece = clean(pi.mul(&pi).scale(half));
    let phi2_piece = clean(phi2.scale(Complex64::new(0.5 * m * m, 0.0)));
    let phi4_piece = clean(phi4.scale(Complex64::new(lambda / 24.0, 0.0)));

    let site_map = |s: usize| -> Vec<usize> { (s * n_q..(s + 1) * n_q).collect() };

    let mut terms = Vec::new();
    for s in 0..n_sites {
        let map = site_map(s);
        let mut pieces = Vec::new();
        for (kind, basis, ps) in [
            (PieceKind::Pi2, Basis::Momentum, &pi2_piece),
            (PieceKind::Phi2, Basis::Field, &phi2_piece),
            (PieceKind::Phi4, Basis::Field, &phi4_piece),
        ] {
            if ps.is_empty() {
                continue;
            }
            pieces.push(Piece {
                kind,
                basis,
                sites: vec![s],
                pauli: ps.embed(&map, n_qubits),
            });
        }
        terms.push(Term {
            sites: vec![s],
            pieces,
        });
    }

    for (i, j) in links(dims, boundary) {
        let pi_ = phi.embed(&site_map(i), n_qubits);
        let pj = phi.embed(&site_map(j), n_qubits);
        let diff = pi_.add(&pj.scale(Complex64::new(-1.0, 0.0)));
        let link = clean(diff.mul(&diff).scale(half));
        terms.push(Term {
            sites: vec![i, j],
            pieces: vec![Piece {
                kind: PieceKind::Link,
                basis: Basis::Field,
                sites: vec![i, j],
                pauli: link,
            }],
        });
    }

    Ok(DigitizedLattice {
        dims: dims.to_vec(),
        d: dims.len(),
        m,
        lambda,
        dig,
        boundary,
        n_sites,
        n_qubits,
        terms,
    })
}

/// Nearest-neighbour links; site index has the first dimension fastest.
pub fn links(dims: &[usize], boundary: Boundary) -> Vec<(usize, usize)> {
    let n_sites: usize = dims.iter().product();
    let mut strides = vec![1usize; dims.len()];
    for k in 1..dims.len() {
        strides[k] = strides[k - 1] * dims[k - 1];
    }
    let mut out = Vec::new();
    for s in 0..n_sites {
        for (k, &l) in dims.iter().enumerate() {
            let c = (s / strides[k]) % l;
            if c + 1 < l {
                out.push((s, s + strides[k]));
            } else if boundary == Boundary::Periodic && l > 2 {
                out.push((s + strides[k] - l * strides[k], s));
            }
        }
    }
    out.sort();
    out
}

impl DigitizedLattice {
    pub fn site_qubits(&self, s: usize) -> Vec<usize> {
        (s * self.dig.n_q..(s + 1) * self.dig.n_q).collect()
    }

    pub fn site_terms(&self) -> &[Term] {
        &self.terms[..self.n_sites]
    }

    pub fn link_terms(&self) -> &[Term] {
        &self.terms[self.n_sites..]
    }

    fn check_dense(&self) -> SimResult<()> {
        if self.n_qubits > crate::pauli::MAX_DENSE_QUBITS {
            return Err(SimError::TooLarge {
                what: "qubits",
                got: self.n_qubits,
                limit: crate::pauli::MAX_DENSE_QUBITS,
            });
        }
        Ok(())
    }

    /// FT acting on every qubit of site `s`, as a full-register operator.
    pub fn site_ft(&self, s: usize) -> SimResult<DenseOperator> {
        dense::embed(&dense::symmetric_ft(self.dig.levels()), &self.site_qubits(s), self.n_qubits)
    }

    pub fn piece_matrix(&self, p: &Piece) -> SimResult<DenseOperator> {
        self.check_dense()?;
        let mut m = p.pauli.to_matrix()?;
        if p.basis == Basis::Momentum {
            let ft = dense::symmetric_ft(self.dig.levels());
            let q = self.site_qubits(p.sites[0]);
            dense::apply_local(&mut m, &ft, &q);
            let mut mt = m.adjoint();
            dense::apply_local(&mut mt, &ft, &q);
            m = mt.adjoint();
        }
        Ok(m)
    }

    /// A piece as a dense operator on its own qubits (ascending order).
    pub fn piece_local(&self, p: &Piece) -> SimResult<(Vec<usize>, DenseOperator)> {
        let mut qubits: Vec<usize> = p.sites.iter().flat_map(|&s| self.site_qubits(s)).collect();
        qubits.sort_unstable();
        let mut local = PauliSum::new(qubits.len());
        for (ps, c) in p.pauli.terms() {
            let ops = ps.ops();
            if ops.iter().enumerate().any(|(q, op)| *op != PauliOp::I && !qubits.contains(&q)) {
                return Err(SimError::BadSites(format!("piece acts outside sites {:?}", p.sites)));
            }
            local.add_term(PauliString::new(qubits.iter().map(|&q| ops[q]).collect()), *c);
        }
        let mut m = local.to_matrix()?;
        if p.basis == Basis::Momentum {
            let ft = dense::symmetric_ft(self.dig.levels());
            let q: Vec<usize> = (0..self.dig.n_q).collect();
            dense::apply_local(&mut m, &ft, &q);
            let mut mt = m.adjoint();
            dense::apply_local(&mut mt, &ft, &q);
            m = mt.adjoint();
        }
        Ok((qubits, m))
    }

    pub fn term_matrix(&self, j: usize) -> SimResult<DenseOperator> {
        let dim = 1usize << self.n_qubits;
        let mut m = DenseOperator::zeros(dim, dim);
        for p in &self.terms[j].pieces {
            m += self.piece_matrix(p)?;
        }
        Ok(m)
    }

    pub fn dense_hamiltonian(&self) -> SimResult<DenseOperator> {
        self.check_dense()?;
        let dim = 1usize << self.n_qubits;
        let mut m = DenseOperator::zeros(dim, dim);
        for j in 0..self.terms.len() {
            m += self.term_matrix(j)?;
        }
        Ok(m)
    }

    /// Sum of all field-basis pieces.
    pub fn field_part(&self) -> PauliSum {
        let mut out = PauliSum::new(self.n_qubits);
        for t in &self.terms {
            for p in t.pieces.iter().filter(|p| p.basis == Basis::Field) {
                out = out.add(&p.pauli);
            }
        }
        clean(out)
    }

    /// Momentum-basis pieces per site.
    pub fn momentum_parts(&self) -> Vec<(usize, PauliSum)> {
        self.terms
            .iter()
            .flat_map(|t| t.pieces.iter())
            .filter(|p| p.basis == Basis::Momentum)
            .map(|p| (p.sites[0], p.pauli.clone()))
            .collect()
    }

    /// Pieces in product-formula order: per site `[pi^2, phi^2, phi^4]`, then links.
    pub fn pf_pieces(&self) -> Vec<&Piece> {
        self.terms.iter().flat_map(|t| t.pieces.iter()).collect()
    }

    pub fn compute_metrics(&self) -> HamiltonianMetrics {
        let n_h = self.terms.len();
        let n_p = self.terms.iter().map(|t| t.pauli_count()).max().unwrap_or(0);
        let c_p = self.terms.iter().map(|t| t.max_abs_coeff()).fold(0.0, f64::max);
        let norm1 = self.terms.iter().map(|t| t.one_norm()).sum();
        let mut induced1: f64 = 0.0;
        let mut n_ind = 0;
        for s in 0..self.n_sites {
            let touching: Vec<&Term> = self.terms.iter().filter(|t| t.sites.contains(&s)).collect();
            induced1 = induced1.max(touching.iter().map(|t| t.one_norm()).sum());
            n_ind = n_ind.max(touching.len());
        }
        HamiltonianMetrics {
            n_h,
            n_p,
            c_p,
            norm1,
            induced1,
            n_ind,
            n_lambda: self.n_sites,
            d: self.d,
            max_term_norm: self.terms.iter().map(|t| t.one_norm()).fold(0.0, f64::max),
            linear_size: self.dims.iter().copied().max().unwrap_or(1),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<_> = self
            .terms
            .iter()
            .flat_map(|t| t.pieces.iter())
            .map(|p| {
                json!({
                    "sites": p.sites,
                    "kind": p.kind,
                    "basis": p.basis,
                    "pauli_sum": p.pauli.to_json_terms(),
                })
            })
            .collect();
        json!({
            "dims": self.dims,
            "d": self.d,
            "m": self.m,
            "lambda": self.lambda,
            "n_q": self.dig.n_q,
            "boundary": self.boundary,
            "digitization": self.dig,
            "terms": terms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digitize_values() {
        let d1 = digitize(1).unwrap();
        assert!((d1.phi_max - 2.0 * (2.0 * std::f64::consts::PI / 5.0).sqrt()).abs() < 1e-12);
        assert!((d1.phi_max - 2.2420).abs() < 1e-4);
        let d2 = digitize(2).unwrap();
        assert!((d2.phi_max - 3.3422).abs() < 1e-4);
        assert!((d2.d_phi - 2.2281).abs() < 1e-4);
        assert!((d2.pi_max - std::f64::consts::PI / d2.d_phi).abs() < 1e-14);
        let d8 = digitize(8).unwrap();
        let ratio = d8.phi_max * d8.d_phi / (2.0 * std::f64::consts::PI);
        assert!((ratio - 1.0).abs() < 0.05);
        assert!(digitize(0).is_err());
        assert!(digitize(9).is_err());
    }

    #[test]
    fn conjugate_grid_spacing() {
        let d = digitize_with(3, MomentumGrid::Conjugate).unwrap();
        assert!((d.d_phi * d.d_pi * 8.0 - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((d.pi_max - 3.5 * d.d_pi).abs() < 1e-12);
        assert_eq!(d.phi_max, digitize(3).unwrap().phi_max);
    }

    #[test]
    fn single_site_counts() {
        let lat = build_hamiltonian(&[1], 1.0, 0.0, 2).unwrap();
        let m = lat.compute_metrics();
        assert_eq!(m.n_h, 1);
        assert_eq!(m.n_ind, 1);
        assert_eq!(lat.terms[0].pieces.len(), 2);
    }

    #[test]
    fn chain_of_three() {
        let lat = build_hamiltonian(&[3], 1.0, 1.0, 1).unwrap();
        let m = lat.compute_metrics();
        assert_eq!(m.n_h, 5);
        assert_eq!(lat.link_terms().len(), 2);
        // middle site touches its own term and both links
        assert_eq!(m.n_ind, 3);
    }

    #[test]
    fn links_open_and_periodic() {
        assert_eq!(links(&[3], Boundary::Open), vec![(0, 1), (1, 2)]);
        assert_eq!(links(&[3], Boundary::Periodic), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(links(&[2, 2], Boundary::Open).len(), 4);
        assert_eq!(links(&[2], Boundary::Periodic).len(), 1);
    }

    #[test]
    fn phi4_dominates_pauli_count() {
        for n_q in 2..=4 {
            let lat = build_hamiltonian(&[1], 1.0, 32.0, n_q).unwrap();
            let t = &lat.terms[0];
            let counts: Vec<usize> = t.pieces.iter().map(|p| p.pauli.len()).collect();
            let phi4 = t.pieces.iter().find(|p| p.kind == PieceKind::Phi4).unwrap().pauli.len();
            assert_eq!(*counts.iter().max().unwrap(), phi4);
        }
    }

    #[test]
    fn every_term_is_local_to_two_adjacent_sites() {
        let lat = build_hamiltonian(&[3, 2], 1.0, 4.0, 1).unwrap();
        let ls = links(&[3, 2], Boundary::Open);
        for t in &lat.terms {
            assert!(t.sites.len() <= 2);
            if t.sites.len() == 2 {
                assert!(ls.contains(&(t.sites[0], t.sites[1])));
            }
            for p in &t.pieces {
                for q in p.pauli.support() {
                    assert!(t.sites.contains(&(q / lat.dig.n_q)));
                }
            }
        }
    }
}
