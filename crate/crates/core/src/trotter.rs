//! Suzuki product formulas.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::dense::{self, DenseOperator};
use crate::error::{SimError, SimResult};
use crate::field::{Basis, DigitizedLattice, HamiltonianMetrics};
use crate::fit::{linear_fit, LinearFit};
use crate::pauli::PauliSum;

/// Ordered `(term, coefficient)` exponentials of one step, repeated `r` times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingPlan {
    pub p: u32,
    pub term_count: usize,
    pub stages: Vec<(usize, f64)>,
    pub r: u64,
}

impl SplittingPlan {
    pub fn with_steps(mut self, r: u64) -> Self {
        self.r = r.max(1);
        self
    }

    /// Number of sweeps over all terms in one step.
    pub fn upsilon(&self) -> usize {
        self.stages.len() / self.term_count.max(1)
    }

    pub fn coefficient_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.term_count];
        for &(j, a) in &self.stages {
            s[j] += a;
        }
        s
    }
}

/// `u_k = 1 / (4 - 4^{1/(2k-1)})`.
pub fn suzuki_u(k: u32) -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / (2.0 * k as f64 - 1.0)))
}

fn s2(gamma: usize, x: f64) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = (0..gamma).map(|j| (j, x / 2.0)).collect();
    v.extend((0..gamma).rev().map(|j| (j, x / 2.0)));
    v
}

fn s2k(k: u32, gamma: usize, x: f64) -> Vec<(usize, f64)> {
    if k == 1 {
        return s2(gamma, x);
    }
    let u = suzuki_u(k);
    let outer = s2k(k - 1, gamma, u * x);
    let inner = s2k(k - 1, gamma, (1.0 - 4.0 * u) * x);
    let mut v = Vec::with_capacity(5 * outer.len());
    v.extend_from_slice(&outer);
    v.extend_from_slice(&outer);
    v.extend_from_slice(&inner);
    v.extend_from_slice(&outer);
    v.extend_from_slice(&outer);
    v
}

pub fn suzuki_plan(p: u32, gamma: usize) -> SimResult<SplittingPlan> {
    let stages = match p {
        1 => (0..gamma).map(|j| (j, 1.0)).collect(),
        2 | 4 | 6 | 8 => s2k(p / 2, gamma, 1.0),
        _ => return Err(SimError::UnsupportedOrder(p)),
    };
    Ok(SplittingPlan {
        p,
        term_count: gamma,
        stages,
        r: 1,
    })
}

/// A Hermitian term stored as eigenvalues plus the frame that diagonalizes it.
#[derive(Debug, Clone)]
pub struct PfTerm {
    pub eigvals: Vec<f64>,
    pub frame: Frame,
}

#[derive(Debug, Clone)]
pub enum Frame {
    /// Diagonal in the computational basis.
    Computational,
    /// `H = V D V^dagger` with `V` acting on a few qubits.
    Local { v: DenseOperator, qubits: Vec<usize> },
    /// Full eigenvector matrix.
    Full(DenseOperator),
}

/// Diagonal of a sum of Z strings.
pub fn z_diagonal(ps: &PauliSum) -> SimResult<Vec<f64>> {
    let dim = 1usize << ps.n();
    let mut d = vec![0.0; dim];
    for (p, c) in ps.terms() {
        let (x, z) = p.masks();
        if x != 0 {
            return Err(SimError::BadArgs(format!("string {p} is not diagonal")));
        }
        for (b, v) in d.iter_mut().enumerate() {
            let s = if (z & b as u64).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            *v += c.re * s;
        }
    }
    Ok(d)
}

impl PfTerm {
    pub fn from_dense(h: &DenseOperator) -> SimResult<Self> {
        let (vals, vecs) = dense::eigh(h)?;
        Ok(PfTerm {
            eigvals: vals,
            frame: Frame::Full(vecs),
        })
    }

    /// Left-multiply `m` by `exp(-i tau H)`.
    pub fn apply_exp(&self, m: &mut DenseOperator, tau: f64) {
        let phases: Vec<Complex64> = self.eigvals.iter().map(|&v| Complex64::from_polar(1.0, -v * tau)).collect();
        match &self.frame {
            Frame::Computational => dense::apply_diag(m, &phases),
            Frame::Local { v, qubits } => {
                dense::apply_local(m, &v.adjoint(), qubits);
                dense::apply_diag(m, &phases);
                dense::apply_local(m, v, qubits);
            }
            Frame::Full(v) => {
                let mut w = v.adjoint() * &*m;
                dense::apply_diag(&mut w, &phases);
                *m = v * w;
            }
        }
    }

    pub fn matrix(&self) -> DenseOperator {
        let d = dense::diag_matrix(&self.eigvals);
        match &self.frame {
            Frame::Computational => d,
            Frame::Local { v, qubits } => {
                let mut m = d;
                dense::apply_local(&mut m, v, qubits);
                let mut mt = m.adjoint();
                dense::apply_local(&mut mt, v, qubits);
                mt.adjoint()
            }
            Frame::Full(v) => v * d * v.adjoint(),
        }
    }
}

/// Lattice pieces in product-formula order.
pub fn lattice_terms(lat: &DigitizedLattice) -> SimResult<Vec<PfTerm>> {
    if lat.n_qubits > crate::pauli::MAX_DENSE_QUBITS {
        return Err(SimError::TooLarge {
            what: "qubits",
            got: lat.n_qubits,
            limit: crate::pauli::MAX_DENSE_QUBITS,
        });
    }
    lat.pf_pieces()
        .into_iter()
        .map(|p| {
            let eigvals = z_diagonal(&p.pauli)?;
            let frame = match p.basis {
                Basis::Field => Frame::Computational,
                Basis::Momentum => Frame::Local {
                    v: dense::symmetric_ft(lat.dig.levels()),
                    qubits: lat.site_qubits(p.sites[0]),
                },
            };
            Ok(PfTerm { eigvals, frame })
        })
        .collect()
}

fn mat_pow(u: &DenseOperator, mut r: u64) -> DenseOperator {
    let n = u.nrows();
    let mut acc = DMatrix::identity(n, n);
    let mut base = u.clone();
    while r > 0 {
        if r & 1 == 1 {
            acc = &base * &acc;
        }
        r >>= 1;
        if r > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// One step `S_p(t/r)`.
pub fn pf_step(terms: &[PfTerm], dt: f64, plan: &SplittingPlan) -> DenseOperator {
    let dim = terms[0].eigvals.len();
    let mut u = DenseOperator::identity(dim, dim);
    for &(j, a) in &plan.stages {
        terms[j].apply_exp(&mut u, a * dt);
    }
    u
}

/// `(S_p(t/r))^r`.
pub fn evolve_pf(terms: &[PfTerm], t: f64, plan: &SplittingPlan) -> SimResult<DenseOperator> {
    if terms.len() != plan.term_count {
        return Err(SimError::BadArgs(format!(
            "plan has {} terms but {} were given",
            plan.term_count,
            terms.len()
        )));
    }
    let step = pf_step(terms, t / plan.r as f64, plan);
    Ok(mat_pow(&step, plan.r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrotterErrorReport {
    pub r: u64,
    pub eps_measured: f64,
    pub eps_requested: Option<f64>,
}

pub fn measure_error(u_approx: &DenseOperator, h: &DenseOperator, t: f64) -> SimResult<f64> {
    let exact = dense::matrix_exp_hermitian(h, t)?;
    Ok(dense::spectral_norm(&(u_approx - exact)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrotterMode {
    Generic,
    SiteLocal,
    Geometric,
}

/// Trotter number from the selected bound with unit constants.
pub fn trotter_number(m: &HamiltonianMetrics, t: f64, eps: f64, p: u32, mode: TrotterMode) -> u64 {
    let pf = p as f64;
    let inv = 1.0 / pf;
    let r = match mode {
        TrotterMode::Generic => (m.induced1.powf(pf) * m.norm1).powf(inv) * t.powf(1.0 + inv) * eps.powf(-inv),
        TrotterMode::SiteLocal => {
            m.n_ind as f64 * (m.n_h as f64).powf(inv) * (m.n_p as f64 * m.c_p * t).powf(1.0 + inv) * eps.powf(-inv)
        }
        TrotterMode::Geometric => {
            (m.n_lambda as f64).powf(inv) * (m.n_p as f64 * m.c_p * t).powf(1.0 + inv) * eps.powf(-inv)
        }
    };
    if r.is_finite() {
        (r.ceil() as u64).max(1)
    } else {
        u64::MAX
    }
}

/// Per-exponential error budget `eps / (N_H r Upsilon)`.
pub fn exponential_budget(eps: f64, n_h: usize, r: u64, upsilon: usize) -> f64 {
    eps / (n_h as f64 * r as f64 * upsilon as f64)
}

/// Smallest `r` with measured error at most `eps`, by doubling then bisection.
pub fn min_steps_for_error(
    terms: &[PfTerm],
    exact: &DenseOperator,
    t: f64,
    plan: &SplittingPlan,
    eps: f64,
    r_max: u64,
) -> SimResult<(u64, f64)> {
    let err = |r: u64| -> SimResult<f64> {
        let u = evolve_pf(terms, t, &plan.clone().with_steps(r))?;
        Ok(dense::spectral_norm(&(u - exact)))
    };
    let mut hi = 1u64;
    let mut e_hi = err(hi)?;
    while e_hi > eps {
        if hi >= r_max {
            return Err(SimError::Infeasible(format!("no r <= {r_max} reaches error {eps:.1e}")));
        }
        hi = (hi * 2).min(r_max);
        e_hi = err(hi)?;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let e = err(mid)?;
        if e <= eps {
            hi = mid;
            e_hi = e;
        } else {
            lo = mid;
        }
    }
    Ok((hi, e_hi))
}

/// Single-step errors `||S_p(dt) - e^{-iH dt}||` and their log-log fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub p: u32,
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    pub fit: LinearFit,
}

pub fn order_check(lat: &DigitizedLattice, p: u32, dts: &[f64]) -> SimResult<OrderReport> {
    if dts.len() < 2 {
        return Err(SimError::BadArgs("order check needs at least 2 step sizes".into()));
    }
    let terms = lattice_terms(lat)?;
    let h = lat.dense_hamiltonian()?;
    let (vals, vecs) = dense::eigh(&h)?;
    let plan = suzuki_plan(p, terms.len())?;
    let errors: Vec<f64> = dts
        .iter()
        .map(|&dt| dense::spectral_norm(&(pf_step(&terms, dt, &plan) - dense::exp_from_eigh(&vals, &vecs, dt))))
        .collect();
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(OrderReport {
        p,
        dts: dts.to_vec(),
        errors,
        fit: linear_fit(&xs, &ys),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_and_second_order_plans() {
        let p1 = suzuki_plan(1, 2).unwrap();
        assert_eq!(p1.stages, vec![(0, 1.0), (1, 1.0)]);
        let p2 = suzuki_plan(2, 2).unwrap();
        assert_eq!(p2.stages, vec![(0, 0.5), (1, 0.5), (1, 0.5), (0, 0.5)]);
        assert_eq!(p2.upsilon(), 2);
    }

    #[test]
    fn fourth_order_structure() {
        let u = suzuki_u(2);
        assert!((u - 0.414_490_771_794_375_7).abs() < 1e-12);
        let p4 = suzuki_plan(4, 2).unwrap();
        assert_eq!(p4.stages.len(), 5 * 4);
        assert!((p4.stages[0].1 - u / 2.0).abs() < 1e-15);
        assert_eq!(p4.upsilon(), 10);
    }

    #[test]
    fn coefficients_close_for_all_orders() {
        for p in [1, 2, 4, 6, 8] {
            for gamma in [1, 2, 5] {
                let plan = suzuki_plan(p, gamma).unwrap();
                for s in plan.coefficient_sums() {
                    assert!((s - 1.0).abs() < 1e-14, "p={p} sum={s}");
                }
                let ups = if p == 1 { 1 } else { 2 * 5usize.pow(p / 2 - 1) };
                assert_eq!(plan.upsilon(), ups);
            }
        }
    }

    #[test]
    fn order_slopes_single_site() {
        let lat = crate::field::build_hamiltonian(&[1], 1.0, 32.0, 2).unwrap();
        let dts = [3.125e-3, 1.5625e-3, 7.8125e-4, 3.90625e-4];
        for p in [1, 2, 4] {
            let rep = order_check(&lat, p, &dts).unwrap();
            let want = p as f64 + 1.0;
            assert!((rep.fit.slope - want).abs() < 0.2, "p={p} slope {}", rep.fit.slope);
        }
    }

    #[test]
    fn odd_orders_rejected() {
        assert_eq!(suzuki_plan(3, 2).unwrap_err().code(), "UNSUPPORTED_ORDER");
        assert_eq!(suzuki_plan(5, 2).unwrap_err().code(), "UNSUPPORTED_ORDER");
    }

    fn metrics() -> HamiltonianMetrics {
        HamiltonianMetrics {
            n_h: 3,
            n_p: 10,
            c_p: 2.0,
            norm1: 30.0,
            induced1: 20.0,
            n_ind: 2,
            n_lambda: 2,
            d: 1,
            max_term_norm: 12.0,
            linear_size: 2,
        }
    }

    #[test]
    fn trotter_number_limits() {
        let m = metrics();
        assert_eq!(trotter_number(&m, 1e-3, 1e300, 2, TrotterMode::SiteLocal), 1);
        let r1 = trotter_number(&m, 1.0, 1e-2, 1, TrotterMode::Generic);
        let r2 = trotter_number(&m, 2.0, 1e-2, 1, TrotterMode::Generic);
        let ratio = r2 as f64 / r1 as f64;
        assert!((ratio - 4.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn trotter_number_formula() {
        let m = metrics();
        let r = trotter_number(&m, 1.0, 1e-4, 2, TrotterMode::SiteLocal);
        let oracle = 2.0 * 3f64.sqrt() * (20.0f64).powf(1.5) * 100.0;
        assert_eq!(r, oracle.ceil() as u64);
        let g = trotter_number(&m, 1.0, 1e-4, 2, TrotterMode::Geometric);
        assert_eq!(g, (2f64.sqrt() * (20.0f64).powf(1.5) * 100.0).ceil() as u64);
    }
}
