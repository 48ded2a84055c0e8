//! Asymptotic cost formulas, product-formula circuits, and measured
//! PF-vs-QSP gate-count sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{symmetric_ft_gates, Circuit, Gate};
use crate::error::{SimError, SimResult};
use crate::field::{build_hamiltonian, Basis, DigitizedLattice, HamiltonianMetrics};
use crate::lcu::{build_lcu, LcuMethod};
use crate::lowering::{best_count, GateCount, LoweringMode};
use crate::pauli::PauliOp;
use crate::qsp::{jacobi_anger_target, qsp_counts, solve_phases};
use crate::trotter::{lattice_terms, min_steps_for_error, suzuki_plan, SplittingPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pf,
    Qsp,
    PfQsp,
    HhklPf,
    HhklQsp,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::Pf => "pf",
            Method::Qsp => "qsp",
            Method::PfQsp => "pf+qsp",
            Method::HhklPf => "hhkl+pf",
            Method::HhklQsp => "hhkl+qsp",
        }
    }

    pub fn parse(s: &str) -> SimResult<Self> {
        Ok(match s {
            "pf" => Method::Pf,
            "qsp" => Method::Qsp,
            "pf+qsp" => Method::PfQsp,
            "hhkl+pf" => Method::HhklPf,
            "hhkl+qsp" => Method::HhklQsp,
            _ => return Err(SimError::BadArgs(format!("unknown method {s:?}"))),
        })
    }
}

/// Hamiltonian class the formula is quoted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SiteLocal,
    Geometric,
    O1,
}

impl Variant {
    pub fn parse(s: &str) -> SimResult<Self> {
        Ok(match s {
            "site_local" => Variant::SiteLocal,
            "geometric" => Variant::Geometric,
            "o1" | "O1" => Variant::O1,
            _ => return Err(SimError::BadArgs(format!("unknown variant {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateInputs {
    pub n_lambda: f64,
    pub n_p: f64,
    pub c_p: f64,
    pub n_h: f64,
    pub n_ind: f64,
    pub t: f64,
    pub eps: f64,
    pub p: u32,
    pub d: u32,
}

impl EstimateInputs {
    pub fn from_metrics(m: &HamiltonianMetrics, t: f64, eps: f64, p: u32) -> Self {
        EstimateInputs {
            n_lambda: m.n_lambda as f64,
            n_p: m.n_p as f64,
            c_p: m.c_p,
            n_h: m.n_h as f64,
            n_ind: m.n_ind as f64,
            t,
            eps,
            p,
            d: m.d as u32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticEstimate {
    pub method: Method,
    pub variant: Variant,
    pub chi: f64,
    pub inputs: EstimateInputs,
}

/// Natural log clamped at 1 so unit-size inputs do not zero out a product.
fn lg(x: f64) -> f64 {
    x.ln().max(1.0)
}

/// Complexity expression with all hidden constants set to one.
pub fn estimate(method: Method, variant: Variant, inp: EstimateInputs) -> SimResult<AsymptoticEstimate> {
    let EstimateInputs {
        n_lambda,
        n_p,
        c_p,
        n_h,
        n_ind,
        t,
        eps,
        p,
        d,
    } = inp;
    if [n_lambda, n_p, c_p, n_h, n_ind, t, eps].iter().any(|v| !(*v > 0.0)) || p == 0 {
        return Err(SimError::BadArgs("estimate inputs must be positive".into()));
    }
    let inv = 1.0 / p as f64;
    let pf_core = |nh: f64| (nh * n_p * c_p * t).powf(1.0 + inv) * eps.powf(-inv);
    let chi = match (variant, method) {
        (Variant::O1, Method::Pf) => n_p.powf(2.0 + inv) * (c_p * t).powf(1.0 + inv) * eps.powf(-inv),
        (Variant::O1, Method::Qsp) => n_p * lg(n_p) * (n_p * c_p * t + lg(1.0 / eps)),
        (Variant::SiteLocal, Method::Pf) => n_ind * n_p * pf_core(n_h),
        (Variant::SiteLocal, Method::PfQsp) => {
            n_ind * pf_core(n_h) * n_p * lg(n_p) * lg(n_ind * n_h * n_p * c_p * t / eps)
        }
        (Variant::SiteLocal, Method::Qsp) => {
            n_h * n_p * lg(n_h * n_p) * (n_h * n_p * c_p * t + lg(1.0 / eps))
        }
        (Variant::Geometric, Method::Pf) | (Variant::Geometric, Method::HhklPf) => n_p * pf_core(n_lambda),
        (Variant::Geometric, Method::PfQsp) => {
            pf_core(n_lambda) * n_p * lg(n_p) * lg(n_lambda * n_p * c_p * t / eps)
        }
        (Variant::Geometric, Method::Qsp) => {
            n_lambda * n_p * lg(n_lambda * n_p) * (n_lambda * n_p * c_p * t + lg(1.0 / eps))
        }
        (Variant::Geometric, Method::HhklQsp) => {
            let l = lg(n_lambda * t / eps);
            n_lambda * n_p * n_p * c_p * t * l.powi(d as i32) * lg(n_p * l)
        }
        (v, m) => {
            return Err(SimError::BadArgs(format!(
                "no complexity formula for {} on {v:?} Hamiltonians",
                m.id()
            )))
        }
    };
    Ok(AsymptoticEstimate {
        method,
        variant,
        chi,
        inputs: inp,
    })
}

/// `exp(-i tau c Z_S)` by a CNOT ladder onto the last qubit of `S`.
fn z_string_rotation(support: &[usize], angle: f64, out: &mut Vec<Gate>) {
    let (&last, rest) = support.split_last().expect("non-empty support");
    let ladder: Vec<Gate> = rest
        .iter()
        .zip(support[1..].iter())
        .map(|(&a, &b)| Gate::Cnot(a, b))
        .collect();
    out.extend(ladder.iter().cloned());
    out.push(Gate::Rz(last, 2.0 * angle));
    out.extend(ladder.into_iter().rev());
}

/// Gates for `exp(-i tau P)` of one lattice piece.
pub fn piece_exp_gates(lat: &DigitizedLattice, piece: usize, tau: f64) -> SimResult<Vec<Gate>> {
    let p = lat
        .pf_pieces()
        .get(piece)
        .copied()
        .ok_or_else(|| SimError::BadArgs(format!("no piece {piece}")))?;
    let mut body = Vec::new();
    for (ps, c) in p.pauli.terms() {
        if ps.ops().iter().any(|o| !matches!(o, PauliOp::I | PauliOp::Z)) {
            return Err(SimError::BadArgs("piece is not diagonal in its own basis".into()));
        }
        let angle = c.re * tau;
        if ps.is_identity() {
            body.push(Gate::GlobalPhase(-angle));
        } else {
            z_string_rotation(&ps.support(), angle, &mut body);
        }
    }
    if p.basis == Basis::Field {
        return Ok(body);
    }
    // momentum pieces are FT P FT^dag, so FT^dag acts first
    let ft = symmetric_ft_gates(&lat.site_qubits(p.sites[0]));
    let mut out: Vec<Gate> = ft.iter().rev().map(|g| g.dagger()).collect();
    out.extend(body);
    out.extend(ft);
    Ok(out)
}

/// One step `S_p(dt)` as a circuit.
pub fn pf_step_circuit(lat: &DigitizedLattice, plan: &SplittingPlan, dt: f64) -> SimResult<Circuit> {
    let mut c = Circuit::new(lat.n_qubits);
    for &(j, a) in &plan.stages {
        c.extend(piece_exp_gates(lat, j, a * dt)?);
    }
    Ok(c)
}

/// Lowered counts of one PF step, in both modes.
pub fn pf_step_counts(lat: &DigitizedLattice, p: u32) -> SimResult<(LoweringMode, GateCount, GateCount)> {
    let plan = suzuki_plan(p, lat.pf_pieces().len())?;
    // angles do not change counts, since zero angles are never pruned
    best_count(&pf_step_circuit(lat, &plan, 0.1)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub n_q: usize,
    pub sites: usize,
    pub m: f64,
    pub lambda: f64,
    pub p: u32,
    pub ts: Vec<f64>,
    pub epss: Vec<f64>,
    /// Run the phase solver at every point rather than counting from the degree alone.
    pub solve_phases: bool,
    pub r_max: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_q: 3,
            sites: 1,
            m: 1.0,
            lambda: 32.0,
            p: 4,
            ts: vec![1.0],
            epss: vec![1e-2, 1e-4, 1e-6, 1e-8, 1e-10],
            solve_phases: false,
            r_max: 1 << 24,
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub t: f64,
    pub eps: f64,
    pub cnot: u64,
    pub rot: u64,
    pub ancillas: usize,
    pub alpha: f64,
    #[serde(rename = "N_phi")]
    pub n_phi: usize,
    pub r: u64,
    pub p: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct Crossover {
    pub t: f64,
    /// Error at which PF and QSP CNOT counts meet; `None` when one method wins the whole bracket.
    pub eps: Option<f64>,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub crossovers: Vec<Crossover>,
}

/// Precomputed per-lattice data shared by all grid points.
pub struct Comparer {
    pub lat: DigitizedLattice,
    pub p: u32,
    pub r_max: u64,
    pub solve_phases: bool,
    terms: Vec<crate::trotter::PfTerm>,
    h: crate::dense::DenseOperator,
    plan: SplittingPlan,
    step: GateCount,
    be: crate::lcu::BlockEncoding,
}

impl Comparer {
    pub fn new(cfg: &SweepConfig) -> SimResult<Self> {
        let dims = vec![cfg.sites];
        let lat = build_hamiltonian(&dims, cfg.m, cfg.lambda, cfg.n_q)?;
        let terms = lattice_terms(&lat)?;
        let h = lat.dense_hamiltonian()?;
        let plan = suzuki_plan(cfg.p, terms.len())?;
        let (_, v, q) = pf_step_counts(&lat, cfg.p)?;
        let step = if (q.cnot, q.rot) <= (v.cnot, v.rot) { q } else { v };
        let be = build_lcu(&lat, LcuMethod::Ft)?;
        Ok(Comparer {
            lat,
            p: cfg.p,
            r_max: cfg.r_max,
            solve_phases: cfg.solve_phases,
            terms,
            h,
            plan,
            step,
            be,
        })
    }

    /// PF row with `r` from measured-error bisection; `None` if `r_max` is not enough.
    pub fn pf_row(&self, t: f64, eps: f64) -> SimResult<Option<SweepRow>> {
        let exact = crate::dense::matrix_exp_hermitian(&self.h, t)?;
        let r = match min_steps_for_error(&self.terms, &exact, t, &self.plan, eps, self.r_max) {
            Ok((r, _)) => r,
            Err(SimError::Infeasible(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let total = self.step.scaled(r);
        Ok(Some(SweepRow {
            method: format!("pf{}", self.p),
            t,
            eps,
            cnot: total.cnot,
            rot: total.rot,
            ancillas: total.ancilla_work,
            alpha: 0.0,
            n_phi: 0,
            r,
            p: self.p,
        }))
    }

    pub fn qsp_row(&self, t: f64, eps: f64) -> SimResult<SweepRow> {
        let target = jacobi_anger_target(self.be.alpha * t, eps)?;
        let degree = if self.solve_phases {
            solve_phases(&target)?.degree
        } else {
            target.degree
        };
        let counts = qsp_counts(&self.be, degree)?;
        Ok(SweepRow {
            method: "qsp".into(),
            t,
            eps,
            cnot: counts.best.cnot,
            rot: counts.best.rot,
            // index register, QSP signal qubit, lowering work qubits
            ancillas: self.be.k + 1 + counts.best.ancilla_work,
            alpha: self.be.alpha,
            n_phi: 2 * degree,
            r: 0,
            p: 0,
        })
    }

    /// `ln(pf cnot / qsp cnot)`; positive when QSP is cheaper. PF failures count as +inf.
    fn log_ratio(&self, t: f64, eps: f64) -> SimResult<f64> {
        let q = self.qsp_row(t, eps)?;
        Ok(match self.pf_row(t, eps)? {
            Some(pf) => (pf.cnot as f64 / q.cnot as f64).ln(),
            None => f64::INFINITY,
        })
    }

    /// Bisection in log(eps) for the CNOT crossover inside `[lo, hi]` (lo < hi).
    pub fn crossover(&self, t: f64, lo: f64, hi: f64) -> SimResult<Crossover> {
        let (mut a, mut b) = (hi.log10(), lo.log10());
        let fa = self.log_ratio(t, hi)?;
        let fb = self.log_ratio(t, lo)?;
        if fa.signum() == fb.signum() {
            return Ok(Crossover {
                t,
                eps: None,
                bracket: (lo, hi),
            });
        }
        for _ in 0..40 {
            if (a - b).abs() < 1e-3 {
                break;
            }
            let mid = 0.5 * (a + b);
            let fm = self.log_ratio(t, 10f64.powf(mid))?;
            if fm.signum() == fa.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(Crossover {
            t,
            eps: Some(10f64.powf(0.5 * (a + b))),
            bracket: (lo, hi),
        })
    }
}

/// Measured PF and QSP counts on the `(t, eps)` grid plus the crossover per `t`.
pub fn sweep_compare(cfg: &SweepConfig) -> SimResult<SweepResult> {
    if cfg.ts.is_empty() || cfg.epss.is_empty() {
        return Err(SimError::BadArgs("sweep grid is empty".into()));
    }
    let cmp = Comparer::new(cfg)?;
    let grid: Vec<(f64, f64)> = cfg
        .ts
        .iter()
        .flat_map(|&t| cfg.epss.iter().map(move |&e| (t, e)))
        .collect();
    let per_point = grid
        .par_iter()
        .map(|&(t, e)| -> SimResult<Vec<SweepRow>> {
            let mut rows: Vec<SweepRow> = cmp.pf_row(t, e)?.into_iter().collect();
            rows.push(cmp.qsp_row(t, e)?);
            Ok(rows)
        })
        .collect::<SimResult<Vec<_>>>()?;
    let rows = per_point.into_iter().flatten().collect();
    let lo = cfg.epss.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = cfg.epss.iter().cloned().fold(0.0, f64::max);
    let crossovers = cfg
        .ts
        .par_iter()
        .map(|&t| cmp.crossover(t, lo, hi))
        .collect::<SimResult<Vec<_>>>()?;
    Ok(SweepResult {
        config: cfg.clone(),
        rows,
        crossovers,
    })
}

pub const CSV_HEADER: [&str; 10] = ["method", "t", "eps", "cnot", "rot", "ancillas", "alpha", "N_phi", "r", "p"];

impl SweepResult {
    pub fn to_csv(&self) -> SimResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| SimError::BadArgs(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| SimError::BadArgs(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense;
    use crate::trotter::pf_step;

    fn inputs(t: f64, eps: f64) -> EstimateInputs {
        EstimateInputs {
            n_lambda: 16.0,
            n_p: 10.0,
            c_p: 2.0,
            n_h: 31.0,
            n_ind: 3.0,
            t,
            eps,
            p: 2,
            d: 1,
        }
    }

    #[test]
    fn qsp_estimate_linear_in_t() {
        let a = estimate(Method::Qsp, Variant::SiteLocal, inputs(1e4, 1e-6)).unwrap().chi;
        let b = estimate(Method::Qsp, Variant::SiteLocal, inputs(2e4, 1e-6)).unwrap().chi;
        assert!((b / a - 2.0).abs() < 1e-3, "{}", b / a);
    }

    #[test]
    fn geometric_pf_reduces_site_local() {
        let mut i = inputs(3.0, 1e-4);
        let g = estimate(Method::Pf, Variant::Geometric, i).unwrap().chi;
        i.n_ind = 1.0;
        i.n_h = i.n_lambda;
        let s = estimate(Method::Pf, Variant::SiteLocal, i).unwrap().chi;
        assert!((g - s).abs() <= 1e-12 * s);
        let e = estimate(Method::HhklPf, Variant::Geometric, i).unwrap().chi;
        assert_eq!(e, g);
    }

    #[test]
    fn pf_loses_ground_as_eps_shrinks() {
        let mk = |eps| EstimateInputs {
            n_lambda: 1.0,
            n_p: 4.0,
            c_p: 30.0,
            n_h: 1.0,
            n_ind: 1.0,
            t: 1.0,
            eps,
            p: 4,
            d: 1,
        };
        let ratio = |eps| {
            estimate(Method::Pf, Variant::O1, mk(eps)).unwrap().chi
                / estimate(Method::Qsp, Variant::O1, mk(eps)).unwrap().chi
        };
        assert!(ratio(1e-4) > ratio(1e-2) && ratio(1e-30) > ratio(1e-4));
    }

    #[test]
    fn undefined_combination_rejected() {
        let e = estimate(Method::HhklQsp, Variant::O1, inputs(1.0, 1e-3)).unwrap_err();
        assert_eq!(e.code(), "BAD_ARGS");
        assert_eq!(Method::parse("pf+qsp").unwrap(), Method::PfQsp);
    }

    #[test]
    fn step_circuit_matches_dense_step() {
        for (dims, n_q) in [(vec![1], 3), (vec![2], 2)] {
            let lat = build_hamiltonian(&dims, 1.0, 32.0, n_q).unwrap();
            let terms = lattice_terms(&lat).unwrap();
            for p in [1, 2, 4] {
                let plan = suzuki_plan(p, terms.len()).unwrap();
                let want = pf_step(&terms, 0.03, &plan);
                let got = pf_step_circuit(&lat, &plan, 0.03).unwrap().unitary().unwrap();
                let err = dense::max_abs(&(got - want));
                assert!(err < 1e-10, "dims {dims:?} p {p}: {err}");
            }
        }
    }

    #[test]
    fn step_counts_deterministic() {
        let lat = build_hamiltonian(&[1], 1.0, 32.0, 3).unwrap();
        let a = pf_step_counts(&lat, 4).unwrap();
        let b = pf_step_counts(&lat, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.1.cnot > 0);
    }

    #[test]
    fn sweep_rows_and_csv() {
        let cfg = SweepConfig {
            n_q: 2,
            epss: vec![1e-2, 1e-3, 1e-4],
            ..SweepConfig::default()
        };
        let res = sweep_compare(&cfg).unwrap();
        assert_eq!(res.rows.len(), 6);
        let csv = res.to_csv().unwrap();
        assert!(csv.starts_with(&CSV_HEADER.join(",")));
        let pf: Vec<&SweepRow> = res.rows.iter().filter(|r| r.method == "pf4").collect();
        assert!(pf.windows(2).all(|w| w[1].r >= w[0].r));
    }
}
