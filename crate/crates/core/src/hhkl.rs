//! Patched local evolution: planning with unit constants, and the
//! three-region patch identity checked against dense exponentials.

use rayon::prelude::*;
use serde::Serialize;

use crate::dense::{self, DenseOperator};
use crate::error::{SimError, SimResult};
use crate::field::{DigitizedLattice, HamiltonianMetrics};
use crate::fit::{linear_fit, LinearFit};

/// Decomposition parameters for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HhklPlan {
    #[serde(rename = "L")]
    pub l: usize,
    pub d: usize,
    pub t_tilde: f64,
    pub eps: f64,
    pub ell: usize,
    pub delta: f64,
    pub m: usize,
    pub calls: u64,
    /// Single block, so the plan is just direct evolution.
    pub degenerate: bool,
}

/// `ln(L^d t~ / eps)`, shared by every closed form.
fn log_factor(l: usize, d: usize, t_tilde: f64, eps: f64) -> f64 {
    ((l as f64).powi(d as i32) * t_tilde / eps).ln()
}

/// Plan from explicit size and rescaled time.
pub fn plan_raw(l: usize, d: usize, t_tilde: f64, eps: f64) -> SimResult<HhklPlan> {
    if l == 0 || d == 0 || !(t_tilde > 0.0) || !(eps > 0.0) {
        return Err(SimError::BadArgs("plan needs L, d, t~, eps > 0".into()));
    }
    let vol = (l as f64).powi(d as i32);
    let lg = log_factor(l, d, t_tilde, eps);
    // ell must exceed the interaction range of nearest-neighbour links
    let ell = if lg > 0.0 { (lg.ceil() as usize).max(2) } else { 2 };
    let m = ((vol / (ell as f64).powi(d as i32)).ceil() as usize).max(1);
    // a lattice no wider than the smallest block is evolved directly
    if l <= 2 {
        return Ok(HhklPlan {
            l,
            d,
            t_tilde,
            eps,
            ell,
            delta: eps,
            m: 1,
            calls: 1,
            degenerate: true,
        });
    }
    let lgd = lg.powi(d as i32);
    let raw_calls = vol * t_tilde / lgd;
    if !(lg > 0.0) || raw_calls < 1.0 {
        return Err(SimError::Infeasible(format!(
            "eps = {eps:.1e} leaves {raw_calls:.3} helper calls for L = {l}, t~ = {t_tilde}"
        )));
    }
    Ok(HhklPlan {
        l,
        d,
        t_tilde,
        eps,
        ell,
        delta: eps * lgd / (vol * t_tilde),
        m,
        calls: raw_calls.ceil() as u64,
        degenerate: m == 1,
    })
}

/// Plan for a lattice; `t~ = max ||H_J|| t` with the per-term one-norm as the norm bound.
pub fn plan(metrics: &HamiltonianMetrics, t: f64, eps: f64) -> SimResult<HhklPlan> {
    plan_raw(metrics.linear_size, metrics.d, metrics.max_term_norm * t, eps)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatchReport {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
    pub buffer_width: usize,
    pub dt: f64,
    /// `||U_abc - U_ab U_b^dag U_bc||`.
    pub error: f64,
    pub unitarity_deviation: f64,
}

fn contiguous(r: &[usize]) -> bool {
    r.windows(2).all(|w| w[1] == w[0] + 1)
}

fn check_split(n_sites: usize, a: &[usize], b: &[usize], c: &[usize]) -> SimResult<()> {
    if b.is_empty() {
        return Err(SimError::BadSplit("buffer region b is empty".into()));
    }
    for (name, r) in [("a", a), ("b", b), ("c", c)] {
        if !contiguous(r) {
            return Err(SimError::BadSplit(format!("region {name} = {r:?} is not a contiguous run")));
        }
    }
    let all: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
    if !contiguous(&all) || all.first() != Some(&0) || all.len() != n_sites {
        return Err(SimError::BadSplit(format!(
            "a|b|c = {a:?}|{b:?}|{c:?} must tile sites 0..{n_sites} in order"
        )));
    }
    Ok(())
}

/// Hamiltonian of the terms supported inside `sites`, on the qubits of those
/// sites only (local qubit i = i-th smallest global qubit).
fn region_hamiltonian(lat: &DigitizedLattice, sites: &[usize]) -> SimResult<(Vec<usize>, DenseOperator)> {
    let mut qubits: Vec<usize> = sites.iter().flat_map(|&s| lat.site_qubits(s)).collect();
    qubits.sort_unstable();
    let nr = qubits.len();
    let dim = 1usize << nr;
    let mut h = DenseOperator::zeros(dim, dim);
    for p in lat.pf_pieces() {
        if !p.sites.iter().all(|s| sites.contains(s)) {
            continue;
        }
        let (pq, local) = lat.piece_local(p)?;
        let mapped: Vec<usize> = pq
            .iter()
            .map(|q| qubits.binary_search(q).expect("piece qubit inside region"))
            .collect();
        h += dense::embed(&local, &mapped, nr)?;
    }
    Ok((qubits, h))
}

fn region_evolution(lat: &DigitizedLattice, sites: &[usize], dt: f64) -> SimResult<(Vec<usize>, DenseOperator)> {
    let (q, h) = region_hamiltonian(lat, sites)?;
    Ok((q, dense::matrix_exp_hermitian(&h, dt)?))
}

fn check_chain(lat: &DigitizedLattice) -> SimResult<()> {
    if lat.d != 1 {
        return Err(SimError::BadArgs("patching needs a 1D chain".into()));
    }
    if lat.n_qubits > crate::pauli::MAX_DENSE_QUBITS {
        return Err(SimError::TooLarge {
            what: "qubits",
            got: lat.n_qubits,
            limit: crate::pauli::MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

/// Exact residual of the patch identity for one split.
pub fn patch_evolve(lat: &DigitizedLattice, a: &[usize], b: &[usize], c: &[usize], dt: f64) -> SimResult<PatchReport> {
    check_chain(lat)?;
    check_split(lat.n_sites, a, b, c)?;
    let n = lat.n_qubits;
    let all: Vec<usize> = (0..lat.n_sites).collect();
    let (_, u_abc) = region_evolution(lat, &all, dt)?;
    let ab: Vec<usize> = a.iter().chain(b).copied().collect();
    let bc: Vec<usize> = b.iter().chain(c).copied().collect();
    let (q_bc, u_bc) = region_evolution(lat, &bc, dt)?;
    let (q_b, u_b) = region_evolution(lat, b, dt)?;
    let (q_ab, u_ab) = region_evolution(lat, &ab, dt)?;
    // rightmost factor acts first
    let mut prod = dense::embed(&u_bc, &q_bc, n)?;
    dense::apply_local(&mut prod, &u_b.adjoint(), &q_b);
    dense::apply_local(&mut prod, &u_ab, &q_ab);
    Ok(PatchReport {
        a: a.to_vec(),
        b: b.to_vec(),
        c: c.to_vec(),
        buffer_width: b.len(),
        dt,
        error: dense::spectral_norm(&(&u_abc - &prod)),
        unitarity_deviation: dense::unitarity_deviation(&prod),
    })
}

/// Split with a buffer of `width` sites placed centrally; a and c keep at least one site.
pub fn central_split(n_sites: usize, width: usize) -> SimResult<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    if width == 0 || width + 2 > n_sites {
        return Err(SimError::BadSplit(format!(
            "buffer width {width} leaves no room for a and c in {n_sites} sites"
        )));
    }
    let na = (n_sites - width) / 2;
    let a = (0..na).collect();
    let b = (na..na + width).collect();
    let c = (na + width..n_sites).collect();
    Ok((a, b, c))
}

/// Smallest residual fed to the log fit.
pub const RESIDUAL_FLOOR: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub points: Vec<PatchReport>,
    pub fit: LinearFit,
    /// `-slope` of ln(residual) against width.
    pub mu_hat: f64,
    pub prefactor: f64,
}

/// Residuals over buffer widths and a fit of ln(residual) against width.
pub fn measure_decay(lat: &DigitizedLattice, dt: f64, widths: &[usize]) -> SimResult<DecayFit> {
    if widths.len() < 3 {
        return Err(SimError::BadArgs("decay fit needs at least 3 widths".into()));
    }
    let points = widths
        .par_iter()
        .map(|&w| {
            let (a, b, c) = central_split(lat.n_sites, w)?;
            patch_evolve(lat, &a, &b, &c, dt)
        })
        .collect::<SimResult<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.buffer_width as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.error.max(RESIDUAL_FLOOR).ln()).collect();
    let fit = linear_fit(&xs, &ys);
    Ok(DecayFit {
        points,
        fit,
        mu_hat: -fit.slope,
        prefactor: fit.intercept.exp(),
    })
}
