//! Qubitized walk operators and their spectral checks.
//!
//! For an LCU encoding `W = R_g SEL` with `R_g = PREP (2|0><0| - 1) PREP^dagger`.
//! The general construction adds one qubit `q` and works for any encoding.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{Circuit, Gate};
use crate::dense::{self, DenseOperator};
use crate::error::{SimError, SimResult};
use crate::lcu::{project_block, BlockEncoding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkConstruction {
    LcuShortcut,
    General,
}

#[derive(Debug, Clone)]
pub struct WalkOperator {
    pub circuit: Circuit,
    pub construction: WalkConstruction,
    pub n_system: usize,
    pub alpha: f64,
    /// Signal state `|g>` on all non-system qubits.
    pub signal: Vec<Complex64>,
}

fn reflect_zero(qubits: &[usize], extra: Option<(usize, bool)>) -> Vec<Gate> {
    let mut controls: Vec<(usize, bool)> = extra.into_iter().collect();
    controls.extend(qubits.iter().map(|&q| (q, false)));
    let phase = match extra {
        None => Gate::GlobalPhase(std::f64::consts::PI),
        Some((c, true)) => Gate::Phase(c, std::f64::consts::PI),
        Some((c, false)) => Gate::Mc {
            controls: vec![(c, false)],
            body: vec![Gate::GlobalPhase(std::f64::consts::PI)],
        },
    };
    // 2|0><0| - 1 = -(1 - 2|0><0|)
    vec![
        Gate::Mc {
            controls,
            body: vec![Gate::GlobalPhase(std::f64::consts::PI)],
        },
        phase,
    ]
}

/// Walk gates, optionally inverted and controlled.
///
/// With `naive` every gate is controlled; otherwise PREP stays bare because
/// `PREP^dagger PREP` cancels when the control is off.
pub fn walk_gates(be: &BlockEncoding, dagger: bool, control: Option<(usize, bool)>, naive: bool) -> Vec<Gate> {
    let idx = be.index_qubits();
    let wrap = |gs: Vec<Gate>| -> Vec<Gate> {
        match control {
            Some(c) => vec![Gate::Mc {
                controls: vec![c],
                body: gs,
            }],
            None => gs,
        }
    };
    let prep_dag: Vec<Gate> = be.prep.iter().rev().map(|g| g.dagger()).collect();
    let mut refl = Vec::new();
    if naive {
        refl.extend(wrap(prep_dag));
        refl.extend(wrap(reflect_zero(&idx, None)));
        refl.extend(wrap(be.prep.clone()));
    } else {
        refl.extend(prep_dag);
        refl.extend(reflect_zero(&idx, control));
        refl.extend(be.prep.iter().cloned());
    }
    let sel = match control {
        Some(c) if !naive => {
            // group runs of gates that need the control
            let mut out = Vec::new();
            let mut run = Vec::new();
            for (g, &bare) in be.sel.iter().zip(&be.sel_bare) {
                if bare {
                    if !run.is_empty() {
                        out.push(Gate::Mc {
                            controls: vec![c],
                            body: std::mem::take(&mut run),
                        });
                    }
                    out.push(g.clone());
                } else {
                    run.push(g.clone());
                }
            }
            if !run.is_empty() {
                out.push(Gate::Mc {
                    controls: vec![c],
                    body: run,
                });
            }
            out
        }
        _ => wrap(be.sel.clone()),
    };
    // SEL and R_g are both self-inverse, so W^dagger = SEL R_g.
    let mut out = Vec::new();
    if dagger {
        out.extend(refl);
        out.extend(sel);
    } else {
        out.extend(sel);
        out.extend(refl);
    }
    out
}

pub fn build_walk(be: &BlockEncoding) -> WalkOperator {
    let mut c = Circuit::new(be.n_qubits())
        .with_register("system", 0, be.n_system)
        .with_register("index", be.n_system, be.k);
    c.extend(walk_gates(be, false, None, false));
    WalkOperator {
        circuit: c,
        construction: WalkConstruction::LcuShortcut,
        n_system: be.n_system,
        alpha: be.alpha,
        signal: be.signal_state(),
    }
}

/// Controlled walk with the control on the qubit after the index register.
pub fn build_controlled_walk(be: &BlockEncoding, naive: bool) -> Circuit {
    let ctrl = be.n_qubits();
    let mut c = Circuit::new(ctrl + 1)
        .with_register("system", 0, be.n_system)
        .with_register("index", be.n_system, be.k)
        .with_register("control", ctrl, 1);
    c.extend(walk_gates(be, false, Some((ctrl, true)), naive));
    c
}

/// General construction: `W = R_{|+>|0>} X_q U'` with
/// `U' = |0><0| (x) U + |1><1| (x) U^dagger`; `q` sits after the index register.
pub fn build_walk_general(be: &BlockEncoding) -> WalkOperator {
    let q = be.n_qubits();
    let u = be.assembled();
    let ud = u.dagger();
    let mut c = Circuit::new(q + 1)
        .with_register("system", 0, be.n_system)
        .with_register("index", be.n_system, be.k)
        .with_register("q", q, 1);
    c.push(Gate::Mc {
        controls: vec![(q, false)],
        body: u.gates,
    });
    c.push(Gate::Mc {
        controls: vec![(q, true)],
        body: ud.gates,
    });
    c.push(Gate::X(q));
    c.push(Gate::H(q));
    let mut anc = be.index_qubits();
    anc.push(q);
    c.extend(reflect_zero(&anc, None));
    c.push(Gate::H(q));
    let da = 1usize << be.k;
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut signal = vec![Complex64::new(0.0, 0.0); 2 * da];
    signal[0] = r;
    signal[da] = r;
    WalkOperator {
        circuit: c,
        construction: WalkConstruction::General,
        n_system: be.n_system,
        alpha: be.alpha,
        signal,
    }
}

impl WalkOperator {
    /// `<g| W^j |g>` for `j = 1..=kmax`.
    pub fn power_blocks(&self, kmax: usize) -> Vec<DenseOperator> {
        let ds = 1usize << self.n_system;
        let da = self.signal.len();
        let cols: Vec<Vec<DenseOperator>> = (0..ds)
            .into_par_iter()
            .map(|a| {
                let mut v = vec![Complex64::new(0.0, 0.0); ds * da];
                for (i, g) in self.signal.iter().enumerate() {
                    v[i * ds + a] = *g;
                }
                (0..kmax)
                    .map(|_| {
                        self.circuit.apply(&mut v);
                        DenseOperator::from_fn(ds, 1, |r, _| {
                            (0..da).map(|i| self.signal[i].conj() * v[i * ds + r]).sum()
                        })
                    })
                    .collect()
            })
            .collect();
        (0..kmax)
            .map(|j| DenseOperator::from_fn(ds, ds, |r, a| cols[a][j][(r, 0)]))
            .collect()
    }

    pub fn block(&self) -> SimResult<DenseOperator> {
        project_block(&self.circuit, self.n_system, &self.signal, &self.signal)
    }
}

/// `T_j(x)` for `j = 1..=kmax` on a dense Hermitian `x`.
pub fn chebyshev_t(x: &DenseOperator, kmax: usize) -> Vec<DenseOperator> {
    let d = x.nrows();
    let mut prev = DenseOperator::identity(d, d);
    let mut cur = x.clone();
    let mut out = Vec::with_capacity(kmax);
    for _ in 0..kmax {
        out.push(cur.clone());
        let next = (x * &cur) * Complex64::new(2.0, 0.0) - &prev;
        prev = cur;
        cur = next;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct WalkSpectrumReport {
    /// Max deviation of restricted eigenphases from `+-arccos(lambda/alpha)`.
    pub eigenphase_error_max: f64,
    /// Max leakage of `W` out of each walk subspace.
    pub invariance_error_max: f64,
    /// Max matrix element between subspaces of distinct eigenvalues.
    pub cross_block_max: f64,
    /// Max deviation of the restricted blocks from `exp(-i Y theta)`.
    pub rotation_form_error_max: f64,
    /// `max |<g|W^j|g> - T_j(H/alpha)|` for `j = 1..`.
    pub chebyshev_error: Vec<f64>,
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn eig2(m: [[Complex64; 2]; 2]) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - det * 4.0).sqrt();
    [(tr + disc) / 2.0, (tr - disc) / 2.0]
}

/// Check the walk against the eigendecomposition of `h_shifted = H - shift`.
pub fn verify_walk(w: &WalkOperator, h_shifted: &DenseOperator, kmax: usize) -> SimResult<WalkSpectrumReport> {
    if w.alpha <= 0.0 {
        return Err(SimError::BadArgs("walk needs a positive scale factor".into()));
    }
    let (vals, vecs) = dense::eigh(h_shifted)?;
    let ds = 1usize << w.n_system;
    let da = w.signal.len();
    let lift = |col: usize| -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); ds * da];
        for (i, g) in w.signal.iter().enumerate() {
            for a in 0..ds {
                v[i * ds + a] = g * vecs[(a, col)];
            }
        }
        v
    };
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        let mut o = v.to_vec();
        w.circuit.apply(&mut o);
        o
    };
    let mut phase_err: f64 = 0.0;
    let mut inv_err: f64 = 0.0;
    let mut rot_err: f64 = 0.0;
    let mut bases: Vec<(f64, Vec<Vec<Complex64>>)> = Vec::new();
    for (j, &ev) in vals.iter().enumerate() {
        let lam = (ev / w.alpha).clamp(-1.0, 1.0);
        let theta = lam.acos();
        let u = lift(j);
        let wu = apply(&u);
        let s = (1.0 - lam * lam).max(0.0).sqrt();
        let mut basis = vec![u.clone()];
        if s > 1e-7 {
            let perp: Vec<Complex64> = wu.iter().zip(&u).map(|(a, b)| (a - b * lam) / s).collect();
            let wp = apply(&perp);
            let m = [
                [inner(&u, &wu), inner(&u, &wp)],
                [inner(&perp, &wu), inner(&perp, &wp)],
            ];
            let want = [[lam, -s], [s, lam]];
            for r in 0..2 {
                for c in 0..2 {
                    rot_err = rot_err.max((m[r][c] - want[r][c]).norm());
                }
            }
            let leak: f64 = wp
                .iter()
                .zip(u.iter().zip(&perp))
                .map(|(x, (a, b))| (x - a * m[0][1] - b * m[1][1]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            inv_err = inv_err.max(leak);
            let mut ph: Vec<f64> = eig2(m).iter().map(|z| z.arg()).collect();
            ph.sort_by(|a, b| a.total_cmp(b));
            phase_err = phase_err.max((ph[0] + theta).abs()).max((ph[1] - theta).abs());
            basis.push(perp);
        } else {
            // lambda = +-1: |g>|lambda> is itself an eigenvector with eigenvalue lambda
            let leak: f64 = wu.iter().zip(&u).map(|(a, b)| (a - b * lam).norm_sqr()).sum::<f64>().sqrt();
            inv_err = inv_err.max(leak);
            let target = if lam > 0.0 { 0.0 } else { std::f64::consts::PI };
            let ph = inner(&u, &wu).arg().abs();
            phase_err = phase_err.max((ph - target).abs());
        }
        bases.push((ev, basis));
    }
    let mut cross: f64 = 0.0;
    for (i, (ei, bi)) in bases.iter().enumerate() {
        let wb: Vec<Vec<Complex64>> = bi.iter().map(|v| apply(v)).collect();
        for (j, (ej, bj)) in bases.iter().enumerate() {
            if i == j || (ei - ej).abs() < 1e-9 * w.alpha.max(1.0) {
                continue;
            }
            for x in bj {
                for y in &wb {
                    cross = cross.max(inner(x, y).norm());
                }
            }
        }
    }
    let x = h_shifted * Complex64::new(1.0 / w.alpha, 0.0);
    let t = chebyshev_t(&x, kmax);
    let got = w.power_blocks(kmax);
    let cheb = got.iter().zip(&t).map(|(a, b)| dense::max_abs(&(a - b))).collect();
    Ok(WalkSpectrumReport {
        eigenphase_error_max: phase_err,
        invariance_error_max: inv_err,
        cross_block_max: cross,
        rotation_form_error_max: rot_err,
        chebyshev_error: cheb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::max_abs;
    use crate::field::build_hamiltonian;
    use crate::lcu::{build_lcu, build_lcu_with, FtWrap, IdentityHandling, LcuMethod, LcuOptions};
    use crate::pauli::{PauliString, PauliSum};

    fn shifted(be: &BlockEncoding, h: &DenseOperator) -> DenseOperator {
        let d = h.nrows();
        h - DenseOperator::identity(d, d) * Complex64::new(be.energy_shift, 0.0)
    }

    #[test]
    fn z_walk_is_extreme() {
        let ps = PauliSum::from_terms(1, [(PauliString::from_label("Z").unwrap(), Complex64::new(1.0, 0.0))]);
        let be = BlockEncoding::from_pauli_sum(&ps, IdentityHandling::Drop).unwrap();
        let w = build_walk(&be);
        let h = ps.to_matrix().unwrap();
        let rep = verify_walk(&w, &h, 4).unwrap();
        assert!(rep.eigenphase_error_max < 1e-12);
        let g = build_walk_general(&be);
        let rep = verify_walk(&g, &h, 4).unwrap();
        assert!(rep.eigenphase_error_max < 1e-12);
        assert!(rep.chebyshev_error.iter().all(|e| *e < 1e-12));
    }

    #[test]
    fn single_site_walks() {
        let lat = build_hamiltonian(&[1], 1.0, 32.0, 2).unwrap();
        let h = lat.dense_hamiltonian().unwrap();
        for method in [LcuMethod::Naive, LcuMethod::Ft] {
            let be = build_lcu(&lat, method).unwrap();
            let hs = shifted(&be, &h);
            for w in [build_walk(&be), build_walk_general(&be)] {
                let rep = verify_walk(&w, &hs, 8).unwrap();
                assert!(rep.eigenphase_error_max < 1e-8, "{rep:?}");
                assert!(rep.invariance_error_max < 1e-9, "{rep:?}");
                assert!(rep.cross_block_max < 1e-9, "{rep:?}");
                assert!(rep.rotation_form_error_max < 1e-9, "{rep:?}");
                assert!(rep.chebyshev_error.iter().all(|e| *e < 1e-8), "{rep:?}");
                let b = w.block().unwrap();
                let want = &hs * Complex64::new(1.0 / be.alpha, 0.0);
                assert!(max_abs(&(b - want)) < 1e-9);
                assert!(dense::unitarity_deviation(&w.circuit.unitary().unwrap()) < 1e-10);
            }
        }
    }

    #[test]
    fn controlled_walk_variants_agree() {
        let lat = build_hamiltonian(&[1], 1.0, 32.0, 2).unwrap();
        for wrap in [FtWrap::Bare, FtWrap::Tagged] {
            let opts = LcuOptions {
                ft_wrap: wrap,
                ..LcuOptions::default()
            };
            check_controlled(&build_lcu_with(&lat, LcuMethod::Ft, opts).unwrap());
        }
        check_controlled(&build_lcu(&lat, LcuMethod::Naive).unwrap());
    }

    fn check_controlled(be: &BlockEncoding) {
        let be = be.clone();
        let w = build_walk(&be).circuit.unitary().unwrap();
        let opt = build_controlled_walk(&be, false);
        let nai = build_controlled_walk(&be, true);
        let uo = opt.unitary().unwrap();
        let un = nai.unitary().unwrap();
        assert!(max_abs(&(&uo - &un)) < 1e-10);
        let d = w.nrows();
        let off = uo.view((0, 0), (d, d)).into_owned();
        let on = uo.view((d, d), (d, d)).into_owned();
        assert!(max_abs(&(off - DenseOperator::identity(d, d))) < 1e-10);
        assert!(max_abs(&(on - w)) < 1e-10);
        assert!(opt.controlled_gate_count() < nai.controlled_gate_count());
    }

    #[test]
    fn dagger_walk_inverts() {
        let lat = build_hamiltonian(&[1], 1.0, 32.0, 2).unwrap();
        let be = build_lcu(&lat, LcuMethod::Naive).unwrap();
        let mut c = Circuit::new(be.n_qubits());
        c.extend(walk_gates(&be, false, None, false));
        c.extend(walk_gates(&be, true, None, false));
        let u = c.unitary().unwrap();
        let d = u.nrows();
        assert!(max_abs(&(u - DenseOperator::identity(d, d))) < 1e-10);
    }
}
