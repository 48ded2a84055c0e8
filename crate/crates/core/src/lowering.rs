//! Lowering to the Rx, Rz, CNOT gate set and gate counting.
//!
//! Two strategies for multi-controlled gates:
//! `Vchain` computes the AND of the controls into clean work qubits,
//! `Quadratic` uses no extra qubits and borrows idle register qubits as
//! dirty ancillas, falling back to a square-root recursion when none are idle.
//! Global phases are kept as free gates so lowered circuits stay exact.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::circuit::{mat_dagger, Circuit, Gate, Mat2};
use crate::error::{SimError, SimResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LoweringMode {
    Vchain,
    Quadratic,
}

impl LoweringMode {
    pub fn name(self) -> &'static str {
        match self {
            LoweringMode::Vchain => "vchain",
            LoweringMode::Quadratic => "quadratic",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GateCount {
    pub cnot: u64,
    pub rot: u64,
    pub ancilla_work: usize,
}

impl GateCount {
    pub fn scaled(self, k: u64) -> GateCount {
        GateCount {
            cnot: self.cnot * k,
            rot: self.rot * k,
            ancilla_work: self.ancilla_work,
        }
    }

    pub fn plus(self, o: GateCount) -> GateCount {
        GateCount {
            cnot: self.cnot + o.cnot,
            rot: self.rot + o.rot,
            ancilla_work: self.ancilla_work.max(o.ancilla_work),
        }
    }
}

trait Sink {
    fn emit(&mut self, g: Gate);
}

impl Sink for Vec<Gate> {
    fn emit(&mut self, g: Gate) {
        self.push(g);
    }
}

#[derive(Default)]
struct Tally {
    cnot: u64,
    rot: u64,
}

impl Sink for Tally {
    fn emit(&mut self, g: Gate) {
        match g {
            Gate::Cnot(..) => self.cnot += 1,
            Gate::Rx(..) | Gate::Rz(..) => self.rot += 1,
            _ => {}
        }
    }
}

/// `U = e^{i a} Rz(b) Ry(c) Rz(d)`, returned as `(a, b, c, d)`.
pub fn zyz(m: &Mat2) -> (f64, f64, f64, f64) {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let alpha = det.arg() / 2.0;
    let ph = Complex64::from_polar(1.0, -alpha);
    let (v00, v10, v11) = (m[0][0] * ph, m[1][0] * ph, m[1][1] * ph);
    let gamma = 2.0 * v10.norm().atan2(v00.norm());
    let sum = if v11.norm() > 1e-12 { 2.0 * v11.arg() } else { 0.0 };
    let diff = if v10.norm() > 1e-12 { 2.0 * v10.arg() } else { 0.0 };
    (alpha, (sum + diff) / 2.0, gamma, (sum - diff) / 2.0)
}

fn sqrt_x() -> Mat2 {
    let a = Complex64::new(0.5, 0.5);
    let b = Complex64::new(0.5, -0.5);
    [[a, b], [b, a]]
}

/// Uniformly controlled Ry as Rx, Rz, CNOT via the Gray-code construction.
pub fn gray_ucry(controls: &[usize], target: usize, angles: &[f64]) -> Vec<Gate> {
    let l = controls.len();
    let n = 1usize << l;
    assert_eq!(angles.len(), n);
    let mut out = Vec::with_capacity(2 * n + 2);
    if l == 0 {
        out.extend([
            Gate::Rz(target, -FRAC_PI_2),
            Gate::Rx(target, angles[0]),
            Gate::Rz(target, FRAC_PI_2),
        ]);
        return out;
    }
    let gray = |i: usize| i ^ (i >> 1);
    // Rx(pi/2) Rz Rx(-pi/2) = Ry, and Rx commutes with the CNOT targets.
    out.push(Gate::Rx(target, FRAC_PI_2));
    for i in 0..n {
        let g = gray(i);
        let a: f64 = angles
            .iter()
            .enumerate()
            .map(|(j, &t)| if (j & g).count_ones() % 2 == 0 { t } else { -t })
            .sum::<f64>()
            / n as f64;
        out.push(Gate::Rz(target, a));
        let flip = (g ^ gray((i + 1) % n)).trailing_zeros() as usize;
        out.push(Gate::Cnot(controls[l - 1 - flip], target));
    }
    out.push(Gate::Rx(target, -FRAC_PI_2));
    out
}

struct Lowerer<'a> {
    mode: LoweringMode,
    n_orig: usize,
    max_work: usize,
    sink: &'a mut dyn Sink,
}

impl<'a> Lowerer<'a> {
    fn rz(&mut self, q: usize, t: f64) {
        self.sink.emit(Gate::Rz(q, t));
    }

    fn rx(&mut self, q: usize, t: f64) {
        self.sink.emit(Gate::Rx(q, t));
    }

    fn cnot(&mut self, c: usize, t: usize) {
        self.sink.emit(Gate::Cnot(c, t));
    }

    fn phase(&mut self, t: f64) {
        self.sink.emit(Gate::GlobalPhase(t));
    }

    fn x(&mut self, q: usize) {
        self.rx(q, PI);
        self.phase(FRAC_PI_2);
    }

    fn ccz(&mut self, a: usize, b: usize, t: usize) {
        self.cnot(b, t);
        self.rz(t, -FRAC_PI_4);
        self.cnot(a, t);
        self.rz(t, FRAC_PI_4);
        self.cnot(b, t);
        self.rz(t, -FRAC_PI_4);
        self.cnot(a, t);
        self.rz(b, FRAC_PI_4);
        self.rz(t, FRAC_PI_4);
        self.cnot(a, b);
        self.rz(a, FRAC_PI_4);
        self.rz(b, -FRAC_PI_4);
        self.cnot(a, b);
        self.phase(PI / 8.0);
    }

    fn toffoli(&mut self, a: usize, b: usize, t: usize) {
        self.rz(t, -FRAC_PI_2);
        self.rx(t, -FRAC_PI_2);
        self.ccz(a, b, t);
        self.rx(t, FRAC_PI_2);
        self.rz(t, FRAC_PI_2);
    }

    fn work(&mut self, k: usize) -> usize {
        self.max_work = self.max_work.max(k + 1);
        self.n_orig + k
    }

    /// AND of `p` (len >= 2) into work qubits starting at offset `wb`.
    fn ladder(&mut self, p: &[usize], wb: usize, undo: bool) -> usize {
        let l = p.len();
        let mut steps = Vec::with_capacity(l - 1);
        let w0 = self.work(wb);
        steps.push((p[0], p[1], w0));
        for i in 2..l {
            let prev = self.work(wb + i - 2);
            let next = self.work(wb + i - 1);
            steps.push((p[i], prev, next));
        }
        let last = steps.last().unwrap().2;
        if undo {
            steps.reverse();
        }
        for (a, b, t) in steps {
            self.toffoli(a, b, t);
        }
        last
    }

    fn single(&mut self, g: &Gate) {
        match *g {
            Gate::Rx(q, t) => self.rx(q, t),
            Gate::Rz(q, t) => self.rz(q, t),
            Gate::Ry(q, t) => {
                self.rz(q, -FRAC_PI_2);
                self.rx(q, t);
                self.rz(q, FRAC_PI_2);
            }
            Gate::X(q) => self.x(q),
            Gate::Y(q) => {
                self.single(&Gate::Ry(q, PI));
                self.phase(FRAC_PI_2);
            }
            Gate::Z(q) => {
                self.rz(q, PI);
                self.phase(FRAC_PI_2);
            }
            Gate::Phase(q, t) => {
                self.rz(q, t);
                self.phase(t / 2.0);
            }
            _ => {
                let (q, m) = g.single_qubit().expect("single-qubit gate");
                let (a, b, c, d) = zyz(&m);
                self.rz(q, d - FRAC_PI_2);
                self.rx(q, c);
                self.rz(q, b + FRAC_PI_2);
                self.phase(a);
            }
        }
    }

    fn single_controlled(&mut self, g: &Gate, c: usize) {
        match *g {
            Gate::X(t) => self.cnot(c, t),
            Gate::Y(t) => {
                self.rz(t, -FRAC_PI_2);
                self.cnot(c, t);
                self.rz(t, FRAC_PI_2);
            }
            Gate::Z(t) => {
                self.rx(t, -FRAC_PI_2);
                self.rz(t, -FRAC_PI_2);
                self.cnot(c, t);
                self.rz(t, FRAC_PI_2);
                self.rx(t, FRAC_PI_2);
            }
            Gate::Rz(t, th) => {
                self.rz(t, th / 2.0);
                self.cnot(c, t);
                self.rz(t, -th / 2.0);
                self.cnot(c, t);
            }
            Gate::Phase(t, th) => {
                self.single_controlled(&Gate::Rz(t, th), c);
                self.rz(c, th / 2.0);
                self.phase(th / 4.0);
            }
            _ => {
                let (t, m) = g.single_qubit().expect("single-qubit gate");
                let (a, b, gm, d) = zyz(&m);
                self.rz(t, (d - b) / 2.0);
                self.cnot(c, t);
                self.rz(t, -(d + b) / 2.0 - FRAC_PI_2);
                self.rx(t, -gm / 2.0);
                self.rz(t, FRAC_PI_2);
                self.cnot(c, t);
                self.rz(t, -FRAC_PI_2);
                self.rx(t, gm / 2.0);
                self.rz(t, FRAC_PI_2 + b);
                self.rz(c, a);
                self.phase(a / 2.0);
            }
        }
    }

    /// Multi-controlled X without extra qubits.
    fn mcx(&mut self, c: &[usize], t: usize) {
        let m = c.len();
        match m {
            0 => return self.x(t),
            1 => return self.cnot(c[0], t),
            2 => return self.toffoli(c[0], c[1], t),
            _ => {}
        }
        let free: Vec<usize> = (0..self.n_orig).filter(|q| *q != t && !c.contains(q)).collect();
        if free.len() >= m - 2 {
            let a = &free[..m - 2];
            let down = |s: &mut Self| {
                for i in (2..=m - 2).rev() {
                    s.toffoli(c[i], a[i - 2], a[i - 1]);
                }
                s.toffoli(c[0], c[1], a[0]);
                for i in 2..=m - 2 {
                    s.toffoli(c[i], a[i - 2], a[i - 1]);
                }
            };
            self.toffoli(c[m - 1], a[m - 3], t);
            down(self);
            self.toffoli(c[m - 1], a[m - 3], t);
            down(self);
        } else if !free.is_empty() {
            let a = free[0];
            let m1 = m.div_ceil(2);
            let (c1, c2) = c.split_at(m1);
            let mut c2a = c2.to_vec();
            c2a.push(a);
            self.mcx(c1, a);
            self.mcx(&c2a, t);
            self.mcx(c1, a);
            self.mcx(&c2a, t);
        } else {
            let (rest, last) = (&c[..m - 1], c[m - 1]);
            let v = sqrt_x();
            self.single_controlled(&Gate::U(t, v), last);
            self.mcx(rest, last);
            self.single_controlled(&Gate::U(t, mat_dagger(&v)), last);
            self.mcx(rest, last);
            self.gate_pos(&Gate::U(t, v), rest, 0);
        }
    }

    fn gate(&mut self, g: &Gate, ctrls: &[(usize, bool)], wb: usize) {
        let negs: Vec<usize> = ctrls.iter().filter(|c| !c.1).map(|c| c.0).collect();
        let pos: Vec<usize> = ctrls.iter().map(|c| c.0).collect();
        for &q in &negs {
            self.x(q);
        }
        self.gate_pos(g, &pos, wb);
        for &q in &negs {
            self.x(q);
        }
    }

    fn gate_pos(&mut self, g: &Gate, c: &[usize], wb: usize) {
        let m = c.len();
        let vchain = self.mode == LoweringMode::Vchain;
        match g {
            Gate::Barrier => {}
            Gate::Mc { controls, body } => {
                let mut all: Vec<(usize, bool)> = c.iter().map(|&q| (q, true)).collect();
                all.extend(controls.iter().copied());
                if vchain && all.len() >= 2 && body.len() > 1 {
                    let negs: Vec<usize> = all.iter().filter(|c| !c.1).map(|c| c.0).collect();
                    let pos: Vec<usize> = all.iter().map(|c| c.0).collect();
                    for &q in &negs {
                        self.x(q);
                    }
                    let w = self.ladder(&pos, wb, false);
                    for b in body {
                        self.gate(b, &[(w, true)], wb + pos.len() - 1);
                    }
                    self.ladder(&pos, wb, true);
                    for &q in &negs {
                        self.x(q);
                    }
                } else {
                    for b in body {
                        self.gate(b, &all, wb);
                    }
                }
            }
            Gate::GlobalPhase(t) => {
                if m == 0 {
                    self.phase(*t);
                } else {
                    self.gate_pos(&Gate::Phase(c[m - 1], *t), &c[..m - 1], wb);
                }
            }
            Gate::Cnot(a, t) => {
                let mut cc = c.to_vec();
                cc.push(*a);
                self.gate_pos(&Gate::X(*t), &cc, wb);
            }
            Gate::Swap(a, b) => {
                if m == 0 {
                    self.cnot(*a, *b);
                    self.cnot(*b, *a);
                    self.cnot(*a, *b);
                } else {
                    let mut cc = c.to_vec();
                    cc.push(*a);
                    self.cnot(*b, *a);
                    self.gate_pos(&Gate::X(*b), &cc, wb);
                    self.cnot(*b, *a);
                }
            }
            Gate::UcRy {
                controls,
                target,
                angles,
            } => {
                let seq = gray_ucry(controls, *target, angles);
                if m == 0 {
                    for s in seq {
                        self.sink.emit(s);
                    }
                } else if vchain && m >= 2 {
                    let w = self.ladder(c, wb, false);
                    self.gate_pos(g, &[w], wb + m - 1);
                    self.ladder(c, wb, true);
                } else {
                    // Only the Rz layers need controls: the CNOTs multiply to identity.
                    for s in seq {
                        match s {
                            Gate::Rz(..) => self.gate_pos(&s, c, wb),
                            other => self.sink.emit(other),
                        }
                    }
                }
            }
            _ => {
                if m == 0 {
                    return self.single(g);
                }
                if m == 1 {
                    return self.single_controlled(g, c[0]);
                }
                if let Gate::X(t) = g {
                    if m == 2 {
                        return self.toffoli(c[0], c[1], *t);
                    }
                    if vchain {
                        let w = self.ladder(&c[..m - 1], wb, false);
                        self.toffoli(w, c[m - 1], *t);
                        self.ladder(&c[..m - 1], wb, true);
                    } else {
                        self.mcx(c, *t);
                    }
                    return;
                }
                if vchain {
                    let w = self.ladder(c, wb, false);
                    self.single_controlled(g, w);
                    self.ladder(c, wb, true);
                    return;
                }
                let diag = match *g {
                    Gate::Z(t) => Some((t, PI, FRAC_PI_2)),
                    Gate::Rz(t, th) => Some((t, th, 0.0)),
                    Gate::Phase(t, th) => Some((t, th, th / 2.0)),
                    _ => None,
                };
                if let Some((t, th, a)) = diag {
                    self.mcx(c, t);
                    self.rz(t, -th / 2.0);
                    self.mcx(c, t);
                    self.rz(t, th / 2.0);
                    if !matches!(g, Gate::Rz(..)) {
                        self.gate_pos(&Gate::GlobalPhase(a), c, wb);
                    }
                    return;
                }
                let (t, mat) = g.single_qubit().expect("single-qubit gate");
                let (a, b, gm, d) = zyz(&mat);
                self.rz(t, (d - b) / 2.0);
                self.mcx(c, t);
                self.rz(t, -(d + b) / 2.0 - FRAC_PI_2);
                self.rx(t, -gm / 2.0);
                self.rz(t, FRAC_PI_2);
                self.mcx(c, t);
                self.rz(t, -FRAC_PI_2);
                self.rx(t, gm / 2.0);
                self.rz(t, FRAC_PI_2 + b);
                self.gate_pos(&Gate::GlobalPhase(a), c, wb);
            }
        }
    }
}

fn run(c: &Circuit, mode: LoweringMode, sink: &mut dyn Sink) -> usize {
    let mut l = Lowerer {
        mode,
        n_orig: c.n_qubits,
        max_work: 0,
        sink,
    };
    for g in &c.gates {
        l.gate(g, &[], 0);
    }
    l.max_work
}

/// Lower to Rx, Rz, CNOT plus free global phases.
pub fn lower(c: &Circuit, mode: LoweringMode) -> SimResult<Circuit> {
    c.validate()?;
    let mut gates = Vec::new();
    let work = run(c, mode, &mut gates);
    Ok(Circuit {
        n_qubits: c.n_qubits + work,
        gates,
        registers: c.registers.clone(),
        work_qubits: c.work_qubits + work,
    })
}

/// Count an already lowered circuit.
pub fn count(c: &Circuit) -> SimResult<GateCount> {
    let mut t = Tally::default();
    for g in &c.gates {
        match g {
            Gate::Cnot(..) | Gate::Rx(..) | Gate::Rz(..) | Gate::GlobalPhase(_) => t.emit(g.clone()),
            other => return Err(SimError::NotLowered(other.name().to_string())),
        }
    }
    Ok(GateCount {
        cnot: t.cnot,
        rot: t.rot,
        ancilla_work: c.work_qubits,
    })
}

/// Count of the lowered circuit without materializing it.
pub fn lowered_count(c: &Circuit, mode: LoweringMode) -> SimResult<GateCount> {
    c.validate()?;
    let mut t = Tally::default();
    let work = run(c, mode, &mut t);
    Ok(GateCount {
        cnot: t.cnot,
        rot: t.rot,
        ancilla_work: c.work_qubits + work,
    })
}

/// Both modes, plus the cheaper one (by CNOTs, then rotations).
pub fn best_count(c: &Circuit) -> SimResult<(LoweringMode, GateCount, GateCount)> {
    let v = lowered_count(c, LoweringMode::Vchain)?;
    let q = lowered_count(c, LoweringMode::Quadratic)?;
    let pick = if (q.cnot, q.rot) <= (v.cnot, v.rot) {
        LoweringMode::Quadratic
    } else {
        LoweringMode::Vchain
    };
    Ok((pick, v, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::max_abs;

    fn check(c: &Circuit) {
        let want = c.unitary().unwrap();
        for mode in [LoweringMode::Vchain, LoweringMode::Quadratic] {
            let l = lower(c, mode).unwrap();
            let got = l.unitary_on_clean_work().unwrap();
            let err = max_abs(&(&got - &want));
            assert!(err < 1e-10, "{mode:?} err {err} for {:?}", c.gates);
            let n = lowered_count(c, mode).unwrap();
            assert_eq!(n, count(&l).unwrap());
        }
    }

    fn one(n: usize, g: Gate) -> Circuit {
        let mut c = Circuit::new(n);
        c.push(g);
        c
    }

    #[test]
    fn single_qubit_gates_lower_exactly() {
        let u = {
            let a = Complex64::new(0.6, 0.1);
            let b = Complex64::new(0.3, -0.2);
            let nrm = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (a, b) = (a / nrm, b / nrm);
            let ph = Complex64::from_polar(1.0, 0.37);
            [[a, -b.conj() * ph], [b, a.conj() * ph]]
        };
        for g in [
            Gate::H(0),
            Gate::X(0),
            Gate::Y(0),
            Gate::Z(0),
            Gate::Rx(0, 0.3),
            Gate::Ry(0, -1.1),
            Gate::Rz(0, 2.2),
            Gate::Phase(0, 0.9),
            Gate::U(0, u),
        ] {
            check(&one(1, g.clone()));
            for k in 1..=4 {
                let controls: Vec<(usize, bool)> = (1..=k).map(|q| (q, q % 2 == 1)).collect();
                check(&one(k + 1, g.clone().controlled(controls.clone())));
                // with idle qubits around
                check(&one(k + 3, g.clone().controlled(controls)));
            }
        }
    }

    #[test]
    fn toffoli_cost() {
        let c = one(3, Gate::Mc {
            controls: vec![(0, true), (1, true)],
            body: vec![Gate::X(2)],
        });
        let n = lowered_count(&c, LoweringMode::Quadratic).unwrap();
        assert_eq!((n.cnot, n.rot), (6, 11));
    }

    #[test]
    fn mcx_linear_with_dirty_ancillas() {
        for m in 3..=5 {
            // exactly m - 2 idle qubits
            let n = 2 * m - 1;
            let c = one(n, Gate::Mc {
                controls: (0..m).map(|q| (q, true)).collect(),
                body: vec![Gate::X(m)],
            });
            check(&c);
            let k = lowered_count(&c, LoweringMode::Quadratic).unwrap();
            assert_eq!(k.cnot, 6 * (4 * m as u64 - 8));
            assert_eq!(k.ancilla_work, 0);
            let v = lowered_count(&c, LoweringMode::Vchain).unwrap();
            assert_eq!(v.ancilla_work, m - 2);
        }
    }

    #[test]
    fn composite_gates_lower_exactly() {
        let mut c = Circuit::new(5);
        c.push(Gate::Swap(0, 3));
        c.push(Gate::UcRy {
            controls: vec![1, 2],
            target: 4,
            angles: vec![0.1, -0.4, 0.9, 1.3],
        });
        c.push(Gate::Mc {
            controls: vec![(0, true), (4, false)],
            body: vec![
                Gate::Swap(1, 2),
                Gate::GlobalPhase(0.7),
                Gate::UcRy {
                    controls: vec![3],
                    target: 1,
                    angles: vec![0.5, -0.2],
                },
                Gate::Mc {
                    controls: vec![(3, true)],
                    body: vec![Gate::H(2), Gate::Cnot(2, 1)],
                },
            ],
        });
        c.push(Gate::Cnot(4, 0));
        check(&c);
    }

    #[test]
    fn ucry_gray_cost() {
        for l in 0..5 {
            let c = one(l + 1, Gate::UcRy {
                controls: (0..l).collect(),
                target: l,
                angles: (0..1 << l).map(|j| 0.1 * j as f64 + 0.05).collect(),
            });
            check(&c);
            let k = lowered_count(&c, LoweringMode::Quadratic).unwrap();
            if l > 0 {
                assert_eq!(k.rot, (1 << l) + 2);
                assert_eq!(k.cnot, 1 << l);
            }
        }
    }

    #[test]
    fn count_rejects_unlowered() {
        let c = one(1, Gate::H(0));
        assert!(matches!(count(&c), Err(SimError::NotLowered(_))));
    }

    #[test]
    fn full_register_controls_need_no_ancilla() {
        // every qubit busy: square-root recursion path
        let c = one(5, Gate::Mc {
            controls: (0..4).map(|q| (q, true)).collect(),
            body: vec![Gate::X(4)],
        });
        check(&c);
    }
}
