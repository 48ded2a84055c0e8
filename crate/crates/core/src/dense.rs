//! Dense linear-algebra oracle.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{SimError, SimResult};

pub type DenseOperator = DMatrix<Complex64>;
pub type StateVector = DVector<Complex64>;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Above this dimension the spectral norm falls back to power iteration.
const SVD_DIM_LIMIT: usize = 1024;

pub fn hermitian_deviation(m: &DenseOperator) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Largest entry magnitude.
pub fn max_abs(m: &DenseOperator) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn unitarity_deviation(u: &DenseOperator) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - DenseOperator::identity(n, n)))
}

/// Eigenpairs of a Hermitian matrix, ascending eigenvalues.
pub fn eigh(h: &DenseOperator) -> SimResult<(Vec<f64>, DenseOperator)> {
    let dev = hermitian_deviation(h);
    if dev > 1e-10 * (1.0 + max_abs(h)) {
        return Err(SimError::NonHermitian(dev));
    }
    let herm = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DenseOperator::from_fn(h.nrows(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    Ok((vals, vecs))
}

/// `V diag(exp(-i t v)) V^dagger`.
pub fn exp_from_eigh(vals: &[f64], vecs: &DenseOperator, t: f64) -> DenseOperator {
    let mut scaled = vecs.clone();
    for (c, &v) in vals.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, -v * t);
        for z in scaled.column_mut(c).iter_mut() {
            *z *= ph;
        }
    }
    scaled * vecs.adjoint()
}

/// `exp(-i H t)` by Hermitian eigendecomposition.
pub fn matrix_exp_hermitian(h: &DenseOperator, t: f64) -> SimResult<DenseOperator> {
    let (vals, vecs) = eigh(h)?;
    Ok(exp_from_eigh(&vals, &vecs, t))
}

/// Largest singular value.
pub fn spectral_norm(m: &DenseOperator) -> f64 {
    if m.nrows().max(m.ncols()) <= SVD_DIM_LIMIT {
        m.singular_values().iter().cloned().fold(0.0, f64::max)
    } else {
        power_norm(m)
    }
}

fn power_norm(m: &DenseOperator) -> f64 {
    let n = m.ncols();
    let mut v = StateVector::from_fn(n, |i, _| Complex64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.05));
    v /= Complex64::new(v.norm(), 0.0);
    let mut est = 0.0;
    for _ in 0..500 {
        let w = m.adjoint() * (m * &v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw.sqrt();
        v = w / Complex64::new(nw, 0.0);
        if (next - est).abs() <= 1e-12 * next {
            return next;
        }
        est = next;
    }
    est
}

pub fn kron(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    a.kronecker(b)
}

/// Embed `local` (acting on `sites.len()` qubits; local qubit i is global
/// qubit `sites[i]`) into an n-qubit register.
pub fn embed(local: &DenseOperator, sites: &[usize], total_n: usize) -> SimResult<DenseOperator> {
    check_sites(sites, total_n)?;
    let k = sites.len();
    if local.nrows() != 1 << k || local.ncols() != 1 << k {
        return Err(SimError::BadSites(format!(
            "operator of dimension {} does not act on {} qubits",
            local.nrows(),
            k
        )));
    }
    let dim = 1usize << total_n;
    let mut out = DenseOperator::identity(dim, dim);
    apply_local(&mut out, local, sites);
    Ok(out)
}

fn check_sites(sites: &[usize], total_n: usize) -> SimResult<()> {
    let mut seen = 0u64;
    for &s in sites {
        if s >= total_n {
            return Err(SimError::BadSites(format!("qubit {s} out of range for {total_n} qubits")));
        }
        if seen >> s & 1 == 1 {
            return Err(SimError::BadSites(format!("qubit {s} repeated")));
        }
        seen |= 1 << s;
    }
    Ok(())
}

/// Scatter the local index bits of `l` onto the global positions `qubits`.
#[inline]
fn spread(l: usize, qubits: &[usize]) -> usize {
    let mut g = 0;
    for (i, &q) in qubits.iter().enumerate() {
        g |= (l >> i & 1) << q;
    }
    g
}

/// Apply `local` to one state vector in place.
pub fn apply_local_vec(state: &mut [Complex64], local: &DenseOperator, qubits: &[usize]) {
    let k = qubits.len();
    let ld = 1usize << k;
    let mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
    let offsets: Vec<usize> = (0..ld).map(|l| spread(l, qubits)).collect();
    let mut buf = vec![C0; ld];
    for base in 0..state.len() {
        if base & mask != 0 {
            continue;
        }
        for l in 0..ld {
            buf[l] = state[base | offsets[l]];
        }
        for r in 0..ld {
            let mut acc = C0;
            for l in 0..ld {
                acc += local[(r, l)] * buf[l];
            }
            state[base | offsets[r]] = acc;
        }
    }
}

/// Left-multiply every column of `mat` by the embedded `local`.
pub fn apply_local(mat: &mut DenseOperator, local: &DenseOperator, qubits: &[usize]) {
    let rows = mat.nrows();
    mat.as_mut_slice()
        .par_chunks_mut(rows)
        .for_each(|col| apply_local_vec(col, local, qubits));
}

/// Multiply every column by a diagonal.
pub fn apply_diag(mat: &mut DenseOperator, diag: &[Complex64]) {
    let rows = mat.nrows();
    mat.as_mut_slice().par_chunks_mut(rows).for_each(|col| {
        for (a, d) in col.iter_mut().zip(diag) {
            *a *= d;
        }
    });
}

/// Centered Fourier transform
/// `FT[j,k] = N^{-1/2} exp(2 pi i (j-s)(k-s)/N)`, `s = (N-1)/2`.
pub fn symmetric_ft(n: usize) -> DenseOperator {
    let s = (n as f64 - 1.0) / 2.0;
    let norm = 1.0 / (n as f64).sqrt();
    DenseOperator::from_fn(n, n, |j, k| {
        let ang = 2.0 * std::f64::consts::PI * (j as f64 - s) * (k as f64 - s) / n as f64;
        Complex64::from_polar(norm, ang)
    })
}

pub fn diag_matrix(d: &[f64]) -> DenseOperator {
    let n = d.len();
    DenseOperator::from_fn(n, n, |i, j| if i == j { Complex64::new(d[i], 0.0) } else { C0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> DenseOperator {
        let a = DenseOperator::from_fn(dim, dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        (&a + a.adjoint()).scale(0.5)
    }

    #[test]
    fn exp_of_z() {
        let z = diag_matrix(&[1.0, -1.0]);
        let u = matrix_exp_hermitian(&z, PI / 2.0).unwrap();
        assert!((u[(0, 0)] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((u[(1, 1)] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = DenseOperator::zeros(4, 4);
        let u = matrix_exp_hermitian(&z, 3.0).unwrap();
        assert!(max_abs(&(u - DenseOperator::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn exp_rejects_non_hermitian() {
        let mut m = DenseOperator::zeros(2, 2);
        m[(0, 1)] = c(1.0);
        assert_eq!(matrix_exp_hermitian(&m, 1.0).unwrap_err().code(), "NON_HERMITIAN");
    }

    #[test]
    fn group_law_on_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(8, &mut rng);
        let u1 = matrix_exp_hermitian(&h, 0.3).unwrap();
        let u2 = matrix_exp_hermitian(&h, 0.9).unwrap();
        let u12 = matrix_exp_hermitian(&h, 1.2).unwrap();
        assert!(max_abs(&(u1 * u2 - &u12)) < 1e-10);
        assert!(unitarity_deviation(&u12) < 1e-10);
    }

    #[test]
    fn norms() {
        assert!((spectral_norm(&DenseOperator::identity(4, 4)) - 1.0).abs() < 1e-12);
        assert!((spectral_norm(&diag_matrix(&[3.0, -1.0])) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(16, &mut rng);
        let a = spectral_norm(&h);
        let b = power_norm(&h);
        assert!((a - b).abs() < 1e-8 * a);
    }

    #[test]
    fn norm_of_unitary_difference_matches_eigen_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = matrix_exp_hermitian(&random_hermitian(8, &mut rng), 1.0).unwrap();
        let v = matrix_exp_hermitian(&random_hermitian(8, &mut rng), 1.0).unwrap();
        let d = &u - &v;
        // ||D||^2 = largest eigenvalue of D^dagger D
        let (vals, _) = eigh(&(d.adjoint() * &d)).unwrap();
        let oracle = vals.last().unwrap().sqrt();
        assert!((spectral_norm(&d) - oracle).abs() < 1e-9);
    }

    #[test]
    fn embed_single_qubit() {
        let z = diag_matrix(&[1.0, -1.0]);
        let e = embed(&z, &[0], 2).unwrap();
        let expect = kron(&DenseOperator::identity(2, 2), &z);
        assert!(max_abs(&(e - expect)) < 1e-15);
    }

    #[test]
    fn embed_non_adjacent_matches_permuted_kron() {
        let x = DenseOperator::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let y = DenseOperator::from_row_slice(2, 2, &[c(0.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), c(0.0)]);
        // local qubit 0 -> global 0 gets y, local qubit 1 -> global 2 gets x
        let local = kron(&x, &y);
        let e = embed(&local, &[0, 2], 3).unwrap();
        let expect = kron(&kron(&x, &DenseOperator::identity(2, 2)), &y);
        assert!(max_abs(&(e - expect)) < 1e-15);
    }

    #[test]
    fn embed_identity_and_errors() {
        let e = embed(&DenseOperator::identity(4, 4), &[1, 3], 4).unwrap();
        assert!(max_abs(&(e - DenseOperator::identity(16, 16))) < 1e-15);
        assert_eq!(embed(&DenseOperator::identity(4, 4), &[1, 1], 3).unwrap_err().code(), "BAD_SITES");
        assert_eq!(embed(&DenseOperator::identity(2, 2), &[5], 3).unwrap_err().code(), "BAD_SITES");
    }

    #[test]
    fn ft_is_unitary() {
        for n in [2, 4, 8, 16] {
            assert!(unitarity_deviation(&symmetric_ft(n)) < 1e-12);
        }
    }

    #[test]
    fn ft_two_by_two_closed_form() {
        let f = symmetric_ft(2);
        let r = 1.0 / 2f64.sqrt();
        // s = 1/2: phases exp(i pi/2 * (+-1/2)(+-1/2) * 2) = exp(+-i pi/4)
        let a = Complex64::from_polar(r, PI / 4.0);
        let b = Complex64::from_polar(r, -PI / 4.0);
        assert!((f[(0, 0)] - a).norm() < 1e-15);
        assert!((f[(1, 1)] - a).norm() < 1e-15);
        assert!((f[(0, 1)] - b).norm() < 1e-15);
        assert!((f[(1, 0)] - b).norm() < 1e-15);
    }

    #[test]
    fn ft_similarity_preserves_spectrum() {
        let d: Vec<f64> = (0..8).map(|j| -3.5 + j as f64).collect();
        let f = symmetric_ft(8);
        let m = &f * diag_matrix(&d) * f.adjoint();
        let (vals, _) = eigh(&m).unwrap();
        for (a, b) in vals.iter().zip(&d) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
