//! Hermitian eigendecomposition and PSD-cone utilities.
//!
//! A Hermitian matrix H = A + iB embeds into the real symmetric matrix
//! `[[A, -B], [B, A]]` of doubled dimension, whose spectrum is that of H
//! with every eigenvalue duplicated. The numerical core therefore stays
//! real: projections apply the spectral function in the embedded space and
//! fold the result back; full complex eigenbases are recovered by mapping
//! embedded eigenvectors `(p, q) -> p + iq` and re-orthonormalizing.

use nalgebra::{DMatrix, DVector};
use nalgebra::linalg::SymmetricEigen;

use crate::{C64, Error, Result};

/// Real symmetric embedding of a Hermitian matrix.
pub fn embed(h: &DMatrix<C64>) -> DMatrix<f64> {
    let n = h.nrows();
    let mut e = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = h[(r, c)];
            e[(r, c)] = z.re;
            e[(n + r, n + c)] = z.re;
            e[(r, n + c)] = -z.im;
            e[(n + r, c)] = z.im;
        }
    }
    e
}

/// Inverse of [`embed`], averaging the redundant blocks and Hermitianizing.
pub fn unembed(e: &DMatrix<f64>) -> DMatrix<C64> {
    let n = e.nrows() / 2;
    let mut h = DMatrix::from_element(n, n, C64::default());
    for r in 0..n {
        for c in 0..n {
            let re = 0.5 * (e[(r, c)] + e[(n + r, n + c)]);
            let im = 0.5 * (e[(n + r, c)] - e[(r, n + c)]);
            h[(r, c)] = C64::new(re, im);
        }
    }
    // fold H onto its Hermitian part
    for r in 0..n {
        for c in (r + 1)..n {
            let avg = 0.5 * (h[(r, c)] + h[(c, r)].conj());
            h[(r, c)] = avg;
            h[(c, r)] = avg.conj();
        }
        h[(r, r)] = C64::new(h[(r, r)].re, 0.0);
    }
    h
}

fn hermitianize(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let mut h = a.clone();
    for r in 0..n {
        for c in r..n {
            let avg = 0.5 * (a[(r, c)] + a[(c, r)].conj());
            h[(r, c)] = avg;
            h[(c, r)] = avg.conj();
        }
        h[(r, r)] = C64::new(h[(r, r)].re, 0.0);
    }
    h
}

fn check_finite(a: &DMatrix<C64>) -> Result<()> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Rotate `u` so its first non-negligible component is real positive.
fn fix_phase(u: &mut DVector<C64>) {
    let max_mag = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max_mag == 0.0 {
        return;
    }
    let anchor = u.iter().find(|z| z.norm() > 1e-12 * max_mag).copied();
    if let Some(z) = anchor {
        let rot = z.conj() / z.norm();
        for entry in u.iter_mut() {
            *entry *= rot;
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in descending order with a unitary eigenbasis whose
/// columns follow the deterministic phase convention of [`top_eigvec`].
pub fn hermitian_eig(a: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    check_finite(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::from_element(0, 0, C64::default())));
    }
    let h = hermitianize(a);
    let se = SymmetricEigen::new(embed(&h));
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].partial_cmp(&se.eigenvalues[i]).unwrap());

    // Each embedded eigenvector (p, q) maps to the complex vector p + iq;
    // duplicates (the J-images) are dropped by Gram-Schmidt.
    let mut values = Vec::with_capacity(n);
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(n);
    for &idx in &order {
        if basis.len() == n {
            break;
        }
        let w = se.eigenvectors.column(idx);
        let mut u = DVector::from_fn(n, |r, _| C64::new(w[r], w[n + r]));
        for b in &basis {
            let proj = b.dotc(&u);
            u.axpy(-proj, b, C64::new(1.0, 0.0));
        }
        let norm = u.norm();
        if norm > 1e-6 {
            u /= C64::new(norm, 0.0);
            fix_phase(&mut u);
            values.push(se.eigenvalues[idx]);
            basis.push(u);
        }
    }
    // Never expected at f64 precision; keeps the function total if Gram-
    // Schmidt starves on a pathological spectrum.
    if basis.len() < n {
        for k in 0..n {
            if basis.len() == n {
                break;
            }
            let mut u = DVector::from_element(n, C64::default());
            u[k] = C64::new(1.0, 0.0);
            for b in &basis {
                let proj = b.dotc(&u);
                u.axpy(-proj, b, C64::new(1.0, 0.0));
            }
            let norm = u.norm();
            if norm > 1e-6 {
                u /= C64::new(norm, 0.0);
                let rayleigh = u.dotc(&(&h * &u)).re;
                fix_phase(&mut u);
                values.push(rayleigh);
                basis.push(u);
            }
        }
    }

    let vectors = DMatrix::from_fn(n, n, |r, c| basis[c][r]);
    Ok((values, vectors))
}

/// Frobenius-nearest PSD matrix: clip negative eigenvalues to zero.
///
/// Input is symmetrized on entry; non-finite entries are an error.
pub fn psd_project(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    check_finite(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(a.clone());
    }
    let h = hermitianize(a);
    let mut e = embed(&h);
    let se = SymmetricEigen::new(e.clone());
    // Subtract the negative spectral part only; in the splitting iteration
    // the negative subspace is typically small.
    let mut any_negative = false;
    for (k, &lambda) in se.eigenvalues.iter().enumerate() {
        if lambda < 0.0 {
            any_negative = true;
            let v = se.eigenvectors.column(k);
            e.ger(-lambda, &v, &v, 1.0);
        }
    }
    if !any_negative {
        return Ok(h);
    }
    Ok(unembed(&e))
}

/// Largest eigenvalue and a unit eigenvector with the first non-negligible
/// component rotated real positive.
pub fn top_eigvec(a: &DMatrix<C64>) -> Result<(f64, DVector<C64>)> {
    check_finite(a)?;
    let n = a.nrows();
    if n == 0 {
        return Err(Error::Dimension("top_eigvec of empty matrix".into()));
    }
    let h = hermitianize(a);
    let se = SymmetricEigen::new(embed(&h));
    let mut best = 0;
    for k in 1..2 * n {
        if se.eigenvalues[k] > se.eigenvalues[best] {
            best = k;
        }
    }
    let w = se.eigenvectors.column(best);
    let mut u = DVector::from_fn(n, |r, _| C64::new(w[r], w[n + r]));
    let norm = u.norm();
    if norm > 0.0 {
        u /= C64::new(norm, 0.0);
    }
    fix_phase(&mut u);
    Ok((se.eigenvalues[best], u))
}

/// Relative rank-one residual `(tr(X) - sigma_1(X)) / tr(X)` of a PSD matrix.
pub fn rank_one_residual(x: &DMatrix<C64>, sigma1: f64) -> f64 {
    let tr: f64 = (0..x.nrows()).map(|i| x[(i, i)].re).sum();
    if tr <= 0.0 {
        return 0.0;
    }
    ((tr - sigma1) / tr).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = crate::rng::substream(seed, &[11]);
        let raw = DMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        hermitianize(&raw)
    }

    fn reconstruct(values: &[f64], vectors: &DMatrix<C64>) -> DMatrix<C64> {
        let n = vectors.nrows();
        let mut acc = DMatrix::from_element(n, n, C64::default());
        for (k, &lambda) in values.iter().enumerate() {
            let v = vectors.column(k);
            for r in 0..n {
                for c in 0..n {
                    acc[(r, c)] += v[r] * v[c].conj() * lambda;
                }
            }
        }
        acc
    }

    #[test]
    fn embedding_roundtrip() {
        let h = random_hermitian(5, 1);
        let back = unembed(&embed(&h));
        assert!((&h - &back).norm() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_matrices() {
        for n in [1, 2, 3, 8, 20, 70] {
            let h = random_hermitian(n, n as u64);
            let (values, vectors) = hermitian_eig(&h).unwrap();
            assert_eq!(values.len(), n);
            let err = (&h - reconstruct(&values, &vectors)).norm();
            assert!(err <= 1e-9 * h.norm().max(1e-30), "n={n}: err {err:e}");
        }
    }

    #[test]
    fn eig_handles_degenerate_spectra() {
        // identity, the zero matrix, and a repeated-eigenvalue diagonal all
        // have heavily duplicated embedded spectra
        for (name, h) in [
            ("identity", DMatrix::from_diagonal_element(6, 6, C64::new(1.0, 0.0))),
            ("zero", DMatrix::from_element(6, 6, C64::default())),
            (
                "repeated",
                DMatrix::from_diagonal(&DVector::from_vec(vec![
                    C64::new(2.0, 0.0),
                    C64::new(2.0, 0.0),
                    C64::new(2.0, 0.0),
                    C64::new(1.0, 0.0),
                    C64::new(1.0, 0.0),
                    C64::new(-1.0, 0.0),
                ])),
            ),
        ] {
            let (values, vectors) = hermitian_eig(&h).unwrap();
            let err = (&h - reconstruct(&values, &vectors)).norm();
            assert!(err < 1e-10, "{name}: err {err:e}");
            // basis must be unitary
            let gram = vectors.adjoint() * &vectors;
            let eye = DMatrix::from_diagonal_element(6, 6, C64::new(1.0, 0.0));
            assert!((gram - eye).norm() < 1e-10, "{name}: basis not unitary");
        }
    }

    #[test]
    fn psd_project_identity_is_identity() {
        let eye = DMatrix::from_diagonal_element(4, 4, C64::new(1.0, 0.0));
        let p = psd_project(&eye).unwrap();
        assert!((&p - &eye).norm() < 1e-14);
    }

    #[test]
    fn psd_project_clips_negative_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
        ]));
        let p = psd_project(&a).unwrap();
        assert_relative_eq!(p[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p[(1, 1)].re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn psd_project_is_idempotent_and_nearest() {
        let a = random_hermitian(6, 3);
        let p = psd_project(&a).unwrap();
        let (values, _) = hermitian_eig(&p).unwrap();
        assert!(values.iter().all(|&l| l >= -1e-10));
        let pp = psd_project(&p).unwrap();
        assert!((&pp - &p).norm() <= 1e-12 * p.norm().max(1.0));

        // randomized optimality probe: no random PSD Q is closer to A
        let base = (&a - &p).norm();
        let mut rng = crate::rng::substream(9, &[23]);
        for _ in 0..1000 {
            let q_raw = DMatrix::from_fn(6, 6, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let q = psd_project(&hermitianize(&q_raw)).unwrap();
            assert!((&a - &q).norm() >= base - 1e-10);
        }
    }

    #[test]
    fn psd_project_rejects_non_finite() {
        let a = DMatrix::from_element(2, 2, C64::new(f64::NAN, 0.0));
        assert!(psd_project(&a).is_err());
    }

    #[test]
    fn top_eigvec_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(2.0, 0.0),
            C64::new(1.0, 0.0),
        ]));
        let (lambda, u) = top_eigvec(&a).unwrap();
        assert_relative_eq!(lambda, 2.0, epsilon = 1e-12);
        assert_relative_eq!(u[0].re, 1.0, epsilon = 1e-9);
        assert!(u[1].norm() < 1e-9);
    }

    #[test]
    fn top_eigvec_rank_one_spectrum() {
        // hh^H for h = (1, 2i): top eigenvalue ||h||^2, eigenvector h up to
        // the deterministic phase convention.
        let h = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
        let mut a = DMatrix::from_element(2, 2, C64::default());
        for r in 0..2 {
            for c in 0..2 {
                a[(r, c)] = h[r] * h[c].conj();
            }
        }
        let (lambda, u) = top_eigvec(&a).unwrap();
        assert_relative_eq!(lambda, 5.0, epsilon = 1e-10);
        let expected = &h / C64::new(h.norm(), 0.0);
        // convention makes u[0] real positive, matching expected here
        assert!((u - expected).norm() < 1e-9);
    }

    #[test]
    fn top_eigvec_residual_small() {
        for seed in 0..10 {
            let a = random_hermitian(12, 100 + seed);
            let p = psd_project(&a).unwrap();
            let (lambda, u) = top_eigvec(&p).unwrap();
            let residual = (&p * &u - u.map(|z| z * lambda)).norm();
            assert!(residual <= 1e-9 * lambda.max(1e-12), "residual {residual:e}");
        }
    }
}
