//! Small dense linear algebra for the matrix oracles: Haar-distributed
//! orthogonal/unitary matrices and symmetric/Hermitian eigenvalues by
//! cyclic Jacobi rotations.
//!
//! Matrices are row-major `Vec`s of size `rows * cols`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub const MAX_SWEEPS: usize = 100;

/// Haar-distributed `n × n` orthogonal matrix: Gram–Schmidt on the columns
/// of a Gaussian matrix, which is QR with a positive diagonal in `R`.
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut q: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    for j in 0..n {
        for p in 0..j {
            let d: f64 = (0..n).map(|i| q[i * n + p] * q[i * n + j]).sum();
            for i in 0..n {
                q[i * n + j] -= d * q[i * n + p];
            }
        }
        let norm = (0..n).map(|i| q[i * n + j].powi(2)).sum::<f64>().sqrt();
        for i in 0..n {
            q[i * n + j] /= norm;
        }
    }
    q
}

/// Haar-distributed `n × n` unitary matrix (complex Gram–Schmidt; the
/// resulting `R` has a real positive diagonal).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let mut q: Vec<Complex64> = (0..n * n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    for j in 0..n {
        for p in 0..j {
            let d: Complex64 = (0..n).map(|i| q[i * n + p].conj() * q[i * n + j]).sum();
            for i in 0..n {
                let v = q[i * n + p];
                q[i * n + j] -= d * v;
            }
        }
        let norm = (0..n).map(|i| q[i * n + j].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            q[i * n + j] /= norm;
        }
    }
    q
}

/// Eigenvalues of a real symmetric matrix, in descending order.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let scale: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut sweeps = 0;
    loop {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum();
        if off.sqrt() <= 1e-15 * scale || scale == 0.0 {
            break;
        }
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(Error::JacobiNonConvergence { sweeps: MAX_SWEEPS });
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    Ok(ev)
}

/// Eigenvalues of a complex Hermitian matrix via the real symmetric
/// embedding `[[A, -B], [B, A]]`, whose spectrum is that of `A + iB` with
/// every eigenvalue doubled.
pub fn hermitian_eigenvalues(h: &[Complex64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(h.len(), n * n);
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[i * n + j];
            a[i * m + j] = z.re;
            a[(i + n) * m + j + n] = z.re;
            a[i * m + j + n] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    let ev = symmetric_eigenvalues(a, m)?;
    Ok(ev.iter().step_by(2).copied().collect())
}

/// Singular values (descending) of a real `rows × cols` matrix with
/// `rows ≥ cols`, from the eigenvalues of `AᵀA`.
pub fn singular_values(a: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    let mut g = vec![0.0; cols * cols];
    for i in 0..cols {
        for j in i..cols {
            let v: f64 = (0..rows).map(|r| a[r * cols + i] * a[r * cols + j]).sum();
            g[i * cols + j] = v;
            g[j * cols + i] = v;
        }
    }
    Ok(symmetric_eigenvalues(g, cols)?
        .into_iter()
        .map(|v| v.max(0.0).sqrt())
        .collect())
}

/// Singular values (descending) of a complex `rows × cols` matrix.
pub fn singular_values_complex(a: &[Complex64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    let mut g = vec![Complex64::new(0.0, 0.0); cols * cols];
    for i in 0..cols {
        for j in i..cols {
            let v: Complex64 = (0..rows).map(|r| a[r * cols + i].conj() * a[r * cols + j]).sum();
            g[i * cols + j] = v;
            g[j * cols + i] = v.conj();
        }
    }
    Ok(hermitian_eigenvalues(&g, cols)?
        .into_iter()
        .map(|v| v.max(0.0).sqrt())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn haar_matrices_are_orthonormal() {
        let mut rng = stream(1, "linalg", 0);
        let n = 5;
        let q = haar_orthogonal(n, &mut rng);
        let u = haar_unitary(n, &mut rng);
        for i in 0..n {
            for j in 0..n {
                let d: f64 = (0..n).map(|k| q[k * n + i] * q[k * n + j]).sum();
                let z: Complex64 = (0..n).map(|k| u[k * n + i].conj() * u[k * n + j]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-12);
                assert!((z - Complex64::new(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn haar_entry_moments() {
        // E|U_11|^2 = 1/n, E|U_11|^4 = 3/(n(n+2)) real, 2/(n(n+1)) complex
        let mut rng = stream(2, "linalg", 0);
        let n = 4;
        let reps = 40_000;
        let (mut o2, mut o4, mut u2, mut u4, mut o12) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..reps {
            let q = haar_orthogonal(n, &mut rng);
            let u = haar_unitary(n, &mut rng);
            // bottom-right entry: checks that column order does not matter
            let a = q[n * n - 1];
            o2 += a * a;
            o4 += a.powi(4);
            o12 += q[1] * q[2];
            let b = u[n * n - 1].norm_sqr();
            u2 += b;
            u4 += b * b;
        }
        let r = reps as f64;
        let nf = n as f64;
        assert!((o2 / r - 1.0 / nf).abs() < 0.01);
        assert!((o4 / r - 3.0 / (nf * (nf + 2.0))).abs() < 0.01);
        assert!((u2 / r - 1.0 / nf).abs() < 0.01);
        assert!((u4 / r - 2.0 / (nf * (nf + 1.0))).abs() < 0.01);
        assert!((o12 / r).abs() < 0.01);
    }

    #[test]
    fn eigenvalues_match_nalgebra() {
        let mut rng = stream(3, "linalg", 0);
        for n in [1, 2, 3, 6, 10] {
            let g: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] = g[i * n + j] + g[j * n + i];
                }
            }
            let ours = symmetric_eigenvalues(a.clone(), n).unwrap();
            let m = nalgebra::DMatrix::from_row_slice(n, n, &a);
            let mut theirs: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(|x, y| y.total_cmp(x));
            for (x, y) in ours.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-11, "n={n}");
            }
        }
    }

    #[test]
    fn hermitian_two_by_two_closed_form() {
        let (a, d) = (1.5, -0.5);
        let b = Complex64::new(0.3, -0.8);
        let h = vec![Complex64::new(a, 0.0), b, b.conj(), Complex64::new(d, 0.0)];
        let ev = hermitian_eigenvalues(&h, 2).unwrap();
        let disc = ((a - d).powi(2) + 4.0 * b.norm_sqr()).sqrt();
        assert!((ev[0] - ev[1] - disc).abs() < 1e-13);
        assert!((ev[0] + ev[1] - (a + d)).abs() < 1e-13);
    }

    #[test]
    fn singular_values_of_known_matrix() {
        // diag(3, 1) padded to 3x2 and rotated on the left
        let c = 0.6f64;
        let s = 0.8f64;
        let a = vec![3.0 * c, 0.0, 3.0 * s, 0.0, 0.0, 1.0];
        let sv = singular_values(&a, 3, 2).unwrap();
        assert!((sv[0] - 3.0).abs() < 1e-13 && (sv[1] - 1.0).abs() < 1e-13);
        let ac: Vec<Complex64> = a.iter().map(|&v| Complex64::new(0.0, v)).collect();
        let svc = singular_values_complex(&ac, 3, 2).unwrap();
        assert!((svc[0] - 3.0).abs() < 1e-13 && (svc[1] - 1.0).abs() < 1e-13);
    }
}
