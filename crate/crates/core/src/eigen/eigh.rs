//! Dense Hermitian eigensolver.
//!
//! Householder reduction of a complex Hermitian matrix to a Hermitian
//! tridiagonal, a diagonal phase similarity that makes the off-diagonal real,
//! then the implicit-shift QL iteration on the real symmetric tridiagonal.
//! Eigenvectors are recovered by applying the phases and reflectors to the
//! accumulated QL rotations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ONE, ZERO};

const MAX_QL_ITERATIONS: usize = 60;

/// Eigenvalues (ascending) and, optionally, orthonormal eigenvectors; vector
/// `i` belongs to value `i`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<Vec<Complex64>>>,
}

struct Reflector {
    /// First row/column the reflector acts on.
    offset: usize,
    v: Vec<Complex64>,
    tau: f64,
}

struct Tridiagonal {
    diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i+1`; last entry is zero.
    off: Vec<f64>,
    /// Phase applied to basis vector `i` to make the off-diagonal real.
    phases: Vec<Complex64>,
    reflectors: Vec<Reflector>,
}

fn tridiagonalize(a: &CMatrix) -> Tridiagonal {
    let n = a.rows();
    let mut w = a.clone();
    let data = w.as_mut_slice();
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut sub = vec![ZERO; n];

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<Complex64> = (k + 1..n).map(|i| data[i * n + k]).collect();
        let alpha = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let x0 = x[0];
        let tail_zero = x[1..].iter().all(|z| z.re == 0.0 && z.im == 0.0);
        if alpha == 0.0 || tail_zero {
            sub[k] = x0;
            continue;
        }
        let x0_abs = x0.norm();
        let phase = if x0_abs > 0.0 { x0 / x0_abs } else { ONE };
        let mut v = x;
        v[0] += phase * alpha;
        let tau = 1.0 / (alpha * (alpha + x0_abs));

        // p = tau * B v over the trailing block.
        let mut p = vec![ZERO; m];
        for (ii, pi) in p.iter_mut().enumerate() {
            let row = &data[(k + 1 + ii) * n + k + 1..(k + 2 + ii) * n];
            let s: Complex64 = row.iter().zip(&v).map(|(b, vj)| b * vj).sum();
            *pi = s * tau;
        }
        let vp: Complex64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let kk = 0.5 * tau * vp.re;
        let q: Vec<Complex64> = p.iter().zip(&v).map(|(pi, vi)| pi - vi * kk).collect();
        for ii in 0..m {
            let vi = v[ii];
            let qi = q[ii];
            let row = &mut data[(k + 1 + ii) * n + k + 1..(k + 2 + ii) * n];
            for (jj, b) in row.iter_mut().enumerate() {
                *b -= vi * q[jj].conj() + qi * v[jj].conj();
            }
        }
        sub[k] = -phase * alpha;
        reflectors.push(Reflector { offset: k + 1, v, tau });
    }
    if n >= 2 {
        sub[n - 2] = data[(n - 1) * n + (n - 2)];
    }

    let diag: Vec<f64> = (0..n).map(|i| data[i * n + i].re).collect();
    let mut phases = vec![ONE; n];
    let mut off = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let b = sub[i];
        let mag = b.norm();
        off[i] = mag;
        phases[i + 1] = if mag > 0.0 { phases[i] * (b / mag) } else { phases[i] };
    }
    Tridiagonal {
        diag,
        off,
        phases,
        reflectors,
    }
}

/// Implicit QL with Wilkinson-type shifts. `z`, when present, is column-major
/// (column `i` contiguous) and accumulates the rotations.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NoConvergence {
                        dim: n,
                        iterations: MAX_QL_ITERATIONS,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(zz) = z.as_deref_mut() {
                        let (left, right) = zz.split_at_mut((i + 1) * n);
                        let col_i = &mut left[i * n..];
                        let col_j = &mut right[..n];
                        for (zi, zj) in col_i.iter_mut().zip(col_j.iter_mut()) {
                            let hh = *zj;
                            *zj = s * *zi + c * hh;
                            *zi = c * *zi - s * hh;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Full eigendecomposition of a Hermitian matrix (only the lower triangle
/// and diagonal are trusted; callers pass exactly Hermitian matrices).
pub fn eigh(a: &CMatrix, want_vectors: bool) -> Result<HermitianEigen> {
    assert!(a.is_square(), "eigh requires a square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: want_vectors.then(Vec::new),
        });
    }
    let tri = tridiagonalize(a);
    let mut d = tri.diag.clone();
    let mut e = tri.off.clone();

    if !want_vectors {
        tridiagonal_ql(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        return Ok(HermitianEigen {
            values: d,
            vectors: None,
        });
    }

    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tridiagonal_ql(&mut d, &mut e, Some(&mut z))
        .map_err(|_| Error::NoConvergence { dim: n, iterations: MAX_QL_ITERATIONS })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &col in &order {
        values.push(d[col]);
        let zc = &z[col * n..(col + 1) * n];
        let mut y: Vec<Complex64> = zc.iter().zip(&tri.phases).map(|(&zr, ph)| ph * zr).collect();
        for refl in tri.reflectors.iter().rev() {
            let seg = &mut y[refl.offset..];
            let dot: Complex64 = refl.v.iter().zip(seg.iter()).map(|(v, s)| v.conj() * s).sum();
            let coef = dot * refl.tau;
            for (s, v) in seg.iter_mut().zip(&refl.v) {
                *s -= v * coef;
            }
        }
        vectors.push(y);
    }
    Ok(HermitianEigen {
        values,
        vectors: Some(vectors),
    })
}

pub fn eigvalsh(a: &CMatrix) -> Result<Vec<f64>> {
    eigh(a, false).map(|r| r.values)
}
