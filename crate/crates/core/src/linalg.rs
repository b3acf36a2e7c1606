//! Dense linear algebra kernels.
//!
//! Matrices are row-major `Vec<f64>` / `Vec<Complex64>` with an explicit
//! dimension. The symmetric eigensolver is a Householder reduction to
//! tridiagonal form followed by implicit QL with Wilkinson-style shifts. Both
//! stages are arranged so that every inner loop walks contiguous memory: the
//! transformation matrix is accumulated row-wise and the QL rotations are
//! applied to the *transposed* eigenvector matrix, whose rows are the
//! eigenvectors.

use crate::error::{Error, Result};
use crate::prelude::*;

/// Output of [`symmetric_eigen`]. `vectors[k * n + i]` is component `i` of
/// eigenvector `k`; energies are ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Option<Vec<f64>>,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Option<&[f64]> {
        self.vectors.as_ref().map(|v| &v[k * self.n..(k + 1) * self.n])
    }
}

/// Diagonalize the real symmetric matrix `a` (row-major, `n × n`). Only the
/// lower triangle is read. The input buffer is consumed as workspace.
pub fn symmetric_eigen(mut a: Vec<f64>, n: usize, want_vectors: bool) -> Result<SymmetricEigen> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
    }
    if n == 0 {
        return Ok(SymmetricEigen { n, values: Vec::new(), vectors: want_vectors.then(Vec::new) });
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let reflectors = tridiagonalize(&mut a, n, &mut d, &mut e);
    let mut zt = if want_vectors {
        let z = accumulate(&mut a, n, &reflectors);
        Some(transpose(&z, n))
    } else {
        None
    };
    drop(a);
    tridiagonal_ql(&mut d, &mut e, zt.as_deref_mut(), n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = zt.map(|zt| {
        let mut out = Vec::with_capacity(n * n);
        for &k in &order {
            out.extend_from_slice(&zt[k * n..(k + 1) * n]);
        }
        out
    });
    Ok(SymmetricEigen { n, values, vectors })
}

/// Householder vectors produced during the reduction: for step `i` the
/// vector `u` of length `i` together with `u / h`.
struct Reflector {
    u: Vec<f64>,
    u_over_h: Vec<f64>,
}

/// Reduces the lower triangle of `a` to tridiagonal form. On return `d`
/// holds the diagonal and `e[i]` the sub-diagonal element `(i, i-1)`.
fn tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) -> Vec<Option<Reflector>> {
    let mut reflectors: Vec<Option<Reflector>> = (0..n).map(|_| None).collect();
    let mut p = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let row_i = i * n;
        if l == 0 {
            e[i] = a[row_i];
            d[i] = a[row_i + i];
            continue;
        }
        let scale: f64 = a[row_i..=row_i + l].iter().map(|x| x.abs()).sum();
        if scale == 0.0 {
            e[i] = a[row_i + l];
            d[i] = a[row_i + i];
            continue;
        }
        let mut h = 0.0;
        for x in &mut a[row_i..=row_i + l] {
            *x /= scale;
            h += *x * *x;
        }
        let f = a[row_i + l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        a[row_i + l] = f - g;
        let u: Vec<f64> = a[row_i..=row_i + l].to_vec();

        // p = A u / h using the lower triangle only, row by row.
        let p = &mut p[..=l];
        p.iter_mut().for_each(|x| *x = 0.0);
        for j in 0..=l {
            let row = &a[j * n..j * n + j];
            let uj = u[j];
            let mut acc = a[j * n + j] * uj;
            for ((pk, &ajk), &uk) in p[..j].iter_mut().zip(row).zip(&u[..j]) {
                acc += ajk * uk;
                *pk += ajk * uj;
            }
            p[j] += acc;
        }
        let mut f = 0.0;
        for (pj, &uj) in p.iter_mut().zip(&u) {
            *pj /= h;
            f += *pj * uj;
        }
        let hh = f / (h + h);
        for (pj, &uj) in p.iter_mut().zip(&u) {
            *pj -= hh * uj;
        }
        // Rank-2 update of the leading block: A -= u q^T + q u^T.
        for j in 0..=l {
            let (fj, gj) = (u[j], p[j]);
            let row = &mut a[j * n..=j * n + j];
            for ((x, &qk), &uk) in row.iter_mut().zip(&p[..=j]).zip(&u[..=j]) {
                *x -= fj * qk + gj * uk;
            }
        }
        d[i] = h;
        let u_over_h = u.iter().map(|x| x / h).collect();
        reflectors[i] = Some(Reflector { u, u_over_h });
    }
    d[0] = a[0];
    e[0] = 0.0;
    for i in 1..n {
        if reflectors[i].is_some() {
            d[i] = a[i * n + i];
        }
    }
    reflectors
}

/// Forms the orthogonal matrix `Z` (row-major) with `Zᵀ A Z = T`.
fn accumulate(a: &mut [f64], n: usize, reflectors: &[Option<Reflector>]) -> Vec<f64> {
    // Reuse the workspace; the reduction no longer needs it.
    let z = a;
    z.iter_mut().for_each(|x| *x = 0.0);
    z[0] = 1.0;
    let mut g = vec![0.0; n];
    for i in 1..n {
        if let Some(r) = &reflectors[i] {
            // Block Z[0..i][0..i] -= (u/h) (Zᵀ u)ᵀ.
            let g = &mut g[..i];
            g.iter_mut().for_each(|x| *x = 0.0);
            for (k, &uk) in r.u.iter().enumerate() {
                let row = &z[k * n..k * n + i];
                for (gj, &zkj) in g.iter_mut().zip(row) {
                    *gj += uk * zkj;
                }
            }
            for (k, &wk) in r.u_over_h.iter().enumerate() {
                let row = &mut z[k * n..k * n + i];
                for (zkj, &gj) in row.iter_mut().zip(g.iter()) {
                    *zkj -= wk * gj;
                }
            }
        }
        z[i * n + i] = 1.0;
    }
    z.to_vec()
}

fn transpose(z: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    t[j * n + i] = z[i * n + j];
                }
            }
        }
    }
    t
}

/// Implicit QL on the symmetric tridiagonal matrix (`d`, `e` with
/// `e[i] = T[i][i-1]`). Rotations are applied to rows of `zt`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut [f64]>, n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zt) = zt.as_deref_mut() {
                    let (lo, hi) = zt.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Ascending eigenvalues and, if requested, one eigenvector per value.
pub type HermitianEigen = (Vec<f64>, Option<Vec<Vec<Complex64>>>);

/// Eigendecomposition of a complex Hermitian matrix (row-major `n × n`).
///
/// Uses the real symmetric embedding `[[Re, -Im], [Im, Re]]`, whose spectrum
/// is the Hermitian spectrum with every eigenvalue doubled. Eigenvectors are
/// rebuilt from the embedded ones and re-orthonormalized inside clusters of
/// (near-)degenerate eigenvalues. Values are ascending.
pub fn hermitian_eigen(
    h: &[Complex64],
    n: usize,
    want_vectors: bool,
) -> Result<HermitianEigen> {
    if h.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: h.len() });
    }
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[i * n + j];
            a[i * m + j] = z.re;
            a[(i + n) * m + j + n] = z.re;
            a[(i + n) * m + j] = z.im;
            a[i * m + j + n] = -z.im;
        }
    }
    let eig = symmetric_eigen(a, m, want_vectors)?;
    let values: Vec<f64> = eig.values.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    if !want_vectors {
        return Ok((values, None));
    }
    let scale = eig.values.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale;

    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && eig.values[end] - eig.values[end - 1] <= tol {
            end += 1;
        }
        let needed = (end - start) / 2;
        let mut cluster: Vec<Vec<Complex64>> = Vec::with_capacity(needed);
        for k in start..end {
            if cluster.len() == needed {
                break;
            }
            let v = eig.vector(k).unwrap();
            let mut c: Vec<Complex64> = (0..n).map(|i| Complex64::new(v[i], v[i + n])).collect();
            for _ in 0..2 {
                for q in &cluster {
                    let proj = inner(q, &c);
                    for (ci, qi) in c.iter_mut().zip(q) {
                        *ci -= proj * qi;
                    }
                }
            }
            let norm = norm2(&c);
            if norm > 0.5 {
                c.iter_mut().for_each(|x| *x /= norm);
                cluster.push(c);
            }
        }
        if cluster.len() != needed {
            return Err(Error::NoConvergence(start));
        }
        out.extend(cluster);
        start = end;
    }
    Ok((values, Some(out)))
}

/// Eigenvalues (ascending) and eigenvectors of a 2×2 Hermitian matrix
/// `[[a, b], [conj(b), d]]`.
pub fn hermitian_eigen_2x2(m: &[[Complex64; 2]; 2]) -> ([f64; 2], [[Complex64; 2]; 2]) {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b = m[0][1];
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = (half * half + b.norm_sqr()).sqrt();
    let values = [mean - r, mean + r];
    if b.norm() <= f64::EPSILON * (a.abs() + d.abs()).max(f64::MIN_POSITIVE) {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        return if a <= d { (values, [[one, zero], [zero, one]]) } else { (values, [[zero, one], [one, zero]]) };
    }
    let mut vecs = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (k, &lam) in values.iter().enumerate() {
        // (a - lam) x + b y = 0  ->  choose the better-conditioned row.
        let (x, y) = if (a - lam).abs() >= (d - lam).abs() {
            (-b, Complex64::new(a - lam, 0.0))
        } else {
            (Complex64::new(d - lam, 0.0), -b.conj())
        };
        let norm = (x.norm_sqr() + y.norm_sqr()).sqrt();
        vecs[k] = [x / norm, y / norm];
    }
    (values, vecs)
}

/// `⟨a|b⟩`, antilinear in the first argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Row-major `C = A B` for real matrices (`A: m×k`, `B: k×n`).
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    gemm_into(1.0, a, false, b, m, k, n, 0.0, &mut c);
    c
}

/// Row-major `C = Aᵀ B` where `A` is stored `k×m`.
pub fn matmul_tn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    gemm_into(1.0, a, true, b, m, k, n, 0.0, &mut c);
    c
}

/// `C = alpha op(A) B + beta C`; `op(A)` is `m × k`.
#[allow(clippy::too_many_arguments)]
pub fn gemm_into(
    alpha: f64,
    a: &[f64],
    transpose_a: bool,
    b: &[f64],
    m: usize,
    k: usize,
    n: usize,
    beta: f64,
    c: &mut [f64],
) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if transpose_a { (1, m as isize) } else { (k as isize, 1) };
    // SAFETY: the strides describe exactly the buffers checked above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            n as isize,
            1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Least-squares solution of `A x ≈ b` (`A: rows × cols`, row-major, full
/// column rank) via Householder QR.
pub fn least_squares(a: &[f64], b: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    if a.len() != rows * cols || b.len() != rows {
        return Err(Error::DimensionMismatch { expected: rows * cols, found: a.len() });
    }
    if rows < cols {
        return Err(Error::InvalidArgument("underdetermined least-squares system".into()));
    }
    let mut q = a.to_vec();
    let mut rhs = b.to_vec();
    for j in 0..cols {
        let norm = (j..rows).map(|i| q[i * cols + j].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("rank-deficient least-squares system".into()));
        }
        let alpha = if q[j * cols + j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..rows).map(|i| q[i * cols + j]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in j..cols {
            let dot: f64 = v.iter().enumerate().map(|(t, vt)| vt * q[(j + t) * cols + c]).sum();
            let f = 2.0 * dot / vnorm2;
            for (t, vt) in v.iter().enumerate() {
                q[(j + t) * cols + c] -= f * vt;
            }
        }
        let dot: f64 = v.iter().enumerate().map(|(t, vt)| vt * rhs[j + t]).sum();
        let f = 2.0 * dot / vnorm2;
        for (t, vt) in v.iter().enumerate() {
            rhs[j + t] -= f * vt;
        }
    }
    let mut x = vec![0.0; cols];
    for j in (0..cols).rev() {
        let s: f64 = (j + 1..cols).map(|c| q[j * cols + c] * x[c]).sum();
        x[j] = (rhs[j] - s) / q[j * cols + j];
    }
    Ok(x)
}
