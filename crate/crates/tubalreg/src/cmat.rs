//! Dense complex matrices and a one-sided Jacobi SVD.
//!
//! Each frontal slice of a tensor in the Fourier domain is a complex matrix;
//! everything the t-SVD needs from linear algebra lives here. The SVD is a
//! cyclic one-sided Jacobi: numerically simple, deterministic, and accurate to
//! a small multiple of machine epsilon, which is all the desk-scale slices
//! (tens of rows) ask for.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length mismatch");
        CMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `U · diag(s) · V^H` without materializing the diagonal factor.
    /// `s` may be shorter than `U.cols()`; missing entries are treated as zero.
    pub fn mul_diag_adjoint(u: &CMat, s: &[f64], v: &CMat) -> CMat {
        let mut out = CMat::zeros(u.rows, v.rows);
        for (k, &sk) in s.iter().enumerate() {
            if sk == 0.0 {
                continue;
            }
            for i in 0..u.rows {
                let uik = u.get(i, k) * sk;
                let orow = &mut out.data[i * v.rows..(i + 1) * v.rows];
                for (l, o) in orow.iter_mut().enumerate() {
                    *o += uik * v.get(l, k).conj();
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Full SVD of a complex matrix: `a = u · diag(sigma) · v^H` with unitary
/// `u` (m×m), `v` (n×n) and `sigma` of length `min(m, n)` sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct CSvd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 40;

/// One-sided Jacobi SVD with full unitary factors.
///
/// Deterministic for fixed input: the cyclic pair order is fixed and no
/// reduction depends on thread scheduling.
pub fn jacobi_svd(a: &CMat) -> Result<CSvd> {
    if a.rows < a.cols {
        // Factor the adjoint and swap the roles of u and v.
        let t = jacobi_svd(&a.adjoint())?;
        return Ok(CSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = CMat::identity(n);

    run_sweeps(&mut w, Some(&mut v))?;

    // Column norms are the singular values; sort them nonincreasing.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w.get(i, j).norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());

    let mut sigma = Vec::with_capacity(n);
    let mut u = CMat::zeros(m, m);
    let mut vs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        if s > 0.0 {
            for i in 0..m {
                u.set(i, dst, w.get(i, src) / s);
            }
        }
        for i in 0..n {
            vs.set(i, dst, v.get(i, src));
        }
    }

    let rank_cols = sigma.iter().filter(|&&s| s > 0.0).count();
    complete_basis(&mut u, rank_cols);
    Ok(CSvd { u, sigma, v: vs })
}

/// Singular values only (no unitary factors), sorted nonincreasing.
/// Cheaper than [`jacobi_svd`] when only the spectrum is needed.
pub fn jacobi_singular_values(a: &CMat) -> Result<Vec<f64>> {
    let mut w = if a.rows < a.cols { a.adjoint() } else { a.clone() };
    run_sweeps(&mut w, None)?;
    let (m, n) = (w.rows, w.cols);
    let mut norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w.get(i, j).norm_sqr()).sum::<f64>().sqrt())
        .collect();
    norms.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(norms)
}

fn run_sweeps(w: &mut CMat, mut v: Option<&mut CMat>) -> Result<()> {
    let n = w.cols;
    if n == 0 {
        return Ok(());
    }
    // Columns whose norm decays this far below the matrix scale carry no
    // information; flushing them to exact zero (backward error well under
    // the 1e-12 target) prevents an underflow spiral in which the squared
    // norm hits zero while the cross term stays positive.
    let floor = {
        let scale = w.fro_norm();
        (1e-30 * scale) * (1e-30 * scale)
    };
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                rotated |= orthogonalize_pair(w, v.as_deref_mut(), p, q, floor);
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::SvdFailure { slice: 0 })
}

/// Apply one complex Jacobi rotation making columns `p` and `q` of `w`
/// orthogonal; mirror the rotation on `v`. Returns whether a rotation fired.
fn orthogonalize_pair(
    w: &mut CMat,
    v: Option<&mut CMat>,
    p: usize,
    q: usize,
    floor: f64,
) -> bool {
    let (m, n) = (w.rows, w.cols);
    let mut app = 0.0;
    let mut aqq = 0.0;
    let mut apq = Complex64::new(0.0, 0.0);
    for i in 0..m {
        let wp = w.data[i * n + p];
        let wq = w.data[i * n + q];
        app += wp.norm_sqr();
        aqq += wq.norm_sqr();
        apq += wp.conj() * wq;
    }
    let mut flushed = false;
    if app <= floor {
        for i in 0..m {
            w.data[i * n + p] = Complex64::new(0.0, 0.0);
        }
        flushed = true;
    }
    if aqq <= floor {
        for i in 0..m {
            w.data[i * n + q] = Complex64::new(0.0, 0.0);
        }
        flushed = true;
    }
    if flushed {
        return false;
    }
    let g = apq.norm();
    if g <= JACOBI_TOL * app.sqrt() * aqq.sqrt() || g == 0.0 {
        return false;
    }
    // Phase that makes the off-diagonal Gram entry real, then a real rotation.
    let phase = apq / g;
    let theta = (aqq - app) / (2.0 * g);
    let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let sp = s * phase.conj();
    for i in 0..m {
        let wp = w.data[i * n + p];
        let wq = w.data[i * n + q];
        w.data[i * n + p] = wp * c - wq * sp;
        w.data[i * n + q] = wp * sp.conj() + wq * c;
    }
    if let Some(v) = v {
        for i in 0..n {
            let vp = v.data[i * n + p];
            let vq = v.data[i * n + q];
            v.data[i * n + p] = vp * c - vq * sp;
            v.data[i * n + q] = vp * sp.conj() + vq * c;
        }
    }
    true
}

/// Fill columns `filled..` of `u` with an orthonormal completion, by
/// Gram-Schmidt over the canonical basis (two passes for safety).
fn complete_basis(u: &mut CMat, filled: usize) {
    let m = u.rows;
    let mut have = filled;
    let mut cand = 0usize;
    while have < m && cand < m {
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        col[cand] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for j in 0..have {
                let mut proj = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    proj += u.get(i, j).conj() * col[i];
                }
                for i in 0..m {
                    let uij = u.get(i, j);
                    col[i] -= proj * uij;
                }
            }
        }
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.5 {
            for i in 0..m {
                u.set(i, have, col[i] / norm);
            }
            have += 1;
        }
        cand += 1;
    }
    debug_assert_eq!(have, m, "failed to complete orthonormal basis");
}
