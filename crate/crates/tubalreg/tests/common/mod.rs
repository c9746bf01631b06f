//! Independent oracles shared by the integration tests.
//!
//! Nothing here reuses the library's transform or factorization paths: the
//! DFT is a direct O(d3²) summation, the t-product goes through an explicit
//! block-circulant matrix, and singular values/vectors come from a two-sided
//! Jacobi eigendecomposition of the Gram matrix.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rand_chacha::ChaCha12Rng;

use tubalreg::cmat::CMat;
use tubalreg::rng::stream;
use tubalreg::tensor::Tensor3;

pub fn rng_for(test: &str, index: u64) -> ChaCha12Rng {
    stream(0xACCE97ED, test, index)
}

pub fn gaussian_tensor(rng: &mut ChaCha12Rng, d1: usize, d2: usize, d3: usize) -> Tensor3 {
    let data: Vec<f64> = (0..d1 * d2 * d3).map(|_| rng.sample(StandardNormal)).collect();
    Tensor3::from_vec(d1, d2, d3, data).unwrap()
}

/// Direct O(d3²) DFT along the tubes: slice k gets
/// `Σ_t a(i,j,t) · exp(-2πi · k t / d3)`.
pub fn naive_dft3(a: &Tensor3) -> Vec<CMat> {
    let (d1, d2, d3) = a.dims();
    let mut out = vec![CMat::zeros(d1, d2); d3];
    for k in 0..d3 {
        for i in 0..d1 {
            for j in 0..d2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..d3 {
                    let angle = -2.0 * std::f64::consts::PI * (k * t) as f64 / d3 as f64;
                    acc += Complex64::from_polar(a.get(i, j, t), angle);
                }
                out[k].set(i, j, acc);
            }
        }
    }
    out
}

/// Direct inverse DFT with the 1/d3 scale; returns the real parts.
pub fn naive_idft3(slices: &[CMat]) -> Tensor3 {
    let d3 = slices.len();
    let (d1, d2) = (slices[0].rows(), slices[0].cols());
    let mut out = Tensor3::zeros(d1, d2, d3);
    for t in 0..d3 {
        for i in 0..d1 {
            for j in 0..d2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d3 {
                    let angle = 2.0 * std::f64::consts::PI * (k * t) as f64 / d3 as f64;
                    acc += slices[k].get(i, j) * Complex64::from_polar(1.0, angle);
                }
                out.set(i, j, t, acc.re / d3 as f64);
            }
        }
    }
    out
}

/// t-product through the explicit block-circulant unfolding.
pub fn bcirc_tprod(a: &Tensor3, b: &Tensor3) -> Tensor3 {
    let (a1, a2, d3) = a.dims();
    let (b1, b2, b3) = b.dims();
    assert_eq!(a2, b1);
    assert_eq!(d3, b3);
    let mut out = Tensor3::zeros(a1, b2, d3);
    // Block row r of bcirc(a) times the stacked slices of b.
    for r in 0..d3 {
        for c in 0..d3 {
            let src = (r + d3 - c) % d3;
            for i in 0..a1 {
                for j in 0..b2 {
                    let mut acc = out.get(i, j, r);
                    for l in 0..a2 {
                        acc += a.get(i, l, src) * b.get(l, j, c);
                    }
                    out.set(i, j, r, acc);
                }
            }
        }
    }
    out
}

/// Eigendecomposition of a complex Hermitian matrix by two-sided Jacobi:
/// eigenvalues descending with their eigenvectors as columns.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.rows();
    assert_eq!(n, h.cols());
    let mut a = h.clone();
    let mut v = CMat::identity(n);
    let scale: f64 = a.fro_norm().max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let hpq = a.get(p, q);
                let g = hpq.norm();
                off = off.max(g);
                if g <= 1e-15 * scale {
                    continue;
                }
                let hpp = a.get(p, p).re;
                let hqq = a.get(q, q).re;
                // J = D·R with D = diag(1, conj(phase)) making the pivot
                // real, then the closing real rotation R.
                let phase = hpq / g;
                let theta = (hqq - hpp) / (2.0 * g);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Column update (right-multiplication by J).
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, aip * c - aiq * (phase.conj() * s));
                    a.set(i, q, aip * s + aiq * (phase.conj() * c));
                }
                // Row update (left-multiplication by J^H).
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j);
                    a.set(p, j, apj * c - aqj * (phase * s));
                    a.set(q, j, apj * s + aqj * (phase * c));
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, vip * c - viq * (phase.conj() * s));
                    v.set(i, q, vip * s + viq * (phase.conj() * c));
                }
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a.get(i, i).re, i)).collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let mut vals = Vec::with_capacity(n);
    let mut vecs = CMat::zeros(n, n);
    for (dst, (val, src)) in pairs.into_iter().enumerate() {
        vals.push(val);
        for i in 0..n {
            vecs.set(i, dst, v.get(i, src));
        }
    }
    (vals, vecs)
}

/// Singular values of a complex matrix through the Gram eigenvalues.
pub fn gram_singular_values(m: &CMat) -> Vec<f64> {
    let gram = m.adjoint().matmul(m);
    let (vals, _) = hermitian_eigen(&gram);
    let mut out: Vec<f64> = vals.iter().map(|&l| l.max(0.0).sqrt()).collect();
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    // Keep min(rows, cols) values.
    out.truncate(m.rows().min(m.cols()));
    out
}

/// Weighted singular value shrinkage of one matrix through the Gram route:
/// `Σ_i max(1 - thresh_i/σ_i, 0) · (m v_i) v_iᴴ`.
pub fn gram_weighted_svt(m: &CMat, thresholds: &[f64]) -> CMat {
    let gram = m.adjoint().matmul(m);
    let (vals, vecs) = hermitian_eigen(&gram);
    let n = m.cols();
    let mut rescale = CMat::zeros(n, n);
    for (i, &l) in vals.iter().enumerate() {
        let sigma = l.max(0.0).sqrt();
        let c = if sigma > 0.0 {
            (1.0 - thresholds.get(i).copied().unwrap_or(0.0) / sigma).max(0.0)
        } else {
            0.0
        };
        if c == 0.0 {
            continue;
        }
        // rescale += c * v_i v_i^H
        for r in 0..n {
            let vr = vecs.get(r, i);
            for cidx in 0..n {
                let cur = rescale.get(r, cidx);
                rescale.set(r, cidx, cur + vr * vecs.get(cidx, i).conj() * c);
            }
        }
    }
    m.matmul(&rescale)
}

/// Central finite difference of a scalar function along a direction.
pub fn central_difference<F: FnMut(&Tensor3) -> f64>(
    mut f: F,
    at: &Tensor3,
    dir: &Tensor3,
    h: f64,
) -> f64 {
    let mut plus = at.clone();
    plus.add_scaled(h, dir);
    let mut minus = at.clone();
    minus.add_scaled(-h, dir);
    (f(&plus) - f(&minus)) / (2.0 * h)
}

pub fn max_slice_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.sub(b).max_abs()
}
