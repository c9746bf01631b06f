//! Tensor singular value decomposition, tubal rank, and spectral norms.
//!
//! All spectral quantities are defined through the singular values of the
//! Fourier-domain frontal slices. Conjugate symmetry is exploited: slices are
//! factored only up to the Nyquist index and mirrored, which keeps every
//! output exactly real and halves the work.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::cmat::{jacobi_singular_values, jacobi_svd, CMat, CSvd};
use crate::error::{Error, Result};
use crate::penalty::PenaltySpec;
use crate::tensor::{dft3, idft3_symmetric, FourierSlices, Tensor3};

/// Relative threshold that decides which singular tubes count toward the rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Real `min(d1,d2) × d3` matrix aligned with the Fourier slices: row `i`
/// holds the `i`-th singular value (or its weight) across slices.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SigmaMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SigmaMat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        SigmaMat {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch(format!(
                "expected {} entries for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(SigmaMat { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Entrywise map, preserving shape.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> SigmaMat {
        SigmaMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Tensor SVD `a = u ∗ s ∗ vᵀ` plus the compact Fourier-domain singular
/// value matrix. `u` is `d1×d1×d3` t-orthogonal, `s` is `d1×d2×d3`
/// f-diagonal, `v` is `d2×d2×d3` t-orthogonal; `sigma[i][j]` is the `i`-th
/// singular value of Fourier slice `j`, nonincreasing down each column, with
/// conjugate-pair columns identical.
#[derive(Debug, Clone)]
pub struct TSvd {
    pub u: Tensor3,
    pub s: Tensor3,
    pub v: Tensor3,
    pub sigma: SigmaMat,
}

/// Apply `op` to the unique Fourier slices (0 through the Nyquist index);
/// the caller mirrors conjugate pairs. Parallel under the `parallel`
/// feature; deterministic either way since outputs land by index.
pub(crate) fn map_unique<T, F>(f: &FourierSlices, op: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &CMat) -> Result<T> + Sync,
{
    let half = f.dims().2 / 2;
    #[cfg(feature = "parallel")]
    {
        (0..=half)
            .into_par_iter()
            .map(|k| op(k, f.slice(k)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..=half).map(|k| op(k, f.slice(k))).collect()
    }
}

/// Full t-SVD via per-Fourier-slice complex SVD.
pub fn tsvd(a: &Tensor3) -> Result<TSvd> {
    let (d1, d2, d3) = a.dims();
    let f = dft3(a);
    let factored: Vec<CSvd> = map_unique(&f, |k, slice| {
        jacobi_svd(slice).map_err(|_| Error::SvdFailure { slice: k })
    })?;

    let m = d1.min(d2);
    let mut sigma = SigmaMat::zeros(m, d3);
    let mut u_slices = Vec::with_capacity(d3);
    let mut s_slices = Vec::with_capacity(d3);
    let mut v_slices = Vec::with_capacity(d3);
    for (k, svd) in factored.iter().enumerate() {
        let mut s_slice = CMat::zeros(d1, d2);
        for (i, &s) in svd.sigma.iter().enumerate() {
            sigma.set(i, k, s);
            s_slice.set(i, i, num_complex::Complex64::new(s, 0.0));
        }
        u_slices.push(svd.u.clone());
        s_slices.push(s_slice);
        v_slices.push(svd.v.clone());
    }
    // Mirror the conjugate pairs.
    let half = d3 / 2;
    for k in half + 1..d3 {
        let src = d3 - k;
        u_slices.push(u_slices[src].conj());
        s_slices.push(s_slices[src].conj());
        v_slices.push(v_slices[src].conj());
        for i in 0..m {
            let v = sigma.get(i, src);
            sigma.set(i, k, v);
        }
    }

    Ok(TSvd {
        u: idft3_symmetric(&FourierSlices::new(u_slices))?,
        s: idft3_symmetric(&FourierSlices::new(s_slices))?,
        v: idft3_symmetric(&FourierSlices::new(v_slices))?,
        sigma,
    })
}

/// Fourier-domain singular values only, mirrored across conjugate slices.
pub fn fourier_singulars(a: &Tensor3) -> Result<SigmaMat> {
    let (d1, d2, d3) = a.dims();
    let f = dft3(a);
    let cols: Vec<Vec<f64>> = map_unique(&f, |k, slice| {
        jacobi_singular_values(slice).map_err(|_| Error::SvdFailure { slice: k })
    })?;
    let m = d1.min(d2);
    let mut sigma = SigmaMat::zeros(m, d3);
    for k in 0..d3 {
        let src = if k <= d3 / 2 { k } else { d3 - k };
        for (i, &s) in cols[src].iter().enumerate() {
            sigma.set(i, k, s);
        }
    }
    Ok(sigma)
}

/// Number of singular tubes exceeding `rel_tol` times the largest singular
/// value; zero for the zero tensor.
pub fn tubal_rank(a: &Tensor3, rel_tol: f64) -> Result<usize> {
    let sigma = fourier_singulars(a)?;
    Ok(rank_from_sigma(&sigma, rel_tol))
}

/// Rank rule applied to a precomputed singular-value matrix.
pub fn rank_from_sigma(sigma: &SigmaMat, rel_tol: f64) -> usize {
    let smax = sigma.max();
    if smax <= 0.0 {
        return 0;
    }
    let thresh = rel_tol * smax;
    (0..sigma.rows())
        .filter(|&i| (0..sigma.cols()).any(|j| sigma.get(i, j) > thresh))
        .count()
}

/// Tensor tubal nuclear norm: `(1/d3) Σ_{ij} σ_ij`.
pub fn ttnn(a: &Tensor3) -> Result<f64> {
    let sigma = fourier_singulars(a)?;
    Ok(sigma.sum() / a.d3() as f64)
}

/// Weighted tubal nuclear norm `(1/d3) Σ_{ij} w_ij σ_ij`; weights must be
/// nonnegative and shaped `min(d1,d2) × d3`.
pub fn wttnn(a: &Tensor3, w: &SigmaMat) -> Result<f64> {
    let (d1, d2, d3) = a.dims();
    if w.rows() != d1.min(d2) || w.cols() != d3 {
        return Err(Error::DimMismatch(format!(
            "weights {}x{} for tensor {:?}",
            w.rows(),
            w.cols(),
            a.dims()
        )));
    }
    if let Some(&bad) = w.data().iter().find(|&&v| v < 0.0) {
        return Err(Error::NegativeWeight(bad));
    }
    let sigma = fourier_singulars(a)?;
    let mut acc = 0.0;
    for i in 0..sigma.rows() {
        for j in 0..sigma.cols() {
            acc += w.get(i, j) * sigma.get(i, j);
        }
    }
    Ok(acc / d3 as f64)
}

/// Spectral penalty `(1/d3) Σ_{ij} ρ_λ(σ_ij)`.
pub fn spectral_penalty(a: &Tensor3, p: &PenaltySpec) -> Result<f64> {
    let sigma = fourier_singulars(a)?;
    Ok(spectral_penalty_from_sigma(&sigma, p))
}

/// Same, from a precomputed singular-value matrix.
pub fn spectral_penalty_from_sigma(sigma: &SigmaMat, p: &PenaltySpec) -> f64 {
    sigma.data().iter().map(|&s| p.value(s)).sum::<f64>() / sigma.cols() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::PenaltyKind;
    use crate::tensor::tprod;

    #[test]
    fn zero_tensor_has_zero_spectrum() {
        let a = Tensor3::zeros(3, 4, 2);
        let svd = tsvd(&a).unwrap();
        assert!(svd.sigma.data().iter().all(|&s| s == 0.0));
        assert_eq!(tubal_rank(&a, DEFAULT_RANK_TOL).unwrap(), 0);
        assert_eq!(ttnn(&a).unwrap(), 0.0);
    }

    #[test]
    fn t_identity_spectrum() {
        let d = 4;
        let d3 = 3;
        let id = Tensor3::t_identity(d, d3);
        let svd = tsvd(&id).unwrap();
        for i in 0..d {
            for j in 0..d3 {
                assert!((svd.sigma.get(i, j) - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(tubal_rank(&id, DEFAULT_RANK_TOL).unwrap(), d);
        assert!((ttnn(&id).unwrap() - d as f64).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        let a = Tensor3::from_vec(
            3,
            4,
            3,
            (0..36).map(|v| ((v * 37 % 17) as f64 - 8.0) / 3.0).collect(),
        )
        .unwrap();
        let svd = tsvd(&a).unwrap();
        let rec = tprod(&tprod(&svd.u, &svd.s).unwrap(), &crate::tensor::ttranspose(&svd.v)).unwrap();
        let err = rec.sub(&a).fro_norm();
        assert!(err <= 1e-10 * a.fro_norm().max(1.0), "reconstruction error {err}");
        let utu = tprod(&crate::tensor::ttranspose(&svd.u), &svd.u).unwrap();
        let err_u = utu.sub(&Tensor3::t_identity(3, 3)).fro_norm();
        assert!(err_u < 1e-10, "u orthogonality {err_u}");
    }

    #[test]
    fn low_rank_product_has_expected_rank() {
        // 6x2 ∗ 2x6 with fixed pseudo-random entries: tubal rank 2.
        let vals = |n: usize, seed: u64| -> Vec<f64> {
            let mut state = seed;
            (0..n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
                })
                .collect()
        };
        let c1 = Tensor3::from_vec(6, 2, 3, vals(36, 3)).unwrap();
        let c2 = Tensor3::from_vec(2, 6, 3, vals(36, 17)).unwrap();
        let b = tprod(&c1, &c2).unwrap();
        assert_eq!(tubal_rank(&b, DEFAULT_RANK_TOL).unwrap(), 2);
        let sigma = fourier_singulars(&b).unwrap();
        for j in 0..3 {
            assert!(sigma.get(2, j) < 1e-10 * sigma.max());
        }
    }

    #[test]
    fn mcp_penalty_on_t_identity() {
        let d = 5;
        let id = Tensor3::t_identity(d, 4);
        let p = PenaltySpec::new(PenaltyKind::Mcp, 1.0, 2.0).unwrap();
        let got = spectral_penalty(&id, &p).unwrap();
        assert!((got - 0.75 * d as f64).abs() < 1e-12);
    }

    #[test]
    fn wttnn_weight_validation() {
        let a = Tensor3::t_identity(3, 2);
        let ones = SigmaMat::filled(3, 2, 1.0);
        assert!((wttnn(&a, &ones).unwrap() - ttnn(&a).unwrap()).abs() < 1e-12);
        let zeros = SigmaMat::zeros(3, 2);
        assert_eq!(wttnn(&a, &zeros).unwrap(), 0.0);
        let mut neg = SigmaMat::zeros(3, 2);
        neg.set(1, 1, -0.5);
        assert!(matches!(wttnn(&a, &neg), Err(Error::NegativeWeight(_))));
        let wrong = SigmaMat::zeros(2, 2);
        assert!(matches!(wttnn(&a, &wrong), Err(Error::DimMismatch(_))));
    }
}
