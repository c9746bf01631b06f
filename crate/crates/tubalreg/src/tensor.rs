//! Dense 3-way tensors and the t-product algebra.
//!
//! A [`Tensor3`] is stored slice-major: the frontal-slice index is slowest,
//! rows next, columns fastest. The t-product works tube-wise through an
//! unnormalized DFT along the third mode ([`dft3`]) and a `1/d3`-scaled
//! inverse ([`idft3`]), the MATLAB `fft(·,[],3)` convention, so that Fourier
//! slice `k` and slice `d3-k` of a real tensor are complex conjugates.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::cmat::CMat;
use crate::error::{Error, Result};

/// Dense real 3-way tensor, `d1 × d2 × d3`, slice-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    d1: usize,
    d2: usize,
    d3: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d1: usize, d2: usize, d3: usize) -> Self {
        assert!(d1 > 0 && d2 > 0 && d3 > 0, "tensor dims must be positive");
        Tensor3 {
            d1,
            d2,
            d3,
            data: vec![0.0; d1 * d2 * d3],
        }
    }

    /// Build from raw slice-major data, validating length and finiteness.
    pub fn from_vec(d1: usize, d2: usize, d3: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != d1 * d2 * d3 {
            return Err(Error::DimMismatch(format!(
                "expected {} entries for {}x{}x{}, got {}",
                d1 * d2 * d3,
                d1,
                d2,
                d3,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::BadParameter(format!("non-finite tensor entry {bad}")));
        }
        Ok(Tensor3 { d1, d2, d3, data })
    }

    /// Identity of the t-product: identity first frontal slice, zeros elsewhere.
    pub fn t_identity(d: usize, d3: usize) -> Self {
        let mut t = Tensor3::zeros(d, d, d3);
        for i in 0..d {
            let idx = t.idx(i, i, 0);
            t.data[idx] = 1.0;
        }
        t
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.d1, self.d2, self.d3)
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn d3(&self) -> usize {
        self.d3
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.d1 + i) * self.d2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.idx(i, j, k);
        self.data[idx] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Frontal slice `k` as a row-major `d1 × d2` block.
    pub fn frontal_slice(&self, k: usize) -> &[f64] {
        let len = self.d1 * self.d2;
        &self.data[k * len..(k + 1) * len]
    }

    pub fn same_dims(&self, other: &Tensor3) -> bool {
        self.dims() == other.dims()
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: f64) -> Tensor3 {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    pub fn add_scaled(&mut self, c: f64, other: &Tensor3) {
        debug_assert!(self.same_dims(other));
        axpy(&mut self.data, c, &other.data);
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        debug_assert!(self.same_dims(other));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Tensor3 {
            d1: self.d1,
            d2: self.d2,
            d3: self.d3,
            data,
        }
    }

    pub fn add(&self, other: &Tensor3) -> Tensor3 {
        debug_assert!(self.same_dims(other));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Tensor3 {
            d1: self.d1,
            d2: self.d2,
            d3: self.d3,
            data,
        }
    }

    /// Euclidean inner product of the vectorizations.
    pub fn inner(&self, other: &Tensor3) -> Result<f64> {
        if !self.same_dims(other) {
            return Err(Error::DimMismatch(format!(
                "inner product of {:?} and {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(dot(&self.data, &other.data))
    }

    pub fn fro_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Mode-3 DFT of a real tensor: `d3` complex frontal slices.
#[derive(Debug, Clone)]
pub struct FourierSlices {
    d1: usize,
    d2: usize,
    d3: usize,
    slices: Vec<CMat>,
}

impl FourierSlices {
    pub fn new(slices: Vec<CMat>) -> Self {
        assert!(!slices.is_empty());
        let d1 = slices[0].rows();
        let d2 = slices[0].cols();
        assert!(slices.iter().all(|s| s.rows() == d1 && s.cols() == d2));
        FourierSlices {
            d1,
            d2,
            d3: slices.len(),
            slices,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.d1, self.d2, self.d3)
    }

    pub fn slice(&self, k: usize) -> &CMat {
        &self.slices[k]
    }

    pub fn slices(&self) -> &[CMat] {
        &self.slices
    }

    pub fn slices_mut(&mut self) -> &mut [CMat] {
        &mut self.slices
    }

    /// Largest entrywise deviation from conjugate symmetry
    /// (slice `k` versus the conjugate of slice `d3 - k`).
    pub fn symmetry_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 1..=(self.d3 - 1) / 2 {
            let a = &self.slices[k];
            let b = &self.slices[self.d3 - k];
            for (x, y) in a.data().iter().zip(b.data()) {
                worst = worst.max((x - y.conj()).norm());
            }
        }
        // Slices 0 and (for even d3) the Nyquist slice must be real.
        worst = worst.max(2.0 * max_imag(&self.slices[0]));
        if self.d3 % 2 == 0 && self.d3 > 1 {
            worst = worst.max(2.0 * max_imag(&self.slices[self.d3 / 2]));
        }
        worst
    }

    fn symmetrize(&mut self) {
        let d3 = self.d3;
        for k in 1..=(d3 - 1) / 2 {
            let (lo, hi) = self.slices.split_at_mut(d3 - k);
            let a = &mut lo[k];
            let b = &mut hi[0];
            for (x, y) in a.data_mut().iter_mut().zip(b.data_mut()) {
                let avg = (*x + y.conj()) * 0.5;
                *x = avg;
                *y = avg.conj();
            }
        }
        drop_imag(&mut self.slices[0]);
        if d3 % 2 == 0 && d3 > 1 {
            let k = d3 / 2;
            drop_imag(&mut self.slices[k]);
        }
    }
}

fn max_imag(m: &CMat) -> f64 {
    m.data().iter().fold(0.0, |w, z| w.max(z.im.abs()))
}

fn drop_imag(m: &mut CMat) {
    for z in m.data_mut() {
        z.im = 0.0;
    }
}

/// Unnormalized forward DFT along the third mode, per tube.
pub fn dft3(a: &Tensor3) -> FourierSlices {
    let (d1, d2, d3) = a.dims();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(d3);
    let mut slices = vec![CMat::zeros(d1, d2); d3];
    let mut tube = vec![Complex64::new(0.0, 0.0); d3];
    for i in 0..d1 {
        for j in 0..d2 {
            for k in 0..d3 {
                tube[k] = Complex64::new(a.get(i, j, k), 0.0);
            }
            fft.process(&mut tube);
            for k in 0..d3 {
                slices[k].set(i, j, tube[k]);
            }
        }
    }
    FourierSlices::new(slices)
}

/// Maximum asymmetry tolerated by [`idft3`], relative to `max(1, max|entry|)`.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Inverse DFT along the third mode, scaled by `1/d3`; the result is real.
///
/// Inputs asymmetric by at most [`SYMMETRY_TOL`] (relative) are symmetrized
/// first; anything worse is rejected.
pub fn idft3(f: &FourierSlices) -> Result<Tensor3> {
    let scale = f.slices.iter().map(CMat::max_abs).fold(1.0, f64::max);
    let residual = f.symmetry_residual();
    if residual > SYMMETRY_TOL * scale {
        return Err(Error::SymmetryViolation {
            residual,
            tol: SYMMETRY_TOL * scale,
        });
    }
    let mut f = f.clone();
    if residual > 0.0 {
        f.symmetrize();
    }
    idft3_symmetric(&f)
}

/// Inverse DFT for inputs already known to be conjugate-symmetric
/// (internal fast path used by the t-SVD machinery).
pub(crate) fn idft3_symmetric(f: &FourierSlices) -> Result<Tensor3> {
    let (d1, d2, d3) = f.dims();
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(d3);
    let mut out = Tensor3::zeros(d1, d2, d3);
    let mut tube = vec![Complex64::new(0.0, 0.0); d3];
    let inv = 1.0 / d3 as f64;
    let scale = f.slices.iter().map(CMat::max_abs).fold(1.0, f64::max);
    let mut worst_imag = 0.0f64;
    for i in 0..d1 {
        for j in 0..d2 {
            for k in 0..d3 {
                tube[k] = f.slices[k].get(i, j);
            }
            ifft.process(&mut tube);
            for k in 0..d3 {
                worst_imag = worst_imag.max(tube[k].im.abs() * inv);
                out.set(i, j, k, tube[k].re * inv);
            }
        }
    }
    if worst_imag > 1e-10 * scale {
        return Err(Error::SymmetryViolation {
            residual: worst_imag,
            tol: 1e-10 * scale,
        });
    }
    Ok(out)
}

/// t-product `a ∗ b`: slice-wise product in the Fourier domain.
pub fn tprod(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    if a.d2 != b.d1 || a.d3 != b.d3 {
        return Err(Error::DimMismatch(format!(
            "t-product of {:?} and {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let fa = dft3(a);
    let fb = dft3(b);
    let d3 = a.d3;
    let half = d3 / 2;
    let mut slices: Vec<CMat> = Vec::with_capacity(d3);
    for k in 0..=half {
        slices.push(fa.slice(k).matmul(fb.slice(k)));
    }
    for k in half + 1..d3 {
        // Conjugate pair of slice d3 - k, already computed.
        slices.push(slices[d3 - k].conj());
    }
    idft3_symmetric(&FourierSlices::new(slices))
}

/// t-transpose: transpose every frontal slice and reverse slices `2..d3`.
pub fn ttranspose(a: &Tensor3) -> Tensor3 {
    let (d1, d2, d3) = a.dims();
    let mut out = Tensor3::zeros(d2, d1, d3);
    for k in 0..d3 {
        let src = if k == 0 { 0 } else { d3 - k };
        for i in 0..d1 {
            for j in 0..d2 {
                out.set(j, i, k, a.get(i, j, src));
            }
        }
    }
    out
}

/// Dot product with four-lane unrolling; fixed association, deterministic.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let p = i * 4;
        acc[0] += a[p] * b[p];
        acc[1] += a[p + 1] * b[p + 1];
        acc[2] += a[p + 2] * b[p + 2];
        acc[3] += a[p + 3] * b[p + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`.
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
