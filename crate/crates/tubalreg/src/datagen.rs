//! Seeded generators for the simulation designs.
//!
//! Everything is a pure function of `(spec, seed)`: predictors, responses,
//! label misspecification, and predictor corruption each draw from their own
//! substream, so e.g. raising the corruption rate does not disturb the
//! predictor draws.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Normal, Pareto, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{sigmoid, Dataset};
use crate::rng;
use crate::tensor::{dot, tprod, ttranspose, Tensor3};
use crate::tsvd::{tsvd, SigmaMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Linear,
    Hetero,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian { sd: f64 },
    #[serde(rename = "t")]
    StudentT { df: f64 },
    Pareto { scale: f64, shape: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Cross,
    Square,
    T,
}

/// Full description of one synthetic data draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimSpec {
    pub n: usize,
    pub d1: usize,
    pub d2: usize,
    pub d3: usize,
    pub r: usize,
    pub design: Design,
    pub noise: NoiseKind,
    /// Percent of class-0 labels flipped to 1 (logistic design only).
    #[serde(default)]
    pub misspec_pm: f64,
    /// Percent of predictors receiving corrupted entries.
    #[serde(default)]
    pub corrupt_pn: f64,
    /// Percent of entries corrupted within each touched predictor.
    #[serde(default)]
    pub corrupt_pc: f64,
    /// Optional geometric-shape coefficient instead of the low-rank draw.
    #[serde(default)]
    pub shape: Option<ShapeKind>,
    pub seed: u64,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d1 == 0 || self.d2 == 0 || self.d3 == 0 {
            return Err(Error::BadParameter("n, d1, d2, d3 must be positive".into()));
        }
        if self.shape.is_none() && self.r > self.d1.min(self.d2) {
            return Err(Error::RankTooLarge {
                r: self.r,
                max: self.d1.min(self.d2),
            });
        }
        for (name, pct) in [
            ("misspec_pm", self.misspec_pm),
            ("corrupt_pn", self.corrupt_pn),
            ("corrupt_pc", self.corrupt_pc),
        ] {
            if !(0.0..=100.0).contains(&pct) {
                return Err(Error::BadParameter(format!(
                    "{name} must lie in [0, 100], got {pct}"
                )));
            }
        }
        if self.misspec_pm > 0.0 && self.design != Design::Logistic {
            return Err(Error::BadParameter(
                "label misspecification requires the logistic design".into(),
            ));
        }
        if self.shape.is_some() && self.d1 != self.d2 {
            return Err(Error::BadParameter("shape coefficients need d1 = d2".into()));
        }
        match self.noise {
            NoiseKind::Gaussian { sd } if !(sd > 0.0) => {
                Err(Error::BadParameter(format!("gaussian sd must be positive, got {sd}")))
            }
            NoiseKind::StudentT { df } if !(df > 0.0) => {
                Err(Error::BadParameter(format!("t degrees of freedom must be positive, got {df}")))
            }
            NoiseKind::Pareto { scale, shape } if !(scale > 0.0 && shape > 0.0) => Err(
                Error::BadParameter(format!("pareto parameters must be positive, got ({scale}, {shape})")),
            ),
            _ => Ok(()),
        }
    }

    /// The ground-truth coefficient implied by this spec.
    pub fn coefficient(&self) -> Result<Tensor3> {
        if let Some(shape) = self.shape {
            return gen_shape_coef(shape, self.d1, self.d3);
        }
        match self.design {
            Design::Logistic => gen_logistic_coef(self.d1, self.d2, self.d3, self.r, self.seed),
            _ => gen_lowrank_coef(self.d1, self.d2, self.d3, self.r, self.seed),
        }
    }
}

fn gaussian_tensor(d1: usize, d2: usize, d3: usize, rng: &mut impl Rng) -> Tensor3 {
    let mut t = Tensor3::zeros(d1, d2, d3);
    for v in t.data_mut() {
        *v = rng.sample(StandardNormal);
    }
    t
}

/// Low-tubal-rank coefficient `c1 ∗ c2` with standard Gaussian factors.
pub fn gen_lowrank_coef(d1: usize, d2: usize, d3: usize, r: usize, seed: u64) -> Result<Tensor3> {
    if r == 0 || r > d1.min(d2) {
        return Err(Error::RankTooLarge { r, max: d1.min(d2) });
    }
    let mut rng = rng::stream(seed, "coef", 0);
    let c1 = gaussian_tensor(d1, r, d3, &mut rng);
    let c2 = gaussian_tensor(r, d2, d3, &mut rng);
    tprod(&c1, &c2)
}

/// Low-rank coefficient with every nonzero Fourier-domain singular value
/// reset to exactly 1 (the classification ground truth).
pub fn gen_logistic_coef(d1: usize, d2: usize, d3: usize, r: usize, seed: u64) -> Result<Tensor3> {
    let b = gen_lowrank_coef(d1, d2, d3, r, seed)?;
    let f = tsvd(&b)?;
    let smax = f.sigma.max();
    let resized = f.sigma.map(|s| if s > 1e-8 * smax { 1.0 } else { 0.0 });
    let s_new = f_diagonal_from_sigma(d1, d2, d3, &resized)?;
    tprod(&tprod(&f.u, &s_new)?, &ttranspose(&f.v))
}

/// Build the f-diagonal tensor whose Fourier-domain diagonal equals `sigma`.
fn f_diagonal_from_sigma(d1: usize, d2: usize, d3: usize, sigma: &SigmaMat) -> Result<Tensor3> {
    use crate::cmat::CMat;
    use crate::tensor::{idft3_symmetric, FourierSlices};
    let mut slices = Vec::with_capacity(d3);
    for k in 0..d3 {
        let mut m = CMat::zeros(d1, d2);
        for i in 0..sigma.rows() {
            m.set(i, i, num_complex::Complex64::new(sigma.get(i, k), 0.0));
        }
        slices.push(m);
    }
    idft3_symmetric(&FourierSlices::new(slices))
}

/// Draw `count` i.i.d. noise values.
pub fn sample_noise(kind: NoiseKind, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::BadParameter("noise count must be at least 1".into()));
    }
    let mut rng = rng::stream(seed, "noise", 0);
    match kind {
        NoiseKind::Gaussian { sd } => {
            let dist = Normal::new(0.0, sd)
                .map_err(|e| Error::BadParameter(format!("gaussian noise: {e}")))?;
            Ok((0..count).map(|_| rng.sample(dist)).collect())
        }
        NoiseKind::StudentT { df } => {
            let dist = StudentT::new(df)
                .map_err(|e| Error::BadParameter(format!("student-t noise: {e}")))?;
            Ok((0..count).map(|_| rng.sample(dist)).collect())
        }
        NoiseKind::Pareto { scale, shape } => {
            let dist = Pareto::new(scale, shape)
                .map_err(|e| Error::BadParameter(format!("pareto noise: {e}")))?;
            Ok((0..count).map(|_| rng.sample(dist)).collect())
        }
    }
}

/// Generate a dataset for the given spec and ground-truth coefficient.
///
/// Order of operations: draw predictors, form responses, flip labels
/// (logistic design), then corrupt predictor entries. Corruption touches
/// exactly `⌈pn% · n⌉` predictors and `⌈pc% · d1·d2·d3⌉` entries within each.
pub fn gen_dataset(spec: &SimSpec, b0: &Tensor3) -> Result<Dataset> {
    spec.validate()?;
    if b0.dims() != (spec.d1, spec.d2, spec.d3) {
        return Err(Error::DimMismatch(format!(
            "coefficient {:?} vs spec ({}, {}, {})",
            b0.dims(),
            spec.d1,
            spec.d2,
            spec.d3
        )));
    }
    let n = spec.n;
    let mut x: Vec<Tensor3> = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = rng::stream(spec.seed, "x", i as u64);
        x.push(gaussian_tensor(spec.d1, spec.d2, spec.d3, &mut rng));
    }
    let scores: Vec<f64> = x.iter().map(|xi| dot(xi.data(), b0.data())).collect();

    let mut y = match spec.design {
        Design::Linear => {
            let eps = sample_noise(spec.noise, n, spec.seed)?;
            scores.iter().zip(&eps).map(|(s, e)| s + e).collect::<Vec<f64>>()
        }
        Design::Hetero => {
            let eps = sample_noise(spec.noise, n, spec.seed)?;
            scores
                .iter()
                .zip(&eps)
                .zip(&x)
                .map(|((s, e), xi)| s + (1.0 + xi.get(0, 0, 0).abs()) * e)
                .collect()
        }
        Design::Logistic => {
            let mut rng = rng::stream(spec.seed, "labels", 0);
            scores
                .iter()
                .map(|&s| if rng.random::<f64>() < sigmoid(s) { 1.0 } else { 0.0 })
                .collect()
        }
    };

    if spec.design == Design::Logistic && spec.misspec_pm > 0.0 {
        let mut rng = rng::stream(spec.seed, "misspec", 0);
        let p = spec.misspec_pm / 100.0;
        for yi in y.iter_mut() {
            // Draw for every sample so the stream position does not depend
            // on the labels; only class-0 samples can flip.
            let u = rng.random::<f64>();
            if *yi == 0.0 && u < p {
                *yi = 1.0;
            }
        }
    }

    if spec.corrupt_pn > 0.0 && spec.corrupt_pc > 0.0 {
        let p = spec.d1 * spec.d2 * spec.d3;
        let n_corrupt = ((spec.corrupt_pn / 100.0) * n as f64).ceil() as usize;
        let k_entries = (((spec.corrupt_pc / 100.0) * p as f64).ceil() as usize).min(p);
        let mut which_rng = rng::stream(spec.seed, "corrupt/rows", 0);
        let chosen = sample_indices(&mut which_rng, n, n_corrupt.min(n));
        let pareto = Pareto::new(3.0, 2.0).expect("fixed pareto parameters");
        for i in chosen.iter() {
            let mut entry_rng = rng::stream(spec.seed, "corrupt/entries", i as u64);
            let positions = sample_indices(&mut entry_rng, p, k_entries);
            let mut value_rng = rng::stream(spec.seed, "corrupt/values", i as u64);
            let data = x[i].data_mut();
            for pos in positions.iter() {
                data[pos] = value_rng.sample(pareto);
            }
        }
    }

    Dataset::new(x, y)
}

/// Binary geometric-shape coefficient on a `d × d` grid replicated across
/// `d3` frontal slices. Stroke width is `⌈d/10⌉`, widened by one when needed
/// to keep centered strokes symmetric.
pub fn gen_shape_coef(shape: ShapeKind, d: usize, d3: usize) -> Result<Tensor3> {
    if d < 8 {
        return Err(Error::TooSmall(format!("shape coefficients need d >= 8, got {d}")));
    }
    let mut w = d.div_ceil(10);
    if (d - w) % 2 != 0 {
        w += 1;
    }
    let start = (d - w) / 2;
    let band = start..start + w;
    let mut mask = vec![0.0f64; d * d];
    let mut paint = |i: usize, j: usize| mask[i * d + j] = 1.0;
    match shape {
        ShapeKind::Cross => {
            for i in 0..d {
                for j in 0..d {
                    if band.contains(&i) || band.contains(&j) {
                        paint(i, j);
                    }
                }
            }
        }
        ShapeKind::Square => {
            let inset = d / 4;
            let lo = inset;
            let hi = d - 1 - inset;
            let w_border = d.div_ceil(10);
            for i in lo..=hi {
                for j in lo..=hi {
                    let edge = (i - lo).min(hi - i).min(j - lo).min(hi - j);
                    if edge < w_border {
                        paint(i, j);
                    }
                }
            }
        }
        ShapeKind::T => {
            let w_bar = d.div_ceil(10);
            for i in 0..w_bar {
                for j in 0..d {
                    paint(i, j);
                }
            }
            for i in 0..d {
                for j in band.clone() {
                    paint(i, j);
                }
            }
        }
    }
    let mut t = Tensor3::zeros(d, d, d3);
    for k in 0..d3 {
        for i in 0..d {
            for j in 0..d {
                t.set(i, j, k, mask[i * d + j]);
            }
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsvd::{tubal_rank, ttnn, DEFAULT_RANK_TOL};

    fn base_spec() -> SimSpec {
        SimSpec {
            n: 40,
            d1: 6,
            d2: 6,
            d3: 2,
            r: 2,
            design: Design::Linear,
            noise: NoiseKind::Gaussian { sd: 1.0 },
            misspec_pm: 0.0,
            corrupt_pn: 0.0,
            corrupt_pc: 0.0,
            shape: None,
            seed: 9,
        }
    }

    #[test]
    fn lowrank_coef_rank_and_determinism() {
        let a = gen_lowrank_coef(6, 6, 3, 2, 11).unwrap();
        let b = gen_lowrank_coef(6, 6, 3, 2, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(tubal_rank(&a, DEFAULT_RANK_TOL).unwrap(), 2);
        let full = gen_lowrank_coef(4, 4, 2, 4, 5).unwrap();
        assert_eq!(tubal_rank(&full, DEFAULT_RANK_TOL).unwrap(), 4);
        assert!(matches!(
            gen_lowrank_coef(4, 4, 2, 5, 5),
            Err(Error::RankTooLarge { .. })
        ));
    }

    #[test]
    fn logistic_coef_unit_singular_values() {
        let b = gen_logistic_coef(6, 6, 3, 2, 13).unwrap();
        let sigma = crate::tsvd::fourier_singulars(&b).unwrap();
        for &s in sigma.data() {
            assert!(s.abs() < 1e-10 || (s - 1.0).abs() < 1e-10, "sigma {s}");
        }
        assert_eq!(tubal_rank(&b, DEFAULT_RANK_TOL).unwrap(), 2);
        assert!((ttnn(&b).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn linear_design_zero_noise_recovers_scores() {
        let mut spec = base_spec();
        spec.noise = NoiseKind::Gaussian { sd: 1e-300 };
        let b0 = spec.coefficient().unwrap();
        let data = gen_dataset(&spec, &b0).unwrap();
        for (x, &y) in data.x().iter().zip(data.y()) {
            let s = x.inner(&b0).unwrap();
            assert!((y - s).abs() < 1e-290);
        }
    }

    #[test]
    fn dataset_is_deterministic() {
        let spec = base_spec();
        let b0 = spec.coefficient().unwrap();
        let a = gen_dataset(&spec, &b0).unwrap();
        let b = gen_dataset(&spec, &b0).unwrap();
        assert_eq!(a.y(), b.y());
        assert_eq!(a.x()[7], b.x()[7]);
    }

    #[test]
    fn misspecification_only_flips_zero_labels() {
        let mut spec = base_spec();
        spec.design = Design::Logistic;
        spec.n = 400;
        spec.misspec_pm = 20.0;
        let b0 = spec.coefficient().unwrap();
        let clean = {
            let mut s = spec.clone();
            s.misspec_pm = 0.0;
            gen_dataset(&s, &b0).unwrap()
        };
        let flipped = gen_dataset(&spec, &b0).unwrap();
        let mut flips = 0;
        for (&a, &b) in clean.y().iter().zip(flipped.y()) {
            if a != b {
                assert_eq!((a, b), (0.0, 1.0));
                flips += 1;
            }
        }
        assert!(flips > 0);
    }

    #[test]
    fn corruption_counts_are_exact() {
        let mut spec = base_spec();
        spec.corrupt_pn = 10.0;
        spec.corrupt_pc = 5.0;
        let b0 = spec.coefficient().unwrap();
        let clean = {
            let mut s = spec.clone();
            s.corrupt_pn = 0.0;
            s.corrupt_pc = 0.0;
            gen_dataset(&s, &b0).unwrap()
        };
        let dirty = gen_dataset(&spec, &b0).unwrap();
        let p = 6 * 6 * 2;
        let expect_rows = (0.10f64 * 40.0).ceil() as usize;
        let expect_entries = (0.05f64 * p as f64).ceil() as usize;
        let mut touched_rows = 0;
        for (cx, dx) in clean.x().iter().zip(dirty.x()) {
            let diff = cx
                .data()
                .iter()
                .zip(dx.data())
                .filter(|(a, b)| a != b)
                .count();
            if diff > 0 {
                touched_rows += 1;
                assert_eq!(diff, expect_entries);
            }
        }
        assert_eq!(touched_rows, expect_rows);
        // Corrupted values come from Pareto(3, 2): support is [3, inf).
        for (cx, dx) in clean.x().iter().zip(dirty.x()) {
            for (a, b) in cx.data().iter().zip(dx.data()) {
                if a != b {
                    assert!(*b >= 3.0);
                }
            }
        }
    }

    #[test]
    fn shape_masks_are_binary_and_symmetric() {
        for shape in [ShapeKind::Cross, ShapeKind::Square, ShapeKind::T] {
            let t = gen_shape_coef(shape, 20, 3).unwrap();
            assert!(t.data().iter().all(|&v| v == 0.0 || v == 1.0));
        }
        let cross = gen_shape_coef(ShapeKind::Cross, 15, 2).unwrap();
        let d = 15;
        for i in 0..d {
            for j in 0..d {
                // 90-degree rotation maps (i, j) to (j, d-1-i).
                assert_eq!(cross.get(i, j, 0), cross.get(j, d - 1 - i, 0));
            }
        }
        assert!(matches!(
            gen_shape_coef(ShapeKind::T, 7, 1),
            Err(Error::TooSmall(_))
        ));
    }

    #[test]
    fn replicated_shape_rank_equals_mask_rank() {
        let t = gen_shape_coef(ShapeKind::Cross, 12, 3).unwrap();
        // Constant tubes: Fourier slice 0 is d3 * mask, the rest vanish, so
        // the tubal rank equals the matrix rank of the mask (here 2).
        assert_eq!(tubal_rank(&t, DEFAULT_RANK_TOL).unwrap(), 2);
    }
}
