//! Empirical risk functions, their gradients, and prediction helpers.
//!
//! Five losses: squared, logistic maximum likelihood, Huber, the
//! correntropy-induced loss, and the minimum-distance logistic loss. Risks
//! and gradients accumulate in fixed sample order so results are bitwise
//! reproducible; `risk_par`/`gradient_par` provide an opt-in parallel
//! reduction whose result may differ from the sequential one by
//! `O(1e-12 · n)` in units of the accumulated magnitude.

use std::fmt;
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{axpy, dot, Tensor3};

/// Loss kind plus its robustification parameter, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum LossSpec {
    /// `(1/2n) Σ (y_i - s_i)²`
    Squared,
    /// Negative Bernoulli log-likelihood with the logit link.
    #[serde(rename = "logistic")]
    LogisticMle,
    /// Huber loss with cutoff `upsilon > 0`.
    Huber { upsilon: f64 },
    /// Correntropy-induced loss `σ²(1 - exp(-x²/σ²))` with scale `sigma > 0`.
    #[serde(rename = "closs")]
    CLoss { sigma: f64 },
    /// Minimum-distance logistic loss `(1/n) Σ (y_i - σ(s_i))²`.
    #[serde(rename = "mdlogistic")]
    MdLogistic,
}

impl LossSpec {
    pub fn huber(upsilon: f64) -> Result<Self> {
        if !(upsilon > 0.0) || !upsilon.is_finite() {
            return Err(Error::BadParameter(format!(
                "huber upsilon must be positive, got {upsilon}"
            )));
        }
        Ok(LossSpec::Huber { upsilon })
    }

    pub fn closs(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::BadParameter(format!(
                "c-loss sigma must be positive, got {sigma}"
            )));
        }
        Ok(LossSpec::CLoss { sigma })
    }

    /// True for the two classification losses, which require binary labels.
    pub fn is_classification(&self) -> bool {
        matches!(self, LossSpec::LogisticMle | LossSpec::MdLogistic)
    }

    /// True for losses carrying a robustification parameter.
    pub fn robustification(&self) -> Option<f64> {
        match self {
            LossSpec::Huber { upsilon } => Some(*upsilon),
            LossSpec::CLoss { sigma } => Some(*sigma),
            _ => None,
        }
    }

    /// Same kind with the robustification parameter replaced.
    pub fn with_robustification(&self, value: f64) -> Result<Self> {
        match self {
            LossSpec::Huber { .. } => LossSpec::huber(value),
            LossSpec::CLoss { .. } => LossSpec::closs(value),
            other => Err(Error::BadParameter(format!(
                "loss {other} has no robustification parameter"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossSpec::Squared => "squared",
            LossSpec::LogisticMle => "logistic",
            LossSpec::Huber { .. } => "huber",
            LossSpec::CLoss { .. } => "closs",
            LossSpec::MdLogistic => "mdlogistic",
        }
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossSpec::Huber { upsilon } => write!(f, "huber(upsilon={upsilon})"),
            LossSpec::CLoss { sigma } => write!(f, "closs(sigma={sigma})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for LossSpec {
    type Err = Error;

    /// Parse `"squared"`, `"logistic"`, `"huber(upsilon=1.5)"`,
    /// `"closs(sigma=1)"`, `"mdlogistic"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .rfind(')')
                    .ok_or_else(|| Error::Parse(format!("unbalanced parentheses in '{s}'")))?;
                (&s[..open], &s[open + 1..close])
            }
            None => (s, ""),
        };
        let parse_param = |key: &str| -> Result<f64> {
            for part in args.split(',').filter(|p| !p.trim().is_empty()) {
                if let Some((k, v)) = part.split_once('=') {
                    if k.trim() == key {
                        return v
                            .trim()
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad number '{}'", v.trim())));
                    }
                }
            }
            Err(Error::Parse(format!("missing parameter '{key}' in '{s}'")))
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "squared" | "ls" => Ok(LossSpec::Squared),
            "logistic" | "logisticmle" => Ok(LossSpec::LogisticMle),
            "huber" => LossSpec::huber(parse_param("upsilon")?),
            "closs" | "correntropy" => LossSpec::closs(parse_param("sigma")?),
            "mdlogistic" | "rlr" => Ok(LossSpec::MdLogistic),
            other => Err(Error::Parse(format!("unknown loss kind '{other}'"))),
        }
    }
}

/// A regression/classification sample set: `n` predictor tensors of common
/// shape and `n` scalar responses.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Vec<Tensor3>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<Tensor3>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::BadParameter("dataset needs at least one sample".into()));
        }
        if x.len() != y.len() {
            return Err(Error::DimMismatch(format!(
                "{} predictors vs {} responses",
                x.len(),
                y.len()
            )));
        }
        let dims = x[0].dims();
        if x.iter().any(|t| t.dims() != dims) {
            return Err(Error::DimMismatch("predictors have mixed shapes".into()));
        }
        Ok(Dataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.x[0].dims()
    }

    pub fn x(&self) -> &[Tensor3] {
        &self.x
    }

    pub fn x_mut(&mut self) -> &mut [Tensor3] {
        &mut self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn y_mut(&mut self) -> &mut [f64] {
        &mut self.y
    }

    /// Copy the selected samples into a new dataset.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        if idx.is_empty() {
            return Err(Error::BadParameter("empty subset".into()));
        }
        let x = idx.iter().map(|&i| self.x[i].clone()).collect();
        let y = idx.iter().map(|&i| self.y[i]).collect();
        Dataset::new(x, y)
    }

    fn check_labels(&self, spec: &LossSpec) -> Result<()> {
        if spec.is_classification() {
            for (index, &value) in self.y.iter().enumerate() {
                if value != 0.0 && value != 1.0 {
                    return Err(Error::NonBinaryLabel { index, value });
                }
            }
        }
        Ok(())
    }

    fn check_dims(&self, b: &Tensor3) -> Result<()> {
        if b.dims() != self.dims() {
            return Err(Error::DimMismatch(format!(
                "coefficient {:?} vs data {:?}",
                b.dims(),
                self.dims()
            )));
        }
        Ok(())
    }
}

/// Numerically stable logistic sigmoid.
pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^s)` without overflow.
fn log1p_exp(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn sample_loss(spec: &LossSpec, y: f64, s: f64) -> f64 {
    match spec {
        LossSpec::Squared => {
            let r = y - s;
            0.5 * r * r
        }
        LossSpec::LogisticMle => log1p_exp(s) - y * s,
        LossSpec::Huber { upsilon } => {
            let r = (y - s).abs();
            if r <= *upsilon {
                0.5 * r * r
            } else {
                upsilon * r - 0.5 * upsilon * upsilon
            }
        }
        LossSpec::CLoss { sigma } => {
            // expm1 keeps full precision when the residual is far below sigma.
            let r = y - s;
            sigma * sigma * -(-r * r / (sigma * sigma)).exp_m1()
        }
        LossSpec::MdLogistic => {
            let r = y - sigmoid(s);
            r * r
        }
    }
}

/// Derivative of the sample loss with respect to the linear score `s`.
fn sample_score_grad(spec: &LossSpec, y: f64, s: f64) -> f64 {
    match spec {
        LossSpec::Squared => -(y - s),
        LossSpec::LogisticMle => sigmoid(s) - y,
        LossSpec::Huber { upsilon } => -(y - s).clamp(-*upsilon, *upsilon),
        LossSpec::CLoss { sigma } => {
            let r = y - s;
            -2.0 * r * (-r * r / (sigma * sigma)).exp()
        }
        LossSpec::MdLogistic => {
            let p = sigmoid(s);
            -2.0 * (y - p) * p * (1.0 - p)
        }
    }
}

/// Empirical risk `L_n(b)`.
pub fn risk(spec: &LossSpec, b: &Tensor3, data: &Dataset) -> Result<f64> {
    data.check_dims(b)?;
    data.check_labels(spec)?;
    let n = data.len() as f64;
    let mut acc = 0.0;
    for (x, &y) in data.x.iter().zip(&data.y) {
        acc += sample_loss(spec, y, dot(x.data(), b.data()));
    }
    Ok(acc / n)
}

/// Gradient of the empirical risk, accumulated in fixed sample order.
pub fn gradient(spec: &LossSpec, b: &Tensor3, data: &Dataset) -> Result<Tensor3> {
    data.check_dims(b)?;
    data.check_labels(spec)?;
    let (d1, d2, d3) = b.dims();
    let mut g = Tensor3::zeros(d1, d2, d3);
    let inv_n = 1.0 / data.len() as f64;
    for (x, &y) in data.x.iter().zip(&data.y) {
        let c = sample_score_grad(spec, y, dot(x.data(), b.data())) * inv_n;
        if c != 0.0 {
            axpy(g.data_mut(), c, x.data());
        }
    }
    Ok(g)
}

/// Risk and gradient in a single pass over the data.
pub fn risk_and_gradient(spec: &LossSpec, b: &Tensor3, data: &Dataset) -> Result<(f64, Tensor3)> {
    data.check_dims(b)?;
    data.check_labels(spec)?;
    let (d1, d2, d3) = b.dims();
    let mut g = Tensor3::zeros(d1, d2, d3);
    let inv_n = 1.0 / data.len() as f64;
    let mut acc = 0.0;
    for (x, &y) in data.x.iter().zip(&data.y) {
        let s = dot(x.data(), b.data());
        acc += sample_loss(spec, y, s);
        let c = sample_score_grad(spec, y, s) * inv_n;
        if c != 0.0 {
            axpy(g.data_mut(), c, x.data());
        }
    }
    Ok((acc * inv_n, g))
}

/// Parallel-reduction risk. Result may differ from [`risk`] by about
/// `1e-12 · n` times the typical sample loss.
#[cfg(feature = "parallel")]
pub fn risk_par(spec: &LossSpec, b: &Tensor3, data: &Dataset) -> Result<f64> {
    data.check_dims(b)?;
    data.check_labels(spec)?;
    let n = data.len() as f64;
    let acc: f64 = data
        .x
        .par_iter()
        .zip(data.y.par_iter())
        .map(|(x, &y)| sample_loss(spec, y, dot(x.data(), b.data())))
        .sum();
    Ok(acc / n)
}

/// Parallel-reduction gradient; same accumulation caveat as [`risk_par`].
#[cfg(feature = "parallel")]
pub fn gradient_par(spec: &LossSpec, b: &Tensor3, data: &Dataset) -> Result<Tensor3> {
    data.check_dims(b)?;
    data.check_labels(spec)?;
    let (d1, d2, d3) = b.dims();
    let inv_n = 1.0 / data.len() as f64;
    let g = data
        .x
        .par_iter()
        .zip(data.y.par_iter())
        .fold(
            || Tensor3::zeros(d1, d2, d3),
            |mut g, (x, &y)| {
                let c = sample_score_grad(spec, y, dot(x.data(), b.data())) * inv_n;
                if c != 0.0 {
                    axpy(g.data_mut(), c, x.data());
                }
                g
            },
        )
        .reduce(|| Tensor3::zeros(d1, d2, d3), |a, b| a.add(&b));
    Ok(g)
}

/// Theory-scaled anchor for the Huber cutoff: `c_δ (n/(d·d3))^{1/(1+δ)}`.
pub fn adaptive_huber_upsilon(
    n: usize,
    d: usize,
    d3: usize,
    delta: f64,
    c_delta: f64,
) -> Result<f64> {
    if n == 0 || d == 0 || d3 == 0 {
        return Err(Error::Domain("n, d, d3 must be positive".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("delta must be in (0,1], got {delta}")));
    }
    if !(c_delta > 0.0) {
        return Err(Error::Domain(format!("c_delta must be positive, got {c_delta}")));
    }
    let base = n as f64 / (d as f64 * d3 as f64);
    Ok(c_delta * base.powf(1.0 / (1.0 + delta)))
}

/// Prediction error `⟨L'_n(b̂) - L'_n(b⁰), b̂ - b⁰⟩` on the given data.
pub fn prediction_error(
    spec: &LossSpec,
    b_hat: &Tensor3,
    b0: &Tensor3,
    data: &Dataset,
) -> Result<f64> {
    if b_hat.dims() != b0.dims() {
        return Err(Error::DimMismatch(format!(
            "b_hat {:?} vs b0 {:?}",
            b_hat.dims(),
            b0.dims()
        )));
    }
    let g_hat = gradient(spec, b_hat, data)?;
    let g0 = gradient(spec, b0, data)?;
    g_hat.sub(&g0).inner(&b_hat.sub(b0))
}

/// Point prediction: the linear score for regression losses; the
/// thresholded class label (`σ(s) >= 0.5 → 1`) for classification losses.
pub fn predict(spec: &LossSpec, b: &Tensor3, x: &Tensor3) -> Result<f64> {
    if b.dims() != x.dims() {
        return Err(Error::DimMismatch(format!(
            "coefficient {:?} vs predictor {:?}",
            b.dims(),
            x.dims()
        )));
    }
    let s = dot(x.data(), b.data());
    if spec.is_classification() {
        Ok(if sigmoid(s) >= 0.5 { 1.0 } else { 0.0 })
    } else {
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_x(d1: usize, d2: usize, d3: usize, pos: (usize, usize, usize)) -> Tensor3 {
        let mut x = Tensor3::zeros(d1, d2, d3);
        x.set(pos.0, pos.1, pos.2, 1.0);
        x
    }

    fn tiny_dataset() -> Dataset {
        // Two samples in a 2x1x1 space with scores b[0], b[1].
        let x0 = unit_x(2, 1, 1, (0, 0, 0));
        let x1 = unit_x(2, 1, 1, (1, 0, 0));
        Dataset::new(vec![x0, x1], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn squared_risk_perfect_fit_is_zero() {
        let data = tiny_dataset();
        let b = Tensor3::from_vec(2, 1, 1, vec![1.0, 0.0]).unwrap();
        assert_eq!(risk(&LossSpec::Squared, &b, &data).unwrap(), 0.0);
        let g = gradient(&LossSpec::Squared, &b, &data).unwrap();
        assert_eq!(g.fro_norm(), 0.0);
    }

    #[test]
    fn huber_branch_value() {
        let x = unit_x(1, 1, 1, (0, 0, 0));
        let data = Dataset::new(vec![x], vec![3.0]).unwrap();
        let b = Tensor3::zeros(1, 1, 1);
        let spec = LossSpec::huber(1.0).unwrap();
        assert!((risk(&spec, &b, &data).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn closs_zero_residual_and_bound() {
        let spec = LossSpec::closs(2.0).unwrap();
        let x = unit_x(1, 1, 1, (0, 0, 0));
        let data = Dataset::new(vec![x.clone()], vec![0.0]).unwrap();
        let b = Tensor3::zeros(1, 1, 1);
        assert_eq!(risk(&spec, &b, &data).unwrap(), 0.0);
        let far = Dataset::new(vec![x], vec![1e6]).unwrap();
        let r = risk(&spec, &b, &far).unwrap();
        assert!(r <= 4.0 + 1e-12, "c-loss must saturate at sigma^2, got {r}");
    }

    #[test]
    fn mdlogistic_at_zero_coefficient() {
        let data = tiny_dataset();
        let b = Tensor3::zeros(2, 1, 1);
        let r = risk(&LossSpec::MdLogistic, &b, &data).unwrap();
        assert!((r - 0.25).abs() < 1e-15);
    }

    #[test]
    fn classification_rejects_non_binary_labels() {
        let x = unit_x(1, 1, 1, (0, 0, 0));
        let data = Dataset::new(vec![x], vec![0.5]).unwrap();
        let b = Tensor3::zeros(1, 1, 1);
        assert!(matches!(
            risk(&LossSpec::LogisticMle, &b, &data),
            Err(Error::NonBinaryLabel { .. })
        ));
    }

    #[test]
    fn adaptive_upsilon_values() {
        assert!((adaptive_huber_upsilon(60, 20, 3, 0.7, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((adaptive_huber_upsilon(240, 20, 3, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        let v = adaptive_huber_upsilon(2000, 20, 3, 1.0, 1.0).unwrap();
        assert!((v - (2000.0f64 / 60.0).sqrt()).abs() < 1e-12);
        assert!(adaptive_huber_upsilon(10, 2, 2, 1.5, 1.0).is_err());
    }

    #[test]
    fn predict_tie_rule() {
        let b = Tensor3::zeros(1, 1, 1);
        let x = unit_x(1, 1, 1, (0, 0, 0));
        assert_eq!(predict(&LossSpec::MdLogistic, &b, &x).unwrap(), 1.0);
        assert_eq!(predict(&LossSpec::Squared, &b, &x).unwrap(), 0.0);
    }

    #[test]
    fn loss_spec_parsing() {
        assert_eq!("squared".parse::<LossSpec>().unwrap(), LossSpec::Squared);
        let h: LossSpec = "huber(upsilon=1.5)".parse().unwrap();
        assert_eq!(h.robustification(), Some(1.5));
        assert!("huber(upsilon=-1)".parse::<LossSpec>().is_err());
        assert!("huber".parse::<LossSpec>().is_err());
        let c: LossSpec = "closs(sigma=2)".parse().unwrap();
        assert_eq!(c.to_string(), "closs(sigma=2)");
    }

    #[test]
    fn prediction_error_zero_at_equal_coefficients() {
        let data = tiny_dataset();
        let b = Tensor3::from_vec(2, 1, 1, vec![0.3, -0.2]).unwrap();
        let pe = prediction_error(&LossSpec::Squared, &b, &b, &data).unwrap();
        assert_eq!(pe, 0.0);
    }
}
