//! Scalar penalty functions applied to Fourier-domain singular values.
//!
//! Seven kinds: the convex tubal nuclear norm (`Ttnn`, plain `λ|x|`) and six
//! nonconvex folded-concave penalties (Geman, SCAD, Laplace, MCP, ETP,
//! Logarithm). All satisfy: zero at zero, symmetric, nondecreasing on the
//! positive line, `ρ(x)/x` nonincreasing, a finite derivative limit
//! `C_{ρ'} = lim_{x→0⁺} ρ'(x)`, and weak convexity (`ρ(x) + μx²/2` convex).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Ttnn,
    Geman,
    Scad,
    Laplace,
    Mcp,
    Etp,
    Logarithm,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 7] = [
        PenaltyKind::Ttnn,
        PenaltyKind::Geman,
        PenaltyKind::Scad,
        PenaltyKind::Laplace,
        PenaltyKind::Mcp,
        PenaltyKind::Etp,
        PenaltyKind::Logarithm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PenaltyKind::Ttnn => "ttnn",
            PenaltyKind::Geman => "geman",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Laplace => "laplace",
            PenaltyKind::Mcp => "mcp",
            PenaltyKind::Etp => "etp",
            PenaltyKind::Logarithm => "logarithm",
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ttnn" | "t-tnn" => Ok(PenaltyKind::Ttnn),
            "geman" => Ok(PenaltyKind::Geman),
            "scad" => Ok(PenaltyKind::Scad),
            "laplace" => Ok(PenaltyKind::Laplace),
            "mcp" => Ok(PenaltyKind::Mcp),
            "etp" => Ok(PenaltyKind::Etp),
            "logarithm" | "log" => Ok(PenaltyKind::Logarithm),
            other => Err(Error::Parse(format!("unknown penalty kind '{other}'"))),
        }
    }
}

/// A penalty kind with its tuning parameters.
///
/// `lambda >= 0` (zero degenerates to no penalty), `gamma > 1`, SCAD requires
/// `gamma > 2`, and the tubal nuclear norm ignores `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    kind: PenaltyKind,
    lambda: f64,
    gamma: f64,
}

/// Constants derived from a penalty: the derivative limit at `0⁺` and the
/// weak-convexity constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConstants {
    pub c_rho_prime: f64,
    pub mu: f64,
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind, lambda: f64, gamma: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::BadParameter(format!(
                "penalty lambda must be >= 0, got {lambda}"
            )));
        }
        if kind != PenaltyKind::Ttnn {
            let min_gamma = if kind == PenaltyKind::Scad { 2.0 } else { 1.0 };
            if !gamma.is_finite() || gamma <= min_gamma {
                return Err(Error::BadParameter(format!(
                    "{kind} requires gamma > {min_gamma}, got {gamma}"
                )));
            }
        }
        Ok(PenaltySpec { kind, lambda, gamma })
    }

    pub fn ttnn(lambda: f64) -> Result<Self> {
        PenaltySpec::new(PenaltyKind::Ttnn, lambda, 1.0)
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Same kind and gamma, different lambda.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        PenaltySpec::new(self.kind, lambda, self.gamma)
    }

    /// Penalty value `ρ_λ(x)`; symmetric in `x`.
    pub fn value(&self, x: f64) -> f64 {
        let x = x.abs();
        let (l, g) = (self.lambda, self.gamma);
        match self.kind {
            PenaltyKind::Ttnn => l * x,
            PenaltyKind::Geman => l * x / (x + g),
            PenaltyKind::Scad => {
                if x <= l {
                    l * x
                } else if x <= g * l {
                    (-x * x + 2.0 * g * l * x - l * l) / (2.0 * (g - 1.0))
                } else {
                    l * l * (g + 1.0) / 2.0
                }
            }
            PenaltyKind::Laplace => l * (1.0 - (-x / g).exp()),
            PenaltyKind::Mcp => {
                if x <= g * l {
                    l * x - x * x / (2.0 * g)
                } else {
                    g * l * l / 2.0
                }
            }
            PenaltyKind::Etp => l * (1.0 - (-g * x).exp()) / (1.0 - (-g).exp()),
            PenaltyKind::Logarithm => l * (g * x + 1.0).ln() / (g + 1.0).ln(),
        }
    }

    /// Derivative on `x >= 0`; at `x = 0` returns the limit `C_{ρ'}`, at the
    /// SCAD/MCP kinks the left-branch derivative.
    pub fn dvalue(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::NegativeInput(x));
        }
        if x == 0.0 {
            return Ok(self.constants().c_rho_prime);
        }
        let (l, g) = (self.lambda, self.gamma);
        Ok(match self.kind {
            PenaltyKind::Ttnn => l,
            PenaltyKind::Geman => l * g / ((x + g) * (x + g)),
            PenaltyKind::Scad => {
                if x <= l {
                    l
                } else if x <= g * l {
                    (g * l - x) / (g - 1.0)
                } else {
                    0.0
                }
            }
            PenaltyKind::Laplace => l / g * (-x / g).exp(),
            PenaltyKind::Mcp => {
                if x <= g * l {
                    l - x / g
                } else {
                    0.0
                }
            }
            PenaltyKind::Etp => l * g * (-g * x).exp() / (1.0 - (-g).exp()),
            PenaltyKind::Logarithm => l * g / ((g * x + 1.0) * (g + 1.0).ln()),
        })
    }

    /// `C_{ρ'}` and the weak-convexity constant `μ` (supremum of `-ρ''`).
    pub fn constants(&self) -> PenaltyConstants {
        let (l, g) = (self.lambda, self.gamma);
        let (c, mu) = match self.kind {
            PenaltyKind::Ttnn => (l, 0.0),
            PenaltyKind::Geman => (l / g, 2.0 * l / (g * g)),
            PenaltyKind::Scad => (l, 1.0 / (g - 1.0)),
            PenaltyKind::Laplace => (l / g, l / (g * g)),
            PenaltyKind::Mcp => (l, 1.0 / g),
            PenaltyKind::Etp => (l * g / (1.0 - (-g).exp()), l * g * g / (1.0 - (-g).exp())),
            PenaltyKind::Logarithm => (l * g / (g + 1.0).ln(), l * g * g / (g + 1.0).ln()),
        };
        PenaltyConstants { c_rho_prime: c, mu }
    }

    /// Check the antimonotone secant property on `0 < x < s`:
    /// `ρ'(s) <= (ρ(x) - ρ(s)) / (x - s) <= ρ'(x)`.
    pub fn antimonotone_check(&self, x: f64, s: f64) -> Result<bool> {
        if !(0.0 < x && x < s) {
            return Err(Error::Domain(format!(
                "antimonotone check requires 0 < x < s, got x={x}, s={s}"
            )));
        }
        let secant = (self.value(x) - self.value(s)) / (x - s);
        let slack = 1e-12 * (1.0 + secant.abs());
        Ok(self.dvalue(s)? <= secant + slack && secant <= self.dvalue(x)? + slack)
    }
}

impl fmt::Display for PenaltySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind == PenaltyKind::Ttnn {
            write!(f, "ttnn(lambda={})", self.lambda)
        } else {
            write!(f, "{}(lambda={},gamma={})", self.kind, self.lambda, self.gamma)
        }
    }
}

impl FromStr for PenaltySpec {
    type Err = Error;

    /// Parse config strings like `"mcp(lambda=0.1,gamma=2)"`. The argument
    /// list may be omitted entirely (`"ttnn"`), in which case defaults are
    /// `lambda = 1`, `gamma = 2` (`gamma = 3.7` for SCAD).
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
        let kind: PenaltyKind = name.trim().parse()?;
        let mut lambda = 1.0;
        let mut gamma = if kind == PenaltyKind::Scad { 3.7 } else { 2.0 };
        for part in args.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number '{}'", value.trim())))?;
            match key.trim() {
                "lambda" => lambda = value,
                "gamma" => gamma = value,
                other => return Err(Error::Parse(format!("unknown penalty field '{other}'"))),
            }
        }
        PenaltySpec::new(kind, lambda, gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let scad = PenaltySpec::new(PenaltyKind::Scad, 1.0, 3.0).unwrap();
        assert!((scad.value(0.5) - 0.5).abs() < 1e-15);
        assert!((scad.value(5.0) - 2.0).abs() < 1e-15);
        let geman = PenaltySpec::new(PenaltyKind::Geman, 1.0, 2.0).unwrap();
        assert!((geman.value(2.0) - 0.5).abs() < 1e-15);
        let mcp = PenaltySpec::new(PenaltyKind::Mcp, 1.0, 2.0).unwrap();
        assert!((mcp.value(3.0) - 1.0).abs() < 1e-15);
        for kind in PenaltyKind::ALL {
            let p = PenaltySpec::new(kind, 0.7, 3.0).unwrap();
            assert_eq!(p.value(0.0), 0.0);
            assert_eq!(p.value(1.3), p.value(-1.3));
        }
    }

    #[test]
    fn mcp_derivative_points() {
        let mcp = PenaltySpec::new(PenaltyKind::Mcp, 1.0, 2.0).unwrap();
        assert_eq!(mcp.dvalue(0.0).unwrap(), 1.0);
        assert!((mcp.dvalue(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(mcp.dvalue(2.0).unwrap(), 0.0);
        assert_eq!(mcp.dvalue(5.0).unwrap(), 0.0);
        assert!(mcp.dvalue(-0.1).is_err());
    }

    #[test]
    fn ttnn_derivative_is_constant() {
        let p = PenaltySpec::ttnn(0.7).unwrap();
        for &x in &[0.0, 0.3, 2.0, 100.0] {
            assert_eq!(p.dvalue(x).unwrap(), 0.7);
        }
    }

    #[test]
    fn constants_match_known_values() {
        let scad = PenaltySpec::new(PenaltyKind::Scad, 1.0, 3.0).unwrap();
        let c = scad.constants();
        assert_eq!(c.c_rho_prime, 1.0);
        assert!((c.mu - 0.5).abs() < 1e-15);
        let mcp = PenaltySpec::new(PenaltyKind::Mcp, 2.0, 4.0).unwrap();
        let c = mcp.constants();
        assert_eq!(c.c_rho_prime, 2.0);
        assert!((c.mu - 0.25).abs() < 1e-15);
        let t = PenaltySpec::ttnn(1.0).unwrap().constants();
        assert_eq!((t.c_rho_prime, t.mu), (1.0, 0.0));
    }

    #[test]
    fn dvalue_at_zero_equals_c_rho_prime() {
        for kind in PenaltyKind::ALL {
            let gamma = if kind == PenaltyKind::Scad { 3.7 } else { 2.5 };
            let p = PenaltySpec::new(kind, 0.9, gamma).unwrap();
            let c = p.constants().c_rho_prime;
            assert_eq!(p.dvalue(0.0).unwrap(), c, "{kind}");
        }
    }

    #[test]
    fn parameter_domain_checks() {
        assert!(PenaltySpec::new(PenaltyKind::Scad, 1.0, 2.0).is_err());
        assert!(PenaltySpec::new(PenaltyKind::Mcp, 1.0, 1.0).is_err());
        assert!(PenaltySpec::new(PenaltyKind::Mcp, -1.0, 2.0).is_err());
        assert!(PenaltySpec::new(PenaltyKind::Ttnn, 0.0, f64::NAN).is_ok());
    }

    #[test]
    fn parse_round_trip() {
        let p: PenaltySpec = "mcp(lambda=0.1,gamma=2)".parse().unwrap();
        assert_eq!(p.kind(), PenaltyKind::Mcp);
        assert_eq!(p.lambda(), 0.1);
        assert_eq!(p.gamma(), 2.0);
        let p: PenaltySpec = "ttnn(lambda=0.5)".parse().unwrap();
        assert_eq!(p.kind(), PenaltyKind::Ttnn);
        let p: PenaltySpec = "scad".parse().unwrap();
        assert_eq!(p.gamma(), 3.7);
        assert!("mcp(lambda=x)".parse::<PenaltySpec>().is_err());
        assert!("frobnicate(lambda=1)".parse::<PenaltySpec>().is_err());
        let shown = PenaltySpec::new(PenaltyKind::Geman, 0.25, 2.0)
            .unwrap()
            .to_string();
        let back: PenaltySpec = shown.parse().unwrap();
        assert_eq!(back.kind(), PenaltyKind::Geman);
        assert_eq!(back.lambda(), 0.25);
    }

    #[test]
    fn antimonotone_examples() {
        let mcp = PenaltySpec::new(PenaltyKind::Mcp, 1.0, 2.0).unwrap();
        assert!(mcp.antimonotone_check(0.5, 1.5).unwrap());
        let t = PenaltySpec::ttnn(0.3).unwrap();
        assert!(t.antimonotone_check(0.1, 5.0).unwrap());
        assert!(t.antimonotone_check(5.0, 0.1).is_err());
    }
}
