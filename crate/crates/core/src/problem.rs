//! Problem data: potential, boundary parameters, interior points.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::potential::{normalize_potential, Potential};
use crate::SolverError;

/// Normalized fraction `p/r` with `r > 0` and `gcd(p, r) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    p: i64,
    r: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rational {
    pub fn new(p: i64, r: i64) -> Result<Self, SolverError> {
        if r == 0 {
            return Err(SolverError::InvalidProblem(format!("zero denominator in {p}/{r}")));
        }
        let g = gcd(p, r).max(1);
        let sign = r.signum();
        Ok(Self { p: sign * p / g, r: sign * r / g })
    }

    pub fn numer(self) -> i64 {
        self.p
    }

    pub fn denom(self) -> i64 {
        self.r
    }

    pub fn value(self) -> f64 {
        self.p as f64 / self.r as f64
    }

    pub fn in_open_unit_interval(self) -> bool {
        self.p > 0 && self.p < self.r
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.r)
    }
}

impl FromStr for Rational {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SolverError::InvalidProblem(format!("`{s}` is not a rational of the form p/r"));
        let (p, r) = match s.split_once('/') {
            Some((p, r)) => (p.trim(), r.trim()),
            None => (s.trim(), "1"),
        };
        let p: i64 = p.parse().map_err(|_| bad())?;
        let r: i64 = r.parse().map_err(|_| bad())?;
        Rational::new(p, r)
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `h` or `H`: a finite Robin coefficient or the Dirichlet limit `∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryParam {
    Finite(f64),
    Dirichlet,
}

impl BoundaryParam {
    pub fn finite(self) -> Option<f64> {
        match self {
            BoundaryParam::Finite(v) => Some(v),
            BoundaryParam::Dirichlet => None,
        }
    }

    pub fn is_dirichlet(self) -> bool {
        matches!(self, BoundaryParam::Dirichlet)
    }
}

impl fmt::Display for BoundaryParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryParam::Finite(v) => write!(f, "{v:?}"),
            BoundaryParam::Dirichlet => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// `h, H` finite.
    #[serde(rename = "i")]
    I,
    /// `h = ∞`: `y(0) = 0`.
    #[serde(rename = "ii")]
    II,
    /// `H = ∞`: `y(1) = 0`.
    #[serde(rename = "iii")]
    III,
}

impl Case {
    pub fn as_str(self) -> &'static str {
        match self {
            Case::I => "i",
            Case::II => "ii",
            Case::III => "iii",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Case {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "i" | "I" | "1" => Ok(Case::I),
            "ii" | "II" | "2" => Ok(Case::II),
            "iii" | "III" | "3" => Ok(Case::III),
            other => Err(SolverError::InvalidProblem(format!("unknown case `{other}` (expected i, ii or iii)"))),
        }
    }
}

/// `L(q, h, H, γ₀, γ₁, ξ₀, ξ₁)` with
///
/// ```text
/// -y'' + q(x) y = λ y,                 0 < x < 1
/// U(y) = y'(0) + h y(0) - γ₀ y(ξ₀) = 0   (y(0) = 0 when h = ∞)
/// V(y) = y'(1) + H y(1) - γ₁ y(ξ₁) = 0   (y(1) = 0 when H = ∞)
/// ```
///
/// The stored potential has zero mean; the subtracted mean is kept in
/// [`ProblemSpec::q_mean`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub q: Potential,
    pub q_mean: f64,
    /// `h`
    pub h_left: BoundaryParam,
    /// `H`
    pub h_right: BoundaryParam,
    pub gamma0: f64,
    pub gamma1: f64,
    pub xi0: Rational,
    pub xi1: Rational,
}

impl ProblemSpec {
    /// Validates the data and mean-normalizes `q_raw`.
    ///
    /// Zero `γ` is accepted (the separated-condition limit). `γ`/`ξ` of a
    /// Dirichlet side are carried but never used.
    pub fn new(
        q_raw: Potential,
        h_left: BoundaryParam,
        h_right: BoundaryParam,
        gamma0: f64,
        gamma1: f64,
        xi0: Rational,
        xi1: Rational,
    ) -> Result<Self, SolverError> {
        if h_left.is_dirichlet() && h_right.is_dirichlet() {
            return Err(SolverError::InvalidProblem("h and H cannot both be infinite".into()));
        }
        for (name, p) in [("h", h_left), ("H", h_right)] {
            if let BoundaryParam::Finite(v) = p {
                if !v.is_finite() {
                    return Err(SolverError::InvalidProblem(format!("{name} must be finite or `inf`")));
                }
            }
        }
        for (name, g) in [("gamma0", gamma0), ("gamma1", gamma1)] {
            if !g.is_finite() {
                return Err(SolverError::InvalidProblem(format!("{name} must be finite")));
            }
        }
        for (name, xi) in [("xi0", xi0), ("xi1", xi1)] {
            if !xi.in_open_unit_interval() {
                return Err(SolverError::InvalidProblem(format!("{name} = {xi} must lie in (0, 1)")));
            }
        }
        let (q, q_mean) = normalize_potential(&q_raw)?;
        Ok(Self { q, q_mean, h_left, h_right, gamma0, gamma1, xi0, xi1 })
    }

    pub fn case(&self) -> Case {
        match (self.h_left, self.h_right) {
            (BoundaryParam::Dirichlet, _) => Case::II,
            (_, BoundaryParam::Dirichlet) => Case::III,
            _ => Case::I,
        }
    }

    /// `h`, or 0 for a Dirichlet left end (where it never enters a formula).
    pub(crate) fn h(&self) -> f64 {
        self.h_left.finite().unwrap_or(0.0)
    }

    /// `H`, or 0 for a Dirichlet right end.
    pub(crate) fn big_h(&self) -> f64 {
        self.h_right.finite().unwrap_or(0.0)
    }

    /// Interior points that must sit on every integration grid.
    pub fn breakpoints(&self) -> [f64; 2] {
        [self.xi0.value(), self.xi1.value()]
    }
}

/// Step control for the basis integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Largest step regardless of `k`.
    pub h_max: f64,
    /// Step is at most `osc_c / k`.
    pub osc_c: f64,
    /// Largest accepted `|C S' - C' S - 1|` on the grid.
    pub wronskian_tol: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { h_max: 1e-3, osc_c: 0.1, wronskian_tol: 1e-8 }
    }
}

/// Numerical knobs for the forward solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub resolution: Resolution,
    /// Relative residual `|Δ| / scale` accepted at a root (see
    /// [`crate::forward::BoundaryValues::scale`]).
    pub root_tol: f64,
    /// Absolute bracket width for nodal points. Scaled residuals multiply
    /// node errors by `m²π²`, so this sits near machine precision.
    pub node_tol: f64,
    /// Smallest index treated as asymptotic.
    pub n_min: u32,
    /// Scan `[0, seed + π/2]` instead of the seed neighbourhood (slow; diagnostics).
    pub global_scan: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { resolution: Resolution::default(), root_tol: 1e-10, node_tol: 1e-15, n_min: 5, global_scan: false }
    }
}
