//! Potentials q(x) on [0, 1], quadrature, and mean normalization.

use std::fmt;
use std::sync::Arc;

use crate::expr::{EvalError, Expr};
use crate::SolverError;

/// Gauss-Legendre nodes and weights on [-1, 1], 5 points (exact to degree 9).
const GL_NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Panels per unit length for expression quadrature.
const PANELS_PER_UNIT: f64 = 256.0;

/// Uniform samples on [0, 1] with a C¹ piecewise-cubic Hermite interpolant.
///
/// Knot slopes are second-order finite differences (centred inside, one-sided
/// at the ends).
#[derive(Debug, Clone, PartialEq)]
pub struct GridPotential {
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl GridPotential {
    pub fn new(values: Vec<f64>) -> Result<Self, SolverError> {
        if values.len() < 3 {
            return Err(SolverError::InvalidProblem("grid potential needs at least 3 samples".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::NonFinitePotential { x: i as f64 / (values.len() - 1) as f64 });
        }
        let n = values.len() - 1;
        let dx = 1.0 / n as f64;
        let mut slopes = vec![0.0; n + 1];
        slopes[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx);
        slopes[n] = (3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / (2.0 * dx);
        for i in 1..n {
            slopes[i] = (values[i + 1] - values[i - 1]) / (2.0 * dx);
        }
        Ok(Self { values, slopes })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.cells();
        let dx = 1.0 / n as f64;
        let t = (x.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let i = (t.floor() as usize).min(n - 1);
        let s = t - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * dx, self.slopes[i + 1] * dx);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSource {
    Expr(Expr),
    Grid(GridPotential),
}

/// A potential `q(x) = source(x) - offset`.
///
/// Cloning is cheap; the source is shared.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    source: Arc<PotentialSource>,
    offset: f64,
}

impl Potential {
    pub fn from_expr(expr: Expr) -> Self {
        Self { source: Arc::new(PotentialSource::Expr(expr)), offset: 0.0 }
    }

    pub fn from_grid(grid: GridPotential) -> Self {
        Self { source: Arc::new(PotentialSource::Grid(grid)), offset: 0.0 }
    }

    pub fn zero() -> Self {
        Self::from_expr(Expr::Num(0.0))
    }

    pub fn source(&self) -> &PotentialSource {
        &self.source
    }

    /// Constant subtracted from the source.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Same source, shifted down by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { source: Arc::clone(&self.source), offset: self.offset + c }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.offset == 0.0 && matches!(&*self.source, PotentialSource::Expr(e) if e.is_zero_literal())
    }

    pub fn eval(&self, x: f64) -> Result<f64, SolverError> {
        let v = match &*self.source {
            PotentialSource::Expr(e) => e.eval(x).map_err(|err| match err {
                EvalError::DivisionByZero { x } => SolverError::PotentialEval(format!("division by zero at x = {x}")),
                EvalError::NonFinite { x } => SolverError::NonFinitePotential { x },
            })?,
            PotentialSource::Grid(g) => g.eval(x),
        };
        Ok(v - self.offset)
    }

    /// ∫ₐᵇ q(t) dt by composite 5-point Gauss-Legendre.
    ///
    /// Grid potentials are integrated cell by cell, which is exact for the
    /// cubic interpolant.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64, SolverError> {
        if b == a {
            return Ok(0.0);
        }
        if b < a {
            return Ok(-self.integral(b, a)?);
        }
        let breaks: Vec<f64> = match &*self.source {
            PotentialSource::Expr(_) => {
                let panels = ((b - a) * PANELS_PER_UNIT).ceil().max(1.0) as usize;
                (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect()
            }
            PotentialSource::Grid(g) => {
                let n = g.cells() as f64;
                let mut pts = vec![a];
                let first = (a * n).floor() as usize + 1;
                let last = (b * n).ceil() as usize;
                for i in first..last {
                    let xi = i as f64 / n;
                    if xi > a && xi < b {
                        pts.push(xi);
                    }
                }
                pts.push(b);
                pts
            }
        };
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let mut s = 0.0;
            for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
                s += weight * self.eval(mid + half * node)?;
            }
            total += half * s;
        }
        Ok(total)
    }

    /// `Q(x) = ½∫₀ˣ q(t) dt`.
    pub fn half_integral(&self, x: f64) -> Result<f64, SolverError> {
        Ok(0.5 * self.integral(0.0, x)?)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.source {
            PotentialSource::Expr(e) => write!(f, "{e}")?,
            PotentialSource::Grid(g) => write!(f, "<grid of {} samples>", g.values.len())?,
        }
        if self.offset != 0.0 {
            write!(f, " - {:?}", self.offset)?;
        }
        Ok(())
    }
}

/// Returns `(q_raw - mean, mean)` with `mean = ∫₀¹ q_raw`.
pub fn normalize_potential(raw: &Potential) -> Result<(Potential, f64), SolverError> {
    let mean = raw.integral(0.0, 1.0)?;
    Ok((raw.shifted(mean), mean))
}

pub fn half_integral_q(q: &Potential, x: f64) -> Result<f64, SolverError> {
    q.half_integral(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use std::f64::consts::PI;

    fn pot(s: &str) -> Potential {
        Potential::from_expr(parse_expression(s).unwrap())
    }

    #[test]
    fn normalization_examples() {
        let (q, mean) = normalize_potential(&pot("cos(pi*x)")).unwrap();
        assert!(mean.abs() < 1e-14);
        assert!(q.integral(0.0, 1.0).unwrap().abs() < 1e-10);

        let (q, mean) = normalize_potential(&pot("sin(pi*x)")).unwrap();
        assert!((mean - 2.0 / PI).abs() < 1e-13);
        let target = (0.3 * PI).sin() - 2.0 / PI;
        assert!((q.eval(0.3).unwrap() - target).abs() < 1e-13);
        assert!(q.integral(0.0, 1.0).unwrap().abs() < 1e-10);

        let (q, mean) = normalize_potential(&pot("1")).unwrap();
        assert!((mean - 1.0).abs() < 1e-14);
        assert!(q.eval(0.7).unwrap().abs() < 1e-14);
    }

    #[test]
    fn half_integral_examples() {
        let q = pot("cos(pi*x)");
        assert!(half_integral_q(&q, 1.0).unwrap().abs() < 1e-12);
        assert!((half_integral_q(&q, 0.5).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-12);
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(half_integral_q(&Potential::zero(), x).unwrap(), 0.0);
        }
        // antiderivative of x^3 e^x is e^x (x^3 - 3x^2 + 6x - 6)
        let q = pot("x^3*exp(x)");
        let exact = |x: f64| x.exp() * (x.powi(3) - 3.0 * x * x + 6.0 * x - 6.0) + 6.0;
        for x in [0.2, 0.77, 1.0] {
            assert!((q.integral(0.0, x).unwrap() - exact(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_potential_is_rejected() {
        assert!(matches!(pot("1/(x-0.5)").eval(0.5), Err(SolverError::PotentialEval(_))));
        assert!(matches!(pot("exp(800*x)").integral(0.0, 1.0), Err(SolverError::NonFinitePotential { .. })));
    }

    #[test]
    fn grid_potential_reproduces_quadratics_and_integrates_cellwise() {
        let n = 50;
        let f = |x: f64| 1.0 + x - 3.0 * x * x;
        let g = GridPotential::new((0..=n).map(|i| f(i as f64 / n as f64)).collect()).unwrap();
        let q = Potential::from_grid(g);
        for x in [0.0, 0.013, 0.5, 0.987, 1.0] {
            assert!((q.eval(x).unwrap() - f(x)).abs() < 1e-13, "{x}");
        }
        let exact = 1.0 + 0.5 - 1.0;
        assert!((q.integral(0.0, 1.0).unwrap() - exact).abs() < 1e-13);
        let (qn, mean) = normalize_potential(&q).unwrap();
        assert!((mean - exact).abs() < 1e-13);
        assert!(qn.integral(0.0, 1.0).unwrap().abs() < 1e-13);
    }

    #[test]
    fn grid_potential_tracks_smooth_functions() {
        let n = 200;
        let g = GridPotential::new((0..=n).map(|i| (PI * i as f64 / n as f64).cos()).collect()).unwrap();
        let q = Potential::from_grid(g);
        for i in 0..=97 {
            let x = i as f64 / 97.0;
            assert!((q.eval(x).unwrap() - (PI * x).cos()).abs() < 1e-5);
        }
    }
}
