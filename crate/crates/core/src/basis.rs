//! Fundamental solutions `C(x, λ)`, `S(x, λ)` of `-y'' + q y = k² y`.
//!
//! `C(0) = 1, C'(0) = 0` and `S(0) = 0, S'(0) = 1`. Both are integrated
//! together with a fixed-step explicit 8th-order Runge-Kutta scheme on a grid
//! whose step is at most `min(h_max, osc_c / k)` and which contains every
//! breakpoint (the interior points `ξ₀`, `ξ₁`) exactly.

use std::sync::Arc;

use crate::potential::Potential;
use crate::problem::Resolution;
use crate::tableau::{A, B, C, STAGES};
use crate::SolverError;

/// Integration grid on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct BasisGrid {
    x: Vec<f64>,
}

impl BasisGrid {
    /// Largest admissible step for wavenumber `k`.
    pub fn step_bound(k: f64, res: &Resolution) -> f64 {
        if k > 0.0 {
            res.h_max.min(res.osc_c / k)
        } else {
            res.h_max
        }
    }

    /// Piecewise-uniform grid: each interval between consecutive breakpoints
    /// gets `ceil(len / step)` equal steps.
    pub fn new(k: f64, breakpoints: &[f64], res: &Resolution) -> Self {
        Self::with_step(Self::step_bound(k, res), breakpoints)
    }

    pub fn with_step(step: f64, breakpoints: &[f64]) -> Self {
        let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > 0.0 && b < 1.0).collect();
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut x = vec![0.0];
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let n = ((b - a) / step).ceil().max(1.0) as usize;
            for i in 1..n {
                x.push(a + (b - a) * i as f64 / n as f64);
            }
            x.push(b);
        }
        Self { x }
    }

    pub fn points(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Index of a point that is exactly on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.x.binary_search_by(|p| p.total_cmp(&x)).ok()
    }

    /// Index `i` with `x[i] <= x < x[i + 1]` (clamped to the last interval).
    pub fn interval_of(&self, x: f64) -> usize {
        let i = self.x.partition_point(|&p| p <= x);
        i.saturating_sub(1).min(self.x.len() - 2)
    }
}

/// Potential values at every Runge-Kutta stage abscissa of a grid.
///
/// Independent of `k`, so one table serves every `Δ(λ)` evaluation on the
/// same grid.
#[derive(Debug, Clone)]
pub struct StageTable {
    q: Vec<[f64; STAGES]>,
}

impl StageTable {
    pub fn new(q: &Potential, grid: &BasisGrid) -> Result<Self, SolverError> {
        let x = grid.points();
        let mut rows = Vec::with_capacity(x.len().saturating_sub(1));
        for w in x.windows(2) {
            rows.push(stage_values(q, w[0], w[1] - w[0])?);
        }
        Ok(Self { q: rows })
    }
}

fn stage_values(q: &Potential, x0: f64, h: f64) -> Result<[f64; STAGES], SolverError> {
    let mut row = [0.0; STAGES];
    for (v, c) in row.iter_mut().zip(C) {
        *v = q.eval(x0 + c * h)?;
    }
    Ok(row)
}

/// One step for the pair `(C, C', S, S')`; `qs` are the stage potentials.
#[inline]
fn rk_step(y: [f64; 4], h: f64, lambda: f64, qs: &[f64; STAGES]) -> [f64; 4] {
    let mut k = [[0.0f64; 4]; STAGES];
    for s in 0..STAGES {
        let mut z = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for d in 0..4 {
                    z[d] += h * a * kj[d];
                }
            }
        }
        let p = qs[s] - lambda;
        k[s] = [z[1], p * z[0], z[3], p * z[2]];
    }
    let mut out = y;
    for (s, ks) in k.iter().enumerate() {
        let b = B[s];
        if b != 0.0 {
            for d in 0..4 {
                out[d] += h * b * ks[d];
            }
        }
    }
    out
}

/// `C, C', S, S'` sampled on a [`BasisGrid`].
#[derive(Debug, Clone)]
pub struct BasisSolutions {
    k: f64,
    grid: Arc<BasisGrid>,
    c: Vec<f64>,
    dc: Vec<f64>,
    s: Vec<f64>,
    ds: Vec<f64>,
    wronskian_drift: f64,
}

impl BasisSolutions {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.k * self.k
    }

    pub fn grid(&self) -> &BasisGrid {
        &self.grid
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn dc(&self) -> &[f64] {
        &self.dc
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn ds(&self) -> &[f64] {
        &self.ds
    }

    /// `max |C S' - C' S - 1|` over the grid.
    pub fn wronskian_drift(&self) -> f64 {
        self.wronskian_drift
    }

    /// `(C, C', S, S')` at grid index `i`.
    pub fn at(&self, i: usize) -> [f64; 4] {
        [self.c[i], self.dc[i], self.s[i], self.ds[i]]
    }

    /// `(C, C', S, S')` at a grid point, or `None` if `x` is not on the grid.
    pub fn at_point(&self, x: f64) -> Option<[f64; 4]> {
        self.grid.index_of(x).map(|i| self.at(i))
    }

    /// `(C, C', S, S')` at an arbitrary `x`: one partial step from the grid
    /// point to its left. `q` must be the potential the basis was built from.
    pub fn eval(&self, q: &Potential, x: f64) -> Result<[f64; 4], SolverError> {
        let i = self.grid.interval_of(x);
        let x0 = self.grid.points()[i];
        let h = x - x0;
        if h == 0.0 {
            return Ok(self.at(i));
        }
        let qs = stage_values(q, x0, h)?;
        Ok(rk_step(self.at(i), h, self.lambda(), &qs))
    }
}

/// Integrates on a prepared grid and stage table.
pub fn integrate_on(
    grid: Arc<BasisGrid>,
    table: &StageTable,
    k: f64,
    res: &Resolution,
) -> Result<BasisSolutions, SolverError> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(SolverError::InvalidK { k });
    }
    let x = grid.points();
    let n = x.len();
    let lambda = k * k;
    let (mut c, mut dc, mut s, mut ds) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut y = [1.0, 0.0, 0.0, 1.0];
    let mut drift = 0.0f64;
    for i in 0..n {
        if i > 0 {
            y = rk_step(y, x[i] - x[i - 1], lambda, &table.q[i - 1]);
        }
        c.push(y[0]);
        dc.push(y[1]);
        s.push(y[2]);
        ds.push(y[3]);
        drift = drift.max((y[0] * y[3] - y[1] * y[2] - 1.0).abs());
    }
    if !(drift <= res.wronskian_tol) {
        return Err(SolverError::StepControl { k, drift });
    }
    Ok(BasisSolutions { k, grid, c, dc, s, ds, wronskian_drift: drift })
}

/// `C, S` and derivatives for wavenumber `k = √λ ≥ 0`.
pub fn integrate_basis(
    q: &Potential,
    k: f64,
    breakpoints: &[f64],
    res: &Resolution,
) -> Result<BasisSolutions, SolverError> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(SolverError::InvalidK { k });
    }
    let grid = BasisGrid::new(k, breakpoints, res);
    let table = StageTable::new(q, &grid)?;
    integrate_on(Arc::new(grid), &table, k, res)
}

/// Three-term large-`k` approximation of `C(x, k²)` (real `k`).
pub fn asymptotic_c(q: &Potential, x: f64, k: f64) -> Result<f64, SolverError> {
    if !(k > 0.0) {
        return Err(SolverError::InvalidK { k });
    }
    let big_q = q.half_integral(x)?;
    let int = 2.0 * big_q;
    let q1 = (q.eval(x)? - q.eval(0.0)?) / 4.0 - int * int / 8.0;
    let (sn, cs) = (k * x).sin_cos();
    Ok(cs + sn / k * big_q + cs / (k * k) * q1)
}

/// Two-term large-`k` approximation of `S(x, k²)` (real `k`).
pub fn asymptotic_s(q: &Potential, x: f64, k: f64) -> Result<f64, SolverError> {
    if !(k > 0.0) {
        return Err(SolverError::InvalidK { k });
    }
    let big_q = q.half_integral(x)?;
    let (sn, cs) = (k * x).sin_cos();
    Ok(sn / k - cs / (k * k) * big_q)
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
    fn grid_contains_breakpoints_and_respects_step() {
        let res = Resolution::default();
        let g = BasisGrid::new(200.0, &[0.4, 6.0 / 7.0], &res);
        assert_eq!(g.points()[0], 0.0);
        assert_eq!(*g.points().last().unwrap(), 1.0);
        assert!(g.index_of(0.4).is_some());
        assert!(g.index_of(6.0 / 7.0).is_some());
        let bound = BasisGrid::step_bound(200.0, &res);
        assert!(g.points().windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= bound * (1.0 + 1e-12)));
        assert_eq!(g.interval_of(0.0), 0);
        assert_eq!(g.interval_of(1.0), g.len() - 2);
    }

    #[test]
    fn free_solutions_at_pi() {
        let res = Resolution::default();
        let b = integrate_basis(&Potential::zero(), PI, &[0.4, 0.7], &res).unwrap();
        let mut err = 0.0f64;
        for (i, &x) in b.grid().points().iter().enumerate() {
            let [c, dc, s, ds] = b.at(i);
            err = err
                .max((c - (PI * x).cos()).abs())
                .max((s - (PI * x).sin() / PI).abs())
                .max((dc + PI * (PI * x).sin()).abs())
                .max((ds - (PI * x).cos()).abs());
        }
        assert!(err < 1e-9, "{err}");
        assert_eq!(b.at(0), [1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn free_solutions_at_zero() {
        let b = integrate_basis(&Potential::zero(), 0.0, &[0.5, 0.5], &Resolution::default()).unwrap();
        for (i, &x) in b.grid().points().iter().enumerate() {
            let [c, dc, s, ds] = b.at(i);
            assert!((c - 1.0).abs() < 1e-12 && dc.abs() < 1e-12);
            assert!((s - x).abs() < 1e-12 && (ds - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn off_grid_evaluation_matches_closed_form() {
        let k = 37.0;
        let b = integrate_basis(&Potential::zero(), k, &[0.3, 0.6], &Resolution::default()).unwrap();
        for x in [0.01234, 0.5, 0.99999] {
            let [c, _, s, _] = b.eval(&Potential::zero(), x).unwrap();
            assert!((c - (k * x).cos()).abs() < 1e-11);
            assert!((s - (k * x).sin() / k).abs() < 1e-12);
        }
    }

    #[test]
    fn step_control_failure_is_reported() {
        let res = Resolution { h_max: 0.05, osc_c: 5.0, wronskian_tol: 1e-8 };
        let err = integrate_basis(&Potential::zero(), 300.0, &[0.5, 0.5], &res).unwrap_err();
        assert!(matches!(err, SolverError::StepControl { k, .. } if k == 300.0));
    }

    #[test]
    fn negative_k_rejected() {
        assert!(integrate_basis(&Potential::zero(), -1.0, &[], &Resolution::default()).is_err());
        assert!(asymptotic_c(&Potential::zero(), 0.5, 0.0).is_err());
    }

    #[test]
    fn asymptotic_examples() {
        let q = pot("cos(pi*x)");
        for (x, k) in [(0.3, 5.0), (1.0, 40.0)] {
            assert_eq!(asymptotic_c(&Potential::zero(), x, k).unwrap(), (k * x).cos());
        }
        let k = 10.0 * PI;
        let expected = (10.0 * PI).cos() - 0.5 / (k * k);
        assert!((asymptotic_c(&q, 1.0, k).unwrap() - expected).abs() < 1e-12);
        let expected = (5.0 * PI).sin() / k - (5.0 * PI).cos() / (k * k) / (2.0 * PI);
        assert!((asymptotic_s(&q, 0.5, k).unwrap() - expected).abs() < 1e-12);
    }
}
