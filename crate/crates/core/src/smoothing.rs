//! Local least-squares polynomial smoothing on scattered 1-D samples.
//!
//! At each evaluation point the `window` nearest samples (a contiguous run
//! of the sorted abscissae) are fitted by a polynomial of degree `degree`
//! centred at that point; the constant and linear coefficients give the
//! smoothed value and derivative. Near the ends the window is clamped, so
//! values outside the sample range are extrapolated from the boundary fit.

use crate::SolverError;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalPolySmoother {
    xs: Vec<f64>,
    ys: Vec<f64>,
    window: usize,
    degree: usize,
}

impl LocalPolySmoother {
    /// `xs` must be strictly increasing.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, window: usize, degree: usize) -> Result<Self, SolverError> {
        if xs.len() != ys.len() {
            return Err(SolverError::InsufficientCoverage("sample arrays differ in length".into()));
        }
        if window <= degree {
            return Err(SolverError::InsufficientCoverage(format!("window {window} too small for degree {degree}")));
        }
        if xs.len() < window {
            return Err(SolverError::InsufficientCoverage(format!("{} samples, window needs {window}", xs.len())));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SolverError::InsufficientCoverage("sample abscissae not strictly increasing".into()));
        }
        Ok(Self { xs, ys, window, degree })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    fn window_start(&self, x: f64) -> usize {
        let n = self.xs.len();
        let i = self.xs.partition_point(|&p| p < x);
        // choose the contiguous window of nearest points
        let mut lo = i.saturating_sub(self.window / 2).min(n - self.window);
        while lo > 0 && (x - self.xs[lo - 1]) < (self.xs[lo + self.window - 1] - x) {
            lo -= 1;
        }
        while lo + self.window < n && (self.xs[lo + self.window] - x) < (x - self.xs[lo]) {
            lo += 1;
        }
        lo
    }

    /// Polynomial coefficients in `t = (x' - x) / half_span`, plus `half_span`.
    fn local_fit(&self, x: f64) -> (Vec<f64>, f64) {
        let lo = self.window_start(x);
        let xs = &self.xs[lo..lo + self.window];
        let ys = &self.ys[lo..lo + self.window];
        let span = xs.iter().map(|&p| (p - x).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let p = self.degree + 1;
        // normal equations in scaled coordinates
        let mut ata = vec![vec![0.0; p]; p];
        let mut atb = vec![0.0; p];
        for (&xi, &yi) in xs.iter().zip(ys) {
            let t = (xi - x) / span;
            let mut pows = vec![1.0; p];
            for k in 1..p {
                pows[k] = pows[k - 1] * t;
            }
            for r in 0..p {
                atb[r] += pows[r] * yi;
                for c in 0..p {
                    ata[r][c] += pows[r] * pows[c];
                }
            }
        }
        (solve(ata, atb), span)
    }

    /// Smoothed value at `x`.
    pub fn value(&self, x: f64) -> f64 {
        self.local_fit(x).0[0]
    }

    /// Smoothed `(value, derivative)` at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let (coef, span) = self.local_fit(x);
        (coef[0], if coef.len() > 1 { coef[1] / span } else { 0.0 })
    }
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        if d == 0.0 {
            continue;
        }
        for r in col + 1..n {
            let f = a[r][col] / d;
            if f != 0.0 {
                let (top, bottom) = a.split_at_mut(r);
                for (x, &p) in bottom[0][col..n].iter_mut().zip(&top[col][col..n]) {
                    *x -= f * p;
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = if a[r][r] != 0.0 { s / a[r][r] } else { 0.0 };
    }
    x
}
