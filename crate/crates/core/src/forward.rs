//! Characteristic function, eigenvalues, eigenfunctions and nodal points.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{integrate_on, BasisGrid, BasisSolutions, StageTable};
use crate::problem::{Case, ProblemSpec, SolverConfig};
use crate::roots::brent;
use crate::SolverError;

/// `U(C), U(S), V(C), V(S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryValues {
    pub u_c: f64,
    pub u_s: f64,
    pub v_c: f64,
    pub v_s: f64,
}

impl BoundaryValues {
    /// `Δ = U(C) V(S) - U(S) V(C)`.
    pub fn delta(&self) -> f64 {
        self.u_c * self.v_s - self.u_s * self.v_c
    }

    /// Hadamard bound of the determinant after rescaling the `S` column by
    /// `k` (so both columns are O(k)), divided by `k`. `|Δ| / scale` is the
    /// relative residual used for roots.
    pub fn scale(&self, k: f64) -> f64 {
        let k = k.max(1.0);
        let row_u = self.u_c.hypot(k * self.u_s);
        let row_v = self.v_c.hypot(k * self.v_s);
        row_u * row_v / k
    }
}

/// Applies the boundary forms of `problem` to the fundamental solutions.
///
/// The grid of `basis` must contain `ξ₀`, `ξ₁` (for the non-Dirichlet sides).
pub fn boundary_forms(problem: &ProblemSpec, basis: &BasisSolutions) -> Result<BoundaryValues, SolverError> {
    let n = basis.grid().len();
    let at_xi = |xi: f64| basis.at_point(xi).ok_or(SolverError::MissingGridPoint { xi });
    let [c0, dc0, s0, ds0] = basis.at(0);
    let [c1, dc1, s1, ds1] = basis.at(n - 1);

    let (u_c, u_s) = match problem.h_left.finite() {
        None => (c0, s0),
        Some(h) => {
            let [c_xi, _, s_xi, _] = at_xi(problem.xi0.value())?;
            (dc0 + h * c0 - problem.gamma0 * c_xi, ds0 + h * s0 - problem.gamma0 * s_xi)
        }
    };
    let (v_c, v_s) = match problem.h_right.finite() {
        None => (c1, s1),
        Some(big_h) => {
            let [c_xi, _, s_xi, _] = at_xi(problem.xi1.value())?;
            (dc1 + big_h * c1 - problem.gamma1 * c_xi, ds1 + big_h * s1 - problem.gamma1 * s_xi)
        }
    };
    Ok(BoundaryValues { u_c, u_s, v_c, v_s })
}

/// Integration grid plus tabulated potential, reused across many `k`.
///
/// Every `k` up to `k_max` sees a step within the configured bound.
pub struct DeltaEvaluator<'a> {
    problem: &'a ProblemSpec,
    config: SolverConfig,
    grid: Arc<BasisGrid>,
    table: StageTable,
}

impl<'a> DeltaEvaluator<'a> {
    pub fn new(problem: &'a ProblemSpec, config: &SolverConfig, k_max: f64) -> Result<Self, SolverError> {
        Self::with_step(problem, config, BasisGrid::step_bound(k_max, &config.resolution))
    }

    pub fn with_step(problem: &'a ProblemSpec, config: &SolverConfig, step: f64) -> Result<Self, SolverError> {
        let grid = BasisGrid::with_step(step, &problem.breakpoints());
        let table = StageTable::new(&problem.q, &grid)?;
        Ok(Self { problem, config: *config, grid: Arc::new(grid), table })
    }

    pub fn basis(&self, k: f64) -> Result<BasisSolutions, SolverError> {
        integrate_on(Arc::clone(&self.grid), &self.table, k, &self.config.resolution)
    }

    pub fn boundary_values(&self, k: f64) -> Result<BoundaryValues, SolverError> {
        boundary_forms(self.problem, &self.basis(k)?)
    }

    /// `Δ(k²)`.
    pub fn delta(&self, k: f64) -> Result<f64, SolverError> {
        Ok(self.boundary_values(k)?.delta())
    }
}

/// `Δ(λ)` for `λ ≥ 0`.
pub fn char_delta(problem: &ProblemSpec, lambda: f64, config: &SolverConfig) -> Result<f64, SolverError> {
    if !(lambda >= 0.0) {
        return Err(SolverError::InvalidK { k: lambda.sqrt() });
    }
    let k = lambda.sqrt();
    DeltaEvaluator::new(problem, config, k)?.delta(k)
}

/// Leading-order eigenvalue location: `k_n⁰`, the correction `κ_n`, and
/// `seed = k_n⁰ + κ_n / (nπ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub k0: f64,
    pub kappa: f64,
    pub seed: f64,
}

/// Seed for the `n`-th eigenvalue (`∫q = 0`, so `Q(1) = 0`).
pub fn kappa_seed(problem: &ProblemSpec, n: u32) -> Result<Seed, SolverError> {
    if n == 0 {
        return Err(SolverError::IndexUnsupported { n });
    }
    let nf = n as f64;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let (xi0, xi1) = (problem.xi0.value(), problem.xi1.value());
    let (g0, g1) = (problem.gamma0, problem.gamma1);
    let (k0, kappa) = match problem.case() {
        Case::I => {
            let a_n = g1 * (nf * PI * xi1).cos() - g0 * (nf * PI * (1.0 - xi0)).cos();
            (nf * PI, problem.big_h() - problem.h() - sign * a_n)
        }
        Case::II => {
            let half = (nf + 0.5) * PI;
            (half, problem.big_h() - sign * g1 * (half * xi1).sin())
        }
        Case::III => {
            let half = (nf + 0.5) * PI;
            (half, -problem.h() + g0 * (half * xi0).cos())
        }
    };
    Ok(Seed { k0, kappa, seed: k0 + kappa / (nf * PI) })
}

/// A located eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub n: u32,
    pub k: f64,
    pub lambda: f64,
    pub k0: f64,
    pub kappa: f64,
    pub seed: f64,
    /// `|Δ(λ_n)|` relative to [`BoundaryValues::scale`].
    pub residual: f64,
    /// `n < n_min`: computed, but outside the asymptotic regime.
    pub low_index: bool,
    /// Other roots found in the search bracket (non-empty only when flagged).
    pub other_roots: Vec<f64>,
}

fn sign_change_brackets(
    eval: &DeltaEvaluator<'_>,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<Vec<(f64, f64, f64, f64)>, SolverError> {
    let ks: Vec<f64> = (0..=samples).map(|i| lo + (hi - lo) * i as f64 / samples as f64).collect();
    let vals = ks.iter().map(|&k| eval.delta(k)).collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for i in 0..samples {
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 || fa.signum() != fb.signum() {
            if fb == 0.0 && i + 1 < samples {
                // counted as the left end of the next interval
                continue;
            }
            out.push((ks[i], ks[i + 1], fa, fb));
        }
    }
    Ok(out)
}

/// Locates the eigenvalue of index `n` near its seed.
///
/// Scans `seed ± π/4` for sign changes of `Δ(k²)` (widening to `± π/2`),
/// refines with Brent's method, and keeps the root nearest the seed. Other
/// roots in the bracket are reported in [`SpectralPoint::other_roots`].
pub fn find_eigenvalue(problem: &ProblemSpec, n: u32, config: &SolverConfig) -> Result<SpectralPoint, SolverError> {
    let seed = kappa_seed(problem, n)?;
    let low_index = n < config.n_min;
    let hi_max = seed.seed + PI / 2.0;
    let eval = DeltaEvaluator::new(problem, config, hi_max)?;

    let mut brackets = Vec::new();
    let mut searched = (0.0, 0.0);
    let windows: &[(f64, usize)] =
        if config.global_scan { &[(f64::INFINITY, 0)] } else { &[(PI / 4.0, 16), (PI / 2.0, 32)] };
    for &(half_width, samples) in windows {
        let (lo, hi, samples) = if half_width.is_infinite() {
            let lo = 1e-9;
            (lo, hi_max, ((hi_max - lo) / (PI / 64.0)).ceil() as usize)
        } else {
            ((seed.seed - half_width).max(0.0), seed.seed + half_width, samples)
        };
        searched = (lo, hi);
        brackets = sign_change_brackets(&eval, lo, hi, samples)?;
        if !brackets.is_empty() {
            break;
        }
    }
    if brackets.is_empty() {
        return Err(SolverError::NoSignChange { n, lo: searched.0, hi: searched.1 });
    }

    let mut roots = Vec::with_capacity(brackets.len());
    for (a, b, fa, fb) in brackets {
        let xtol = 4.0 * f64::EPSILON * b.abs().max(1.0);
        let (k, _) = brent(|k| eval.delta(k), a, b, fa, fb, xtol, 200)?;
        roots.push(k);
    }
    roots.sort_by(|a, b| (a - seed.seed).abs().total_cmp(&(b - seed.seed).abs()));
    let k = roots[0];
    let other_roots = roots[1..].to_vec();

    let bv = eval.boundary_values(k)?;
    let scale = bv.scale(k);
    let residual = if scale > 0.0 { bv.delta().abs() / scale } else { bv.delta().abs() };
    if !(residual <= config.root_tol) {
        return Err(SolverError::RootTolerance { n, residual });
    }
    Ok(SpectralPoint {
        n,
        k,
        lambda: k * k,
        k0: seed.k0,
        kappa: seed.kappa,
        seed: seed.seed,
        residual,
        low_index,
        other_roots,
    })
}

/// `φ(x, λ_n) = U(S) C(x) - U(C) S(x)` with its basis.
pub struct Eigenfunction {
    problem: ProblemSpec,
    basis: BasisSolutions,
    bv: BoundaryValues,
    k: f64,
}

impl Eigenfunction {
    /// Builds `φ` on a grid with step at most `min(h_max, osc_c / k, max_step)`.
    pub fn new(
        problem: &ProblemSpec,
        sp: &SpectralPoint,
        config: &SolverConfig,
        max_step: f64,
    ) -> Result<Self, SolverError> {
        let step = BasisGrid::step_bound(sp.k, &config.resolution).min(max_step);
        let eval = DeltaEvaluator::with_step(problem, config, step)?;
        let basis = eval.basis(sp.k)?;
        let bv = boundary_forms(problem, &basis)?;
        Ok(Self { problem: problem.clone(), basis, bv, k: sp.k })
    }

    pub fn basis(&self) -> &BasisSolutions {
        &self.basis
    }

    pub fn boundary_values(&self) -> BoundaryValues {
        self.bv
    }

    /// `φ` at grid index `i`.
    pub fn at(&self, i: usize) -> f64 {
        let [c, _, s, _] = self.basis.at(i);
        self.bv.u_s * c - self.bv.u_c * s
    }

    /// `(φ, φ')` at grid index `i`.
    pub fn with_derivative_at(&self, i: usize) -> (f64, f64) {
        let [c, dc, s, ds] = self.basis.at(i);
        (self.bv.u_s * c - self.bv.u_c * s, self.bv.u_s * dc - self.bv.u_c * ds)
    }

    pub fn value(&self, x: f64) -> Result<f64, SolverError> {
        let [c, _, s, _] = self.basis.eval(&self.problem.q, x)?;
        Ok(self.bv.u_s * c - self.bv.u_c * s)
    }

    /// `|V(φ)|` relative to [`BoundaryValues::scale`]; small for a true eigenfunction.
    pub fn right_boundary_residual(&self) -> f64 {
        let v = self.bv.u_s * self.bv.v_c - self.bv.u_c * self.bv.v_s;
        let scale = self.bv.scale(self.k);
        if scale > 0.0 {
            v.abs() / scale
        } else {
            v.abs()
        }
    }
}

/// `φ(x, λ_n)` (unnormalized, as built from the boundary forms).
pub fn eigenfunction(
    problem: &ProblemSpec,
    sp: &SpectralPoint,
    x: f64,
    config: &SolverConfig,
) -> Result<f64, SolverError> {
    Eigenfunction::new(problem, sp, config, f64::INFINITY)?.value(x)
}

/// An interior zero of `φ(·, λ_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodalPoint {
    pub n: u32,
    pub j: i64,
    pub x: f64,
    /// Leading-order position `ρ_n^j`.
    pub reference: f64,
}

/// `ρ_n^j`: `(j+½)/n` (case i), `j/(n+½)` (ii), `(j+½)/(n+½)` (iii).
pub fn reference_position(case: Case, n: u32, j: i64) -> f64 {
    let (n, j) = (n as f64, j as f64);
    match case {
        Case::I => (j + 0.5) / n,
        Case::II => j / (n + 0.5),
        Case::III => (j + 0.5) / (n + 0.5),
    }
}

/// Index of the reference position nearest `x`.
pub fn nearest_reference_index(case: Case, n: u32, x: f64) -> i64 {
    let n = n as f64;
    let t = match case {
        Case::I => x * n - 0.5,
        Case::II => x * (n + 0.5),
        Case::III => x * (n + 0.5) - 0.5,
    };
    t.round() as i64
}

/// Scale of nodal residuals: `n²π²` (case i) or `(n+½)²π²`.
pub fn residual_scale(case: Case, n: u32) -> f64 {
    let w = match case {
        Case::I => n as f64,
        Case::II | Case::III => n as f64 + 0.5,
    };
    w * w * PI * PI
}

/// Limit of `scale · (x_n^j − ρ_n^j)` predicted by the nodal asymptotics at
/// index `n`, as a function of the node position `x`.
///
/// For indices that are multiples of the admissible modulus this is the
/// curve `f`, `g` or `ψ` the inverse problem reconstructs.
pub fn asymptotic_nodal_residual(problem: &ProblemSpec, n: u32, x: f64) -> Result<f64, SolverError> {
    let nf = n as f64;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let (h, big_h) = (problem.h(), problem.big_h());
    let (g0, g1) = (problem.gamma0, problem.gamma1);
    let (xi0, xi1) = (problem.xi0.value(), problem.xi1.value());
    let big_q = problem.q.half_integral(x)?;
    Ok(match problem.case() {
        Case::I => {
            let a_n = g1 * (nf * PI * xi1).cos() - g0 * (nf * PI * (1.0 - xi0)).cos();
            (h - big_h + sign * a_n) * x + big_q - h + g0 * (nf * PI * xi0).cos()
        }
        Case::II => {
            let s = (((nf + 0.5) * PI) * xi1).sin();
            -(big_h - sign * g1 * s) * x + big_q
        }
        Case::III => {
            let c = (((nf + 0.5) * PI) * xi0).cos();
            (h - g0 * c) * x - h + big_q + g0 * c
        }
    })
}

/// All zeros of `φ(·, λ_n)` in (0, 1), indexed by nearest reference position.
///
/// Zeros are bracketed by sign changes on a grid no coarser than `1/(20n)`
/// and refined to `config.node_tol`.
pub fn find_nodes(
    problem: &ProblemSpec,
    sp: &SpectralPoint,
    config: &SolverConfig,
) -> Result<Vec<NodalPoint>, SolverError> {
    let n = sp.n;
    let case = problem.case();
    let phi = Eigenfunction::new(problem, sp, config, 1.0 / (20.0 * n.max(1) as f64))?;
    let x = phi.basis().grid().points();
    let last = x.len() - 1;
    let vals: Vec<f64> = (0..=last).map(|i| phi.at(i)).collect();

    // φ vanishes identically at a Dirichlet end; those endpoints are not nodes.
    let first_i = if case == Case::II { 1 } else { 0 };
    let last_i = if case == Case::III { last - 1 } else { last };

    let mut roots = Vec::new();
    for i in first_i..last_i {
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            if i > 0 {
                roots.push(x[i]);
            }
            continue;
        }
        if fb != 0.0 && fa.signum() != fb.signum() {
            let (r, _) = brent(|t| phi.value(t), x[i], x[i + 1], fa, fb, config.node_tol, 200)?;
            roots.push(r);
        }
    }
    if roots.is_empty() {
        return Err(SolverError::EmptyNodes { n });
    }

    let nodes: Vec<NodalPoint> = roots
        .into_iter()
        .map(|r| {
            let j = nearest_reference_index(case, n, r);
            NodalPoint { n, j, x: r, reference: reference_position(case, n, j) }
        })
        .collect();
    for w in nodes.windows(2) {
        if w[1].j == w[0].j {
            return Err(SolverError::AmbiguousIndexing {
                n,
                detail: format!("nodes {} and {} both map to j = {}", w[0].x, w[1].x, w[0].j),
            });
        }
        if w[1].j != w[0].j + 1 {
            return Err(SolverError::AmbiguousIndexing {
                n,
                detail: format!("gap between j = {} and j = {}", w[0].j, w[1].j),
            });
        }
    }
    Ok(nodes)
}

/// Nodal points of one eigenfunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalLayer {
    pub n: u32,
    pub k: f64,
    pub nodes: Vec<NodalPoint>,
}

/// Finite set of nodal points, sorted by `(n, j)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodalDataset {
    pub layers: Vec<NodalLayer>,
}

impl NodalDataset {
    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.nodes.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn layer(&self, n: u32) -> Option<&NodalLayer> {
        self.layers.iter().find(|l| l.n == n)
    }

    pub fn indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.layers.iter().map(|l| l.n)
    }

    /// Keeps only the listed indices.
    pub fn restricted_to(&self, keep: &[u32]) -> Self {
        Self { layers: self.layers.iter().filter(|l| keep.contains(&l.n)).cloned().collect() }
    }
}

/// Eigenvalues and nodal points for every `n` in `n_list`, computed in parallel.
pub fn generate_dataset(
    problem: &ProblemSpec,
    n_list: &[u32],
    config: &SolverConfig,
) -> Result<(NodalDataset, Vec<SpectralPoint>), SolverError> {
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() {
        return Err(SolverError::InvalidProblem("empty index list".into()));
    }
    if let Some(&n) = ns.iter().find(|&&n| n < config.n_min) {
        return Err(SolverError::BelowMinimumIndex { n, n_min: config.n_min });
    }
    let results: Vec<(NodalLayer, SpectralPoint)> = ns
        .par_iter()
        .map(|&n| {
            let sp = find_eigenvalue(problem, n, config)?;
            let nodes = find_nodes(problem, &sp, config)?;
            Ok((NodalLayer { n, k: sp.k, nodes }, sp))
        })
        .collect::<Result<_, SolverError>>()?;
    let (layers, spectra) = results.into_iter().unzip();
    Ok((NodalDataset { layers }, spectra))
}
