//! Reconstruction of `q` and boundary-constant combinations from nodal data.
//!
//! Along indices `m` that are multiples of `2r₀r₁` (case i), `2r₁` (ii) or
//! `2r₀` (iii), the scaled residuals `scale(m) · (x_m^j − ρ_m^j)` converge to
//!
//! ```text
//! case i:   f(x) = (h − H + γ₁ − γ₀) x + Q(x) − h + γ₀
//! case ii:  g(x) = (γ₁ sin(πξ₁/2) − H) x + Q(x)
//! case iii: ψ(x) = (h − γ₀ cos(πξ₀/2)) x − h + γ₀ cos(πξ₀/2) + Q(x)
//! ```
//!
//! with `Q(x) = ½∫₀ˣ q`. The limit is realized at finite `m` by linear
//! extrapolation in `1/m` across the two largest layers, followed by a local
//! polynomial fit that supplies the derivative and the endpoint values.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::forward::{reference_position, residual_scale, NodalDataset, NodalLayer};
use crate::problem::{Case, Rational};
use crate::smoothing::LocalPolySmoother;
use crate::SolverError;

/// Index modulus whose multiples carry the limit curve.
pub fn admissible_modulus(case: Case, xi0: Rational, xi1: Rational) -> u64 {
    let (r0, r1) = (xi0.denom() as u64, xi1.denom() as u64);
    match case {
        Case::I => 2 * r0 * r1,
        Case::II => 2 * r1,
        Case::III => 2 * r0,
    }
}

/// Layers whose index is a positive multiple of the admissible modulus, sorted by `m`.
pub fn select_subsequence(
    dataset: &NodalDataset,
    xi0: Rational,
    xi1: Rational,
    case: Case,
) -> Result<Vec<&NodalLayer>, SolverError> {
    let modulus = admissible_modulus(case, xi0, xi1);
    let mut layers: Vec<&NodalLayer> =
        dataset.layers.iter().filter(|l| l.n > 0 && u64::from(l.n) % modulus == 0).collect();
    if layers.is_empty() {
        return Err(SolverError::NoAdmissibleIndex { modulus });
    }
    layers.sort_by_key(|l| l.n);
    Ok(layers)
}

/// `(x_m^j, scale(m) · (x_m^j − ρ_m^j))` for one layer, sorted by `x`.
pub fn limit_samples(layer: &NodalLayer, case: Case) -> Result<Vec<(f64, f64)>, SolverError> {
    if layer.nodes.is_empty() {
        return Err(SolverError::EmptyLayer);
    }
    let scale = residual_scale(case, layer.n);
    let mut out: Vec<(f64, f64)> =
        layer.nodes.iter().map(|p| (p.x, scale * (p.x - reference_position(case, layer.n, p.j)))).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Scaled residuals of one index `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSamples {
    pub m: u32,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Minimum samples per local fit.
    pub window: usize,
    /// Window as a fraction of the sample count; the larger of this and
    /// `window` is used (rounded up to odd). Keeps the physical width of the
    /// window fixed as layers get denser, so node noise does not grow in `f̂′`.
    pub window_fraction: f64,
    pub degree: usize,
    /// Extrapolate in `1/m` when two or more layers are given.
    pub richardson: bool,
    /// Uniform points on [0, 1] carrying the extrapolated curve.
    pub extrapolation_points: usize,
    /// Points of the output `q` grid.
    pub output_points: usize,
}

impl FitConfig {
    /// Window length used for `count` samples.
    pub fn window_for(&self, count: usize) -> usize {
        let scaled = (self.window_fraction.max(0.0) * count as f64).round() as usize;
        let w = self.window.max(scaled);
        let w = if w.is_multiple_of(2) { w + 1 } else { w };
        w.min(count.max(self.degree + 1))
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            window: 7,
            window_fraction: 0.0,
            degree: 3,
            richardson: true,
            extrapolation_points: 401,
            output_points: 201,
        }
    }
}

/// Estimate of `f`, `g` or `ψ` with derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCurve {
    pub case: Case,
    /// Indices that contributed.
    pub layers_used: Vec<u32>,
    pub extrapolated: bool,
    smoother: LocalPolySmoother,
}

impl LimitCurve {
    /// Points the final fit runs through.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.smoother.xs().iter().copied().zip(self.smoother.ys().iter().copied())
    }

    pub fn value(&self, x: f64) -> f64 {
        self.smoother.value(x)
    }

    /// `(f̂(x), f̂'(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        self.smoother.eval(x)
    }

    pub fn at_zero(&self) -> f64 {
        self.value(0.0)
    }

    pub fn at_one(&self) -> f64 {
        self.value(1.0)
    }

    /// RMS of the samples around the fitted curve.
    pub fn fit_residual_rms(&self) -> f64 {
        let (mut s, mut n) = (0.0, 0usize);
        for (x, y) in self.samples() {
            let r = y - self.value(x);
            s += r * r;
            n += 1;
        }
        (s / n.max(1) as f64).sqrt()
    }
}

fn check_coverage(samples: &[(f64, f64)]) -> Result<(), SolverError> {
    if samples.len() < 8 {
        return Err(SolverError::InsufficientCoverage(format!("{} samples, need at least 8", samples.len())));
    }
    let mut prev = 0.0;
    for &(x, _) in samples.iter().chain(std::iter::once(&(1.0, 0.0))) {
        if x - prev >= 0.2 {
            return Err(SolverError::InsufficientCoverage(format!("gap of {:.3} before x = {x}", x - prev)));
        }
        prev = x;
    }
    Ok(())
}

fn dedup_sorted(samples: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for &(x, y) in samples {
        if xs.last().is_some_and(|&p: &f64| x <= p) {
            continue;
        }
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

/// Fits the limit curve from one or more layers.
///
/// With two or more layers (and `config.richardson`), each of the two largest
/// layers is smoothed, both are sampled on a uniform grid, and the pair is
/// extrapolated linearly in `1/m` to `m = ∞` before the final fit.
pub fn fit_limit_curve(case: Case, layers: &[LayerSamples], config: &FitConfig) -> Result<LimitCurve, SolverError> {
    if layers.is_empty() {
        return Err(SolverError::InsufficientCoverage("no layers".into()));
    }
    let mut layers: Vec<&LayerSamples> = layers.iter().collect();
    layers.sort_by_key(|l| l.m);
    for l in &layers {
        check_coverage(&l.samples)?;
    }

    if config.richardson && layers.len() >= 2 {
        let (a, b) = (layers[layers.len() - 2], layers[layers.len() - 1]);
        let fit = |l: &LayerSamples| {
            let (xs, ys) = dedup_sorted(&l.samples);
            let w = config.window_for(xs.len());
            LocalPolySmoother::new(xs, ys, w, config.degree)
        };
        let (sa, sb) = (fit(a)?, fit(b)?);
        let (ma, mb) = (a.m as f64, b.m as f64);
        let npts = config.extrapolation_points.max(config.window_for(config.extrapolation_points));
        let mut xs = Vec::with_capacity(npts);
        let mut ys = Vec::with_capacity(npts);
        for i in 0..npts {
            let x = i as f64 / (npts - 1) as f64;
            xs.push(x);
            ys.push((mb * sb.value(x) - ma * sa.value(x)) / (mb - ma));
        }
        let smoother = LocalPolySmoother::new(xs, ys, config.window_for(npts), config.degree)?;
        return Ok(LimitCurve { case, layers_used: vec![a.m, b.m], extrapolated: true, smoother });
    }

    let top = layers[layers.len() - 1];
    let (xs, ys) = dedup_sorted(&top.samples);
    let w = config.window_for(xs.len());
    let smoother = LocalPolySmoother::new(xs, ys, w, config.degree)?;
    Ok(LimitCurve { case, layers_used: vec![top.m], extrapolated: false, smoother })
}

/// Constant combinations readable from the limit curve.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComboConstants {
    /// Case i: `γ₀ − h = f(0)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma0_minus_h: Option<f64>,
    /// Case i: `γ₁ − H = f(1)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    #[serde(rename = "gamma1_minus_H")]
    pub gamma1_minus_big_h: Option<f64>,
    /// Case ii: `γ₁ sin(πξ₁/2) − H = g(1)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    #[serde(rename = "gamma1_sin_minus_H")]
    pub gamma1_sin_minus_big_h: Option<f64>,
    /// Case iii: `γ₀ cos(πξ₀/2) − h = ψ(0)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma0_cos_minus_h: Option<f64>,
}

/// Individual constants recovered from a combination plus side information.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResolvedConstants {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    #[serde(rename = "H")]
    pub big_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma1: Option<f64>,
}

/// Side information for [`resolve_constants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Known {
    /// Case i: `(h, H)`.
    Robin { h: f64, big_h: f64 },
    /// Case i: `(γ₀, γ₁)`.
    Gammas { gamma0: f64, gamma1: f64 },
    /// Case ii: `H`.
    RightRobin(f64),
    /// Case ii: `γ₁`.
    Gamma1(f64),
    /// Case iii: `h`.
    LeftRobin(f64),
    /// Case iii: `γ₀`.
    Gamma0(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub fit_residual_rms: f64,
    pub extrapolated: bool,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub case: Case,
    pub xi0: Rational,
    pub xi1: Rational,
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub combo_constants: ComboConstants,
    pub resolved: Option<ResolvedConstants>,
    /// Constant removed to make `∫q = 0`.
    pub q_mean_subtracted: f64,
    pub layers_used: Vec<u32>,
    pub diagnostics: Diagnostics,
}

/// `∫₀¹ y` over a uniform grid (Simpson when the interval count is even).
pub fn grid_integral(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().saturating_sub(1);
    if n == 0 {
        return 0.0;
    }
    let h = (x[n] - x[0]) / n as f64;
    if n.is_multiple_of(2) {
        let mut s = y[0] + y[n];
        for (i, v) in y.iter().enumerate().take(n).skip(1) {
            s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        s * h / 3.0
    } else {
        let inner: f64 = y[1..n].iter().sum();
        h * (0.5 * (y[0] + y[n]) + inner)
    }
}

/// Applies the reconstruction formulas to a fitted curve.
pub fn reconstruct(
    curve: &LimitCurve,
    xi0: Rational,
    xi1: Rational,
    output_points: usize,
) -> Result<ReconstructionResult, SolverError> {
    let npts = output_points.max(3);
    let (c0, c1) = (curve.at_zero(), curve.at_one());
    let x: Vec<f64> = (0..npts).map(|i| i as f64 / (npts - 1) as f64).collect();
    let mut q: Vec<f64> = x
        .iter()
        .map(|&t| {
            let d = curve.eval(t).1;
            match curve.case {
                Case::I => 2.0 * (d + c0 - c1),
                Case::II => 2.0 * (d - c1),
                Case::III => 2.0 * (d + c0),
            }
        })
        .collect();
    let mean = grid_integral(&x, &q);
    for v in &mut q {
        *v -= mean;
    }
    let combo_constants = match curve.case {
        Case::I => ComboConstants { gamma0_minus_h: Some(c0), gamma1_minus_big_h: Some(c1), ..Default::default() },
        Case::II => ComboConstants { gamma1_sin_minus_big_h: Some(c1), ..Default::default() },
        Case::III => ComboConstants { gamma0_cos_minus_h: Some(c0), ..Default::default() },
    };
    Ok(ReconstructionResult {
        case: curve.case,
        xi0,
        xi1,
        x,
        q,
        combo_constants,
        resolved: None,
        q_mean_subtracted: mean,
        layers_used: curve.layers_used.clone(),
        diagnostics: Diagnostics {
            fit_residual_rms: curve.fit_residual_rms(),
            extrapolated: curve.extrapolated,
            samples: curve.samples().count(),
        },
    })
}

/// Separates a constant combination using one supplied value (or pair).
pub fn resolve_constants(result: &ReconstructionResult, known: Known) -> Result<ReconstructionResult, SolverError> {
    let combo = result.combo_constants;
    let mismatch = |detail: &str| SolverError::KnownMismatch { case: result.case, detail: detail.to_string() };
    let resolved = match (result.case, known) {
        (Case::I, Known::Robin { h, big_h }) => {
            let (f0, f1) = (
                combo.gamma0_minus_h.ok_or_else(|| mismatch("missing f(0)"))?,
                combo.gamma1_minus_big_h.ok_or_else(|| mismatch("missing f(1)"))?,
            );
            ResolvedConstants { h: Some(h), big_h: Some(big_h), gamma0: Some(f0 + h), gamma1: Some(f1 + big_h) }
        }
        (Case::I, Known::Gammas { gamma0, gamma1 }) => {
            let (f0, f1) = (
                combo.gamma0_minus_h.ok_or_else(|| mismatch("missing f(0)"))?,
                combo.gamma1_minus_big_h.ok_or_else(|| mismatch("missing f(1)"))?,
            );
            ResolvedConstants {
                h: Some(gamma0 - f0),
                big_h: Some(gamma1 - f1),
                gamma0: Some(gamma0),
                gamma1: Some(gamma1),
            }
        }
        (Case::II, Known::RightRobin(big_h)) => {
            let g1 = combo.gamma1_sin_minus_big_h.ok_or_else(|| mismatch("missing g(1)"))?;
            let s = (PI * result.xi1.value() / 2.0).sin();
            ResolvedConstants { big_h: Some(big_h), gamma1: Some((g1 + big_h) / s), ..Default::default() }
        }
        (Case::II, Known::Gamma1(gamma1)) => {
            let g1 = combo.gamma1_sin_minus_big_h.ok_or_else(|| mismatch("missing g(1)"))?;
            let s = (PI * result.xi1.value() / 2.0).sin();
            ResolvedConstants { big_h: Some(gamma1 * s - g1), gamma1: Some(gamma1), ..Default::default() }
        }
        (Case::III, Known::LeftRobin(h)) => {
            let p0 = combo.gamma0_cos_minus_h.ok_or_else(|| mismatch("missing ψ(0)"))?;
            let c = (PI * result.xi0.value() / 2.0).cos();
            ResolvedConstants { h: Some(h), gamma0: Some((p0 + h) / c), ..Default::default() }
        }
        (Case::III, Known::Gamma0(gamma0)) => {
            let p0 = combo.gamma0_cos_minus_h.ok_or_else(|| mismatch("missing ψ(0)"))?;
            let c = (PI * result.xi0.value() / 2.0).cos();
            ResolvedConstants { h: Some(gamma0 * c - p0), gamma0: Some(gamma0), ..Default::default() }
        }
        (case, k) => {
            let need = match case {
                Case::I => "the pair (h, H) or (gamma0, gamma1)",
                Case::II => "H or gamma1",
                Case::III => "h or gamma0",
            };
            return Err(mismatch(&format!("{k:?} supplied, case {case} needs {need}")));
        }
    };
    Ok(ReconstructionResult { resolved: Some(resolved), ..result.clone() })
}

/// Full inverse pipeline on a dataset: admissible layers, limit curve, formulas.
///
/// `max_m` restricts the layers to indices `<= max_m`.
pub fn invert(
    dataset: &NodalDataset,
    case: Case,
    xi0: Rational,
    xi1: Rational,
    config: &FitConfig,
    max_m: Option<u32>,
    known: Option<Known>,
) -> Result<ReconstructionResult, SolverError> {
    let layers = select_subsequence(dataset, xi0, xi1, case)?;
    let samples = layers
        .into_iter()
        .filter(|l| max_m.is_none_or(|m| l.n <= m))
        .map(|l| Ok(LayerSamples { m: l.n, samples: limit_samples(l, case)? }))
        .collect::<Result<Vec<_>, SolverError>>()?;
    if samples.is_empty() {
        return Err(SolverError::NoAdmissibleIndex { modulus: admissible_modulus(case, xi0, xi1) });
    }
    let curve = fit_limit_curve(case, &samples, config)?;
    let result = reconstruct(&curve, xi0, xi1, config.output_points)?;
    match known {
        Some(k) => resolve_constants(&result, k),
        None => Ok(result),
    }
}
