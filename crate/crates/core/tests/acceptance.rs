//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if
//! any criterion fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;

use nodalsl::forward::{find_eigenvalue, residual_scale};
use nodalsl::inverse::{grid_integral, invert, FitConfig, Known, ReconstructionResult};
use nodalsl::io::{decreasing_trend, nodes_csv, parse_nodes_csv};
use nodalsl::{
    generate_dataset, integrate_basis, parse_expression, Case, Potential, ProblemSpec, Resolution, SolverConfig,
};
use rand::{Rng, SeedableRng};

use common::{Dirichlet, Finite};

type Outcome = Result<String, String>;

/// Reconstructions made by the round-trip criteria, checked again by criterion 7.
#[derive(Default)]
struct Collected {
    reconstructions: Vec<ReconstructionResult>,
}

struct RoundTrip {
    /// `(largest layer, q sup error)` per prefix of the layer list.
    trend: Vec<(u32, f64)>,
    last: ReconstructionResult,
}

fn round_trip(
    p: &ProblemSpec,
    layers: &[u32],
    known: Known,
    truth: impl Fn(f64) -> f64,
    c: &mut Collected,
) -> Result<RoundTrip, String> {
    let (ds, _) = generate_dataset(p, layers, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let mut trend = Vec::new();
    let mut last = None;
    for &m in layers {
        let r = invert(&ds, p.case(), p.xi0, p.xi1, &FitConfig::default(), Some(m), Some(known))
            .map_err(|e| e.to_string())?;
        trend.push((m, common::sup_error(&r.x, &r.q, &truth)));
        c.reconstructions.push(r.clone());
        last = Some(r);
    }
    Ok(RoundTrip { trend, last: last.ok_or("no layers")? })
}

fn fmt_trend(t: &[(u32, f64)]) -> String {
    t.iter().map(|(m, e)| format!("{m}:{e:.2e}")).collect::<Vec<_>>().join(" ")
}

fn criterion1(c: &mut Collected) -> Outcome {
    let rt = round_trip(
        &common::robin_cosine(),
        &[70, 140, 280, 560],
        Known::Robin { h: 1.0, big_h: 2.0 },
        |x| (PI * x).cos(),
        c,
    )?;
    let errs: Vec<f64> = rt.trend.iter().map(|t| t.1).collect();
    let r = rt.last.resolved.ok_or("no resolved constants")?;
    let (g0, g1) = (r.gamma0.ok_or("no gamma0")?, r.gamma1.ok_or("no gamma1")?);
    let detail = format!("q sup error {}; gamma0 = {g0:.6}, gamma1 = {g1:.6}", fmt_trend(&rt.trend));
    let ok =
        errs[errs.len() - 1] <= 5e-2 && decreasing_trend(&errs) && (g0 - 3.0).abs() <= 2e-2 && (g1 - 6.0).abs() <= 2e-2;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion2(c: &mut Collected) -> Outcome {
    let rt = round_trip(
        &common::left_dirichlet_cosine(),
        &[80, 160, 320, 640],
        Known::RightRobin(2.0),
        |x| (PI * x).cos() + x - 0.5,
        c,
    )?;
    let g1 = rt.last.resolved.and_then(|r| r.gamma1).ok_or("no gamma1")?;
    let g = rt.last.combo_constants.gamma1_sin_minus_big_h.ok_or("no g(1)")?;
    let detail = format!("g(1) = {g:.6}, gamma1 = (g(1)+2)/sin(pi/5) = {g1:.6}; q sup error {}", fmt_trend(&rt.trend));
    if (g1 - 3.0).abs() <= 2e-2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion3(c: &mut Collected) -> Outcome {
    let rt = round_trip(
        &common::right_dirichlet_sine(),
        &[96, 192, 384, 768],
        Known::LeftRobin(1.0),
        |x| (PI * x).sin() - 2.0 / PI,
        c,
    )?;
    let g0 = rt.last.resolved.and_then(|r| r.gamma0).ok_or("no gamma0")?;
    let psi0 = rt.last.combo_constants.gamma0_cos_minus_h.ok_or("no psi(0)")?;
    let detail = format!("psi(0) = {psi0:.2e}, gamma0 = {g0:.6}; q sup error {}", fmt_trend(&rt.trend));
    if (g0 - 2.0).abs() <= 2e-2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion4() -> Outcome {
    let problems = [
        ("i", common::problem("0", Finite(1.0), Finite(2.0), 0.7, 1.3, "1/3", "3/4")),
        ("ii", common::problem("0", Dirichlet, Finite(1.5), 0.0, 0.8, "1/2", "2/5")),
        ("iii", common::problem("0", Finite(0.5), Dirichlet, 1.2, 0.0, "2/3", "1/2")),
    ];
    let cfg = SolverConfig::default();
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for (name, p) in &problems {
        let mut ks = Vec::new();
        for n in 5..=100u32 {
            match find_eigenvalue(p, n, &cfg) {
                Ok(sp) => ks.push(sp.k),
                Err(e) => failures.push(format!("case {name} n={n}: {e}")),
            }
        }
        if ks.len() != 96 {
            continue;
        }
        // every closed-form root between the neighbours of k_5 and k_100 must be found
        let lo = 0.5 * (ks[0] + (ks[0] - PI).max(0.0));
        let hi = ks[95] + 0.5 * (ks[95] - ks[94]);
        let oracle = common::dense_roots(|k| common::free_delta(p, k), lo, hi, PI / 256.0);
        let mut worst = 0.0f64;
        if oracle.len() != ks.len() {
            failures.push(format!("case {name}: {} closed-form roots vs {} eigenvalues", oracle.len(), ks.len()));
        } else {
            for (a, b) in oracle.iter().zip(&ks) {
                worst = worst.max((a - b).abs());
            }
            if worst > 1e-8 {
                failures.push(format!("case {name}: max |k - root| = {worst:e}"));
            }
        }
        notes.push(format!("case {name}: {} roots, max |k - root| = {worst:.1e}", oracle.len()));
    }
    if failures.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion5() -> Outcome {
    let p = common::robin_cosine();
    let mut gaps = Vec::new();
    for n in [20u32, 40, 80, 160] {
        let sp = find_eigenvalue(&p, n, &SolverConfig::default()).map_err(|e| e.to_string())?;
        gaps.push((n, n as f64 * (sp.k - sp.seed).abs()));
    }
    let detail = gaps.iter().map(|(n, g)| format!("{n}:{g:.3e}")).collect::<Vec<_>>().join(" ");
    let bounded = gaps.iter().all(|g| g.1 < 1.0);
    let decreasing = gaps[1..].windows(2).all(|w| w[1].1 < w[0].1);
    if bounded && decreasing {
        Ok(format!("n|k_n - seed| = {detail}"))
    } else {
        Err(detail)
    }
}

fn criterion6() -> Outcome {
    let p = common::robin_cosine();
    let (ds, _) = generate_dataset(&p, &[280], &SolverConfig::default()).map_err(|e| e.to_string())?;
    let layer = ds.layer(280).ok_or("no layer")?;
    let f = |x: f64| 2.0 * x + (PI * x).sin() / (2.0 * PI) + 2.0;
    let scale = residual_scale(Case::I, 280);
    let worst =
        layer.nodes.iter().map(|nd| (scale * (nd.x - (nd.j as f64 + 0.5) / 280.0) - f(nd.x)).abs()).fold(0.0, f64::max);
    let detail = format!("{} nodes, max deviation {worst:.3e}", layer.nodes.len());
    if worst <= 0.1 && layer.nodes.len() == 280 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion7(c: &Collected) -> Outcome {
    let mut failures = Vec::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);

    let res = Resolution::default();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let text = common::random_potential(&mut rng);
        let k = rng.gen_range(0.0..600.0);
        let q = Potential::from_expr(parse_expression(&text).map_err(|e| e.to_string())?);
        match integrate_basis(&q, k, &[0.4, 6.0 / 7.0], &res) {
            Ok(b) => worst = worst.max(b.wronskian_drift()),
            Err(e) => failures.push(format!("{text} at k={k}: {e}")),
        }
    }
    if worst > 1e-8 {
        failures.push(format!("Wronskian drift {worst:e}"));
    }

    let mean = c.reconstructions.iter().map(|r| grid_integral(&r.x, &r.q).abs()).fold(0.0, f64::max);
    if c.reconstructions.is_empty() || mean > 1e-10 {
        failures.push(format!("zero mean: {} reconstructions, max |mean| {mean:e}", c.reconstructions.len()));
    }

    let (ds, _) =
        generate_dataset(&common::robin_cosine(), &[70, 140], &SolverConfig::default()).map_err(|e| e.to_string())?;
    let bytes = nodes_csv(&ds);
    let back = parse_nodes_csv(&bytes, Case::I).map_err(|e| e.to_string())?;
    let bit_exact = back == ds && nodes_csv(&back) == bytes;
    if !bit_exact {
        failures.push("nodes CSV round trip is not bit-stable".into());
    }

    let mut parsed = 0;
    for _ in 0..200 {
        let src = common::random_expression(&mut rng, 4);
        let ok = parse_expression(&src).ok().and_then(|e| {
            let printed = e.to_string();
            let again = parse_expression(&printed).ok()?;
            let same_eval = [0.0, 0.3, 0.7, 1.0].iter().all(|&x| match (e.eval(x), again.eval(x)) {
                (Ok(a), Ok(b)) => a.to_bits() == b.to_bits(),
                (Err(a), Err(b)) => a == b,
                _ => false,
            });
            Some(again == e && again.to_string() == printed && same_eval)
        });
        if ok == Some(true) {
            parsed += 1;
        }
    }
    if parsed != 200 {
        failures.push(format!("parser round trip {parsed}/200"));
    }

    let detail = format!(
        "Wronskian max {worst:.1e} over 50 cases; zero mean max {mean:.1e} over {} reconstructions; CSV bit-stable; parser {parsed}/200",
        c.reconstructions.len()
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(failures.join("; "))
    }
}

fn main() -> ExitCode {
    let mut collected = Collected::default();
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "Robin cosine round trip (case i)", criterion1(&mut collected)),
        (2, "left Dirichlet round trip (case ii)", criterion2(&mut collected)),
        (3, "right Dirichlet round trip (case iii)", criterion3(&mut collected)),
        (4, "constant-coefficient oracle", criterion4()),
        (5, "eigenvalue seed rate", criterion5()),
        (6, "nodal residual at m = 280", criterion6()),
        (7, "invariant suites", criterion7(&collected)),
    ];
    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {id} PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
