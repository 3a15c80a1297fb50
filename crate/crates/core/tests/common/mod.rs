//! Shared fixtures for the integration and acceptance tests.
#![allow(dead_code)]

use nodalsl::{parse_expression, BoundaryParam, Case, Potential, ProblemSpec, Rational};
use rand::Rng;

pub use BoundaryParam::{Dirichlet, Finite};

pub fn rational(s: &str) -> Rational {
    s.parse().unwrap()
}

pub fn problem(q: &str, h: BoundaryParam, big_h: BoundaryParam, g0: f64, g1: f64, xi0: &str, xi1: &str) -> ProblemSpec {
    let q = Potential::from_expr(parse_expression(q).unwrap());
    ProblemSpec::new(q, h, big_h, g0, g1, rational(xi0), rational(xi1)).unwrap()
}

pub fn robin_cosine() -> ProblemSpec {
    problem("cos(pi*x)", Finite(1.0), Finite(2.0), 3.0, 6.0, "2/5", "6/7")
}

pub fn left_dirichlet_cosine() -> ProblemSpec {
    problem("cos(pi*x) + x - 1/2", Dirichlet, Finite(2.0), 0.0, 3.0, "1/2", "2/5")
}

pub fn right_dirichlet_sine() -> ProblemSpec {
    problem("sin(pi*x) - 2/pi", Finite(1.0), Dirichlet, 2.0, 0.0, "2/3", "1/2")
}

/// `Δ(k²)` for `q = 0`, from `C = cos kx`, `S = sin kx / k`.
pub fn free_delta(p: &ProblemSpec, k: f64) -> f64 {
    let (xi0, xi1) = (p.xi0.value(), p.xi1.value());
    let (g0, g1) = (p.gamma0, p.gamma1);
    let (u_c, u_s) = match p.h_left {
        Dirichlet => (1.0, 0.0),
        Finite(h) => (h - g0 * (k * xi0).cos(), 1.0 - g0 * (k * xi0).sin() / k),
    };
    let (v_c, v_s) = match p.h_right {
        Dirichlet => (k.cos(), k.sin() / k),
        Finite(big_h) => (
            -k * k.sin() + big_h * k.cos() - g1 * (k * xi1).cos(),
            k.cos() + big_h * k.sin() / k - g1 * (k * xi1).sin() / k,
        ),
    };
    u_c * v_s - u_s * v_c
}

/// Roots of `f` in `[lo, hi]`: sign changes on a uniform scan, then bisection.
pub fn dense_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil() as usize;
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=n {
        let b = (lo + i as f64 * step).min(hi);
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (x0 + x1);
                if mid <= x0 || mid >= x1 {
                    break;
                }
                let fm = f(mid);
                if fm.signum() == f0.signum() {
                    x0 = mid;
                    f0 = fm;
                } else {
                    x1 = mid;
                }
            }
            roots.push(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    roots
}

pub fn case_name(c: Case) -> &'static str {
    c.as_str()
}

/// Random smooth potential expression with moderate size.
pub fn random_potential<R: Rng>(rng: &mut R) -> String {
    let a = rng.gen_range(-20.0..20.0f64);
    let b = rng.gen_range(0.5..4.0f64);
    let c = rng.gen_range(-10.0..10.0f64);
    let d = rng.gen_range(-2.0..2.0f64);
    match rng.gen_range(0..4) {
        0 => format!("{a:.6}*cos({b:.6}*pi*x) + {c:.6}*x"),
        1 => format!("{a:.6}*sin({b:.6}*pi*x)^2 - {c:.6}"),
        2 => format!("{c:.6}*exp({d:.6}*x) + {a:.6}*x^3"),
        _ => format!("abs({a:.6}*x - {c:.6}) + {d:.6}*cos(pi*x)"),
    }
}

/// Random expression tree printed as source text.
pub fn random_expression<R: Rng>(rng: &mut R, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => "x".to_string(),
            1 => "pi".to_string(),
            2 => format!("{}", rng.gen_range(0..100)),
            _ => format!("{:.3}", rng.gen_range(0.0..10.0f64)),
        };
    }
    let sub = |rng: &mut R| random_expression(rng, depth - 1);
    match rng.gen_range(0..9) {
        0 => format!("{} + {}", sub(rng), sub(rng)),
        1 => format!("{} - {}", sub(rng), sub(rng)),
        2 => format!("{} * {}", sub(rng), sub(rng)),
        3 => format!("({}) / (2 + abs({}))", sub(rng), sub(rng)),
        4 => format!("({})^2", sub(rng)),
        5 => format!("-{}", sub(rng)),
        6 => format!("sin({})", sub(rng)),
        7 => format!("cos({})", sub(rng)),
        _ => format!("({})", sub(rng)),
    }
}

pub fn sup_error(x: &[f64], q: &[f64], truth: impl Fn(f64) -> f64) -> f64 {
    x.iter().zip(q).map(|(&t, &v)| (v - truth(t)).abs()).fold(0.0, f64::max)
}
