use csbp::mechanism::catalog;
use csbp::paths::PathConfig;
use csbp::verify::{block_resolution_bias, coalescence_quadrature, mc_coalescence, Resolution};
use csbp::FlowEvaluator;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// ∫_0^∞ f by λ = y/(1-y) and composite Gauss–Legendre in y.
fn half_line<F: FnMut(f64) -> f64>(mut f: F, rule: &[(f64, f64)], panels: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..panels {
        let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        for &(x, w) in rule {
            let y = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let d = 1.0 - y;
            s += 0.5 * (b - a) * w * f(y / d) / (d * d);
        }
    }
    s
}

// Ψ(λ) = λ² - λ in closed form
fn u(t: f64, l: f64) -> f64 {
    let e = (-t).exp();
    l / (l + (1.0 - l) * e)
}

fn du(t: f64, l: f64) -> f64 {
    let e = (-t).exp();
    let d = l + (1.0 - l) * e;
    e / (d * d)
}

/// x² ∫∫ (B(λ1, λ2) - B(λ1, λ2 + θ)) dλ1 dλ2 with
/// B(λ1, λ2) = ∂u(s, λ2) ∂u(t, λ1 + u(s, λ2))² e^{-x u(t, λ1 + u(s, λ2))}.
fn two_dimensional(x: f64, t: f64, s: f64, theta: f64) -> f64 {
    let rule = gauss_legendre(20);
    let b = |l1: f64, l2: f64| {
        let y = l1 + u(s, l2);
        du(s, l2) * du(t, y).powi(2) * (-x * u(t, y)).exp()
    };
    x * x
        * half_line(
            |l2| half_line(|l1| b(l1, l2) - b(l1, l2 + theta), &rule, 48),
            &rule,
            48,
        )
}

#[test]
fn quadrature_matches_the_double_integral() {
    let ev = FlowEvaluator::new(catalog::quadratic_super()).unwrap();
    for &(t, s, theta) in &[(1.0, 0.0, 1.0), (1.0, 1.0, 1.0), (0.5, 2.0, 0.3)] {
        let q = coalescence_quadrature(&ev, 1.0, t, s, theta).unwrap();
        let o = two_dimensional(1.0, t, s, theta);
        assert!((q - o).abs() < 1e-5 * o, "t={t} s={s} θ={theta}: {q} vs {o}");
    }
}

#[test]
fn monte_carlo_agrees_at_cluster_resolution() {
    let ev = FlowEvaluator::new(catalog::quadratic_super()).unwrap();
    let q = coalescence_quadrature(&ev, 1.0, 1.0, 1.0, 1.0).unwrap();
    let cfg = PathConfig::default();
    let e = mc_coalescence(&ev.mechanism().clone(), 1.0, 1.0, 1.0, 1.0, 20_000, Resolution::Clusters, &cfg, 11)
        .unwrap();
    assert!((e.mean - q).abs() < 3.0 * e.se, "{e:?} vs {q}");
    assert!((e.rao_blackwell - q).abs() < 3.0 * e.rao_blackwell_se, "{e:?} vs {q}");
}

#[test]
fn block_estimate_carries_the_resolution_bias() {
    let m = catalog::quadratic_super();
    let ev = FlowEvaluator::new(m.clone()).unwrap();
    let q = coalescence_quadrature(&ev, 1.0, 1.0, 1.0, 1.0).unwrap();
    let cfg = PathConfig {
        h: 1.0,
        ..Default::default()
    };
    for n in [2, 4] {
        let e = mc_coalescence(&m, 1.0, 1.0, 1.0, 1.0, 20_000, Resolution::Blocks(n), &cfg, 5).unwrap();
        let target = q - block_resolution_bias(q, n);
        assert!(
            (e.rao_blackwell - target).abs() < 3.0 * e.rao_blackwell_se,
            "n={n}: {e:?} vs {target}"
        );
    }
    assert!(block_resolution_bias(q, 1000) < block_resolution_bias(q, 500));
}
