//! Acceptance run: one PASS/FAIL line per criterion. Tolerances are fixed below; seeds
//! are fixed so the run is reproducible.

use std::fs;
use std::path::Path;
use std::time::Instant;

use csbp::grey::{drift_d_theta, phi, regime};
use csbp::mechanism::{catalog, classify, predict_regime, BranchingMechanism, Criticality, Decision, Outcome, Variation};
use csbp::parallel::{map_runs, mean_se};
use csbp::paths::{feller_step, simulate_path, Advance, PathConfig, PathSimulator};
use csbp::verify::{
    block_resolution_bias, coalescence_quadrature, eve_bound_a, eve_bound_b, extinction_curve,
    ks_two_sample, mc_coalescence, theorem12_suite, Resolution, SuiteConfig, TestOutcome,
};
use csbp::FlowEvaluator;

const FLOW_REL: f64 = 1e-8;
const ORACLE_QUAD_REL: f64 = 1e-9;
const SE_BAND: f64 = 3.0;
const KS_LEVEL: f64 = 0.01;
const GOF_LEVEL: f64 = 0.01;
const COALESCENCE_2D_REL: f64 = 1e-5;
const PHI_AT_ONE_REL: f64 = 1e-9;
const DRIFT_LIMIT_REL: f64 = 1e-6;
const PHI_INFINITY_REL: f64 = 1e-3;
const EVE_BOUND_MAX: f64 = 0.01;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// ---------- independent quadrature used by the oracles ----------

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
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
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for &(x, w) in rule {
            s += 0.5 * h * w * f(lo + 0.5 * h * (x + 1.0));
        }
    }
    s
}

/// `∫_u^λ dw / Ψ(w)` in `log w`, which must equal `t`.
fn time_from_flow(psi: &dyn Fn(f64) -> f64, u: f64, lambda: f64) -> f64 {
    let rule = gauss_legendre(20);
    composite(|s| s.exp() / psi(s.exp()), u.ln(), lambda.ln(), 400, &rule)
}

// ---------- criteria ----------

fn c1_flow_closed_forms() -> Verdict {
    let ts = [0.1, 0.5, 1.0, 3.0];
    let ls = [0.05, 0.5, 2.0, 20.0];
    type Closed = fn(f64, f64) -> f64;
    let cases: [(BranchingMechanism, Closed, fn(f64) -> f64); 4] = [
        (catalog::feller(), |t, l| l / (1.0 + l * t), |w| w * w),
        (catalog::neveu(), |t, l| l.powf((-t).exp()), |w| w * w.ln()),
        (catalog::stable(), |t, l| (l.powf(-0.5) + 0.5 * t).powi(-2), |w| w.powf(1.5)),
        (catalog::quadratic_super(), |t, l| l / (l + (1.0 - l) * (-t).exp()), |w| w * w - w),
    ];
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for (mech, closed, psi) in &cases {
        let ev = FlowEvaluator::new(mech.clone()).unwrap();
        for &t in &ts {
            for &l in &ls {
                let exact = closed(t, l);
                // the oracle itself solves the integral equation
                let back = time_from_flow(psi, exact, l);
                worst_oracle = worst_oracle.max(((back - t) / t).abs());
                let got = ev.u(t, l).unwrap();
                worst = worst.max(((got - exact) / exact).abs());
            }
        }
    }
    verdict(
        worst <= FLOW_REL && worst_oracle <= ORACLE_QUAD_REL,
        format!("max rel err {worst:.2e} (tol {FLOW_REL:e}); oracle quadrature {worst_oracle:.2e}"),
    )
}

fn c2_semigroup_and_inverse() -> Verdict {
    let grid = [0.1, 0.5, 1.0, 2.0];
    let ls = [0.01, 0.1, 1.0, 10.0];
    let mut worst_semi: f64 = 0.0;
    let mut worst_inv: f64 = 0.0;
    let mut inverse_points = 0;
    for mech in catalog::all() {
        let ev = FlowEvaluator::new(mech.clone()).unwrap();
        for &t in &grid {
            for &s in &grid {
                for &l in &ls {
                    let direct = ev.u(t + s, l).unwrap();
                    let composed = ev.u(t, ev.u(s, l).unwrap()).unwrap();
                    worst_semi = worst_semi.max((direct - composed).abs() / (1.0 + direct.abs()));
                }
            }
            for &l in &ls {
                let fwd = ev.u(t, l).unwrap();
                if let Ok(back) = ev.u(-t, fwd) {
                    worst_inv = worst_inv.max((back - l).abs() / (1.0 + l));
                    inverse_points += 1;
                }
            }
        }
    }
    verdict(
        worst_semi <= FLOW_REL && worst_inv <= FLOW_REL,
        format!(
            "semigroup {worst_semi:.2e}, backward inverse {worst_inv:.2e} over {inverse_points} points (tol {FLOW_REL:e})"
        ),
    )
}

fn c3_marginal_laws() -> Verdict {
    let n = 10_000;
    let x = 1.0;
    let ts = [0.5, 1.0];
    let ls = [0.5, 1.0, 2.0];
    let cfg = PathConfig {
        h: 0.5,
        horizon: 1.0,
        ..Default::default()
    };
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, mech) in catalog::all().into_iter().enumerate() {
        let ev = FlowEvaluator::new(mech.clone()).unwrap();
        let sim = PathSimulator::new(&mech, &cfg).unwrap();
        let paths = map_runs(n, 300 + k as u64, |_, rng| simulate_path(&sim, x, &cfg, rng).unwrap());
        for (i, &t) in ts.iter().enumerate() {
            for &l in &ls {
                let v: Vec<f64> = paths.iter().map(|p| (-l * p.values[i + 1]).exp()).collect();
                let (m, se) = mean_se(&v);
                let target = (-x * ev.u(t, l).unwrap()).exp();
                let z = (m - target).abs() / se;
                worst = worst.max(z);
                if z > SE_BAND {
                    failures.push(format!("{} t={t} λ={l}: {z:.2} SE", mech.label()));
                }
            }
        }
    }
    let feller = catalog::feller();
    let lam = PathSimulator::lamperti(
        &feller,
        &PathConfig {
            h: 1.0,
            ..Default::default()
        },
    )
    .unwrap();
    let a: Vec<f64> = map_runs(n, 41, |_, rng| match lam.advance(1.0, 0.0, 1.0, 1.0, rng) {
        Advance::Alive(z) => z,
        Advance::Extinct(te) if te > 1.0 => 0.0,
        _ => 0.0,
    });
    let b: Vec<f64> = map_runs(n, 42, |_, rng| feller_step(1.0, 1.0, 1.0, rng));
    let ks = ks_two_sample(&a, &b, KS_LEVEL).unwrap();
    let p = match ks.judgement {
        csbp::verify::Judgement::PValue { p_value, .. } => p_value,
        _ => f64::NAN,
    };
    verdict(
        failures.is_empty() && ks.pass,
        format!(
            "{} mechanisms x 6 Laplace points, worst {worst:.2} SE{}; Lamperti vs exact Feller KS p={p:.3}",
            catalog::NAMES.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!(" [outside: {}]", failures.join("; "))
            }
        ),
    )
}

struct Expected {
    name: &'static str,
    variation: Variation,
    drift: Option<f64>,
    psi_prime_0: f64,
    gamma: f64,
    conservative: bool,
    persistent: bool,
    xlogx_finite: bool,
    pi_01_finite: bool,
    criticality: Criticality,
}

fn c4_classification() -> Verdict {
    use Criticality::*;
    use Variation::*;
    let ninf = f64::NEG_INFINITY;
    let inf = f64::INFINITY;
    let table = [
        Expected { name: "feller", variation: Infinite, drift: None, psi_prime_0: 0.0, gamma: 0.0, conservative: true, persistent: false, xlogx_finite: true, pi_01_finite: true, criticality: Critical },
        Expected { name: "stable", variation: Infinite, drift: None, psi_prime_0: 0.0, gamma: 0.0, conservative: true, persistent: false, xlogx_finite: false, pi_01_finite: false, criticality: Critical },
        Expected { name: "neveu", variation: Infinite, drift: None, psi_prime_0: ninf, gamma: 1.0, conservative: true, persistent: true, xlogx_finite: false, pi_01_finite: false, criticality: Super },
        Expected { name: "quadratic-super", variation: Infinite, drift: None, psi_prime_0: -1.0, gamma: 1.0, conservative: true, persistent: false, xlogx_finite: true, pi_01_finite: true, criticality: Super },
        Expected { name: "fv-compound-poisson", variation: Finite, drift: Some(2.0), psi_prime_0: 1.0, gamma: 0.0, conservative: true, persistent: true, xlogx_finite: true, pi_01_finite: true, criticality: Sub },
        Expected { name: "dust-dense", variation: Finite, drift: Some(3.0), psi_prime_0: 1.0, gamma: 0.0, conservative: true, persistent: true, xlogx_finite: true, pi_01_finite: false, criticality: Sub },
        Expected { name: "nodust-dense", variation: Finite, drift: Some(1.0 / std::f64::consts::LN_2), psi_prime_0: 0.0, gamma: 0.0, conservative: true, persistent: true, xlogx_finite: false, pi_01_finite: false, criticality: Critical },
        Expected { name: "subordinator", variation: Finite, drift: Some(0.0), psi_prime_0: ninf, gamma: inf, conservative: false, persistent: true, xlogx_finite: true, pi_01_finite: false, criticality: Super },
        Expected { name: "fv-growth", variation: Finite, drift: Some(0.0), psi_prime_0: -1.0, gamma: inf, conservative: true, persistent: true, xlogx_finite: true, pi_01_finite: true, criticality: Super },
    ];
    let close = |a: f64, b: f64| a == b || (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    let mut wrong = Vec::new();
    for e in &table {
        let r = classify(&catalog::by_name(e.name).unwrap()).unwrap();
        let mut bad = |field: &str, ok: bool| {
            if !ok {
                wrong.push(format!("{}.{field}", e.name));
            }
        };
        bad("variation", r.variation == e.variation);
        bad(
            "drift",
            match (r.drift, e.drift) {
                (Some(a), Some(b)) => (a - b).abs() <= 1e-10 * b.abs().max(1.0),
                (None, None) => true,
                _ => false,
            },
        );
        bad("psi_prime_0", close(r.psi_prime_0, e.psi_prime_0) || (r.psi_prime_0.abs() < 1e-12 && e.psi_prime_0 == 0.0));
        bad(
            "gamma",
            matches!(r.gamma, Decision::Known(g) if close(g, e.gamma) || (g - e.gamma).abs() < 1e-12),
        );
        bad("conservative", r.conservative == e.conservative);
        bad("persistent", r.persistent == e.persistent);
        bad("xlogx_finite", r.xlogx_finite == e.xlogx_finite);
        bad("pi_01_finite", r.pi_01_finite == e.pi_01_finite);
        bad("criticality", r.criticality == e.criticality);
    }
    // the pair told apart by the x log x test alone
    let dd = predict_regime(&catalog::dust_dense(), 1.0).unwrap();
    let nd = predict_regime(&catalog::nodust_dense(), 1.0).unwrap();
    let split = dd.events[2].outcome == Outcome::DustDenseSettlers && nd.events[2].outcome == Outcome::NoDustDense;
    verdict(
        wrong.is_empty() && split,
        format!(
            "{} mechanisms x 9 predicates{}; dust/no-dust pair {}",
            table.len(),
            if wrong.is_empty() {
                String::new()
            } else {
                format!(" [mismatch: {}]", wrong.join(", "))
            },
            if split { "separated" } else { "NOT separated" }
        ),
    )
}

fn find<'a>(outcomes: &'a [TestOutcome], name: &str, event: &str) -> Option<&'a TestOutcome> {
    outcomes
        .iter()
        .find(|o| o.name == name && o.metadata.get("event").map(String::as_str) == Some(event))
}

fn c5_finite_time_eve() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for (mech, horizon) in [(catalog::feller(), 1e6), (catalog::stable(), 1e4)] {
        let cfg = SuiteConfig {
            runs: 1000,
            blocks: 20,
            seed: 5,
            path: PathConfig {
                h: horizon,
                horizon,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = theorem12_suite(&mech, 1.0, &cfg).unwrap();
        let o = find(&out, "eve-finite-time", "A");
        let ok = o.is_some_and(|o| o.pass && o.n_samples == 1000);
        pass &= ok;
        parts.push(format!(
            "{} {}/1000",
            mech.label(),
            o.map_or(0, |o| (o.statistic * o.n_samples as f64).round() as usize)
        ));
    }
    verdict(pass, parts.join(", "))
}

fn c6_quadratic_poisson_settlers() -> Verdict {
    let mech = catalog::quadratic_super();
    let mean = match predict_regime(&mech, 1.0).unwrap().events[1].outcome {
        Outcome::NoDustPoissonSettlers { mean } => mean,
        _ => f64::NAN,
    };
    let cfg = SuiteConfig {
        runs: 10_000,
        blocks: 500,
        seed: 6,
        level: GOF_LEVEL,
        path: PathConfig {
            h: 20.0,
            horizon: 20.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let out = theorem12_suite(&mech, 1.0, &cfg).unwrap();
    let gof = find(&out, "poisson-gof", "B");
    let p = gof.map(|o| match &o.judgement {
        csbp::verify::Judgement::PValue { p_value, .. } => *p_value,
        _ => f64::NAN,
    });
    verdict(
        (mean - 1.0).abs() < 1e-12 && gof.is_some_and(|o| o.pass),
        format!(
            "predicted mean {mean}, {} runs on explosion, chi-square p={:.3} (level {GOF_LEVEL})",
            gof.map_or(0, |o| o.n_samples),
            p.unwrap_or(f64::NAN)
        ),
    )
}

fn c7_fv_dust_and_settlers() -> Verdict {
    let mech = catalog::fv_compound_poisson();
    let mean = match predict_regime(&mech, 3.0).unwrap().events[2].outcome {
        Outcome::DustPoissonSettlers { mean } => mean,
        _ => f64::NAN,
    };
    let cfg = SuiteConfig {
        runs: 10_000,
        seed: 7,
        level: GOF_LEVEL,
        dust_level: 1e-3,
        dust_fraction: 0.9,
        ..Default::default()
    };
    let out = theorem12_suite(&mech, 3.0, &cfg).unwrap();
    let gof = find(&out, "poisson-gof", "C");
    let dust = find(&out, "dust-present", "C");
    let p = gof.map(|o| match &o.judgement {
        csbp::verify::Judgement::PValue { p_value, .. } => *p_value,
        _ => f64::NAN,
    });
    verdict(
        (mean - 1.5).abs() < 1e-12 && gof.is_some_and(|o| o.pass) && dust.is_some_and(|o| o.pass),
        format!(
            "mean {mean}, chi-square p={:.3}; dust > 1e-3 in {:.3} of runs (need 0.9)",
            p.unwrap_or(f64::NAN),
            dust.map_or(f64::NAN, |o| o.statistic)
        ),
    )
}

fn c8_neveu_eve() -> Verdict {
    let mech = catalog::neveu();
    let cfg = SuiteConfig {
        runs: 1000,
        blocks: 200,
        seed: 8,
        eve_fraction: 0.95,
        thresholds: csbp::population::LimitThresholds {
            eta: 0.01,
            ..Default::default()
        },
        path: PathConfig {
            h: 5.0,
            horizon: 20.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let out = theorem12_suite(&mech, 1.0, &cfg).unwrap();
    let b = find(&out, "eve", "B");
    let c = find(&out, "eve", "C");
    let ev = FlowEvaluator::new(mech).unwrap();
    let a20 = eve_bound_a(&ev, 1.0, 20.0).unwrap();
    let b20 = eve_bound_b(&ev, 1.0, 20.0).unwrap();
    let ok = b.is_some_and(|o| o.pass)
        && c.is_some_and(|o| o.pass)
        && a20.value < EVE_BOUND_MAX
        && b20.value < EVE_BOUND_MAX;
    verdict(
        ok,
        format!(
            "Eve fraction B {:.3} ({} runs), C {:.3} ({} runs); A(20)={:.2e}, B(20)={:.2e}",
            b.map_or(f64::NAN, |o| o.statistic),
            b.map_or(0, |o| o.n_samples),
            c.map_or(f64::NAN, |o| o.statistic),
            c.map_or(0, |o| o.n_samples),
            a20.value,
            b20.value
        ),
    )
}

/// x² ∫∫ (B(λ1, λ2) - B(λ1, λ2 + θ)) for Ψ = λ² - λ, both axes mapped to (0, 1).
fn coalescence_2d(x: f64, t: f64, s: f64, theta: f64) -> f64 {
    let u = |t: f64, l: f64| l / (l + (1.0 - l) * (-t).exp());
    let du = |t: f64, l: f64| {
        let e = (-t).exp();
        let d = l + (1.0 - l) * e;
        e / (d * d)
    };
    let b = |l1: f64, l2: f64| {
        let y = l1 + u(s, l2);
        du(s, l2) * du(t, y).powi(2) * (-x * u(t, y)).exp()
    };
    let rule = gauss_legendre(20);
    let half_line = |f: &dyn Fn(f64) -> f64| {
        composite(
            |y| {
                let d = 1.0 - y;
                f(y / d) / (d * d)
            },
            0.0,
            1.0,
            48,
            &rule,
        )
    };
    x * x * half_line(&|l2| half_line(&|l1| b(l1, l2) - b(l1, l2 + theta)))
}

fn c9_coalescence() -> Verdict {
    let mech = catalog::quadratic_super();
    let ev = FlowEvaluator::new(mech.clone()).unwrap();
    let q = coalescence_quadrature(&ev, 1.0, 1.0, 1.0, 1.0).unwrap();
    let o = coalescence_2d(1.0, 1.0, 1.0, 1.0);
    let rel = ((q - o) / o).abs();
    let clusters = mc_coalescence(&mech, 1.0, 1.0, 1.0, 1.0, 20_000, Resolution::Clusters, &PathConfig::default(), 9).unwrap();
    let n = 500;
    let cfg = PathConfig {
        h: 1.0,
        ..Default::default()
    };
    let blocks = mc_coalescence(&mech, 1.0, 1.0, 1.0, 1.0, 20_000, Resolution::Blocks(n), &cfg, 10).unwrap();
    let bias = block_resolution_bias(q, n);
    let zc = (clusters.rao_blackwell - q).abs() / clusters.rao_blackwell_se;
    let zb = (blocks.rao_blackwell - (q - bias)).abs() / blocks.rao_blackwell_se;
    verdict(
        rel <= COALESCENCE_2D_REL && zc <= SE_BAND && zb <= SE_BAND,
        format!(
            "quadrature {q:.6} vs 2-D {o:.6} (rel {rel:.1e}); clusters MC {:.4}±{:.4} ({zc:.2} SE); blocks(n={n}) {:.4}±{:.4} vs q-q/n ({zb:.2} SE)",
            clusters.rao_blackwell, clusters.rao_blackwell_se, blocks.rao_blackwell, blocks.rao_blackwell_se
        ),
    )
}

fn c10_grey_limits() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    let t_values = [1.0, 5.0, 10.0];
    for (mech, theta) in [(catalog::quadratic_super(), 0.5), (catalog::fv_compound_poisson(), 1.0)] {
        let ev = FlowEvaluator::new(mech.clone()).unwrap();
        let cfg = PathConfig {
            h: 1.0,
            horizon: 10.0,
            ..Default::default()
        };
        let sim = PathSimulator::new(&mech, &cfg).unwrap();
        let rows = csbp::grey::renormalized_limit_samples(&ev, &sim, 1.0, theta, &t_values, 10_000, 10).unwrap();
        let target = (-theta).exp();
        let mut worst: f64 = 0.0;
        for row in &rows {
            let e: Vec<f64> = row.iter().map(|w| (-w).exp()).collect();
            let (m, se) = mean_se(&e);
            worst = worst.max((m - target).abs() / se);
        }
        pass &= worst <= SE_BAND;
        let p1 = phi(&ev, theta, 1.0).unwrap();
        pass &= (p1 - theta).abs() <= PHI_AT_ONE_REL * theta;
        notes.push(format!("{} martingale worst {worst:.2} SE", mech.label()));
    }
    // drift of W^θ against its defining limit
    let ev = FlowEvaluator::new(catalog::fv_compound_poisson()).unwrap();
    let d = drift_d_theta(&ev, 1.0).unwrap();
    let t: f64 = 20.0;
    let limit = (-2.0 * t).exp() * ev.u(-t, 1.0).unwrap();
    let drift_rel = ((d - limit) / d).abs();
    pass &= drift_rel <= DRIFT_LIMIT_REL;
    // φ_θ(λ) → γ
    let ev = FlowEvaluator::new(catalog::quadratic_super()).unwrap();
    assert!(matches!(regime(&ev), Ok(csbp::grey::GreyRegime::Supercritical)));
    let far = phi(&ev, 0.5, 1e8).unwrap();
    let gamma_rel = (far - 1.0).abs();
    pass &= gamma_rel <= PHI_INFINITY_REL;
    notes.push(format!(
        "phi(1)=theta; d_theta {d:.8} vs e^(-Dt)u(-t,θ) at t=20 (rel {drift_rel:.1e}); phi(1e8)={far:.6} (γ=1)"
    ));
    verdict(pass, notes.join("; "))
}

fn c11_extinction_curve() -> Verdict {
    let ev = FlowEvaluator::new(catalog::feller()).unwrap();
    let grid = [0.5, 1.0, 2.0, 4.0, 8.0];
    let cfg = PathConfig {
        h: 0.5,
        ..Default::default()
    };
    let pts = extinction_curve(&ev, 1.0, &grid, 10_000, &cfg, 11).unwrap();
    let oracle_ok = pts.iter().all(|p| (p.theoretical - (-1.0 / p.t).exp()).abs() < 1e-9);
    let worst = pts
        .iter()
        .map(|p| (p.empirical - p.theoretical).abs() / p.se)
        .fold(0.0, f64::max);
    verdict(
        oracle_ok && pts.iter().all(|p| p.pass),
        format!("{} grid points, worst {worst:.2} binomial SE", pts.len()),
    )
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn c12_determinism() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let invocations: [&[&str]; 6] = [
        &["simulate", "--catalog", "quadratic-super", "--runs", "40", "--blocks", "30"],
        &["verify", "theorem12", "--catalog", "fv-compound-poisson", "-x", "3", "--runs", "100"],
        &["verify", "coalescence", "--catalog", "quadratic-super", "--runs", "300"],
        &["verify", "extinction", "--catalog", "feller", "--runs", "300"],
        &["verify", "grey-limits", "--catalog", "fv-compound-poisson", "--runs", "200"],
        &["classify", "--catalog", "neveu", "--json"],
    ];
    let mut bad = Vec::new();
    for (i, args) in invocations.iter().enumerate() {
        let mut outputs = Vec::new();
        for (rep, threads) in [(0, "1"), (1, "1"), (2, "2")] {
            let dir = root.path().join(format!("{i}-{rep}"));
            let mut full = vec!["csbp", "--"];
            full.truncate(1);
            full.extend_from_slice(args);
            let dir_s = dir.to_str().unwrap().to_string();
            let mut owned: Vec<String> = full.iter().map(|s| s.to_string()).collect();
            owned.extend(["--seed".into(), "12".into(), "--threads".into(), threads.into(), "--out".into(), dir_s]);
            let mut out = Vec::new();
            let mut err = Vec::new();
            let code = csbp_cli::run(owned, &mut out, &mut err);
            // stdout names the output directory, which differs between repetitions
            let stdout = String::from_utf8(out).unwrap().replace(dir.to_str().unwrap(), "<out>");
            let files = if dir.exists() { snapshot(&dir) } else { Vec::new() };
            outputs.push((code, stdout, files));
        }
        if outputs[0] != outputs[1] || outputs[0] != outputs[2] || outputs[0].0 != 0 {
            bad.push(args.join(" "));
        }
    }
    verdict(
        bad.is_empty(),
        format!(
            "{} invocations x 3 runs (threads 1, 1, 2){}",
            invocations.len(),
            if bad.is_empty() {
                " byte-identical".to_string()
            } else {
                format!(" differ: {}", bad.join(" | "))
            }
        ),
    )
}

fn main() {
    // `cargo test -- --list` and similar harness probes expect no work
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("flow closed forms", c1_flow_closed_forms),
        ("semigroup and backward inverse", c2_semigroup_and_inverse),
        ("marginal laws", c3_marginal_laws),
        ("classification", c4_classification),
        ("finite-time Eve (Feller, stable)", c5_finite_time_eve),
        ("Poisson settlers on explosion", c6_quadratic_poisson_settlers),
        ("dust and Poisson settlers", c7_fv_dust_and_settlers),
        ("Eve convergence (Neveu)", c8_neveu_eve),
        ("coalescence identity", c9_coalescence),
        ("Grey limits", c10_grey_limits),
        ("extinction curve", c11_extinction_curve),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        println!(
            "{} criterion {:>2} {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
        failed += !v.pass as usize;
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
