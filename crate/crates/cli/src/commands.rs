//! Subcommand bodies. Commands that write files return the text for stdout.

use std::io::Write;
use std::path::{Path, PathBuf};

use csbp::grey::{grey_limit_law, phi, regime, renormalized_limit_samples, GreyRegime};
use csbp::mechanism::{catalog, classify as classify_mech, predict_regime, ClassificationReport, Decision, Event, Outcome, RegimePrediction};
use csbp::parallel::mean_se;
use csbp::paths::{PathConfig, PathSimulator};
use csbp::population::{detect_limit, write_dump, DUMP_HEADER};
use csbp::verify::{
    block_resolution_bias, coalescence_quadrature, eve_bound_a, eve_bound_b, extinction_curve,
    mc_coalescence, simulate_runs, summarize, theorem12_suite, Judgement, Resolution, RunSummary,
    SuiteConfig,
};
use csbp::{Error, FlowEvaluator};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::output::{fmt, num, table, Emitter};
use crate::CliError;

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn out_dir(config: &ExperimentConfig, command: &str) -> PathBuf {
    PathBuf::from(config.out.clone().unwrap_or_else(|| format!("csbp-out/{command}")))
}

pub fn catalog_list(out: &mut dyn Write) -> Result<i32, CliError> {
    let mut rows = vec![vec![
        "name".to_string(),
        "variation".into(),
        "criticality".into(),
        "gamma".into(),
        "conservative".into(),
        "persistent".into(),
    ]];
    for m in catalog::all() {
        let r = classify_mech(&m)?;
        rows.push(vec![
            m.label(),
            format!("{:?}", r.variation),
            format!("{:?}", r.criticality),
            decision(&r.gamma),
            r.conservative.to_string(),
            r.persistent.to_string(),
        ]);
    }
    emit(out, &table(&rows))?;
    Ok(0)
}

fn decision(d: &Decision<f64>) -> String {
    match d {
        Decision::Known(v) => fmt(*v),
        Decision::Undecidable(why) => format!("undecidable ({why})"),
    }
}

fn outcome_json(o: &Outcome) -> Value {
    match o {
        Outcome::NoDustPoissonSettlers { mean } | Outcome::DustPoissonSettlers { mean } => {
            json!({ "tag": o.tag(), "mean": num(*mean) })
        }
        _ => json!({ "tag": o.tag() }),
    }
}

fn outcome_text(o: &Outcome) -> String {
    match o {
        Outcome::NoDustPoissonSettlers { mean } | Outcome::DustPoissonSettlers { mean } => {
            format!("{} (mean {})", o.tag(), fmt(*mean))
        }
        _ => o.tag().to_string(),
    }
}

fn report_json(r: &ClassificationReport) -> Value {
    let gamma = match &r.gamma {
        Decision::Known(v) => num(*v),
        Decision::Undecidable(why) => json!({ "undecidable": why }),
    };
    json!({
        "variation": format!("{:?}", r.variation),
        "drift": r.drift.map_or(Value::Null, num),
        "psi_prime_0": num(r.psi_prime_0),
        "gamma": gamma,
        "conservative": r.conservative,
        "persistent": r.persistent,
        "xlogx_finite": r.xlogx_finite,
        "pi_01_finite": r.pi_01_finite,
        "criticality": format!("{:?}", r.criticality),
        "provenance": serde_json::to_value(&r.provenance).expect("provenance serializes"),
    })
}

fn prediction_json(p: &RegimePrediction) -> Value {
    json!({
        "x": num(p.x),
        "p_extinct_finite": num(p.p_extinct_finite),
        "p_explode_finite": num(p.p_explode_finite),
        "events": p.events.iter().map(|e| json!({
            "event": e.event.label(),
            "probability": num(e.probability),
            "outcome": outcome_json(&e.outcome),
        })).collect::<Vec<_>>(),
    })
}

pub fn classify(config: &ExperimentConfig, as_json: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let mech = config.mechanism()?;
    let report = classify_mech(&mech)?;
    let prediction = if report.is_decided() {
        Some(predict_regime(&mech, config.x)?)
    } else {
        None
    };
    if as_json {
        let doc = json!({
            "mechanism": mech.label(),
            "report": report_json(&report),
            "prediction": prediction.as_ref().map_or(Value::Null, prediction_json),
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("json values serialize");
        text.push('\n');
        emit(out, &text)?;
    } else {
        let p = &report.provenance;
        let row = |k: &str, v: String, prov: csbp::mechanism::Provenance| vec![k.to_string(), v, format!("{prov:?}")];
        let rows = vec![
            vec!["field".to_string(), "value".into(), "provenance".into()],
            row("variation", format!("{:?}", report.variation), p.variation),
            row("drift", report.drift.map_or("-".into(), fmt), p.drift),
            row("psi_prime_0", fmt(report.psi_prime_0), p.psi_prime_0),
            row("gamma", decision(&report.gamma), p.gamma),
            row("conservative", report.conservative.to_string(), p.conservative),
            row("persistent", report.persistent.to_string(), p.persistent),
            row("xlogx_finite", report.xlogx_finite.to_string(), p.xlogx_finite),
            row("pi_01_finite", report.pi_01_finite.to_string(), p.pi_01_finite),
            row("criticality", format!("{:?}", report.criticality), p.criticality),
        ];
        let mut text = format!("mechanism: {}\n", mech.label());
        text.push_str(&table(&rows));
        if let Some(pred) = &prediction {
            text.push_str(&format!("\nregime at x = {}\n", fmt(config.x)));
            let mut rows = vec![vec!["event".to_string(), "probability".into(), "outcome".into()]];
            for e in &pred.events {
                rows.push(vec![e.event.label().into(), fmt(e.probability), outcome_text(&e.outcome)]);
            }
            text.push_str(&table(&rows));
        }
        emit(out, &text)?;
    }
    if let Decision::Undecidable(why) = &report.gamma {
        return Err(CliError::Core(Error::Undecidable(format!("gamma: {why}"))));
    }
    Ok(0)
}

pub fn flow(config: &ExperimentConfig, t: f64, lambda: f64, out: &mut dyn Write) -> Result<i32, CliError> {
    let ev = FlowEvaluator::new(config.mechanism()?)?;
    let v = match ev.u_value(t, lambda) {
        Ok(v) => v,
        Err(Error::BackwardDomain { t, lambda, kappa, v }) => {
            let s = fmt(t.abs());
            return Err(CliError::Core(Error::Precondition(format!(
                "u({}, {}) is undefined: the backward flow needs kappa({s}) < lambda < v({s}), here ({}, {})",
                fmt(-t.abs()),
                fmt(lambda),
                fmt(kappa),
                fmt(v)
            ))));
        }
        Err(e) => return Err(e.into()),
    };
    let mut text = format!("u({}, {}) = {}\n", fmt(t), fmt(lambda), fmt(v.value));
    text.push_str(&format!(
        "tolerance: relative {:e} (quadrature), {:e} (root)\n",
        ev.quad_tol(),
        ev.root_tol()
    ));
    if v.saturated {
        text.push_str("saturated: the flow left the representable range; the value is a bound\n");
    }
    emit(out, &text)?;
    Ok(0)
}

/// Whether one run's limit structure agrees with the outcome predicted for its event.
fn matches_outcome(r: &RunSummary, outcome: Outcome, suite: &SuiteConfig) -> bool {
    let eta = suite.thresholds.eta;
    let dust_present = r.dust_fraction > suite.dust_level;
    let growing = r.by_floor.windows(2).all(|w| w[1] > w[0]);
    match outcome {
        Outcome::EveFiniteTime => r.eve_finite_time,
        Outcome::Eve => r.max_frequency >= 1.0 - eta,
        Outcome::NoDustPoissonSettlers { .. } => !dust_present && !r.eve_finite_time,
        Outcome::DustPoissonSettlers { .. } => dust_present,
        Outcome::NoDustDenseSettlers | Outcome::NoDustDense => !dust_present && growing,
        Outcome::DustDenseSettlers => dust_present && growing,
        Outcome::EventNull => false,
    }
}

pub fn simulate(config: &ExperimentConfig) -> Result<String, CliError> {
    let mech = config.mechanism()?;
    let suite = config.suite();
    let prediction = predict_regime(&mech, config.x)?;
    let open: Vec<Event> = [Event::B, Event::C]
        .into_iter()
        .filter(|&e| prediction.get(e).probability > 0.0)
        .collect();
    let only = if open.len() == 1 { Some(open[0]) } else { None };
    let trajectories = simulate_runs(&mech, config.x, &suite)?;
    let summaries: Vec<RunSummary> = trajectories.iter().map(|t| summarize(t, &suite, only)).collect();

    let mut em = Emitter::new(&out_dir(config, "simulate"), config)?;
    em.csv_with("trajectories.csv", DUMP_HEADER, |w| {
        for (i, t) in trajectories.iter().enumerate() {
            write_dump(w, i as u64, t)?;
        }
        Ok(())
    })?;

    let mut rows = Vec::new();
    let mut matched = 0usize;
    let mut by_event = [0usize; 3];
    for (i, (t, r)) in trajectories.iter().zip(&summaries).enumerate() {
        let report = detect_limit(t, &suite.thresholds);
        let ok = r
            .event
            .map(|e| matches_outcome(r, prediction.get(e).outcome, &suite))
            .unwrap_or(false);
        matched += ok as usize;
        if let Some(e) = r.event {
            by_event[e as usize] += 1;
        }
        let settlers: Vec<String> = report
            .settlers
            .iter()
            .map(|(loc, f)| format!("{}:{}", fmt(*loc), fmt(*f)))
            .collect();
        rows.push(vec![
            i.to_string(),
            r.event.map_or("-".into(), |e| e.label().to_string()),
            r.event
                .map_or("-".into(), |e| prediction.get(e).outcome.tag().to_string()),
            ok.to_string(),
            report.eve_finite_time.to_string(),
            fmt(report.max_frequency),
            report.settler_count().to_string(),
            fmt(r.dust_fraction),
            fmt(report.residual),
            fmt(r.log_total),
            settlers.join(" "),
        ]);
    }
    em.csv(
        "settlers.csv",
        &[
            "run",
            "event",
            "predicted_outcome",
            "matches",
            "eve_finite_time",
            "max_frequency",
            "settlers",
            "dust_fraction",
            "residual",
            "log_total",
            "atoms",
        ],
        &rows,
    )?;

    let n = summaries.len();
    let match_fraction = matched as f64 / n as f64;
    let pass = match_fraction >= config.pass_fraction;
    let events: Vec<Value> = prediction
        .events
        .iter()
        .map(|e| {
            json!({
                "event": e.event.label(),
                "predicted_probability": num(e.probability),
                "observed_probability": num(by_event[e.event as usize] as f64 / n as f64),
                "outcome": outcome_json(&e.outcome),
            })
        })
        .collect();
    em.json(
        "summary.json",
        json!({
            "command": "simulate",
            "mechanism": mech.label(),
            "x": num(config.x),
            "runs": n,
            "undetermined_runs": summaries.iter().filter(|r| r.event.is_none()).count(),
            "matched_runs": matched,
            "match_fraction": num(match_fraction),
            "pass_fraction": num(config.pass_fraction),
            "pass": pass,
            "events": events,
            "thresholds": { "floor": num(config.floor), "eta": num(config.eta), "floors": config.floors.iter().map(|&f| num(f)).collect::<Vec<_>>() },
        }),
    )?;
    em.script("plot.py", PLOT_SIMULATE)?;
    Ok(format!(
        "{}: {n} runs, {matched} match the predicted outcome ({}), {}\nwrote {} in {}\n",
        mech.label(),
        fmt(match_fraction),
        if pass { "PASS" } else { "FAIL" },
        em.written().join(", "),
        em.dir().display()
    ))
}

pub fn verify(suite: &str, config: &ExperimentConfig) -> Result<String, CliError> {
    let mech = config.mechanism()?;
    let mut em = Emitter::new(&out_dir(config, suite), config)?;
    let text = match suite {
        "theorem12" => verify_theorem12(config, &mech, &mut em)?,
        "coalescence" => verify_coalescence(config, &mech, &mut em)?,
        "extinction" => verify_extinction(config, &mech, &mut em)?,
        "grey-limits" => verify_grey(config, &mech, &mut em)?,
        other => unreachable!("suite {other} was checked by the caller"),
    };
    Ok(format!(
        "{text}wrote {} in {}\n",
        em.written().join(", "),
        em.dir().display()
    ))
}

fn judgement_text(j: &Judgement) -> String {
    match j {
        Judgement::PValue { p_value, level } => format!("p={} level={}", fmt(*p_value), fmt(*level)),
        Judgement::Tolerance {
            deviation,
            tolerance,
        } => format!("dev={} tol={}", fmt(*deviation), fmt(*tolerance)),
        Judgement::Fraction { observed, required } => {
            format!("observed={} required={}", fmt(*observed), fmt(*required))
        }
        Judgement::Inconclusive { reason } => format!("inconclusive: {reason}"),
    }
}

fn pass_word(p: bool) -> &'static str {
    if p {
        "PASS"
    } else {
        "FAIL"
    }
}

fn verify_theorem12(
    config: &ExperimentConfig,
    mech: &csbp::mechanism::BranchingMechanism,
    em: &mut Emitter,
) -> Result<String, CliError> {
    let outcomes = theorem12_suite(mech, config.x, &config.suite())?;
    let meta = |o: &csbp::verify::TestOutcome, k: &str| o.metadata.get(k).cloned().unwrap_or_default();
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| {
            vec![
                o.name.clone(),
                meta(o, "event"),
                meta(o, "outcome"),
                fmt(o.statistic),
                o.pass.to_string(),
                o.n_samples.to_string(),
                meta(o, "predicted_probability"),
                meta(o, "observed_probability"),
                format!("\"{}\"", judgement_text(&o.judgement).replace('"', "'")),
            ]
        })
        .collect();
    em.csv(
        "results.csv",
        &[
            "test",
            "event",
            "outcome",
            "statistic",
            "pass",
            "n_samples",
            "predicted_probability",
            "observed_probability",
            "judgement",
        ],
        &rows,
    )?;
    let all_pass = outcomes.iter().all(|o| o.pass);
    em.json(
        "summary.json",
        json!({
            "suite": "theorem12",
            "mechanism": mech.label(),
            "x": num(config.x),
            "all_pass": all_pass,
            "outcomes": outcomes.iter().map(|o| json!({
                "name": o.name,
                "statistic": num(o.statistic),
                "pass": o.pass,
                "n_samples": o.n_samples,
                "judgement": judgement_text(&o.judgement),
                "metadata": o.metadata,
            })).collect::<Vec<_>>(),
        }),
    )?;
    em.script("plot.py", PLOT_THEOREM12)?;
    let mut table_rows = vec![vec!["test".to_string(), "event".into(), "outcome".into(), "result".into(), "detail".into()]];
    for o in &outcomes {
        table_rows.push(vec![
            o.name.clone(),
            meta(o, "event"),
            meta(o, "outcome"),
            pass_word(o.pass).into(),
            judgement_text(&o.judgement),
        ]);
    }
    Ok(table(&table_rows))
}

fn verify_coalescence(
    config: &ExperimentConfig,
    mech: &csbp::mechanism::BranchingMechanism,
    em: &mut Emitter,
) -> Result<String, CliError> {
    let p = &config.coalescence;
    let ev = FlowEvaluator::new(mech.clone())?;
    let q = coalescence_quadrature(&ev, config.x, p.t, p.s, p.theta)?;
    let quadratic = mech.levy().is_empty() && mech.beta() > 0.0;
    let resolution = if quadratic {
        Resolution::Clusters
    } else {
        Resolution::Blocks(config.blocks)
    };
    // the block engine needs t on its grid
    let steps = (p.t / config.h).ceil().max(1.0);
    let cfg = PathConfig {
        h: p.t / steps,
        ..config.path()
    };
    let mc = mc_coalescence(mech, config.x, p.t, p.s, p.theta, config.runs, resolution, &cfg, config.seed)?;
    let bias = match resolution {
        Resolution::Clusters => 0.0,
        Resolution::Blocks(n) => block_resolution_bias(q, n),
    };
    let target = q - bias;
    let pass_mean = (mc.mean - target).abs() <= 3.0 * mc.se;
    let pass_rb = (mc.rao_blackwell - target).abs() <= 3.0 * mc.rao_blackwell_se;
    let rows = vec![
        vec!["quadrature".to_string(), fmt(q), "0".into(), fmt(q), "true".into()],
        vec!["mc".into(), fmt(mc.mean), fmt(mc.se), fmt(target), pass_mean.to_string()],
        vec![
            "mc-rao-blackwell".into(),
            fmt(mc.rao_blackwell),
            fmt(mc.rao_blackwell_se),
            fmt(target),
            pass_rb.to_string(),
        ],
    ];
    em.csv("results.csv", &["estimator", "value", "se", "target", "pass"], &rows)?;

    let cell = |r: csbp::Result<csbp::verify::CoalescenceBound>| match r {
        Ok(b) => (fmt(b.value), b.saturated.to_string()),
        Err(_) => ("NaN".to_string(), "false".to_string()),
    };
    let mut bound_rows = Vec::new();
    for &t in &p.bound_times {
        let (a, a_sat) = cell(eve_bound_a(&ev, config.x, t));
        let (b, b_sat) = cell(eve_bound_b(&ev, config.x, t));
        bound_rows.push(vec![fmt(t), a, a_sat, b, b_sat]);
    }
    em.csv("bounds.csv", &["t", "A", "A_saturated", "B", "B_saturated"], &bound_rows)?;
    let resolution_text = match resolution {
        Resolution::Clusters => "clusters".to_string(),
        Resolution::Blocks(n) => format!("blocks({n})"),
    };
    em.json(
        "summary.json",
        json!({
            "suite": "coalescence",
            "mechanism": mech.label(),
            "x": num(config.x),
            "t": num(p.t),
            "s": num(p.s),
            "theta": num(p.theta),
            "quadrature": num(q),
            "resolution": resolution_text,
            "resolution_bias": num(bias),
            "mc": { "mean": num(mc.mean), "se": num(mc.se), "pass": pass_mean },
            "mc_rao_blackwell": { "mean": num(mc.rao_blackwell), "se": num(mc.rao_blackwell_se), "pass": pass_rb },
            "runs": mc.n_runs,
            "all_pass": pass_mean && pass_rb,
        }),
    )?;
    em.script("plot.py", PLOT_COALESCENCE)?;
    let mut rows = vec![vec!["estimator".to_string(), "value".into(), "se".into(), "result".into()]];
    rows.push(vec!["quadrature".into(), fmt(q), "-".into(), "-".into()]);
    rows.push(vec!["mc".into(), fmt(mc.mean), fmt(mc.se), pass_word(pass_mean).into()]);
    rows.push(vec![
        "mc-rao-blackwell".into(),
        fmt(mc.rao_blackwell),
        fmt(mc.rao_blackwell_se),
        pass_word(pass_rb).into(),
    ]);
    Ok(format!("resolution {resolution_text}, bias {}\n{}", fmt(bias), table(&rows)))
}

fn verify_extinction(
    config: &ExperimentConfig,
    mech: &csbp::mechanism::BranchingMechanism,
    em: &mut Emitter,
) -> Result<String, CliError> {
    let ev = FlowEvaluator::new(mech.clone())?;
    let points = extinction_curve(&ev, config.x, &config.t_grid, config.runs, &config.path(), config.seed)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                fmt(p.t),
                fmt(p.empirical),
                fmt(p.theoretical),
                fmt(p.se),
                p.pass.to_string(),
            ]
        })
        .collect();
    em.csv("results.csv", &["t", "empirical", "theoretical", "se", "pass"], &rows)?;
    let all_pass = points.iter().all(|p| p.pass);
    em.json(
        "summary.json",
        json!({
            "suite": "extinction",
            "mechanism": mech.label(),
            "x": num(config.x),
            "runs": config.runs,
            "band": "3 binomial standard errors",
            "all_pass": all_pass,
            "points": points.len(),
        }),
    )?;
    em.script("plot.py", PLOT_EXTINCTION)?;
    let mut t = vec![vec!["t".to_string(), "empirical".into(), "theoretical".into(), "se".into(), "result".into()]];
    for p in &points {
        t.push(vec![fmt(p.t), fmt(p.empirical), fmt(p.theoretical), fmt(p.se), pass_word(p.pass).into()]);
    }
    Ok(table(&t))
}

fn verify_grey(
    config: &ExperimentConfig,
    mech: &csbp::mechanism::BranchingMechanism,
    em: &mut Emitter,
) -> Result<String, CliError> {
    let ev = FlowEvaluator::new(mech.clone())?;
    let reg = regime(&ev)?;
    let theta = config.grey.theta.unwrap_or(match reg {
        GreyRegime::Supercritical => ev.gamma() / 2.0,
        GreyRegime::FiniteVariationSubcritical => 1.0,
    });
    let law = grey_limit_law(&ev, theta)?;
    let mut t_values = config.grey.t_values.clone();
    t_values.sort_by(f64::total_cmp);
    t_values.dedup();
    let horizon = t_values.last().copied().unwrap_or(1.0);
    let cfg = PathConfig {
        horizon,
        h: config.h.min(horizon),
        ..config.path()
    };
    let sim = PathSimulator::new(mech, &cfg)?;
    let samples = renormalized_limit_samples(&ev, &sim, config.x, theta, &t_values, config.runs, config.seed)?;
    let target = (-config.x * theta).exp();
    let mut rows = Vec::new();
    let mut all_pass = true;
    for (&t, row) in t_values.iter().zip(&samples) {
        let e: Vec<f64> = row.iter().map(|w| (-w).exp()).collect();
        let (m, se) = mean_se(&e);
        let pass = (m - target).abs() <= 3.0 * se;
        all_pass &= pass;
        rows.push(vec!["martingale".to_string(), fmt(t), fmt(m), fmt(target), fmt(se), pass.to_string()]);
    }
    let phi1 = phi(&ev, theta, 1.0)?;
    let phi_pass = (phi1 - theta).abs() <= 1e-9 * theta;
    all_pass &= phi_pass;
    rows.push(vec!["phi-at-one".into(), "-".into(), fmt(phi1), fmt(theta), "0".into(), phi_pass.to_string()]);
    let mut curve = Vec::new();
    for k in -4..=8 {
        let l = 10f64.powi(k);
        let v = phi(&ev, theta, l).map(fmt).unwrap_or_else(|_| "NaN".into());
        curve.push(vec![fmt(l), v]);
    }
    em.csv("results.csv", &["check", "t", "value", "target", "se", "pass"], &rows)?;
    em.csv("phi.csv", &["lambda", "phi"], &curve)?;
    em.json(
        "summary.json",
        json!({
            "suite": "grey-limits",
            "mechanism": mech.label(),
            "x": num(config.x),
            "theta": num(theta),
            "regime": format!("{reg:?}"),
            "d_theta": num(law.d_theta),
            "total_jump_mass": num(law.total_jump_mass),
            "runs": config.runs,
            "all_pass": all_pass,
        }),
    )?;
    em.script("plot.py", PLOT_GREY)?;
    let mut t = vec![vec!["check".to_string(), "t".into(), "value".into(), "target".into(), "se".into(), "result".into()]];
    for r in &rows {
        t.push(vec![
            r[0].clone(),
            r[1].clone(),
            r[2].clone(),
            r[3].clone(),
            r[4].clone(),
            pass_word(r[5] == "true").into(),
        ]);
    }
    Ok(format!(
        "theta {}, regime {reg:?}, d_theta {}, total jump mass {}\n{}",
        fmt(theta),
        fmt(law.d_theta),
        fmt(law.total_jump_mass),
        table(&t)
    ))
}

const PLOT_SIMULATE: &str = r##"
rows = read("settlers.csv")
counts = [int(r["settlers"]) for r in rows]
dust = col(rows, "dust_fraction")
top = col(rows, "max_frequency")

fig, ax = plt.subplots(1, 3, figsize=(13, 4))
ax[0].hist(counts, bins=range(0, max(counts) + 2), align="left")
ax[0].set_xlabel("settlers per run")
ax[1].hist(top, bins=30)
ax[1].set_xlabel("largest terminal frequency")
ax[2].hist(dust, bins=30)
ax[2].set_xlabel("terminal dust fraction")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "simulate.pdf"))
"##;

const PLOT_THEOREM12: &str = r##"
rows = read("results.csv")
labels = [r["event"] + ":" + r["test"] for r in rows]
stat = col(rows, "statistic")
colors = ["tab:green" if r["pass"] == "true" else "tab:red" for r in rows]

fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(rows)), 4))
ax.bar(range(len(rows)), stat, color=colors)
ax.set_xticks(range(len(rows)))
ax.set_xticklabels(labels, rotation=30, ha="right")
ax.set_ylabel("statistic")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "theorem12.pdf"))
"##;

const PLOT_COALESCENCE: &str = r##"
rows = {r["estimator"]: r for r in read("results.csv")}
bounds = read("bounds.csv")

fig, ax = plt.subplots(1, 2, figsize=(10, 4))
q = float(rows["quadrature"]["value"])
target = float(rows["mc"]["target"])
ax[0].axhline(q, color="k", label="quadrature")
ax[0].axhline(target, color="k", ls=":", label="quadrature - resolution bias")
for i, name in enumerate(["mc", "mc-rao-blackwell"]):
    r = rows[name]
    ax[0].errorbar([i], [float(r["value"])], yerr=[3 * float(r["se"])], fmt="o", label=name)
ax[0].set_xticks([0, 1])
ax[0].set_xticklabels(["sampled", "Rao-Blackwell"])
ax[0].legend()
t = col(bounds, "t")
ax[1].semilogy(t, col(bounds, "A"), "o-", label="A(t)")
ax[1].semilogy(t, col(bounds, "B"), "s-", label="B(t)")
ax[1].set_xlabel("t")
ax[1].legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "coalescence.pdf"))
"##;

const PLOT_EXTINCTION: &str = r##"
rows = read("results.csv")
t = col(rows, "t")
emp = col(rows, "empirical")
th = col(rows, "theoretical")
se = col(rows, "se")

fig, ax = plt.subplots(figsize=(5, 4))
ax.plot(t, th, "k-", label="exp(-x v(t))")
ax.fill_between(t, [a - 3 * s for a, s in zip(th, se)], [a + 3 * s for a, s in zip(th, se)], alpha=0.3)
ax.plot(t, emp, "o", label="empirical")
ax.set_xlabel("t")
ax.set_ylabel("P(extinct by t)")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "extinction.pdf"))
"##;

const PLOT_GREY: &str = r##"
rows = [r for r in read("results.csv") if r["check"] == "martingale"]
curve = [r for r in read("phi.csv") if r["phi"] != "NaN"]

fig, ax = plt.subplots(1, 2, figsize=(10, 4))
t = col(rows, "t")
ax[0].errorbar(t, col(rows, "value"), yerr=[3 * s for s in col(rows, "se")], fmt="o")
ax[0].axhline(float(rows[0]["target"]), color="k")
ax[0].set_xlabel("t")
ax[0].set_ylabel("mean of exp(-u(-t, theta) Z_t)")
ax[1].semilogx(col(curve, "lambda"), col(curve, "phi"), "o-")
ax[1].set_xlabel("lambda")
ax[1].set_ylabel("phi_theta(lambda)")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "grey.pdf"))
"##;
