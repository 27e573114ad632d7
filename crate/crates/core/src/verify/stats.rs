//! Goodness-of-fit tests and the common outcome record.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

use crate::error::{Error, Result};

/// How an outcome was judged.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Judgement {
    /// Pass when `p_value >= level`.
    PValue { p_value: f64, level: f64 },
    /// Pass when `|deviation| <= tolerance`.
    Tolerance { deviation: f64, tolerance: f64 },
    /// Pass when `observed >= required` (a fraction of runs).
    Fraction { observed: f64, required: f64 },
    /// The data could not support a decision; never a pass.
    Inconclusive { reason: String },
}

impl Judgement {
    pub fn passes(&self) -> bool {
        match self {
            Judgement::PValue { p_value, level } => p_value >= level,
            Judgement::Tolerance {
                deviation,
                tolerance,
            } => deviation.abs() <= *tolerance,
            Judgement::Fraction { observed, required } => observed >= required,
            Judgement::Inconclusive { .. } => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub name: String,
    pub statistic: f64,
    pub judgement: Judgement,
    pub pass: bool,
    pub n_samples: usize,
    pub seed: u64,
    pub metadata: BTreeMap<String, String>,
}

impl TestOutcome {
    pub fn new(name: impl Into<String>, statistic: f64, judgement: Judgement, n_samples: usize, seed: u64) -> Self {
        let pass = judgement.passes();
        TestOutcome {
            name: name.into(),
            statistic,
            judgement,
            pass,
            n_samples,
            seed,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }
}

/// Chi-square test of `counts` against Poisson(`mean`), optionally conditioned to be
/// nonzero (zeros dropped, probabilities renormalized). Adjacent classes are merged until
/// each expects at least 5; the last class absorbs the tail.
pub fn poisson_gof(counts: &[u64], mean: f64, conditioned_nonzero: bool, level: f64) -> Result<TestOutcome> {
    if counts.is_empty() {
        return Err(Error::Precondition("poisson_gof needs at least one count".into()));
    }
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::Precondition(format!("Poisson mean must be positive, got {mean}")));
    }
    let data: Vec<u64> = if conditioned_nonzero {
        counts.iter().copied().filter(|&c| c > 0).collect()
    } else {
        counts.to_vec()
    };
    if data.is_empty() {
        return Err(Error::Precondition(
            "every count is zero: the conditioned law has empty support".into(),
        ));
    }
    let dist = Poisson::new(mean).map_err(|e| Error::Precondition(e.to_string()))?;
    let k0 = u64::from(conditioned_nonzero);
    let norm = if conditioned_nonzero { -(-mean).exp_m1() } else { 1.0 };
    let n = data.len() as f64;

    // (first class, expected, observed); the final class is open-ended
    let mut bins: Vec<(u64, f64, f64)> = Vec::new();
    let mut cum = 0.0;
    let mut start = k0;
    let mut acc = 0.0;
    let mut k = k0;
    loop {
        let p = dist.pmf(k) / norm;
        acc += p;
        cum += p;
        let rest = (1.0 - cum).max(0.0);
        if n * rest < 5.0 {
            bins.push((start, n * (acc + rest), 0.0));
            break;
        }
        if n * acc >= 5.0 {
            bins.push((start, n * acc, 0.0));
            start = k + 1;
            acc = 0.0;
        }
        k += 1;
    }
    // a short final class folds into its predecessor
    if bins.len() > 1 && bins.last().expect("nonempty").1 < 5.0 {
        let last = bins.pop().expect("nonempty");
        bins.last_mut().expect("nonempty").1 += last.1;
    }
    for &c in &data {
        let i = bins.partition_point(|b| b.0 <= c).saturating_sub(1);
        bins[i].2 += 1.0;
    }
    let chi2: f64 = bins.iter().map(|&(_, e, o)| (o - e).powi(2) / e).sum();
    let df = bins.len().saturating_sub(1);
    let judgement = if df == 0 {
        Judgement::Inconclusive {
            reason: "all mass in a single class after merging".into(),
        }
    } else {
        let chi = ChiSquared::new(df as f64).map_err(|e| Error::Precondition(e.to_string()))?;
        Judgement::PValue {
            p_value: chi.sf(chi2),
            level,
        }
    };
    let sample_mean = data.iter().sum::<u64>() as f64 / n;
    Ok(TestOutcome::new("poisson-gof", chi2, judgement, data.len(), 0)
        .with("mean", mean)
        .with("sample_mean", sample_mean)
        .with("classes", bins.len())
        .with("conditioned_nonzero", conditioned_nonzero))
}

/// Kolmogorov distribution tail `P(K > λ)`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value (Stephens' correction).
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<TestOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("KS needs two nonempty samples".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    let p = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
    Ok(TestOutcome::new(
        "ks-two-sample",
        d,
        Judgement::PValue { p_value: p, level },
        x.len() + y.len(),
        0,
    ))
}
