use serde::Serialize;

use super::classify::{classify, ClassificationReport, Variation};
use super::BranchingMechanism;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Event {
    /// Absorption at 0 or infinity in finite time.
    A,
    /// Survival with `Z -> inf`.
    B,
    /// Survival with `Z -> 0`.
    C,
}

impl Event {
    pub fn label(self) -> &'static str {
        match self {
            Event::A => "A",
            Event::B => "B",
            Event::C => "C",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Outcome {
    EveFiniteTime,
    Eve,
    NoDustPoissonSettlers { mean: f64 },
    NoDustDenseSettlers,
    DustPoissonSettlers { mean: f64 },
    DustDenseSettlers,
    NoDustDense,
    EventNull,
}

impl Outcome {
    pub fn tag(&self) -> &'static str {
        match self {
            Outcome::EveFiniteTime => "eve-finite-time",
            Outcome::Eve => "eve",
            Outcome::NoDustPoissonSettlers { .. } => "no-dust-poisson-settlers",
            Outcome::NoDustDenseSettlers => "no-dust-dense-settlers",
            Outcome::DustPoissonSettlers { .. } => "dust-poisson-settlers",
            Outcome::DustDenseSettlers => "dust-dense-settlers",
            Outcome::NoDustDense => "no-dust-dense",
            Outcome::EventNull => "null",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventPrediction {
    pub event: Event,
    pub probability: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimePrediction {
    pub x: f64,
    pub events: [EventPrediction; 3],
    /// `P(ζ₀ < ∞)` and `P(ζ_∞ < ∞)`, the two parts of A.
    pub p_extinct_finite: f64,
    pub p_explode_finite: f64,
}

impl RegimePrediction {
    pub fn get(&self, e: Event) -> &EventPrediction {
        &self.events[e as usize]
    }
}

/// Outcome per event from the classification, with event probabilities.
pub fn predict_regime(mech: &BranchingMechanism, x: f64) -> Result<RegimePrediction> {
    let report = classify(mech)?;
    predict_from_report(mech, &report, x)
}

pub(crate) fn predict_from_report(
    mech: &BranchingMechanism,
    report: &ClassificationReport,
    x: f64,
) -> Result<RegimePrediction> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Precondition(format!("x must be positive, got {x}")));
    }
    let gamma = report.gamma()?;
    let p_lim_zero = if gamma.is_infinite() {
        0.0
    } else {
        (-gamma * x).exp()
    };
    let p_extinct_finite = if report.persistent { 0.0 } else { p_lim_zero };
    let p_explode_finite = if report.conservative {
        0.0
    } else {
        1.0 - p_lim_zero
    };
    let pa = p_extinct_finite + p_explode_finite;
    let pb = (1.0 - p_lim_zero - p_explode_finite).max(0.0);
    let pc = (p_lim_zero - p_extinct_finite).max(0.0);

    let a = if pa > 0.0 {
        Outcome::EveFiniteTime
    } else {
        Outcome::EventNull
    };
    let b = if pb <= 0.0 {
        Outcome::EventNull
    } else if report.psi_prime_0 == f64::NEG_INFINITY {
        Outcome::Eve
    } else if gamma.is_infinite() {
        Outcome::NoDustDenseSettlers
    } else {
        Outcome::NoDustPoissonSettlers { mean: x * gamma }
    };
    let c = if pc <= 0.0 {
        Outcome::EventNull
    } else if report.variation == Variation::Infinite {
        Outcome::Eve
    } else if report.pi_01_finite {
        Outcome::DustPoissonSettlers {
            mean: settler_mean_with_gamma(mech, report, x, gamma)?,
        }
    } else if report.xlogx_finite {
        Outcome::DustDenseSettlers
    } else {
        Outcome::NoDustDense
    };
    Ok(RegimePrediction {
        x,
        events: [
            EventPrediction {
                event: Event::A,
                probability: pa,
                outcome: a,
            },
            EventPrediction {
                event: Event::B,
                probability: pb,
                outcome: b,
            },
            EventPrediction {
                event: Event::C,
                probability: pc,
                outcome: c,
            },
        ],
        p_extinct_finite,
        p_explode_finite,
    })
}

/// Mean settler count on C for finite variation with `π((0,1)) < ∞`.
pub fn settler_mean_c(mech: &BranchingMechanism, x: f64) -> Result<f64> {
    let report = classify(mech)?;
    let gamma = report.gamma()?;
    settler_mean_with_gamma(mech, &report, x, gamma)
}

/// `(x/D) ∫ e^{-γr} π(dr)` with an explicitly supplied γ.
pub fn settler_mean_with_gamma(
    mech: &BranchingMechanism,
    report: &ClassificationReport,
    x: f64,
    gamma: f64,
) -> Result<f64> {
    let d = report
        .drift
        .ok_or_else(|| Error::Precondition("settler mean needs finite variation (D)".into()))?;
    if !report.pi_01_finite {
        return Err(Error::Precondition(
            "settler mean needs pi((0,1)) < inf".into(),
        ));
    }
    if d <= 0.0 {
        return Err(Error::Precondition(format!("settler mean needs D > 0, got {d}")));
    }
    Ok(x / d * mech.laplace_mass(gamma)?)
}
