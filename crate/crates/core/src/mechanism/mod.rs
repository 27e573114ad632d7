//! Branching mechanisms Ψ and the predicates that drive the limit theorem.

pub mod catalog;
mod classify;
pub mod levy;
mod regime;

use serde::{Deserialize, Serialize};

pub use classify::{
    classify, ClassificationReport, Criticality, Decision, FieldProvenance, Provenance, Variation,
};
pub use levy::{LevyComponent, Singularity, Tail};
pub use regime::{predict_regime, settler_mean_c, settler_mean_with_gamma, Event, EventPrediction, Outcome, RegimePrediction};

use crate::error::{Error, Result};

/// `Ψ(λ) = αλ + βλ² + ∫(e^{-λr} - 1 + λr 1_{r<1}) π(dr)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MechanismSpec", into = "MechanismSpec")]
pub struct BranchingMechanism {
    alpha: f64,
    beta: f64,
    levy: Vec<LevyComponent>,
    name: Option<String>,
}

/// Unvalidated serialized form of a mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default, rename = "component")]
    pub components: Vec<LevyComponent>,
}

impl TryFrom<MechanismSpec> for BranchingMechanism {
    type Error = Error;
    fn try_from(s: MechanismSpec) -> Result<Self> {
        let m = BranchingMechanism::new(s.alpha, s.beta, s.components)?;
        Ok(match s.name {
            Some(n) => m.with_name(n),
            None => m,
        })
    }
}

impl From<BranchingMechanism> for MechanismSpec {
    fn from(m: BranchingMechanism) -> Self {
        MechanismSpec {
            name: m.name,
            alpha: m.alpha,
            beta: m.beta,
            components: m.levy,
        }
    }
}

impl BranchingMechanism {
    pub fn new(alpha: f64, beta: f64, levy: Vec<LevyComponent>) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidMechanism(format!("alpha must be finite, got {alpha}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidMechanism(format!(
                "beta must be finite and non-negative, got {beta}"
            )));
        }
        for (i, c) in levy.iter().enumerate() {
            c.validate().map_err(|e| match e {
                Error::InvalidMechanism(m) => Error::InvalidMechanism(format!("component {i}: {m}")),
                other => other,
            })?;
        }
        if beta == 0.0 && levy.is_empty() {
            return Err(Error::InvalidMechanism(
                "mechanism is linear: need beta > 0 or a non-zero Levy measure".into(),
            ));
        }
        Ok(BranchingMechanism {
            alpha,
            beta,
            levy,
            name: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn levy(&self) -> &[LevyComponent] {
        &self.levy
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "inline".into())
    }

    /// `Ψ(λ)`, exactly 0 at `λ = 0`.
    pub fn psi(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::Precondition(format!("Psi needs lambda >= 0, got {lambda}")));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        if lambda.is_infinite() {
            return Err(Error::Precondition("Psi at infinity".into()));
        }
        let mut s = self.alpha * lambda + self.beta * lambda * lambda;
        for c in &self.levy {
            s += c.psi(lambda)?;
        }
        Ok(s)
    }

    /// Ψ evaluated with every density component integrated numerically.
    pub fn psi_quadrature(&self, lambda: f64) -> Result<f64> {
        let mut s = self.alpha * lambda + self.beta * lambda * lambda;
        for c in &self.levy {
            s += c.psi_quadrature(lambda)?;
        }
        Ok(s)
    }

    /// `∫_{[lo,hi)} r^k π(dr)` summed over components.
    pub fn moment(&self, k: i32, lo: f64, hi: f64) -> Result<f64> {
        let mut s = 0.0;
        for c in &self.levy {
            s += c.moment(k, lo, hi)?;
        }
        Ok(s)
    }

    /// `π([lo, inf))`.
    pub fn mass_above(&self, lo: f64) -> Result<f64> {
        self.moment(0, lo, f64::INFINITY)
    }

    /// `∫ e^{-g r} π(dr)`.
    pub fn laplace_mass(&self, g: f64) -> Result<f64> {
        let mut s = 0.0;
        for c in &self.levy {
            s += c.laplace_mass(g)?;
        }
        Ok(s)
    }

    /// `∫ (1 - e^{-λr}) π(dr)`, so that `Ψ(λ) = Dλ - jump_transform(λ)` under finite variation.
    pub fn jump_transform(&self, lambda: f64) -> Result<f64> {
        let mut s = 0.0;
        for c in &self.levy {
            s += c.jump_transform(lambda)?;
        }
        Ok(s)
    }

    /// Heaviest singularity of π at `0+` among components touching 0.
    pub fn heaviest_singularity(&self) -> Option<Singularity> {
        let mut best: Option<Singularity> = None;
        for c in &self.levy {
            if let Some(s) = c.singularity() {
                if best.is_none_or(|b| s.heavier_than(&b)) {
                    best = Some(s);
                }
            }
        }
        best
    }

    /// Smallest power exponent among components reaching infinity, if any.
    pub fn heaviest_tail(&self) -> Option<f64> {
        self.levy
            .iter()
            .filter_map(|c| match c.tail() {
                Tail::Power(p) => Some(p),
                _ => None,
            })
            .min_by(f64::total_cmp)
    }

    /// Natural time scale at mass `z`: `min(|λ/Ψ(λ)|, 1/|Ψ'(λ)|)` at `λ = 1/z`. The
    /// derivative term keeps the scale finite where Ψ changes sign.
    pub fn time_scale(&self, z: f64) -> Result<f64> {
        let l = 1.0 / z;
        let p = self.psi(l)?;
        let h = 1e-4;
        let dp = (self.psi(l * (1.0 + h))? - self.psi(l * (1.0 - h))?) / (2.0 * h * l);
        let a = if p == 0.0 { f64::INFINITY } else { (l / p).abs() };
        let b = if dp == 0.0 { f64::INFINITY } else { 1.0 / dp.abs() };
        Ok(a.min(b))
    }
}
