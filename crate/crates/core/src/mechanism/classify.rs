use serde::Serialize;

use super::levy::{LevyComponent, Singularity};
use super::BranchingMechanism;
use crate::error::{Error, Result};
use crate::numerics::roots::brent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variation {
    Finite,
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Criticality {
    Sub,
    Critical,
    Super,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Analytic,
    NumericalQuadrature,
    NumericalRoot,
}

/// A predicate value, or the reason it could not be decided.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Decision<T> {
    Known(T),
    Undecidable(String),
}

impl<T: Copy> Decision<T> {
    pub fn known(&self) -> Option<T> {
        match self {
            Decision::Known(v) => Some(*v),
            Decision::Undecidable(_) => None,
        }
    }

    pub fn require(&self, field: &str) -> Result<T> {
        match self {
            Decision::Known(v) => Ok(*v),
            Decision::Undecidable(why) => Err(Error::Undecidable(format!("{field}: {why}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldProvenance {
    pub variation: Provenance,
    pub drift: Provenance,
    pub psi_prime_0: Provenance,
    pub gamma: Provenance,
    pub conservative: Provenance,
    pub persistent: Provenance,
    pub xlogx_finite: Provenance,
    pub pi_01_finite: Provenance,
    pub criticality: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub variation: Variation,
    /// `D = lim Ψ(λ)/λ`, present iff finite variation.
    pub drift: Option<f64>,
    /// `Ψ'(0+)`, possibly `-inf`.
    pub psi_prime_0: f64,
    /// Largest root of Ψ, possibly `+inf`.
    pub gamma: Decision<f64>,
    pub conservative: bool,
    pub persistent: bool,
    pub xlogx_finite: bool,
    pub pi_01_finite: bool,
    pub criticality: Criticality,
    pub provenance: FieldProvenance,
}

impl ClassificationReport {
    pub fn gamma(&self) -> Result<f64> {
        self.gamma.require("gamma")
    }

    pub fn finite_variation(&self) -> bool {
        self.variation == Variation::Finite
    }

    pub fn is_decided(&self) -> bool {
        matches!(self.gamma, Decision::Known(_))
    }
}

fn provenance_of_moment(levy: &[LevyComponent], finite: bool) -> Provenance {
    if finite && levy.iter().any(|c| !c.closed_form_moments()) {
        Provenance::NumericalQuadrature
    } else {
        Provenance::Analytic
    }
}

/// Decides every predicate from component metadata; only γ needs a numerical root.
pub fn classify(mech: &BranchingMechanism) -> Result<ClassificationReport> {
    let levy = mech.levy();
    let sing = |f: &dyn Fn(&Singularity) -> bool| {
        levy.iter()
            .filter_map(LevyComponent::singularity)
            .all(|s| f(&s))
    };
    let small_first_moment_finite = sing(&|s| s.moment_finite(1.0));
    let pi_01_finite = sing(&|s| s.moment_finite(0.0));
    // ∫ r log(1/r) r^-p (log 1/r)^-q dr converges like the q - 1 log-power
    let xlogx_finite = sing(&|s| {
        Singularity {
            p: s.p,
            q: s.q - 1.0,
        }
        .moment_finite(1.0)
    });
    let variation = if mech.beta() == 0.0 && small_first_moment_finite {
        Variation::Finite
    } else {
        Variation::Infinite
    };

    let drift = if variation == Variation::Finite {
        Some(mech.alpha() + mech.moment(1, 0.0, 1.0)?)
    } else {
        None
    };

    let large_first = mech.moment(1, 1.0, f64::INFINITY)?;
    let psi_prime_0 = if large_first.is_finite() {
        mech.alpha() - large_first
    } else {
        f64::NEG_INFINITY
    };

    let criticality = if psi_prime_0 < 0.0 {
        Criticality::Super
    } else if psi_prime_0 == 0.0 {
        Criticality::Critical
    } else {
        Criticality::Sub
    };

    // Ψ'(0+) = -inf only through power tails r^-p, 1 < p <= 2: Ψ(λ) ~ -Cλ^{p-1} for p < 2
    // (integrable 1/|Ψ| at 0) and ~ cλ log λ at p = 2 (not integrable).
    let conservative = psi_prime_0.is_finite()
        || mech.heaviest_tail().is_some_and(|p| p >= 2.0);

    // At infinity Ψ(λ) ~ βλ² if β > 0, else governed by the heaviest singularity:
    // p in (2,3] gives λ^{p-1} or λ²(log λ)^{1-q}; p = 2 gives λ(log λ)^{1-q}.
    let persistent = match variation {
        Variation::Finite => true,
        Variation::Infinite => {
            if mech.beta() > 0.0 {
                false
            } else {
                let s = mech
                    .heaviest_singularity()
                    .expect("infinite variation with beta = 0 needs a singular component");
                if s.p > 2.0 {
                    false
                } else {
                    s.q >= 0.0
                }
            }
        }
    };

    let (gamma, gamma_prov) = malthusian_root(mech, psi_prime_0, drift)?;

    let moment_prov_small = provenance_of_moment(levy, true);
    let report = ClassificationReport {
        variation,
        drift,
        psi_prime_0,
        gamma,
        conservative,
        persistent,
        xlogx_finite,
        pi_01_finite,
        criticality,
        provenance: FieldProvenance {
            variation: Provenance::Analytic,
            drift: if drift.is_some() {
                moment_prov_small
            } else {
                Provenance::Analytic
            },
            psi_prime_0: provenance_of_moment(levy, psi_prime_0.is_finite()),
            gamma: gamma_prov,
            conservative: Provenance::Analytic,
            persistent: Provenance::Analytic,
            xlogx_finite: Provenance::Analytic,
            pi_01_finite: Provenance::Analytic,
            criticality: provenance_of_moment(levy, psi_prime_0.is_finite()),
        },
    };
    debug_assert!(report.persistent || report.variation == Variation::Infinite);
    debug_assert!(report.conservative || report.psi_prime_0 == f64::NEG_INFINITY);
    Ok(report)
}

const GAMMA_SEARCH_MAX: f64 = 1e15;

fn malthusian_root(
    mech: &BranchingMechanism,
    psi_prime_0: f64,
    drift: Option<f64>,
) -> Result<(Decision<f64>, Provenance)> {
    // convex with Ψ(0) = 0: no positive root unless the slope at 0 is negative
    if psi_prime_0 >= 0.0 {
        return Ok((Decision::Known(0.0), Provenance::Analytic));
    }
    if let Some(d) = drift {
        if d <= 0.0 {
            // -Ψ is a subordinator exponent, Ψ < 0 on (0, inf)
            return Ok((Decision::Known(f64::INFINITY), Provenance::Analytic));
        }
    }
    let mut lo = 0.0;
    let mut hi = 1e-6;
    loop {
        let v = mech.psi(hi)?;
        if v > 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > GAMMA_SEARCH_MAX {
            return Ok((
                Decision::Undecidable(format!(
                    "Psi stays non-positive up to {GAMMA_SEARCH_MAX:e} and the subordinator criterion does not apply"
                )),
                Provenance::NumericalRoot,
            ));
        }
    }
    if lo == 0.0 {
        // slope at 0 is negative, so Ψ < 0 just to the right of 0
        lo = hi;
        while mech.psi(lo)? > 0.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::Root("Psi positive arbitrarily close to 0".into()));
            }
        }
    }
    let g = brent(
        |l| mech.psi(l).unwrap_or(f64::NAN),
        lo,
        hi,
        1e-15 * hi,
    )?;
    Ok((Decision::Known(g), Provenance::NumericalRoot))
}
