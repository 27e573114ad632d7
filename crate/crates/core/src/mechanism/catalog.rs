//! One concrete mechanism per branch of the limit theorem.

use super::levy::LevyComponent;
use super::BranchingMechanism;
use crate::numerics::special::{euler_gamma, gamma};

pub const NAMES: [&str; 9] = [
    "feller",
    "stable",
    "neveu",
    "quadratic-super",
    "fv-compound-poisson",
    "dust-dense",
    "nodust-dense",
    "subordinator",
    "fv-growth",
];

fn build(name: &str, alpha: f64, beta: f64, levy: Vec<LevyComponent>) -> BranchingMechanism {
    BranchingMechanism::new(alpha, beta, levy)
        .expect("catalog entries are valid")
        .with_name(name)
}

/// `Ψ(λ) = λ²`.
pub fn feller() -> BranchingMechanism {
    build("feller", 0.0, 1.0, vec![])
}

/// `Ψ(λ) = λ^{3/2}` from the density `r^{-5/2} / Γ(-3/2)` on `(0, inf)`.
pub fn stable() -> BranchingMechanism {
    let c = 1.0 / gamma(-1.5);
    // the closed form carries an extra λ c/(2-p) = -2cλ from the compensation
    build(
        "stable",
        2.0 * c,
        0.0,
        vec![LevyComponent::Power {
            coefficient: c,
            exponent: 2.5,
            lower: 0.0,
            upper: f64::INFINITY,
        }],
    )
}

/// `Ψ(λ) = λ log λ`. With π = r^{-2} dr on `(0, inf)`,
/// `∫(e^{-λr} - 1 + λr 1_{r<1}) r^{-2} dr = λ log λ + (γ_E - 1)λ`, so `α = 1 - γ_E`.
pub fn neveu() -> BranchingMechanism {
    build(
        "neveu",
        1.0 - euler_gamma(),
        0.0,
        vec![LevyComponent::Power {
            coefficient: 1.0,
            exponent: 2.0,
            lower: 0.0,
            upper: f64::INFINITY,
        }],
    )
}

/// `Ψ(λ) = λ² - λ`.
pub fn quadratic_super() -> BranchingMechanism {
    build("quadratic-super", -1.0, 1.0, vec![])
}

/// `Ψ(λ) = 2λ - (1 - e^{-λ})`: `D = 2`, π = δ_1.
pub fn fv_compound_poisson() -> BranchingMechanism {
    build(
        "fv-compound-poisson",
        2.0,
        0.0,
        vec![LevyComponent::Atom {
            location: 1.0,
            mass: 1.0,
        }],
    )
}

/// π(dr) = r^{-3/2} 1_{(0,1)} dr with `D = 3`, so `Ψ'(0+) = 1`.
pub fn dust_dense() -> BranchingMechanism {
    build(
        "dust-dense",
        1.0,
        0.0,
        vec![LevyComponent::Power {
            coefficient: 1.0,
            exponent: 1.5,
            lower: 0.0,
            upper: 1.0,
        }],
    )
}

/// π(dr) = r^{-2} (log 1/r)^{-2} 1_{(0,1/2)} dr with `α = 0`, hence `D = 1/log 2` and critical.
pub fn nodust_dense() -> BranchingMechanism {
    build(
        "nodust-dense",
        0.0,
        0.0,
        vec![LevyComponent::LogPower {
            coefficient: 1.0,
            power: 2.0,
            log_power: 2.0,
            upper: 0.5,
        }],
    )
}

/// `Ψ(λ) = -λ^{1/2}`: density `r^{-3/2} / (2√π)` on `(0, inf)` and `α = -1/√π`.
pub fn subordinator() -> BranchingMechanism {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    build(
        "subordinator",
        -1.0 / sqrt_pi,
        0.0,
        vec![LevyComponent::Power {
            coefficient: 0.5 / sqrt_pi,
            exponent: 1.5,
            lower: 0.0,
            upper: f64::INFINITY,
        }],
    )
}

/// `Ψ(λ) = -(1 - e^{-λ})`: `D = 0`, so γ = ∞ while `Ψ'(0+) = -1`.
pub fn fv_growth() -> BranchingMechanism {
    build(
        "fv-growth",
        0.0,
        0.0,
        vec![LevyComponent::Atom {
            location: 1.0,
            mass: 1.0,
        }],
    )
}

pub fn by_name(name: &str) -> Option<BranchingMechanism> {
    Some(match name {
        "feller" => feller(),
        "stable" => stable(),
        "neveu" => neveu(),
        "quadratic-super" => quadratic_super(),
        "fv-compound-poisson" => fv_compound_poisson(),
        "dust-dense" => dust_dense(),
        "nodust-dense" => nodust_dense(),
        "subordinator" => subordinator(),
        "fv-growth" => fv_growth(),
        _ => return None,
    })
}

pub fn all() -> Vec<BranchingMechanism> {
    NAMES.iter().map(|n| by_name(n).expect("listed")).collect()
}
