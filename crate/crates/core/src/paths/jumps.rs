//! Sampling jumps of π above a cutoff, and Lévy increments built from them.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::mechanism::{BranchingMechanism, LevyComponent};

const LOG_POWER_PIECES: usize = 64;

#[derive(Debug, Clone)]
enum Sampler {
    Atom(f64),
    Power { p: f64, a: f64, b: f64 },
    /// Envelope pieces over `y = log(1/r)`: `(cumulative weight, y0, y1, bound of y^-q)`.
    LogPower {
        p: f64,
        q: f64,
        pieces: Vec<(f64, f64, f64, f64)>,
    },
    Exponential { rate: f64, lo: f64 },
}

/// Jumps of π restricted to `[δ, ∞)`.
#[derive(Debug, Clone)]
pub struct JumpTable {
    delta: f64,
    parts: Vec<(f64, Sampler)>,
    rate: f64,
}

fn truncated_exp_sample<R: Rng + ?Sized>(k: f64, y0: f64, y1: f64, rng: &mut R) -> f64 {
    // density ∝ e^{k y} on [y0, y1]
    let u: f64 = rng.random();
    if k.abs() * (y1 - y0) < 1e-12 {
        return y0 + u * (y1 - y0);
    }
    let span = k * (y1 - y0);
    // y0 + log(1 + u (e^{span} - 1)) / k, arranged so the exponent never overflows
    if k > 0.0 {
        y1 + (u + (1.0 - u) * (-span).exp()).ln() / k
    } else {
        y0 + (1.0 - u + u * span.exp()).ln() / k
    }
}

fn exp_integral(k: f64, y0: f64, y1: f64) -> f64 {
    if k.abs() * (y1 - y0) < 1e-12 {
        return (y1 - y0) * (k * y0).exp();
    }
    ((k * y1).exp() - (k * y0).exp()) / k
}

impl JumpTable {
    pub fn new(mech: &BranchingMechanism, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Precondition(format!("jump cutoff must be positive, got {delta}")));
        }
        let mut parts = Vec::new();
        let mut rate = 0.0;
        for c in mech.levy() {
            let mass = c.mass_above(delta)?;
            if !(mass > 0.0) {
                continue;
            }
            if !mass.is_finite() {
                return Err(Error::InvalidMechanism(format!(
                    "{} component has infinite mass above {delta}",
                    c.kind()
                )));
            }
            let sampler = match *c {
                LevyComponent::Atom { location, .. } => Sampler::Atom(location),
                LevyComponent::Power {
                    exponent,
                    lower,
                    upper,
                    ..
                } => Sampler::Power {
                    p: exponent,
                    a: lower.max(delta),
                    b: upper,
                },
                LevyComponent::LogPower {
                    power,
                    log_power,
                    upper,
                    ..
                } => {
                    let y_lo = (1.0 / upper).ln();
                    let y_hi = (1.0 / delta).ln();
                    let k = power - 1.0;
                    let mut pieces = Vec::with_capacity(LOG_POWER_PIECES);
                    let mut cum = 0.0;
                    for i in 0..LOG_POWER_PIECES {
                        let y0 = y_lo + (y_hi - y_lo) * i as f64 / LOG_POWER_PIECES as f64;
                        let y1 = y_lo + (y_hi - y_lo) * (i + 1) as f64 / LOG_POWER_PIECES as f64;
                        let bound = y0.powf(-log_power).max(y1.powf(-log_power));
                        cum += bound * exp_integral(k, y0, y1);
                        pieces.push((cum, y0, y1, bound));
                    }
                    Sampler::LogPower {
                        p: power,
                        q: log_power,
                        pieces,
                    }
                }
                LevyComponent::Exponential { rate, .. } => Sampler::Exponential { rate, lo: delta },
            };
            rate += mass;
            parts.push((rate, sampler));
        }
        Ok(JumpTable { delta, parts, rate })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `π([δ, ∞))`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let target = rng.random::<f64>() * self.rate;
        let idx = self
            .parts
            .iter()
            .position(|(c, _)| target < *c)
            .unwrap_or(self.parts.len() - 1);
        match &self.parts[idx].1 {
            Sampler::Atom(r) => *r,
            &Sampler::Power { p, a, b } => {
                let u: f64 = rng.random();
                if p == 1.0 {
                    a * (b / a).powf(u)
                } else {
                    let s = 1.0 - p;
                    let pa = a.powf(s);
                    let pb = if b.is_infinite() { 0.0 } else { b.powf(s) };
                    (pa + u * (pb - pa)).powf(1.0 / s)
                }
            }
            Sampler::LogPower { p, q, pieces } => {
                let total = pieces.last().map_or(0.0, |x| x.0);
                loop {
                    let w = rng.random::<f64>() * total;
                    let &(_, y0, y1, bound) = pieces
                        .iter()
                        .find(|x| w < x.0)
                        .unwrap_or(&pieces[pieces.len() - 1]);
                    let y = truncated_exp_sample(p - 1.0, y0, y1, rng);
                    if rng.random::<f64>() * bound <= y.powf(-q) {
                        return (-y).exp();
                    }
                }
            }
            &Sampler::Exponential { rate, lo } => {
                let e: f64 = Exp1.sample(rng);
                lo + e / rate
            }
        }
    }
}

/// The Lévy process with Laplace exponent Ψ, with jumps below δ either replaced by
/// a Gaussian of matching variance or dropped (their mean is already compensated).
#[derive(Debug, Clone)]
pub struct LevyIncrement {
    table: JumpTable,
    /// `-α - ∫_{[δ,1)} r π(dr)`, or `-α + ∫_{[1,δ)} r π(dr)` for `δ > 1`
    drift: f64,
    /// `2β + ∫_{(0,δ)} r² π(dr)` when the Gaussian substitute is used, else `2β`.
    variance: f64,
    gaussian_small_jumps: bool,
}

impl LevyIncrement {
    pub fn new(mech: &BranchingMechanism, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Precondition(format!(
                "small-jump cutoff must be positive and finite, got {delta}"
            )));
        }
        let table = JumpTable::new(mech, delta)?;
        let m1_mid = if delta <= 1.0 {
            mech.moment(1, delta, 1.0)?
        } else {
            -mech.moment(1, 1.0, delta)?
        };
        let m2_small = mech.moment(2, 0.0, delta)?;
        let gaussian_small_jumps = m2_small.sqrt() >= delta;
        Ok(LevyIncrement {
            table,
            drift: -mech.alpha() - m1_mid,
            variance: 2.0 * mech.beta() + if gaussian_small_jumps { m2_small } else { 0.0 },
            gaussian_small_jumps,
        })
    }

    pub fn delta(&self) -> f64 {
        self.table.delta()
    }

    pub fn gaussian_small_jumps(&self) -> bool {
        self.gaussian_small_jumps
    }

    pub fn jump_rate(&self) -> f64 {
        self.table.rate()
    }

    /// An increment over Lévy time `s`.
    pub fn sample<R: Rng + ?Sized>(&self, s: f64, rng: &mut R) -> f64 {
        let mut x = self.drift * s;
        if self.variance > 0.0 {
            let g: f64 = StandardNormal.sample(rng);
            x += (self.variance * s).sqrt() * g;
        }
        let mean = self.table.rate() * s;
        if mean > 0.0 {
            let n = poisson(mean, rng);
            for _ in 0..n {
                x += self.table.sample(rng);
            }
        }
        x
    }
}

/// A Poisson count; means beyond `u64` range are not meaningful here.
pub fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    d.sample(rng) as u64
}
