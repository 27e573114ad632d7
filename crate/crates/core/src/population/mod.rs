//! The measure-valued population on `[0, x]` and its frequency process, built three ways:
//! independent blocks, the finite-variation Poisson decomposition, and quadratic clusters.

mod build;

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub use build::{
    simulate_blocks, simulate_fv_poisson, simulate_iv_cluster, BlockSimulator, ClusterSimulator,
    FvPoissonSimulator,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// `𝒵_t` as dust plus atoms. Masses (and the dust coefficient) are in units of
/// `e^{log_scale}`, which is 0 except for engines that run in log space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationState {
    pub t: f64,
    pub x: f64,
    /// Lebesgue density of the absolutely continuous part on `[0, x]`.
    pub dust_coefficient: f64,
    pub atoms: Vec<Atom>,
    /// `dust_coefficient * x + Σ masses`, possibly infinite.
    pub total: f64,
    pub log_scale: f64,
}

impl PopulationState {
    pub(crate) fn new(t: f64, x: f64, dust_coefficient: f64, atoms: Vec<Atom>, log_scale: f64) -> Self {
        let total = dust_coefficient * x + atoms.iter().map(|a| a.mass).sum::<f64>();
        PopulationState {
            t,
            x,
            dust_coefficient,
            atoms,
            total,
            log_scale,
        }
    }

    /// `log Z_t`, meaningful even when `Z_t` is outside the `f64` range.
    pub fn log_total(&self) -> f64 {
        self.total.ln() + self.log_scale
    }

    /// `𝒵_t([0, y])`, in the state's units.
    pub fn mass_up_to(&self, y: f64) -> f64 {
        self.dust_coefficient * y.clamp(0.0, self.x)
            + self
                .atoms
                .iter()
                .filter(|a| a.location <= y)
                .map(|a| a.mass)
                .sum::<f64>()
    }
}

/// `M_t = 𝒵_t / Z_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyMeasure {
    pub t: f64,
    pub x: f64,
    /// `M_t` mass of the dust part, `dust_coefficient * x / Z_t`.
    pub dust_fraction: f64,
    /// Atoms with their frequencies as masses, sorted by location.
    pub atoms: Vec<Atom>,
}

impl FrequencyMeasure {
    pub fn max_frequency(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.dust_fraction + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    /// Frequency of the atom at `location`, 0 if absent.
    pub fn at(&self, location: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| a.location == location)
            .map_or(0.0, |a| a.mass)
    }

    /// `R_t^{-1}(v) = inf{y : M_t([0, y]) > v}` as the index of the atom hit, or `None`
    /// when `v` falls on the dust.
    pub fn inverse(&self, v: f64) -> (f64, Option<usize>) {
        let density = if self.x > 0.0 { self.dust_fraction / self.x } else { 0.0 };
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (i, a) in self.atoms.iter().enumerate() {
            let dust_here = density * (a.location - prev);
            if acc + dust_here > v {
                return (prev + (v - acc) / density, None);
            }
            acc += dust_here;
            if acc + a.mass > v {
                return (a.location, Some(i));
            }
            acc += a.mass;
            prev = a.location;
        }
        let y = if density > 0.0 {
            (prev + (v - acc) / density).min(self.x)
        } else {
            self.x
        };
        (y, None)
    }
}

/// Total-variation distance between two frequency measures whose atoms share locations.
pub fn total_variation(a: &FrequencyMeasure, b: &FrequencyMeasure) -> f64 {
    let mut d = (a.dust_fraction - b.dust_fraction).abs();
    for p in &a.atoms {
        d += (p.mass - b.at(p.location)).abs();
    }
    for q in &b.atoms {
        if a.atoms.iter().all(|p| p.location != q.location) {
            d += q.mass;
        }
    }
    0.5 * d
}

/// Divides every part by the total.
pub fn frequency_at(state: &PopulationState) -> Result<FrequencyMeasure> {
    if !(state.total > 0.0) {
        return Err(Error::Absorbed(0.0));
    }
    if !state.total.is_finite() {
        return Err(Error::Absorbed(f64::INFINITY));
    }
    let mut atoms: Vec<Atom> = state
        .atoms
        .iter()
        .filter(|a| a.mass > 0.0)
        .map(|a| Atom {
            location: a.location,
            mass: a.mass / state.total,
        })
        .collect();
    atoms.sort_by(|p, q| p.location.total_cmp(&q.location));
    Ok(FrequencyMeasure {
        t: state.t,
        x: state.x,
        dust_fraction: state.dust_coefficient * state.x / state.total,
        atoms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PopulationAbsorption {
    None,
    /// All mass gone at `time`; `eve` is the location of the last atom to die.
    Extinct { time: f64, eve: f64 },
    /// Infinite mass at `time`; `eve` is the location of the first atom to explode.
    Exploded { time: f64, eve: f64 },
}

/// Snapshots of one population run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub x: f64,
    pub snapshots: Vec<PopulationState>,
    pub absorption: PopulationAbsorption,
}

impl Trajectory {
    pub fn terminal(&self) -> &PopulationState {
        self.snapshots.last().expect("trajectories are never empty")
    }

    /// The last snapshot at or before `t`.
    pub fn at(&self, t: f64) -> &PopulationState {
        self.snapshots
            .iter()
            .rev()
            .find(|s| s.t <= t + 1e-12)
            .unwrap_or(&self.snapshots[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LimitThresholds {
    /// Atoms with terminal frequency below this go to the residual bucket.
    pub floor: f64,
    /// An Eve is declared when the top frequency reaches `1 - eta`.
    pub eta: f64,
}

impl Default for LimitThresholds {
    fn default() -> Self {
        LimitThresholds {
            floor: 1e-6,
            eta: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SettlerReport {
    /// Dust density `a` of the limit, so that `a x + Σ frequencies + residual = 1`.
    pub dust: f64,
    /// `(location, frequency)` for atoms at or above the floor.
    pub settlers: Vec<(f64, f64)>,
    /// Total frequency of atoms below the floor.
    pub residual: f64,
    pub eve: Option<f64>,
    pub eve_finite_time: bool,
    pub max_frequency: f64,
}

impl SettlerReport {
    pub fn settler_count(&self) -> usize {
        self.settlers.len()
    }

    pub fn dust_fraction(&self, x: f64) -> f64 {
        self.dust * x
    }
}

/// Reads the limit off a finished trajectory: the extremal atom at absorption, else
/// the terminal frequencies thresholded by `floor` and `eta`.
pub fn detect_limit(traj: &Trajectory, th: &LimitThresholds) -> SettlerReport {
    match traj.absorption {
        PopulationAbsorption::Extinct { eve, .. } | PopulationAbsorption::Exploded { eve, .. } => {
            return SettlerReport {
                dust: 0.0,
                settlers: vec![(eve, 1.0)],
                residual: 0.0,
                eve: Some(eve),
                eve_finite_time: true,
                max_frequency: 1.0,
            }
        }
        PopulationAbsorption::None => {}
    }
    let m = match frequency_at(traj.terminal()) {
        Ok(m) => m,
        Err(_) => {
            return SettlerReport {
                dust: 0.0,
                settlers: Vec::new(),
                residual: 0.0,
                eve: None,
                eve_finite_time: false,
                max_frequency: 0.0,
            }
        }
    };
    thresholded(&m, th)
}

/// Settler report of a single frequency measure.
pub fn thresholded(m: &FrequencyMeasure, th: &LimitThresholds) -> SettlerReport {
    let mut settlers = Vec::new();
    let mut residual = 0.0;
    for a in &m.atoms {
        if a.mass >= th.floor {
            settlers.push((a.location, a.mass));
        } else {
            residual += a.mass;
        }
    }
    let max_frequency = m.max_frequency();
    let eve = if max_frequency >= 1.0 - th.eta {
        m.atoms
            .iter()
            .find(|a| a.mass == max_frequency)
            .map(|a| a.location)
    } else {
        None
    };
    SettlerReport {
        dust: m.dust_fraction / m.x,
        settlers,
        residual,
        eve,
        eve_finite_time: false,
        max_frequency,
    }
}

pub const DUMP_HEADER: &str = "run,t,log_scale,dust_coefficient,total,atoms";

/// One row per snapshot; atoms as space-separated `location:mass` pairs.
pub fn write_dump<W: Write>(w: &mut W, run: u64, traj: &Trajectory) -> std::io::Result<()> {
    for s in &traj.snapshots {
        write!(
            w,
            "{run},{},{},{},{},",
            s.t, s.log_scale, s.dust_coefficient, s.total
        )?;
        for (i, a) in s.atoms.iter().enumerate() {
            if i > 0 {
                write!(w, " ")?;
            }
            write!(w, "{}:{}", a.location, a.mass)?;
        }
        writeln!(w)?;
    }
    Ok(())
}
