//! Run configuration: a JSON file with per-field flag overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use syzygy::dynamics::{lagrange_circular_ic, lagrange_homothety_ic, EventConfig, IntegratorConfig};
use syzygy::random::random_zero_j;
use syzygy::theorem::ResidualOptions;
use syzygy::varfinder::{eight_start_phase, find_eight, refine_to_orbit, LoopPath, MinimizeOptions};
use syzygy::{BodyState, MassTriple, Vec2};

use crate::CliError;

/// Newton-equation residual at which the figure-eight search stops adding harmonics.
pub const EQUATION_TOL: f64 = 1e-5;

/// Where the initial state comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    Explicit { positions: [[f64; 2]; 3], velocities: [[f64; 2]; 3] },
    LagrangeHomothety { size: f64, rate: f64 },
    /// Rigidly rotating equilateral triangle of the given side.
    LagrangeCircular { side: f64 },
    /// A loop file; the state is taken at `phase` (default: between eclipses).
    LoopFile { path: PathBuf, phase: Option<f64> },
    RandomZeroJ { seed: u64 },
    /// The equal-mass figure-eight found by action minimization.
    FigureEight { harmonics: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyToggles {
    pub residual: bool,
    pub monotone: bool,
    pub corollary: bool,
    pub recurrence: bool,
    pub q_scan: bool,
    pub inequality_scan: bool,
    /// Also run the residual with `q` negated; reported in a diagnostic column only.
    pub negated_q_diagnostic: bool,
}

impl Default for VerifyToggles {
    fn default() -> Self {
        Self {
            residual: true,
            monotone: true,
            corollary: true,
            recurrence: true,
            q_scan: true,
            inequality_scan: true,
            negated_q_diagnostic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub masses: [f64; 3],
    pub initial: InitialCondition,
    /// Integration length (time units).
    pub tmax: f64,
    pub integrator: IntegratorConfig,
    pub events: EventConfig,
    pub residual: ResidualOptions,
    pub minimize: MinimizeOptions,
    /// Return-map threshold for loop hand-off.
    pub refine_tol: f64,
    /// Grid size per axis for scans.
    pub grid: usize,
    /// Shape-velocity directions per grid point in the q scan.
    pub directions: usize,
    /// Random samples for cone-check and conformal-check (each has its own default).
    pub samples: Option<usize>,
    /// Starting harmonic count for find-eight.
    pub harmonics: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub verify: VerifyToggles,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            masses: [1.0; 3],
            initial: InitialCondition::FigureEight { harmonics: 24 },
            tmax: 10.0,
            integrator: IntegratorConfig::default(),
            events: EventConfig::default(),
            residual: ResidualOptions::default(),
            minimize: MinimizeOptions::default(),
            refine_tol: 1e-5,
            grid: 200,
            directions: 8,
            samples: None,
            harmonics: 24,
            seed: 0,
            out: PathBuf::from("out"),
            verify: VerifyToggles::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn mass_triple(&self) -> Result<MassTriple, CliError> {
        MassTriple::new(self.masses[0], self.masses[1], self.masses[2]).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.mass_triple()?;
        self.integrator.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.tmax >= 0.0 && self.tmax.is_finite()) {
            return Err(CliError::Config(format!("tmax must be finite and non-negative, got {}", self.tmax)));
        }
        if self.grid == 0 || self.directions == 0 || self.samples == Some(0) || self.harmonics < 2 {
            return Err(CliError::Config("grid, directions and samples must be positive, harmonics at least 2".into()));
        }
        if !(self.refine_tol > 0.0) {
            return Err(CliError::Config("refine_tol must be positive".into()));
        }
        Ok(())
    }

    /// The configured initial state, already in the center-of-mass frame.
    pub fn initial_state(&self) -> Result<BodyState, CliError> {
        let m = self.mass_triple()?;
        let st = match &self.initial {
            InitialCondition::Explicit { positions, velocities } => {
                let v = |a: &[[f64; 2]; 3]| a.map(|[x, y]| Vec2::new(x, y));
                let st = BodyState::new(0.0, v(positions), v(velocities));
                let (c, u) = (st.center_of_mass(&m), st.center_of_mass_velocity(&m));
                BodyState::new(0.0, st.pos.map(|p| p - c), st.vel.map(|w| w - u))
            }
            InitialCondition::LagrangeHomothety { size, rate } => lagrange_homothety_ic(&m, *size, *rate)?,
            InitialCondition::LagrangeCircular { side } => lagrange_circular_ic(&m, *side)?,
            InitialCondition::RandomZeroJ { seed } => random_zero_j(&m, *seed)?,
            InitialCondition::LoopFile { path, phase } => {
                let loop_ = load_loop(path)?;
                if loop_.masses != self.masses {
                    return Err(CliError::Config(format!(
                        "loop masses {:?} differ from configured masses {:?}",
                        loop_.masses, self.masses
                    )));
                }
                let phase = phase.unwrap_or_else(|| eight_start_phase(&loop_));
                refine_to_orbit(&loop_, phase, self.refine_tol, &self.integrator)?.state
            }
            InitialCondition::FigureEight { harmonics } => {
                if !m.is_equal_mass() {
                    return Err(CliError::Config("the figure-eight source needs equal masses".into()));
                }
                let (loop_, _) = find_eight(*harmonics, 4 * *harmonics, EQUATION_TOL, &self.minimize)?;
                refine_to_orbit(&loop_, eight_start_phase(&loop_), self.refine_tol, &self.integrator)?.state
            }
        };
        Ok(st)
    }
}

pub fn load_loop(path: &Path) -> Result<LoopPath, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read loop file {}: {e}", path.display())))?;
    let loop_: LoopPath =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    loop_.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(loop_)
}
