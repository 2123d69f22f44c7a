//! Experiment configuration file (TOML). Every section is optional and
//! falls back to the defaults; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::lqi::LqiWeights;
use crate::baselines::nmpc::NmpcConfig;
use crate::dynamics::{ControlBounds, HydroParams, Vehicle, VehicleState};
use crate::env::{CostWeights, DepthEnv, DivergenceGuard, EnvConfig, ObservationKind};
use crate::error::{Error, Result};
use crate::metrics::MetricsConfig;
use crate::noise::OuParams;
use crate::profile::{ReferenceProfile, SampledProfile, Sinusoid, SyntheticSeafloor};
use crate::trainer::TrainerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Step to a fixed depth.
    #[default]
    Constant,
    /// Follow an analytic curve with the full curved-depth observation.
    Curved,
    /// Follow a seafloor (or analytic curve) from a window of relative depths.
    Seafloor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSection {
    pub surge_speed: f64,
    pub hydro: HydroParams,
    pub bounds: ControlBounds,
}

impl Default for VehicleSection {
    fn default() -> Self {
        Self {
            surge_speed: 2.0,
            hydro: HydroParams::default(),
            bounds: ControlBounds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisturbanceSection {
    pub enabled: bool,
    #[serde(flatten)]
    pub params: OuParams,
}

impl Default for DisturbanceSection {
    fn default() -> Self {
        Self {
            enabled: true,
            params: OuParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub dt: f64,
    pub horizon_steps: usize,
    /// Evaluation start depth.
    pub start_depth: f64,
    /// Constant-task target depth.
    pub target_depth: f64,
    /// Seafloor clearance; the target sits this far above the profile.
    pub safe_offset: f64,
    /// Relative-depth history length for the seafloor task.
    pub window: usize,
    pub train_start_half_width: f64,
    pub min_start_depth: f64,
    pub cost: CostWeights,
    pub disturbance: DisturbanceSection,
    pub guard: DivergenceGuard,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon_steps: 1000,
            start_depth: 2.0,
            target_depth: 8.0,
            safe_offset: 5.0,
            window: 3,
            train_start_half_width: 6.0,
            min_start_depth: 0.5,
            cost: CostWeights::default(),
            disturbance: DisturbanceSection::default(),
            guard: DivergenceGuard::default(),
        }
    }
}

/// Reference used by the curved and seafloor tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSection {
    /// `base - amplitude * sin(wavenumber * x)`.
    Sinusoid {
        base: f64,
        amplitude: f64,
        wavenumber: f64,
    },
    /// Seafloor survey CSV (`distance_m,depth_m`).
    SeafloorCsv { path: PathBuf },
    /// Generated seafloor.
    Synthetic(SyntheticSeafloor),
}

impl Default for ReferenceSection {
    fn default() -> Self {
        let s = Sinusoid::benchmark();
        ReferenceSection::Sinusoid {
            base: s.base,
            amplitude: s.amplitude,
            wavenumber: s.wavenumber,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub episodes: usize,
    /// First disturbance seed; episode `k` uses `seed_base + k`.
    pub seed_base: u64,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            episodes: 10,
            seed_base: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Shared disturbance seeds; each controller runs once per seed.
    pub seeds: Vec<u64>,
    /// Actor checkpoints: empty uses `<out_dir>/train/actor.ckpt`, a single
    /// entry is shared by all seeds, otherwise one entry per seed.
    pub checkpoints: Vec<PathBuf>,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1, 2, 3, 4],
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub windows: Vec<usize>,
    pub evaluations: usize,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            windows: vec![1, 3, 5, 7, 9],
            evaluations: 10,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub vehicle: VehicleSection,
    pub env: EnvSection,
    pub reference: ReferenceSection,
    pub trainer: TrainerConfig,
    pub lqi: LqiWeights,
    pub nmpc: NmpcConfig,
    pub metrics: MetricsConfig,
    pub evaluation: EvaluationSection,
    pub compare: CompareSection,
    pub sweep: SweepSection,
    pub seafloor: SyntheticSeafloor,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::Constant,
            seed: 0,
            out_dir: PathBuf::from("runs"),
            vehicle: VehicleSection::default(),
            env: EnvSection::default(),
            reference: ReferenceSection::default(),
            trainer: TrainerConfig::default(),
            lqi: LqiWeights::default(),
            nmpc: NmpcConfig::default(),
            metrics: MetricsConfig::default(),
            evaluation: EvaluationSection::default(),
            compare: CompareSection::default(),
            sweep: SweepSection::default(),
            seafloor: SyntheticSeafloor::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        self.trainer.validate()?;
        self.nmpc.validate()?;
        self.vehicle.bounds.validate()?;
        if self.env.window == 0 {
            return Err(Error::Config("env.window must be >= 1".into()));
        }
        if !(self.metrics.steady_fraction > 0.0 && self.metrics.steady_fraction <= 1.0) {
            return Err(Error::Config("metrics.steady_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn vehicle(&self) -> Result<Vehicle> {
        Vehicle::new(
            self.vehicle.hydro.clone(),
            self.vehicle.surge_speed,
            self.vehicle.bounds,
        )
    }

    /// Reference profile for the curved and seafloor tasks.
    pub fn reference_profile(&self) -> Result<ReferenceProfile> {
        Ok(match &self.reference {
            ReferenceSection::Sinusoid {
                base,
                amplitude,
                wavenumber,
            } => ReferenceProfile::sinusoid(Sinusoid {
                base: *base,
                amplitude: *amplitude,
                wavenumber: *wavenumber,
            }),
            ReferenceSection::SeafloorCsv { path } => {
                ReferenceProfile::Sampled(SampledProfile::load_csv(path)?)
            }
            ReferenceSection::Synthetic(s) => ReferenceProfile::Sampled(s.generate()?),
        })
    }

    /// Environment for `task`, with the observation overridden by `window`
    /// when given (window sweeps).
    pub fn env_for(&self, task: Task, window: Option<usize>) -> Result<DepthEnv> {
        let e = &self.env;
        let (observation, reference, safe_offset) = match task {
            Task::Constant => (
                ObservationKind::Constant,
                ReferenceProfile::Constant(e.target_depth),
                0.0,
            ),
            Task::Curved => (ObservationKind::Curved, self.reference_profile()?, 0.0),
            Task::Seafloor => {
                let offset = match self.reference {
                    ReferenceSection::Sinusoid { .. } => 0.0,
                    _ => e.safe_offset,
                };
                (
                    ObservationKind::Window(window.unwrap_or(e.window)),
                    self.reference_profile()?,
                    offset,
                )
            }
        };
        let start_depth = match task {
            Task::Constant => e.start_depth,
            _ => reference.depth(0.0)? - safe_offset,
        };
        let config = EnvConfig {
            observation,
            reference,
            safe_offset,
            dt: e.dt,
            horizon_steps: e.horizon_steps,
            cost: e.cost,
            disturbance: e.disturbance.enabled.then(|| e.disturbance.params.clone()),
            disturbance_seed: self.seed,
            start: VehicleState::at_depth(start_depth),
            train_start_half_width: e.train_start_half_width,
            min_start_depth: e.min_start_depth,
            guard: e.guard,
        };
        DepthEnv::new(self.vehicle()?, config)
    }

    pub fn env(&self) -> Result<DepthEnv> {
        self.env_for(self.task, None)
    }
}
