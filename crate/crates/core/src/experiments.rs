//! Experiment orchestration behind the CLI subcommands. Every run writes its
//! artifacts under one directory together with a `manifest.json` holding
//! the config snapshot, the seeds and a SHA-256 of each artifact.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::lqi::{solve_lqi, LinearPlant, LqiController};
use crate::baselines::nmpc::{EulerVehicle, NmpcController};
use crate::config::{ExperimentConfig, Task};
use crate::dynamics::{ControlInput, VehicleState};
use crate::env::{curved_terms, DepthEnv};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, MetricsReport, TrajectoryRecord};
use crate::nn::MlpParams;
use crate::profile::ReferenceProfile;
use crate::trainer::{Rollout, Trainer, TrainingTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Controller {
    Nndpg,
    Lqi,
    Nmpc,
}

impl Controller {
    pub fn name(self) -> &'static str {
        match self {
            Controller::Nndpg => "nndpg",
            Controller::Lqi => "lqi",
            Controller::Nmpc => "nmpc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub seeds: Vec<u64>,
    /// Full config as TOML; loading it back reproduces the run.
    pub config: String,
    pub artifacts: Vec<ArtifactHash>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Artifact directory plus the list of files written into it.
struct RunDir {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl RunDir {
    fn create(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    }

    fn finish(self, command: &str, cfg: &ExperimentConfig, seeds: Vec<u64>) -> Result<PathBuf> {
        let mut artifacts = Vec::with_capacity(self.files.len());
        for f in &self.files {
            artifacts.push(ArtifactHash {
                path: f
                    .strip_prefix(&self.dir)
                    .unwrap_or(f)
                    .to_string_lossy()
                    .into_owned(),
                sha256: sha256_file(f)?,
            });
        }
        let manifest = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            seeds,
            config: cfg.to_toml(),
            artifacts,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Closed-loop rollout of an arbitrary state-feedback law from the env's
/// configured start. The law sees the state and the reference `(z_r, theta_r)`.
pub fn closed_loop<F>(env: &mut DepthEnv, disturbance_seed: u64, mut law: F) -> Result<Rollout>
where
    F: FnMut(&VehicleState, [f64; 2]) -> Result<ControlInput>,
{
    let start = env.config().start;
    env.reseed_disturbance(disturbance_seed)?;
    env.reset(start)?;
    let mut out = Rollout {
        states: vec![start],
        controls: Vec::new(),
        costs: Vec::new(),
        z_ref: vec![env.reference_depth(start.x)?],
        diverged: false,
    };
    loop {
        let s = *env.state().expect("reset above");
        let u = law(&s, reference_pair(env, &s)?)?;
        let step = env.step(u)?;
        let next = *env.state().expect("reset above");
        out.controls.push(step.applied);
        out.costs.push(step.cost);
        out.z_ref.push(env.reference_depth(next.x)?);
        out.states.push(next);
        if step.done {
            out.diverged = step.diverged;
            break;
        }
    }
    Ok(out)
}

/// Target depth and path pitch at the vehicle's position.
fn reference_pair(env: &DepthEnv, s: &VehicleState) -> Result<[f64; 2]> {
    let z_r = env.reference_depth(s.x)?;
    let theta_r = match env.config().reference {
        ReferenceProfile::Constant(_) => 0.0,
        ref p => curved_terms(s, p, env.vehicle().surge_speed())?.theta_c,
    };
    Ok([z_r, theta_r])
}

pub fn actor_rollout(actor: &MlpParams, env: &mut DepthEnv, disturbance_seed: u64) -> Result<Rollout> {
    env.reseed_disturbance(disturbance_seed)?;
    let start = env.config().start;
    crate::trainer::rollout(actor, env, start)
}

pub fn lqi_rollout(cfg: &ExperimentConfig, env: &mut DepthEnv, disturbance_seed: u64) -> Result<Rollout> {
    let gain = solve_lqi(&LinearPlant::remus(), &cfg.lqi)?;
    let mut ctl = LqiController::new(gain, env.vehicle().bounds(), env.config().dt);
    closed_loop(env, disturbance_seed, |s, r| Ok(ctl.control(s, r)))
}

pub fn nmpc_rollout(cfg: &ExperimentConfig, env: &mut DepthEnv, disturbance_seed: u64) -> Result<Rollout> {
    let model = EulerVehicle {
        vehicle: env.vehicle().clone(),
        dt: env.config().dt,
    };
    let mut ctl = NmpcController::new(model, cfg.nmpc.clone(), env.vehicle().bounds())?;
    closed_loop(env, disturbance_seed, |s, r| {
        Ok(ctl.control_chi(s.motion_vector(), [0.0, 0.0, r[0], r[1]]))
    })
}

fn metrics_of(cfg: &ExperimentConfig, rollout: &Rollout) -> Result<(TrajectoryRecord, MetricsReport)> {
    let record = rollout.to_record(cfg.env.dt);
    let report = compute_metrics(&record, &cfg.metrics)?;
    Ok((record, report))
}

const METRICS_HEADER: &str = "label,seed,sse_z,sse_theta,overshoot_z,rt_z,rt_theta,J\n";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x}"))
}

fn metrics_line(label: &str, seed: u64, m: &MetricsReport) -> String {
    format!(
        "{label},{seed},{},{},{},{},{},{}\n",
        m.sse_z,
        m.sse_theta,
        m.overshoot_z,
        fmt_opt(m.rt_z),
        fmt_opt(m.rt_theta),
        m.long_term_cost
    )
}

fn default_checkpoint(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("train").join("actor.ckpt")
}

pub fn load_actor(path: &Path) -> Result<MlpParams> {
    MlpParams::load(path).map_err(|e| match e {
        Error::MissingArtifact { path, .. } => Error::MissingArtifact {
            path,
            hint: "no trained policy here; run `train` first".into(),
        },
        other => other,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub actor: MlpParams,
    pub trace: TrainingTrace,
    pub eval: MetricsReport,
    pub dir: PathBuf,
}

/// Trains on the configured task and evaluates the best policy once on the
/// run's own disturbance seed.
pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    train_into(cfg, cfg.env()?, cfg.out_dir.join("train"), "train")
}

fn train_into(cfg: &ExperimentConfig, env: DepthEnv, dir: PathBuf, command: &str) -> Result<TrainOutcome> {
    let mut run = RunDir::create(dir)?;
    let mut eval_env = env.clone();
    let mut tc = cfg.trainer.clone();
    tc.seed = cfg.seed;
    let mut trainer = Trainer::new(env, tc)?;
    trainer.train()?;
    trainer.best_actor().save(run.path("actor.ckpt"))?;
    trainer.critic().save(run.path("critic.ckpt"))?;
    trainer.trace().write_csv(run.path("training_trace.csv"))?;
    let actor = trainer.best_actor().clone();
    let rollout = actor_rollout(&actor, &mut eval_env, cfg.seed)?;
    let (record, eval) = metrics_of(cfg, &rollout)?;
    record.write_csv(run.path("eval_trajectory.csv"))?;
    run.write_text(
        "eval_metrics.csv",
        &format!("{METRICS_HEADER}{}", metrics_line("nndpg", cfg.seed, &eval)),
    )?;
    let dir = run.dir.clone();
    run.finish(command, cfg, vec![cfg.seed])?;
    Ok(TrainOutcome {
        actor,
        trace: trainer.trace().clone(),
        eval,
        dir,
    })
}

#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub costs: Vec<f64>,
    pub reports: Vec<MetricsReport>,
    pub dir: PathBuf,
}

/// Noise-free evaluation of a checkpoint over `evaluation.episodes`
/// disturbance seeds.
pub fn run_evaluate(cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<EvaluateOutcome> {
    let path = checkpoint.map_or_else(|| default_checkpoint(cfg), Path::to_path_buf);
    let actor = load_actor(&path)?;
    let mut env = cfg.env()?;
    let mut run = RunDir::create(cfg.out_dir.join("evaluate"))?;
    let seeds = eval_seeds(cfg);
    let mut table = String::from(METRICS_HEADER);
    let mut costs = Vec::new();
    let mut reports = Vec::new();
    for (k, &seed) in seeds.iter().enumerate() {
        let r = actor_rollout(&actor, &mut env, seed)?;
        let (record, m) = metrics_of(cfg, &r)?;
        record.write_csv(run.path(&format!("episode_{k}.csv")))?;
        table.push_str(&metrics_line("nndpg", seed, &m));
        costs.push(m.long_term_cost);
        reports.push(m);
    }
    run.write_text("metrics.csv", &table)?;
    let dir = run.dir.clone();
    run.finish("evaluate", cfg, seeds)?;
    Ok(EvaluateOutcome { costs, reports, dir })
}

fn eval_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.evaluation.episodes as u64)
        .map(|k| cfg.evaluation.seed_base + k)
        .collect()
}

/// Runs one classical controller once per compare seed.
pub fn run_baseline(cfg: &ExperimentConfig, which: Controller) -> Result<Vec<MetricsReport>> {
    if which == Controller::Nndpg {
        return Err(Error::Config("baseline must be `lqi` or `nmpc`".into()));
    }
    let mut env = cfg.env()?;
    let mut run = RunDir::create(cfg.out_dir.join(format!("baseline_{}", which.name())))?;
    let mut table = String::from(METRICS_HEADER);
    let mut reports = Vec::new();
    for &seed in &cfg.compare.seeds {
        let r = match which {
            Controller::Lqi => lqi_rollout(cfg, &mut env, seed)?,
            _ => nmpc_rollout(cfg, &mut env, seed)?,
        };
        let (record, m) = metrics_of(cfg, &r)?;
        record.write_csv(run.path(&format!("trajectory_seed{seed}.csv")))?;
        table.push_str(&metrics_line(which.name(), seed, &m));
        reports.push(m);
    }
    run.write_text("metrics.csv", &table)?;
    run.finish(&format!("baseline {}", which.name()), cfg, cfg.compare.seeds.clone())?;
    Ok(reports)
}

/// Median of each index across seeds; a response time that was never
/// reached counts as +infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MedianRow {
    pub sse_z: f64,
    pub sse_theta: f64,
    pub overshoot_z: f64,
    pub rt_z: f64,
    pub rt_theta: f64,
    pub long_term_cost: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl MedianRow {
    pub fn of(reports: &[MetricsReport]) -> Self {
        let col = |f: &dyn Fn(&MetricsReport) -> f64| {
            let mut v: Vec<f64> = reports.iter().map(f).collect();
            median(&mut v)
        };
        Self {
            sse_z: col(&|m| m.sse_z),
            sse_theta: col(&|m| m.sse_theta),
            overshoot_z: col(&|m| m.overshoot_z),
            rt_z: col(&|m| m.rt_z.unwrap_or(f64::INFINITY)),
            rt_theta: col(&|m| m.rt_theta.unwrap_or(f64::INFINITY)),
            long_term_cost: col(&|m| m.long_term_cost),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    /// Per-controller reports, one per compare seed.
    pub reports: Vec<(Controller, Vec<MetricsReport>)>,
    pub medians: Vec<(Controller, MedianRow)>,
    pub dir: PathBuf,
}

impl CompareOutcome {
    pub fn median_of(&self, c: Controller) -> &MedianRow {
        &self.medians.iter().find(|(k, _)| *k == c).expect("all controllers").1
    }
}

/// Checkpoints used by `compare`: none configured means the default
/// training output; one is shared by every seed; otherwise one per seed.
fn compare_actors(cfg: &ExperimentConfig) -> Result<Vec<MlpParams>> {
    let paths = if cfg.compare.checkpoints.is_empty() {
        vec![default_checkpoint(cfg)]
    } else {
        cfg.compare.checkpoints.clone()
    };
    let n = cfg.compare.seeds.len();
    if paths.len() != 1 && paths.len() != n {
        return Err(Error::Config(format!(
            "compare.checkpoints has {} entries; expected 1 or one per seed ({n})",
            paths.len()
        )));
    }
    let loaded = paths.iter().map(|p| load_actor(p)).collect::<Result<Vec<_>>>()?;
    Ok(if loaded.len() == 1 {
        vec![loaded[0].clone(); n]
    } else {
        loaded
    })
}

/// Runs NNDPG, LQI and NMPC on each compare seed from the same start with
/// the same disturbance realization.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareOutcome> {
    let actors = compare_actors(cfg)?;
    compare_with_actors(cfg, &actors)
}

pub fn compare_with_actors(cfg: &ExperimentConfig, actors: &[MlpParams]) -> Result<CompareOutcome> {
    let seeds = cfg.compare.seeds.clone();
    if actors.len() != seeds.len() {
        return Err(Error::Config("one actor per compare seed is required".into()));
    }
    let env = cfg.env()?;
    let mut run = RunDir::create(cfg.out_dir.join("compare"))?;
    let controllers = [Controller::Nndpg, Controller::Lqi, Controller::Nmpc];
    let per_seed = fan_out(cfg.sweep.threads, seeds.len(), |i| {
        let mut env = env.clone();
        let seed = seeds[i];
        Ok([
            actor_rollout(&actors[i], &mut env, seed)?,
            lqi_rollout(cfg, &mut env, seed)?,
            nmpc_rollout(cfg, &mut env, seed)?,
        ])
    })?;

    let mut table = String::from(METRICS_HEADER);
    let mut reports: Vec<(Controller, Vec<MetricsReport>)> =
        controllers.iter().map(|&c| (c, Vec::new())).collect();
    for (i, rollouts) in per_seed.iter().enumerate() {
        let seed = seeds[i];
        let mut controls = String::from("t,nndpg_tau1,nndpg_tau2,lqi_tau1,lqi_tau2,nmpc_tau1,nmpc_tau2\n");
        let records: Vec<TrajectoryRecord> = rollouts.iter().map(|r| r.to_record(cfg.env.dt)).collect();
        for (k, (c, record)) in controllers.iter().zip(&records).enumerate() {
            record.write_csv(run.path(&format!("{}_seed{seed}.csv", c.name())))?;
            let m = compute_metrics(record, &cfg.metrics)?;
            table.push_str(&metrics_line(c.name(), seed, &m));
            reports[k].1.push(m);
        }
        let rows = records.iter().map(|r| r.rows.len()).min().unwrap_or(0);
        for k in 0..rows {
            let r: Vec<_> = records.iter().map(|rec| rec.rows[k]).collect();
            let _ = writeln!(
                controls,
                "{},{},{},{},{},{},{}",
                r[0].t, r[0].tau1, r[0].tau2, r[1].tau1, r[1].tau2, r[2].tau1, r[2].tau2
            );
        }
        run.write_text(&format!("controls_seed{seed}.csv"), &controls)?;
    }
    run.write_text("metrics.csv", &table)?;

    let medians: Vec<(Controller, MedianRow)> =
        reports.iter().map(|(c, r)| (*c, MedianRow::of(r))).collect();
    let mut summary = String::from("controller,sse_z,sse_theta,overshoot_z,rt_z,rt_theta,J\n");
    for (c, m) in &medians {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{}",
            c.name(),
            m.sse_z,
            m.sse_theta,
            m.overshoot_z,
            m.rt_z,
            m.rt_theta,
            m.long_term_cost
        );
    }
    run.write_text("table.csv", &summary)?;
    let dir = run.dir.clone();
    run.finish("compare", cfg, seeds)?;
    Ok(CompareOutcome {
        reports,
        medians,
        dir,
    })
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// `(window, J samples)` in sweep order.
    pub samples: Vec<(usize, Vec<f64>)>,
    pub dir: PathBuf,
}

impl SweepOutcome {
    pub fn median_cost(&self, window: usize) -> Option<f64> {
        self.samples
            .iter()
            .find(|(w, _)| *w == window)
            .map(|(_, j)| median(&mut j.clone()))
    }
}

/// Trains one windowed policy per size, then evaluates each
/// `sweep.evaluations` times on distinct disturbance seeds.
pub fn run_window_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    if cfg.task == Task::Constant {
        return Err(Error::Config(
            "window-sweep needs task = \"curved\" or \"seafloor\"".into(),
        ));
    }
    let windows = cfg.sweep.windows.clone();
    if windows.is_empty() || windows.contains(&0) {
        return Err(Error::Config("sweep.windows must be nonempty sizes >= 1".into()));
    }
    let root = cfg.out_dir.join("window_sweep");
    let mut run = RunDir::create(root.clone())?;
    let seeds: Vec<u64> = (0..cfg.sweep.evaluations as u64)
        .map(|k| cfg.evaluation.seed_base + k)
        .collect();
    let results = fan_out(cfg.sweep.threads, windows.len(), |i| {
        let w = windows[i];
        let env = cfg.env_for(Task::Seafloor, Some(w))?;
        let out = train_into(cfg, env.clone(), root.join(format!("win{w}")), "window-sweep")?;
        let mut env = env;
        seeds
            .iter()
            .map(|&s| Ok(actor_rollout(&out.actor, &mut env, s)?.discounted_cost(cfg.metrics.gamma)))
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut csv = String::from("window,run,J\n");
    let mut samples = Vec::new();
    for (&w, costs) in windows.iter().zip(results) {
        for (k, j) in costs.iter().enumerate() {
            let _ = writeln!(csv, "{w},{k},{j}");
        }
        samples.push((w, costs));
    }
    run.write_text("samples.csv", &csv)?;
    let dir = run.dir.clone();
    run.finish("window-sweep", cfg, seeds)?;
    Ok(SweepOutcome { samples, dir })
}

/// Writes the configured synthetic seafloor as `seafloor.csv`.
pub fn run_gen_seafloor(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let mut sf = cfg.seafloor.clone();
    sf.seed = cfg.seed;
    let profile = sf.generate()?;
    let mut run = RunDir::create(cfg.out_dir.clone())?;
    let path = run.path("seafloor.csv");
    profile.write_csv(&path)?;
    run.finish("gen-seafloor", cfg, vec![cfg.seed])?;
    Ok(path)
}

/// Runs `job(i)` for `i in 0..n` on up to `threads` scoped workers
/// (0 = available parallelism) and returns the results in index order.
pub fn fan_out<T, F>(threads: usize, n: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let workers = if threads == 0 {
        std::thread::available_parallelism().map_or(1, |p| p.get())
    } else {
        threads
    }
    .clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(&job).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<T>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if i >= n {
                            break done;
                        }
                        done.push((i, job(i)));
                    }
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every index ran")).collect()
}
