//! Experiment orchestration: JSON-configured suites, seeded deterministic
//! runs, atomically written CSV artifacts, and a manifest tying them to the
//! configuration hash.
//!
//! Identical config + seeds produce byte-identical artifacts. Existing files
//! are never overwritten unless `force` is set.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bias::{equal_mean_gaussians, estimator_bias};
use crate::bounds::{convergence_step_bound, fixed_beta_error_bound, tighter_bound_threshold};
use crate::error::{Error, Result};
use crate::gridworld::{build_gridworld, default_gridworld, GridWorld, GridWorldSpec};
use crate::operators::OperatorKind;
use crate::qlearning::{train, LearnerConfig};
use crate::value_iteration::vi_run;
use crate::dqn::snapshot::snapshot_bytes;
use crate::dqn::{train_dqn, ApproxModel, Architecture, DqnConfig, TargetRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Vi,
    Qlearn,
    Bias,
    Bounds,
    Dqn,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Vi => "vi",
            Suite::Qlearn => "qlearn",
            Suite::Bias => "bias",
            Suite::Bounds => "bounds",
            Suite::Dqn => "dqn",
        }
    }
}

/// Serializable operator descriptor used in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    Max,
    Boltzmann { beta: f64 },
    LogSumExp { beta: f64 },
    Dbs { c: f64, p: f64 },
}

impl OperatorSpec {
    pub fn to_operator(&self) -> Result<OperatorKind> {
        Ok(match *self {
            OperatorSpec::Max => OperatorKind::Max,
            OperatorSpec::Boltzmann { beta } => OperatorKind::Boltzmann { beta },
            OperatorSpec::LogSumExp { beta } => OperatorKind::LogSumExp { beta },
            OperatorSpec::Dbs { c, p } => OperatorKind::dbs_power(c, p)?,
        })
    }
}

fn default_vi_operators() -> Vec<OperatorSpec> {
    vec![
        OperatorSpec::Max,
        OperatorSpec::Dbs { c: 1.0, p: 1.0 },
        OperatorSpec::Dbs { c: 1.0, p: 2.0 },
        OperatorSpec::Dbs { c: 1.0, p: 3.0 },
        OperatorSpec::Boltzmann { beta: 1.0 },
        OperatorSpec::Boltzmann { beta: 10.0 },
        OperatorSpec::Boltzmann { beta: 100.0 },
    ]
}

fn default_qlearn_variants() -> Vec<OperatorSpec> {
    let mut variants = vec![
        OperatorSpec::Max,
        OperatorSpec::Dbs { c: 1.0, p: 1.0 },
        OperatorSpec::Dbs { c: 1.0, p: 2.0 },
        OperatorSpec::Dbs { c: 1.0, p: 3.0 },
    ];
    for exponent in 2..=6 {
        variants.push(OperatorSpec::LogSumExp {
            beta: 10f64.powi(exponent),
        });
    }
    variants
}

fn default_beta_grid() -> Vec<f64> {
    vec![0.1, 1.0, 10.0, 100.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViParams {
    pub iterations: usize,
    pub operators: Vec<OperatorSpec>,
}

impl Default for ViParams {
    fn default() -> Self {
        ViParams {
            iterations: 200,
            operators: default_vi_operators(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QlearnParams {
    pub episodes: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub variants: Vec<OperatorSpec>,
}

impl Default for QlearnParams {
    fn default() -> Self {
        QlearnParams {
            episodes: 5000,
            alpha: 0.1,
            epsilon: 0.1,
            variants: default_qlearn_variants(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasParams {
    pub trials: usize,
    pub m_values: Vec<usize>,
    pub samples_per_variable: usize,
    pub beta_grid: Vec<f64>,
}

impl Default for BiasParams {
    fn default() -> Self {
        BiasParams {
            trials: 100_000,
            m_values: vec![2, 5, 10],
            samples_per_variable: 1,
            beta_grid: default_beta_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsParams {
    pub gamma: f64,
    pub n_actions: usize,
    pub r_max: f64,
    pub betas: Vec<f64>,
    pub eps_values: Vec<f64>,
    pub p_values: Vec<f64>,
}

impl Default for BoundsParams {
    fn default() -> Self {
        BoundsParams {
            gamma: 0.9,
            n_actions: 4,
            r_max: 1.0,
            betas: vec![1.0, 10.0, 100.0],
            eps_values: vec![0.01, 0.001],
            p_values: vec![1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnParams {
    pub episodes: usize,
    /// Wall-free grid dimensions for the function-approximation task.
    pub width: usize,
    pub height: usize,
    pub c0: f64,
    /// Meta learning rate; `null` freezes the coefficient.
    pub eta: Option<f64>,
    pub snapshot_every: Option<usize>,
}

impl Default for DqnParams {
    fn default() -> Self {
        DqnParams {
            episodes: 3000,
            width: 6,
            height: 6,
            c0: 1.0,
            eta: Some(1e-4),
            snapshot_every: None,
        }
    }
}

/// Full description of one experiment invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub suite: Suite,
    /// Path to a GridWorld map file; `null` means the built-in 10x10 map.
    pub map: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub force: bool,
    pub vi: ViParams,
    pub qlearn: QlearnParams,
    pub bias: BiasParams,
    pub bounds: BoundsParams,
    pub dqn: DqnParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            suite: Suite::Vi,
            map: None,
            seeds: vec![0],
            out_dir: PathBuf::from("results"),
            workers: 1,
            force: false,
            vi: ViParams::default(),
            qlearn: QlearnParams::default(),
            bias: BiasParams::default(),
            bounds: BoundsParams::default(),
            dqn: DqnParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_suite(suite: Suite) -> Self {
        ExperimentConfig {
            suite,
            ..ExperimentConfig::default()
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::InvalidConfig {
            field: "json".into(),
            reason: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |field: &str, reason: &str| {
            Err(Error::InvalidConfig {
                field: field.into(),
                reason: reason.into(),
            })
        };
        if self.seeds.is_empty() {
            return invalid("seeds", "must be nonempty");
        }
        if self.workers == 0 {
            return invalid("workers", "must be >= 1");
        }
        if let Some(path) = &self.map {
            if !path.exists() {
                return invalid("map", &format!("file {} does not exist", path.display()));
            }
        }
        match self.suite {
            Suite::Vi => {
                if self.vi.iterations == 0 {
                    return invalid("vi.iterations", "must be >= 1");
                }
                if self.vi.operators.is_empty() {
                    return invalid("vi.operators", "must be nonempty");
                }
            }
            Suite::Qlearn => {
                if self.qlearn.episodes == 0 {
                    return invalid("qlearn.episodes", "must be >= 1");
                }
                if self.qlearn.variants.is_empty() {
                    return invalid("qlearn.variants", "must be nonempty");
                }
            }
            Suite::Bias => {
                if self.bias.trials == 0 {
                    return invalid("bias.trials", "must be >= 1");
                }
                if self.bias.m_values.iter().any(|&m| m == 0) {
                    return invalid("bias.m_values", "entries must be >= 1");
                }
            }
            Suite::Bounds => {
                if !(self.bounds.gamma > 0.0 && self.bounds.gamma < 1.0) {
                    return invalid("bounds.gamma", "must be in (0, 1)");
                }
            }
            Suite::Dqn => {
                if self.dqn.episodes == 0 {
                    return invalid("dqn.episodes", "must be >= 1");
                }
                if self.dqn.width < 2 || self.dqn.height < 1 {
                    return invalid("dqn.width/height", "grid must contain at least two cells");
                }
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        let mut hex = String::with_capacity(64);
        for byte in digest {
            write!(hex, "{byte:02x}").expect("writing to string");
        }
        hex
    }
}

/// In-memory artifact before it lands on disk.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn csv(name: String, header: &str, rows: Vec<String>) -> Self {
        let mut text = String::with_capacity(rows.len() * 32 + header.len() + 2);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row);
            text.push('\n');
        }
        Artifact {
            name,
            bytes: text.into_bytes(),
        }
    }
}

/// Completed run: where everything went plus human-readable summary lines.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config_hash: String,
    pub artifacts: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub duration: Duration,
}

/// Run jobs across a bounded worker pool; results keep job order.
pub fn run_parallel<J, T, F>(jobs: &[J], workers: usize, f: F) -> Vec<T>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> T + Sync,
{
    let workers = workers.max(1).min(jobs.len().max(1));
    if workers <= 1 {
        return jobs.iter().map(&f).collect();
    }
    let mut slots: Vec<Option<T>> = Vec::with_capacity(jobs.len());
    slots.resize_with(jobs.len(), || None);
    let slots = Mutex::new(slots);
    std::thread::scope(|scope| {
        for worker in 0..workers {
            let f = &f;
            let slots = &slots;
            scope.spawn(move || {
                for (i, job) in jobs.iter().enumerate() {
                    if i % workers == worker {
                        let result = f(job);
                        slots.lock().expect("pool mutex")[i] = Some(result);
                    }
                }
            });
        }
    });
    slots
        .into_inner()
        .expect("pool mutex")
        .into_iter()
        .map(|slot| slot.expect("every slot filled"))
        .collect()
}

fn load_world(config: &ExperimentConfig) -> Result<GridWorld> {
    match &config.map {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            build_gridworld(&GridWorldSpec::from_map_str(&text)?)
        }
        None => default_gridworld(),
    }
}

fn fmt_opt<T: std::fmt::Display>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Execute the configured suite, write every artifact atomically, and return
/// the record. Nothing is written if any target file already exists and
/// `force` is off.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let started = Instant::now();
    let run_id = &config.hash()[..8];
    let (artifacts, summary) = match config.suite {
        Suite::Vi => run_vi(config)?,
        Suite::Qlearn => run_qlearn(config, run_id)?,
        Suite::Bias => run_bias(config)?,
        Suite::Bounds => run_bounds(config)?,
        Suite::Dqn => run_dqn(config, run_id)?,
    };
    let paths = write_results(&artifacts, &config.out_dir, config.force, &config.hash())?;
    Ok(RunRecord {
        config_hash: config.hash(),
        artifacts: paths,
        summary,
        duration: started.elapsed(),
    })
}

fn run_vi(config: &ExperimentConfig) -> Result<(Vec<Artifact>, Vec<String>)> {
    let world = load_world(config)?;
    let v0 = vec![0.0; world.mdp.n_states()];
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    for &seed in &config.seeds {
        for spec in &config.vi.operators {
            let op = spec.to_operator()?;
            let record = vi_run(&world.mdp, &op, config.vi.iterations, &v0)?;
            let rows = record
                .losses
                .iter()
                .enumerate()
                .map(|(i, loss)| format!("{},{loss}", i + 1))
                .collect();
            let label = op.label();
            artifacts.push(Artifact::csv(
                format!("vi_{label}_{seed}.csv"),
                "iteration,loss",
                rows,
            ));
            summary.push(format!(
                "vi {label}: final loss {:.3e} after {} iterations",
                record.final_loss(),
                record.iterations
            ));
        }
    }
    Ok((artifacts, summary))
}

fn run_qlearn(config: &ExperimentConfig, run_id: &str) -> Result<(Vec<Artifact>, Vec<String>)> {
    let world = load_world(config)?;
    let mut jobs = Vec::new();
    for spec in &config.qlearn.variants {
        for &seed in &config.seeds {
            jobs.push((spec.clone(), seed));
        }
    }
    let results = run_parallel(&jobs, config.workers, |(spec, seed)| -> Result<_> {
        let op = spec.to_operator()?;
        let label = op.label();
        let mut learner = LearnerConfig::new(op, config.qlearn.episodes, *seed);
        learner.alpha = config.qlearn.alpha;
        learner.epsilon = config.qlearn.epsilon;
        let record = train(&world, &learner)?;
        Ok((label, *seed, record))
    });
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    for result in results {
        let (label, seed, record) = result?;
        let rows = record
            .stats
            .iter()
            .map(|e| {
                format!(
                    "{run_id},{label},{seed},{},{},{},{}",
                    e.episode, e.steps, e.total_reward, e.reached_goal
                )
            })
            .collect();
        summary.push(format!(
            "qlearn {label} seed {seed}: final-100 median steps {}",
            record.final_window_median_steps(100)
        ));
        artifacts.push(Artifact::csv(
            format!("qlearn_{label}_{seed}.csv"),
            "run_id,variant,seed,episode,steps,total_reward,reached_goal",
            rows,
        ));
    }
    Ok((artifacts, summary))
}

fn run_bias(config: &ExperimentConfig) -> Result<(Vec<Artifact>, Vec<String>)> {
    let params = &config.bias;
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    for &seed in &config.seeds {
        let mut rows = Vec::new();
        for &m in &params.m_values {
            let mut specs = equal_mean_gaussians(m);
            for spec in specs.iter_mut() {
                spec.samples = params.samples_per_variable;
            }
            let mut operators = vec![(OperatorKind::Max, None)];
            for &beta in &params.beta_grid {
                operators.push((OperatorKind::Boltzmann { beta }, Some(beta)));
            }
            for &beta in &params.beta_grid {
                operators.push((OperatorKind::LogSumExp { beta }, Some(beta)));
            }
            for (op, beta) in operators {
                // One stream per (M, operator) cell, all derived from the seed.
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let report = estimator_bias(&specs, &op, params.trials, &mut rng)?;
                let name = match op {
                    OperatorKind::Max => "max",
                    OperatorKind::Boltzmann { .. } => "boltzmann",
                    OperatorKind::LogSumExp { .. } => "log_sum_exp",
                    OperatorKind::Dbs { .. } => "dbs",
                };
                rows.push(format!(
                    "{name},{},{m},{},{},{},{},{seed}",
                    fmt_opt(beta),
                    params.samples_per_variable,
                    params.trials,
                    report.bias,
                    report.std_error
                ));
            }
        }
        summary.push(format!(
            "bias seed {seed}: {} rows over M={:?}",
            rows.len(),
            params.m_values
        ));
        artifacts.push(Artifact::csv(
            format!("bias_report_{seed}.csv"),
            "operator,beta,M,n,trials,bias,stderr,seed",
            rows,
        ));
    }
    Ok((artifacts, summary))
}

fn run_bounds(config: &ExperimentConfig) -> Result<(Vec<Artifact>, Vec<String>)> {
    let params = &config.bounds;
    let mut rows = Vec::new();
    let gamma = params.gamma;
    let actions = params.n_actions;
    let r_max = params.r_max;
    for &beta in &params.betas {
        let value = fixed_beta_error_bound(beta, gamma, actions, r_max)?;
        rows.push(format!(
            "fixed_beta_error_bound,{beta},,,{gamma},{actions},{r_max},{value}"
        ));
    }
    match tighter_bound_threshold(gamma, actions, r_max) {
        Ok(value) => rows.push(format!(
            "tighter_bound_threshold,,,,{gamma},{actions},{r_max},{value}"
        )),
        Err(Error::ThresholdUndefined { .. }) => rows.push(format!(
            "tighter_bound_threshold,,,,{gamma},{actions},{r_max},undefined"
        )),
        Err(e) => return Err(e),
    }
    for &eps in &params.eps_values {
        for &p in &params.p_values {
            let value = convergence_step_bound(eps, gamma, r_max, actions, p)?;
            rows.push(format!(
                "convergence_step_bound,,{eps},{p},{gamma},{actions},{r_max},{value}"
            ));
        }
    }
    let seed = config.seeds[0];
    let summary = vec![format!("bounds: {} rows (gamma={gamma})", rows.len())];
    let artifact = Artifact::csv(
        format!("bounds_table_{seed}.csv"),
        "quantity,beta,epsilon,p,gamma,n_actions,r_max,value",
        rows,
    );
    Ok((vec![artifact], summary))
}

fn run_dqn(config: &ExperimentConfig, run_id: &str) -> Result<(Vec<Artifact>, Vec<String>)> {
    let params = &config.dqn;
    let world = build_gridworld(&GridWorldSpec::wall_free(params.width, params.height))?;
    let jobs: Vec<u64> = config.seeds.clone();
    let results = run_parallel(&jobs, config.workers, |&seed| -> Result<_> {
        let mut cfg = DqnConfig::new(
            params.episodes,
            seed,
            TargetRule::Dbs {
                c0: params.c0,
                eta: params.eta,
            },
        );
        cfg.snapshot_every = params.snapshot_every;
        let record = train_dqn(&world, &cfg)?;
        Ok((seed, record))
    });
    let variant = if params.eta.is_some() { "meta" } else { "fixed" };
    let mut artifacts = Vec::new();
    let mut summary = Vec::new();
    for result in results {
        let (seed, record) = result?;
        let rows = record
            .episodes
            .iter()
            .map(|e| {
                format!(
                    "{run_id},{},{},{},{},{},{}",
                    e.episode,
                    e.steps,
                    e.total_reward,
                    e.epsilon,
                    fmt_opt(e.c),
                    fmt_opt(e.loss_mean)
                )
            })
            .collect();
        artifacts.push(Artifact::csv(
            format!("dqn_{variant}_{seed}.csv"),
            "run_id,episode,steps,return,epsilon,c,loss_mean",
            rows,
        ));
        for (episode, theta) in &record.snapshots {
            let model = ApproxModel {
                arch: Architecture::Linear,
                input_dim: world.mdp.n_states(),
                n_actions: world.mdp.n_actions(),
                theta: theta.clone(),
            };
            artifacts.push(Artifact {
                name: format!("dqn_{variant}_{seed}_ep{episode}.snap"),
                bytes: snapshot_bytes(&model),
            });
        }
        summary.push(format!(
            "dqn {variant} seed {seed}: final-200 success rate {:.3}",
            record.final_success_rate(200)
        ));
    }
    Ok((artifacts, summary))
}


/// Write artifacts into `dir` (tmp file + rename) plus a `run_manifest.json`
/// listing the config hash and every artifact. Refuses to touch existing
/// files unless `force` is set; the existence check runs before any write.
pub fn write_results(
    artifacts: &[Artifact],
    dir: &Path,
    force: bool,
    config_hash: &str,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let manifest_path = dir.join("run_manifest.json");
    let mut targets: Vec<PathBuf> = artifacts.iter().map(|a| dir.join(&a.name)).collect();
    targets.push(manifest_path.clone());
    if !force {
        for target in &targets {
            if target.exists() {
                return Err(Error::WouldOverwrite {
                    path: target.clone(),
                });
            }
        }
    }

    let names: Vec<&str> = artifacts.iter().map(|a| a.name.as_str()).collect();
    let manifest = serde_json::json!({
        "config_sha256": config_hash,
        "artifacts": names,
    });
    let manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");

    let mut written = Vec::with_capacity(artifacts.len());
    for artifact in artifacts {
        let target = dir.join(&artifact.name);
        atomic_write(&target, &artifact.bytes)?;
        written.push(target);
    }
    atomic_write(&manifest_path, &manifest_bytes)?;
    written.push(manifest_path);
    Ok(written)
}

fn atomic_write(target: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = target.with_extension("tmp");
    let io_err = |source| Error::Io {
        path: target.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(&tmp).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    fs::rename(&tmp, target).map_err(io_err)
}

/// Seven-level unicode sparkline of a value series.
pub fn sparkline(values: &[f64]) -> String {
    const BARS: [char; 8] = ['\u{2581}', '\u{2582}', '\u{2583}', '\u{2584}', '\u{2585}', '\u{2586}', '\u{2587}', '\u{2588}'];
    if values.is_empty() {
        return String::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    values
        .iter()
        .map(|&v| {
            let level = ((v - lo) / span * 7.0).round() as usize;
            BARS[level.min(7)]
        })
        .collect()
}
