//! Reproducible experiment harness: initialization with a random observation
//! subset, optional cross-validated kernel hyperparameters, multi-trial
//! execution, regret aggregation with confidence intervals, and CSV export.
//!
//! Every run is a pure function of its [`ExperimentConfig`]: all randomness
//! is derived from the master seed with splitmix chains, trials run on
//! independent streams, and results are reduced in trial order regardless of
//! completion order.

pub mod config;
pub mod csvio;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{splitmix64, Grid, GridSpec};
use crate::info::{c1, mutual_information};
use crate::kernel::{Kernel, KernelFamily};
use crate::objectives::Objective;
use crate::points::Points;
use crate::policies::{GridSearch, Policy, PolicyKind};
use crate::posterior::PosteriorState;

pub use config::parse_config;

/// Which benchmark objective to run, with its construction seed.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSpec {
    Branin,
    GoldsteinPrice,
    Himmelblau,
    GaussianMixture { seed: u64 },
    GeneratedGp { dim: usize, seed: u64 },
    MackeyGlass,
}

impl ObjectiveSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveSpec::Branin => "branin",
            ObjectiveSpec::GoldsteinPrice => "goldstein_price",
            ObjectiveSpec::Himmelblau => "himmelblau",
            ObjectiveSpec::GaussianMixture { .. } => "gaussian_mixture",
            ObjectiveSpec::GeneratedGp { dim: 2, .. } => "generated_gp_d2",
            ObjectiveSpec::GeneratedGp { .. } => "generated_gp_d4",
            ObjectiveSpec::MackeyGlass => "mackey_glass",
        }
    }

    pub fn build(&self, grid: Option<&GridSpec>) -> Result<Objective> {
        match self {
            ObjectiveSpec::Branin => {
                Objective::branin(grid.cloned().unwrap_or(GridSpec::Lattice { per_axis: 101 }))
            }
            ObjectiveSpec::GoldsteinPrice => Objective::goldstein_price(
                grid.cloned().unwrap_or(GridSpec::Lattice { per_axis: 101 }),
            ),
            ObjectiveSpec::Himmelblau => {
                Objective::himmelblau(grid.cloned().unwrap_or(GridSpec::Lattice { per_axis: 101 }))
            }
            ObjectiveSpec::GaussianMixture { seed } => {
                if let Some(GridSpec::Lattice { per_axis }) = grid {
                    let mut params = crate::objectives::MixtureParams::standard(*seed);
                    params.grid_per_axis = *per_axis;
                    Objective::gaussian_mixture_custom(&params)
                } else if grid.is_none() {
                    Objective::gaussian_mixture(*seed)
                } else {
                    Err(Error::Config("the mixture task needs a lattice grid".into()))
                }
            }
            ObjectiveSpec::GeneratedGp { dim, seed } => {
                if grid.is_some() {
                    return Err(Error::Config(
                        "generated GP tasks fix their own grid (the draw lives on it)".into(),
                    ));
                }
                Objective::generated_gp(*dim, *seed)
            }
            ObjectiveSpec::MackeyGlass => Objective::mackey_glass(
                grid.cloned().unwrap_or(GridSpec::LowDiscrepancy { count: 4096, seed: 0 }),
            ),
        }
    }
}

/// Kernel selection: fixed (known prior) or cross-validated length scale.
#[derive(Debug, Clone, PartialEq)]
pub enum HyperMode {
    Fixed(Kernel),
    CrossValidated,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub objective: ObjectiveSpec,
    pub policy: PolicyKind,
    pub delta: f64,
    pub horizon: usize,
    pub trials: usize,
    pub init_observations: usize,
    /// `None` uses the objective's default discretization.
    pub grid: Option<GridSpec>,
    pub hyper: HyperMode,
    pub master_seed: u64,
    /// Lower bound on the model noise variance so noiseless tasks keep a
    /// well-posed information budget.
    pub noise_floor: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if self.init_observations == 0 {
            return Err(Error::Config("need at least one initial observation".into()));
        }
        if !(self.noise_floor > 0.0) {
            return Err(Error::Config(format!(
                "noise floor must be positive, got {}",
                self.noise_floor
            )));
        }
        Ok(())
    }
}

/// One per-step record; `t = 0` rows are the initialization observations.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    /// Grid index of the query.
    pub index: usize,
    pub y: f64,
    pub regret: f64,
    pub cum_regret: f64,
    pub avg_regret: f64,
    pub gamma_hat: f64,
    pub phi: f64,
    pub sigma2: f64,
    /// Posterior variance at the known maximizer when the query was chosen
    /// (absent on init rows); consumed by the diagnostics, not exported.
    pub sigma2_star: Option<f64>,
}

/// Per-trial record of queries, observations and regret.
#[derive(Debug, Clone)]
pub struct RegretTrace {
    pub trial: usize,
    pub trial_seed: u64,
    pub policy: PolicyKind,
    pub steps: Vec<StepRecord>,
    pub alpha: f64,
    pub delta: f64,
    /// Mutual information of the selected query multiset under the model.
    pub selected_mi: f64,
    /// Structured failure, if the trial aborted; partial steps retained.
    pub failed: Option<String>,
}

impl RegretTrace {
    pub fn final_gamma_hat(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.gamma_hat)
    }

    pub fn final_cum_regret(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cum_regret)
    }

    /// Rows for policy steps only (t >= 1).
    pub fn policy_steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.steps.iter().filter(|s| s.t > 0)
    }

    pub fn avg_regret_at(&self, t: usize) -> Option<f64> {
        self.policy_steps().find(|s| s.t == t).map(|s| s.avg_regret)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub t: usize,
    pub mean_avg_regret: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub n: usize,
}

/// Per-t sample mean of `R_t / t` with a 95% normal-approximation interval.
pub fn aggregate(traces: &[RegretTrace]) -> Result<Vec<AggregateRow>> {
    let ok: Vec<&RegretTrace> = traces.iter().filter(|t| t.failed.is_none()).collect();
    if ok.len() < 2 {
        return Err(Error::Input(format!(
            "aggregation needs at least 2 successful traces, got {}",
            ok.len()
        )));
    }
    let horizon = ok[0].policy_steps().count();
    if ok.iter().any(|t| t.policy_steps().count() != horizon) {
        return Err(Error::Input("traces have mixed horizons".into()));
    }
    let mut rows = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let values: Vec<f64> = ok.iter().map(|tr| tr.avg_regret_at(t).unwrap()).collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let half = 1.96 * (var / n).sqrt();
        rows.push(AggregateRow {
            t,
            mean_avg_regret: mean,
            ci_lower: mean - half,
            ci_upper: mean + half,
            n: values.len(),
        });
    }
    Ok(rows)
}

// --- seed derivation ---------------------------------------------------------

const SALT_TRIAL: u64 = 0x7472_6961_6c00_0001; // "trial"
const SALT_HYPER: u64 = 0x6879_7065_7200_0001; // "hyper"

/// Stable seed chain: fold each part through splitmix64.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243f_6a88_85a3_08d3, |acc, &p| splitmix64(acc ^ p))
}

pub fn trial_seed(master_seed: u64, trial_index: usize) -> u64 {
    derive_seed(&[master_seed, SALT_TRIAL, trial_index as u64])
}

// --- hyperparameter estimation -------------------------------------------------

/// Number of candidate length scales on the logarithmic grid.
const CV_GRID: usize = 16;
const CV_FOLDS: usize = 5;

/// Candidate RBF length scales: 16 log-spaced values spanning
/// `[1e-2, 1e2] x diameter` of the sample cloud.
pub fn length_scale_grid(diameter: f64) -> Vec<f64> {
    (0..CV_GRID)
        .map(|j| diameter * 10f64.powf(-2.0 + 4.0 * j as f64 / (CV_GRID - 1) as f64))
        .collect()
}

/// Selects an RBF length scale by 5-fold cross-validated squared predictive
/// error; fold assignment is a seeded shuffle, so the result is a pure
/// function of the inputs.
pub fn estimate_hyperparams(
    samples: &[(Vec<f64>, f64)],
    master_seed: u64,
    noise_var: f64,
) -> Result<Kernel> {
    if samples.len() < 10 {
        return Err(Error::Input(format!(
            "hyperparameter estimation needs >= 10 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len();
    let mean_y = samples.iter().map(|(_, y)| y).sum::<f64>() / n as f64;
    let var_y = samples.iter().map(|(_, y)| (y - mean_y) * (y - mean_y)).sum::<f64>() / n as f64;
    if !(var_y > 1e-30) {
        return Err(Error::Config("samples are constant; cannot estimate a length scale".into()));
    }
    let dim = samples[0].0.len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for (x, _) in samples {
        for a in 0..dim {
            lo[a] = lo[a].min(x[a]);
            hi[a] = hi[a].max(x[a]);
        }
    }
    let diameter = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (h - l) * (h - l))
        .sum::<f64>()
        .sqrt()
        .max(1e-12);

    // Seeded shuffle, then round-robin fold assignment.
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[master_seed, SALT_HYPER]));
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let fold_of: Vec<usize> = {
        let mut f = vec![0usize; n];
        for (rank, &idx) in order.iter().enumerate() {
            f[idx] = rank % CV_FOLDS;
        }
        f
    };

    let mut best: Option<(f64, f64)> = None; // (sse, length_scale)
    for &l in &length_scale_grid(diameter) {
        let kernel = Kernel::rbf(l)?;
        let mut sse = 0.0f64;
        for fold in 0..CV_FOLDS {
            let mut train = Points::new(dim);
            let mut ys = Vec::new();
            for (i, (x, y)) in samples.iter().enumerate() {
                if fold_of[i] != fold {
                    train.push(x)?;
                    ys.push(*y);
                }
            }
            let state = match PosteriorState::fit(kernel.clone(), train, ys, noise_var) {
                Ok(s) => s,
                Err(Error::Numerical(_)) => {
                    sse = f64::INFINITY; // this length scale is hopeless
                    break;
                }
                Err(e) => return Err(e),
            };
            for (i, (x, y)) in samples.iter().enumerate() {
                if fold_of[i] == fold {
                    let e = state.mean(x)? - y;
                    sse += e * e;
                }
            }
        }
        let better = match best {
            None => true,
            Some((s, _)) => sse < s,
        };
        if better {
            best = Some((sse, l));
        }
    }
    let (_, l) = best.expect("non-empty length-scale grid");
    Kernel::rbf(l)
}

// --- trial execution -----------------------------------------------------------

/// Everything shared by the trials of one experiment.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: ExperimentConfig,
    pub objective: Objective,
    pub kernel: Kernel,
    pub model_noise_var: f64,
}

impl RunContext {
    /// Builds the objective and resolves the kernel (running the
    /// cross-validation pre-sample when asked to).
    pub fn prepare(config: ExperimentConfig) -> Result<RunContext> {
        config.validate()?;
        let objective = config.objective.build(config.grid.as_ref())?;
        let model_noise_var =
            (objective.noise_std() * objective.noise_std()).max(config.noise_floor);
        let kernel = match &config.hyper {
            HyperMode::Fixed(k) => k.clone(),
            HyperMode::CrossValidated => {
                // A 200-point pre-sample disjoint from the optimization runs,
                // used for hyperparameter estimation only.
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(&[config.master_seed, SALT_HYPER, 1]));
                let n_pre = 200.min(objective.grid().len());
                let idx = rand::seq::index::sample(&mut rng, objective.grid().len(), n_pre);
                let samples: Vec<(Vec<f64>, f64)> = idx
                    .iter()
                    .map(|i| {
                        (
                            objective.grid().point(i).to_vec(),
                            objective.evaluate_noisy_at(i, &mut rng),
                        )
                    })
                    .collect();
                estimate_hyperparams(&samples, config.master_seed, model_noise_var)?
            }
        };
        Ok(RunContext { config, objective, kernel, model_noise_var })
    }

    pub fn alpha(&self) -> f64 {
        (2.0 / self.config.delta).ln()
    }
}

/// Runs one trial: draws the initial observation subset, fits the posterior,
/// then loops select/observe for the configured horizon.
pub fn run_trial(ctx: &RunContext, trial_index: usize) -> RegretTrace {
    let seed = trial_seed(ctx.config.master_seed, trial_index);
    let mut trace = RegretTrace {
        trial: trial_index,
        trial_seed: seed,
        policy: ctx.config.policy,
        steps: Vec::with_capacity(ctx.config.init_observations + ctx.config.horizon),
        alpha: ctx.alpha(),
        delta: ctx.config.delta,
        selected_mi: 0.0,
        failed: None,
    };
    if let Err(e) = run_trial_inner(ctx, seed, &mut trace) {
        trace.failed = Some(e.to_string());
    }
    trace
}

fn run_trial_inner(ctx: &RunContext, seed: u64, trace: &mut RegretTrace) -> Result<()> {
    let objective = &ctx.objective;
    let grid = objective.grid();
    let star = objective.max_index();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Initialization: a uniform random subset of the grid, observed noisily.
    let n_init = ctx.config.init_observations.min(grid.len());
    let init = rand::seq::index::sample(&mut rng, grid.len(), n_init);
    let mut pts = Points::with_capacity(grid.dim(), n_init);
    let mut ys = Vec::with_capacity(n_init);
    for i in init.iter() {
        pts.push(grid.point(i))?;
        let y = objective.evaluate_noisy_at(i, &mut rng);
        ys.push(y);
        trace.steps.push(StepRecord {
            t: 0,
            index: i,
            y,
            regret: objective.regret_at(i),
            cum_regret: 0.0,
            avg_regret: 0.0,
            gamma_hat: 0.0,
            phi: 0.0,
            sigma2: 0.0,
            sigma2_star: None,
        });
    }

    let posterior = PosteriorState::fit(ctx.kernel.clone(), pts, ys, ctx.model_noise_var)?;
    let mut search = GridSearch::new(grid.clone(), posterior)?;
    let mut policy = Policy::new(ctx.config.policy, ctx.config.delta)?;

    let mut cum = KahanSum::default();
    let mut selected = Points::new(grid.dim());
    for t in 1..=ctx.config.horizon {
        let sigma2_star = search.sigma2_at(star);
        let sel = policy.select_next(&search)?;
        let y = objective.evaluate_noisy_at(sel.index, &mut rng);
        policy.observe(&mut search, sel.index, y)?;
        selected.push(grid.point(sel.index))?;
        cum.add(objective.regret_at(sel.index));
        let cum_regret = cum.value();
        trace.steps.push(StepRecord {
            t,
            index: sel.index,
            y,
            regret: objective.regret_at(sel.index),
            cum_regret,
            avg_regret: cum_regret / t as f64,
            gamma_hat: policy.gamma_hat(),
            phi: sel.phi,
            sigma2: sel.sigma2,
            sigma2_star: Some(sigma2_star),
        });
    }
    trace.selected_mi = mutual_information(&ctx.kernel, &selected, ctx.model_noise_var)?;
    Ok(())
}

/// Compensated accumulator for exact-as-serialized regret sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let y = v - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// The complete result of one experiment.
#[derive(Debug)]
pub struct ExperimentResult {
    pub context: RunContext,
    pub traces: Vec<RegretTrace>,
    pub aggregate: Vec<AggregateRow>,
}

/// Runs all trials (in parallel, reduced in trial order) and aggregates.
pub fn run_experiment(config: ExperimentConfig) -> Result<ExperimentResult> {
    let ctx = RunContext::prepare(config)?;
    let traces: Vec<RegretTrace> =
        (0..ctx.config.trials).into_par_iter().map(|i| run_trial(&ctx, i)).collect();
    let aggregate = aggregate(&traces)?;
    Ok(ExperimentResult { context: ctx, traces, aggregate })
}

// --- manifest and output writing -------------------------------------------------

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub task: String,
    pub policy: String,
    pub delta: f64,
    pub alpha: f64,
    pub horizon: usize,
    pub trials: usize,
    pub failed_trials: usize,
    pub init_observations: usize,
    pub master_seed: u64,
    pub grid_points: usize,
    pub grid_dim: usize,
    pub kernel: String,
    pub hyper_mode: String,
    pub model_noise_var: f64,
    pub objective_noise_std: f64,
    pub standardization_mean: f64,
    pub standardization_std: f64,
    pub max_value: f64,
    pub max_point: Vec<f64>,
    pub flagged_evaluations: usize,
    /// Worst slack of `gamma_hat <= c1 * I(X_T)` across successful traces
    /// (positive means satisfied).
    pub info_bound_min_slack: f64,
    /// Greedy information surrogate (inflated upper proxy) when the grid is
    /// small enough to afford it.
    pub greedy_info_proxy: Option<f64>,
}

pub fn describe_kernel(k: &Kernel) -> String {
    match k.family {
        KernelFamily::SquaredExponential => format!("rbf(l={})", k.length_scale),
        KernelFamily::Matern(nu) => {
            format!("matern(nu={}, l={})", nu.value(), k.length_scale)
        }
        KernelFamily::Linear => format!("linear(l={})", k.length_scale),
    }
}

impl ExperimentResult {
    pub fn manifest(&self) -> RunManifest {
        let ctx = &self.context;
        let c1v = c1(ctx.model_noise_var).expect("model noise is positive");
        let min_slack = self
            .traces
            .iter()
            .filter(|t| t.failed.is_none())
            .map(|t| c1v * t.selected_mi - t.final_gamma_hat())
            .fold(f64::INFINITY, f64::min);
        let greedy_info_proxy = if ctx.objective.grid().len() <= 512 && ctx.config.horizon <= 64 {
            crate::info::greedy_gamma_bound(
                &ctx.kernel,
                ctx.objective.grid().points(),
                ctx.config.horizon.min(ctx.objective.grid().len()),
                ctx.model_noise_var,
            )
            .ok()
            .map(|g| g * crate::info::greedy_inflation())
        } else {
            None
        };
        RunManifest {
            task: ctx.objective.name().to_string(),
            policy: ctx.config.policy.name().to_string(),
            delta: ctx.config.delta,
            alpha: ctx.alpha(),
            horizon: ctx.config.horizon,
            trials: ctx.config.trials,
            failed_trials: self.traces.iter().filter(|t| t.failed.is_some()).count(),
            init_observations: ctx.config.init_observations,
            master_seed: ctx.config.master_seed,
            grid_points: ctx.objective.grid().len(),
            grid_dim: ctx.objective.grid().dim(),
            kernel: describe_kernel(&ctx.kernel),
            hyper_mode: match ctx.config.hyper {
                HyperMode::Fixed(_) => "fixed".into(),
                HyperMode::CrossValidated => "cross_validated".into(),
            },
            model_noise_var: ctx.model_noise_var,
            objective_noise_std: ctx.objective.noise_std(),
            standardization_mean: ctx.objective.standardization().0,
            standardization_std: ctx.objective.standardization().1,
            max_value: ctx.objective.max_value(),
            max_point: ctx.objective.max_point().to_vec(),
            flagged_evaluations: ctx.objective.flagged_evaluations(),
            info_bound_min_slack: min_slack,
            greedy_info_proxy,
        }
    }

    /// Writes `traces.csv`, `aggregate.csv` and `run_manifest.json`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        csvio::write_traces_csv(
            &dir.join("traces.csv"),
            self.context.objective.name(),
            self.context.config.policy.name(),
            self.context.objective.grid(),
            &self.traces,
        )?;
        csvio::write_aggregate_csv(&dir.join("aggregate.csv"), &self.aggregate)?;
        let manifest = serde_json::to_string_pretty(&self.manifest())
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        std::fs::write(dir.join("run_manifest.json"), manifest + "\n")?;
        Ok(())
    }
}

// --- benchmark suite ---------------------------------------------------------------

/// The benchmark protocol: every synthetic task crossed with the three
/// policies under a shared master seed.
pub fn paper_suite(
    master_seed: u64,
    trials: usize,
    horizon: usize,
) -> Vec<ExperimentConfig> {
    let objectives = [
        ObjectiveSpec::GeneratedGp { dim: 2, seed: splitmix64(master_seed ^ 1) },
        ObjectiveSpec::GeneratedGp { dim: 4, seed: splitmix64(master_seed ^ 2) },
        ObjectiveSpec::GaussianMixture { seed: splitmix64(master_seed ^ 3) },
        ObjectiveSpec::Himmelblau,
        ObjectiveSpec::Branin,
        ObjectiveSpec::GoldsteinPrice,
        ObjectiveSpec::MackeyGlass,
    ];
    let policies = [PolicyKind::GpMi, PolicyKind::GpUcb, PolicyKind::ExpectedImprovement];
    let mut configs = Vec::new();
    for objective in &objectives {
        for &policy in &policies {
            configs.push(ExperimentConfig {
                objective: objective.clone(),
                policy,
                delta: 1e-6,
                horizon,
                trials,
                init_observations: 10,
                grid: None,
                hyper: config::default_hyper(objective),
                master_seed,
                noise_floor: 1e-6,
            });
        }
    }
    configs
}

/// Runs a suite of experiments, writing one directory per (task, policy).
pub fn run_suite(configs: &[ExperimentConfig], out: &Path) -> Result<Vec<RunManifest>> {
    std::fs::create_dir_all(out)?;
    let mut manifests = Vec::new();
    for cfg in configs {
        let label = format!("{}__{}", cfg.objective.name(), cfg.policy.name());
        let result = run_experiment(cfg.clone())?;
        result.write_to(&out.join(&label))?;
        manifests.push(result.manifest());
    }
    let summary = serde_json::to_string_pretty(&manifests)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(out.join("suite_manifest.json"), summary + "\n")?;
    Ok(manifests)
}
