//! Flat key-value experiment configuration files.
//!
//! Grammar: one `key = value` per line, `#` starts a comment, blank lines
//! ignored. Unknown keys are rejected.
//!
//! ```text
//! objective  = himmelblau        # branin | goldstein_price | himmelblau |
//!                                # gaussian_mixture | generated_gp_d2 |
//!                                # generated_gp_d4 | mackey_glass
//! objective_seed = 1
//! policy     = gp_mi             # gp_mi | gp_ucb | fixed_phi | ei
//! delta      = 1e-6
//! horizon    = 200
//! trials     = 100
//! init_observations = 10
//! grid       = lattice:101       # lattice:<per-axis> | lowdisc:<count>
//! hyper      = cv                # cv | fixed_rbf:<l> | fixed_matern:<nu>:<l>
//! master_seed = 7
//! noise_floor = 1e-6             # lower bound on the model noise variance
//! ```

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::harness::{ExperimentConfig, HyperMode, ObjectiveSpec};
use crate::kernel::{Kernel, MaternNu};
use crate::policies::PolicyKind;

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut objective: Option<String> = None;
    let mut objective_seed: u64 = 1;
    let mut policy: Option<PolicyKind> = None;
    let mut delta = 1e-6;
    let mut horizon = 200usize;
    let mut trials = 100usize;
    let mut init_observations = 10usize;
    let mut grid: Option<GridSpec> = None;
    let mut hyper: Option<HyperMode> = None;
    let mut master_seed = 0u64;
    let mut noise_floor = 1e-6;

    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected 'key = value', got '{raw}'", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("line {}: bad {what} '{value}'", lineno + 1));
        match key {
            "objective" => objective = Some(value.to_string()),
            "objective_seed" => objective_seed = value.parse().map_err(|_| bad("seed"))?,
            "policy" => policy = Some(PolicyKind::parse(value)?),
            "delta" => delta = value.parse().map_err(|_| bad("delta"))?,
            "horizon" => horizon = value.parse().map_err(|_| bad("horizon"))?,
            "trials" => trials = value.parse().map_err(|_| bad("trials"))?,
            "init_observations" => {
                init_observations = value.parse().map_err(|_| bad("init_observations"))?
            }
            "grid" => grid = Some(parse_grid(value)?),
            "hyper" => hyper = Some(parse_hyper(value)?),
            "master_seed" => master_seed = value.parse().map_err(|_| bad("master_seed"))?,
            "noise_floor" => noise_floor = value.parse().map_err(|_| bad("noise_floor"))?,
            other => {
                return Err(Error::Config(format!("line {}: unknown key '{other}'", lineno + 1)))
            }
        }
    }

    let objective = objective.ok_or_else(|| Error::Config("missing key 'objective'".into()))?;
    let objective = parse_objective(&objective, objective_seed)?;
    let policy = policy.ok_or_else(|| Error::Config("missing key 'policy'".into()))?;
    let hyper = hyper.unwrap_or_else(|| default_hyper(&objective));
    let cfg = ExperimentConfig {
        objective,
        policy,
        delta,
        horizon,
        trials,
        init_observations,
        grid,
        hyper,
        master_seed,
        noise_floor,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_objective(name: &str, seed: u64) -> Result<ObjectiveSpec> {
    Ok(match name {
        "branin" => ObjectiveSpec::Branin,
        "goldstein_price" => ObjectiveSpec::GoldsteinPrice,
        "himmelblau" => ObjectiveSpec::Himmelblau,
        "gaussian_mixture" => ObjectiveSpec::GaussianMixture { seed },
        "generated_gp_d2" => ObjectiveSpec::GeneratedGp { dim: 2, seed },
        "generated_gp_d4" => ObjectiveSpec::GeneratedGp { dim: 4, seed },
        "mackey_glass" => ObjectiveSpec::MackeyGlass,
        other => return Err(Error::Config(format!("unknown objective '{other}'"))),
    })
}

/// Tasks drawn from a known prior run with that prior fixed; everything else
/// estimates an RBF length scale by cross validation.
pub fn default_hyper(objective: &ObjectiveSpec) -> HyperMode {
    match objective {
        ObjectiveSpec::GeneratedGp { dim, .. } => HyperMode::Fixed(
            crate::objectives::Objective::generated_gp_kernel(*dim)
                .expect("generated GP dims are 2 or 4"),
        ),
        _ => HyperMode::CrossValidated,
    }
}

fn parse_grid(value: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        ["lattice", n] => Ok(GridSpec::Lattice {
            per_axis: n.parse().map_err(|_| Error::Config(format!("bad lattice size '{n}'")))?,
        }),
        ["lowdisc", n] => Ok(GridSpec::LowDiscrepancy {
            count: n.parse().map_err(|_| Error::Config(format!("bad point count '{n}'")))?,
            seed: 0,
        }),
        _ => Err(Error::Config(format!(
            "bad grid '{value}' (expected lattice:<n> or lowdisc:<n>)"
        ))),
    }
}

fn parse_hyper(value: &str) -> Result<HyperMode> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        ["cv"] => Ok(HyperMode::CrossValidated),
        ["fixed_rbf", l] => {
            let l: f64 = l.parse().map_err(|_| Error::Config(format!("bad length scale '{l}'")))?;
            Ok(HyperMode::Fixed(Kernel::rbf(l)?))
        }
        ["fixed_matern", nu, l] => {
            let nu: f64 = nu.parse().map_err(|_| Error::Config(format!("bad nu '{nu}'")))?;
            let l: f64 = l.parse().map_err(|_| Error::Config(format!("bad length scale '{l}'")))?;
            Ok(HyperMode::Fixed(Kernel::matern(MaternNu::from_value(nu)?, l)?))
        }
        _ => Err(Error::Config(format!(
            "bad hyper '{value}' (expected cv, fixed_rbf:<l> or fixed_matern:<nu>:<l>)"
        ))),
    }
}
