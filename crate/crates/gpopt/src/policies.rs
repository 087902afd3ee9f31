//! Acquisition policies over a finite candidate grid.
//!
//! All policies share one generic scheme: query the candidate maximizing
//! `mu_t(x) + phi_t(x)` for a policy-specific exploration bonus `phi_t`
//! (expected improvement scores its own functional instead). The bonuses:
//!
//! * `GpMi`     — `sqrt(alpha) (sqrt(sigma_t^2(x) + g) - sqrt(g))` where `g`
//!   is the accumulated sum of posterior variances at the queried points;
//!   the more information gathered, the smaller the bonus.
//! * `GpUcb`    — `sqrt(beta_t sigma_t^2(x))` with `beta_t` growing
//!   logarithmically in `t`.
//! * `FixedPhi` — `(sqrt(alpha)/2) sigma_t^2(x)`, a t-independent variant.
//! * `ExpectedImprovement` — the classical improvement heuristic against the
//!   best noisy observation.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::info::InfoAccumulator;
use crate::posterior::PosteriorState;

// --- exploration functions -------------------------------------------------

/// Information-controlled bonus `sqrt(alpha) (sqrt(s2 + g) - sqrt(g))`.
#[inline]
pub fn phi_gpmi(sigma2: f64, gamma_hat_prev: f64, alpha: f64) -> f64 {
    debug_assert!(sigma2 >= 0.0 && gamma_hat_prev >= 0.0 && alpha > 0.0);
    alpha.sqrt() * ((sigma2 + gamma_hat_prev).sqrt() - gamma_hat_prev.sqrt())
}

/// Confidence-bound schedule for a finite candidate set of size `grid_size`:
/// `beta_t = 2 log(grid_size t^2 pi^2 / (6 delta))`.
#[inline]
pub fn beta_ucb(t: usize, delta: f64, grid_size: usize) -> f64 {
    debug_assert!(t >= 1 && delta > 0.0 && delta < 1.0 && grid_size >= 1);
    let t = t as f64;
    2.0 * (grid_size as f64 * t * t * std::f64::consts::PI.powi(2) / (6.0 * delta)).ln()
}

/// `sqrt(beta_t * s2)`.
#[inline]
pub fn phi_ucb(sigma2: f64, t: usize, delta: f64, grid_size: usize) -> f64 {
    (beta_ucb(t, delta, grid_size) * sigma2).sqrt()
}

/// The t-independent bonus `(sqrt(alpha)/2) s2`.
#[inline]
pub fn phi_fixed(sigma2: f64, alpha: f64) -> f64 {
    debug_assert!(sigma2 >= 0.0 && alpha > 0.0);
    0.5 * alpha.sqrt() * sigma2
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF through the error function.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// `E[max(N(mu, sigma^2) - incumbent, 0)]` in closed form.
#[inline]
pub fn expected_improvement(mu: f64, sigma: f64, incumbent: f64) -> f64 {
    debug_assert!(sigma >= 0.0);
    if sigma == 0.0 {
        return (mu - incumbent).max(0.0);
    }
    let z = (mu - incumbent) / sigma;
    ((mu - incumbent) * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
}

// --- policy ----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    GpMi,
    GpUcb,
    FixedPhi,
    ExpectedImprovement,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::GpMi => "gp_mi",
            PolicyKind::GpUcb => "gp_ucb",
            PolicyKind::FixedPhi => "fixed_phi",
            PolicyKind::ExpectedImprovement => "ei",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gp_mi" => Ok(PolicyKind::GpMi),
            "gp_ucb" => Ok(PolicyKind::GpUcb),
            "fixed_phi" => Ok(PolicyKind::FixedPhi),
            "ei" => Ok(PolicyKind::ExpectedImprovement),
            other => Err(Error::Config(format!(
                "unknown policy '{other}' (expected gp_mi, gp_ucb, fixed_phi or ei)"
            ))),
        }
    }
}

/// What `select_next` decided, echoed back by `observe` for the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub mean: f64,
    pub sigma2: f64,
    pub phi: f64,
    pub score: f64,
}

/// A sequential acquisition strategy with its internal statistics.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    delta: f64,
    alpha: f64,
    step: usize,
    info: InfoAccumulator,
    incumbent: Option<f64>,
    pending: Option<Selection>,
}

impl Policy {
    /// `alpha` is always derived as `log(2 / delta)`.
    pub fn new(kind: PolicyKind, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Policy {
            kind,
            delta,
            alpha: (2.0 / delta).ln(),
            step: 1,
            info: InfoAccumulator::new(),
            incumbent: None,
            pending: None,
        })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The iteration counter `t`, starting at 1 and advancing once per
    /// select/observe cycle.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn gamma_hat(&self) -> f64 {
        self.info.gamma_hat()
    }

    pub fn info(&self) -> &InfoAccumulator {
        &self.info
    }

    pub fn incumbent(&self) -> Option<f64> {
        self.incumbent
    }

    /// Exploration bonus of this policy at the current step.
    pub fn bonus(&self, sigma2: f64, grid_size: usize) -> f64 {
        match self.kind {
            PolicyKind::GpMi => phi_gpmi(sigma2, self.info.gamma_hat(), self.alpha),
            PolicyKind::GpUcb => phi_ucb(sigma2, self.step, self.delta, grid_size),
            PolicyKind::FixedPhi => phi_fixed(sigma2, self.alpha),
            PolicyKind::ExpectedImprovement => 0.0,
        }
    }

    fn effective_incumbent(&self, search_obs: &[f64]) -> f64 {
        let from_data = search_obs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match self.incumbent {
            Some(v) => v.max(from_data),
            None => from_data,
        }
    }

    fn score(&self, mean: f64, sigma2: f64, grid_size: usize, incumbent: f64) -> (f64, f64) {
        match self.kind {
            PolicyKind::ExpectedImprovement => {
                let sigma = sigma2.max(0.0).sqrt();
                if incumbent == f64::NEG_INFINITY {
                    // No observation yet: fall back to pure exploration.
                    (sigma, sigma)
                } else {
                    let ei = expected_improvement(mean, sigma, incumbent);
                    (ei, ei)
                }
            }
            _ => {
                let phi = self.bonus(sigma2, grid_size);
                (mean + phi, phi)
            }
        }
    }

    /// Argmax of the acquisition score over the candidate grid, ties broken
    /// by the lowest candidate index.
    pub fn select_next(&mut self, search: &GridSearch) -> Result<Selection> {
        if search.grid().is_empty() {
            return Err(Error::Input("candidate grid is empty".into()));
        }
        let n = search.grid().len();
        let incumbent = self.effective_incumbent(search.posterior().observations());
        let mut best: Option<Selection> = None;
        for j in 0..n {
            let mean = search.mean_at(j);
            let sigma2 = search.sigma2_at(j);
            let (score, phi) = self.score(mean, sigma2, n, incumbent);
            if !score.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite acquisition score {score} at candidate {j} {:?}",
                    search.grid().point(j)
                )));
            }
            if best.as_ref().map_or(true, |b| score > b.score) {
                best = Some(Selection { index: j, mean, sigma2, phi, score });
            }
        }
        let sel = best.expect("non-empty grid");
        self.pending = Some(sel);
        Ok(sel)
    }

    /// Same argmax computed directly through the posterior, no cache; used
    /// to cross-check the incremental path.
    pub fn select_exhaustive(
        &self,
        posterior: &PosteriorState,
        grid: &Grid,
    ) -> Result<Selection> {
        if grid.is_empty() {
            return Err(Error::Input("candidate grid is empty".into()));
        }
        let incumbent = self.effective_incumbent(posterior.observations());
        let mut best: Option<Selection> = None;
        for j in 0..grid.len() {
            let x = grid.point(j);
            let mean = posterior.mean(x)?;
            let sigma2 = posterior.variance(x)?;
            let (score, phi) = self.score(mean, sigma2, grid.len(), incumbent);
            if !score.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite acquisition score {score} at candidate {j} {x:?}"
                )));
            }
            if best.as_ref().map_or(true, |b| score > b.score) {
                best = Some(Selection { index: j, mean, sigma2, phi, score });
            }
        }
        Ok(best.expect("non-empty grid"))
    }

    /// Feeds back the observation for the point chosen by the preceding
    /// `select_next`, updating the accumulated information with the
    /// pre-update variance at the query, the incumbent, and the posterior.
    pub fn observe(&mut self, search: &mut GridSearch, index: usize, value: f64) -> Result<Selection> {
        let pending = self.pending.ok_or_else(|| {
            Error::Usage("observe called with no pending selection".into())
        })?;
        if pending.index != index {
            return Err(Error::Usage(format!(
                "observe called for candidate {index}, but candidate {} was selected",
                pending.index
            )));
        }
        self.info.accumulate(pending.sigma2)?;
        self.incumbent = Some(match self.incumbent {
            Some(v) => v.max(value),
            None => value,
        });
        search.extend(index, value)?;
        self.step += 1;
        self.pending = None;
        Ok(pending)
    }
}

// --- incremental candidate scoring ----------------------------------------

/// Posterior means and variances maintained for every candidate of a fixed
/// grid under sequential extension.
///
/// Appending one observation refreshes all candidates in O(n_candidates * t)
/// by extending the forward-substitution vectors row by row, exploiting the
/// fact that the factor only grows; variances then never have to be solved
/// from scratch inside the argmax.
#[derive(Debug, Clone)]
pub struct GridSearch {
    grid: Grid,
    posterior: PosteriorState,
    /// Cross covariances: one row per observation, one column per candidate.
    cross_rows: Vec<Vec<f64>>,
    /// Forward-substitution rows: `z[i][j]` is entry `i` of `L^{-1} c_j`.
    z_rows: Vec<Vec<f64>>,
    /// `sum_i z[i][j]^2` per candidate.
    explained: Vec<f64>,
    /// `k(x_j, x_j)` per candidate.
    prior_var: Vec<f64>,
    /// Posterior mean per candidate, refreshed after every extension.
    means: Vec<f64>,
    refit_seen: u32,
    clamp_count: u64,
}

impl GridSearch {
    pub fn new(grid: Grid, posterior: PosteriorState) -> Result<Self> {
        if !posterior.is_empty() && posterior.points().dim() != grid.dim() {
            return Err(Error::Input(format!(
                "posterior dimension {} does not match grid dimension {}",
                posterior.points().dim(),
                grid.dim()
            )));
        }
        let n = grid.len();
        let prior_var: Vec<f64> =
            (0..n).map(|j| posterior.kernel().self_variance(grid.point(j))).collect();
        let mut search = GridSearch {
            grid,
            posterior,
            cross_rows: Vec::new(),
            z_rows: Vec::new(),
            explained: vec![0.0; n],
            prior_var,
            means: vec![0.0; n],
            refit_seen: 0,
        clamp_count: 0,
        };
        search.refit_seen = search.posterior.refit_count();
        for i in 0..search.posterior.len() {
            search.push_cross_row(i);
            search.push_z_row(i);
        }
        search.refresh_means();
        Ok(search)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn posterior(&self) -> &PosteriorState {
        &self.posterior
    }

    /// Negative-variance clampings performed by the candidate cache.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_count
    }

    #[inline]
    pub fn mean_at(&self, j: usize) -> f64 {
        self.means[j]
    }

    #[inline]
    pub fn sigma2_at(&self, j: usize) -> f64 {
        let v = self.prior_var[j] - self.explained[j];
        if v < 0.0 {
            0.0
        } else {
            v
        }
    }

    fn push_cross_row(&mut self, i: usize) {
        let row: Vec<f64> =
            (0..self.grid.len()).map(|j| self.posterior.cross_cov(i, self.grid.point(j))).collect();
        self.cross_rows.push(row);
    }

    /// Extends every candidate's forward solve by row `i` of the factor and
    /// folds the new entry into the explained variance.
    fn push_z_row(&mut self, i: usize) {
        let chol = self.posterior.chol();
        let n = self.grid.len();
        let mut row = self.cross_rows[i].clone();
        for m in 0..i {
            let l = chol.entry(i, m);
            let zm = &self.z_rows[m];
            for j in 0..n {
                row[j] -= l * zm[j];
            }
        }
        let inv = 1.0 / chol.diag(i);
        for j in 0..n {
            row[j] *= inv;
            let z = row[j];
            self.explained[j] += z * z;
            if self.prior_var[j] - self.explained[j] < 0.0 {
                self.clamp_count += 1;
            }
        }
        self.z_rows.push(row);
    }

    fn rebuild_z(&mut self) {
        self.z_rows.clear();
        self.explained.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.posterior.len() {
            self.push_z_row(i);
        }
    }

    fn refresh_means(&mut self) {
        let w = self.posterior.weights();
        self.means.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.cross_rows.iter().enumerate() {
            let wi = w[i];
            for (m, c) in self.means.iter_mut().zip(row.iter()) {
                *m += wi * c;
            }
        }
    }

    /// Appends the observation `(grid[index], value)` to the posterior and
    /// refreshes the candidate cache.
    pub fn extend(&mut self, index: usize, value: f64) -> Result<()> {
        if index >= self.grid.len() {
            return Err(Error::Input(format!(
                "candidate index {index} out of range for grid of {}",
                self.grid.len()
            )));
        }
        let x = self.grid.point(index).to_vec();
        self.posterior = self.posterior.extend(&x, value)?;
        let t = self.posterior.len() - 1;
        self.push_cross_row(t);
        if self.posterior.refit_count() != self.refit_seen {
            // The factor was rebuilt with more jitter; all rows changed.
            self.refit_seen = self.posterior.refit_count();
            self.rebuild_z();
        } else {
            self.push_z_row(t);
        }
        self.refresh_means();
        Ok(())
    }
}
