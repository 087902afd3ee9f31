//! Exact Gaussian-process posteriors with incremental updates.
//!
//! Two observation models share the same factorized machinery:
//!
//! * `NoisyValue` — observations `y_t = f(x_t) + eps_t` with Gaussian noise,
//!   the standard regression posterior
//!   `mu(x) = k_t(x)^T C^{-1} y`, `sigma^2(x) = k(x,x) - k_t(x)^T C^{-1} k_t(x)`
//!   with `C = K + noise_var I`.
//! * `RegretFeedback` — noiseless observations of the gaps
//!   `z_t = f(x_star) - f(x_t)`, i.e. linear functionals of `f`. The Gram
//!   entries and cross-covariances follow from bilinearity of covariance.
//!
//! States are immutable; `extend` returns a new state and shares no mutable
//! storage, so a state can be queried from many threads.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::chol::LowerTriangular;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::points::Points;

/// Relative base jitter; scaled by the kernel output scale.
pub const BASE_JITTER: f64 = 1e-10;
/// Relative jitter ceiling; escalation beyond this fails loudly.
pub const MAX_JITTER: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum ObservationMode {
    NoisyValue,
    RegretFeedback { x_star: Vec<f64> },
}

#[derive(Debug)]
pub struct PosteriorState {
    kernel: Kernel,
    mode: ObservationMode,
    points: Points,
    observations: Vec<f64>,
    noise_var: f64,
    jitter: f64,
    chol: LowerTriangular,
    /// `C^{-1} obs`, rebuilt on every extension.
    weights: Vec<f64>,
    /// Number of negative-variance clampings performed by queries.
    clamp_count: AtomicU64,
    /// Number of full refactorizations forced by extension breakdown.
    refit_count: u32,
}

impl Clone for PosteriorState {
    fn clone(&self) -> Self {
        PosteriorState {
            kernel: self.kernel.clone(),
            mode: self.mode.clone(),
            points: self.points.clone(),
            observations: self.observations.clone(),
            noise_var: self.noise_var,
            jitter: self.jitter,
            chol: self.chol.clone(),
            weights: self.weights.clone(),
            clamp_count: AtomicU64::new(self.clamp_count.load(Ordering::Relaxed)),
            refit_count: self.refit_count,
        }
    }
}

impl PosteriorState {
    /// Posterior after zero observations: mean 0 and variance `k(x, x)`.
    pub fn empty(kernel: Kernel, dim: usize, noise_var: f64) -> Result<Self> {
        Self::fit(kernel, Points::new(dim), Vec::new(), noise_var)
    }

    /// Fits the standard noisy-value posterior by direct dense factorization.
    pub fn fit(kernel: Kernel, points: Points, observations: Vec<f64>, noise_var: f64) -> Result<Self> {
        if points.len() != observations.len() {
            return Err(Error::Input(format!(
                "{} points but {} observations",
                points.len(),
                observations.len()
            )));
        }
        if !(noise_var >= 0.0) {
            return Err(Error::Input(format!("noise variance must be >= 0, got {noise_var}")));
        }
        let mode = ObservationMode::NoisyValue;
        Self::fit_mode(kernel, mode, points, observations, noise_var)
    }

    /// Fits the posterior of `f` conditioned on noiseless gap observations
    /// `z_t = f(x_star) - f(x_t)`.
    pub fn fit_regret(
        kernel: Kernel,
        x_star: &[f64],
        points: Points,
        observations: Vec<f64>,
    ) -> Result<Self> {
        if points.len() != observations.len() {
            return Err(Error::Input(format!(
                "{} points but {} observations",
                points.len(),
                observations.len()
            )));
        }
        if !points.is_empty() && points.dim() != x_star.len() {
            return Err(Error::Input(format!(
                "reference point has dimension {}, queries have {}",
                x_star.len(),
                points.dim()
            )));
        }
        let mode = ObservationMode::RegretFeedback { x_star: x_star.to_vec() };
        Self::fit_mode(kernel, mode, points, observations, 0.0)
    }

    fn fit_mode(
        kernel: Kernel,
        mode: ObservationMode,
        points: Points,
        observations: Vec<f64>,
        noise_var: f64,
    ) -> Result<Self> {
        let base = BASE_JITTER * kernel.output_scale;
        let max = MAX_JITTER * kernel.output_scale;
        // Degenerate observation operators (noiseless values, gap functionals)
        // start on the ladder immediately; a healthy noise term needs none.
        let initial = match mode {
            ObservationMode::NoisyValue if noise_var > 0.0 => 0.0,
            _ => base,
        };
        let n = points.len();
        let gram = |i: usize, j: usize| obs_gram(&kernel, &mode, &points, noise_var, i, j);
        let (chol, jitter) = LowerTriangular::factor_with_jitter(n, gram, initial, base, max)?;
        let weights = chol.solve(&observations);
        Ok(PosteriorState {
            kernel,
            mode,
            points,
            observations,
            noise_var,
            jitter,
            chol,
            weights,
            clamp_count: AtomicU64::new(0),
            refit_count: 0,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn mode(&self) -> &ObservationMode {
        &self.mode
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// How many variance queries were clamped up to zero so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_count.load(Ordering::Relaxed)
    }

    /// How many extensions fell back to a full refactorization.
    pub fn refit_count(&self) -> u32 {
        self.refit_count
    }

    pub(crate) fn chol(&self) -> &LowerTriangular {
        &self.chol
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        let want = match &self.mode {
            ObservationMode::RegretFeedback { x_star } => x_star.len(),
            ObservationMode::NoisyValue => {
                if self.points.is_empty() {
                    return Ok(());
                }
                self.points.dim()
            }
        };
        if x.len() != want {
            return Err(Error::Input(format!(
                "query point has dimension {}, expected {}",
                x.len(),
                want
            )));
        }
        Ok(())
    }

    /// Covariance between observation `i` and the latent value `f(x)`.
    #[inline]
    pub(crate) fn cross_cov(&self, i: usize, x: &[f64]) -> f64 {
        let xi = self.points.get(i);
        match &self.mode {
            ObservationMode::NoisyValue => self.kernel.eval_raw(xi, x),
            ObservationMode::RegretFeedback { x_star } => {
                self.kernel.eval_raw(x_star, x) - self.kernel.eval_raw(xi, x)
            }
        }
    }

    /// Variance of the observation operator applied at `x` (without jitter).
    #[inline]
    pub(crate) fn obs_self_var(&self, x: &[f64]) -> f64 {
        match &self.mode {
            ObservationMode::NoisyValue => self.kernel.self_variance(x) + self.noise_var,
            ObservationMode::RegretFeedback { x_star } => {
                self.kernel.self_variance(x_star) - 2.0 * self.kernel.eval_raw(x_star, x)
                    + self.kernel.self_variance(x)
                    + self.noise_var
            }
        }
    }

    fn cross_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.points.len()).map(|i| self.cross_cov(i, x)).collect()
    }

    /// Posterior mean of `f(x)` through the stored factor.
    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok((0..self.points.len()).map(|i| self.weights[i] * self.cross_cov(i, x)).sum())
    }

    /// Posterior variance of `f(x)`, clamped at zero from below.
    pub fn variance(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut c = self.cross_vec(x);
        self.chol.solve_forward_in_place(&mut c);
        let explained: f64 = c.iter().map(|v| v * v).sum();
        let raw = self.kernel.self_variance(x) - explained;
        if raw < 0.0 {
            self.clamp_count.fetch_add(1, Ordering::Relaxed);
            Ok(0.0)
        } else {
            Ok(raw)
        }
    }

    /// Posterior covariance between `f(x)` and `f(x')`; reduces to
    /// `variance` (including its clamping) on the diagonal.
    pub fn covariance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x == y {
            return self.variance(x);
        }
        self.check_dim(x)?;
        self.check_dim(y)?;
        let mut cx = self.cross_vec(x);
        let mut cy = self.cross_vec(y);
        self.chol.solve_forward_in_place(&mut cx);
        self.chol.solve_forward_in_place(&mut cy);
        let explained: f64 = cx.iter().zip(cy.iter()).map(|(a, b)| a * b).sum();
        Ok(self.kernel.eval_raw(x, y) - explained)
    }

    /// Rank-1 extension with one more observation. Falls back to a full
    /// refactorization with escalated jitter on numerical breakdown.
    pub fn extend(&self, x: &[f64], observation: f64) -> Result<Self> {
        self.check_dim(x)?;
        if self.points.is_empty() && self.points.dim() != x.len() {
            // Dimension of an empty state is fixed at construction.
            return Err(Error::Input(format!(
                "point has dimension {}, state expects {}",
                x.len(),
                self.points.dim()
            )));
        }
        let mut next = self.clone();
        next.points.push(x)?;
        next.observations.push(observation);
        let t = next.points.len() - 1;
        let off: Vec<f64> = (0..t)
            .map(|i| obs_gram(&next.kernel, &next.mode, &next.points, next.noise_var, t, i))
            .collect();
        let diag = next.obs_self_var(x) + next.jitter;
        if next.chol.extend(&off, diag).is_none() {
            // Breakdown: refactorize everything on the jitter ladder.
            let base = BASE_JITTER * next.kernel.output_scale;
            let max = MAX_JITTER * next.kernel.output_scale;
            let start = (next.jitter * 10.0).max(base);
            let gram = |i: usize, j: usize| {
                obs_gram(&next.kernel, &next.mode, &next.points, next.noise_var, i, j)
            };
            let (chol, jitter) =
                LowerTriangular::factor_with_jitter(next.points.len(), gram, start, base, max)?;
            next.chol = chol;
            next.jitter = jitter;
            next.refit_count += 1;
        }
        next.weights = next.chol.solve(&next.observations);
        Ok(next)
    }
}

fn obs_gram(
    kernel: &Kernel,
    mode: &ObservationMode,
    points: &Points,
    noise_var: f64,
    i: usize,
    j: usize,
) -> f64 {
    let xi = points.get(i);
    let xj = points.get(j);
    match mode {
        ObservationMode::NoisyValue => {
            let k = kernel.eval_raw(xi, xj);
            if i == j {
                k + noise_var
            } else {
                k
            }
        }
        ObservationMode::RegretFeedback { x_star } => {
            let k = kernel.self_variance(x_star) - kernel.eval_raw(x_star, xj)
                - kernel.eval_raw(xi, x_star)
                + kernel.eval_raw(xi, xj);
            if i == j {
                k + noise_var
            } else {
                k
            }
        }
    }
}

/// Exact zero-mean GP sampling on a fixed finite point set: the Gram factor
/// is computed once, after which each seed costs one matrix-vector product.
#[derive(Debug, Clone)]
pub struct GpSampler {
    chol: LowerTriangular,
}

impl GpSampler {
    pub fn new(kernel: &Kernel, points: &Points) -> Result<Self> {
        let n = points.len();
        let base = BASE_JITTER * kernel.output_scale;
        let max = MAX_JITTER * kernel.output_scale;
        let (chol, _) = LowerTriangular::factor_with_jitter(
            n,
            |i, j| kernel.eval_raw(points.get(i), points.get(j)),
            base,
            base,
            max,
        )?;
        Ok(GpSampler { chol })
    }

    /// `L z` with `z` standard normal from a counter-based generator, so
    /// identical seeds give bit-identical draws.
    pub fn draw(&self, seed: u64) -> Vec<f64> {
        let n = self.chol.dim();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut draw = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.chol.entry(i, j) * z[j];
            }
            draw[i] = acc;
        }
        draw
    }
}

/// One zero-mean GP draw on a finite point set; see [`GpSampler`] for
/// repeated draws on the same points.
pub fn sample_gp(kernel: &Kernel, points: &Points, seed: u64) -> Result<Vec<f64>> {
    Ok(GpSampler::new(kernel, points)?.draw(seed))
}
