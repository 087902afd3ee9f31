//! Finite candidate grids over compact box domains.
//!
//! The optimizer computes its argmax over a fixed finite discretization so
//! runs are deterministic and every selection can be checked against an
//! exhaustive scoring pass.

use crate::error::{Error, Result};
use crate::points::Points;

/// How to discretize a box domain.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Uniform lattice with the given number of points per axis (endpoints
    /// included).
    Lattice { per_axis: usize },
    /// Scrambled Halton sequence with the given point count; the scramble
    /// permutations are derived deterministically from the seed.
    LowDiscrepancy { count: usize, seed: u64 },
}

impl GridSpec {
    /// Default discretization: a 101-per-axis lattice for d <= 2, a
    /// 4096-point scrambled low-discrepancy set above.
    pub fn default_for_dim(dim: usize) -> GridSpec {
        if dim <= 2 {
            GridSpec::Lattice { per_axis: 101 }
        } else {
            GridSpec::LowDiscrepancy { count: 4096, seed: 0 }
        }
    }
}

/// A finite set of candidate points together with the box it discretizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    bounds: Vec<(f64, f64)>,
    spec: GridSpec,
    points: Points,
}

impl Grid {
    pub fn build(bounds: &[(f64, f64)], spec: GridSpec) -> Result<Grid> {
        if bounds.is_empty() {
            return Err(Error::Config("grid needs at least one axis".into()));
        }
        for &(lo, hi) in bounds {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!("invalid axis bounds [{lo}, {hi}]")));
            }
        }
        let dim = bounds.len();
        let points = match &spec {
            GridSpec::Lattice { per_axis } => {
                let m = *per_axis;
                if m < 1 {
                    return Err(Error::Config("lattice needs at least one point per axis".into()));
                }
                let total = m.checked_pow(dim as u32).filter(|&t| t <= 1 << 22).ok_or_else(
                    || Error::Config(format!("lattice {m}^{dim} is too large")),
                )?;
                let mut pts = Points::with_capacity(dim, total);
                let mut idx = vec![0usize; dim];
                let mut buf = vec![0.0f64; dim];
                loop {
                    for a in 0..dim {
                        let (lo, hi) = bounds[a];
                        buf[a] = if m == 1 {
                            0.5 * (lo + hi)
                        } else {
                            lo + (hi - lo) * idx[a] as f64 / (m - 1) as f64
                        };
                    }
                    pts.push(&buf)?;
                    // Odometer increment, last axis fastest.
                    let mut a = dim;
                    loop {
                        if a == 0 {
                            return Ok(Grid { bounds: bounds.to_vec(), spec, points: pts });
                        }
                        a -= 1;
                        idx[a] += 1;
                        if idx[a] < m {
                            break;
                        }
                        idx[a] = 0;
                    }
                }
            }
            GridSpec::LowDiscrepancy { count, seed } => {
                if *count == 0 {
                    return Err(Error::Config("low-discrepancy grid needs points".into()));
                }
                if dim > HALTON_PRIMES.len() {
                    return Err(Error::Config(format!(
                        "low-discrepancy grids support up to {} dimensions",
                        HALTON_PRIMES.len()
                    )));
                }
                let perms: Vec<Vec<u32>> = (0..dim)
                    .map(|a| scramble_permutation(HALTON_PRIMES[a], *seed, a as u64))
                    .collect();
                let mut pts = Points::with_capacity(dim, *count);
                let mut buf = vec![0.0f64; dim];
                for i in 0..*count {
                    for a in 0..dim {
                        let u = scrambled_radical_inverse(i as u64 + 1, HALTON_PRIMES[a], &perms[a]);
                        let (lo, hi) = bounds[a];
                        buf[a] = lo + (hi - lo) * u;
                    }
                    pts.push(&buf)?;
                }
                pts
            }
        };
        Ok(Grid { bounds: bounds.to_vec(), spec, points })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        self.points.get(i)
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.bounds).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Index of a grid point that equals `x` exactly, if any.
    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| p == x)
    }
}

const HALTON_PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Digit permutation for base `b` fixing 0, derived from the seed by a
/// splitmix-driven Fisher-Yates shuffle.
fn scramble_permutation(base: u32, seed: u64, axis: u64) -> Vec<u32> {
    let mut perm: Vec<u32> = (0..base).collect();
    let mut state = splitmix64(seed ^ (axis.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
    for i in (2..base as usize).rev() {
        state = splitmix64(state);
        let j = 1 + (state % i as u64) as usize;
        perm.swap(i, j);
    }
    perm
}

fn scrambled_radical_inverse(mut n: u64, base: u32, perm: &[u32]) -> f64 {
    let b = base as u64;
    let inv_b = 1.0 / base as f64;
    let mut inv = inv_b;
    let mut value = 0.0;
    while n > 0 {
        let digit = perm[(n % b) as usize] as f64;
        value += digit * inv;
        inv *= inv_b;
        n /= b;
    }
    value
}

/// SplitMix64 step; the stable seed-derivation primitive used everywhere.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
