//! Mutual-information quantities driving the information-based policy.
//!
//! For a GP observed at points `X` under Gaussian noise with variance `s2`,
//! the information carried by the observations is
//! `I(X) = 1/2 log det(I + s2^{-1} K_X)`. The running sum of posterior
//! variances at the queried points (`gamma_hat`) is bounded by
//! `c1(s2) * I(X)` with `c1 = 2 / log(1 + s2^{-1})`.

use crate::chol::LowerTriangular;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::points::Points;

/// `1/2 log det(I + s2^{-1} K_X)` in nats, via Cholesky.
pub fn mutual_information(kernel: &Kernel, points: &Points, noise_var: f64) -> Result<f64> {
    if !(noise_var > 0.0) {
        return Err(Error::Config(format!(
            "mutual information needs positive noise variance, got {noise_var}"
        )));
    }
    let n = points.len();
    if n == 0 {
        return Ok(0.0);
    }
    let inv = 1.0 / noise_var;
    let m = |i: usize, j: usize| {
        let k = kernel.eval_raw(points.get(i), points.get(j)) * inv;
        if i == j {
            1.0 + k
        } else {
            k
        }
    };
    let chol = LowerTriangular::factor(n, m).ok_or_else(|| {
        Error::Numerical(format!("factorization of I + s^-2 K failed for {n} points"))
    })?;
    Ok(chol.half_log_det())
}

/// The constant `2 / log(1 + s2^{-1})` linking the variance sum to the
/// maximum mutual information.
pub fn c1(noise_var: f64) -> Result<f64> {
    if !(noise_var > 0.0) {
        return Err(Error::Config(format!(
            "c1 needs positive noise variance, got {noise_var}"
        )));
    }
    Ok(2.0 / (1.0 + noise_var.recip()).ln())
}

/// Running sum of posterior variances at the queried points, accumulated
/// with Kahan compensation so the total is reassociation-stable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InfoAccumulator {
    sum: f64,
    compensation: f64,
    history: Vec<f64>,
}

impl InfoAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current `gamma_hat`.
    #[inline]
    pub fn gamma_hat(&self) -> f64 {
        self.sum
    }

    /// Per-step variances in query order.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Adds one posterior variance; negative input signals an upstream
    /// clamping bug and is rejected.
    pub fn accumulate(&mut self, variance_at_query: f64) -> Result<()> {
        if !(variance_at_query >= 0.0) {
            return Err(Error::Input(format!(
                "negative variance {variance_at_query} passed to the information accumulator"
            )));
        }
        self.history.push(variance_at_query);
        let y = variance_at_query - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
        Ok(())
    }
}

/// Greedy forward-selection maximization of the mutual information over
/// subsets of `candidates` of size `t`.
///
/// By monotone submodularity the greedy value is within a factor
/// `1 - 1/e` of the best subset restricted to the candidates, so
/// `greedy / (1 - 1/e)` is an upper proxy for the unrestricted maximum.
pub fn greedy_gamma_bound(
    kernel: &Kernel,
    candidates: &Points,
    t: usize,
    noise_var: f64,
) -> Result<f64> {
    if t > candidates.len() {
        return Err(Error::Input(format!(
            "cannot select {t} points from {} candidates",
            candidates.len()
        )));
    }
    if !(noise_var > 0.0) {
        return Err(Error::Config(format!(
            "greedy selection needs positive noise variance, got {noise_var}"
        )));
    }
    let inv = 1.0 / noise_var;
    let n = candidates.len();
    let mut selected: Vec<usize> = Vec::with_capacity(t);
    let mut chol = LowerTriangular::empty();
    let mut total = 0.0f64;
    for _ in 0..t {
        let mut best: Option<(f64, usize, Vec<f64>, f64)> = None;
        for cand in 0..n {
            if selected.contains(&cand) {
                continue;
            }
            let xc = candidates.get(cand);
            let mut off: Vec<f64> = selected
                .iter()
                .map(|&s| kernel.eval_raw(candidates.get(s), xc) * inv)
                .collect();
            let diag = 1.0 + kernel.eval_raw(xc, xc) * inv;
            chol.solve_forward_in_place(&mut off);
            let pivot2 = diag - off.iter().map(|v| v * v).sum::<f64>();
            if pivot2 <= 0.0 {
                continue;
            }
            let gain = 0.5 * pivot2.ln();
            let better = match &best {
                None => true,
                Some((g, _, _, _)) => gain > *g,
            };
            if better {
                best = Some((gain, cand, off, pivot2));
            }
        }
        let (gain, cand, w, pivot2) =
            best.ok_or_else(|| Error::Numerical("greedy selection ran out of candidates".into()))?;
        // Splice the already-solved column into the factor directly.
        chol.extend_presolved(&w, pivot2.sqrt());
        selected.push(cand);
        total += gain;
    }
    Ok(total)
}

/// The submodularity inflation factor `1 / (1 - 1/e)` used when quoting the
/// greedy value as an upper proxy.
pub fn greedy_inflation() -> f64 {
    1.0 / (1.0 - (-1.0f64).exp())
}

impl LowerTriangular {
    /// Appends a row whose forward-solve and pivot were already computed.
    pub(crate) fn extend_presolved(&mut self, solved: &[f64], pivot: f64) {
        debug_assert_eq!(solved.len(), self.dim());
        self.push_row(solved, pivot);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_points(n: usize, dim: usize, r: &mut impl Rng) -> Points {
        let mut pts = Points::new(dim);
        for _ in 0..n {
            let p: Vec<f64> = (0..dim).map(|_| r.gen_range(0.0..10.0)).collect();
            pts.push(&p).unwrap();
        }
        pts
    }

    #[test]
    fn single_point_half_log_two() {
        let kernel = Kernel::rbf(1.0).unwrap();
        let mut pts = Points::new(1);
        pts.push(&[0.0]).unwrap();
        let mi = mutual_information(&kernel, &pts, 1.0).unwrap();
        assert!((mi - 0.5 * 2f64.ln()).abs() < 1e-14);
        assert!((mi - 0.34657).abs() < 1e-5);
    }

    #[test]
    fn empty_set_zero_information() {
        let kernel = Kernel::rbf(1.0).unwrap();
        assert_eq!(mutual_information(&kernel, &Points::new(1), 0.5).unwrap(), 0.0);
    }

    /// Brute-force determinant by cofactor expansion; independent of any
    /// factorization code.
    fn det_cofactor(m: &[Vec<f64>]) -> f64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        let mut det = 0.0;
        for j in 0..n {
            let minor: Vec<Vec<f64>> = (1..n)
                .map(|i| (0..n).filter(|&c| c != j).map(|c| m[i][c]).collect())
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            det += sign * m[0][j] * det_cofactor(&minor);
        }
        det
    }

    fn mi_oracle(kernel: &Kernel, pts: &Points, s2: f64) -> f64 {
        let n = pts.len();
        let m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let k = kernel.eval(pts.get(i), pts.get(j)).unwrap() / s2;
                        if i == j {
                            1.0 + k
                        } else {
                            k
                        }
                    })
                    .collect()
            })
            .collect();
        0.5 * det_cofactor(&m).ln()
    }

    #[test]
    fn four_points_match_determinant_oracle() {
        let mut r = rng(5);
        let kernel = Kernel::rbf(1.0).unwrap();
        for _ in 0..20 {
            let pts = random_points(4, 2, &mut r);
            let s2 = r.gen_range(0.05..2.0);
            let mi = mutual_information(&kernel, &pts, s2).unwrap();
            let oracle = mi_oracle(&kernel, &pts, s2);
            assert!((mi - oracle).abs() < 1e-10, "{mi} vs {oracle}");
        }
    }

    #[test]
    fn information_is_permutation_invariant() {
        let mut r = rng(9);
        let kernel = Kernel::rbf(1.0).unwrap();
        let pts = random_points(7, 2, &mut r);
        let mi = mutual_information(&kernel, &pts, 0.2).unwrap();
        let mut rows = pts.to_rows();
        rows.reverse();
        rows.swap(1, 3);
        let permuted = Points::from_rows(2, &rows).unwrap();
        let mi2 = mutual_information(&kernel, &permuted, 0.2).unwrap();
        assert!((mi - mi2).abs() <= 1e-10);
    }

    #[test]
    fn c1_reference_values() {
        assert!((c1(1.0).unwrap() - 2.0 / 2f64.ln()).abs() < 1e-14);
        assert!((c1(1.0).unwrap() - 2.8854).abs() < 1e-4);
        assert!((c1(0.01).unwrap() - 2.0 / 101f64.ln()).abs() < 1e-14);
        assert!((c1(0.01).unwrap() - 0.4334).abs() < 1e-4);
        assert!(matches!(c1(0.0), Err(Error::Config(_))));
        assert!(matches!(c1(-1.0), Err(Error::Config(_))));
    }

    #[test]
    fn c1_decreases_with_noise() {
        let mut prev = c1(1.0).unwrap();
        for e in 1..12 {
            let s2 = 10f64.powi(-e);
            let v = c1(s2).unwrap();
            assert!(v < prev, "c1 not decreasing at s2 = {s2}");
            prev = v;
        }
        assert!(prev < 0.1);
    }

    #[test]
    fn accumulator_basics() {
        let mut acc = InfoAccumulator::new();
        acc.accumulate(0.5).unwrap();
        assert_eq!(acc.gamma_hat(), 0.5);
        acc.accumulate(0.0).unwrap();
        assert_eq!(acc.gamma_hat(), 0.5);
        assert!(matches!(acc.accumulate(-1e-12), Err(Error::Input(_))));
        assert_eq!(acc.history(), &[0.5, 0.0]);
    }

    #[test]
    fn accumulator_matches_compensated_recompute() {
        let mut r = rng(21);
        let mut acc = InfoAccumulator::new();
        for _ in 0..10_000 {
            acc.accumulate(r.gen_range(0.0..1.0)).unwrap();
        }
        // Re-sum with the same compensated scheme: must agree bitwise.
        let mut rerun = InfoAccumulator::new();
        for &v in acc.history() {
            rerun.accumulate(v).unwrap();
        }
        assert_eq!(acc.gamma_hat(), rerun.gamma_hat());
        // And the plain sum should agree to close to machine precision.
        let naive: f64 = acc.history().iter().sum();
        assert!((acc.gamma_hat() - naive).abs() < 1e-9);
    }

    #[test]
    fn greedy_singleton_and_full_set() {
        let mut r = rng(33);
        let kernel = Kernel::rbf(1.0).unwrap();
        let pts = random_points(6, 1, &mut r);
        let s2 = 0.5;
        // t = 1: best singleton is 1/2 log(1 + k(x,x)/s2), same for all points.
        let g1 = greedy_gamma_bound(&kernel, &pts, 1, s2).unwrap();
        assert!((g1 - 0.5 * (1.0 + 1.0 / s2).ln()).abs() < 1e-12);
        // t = n: equals the information of the full set.
        let gn = greedy_gamma_bound(&kernel, &pts, 6, s2).unwrap();
        let full = mutual_information(&kernel, &pts, s2).unwrap();
        assert!((gn - full).abs() < 1e-9, "{gn} vs {full}");
    }

    #[test]
    fn greedy_vs_exhaustive_enumeration() {
        let mut r = rng(41);
        let kernel = Kernel::rbf(1.0).unwrap();
        let pts = random_points(8, 2, &mut r);
        let s2 = 0.3;
        let greedy = greedy_gamma_bound(&kernel, &pts, 3, s2).unwrap();
        // Enumerate all C(8,3) subsets.
        let mut best = f64::NEG_INFINITY;
        for a in 0..8 {
            for b in a + 1..8 {
                for c in b + 1..8 {
                    let sub = Points::from_rows(
                        2,
                        &[pts.get(a).to_vec(), pts.get(b).to_vec(), pts.get(c).to_vec()],
                    )
                    .unwrap();
                    best = best.max(mutual_information(&kernel, &sub, s2).unwrap());
                }
            }
        }
        assert!(greedy <= best + 1e-9, "greedy {greedy} exceeds optimum {best}");
        assert!(best <= greedy * greedy_inflation() + 1e-9);
    }

    #[test]
    fn greedy_rejects_oversized_request() {
        let kernel = Kernel::rbf(1.0).unwrap();
        let mut pts = Points::new(1);
        pts.push(&[0.0]).unwrap();
        assert!(matches!(
            greedy_gamma_bound(&kernel, &pts, 2, 0.5),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn submodular_diminishing_gains_spot_check() {
        let mut r = rng(55);
        let kernel = Kernel::rbf(1.0).unwrap();
        let pts = random_points(8, 2, &mut r);
        let s2 = 0.4;
        let mi_of = |idx: &[usize]| {
            let rows: Vec<Vec<f64>> = idx.iter().map(|&i| pts.get(i).to_vec()).collect();
            mutual_information(&kernel, &Points::from_rows(2, &rows).unwrap(), s2).unwrap()
        };
        // A subset of B; adding x to A gains at least as much as adding to B.
        for (a_set, b_set, x) in [
            (vec![0], vec![0, 1, 2], 3),
            (vec![4], vec![4, 5], 6),
            (vec![1, 2], vec![1, 2, 5, 7], 0),
        ] {
            let gain_a = mi_of(&[a_set.clone(), vec![x]].concat()) - mi_of(&a_set);
            let gain_b = mi_of(&[b_set.clone(), vec![x]].concat()) - mi_of(&b_set);
            assert!(gain_a >= gain_b - 1e-10, "submodularity violated: {gain_a} < {gain_b}");
        }
    }
}
