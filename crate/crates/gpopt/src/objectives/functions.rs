//! Analytic benchmark functions in maximization convention.
//!
//! Every function is the negation of a classical minimization benchmark so
//! that higher is better; boxes follow the classical domains.

use crate::error::{Error, Result};

pub const BRANIN_BOX: [(f64, f64); 2] = [(-5.0, 10.0), (0.0, 15.0)];
pub const GOLDSTEIN_BOX: [(f64, f64); 2] = [(-2.0, 2.0), (-2.0, 2.0)];
pub const HIMMELBLAU_BOX: [(f64, f64); 2] = [(-5.0, 5.0), (-5.0, 5.0)];

/// Default coefficient of the linear tilt added to the Himmelblau surface.
pub const HIMMELBLAU_TILT: f64 = 0.5;

fn check_box(x: &[f64], bounds: &[(f64, f64)], name: &str) -> Result<()> {
    if x.len() != bounds.len() {
        return Err(Error::Input(format!(
            "{name} expects {} coordinates, got {}",
            bounds.len(),
            x.len()
        )));
    }
    for (v, (lo, hi)) in x.iter().zip(bounds) {
        if !(*v >= *lo && *v <= *hi) {
            return Err(Error::Input(format!("{name}: point {x:?} outside box")));
        }
    }
    Ok(())
}

/// The raw Branin-Hoo value (minimization convention).
pub fn branin_raw(x: f64, y: f64) -> f64 {
    let a = 1.0;
    let b = 5.1 / (4.0 * std::f64::consts::PI.powi(2));
    let c = 5.0 / std::f64::consts::PI;
    let r = 6.0;
    let s = 10.0;
    let t = 1.0 / (8.0 * std::f64::consts::PI);
    a * (y - b * x * x + c * x - r).powi(2) + s * (1.0 - t) * x.cos() + s
}

/// Negated Branin-Hoo over `[-5, 10] x [0, 15]`; three equal global maxima.
pub fn branin(x: &[f64]) -> Result<f64> {
    check_box(x, &BRANIN_BOX, "branin")?;
    Ok(-branin_raw(x[0], x[1]))
}

/// The raw Goldstein-Price value (minimization convention, spans six orders
/// of magnitude over its box).
pub fn goldstein_price_raw(x: f64, y: f64) -> f64 {
    let p = 1.0
        + (x + y + 1.0).powi(2)
            * (19.0 - 14.0 * x + 3.0 * x * x - 14.0 * y + 6.0 * x * y + 3.0 * y * y);
    let q = 30.0
        + (2.0 * x - 3.0 * y).powi(2)
            * (18.0 - 32.0 * x + 12.0 * x * x + 48.0 * y - 36.0 * x * y + 27.0 * y * y);
    p * q
}

/// Negated log of Goldstein-Price over `[-2, 2]^2`. The log compresses the
/// huge dynamic range into something a unit-variance surrogate can model;
/// the argmax is unchanged.
pub fn goldstein_price(x: &[f64]) -> Result<f64> {
    check_box(x, &GOLDSTEIN_BOX, "goldstein_price")?;
    Ok(-goldstein_price_raw(x[0], x[1]).ln())
}

/// Negated Himmelblau plus a linear tilt `a (x + y)`, so exactly one of the
/// four classical peaks becomes the unique global maximum.
pub fn himmelblau_with_tilt(x: &[f64], tilt: f64) -> Result<f64> {
    check_box(x, &HIMMELBLAU_BOX, "himmelblau")?;
    let (a, b) = (x[0], x[1]);
    let h = (a * a + b - 11.0).powi(2) + (a + b * b - 7.0).powi(2);
    Ok(-(h + tilt * (a + b)))
}

/// Tilted Himmelblau with the default tilt coefficient.
pub fn himmelblau_tilted(x: &[f64]) -> Result<f64> {
    himmelblau_with_tilt(x, HIMMELBLAU_TILT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn branin_three_optima_attain_equal_values() {
        let optima =
            [[-std::f64::consts::PI, 12.275], [std::f64::consts::PI, 2.275], [9.42478, 2.475]];
        let vals: Vec<f64> = optima.iter().map(|o| branin(o).unwrap()).collect();
        for v in &vals {
            assert!((v - vals[0]).abs() < 1e-4, "optima values differ: {vals:?}");
        }
        // The classical optimum value of the minimization form.
        assert!((vals[0] + 0.397887).abs() < 1e-5);
    }

    #[test]
    fn branin_matches_independent_reimplementation() {
        // Second implementation written directly from the textbook constants.
        fn reference(x: f64, y: f64) -> f64 {
            let pi = std::f64::consts::PI;
            (y - 5.1 * x * x / (4.0 * pi * pi) + 5.0 * x / pi - 6.0).powi(2)
                + 10.0 * (1.0 - 1.0 / (8.0 * pi)) * x.cos()
                + 10.0
        }
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x = r.gen_range(-5.0..10.0);
            let y = r.gen_range(0.0..15.0);
            assert!((branin(&[x, y]).unwrap() + reference(x, y)).abs() <= 1e-12);
        }
    }

    #[test]
    fn branin_out_of_box_is_input_error() {
        assert!(branin(&[-6.0, 0.0]).is_err());
        assert!(branin(&[0.0]).is_err());
    }

    #[test]
    fn goldstein_price_raw_minimum_value() {
        assert!((goldstein_price_raw(0.0, -1.0) - 3.0).abs() < 1e-9);
        assert!((goldstein_price(&[0.0, -1.0]).unwrap() + 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn himmelblau_root_is_exact() {
        // (3, 2) is a root of both squared terms.
        assert_eq!(himmelblau_with_tilt(&[3.0, 2.0], 0.0).unwrap(), 0.0);
        let tilted = himmelblau_tilted(&[3.0, 2.0]).unwrap();
        assert!((tilted + 0.5 * 5.0).abs() < 1e-12);
    }
}
