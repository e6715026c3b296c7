//! Exponentially scaled modified Bessel functions of the first kind,
//! `e^{-κ} I_0(κ)` and `e^{-κ} I_1(κ)`, for κ ≥ 0.
//!
//! Power series below [`SERIES_LIMIT`], the large-argument asymptotic
//! expansion above it. Both stay finite for κ well beyond 10⁴.

use crate::{Error, Result};

const SERIES_LIMIT: f64 = 30.0;

fn series_scaled(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    // first term (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=order {
        term *= half / k as f64;
    }
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= q / (k as f64 * (k + order) as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum * (-x).exp()
}

fn asymptotic_scaled(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order as f64).powi(2);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev_abs = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
        let a = term.abs();
        if a >= prev_abs {
            break;
        }
        sum += term;
        prev_abs = a;
        if a < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

fn scaled(order: u32, x: f64) -> f64 {
    if x < SERIES_LIMIT {
        series_scaled(order, x)
    } else {
        asymptotic_scaled(order, x)
    }
}

pub(crate) fn i0e_unchecked(kappa: f64) -> f64 {
    scaled(0, kappa)
}

pub(crate) fn ratio_unchecked(kappa: f64) -> f64 {
    scaled(1, kappa) / scaled(0, kappa)
}

fn check(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("concentration must be positive and finite, got {kappa}")))
    }
}

/// `e^{-κ} I_0(κ)`.
pub fn scaled_bessel_i0(kappa: f64) -> Result<f64> {
    check(kappa)?;
    Ok(scaled(0, kappa))
}

/// `e^{-κ} I_1(κ)`.
pub fn scaled_bessel_i1(kappa: f64) -> Result<f64> {
    check(kappa)?;
    Ok(scaled(1, kappa))
}

/// `I_1(κ) / I_0(κ)`, in `(0, 1)`.
pub fn bessel_ratio(kappa: f64) -> Result<f64> {
    check(kappa)?;
    Ok(ratio_unchecked(kappa))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_argument_leading_term() {
        let r = bessel_ratio(1e-4).unwrap();
        assert!((r - 5e-5).abs() <= 1e-12);
    }

    #[test]
    fn known_values() {
        // Reference values (Abramowitz & Stegun table 9.8).
        assert!((scaled_bessel_i0(1.0).unwrap() - 0.4657596076).abs() < 1e-9);
        assert!((scaled_bessel_i1(1.0).unwrap() - 0.2079104154).abs() < 1e-9);
        assert!((scaled_bessel_i0(10.0).unwrap() - 0.1278333372).abs() < 1e-9);
    }

    #[test]
    fn branches_agree_at_switch() {
        for order in 0..2 {
            let a = series_scaled(order, SERIES_LIMIT);
            let b = asymptotic_scaled(order, SERIES_LIMIT);
            assert!((a - b).abs() / a < 1e-13, "order {order}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(bessel_ratio(0.0).is_err());
        assert!(scaled_bessel_i0(-1.0).is_err());
    }

    #[test]
    fn finite_for_huge_concentration() {
        let r = bessel_ratio(1e4).unwrap();
        assert!(r > 0.0 && r < 1.0);
        assert!(scaled_bessel_i0(1e6).unwrap().is_finite());
    }
}
