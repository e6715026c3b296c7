//! Uniform planar array (UPA) steering vectors, their azimuth derivatives and
//! the target / user channels.
//!
//! Antenna `n` (0-based storage) sits in row `n / cols` and column
//! `n % cols`; its phase is
//! `Δ[(rows - 2*row - 1) cos θ + (cols - 2*col - 1) sin θ]` with
//! `Δ = -π (d/λ) cos φ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{CMat, CVec, Error, Result};

/// Transmit and receive planar-array dimensions plus mounting height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpaGeometry {
    pub tx_rows: usize,
    pub tx_cols: usize,
    pub rx_rows: usize,
    pub rx_cols: usize,
    pub spacing_over_wavelength: f64,
    pub bs_height: f64,
}

impl UpaGeometry {
    pub fn new(tx: (usize, usize), rx: (usize, usize), spacing_over_wavelength: f64, bs_height: f64) -> Result<Self> {
        let geom = Self { tx_rows: tx.0, tx_cols: tx.1, rx_rows: rx.0, rx_cols: rx.1, spacing_over_wavelength, bs_height };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx_rows == 0 || self.tx_cols == 0 || self.rx_rows == 0 || self.rx_cols == 0 {
            return Err(Error::Domain("array dimensions must be positive".into()));
        }
        if !(self.spacing_over_wavelength > 0.0) {
            return Err(Error::Domain("d/λ must be positive".into()));
        }
        if !(self.bs_height >= 0.0) {
            return Err(Error::Domain("BS height must be nonnegative".into()));
        }
        Ok(())
    }

    /// Number of transmit antennas `N_t`.
    pub fn n_tx(&self) -> usize {
        self.tx_rows * self.tx_cols
    }

    /// Number of receive antennas `N_r`.
    pub fn n_rx(&self) -> usize {
        self.rx_rows * self.rx_cols
    }

    /// Elevation and phase scale seen from the array toward a ground target
    /// at slant range `range`.
    pub fn target_angles(&self, range: f64) -> Result<SceneAngles> {
        SceneAngles::from_height_difference(self, -self.bs_height, range)
    }
}

/// Elevation `φ` and the derived phase scale `Δ`. `Δ` is only ever produced
/// together with `φ`, so it cannot go stale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneAngles {
    range: f64,
    elevation: f64,
    phase_scale: f64,
}

impl SceneAngles {
    /// `φ = arcsin(dz / r)` where `dz` is the signed height of the far end
    /// relative to the array.
    pub fn from_height_difference(geom: &UpaGeometry, dz: f64, range: f64) -> Result<Self> {
        if !(range > 0.0) {
            return Err(Error::Domain(format!("range must be positive, got {range}")));
        }
        let ratio = dz / range;
        if ratio.abs() > 1.0 {
            return Err(Error::Domain(format!("|height difference| {} exceeds range {range}", dz.abs())));
        }
        Ok(Self::from_elevation(geom, ratio.asin(), range))
    }

    pub fn from_elevation(geom: &UpaGeometry, elevation: f64, range: f64) -> Self {
        Self { range, elevation, phase_scale: -std::f64::consts::PI * geom.spacing_over_wavelength * elevation.cos() }
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    pub fn phase_scale(&self) -> f64 {
        self.phase_scale
    }
}

/// Ground user position for the line-of-sight downlink channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPosition {
    pub height: f64,
    pub azimuth: f64,
    pub range: f64,
}

#[inline]
fn row_col_coeffs(rows: usize, cols: usize, n: usize) -> (f64, f64) {
    let row = n / cols;
    let col = n % cols;
    (rows as f64 - 2.0 * row as f64 - 1.0, cols as f64 - 2.0 * col as f64 - 1.0)
}

fn steering(rows: usize, cols: usize, delta: f64, theta: f64) -> CVec {
    let (s, c) = theta.sin_cos();
    CVec::from_fn(rows * cols, |n, _| {
        let (cx, cy) = row_col_coeffs(rows, cols, n);
        Complex64::from_polar(1.0, delta * (cx * c + cy * s))
    })
}

fn steering_deriv(rows: usize, cols: usize, delta: f64, theta: f64) -> CVec {
    let (s, c) = theta.sin_cos();
    CVec::from_fn(rows * cols, |n, _| {
        let (cx, cy) = row_col_coeffs(rows, cols, n);
        let phase = delta * (cx * c + cy * s);
        let slope = delta * (cy * c - cx * s);
        Complex64::new(0.0, slope) * Complex64::from_polar(1.0, phase)
    })
}

/// Transmit steering vector `a(φ, θ)`.
pub fn steering_tx(geom: &UpaGeometry, angles: &SceneAngles, theta: f64) -> CVec {
    steering(geom.tx_rows, geom.tx_cols, angles.phase_scale, theta)
}

/// Receive steering vector `b(φ, θ)`.
pub fn steering_rx(geom: &UpaGeometry, angles: &SceneAngles, theta: f64) -> CVec {
    steering(geom.rx_rows, geom.rx_cols, angles.phase_scale, theta)
}

/// `∂a/∂θ`.
pub fn steering_tx_deriv(geom: &UpaGeometry, angles: &SceneAngles, theta: f64) -> CVec {
    steering_deriv(geom.tx_rows, geom.tx_cols, angles.phase_scale, theta)
}

/// `∂b/∂θ`.
pub fn steering_rx_deriv(geom: &UpaGeometry, angles: &SceneAngles, theta: f64) -> CVec {
    steering_deriv(geom.rx_rows, geom.rx_cols, angles.phase_scale, theta)
}

/// Round-trip channel `G(θ) = α b a^H` (N_r × N_t).
pub fn target_channel(geom: &UpaGeometry, angles: &SceneAngles, theta: f64, alpha: Complex64) -> CMat {
    let a = steering_tx(geom, angles, theta);
    let b = steering_rx(geom, angles, theta);
    (b * a.adjoint()) * alpha
}

/// One-way line-of-sight user channel `h = (√β₀ / r_U) a(φ_U, θ_U)`, with the
/// elevation taken from the signed height difference `h_U - h_B`.
pub fn user_channel(geom: &UpaGeometry, user: &UserPosition, beta0: f64) -> Result<CVec> {
    let angles = SceneAngles::from_height_difference(geom, user.height - geom.bs_height, user.range)?;
    let gain = beta0.sqrt() / user.range;
    Ok(steering_tx(geom, &angles, user.azimuth) * Complex64::from(gain))
}

/// Wraps an angle to `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let w = theta - 2.0 * PI * ((theta + PI) / (2.0 * PI)).floor();
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}
