//! Von-Mises mixture prior on the target azimuth.

mod bessel;
mod sample;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::wrap_angle;
use crate::quadrature::{nodes, PeriodicTrapezoid};
use crate::{Error, Result};

pub use bessel::{bessel_ratio, scaled_bessel_i0, scaled_bessel_i1};

/// Mixture densities below this are treated as zero in ratio integrands.
const DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VonMisesComponent {
    /// Mean direction in radians.
    pub mean: f64,
    /// Concentration κ > 0.
    pub concentration: f64,
    pub weight: f64,
}

/// `p(θ) = Σ_k p_k exp(κ_k cos(θ - θ_k)) / (2π I_0(κ_k))`.
///
/// The formula is already 2π-periodic, so it doubles as its own periodic
/// extension.
#[derive(Debug, Clone, PartialEq)]
pub struct VonMisesMixture {
    components: Vec<VonMisesComponent>,
    // ln(2π e^{-κ} I_0(κ)) per component
    log_norm: Vec<f64>,
}

impl VonMisesMixture {
    pub fn new(components: Vec<VonMisesComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("mixture needs at least one component".into()));
        }
        let mut total = 0.0;
        for (k, c) in components.iter().enumerate() {
            if !(c.concentration > 0.0) || !c.concentration.is_finite() {
                return Err(Error::Domain(format!("component {k}: concentration must be positive")));
            }
            if !(0.0..=1.0).contains(&c.weight) {
                return Err(Error::Domain(format!("component {k}: weight outside [0, 1]")));
            }
            if !c.mean.is_finite() {
                return Err(Error::Domain(format!("component {k}: mean must be finite")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("weights sum to {total}, expected 1")));
        }
        let components: Vec<_> = components.into_iter().map(|c| VonMisesComponent { mean: wrap_angle(c.mean), ..c }).collect();
        let log_norm = components.iter().map(|c| (2.0 * PI * bessel::i0e_unchecked(c.concentration)).ln()).collect();
        Ok(Self { components, log_norm })
    }

    /// Single von-Mises component.
    pub fn single(mean: f64, concentration: f64) -> Result<Self> {
        Self::new(vec![VonMisesComponent { mean, concentration, weight: 1.0 }])
    }

    pub fn components(&self) -> &[VonMisesComponent] {
        &self.components
    }

    /// `f_k(θ)` for each component, evaluated in the log domain.
    fn component_densities(&self, theta: f64) -> impl Iterator<Item = f64> + '_ {
        self.components.iter().zip(&self.log_norm).map(move |(c, ln)| (c.concentration * ((theta - c.mean).cos() - 1.0) - ln).exp())
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        self.components.iter().zip(self.component_densities(theta)).map(|(c, f)| c.weight * f).sum()
    }

    /// `dp/dθ`.
    pub fn pdf_deriv(&self, theta: f64) -> f64 {
        self.components
            .iter()
            .zip(self.component_densities(theta))
            .map(|(c, f)| -c.weight * f * c.concentration * (theta - c.mean).sin())
            .sum()
    }

    /// `ln p(θ)`, finite wherever the density does not underflow.
    pub fn ln_pdf(&self, theta: f64) -> f64 {
        // log-sum-exp over components
        let logs: Vec<f64> = self
            .components
            .iter()
            .zip(&self.log_norm)
            .filter(|(c, _)| c.weight > 0.0)
            .map(|(c, ln)| c.weight.ln() + c.concentration * ((theta - c.mean).cos() - 1.0) - ln)
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
    }

    /// `Σ_k p_k κ_k I_1(κ_k)/I_0(κ_k)`, the first term of the score energy.
    pub fn weighted_bessel_term(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.concentration * bessel::ratio_unchecked(c.concentration)).sum()
    }

    /// Cross-component correction `ρ`, integrated by periodic quadrature.
    pub fn rho(&self, quad: &PeriodicTrapezoid) -> Result<f64> {
        if self.components.len() == 1 {
            return Ok(0.0);
        }
        let scale = self.weighted_bessel_term();
        let integrand = |theta: f64| {
            let f: Vec<f64> = self.component_densities(theta).collect();
            let mix: f64 = self.components.iter().zip(&f).map(|(c, fk)| c.weight * fk).sum();
            if mix < DENSITY_FLOOR {
                return 0.0;
            }
            let mut acc = 0.0;
            for (i, ci) in self.components.iter().enumerate() {
                let si = ci.concentration * (theta - ci.mean).sin();
                for (j, cj) in self.components.iter().enumerate().skip(i + 1) {
                    let sj = cj.concentration * (theta - cj.mean).sin();
                    acc += 2.0 * ci.weight * cj.weight * f[i] * f[j] * (si - sj).powi(2);
                }
            }
            acc / (2.0 * mix)
        };
        quad.integrate("rho", integrand, Some(scale))
    }

    /// Prior Fisher information `E[(∂ ln p/∂θ)²] = Σ p_k κ_k I_1/I_0 - ρ`.
    pub fn score_energy(&self, quad: &PeriodicTrapezoid) -> Result<f64> {
        Ok((self.weighted_bessel_term() - self.rho(quad)?).max(0.0))
    }

    /// Global mode: dense grid argmax (ties resolved toward the smaller
    /// angle) refined by golden-section search inside one grid cell.
    pub fn mode(&self, grid: usize) -> f64 {
        let mut best = (f64::NEG_INFINITY, -PI);
        for (theta, _) in nodes(grid) {
            let v = self.ln_pdf(theta);
            if v > best.0 {
                best = (v, theta);
            }
        }
        let h = 2.0 * PI / grid as f64;
        let refined = golden_section_max(|t| self.ln_pdf(t), best.1 - h, best.1 + h, 60);
        if self.ln_pdf(refined) >= best.0 {
            wrap_angle(refined)
        } else {
            best.1
        }
    }
}

/// Maximises a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

pub use sample::sample;
