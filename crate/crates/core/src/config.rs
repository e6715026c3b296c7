//! Experiment configuration: a JSON document with one block per concern.
//!
//! Logarithmic quantities (dBm, dB) are converted to linear units once, in
//! [`ExperimentConfig::from_json`]; everything downstream sees watts and
//! plain ratios. [`Scenario`] then builds the numerical objects.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamopt::{ConvexInstance, Tolerances};
use crate::fisher::{SensingLinkBudget, SensingMatrices};
use crate::geometry::{user_channel, SceneAngles, UpaGeometry, UserPosition};
use crate::prior::{VonMisesComponent, VonMisesMixture};
use crate::quadrature::PeriodicTrapezoid;
use crate::{CVec, Error, Result};

/// The shipped scenario (4×4 / 4×5 arrays, two-component prior).
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub tx_rows: usize,
    pub tx_cols: usize,
    pub rx_rows: usize,
    pub rx_cols: usize,
    pub spacing_over_wavelength: f64,
    pub bs_height_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetBlock {
    pub range_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorComponentBlock {
    pub mean_rad: f64,
    pub concentration: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorBlock {
    pub components: Vec<PriorComponentBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBlock {
    pub power_dbm: f64,
    pub comm_noise_dbm: f64,
    pub sensing_noise_dbm: f64,
    pub beta0_db: f64,
    pub symbols: usize,
    /// `P L |α|² / σ_S²` in dB.
    pub sensing_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserBlock {
    pub height_m: f64,
    pub azimuth_rad: f64,
    pub range_m: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSwitches {
    pub proposed: bool,
    pub b1: bool,
    pub b2: bool,
    pub b3: bool,
}

impl Default for SchemeSwitches {
    fn default() -> Self {
        Self { proposed: true, b1: true, b2: true, b3: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Explicit rate targets; when absent the grid below is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates_bpshz: Option<Vec<f64>>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_min_rate")]
    pub min_rate_bpshz: f64,
    /// Upper end of the grid as a fraction of the maximum-ratio capacity.
    #[serde(default = "default_max_fraction")]
    pub max_capacity_fraction: f64,
    #[serde(default)]
    pub schemes: SchemeSwitches,
}

fn default_points() -> usize {
    20
}
fn default_min_rate() -> f64 {
    0.1
}
fn default_max_fraction() -> f64 {
    0.99
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub trials: usize,
    pub seed: u64,
    pub grid_size: usize,
}

impl Default for McBlock {
    fn default() -> Self {
        Self { trials: 2000, seed: 1, grid_size: 8192 }
    }
}

/// Link budget in linear units, derived at load time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearLink {
    pub power_w: f64,
    pub comm_noise_w: f64,
    pub sensing_noise_w: f64,
    pub beta0: f64,
    /// `|α|² = 10^{snr/10} σ_S² / (P L)`.
    pub alpha_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryBlock,
    pub target: TargetBlock,
    pub prior: PriorBlock,
    pub link: LinkBlock,
    pub user: UserBlock,
    pub sweep: SweepBlock,
    #[serde(default)]
    pub mc: McBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(skip)]
    linear: LinearLink,
}

pub fn dbm_to_watts(x: f64) -> f64 {
    10f64.powf(x / 10.0) * 1e-3
}

pub fn db_to_linear(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive and finite, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, "must be finite"))
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_json(&text)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        cfg.linear = cfg.derive_linear();
        cfg.check_rates()?;
        Ok(cfg)
    }

    /// The shipped default scenario.
    pub fn default_scenario() -> Self {
        Self::from_json(DEFAULT_CONFIG).expect("shipped default config is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn linear(&self) -> &LinearLink {
        &self.linear
    }

    fn derive_linear(&self) -> LinearLink {
        let l = &self.link;
        let power_w = dbm_to_watts(l.power_dbm);
        let sensing_noise_w = dbm_to_watts(l.sensing_noise_dbm);
        LinearLink {
            power_w,
            comm_noise_w: dbm_to_watts(l.comm_noise_dbm),
            sensing_noise_w,
            beta0: db_to_linear(l.beta0_db),
            alpha_sq: db_to_linear(l.sensing_snr_db) * sensing_noise_w / (power_w * l.symbols as f64),
        }
    }

    fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        for (name, v) in [
            ("geometry.tx_rows", g.tx_rows),
            ("geometry.tx_cols", g.tx_cols),
            ("geometry.rx_rows", g.rx_rows),
            ("geometry.rx_cols", g.rx_cols),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        positive("geometry.spacing_over_wavelength", g.spacing_over_wavelength)?;
        if !(g.bs_height_m >= 0.0) || !g.bs_height_m.is_finite() {
            return Err(Error::config("geometry.bs_height_m", "must be nonnegative"));
        }
        positive("target.range_m", self.target.range_m)?;
        if self.target.range_m < g.bs_height_m {
            return Err(Error::config("target.range_m", "slant range shorter than the BS height"));
        }

        let comps = &self.prior.components;
        if comps.is_empty() {
            return Err(Error::config("prior.components", "needs at least one component"));
        }
        for (k, c) in comps.iter().enumerate() {
            finite(&format!("prior.components[{k}].mean_rad"), c.mean_rad)?;
            positive(&format!("prior.components[{k}].concentration"), c.concentration)?;
            if !(0.0..=1.0).contains(&c.weight) {
                return Err(Error::config(format!("prior.components[{k}].weight"), "must lie in [0, 1]"));
            }
        }
        let total: f64 = comps.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config("prior.components", format!("weights sum to {total}, expected 1")));
        }

        let l = &self.link;
        for (name, v) in [
            ("link.power_dbm", l.power_dbm),
            ("link.comm_noise_dbm", l.comm_noise_dbm),
            ("link.sensing_noise_dbm", l.sensing_noise_dbm),
            ("link.beta0_db", l.beta0_db),
            ("link.sensing_snr_db", l.sensing_snr_db),
        ] {
            finite(name, v)?;
        }
        if l.symbols == 0 {
            return Err(Error::config("link.symbols", "must be at least 1"));
        }

        let u = &self.user;
        finite("user.height_m", u.height_m)?;
        finite("user.azimuth_rad", u.azimuth_rad)?;
        positive("user.range_m", u.range_m)?;
        if (u.height_m - g.bs_height_m).abs() > u.range_m {
            return Err(Error::config("user.range_m", "height difference exceeds the range"));
        }

        let s = &self.sweep;
        if s.rates_bpshz.is_none() {
            if s.points == 0 {
                return Err(Error::config("sweep.points", "must be at least 1"));
            }
            if !(s.min_rate_bpshz >= 0.0) {
                return Err(Error::config("sweep.min_rate_bpshz", "must be nonnegative"));
            }
            if !(s.max_capacity_fraction > 0.0 && s.max_capacity_fraction <= 1.0) {
                return Err(Error::config("sweep.max_capacity_fraction", "must lie in (0, 1]"));
            }
        }
        if self.mc.trials == 0 {
            return Err(Error::config("mc.trials", "must be at least 1"));
        }
        if self.mc.grid_size < 512 {
            return Err(Error::config("mc.grid_size", "must be at least 512"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.feas", t.feas),
            ("tolerances.kkt", t.kkt),
            ("tolerances.cluster", t.cluster),
            ("tolerances.mu", t.mu),
            ("tolerances.lambda", t.lambda),
            ("tolerances.tight", t.tight),
            ("tolerances.rate", t.rate),
            ("tolerances.gap", t.gap),
        ] {
            positive(name, v)?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> UpaGeometry {
        let g = &self.geometry;
        UpaGeometry {
            tx_rows: g.tx_rows,
            tx_cols: g.tx_cols,
            rx_rows: g.rx_rows,
            rx_cols: g.rx_cols,
            spacing_over_wavelength: g.spacing_over_wavelength,
            bs_height: g.bs_height_m,
        }
    }

    pub fn user(&self) -> UserPosition {
        UserPosition { height: self.user.height_m, azimuth: self.user.azimuth_rad, range: self.user.range_m }
    }

    pub fn prior(&self) -> Result<VonMisesMixture> {
        VonMisesMixture::new(
            self.prior
                .components
                .iter()
                .map(|c| VonMisesComponent { mean: c.mean_rad, concentration: c.concentration, weight: c.weight })
                .collect(),
        )
    }

    /// `log₂(1 + P‖h‖²/σ_C²)` with `‖h‖² = β₀N_t/r_U²`.
    pub fn mrt_capacity(&self) -> f64 {
        let l = &self.linear;
        let h2 = l.beta0 * self.geometry().n_tx() as f64 / self.user.range_m.powi(2);
        (l.power_w * h2 / l.comm_noise_w).ln_1p() / std::f64::consts::LN_2
    }

    /// Rate targets of the sweep, ascending as configured.
    pub fn rate_grid(&self) -> Vec<f64> {
        if let Some(r) = &self.sweep.rates_bpshz {
            return r.clone();
        }
        let s = &self.sweep;
        let hi = s.max_capacity_fraction * self.mrt_capacity();
        if s.points == 1 {
            return vec![s.min_rate_bpshz];
        }
        (0..s.points).map(|i| s.min_rate_bpshz + (hi - s.min_rate_bpshz) * i as f64 / (s.points - 1) as f64).collect()
    }

    fn check_rates(&self) -> Result<()> {
        let cap = self.mrt_capacity();
        if let Some(r) = &self.sweep.rates_bpshz {
            for (i, &v) in r.iter().enumerate() {
                if !(v >= 0.0) || v > cap {
                    return Err(Error::config(
                        format!("sweep.rates_bpshz[{i}]"),
                        format!("rate {v} outside [0, {cap:.6}] (maximum-ratio capacity)"),
                    ));
                }
            }
        } else if self.sweep.min_rate_bpshz > self.sweep.max_capacity_fraction * cap {
            return Err(Error::config("sweep.min_rate_bpshz", format!("exceeds the grid maximum {cap:.6}")));
        }
        Ok(())
    }
}

/// Numerical objects built from a configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub geometry: UpaGeometry,
    pub angles: SceneAngles,
    pub prior: VonMisesMixture,
    pub matrices: SensingMatrices,
    pub link: SensingLinkBudget,
    pub channel: CVec,
    pub power: f64,
    pub comm_noise: f64,
    pub tolerances: Tolerances,
}

impl Scenario {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let geometry = cfg.geometry();
        let angles = geometry.target_angles(cfg.target.range_m)?;
        let prior = cfg.prior()?;
        let matrices = SensingMatrices::assemble(&geometry, &angles, &prior, &PeriodicTrapezoid::default())?;
        let l = cfg.linear();
        let link = SensingLinkBudget::new(Complex64::new(l.alpha_sq.sqrt(), 0.0), cfg.link.symbols, l.sensing_noise_w)?;
        let channel = user_channel(&geometry, &cfg.user(), l.beta0)?;
        Ok(Self {
            geometry,
            angles,
            prior,
            matrices,
            link,
            channel,
            power: l.power_w,
            comm_noise: l.comm_noise_w,
            tolerances: cfg.tolerances,
        })
    }

    pub fn instance(&self, rate_target: f64) -> Result<ConvexInstance> {
        ConvexInstance::new(self.matrices.clone(), self.link, self.channel.clone(), self.power, self.comm_noise, rate_target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watts(10.0) - 0.01).abs() < 1e-15);
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-24);
        assert!((db_to_linear(-30.0) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn default_round_trips() {
        let a = ExperimentConfig::default_scenario();
        let b = ExperimentConfig::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        let expect = 10f64.powf(-0.8) * 1e-12 / (0.01 * 25.0);
        assert!((a.linear().alpha_sq - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn errors_carry_field_paths() {
        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG).unwrap();
        v["prior"]["components"][1]["weight"] = serde_json::json!(0.5);
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "prior.components"), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG).unwrap();
        v["link"]["symbols"] = serde_json::json!("many");
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "link.symbols"), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG).unwrap();
        v["sweep"]["rates_bpshz"] = serde_json::json!([1.0, 50.0]);
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "sweep.rates_bpshz[1]"), "{err}");
    }
}
