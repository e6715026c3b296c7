//! Browser bindings. Every method returns a JSON string; errors become
//! JavaScript exceptions carrying the library's message.

use std::f64::consts::PI;

use isac_pcrb::baselines::{dual_functional, most_probable_angle, sensing_oriented};
use isac_pcrb::beamopt::{optimize, BeamSolution};
use isac_pcrb::config::{ExperimentConfig, Scenario, DEFAULT_CONFIG};
use isac_pcrb::geometry::steering_tx;
use isac_pcrb::CVec;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json(v: &impl Serialize) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(js)
}

#[wasm_bindgen]
pub fn default_config() -> String {
    DEFAULT_CONFIG.to_string()
}

#[derive(Serialize)]
struct Density {
    theta: Vec<f64>,
    pdf: Vec<f64>,
    mode: f64,
    prior_fisher: f64,
}

#[derive(Serialize)]
struct Point {
    rate_target: f64,
    pcrb: f64,
    rate: f64,
    case: String,
    sensing_power_frac: f64,
    kkt_residual: f64,
    /// Azimuth grid and the power each beam radiates toward it.
    theta: Vec<f64>,
    comm_pattern: Vec<f64>,
    sensing_pattern: Vec<f64>,
}

#[derive(Serialize)]
struct CurveRow {
    rate_target: f64,
    proposed: Option<f64>,
    b1: Option<f64>,
    b2: Option<f64>,
    b3: Option<f64>,
    case: Option<String>,
}

#[derive(Serialize)]
struct Curve {
    mrt_capacity: f64,
    rows: Vec<CurveRow>,
}

/// A scenario assembled once; the sensing matrices are the expensive part.
#[wasm_bindgen]
pub struct Demo {
    cfg: ExperimentConfig,
    sc: Scenario,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(config_json: &str) -> Result<Demo, JsValue> {
        let cfg = ExperimentConfig::from_json(config_json).map_err(js)?;
        let sc = Scenario::from_config(&cfg).map_err(js)?;
        Ok(Demo { cfg, sc })
    }

    pub fn mrt_capacity(&self) -> f64 {
        self.cfg.mrt_capacity()
    }

    /// Prior density on `n` points of `[-π, π)`.
    pub fn prior_density(&self, n: usize) -> Result<String, JsValue> {
        let n = n.max(2);
        let theta: Vec<f64> = (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect();
        let pdf = theta.iter().map(|&t| self.sc.prior.pdf(t)).collect();
        to_json(&Density { theta, pdf, mode: self.sc.prior.mode(1 << 14), prior_fisher: self.sc.matrices.prior_fisher })
    }

    /// Proposed design at one rate target with its beam patterns.
    pub fn solve(&self, rate_target: f64, pattern_points: usize) -> Result<String, JsValue> {
        let inst = self.sc.instance(rate_target).map_err(js)?;
        let b = optimize(&inst, &self.sc.tolerances).map_err(js)?;
        let n = pattern_points.max(2);
        let theta: Vec<f64> = (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect();
        let pattern = |v: Option<&CVec>| -> Vec<f64> {
            theta.iter().map(|&t| v.map_or(0.0, |v| steering_tx(&self.sc.geometry, &self.sc.angles, t).dotc(v).norm_sqr())).collect()
        };
        to_json(&Point {
            rate_target,
            pcrb: b.pcrb,
            rate: b.rate,
            case: b.case.to_string(),
            sensing_power_frac: b.sensing_power_fraction(),
            kkt_residual: b.kkt.max(),
            comm_pattern: pattern(Some(&b.w)),
            sensing_pattern: pattern(b.s.first()),
            theta,
        })
    }

    /// PCRB against rate target for every scheme on `points` targets up to
    /// `fraction` of the maximum-ratio capacity.
    pub fn tradeoff(&self, points: usize, fraction: f64) -> Result<String, JsValue> {
        let cap = self.cfg.mrt_capacity();
        let points = points.max(2);
        let lo = self.cfg.sweep.min_rate_bpshz.min(cap * fraction);
        let tol = &self.sc.tolerances;
        let pcrb = |r: isac_pcrb::Result<BeamSolution>| r.ok().map(|b| b.pcrb);
        let mut rows = Vec::with_capacity(points);
        let b1 = pcrb(self.sc.instance(lo).and_then(|i| sensing_oriented(&i, tol)));
        for k in 0..points {
            let rate_target = lo + (cap * fraction - lo) * k as f64 / (points - 1) as f64;
            let inst = self.sc.instance(rate_target).map_err(js)?;
            let p = optimize(&inst, tol).ok();
            rows.push(CurveRow {
                rate_target,
                proposed: p.as_ref().map(|b| b.pcrb),
                case: p.as_ref().map(|b| b.case.to_string()),
                b1,
                b2: pcrb(dual_functional(&inst, tol, self.cfg.mc.seed)),
                b3: pcrb(most_probable_angle(&inst, &self.sc.geometry, &self.sc.angles, &self.sc.prior, tol)),
            });
        }
        to_json(&Curve { mrt_capacity: cap, rows })
    }
}
