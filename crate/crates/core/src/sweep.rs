//! Rate-target sweeps over all schemes and their CSV / text reports.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::baselines::{dual_functional, most_probable_angle, sensing_oriented};
use crate::beamopt::{optimize, BeamSolution, Case};
use crate::config::{ExperimentConfig, Scenario};
use crate::{Error, Result};

/// Slack on the cross-scheme PCRB ordering.
pub const ORDERING_SLACK: f64 = 1e-8;
/// Slack on achieved rate versus target, bps/Hz.
pub const RATE_SLACK: f64 = 1e-6;

pub const CSV_HEADER: &str =
    "rate_target_bpshz,scheme,pcrb,rate_achieved_bpshz,case,rank_rc,rank_rs,sensing_power_frac,kkt_residual,solve_ms,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Scheme {
    Proposed,
    /// Sensing only.
    B1,
    /// Communication beam only.
    B2,
    /// Designed for the prior mode.
    B3,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::B1, Scheme::B2, Scheme::B3];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::B1 => "b1",
            Scheme::B2 => "b2",
            Scheme::B3 => "b3",
        }
    }

    /// Schemes enabled in the config, in canonical order.
    pub fn enabled(cfg: &ExperimentConfig) -> Vec<Scheme> {
        let s = &cfg.sweep.schemes;
        Scheme::ALL
            .into_iter()
            .filter(|k| match k {
                Scheme::Proposed => s.proposed,
                Scheme::B1 => s.b1,
                Scheme::B2 => s.b2,
                Scheme::B3 => s.b3,
            })
            .collect()
    }

    /// Parses a comma-separated list such as `proposed,b1`.
    pub fn parse_list(text: &str) -> Result<Vec<Scheme>> {
        let mut out: Vec<Scheme> = text.split(',').map(str::trim).filter(|t| !t.is_empty()).map(Scheme::from_str).collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Scheme::Proposed),
            "b1" => Ok(Scheme::B1),
            "b2" => Ok(Scheme::B2),
            "b3" => Ok(Scheme::B3),
            other => Err(Error::Domain(format!("unknown scheme `{other}` (expected proposed, b1, b2, b3)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Figures of merit of one successful solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowResult {
    pub pcrb: f64,
    pub rate_achieved: f64,
    pub case: Case,
    pub rank_rc: usize,
    pub rank_rs: usize,
    pub sensing_power_frac: f64,
    pub kkt_residual: f64,
    /// `1 - g(purified)/t*`.
    pub tightness_loss: f64,
    pub sensing_beams: usize,
    pub power: f64,
    /// Case III only: `|μ_P - d₁|/d₁` and `‖hᴴV‖/‖h‖`.
    pub mu_p_gap: Option<f64>,
    pub h_v_overlap: Option<f64>,
}

impl RowResult {
    fn from_solution(b: &BeamSolution) -> Self {
        Self {
            pcrb: b.pcrb,
            rate_achieved: b.rate,
            case: b.case,
            rank_rc: b.rank_rc,
            rank_rs: b.rank_rs,
            sensing_power_frac: b.sensing_power_fraction(),
            kkt_residual: b.kkt.max(),
            tightness_loss: 1.0 - b.sensing_gain / b.relaxed_objective,
            sensing_beams: b.s.len(),
            power: b.total_power(),
            mu_p_gap: b.case_three.as_ref().map(|c| c.mu_p_gap),
            h_v_overlap: b.case_three.as_ref().map(|c| c.h_v_overlap),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub rate_target: f64,
    pub scheme: Scheme,
    /// `Ok` figures or the error label and message.
    pub result: std::result::Result<RowResult, (String, String)>,
    pub solve_ms: f64,
}

impl SweepRow {
    pub fn status(&self) -> &str {
        match &self.result {
            Ok(_) => "ok",
            Err((label, _)) => label,
        }
    }

    pub fn ok(&self) -> Option<&RowResult> {
        self.result.as_ref().ok()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// MRT capacity of the scenario, bps/Hz.
    pub mrt_capacity: f64,
    /// Transmit power budget, W.
    pub power: f64,
}

impl SweepTable {
    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.ok().is_none())
    }

    /// Successful rows of one scheme in rate order.
    pub fn scheme_rows(&self, scheme: Scheme) -> impl Iterator<Item = (f64, &RowResult)> {
        self.rows.iter().filter(move |r| r.scheme == scheme).filter_map(|r| r.ok().map(|o| (r.rate_target, o)))
    }

    fn lookup(&self, rate: f64, scheme: Scheme) -> Option<&RowResult> {
        self.rows.iter().find(|r| r.scheme == scheme && r.rate_target == rate).and_then(SweepRow::ok)
    }

    /// Checks the structural properties every sweep must satisfy and
    /// returns one message per violation.
    pub fn invariant_violations(&self, tight_tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rows {
            let Some(o) = r.ok() else { continue };
            let tag = format!("R̄={:.6} {}", r.rate_target, r.scheme);
            if r.scheme != Scheme::B1 && o.rate_achieved < r.rate_target - RATE_SLACK {
                out.push(format!("{tag}: rate {:.9} below target", o.rate_achieved));
            }
            if o.power > self.power * (1.0 + 1e-8) {
                out.push(format!("{tag}: power {:.6e} exceeds budget {:.6e}", o.power, self.power));
            }
            if o.sensing_beams > 1 {
                out.push(format!("{tag}: {} sensing beams", o.sensing_beams));
            }
            if r.scheme == Scheme::Proposed && o.tightness_loss > tight_tol {
                out.push(format!("{tag}: purified objective loses {:.3e}", o.tightness_loss));
            }
        }
        let mut rates: Vec<f64> = self.rows.iter().map(|r| r.rate_target).collect();
        rates.sort_by(f64::total_cmp);
        rates.dedup();
        for &rate in &rates {
            let Some(p) = self.lookup(rate, Scheme::Proposed) else { continue };
            if let Some(b1) = self.lookup(rate, Scheme::B1) {
                if b1.pcrb > p.pcrb + ORDERING_SLACK {
                    out.push(format!("R̄={rate:.6}: b1 PCRB {:.9e} above proposed {:.9e}", b1.pcrb, p.pcrb));
                }
            }
            for s in [Scheme::B2, Scheme::B3] {
                if let Some(b) = self.lookup(rate, s) {
                    if p.pcrb > b.pcrb + ORDERING_SLACK {
                        out.push(format!("R̄={rate:.6}: proposed PCRB {:.9e} above {s} {:.9e}", p.pcrb, b.pcrb));
                    }
                }
            }
        }
        let proposed: Vec<(f64, f64)> = self.scheme_rows(Scheme::Proposed).map(|(r, o)| (r, o.pcrb)).collect();
        for pair in proposed.windows(2) {
            if pair[1].0 >= pair[0].0 && pair[1].1 < pair[0].1 - ORDERING_SLACK {
                out.push(format!("proposed PCRB decreases between R̄={:.6} and R̄={:.6}", pair[0].0, pair[1].0));
            }
        }
        out
    }
}

fn solve_one(sc: &Scenario, rate: f64, scheme: Scheme, seed: u64) -> Result<BeamSolution> {
    let inst = sc.instance(rate)?;
    let tol = &sc.tolerances;
    match scheme {
        Scheme::Proposed => optimize(&inst, tol),
        Scheme::B1 => sensing_oriented(&inst, tol),
        Scheme::B2 => dual_functional(&inst, tol, seed),
        Scheme::B3 => most_probable_angle(&inst, &sc.geometry, &sc.angles, &sc.prior, tol),
    }
}

/// One row per `(R̄, scheme)`, ordered by rate then scheme. Solver errors
/// are recorded in the row; only scenario construction errors abort.
pub fn run_sweep(cfg: &ExperimentConfig, schemes: &[Scheme]) -> Result<SweepTable> {
    let sc = Scenario::from_config(cfg)?;
    let seed = cfg.mc.seed;
    let mut jobs: Vec<(f64, Scheme)> = cfg.rate_grid().into_iter().flat_map(|r| schemes.iter().map(move |&s| (r, s))).collect();
    jobs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    jobs.dedup();

    let run = |&(rate, scheme): &(f64, Scheme)| {
        let start = Instant::now();
        let result =
            solve_one(&sc, rate, scheme, seed).map(|b| RowResult::from_solution(&b)).map_err(|e| (e.label().to_string(), e.to_string()));
        SweepRow { rate_target: rate, scheme, result, solve_ms: start.elapsed().as_secs_f64() * 1e3 }
    };
    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows = jobs.iter().map(run).collect();
    Ok(SweepTable { rows, mrt_capacity: cfg.mrt_capacity(), power: sc.power })
}

fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

/// CSV lines (without header) with the timing column optionally blanked,
/// which makes the output byte-comparable across runs.
pub fn csv_string(table: &SweepTable, with_timing: bool) -> String {
    let mut s = String::new();
    writeln!(s, "{CSV_HEADER}").unwrap();
    for r in &table.rows {
        let timing = if with_timing { sci(r.solve_ms) } else { String::new() };
        match &r.result {
            Ok(o) => writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},ok",
                sci(r.rate_target),
                r.scheme,
                sci(o.pcrb),
                sci(o.rate_achieved),
                o.case,
                o.rank_rc,
                o.rank_rs,
                sci(o.sensing_power_frac),
                sci(o.kkt_residual),
                timing,
            ),
            Err((label, _)) => writeln!(s, "{},{},,,,,,,,{},{}", sci(r.rate_target), r.scheme, timing, label),
        }
        .unwrap();
    }
    s
}

pub fn emit_csv(table: &SweepTable, out: &mut impl Write) -> std::io::Result<()> {
    out.write_all(csv_string(table, true).as_bytes())
}

/// Aligned text table followed by error details.
pub fn emit_human(table: &SweepTable, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:>9}  {:<8}  {:>13}  {:>9}  {:>4}  {:>5}  {:>5}  {:>7}  {:>9}  {:>9}  status",
        "R̄ [b/s/Hz]", "scheme", "PCRB", "rate", "case", "rk_C", "rk_S", "sens%", "kkt", "ms"
    )?;
    for r in &table.rows {
        match &r.result {
            Ok(o) => writeln!(
                out,
                "{:>11.4}  {:<8}  {:>13.6e}  {:>9.4}  {:>4}  {:>5}  {:>5}  {:>7.2}  {:>9.2e}  {:>9.1}  ok",
                r.rate_target,
                r.scheme.label(),
                o.pcrb,
                o.rate_achieved,
                o.case.label(),
                o.rank_rc,
                o.rank_rs,
                100.0 * o.sensing_power_frac,
                o.kkt_residual,
                r.solve_ms,
            )?,
            Err((label, _)) => writeln!(
                out,
                "{:>11.4}  {:<8}  {:>13}  {:>9}  {:>4}  {:>5}  {:>5}  {:>7}  {:>9}  {:>9.1}  {label}",
                r.rate_target,
                r.scheme.label(),
                "-",
                "-",
                "-",
                "-",
                "-",
                "-",
                "-",
                r.solve_ms
            )?,
        }
    }
    for r in &table.rows {
        if let Err((_, msg)) = &r.result {
            writeln!(out, "R̄={:.6} {}: {msg}", r.rate_target, r.scheme)?;
        }
    }
    Ok(())
}
