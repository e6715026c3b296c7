//! ISAC transmit beamforming: the semidefinite relaxation over the
//! communication and sensing covariances, its dual certificate, the
//! three-way case classification and rank-one purification.
//!
//! [`optimize`] runs the whole pipeline; the individual steps are public so
//! that tests and the baselines can inspect intermediate results.

mod certificate;
mod purify;
mod relax;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fisher::{SensingLinkBudget, SensingMatrices};
use crate::linalg::outer;
use crate::{CMat, CVec, Error, Result};

pub use certificate::{classify_case, kkt_residuals, recover_certificate, CaseMargins, Certificate, KktResiduals};
pub use purify::{purify, CaseThreeBasis};
pub use relax::{solve_relaxation, DualVariables, Formulation, RelaxationOptions, RelaxedSolution};

/// Numerical tolerances of the pipeline. All are relative unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// LMI residual accepted on the relaxed primal.
    pub feas: f64,
    /// Complementary slackness / stationarity residual.
    pub kkt: f64,
    /// Relative eigengap defining the top cluster of `D*`, and the
    /// relative eigenvalue floor for numerical ranks.
    pub cluster: f64,
    /// `μ_R` threshold for Case I.
    pub mu: f64,
    /// Eigenvalue gap separating Case II from Case III.
    pub lambda: f64,
    /// Allowed objective loss of the purified beams.
    pub tight: f64,
    /// Allowed rate shortfall, bps/Hz (absolute).
    pub rate: f64,
    /// Allowed relative duality gap of the relaxation.
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { feas: 1e-7, kkt: 1e-6, cluster: 1e-6, mu: 1e-7, lambda: 1e-6, tight: 1e-6, rate: 1e-9, gap: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// Rate constraint inactive; the communication beam alone does sensing.
    I,
    /// Rate constraint binding with no sensing beam.
    II,
    /// Rate constraint binding with one dedicated sensing beam.
    III,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One beamforming problem: sensing statistics, user channel and budget.
#[derive(Debug, Clone)]
pub struct ConvexInstance {
    pub mat: SensingMatrices,
    pub link: SensingLinkBudget,
    pub channel: CVec,
    /// Transmit power budget `P`, W.
    pub power: f64,
    /// Communication noise power `σ_C²`, W.
    pub noise: f64,
    /// Rate target `R̄`, bps/Hz.
    pub rate_target: f64,
}

impl ConvexInstance {
    pub fn new(mat: SensingMatrices, link: SensingLinkBudget, channel: CVec, power: f64, noise: f64, rate_target: f64) -> Result<Self> {
        if !(power > 0.0) {
            return Err(Error::Domain("transmit power must be positive".into()));
        }
        if !(noise > 0.0) {
            return Err(Error::Domain("communication noise power must be positive".into()));
        }
        if !(rate_target >= 0.0) || !rate_target.is_finite() {
            return Err(Error::Domain(format!("rate target {rate_target} must be finite and nonnegative")));
        }
        if channel.len() != mat.n_tx() {
            return Err(Error::Domain(format!("channel length {} does not match {} transmit antennas", channel.len(), mat.n_tx())));
        }
        if channel.norm() == 0.0 {
            return Err(Error::DegenerateInput("user channel is zero".into()));
        }
        let inst = Self { mat, link, channel, power, noise, rate_target };
        inst.check_feasible()?;
        Ok(inst)
    }

    /// `γ = 2^R̄ - 1`.
    pub fn snr_floor(&self) -> f64 {
        self.rate_target.exp2() - 1.0
    }

    /// `P‖h‖²/σ_C²`, the SNR of maximum-ratio transmission.
    pub fn mrt_snr(&self) -> f64 {
        self.power * self.channel.norm_squared() / self.noise
    }

    /// `log₂(1 + P‖h‖²/σ_C²)`.
    pub fn mrt_capacity(&self) -> f64 {
        self.mrt_snr().ln_1p() / std::f64::consts::LN_2
    }

    pub fn check_feasible(&self) -> Result<()> {
        if self.snr_floor() > self.mrt_snr() * (1.0 + 1e-12) {
            return Err(Error::Infeasible(format!(
                "rate target {:.6} exceeds the maximum-ratio capacity {:.6} bps/Hz",
                self.rate_target,
                self.mrt_capacity()
            )));
        }
        Ok(())
    }

    pub fn with_rate_target(&self, rate_target: f64) -> Result<Self> {
        Self::new(self.mat.clone(), self.link, self.channel.clone(), self.power, self.noise, rate_target)
    }

    /// Same instance with different sensing matrices.
    pub fn with_matrices(&self, mat: SensingMatrices) -> Result<Self> {
        Self::new(mat, self.link, self.channel.clone(), self.power, self.noise, self.rate_target)
    }
}

/// `log₂(1 + |hᴴw|² / (‖hᴴS‖² + σ_C²))`.
pub fn rate(h: &CVec, w: &CVec, s: &[CVec], noise: f64) -> f64 {
    let signal = h.dotc(w).norm_sqr();
    let interference: f64 = s.iter().map(|si| h.dotc(si).norm_sqr()).sum();
    (signal / (interference + noise)).ln_1p() / std::f64::consts::LN_2
}

/// Transmit covariance `wwᴴ + Σ sᵢsᵢᴴ`.
pub fn transmit_covariance(w: &CVec, s: &[CVec]) -> CMat {
    let mut r = outer(w, w);
    for si in s {
        r += outer(si, si);
    }
    r
}

/// Rank-one transmit design with its figures of merit and diagnostics.
#[derive(Debug, Clone)]
pub struct BeamSolution {
    /// Communication beam, phase-aligned so that `hᴴw ≥ 0`.
    pub w: CVec,
    /// Dedicated sensing beams (at most one).
    pub s: Vec<CVec>,
    pub pcrb: f64,
    /// Achieved user rate, bps/Hz.
    pub rate: f64,
    /// `g(wwᴴ + SSᴴ)`.
    pub sensing_gain: f64,
    pub case: Case,
    pub margins: CaseMargins,
    pub certificate: Certificate,
    pub case_three: Option<CaseThreeBasis>,
    /// Whether the output differs structurally from the relaxed optimum.
    pub purification_applied: bool,
    /// Relaxed objective `t*`.
    pub relaxed_objective: f64,
    /// Numerical ranks of the relaxed `R_C` and `R_S`.
    pub rank_rc: usize,
    pub rank_rs: usize,
    pub kkt: KktResiduals,
}

impl BeamSolution {
    pub fn covariance(&self) -> CMat {
        transmit_covariance(&self.w, &self.s)
    }

    pub fn total_power(&self) -> f64 {
        self.s.iter().map(|s| s.norm_squared()).fold(self.w.norm_squared(), |a, b| a + b)
    }

    /// Share of the transmit power spent on sensing beams.
    pub fn sensing_power_fraction(&self) -> f64 {
        let total = self.total_power();
        if total == 0.0 {
            return 0.0;
        }
        self.s.iter().map(|s| s.norm_squared()).fold(0.0, |a, b| a + b) / total
    }
}

/// Full pipeline: relax, certify, classify, purify.
pub fn optimize(inst: &ConvexInstance, tol: &Tolerances) -> Result<BeamSolution> {
    optimize_with(inst, tol, &RelaxationOptions::default())
}

pub fn optimize_with(inst: &ConvexInstance, tol: &Tolerances, opts: &RelaxationOptions) -> Result<BeamSolution> {
    let sol = solve_relaxation(inst, tol, opts)?;
    let cert = recover_certificate(&sol, inst, tol)?;
    let (case, margins) = classify_case(&sol, &cert, inst, tol);
    let kkt = kkt_residuals(&sol, &cert, inst);
    purify(&sol, &cert, inst, tol, case, margins, kkt)
}

pub(crate) fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}
