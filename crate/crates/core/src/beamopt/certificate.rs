//! Dual certificate `D*`, case classification and KKT residuals.

use num_complex::Complex64;
use serde::Serialize;

use super::{Case, ConvexInstance, RelaxedSolution, Tolerances};
use crate::linalg::{fro, hermitian_eig_desc, hermitian_part, lambda_max, lambda_min, outer, trace_prod};
use crate::{CMat, CVec, Error, Result};

/// Normalised duals (`z₁ = 1`) and the spectral data of `D*`.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub z2: Complex64,
    /// `z₃ - |z₂|²` after normalisation; zero at an exact optimum.
    pub z3_defect: f64,
    pub mu_r: f64,
    pub mu_p: f64,
    /// `A₁ + z₂A₂ᴴ + z₂*A₂ + |z₂|²A₃`.
    pub d_star: CMat,
    /// Eigenvalues of `D*`, descending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
    /// Size `E_n` of the top eigenvalue cluster.
    pub cluster: usize,
}

impl Certificate {
    pub fn d1(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn q1(&self) -> CVec {
        self.eigenvectors.column(0).into_owned()
    }

    /// `V`, the eigenvectors of the top cluster.
    pub fn cluster_basis(&self) -> CMat {
        self.eigenvectors.columns(0, self.cluster).into_owned()
    }

    /// `μ_P I - (D* + μ_R hhᴴ)`.
    pub fn z_c(&self, h: &CVec) -> CMat {
        let n = h.len();
        CMat::identity(n, n) * Complex64::new(self.mu_p, 0.0) - &self.d_star - outer(h, h) * Complex64::new(self.mu_r, 0.0)
    }

    /// `μ_P I - (D* - μ_R γ hhᴴ)`.
    pub fn z_s(&self, h: &CVec, gamma: f64) -> CMat {
        let n = h.len();
        CMat::identity(n, n) * Complex64::new(self.mu_p, 0.0) - &self.d_star + outer(h, h) * Complex64::new(self.mu_r * gamma, 0.0)
    }
}

/// Normalises `Z_B` so that `z₁ = 1` and eigen-decomposes `D*`.
pub fn recover_certificate(sol: &RelaxedSolution, inst: &ConvexInstance, tol: &Tolerances) -> Result<Certificate> {
    let d = &sol.duals;
    if !(d.z1.abs() >= 1e-9) {
        return Err(Error::DegenerateDual(d.z1.abs()));
    }
    let z2 = d.z2 / d.z1;
    let z3 = d.z3 / d.z1;
    let m = &inst.mat;
    let d_star = hermitian_part(&(&m.a1 + m.a2.adjoint() * z2 + &m.a2 * z2.conj() + &m.a3 * Complex64::new(z2.norm_sqr(), 0.0)));
    let (eigenvalues, eigenvectors) = hermitian_eig_desc(&d_star);
    let d1 = eigenvalues[0];
    let cluster = eigenvalues.iter().take_while(|&&v| d1 - v <= tol.cluster * d1.abs()).count().max(1);
    Ok(Certificate {
        z2,
        z3_defect: z3 - z2.norm_sqr(),
        mu_r: d.mu_r / d.z1,
        mu_p: d.mu_p / d.z1,
        d_star,
        eigenvalues,
        eigenvectors,
        cluster,
    })
}

/// Quantities the classification was decided on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseMargins {
    /// `μ_R‖h‖² / d₁`.
    pub mu_r_rel: f64,
    /// `λ₁(D* + μ_R hhᴴ)`.
    pub lambda_plus: f64,
    /// `λ₁(D* - μ_R γ hhᴴ)`.
    pub lambda_minus: f64,
    /// `(λ_plus - λ_minus) / d₁`.
    pub lambda_gap_rel: f64,
}

pub fn classify_case(sol: &RelaxedSolution, cert: &Certificate, inst: &ConvexInstance, tol: &Tolerances) -> (Case, CaseMargins) {
    let h = &inst.channel;
    let d1 = cert.d1();
    let hh = outer(h, h);
    let lambda_plus = lambda_max(&(&cert.d_star + &hh * Complex64::new(cert.mu_r, 0.0)));
    let lambda_minus = lambda_max(&(&cert.d_star - &hh * Complex64::new(cert.mu_r * sol.gamma, 0.0)));
    let margins = CaseMargins {
        mu_r_rel: cert.mu_r * h.norm_squared() / d1,
        lambda_plus,
        lambda_minus,
        lambda_gap_rel: (lambda_plus - lambda_minus) / d1,
    };
    let case = if !sol.rate_constraint || margins.mu_r_rel <= tol.mu {
        Case::I
    } else if margins.lambda_gap_rel > tol.lambda {
        Case::II
    } else {
        Case::III
    };
    (case, margins)
}

/// Scaled KKT residuals. Complementarity terms are divided by `d₁P`,
/// stationarity and dual feasibility by `d₁`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct KktResiduals {
    /// Negative part of `λ_min(B)` relative to `tr B`.
    pub primal_lmi: f64,
    pub comp_objective: f64,
    pub comp_rate: f64,
    pub comp_power: f64,
    pub comp_comm: f64,
    pub comp_sensing: f64,
    /// `|z₁ - 1|` before normalisation.
    pub stat_t: f64,
    pub stat_comm: f64,
    pub stat_sensing: f64,
    pub dual_feasibility: f64,
    pub z_defect: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        [
            self.primal_lmi,
            self.comp_objective,
            self.comp_rate,
            self.comp_power,
            self.comp_comm,
            self.comp_sensing,
            self.stat_t,
            self.stat_comm,
            self.stat_sensing,
            self.dual_feasibility,
            self.z_defect,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn kkt_residuals(sol: &RelaxedSolution, cert: &Certificate, inst: &ConvexInstance) -> KktResiduals {
    let h = &inst.channel;
    let p = inst.power;
    let d1 = cert.d1();
    let scale = d1 * p;
    let r = sol.covariance();
    let (t1, tau, t3) = inst.mat.traces(&r);
    let b = nalgebra::Matrix2::new(Complex64::new(t1 - sol.t, 0.0), tau, tau.conj(), Complex64::new(t3, 0.0));
    let b_min = b.symmetric_eigenvalues().min();
    let comp_objective = (t1 - sol.t + 2.0 * (cert.z2.conj() * tau).re + (cert.z3_defect + cert.z2.norm_sqr()) * t3).abs();

    let hc = crate::linalg::quad_form(&sol.r_c, h);
    let hs = crate::linalg::quad_form(&sol.r_s, h);
    let rate_slack = hc - sol.gamma * (inst.noise + hs);
    let power_slack = p - r.trace().re;

    let z_c = cert.z_c(h);
    let z1 = sol.duals.z1;
    let inv_z1 = Complex64::new(1.0 / z1, 0.0);
    let mut out = KktResiduals {
        primal_lmi: (-b_min).max(0.0) / (t1 - sol.t + t3).abs().max(f64::MIN_POSITIVE),
        comp_objective: comp_objective / scale,
        comp_rate: if sol.rate_constraint { (cert.mu_r * rate_slack).abs() / scale } else { 0.0 },
        comp_power: (cert.mu_p * power_slack).abs() / scale,
        comp_comm: trace_prod(&z_c, &sol.r_c).norm() / scale,
        comp_sensing: 0.0,
        stat_t: (z1 - 1.0).abs(),
        stat_comm: fro(&(&z_c - &sol.duals.z_c * inv_z1)) / d1,
        stat_sensing: 0.0,
        dual_feasibility: 0.0,
        z_defect: cert.z3_defect.abs() / (1.0 + cert.z2.norm_sqr()),
    };
    let mut dual_neg = (-lambda_min(&z_c)).max(0.0) / d1;
    dual_neg = dual_neg.max((-cert.mu_p).max(0.0) / d1);
    dual_neg = dual_neg.max((-cert.mu_r * h.norm_squared()).max(0.0) / d1);
    if let Some(z_s_solver) = &sol.duals.z_s {
        let z_s = cert.z_s(h, sol.gamma);
        out.comp_sensing = trace_prod(&z_s, &sol.r_s).norm() / scale;
        out.stat_sensing = fro(&(&z_s - z_s_solver * inv_z1)) / d1;
        dual_neg = dual_neg.max((-lambda_min(&z_s)).max(0.0) / d1);
    }
    out.dual_feasibility = dual_neg;
    out
}
