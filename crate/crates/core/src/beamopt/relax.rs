//! The relaxed problem
//!
//! ```text
//! maximize    t
//! subject to  [[tr(A₁R) - t, tr(A₂R)], [tr(A₂R)*, tr(A₃R)]] ⪰ 0,   R = R_C + R_S
//!             hᴴR_C h ≥ γ(σ_C² + hᴴR_S h)
//!             tr(R_C + R_S) ≤ P,   R_C ⪰ 0,   R_S ⪰ 0
//! ```
//!
//! written as a real block LMI for [`crate::sdp`]. Internally `P = 1`,
//! `‖h‖ = 1` and `λ_max(A₁) = 1`; results are mapped back to physical units.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{c0, ConvexInstance, Tolerances};
use crate::linalg::{hermitian_part, lambda_max, outer, unembed_hermitian};
use crate::sdp::{IpmSettings, SdpProblem, SdpSolution, SolverStatus};
use crate::{CMat, CVec, Error, Result};

/// How the 2×2 Hermitian objective constraint is posed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    /// Realified 4×4 embedding of the Hermitian 2×2 block.
    HermitianLmi,
    /// `(tr(A₁R) - t)·tr(A₃R) ≥ |tr(A₂R)|²` as a rotated second-order cone
    /// (arrow LMI). Used as a cross-check.
    RotatedCone,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationOptions {
    pub formulation: Formulation,
    /// Allow a sensing covariance `R_S`; `false` forces `R_S = 0`.
    pub sensing_beams: bool,
    /// Impose the rate constraint; `false` drops it entirely.
    pub rate_constraint: bool,
    /// Relative inflation of `γ` so that rounding in the recovered beams
    /// cannot push the rate below target.
    pub gamma_margin: f64,
    pub ipm: IpmSettings,
}

impl Default for RelaxationOptions {
    fn default() -> Self {
        Self {
            formulation: Formulation::HermitianLmi,
            sensing_beams: true,
            rate_constraint: true,
            gamma_margin: 1e-7,
            ipm: IpmSettings::default(),
        }
    }
}

/// Lagrange multipliers in physical units, `Z_B` unnormalised.
#[derive(Debug, Clone)]
pub struct DualVariables {
    pub z1: f64,
    pub z2: Complex64,
    pub z3: f64,
    pub mu_r: f64,
    pub mu_p: f64,
    pub z_c: CMat,
    /// Absent when the sensing covariance was not a variable.
    pub z_s: Option<CMat>,
}

#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    pub t: f64,
    pub r_c: CMat,
    pub r_s: CMat,
    pub duals: DualVariables,
    pub status: SolverStatus,
    pub iterations: usize,
    pub rel_gap: f64,
    pub formulation: Formulation,
    /// `γ` actually imposed (0 when the rate constraint is dropped).
    pub gamma: f64,
    pub rate_constraint: bool,
    pub sensing_beams: bool,
    /// `λ_max(A₁)`, the internal objective scale.
    pub objective_scale: f64,
}

impl RelaxedSolution {
    pub fn covariance(&self) -> CMat {
        &self.r_c + &self.r_s
    }
}

/// Parameterisation of an `n × n` Hermitian variable by `n²` reals: the
/// diagonal, then `(Re, Im)` of each upper off-diagonal entry.
struct HermLayout {
    offset: usize,
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl HermLayout {
    fn new(offset: usize, n: usize) -> Self {
        let pairs = (0..n).flat_map(|p| (p + 1..n).map(move |q| (p, q))).collect();
        Self { offset, n, pairs }
    }

    fn len(&self) -> usize {
        self.n * self.n
    }

    /// Coefficients `c` with `tr(A R) = Σₖ cₖ yₖ`.
    fn trace_coeffs(&self, a: &CMat) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n {
            out.push(a[(i, i)]);
        }
        for &(p, q) in &self.pairs {
            out.push(a[(p, q)] + a[(q, p)]);
            out.push(Complex64::i() * (a[(q, p)] - a[(p, q)]));
        }
        out
    }

    /// Adds `[[Re R, -Im R], [Im R, Re R]] ⪰ 0` as block `block`.
    fn embed(&self, prob: &mut SdpProblem, block: usize) {
        let n = self.n;
        for i in 0..n {
            prob.add_coefficient(self.offset + i, block, i, i, 1.0);
            prob.add_coefficient(self.offset + i, block, i + n, i + n, 1.0);
        }
        for (k, &(p, q)) in self.pairs.iter().enumerate() {
            let re = self.offset + n + 2 * k;
            prob.add_coefficient(re, block, p, q, 1.0);
            prob.add_coefficient(re, block, p + n, q + n, 1.0);
            let im = re + 1;
            prob.add_coefficient(im, block, n + p, q, 1.0);
            prob.add_coefficient(im, block, n + q, p, -1.0);
        }
    }

    fn read(&self, y: &DVector<f64>) -> CMat {
        let n = self.n;
        let mut r = CMat::zeros(n, n);
        for i in 0..n {
            r[(i, i)] = Complex64::new(y[self.offset + i], 0.0);
        }
        for (k, &(p, q)) in self.pairs.iter().enumerate() {
            let idx = self.offset + n + 2 * k;
            let z = Complex64::new(y[idx], y[idx + 1]);
            r[(p, q)] = z;
            r[(q, p)] = z.conj();
        }
        r
    }
}

struct Blocks {
    objective: usize,
    comm: usize,
    sensing: Option<usize>,
    rate: Option<usize>,
    power: usize,
}

fn add_objective_entries(prob: &mut SdpProblem, form: Formulation, blk: usize, var: usize, c1: f64, ct: Complex64, c3: f64) {
    match form {
        Formulation::HermitianLmi => {
            prob.add_coefficient(var, blk, 0, 0, c1);
            prob.add_coefficient(var, blk, 2, 2, c1);
            prob.add_coefficient(var, blk, 1, 1, c3);
            prob.add_coefficient(var, blk, 3, 3, c3);
            prob.add_coefficient(var, blk, 0, 1, ct.re);
            prob.add_coefficient(var, blk, 2, 3, ct.re);
            prob.add_coefficient(var, blk, 1, 2, ct.im);
            prob.add_coefficient(var, blk, 0, 3, -ct.im);
        }
        Formulation::RotatedCone => {
            // arrow matrix [[x0, uᵀ], [u, x0·I]] with x0 = b11 + b22,
            // u = (2 Re τ, 2 Im τ, b11 - b22)
            for d in 0..4 {
                prob.add_coefficient(var, blk, d, d, c1 + c3);
            }
            prob.add_coefficient(var, blk, 0, 1, 2.0 * ct.re);
            prob.add_coefficient(var, blk, 0, 2, 2.0 * ct.im);
            prob.add_coefficient(var, blk, 0, 3, c1 - c3);
        }
    }
}

/// `(z₁, z₂, z₃)` from the multiplier of the objective block.
fn objective_dual(form: Formulation, x: &nalgebra::DMatrix<f64>) -> (f64, Complex64, f64) {
    match form {
        Formulation::HermitianLmi => {
            let z = unembed_hermitian(x) * Complex64::new(2.0, 0.0);
            (z[(0, 0)].re, z[(0, 1)], z[(1, 1)].re)
        }
        Formulation::RotatedCone => {
            let tr = x.trace();
            (tr + 2.0 * x[(0, 3)], Complex64::new(2.0 * x[(0, 1)], 2.0 * x[(0, 2)]), tr - 2.0 * x[(0, 3)])
        }
    }
}

/// Solves the relaxation and returns primal and dual optima.
pub fn solve_relaxation(inst: &ConvexInstance, tol: &Tolerances, opts: &RelaxationOptions) -> Result<RelaxedSolution> {
    let n = inst.mat.n_tx();
    let s_a = lambda_max(&inst.mat.a1);
    if !(s_a > 0.0) || !s_a.is_finite() {
        return Err(Error::DegenerateInput(format!("λ_max(A1) = {s_a:e}")));
    }
    let h_norm = inst.channel.norm();
    let h: CVec = &inst.channel / Complex64::new(h_norm, 0.0);
    let noise = inst.noise / (inst.power * h_norm * h_norm);
    let inv = Complex64::new(1.0 / s_a, 0.0);
    let (a1, a2, a3) = (&inst.mat.a1 * inv, &inst.mat.a2 * inv, &inst.mat.a3 * inv);
    let gamma = if opts.rate_constraint { (inst.snr_floor() * (1.0 + opts.gamma_margin)).min(1.0 / noise) } else { 0.0 };

    if opts.rate_constraint && gamma * noise >= 1.0 {
        return Ok(maximum_ratio_point(inst, opts, gamma, s_a));
    }

    let rc = HermLayout::new(1, n);
    let rs = opts.sensing_beams.then(|| HermLayout::new(1 + n * n, n));
    let m = 1 + rc.len() + rs.as_ref().map_or(0, HermLayout::len);

    let mut dims = vec![4, 2 * n];
    let mut next = 2;
    let sensing = rs.as_ref().map(|_| {
        dims.push(2 * n);
        next += 1;
        next - 1
    });
    let rate = opts.rate_constraint.then(|| {
        dims.push(1);
        next += 1;
        next - 1
    });
    dims.push(1);
    let blocks = Blocks { objective: 0, comm: 1, sensing, rate, power: next };

    let mut prob = SdpProblem::new(dims, m);
    prob.set_objective(0, 1.0);
    let form = opts.formulation;
    add_objective_entries(&mut prob, form, blocks.objective, 0, -1.0, c0(), 0.0);
    let hh = outer(&h, &h);
    let c1 = rc.trace_coeffs(&a1);
    let ct = rc.trace_coeffs(&a2);
    let c3 = rc.trace_coeffs(&a3);
    let ch = rc.trace_coeffs(&hh);

    let layouts: Vec<(&HermLayout, usize, f64)> =
        std::iter::once((&rc, blocks.comm, 1.0)).chain(rs.as_ref().map(|l| (l, blocks.sensing.unwrap(), -gamma))).collect();
    for &(layout, block, rate_sign) in &layouts {
        layout.embed(&mut prob, block);
        for k in 0..layout.len() {
            let var = layout.offset + k;
            add_objective_entries(&mut prob, form, blocks.objective, var, c1[k].re, ct[k], c3[k].re);
            if let Some(rb) = blocks.rate {
                prob.add_coefficient(var, rb, 0, 0, rate_sign * ch[k].re);
            }
            if k < n {
                prob.add_coefficient(var, blocks.power, 0, 0, -1.0);
            }
        }
    }
    if let Some(rb) = blocks.rate {
        prob.add_constant(rb, 0, 0, -gamma * noise);
    }
    prob.add_constant(blocks.power, 0, 0, 1.0);

    let sol = prob.solve(&opts.ipm);
    unpack(inst, tol, opts, &sol, &blocks, &rc, rs.as_ref(), s_a, h_norm, gamma)
}

#[allow(clippy::too_many_arguments)]
fn unpack(
    inst: &ConvexInstance,
    tol: &Tolerances,
    opts: &RelaxationOptions,
    sol: &SdpSolution,
    blocks: &Blocks,
    rc: &HermLayout,
    rs: Option<&HermLayout>,
    s_a: f64,
    h_norm: f64,
    gamma: f64,
) -> Result<RelaxedSolution> {
    if !sol.status.is_usable() {
        return Err(Error::Solver {
            status: sol.status,
            detail: format!(
                "after {} iterations: gap {:.2e}, primal infeasibility {:.2e}, dual infeasibility {:.2e}",
                sol.iterations, sol.rel_gap, sol.primal_infeasibility, sol.dual_infeasibility
            ),
        });
    }
    if sol.rel_gap > tol.gap {
        return Err(Error::DualityGap { gap: sol.rel_gap, tol: tol.gap });
    }
    let n = rc.n;
    let p = inst.power;
    let pc = Complex64::new(p, 0.0);
    let sc = Complex64::new(2.0 * s_a, 0.0);
    let (z1, z2, z3) = objective_dual(opts.formulation, &sol.x[blocks.objective]);
    let mu_r = blocks.rate.map_or(0.0, |b| sol.x[b][(0, 0)]) * s_a / (h_norm * h_norm);
    Ok(RelaxedSolution {
        t: sol.y[0] * s_a * p,
        r_c: rc.read(&sol.y) * pc,
        r_s: rs.map_or_else(|| CMat::zeros(n, n), |l| l.read(&sol.y) * pc),
        duals: DualVariables {
            z1,
            z2,
            z3,
            mu_r,
            mu_p: sol.x[blocks.power][(0, 0)] * s_a,
            z_c: unembed_hermitian(&sol.x[blocks.comm]) * sc,
            z_s: blocks.sensing.map(|b| unembed_hermitian(&sol.x[b]) * sc),
        },
        status: sol.status,
        iterations: sol.iterations,
        rel_gap: sol.rel_gap,
        formulation: opts.formulation,
        gamma,
        rate_constraint: opts.rate_constraint,
        sensing_beams: opts.sensing_beams,
        objective_scale: s_a,
    })
}

/// At the maximum-ratio capacity the feasible set is the single point
/// `R_C = P hhᴴ/‖h‖²`, `R_S = 0`, and no interior point exists. The
/// objective dual follows from `Z_B B = 0`; `μ_R`, `μ_P` are the smallest
/// values making `Z_C h = 0` and `Z_C` PSD on `h⊥`. A finite dual exists only
/// when `h` is an eigenvector of `D*`; otherwise the KKT residuals show it.
fn maximum_ratio_point(inst: &ConvexInstance, opts: &RelaxationOptions, gamma: f64, s_a: f64) -> RelaxedSolution {
    let n = inst.mat.n_tx();
    let h = &inst.channel;
    let u: CVec = h / Complex64::new(h.norm(), 0.0);
    let r_c = outer(&u, &u) * Complex64::new(inst.power, 0.0);
    let (t1, tau, t3) = inst.mat.traces(&r_c);
    let t = t1 - tau.norm_sqr() / t3;
    let z2 = -tau / t3;
    let m = &inst.mat;
    let d_star = hermitian_part(&(&m.a1 + m.a2.adjoint() * z2 + &m.a2 * z2.conj() + &m.a3 * Complex64::new(z2.norm_sqr(), 0.0)));
    let proj = CMat::identity(n, n) - outer(&u, &u);
    let mu_p = lambda_max(&(&proj * &d_star * &proj)).max(0.0);
    let mu_r = (mu_p - crate::linalg::quad_form(&d_star, &u)).max(0.0) / h.norm_squared();
    let z_c = CMat::identity(n, n) * Complex64::new(mu_p, 0.0) - &d_star - outer(h, h) * Complex64::new(mu_r, 0.0);
    let z_s = opts
        .sensing_beams
        .then(|| CMat::identity(n, n) * Complex64::new(mu_p, 0.0) - &d_star + outer(h, h) * Complex64::new(mu_r * gamma, 0.0));
    RelaxedSolution {
        t,
        r_c,
        r_s: CMat::zeros(n, n),
        duals: DualVariables { z1: 1.0, z2, z3: z2.norm_sqr(), mu_r, mu_p, z_c, z_s },
        status: SolverStatus::Optimal,
        iterations: 0,
        rel_gap: 0.0,
        formulation: opts.formulation,
        gamma,
        rate_constraint: true,
        sensing_beams: opts.sensing_beams,
        objective_scale: s_a,
    }
}
