//! Dense primal-dual interior-point solver for small semidefinite programs
//! in linear-matrix-inequality form:
//!
//! ```text
//! maximize    bᵀy
//! subject to  S = C - Σᵢ yᵢ Aᵢ ⪰ 0          (block diagonal)
//! ```
//!
//! with the conic dual
//!
//! ```text
//! minimize    ⟨C, X⟩
//! subject to  ⟨Aᵢ, X⟩ = bᵢ,   X ⪰ 0.
//! ```
//!
//! Every block is a real symmetric PSD cone; a scalar inequality is a 1×1
//! block. Iterates follow the HKM search direction with Mehrotra's
//! predictor-corrector and independent primal/dual step lengths, starting
//! from an infeasible scaled identity. Coefficient matrices are stored as
//! sparse symmetric triplets, which keeps the Schur complement assembly
//! cheap for the structured problems built in [`crate::beamopt`].

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

type Triplets = Vec<(usize, usize, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStatus {
    Optimal,
    /// Stopped on a stall with residuals below the relaxed tolerance.
    NearOptimal,
    MaxIterations,
    NumericalFailure,
}

impl SolverStatus {
    pub fn is_usable(self) -> bool {
        matches!(self, SolverStatus::Optimal | SolverStatus::NearOptimal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmSettings {
    pub max_iterations: usize,
    /// Relative duality gap target.
    pub gap_tol: f64,
    /// Relative primal/dual infeasibility target.
    pub feas_tol: f64,
    /// Residual level accepted as [`SolverStatus::NearOptimal`] on a stall.
    pub near_tol: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Stop when the best residual has not halved for this many iterations.
    pub stall_iterations: usize,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self { max_iterations: 120, gap_tol: 1e-11, feas_tol: 1e-10, near_tol: 1e-7, step_fraction: 0.98, stall_iterations: 8 }
    }
}

/// Problem data. Build with [`SdpProblem::new`] and the LMI setters.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    dims: Vec<usize>,
    num_vars: usize,
    b: DVector<f64>,
    c: Vec<DMatrix<f64>>,
    // coefficients[block][var] = symmetric triplets of A_var restricted to block
    coefficients: Vec<Vec<Triplets>>,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolverStatus,
    pub iterations: usize,
    /// Optimal `y`.
    pub y: DVector<f64>,
    /// Conic multipliers `X`, one per block.
    pub x: Vec<DMatrix<f64>>,
    /// Slacks `S = C - Σ yᵢAᵢ`, one per block.
    pub s: Vec<DMatrix<f64>>,
    /// `bᵀy`.
    pub objective: f64,
    /// `⟨C, X⟩`.
    pub dual_objective: f64,
    pub rel_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

fn push_sym(list: &mut Triplets, r: usize, c: usize, v: f64) {
    list.push((r, c, v));
    if r != c {
        list.push((c, r, v));
    }
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Largest `α` keeping `x + α d` positive semidefinite (`∞` if unbounded).
fn max_step(x: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    if x.nrows() == 1 {
        let (xv, dv) = (x[(0, 0)], d[(0, 0)]);
        return if dv < 0.0 { -xv / dv } else { f64::INFINITY };
    }
    let Some(chol) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = chol.l();
    let linv_d = l.solve_lower_triangular(d).expect("triangular factor is nonsingular");
    let mut w = l.solve_lower_triangular(&linv_d.transpose()).expect("triangular factor is nonsingular");
    symmetrize(&mut w);
    let lmin = SymmetricEigen::new(w).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

enum SchurFactor {
    Cholesky(Cholesky<f64, nalgebra::Dyn>),
    // the Schur complement loses definiteness to rounding on degenerate
    // problems near the optimum
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            SchurFactor::Cholesky(c) => c.solve(rhs),
            SchurFactor::Lu(lu) => lu.solve(rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
        }
    }
}

fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = Cholesky::new(m.clone())?.inverse();
    symmetrize(&mut inv);
    Some(inv)
}

impl SdpProblem {
    /// Empty problem with the given block sizes and number of free variables.
    pub fn new(block_dims: Vec<usize>, num_vars: usize) -> Self {
        let c = block_dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let coefficients = block_dims.iter().map(|_| vec![Vec::new(); num_vars]).collect();
        Self { dims: block_dims, num_vars, b: DVector::zeros(num_vars), c, coefficients }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) {
        self.b[var] = coef;
    }

    /// Adds `value` at `(r, c)` and `(c, r)` of the constant term `F₀` of
    /// block `block`.
    pub fn add_constant(&mut self, block: usize, r: usize, c: usize, value: f64) {
        self.c[block][(r, c)] += value;
        if r != c {
            self.c[block][(c, r)] += value;
        }
    }

    /// Adds `value` at `(r, c)` and `(c, r)` of `Fᵥₐᵣ` in block `block`,
    /// where the block reads `F₀ + Σ yᵥₐᵣ Fᵥₐᵣ ⪰ 0`.
    pub fn add_coefficient(&mut self, var: usize, block: usize, r: usize, c: usize, value: f64) {
        if value != 0.0 {
            push_sym(&mut self.coefficients[block][var], r, c, -value);
        }
    }

    /// `C - Σ yᵢAᵢ` (the LMI value) for a given `y`.
    pub fn slack(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out = self.c.clone();
        for (blk, per_var) in self.coefficients.iter().enumerate() {
            for (i, list) in per_var.iter().enumerate() {
                let yi = y[i];
                if yi == 0.0 {
                    continue;
                }
                for &(r, c, v) in list {
                    out[blk][(r, c)] -= yi * v;
                }
            }
        }
        out
    }

    /// `(⟨Aᵢ, W⟩)ᵢ`.
    fn apply_a(&self, w: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.num_vars);
        for (blk, per_var) in self.coefficients.iter().enumerate() {
            for (i, list) in per_var.iter().enumerate() {
                out[i] += list.iter().map(|&(r, c, v)| v * w[blk][(r, c)]).sum::<f64>();
            }
        }
        out
    }

    /// `Σᵢ yᵢAᵢ`.
    fn apply_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (blk, per_var) in self.coefficients.iter().enumerate() {
            for (i, list) in per_var.iter().enumerate() {
                let yi = y[i];
                if yi == 0.0 {
                    continue;
                }
                for &(r, c, v) in list {
                    out[blk][(r, c)] += yi * v;
                }
            }
        }
        out
    }

    /// Schur complement `Mᵢⱼ = ⟨Aᵢ, X Aⱼ S⁻¹⟩`.
    fn schur(&self, active: &[Vec<usize>], x: &[DMatrix<f64>], sinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.num_vars;
        let mut out = DMatrix::zeros(m, m);
        for (blk, vars) in active.iter().enumerate() {
            let n = self.dims[blk];
            let (xb, sb) = (&x[blk], &sinv[blk]);
            let per_var = &self.coefficients[blk];
            let mut xa = DMatrix::<f64>::zeros(n, n);
            let mut t = DMatrix::<f64>::zeros(n, n);
            let mut cols: Vec<usize> = Vec::new();
            for (jj, &j) in vars.iter().enumerate() {
                for &c in &cols {
                    xa.column_mut(c).fill(0.0);
                }
                cols.clear();
                for &(r, c, v) in &per_var[j] {
                    if !cols.contains(&c) {
                        cols.push(c);
                    }
                    for p in 0..n {
                        xa[(p, c)] += v * xb[(p, r)];
                    }
                }
                t.fill(0.0);
                for &c in &cols {
                    for q in 0..n {
                        let s = sb[(c, q)];
                        if s == 0.0 {
                            continue;
                        }
                        for p in 0..n {
                            t[(p, q)] += xa[(p, c)] * s;
                        }
                    }
                }
                for &i in &vars[..=jj] {
                    let acc: f64 = per_var[i].iter().map(|&(r, c, v)| v * t[(r, c)]).sum();
                    out[(i, j)] += acc;
                }
            }
        }
        for j in 0..m {
            for i in 0..j {
                let v = out[(i, j)];
                out[(j, i)] = v;
            }
        }
        out
    }

    fn initial_point(&self) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut xi = 10.0f64;
        let mut eta = 10.0f64;
        let c_norm: f64 = self.c.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
        eta = eta.max(c_norm);
        for i in 0..self.num_vars {
            let a_norm: f64 = self.coefficients.iter().map(|blk| blk[i].iter().map(|t| t.2 * t.2).sum::<f64>()).sum::<f64>().sqrt();
            let n_tot: usize = self.dims.iter().sum();
            xi = xi.max(n_tot as f64 * (1.0 + self.b[i].abs()) / (1.0 + a_norm));
            eta = eta.max(a_norm);
        }
        for &n in &self.dims {
            xi = xi.max((n as f64).sqrt());
            eta = eta.max((n as f64).sqrt());
        }
        let x = self.dims.iter().map(|&n| DMatrix::identity(n, n) * xi).collect();
        let s = self.dims.iter().map(|&n| DMatrix::identity(n, n) * eta).collect();
        (x, s)
    }

    /// Runs the interior-point iteration.
    pub fn solve(&self, settings: &IpmSettings) -> SdpSolution {
        let m = self.num_vars;
        let n_tot: f64 = self.dims.iter().sum::<usize>() as f64;
        let active: Vec<Vec<usize>> =
            self.coefficients.iter().map(|per_var| (0..m).filter(|&i| !per_var[i].is_empty()).collect()).collect();
        let b_norm = self.b.norm();
        let c_norm: f64 = self.c.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();

        let (mut x, mut s) = self.initial_point();
        let mut y = DVector::zeros(m);
        let mut best: Option<(f64, SdpSolution)> = None;
        let mut status = SolverStatus::MaxIterations;
        let mut iterations = 0;
        let mut last_progress = 0;

        for iter in 0..=settings.max_iterations {
            iterations = iter;
            let aty = self.apply_at(&y);
            let rd: Vec<DMatrix<f64>> = (0..self.dims.len()).map(|k| &self.c[k] - &s[k] - &aty[k]).collect();
            let rp = &self.b - self.apply_a(&x);
            let pobj = inner(&self.c, &x);
            let dobj = self.b.dot(&y);
            let xs = inner(&x, &s);
            let rel_gap = (pobj - dobj).abs().max(xs.abs()) / (1.0 + pobj.abs() + dobj.abs());
            let pinf = rp.norm() / (1.0 + b_norm);
            let dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + c_norm);
            let merit = rel_gap.max(pinf).max(dinf);

            let snapshot = || SdpSolution {
                status: SolverStatus::Optimal,
                iterations: iter,
                y: y.clone(),
                x: x.clone(),
                s: s.clone(),
                objective: dobj,
                dual_objective: pobj,
                rel_gap,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
            };
            if best.as_ref().is_none_or(|(bm, _)| merit < 0.9 * *bm) {
                last_progress = iter;
            }
            if best.as_ref().is_none_or(|(bm, _)| merit < *bm) {
                best = Some((merit, snapshot()));
            }
            if rel_gap <= settings.gap_tol && pinf <= settings.feas_tol && dinf <= settings.feas_tol {
                status = SolverStatus::Optimal;
                break;
            }
            if iter == settings.max_iterations {
                break;
            }
            if iter - last_progress >= settings.stall_iterations {
                status = SolverStatus::NumericalFailure;
                break;
            }

            let mu = xs / n_tot;
            let Some(sinv) = s.iter().map(spd_inverse).collect::<Option<Vec<_>>>() else {
                status = SolverStatus::NumericalFailure;
                break;
            };
            let schur = self.schur(&active, &x, &sinv);
            let factor = match Cholesky::new(schur.clone()) {
                Some(c) => SchurFactor::Cholesky(c),
                None => SchurFactor::Lu(schur.lu()),
            };

            let x_rd_sinv: Vec<DMatrix<f64>> = (0..x.len()).map(|k| &x[k] * &rd[k] * &sinv[k]).collect();
            let base_rhs = &self.b + self.apply_a(&x_rd_sinv);

            let direction = |rhs: DVector<f64>, target: f64, second: Option<&[DMatrix<f64>]>| {
                let mut dy = factor.solve(&rhs);
                let atdy = self.apply_at(&dy);
                let mut ds: Vec<DMatrix<f64>> = (0..rd.len()).map(|k| &rd[k] - &atdy[k]).collect();
                let mut dx: Vec<DMatrix<f64>> = (0..x.len())
                    .map(|k| {
                        let mut d = &sinv[k] * target - &x[k] - &x[k] * &ds[k] * &sinv[k];
                        if let Some(sec) = second {
                            d -= &sec[k];
                        }
                        symmetrize(&mut d);
                        d
                    })
                    .collect();
                // refine so that A(ΔX) matches the primal residual despite an
                // ill-conditioned Schur complement
                for _ in 0..2 {
                    let err = &rp - self.apply_a(&dx);
                    if err.norm() <= 1e-15 * (1.0 + b_norm) {
                        break;
                    }
                    let fix = factor.solve(&err);
                    let at_fix = self.apply_at(&fix);
                    for k in 0..x.len() {
                        ds[k] -= &at_fix[k];
                        let mut d = &x[k] * &at_fix[k] * &sinv[k];
                        symmetrize(&mut d);
                        dx[k] += d;
                    }
                    dy += fix;
                }
                (dy, dx, ds)
            };
            let steps = |dx: &[DMatrix<f64>], ds: &[DMatrix<f64>]| {
                let ap = x.iter().zip(dx).map(|(a, d)| max_step(a, d)).fold(f64::INFINITY, f64::min);
                let ad = s.iter().zip(ds).map(|(a, d)| max_step(a, d)).fold(f64::INFINITY, f64::min);
                (ap, ad)
            };

            // predictor
            let (_, dxa, dsa) = direction(base_rhs.clone(), 0.0, None);
            let (apa, ada) = steps(&dxa, &dsa);
            let (apa, ada) = (apa.min(1.0), ada.min(1.0));
            let xa: Vec<_> = x.iter().zip(&dxa).map(|(a, d)| a + d * apa).collect();
            let sa: Vec<_> = s.iter().zip(&dsa).map(|(a, d)| a + d * ada).collect();
            let mu_aff = inner(&xa, &sa) / n_tot;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let second: Vec<DMatrix<f64>> = (0..x.len()).map(|k| &dxa[k] * &dsa[k] * &sinv[k]).collect();
            let rhs = &base_rhs - self.apply_a(&sinv) * (sigma * mu) + self.apply_a(&second);
            let (dy, dx, ds) = direction(rhs, sigma * mu, Some(&second));
            let (ap, ad) = steps(&dx, &ds);
            let ap = (settings.step_fraction * ap).min(1.0);
            let ad = (settings.step_fraction * ad).min(1.0);
            if ap < 1e-10 && ad < 1e-10 {
                status = SolverStatus::NumericalFailure;
                break;
            }
            for k in 0..x.len() {
                x[k] += &dx[k] * ap;
                s[k] += &ds[k] * ad;
                symmetrize(&mut x[k]);
                symmetrize(&mut s[k]);
            }
            y += dy * ad;
        }

        let (merit, mut sol) = best.expect("at least one iterate is recorded");
        sol.iterations = iterations;
        let converged =
            sol.rel_gap <= settings.gap_tol && sol.primal_infeasibility <= settings.feas_tol && sol.dual_infeasibility <= settings.feas_tol;
        sol.status = if converged {
            SolverStatus::Optimal
        } else if merit <= settings.near_tol {
            SolverStatus::NearOptimal
        } else {
            status
        };
        sol
    }
}
