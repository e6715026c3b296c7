//! Rank-one recovery of `(w, S)` from the relaxed optimum.

use num_complex::Complex64;

use super::certificate::{CaseMargins, Certificate, KktResiduals};
use super::{rate, transmit_covariance, BeamSolution, Case, ConvexInstance, RelaxedSolution, Tolerances};
use crate::linalg::{align_phase, hermitian_eig_desc, hermitian_part, numerical_rank, outer, quad_form};
use crate::{CMat, CVec, Error, Result};

/// Case III decomposition of `R_C*` against the top eigenspace `V` of `D*`.
#[derive(Debug, Clone)]
pub struct CaseThreeBasis {
    /// Unit vector outside `span(V)` carrying the communication power.
    pub f: CVec,
    /// `fᴴR_C*f`.
    pub beta_c: f64,
    /// `|q₁ᴴR_C*f|`, the coupling the diagonal form ignores.
    pub cross_term: f64,
    /// `|fᴴh| / ‖h‖`.
    pub h_overlap: f64,
    /// `|μ_P - d₁| / d₁`.
    pub mu_p_gap: f64,
    /// `‖hᴴV‖ / ‖h‖`.
    pub h_v_overlap: f64,
}

fn top_eigvec(m: &CMat) -> CVec {
    hermitian_eig_desc(m).1.column(0).into_owned()
}

fn scaled(v: &CVec, s: f64) -> CVec {
    v * Complex64::new(s, 0.0)
}

/// `w = R h / √(hᴴRh)`; the rest `R - wwᴴ` annihilates `h` and is put on
/// one beam along `dir` (or along its own top eigenvector).
fn covariance_split(r: &CMat, h: &CVec, dir: Option<&CVec>) -> (CVec, Vec<CVec>) {
    let n = h.len();
    let c = quad_form(r, h);
    if !(c > 0.0) {
        let (vals, vecs) = hermitian_eig_desc(r);
        return (CVec::zeros(n), vec![scaled(&vecs.column(0).into_owned(), vals[0].max(0.0).sqrt())]);
    }
    let w = scaled(&(r * h), 1.0 / c.sqrt());
    let rest = hermitian_part(&(r - outer(&w, &w)));
    let power = rest.trace().re.max(0.0);
    let d = dir.cloned().unwrap_or_else(|| top_eigvec(&rest));
    (w, vec![scaled(&d, power.sqrt())])
}

fn case_three_basis(sol: &RelaxedSolution, cert: &Certificate, inst: &ConvexInstance, tol: &Tolerances) -> CaseThreeBasis {
    let h = &inst.channel;
    let hn = h.norm();
    let n = h.len();
    let v = cert.cluster_basis();
    let proj = CMat::identity(n, n) - &v * v.adjoint();
    let mut f = top_eigvec(&hermitian_part(&(&proj * &sol.r_c * &proj)));
    if h.dotc(&f).norm() <= 1e-8 * hn {
        // search the null space of Z_C for a direction seen by the user
        let z_c = cert.z_c(h);
        let (vals, vecs) = hermitian_eig_desc(&z_c);
        let floor = tol.cluster * cert.d1();
        let best = (0..n)
            .filter(|&k| vals[k] <= floor)
            .map(|k| vecs.column(k).into_owned())
            .max_by(|a, b| h.dotc(a).norm().total_cmp(&h.dotc(b).norm()));
        if let Some(b) = best {
            f = b;
        }
    }
    let q1 = cert.q1();
    CaseThreeBasis {
        beta_c: quad_form(&sol.r_c, &f),
        cross_term: (q1.adjoint() * &sol.r_c * &f)[(0, 0)].norm(),
        h_overlap: h.dotc(&f).norm() / hn,
        mu_p_gap: (cert.mu_p - cert.d1()).abs() / cert.d1(),
        h_v_overlap: (h.adjoint() * &v).norm() / hn,
        f,
    }
}

struct Candidate {
    w: CVec,
    s: Vec<CVec>,
    g: f64,
    rate: f64,
    ok: bool,
}

/// Builds `(w, S)` for the classified case, verifies it against the
/// relaxation, and falls back to the covariance-preserving split if the
/// case-specific construction does not reproduce the relaxed optimum.
#[allow(clippy::too_many_arguments)]
pub fn purify(
    sol: &RelaxedSolution,
    cert: &Certificate,
    inst: &ConvexInstance,
    tol: &Tolerances,
    case: Case,
    margins: CaseMargins,
    kkt: KktResiduals,
) -> Result<BeamSolution> {
    let p = inst.power;
    let h = &inst.channel;
    let r_x = sol.covariance();
    let rank_floor = tol.cluster * p;
    let q1 = cert.q1();

    let primary = match case {
        Case::I => (scaled(&q1, p.sqrt()), Vec::new()),
        Case::II => {
            let m = &cert.d_star + outer(h, h) * Complex64::new(cert.mu_r, 0.0);
            (scaled(&top_eigvec(&m), p.sqrt()), Vec::new())
        }
        Case::III => covariance_split(&r_x, h, Some(&q1)),
    };
    let fallback = covariance_split(&r_x, h, None);

    let evaluate = |(w, s): (CVec, Vec<CVec>)| -> Candidate {
        let w = align_phase(&w, h);
        let s: Vec<CVec> = s.into_iter().filter(|v| v.norm_squared() > rank_floor).collect();
        let r = transmit_covariance(&w, &s);
        let g = inst.mat.sensing_gain(&r).unwrap_or(f64::NEG_INFINITY);
        let achieved = rate(h, &w, &s, inst.noise);
        let power = w.norm_squared() + s.iter().map(|v| v.norm_squared()).sum::<f64>();
        let ok = g >= sol.t * (1.0 - tol.tight)
            && power <= p * (1.0 + 1e-8)
            && (!sol.rate_constraint || achieved >= inst.rate_target - tol.rate);
        Candidate { w, s, g, rate: achieved, ok }
    };

    let first = evaluate(primary);
    let (chosen, fell_back) = if first.ok {
        (first, false)
    } else {
        let second = evaluate(fallback);
        if !second.ok {
            let best = if second.g > first.g { second } else { first };
            return Err(Error::Tightness { purified: best.g, relaxed: sol.t });
        }
        (second, true)
    };

    let r = transmit_covariance(&chosen.w, &chosen.s);
    let pcrb = inst.mat.pcrb_periodic(&inst.link, &r)?;
    let case_three = (case == Case::III).then(|| case_three_basis(sol, cert, inst, tol));
    Ok(BeamSolution {
        w: chosen.w,
        s: chosen.s,
        pcrb,
        rate: chosen.rate,
        sensing_gain: chosen.g,
        case,
        margins,
        certificate: cert.clone(),
        case_three,
        purification_applied: case == Case::III || fell_back,
        relaxed_objective: sol.t,
        rank_rc: numerical_rank(&sol.r_c, rank_floor),
        rank_rs: numerical_rank(&sol.r_s, rank_floor),
        kkt,
    })
}
