//! Comparison beamforming schemes: sensing-only design, communication beam
//! without a dedicated sensing beam, and design for the single most
//! probable target angle.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::beamopt::{
    classify_case, kkt_residuals, optimize_with, rate, recover_certificate, solve_relaxation, transmit_covariance, BeamSolution,
    ConvexInstance, RelaxationOptions, Tolerances,
};
use crate::fisher::SensingMatrices;
use crate::geometry::{SceneAngles, UpaGeometry};
use crate::linalg::{align_phase, hermitian_eig_desc, numerical_rank};
use crate::prior::VonMisesMixture;
use crate::{CVec, Error, Result};

/// Gaussian draws tried when the restricted relaxation is not rank one.
pub const RANDOMIZATION_SAMPLES: usize = 1000;
/// Grid used to locate the prior mode.
pub const MODE_GRID: usize = 1 << 16;

/// Maximises the sensing gain alone. The single beam is reported as a
/// sensing beam (`w = 0`); `rate` is what the user would get if that beam
/// carried its symbols, `log₂(1 + P|hᴴq₁|²/σ_C²)`.
pub fn sensing_oriented(inst: &ConvexInstance, tol: &Tolerances) -> Result<BeamSolution> {
    let opts = RelaxationOptions { rate_constraint: false, ..RelaxationOptions::default() };
    let mut sol = optimize_with(inst, tol, &opts)?;
    let beam = transmit_covariance(&sol.w, &sol.s);
    let (vals, vecs) = hermitian_eig_desc(&beam);
    let q1 = align_phase(&vecs.column(0).into_owned(), &inst.channel);
    let s = q1 * Complex64::new(vals[0].max(0.0).sqrt(), 0.0);
    sol.rate = rate(&inst.channel, &s, &[], inst.noise);
    sol.w = CVec::zeros(inst.channel.len());
    sol.s = vec![s];
    Ok(sol)
}

/// Communication beam only (`S ≡ 0`). Falls back to Gaussian randomization
/// when the restricted relaxation returns `rank(R_C) > 1`; the loss is
/// visible as `relaxed_objective - sensing_gain`. `seed` drives the
/// randomization only.
pub fn dual_functional(inst: &ConvexInstance, tol: &Tolerances, seed: u64) -> Result<BeamSolution> {
    let opts = RelaxationOptions { sensing_beams: false, ..RelaxationOptions::default() };
    let sol = solve_relaxation(inst, tol, &opts)?;
    let cert = recover_certificate(&sol, inst, tol)?;
    let (case, margins) = classify_case(&sol, &cert, inst, tol);
    let kkt = kkt_residuals(&sol, &cert, inst);
    let h = &inst.channel;
    let p = inst.power;
    let floor = tol.cluster * p;
    let rank_rc = numerical_rank(&sol.r_c, floor);

    let (vals, vecs) = hermitian_eig_desc(&sol.r_c);
    let top = vecs.column(0).into_owned();
    let score = |w: &CVec| -> Option<(f64, f64)> {
        let achieved = rate(h, w, &[], inst.noise);
        if achieved < inst.rate_target - tol.rate {
            return None;
        }
        let g = inst.mat.sensing_gain(&transmit_covariance(w, &[])).ok()?;
        Some((g, achieved))
    };
    let full_power = |v: &CVec| v * Complex64::new(p.sqrt() / v.norm(), 0.0);

    let mut candidates = vec![full_power(&top)];
    if rank_rc > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = h.len();
        let roots: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
        for _ in 0..RANDOMIZATION_SAMPLES {
            let mut xi = CVec::zeros(n);
            for (k, root) in roots.iter().enumerate() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let z = Complex64::new(re, im) * (root / std::f64::consts::SQRT_2);
                xi += vecs.column(k) * z;
            }
            if xi.norm() > 0.0 {
                candidates.push(full_power(&xi));
            }
        }
    }
    // maximum-ratio transmission is always feasible
    candidates.push(full_power(h));

    let mut best: Option<(f64, f64, CVec)> = None;
    for w in candidates {
        let w = align_phase(&w, h);
        if let Some((g, r)) = score(&w) {
            if best.as_ref().is_none_or(|(bg, _, _)| g > *bg) {
                best = Some((g, r, w));
            }
        }
    }
    let Some((g, achieved, w)) = best else {
        return Err(Error::Infeasible("no communication-only beam meets the rate target".into()));
    };
    let pcrb = inst.mat.pcrb_periodic(&inst.link, &transmit_covariance(&w, &[]))?;
    Ok(BeamSolution {
        w,
        s: Vec::new(),
        pcrb,
        rate: achieved,
        sensing_gain: g,
        case,
        margins,
        certificate: cert,
        case_three: None,
        purification_applied: rank_rc > 1,
        relaxed_objective: sol.t,
        rank_rc,
        rank_rs: 0,
        kkt,
    })
}

/// Designs for the prior mode as if the angle were known, then scores the
/// beams under the true prior.
pub fn most_probable_angle(
    inst: &ConvexInstance,
    geom: &UpaGeometry,
    angles: &SceneAngles,
    prior: &VonMisesMixture,
    tol: &Tolerances,
) -> Result<BeamSolution> {
    let theta_max = prior.mode(MODE_GRID);
    let design = inst.with_matrices(SensingMatrices::point_mass(geom, angles, theta_max))?;
    let mut sol = optimize_with(&design, tol, &RelaxationOptions::default())?;
    let r = sol.covariance();
    sol.sensing_gain = inst.mat.sensing_gain(&r)?;
    sol.pcrb = inst.mat.pcrb_periodic(&inst.link, &r)?;
    Ok(sol)
}
