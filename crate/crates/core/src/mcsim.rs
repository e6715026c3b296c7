//! Monte-Carlo check of the bound: simulate echoes for a transmit design,
//! estimate the angle by MAP search and compare the mean-cyclic error with
//! the periodic PCRB.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::beamopt::{transmit_covariance, BeamSolution};
use crate::config::Scenario;
use crate::geometry::{steering_rx, steering_tx, target_channel, wrap_angle, SceneAngles, UpaGeometry};
use crate::prior::{golden_section_max, sample, VonMisesMixture};
use crate::quadrature::nodes;
use crate::{CMat, CVec, Error, Result};

/// Golden-section iterations after the grid search.
pub const REFINE_ITERATIONS: usize = 40;
/// Smallest accepted MAP grid.
pub const MIN_GRID: usize = 512;

/// Communication beam and sensing beams driving the echo.
#[derive(Debug, Clone)]
pub struct Transmit {
    pub w: CVec,
    pub s: Vec<CVec>,
}

impl Transmit {
    pub fn covariance(&self) -> CMat {
        transmit_covariance(&self.w, &self.s)
    }
}

impl From<&BeamSolution> for Transmit {
    fn from(b: &BeamSolution) -> Self {
        Self { w: b.w.clone(), s: b.s.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub theta: f64,
    pub alpha: Complex64,
}

/// One coherent processing block.
#[derive(Debug, Clone)]
pub struct EchoBatch {
    /// `N_t × L` transmitted block.
    pub x: CMat,
    /// `N_r × L` received block.
    pub y: CMat,
    pub truth: Truth,
    /// Sensing noise power used for the block.
    pub noise: f64,
}

fn cn<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `x_l = w c_l + S υ_l`, `Y = G(θ)X + N` with unit-power symbols and
/// noise `CN(0, σ_S² I)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_echo<R: Rng + ?Sized>(
    geom: &UpaGeometry,
    angles: &SceneAngles,
    beams: &Transmit,
    truth: Truth,
    symbols: usize,
    noise: f64,
    rng: &mut R,
) -> Result<EchoBatch> {
    if symbols == 0 {
        return Err(Error::Domain("symbol count L must be at least 1".into()));
    }
    let nt = geom.n_tx();
    let nr = geom.n_rx();
    let mut x = CMat::zeros(nt, symbols);
    for l in 0..symbols {
        let mut col = &beams.w * cn(rng);
        for s in &beams.s {
            col += s * cn(rng);
        }
        x.set_column(l, &col);
    }
    let sigma = noise.sqrt();
    let n = CMat::from_fn(nr, symbols, |_, _| cn(rng) * sigma);
    let y = target_channel(geom, angles, truth.theta, truth.alpha) * &x + n;
    Ok(EchoBatch { x, y, truth, noise })
}

/// Grid MAP estimator with precomputed steering vectors.
#[derive(Debug, Clone)]
pub struct MapEstimator {
    geom: UpaGeometry,
    angles: SceneAngles,
    prior: VonMisesMixture,
    grid: Vec<(f64, CVec, CVec, f64)>,
}

impl MapEstimator {
    pub fn new(geom: &UpaGeometry, angles: &SceneAngles, prior: &VonMisesMixture, grid_size: usize) -> Result<Self> {
        if grid_size < MIN_GRID {
            return Err(Error::Domain(format!("MAP grid size {grid_size} below {MIN_GRID}")));
        }
        let grid =
            nodes(grid_size).map(|(t, _)| (t, steering_tx(geom, angles, t), steering_rx(geom, angles, t), prior.ln_pdf(t))).collect();
        Ok(Self { geom: *geom, angles: *angles, prior: prior.clone(), grid })
    }

    /// Returns `(θ̂, α̂)`.
    pub fn estimate(&self, batch: &EchoBatch) -> Result<(f64, Complex64)> {
        let q = &batch.y * batch.x.adjoint();
        let r = &batch.x * batch.x.adjoint();
        let nr = self.geom.n_rx() as f64;
        // (bᴴQa, N_r aᴴR̂a)
        let corr = |a: &CVec, b: &CVec| -> (Complex64, f64) { (b.dotc(&(&q * a)), nr * a.dotc(&(&r * a)).re) };
        let objective = |c: Complex64, m2: f64, ln_p: f64| {
            if m2 > 0.0 {
                c.norm_sqr() / (batch.noise * m2) + ln_p
            } else {
                ln_p
            }
        };

        let mut seen = false;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for (t, a, b, ln_p) in &self.grid {
            let (c, m2) = corr(a, b);
            seen |= m2 > 0.0;
            let v = objective(c, m2, *ln_p);
            if v > best.0 {
                best = (v, *t);
            }
        }
        if !seen {
            return Err(Error::DegenerateInput("transmit block is invisible at every grid angle".into()));
        }
        let eval = |t: f64| {
            let (c, m2) = corr(&steering_tx(&self.geom, &self.angles, t), &steering_rx(&self.geom, &self.angles, t));
            objective(c, m2, self.prior.ln_pdf(t))
        };
        let step = 2.0 * std::f64::consts::PI / self.grid.len() as f64;
        let refined = golden_section_max(eval, best.1 - step, best.1 + step, REFINE_ITERATIONS);
        let theta = if eval(refined) >= best.0 { refined } else { best.1 };
        let (c, m2) = corr(&steering_tx(&self.geom, &self.angles, theta), &steering_rx(&self.geom, &self.angles, theta));
        let alpha = if m2 > 0.0 { c / m2 } else { Complex64::new(0.0, 0.0) };
        Ok((wrap_angle(theta), alpha))
    }
}

/// One-shot form of [`MapEstimator::estimate`].
pub fn map_estimate(
    batch: &EchoBatch,
    geom: &UpaGeometry,
    angles: &SceneAngles,
    prior: &VonMisesMixture,
    grid_size: usize,
) -> Result<(f64, Complex64)> {
    MapEstimator::new(geom, angles, prior, grid_size)?.estimate(batch)
}

/// `2 - 2cos ε`.
pub fn cyclic_error(eps: f64) -> f64 {
    2.0 - 2.0 * eps.cos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialStats {
    /// Mean-cyclic error `2 - 2E[cos(θ̂ - θ)]`.
    pub mce: f64,
    /// `E[|θ̂ - θ|²]` on the unwrapped difference.
    pub mse: f64,
    pub trials: usize,
    pub pcrb_ref: f64,
    /// Standard error of `mce`.
    pub mce_std_err: f64,
}

impl TrialStats {
    /// Aggregates per-trial errors `θ̂ - θ`.
    pub fn from_errors(errors: &[f64], pcrb_ref: f64) -> Self {
        let n = errors.len();
        let nf = n as f64;
        let cyc: Vec<f64> = errors.iter().map(|&e| cyclic_error(e)).collect();
        let mce = cyc.iter().sum::<f64>() / nf;
        let mse = errors.iter().map(|e| e * e).sum::<f64>() / nf;
        let var = if n > 1 { cyc.iter().map(|c| (c - mce).powi(2)).sum::<f64>() / (nf - 1.0) } else { 0.0 };
        Self { mce, mse, trials: n, pcrb_ref, mce_std_err: (var / nf).sqrt() }
    }

    /// `mce ≥ pcrb·(1 - 3·SE_rel)`. A diagnostic: at low SNR the bound is
    /// loose and the estimator need not be efficient, so this is not an
    /// error condition.
    pub fn bound_consistent(&self) -> bool {
        if self.mce <= 0.0 {
            return self.pcrb_ref <= 0.0;
        }
        let se_rel = self.mce_std_err / self.mce;
        self.mce >= self.pcrb_ref * (1.0 - 3.0 * se_rel)
    }
}

/// Draws `θ` from the prior and a uniformly random phase of `α` for every
/// trial; trial `k` uses stream `k` of the generator seeded by `seed`, so
/// results do not depend on scheduling.
pub fn run_trials(scenario: &Scenario, beams: &Transmit, n_trials: usize, seed: u64, grid_size: usize) -> Result<TrialStats> {
    if n_trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let est = MapEstimator::new(&scenario.geometry, &scenario.angles, &scenario.prior, grid_size)?;
    let pcrb_ref = scenario.matrices.pcrb_periodic(&scenario.link, &beams.covariance())?;
    let magnitude = scenario.link.alpha.norm();
    let trial = |k: usize| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let theta = sample(&scenario.prior, &mut rng);
        let phase = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let truth = Truth { theta, alpha: Complex64::from_polar(magnitude, phase) };
        let batch =
            simulate_echo(&scenario.geometry, &scenario.angles, beams, truth, scenario.link.symbols, scenario.link.noise, &mut rng)?;
        Ok(est.estimate(&batch)?.0 - theta)
    };
    #[cfg(feature = "parallel")]
    let errors: Vec<f64> = {
        use rayon::prelude::*;
        (0..n_trials).into_par_iter().map(trial).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let errors: Vec<f64> = (0..n_trials).map(trial).collect::<Result<_>>()?;
    Ok(TrialStats::from_errors(&errors, pcrb_ref))
}
