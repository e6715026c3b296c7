//! Prior-averaged sensing matrices `A₁, A₂, A₃`, the periodic posterior FIM
//! over `[θ, α_R, α_I]`, and the periodic PCRB of the mean-cyclic error.

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::geometry::{steering_rx_deriv, steering_tx, steering_tx_deriv, SceneAngles, UpaGeometry};
use crate::linalg::{hermitian_part, trace_prod};
use crate::prior::VonMisesMixture;
use crate::quadrature::{nodes, PeriodicTrapezoid};
use crate::{CMat, Error, Result};

/// Nodes where the prior density falls below this carry no weight.
const NODE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrices {
    /// `∫ (‖ḃ‖² a aᴴ + N_r ȧ ȧᴴ) p dθ`, Hermitian PSD.
    pub a1: CMat,
    /// `N_r ∫ ȧ aᴴ p dθ`.
    pub a2: CMat,
    /// `N_r ∫ a aᴴ p dθ`, Hermitian PSD.
    pub a3: CMat,
    /// `E[(∂ ln p/∂θ)²]`.
    pub prior_fisher: f64,
}

/// Round-trip gain, snapshot count and sensing noise power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingLinkBudget {
    pub alpha: Complex64,
    pub symbols: usize,
    pub noise: f64,
}

impl SensingLinkBudget {
    pub fn new(alpha: Complex64, symbols: usize, noise: f64) -> Result<Self> {
        if symbols == 0 {
            return Err(Error::Domain("symbol count L must be at least 1".into()));
        }
        if !(noise > 0.0) {
            return Err(Error::Domain("sensing noise power must be positive".into()));
        }
        Ok(Self { alpha, symbols, noise })
    }

    /// `2L/σ_S²`.
    pub fn snapshot_gain(&self) -> f64 {
        2.0 * self.symbols as f64 / self.noise
    }

    /// `2|α|²L/σ_S²`, the factor in front of `g(R_X)` in the FIM.
    pub fn sensing_constant(&self) -> f64 {
        self.alpha.norm_sqr() * self.snapshot_gain()
    }
}

fn accumulate(geom: &UpaGeometry, angles: &SceneAngles, theta: f64, weight: f64, a1: &mut CMat, a2: &mut CMat, a3: &mut CMat) {
    let nr = geom.n_rx() as f64;
    let a = steering_tx(geom, angles, theta);
    let ad = steering_tx_deriv(geom, angles, theta);
    let bd2 = steering_rx_deriv(geom, angles, theta).norm_squared();
    let n = a.len();
    for j in 0..n {
        let aj = a[j].conj();
        let adj = ad[j].conj();
        for i in 0..n {
            let aa = a[i] * aj;
            a1[(i, j)] += (aa * bd2 + ad[i] * adj * nr) * weight;
            a2[(i, j)] += ad[i] * aj * (nr * weight);
            a3[(i, j)] += aa * (nr * weight);
        }
    }
}

fn max_abs_change(a: &CMat, b: &CMat) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

impl SensingMatrices {
    /// Prior-averaged matrices by periodic quadrature on one shared grid.
    pub fn assemble(geom: &UpaGeometry, angles: &SceneAngles, prior: &VonMisesMixture, quad: &PeriodicTrapezoid) -> Result<Self> {
        let nt = geom.n_tx();
        let eval = |count: usize| {
            let mut a1 = CMat::zeros(nt, nt);
            let mut a2 = CMat::zeros(nt, nt);
            let mut a3 = CMat::zeros(nt, nt);
            for (theta, w) in nodes(count) {
                let p = prior.pdf(theta);
                if p < NODE_FLOOR {
                    continue;
                }
                accumulate(geom, angles, theta, w * p, &mut a1, &mut a2, &mut a3);
            }
            (a1, a2, a3)
        };
        let ((a1, a2, a3), _) = quad.refine("sensing matrices", eval, |p, n| {
            max_abs_change(&p.0, &n.0).max(max_abs_change(&p.1, &n.1)).max(max_abs_change(&p.2, &n.2))
        })?;
        Ok(Self { a1: hermitian_part(&a1), a2, a3: hermitian_part(&a3), prior_fisher: prior.score_energy(quad)? })
    }

    /// Single-angle matrices with zero prior information, i.e. the
    /// deterministic-parameter CRB at `theta`.
    pub fn point_mass(geom: &UpaGeometry, angles: &SceneAngles, theta: f64) -> Self {
        let nt = geom.n_tx();
        let mut a1 = CMat::zeros(nt, nt);
        let mut a2 = CMat::zeros(nt, nt);
        let mut a3 = CMat::zeros(nt, nt);
        accumulate(geom, angles, theta, 1.0, &mut a1, &mut a2, &mut a3);
        Self { a1: hermitian_part(&a1), a2, a3: hermitian_part(&a3), prior_fisher: 0.0 }
    }

    pub fn n_tx(&self) -> usize {
        self.a1.nrows()
    }

    /// `(tr(A₁R), tr(A₂R), tr(A₃R))`.
    pub fn traces(&self, r: &CMat) -> (f64, Complex64, f64) {
        (trace_prod(&self.a1, r).re, trace_prod(&self.a2, r), trace_prod(&self.a3, r).re)
    }

    /// `g(R) = tr(A₁R) - |tr(A₂R)|² / tr(A₃R)`.
    pub fn sensing_gain(&self, r: &CMat) -> Result<f64> {
        let (t1, t2, t3) = self.traces(r);
        if t3 <= 0.0 {
            let scale = t1.abs().max(t2.norm());
            if scale <= f64::EPSILON * self.a1.norm() * r.norm() || scale == 0.0 {
                return Ok(0.0);
            }
            return Err(Error::SingularFim(format!("tr(A3 R) = {t3:e} with nonzero coupling")));
        }
        Ok(t1 - t2.norm_sqr() / t3)
    }

    /// Observation FIM blocks for a transmit covariance `r`.
    pub fn fim_blocks(&self, link: &SensingLinkBudget, r: &CMat) -> FimBlocks {
        let (t1, t2, t3) = self.traces(r);
        let c = link.snapshot_gain();
        let ta = t2 * link.alpha.conj();
        FimBlocks { theta_theta: c * link.alpha.norm_sqr() * t1, theta_alpha: [c * ta.re, -c * ta.im], alpha_alpha: c * t3 }
    }

    /// Periodic PCRB `2 - 2(1 + [F⁻¹]₁₁)^{-1/2}` via the Schur complement.
    pub fn pcrb_periodic(&self, link: &SensingLinkBudget, r: &CMat) -> Result<f64> {
        let g = self.sensing_gain(r)?;
        pcrb_from_information(self.prior_fisher + link.sensing_constant() * g)
    }
}

/// `J_θθ`, `J_θα` (1×2) and `J_αα = c·I₂` (stored as the scalar `c`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimBlocks {
    pub theta_theta: f64,
    pub theta_alpha: [f64; 2],
    pub alpha_alpha: f64,
}

impl FimBlocks {
    /// Full 3×3 periodic posterior FIM over `[θ, α_R, α_I]`.
    pub fn posterior_fim(&self, prior_fisher: f64) -> Matrix3<f64> {
        let [u, v] = self.theta_alpha;
        let d = self.alpha_alpha;
        Matrix3::new(self.theta_theta + prior_fisher, u, v, u, d, 0.0, v, 0.0, d)
    }
}

/// Periodic PCRB from the effective Fisher information `1/[F⁻¹]₁₁`.
pub fn pcrb_from_information(info: f64) -> Result<f64> {
    if !(info > 0.0) {
        return Err(Error::SingularFim(format!("effective information {info:e}")));
    }
    let crb = 1.0 / info;
    // 2 - 2/√(1+x) without the cancellation at small x
    let root = (1.0 + crb).sqrt();
    Ok(2.0 * crb / (root * (1.0 + root)))
}
