//! Independent reference computations shared by the integration tests.
//! Nothing here calls the crate's own quadrature, Bessel or FIM code.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use isac_pcrb::config::{ExperimentConfig, Scenario};
use isac_pcrb::geometry::{steering_rx, steering_tx, SceneAngles, UpaGeometry};
use isac_pcrb::prior::{VonMisesComponent, VonMisesMixture};
use isac_pcrb::{CMat, CVec, Complex64};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The shipped scenario, assembled once per test binary.
pub fn scenario() -> &'static (ExperimentConfig, Scenario) {
    static CELL: OnceLock<(ExperimentConfig, Scenario)> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = ExperimentConfig::default_scenario();
        let sc = Scenario::from_config(&cfg).unwrap();
        (cfg, sc)
    })
}

/// `e^{-κ} I_n(κ) = (1/π) ∫₀^π e^{κ(cos t - 1)} cos(nt) dt`, midpoint rule.
pub fn bessel_scaled_integral(n: u32, kappa: f64) -> f64 {
    let m = 200_000;
    let h = PI / m as f64;
    (0..m)
        .map(|k| {
            let t = (k as f64 + 0.5) * h;
            (kappa * (t.cos() - 1.0)).exp() * (n as f64 * t).cos()
        })
        .sum::<f64>()
        * h
        / PI
}

/// Density and its derivative straight from the definition.
pub struct RefMixture {
    comps: Vec<(f64, f64, f64, f64)>,
}

impl RefMixture {
    pub fn new(components: &[(f64, f64, f64)]) -> Self {
        Self { comps: components.iter().map(|&(mu, kappa, w)| (mu, kappa, w, bessel_scaled_integral(0, kappa))).collect() }
    }

    /// `(p, p')` with every exponent shifted by the largest `κ` so that the
    /// ratio `p'/p` stays finite for sharp components.
    fn scaled(&self, theta: f64) -> (f64, f64) {
        let (mut p, mut dp) = (0.0, 0.0);
        for &(mu, kappa, w, i0e) in &self.comps {
            let e = w * (kappa * ((theta - mu).cos() - 1.0)).exp() / (2.0 * PI * i0e);
            p += e;
            dp -= e * kappa * (theta - mu).sin();
        }
        (p, dp)
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        self.scaled(theta).0
    }

    /// `E[(d ln p/dθ)²] = ∫ p'²/p dθ` by a dense periodic rule.
    pub fn score_energy(&self, nodes: usize) -> f64 {
        let h = 2.0 * PI / nodes as f64;
        (0..nodes)
            .map(|k| {
                let (p, dp) = self.scaled(-PI + h * k as f64);
                if p > 1e-300 {
                    dp * dp / p
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            * h
    }
}

pub fn mixture(components: &[(f64, f64, f64)]) -> VonMisesMixture {
    VonMisesMixture::new(
        components.iter().map(|&(mean, concentration, weight)| VonMisesComponent { mean, concentration, weight }).collect(),
    )
    .unwrap()
}

pub fn random_components(rng: &mut impl Rng) -> Vec<(f64, f64, f64)> {
    let k = rng.random_range(1..=3);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut comps: Vec<(f64, f64, f64)> = raw
        .iter()
        .map(|w| {
            let mu = rng.random_range(-PI..PI);
            // log-uniform concentration on [0.1, 500]
            let kappa = (rng.random_range(0.1f64.ln()..500f64.ln())).exp();
            (mu, kappa, w / total)
        })
        .collect();
    let rest: f64 = comps[..k - 1].iter().map(|c| c.2).sum();
    comps[k - 1].2 = 1.0 - rest;
    comps
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_psd(n: usize, rank: usize, rng: &mut impl Rng) -> CMat {
    let f = CMat::from_fn(n, rank, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    &f * f.adjoint()
}

pub fn random_vec(n: usize, rng: &mut impl Rng) -> CVec {
    CVec::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Central-difference derivative of a steering vector.
pub fn fd_steering(f: impl Fn(f64) -> CVec, theta: f64, h: f64) -> CVec {
    (f(theta + h) - f(theta - h)) / Complex64::new(2.0 * h, 0.0)
}

/// Slepian-Bangs FIM over `[θ, Re α, Im α]` for `Y = α b(θ)a(θ)ᴴ X + N`,
/// noise `CN(0, σ²)`, computed from finite-difference mean derivatives:
/// `F_ij = (2/σ²) Re Σ ∂μᴴ/∂ξ_i ∂μ/∂ξ_j`.
pub fn slepian_bangs(geom: &UpaGeometry, angles: &SceneAngles, theta: f64, alpha: Complex64, x: &CMat, noise: f64) -> Matrix3<f64> {
    let mean = |t: f64, a: Complex64| -> CMat {
        let g = steering_rx(geom, angles, t) * steering_tx(geom, angles, t).adjoint();
        g * x * a
    };
    let h = 1e-6;
    let d_theta = (mean(theta + h, alpha) - mean(theta - h, alpha)) / Complex64::new(2.0 * h, 0.0);
    let d_re = mean(theta, Complex64::new(1.0, 0.0));
    let d_im = mean(theta, Complex64::new(0.0, 1.0));
    let ds = [d_theta, d_re, d_im];
    Matrix3::from_fn(|i, j| {
        let s: Complex64 = ds[i].iter().zip(ds[j].iter()).map(|(a, b)| a.conj() * b).sum();
        2.0 * s.re / noise
    })
}

/// `2 - 2/√(1 + c)` for a CRB `c`, in a form that keeps full relative
/// precision when `c` is small.
pub fn periodic_bound(c: f64) -> f64 {
    let root = (1.0 + c).sqrt();
    2.0 * c / (root * (1.0 + root))
}
