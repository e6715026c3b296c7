use std::f64::consts::PI;

use rand::Rng;

use super::VonMisesMixture;
use crate::geometry::wrap_angle;

/// Best-Fisher rejection sampler for a single von-Mises variate with zero
/// mean.
fn von_mises_offset<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    if kappa < 1e-8 {
        return PI * (2.0 * rng.random::<f64>() - 1.0);
    }
    let s = if kappa < 1e-5 {
        1.0 / kappa + kappa
    } else {
        let r = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
        let rho = (r - (2.0 * r).sqrt()) / (2.0 * kappa);
        (1.0 + rho * rho) / (2.0 * rho)
    };
    let w = loop {
        let z = (PI * rng.random::<f64>()).cos();
        let w = (1.0 + s * z) / (s + z);
        let y = kappa * (s - w);
        let v: f64 = rng.random();
        if y * (2.0 - y) - v >= 0.0 || (y / v).ln() + 1.0 - y >= 0.0 {
            break w;
        }
    };
    let angle = w.clamp(-1.0, 1.0).acos();
    if rng.random::<f64>() < 0.5 {
        -angle
    } else {
        angle
    }
}

/// Draws θ ∈ [-π, π) from the mixture: first the component, then the
/// von-Mises variate around its mean.
pub fn sample<R: Rng + ?Sized>(prior: &VonMisesMixture, rng: &mut R) -> f64 {
    let comps = prior.components();
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut pick = comps.len() - 1;
    for (k, c) in comps.iter().enumerate() {
        acc += c.weight;
        if u < acc {
            pick = k;
            break;
        }
    }
    let c = &comps[pick];
    wrap_angle(c.mean + von_mises_offset(c.concentration, rng))
}
