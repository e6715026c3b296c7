//! Composite trapezoidal rule on a uniform grid over `[-π, π)`.
//!
//! For smooth 2π-periodic integrands the rule converges geometrically, so
//! the node count is doubled until two successive estimates agree.

use std::f64::consts::PI;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicTrapezoid {
    pub initial_nodes: usize,
    pub rel_tol: f64,
    pub max_nodes: usize,
}

impl Default for PeriodicTrapezoid {
    fn default() -> Self {
        Self { initial_nodes: 4096, rel_tol: 1e-8, max_nodes: 1 << 20 }
    }
}

/// Quadrature nodes `θ_k = -π + 2πk/N` with equal weights `2π/N`.
pub fn nodes(n: usize) -> impl Iterator<Item = (f64, f64)> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(move |k| (-PI + h * k as f64, h))
}

impl PeriodicTrapezoid {
    /// Fixed-size rule, no refinement.
    pub fn fixed(n: usize) -> Self {
        Self { initial_nodes: n, rel_tol: f64::INFINITY, max_nodes: n }
    }

    /// Integrates with node doubling. `eval(n)` returns the estimate on an
    /// `n`-node grid and `change(prev, next)` the relative disagreement.
    /// Returns the finest estimate and its node count.
    pub fn refine<T>(&self, what: &'static str, mut eval: impl FnMut(usize) -> T, change: impl Fn(&T, &T) -> f64) -> Result<(T, usize)> {
        let mut n = self.initial_nodes.max(1);
        let mut prev = eval(n);
        if !self.rel_tol.is_finite() {
            return Ok((prev, n));
        }
        loop {
            let next_n = n * 2;
            if next_n > self.max_nodes {
                return Err(Error::Quadrature { what, change: f64::NAN, nodes: n });
            }
            let next = eval(next_n);
            let c = change(&prev, &next);
            if c.is_nan() {
                return Err(Error::Quadrature { what, change: c, nodes: next_n });
            }
            if c <= self.rel_tol {
                return Ok((next, next_n));
            }
            if next_n * 2 > self.max_nodes {
                return Err(Error::Quadrature { what, change: c, nodes: next_n });
            }
            prev = next;
            n = next_n;
        }
    }

    /// Scalar integral of `f` over `[-π, π)`. `scale` is the magnitude the
    /// disagreement is measured against (defaults to the integral itself).
    pub fn integrate(&self, what: &'static str, f: impl Fn(f64) -> f64, scale: Option<f64>) -> Result<f64> {
        let (v, _) = self.refine(
            what,
            |n| nodes(n).map(|(t, w)| w * f(t)).sum::<f64>(),
            |a, b| {
                let s = scale.unwrap_or(0.0).abs().max(b.abs()).max(f64::MIN_POSITIVE);
                (a - b).abs() / s
            },
        )?;
        Ok(v)
    }
}
