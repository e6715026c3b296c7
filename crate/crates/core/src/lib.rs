//! Periodic posterior Cramér-Rao bound (PCRB) for sensing a random target
//! azimuth under a von-Mises-mixture prior, together with the optimal
//! integrated sensing-and-communication (ISAC) transmit beamformer.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: uniform planar array steering vectors and channels.
//! * [`prior`]: the von-Mises mixture prior, its score energy and sampler.
//! * [`quadrature`]: periodic trapezoidal integration with node doubling.
//! * [`fisher`]: the prior-averaged sensing matrices and the periodic PCRB.
//! * [`sdp`]: a small dense primal-dual interior-point SDP solver.
//! * [`beamopt`]: the semidefinite relaxation, its dual certificate, case
//!   classification and rank-one purification.
//! * [`baselines`]: the three comparison beamforming schemes.
//! * [`mcsim`]: Monte-Carlo MAP estimation against the bound.
//! * [`config`], [`sweep`], [`matfile`]: experiment plumbing used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod baselines;
pub mod beamopt;
pub mod config;
pub mod error;
pub mod fisher;
pub mod geometry;
pub mod linalg;
pub mod matfile;
pub mod mcsim;
pub mod prior;
pub mod quadrature;
pub mod sdp;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex dense matrix used throughout the crate.
pub type CMat = nalgebra::DMatrix<Complex64>;
/// Complex dense column vector.
pub type CVec = nalgebra::DVector<Complex64>;
