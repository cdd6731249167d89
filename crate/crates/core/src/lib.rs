//! Monte Carlo laboratory for random circulant channels whose taps carry
//! independent uniform phases.
//!
//! * [`channel`]: channel operator, eigenvalues, sampling of phases and noise.
//! * [`capacity`]: ergodic rate with isotropic input and its positivity floor.
//! * [`delocalisation`]: Lévy concentration of weighted circle sums.
//! * [`fourier_bessel`]: `J_0`, its envelope, and the five-term density bound.
//! * [`clt`]: local central limit checks for triangular arrays.
//! * [`experiment`]: configuration, dispatch and serialization for the CLI.

// `!(x > 0.0)` also rejects NaN, which is the intent at every validation site.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod clt;
pub mod delocalisation;
pub mod error;
pub mod experiment;
pub mod fourier_bessel;
pub mod histogram;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod stats;

pub use error::{LabError, Result};
