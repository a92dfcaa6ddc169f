//! Estimation of the absolute variation curvature of an embedded
//! codimension-one manifold from a finite, possibly noisy, point sample.
//!
//! The pipeline has three stages:
//!
//! 1. local tangent estimation by weighted PCA over metric balls
//!    ([`tangent`]),
//! 2. a naive curvature estimator that averages discrete curvature
//!    values over an annulus of neighbors ([`curvature`]),
//! 3. a decoded estimator that models the tangent-estimation noise as a
//!    von Mises-Fisher mixture, calibrated by Monte Carlo simulation,
//!    and corrects the naive estimate by maximum likelihood ([`decode`]).
//!
//! Closed-form pushforward densities for the folded angle between an
//! estimated and a reference tangent plane, and for the induced discrete
//! curvature value, live in [`pushforward`]; the special functions they
//! need (log-scaled modified Bessel, log-gamma, sphere areas) in
//! [`specfun`]; sphere samplers, noise models and point-cloud I/O in
//! [`randgeom`].
//!
//! All randomized entry points take an explicit `u64` seed and are
//! deterministic for a fixed seed, independent of thread count. The
//! `parallel` feature (on by default) runs trial and batch loops on
//! rayon; disabling it yields a bit-identical sequential fallback.

pub mod curvature;
pub mod decode;
mod error;
pub(crate) mod exec;
pub mod numeric;
pub mod pushforward;
pub mod randgeom;
pub mod specfun;
pub mod tangent;

pub use error::{Error, Result};
