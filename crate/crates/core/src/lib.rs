//! Exact (perfect) sampling of
//!
//! ```text
//! M_alpha = max_{n >= 0} { S_n - n^alpha },   1/2 < alpha < 1,
//! ```
//!
//! for a mean-zero, unit-variance, light-tailed random walk `S_n`, jointly
//! with the walk path, and an application: exact sampling of the stationary
//! departure process of an infinite-server queue with Pareto service times of
//! infinite mean.
//!
//! The crate is organised bottom-up:
//!
//! - [`rng`]: the seedable, splittable stream every stochastic call takes.
//! - [`increments`]: increment laws with closed-form log-MGF and exact
//!   exponentially tilted samplers.
//! - [`boundary`]: the record-breaker geometry `(a, b, xi)`, the auxiliary
//!   dyadic-block pmfs and the tilting parameters.
//! - [`max_sampler`]: record detection by tilted proposals, path conditioning
//!   on "no future record", and the joint sampler for `M_alpha`.
//! - [`two_sided`]: the same machinery for `|S_n|`, used to certify the
//!   arrival process of the queue.
//! - [`queue`]: service-time record breakers, conditional Pareto draws, and
//!   assembly of the departure set.
//! - [`harness`]: replications, goodness-of-fit statistics, work-unit tables
//!   and the validation suites driven by the CLI.
//!
//! The only approximation in the pipeline is floating-point arithmetic: the
//! normalizers of the auxiliary pmfs are carried as certified enclosures and
//! every decision that depends on them is resolved by tightening the
//! enclosure until the decision is unambiguous.

pub mod boundary;
pub mod error;
pub mod harness;
pub mod increments;
pub mod max_sampler;
pub mod queue;
pub mod rng;
pub mod two_sided;

pub use boundary::{AuxPmf, BoundaryParams};
pub use error::{Error, Result};
pub use increments::{IncrementLaw, TiltedLaw};
pub use max_sampler::{MaxSample, MaxSampler, WalkSegment};
pub use queue::{DepartureSet, QueueModel};
pub use rng::SimRng;
pub use two_sided::{TwoSidedOutcome, TwoSidedSampler};
