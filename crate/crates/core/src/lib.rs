//! Coverage quality of a finite robot swarm against a prescribed planar density.
//!
//! The central quantity is the L1 distance between the *swarm blob function*
//! (a normalized kernel placed on every robot) and the target density. Around
//! it sit two benchmarks: realizable extrema found by multistart projected
//! gradient descent ([`extrema`]), and the sampling distribution of the metric
//! when robots are drawn i.i.d. from the target ([`statistics`]).
//!
//! All lengths are inches and the domain is always the axis-aligned rectangle
//! `[0, w] x [0, h]`.

pub mod controller;
pub mod density;
pub mod error;
pub mod error_metric;
pub mod extrema;
pub mod io;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod statistics;

pub use density::{Domain, GridSpec, Kernel, NodeLayout, Point, ScalarField, TargetDensity};
pub use error::{Error, Result};
pub use error_metric::{BlobNormalization, Partition, SwarmConfig, Trajectory};
pub use quadrature::{QuadratureRule, RuleKind};
