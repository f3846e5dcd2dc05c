//! Poisson mixture counts: exact mass and survival, tail diagnostics and peaks-over-threshold studies.
//!
//! A Poisson mixture draws an intensity λ from a mixing distribution and then
//! a Poisson(λ) count. The tail of the mixing law decides whether the counts
//! sit in a domain of attraction for maxima, close to the Gumbel domain, or
//! have maxima that concentrate on two consecutive integers. This crate
//! computes the mixture exactly, checks those limits numerically, fits
//! generalised Pareto tails to simulated counts and runs the accompanying
//! simulation studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evt;
pub mod experiments;
pub mod mixing;
pub mod mixture;
pub mod numerics;
pub mod rng;
pub mod select;

pub use error::{Error, Result};
pub use evt::{DevianceResult, ExcessSample, GofResult, GpdFit};
pub use experiments::{ExperimentConfig, ExperimentReport, ExperimentTag, OutputFormat};
pub use mixing::{Family, MixingSpec, TailClass};
pub use mixture::{tail_ratio_limit, MixtureModel, TailRatioCurve};
pub use select::{FamilyFit, Selection};
