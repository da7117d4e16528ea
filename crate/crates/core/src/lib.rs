//! Thermodynamic formalism on subshifts of finite type.
//!
//! `thermopress` computes topological pressure, equilibrium (Gibbs) states,
//! free energies and large-deviation rate functions for locally constant
//! potentials on subshifts of finite type, and evaluates the multifractal
//! pressure of deviation sets built from them:
//!
//! - [`sft`]: models, admissible words, locally constant functions, recoding;
//! - [`transfer`]: transfer matrices, pressure, equilibrium measures, Gibbs
//!   certificates;
//! - [`ratefn`]: free energy, degeneracy detection, Legendre rate function and
//!   an independent variational evaluation of it;
//! - [`spectrum`]: pressure of level sets and deviation sets;
//! - [`oracle`]: exact cylinder enumeration of deviation probabilities;
//! - [`level2`]: distances between measures and the empirical-measure rate.

#![forbid(unsafe_code)]
// NaN-rejecting `!(x > y)` checks are deliberate
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod error;
pub mod level2;
pub mod markov;
pub mod optimize;
pub mod oracle;
pub mod perron;
pub mod ratefn;
pub mod sft;
pub mod spectrum;
pub mod sum;
pub mod transfer;

pub use error::{Error, Result};
