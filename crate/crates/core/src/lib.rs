//! Nearly exact solutions of Ising-like lattice models from the dominant
//! eigenpair of a stripe transfer operator (maximal entropy random walk).
//!
//! The pipeline: [`pattern`] energies feed a [`operator::TransferOperator`];
//! its Perron eigenpair yields stripe-pair probabilities, which [`scan`]
//! marginalizes into a causal line-by-line conditional model. That model gives
//! per-node observables and drives the [`field`] sampler. [`onsager`] supplies
//! exact 2D Ising values for validation and [`mc`] an independent Metropolis
//! cross-check. [`tfim`] applies the same machinery to continuous spin angles,
//! and [`ensemble`] handles position-dependent path ensembles built from gates.

pub mod ensemble;
pub mod error;
pub mod field;
pub mod mc;
pub mod numeric;
pub mod onsager;
pub mod operator;
pub mod pattern;
pub mod quadrature;
pub mod scan;
pub mod sweep;
pub mod tfim;

pub use error::{Error, Result};
pub use operator::{
    pair_marginal, pair_prob, pattern_prob, OperatorLimits, PairDistribution, Representation, SolverOptions,
    SpectralSolution, TransferOperator,
};
pub use scan::{derive_model, ContextShape, Observables, ReducedFamily, ScanModel};
pub use pattern::{interaction_energy, pattern_energy, InteractionSpec, ModelParams, SpinPattern};

