//! Boltzmann path ensembles: homogeneous stripe sequences and layered
//! circuits of gates.

pub mod gate;
pub mod homogeneous;
pub mod layered;
pub mod mermin;
pub mod sat;

pub use gate::{Gate, GateSpec, Placement};
pub use homogeneous::{projected_prob, sequence_prob, vertical_context_table, Projection};
pub use layered::{ensemble_distribution, CircuitSpec, EnsembleMarginals, Layer, LayerSpec, LayeredEnsemble};
pub use mermin::{mermin_check, MerminReport};
pub use sat::{random_unique_instance, sat_ensemble, sat_full_ensemble, sat_posterior, Cnf};
