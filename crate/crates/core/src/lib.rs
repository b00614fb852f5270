//! Higher-order Kuramoto dynamics on hypergraphs with Hamiltonian feedback
//! pinning control.

pub mod control;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod hypergraph;
pub mod integrate;
pub mod model;
pub mod seed;
pub mod stats;
pub mod validation;

pub use control::{ControlKernel, ControlMode, ControlSpec, Normalization};
pub use error::{Error, Result};
pub use experiments::{Draw, RunRecord, RunSetup, StateClass, SweepGrid, Thresholds};
pub use hamiltonian::{ActionAngleState, HamiltonianFlow};
pub use hypergraph::Hypergraph;
pub use integrate::{integrate, IntegrationPlan, Observer, VectorField};
pub use model::{Couplings, ModelParams, QuarticVariant, SecondTriadicSign};
