//! Domain types shared by every other module: species and their membrane
//! permeability classes, multisets of species amounts, spherical compartment
//! trees, whole multivesicular liposomes, rewriting/kinetic rules, and the
//! system state a simulation run owns.
//!
//! Unit conventions used throughout:
//! - lengths in µm, volumes in µm³ (1 µm³ = 1 fL)
//! - amounts in attomol (kinetic mode) or integer object counts (abstract mode)
//! - concentrations in mM (1 mM = 1 amol/fL, which is what makes fL/amol work)
//! - permeability coefficients in µm/s, time in seconds

mod compartment;
mod event;
mod mixture;
mod mvl;
mod rule;
mod species;
mod state;

pub(crate) use compartment::set_depths;
pub use compartment::{sphere_volume, Compartment, Pore, ENVIRONMENT_ID, MAX_DEPTH};
pub use event::{sort_events, Event, EventKind};
pub use mixture::Mixture;
pub use mvl::{Morphology, Mvl};
pub use rule::{Kinetics, Product, Rule, Target};
pub use species::{PermClass, PermeabilityTable, Species, SpeciesTable};
pub use state::SystemState;

use serde::{Deserialize, Serialize};

/// Quantity semantics of a system: integer object counts or continuous
/// attomol amounts. Uniform across a [`SystemState`]; mixtures never mix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Abstract,
    Kinetic,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Abstract => write!(f, "abstract"),
            Mode::Kinetic => write!(f, "kinetic"),
        }
    }
}

/// Errors raised by construction and simulation operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown species '{0}'")]
    UnknownSpecies(String),

    #[error("duplicate species '{0}'")]
    DuplicateSpecies(String),

    #[error("unknown compartment '{0}'")]
    UnknownCompartment(String),

    #[error("unknown MVL '{0}'")]
    UnknownMvl(String),

    #[error("compartment '{0}' has a lysed membrane")]
    LysedCompartment(String),

    #[error("packing violation in '{parent}': children volume {children_fl} fL exceeds {budget_fl} fL")]
    PackingViolation {
        parent: String,
        children_fl: f64,
        budget_fl: f64,
    },

    #[error("depth bound exceeded: compartment '{0}' would sit at depth {1} (max 3)")]
    DepthExceeded(String, u32),

    #[error("mode mismatch: operation requires {required} mode, system is {actual}")]
    ModeMismatch { required: Mode, actual: Mode },

    #[error("abstract-mode quantity must be a nonnegative integer, got {0}")]
    FractionalCount(f64),

    #[error("generation failed for item {item}: {reason}")]
    GenerationFailed { item: usize, reason: String },

    #[error("distribution fit failed: {0}")]
    FitFailed(String),

    #[error("{op} failed at step {step}: {source}")]
    StepFailed {
        op: &'static str,
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
