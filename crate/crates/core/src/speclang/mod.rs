//! The `.psys` scenario language: species, membranes (explicit trees or
//! generator parameters), initial contents, rules, scheduled interventions
//! and run configuration in one line-oriented text file. `#` starts a
//! comment. Parsing is total and produces positioned diagnostics; the
//! canonical serializer round-trips every parsed tree.

mod ast;
mod diagnostics;
mod lexer;
mod lower;
mod parser;
mod serialize;

pub use ast::{
    AtomDecl, CompartmentDecl, EnvironmentDecl, GeneratorDecl, InterventionDecl, InterventionOp,
    Pos, RuleDecl, RuleKineticsDecl, RunDecl, ScenarioAst, SpeciesDecl, SwellingDecl,
};
pub use diagnostics::{has_errors, Diagnostic, Severity};
pub use lower::{generator_params, lower, particle_placement_warnings, LowerOutput, DEFAULT_ENV_VOLUME_FL};
pub use parser::parse;
pub use serialize::serialize;
