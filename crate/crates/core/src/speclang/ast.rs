//! Syntax tree of a `.psys` scenario file. Positions are carried for
//! diagnostics but ignored by structural equality, so a parsed file and the
//! parse of its canonical serialization compare equal.

use serde::{Deserialize, Serialize};

use crate::engine::DiffusionSolver;
use crate::model::{Mode, PermClass, Target};
use crate::population::DistFamily;

/// Source position. Compares equal to every other position so that
/// round-tripped trees are structurally equal.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Pos {
        Pos { line, column }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioAst {
    pub name: String,
    pub mode: Mode,
    pub species: Vec<SpeciesDecl>,
    pub atoms: Vec<AtomDecl>,
    pub environment: Option<EnvironmentDecl>,
    /// Explicit MVL trees; mutually exclusive with `generator`.
    pub compartments: Vec<CompartmentDecl>,
    pub generator: Option<GeneratorDecl>,
    pub swelling: Option<SwellingDecl>,
    pub rules: Vec<RuleDecl>,
    pub interventions: Vec<InterventionDecl>,
    pub run: RunDecl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesDecl {
    pub name: String,
    pub class: PermClass,
    pub perm: Option<f64>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDecl {
    pub tag: String,
    /// (species, weight) in declaration order.
    pub weights: Vec<(String, u32)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentDecl {
    /// Bath volume in fL; kinetic scenarios default it when absent.
    pub volume_fl: Option<f64>,
    /// (species, concentration mM) in kinetic mode, (species, count) in
    /// abstract mode.
    pub contents: Vec<(String, f64)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompartmentDecl {
    pub name: String,
    pub diameter_um: f64,
    pub contents: Vec<(String, f64)>,
    pub children: Vec<CompartmentDecl>,
    pub pos: Pos,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDecl {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub prevalence: Option<[f64; 4]>,
    /// (mean, sd, lo, hi)
    pub outer_diameter: Option<(f64, f64, f64, f64)>,
    pub t3_diameter: Option<(f64, f64, f64, f64)>,
    pub internal_count: Option<(f64, f64, f64, f64)>,
    pub t3_internal_count: Option<(u32, u32)>,
    pub child_fraction: Option<(f64, f64)>,
    pub t3_child_fraction: Option<(f64, f64)>,
    pub family: Option<DistFamily>,
    #[serde(default)]
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwellingDecl {
    /// (species, concentration mM).
    pub contents: Vec<(String, f64)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RuleKineticsDecl {
    /// No clause given: abstract priority 0.
    Default,
    Priority(i32),
    MassAction { k: f64 },
    MichaelisMenten { kcat: f64, km: f64, enzyme: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleDecl {
    pub name: String,
    /// (multiplicity, species).
    pub reactants: Vec<(u32, String)>,
    /// (multiplicity, species, target).
    pub products: Vec<(u32, String, Target)>,
    pub catalysts: Vec<(u32, String)>,
    pub kinetics: RuleKineticsDecl,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InterventionOp {
    DcPulse { targets: Vec<String> },
    Electroporate { target: String, duration: f64, boost: f64 },
    Inject { compartment: String, species: String, amount: f64 },
    InsertChannel { compartment: String, species: String, permeability: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionDecl {
    pub time: f64,
    pub op: InterventionOp,
    pub pos: Pos,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDecl {
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub sample_every: Option<usize>,
    pub solver: Option<DiffusionSolver>,
    pub burst_ratio: Option<f64>,
    pub gas_factor: Option<f64>,
    pub pos: Pos,
}
