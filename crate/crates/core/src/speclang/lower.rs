//! Lowering a parsed scenario onto the model: builds the species table,
//! environment, MVLs (explicit trees or generated populations), rules, the
//! intervention schedule and the run configuration. Violations of core
//! invariants surface as diagnostics carrying the source position of the
//! offending declaration.

use std::collections::BTreeMap;

use super::ast::*;
use super::diagnostics::{has_errors, Diagnostic};
use crate::engine::{
    AbstractConfig, Intervention, KineticConfig, RunConfig, ScheduledIntervention,
};
use crate::model::{
    Compartment, Kinetics, Mixture, Mode, Mvl, PermClass, Product, Rule, Species, SpeciesTable,
};
use crate::population::{
    embed_swelling_solution, sample_population, DistFamily, GeneratorParams, TruncatedDist,
};

/// Bath volume used when a kinetic scenario leaves it unspecified (10 nL).
pub const DEFAULT_ENV_VOLUME_FL: f64 = 1e7;

/// Everything a runner needs, plus any non-fatal warnings.
#[derive(Debug, Clone)]
pub struct LowerOutput {
    pub state: crate::model::SystemState,
    pub schedule: Vec<ScheduledIntervention>,
    pub config: RunConfig,
    /// Conservation tags: tag -> species -> weight.
    pub atoms: BTreeMap<String, BTreeMap<String, u32>>,
    pub warnings: Vec<Diagnostic>,
}

pub fn lower(ast: &ScenarioAst) -> Result<LowerOutput, Vec<Diagnostic>> {
    let mut diags: Vec<Diagnostic> = Vec::new();
    let warnings: Vec<Diagnostic> = particle_placement_warnings(ast);
    let error = |diags: &mut Vec<Diagnostic>, pos: Pos, msg: String| {
        diags.push(Diagnostic::error(pos.line, pos.column, msg));
    };

    let mut table = SpeciesTable::new();
    for decl in &ast.species {
        let mut sp = Species::new(&decl.name, decl.class);
        sp.permeability_override = decl.perm;
        if let Err(e) = table.insert(sp) {
            error(&mut diags, decl.pos, e.to_string());
        }
    }

    let seed = ast.run.seed.unwrap_or(0);
    let mut state = crate::model::SystemState::new(ast.mode, table, seed);

    // environment
    match ast.mode {
        Mode::Kinetic => {
            let volume = ast
                .environment
                .as_ref()
                .and_then(|e| e.volume_fl)
                .unwrap_or(DEFAULT_ENV_VOLUME_FL);
            match Compartment::environment_with_volume(volume) {
                Ok(env) => state.environment = env,
                Err(e) => {
                    let pos = ast.environment.as_ref().map(|e| e.pos).unwrap_or_default();
                    error(&mut diags, pos, e.to_string());
                }
            }
            if let Some(env) = &ast.environment {
                for (sp, conc) in &env.contents {
                    state
                        .environment
                        .contents
                        .add(sp, conc * state.environment.volume);
                }
            }
        }
        Mode::Abstract => {
            if let Some(env) = &ast.environment {
                for (sp, count) in &env.contents {
                    state.environment.contents.add(sp, *count);
                }
            }
        }
    }

    // explicit trees
    for decl in &ast.compartments {
        match build_compartment(decl, ast.mode) {
            Ok(root) => match Mvl::from_tree(root) {
                Ok(mvl) => {
                    if let Err(e) = state.add_mvl(mvl) {
                        error(&mut diags, decl.pos, e.to_string());
                    }
                }
                Err(e) => error(&mut diags, decl.pos, e.to_string()),
            },
            Err(d) => diags.push(d),
        }
    }

    // generated population
    if let Some(g) = &ast.generator {
        match generator_params(g, seed) {
            Ok(params) => {
                let n = g.n.unwrap_or(1);
                let gen_seed = g.seed.unwrap_or(seed);
                match sample_population(&params, n, gen_seed) {
                    Ok(mvls) => {
                        for mvl in mvls {
                            if let Err(e) = state.add_mvl(mvl) {
                                error(&mut diags, g.pos, e.to_string());
                            }
                        }
                    }
                    Err(e) => error(&mut diags, g.pos, e.to_string()),
                }
            }
            Err(msg) => error(&mut diags, g.pos, msg),
        }
    }

    // swelling solution over every MVL
    if let Some(sw) = &ast.swelling {
        let assignments: BTreeMap<String, f64> =
            sw.contents.iter().map(|(sp, c)| (sp.clone(), *c)).collect();
        let species = state.species.clone();
        for mvl in &mut state.mvls {
            if let Err(e) = embed_swelling_solution(mvl, &species, &assignments, ast.mode) {
                error(&mut diags, sw.pos, e.to_string());
                break;
            }
        }
    }

    // rules
    for decl in &ast.rules {
        let rule = Rule {
            name: decl.name.clone(),
            reactants: to_mixture(&decl.reactants),
            catalysts: to_mixture(&decl.catalysts),
            products: decl
                .products
                .iter()
                .map(|(mult, sp, target)| Product {
                    species: sp.clone(),
                    stoichiometry: *mult,
                    target: *target,
                })
                .collect(),
            kinetics: match &decl.kinetics {
                RuleKineticsDecl::Default => Kinetics::Abstract { priority: 0 },
                RuleKineticsDecl::Priority(p) => Kinetics::Abstract { priority: *p },
                RuleKineticsDecl::MassAction { k } => Kinetics::MassAction { k: *k },
                RuleKineticsDecl::MichaelisMenten { kcat, km, enzyme } => {
                    Kinetics::MichaelisMenten { kcat: *kcat, km: *km, enzyme: enzyme.clone() }
                }
            },
        };
        if let Err(e) = state.add_rule(rule) {
            error(&mut diags, decl.pos, e.to_string());
        }
    }

    // interventions, resolved against the built state
    let mut schedule = Vec::new();
    for decl in &ast.interventions {
        let intervention = match &decl.op {
            InterventionOp::DcPulse { targets } => {
                for t in targets {
                    if state.mvl(t).is_none() {
                        error(&mut diags, decl.pos, format!("dc_pulse target '{t}' is not an MVL"));
                    }
                }
                Intervention::DcPulse { targets: targets.clone() }
            }
            InterventionOp::Electroporate { target, duration, boost } => {
                if state.mvl(target).is_none() {
                    error(&mut diags, decl.pos, format!("electroporation target '{target}' is not an MVL"));
                }
                Intervention::Electroporate {
                    target: target.clone(),
                    duration: *duration,
                    boost: *boost,
                }
            }
            InterventionOp::Inject { compartment, species, amount } => {
                if state.find_compartment(compartment).is_none() {
                    error(&mut diags, decl.pos, format!("unknown compartment '{compartment}'"));
                }
                Intervention::Inject {
                    compartment: compartment.clone(),
                    species: species.clone(),
                    amount: *amount,
                }
            }
            InterventionOp::InsertChannel { compartment, species, permeability } => {
                if state.find_compartment(compartment).is_none() {
                    error(&mut diags, decl.pos, format!("unknown compartment '{compartment}'"));
                }
                Intervention::InsertChannel {
                    compartment: compartment.clone(),
                    species: species.clone(),
                    permeability: *permeability,
                }
            }
        };
        schedule.push(ScheduledIntervention { time: decl.time, intervention });
    }

    let config = match ast.mode {
        Mode::Abstract => RunConfig::Abstract(AbstractConfig {
            max_steps: ast.run.steps.unwrap_or(1000),
            rng_seed: seed,
            sample_every: ast.run.sample_every.unwrap_or(1),
            ..Default::default()
        }),
        Mode::Kinetic => {
            let defaults = KineticConfig::default();
            RunConfig::Kinetic(KineticConfig {
                dt: ast.run.dt.unwrap_or(defaults.dt),
                max_steps: ast.run.steps.unwrap_or(defaults.max_steps),
                burst_volume_ratio: ast.run.burst_ratio.unwrap_or(defaults.burst_volume_ratio),
                gas_molar_volume_factor: ast.run.gas_factor.unwrap_or(defaults.gas_molar_volume_factor),
                diffusion_solver: ast.run.solver.unwrap_or_default(),
                sample_every: ast.run.sample_every.unwrap_or(defaults.sample_every),
            })
        }
    };

    let atoms = ast
        .atoms
        .iter()
        .map(|a| (a.tag.clone(), a.weights.iter().cloned().collect()))
        .collect();

    if has_errors(&diags) {
        return Err(diags);
    }
    if let Err(e) = state.validate() {
        return Err(vec![Diagnostic::error(1, 1, e.to_string())]);
    }
    Ok(LowerOutput { state, schedule, config, atoms, warnings })
}

fn to_mixture(items: &[(u32, String)]) -> Mixture {
    let mut m = Mixture::new();
    for (mult, sp) in items {
        m.add(sp, f64::from(*mult));
    }
    m
}

fn build_compartment(decl: &CompartmentDecl, mode: Mode) -> Result<Compartment, Diagnostic> {
    let mut c = Compartment::sphere(&decl.name, decl.diameter_um)
        .map_err(|e| Diagnostic::error(decl.pos.line, decl.pos.column, e.to_string()))?;
    for (sp, value) in &decl.contents {
        let amount = match mode {
            Mode::Kinetic => value * c.volume,
            Mode::Abstract => *value,
        };
        c.contents.add(sp, amount);
    }
    for child in &decl.children {
        let built = build_compartment(child, mode)?;
        c.attach_child(built)
            .map_err(|e| Diagnostic::error(child.pos.line, child.pos.column, e.to_string()))?;
    }
    Ok(c)
}

/// Flag particle-class contents sitting below the outermost compartment.
pub fn particle_placement_warnings(ast: &ScenarioAst) -> Vec<Diagnostic> {
    let particle_species: Vec<&str> = ast
        .species
        .iter()
        .filter(|s| s.class == PermClass::Particle)
        .map(|s| s.name.as_str())
        .collect();
    let mut out = Vec::new();
    fn walk(
        decl: &CompartmentDecl,
        outermost: bool,
        particles: &[&str],
        out: &mut Vec<Diagnostic>,
    ) {
        if !outermost {
            for (sp, v) in &decl.contents {
                if *v > 0.0 && particles.contains(&sp.as_str()) {
                    out.push(Diagnostic::warning(
                        decl.pos.line,
                        decl.pos.column,
                        format!(
                            "particle species '{sp}' placed in inner compartment '{}'; particles are normally confined to the outermost compartment (allowed here as if microinjected)",
                            decl.name
                        ),
                    ));
                }
            }
        }
        for child in &decl.children {
            walk(child, false, particles, out);
        }
    }
    for root in &ast.compartments {
        walk(root, true, &particle_species, &mut out);
    }
    out
}

/// Build [`GeneratorParams`] from a generator declaration, filling defaults
/// and fitting the named distributions. Also used by the CLI for parameter
/// files given as JSON-encoded declarations.
pub fn generator_params(g: &GeneratorDecl, default_seed: u64) -> Result<GeneratorParams, String> {
    let family = g.family.unwrap_or(DistFamily::Normal);
    let mut params =
        GeneratorParams::with_family(family, g.seed.unwrap_or(default_seed)).map_err(|e| e.to_string())?;
    if let Some(p) = g.prevalence {
        params.type_prevalence = p;
    }
    if let Some((m, s, lo, hi)) = g.outer_diameter {
        params.outer_diameter = TruncatedDist::fit(family, m, s, lo, hi).map_err(|e| e.to_string())?;
    }
    if let Some((m, s, lo, hi)) = g.t3_diameter {
        params.t3_diameter = TruncatedDist::fit(family, m, s, lo, hi).map_err(|e| e.to_string())?;
    }
    if let Some((m, s, lo, hi)) = g.internal_count {
        params.internal_count =
            TruncatedDist::fit(family, m, s, lo, hi).map_err(|e| e.to_string())?;
    }
    if let Some(r) = g.t3_internal_count {
        params.t3_internal_count_range = r;
    }
    if let Some(f) = g.child_fraction {
        params.child_diameter_fraction = f;
    }
    if let Some(f) = g.t3_child_fraction {
        params.t3_child_diameter_fraction = f;
    }
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}
