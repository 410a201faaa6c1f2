//! Canonical text form of a scenario AST. `parse(serialize(ast))` equals
//! `ast` structurally, and serializing the reparsed tree reproduces the same
//! bytes (the canonical form is a fixed point). Optional fields that were
//! not given are omitted rather than expanded to defaults.

use std::fmt::Write;

use super::ast::*;
use crate::model::{Mode, Target};

pub fn serialize(ast: &ScenarioAst) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "system {} mode {}", ast.name, ast.mode);

    if !ast.species.is_empty() {
        let _ = writeln!(w);
        for sp in &ast.species {
            let _ = write!(w, "species {} class {}", sp.name, sp.class);
            if let Some(p) = sp.perm {
                let _ = write!(w, " perm {p}");
            }
            let _ = writeln!(w);
        }
    }

    if !ast.atoms.is_empty() {
        let _ = writeln!(w);
        for atom in &ast.atoms {
            let entries: Vec<String> =
                atom.weights.iter().map(|(sp, n)| format!("{sp}: {n}")).collect();
            let _ = writeln!(w, "atom {} {{ {} }}", atom.tag, entries.join(", "));
        }
    }

    if let Some(env) = &ast.environment {
        let _ = writeln!(w);
        let _ = writeln!(w, "environment {{");
        if let Some(v) = env.volume_fl {
            let _ = writeln!(w, "  volume {v} fl");
        }
        for (sp, c) in &env.contents {
            let _ = writeln!(w, "  {sp}: {c}{}", unit_suffix(ast.mode));
        }
        let _ = writeln!(w, "}}");
    }

    for decl in &ast.compartments {
        let _ = writeln!(w);
        write_compartment(w, decl, 0, ast.mode);
    }

    if let Some(g) = &ast.generator {
        let _ = writeln!(w);
        let _ = writeln!(w, "generator {{");
        if let Some(n) = g.n {
            let _ = writeln!(w, "  n = {n}");
        }
        if let Some(seed) = g.seed {
            let _ = writeln!(w, "  seed = {seed}");
        }
        if let Some(p) = g.prevalence {
            let _ = writeln!(w, "  prevalence = ({}, {}, {}, {})", p[0], p[1], p[2], p[3]);
        }
        for (key, quad) in [
            ("outer_diameter", g.outer_diameter),
            ("t3_diameter", g.t3_diameter),
            ("internal_count", g.internal_count),
        ] {
            if let Some((m, s, lo, hi)) = quad {
                let _ = writeln!(w, "  {key} = trunc({m}, {s}, {lo}, {hi})");
            }
        }
        if let Some((lo, hi)) = g.t3_internal_count {
            let _ = writeln!(w, "  t3_internal_count = ({lo}, {hi})");
        }
        if let Some((lo, hi)) = g.child_fraction {
            let _ = writeln!(w, "  child_fraction = ({lo}, {hi})");
        }
        if let Some((lo, hi)) = g.t3_child_fraction {
            let _ = writeln!(w, "  t3_child_fraction = ({lo}, {hi})");
        }
        if let Some(f) = g.family {
            let _ = writeln!(w, "  family = {}", f.name());
        }
        let _ = writeln!(w, "}}");
    }

    if let Some(sw) = &ast.swelling {
        let _ = writeln!(w);
        let entries: Vec<String> =
            sw.contents.iter().map(|(sp, c)| format!("{sp}: {c} mM")).collect();
        let _ = writeln!(w, "swelling {{ {} }}", entries.join(", "));
    }

    if !ast.rules.is_empty() {
        let _ = writeln!(w);
        for rule in &ast.rules {
            let _ = write!(w, "rule {}: {}", rule.name, multiset(&rule.reactants));
            let products: Vec<String> = rule
                .products
                .iter()
                .map(|(mult, sp, target)| {
                    let mut s = item(*mult, sp);
                    match target {
                        Target::Here => {}
                        Target::Out => s.push_str("@out"),
                        Target::In => s.push_str("@in"),
                    }
                    s
                })
                .collect();
            let _ = write!(w, " -> {}", products.join(" + "));
            if !rule.catalysts.is_empty() {
                let _ = write!(w, " catalyst {}", multiset(&rule.catalysts));
            }
            match &rule.kinetics {
                RuleKineticsDecl::Default => {}
                RuleKineticsDecl::Priority(p) => {
                    let _ = write!(w, " priority {p}");
                }
                RuleKineticsDecl::MassAction { k } => {
                    let _ = write!(w, " kinetics mass_action(k={k})");
                }
                RuleKineticsDecl::MichaelisMenten { kcat, km, enzyme } => {
                    let _ = write!(w, " kinetics mm(kcat={kcat}, km={km} mM, enzyme={enzyme})");
                }
            }
            let _ = writeln!(w);
        }
    }

    if !ast.interventions.is_empty() {
        let _ = writeln!(w);
        for iv in &ast.interventions {
            let _ = write!(w, "at {} s do ", iv.time);
            match &iv.op {
                InterventionOp::DcPulse { targets } => {
                    let _ = writeln!(w, "dc_pulse {}", targets.join(" "));
                }
                InterventionOp::Electroporate { target, duration, boost } => {
                    let _ = writeln!(w, "electroporate {target} {duration} s {boost}");
                }
                InterventionOp::Inject { compartment, species, amount } => match ast.mode {
                    Mode::Kinetic => {
                        let _ = writeln!(w, "inject {compartment} {species} {amount} amol");
                    }
                    Mode::Abstract => {
                        let _ = writeln!(w, "inject {compartment} {species} {amount}");
                    }
                },
                InterventionOp::InsertChannel { compartment, species, permeability } => {
                    let _ = writeln!(w, "insert_channel {compartment} {species} {permeability}");
                }
            }
        }
    }

    let _ = writeln!(w);
    let _ = writeln!(w, "run {{");
    if let Some(dt) = ast.run.dt {
        let _ = writeln!(w, "  dt = {dt} s");
    }
    if let Some(steps) = ast.run.steps {
        let _ = writeln!(w, "  steps = {steps}");
    }
    if let Some(seed) = ast.run.seed {
        let _ = writeln!(w, "  seed = {seed}");
    }
    if let Some(se) = ast.run.sample_every {
        let _ = writeln!(w, "  sample_every = {se}");
    }
    if let Some(solver) = ast.run.solver {
        let _ = writeln!(w, "  solver = {}", solver.name());
    }
    if let Some(r) = ast.run.burst_ratio {
        let _ = writeln!(w, "  burst_ratio = {r}");
    }
    if let Some(f) = ast.run.gas_factor {
        let _ = writeln!(w, "  gas_factor = {f}");
    }
    let _ = writeln!(w, "}}");
    out
}

fn unit_suffix(mode: Mode) -> &'static str {
    match mode {
        Mode::Kinetic => " mM",
        Mode::Abstract => "",
    }
}

fn item(mult: u32, sp: &str) -> String {
    if mult == 1 {
        sp.to_string()
    } else {
        format!("{mult} {sp}")
    }
}

fn multiset(items: &[(u32, String)]) -> String {
    items
        .iter()
        .map(|(mult, sp)| item(*mult, sp))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn write_compartment(w: &mut String, decl: &CompartmentDecl, indent: usize, mode: Mode) {
    let pad = "  ".repeat(indent);
    let _ = writeln!(w, "{pad}compartment {} diameter {} um {{", decl.name, decl.diameter_um);
    if !decl.contents.is_empty() {
        let entries: Vec<String> = decl
            .contents
            .iter()
            .map(|(sp, v)| format!("{sp}: {v}{}", unit_suffix(mode)))
            .collect();
        let _ = writeln!(w, "{pad}  contents {{ {} }}", entries.join(", "));
    }
    for child in &decl.children {
        write_compartment(w, child, indent + 1, mode);
    }
    let _ = writeln!(w, "{pad}}}");
}
