//! Swelling-solution embedding: solutes present in the formation medium end
//! up at equal concentration in every compartment of an MVL. Particle-class
//! species are the exception — they are only ever observed in the outermost
//! compartment.

use std::collections::BTreeMap;

use crate::model::{Compartment, Error, Mixture, Mode, Mvl, PermClass, Result, SpeciesTable};

/// Set every non-particle species of `assignments` (concentrations in mM)
/// in every compartment of the tree at amount = concentration × volume;
/// particle-class species go into the outermost compartment only. Amounts
/// are *set*, not added, so the operation is idempotent for a fixed map.
pub fn embed_swelling_solution(
    mvl: &mut Mvl,
    species: &SpeciesTable,
    assignments: &BTreeMap<String, f64>,
    mode: Mode,
) -> Result<()> {
    if mode != Mode::Kinetic {
        return Err(Error::ModeMismatch {
            required: Mode::Kinetic,
            actual: mode,
        });
    }
    for (name, conc) in assignments {
        let sp = species.require(name)?;
        if *conc < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "swelling concentration of '{name}' must be >= 0, got {conc}"
            )));
        }
        if sp.perm_class == PermClass::Particle {
            set_concentration(&mut mvl.root, name, *conc, false);
        } else {
            set_concentration(&mut mvl.root, name, *conc, true);
        }
    }
    Ok(())
}

fn set_concentration(c: &mut Compartment, name: &str, conc_mm: f64, recurse: bool) {
    c.contents.set(name, conc_mm * c.volume);
    if recurse {
        for child in &mut c.children {
            set_concentration(child, name, conc_mm, recurse);
        }
    }
}

/// Swelling assignments as a mixture of concentrations, mostly for logging.
pub fn assignments_as_mixture(assignments: &BTreeMap<String, f64>) -> Mixture {
    assignments
        .iter()
        .map(|(k, v)| (k.clone(), *v))
        .collect()
}
