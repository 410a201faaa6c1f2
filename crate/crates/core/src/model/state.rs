use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    Compartment, Error, Mixture, Mode, Mvl, PermeabilityTable, Result, Rule, SpeciesTable,
};

/// The complete state of one simulated system: species declarations, the
/// bulk environment, the MVL population, the global rule set, and the clock.
/// A state is exclusively owned by one run; independent states may be
/// simulated concurrently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub species: SpeciesTable,
    pub environment: Compartment,
    pub mvls: Vec<Mvl>,
    pub rules: Vec<Rule>,
    /// Seconds; abstract mode advances it by 1 per step.
    pub clock: f64,
    pub rng_seed: u64,
    pub mode: Mode,
    #[serde(default)]
    pub permeability: PermeabilityTable,
}

impl SystemState {
    pub fn new(mode: Mode, species: SpeciesTable, rng_seed: u64) -> SystemState {
        SystemState {
            species,
            environment: Compartment::environment(),
            mvls: Vec::new(),
            rules: Vec::new(),
            clock: 0.0,
            rng_seed,
            mode,
            permeability: PermeabilityTable::default(),
        }
    }

    pub fn require_mode(&self, required: Mode) -> Result<()> {
        if self.mode != required {
            return Err(Error::ModeMismatch {
                required,
                actual: self.mode,
            });
        }
        Ok(())
    }

    pub fn add_rule(&mut self, rule: Rule) -> Result<()> {
        rule.validate(&self.species, self.mode)?;
        self.rules.push(rule);
        Ok(())
    }

    pub fn add_mvl(&mut self, mvl: Mvl) -> Result<()> {
        for c in mvl.root.walk() {
            if self.find_compartment(&c.id).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "compartment id '{}' already present in system",
                    c.id
                )));
            }
            for name in c.contents.species() {
                self.species.require(name)?;
            }
        }
        self.mvls.push(mvl);
        Ok(())
    }

    pub fn mvl(&self, id: &str) -> Option<&Mvl> {
        self.mvls.iter().find(|m| m.id() == id)
    }

    pub fn mvl_mut(&mut self, id: &str) -> Option<&mut Mvl> {
        self.mvls.iter_mut().find(|m| m.id() == id)
    }

    pub fn find_compartment(&self, id: &str) -> Option<&Compartment> {
        if self.environment.id == id {
            return Some(&self.environment);
        }
        self.mvls.iter().find_map(|m| m.root.find(id))
    }

    pub fn find_compartment_mut(&mut self, id: &str) -> Option<&mut Compartment> {
        if self.environment.id == id {
            return Some(&mut self.environment);
        }
        self.mvls.iter_mut().find_map(|m| m.root.find_mut(id))
    }

    /// All compartments in deterministic walk order: environment first, then
    /// each MVL tree preorder.
    pub fn compartments(&self) -> Vec<&Compartment> {
        let mut out = vec![&self.environment];
        for m in &self.mvls {
            out.extend(m.root.walk());
        }
        out
    }

    /// System-wide total amount of one species over environment plus all
    /// compartments (intact or not).
    pub fn species_total(&self, species: &str) -> f64 {
        self.compartments()
            .iter()
            .map(|c| c.contents.amount(species))
            .sum()
    }

    /// Totals for every species present anywhere.
    pub fn species_totals(&self) -> Mixture {
        let mut out = Mixture::new();
        for c in self.compartments() {
            out.merge(&c.contents);
        }
        out
    }

    /// Weighted total for a conservation tag, e.g. N with {urea: 2, nh3: 1}.
    pub fn atom_total(&self, weights: &BTreeMap<String, u32>) -> f64 {
        weights
            .iter()
            .map(|(name, w)| f64::from(*w) * self.species_total(name))
            .sum()
    }

    /// Advance the clock, which may never run backwards.
    pub fn advance_clock(&mut self, to: f64) {
        debug_assert!(to >= self.clock, "clock must be nondecreasing");
        self.clock = self.clock.max(to);
    }

    /// Check the cross-cutting invariants: referenced species exist, trees
    /// are structurally valid, abstract-mode quantities are integral.
    pub fn validate(&self) -> Result<()> {
        for rule in &self.rules {
            rule.validate(&self.species, self.mode)?;
        }
        for m in &self.mvls {
            m.root.validate()?;
        }
        for c in self.compartments() {
            for name in c.contents.species() {
                self.species.require(name)?;
            }
            if self.mode == Mode::Abstract {
                c.contents.ensure_integral()?;
            }
        }
        Ok(())
    }
}
