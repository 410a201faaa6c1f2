use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Error, Result};

/// Qualitative membrane-permeability class of a species. The class decides
/// whether, and how fast, the species crosses an intact bilayer: gases and
/// lipophilic molecules readily, small uncharged polar molecules slowly,
/// ions and macromolecules not at all. Particles behave like macromolecules
/// but are additionally restricted to outermost compartments during
/// swelling-solution embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermClass {
    Gas,
    SmallPolar,
    Lipophilic,
    Ionic,
    Macromolecule,
    Particle,
}

impl PermClass {
    pub const ALL: [PermClass; 6] = [
        PermClass::Gas,
        PermClass::SmallPolar,
        PermClass::Lipophilic,
        PermClass::Ionic,
        PermClass::Macromolecule,
        PermClass::Particle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PermClass::Gas => "gas",
            PermClass::SmallPolar => "small_polar",
            PermClass::Lipophilic => "lipophilic",
            PermClass::Ionic => "ionic",
            PermClass::Macromolecule => "macromolecule",
            PermClass::Particle => "particle",
        }
    }

    pub fn parse(s: &str) -> Option<PermClass> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl std::fmt::Display for PermClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A named symbol of the system, with its permeability class and an optional
/// per-species permeability coefficient that overrides the class default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    pub perm_class: PermClass,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub permeability_override: Option<f64>,
}

impl Species {
    pub fn new(name: impl Into<String>, perm_class: PermClass) -> Species {
        Species {
            name: name.into(),
            perm_class,
            permeability_override: None,
        }
    }

    pub fn with_permeability(mut self, um_per_s: f64) -> Species {
        self.permeability_override = Some(um_per_s);
        self
    }
}

/// Default permeability coefficients (µm/s) per class. Configuration data,
/// not constants: the table can be replaced wholesale (e.g. from a JSON
/// file) and individual species may override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PermeabilityTable {
    pub gas: f64,
    pub small_polar: f64,
    pub lipophilic: f64,
    pub ionic: f64,
    pub macromolecule: f64,
    pub particle: f64,
}

impl Default for PermeabilityTable {
    fn default() -> Self {
        // small_polar calibrated against the urease demo geometry: with
        // 0.04 µm/s an inner compartment reaches >=10% of the bath urea
        // concentration well inside 600 s (see engine::kinetic tests).
        PermeabilityTable {
            gas: 100.0,
            small_polar: 0.04,
            lipophilic: 1.0,
            ionic: 0.0,
            macromolecule: 0.0,
            particle: 0.0,
        }
    }
}

impl PermeabilityTable {
    /// Default permeability coefficient (µm/s) for a class.
    pub fn default_permeability(&self, class: PermClass) -> f64 {
        match class {
            PermClass::Gas => self.gas,
            PermClass::SmallPolar => self.small_polar,
            PermClass::Lipophilic => self.lipophilic,
            PermClass::Ionic => self.ionic,
            PermClass::Macromolecule => self.macromolecule,
            PermClass::Particle => self.particle,
        }
    }
}

/// Registry of all species in a system definition, keyed by unique name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpeciesTable {
    entries: BTreeMap<String, Species>,
}

impl SpeciesTable {
    pub fn new() -> SpeciesTable {
        SpeciesTable::default()
    }

    pub fn insert(&mut self, species: Species) -> Result<()> {
        if let Some(p) = species.permeability_override {
            if !(p >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "permeability override for '{}' must be >= 0, got {p}",
                    species.name
                )));
            }
        }
        if self.entries.contains_key(&species.name) {
            return Err(Error::DuplicateSpecies(species.name));
        }
        self.entries.insert(species.name.clone(), species);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Species> {
        self.entries.get(name)
    }

    pub fn require(&self, name: &str) -> Result<&Species> {
        self.get(name)
            .ok_or_else(|| Error::UnknownSpecies(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Species> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Effective base permeability (µm/s) for a species: the per-species
    /// override if present, otherwise the class default from `table`.
    pub fn base_permeability(&self, name: &str, table: &PermeabilityTable) -> Result<f64> {
        let sp = self.require(name)?;
        Ok(sp
            .permeability_override
            .unwrap_or_else(|| table.default_permeability(sp.perm_class)))
    }
}
