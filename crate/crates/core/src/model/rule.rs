use serde::{Deserialize, Serialize};

use super::{Error, Mixture, Mode, Result, SpeciesTable};

/// Where a rule product is routed relative to the compartment the rule fired
/// in: stay put, move to the parent (or the environment at the root), or
/// move into one intact child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Here,
    Out,
    In,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Here => "here",
            Target::Out => "out",
            Target::In => "in",
        }
    }
}

/// One product term of a rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub species: String,
    pub stoichiometry: u32,
    pub target: Target,
}

impl Product {
    pub fn here(species: impl Into<String>, stoichiometry: u32) -> Product {
        Product {
            species: species.into(),
            stoichiometry,
            target: Target::Here,
        }
    }
}

/// Rate semantics of a rule: abstract priority for maximally-parallel
/// rewriting, or a continuous rate law for kinetic mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kinetics {
    /// Higher priority wins; among equal priorities the greedy strategy
    /// picks uniformly at random.
    Abstract { priority: i32 },
    /// v = k · Π reactant-concentration^stoichiometry, in mM/s with k in
    /// mM^(1−order)/s.
    MassAction { k: f64 },
    /// v = kcat·[E]·[S]/(Km+[S]) in mM/s, [E] the live concentration of
    /// `enzyme` in the compartment.
    MichaelisMenten { kcat: f64, km: f64, enzyme: String },
}

/// A multiset rewriting rule. Reactants are consumed, catalysts are required
/// but not consumed, products are created and routed by target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub name: String,
    pub reactants: Mixture,
    #[serde(skip_serializing_if = "Mixture::is_empty", default)]
    pub catalysts: Mixture,
    pub products: Vec<Product>,
    pub kinetics: Kinetics,
}

impl Rule {
    pub fn abstract_rule(
        name: impl Into<String>,
        reactants: Mixture,
        products: Vec<Product>,
    ) -> Rule {
        Rule {
            name: name.into(),
            reactants,
            catalysts: Mixture::new(),
            products,
            kinetics: Kinetics::Abstract { priority: 0 },
        }
    }

    pub fn priority(&self) -> i32 {
        match self.kinetics {
            Kinetics::Abstract { priority } => priority,
            _ => 0,
        }
    }

    pub fn is_kinetic(&self) -> bool {
        !matches!(self.kinetics, Kinetics::Abstract { .. })
    }

    pub fn has_in_target(&self) -> bool {
        self.products.iter().any(|p| p.target == Target::In)
    }

    /// Validate the rule against a species table and the system mode.
    pub fn validate(&self, species: &SpeciesTable, mode: Mode) -> Result<()> {
        for name in self.reactants.species().chain(self.catalysts.species()) {
            species.require(name)?;
        }
        for p in &self.products {
            species.require(&p.species)?;
            if p.stoichiometry == 0 {
                return Err(Error::InvalidArgument(format!(
                    "rule '{}': product stoichiometry must be a positive integer",
                    self.name
                )));
            }
        }
        self.reactants.ensure_integral().map_err(|_| {
            Error::InvalidArgument(format!(
                "rule '{}': reactant multiplicities must be integers",
                self.name
            ))
        })?;
        self.catalysts.ensure_integral().map_err(|_| {
            Error::InvalidArgument(format!(
                "rule '{}': catalyst multiplicities must be integers",
                self.name
            ))
        })?;
        match (&self.kinetics, mode) {
            (Kinetics::Abstract { .. }, Mode::Abstract) => {
                // an empty left-hand side would be applicable forever
                if self.reactants.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "rule '{}': abstract rules need at least one reactant",
                        self.name
                    )));
                }
            }
            (Kinetics::Abstract { .. }, Mode::Kinetic) => {
                return Err(Error::InvalidArgument(format!(
                    "rule '{}': kinetic-mode systems need a rate law, not a priority",
                    self.name
                )));
            }
            (_, Mode::Abstract) => {
                return Err(Error::InvalidArgument(format!(
                    "rule '{}': rate laws are not usable in abstract mode",
                    self.name
                )));
            }
            (Kinetics::MassAction { k }, Mode::Kinetic) => {
                if !(k.is_finite() && *k >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "rule '{}': mass-action k must be finite and >= 0",
                        self.name
                    )));
                }
            }
            (Kinetics::MichaelisMenten { kcat, km, enzyme }, Mode::Kinetic) => {
                species.require(enzyme)?;
                if !(kcat.is_finite() && *kcat >= 0.0) || !(km.is_finite() && *km > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "rule '{}': need kcat >= 0 and km > 0",
                        self.name
                    )));
                }
                let n_reactants = self.reactants.species().count();
                if n_reactants != 1 {
                    return Err(Error::InvalidArgument(format!(
                        "rule '{}': Michaelis-Menten rules take exactly one substrate species, got {n_reactants}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// The single substrate of a Michaelis–Menten rule.
    pub fn substrate(&self) -> Option<&str> {
        match self.kinetics {
            Kinetics::MichaelisMenten { .. } => self.reactants.species().next(),
            _ => None,
        }
    }
}
