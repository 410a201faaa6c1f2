use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Error, Result};

/// A multiset of species amounts. Quantities are nonnegative; an absent key
/// means zero. In abstract mode quantities are integer-valued object counts
/// (kept exactly integral; f64 addition of integers stays integral), in
/// kinetic mode they are real amounts in attomol.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mixture {
    amounts: BTreeMap<String, f64>,
}

impl Mixture {
    pub fn new() -> Mixture {
        Mixture::default()
    }

    pub fn of(entries: &[(&str, f64)]) -> Mixture {
        let mut m = Mixture::new();
        for &(name, qty) in entries {
            m.set(name, qty);
        }
        m
    }

    pub fn amount(&self, species: &str) -> f64 {
        self.amounts.get(species).copied().unwrap_or(0.0)
    }

    /// Set the amount of a species; zero entries are dropped so that the map
    /// stays canonical with respect to "absent = 0".
    pub fn set(&mut self, species: &str, qty: f64) {
        assert!(qty >= 0.0, "mixture quantity must be nonnegative");
        if qty == 0.0 {
            self.amounts.remove(species);
        } else {
            self.amounts.insert(species.to_string(), qty);
        }
    }

    pub fn add(&mut self, species: &str, qty: f64) {
        let updated = self.amount(species) + qty;
        self.set(species, updated);
    }

    /// Remove up to `qty` of a species, erroring if the mixture holds less
    /// (beyond a tiny tolerance for float residue in kinetic mode).
    pub fn take(&mut self, species: &str, qty: f64) -> Result<()> {
        let have = self.amount(species);
        let remaining = have - qty;
        if remaining < -1e-9 * qty.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "cannot take {qty} of '{species}': only {have} present"
            )));
        }
        self.set(species, remaining.max(0.0));
        Ok(())
    }

    pub fn merge(&mut self, other: &Mixture) {
        for (name, qty) in &other.amounts {
            self.add(name, *qty);
        }
    }

    /// Multiset containment: `self` >= `other` entrywise.
    pub fn contains(&self, other: &Mixture) -> bool {
        other
            .amounts
            .iter()
            .all(|(name, qty)| self.amount(name) >= *qty)
    }

    /// Multiset sum of two mixtures.
    pub fn sum(&self, other: &Mixture) -> Mixture {
        let mut out = self.clone();
        out.merge(other);
        out
    }

    pub fn scaled(&self, factor: f64) -> Mixture {
        assert!(factor >= 0.0);
        let mut out = Mixture::new();
        for (name, qty) in &self.amounts {
            out.set(name, qty * factor);
        }
        out
    }

    pub fn clear(&mut self) -> Mixture {
        Mixture {
            amounts: std::mem::take(&mut self.amounts),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.amounts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn species(&self) -> impl Iterator<Item = &str> {
        self.amounts.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.amounts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.amounts.values().sum()
    }

    /// True when every quantity is integral (the abstract-mode purity
    /// invariant).
    pub fn is_integral(&self) -> bool {
        self.amounts.values().all(|q| q.fract() == 0.0)
    }

    /// Check all quantities are nonnegative integers, as abstract mode
    /// requires.
    pub fn ensure_integral(&self) -> Result<()> {
        for (_, q) in self.amounts.iter() {
            if q.fract() != 0.0 {
                return Err(Error::FractionalCount(*q));
            }
        }
        Ok(())
    }
}

impl FromIterator<(String, f64)> for Mixture {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        let mut m = Mixture::new();
        for (name, qty) in iter {
            m.set(&name, qty);
        }
        m
    }
}
