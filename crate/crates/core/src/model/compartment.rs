use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Error, Mixture, Result};

/// Reserved identifier of the surrounding bulk compartment.
pub const ENVIRONMENT_ID: &str = "env";

/// Maximum recursion depth of a compartment tree (outermost = 1).
pub const MAX_DEPTH: u32 = 3;

/// Volume of a sphere of the given diameter: (π/6)·d³. With diameters in µm
/// the result is in µm³ = fL.
pub fn sphere_volume(diameter: f64) -> Result<f64> {
    if !(diameter > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sphere diameter must be positive, got {diameter}"
        )));
    }
    Ok(std::f64::consts::FRAC_PI_6 * diameter.powi(3))
}

/// Transient permeability boost on a membrane from an electroporation pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pore {
    pub boost: f64,
    /// Simulation time (s) at which the pore reseals.
    pub until: f64,
}

/// One membrane-bound volume in a compartment tree.
///
/// `volume` is the geometric sphere volume in fL; concentrations are always
/// amount / geometric volume. Gas evolved inside the compartment accumulates
/// in `gas_accumulated` (amol) and swells the *effective* volume, which is
/// what the burst criterion and the trace report; it does not feed back into
/// concentrations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compartment {
    pub id: String,
    /// 1 = outermost; the environment pseudo-compartment uses 0.
    pub depth: u32,
    /// µm; for amorphous (T3) liposomes this is the maximal dimension.
    pub diameter: f64,
    /// fL; `f64::INFINITY` is allowed for the environment only.
    pub volume: f64,
    /// amol of evolved gas held against the membrane.
    pub gas_accumulated: f64,
    pub membrane_intact: bool,
    pub contents: Mixture,
    pub children: Vec<Compartment>,
    /// Per-species permeability overrides on this membrane (µm/s), from
    /// channel-protein insertion.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub channels: BTreeMap<String, f64>,
    /// Active electroporation boost, if any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pore: Option<Pore>,
}

impl Compartment {
    /// A spherical compartment at depth 1 with volume derived from the
    /// diameter. Attach it deeper via [`Compartment::attach_child`].
    pub fn sphere(id: impl Into<String>, diameter: f64) -> Result<Compartment> {
        let volume = sphere_volume(diameter)?;
        Ok(Compartment {
            id: id.into(),
            depth: 1,
            diameter,
            volume,
            gas_accumulated: 0.0,
            membrane_intact: true,
            contents: Mixture::new(),
            children: Vec::new(),
            channels: BTreeMap::new(),
            pore: None,
        })
    }

    /// The unbounded bulk compartment surrounding all MVLs.
    pub fn environment() -> Compartment {
        let mut env = Compartment::sphere(ENVIRONMENT_ID, 1.0).expect("unit sphere");
        env.depth = 0;
        env.diameter = f64::INFINITY;
        env.volume = f64::INFINITY;
        env
    }

    /// A finite bath acting as the environment, `volume` in fL.
    pub fn environment_with_volume(volume: f64) -> Result<Compartment> {
        if !(volume > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "environment volume must be positive, got {volume}"
            )));
        }
        let mut env = Compartment::environment();
        env.volume = volume;
        // back out a nominal diameter for reporting
        env.diameter = (volume / std::f64::consts::FRAC_PI_6).cbrt();
        Ok(env)
    }

    /// Attach `child` one level below this compartment, re-deriving the
    /// depths of the whole attached subtree. Fails on the depth-3 bound or
    /// if intact children would no longer pack inside this volume.
    pub fn attach_child(&mut self, child: Compartment) -> Result<()> {
        let mut child = child;
        set_depths(&mut child, self.depth + 1)?;
        let packed: f64 = self
            .children
            .iter()
            .filter(|c| c.membrane_intact)
            .map(|c| c.volume)
            .sum::<f64>()
            + child.volume;
        if packed > self.volume {
            return Err(Error::PackingViolation {
                parent: self.id.clone(),
                children_fl: packed,
                budget_fl: self.volume,
            });
        }
        self.children.push(child);
        Ok(())
    }

    /// Effective volume (fL) including gas-driven swelling.
    pub fn effective_volume(&self, gas_molar_volume_factor: f64) -> f64 {
        self.volume + gas_molar_volume_factor * self.gas_accumulated
    }

    /// Concentration of a species in mM (amol / fL). Zero for the unbounded
    /// environment.
    pub fn concentration(&self, species: &str) -> f64 {
        if self.volume.is_infinite() {
            return 0.0;
        }
        self.contents.amount(species) / self.volume
    }

    /// Membrane surface area in µm² (of this compartment's own bilayer).
    pub fn surface_area(&self) -> f64 {
        std::f64::consts::PI * self.diameter * self.diameter
    }

    /// Deepest level reached within this subtree.
    pub fn max_depth(&self) -> u32 {
        self.children
            .iter()
            .map(Compartment::max_depth)
            .max()
            .unwrap_or(self.depth)
    }

    pub fn intact_children(&self) -> impl Iterator<Item = &Compartment> {
        self.children.iter().filter(|c| c.membrane_intact)
    }

    pub fn has_intact_child(&self) -> bool {
        self.children.iter().any(|c| c.membrane_intact)
    }

    /// Preorder walk over this subtree.
    pub fn walk(&self) -> Vec<&Compartment> {
        let mut out = Vec::new();
        fn rec<'a>(c: &'a Compartment, out: &mut Vec<&'a Compartment>) {
            out.push(c);
            for child in &c.children {
                rec(child, out);
            }
        }
        rec(self, &mut out);
        out
    }

    pub fn find(&self, id: &str) -> Option<&Compartment> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }

    pub fn find_mut(&mut self, id: &str) -> Option<&mut Compartment> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(id))
    }

    /// Validate the structural invariants of this subtree: sphere volume
    /// formula, packing feasibility over intact children, child depths, the
    /// depth-3 bound, and nonnegative gas.
    pub fn validate(&self) -> Result<()> {
        if self.depth > MAX_DEPTH {
            return Err(Error::DepthExceeded(self.id.clone(), self.depth));
        }
        if self.gas_accumulated < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "gas_accumulated of '{}' is negative",
                self.id
            )));
        }
        if self.volume.is_finite() {
            let expect = sphere_volume(self.diameter)?;
            if (self.volume - expect).abs() > 1e-9 * expect {
                return Err(Error::InvalidArgument(format!(
                    "volume of '{}' is {} fL, sphere formula gives {expect} fL",
                    self.id, self.volume
                )));
            }
        }
        let packed: f64 = self.intact_children().map(|c| c.volume).sum();
        if packed > self.volume * (1.0 + 1e-12) {
            return Err(Error::PackingViolation {
                parent: self.id.clone(),
                children_fl: packed,
                budget_fl: self.volume,
            });
        }
        for child in &self.children {
            if child.depth != self.depth + 1 {
                return Err(Error::InvalidArgument(format!(
                    "depth of '{}' is {}, expected parent depth + 1 = {}",
                    child.id,
                    child.depth,
                    self.depth + 1
                )));
            }
            child.validate()?;
        }
        Ok(())
    }
}

/// Re-derive depths of a subtree rooted at `root`, failing beyond the bound.
pub(crate) fn set_depths(root: &mut Compartment, depth: u32) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::DepthExceeded(root.id.clone(), depth));
    }
    root.depth = depth;
    for child in &mut root.children {
        set_depths(child, depth + 1)?;
    }
    Ok(())
}
