use serde::{Deserialize, Serialize};

use super::{Compartment, Error, Result, ENVIRONMENT_ID};

/// Observed morphological varieties of liposome. T1a/T1b/T2/T3 are the
/// multivesicular forms; `Plain` is a single-compartment liposome, which
/// arises when lysis or bursting liberates a childless inner compartment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Morphology {
    /// Spherical, containing smaller liposomes (depth 2).
    T1a,
    /// As T1a with one further degree of recursion (depth 3).
    T1b,
    /// Spherical with a stalk; structurally like T1a (depth 2).
    T2,
    /// Amorphous, typically very large; diameter is the maximal dimension.
    T3,
    /// Unilamellar single compartment (depth 1).
    Plain,
}

impl Morphology {
    pub const GENERATED: [Morphology; 4] =
        [Morphology::T1a, Morphology::T1b, Morphology::T2, Morphology::T3];

    pub fn name(self) -> &'static str {
        match self {
            Morphology::T1a => "T1a",
            Morphology::T1b => "T1b",
            Morphology::T2 => "T2",
            Morphology::T3 => "T3",
            Morphology::Plain => "plain",
        }
    }

    /// Morphology implied by a tree's recursion depth, used when lysis
    /// products become MVLs of their own.
    pub fn from_depth(depth: u32) -> Morphology {
        match depth {
            0 | 1 => Morphology::Plain,
            2 => Morphology::T1a,
            _ => Morphology::T1b,
        }
    }

    /// Recursion depth this morphology requires of its tree.
    pub fn required_depth(self) -> u32 {
        match self {
            Morphology::Plain => 1,
            Morphology::T1a | Morphology::T2 | Morphology::T3 => 2,
            Morphology::T1b => 3,
        }
    }

    pub fn is_amorphous(self) -> bool {
        matches!(self, Morphology::T3)
    }
}

impl std::fmt::Display for Morphology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A multivesicular liposome: a rooted compartment tree tagged with its
/// morphological type, suspended in the bulk environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mvl {
    pub morphology: Morphology,
    pub root: Compartment,
    pub environment_id: String,
}

impl Mvl {
    pub fn new(morphology: Morphology, root: Compartment) -> Result<Mvl> {
        root.validate()?;
        if root.depth != 1 {
            return Err(Error::InvalidArgument(format!(
                "MVL root '{}' must sit at depth 1, got {}",
                root.id, root.depth
            )));
        }
        let depth = root.max_depth();
        if depth != morphology.required_depth() {
            return Err(Error::InvalidArgument(format!(
                "morphology {morphology} requires recursion depth {}, tree '{}' has {depth}",
                morphology.required_depth(),
                root.id
            )));
        }
        Ok(Mvl {
            morphology,
            root,
            environment_id: ENVIRONMENT_ID.to_string(),
        })
    }

    /// Wrap a liberated subtree, inferring morphology from its depth.
    pub fn from_tree(root: Compartment) -> Result<Mvl> {
        let morphology = Morphology::from_depth(root.max_depth());
        Mvl::new(morphology, root)
    }

    pub fn id(&self) -> &str {
        &self.root.id
    }

    /// Number of liposomes directly inside the outer compartment. This is
    /// the statistic the generator samples and the population report mirrors.
    pub fn internal_count(&self) -> usize {
        self.root.children.len()
    }

    pub fn compartment_count(&self) -> usize {
        self.root.walk().len()
    }
}
