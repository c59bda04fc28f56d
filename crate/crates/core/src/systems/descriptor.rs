use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metric::Rational;

use super::{random_iet, CatMap, DoublingMap, IetSpec, IetSystem, Rotation, RotationSpec};

/// A system as written in an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemDescriptor {
    Doubling {
        p: f64,
    },
    Cat {},
    Rotation {
        partial_quotients: Vec<u64>,
    },
    Iet {
        lengths: Vec<[i64; 2]>,
        permutation: Vec<usize>,
    },
    RandomIet {
        d: usize,
        seed: u64,
    },
}

/// A constructed system.
#[derive(Debug, Clone)]
pub enum BuiltSystem {
    Doubling(DoublingMap),
    Cat(CatMap),
    Rotation(Rotation),
    Iet(IetSystem),
}

impl SystemDescriptor {
    pub fn build(&self) -> Result<BuiltSystem> {
        Ok(match self {
            SystemDescriptor::Doubling { p } => BuiltSystem::Doubling(DoublingMap::new(*p)?),
            SystemDescriptor::Cat {} => BuiltSystem::Cat(CatMap),
            SystemDescriptor::Rotation { partial_quotients } => {
                BuiltSystem::Rotation(Rotation::new(RotationSpec::from_partial_quotients(partial_quotients)?)?)
            }
            SystemDescriptor::Iet { lengths, permutation } => {
                let lengths = lengths
                    .iter()
                    .map(|[n, d]| (*n as i128, *d as i128))
                    .collect::<Vec<_>>();
                BuiltSystem::Iet(IetSystem::new(IetSpec::from_pairs(&lengths, permutation.clone())?)?)
            }
            SystemDescriptor::RandomIet { d, seed } => BuiltSystem::Iet(IetSystem::new(random_iet(*d, *seed)?)?),
        })
    }

    /// Descriptor of the explicit exchange `spec`.
    pub fn from_iet(spec: &IetSpec) -> SystemDescriptor {
        SystemDescriptor::Iet {
            lengths: spec
                .lengths()
                .iter()
                .map(|l: &Rational| [*l.numer() as i64, *l.denom() as i64])
                .collect(),
            permutation: spec.permutation().to_vec(),
        }
    }

    pub fn is_iet(&self) -> bool {
        matches!(self, SystemDescriptor::Iet { .. } | SystemDescriptor::RandomIet { .. })
    }
}

/// Run `$body` with `$s` bound to the concrete system inside a [`BuiltSystem`].
#[macro_export]
macro_rules! with_system {
    ($built:expr, |$s:ident| $body:expr) => {
        match $built {
            $crate::systems::BuiltSystem::Doubling($s) => $body,
            $crate::systems::BuiltSystem::Cat($s) => $body,
            $crate::systems::BuiltSystem::Rotation($s) => $body,
            $crate::systems::BuiltSystem::Iet($s) => $body,
        }
    };
}
