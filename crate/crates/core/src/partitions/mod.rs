//! Finite partitions and their lattice operations, plus the constructions
//! built on them: subordinate partitions, past disintegration with the
//! local SMB and shift-lemma checks, and Hamming-ball combinatorics.

pub mod combinatorics;
pub mod disintegration;
pub mod subordinate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{Point, ShiftMetric, SystemDescriptor};

pub use combinatorics::{
    delta_constant, hamming_ball_bound_check, hamming_bounds_scan, hamming_pseudometric, DeltaConstant, HammingBallReport, HammingScan,
};
pub use disintegration::{disintegrate_past, disintegrate_window, local_smb_check, shift_lemma_check, ShiftLemmaReport, SmbReport};
pub use subordinate::{check_atom_in_unstable, construct_subordinate_partition, AtomCheckReport, SubordinatePlan, SubordinateRequest};

/// Largest atom count any single partition may have.
pub const ATOM_BUDGET: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FinitePartition {
    /// `{X}`.
    Trivial,
    /// Atoms are the words seen at `coords` (sorted, distinct).
    Cylinder { coords: Vec<i64>, alphabet: u8 },
    /// Half-open `m x m` grid on the torus.
    TorusGrid { m: u32 },
    Product { left: Box<FinitePartition>, right: Box<FinitePartition> },
}

impl FinitePartition {
    pub fn cylinder(coords: impl IntoIterator<Item = i64>, alphabet: u8) -> Self {
        let set: BTreeSet<i64> = coords.into_iter().collect();
        FinitePartition::Cylinder { coords: set.into_iter().collect(), alphabet }
    }

    /// Cylinder partition on the window `lo..=hi`.
    pub fn window(lo: i64, hi: i64, alphabet: u8) -> Self {
        Self::cylinder(lo..=hi, alphabet)
    }

    /// The partition by the symbol at coordinate 0.
    pub fn time_zero(alphabet: u8) -> Self {
        Self::window(0, 0, alphabet)
    }

    pub fn coords(&self) -> &[i64] {
        match self {
            FinitePartition::Cylinder { coords, .. } => coords,
            _ => &[],
        }
    }

    pub fn atom_count(&self) -> f64 {
        match self {
            FinitePartition::Trivial => 1.0,
            FinitePartition::Cylinder { coords, alphabet } => (*alphabet as f64).powi(coords.len() as i32),
            FinitePartition::TorusGrid { m } => (*m as f64).powi(2),
            FinitePartition::Product { left, right } => left.atom_count() * right.atom_count(),
        }
    }

    fn check_budget(self) -> Result<Self> {
        let atoms = self.atom_count();
        if atoms > ATOM_BUDGET as f64 {
            return Err(Error::AtomBudgetExceeded { atoms, budget: ATOM_BUDGET });
        }
        Ok(self)
    }

    /// `(coordinate, symbol)` pairs fixing the atom containing `x`.
    pub fn fixed_of(&self, x: &Point) -> Result<Vec<(i64, u8)>> {
        match self {
            FinitePartition::Trivial => Ok(Vec::new()),
            FinitePartition::Cylinder { coords, .. } => {
                let p = x.as_symbolic().ok_or(Error::MixedSystems)?;
                coords
                    .iter()
                    .map(|&c| {
                        p.get(c)
                            .map(|s| (c, s))
                            .ok_or(Error::WindowExhausted { needed: c.abs(), available: p.radius() })
                    })
                    .collect()
            }
            _ => Err(Error::IncompatiblePartitions(format!("{} atoms are not cylinders", self.kind_name()))),
        }
    }

    pub fn label_of(&self, x: &Point) -> Result<u64> {
        match (self, x) {
            (FinitePartition::Trivial, _) => Ok(0),
            (FinitePartition::Cylinder { alphabet, .. }, _) => {
                Ok(self.fixed_of(x)?.iter().fold(0u64, |acc, &(_, s)| acc * *alphabet as u64 + s as u64))
            }
            (FinitePartition::TorusGrid { m }, Point::Torus(p)) => {
                let [x, y] = p.raw();
                let cell = |v: u128| (((v >> 64) * *m as u128) >> 64) as u64;
                Ok(cell(x) * *m as u64 + cell(y))
            }
            (FinitePartition::Product { left, right }, Point::Product(a, b)) => {
                Ok(left.label_of(a)? * right.atom_count() as u64 + right.label_of(b)?)
            }
            _ => Err(Error::MixedSystems),
        }
    }

    /// `self` is at least as fine as `other`.
    pub fn refines(&self, other: &FinitePartition) -> bool {
        match (self, other) {
            (_, FinitePartition::Trivial) => true,
            (FinitePartition::Cylinder { coords: a, alphabet: ka }, FinitePartition::Cylinder { coords: b, alphabet: kb }) => {
                ka == kb && b.iter().all(|c| a.binary_search(c).is_ok())
            }
            (FinitePartition::TorusGrid { m: a }, FinitePartition::TorusGrid { m: b }) => a % b == 0,
            (FinitePartition::Product { left: l1, right: r1 }, FinitePartition::Product { left: l2, right: r2 }) => {
                l1.refines(l2) && r1.refines(r2)
            }
            _ => false,
        }
    }

    /// Upper bound on the diameter of every atom in the metric of `sys`.
    pub fn diam_bound(&self, sys: &SystemDescriptor) -> Result<f64> {
        let sys = match sys {
            SystemDescriptor::Inverse { inner } => inner.as_ref(),
            s => s,
        };
        match (self, sys) {
            (FinitePartition::Product { left, right }, SystemDescriptor::Product { left: sl, right: sr }) => {
                Ok(left.diam_bound(sl)?.max(right.diam_bound(sr)?))
            }
            (
                FinitePartition::Trivial | FinitePartition::TorusGrid { .. },
                SystemDescriptor::ToralAutomorphism { .. } | SystemDescriptor::TorusTranslation { .. },
            ) => {
                let half_diag = std::f64::consts::SQRT_2 / 2.0;
                Ok(match self {
                    FinitePartition::TorusGrid { m } => (std::f64::consts::SQRT_2 / *m as f64).min(half_diag),
                    _ => half_diag,
                })
            }
            (
                FinitePartition::Trivial | FinitePartition::Cylinder { .. },
                SystemDescriptor::FullShift { alphabet_size, metric, window },
            ) => {
                let coords = self.coords();
                let free = |i: i64| coords.binary_search(&i).is_err();
                match metric {
                    ShiftMetric::Dyadic => {
                        let j = (0..=*window + 1).find(|&j| free(j) || free(-j)).unwrap_or(*window + 1);
                        Ok(2f64.powi(-(j as i32)))
                    }
                    ShiftMetric::WeightedL2 { weights } => {
                        let inside: f64 = (-*window..=*window).filter(|&i| free(i)).map(|i| weights.a(i.unsigned_abs())).sum();
                        let tail = 2.0 * weights.tail_sum(*window as u64);
                        Ok((*alphabet_size as f64 - 1.0) * (inside + tail).sqrt())
                    }
                }
            }
            _ => Err(Error::IncompatiblePartitions(format!("{} partition on {}", self.kind_name(), sys.name()))),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FinitePartition::Trivial => "trivial",
            FinitePartition::Cylinder { .. } => "cylinder",
            FinitePartition::TorusGrid { .. } => "torus-grid",
            FinitePartition::Product { .. } => "product",
        }
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Common refinement `a ∨ b`.
pub fn refine(a: &FinitePartition, b: &FinitePartition) -> Result<FinitePartition> {
    use FinitePartition::*;
    let out = match (a, b) {
        (Trivial, x) | (x, Trivial) => x.clone(),
        (Cylinder { coords: ca, alphabet: ka }, Cylinder { coords: cb, alphabet: kb }) => {
            if ka != kb {
                return Err(Error::IncompatiblePartitions(format!("alphabets {ka} and {kb}")));
            }
            FinitePartition::cylinder(ca.iter().chain(cb).copied(), *ka)
        }
        (TorusGrid { m: p }, TorusGrid { m: q }) => TorusGrid { m: p / gcd(*p, *q) * q },
        (Product { left: l1, right: r1 }, Product { left: l2, right: r2 }) => {
            Product { left: Box::new(refine(l1, l2)?), right: Box::new(refine(r1, r2)?) }
        }
        _ => return Err(Error::IncompatiblePartitions(format!("{} with {}", a.kind_name(), b.kind_name()))),
    };
    out.check_budget()
}

/// `T^{-k} a` under the left shift: coordinates move by `+k`.
pub fn pullback(a: &FinitePartition, k: i64) -> Result<FinitePartition> {
    match a {
        FinitePartition::Trivial => Ok(FinitePartition::Trivial),
        FinitePartition::Cylinder { coords, alphabet } => {
            Ok(FinitePartition::Cylinder { coords: coords.iter().map(|c| c + k).collect(), alphabet: *alphabet })
        }
        FinitePartition::Product { left, right } => {
            Ok(FinitePartition::Product { left: Box::new(pullback(left, k)?), right: Box::new(pullback(right, k)?) })
        }
        FinitePartition::TorusGrid { .. } if k == 0 => Ok(a.clone()),
        FinitePartition::TorusGrid { .. } => {
            Err(Error::IncompatiblePartitions("torus grids have no closed-form preimage".into()))
        }
    }
}

/// `∨_{j=m}^{n} T^{-j} a`.
pub fn join_range(a: &FinitePartition, m: i64, n: i64) -> Result<FinitePartition> {
    let mut out = FinitePartition::Trivial;
    for j in m..=n {
        out = refine(&out, &pullback(a, j)?)?;
    }
    Ok(out)
}
