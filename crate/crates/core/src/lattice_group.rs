//! The anti-symmetry group of the periodic chain: the dihedral group of order
//! `2L` generated by the single-site translation `τ` and the bond reflection
//! `σ`, realized as permutations of the sites `0..L`.
//!
//! Group elements are written `σ^ν τ^μ`. As site maps, `τ: i ↦ i + 1` and
//! `σ: i ↦ L - 1 - i` (all mod `L`); a product acts right-to-left, so
//! `σ τ^μ` sends `i ↦ L - 1 - (i + μ)`. The reflection axis passes through
//! the bond `(L-1, 0)` and the bond `(L/2 - 1, L/2)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::spin_basis::Configuration;

/// An element `σ^ν τ^μ` of the anti-symmetry group of an `L`-site ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    nu: u8,
    mu: usize,
    l: usize,
}

impl GroupElement {
    pub fn new(l: usize, nu: u8, mu: usize) -> Result<Self> {
        if l == 0 || l % 2 != 0 {
            return param(format!("chain length must be even and positive, got {l}"));
        }
        if nu > 1 {
            return param(format!("reflection power must be 0 or 1, got {nu}"));
        }
        if mu >= l {
            return param(format!("translation power must be < {l}, got {mu}"));
        }
        Ok(GroupElement { nu, mu, l })
    }

    pub fn identity(l: usize) -> Result<Self> {
        Self::new(l, 0, 0)
    }

    pub fn translation(l: usize) -> Result<Self> {
        Self::new(l, 0, 1 % l)
    }

    pub fn reflection(l: usize) -> Result<Self> {
        Self::new(l, 1, 0)
    }

    pub fn nu(&self) -> u8 {
        self.nu
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_reflection(&self) -> bool {
        self.nu == 1
    }

    /// Group product `self · other` (apply `other` first).
    ///
    /// Uses `τ^μ σ = σ τ^{-μ}`, so
    /// `σ^a τ^b · σ^c τ^d = σ^{a+c} τ^{(-1)^c b + d}`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        debug_assert_eq!(self.l, other.l);
        let l = self.l;
        let b = if other.nu == 1 { (l - self.mu) % l } else { self.mu };
        GroupElement {
            nu: (self.nu + other.nu) % 2,
            mu: (b + other.mu) % l,
            l,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        if self.nu == 1 {
            // reflections are involutions
            *self
        } else {
            GroupElement { nu: 0, mu: (self.l - self.mu) % self.l, l: self.l }
        }
    }

    /// Image of a single site.
    #[inline]
    pub fn apply_site(&self, i: usize) -> usize {
        let t = (i + self.mu) % self.l;
        if self.nu == 1 {
            self.l - 1 - t
        } else {
            t
        }
    }

    /// Image of a configuration: bit `g(i)` of the result is bit `i` of the input.
    pub fn apply(&self, c: Configuration) -> Configuration {
        debug_assert!(self.l <= 64);
        let l = self.l as u32;
        let mask = if l == 64 { u64::MAX } else { (1u64 << l) - 1 };
        let bits = c.bits();
        let rotated = if self.mu == 0 {
            bits
        } else {
            let m = self.mu as u32;
            ((bits << m) | (bits >> (l - m))) & mask
        };
        let out = if self.nu == 1 {
            rotated.reverse_bits() >> (64 - l)
        } else {
            rotated
        };
        Configuration::from_bits(out)
    }
}

/// All `2L` elements, translations first.
pub fn elements(l: usize) -> Result<Vec<GroupElement>> {
    GroupElement::identity(l)?;
    Ok((0..2u8)
        .flat_map(|nu| (0..l).map(move |mu| GroupElement { nu, mu, l }))
        .collect())
}

/// Site permutation realizing `g`, as the array of images of `0..L`.
pub fn as_permutation(g: &GroupElement) -> Vec<usize> {
    (0..g.l).map(|i| g.apply_site(i)).collect()
}

/// Cycle type of a site permutation: cycle length -> number of cycles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct CycleIndex {
    pub counts: BTreeMap<usize, usize>,
}

impl CycleIndex {
    /// Decompose an arbitrary permutation given by its image array.
    pub fn of_permutation(perm: &[usize]) -> CycleIndex {
        let mut seen = vec![false; perm.len()];
        let mut counts = BTreeMap::new();
        for start in 0..perm.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = perm[i];
                len += 1;
            }
            *counts.entry(len).or_insert(0) += 1;
        }
        CycleIndex { counts }
    }

    /// Total number of cycles `c(g)`.
    pub fn total_cycles(&self) -> usize {
        self.counts.values().sum()
    }

    /// `Σ_l l·c_l`, the number of sites permuted.
    pub fn total_sites(&self) -> usize {
        self.counts.iter().map(|(l, c)| l * c).sum()
    }

    pub fn count(&self, len: usize) -> usize {
        self.counts.get(&len).copied().unwrap_or(0)
    }
}

pub fn cycle_index(g: &GroupElement) -> CycleIndex {
    CycleIndex::of_permutation(&as_permutation(g))
}

/// Orbit of a configuration under the full group.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub representative: Configuration,
    /// Orbit members in ascending order, each with one element mapping the
    /// representative onto it.
    pub members: Vec<(Configuration, GroupElement)>,
    /// Elements fixing the representative.
    pub stabilizer: Vec<GroupElement>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, c: Configuration) -> bool {
        self.members.binary_search_by_key(&c, |(m, _)| *m).is_ok()
    }
}

pub fn orbit(rep: Configuration, l: usize) -> Result<Orbit> {
    if l > 64 {
        return param(format!("bitstring configurations support L <= 64, got {l}"));
    }
    if l < 64 && rep.bits() >> l != 0 {
        return param(format!("configuration {:#x} does not fit in {l} sites", rep.bits()));
    }
    let mut members: BTreeMap<Configuration, GroupElement> = BTreeMap::new();
    let mut stabilizer = Vec::new();
    for g in elements(l)? {
        let image = g.apply(rep);
        if image == rep {
            stabilizer.push(g);
        }
        members.entry(image).or_insert(g);
    }
    Ok(Orbit { representative: rep, members: members.into_iter().collect(), stabilizer })
}
