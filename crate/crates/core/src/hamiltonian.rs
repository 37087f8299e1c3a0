//! Bond-staggered Heisenberg Hamiltonian and the perturbation family.
//!
//! Spin operators are `S = σ/2`. Every operator is a sum of two-site
//! exchange terms `J S_i·S_j`, Ising terms `J S^z_i S^z_j` and on-site fields
//! `h S^z_i`; all of them conserve the magnon number. Site `j` and bond
//! `(j, j+1)` carry the staggering sign `(-1)^(j+1)`, so the bond between
//! sites 0 and 1 is ferromagnetic.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result, ZedError};
use crate::lattice_group::GroupElement;
use crate::spin_basis::{Configuration, PlainBasis, SectorBasis};

/// Tolerance for the post-assembly Hermiticity check.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Staggering sign `(-1)^(j+1)` of site or bond `j`.
#[inline]
pub fn stagger(j: usize) -> f64 {
    if j % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    ExternalField,
    StaggeredField,
    IsingNn,
    HeisenbergNnn,
    HeisenbergRange3Staggered,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 5] = [
        PerturbationKind::ExternalField,
        PerturbationKind::StaggeredField,
        PerturbationKind::IsingNn,
        PerturbationKind::HeisenbergNnn,
        PerturbationKind::HeisenbergRange3Staggered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PerturbationKind::ExternalField => "external_field",
            PerturbationKind::StaggeredField => "staggered_field",
            PerturbationKind::IsingNn => "ising_nn",
            PerturbationKind::HeisenbergNnn => "heisenberg_nnn",
            PerturbationKind::HeisenbergRange3Staggered => "heisenberg_range3_staggered",
        }
    }

    /// Exchange-type terms, built from full `S_i·S_j` couplings.
    pub fn is_heisenberg_type(self) -> bool {
        matches!(self, PerturbationKind::HeisenbergNnn | PerturbationKind::HeisenbergRange3Staggered)
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PerturbationKind {
    type Err = ZedError;

    fn from_str(s: &str) -> Result<Self> {
        PerturbationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ZedError::Parameter(format!("unknown perturbation kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub lambda: f64,
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationKind, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return param(format!("coupling must be finite, got {lambda}"));
        }
        Ok(PerturbationSpec { kind, lambda })
    }
}

/// Sum of local two-site and one-site terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalTerms {
    l: usize,
    exchange: BTreeMap<(usize, usize), f64>,
    zz: BTreeMap<(usize, usize), f64>,
    field: BTreeMap<usize, f64>,
}

fn bond_key(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

impl LocalTerms {
    pub fn new(l: usize) -> Self {
        LocalTerms { l, ..Default::default() }
    }

    pub fn add_exchange(&mut self, i: usize, j: usize, coupling: f64) {
        *self.exchange.entry(bond_key(i, j)).or_default() += coupling;
    }

    pub fn add_zz(&mut self, i: usize, j: usize, coupling: f64) {
        *self.zz.entry(bond_key(i, j)).or_default() += coupling;
    }

    pub fn add_field(&mut self, i: usize, h: f64) {
        *self.field.entry(i).or_default() += h;
    }

    pub fn scaled(&self, factor: f64) -> LocalTerms {
        let scale = |m: &BTreeMap<(usize, usize), f64>| m.iter().map(|(k, v)| (*k, v * factor)).collect();
        LocalTerms {
            l: self.l,
            exchange: scale(&self.exchange),
            zz: scale(&self.zz),
            field: self.field.iter().map(|(k, v)| (*k, v * factor)).collect(),
        }
    }

    pub fn plus(&self, other: &LocalTerms) -> LocalTerms {
        let mut out = self.clone();
        for (&(i, j), &v) in &other.exchange {
            out.add_exchange(i, j, v);
        }
        for (&(i, j), &v) in &other.zz {
            out.add_zz(i, j, v);
        }
        for (&i, &v) in &other.field {
            out.add_field(i, v);
        }
        out
    }

    fn relabel(&self, g: &GroupElement) -> LocalTerms {
        let mut out = LocalTerms::new(self.l);
        for (&(i, j), &v) in &self.exchange {
            out.add_exchange(g.apply_site(i), g.apply_site(j), v);
        }
        for (&(i, j), &v) in &self.zz {
            out.add_zz(g.apply_site(i), g.apply_site(j), v);
        }
        for (&i, &v) in &self.field {
            out.add_field(g.apply_site(i), v);
        }
        out
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Built from `S_i·S_j` couplings only, hence commuting with total spin.
    pub fn is_su2_invariant(&self) -> bool {
        self.zz.values().all(|v| *v == 0.0) && self.field.values().all(|v| *v == 0.0)
    }

    /// `+1` if `g` commutes with the operator, `-1` if it anticommutes, `None` otherwise.
    pub fn parity_under(&self, g: &GroupElement) -> Option<i8> {
        let moved = self.relabel(g);
        if moved == *self {
            Some(1)
        } else if moved == self.scaled(-1.0) {
            Some(-1)
        } else {
            None
        }
    }

    /// Diagonal element and off-diagonal hops `(target, amplitude)` of a configuration.
    pub fn act(&self, c: Configuration, hops: &mut Vec<(Configuration, f64)>) -> f64 {
        hops.clear();
        let mut diag = 0.0;
        for (&(i, j), &v) in &self.exchange {
            if c.has_magnon(i) == c.has_magnon(j) {
                diag += 0.25 * v;
            } else {
                diag -= 0.25 * v;
                hops.push((c.flip2(i, j), 0.5 * v));
            }
        }
        for (&(i, j), &v) in &self.zz {
            diag += if c.has_magnon(i) == c.has_magnon(j) { 0.25 * v } else { -0.25 * v };
        }
        for (&i, &h) in &self.field {
            diag += if c.has_magnon(i) { -0.5 * h } else { 0.5 * h };
        }
        diag
    }
}

fn check_chain(l: usize) -> Result<()> {
    if l < 4 || l % 2 != 0 {
        return param(format!("chain length must be even and at least 4, got {l}"));
    }
    Ok(())
}

/// Terms of `H0 = Σ_j (-1)^(j+1) S_j·S_{j+1}`.
pub fn h0_terms(l: usize) -> Result<LocalTerms> {
    check_chain(l)?;
    let mut t = LocalTerms::new(l);
    for j in 0..l {
        t.add_exchange(j, (j + 1) % l, stagger(j));
    }
    Ok(t)
}

/// Terms of the unstaggered antiferromagnetic chain `Σ_j S_j·S_{j+1}`.
pub fn uniform_chain_terms(l: usize) -> Result<LocalTerms> {
    check_chain(l)?;
    let mut t = LocalTerms::new(l);
    for j in 0..l {
        t.add_exchange(j, (j + 1) % l, 1.0);
    }
    Ok(t)
}

/// Terms of `λV` for one perturbation.
pub fn perturbation_terms(spec: &PerturbationSpec, l: usize) -> Result<LocalTerms> {
    check_chain(l)?;
    let lam = spec.lambda;
    let mut t = LocalTerms::new(l);
    for j in 0..l {
        match spec.kind {
            PerturbationKind::ExternalField => t.add_field(j, lam),
            PerturbationKind::StaggeredField => t.add_field(j, lam * stagger(j)),
            PerturbationKind::IsingNn => t.add_zz(j, (j + 1) % l, lam),
            PerturbationKind::HeisenbergNnn => t.add_exchange(j, (j + 2) % l, lam),
            PerturbationKind::HeisenbergRange3Staggered => {
                t.add_exchange(j, (j + 3) % l, lam * stagger(j))
            }
        }
    }
    Ok(t)
}

/// Basis an operator is represented in.
#[derive(Debug, Clone, Copy)]
pub enum BasisRef<'a> {
    Plain(&'a PlainBasis),
    Sector(&'a SectorBasis),
}

impl<'a> From<&'a PlainBasis> for BasisRef<'a> {
    fn from(b: &'a PlainBasis) -> Self {
        BasisRef::Plain(b)
    }
}

impl<'a> From<&'a SectorBasis> for BasisRef<'a> {
    fn from(b: &'a SectorBasis) -> Self {
        BasisRef::Sector(b)
    }
}

impl BasisRef<'_> {
    pub fn l(&self) -> usize {
        match self {
            BasisRef::Plain(b) => b.l,
            BasisRef::Sector(b) => b.label.l,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BasisRef::Plain(b) => b.dim(),
            BasisRef::Sector(b) => b.dim(),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            BasisRef::Plain(b) => match b.n_mag {
                Some(n) => format!("plain:L={}:n_mag={n}", b.l),
                None => format!("plain:L={}:full", b.l),
            },
            BasisRef::Sector(b) => {
                let lab = b.label;
                let sigma = lab.sigma.map_or("none".to_string(), |s| s.to_string());
                format!("sector:L={}:n_mag={}:step={}:k={}:sigma={sigma}", lab.l, lab.n_mag, lab.step, lab.k)
            }
        }
    }
}

/// Coordinate-format Hermitian matrix on a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub dim: usize,
    /// `(row, col, value)`, sorted by column then row, no duplicates.
    pub entries: Vec<(usize, usize, Complex64)>,
    pub basis_tag: String,
}

impl SparseOperator {
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|e| e.2.im.abs() < 1e-14)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let map: BTreeMap<(usize, usize), Complex64> =
            self.entries.iter().map(|&(i, j, v)| ((i, j), v)).collect();
        for (&(i, j), v) in &map {
            let mirror = map.get(&(j, i)).copied().unwrap_or_default();
            if (mirror.conj() - v).norm() > tol {
                return Err(ZedError::Invariant(format!(
                    "operator on {} is not Hermitian at ({i},{j}): {v} vs {mirror}",
                    self.basis_tag
                )));
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// Real part as a dense matrix; only meaningful when [`Self::is_real`].
    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v.re;
        }
        m
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.dim];
        for &(i, j, a) in &self.entries {
            out[i] += a * v[j];
        }
        out
    }

    /// `self + factor·other`; both must live on the same basis.
    pub fn add_scaled(&self, other: &SparseOperator, factor: f64) -> Result<SparseOperator> {
        if self.basis_tag != other.basis_tag || self.dim != other.dim {
            return param(format!("cannot add operators on {} and {}", self.basis_tag, other.basis_tag));
        }
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for &(i, j, v) in &self.entries {
            *map.entry((j, i)).or_default() += v;
        }
        for &(i, j, v) in &other.entries {
            *map.entry((j, i)).or_default() += v * factor;
        }
        Ok(SparseOperator {
            dim: self.dim,
            entries: map.into_iter().filter(|(_, v)| v.norm() > 0.0).map(|((j, i), v)| (i, j, v)).collect(),
            basis_tag: self.basis_tag.clone(),
        })
    }

    /// Write in MatrixMarket coordinate format with 1-based indices.
    pub fn write_matrix_market(&self, mut w: impl Write) -> Result<()> {
        let real = self.is_real();
        let field = if real { "real" } else { "complex" };
        writeln!(w, "%%MatrixMarket matrix coordinate {field} general")?;
        writeln!(w, "% basis {}", self.basis_tag)?;
        writeln!(w, "{} {} {}", self.dim, self.dim, self.entries.len())?;
        for &(i, j, v) in &self.entries {
            if real {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v.re)?;
            } else {
                writeln!(w, "{} {} {:.17e} {:.17e}", i + 1, j + 1, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Represent a sum of local terms on a basis.
pub fn assemble<'a>(terms: &LocalTerms, basis: impl Into<BasisRef<'a>>) -> Result<SparseOperator> {
    let basis = basis.into();
    if basis.l() != terms.l {
        return param(format!("operator for L={} used with basis for L={}", terms.l, basis.l()));
    }
    if let BasisRef::Sector(b) = basis {
        let l = b.label.l;
        let mut generators = vec![GroupElement::new(l, 0, b.label.step)?];
        if b.label.sigma.is_some() {
            generators.push(GroupElement::reflection(l)?);
        }
        for g in &generators {
            if terms.parity_under(g) != Some(1) {
                return Err(ZedError::Unsupported(format!(
                    "operator is not invariant under {g:?}, so it does not act within {}",
                    basis.tag()
                )));
            }
        }
    }
    let columns: Vec<Vec<(usize, usize, Complex64)>> = (0..basis.dim())
        .into_par_iter()
        .map_init(Vec::new, |hops, col| {
            let mut out: Vec<(usize, usize, Complex64)> = Vec::new();
            match basis {
                BasisRef::Plain(b) => {
                    let diag = terms.act(b.configs[col], hops);
                    if diag != 0.0 {
                        out.push((col, col, Complex64::new(diag, 0.0)));
                    }
                    for &(c, amp) in hops.iter() {
                        let row = b.index_of(c).expect("terms conserve the magnon number");
                        out.push((row, col, Complex64::new(amp, 0.0)));
                    }
                }
                BasisRef::Sector(b) => {
                    let (rep, norm) = b.states[col];
                    let diag = terms.act(rep, hops);
                    if diag != 0.0 {
                        out.push((col, col, Complex64::new(diag, 0.0)));
                    }
                    for &(c, amp) in hops.iter() {
                        let (target, chi) = b.representative(c);
                        if let Some(row) = b.index_of(target) {
                            let ratio = (b.states[row].1 / norm).sqrt();
                            out.push((row, col, chi * (amp * ratio)));
                        }
                    }
                }
            }
            out.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(out.len());
            for e in out {
                match merged.last_mut() {
                    Some(last) if last.0 == e.0 => last.2 += e.2,
                    _ => merged.push(e),
                }
            }
            merged.retain(|e| e.2.norm() > 1e-15);
            merged
        })
        .collect();
    let op = SparseOperator { dim: basis.dim(), entries: columns.concat(), basis_tag: basis.tag() };
    op.check_hermitian(HERMITICITY_TOL)?;
    Ok(op)
}

pub fn build_h0<'a>(l: usize, basis: impl Into<BasisRef<'a>>) -> Result<SparseOperator> {
    assemble(&h0_terms(l)?, basis)
}

pub fn build_uniform_chain<'a>(l: usize, basis: impl Into<BasisRef<'a>>) -> Result<SparseOperator> {
    assemble(&uniform_chain_terms(l)?, basis)
}

/// `λV` on a basis.
pub fn build_perturbation<'a>(spec: &PerturbationSpec, l: usize, basis: impl Into<BasisRef<'a>>) -> Result<SparseOperator> {
    assemble(&perturbation_terms(spec, l)?, basis)
}

/// `H0 + λV` on a basis.
pub fn build_perturbed<'a>(spec: &PerturbationSpec, l: usize, basis: impl Into<BasisRef<'a>>) -> Result<SparseOperator> {
    assemble(&h0_terms(l)?.plus(&perturbation_terms(spec, l)?), basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_group::elements;
    use crate::spin_basis::{build_symmetry_basis, build_translation_basis};
    use proptest::prelude::*;

    fn as_map(op: &SparseOperator) -> BTreeMap<(usize, usize), Complex64> {
        op.entries.iter().map(|&(i, j, v)| ((i, j), v)).collect()
    }

    #[test]
    fn golden_l4_single_magnon() {
        let b = PlainBasis::magnon_sector(4, 1).unwrap();
        let h = build_h0(4, &b).unwrap().to_dense_real();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[0.0, -0.5, 0.0, 0.5, -0.5, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, -0.5, 0.5, 0.0, -0.5, 0.0],
        );
        assert_eq!(h, expected);
        let mut eig: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(eig.iter().rev()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_short_or_odd_chains() {
        assert!(h0_terms(2).is_err());
        assert!(h0_terms(7).is_err());
        let b = PlainBasis::magnon_sector(6, 2).unwrap();
        assert!(matches!(build_h0(8, &b), Err(ZedError::Parameter(_))));
    }

    #[test]
    fn swap_form_matches_heisenberg_form() {
        // H0 = ½ Σ s_j SWAP_j - ¼ Σ s_j, and Σ s_j = 0
        for l in [4usize, 6, 8] {
            let b = PlainBasis::full(l).unwrap();
            let h = build_h0(l, &b).unwrap().to_dense_real();
            let mut swap = DMatrix::<f64>::zeros(b.dim(), b.dim());
            for (col, c) in b.configs.iter().enumerate() {
                for j in 0..l {
                    let k = (j + 1) % l;
                    let swapped = if c.has_magnon(j) == c.has_magnon(k) { *c } else { c.flip2(j, k) };
                    swap[(b.index_of(swapped).unwrap(), col)] += 0.5 * stagger(j);
                }
            }
            assert_eq!(h, swap, "L={l}");
        }
    }

    #[test]
    fn uniform_two_magnon_superposition_has_zero_energy() {
        for l in [4usize, 8, 12] {
            let b = PlainBasis::magnon_sector(l, 2).unwrap();
            let h = build_h0(l, &b).unwrap();
            let v = vec![Complex64::new(1.0, 0.0); b.dim()];
            let hv = h.apply(&v);
            let e: Complex64 = v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
            assert!(e.norm() < 1e-12);
            assert!(hv.iter().all(|x| x.norm() < 1e-12));
        }
    }

    #[test]
    fn anticommutes_with_translation_and_commutes_with_reflection() {
        for l in [4usize, 6, 8, 10] {
            let b = PlainBasis::full(l).unwrap();
            let h = as_map(&build_h0(l, &b).unwrap());
            for (g, sign) in [(GroupElement::translation(l).unwrap(), -1.0), (GroupElement::reflection(l).unwrap(), 1.0)] {
                let moved: BTreeMap<_, _> = h
                    .iter()
                    .map(|(&(i, j), &v)| {
                        let pi = b.index_of(g.apply(b.configs[i])).unwrap();
                        let pj = b.index_of(g.apply(b.configs[j])).unwrap();
                        ((pi, pj), v * sign)
                    })
                    .collect();
                assert_eq!(moved, h, "L={l} g={g:?}");
            }
        }
    }

    #[test]
    fn su2_invariance() {
        for l in [4usize, 6, 8] {
            let b = PlainBasis::full(l).unwrap();
            let h = build_h0(l, &b).unwrap().to_dense_real();
            let mut s_plus = DMatrix::<f64>::zeros(b.dim(), b.dim());
            for (col, c) in b.configs.iter().enumerate() {
                for i in c.sites() {
                    let up = Configuration::from_bits(c.bits() ^ (1 << i));
                    s_plus[(b.index_of(up).unwrap(), col)] += 1.0;
                }
            }
            let comm = &h * &s_plus - &s_plus * &h;
            assert!(comm.amax() < 1e-12, "L={l}");
        }
    }

    #[test]
    fn perturbation_examples() {
        let b = PlainBasis::magnon_sector(8, 3).unwrap();
        let ext = build_perturbation(&PerturbationSpec::new(PerturbationKind::ExternalField, 0.7).unwrap(), 8, &b).unwrap();
        assert_eq!(ext.nnz(), b.dim());
        assert!(ext.entries.iter().all(|&(i, j, v)| i == j && (v.re - 0.7).abs() < 1e-12));
        let stag = build_perturbation(&PerturbationSpec::new(PerturbationKind::StaggeredField, 1.0).unwrap(), 8, &b).unwrap();
        assert!(stag.entries.iter().all(|e| e.0 == e.1));

        let neel = PlainBasis { l: 4, n_mag: Some(2), configs: vec![Configuration::from_sites(&[1, 3])] };
        let ising = build_perturbation(&PerturbationSpec::new(PerturbationKind::IsingNn, 2.0).unwrap(), 4, &neel).unwrap();
        assert_eq!(ising.entries, vec![(0, 0, Complex64::new(-2.0, 0.0))]);
        assert!("bogus".parse::<PerturbationKind>().is_err());
        assert_eq!("heisenberg_nnn".parse::<PerturbationKind>().unwrap(), PerturbationKind::HeisenbergNnn);
    }

    #[test]
    fn perturbation_symmetries() {
        let l = 12;
        let tau = GroupElement::translation(l).unwrap();
        let sigma = GroupElement::reflection(l).unwrap();
        let expect = [
            (PerturbationKind::ExternalField, 1, 1),
            (PerturbationKind::StaggeredField, -1, -1),
            (PerturbationKind::IsingNn, 1, 1),
            (PerturbationKind::HeisenbergNnn, 1, 1),
            (PerturbationKind::HeisenbergRange3Staggered, -1, 1),
        ];
        for (kind, t, s) in expect {
            let terms = perturbation_terms(&PerturbationSpec { kind, lambda: 0.5 }, l).unwrap();
            assert_eq!(terms.parity_under(&tau), Some(t), "{kind}");
            assert_eq!(terms.parity_under(&sigma), Some(s), "{kind}");
        }
        let h0 = h0_terms(l).unwrap();
        assert_eq!(h0.parity_under(&tau), Some(-1));
        assert_eq!(h0.parity_under(&sigma), Some(1));
    }

    #[test]
    fn symmetry_conflicts_are_rejected() {
        let b = build_symmetry_basis(8, 2, 0, Some(1)).unwrap();
        let spec = PerturbationSpec { kind: PerturbationKind::StaggeredField, lambda: 1.0 };
        assert!(matches!(build_perturbation(&spec, 8, &b), Err(ZedError::Unsupported(_))));
        let t = build_translation_basis(8, 2, 0, None).unwrap();
        assert!(matches!(build_h0(8, &t), Err(ZedError::Unsupported(_))));
        assert!(build_uniform_chain(8, &t).is_ok());
    }

    #[test]
    fn sector_blocks_reproduce_plain_spectrum() {
        let l = 10;
        let n = 4;
        let plain = PlainBasis::magnon_sector(l, n).unwrap();
        let mut full: Vec<f64> = build_h0(l, &plain).unwrap().to_dense_real().symmetric_eigenvalues().iter().copied().collect();
        let mut blocks = Vec::new();
        for lab in crate::spin_basis::tau2_sector_labels(l, n) {
            let b = crate::spin_basis::build_sector(lab).unwrap();
            let h = build_h0(l, &b).unwrap();
            let dense = h.to_dense();
            let eig = nalgebra::SymmetricEigen::new(dense).eigenvalues;
            blocks.extend(eig.iter().copied());
        }
        full.sort_by(f64::total_cmp);
        blocks.sort_by(f64::total_cmp);
        assert_eq!(full.len(), blocks.len());
        for (a, b) in full.iter().zip(&blocks) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn matrix_market_export() {
        let b = PlainBasis::magnon_sector(4, 1).unwrap();
        let h = build_h0(4, &b).unwrap();
        let mut buf = Vec::new();
        h.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines[2], "4 4 8");
        assert_eq!(lines.len(), 3 + 8);
    }

    #[test]
    fn group_elements_map_sectors_consistently() {
        // every element of the dihedral group either commutes or anticommutes with H0
        let l = 8;
        let h0 = h0_terms(l).unwrap();
        for g in elements(l).unwrap() {
            let expected = if g.mu() % 2 == 0 { 1 } else { -1 };
            assert_eq!(h0.parity_under(&g), Some(expected), "{g:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn spectrum_is_symmetric(l in prop::sample::select(vec![6usize, 8, 10]), n in 1usize..4, k in 0usize..5) {
            let k = k % (l / 2);
            let b = build_symmetry_basis(l, n, k, None).unwrap();
            prop_assume!(b.dim() > 0);
            let h = build_h0(l, &b).unwrap();
            let mut e: Vec<f64> = nalgebra::SymmetricEigen::new(h.to_dense()).eigenvalues.iter().copied().collect();
            e.sort_by(f64::total_cmp);
            for (a, b) in e.iter().zip(e.iter().rev()) {
                prop_assert!((a + b).abs() < 1e-10);
            }
        }

        #[test]
        fn perturbations_conserve_magnon_number(kind in prop::sample::select(PerturbationKind::ALL.to_vec()), lam in -2.0f64..2.0) {
            let l = 6;
            let b = PlainBasis::full(l).unwrap();
            let op = build_perturbation(&PerturbationSpec { kind, lambda: lam }, l, &b).unwrap();
            for &(i, j, _) in &op.entries {
                prop_assert_eq!(b.configs[i].n_mag(), b.configs[j].n_mag());
            }
        }
    }
}
