//! Sector-by-sector numerics over the whole Hilbert space: nullspace tables,
//! irrep-resolved zero counts and the level-statistics pipeline.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{diagonalize_with, nullspace_count, ratio_statistics, spectrum_subtract, strip_degeneracies};
use super::{NullspaceReport, RatioStats, TolerancePolicy, DEFAULT_DENSE_CEILING};
use crate::error::{param, Result, ZedError};
use crate::hamiltonian::{assemble, h0_terms, uniform_chain_terms, LocalTerms};
use crate::lattice_group::GroupElement;
use crate::spin_basis::{build_sector, build_translation_basis, SectorLabel};
use crate::su2_char_ring::{multiplicity_table, SpatialIrrep};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorNullspace {
    pub label: SectorLabel,
    pub dim: usize,
    pub report: NullspaceReport,
}

/// `τ²` sector labels for `terms`, resolving `σ` only when it commutes with them.
fn labels_for(terms: &LocalTerms, n_mag: usize) -> Result<Vec<SectorLabel>> {
    let l = terms.l();
    let resolve_sigma = terms.parity_under(&GroupElement::reflection(l)?) == Some(1);
    let n = l / 2;
    let mut out = Vec::new();
    for k in 0..n {
        if resolve_sigma && 2 * k % n == 0 {
            for s in [1, -1] {
                out.push(SectorLabel { l, n_mag, step: 2, k, sigma: Some(s) });
            }
        } else {
            out.push(SectorLabel { l, n_mag, step: 2, k, sigma: None });
        }
    }
    Ok(out)
}

/// Label whose spectrum equals that of `label` by complex conjugation, if it is a different one.
fn conjugate_label(label: &SectorLabel) -> SectorLabel {
    let n = label.period();
    SectorLabel { k: (n - label.k) % n, ..*label }
}

/// Nullspace of every `τ²` sector in one magnon block.
///
/// All operators here are real, so sectors `k` and `-k` share their spectrum
/// and only one of each pair is diagonalized.
pub fn sector_nullspaces(
    terms: &LocalTerms,
    n_mag: usize,
    policy: &TolerancePolicy,
    ceiling: usize,
) -> Result<Vec<SectorNullspace>> {
    let labels = labels_for(terms, n_mag)?;
    let unique: Vec<SectorLabel> = labels.iter().copied().filter(|lab| lab.k <= conjugate_label(lab).k).collect();
    let computed: Vec<SectorNullspace> = unique
        .par_iter()
        .map(|&label| {
            let basis = build_sector(label)?;
            let op = assemble(terms, &basis)?;
            let spec = diagonalize_with(&op, ceiling, false)?;
            Ok(SectorNullspace { label, dim: basis.dim(), report: nullspace_count(&spec.eigenvalues, policy) })
        })
        .collect::<Result<_>>()?;
    let by_label: HashMap<SectorLabel, &SectorNullspace> = computed.iter().map(|s| (s.label, s)).collect();
    Ok(labels
        .iter()
        .map(|lab| {
            let src = by_label.get(lab).or_else(|| by_label.get(&conjugate_label(lab))).expect("computed");
            SectorNullspace { label: *lab, ..(*src).clone() }
        })
        .collect())
}

/// Nullspace of a whole magnon block, summed over sectors.
pub fn magnon_nullspace(terms: &LocalTerms, n_mag: usize, policy: &TolerancePolicy, ceiling: usize) -> Result<NullspaceReport> {
    Ok(sector_nullspaces(terms, n_mag, policy, ceiling)?
        .iter()
        .fold(NullspaceReport::empty(), |acc, s| acc.merge(&s.report)))
}

/// Numerical zero-energy degeneracy resolved by total spin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NumericZedTable {
    pub l: usize,
    /// Indexed by `S`: zero modes at fixed `S^z = S`.
    pub per_s: Vec<u64>,
    pub total: u64,
    /// Nullspace dimension of each magnon block `0..=L/2`.
    pub per_n_mag: Vec<u64>,
    pub min_gap: Option<f64>,
    pub tolerance_sensitive: bool,
}

pub fn spin_resolve_nullspace(l: usize, policy: &TolerancePolicy) -> Result<NumericZedTable> {
    spin_resolve_nullspace_with(&h0_terms(l)?, policy, DEFAULT_DENSE_CEILING)
}

/// `Z(S) = N0(L/2 - S) - N0(L/2 - S - 1)` for an SU(2)-invariant operator.
pub fn spin_resolve_nullspace_with(terms: &LocalTerms, policy: &TolerancePolicy, ceiling: usize) -> Result<NumericZedTable> {
    let l = terms.l();
    if !terms.is_su2_invariant() {
        return param("spin resolution by differencing needs an SU(2)-invariant operator");
    }
    let reports: Vec<NullspaceReport> =
        (0..=l / 2).map(|n| magnon_nullspace(terms, n, policy, ceiling)).collect::<Result<_>>()?;
    let merged = reports.iter().fold(NullspaceReport::empty(), |a, r| a.merge(r));
    let per_n_mag: Vec<u64> = reports.iter().map(|r| r.count as u64).collect();
    let mut per_s = Vec::with_capacity(l / 2 + 1);
    for s in 0..=l / 2 {
        let n = l / 2 - s;
        let below = if n == 0 { 0 } else { per_n_mag[n - 1] };
        if per_n_mag[n] < below {
            return Err(ZedError::ToleranceSensitive(format!(
                "L={l}: nullspace shrinks from {below} to {} between n_mag={} and {n}",
                per_n_mag[n],
                n - 1
            )));
        }
        per_s.push(per_n_mag[n] - below);
    }
    let total = per_s.iter().enumerate().map(|(s, z)| (2 * s as u64 + 1) * z).sum();
    Ok(NumericZedTable {
        l,
        per_s,
        total,
        per_n_mag,
        min_gap: merged.gap,
        tolerance_sensitive: merged.tolerance_sensitive,
    })
}

/// Zero modes of one spatial irrep at one total spin, numerics against character theory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrrepZeroCount {
    pub kappa: usize,
    pub s: Option<i8>,
    pub two_s: usize,
    /// States at fixed `S^z`, summed over the irrep's components.
    pub numeric: u64,
    pub theory: u64,
}

impl IrrepZeroCount {
    pub fn extra(&self) -> i64 {
        self.numeric as i64 - self.theory as i64
    }
}

/// Decompose the numerical nullspace of `H0` over the irreps of the dihedral group.
///
/// Inside a `τ²` sector `H0` only couples `τ`-momenta `κ` and `κ + L/2`, so with
/// `a`, `b` their dimensions and `N` the sector nullspace, momentum `κ` holds
/// `(N + a - b)/2` zero modes. The same holds within each `σ` sector at
/// `κ ∈ {0, L/2}`.
pub fn irrep_resolved_zeros(l: usize, policy: &TolerancePolicy, ceiling: usize) -> Result<Vec<IrrepZeroCount>> {
    let terms = h0_terms(l)?;
    let table = multiplicity_table(l)?;
    let half = l / 2;
    // zero modes per (kappa, s) and magnon number
    let mut per_irrep: BTreeMap<(usize, Option<i8>), Vec<u64>> = BTreeMap::new();
    for n in 0..=half {
        let sectors = sector_nullspaces(&terms, n, policy, ceiling)?;
        let mut null_k2: HashMap<(usize, Option<i8>), usize> = HashMap::new();
        for s in &sectors {
            *null_k2.entry((s.label.k, s.label.sigma)).or_default() += s.report.count;
            *null_k2.entry((s.label.k, None)).or_default() += if s.label.sigma.is_some() { s.report.count } else { 0 };
        }
        let tau_dim = |kappa: usize, s: Option<i8>| -> Result<usize> {
            Ok(build_translation_basis(l, n, kappa % l, s)?.dim())
        };
        for irrep in crate::su2_char_ring::spatial_irreps(l) {
            let k2 = irrep.kappa % half;
            let sector_null = if irrep.s.is_some() {
                null_k2[&(k2, irrep.s)]
            } else {
                null_k2[&(k2, None)]
            };
            let a = tau_dim(irrep.kappa, irrep.s)?;
            let b = tau_dim(irrep.kappa + half, irrep.s)?;
            let twice = sector_null as i64 + a as i64 - b as i64;
            if twice < 0 || twice % 2 != 0 {
                return Err(ZedError::Invariant(format!(
                    "L={l} n_mag={n}: inconsistent nullspace {sector_null} for irrep {irrep:?}"
                )));
            }
            let count = (twice / 2) as u64 * irrep.dim() as u64;
            per_irrep.entry((irrep.kappa, irrep.s)).or_default().push(count);
        }
    }
    let mut out = Vec::new();
    for ((kappa, s), counts) in per_irrep {
        let irrep = SpatialIrrep::new(l, kappa, s)?;
        for spin in 0..=half {
            let n = half - spin;
            let below = if n == 0 { 0 } else { counts[n - 1] };
            if counts[n] < below {
                return Err(ZedError::ToleranceSensitive(format!(
                    "L={l}: irrep {irrep:?} nullspace shrinks with decreasing n_mag"
                )));
            }
            out.push(IrrepZeroCount {
                kappa,
                s,
                two_s: 2 * spin,
                numeric: counts[n] - below,
                theory: table.forced_zeros(irrep, 2 * spin),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelStatsReport {
    pub l: usize,
    pub staggered: bool,
    pub sectors: Vec<SectorLabel>,
    pub levels: usize,
    pub degeneracies_removed: usize,
    pub stats: RatioStats,
}

/// `S = 0` level statistics at `S^z = 0`, pooled over momenta `0 ≤ k2 ≤ L/4`.
///
/// The anti-symmetry `τ` preserves `τ²` momenta, so the staggered spectrum is
/// symmetric under `E ↦ -E` within each momentum (at `k2 = N/2` it swaps the two
/// reflection sectors, whose spectra are mirror images). Only levels above zero
/// enter, which drops each mirrored copy exactly once; zero modes go with them.
/// The unstaggered control keeps every level.
pub fn level_stats_pipeline(l: usize, staggered: bool, n_bins: usize, ceiling: usize) -> Result<LevelStatsReport> {
    if l % 4 != 0 {
        return Err(ZedError::Unsupported(format!("level statistics need L divisible by 4, got {l}")));
    }
    let terms = if staggered { h0_terms(l)? } else { uniform_chain_terms(l)? };
    let labels: Vec<SectorLabel> = labels_for(&terms, l / 2)?
        .into_iter()
        .filter(|lab| lab.k <= lab.period() / 2)
        .collect();
    let sequences: Vec<(Vec<f64>, usize)> = labels
        .par_iter()
        .map(|&label| {
            let spectrum = |n_mag| -> Result<Vec<f64>> {
                let basis = build_sector(SectorLabel { n_mag, ..label })?;
                Ok(diagonalize_with(&assemble(&terms, &basis)?, ceiling, false)?.eigenvalues)
            };
            let mut singlets = spectrum_subtract(&spectrum(l / 2)?, &spectrum(l / 2 - 1)?, 1e-8)?;
            if staggered {
                singlets.retain(|&e| e > 1e-8);
            }
            Ok(strip_degeneracies(&singlets, 1e-10))
        })
        .collect::<Result<_>>()?;
    let degeneracies_removed = sequences.iter().map(|s| s.1).sum();
    let seqs: Vec<Vec<f64>> = sequences.into_iter().map(|s| s.0).collect();
    let levels = seqs.iter().map(Vec::len).sum();
    Ok(LevelStatsReport {
        l,
        staggered,
        sectors: labels,
        levels,
        degeneracies_removed,
        stats: ratio_statistics(&seqs, n_bins)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{perturbation_terms, PerturbationKind, PerturbationSpec};

    #[test]
    fn small_chain_tables() {
        let p = TolerancePolicy::default();
        let t = spin_resolve_nullspace(10, &p).unwrap();
        assert_eq!(t.per_s, vec![10, 10, 7, 7, 1, 1]);
        assert_eq!(t.total, 144);
        let t8 = spin_resolve_nullspace(8, &p).unwrap();
        assert_eq!(t8.per_s[1], 6);
        let t4 = spin_resolve_nullspace(4, &p).unwrap();
        assert_eq!(t4.total, 8);
        assert!(!t.tolerance_sensitive);
    }

    #[test]
    fn sector_counts_match_plain_block() {
        let p = TolerancePolicy::default();
        let terms = h0_terms(12).unwrap();
        let secs = sector_nullspaces(&terms, 4, &p, DEFAULT_DENSE_CEILING).unwrap();
        assert_eq!(secs.iter().map(|s| s.dim).sum::<usize>(), 495);
        let plain = crate::spin_basis::PlainBasis::magnon_sector(12, 4).unwrap();
        let direct = super::super::diagonalize(&assemble(&terms, &plain).unwrap()).unwrap();
        assert_eq!(
            secs.iter().map(|s| s.report.count).sum::<usize>(),
            nullspace_count(&direct.eigenvalues, &p).count
        );
    }

    #[test]
    fn l8_extras_sit_in_the_odd_two_dimensional_irreps() {
        let zeros = irrep_resolved_zeros(8, &TolerancePolicy::default(), DEFAULT_DENSE_CEILING).unwrap();
        let extras: Vec<_> = zeros.iter().filter(|z| z.extra() != 0).map(|z| (z.kappa, z.s, z.two_s, z.extra())).collect();
        assert_eq!(extras, vec![(1, None, 2, 2), (3, None, 2, 2)]);
        let total: u64 = zeros.iter().map(|z| (z.two_s as u64 + 1) * z.numeric).sum();
        assert_eq!(total, 44);
    }

    #[test]
    fn non_su2_terms_are_rejected() {
        let spec = PerturbationSpec { kind: PerturbationKind::StaggeredField, lambda: 0.2 };
        let terms = h0_terms(8).unwrap().plus(&perturbation_terms(&spec, 8).unwrap());
        assert!(spin_resolve_nullspace_with(&terms, &TolerancePolicy::default(), 100).is_err());
        // σ-odd terms are handled without reflection resolution
        let n = magnon_nullspace(&terms, 2, &TolerancePolicy::default(), 100).unwrap();
        assert!(n.count <= 28);
    }
}
