//! Dense eigensolution, nullspace counting and spectrum differencing.

mod ratio;
mod sectors;

pub use ratio::{goe_surmise, ratio_statistics, strip_degeneracies, RatioStats};
pub use sectors::{
    irrep_resolved_zeros, level_stats_pipeline, magnon_nullspace, sector_nullspaces, spin_resolve_nullspace,
    spin_resolve_nullspace_with, IrrepZeroCount, LevelStatsReport, NumericZedTable, SectorNullspace,
};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZedError};
use crate::hamiltonian::SparseOperator;

/// Largest matrix handed to the dense eigensolver by default.
pub const DEFAULT_DENSE_CEILING: usize = 6000;

/// Zero-eigenvalue threshold `max(abs_floor, rel · max|E|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub abs_floor: f64,
    pub rel: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy { abs_floor: 1e-10, rel: 1e-12 }
    }
}

impl TolerancePolicy {
    pub fn threshold(&self, max_abs: f64) -> f64 {
        self.abs_floor.max(self.rel * max_abs)
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumRecord {
    pub label: String,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns ordered like `eigenvalues`.
    pub eigenvectors: Option<DMatrix<Complex64>>,
}

/// Full spectrum of `op` under the default dense ceiling.
pub fn diagonalize(op: &SparseOperator) -> Result<SpectrumRecord> {
    diagonalize_with(op, DEFAULT_DENSE_CEILING, false)
}

pub fn diagonalize_with(op: &SparseOperator, ceiling: usize, vectors: bool) -> Result<SpectrumRecord> {
    if op.dim > ceiling {
        return Err(ZedError::Capacity(format!(
            "block {} has dimension {} above the dense ceiling {ceiling}; use a smaller L",
            op.basis_tag, op.dim
        )));
    }
    let label = op.basis_tag.clone();
    if op.dim == 0 {
        return Ok(SpectrumRecord { label, eigenvalues: Vec::new(), eigenvectors: vectors.then(|| DMatrix::zeros(0, 0)) });
    }
    let (values, vecs): (Vec<f64>, Option<DMatrix<Complex64>>) = match (op.is_real(), vectors) {
        (true, false) => (op.to_dense_real().symmetric_eigenvalues().iter().copied().collect(), None),
        (false, false) => (op.to_dense().symmetric_eigenvalues().iter().copied().collect(), None),
        (true, true) => {
            let e = SymmetricEigen::new(op.to_dense_real());
            (e.eigenvalues.iter().copied().collect(), Some(e.eigenvectors.map(|x| Complex64::new(x, 0.0))))
        }
        (false, true) => {
            let e = SymmetricEigen::new(op.to_dense());
            (e.eigenvalues.iter().copied().collect(), Some(e.eigenvectors))
        }
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = vecs.map(|v| DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, order[c])]));
    Ok(SpectrumRecord { label, eigenvalues, eigenvectors })
}

/// Outcome of counting near-zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullspaceReport {
    pub count: usize,
    pub tol: f64,
    /// Smallest `|E|` above the threshold.
    pub gap: Option<f64>,
    /// Some eigenvalue lies in `[tol, 10·tol]`.
    pub tolerance_sensitive: bool,
}

impl NullspaceReport {
    pub fn empty() -> Self {
        NullspaceReport { count: 0, tol: 0.0, gap: None, tolerance_sensitive: false }
    }

    /// Combine reports of disjoint blocks.
    pub fn merge(&self, other: &NullspaceReport) -> NullspaceReport {
        let gap = match (self.gap, other.gap) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        NullspaceReport {
            count: self.count + other.count,
            tol: self.tol.max(other.tol),
            gap,
            tolerance_sensitive: self.tolerance_sensitive || other.tolerance_sensitive,
        }
    }

    pub fn times(&self, k: usize) -> NullspaceReport {
        NullspaceReport { count: self.count * k, ..*self }
    }
}

pub fn nullspace_count(eigenvalues: &[f64], policy: &TolerancePolicy) -> NullspaceReport {
    let max_abs = eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let tol = policy.threshold(max_abs);
    let mut count = 0;
    let mut gap: Option<f64> = None;
    let mut sensitive = false;
    for e in eigenvalues.iter().map(|e| e.abs()) {
        if e < tol {
            count += 1;
        } else {
            gap = Some(gap.map_or(e, |g| g.min(e)));
            sensitive |= e <= 10.0 * tol;
        }
    }
    NullspaceReport { count, tol, gap, tolerance_sensitive: sensitive }
}

/// Multiset difference `a \ b`, matching each element of `b` to an element of `a` within `tol`.
pub fn spectrum_subtract(a: &[f64], b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(a.len().saturating_sub(b.len()));
    let mut i = 0;
    for &target in &b {
        while i < a.len() && a[i] < target - tol {
            out.push(a[i]);
            i += 1;
        }
        if i < a.len() && (a[i] - target).abs() <= tol {
            i += 1;
        } else {
            return Err(ZedError::Containment(format!(
                "eigenvalue {target} has no partner within {tol}"
            )));
        }
    }
    out.extend_from_slice(&a[i..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_h0;
    use crate::spin_basis::PlainBasis;

    fn zero_op(dim: usize) -> SparseOperator {
        SparseOperator { dim, entries: Vec::new(), basis_tag: "test".into() }
    }

    #[test]
    fn trivial_spectra() {
        assert_eq!(diagonalize(&zero_op(1)).unwrap().eigenvalues, vec![0.0]);
        let r = nullspace_count(&diagonalize(&zero_op(5)).unwrap().eigenvalues, &TolerancePolicy::default());
        assert_eq!(r.count, 5);
        assert_eq!(r.gap, None);
        assert!(diagonalize_with(&zero_op(10), 9, false).is_err());
        assert!(matches!(diagonalize_with(&zero_op(10), 9, false), Err(ZedError::Capacity(_))));
    }

    #[test]
    fn full_chain_nullspaces() {
        for (l, total) in [(4usize, 8usize), (10, 144)] {
            let b = PlainBasis::full(l).unwrap();
            let spec = diagonalize(&build_h0(l, &b).unwrap()).unwrap();
            let e = &spec.eigenvalues;
            for (a, z) in e.iter().zip(e.iter().rev()) {
                assert!((a + z).abs() < 1e-9);
            }
            let r = nullspace_count(e, &TolerancePolicy::default());
            assert_eq!(r.count, total, "L={l}");
            assert!(!r.tolerance_sensitive);
            assert!(r.gap.unwrap() > 1e-3);
        }
    }

    #[test]
    fn eigenvectors_diagonalize_the_operator() {
        let b = crate::spin_basis::build_symmetry_basis(8, 3, 1, None).unwrap();
        let op = build_h0(8, &b).unwrap();
        assert!(!op.is_real());
        let spec = diagonalize_with(&op, 100, true).unwrap();
        let v = spec.eigenvectors.unwrap();
        let h = op.to_dense();
        for (c, e) in spec.eigenvalues.iter().enumerate() {
            let col = v.column(c);
            let resid = (&h * col - col * Complex64::new(*e, 0.0)).norm();
            assert!(resid < 1e-10);
        }
    }

    #[test]
    fn sensitivity_flag() {
        let p = TolerancePolicy::default();
        let r = nullspace_count(&[0.0, 5e-10, 1.0], &p);
        assert_eq!(r.count, 1);
        assert!(r.tolerance_sensitive);
        assert_eq!(r.gap, Some(5e-10));
        let r = nullspace_count(&[-1e-11, 2e-9, 1.0], &p);
        assert_eq!(r.count, 1);
        assert!(!r.tolerance_sensitive);
    }

    #[test]
    fn subtraction_examples() {
        assert_eq!(spectrum_subtract(&[0.0, 1.0, 2.0], &[1.0], 1e-8).unwrap(), vec![0.0, 2.0]);
        assert!(spectrum_subtract(&[0.5, 1.0], &[1.0, 0.5], 1e-8).unwrap().is_empty());
        assert!(matches!(spectrum_subtract(&[0.0], &[0.3], 1e-8), Err(ZedError::Containment(_))));
        assert_eq!(spectrum_subtract(&[1.0, 1.0, 1.0], &[1.0 + 1e-10], 1e-8).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn s0_block_by_differencing() {
        let l = 12;
        let a = diagonalize(&build_h0(l, &PlainBasis::magnon_sector(l, 6).unwrap()).unwrap()).unwrap();
        let b = diagonalize(&build_h0(l, &PlainBasis::magnon_sector(l, 5).unwrap()).unwrap()).unwrap();
        let diff = spectrum_subtract(&a.eigenvalues, &b.eigenvalues, 1e-8).unwrap();
        assert_eq!(diff.len(), 924 - 792);
    }
}
