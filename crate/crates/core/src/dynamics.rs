//! Loschmidt echo `M(t) = |⟨ψ| e^{i(H0+λV)t} e^{-i(H0-λV)t} |ψ⟩|²` of two-magnon
//! states, evaluated through exact eigendecompositions of both generators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result, ZedError};
use crate::hamiltonian::{build_perturbed, PerturbationKind, PerturbationSpec};
use crate::spectral::DEFAULT_DENSE_CEILING;
use crate::spin_basis::PlainBasis;
use crate::zero_states::{build_fixed_separation_state, Chi, StateLabel, SymmetrizedState};

/// Grid `0, dt, 2dt, …` up to `t_max`, in units of `1/J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub dt: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { t_max: 50.0, dt: 0.01 }
    }
}

impl TimeGrid {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
            return param(format!("time grid needs dt > 0 and t_max >= 0, got dt={dt}, t_max={t_max}"));
        }
        Ok(TimeGrid { t_max, dt })
    }

    pub fn times(&self) -> Vec<f64> {
        let steps = (self.t_max / self.dt + 1e-9).floor() as usize;
        (0..=steps).map(|i| i as f64 * self.dt).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EchoSeries {
    pub l: usize,
    pub state: StateLabel,
    pub perturbation: PerturbationSpec,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest `| ‖U(t)ψ‖ - 1 |` seen along the grid.
    pub unitarity_drift: f64,
}

impl EchoSeries {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Minimum over `t ≤ t_end`.
    pub fn min_until(&self, t_end: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t <= t_end + 1e-12)
            .map(|(_, m)| *m)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn grid_step(&self) -> Option<f64> {
        (self.times.len() > 1).then(|| self.times[1] - self.times[0])
    }
}

struct Decomposition {
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
}

fn decompose(spec: &PerturbationSpec, l: usize, basis: &PlainBasis) -> Result<Decomposition> {
    let op = build_perturbed(spec, l, basis)?;
    let e = SymmetricEigen::new(op.to_dense_real());
    Ok(Decomposition { energies: e.eigenvalues, vectors: e.eigenvectors })
}

fn two_magnon_block(l: usize) -> Result<PlainBasis> {
    let basis = PlainBasis::magnon_sector(l, 2)?;
    if basis.dim() > DEFAULT_DENSE_CEILING {
        return Err(ZedError::Capacity(format!(
            "two-magnon block of L={l} has dimension {} above the dense ceiling",
            basis.dim()
        )));
    }
    Ok(basis)
}

fn real_vector(state: &SymmetrizedState, basis: &PlainBasis) -> Result<DVector<f64>> {
    let v = state.to_dense(basis)?;
    Ok(DVector::from_iterator(v.len(), v.iter().map(|c| c.re)))
}

/// Echo of `state` along `grid`.
pub fn loschmidt_echo(state: &SymmetrizedState, spec: &PerturbationSpec, grid: &TimeGrid) -> Result<EchoSeries> {
    let l = state.l;
    let basis = two_magnon_block(l)?;
    let psi = real_vector(state, &basis)?.normalize();
    let plus = decompose(spec, l, &basis)?;
    let minus = decompose(&PerturbationSpec { lambda: -spec.lambda, ..*spec }, l, &basis)?;
    let a = plus.vectors.transpose() * &psi;
    let b = minus.vectors.transpose() * &psi;
    let overlap = plus.vectors.transpose() * &minus.vectors;
    let overlap_c = overlap.map(|x| Complex64::new(x, 0.0));
    let norm2 = psi.norm_squared();
    let times = grid.times();
    let mut values = Vec::with_capacity(times.len());
    let mut drift = 0.0f64;
    for &t in &times {
        if t == 0.0 {
            // both propagators are the identity
            values.push(1.0);
            continue;
        }
        let w = DVector::from_iterator(b.len(), b.iter().zip(minus.energies.iter()).map(|(bn, en)| {
            Complex64::from_polar(*bn, -en * t)
        }));
        let v = &overlap_c * w;
        drift = drift.max((v.norm_squared() - norm2).abs());
        let amp: Complex64 = a.iter().zip(plus.energies.iter()).zip(v.iter()).map(|((am, em), vm)| {
            Complex64::from_polar(*am, em * t) * vm
        }).sum();
        values.push(amp.norm_sqr());
    }
    Ok(EchoSeries { l, state: state.label, perturbation: *spec, times, values, unitarity_drift: drift })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityEntry {
    pub parity: Parity,
    pub x: usize,
    pub kind: PerturbationKind,
    pub lambda: f64,
    pub min_echo: f64,
    pub stable: bool,
    /// `‖(H0 ± λV)ψ - ⟨H0 ± λV⟩ψ‖` for the forward and backward generators.
    pub residual_plus: f64,
    pub residual_minus: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityTable {
    pub l: usize,
    pub lambdas: Vec<f64>,
    pub grid: TimeGrid,
    pub threshold: f64,
    pub entries: Vec<StabilityEntry>,
}

impl StabilityTable {
    /// Stable at every coupling.
    pub fn is_stable(&self, parity: Parity, kind: PerturbationKind) -> bool {
        self.entries.iter().filter(|e| e.parity == parity && e.kind == kind).all(|e| e.stable)
    }

    pub fn unstable_kinds(&self, parity: Parity) -> Vec<PerturbationKind> {
        PerturbationKind::ALL.into_iter().filter(|k| !self.is_stable(parity, *k)).collect()
    }

    /// Same table judged against another threshold.
    pub fn with_threshold(&self, threshold: f64) -> StabilityTable {
        let mut t = self.clone();
        t.threshold = threshold;
        for e in &mut t.entries {
            e.stable = e.min_echo >= threshold;
        }
        t
    }
}

fn eigen_residual(state: &DVector<f64>, spec: &PerturbationSpec, l: usize, basis: &PlainBasis) -> Result<f64> {
    let h = build_perturbed(spec, l, basis)?.to_dense_real();
    let hpsi = &h * state;
    let e = state.dot(&hpsi);
    Ok((hpsi - state * e).norm())
}

/// Classify the even (`x = 2`) and odd (`x = 3`) fixed-separation states
/// against every perturbation kind at each coupling.
pub fn stability_classification(l: usize, lambdas: &[f64], grid: &TimeGrid, threshold: f64) -> Result<StabilityTable> {
    if lambdas.is_empty() {
        return param("need at least one coupling");
    }
    let basis = two_magnon_block(l)?;
    let states = [(Parity::Even, 2usize), (Parity::Odd, 3usize)];
    let jobs: Vec<(Parity, usize, PerturbationKind, f64)> = states
        .iter()
        .flat_map(|&(p, x)| {
            PerturbationKind::ALL
                .into_iter()
                .flat_map(move |k| lambdas.iter().map(move |&lam| (p, x, k, lam)))
        })
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(parity, x, kind, lambda)| {
            let state = build_fixed_separation_state(l, x, Chi::for_separation(x))?;
            let spec = PerturbationSpec::new(kind, lambda)?;
            let series = loschmidt_echo(&state, &spec, grid)?;
            let psi = real_vector(&state, &basis)?;
            let min_echo = series.min();
            Ok(StabilityEntry {
                parity,
                x,
                kind,
                lambda,
                min_echo,
                stable: min_echo >= threshold,
                residual_plus: eigen_residual(&psi, &spec, l, &basis)?,
                residual_minus: eigen_residual(&psi, &PerturbationSpec { lambda: -lambda, ..spec }, l, &basis)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityTable { l, lambdas: lambdas.to_vec(), grid: *grid, threshold, entries })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RevivalScan {
    /// `(t_peak, M_peak)`.
    pub peaks: Vec<(f64, f64)>,
    /// The grid step exceeds 0.02 and may miss or misplace peaks.
    pub coarse_grid: bool,
}

/// Local maxima of `M(t)` rising at least `prominence` above the running minimum.
pub fn revival_scan(series: &EchoSeries, prominence: f64) -> RevivalScan {
    let v = &series.values;
    let mut peaks = Vec::new();
    let mut running_min = f64::INFINITY;
    for i in 0..v.len() {
        running_min = running_min.min(v[i]);
        if i == 0 || i + 1 == v.len() {
            continue;
        }
        if v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] - running_min >= prominence {
            peaks.push((series.times[i], v[i]));
        }
    }
    RevivalScan { peaks, coarse_grid: series.grid_step().is_some_and(|dt| dt > 0.02 + 1e-12) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(l: usize, x: usize) -> SymmetrizedState {
        build_fixed_separation_state(l, x, Chi::for_separation(x)).unwrap()
    }

    #[test]
    fn zero_coupling_is_flat() {
        let grid = TimeGrid::new(5.0, 0.05).unwrap();
        for kind in PerturbationKind::ALL {
            let s = loschmidt_echo(&state(12, 3), &PerturbationSpec { kind, lambda: 0.0 }, &grid).unwrap();
            assert_eq!(s.values[0], 1.0);
            assert!(s.values.iter().all(|m| (m - 1.0).abs() < 1e-10));
        }
    }

    #[test]
    fn echo_bounds_and_unitarity() {
        let grid = TimeGrid::new(10.0, 0.1).unwrap();
        let spec = PerturbationSpec { kind: PerturbationKind::HeisenbergNnn, lambda: 1.0 };
        let s = loschmidt_echo(&state(16, 3), &spec, &grid).unwrap();
        assert_eq!(s.times.len(), 101);
        assert!(s.values.iter().all(|&m| (0.0..=1.0 + 1e-9).contains(&m)));
        assert!(s.unitarity_drift < 1e-10);
        assert!(s.min() < 0.9);
    }

    #[test]
    fn global_phase_is_irrelevant() {
        let grid = TimeGrid::new(3.0, 0.1).unwrap();
        let spec = PerturbationSpec { kind: PerturbationKind::StaggeredField, lambda: 0.5 };
        let a = state(12, 2);
        let mut b = a.clone();
        b.amplitudes.values_mut().for_each(|v| *v = -*v);
        let ea = loschmidt_echo(&a, &spec, &grid).unwrap();
        let eb = loschmidt_echo(&b, &spec, &grid).unwrap();
        for (x, y) in ea.values.iter().zip(&eb.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn revival_scan_examples() {
        let flat = EchoSeries {
            l: 8,
            state: StateLabel::Uniform,
            perturbation: PerturbationSpec { kind: PerturbationKind::IsingNn, lambda: 0.1 },
            times: (0..100).map(|i| i as f64 * 0.01).collect(),
            values: vec![1.0; 100],
            unitarity_drift: 0.0,
        };
        let scan = revival_scan(&flat, 0.05);
        assert!(scan.peaks.is_empty());
        assert!(!scan.coarse_grid);
        let mut bumpy = flat.clone();
        bumpy.times = (0..5).map(|i| i as f64 * 0.5).collect();
        bumpy.values = vec![1.0, 0.2, 0.7, 0.3, 0.35];
        let scan = revival_scan(&bumpy, 0.1);
        assert_eq!(scan.peaks, vec![(1.0, 0.7)]);
        assert!(scan.coarse_grid);
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(1.0, 0.0).is_err());
        assert!(TimeGrid::new(-1.0, 0.1).is_err());
        assert_eq!(TimeGrid::new(1.0, 0.25).unwrap().times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(TimeGrid::default().times().len(), 5001);
    }
}
