//! Fixed-separation two-magnon states and their entanglement.
//!
//! A two-magnon state is stored as a sparse map from magnon pairs `(i, j)`,
//! `i < j`, to real amplitudes, so chains far beyond the 64-bit bitstring
//! limit are fine as long as only the orbit of one pair is populated.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result, ZedError};
use crate::hamiltonian::stagger;
use crate::spin_basis::{Configuration, PlainBasis};

/// One-dimensional irrep of the translation part: `χ_0(τ) = 1`, `χ_π(τ) = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chi {
    Zero,
    Pi,
}

impl Chi {
    pub fn sign(self, mu: usize) -> f64 {
        match self {
            Chi::Zero => 1.0,
            Chi::Pi if mu % 2 == 1 => -1.0,
            Chi::Pi => 1.0,
        }
    }

    /// The parity whose fixed-separation states are zero modes.
    pub fn for_separation(x: usize) -> Chi {
        if x % 2 == 0 {
            Chi::Pi
        } else {
            Chi::Zero
        }
    }
}

impl std::str::FromStr for Chi {
    type Err = ZedError;

    fn from_str(s: &str) -> Result<Chi> {
        match s {
            "0" | "zero" => Ok(Chi::Zero),
            "pi" | "π" => Ok(Chi::Pi),
            _ => param(format!("chi must be 0 or pi, got '{s}'")),
        }
    }
}

impl std::fmt::Display for Chi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Chi::Zero => "0",
            Chi::Pi => "pi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StateLabel {
    FixedSeparation { x: usize, chi: Chi, reflection_sign: i8 },
    Uniform,
    /// The uniform superposition with the odd-separation zero modes projected out.
    UniformComplement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizedState {
    pub l: usize,
    pub label: StateLabel,
    /// Keyed by magnon pair `(i, j)` with `i < j`.
    pub amplitudes: BTreeMap<(usize, usize), f64>,
}

fn pair(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

impl SymmetrizedState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.values().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn overlap(&self, other: &SymmetrizedState) -> f64 {
        self.amplitudes
            .iter()
            .filter_map(|(k, a)| other.amplitudes.get(k).map(|b| a * b))
            .sum()
    }

    /// Amplitude vector in the two-magnon block of a plain basis.
    pub fn to_dense(&self, basis: &PlainBasis) -> Result<Vec<Complex64>> {
        if basis.l != self.l {
            return param(format!("state on L={} used with a basis for L={}", self.l, basis.l));
        }
        let mut v = vec![Complex64::default(); basis.dim()];
        for (&(i, j), &a) in &self.amplitudes {
            let idx = basis
                .index_of(Configuration::from_sites(&[i, j]))
                .ok_or_else(|| ZedError::Unsupported("state lies outside the basis".into()))?;
            v[idx] = Complex64::new(a, 0.0);
        }
        Ok(v)
    }

    /// Translate every magnon by one site.
    pub fn translated(&self) -> SymmetrizedState {
        let l = self.l;
        SymmetrizedState {
            amplitudes: self.amplitudes.iter().map(|(&(i, j), &a)| (pair((i + 1) % l, (j + 1) % l), a)).collect(),
            ..self.clone()
        }
    }
}

fn check_divisible_by_four(l: usize) -> Result<()> {
    if l < 4 || l % 4 != 0 {
        return Err(ZedError::Unsupported(format!(
            "fixed-separation states are constructed for L divisible by 4, got {l}"
        )));
    }
    Ok(())
}

fn project(l: usize, x: usize, chi: Chi, s: i8) -> BTreeMap<(usize, usize), f64> {
    let mut amps: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for nu in 0..2 {
        for mu in 0..l {
            let site = |i: usize| {
                let t = (i + mu) % l;
                if nu == 1 {
                    l - 1 - t
                } else {
                    t
                }
            };
            let weight = chi.sign(mu) * if nu == 1 { f64::from(s) } else { 1.0 };
            *amps.entry(pair(site(0), site(x))).or_default() += weight;
        }
    }
    amps.retain(|_, a| a.abs() > 1e-12);
    amps
}

/// `|r_x; χ⟩`: the projection of magnons at `(0, x)` onto a one-dimensional irrep,
/// with the reflection sign chosen as the one giving a nonzero projection.
pub fn build_fixed_separation_state(l: usize, x: usize, chi: Chi) -> Result<SymmetrizedState> {
    check_divisible_by_four(l)?;
    if x == 0 || x > l / 2 {
        return param(format!("separation must be in 1..={}, got {x}", l / 2));
    }
    let candidates: Vec<(i8, BTreeMap<(usize, usize), f64>)> =
        [1i8, -1].into_iter().map(|s| (s, project(l, x, chi, s))).filter(|(_, a)| !a.is_empty()).collect();
    let (s, amps) = match candidates.len() {
        1 => candidates.into_iter().next().expect("one candidate"),
        0 => {
            return Err(ZedError::RepresentationDoesNotExist(format!(
                "no reflection sign gives a nonzero projection for L={l}, x={x}, chi={chi}"
            )))
        }
        _ => {
            return Err(ZedError::Invariant(format!("both reflection signs survive for L={l}, x={x}")));
        }
    };
    let norm = amps.values().map(|a| a * a).sum::<f64>().sqrt();
    Ok(SymmetrizedState {
        l,
        label: StateLabel::FixedSeparation { x, chi, reflection_sign: s },
        amplitudes: amps.into_iter().map(|(k, a)| (k, a / norm)).collect(),
    })
}

/// Equal-weight superposition of all two-magnon configurations.
pub fn uniform_two_magnon_state(l: usize) -> Result<SymmetrizedState> {
    check_divisible_by_four(l)?;
    let a = 1.0 / ((l * (l - 1) / 2) as f64).sqrt();
    let amplitudes = (0..l).flat_map(|i| (i + 1..l).map(move |j| ((i, j), a))).collect();
    Ok(SymmetrizedState { l, label: StateLabel::Uniform, amplitudes })
}

/// The uniform state made orthogonal to the odd-separation `χ_0` zero modes:
/// equal weight on every configuration with separation 1 or even.
pub fn uniform_complement_state(l: usize) -> Result<SymmetrizedState> {
    let mut st = uniform_two_magnon_state(l)?;
    st.amplitudes.retain(|&(i, j), _| {
        let x = (j - i).min(l - (j - i));
        x == 1 || x % 2 == 0
    });
    let norm = st.norm();
    st.amplitudes.values_mut().for_each(|a| *a /= norm);
    st.label = StateLabel::UniformComplement;
    Ok(st)
}

/// Orthonormal basis of the `L/2` exact zero modes in the two-magnon
/// one-dimensional irreps.
pub fn zero_basis(l: usize) -> Result<Vec<SymmetrizedState>> {
    check_divisible_by_four(l)?;
    let mut out = Vec::with_capacity(l / 2);
    for n in 1..=l / 4 {
        out.push(build_fixed_separation_state(l, 2 * n, Chi::Pi)?);
    }
    for n in 1..=(l - 2) / 4 {
        out.push(build_fixed_separation_state(l, 2 * n + 1, Chi::Zero)?);
    }
    out.push(uniform_complement_state(l)?);
    Ok(out)
}

/// `H0|ψ⟩` for a two-magnon state, without building any matrix.
pub fn apply_h0_sparse(state: &SymmetrizedState) -> BTreeMap<(usize, usize), f64> {
    let l = state.l;
    let mut out: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(i, j), &a) in &state.amplitudes {
        // with Σ_b s_b = 0 the diagonal is -½ Σ over bonds with exactly one magnon
        let mut diag = 0.0;
        for (m, other) in [(i, j), (j, i)] {
            for (bond, neighbour) in [((m + l - 1) % l, (m + l - 1) % l), (m, (m + 1) % l)] {
                if neighbour == other {
                    continue;
                }
                let s = stagger(bond);
                diag -= 0.5 * s;
                *out.entry(pair(neighbour, other)).or_default() += 0.5 * s * a;
            }
        }
        *out.entry((i, j)).or_default() += diag * a;
    }
    out
}

pub fn h0_residual(state: &SymmetrizedState) -> f64 {
    apply_h0_sparse(state).values().map(|v| v * v).sum::<f64>().sqrt()
}

/// Squared Schmidt coefficients across the cut `[0, L/2) | [L/2, L)`, descending.
pub fn schmidt_spectrum(state: &SymmetrizedState) -> Vec<f64> {
    let h = state.l / 2;
    let mut both_a = 0.0;
    let mut both_b = 0.0;
    // one magnon on each side: entries of the (A site, B site) amplitude matrix
    let mut cross: Vec<(usize, usize, f64)> = Vec::new();
    for (&(i, j), &a) in &state.amplitudes {
        match (i < h, j < h) {
            (true, true) => both_a += a * a,
            (false, false) => both_b += a * a,
            (true, false) => cross.push((i, j - h, a)),
            (false, true) => cross.push((j, i - h, a)),
        }
    }
    let mut values = vec![both_a, both_b];
    // split the cross matrix into independent blocks of the bipartite support graph
    let mut parent: Vec<usize> = (0..2 * h).collect();
    fn find(p: &mut [usize], mut v: usize) -> usize {
        while p[v] != v {
            p[v] = p[p[v]];
            v = p[v];
        }
        v
    }
    for &(a, b, _) in &cross {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, h + b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut blocks: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for &e in &cross {
        let root = find(&mut parent, e.0);
        blocks.entry(root).or_default().push(e);
    }
    for entries in blocks.values() {
        let mut rows: Vec<usize> = entries.iter().map(|e| e.0).collect();
        let mut cols: Vec<usize> = entries.iter().map(|e| e.1).collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        let mut m = DMatrix::<f64>::zeros(rows.len(), cols.len());
        for &(a, b, v) in entries {
            let r = rows.binary_search(&a).expect("row present");
            let c = cols.binary_search(&b).expect("col present");
            m[(r, c)] += v;
        }
        values.extend(m.singular_values().iter().map(|s| s * s));
    }
    values.retain(|&v| v >= 1e-14);
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Half-chain von Neumann entropy in nats.
pub fn entropy_numeric(state: &SymmetrizedState) -> f64 {
    schmidt_spectrum(state).iter().map(|&p| -p * p.ln()).sum::<f64>().max(0.0)
}

/// Closed-form half-chain entropy of `|r_x; χ⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ClosedForm {
    Exact(f64),
    /// Leading terms of a large-`L` expansion.
    Asymptotic(f64),
    NotCovered,
}

impl ClosedForm {
    pub fn value(self) -> Option<f64> {
        match self {
            ClosedForm::Exact(v) | ClosedForm::Asymptotic(v) => Some(v),
            ClosedForm::NotCovered => None,
        }
    }
}

/// Entropy of well-separated magnons: an `(L/2 - x)/L` weight twice plus `2x`
/// one-magnon weights `1/L`.
pub fn short_separation_entropy(l: usize, x: usize) -> f64 {
    let lf = l as f64;
    let p = (lf / 2.0 - x as f64) / lf;
    -2.0 * p * p.ln() + 2.0 * x as f64 / lf * lf.ln()
}

pub fn entropy_closed_form(l: usize, x: usize) -> Result<ClosedForm> {
    check_divisible_by_four(l)?;
    if x == 0 || x > l / 2 {
        return param(format!("separation must be in 1..={}, got {x}", l / 2));
    }
    let lf = l as f64;
    let ln_l = lf.ln();
    Ok(if 4 * x <= l {
        // the short-separation formula is still exact at x = L/4, where it is ½ ln L + ln 2
        ClosedForm::Exact(short_separation_entropy(l, x))
    } else if 3 * x == l {
        ClosedForm::Exact(2.0 / 3.0 * ln_l + (1.5f64).ln() / 3.0)
    } else if 8 * x == 3 * l {
        ClosedForm::Exact(0.75 * (2.0 * lf).ln() - 5f64.sqrt() / 4.0 * (5f64.sqrt() / 3.0).atanh())
    } else if 5 * x == 2 * l {
        ClosedForm::Exact(0.8 * ln_l - (2.7f64).ln() / 5.0)
    } else if 2 * x == l {
        ClosedForm::Exact((lf / 2.0).ln())
    } else if 2 * x + 2 == l {
        ClosedForm::Asymptotic(ln_l - 1.0 + (8.0 * 2f64.ln() - 2.0) / lf)
    } else {
        ClosedForm::NotCovered
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub l: usize,
    /// `(x, S_vN)` for `x = 1..=L/2`, each with its zero-mode parity.
    pub points: Vec<(usize, f64)>,
}

pub fn entropy_curve(l: usize) -> Result<EntropyCurve> {
    let points = (1..=l / 2)
        .map(|x| Ok((x, entropy_numeric(&build_fixed_separation_state(l, x, Chi::for_separation(x))?))))
        .collect::<Result<_>>()?;
    Ok(EntropyCurve { l, points })
}

impl EntropyCurve {
    /// Separations where the discrete slope jumps by more than `threshold`.
    pub fn kinks(&self, threshold: f64) -> Vec<usize> {
        self.points
            .windows(3)
            .filter(|w| ((w[2].1 - w[1].1) - (w[1].1 - w[0].1)).abs() > threshold)
            .map(|w| w[1].0)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_h0;
    use crate::lattice_group::orbit;
    use proptest::prelude::*;

    #[test]
    fn examples_at_l8() {
        let a = build_fixed_separation_state(8, 2, Chi::Pi).unwrap();
        assert!(h0_residual(&a) < 1e-12);
        let b = build_fixed_separation_state(8, 3, Chi::Zero).unwrap();
        assert!(h0_residual(&b) < 1e-12);
        let c = build_fixed_separation_state(8, 2, Chi::Zero).unwrap();
        assert!(h0_residual(&c) > 0.1);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert_eq!(zero_basis(8).unwrap().len(), 4);
    }

    #[test]
    fn antipodal_pi_state_exists_with_odd_reflection() {
        let s = build_fixed_separation_state(8, 4, Chi::Pi).unwrap();
        assert_eq!(s.label, StateLabel::FixedSeparation { x: 4, chi: Chi::Pi, reflection_sign: -1 });
        assert!(h0_residual(&s) < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(build_fixed_separation_state(10, 2, Chi::Pi), Err(ZedError::Unsupported(_))));
        assert!(matches!(build_fixed_separation_state(8, 0, Chi::Pi), Err(ZedError::Parameter(_))));
        assert!(matches!(build_fixed_separation_state(8, 5, Chi::Pi), Err(ZedError::Parameter(_))));
        assert!(matches!(zero_basis(6), Err(ZedError::Unsupported(_))));
        assert!("two".parse::<Chi>().is_err());
    }

    #[test]
    fn sparse_h0_matches_matrix() {
        let l = 12;
        let basis = PlainBasis::magnon_sector(l, 2).unwrap();
        let h = build_h0(l, &basis).unwrap();
        for x in 1..=l / 2 {
            for chi in [Chi::Zero, Chi::Pi] {
                let st = build_fixed_separation_state(l, x, chi).unwrap();
                let dense = h.apply(&st.to_dense(&basis).unwrap());
                let sparse = apply_h0_sparse(&st);
                let mut check = dense.clone();
                for (&(i, j), &v) in &sparse {
                    check[basis.index_of(Configuration::from_sites(&[i, j])).unwrap()] -= v;
                }
                assert!(check.iter().all(|c| c.norm() < 1e-12), "x={x} chi={chi}");
            }
        }
    }

    #[test]
    fn support_is_one_orbit() {
        let l = 16;
        for x in 1..=l / 2 {
            let st = build_fixed_separation_state(l, x, Chi::for_separation(x)).unwrap();
            let orb = orbit(Configuration::from_sites(&[0, x]), l).unwrap();
            assert_eq!(st.amplitudes.len(), orb.len(), "x={x}");
            assert!(st.amplitudes.keys().all(|&(i, j)| orb.contains(Configuration::from_sites(&[i, j]))));
        }
    }

    #[test]
    fn zero_basis_is_orthonormal_and_annihilated() {
        for l in [8usize, 12, 16, 20, 24, 28, 32] {
            let basis = zero_basis(l).unwrap();
            assert_eq!(basis.len(), l / 2);
            let uniform = uniform_two_magnon_state(l).unwrap();
            assert!(h0_residual(&uniform) < 1e-10);
            // the uniform state lies in the span
            let captured: f64 = basis.iter().map(|s| s.overlap(&uniform).powi(2)).sum();
            assert!((captured - 1.0).abs() < 1e-12);
            for (a, s) in basis.iter().enumerate() {
                assert!(h0_residual(s) < 1e-10, "L={l}");
                for (b, t) in basis.iter().enumerate() {
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((s.overlap(t) - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rdm_block_spectrum() {
        for l in [16usize, 32] {
            for x in 1..l / 4 {
                let spec = schmidt_spectrum(&build_fixed_separation_state(l, x, Chi::for_separation(x)).unwrap());
                let big = (l as f64 / 2.0 - x as f64) / l as f64;
                let mut expected = vec![big, big];
                expected.extend(std::iter::repeat_n(1.0 / l as f64, 2 * x));
                expected.sort_by(|a, b| b.total_cmp(a));
                assert_eq!(spec.len(), expected.len(), "L={l} x={x}");
                for (a, b) in spec.iter().zip(&expected) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_state_has_no_entanglement() {
        let st = SymmetrizedState { l: 8, label: StateLabel::Uniform, amplitudes: [((0, 1), 1.0)].into() };
        assert_eq!(entropy_numeric(&st), 0.0);
    }

    #[test]
    fn exact_closed_forms() {
        for l in [16usize, 24, 32, 40, 48, 120] {
            for x in 1..=l / 2 {
                if let ClosedForm::Exact(v) = entropy_closed_form(l, x).unwrap() {
                    let num = entropy_numeric(&build_fixed_separation_state(l, x, Chi::for_separation(x)).unwrap());
                    assert!((num - v).abs() < 1e-9, "L={l} x={x}: {num} vs {v}");
                }
            }
        }
        let l32 = entropy_numeric(&build_fixed_separation_state(32, 16, Chi::Pi).unwrap());
        assert!((l32 - 16f64.ln()).abs() < 1e-9);
        assert_eq!(entropy_closed_form(32, 13).unwrap(), ClosedForm::NotCovered);
    }

    #[test]
    fn next_to_antipodal_expansion_converges() {
        let err = |l: usize| {
            let num = entropy_numeric(&build_fixed_separation_state(l, l / 2 - 1, Chi::for_separation(l / 2 - 1)).unwrap());
            (num - entropy_closed_form(l, l / 2 - 1).unwrap().value().unwrap()).abs()
        };
        let (a, b, c) = (err(16), err(32), err(64));
        assert!(a > b && b > c && c < 1e-3, "{a} {b} {c}");
    }

    #[test]
    fn short_separation_limit_is_approached_slowly() {
        // S(x) - ln 2 ≈ (2x/L)(ln L + 1 - ln 2) for fixed x
        for x in [1usize, 2] {
            let l = 1_000_000;
            let excess = short_separation_entropy(l, x) - 2f64.ln();
            let lf = l as f64;
            let predicted = 2.0 * x as f64 / lf * (lf.ln() + 1.0 - 2f64.ln());
            assert!((excess - predicted).abs() < 1e-9);
        }
        let st = build_fixed_separation_state(4096, 2, Chi::Pi).unwrap();
        assert!((entropy_numeric(&st) - short_separation_entropy(4096, 2)).abs() < 1e-9);
    }

    #[test]
    fn scaling_collapse_tightens() {
        let dev = |l: usize| {
            entropy_curve(l)
                .unwrap()
                .points
                .iter()
                .map(|&(x, s)| (s / (l as f64).ln() - 2.0 * x as f64 / l as f64).abs())
                .fold(0.0, f64::max)
        };
        let (a, b, c) = (dev(16), dev(32), dev(64));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn kinks_at_special_separations() {
        let curve = entropy_curve(120).unwrap();
        let kinks = curve.kinks(0.02);
        for k in [2usize, 3, 4] {
            let x = (k - 1) * 120 / (2 * k);
            assert!(kinks.iter().any(|&y| y.abs_diff(x) <= 1), "x={x} missing from {kinks:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn translation_eigenstates(quarter in 2usize..9, xf in 0.0f64..1.0, pi in any::<bool>()) {
            let l = 4 * quarter;
            let x = 1 + ((l / 2 - 1) as f64 * xf) as usize;
            let chi = if pi { Chi::Pi } else { Chi::Zero };
            let st = build_fixed_separation_state(l, x, chi).unwrap();
            let sign = if pi { -1.0 } else { 1.0 };
            let moved = st.translated();
            prop_assert_eq!(moved.amplitudes.len(), st.amplitudes.len());
            for (k, a) in &st.amplitudes {
                prop_assert!((moved.amplitudes[k] - sign * a).abs() < 1e-12);
            }
            let spec = schmidt_spectrum(&st);
            prop_assert!((spec.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(spec.iter().all(|&p| p > 0.0 && p <= 1.0 + 1e-12));
        }
    }
}
