use serde::{Deserialize, Serialize};

use crate::error::{Result, ZedError};

/// Histogram and mean of the consecutive-gap ratio `r = min(s_n, s_{n+1}) / max(s_n, s_{n+1})`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioStats {
    /// `(bin_left, bin_right, density)`, densities integrate to one.
    pub bins: Vec<(f64, f64, f64)>,
    pub mean_r: f64,
    pub count: usize,
}

/// GOE surmise for the density of `r` on `[0, 1]`.
///
/// `P(r) = (27/8)(r + r²)/(1 + r + r²)^{5/2}` is normalized on `[0, ∞)` for the
/// unfolded ratio `s_{n+1}/s_n`; folding onto `min/max` doubles it.
pub fn goe_surmise(r: f64) -> f64 {
    2.0 * 27.0 / 8.0 * (r + r * r) / (1.0 + r + r * r).powf(2.5)
}

/// Collapse runs of levels closer than `tol`, returning the survivors and how many were dropped.
pub fn strip_degeneracies(levels: &[f64], tol: f64) -> (Vec<f64>, usize) {
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(sorted.len());
    for e in sorted {
        match out.last() {
            Some(&last) if e - last < tol => {}
            _ => out.push(e),
        }
    }
    let dropped = levels.len() - out.len();
    (out, dropped)
}

fn ratios(levels: &[f64]) -> impl Iterator<Item = f64> + '_ {
    levels.windows(3).map(|w| {
        let (a, b) = (w[1] - w[0], w[2] - w[1]);
        let hi = a.max(b);
        if hi == 0.0 {
            1.0
        } else {
            a.min(b) / hi
        }
    })
}

/// Pool the r-values of several sorted level sequences (one per symmetry sector).
///
/// Sequences with fewer than three levels contribute nothing; if no sequence has
/// three levels the statistics are undefined.
pub fn ratio_statistics(sequences: &[Vec<f64>], n_bins: usize) -> Result<RatioStats> {
    if n_bins == 0 {
        return Err(ZedError::Parameter("histogram needs at least one bin".into()));
    }
    let rs: Vec<f64> = sequences.iter().flat_map(|s| ratios(s)).collect();
    if rs.is_empty() {
        return Err(ZedError::InsufficientData("need at least 3 non-degenerate levels in some sector".into()));
    }
    let width = 1.0 / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &r in &rs {
        counts[((r / width) as usize).min(n_bins - 1)] += 1;
    }
    let total = rs.len() as f64;
    let bins = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as f64 * width, (i + 1) as f64 * width, c as f64 / (total * width)))
        .collect();
    Ok(RatioStats { bins, mean_r: rs.iter().sum::<f64>() / total, count: rs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    #[test]
    fn equally_spaced_levels() {
        let levels: Vec<f64> = (0..20).map(f64::from).collect();
        let st = ratio_statistics(&[levels], 10).unwrap();
        assert_eq!(st.mean_r, 1.0);
        assert_eq!(st.count, 18);
        let mass: f64 = st.bins.iter().map(|(a, b, d)| (b - a) * d).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert_eq!(st.bins[9].2, 10.0);
    }

    #[test]
    fn too_few_levels() {
        assert!(matches!(ratio_statistics(&[vec![0.0, 1.0]], 10), Err(ZedError::InsufficientData(_))));
        let (stripped, dropped) = strip_degeneracies(&[1.0, 0.0, 1.0 + 1e-12, 2.0], 1e-10);
        assert_eq!(stripped, vec![0.0, 1.0, 2.0]);
        assert_eq!(dropped, 1);
    }

    #[test]
    fn surmise_is_normalized() {
        let n = 100_000;
        let integral: f64 = (0..n).map(|i| goe_surmise((i as f64 + 0.5) / n as f64) / n as f64).sum();
        assert!((integral - 1.0).abs() < 1e-6);
        let mean: f64 = (0..n).map(|i| {
            let r = (i as f64 + 0.5) / n as f64;
            r * goe_surmise(r) / n as f64
        }).sum();
        // 4 - 2√3 for the surmise
        assert!((mean - (4.0 - 2.0 * 3f64.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn poisson_levels() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut levels: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        levels.sort_by(f64::total_cmp);
        let st = ratio_statistics(&[levels], 20).unwrap();
        assert!((st.mean_r - (2.0 * 2f64.ln() - 1.0)).abs() < 0.01, "{}", st.mean_r);
    }

    #[test]
    fn small_goe_sample() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = 300;
        let mut seqs = Vec::new();
        for _ in 0..10 {
            let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
            let h = (&a + a.transpose()) * 0.5;
            let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
            e.sort_by(f64::total_cmp);
            seqs.push(e);
        }
        let st = ratio_statistics(&seqs, 20).unwrap();
        assert!((st.mean_r - 0.5307).abs() < 0.015, "{}", st.mean_r);
    }
}
