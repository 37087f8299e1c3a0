//! Bitstring spin configurations and symmetry-adapted sector bases.
//!
//! Bit `i` set means a magnon (down spin) on site `i`. A sector basis is
//! built from orbit representatives under the group generated by a
//! translation `T = τ^step` and optionally the bond reflection `σ`. The
//! symmetrized vector for a representative `r` is
//!
//! ```text
//! |r⟩_k ∝ Σ_{g ∈ G} χ(g) g|r⟩,   χ(σ^ν T^j) = s^ν ω^{k j},   ω = e^{2πi/N}
//! ```
//!
//! with `N = L/step`. The stored weight of `r` is `N_r = |G|⁻¹ Σ_{g ∈ Stab(r)} χ(g)`,
//! the squared norm of the projected representative; representatives with
//! `N_r = 0` are incompatible with the sector and dropped.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result, ZedError};
use crate::lattice_group::GroupElement;

/// Largest chain length handled by bitstring bases.
pub const MAX_BITSTRING_L: usize = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Configuration(u64);

impl Configuration {
    pub const fn from_bits(bits: u64) -> Self {
        Configuration(bits)
    }

    pub fn from_sites(sites: &[usize]) -> Self {
        Configuration(sites.iter().fold(0, |acc, &i| acc | 1 << i))
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// Number of magnons, `L/2 - S^z_tot`.
    pub const fn n_mag(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub const fn has_magnon(self, site: usize) -> bool {
        self.0 >> site & 1 == 1
    }

    #[inline]
    pub const fn flip2(self, i: usize, j: usize) -> Self {
        Configuration(self.0 ^ (1 << i) ^ (1 << j))
    }

    pub fn sites(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.has_magnon(i))
    }
}

fn check_l(l: usize) -> Result<()> {
    if l == 0 || l > MAX_BITSTRING_L {
        return param(format!("chain length must be in 1..={MAX_BITSTRING_L}, got {l}"));
    }
    Ok(())
}

/// All configurations of `l` sites with `n_mag` magnons, ascending.
pub fn enumerate_sector(l: usize, n_mag: usize) -> Result<Vec<Configuration>> {
    check_l(l)?;
    if n_mag > l {
        return param(format!("n_mag={n_mag} exceeds L={l}"));
    }
    if n_mag == 0 {
        return Ok(vec![Configuration(0)]);
    }
    let limit = 1u64 << l;
    let mut out = Vec::new();
    let mut c: u64 = (1 << n_mag) - 1;
    while c < limit {
        out.push(Configuration(c));
        // next integer with the same popcount
        let lowest = c & c.wrapping_neg();
        let ripple = c + lowest;
        c = ripple | (((c ^ ripple) >> 2) / lowest);
    }
    Ok(out)
}

/// The computational basis of one magnon sector, or of the whole Hilbert space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainBasis {
    pub l: usize,
    pub n_mag: Option<usize>,
    pub configs: Vec<Configuration>,
}

impl PlainBasis {
    pub fn magnon_sector(l: usize, n_mag: usize) -> Result<Self> {
        Ok(PlainBasis { l, n_mag: Some(n_mag), configs: enumerate_sector(l, n_mag)? })
    }

    pub fn full(l: usize) -> Result<Self> {
        check_l(l)?;
        if l > 24 {
            return Err(ZedError::Capacity(format!("full basis for L={l} is too large")));
        }
        Ok(PlainBasis { l, n_mag: None, configs: (0..1u64 << l).map(Configuration).collect() })
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn index_of(&self, c: Configuration) -> Option<usize> {
        match self.n_mag {
            None => ((c.0 as usize) < self.configs.len()).then_some(c.0 as usize),
            Some(_) => self.configs.binary_search(&c).ok(),
        }
    }
}

/// Quantum numbers of a symmetry sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorLabel {
    pub l: usize,
    pub n_mag: usize,
    /// Translation generator is `τ^step`; 2 for the true symmetry `τ²`.
    pub step: usize,
    /// Momentum index `0..L/step`.
    pub k: usize,
    pub sigma: Option<i8>,
}

impl SectorLabel {
    /// Number of translations in the sector group, `L/step`.
    pub fn period(&self) -> usize {
        self.l / self.step
    }
}

/// Ordered symmetry-adapted basis of one sector.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub label: SectorLabel,
    /// `(representative, N_r)` in ascending representative order.
    pub states: Vec<(Configuration, f64)>,
    elements: Vec<GroupElement>,
    characters: Vec<Complex64>,
}

impl SectorBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn is_real(&self) -> bool {
        self.characters.iter().all(|c| c.im.abs() < 1e-14)
    }

    pub fn index_of(&self, rep: Configuration) -> Option<usize> {
        self.states.binary_search_by_key(&rep, |(r, _)| *r).ok()
    }

    pub fn group(&self) -> &[GroupElement] {
        &self.elements
    }

    /// Character `χ(g)` of the i-th group element.
    pub fn character(&self, i: usize) -> Complex64 {
        self.characters[i]
    }

    /// Representative of `c` and the character of the element mapping `c` onto it.
    pub fn representative(&self, c: Configuration) -> (Configuration, Complex64) {
        let mut best = c;
        let mut phase = Complex64::new(1.0, 0.0);
        for (g, chi) in self.elements.iter().zip(&self.characters) {
            let image = g.apply(c);
            if image < best {
                best = image;
                phase = *chi;
            }
        }
        (best, phase)
    }

    /// Dense amplitude vector of the i-th basis state in `plain`.
    pub fn expand(&self, i: usize, plain: &PlainBasis) -> Vec<Complex64> {
        let (rep, norm) = self.states[i];
        let mut v = vec![Complex64::new(0.0, 0.0); plain.dim()];
        let scale = 1.0 / (self.elements.len() as f64 * norm.sqrt());
        for (g, chi) in self.elements.iter().zip(&self.characters) {
            if let Some(j) = plain.index_of(g.apply(rep)) {
                v[j] += chi * scale;
            }
        }
        v
    }

    /// Write the representatives and weights to a binary cache file.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        for v in [self.label.l, self.label.n_mag, self.label.step, self.label.k] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        w.write_all(&i32::from(self.label.sigma.unwrap_or(0)).to_le_bytes())?;
        w.write_all(&(self.states.len() as u64).to_le_bytes())?;
        for (r, _) in &self.states {
            w.write_all(&r.0.to_le_bytes())?;
        }
        for (_, n) in &self.states {
            w.write_all(&n.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a cache file, checking that it matches `label`.
    pub fn read_cache(path: &Path, label: SectorLabel) -> Result<SectorBasis> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(ZedError::Cache("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != CACHE_VERSION {
            return Err(ZedError::Cache(format!("version {version}, expected {CACHE_VERSION}")));
        }
        let header = [read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?];
        let mut sigma = [0u8; 4];
        r.read_exact(&mut sigma)?;
        let sigma = i32::from_le_bytes(sigma);
        let found = SectorLabel {
            l: header[0] as usize,
            n_mag: header[1] as usize,
            step: header[2] as usize,
            k: header[3] as usize,
            sigma: (sigma != 0).then_some(sigma as i8),
        };
        if found != label {
            return Err(ZedError::Cache(format!("cache holds {found:?}, wanted {label:?}")));
        }
        let mut count = [0u8; 8];
        r.read_exact(&mut count)?;
        let count = u64::from_le_bytes(count) as usize;
        let mut buf = [0u8; 8];
        let mut reps = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            reps.push(Configuration(u64::from_le_bytes(buf)));
        }
        let mut states = Vec::with_capacity(count);
        for rep in reps {
            r.read_exact(&mut buf)?;
            states.push((rep, f64::from_le_bytes(buf)));
        }
        let (elements, characters) = sector_group(&label);
        Ok(SectorBasis { label, states, elements, characters })
    }
}

const CACHE_MAGIC: &[u8; 4] = b"SZBC";
pub const CACHE_VERSION: u32 = 1;

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Cache file name for a sector under `dir`.
pub fn cache_path(dir: &Path, label: &SectorLabel) -> PathBuf {
    dir.join(format!(
        "basis_L{}_n{}_step{}_k{}_s{}_v{}.bin",
        label.l,
        label.n_mag,
        label.step,
        label.k,
        label.sigma.unwrap_or(0),
        CACHE_VERSION
    ))
}

fn sector_group(label: &SectorLabel) -> (Vec<GroupElement>, Vec<Complex64>) {
    let n = label.period();
    let mut elements = Vec::new();
    let mut characters = Vec::new();
    let reflections: &[u8] = if label.sigma.is_some() { &[0, 1] } else { &[0] };
    for &nu in reflections {
        for j in 0..n {
            let g = GroupElement::new(label.l, nu, label.step * j).expect("valid element");
            let angle = 2.0 * std::f64::consts::PI * ((label.k * j) % n) as f64 / n as f64;
            let mut chi = Complex64::from_polar(1.0, angle);
            // exact phases for the real sectors
            if 2 * label.k % n == 0 {
                chi = Complex64::new(if (label.k * j) % n == 0 { 1.0 } else { -1.0 }, 0.0);
            }
            if nu == 1 {
                chi *= f64::from(label.sigma.unwrap_or(1));
            }
            elements.push(g);
            characters.push(chi);
        }
    }
    (elements, characters)
}

fn validate_label(label: &SectorLabel) -> Result<()> {
    check_l(label.l)?;
    if label.l % 2 != 0 {
        return param(format!("chain length must be even, got {}", label.l));
    }
    if label.step != 1 && label.step != 2 {
        return param(format!("translation step must be 1 or 2, got {}", label.step));
    }
    if label.n_mag > label.l {
        return param(format!("n_mag={} exceeds L={}", label.n_mag, label.l));
    }
    let n = label.period();
    if label.k >= n {
        return param(format!("momentum index must be < {n}, got {}", label.k));
    }
    if let Some(s) = label.sigma {
        if s != 1 && s != -1 {
            return param(format!("reflection parity must be +1 or -1, got {s}"));
        }
        if 2 * label.k % n != 0 {
            return param(format!(
                "reflection does not commute with momentum sector k={} of period {n}",
                label.k
            ));
        }
    }
    Ok(())
}

/// Build the sector basis for an arbitrary label.
pub fn build_sector(label: SectorLabel) -> Result<SectorBasis> {
    validate_label(&label)?;
    let (elements, characters) = sector_group(&label);
    let order = elements.len() as f64;
    let mut states = Vec::new();
    'configs: for c in enumerate_sector(label.l, label.n_mag)? {
        let mut stab_sum = Complex64::new(0.0, 0.0);
        for (g, chi) in elements.iter().zip(&characters) {
            let image = g.apply(c);
            if image < c {
                continue 'configs;
            }
            if image == c {
                stab_sum += chi;
            }
        }
        let norm = stab_sum.re / order;
        if norm > 1e-10 {
            states.push((c, norm));
        }
    }
    Ok(SectorBasis { label, states, elements, characters })
}

/// Basis resolving magnon number, momentum under `τ²`, and optionally `σ`.
pub fn build_symmetry_basis(l: usize, n_mag: usize, k2: usize, sigma: Option<i8>) -> Result<SectorBasis> {
    build_sector(SectorLabel { l, n_mag, step: 2, k: k2, sigma })
}

/// Basis resolving momentum under the single-site translation `τ`.
pub fn build_translation_basis(l: usize, n_mag: usize, kappa: usize, sigma: Option<i8>) -> Result<SectorBasis> {
    build_sector(SectorLabel { l, n_mag, step: 1, k: kappa, sigma })
}

/// All `τ²` sectors of one magnon number, with `σ` resolved wherever it commutes.
pub fn tau2_sector_labels(l: usize, n_mag: usize) -> Vec<SectorLabel> {
    let n = l / 2;
    let mut out = Vec::new();
    for k in 0..n {
        if 2 * k % n == 0 {
            for s in [1, -1] {
                out.push(SectorLabel { l, n_mag, step: 2, k, sigma: Some(s) });
            }
        } else {
            out.push(SectorLabel { l, n_mag, step: 2, k, sigma: None });
        }
    }
    out
}

/// Load a sector from the cache directory, building and storing it on a miss.
pub fn load_or_build(dir: &Path, label: SectorLabel) -> Result<SectorBasis> {
    let path = cache_path(dir, &label);
    if path.exists() {
        if let Ok(b) = SectorBasis::read_cache(&path, label) {
            return Ok(b);
        }
    }
    let basis = build_sector(label)?;
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    basis.write_cache(tmp.path())?;
    tmp.persist(&path).map_err(|e| ZedError::Io(e.error))?;
    Ok(basis)
}
