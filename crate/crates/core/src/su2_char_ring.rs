//! Exact arithmetic in the SU(2) character ring and the character-theoretic
//! count of symmetry-enforced zero modes.
//!
//! A [`ClassFunction`] is an integer combination `Σ c_S χ_S` of irreducible
//! SU(2) characters, indexed by `2S`. Products follow the fusion rules, so no
//! floating point enters any multiplicity computed here: the Haar integral
//! over the internal symmetry reduces to reading off a coefficient.
//!
//! The spatial part is the dihedral anti-symmetry group of order `2L`. Its
//! one-dimensional irreps `(κ, s)` with `κ ∈ {0, L/2}` have characters
//! `s^ν ω_κ^μ`; the two-dimensional irreps `κ = 1..L/2-1` have character
//! `2cos(2πκμ/L)` on translations and `0` on the reflection coset (the trace
//! of the off-diagonal reflection matrix). Translation characters are summed
//! class by class: all `τ^μ` with the same `gcd(μ, L)` share one cycle type,
//! and the character sum over such a class is a Ramanujan sum, an integer.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::{gcd, Integer};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result, ZedError};
use crate::lattice_group::{cycle_index, elements, CycleIndex, GroupElement};

/// Integer combination of SU(2) characters; `coeffs[t]` multiplies `χ_{t/2}`.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ClassFunction {
    coeffs: Vec<BigInt>,
}

impl ClassFunction {
    pub fn zero() -> Self {
        ClassFunction { coeffs: Vec::new() }
    }

    /// `χ_0`, the multiplicative identity.
    pub fn one() -> Self {
        Self::chi(0)
    }

    /// The irreducible character `χ_S` with `two_s = 2S`.
    pub fn chi(two_s: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); two_s + 1];
        coeffs[two_s] = BigInt::one();
        ClassFunction { coeffs }
    }

    pub fn from_pairs<I, C>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (usize, C)>,
        C: Into<BigInt>,
    {
        let mut f = ClassFunction::zero();
        for (t, c) in pairs {
            f.add_term(t, &c.into());
        }
        f.trim();
        f
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    fn add_term(&mut self, two_s: usize, c: &BigInt) {
        if self.coeffs.len() <= two_s {
            self.coeffs.resize(two_s + 1, BigInt::zero());
        }
        self.coeffs[two_s] += c;
    }

    /// Coefficient of `χ_{two_s/2}`.
    pub fn coeff(&self, two_s: usize) -> BigInt {
        self.coeffs.get(two_s).cloned().unwrap_or_default()
    }

    /// Nonzero terms as `(2S, coefficient)`, ascending in `2S`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &BigInt)> {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Largest `2S` with a nonzero coefficient.
    pub fn max_two_s(&self) -> Option<usize> {
        self.terms().map(|(t, _)| t).last()
    }

    /// Product under SU(2) fusion: `χ_a χ_b = Σ_{c=|a-b|}^{a+b} χ_c`.
    pub fn fuse(&self, other: &ClassFunction) -> ClassFunction {
        let len = (self.coeffs.len() + other.coeffs.len()).saturating_sub(1);
        let mut out = vec![BigInt::zero(); len];
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                let prod = ca * cb;
                let lo = a.abs_diff(b);
                for c in (lo..=a + b).step_by(2) {
                    out[c] += &prod;
                }
            }
        }
        let mut f = ClassFunction { coeffs: out };
        f.trim();
        f
    }

    /// `self^n` by binary exponentiation in the ring.
    pub fn pow(&self, mut n: usize) -> ClassFunction {
        let mut base = self.clone();
        let mut acc = ClassFunction::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.fuse(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.fuse(&base);
            }
        }
        acc
    }

    pub fn scale(&self, k: &BigInt) -> ClassFunction {
        let mut f = ClassFunction { coeffs: self.coeffs.iter().map(|c| c * k).collect() };
        f.trim();
        f
    }

    /// Divide every coefficient by `k`, failing unless all divide exactly.
    pub fn exact_div(&self, k: &BigInt) -> Result<ClassFunction> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (t, c) in self.coeffs.iter().enumerate() {
            let (q, r) = c.div_rem(k);
            if !r.is_zero() {
                return Err(ZedError::Invariant(format!(
                    "coefficient {c} of 2S={t} is not divisible by {k}"
                )));
            }
            coeffs.push(q);
        }
        Ok(ClassFunction { coeffs })
    }

    /// Value at the group identity, `Σ c_S (2S+1)`: the dimension.
    pub fn dimension(&self) -> BigInt {
        self.terms().map(|(t, c)| c * BigInt::from(t + 1)).sum()
    }
}

impl fmt::Debug for ClassFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms()).finish()
    }
}

impl Add for &ClassFunction {
    type Output = ClassFunction;
    fn add(self, rhs: &ClassFunction) -> ClassFunction {
        let mut out = self.clone();
        for (t, c) in rhs.terms() {
            out.add_term(t, c);
        }
        out.trim();
        out
    }
}

impl Sub for &ClassFunction {
    type Output = ClassFunction;
    fn sub(self, rhs: &ClassFunction) -> ClassFunction {
        self + &(-rhs)
    }
}

impl Neg for &ClassFunction {
    type Output = ClassFunction;
    fn neg(self) -> ClassFunction {
        ClassFunction { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Mul for &ClassFunction {
    type Output = ClassFunction;
    fn mul(self, rhs: &ClassFunction) -> ClassFunction {
        self.fuse(rhs)
    }
}

/// Character of the cyclic shift on an `l`-site cycle: `2cos(lθ) = χ_{l/2} - χ_{l/2-1}`.
pub fn cycle_character(l: usize) -> Result<ClassFunction> {
    match l {
        0 => param("cycle length must be positive"),
        1 => Ok(ClassFunction::chi(1)),
        _ => Ok(ClassFunction::from_pairs([(l, 1), (l - 2, -1)])),
    }
}

/// Product of cycle characters over a cycle type.
pub fn character_of_cycle_index(ci: &CycleIndex) -> ClassFunction {
    ci.counts.iter().fold(ClassFunction::one(), |acc, (&len, &count)| {
        // len >= 1 for any cycle produced by a decomposition
        let factor = cycle_character(len).expect("cycle lengths are positive");
        acc.fuse(&factor.pow(count))
    })
}

/// Character of `g θ` on the full chain, as a class function of `θ`.
pub fn full_character(g: &GroupElement) -> ClassFunction {
    character_of_cycle_index(&cycle_index(g))
}

/// An irreducible representation of the dihedral anti-symmetry group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpatialIrrep {
    pub kappa: usize,
    /// Reflection eigenvalue, present only for the one-dimensional irreps.
    pub s: Option<i8>,
}

impl SpatialIrrep {
    pub fn new(l: usize, kappa: usize, s: Option<i8>) -> Result<Self> {
        if l == 0 || l % 2 != 0 {
            return param(format!("chain length must be even and positive, got {l}"));
        }
        if kappa > l / 2 {
            return param(format!("kappa must lie in 0..={}, got {kappa}", l / 2));
        }
        let one_dim = kappa == 0 || kappa == l / 2;
        match (one_dim, s) {
            (true, Some(1 | -1)) | (false, None) => Ok(SpatialIrrep { kappa, s }),
            (true, _) => param(format!("kappa={kappa} needs a reflection sign of +1 or -1")),
            (false, Some(_)) => param(format!("kappa={kappa} is two-dimensional; no reflection sign")),
        }
    }

    pub fn dim(&self) -> usize {
        if self.s.is_some() {
            1
        } else {
            2
        }
    }

    /// The irrep that the Hamiltonian couples this one to.
    pub fn partner(&self, l: usize) -> SpatialIrrep {
        SpatialIrrep { kappa: l / 2 - self.kappa, s: self.s }
    }
}

/// All irreps for chain length `l`, ordered by `κ` then `s = +1, -1`.
pub fn spatial_irreps(l: usize) -> Vec<SpatialIrrep> {
    let mut out = Vec::new();
    for kappa in 0..=l / 2 {
        if kappa == 0 || kappa == l / 2 {
            out.push(SpatialIrrep { kappa, s: Some(1) });
            out.push(SpatialIrrep { kappa, s: Some(-1) });
        } else {
            out.push(SpatialIrrep { kappa, s: None });
        }
    }
    out
}

fn mobius(mut n: usize) -> i64 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// Ramanujan sum `c_q(n) = Σ_{gcd(a,q)=1, 1≤a≤q} cos(2π a n / q)`.
pub fn ramanujan_sum(q: usize, n: usize) -> i64 {
    let g = gcd(q, n);
    (1..=g).filter(|d| g % d == 0).map(|d| mobius(q / d) * d as i64).sum()
}

/// Per-`L` data shared by all spatial projections: full characters grouped by
/// translation class and listed per reflection element.
struct CosetCharacters {
    l: usize,
    /// `(d, translation powers with gcd(μ, L) = d, common character)`.
    translation_classes: Vec<(usize, Vec<usize>, ClassFunction)>,
    /// Character of `σ τ^μ`, indexed by `μ`.
    reflections: Vec<ClassFunction>,
}

impl CosetCharacters {
    fn new(l: usize) -> Result<Self> {
        let group = elements(l)?;
        let mut memo: HashMap<CycleIndex, ClassFunction> = HashMap::new();
        let mut by_gcd: BTreeMap<usize, (Vec<usize>, CycleIndex)> = BTreeMap::new();
        let mut reflections = Vec::with_capacity(l);
        for g in &group {
            let ci = cycle_index(g);
            if !memo.contains_key(&ci) {
                memo.insert(ci.clone(), character_of_cycle_index(&ci));
            }
            if g.is_reflection() {
                reflections.push(memo[&ci].clone());
            } else {
                let d = gcd(g.mu(), l);
                let entry = by_gcd.entry(d).or_insert_with(|| (Vec::new(), ci.clone()));
                if entry.1 != ci {
                    return Err(ZedError::Invariant(format!(
                        "translations with gcd {d} have different cycle types"
                    )));
                }
                entry.0.push(g.mu());
            }
        }
        let translation_classes = by_gcd
            .into_iter()
            .map(|(d, (mus, ci))| {
                let chi = memo[&ci].clone();
                (d, mus, chi)
            })
            .collect();
        Ok(CosetCharacters { l, translation_classes, reflections })
    }

    /// `F_{κ,s} = (1/2L) Σ_g χ_{κ,s}(g)* χ_H(g)`, exactly.
    fn project(&self, irrep: SpatialIrrep) -> Result<ClassFunction> {
        let l = self.l;
        let mut acc = ClassFunction::zero();
        for (d, mus, chi) in &self.translation_classes {
            debug_assert_eq!(mus.len() as i64, ramanujan_sum(l / d, 0));
            // Σ over the class of d_κ cos(2πκμ/L)
            let weight = irrep.dim() as i64 * ramanujan_sum(l / d, irrep.kappa);
            if weight != 0 {
                acc = &acc + &chi.scale(&BigInt::from(weight));
            }
        }
        if let Some(s) = irrep.s {
            for (mu, chi) in self.reflections.iter().enumerate() {
                let phase = if irrep.kappa == 0 || mu % 2 == 0 { 1 } else { -1 };
                acc = &acc + &chi.scale(&BigInt::from(i64::from(s) * phase));
            }
        }
        acc.exact_div(&BigInt::from(2 * l))
    }
}

/// `F_{κ,s}(θ)`: the spatial projection of the full character onto one irrep.
/// Its coefficient at `2S` is the multiplicity `m_{κ,s,S}`.
pub fn spatial_projection(kappa: usize, s: Option<i8>, l: usize) -> Result<ClassFunction> {
    let irrep = SpatialIrrep::new(l, kappa, s)?;
    CosetCharacters::new(l)?.project(irrep)
}

/// Key of one multiplicity entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectorKey {
    pub kappa: usize,
    pub s: Option<i8>,
    pub two_s: usize,
}

/// Multiplicities `m_{κ,s,S}` of every (spatial irrep, total spin) sector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplicityTable {
    pub l: usize,
    pub entries: BTreeMap<SectorKey, u64>,
}

/// Largest chain for which table entries are guaranteed to fit in 64 bits.
pub const MAX_TABLE_L: usize = 62;

impl MultiplicityTable {
    pub fn get(&self, irrep: SpatialIrrep, two_s: usize) -> u64 {
        let key = SectorKey { kappa: irrep.kappa, s: irrep.s, two_s };
        self.entries.get(&key).copied().unwrap_or(0)
    }

    /// `Σ d_κ (2S+1) m_{κ,s,S}`; equals `2^L` for a complete decomposition.
    pub fn completeness_sum(&self) -> u128 {
        self.entries
            .iter()
            .map(|(k, &m)| {
                let d = if k.s.is_some() { 1 } else { 2 };
                d * (k.two_s as u128 + 1) * m as u128
            })
            .sum()
    }

    /// Zero modes forced in one irrep at one spin, counted at fixed `S^z`:
    /// `d_κ · max(0, m_{κ,S} - m_{partner,S})`.
    pub fn forced_zeros(&self, irrep: SpatialIrrep, two_s: usize) -> u64 {
        let partner = irrep.partner(self.l);
        if partner == irrep {
            return 0;
        }
        irrep.dim() as u64 * self.get(irrep, two_s).saturating_sub(self.get(partner, two_s))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "L,kappa,s,two_S,multiplicity")?;
        for (k, m) in &self.entries {
            let s = k.s.map(|s| s.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{}", self.l, k.kappa, s, k.two_s, m)?;
        }
        Ok(())
    }
}

pub fn multiplicity_table(l: usize) -> Result<MultiplicityTable> {
    if l < 2 || l % 2 != 0 {
        return param(format!("chain length must be even and >= 2, got {l}"));
    }
    if l > MAX_TABLE_L {
        return param(format!("multiplicity tables support L <= {MAX_TABLE_L}, got {l}"));
    }
    let chars = CosetCharacters::new(l)?;
    let projections: Vec<(SpatialIrrep, ClassFunction)> = spatial_irreps(l)
        .into_par_iter()
        .map(|irrep| chars.project(irrep).map(|f| (irrep, f)))
        .collect::<Result<_>>()?;
    let mut entries = BTreeMap::new();
    for (irrep, f) in projections {
        for (two_s, c) in f.terms() {
            if c.sign() == Sign::Minus {
                return Err(ZedError::Invariant(format!(
                    "negative multiplicity {c} at kappa={} s={:?} 2S={two_s}",
                    irrep.kappa, irrep.s
                )));
            }
            let m = c.to_u64().ok_or_else(|| ZedError::Invariant("multiplicity overflow".into()))?;
            entries.insert(SectorKey { kappa: irrep.kappa, s: irrep.s, two_s }, m);
        }
    }
    Ok(MultiplicityTable { l, entries })
}

/// Zero-energy degeneracy per total spin, counted at fixed `S^z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZedTable {
    pub l: usize,
    /// `per_s[S]` for integer `S = 0..=L/2`.
    pub per_s: Vec<u64>,
    /// Full-Hilbert-space count `Σ_S (2S+1) Z(S)`.
    pub total: u64,
}

impl ZedTable {
    pub fn from_per_s(l: usize, per_s: Vec<u64>) -> Self {
        let total = per_s.iter().enumerate().map(|(s, z)| (2 * s as u64 + 1) * z).sum();
        ZedTable { l, per_s, total }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "L,two_S,zed,total")?;
        for (s, z) in self.per_s.iter().enumerate() {
            writeln!(w, "{},{},{},{}", self.l, 2 * s, z, self.total)?;
        }
        Ok(())
    }
}

/// Lower bound on the zero-energy degeneracy from the irrep imbalance.
pub fn zed_bound(l: usize) -> Result<ZedTable> {
    Ok(zed_bound_from_table(&multiplicity_table(l)?))
}

pub fn zed_bound_from_table(table: &MultiplicityTable) -> ZedTable {
    let l = table.l;
    let per_s = (0..=l / 2)
        .map(|s| {
            let two_s = 2 * s;
            let one_dim: u64 = [1i8, -1]
                .iter()
                .map(|&sign| {
                    let a = table.get(SpatialIrrep { kappa: 0, s: Some(sign) }, two_s);
                    let b = table.get(SpatialIrrep { kappa: l / 2, s: Some(sign) }, two_s);
                    a.abs_diff(b)
                })
                .sum();
            let two_dim: u64 = (1..=(l - 2) / 4)
                .map(|kappa| {
                    let a = table.get(SpatialIrrep { kappa, s: None }, two_s);
                    let b = table.get(SpatialIrrep { kappa: l / 2 - kappa, s: None }, two_s);
                    a.abs_diff(b)
                })
                .sum();
            one_dim + 2 * two_dim
        })
        .collect();
    ZedTable::from_per_s(l, per_s)
}

/// Closed-form bound from the one-dimensional irreps with internal symmetry erased.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedFormBound {
    /// `Σ_s |R_(0,s) - R_(L/2,s)|`, always `2^{L/2+1}`.
    pub reflection_term: BigUint,
    /// `T_(0,s) - T_(L/2,s)` from the totient formula.
    pub translation_term: BigUint,
}

impl ClosedFormBound {
    /// `Σ_s |R + T|` with `R = ±reflection_term/2`.
    pub fn lower_bound(&self) -> BigUint {
        let half = &self.reflection_term >> 1u32;
        let plus = &half + &self.translation_term;
        let minus = if half >= self.translation_term {
            &half - &self.translation_term
        } else {
            &self.translation_term - &half
        };
        plus + minus
    }
}

fn totient(n: usize) -> usize {
    (1..=n).filter(|&k| gcd(k, n) == 1).count()
}

pub fn closed_form_bound(l: usize) -> Result<ClosedFormBound> {
    let group = elements(l)?;
    // reflection coset, from explicit cycle counts: (s/2L) Σ_μ (1 - (-1)^μ) 2^{c(στ^μ)}
    let mut reflection_sum = BigUint::zero();
    for g in group.iter().filter(|g| g.is_reflection() && g.mu() % 2 == 1) {
        reflection_sum += BigUint::one() << (cycle_index(g).total_cycles() + 1);
    }
    let two_l = BigUint::from(2 * l);
    if !(&reflection_sum % &two_l).is_zero() {
        return Err(ZedError::Invariant("reflection coset sum not divisible by 2L".into()));
    }
    let per_sign = reflection_sum / two_l;

    // translation coset: L = 2^j Q with Q odd, (1/L) Σ_{q|Q} φ(2^j q) 2^{Q/q}
    let j = l.trailing_zeros();
    let q_odd = l >> j;
    let mut t_sum = BigUint::zero();
    for q in (1..=q_odd).filter(|q| q_odd % q == 0) {
        t_sum += BigUint::from(totient((1usize << j) * q)) << (q_odd / q);
    }
    let lb = BigUint::from(l);
    if !(&t_sum % &lb).is_zero() {
        return Err(ZedError::Invariant("translation coset sum not divisible by L".into()));
    }
    Ok(ClosedFormBound { reflection_term: per_sign * 2u32, translation_term: t_sum / lb })
}

/// `Σ_s |⟨χ_{0,s}, 2^{c(g)}⟩ - ⟨χ_{L/2,s}, 2^{c(g)}⟩|`: the one-dimensional
/// part of the bound with the spin-½ site character replaced by the scalar 2.
pub fn erased_one_dim_bound(l: usize) -> Result<BigUint> {
    let group = elements(l)?;
    let weights: Vec<(GroupElement, BigInt)> = group
        .iter()
        .map(|g| (*g, BigInt::one() << cycle_index(g).total_cycles()))
        .collect();
    let inner = |kappa: usize, s: i64| -> Result<BigInt> {
        let mut acc = BigInt::zero();
        for (g, w) in &weights {
            let mut chi: i64 = if kappa == 0 || g.mu() % 2 == 0 { 1 } else { -1 };
            if g.is_reflection() {
                chi *= s;
            }
            acc += w * chi;
        }
        let (q, r) = acc.div_rem(&BigInt::from(2 * l));
        if !r.is_zero() {
            return Err(ZedError::Invariant("erased inner product not integral".into()));
        }
        Ok(q)
    };
    let mut total = BigInt::zero();
    for s in [1, -1] {
        total += (inner(0, s)? - inner(l / 2, s)?).abs();
    }
    Ok(total.to_biguint().expect("sum of absolute values"))
}
