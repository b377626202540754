//! Polarization geometry of PDM-QPSK in eight dimensions.
//!
//! An 8D symbol is a pair of dual-polarization (Jones) symbols sent in two
//! consecutive time slots. Its partition class follows from the relative
//! orientation of the two states of polarization on the Poincaré sphere:
//! antipodal Stokes vectors are polarization balanced (PB), orthogonal Stokes
//! vectors are polarization alternating (PA) and identical ones are
//! polarization identical (PI).

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance used when snapping Stokes dot products onto {-1, 0, 1}.
pub const CLASS_EPS: f64 = 1e-9;

/// Tolerance for comparing neighbor-distance profiles.
pub const PROFILE_EPS: f64 = 1e-9;

/// Ordered bit vector `b1..bn`, `b1` most significant.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitWord {
    value: u8,
    len: u8,
}

impl BitWord {
    const ALLOWED_LEN: [u8; 7] = [0, 2, 3, 4, 5, 7, 8];

    pub fn new(value: u8, len: u8) -> Result<Self> {
        if !Self::ALLOWED_LEN.contains(&len) {
            return Err(Error::InvalidBitWord(format!("length {len} not supported")));
        }
        if len < 8 && u16::from(value) >= 1u16 << len {
            return Err(Error::InvalidBitWord(format!("value {value} does not fit in {len} bits")));
        }
        Ok(Self { value, len })
    }

    /// Builds a word from individual bits, first element is `b1`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() > 8 {
            return Err(Error::InvalidBitWord(format!("length {} not supported", bits.len())));
        }
        let mut value = 0u8;
        for &b in bits {
            if b > 1 {
                return Err(Error::InvalidBitWord(format!("entry {b} is not binary")));
            }
            value = (value << 1) | b;
        }
        Self::new(value, bits.len() as u8)
    }

    pub fn value(self) -> u8 {
        self.value
    }

    pub fn len(self) -> usize {
        self.len as usize
    }

    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    /// Bit `b_k`, 1-indexed from the most significant end.
    pub fn bit(self, k: usize) -> u8 {
        assert!(k >= 1 && k <= self.len as usize, "bit index {k} out of 1..={}", self.len);
        (self.value >> (self.len as usize - k)) & 1
    }

    pub fn bits(self) -> Vec<u8> {
        (1..=self.len()).map(|k| self.bit(k)).collect()
    }
}

impl fmt::Debug for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitWord({self})")
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Dual-polarization field sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesVector {
    pub ex: Complex64,
    pub ey: Complex64,
}

impl JonesVector {
    pub fn new(ex: Complex64, ey: Complex64) -> Self {
        Self { ex, ey }
    }

    pub fn power(&self) -> f64 {
        self.ex.norm_sqr() + self.ey.norm_sqr()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self { ex: self.ex * alpha, ey: self.ey * alpha }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn dot(&self, other: &StokesVector) -> f64 {
        self.s1 * other.s1 + self.s2 * other.s2 + self.s3 * other.s3
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Normalized Stokes vector `(|ex|²−|ey|², 2Re(ex·ey*), −2Im(ex·ey*)) / (|ex|²+|ey|²)`.
pub fn stokes(j: &JonesVector) -> Result<StokesVector> {
    let p = j.power();
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::DegeneratePolarization);
    }
    let c = j.ex * j.ey.conj();
    Ok(StokesVector {
        s1: (j.ex.norm_sqr() - j.ey.norm_sqr()) / p,
        s2: 2.0 * c.re / p,
        s3: -2.0 * c.im / p,
    })
}

/// One 8D constellation point: Jones symbols for slots T1 and T2 plus its label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Symbol8D {
    pub t1: JonesVector,
    pub t2: JonesVector,
    pub label: BitWord,
}

impl Symbol8D {
    /// Real coordinates `(Re x1, Im x1, Re y1, Im y1, Re x2, Im x2, Re y2, Im y2)`.
    pub fn to_real8(&self) -> [f64; 8] {
        [
            self.t1.ex.re,
            self.t1.ex.im,
            self.t1.ey.re,
            self.t1.ey.im,
            self.t2.ex.re,
            self.t2.ex.im,
            self.t2.ey.re,
            self.t2.ey.im,
        ]
    }

    pub fn energy(&self) -> f64 {
        self.t1.power() + self.t2.power()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self { t1: self.t1.scale(alpha), t2: self.t2.scale(alpha), label: self.label }
    }
}

pub fn distance_sq(a: &[f64; 8], b: &[f64; 8]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PartitionClass {
    PB,
    PA,
    PI,
}

impl fmt::Display for PartitionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PartitionClass::PB => "PB",
            PartitionClass::PA => "PA",
            PartitionClass::PI => "PI",
        };
        f.write_str(s)
    }
}

pub fn classify(s: &Symbol8D) -> Result<PartitionClass> {
    let d = stokes(&s.t1)?.dot(&stokes(&s.t2)?);
    if d <= -1.0 + CLASS_EPS {
        Ok(PartitionClass::PB)
    } else if d.abs() <= CLASS_EPS {
        Ok(PartitionClass::PA)
    } else if d >= 1.0 - CLASS_EPS {
        Ok(PartitionClass::PI)
    } else {
        Err(Error::OffLattice(d))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClassCensus {
    pub pb: usize,
    pub pa: usize,
    pub pi: usize,
}

impl ClassCensus {
    pub fn total(&self) -> usize {
        self.pb + self.pa + self.pi
    }

    pub fn get(&self, class: PartitionClass) -> usize {
        match class {
            PartitionClass::PB => self.pb,
            PartitionClass::PA => self.pa,
            PartitionClass::PI => self.pi,
        }
    }
}

impl fmt::Display for ClassCensus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PB={} PA={} PI={}", self.pb, self.pa, self.pi)
    }
}

pub fn partition_census(symbols: &[Symbol8D]) -> Result<ClassCensus> {
    let mut census = ClassCensus::default();
    for s in symbols {
        match classify(s)? {
            PartitionClass::PB => census.pb += 1,
            PartitionClass::PA => census.pa += 1,
            PartitionClass::PI => census.pi += 1,
        }
    }
    Ok(census)
}

/// Immutable labeled set of 8D symbols.
///
/// Symbols are kept sorted by label value so that decisions can break ties
/// towards the lowest label by scanning in order. Every symbol also carries
/// the information word it encodes; `info_bits` of them form a bijection
/// with `0..2^info_bits`.
#[derive(Clone, Debug)]
pub struct Constellation {
    name: String,
    info_bits: usize,
    symbols: Vec<Symbol8D>,
    coords: Vec<[f64; 8]>,
    info: Vec<u8>,
    by_info: Vec<usize>,
    census: ClassCensus,
    dmin_sq: f64,
}

impl Constellation {
    /// Builds a constellation from `(symbol, information word)` pairs.
    pub fn new(name: impl Into<String>, info_bits: usize, entries: Vec<(Symbol8D, u8)>) -> Result<Self> {
        if info_bits > 8 {
            return Err(Error::InvalidParameter(format!("{info_bits} information bits per 8D symbol")));
        }
        let size = 1usize << info_bits;
        if entries.len() != size {
            return Err(Error::InvalidParameter(format!(
                "{} symbols for {info_bits} information bits (expected {size})",
                entries.len()
            )));
        }
        let mut entries = entries;
        entries.sort_by_key(|(s, _)| s.label.value());
        for w in entries.windows(2) {
            if w[0].0.label == w[1].0.label {
                return Err(Error::DuplicateLabel(w[0].0.label.value()));
            }
        }
        let mut by_info = vec![usize::MAX; size];
        for (idx, (_, info)) in entries.iter().enumerate() {
            let slot = by_info
                .get_mut(*info as usize)
                .ok_or_else(|| Error::InvalidParameter(format!("information word {info} out of range")))?;
            if *slot != usize::MAX {
                return Err(Error::InvalidParameter(format!("information word {info} mapped twice")));
            }
            *slot = idx;
        }
        let (symbols, info): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let census = partition_census(&symbols)?;
        let coords: Vec<[f64; 8]> = symbols.iter().map(Symbol8D::to_real8).collect();
        let dmin_sq = min_pairwise(&coords);
        Ok(Self { name: name.into(), info_bits, symbols, coords, info, by_info, census, dmin_sq })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn info_bits(&self) -> usize {
        self.info_bits
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol8D] {
        &self.symbols
    }

    pub fn coords(&self) -> &[[f64; 8]] {
        &self.coords
    }

    pub fn census(&self) -> ClassCensus {
        self.census
    }

    /// Cached squared minimum distance; infinite for fewer than two points.
    pub fn dmin_sq(&self) -> f64 {
        self.dmin_sq
    }

    /// Information word carried by the symbol at `index`.
    pub fn info_of(&self, index: usize) -> u8 {
        self.info[index]
    }

    /// Index of the symbol carrying information word `info`.
    pub fn index_of_info(&self, info: u8) -> Option<usize> {
        self.by_info.get(info as usize).copied()
    }

    pub fn index_of_label(&self, label: u8) -> Option<usize> {
        self.symbols.binary_search_by_key(&label, |s| s.label.value()).ok()
    }

    /// Mean energy per polarization per time slot.
    pub fn mean_energy_per_pol_slot(&self) -> f64 {
        self.symbols.iter().map(Symbol8D::energy).sum::<f64>() / (4.0 * self.len() as f64)
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        let entries = self.symbols.iter().zip(&self.info).map(|(s, &i)| (s.scale(alpha), i)).collect();
        Self::new(self.name.clone(), self.info_bits, entries)
    }

    /// Copy with the symbol at `index` replaced; the information mapping is kept.
    pub fn with_replaced(&self, index: usize, symbol: Symbol8D) -> Result<Self> {
        if index >= self.len() {
            return Err(Error::IndexOutOfRange { index, len: self.len() });
        }
        let mut entries: Vec<_> = self.symbols.iter().copied().zip(self.info.iter().copied()).collect();
        entries[index].0 = symbol;
        Self::new(self.name.clone(), self.info_bits, entries)
    }
}

fn min_pairwise(coords: &[[f64; 8]]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in coords.iter().enumerate() {
        for b in &coords[i + 1..] {
            best = best.min(distance_sq(a, b));
        }
    }
    best
}

/// Brute-force squared minimum Euclidean distance over all pairs.
pub fn min_distance_sq(c: &Constellation) -> Result<f64> {
    if c.len() < 2 {
        return Err(Error::TooFewSymbols { needed: 2, got: c.len() });
    }
    Ok(min_pairwise(c.coords()))
}

/// Sorted squared distances from point `index` to every other point.
pub fn neighbor_profile(c: &Constellation, index: usize) -> Result<Vec<f64>> {
    let coords = c.coords();
    let me = coords.get(index).ok_or(Error::IndexOutOfRange { index, len: coords.len() })?;
    let mut d: Vec<f64> = coords
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != index)
        .map(|(_, p)| distance_sq(me, p))
        .collect();
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// True when every point sees the same multiset of neighbor distances.
pub fn is_symmetric(c: &Constellation) -> bool {
    let Ok(reference) = neighbor_profile(c, 0) else {
        return true;
    };
    (1..c.len()).all(|i| {
        let p = neighbor_profile(c, i).expect("index in range");
        p.iter().zip(&reference).all(|(a, b)| (a - b).abs() <= PROFILE_EPS)
    })
}

/// Number of neighbors at the minimum distance, for point `index`.
pub fn kissing_number(c: &Constellation, index: usize) -> Result<usize> {
    let p = neighbor_profile(c, index)?;
    let Some(&first) = p.first() else { return Ok(0) };
    Ok(p.iter().take_while(|d| (**d - first).abs() <= PROFILE_EPS).count())
}
