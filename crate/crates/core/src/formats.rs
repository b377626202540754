//! PB-5B8D, PA-7B8D, PDM-BPSK and PDM-QPSK constellations.
//!
//! PDM-QPSK in 8D has 256 points labeled by eight bits; the first four pick
//! the Gray-mapped PDM-QPSK symbol of slot T1 and the last four the one of
//! slot T2. The set-partitioned formats keep a subset of those points whose
//! labels obey a parity rule on a few overhead bits.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom8d::{
    classify, distance_sq, is_symmetric, kissing_number, partition_census, BitWord, ClassCensus, Constellation,
    JonesVector, PartitionClass, Symbol8D,
};

/// Quadrature rail of one time slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum QuadRole {
    Ix = 0,
    Qx = 1,
    Iy = 2,
    Qy = 3,
}

impl QuadRole {
    pub const ALL: [QuadRole; 4] = [QuadRole::Ix, QuadRole::Qx, QuadRole::Iy, QuadRole::Qy];
}

/// How an 8-bit label drives the PDM-QPSK rails.
///
/// `roles[k]` is the rail driven by label bit `b(k+1)` in slot T1 and by
/// `b(k+5)` in slot T2. The inversion mask is XORed onto the label first;
/// a rail bit `i` then becomes the amplitude `(1 − 2i)/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LabelConvention {
    pub roles: [QuadRole; 4],
    pub inversion_mask: u8,
}

fn rail(bit: u8) -> f64 {
    (1.0 - 2.0 * f64::from(bit)) * std::f64::consts::FRAC_1_SQRT_2
}

impl LabelConvention {
    /// `b1→Ix, b2→Qx, b3→Iy, b4→Qy`, no inversion.
    pub fn canonical() -> Self {
        Self { roles: QuadRole::ALL, inversion_mask: 0 }
    }

    pub fn new(roles: [QuadRole; 4], inversion_mask: u8) -> Result<Self> {
        let mut seen = [false; 4];
        for r in roles {
            if std::mem::replace(&mut seen[r as usize], true) {
                return Err(Error::InvalidParameter(format!("role {r:?} assigned twice")));
            }
        }
        Ok(Self { roles, inversion_mask })
    }

    /// All 24 × 256 conventions, permutations in lexicographic order then masks.
    pub fn family() -> impl Iterator<Item = LabelConvention> {
        permutations4().into_iter().flat_map(|roles| (0..=255u8).map(move |mask| LabelConvention { roles, inversion_mask: mask }))
    }

    fn slot(&self, nibble: u8) -> JonesVector {
        let mut r = [0u8; 4];
        for (k, role) in self.roles.iter().enumerate() {
            r[*role as usize] = (nibble >> (3 - k)) & 1;
        }
        JonesVector::new(Complex64::new(rail(r[0]), rail(r[1])), Complex64::new(rail(r[2]), rail(r[3])))
    }

    /// The PDM-QPSK 8D symbol carrying `label`.
    pub fn map_label(&self, label: u8) -> Symbol8D {
        let l = label ^ self.inversion_mask;
        Symbol8D {
            t1: self.slot(l >> 4),
            t2: self.slot(l & 0x0f),
            label: BitWord::new(label, 8).expect("8-bit label"),
        }
    }

    /// Label positions (1-based) of the in-phase rails: `[x1, y1, x2, y2]`.
    fn in_phase_positions(&self) -> [usize; 4] {
        let pos = |role: QuadRole| self.roles.iter().position(|r| *r == role).expect("bijection") + 1;
        let (px, py) = (pos(QuadRole::Ix), pos(QuadRole::Iy));
        [px, py, px + 4, py + 4]
    }
}

impl fmt::Display for LabelConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.roles.iter().enumerate().map(|(k, r)| format!("b{}→{r:?}", k + 1)).collect();
        write!(f, "[{}] mask={:08b}", names.join(" "), self.inversion_mask)
    }
}

fn permutations4() -> Vec<[QuadRole; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let idx = [a, b, c, d];
                    let mut seen = [false; 4];
                    if idx.iter().all(|&i| !std::mem::replace(&mut seen[i], true)) {
                        out.push(idx.map(|i| QuadRole::ALL[i]));
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FormatKind {
    PdmBpsk,
    PdmQpsk,
    Pb5b8d,
    Pa7b8d,
    /// Greedy set-partition result with the given number of information bits.
    Searched(u8),
}

impl FormatKind {
    pub const ALL: [FormatKind; 4] = [FormatKind::PdmBpsk, FormatKind::Pb5b8d, FormatKind::Pa7b8d, FormatKind::PdmQpsk];

    pub fn info_bits(self) -> usize {
        match self {
            FormatKind::PdmBpsk => 4,
            FormatKind::PdmQpsk => 8,
            FormatKind::Pb5b8d => 5,
            FormatKind::Pa7b8d => 7,
            FormatKind::Searched(n) => n as usize,
        }
    }

    /// Bits per polarization per time slot on the line (rails driven).
    pub fn line_bits_per_pol(self) -> usize {
        match self {
            FormatKind::PdmBpsk => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for FormatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatKind::PdmBpsk => f.write_str("PDM-BPSK"),
            FormatKind::PdmQpsk => f.write_str("PDM-QPSK"),
            FormatKind::Pb5b8d => f.write_str("PB-5B8D"),
            FormatKind::Pa7b8d => f.write_str("PA-7B8D"),
            FormatKind::Searched(n) => write!(f, "SP-{n}B8D"),
        }
    }
}

impl FromStr for FormatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        match norm.as_str() {
            "PDM-BPSK" | "BPSK" => Ok(FormatKind::PdmBpsk),
            "PDM-QPSK" | "QPSK" => Ok(FormatKind::PdmQpsk),
            "PB-5B8D" => Ok(FormatKind::Pb5b8d),
            "PA-7B8D" => Ok(FormatKind::Pa7b8d),
            other => {
                if let Some(n) = other.strip_prefix("SP-").and_then(|r| r.strip_suffix("B8D")) {
                    if let Ok(n) = n.parse::<u8>() {
                        if (4..=8).contains(&n) {
                            return Ok(FormatKind::Searched(n));
                        }
                    }
                }
                Err(Error::InvalidParameter(format!("unknown format `{s}`")))
            }
        }
    }
}

impl TryFrom<String> for FormatKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FormatKind> for String {
    fn from(k: FormatKind) -> String {
        k.to_string()
    }
}

/// Overhead bits `(b6, b7, b8)` of PB-5B8D for information bits `b1..b5`.
pub fn pb5b8d_overhead(info: BitWord) -> Result<BitWord> {
    if info.len() != 5 {
        return Err(Error::InvalidBitWord(format!("PB-5B8D takes 5 information bits, got {}", info.len())));
    }
    let b = |k| info.bit(k);
    let p = b(4) ^ b(5);
    BitWord::from_bits(&[b(3) ^ p, (1 ^ b(2)) ^ p, (1 ^ b(1)) ^ p])
}

/// Overhead bit `b8` of PA-7B8D for information bits `b1..b7` (`b7` is free).
pub fn pa7b8d_overhead(info: BitWord) -> Result<u8> {
    if info.len() != 7 {
        return Err(Error::InvalidBitWord(format!("PA-7B8D takes 7 information bits, got {}", info.len())));
    }
    let b = |k| info.bit(k);
    let x = b(1)
        ^ b(4)
        ^ b(6)
        ^ (b(1) & b(3))
        ^ (b(1) & b(4))
        ^ (b(1) & b(5))
        ^ (b(1) & b(6))
        ^ (b(2) & b(3))
        ^ (b(2) & b(4))
        ^ (b(2) & b(5))
        ^ (b(2) & b(6))
        ^ (b(3) & b(5))
        ^ (b(3) & b(6))
        ^ (b(4) & b(5))
        ^ (b(4) & b(6));
    Ok(1 ^ x)
}

/// Full 8-bit label of the PB-5B8D / PA-7B8D symbol for an information word.
pub fn overhead_label(kind: FormatKind, info: u8) -> Result<u8> {
    match kind {
        FormatKind::Pb5b8d => Ok((info << 3) | pb5b8d_overhead(BitWord::new(info, 5)?)?.value()),
        FormatKind::Pa7b8d => Ok((info << 1) | pa7b8d_overhead(BitWord::new(info, 7)?)?),
        FormatKind::PdmQpsk => Ok(info),
        other => Err(Error::InvalidParameter(format!("{other} has no overhead labeling"))),
    }
}

fn satisfies(conv: &LabelConvention, kind: FormatKind) -> bool {
    let want = match kind {
        FormatKind::Pb5b8d => ClassCensus { pb: 32, pa: 0, pi: 0 },
        FormatKind::Pa7b8d => ClassCensus { pb: 64, pa: 64, pi: 0 },
        _ => return true,
    };
    let n = 1u16 << kind.info_bits();
    let mut census = ClassCensus::default();
    for info in 0..n {
        let label = overhead_label(kind, info as u8).expect("info word in range");
        match classify(&conv.map_label(label)) {
            Ok(PartitionClass::PB) => census.pb += 1,
            Ok(PartitionClass::PA) => census.pa += 1,
            Ok(PartitionClass::PI) => census.pi += 1,
            Err(_) => return false,
        }
        if census.pb > want.pb || census.pa > want.pa || census.pi > want.pi {
            return false;
        }
    }
    census == want
}

/// Every convention of the family under which the overhead formulas select
/// 32 PB symbols for PB-5B8D and 64 PB + 64 PA symbols for PA-7B8D.
pub fn find_convention() -> Result<Vec<LabelConvention>> {
    let found: Vec<_> = LabelConvention::family()
        .filter(|c| satisfies(c, FormatKind::Pb5b8d) && satisfies(c, FormatKind::Pa7b8d))
        .collect();
    if found.is_empty() {
        Err(Error::NoConvention)
    } else {
        Ok(found)
    }
}

/// First convention returned by [`find_convention`], computed once.
pub fn default_convention() -> Result<LabelConvention> {
    static CACHE: OnceLock<Result<LabelConvention>> = OnceLock::new();
    CACHE.get_or_init(|| find_convention().map(|v| v[0])).clone()
}

pub fn build_format(kind: FormatKind, conv: &LabelConvention) -> Result<Constellation> {
    let name = kind.name();
    let entries: Vec<(Symbol8D, u8)> = match kind {
        FormatKind::PdmQpsk => (0..=255u8).map(|l| (conv.map_label(l), l)).collect(),
        FormatKind::Pb5b8d | FormatKind::Pa7b8d => {
            if !satisfies(conv, kind) {
                return Err(Error::InvalidConvention(name));
            }
            (0..1u16 << kind.info_bits())
                .map(|info| {
                    let info = info as u8;
                    Ok((conv.map_label(overhead_label(kind, info)?), info))
                })
                .collect::<Result<_>>()?
        }
        FormatKind::PdmBpsk => {
            let pos = conv.in_phase_positions();
            (0..16u8)
                .map(|info| {
                    let mut label = 0u8;
                    for (k, p) in pos.iter().enumerate() {
                        let bit = (info >> (3 - k)) & 1;
                        label |= bit << (8 - p);
                    }
                    let q = conv.map_label(label);
                    let re = |z: Complex64| Complex64::new(z.re * std::f64::consts::SQRT_2, 0.0);
                    let s = Symbol8D {
                        t1: JonesVector::new(re(q.t1.ex), re(q.t1.ey)),
                        t2: JonesVector::new(re(q.t2.ex), re(q.t2.ey)),
                        label: q.label,
                    };
                    (s, info)
                })
                .collect()
        }
        FormatKind::Searched(_) => {
            return Err(Error::InvalidParameter("searched formats come from search_partition".into()));
        }
    };
    Constellation::new(name, kind.info_bits(), entries)
}

/// Builds `kind` under [`default_convention`]; searched kinds run the greedy
/// partition search with its default options.
pub fn standard_format(kind: FormatKind) -> Result<Constellation> {
    match kind {
        FormatKind::Searched(n) => Ok(search_partition(n as usize, 0, &SearchOptions::default())?.constellation),
        _ => build_format(kind, &default_convention()?),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FormatReport {
    pub name: String,
    pub size: usize,
    pub info_bits: usize,
    pub se_per_4d: f64,
    pub census: ClassCensus,
    pub dmin_sq: f64,
    pub kissing: usize,
    pub symmetric: bool,
}

impl FormatReport {
    pub fn of(c: &Constellation) -> Self {
        Self {
            name: c.name().to_string(),
            size: c.len(),
            info_bits: c.info_bits(),
            se_per_4d: c.info_bits() as f64 / 2.0,
            census: c.census(),
            dmin_sq: c.dmin_sq(),
            kissing: kissing_number(c, 0).unwrap_or(0),
            symmetric: is_symmetric(c),
        }
    }
}

pub fn render_report_table(reports: &[FormatReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>4} {:>9} {:>7} {:<20} {:>8} {:>7} {:>9}",
        "format", "size", "info_bits", "SE/4D", "census", "dmin^2", "kissing", "symmetric"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<10} {:>4} {:>9} {:>7.2} {:<20} {:>8.4} {:>7} {:>9}",
            r.name,
            r.size,
            r.info_bits,
            r.se_per_4d,
            r.census.to_string(),
            r.dmin_sq,
            r.kissing,
            if r.symmetric { "yes" } else { "no" }
        );
    }
    out
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub restarts: usize,
    pub convention: LabelConvention,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { restarts: 32, convention: LabelConvention::canonical() }
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub constellation: Constellation,
    pub report: FormatReport,
}

/// Greedy max-min-distance set partition of PDM-QPSK in 8D.
///
/// Classes are filled in the order PB, PA, PI. A class that fits entirely is
/// taken whole; the first class that does not fit is sampled greedily, each
/// step adding the candidate with the largest minimum distance to the
/// partial set, then the fewest neighbors at that distance, then the lowest
/// label. Restarts differ in the (seeded) first greedy pick. The best
/// restart maximizes dmin², then symmetry, then minimizes the kissing number.
pub fn search_partition(target_info_bits: usize, seed: u64, opts: &SearchOptions) -> Result<SearchResult> {
    if !(4..=8).contains(&target_info_bits) {
        return Err(Error::InvalidParameter(format!("target of {target_info_bits} bits outside 4..=8")));
    }
    let n = 1usize << target_info_bits;
    let universe: Vec<Symbol8D> = (0..=255u8).map(|l| opts.convention.map_label(l)).collect();
    let coords: Vec<[f64; 8]> = universe.iter().map(Symbol8D::to_real8).collect();
    let classes: Vec<PartitionClass> = universe.iter().map(classify).collect::<Result<_>>()?;

    let mut forced = Vec::new();
    let mut pool = Vec::new();
    for class in [PartitionClass::PB, PartitionClass::PA, PartitionClass::PI] {
        let members: Vec<usize> = (0..256).filter(|&i| classes[i] == class).collect();
        if forced.len() + members.len() <= n {
            forced.extend(members);
            if forced.len() == n {
                break;
            }
        } else {
            pool = members;
            break;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let restarts = if pool.is_empty() { 1 } else { opts.restarts.max(1) };
    let mut best: Option<(Constellation, (f64, bool, usize))> = None;
    for _ in 0..restarts {
        let mut chosen = forced.clone();
        if !pool.is_empty() {
            let first = pool[rng.random_range(0..pool.len())];
            greedy_fill(&coords, &pool, first, n, &mut chosen);
        }
        let entries: Vec<(Symbol8D, u8)> = {
            let mut labels: Vec<usize> = chosen.clone();
            labels.sort_unstable();
            labels.iter().enumerate().map(|(rank, &i)| (universe[i], rank as u8)).collect()
        };
        let name = FormatKind::Searched(target_info_bits as u8).name();
        let c = Constellation::new(name, target_info_bits, entries)?;
        let score = (c.dmin_sq(), is_symmetric(&c), kissing_number(&c, 0).unwrap_or(0));
        let better = match &best {
            None => true,
            Some((_, b)) => {
                score.0 > b.0 + 1e-9 || ((score.0 - b.0).abs() <= 1e-9 && ((score.1 && !b.1) || (score.1 == b.1 && score.2 < b.2)))
            }
        };
        if better {
            best = Some((c, score));
        }
    }
    let (constellation, _) = best.expect("at least one restart");
    let report = FormatReport::of(&constellation);
    Ok(SearchResult { constellation, report })
}

fn greedy_fill(coords: &[[f64; 8]], pool: &[usize], first: usize, n: usize, chosen: &mut Vec<usize>) {
    let mut in_set = [false; 256];
    // per-candidate (min distance, count at min) against the partial set
    let mut stats = vec![(f64::INFINITY, 0usize); 256];
    let absorb = |idx: usize, stats: &mut Vec<(f64, usize)>| {
        for &c in pool {
            let d = distance_sq(&coords[c], &coords[idx]);
            let s = &mut stats[c];
            if d < s.0 - 1e-9 {
                *s = (d, 1);
            } else if (d - s.0).abs() <= 1e-9 {
                s.1 += 1;
            }
        }
    };
    for &i in chosen.iter() {
        in_set[i] = true;
        absorb(i, &mut stats);
    }
    let mut next = Some(first);
    while let Some(p) = next {
        chosen.push(p);
        in_set[p] = true;
        absorb(p, &mut stats);
        if chosen.len() == n {
            break;
        }
        next = pool.iter().copied().filter(|&c| !in_set[c]).reduce(|p, c| {
            let (dp, np) = stats[p];
            let (dc, nc) = stats[c];
            if dc > dp + 1e-9 || ((dc - dp).abs() <= 1e-9 && (nc < np || (nc == np && c < p))) {
                c
            } else {
                p
            }
        });
    }
}

/// Algebraic normal form of the overhead bits of a constellation whose first
/// `info_bits` label bits are a bijection onto the information words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverheadFit {
    pub info_bits: usize,
    /// For each overhead bit, the monomials (bitmask over `b1..bn`, bit 0 = `b1`).
    pub monomials: Vec<Vec<u8>>,
}

impl OverheadFit {
    pub fn degree(&self) -> usize {
        self.monomials.iter().flatten().map(|m| m.count_ones() as usize).max().unwrap_or(0)
    }
}

impl fmt::Display for OverheadFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, terms) in self.monomials.iter().enumerate() {
            let rendered: Vec<String> = terms
                .iter()
                .map(|&m| {
                    if m == 0 {
                        "1".to_string()
                    } else {
                        (0..8).filter(|k| m >> k & 1 == 1).map(|k| format!("b{}", k + 1)).collect::<Vec<_>>().join("·")
                    }
                })
                .collect();
            let rhs = if rendered.is_empty() { "0".to_string() } else { rendered.join(" ⊕ ") };
            writeln!(f, "b{} = {rhs}", self.info_bits + j + 1)?;
        }
        Ok(())
    }
}

/// Fits each overhead bit as a Boolean polynomial of the leading label bits
/// (Möbius transform of its truth table). `None` when the leading bits do
/// not identify the symbols.
pub fn fit_overhead_anf(c: &Constellation) -> Option<OverheadFit> {
    let k = c.info_bits();
    if k >= 8 {
        return Some(OverheadFit { info_bits: k, monomials: Vec::new() });
    }
    let size = 1usize << k;
    let mut table: Vec<Option<u8>> = vec![None; size];
    for s in c.symbols() {
        let lead = (s.label.value() >> (8 - k)) as usize;
        if table[lead].replace(s.label.value() & ((1u8 << (8 - k)) - 1)).is_some() {
            return None;
        }
    }
    let overhead: Vec<u8> = table.into_iter().collect::<Option<_>>()?;
    let mut monomials = Vec::new();
    for j in 0..(8 - k) {
        let shift = 8 - k - 1 - j;
        // truth table indexed by a mask where bit m is b(m+1)
        let mut anf: Vec<u8> = (0..size)
            .map(|mask| {
                let word = (0..k).fold(0usize, |w, m| w | ((mask >> m & 1) << (k - 1 - m)));
                (overhead[word] >> shift) & 1
            })
            .collect();
        let mut step = 1;
        while step < size {
            for i in 0..size {
                if i & step != 0 {
                    anf[i] ^= anf[i ^ step];
                }
            }
            step <<= 1;
        }
        monomials.push((0..size).filter(|&m| anf[m] == 1).map(|m| m as u8).collect());
    }
    Some(OverheadFit { info_bits: k, monomials })
}

pub fn encode_indices(bits: &[u8], c: &Constellation) -> Result<Vec<usize>> {
    let k = c.info_bits();
    if k == 0 || bits.len() % k != 0 {
        return Err(Error::LengthMismatch { len: bits.len(), chunk: k });
    }
    bits.chunks(k)
        .map(|chunk| {
            let word = BitWord::from_bits(chunk)?;
            c.index_of_info(word.value()).ok_or(Error::InvalidParameter("constellation lacks an info index".into()))
        })
        .collect()
}

/// Maps an information bit stream onto constellation symbols, `info_bits` per symbol.
pub fn encode_stream(bits: &[u8], c: &Constellation) -> Result<Vec<Symbol8D>> {
    Ok(encode_indices(bits, c)?.into_iter().map(|i| c.symbols()[i]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    pub index: usize,
    pub label: BitWord,
    pub info: BitWord,
}

/// Index of the nearest constellation point; ties go to the lowest label.
pub fn nearest_index(received: &[f64; 8], c: &Constellation) -> Option<usize> {
    let mut best = None;
    let mut best_d = f64::INFINITY;
    for (i, p) in c.coords().iter().enumerate() {
        let d = distance_sq(received, p);
        if d < best_d {
            best_d = d;
            best = Some(i);
        }
    }
    best
}

/// Maximum-likelihood (minimum Euclidean distance) decision in 8D.
pub fn ml_decide(received: &[f64; 8], c: &Constellation) -> Result<Decision> {
    let index = nearest_index(received, c).ok_or(Error::TooFewSymbols { needed: 1, got: 0 })?;
    Ok(Decision {
        index,
        label: c.symbols()[index].label,
        info: BitWord::new(c.info_of(index), c.info_bits() as u8)?,
    })
}

/// Information bits of a sequence of decided symbol indices.
pub fn demap_indices(indices: &[usize], c: &Constellation) -> Vec<u8> {
    let k = c.info_bits();
    let mut out = Vec::with_capacity(indices.len() * k);
    for &i in indices {
        let info = c.info_of(i);
        out.extend((0..k).map(|j| (info >> (k - 1 - j)) & 1));
    }
    out
}

/// One constraint verdict of the format verification.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Verification {
    pub reports: Vec<FormatReport>,
    pub checks: Vec<Check>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut out = render_report_table(&self.reports);
        out.push('\n');
        for c in &self.checks {
            let _ = writeln!(out, "[{}] {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
        }
        out
    }
}

/// Checks the structural constraints of the four formats.
pub fn verify_formats(pb: &Constellation, pa: &Constellation, qpsk: &Constellation, bpsk: &Constellation) -> Verification {
    let full = partition_census(qpsk.symbols()).unwrap_or_default();
    let mut checks = Vec::new();
    let mut check = |name: &str, pass: bool| checks.push(Check { name: name.to_string(), pass });
    check("PDM-QPSK census PB=64 PA=128 PI=64", full == ClassCensus { pb: 64, pa: 128, pi: 64 });
    check("PB-5B8D has 32 symbols, all PB", pb.len() == 32 && pb.census() == ClassCensus { pb: 32, pa: 0, pi: 0 });
    check("PB-5B8D neighbor profiles identical", is_symmetric(pb));
    check("PA-7B8D census PB=64 PA=64 PI=0", pa.len() == 128 && pa.census() == ClassCensus { pb: 64, pa: 64, pi: 0 });
    check("PA-7B8D dmin^2 equals PDM-QPSK dmin^2", (pa.dmin_sq() - qpsk.dmin_sq()).abs() <= 1e-9);
    check("PDM-BPSK has 16 symbols", bpsk.len() == 16);
    let reports = [bpsk, pb, pa, qpsk].iter().map(|c| FormatReport::of(c)).collect();
    Verification { reports, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: u8, n: u8) -> BitWord {
        BitWord::new(v, n).unwrap()
    }

    #[test]
    fn pb_overhead_examples() {
        assert_eq!(pb5b8d_overhead(w(0b00000, 5)).unwrap().bits(), vec![0, 1, 1]);
        assert_eq!(pb5b8d_overhead(w(0b11111, 5)).unwrap().bits(), vec![1, 0, 0]);
        assert_eq!(pb5b8d_overhead(w(0b00001, 5)).unwrap().bits(), vec![1, 0, 0]);
        assert!(pb5b8d_overhead(w(0, 4)).is_err());
    }

    #[test]
    fn pa_overhead_examples() {
        assert_eq!(pa7b8d_overhead(w(0b0000000, 7)).unwrap(), 1);
        assert_eq!(pa7b8d_overhead(w(0b1000000, 7)).unwrap(), 0);
        assert_eq!(pa7b8d_overhead(w(0b1111111, 7)).unwrap(), 0);
    }

    #[test]
    fn family_size() {
        assert_eq!(LabelConvention::family().count(), 6144);
        assert_eq!(permutations4().len(), 24);
    }

    #[test]
    fn canonical_convention_is_found_first() {
        let found = find_convention().unwrap();
        assert_eq!(found[0], LabelConvention::canonical());
    }

    #[test]
    fn bpsk_has_dmin_four() {
        let c = build_format(FormatKind::PdmBpsk, &LabelConvention::canonical()).unwrap();
        assert_eq!(c.len(), 16);
        assert!((c.dmin_sq() - 4.0).abs() < 1e-12);
        assert!((c.mean_energy_per_pol_slot() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_convention_rejected() {
        let bad = LabelConvention::family()
            .find(|c| !satisfies(c, FormatKind::Pb5b8d))
            .unwrap();
        assert_eq!(build_format(FormatKind::Pb5b8d, &bad).unwrap_err(), Error::InvalidConvention("PB-5B8D".into()));
    }

    #[test]
    fn format_names_parse() {
        for k in FormatKind::ALL {
            assert_eq!(k.name().parse::<FormatKind>().unwrap(), k);
        }
        assert_eq!("sp-6b8d".parse::<FormatKind>().unwrap(), FormatKind::Searched(6));
        assert!("16QAM".parse::<FormatKind>().is_err());
    }

    #[test]
    fn encode_rejects_ragged_stream() {
        let c = standard_format(FormatKind::Pb5b8d).unwrap();
        assert_eq!(encode_stream(&[0, 1, 0], &c).unwrap_err(), Error::LengthMismatch { len: 3, chunk: 5 });
    }

    #[test]
    fn pb_stream_of_zeros() {
        let c = standard_format(FormatKind::Pb5b8d).unwrap();
        let s = encode_stream(&[0; 5], &c).unwrap();
        assert_eq!(s[0].label.value(), 0b00000_011);
    }

    #[test]
    fn search_rejects_bad_target() {
        assert!(search_partition(3, 0, &SearchOptions::default()).is_err());
        assert!(search_partition(9, 0, &SearchOptions::default()).is_err());
    }
}
