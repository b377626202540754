//! End-to-end Monte Carlo harness: bits → constellation → pulse shaping →
//! WDM link → matched filter → equalizer → 8D decision → error counting.
//!
//! # Seeds
//!
//! Every random stream is derived from the master seed with
//! [`derive_seed`]: a chain of SplitMix64 finalizers over
//! `(master, stream tag, i, j)`. Data bits of realization `r`, channel `ch`
//! use `(DATA, r, ch)`; receiver noise of realization `r`, draw `d` uses
//! `(NOISE, r, d)`. Sweep points reuse the master seed, so all points and
//! formats see common random numbers.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::channel::{add_noise, amplify, ideal_dcf, propagate_link, propagate_span, LinkConfig};
use crate::dsp::SampledField;
use crate::error::{Error, Result};
use crate::formats::{nearest_index, standard_format, FormatKind};
use crate::geom8d::{Constellation, JonesVector};
use crate::waveform::{channel_select, equalize, pulse_shape_slots, wdm_mux, EqualizerConfig, PulseShapeSpec};

pub const STREAM_DATA: u64 = 0x4441_5441;
pub const STREAM_NOISE: u64 = 0x4e4f_4953;

pub const SEED_SCHEME: &str =
    "splitmix64 chain over (master, stream, i, j); data=(0x44415441, realization, channel), noise=(0x4e4f4953, realization, draw)";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64, i: u64, j: u64) -> u64 {
    [stream, i, j].iter().fold(splitmix64(master), |acc, v| splitmix64(acc ^ v))
}

/// `Q² = (√2·erfcinv(2·BER))²` in dB.
pub fn q2_from_ber(ber: f64) -> Result<f64> {
    if ber >= 0.5 || ber.is_nan() {
        return Err(Error::NoDecisionGain(ber));
    }
    if ber <= 0.0 {
        return Err(Error::NeedsErrors(ber));
    }
    let q = std::f64::consts::SQRT_2 * erfc_inv(2.0 * ber);
    Ok(20.0 * q.log10())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub format: FormatKind,
    pub baud_hz: f64,
    pub sps: usize,
    pub rolloff: f64,
    /// RRC support in symbols.
    pub rrc_span: usize,
    pub channels: usize,
    pub grid_hz: f64,
    /// log2 of the mapped bits carried per polarization per realization.
    pub seq_log2: u32,
    pub training_symbols: usize,
    pub eq_taps: usize,
    pub eq_step: f64,
    pub link: LinkConfig,
    pub power_dbm: f64,
    pub seed: u64,
    pub realization_cap: usize,
    pub min_errors: u64,
    /// Receiver noise draws per propagated realization.
    pub noise_draws: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            format: FormatKind::PdmQpsk,
            baud_hz: 32e9,
            sps: 64,
            rolloff: 0.1,
            rrc_span: 64,
            channels: 5,
            grid_hz: 37.5e9,
            seq_log2: 16,
            training_symbols: 1024,
            eq_taps: 11,
            eq_step: 1e-3,
            link: LinkConfig::default(),
            power_dbm: -7.0,
            seed: 1,
            realization_cap: 64,
            min_errors: 400,
            noise_draws: 1,
        }
    }
}

impl SimConfig {
    pub fn pulse(&self) -> PulseShapeSpec {
        PulseShapeSpec { rolloff: self.rolloff, sps: self.sps, span: self.rrc_span, baud: self.baud_hz }
    }

    pub fn equalizer(&self) -> EqualizerConfig {
        EqualizerConfig { taps: self.eq_taps, training_symbols: self.training_symbols, step_size: self.eq_step, spacing: 2 }
    }

    /// 4D time slots per realization.
    pub fn slots(&self) -> usize {
        (1usize << self.seq_log2) / self.format.line_bits_per_pol()
    }

    pub fn samples_per_pol(&self) -> usize {
        self.slots() * self.sps
    }

    pub fn validate(&self) -> Result<()> {
        self.pulse().validate()?;
        self.equalizer().validate()?;
        self.link.validate()?;
        if self.channels == 0 || self.channels % 2 == 0 {
            return Err(Error::InvalidParameter(format!("channel count {} must be odd", self.channels)));
        }
        if !(self.grid_hz > 0.0) {
            return Err(Error::InvalidParameter("grid spacing must be positive".into()));
        }
        if self.seq_log2 < 2 || self.seq_log2 > 24 {
            return Err(Error::InvalidParameter(format!("seq_log2 = {} outside 2..=24", self.seq_log2)));
        }
        let slots = self.slots();
        if slots % 2 != 0 || self.training_symbols % 2 != 0 || slots < self.training_symbols + 2 {
            return Err(Error::InvalidParameter(format!(
                "{slots} slots per realization leave no payload after {} training symbols",
                self.training_symbols
            )));
        }
        if self.realization_cap == 0 || self.noise_draws == 0 {
            return Err(Error::InvalidParameter("realization cap and noise draws must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordFlag {
    /// Stopping rule met.
    None,
    /// Realization cap reached before the error target; BER is an upper bound estimate.
    UpperBound,
    /// No errors in a noise-free configuration.
    ErrorFree,
}

impl RecordFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordFlag::None => "none",
            RecordFlag::UpperBound => "ber_upper_bound",
            RecordFlag::ErrorFree => "error_free",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub bits_compared: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub q2_db: Option<f64>,
    pub realizations: usize,
    pub noise_draws: usize,
    pub flag: RecordFlag,
}

impl BerRecord {
    pub fn is_flagged(&self) -> bool {
        self.flag != RecordFlag::None
    }
}

#[derive(Default)]
struct Tally {
    bits: u64,
    errors: u64,
    realizations: usize,
    draws: usize,
}

impl Tally {
    fn finish(&self, flag: RecordFlag) -> BerRecord {
        let ber = if self.bits == 0 { 0.0 } else { self.errors as f64 / self.bits as f64 };
        BerRecord {
            bits_compared: self.bits,
            bit_errors: self.errors,
            ber,
            q2_db: q2_from_ber(ber).ok(),
            realizations: self.realizations,
            noise_draws: self.draws,
            flag,
        }
    }
}

/// Transmitted waveform of one realization plus what the receiver needs to
/// count errors on the center channel.
pub struct Transmission {
    pub field: SampledField,
    pub center_slots: Vec<JonesVector>,
    pub center_info: Vec<u8>,
}

fn random_bits(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}

/// Generates and multiplexes all channels of realization `r`.
pub fn transmit(cfg: &SimConfig, c: &Constellation, r: usize) -> Result<Transmission> {
    let blocks = cfg.slots() / 2;
    let k = c.info_bits();
    let spec = cfg.pulse();
    let mut fields = Vec::with_capacity(cfg.channels);
    let mut center = None;
    for ch in 0..cfg.channels {
        let bits = random_bits(blocks * k, derive_seed(cfg.seed, STREAM_DATA, r as u64, ch as u64));
        let idx = crate::formats::encode_indices(&bits, c)?;
        let slots: Vec<JonesVector> = idx.iter().flat_map(|&i| [c.symbols()[i].t1, c.symbols()[i].t2]).collect();
        let (field, _) = pulse_shape_slots(&slots, &spec, cfg.power_dbm)?;
        fields.push(field);
        if ch == cfg.channels / 2 {
            center = Some((slots, idx.iter().map(|&i| c.info_of(i)).collect()));
        }
    }
    let field = wdm_mux(&fields, cfg.grid_hz, &spec)?;
    let (center_slots, center_info) = center.expect("odd channel count has a center");
    Ok(Transmission { field, center_slots, center_info })
}

/// Bit errors and compared bits of one received (noisy) field.
pub fn count_errors(cfg: &SimConfig, c: &Constellation, tx: &Transmission, rx: &SampledField) -> Result<(u64, u64)> {
    let spec = cfg.pulse();
    let selected = channel_select(rx, 0, cfg.grid_hz, &spec)?;
    let eq = equalize(&selected, &tx.center_slots[..cfg.training_symbols], &cfg.equalizer())?;
    let mut errors = 0u64;
    let mut bits = 0u64;
    for b in cfg.training_symbols / 2..tx.center_info.len() {
        let (s1, s2) = (eq.symbols[2 * b], eq.symbols[2 * b + 1]);
        let r = [s1.ex.re, s1.ex.im, s1.ey.re, s1.ey.im, s2.ex.re, s2.ex.im, s2.ey.re, s2.ey.im];
        let i = nearest_index(&r, c).ok_or(Error::TooFewSymbols { needed: 1, got: 0 })?;
        errors += u64::from((c.info_of(i) ^ tx.center_info[b]).count_ones());
        bits += c.info_bits() as u64;
    }
    Ok((errors, bits))
}

fn is_noise_free(cfg: &SimConfig, spans: usize) -> bool {
    spans == 0 || crate::channel::ase_psd_per_pol(spans, cfg.link.nf_db, cfg.link.amp_gain_db, crate::dsp::LAMBDA_REF) < 1e-30
}

/// Draws receiver noise onto a propagated field and counts errors until the
/// tally reaches the error target or the draws of this realization run out.
fn accumulate(
    cfg: &SimConfig,
    c: &Constellation,
    tx: &Transmission,
    propagated: &SampledField,
    spans: usize,
    r: usize,
    tally: &mut Tally,
) -> Result<()> {
    tally.realizations += 1;
    let draws = if is_noise_free(cfg, spans) { 1 } else { cfg.noise_draws };
    for d in 0..draws {
        let mut rx = propagated.clone();
        if !is_noise_free(cfg, spans) {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_NOISE, r as u64, d as u64));
            add_noise(&mut rx, spans, cfg.link.nf_db, cfg.link.amp_gain_db, &mut rng)?;
        }
        let (e, b) = count_errors(cfg, c, tx, &rx)?;
        tally.errors += e;
        tally.bits += b;
        tally.draws += 1;
        if tally.errors >= cfg.min_errors {
            break;
        }
    }
    Ok(())
}

/// One Monte Carlo point: realizations with fresh seeds until at least
/// `min_errors` information-bit errors or the realization cap.
pub fn run_point(cfg: &SimConfig) -> Result<BerRecord> {
    cfg.validate()?;
    let c = standard_format(cfg.format)?;
    let mut tally = Tally::default();
    for r in 0..cfg.realization_cap {
        let tx = transmit(cfg, &c, r)?;
        let propagated = propagate_link(&tx.field, &cfg.link)?;
        accumulate(cfg, &c, &tx, &propagated, cfg.link.spans, r, &mut tally)?;
        if tally.errors >= cfg.min_errors {
            return Ok(tally.finish(RecordFlag::None));
        }
        if tally.errors == 0 && is_noise_free(cfg, cfg.link.spans) {
            return Ok(tally.finish(RecordFlag::ErrorFree));
        }
    }
    let flag = if tally.errors == 0 && is_noise_free(cfg, cfg.link.spans) { RecordFlag::ErrorFree } else { RecordFlag::UpperBound };
    Ok(tally.finish(flag))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PowerDbm,
    Spans,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::PowerDbm => "power_dbm",
            SweepAxis::Spans => "spans",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub power_dbm: f64,
    pub spans: usize,
    pub distance_km: f64,
    pub record: Option<BerRecord>,
    pub error: Option<String>,
}

impl SweepPoint {
    /// Q² of an unflagged record.
    pub fn q2_db(&self) -> Option<f64> {
        self.record.as_ref().filter(|r| !r.is_flagged()).and_then(|r| r.q2_db)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub format: FormatKind,
    pub points: Vec<SweepPoint>,
    pub config: SimConfig,
    pub seed_scheme: String,
}

pub const CSV_HEADER: [&str; 11] = [
    "format",
    "axis",
    "axis_value",
    "power_dbm",
    "spans",
    "distance_km",
    "bits_compared",
    "bit_errors",
    "ber",
    "q2_db",
    "flagged",
];

impl SweepResult {
    pub fn write_csv_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        for p in &self.points {
            let (bits, errs, ber, q2, flag) = match (&p.record, &p.error) {
                (Some(r), _) => (
                    r.bits_compared.to_string(),
                    r.bit_errors.to_string(),
                    format!("{:e}", r.ber),
                    r.q2_db.map(|q| format!("{q:.6}")).unwrap_or_default(),
                    r.flag.as_str().to_string(),
                ),
                (None, Some(e)) => (String::new(), String::new(), String::new(), String::new(), format!("failed: {e}")),
                (None, None) => (String::new(), String::new(), String::new(), String::new(), "failed".into()),
            };
            w.write_record([
                self.format.name(),
                self.axis.as_str().to_string(),
                format!("{}", p.axis_value),
                format!("{}", p.power_dbm),
                p.spans.to_string(),
                format!("{}", p.distance_km),
                bits,
                errs,
                ber,
                q2,
                flag,
            ])
            .map_err(csv_err)?;
        }
        Ok(())
    }

    /// Whole sweep as CSV text with header.
    pub fn to_csv(&self) -> Result<String> {
        write_csv(std::slice::from_ref(self))
    }
}

pub fn write_csv(sweeps: &[SweepResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(|e| Error::Io(e.to_string()))?;
    for s in sweeps {
        s.write_csv_rows(&mut w)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn check_increasing(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("empty sweep grid".into()));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sweep grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Q² versus launch power at a fixed span count.
pub fn sweep_power(cfg: &SimConfig, powers: &[f64]) -> Result<SweepResult> {
    check_increasing(powers)?;
    cfg.validate()?;
    let points = powers
        .par_iter()
        .map(|&p| {
            let point_cfg = SimConfig { power_dbm: p, ..cfg.clone() };
            let res = run_point(&point_cfg);
            SweepPoint {
                axis_value: p,
                power_dbm: p,
                spans: cfg.link.spans,
                distance_km: cfg.link.distance_km(),
                error: res.as_ref().err().map(|e| e.to_string()),
                record: res.ok(),
            }
        })
        .collect();
    Ok(SweepResult { axis: SweepAxis::PowerDbm, format: cfg.format, points, config: cfg.clone(), seed_scheme: SEED_SCHEME.into() })
}

/// Q² versus span count at fixed launch power.
///
/// Each realization is propagated once through the longest span count still
/// collecting errors; shorter points tap the field on the way. Results equal
/// independent [`run_point`] calls because seeds depend only on
/// `(realization, draw)`.
pub fn sweep_reach(cfg: &SimConfig, span_counts: &[usize]) -> Result<SweepResult> {
    let as_f64: Vec<f64> = span_counts.iter().map(|&s| s as f64).collect();
    check_increasing(&as_f64)?;
    cfg.validate()?;
    let c = standard_format(cfg.format)?;
    let mut tallies: Vec<Tally> = span_counts.iter().map(|_| Tally::default()).collect();
    let mut finished: Vec<Option<std::result::Result<RecordFlag, String>>> = vec![None; span_counts.len()];
    for r in 0..cfg.realization_cap {
        let Some(last) = finished.iter().rposition(Option::is_none) else { break };
        let tx = transmit(cfg, &c, r)?;
        let mut field = tx.field.clone();
        let mut at = 0usize;
        for (i, &spans) in span_counts.iter().enumerate().take(last + 1) {
            while at < spans {
                field = propagate_span(&field, &cfg.link.span, cfg.link.nonlinear_model)?;
                if cfg.link.dcf {
                    field = ideal_dcf(&field, cfg.link.span.accumulated_dispersion());
                }
                field = amplify(&field, cfg.link.amp_gain_db);
                at += 1;
            }
            if finished[i].is_some() {
                continue;
            }
            let point_cfg = SimConfig { link: LinkConfig { spans, ..cfg.link }, ..cfg.clone() };
            match accumulate(&point_cfg, &c, &tx, &field, spans, r, &mut tallies[i]) {
                Err(e) => finished[i] = Some(Err(e.to_string())),
                Ok(()) => {
                    if tallies[i].errors >= cfg.min_errors {
                        finished[i] = Some(Ok(RecordFlag::None));
                    } else if tallies[i].errors == 0 && is_noise_free(cfg, spans) {
                        finished[i] = Some(Ok(RecordFlag::ErrorFree));
                    }
                }
            }
        }
    }
    let points = span_counts
        .iter()
        .zip(tallies.iter().zip(finished))
        .map(|(&spans, (tally, fin))| {
            let outcome = fin.unwrap_or_else(|| {
                Ok(if tally.errors == 0 && is_noise_free(cfg, spans) { RecordFlag::ErrorFree } else { RecordFlag::UpperBound })
            });
            let (record, error) = match outcome {
                Ok(flag) => (Some(tally.finish(flag)), None),
                Err(e) => (None, Some(e)),
            };
            SweepPoint {
                axis_value: spans as f64,
                power_dbm: cfg.power_dbm,
                spans,
                distance_km: spans as f64 * cfg.link.span.length_km,
                record,
                error,
            }
        })
        .collect();
    Ok(SweepResult { axis: SweepAxis::Spans, format: cfg.format, points, config: cfg.clone(), seed_scheme: SEED_SCHEME.into() })
}

/// Abscissa where a piecewise-linear curve first falls through `threshold`.
pub fn interpolate_crossing(points: &[(f64, f64)], threshold: f64) -> Result<f64> {
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 >= threshold && y1 < threshold {
            return Ok(x0 + (y0 - threshold) / (y0 - y1) * (x1 - x0));
        }
    }
    Err(Error::ThresholdNotBracketed(threshold))
}

/// Distance (km) at which Q² crosses `threshold_db`, by linear interpolation
/// between unflagged points of a reach sweep.
pub fn reach_at_threshold(sweep: &SweepResult, threshold_db: f64) -> Result<f64> {
    if sweep.axis != SweepAxis::Spans {
        return Err(Error::InvalidParameter("reach needs a span-count sweep".into()));
    }
    let pts: Vec<(f64, f64)> = sweep.points.iter().filter_map(|p| p.q2_db().map(|q| (p.distance_km, q))).collect();
    interpolate_crossing(&pts, threshold_db)
}

/// Analytic Q² (dB) of Gray-coded PDM-QPSK for a per-polarization SNR.
pub fn qpsk_awgn_q2_db(snr_per_pol: f64) -> f64 {
    10.0 * snr_per_pol.log10()
}

/// Per-polarization SNR at the matched-filter output for a launch power and
/// a per-polarization noise PSD.
pub fn matched_filter_snr(power_dbm: f64, psd_per_pol: f64, baud: f64) -> f64 {
    crate::dsp::dbm_to_w(power_dbm) / 2.0 / (psd_per_pol * baud)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q2_examples() {
        assert!((q2_from_ber(1e-3).unwrap() - 9.80).abs() < 0.01);
        let one = 0.5 * statrs::function::erf::erfc(std::f64::consts::FRAC_1_SQRT_2);
        assert!(q2_from_ber(one).unwrap().abs() < 0.01);
        assert!((q2_from_ber(0.0394).unwrap() - 4.90).abs() < 0.02);
        assert!(matches!(q2_from_ber(0.5), Err(Error::NoDecisionGain(_))));
        assert!(matches!(q2_from_ber(0.0), Err(Error::NeedsErrors(_))));
    }

    #[test]
    fn crossing_midpoint() {
        let x = interpolate_crossing(&[(4500.0, 5.0), (4575.0, 4.8)], 4.9).unwrap();
        assert!((x - 4537.5).abs() < 1e-9);
        assert!(interpolate_crossing(&[(4500.0, 5.0), (4575.0, 4.8)], 6.0).is_err());
    }

    #[test]
    fn seeds_differ_by_stream() {
        let a = derive_seed(1, STREAM_DATA, 0, 0);
        let b = derive_seed(1, STREAM_NOISE, 0, 0);
        let c = derive_seed(1, STREAM_DATA, 0, 1);
        assert!(a != b && a != c && b != c);
        assert_eq!(a, derive_seed(1, STREAM_DATA, 0, 0));
    }

    #[test]
    fn default_sequence_length() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.slots(), 1 << 15);
        assert_eq!(cfg.samples_per_pol(), 2_097_152);
        let bpsk = SimConfig { format: FormatKind::PdmBpsk, ..SimConfig::default() };
        assert_eq!(bpsk.slots(), 1 << 16);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        assert!(SimConfig { channels: 4, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { seq_log2: 10, ..SimConfig::default() }.validate().is_err());
    }

    #[test]
    fn sweep_grid_must_increase() {
        let cfg = SimConfig::default();
        assert!(sweep_power(&cfg, &[-3.0, -5.0]).is_err());
        assert!(sweep_power(&cfg, &[]).is_err());
    }
}
