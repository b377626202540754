//! Transmitter and receiver DSP: RRC pulse shaping, WDM multiplexing,
//! channel selection with matched filtering, and the 2×2 butterfly equalizer.
//!
//! All filtering is cyclic: a field holds one period of a periodic signal,
//! matching the periodic boundary of the split-step propagation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{dbm_to_w, fft, freq_shift, ifft, SampledField};
use crate::error::{Error, Result};
use crate::geom8d::{JonesVector, Symbol8D};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseShapeSpec {
    pub rolloff: f64,
    pub sps: usize,
    /// Filter support in symbols.
    pub span: usize,
    pub baud: f64,
}

impl Default for PulseShapeSpec {
    fn default() -> Self {
        Self { rolloff: 0.1, sps: 64, span: 64, baud: 32e9 }
    }
}

impl PulseShapeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(Error::InvalidParameter(format!("roll-off {} outside (0, 1]", self.rolloff)));
        }
        if self.sps < 2 || self.sps % 2 != 0 {
            return Err(Error::InvalidParameter(format!("samples per symbol {} must be even", self.sps)));
        }
        if self.span < 16 {
            return Err(Error::InvalidParameter(format!("filter span {} below 16 symbols", self.span)));
        }
        if !(self.baud > 0.0) {
            return Err(Error::InvalidParameter(format!("baud rate {} must be positive", self.baud)));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.baud * self.sps as f64
    }

    /// Two-sided occupied bandwidth `baud·(1 + rolloff)`.
    pub fn occupied_bandwidth(&self) -> f64 {
        self.baud * (1.0 + self.rolloff)
    }
}

/// Root-raised-cosine impulse response of `span·sps + 1` taps with unit energy.
pub fn rrc_taps(spec: &PulseShapeSpec) -> Vec<f64> {
    let beta = spec.rolloff;
    let len = spec.span * spec.sps + 1;
    let mid = (len / 2) as f64;
    let mut h: Vec<f64> = (0..len)
        .map(|k| {
            let t = (k as f64 - mid) / spec.sps as f64;
            rrc_value(t, beta)
        })
        .collect();
    let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    h.iter_mut().for_each(|v| *v /= norm);
    h
}

/// RRC pulse at time `t` in symbol periods (unnormalized).
fn rrc_value(t: f64, beta: f64) -> f64 {
    const EPS: f64 = 1e-9;
    if t.abs() < EPS {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if ((4.0 * beta * t).abs() - 1.0).abs() < EPS {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
    num / den
}

/// DFT of the taps laid out cyclically around sample 0, length `n`.
fn cyclic_response(taps: &[f64], n: usize) -> Vec<Complex64> {
    let mid = (taps.len() / 2) as i64;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (k, &h) in taps.iter().enumerate() {
        let idx = (k as i64 - mid).rem_euclid(n as i64) as usize;
        buf[idx] += h;
    }
    fft(&mut buf);
    buf
}

/// Splits 8D symbols into their two consecutive 4D time slots.
pub fn slots_of(symbols: &[Symbol8D]) -> Vec<JonesVector> {
    symbols.iter().flat_map(|s| [s.t1, s.t2]).collect()
}

/// Pulse-shapes a slot sequence and returns the field together with the
/// amplitude a unit rail value has at the matched-filter output.
pub fn pulse_shape_slots(slots: &[JonesVector], spec: &PulseShapeSpec, power_dbm: f64) -> Result<(SampledField, f64)> {
    spec.validate()?;
    if slots.is_empty() {
        return Err(Error::InvalidParameter("empty symbol sequence".into()));
    }
    let n = slots.len() * spec.sps;
    let mut field = SampledField::zeros(n, spec.sample_rate());
    for (m, s) in slots.iter().enumerate() {
        field.x[m * spec.sps] = s.ex;
        field.y[m * spec.sps] = s.ey;
    }
    let h = cyclic_response(&rrc_taps(spec), n);
    field.apply_transfer(&h);
    let p = field.power_w();
    if !(p > 0.0) {
        return Err(Error::InvalidParameter("symbol sequence carries no power".into()));
    }
    let gain = (dbm_to_w(power_dbm) / p).sqrt();
    field.scale_in_place(Complex64::new(gain, 0.0));
    Ok((field, gain))
}

/// RRC-shaped dual-polarization waveform of a symbol stream at `power_dbm` average power.
pub fn pulse_shape(symbols: &[Symbol8D], spec: &PulseShapeSpec, power_dbm: f64) -> Result<SampledField> {
    Ok(pulse_shape_slots(&slots_of(symbols), spec, power_dbm)?.0)
}

fn check_grid(count: usize, sample_rate: f64, grid_hz: f64, spec: &PulseShapeSpec) -> Result<()> {
    let needed = (count as f64 - 1.0) * grid_hz + spec.occupied_bandwidth();
    if sample_rate <= needed {
        return Err(Error::Aliasing(format!(
            "sample rate {sample_rate:.4e} Hz does not exceed the occupied band {needed:.4e} Hz"
        )));
    }
    Ok(())
}

/// Frequency-multiplexes an odd number of channels on a uniform grid,
/// channel `k` (centered indexing) shifted by `k·grid_hz`.
pub fn wdm_mux(channels: &[SampledField], grid_hz: f64, spec: &PulseShapeSpec) -> Result<SampledField> {
    let first = channels.first().ok_or_else(|| Error::InvalidParameter("no channels".into()))?;
    if channels.len() % 2 == 0 {
        return Err(Error::InvalidParameter(format!("channel count {} must be odd", channels.len())));
    }
    if channels.iter().any(|c| c.sample_rate != first.sample_rate || c.len() != first.len()) {
        return Err(Error::InvalidParameter("channels differ in sample rate or length".into()));
    }
    check_grid(channels.len(), first.sample_rate, grid_hz, spec)?;
    let half = (channels.len() / 2) as i64;
    let mut out = SampledField::zeros(first.len(), first.sample_rate);
    for (i, ch) in channels.iter().enumerate() {
        let shifted = freq_shift(ch, (i as i64 - half) as f64 * grid_hz);
        for (o, v) in out.x.iter_mut().zip(&shifted.x) {
            *o += v;
        }
        for (o, v) in out.y.iter_mut().zip(&shifted.y) {
            *o += v;
        }
    }
    Ok(out)
}

/// Brings channel `k` to baseband, applies the matched RRC filter and
/// decimates to 2 samples per symbol (even output samples sit on symbol
/// centers). Decimation keeps the DFT bins of the output band, which holds
/// the whole filtered spectrum.
pub fn channel_select(field: &SampledField, k: i64, grid_hz: f64, spec: &PulseShapeSpec) -> Result<SampledField> {
    spec.validate()?;
    if (field.sample_rate - spec.sample_rate()).abs() > 1e-6 * spec.sample_rate() {
        return Err(Error::Aliasing(format!(
            "field sampled at {:.4e} Hz but pulse spec implies {:.4e} Hz",
            field.sample_rate,
            spec.sample_rate()
        )));
    }
    let edge = k.unsigned_abs() as f64 * grid_hz + spec.occupied_bandwidth() / 2.0;
    if edge >= field.sample_rate / 2.0 {
        return Err(Error::Aliasing(format!("channel {k} lies outside the simulated band")));
    }
    let n = field.len();
    let factor = spec.sps / 2;
    if n % factor != 0 || (n / factor) % 2 != 0 {
        return Err(Error::Aliasing(format!("field length {n} not decimable by {factor}")));
    }
    let n2 = n / factor;
    let shifted = freq_shift(field, -(k as f64) * grid_hz);
    let h = cyclic_response(&rrc_taps(spec), n);
    let mut pols = [shifted.x, shifted.y];
    for pol in pols.iter_mut() {
        fft(pol);
        let mut narrow = vec![Complex64::new(0.0, 0.0); n2];
        for j in 0..n2 {
            let src = if j < n2 / 2 { j } else { n - n2 + j };
            narrow[j] = pol[src] * h[src];
        }
        ifft(&mut narrow);
        // ifft scaled by 1/n2, the time-domain decimation needs 1/n
        let s = n2 as f64 / n as f64;
        narrow.iter_mut().for_each(|v| *v *= s);
        *pol = narrow;
    }
    let [x, y] = pols;
    SampledField::new(x, y, 2.0 * spec.baud)
}

/// Samples a 2-sample-per-symbol field on its symbol centers.
pub fn symbol_centers(field: &SampledField) -> Vec<JonesVector> {
    field.x.iter().zip(&field.y).step_by(2).map(|(x, y)| JonesVector::new(*x, *y)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualizerConfig {
    pub taps: usize,
    pub training_symbols: usize,
    pub step_size: f64,
    /// Samples per symbol at the equalizer input.
    pub spacing: usize,
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        Self { taps: 11, training_symbols: 1024, step_size: 1e-3, spacing: 2 }
    }
}

impl EqualizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taps % 2 == 0 {
            return Err(Error::InvalidParameter(format!("tap count {} must be odd", self.taps)));
        }
        if self.training_symbols < self.taps {
            return Err(Error::InvalidParameter("fewer training symbols than taps".into()));
        }
        if self.spacing != 2 {
            return Err(Error::InvalidParameter("the equalizer runs at 2 samples per symbol".into()));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidParameter("step size must be positive".into()));
        }
        Ok(())
    }
}

/// The four FIR branches of the 2×2 butterfly.
#[derive(Clone, Debug, PartialEq)]
pub struct ButterflyTaps {
    pub xx: Vec<Complex64>,
    pub xy: Vec<Complex64>,
    pub yx: Vec<Complex64>,
    pub yy: Vec<Complex64>,
}

impl ButterflyTaps {
    fn centered(n: usize, m: [[Complex64; 2]; 2]) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let mut t = Self { xx: zero.clone(), xy: zero.clone(), yx: zero.clone(), yy: zero };
        let c = n / 2;
        t.xx[c] = m[0][0];
        t.xy[c] = m[0][1];
        t.yx[c] = m[1][0];
        t.yy[c] = m[1][1];
        t
    }

    fn energy(v: &[Complex64]) -> f64 {
        v.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Off-diagonal over diagonal tap energy.
    pub fn cross_ratio(&self) -> f64 {
        (Self::energy(&self.xy) + Self::energy(&self.yx)) / (Self::energy(&self.xx) + Self::energy(&self.yy))
    }
}

#[derive(Clone, Debug)]
pub struct Equalized {
    /// One dual-polarization sample per symbol, for the whole sequence.
    pub symbols: Vec<JonesVector>,
    pub taps: ButterflyTaps,
    /// Training MSE (per polarization) before adaptation, identity taps.
    pub initial_mse: f64,
    /// Training MSE with the frozen taps.
    pub training_mse: f64,
}

struct Window<'a> {
    x: &'a [Complex64],
    y: &'a [Complex64],
}

impl Window<'_> {
    fn at(&self, taps: &ButterflyTaps, m: usize) -> (Complex64, Complex64) {
        let n = self.x.len();
        let c = taps.xx.len() / 2;
        let base = 2 * m + n - c;
        let mut ox = Complex64::new(0.0, 0.0);
        let mut oy = Complex64::new(0.0, 0.0);
        for j in 0..taps.xx.len() {
            let idx = (base + j) % n;
            let (ux, uy) = (self.x[idx], self.y[idx]);
            ox += taps.xx[j] * ux + taps.xy[j] * uy;
            oy += taps.yx[j] * ux + taps.yy[j] * uy;
        }
        (ox, oy)
    }
}

/// Least-squares 2×2 Jones matrix mapping received centers onto the training symbols.
fn ls_jones(rx: &[JonesVector], tx: &[JonesVector]) -> Option<[[Complex64; 2]; 2]> {
    let zero = Complex64::new(0.0, 0.0);
    let mut drh = [[zero; 2]; 2];
    let mut rrh = [[zero; 2]; 2];
    for (r, d) in rx.iter().zip(tx) {
        let rv = [r.ex, r.ey];
        let dv = [d.ex, d.ey];
        for i in 0..2 {
            for j in 0..2 {
                drh[i][j] += dv[i] * rv[j].conj();
                rrh[i][j] += rv[i] * rv[j].conj();
            }
        }
    }
    let det = rrh[0][0] * rrh[1][1] - rrh[0][1] * rrh[1][0];
    let scale = rrh[0][0].norm() * rrh[1][1].norm();
    if !(det.norm() > 1e-12 * scale) {
        return None;
    }
    let inv = [[rrh[1][1] / det, -rrh[0][1] / det], [-rrh[1][0] / det, rrh[0][0] / det]];
    let mut w = [[zero; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            w[i][j] = drh[i][0] * inv[0][j] + drh[i][1] * inv[1][j];
        }
    }
    Some(w)
}

/// Data-aided 2×2 butterfly FIR equalizer.
///
/// The input is scaled so its symbol centers match the training power, the
/// center taps start from the least-squares Jones matrix over the training
/// block, then one LMS pass over the training symbols adapts all taps, which
/// stay frozen for the rest of the sequence. Training symbols start at slot 0.
pub fn equalize(field: &SampledField, training: &[JonesVector], cfg: &EqualizerConfig) -> Result<Equalized> {
    cfg.validate()?;
    if training.len() != cfg.training_symbols {
        return Err(Error::InvalidParameter(format!(
            "{} training symbols supplied, {} configured",
            training.len(),
            cfg.training_symbols
        )));
    }
    if field.len() % 2 != 0 || field.len() / 2 < training.len() {
        return Err(Error::InvalidParameter("field shorter than the training block".into()));
    }
    let slots = field.len() / 2;
    let centers = symbol_centers(field);
    let p_rx: f64 = centers[..training.len()].iter().map(JonesVector::power).sum();
    let p_tx: f64 = training.iter().map(JonesVector::power).sum();
    if !(p_rx > 0.0) {
        return Err(Error::InvalidParameter("received field carries no power".into()));
    }
    let agc = Complex64::new((p_tx / p_rx).sqrt(), 0.0);
    let x: Vec<Complex64> = field.x.iter().map(|v| v * agc).collect();
    let y: Vec<Complex64> = field.y.iter().map(|v| v * agc).collect();
    let win = Window { x: &x, y: &y };

    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let identity = ButterflyTaps::centered(cfg.taps, [[one, zero], [zero, one]]);
    let mse = |taps: &ButterflyTaps| -> f64 {
        training
            .iter()
            .enumerate()
            .map(|(m, d)| {
                let (ox, oy) = win.at(taps, m);
                (d.ex - ox).norm_sqr() + (d.ey - oy).norm_sqr()
            })
            .sum::<f64>()
            / (2 * training.len()) as f64
    };
    let initial_mse = mse(&identity);

    let scaled_centers: Vec<JonesVector> =
        centers[..training.len()].iter().map(|j| JonesVector::new(j.ex * agc, j.ey * agc)).collect();
    let mut taps = match ls_jones(&scaled_centers, training) {
        Some(m) => ButterflyTaps::centered(cfg.taps, m),
        None => identity.clone(),
    };

    let mu = cfg.step_size;
    let n = x.len();
    let c = cfg.taps / 2;
    for (m, d) in training.iter().enumerate() {
        let (ox, oy) = win.at(&taps, m);
        let ex = (d.ex - ox) * mu;
        let ey = (d.ey - oy) * mu;
        let base = 2 * m + n - c;
        for j in 0..cfg.taps {
            let idx = (base + j) % n;
            let (ux, uy) = (x[idx].conj(), y[idx].conj());
            taps.xx[j] += ex * ux;
            taps.xy[j] += ex * uy;
            taps.yx[j] += ey * ux;
            taps.yy[j] += ey * uy;
        }
    }

    let training_mse = mse(&taps);
    if !training_mse.is_finite() || training_mse > initial_mse {
        return Err(Error::EqualizerDiverged { initial_mse, final_mse: training_mse });
    }
    let symbols = (0..slots)
        .map(|m| {
            let (ox, oy) = win.at(&taps, m);
            JonesVector::new(ox, oy)
        })
        .collect();
    Ok(Equalized { symbols, taps, initial_mse, training_mse })
}
