//! The optical link: split-step Fourier propagation of the Manakov equation
//! over fiber spans, ideal in-line dispersion compensation, noiseless
//! amplification, and receiver-side ASE noise loading.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dsp::{db_to_lin, fft, fft_freqs, ifft, SampledField, C_LIGHT, PLANCK};
use crate::error::{Error, Result};

/// Relative RMS change tolerated when the SSFM step is halved.
pub const STEP_TOLERANCE: f64 = 1e-3;

/// Manakov nonlinear coefficient for randomly varying birefringence.
pub const MANAKOV_FACTOR: f64 = 8.0 / 9.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearModel {
    #[default]
    Manakov,
    /// Independent scalar NLSE per polarization, for analytic checks only.
    ScalarTest,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanParams {
    pub length_km: f64,
    pub alpha_db_km: f64,
    pub d_ps_nm_km: f64,
    pub gamma_w_km: f64,
    pub step_km: f64,
}

impl Default for SpanParams {
    /// LEAF-like fiber.
    fn default() -> Self {
        Self { length_km: 75.0, alpha_db_km: 0.2, d_ps_nm_km: 4.0, gamma_w_km: 1.3, step_km: 0.5 }
    }
}

impl SpanParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("length_km", self.length_km), ("step_km", self.step_km)] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        for (name, v) in [("alpha_db_km", self.alpha_db_km), ("d_ps_nm_km", self.d_ps_nm_km), ("gamma_w_km", self.gamma_w_km)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be non-negative")));
            }
        }
        Ok(())
    }

    /// Group-velocity dispersion β2 (s²/m) at `wavelength`.
    pub fn beta2(&self, wavelength: f64) -> f64 {
        beta2_from_d(self.d_ps_nm_km * 1e-6, wavelength)
    }

    /// Power attenuation coefficient (1/m).
    pub fn alpha_per_m(&self) -> f64 {
        self.alpha_db_km * std::f64::consts::LN_10 / 10.0 / 1e3
    }

    pub fn gamma_per_w_m(&self) -> f64 {
        self.gamma_w_km / 1e3
    }

    pub fn loss_db(&self) -> f64 {
        self.alpha_db_km * self.length_km
    }

    /// Accumulated dispersion of one span (ps/nm).
    pub fn accumulated_dispersion(&self) -> f64 {
        self.d_ps_nm_km * self.length_km
    }
}

/// β2 (s²/m) from a dispersion parameter `d` in s/m².
fn beta2_from_d(d: f64, wavelength: f64) -> f64 {
    -d * wavelength * wavelength / (2.0 * PI * C_LIGHT)
}

/// Effective length of a step whose power is referenced at its midpoint.
fn effective_length_mid(alpha: f64, h: f64) -> f64 {
    if alpha * h < 1e-12 {
        h
    } else {
        2.0 * (alpha * h / 2.0).sinh() / alpha
    }
}

struct LinearOperator {
    omega_sq: Vec<f64>,
    beta2: f64,
    alpha: f64,
    cache: HashMap<u64, Vec<Complex64>>,
}

impl LinearOperator {
    fn new(field: &SampledField, p: &SpanParams) -> Self {
        let omega_sq = fft_freqs(field.len(), field.sample_rate).iter().map(|f| (2.0 * PI * f).powi(2)).collect();
        Self { omega_sq, beta2: p.beta2(field.center_wavelength), alpha: p.alpha_per_m(), cache: HashMap::new() }
    }

    /// Transfer function over `dz` metres: loss and dispersion.
    fn transfer(&mut self, dz: f64) -> &[Complex64] {
        let (beta2, alpha) = (self.beta2, self.alpha);
        let omega_sq = &self.omega_sq;
        self.cache.entry(dz.to_bits()).or_insert_with(|| {
            let amp = (-alpha * dz / 2.0).exp();
            omega_sq.iter().map(|w2| Complex64::from_polar(amp, beta2 / 2.0 * w2 * dz)).collect()
        })
    }
}

fn nonlinear_step(field: &mut SampledField, gamma: f64, leff: f64, model: NonlinearModel) {
    match model {
        NonlinearModel::Manakov => {
            let k = gamma * MANAKOV_FACTOR * leff;
            for (x, y) in field.x.iter_mut().zip(field.y.iter_mut()) {
                let rot = Complex64::from_polar(1.0, k * (x.norm_sqr() + y.norm_sqr()));
                *x *= rot;
                *y *= rot;
            }
        }
        NonlinearModel::ScalarTest => {
            let k = gamma * leff;
            for v in field.x.iter_mut().chain(field.y.iter_mut()) {
                *v *= Complex64::from_polar(1.0, k * v.norm_sqr());
            }
        }
    }
}

fn step_lengths(length: f64, step: f64) -> Vec<f64> {
    let full = (length / step * (1.0 + 1e-12)).floor() as usize;
    let mut steps = vec![step; full];
    let rest = length - full as f64 * step;
    if rest > 1e-9 * length {
        steps.push(rest);
    }
    steps
}

/// Symmetric split-step integration over one span.
pub fn propagate_span(field: &SampledField, p: &SpanParams, model: NonlinearModel) -> Result<SampledField> {
    p.validate()?;
    Ok(propagate_span_with_step(field, p, model, p.step_km))
}

fn propagate_span_with_step(field: &SampledField, p: &SpanParams, model: NonlinearModel, step_km: f64) -> SampledField {
    let steps = step_lengths(p.length_km * 1e3, step_km * 1e3);
    let mut op = LinearOperator::new(field, p);
    let gamma = p.gamma_per_w_m();
    let alpha = p.alpha_per_m();
    let mut out = field.clone();
    fft(&mut out.x);
    fft(&mut out.y);
    let mut pending = steps[0] / 2.0;
    for (i, &h) in steps.iter().enumerate() {
        let t = op.transfer(pending);
        out.x.iter_mut().zip(t).for_each(|(v, t)| *v *= t);
        out.y.iter_mut().zip(t).for_each(|(v, t)| *v *= t);
        if gamma > 0.0 {
            ifft(&mut out.x);
            ifft(&mut out.y);
            nonlinear_step(&mut out, gamma, effective_length_mid(alpha, h), model);
            fft(&mut out.x);
            fft(&mut out.y);
        }
        pending = h / 2.0 + steps.get(i + 1).map_or(0.0, |n| n / 2.0);
    }
    let t = op.transfer(pending);
    out.x.iter_mut().zip(t).for_each(|(v, t)| *v *= t);
    out.y.iter_mut().zip(t).for_each(|(v, t)| *v *= t);
    ifft(&mut out.x);
    ifft(&mut out.y);
    out
}

/// Relative RMS change of the span output when the step is halved; errors
/// when it exceeds [`STEP_TOLERANCE`].
pub fn check_step_convergence(field: &SampledField, p: &SpanParams, model: NonlinearModel) -> Result<f64> {
    p.validate()?;
    let coarse = propagate_span_with_step(field, p, model, p.step_km);
    let fine = propagate_span_with_step(field, p, model, p.step_km / 2.0);
    let rel = coarse.rms_diff(&fine) / fine.rms();
    if rel > STEP_TOLERANCE {
        Err(Error::StepNotConverged(rel))
    } else {
        Ok(rel)
    }
}

/// Lossless inverse of the dispersion accumulated over `accumulated_d` ps/nm.
pub fn ideal_dcf(field: &SampledField, accumulated_d: f64) -> SampledField {
    let mut out = field.clone();
    if accumulated_d == 0.0 {
        return out;
    }
    // β2·L from D·L given in ps/nm (1 ps/nm = 1e-3 s/m)
    let beta2_l = beta2_from_d(accumulated_d * 1e-3, field.center_wavelength);
    let transfer: Vec<Complex64> = fft_freqs(field.len(), field.sample_rate)
        .iter()
        .map(|f| Complex64::from_polar(1.0, -beta2_l / 2.0 * (2.0 * PI * f).powi(2)))
        .collect();
    out.apply_transfer(&transfer);
    out
}

/// Noiseless flat gain.
pub fn amplify(field: &SampledField, gain_db: f64) -> SampledField {
    field.scaled(Complex64::new(10f64.powf(gain_db / 20.0), 0.0))
}

/// One-sided ASE power spectral density per polarization (W/Hz) accumulated
/// over `spans` amplifiers: `spans·(F·G − 1)·h·ν/2`.
pub fn ase_psd_per_pol(spans: usize, nf_db: f64, gain_db: f64, wavelength: f64) -> f64 {
    let nu = C_LIGHT / wavelength;
    spans as f64 * (db_to_lin(nf_db) * db_to_lin(gain_db) - 1.0) * PLANCK * nu / 2.0
}

/// Adds circular white Gaussian noise to each polarization with the ASE
/// PSD of `spans` amplifiers.
pub fn load_noise<R: Rng + ?Sized>(
    field: &SampledField,
    spans: usize,
    nf_db: f64,
    gain_db: f64,
    rng: &mut R,
) -> Result<SampledField> {
    let mut out = field.clone();
    add_noise(&mut out, spans, nf_db, gain_db, rng)?;
    Ok(out)
}

pub(crate) fn add_noise<R: Rng + ?Sized>(
    field: &mut SampledField,
    spans: usize,
    nf_db: f64,
    gain_db: f64,
    rng: &mut R,
) -> Result<()> {
    if !(gain_db > 0.0) {
        return Err(Error::InvalidParameter(format!("amplifier gain {gain_db} dB must be positive")));
    }
    let psd = ase_psd_per_pol(spans, nf_db, gain_db, field.center_wavelength);
    if psd < -1e-30 {
        return Err(Error::InvalidParameter(format!("noise figure {nf_db} dB gives F·G < 1")));
    }
    if psd <= 0.0 {
        return Ok(());
    }
    let sigma = (psd * field.sample_rate / 2.0).sqrt();
    for v in field.x.iter_mut().chain(field.y.iter_mut()) {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(re * sigma, im * sigma);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub spans: usize,
    pub span: SpanParams,
    pub dcf: bool,
    pub amp_gain_db: f64,
    pub nf_db: f64,
    pub nonlinear_model: NonlinearModel,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self::new(60, SpanParams::default())
    }
}

impl LinkConfig {
    /// Link whose amplifiers exactly restore each span's loss.
    pub fn new(spans: usize, span: SpanParams) -> Self {
        Self { spans, span, dcf: true, amp_gain_db: span.loss_db(), nf_db: 7.0, nonlinear_model: NonlinearModel::Manakov }
    }

    pub fn validate(&self) -> Result<()> {
        self.span.validate()?;
        if (self.amp_gain_db - self.span.loss_db()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "amplifier gain {} dB does not restore the span loss {} dB",
                self.amp_gain_db,
                self.span.loss_db()
            )));
        }
        Ok(())
    }

    pub fn distance_km(&self) -> f64 {
        self.spans as f64 * self.span.length_km
    }

    /// Per-polarization ASE PSD loaded at the receiver.
    pub fn noise_psd_per_pol(&self, wavelength: f64) -> f64 {
        ase_psd_per_pol(self.spans, self.nf_db, self.amp_gain_db, wavelength)
    }
}

/// Runs the spans without loading noise: `[span → DCF → amplifier] × spans`.
pub fn propagate_link(field: &SampledField, cfg: &LinkConfig) -> Result<SampledField> {
    cfg.validate()?;
    let mut f = field.clone();
    for _ in 0..cfg.spans {
        f = propagate_span(&f, &cfg.span, cfg.nonlinear_model)?;
        if cfg.dcf {
            f = ideal_dcf(&f, cfg.span.accumulated_dispersion());
        }
        f = amplify(&f, cfg.amp_gain_db);
    }
    Ok(f)
}

/// Full link: spans, then receiver noise loading for all amplifiers at once.
pub fn run_link<R: Rng + ?Sized>(field: &SampledField, cfg: &LinkConfig, rng: &mut R) -> Result<SampledField> {
    let f = propagate_link(field, cfg)?;
    if cfg.spans == 0 {
        return Ok(f);
    }
    load_noise(&f, cfg.spans, cfg.nf_db, cfg.amp_gain_db, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::w_to_dbm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_field(n: usize, fs: f64, seed: u64) -> SampledField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = || Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * 1e-2;
        let x = (0..n).map(|_| g()).collect();
        let y = (0..n).map(|_| g()).collect();
        SampledField::new(x, y, fs).unwrap()
    }

    #[test]
    fn step_lengths_cover_span() {
        let s = step_lengths(75e3, 0.5e3);
        assert_eq!(s.len(), 150);
        let s = step_lengths(10e3, 3e3);
        assert_eq!(s.len(), 4);
        assert!((s.iter().sum::<f64>() - 10e3).abs() < 1e-6);
    }

    #[test]
    fn beta2_of_leaf() {
        // D = 4 ps/(nm·km) → β2 ≈ −5.1 ps²/km
        let b2 = SpanParams::default().beta2(1550e-9) * 1e24 * 1e3;
        assert!((b2 + 5.1).abs() < 0.05, "{b2}");
    }

    #[test]
    fn loss_only_span() {
        let p = SpanParams { d_ps_nm_km: 0.0, gamma_w_km: 0.0, ..SpanParams::default() };
        let f = random_field(256, 1e12, 1);
        let out = propagate_span(&f, &p, NonlinearModel::Manakov).unwrap();
        let drop = w_to_dbm(f.power_w()) - w_to_dbm(out.power_w());
        assert!((drop - 15.0).abs() < 1e-9, "{drop}");
    }

    #[test]
    fn amplify_composes() {
        let f = random_field(64, 1e12, 2);
        let a = amplify(&amplify(&f, 3.0), 4.5);
        let b = amplify(&f, 7.5);
        assert!(a.rms_diff(&b) < 1e-15);
        assert_eq!(amplify(&f, 0.0), f);
    }

    #[test]
    fn dcf_zero_is_identity() {
        let f = random_field(64, 1e12, 3);
        assert_eq!(ideal_dcf(&f, 0.0), f);
    }

    #[test]
    fn double_dcf_is_not_identity() {
        let spec_fs = 512e9;
        let f = random_field(1024, spec_fs, 4);
        let p = SpanParams { alpha_db_km: 0.0, gamma_w_km: 0.0, ..SpanParams::default() };
        let disp = propagate_span(&f, &p, NonlinearModel::Manakov).unwrap();
        let once = ideal_dcf(&disp, p.accumulated_dispersion());
        let twice = ideal_dcf(&once, p.accumulated_dispersion());
        assert!(once.rms_diff(&f) < 1e-9 * f.rms().max(1.0));
        assert!(twice.rms_diff(&f) > 1e-3 * f.rms());
    }

    #[test]
    fn unity_noise_factor_adds_nothing() {
        let f = random_field(64, 1e12, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = load_noise(&f, 10, -15.0, 15.0, &mut rng).unwrap();
        assert_eq!(out, f);
        assert!(load_noise(&f, 10, 7.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn link_gain_must_restore_loss() {
        let mut cfg = LinkConfig::new(3, SpanParams::default());
        assert!(cfg.validate().is_ok());
        assert!((cfg.amp_gain_db - 15.0).abs() < 1e-12);
        cfg.amp_gain_db = 10.0;
        assert!(cfg.validate().is_err());
    }
}
