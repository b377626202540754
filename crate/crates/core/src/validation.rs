//! Self-check suite for the simulation chain: split-step propagation against
//! closed forms, dispersion compensation, noise loading, RRC Nyquist
//! property, and equalizer convergence.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{
    amplify, check_step_convergence, ideal_dcf, load_noise, propagate_span, NonlinearModel, SpanParams, MANAKOV_FACTOR,
};
use crate::dsp::{fft, fft_freqs, lin_to_db, SampledField};
use crate::error::Result;
use crate::geom8d::JonesVector;
use crate::waveform::{channel_select, equalize, pulse_shape_slots, rrc_taps, wdm_mux, EqualizerConfig, PulseShapeSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub unit: &'static str,
    pub pass: bool,
}

impl ValidationCheck {
    fn at_most(name: &'static str, value: f64, limit: f64, unit: &'static str) -> Self {
        Self { name, value, limit, unit, pass: value <= limit }
    }
}

impl fmt::Display for ValidationCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<40} {:>12.4e} {} (limit {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.unit,
            self.limit
        )
    }
}

fn test_spec() -> PulseShapeSpec {
    PulseShapeSpec { sps: 16, ..PulseShapeSpec::default() }
}

/// Random unit-energy PDM-QPSK slots.
pub fn random_qpsk_slots(n: usize, seed: u64) -> Vec<JonesVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rail = || {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(if rng.random::<bool>() { s } else { -s }, if rng.random::<bool>() { s } else { -s })
    };
    (0..n).map(|_| JonesVector::new(rail(), rail())).collect()
}

fn relative_rms(a: &SampledField, b: &SampledField) -> f64 {
    a.rms_diff(b) / b.rms()
}

/// Dispersion and loss only: split-step output against the one-shot transfer function.
pub fn dispersion_only() -> Result<ValidationCheck> {
    let spec = test_spec();
    let (field, _) = pulse_shape_slots(&random_qpsk_slots(512, 11), &spec, 0.0)?;
    let span = SpanParams { gamma_w_km: 0.0, ..SpanParams::default() };
    let out = propagate_span(&field, &span, NonlinearModel::Manakov)?;
    let l = span.length_km * 1e3;
    let (alpha, beta2) = (span.alpha_per_m(), span.beta2(field.center_wavelength));
    let transfer: Vec<Complex64> = fft_freqs(field.len(), field.sample_rate)
        .iter()
        .map(|f| Complex64::from_polar((-alpha * l / 2.0).exp(), beta2 / 2.0 * (2.0 * std::f64::consts::PI * f).powi(2) * l))
        .collect();
    let mut expected = field.clone();
    expected.apply_transfer(&transfer);
    Ok(ValidationCheck::at_most("dispersion-only SSFM vs analytic", relative_rms(&out, &expected), 1e-9, "rel rms"))
}

/// CW nonlinear phase after one lossy span: `γ·(8/9)·P·Leff`.
pub fn cw_manakov_phase() -> Result<ValidationCheck> {
    let p: f64 = 10e-3;
    let n = 256;
    let ex = Complex64::new((0.3 * p).sqrt(), 0.0);
    let ey = Complex64::new(0.0, (0.7 * p).sqrt());
    let field = SampledField::new(vec![ex; n], vec![ey; n], 512e9)?;
    let span = SpanParams::default();
    let out = propagate_span(&field, &span, NonlinearModel::Manakov)?;
    let alpha = span.alpha_per_m();
    let leff = (1.0 - (-alpha * span.length_km * 1e3).exp()) / alpha;
    let expected = span.gamma_per_w_m() * MANAKOV_FACTOR * p * leff;
    let worst = out
        .x
        .iter()
        .zip(&out.y)
        .map(|(x, y)| {
            let px = (x / ex).arg();
            let py = (y / ey).arg();
            ((px - expected).abs().max((py - expected).abs())) / expected
        })
        .fold(0.0, f64::max);
    Ok(ValidationCheck::at_most("CW Manakov nonlinear phase", worst, 1e-9, "rel"))
}

/// Span with loss and dispersion, then ideal DCF and gain: identity.
pub fn dcf_identity() -> Result<ValidationCheck> {
    let spec = test_spec();
    let (field, _) = pulse_shape_slots(&random_qpsk_slots(512, 12), &spec, 0.0)?;
    let span = SpanParams { gamma_w_km: 0.0, ..SpanParams::default() };
    let out = amplify(
        &ideal_dcf(&propagate_span(&field, &span, NonlinearModel::Manakov)?, span.accumulated_dispersion()),
        span.loss_db(),
    );
    Ok(ValidationCheck::at_most("dispersion + ideal DCF identity", relative_rms(&out, &field), 1e-9, "rel rms"))
}

/// Receiver noise loading: per-polarization PSD, total and per spectral band.
pub fn noise_psd() -> Result<ValidationCheck> {
    let n = 1 << 20;
    let fs = 512e9;
    let (spans, nf, gain) = (60, 7.0, 15.0);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let noisy = load_noise(&SampledField::zeros(n, fs), spans, nf, gain, &mut rng)?;
    let expected = crate::channel::ase_psd_per_pol(spans, nf, gain, noisy.center_wavelength);
    let bands = 8;
    let mut worst: f64 = 0.0;
    for pol in [&noisy.x, &noisy.y] {
        let total = pol.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64 / fs;
        worst = worst.max((total / expected - 1.0).abs());
        let mut spectrum = pol.clone();
        fft(&mut spectrum);
        for band in spectrum.chunks(n / bands) {
            let psd = band.iter().map(|v| v.norm_sqr()).sum::<f64>() / band.len() as f64 / (n as f64 * fs);
            worst = worst.max((psd / expected - 1.0).abs());
        }
    }
    Ok(ValidationCheck::at_most("noise PSD vs closed form", worst, 0.01, "rel"))
}

/// Step halving on a 3-channel WDM signal at −3 dBm per channel.
pub fn step_halving() -> Result<ValidationCheck> {
    let spec = test_spec();
    let chans: Vec<SampledField> = (0..3)
        .map(|k| pulse_shape_slots(&random_qpsk_slots(512, 20 + k), &spec, -3.0).map(|r| r.0))
        .collect::<Result<_>>()?;
    let field = wdm_mux(&chans, 37.5e9, &spec)?;
    let rel = match check_step_convergence(&field, &SpanParams::default(), NonlinearModel::Manakov) {
        Ok(r) => r,
        Err(crate::Error::StepNotConverged(r)) => r,
        Err(e) => return Err(e),
    };
    Ok(ValidationCheck::at_most("SSFM step halving at -3 dBm", rel, crate::channel::STEP_TOLERANCE, "rel rms"))
}

/// Intersymbol interference of the transmit and matched RRC cascade at the
/// symbol instants, relative to the main tap.
pub fn rrc_cascade_isi(spec: &PulseShapeSpec) -> f64 {
    let h = rrc_taps(spec);
    let len = h.len();
    let mid = len as i64 - 1;
    let at = |lag: i64| -> f64 {
        (0..len as i64)
            .filter_map(|i| {
                let j = lag + mid - i;
                (0..len as i64).contains(&j).then(|| h[i as usize] * h[j as usize])
            })
            .sum()
    };
    let main = at(0);
    let sps = spec.sps as i64;
    let isi: f64 = (1..=spec.span as i64).map(|k| at(k * sps).powi(2) + at(-k * sps).powi(2)).sum();
    lin_to_db(isi / (main * main))
}

pub fn rrc_isi() -> Result<ValidationCheck> {
    Ok(ValidationCheck::at_most("RRC cascade ISI", rrc_cascade_isi(&PulseShapeSpec::default()), -40.0, "dB"))
}

/// Mean squared error (dB) between equalized payload and transmitted slots.
fn equalized_mse_db(received: &SampledField, tx: &[JonesVector], cfg: &EqualizerConfig) -> Result<(f64, f64)> {
    let spec = test_spec();
    let selected = channel_select(received, 0, 37.5e9, &spec)?;
    let eq = equalize(&selected, &tx[..cfg.training_symbols], cfg)?;
    let mse = eq
        .symbols
        .iter()
        .zip(tx)
        .map(|(o, d)| (o.ex - d.ex).norm_sqr() + (o.ey - d.ey).norm_sqr())
        .sum::<f64>()
        / (2 * tx.len()) as f64;
    Ok((lin_to_db(mse), lin_to_db(eq.taps.cross_ratio())))
}

pub fn equalizer_identity() -> Result<Vec<ValidationCheck>> {
    let tx = random_qpsk_slots(4096, 30);
    let (field, _) = pulse_shape_slots(&tx, &test_spec(), 0.0)?;
    let (mse, cross) = equalized_mse_db(&field, &tx, &EqualizerConfig::default())?;
    Ok(vec![
        ValidationCheck::at_most("equalizer identity channel MSE", mse, -30.0, "dB"),
        ValidationCheck::at_most("equalizer identity off-diagonal taps", cross, -30.0, "dB"),
    ])
}

pub fn equalizer_rotation() -> Result<ValidationCheck> {
    let tx = random_qpsk_slots(4096, 31);
    let (mut field, _) = pulse_shape_slots(&tx, &test_spec(), 0.0)?;
    let x = field.x.clone();
    field.x = field.y.iter().map(|v| -v).collect();
    field.y = x;
    let (mse, _) = equalized_mse_db(&field, &tx, &EqualizerConfig::default())?;
    Ok(ValidationCheck::at_most("equalizer 90 degree rotation MSE", mse, -30.0, "dB"))
}

/// Runs every check; errors inside a check count as failures.
pub fn run_channel_validation() -> Vec<std::result::Result<ValidationCheck, (String, crate::Error)>> {
    let mut out = Vec::new();
    let single: [(&str, fn() -> Result<ValidationCheck>); 7] = [
        ("dispersion-only SSFM vs analytic", dispersion_only),
        ("CW Manakov nonlinear phase", cw_manakov_phase),
        ("dispersion + ideal DCF identity", dcf_identity),
        ("noise PSD vs closed form", noise_psd),
        ("SSFM step halving at -3 dBm", step_halving),
        ("RRC cascade ISI", rrc_isi),
        ("equalizer 90 degree rotation MSE", equalizer_rotation),
    ];
    for (name, f) in single {
        out.push(f().map_err(|e| (name.to_string(), e)));
    }
    match equalizer_identity() {
        Ok(v) => out.extend(v.into_iter().map(Ok)),
        Err(e) => out.push(Err(("equalizer identity".into(), e))),
    }
    out
}
