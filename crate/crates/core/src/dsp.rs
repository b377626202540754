//! FFT plumbing, unit conversions and the sampled dual-polarization field.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Reference carrier wavelength (m).
pub const LAMBDA_REF: f64 = 1550e-9;
/// Speed of light in vacuum (m/s).
pub const C_LIGHT: f64 = 299_792_458.0;
/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward DFT, in place.
pub fn fft(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// Inverse DFT scaled by `1/len`, in place.
pub fn ifft(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
    let s = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= s);
}

/// Frequency (Hz) of every DFT bin in natural FFT order.
pub fn fft_freqs(n: usize, sample_rate: f64) -> Vec<f64> {
    let df = sample_rate / n as f64;
    (0..n)
        .map(|k| if k < n.div_ceil(2) { k as f64 * df } else { (k as f64 - n as f64) * df })
        .collect()
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Dual-polarization complex baseband waveform; amplitudes in √W.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub sample_rate: f64,
    pub center_wavelength: f64,
}

impl SampledField {
    pub fn new(x: Vec<Complex64>, y: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidParameter(format!("polarization lengths differ: {} vs {}", x.len(), y.len())));
        }
        if !(sample_rate > 0.0) {
            return Err(Error::InvalidParameter(format!("sample rate {sample_rate} must be positive")));
        }
        Ok(Self { x, y, sample_rate, center_wavelength: LAMBDA_REF })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); len];
        Self { x: z.clone(), y: z, sample_rate, center_wavelength: LAMBDA_REF }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean total optical power (W).
    pub fn power_w(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.energy() / self.len() as f64
    }

    /// Sum of `|x|² + |y|²` over all samples.
    pub fn energy(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|v| v.norm_sqr()).sum()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        let mut out = self.clone();
        out.scale_in_place(alpha);
        out
    }

    pub fn scale_in_place(&mut self, alpha: Complex64) {
        self.x.iter_mut().chain(self.y.iter_mut()).for_each(|v| *v *= alpha);
    }

    /// Root-mean-square distance to `other` per complex sample.
    pub fn rms_diff(&self, other: &SampledField) -> f64 {
        let n = (self.len() * 2).max(1) as f64;
        let s: f64 = self
            .x
            .iter()
            .zip(&other.x)
            .chain(self.y.iter().zip(&other.y))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s / n).sqrt()
    }

    /// RMS amplitude per complex sample.
    pub fn rms(&self) -> f64 {
        (self.energy() / (self.len() * 2).max(1) as f64).sqrt()
    }

    /// Applies `h(f)` to both polarizations in the frequency domain.
    pub fn apply_transfer(&mut self, transfer: &[Complex64]) {
        assert_eq!(transfer.len(), self.len());
        for pol in [&mut self.x, &mut self.y] {
            fft(pol);
            pol.iter_mut().zip(transfer).for_each(|(v, h)| *v *= h);
            ifft(pol);
        }
    }
}

/// Multiplies by `exp(i·2π·hz·t)` exactly, sample by sample.
pub fn freq_shift(field: &SampledField, hz: f64) -> SampledField {
    let mut out = field.clone();
    if hz == 0.0 {
        return out;
    }
    let ratio = hz / field.sample_rate;
    for (n, (x, y)) in out.x.iter_mut().zip(out.y.iter_mut()).enumerate() {
        let cycles = ratio * n as f64;
        let rot = Complex64::from_polar(1.0, 2.0 * PI * (cycles - cycles.floor()));
        *x *= rot;
        *y *= rot;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_round_trip() {
        let orig: Vec<Complex64> = (0..37).map(|k| Complex64::new(k as f64, -(k as f64).sin())).collect();
        let mut v = orig.clone();
        fft(&mut v);
        ifft(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn freq_grid_is_symmetric() {
        let f = fft_freqs(8, 8.0);
        assert_eq!(f, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_w(0.0) - 1e-3).abs() < 1e-18);
        assert!((w_to_dbm(dbm_to_w(-7.3)) + 7.3).abs() < 1e-12);
    }

    #[test]
    fn mismatched_polarizations_rejected() {
        let z = vec![Complex64::new(0.0, 0.0); 3];
        assert!(SampledField::new(z.clone(), z[..2].to_vec(), 1.0).is_err());
        assert!(SampledField::new(z.clone(), z, 0.0).is_err());
    }
}
