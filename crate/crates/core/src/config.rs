//! Flat TOML run configuration for the command-line front end.
//!
//! Every key is optional; missing keys take the defaults below. Unknown keys
//! are rejected so typos surface immediately.
//!
//! ```toml
//! format = ["PDM-QPSK", "PA-7B8D"]
//! channels = 3
//! sps = 16
//! seq_log2 = 13
//! spans = 20
//! powers_dbm = [-9, -7, -5, -3, -1]
//! seed = 7
//! ```

use serde::{Deserialize, Serialize};

use crate::channel::{LinkConfig, NonlinearModel, SpanParams};
use crate::error::{Error, Result};
use crate::formats::FormatKind;
use crate::montecarlo::SimConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(FormatKind),
    Many(Vec<FormatKind>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(with = "format_list")]
    pub format: Vec<FormatKind>,
    pub baud_hz: f64,
    pub sps: usize,
    pub rolloff: f64,
    pub rrc_span: usize,
    pub channels: usize,
    pub grid_hz: f64,
    pub seq_log2: u32,
    pub training_symbols: usize,
    pub eq_taps: usize,
    pub eq_step: f64,
    pub spans: usize,
    pub span_km: f64,
    pub alpha_db_km: f64,
    pub d_ps_nm_km: f64,
    pub gamma_w_km: f64,
    pub step_km: f64,
    pub nf_db: f64,
    pub nonlinear_model: NonlinearModel,
    /// Launch power of reach sweeps.
    pub power_dbm: f64,
    pub powers_dbm: Vec<f64>,
    pub span_counts: Vec<usize>,
    pub seed: u64,
    pub realization_cap: usize,
    pub min_errors: u64,
    pub noise_draws: usize,
}

mod format_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[FormatKind], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<FormatKind>, D::Error> {
        Ok(match OneOrMany::deserialize(d)? {
            OneOrMany::One(f) => vec![f],
            OneOrMany::Many(v) => v,
        })
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        let span = SpanParams::default();
        Self {
            format: FormatKind::ALL.to_vec(),
            baud_hz: sim.baud_hz,
            sps: sim.sps,
            rolloff: sim.rolloff,
            rrc_span: sim.rrc_span,
            channels: sim.channels,
            grid_hz: sim.grid_hz,
            seq_log2: sim.seq_log2,
            training_symbols: sim.training_symbols,
            eq_taps: sim.eq_taps,
            eq_step: sim.eq_step,
            spans: sim.link.spans,
            span_km: span.length_km,
            alpha_db_km: span.alpha_db_km,
            d_ps_nm_km: span.d_ps_nm_km,
            gamma_w_km: span.gamma_w_km,
            step_km: span.step_km,
            nf_db: sim.link.nf_db,
            nonlinear_model: NonlinearModel::Manakov,
            power_dbm: sim.power_dbm,
            powers_dbm: (-11..=-3).map(f64::from).collect(),
            span_counts: (1..=9).map(|k| 10 * k).collect(),
            seed: sim.seed,
            realization_cap: sim.realization_cap,
            min_errors: sim.min_errors,
            noise_draws: sim.noise_draws,
        }
    }
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.into(), message: message.into() }
}

fn strictly_increasing(key: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(config_err(key, "must not be empty"));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err(key, "must be strictly increasing"));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let key = e.span().map(|s| text[s].trim().to_string()).unwrap_or_default();
            config_err(&key, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.format.is_empty() {
            return Err(config_err("format", "at least one format is required"));
        }
        if let Some(f) = self.format.iter().find(|f| matches!(f, FormatKind::Searched(_))) {
            return Err(config_err("format", format!("{f} is not a transmission format")));
        }
        for (key, v) in [
            ("baud_hz", self.baud_hz),
            ("grid_hz", self.grid_hz),
            ("span_km", self.span_km),
            ("step_km", self.step_km),
            ("eq_step", self.eq_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(key, format!("{v} must be positive")));
            }
        }
        for (key, v) in [("alpha_db_km", self.alpha_db_km), ("gamma_w_km", self.gamma_w_km)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(config_err(key, format!("{v} must be non-negative")));
            }
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(config_err("rolloff", format!("{} outside [0, 1]", self.rolloff)));
        }
        if self.channels % 2 == 0 {
            return Err(config_err("channels", format!("{} must be odd", self.channels)));
        }
        if self.sps == 0 || self.sps % 2 != 0 {
            return Err(config_err("sps", format!("{} must be even and positive", self.sps)));
        }
        for (key, v) in [("realization_cap", self.realization_cap), ("noise_draws", self.noise_draws)] {
            if v == 0 {
                return Err(config_err(key, "must be positive"));
            }
        }
        strictly_increasing("powers_dbm", &self.powers_dbm)?;
        strictly_increasing("span_counts", &self.span_counts.iter().map(|&s| s as f64).collect::<Vec<_>>())?;
        for &f in &self.format {
            self.sim_config(f).validate().map_err(|e| config_err("*", e.to_string()))?;
        }
        Ok(())
    }

    /// Point configuration for one format at the configured span count and reach power.
    pub fn sim_config(&self, format: FormatKind) -> SimConfig {
        let span = SpanParams {
            length_km: self.span_km,
            alpha_db_km: self.alpha_db_km,
            d_ps_nm_km: self.d_ps_nm_km,
            gamma_w_km: self.gamma_w_km,
            step_km: self.step_km,
        };
        let link = LinkConfig { nf_db: self.nf_db, nonlinear_model: self.nonlinear_model, ..LinkConfig::new(self.spans, span) };
        SimConfig {
            format,
            baud_hz: self.baud_hz,
            sps: self.sps,
            rolloff: self.rolloff,
            rrc_span: self.rrc_span,
            channels: self.channels,
            grid_hz: self.grid_hz,
            seq_log2: self.seq_log2,
            training_symbols: self.training_symbols,
            eq_taps: self.eq_taps,
            eq_step: self.eq_step,
            link,
            power_dbm: self.power_dbm,
            seed: self.seed,
            realization_cap: self.realization_cap,
            min_errors: self.min_errors,
            noise_draws: self.noise_draws,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.powers_dbm.first(), Some(&-11.0));
        assert_eq!(cfg.span_counts.last(), Some(&90));
    }

    #[test]
    fn unknown_key_is_rejected_with_its_name() {
        let err = RunConfig::parse("chanels = 3\n").unwrap_err();
        match err {
            Error::Config { key, message } => {
                assert!(key.contains("chanels"), "{key}");
                assert!(message.contains("unknown field"), "{message}");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn single_format_string_accepted() {
        let cfg = RunConfig::parse("format = \"PB-5B8D\"\n").unwrap();
        assert_eq!(cfg.format, vec![FormatKind::Pb5b8d]);
    }

    #[test]
    fn invalid_values_name_their_key() {
        for (text, key) in [
            ("channels = 4", "channels"),
            ("powers_dbm = [-3.0, -5.0]", "powers_dbm"),
            ("rolloff = 1.5", "rolloff"),
            ("step_km = 0.0", "step_km"),
        ] {
            match RunConfig::parse(text) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn serialization_is_idempotent() {
        let cfg = RunConfig::parse("format = [\"PA-7B8D\", \"PDM-QPSK\"]\nspans = 20\nseed = 9\n").unwrap();
        let once = cfg.to_toml().unwrap();
        let twice = RunConfig::parse(&once).unwrap().to_toml().unwrap();
        assert_eq!(once, twice);
        assert_eq!(RunConfig::parse(&once).unwrap(), cfg);
    }

    #[test]
    fn sim_config_carries_link_settings() {
        let cfg = RunConfig::parse("spans = 20\nnf_db = 5.5\ngamma_w_km = 0.0\n").unwrap();
        let sim = cfg.sim_config(FormatKind::PdmQpsk);
        assert_eq!(sim.link.spans, 20);
        assert_eq!(sim.link.nf_db, 5.5);
        assert_eq!(sim.link.span.gamma_w_km, 0.0);
        assert!((sim.link.amp_gain_db - 15.0).abs() < 1e-12);
    }
}
