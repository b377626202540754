//! Command implementations behind the `sp8d` binary. Each command returns its
//! report text and process exit code so it can be driven from tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::{
    find_convention, fit_overhead_anf, render_report_table, search_partition, standard_format, verify_formats,
    FormatKind, SearchOptions,
};
use crate::geom8d::Constellation;
use crate::montecarlo::{sweep_power, sweep_reach, write_csv, SimConfig, SweepAxis, SweepResult, SEED_SCHEME};
use crate::plot::sweep_charts;
use crate::validation::run_channel_validation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "SP8D_THREADS";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

pub fn exit_code_of(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

/// Verification report for an explicit set of constellations.
pub fn verify_constellations(pb: &Constellation, pa: &Constellation, qpsk: &Constellation, bpsk: &Constellation) -> Outcome {
    let v = verify_formats(pb, pa, qpsk, bpsk);
    Outcome { text: v.render(), code: if v.ok() { EXIT_OK } else { EXIT_FAILURE } }
}

fn fallback_report() -> Result<String> {
    let mut text = String::from("no label convention satisfies the overhead formulas; searched partitions:\n\n");
    let mut reports = Vec::new();
    let mut fits = String::new();
    for bits in [5, 7] {
        let r = search_partition(bits, 0, &SearchOptions::default())?;
        if let Some(fit) = fit_overhead_anf(&r.constellation) {
            let _ = write!(fits, "\n{} labeling:\n{fit}", r.report.name);
        }
        reports.push(r.report);
    }
    text.push_str(&render_report_table(&reports));
    text.push_str(&fits);
    Ok(text)
}

pub fn cmd_verify_formats() -> Outcome {
    let built = || -> Result<[Constellation; 4]> {
        find_convention()?;
        Ok([
            standard_format(FormatKind::Pb5b8d)?,
            standard_format(FormatKind::Pa7b8d)?,
            standard_format(FormatKind::PdmQpsk)?,
            standard_format(FormatKind::PdmBpsk)?,
        ])
    };
    match built() {
        Ok([pb, pa, qpsk, bpsk]) => verify_constellations(&pb, &pa, &qpsk, &bpsk),
        Err(Error::NoConvention) => match fallback_report() {
            Ok(text) => Outcome { text, code: EXIT_FAILURE },
            Err(e) => Outcome { text: format!("error: {e}\n"), code: EXIT_FAILURE },
        },
        Err(e) => Outcome { text: format!("error: {e}\n"), code: exit_code_of(&e) },
    }
}

pub fn cmd_validate_channel() -> Outcome {
    let mut text = String::new();
    let mut ok = true;
    for r in run_channel_validation() {
        match r {
            Ok(c) => {
                ok &= c.pass;
                let _ = writeln!(text, "{c}");
            }
            Err((name, e)) => {
                ok = false;
                let _ = writeln!(text, "[FAIL] {name:<40} error: {e}");
            }
        }
    }
    Outcome { text, code: if ok { EXIT_OK } else { EXIT_FAILURE } }
}

/// Everything needed to reproduce the outputs of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub tool_version: String,
    pub master_seed: u64,
    pub seed_scheme: String,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub run_config: RunConfig,
    pub resolved: Vec<SimConfig>,
    pub outputs: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Power,
    Reach,
}

impl SweepKind {
    fn axis(self) -> SweepAxis {
        match self {
            SweepKind::Power => SweepAxis::PowerDbm,
            SweepKind::Reach => SweepAxis::Spans,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            SweepKind::Power => "power",
            SweepKind::Reach => "reach",
        }
    }
}

/// Runs one sweep per format and returns them in the requested order.
pub fn run_sweeps(cfg: &RunConfig, kind: SweepKind, formats: &[FormatKind]) -> Result<Vec<SweepResult>> {
    formats
        .par_iter()
        .map(|&f| {
            let sim = cfg.sim_config(f);
            match kind {
                SweepKind::Power => sweep_power(&sim, &cfg.powers_dbm),
                SweepKind::Reach => sweep_reach(&sim, &cfg.span_counts),
            }
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn summary(sweeps: &[SweepResult]) -> String {
    let mut text = String::new();
    for s in sweeps {
        for p in &s.points {
            let status = match (&p.record, &p.error) {
                (Some(r), _) => format!(
                    "errors {:>6} / {:>10} bits  BER {:.3e}  Q2 {}  {}",
                    r.bit_errors,
                    r.bits_compared,
                    r.ber,
                    r.q2_db.map(|q| format!("{q:6.2} dB")).unwrap_or_else(|| "   n/a   ".into()),
                    r.flag.as_str()
                ),
                (None, e) => format!("failed: {}", e.as_deref().unwrap_or("unknown")),
            };
            let _ = writeln!(text, "{:<9} {:>8} = {:>7}  {status}", s.format.name(), s.axis.as_str(), p.axis_value);
        }
    }
    text
}

/// `sweep`: CSV, Q² and gain charts, and a manifest in `out_dir`.
pub fn cmd_sweep(config_path: Option<&Path>, kind: SweepKind, formats: Option<&[FormatKind]>, out_dir: &Path) -> Outcome {
    let run = || -> Result<(String, bool)> {
        let cfg = match config_path {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let formats: Vec<FormatKind> = formats.map(<[FormatKind]>::to_vec).unwrap_or_else(|| cfg.format.clone());
        let cfg = RunConfig { format: formats.clone(), ..cfg };
        cfg.validate()?;
        std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
        let sweeps = run_sweeps(&cfg, kind, &formats)?;
        let tag = kind.tag();
        let csv_name = format!("sweep_{tag}.csv");
        let q2_name = format!("q2_{tag}.svg");
        let gain_name = format!("gain_{tag}.svg");
        write_file(&out_dir.join(&csv_name), &write_csv(&sweeps)?)?;
        let (q2_svg, gain_svg) = sweep_charts(&sweeps);
        write_file(&out_dir.join(&q2_name), &q2_svg)?;
        write_file(&out_dir.join(&gain_name), &gain_svg)?;
        let manifest = RunManifest {
            command: format!("sweep --axis {tag}"),
            config_path: config_path.map(Path::to_path_buf),
            out_dir: out_dir.to_path_buf(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: cfg.seed,
            seed_scheme: SEED_SCHEME.to_string(),
            axis: kind.axis(),
            grid: match kind {
                SweepKind::Power => cfg.powers_dbm.clone(),
                SweepKind::Reach => cfg.span_counts.iter().map(|&s| s as f64).collect(),
            },
            resolved: formats.iter().map(|&f| cfg.sim_config(f)).collect(),
            run_config: cfg,
            outputs: vec![csv_name, q2_name, gain_name],
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        write_file(&out_dir.join("manifest.json"), &json)?;
        let complete = sweeps.iter().all(|s| s.points.iter().all(|p| p.record.is_some()));
        Ok((summary(&sweeps), complete))
    };
    match run() {
        Ok((text, complete)) => Outcome { text, code: if complete { EXIT_OK } else { EXIT_FAILURE } },
        Err(e) => Outcome { text: format!("error: {e}\n"), code: exit_code_of(&e) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_map_to_exit_two() {
        assert_eq!(exit_code_of(&Error::Config { key: "k".into(), message: "m".into() }), EXIT_CONFIG);
        assert_eq!(exit_code_of(&Error::NoConvention), EXIT_FAILURE);
    }

    #[test]
    fn verify_formats_passes() {
        let out = cmd_verify_formats();
        assert_eq!(out.code, EXIT_OK, "{}", out.text);
        assert!(out.text.contains("PB=32 PA=0 PI=0"));
    }
}
