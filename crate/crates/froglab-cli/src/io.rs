//! File formats: SignalFile JSON, TraceFile CSV with JSON sidecar, and the
//! RunReport. All numeric output uses 17 significant digits and `\n` line
//! endings so identical inputs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use froglab::{FrogTrace, NonlinearityKind, Pulse, TraceGeometry};

/// Validation failures exit with code 2; everything else is internal (1).
#[derive(Debug)]
pub struct ValidationError(pub String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ValidationError {}

pub fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(anyhow!(ValidationError(msg.into())))
}

/// Formats with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SignalFile {
    pub n: usize,
    pub samples: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl SignalFile {
    pub fn from_pulse(p: &Pulse, label: Option<String>) -> Self {
        Self {
            n: p.len(),
            samples: p.samples().iter().map(|c| [c.re, c.im]).collect(),
            label,
        }
    }

    pub fn to_pulse(&self) -> Result<Pulse> {
        if self.samples.len() != self.n {
            return validation(format!(
                "signal file: n = {} but {} samples",
                self.n,
                self.samples.len()
            ));
        }
        Pulse::new(
            self.samples
                .iter()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect(),
        )
        .map_err(|e| anyhow!(ValidationError(format!("signal file: {e}"))))
    }
}

pub fn read_signal(path: &Path) -> Result<Pulse> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading signal file {}", path.display()))
        .map_err(|e| anyhow!(ValidationError(format!("{e:#}"))))?;
    let file: SignalFile = serde_json::from_str(&text)
        .map_err(|e| anyhow!(ValidationError(format!("parsing {}: {e}", path.display()))))?;
    file.to_pulse()
}

pub fn write_signal(path: &Path, p: &Pulse, label: Option<String>) -> Result<()> {
    let file = SignalFile::from_pulse(p, label);
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn kind_to_str(kind: NonlinearityKind) -> &'static str {
    match kind {
        NonlinearityKind::BlindShg => "blind-shg",
        NonlinearityKind::Shg => "shg",
        NonlinearityKind::Thg => "thg",
        NonlinearityKind::Pg => "pg",
        NonlinearityKind::Crab => "crab",
    }
}

pub fn kind_from_str(s: &str) -> Result<NonlinearityKind> {
    Ok(match s {
        "blind-shg" => NonlinearityKind::BlindShg,
        "shg" => NonlinearityKind::Shg,
        "thg" => NonlinearityKind::Thg,
        "pg" => NonlinearityKind::Pg,
        "crab" => NonlinearityKind::Crab,
        other => return validation(format!("unknown nonlinearity kind '{other}'")),
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub geometry: SidecarGeometry,
    pub provenance: SidecarProvenance,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SidecarGeometry {
    pub n: usize,
    pub l: usize,
    pub kind: String,
    pub delay_sign: i8,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SidecarProvenance {
    pub seed: u64,
    pub noise: String,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_trace(csv: &Path, trace: &FrogTrace, seed: u64, noise: &str) -> Result<()> {
    let g = trace.geometry();
    let mut out = String::from("k\\m");
    for m in 0..g.m_count() {
        out.push_str(&format!(",{m}"));
    }
    out.push('\n');
    for k in 0..g.n() {
        out.push_str(&k.to_string());
        for m in 0..g.m_count() {
            out.push(',');
            out.push_str(&fmt_f64(trace.values()[[k, m]]));
        }
        out.push('\n');
    }
    fs::write(csv, out).with_context(|| format!("writing {}", csv.display()))?;

    let sidecar = TraceSidecar {
        geometry: SidecarGeometry {
            n: g.n(),
            l: g.l(),
            kind: kind_to_str(g.kind()).to_string(),
            delay_sign: g.delay_sign(),
        },
        provenance: SidecarProvenance {
            seed,
            noise: noise.to_string(),
        },
    };
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    let sc = sidecar_path(csv);
    fs::write(&sc, text).with_context(|| format!("writing {}", sc.display()))?;
    Ok(())
}

pub fn read_trace(csv: &Path) -> Result<FrogTrace> {
    let sc = sidecar_path(csv);
    let sidecar_text = fs::read_to_string(&sc)
        .map_err(|e| anyhow!(ValidationError(format!("reading sidecar {}: {e}", sc.display()))))?;
    let sidecar: TraceSidecar = serde_json::from_str(&sidecar_text)
        .map_err(|e| anyhow!(ValidationError(format!("parsing {}: {e}", sc.display()))))?;
    let kind = kind_from_str(&sidecar.geometry.kind)?;
    let geometry = TraceGeometry::new(sidecar.geometry.n, sidecar.geometry.l, kind)
        .and_then(|g| g.with_delay_sign(sidecar.geometry.delay_sign))
        .map_err(|e| anyhow!(ValidationError(format!("sidecar geometry: {e}"))))?;

    let text = fs::read_to_string(csv)
        .map_err(|e| anyhow!(ValidationError(format!("reading {}: {e}", csv.display()))))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| anyhow!(ValidationError("empty trace CSV".into())))?;
    let expected_cols = header.split(',').count() - 1;
    if expected_cols != geometry.m_count() {
        return validation(format!(
            "trace CSV has {expected_cols} delay columns, sidecar wants {}",
            geometry.m_count()
        ));
    }
    let mut values = Array2::zeros((geometry.n(), geometry.m_count()));
    let mut rows = 0;
    for (k, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let _row_label = fields.next();
        for (m, field) in fields.enumerate() {
            if k >= geometry.n() || m >= geometry.m_count() {
                return validation("trace CSV larger than sidecar geometry".to_string());
            }
            values[[k, m]] = field.trim().parse::<f64>().map_err(|e| {
                anyhow!(ValidationError(format!("trace CSV entry ({k},{m}): {e}")))
            })?;
        }
        rows += 1;
    }
    if rows != geometry.n() {
        return validation(format!(
            "trace CSV has {rows} rows, sidecar wants {}",
            geometry.n()
        ));
    }
    FrogTrace::new(values, geometry).map_err(|e| anyhow!(ValidationError(format!("trace: {e}"))))
}

/// Writes a CSV with a header line and uniformly formatted numeric rows.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Serializes the RunReport (a JSON value assembled per command) with a
/// trailing newline. Timings go to stderr only, keeping files byte-stable.
pub fn write_report(path: &Path, report: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
