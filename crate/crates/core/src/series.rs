//! The three series types built from coincidence lists, and their binary
//! images.
//!
//! * `dt`: time between successive coincidences.
//! * `deltat`: offset of each coincidence from the start of its pump pulse.
//! * `outcomes`: bits from interleaving the coincidences of a run with those
//!   of the run at both polarizers rotated by 90 degrees.
//!
//! Series files hold one value per line after a `#`-prefixed header of
//! `key=value` pairs.

use std::fmt::{self, Write as _};
use std::path::Path;

use thiserror::Error;

use crate::stats;
use crate::timetag::CoincidenceEvent;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("coincidence {0} has no pulse assignment")]
    MissingPulse(usize),
    #[error("degenerate series: {0}")]
    Degenerate(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SeriesError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesKind {
    Dt,
    Deltat,
    Outcomes,
}

impl SeriesKind {
    pub fn label(self) -> &'static str {
        match self {
            SeriesKind::Dt => "dt",
            SeriesKind::Deltat => "deltat",
            SeriesKind::Outcomes => "outcomes",
        }
    }

    /// Numbering used in the tables (type #1, #2, #3).
    pub fn type_number(self) -> u8 {
        match self {
            SeriesKind::Dt => 1,
            SeriesKind::Deltat => 2,
            SeriesKind::Outcomes => 3,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "dt" => Some(SeriesKind::Dt),
            "deltat" => Some(SeriesKind::Deltat),
            "outcomes" => Some(SeriesKind::Outcomes),
            _ => None,
        }
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    Mean,
    Median,
    None,
}

impl ThresholdKind {
    pub fn label(self) -> &'static str {
        match self {
            ThresholdKind::Mean => "mean",
            ThresholdKind::Median => "median",
            ThresholdKind::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "mean" => Some(ThresholdKind::Mean),
            "median" => Some(ThresholdKind::Median),
            "none" => Some(ThresholdKind::None),
            _ => None,
        }
    }
}

/// Provenance of a series: settings of the source run(s) and free-form
/// `key=value` entries (state, theta, source files, threshold).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesMeta {
    pub angles_deg: (f64, f64),
    pub entries: Vec<(String, String)>,
}

impl SeriesMeta {
    pub fn new(angles_deg: (f64, f64)) -> Self {
        Self {
            angles_deg,
            entries: Vec::new(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.set(key, value);
        self
    }

    pub fn theta_deg(&self) -> Option<f64> {
        self.get("theta_deg").and_then(|v| v.parse().ok())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealSeries {
    /// Picoseconds.
    pub values: Vec<f64>,
    pub kind: SeriesKind,
    pub meta: SeriesMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySeries {
    pub bits: Vec<u8>,
    pub threshold_kind: ThresholdKind,
    pub meta: SeriesMeta,
}

impl BinarySeries {
    pub fn ones_fraction(&self) -> f64 {
        self.bits.iter().map(|&b| b as f64).sum::<f64>() / self.bits.len() as f64
    }
}

/// Type #1: gaps between successive coincidences.
pub fn build_dt(coincidences: &[CoincidenceEvent], meta: SeriesMeta) -> Result<RealSeries> {
    if coincidences.len() < 2 {
        return Err(SeriesError::TooShort {
            needed: 2,
            got: coincidences.len(),
        });
    }
    let values = coincidences
        .windows(2)
        .map(|w| w[1].t_abs.abs_diff(w[0].t_abs) as f64)
        .collect();
    Ok(RealSeries {
        values,
        kind: SeriesKind::Dt,
        meta,
    })
}

/// Type #2: offsets from the pulse start, in coincidence order.
pub fn build_deltat(coincidences: &[CoincidenceEvent], meta: SeriesMeta) -> Result<RealSeries> {
    let values = coincidences
        .iter()
        .enumerate()
        .map(|(i, c)| c.pulse.map(|p| p.offset as f64).ok_or(SeriesError::MissingPulse(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RealSeries {
        values,
        kind: SeriesKind::Deltat,
        meta,
    })
}

/// Type #3: merges two runs by run-local time; a coincidence of the rotated
/// run writes 1, one of the unrotated run writes 0. On equal times the
/// unrotated event comes first.
pub fn intercalate_outcomes(
    rotated: &[CoincidenceEvent],
    unrotated: &[CoincidenceEvent],
    meta: SeriesMeta,
) -> Result<BinarySeries> {
    if rotated.is_empty() || unrotated.is_empty() {
        return Err(SeriesError::Degenerate(
            "intercalation needs coincidences in both runs".into(),
        ));
    }
    let mut bits = Vec::with_capacity(rotated.len() + unrotated.len());
    let (mut i, mut j) = (0, 0);
    while i < rotated.len() || j < unrotated.len() {
        let take_unrotated = match (rotated.get(i), unrotated.get(j)) {
            (Some(r), Some(u)) => u.t_abs <= r.t_abs,
            (None, Some(_)) => true,
            _ => false,
        };
        if take_unrotated {
            bits.push(0);
            j += 1;
        } else {
            bits.push(1);
            i += 1;
        }
    }
    Ok(BinarySeries {
        bits,
        threshold_kind: ThresholdKind::None,
        meta,
    })
}

/// Threshold value used by [`binarize`].
pub fn threshold_value(values: &[f64], kind: ThresholdKind) -> Option<f64> {
    match kind {
        ThresholdKind::Mean => Some(stats::mean(values)),
        ThresholdKind::Median => Some(stats::lower_median(values)),
        ThresholdKind::None => None,
    }
}

/// Bit `1` iff the value is strictly above the mean or lower median.
pub fn binarize(series: &RealSeries, kind: ThresholdKind) -> Result<BinarySeries> {
    let values = &series.values;
    if values.len() < 2 {
        return Err(SeriesError::TooShort {
            needed: 2,
            got: values.len(),
        });
    }
    let threshold = threshold_value(values, kind)
        .ok_or_else(|| SeriesError::Degenerate("binarization needs a mean or median threshold".into()))?;
    if values.iter().all(|&v| v == values[0]) {
        return Err(SeriesError::Degenerate("all values identical".into()));
    }
    let bits: Vec<u8> = values.iter().map(|&v| u8::from(v > threshold)).collect();
    if bits.iter().all(|&b| b == 0) {
        return Err(SeriesError::Degenerate(format!(
            "no value above the {} threshold {threshold}",
            kind.label()
        )));
    }
    let mut meta = series.meta.clone();
    meta.set("threshold", kind.label());
    meta.set("threshold_value", threshold.to_string());
    Ok(BinarySeries {
        bits,
        threshold_kind: kind,
        meta,
    })
}

/// Conventional file name, e.g. `dt_0_22.5.txt`.
pub fn series_file_name(kind: SeriesKind, angles_deg: (f64, f64)) -> String {
    format!("{}_{}_{}.txt", kind.label(), angles_deg.0, angles_deg.1)
}

/// Contents of a series file.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesData {
    Real(RealSeries),
    Binary(BinarySeries, SeriesKind),
}

impl SeriesData {
    pub fn kind(&self) -> SeriesKind {
        match self {
            SeriesData::Real(s) => s.kind,
            SeriesData::Binary(_, k) => *k,
        }
    }

    pub fn meta(&self) -> &SeriesMeta {
        match self {
            SeriesData::Real(s) => &s.meta,
            SeriesData::Binary(s, _) => &s.meta,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SeriesData::Real(s) => s.values.len(),
            SeriesData::Binary(s, _) => s.bits.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn header(kind: SeriesKind, meta: &SeriesMeta) -> String {
    let mut out = String::new();
    writeln!(out, "# kind={}", kind.label()).unwrap();
    writeln!(out, "# angles_deg={},{}", meta.angles_deg.0, meta.angles_deg.1).unwrap();
    for (k, v) in &meta.entries {
        writeln!(out, "# {k}={v}").unwrap();
    }
    out
}

pub fn format_series(data: &SeriesData) -> String {
    let mut out = header(data.kind(), data.meta());
    match data {
        SeriesData::Real(s) => {
            for v in &s.values {
                writeln!(out, "{v}").unwrap();
            }
        }
        SeriesData::Binary(s, _) => {
            for b in &s.bits {
                out.push(if *b == 1 { '1' } else { '0' });
                out.push('\n');
            }
        }
    }
    out
}

pub fn parse_series(text: &str) -> Result<SeriesData> {
    let mut kind = None;
    let mut angles = None;
    let mut entries = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, line)) = lines.peek() {
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        let (no, _) = lines.next().unwrap();
        let Some((k, v)) = rest.trim().split_once('=') else {
            return Err(SeriesError::Parse {
                line: no + 1,
                message: "header line is not key=value".into(),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "kind" => {
                kind = Some(SeriesKind::parse(v).ok_or_else(|| SeriesError::Parse {
                    line: no + 1,
                    message: format!("unknown series kind '{v}'"),
                })?)
            }
            "angles_deg" => {
                let parsed = v
                    .split_once(',')
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)));
                angles = Some(parsed.ok_or_else(|| SeriesError::Parse {
                    line: no + 1,
                    message: format!("bad angles '{v}'"),
                })?);
            }
            _ => entries.push((k.to_string(), v.to_string())),
        }
    }
    let kind = kind.ok_or(SeriesError::Parse {
        line: 1,
        message: "missing kind header".into(),
    })?;
    let meta = SeriesMeta {
        angles_deg: angles.unwrap_or((0.0, 0.0)),
        entries,
    };
    if kind == SeriesKind::Outcomes {
        let mut bits = Vec::new();
        for (no, line) in lines {
            match line.trim() {
                "" => continue,
                "0" => bits.push(0),
                "1" => bits.push(1),
                other => {
                    return Err(SeriesError::Parse {
                        line: no + 1,
                        message: format!("expected a bit, got '{other}'"),
                    })
                }
            }
        }
        let threshold_kind = meta
            .get("threshold")
            .and_then(ThresholdKind::parse)
            .unwrap_or(ThresholdKind::None);
        return Ok(SeriesData::Binary(
            BinarySeries {
                bits,
                threshold_kind,
                meta,
            },
            kind,
        ));
    }
    let mut values = Vec::new();
    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| SeriesError::Parse {
            line: no + 1,
            message: format!("expected a number, got '{line}'"),
        })?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(SeriesError::Parse {
                line: no + 1,
                message: format!("series values must be finite and non-negative, got {v}"),
            });
        }
        values.push(v);
    }
    Ok(SeriesData::Real(RealSeries { values, kind, meta }))
}

pub fn write_series_file(data: &SeriesData, path: &Path) -> Result<()> {
    std::fs::write(path, format_series(data))?;
    Ok(())
}

pub fn read_series_file(path: &Path) -> Result<SeriesData> {
    parse_series(&std::fs::read_to_string(path)?)
}
