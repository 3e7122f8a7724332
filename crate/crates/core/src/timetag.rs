//! Time-tagged detection streams: data model, file formats, coincidence
//! pairing and stroboscopic folding onto the pump period.
//!
//! All times are integer picoseconds. Nothing in this module uses floating
//! point time arithmetic.

use std::fmt::Write as _;

use thiserror::Error;

use crate::quantum::{self, ChshCounts, CorrelationCounts};

/// Default coincidence window: three times the ~1 ns detector jitter.
pub const DEFAULT_WINDOW_PS: u64 = 3_000;
/// Default for [`assign_pulses_guarded`]; above the worst-case lead of a
/// coincidence over its own trigger, 6 sigma of 1 ns jitter.
pub const DEFAULT_PRE_TRIGGER_GUARD_PS: u64 = 10_000;

const BINARY_MAGIC: &[u8; 4] = b"QTT1";

#[derive(Debug, Error)]
pub enum TimeTagError {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("records out of order at {location}: {current} ps after {previous} ps")]
    Ordering {
        location: String,
        previous: u64,
        current: u64,
    },
    #[error("invalid run metadata: {0}")]
    Meta(String),
    #[error("no trigger records available for pulse assignment")]
    MissingTriggers,
    #[error("run contains no pump pulses")]
    InvalidRun,
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TimeTagError>;

/// Detection channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    A,
    B,
    /// Pump-pulse trigger photodiode.
    T,
}

impl Channel {
    pub fn code(self) -> u8 {
        match self {
            Channel::A => 0,
            Channel::B => 1,
            Channel::T => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Channel::A),
            1 => Some(Channel::B),
            2 => Some(Channel::T),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Channel::A => "A",
            Channel::B => "B",
            Channel::T => "T",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "A" => Some(Channel::A),
            "B" => Some(Channel::B),
            "T" => Some(Channel::T),
            _ => None,
        }
    }
}

/// One detection event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeTagRecord {
    pub timestamp: u64,
    pub channel: Channel,
}

impl TimeTagRecord {
    pub fn new(channel: Channel, timestamp: u64) -> Self {
        Self { timestamp, channel }
    }
}

/// Run descriptor carried in the header of every stream file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    /// Polarizer angles (a, b) in degrees.
    pub angles_deg: (f64, f64),
    pub period_ps: u64,
    pub width_ps: u64,
    pub duration_s: f64,
    pub seed: Option<u64>,
    /// Additional `key=value` pairs, kept in file order.
    pub extra: Vec<(String, String)>,
}

impl RunMeta {
    pub fn new(angles_deg: (f64, f64), period_ps: u64, width_ps: u64, duration_s: f64) -> Result<Self> {
        let meta = Self {
            angles_deg,
            period_ps,
            width_ps,
            duration_s,
            seed: None,
            extra: Vec::new(),
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_ps == 0 || self.period_ps <= self.width_ps {
            return Err(TimeTagError::Meta(format!(
                "pulse period ({} ps) must exceed pulse width ({} ps) > 0",
                self.period_ps, self.width_ps
            )));
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(TimeTagError::Meta(format!("invalid duration {}", self.duration_s)));
        }
        Ok(())
    }

    pub fn extra(&self, key: &str) -> Option<&str> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set_extra(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.extra.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.extra.push((key.to_string(), value)),
        }
    }

    /// Nominal pulse count, `floor(duration / period)`.
    pub fn nominal_pulses(&self) -> u64 {
        let period_s = self.period_ps as f64 * 1e-12;
        (self.duration_s / period_s + 1e-9).floor() as u64
    }

    /// Header lines in canonical order, without comment prefix.
    pub fn to_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("angles_deg={},{}", self.angles_deg.0, self.angles_deg.1),
            format!("period_ns={}", ps_to_ns_text(self.period_ps)),
            format!("width_ns={}", ps_to_ns_text(self.width_ps)),
            format!("duration_s={}", self.duration_s),
        ];
        if let Some(seed) = self.seed {
            lines.push(format!("seed={seed}"));
        }
        for (k, v) in &self.extra {
            lines.push(format!("{k}={v}"));
        }
        lines
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut angles = None;
        let mut period = None;
        let mut width = None;
        let mut duration = None;
        let mut seed = None;
        let mut extra = Vec::new();
        for (key, value) in pairs {
            let bad = |what: &str| TimeTagError::Meta(format!("bad {what} value '{value}'"));
            match key {
                "angles_deg" => {
                    let (a, b) = value.split_once(',').ok_or_else(|| bad("angles_deg"))?;
                    let a: f64 = a.trim().parse().map_err(|_| bad("angles_deg"))?;
                    let b: f64 = b.trim().parse().map_err(|_| bad("angles_deg"))?;
                    angles = Some((a, b));
                }
                "period_ns" => period = Some(ns_text_to_ps(value).ok_or_else(|| bad("period_ns"))?),
                "width_ns" => width = Some(ns_text_to_ps(value).ok_or_else(|| bad("width_ns"))?),
                "duration_s" => duration = Some(value.parse::<f64>().map_err(|_| bad("duration_s"))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
                _ => extra.push((key.to_string(), value.to_string())),
            }
        }
        let missing = |k: &str| TimeTagError::Meta(format!("missing header key '{k}'"));
        let meta = Self {
            angles_deg: angles.ok_or_else(|| missing("angles_deg"))?,
            period_ps: period.ok_or_else(|| missing("period_ns"))?,
            width_ps: width.ok_or_else(|| missing("width_ns"))?,
            duration_s: duration.ok_or_else(|| missing("duration_s"))?,
            seed,
            extra,
        };
        meta.validate()?;
        Ok(meta)
    }
}

fn ps_to_ns_text(ps: u64) -> String {
    if ps.is_multiple_of(1000) {
        format!("{}", ps / 1000)
    } else {
        let s = format!("{}.{:03}", ps / 1000, ps % 1000);
        s.trim_end_matches('0').to_string()
    }
}

fn ns_text_to_ps(text: &str) -> Option<u64> {
    let text = text.trim();
    let (int, frac) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if frac.len() > 3 || int.is_empty() {
        return None;
    }
    let int: u64 = int.parse().ok()?;
    let frac_ps: u64 = if frac.is_empty() {
        0
    } else {
        let padded = format!("{frac:0<3}");
        padded.parse().ok()?
    };
    int.checked_mul(1000)?.checked_add(frac_ps)
}

/// A run's detection records together with its descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTagStream {
    records: Vec<TimeTagRecord>,
    pub meta: RunMeta,
}

impl TimeTagStream {
    /// Builds a stream, rejecting records that are not sorted by timestamp.
    pub fn new(records: Vec<TimeTagRecord>, meta: RunMeta) -> Result<Self> {
        meta.validate()?;
        check_order(&records, |i| format!("record {i}"))?;
        Ok(Self { records, meta })
    }

    pub fn records(&self) -> &[TimeTagRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TimeTagRecord> {
        self.records
    }

    pub fn channel_times(&self, channel: Channel) -> impl Iterator<Item = u64> + '_ {
        self.records
            .iter()
            .filter(move |r| r.channel == channel)
            .map(|r| r.timestamp)
    }

    pub fn triggers(&self) -> Vec<u64> {
        self.channel_times(Channel::T).collect()
    }

    pub fn count(&self, channel: Channel) -> usize {
        self.records.iter().filter(|r| r.channel == channel).count()
    }

    /// Checks that consecutive triggers are spaced by the pulse period within
    /// `tolerance_ps`.
    pub fn trigger_spacing_ok(&self, tolerance_ps: u64) -> bool {
        let t = self.triggers();
        t.windows(2).all(|w| {
            let d = w[1] - w[0];
            d.abs_diff(self.meta.period_ps) <= tolerance_ps
        })
    }
}

fn check_order(records: &[TimeTagRecord], location: impl Fn(usize) -> String) -> Result<()> {
    for (i, w) in records.windows(2).enumerate() {
        if w[1].timestamp < w[0].timestamp {
            return Err(TimeTagError::Ordering {
                location: location(i + 1),
                previous: w[0].timestamp,
                current: w[1].timestamp,
            });
        }
    }
    Ok(())
}

/// On-disk representation of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamFormat {
    Csv,
    Binary,
}

impl StreamFormat {
    /// `.csv` selects CSV; everything else is treated as binary.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => StreamFormat::Csv,
            _ => StreamFormat::Binary,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            StreamFormat::Csv => "csv",
            StreamFormat::Binary => "qtt",
        }
    }
}

pub fn read_stream(source: &[u8], format: StreamFormat) -> Result<TimeTagStream> {
    match format {
        StreamFormat::Csv => read_csv(source),
        StreamFormat::Binary => read_binary(source),
    }
}

pub fn write_stream(stream: &TimeTagStream, format: StreamFormat) -> Vec<u8> {
    match format {
        StreamFormat::Csv => write_csv(stream),
        StreamFormat::Binary => write_binary(stream),
    }
}

pub fn read_stream_file(path: &std::path::Path) -> Result<TimeTagStream> {
    let bytes = std::fs::read(path)?;
    read_stream(&bytes, StreamFormat::from_path(path))
}

pub fn write_stream_file(stream: &TimeTagStream, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, write_stream(stream, StreamFormat::from_path(path)))?;
    Ok(())
}

fn split_kv(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    Some((k.trim(), v.trim()))
}

fn read_csv(source: &[u8]) -> Result<TimeTagStream> {
    let text = std::str::from_utf8(source).map_err(|e| TimeTagError::Parse {
        location: format!("byte {}", e.valid_up_to()),
        message: "invalid UTF-8".into(),
    })?;
    let mut header = Vec::new();
    let mut records = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let location = || format!("line {}", lineno + 1);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(kv) = split_kv(rest) {
                header.push(kv);
            }
            continue;
        }
        let mut fields = line.split(',');
        let (Some(ch), Some(ts), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(TimeTagError::Parse {
                location: location(),
                message: format!("expected 2 fields, got '{line}'"),
            });
        };
        let channel = Channel::parse(ch.trim()).ok_or_else(|| TimeTagError::Parse {
            location: location(),
            message: format!("unknown channel '{ch}'"),
        })?;
        let timestamp: u64 = ts.trim().parse().map_err(|_| TimeTagError::Parse {
            location: location(),
            message: format!("non-numeric timestamp '{ts}'"),
        })?;
        if let Some(prev) = records.last().map(|r: &TimeTagRecord| r.timestamp) {
            if timestamp < prev {
                return Err(TimeTagError::Ordering {
                    location: location(),
                    previous: prev,
                    current: timestamp,
                });
            }
        }
        records.push(TimeTagRecord::new(channel, timestamp));
    }
    let meta = RunMeta::from_pairs(header)?;
    Ok(TimeTagStream { records, meta })
}

fn write_csv(stream: &TimeTagStream) -> Vec<u8> {
    let mut out = String::with_capacity(stream.records.len() * 14 + 256);
    for line in stream.meta.to_lines() {
        let _ = writeln!(out, "# {line}");
    }
    for r in &stream.records {
        let _ = writeln!(out, "{},{}", r.channel.label(), r.timestamp);
    }
    out.into_bytes()
}

fn read_binary(source: &[u8]) -> Result<TimeTagStream> {
    let err = |offset: usize, message: &str| TimeTagError::Parse {
        location: format!("offset {offset}"),
        message: message.to_string(),
    };
    if source.len() < 8 || &source[..4] != BINARY_MAGIC {
        return Err(err(0, "missing QTT1 magic"));
    }
    let meta_len = u32::from_le_bytes(source[4..8].try_into().unwrap()) as usize;
    let body_start = 8 + meta_len;
    if source.len() < body_start {
        return Err(err(8, "truncated metadata block"));
    }
    let meta_text = std::str::from_utf8(&source[8..body_start]).map_err(|_| err(8, "metadata is not UTF-8"))?;
    let meta = RunMeta::from_pairs(meta_text.lines().filter_map(split_kv))?;
    let body = &source[body_start..];
    if !body.len().is_multiple_of(9) {
        return Err(err(source.len(), "trailing partial record"));
    }
    let mut records = Vec::with_capacity(body.len() / 9);
    for (i, chunk) in body.chunks_exact(9).enumerate() {
        let offset = body_start + i * 9;
        let channel = Channel::from_code(chunk[0]).ok_or_else(|| err(offset, "unknown channel code"))?;
        let timestamp = u64::from_le_bytes(chunk[1..9].try_into().unwrap());
        if let Some(prev) = records.last().map(|r: &TimeTagRecord| r.timestamp) {
            if timestamp < prev {
                return Err(TimeTagError::Ordering {
                    location: format!("offset {offset}"),
                    previous: prev,
                    current: timestamp,
                });
            }
        }
        records.push(TimeTagRecord::new(channel, timestamp));
    }
    Ok(TimeTagStream { records, meta })
}

fn write_binary(stream: &TimeTagStream) -> Vec<u8> {
    let mut meta = String::new();
    for line in stream.meta.to_lines() {
        meta.push_str(&line);
        meta.push('\n');
    }
    let mut out = Vec::with_capacity(8 + meta.len() + stream.records.len() * 9);
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(meta.as_bytes());
    for r in &stream.records {
        out.push(r.channel.code());
        out.extend_from_slice(&r.timestamp.to_le_bytes());
    }
    out
}

/// Pulse assignment of a coincidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseAssignment {
    pub index: usize,
    /// Picoseconds since the start of the pulse (trigger time).
    pub offset: u64,
}

/// A paired A/B detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoincidenceEvent {
    /// Midpoint of the pair, rounded down.
    pub t_abs: u64,
    pub pulse: Option<PulseAssignment>,
}

impl CoincidenceEvent {
    pub fn new(t_abs: u64) -> Self {
        Self { t_abs, pulse: None }
    }
}

/// Pairs A and B detections closer than `window_ps`.
///
/// Within each cluster of detections (a maximal run whose consecutive gaps are
/// all within the window) candidate A/B pairs are accepted greedily by
/// increasing separation, ties broken by the earlier detection, and each
/// detection joins at most one pair. The result is sorted by `t_abs`.
pub fn find_coincidences(stream: &TimeTagStream, window_ps: u64) -> Vec<CoincidenceEvent> {
    let detections: Vec<TimeTagRecord> = stream
        .records
        .iter()
        .copied()
        .filter(|r| r.channel != Channel::T)
        .collect();
    pair_detections(&detections, window_ps)
}

/// Same as [`find_coincidences`] on an already filtered, sorted list of A/B
/// detections.
pub fn pair_detections(detections: &[TimeTagRecord], window_ps: u64) -> Vec<CoincidenceEvent> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < detections.len() {
        let mut end = start + 1;
        while end < detections.len() && detections[end].timestamp - detections[end - 1].timestamp <= window_ps {
            end += 1;
        }
        let cluster = &detections[start..end];
        if cluster.len() == 2 {
            let (x, y) = (cluster[0], cluster[1]);
            if x.channel != y.channel {
                out.push(CoincidenceEvent::new(midpoint(x.timestamp, y.timestamp)));
            }
        } else if cluster.len() > 2 {
            pair_cluster(cluster, window_ps, &mut out);
        }
        start = end;
    }
    out.sort_by_key(|c| c.t_abs);
    out
}

fn midpoint(x: u64, y: u64) -> u64 {
    x / 2 + y / 2 + (x % 2 + y % 2) / 2
}

fn pair_cluster(cluster: &[TimeTagRecord], window_ps: u64, out: &mut Vec<CoincidenceEvent>) {
    let mut candidates = Vec::new();
    for (i, x) in cluster.iter().enumerate() {
        for (j, y) in cluster.iter().enumerate().skip(i + 1) {
            let gap = y.timestamp - x.timestamp;
            if gap > window_ps {
                break;
            }
            if x.channel != y.channel {
                candidates.push((gap, i, j));
            }
        }
    }
    candidates.sort_unstable();
    let mut used = vec![false; cluster.len()];
    for (_, i, j) in candidates {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            out.push(CoincidenceEvent::new(midpoint(
                cluster[i].timestamp,
                cluster[j].timestamp,
            )));
        }
    }
}

/// Attaches each coincidence to the latest trigger not after it.
///
/// Coincidences before the first trigger are dropped, as are coincidences
/// whose offset would reach a full period (a missing trigger).
pub fn assign_pulses(
    coincidences: &[CoincidenceEvent],
    triggers: &[u64],
    period_ps: u64,
) -> Result<Vec<CoincidenceEvent>> {
    assign_pulses_guarded(coincidences, triggers, period_ps, 0)
}

/// Like [`assign_pulses`], but a coincidence less than `guard_ps` before the
/// next trigger is dropped too. With jittered triggers such a coincidence
/// belongs to that next pulse at a small negative offset; attaching it to
/// the previous trigger would wrap it to nearly a full period.
pub fn assign_pulses_guarded(
    coincidences: &[CoincidenceEvent],
    triggers: &[u64],
    period_ps: u64,
    guard_ps: u64,
) -> Result<Vec<CoincidenceEvent>> {
    if triggers.is_empty() {
        return Err(TimeTagError::MissingTriggers);
    }
    let mut out = Vec::with_capacity(coincidences.len());
    let mut k = 0usize;
    for c in coincidences {
        if c.t_abs < triggers[0] {
            continue;
        }
        while k + 1 < triggers.len() && triggers[k + 1] <= c.t_abs {
            k += 1;
        }
        // coincidences are sorted, but tolerate unsorted input
        if triggers[k] > c.t_abs {
            k = triggers.partition_point(|&t| t <= c.t_abs) - 1;
        }
        let offset = c.t_abs - triggers[k];
        if offset >= period_ps {
            continue;
        }
        let next = triggers.get(k + 1).copied().unwrap_or(triggers[k] + period_ps);
        if next - c.t_abs < guard_ps {
            continue;
        }
        out.push(CoincidenceEvent {
            t_abs: c.t_abs,
            pulse: Some(PulseAssignment { index: k, offset }),
        });
    }
    Ok(out)
}

/// Offsets of arbitrary event times from their latest preceding trigger,
/// with the same dropping rules as [`assign_pulses`].
pub fn offsets_from_triggers(times: impl IntoIterator<Item = u64>, triggers: &[u64], period_ps: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if triggers.is_empty() {
        return out;
    }
    for t in times {
        if t < triggers[0] {
            continue;
        }
        let k = triggers.partition_point(|&x| x <= t) - 1;
        let offset = t - triggers[k];
        if offset < period_ps {
            out.push(offset);
        }
    }
    out
}

/// Quantity folded by [`stroboscope`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrobeQuantity {
    SinglesA,
    SinglesB,
    Coincidences,
    Efficiency,
    SParameter,
}

/// A run prepared for stroboscopic folding: its stream and the coincidences
/// found in it (pulse assignments are recomputed from the stream triggers).
#[derive(Debug, Clone, Copy)]
pub struct StrobeRun<'a> {
    pub stream: &'a TimeTagStream,
    pub coincidences: &'a [CoincidenceEvent],
}

/// The sixteen runs behind a CHSH estimate: for each of the four setting
/// pairs, the runs at `(x, y)`, `(x, y + 90)`, `(x + 90, y)` and
/// `(x + 90, y + 90)` in that order.
#[derive(Debug, Clone, Copy)]
pub struct ChshRuns<'a> {
    pub ab: [StrobeRun<'a>; 4],
    pub ab_prime: [StrobeRun<'a>; 4],
    pub a_prime_b: [StrobeRun<'a>; 4],
    pub a_prime_b_prime: [StrobeRun<'a>; 4],
}

/// Input to [`stroboscope`]; the variant fixes the quantity.
#[derive(Debug, Clone, Copy)]
pub enum StrobeInput<'a> {
    SinglesA(&'a TimeTagStream),
    SinglesB(&'a TimeTagStream),
    /// Coincidences with their pulse assignment.
    Coincidences(&'a [CoincidenceEvent]),
    /// Coincidence to singles-A ratio per bin, averaged over the runs.
    Efficiency(&'a [StrobeRun<'a>]),
    SParameter(Option<&'a ChshRuns<'a>>),
}

impl StrobeInput<'_> {
    pub fn quantity(&self) -> StrobeQuantity {
        match self {
            StrobeInput::SinglesA(_) => StrobeQuantity::SinglesA,
            StrobeInput::SinglesB(_) => StrobeQuantity::SinglesB,
            StrobeInput::Coincidences(_) => StrobeQuantity::Coincidences,
            StrobeInput::Efficiency(_) => StrobeQuantity::Efficiency,
            StrobeInput::SParameter(_) => StrobeQuantity::SParameter,
        }
    }
}

/// Per-bin values folded modulo the pulse period.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub quantity: StrobeQuantity,
    pub bin_width_ps: u64,
    pub values: Vec<f64>,
    /// The last bin is shorter than `bin_width_ps`.
    pub partial_last_bin: bool,
}

impl Histogram {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn bin_start_ps(&self, bin: usize) -> u64 {
        bin as u64 * self.bin_width_ps
    }
}

fn bin_counts(offsets: impl IntoIterator<Item = u64>, bin_width: u64, bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    for o in offsets {
        let b = ((o / bin_width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
}

fn coincidence_offsets(c: &[CoincidenceEvent]) -> impl Iterator<Item = u64> + '_ {
    c.iter().filter_map(|c| c.pulse.map(|p| p.offset))
}

fn run_coincidence_offsets(run: &StrobeRun<'_>) -> Vec<u64> {
    let triggers = run.stream.triggers();
    offsets_from_triggers(
        run.coincidences.iter().map(|c| c.t_abs),
        &triggers,
        run.stream.meta.period_ps,
    )
}

fn run_singles_offsets(run: &StrobeRun<'_>, channel: Channel) -> Vec<u64> {
    let triggers = run.stream.triggers();
    offsets_from_triggers(run.stream.channel_times(channel), &triggers, run.stream.meta.period_ps)
}

/// Folds events modulo the pump period into bins of `bin_width_ps`.
pub fn stroboscope(input: StrobeInput<'_>, period_ps: u64, bin_width_ps: u64) -> Result<Histogram> {
    if bin_width_ps == 0 || period_ps == 0 || bin_width_ps > period_ps {
        return Err(TimeTagError::Config(format!(
            "bin width {bin_width_ps} ps incompatible with period {period_ps} ps"
        )));
    }
    let bins = period_ps.div_ceil(bin_width_ps) as usize;
    let partial_last_bin = !period_ps.is_multiple_of(bin_width_ps);
    let quantity = input.quantity();
    let values = match input {
        StrobeInput::SinglesA(stream) | StrobeInput::SinglesB(stream) => {
            let channel = if quantity == StrobeQuantity::SinglesA {
                Channel::A
            } else {
                Channel::B
            };
            let triggers = stream.triggers();
            let offsets = offsets_from_triggers(stream.channel_times(channel), &triggers, period_ps);
            to_f64(bin_counts(offsets, bin_width_ps, bins))
        }
        StrobeInput::Coincidences(c) => to_f64(bin_counts(coincidence_offsets(c), bin_width_ps, bins)),
        StrobeInput::Efficiency(runs) => {
            if runs.is_empty() {
                vec![0.0; bins]
            } else {
                let mut acc = vec![0.0; bins];
                let mut used = vec![0usize; bins];
                for run in runs {
                    let coinc = bin_counts(run_coincidence_offsets(run), bin_width_ps, bins);
                    let singles = bin_counts(run_singles_offsets(run, Channel::A), bin_width_ps, bins);
                    for b in 0..bins {
                        if singles[b] > 0 {
                            acc[b] += coinc[b] as f64 / singles[b] as f64;
                            used[b] += 1;
                        }
                    }
                }
                acc.iter()
                    .zip(&used)
                    .map(|(&v, &n)| if n > 0 { v / n as f64 } else { 0.0 })
                    .collect()
            }
        }
        StrobeInput::SParameter(runs) => {
            let runs = runs.ok_or_else(|| TimeTagError::Config("S parameter requires the sixteen CHSH runs".into()))?;
            let hist = |group: &[StrobeRun<'_>; 4]| -> [Vec<u64>; 4] {
                group
                    .each_ref()
                    .map(|r| bin_counts(run_coincidence_offsets(r), bin_width_ps, bins))
            };
            let groups = [
                hist(&runs.ab),
                hist(&runs.ab_prime),
                hist(&runs.a_prime_b),
                hist(&runs.a_prime_b_prime),
            ];
            (0..bins)
                .map(|b| {
                    let cc = |g: &[Vec<u64>; 4]| CorrelationCounts::new(g[0][b], g[1][b], g[2][b], g[3][b]);
                    let counts = ChshCounts {
                        ab: cc(&groups[0]),
                        ab_prime: cc(&groups[1]),
                        a_prime_b: cc(&groups[2]),
                        a_prime_b_prime: cc(&groups[3]),
                    };
                    quantum::chsh_from_counts(&counts).map(|e| e.s).unwrap_or(0.0)
                })
                .collect()
        }
    };
    Ok(Histogram {
        quantity,
        bin_width_ps,
        values,
        partial_last_bin,
    })
}

fn to_f64(v: Vec<u64>) -> Vec<f64> {
    v.into_iter().map(|x| x as f64).collect()
}

/// Count-rate summary of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStatistics {
    pub singles_a: u64,
    pub singles_b: u64,
    pub n_coinc: u64,
    pub n_pulses: u64,
    /// Detected photons per pulse and station.
    pub photons_per_pulse: f64,
    /// Coincidences per single detection, `2 n_coinc / (singles_a + singles_b)`.
    pub efficiency: f64,
}

impl RunStatistics {
    pub fn from_counts(singles_a: u64, singles_b: u64, n_coinc: u64, n_pulses: u64) -> Result<Self> {
        if n_pulses == 0 {
            return Err(TimeTagError::InvalidRun);
        }
        let singles = singles_a + singles_b;
        Ok(Self {
            singles_a,
            singles_b,
            n_coinc,
            n_pulses,
            photons_per_pulse: singles as f64 / (2.0 * n_pulses as f64),
            efficiency: if singles == 0 {
                0.0
            } else {
                2.0 * n_coinc as f64 / singles as f64
            },
        })
    }
}

/// Pulse count comes from trigger records, or from the run descriptor when
/// the stream carries none.
pub fn run_statistics(stream: &TimeTagStream, coincidences: &[CoincidenceEvent]) -> Result<RunStatistics> {
    let mut a = 0u64;
    let mut b = 0u64;
    let mut t = 0u64;
    for r in &stream.records {
        match r.channel {
            Channel::A => a += 1,
            Channel::B => b += 1,
            Channel::T => t += 1,
        }
    }
    let pulses = if t > 0 { t } else { stream.meta.nominal_pulses() };
    RunStatistics::from_counts(a, b, coincidences.len() as u64, pulses)
}
