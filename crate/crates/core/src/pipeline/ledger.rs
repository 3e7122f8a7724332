//! Verdict ledger, set-level tables, rejection summary and the QKD threshold
//! comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::randomness::{set_verdict, SetVerdict};
use crate::series::SeriesKind;

use super::SeriesRecord;

/// Ideal values of the set statistics.
pub const IDEAL_K: f64 = 1.0;
pub const IDEAL_H: f64 = 0.5;
/// Threshold range quoted for classical models of the source.
pub const QKD_THRESHOLDS: [f64; 2] = [0.14, 0.25];

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub id: String,
    pub kind: SeriesKind,
    pub theta_deg: Option<f64>,
    pub angles_deg: (f64, f64),
    pub state: Option<String>,
    pub nist_rejected: bool,
    pub kpss_rejected: bool,
    /// Unit root not rejected; `None` when not computed.
    pub adf_unit_root: Option<bool>,
    pub compact_object_found: bool,
    pub kc: Option<f64>,
    pub km: Option<f64>,
    pub hurst: Option<f64>,
}

impl LedgerEntry {
    pub fn from_record(rec: &SeriesRecord, state: Option<&str>) -> Self {
        Self {
            id: rec.id.clone(),
            kind: rec.kind,
            theta_deg: rec.theta_deg,
            angles_deg: rec.angles_deg,
            state: state.map(str::to_string),
            nist_rejected: rec.nist_rejected(),
            kpss_rejected: rec.kpss_rejected(),
            adf_unit_root: rec.adf_unit_root(),
            compact_object_found: rec.compact_object_found(),
            kc: rec.kc.map(|k| k.normalized),
            km: rec.km.map(|k| k.normalized),
            hurst: rec.hurst.as_ref().map(|h| h.h),
        }
    }

    /// Criteria this series fails: KPSS, NIST, Takens compact object.
    pub fn failed_criteria(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.kpss_rejected {
            out.push("kpss");
        }
        if self.nist_rejected {
            out.push("nist");
        }
        if self.compact_object_found {
            out.push("takens");
        }
        out
    }

    pub fn not_random(&self) -> bool {
        !self.failed_criteria().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerdictLedger {
    pub entries: Vec<LedgerEntry>,
}

impl VerdictLedger {
    pub fn from_records(records: &[SeriesRecord], state: Option<&str>) -> Self {
        Self {
            entries: records.iter().map(|r| LedgerEntry::from_record(r, state)).collect(),
        }
    }
}

/// One row of the complexity / Hurst table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub state: Option<String>,
    pub kind: SeriesKind,
    pub theta_deg: Option<f64>,
    pub count: usize,
    pub kc: Option<SetVerdict>,
    /// `None` for outcome series, where Km does not apply.
    pub km: Option<SetVerdict>,
    pub hurst: Option<SetVerdict>,
    /// Set verdict from Km and H (Kc and H for outcome series).
    pub random: Option<bool>,
    /// Present when the literal rule rejects Kc of a real-valued series.
    pub kc_flag: Option<String>,
}

type GroupKey = (String, u8, u64);

fn group_key(e: &LedgerEntry) -> GroupKey {
    (
        e.state.clone().unwrap_or_default(),
        e.kind.type_number(),
        e.theta_deg.map_or(u64::MAX, f64::to_bits),
    )
}

fn verdict_of(values: impl Iterator<Item = Option<f64>>, ideal: f64) -> Option<SetVerdict> {
    let v: Vec<f64> = values.flatten().collect();
    set_verdict(&v, ideal)
}

/// Mean and dispersion of Kc, Km and H per {state, type, theta} group.
/// Returns the rows and notes about omitted statistics.
pub fn aggregate_tables(ledger: &VerdictLedger) -> (Vec<TableRow>, Vec<String>) {
    let mut groups: BTreeMap<GroupKey, Vec<&LedgerEntry>> = BTreeMap::new();
    for e in &ledger.entries {
        groups.entry(group_key(e)).or_default().push(e);
    }
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for entries in groups.values() {
        let first = entries[0];
        let outcomes = first.kind == SeriesKind::Outcomes;
        let kc = verdict_of(entries.iter().map(|e| e.kc), IDEAL_K);
        let km = if outcomes {
            None
        } else {
            verdict_of(entries.iter().map(|e| e.km), IDEAL_K)
        };
        let hurst = verdict_of(entries.iter().map(|e| e.hurst), IDEAL_H);
        let label = group_label(first);
        for (name, v, applicable) in [("Kc", &kc, true), ("Km", &km, !outcomes), ("H", &hurst, true)] {
            if applicable && v.is_none() {
                notes.push(format!("{label}: {name} omitted, no series produced a value"));
            }
        }
        let deciding = if outcomes { kc } else { km };
        let random = match (deciding, hurst) {
            (Some(a), Some(b)) => Some(a.random && b.random),
            _ => None,
        };
        let kc_flag = match (outcomes, kc) {
            (false, Some(k)) if !k.random => Some(format!(
                "Kc literal rule gives not random ({:.3} ± {:.3}); row verdict taken from Km and H",
                k.mean, k.dispersion
            )),
            _ => None,
        };
        rows.push(TableRow {
            state: first.state.clone(),
            kind: first.kind,
            theta_deg: first.theta_deg,
            count: entries.len(),
            kc,
            km,
            hurst,
            random,
            kc_flag,
        });
    }
    (rows, notes)
}

fn group_label(e: &LedgerEntry) -> String {
    let theta = e.theta_deg.map_or("-".to_string(), |t| format!("{t}"));
    match &e.state {
        Some(s) => format!("{s} type #{} theta={theta}", e.kind.type_number()),
        None => format!("type #{} theta={theta}", e.kind.type_number()),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RejectionSummary {
    pub total_excluding_type3: usize,
    pub not_random_excluding_type3: usize,
    pub kpss_rejected: usize,
    pub nist_rejected: usize,
    pub compact_object_found: usize,
    pub type3_total: usize,
    pub type3_not_random: usize,
    /// Series failing more than one criterion, with the criteria.
    pub overlap: Vec<(String, Vec<&'static str>)>,
    /// Series where ADF could not reject the unit root.
    pub adf_unit_root: usize,
    pub notes: Vec<String>,
}

impl RejectionSummary {
    pub fn not_random_total(&self) -> usize {
        self.not_random_excluding_type3 + self.type3_not_random
    }

    pub fn total(&self) -> usize {
        self.total_excluding_type3 + self.type3_total
    }
}

/// Counts per criterion and overall, with outcome series kept apart.
pub fn rejection_summary(ledger: &VerdictLedger) -> RejectionSummary {
    let mut s = RejectionSummary::default();
    if ledger.entries.is_empty() {
        s.notes.push("empty ledger: 0/0".into());
        return s;
    }
    for e in &ledger.entries {
        let failed = e.failed_criteria();
        if e.adf_unit_root == Some(true) {
            s.adf_unit_root += 1;
        }
        if failed.len() > 1 {
            s.overlap.push((e.id.clone(), failed.clone()));
        }
        if e.kind == SeriesKind::Outcomes {
            s.type3_total += 1;
            s.type3_not_random += usize::from(!failed.is_empty());
            continue;
        }
        s.total_excluding_type3 += 1;
        s.not_random_excluding_type3 += usize::from(!failed.is_empty());
        s.kpss_rejected += usize::from(e.kpss_rejected);
        s.nist_rejected += usize::from(e.nist_rejected);
        s.compact_object_found += usize::from(e.compact_object_found);
    }
    if s.total_excluding_type3 == 0 {
        s.notes.push("no type #1/#2 series: 0/0".into());
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QkdVerdict {
    pub not_random: usize,
    pub total: usize,
    pub rate: f64,
    pub threshold: f64,
    pub acceptable: bool,
}

impl QkdVerdict {
    /// For example `8/64 → 0.125 < 0.14 acceptable`.
    pub fn line(&self) -> String {
        if self.acceptable {
            format!(
                "{}/{} → {:.3} < {} acceptable",
                self.not_random, self.total, self.rate, self.threshold
            )
        } else {
            format!(
                "{}/{} → {:.3} ≥ {} not acceptable",
                self.not_random, self.total, self.rate, self.threshold
            )
        }
    }
}

/// Rejection rate compared with a QKD tolerance; acceptable iff strictly
/// below the threshold.
pub fn qkd_threshold_check(not_random: usize, total: usize, threshold: f64) -> Result<QkdVerdict, String> {
    if total == 0 {
        return Err("rejection rate undefined for an empty set".into());
    }
    if not_random > total {
        return Err(format!("{not_random} rejected out of {total} series"));
    }
    let rate = not_random as f64 / total as f64;
    Ok(QkdVerdict {
        not_random,
        total,
        rate,
        threshold,
        acceptable: rate < threshold,
    })
}

fn fmt_verdict(v: &Option<SetVerdict>) -> String {
    match v {
        Some(v) => format!("{:.3} ± {:.3}", v.mean, v.dispersion),
        None => "-".into(),
    }
}

fn qkd_lines(summary: &RejectionSummary, thresholds: &[f64]) -> Vec<String> {
    let mut out = Vec::new();
    for &t in thresholds {
        for (label, nr, total) in [
            (
                "excluding type #3",
                summary.not_random_excluding_type3,
                summary.total_excluding_type3,
            ),
            ("all series", summary.not_random_total(), summary.total()),
        ] {
            match qkd_threshold_check(nr, total, t) {
                Ok(v) => out.push(format!("{label}: {}", v.line())),
                Err(e) => out.push(format!("{label}: {e}")),
            }
        }
    }
    out
}

/// Markdown report: manifest, table, ledger summary and QKD comparison.
pub fn render_markdown(ledger: &VerdictLedger, manifest: &[String], thresholds: &[f64]) -> String {
    let (rows, notes) = aggregate_tables(ledger);
    let summary = rejection_summary(ledger);
    let mut out = String::new();
    out.push_str("# Randomness report\n\n## Run manifest\n\n");
    for m in manifest {
        writeln!(out, "    {m}").unwrap();
    }
    out.push_str("\n## Complexity and Hurst exponent\n\n");
    out.push_str("| state | type | theta | n | Kc | Km | H | random |\n|---|---|---|---|---|---|---|---|\n");
    for r in &rows {
        let km = if r.kind == SeriesKind::Outcomes {
            "not applicable".to_string()
        } else {
            fmt_verdict(&r.km)
        };
        writeln!(
            out,
            "| {} | #{} | {} | {} | {} | {} | {} | {} |",
            r.state.as_deref().unwrap_or("-"),
            r.kind.type_number(),
            r.theta_deg.map_or("-".into(), |t| t.to_string()),
            r.count,
            fmt_verdict(&r.kc),
            km,
            fmt_verdict(&r.hurst),
            match r.random {
                Some(true) => "yes",
                Some(false) => "no",
                None => "-",
            }
        )
        .unwrap();
    }
    let flags: Vec<String> = rows
        .iter()
        .filter_map(|r| {
            r.kc_flag.as_ref().map(|f| {
                format!(
                    "type #{} theta={}: {f}",
                    r.kind.type_number(),
                    r.theta_deg.unwrap_or(f64::NAN)
                )
            })
        })
        .chain(notes)
        .collect();
    if !flags.is_empty() {
        out.push_str("\nNotes:\n\n");
        for f in flags {
            writeln!(out, "- {f}").unwrap();
        }
    }
    out.push_str("\n## Rejection ledger\n\n");
    writeln!(
        out,
        "- not random (type #1/#2): {}/{}",
        summary.not_random_excluding_type3, summary.total_excluding_type3
    )
    .unwrap();
    writeln!(out, "  - KPSS rejects stationarity: {}", summary.kpss_rejected).unwrap();
    writeln!(out, "  - NIST battery rejects: {}", summary.nist_rejected).unwrap();
    writeln!(
        out,
        "  - compact object in phase space: {}",
        summary.compact_object_found
    )
    .unwrap();
    writeln!(
        out,
        "- type #3 (reported separately): {}/{} not random",
        summary.type3_not_random, summary.type3_total
    )
    .unwrap();
    writeln!(out, "- ADF keeps the unit root: {}", summary.adf_unit_root).unwrap();
    if summary.overlap.is_empty() {
        out.push_str("- no series fails more than one criterion\n");
    } else {
        for (id, c) in &summary.overlap {
            writeln!(out, "- {id} fails {}", c.join(", ")).unwrap();
        }
    }
    for n in &summary.notes {
        writeln!(out, "- {n}").unwrap();
    }
    out.push_str("\n## QKD threshold\n\n");
    for l in qkd_lines(&summary, thresholds) {
        writeln!(out, "- {l}").unwrap();
    }
    out
}

/// CSV report: one line per table row, then the ledger summary as
/// `key,value` lines.
pub fn render_csv(ledger: &VerdictLedger, manifest: &[String], thresholds: &[f64]) -> String {
    let (rows, _) = aggregate_tables(ledger);
    let summary = rejection_summary(ledger);
    let mut out = String::new();
    for m in manifest {
        writeln!(out, "# {m}").unwrap();
    }
    out.push_str("state,type,theta,n,kc_mean,kc_dispersion,km_mean,km_dispersion,h_mean,h_dispersion,random\n");
    let cell = |v: &Option<SetVerdict>| match v {
        Some(v) => format!("{},{}", v.mean, v.dispersion),
        None => ",".into(),
    };
    for r in &rows {
        let km = if r.kind == SeriesKind::Outcomes {
            "not applicable,not applicable".into()
        } else {
            cell(&r.km)
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.state.as_deref().unwrap_or(""),
            r.kind.type_number(),
            r.theta_deg.map_or(String::new(), |t| t.to_string()),
            r.count,
            cell(&r.kc),
            km,
            cell(&r.hurst),
            r.random.map_or(String::new(), |b| u8::from(b).to_string())
        )
        .unwrap();
    }
    out.push('\n');
    out.push_str("key,value\n");
    for (k, v) in [
        ("not_random_excluding_type3", summary.not_random_excluding_type3),
        ("total_excluding_type3", summary.total_excluding_type3),
        ("kpss_rejected", summary.kpss_rejected),
        ("nist_rejected", summary.nist_rejected),
        ("compact_object_found", summary.compact_object_found),
        ("type3_not_random", summary.type3_not_random),
        ("type3_total", summary.type3_total),
        ("adf_unit_root", summary.adf_unit_root),
        ("overlap", summary.overlap.len()),
    ] {
        writeln!(out, "{k},{v}").unwrap();
    }
    for l in qkd_lines(&summary, thresholds) {
        writeln!(out, "qkd,\"{l}\"").unwrap();
    }
    out
}
