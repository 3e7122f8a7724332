//! The `results.csv` format: `#` manifest lines, a header, then one row per
//! indicator value, `series_id,test,applicable,p_or_stat,pass`.

use std::fmt::Write as _;
use std::path::Path;

use super::{parse_series_id, LedgerEntry, SeriesRecord, VerdictLedger};

pub const HEADER: &str = "series_id,test,applicable,p_or_stat,pass";

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn value_row(out: &mut Vec<String>, id: &str, name: &str, value: Option<f64>, pass: Option<bool>) {
    match value {
        Some(v) => out.push(format!("{id},{name},1,{v},{}", pass.map_or("", flag))),
        None => out.push(format!("{id},{name},0,,")),
    }
}

/// Rows for one analysed series.
pub fn record_rows(rec: &SeriesRecord) -> Vec<String> {
    let id = rec.id.as_str();
    let mut out = Vec::new();
    value_row(&mut out, id, "kc", rec.kc.map(|k| k.normalized), None);
    value_row(&mut out, id, "km", rec.km.map(|k| k.normalized), None);
    value_row(&mut out, id, "hurst", rec.hurst.as_ref().map(|h| h.h), None);
    for run in &rec.nist {
        let prefix = format!("nist_{}", run.binarization);
        for o in &run.outcomes {
            out.extend(o.csv_rows(id, &prefix));
        }
    }
    let rejected = rec.nist_rejected();
    value_row(
        &mut out,
        id,
        "nist_rejected",
        Some(f64::from(u8::from(rejected))),
        Some(!rejected),
    );
    value_row(
        &mut out,
        id,
        "adf",
        rec.adf.map(|a| a.statistic),
        rec.adf.map(|a| a.indicator == 1),
    );
    value_row(
        &mut out,
        id,
        "kpss",
        rec.kpss.map(|k| k.statistic),
        rec.kpss.map(|k| k.indicator == 0),
    );
    value_row(&mut out, id, "delay", rec.delay.map(|d| d.delay as f64), None);
    let emb = rec.embedding.as_ref();
    value_row(
        &mut out,
        id,
        "takens_d_e",
        emb.and_then(|e| e.d_e).map(|d| d as f64),
        None,
    );
    value_row(
        &mut out,
        id,
        "compact_object",
        emb.map(|e| f64::from(u8::from(e.compact_object_found))),
        emb.map(|e| !e.compact_object_found),
    );
    value_row(
        &mut out,
        id,
        "lyapunov",
        rec.lyapunov.as_ref().and_then(|l| l.lambda_max),
        None,
    );
    out
}

/// Full file text.
pub fn format_results(records: &[SeriesRecord], manifest: &[String]) -> String {
    let mut s = String::new();
    for m in manifest {
        writeln!(s, "# {m}").unwrap();
    }
    s.push_str(HEADER);
    s.push('\n');
    for rec in records {
        for row in record_rows(rec) {
            s.push_str(&row);
            s.push('\n');
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub series_id: String,
    pub test: String,
    pub applicable: bool,
    pub value: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsFile {
    pub manifest: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl ResultsFile {
    /// Value of a `key=value` manifest line.
    pub fn manifest_value(&self, key: &str) -> Option<&str> {
        self.manifest.iter().find_map(|m| {
            m.split_once('=')
                .filter(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim())
        })
    }

    /// Rebuilds the verdict ledger. Series ids must follow
    /// [`super::series_id`].
    pub fn ledger(&self) -> Result<VerdictLedger, String> {
        let state = self.manifest_value("state").map(str::to_string);
        let mut entries: Vec<LedgerEntry> = Vec::new();
        for row in &self.rows {
            if entries.last().is_none_or(|e| e.id != row.series_id) {
                let (kind, angles, theta) =
                    parse_series_id(&row.series_id).ok_or_else(|| format!("bad series id {:?}", row.series_id))?;
                entries.push(LedgerEntry {
                    id: row.series_id.clone(),
                    kind,
                    theta_deg: theta,
                    angles_deg: angles,
                    state: state.clone(),
                    nist_rejected: false,
                    kpss_rejected: false,
                    adf_unit_root: None,
                    compact_object_found: false,
                    kc: None,
                    km: None,
                    hurst: None,
                });
            }
            let e = entries.last_mut().unwrap();
            if !row.applicable {
                continue;
            }
            match row.test.as_str() {
                "kc" => e.kc = row.value,
                "km" => e.km = row.value,
                "hurst" => e.hurst = row.value,
                "nist_rejected" => e.nist_rejected = row.pass == Some(false),
                "kpss" => e.kpss_rejected = row.pass == Some(false),
                "adf" => e.adf_unit_root = row.pass.map(|p| !p),
                "compact_object" => e.compact_object_found = row.pass == Some(false),
                _ => {}
            }
        }
        Ok(VerdictLedger { entries })
    }
}

pub fn parse_results(text: &str) -> Result<ResultsFile, String> {
    let mut file = ResultsFile::default();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(m) = line.strip_prefix('#') {
            file.manifest.push(m.trim().to_string());
            continue;
        }
        if !seen_header {
            if line != HEADER {
                return Err(format!("line {}: expected header {HEADER:?}", i + 1));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(format!("line {}: expected 5 fields", i + 1));
        }
        let bad = |what: &str| format!("line {}: bad {what}", i + 1);
        let applicable = match f[2] {
            "1" => true,
            "0" => false,
            _ => return Err(bad("applicable flag")),
        };
        let value = if f[3].is_empty() {
            None
        } else {
            Some(f[3].parse::<f64>().map_err(|_| bad("value"))?)
        };
        let pass = match f[4] {
            "" => None,
            "1" => Some(true),
            "0" => Some(false),
            _ => return Err(bad("pass flag")),
        };
        file.rows.push(ResultRow {
            series_id: f[0].to_string(),
            test: f[1].to_string(),
            applicable,
            value,
            pass,
        });
    }
    if !seen_header {
        return Err("missing header".into());
    }
    Ok(file)
}

pub fn read_results_file(path: &Path) -> Result<ResultsFile, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_results(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_rebuild() {
        let text = "# state=bell\n# alpha=0.01\nseries_id,test,applicable,p_or_stat,pass\n\
            dt_0_22.5@22.5,kc,1,0.9,\n\
            dt_0_22.5@22.5,kpss,1,0.9,0\n\
            dt_0_22.5@22.5,nist_rejected,1,0,1\n\
            outcomes_45_67.5@22.5,km,0,,\n\
            outcomes_45_67.5@22.5,nist_rejected,1,1,0\n";
        let f = parse_results(text).unwrap();
        assert_eq!(f.manifest_value("state"), Some("bell"));
        let l = f.ledger().unwrap();
        assert_eq!(l.entries.len(), 2);
        assert!(l.entries[0].kpss_rejected);
        assert!(!l.entries[0].nist_rejected);
        assert_eq!(l.entries[0].kc, Some(0.9));
        assert!(l.entries[1].nist_rejected);
        assert_eq!(l.entries[1].km, None);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_results("").is_err());
        assert!(parse_results(&format!("{HEADER}\na,b,2,,\n")).is_err());
    }
}
