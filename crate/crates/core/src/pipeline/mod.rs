//! Per-series analysis, set-level tables, the rejection ledger and the
//! command-line interface.

pub mod cli;
pub mod ledger;
pub mod results;

use crate::dynamics::{self, DelayChoice, EmbeddingResult, FnnConfig, LyapunovConfig, LyapunovResult};
use crate::randomness::{self, hurst, nist, ComplexityResult, HurstResult, TestOutcome};
use crate::series::{self, SeriesData, SeriesKind, ThresholdKind};
use crate::stationarity::{self, StationarityOutcome};

pub use ledger::{
    aggregate_tables, qkd_threshold_check, rejection_summary, LedgerEntry, QkdVerdict, RejectionSummary, TableRow,
    VerdictLedger,
};

/// Which representation the ADF and KPSS tests see for real-valued series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationarityInput {
    Real,
    Bits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub fnn: FnnConfig,
    pub lyapunov: LyapunovConfig,
    pub stationarity_input: StationarityInput,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            alpha: nist::DEFAULT_ALPHA,
            fnn: FnnConfig {
                max_points: 5_000,
                ..FnnConfig::default()
            },
            lyapunov: LyapunovConfig::default(),
            stationarity_input: StationarityInput::Real,
        }
    }
}

impl AnalysisConfig {
    /// `key=value` lines recorded in every results file.
    pub fn manifest_lines(&self) -> Vec<String> {
        vec![
            format!("alpha={}", self.alpha),
            "nist.tests=".to_string() + &nist::TEST_NAMES.join(","),
            "nist.ledger_binarization=median (types 1 and 2), bits (type 3)".into(),
            format!("hurst.estimator={}", hurst::ESTIMATOR),
            format!(
                "fnn=d_max:{},r_tol:{},a_tol:{},threshold:{},max_points:{}",
                self.fnn.d_max, self.fnn.r_tol, self.fnn.a_tol, self.fnn.threshold, self.fnn.max_points
            ),
            format!(
                "lyapunov=max_steps:{},fit_fraction:{},min_fit_points:{}",
                self.lyapunov.max_steps, self.lyapunov.fit_fraction, self.lyapunov.min_fit_points
            ),
            format!(
                "stationarity.input={}",
                match self.stationarity_input {
                    StationarityInput::Real => "real",
                    StationarityInput::Bits => "bits",
                }
            ),
            "stationarity.level=5%".into(),
        ]
    }
}

/// Identifier `<type>_<a>_<b>@<theta>`; the theta part is omitted when
/// unknown.
pub fn series_id(kind: SeriesKind, angles_deg: (f64, f64), theta_deg: Option<f64>) -> String {
    let base = format!("{}_{}_{}", kind.label(), angles_deg.0, angles_deg.1);
    match theta_deg {
        Some(t) => format!("{base}@{t}"),
        None => base,
    }
}

/// Inverse of [`series_id`].
pub fn parse_series_id(id: &str) -> Option<(SeriesKind, (f64, f64), Option<f64>)> {
    let (base, theta) = match id.split_once('@') {
        Some((b, t)) => (b, Some(t.parse().ok()?)),
        None => (id, None),
    };
    let mut parts = base.split('_');
    let kind = SeriesKind::parse(parts.next()?)?;
    let a = parts.next()?.parse().ok()?;
    let b = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((kind, (a, b), theta))
}

/// NIST battery run on one binary image of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct NistRun {
    /// `median`, `mean` or `bits`.
    pub binarization: &'static str,
    pub outcomes: Vec<TestOutcome>,
    /// Whether this run decides the ledger verdict.
    pub decides_ledger: bool,
}

/// Everything computed for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    pub id: String,
    pub kind: SeriesKind,
    pub angles_deg: (f64, f64),
    pub theta_deg: Option<f64>,
    pub length: usize,
    pub kc: Option<ComplexityResult>,
    pub km: Option<ComplexityResult>,
    pub hurst: Option<HurstResult>,
    pub nist: Vec<NistRun>,
    pub adf: Option<StationarityOutcome>,
    pub kpss: Option<StationarityOutcome>,
    pub delay: Option<DelayChoice>,
    pub embedding: Option<EmbeddingResult>,
    pub lyapunov: Option<LyapunovResult>,
    /// Indicators that could not be computed, with the reason.
    pub inapplicable: Vec<(String, String)>,
}

impl SeriesRecord {
    pub fn nist_rejected(&self) -> bool {
        self.nist
            .iter()
            .filter(|r| r.decides_ledger)
            .any(|r| randomness::series_rejected_by_nist(&r.outcomes))
    }

    pub fn kpss_rejected(&self) -> bool {
        self.kpss.is_some_and(|k| k.indicator == 1)
    }

    /// Unit root not rejected; `None` when ADF was not applicable.
    pub fn adf_unit_root(&self) -> Option<bool> {
        self.adf.map(|a| a.indicator == 0)
    }

    pub fn compact_object_found(&self) -> bool {
        self.embedding.as_ref().is_some_and(|e| e.compact_object_found)
    }
}

fn note(list: &mut Vec<(String, String)>, name: &str, reason: impl ToString) {
    list.push((name.to_string(), reason.to_string()));
}

/// Runs every indicator that applies to the series. Indicators that fail on
/// this series are listed as inapplicable rather than counted as failures.
/// Returns an error only when nothing at all could be computed.
pub fn analyze_series(id: &str, data: &SeriesData, config: &AnalysisConfig) -> Result<SeriesRecord, String> {
    let kind = data.kind();
    let meta = data.meta();
    let mut rec = SeriesRecord {
        id: id.to_string(),
        kind,
        angles_deg: meta.angles_deg,
        theta_deg: meta.theta_deg(),
        length: data.len(),
        kc: None,
        km: None,
        hurst: None,
        nist: Vec::new(),
        adf: None,
        kpss: None,
        delay: None,
        embedding: None,
        lyapunov: None,
        inapplicable: Vec::new(),
    };
    let na = &mut rec.inapplicable;

    match data {
        SeriesData::Real(s) => {
            let mean_bits = series::binarize(s, ThresholdKind::Mean);
            let median_bits = series::binarize(s, ThresholdKind::Median);
            match &mean_bits {
                Ok(b) => match randomness::normalized_complexity(&b.bits, ThresholdKind::Mean) {
                    Ok(k) => rec.kc = Some(k),
                    Err(e) => note(na, "kc", e),
                },
                Err(e) => note(na, "kc", e),
            }
            match &median_bits {
                Ok(b) => match randomness::normalized_complexity(&b.bits, ThresholdKind::Median) {
                    Ok(k) => rec.km = Some(k),
                    Err(e) => note(na, "km", e),
                },
                Err(e) => note(na, "km", e),
            }
            for (label, bits, decides) in [("median", &median_bits, true), ("mean", &mean_bits, false)] {
                match bits
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|b| nist::nist_battery(&b.bits, config.alpha).map_err(|e| e.to_string()))
                {
                    Ok(outcomes) => rec.nist.push(NistRun {
                        binarization: label,
                        outcomes,
                        decides_ledger: decides,
                    }),
                    Err(e) => note(na, &format!("nist_{label}"), e),
                }
            }
            match randomness::hurst_exponent(&s.values) {
                Ok(h) => rec.hurst = Some(h),
                Err(e) => note(na, "hurst", e),
            }
            let stationarity_values: Option<Vec<f64>> = match config.stationarity_input {
                StationarityInput::Real => Some(s.values.clone()),
                StationarityInput::Bits => median_bits
                    .as_ref()
                    .ok()
                    .map(|b| b.bits.iter().map(|&x| x as f64).collect()),
            };
            run_stationarity(&mut rec, stationarity_values.as_deref());
            run_takens(&mut rec, &s.values, config);
        }
        SeriesData::Binary(b, _) => {
            match randomness::normalized_complexity(&b.bits, ThresholdKind::None) {
                Ok(k) => rec.kc = Some(k),
                Err(e) => note(na, "kc", e),
            }
            note(na, "km", "not applicable to outcome bits");
            match nist::nist_battery(&b.bits, config.alpha) {
                Ok(outcomes) => rec.nist.push(NistRun {
                    binarization: "bits",
                    outcomes,
                    decides_ledger: true,
                }),
                Err(e) => note(na, "nist_bits", e),
            }
            let values: Vec<f64> = b.bits.iter().map(|&x| x as f64).collect();
            match randomness::hurst_exponent(&values) {
                Ok(h) => rec.hurst = Some(h),
                Err(e) => note(na, "hurst", e),
            }
            run_stationarity(&mut rec, Some(&values));
            note(
                &mut rec.inapplicable,
                "takens",
                "reconstruction does not apply to outcome bits",
            );
        }
    }

    let anything = rec.kc.is_some()
        || rec.km.is_some()
        || rec.hurst.is_some()
        || !rec.nist.is_empty()
        || rec.adf.is_some()
        || rec.kpss.is_some()
        || rec.embedding.is_some();
    if !anything {
        let reasons: Vec<String> = rec.inapplicable.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        return Err(format!("no indicator applies ({})", reasons.join("; ")));
    }
    Ok(rec)
}

fn run_stationarity(rec: &mut SeriesRecord, values: Option<&[f64]>) {
    let Some(values) = values else {
        note(&mut rec.inapplicable, "adf", "no binary image");
        note(&mut rec.inapplicable, "kpss", "no binary image");
        return;
    };
    match stationarity::adf_test(values, None, false) {
        Ok(a) => rec.adf = Some(a),
        Err(e) => note(&mut rec.inapplicable, "adf", e),
    }
    match stationarity::kpss_test(values, None, false) {
        Ok(k) => rec.kpss = Some(k),
        Err(e) => note(&mut rec.inapplicable, "kpss", e),
    }
}

fn run_takens(rec: &mut SeriesRecord, values: &[f64], config: &AnalysisConfig) {
    let delay = match dynamics::choose_delay(values) {
        Ok(d) => d,
        Err(e) => {
            note(&mut rec.inapplicable, "takens", e);
            return;
        }
    };
    rec.delay = Some(delay);
    let emb = match dynamics::fnn_dimension(values, delay.delay, &config.fnn) {
        Ok(r) => r,
        Err(e) => {
            note(&mut rec.inapplicable, "takens", e);
            return;
        }
    };
    if let Some(d_e) = emb.d_e.filter(|_| emb.compact_object_found) {
        match dynamics::largest_lyapunov(values, d_e, delay.delay, &config.lyapunov) {
            Ok(l) => rec.lyapunov = Some(l),
            Err(e) => note(&mut rec.inapplicable, "lyapunov", e),
        }
    } else {
        note(&mut rec.inapplicable, "lyapunov", "no embedding dimension found");
    }
    rec.embedding = Some(emb);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{RealSeries, SeriesMeta};

    #[test]
    fn id_round_trip() {
        let id = series_id(SeriesKind::Deltat, (0.0, 22.5), Some(22.5));
        assert_eq!(id, "deltat_0_22.5@22.5");
        assert_eq!(
            parse_series_id(&id),
            Some((SeriesKind::Deltat, (0.0, 22.5), Some(22.5)))
        );
        assert_eq!(
            parse_series_id("dt_45_112.5"),
            Some((SeriesKind::Dt, (45.0, 112.5), None))
        );
        assert_eq!(parse_series_id("bogus"), None);
    }

    #[test]
    fn all_zero_series_is_rejected() {
        let data = SeriesData::Binary(
            crate::series::BinarySeries {
                bits: vec![0; 2000],
                threshold_kind: ThresholdKind::None,
                meta: SeriesMeta::default(),
            },
            SeriesKind::Outcomes,
        );
        let rec = analyze_series("outcomes_0_0", &data, &AnalysisConfig::default()).unwrap();
        assert!(rec.kc.unwrap().normalized < 0.05);
        assert!(rec.nist_rejected());
        assert!(rec.embedding.is_none());
        assert!(rec.inapplicable.iter().any(|(k, _)| k == "takens"));
    }

    #[test]
    fn too_short_is_skipped() {
        let data = SeriesData::Real(RealSeries {
            values: vec![1.0, 2.0],
            kind: SeriesKind::Dt,
            meta: SeriesMeta::default(),
        });
        let rec = analyze_series("dt_0_0", &data, &AnalysisConfig::default());
        // the two-value series still yields complexities, flagged unreliable
        assert!(rec.is_ok_and(|r| !r.kc.unwrap().reliable));
        let data = SeriesData::Real(RealSeries {
            values: vec![1.0],
            kind: SeriesKind::Dt,
            meta: SeriesMeta::default(),
        });
        assert!(analyze_series("dt_0_0", &data, &AnalysisConfig::default()).is_err());
    }
}
