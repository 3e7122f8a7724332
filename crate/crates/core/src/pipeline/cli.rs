//! `biphoton` command line: `simulate`, `build-series`, `analyze`, `report`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use super::ledger::{render_csv, render_markdown, QKD_THRESHOLDS};
use super::results::{format_results, read_results_file};
use super::{analyze_series, series_id, AnalysisConfig, StationarityInput};
use crate::quantum::{calibrate, normalize_angle, SettingsSet, StateModel};
use crate::series::{
    self, build_deltat, build_dt, intercalate_outcomes, series_file_name, SeriesData, SeriesKind, SeriesMeta,
};
use crate::simulator::{derive_seed, simulate_run, SimConfig};
use crate::timetag::{
    assign_pulses_guarded, find_coincidences, read_stream_file, stroboscope, write_stream_file, CoincidenceEvent,
    StrobeInput, TimeTagStream, DEFAULT_PRE_TRIGGER_GUARD_PS, DEFAULT_WINDOW_PS,
};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn data_err(e: impl ToString) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "biphoton",
    version,
    about = "Biphoton time-tag simulator and randomness analyzer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the sixteen CHSH runs of one state.
    Simulate(SimulateArgs),
    /// Build dt, deltat and outcome series from simulated or recorded runs.
    BuildSeries(BuildArgs),
    /// Run the indicator battery on every series of a directory.
    Analyze(AnalyzeArgs),
    /// Render tables, the rejection ledger and the QKD comparison.
    Report(ReportArgs),
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    /// Target CHSH parameter; requires --c and --p.
    #[arg(long = "s", requires_all = ["c", "p"], conflicts_with = "model")]
    s: Option<f64>,
    /// Target concurrence.
    #[arg(long)]
    c: Option<f64>,
    /// Target purity.
    #[arg(long)]
    p: Option<f64>,
    /// Explicit model, `c=<c>,v=<v>`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 22.5)]
    theta: f64,
    /// Explicit settings `a,a',b,b'` in degrees; overrides --theta.
    #[arg(long)]
    settings: Option<String>,
    #[arg(long, default_value_t = 300.0)]
    duration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// State label written into the run metadata.
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value_t = 0.08)]
    photons_per_pulse: f64,
    #[arg(long, default_value_t = 0.25)]
    efficiency: f64,
    #[arg(long, default_value_t = 1.0)]
    jitter_ns: f64,
    #[arg(long, default_value_t = 0.0)]
    accidentals: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TypeArg {
    Dt,
    Deltat,
    Outcomes,
}

#[derive(Debug, clap::Args)]
struct BuildArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "dt,deltat,outcomes")]
    types: Vec<TypeArg>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_PS)]
    window_ps: u64,
    /// Coincidences this close before a trigger belong to its pulse and are
    /// dropped rather than wrapped to the previous one.
    #[arg(long, default_value_t = DEFAULT_PRE_TRIGGER_GUARD_PS as f64 / 1000.0)]
    pre_trigger_guard_ns: f64,
    /// Also write stroboscopic histograms with this bin width.
    #[arg(long)]
    strobe_bin_ns: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StationarityArg {
    Real,
    Bits,
}

#[derive(Debug, clap::Args)]
struct AnalyzeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = StationarityArg::Real)]
    stationarity_input: StationarityArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Md,
    Csv,
}

#[derive(Debug, clap::Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Md)]
    format: ReportFormat,
    /// Thresholds to compare with; both 0.14 and 0.25 by default.
    #[arg(long = "qkd-threshold")]
    qkd_threshold: Vec<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::BuildSeries(a) => build_series(&a),
        Command::Analyze(a) => analyze(&a),
        Command::Report(a) => report(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn fmt_angle(x: f64) -> String {
    format!("{}", normalize_angle(x))
}

fn parse_model(text: &str) -> Result<StateModel> {
    let mut c = None;
    let mut v = None;
    for part in text.split(',') {
        let (k, val) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad model term {part:?}")))?;
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad model value {val:?}")))?;
        match k.trim() {
            "c" => c = Some(val),
            "v" => v = Some(val),
            other => return Err(CliError::Usage(format!("unknown model key {other:?}"))),
        }
    }
    let (c, v) = c
        .zip(v)
        .ok_or_else(|| CliError::Usage("model needs c=<c>,v=<v>".into()))?;
    StateModel::new(c, v).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_settings(text: &str) -> Result<SettingsSet> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad settings {text:?}")))?;
    match v[..] {
        [a, ap, b, bp] => Ok(SettingsSet::new(a, ap, b, bp)),
        _ => Err(CliError::Usage("settings need four angles a,a',b,b'".into())),
    }
}

/// The sixteen run angles: `{a, a+90, a', a'+90} x {b, b+90, b', b'+90}`.
pub fn run_angles(settings: &SettingsSet) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(16);
    for x in [settings.a, settings.a_prime] {
        for y in [settings.b, settings.b_prime] {
            for (dx, dy) in [(0.0, 0.0), (0.0, 90.0), (90.0, 0.0), (90.0, 90.0)] {
                out.push((normalize_angle(x + dx), normalize_angle(y + dy)));
            }
        }
    }
    out
}

fn run_file_name(angles: (f64, f64)) -> String {
    format!("run_{}_{}.qtt", fmt_angle(angles.0), fmt_angle(angles.1))
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let settings = match &args.settings {
        Some(s) => parse_settings(s)?,
        None => SettingsSet::from_theta(args.theta),
    };
    let mut manifest = vec![format!("biphoton.version={}", env!("CARGO_PKG_VERSION"))];
    let (state, default_label) = match (&args.model, args.s) {
        (Some(m), _) => {
            let st = parse_model(m)?;
            (st, format!("c={},v={}", st.coherence(), st.visibility()))
        }
        (None, Some(s)) => {
            let (c, p) = (args.c.unwrap_or_default(), args.p.unwrap_or_default());
            let cal = calibrate(s, c, p, &settings).map_err(|e| CliError::Usage(e.to_string()))?;
            manifest.extend(cal.report_lines());
            (cal.state, format!("S={s}"))
        }
        (None, None) => return Err(CliError::Usage("give --s/--c/--p or --model".into())),
    };
    let label = args.label.clone().unwrap_or(default_label);
    let base = SimConfig {
        duration_s: args.duration,
        mean_detected_photons_per_pulse: args.photons_per_pulse,
        pair_efficiency: args.efficiency,
        jitter_sigma_ns: args.jitter_ns,
        accidental_rate: args.accidentals,
        seed: args.seed,
        ..SimConfig::default()
    };
    base.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let theta = args.settings.is_none().then_some(args.theta);
    manifest.extend([
        format!("state={label}"),
        format!("model=c={},v={}", state.coherence(), state.visibility()),
        format!(
            "settings={},{},{},{}",
            settings.a, settings.a_prime, settings.b, settings.b_prime
        ),
        format!(
            "sim=period_ns:{},width_ns:{},duration_s:{},photons_per_pulse:{},efficiency:{},jitter_ns:{},accidentals:{}",
            base.pulse_period_ns,
            base.pulse_width_ns,
            base.duration_s,
            base.mean_detected_photons_per_pulse,
            base.pair_efficiency,
            base.jitter_sigma_ns,
            base.accidental_rate
        ),
        format!("seed={}", args.seed),
    ]);
    if let Some(t) = theta {
        manifest.push(format!("theta_deg={t}"));
    }
    fs::create_dir_all(&args.out).map_err(data_err)?;
    for (i, angles) in run_angles(&settings).into_iter().enumerate() {
        let cfg = SimConfig {
            seed: derive_seed(args.seed, i as u64),
            ..base.clone()
        };
        let mut stream = simulate_run(&cfg, &state, angles.0, angles.1).map_err(|e| CliError::Usage(e.to_string()))?;
        stream
            .meta
            .set_extra("model", format!("c={},v={}", state.coherence(), state.visibility()));
        stream.meta.set_extra("state", label.clone());
        if let Some(t) = theta {
            stream.meta.set_extra("theta_deg", t.to_string());
        }
        manifest.push(format!("seed.{}={}", run_file_name(angles), cfg.seed));
        write_stream_file(&stream, &args.out.join(run_file_name(angles))).map_err(data_err)?;
    }
    write_manifest(&args.out, &manifest)
}

fn write_manifest(dir: &Path, lines: &[String]) -> Result<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text).map_err(data_err)
}

fn read_manifest(dir: &Path) -> Result<Vec<String>> {
    match fs::read_to_string(dir.join(MANIFEST_FILE)) {
        Ok(t) => Ok(t.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(data_err(e)),
    }
}

fn sorted_files(dir: &Path, accept: impl Fn(&str) -> bool) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.file_name().and_then(|n| n.to_str()).is_some_and(&accept))
        .collect();
    files.sort();
    Ok(files)
}

struct LoadedRun {
    stream: TimeTagStream,
    coincidences: Vec<CoincidenceEvent>,
}

impl LoadedRun {
    fn angles(&self) -> (f64, f64) {
        let (a, b) = self.stream.meta.angles_deg;
        (normalize_angle(a), normalize_angle(b))
    }

    fn meta(&self) -> SeriesMeta {
        let mut m = SeriesMeta::new(self.angles());
        for key in ["state", "theta_deg", "model"] {
            if let Some(v) = self.stream.meta.extra(key) {
                m.set(key, v);
            }
        }
        m
    }

    /// Coincidence times measured from the first trigger.
    fn local_coincidences(&self) -> Vec<CoincidenceEvent> {
        let t0 = self.stream.triggers().first().copied().unwrap_or(0);
        self.coincidences
            .iter()
            .map(|c| CoincidenceEvent {
                t_abs: c.t_abs - t0,
                pulse: c.pulse,
            })
            .collect()
    }
}

fn load_run(path: &Path, window_ps: u64, guard_ps: u64) -> Result<LoadedRun> {
    let stream = read_stream_file(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let raw = find_coincidences(&stream, window_ps);
    let coincidences = assign_pulses_guarded(&raw, &stream.triggers(), stream.meta.period_ps, guard_ps)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(LoadedRun { stream, coincidences })
}

fn write_series(out: &Path, data: &SeriesData) -> Result<()> {
    let name = series_file_name(data.kind(), data.meta().angles_deg);
    series::write_series_file(data, &out.join(name)).map_err(data_err)
}

fn write_strobe(out: &Path, run: &LoadedRun, bin_ns: f64) -> Result<()> {
    let bin_ps = (bin_ns * 1000.0).round() as u64;
    let period = run.stream.meta.period_ps;
    let hist = |input| stroboscope(input, period, bin_ps).map_err(|e| CliError::Usage(e.to_string()));
    let a = hist(StrobeInput::SinglesA(&run.stream))?;
    let b = hist(StrobeInput::SinglesB(&run.stream))?;
    let c = hist(StrobeInput::Coincidences(&run.coincidences))?;
    let mut text = String::from("bin_start_ns,singles_a,singles_b,coincidences,efficiency\n");
    for i in 0..a.values.len() {
        let eff = if a.values[i] > 0.0 {
            c.values[i] / a.values[i]
        } else {
            0.0
        };
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            a.bin_start_ps(i) as f64 / 1000.0,
            a.values[i],
            b.values[i],
            c.values[i],
            eff
        ));
    }
    let (x, y) = run.angles();
    fs::write(out.join(format!("strobe_{}_{}.csv", x, y)), text).map_err(data_err)
}

fn build_series(args: &BuildArgs) -> Result<()> {
    let files = sorted_files(&args.input, |n| n.ends_with(".qtt") || n.ends_with(".csv"))?;
    if files.is_empty() {
        return Err(CliError::Data(format!("no run files in {}", args.input.display())));
    }
    if !(args.pre_trigger_guard_ns >= 0.0 && args.pre_trigger_guard_ns.is_finite()) {
        return Err(CliError::Usage("pre-trigger guard must be non-negative".into()));
    }
    let guard_ps = (args.pre_trigger_guard_ns * 1000.0).round() as u64;
    fs::create_dir_all(&args.out).map_err(data_err)?;
    let runs: Vec<LoadedRun> = files
        .par_iter()
        .map(|p| load_run(p, args.window_ps, guard_ps))
        .collect::<Result<_>>()?;
    for run in &runs {
        let meta = run.meta();
        if args.types.contains(&TypeArg::Dt) {
            match build_dt(&run.coincidences, meta.clone()) {
                Ok(s) => write_series(&args.out, &SeriesData::Real(s))?,
                Err(e) => eprintln!("skipping dt {:?}: {e}", run.angles()),
            }
        }
        if args.types.contains(&TypeArg::Deltat) {
            match build_deltat(&run.coincidences, meta.clone()) {
                Ok(s) => write_series(&args.out, &SeriesData::Real(s))?,
                Err(e) => eprintln!("skipping deltat {:?}: {e}", run.angles()),
            }
        }
        if let Some(bin) = args.strobe_bin_ns {
            write_strobe(&args.out, run, bin)?;
        }
    }
    if args.types.contains(&TypeArg::Outcomes) {
        // pair (x, y) with (x + 90, y + 90); the run with x < 90 is unrotated
        for unrot in runs.iter().filter(|r| r.angles().0 < 90.0) {
            let (x, y) = unrot.angles();
            let partner = (normalize_angle(x + 90.0), normalize_angle(y + 90.0));
            let Some(rot) = runs.iter().find(|r| r.angles() == partner) else {
                eprintln!("skipping outcomes ({x}, {y}): no run at {partner:?}");
                continue;
            };
            let meta = unrot
                .meta()
                .with("rotated_angles_deg", format!("{},{}", partner.0, partner.1));
            match intercalate_outcomes(&rot.local_coincidences(), &unrot.local_coincidences(), meta) {
                Ok(b) => write_series(&args.out, &SeriesData::Binary(b, SeriesKind::Outcomes))?,
                Err(e) => eprintln!("skipping outcomes ({x}, {y}): {e}"),
            }
        }
    }
    let mut manifest = read_manifest(&args.input)?;
    manifest.push(format!("series.window_ps={}", args.window_ps));
    manifest.push(format!("series.pre_trigger_guard_ps={guard_ps}"));
    write_manifest(&args.out, &manifest)
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage(format!("alpha {} outside (0, 1)", args.alpha)));
    }
    let files = sorted_files(&args.input, |n| {
        n.ends_with(".txt") && n != MANIFEST_FILE && !n.starts_with("strobe_")
    })?;
    if files.is_empty() {
        return Err(CliError::Data(format!("no series files in {}", args.input.display())));
    }
    let series: Vec<SeriesData> = files
        .iter()
        .map(|p| series::read_series_file(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))))
        .collect::<Result<_>>()?;
    let config = AnalysisConfig {
        alpha: args.alpha,
        stationarity_input: match args.stationarity_input {
            StationarityArg::Real => StationarityInput::Real,
            StationarityArg::Bits => StationarityInput::Bits,
        },
        ..AnalysisConfig::default()
    };
    let outcomes: Vec<_> = series
        .par_iter()
        .map(|d| {
            let id = series_id(d.kind(), d.meta().angles_deg, d.meta().theta_deg());
            let rec = analyze_series(&id, d, &config);
            (id, rec)
        })
        .collect();
    let mut records = Vec::new();
    for (id, r) in outcomes {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => eprintln!("skipping {id}: {e}"),
        }
    }
    if records.is_empty() {
        return Err(CliError::Numeric("no series could be analysed".into()));
    }
    let mut states: Vec<&str> = series.iter().filter_map(|d| d.meta().get("state")).collect();
    states.sort_unstable();
    states.dedup();
    let mut manifest = vec![format!("biphoton.version={}", env!("CARGO_PKG_VERSION"))];
    if !states.is_empty() {
        manifest.push(format!("state={}", states.join("|")));
    }
    manifest.extend(config.manifest_lines());
    manifest.extend(
        read_manifest(&args.input)?
            .into_iter()
            .filter(|l| !l.starts_with("biphoton.version=") && !l.starts_with("state="))
            .map(|l| format!("run.{l}")),
    );
    fs::write(&args.out, format_results(&records, &manifest)).map_err(data_err)
}

fn report(args: &ReportArgs) -> Result<()> {
    let file = read_results_file(&args.input).map_err(CliError::Data)?;
    let ledger = file.ledger().map_err(CliError::Data)?;
    let thresholds: Vec<f64> = if args.qkd_threshold.is_empty() {
        QKD_THRESHOLDS.to_vec()
    } else {
        args.qkd_threshold.clone()
    };
    if thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(CliError::Usage("QKD thresholds must lie in (0, 1]".into()));
    }
    let text = match args.format {
        ReportFormat::Md => render_markdown(&ledger, &file.manifest, &thresholds),
        ReportFormat::Csv => render_csv(&ledger, &file.manifest, &thresholds),
    };
    match &args.out {
        Some(p) => fs::write(p, text).map_err(data_err),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_distinct_runs() {
        let mut r = run_angles(&SettingsSet::standard());
        assert_eq!(r.len(), 16);
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        r.dedup();
        assert_eq!(r.len(), 16);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["biphoton", "frobnicate"]), 1);
        assert_eq!(
            run(["biphoton", "simulate", "--out", "/nonexistent", "--model", "c=2,v=1"]),
            1
        );
        assert_eq!(run(["biphoton", "--help"]), 0);
    }

    #[test]
    fn missing_input_is_data_error() {
        assert_eq!(run(["biphoton", "report", "--in", "/nonexistent/results.csv"]), 2);
    }
}
