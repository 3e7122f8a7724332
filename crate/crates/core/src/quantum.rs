//! Two-parameter mixed biphoton state and CHSH/concurrence/purity estimators.
//!
//! The state is `rho = v * rho_deph(c) + (1 - v) * I/4` in the
//! `{HH, HV, VH, VV}` basis, where `rho_deph(c)` has diagonal
//! `(1/2, 0, 0, 1/2)` and corner coherences `c/2`. `c` models how well the
//! two down-conversion paths are made indistinguishable, `v` admixes white
//! noise. Closed forms used below:
//!
//! * `E(a, b) = v (cos 2a cos 2b + c sin 2a sin 2b)`
//! * `C = 2 max(0, v c / 2 - (1 - v) / 4)`
//! * `P = Tr rho^2 = (1 + v^2) / 4 + v^2 c^2 / 2`

use thiserror::Error;

pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("state parameter {name}={value} outside [0, 1]")]
    InvalidState { name: &'static str, value: f64 },
    #[error("invalid calibration target: {0}")]
    InvalidTarget(String),
    #[error("correlation estimate needs at least one coincidence")]
    InsufficientData,
}

pub type Result<T> = std::result::Result<T, QuantumError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateModel {
    coherence: f64,
    visibility: f64,
}

impl StateModel {
    pub fn new(coherence: f64, visibility: f64) -> Result<Self> {
        for (name, value) in [("c", coherence), ("v", visibility)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(QuantumError::InvalidState { name, value });
            }
        }
        Ok(Self { coherence, visibility })
    }

    /// The maximally entangled `|phi+>` state.
    pub fn bell() -> Self {
        Self {
            coherence: 1.0,
            visibility: 1.0,
        }
    }

    pub fn coherence(&self) -> f64 {
        self.coherence
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    /// Density matrix in the `{HH, HV, VH, VV}` basis, row-major.
    pub fn density_matrix(&self) -> [[f64; 4]; 4] {
        let v = self.visibility;
        let noise = (1.0 - v) / 4.0;
        let corner = v * self.coherence / 2.0;
        let mut rho = [[0.0; 4]; 4];
        rho[0][0] = v / 2.0 + noise;
        rho[1][1] = noise;
        rho[2][2] = noise;
        rho[3][3] = v / 2.0 + noise;
        rho[0][3] = corner;
        rho[3][0] = corner;
        rho
    }
}

/// Polarizer settings in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingsSet {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl SettingsSet {
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        Self {
            a: normalize_angle(a),
            a_prime: normalize_angle(a_prime),
            b: normalize_angle(b),
            b_prime: normalize_angle(b_prime),
        }
    }

    /// `{a = 0, a' = 2 theta, b = theta, b' = 3 theta}`; `theta = 22.5` gives the
    /// optimal CHSH settings.
    pub fn from_theta(theta_deg: f64) -> Self {
        Self::new(0.0, 2.0 * theta_deg, theta_deg, 3.0 * theta_deg)
    }

    pub fn standard() -> Self {
        Self::from_theta(22.5)
    }

    /// The four setting pairs entering S, in the order
    /// `(a, b), (a, b'), (a', b), (a', b')`.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }
}

/// Reduces an angle in degrees to `[0, 180)`.
pub fn normalize_angle(deg: f64) -> f64 {
    let r = deg.rem_euclid(180.0);
    // rem_euclid can return 180.0 for tiny negative inputs
    if r >= 180.0 {
        0.0
    } else {
        r
    }
}

pub fn correlation(state: &StateModel, a_deg: f64, b_deg: f64) -> f64 {
    let (a, b) = ((2.0 * a_deg).to_radians(), (2.0 * b_deg).to_radians());
    state.visibility * (a.cos() * b.cos() + state.coherence * a.sin() * b.sin())
}

fn chsh_combination(e: [f64; 4]) -> f64 {
    (e[0] - e[1] + e[2] + e[3]).abs()
}

pub fn chsh_from_model(state: &StateModel, settings: &SettingsSet) -> f64 {
    chsh_combination(settings.pairs().map(|(a, b)| correlation(state, a, b)))
}

pub fn concurrence(state: &StateModel) -> f64 {
    let v = state.visibility;
    2.0 * (v * state.coherence / 2.0 - (1.0 - v) / 4.0).max(0.0)
}

pub fn purity(state: &StateModel) -> f64 {
    let v = state.visibility;
    let c = state.coherence;
    (1.0 + v * v) / 4.0 + v * v * c * c / 2.0
}

/// Target and achieved value of one calibrated quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationEntry {
    pub name: &'static str,
    pub target: f64,
    pub achieved: f64,
}

impl CalibrationEntry {
    pub fn relative_residual(&self) -> f64 {
        (self.achieved - self.target).abs() / self.target.abs().max(f64::EPSILON)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub state: StateModel,
    pub entries: [CalibrationEntry; 3],
}

impl Calibration {
    pub fn max_relative_residual(&self) -> f64 {
        self.entries
            .iter()
            .map(CalibrationEntry::relative_residual)
            .fold(0.0, f64::max)
    }

    /// Lines of `key=value` text for run manifests and reports.
    pub fn report_lines(&self) -> Vec<String> {
        let mut lines = vec![format!(
            "calibration.model=c={},v={}",
            fmt6(self.state.coherence),
            fmt6(self.state.visibility)
        )];
        for e in &self.entries {
            lines.push(format!(
                "calibration.{}=target:{},achieved:{},relative_residual:{}",
                e.name,
                fmt6(e.target),
                fmt6(e.achieved),
                fmt6(e.relative_residual())
            ));
        }
        lines.push(format!(
            "calibration.max_relative_residual={}",
            fmt6(self.max_relative_residual())
        ));
        lines
    }
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn calibration_cost(state: &StateModel, settings: &SettingsSet, targets: [f64; 3]) -> f64 {
    let achieved = [chsh_from_model(state, settings), concurrence(state), purity(state)];
    achieved
        .iter()
        .zip(targets)
        .map(|(a, t)| {
            let r = (a - t) / t.abs().max(f64::EPSILON);
            r * r
        })
        .sum()
}

/// Fits `(c, v)` to measured `(S, C, P)` by least squares on relative errors:
/// a grid scan at resolution 1e-3 followed by successive local refinements.
pub fn calibrate(target_s: f64, target_c: f64, target_p: f64, settings: &SettingsSet) -> Result<Calibration> {
    if !(target_s > 0.0 && target_s <= TSIRELSON + 1e-12) {
        return Err(QuantumError::InvalidTarget(format!(
            "S={target_s} outside (0, 2*sqrt(2)]"
        )));
    }
    if !(0.0..=1.0).contains(&target_c) {
        return Err(QuantumError::InvalidTarget(format!("C={target_c} outside [0, 1]")));
    }
    if !(0.25..=1.0).contains(&target_p) {
        return Err(QuantumError::InvalidTarget(format!("P={target_p} outside [0.25, 1]")));
    }
    let targets = [target_s, target_c, target_p];
    let cost = |c: f64, v: f64| {
        calibration_cost(
            &StateModel {
                coherence: c,
                visibility: v,
            },
            settings,
            targets,
        )
    };

    const STEPS: usize = 1000;
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..=STEPS {
        let c = i as f64 / STEPS as f64;
        for j in 0..=STEPS {
            let v = j as f64 / STEPS as f64;
            let f = cost(c, v);
            if f < best.2 {
                best = (c, v, f);
            }
        }
    }
    let mut step = 1.0 / STEPS as f64;
    for _ in 0..6 {
        step /= 10.0;
        let (c0, v0, _) = best;
        for i in -20..=20 {
            let c = (c0 + i as f64 * step).clamp(0.0, 1.0);
            for j in -20..=20 {
                let v = (v0 + j as f64 * step).clamp(0.0, 1.0);
                let f = cost(c, v);
                if f < best.2 {
                    best = (c, v, f);
                }
            }
        }
    }
    let state = StateModel {
        coherence: best.0,
        visibility: best.1,
    };
    let entries = [
        CalibrationEntry {
            name: "S",
            target: target_s,
            achieved: chsh_from_model(&state, settings),
        },
        CalibrationEntry {
            name: "C",
            target: target_c,
            achieved: concurrence(&state),
        },
        CalibrationEntry {
            name: "P",
            target: target_p,
            achieved: purity(&state),
        },
    ];
    Ok(Calibration { state, entries })
}

/// Coincidence counts at `(x, y)`, `(x, y+90)`, `(x+90, y)`, `(x+90, y+90)`:
/// the `++`, `+-`, `-+` and `--` outcomes of single-detector stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorrelationCounts {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
}

impl CorrelationCounts {
    pub fn new(pp: u64, pm: u64, mp: u64, mm: u64) -> Self {
        Self { pp, pm, mp, mm }
    }

    pub fn total(&self) -> u64 {
        self.pp + self.pm + self.mp + self.mm
    }
}

pub fn correlation_from_counts(counts: &CorrelationCounts) -> Result<f64> {
    let total = counts.total();
    if total == 0 {
        return Err(QuantumError::InsufficientData);
    }
    let same = (counts.pp + counts.mm) as f64;
    let diff = (counts.pm + counts.mp) as f64;
    Ok((same - diff) / total as f64)
}

/// Counts for the four setting pairs of a CHSH measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChshCounts {
    pub ab: CorrelationCounts,
    pub ab_prime: CorrelationCounts,
    pub a_prime_b: CorrelationCounts,
    pub a_prime_b_prime: CorrelationCounts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshEstimate {
    pub s: f64,
    pub std_error: f64,
    pub correlations: [f64; 4],
}

/// S from sixteen counts; the error propagates the binomial variance
/// `(1 - E^2) / N` of each correlation.
pub fn chsh_from_counts(counts: &ChshCounts) -> Result<ChshEstimate> {
    let groups = [counts.ab, counts.ab_prime, counts.a_prime_b, counts.a_prime_b_prime];
    let mut e = [0.0; 4];
    let mut var = 0.0;
    for (slot, g) in e.iter_mut().zip(&groups) {
        *slot = correlation_from_counts(g)?;
        var += (1.0 - *slot * *slot) / g.total() as f64;
    }
    Ok(ChshEstimate {
        s: chsh_combination(e),
        std_error: var.sqrt(),
        correlations: e,
    })
}
