//! End-to-end analysis scenarios for the three-site chain: initial-state
//! builders, four canned runs, the CSV record format, and the flat
//! key-value settings layer shared by config files and CLI flags.
//!
//! Scenarios:
//! - `alpha_sweep`: all discord measures at t = 0 across an 11-point grid
//!   of the GHZ/Bell mixture weight. The grid value is carried in the
//!   `tau` column, which is otherwise unused at t = 0.
//! - `mgqd_trajectory`: full breakdown (GQDs, MGQD, residuals,
//!   probabilities) along a dissipative trajectory of the mixture state.
//! - `single_excitation`: three-site GQD and excitation probabilities
//!   starting from one excitation in cavity 2.
//! - `sudden_transition`: pairwise GQD of cavities (1,3) starting from a
//!   Bell-diagonal pair with the middle cavity in a definite level.
//!
//! Every run is deterministic given its [`ScenarioSpec`], including the
//! optimizer seed; rerunning one reproduces the CSV byte for byte.

use crate::dynamics::{evolve, EvolutionConfig, DynamicsError};
use crate::measures::{
    bipartite_gqd, discord_breakdown, minimize_gqd, MeasuresError, OptimizationConfig,
};
use crate::model::{build_hamiltonian, davies_channels, ModelError, NetworkParams, DEFAULT_COUPLING};
use crate::qmat::{DensityMatrix, OperatorMatrix, QmatError};
use num_complex::Complex64;
use std::fmt;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;
use thiserror::Error;

/// The scenarios run on the laboratory-scale three-site chain.
const N_SITES: usize = 3;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("alpha = {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("site {site} outside 1..={n}")]
    BadSite { site: usize, n: usize },
    #[error("correlation triple gives negative Bell weight {weight:.3e}")]
    InvalidBellTriple { weight: f64 },
    #[error("settings line {line}: {message}")]
    BadSetting { line: usize, message: String },
    #[error("no scenario kind given; pass --scenario or put `scenario = ...` in the config file")]
    MissingKind,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Measures(#[from] MeasuresError),
    #[error(transparent)]
    State(#[from] QmatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    AlphaSweep,
    MgqdTrajectory,
    SingleExcitation,
    SuddenTransition,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::AlphaSweep => "alpha_sweep",
            Self::MgqdTrajectory => "mgqd_trajectory",
            Self::SingleExcitation => "single_excitation",
            Self::SuddenTransition => "sudden_transition",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha_sweep" => Ok(Self::AlphaSweep),
            "mgqd_trajectory" => Ok(Self::MgqdTrajectory),
            "single_excitation" => Ok(Self::SingleExcitation),
            "sudden_transition" => Ok(Self::SuddenTransition),
            other => Err(format!(
                "unknown scenario `{other}`; expected alpha_sweep, mgqd_trajectory, \
                 single_excitation, or sudden_transition"
            )),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Level of the middle cavity in the sudden-transition initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MiddleState {
    E,
    #[default]
    G,
}

impl FromStr for MiddleState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "E" | "e" => Ok(Self::E),
            "G" | "g" => Ok(Self::G),
            other => Err(format!("middle state must be E or G, got `{other}`")),
        }
    }
}

/// Everything a run needs; construct via [`Overrides::into_spec`] or
/// [`ScenarioSpec::for_kind`] and adjust fields directly.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub alpha: f64,
    pub bell_diag: (f64, f64, f64),
    pub middle: MiddleState,
    pub params: NetworkParams,
    pub evolution: EvolutionConfig,
    pub optimization: OptimizationConfig,
    pub out: Option<PathBuf>,
}

impl ScenarioSpec {
    /// Per-kind defaults: cavity lifetime, horizon, and sampling match the
    /// regimes the scenarios are meant to probe; the sudden-transition
    /// optimizer tolerance is tightened because its late-time pairwise
    /// extrema sit many decades below a bit.
    pub fn for_kind(kind: ScenarioKind) -> Self {
        let (t_cav, t_max, stride, f_tol) = match kind {
            ScenarioKind::AlphaSweep => (1e-5, 0.0, 1, 1e-7),
            ScenarioKind::MgqdTrajectory => (1e-5, 12.0, 10, 1e-7),
            ScenarioKind::SingleExcitation => (1e-3, 30.0, 2, 1e-7),
            ScenarioKind::SuddenTransition => (1e-5, 120.0, 20, 1e-12),
        };
        Self {
            kind,
            alpha: 0.0,
            bell_diag: (1.0, -0.8, 0.8),
            middle: MiddleState::G,
            params: NetworkParams::uniform_chain(N_SITES, DEFAULT_COUPLING, 1e-2, t_cav),
            evolution: EvolutionConfig {
                dt: Some(0.02),
                t_max,
                sample_stride: stride,
                ..EvolutionConfig::default()
            },
            optimization: OptimizationConfig {
                f_tol,
                ..OptimizationConfig::default()
            },
            out: None,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ScenarioError::AlphaOutOfRange(self.alpha));
        }
        self.params.validate()?;
        if self.kind == ScenarioKind::SuddenTransition {
            let (c1, c2, c3) = self.bell_diag;
            validate_bell_triple(c1, c2, c3)?;
        }
        Ok(())
    }
}

/// One sampled row. Fields a scenario does not compute stay `None` and
/// serialize as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputRecord {
    /// Dimensionless time; the alpha sweep stores the grid value here.
    pub tau: f64,
    pub gqd_123: Option<f64>,
    pub gqd_12: Option<f64>,
    pub gqd_13: Option<f64>,
    pub gqd_23: Option<f64>,
    pub mgqd: Option<f64>,
    pub d_r1: Option<f64>,
    pub d_r2: Option<f64>,
    pub d_r3: Option<f64>,
    pub p_e1: Option<f64>,
    pub p_e2: Option<f64>,
    pub p_e3: Option<f64>,
}

impl OutputRecord {
    fn empty(tau: f64) -> Self {
        Self {
            tau,
            gqd_123: None,
            gqd_12: None,
            gqd_13: None,
            gqd_23: None,
            mgqd: None,
            d_r1: None,
            d_r2: None,
            d_r3: None,
            p_e1: None,
            p_e2: None,
            p_e3: None,
        }
    }

    fn csv_row(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        format!(
            "{:.16e},{},{},{},{},{},{},{},{},{},{},{}",
            self.tau,
            cell(self.gqd_123),
            cell(self.gqd_12),
            cell(self.gqd_13),
            cell(self.gqd_23),
            cell(self.mgqd),
            cell(self.d_r1),
            cell(self.d_r2),
            cell(self.d_r3),
            cell(self.p_e1),
            cell(self.p_e2),
            cell(self.p_e3),
        )
    }
}

pub const CSV_HEADER: &str = "tau,gqd_123,gqd_12,gqd_13,gqd_23,mgqd,d_r1,d_r2,d_r3,p_e1,p_e2,p_e3";

/// Writes header plus one newline-terminated row per record, floats at
/// 17 significant digits so values round-trip exactly.
pub fn write_csv<W: Write>(records: &[OutputRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for record in records {
        writeln!(w, "{}", record.csv_row())?;
    }
    Ok(())
}

/// Mixture of the coherent GHZ projector and the Bell pair on cavities
/// (1,3) with cavity 2 in |G>:
/// rho = alpha |GHZ><GHZ| + (1 - alpha) |Phi><Phi|,
/// |GHZ> = (|EEE> + |GGG>)/sqrt(2), |Phi> = (|EGG> + |GGE>)/sqrt(2).
pub fn state_mixture_alpha(alpha: f64) -> Result<DensityMatrix, ScenarioError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ScenarioError::AlphaOutOfRange(alpha));
    }
    let ghz = superposition_projector(&[0b000, 0b111]);
    let bell = superposition_projector(&[0b011, 0b110]);
    Ok(DensityMatrix::new(ghz.scale(alpha) + bell.scale(1.0 - alpha))?)
}

/// Pure product state with the excitation on `site` (1-based) and the
/// other two cavities in |G>.
pub fn state_single_excitation(site: usize) -> Result<DensityMatrix, ScenarioError> {
    if site == 0 || site > N_SITES {
        return Err(ScenarioError::BadSite { site, n: N_SITES });
    }
    let idx = 0b111 & !(1 << (N_SITES - site));
    Ok(DensityMatrix::new(superposition_projector(&[idx]))?)
}

/// Bell-diagonal pair on cavities (1,3), in the (EE, EG, GE, GG) basis
/// with entries (1 +- c3)/4 on the diagonal and (c1 -+ c2)/4 on the
/// anti-diagonal, tensored with |middle> on cavity 2 and reordered to
/// site order (1,2,3).
pub fn state_sudden_transition(
    c1: f64,
    c2: f64,
    c3: f64,
    middle: MiddleState,
) -> Result<DensityMatrix, ScenarioError> {
    validate_bell_triple(c1, c2, c3)?;
    let mut block = OperatorMatrix::zeros(4, 4);
    let r = |x: f64| Complex64::new(x, 0.0);
    block[(0, 0)] = r(0.25 * (1.0 + c3));
    block[(1, 1)] = r(0.25 * (1.0 - c3));
    block[(2, 2)] = r(0.25 * (1.0 - c3));
    block[(3, 3)] = r(0.25 * (1.0 + c3));
    block[(0, 3)] = r(0.25 * (c1 - c2));
    block[(3, 0)] = r(0.25 * (c1 - c2));
    block[(1, 2)] = r(0.25 * (c1 + c2));
    block[(2, 1)] = r(0.25 * (c1 + c2));

    let mid = match middle {
        MiddleState::E => 0usize,
        MiddleState::G => 1usize,
    };
    let mut full = OperatorMatrix::zeros(8, 8);
    for a in 0..2 {
        for c in 0..2 {
            for ap in 0..2 {
                for cp in 0..2 {
                    full[(4 * a + 2 * mid + c, 4 * ap + 2 * mid + cp)] =
                        block[(2 * a + c, 2 * ap + cp)];
                }
            }
        }
    }
    Ok(DensityMatrix::new(full)?)
}

/// Runs the scenario and returns its sampled records in time (or grid)
/// order. Deterministic given the spec.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<Vec<OutputRecord>, ScenarioError> {
    spec.validate()?;
    match spec.kind {
        ScenarioKind::AlphaSweep => run_alpha_sweep(spec),
        ScenarioKind::MgqdTrajectory => {
            let rho0 = state_mixture_alpha(spec.alpha)?;
            run_trajectory(spec, &rho0, |state, opt, record| {
                let b = discord_breakdown(state, opt)?;
                let (d1, d2, d3) = b.residuals();
                record.mgqd = Some(b.mgqd());
                record.gqd_123 = Some(b.g123.value);
                record.gqd_12 = Some(b.g12.value);
                record.gqd_13 = Some(b.g13.value);
                record.gqd_23 = Some(b.g23.value);
                record.d_r1 = Some(d1);
                record.d_r2 = Some(d2);
                record.d_r3 = Some(d3);
                Ok(())
            })
        }
        ScenarioKind::SingleExcitation => {
            let rho0 = state_single_excitation(2)?;
            run_trajectory(spec, &rho0, |state, opt, record| {
                record.gqd_123 = Some(minimize_gqd(state, opt)?.value);
                Ok(())
            })
        }
        ScenarioKind::SuddenTransition => {
            let (c1, c2, c3) = spec.bell_diag;
            let rho0 = state_sudden_transition(c1, c2, c3, spec.middle)?;
            run_trajectory(spec, &rho0, |state, opt, record| {
                record.gqd_13 = Some(bipartite_gqd(state, (1, 3), opt)?.value);
                Ok(())
            })
        }
    }
}

fn run_alpha_sweep(spec: &ScenarioSpec) -> Result<Vec<OutputRecord>, ScenarioError> {
    let mut records = Vec::with_capacity(11);
    for i in 0..=10 {
        let alpha = i as f64 / 10.0;
        let rho = state_mixture_alpha(alpha)?;
        let b = discord_breakdown(&rho, &spec.optimization)?;
        let (d1, d2, d3) = b.residuals();
        let mut record = OutputRecord::empty(alpha);
        record.gqd_123 = Some(b.g123.value);
        record.gqd_12 = Some(b.g12.value);
        record.gqd_13 = Some(b.g13.value);
        record.gqd_23 = Some(b.g23.value);
        record.mgqd = Some(b.mgqd());
        record.d_r1 = Some(d1);
        record.d_r2 = Some(d2);
        record.d_r3 = Some(d3);
        records.push(record);
    }
    Ok(records)
}

fn run_trajectory(
    spec: &ScenarioSpec,
    rho0: &DensityMatrix,
    fill: impl Fn(&DensityMatrix, &OptimizationConfig, &mut OutputRecord) -> Result<(), ScenarioError>,
) -> Result<Vec<OutputRecord>, ScenarioError> {
    let h = build_hamiltonian(&spec.params)?;
    let channels = davies_channels(&h, &spec.params, spec.params.flat_rate_fn())?;
    let trajectory = evolve(rho0, &h, &channels, &spec.evolution)?;
    let mut records = Vec::with_capacity(trajectory.len());
    for k in 0..trajectory.len() {
        let mut record = OutputRecord::empty(trajectory.times[k]);
        record.p_e1 = Some(trajectory.probabilities[k][0]);
        record.p_e2 = Some(trajectory.probabilities[k][1]);
        record.p_e3 = Some(trajectory.probabilities[k][2]);
        fill(&trajectory.states[k], &spec.optimization, &mut record)?;
        records.push(record);
    }
    Ok(records)
}

fn superposition_projector(indices: &[usize]) -> OperatorMatrix {
    let norm = 1.0 / (indices.len() as f64).sqrt();
    let mut v = nalgebra::DVector::<Complex64>::zeros(1 << N_SITES);
    for &i in indices {
        v[i] = Complex64::new(norm, 0.0);
    }
    &v * v.adjoint()
}

fn validate_bell_triple(c1: f64, c2: f64, c3: f64) -> Result<(), ScenarioError> {
    let weights = [
        0.25 * (1.0 + c1 - c2 + c3),
        0.25 * (1.0 - c1 + c2 + c3),
        0.25 * (1.0 + c1 + c2 - c3),
        0.25 * (1.0 - c1 - c2 - c3),
    ];
    for &w in &weights {
        if w < -1e-12 {
            return Err(ScenarioError::InvalidBellTriple { weight: w });
        }
    }
    Ok(())
}

/// Optional settings collected from a config file or command-line flags.
/// Later layers win: `flags.merged_over(file)` applies flag values on top
/// of file values, and [`Overrides::into_spec`] fills the rest from the
/// scenario kind's defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub scenario: Option<ScenarioKind>,
    pub alpha: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub middle: Option<MiddleState>,
    /// Cavity lifetime in microseconds.
    pub tcav_us: Option<f64>,
    pub j_over_g: Option<f64>,
    /// Atom-cavity coupling in rad/s.
    pub g: Option<f64>,
    pub dt: Option<f64>,
    pub tmax: Option<f64>,
    pub stride: Option<usize>,
    pub starts: Option<usize>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Parses flat `key = value` text; `#` starts a comment, blank lines
    /// are skipped. Keys match the CLI flag names.
    pub fn from_config_text(text: &str) -> Result<Self, ScenarioError> {
        let mut settings = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ScenarioError::BadSetting {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |message: String| ScenarioError::BadSetting { line, message };
            let parse_f64 = |v: &str| {
                v.parse::<f64>()
                    .map_err(|e| bad(format!("bad number `{v}`: {e}")))
            };
            let parse_usize = |v: &str| {
                v.parse::<usize>()
                    .map_err(|e| bad(format!("bad integer `{v}`: {e}")))
            };
            match key {
                "scenario" => settings.scenario = Some(value.parse().map_err(bad)?),
                "alpha" => settings.alpha = Some(parse_f64(value)?),
                "c1" => settings.c1 = Some(parse_f64(value)?),
                "c2" => settings.c2 = Some(parse_f64(value)?),
                "c3" => settings.c3 = Some(parse_f64(value)?),
                "middle" => settings.middle = Some(value.parse().map_err(bad)?),
                "tcav-us" => settings.tcav_us = Some(parse_f64(value)?),
                "j-over-g" => settings.j_over_g = Some(parse_f64(value)?),
                "g" => settings.g = Some(parse_f64(value)?),
                "dt" => settings.dt = Some(parse_f64(value)?),
                "tmax" => settings.tmax = Some(parse_f64(value)?),
                "stride" => settings.stride = Some(parse_usize(value)?),
                "starts" => settings.starts = Some(parse_usize(value)?),
                "grid" => settings.grid = Some(parse_usize(value)?),
                "seed" => {
                    settings.seed = Some(value.parse::<u64>().map_err(|e| {
                        ScenarioError::BadSetting {
                            line,
                            message: format!("bad integer `{value}`: {e}"),
                        }
                    })?)
                }
                "out" => settings.out = Some(PathBuf::from(value)),
                other => {
                    return Err(ScenarioError::BadSetting {
                        line,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        Ok(settings)
    }

    /// Returns `self` with any unset field taken from `base`.
    pub fn merged_over(self, base: Self) -> Self {
        Self {
            scenario: self.scenario.or(base.scenario),
            alpha: self.alpha.or(base.alpha),
            c1: self.c1.or(base.c1),
            c2: self.c2.or(base.c2),
            c3: self.c3.or(base.c3),
            middle: self.middle.or(base.middle),
            tcav_us: self.tcav_us.or(base.tcav_us),
            j_over_g: self.j_over_g.or(base.j_over_g),
            g: self.g.or(base.g),
            dt: self.dt.or(base.dt),
            tmax: self.tmax.or(base.tmax),
            stride: self.stride.or(base.stride),
            starts: self.starts.or(base.starts),
            grid: self.grid.or(base.grid),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
        }
    }

    /// Builds the spec: kind-specific defaults first, then these settings.
    pub fn into_spec(self) -> Result<ScenarioSpec, ScenarioError> {
        let kind = self.scenario.ok_or(ScenarioError::MissingKind)?;
        let mut spec = ScenarioSpec::for_kind(kind);
        if let Some(alpha) = self.alpha {
            spec.alpha = alpha;
        }
        if let Some(c1) = self.c1 {
            spec.bell_diag.0 = c1;
        }
        if let Some(c2) = self.c2 {
            spec.bell_diag.1 = c2;
        }
        if let Some(c3) = self.c3 {
            spec.bell_diag.2 = c3;
        }
        if let Some(middle) = self.middle {
            spec.middle = middle;
        }
        let t_cav = self.tcav_us.map(|us| us * 1e-6).unwrap_or(spec.params.t_cav);
        let g = self.g.unwrap_or(DEFAULT_COUPLING);
        let j_over_g = self.j_over_g.unwrap_or(1e-2);
        spec.params = NetworkParams::uniform_chain(N_SITES, g, j_over_g, t_cav);
        if let Some(dt) = self.dt {
            spec.evolution.dt = Some(dt);
        }
        if let Some(tmax) = self.tmax {
            spec.evolution.t_max = tmax;
        }
        if let Some(stride) = self.stride {
            spec.evolution.sample_stride = stride;
        }
        if let Some(starts) = self.starts {
            spec.optimization.n_starts = starts;
        }
        if let Some(grid) = self.grid {
            spec.optimization.grid_resolution = grid;
        }
        if let Some(seed) = self.seed {
            spec.optimization.seed = seed;
        }
        spec.out = self.out;
        spec.validate()?;
        Ok(spec)
    }
}
