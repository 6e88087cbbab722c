//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Grids take either a range
//! `start:step:stop` (both ends included) or a comma-separated list.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use dynloc::quantum::{self, PacketWidth, SpatialGrid};
use dynloc::{EllipticParameter, ScaledParams};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    WaveformTable,
    ImpulseCurve,
    LayerWidthCurve,
    DpSweepLambda,
    DpSweepM,
    Psos,
    Qsos,
    QsosSequence,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::WaveformTable,
        Experiment::ImpulseCurve,
        Experiment::LayerWidthCurve,
        Experiment::DpSweepLambda,
        Experiment::DpSweepM,
        Experiment::Psos,
        Experiment::Qsos,
        Experiment::QsosSequence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::WaveformTable => "waveform_table",
            Experiment::ImpulseCurve => "impulse_curve",
            Experiment::LayerWidthCurve => "layer_width_curve",
            Experiment::DpSweepLambda => "dp_sweep_lambda",
            Experiment::DpSweepM => "dp_sweep_m",
            Experiment::Psos => "psos",
            Experiment::Qsos => "qsos",
            Experiment::QsosSequence => "qsos_sequence",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                format!("unknown experiment '{s}' (expected one of {})", names.join(", "))
            })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A one-dimensional parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Range { start: f64, step: f64, stop: f64 },
    List(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, step, stop } => {
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n)
                    .map(|i| {
                        let v = start + i as f64 * step;
                        if (v - stop).abs() <= 1e-9 * step { *stop } else { v }
                    })
                    .collect()
            }
        }
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| -> Result<f64, String> {
            let v: f64 = t.trim().parse().map_err(|_| format!("'{}' is not a number", t.trim()))?;
            if v.is_finite() { Ok(v) } else { Err(format!("'{}' is not finite", t.trim())) }
        };
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("range '{s}' must read start:step:stop"));
            }
            let (start, step, stop) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if step <= 0.0 || stop < start {
                return Err(format!("range '{s}' needs step > 0 and stop >= start"));
            }
            if (stop - start) / step > 1e7 {
                return Err(format!("range '{s}' has too many points"));
            }
            Ok(Grid::Range { start, step, stop })
        } else {
            let v = s.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            Ok(Grid::List(v))
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Range { start, step, stop } => write!(f, "{start:?}:{step:?}:{stop:?}"),
            Grid::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

fn packet_width_name(w: PacketWidth) -> &'static str {
    match w {
        PacketWidth::Matched => "matched",
        PacketWidth::Literal => "literal",
    }
}

fn parse_packet_width(s: &str) -> Result<PacketWidth, String> {
    match s {
        "matched" => Ok(PacketWidth::Matched),
        "literal" => Ok(PacketWidth::Literal),
        _ => Err(format!("unknown packet width '{s}' (expected matched or literal)")),
    }
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub kappa: f64,
    pub lambda: f64,
    pub m: f64,
    pub hbar_eff: f64,
    /// Drive period used for the absolute impulse column.
    pub period: f64,
    pub dp0: f64,
    pub packet_width: PacketWidth,
    pub ensemble_size: usize,
    pub classical_steps: usize,
    pub n_periods: usize,
    pub n_packets: usize,
    pub n_cells: usize,
    pub points_per_cell: usize,
    pub quantum_steps: usize,
    pub average_strobes: usize,
    pub m_grid: Grid,
    pub lambda_grid: Grid,
    pub sweep_m: Grid,
    pub waveform_m: Grid,
    pub waveform_samples: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub psos_nx: usize,
    pub psos_np: usize,
    pub psos_periods: usize,
    pub x0: f64,
    pub p0: f64,
    pub qsos_periods: usize,
    pub alpha: f64,
    pub n_max: usize,
    pub husimi_nx: usize,
    pub husimi_np: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::ImpulseCurve,
            seed: 0,
            kappa: 0.36,
            lambda: 2.0,
            m: 0.5,
            hbar_eff: 0.16,
            period: 2.0 * PI,
            dp0: 0.386,
            packet_width: PacketWidth::Matched,
            ensemble_size: 100_000,
            classical_steps: 1000,
            n_periods: 50,
            n_packets: 8,
            n_cells: quantum::DEFAULT_N_CELLS,
            points_per_cell: quantum::DEFAULT_POINTS_PER_CELL,
            quantum_steps: 2048,
            average_strobes: 10,
            m_grid: Grid::Range {
                start: 0.0,
                step: 0.01,
                stop: 0.99,
            },
            lambda_grid: Grid::Range {
                start: 0.0,
                step: 0.25,
                stop: 7.0,
            },
            sweep_m: Grid::List(vec![0.0, 0.5, 0.7, 0.9]),
            waveform_m: Grid::List(vec![0.0, 0.72, 0.99, 0.999999]),
            waveform_samples: 401,
            p_min: -3.0,
            p_max: 3.0,
            psos_nx: 24,
            psos_np: 24,
            psos_periods: 200,
            x0: PI,
            p0: 1.0,
            qsos_periods: 50,
            alpha: 3.0,
            n_max: 4,
            husimi_nx: 128,
            husimi_np: 128,
        }
    }
}

/// Key, meaning and default of every setting, in emission order.
pub fn documented_keys() -> Vec<(&'static str, &'static str, String)> {
    let d = RunConfig::default();
    KEYS.iter()
        .map(|(k, help)| (*k, *help, d.get(k)))
        .collect()
}

const KEYS: [(&str, &str); 34] = [
    ("experiment", "what to compute"),
    ("seed", "ensemble random seed"),
    ("kappa", "scaled lattice depth"),
    ("lambda", "modulation amplitude"),
    ("m", "elliptic shape parameter of the drive"),
    ("hbar_eff", "effective Planck constant"),
    ("period", "drive period for the absolute impulse"),
    ("dp0", "initial momentum spread"),
    ("packet_width", "initial packet width rule: matched or literal"),
    ("ensemble_size", "classical trajectories"),
    ("classical_steps", "classical steps per period"),
    ("n_periods", "horizon of the width comparison, in periods"),
    ("n_packets", "wave packets in the quantum mixture"),
    ("n_cells", "lattice periods in the quantum box"),
    ("points_per_cell", "grid points per lattice period (power of two >= 32)"),
    ("quantum_steps", "split-operator steps per period"),
    ("average_strobes", "final strobes averaged into a width"),
    ("m_grid", "shape parameters for the m curves and sweeps"),
    ("lambda_grid", "amplitudes for the lambda sweep"),
    ("sweep_m", "shape parameters of the lambda sweep"),
    ("waveform_m", "shape parameters tabulated by waveform_table"),
    ("waveform_samples", "samples per period in waveform_table"),
    ("p_min", "lower momentum of section windows"),
    ("p_max", "upper momentum of section windows"),
    ("psos_nx", "initial conditions across x"),
    ("psos_np", "initial conditions across p"),
    ("psos_periods", "strobes per trajectory"),
    ("x0", "initial packet position"),
    ("p0", "initial packet momentum"),
    ("qsos_periods", "strobes of the quantum section"),
    ("alpha", "Husimi smoothing width"),
    ("n_max", "lattice images either side in the Husimi sum"),
    ("husimi_nx", "Husimi grid columns"),
    ("husimi_np", "Husimi grid rows"),
];

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, String> {
    raw.parse()
        .map_err(|_| format!("'{raw}' is not a valid value for {key}"))
}

fn parse_float(key: &str, raw: &str) -> Result<f64, String> {
    let v: f64 = parse_value(key, raw)?;
    if v.is_finite() { Ok(v) } else { Err(format!("{key} must be finite")) }
}

impl RunConfig {
    fn set(&mut self, key: &str, raw: &str) -> Result<(), String> {
        match key {
            "experiment" => self.experiment = raw.parse()?,
            "seed" => self.seed = parse_value(key, raw)?,
            "kappa" => self.kappa = parse_float(key, raw)?,
            "lambda" => self.lambda = parse_float(key, raw)?,
            "m" => self.m = parse_float(key, raw)?,
            "hbar_eff" => self.hbar_eff = parse_float(key, raw)?,
            "period" => self.period = parse_float(key, raw)?,
            "dp0" => self.dp0 = parse_float(key, raw)?,
            "packet_width" => self.packet_width = parse_packet_width(raw)?,
            "ensemble_size" => self.ensemble_size = parse_value(key, raw)?,
            "classical_steps" => self.classical_steps = parse_value(key, raw)?,
            "n_periods" => self.n_periods = parse_value(key, raw)?,
            "n_packets" => self.n_packets = parse_value(key, raw)?,
            "n_cells" => self.n_cells = parse_value(key, raw)?,
            "points_per_cell" => self.points_per_cell = parse_value(key, raw)?,
            "quantum_steps" => self.quantum_steps = parse_value(key, raw)?,
            "average_strobes" => self.average_strobes = parse_value(key, raw)?,
            "m_grid" => self.m_grid = raw.parse()?,
            "lambda_grid" => self.lambda_grid = raw.parse()?,
            "sweep_m" => self.sweep_m = raw.parse()?,
            "waveform_m" => self.waveform_m = raw.parse()?,
            "waveform_samples" => self.waveform_samples = parse_value(key, raw)?,
            "p_min" => self.p_min = parse_float(key, raw)?,
            "p_max" => self.p_max = parse_float(key, raw)?,
            "psos_nx" => self.psos_nx = parse_value(key, raw)?,
            "psos_np" => self.psos_np = parse_value(key, raw)?,
            "psos_periods" => self.psos_periods = parse_value(key, raw)?,
            "x0" => self.x0 = parse_float(key, raw)?,
            "p0" => self.p0 = parse_float(key, raw)?,
            "qsos_periods" => self.qsos_periods = parse_value(key, raw)?,
            "alpha" => self.alpha = parse_float(key, raw)?,
            "n_max" => self.n_max = parse_value(key, raw)?,
            "husimi_nx" => self.husimi_nx = parse_value(key, raw)?,
            "husimi_np" => self.husimi_np = parse_value(key, raw)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// The value of `key` as it would be written to a config file.
    pub fn get(&self, key: &str) -> String {
        match key {
            "experiment" => self.experiment.to_string(),
            "seed" => self.seed.to_string(),
            "kappa" => format!("{:?}", self.kappa),
            "lambda" => format!("{:?}", self.lambda),
            "m" => format!("{:?}", self.m),
            "hbar_eff" => format!("{:?}", self.hbar_eff),
            "period" => format!("{:?}", self.period),
            "dp0" => format!("{:?}", self.dp0),
            "packet_width" => packet_width_name(self.packet_width).to_string(),
            "ensemble_size" => self.ensemble_size.to_string(),
            "classical_steps" => self.classical_steps.to_string(),
            "n_periods" => self.n_periods.to_string(),
            "n_packets" => self.n_packets.to_string(),
            "n_cells" => self.n_cells.to_string(),
            "points_per_cell" => self.points_per_cell.to_string(),
            "quantum_steps" => self.quantum_steps.to_string(),
            "average_strobes" => self.average_strobes.to_string(),
            "m_grid" => self.m_grid.to_string(),
            "lambda_grid" => self.lambda_grid.to_string(),
            "sweep_m" => self.sweep_m.to_string(),
            "waveform_m" => self.waveform_m.to_string(),
            "waveform_samples" => self.waveform_samples.to_string(),
            "p_min" => format!("{:?}", self.p_min),
            "p_max" => format!("{:?}", self.p_max),
            "psos_nx" => self.psos_nx.to_string(),
            "psos_np" => self.psos_np.to_string(),
            "psos_periods" => self.psos_periods.to_string(),
            "x0" => format!("{:?}", self.x0),
            "p0" => format!("{:?}", self.p0),
            "qsos_periods" => self.qsos_periods.to_string(),
            "alpha" => format!("{:?}", self.alpha),
            "n_max" => self.n_max.to_string(),
            "husimi_nx" => self.husimi_nx.to_string(),
            "husimi_np" => self.husimi_np.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// All settings as `(key, value)` pairs, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter().map(|(k, _)| (*k, self.get(k))).collect()
    }

    pub fn scaled_params(&self) -> Result<ScaledParams, dynloc::Error> {
        ScaledParams::new(self.kappa, self.lambda, EllipticParameter::new(self.m)?, self.hbar_eff)
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid, dynloc::Error> {
        SpatialGrid::new(self.n_cells, self.points_per_cell)
    }

    /// Checks every value against the range its consumer accepts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.check(&HashMap::new())
    }

    fn check(&self, lines: &HashMap<&'static str, usize>) -> Result<(), CliError> {
        let fail = |key: &'static str, constraint: &str| {
            let value = self.get(key);
            let msg = format!("{key} = {value} violates {constraint}");
            Err(match lines.get(key) {
                Some(&l) => CliError::Validation(format!("line {l}: {msg}")),
                None => CliError::Validation(msg),
            })
        };
        if !(self.kappa > 0.0) {
            return fail("kappa", "kappa > 0");
        }
        if !(self.lambda >= 0.0) {
            return fail("lambda", "lambda >= 0");
        }
        if !(0.0..=1.0).contains(&self.m) {
            return fail("m", "0 <= m <= 1");
        }
        if !(self.hbar_eff > 0.0) {
            return fail("hbar_eff", "hbar_eff > 0");
        }
        if !(self.period > 0.0) {
            return fail("period", "period > 0");
        }
        if !(self.dp0 > 0.0) {
            return fail("dp0", "dp0 > 0");
        }
        for (key, v) in [
            ("ensemble_size", self.ensemble_size),
            ("classical_steps", self.classical_steps),
            ("n_packets", self.n_packets),
            ("n_cells", self.n_cells),
            ("quantum_steps", self.quantum_steps),
            ("average_strobes", self.average_strobes),
            ("psos_nx", self.psos_nx),
            ("psos_np", self.psos_np),
            ("psos_periods", self.psos_periods),
            ("qsos_periods", self.qsos_periods),
            ("husimi_nx", self.husimi_nx),
            ("husimi_np", self.husimi_np),
        ] {
            if v == 0 {
                return fail(key, "a value of at least 1");
            }
        }
        if self.points_per_cell < 32 || !self.points_per_cell.is_power_of_two() {
            return fail("points_per_cell", "a power of two >= 32");
        }
        if self.waveform_samples < 2 {
            return fail("waveform_samples", "a value of at least 2");
        }
        if !(self.p_max > self.p_min) {
            return fail("p_max", "p_max > p_min");
        }
        if !(self.alpha > 0.0) {
            return fail("alpha", "alpha > 0");
        }
        let box_len = 2.0 * PI * self.n_cells as f64;
        if !(0.0..box_len).contains(&self.x0) {
            return fail("x0", "0 <= x0 < 2 pi n_cells");
        }
        for (key, grid, lo, hi_open) in [
            ("m_grid", &self.m_grid, 0.0, 1.0),
            ("sweep_m", &self.sweep_m, 0.0, 1.0),
        ] {
            if grid.values().iter().any(|&m| !(lo..hi_open).contains(&m)) {
                return fail(key, "0 <= m < 1 for every entry");
            }
        }
        if self.waveform_m.values().iter().any(|&m| !(0.0..=1.0).contains(&m)) {
            return fail("waveform_m", "0 <= m <= 1 for every entry");
        }
        if self.lambda_grid.values().iter().any(|&l| l < 0.0) {
            return fail("lambda_grid", "lambda >= 0 for every entry");
        }
        let packet = self.packet_width.dx0(self.dp0, self.hbar_eff);
        if (0.5 * packet).sqrt() > 0.25 * box_len {
            return fail("dp0", "a packet narrower than a quarter of the box");
        }
        Ok(())
    }
}

/// Parses and validates a config file.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    let mut lines: HashMap<&'static str, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| CliError::Validation(format!("line {n}: {msg}"));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', found '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let known = KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(k, _)| *k)
            .ok_or_else(|| err(format!("unknown key '{key}'")))?;
        if lines.insert(known, n).is_some() {
            return Err(err(format!("'{key}' is set twice")));
        }
        config.set(key, value).map_err(err)?;
    }
    config.check(&lines)?;
    Ok(config)
}

/// Writes a config that [`parse_config`] reads back unchanged.
pub fn emit(config: &RunConfig) -> String {
    let mut out = String::new();
    for (key, help) in KEYS {
        out.push_str(&format!("# {help}\n{key} = {}\n", config.get(key)));
    }
    out
}
