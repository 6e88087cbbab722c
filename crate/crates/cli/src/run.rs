//! Experiment execution and file emission.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dynloc::analysis::{correlation_study, find_max_over_m, layer_width, DlConfig, SweepRecord};
use dynloc::classical::{initial_condition_grid, psos};
use dynloc::forcing::{impulse_closed_form, impulse_quadrature, normalization, normalized_impulse, PERIOD};
use dynloc::phase_space::PhaseWindow;
use dynloc::quantum::{qsos_average, qsos_sequence, HusimiGrid, QsosSettings, QuantumSettings};
use dynloc::{dl_strength, EllipticParameter, Waveform};
use serde_json::{json, Map, Value};

use crate::config::{Experiment, RunConfig};
use crate::CliError;

/// A table destined for one output file.
struct Table {
    file: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

enum Cell {
    Real(f64),
    Int(u64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
        }
    }
}

impl Table {
    fn new(file: impl Into<String>, header: Vec<&'static str>) -> Self {
        Self {
            file: file.into(),
            header,
            rows: Vec::new(),
        }
    }

    fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

use Cell::{Int, Real};

/// What a run produced.
#[derive(Debug)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

fn runtime(e: dynloc::Error) -> CliError {
    match e {
        dynloc::Error::Domain { .. } | dynloc::Error::Config(_) => CliError::Validation(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

fn param(m: f64) -> Result<EllipticParameter, CliError> {
    EllipticParameter::new(m).map_err(runtime)
}

fn dl_config(c: &RunConfig) -> Result<DlConfig, CliError> {
    Ok(DlConfig {
        ensemble_size: c.ensemble_size,
        classical_steps_per_period: c.classical_steps,
        n_periods: c.n_periods,
        n_packets: c.n_packets,
        seed: c.seed,
        quantum: quantum_settings(c)?,
    })
}

fn quantum_settings(c: &RunConfig) -> Result<QuantumSettings, CliError> {
    Ok(QuantumSettings {
        grid: c.spatial_grid().map_err(runtime)?,
        steps_per_period: c.quantum_steps,
        dp0: c.dp0,
        packet_width: c.packet_width,
        average_strobes: c.average_strobes,
    })
}

fn section_window(c: &RunConfig, nx: usize, np: usize) -> Result<PhaseWindow, CliError> {
    PhaseWindow::new((-PI, PI), nx, (c.p_min, c.p_max), np).map_err(runtime)
}

fn sweep_row(r: &SweepRecord) -> Vec<Cell> {
    vec![
        Real(r.m),
        Real(r.lambda),
        Real(r.dp_c),
        Real(r.dp_q),
        Real(r.dp_cmq),
        Real(r.impulse_norm),
        Real(r.layer_width),
    ]
}

const SWEEP_HEADER: [&str; 7] = ["m", "lambda", "dp_c", "dp_q", "dp_cmq", "impulse_norm", "layer_width"];

fn husimi_table(file: String, h: &HusimiGrid) -> Table {
    let mut t = Table::new(file, vec!["x", "p", "value"]);
    let w = h.grid.window;
    for ip in 0..w.np {
        for ix in 0..w.nx {
            t.rows
                .push(vec![Real(w.x_node(ix)), Real(w.p_node(ip)), Real(h.grid.get(ix, ip))]);
        }
    }
    t
}

fn maximum_summary(m: dynloc::analysis::Maximum) -> Value {
    json!({
        "m_star": m.m_star,
        "f_star": m.f_star,
        "kind": format!("{:?}", m.kind).to_lowercase(),
    })
}

/// Computes the tables of an experiment, plus a summary for the manifest.
fn compute(c: &RunConfig) -> Result<(Vec<Table>, Value), CliError> {
    let mut summary = Map::new();
    let tables = match c.experiment {
        Experiment::WaveformTable => {
            let mut t = Table::new("waveform.csv", vec!["m", "t_over_T", "F"]);
            for m in c.waveform_m.values() {
                let w = Waveform::new(param(m)?);
                for i in 0..c.waveform_samples {
                    let s = i as f64 / (c.waveform_samples - 1) as f64;
                    t.rows.push(vec![Real(m), Real(s), Real(w.value(s * PERIOD))]);
                }
            }
            vec![t]
        }
        Experiment::ImpulseCurve => {
            let mut t = Table::new("impulse.csv", vec!["m", "N", "I_closed", "I_quadrature", "I_normalized"]);
            for m in c.m_grid.values() {
                let mp = param(m)?;
                t.rows.push(vec![
                    Real(m),
                    Real(normalization(mp)),
                    Real(impulse_closed_form(mp, c.period).map_err(runtime)?),
                    Real(impulse_quadrature(mp, c.period).map_err(runtime)?),
                    Real(normalized_impulse(mp).map_err(runtime)?),
                ]);
            }
            let max = find_max_over_m(|m| normalized_impulse(EllipticParameter::new(m).unwrap()).unwrap(), (0.0, 0.999))
                .map_err(runtime)?;
            summary.insert("impulse_maximum".into(), maximum_summary(max));
            vec![t]
        }
        Experiment::LayerWidthCurve => {
            let mut t = Table::new("layer_width.csv", vec!["m", "d", "n_terms", "truncation_error_bound"]);
            for m in c.m_grid.values() {
                let r = layer_width(c.lambda, c.kappa, param(m)?).map_err(runtime)?;
                t.rows.push(vec![Real(m), Real(r.d), Int(r.n_terms as u64), Real(r.truncation_error_bound)]);
            }
            let (lambda, kappa) = (c.lambda, c.kappa);
            if lambda > 0.0 {
                let max = find_max_over_m(
                    |m| layer_width(lambda, kappa, EllipticParameter::new(m).unwrap()).unwrap().d,
                    (0.001, 0.999),
                )
                .map_err(runtime)?;
                summary.insert("layer_width_maximum".into(), maximum_summary(max));
            }
            vec![t]
        }
        Experiment::DpSweepLambda => {
            let cfg = dl_config(c)?;
            let base = c.scaled_params().map_err(runtime)?;
            let mut t = Table::new("dp_sweep_lambda.csv", SWEEP_HEADER.to_vec());
            for m in c.sweep_m.values() {
                for lambda in c.lambda_grid.values() {
                    let p = base.with_m(param(m)?).and_then(|p| p.with_lambda(lambda)).map_err(runtime)?;
                    t.rows.push(sweep_row(&dl_strength(&p, &cfg).map_err(runtime)?));
                }
            }
            vec![t]
        }
        Experiment::DpSweepM => {
            let cfg = dl_config(c)?;
            let records =
                correlation_study(c.kappa, c.lambda, c.hbar_eff, &c.m_grid.values(), &cfg).map_err(runtime)?;
            let mut header = SWEEP_HEADER.to_vec();
            header.extend(["impulse_plot", "layer_width_plot"]);
            let mut t = Table::new("dp_sweep_m.csv", header);
            for r in &records {
                let mut row = sweep_row(r);
                row.push(Real(0.75 * r.impulse_norm));
                row.push(Real(0.6 * r.layer_width));
                t.rows.push(row);
            }
            vec![t]
        }
        Experiment::Psos => {
            let ics = initial_condition_grid(c.psos_nx, c.psos_np, (c.p_min, c.p_max));
            let sec = psos(&ics, c.psos_periods, &c.scaled_params().map_err(runtime)?, c.classical_steps)
                .map_err(runtime)?;
            let mut t = Table::new("psos.csv", vec!["trajectory", "strobe", "x", "p"]);
            for (k, s) in sec.points.iter().enumerate() {
                t.rows.push(vec![
                    Int((k / c.psos_periods) as u64),
                    Int((k % c.psos_periods + 1) as u64),
                    Real(s.x),
                    Real(s.p),
                ]);
            }
            vec![t]
        }
        Experiment::Qsos | Experiment::QsosSequence => {
            let params = c.scaled_params().map_err(runtime)?;
            let settings = QsosSettings {
                quantum: quantum_settings(c)?,
                alpha: c.alpha,
                n_max: c.n_max,
            };
            let packet = settings.quantum.packet_at(c.x0, c.p0, c.hbar_eff);
            let window = section_window(c, c.husimi_nx, c.husimi_np)?;
            if c.experiment == Experiment::Qsos {
                let h = qsos_average(&packet, c.qsos_periods, &params, &window, &settings).map_err(runtime)?;
                vec![husimi_table("qsos.csv".into(), &h)]
            } else {
                qsos_sequence(&packet, c.qsos_periods, &params, &window, &settings)
                    .map_err(runtime)?
                    .iter()
                    .enumerate()
                    .map(|(j, h)| husimi_table(format!("qsos_{:04}.csv", j + 1), h))
                    .collect()
            }
        }
    };
    Ok((tables, Value::Object(summary)))
}

/// Removes written files if the run does not complete.
struct Cleanup {
    files: Vec<PathBuf>,
    dir: Option<PathBuf>,
    armed: bool,
}

impl Drop for Cleanup {
    fn drop(&mut self) {
        if self.armed {
            for f in &self.files {
                let _ = fs::remove_file(f);
            }
            if let Some(d) = &self.dir {
                let _ = fs::remove_dir(d);
            }
        }
    }
}

fn write_file(path: &Path, contents: &str, cleanup: &mut Cleanup) -> Result<(), CliError> {
    cleanup.files.push(path.to_path_buf());
    let mut f = fs::File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Runs the configured experiment and writes its tables and a
/// `manifest.json` into `output`.
pub fn run(config: &RunConfig, output: &Path) -> Result<Report, CliError> {
    config.validate()?;
    let started = Instant::now();
    let (tables, summary) = compute(config)?;

    let mut cleanup = Cleanup {
        files: Vec::new(),
        dir: None,
        armed: true,
    };
    if !output.exists() {
        fs::create_dir_all(output).map_err(|e| CliError::Runtime(format!("{}: {e}", output.display())))?;
        cleanup.dir = Some(output.to_path_buf());
    }
    let mut files = Vec::with_capacity(tables.len());
    for t in &tables {
        let path = output.join(&t.file);
        write_file(&path, &t.render(), &mut cleanup)?;
        files.push(path);
    }

    let config_echo: Map<String, Value> = config
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    let manifest = json!({
        "experiment": config.experiment.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "threads": rayon::current_num_threads(),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "config": config_echo,
        "outputs": tables.iter().map(|t| t.file.clone()).collect::<Vec<_>>(),
        "summary": summary,
    });
    let manifest_path = output.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&manifest_path, &(text + "\n"), &mut cleanup)?;
    cleanup.armed = false;
    Ok(Report {
        files,
        manifest: manifest_path,
    })
}
