//! Command-line front end: resolves a `RunConfig`, runs one subcommand and
//! writes CSV tables plus a `run.meta` that reproduces the run when fed back
//! through `--config`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use crate::airy::FieldRegion;
use crate::config::{InitialKind, RunConfig, XUnit};
use crate::error::{Error, Result};
use crate::inversion::asymptotics::asymptotics;
use crate::inversion::contour::{fn_states, CutOptions, DeformedContour};
use crate::inversion::fft::TimeGrid;
use crate::inversion::poles::{find_poles, find_poles_default, PoleSearchOptions, SearchBox, DEFAULT_AXIS_MARGIN};
use crate::laplace::{Channel, InitialCondition, LaplaceBatch};
use crate::observables::{density_current, integrated_current, integrated_current_limit, EvolutionOptions};
use crate::quadrature::QuadOptions;
use crate::stationary::{fn_iv_curve, fn_solve, fowler_nordheim_fit, probability_current};
use crate::units::{derive, PhysicalParams, AU_TIME_FS, BOHR_NM, HARTREE_EV};

#[derive(Debug, Parser)]
#[command(name = "fowler-transient", version, about = "Transient field emission after a suddenly applied field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// `key = value` configuration file (a previous `run.meta` works too).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Absolute tolerance for the FFT error estimate.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Override one configuration key, e.g. `--set field_V_per_nm=4,8`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Field-emission stationary state at each field.
    Stationary,
    /// Steady current against field and its Fowler-Nordheim fit.
    FnCurve,
    /// Density and current at the configured points over time.
    Evolve,
    /// Resonance poles in the configured box.
    Poles,
    /// Long-time `t^{-3/2}` coefficients and the measured deviation.
    Asymptotics,
    /// Current integrated over the Fermi sea.
    IntegratedCurrent,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Stationary => "stationary",
            Command::FnCurve => "fn-curve",
            Command::Evolve => "evolve",
            Command::Poles => "poles",
            Command::Asymptotics => "asymptotics",
            Command::IntegratedCurrent => "integrated-current",
        }
    }
}

/// Config file, then `--set` overrides, then `--tolerance`.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_text(&fs::read_to_string(path)?)?;
    }
    for item in &cli.overrides {
        let (k, v) = item.split_once('=').ok_or_else(|| Error::Config {
            line: 0,
            message: format!("--set expects KEY=VALUE, got '{item}'"),
        })?;
        cfg.set(0, k.trim(), v.trim())?;
    }
    if let Some(tol) = cli.tolerance {
        cfg.tolerance = tol;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Files written by a run, relative to the output directory.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = resolve_config(cli)?;
    let work = || execute(cli.command, &cfg, &cli.out);
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Twelve significant digits.
fn num(v: f64) -> String {
    format!("{v:.11e}")
}

struct Table {
    name: &'static str,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_path(dir.join(self.name))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(PathBuf::from(self.name))
    }
}

/// Output of one subcommand: tables plus notes for `run.meta`.
struct Output {
    tables: Vec<Table>,
    notes: Vec<String>,
}

fn params_for(cfg: &RunConfig, field_v_per_nm: f64) -> Result<PhysicalParams> {
    PhysicalParams::from_lab(cfg.barrier_ev, cfg.fermi_ev, field_v_per_nm)
}

/// Configured points in bohr for this field.
fn positions(cfg: &RunConfig, params: &PhysicalParams) -> Result<Vec<f64>> {
    let x0 = derive(params)
        .x0
        .ok_or_else(|| Error::InvalidParameter("x0 needs a nonzero field".into()))?;
    Ok(cfg
        .x_points
        .iter()
        .map(|&x| match cfg.x_unit {
            XUnit::X0 => x * x0,
            XUnit::Nm => x / BOHR_NM,
            XUnit::Bohr => x,
        })
        .collect())
}

fn initial(cfg: &RunConfig) -> InitialCondition {
    match cfg.initial_condition {
        InitialKind::Step => InitialCondition::default(),
        InitialKind::IncidentOnly => InitialCondition::incident_only(),
    }
}

fn evolution_options(cfg: &RunConfig) -> EvolutionOptions {
    EvolutionOptions {
        method: cfg.method,
        switch_time: cfg.switch_time_fs / AU_TIME_FS,
        omega_max: cfg.omega_max,
        gamma: cfg.gamma,
        window: cfg.window,
        tolerance: cfg.tolerance,
        ..EvolutionOptions::default()
    }
}

fn time_grid(cfg: &RunConfig) -> Result<TimeGrid> {
    TimeGrid::up_to(cfg.t_max_fs / AU_TIME_FS, cfg.t_samples)
}

fn execute(command: Command, cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let output = match command {
        Command::Stationary => stationary(cfg)?,
        Command::FnCurve => fn_curve(cfg)?,
        Command::Evolve => evolve(cfg)?,
        Command::Poles => poles(cfg)?,
        Command::Asymptotics => asymptotic(cfg)?,
        Command::IntegratedCurrent => supply_current(cfg)?,
    };
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in &output.tables {
        written.push(t.write(dir)?);
    }
    let mut meta = format!(
        "# {} {}\n# command: {}\n",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        command.name()
    );
    for t in &output.tables {
        meta.push_str(&format!("# output: {}\n", t.name));
    }
    for n in &output.notes {
        meta.push_str(&format!("# {n}\n"));
    }
    meta.push_str(&cfg.to_text());
    fs::write(dir.join("run.meta"), meta)?;
    written.push(PathBuf::from("run.meta"));
    Ok(written)
}

fn stationary(cfg: &RunConfig) -> Result<Output> {
    let mut summary = Table::new(
        "stationary.csv",
        &["field_V_per_nm", "x0_nm", "kappa_per_bohr", "transmission", "reflection_re", "reflection_im"],
    );
    let mut states = Table::new(
        "psi_E.csv",
        &["field_V_per_nm", "x_nm", "psi_re", "psi_im", "density", "current_norm"],
    );
    for &f in &cfg.fields_v_per_nm {
        let params = params_for(cfg, f)?;
        let sol = fn_solve(&params)?;
        let d = derive(&params);
        summary.push(vec![
            num(f),
            num(d.x0.unwrap_or(f64::NAN) * BOHR_NM),
            num(d.kappa),
            num(sol.d),
            num(sol.r_e.re),
            num(sol.r_e.im),
        ]);
        for x in positions(cfg, &params)? {
            let (v, dv) = sol.eval(x);
            states.push(vec![
                num(f),
                num(x * BOHR_NM),
                num(v.re),
                num(v.im),
                num(v.norm_sqr()),
                num(probability_current(v, dv) / (2.0 * params.k)),
            ]);
        }
    }
    Ok(Output {
        tables: vec![summary, states],
        notes: Vec::new(),
    })
}

fn fn_curve(cfg: &RunConfig) -> Result<Output> {
    let base = params_for(cfg, cfg.fn_fields_v_per_nm[0])?;
    let au_per_v_nm = base.field / cfg.fn_fields_v_per_nm[0];
    let fields: Vec<f64> = cfg.fn_fields_v_per_nm.iter().map(|f| f * au_per_v_nm).collect();
    let curve = fn_iv_curve(base.barrier, base.k_fermi, &fields)?;
    let mut table = Table::new(
        "fn_curve.csv",
        &["field_V_per_nm", "inv_field_nm_per_V", "current_per_bohr2", "ln_current_over_field2"],
    );
    let mut pairs = Vec::new();
    for (f, pt) in cfg.fn_fields_v_per_nm.iter().zip(&curve) {
        table.push(vec![num(*f), num(1.0 / f), num(pt.current), num((pt.current / (f * f)).ln())]);
        pairs.push((*f, pt.current));
    }
    let fit = fowler_nordheim_fit(&pairs)?;
    let mut fit_table = Table::new("fn_fit.csv", &["slope_V_per_nm", "intercept", "r_squared"]);
    fit_table.push(vec![num(fit.slope), num(fit.intercept), num(fit.r_squared)]);
    Ok(Output {
        tables: vec![table, fit_table],
        notes: vec![format!("fowler-nordheim r_squared = {}", num(fit.r_squared))],
    })
}

fn evolve(cfg: &RunConfig) -> Result<Output> {
    let opts = evolution_options(cfg);
    let grid = time_grid(cfg)?;
    let mut table = Table::new(
        "evolve.csv",
        &[
            "t_fs",
            "x_nm",
            "density",
            "current_norm",
            "field_V_per_nm",
            "psi_re",
            "psi_im",
            "psi_error",
            "dpsi_error_per_bohr",
        ],
    );
    let mut notes = Vec::new();
    for &f in &cfg.fields_v_per_nm {
        let params = params_for(cfg, f)?;
        let xs = positions(cfg, &params)?;
        let series = density_current(&params, &initial(cfg), &xs, &grid, &opts)?;
        for spec in &series.specs {
            notes.push(format!(
                "field {f} V/nm: gamma = {}, omega_max = {}, samples = {}, window = {}",
                spec.gamma, spec.omega_max, spec.n_samples, spec.window
            ));
        }
        for (ti, t) in series.times.iter().enumerate() {
            for (xi, x) in xs.iter().enumerate() {
                let psi = series.psi[xi][ti];
                table.push(vec![
                    num(t * AU_TIME_FS),
                    num(x * BOHR_NM),
                    num(series.density[xi][ti]),
                    num(series.current_norm[xi][ti]),
                    num(f),
                    num(psi.re),
                    num(psi.im),
                    num(series.error[ti]),
                    num(series.derivative_error[ti]),
                ]);
            }
        }
    }
    Ok(Output {
        tables: vec![table],
        notes,
    })
}

/// The configured box, split away from the negative real axis.
fn search_boxes(cfg: &RunConfig) -> Result<Vec<SearchBox>> {
    let [re_min, re_max, im_min, im_max] = cfg.pole_box;
    let mut boxes = Vec::new();
    if im_max > DEFAULT_AXIS_MARGIN {
        boxes.push(SearchBox::new(re_min, re_max, im_min.max(DEFAULT_AXIS_MARGIN), im_max)?);
    }
    if im_min < -DEFAULT_AXIS_MARGIN {
        boxes.push(SearchBox::new(re_min, re_max, im_min, im_max.min(-DEFAULT_AXIS_MARGIN))?);
    }
    Ok(boxes)
}

fn poles(cfg: &RunConfig) -> Result<Output> {
    let mut table = Table::new(
        "poles.csv",
        &[
            "field_V_per_nm",
            "index",
            "re_p_au",
            "im_p_au",
            "decay_rate_per_fs",
            "energy_eV",
            "relative_residual",
        ],
    );
    let mut notes = Vec::new();
    for &f in &cfg.fields_v_per_nm {
        let params = params_for(cfg, f)?;
        let region = FieldRegion::from_params(&params)?;
        let mut found = Vec::new();
        let mut winding = 0;
        for bx in search_boxes(cfg)? {
            let part = find_poles(&region, &bx, &PoleSearchOptions::default())?;
            winding += part.winding;
            found.extend(part.poles);
        }
        found.sort_by(|a, b| {
            (b.location.re, a.location.im)
                .partial_cmp(&(a.location.re, b.location.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        notes.push(format!("field {f} V/nm: winding = {winding}, poles = {}", found.len()));
        for (i, p) in found.iter().enumerate() {
            table.push(vec![
                num(f),
                i.to_string(),
                num(p.location.re),
                num(p.location.im),
                num(-p.location.re / AU_TIME_FS),
                num(-p.location.im * HARTREE_EV),
                num(p.relative_residual),
            ]);
        }
    }
    Ok(Output {
        tables: vec![table],
        notes,
    })
}

fn asymptotic(cfg: &RunConfig) -> Result<Output> {
    let mut coeffs = Table::new(
        "asymptotics.csv",
        &[
            "field_V_per_nm",
            "x_nm",
            "c_E_re",
            "c_E_im",
            "tau_E_re_fs",
            "tau_E_im_fs",
            "amplitude_re",
            "amplitude_im",
        ],
    );
    let mut decay = Table::new(
        "decay.csv",
        &["field_V_per_nm", "t_fs", "x_nm", "deviation_abs", "predicted_abs", "deviation_re", "deviation_im"],
    );
    let init = initial(cfg);
    let n = cfg.decay_points;
    let ratio = cfg.decay_t_max_fs / cfg.decay_t_min_fs;
    let times_fs: Vec<f64> = (0..n)
        .map(|i| cfg.decay_t_min_fs * ratio.powf(i as f64 / (n - 1) as f64))
        .collect();
    for &f in &cfg.fields_v_per_nm {
        let params = params_for(cfg, f)?;
        let xs = positions(cfg, &params)?;
        let mut amplitudes = Vec::new();
        for &x in &xs {
            let a = asymptotics(&params, &init, x)?;
            coeffs.push(vec![
                num(f),
                num(x * BOHR_NM),
                num(a.c_e.re),
                num(a.c_e.im),
                num(a.tau_e.re * AU_TIME_FS),
                num(a.tau_e.im * AU_TIME_FS),
                num(a.amplitude.re),
                num(a.amplitude.im),
            ]);
            amplitudes.push(a.amplitude);
        }
        let channel = Channel::new(&params, &init)?;
        let batch = LaplaceBatch::new(params.barrier, params.field, vec![channel], QuadOptions::default())?;
        let contour = DeformedContour::new(&find_poles_default(batch.region())?.poles, CutOptions::default());
        let states = fn_states(&batch)?;
        for &t_fs in &times_fs {
            let t = t_fs / AU_TIME_FS;
            let dev = contour.decompose(&batch, &states, &xs, t)?.transient();
            for (xi, x) in xs.iter().enumerate() {
                let d: Complex64 = dev[0][xi].0;
                decay.push(vec![
                    num(f),
                    num(t_fs),
                    num(x * BOHR_NM),
                    num(d.norm()),
                    num(amplitudes[xi].norm() * t.powf(-1.5)),
                    num(d.re),
                    num(d.im),
                ]);
            }
        }
    }
    Ok(Output {
        tables: vec![coeffs, decay],
        notes: Vec::new(),
    })
}

fn supply_current(cfg: &RunConfig) -> Result<Output> {
    let opts = evolution_options(cfg);
    let grid = time_grid(cfg)?;
    let mut table = Table::new(
        "integrated_current.csv",
        &[
            "t_fs",
            "x_nm",
            "field_V_per_nm",
            "current_au",
            "current_norm",
            "stationary_norm",
            "error_estimate",
        ],
    );
    let mut notes = Vec::new();
    for &f in &cfg.fields_v_per_nm {
        let params = params_for(cfg, f)?;
        let xs = positions(cfg, &params)?;
        let j = integrated_current(&params, &xs, &grid, cfg.k_nodes, &opts)?;
        let limit = integrated_current_limit(&params, cfg.k_nodes)?;
        notes.push(format!("field {f} V/nm: stationary J/k_F^2 = {}", num(limit)));
        for (ti, t) in j.times.iter().enumerate() {
            for (xi, x) in xs.iter().enumerate() {
                table.push(vec![
                    num(t * AU_TIME_FS),
                    num(x * BOHR_NM),
                    num(f),
                    num(j.current[xi][ti]),
                    num(j.current_norm[xi][ti]),
                    num(limit),
                    num(j.error[ti]),
                ]);
            }
        }
    }
    Ok(Output {
        tables: vec![table],
        notes,
    })
}
