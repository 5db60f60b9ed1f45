//! Run configuration: line-oriented `key = value` text, `#` comments, lists
//! as comma-separated values. Serialising a resolved configuration gives a
//! file that parses back to the same configuration.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inversion::fft::Window;
use crate::observables::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XUnit {
    /// Multiples of the classical exit point `x0` for the field in use.
    X0,
    Nm,
    Bohr,
}

impl FromStr for XUnit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "x0" => Ok(XUnit::X0),
            "nm" => Ok(XUnit::Nm),
            "bohr" => Ok(XUnit::Bohr),
            other => Err(format!("unknown x unit '{other}' (expected x0, nm or bohr)")),
        }
    }
}

impl std::fmt::Display for XUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            XUnit::X0 => "x0",
            XUnit::Nm => "nm",
            XUnit::Bohr => "bohr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    /// Zero-field step eigenstate: incident, reflected and transmitted waves.
    Step,
    IncidentOnly,
}

impl FromStr for InitialKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "step" => Ok(InitialKind::Step),
            "incident-only" => Ok(InitialKind::IncidentOnly),
            other => Err(format!("unknown initial condition '{other}' (expected step or incident-only)")),
        }
    }
}

impl std::fmt::Display for InitialKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitialKind::Step => "step",
            InitialKind::IncidentOnly => "incident-only",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub barrier_ev: f64,
    pub fermi_ev: f64,
    pub fields_v_per_nm: Vec<f64>,
    pub x_points: Vec<f64>,
    pub x_unit: XUnit,
    pub t_max_fs: f64,
    pub t_samples: usize,
    pub method: Method,
    pub switch_time_fs: f64,
    pub omega_max: Option<f64>,
    pub gamma: Option<f64>,
    pub window: Window,
    pub tolerance: f64,
    pub k_nodes: usize,
    pub initial_condition: InitialKind,
    /// `re_min, re_max, im_min, im_max` (hartree).
    pub pole_box: [f64; 4],
    pub fn_fields_v_per_nm: Vec<f64>,
    pub decay_t_min_fs: f64,
    pub decay_t_max_fs: f64,
    pub decay_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            barrier_ev: 9.0,
            fermi_ev: 4.5,
            fields_v_per_nm: vec![4.0, 8.0],
            x_points: vec![1.0, 10.0],
            x_unit: XUnit::X0,
            t_max_fs: 25.0,
            t_samples: 250,
            method: Method::Auto,
            switch_time_fs: 24.0,
            omega_max: None,
            gamma: None,
            window: Window::CosineTaper,
            tolerance: 1e-6,
            k_nodes: 16,
            initial_condition: InitialKind::Step,
            pole_box: [-2.0, -1e-4, -2.0, 2.0],
            fn_fields_v_per_nm: (2..=10).map(f64::from).collect(),
            decay_t_min_fs: 50.0,
            decay_t_max_fs: 500.0,
            decay_points: 11,
        }
    }
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(line, format!("{key}: '{v}' is not a finite number")))
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| bad(line, format!("{key}: '{v}' is not a non-negative integer")))
}

fn parse_named<T: FromStr<Err = String>>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|m| bad(line, format!("{key}: {m}")))
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|item| parse_f64(line, key, item.trim())).collect()
}

fn parse_auto(line: usize, key: &str, v: &str) -> Result<Option<f64>> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_f64(line, key, v).map(Some)
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn auto(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), |x| x.to_string())
}

pub const KEYS: [&str; 20] = [
    "barrier_eV",
    "fermi_eV",
    "field_V_per_nm",
    "x_points",
    "x_unit",
    "t_max_fs",
    "t_samples",
    "method",
    "switch_time_fs",
    "omega_max",
    "gamma",
    "window",
    "tolerance",
    "k_nodes",
    "initial_condition",
    "pole_box",
    "fn_fields_V_per_nm",
    "decay_t_min_fs",
    "decay_t_max_fs",
    "decay_points",
];

impl RunConfig {
    /// Defaults overridden by the given text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected 'key = value', got '{content}'")))?;
            self.set(line, key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one key; `line` is reported in errors (0 for the command line).
    pub fn set(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        match key {
            "barrier_eV" => self.barrier_ev = parse_f64(line, key, v)?,
            "fermi_eV" => self.fermi_ev = parse_f64(line, key, v)?,
            "field_V_per_nm" => self.fields_v_per_nm = parse_list(line, key, v)?,
            "x_points" => self.x_points = parse_list(line, key, v)?,
            "x_unit" => self.x_unit = parse_named(line, key, v)?,
            "t_max_fs" => self.t_max_fs = parse_f64(line, key, v)?,
            "t_samples" => self.t_samples = parse_usize(line, key, v)?,
            "method" => self.method = v.parse().map_err(|e: Error| bad(line, format!("{key}: {e}")))?,
            "switch_time_fs" => self.switch_time_fs = parse_f64(line, key, v)?,
            "omega_max" => self.omega_max = parse_auto(line, key, v)?,
            "gamma" => self.gamma = parse_auto(line, key, v)?,
            "window" => self.window = v.parse().map_err(|e: Error| bad(line, format!("{key}: {e}")))?,
            "tolerance" => self.tolerance = parse_f64(line, key, v)?,
            "k_nodes" => self.k_nodes = parse_usize(line, key, v)?,
            "initial_condition" => self.initial_condition = parse_named(line, key, v)?,
            "pole_box" => {
                let b = parse_list(line, key, v)?;
                self.pole_box = b
                    .try_into()
                    .map_err(|_| bad(line, "pole_box needs four values: re_min, re_max, im_min, im_max"))?;
            }
            "fn_fields_V_per_nm" => self.fn_fields_v_per_nm = parse_list(line, key, v)?,
            "decay_t_min_fs" => self.decay_t_min_fs = parse_f64(line, key, v)?,
            "decay_t_max_fs" => self.decay_t_max_fs = parse_f64(line, key, v)?,
            "decay_points" => self.decay_points = parse_usize(line, key, v)?,
            other => return Err(bad(line, format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(bad(0, m));
        if !(self.barrier_ev > 0.0) {
            return fail(format!("barrier_eV = {} must be > 0", self.barrier_ev));
        }
        if !(self.fermi_ev > 0.0 && self.fermi_ev < self.barrier_ev) {
            return fail(format!("fermi_eV = {} must lie in (0, barrier_eV)", self.fermi_ev));
        }
        if self.fields_v_per_nm.is_empty() {
            return fail("field_V_per_nm is empty".into());
        }
        if let Some(f) = self.fields_v_per_nm.iter().find(|f| !(**f > 0.0)) {
            return fail(format!("field_V_per_nm contains {f}; fields must be > 0"));
        }
        if self.x_points.is_empty() {
            return fail("x_points is empty".into());
        }
        if !(self.t_max_fs > 0.0) || self.t_samples == 0 {
            return fail("t_max_fs must be > 0 and t_samples >= 1".into());
        }
        if !(self.switch_time_fs > 0.0) {
            return fail("switch_time_fs must be > 0".into());
        }
        if self.omega_max.is_some_and(|w| !(w > 0.0)) || self.gamma.is_some_and(|g| !(g > 0.0)) {
            return fail("omega_max and gamma must be > 0 or auto".into());
        }
        if !(self.tolerance > 0.0) {
            return fail(format!("tolerance = {} must be > 0", self.tolerance));
        }
        if self.k_nodes < crate::observables::MIN_K_NODES {
            return fail(format!("k_nodes = {} must be >= {}", self.k_nodes, crate::observables::MIN_K_NODES));
        }
        let [a, b, c, d] = self.pole_box;
        if !(a < b && b < 0.0 && c < d) {
            return fail("pole_box must satisfy re_min < re_max < 0 and im_min < im_max".into());
        }
        if self.fn_fields_v_per_nm.len() < 3 || self.fn_fields_v_per_nm.iter().any(|f| !(*f > 0.0)) {
            return fail("fn_fields_V_per_nm needs at least three positive fields".into());
        }
        if !(self.decay_t_min_fs > 0.0 && self.decay_t_max_fs > self.decay_t_min_fs) || self.decay_points < 2 {
            return fail("decay window needs 0 < decay_t_min_fs < decay_t_max_fs and decay_points >= 2".into());
        }
        Ok(())
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn to_text(&self) -> String {
        let b = self.pole_box;
        let values = [
            self.barrier_ev.to_string(),
            self.fermi_ev.to_string(),
            join(&self.fields_v_per_nm),
            join(&self.x_points),
            self.x_unit.to_string(),
            self.t_max_fs.to_string(),
            self.t_samples.to_string(),
            self.method.to_string(),
            self.switch_time_fs.to_string(),
            auto(self.omega_max),
            auto(self.gamma),
            self.window.to_string(),
            self.tolerance.to_string(),
            self.k_nodes.to_string(),
            self.initial_condition.to_string(),
            join(&b),
            join(&self.fn_fields_v_per_nm),
            self.decay_t_min_fs.to_string(),
            self.decay_t_max_fs.to_string(),
            self.decay_points.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
