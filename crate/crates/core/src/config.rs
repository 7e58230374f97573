//! Experiment configuration files.
//!
//! Configs are TOML. Keys may be written dotted (`base_curve.k = 1.0`) or
//! grouped under tables (`[base_curve]`). See [`SCHEMA`] for the full list.

use crate::channel::{ChannelSpec, Profile1D};
use crate::estimators::EstimatorMethod;
use crate::geometry::{reparametrize_arclength, PlaneCurve};
use crate::{Complex64, Error, Result};
use std::path::PathBuf;
use toml::{Table, Value};

pub const DEFAULT_N_PROFILE: usize = 101;
pub const DEFAULT_NU: usize = 256;
pub const DEFAULT_NV: usize = 33;

/// Human-readable schema, printed by `curveflux --help`.
pub const SCHEMA: &str = "\
CONFIG SCHEMA (TOML; dotted keys or [tables])

  base_curve.type     \"line\" | \"circle\" | \"samples\"            required
  base_curve.k        curvature of a circle (nonzero)              circle
  base_curve.center_re, base_curve.center_im
                      focal point of a circle                      default 0
  base_curve.phase    tangent angle at u = 0 (circle)              default 0
  base_curve.angle    direction angle of a line                    default 0
  base_curve.origin_re, base_curve.origin_im
                      point of a line at u = 0                     default 0
  base_curve.points   [[x, y], ...] polyline samples; the curve is
                      re-parametrized by arc length from u = 0     samples
  v0.poly | v0.samples
                      middle-curve offset: coefficients c0, c1, ... in
                      increasing degree, or values uniformly spaced
                      over the domain                              default [0]
  w.poly | w.samples  channel width, same forms as v0              required
  domain.u1, domain.u2
                      arc-length interval (line, circle only)      required
  d0                  bulk diffusion coefficient, > 0              required
  methods             list of Zeroth, Linear, Quadratic, Zwanzig, Bradley,
                      RegueraRubi, KalinayPercus, DagdugPineda     default [\"Zeroth\"]
  grid.n_profile      samples in `profile`                         default 101
  grid.nu, grid.nv    oracle grid (nv odd)                         default 256, 33
  oracle.ends         \"constant\" | \"radial\"                        default constant
  oracle.p_left, oracle.p_right
                      constant end values                          default 0, 1
  oracle.center_re, oracle.center_im
                      radial ends use log|z - center|              default 0
  output.profile, output.compare, output.sweep
                      CSV paths; stdout when absent
  sweep.k             list of base curvatures                      sweep-fig8
  sweep.m_min, sweep.m_max
                      wall slope range                             default -1, 1
  sweep.n             slopes per axis (>= 2)                       default 41
  sweep.velocity      \"geometric\" | \"published\" wall velocity      default geometric
";

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n_profile: usize,
    pub nu: usize,
    pub nv: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputConfig {
    pub profile: Option<PathBuf>,
    pub compare: Option<PathBuf>,
    pub sweep: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleEnds {
    Constant {
        left: f64,
        right: f64,
    },
    /// `log|z - center|` at both ends.
    Radial {
        center: Complex64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVelocity {
    /// Wall velocity of a line through `p` seen from the base circle.
    Geometric,
    /// `(1 + i m)(1 - k m)/(1 + k m)`.
    Published,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub k: Vec<f64>,
    pub m_min: f64,
    pub m_max: f64,
    pub n: usize,
    pub velocity: SweepVelocity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Absent for sweep-only configs.
    pub channel: Option<ChannelSpec>,
    pub methods: Vec<EstimatorMethod>,
    pub grid: GridConfig,
    pub output: OutputConfig,
    pub oracle: OracleEnds,
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    pub fn channel(&self) -> Result<&ChannelSpec> {
        self.channel.as_ref().ok_or_else(|| Error::Config("config defines no channel (base_curve, w, d0)".into()))
    }
}

const TOP: &[&str] = &["base_curve", "v0", "w", "domain", "d0", "methods", "grid", "output", "oracle", "sweep"];
const BASE: &[&str] = &["type", "k", "center_re", "center_im", "phase", "angle", "origin_re", "origin_im", "points"];
const PROFILE: &[&str] = &["poly", "samples"];
const DOMAIN: &[&str] = &["u1", "u2"];
const GRID: &[&str] = &["n_profile", "nu", "nv"];
const OUTPUT: &[&str] = &["profile", "compare", "sweep"];
const ORACLE: &[&str] = &["ends", "p_left", "p_right", "center_re", "center_im"];
const SWEEP: &[&str] = &["k", "m_min", "m_max", "n", "velocity"];

struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn error(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn table<'a>(&mut self, root: &'a Table, key: &str, allowed: &[&str]) -> Option<&'a Table> {
        match root.get(key)? {
            Value::Table(t) => {
                for k in t.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.error(format!("unknown key `{key}.{k}`"));
                    }
                }
                Some(t)
            }
            _ => {
                self.error(format!("`{key}` must be a table"));
                None
            }
        }
    }

    fn float(&mut self, t: Option<&Table>, path: &str, key: &str) -> Option<f64> {
        let x = match t?.get(key)? {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            _ => {
                self.error(format!("`{path}` must be a number"));
                return None;
            }
        };
        if !x.is_finite() {
            self.error(format!("`{path}` must be finite"));
            return None;
        }
        Some(x)
    }

    fn float_or(&mut self, t: Option<&Table>, path: &str, key: &str, default: f64) -> f64 {
        self.float(t, path, key).unwrap_or(default)
    }

    fn required_float(&mut self, t: Option<&Table>, path: &str, key: &str) -> Option<f64> {
        if t.and_then(|t| t.get(key)).is_none() {
            self.error(format!("missing required key `{path}`"));
            return None;
        }
        self.float(t, path, key)
    }

    fn count(&mut self, t: Option<&Table>, path: &str, key: &str, default: usize) -> usize {
        match t.and_then(|t| t.get(key)) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(_) => {
                self.error(format!("`{path}` must be a non-negative integer"));
                default
            }
        }
    }

    fn string<'a>(&mut self, t: Option<&'a Table>, path: &str, key: &str) -> Option<&'a str> {
        match t?.get(key)? {
            Value::String(s) => Some(s),
            _ => {
                self.error(format!("`{path}` must be a string"));
                None
            }
        }
    }

    fn floats(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let Value::Array(items) = v else {
            self.error(format!("`{path}` must be an array of numbers"));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for x in items {
            match x {
                Value::Float(f) if f.is_finite() => out.push(*f),
                Value::Integer(i) => out.push(*i as f64),
                _ => {
                    self.error(format!("`{path}` must be an array of finite numbers"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn profile(
        &mut self,
        root: &Table,
        key: &str,
        domain: Option<(f64, f64)>,
        default: Option<f64>,
    ) -> Option<Profile1D> {
        let Some(t) = self.table(root, key, PROFILE) else {
            if let Some(c) = default {
                return Some(Profile1D::constant(c));
            }
            self.error(format!("missing required key `{key}.poly` or `{key}.samples`"));
            return None;
        };
        match (t.get("poly"), t.get("samples")) {
            (Some(_), Some(_)) => {
                self.error(format!("`{key}` takes either `poly` or `samples`, not both"));
                None
            }
            (Some(p), None) => {
                let c = self.floats(p, &format!("{key}.poly"))?;
                if c.is_empty() {
                    self.error(format!("`{key}.poly` needs at least one coefficient"));
                    return None;
                }
                Some(Profile1D::Poly(c))
            }
            (None, Some(s)) => {
                let values = self.floats(s, &format!("{key}.samples"))?;
                if values.len() < 3 {
                    self.error(format!("`{key}.samples` needs at least 3 values"));
                    return None;
                }
                let (u1, u2) = domain?;
                Some(Profile1D::Samples { u1, h: (u2 - u1) / (values.len() - 1) as f64, values })
            }
            (None, None) => {
                self.error(format!("`{key}` needs `poly` or `samples`"));
                None
            }
        }
    }
}

fn base_curve(r: &mut Reader, root: &Table) -> Option<PlaneCurve> {
    let t = r.table(root, "base_curve", BASE);
    let kind = match t {
        None => {
            r.error("missing required key `base_curve.type`");
            return None;
        }
        Some(_) => match r.string(t, "base_curve.type", "type") {
            Some(s) => s,
            None => {
                if t.is_some_and(|t| !t.contains_key("type")) {
                    r.error("missing required key `base_curve.type`");
                }
                return None;
            }
        },
    };
    let dom = root.get("domain").and_then(Value::as_table);
    let domain = |r: &mut Reader| -> Option<(f64, f64)> {
        let u1 = r.required_float(dom, "domain.u1", "u1");
        let u2 = r.required_float(dom, "domain.u2", "u2");
        let (u1, u2) = (u1?, u2?);
        if !(u2 > u1) {
            r.error(format!("domain.u2 ({u2}) must exceed domain.u1 ({u1})"));
            return None;
        }
        Some((u1, u2))
    };
    let allowed: &[&str] = match kind {
        "line" => &["type", "angle", "origin_re", "origin_im", "k"],
        "circle" => &["type", "k", "center_re", "center_im", "phase"],
        "samples" => &["type", "points"],
        other => {
            r.error(format!("base_curve.type must be line, circle or samples, got `{other}`"));
            return None;
        }
    };
    for key in t.into_iter().flat_map(|t| t.keys()) {
        if BASE.contains(&key.as_str()) && !allowed.contains(&key.as_str()) {
            r.error(format!("`base_curve.{key}` does not apply to a {kind}"));
        }
    }
    match kind {
        "line" => {
            if let Some(k) = r.float(t, "base_curve.k", "k") {
                if k != 0.0 {
                    r.error(format!("a line has curvature 0, got base_curve.k = {k}"));
                }
            }
            let angle = r.float_or(t, "base_curve.angle", "angle", 0.0);
            let origin = Complex64::new(
                r.float_or(t, "base_curve.origin_re", "origin_re", 0.0),
                r.float_or(t, "base_curve.origin_im", "origin_im", 0.0),
            );
            let (u1, u2) = domain(r)?;
            PlaneCurve::line(Complex64::from_polar(1.0, angle), origin, u1, u2).map_err(|e| r.error(e.to_string())).ok()
        }
        "circle" => {
            let k = r.required_float(t, "base_curve.k", "k");
            let center = Complex64::new(
                r.float_or(t, "base_curve.center_re", "center_re", 0.0),
                r.float_or(t, "base_curve.center_im", "center_im", 0.0),
            );
            let phase = r.float_or(t, "base_curve.phase", "phase", 0.0);
            let (u1, u2) = domain(r)?;
            let k = k?;
            if k == 0.0 {
                r.error("base_curve.k must be nonzero for a circle (use type = \"line\")");
                return None;
            }
            PlaneCurve::circle(k, center, phase, u1, u2).map_err(|e| r.error(e.to_string())).ok()
        }
        _ => {
            if dom.is_some() {
                r.error("`domain` is fixed by the arc length of base_curve.points; remove it");
            }
            let Some(Value::Array(items)) = t.and_then(|t| t.get("points")) else {
                r.error("missing required key `base_curve.points` (array of [x, y])");
                return None;
            };
            let mut samples = Vec::with_capacity(items.len());
            for (j, item) in items.iter().enumerate() {
                match r.floats(item, "base_curve.points[]") {
                    Some(p) if p.len() == 2 => samples.push((j as f64, Complex64::new(p[0], p[1]))),
                    Some(_) => {
                        r.error(format!("base_curve.points[{j}] must be [x, y]"));
                        return None;
                    }
                    None => return None,
                }
            }
            reparametrize_arclength(&samples).map_err(|e| r.error(format!("base_curve.points: {e}"))).ok()
        }
    }
}

/// Parses and validates a config. Syntax errors report their line; semantic
/// problems are collected and reported together.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string().trim_end().to_string()))?;
    let mut r = Reader { errors: Vec::new() };
    for key in root.keys() {
        if !TOP.contains(&key.as_str()) {
            r.error(format!("unknown key `{key}`"));
        }
    }
    let _ = r.table(&root, "domain", DOMAIN);

    let has_channel = ["base_curve", "w", "v0", "d0", "domain"].iter().any(|k| root.contains_key(*k));
    let channel = if has_channel {
        let base = base_curve(&mut r, &root);
        let domain = base.as_ref().map(PlaneCurve::domain);
        let v0 = r.profile(&root, "v0", domain, Some(0.0));
        let w = r.profile(&root, "w", domain, None);
        let d0 = r.required_float(Some(&root), "d0", "d0");
        if let Some(d0) = d0 {
            if !(d0 > 0.0) {
                r.error(format!("d0 must be positive, got {d0}"));
            }
        }
        match (base, v0, w, d0) {
            (Some(base), Some(v0), Some(w), Some(d0)) => {
                let (u1, u2) = base.domain();
                let n = 1024;
                for i in 0..=n {
                    let u = u1 + (u2 - u1) * i as f64 / n as f64;
                    let wu = w.value(u);
                    if !(wu > 0.0) {
                        r.error(format!("width must be positive (w = {wu} at u = {u})"));
                        break;
                    }
                }
                Some(ChannelSpec::new_unchecked(base, v0, w, d0))
            }
            _ => None,
        }
    } else {
        None
    };

    let methods = match root.get("methods") {
        None => vec![EstimatorMethod::Zeroth],
        Some(Value::Array(items)) => {
            let mut out = Vec::new();
            for item in items {
                match item.as_str().map(str::parse::<EstimatorMethod>) {
                    Some(Ok(m)) if !out.contains(&m) => out.push(m),
                    Some(Ok(m)) => r.error(format!("method `{m}` listed twice")),
                    Some(Err(e)) => r.error(e.to_string().trim_start_matches("config error: ").to_string()),
                    None => r.error("`methods` entries must be strings"),
                }
            }
            if out.is_empty() && items.is_empty() {
                r.error("`methods` must not be empty");
            }
            out
        }
        Some(_) => {
            r.error("`methods` must be an array of method names");
            Vec::new()
        }
    };

    let g = r.table(&root, "grid", GRID);
    let grid = GridConfig {
        n_profile: r.count(g, "grid.n_profile", "n_profile", DEFAULT_N_PROFILE),
        nu: r.count(g, "grid.nu", "nu", DEFAULT_NU),
        nv: r.count(g, "grid.nv", "nv", DEFAULT_NV),
    };
    if grid.n_profile < 2 {
        r.error("grid.n_profile must be at least 2");
    }
    if grid.nu < 16 {
        r.error("grid.nu must be at least 16");
    }
    if grid.nv < 9 || grid.nv.is_multiple_of(2) {
        r.error("grid.nv must be odd and at least 9");
    }

    let o = r.table(&root, "output", OUTPUT);
    let mut path = |key: &str| r.string(o, &format!("output.{key}"), key).map(PathBuf::from);
    let output = OutputConfig { profile: path("profile"), compare: path("compare"), sweep: path("sweep") };

    let t = r.table(&root, "oracle", ORACLE);
    let oracle = match r.string(t, "oracle.ends", "ends").unwrap_or("constant") {
        "constant" => {
            for key in ["center_re", "center_im"] {
                if t.is_some_and(|t| t.contains_key(key)) {
                    r.error(format!("`oracle.{key}` only applies to radial ends"));
                }
            }
            OracleEnds::Constant {
                left: r.float_or(t, "oracle.p_left", "p_left", 0.0),
                right: r.float_or(t, "oracle.p_right", "p_right", 1.0),
            }
        }
        "radial" => {
            for key in ["p_left", "p_right"] {
                if t.is_some_and(|t| t.contains_key(key)) {
                    r.error(format!("`oracle.{key}` only applies to constant ends"));
                }
            }
            OracleEnds::Radial {
                center: Complex64::new(
                    r.float_or(t, "oracle.center_re", "center_re", 0.0),
                    r.float_or(t, "oracle.center_im", "center_im", 0.0),
                ),
            }
        }
        other => {
            r.error(format!("oracle.ends must be constant or radial, got `{other}`"));
            OracleEnds::Constant { left: 0.0, right: 1.0 }
        }
    };

    let s = r.table(&root, "sweep", SWEEP);
    let sweep = s.map(|_| {
        let k = match s.and_then(|s| s.get("k")) {
            Some(v) => r.floats(v, "sweep.k").unwrap_or_default(),
            None => {
                r.error("missing required key `sweep.k`");
                Vec::new()
            }
        };
        let m_min = r.float_or(s, "sweep.m_min", "m_min", -1.0);
        let m_max = r.float_or(s, "sweep.m_max", "m_max", 1.0);
        if !(m_max > m_min) {
            r.error(format!("sweep.m_max ({m_max}) must exceed sweep.m_min ({m_min})"));
        }
        let n = r.count(s, "sweep.n", "n", 41);
        if n < 2 {
            r.error("sweep.n must be at least 2");
        }
        let velocity = match r.string(s, "sweep.velocity", "velocity").unwrap_or("geometric") {
            "geometric" => SweepVelocity::Geometric,
            "published" => SweepVelocity::Published,
            other => {
                r.error(format!("sweep.velocity must be geometric or published, got `{other}`"));
                SweepVelocity::Geometric
            }
        };
        SweepConfig { k, m_min, m_max, n, velocity }
    });

    if channel.is_none() && sweep.is_none() && r.errors.is_empty() {
        r.error("config defines neither a channel nor a sweep");
    }
    if !r.errors.is_empty() {
        return Err(Error::Config(r.errors.join("\n")));
    }
    Ok(ExperimentConfig { channel, methods, grid, output, oracle, sweep })
}
