//! The three experiments behind the `curveflux` subcommands. Each returns
//! the complete CSV text; nothing is written until it has been computed.

use crate::channel::WallData;
use crate::config::{ExperimentConfig, OracleEnds, SweepConfig, SweepVelocity};
use crate::estimators::{estimate, linear_from_walls, uniform_grid, EstimatorMethod};
use crate::geometry::FrenetFrame;
use crate::oracle::{compare, EndCondition, Grid2D};
use crate::par::Exec;
use crate::{Complex64, Error, Result, I};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// CSV text plus the non-fatal diagnostics produced while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub csv: String,
    pub path: Option<PathBuf>,
    pub warnings: Vec<String>,
}

impl CommandOutput {
    /// Writes the CSV to its configured path, or stdout.
    pub fn write(&self) -> Result<()> {
        match &self.path {
            Some(p) => write_atomic(p, &self.csv),
            None => {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                out.write_all(self.csv.as_bytes())?;
                out.flush()?;
                Ok(())
            }
        }
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, text).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Shortest round-trip representation: plain decimal for moderate
/// magnitudes, scientific notation below `1e-4` or from `1e16` up; `nan`,
/// `inf` and `-inf` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e16) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

// One line per method: how many samples failed and the first failure.
fn summarize_failures(methods: &[EstimatorMethod], failures: &[Vec<String>], total: usize) -> Vec<String> {
    methods
        .iter()
        .zip(failures)
        .filter(|(_, f)| !f.is_empty())
        .map(|(m, f)| format!("{m}: failed at {} of {total} samples, first {}", f.len(), f[0]))
        .collect()
}

pub fn cmd_profile(cfg: &ExperimentConfig, exec: Exec) -> Result<CommandOutput> {
    let spec = cfg.channel()?;
    spec.validate()?;
    let u = uniform_grid(spec, cfg.grid.n_profile);
    let rows = exec.map(u.len(), |i| {
        let sigma = crate::channel::sigma(spec, u[i]);
        let d: Vec<Result<f64>> = cfg.methods.iter().map(|&m| estimate(spec, m, u[i]).map(|(d, _)| d)).collect();
        (sigma, d)
    });
    let mut csv = String::from("u,sigma");
    for m in &cfg.methods {
        write!(csv, ",{m}").unwrap();
    }
    csv.push('\n');
    let mut failures = vec![Vec::new(); cfg.methods.len()];
    for (ui, (sigma, ds)) in u.iter().zip(rows) {
        let sigma = sigma?;
        write!(csv, "{},{}", fmt_f64(*ui), fmt_f64(sigma)).unwrap();
        for (k, d) in ds.into_iter().enumerate() {
            let value = d.unwrap_or_else(|e| {
                failures[k].push(e.to_string());
                f64::NAN
            });
            write!(csv, ",{}", fmt_f64(value)).unwrap();
        }
        csv.push('\n');
    }
    let warnings = summarize_failures(&cfg.methods, &failures, u.len());
    Ok(CommandOutput { csv, path: cfg.output.profile.clone(), warnings })
}

pub fn end_conditions(ends: OracleEnds) -> (EndCondition, EndCondition) {
    match ends {
        OracleEnds::Constant { left, right } => (EndCondition::Constant(left), EndCondition::Constant(right)),
        OracleEnds::Radial { center } => {
            let f = move |z: Complex64| (z - center).norm().ln();
            (EndCondition::field(f), EndCondition::field(f))
        }
    }
}

pub fn cmd_validate(cfg: &ExperimentConfig, exec: Exec) -> Result<CommandOutput> {
    let spec = cfg.channel()?;
    spec.validate()?;
    let grid = Grid2D::new(spec, cfg.grid.nu, cfg.grid.nv)?;
    let (left, right) = end_conditions(cfg.oracle);
    let report = compare(spec, &cfg.methods, &grid, &left, &right, exec)?;
    let mut csv = String::from("method,max_rel_err,mean_rel_err,flux_rel_err,nu,nv\n");
    let mut warnings = Vec::new();
    for row in &report.rows {
        if let Some(e) = &row.error {
            warnings.push(format!("{}: {e}", row.method));
        }
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            row.method,
            fmt_f64(row.max_rel_err),
            fmt_f64(row.mean_rel_err),
            fmt_f64(row.flux_rel_err),
            report.nu,
            report.nv
        )
        .unwrap();
    }
    Ok(CommandOutput { csv, path: cfg.output.compare.clone(), warnings })
}

/// Wall data of the two-line example at `u = 0`: base circle of curvature
/// `k` through the origin with tangent `1` and focal point `i/k`, walls on
/// the lines through `-1` with slopes `m1` and `m2`.
pub fn sweep_walls(k: f64, m1: f64, m2: f64, velocity: SweepVelocity) -> WallData {
    let speed = |m: f64| {
        let geometric = Complex64::new(1.0, m) * (1.0 - k * m);
        match velocity {
            SweepVelocity::Geometric => geometric,
            SweepVelocity::Published => geometric / (1.0 + k * m),
        }
    };
    let (v0, w) = (0.5 * (m1 + m2), m2 - m1);
    let zero = Complex64::new(0.0, 0.0);
    WallData {
        base: zero,
        frame: FrenetFrame { t: Complex64::new(1.0, 0.0), n: I, k },
        s1: m1,
        s2: m2,
        alpha0: I * v0,
        alpha1: I * m1,
        alpha2: I * m2,
        d_alpha0: (speed(m1) + speed(m2)) * 0.5,
        d_alpha1: speed(m1),
        d_alpha2: speed(m2),
        dd_alpha1: zero,
        dd_alpha2: zero,
        sigma: w * (1.0 - k * v0),
        dsigma: 0.0,
    }
}

const COINCIDENT_STEP: f64 = 1e-3;

/// `D` of the two-line example (`D0 = 1`), `inf` where the geometry is
/// singular or invalid. Coincident slopes use the Richardson limit of the
/// symmetric opening `(m - ε, m + ε)`.
pub fn sweep_value(k: f64, m1: f64, m2: f64, velocity: SweepVelocity) -> f64 {
    let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
    let eval = |a: f64, b: f64| -> f64 {
        if [a, b].iter().any(|&m| !(1.0 - k * m >= crate::channel::VALIDITY_MARGIN)) {
            return f64::INFINITY;
        }
        match linear_from_walls(&sweep_walls(k, a, b, velocity), 1.0) {
            Ok((d, _)) if d.is_finite() && d > 0.0 => d,
            _ => f64::INFINITY,
        }
    };
    if lo == hi && k != 0.0 {
        let e = COINCIDENT_STEP;
        let (d1, d2) = (eval(lo - e, lo + e), eval(lo - 2.0 * e, lo + 2.0 * e));
        let d = (4.0 * d1 - d2) / 3.0;
        return if d.is_finite() { d } else { f64::INFINITY };
    }
    eval(lo, hi)
}

/// `n` slopes from `m_min` to `m_max`, exactly symmetric when the range is.
pub fn sweep_slopes(s: &SweepConfig) -> Vec<f64> {
    let last = (s.n - 1) as f64;
    (0..s.n).map(|i| (s.m_min * (last - i as f64) + s.m_max * i as f64) / last).collect()
}

pub fn cmd_sweep_fig8(cfg: &ExperimentConfig, exec: Exec) -> Result<CommandOutput> {
    let s = cfg.sweep.as_ref().ok_or_else(|| Error::Config("config has no [sweep] section".into()))?;
    let m = sweep_slopes(s);
    let n = m.len();
    let per_k = n * n;
    let values = exec.map(s.k.len() * per_k, |idx| {
        let k = s.k[idx / per_k];
        let r = idx % per_k;
        sweep_value(k, m[r / n], m[r % n], s.velocity)
    });
    let mut csv = String::from("k,m1,m2,D\n");
    for (idx, d) in values.iter().enumerate() {
        let r = idx % per_k;
        writeln!(csv, "{},{},{},{}", fmt_f64(s.k[idx / per_k]), fmt_f64(m[r / n]), fmt_f64(m[r % n]), fmt_f64(*d))
            .unwrap();
    }
    Ok(CommandOutput { csv, path: cfg.output.sweep.clone(), warnings: Vec::new() })
}
