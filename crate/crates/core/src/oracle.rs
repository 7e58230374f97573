//! Reference solutions of the full two-dimensional steady problem.
//!
//! The Laplace–Beltrami equation is pulled back to channel coordinates
//! `(u, v) ∈ [u1, u2] × [-1, 1]`, where it reads
//! `∂u(A Pu + B Pv) + ∂v(B Pu + C Pv) = 0` with
//!
//! ```text
//! A = (w/2)/(1-sk),  B = -(∂s/∂u)/(1-sk),  C = ((1-sk)² + (∂s/∂u)²)/((1-sk)(w/2)).
//! ```
//!
//! Walls carry the zero conormal flux condition `B Pu + C Pv = 0`, the two
//! ends Dirichlet data. The discretization is a node-centred finite-volume
//! scheme (half cells on the walls), so discrete fluxes telescope exactly.

use crate::channel::{effective_density, effective_flux, ChannelSpec, Section, VALIDITY_MARGIN};
use crate::estimators::{estimate, EstimatorMethod};
use crate::par::Exec;
use crate::{Complex64, Error, Result};
use std::fmt;
use std::sync::Arc;

/// Accepted scaled residual `|Ax - b|∞ / (|A|∞ |x|∞ + |b|∞)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;
/// Fraction of the domain excluded at each end when measuring `D`.
pub const END_MARGIN: f64 = 0.1;
/// `|d(p/σ)/du|` below this marks a sample indeterminate.
pub const FLAT_GRADIENT: f64 = 1e-12;

/// Uniform node grid on `[u1, u2] × [-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nu: usize,
    pub nv: usize,
    u1: f64,
    u2: f64,
}

impl Grid2D {
    /// `nu ≥ 16`; `nv` odd and `≥ 9` (Simpson's rule across the channel).
    pub fn new(spec: &ChannelSpec, nu: usize, nv: usize) -> Result<Self> {
        if nu < 16 || nv < 9 || nv.is_multiple_of(2) {
            return Err(Error::Shape(format!("grid {nu}x{nv}: need nu >= 16 and odd nv >= 9")));
        }
        let (u1, u2) = spec.domain();
        Ok(Self { nu, nv, u1, u2 })
    }

    pub fn u_range(&self) -> (f64, f64) {
        (self.u1, self.u2)
    }

    pub fn hu(&self) -> f64 {
        (self.u2 - self.u1) / (self.nu - 1) as f64
    }

    pub fn hv(&self) -> f64 {
        2.0 / (self.nv - 1) as f64
    }

    pub fn u(&self, i: usize) -> f64 {
        if i + 1 == self.nu {
            self.u2
        } else {
            self.u1 + i as f64 * self.hu()
        }
    }

    pub fn v(&self, j: usize) -> f64 {
        if j + 1 == self.nv {
            1.0
        } else {
            -1.0 + j as f64 * self.hv()
        }
    }

    /// Pullback metric `(g_uu, g_uv, g_vv)` at node `(i, j)`.
    pub fn metric(&self, spec: &ChannelSpec, i: usize, j: usize) -> Result<[f64; 3]> {
        let sec = spec.section(self.u(i))?;
        let v = self.v(j);
        let (st, su, hw) = (sec.stretch(v), sec.offset_du(v), 0.5 * sec.w);
        Ok([st * st + su * su, su * hw, hw * hw])
    }
}

/// Dirichlet data at one end of the channel.
#[derive(Clone)]
pub enum EndCondition {
    Constant(f64),
    /// Value as a function of the physical point `φ(u, v)`.
    Field(Arc<dyn Fn(Complex64) -> f64 + Send + Sync>),
}

impl EndCondition {
    pub fn field(f: impl Fn(Complex64) -> f64 + Send + Sync + 'static) -> Self {
        EndCondition::Field(Arc::new(f))
    }

    fn value(&self, sec: &Section, v: f64) -> f64 {
        match self {
            EndCondition::Constant(c) => *c,
            EndCondition::Field(f) => f(sec.point(v)),
        }
    }
}

impl fmt::Debug for EndCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndCondition::Constant(c) => write!(f, "Constant({c})"),
            EndCondition::Field(_) => f.write_str("Field(..)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyField {
    pub grid: Grid2D,
    /// `P` at node `(i, j)` stored at `i * nv + j`.
    pub values: Vec<f64>,
    /// Scaled residual of the final linear solve.
    pub residual: f64,
}

impl SteadyField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nv + j]
    }

    /// `∂P/∂u`, centered inside, one-sided second order at the ends.
    pub fn du(&self, i: usize, j: usize) -> f64 {
        let h = self.grid.hu();
        let n = self.grid.nu;
        if i == 0 {
            (-3.0 * self.at(0, j) + 4.0 * self.at(1, j) - self.at(2, j)) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * self.at(n - 1, j) - 4.0 * self.at(n - 2, j) + self.at(n - 3, j)) / (2.0 * h)
        } else {
            (self.at(i + 1, j) - self.at(i - 1, j)) / (2.0 * h)
        }
    }

    /// `∂P/∂v`, centered inside, one-sided second order on the walls.
    pub fn dv(&self, i: usize, j: usize) -> f64 {
        let h = self.grid.hv();
        let n = self.grid.nv;
        if j == 0 {
            (-3.0 * self.at(i, 0) + 4.0 * self.at(i, 1) - self.at(i, 2)) / (2.0 * h)
        } else if j == n - 1 {
            (3.0 * self.at(i, n - 1) - 4.0 * self.at(i, n - 2) + self.at(i, n - 3)) / (2.0 * h)
        } else {
            (self.at(i, j + 1) - self.at(i, j - 1)) / (2.0 * h)
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }
}

fn coefficients(sec: &Section, v: f64) -> Result<(f64, f64, f64)> {
    let st = sec.stretch(v);
    if !(st >= VALIDITY_MARGIN) {
        return Err(Error::Validity { u: sec.u, v, margin: st });
    }
    let hw = 0.5 * sec.w;
    let su = sec.offset_du(v);
    Ok((hw / st, -su / st, (st * st + su * su) / (st * hw)))
}

/// Banded matrix with room for the fill of partial pivoting.
struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    fn add(&mut self, r: usize, c: usize, x: f64) {
        let s = self.slot(r, c);
        self.data[s] += x;
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[self.slot(r, c)]
    }

    fn cols(&self, r: usize) -> std::ops::Range<usize> {
        r.saturating_sub(self.kl)..(r + self.ku + 1).min(self.n)
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|r| self.cols(r).map(|c| self.get(r, c) * x[c]).sum()).collect()
    }

    fn norm_inf(&self) -> f64 {
        (0..self.n).map(|r| self.cols(r).map(|c| self.get(r, c).abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

struct BandLu {
    m: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    fn factor(mut m: BandMatrix) -> Result<Self> {
        let n = m.n;
        let reach = m.kl + m.ku;
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last = (k + m.kl).min(n - 1);
            let mut p = k;
            let mut best = m.get(k, k).abs();
            for r in k + 1..=last {
                let a = m.get(r, k).abs();
                if a > best {
                    best = a;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::IterationLimit { iterations: 0, residual: f64::INFINITY });
            }
            pivots[k] = p;
            let cmax = (k + reach).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let (a, b) = (m.slot(k, c), m.slot(p, c));
                    m.data.swap(a, b);
                }
            }
            let pivot = m.get(k, k);
            for r in k + 1..=last {
                let s = m.slot(r, k);
                let l = m.data[s] / pivot;
                if l == 0.0 {
                    continue;
                }
                m.data[s] = l;
                for c in k + 1..=cmax {
                    let x = m.get(k, c);
                    let t = m.slot(r, c);
                    m.data[t] -= l * x;
                }
            }
        }
        Ok(Self { m, pivots })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let n = m.n;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for r in k + 1..=(k + m.kl).min(n - 1) {
                x[r] -= m.get(r, k) * xk;
            }
        }
        let reach = m.kl + m.ku;
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in k + 1..=(k + reach).min(n - 1) {
                acc -= m.get(k, c) * x[c];
            }
            x[k] = acc / m.get(k, k);
        }
        x
    }
}

// One stencil entry of the equation at (i, j): coefficient on P(ii, jj).
type Entry = (usize, usize, usize, f64);

fn assemble_column(spec: &ChannelSpec, grid: &Grid2D, i: usize) -> Result<Vec<Entry>> {
    let (nv, hu, hv) = (grid.nv, grid.hu(), grid.hv());
    let sec = spec.section(grid.u(i))?;
    let half = |di: f64| spec.section(grid.u(i) + di * 0.5 * hu);
    let (sec_lo, sec_hi) = (half(-1.0)?, half(1.0)?);
    let mut out = Vec::with_capacity(nv * 24);

    // ∂P/∂v at node (ii, j) as a stencil in j
    let dv_stencil = |j: usize| -> [(usize, f64); 3] {
        let c = 1.0 / (2.0 * hv);
        if j == 0 {
            [(0, -3.0 * c), (1, 4.0 * c), (2, -c)]
        } else if j == nv - 1 {
            [(nv - 1, 3.0 * c), (nv - 2, -4.0 * c), (nv - 3, c)]
        } else {
            [(j + 1, c), (j - 1, -c), (j, 0.0)]
        }
    };

    for j in 0..nv {
        let v = grid.v(j);
        let wall = j == 0 || j == nv - 1;
        let len_v = if wall { 0.5 * hv } else { hv };
        // u-faces at i ± 1/2
        for (s, face, other) in [(1.0, &sec_hi, i + 1), (-1.0, &sec_lo, i - 1)] {
            let (a, b, _) = coefficients(face, v)?;
            let scale = s * len_v;
            // A (P_other - P_i)/hu, oriented outward
            out.push((j, other, j, scale * s * a / hu));
            out.push((j, i, j, -scale * s * a / hu));
            for ii in [i, other] {
                for (jj, c) in dv_stencil(j) {
                    out.push((j, ii, jj, scale * 0.5 * b * c));
                }
            }
        }
        // v-faces at j ± 1/2; the wall faces carry no flux
        for (s, jn) in [(1.0, j + 1), (-1.0, j.wrapping_sub(1))] {
            if jn >= nv {
                continue;
            }
            let vf = 0.5 * (v + grid.v(jn));
            let (_, b, c) = coefficients(&sec, vf)?;
            let scale = s * hu;
            out.push((j, i, jn, scale * s * c / hv));
            out.push((j, i, j, -scale * s * c / hv));
            for jj in [j, jn] {
                out.push((j, i + 1, jj, scale * 0.5 * b / (2.0 * hu)));
                out.push((j, i - 1, jj, -scale * 0.5 * b / (2.0 * hu)));
            }
        }
    }
    Ok(out)
}

/// Steady state with Dirichlet ends and reflecting walls.
pub fn solve_steady(
    spec: &ChannelSpec,
    grid: &Grid2D,
    left: &EndCondition,
    right: &EndCondition,
    exec: Exec,
) -> Result<SteadyField> {
    let (nu, nv) = (grid.nu, grid.nv);
    let (u1, u2) = spec.domain();
    if grid.u_range() != (u1, u2) {
        return Err(Error::Shape("grid does not span the channel domain".into()));
    }
    let ends = [(0, spec.section(u1)?, left), (nu - 1, spec.section(u2)?, right)];
    let boundary: Vec<Vec<f64>> =
        ends.iter().map(|(_, sec, cond)| (0..nv).map(|j| cond.value(sec, grid.v(j))).collect()).collect();

    let columns: Vec<Result<Vec<Entry>>> = exec.map(nu - 2, |c| assemble_column(spec, grid, c + 1));
    let n = (nu - 2) * nv;
    let band = nv + 2;
    let mut a = BandMatrix::new(n, band, band);
    let mut rhs = vec![0.0; n];
    for (c, col) in columns.into_iter().enumerate() {
        let col = col.map_err(|e| e.at(grid.u(c + 1)))?;
        let i = c + 1;
        for (j, ii, jj, coef) in col {
            let row = (i - 1) * nv + j;
            if ii == 0 {
                rhs[row] -= coef * boundary[0][jj];
            } else if ii == nu - 1 {
                rhs[row] -= coef * boundary[1][jj];
            } else {
                a.add(row, (ii - 1) * nv + jj, coef);
            }
        }
    }

    let a_norm = a.norm_inf();
    let b_norm = rhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scaled = |x: &[f64], r: &[f64]| {
        let x_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let r_norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let den = a_norm * x_norm + b_norm;
        if den > 0.0 {
            r_norm / den
        } else {
            r_norm
        }
    };
    let residual_of =
        |a: &BandMatrix, x: &[f64]| -> Vec<f64> { a.mul(x).iter().zip(&rhs).map(|(ax, b)| b - ax).collect() };
    let original = BandMatrix { data: a.data.clone(), ..a };
    let lu = BandLu::factor(a)?;
    let mut x = lu.solve(&rhs);
    let mut r = residual_of(&original, &x);
    let mut res = scaled(&x, &r);
    let mut steps = 0;
    while steps < REFINEMENT_STEPS && !(res <= 0.01 * RESIDUAL_TOLERANCE) {
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        r = residual_of(&original, &x);
        res = scaled(&x, &r);
        steps += 1;
    }
    if !(res <= RESIDUAL_TOLERANCE) {
        return Err(Error::IterationLimit { iterations: steps, residual: res });
    }

    let mut values = vec![0.0; nu * nv];
    values[..nv].copy_from_slice(&boundary[0]);
    values[(nu - 1) * nv..].copy_from_slice(&boundary[1]);
    values[nv..(nu - 1) * nv].copy_from_slice(&x);
    Ok(SteadyField { grid: *grid, values, residual: res })
}

/// Sampled effective quantities on the interior measurement window.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// Grid column indices in the window.
    pub columns: Vec<usize>,
    pub u: Vec<f64>,
    /// `None` where the density gradient is too flat to divide by.
    pub d: Vec<Option<f64>>,
    pub j: Vec<f64>,
    /// `p/σ` on the window columns.
    pub p_over_sigma: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Measurement {
    pub fn mean_flux(&self) -> f64 {
        self.j.iter().sum::<f64>() / self.j.len() as f64
    }

    /// `max |j - mean j| / |mean j|` over the window.
    pub fn flux_deviation(&self) -> f64 {
        let m = self.mean_flux();
        self.j.iter().map(|j| (j - m).abs()).fold(0.0, f64::max) / m.abs()
    }
}

/// Columns at least [`END_MARGIN`] of the domain away from either end.
pub fn window(grid: &Grid2D) -> Vec<usize> {
    let last = (grid.nu - 1) as f64;
    let lo = (END_MARGIN * last).ceil() as usize;
    let hi = ((1.0 - END_MARGIN) * last).floor() as usize;
    (lo.max(1)..=hi.min(grid.nu - 2)).collect()
}

/// `D_meas = -j / (σ·d(p/σ)/du)` on the measurement window.
pub fn measure_d(field: &SteadyField, spec: &ChannelSpec) -> Result<Measurement> {
    let grid = &field.grid;
    let p = effective_density(field, spec)?;
    let j = effective_flux(field, spec)?;
    let sigma: Vec<f64> = (0..grid.nu).map(|i| Ok(spec.section(grid.u(i))?.sigma())).collect::<Result<_>>()?;
    let ratio: Vec<f64> = p.iter().zip(&sigma).map(|(p, s)| p / s).collect();
    let columns = window(grid);
    let h = grid.hu();
    let mut d = Vec::with_capacity(columns.len());
    for &i in &columns {
        let grad = (ratio[i + 1] - ratio[i - 1]) / (2.0 * h);
        d.push(if grad.abs() < FLAT_GRADIENT { None } else { Some(-j[i] / (sigma[i] * grad)) });
    }
    if d.iter().all(Option::is_none) {
        return Err(Error::FlatField);
    }
    Ok(Measurement {
        u: columns.iter().map(|&i| grid.u(i)).collect(),
        j: columns.iter().map(|&i| j[i]).collect(),
        p_over_sigma: columns.iter().map(|&i| ratio[i]).collect(),
        sigma: columns.iter().map(|&i| sigma[i]).collect(),
        d,
        columns,
    })
}

/// Steady generalized Fick–Jacobs problem `(D σ (p/σ)')' = 0` with
/// `p/σ = pl` at `u[0]` and `pr` at the last sample. Returns `p` at the
/// samples and the constant flux `(pl - pr) / ∫ du/(Dσ)` (trapezoid rule).
pub fn fj_solve_steady(u: &[f64], d: &[f64], sigma: &[f64], pl: f64, pr: f64) -> Result<(Vec<f64>, f64)> {
    if u.len() < 2 || d.len() != u.len() || sigma.len() != u.len() {
        return Err(Error::Shape(format!("{} samples, {} D values, {} sigma values", u.len(), d.len(), sigma.len())));
    }
    for (&ui, &di) in u.iter().zip(d) {
        if !(di > 0.0) || !di.is_finite() {
            return Err(Error::Domain { value: di, lo: 0.0, hi: f64::INFINITY }.at(ui));
        }
    }
    let mut resistance = vec![0.0; u.len()];
    for i in 1..u.len() {
        let g = |k: usize| 1.0 / (d[k] * sigma[k]);
        resistance[i] = resistance[i - 1] + 0.5 * (u[i] - u[i - 1]) * (g(i) + g(i - 1));
    }
    let total = resistance[u.len() - 1];
    let flux = (pl - pr) / total;
    let p = resistance.iter().zip(sigma).map(|(r, s)| s * (pl - flux * r)).collect();
    Ok((p, flux))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: EstimatorMethod,
    pub max_rel_err: f64,
    pub mean_rel_err: f64,
    pub flux_rel_err: f64,
    /// Set when the estimator failed somewhere on the window.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub nu: usize,
    pub nv: usize,
    pub measurement: Measurement,
    pub field_residual: f64,
}

/// Compares each estimator with the oracle measurement on the window.
pub fn compare(
    spec: &ChannelSpec,
    methods: &[EstimatorMethod],
    grid: &Grid2D,
    left: &EndCondition,
    right: &EndCondition,
    exec: Exec,
) -> Result<ComparisonReport> {
    if methods.is_empty() {
        return Err(Error::DegenerateInput("no methods to compare".into()));
    }
    let field = solve_steady(spec, grid, left, right, exec)?;
    let m = measure_d(&field, spec)?;
    let j_oracle = m.mean_flux();
    let last = m.u.len() - 1;
    let rows = methods
        .iter()
        .map(|&method| {
            let estimates = exec.map(m.u.len(), |k| estimate(spec, method, m.u[k]).map(|(d, _)| d));
            let d: Result<Vec<f64>> = estimates.into_iter().collect();
            let d = match d {
                Ok(d) => d,
                Err(e) => {
                    return ComparisonRow {
                        method,
                        max_rel_err: f64::NAN,
                        mean_rel_err: f64::NAN,
                        flux_rel_err: f64::NAN,
                        error: Some(e.to_string()),
                    }
                }
            };
            let errs: Vec<f64> =
                d.iter().zip(&m.d).filter_map(|(est, meas)| meas.map(|x| ((est - x) / x).abs())).collect();
            let max = errs.iter().copied().fold(0.0, f64::max);
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let flux = match fj_solve_steady(&m.u, &d, &m.sigma, m.p_over_sigma[0], m.p_over_sigma[last]) {
                Ok((_, j)) => ((j - j_oracle) / j_oracle).abs(),
                Err(_) => f64::NAN,
            };
            ComparisonRow { method, max_rel_err: max, mean_rel_err: mean, flux_rel_err: flux, error: None }
        })
        .collect();
    Ok(ComparisonReport { rows, nu: grid.nu, nv: grid.nv, measurement: m, field_residual: field.residual })
}
