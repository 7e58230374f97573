//! Effective diffusion coefficients.
//!
//! All curvature-aware estimators share the form `D = D0·Im(D1)/Re(D2)`
//! where `P` is a harmonic function with no flux through the (approximated)
//! walls, `D1 = P(α2) - P(α1)` and `D2 = σ·(ρ/σ)'` with
//! `ρ(u) = ∫ P(φ(u,v)) det φ' dv`. For `P(z) = log(z - p)` the derivative
//! has a closed form ([`d2_pole`]); the curvature-circle estimator combines
//! two such poles linearly.

use crate::branch::{log_ratio, unwrap};
use crate::channel::{ChannelSpec, WallData, VALIDITY_MARGIN};
use crate::geometry::FLAT_CURVATURE;
use crate::par::Exec;
use crate::steiner::{build_map, CirclePair, SteinerMap, SteinerMode};
use crate::{Complex64, Error, Result, I};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Below this magnitude removable singularities are evaluated by series.
pub const SERIES_THRESHOLD: f64 = 1e-6;
/// Tangent pairs with a larger condition number count as parallel.
pub const PARALLEL_CONDITION: f64 = 1e12;
/// Radius of the stand-in circle for a straight wall, in channel widths.
pub const STRAIGHT_WALL_RADIUS: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorMethod {
    Zeroth,
    Linear,
    Quadratic,
    Zwanzig,
    Bradley,
    RegueraRubi,
    KalinayPercus,
    DagdugPineda,
}

impl EstimatorMethod {
    pub const ALL: [EstimatorMethod; 8] = [
        EstimatorMethod::Zeroth,
        EstimatorMethod::Linear,
        EstimatorMethod::Quadratic,
        EstimatorMethod::Zwanzig,
        EstimatorMethod::Bradley,
        EstimatorMethod::RegueraRubi,
        EstimatorMethod::KalinayPercus,
        EstimatorMethod::DagdugPineda,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EstimatorMethod::Zeroth => "Zeroth",
            EstimatorMethod::Linear => "Linear",
            EstimatorMethod::Quadratic => "Quadratic",
            EstimatorMethod::Zwanzig => "Zwanzig",
            EstimatorMethod::Bradley => "Bradley",
            EstimatorMethod::RegueraRubi => "RegueraRubi",
            EstimatorMethod::KalinayPercus => "KalinayPercus",
            EstimatorMethod::DagdugPineda => "DagdugPineda",
        }
    }

    /// Straight-channel formulas that only accept a flat base curve.
    pub fn is_baseline(self) -> bool {
        !matches!(self, EstimatorMethod::Zeroth | EstimatorMethod::Linear | EstimatorMethod::Quadratic)
    }
}

impl fmt::Display for EstimatorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EstimatorMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorMethod::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchFlag {
    /// A straight wall was replaced by a large circle (wall 1 or 2).
    StraightWallFallback(u8),
    /// The Steiner sign table was corrected.
    SteinerSignFlipped,
    /// `Im D1` jumped by a multiple of `2π` between profile samples.
    Unwrapped,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimateDiagnostics {
    pub d1: Option<Complex64>,
    pub d2: Option<Complex64>,
    /// Intersection of the wall tangents (tangent-line estimator).
    pub p: Option<Complex64>,
    pub steiner: Option<SteinerMap>,
    pub branch_flags: Vec<BranchFlag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionProfile {
    pub u: Vec<f64>,
    pub d: Vec<f64>,
    pub method: EstimatorMethod,
    pub diagnostics: Vec<EstimateDiagnostics>,
    /// Sample indices where `Im D1` had to be unwrapped.
    pub unwrap_events: Vec<usize>,
}

/// `D0/(kw)·1/(1-k v0)·log((1-k(v0-w/2))/(1-k(v0+w/2)))`, evaluated as
/// `D0/a²·atanh(x)/x` with `a = 1 - k v0`, `x = kw/(2a)`.
pub fn zeroth_formula(k: f64, v0: f64, w: f64, d0: f64) -> Result<f64> {
    let lo = 1.0 - k * (v0 - 0.5 * w);
    let hi = 1.0 - k * (v0 + 0.5 * w);
    if !(lo > 0.0 && hi > 0.0) {
        return Err(Error::FocalPoint(lo.min(hi)));
    }
    let a = 1.0 - k * v0;
    let x = k * w / (2.0 * a);
    let ratio = if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        1.0 + x2 / 3.0 + x2 * x2 / 5.0
    } else {
        x.atanh() / x
    };
    Ok(d0 / (a * a) * ratio)
}

pub fn d_zeroth(spec: &ChannelSpec, u: f64) -> Result<f64> {
    let sec = spec.section(u)?;
    zeroth_formula(sec.frame.k, sec.v0, sec.w, spec.d0)
}

fn kalinay_percus(wp: f64) -> f64 {
    let t = 0.5 * wp;
    if t.abs() < SERIES_THRESHOLD {
        let t2 = t * t;
        1.0 - t2 / 3.0 + t2 * t2 / 5.0
    } else {
        t.atan() / t
    }
}

// (atan(y0' + w'/2) - atan(y0' - w'/2)) / w' = atan2(w', c)/w',
// c = 1 + y0'² - w'²/4
fn dagdug_pineda(y0p: f64, wp: f64) -> f64 {
    let c = 1.0 + y0p * y0p - 0.25 * wp * wp;
    if wp.abs() < SERIES_THRESHOLD {
        let t = wp / c;
        let t2 = t * t;
        (1.0 - t2 / 3.0 + t2 * t2 / 5.0) / c
    } else {
        wp.atan2(c) / wp
    }
}

/// Straight-channel formulas in terms of the centerline slope `y0'` and the
/// width slope `w'`.
pub fn d_classical(method: EstimatorMethod, y0p: f64, wp: f64, d0: f64) -> Result<f64> {
    let factor = match method {
        EstimatorMethod::Zwanzig => 1.0 / (1.0 + wp * wp / 12.0),
        EstimatorMethod::Bradley => 1.0 / (1.0 + y0p * y0p + wp * wp / 12.0),
        EstimatorMethod::RegueraRubi => (1.0 + 0.25 * wp * wp).powf(-1.0 / 3.0),
        EstimatorMethod::KalinayPercus => kalinay_percus(wp),
        EstimatorMethod::DagdugPineda => dagdug_pineda(y0p, wp),
        other => {
            return Err(Error::EstimatorDegenerate(format!("{other} is not a straight-channel formula")));
        }
    };
    Ok(d0 * factor)
}

fn check_walls(w: &WallData, u: f64) -> Result<()> {
    for (v, s) in [(-1.0, w.s1), (1.0, w.s2)] {
        let margin = 1.0 - s * w.frame.k;
        if !(margin >= VALIDITY_MARGIN) {
            return Err(Error::Validity { u, v, margin });
        }
    }
    if !(w.width() > 0.0) {
        return Err(Error::InvalidChannel(format!("width must be positive (w = {} at u = {u})", w.width())));
    }
    Ok(())
}

/// Intersection of the wall tangent lines `α1 + t·α1'` and `α2 + t·α2'`, or
/// `None` when they are parallel to within [`PARALLEL_CONDITION`].
pub fn tangent_intersection(w: &WallData) -> std::result::Result<Complex64, f64> {
    let (a, b) = (w.d_alpha1, w.d_alpha2);
    let det = b.re * a.im - a.re * b.im;
    let cond = (a.norm_sqr() + b.norm_sqr()) / det.abs();
    if !(cond <= PARALLEL_CONDITION) {
        return Err(cond);
    }
    let r = w.alpha2 - w.alpha1;
    // t1·a - t2·b = r
    let t1 = (-b.im * r.re + b.re * r.im) / det;
    Ok(w.alpha1 + a * t1)
}

/// `D2` for `P(z) = log(z - p)`, given `l = log((α2 - p)/(α1 - p))`.
pub fn d2_pole(w: &WallData, p: Complex64, l: Complex64) -> Complex64 {
    let n = w.frame.n;
    let k = w.frame.k;
    let (a0, a1, a2) = (w.alpha0, w.alpha1, w.alpha2);
    let (d1, d2) = (w.d_alpha1, w.d_alpha2);
    if k.abs() < FLAT_CURVATURE {
        let wp = ((d2 - d1) / n).re;
        return (d2 - (a2 - p) * (wp / w.width())) * l / n + wp;
    }
    let f = w.base + n / k;
    let n2 = n * n * 2.0;
    let r = k * (a0 - f - (f - p)) * ((a1 - f) * d1 - (a2 - f) * d2) / (n2 * (a0 - f));
    let den = n2 * (a2 - a1) * (a0 - f);
    let q1 = k * (f - p - (a1 - f)) * (a2 - f) * (a1 - p) * d2 / den;
    let q2 = k * (f - p - (a2 - f)) * (a1 - f) * (a2 - p) * d1 / den;
    r + (q2 - q1) * l
}

fn master(d0: f64, d1: Complex64, d2: Complex64) -> Result<f64> {
    let d = d0 * d1.im / d2.re;
    if !d.is_finite() {
        return Err(Error::EstimatorDegenerate(format!("Re D2 = {} with Im D1 = {}", d2.re, d1.im)));
    }
    Ok(d)
}

/// Tangent-line estimator on explicit wall data.
pub fn linear_from_walls(w: &WallData, d0: f64) -> Result<(f64, EstimateDiagnostics)> {
    let mut diag = EstimateDiagnostics::default();
    let t = w.frame.t;
    if w.frame.k.abs() < FLAT_CURVATURE {
        // slopes of the walls relative to the base line
        let s1p = (w.d_alpha1 / t).im / (w.d_alpha1 / t).re;
        let s2p = (w.d_alpha2 / t).im / (w.d_alpha2 / t).re;
        let d = d_classical(EstimatorMethod::DagdugPineda, 0.5 * (s1p + s2p), s2p - s1p, d0)?;
        diag.d1 = Some(Complex64::new(0.0, (w.d_alpha2 / w.d_alpha1).arg()));
        diag.d2 = Some((w.d_alpha2 - w.d_alpha1) / w.frame.n);
        return Ok((d, diag));
    }
    let p = tangent_intersection(w).map_err(Error::NoIntersection)?;
    let l = log_ratio(w.alpha2, w.alpha1, p);
    let d1 = Complex64::new(0.0, (w.d_alpha2 / w.d_alpha1).arg());
    let d2 = d2_pole(w, p, l);
    diag.p = Some(p);
    diag.d1 = Some(d1);
    diag.d2 = Some(d2);
    Ok((master(d0, d1, d2)?, diag))
}

pub fn d_linear(spec: &ChannelSpec, u: f64) -> Result<(f64, EstimateDiagnostics)> {
    let w = crate::channel::walls(spec, u)?;
    check_walls(&w, u)?;
    linear_from_walls(&w, spec.d0)
}

// Osculating circle of a wall from its velocity and acceleration. Flat
// walls get a huge circle on the left-normal side.
fn wall_circle(pos: Complex64, d1: Complex64, d2: Complex64, scale: f64) -> (Complex64, f64, bool) {
    let speed = d1.norm();
    let normal = I * d1 / speed;
    let k = (d1.conj() * d2).im / (speed * speed * speed);
    if k.abs() < FLAT_CURVATURE || !k.is_finite() {
        let r = STRAIGHT_WALL_RADIUS * scale;
        (pos + normal * r, r, true)
    } else {
        (pos + normal / k, 1.0 / k.abs(), false)
    }
}

/// Curvature-circle estimator on explicit wall data.
pub fn quadratic_from_walls(w: &WallData, d0: f64) -> Result<(f64, EstimateDiagnostics)> {
    let mut diag = EstimateDiagnostics::default();
    let scale = w.width();
    let (f1, r1, flat1) = wall_circle(w.alpha1, w.d_alpha1, w.dd_alpha1, scale);
    let (f2, r2, flat2) = wall_circle(w.alpha2, w.d_alpha2, w.dd_alpha2, scale);
    if flat1 {
        diag.branch_flags.push(BranchFlag::StraightWallFallback(1));
    }
    if flat2 {
        diag.branch_flags.push(BranchFlag::StraightWallFallback(2));
    }
    let map = build_map(CirclePair::new(f1, r1, f2, r2)).map_err(|e| match e {
        Error::DegeneratePair(msg) => Error::EstimatorDegenerate(format!("wall circles: {msg}")),
        other => other,
    })?;
    if map.diagnostics.j_flipped {
        diag.branch_flags.push(BranchFlag::SteinerSignFlipped);
    }
    let pole = |p: Complex64| -> Result<(Complex64, Complex64)> {
        if p == w.alpha1 || p == w.alpha2 {
            return Err(Error::Pole(p));
        }
        let l = log_ratio(w.alpha2, w.alpha1, p);
        Ok((l, d2_pole(w, p, l)))
    };
    let (d1, d2) = match map.mode {
        SteinerMode::TwoPole { q1, q2, coeff } => {
            let (l1, e1) = pole(q1)?;
            let (l2, e2) = pole(q2)?;
            (coeff * (l2 - l1), coeff * (e2 - e1))
        }
        SteinerMode::Concentric { g } => {
            let (l, e) = pole(g)?;
            (I * l, I * e)
        }
    };
    diag.d1 = Some(d1);
    diag.d2 = Some(d2);
    diag.steiner = Some(map);
    Ok((master(d0, d1, d2)?, diag))
}

pub fn d_quadratic(spec: &ChannelSpec, u: f64) -> Result<(f64, EstimateDiagnostics)> {
    let w = crate::channel::walls(spec, u)?;
    check_walls(&w, u)?;
    quadratic_from_walls(&w, spec.d0)
}

/// Any method at one point.
pub fn estimate(spec: &ChannelSpec, method: EstimatorMethod, u: f64) -> Result<(f64, EstimateDiagnostics)> {
    let out = match method {
        EstimatorMethod::Zeroth => d_zeroth(spec, u).map(|d| (d, EstimateDiagnostics::default())),
        EstimatorMethod::Linear => d_linear(spec, u),
        EstimatorMethod::Quadratic => d_quadratic(spec, u),
        baseline => {
            let sec = spec.section(u)?;
            if sec.frame.k.abs() >= FLAT_CURVATURE {
                return Err(Error::NonStraightBase { method: baseline.tag(), k: sec.frame.k, u });
            }
            d_classical(baseline, sec.dv0, sec.dw, spec.d0).map(|d| (d, EstimateDiagnostics::default()))
        }
    };
    out.map_err(|e| e.at(u))
}

/// `n` uniformly spaced sample points spanning the channel domain.
pub fn uniform_grid(spec: &ChannelSpec, n: usize) -> Vec<f64> {
    let (u1, u2) = spec.domain();
    let last = (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { u2 } else { (u1 * (last - i as f64) + u2 * i as f64) / last }).collect()
}

pub fn profile(spec: &ChannelSpec, method: EstimatorMethod, n: usize, exec: Exec) -> Result<DiffusionProfile> {
    if n < 2 {
        return Err(Error::DegenerateInput(format!("profile needs at least 2 samples, got {n}")));
    }
    let u = uniform_grid(spec, n);
    let results = exec.map(n, |i| estimate(spec, method, u[i]));
    let mut d = Vec::with_capacity(n);
    let mut diagnostics = Vec::with_capacity(n);
    for r in results {
        let (value, diag) = r?;
        d.push(value);
        diagnostics.push(diag);
    }
    let mut phases: Vec<f64> = diagnostics.iter().map(|g| g.d1.map_or(0.0, |d1| d1.im)).collect();
    let unwrap_events = unwrap(&mut phases, 2.0 * PI);
    for &i in &unwrap_events {
        diagnostics[i].branch_flags.push(BranchFlag::Unwrapped);
    }
    Ok(DiffusionProfile { u, d, method, diagnostics, unwrap_events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{walls, Profile1D};
    use crate::geometry::PlaneCurve;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn strip(v0: Profile1D, w: Profile1D, u2: f64) -> ChannelSpec {
        let base = PlaneCurve::line(c(1.0, 0.0), c(0.0, 0.0), 0.0, u2).unwrap();
        ChannelSpec::new(base, v0, w, 1.0).unwrap()
    }

    fn annulus(k: f64, v0: f64, w: f64) -> ChannelSpec {
        let base = PlaneCurve::circle(k, c(0.0, 0.0), 0.0, 0.0, 1.0).unwrap();
        ChannelSpec::new(base, Profile1D::constant(v0), Profile1D::constant(w), 1.0).unwrap()
    }

    // Direct evaluation of D2 = σ (ρ/σ)' by quadrature in v and a centered
    // difference in u, for P(z) = log(z - pole).
    fn d2_numeric(spec: &ChannelSpec, u: f64, pole: Complex64) -> Complex64 {
        let rho = |u: f64| {
            let sec = spec.section(u).unwrap();
            let n = 2001;
            let wts = crate::channel::simpson_weights(n);
            let mut acc = c(0.0, 0.0);
            for (j, wt) in wts.iter().enumerate() {
                let v = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
                acc += (sec.point(v) - pole).ln() * (sec.jacobian(v) * wt);
            }
            acc
        };
        let sig = |u: f64| spec.section(u).unwrap().sigma();
        let h = 1e-4;
        sig(u) * (rho(u + h) / sig(u + h) - rho(u - h) / sig(u - h)) / (2.0 * h)
    }

    #[test]
    fn zeroth_examples() {
        let s = strip(Profile1D::constant(0.3), Profile1D::constant(0.7), 2.0);
        assert_eq!(d_zeroth(&s, 1.0).unwrap(), 1.0);
        let a = annulus(1.0, 0.0, 1.0);
        assert!((d_zeroth(&a, 0.5).unwrap() - 3f64.ln()).abs() < 1e-14);
        let mut prev = 0.0;
        for kw in [1.9, 1.99, 1.999, 1.9999] {
            let d = zeroth_formula(kw, 0.0, 1.0, 1.0).unwrap();
            assert!(d > prev);
            prev = d;
        }
        assert!(prev > 4.0);
        assert!(matches!(zeroth_formula(2.0, 0.0, 1.0, 1.0), Err(Error::FocalPoint(_))));
    }

    #[test]
    fn classical_examples() {
        for m in EstimatorMethod::ALL.into_iter().filter(|m| m.is_baseline()) {
            assert_eq!(d_classical(m, 0.0, 0.0, 2.0).unwrap(), 2.0);
        }
        let z = d_classical(EstimatorMethod::Zwanzig, 0.0, 1.0, 1.0).unwrap();
        assert!((z - 12.0 / 13.0).abs() < 1e-15);
        let dp = d_classical(EstimatorMethod::DagdugPineda, 0.0, 2.0, 1.0).unwrap();
        assert!((dp - PI / 4.0).abs() < 1e-15);
        assert!(d_classical(EstimatorMethod::Linear, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn dagdug_pineda_matches_arctan_difference() {
        for &(y, w) in &[(0.3f64, 1.2f64), (-2.0, 0.5), (1.5, 5.0), (0.0, 7.0), (3.0, -1.0)] {
            let direct = ((y + 0.5 * w).atan() - (y - 0.5 * w).atan()) / w;
            assert!((dagdug_pineda(y, w) - direct).abs() < 1e-14, "{y} {w}");
        }
        let y: f64 = 0.7;
        assert!((dagdug_pineda(y, 1e-9) - 1.0 / (1.0 + y * y)).abs() < 1e-15);
    }

    #[test]
    fn kalinay_percus_minus_zwanzig_is_fourth_order() {
        let err = |w: f64| {
            let kp = d_classical(EstimatorMethod::KalinayPercus, 0.0, w, 1.0).unwrap();
            let z = d_classical(EstimatorMethod::Zwanzig, 0.0, w, 1.0).unwrap();
            (kp - z).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((14.0..=18.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn method_tags_round_trip() {
        for m in EstimatorMethod::ALL {
            assert_eq!(m.tag().parse::<EstimatorMethod>().unwrap(), m);
        }
        assert!("zeroth".parse::<EstimatorMethod>().is_err());
    }

    #[test]
    fn linear_straight_examples() {
        let s = strip(Profile1D::constant(0.0), Profile1D::linear(1.0, 2.0), 1.0);
        let (d, _) = d_linear(&s, 0.5).unwrap();
        assert!((d - PI / 4.0).abs() < 1e-15);
        let flat = strip(Profile1D::constant(0.2), Profile1D::constant(1.0), 1.0);
        assert_eq!(d_linear(&flat, 0.5).unwrap().0, 1.0);
    }

    #[test]
    fn d2_pole_matches_quadrature_on_curved_channel() {
        let base = PlaneCurve::circle(0.4, c(0.3, -0.2), 0.7, 0.0, 2.0).unwrap();
        let spec =
            ChannelSpec::new(base, Profile1D::Poly(vec![0.1, 0.2, -0.05]), Profile1D::Poly(vec![0.8, 0.3, 0.1]), 1.0)
                .unwrap();
        let u = 1.1;
        let w = walls(&spec, u).unwrap();
        for pole in [c(-3.0, 1.0), c(4.0, 2.0), c(0.5, -5.0)] {
            let l = log_ratio(w.alpha2, w.alpha1, pole);
            let exact = d2_pole(&w, pole, l);
            let num = d2_numeric(&spec, u, pole);
            assert!((exact - num).norm() < 1e-6, "{pole}: {exact} vs {num}");
        }
    }

    #[test]
    fn d2_pole_matches_quadrature_on_straight_channel() {
        let spec = strip(Profile1D::Poly(vec![0.1, 0.4, 0.3]), Profile1D::Poly(vec![0.6, 0.5, -0.1]), 2.0);
        let u = 0.9;
        let w = walls(&spec, u).unwrap();
        for pole in [c(-3.0, 1.0), c(2.0, 3.0), c(0.5, -5.0)] {
            let l = log_ratio(w.alpha2, w.alpha1, pole);
            let exact = d2_pole(&w, pole, l);
            let num = d2_numeric(&spec, u, pole);
            assert!((exact - num).norm() < 1e-6, "{pole}: {exact} vs {num}");
        }
    }

    #[test]
    fn linear_on_annulus_reports_parallel_tangents() {
        let a = annulus(1.0, 0.0, 1.0);
        assert!(matches!(d_linear(&a, 0.5), Err(Error::NoIntersection(_))));
    }

    #[test]
    fn quadratic_annulus_equals_zeroth() {
        let a = annulus(1.0, 0.0, 1.0);
        let (d, diag) = d_quadratic(&a, 0.3).unwrap();
        assert!((d - 3f64.ln()).abs() < 1e-10, "{d}");
        assert!(diag.steiner.unwrap().is_concentric());
    }

    #[test]
    fn quadratic_straight_strip_tends_to_d0() {
        let s = strip(Profile1D::constant(0.0), Profile1D::constant(1.0), 1.0);
        let (d, diag) = d_quadratic(&s, 0.5).unwrap();
        assert!((d - 1.0).abs() < 1e-4, "{d}");
        assert!(diag.branch_flags.contains(&BranchFlag::StraightWallFallback(1)));
    }

    #[test]
    fn quadratic_is_exact_for_lines_through_a_point() {
        // Walls on rays from the origin over a straight base: P = arg z is the
        // exact no-flux solution, and the wall circles degenerate to lines.
        let s = strip(Profile1D::Poly(vec![0.5, 0.5]), Profile1D::Poly(vec![1.0, 1.0]), 2.0);
        let (dq, _) = d_quadratic(&s, 1.0).unwrap();
        let (dl, _) = d_linear(&s, 1.0).unwrap();
        assert!((dq - dl).abs() < 1e-4, "{dq} vs {dl}");
    }

    #[test]
    fn baselines_need_a_straight_base() {
        let a = annulus(1.0, 0.0, 1.0);
        let err = estimate(&a, EstimatorMethod::Zwanzig, 0.5).unwrap_err();
        assert!(matches!(err.root(), Error::NonStraightBase { .. }));
    }

    #[test]
    fn profile_examples() {
        let s = strip(Profile1D::constant(0.0), Profile1D::constant(1.0), 3.0);
        let p = profile(&s, EstimatorMethod::Zeroth, 10, Exec::Sequential).unwrap();
        assert_eq!(p.u.len(), 10);
        assert!(p.d.iter().all(|&d| d == 1.0));
        let a = annulus(1.0, 0.0, 1.0);
        let p = profile(&a, EstimatorMethod::Zeroth, 7, Exec::Parallel).unwrap();
        assert!(p.d.iter().all(|&d| (d - 3f64.ln()).abs() < 1e-14));
        let wedge = strip(Profile1D::constant(0.0), Profile1D::linear(1.0, 1.0), 2.0);
        let lin = profile(&wedge, EstimatorMethod::Linear, 11, Exec::Parallel).unwrap();
        let dp = profile(&wedge, EstimatorMethod::DagdugPineda, 11, Exec::Sequential).unwrap();
        for (a, b) in lin.d.iter().zip(&dp.d) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(profile(&s, EstimatorMethod::Zeroth, 1, Exec::Sequential).is_err());
    }

    #[test]
    fn profile_errors_carry_u() {
        let a = annulus(1.0, 0.0, 1.0);
        let err = profile(&a, EstimatorMethod::Linear, 5, Exec::Sequential).unwrap_err();
        match err {
            Error::AtSample { u, .. } => assert_eq!(u, 0.0),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn zeroth_depends_on_product_kw(k in 0.01f64..3.0, w in 0.01f64..3.0, c in 0.1f64..10.0) {
            prop_assume!(k * w < 1.99);
            let a = zeroth_formula(k, 0.0, w, 1.0).unwrap();
            let b = zeroth_formula(k / c, 0.0, c * w, 1.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn zeroth_limit_bound(kw in 0.0f64..1e-3) {
            let d = zeroth_formula(kw, 0.0, 1.0, 1.0).unwrap();
            prop_assert!((d - 1.0).abs() <= kw * kw);
        }

        #[test]
        fn zeroth_monotone(a in 0.0f64..1.98, b in 0.0f64..1.98) {
            prop_assume!((a - b).abs() > 1e-6);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(zeroth_formula(lo, 0.0, 1.0, 1.0).unwrap() < zeroth_formula(hi, 0.0, 1.0, 1.0).unwrap());
            prop_assert!(zeroth_formula(hi, 0.0, 1.0, 1.0).unwrap() >= 1.0);
        }

        #[test]
        fn linear_at_k0_is_dagdug_pineda(v0p in -3.0f64..3.0, wp in -3.0f64..3.0) {
            let w0 = 1.0 + wp.abs() * 2.0;
            let s = strip(Profile1D::linear(0.0, v0p), Profile1D::linear(w0 - wp, wp), 2.0);
            let (d, _) = d_linear(&s, 1.0).unwrap();
            let dp = d_classical(EstimatorMethod::DagdugPineda, v0p, wp, 1.0).unwrap();
            prop_assert!((d - dp).abs() <= 1e-9);
        }

        #[test]
        fn dagdug_pineda_symmetric_is_kalinay_percus(wp in -10.0f64..10.0) {
            let dp = d_classical(EstimatorMethod::DagdugPineda, 0.0, wp, 1.0).unwrap();
            let kp = d_classical(EstimatorMethod::KalinayPercus, 0.0, wp, 1.0).unwrap();
            prop_assert!((dp - kp).abs() <= 1e-12);
        }

        #[test]
        fn quadratic_matches_zeroth_on_symmetric_annuli(k in 0.05f64..4.0, kw in 0.01f64..1.5) {
            let a = annulus(k, 0.0, kw / k);
            let (dq, _) = d_quadratic(&a, 0.5).unwrap();
            let dz = d_zeroth(&a, 0.5).unwrap();
            prop_assert!((dq - dz).abs() <= 1e-9);
        }

        #[test]
        fn estimators_are_positive(k in -1.0f64..1.0, v0 in -0.2f64..0.2, w in 0.1f64..0.8, dw in -0.3f64..0.3) {
            prop_assume!(k.abs() > 1e-3 && w + dw > 0.05);
            let base = PlaneCurve::circle(k, c(0.0, 0.0), 0.0, 0.0, 1.0).unwrap();
            let spec = ChannelSpec::new(base, Profile1D::constant(v0), Profile1D::linear(w, dw), 1.0).unwrap();
            prop_assert!(d_zeroth(&spec, 0.5).unwrap() > 0.0);
            if dw.abs() > 1e-3 {
                let (dl, _) = d_linear(&spec, 0.5).unwrap();
                prop_assert!(dl > 0.0);
            }
        }
    }
}
