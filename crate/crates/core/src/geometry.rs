//! Differential geometry of plane curves, with the plane identified with `C`.
//!
//! Conventions: `T = dα/du` for an arc-length parameter `u`, `N = i·T`,
//! `dT/du = k·N` and `dN/du = -k·T`. Under this orientation the offset curve
//! `α + v·N` has curvature `k / (1 - k·v)` and the focal point is
//! `α + N / k`.

use crate::{Complex64, Error, Result, I};

/// Curvatures below this magnitude are treated as exactly zero.
pub const FLAT_CURVATURE: f64 = 1e-12;

/// Position and first two derivatives of a curve at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub pos: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

/// Unit tangent, unit normal and signed curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetFrame {
    pub t: Complex64,
    pub n: Complex64,
    pub k: f64,
}

/// Uniformly sampled arc-length curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledArc {
    u1: f64,
    h: f64,
    points: Vec<Complex64>,
}

impl SampledArc {
    /// Samples `points[j]` at `u1 + j*h`. Needs at least 3 points.
    pub fn new(u1: f64, h: f64, points: Vec<Complex64>) -> Result<Self> {
        if points.len() < 3 || !(h > 0.0) {
            return Err(Error::DegenerateInput(format!(
                "sampled arc needs >= 3 points and positive spacing (got {} points, h = {h})",
                points.len()
            )));
        }
        Ok(Self { u1, h, points })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    fn u2(&self) -> f64 {
        self.u1 + self.h * (self.points.len() - 1) as f64
    }

    // Quadratic through the nearest node and its neighbours: centered second
    // order differences at nodes, one-sided second order at the ends.
    fn jet(&self, u: f64) -> Jet {
        let n = self.points.len();
        let x = (u - self.u1) / self.h;
        let i = (x.round() as isize).clamp(1, n as isize - 2) as usize;
        let t = x - i as f64;
        let (pm, p0, pp) = (self.points[i - 1], self.points[i], self.points[i + 1]);
        let c1 = (pp - pm) * 0.5;
        let c2 = (pp - p0 * 2.0 + pm) * 0.5;
        Jet { pos: p0 + c1 * t + c2 * (t * t), d1: (c1 + c2 * (2.0 * t)) / self.h, d2: c2 * 2.0 / (self.h * self.h) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    /// `α(u) = origin + direction·u` with `|direction| = 1`.
    Line {
        direction: Complex64,
        origin: Complex64,
    },
    /// `α(u) = center - i·exp(i(k·u + phase)) / k`.
    Circle {
        k: f64,
        center: Complex64,
        phase: f64,
    },
    SampledArc(SampledArc),
}

/// Arc-length parametrized plane curve on a closed parameter interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneCurve {
    kind: CurveKind,
    u1: f64,
    u2: f64,
}

impl PlaneCurve {
    pub fn line(direction: Complex64, origin: Complex64, u1: f64, u2: f64) -> Result<Self> {
        let len = direction.norm();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::DegenerateInput("line direction must be nonzero".into()));
        }
        check_interval(u1, u2)?;
        Ok(Self { kind: CurveKind::Line { direction: direction / len, origin }, u1, u2 })
    }

    pub fn circle(k: f64, center: Complex64, phase: f64, u1: f64, u2: f64) -> Result<Self> {
        if k == 0.0 || !k.is_finite() {
            return Err(Error::DegenerateInput("circle curvature must be finite and nonzero".into()));
        }
        check_interval(u1, u2)?;
        Ok(Self { kind: CurveKind::Circle { k, center, phase }, u1, u2 })
    }

    pub fn sampled(arc: SampledArc) -> Self {
        let (u1, u2) = (arc.u1, arc.u2());
        Self { kind: CurveKind::SampledArc(arc), u1, u2 }
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.u1, self.u2)
    }

    pub fn length(&self) -> f64 {
        self.u2 - self.u1
    }

    pub fn is_straight(&self) -> bool {
        matches!(self.kind, CurveKind::Line { .. })
    }

    fn check(&self, u: f64) -> Result<()> {
        let tol = 1e-9 * (self.u2 - self.u1).abs().max(1.0);
        if u.is_nan() || u < self.u1 - tol || u > self.u2 + tol {
            return Err(Error::Domain { value: u, lo: self.u1, hi: self.u2 });
        }
        Ok(())
    }

    pub fn jet(&self, u: f64) -> Result<Jet> {
        self.check(u)?;
        Ok(match &self.kind {
            CurveKind::Line { direction, origin } => {
                Jet { pos: origin + direction * u, d1: *direction, d2: Complex64::new(0.0, 0.0) }
            }
            CurveKind::Circle { k, center, phase } => {
                let e = Complex64::from_polar(1.0, k * u + phase);
                Jet { pos: center - I * e / *k, d1: e, d2: I * e * *k }
            }
            CurveKind::SampledArc(arc) => arc.jet(u),
        })
    }

    pub fn position(&self, u: f64) -> Result<Complex64> {
        Ok(self.jet(u)?.pos)
    }

    /// Derivative of the curvature with respect to arc length (zero for
    /// lines and circles, centered difference of curvature otherwise).
    pub fn curvature_derivative(&self, u: f64) -> Result<f64> {
        match &self.kind {
            CurveKind::SampledArc(arc) => {
                self.check(u)?;
                let h = arc.h;
                let lo = (u - h).max(self.u1);
                let hi = (u + h).min(self.u2);
                Ok((frenet(self, hi)?.k - frenet(self, lo)?.k) / (hi - lo))
            }
            _ => {
                self.check(u)?;
                Ok(0.0)
            }
        }
    }
}

fn check_interval(u1: f64, u2: f64) -> Result<()> {
    if !(u1.is_finite() && u2.is_finite() && u2 > u1) {
        return Err(Error::DegenerateInput(format!("empty parameter interval [{u1}, {u2}]")));
    }
    Ok(())
}

/// Signed curvature from the first and second derivative of any regular
/// parametrization: `(x'y'' - y'x'') / (x'^2 + y'^2)^{3/2}`.
pub fn curvature_from_derivatives(d1: Complex64, d2: Complex64) -> Result<f64> {
    let speed2 = d1.norm_sqr();
    if !(speed2 > 0.0) {
        return Err(Error::SingularParametrization(f64::NAN));
    }
    Ok((d1.re * d2.im - d1.im * d2.re) / (speed2 * speed2.sqrt()))
}

pub fn frenet(curve: &PlaneCurve, u: f64) -> Result<FrenetFrame> {
    let jet = curve.jet(u)?;
    Ok(match curve.kind {
        CurveKind::Line { direction, .. } => FrenetFrame { t: direction, n: I * direction, k: 0.0 },
        CurveKind::Circle { k, .. } => FrenetFrame { t: jet.d1, n: I * jet.d1, k },
        CurveKind::SampledArc(_) => {
            let speed = jet.d1.norm();
            if !(speed > 0.0) {
                return Err(Error::SingularParametrization(u));
            }
            let t = jet.d1 / speed;
            let mut k = curvature_from_derivatives(jet.d1, jet.d2)?;
            if k.abs() < FLAT_CURVATURE {
                k = 0.0;
            }
            FrenetFrame { t, n: I * t, k }
        }
    })
}

/// Curvature of `t ↦ (x(t), y(t))` at `t`, with derivatives taken by
/// fourth-order central differences.
pub fn curvature_general<X, Y>(x: X, y: Y, t: f64) -> Result<f64>
where
    X: Fn(f64) -> f64,
    Y: Fn(f64) -> f64,
{
    let h = 1e-3 * t.abs().max(1.0);
    let z = |s: f64| Complex64::new(x(s), y(s));
    let (m2, m1, z0, p1, p2) = (z(t - 2.0 * h), z(t - h), z(t), z(t + h), z(t + 2.0 * h));
    let d1 = (m2 - m1 * 8.0 + p1 * 8.0 - p2) / (12.0 * h);
    let d2 = (-m2 + m1 * 16.0 - z0 * 30.0 + p1 * 16.0 - p2) / (12.0 * h * h);
    if d1.norm() <= 1e-10 * (z0.norm() + 1.0) {
        return Err(Error::SingularParametrization(t));
    }
    curvature_from_derivatives(d1, d2)
}

/// Curvature of the offset curve `α + v·N` of a curve with curvature `k`.
pub fn offset_curvature(k: f64, v: f64) -> Result<f64> {
    let margin = 1.0 - k * v;
    if margin.abs() <= f64::EPSILON {
        return Err(Error::FocalPoint(margin));
    }
    Ok(k / margin)
}

pub fn focal_point(curve: &PlaneCurve, u: f64) -> Result<Complex64> {
    let frame = frenet(curve, u)?;
    if frame.k == 0.0 {
        return Err(Error::NoFocalPoint(u));
    }
    Ok(curve.position(u)? + frame.n * (1.0 / frame.k))
}

// 8-point Gauss-Legendre on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Piecewise cubic through the samples, four neighbouring nodes per segment.
struct CubicPath<'a> {
    t: &'a [f64],
    p: &'a [Complex64],
}

impl CubicPath<'_> {
    fn stencil(&self, seg: usize) -> usize {
        let n = self.t.len();
        seg.saturating_sub(1).min(n - 4)
    }

    fn eval(&self, seg: usize, s: f64) -> (Complex64, Complex64) {
        let base = self.stencil(seg);
        let ts = &self.t[base..base + 4];
        let ps = &self.p[base..base + 4];
        let mut pos = Complex64::new(0.0, 0.0);
        let mut der = Complex64::new(0.0, 0.0);
        for a in 0..4 {
            let mut l = 1.0;
            let mut dl = 0.0;
            for b in 0..4 {
                if b == a {
                    continue;
                }
                let denom = ts[a] - ts[b];
                let factor = (s - ts[b]) / denom;
                dl = dl * factor + l / denom;
                l *= factor;
            }
            pos += ps[a] * l;
            der += ps[a] * dl;
        }
        (pos, der)
    }

    fn arc(&self, seg: usize, from: f64, to: f64) -> f64 {
        let mid = 0.5 * (from + to);
        let half = 0.5 * (to - from);
        GL_NODES.iter().zip(GL_WEIGHTS.iter()).map(|(x, w)| w * self.eval(seg, mid + half * x).1.norm()).sum::<f64>()
            * half
    }
}

/// Resamples an arbitrary parametrized curve at uniform arc length.
///
/// The samples are joined by a piecewise cubic interpolant; arc length is
/// integrated with Gauss-Legendre quadrature and inverted by safeguarded
/// Newton iteration. The returned curve starts at `u = 0`.
pub fn reparametrize_arclength(samples: &[(f64, Complex64)]) -> Result<PlaneCurve> {
    let n_out = (8 * samples.len()).max(4097);
    reparametrize_arclength_with(samples, n_out)
}

/// As [`reparametrize_arclength`] with an explicit number of output nodes.
pub fn reparametrize_arclength_with(samples: &[(f64, Complex64)], n_out: usize) -> Result<PlaneCurve> {
    if samples.len() < 4 {
        return Err(Error::DegenerateInput(format!("need at least 4 samples to reparametrize, got {}", samples.len())));
    }
    if n_out < 3 {
        return Err(Error::DegenerateInput("need at least 3 output nodes".into()));
    }
    for (j, w) in samples.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(Error::DegenerateInput(format!("parameter not increasing at sample {}", j + 1)));
        }
        if w[1].1 == w[0].1 {
            return Err(Error::DegenerateInput(format!("duplicate consecutive points at sample {}", j + 1)));
        }
    }
    let t: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let p: Vec<Complex64> = samples.iter().map(|s| s.1).collect();
    let path = CubicPath { t: &t, p: &p };
    let segs = t.len() - 1;
    let mut cumulative = Vec::with_capacity(segs + 1);
    cumulative.push(0.0);
    for seg in 0..segs {
        let len = path.arc(seg, t[seg], t[seg + 1]);
        cumulative.push(cumulative[seg] + len);
    }
    let total = cumulative[segs];
    if !(total > 0.0) {
        return Err(Error::DegenerateInput("curve has zero length".into()));
    }
    let h = total / (n_out - 1) as f64;
    let mut points = Vec::with_capacity(n_out);
    let mut seg = 0;
    for j in 0..n_out {
        let target = if j == n_out - 1 { total } else { j as f64 * h };
        while seg + 1 < segs && cumulative[seg + 1] < target {
            seg += 1;
        }
        let want = target - cumulative[seg];
        let (mut lo, mut hi) = (t[seg], t[seg + 1]);
        let seg_len = cumulative[seg + 1] - cumulative[seg];
        let mut s = lo + (hi - lo) * (want / seg_len).clamp(0.0, 1.0);
        for _ in 0..50 {
            let f = path.arc(seg, t[seg], s) - want;
            if f.abs() <= 1e-14 * total.max(1.0) {
                break;
            }
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let speed = path.eval(seg, s).1.norm();
            let mut next = s - f / speed;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            s = next;
        }
        points.push(path.eval(seg, s).0);
    }
    Ok(PlaneCurve::sampled(SampledArc::new(0.0, h, points)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_circle_arc(h: f64, u2: f64) -> PlaneCurve {
        // counter-clockwise unit circle starting at 1, arc length = angle
        let n = (u2 / h).round() as usize + 1;
        let pts = (0..n).map(|j| Complex64::from_polar(1.0, j as f64 * h)).collect();
        PlaneCurve::sampled(SampledArc::new(0.0, h, pts).unwrap())
    }

    #[test]
    fn line_frame() {
        let line = PlaneCurve::line(c(1.0, 0.0), c(0.0, 0.0), 0.0, 10.0).unwrap();
        let f = frenet(&line, 5.0).unwrap();
        assert_eq!(f.t, c(1.0, 0.0));
        assert_eq!(f.n, I);
        assert_eq!(f.k, 0.0);
    }

    #[test]
    fn circle_frame_at_origin() {
        let circle = PlaneCurve::circle(1.0, I, 0.0, -1.0, 1.0).unwrap();
        let jet = circle.jet(0.0).unwrap();
        assert!(jet.pos.norm() < 1e-15);
        let f = frenet(&circle, 0.0).unwrap();
        assert!((f.t - c(1.0, 0.0)).norm() < 1e-15);
        assert!((f.n - I).norm() < 1e-15);
        assert_eq!(f.k, 1.0);
    }

    #[test]
    fn circle_frenet_equations_hold() {
        let circle = PlaneCurve::circle(0.7, c(1.0, -2.0), 0.3, -3.0, 3.0).unwrap();
        let h = 1e-5;
        for &u in &[-2.0, 0.0, 1.3] {
            let f = frenet(&circle, u).unwrap();
            let dt = (frenet(&circle, u + h).unwrap().t - frenet(&circle, u - h).unwrap().t) / (2.0 * h);
            let dn = (frenet(&circle, u + h).unwrap().n - frenet(&circle, u - h).unwrap().n) / (2.0 * h);
            assert!((dt - f.n * f.k).norm() < 1e-9);
            assert!((dn + f.t * f.k).norm() < 1e-9);
            assert!((circle.jet(u).unwrap().d1.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_circle_curvature() {
        let arc = unit_circle_arc(1e-3, 3.0);
        let f = frenet(&arc, PI / 2.0).unwrap();
        assert!((f.k - 1.0).abs() < 1e-5, "k = {}", f.k);
        // endpoints use one-sided stencils
        let f0 = frenet(&arc, 0.0).unwrap();
        assert!((f0.k - 1.0).abs() < 1e-5);
    }

    #[test]
    fn sampled_focal_point_of_radius_two_circle() {
        let h = 1e-3;
        let pts = (0..2001).map(|j| Complex64::from_polar(2.0, j as f64 * h / 2.0)).collect();
        let arc = PlaneCurve::sampled(SampledArc::new(0.0, h, pts).unwrap());
        let f = focal_point(&arc, 0.0).unwrap();
        assert!(f.norm() < 1e-5, "focal point {f}");
    }

    #[test]
    fn domain_errors() {
        let line = PlaneCurve::line(c(1.0, 0.0), c(0.0, 0.0), 0.0, 1.0).unwrap();
        assert!(matches!(frenet(&line, 2.0), Err(Error::Domain { .. })));
        assert!(matches!(focal_point(&line, 0.5), Err(Error::NoFocalPoint(_))));
    }

    #[test]
    fn circle_focal_point_is_center() {
        let circle = PlaneCurve::circle(1.0, I, 0.0, -3.0, 3.0).unwrap();
        for &u in &[-2.0, 0.0, 0.4, 2.9] {
            assert!((focal_point(&circle, u).unwrap() - I).norm() < 1e-14);
        }
    }

    #[test]
    fn general_curvature_examples() {
        assert_eq!(curvature_general(|t| t, |_| 0.0, 0.3).unwrap(), 0.0);
        for &t in &[0.0, 1.0, 2.5, -4.0] {
            let k = curvature_general(f64::cos, f64::sin, t).unwrap();
            assert!((k - 1.0).abs() < 1e-8, "k({t}) = {k}");
        }
        let k = curvature_general(|t| t, |t| t * t, 0.0).unwrap();
        assert!((k - 2.0).abs() < 1e-8);
        assert!(matches!(curvature_general(|_| 1.0, |_| 2.0, 0.0), Err(Error::SingularParametrization(_))));
    }

    #[test]
    fn offset_curvature_examples() {
        assert_eq!(offset_curvature(0.0, 3.7).unwrap(), 0.0);
        assert_eq!(offset_curvature(1.0, -1.0).unwrap(), 0.5);
        assert!(matches!(offset_curvature(1.0, 1.0), Err(Error::FocalPoint(_))));
    }

    #[test]
    fn offset_of_circle_is_concentric_circle() {
        let k = 0.8;
        let circle = PlaneCurve::circle(k, c(0.5, 0.5), 0.0, -1.0, 1.0).unwrap();
        for &v in &[-0.6, 0.3, 1.0] {
            let offset = |u: f64| {
                let f = frenet(&circle, u).unwrap();
                circle.position(u).unwrap() + f.n * v
            };
            let kv = curvature_general(|u| offset(u).re, |u| offset(u).im, 0.2).unwrap();
            assert!((kv - offset_curvature(k, v).unwrap()).abs() < 1e-7);
        }
    }

    #[test]
    fn reparametrize_affine_speed() {
        let samples: Vec<_> = (0..11)
            .map(|j| {
                let t = j as f64 / 10.0;
                (t, c(2.0 * t, 0.0))
            })
            .collect();
        let curve = reparametrize_arclength(&samples).unwrap();
        let (u1, u2) = curve.domain();
        assert_eq!(u1, 0.0);
        assert!((u2 - 2.0).abs() < 1e-12);
        for &u in &[0.0, 0.37, 1.0, 2.0] {
            assert!((curve.position(u).unwrap() - c(u, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn reparametrize_half_circle_length() {
        let samples: Vec<_> = (0..200)
            .map(|j| {
                let t = PI * j as f64 / 199.0;
                (t, Complex64::from_polar(1.0, t))
            })
            .collect();
        let curve = reparametrize_arclength(&samples).unwrap();
        assert!((curve.length() - PI).abs() / PI < 1e-6);
        for j in 0..=40 {
            let u = curve.length() * j as f64 / 40.0;
            let speed = curve.jet(u).unwrap().d1.norm();
            assert!((speed - 1.0).abs() < 1e-6, "speed {speed} at {u}");
        }
    }

    #[test]
    fn reparametrize_rejects_bad_input() {
        let three = [(0.0, c(0.0, 0.0)), (1.0, c(1.0, 0.0)), (2.0, c(2.0, 0.0))];
        assert!(matches!(reparametrize_arclength(&three), Err(Error::DegenerateInput(_))));
        let dup = [(0.0, c(0.0, 0.0)), (1.0, c(1.0, 0.0)), (2.0, c(1.0, 0.0)), (3.0, c(2.0, 0.0))];
        assert!(matches!(reparametrize_arclength(&dup), Err(Error::DegenerateInput(_))));
    }
}
