//! Channels over the normal bundle of a base curve.
//!
//! A channel is the image of `φ(u, v) = α(u) + s(u, v)·N(u)` with
//! `s = v0(u) + v·w(u)/2` and `v ∈ [-1, 1]`. The lower wall is `v = -1`,
//! the upper wall `v = 1`.

use crate::geometry::{frenet, FrenetFrame, PlaneCurve};
use crate::oracle::SteadyField;
use crate::{Complex64, Error, Result};

/// Smallest admissible value of `1 - s·k` anywhere in a channel.
pub const VALIDITY_MARGIN: f64 = 1e-6;

/// A scalar function of `u` with its first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile1D {
    /// `Σ c_n u^n`, coefficients in increasing degree.
    Poly(Vec<f64>),
    /// Values at `u1 + j*h`; derivatives by second order finite differences.
    Samples { u1: f64, h: f64, values: Vec<f64> },
}

impl Profile1D {
    pub fn constant(c: f64) -> Self {
        Profile1D::Poly(vec![c])
    }

    pub fn linear(c0: f64, c1: f64) -> Self {
        Profile1D::Poly(vec![c0, c1])
    }

    /// Value, first and second derivative at `u`.
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        match self {
            Profile1D::Poly(c) => {
                let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &a in c.iter().rev() {
                    d2 = d2 * u + 2.0 * d1;
                    d1 = d1 * u + f;
                    f = f * u + a;
                }
                (f, d1, d2)
            }
            Profile1D::Samples { u1, h, values } => {
                let n = values.len();
                if n < 3 {
                    let v = values.first().copied().unwrap_or(f64::NAN);
                    return (v, 0.0, 0.0);
                }
                let x = (u - u1) / h;
                let i = (x.round() as isize).clamp(1, n as isize - 2) as usize;
                let t = x - i as f64;
                let c1 = 0.5 * (values[i + 1] - values[i - 1]);
                let c2 = 0.5 * (values[i + 1] - 2.0 * values[i] + values[i - 1]);
                (values[i] + c1 * t + c2 * t * t, (c1 + 2.0 * c2 * t) / h, 2.0 * c2 / (h * h))
            }
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.eval(u).0
    }
}

/// Base curve, middle-offset function `v0`, width function `w` and the
/// bulk diffusion coefficient `D0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub base: PlaneCurve,
    pub v0: Profile1D,
    pub w: Profile1D,
    pub d0: f64,
}

/// Everything about the channel cross-section at one `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub u: f64,
    pub alpha: Complex64,
    pub frame: FrenetFrame,
    /// `dk/du`
    pub dk: f64,
    pub v0: f64,
    pub dv0: f64,
    pub ddv0: f64,
    pub w: f64,
    pub dw: f64,
    pub ddw: f64,
}

impl Section {
    /// Normal offset `s(u, v)`.
    pub fn offset(&self, v: f64) -> f64 {
        self.v0 + 0.5 * v * self.w
    }

    /// `∂s/∂u`
    pub fn offset_du(&self, v: f64) -> f64 {
        self.dv0 + 0.5 * v * self.dw
    }

    pub fn offset_duu(&self, v: f64) -> f64 {
        self.ddv0 + 0.5 * v * self.ddw
    }

    /// `1 - s·k`
    pub fn stretch(&self, v: f64) -> f64 {
        1.0 - self.offset(v) * self.frame.k
    }

    pub fn point(&self, v: f64) -> Complex64 {
        self.alpha + self.frame.n * self.offset(v)
    }

    /// `∂φ/∂u = (1 - s k) T + (∂s/∂u) N`.
    pub fn point_du(&self, v: f64) -> Complex64 {
        self.frame.t * self.stretch(v) + self.frame.n * self.offset_du(v)
    }

    pub fn point_duu(&self, v: f64) -> Complex64 {
        let (s, ds, dds) = (self.offset(v), self.offset_du(v), self.offset_duu(v));
        let k = self.frame.k;
        self.frame.t * (-2.0 * ds * k - s * self.dk) + self.frame.n * (self.stretch(v) * k + dds)
    }

    pub fn jacobian(&self, v: f64) -> f64 {
        self.stretch(v) * 0.5 * self.w
    }

    pub fn sigma(&self) -> f64 {
        self.w * (1.0 - self.frame.k * self.v0)
    }

    pub fn dsigma(&self) -> f64 {
        let k = self.frame.k;
        self.dw * (1.0 - k * self.v0) - self.w * (self.dk * self.v0 + k * self.dv0)
    }
}

impl ChannelSpec {
    /// Builds and validates a channel (positive `D0` and width, no focal
    /// point inside the channel on a 64×17 sample grid).
    pub fn new(base: PlaneCurve, v0: Profile1D, w: Profile1D, d0: f64) -> Result<Self> {
        let spec = Self::new_unchecked(base, v0, w, d0);
        spec.validate()?;
        Ok(spec)
    }

    pub fn new_unchecked(base: PlaneCurve, v0: Profile1D, w: Profile1D, d0: f64) -> Self {
        Self { base, v0, w, d0 }
    }

    pub fn domain(&self) -> (f64, f64) {
        self.base.domain()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) || !self.d0.is_finite() {
            return Err(Error::InvalidChannel(format!("D0 must be positive, got {}", self.d0)));
        }
        let (u1, u2) = self.domain();
        for i in 0..64 {
            let u = u1 + (u2 - u1) * i as f64 / 63.0;
            let sec = self.section(u)?;
            if !(sec.w > 0.0) {
                return Err(Error::InvalidChannel(format!("width must be positive (w = {} at u = {u})", sec.w)));
            }
            for j in 0..17 {
                let v = -1.0 + 2.0 * j as f64 / 16.0;
                let margin = sec.stretch(v);
                if !(margin >= VALIDITY_MARGIN) {
                    return Err(Error::Validity { u, v, margin });
                }
            }
        }
        Ok(())
    }

    pub fn section(&self, u: f64) -> Result<Section> {
        let jet = self.base.jet(u)?;
        let frame = frenet(&self.base, u)?;
        let dk = self.base.curvature_derivative(u)?;
        let (v0, dv0, ddv0) = self.v0.eval(u);
        let (w, dw, ddw) = self.w.eval(u);
        Ok(Section { u, alpha: jet.pos, frame, dk, v0, dv0, ddv0, w, dw, ddw })
    }
}

/// Base point, middle curve and walls with their `u`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallData {
    pub base: Complex64,
    pub frame: FrenetFrame,
    /// Normal offsets of the lower and upper wall.
    pub s1: f64,
    pub s2: f64,
    pub alpha0: Complex64,
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub d_alpha0: Complex64,
    pub d_alpha1: Complex64,
    pub d_alpha2: Complex64,
    pub dd_alpha1: Complex64,
    pub dd_alpha2: Complex64,
    pub sigma: f64,
    pub dsigma: f64,
}

impl WallData {
    pub fn from_section(sec: &Section) -> Self {
        WallData {
            base: sec.alpha,
            frame: sec.frame,
            s1: sec.offset(-1.0),
            s2: sec.offset(1.0),
            alpha0: sec.point(0.0),
            alpha1: sec.point(-1.0),
            alpha2: sec.point(1.0),
            d_alpha0: sec.point_du(0.0),
            d_alpha1: sec.point_du(-1.0),
            d_alpha2: sec.point_du(1.0),
            dd_alpha1: sec.point_duu(-1.0),
            dd_alpha2: sec.point_duu(1.0),
            sigma: sec.sigma(),
            dsigma: sec.dsigma(),
        }
    }

    pub fn width(&self) -> f64 {
        self.s2 - self.s1
    }
}

pub fn walls(spec: &ChannelSpec, u: f64) -> Result<WallData> {
    Ok(WallData::from_section(&spec.section(u)?))
}

pub fn sigma(spec: &ChannelSpec, u: f64) -> Result<f64> {
    Ok(spec.section(u)?.sigma())
}

/// Channel area between the cross-sections at `u1` and `u`
/// (composite Simpson, 512 panels).
pub fn area(spec: &ChannelSpec, u: f64) -> Result<f64> {
    let (u1, _) = spec.domain();
    if u < u1 {
        return Err(Error::Domain { value: u, lo: u1, hi: spec.domain().1 });
    }
    if u == u1 {
        return Ok(0.0);
    }
    const PANELS: usize = 512;
    let h = (u - u1) / PANELS as f64;
    let mut acc = 0.0;
    for i in 0..=PANELS {
        let weight = if i == 0 || i == PANELS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += weight * sigma(spec, u1 + i as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

/// `det φ' = (1 - s k)(w/2)`; errors when the point is within the validity
/// margin of a focal point.
pub fn jacobian(spec: &ChannelSpec, u: f64, v: f64) -> Result<f64> {
    let sec = spec.section(u)?;
    let margin = sec.stretch(v);
    if !(margin >= VALIDITY_MARGIN) {
        return Err(Error::Validity { u, v, margin });
    }
    Ok(sec.jacobian(v))
}

/// Composite Simpson weights on `n` (odd) uniform points spanning `[-1, 1]`.
pub fn simpson_weights(n: usize) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson rule needs an odd number of points >= 3");
    let h = 2.0 / (n - 1) as f64;
    (0..n)
        .map(|j| {
            let w = if j == 0 || j == n - 1 {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

fn check_field(field: &SteadyField, spec: &ChannelSpec) -> Result<()> {
    let (u1, u2) = spec.domain();
    let (g1, g2) = field.grid.u_range();
    if (g1 - u1).abs() > 1e-12 * (u2 - u1) || (g2 - u2).abs() > 1e-12 * (u2 - u1) {
        return Err(Error::Shape(format!("field spans [{g1}, {g2}], channel spans [{u1}, {u2}]")));
    }
    if field.values.len() != field.grid.nu * field.grid.nv {
        return Err(Error::Shape(format!(
            "field has {} values for a {}x{} grid",
            field.values.len(),
            field.grid.nu,
            field.grid.nv
        )));
    }
    if field.grid.nv.is_multiple_of(2) || field.grid.nv < 3 {
        return Err(Error::Shape(format!("nv = {} must be odd and >= 3", field.grid.nv)));
    }
    Ok(())
}

/// `p(u) = ∫ P(φ(u,v)) det φ'(u,v) dv` at every grid column.
pub fn effective_density(field: &SteadyField, spec: &ChannelSpec) -> Result<Vec<f64>> {
    check_field(field, spec)?;
    let grid = &field.grid;
    let weights = simpson_weights(grid.nv);
    (0..grid.nu)
        .map(|i| {
            let sec = spec.section(grid.u(i))?;
            Ok((0..grid.nv).map(|j| weights[j] * field.at(i, j) * sec.jacobian(grid.v(j))).sum())
        })
        .collect()
}

/// `j(u) = -D0 ∫ ⟨i∇P, ∂φ/∂v⟩ dv` at every grid column.
///
/// In channel coordinates the integrand is the conormal `u`-flux
/// `(w/2)/(1-sk)·∂P/∂u - (∂s/∂u)/(1-sk)·∂P/∂v`.
pub fn effective_flux(field: &SteadyField, spec: &ChannelSpec) -> Result<Vec<f64>> {
    check_field(field, spec)?;
    let grid = &field.grid;
    let weights = simpson_weights(grid.nv);
    (0..grid.nu)
        .map(|i| {
            let sec = spec.section(grid.u(i))?;
            let mut acc = 0.0;
            for j in 0..grid.nv {
                let v = grid.v(j);
                let stretch = sec.stretch(v);
                let flux = (0.5 * sec.w * field.du(i, j) - sec.offset_du(v) * field.dv(i, j)) / stretch;
                acc += weights[j] * flux;
            }
            Ok(-spec.d0 * acc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::I;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn strip(w: Profile1D, v0: Profile1D, u1: f64, u2: f64) -> ChannelSpec {
        let base = PlaneCurve::line(c(1.0, 0.0), c(0.0, 0.0), u1, u2).unwrap();
        ChannelSpec::new(base, v0, w, 1.0).unwrap()
    }

    fn annulus(k: f64, w: f64, v0: f64) -> ChannelSpec {
        let base = PlaneCurve::circle(k, I / k, 0.0, -1.0, 1.0).unwrap();
        ChannelSpec::new_unchecked(base, Profile1D::constant(v0), Profile1D::constant(w), 1.0)
    }

    #[test]
    fn polynomial_profile_derivatives() {
        let p = Profile1D::Poly(vec![1.0, -2.0, 3.0, 0.5]);
        let (f, d1, d2) = p.eval(1.5);
        assert!((f - (1.0 - 3.0 + 6.75 + 0.5 * 3.375)).abs() < 1e-12);
        assert!((d1 - (-2.0 + 9.0 + 1.5 * 2.25)).abs() < 1e-12);
        assert!((d2 - (6.0 + 3.0 * 1.5)).abs() < 1e-12);
    }

    #[test]
    fn symmetric_strip_walls() {
        let spec = strip(Profile1D::constant(2.0), Profile1D::constant(0.0), 0.0, 4.0);
        for &u in &[0.0, 1.5, 4.0] {
            let wd = walls(&spec, u).unwrap();
            assert!((wd.alpha1 - c(u, -1.0)).norm() < 1e-15);
            assert!((wd.alpha2 - c(u, 1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn sloped_middle_curve_wall_velocity() {
        let m = 0.3;
        let spec = strip(Profile1D::constant(1.0), Profile1D::linear(0.0, m), 0.0, 2.0);
        let wd = walls(&spec, 1.0).unwrap();
        assert!((wd.d_alpha1 - c(1.0, m)).norm() < 1e-15);
    }

    #[test]
    fn circle_walls_lie_on_offset_circles() {
        let spec = annulus(1.0, 1.0, 0.0);
        let wd = walls(&spec, 0.0).unwrap();
        // N points toward the center: lower wall is outside, upper inside
        assert!(((wd.alpha1 - I).norm() - 1.5).abs() < 1e-14);
        assert!(((wd.alpha2 - I).norm() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn wall_derivatives_match_finite_differences() {
        let base = PlaneCurve::circle(0.4, c(0.0, 2.5), 0.2, -2.0, 2.0).unwrap();
        let spec =
            ChannelSpec::new(base, Profile1D::Poly(vec![0.1, 0.05, -0.02]), Profile1D::Poly(vec![0.6, 0.1, 0.03]), 1.0)
                .unwrap();
        let h = 1e-5;
        for &u in &[-1.5, 0.0, 0.7] {
            let (m, z, p) = (walls(&spec, u - h).unwrap(), walls(&spec, u).unwrap(), walls(&spec, u + h).unwrap());
            assert!(((p.alpha1 - m.alpha1) / (2.0 * h) - z.d_alpha1).norm() < 1e-6);
            assert!(((p.alpha2 - m.alpha2) / (2.0 * h) - z.d_alpha2).norm() < 1e-6);
            assert!(((p.d_alpha1 - m.d_alpha1) / (2.0 * h) - z.dd_alpha1).norm() < 1e-6);
            assert!(((p.d_alpha2 - m.d_alpha2) / (2.0 * h) - z.dd_alpha2).norm() < 1e-6);
            assert!(((p.sigma - m.sigma) / (2.0 * h) - z.dsigma).abs() < 1e-6);
        }
    }

    #[test]
    fn sigma_examples() {
        let spec = annulus(1.0, 0.5, 0.0);
        assert_eq!(sigma(&spec, 0.0).unwrap(), 0.5);
        let spec = strip(Profile1D::constant(0.7), Profile1D::constant(0.2), 0.0, 1.0);
        assert_eq!(sigma(&spec, 0.5).unwrap(), 0.7);
        let spec = annulus(1.0, 0.5, 0.2);
        assert!((sigma(&spec, 0.3).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn area_examples() {
        let spec = strip(Profile1D::constant(2.0), Profile1D::constant(0.0), 0.0, 3.0);
        assert!((area(&spec, 3.0).unwrap() - 6.0).abs() < 1e-12);
        let spec = strip(Profile1D::linear(1.0, 1.0), Profile1D::constant(0.0), 0.0, 1.0);
        assert!((area(&spec, 1.0).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn annulus_area_matches_polygon() {
        let spec = annulus(0.8, 0.6, 0.1);
        let (u1, u2) = spec.domain();
        let n = 4000;
        let mut poly = Vec::new();
        for i in 0..=n {
            poly.push(walls(&spec, u1 + (u2 - u1) * i as f64 / n as f64).unwrap().alpha1);
        }
        for i in (0..=n).rev() {
            poly.push(walls(&spec, u1 + (u2 - u1) * i as f64 / n as f64).unwrap().alpha2);
        }
        let shoelace: f64 = (0..poly.len())
            .map(|a| {
                let (p, q) = (poly[a], poly[(a + 1) % poly.len()]);
                p.re * q.im - q.re * p.im
            })
            .sum::<f64>()
            * 0.5;
        let a = area(&spec, u2).unwrap();
        assert!((shoelace.abs() - a).abs() / a < 1e-6, "{shoelace} vs {a}");
    }

    #[test]
    fn area_derivative_is_sigma() {
        let base = PlaneCurve::circle(0.5, c(0.0, 2.0), 0.0, 0.0, 2.0).unwrap();
        let spec =
            ChannelSpec::new(base, Profile1D::linear(0.1, 0.05), Profile1D::Poly(vec![0.5, 0.2, -0.05]), 1.0).unwrap();
        let h = 1e-4;
        for &u in &[0.5, 1.0, 1.7] {
            let da = (area(&spec, u + h).unwrap() - area(&spec, u - h).unwrap()) / (2.0 * h);
            let s = sigma(&spec, u).unwrap();
            assert!((da - s).abs() / s < 1e-6);
        }
    }

    #[test]
    fn jacobian_examples() {
        let spec = strip(Profile1D::constant(2.0), Profile1D::constant(0.0), 0.0, 1.0);
        for &v in &[-1.0, 0.0, 1.0] {
            assert_eq!(jacobian(&spec, 0.5, v).unwrap(), 1.0);
        }
        let spec = annulus(1.0, 1.0, 0.0);
        assert!((jacobian(&spec, 0.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let spec = annulus(1.0, 2.0, 0.0);
        assert!(matches!(jacobian(&spec, 0.0, 1.0), Err(Error::Validity { .. })));
        assert!(matches!(spec.validate(), Err(Error::Validity { .. })));
    }

    #[test]
    fn jacobian_matches_numerical_determinant() {
        let base = PlaneCurve::circle(-0.6, c(0.0, -1.0), 0.4, -1.0, 1.0).unwrap();
        let spec = ChannelSpec::new(base, Profile1D::linear(0.05, 0.1), Profile1D::linear(0.4, -0.05), 1.0).unwrap();
        let h = 1e-6;
        let phi = |u: f64, v: f64| spec.section(u).unwrap().point(v);
        for &(u, v) in &[(0.0, 0.0), (0.5, -0.8), (-0.7, 0.9)] {
            let du = (phi(u + h, v) - phi(u - h, v)) / (2.0 * h);
            let dv = (phi(u, v + h) - phi(u, v - h)) / (2.0 * h);
            let det = du.re * dv.im - du.im * dv.re;
            assert!((det - jacobian(&spec, u, v).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_width_is_rejected() {
        let base = PlaneCurve::line(c(1.0, 0.0), c(0.0, 0.0), 0.0, 2.0).unwrap();
        let err =
            ChannelSpec::new(base, Profile1D::constant(0.0), Profile1D::Poly(vec![1.0, 0.0, -1.0]), 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidChannel(ref m) if m.contains("width must be positive")));
    }
}
