//! Complex-analytic functions whose imaginary part is constant on two given
//! circles, so that their real part carries no flux across either circle.
//!
//! For two circles with distinct centers the function is
//! `P(z) = I·log((z - q2)/(z - q1))` where `q1, q2` are the limit points of
//! the coaxal family containing both circles (real `q`, `I = i`) or their two
//! intersection points (imaginary `q`, `I = 1`). Concentric circles use
//! `P(z) = i·log(z - g)`.

use crate::branch::circular_distance;
use crate::{Complex64, Error, Result, I};
use std::f64::consts::PI;

/// Centers closer than this fraction of the larger radius are concentric.
pub const CONCENTRIC_TOLERANCE: f64 = 1e-9;
/// Maximum deviation of `Im P` on an input circle accepted by [`build_map`].
pub const LEVEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn point(&self, angle: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirclePair {
    pub c1: Circle,
    pub c2: Circle,
}

impl CirclePair {
    pub fn new(f1: Complex64, r1: f64, f2: Complex64, r2: f64) -> Self {
        Self { c1: Circle::new(f1, r1), c2: Circle::new(f2, r2) }
    }

    pub fn distance(&self) -> f64 {
        (self.c2.center - self.c1.center).norm()
    }

    fn scale(&self) -> f64 {
        self.c1.radius.max(self.c2.radius)
    }

    pub fn intersecting(&self) -> bool {
        let d = self.distance();
        (self.c1.radius - self.c2.radius).abs() < d && d < self.c1.radius + self.c2.radius
    }
}

/// Result of [`steiner_q`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteinerQ {
    Value(Complex64),
    /// Centers coincide; the caller switches to the concentric form.
    Concentric,
}

/// `q = sqrt((d² - (r1+r2)²)(d² - (r2-r1)²)) / (2d)`: real for disjoint or
/// nested circles, imaginary for intersecting ones.
pub fn steiner_q(r1: f64, r2: f64, d: f64) -> Result<SteinerQ> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::DegeneratePair(format!("center distance must be >= 0, got {d}")));
    }
    if d == 0.0 {
        return Ok(SteinerQ::Concentric);
    }
    let (sum, diff) = (r1 + r2, (r2 - r1).abs());
    // factored form keeps relative accuracy when the radii dwarf d
    let radicand = (d - sum) * (d + sum) * (d - diff) * (d + diff);
    let root =
        if radicand >= 0.0 { Complex64::new(radicand.sqrt(), 0.0) } else { Complex64::new(0.0, (-radicand).sqrt()) };
    Ok(SteinerQ::Value(root / (2.0 * d)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteinerMode {
    /// `P(z) = coeff·log((z - q2)/(z - q1))` with `coeff ∈ {i, 1}`.
    TwoPole { q1: Complex64, q2: Complex64, coeff: Complex64 },
    /// `P(z) = i·log(z - g)`.
    Concentric { g: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteinerDiagnostics {
    pub q: Complex64,
    pub c1: f64,
    pub c2: f64,
    /// Sign selector applied to `c2`.
    pub j: f64,
    /// The case table's sign for `c2` put the centers at the wrong distance
    /// and was flipped.
    pub j_flipped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteinerMap {
    pub mode: SteinerMode,
    pub diagnostics: SteinerDiagnostics,
    pub pair: CirclePair,
}

impl SteinerMap {
    /// Period of `Im P` along an input circle: `π` when the circles
    /// intersect (the argument jumps by `π` across the poles), otherwise
    /// none.
    pub fn level_period(&self) -> Option<f64> {
        match self.mode {
            SteinerMode::TwoPole { coeff, .. } if coeff.im == 0.0 => Some(PI),
            _ => None,
        }
    }

    pub fn is_concentric(&self) -> bool {
        matches!(self.mode, SteinerMode::Concentric { .. })
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        eval_p(self, z)
    }
}

pub fn build_map(pair: CirclePair) -> Result<SteinerMap> {
    let (f1, f2) = (pair.c1.center, pair.c2.center);
    let (r1, r2) = (pair.c1.radius, pair.c2.radius);
    if !(r1 > 0.0 && r2 > 0.0) || !(r1.is_finite() && r2.is_finite()) {
        return Err(Error::DegeneratePair(format!("radii must be positive (r1 = {r1}, r2 = {r2})")));
    }
    let d = pair.distance();
    let scale = pair.scale();
    if d <= CONCENTRIC_TOLERANCE * scale {
        if (r1 - r2).abs() <= CONCENTRIC_TOLERANCE * scale {
            return Err(Error::DegeneratePair("identical circles".into()));
        }
        let g = (f1 + f2) * 0.5;
        let diagnostics =
            SteinerDiagnostics { q: Complex64::new(0.0, 0.0), c1: 0.0, c2: 0.0, j: 1.0, j_flipped: false };
        return Ok(SteinerMap { mode: SteinerMode::Concentric { g }, diagnostics, pair });
    }
    let q = match steiner_q(r1, r2, d)? {
        SteinerQ::Value(q) => q,
        SteinerQ::Concentric => unreachable!("d > 0 here"),
    };
    if q.norm() <= 1e-12 * scale {
        return Err(Error::DegeneratePair(format!("tangent circles (d = {d}, r1 = {r1}, r2 = {r2})")));
    }
    let real_q = q.im == 0.0;
    let coeff = if real_q { I } else { Complex64::new(1.0, 0.0) };

    // |c1| and |c2| with c_j² = q² + r_j², written without cancellation.
    let dr2 = (r1 - r2) * (r1 + r2);
    let c1 = ((d * d + dr2) / (2.0 * d)).abs();
    let c2_abs = ((d * d - dr2) / (2.0 * d)).abs();
    let j_table = if real_q {
        if d < r1 + r2 {
            1.0
        } else {
            -1.0
        }
    } else if d < c1 {
        1.0
    } else {
        -1.0
    };
    let consistent = |j: f64| ((j * c2_abs - c1).abs() - d).abs() <= 1e-9 * scale.max(d);
    let (j, j_flipped) = if consistent(j_table) { (j_table, false) } else { (-j_table, true) };
    let c2 = j * c2_abs;
    if !consistent(j) {
        return Err(Error::DegeneratePair(format!("no sign choice places the centers at distance {d}")));
    }

    let (cf1, cf2) = (Complex64::new(c1, 0.0), Complex64::new(c2, 0.0));
    // affine map x ↦ f1 + (f2 - f1)(x - c1)/(c2 - c1) sends ±q to the poles
    let scale_map = (f2 - f1) / (cf2 - cf1);
    let q1 = f1 + scale_map * (q - cf1);
    let q2 = f1 + scale_map * (-q - cf1);
    let map = SteinerMap {
        mode: SteinerMode::TwoPole { q1, q2, coeff },
        diagnostics: SteinerDiagnostics { q, c1, c2, j, j_flipped },
        pair,
    };
    for circle in [pair.c1, pair.c2] {
        let dev = level_deviation(&map, &circle, 64)?;
        if !(dev <= LEVEL_TOLERANCE) {
            return Err(Error::DegeneratePair(format!("Im P deviates by {dev:e} on an input circle")));
        }
    }
    Ok(map)
}

/// Evaluates `P`, taking the principal logarithm of the pole ratio.
pub fn eval_p(map: &SteinerMap, z: Complex64) -> Result<Complex64> {
    match map.mode {
        SteinerMode::TwoPole { q1, q2, coeff } => {
            if z == q1 || z == q2 {
                return Err(Error::Pole(z));
            }
            let ratio = (z - q2) / (z - q1);
            if !ratio.is_finite() || ratio == Complex64::new(0.0, 0.0) {
                return Err(Error::Pole(z));
            }
            Ok(coeff * ratio.ln())
        }
        SteinerMode::Concentric { g } => {
            if z == g {
                return Err(Error::Pole(z));
            }
            Ok(I * (z - g).ln())
        }
    }
}

/// Largest deviation of `Im P` from its median over `n` equispaced points of
/// `circle` (measured modulo the level period for intersecting circles).
///
/// Sample points closer to a pole than `1e-5·(|center| + radius)` are
/// skipped: there the rounding of the point itself dominates the phase.
pub fn level_deviation(map: &SteinerMap, circle: &Circle, n: usize) -> Result<f64> {
    if n < 8 {
        return Err(Error::DegenerateInput(format!("need at least 8 sample points, got {n}")));
    }
    let poles = match map.mode {
        SteinerMode::TwoPole { q1, q2, .. } => vec![q1, q2],
        SteinerMode::Concentric { g } => vec![g],
    };
    let guard = 1e-5 * (circle.center.norm() + circle.radius);
    let values = (0..n)
        .map(|j| circle.point(2.0 * PI * j as f64 / n as f64))
        .filter(|&z| poles.iter().all(|&q| (z - q).norm() >= guard))
        .map(|z| Ok(eval_p(map, z)?.im))
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(Error::DegenerateInput("every sample point lies at a pole".into()));
    }
    let reference = values[0];
    let mut offsets: Vec<f64> = match map.level_period() {
        Some(period) => values
            .iter()
            .map(|&v| {
                let d = (v - reference).rem_euclid(period);
                if d > 0.5 * period {
                    d - period
                } else {
                    d
                }
            })
            .collect(),
        None => values.iter().map(|&v| v - reference).collect(),
    };
    offsets.sort_by(|a, b| a.total_cmp(b));
    let median = offsets[offsets.len() / 2];
    Ok(offsets.iter().map(|o| (o - median).abs()).fold(0.0, f64::max))
}

/// Whether two values of `Im P` lie on the same level set.
pub fn same_level(map: &SteinerMap, a: f64, b: f64, tol: f64) -> bool {
    match map.level_period() {
        Some(p) => circular_distance(a, b, p) <= tol,
        None => (a - b).abs() <= tol,
    }
}
