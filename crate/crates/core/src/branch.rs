//! Complex logarithm helpers with controlled branch behaviour.

use num_complex::Complex64;
use std::f64::consts::PI;

/// `log(1 + z)` accurate for small `|z|` (principal branch).
pub fn log1p(z: Complex64) -> Complex64 {
    let w = Complex64::new(1.0 + z.re, z.im);
    // |1+z|^2 - 1 = 2 Re z + |z|^2
    let re = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
    Complex64::new(re, w.arg())
}

/// `log((a - pole) / (b - pole))` on the principal branch.
///
/// Along the straight segment from `b` to `a` the ratio's argument varies
/// continuously from 0 and never reaches ±π unless the segment passes through
/// `pole`, so the principal value is the continuous one.
pub fn log_ratio(a: Complex64, b: Complex64, pole: Complex64) -> Complex64 {
    let db = b - pole;
    let delta = (a - b) / db;
    if delta.norm() < 0.5 {
        log1p(delta)
    } else {
        ((a - pole) / db).ln()
    }
}

/// Unwraps a phase sequence in place so that consecutive differences lie in
/// `(-period/2, period/2]`. Returns the indices where a correction was applied.
pub fn unwrap(values: &mut [f64], period: f64) -> Vec<usize> {
    let mut events = Vec::new();
    let mut offset = 0.0;
    for i in 1..values.len() {
        let raw = values[i] + offset;
        let jump = raw - values[i - 1];
        let turns = (jump / period).round();
        if turns != 0.0 {
            offset -= turns * period;
            events.push(i);
        }
        values[i] += offset;
    }
    events
}

/// Distance between two angles measured modulo `period`.
pub fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Argument of `z` in `(-π, π]`.
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log1p_small_argument_keeps_relative_precision() {
        let z = Complex64::new(1e-12, -3e-12);
        let l = log1p(z);
        assert!((l.re - 1e-12).abs() < 1e-24 * 10.0);
        assert!((l.im + 3e-12).abs() < 1e-24 * 10.0);
    }

    #[test]
    fn log_ratio_matches_direct_log() {
        let a = Complex64::new(0.3, 2.0);
        let b = Complex64::new(-1.0, 0.5);
        let p = Complex64::new(2.0, -1.0);
        let direct = ((a - p) / (b - p)).ln();
        assert!((log_ratio(a, b, p) - direct).norm() < 1e-14);
    }

    #[test]
    fn unwrap_removes_jumps() {
        let mut v = vec![3.0, 3.1, -3.1, -3.0];
        let ev = unwrap(&mut v, 2.0 * PI);
        assert_eq!(ev, vec![2]);
        assert!((v[2] - (2.0 * PI - 3.1)).abs() < 1e-12);
        assert!((v[3] - (2.0 * PI - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn circular_distance_wraps() {
        assert!((circular_distance(0.1, PI - 0.1, PI) - 0.2).abs() < 1e-12);
    }
}
