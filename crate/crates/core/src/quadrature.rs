//! Adaptive Simpson integration for the smooth phase integrands of the
//! channel model.

use crate::error::{Error, Result};

/// Relative tolerance used by every phase integral in the crate.
pub const REL_TOL: f64 = 1e-9;
/// Absolute floor below which an interval is accepted regardless of `REL_TOL`.
pub const ABS_FLOOR: f64 = 1e-30;

const MAX_DEPTH: u32 = 48;
/// Widest initial panel; phase integrands vary on this scale at most.
const PANEL_WIDTH: f64 = std::f64::consts::PI / 64.0;
/// Levels each panel is bisected before the error estimate is trusted.
const MIN_DEPTH: u32 = 1;

/// Integrates `f` over `[a, b]` with the crate-wide tolerances.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    adaptive_simpson(&f, a, b, REL_TOL, ABS_FLOOR)
}

/// Adaptive Simpson quadrature with Richardson correction.
///
/// The global tolerance is `max(rel_tol * |estimate|, abs_floor)`, where the
/// estimate is the mean of `|f|` over the initial panel samples.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    // Uniform panels first: a single top-level Simpson comparison can agree
    // by accident on a peaked integrand.
    let panels = (((hi - lo) / PANEL_WIDTH).ceil() as usize).clamp(2, 1 << 20);
    let h = (hi - lo) / panels as f64;
    let x = |i: usize| if i == panels { hi } else { lo + i as f64 * h };
    let fx: Vec<f64> = (0..=2 * panels)
        .map(|j| {
            f(if j == 2 * panels {
                hi
            } else {
                lo + 0.5 * j as f64 * h
            })
        })
        .collect();
    let rough: f64 = fx.iter().map(|v| v.abs()).sum::<f64>() * (hi - lo) / (2 * panels + 1) as f64;
    let tol = (rel_tol * rough).max(abs_floor) / panels as f64;

    let mut value = 0.0;
    for i in 0..panels {
        let (fa, fm, fb) = (fx[2 * i], fx[2 * i + 1], fx[2 * i + 2]);
        let whole = simpson(x(i), x(i + 1), fa, fm, fb);
        value += recurse(f, x(i), x(i + 1), fa, fm, fb, whole, tol, MAX_DEPTH)?;
    }
    if !value.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite integral on [{lo}, {hi}]"
        )));
    }
    Ok(sign * value)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Quadrature(format!(
            "integrand not finite near [{a}, {b}]"
        )));
    }
    if delta.abs() <= 15.0 * tol && depth <= MAX_DEPTH - MIN_DEPTH {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a}, {b}] (error estimate {})",
            delta.abs() / 15.0
        )));
    }
    Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_transcendental() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
        let v = integrate(f64::exp, 0.0, 1.0).unwrap();
        assert!(((v - (std::f64::consts::E - 1.0)) / v).abs() < 1e-11);
        let v = integrate(|t: f64| 1.0 / (1.1 + t.cos()), 0.0, 3.0).unwrap();
        // reversed limits flip the sign
        let w = integrate(|t: f64| 1.0 / (1.1 + t.cos()), 3.0, 0.0).unwrap();
        assert_eq!(v, -w);
    }

    #[test]
    fn peaked_integrand_over_half_period() {
        // e^{-x} I0(x) from mpmath; Simpson's own error estimate is fooled by
        // these when started from a single panel
        for (x, want) in [
            (6.86, 0.155_366_172_917_598_33),
            (16.435_195_245_975_667, 0.099_182_092_555_504_96),
        ] {
            let v = integrate(|t: f64| (x * t.cos() - x).exp(), 0.0, std::f64::consts::PI).unwrap()
                / std::f64::consts::PI;
            assert!(((v - want) / want).abs() < 1e-9, "{x}: {v}");
        }
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(|x| x, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_is_reported() {
        assert!(integrate(|x| 1.0 / x, 0.0, 1.0).is_err());
    }
}
