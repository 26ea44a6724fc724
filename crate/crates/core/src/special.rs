//! Scalar special functions: principal-branch Lambert W, the gamma function
//! and the error function.
//!
//! All three are self-contained so that every closed-form optimum in the
//! crate can be evaluated without external numeric dependencies.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

/// Slack allowed below the branch point `-1/e` before `lambert_w0` rejects its input.
pub const BRANCH_TOLERANCE: f64 = 1e-12;

const HALLEY_MAX_ITER: usize = 50;

/// Principal branch `W0(y)` of the Lambert W function, the solution `x >= -1`
/// of `x * exp(x) = y`.
///
/// Inputs up to `BRANCH_TOLERANCE` below `-1/e` are clamped onto the branch
/// point and return `-1`.
pub fn lambert_w0(y: f64) -> Result<f64> {
    if y.is_nan() {
        return Err(Error::domain("lambert_w0: NaN argument"));
    }
    let branch = -(-1.0f64).exp();
    if y < branch - BRANCH_TOLERANCE {
        return Err(Error::domain(format!(
            "lambert_w0: argument {y} is below the branch point -1/e"
        )));
    }
    if y <= branch {
        return Ok(-1.0);
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = initial_guess(y);
    for _ in 0..HALLEY_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - y;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        // Halley step for f(w) = w e^w - y
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = w - step;
        // stay on the principal branch
        let next = if next < -1.0 { (w - 1.0) * 0.5 } else { next };
        if (next - w).abs() <= 4.0 * f64::EPSILON * next.abs().max(1e-300) {
            w = next;
            break;
        }
        w = next;
    }

    let residual = (w * w.exp() - y).abs();
    if residual > 1e-12 * y.abs().max(1.0) {
        return Err(Error::domain(format!(
            "lambert_w0: Halley iteration did not converge for y = {y} (residual {residual:e})"
        )));
    }
    Ok(w)
}

fn initial_guess(y: f64) -> f64 {
    if y < -0.25 {
        // series about the branch point in p = sqrt(2(e y + 1))
        let p = (2.0 * (E * y + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if y <= E {
        (1.0 + y).ln()
    } else {
        let l1 = y.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real `z > 0` (Lanczos approximation, g = 7).
pub fn gamma(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::domain(format!("gamma: argument {z} must be > 0")));
    }
    Ok(gamma_pos(z))
}

fn gamma_pos(z: f64) -> f64 {
    if z < 0.5 {
        // reflection keeps the series in its accurate half-plane
        return PI / ((PI * z).sin() * gamma_pos(1.0 - z));
    }
    let z = z - 1.0;
    let mut x = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    ((2.0 * PI).sqrt().ln() + (z + 0.5) * t.ln() - t + x.ln()).exp()
}

/// Error function, accurate to about 1e-15 absolute.
///
/// Computed for `|x|` and negated, so `erf(-x) == -erf(x)` holds exactly.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let v = if a < 3.0 {
        erf_series(a)
    } else {
        1.0 - erfc(a)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Complementary error function `1 - erf(x)`, without cancellation for large `x`.
pub fn erfc(x: f64) -> f64 {
    if x >= 3.0 {
        if x.is_infinite() {
            0.0
        } else {
            erfc_continued_fraction(x)
        }
    } else {
        1.0 - erf(x)
    }
}

// erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (2n+1)!!, all terms positive
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

// erfc(x) for x >= 3 by the Laplace continued fraction, modified Lentz.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    // erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..200 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}
