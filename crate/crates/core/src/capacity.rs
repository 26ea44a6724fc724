//! Thermal-noise-limited capacity as a function of detector area, its
//! closed-form maximiser, and the log-scale peak finder shared by every
//! numeric optimum in the crate.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{check_area, BeamParams, NoiseParams, PhotodiodeParams};
use crate::special::lambert_w0;

/// Number of log-spaced points used to bracket a peak.
pub const PEAK_GRID_POINTS: usize = 200;
/// Relative width at which golden-section refinement stops.
pub const PEAK_REL_WIDTH: f64 = 1e-6;
/// Central-difference step for curvature checks, relative to the evaluation point.
pub const CURVATURE_REL_STEP: f64 = 1e-4;

/// Bandwidth-area constant and normalized signal strength of a single detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalChannel {
    /// `alpha` in Hz m^2.
    pub alpha: f64,
    /// `mu0^2 / N0`.
    pub beta0: f64,
}

impl ThermalChannel {
    pub fn new(alpha: f64, beta0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::validation(
                "alpha",
                format!("must be > 0, got {alpha}"),
            ));
        }
        if !(beta0 > 0.0 && beta0.is_finite()) {
            return Err(Error::validation(
                "beta0",
                format!("must be > 0, got {beta0}"),
            ));
        }
        Ok(ThermalChannel { alpha, beta0 })
    }

    pub fn from_params(
        pd: &PhotodiodeParams,
        beam: &BeamParams,
        noise: &NoiseParams,
    ) -> Result<Self> {
        let mu0 = beam.peak_intensity();
        ThermalChannel::new(pd.alpha(), mu0 * mu0 / noise.n0)
    }

    /// Normalized SNR `beta0 / alpha`.
    pub fn normalized_snr(&self) -> f64 {
        self.beta0 / self.alpha
    }

    /// SNR `(beta0/alpha) A^3` at area `A`.
    pub fn snr(&self, area: f64) -> f64 {
        self.normalized_snr() * area * area * area
    }

    /// Bandwidth, SNR and capacity at one area.
    pub fn point(&self, area: f64) -> Result<CapacityPoint> {
        let capacity_bps = capacity_thermal(self, area)?;
        Ok(CapacityPoint {
            area,
            bandwidth: self.alpha / area,
            snr: self.snr(area),
            capacity_bps,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityPoint {
    pub area: f64,
    pub bandwidth: f64,
    pub snr: f64,
    pub capacity_bps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimumMethod {
    ClosedForm,
    GridGolden,
}

/// Location and height of a capacity maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub area_star: f64,
    pub capacity_star: f64,
    pub method: OptimumMethod,
    /// Curvature at `area_star`. Closed-form thermal reports carry
    /// `C''(A*) ln2 / beta0`; numeric reports carry the raw second difference.
    pub second_derivative_check: f64,
}

/// `C(A) = (alpha/A) log2(1 + (beta0/alpha) A^3)` in bits/s.
pub fn capacity_thermal(ch: &ThermalChannel, area: f64) -> Result<f64> {
    check_area(area)?;
    Ok(shannon(ch.alpha / area, ch.snr(area)))
}

pub(crate) fn shannon(bandwidth: f64, snr: f64) -> f64 {
    bandwidth * snr.ln_1p() / LN_2
}

/// Optimal SNR `s` for a capacity of the form `(1/A) log(1 + k A^p)`:
/// the positive root of `(1+s) ln(1+s) = p s`, i.e. `exp(W(-p e^-p) + p) - 1`.
pub fn lambert_optimum_snr(power: f64) -> f64 {
    let w = lambert_w0(-power * (-power).exp())
        .expect("-p e^-p lies on the principal branch for p > 1");
    (w + power).exp() - 1.0
}

/// Universal factor in the single-detector optimum, `(exp(W(-3e^-3) + 3) - 1)^(1/3)`.
pub fn gamma0() -> f64 {
    lambert_optimum_snr(3.0).cbrt()
}

/// Normalized curvature `C'' ln2 / beta0` as a function of the SNR `s` at the
/// evaluation point.
pub fn thermal_normalized_curvature(snr: f64) -> f64 {
    -9.0 * snr / ((1.0 + snr) * (1.0 + snr)) + 2.0 * snr.ln_1p() / snr
}

/// Closed-form capacity-maximizing area `gamma0 (alpha/beta0)^(1/3)`.
pub fn optimal_area_thermal(ch: &ThermalChannel) -> OptimumReport {
    optimal_area_with_factor(ch, gamma0())
}

pub(crate) fn optimal_area_with_factor(ch: &ThermalChannel, factor: f64) -> OptimumReport {
    let area_star = factor * (ch.alpha / ch.beta0).cbrt();
    let f = |a: f64| shannon(ch.alpha / a, ch.snr(a));
    OptimumReport {
        area_star,
        capacity_star: f(area_star),
        method: OptimumMethod::ClosedForm,
        second_derivative_check: central_second_difference(f, area_star) * LN_2 / ch.beta0,
    }
}

/// Central second difference with step `CURVATURE_REL_STEP * x`.
pub fn central_second_difference<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = CURVATURE_REL_STEP * x;
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Log-spaced grid of `n >= 2` points from `lo` to `hi`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "log_space needs at least two points");
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Maximizes `f` over `[a_lo, a_hi]`, assuming it is unimodal in `log A`.
///
/// A `PEAK_GRID_POINTS` log grid brackets the peak; golden-section search on
/// `log A` then narrows the bracket to `PEAK_REL_WIDTH`. A maximum on either
/// end of the window, or a flat objective, is reported as `Error::Bracket`.
/// Ties on the grid resolve to the smaller area.
pub fn find_peak<F>(mut f: F, a_lo: f64, a_hi: f64) -> Result<OptimumReport>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a_lo > 0.0 && a_lo < a_hi && a_hi.is_finite()) {
        return Err(Error::domain(format!(
            "invalid search window [{a_lo}, {a_hi}]"
        )));
    }
    let grid = log_space(a_lo, a_hi, PEAK_GRID_POINTS);
    let mut values = Vec::with_capacity(grid.len());
    for &a in &grid {
        let v = f(a)?;
        if v.is_nan() {
            return Err(Error::domain(format!("objective is NaN at A = {a}")));
        }
        values.push(v);
    }
    let (best, &vmax) =
        values.iter().enumerate().fold(
            (0, &values[0]),
            |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc },
        );
    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if vmax == vmin {
        return Err(Error::Bracket(
            "objective is flat over the search window".into(),
        ));
    }
    if best == 0 || best == grid.len() - 1 {
        return Err(Error::Bracket(format!(
            "maximum at the window edge A = {:e}; widen [{a_lo:e}, {a_hi:e}]",
            grid[best]
        )));
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = grid[best - 1].ln();
    let mut hi = grid[best + 1].ln();
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1.exp())?;
    let mut f2 = f(x2.exp())?;
    let tol = PEAK_REL_WIDTH.ln_1p();
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1.exp())?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2.exp())?;
        }
    }
    let (mut area_star, mut capacity_star) = if f1 >= f2 {
        (x1.exp(), f1)
    } else {
        (x2.exp(), f2)
    };
    if capacity_star < vmax {
        area_star = grid[best];
        capacity_star = vmax;
    }

    let h = CURVATURE_REL_STEP * area_star;
    let second = (f(area_star + h)? - 2.0 * capacity_star + f(area_star - h)?) / (h * h);
    Ok(OptimumReport {
        area_star,
        capacity_star,
        method: OptimumMethod::GridGolden,
        second_derivative_check: second,
    })
}
