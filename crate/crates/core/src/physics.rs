//! Photodiode bandwidth versus active area, and Gaussian-beam power capture
//! on the focal plane.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{erf, erfc};

/// Device constants that fix the bandwidth-versus-area relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotodiodeParams {
    /// Depletion-region thickness (m).
    pub d: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Relative permittivity of the depletion region.
    pub eps_r: f64,
    /// Series plus load resistance (ohm).
    pub resistance: f64,
    /// Mean carrier drift velocity (m/s); `None` selects the RC-dominated regime.
    pub nu_bar: Option<f64>,
}

impl Default for PhotodiodeParams {
    fn default() -> Self {
        PhotodiodeParams {
            d: 0.1e-6,
            eps0: 8.854e-12,
            eps_r: 12.95,
            resistance: 10.0,
            nu_bar: None,
        }
    }
}

impl PhotodiodeParams {
    pub fn validate(&self) -> Result<()> {
        positive("d", self.d)?;
        positive("eps0", self.eps0)?;
        positive("eps_r", self.eps_r)?;
        positive("R", self.resistance)?;
        if let Some(v) = self.nu_bar {
            positive("nu_bar", v)?;
        }
        Ok(())
    }

    /// Bandwidth-area constant `d / (2 pi eps0 eps_r R)` in Hz m^2.
    pub fn alpha(&self) -> f64 {
        self.d / (2.0 * PI * self.eps0 * self.eps_r * self.resistance)
    }

    /// Capacitive (RC) cutoff `alpha / A`.
    pub fn rc_cutoff(&self, area: f64) -> Result<f64> {
        check_area(area)?;
        Ok(self.alpha() / area)
    }

    /// Transit-time cutoff `0.45 nu_bar / d`.
    pub fn transit_cutoff(&self) -> Result<f64> {
        let nu = self.nu_bar.ok_or(Error::MissingParam("nu_bar"))?;
        Ok(0.45 * nu / self.d)
    }

    /// 3-dB cutoff combining transit and RC limits; equals the RC cutoff when
    /// no drift velocity is configured.
    pub fn combined_cutoff(&self, area: f64) -> Result<f64> {
        let f_rc = self.rc_cutoff(area)?;
        match self.nu_bar {
            None => Ok(f_rc),
            Some(_) => {
                let f_t = self.transit_cutoff()?;
                Ok(f_t * f_rc / f_t.hypot(f_rc))
            }
        }
    }
}

/// Circularly symmetric Gaussian beam on the focal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// Total beam power (W).
    pub i0: f64,
    /// Spot radius (m).
    pub rho: f64,
    pub x0: f64,
    pub y0: f64,
}

impl BeamParams {
    /// Centered beam whose peak intensity equals `mu0`.
    pub fn from_peak_intensity(mu0: f64, rho: f64) -> Self {
        BeamParams {
            i0: mu0 * 2.0 * PI * rho * rho,
            rho,
            x0: 0.0,
            y0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("I0", self.i0)?;
        positive("rho", self.rho)?;
        if !self.x0.is_finite() || !self.y0.is_finite() {
            return Err(Error::validation("x0/y0", "beam offset must be finite"));
        }
        Ok(())
    }

    /// Peak intensity `I0 / (2 pi rho^2)`.
    pub fn peak_intensity(&self) -> f64 {
        self.i0 / (2.0 * PI * self.rho * self.rho)
    }

    /// Intensity at `(x, y)`.
    pub fn intensity(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.x0;
        let dy = y - self.y0;
        self.peak_intensity() * (-(dx * dx + dy * dy) / (2.0 * self.rho * self.rho)).exp()
    }

    /// Power collected by a disk of radius `r_det` at the origin.
    ///
    /// The centered case is exact. Off-center beams are integrated in polar
    /// coordinates about the detector center to about 1e-10 relative.
    pub fn captured_power_disk(&self, r_det: f64) -> Result<f64> {
        if !(r_det >= 0.0) {
            return Err(Error::domain(format!(
                "detector radius {r_det} must be >= 0"
            )));
        }
        if r_det == 0.0 {
            return Ok(0.0);
        }
        let offset = self.x0.hypot(self.y0);
        let two_rho2 = 2.0 * self.rho * self.rho;
        if offset == 0.0 {
            return Ok(-self.i0 * (-r_det * r_det / two_rho2).exp_m1());
        }
        if r_det.is_infinite() {
            return Ok(self.i0);
        }
        // by symmetry place the beam on the +x axis and integrate theta over [0, pi]
        let mu0 = self.peak_intensity();
        let angular = |r: f64| {
            let inner = quad::integrate(
                |th: f64| {
                    let d2 = r * r + offset * offset - 2.0 * r * offset * th.cos();
                    (-d2 / two_rho2).exp()
                },
                0.0,
                PI,
                0.0,
                1e-12,
            );
            2.0 * inner.value * r
        };
        let outer = quad::integrate(angular, 0.0, r_det, 0.0, 1e-11);
        Ok(mu0 * outer.value)
    }

    /// Power falling on the axis-aligned rectangle `[x1, x2] x [y1, y2]`.
    pub fn cell_power(&self, x1: f64, x2: f64, y1: f64, y2: f64) -> Result<f64> {
        if !(x1 < x2) || !(y1 < y2) {
            return Err(Error::domain(format!(
                "degenerate cell [{x1}, {x2}] x [{y1}, {y2}]"
            )));
        }
        let s = SQRT_2 * self.rho;
        let fx = erf_diff((x1 - self.x0) / s, (x2 - self.x0) / s);
        let fy = erf_diff((y1 - self.y0) / s, (y2 - self.y0) / s);
        Ok(0.25 * self.i0 * fx * fy)
    }
}

// erf(b) - erf(a), using the complementary tails when both ends sit far out
// on the same side to avoid cancellation.
fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 3.0 {
        erfc(a) - erfc(b)
    } else if b <= -3.0 {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

/// Thermal noise and background light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// One-sided thermal noise PSD (W/Hz).
    pub n0: f64,
    /// Background intensity, same units as the peak intensity.
    pub lambda_b: f64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        positive("N0", self.n0)?;
        if !(self.lambda_b >= 0.0) || !self.lambda_b.is_finite() {
            return Err(Error::validation("lambda_b", "must be finite and >= 0"));
        }
        Ok(())
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(
            field,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

pub(crate) fn check_area(area: f64) -> Result<()> {
    if area > 0.0 && area.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("area {area} must be finite and > 0")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_link() -> PhotodiodeParams {
        PhotodiodeParams::default()
    }

    #[test]
    fn alpha_default_device() {
        // 1e-7 / (2 pi * 8.854e-12 * 12.95 * 10)
        let expected = 1e-7 / (2.0 * PI * 8.854e-12 * 12.95 * 10.0);
        let a = default_link().alpha();
        assert!((a - expected).abs() < 1e-12 * expected);
        assert!((a - 13.88).abs() < 0.01);
    }

    #[test]
    fn alpha_scaling() {
        let p = default_link();
        let r2 = PhotodiodeParams {
            resistance: 20.0,
            ..p
        };
        let d2 = PhotodiodeParams { d: 0.2e-6, ..p };
        assert!((r2.alpha() * 2.0 - p.alpha()).abs() < 1e-12);
        assert!((d2.alpha() - 2.0 * p.alpha()).abs() < 1e-12);
    }

    #[test]
    fn rc_cutoff_values() {
        let p = default_link();
        let f = p.rc_cutoff(1e-9).unwrap();
        assert!((f - p.alpha() * 1e9).abs() < 1.0);
        assert!((f - 1.388e10).abs() / 1.388e10 < 1e-3);
        assert!((p.rc_cutoff(2e-9).unwrap() * 2.0 - f).abs() < 1e-3);
        assert!((p.rc_cutoff(p.alpha()).unwrap() - 1.0).abs() < 1e-15);
        assert!(p.rc_cutoff(0.0).is_err());
        assert!(p.rc_cutoff(-1.0).is_err());
    }

    #[test]
    fn transit_cutoff_values() {
        let p = PhotodiodeParams {
            nu_bar: Some(4.5e4),
            ..default_link()
        };
        assert!((p.transit_cutoff().unwrap() - 2.025e11).abs() < 1.0);
        assert_eq!(
            default_link().transit_cutoff(),
            Err(Error::MissingParam("nu_bar"))
        );
        let fast = PhotodiodeParams {
            nu_bar: Some(9e4),
            ..p
        };
        assert!((fast.transit_cutoff().unwrap() - 2.0 * 2.025e11).abs() < 1.0);
    }

    #[test]
    fn combined_cutoff_cases() {
        let p = default_link();
        // fallback is exactly the RC value
        assert_eq!(p.combined_cutoff(1e-9).unwrap(), p.rc_cutoff(1e-9).unwrap());
        // pick nu_bar so that f_t == f_RC at A = 1e-9
        let f = p.rc_cutoff(1e-9).unwrap();
        let q = PhotodiodeParams {
            nu_bar: Some(f * p.d / 0.45),
            ..p
        };
        let fc = q.combined_cutoff(1e-9).unwrap();
        assert!((fc - f / SQRT_2).abs() / fc < 1e-12);
        // f_t >> f_RC
        let q = PhotodiodeParams {
            nu_bar: Some(1e12),
            ..p
        };
        let fc = q.combined_cutoff(1e-6).unwrap();
        let frc = q.rc_cutoff(1e-6).unwrap();
        assert!((fc - frc).abs() / frc < 1e-6);
        assert!(fc <= frc && fc <= q.transit_cutoff().unwrap());
    }

    #[test]
    fn peak_intensity_cases() {
        let b = BeamParams {
            i0: 2.0 * PI,
            rho: 1.0,
            x0: 0.0,
            y0: 0.0,
        };
        assert!((b.peak_intensity() - 1.0).abs() < 1e-15);
        let b2 = BeamParams { rho: 2.0, ..b };
        assert!((b2.peak_intensity() - 0.25).abs() < 1e-15);
        let c = BeamParams::from_peak_intensity(0.01, 2e-3);
        assert!((c.peak_intensity() - 0.01).abs() < 1e-17);
    }

    #[test]
    fn disk_capture_centered() {
        let b = BeamParams::from_peak_intensity(1.0, 1e-3);
        assert!((b.captured_power_disk(1.0).unwrap() - b.i0).abs() < 1e-15 * b.i0);
        let half = b.rho * (2.0 * 2f64.ln()).sqrt();
        assert!((b.captured_power_disk(half).unwrap() - 0.5 * b.i0).abs() < 1e-14 * b.i0);
        // small-area approximation mu0 * A within 1 %
        let r = b.rho / 10.0;
        let exact = b.captured_power_disk(r).unwrap();
        let approx = b.peak_intensity() * PI * r * r;
        assert!((exact - approx).abs() / exact < 0.01);
    }

    #[test]
    fn disk_capture_off_center_matches_centered_limit_and_grid() {
        let b = BeamParams::from_peak_intensity(1.0, 1e-3);
        // tiny offset ~ centered
        let near = BeamParams { x0: 1e-12, ..b };
        let r = 1.3e-3;
        let a = near.captured_power_disk(r).unwrap();
        let c = b.captured_power_disk(r).unwrap();
        assert!((a - c).abs() / c < 1e-9);

        // offset beam vs a fine Cartesian midpoint sum over the disk
        let off = BeamParams {
            x0: 0.7e-3,
            y0: -0.4e-3,
            ..b
        };
        let q = off.captured_power_disk(r).unwrap();
        let n = 1600;
        let h = 2.0 * r / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = -r + (i as f64 + 0.5) * h;
            for j in 0..n {
                let y = -r + (j as f64 + 0.5) * h;
                if x * x + y * y <= r * r {
                    acc += off.intensity(x, y);
                }
            }
        }
        let grid = acc * h * h;
        assert!((q - grid).abs() / q < 2e-3, "{q} vs {grid}");
        assert!(q < c);
    }

    #[test]
    fn disk_capture_monotone_bounded() {
        let b = BeamParams {
            i0: 1.0,
            rho: 1.0,
            x0: 0.8,
            y0: 0.3,
        };
        let mut prev = 0.0;
        for i in 0..40 {
            let r = i as f64 * 0.2;
            let p = b.captured_power_disk(r).unwrap();
            assert!(p + 1e-12 >= prev && p <= b.i0 + 1e-12, "r={r} p={p}");
            prev = p;
        }
    }

    #[test]
    fn cell_power_limits() {
        let b = BeamParams {
            i0: 3.0,
            rho: 1e-3,
            x0: 2e-4,
            y0: -1e-4,
        };
        let inf = f64::INFINITY;
        assert!((b.cell_power(-inf, inf, -inf, inf).unwrap() - 3.0).abs() < 1e-15);
        assert!((b.cell_power(b.x0, inf, -inf, inf).unwrap() - 1.5).abs() < 1e-15);
        assert!(b.cell_power(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(b.cell_power(0.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn cell_power_far_tail_has_no_cancellation() {
        let b = BeamParams {
            i0: 1.0,
            rho: 1.0,
            x0: 0.0,
            y0: 0.0,
        };
        let p = b.cell_power(6.0, 7.0, -1.0, 1.0).unwrap();
        assert!(p > 0.0);
    }

    #[test]
    fn cell_power_additive_over_tiling() {
        let b = BeamParams {
            i0: 1.0,
            rho: 1.0,
            x0: 0.3,
            y0: -0.2,
        };
        let whole = b.cell_power(-1.0, 1.0, -1.5, 0.5).unwrap();
        let mut sum = 0.0;
        let xs = [-1.0, -0.3, 0.1, 1.0];
        let ys = [-1.5, -1.0, 0.0, 0.25, 0.5];
        for xw in xs.windows(2) {
            for yw in ys.windows(2) {
                sum += b.cell_power(xw[0], xw[1], yw[0], yw[1]).unwrap();
            }
        }
        assert!((sum - whole).abs() / whole < 1e-9);
    }
}
