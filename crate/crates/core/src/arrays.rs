//! Square n x n detector arrays of fixed total area with equal-gain (EGC) or
//! maximal-ratio (MRC) combining.
//!
//! Every element has bandwidth `alpha / A` with `A = total_area / M`, and
//! contributes independent thermal noise of variance `N0 W`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::capacity::{gamma0, lambert_optimum_snr, shannon};
use crate::error::{Error, Result};
use crate::physics::{BeamParams, NoiseParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Combining {
    Egc,
    Mrc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    /// Total array area (m^2); the array is a centered square.
    pub total_area: f64,
    /// Detectors per side; `M = n^2`.
    pub n: u32,
    pub scheme: Combining,
    pub beam: BeamParams,
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.total_area > 0.0 && self.total_area.is_finite()) {
            return Err(Error::validation(
                "array_area",
                format!("must be > 0, got {}", self.total_area),
            ));
        }
        if self.n == 0 {
            return Err(Error::validation(
                "detectors",
                "must be a positive perfect square",
            ));
        }
        self.beam.validate()
    }

    pub fn detectors(&self) -> u64 {
        u64::from(self.n) * u64::from(self.n)
    }

    pub fn detector_area(&self) -> f64 {
        self.total_area / self.detectors() as f64
    }
}

/// Per-detector captured powers and the derived combining constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArraySignal {
    /// Row-major powers `Lambda_m` (W), `n^2` entries.
    pub lambda_m: Vec<f64>,
    /// `(sum Lambda_m)^2 / N0`.
    pub beta1: f64,
    /// `sum (Lambda_m / A)^2 / N0`.
    pub beta2: f64,
    /// Element area `A` used for `beta2`.
    pub detector_area: f64,
}

impl ArraySignal {
    pub fn total_power(&self) -> f64 {
        self.lambda_m.iter().sum()
    }
}

/// Integrates the beam over every cell of the array tiling.
pub fn array_signal(cfg: &ArrayConfig, noise: &NoiseParams) -> Result<ArraySignal> {
    cfg.validate()?;
    noise.validate()?;
    let n = cfg.n as usize;
    let side = cfg.total_area.sqrt();
    let pitch = side / n as f64;
    let edge = |i: usize| -0.5 * side + i as f64 * pitch;
    let mut lambda_m = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let (x1, x2) = (
                edge(col),
                if col + 1 == n {
                    0.5 * side
                } else {
                    edge(col + 1)
                },
            );
            let (y1, y2) = (
                edge(row),
                if row + 1 == n {
                    0.5 * side
                } else {
                    edge(row + 1)
                },
            );
            lambda_m.push(cfg.beam.cell_power(x1, x2, y1, y2)?);
        }
    }
    let area = cfg.detector_area();
    let sum: f64 = lambda_m.iter().sum();
    let sum_sq_intensity: f64 = lambda_m.iter().map(|l| (l / area) * (l / area)).sum();
    Ok(ArraySignal {
        beta1: sum * sum / noise.n0,
        beta2: sum_sq_intensity / noise.n0,
        detector_area: area,
        lambda_m,
    })
}

/// EGC capacity `(alpha/A) log2(1 + beta1 A^2 / (total_area alpha))` for `A` in `(0, total_area]`.
pub fn capacity_egc(sig: &ArraySignal, alpha: f64, total_area: f64, area: f64) -> Result<f64> {
    if !(area > 0.0 && area <= total_area) {
        return Err(Error::domain(format!(
            "detector area {area} outside (0, {total_area}]"
        )));
    }
    Ok(shannon(
        alpha / area,
        egc_snr(sig.beta1, alpha, total_area, area),
    ))
}

pub fn egc_snr(beta1: f64, alpha: f64, total_area: f64, area: f64) -> f64 {
    beta1 / (total_area * alpha) * area * area
}

/// Universal factor `(exp(W(-2e^-2) + 2) - 1)^(1/2)` of the EGC optimum.
pub fn gamma1() -> f64 {
    lambert_optimum_snr(2.0).sqrt()
}

/// Closed-form EGC optimum `gamma1 (alpha total_area / beta1)^(1/2)`.
pub fn optimal_area_egc(beta1: f64, alpha: f64, total_area: f64) -> f64 {
    gamma1() * (alpha * total_area / beta1).sqrt()
}

/// Normalized EGC curvature `C'' alpha^(1/2) total_area^(3/2) ln2 / beta1^(3/2)` at
/// normalized amplitude `g = A sqrt(beta1 / (total_area alpha))`.
pub fn egc_normalized_curvature(g: f64) -> f64 {
    let g2 = g * g;
    -4.0 * g / ((1.0 + g2) * (1.0 + g2)) - 2.0 / (g * (1.0 + g2)) + 2.0 * g2.ln_1p() / (g2 * g)
}

/// MRC capacity `(alpha/A) log2(1 + (beta2/alpha) A^3)`.
pub fn capacity_mrc(sig: &ArraySignal, alpha: f64, area: f64) -> Result<f64> {
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::domain(format!("detector area {area} must be > 0")));
    }
    Ok(shannon(alpha / area, mrc_snr(sig.beta2, alpha, area)))
}

pub fn mrc_snr(beta2: f64, alpha: f64, area: f64) -> f64 {
    beta2 / alpha * area * area * area
}

/// Closed-form MRC optimum `gamma0 (alpha / beta2)^(1/3)`.
pub fn optimal_area_mrc(beta2: f64, alpha: f64) -> f64 {
    gamma0() * (alpha / beta2).cbrt()
}

/// Side count of the perfect-square array whose element area is closest (in
/// log scale) to `area`.
pub fn nearest_square_side(total_area: f64, area: f64) -> u32 {
    let side = (total_area / area).sqrt();
    let lo = side.floor().max(1.0);
    let hi = lo + 1.0;
    // compare element areas total/lo^2 and total/hi^2 on a log scale
    let pick = if (side / lo).ln().abs() <= (hi / side).ln().abs() {
        lo
    } else {
        hi
    };
    pick as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MSweepRow {
    pub detectors: u64,
    pub area: f64,
    pub egc_bps: f64,
    pub mrc_bps: f64,
}

/// Capacity of both schemes for each detector count, recomputing the
/// per-cell powers on each tiling.
pub fn capacity_vs_m(
    base: &ArrayConfig,
    noise: &NoiseParams,
    alpha: f64,
    m_list: &[u64],
) -> Result<Vec<MSweepRow>> {
    m_list
        .iter()
        .map(|&m| {
            let n = (m as f64).sqrt().round() as u64;
            if m == 0 || n * n != m {
                return Err(Error::domain(format!(
                    "detector count {m} is not a perfect square"
                )));
            }
            let cfg = ArrayConfig {
                n: n as u32,
                ..*base
            };
            let sig = array_signal(&cfg, noise)?;
            let area = cfg.detector_area();
            Ok(MSweepRow {
                detectors: m,
                area,
                egc_bps: capacity_egc(&sig, alpha, cfg.total_area, area)?,
                mrc_bps: capacity_mrc(&sig, alpha, area)?,
            })
        })
        .collect()
}

/// `C'' ln 2` helper for tests and validation: central second difference of `f`.
pub(crate) fn ln2_scaled_second_difference<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    crate::capacity::central_second_difference(f, x) * LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::log_space;

    fn beam(mu0: f64) -> BeamParams {
        BeamParams::from_peak_intensity(mu0, 2e-3)
    }

    fn noise() -> NoiseParams {
        NoiseParams {
            n0: 4.11e-21,
            lambda_b: 0.0,
        }
    }

    fn cfg(n: u32, mu0: f64) -> ArrayConfig {
        ArrayConfig {
            total_area: 4e-6,
            n,
            scheme: Combining::Egc,
            beam: beam(mu0),
        }
    }

    fn riemann_cell(b: &BeamParams, x1: f64, x2: f64, y1: f64, y2: f64, k: usize) -> f64 {
        let hx = (x2 - x1) / k as f64;
        let hy = (y2 - y1) / k as f64;
        let mut acc = 0.0;
        for i in 0..k {
            let x = x1 + (i as f64 + 0.5) * hx;
            for j in 0..k {
                let y = y1 + (j as f64 + 0.5) * hy;
                acc += b.intensity(x, y);
            }
        }
        acc * hx * hy
    }

    #[test]
    fn single_large_detector_captures_everything() {
        let c = ArrayConfig {
            total_area: 1.0,
            n: 1,
            scheme: Combining::Egc,
            beam: beam(0.01),
        };
        let sig = array_signal(&c, &noise()).unwrap();
        assert!((sig.lambda_m[0] - c.beam.i0).abs() < 1e-15 * c.beam.i0);
    }

    #[test]
    fn centered_two_by_two_is_symmetric() {
        let sig = array_signal(&cfg(2, 0.01), &noise()).unwrap();
        let l = &sig.lambda_m;
        assert!(l.iter().all(|v| (v - l[0]).abs() < 1e-15 * l[0]));
    }

    #[test]
    fn four_by_four_matches_riemann_sum() {
        let c = ArrayConfig {
            beam: BeamParams {
                x0: 3e-4,
                y0: -1e-4,
                ..beam(0.01)
            },
            ..cfg(4, 0.01)
        };
        let sig = array_signal(&c, &noise()).unwrap();
        let side = 2e-3;
        let pitch = side / 4.0;
        for row in 0..4 {
            for col in 0..4 {
                let x1 = -1e-3 + col as f64 * pitch;
                let y1 = -1e-3 + row as f64 * pitch;
                let r = riemann_cell(&c.beam, x1, x1 + pitch, y1, y1 + pitch, 400);
                let v = sig.lambda_m[row * 4 + col];
                assert!((v - r).abs() / r < 1e-6, "cell ({row},{col})");
            }
        }
        assert!(sig.total_power() <= c.beam.i0);
        let m = sig.lambda_m.len() as f64;
        let sum_sq: f64 = sig.lambda_m.iter().map(|v| v * v).sum();
        assert!(m * sum_sq >= sig.total_power().powi(2));
    }

    #[test]
    fn gamma1_matches_root_oracle() {
        let g = |s: f64| (1.0 + s) * s.ln_1p() - 2.0 * s;
        let (mut lo, mut hi) = (1e-3, 1e4);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        assert!((s - 3.921_553_634_567_5).abs() < 1e-9);
        assert!((gamma1() - s.sqrt()).abs() < 1e-12);
        assert!((gamma1() - 1.9802).abs() < 1e-4);
    }

    #[test]
    fn egc_limits_and_noise_growth() {
        let sig = array_signal(&cfg(4, 1.0), &noise()).unwrap();
        assert!(capacity_egc(&sig, 13.88, 4e-6, 1e-20).unwrap() < 1e-3);
        let c1 = capacity_egc(&sig, 13.88, 4e-6, 1e-7).unwrap();
        let c2 = capacity_egc(&sig, 13.88, 8e-6, 1e-7).unwrap();
        assert!(c2 < c1);
        assert!(capacity_egc(&sig, 13.88, 4e-6, 5e-6).is_err());
        assert!(capacity_egc(&sig, 13.88, 4e-6, 0.0).is_err());
    }

    #[test]
    fn egc_closed_form_scaling_and_curvature() {
        let (alpha, total) = (13.88, 4e-6);
        let b1 = 1e12;
        let a = optimal_area_egc(b1, alpha, total);
        assert!((optimal_area_egc(4.0 * b1, alpha, total) * 2.0 - a).abs() / a < 1e-12);
        let sig = ArraySignal {
            lambda_m: vec![],
            beta1: b1,
            beta2: 1.0,
            detector_area: 1.0,
        };
        let f = |x: f64| shannon(alpha / x, egc_snr(sig.beta1, alpha, total, x));
        let norm = alpha.sqrt() * total.powf(1.5) / b1.powf(1.5);
        let fd = ln2_scaled_second_difference(f, a) * norm;
        assert!((fd - (-0.1218)).abs() < 0.01 * 0.1218, "{fd}");
        assert!((fd - egc_normalized_curvature(gamma1())).abs() < 1e-5);
    }

    #[test]
    fn egc_peak_matches_closed_form() {
        let (alpha, total) = (13.88, 4e-6);
        let sig = array_signal(&cfg(16, 1.0), &noise()).unwrap();
        let a = optimal_area_egc(sig.beta1, alpha, total);
        let num = crate::capacity::find_peak(|x| capacity_egc(&sig, alpha, total, x), 1e-12, total)
            .unwrap();
        assert!((num.area_star - a).abs() / a < 1e-3);
    }

    #[test]
    fn single_detector_schemes_coincide() {
        let c = cfg(1, 0.01);
        let sig = array_signal(&c, &noise()).unwrap();
        let e = capacity_egc(&sig, 13.88, c.total_area, c.total_area).unwrap();
        let m = capacity_mrc(&sig, 13.88, c.total_area).unwrap();
        assert!((e - m).abs() <= 1e-12 * e);
        // equals the single-detector thermal capacity with beta0 = (Lambda/A)^2 / N0
        let ch = crate::capacity::ThermalChannel::new(13.88, sig.beta2).unwrap();
        let t = crate::capacity::capacity_thermal(&ch, c.total_area).unwrap();
        assert!((t - m).abs() <= 1e-12 * t);
    }

    #[test]
    fn mrc_closed_form_properties() {
        let a = optimal_area_mrc(1e15, 13.88);
        assert!((optimal_area_mrc(8e15, 13.88) * 2.0 - a).abs() / a < 1e-12);
        let ch = crate::capacity::ThermalChannel::new(13.88, 1e15).unwrap();
        assert_eq!(a, crate::capacity::optimal_area_thermal(&ch).area_star);
        let sig = ArraySignal {
            lambda_m: vec![],
            beta1: 1.0,
            beta2: 1e15,
            detector_area: 1.0,
        };
        let num = crate::capacity::find_peak(|x| capacity_mrc(&sig, 13.88, x), 1e-9, 1.0).unwrap();
        assert!((num.area_star - a).abs() / a < 1e-3);
    }

    #[test]
    fn mrc_left_of_egc_for_default_link_array() {
        let c = cfg(4, 0.01);
        let sig = array_signal(&c, &noise()).unwrap();
        let egc = optimal_area_egc(sig.beta1, 13.88, c.total_area);
        let mrc = optimal_area_mrc(sig.beta2, 13.88);
        assert!(mrc < egc, "{mrc} vs {egc}");
    }

    #[test]
    fn mrc_dominates_egc_at_the_physical_element_area() {
        let mut state = 0x2545_f491_4f6c_dd1d_u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..8u32 {
            let m = (n * n) as usize;
            let lambda_m: Vec<f64> = (0..m).map(|_| next() * 1e-6).collect();
            let total = 4e-6;
            let area = total / m as f64;
            let s: f64 = lambda_m.iter().sum();
            let sig = ArraySignal {
                beta1: s * s / 4.11e-21,
                beta2: lambda_m.iter().map(|l| (l / area).powi(2)).sum::<f64>() / 4.11e-21,
                detector_area: area,
                lambda_m,
            };
            let e = capacity_egc(&sig, 13.88, total, area).unwrap();
            let r = capacity_mrc(&sig, 13.88, area).unwrap();
            assert!(r >= e * (1.0 - 1e-12), "n={n}");
        }
    }

    #[test]
    fn frozen_constants_dominance_holds_above_element_area() {
        let c = cfg(4, 0.01);
        let sig = array_signal(&c, &noise()).unwrap();
        for a in log_space(sig.detector_area, c.total_area, 50) {
            let e = capacity_egc(&sig, 13.88, c.total_area, a).unwrap();
            let r = capacity_mrc(&sig, 13.88, a).unwrap();
            assert!(r >= e * (1.0 - 1e-12), "A={a}");
        }
    }

    #[test]
    fn m_sweep_contract() {
        let base = cfg(4, 1.0);
        let rows = capacity_vs_m(&base, &noise(), 13.88, &[1, 4, 16, 64, 256, 1024, 4096]).unwrap();
        assert_eq!(rows.len(), 7);
        let one = &rows[0];
        assert!((one.egc_bps - one.mrc_bps).abs() <= 1e-12 * one.egc_bps);
        for r in &rows {
            assert!(r.mrc_bps >= r.egc_bps * (1.0 - 1e-12));
        }
        assert!(capacity_vs_m(&base, &noise(), 13.88, &[8]).is_err());
        assert!(capacity_vs_m(&base, &noise(), 13.88, &[0]).is_err());
    }

    #[test]
    fn nearest_square() {
        assert_eq!(nearest_square_side(4e-6, 2.5e-7), 4);
        assert_eq!(nearest_square_side(4e-6, 1.0), 1);
        assert_eq!(nearest_square_side(4e-6, 4e-6 / 17.0), 4);
    }
}
