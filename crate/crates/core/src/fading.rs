//! Ergodic capacity under slow intensity fading: Rayleigh pointing error and
//! negative-exponential (strong) turbulence.
//!
//! The fading gain `h` scales the captured signal, so the instantaneous SNR is
//! `h^2 (beta0/alpha) A^3`. Ergodic capacity averages the Shannon rate over
//! the gain distribution:
//!
//! * pointing error: `h = exp(-R^2 / (2 rho^2))` with `R ~ Rayleigh(sigma_p)`.
//!   Substituting `u = R^2 / (2 sigma_p^2)` turns the average into
//!   `int_0^inf log2(1 + s exp(-2 sigma_p^2 u / rho^2)) e^-u du`.
//! * turbulence: `h ~ Exp(mean eta)`, integrated as
//!   `int_0^inf log2(1 + s eta^2 t^2) e^-t dt`.
//!
//! Both integrals are truncated at an explicit cutoff whose tail is bounded
//! analytically and added to the error estimate.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{
    capacity_thermal, find_peak, gamma0, shannon, OptimumReport, ThermalChannel,
};
use crate::error::{Error, Result};
use crate::physics::{check_area, BeamParams};
use crate::quad;
use crate::special;

/// Truncation of the Rayleigh integral at `r_max = 8 sigma_p`, i.e. `u_max = 32`.
pub const RAYLEIGH_U_MAX: f64 = 32.0;
/// Truncation of the exponential-gain integral in units of the mean.
pub const EXPONENTIAL_T_MAX: f64 = 50.0;
/// Monte-Carlo samples per independently seeded batch.
pub const MC_BATCH: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FadingModel {
    NoFading,
    /// Rayleigh-distributed radial pointing error with scale `sigma_p` (m).
    RayleighPointing {
        sigma_p: f64,
    },
    /// Negative-exponential gain with mean `eta`.
    NegExpTurbulence {
        eta: f64,
    },
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingModel::NoFading => Ok(()),
            FadingModel::RayleighPointing { sigma_p } if sigma_p > 0.0 && sigma_p.is_finite() => {
                Ok(())
            }
            FadingModel::RayleighPointing { sigma_p } => Err(Error::validation(
                "sigma_p",
                format!("must be > 0, got {sigma_p}"),
            )),
            FadingModel::NegExpTurbulence { eta } if eta > 0.0 && eta.is_finite() => Ok(()),
            FadingModel::NegExpTurbulence { eta } => {
                Err(Error::validation("eta", format!("must be > 0, got {eta}")))
            }
        }
    }

    /// `E[h^2]`, the mean power gain.
    pub fn mean_square_gain(&self, rho: f64) -> f64 {
        match *self {
            FadingModel::NoFading => 1.0,
            // E[exp(-R^2/rho^2)] for Rayleigh R
            FadingModel::RayleighPointing { sigma_p } => {
                let c = 2.0 * sigma_p * sigma_p / (rho * rho);
                1.0 / (1.0 + c)
            }
            FadingModel::NegExpTurbulence { eta } => 2.0 * eta * eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicResult {
    pub area: f64,
    pub ergodic_capacity_bps: f64,
    pub quadrature_abs_error_estimate: f64,
}

/// Ergodic capacity at area `area` under fading model `fm`.
pub fn ergodic_capacity(
    ch: &ThermalChannel,
    beam: &BeamParams,
    fm: &FadingModel,
    area: f64,
) -> Result<ErgodicResult> {
    check_area(area)?;
    fm.validate()?;
    let bandwidth = ch.alpha / area;
    let snr = ch.snr(area);
    let scale = bandwidth / LN_2;
    // tolerance in nats per unit bandwidth, relative to the no-fading rate
    let abs_tol = 1e-9 * snr.ln_1p();

    let (value, err) = match *fm {
        FadingModel::NoFading => {
            return Ok(ErgodicResult {
                area,
                ergodic_capacity_bps: capacity_thermal(ch, area)?,
                quadrature_abs_error_estimate: 0.0,
            })
        }
        FadingModel::RayleighPointing { sigma_p } => {
            let c = 2.0 * sigma_p * sigma_p / (beam.rho * beam.rho);
            let f = |u: f64| (snr * (-c * u).exp()).ln_1p() * (-u).exp();
            // the log term bends where s e^{-cu} ~ 1
            let mut pts = vec![0.0];
            let knee = snr.ln() / c;
            if knee > 0.0 && knee < RAYLEIGH_U_MAX {
                pts.push(knee);
            }
            pts.push(RAYLEIGH_U_MAX);
            let q = quad::integrate_pieces(f, &pts, abs_tol, 1e-12);
            let tail = snr.ln_1p() * (-RAYLEIGH_U_MAX).exp();
            (q.value, q.abs_error + tail)
        }
        FadingModel::NegExpTurbulence { eta } => {
            let k = snr * eta * eta;
            let f = |t: f64| (k * t * t).ln_1p() * (-t).exp();
            let mut pts = vec![0.0];
            let knee = 1.0 / k.sqrt();
            if knee < 1.0 {
                pts.push(knee);
            }
            pts.extend([1.0, EXPONENTIAL_T_MAX]);
            let q = quad::integrate_pieces(f, &pts, abs_tol, 1e-12);
            let t = EXPONENTIAL_T_MAX;
            let tail = (-t).exp() * ((k * t * t).ln_1p() + 2.0 / t);
            (q.value, q.abs_error + tail)
        }
    };
    Ok(ErgodicResult {
        area,
        ergodic_capacity_bps: scale * value,
        quadrature_abs_error_estimate: scale * err,
    })
}

/// Pointing-error average area `A*_0 * 3 rho^2 / (3 rho^2 - 2 sigma_p^2)`,
/// where `A*_0` is the no-fading optimum.
///
/// Exists only when `rho > sqrt(2/3) sigma_p`.
pub fn suboptimal_area_pointing(ch: &ThermalChannel, rho: f64, sigma_p: f64) -> Result<f64> {
    if !(rho > 0.0) || !(sigma_p > 0.0) {
        return Err(Error::domain(format!(
            "rho = {rho} and sigma_p = {sigma_p} must be > 0"
        )));
    }
    let denom = 3.0 * rho * rho - 2.0 * sigma_p * sigma_p;
    if rho <= (2.0f64 / 3.0).sqrt() * sigma_p || !(denom > 0.0) {
        return Err(Error::Convergence(format!(
            "the average-area integral requires rho > sqrt(2/3) sigma_p (rho = {rho:e}, sigma_p = {sigma_p:e})"
        )));
    }
    Ok(no_fading_area(ch) * 3.0 * rho * rho / denom)
}

/// Turbulence average area `A*_0 Gamma(1/3) eta^(-2/3)`.
pub fn suboptimal_area_turbulence(ch: &ThermalChannel, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::domain(format!("eta = {eta} must be > 0")));
    }
    Ok(no_fading_area(ch) * special::gamma(1.0 / 3.0)? * eta.powf(-2.0 / 3.0))
}

fn no_fading_area(ch: &ThermalChannel) -> f64 {
    gamma0() * (ch.alpha / ch.beta0).cbrt()
}

/// Closed-form average area and the numerically maximized ergodic capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingOptimum {
    pub closed_form_area: f64,
    pub capacity_at_closed_form: f64,
    pub numeric: OptimumReport,
    /// `(closed_form_area - numeric.area_star) / numeric.area_star`.
    pub area_gap: f64,
    /// `capacity_at_closed_form / numeric.capacity_star`.
    pub capacity_ratio: f64,
}

pub fn fading_optimum(
    ch: &ThermalChannel,
    beam: &BeamParams,
    fm: &FadingModel,
    a_lo: f64,
    a_hi: f64,
) -> Result<FadingOptimum> {
    let closed_form_area = match *fm {
        FadingModel::NoFading => no_fading_area(ch),
        FadingModel::RayleighPointing { sigma_p } => {
            suboptimal_area_pointing(ch, beam.rho, sigma_p)?
        }
        FadingModel::NegExpTurbulence { eta } => suboptimal_area_turbulence(ch, eta)?,
    };
    let numeric = find_peak(
        |a| Ok(ergodic_capacity(ch, beam, fm, a)?.ergodic_capacity_bps),
        a_lo,
        a_hi,
    )?;
    let capacity_at_closed_form =
        ergodic_capacity(ch, beam, fm, closed_form_area)?.ergodic_capacity_bps;
    Ok(FadingOptimum {
        closed_form_area,
        capacity_at_closed_form,
        numeric,
        area_gap: (closed_form_area - numeric.area_star) / numeric.area_star,
        capacity_ratio: capacity_at_closed_form / numeric.capacity_star,
    })
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy)]
struct BatchStats {
    n: f64,
    mean: f64,
    m2: f64,
}

impl BatchStats {
    // Chan et al. pairwise update
    fn merge(self, o: BatchStats) -> BatchStats {
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        BatchStats {
            n,
            mean: self.mean + delta * o.n / n,
            m2: self.m2 + o.m2 + delta * delta * self.n * o.n / n,
        }
    }
}

/// Monte-Carlo estimate of the ergodic capacity from `n_samples` gain draws.
///
/// Samples are drawn in fixed batches of `MC_BATCH`, each from its own ChaCha
/// stream, and merged in batch order, so the result depends only on `seed`.
pub fn monte_carlo_ergodic(
    ch: &ThermalChannel,
    beam: &BeamParams,
    fm: &FadingModel,
    area: f64,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    monte_carlo_ergodic_with_workers(ch, beam, fm, area, n_samples, seed, None)
}

/// As [`monte_carlo_ergodic`], on a dedicated pool of `workers` threads
/// (`None` uses the global pool). The result is identical for any worker count.
pub fn monte_carlo_ergodic_with_workers(
    ch: &ThermalChannel,
    beam: &BeamParams,
    fm: &FadingModel,
    area: f64,
    n_samples: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<McEstimate> {
    check_area(area)?;
    fm.validate()?;
    if n_samples < 1000 {
        return Err(Error::domain(format!(
            "n_samples = {n_samples} must be >= 1000"
        )));
    }
    if let FadingModel::NoFading = fm {
        return Ok(McEstimate {
            mean: capacity_thermal(ch, area)?,
            std_error: 0.0,
        });
    }
    let bandwidth = ch.alpha / area;
    let snr = ch.snr(area);
    let fm = *fm;
    let rho = beam.rho;
    let batches = n_samples.div_ceil(MC_BATCH);

    let run_batch = |b: u64| -> BatchStats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b);
        let count = MC_BATCH.min(n_samples - b * MC_BATCH);
        let mut stats = BatchStats {
            n: 0.0,
            mean: 0.0,
            m2: 0.0,
        };
        for _ in 0..count {
            // (0, 1]
            let u = 1.0 - rng.random::<f64>();
            let h2 = match fm {
                FadingModel::NoFading => 1.0,
                // h^2 = exp(-R^2/rho^2), R^2 = -2 sigma_p^2 ln u
                FadingModel::RayleighPointing { sigma_p } => {
                    u.powf(2.0 * sigma_p * sigma_p / (rho * rho))
                }
                FadingModel::NegExpTurbulence { eta } => {
                    let h = -eta * u.ln();
                    h * h
                }
            };
            let x = shannon(bandwidth, snr * h2);
            stats.n += 1.0;
            let delta = x - stats.mean;
            stats.mean += delta / stats.n;
            stats.m2 += delta * (x - stats.mean);
        }
        stats
    };

    let collect = || -> Vec<BatchStats> { (0..batches).into_par_iter().map(run_batch).collect() };
    let per_batch = match workers {
        None => collect(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::domain(format!("thread pool: {e}")))?
            .install(collect),
    };
    let total = per_batch
        .into_iter()
        .reduce(BatchStats::merge)
        .expect("at least one batch");
    let var = total.m2 / (total.n - 1.0);
    Ok(McEstimate {
        mean: total.mean,
        std_error: (var / total.n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::optimal_area_thermal;

    fn default_link() -> (ThermalChannel, BeamParams) {
        let beam = BeamParams::from_peak_intensity(0.01, 2e-3);
        let ch = ThermalChannel::new(13.88, 0.01f64.powi(2) / 4.11e-21).unwrap();
        (ch, beam)
    }

    // midpoint rule on the radial integral in r, independent of the u substitution
    fn pointing_oracle(ch: &ThermalChannel, rho: f64, sigma_p: f64, area: f64) -> f64 {
        let n = 200_000;
        let r_max = 12.0 * sigma_p;
        let h = r_max / n as f64;
        let s = ch.snr(area);
        let mut acc = 0.0;
        for i in 0..n {
            let r = (i as f64 + 0.5) * h;
            let gain = (-r * r / (rho * rho)).exp();
            let pdf = r / (sigma_p * sigma_p) * (-r * r / (2.0 * sigma_p * sigma_p)).exp();
            acc += (1.0 + s * gain).log2() * pdf;
        }
        ch.alpha / area * acc * h
    }

    #[test]
    fn no_fading_is_exact() {
        let (ch, beam) = default_link();
        let r = ergodic_capacity(&ch, &beam, &FadingModel::NoFading, 3e-5).unwrap();
        assert_eq!(r.ergodic_capacity_bps, capacity_thermal(&ch, 3e-5).unwrap());
    }

    #[test]
    fn pointing_quadrature_matches_radial_oracle() {
        let (ch, beam) = default_link();
        for sp in [0.3e-3, beam.rho / 2f64.sqrt(), 3e-3] {
            for area in [1e-7, 2e-5, 1e-3] {
                let fm = FadingModel::RayleighPointing { sigma_p: sp };
                let q = ergodic_capacity(&ch, &beam, &fm, area).unwrap();
                let o = pointing_oracle(&ch, beam.rho, sp, area);
                assert!(
                    (q.ergodic_capacity_bps - o).abs() / o < 1e-7,
                    "sp={sp} A={area}"
                );
                let cap = capacity_thermal(&ch, area).unwrap();
                assert!(q.quadrature_abs_error_estimate <= 1e-6 * cap);
            }
        }
    }

    #[test]
    fn tiny_pointing_error_approaches_no_fading() {
        let (ch, beam) = default_link();
        let fm = FadingModel::RayleighPointing { sigma_p: 1e-7 };
        for area in [1e-6, 2e-5, 1e-4] {
            let e = ergodic_capacity(&ch, &beam, &fm, area)
                .unwrap()
                .ergodic_capacity_bps;
            let c = capacity_thermal(&ch, area).unwrap();
            assert!((c - e) / c < 1e-3 && e <= c);
        }
    }

    #[test]
    fn turbulence_quadrature_matches_substituted_oracle() {
        let (ch, beam) = default_link();
        let eta = 0.4;
        let fm = FadingModel::NegExpTurbulence { eta };
        for area in [1e-8, 2e-5, 1e-3] {
            let q = ergodic_capacity(&ch, &beam, &fm, area).unwrap();
            // h = -eta ln v, v uniform: midpoint rule in v on (0, 1)
            let n = 2_000_000;
            let s = ch.snr(area);
            let mut acc = 0.0;
            for i in 0..n {
                let v = (i as f64 + 0.5) / n as f64;
                let h = -eta * v.ln();
                acc += (1.0 + s * h * h).log2();
            }
            let o = ch.alpha / area * acc / n as f64;
            assert!((q.ergodic_capacity_bps - o).abs() / o < 1e-5, "A={area}");
        }
    }

    #[test]
    fn fading_never_beats_no_fading_when_mean_square_gain_at_most_one() {
        let (ch, beam) = default_link();
        let models = [
            FadingModel::RayleighPointing { sigma_p: 1e-5 },
            FadingModel::RayleighPointing { sigma_p: 1e-3 },
            FadingModel::RayleighPointing { sigma_p: 8e-3 },
            FadingModel::NegExpTurbulence { eta: 0.1 },
            FadingModel::NegExpTurbulence { eta: 0.4 },
            FadingModel::NegExpTurbulence { eta: 0.7 },
        ];
        for fm in models {
            assert!(fm.mean_square_gain(beam.rho) <= 1.0);
            for area in crate::capacity::log_space(1e-9, 1e-2, 30) {
                let e = ergodic_capacity(&ch, &beam, &fm, area)
                    .unwrap()
                    .ergodic_capacity_bps;
                let c = capacity_thermal(&ch, area).unwrap();
                assert!(e <= c * (1.0 + 1e-12), "{fm:?} A={area}");
            }
        }
    }

    #[test]
    fn strong_mean_turbulence_can_exceed_no_fading_at_low_snr() {
        // E[h^2] = 2 eta^2 > 1 for eta > 1/sqrt(2): low-SNR ergodic rate scales with E[h^2]
        let (ch, beam) = default_link();
        let fm = FadingModel::NegExpTurbulence { eta: 0.8 };
        let area = 1e-8;
        let e = ergodic_capacity(&ch, &beam, &fm, area)
            .unwrap()
            .ergodic_capacity_bps;
        let c = capacity_thermal(&ch, area).unwrap();
        assert!(e > c);
        assert!((e / c - 1.28).abs() < 1e-3);
    }

    #[test]
    fn pointing_closed_form_cases() {
        let (ch, _) = default_link();
        let base = optimal_area_thermal(&ch).area_star;
        let sp = 1e-3;
        let a = suboptimal_area_pointing(&ch, 2f64.sqrt() * sp, sp).unwrap();
        assert!((a / base - 1.5).abs() < 1e-12);
        let a = suboptimal_area_pointing(&ch, 2e-3, 1e-12).unwrap();
        assert!((a / base - 1.0).abs() < 1e-12);
        let edge = (2.0f64 / 3.0).sqrt() * sp;
        let a = suboptimal_area_pointing(&ch, edge * (1.0 + 1e-9), sp).unwrap();
        assert!(a.is_finite() && a / base > 1e7);
        assert!(matches!(
            suboptimal_area_pointing(&ch, edge, sp),
            Err(Error::Convergence(_))
        ));
        assert!(matches!(
            suboptimal_area_pointing(&ch, 0.5 * sp, sp),
            Err(Error::Convergence(_))
        ));
    }

    #[test]
    fn pointing_closed_form_increasing_in_sigma() {
        let (ch, _) = default_link();
        let rho = 2e-3;
        let mut prev = 0.0;
        for i in 1..100 {
            let sp = 2.4e-3 * i as f64 / 100.0;
            let a = suboptimal_area_pointing(&ch, rho, sp).unwrap();
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn turbulence_closed_form_cases() {
        let (ch, _) = default_link();
        let base = optimal_area_thermal(&ch).area_star;
        let a1 = suboptimal_area_turbulence(&ch, 1.0).unwrap();
        assert!((a1 / base - 2.678_938_534_707_748).abs() < 1e-9);
        let a = suboptimal_area_turbulence(&ch, 0.1).unwrap();
        let a8 = suboptimal_area_turbulence(&ch, 0.8).unwrap();
        assert!((a / a8 - 4.0).abs() < 1e-12);
        assert!(suboptimal_area_turbulence(&ch, 0.0).is_err());
    }

    #[test]
    fn turbulence_closed_form_inside_numeric_window() {
        let (ch, beam) = default_link();
        let fm = FadingModel::NegExpTurbulence { eta: 0.4 };
        let opt = fading_optimum(&ch, &beam, &fm, 1e-9, 1e-2).unwrap();
        assert!(opt.closed_form_area > 1e-9 && opt.closed_form_area < 1e-2);
        // averaging per-realization optima overshoots the ergodic maximiser
        assert!(opt.area_gap > 0.0);
        // the ratio is independent of beta0/alpha; frozen from an independent scipy evaluation
        assert!(
            (opt.capacity_ratio - 0.786_737_528).abs() < 1e-4,
            "{}",
            opt.capacity_ratio
        );
    }

    #[test]
    fn pointing_numeric_optimum_close_to_closed_form() {
        let (ch, beam) = default_link();
        let fm = FadingModel::RayleighPointing {
            sigma_p: beam.rho / 2f64.sqrt(),
        };
        let opt = fading_optimum(&ch, &beam, &fm, 1e-9, 1e-2).unwrap();
        assert!(opt.capacity_ratio >= 0.99 && opt.capacity_ratio <= 1.0);
    }

    #[test]
    fn monte_carlo_no_fading() {
        let (ch, beam) = default_link();
        let r = monte_carlo_ergodic(&ch, &beam, &FadingModel::NoFading, 1e-5, 5000, 1).unwrap();
        assert_eq!(r.mean, capacity_thermal(&ch, 1e-5).unwrap());
        assert_eq!(r.std_error, 0.0);
        assert!(monte_carlo_ergodic(&ch, &beam, &FadingModel::NoFading, 1e-5, 999, 1).is_err());
    }

    #[test]
    fn monte_carlo_agrees_and_is_partition_invariant() {
        let (ch, beam) = default_link();
        let fm = FadingModel::RayleighPointing {
            sigma_p: beam.rho / 2f64.sqrt(),
        };
        let area = 2e-5;
        let a =
            monte_carlo_ergodic_with_workers(&ch, &beam, &fm, area, 123_457, 9, Some(1)).unwrap();
        let b =
            monte_carlo_ergodic_with_workers(&ch, &beam, &fm, area, 123_457, 9, Some(8)).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let q = ergodic_capacity(&ch, &beam, &fm, area)
            .unwrap()
            .ergodic_capacity_bps;
        assert!((a.mean - q).abs() <= 4.0 * a.std_error);
    }
}
