//! Binary on-off keying under signal-dependent Gaussian shot noise plus
//! thermal noise.
//!
//! Quantities here live in a count-equivalent unit system: the mean output
//! and the shot-noise variance are equal. Intensities given in the power
//! units of the thermal model are converted with a free `photon_scale`
//! (counts per unit power): means scale by `photon_scale` and the thermal
//! variance by its square.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::capacity::{find_peak, OptimumReport};
use crate::error::{Error, Result};
use crate::physics::check_area;
use crate::quad;

/// Half-width of the output integration window in standard deviations.
pub const Y_WINDOW_SIGMAS: f64 = 10.0;
/// Absolute tolerance on mutual information (bits).
pub const MI_ABS_TOL: f64 = 1e-8;
const P_ON_TOL: f64 = 1e-7;

/// OOK channel at a fixed detector area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseChannel {
    pub mu0: f64,
    pub lambda_b: f64,
    pub sigma_th_sq: f64,
    pub area: f64,
}

impl ShotNoiseChannel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu0", self.mu0),
            ("lambda_b", self.lambda_b),
            ("sigma_th_sq", self.sigma_th_sq),
            ("area", self.area),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// Mean output for input `on`.
    pub fn mean(&self, on: bool) -> f64 {
        if on {
            (self.mu0 + self.lambda_b) * self.area
        } else {
            self.lambda_b * self.area
        }
    }

    /// Output variance for input `on`: shot variance equals the mean, plus thermal.
    pub fn variance(&self, on: bool) -> f64 {
        self.mean(on) + self.sigma_th_sq
    }

    fn log_density(&self, on: bool, y: f64) -> f64 {
        let m = self.mean(on);
        let v = self.variance(on);
        -0.5 * (2.0 * PI * v).ln() - (y - m) * (y - m) / (2.0 * v)
    }
}

/// Gaussian density `p(y | x)`.
pub fn conditional_density(ch: &ShotNoiseChannel, on: bool, y: f64) -> Result<f64> {
    if ch.variance(true) <= 0.0 && ch.variance(false) <= 0.0 {
        return Err(Error::Degenerate(
            "both conditional variances are zero".into(),
        ));
    }
    if ch.variance(on) <= 0.0 {
        return Err(Error::Degenerate(format!(
            "the {} density is a point mass",
            if on { "on" } else { "off" }
        )));
    }
    Ok(ch.log_density(on, y).exp())
}

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }
}

/// Mutual information `I(X;Y) = H(X) - H(X|Y)` in bits for `P(x = 1) = p_on`.
pub fn mutual_information(ch: &ShotNoiseChannel, p_on: f64) -> Result<f64> {
    ch.validate()?;
    if !(0.0..=1.0).contains(&p_on) {
        return Err(Error::domain(format!("p_on = {p_on} outside [0, 1]")));
    }
    if p_on == 0.0 || p_on == 1.0 || ch.mu0 * ch.area == 0.0 {
        return Ok(0.0);
    }
    let v0 = ch.variance(false);
    let v1 = ch.variance(true);
    if v0 <= 0.0 {
        // the off symbol is a point mass at 0 that the on density never hits
        return Ok(binary_entropy(p_on));
    }
    let (m0, m1) = (ch.mean(false), ch.mean(true));
    let p0 = 1.0 - p_on;

    let integrand = |y: f64| {
        let l0 = ch.log_density(false, y);
        let l1 = ch.log_density(true, y);
        // log p(y|x) - log p(y), written to stay accurate when l0 ~ l1
        let r0 = log_ratio(p_on, l1 - l0);
        let r1 = log_ratio(p0, l0 - l1);
        let t0 = if l0 > -745.0 { p0 * l0.exp() * r0 } else { 0.0 };
        let t1 = if l1 > -745.0 {
            p_on * l1.exp() * r1
        } else {
            0.0
        };
        t0 + t1
    };
    // break at each mean and at its own window edges, so a narrow density
    // next to a wide one is still resolved
    let (s0, s1) = (v0.sqrt(), v1.sqrt());
    let mut points = vec![
        m0 - Y_WINDOW_SIGMAS * s0,
        m0,
        m0 + Y_WINDOW_SIGMAS * s0,
        0.5 * (m0 + m1),
        m1 - Y_WINDOW_SIGMAS * s1,
        m1,
        m1 + Y_WINDOW_SIGMAS * s1,
    ];
    points.sort_by(f64::total_cmp);
    points.dedup();
    let q = quad::integrate_pieces(integrand, &points, MI_ABS_TOL * LN_2 * 0.1, 1e-12);
    let mi = q.value / LN_2;
    Ok(mi.clamp(0.0, binary_entropy(p_on)))
}

// log p(y|x) - log p(y) = -ln(1 - q + q e^d), with q the prior of the other
// symbol and d its log-density excess
fn log_ratio(q: f64, d: f64) -> f64 {
    if d <= 30.0 {
        -(q * d.exp_m1()).ln_1p()
    } else {
        -(q.ln() + d + ((1.0 - q) / q * (-d).exp()).ln_1p())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OokCapacityResult {
    pub p_on_star: f64,
    /// Bits per channel use.
    pub c0: f64,
    pub c_bps: f64,
    pub bandwidth: f64,
}

/// Maximizes the mutual information over the on-probability (golden section;
/// the objective is concave) and attaches the rate at bandwidth `alpha / A`.
pub fn capacity_ook(ch: &ShotNoiseChannel, alpha: f64) -> Result<OokCapacityResult> {
    check_area(ch.area)?;
    let bandwidth = alpha / ch.area;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = mutual_information(ch, x1)?;
    let mut f2 = mutual_information(ch, x2)?;
    while hi - lo > P_ON_TOL {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = mutual_information(ch, x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = mutual_information(ch, x2)?;
        }
    }
    let (mut p, mut c0) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    let half = mutual_information(ch, 0.5)?;
    if half > c0 {
        p = 0.5;
        c0 = half;
    }
    Ok(OokCapacityResult {
        p_on_star: p,
        c0,
        c_bps: bandwidth * c0,
        bandwidth,
    })
}

/// How the thermal variance depends on the detector area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThermalVariance {
    /// `sigma_th^2 = N0 alpha / A`, thermal noise over the RC bandwidth.
    BandwidthTied {
        n0: f64,
    },
    Fixed(f64),
}

impl ThermalVariance {
    pub fn at(&self, alpha: f64, area: f64) -> f64 {
        match *self {
            ThermalVariance::BandwidthTied { n0 } => n0 * alpha / area,
            ThermalVariance::Fixed(v) => v,
        }
    }
}

/// Area-independent description of the shot-noise link in count units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseModel {
    pub mu0: f64,
    pub lambda_b: f64,
    pub thermal: ThermalVariance,
    pub alpha: f64,
}

impl ShotNoiseModel {
    /// Converts power-unit intensities and PSD to counts with `photon_scale`.
    pub fn from_power_units(
        mu0: f64,
        lambda_b: f64,
        n0: f64,
        alpha: f64,
        photon_scale: f64,
    ) -> Self {
        ShotNoiseModel {
            mu0: mu0 * photon_scale,
            lambda_b: lambda_b * photon_scale,
            thermal: ThermalVariance::BandwidthTied {
                n0: n0 * photon_scale * photon_scale,
            },
            alpha,
        }
    }

    pub fn channel(&self, area: f64) -> ShotNoiseChannel {
        ShotNoiseChannel {
            mu0: self.mu0,
            lambda_b: self.lambda_b,
            sigma_th_sq: self.thermal.at(self.alpha, area),
            area,
        }
    }

    pub fn capacity(&self, area: f64) -> Result<OokCapacityResult> {
        check_area(area)?;
        capacity_ook(&self.channel(area), self.alpha)
    }
}

/// Numeric capacity-maximizing area over `[a_lo, a_hi]`.
pub fn optimal_area_shotnoise(
    model: &ShotNoiseModel,
    a_lo: f64,
    a_hi: f64,
) -> Result<OptimumReport> {
    find_peak(|a| Ok(model.capacity(a)?.c_bps), a_lo, a_hi)
}
