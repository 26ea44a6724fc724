//! `curve`, `optimal` and `select`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Model, RunConfig};
use super::units::{parse_quantity, Dimension};
use crate::arrays::{self, Combining};
use crate::capacity::{self, log_space, OptimumMethod, ThermalChannel};
use crate::error::{Error, Result};
use crate::fading::{self, FadingModel};
use crate::shotnoise;

pub const CSV_HEADER: &str = "area_m2,bandwidth_hz,snr_or_c0,capacity_bps";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub area: f64,
    pub bandwidth: f64,
    /// SNR for the Gaussian models, `c0` (bits/use) for shot noise.
    pub snr_or_c0: f64,
    pub capacity_bps: f64,
}

/// Per-area evaluator for `model`, shared by sweeps and single-point queries.
pub type RowEvaluator = Box<dyn Fn(f64) -> Result<CurveRow> + Send + Sync>;

/// Builds the evaluator for `model`. Array models are evaluated with the
/// combining constants of the configured tiling.
pub fn row_evaluator(cfg: &RunConfig, model: Model) -> Result<RowEvaluator> {
    let alpha = cfg.photodiode.alpha();
    Ok(match model {
        Model::Thermal | Model::Pointing | Model::Turbulence => {
            let ch = cfg.thermal_channel()?;
            let beam = cfg.beam();
            let fm = cfg.fading(model);
            fm.validate()?;
            Box::new(move |a| {
                let c = fading::ergodic_capacity(&ch, &beam, &fm, a)?.ergodic_capacity_bps;
                Ok(CurveRow {
                    area: a,
                    bandwidth: alpha / a,
                    snr_or_c0: ch.snr(a),
                    capacity_bps: c,
                })
            })
        }
        Model::Egc => {
            let sig = arrays::array_signal(&cfg.array(Combining::Egc), &cfg.noise)?;
            let total = cfg.array_area;
            Box::new(move |a| {
                Ok(CurveRow {
                    area: a,
                    bandwidth: alpha / a,
                    snr_or_c0: arrays::egc_snr(sig.beta1, alpha, total, a),
                    capacity_bps: arrays::capacity_egc(&sig, alpha, total, a)?,
                })
            })
        }
        Model::Mrc => {
            let sig = arrays::array_signal(&cfg.array(Combining::Mrc), &cfg.noise)?;
            Box::new(move |a| {
                Ok(CurveRow {
                    area: a,
                    bandwidth: alpha / a,
                    snr_or_c0: arrays::mrc_snr(sig.beta2, alpha, a),
                    capacity_bps: arrays::capacity_mrc(&sig, alpha, a)?,
                })
            })
        }
        Model::Shotnoise => {
            let sn = cfg.shot_noise();
            Box::new(move |a| {
                let r = sn.capacity(a)?;
                Ok(CurveRow {
                    area: a,
                    bandwidth: r.bandwidth,
                    snr_or_c0: r.c0,
                    capacity_bps: r.c_bps,
                })
            })
        }
    })
}

/// Evaluates `model` over the log-spaced sweep. Array models clip the sweep
/// to the array area. Any failing row aborts the whole sweep.
pub fn curve_rows(cfg: &RunConfig, model: Model) -> Result<Vec<CurveRow>> {
    cfg.validate()?;
    let mut a_hi = cfg.sweep.a_hi;
    if matches!(model, Model::Egc | Model::Mrc) {
        a_hi = a_hi.min(cfg.array_area);
        if cfg.sweep.a_lo >= a_hi {
            return Err(Error::Validation {
                field: "a_lo".into(),
                msg: format!(
                    "sweep start {:e} is not below the array area {:e}",
                    cfg.sweep.a_lo, a_hi
                ),
            });
        }
    }
    let grid = log_space(cfg.sweep.a_lo, a_hi, cfg.sweep.points);
    let eval = row_evaluator(cfg, model)?;
    // indexed collect keeps the sweep order regardless of scheduling
    grid.par_iter().map(|&a| eval(a)).collect()
}

/// CSV text for `model`: header plus one row per sweep point, `\n` endings,
/// every value printed with 17 significant digits.
pub fn cmd_curve(cfg: &RunConfig, model: Model) -> Result<String> {
    let rows = curve_rows(cfg, model)?;
    Ok(render_csv(&rows))
}

pub fn render_csv(rows: &[CurveRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            r.area, r.bandwidth, r.snr_or_c0, r.capacity_bps
        );
    }
    out
}

/// gnuplot script plotting capacity against area from `csv_path`.
pub fn gnuplot_script(csv_path: &str, model: Model) -> String {
    format!(
        "set datafile separator ','\n\
         set logscale x\n\
         set format x '10^{{%L}}'\n\
         set xlabel 'Detector area (m^2)'\n\
         set ylabel 'Capacity (bit/s)'\n\
         set key top left\n\
         plot '{csv_path}' every ::1 using 1:4 with lines title '{}'\n",
        model.name()
    )
}

/// Result of `optimal`. Fading reports carry both the closed-form area and
/// the numeric argmax of the ergodic capacity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalReport {
    pub model: Model,
    pub method: OptimumMethod,
    pub area_star: f64,
    pub capacity_star: f64,
    pub closed_form_area: Option<f64>,
    pub capacity_at_closed_form: Option<f64>,
    pub numeric_area: Option<f64>,
    pub area_gap_percent: Option<f64>,
    pub capacity_ratio: Option<f64>,
    pub p_on_star: Option<f64>,
    pub note: Option<String>,
}

impl OptimalReport {
    fn closed_form(model: Model, area_star: f64, capacity_star: f64) -> Self {
        OptimalReport {
            model,
            method: OptimumMethod::ClosedForm,
            area_star,
            capacity_star,
            closed_form_area: Some(area_star),
            capacity_at_closed_form: Some(capacity_star),
            numeric_area: None,
            area_gap_percent: None,
            capacity_ratio: None,
            p_on_star: None,
            note: None,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model: {}", self.model.name());
        let _ = writeln!(s, "method: {:?}", self.method);
        let _ = writeln!(s, "area_star_m2: {:.6e}", self.area_star);
        let _ = writeln!(s, "capacity_star_bps: {:.6e}", self.capacity_star);
        if self.method == OptimumMethod::GridGolden {
            if let Some(a) = self.closed_form_area {
                let _ = writeln!(s, "closed_form_area_m2: {a:.6e}");
            }
            if let Some(c) = self.capacity_at_closed_form {
                let _ = writeln!(s, "capacity_at_closed_form_bps: {c:.6e}");
            }
        }
        if let Some(g) = self.area_gap_percent {
            let _ = writeln!(s, "area_gap: {g:+.3}%");
        }
        if let Some(r) = self.capacity_ratio {
            let _ = writeln!(s, "capacity_ratio: {r:.6}");
        }
        if let Some(p) = self.p_on_star {
            let _ = writeln!(s, "p_on_star: {p:.6}");
        }
        if let Some(n) = &self.note {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

pub fn cmd_optimal(cfg: &RunConfig, model: Model) -> Result<OptimalReport> {
    cfg.validate()?;
    let alpha = cfg.photodiode.alpha();
    match model {
        Model::Thermal => {
            let r = capacity::optimal_area_thermal(&cfg.thermal_channel()?);
            Ok(OptimalReport::closed_form(
                model,
                r.area_star,
                r.capacity_star,
            ))
        }
        Model::Pointing | Model::Turbulence => {
            let ch = cfg.thermal_channel()?;
            let fo = fading::fading_optimum(
                &ch,
                &cfg.beam(),
                &cfg.fading(model),
                cfg.sweep.a_lo,
                cfg.sweep.a_hi,
            )?;
            Ok(OptimalReport {
                model,
                method: OptimumMethod::GridGolden,
                area_star: fo.numeric.area_star,
                capacity_star: fo.numeric.capacity_star,
                closed_form_area: Some(fo.closed_form_area),
                capacity_at_closed_form: Some(fo.capacity_at_closed_form),
                numeric_area: Some(fo.numeric.area_star),
                area_gap_percent: Some(100.0 * fo.area_gap),
                capacity_ratio: Some(fo.capacity_ratio),
                p_on_star: None,
                note: None,
            })
        }
        Model::Egc => {
            let sig = arrays::array_signal(&cfg.array(Combining::Egc), &cfg.noise)?;
            let a = arrays::optimal_area_egc(sig.beta1, alpha, cfg.array_area);
            if a > cfg.array_area {
                // capacity rises monotonically on (0, array_area] in this case
                let c = arrays::capacity_egc(&sig, alpha, cfg.array_area, cfg.array_area)?;
                let mut r = OptimalReport::closed_form(model, cfg.array_area, c);
                r.closed_form_area = Some(a);
                r.capacity_at_closed_form = None;
                r.note = Some(format!(
                    "unconstrained optimum {a:.6e} m^2 exceeds the array area; using a single detector"
                ));
                return Ok(r);
            }
            let c = arrays::capacity_egc(&sig, alpha, cfg.array_area, a)?;
            Ok(OptimalReport::closed_form(model, a, c))
        }
        Model::Mrc => {
            let sig = arrays::array_signal(&cfg.array(Combining::Mrc), &cfg.noise)?;
            let a = arrays::optimal_area_mrc(sig.beta2, alpha);
            let c = arrays::capacity_mrc(&sig, alpha, a)?;
            let mut r = OptimalReport::closed_form(model, a, c);
            if a > cfg.array_area {
                r.note = Some("optimum exceeds the array area".into());
            }
            Ok(r)
        }
        Model::Shotnoise => {
            let sn = cfg.shot_noise();
            let r = shotnoise::optimal_area_shotnoise(&sn, cfg.sweep.a_lo, cfg.sweep.a_hi)?;
            let at = sn.capacity(r.area_star)?;
            Ok(OptimalReport {
                model,
                method: r.method,
                area_star: r.area_star,
                capacity_star: r.capacity_star,
                closed_form_area: None,
                capacity_at_closed_form: None,
                numeric_area: Some(r.area_star),
                area_gap_percent: None,
                capacity_ratio: None,
                p_on_star: Some(at.p_on_star),
                note: None,
            })
        }
    }
}

/// Labelled candidate detectors, strictly increasing in area.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorBank {
    pub entries: Vec<(String, f64)>,
}

impl DetectorBank {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        let bank = DetectorBank { entries };
        bank.validate()?;
        Ok(bank)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::Validation {
                field: "bank".into(),
                msg,
            })
        };
        if self.entries.is_empty() {
            return bad("detector bank is empty".into());
        }
        for (label, a) in &self.entries {
            if !(*a > 0.0 && a.is_finite()) {
                return bad(format!("area of `{label}` must be > 0, got {a}"));
            }
        }
        for w in self.entries.windows(2) {
            if w[1].1 <= w[0].1 {
                return bad(format!(
                    "areas must be strictly increasing (`{}` after `{}`)",
                    w[1].0, w[0].0
                ));
            }
        }
        Ok(())
    }

    /// Parses `label:area,label:area,...`; areas take unit suffixes.
    pub fn parse(text: &str) -> Result<Self> {
        let entries = text
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|item| {
                let (label, area) = item.split_once(':').ok_or_else(|| Error::Validation {
                    field: "bank".into(),
                    msg: format!("expected `label:area`, found `{}`", item.trim()),
                })?;
                let area =
                    parse_quantity(area, Dimension::Area).map_err(|msg| Error::Validation {
                        field: "bank".into(),
                        msg,
                    })?;
                Ok((label.trim().to_string(), area))
            })
            .collect::<Result<Vec<_>>>()?;
        DetectorBank::new(entries)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub label: String,
    pub area: f64,
    pub capacity_bps: f64,
    /// Capacity of every candidate, in bank order.
    pub scores: Vec<(String, f64)>,
}

/// Picks the bank entry with the highest capacity at `intensity_estimate`
/// (a peak intensity, same units as `mu0`). Ties go to the smaller area.
pub fn cmd_select(
    bank: &DetectorBank,
    intensity_estimate: f64,
    cfg: &RunConfig,
) -> Result<Selection> {
    bank.validate()?;
    if !(intensity_estimate > 0.0 && intensity_estimate.is_finite()) {
        return Err(Error::Validation {
            field: "intensity".into(),
            msg: format!("must be > 0, got {intensity_estimate}"),
        });
    }
    let mut est = cfg.clone();
    est.mu0 = intensity_estimate;
    est.validate()?;
    let capacity: Box<dyn Fn(f64) -> Result<f64>> = match cfg.model {
        Model::Thermal | Model::Pointing | Model::Turbulence => {
            let ch: ThermalChannel = est.thermal_channel()?;
            let beam = est.beam();
            let fm: FadingModel = est.fading(cfg.model);
            Box::new(
                move |a| Ok(fading::ergodic_capacity(&ch, &beam, &fm, a)?.ergodic_capacity_bps),
            )
        }
        Model::Shotnoise => {
            let sn = est.shot_noise();
            Box::new(move |a| Ok(sn.capacity(a)?.c_bps))
        }
        Model::Egc | Model::Mrc => {
            return Err(Error::Validation {
                field: "model".into(),
                msg: "detector selection applies to single-detector models".into(),
            })
        }
    };
    let mut scores = Vec::with_capacity(bank.entries.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, (label, a)) in bank.entries.iter().enumerate() {
        let c = capacity(*a)?;
        scores.push((label.clone(), c));
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((i, c));
        }
    }
    let (i, c) = best.expect("bank is nonempty");
    Ok(Selection {
        label: bank.entries[i].0.clone(),
        area: bank.entries[i].1,
        capacity_bps: c,
        scores,
    })
}
