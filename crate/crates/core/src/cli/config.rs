//! Run configuration: defaults, flat `key = value` files and flag overrides.
//!
//! Precedence is flags over file over defaults. The defaults reproduce the
//! reference parameter table (d = 0.1 um, eps_r = 12.95, R = 10 ohm,
//! N0 = 4.11e-21 W/Hz, mu0 = 10 mW, lambda_b = mu0/20, rho = 2 mm,
//! M = 16, A = 1e-9 m^2, array area = 4 mm^2).

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::units::{parse_quantity, Dimension};
use crate::arrays::{ArrayConfig, Combining};
use crate::capacity::ThermalChannel;
use crate::error::{Error, Result};
use crate::fading::FadingModel;
use crate::physics::{BeamParams, NoiseParams, PhotodiodeParams};
use crate::shotnoise::ShotNoiseModel;

/// Curve families the commands can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Thermal,
    Pointing,
    Turbulence,
    Egc,
    Mrc,
    Shotnoise,
}

impl Model {
    pub const ALL: [Model; 6] = [
        Model::Thermal,
        Model::Pointing,
        Model::Turbulence,
        Model::Egc,
        Model::Mrc,
        Model::Shotnoise,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Model::Thermal => "thermal",
            Model::Pointing => "pointing",
            Model::Turbulence => "turbulence",
            Model::Egc => "egc",
            Model::Mrc => "mrc",
            Model::Shotnoise => "shotnoise",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::validation(
                    "model",
                    format!("unknown model `{s}` (thermal|pointing|turbulence|egc|mrc|shotnoise)"),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sweep {
    pub a_lo: f64,
    pub a_hi: f64,
    pub points: usize,
}

/// Everything a command needs, with all omitted values at their defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub photodiode: PhotodiodeParams,
    /// Peak intensity `mu0`.
    pub mu0: f64,
    pub rho: f64,
    pub x0: f64,
    pub y0: f64,
    pub noise: NoiseParams,
    pub sigma_p: f64,
    pub eta: f64,
    pub array_area: f64,
    pub detectors: u64,
    /// Nominal single-detector area.
    pub area: f64,
    pub sweep: Sweep,
    /// Counts per unit power for the shot-noise model.
    pub photon_scale: f64,
    pub model: Model,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mu0 = 10e-3;
        RunConfig {
            photodiode: PhotodiodeParams::default(),
            mu0,
            rho: 2e-3,
            x0: 0.0,
            y0: 0.0,
            noise: NoiseParams {
                n0: 4.11e-21,
                lambda_b: mu0 / 20.0,
            },
            sigma_p: 1e-3,
            eta: 0.4,
            array_area: 4e-6,
            detectors: 16,
            area: 1e-9,
            sweep: Sweep {
                a_lo: 1e-9,
                a_hi: 1e-2,
                points: 200,
            },
            photon_scale: 1e6,
            model: Model::Thermal,
            seed: 1,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn beam(&self) -> BeamParams {
        BeamParams {
            x0: self.x0,
            y0: self.y0,
            ..BeamParams::from_peak_intensity(self.mu0, self.rho)
        }
    }

    pub fn thermal_channel(&self) -> Result<ThermalChannel> {
        ThermalChannel::from_params(&self.photodiode, &self.beam(), &self.noise)
    }

    pub fn fading(&self, model: Model) -> FadingModel {
        match model {
            Model::Pointing => FadingModel::RayleighPointing {
                sigma_p: self.sigma_p,
            },
            Model::Turbulence => FadingModel::NegExpTurbulence { eta: self.eta },
            _ => FadingModel::NoFading,
        }
    }

    pub fn array(&self, scheme: Combining) -> ArrayConfig {
        ArrayConfig {
            total_area: self.array_area,
            n: (self.detectors as f64).sqrt().round() as u32,
            scheme,
            beam: self.beam(),
        }
    }

    pub fn shot_noise(&self) -> ShotNoiseModel {
        ShotNoiseModel::from_power_units(
            self.mu0,
            self.noise.lambda_b,
            self.noise.n0,
            self.photodiode.alpha(),
            self.photon_scale,
        )
    }

    /// Checks every invariant; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        self.photodiode.validate()?;
        positive("mu0", self.mu0)?;
        positive("rho", self.rho)?;
        finite("x0", self.x0)?;
        finite("y0", self.y0)?;
        self.noise.validate()?;
        positive("sigma_p", self.sigma_p)?;
        positive("eta", self.eta)?;
        positive("array_area", self.array_area)?;
        positive("area", self.area)?;
        positive("photon_scale", self.photon_scale)?;
        let n = (self.detectors as f64).sqrt().round() as u64;
        if self.detectors == 0 || n * n != self.detectors {
            return Err(Error::validation(
                "detectors",
                format!("must be a positive perfect square, got {}", self.detectors),
            ));
        }
        positive("a_lo", self.sweep.a_lo)?;
        positive("a_hi", self.sweep.a_hi)?;
        if self.sweep.a_lo >= self.sweep.a_hi {
            return Err(Error::validation("a_lo", "sweep requires a_lo < a_hi"));
        }
        if self.sweep.points < 2 {
            return Err(Error::validation("points", "sweep needs at least 2 points"));
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let q = |dim| parse_quantity(value, dim);
        match key {
            "d" => self.photodiode.d = q(Dimension::Length)?,
            "eps0" => self.photodiode.eps0 = q(Dimension::Permittivity)?,
            "eps_r" => self.photodiode.eps_r = q(Dimension::Dimensionless)?,
            "R" => self.photodiode.resistance = q(Dimension::Resistance)?,
            "nu_bar" => {
                self.photodiode.nu_bar = match value.trim() {
                    "none" | "" => None,
                    _ => Some(q(Dimension::Velocity)?),
                }
            }
            "mu0" => self.mu0 = q(Dimension::Intensity)?,
            "N0" => self.noise.n0 = q(Dimension::Psd)?,
            "lambda_b" => self.noise.lambda_b = self.parse_background(value)?,
            "rho" => self.rho = q(Dimension::Length)?,
            "x0" => self.x0 = q(Dimension::Length)?,
            "y0" => self.y0 = q(Dimension::Length)?,
            "sigma_p" => self.sigma_p = q(Dimension::Length)?,
            "eta" => self.eta = q(Dimension::Dimensionless)?,
            "array_area" => self.array_area = q(Dimension::Area)?,
            "detectors" | "M" => self.detectors = parse_count(value)?,
            "A" | "area" => self.area = q(Dimension::Area)?,
            "a_lo" => self.sweep.a_lo = q(Dimension::Area)?,
            "a_hi" => self.sweep.a_hi = q(Dimension::Area)?,
            "points" => self.sweep.points = parse_count(value)? as usize,
            "photon_scale" => self.photon_scale = q(Dimension::Dimensionless)?,
            "model" => self.model = value.parse().map_err(|e: Error| e.to_string())?,
            "seed" => self.seed = parse_count(value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    // `lambda_b` accepts `mu0/N` relative to the current peak intensity
    fn parse_background(&self, value: &str) -> std::result::Result<f64, String> {
        let v = value.trim();
        if let Some(rest) = v.strip_prefix("mu0/") {
            let div = parse_quantity(rest, Dimension::Dimensionless)?;
            if div == 0.0 {
                return Err("division by zero in `mu0/N`".into());
            }
            return Ok(self.mu0 / div);
        }
        parse_quantity(v, Dimension::Intensity)
    }
}

fn parse_count(value: &str) -> std::result::Result<u64, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("expected a non-negative integer, found `{}`", value.trim()))
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

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, "must be finite"))
    }
}

/// Parses a config file body. Blank lines and `#` comments are skipped;
/// `lambda_b = mu0/N` is resolved after all other keys, so its position in
/// the file does not matter.
pub fn parse_config_text(
    text: &str,
    base: RunConfig,
) -> Result<(RunConfig, Vec<(String, String)>)> {
    let mut cfg = base;
    let mut entries = Vec::new();
    let mut deferred = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: format!("expected `key = value`, found `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key == "lambda_b" {
            deferred = Some((idx + 1, value.to_string()));
        } else {
            cfg.set(key, value)
                .map_err(|msg| Error::Parse { line: idx + 1, msg })?;
        }
        entries.push((key.to_string(), value.to_string()));
    }
    if let Some((line, value)) = deferred {
        cfg.set("lambda_b", &value)
            .map_err(|msg| Error::Parse { line, msg })?;
    } else if entries.iter().any(|(k, _)| k == "mu0") {
        // keep the default background ratio tied to the configured mu0
        cfg.noise.lambda_b = cfg.mu0 / 20.0;
    }
    Ok((cfg, entries))
}

/// Flag-level overrides, applied after the file. Values are raw strings so
/// they accept the same unit suffixes as the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub values: Vec<(&'static str, String)>,
}

impl Overrides {
    pub fn push(&mut self, key: &'static str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.values.push((key, v.to_string()));
        }
    }
}

/// Builds the configuration from defaults, an optional file and overrides,
/// then validates it.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = path {
        let text =
            std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        cfg = parse_config_text(&text, cfg)?.0;
    }
    let mut lambda = None;
    for (key, value) in &overrides.values {
        if *key == "lambda_b" {
            lambda = Some(value.clone());
            continue;
        }
        cfg.set(key, value)
            .map_err(|msg| Error::validation(*key, msg))?;
    }
    if let Some(v) = lambda {
        cfg.set("lambda_b", &v)
            .map_err(|msg| Error::validation("lambda_b", msg))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default_link() {
        let (cfg, entries) = parse_config_text("", RunConfig::default()).unwrap();
        assert!(entries.is_empty());
        assert_eq!(cfg.noise.n0, 4.11e-21);
        assert_eq!(cfg.rho, 2e-3);
        assert_eq!(cfg.array_area, 4e-6);
        assert_eq!(cfg.detectors, 16);
        assert_eq!(cfg.photodiode.d, 0.1e-6);
        assert_eq!(cfg.photodiode.eps_r, 12.95);
        assert_eq!(cfg.photodiode.resistance, 10.0);
        assert_eq!(cfg.mu0, 0.01);
        assert_eq!(cfg.area, 1e-9);
        assert_eq!(cfg.noise.lambda_b, 0.01 / 20.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn parses_units_comments_and_relative_background() {
        let text = "# receiver\nlambda_b = mu0/3\nrho = 3 mm   # spot\nmu0 = 20mW\narray_area = 9mm2\nM = 9\n";
        let (cfg, _) = parse_config_text(text, RunConfig::default()).unwrap();
        assert!((cfg.rho - 3e-3).abs() < 1e-18);
        assert!((cfg.mu0 - 0.02).abs() < 1e-17);
        assert!((cfg.noise.lambda_b - 0.02 / 3.0).abs() < 1e-17);
        assert!((cfg.array_area - 9e-6).abs() < 1e-20);
        assert_eq!(cfg.detectors, 9);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config_text("rho = 2mm\nbogus = 1\n", RunConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_config_text("rho 2mm\n", RunConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_config_text("\nrho = 2 kg\n", RunConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn negative_rho_names_the_field() {
        let mut o = Overrides::default();
        o.push("rho", Some("-2mm"));
        match load_config(None, &o).unwrap_err() {
            Error::Validation { field, .. } => assert_eq!(field, "rho"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn non_square_detectors_rejected() {
        let mut o = Overrides::default();
        o.push("detectors", Some(15));
        assert!(matches!(
            load_config(None, &o),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "rho = 3mm\neta = 0.2\n").unwrap();
        let mut o = Overrides::default();
        o.push("rho", Some("5mm"));
        let cfg = load_config(Some(&path), &o).unwrap();
        assert!((cfg.rho - 5e-3).abs() < 1e-18);
        assert_eq!(cfg.eta, 0.2);
    }

    #[test]
    fn model_names_round_trip() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert!("laser".parse::<Model>().is_err());
    }
}
