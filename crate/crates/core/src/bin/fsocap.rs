use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fso_capacity::cli::commands::gnuplot_script;
use fso_capacity::cli::units::{parse_quantity, Dimension};
use fso_capacity::cli::{self, load_config, DetectorBank, Overrides, RunConfig, ValidateOptions};
use fso_capacity::Error;

/// Capacity versus photodetector area for free-space optical links.
#[derive(Parser)]
#[command(name = "fsocap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// thermal | pointing | turbulence | egc | mrc | shotnoise
    #[arg(long, global = true)]
    model: Option<String>,
    /// Peak intensity, e.g. `10mW`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    mu0: Option<String>,
    /// Beam radius, e.g. `2mm`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    rho: Option<String>,
    /// Pointing-error scale, e.g. `1mm`.
    #[arg(long = "sigma-p", global = true, allow_hyphen_values = true)]
    sigma_p: Option<String>,
    /// Mean turbulence gain.
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta: Option<String>,
    /// Background intensity, absolute or `mu0/N`.
    #[arg(long = "lambda-b", global = true, allow_hyphen_values = true)]
    lambda_b: Option<String>,
    /// Total array area, e.g. `4mm2`.
    #[arg(long = "array-area", global = true, allow_hyphen_values = true)]
    array_area: Option<String>,
    /// Number of array elements (a perfect square).
    #[arg(long, global = true)]
    detectors: Option<u64>,
    /// Sweep start area.
    #[arg(long = "a-lo", global = true, allow_hyphen_values = true)]
    a_lo: Option<String>,
    /// Sweep end area.
    #[arg(long = "a-hi", global = true, allow_hyphen_values = true)]
    a_hi: Option<String>,
    /// Sweep points.
    #[arg(long, global = true)]
    points: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity over a log-spaced area sweep, as CSV.
    Curve {
        /// Also write a gnuplot script for the CSV to this path.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Capacity-maximizing area.
    Optimal {
        /// Print only the JSON record.
        #[arg(long)]
        json: bool,
    },
    /// Choose the best detector of a bank for an intensity estimate.
    Select {
        /// `label:area,...`, areas strictly increasing.
        #[arg(long)]
        bank: String,
        /// Estimated peak intensity; defaults to the configured `mu0`.
        #[arg(long)]
        intensity: Option<String>,
    },
    /// Run the built-in self checks.
    Validate {
        #[arg(long, hide = true)]
        inject_gamma0: Option<f64>,
    },
}

impl Common {
    fn overrides(&self) -> Overrides {
        let mut o = Overrides::default();
        o.push("seed", self.seed);
        o.push("model", self.model.as_ref());
        o.push("mu0", self.mu0.as_ref());
        o.push("rho", self.rho.as_ref());
        o.push("sigma_p", self.sigma_p.as_ref());
        o.push("eta", self.eta.as_ref());
        o.push("lambda_b", self.lambda_b.as_ref());
        o.push("array_area", self.array_area.as_ref());
        o.push("detectors", self.detectors);
        o.push("a_lo", self.a_lo.as_ref());
        o.push("a_hi", self.a_hi.as_ref());
        o.push("points", self.points);
        o.push("out", self.out.as_ref().map(|p| p.display()));
        o
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), Error> {
    match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(args: Cli) -> Result<ExitCode, Error> {
    let cfg = load_config(args.common.config.as_deref(), &args.common.overrides())?;
    match args.command {
        Command::Curve { plot } => {
            let csv = cli::cmd_curve(&cfg, cfg.model)?;
            emit(&cfg, &csv)?;
            if let Some(p) = plot {
                let data = cfg
                    .out
                    .as_ref()
                    .map(|o| o.display().to_string())
                    .unwrap_or_else(|| "curve.csv".into());
                std::fs::write(&p, gnuplot_script(&data, cfg.model))
                    .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            }
        }
        Command::Optimal { json } => {
            let r = cli::cmd_optimal(&cfg, cfg.model)?;
            let text = if json {
                format!("{}\n", r.to_json())
            } else {
                format!("{}{}\n", r.to_text(), r.to_json())
            };
            emit(&cfg, &text)?;
        }
        Command::Select { bank, intensity } => {
            let bank = DetectorBank::parse(&bank)?;
            let est = match intensity {
                Some(t) => {
                    parse_quantity(&t, Dimension::Intensity).map_err(|msg| Error::Validation {
                        field: "intensity".into(),
                        msg,
                    })?
                }
                None => cfg.mu0,
            };
            let s = cli::cmd_select(&bank, est, &cfg)?;
            let mut text = format!(
                "selected: {} ({:.6e} m^2, {:.6e} bit/s)\n",
                s.label, s.area, s.capacity_bps
            );
            text.push_str(&serde_json::to_string(&s).expect("selection serializes"));
            text.push('\n');
            emit(&cfg, &text)?;
        }
        Command::Validate { inject_gamma0 } => {
            let opts = ValidateOptions {
                gamma0_override: inject_gamma0,
            };
            let s = cli::cmd_validate(&cfg, &opts)?;
            emit(&cfg, &format!("{}{}\n", s.to_text(), s.to_json()))?;
            if !s.all_pass {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
