//! `polfocus`: effective polarization density matrices from the command line.

mod commands;
mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use commands::{CliError, Command};
use config::{read_config_file, ConfigError, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Physical inputs are SI units, angles are radians.
#[derive(Debug, Parser)]
#[command(name = "polfocus", version, about)]
struct Cli {
    command: Command,

    /// `key = value` lines or a JSON object; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Any parameter as `KEY=VALUE`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Lens half-angle (rad).
    #[arg(long)]
    theta_max: Option<String>,
    /// Aperture radius over focal length.
    #[arg(long)]
    aperture_ratio: Option<String>,
    #[arg(long)]
    focal_length: Option<String>,
    #[arg(long)]
    aperture_radius: Option<String>,
    /// Beam radius (m); sets `delta_r = 1/tau` for wave packets.
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    delta_r: Option<String>,
    #[arg(long)]
    delta_z: Option<String>,
    /// Wavelength (m); exclusive with `k0`.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    k0: Option<String>,
    /// +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    helicity: Option<String>,
    #[arg(long)]
    theta_min: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    pulse_length: Option<String>,
    /// Detection time (s).
    #[arg(long)]
    delta: Option<String>,
    /// Detector plane position (m).
    #[arg(long)]
    z0: Option<String>,
}

impl Cli {
    fn flag_params(&self) -> Result<Params, ConfigError> {
        let mut p = Params::default();
        for item in &self.set {
            let Some((k, v)) = item.split_once('=') else {
                return Err(ConfigError::Invalid(format!("--set expects KEY=VALUE, got `{item}`")));
            };
            p.set(k, v.trim());
        }
        let named = [
            ("theta_max", &self.theta_max),
            ("aperture_ratio", &self.aperture_ratio),
            ("focal_length", &self.focal_length),
            ("aperture_radius", &self.aperture_radius),
            ("tau", &self.tau),
            ("delta_r", &self.delta_r),
            ("delta_z", &self.delta_z),
            ("lambda", &self.lambda),
            ("k0", &self.k0),
            ("helicity", &self.helicity),
            ("theta_min", &self.theta_min),
            ("steps", &self.steps),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("pulse_length", &self.pulse_length),
            ("delta", &self.delta),
            ("z0", &self.z0),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                p.set(k, v.as_str());
            }
        }
        if let Some(tol) = self.tol {
            p.set("tol", tol.to_string());
        }
        Ok(p)
    }

    fn params(&self) -> Result<Params, ConfigError> {
        let mut p = match &self.config {
            Some(path) => read_config_file(path)?,
            None => Params::default(),
        };
        p.merge(self.flag_params()?);
        Ok(p)
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let params = cli.params()?;
    let report = commands::run(cli.command, &params)?;
    let write = |out: &mut dyn Write| -> io::Result<()> {
        let mut out = BufWriter::new(out);
        match cli.format {
            Format::Json => report::write_json(&report, &mut out)?,
            Format::Csv => report::write_csv(&report, &mut out)?,
        }
        out.flush()
    };
    match &cli.out {
        Some(path) => File::create(path)
            .and_then(|mut f| write(&mut f))
            .map_err(|source| CliError::Output {
                path: path.display().to_string(),
                source,
            }),
        None => write(&mut io::stdout().lock()).map_err(|source| CliError::Output {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polfocus: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
