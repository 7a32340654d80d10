//! Command-line workflows for the `wgspdc-core` toolkit: project
//! configuration, dataset readers and writers, reports and run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::ProjectConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "wgspdc", version, about = "Model and characterize multimode waveguide photon-pair sources")]
pub struct Cli {
    /// Project configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the geometric dispersion table to identified SFG processes.
    Calibrate {
        /// SFG observations; defaults to calibration.sfg_csv.
        #[arg(long)]
        sfg: Option<PathBuf>,
    },
    /// Export phase-matching bands of the calibrated model.
    Bands(SpectralArgs),
    /// Export the joint spectrum with pump envelope, filters and mode weights.
    Jsa(SpectralArgs),
    /// Intensity overlap of two measured transverse profiles.
    Overlap { first: PathBuf, second: PathBuf },
    /// Knife-edge beam-quality workflow.
    #[command(subcommand)]
    Knife(KnifeCommand),
    /// Polarization-entanglement workflow.
    #[command(subcommand)]
    Bell(BellCommand),
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    /// Calibrated table; defaults to dispersion.table_file.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Comma-separated pump modes, e.g. `00`; overrides the configuration.
    #[arg(long, value_delimiter = ',')]
    pub pump_modes: Option<Vec<String>>,
    /// Cells below this fraction of a layer's peak are left out of the
    /// layer export.
    #[arg(long, default_value_t = 1e-3)]
    pub threshold: f64,
}

#[derive(Debug, Subcommand)]
pub enum KnifeCommand {
    /// Synthesize seeded knife-edge scans for the configured beam.
    Synth {
        /// Partially coherent beam of this M², replacing the configured profile.
        #[arg(long, conflicts_with = "mode_weights")]
        m2: Option<f64>,
        /// Comma-separated Hermite-Gauss order weights, replacing the configured profile.
        #[arg(long, value_delimiter = ',')]
        mode_weights: Option<Vec<f64>>,
    },
    /// Fit every plane of a scan file.
    Fit {
        #[arg(long)]
        scan: PathBuf,
    },
    /// Caustic fit and ISO sampling check from fitted planes.
    M2 {
        #[arg(long)]
        planes: PathBuf,
        /// Defaults to knife.lambda_nm.
        #[arg(long)]
        lambda_nm: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BellCommand {
    /// Simulate coincidence counts for the configured state.
    Simulate {
        #[arg(long, value_enum, default_value_t = Plan::Chsh)]
        plan: Plan,
    },
    /// Fringe visibilities, one per fixed arm-1 setting.
    Visibility {
        #[arg(long)]
        counts: PathBuf,
        /// Skip accidental subtraction and power correction.
        #[arg(long)]
        raw: bool,
    },
    /// CHSH parameter from the sixteen standard settings.
    Chsh {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        raw: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Plan {
    /// Sixteen CHSH settings.
    Chsh,
    /// Arm-2 fringe scans behind six reference polarizations on arm 1.
    References,
}

/// Shared state of one invocation.
#[derive(Debug)]
pub struct Context {
    pub config: Option<ProjectConfig>,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn new(cli: &Cli) -> CliResult<Self> {
        let config = cli.config.as_deref().map(ProjectConfig::load).transpose()?;
        let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
        std::fs::create_dir_all(&cli.out_dir).map_err(|e| CliError::io(&cli.out_dir, e))?;
        Ok(Self {
            config,
            config_path: cli.config.clone(),
            seed,
            out_dir: cli.out_dir.clone(),
        })
    }

    pub fn config(&self) -> CliResult<&ProjectConfig> {
        self.config
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs --config".into()))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn manifest(&self, command: &str) -> manifest::ManifestBuilder {
        let mut m = manifest::ManifestBuilder::new(command);
        if let Some(p) = &self.config_path {
            m.config(p);
        }
        m
    }
}

/// Runs one invocation and returns the text printed on success.
pub fn run(cli: &Cli) -> CliResult<String> {
    let ctx = Context::new(cli)?;
    match &cli.command {
        Command::Calibrate { sfg } => commands::calibrate::run(&ctx, sfg.as_deref()),
        Command::Bands(a) => commands::spectral::bands(&ctx, a),
        Command::Jsa(a) => commands::spectral::jsa(&ctx, a),
        Command::Overlap { first, second } => commands::spectral::overlap(&ctx, first, second),
        Command::Knife(k) => commands::knife::run(&ctx, k),
        Command::Bell(b) => commands::bell::run(&ctx, b),
    }
}

/// Parses `args` (without the program name) and runs them.
pub fn run_args<I, S>(args: I) -> CliResult<String>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("wgspdc")).chain(args.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Config(e.to_string()))?;
    run(&cli)
}

pub(crate) fn display(p: &Path) -> String {
    p.display().to_string()
}
