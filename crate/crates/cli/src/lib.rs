//! Command-line front end for texture distillation: contourlet decomposition,
//! statistical texture extraction, loss evaluation and synthetic data.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use texkd::synth::{Pattern, SynthSpec};

pub use commands::{cmd_decompose, cmd_loss, cmd_pipeline, cmd_stats, cmd_synth, run_pipeline};
pub use config::RunConfig;
pub use error::{CliError, EXIT_IO, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "texkd", version, about = "Structural and statistical texture distillation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Contourlet-decompose a feature map into directional subband files.
    Decompose {
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Sample regions and write statistical texture descriptors.
    Stats {
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Reuse a previously emitted sample set instead of sampling.
        #[arg(long)]
        sampleset: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Compare a teacher and a student artifact directory.
    Loss {
        teacher: PathBuf,
        student: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run every branch on a teacher and a student map and report the losses.
    Pipeline {
        teacher: PathBuf,
        student: PathBuf,
        /// Also write `teacher/` and `student/` artifact directories here.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write a synthetic teacher/student pair.
    Synth {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = PatternKind::Grating)]
        pattern: PatternKind,
        #[arg(long, default_value_t = 3)]
        channels: usize,
        #[arg(long, default_value_t = 32)]
        height: usize,
        #[arg(long, default_value_t = 32)]
        width: usize,
        /// Student noise standard deviation.
        #[arg(long, default_value_t = 0.1)]
        sigma: f32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Constant value.
        #[arg(long, default_value_t = 0.5)]
        value: f32,
        /// Grating orientation in degrees; 90 gives vertical stripes.
        #[arg(long, default_value_t = 90.0)]
        angle: f64,
        /// Grating periods across the map.
        #[arg(long, default_value_t = 4.0)]
        cycles: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PatternKind {
    Constant,
    Ramp,
    Grating,
    Bimodal,
    Noise,
}

/// Tunables shared by the pipeline commands. Flags override `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// `key = value` file; `#` starts a comment.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Quantization levels N.
    #[arg(long)]
    pub n_levels: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    /// Sparse/dense count-ratio threshold, or `auto` for 1/(2N).
    #[arg(long)]
    pub delta: Option<String>,
    /// Directional tree depth per pyramid level, comma separated.
    #[arg(long)]
    pub levels_m: Option<String>,
    /// Pyramid downsampling factor.
    #[arg(long)]
    pub p: Option<String>,
    /// Sampled points M.
    #[arg(long)]
    pub m_total: Option<String>,
    /// Candidate over-generation factor.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub iterations: Option<String>,
    #[arg(long)]
    pub anchor_scales: Option<String>,
    #[arg(long)]
    pub aspect_ratios: Option<String>,
    #[arg(long)]
    pub lambda1: Option<String>,
    #[arg(long)]
    pub lambda2: Option<String>,
    #[arg(long)]
    pub lambda3: Option<String>,
    #[arg(long)]
    pub lambda4: Option<String>,
    #[arg(long)]
    pub ignore_index: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("n_levels", &self.n_levels),
            ("alpha", &self.alpha),
            ("theta", &self.theta),
            ("delta", &self.delta),
            ("levels_m", &self.levels_m),
            ("p", &self.p),
            ("m_total", &self.m_total),
            ("k", &self.k),
            ("beta", &self.beta),
            ("tau", &self.tau),
            ("iterations", &self.iterations),
            ("anchor_scales", &self.anchor_scales),
            ("aspect_ratios", &self.aspect_ratios),
            ("lambda1", &self.lambda1),
            ("lambda2", &self.lambda2),
            ("lambda3", &self.lambda3),
            ("lambda4", &self.lambda4),
            ("ignore_index", &self.ignore_index),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let emit = |out: &mut dyn Write, paths: Vec<PathBuf>| {
        for p in paths {
            let _ = writeln!(out, "wrote {}", p.display());
        }
    };
    match command {
        Command::Decompose { input, out: dir, config } => {
            let paths = cmd_decompose(&input, &config.resolve()?, &dir)?;
            emit(out, paths);
        }
        Command::Stats { input, out: dir, sampleset, config } => {
            let paths = cmd_stats(&input, &config.resolve()?, sampleset.as_deref(), &dir)?;
            emit(out, paths);
        }
        Command::Loss { teacher, student, config } => {
            let outcome = cmd_loss(&teacher, &student, &config.resolve()?)?;
            let _ = out.write_all(outcome.to_text().as_bytes());
        }
        Command::Pipeline { teacher, student, out: dir, config } => {
            let outcome = cmd_pipeline(&teacher, &student, &config.resolve()?, dir.as_deref())?;
            let _ = out.write_all(outcome.to_text().as_bytes());
        }
        Command::Synth { out: dir, pattern, channels, height, width, sigma, seed, value, angle, cycles } => {
            let pattern = match pattern {
                PatternKind::Constant => Pattern::Constant(value),
                PatternKind::Ramp => Pattern::Ramp,
                PatternKind::Grating => Pattern::Grating { angle_deg: angle, cycles },
                PatternKind::Bimodal => Pattern::Bimodal { low: 0.2, high: 0.8, spread: 0.05 },
                PatternKind::Noise => Pattern::Noise,
            };
            let spec = SynthSpec { pattern, channels, height, width, sigma, seed };
            emit(out, cmd_synth(&spec, &dir)?.to_vec());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
