//! `infogeo`: JSON in, JSON out.
//!
//! Exit codes: 0 when the check passes, 1 on a mathematical violation or
//! witness, 2 on any input or usage error (reported as a JSON error object
//! on stdout).

mod commands;
mod input;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use infogeo::{CharacterizeConfig, CrbMode, FiniteDifference};
use serde::Serialize;

use commands::{Flat, Report};
use input::{Input, InputError};

#[derive(Parser)]
#[command(
    name = "infogeo",
    version,
    about = "Fisher geometry on finite simplices"
)]
struct Cli {
    /// Seed for randomized batteries and probes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the pass/violation threshold of the subcommand.
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Local,
    Global,
}

#[derive(clap::Args)]
struct Step {
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Combine steps h and h/2 by Richardson extrapolation.
    #[arg(long)]
    richardson: bool,
}

impl Step {
    fn scheme(&self) -> FiniteDifference {
        FiniteDifference {
            step: self.step,
            richardson: self.richardson,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fisher information matrix and its inverse.
    Fisher {
        #[arg(long)]
        model: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        xi: Vec<f64>,
    },
    /// Cramér–Rao check for a tuple of estimators.
    Crb {
        #[arg(long)]
        model: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        xi: Vec<f64>,
        /// JSON array of random variables, one per parameter.
        #[arg(long)]
        estimators: PathBuf,
        #[arg(long, value_enum, default_value = "local")]
        mode: Mode,
        /// Lower corner of the parameter box for `--mode global`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lower: Vec<f64>,
        /// Upper corner of the parameter box for `--mode global`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        upper: Vec<f64>,
    },
    /// Push a tangent vector forward through a channel.
    Push {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        vector: PathBuf,
    },
    /// Pull a cotangent vector back through a channel.
    Pull {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        point: PathBuf,
        #[arg(long)]
        vector: PathBuf,
    },
    /// Parallel transport by the flat e- or m-connection.
    Transport {
        #[arg(long)]
        vector: PathBuf,
        /// Target distribution.
        #[arg(long)]
        to: PathBuf,
        #[arg(long, value_enum)]
        connection: Flat,
    },
    /// Duality of the e- and m-connections over all coordinate-field triples.
    Duality {
        #[arg(long)]
        model: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        xi: Vec<f64>,
        #[command(flatten)]
        step: Step,
    },
    /// Run a battery described by a JSON config.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Decompose a candidate family as c1·L2 + c2·MM, or find a witness.
    Characterize {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        #[arg(long, default_value_t = 64)]
        denominator: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Compare α-connections across an embedding pair.
    WeakInvariance {
        /// `{surjection, r}` or `{surjection, q}` for the canonical pair.
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        alpha: f64,
        /// α on the larger simplex; defaults to `--alpha`.
        #[arg(long, allow_negative_numbers = true)]
        alpha_large: Option<f64>,
        /// Lattice denominator of the evaluation grid.
        #[arg(long, default_value_t = 4)]
        grid: usize,
        #[command(flatten)]
        step: Step,
    },
}

fn run(cli: &Cli) -> Input<Report> {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(InputError::new(
                "usage",
                format!("--tol must be positive, got {t}"),
            ));
        }
    }
    match &cli.command {
        Command::Fisher { model, xi } => commands::fisher(model, xi),
        Command::Crb {
            model,
            xi,
            estimators,
            mode,
            lower,
            upper,
        } => {
            let mode = match mode {
                Mode::Local => CrbMode::Local,
                Mode::Global => CrbMode::Global {
                    lower: lower.clone(),
                    upper: upper.clone(),
                },
            };
            commands::crb(model, xi, estimators, mode, cli.tol)
        }
        Command::Push {
            channel,
            point,
            vector,
        } => commands::push(channel, point, vector),
        Command::Pull {
            channel,
            point,
            vector,
        } => commands::pull(channel, point, vector),
        Command::Transport {
            vector,
            to,
            connection,
        } => commands::transport(vector, to, *connection),
        Command::Duality { model, xi, step } => {
            commands::duality(model, xi, step.scheme(), cli.tol)
        }
        Command::Verify { config } => commands::verify(config, cli.seed, cli.tol),
        Command::Characterize {
            family,
            n_max,
            denominator,
            trials,
        } => commands::characterize_family(
            family,
            CharacterizeConfig {
                n_max: *n_max,
                denominator: *denominator,
                trials: *trials,
                seed: cli.seed.unwrap_or(0),
            },
        ),
        Command::WeakInvariance {
            pair,
            alpha,
            alpha_large,
            grid,
            step,
        } => commands::weak_invariance(
            pair,
            *alpha,
            alpha_large.unwrap_or(*alpha),
            *grid,
            step.scheme(),
            cli.tol,
        ),
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: &'a str,
}

#[derive(Serialize)]
struct ErrorOut<'a> {
    error: ErrorBody<'a>,
}

fn render<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn fail(e: &InputError) -> ExitCode {
    let text = render(&ErrorOut {
        error: ErrorBody {
            kind: &e.kind,
            message: &e.message,
        },
    });
    // A closed stdout leaves nothing else to report to.
    let _ = std::io::stdout().write_all(text.as_bytes());
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&InputError::new("usage", e.to_string().trim_end())),
    };
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let text = render(&report.body);
    let written = match &cli.out {
        Some(path) => fs::write(path, &text)
            .map_err(|e| InputError::new("io", format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| InputError::new("io", e.to_string())),
    };
    if let Err(e) = written {
        return fail(&e);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
