//! Command-line entry points, run configuration and the model container.

pub mod commands;
pub mod config;
pub mod container;
pub mod synth;

use std::ffi::OsString;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_eval, cmd_gradcheck, cmd_synth, cmd_tag, cmd_train, GradcheckOptions, TrainSummary};
pub use config::{RunConfig, Settings, Task};
pub use container::{load_model, read_model, save_model, write_model, MAGIC, VERSION};

use crate::error::Error;

#[derive(Parser, Debug)]
#[command(name = "edgecrf", version, about = "Recurrent neural CRF sequence labeling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// Config file with `key = value` lines; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

impl Common {
    fn resolve(&self) -> crate::Result<RunConfig> {
        let base = match &self.config {
            Some(p) => Settings::from_config_file(p)?,
            None => Settings::default(),
        };
        RunConfig::resolve(&base.overlay(self.settings.clone()))
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a model and write it with --model-out
    Train(Common),
    /// Append predicted labels to CoNLL input (file or stdin)
    Tag {
        #[command(flatten)]
        common: Common,
        /// Input corpus; stdin when absent
        input: Option<PathBuf>,
        /// Output file; stdout when absent
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score a file whose last two columns are gold and predicted labels
    Eval {
        /// Input file; stdin when absent
        input: Option<PathBuf>,
    },
    /// Finite-difference gradient check of every model variant
    Gradcheck {
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
    /// Generate the synthetic bigram-labeled corpus
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Training sentences
        #[arg(long, default_value_t = 500)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        test_size: usize,
        #[arg(long, default_value_t = 20)]
        vocab_size: usize,
        #[arg(long, default_value_t = 5)]
        min_len: usize,
        #[arg(long, default_value_t = 15)]
        max_len: usize,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: Option<PathBuf>,
    },
}

/// Exit status for an error: 2 for bad invocations, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Config(_) => 2,
        _ => 1,
    }
}

fn open_input(p: &Option<PathBuf>) -> crate::Result<Box<dyn BufRead>> {
    Ok(match p {
        Some(p) => Box::new(BufReader::new(std::fs::File::open(p).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))
        })?)),
        None => Box::new(BufReader::new(std::io::stdin())),
    })
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> crate::Result<i32> {
    match cmd {
        Command::Train(c) => {
            cmd_train(&c.resolve()?, out)?;
            Ok(0)
        }
        Command::Tag { common, input, output } => {
            let cfg = common.resolve()?;
            let mut inp = open_input(&input)?;
            match output {
                Some(p) => {
                    let mut f = std::io::BufWriter::new(std::fs::File::create(&p)?);
                    cmd_tag(&cfg, &mut inp, &mut f)?;
                    f.flush()?;
                }
                None => {
                    cmd_tag(&cfg, &mut inp, out)?;
                }
            }
            Ok(0)
        }
        Command::Eval { input } => {
            cmd_eval(&mut open_input(&input)?, out)?;
            Ok(0)
        }
        Command::Gradcheck {
            tol,
            h,
            seed,
            corrupt_gradient,
        } => {
            let opts = GradcheckOptions {
                tol,
                h,
                corrupt: corrupt_gradient,
                seed,
            };
            Ok(if cmd_gradcheck(&opts, out)? { 0 } else { 1 })
        }
        Command::Synth {
            seed,
            size,
            test_size,
            vocab_size,
            min_len,
            max_len,
            train_out,
            test_out,
        } => {
            let cfg = synth::SynthConfig {
                seed,
                sentences: size,
                vocab_size,
                min_len,
                max_len,
            };
            cmd_synth(&cfg, test_size, &train_out, test_out.as_deref())?;
            Ok(0)
        }
    }
}

/// Parse `args` (program name first) and run; returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => {
            let _ = out.flush();
            code
        }
        Err(e) => {
            let _ = out.flush();
            let _ = writeln!(err, "edgecrf: {e}");
            exit_code(&e)
        }
    }
}
