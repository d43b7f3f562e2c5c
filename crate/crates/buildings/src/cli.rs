//! Argument grammar and dispatch. JSON goes to stdout, prose to stderr.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::commands;
use crate::report::RunReport;

#[derive(Debug, Parser)]
#[command(
    name = "buildings",
    version,
    about = "Checks on spherical buildings, root groups and Bruhat-Tits trees"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Print only the JSON report.
    #[arg(long, global = true)]
    pub json_only: bool,
    /// Sample counts: quick uses 100, full uses 1000.
    #[arg(long, global = true, value_enum, default_value_t = Profile::Quick)]
    pub profile: Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Quick,
    Full,
}

impl Profile {
    pub fn samples(self) -> usize {
        match self {
            Profile::Quick => 100,
            Profile::Full => 1000,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Order, longest element and Poincare polynomial of a Coxeter matrix.
    Coxeter {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        poincare: bool,
    },
    /// Field classification and arithmetic.
    #[command(subcommand)]
    Field(FieldCmd),
    /// The projective line and Hua's identity.
    #[command(subcommand)]
    Projline(ProjlineCmd),
    /// Chamber complexes from the geometry catalog.
    #[command(subcommand)]
    Building(BuildingCmd),
    /// Root groups of rank 2 buildings.
    #[command(subcommand)]
    Moufang(MoufangCmd),
    /// The Bruhat-Tits tree of SL2.
    #[command(subcommand)]
    Bt(BtCmd),
    /// Every criterion of the acceptance suite.
    All,
}

#[derive(Debug, Subcommand)]
pub enum FieldCmd {
    Classify {
        #[arg(long)]
        field: String,
    },
    Eval {
        #[arg(long)]
        field: String,
        #[arg(long, value_enum)]
        op: Op,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
    },
    /// `F` over `F^p` for Laurent series fields.
    Frobenius {
        #[arg(long)]
        field: String,
        #[arg(long)]
        samples: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Inv,
    Val,
}

#[derive(Debug, Subcommand)]
pub enum ProjlineCmd {
    Hua {
        #[arg(long)]
        field: String,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
    },
    Recover {
        #[arg(long)]
        field: String,
        #[arg(long)]
        samples: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BuildingCmd {
    Verify {
        #[arg(long)]
        geometry: String,
    },
    Cells {
        #[arg(long)]
        geometry: String,
        #[arg(long, default_value_t = 0)]
        base: u32,
    },
    Coords {
        #[arg(long)]
        geometry: String,
        #[arg(long, default_value_t = 0)]
        base: u32,
        /// Reduced word such as `0,1,0`; all shortlex words if omitted.
        #[arg(long)]
        word: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum MoufangCmd {
    Check {
        #[arg(long)]
        geometry: String,
        #[arg(long)]
        mu: bool,
        #[arg(long)]
        commutators: bool,
    },
    Filtration {
        #[arg(long)]
        field: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = -4)]
        from: i64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 5)]
        to: i64,
    },
}

#[derive(Debug, Subcommand)]
pub enum BtCmd {
    Tree {
        #[arg(long)]
        field: String,
        #[arg(long)]
        radius: u32,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    Iwasawa {
        #[arg(long)]
        field: String,
        #[arg(long)]
        samples: Option<usize>,
    },
    Boundary {
        #[arg(long)]
        field: String,
        #[arg(long)]
        depth: u32,
    },
    Cone {
        #[arg(long)]
        field: String,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[arg(long)]
        samples: Option<usize>,
    },
}

pub struct Context {
    pub seed: u64,
    pub profile: Profile,
}

impl Context {
    pub fn samples(&self, explicit: Option<usize>) -> usize {
        explicit.unwrap_or_else(|| self.profile.samples())
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Writes the JSON report; a closed stdout is not an error worth a panic.
fn print_json(report: &RunReport) {
    let text = serde_json::to_string_pretty(&report.to_json()).expect("report serializes");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn emit(report: &RunReport, json_only: bool) {
    print_json(report);
    if !json_only {
        eprint!("{}", report.summary());
    }
}

fn usage_failure(args: &[String], message: &str, json_only: bool) -> i32 {
    let mut report = RunReport::new(args.to_vec(), 0);
    report.check("usage", false, json!({"error": message}));
    if !json_only {
        eprintln!("{message}");
    }
    print_json(&report);
    2
}

/// Runs one invocation (`args` excludes the program name) and returns the
/// process exit code: 0 all checks passed, 1 a check failed, 2 bad usage.
pub fn run(args: Vec<String>) -> i32 {
    let json_only = args.iter().any(|a| a == "--json-only");
    let argv = std::iter::once("buildings".to_string()).chain(args.iter().cloned());
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            eprint!("{e}");
            return usage_failure(&args, "missing subcommand", json_only);
        }
        Err(e) => {
            let message = e.render().to_string();
            return usage_failure(&args, message.trim_end(), json_only);
        }
    };
    let ctx = Context {
        seed: cli.global.seed,
        profile: cli.global.profile,
    };
    let mut report = RunReport::new(args.clone(), ctx.seed);
    let start = Instant::now();
    if let Err(e) = commands::dispatch(&cli.command, &ctx, &mut report) {
        return usage_failure(&args, &format!("{e:#}"), json_only);
    }
    report.wall_time_ms = start.elapsed().as_millis() as u64;
    emit(&report, json_only);
    report.exit_code()
}
