//! Command-line front end: validate contexts, compute in the sheaf topos,
//! and decide geometric properties of sheaves described in `.geo` files.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use geoctx::cli::{execute, RunOptions};
use geoctx::geometry::DEFAULT_BUDGET;

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(name = "geoctx", version, about = "Finite geometric contexts and elementary schemes")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Search budget for atlas and class-morphism searches.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Include witness payloads on passing checks too.
    #[arg(long, global = true)]
    witnesses: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate the category, the covering structure, and the six context conditions.
    #[command(name = "validate-context")]
    ValidateContext { file: PathBuf },
    /// Test the sheaf condition for a presheaf.
    #[command(name = "check-sheaf")]
    CheckSheaf { file: PathBuf, name: Option<String> },
    /// Sheafify a presheaf and report the result.
    Sheafify { file: PathBuf, name: Option<String> },
    /// Test whether a morphism of sheaves is an epimorphism.
    #[command(name = "check-epi")]
    CheckEpi { file: PathBuf, name: Option<String> },
    /// Test whether a morphism of sheaves is a monomorphism.
    #[command(name = "check-mono")]
    CheckMono { file: PathBuf, name: Option<String> },
    /// Test whether a morphism of sheaves is an open immersion.
    #[command(name = "check-open-immersion")]
    CheckOpenImmersion { file: PathBuf, name: Option<String> },
    /// Test whether a morphism of sheaves is a P-morphism.
    #[command(name = "check-p-morphism")]
    CheckPMorphism { file: PathBuf, name: Option<String> },
    /// Test whether a morphism of sheaves is schematic.
    #[command(name = "check-schematic")]
    CheckSchematic { file: PathBuf, name: Option<String> },
    /// Test whether a sheaf (or a gluing result) is an elementary scheme.
    #[command(name = "is-scheme")]
    IsScheme { file: PathBuf, name: Option<String> },
    /// Validate gluing data and build the glued scheme.
    Glue { file: PathBuf, name: Option<String> },
    /// Read gluing data off a scheme via a found open atlas.
    Decompose { file: PathBuf, name: Option<String> },
    /// Fibred product of two schemes over a common base.
    #[command(name = "fibre-product")]
    FibreProduct { file: PathBuf, first: Option<String>, second: Option<String> },
}

impl Cmd {
    fn unpack(self) -> (&'static str, PathBuf, Vec<String>) {
        match self {
            Cmd::ValidateContext { file } => ("validate-context", file, vec![]),
            Cmd::CheckSheaf { file, name } => ("check-sheaf", file, opt(name)),
            Cmd::Sheafify { file, name } => ("sheafify", file, opt(name)),
            Cmd::CheckEpi { file, name } => ("check-epi", file, opt(name)),
            Cmd::CheckMono { file, name } => ("check-mono", file, opt(name)),
            Cmd::CheckOpenImmersion { file, name } => ("check-open-immersion", file, opt(name)),
            Cmd::CheckPMorphism { file, name } => ("check-p-morphism", file, opt(name)),
            Cmd::CheckSchematic { file, name } => ("check-schematic", file, opt(name)),
            Cmd::IsScheme { file, name } => ("is-scheme", file, opt(name)),
            Cmd::Glue { file, name } => ("glue", file, opt(name)),
            Cmd::Decompose { file, name } => ("decompose", file, opt(name)),
            Cmd::FibreProduct { file, first, second } => {
                let mut names = opt(first);
                names.extend(opt(second));
                ("fibre-product", file, names)
            }
        }
    }
}

fn opt(name: Option<String>) -> Vec<String> {
    name.into_iter().collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions { budget: cli.budget, witnesses: cli.witnesses };
    let format = cli.format;
    let (command, file, names) = cli.command.unpack();
    let text = match std::fs::read_to_string(&file) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {}", file.display(), e);
            return ExitCode::from(3);
        }
    };
    let started = Instant::now();
    match execute(command, &text, &names, &opts) {
        Ok(report) => {
            match format {
                Format::Json => println!("{}", report.to_json()),
                Format::Text => print!("{}", report.to_text(started.elapsed().as_millis())),
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(diag) => {
            eprintln!("error: {}", diag);
            ExitCode::from(3)
        }
    }
}
