use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use crystal_cli::{
    cmd_analyze, cmd_generate, cmd_roundtrip, init_threads, GeneratorArgs, GeneratorKindArg,
    RunConfig, EXIT_ERROR,
};
use crystal_core::Format;

#[derive(Parser)]
#[command(
    name = "crystal",
    version,
    about = "Recover lattice-plus-residue structure from point windows"
)]
struct Cli {
    /// Worker threads for candidate verification [default: all cores].
    #[arg(long, global = true, env = "CRYSTAL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a point file is an ideal crystal and report the decomposition.
    ///
    /// Exit status: 0 crystal, 3 no crystal, 1 error.
    Analyze {
        /// Point file: `.json` or CSV with one point per line.
        input: PathBuf,

        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,

        #[command(flatten)]
        config: RunConfig,
    },
    /// Write a synthetic point window.
    Generate {
        #[arg(value_enum)]
        kind: GeneratorKindArg,

        #[command(flatten)]
        params: GeneratorArgs,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        #[arg(long)]
        out: Option<PathBuf>,

        /// File encoding [default: from the extension of --out, JSON on stdout].
        #[arg(long, value_enum)]
        format: Option<FileFormat>,
    },
    /// Generate, analyze and compare against the known lattice.
    ///
    /// Exit status: 0 match, 2 mismatch, 3 no crystal, 1 error.
    Roundtrip {
        #[arg(value_enum, default_value = "crystal")]
        kind: GeneratorKindArg,

        #[command(flatten)]
        params: GeneratorArgs,

        #[command(flatten)]
        config: RunConfig,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads(cli.threads).and_then(|()| match cli.command {
        Command::Analyze { input, out, config } => cmd_analyze(&input, &config, out.as_deref()),
        Command::Generate {
            kind,
            params,
            seed,
            out,
            format,
        } => {
            let format = format.map(|f| match f {
                FileFormat::Csv => Format::Csv,
                FileFormat::Json => Format::Json,
            });
            cmd_generate(&params.spec(kind, seed)?, out.as_deref(), format)
        }
        Command::Roundtrip {
            kind,
            params,
            config,
        } => cmd_roundtrip(&params.spec(kind, config.seed)?, &config),
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
