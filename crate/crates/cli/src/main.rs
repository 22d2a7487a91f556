use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hdx_cli::commands::{self, DecodeArgs, Quantity, SearchArgs};
use hdx_cli::suites::Suite;
use hdx_cli::CliError;
use hdx_core::css::io::MatrixFormat;

/// Build, verify and export cubical sheaf complexes and their CSS codes.
///
/// Exit codes: 0 ok, 1 io/usage, 2 manifest, 3 construction, 4 verification failure,
/// 5 budget exceeded (partial results written).
#[derive(Parser)]
#[command(name = "hdx", version)]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "HDX_JOBS", default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build an instance bundle from a manifest.
    Build {
        manifest: PathBuf,
        /// Bundle directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run verification suites on a bundle.
    Verify {
        bundle: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Defaults to the manifest seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search local code tuples for two-way robustness.
    Search {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        q: usize,
        /// Rows per code: one value for all directions, or one per direction.
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        /// Enumerate every tuple of row spaces.
        #[arg(long)]
        exhaust: bool,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long, default_value_t = 1 << 16)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure one distance or expansion constant.
    Distance {
        bundle: PathBuf,
        #[arg(long)]
        level: usize,
        #[arg(long, value_enum, default_value = "syst")]
        mode: Quantity,
        /// Coset states; defaults to the manifest budget.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the flip decoder.
    DecodeSim {
        bundle: PathBuf,
        #[arg(long, default_value_t = 0)]
        level: usize,
        /// Per-face error rate.
        #[arg(long)]
        p: Option<f64>,
        /// Fixed error weights for a success curve.
        #[arg(long, value_delimiter = ',')]
        weights: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        syndrome_noise: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write H_X and H_Z of the level-i code.
    Export {
        bundle: PathBuf,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value = "alist")]
        format: MatrixFormat,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    match cli.cmd {
        Cmd::Build { manifest, out } => commands::build(&manifest, &out).map(drop),
        Cmd::Verify { bundle, suite, seed, out } => commands::verify(&bundle, suite, seed, out.as_deref()).map(drop),
        Cmd::Search { t, n, q, m, exhaust, trials, budget, seed, out } => {
            commands::search(&SearchArgs { t, n, q, m, exhaust, trials, budget, seed }, out.as_deref()).map(drop)
        }
        Cmd::Distance { bundle, level, mode, budget, out } => commands::distance(&bundle, level, mode, budget, out.as_deref()).map(drop),
        Cmd::DecodeSim { bundle, level, p, weights, shots, seed, syndrome_noise, out } => {
            let p = if p.is_none() && weights.is_empty() { Some(0.01) } else { p };
            commands::decode_sim(&bundle, &DecodeArgs { level, p, weights, shots, seed, syndrome_noise }, out.as_deref()).map(drop)
        }
        Cmd::Export { bundle, level, format, out } => {
            for p in commands::export(&bundle, level, format, &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors share the io/usage code so that 2 stays reserved for manifests
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hdx: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
