use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use padic_tree_harness::{run, ExperimentConfig, Report};

/// Runs padic-tree experiments and writes JSON/CSV reports.
///
/// p-adic literals in config and input files are written least significant digit
/// first; digits after `.` are the coefficients of p^-1, p^-2, ...: `21` is 2 + p
/// and `.12` is 1/p + 2/p^2.
#[derive(Parser)]
#[command(name = "padic-harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON); flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run for this prime only.
    #[arg(long, global = true)]
    p: Option<u32>,
    /// Run for this dimension only.
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Run for this seed only.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    gamma_max: Option<i32>,
    /// Directory for report.json, report.csv, timings.csv and any extra tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format on stdout when --out is not given.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Frame sums of the indicator of Z_p and the orbit inner-product law.
    FrameBound,
    /// Chain rule, transformation rule and covariance sweeps.
    Identities {
        /// Transport kernels along the wrong morphism; the transform-rule cases must fail.
        #[arg(long)]
        negative_control: bool,
    },
    /// Set S, tangent maps, the wavelet lemma and group structure.
    Structure,
    /// Applies an operator to the function given in the config's `apply` section.
    Apply,
    /// Certifies wavelet eigenvalues and the Vladimirov operator by quadrature.
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn configure(cli: &Cli, experiment: &str) -> Result<ExperimentConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::for_experiment(experiment),
    };
    if let Some(p) = cli.p {
        cfg.p = vec![p];
    }
    if let Some(d) = cli.d {
        cfg.d = vec![d];
    }
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    if let Some(g) = cli.gamma_max {
        cfg.gamma_max = g;
    }
    if let Command::Identities { negative_control: true } = cli.command {
        cfg.negative_control = true;
    }
    Ok(cfg)
}

fn write_outputs(report: &Report, cli: &Cli) -> Result<(), String> {
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let mut files = vec![
                ("report.json".to_string(), report.to_json()),
                ("report.csv".to_string(), report.to_csv()),
                ("timings.csv".to_string(), report.timings_csv()),
            ];
            files.extend(report.tables.iter().cloned());
            for (name, body) in files {
                let path = dir.join(name);
                std::fs::write(&path, body).map_err(|e| format!("{}: {e}", path.display()))?;
            }
        }
        None => match cli.format {
            Format::Json => print!("{}", report.to_json()),
            Format::Csv => print!("{}", report.to_csv()),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let experiment = match cli.command {
        Command::FrameBound => "frame-bound",
        Command::Identities { .. } => "identities",
        Command::Structure => "structure",
        Command::Apply => "apply",
        Command::Oracle => "oracle",
    };
    let result = configure(&cli, experiment)
        .and_then(|cfg| run(experiment, &cfg))
        .and_then(|report| write_outputs(&report, &cli).map(|_| report));
    match result {
        Ok(report) => {
            let s = &report.summary;
            eprintln!("{experiment}: {} cases, {} passed, {} failed", s.total, s.passed, s.failed);
            for c in report.cases.iter().filter(|c| !c.pass) {
                eprintln!("  FAIL #{} {} (p={}, d={}): residual {:e}", c.id, c.name, c.p, c.d, c.residual);
            }
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
