use clap::{Parser, Subcommand};
use quadcurl::analysis::ConvergenceReport;
use quadcurl::polymesh::{generate, write_mesh, MeshFamily};
use quadcurl::study::{run_study_with, LevelRange, OutputFormat, StudyConfig};
use quadcurl::{Error, Result};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Weak Galerkin convergence studies for the quad-curl problem.
#[derive(Parser)]
#[command(name = "quadcurl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the level range, e.g. `2..5`.
        #[arg(long)]
        levels: Option<LevelRange>,
        #[arg(long)]
        k: Option<usize>,
        /// Override the per-level cap on unknowns.
        #[arg(long, conflicts_with = "no_dof_cap")]
        max_dofs: Option<usize>,
        /// Remove the per-level cap on unknowns.
        #[arg(long)]
        no_dof_cap: bool,
        #[arg(long, value_parser = parse_format)]
        output: Option<OutputFormat>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Generate a mesh of a family and write it in the text mesh format.
    Mesh {
        #[arg(long)]
        family: MeshFamily,
        #[arg(long)]
        level: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the table for a CSV report written by `run`.
    Table {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("expected table, csv or both, got `{s}`"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Honours `QUADCURL_THREADS` for the per-cell parallel loops.
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("QUADCURL_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("QUADCURL_THREADS must be a positive integer, got `{v}`")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, levels, k, max_dofs, no_dof_cap, output, output_dir } => {
            let mut cfg = StudyConfig::load(&config)?;
            if let Some(l) = levels {
                cfg.levels = l;
            }
            if let Some(k) = k {
                cfg.k = k;
            }
            if no_dof_cap {
                cfg.max_dofs = None;
            } else if max_dofs.is_some() {
                cfg.max_dofs = max_dofs;
            }
            if let Some(o) = output {
                cfg.output = o;
            }
            if output_dir.is_some() {
                cfg.output_dir = output_dir;
            }
            run(&cfg)
        }
        Command::Mesh { family, level, out } => {
            let mesh = generate(family, level)?;
            std::fs::write(&out, write_mesh(&mesh))?;
            eprintln!("wrote {} cells to {}", mesh.num_cells(), out.display());
            Ok(())
        }
        Command::Table { input } => {
            let report = ConvergenceReport::read_csv(std::fs::File::open(&input)?)?;
            print!("{}", report.table());
            Ok(())
        }
    }
}

fn run(cfg: &StudyConfig) -> Result<()> {
    let report = run_study_with(cfg, |out| {
        let r = &out.record;
        eprintln!(
            "level {}: {} unknowns, h = {:.4}, residual {:.1e}, {:.1}s",
            r.level, r.dofs, r.h, out.solve.relative_residual, r.runtime
        );
    })?;
    let mut stdout = std::io::stdout().lock();
    if matches!(cfg.output, OutputFormat::Table | OutputFormat::Both) {
        write!(stdout, "{}", report.table())?;
    }
    if matches!(cfg.output, OutputFormat::Csv | OutputFormat::Both) {
        match &cfg.output_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join("report.csv");
                report.write_csv(std::fs::File::create(&path)?)?;
                eprintln!("wrote {}", path.display());
            }
            None => report.write_csv(&mut stdout)?,
        }
    }
    Ok(())
}
