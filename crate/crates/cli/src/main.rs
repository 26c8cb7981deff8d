mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{ConfigError, LatticeKind, Overrides};

#[derive(Parser)]
#[command(name = "floquet", version, about = "Honeycomb Floquet codes with twist defects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    lattice: Option<LatticeArg>,
    #[arg(long = "L", global = true)]
    l: Option<usize>,
    #[arg(long, global = true)]
    rows: Option<usize>,
    #[arg(long, global = true)]
    cols: Option<usize>,
    #[arg(long = "N", global = true)]
    n: Option<u32>,
    #[arg(long, global = true)]
    p_aut: Option<u32>,
    #[arg(long, global = true)]
    q_aut: Option<u32>,
    /// `i,j,len`, `removed:color[,len]` or `path:v0,v1,...`; repeatable.
    #[arg(long, global = true)]
    defect: Vec<String>,
    /// Add a length-7 line whose removed checks have this color.
    #[arg(long, global = true)]
    removed: Option<u8>,
    /// `three-round`, `six-round`, `standard` or `init | period`.
    #[arg(long, global = true)]
    schedule: Option<String>,
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    periods: Option<usize>,
    /// Error rate, or a comma-separated grid.
    #[arg(long, global = true)]
    p: Option<String>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LatticeArg {
    Torus,
    Planar,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the code (lattice, checks, defects) as JSON.
    Build,
    /// Run the schedule and emit the trace.
    Run,
    Verify {
        #[arg(value_enum)]
        what: run::Verify,
    },
    Defect {
        #[command(subcommand)]
        action: DefectAction,
    },
    /// Monte Carlo logical error rates as CSV.
    Sim,
    /// Syndrome graph as DOT or JSON.
    Export {
        #[arg(long, value_enum, default_value = "dot")]
        format: run::ExportFormat,
    },
}

#[derive(Subcommand)]
enum DefectAction {
    /// Emit the code with the configured defect lines inserted.
    Insert,
}

fn overrides(f: &Flags) -> Overrides {
    Overrides {
        lattice: f.lattice.map(|l| match l {
            LatticeArg::Torus => LatticeKind::Torus,
            LatticeArg::Planar => LatticeKind::Planar,
        }),
        l: f.l,
        rows: f.rows,
        cols: f.cols,
        n: f.n,
        p_aut: f.p_aut,
        q_aut: f.q_aut,
        defects: f.defect.clone(),
        removed: f.removed,
        schedule: f.schedule.clone(),
        d: f.d,
        periods: f.periods,
        p: f.p.clone(),
        trials: f.trials,
        seed: f.seed,
        out: f.out.clone(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let resolved = config::load(cli.flags.config.as_deref()).and_then(|mut c| {
        c.apply(&overrides(&cli.flags))?;
        c.resolve()
    });
    let cfg = match resolved {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    let result = match cli.command {
        Command::Build => run::build(&cfg, false),
        Command::Defect { action: DefectAction::Insert } => run::build(&cfg, true),
        Command::Run => run::trace(&cfg),
        Command::Verify { what } => run::verify(&cfg, what),
        Command::Sim => run::sim(&cfg),
        Command::Export { format } => run::export(&cfg, format),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => config_error(&e),
    }
}

fn config_error(e: &ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}
