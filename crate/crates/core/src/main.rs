use clap::{Parser, Subcommand, ValueEnum};
use quaddivisor::harness::config::Rational;
use quaddivisor::harness::{
    commands, run_compare, run_predict, verify_suite, Level, RunConfig, Table,
};
use quaddivisor::phi::PhiMode;
use quaddivisor::quad::parse_rational;
use quaddivisor::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "quaddivisor",
    version,
    about = "Divisor sums over quadratic polynomial values: exact sums, local data, and main terms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Format printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write <out>/<command>.{csv,json} (always on for predict, compare, verify).
    #[arg(long, global = true)]
    write: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(clap::Args)]
struct Overrides {
    /// Divisor-function order.
    #[arg(long, global = true)]
    k: Option<u32>,
    /// Comma-separated dilation ladder, e.g. 50,100,200 or 5/2.
    #[arg(long = "X", global = true, value_delimiter = ',')]
    x_ladder: Option<Vec<String>>,
    #[arg(long, global = true)]
    pmax: Option<u64>,
    #[arg(long, global = true)]
    lmax: Option<u32>,
    /// Jet order about s = 1.
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record wall-clock times in reports.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Closed,
    Definition,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Table of τ_k(m).
    Sieve {
        #[arg(long)]
        limit: u64,
        #[arg(long, default_value_t = 1)]
        from: u64,
    },
    /// Local densities ρ_F(p^ℓ) and S_F(p^ℓ).
    Local {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 4)]
        levels: u32,
    },
    /// Stieltjes constants, Laurent block of ζ^k, weighted residues.
    Zeta,
    /// Jet of Φ_k(q, s) about s = 1.
    Phi {
        #[arg(long)]
        q: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Closed)]
        mode: ModeArg,
    },
    /// β_{k,r}(q) for r < k.
    Beta {
        #[arg(long, value_delimiter = ',')]
        q: Vec<u64>,
    },
    /// Main term M_k(x; h, q).
    Ap {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        h: u64,
        #[arg(long)]
        q: u64,
    },
    /// Exact A_k(x; h, q).
    ApExact {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        h: u64,
        #[arg(long)]
        q: u64,
    },
    /// Truncated singular series and the coefficients C_{k,r}.
    Series,
    /// ∫ (log F)^r over the dilated box, per ladder X.
    Integral {
        #[arg(long)]
        r: u32,
    },
    /// Exact Σ τ_k(F(x)) per ladder X.
    Exact,
    /// Main-term predictions per ladder X.
    Predict,
    /// Exact sums against predictions, with the decrease test.
    Compare,
    /// Invariant suite.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sieve { .. } => "sieve",
            Command::Local { .. } => "local",
            Command::Zeta => "zeta",
            Command::Phi { .. } => "phi",
            Command::Beta { .. } => "beta",
            Command::Ap { .. } => "ap",
            Command::ApExact { .. } => "ap-exact",
            Command::Series => "series",
            Command::Integral { .. } => "integral",
            Command::Exact => "exact",
            Command::Predict => "predict",
            Command::Compare => "compare",
            Command::Verify { .. } => "verify",
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(k) = o.k {
        cfg.k = k;
    }
    if let Some(xs) = &o.x_ladder {
        cfg.x_ladder = xs
            .iter()
            .map(|s| parse_rational(s).map(Rational))
            .collect::<Result<_>>()?;
    }
    if let Some(v) = o.pmax {
        cfg.truncation.pmax = v;
    }
    if let Some(v) = o.lmax {
        cfg.truncation.lmax = v;
    }
    if o.order.is_some() {
        cfg.truncation.order = o.order;
    }
    if let Some(v) = o.tol {
        cfg.quadrature.tol = v;
    }
    if o.threads.is_some() {
        cfg.threads = o.threads;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    cfg.output.timing |= o.timing;
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the command; the flag is false when a pipeline's own test failed.
fn run(cli: &Cli, cfg: &RunConfig) -> Result<(Table, bool)> {
    let k = cfg.k;
    Ok(match &cli.command {
        Command::Sieve { limit, from } => (commands::sieve(k, *from, *limit)?, true),
        Command::Local { p, levels } => (commands::local(cfg, *p, *levels)?, true),
        Command::Zeta => (commands::zeta(k, cfg.truncation.order.unwrap_or(6))?, true),
        Command::Phi { q, mode } => {
            let mode = match mode {
                ModeArg::Closed => PhiMode::ClosedForm,
                ModeArg::Definition => PhiMode::Definition,
            };
            (commands::phi(k, *q, cfg.jet_order(), mode)?, true)
        }
        Command::Beta { q } => {
            if q.is_empty() {
                return Err(Error::InvalidInput("beta needs --q".into()));
            }
            (commands::beta(k, q)?, true)
        }
        Command::Ap { x, h, q } => (commands::ap(k, *x, *h, *q)?, true),
        Command::ApExact { x, h, q } => (commands::ap_exact(k, *x, *h, *q)?, true),
        Command::Series => (commands::series(cfg)?, true),
        Command::Integral { r } => (commands::integral(cfg, *r)?, true),
        Command::Exact => (commands::exact(cfg)?, true),
        Command::Predict => (run_predict(cfg)?.to_table("predict", cfg), true),
        Command::Compare => {
            let report = run_compare(cfg)?;
            (report.to_table("compare", cfg), report.passed())
        }
        Command::Verify { level } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let summary = verify_suite(level, cfg.seed);
            (summary.to_table(), summary.all_passed())
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(&cli).and_then(|cfg| {
        if let Some(threads) = cfg.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        let (table, passed) = run(&cli, &cfg)?;
        let always = matches!(
            cli.command,
            Command::Predict | Command::Compare | Command::Verify { .. }
        );
        if cli.write || always {
            let (csv, json) = table.write(&cfg.out_dir(), cli.command.name())?;
            eprintln!("wrote {} and {}", csv.display(), json.display());
        }
        match cli.format {
            Format::Json => print!("{}", table.to_json()),
            Format::Csv => print!("{}", table.to_csv()),
        }
        Ok(passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: check failed", cli.command.name());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
