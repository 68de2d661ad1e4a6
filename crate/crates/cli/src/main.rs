use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entrograph_cli::commands::{cmd_coding, cmd_entropy, cmd_orders, finish, OrdersQuery};
use entrograph_cli::config::{parse_levels, ConfigFile, LevelSpec, RunConfig};
use entrograph_cli::criteria::{self, Session};
use entrograph_cli::error::CliError;
use entrograph_cli::output::render_json;

#[derive(Parser)]
#[command(name = "entrograph", version, about = "Entropy growth orders of non-compact dynamical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count separated sets level by level and classify their growth.
    Entropy(RunArgs),
    /// Count codings of a wandering family.
    Coding {
        #[command(flatten)]
        run: RunArgs,
        /// Also check the coding bound against the entropy counts.
        #[arg(long)]
        bound: bool,
    },
    /// Growth-order queries on closed-form sequences.
    Orders {
        #[command(subcommand)]
        query: Orders,
        #[arg(long, global = true)]
        json: bool,
    },
    /// Run an acceptance suite: parabolic, brouwer, properties, coding, double-arrow or all.
    Verify {
        suite: String,
        /// Run only this criterion.
        #[arg(long)]
        criterion: Option<u8>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    compact: Option<String>,
    /// `a..b`, `a..=b` or a comma list.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Also count generator-metric sets and check the sandwich.
    #[arg(long)]
    generators: bool,
    /// `builtin:<name>` or a family file.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    csv: Option<String>,
    #[arg(long)]
    json: Option<String>,
    #[arg(long)]
    n0_max: Option<usize>,
    #[arg(long)]
    search_bound: Option<usize>,
    #[arg(long)]
    max_words_per_orbit: Option<usize>,
}

impl RunArgs {
    fn resolve(self, default_levels: &str, default_horizon: usize) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let levels = self.levels.map(|l| parse_levels(&l).map(LevelSpec::List)).transpose()?;
        let flags = ConfigFile {
            system: self.system,
            compact: self.compact,
            levels,
            horizon: self.horizon,
            grid: self.grid,
            seed: self.seed,
            alpha: self.alpha,
            generators: self.generators.then_some(true),
            family: self.family,
            csv: self.csv,
            json: self.json,
            n0_max: self.n0_max,
            search_bound: self.search_bound,
            max_words_per_orbit: self.max_words_per_orbit,
            ..Default::default()
        };
        RunConfig::resolve(file.overlay(flags), default_levels, default_horizon)
    }
}

#[derive(Subcommand)]
enum Orders {
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 256)]
        horizon: usize,
        #[arg(long)]
        tail_start: Option<usize>,
    },
    Project {
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 256)]
        horizon: usize,
        #[arg(long, default_value_t = 0.5)]
        tail_fraction: f64,
    },
    Sup {
        /// Repeat for each sequence.
        #[arg(long = "a", required = true)]
        exprs: Vec<String>,
        #[arg(long, default_value_t = 256)]
        horizon: usize,
    },
    Invariance {
        #[arg(long)]
        a: String,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 256)]
        horizon: usize,
    },
}

fn verify(suite: &str, only: Option<u8>) -> Result<i32, CliError> {
    let ids = criteria::suite(suite)?;
    let ids: Vec<u8> = match only {
        Some(id) if ids.contains(&id) => vec![id],
        Some(id) => return Err(CliError::Config(format!("criterion {id} is not in suite '{suite}'"))),
        None => ids.to_vec(),
    };
    let mut session = Session::default();
    let mut failed = 0;
    for id in ids {
        let o = criteria::run(id, &mut session);
        println!("{}", o.line());
        failed += usize::from(!o.pass);
    }
    Ok(i32::from(failed > 0))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Entropy(args) => {
            let cfg = args.resolve("4..8", 256)?;
            finish(&cmd_entropy(&cfg)?, cfg.csv.as_ref(), cfg.json.as_ref())
        }
        Command::Coding { run, bound } => {
            let cfg = run.resolve("0..12", 256)?;
            finish(&cmd_coding(&cfg, bound)?, cfg.csv.as_ref(), cfg.json.as_ref())
        }
        Command::Orders { query, json } => {
            let q = match query {
                Orders::Compare { a, b, horizon, tail_start } => OrdersQuery::Compare { a, b, horizon, tail_start },
                Orders::Project { p, horizon, tail_fraction } => OrdersQuery::Project { p, horizon, tail_fraction },
                Orders::Sup { exprs, horizon } => OrdersQuery::Sup { exprs, horizon },
                Orders::Invariance { a, m, horizon } => OrdersQuery::Invariance { a, m, horizon },
            };
            let (text, value) = cmd_orders(&q)?;
            if json {
                print!("{}", render_json(&value));
            } else {
                print!("{text}");
            }
            Ok(0)
        }
        Command::Verify { suite, criterion } => verify(&suite, criterion),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("ENTROGRAPH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second init only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
