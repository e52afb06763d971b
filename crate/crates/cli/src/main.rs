use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use recond::bench::{run_bench, BenchConfig};
use recond::dtree::{min_fill_order, Dtree, DtreeShape, DtreeStats};
use recond::engine::{rc_query, CachePolicy, QueryOptions, QueryResult};
use recond::kb::{compile_kb, KbStats};
use recond::model::{parse_evidence, parse_network, Evidence, Network};
use recond::random::{random_evidence, NetworkParams};
use recond::spaces::SpaceReport;

#[derive(Parser)]
#[command(name = "recond", version, about = "Exact inference by recursive conditioning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        matches!(self, Switch::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(clap::Args)]
struct NetArgs {
    /// Network document.
    #[arg(long)]
    net: PathBuf,
    /// Dtree to use instead of the min-fill one: JSON export or `(A (B C))`.
    #[arg(long)]
    dtree_in: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the probability of evidence.
    Query {
        #[command(flatten)]
        net: NetArgs,
        /// Evidence document mapping variable names to state labels.
        #[arg(long)]
        evidence: Option<PathBuf>,
        /// full, none or budget:N (cells).
        #[arg(long, default_value = "full")]
        cache: CachePolicy,
        #[arg(long, value_enum, default_value = "off")]
        kb: Switch,
        #[arg(long, value_enum, default_value = "off")]
        log_space: Switch,
        /// Without --evidence, sample evidence from the network with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the annotated dtree as JSON.
        #[arg(long)]
        dtree_out: Option<PathBuf>,
        /// Write the annotated dtree as DOT.
        #[arg(long)]
        dtree_dot: Option<PathBuf>,
    },
    /// Dtree widths and the cell counts of every memory model.
    Stats {
        #[command(flatten)]
        net: NetArgs,
    },
    /// Export the annotated dtree.
    Dtree {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Print the clauses compiled from zero and one CPT entries.
    Kb {
        #[arg(long)]
        net: PathBuf,
    },
    /// Run paired KB-off / KB-on queries on seeded random networks.
    Bench {
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 10)]
        max_vars: usize,
        #[arg(long, default_value_t = 4)]
        max_states: usize,
        #[arg(long, default_value_t = 3)]
        max_parents: usize,
        /// Fraction of CPT cells forced to zero.
        #[arg(long, default_value_t = 0.0)]
        determinism: f64,
        /// Fraction of variables observed.
        #[arg(long, default_value_t = 0.3)]
        evidence: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "full")]
        cache: CachePolicy,
        /// Compare against enumeration where the state space permits.
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Serialize)]
struct RunReport {
    network: PathBuf,
    variables: usize,
    dtree: DtreeStats,
    space: SpaceReport,
    query: QueryResult,
    kb: Option<KbStats>,
    kb_evidence_contradiction: bool,
    wall_time_ms: f64,
}

#[derive(Serialize)]
struct StatsReport {
    network: PathBuf,
    variables: usize,
    dtree: DtreeStats,
    space: SpaceReport,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_network(path: &Path) -> Result<Network> {
    parse_network(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_dtree(net: &Network, path: Option<&Path>) -> Result<Dtree> {
    let Some(path) = path else {
        return Ok(Dtree::min_fill(net)?);
    };
    let text = read(path)?;
    let shape = if text.trim_start().starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        DtreeShape::from_json(&value)
    } else {
        DtreeShape::parse(&text)
    }
    .with_context(|| format!("parsing {}", path.display()))?;
    let mut dtree = Dtree::from_shape(net, &shape)?;
    dtree.annotate(net)?;
    dtree.mark_dead_caches();
    Ok(dtree)
}

fn space(net: &Network, dtree: &Dtree) -> Result<SpaceReport> {
    Ok(SpaceReport::compute(net, dtree, &min_fill_order(net))?)
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Query {
            net: args,
            evidence,
            cache,
            kb,
            log_space,
            seed,
            dtree_out,
            dtree_dot,
        } => {
            let start = Instant::now();
            let net = load_network(&args.net)?;
            let dtree = load_dtree(&net, args.dtree_in.as_deref())?;
            let evidence = match (evidence, seed) {
                (Some(path), _) => parse_evidence(&net, &read(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                (None, Some(seed)) => random_evidence(&net, 0.3, seed),
                (None, None) => Evidence::new(),
            };
            if let Some(path) = dtree_out {
                fs::write(&path, serde_json::to_string_pretty(&dtree.to_json(&net))?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = dtree_dot {
                fs::write(&path, dtree.to_dot(&net)).with_context(|| format!("writing {}", path.display()))?;
            }
            let options = QueryOptions {
                policy: cache,
                log_domain: log_space.on(),
            };
            let mut base = kb.on().then(|| compile_kb(&net));
            let kb_stats = base.as_ref().map(|kb| kb.stats());
            let query = rc_query(&net, &dtree, &evidence, &options, base.as_mut())?;
            let report = RunReport {
                network: args.net,
                variables: net.len(),
                dtree: dtree.stats()?,
                space: space(&net, &dtree)?,
                kb_evidence_contradiction: query.kb_evidence_contradiction,
                query,
                kb: kb_stats,
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            print_json(&report)
        }
        Command::Stats { net: args } => {
            let net = load_network(&args.net)?;
            let dtree = load_dtree(&net, args.dtree_in.as_deref())?;
            print_json(&StatsReport {
                variables: net.len(),
                dtree: dtree.stats()?,
                space: space(&net, &dtree)?,
                network: args.net,
            })
        }
        Command::Dtree { net: args, format } => {
            let net = load_network(&args.net)?;
            let dtree = load_dtree(&net, args.dtree_in.as_deref())?;
            match format {
                Format::Json => print_json(&dtree.to_json(&net)),
                Format::Dot => {
                    print!("{}", dtree.to_dot(&net));
                    Ok(())
                }
            }
        }
        Command::Kb { net } => {
            let net = load_network(&net)?;
            print!("{}", compile_kb(&net).dump(&net));
            Ok(())
        }
        Command::Bench {
            instances,
            max_vars,
            max_states,
            max_parents,
            determinism,
            evidence,
            seed,
            cache,
            oracle,
        } => {
            if !(0.0..=1.0).contains(&determinism) || !(0.0..=1.0).contains(&evidence) {
                bail!("--determinism and --evidence must lie in [0, 1]");
            }
            if max_vars == 0 || max_states == 0 {
                bail!("--max-vars and --max-states must be positive");
            }
            let config = BenchConfig {
                instances,
                network: NetworkParams {
                    min_vars: 1,
                    max_vars,
                    max_states,
                    max_parents,
                    determinism,
                    ..NetworkParams::default()
                },
                evidence_fraction: evidence,
                seed,
                oracle,
                options: QueryOptions {
                    policy: cache,
                    log_domain: false,
                },
            };
            let mut out = io::stdout().lock();
            for line in run_bench(&config) {
                writeln!(out, "{}", serde_json::to_string(&line)?)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
