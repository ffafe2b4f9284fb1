use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use esa_core::harness::pipeline::write_analysis;
use esa_core::harness::{self, Corpus, Keys, ScenarioConfig};
use esa_core::stash::overhead::{prior_art_overheads, REFERENCE_SCENARIOS, SCENARIO_RECORD_LEN};
use esa_core::stash::DEFAULT_PRIVATE_MEM_BUDGET;
use esa_core::{derive_params, ChunkCap, ParamRequest, RecordBatch, RngTape, ThresholdPolicy};

#[derive(Parser)]
#[command(
    name = "esa",
    version,
    about = "Encode, shuffle and analyze privacy-preserving reports"
)]
struct Cli {
    /// Directory every relative path is resolved against.
    #[arg(long, global = true, default_value = ".")]
    workspace: PathBuf,
    /// Root seed of the RNG tape; overrides the scenario's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario config file (`key = value` lines).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: crowd, nocrowd, secret_crowd, blinded, naive, perms, flix.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Create analyzer, shuffler and blinding keys.
    Keygen,
    /// Write a synthetic corpus.
    Generate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "corpus.txt")]
        out: PathBuf,
    },
    /// Encode a corpus into a batch of reports.
    Encode {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "corpus.txt")]
        corpus: PathBuf,
        #[arg(long, default_value = "reports.batch")]
        out: PathBuf,
    },
    /// Run the (first) shuffler over a batch of reports.
    Shuffle {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "reports.batch")]
        input: PathBuf,
        /// Defaults to shuffled.batch, or blinded.batch with two shufflers.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "shuffler_stats.json")]
        stats: PathBuf,
        /// Threshold policy file; replaces the scenario's policy.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Route intake through the oblivious stash shuffle.
        #[arg(long)]
        oblivious: bool,
        /// Write the untrusted-access trace (phase,region,offset,len,op) here.
        #[arg(long, requires = "oblivious")]
        trace: Option<PathBuf>,
    },
    /// Run the second shuffler of a blinded-crowd scenario.
    Shuffle2 {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "blinded.batch")]
        input: PathBuf,
        #[arg(long, default_value = "shuffled.batch")]
        out: PathBuf,
        #[arg(long, default_value = "shuffler_stats.json")]
        stats: PathBuf,
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Decrypt shuffler output and write histogram or covariance CSVs.
    Analyze {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "shuffled.batch")]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run a whole scenario under `<workspace>/<output_dir>`.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Stash-shuffle parameters and overheads.
    Params(ParamsArgs),
}

#[derive(Args)]
struct ParamsArgs {
    /// N; without it the reference scenarios are printed.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, short = 'b')]
    buckets: Option<usize>,
    /// C
    #[arg(long, conflicts_with = "alpha")]
    chunk: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// S
    #[arg(long)]
    stash: Option<usize>,
    #[arg(long, default_value_t = 4)]
    window: usize,
    #[arg(long, default_value_t = SCENARIO_RECORD_LEN)]
    item_len: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = DEFAULT_PRIVATE_MEM_BUDGET)]
    budget: usize,
    /// Also print sorting-network and ColumnSort costs.
    #[arg(long)]
    prior_art: bool,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let ws = &cli.workspace;
    match cli.command {
        Command::Keygen => {
            let tape = RngTape::new(cli.seed.unwrap_or(1));
            let keys = Keys::generate(&mut tape.stream("keygen", "keys"));
            keys.save(ws)?;
            println!(
                "wrote {} and {}",
                ws.join("keys.txt").display(),
                ws.join("public.txt").display()
            );
        }
        Command::Generate { scenario, out } => {
            let cfg = load_scenario(ws, &scenario, cli.seed)?;
            let corpus = harness::generate_corpus(&cfg, &RngTape::new(cfg.seed))?;
            corpus.save(&ws.join(&out))?;
            println!("{} records -> {}", corpus.lines.len(), out.display());
        }
        Command::Encode { scenario, corpus, out } => {
            let cfg = load_scenario(ws, &scenario, cli.seed)?;
            let keys = load_keys(ws)?;
            let corpus = Corpus::load(&ws.join(&corpus))?;
            let reports = harness::encode_corpus(&cfg, &keys, &corpus, &RngTape::new(cfg.seed))?;
            reports.save(&ws.join(&out))?;
            println!(
                "{} reports of {} bytes -> {}",
                reports.len(),
                reports.record_len(),
                out.display()
            );
        }
        Command::Shuffle {
            scenario,
            input,
            out,
            stats,
            policy,
            oblivious,
            trace,
        } => {
            let mut cfg = load_scenario(ws, &scenario, cli.seed)?;
            apply_policy(ws, &mut cfg, policy.as_deref())?;
            cfg.oblivious |= oblivious;
            cfg.validate()?;
            let keys = load_keys(ws)?;
            let reports = RecordBatch::load(&ws.join(&input))?;
            let out = out.unwrap_or_else(|| {
                if cfg.shufflers == 2 {
                    "blinded.batch"
                } else {
                    "shuffled.batch"
                }
                .into()
            });
            let run = harness::shuffle_stage(&cfg, &keys, &reports, &RngTape::new(cfg.seed))?;
            run.output.save(&ws.join(&out))?;
            if let Some(path) = trace {
                let Some(t) = &run.trace else {
                    bail!("no trace: the first shuffler of a blinded crowd does no oblivious intake");
                };
                fs::write(ws.join(&path), t.dump()).with_context(|| path.display().to_string())?;
            }
            write_stats(ws, &stats, &run.stats.to_json_line())?;
            println!("{}", run.stats.to_json_line());
        }
        Command::Shuffle2 {
            scenario,
            input,
            out,
            stats,
            policy,
        } => {
            let mut cfg = load_scenario(ws, &scenario, cli.seed)?;
            apply_policy(ws, &mut cfg, policy.as_deref())?;
            let keys = load_keys(ws)?;
            let reports = RecordBatch::load(&ws.join(&input))?;
            let run = harness::shuffle2_stage(&cfg, &keys, &reports, &RngTape::new(cfg.seed))?;
            run.output.save(&ws.join(&out))?;
            write_stats(ws, &stats, &run.stats.to_json_line())?;
            println!("{}", run.stats.to_json_line());
        }
        Command::Analyze {
            scenario,
            input,
            out_dir,
        } => {
            let cfg = load_scenario(ws, &scenario, cli.seed)?;
            let keys = load_keys(ws)?;
            let inner = RecordBatch::load(&ws.join(&input))?;
            let a = harness::analyze_stage(&cfg, &keys, &inner, &RngTape::new(cfg.seed))?;
            let dir = ws.join(&out_dir);
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            write_analysis(&dir, &a)?;
            println!("{}", serde_json::to_string(&a.stats)?);
        }
        Command::Run { scenario, json } => {
            let cfg = load_scenario(ws, &scenario, cli.seed)?;
            let out = harness::run_scenario(&cfg, ws)?;
            if json {
                println!("{}", out.report.to_json());
            } else {
                print!("{}", out.report.to_table());
                println!("\noutputs in {}", out.output_dir.display());
            }
        }
        Command::Params(p) => params(&p)?,
    }
    Ok(())
}

fn load_scenario(ws: &Path, args: &ScenarioArgs, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let path = ws.join(path);
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            ScenarioConfig::from_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        (None, Some(name)) => ScenarioConfig::preset(name)?,
        (None, None) => bail!("give a scenario with --config FILE or --preset NAME"),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn load_keys(ws: &Path) -> Result<Keys> {
    Keys::load(ws).context("loading keys (run `esa keygen` first)")
}

fn apply_policy(ws: &Path, cfg: &mut ScenarioConfig, policy: Option<&Path>) -> Result<()> {
    if let Some(p) = policy {
        let path = ws.join(p);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let mut pol = ThresholdPolicy::from_config(&text).with_context(|| format!("in {}", path.display()))?;
        if let Some(s) = pol.seed.take() {
            cfg.seed = s;
        }
        cfg.policy = pol;
    }
    Ok(())
}

fn write_stats(ws: &Path, file: &Path, line: &str) -> Result<()> {
    let path = ws.join(file);
    fs::write(&path, format!("{line}\n")).with_context(|| format!("writing {}", path.display()))
}

struct Row {
    n: usize,
    b: usize,
    c: usize,
    w: usize,
    s: usize,
    alpha: f64,
    overhead: f64,
    published: Option<f64>,
    log_eps: Option<f64>,
}

fn params(p: &ParamsArgs) -> Result<()> {
    let rows: Vec<Row> = match p.n {
        None => REFERENCE_SCENARIOS
            .iter()
            .map(|s| Row {
                n: s.n_items,
                b: s.num_buckets,
                c: s.chunk_cap,
                w: s.window,
                s: s.stash_cap,
                alpha: esa_core::stash::params::implied_alpha(
                    s.n_items.div_ceil(s.num_buckets),
                    s.num_buckets,
                    s.chunk_cap,
                ),
                overhead: s.computed_overhead(),
                published: Some(s.overhead),
                log_eps: Some(s.log_epsilon),
            })
            .collect(),
        Some(n) => {
            let Some(b) = p.buckets else {
                bail!("--n needs --buckets")
            };
            let chunk = match (p.chunk, p.alpha) {
                (Some(c), _) => ChunkCap::Fixed(c),
                (None, Some(a)) => ChunkCap::Alpha(a),
                (None, None) => bail!("give --chunk or --alpha"),
            };
            let s = p.stash.unwrap_or(4 * b);
            let req = ParamRequest::new(n, b, chunk, s, p.window)
                .item_len(p.item_len)
                .workers(p.workers)
                .budget(p.budget);
            let sp = derive_params(&req)?;
            if p.format == Format::Table {
                println!(
                    "D = {}, K = {}, queue cap = {}, mid slots = {}, working set = {} of {} bytes",
                    sp.bucket_size,
                    sp.drain_per_bucket,
                    sp.queue_cap,
                    sp.mid_len(),
                    sp.working_set(),
                    sp.private_mem_budget
                );
            }
            vec![Row {
                n,
                b,
                c: sp.chunk_cap,
                w: p.window,
                s,
                alpha: sp.alpha,
                overhead: sp.analytic_overhead(),
                published: None,
                log_eps: None,
            }]
        }
    };
    let prior: Vec<_> = if p.prior_art {
        rows.iter()
            .map(|r| prior_art_overheads(r.n, p.item_len, p.budget))
            .collect()
    } else {
        Vec::new()
    };
    let opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
    match p.format {
        Format::Table => {
            println!(
                "{:>11} {:>6} {:>4} {:>3} {:>8} {:>6} {:>9} {:>10} {:>10}",
                "N", "B", "C", "W", "S", "alpha", "overhead", "published", "log10_eps"
            );
            for r in &rows {
                println!(
                    "{:>11} {:>6} {:>4} {:>3} {:>8} {:>6.2} {:>8.2}x {:>10} {:>10}",
                    r.n,
                    r.b,
                    r.c,
                    r.w,
                    r.s,
                    r.alpha,
                    r.overhead,
                    r.published.map_or("-".into(), |v| format!("{v:.2}x")),
                    opt(r.log_eps, 1)
                );
            }
            if !prior.is_empty() {
                println!(
                    "\n{:>11} {:>9} {:>9} {:>13} {:>16} {:>10}",
                    "N", "b", "batcher", "sort_ops", "columnsort_max", "colsort_ok"
                );
                for a in &prior {
                    println!(
                        "{:>11} {:>9} {:>8}x {:>13.0} {:>16} {:>10}",
                        a.n_items,
                        a.bucket_records,
                        a.batcher_multiplier,
                        a.batcher_sort_ops,
                        a.columnsort_max_items,
                        a.columnsort_feasible
                    );
                }
            }
        }
        Format::Csv => {
            println!("n,b,c,w,s,alpha,overhead,published,log10_eps");
            for r in &rows {
                println!(
                    "{},{},{},{},{},{:.4},{:.4},{},{}",
                    r.n,
                    r.b,
                    r.c,
                    r.w,
                    r.s,
                    r.alpha,
                    r.overhead,
                    opt(r.published, 2),
                    opt(r.log_eps, 1)
                );
            }
            if !prior.is_empty() {
                println!(
                    "\nn,bucket_records,batcher_multiplier,batcher_sort_ops,columnsort_max_items,columnsort_feasible"
                );
                for a in &prior {
                    println!(
                        "{},{},{},{},{},{}",
                        a.n_items,
                        a.bucket_records,
                        a.batcher_multiplier,
                        a.batcher_sort_ops,
                        a.columnsort_max_items,
                        a.columnsort_feasible
                    );
                }
            }
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "n": r.n, "b": r.b, "c": r.c, "w": r.w, "s": r.s,
                        "alpha": r.alpha, "overhead": r.overhead,
                        "published": r.published, "log10_eps": r.log_eps,
                    })
                })
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({ "scenarios": rows, "prior_art": prior }))?
            );
        }
    }
    Ok(())
}
