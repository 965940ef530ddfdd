use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qroute::addressing::QuantumAddress;
use qroute::clustering::{AnchorConstruction, Scheme};
use qroute::harness::{
    build_trial, compare_schemes, render_summary, run_experiment, ExperimentConfig, ExperimentReport, MetricSpec, Seeds,
};
use qroute::qsearch::{
    mixture_success_probability, routing_lookup_via_search, run_search, LayoutPolicy, SearchConfig, SearchInstance,
};
use qroute::topology::{generate_graph, GraphModel};

#[derive(Parser)]
#[command(name = "qroute", version, about = "Compact routing experiments over entanglement overlays")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate overlay graphs and write them as graph files.
    Generate(Common),
    /// Build neighborhoods and anchors or tracked sets and report coverage.
    Cluster(Common),
    /// Build routing tables; resolve one pair or dump the tables.
    Route {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "dest")]
        source: Option<usize>,
        #[arg(long, requires = "source")]
        dest: Option<usize>,
    },
    /// Run the full sweep with assertions; exits non-zero if any fails.
    Eval(Common),
    /// Run a superposed-address search, synthetic or on a built table.
    Qsearch {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: QsearchArgs,
    },
    /// Compare the configured scheme against another on the same seeds.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Config for the second run; defaults to the other scheme.
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Print a stored summary; exits non-zero if it records failures.
    Report {
        /// `summary.json`, or a directory holding one.
        path: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKind {
    ErdosRenyi,
    Waxman,
    BarabasiAlbert,
    GridTorus,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML or JSON config; its keys override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_e: Option<usize>,
    #[arg(long, value_enum)]
    graph: Option<GraphKind>,
    #[arg(long)]
    edge_prob: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    attach: Option<usize>,
    /// Torus shape as `ROWSxCOLS`.
    #[arg(long)]
    torus: Option<String>,
    /// Registered metric name: hop-count, uniform-random or capacity.
    #[arg(long)]
    metric: Option<String>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    #[arg(long, value_parser = parse_anchors)]
    anchors: Option<AnchorConstruction>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    f: Option<usize>,
    #[arg(long)]
    ebit_budget: Option<u32>,
    #[arg(long)]
    capacity_cap: Option<usize>,
    #[arg(long)]
    no_fallback: bool,
    /// `START..END`, `A,B,C` or a single seed.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    #[arg(long)]
    chain_samples: Option<usize>,
    #[arg(long)]
    search_checks: Option<usize>,
    #[arg(long)]
    qubit_cap: Option<u32>,
    /// Output directory; defaults to `$QROUTE_OUT_DIR`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QsearchArgs {
    /// Synthetic instance: number of table entries.
    #[arg(long)]
    n_t: Option<usize>,
    /// Synthetic instance: entries holding the target.
    #[arg(long, default_value_t = 1)]
    hits: usize,
    /// Synthetic instance: overlap `|<target|A>|^2`, a unit fraction.
    #[arg(long, default_value_t = 1.0)]
    overlap: f64,
    #[arg(long)]
    iterations: Option<usize>,
    /// Table mode: owner of the searched table.
    #[arg(long)]
    owner: Option<usize>,
    /// Table mode: destination ESP.
    #[arg(long)]
    target: Option<usize>,
    #[arg(long, default_value_t = 8)]
    repeats: usize,
    #[arg(long, value_parser = parse_layout, default_value = "auto")]
    layout: LayoutPolicy,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "partial-anchor" | "partial" => Ok(Scheme::PartialAnchor),
        "full-anchor" | "full" => Ok(Scheme::FullAnchor),
        _ => Err(format!("unknown scheme `{s}` (partial-anchor, full-anchor)")),
    }
}

fn parse_anchors(s: &str) -> Result<AnchorConstruction, String> {
    match s {
        "greedy" | "greedy-cover" => Ok(AnchorConstruction::GreedyCover),
        "random" | "randomized-cover" => Ok(AnchorConstruction::RandomizedCover),
        _ => Err(format!("unknown anchor construction `{s}` (greedy, random)")),
    }
}

fn parse_layout(s: &str) -> Result<LayoutPolicy, String> {
    match s {
        "auto" => Ok(LayoutPolicy::Auto),
        "full" => Ok(LayoutPolicy::Full),
        "reduced" => Ok(LayoutPolicy::Reduced),
        _ => Err(format!("unknown layout `{s}` (auto, full, reduced)")),
    }
}

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed `{t}`: {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (start, end) = (num(a)?, num(b)?);
        if end <= start {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok(Seeds::Range { start, count: end - start });
    }
    s.split(',').map(num).collect::<Result<Vec<_>, _>>().map(Seeds::List)
}

impl Common {
    /// Defaults, then flags, then the config file on top.
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        if let Some(n) = self.n_e {
            c.n_e = n;
        }
        c.graph = self.graph_model(c.n_e)?;
        if let Some(m) = &self.metric {
            c.metric = MetricSpec::Named(m.clone());
        }
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field.clone() { c.$field = v; })* };
        }
        set!(scheme, anchors, m, f, ebit_budget, seeds, chain_samples, search_checks, qubit_cap);
        c.k = self.k.or(c.k);
        c.capacity_cap = self.capacity_cap.or(c.capacity_cap);
        c.output_dir = self.out.clone();
        if self.no_fallback {
            c.fallback = false;
        }
        if let Some(path) = &self.config {
            c = ExperimentConfig::load_over(path, &c)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn graph_model(&self, n_e: usize) -> Result<Option<GraphModel>> {
        let Some(kind) = self.graph else {
            if self.torus.is_some() {
                return self.graph_model_of(GraphKind::GridTorus, n_e).map(Some);
            }
            return Ok(None);
        };
        self.graph_model_of(kind, n_e).map(Some)
    }

    fn graph_model_of(&self, kind: GraphKind, n_e: usize) -> Result<GraphModel> {
        Ok(match kind {
            GraphKind::ErdosRenyi => match self.edge_prob {
                Some(edge_prob) => GraphModel::ErdosRenyi { edge_prob },
                None => GraphModel::sparse_erdos_renyi(n_e),
            },
            GraphKind::Waxman => {
                GraphModel::Waxman { alpha: self.alpha.unwrap_or(0.4), beta: self.beta.unwrap_or(0.4) }
            }
            GraphKind::BarabasiAlbert => GraphModel::BarabasiAlbert { attach: self.attach.unwrap_or(2) },
            GraphKind::GridTorus => {
                let (rows, cols) = match &self.torus {
                    Some(shape) => {
                        let (r, c) = shape.split_once('x').context("torus shape must be ROWSxCOLS")?;
                        (r.parse()?, c.parse()?)
                    }
                    None => {
                        let side = (n_e as f64).sqrt().round() as usize;
                        (side, n_e / side.max(1))
                    }
                };
                GraphModel::GridTorus { rows, cols }
            }
        })
    }
}

fn emit(out: Option<&Path>, name: &str, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn generate(common: &Common) -> Result<bool> {
    let config = common.config()?;
    let metric = config.metric.resolve()?;
    let out = config.resolved_output_dir();
    for seed in config.seeds.to_vec() {
        let graph = generate_graph(config.graph_model(), config.n_e, &metric, seed)?;
        log::info!("seed {seed}: {} links, {} attempts", graph.edge_count(), graph.stats().attempts);
        match &out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let path = dir.join(format!("graph_seed_{seed}.txt"));
                graph.write_file(&path)?;
                println!("wrote {}", path.display());
            }
            None => print!("{}", graph.to_graph_file()),
        }
    }
    Ok(true)
}

fn cluster(common: &Common) -> Result<bool> {
    let config = common.config()?;
    let mut docs = Vec::new();
    for seed in config.seeds.to_vec() {
        let trial = build_trial(&config, seed)?;
        docs.push(serde_json::json!({
            "seed": seed,
            "k": trial.k,
            "long_range": trial.overlay.long_range(),
            "coverage": trial.coverage,
        }));
    }
    emit(config.resolved_output_dir().as_deref(), "clusters.json", &docs)?;
    Ok(true)
}

fn route(common: &Common, pair: Option<(usize, usize)>) -> Result<bool> {
    let config = common.config()?;
    let seed = config.seeds.to_vec()[0];
    let trial = build_trial(&config, seed)?;
    let overlay = &trial.overlay;
    match pair {
        Some((i, d)) => {
            let n = overlay.n_e();
            if i >= n || d >= n {
                bail!("ESP ids must be below n_e = {n}");
            }
            let path = overlay.resolve(i, d);
            let ok = path.case.is_scheme_path();
            emit(None, "", &path)?;
            Ok(ok)
        }
        None => {
            emit(config.resolved_output_dir().as_deref(), &format!("scheme_seed_{seed}.json"), &overlay.document())?;
            Ok(true)
        }
    }
}

fn eval(common: &Common) -> Result<bool> {
    let config = common.config()?;
    let report = run_experiment(&config)?;
    print!("{}", render_summary(&report));
    Ok(report.all_passed())
}

fn qsearch(common: &Common, args: &QsearchArgs) -> Result<bool> {
    let search = SearchConfig {
        qubit_cap: common.qubit_cap.unwrap_or(qroute::qsearch::DEFAULT_QUBIT_CAP),
        layout: args.layout,
        repeats: args.repeats,
        iterations: args.iterations,
    };
    if let Some(n_t) = args.n_t {
        if !(args.overlap > 0.0 && args.overlap <= 1.0) {
            bail!("overlap must be in (0, 1]");
        }
        let size = (1.0 / args.overlap).round() as usize;
        let instance = SearchInstance::synthetic(n_t, args.hits, size);
        let iterations = args.iterations.unwrap_or(1);
        let target = QuantumAddress::new(0, instance.address_width)?;
        let seed = common.seeds.as_ref().map_or(0, |s| s.to_vec()[0]);
        let outcome = run_search(&instance, &target, iterations, seed, &search)?;
        let alphas = instance.hit_alphas(0);
        let analytic = mixture_success_probability(n_t, &alphas, iterations);
        emit(
            None,
            "",
            &serde_json::json!({ "outcome": outcome, "analytic_success_probability": analytic }),
        )?;
        return Ok(true);
    }
    let (Some(owner), Some(target)) = (args.owner, args.target) else {
        bail!("give --n-t for a synthetic search, or --owner and --target for a table lookup");
    };
    let config = common.config()?;
    let seed = config.seeds.to_vec()[0];
    let trial = build_trial(&config, seed)?;
    let n = trial.overlay.n_e();
    if owner >= n || target >= n {
        bail!("ESP ids must be below n_e = {n}");
    }
    let address = trial.overlay.graph().plan().esp_address(target);
    let outcome = routing_lookup_via_search(&trial.overlay, owner, &address, &search, seed)?;
    emit(None, "", &outcome)?;
    Ok(true)
}

fn compare(common: &Common, against: Option<&Path>) -> Result<bool> {
    let a = common.config()?;
    let b = match against {
        Some(path) => ExperimentConfig::load_over(path, &a)?,
        None => ExperimentConfig {
            scheme: match a.scheme {
                Scheme::PartialAnchor => Scheme::FullAnchor,
                Scheme::FullAnchor => Scheme::PartialAnchor,
            },
            ..a.clone()
        },
    };
    let cmp = compare_schemes(&a, &b)?;
    emit(a.resolved_output_dir().as_deref(), "compare.json", &cmp)?;
    Ok(cmp.failures.is_empty())
}

fn report(path: &Path) -> Result<bool> {
    let file = if path.is_dir() { path.join("summary.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
    let report: ExperimentReport = serde_json::from_str(&text).with_context(|| format!("parsing {}", file.display()))?;
    print!("{}", render_summary(&report));
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Generate(c) => generate(c),
        Command::Cluster(c) => cluster(c),
        Command::Route { common, source, dest } => route(common, source.zip(*dest)),
        Command::Eval(c) => eval(c),
        Command::Qsearch { common, search } => qsearch(common, search),
        Command::Compare { common, against } => compare(common, against.as_deref()),
        Command::Report { path } => report(path),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
