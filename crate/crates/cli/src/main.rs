use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use minsky_core::dynamics::{classify_stability, fixed_rate, run_trajectory, Regime, ScheduleEntry};
use minsky_core::error::ErrorKind;
use minsky_core::estimation::{fit_beta, fit_mu};
use minsky_core::firm_model::{classify, FirmRecord, MinskyStatus};
use minsky_core::growth_analysis::{
    fit_growth_correlation, growth_pairs, quadrant_counts, select_suppliers, transition_histogram, StatusPattern,
    DEFAULT_BIN_WIDTH, DEFAULT_SECTOR,
};
use minsky_core::io::{
    self, cascade_rows, network_from_rows, network_rows, read_edges_path, read_firms_path, read_rates_path,
    trajectory_rows, Format, IngestOptions, DEFAULT_MAX_INVALID_FRACTION, EDGE_HEADER, FIRM_HEADER, TRAJECTORY_HEADER,
};
use minsky_core::network::{
    bootstrap_cascade, expected_failures, failure_cascade, generate_network, pick_initial_failures, plant_statuses,
    DegreeModel, PercolationParams, StatusMap, ThresholdMode,
};
use minsky_core::scenario::{calibrate_bounds, fit_years, generate_synthetic_population, run_scenario, year_shares, ScenarioConfig};
use minsky_core::{ModelParams, SystemState, TradeNetwork};

#[derive(Parser)]
#[command(name = "minsky", version, about = "Minsky crisis-accelerator toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every stochastic step
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config: model parameters for `simulate`, the scenario for `scenario run`
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Format of tabular outputs
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit mu and beta per year from a firm CSV
    Fit(FitArgs),
    /// Classify firm records as hedge, speculative or ponzi
    Classify(ClassifyArgs),
    /// Iterate the interest-rate map for one regime
    Simulate(SimulateArgs),
    /// Trade-credit networks
    #[command(subcommand)]
    Network(NetworkCommand),
    /// Contagion on a trade-credit network
    #[command(subcommand)]
    Contagion(ContagionCommand),
    /// Supplier growth analysis
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Multi-period scenarios
    #[command(subcommand)]
    Scenario(ScenarioCommand),
    /// Synthetic data
    #[command(subcommand)]
    Generate(GenerateCommand),
}

#[derive(Subcommand)]
enum NetworkCommand {
    /// Generate a random network with Pareto in-degrees
    Gen(NetworkGenArgs),
}

#[derive(Subcommand)]
enum ContagionCommand {
    /// Run a failure or bootstrap cascade
    Run(ContagionArgs),
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Compare estimated and realized supplier growth
    Growth(GrowthArgs),
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Run the scenario given with --config
    Run,
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// Draw a synthetic firm population
    Population(PopulationArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Largest tolerated share of invalid rows
    #[arg(long, default_value_t = DEFAULT_MAX_INVALID_FRACTION)]
    max_invalid: f64,
}

impl IngestArgs {
    fn options(&self) -> IngestOptions {
        IngestOptions { max_invalid_fraction: self.max_invalid }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    firms: PathBuf,
    /// Rate series (`period,rate`) to calibrate i_min and i_max against
    #[arg(long, conflicts_with_all = ["i_min", "i_max"])]
    rates: Option<PathBuf>,
    #[arg(long, requires = "i_max")]
    i_min: Option<f64>,
    #[arg(long, requires = "i_min")]
    i_max: Option<f64>,
    #[command(flatten)]
    ingest: IngestArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    firms: PathBuf,
    #[command(flatten)]
    ingest: IngestArgs,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha2: Option<f64>,
    #[arg(long)]
    i_min: Option<f64>,
    #[arg(long)]
    i_max: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// loans or crisis
    #[arg(long)]
    regime: Regime,
    #[arg(long, default_value_t = 12)]
    steps: usize,
    /// Initial interest rate, percent per year
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = 1_000_000)]
    n_tot: u64,
    #[arg(long, default_value_t = 0)]
    n_hedge: u64,
    /// Stability band half-width
    #[arg(long, default_value_t = minsky_core::dynamics::DEFAULT_STABILITY_EPSILON)]
    epsilon: f64,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct NetworkGenArgs {
    #[arg(long)]
    n: usize,
    /// Tail exponent of the cumulative in-degree distribution
    #[arg(long, default_value_t = 1.3)]
    exponent: f64,
    #[arg(long, default_value_t = 35.5)]
    mean_degree: f64,
    /// Largest in-degree; defaults to n - 1
    #[arg(long)]
    max_degree: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CascadeMode {
    Failure,
    Bootstrap,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThresholdArg {
    Fraction,
    Count,
}

#[derive(Clone, Copy, ValueEnum)]
enum RestStatus {
    Hedge,
    Speculative,
}

#[derive(Args)]
struct ContagionArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long, value_enum)]
    mode: CascadeMode,
    /// Take statuses from the records of --year in this firm CSV
    #[arg(long, requires = "year", conflicts_with = "ponzi_density")]
    firms: Option<PathBuf>,
    #[arg(long)]
    year: Option<i32>,
    /// Plant ponzi firms at random with this density instead
    #[arg(long)]
    ponzi_density: Option<f64>,
    /// Status of the firms not planted as ponzi
    #[arg(long, value_enum, default_value_t = RestStatus::Hedge)]
    rest: RestStatus,
    /// Initial failures (failure mode); comma separated
    #[arg(long, value_delimiter = ',')]
    initial: Vec<String>,
    /// Number of random ponzi firms to fail when --initial is absent
    #[arg(long, default_value_t = 1)]
    initial_count: usize,
    #[arg(long, default_value_t = 0.15)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = ThresholdArg::Fraction)]
    threshold_mode: ThresholdArg,
    /// Critical density for the closed-form failure estimate
    #[arg(long, requires_all = ["gamma", "scale"])]
    rho_c: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    #[command(flatten)]
    ingest: IngestArgs,
}

#[derive(Args)]
struct GrowthArgs {
    /// Firm CSV holding both years
    #[arg(long)]
    firms: PathBuf,
    /// Network of the base year
    #[arg(long)]
    edges: PathBuf,
    /// Network of the following year; defaults to --edges
    #[arg(long)]
    edges_next: Option<PathBuf>,
    /// Base year; the following year is year + 1
    #[arg(long)]
    year: i32,
    #[arg(long, default_value = DEFAULT_SECTOR, conflicts_with = "all_sectors")]
    sector: String,
    #[arg(long)]
    all_sectors: bool,
    /// Report the raw weighted sum instead of the weighted mean
    #[arg(long)]
    unnormalized: bool,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    bin_width: f64,
    #[command(flatten)]
    ingest: IngestArgs,
}

#[derive(Args)]
struct PopulationArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = 2006)]
    year: i32,
    #[arg(long, default_value_t = 2.42)]
    i_min: f64,
    #[arg(long, default_value_t = 49.0)]
    i_max: f64,
}

/// Bad arguments detected by the CLI itself.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

trait CoreResult<T> {
    fn core(self) -> anyhow::Result<T>;
}

impl<T, E: Into<minsky_core::Error>> CoreResult<T> for Result<T, E> {
    fn core(self) -> anyhow::Result<T> {
        self.map_err(|e| anyhow::Error::new(e.into()))
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<minsky_core::Error>() {
            return match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Numeric => 3,
                ErrorKind::Io => 1,
            };
        }
        if cause.is::<Invalid>() {
            return 2;
        }
    }
    1
}

struct Output<'a> {
    dir: &'a Path,
    format: Format,
}

impl Output<'_> {
    fn path(&self, name: &str) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        Ok(self.dir.join(name))
    }

    fn table<T: Serialize>(&self, stem: &str, header: &[&str], rows: &[T]) -> anyhow::Result<PathBuf> {
        let path = self.path(&format!("{stem}.{}", self.format.extension()))?;
        self.table_at(&path, header, rows)?;
        Ok(path)
    }

    fn table_at<T: Serialize>(&self, path: &Path, header: &[&str], rows: &[T]) -> anyhow::Result<()> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        io::write_rows_with_header(BufWriter::new(file), header, rows, self.format).core()
    }

    fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        let path = self.path(name)?;
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        io::write_json(BufWriter::new(file), value).core()?;
        Ok(path)
    }
}

fn require_seed(global: &Global, what: &str) -> anyhow::Result<u64> {
    global.seed.ok_or_else(|| invalid(format!("{what} is stochastic and needs --seed")))
}

fn read_firms(path: &Path, ingest: &IngestArgs) -> anyhow::Result<Vec<FirmRecord>> {
    let data = read_firms_path(path, ingest.options()).core()?;
    for w in &data.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    for r in &data.rejected {
        eprintln!("rejected: {}:{}: {}", path.display(), r.line, r.reason);
    }
    Ok(data.rows)
}

fn read_network(path: &Path, ingest: &IngestArgs) -> anyhow::Result<TradeNetwork> {
    let data = read_edges_path(path, ingest.options()).core()?;
    for r in &data.rejected {
        eprintln!("rejected: {}:{}: {}", path.display(), r.line, r.reason);
    }
    network_from_rows(&data.rows).core()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    let out = Output { dir: &g.out, format: g.format.into() };
    match cli.command {
        Command::Fit(a) => fit(&a, &out),
        Command::Classify(a) => classify_cmd(&a, &out),
        Command::Simulate(a) => simulate(&a, g, &out),
        Command::Network(NetworkCommand::Gen(a)) => network_gen(&a, g, &out),
        Command::Contagion(ContagionCommand::Run(a)) => contagion(&a, g, &out),
        Command::Analyze(AnalyzeCommand::Growth(a)) => growth(&a, &out),
        Command::Scenario(ScenarioCommand::Run) => scenario(g, &out),
        Command::Generate(GenerateCommand::Population(a)) => population(&a, g, &out),
    }
}

fn fit(a: &FitArgs, out: &Output) -> anyhow::Result<()> {
    let records = read_firms(&a.firms, &a.ingest)?;
    let mut bounds = a.i_min.zip(a.i_max);
    if let Some(rates) = &a.rates {
        let series = read_rates_path(rates).core()?;
        let cal = calibrate_bounds(&year_shares(&records), &series, &fit_mu(&records).core()?, &fit_beta(&records).core()?)
            .core()?;
        println!(
            "calibrated i_min {:.4} (alpha1 {:.4}), i_max {:.4} (alpha2 {:.4})",
            cal.loans.bound, cal.loans.alpha, cal.crisis.bound, cal.crisis.alpha
        );
        out.json("calibration.json", &cal)?;
        bounds = Some((cal.loans.bound, cal.crisis.bound));
    }
    let fits = fit_years(&records, bounds).core()?;
    for f in &fits {
        println!("{}: mu {:.4} (R2 {:.4}), beta {:.4} (R2 {:.4})", f.year, f.mu, f.r2_mu, f.beta, f.r2_beta);
    }
    let header = ["year", "mu", "i_min", "beta", "i_max", "r2_mu", "r2_beta", "n_excluded"];
    out.table("params", &header, &fits)?;
    Ok(())
}

#[derive(Serialize)]
struct StatusRow<'a> {
    firm_id: &'a str,
    year: i32,
    status: Option<MinskyStatus>,
}

fn classify_cmd(a: &ClassifyArgs, out: &Output) -> anyhow::Result<()> {
    let records = read_firms(&a.firms, &a.ingest)?;
    let rows: Vec<StatusRow> =
        records.iter().map(|r| StatusRow { firm_id: &r.firm_id, year: r.year, status: classify(r).ok() }).collect();
    let unclassified = rows.iter().filter(|r| r.status.is_none()).count();
    out.table("statuses", &["firm_id", "year", "status"], &rows)?;
    let shares = year_shares(&records);
    for s in &shares {
        println!(
            "{}: {} firms, hedge {:.4}, speculative {:.4}, ponzi {:.4}",
            s.year, s.n_classified, s.hedge, s.speculative, s.ponzi
        );
    }
    if unclassified > 0 {
        println!("{unclassified} records lack a field needed for classification");
    }
    out.table("shares", &["year", "n_classified", "hedge", "speculative", "ponzi"], &shares)?;
    Ok(())
}

fn model_params(args: &ParamArgs, config: Option<&Path>) -> anyhow::Result<ModelParams> {
    let base: Option<ModelParams> = match config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };
    let pick = |flag: Option<f64>, from: fn(&ModelParams) -> f64, name: &str| {
        flag.or(base.as_ref().map(from))
            .ok_or_else(|| invalid(format!("missing --{name} (or pass the parameters with --config)")))
    };
    ModelParams::new(
        pick(args.mu, |p| p.mu, "mu")?,
        pick(args.beta, |p| p.beta, "beta")?,
        pick(args.alpha1, |p| p.alpha1, "alpha1")?,
        pick(args.alpha2, |p| p.alpha2, "alpha2")?,
        pick(args.i_min, |p| p.i_min, "i-min")?,
        pick(args.i_max, |p| p.i_max, "i-max")?,
    )
    .core()
}

#[derive(Serialize)]
struct SimulationSummary {
    regime: Regime,
    params: ModelParams,
    product: f64,
    stability: minsky_core::StabilityClass,
    fixed_rate: f64,
    start: SystemState,
    end: SystemState,
}

fn simulate(a: &SimulateArgs, g: &Global, out: &Output) -> anyhow::Result<()> {
    let params = model_params(&a.params, g.config.as_deref())?;
    let initial = SystemState::at_rate(a.rate, a.n_tot, a.n_hedge, &params).core()?;
    let schedule = [ScheduleEntry { period: 0, regime: a.regime, params }];
    let points = run_trajectory(&initial, &schedule, a.steps).core()?;
    let product = params.product(a.regime);
    let summary = SimulationSummary {
        regime: a.regime,
        params,
        product,
        stability: classify_stability(product, a.epsilon),
        fixed_rate: fixed_rate(a.regime, &params),
        start: initial,
        end: points.last().map_or(initial, |p| p.state),
    };
    println!(
        "{} regime: product {:.4} ({:?}), rate {:.4} -> {:.4} after {} steps",
        a.regime, product, summary.stability.kind, initial.rate, summary.end.rate, a.steps
    );
    out.table("trajectory", TRAJECTORY_HEADER, &trajectory_rows(&points))?;
    out.json("simulation.json", &summary)?;
    Ok(())
}

fn network_gen(a: &NetworkGenArgs, g: &Global, out: &Output) -> anyhow::Result<()> {
    let seed = require_seed(g, "network generation")?;
    if a.n < 2 {
        return Err(invalid("--n must be at least 2"));
    }
    let model = DegreeModel {
        pareto_exponent: a.exponent,
        mean_degree: a.mean_degree,
        max_degree: a.max_degree.unwrap_or(a.n - 1),
    };
    let net = generate_network(a.n, &model, seed).core()?;
    println!(
        "{} nodes, {} edges, mean in-degree {:.3}, max in-degree {}",
        net.node_count(),
        net.edge_count(),
        net.edge_count() as f64 / net.node_count() as f64,
        net.in_degrees().into_iter().max().unwrap_or(0)
    );
    out.table("edges", EDGE_HEADER, &network_rows(&net))?;
    Ok(())
}

#[derive(Serialize)]
struct CascadeSummary {
    mode: &'static str,
    nodes: usize,
    ponzi: usize,
    ponzi_density: f64,
    expected_failures: Option<f64>,
    seeds: Vec<String>,
    rounds: usize,
    affected: Vec<String>,
}

fn contagion(a: &ContagionArgs, g: &Global, out: &Output) -> anyhow::Result<()> {
    let net = read_network(&a.edges, &a.ingest)?;
    let statuses: StatusMap = match (&a.firms, a.ponzi_density) {
        (Some(path), _) => {
            let year = a.year.expect("clap enforces --year with --firms");
            read_firms(path, &a.ingest)?
                .iter()
                .filter(|r| r.year == year && net.contains(&r.firm_id))
                .filter_map(|r| classify(r).ok().map(|s| (r.firm_id.clone(), s)))
                .collect()
        }
        (None, Some(density)) => {
            let seed = require_seed(g, "planting statuses")?;
            let rest = match a.rest {
                RestStatus::Hedge => MinskyStatus::Hedge,
                RestStatus::Speculative => MinskyStatus::Speculative,
            };
            plant_statuses(&net, density, rest, seed).core()?
        }
        (None, None) => return Err(invalid("give statuses with --firms and --year, or --ponzi-density")),
    };
    let ponzi = statuses.values().filter(|&&s| s == MinskyStatus::Ponzi).count();
    let density = ponzi as f64 / net.node_count().max(1) as f64;

    let expected = match (a.rho_c, a.gamma, a.scale) {
        (Some(rho_c), Some(gamma), Some(s)) => {
            let params = PercolationParams::new(rho_c, gamma, s).core()?;
            Some(expected_failures(density, &params).core()?)
        }
        _ => None,
    };

    let (mode, report) = match a.mode {
        CascadeMode::Failure => {
            let initial = if a.initial.is_empty() {
                let seed = require_seed(g, "choosing initial failures")?;
                pick_initial_failures(&net, &statuses, a.initial_count, seed).core()?
            } else {
                a.initial.clone()
            };
            let refs: Vec<&str> = initial.iter().map(String::as_str).collect();
            ("failure", failure_cascade(&net, &statuses, &refs).core()?)
        }
        CascadeMode::Bootstrap => {
            let mode = match a.threshold_mode {
                ThresholdArg::Fraction => ThresholdMode::FractionOfBuyers,
                ThresholdArg::Count => ThresholdMode::AbsoluteCount,
            };
            ("bootstrap", bootstrap_cascade(&net, &statuses, a.threshold, mode).core()?)
        }
    };
    let summary = CascadeSummary {
        mode,
        nodes: net.node_count(),
        ponzi,
        ponzi_density: density,
        expected_failures: expected,
        seeds: report.seeds.clone(),
        rounds: report.rounds.len(),
        affected: report.affected(),
    };
    println!(
        "{mode} cascade: ponzi density {density:.4}, {} seeds, {} rounds, {} affected",
        summary.seeds.len(),
        summary.rounds,
        summary.affected.len()
    );
    if let Some(e) = expected {
        println!("closed-form expected failures {e:.3}");
    }
    out.table("cascade", &["round", "new_failures", "cumulative_failures"], &cascade_rows(&report))?;
    out.json("cascade_summary.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct GroupFit {
    group: &'static str,
    fit: Option<minsky_core::FitResult>,
    error: Option<String>,
}

#[derive(Serialize)]
struct GrowthSummary {
    year: i32,
    normalized: bool,
    suppliers: usize,
    included: usize,
    excluded_unmatched: usize,
    excluded_disappeared: usize,
    excluded_coverage: usize,
    excluded_sector: usize,
    skipped: minsky_core::growth_analysis::PairSkips,
    pairs: usize,
    fits: Vec<GroupFit>,
    histogram: Option<minsky_core::growth_analysis::TransitionHistogram>,
    crossing: Option<f64>,
    quadrants: minsky_core::growth_analysis::QuadrantCounts,
}

fn growth(a: &GrowthArgs, out: &Output) -> anyhow::Result<()> {
    let records = read_firms(&a.firms, &a.ingest)?;
    let year_t: Vec<FirmRecord> = records.iter().filter(|r| r.year == a.year).cloned().collect();
    let year_t1: Vec<FirmRecord> = records.iter().filter(|r| r.year == a.year + 1).cloned().collect();
    if year_t.is_empty() || year_t1.is_empty() {
        return Err(invalid(format!("{} needs records for {} and {}", a.firms.display(), a.year, a.year + 1)));
    }
    let net = read_network(&a.edges, &a.ingest)?;
    let net_next = match &a.edges_next {
        Some(p) => read_network(p, &a.ingest)?,
        None => net.clone(),
    };
    let sector = (!a.all_sectors).then_some(a.sector.as_str());
    let selection = select_suppliers(&year_t, &year_t1, &net, &net_next, sector);
    let (pairs, skipped) = growth_pairs(selection.included(), &year_t, &year_t1, &net, !a.unnormalized);

    use MinskyStatus::Hedge;
    let groups = [
        ("all", StatusPattern::Any, StatusPattern::Any),
        ("hedge_to_hedge", StatusPattern::Is(Hedge), StatusPattern::Is(Hedge)),
        ("hedge_to_non_hedge", StatusPattern::Is(Hedge), StatusPattern::Not(Hedge)),
    ];
    let fits = groups
        .into_iter()
        .map(|(group, from, to)| match fit_growth_correlation(&pairs, from, to) {
            Ok(fit) => GroupFit { group, fit: Some(fit), error: None },
            Err(e) => GroupFit { group, fit: None, error: Some(e.to_string()) },
        })
        .collect::<Vec<_>>();
    let ratios: Vec<(f64, bool)> =
        pairs.iter().filter(|p| p.status_from == Hedge).map(|p| (p.ponzi_buyer_ratio, p.status_to == Hedge)).collect();
    let histogram = if ratios.is_empty() { None } else { Some(transition_histogram(&ratios, a.bin_width).core()?) };

    let summary = GrowthSummary {
        year: a.year,
        normalized: !a.unnormalized,
        suppliers: selection.suppliers.len(),
        included: selection.included().count(),
        excluded_unmatched: selection.excluded_unmatched,
        excluded_disappeared: selection.excluded_disappeared,
        excluded_coverage: selection.excluded_coverage,
        excluded_sector: selection.excluded_sector,
        skipped,
        pairs: pairs.len(),
        crossing: histogram.as_ref().and_then(|h| h.crossing),
        histogram,
        fits,
        quadrants: quadrant_counts(&pairs),
    };
    println!("{} of {} suppliers selected, {} growth pairs", summary.included, summary.suppliers, summary.pairs);
    for f in &summary.fits {
        match &f.fit {
            Some(fit) => println!("{}: slope {:.4}, R2 {:.4}, n {}", f.group, fit.slope, fit.r_squared, fit.n_points),
            None => println!("{}: no fit ({})", f.group, f.error.as_deref().unwrap_or("")),
        }
    }
    if let Some(c) = summary.crossing {
        println!("histogram crossing at ponzi-buyer ratio {c:.3}");
    }
    let header = ["supplier_id", "estimated", "realized", "status_from", "status_to", "ponzi_buyer_ratio"];
    out.table("growth", &header, &pairs)?;
    out.json("growth_summary.json", &summary)?;
    Ok(())
}

fn scenario(g: &Global, out: &Output) -> anyhow::Result<()> {
    let path = g.config.as_deref().ok_or_else(|| invalid("scenario run needs --config <scenario.json>"))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config = ScenarioConfig::from_json(&text).core()?;
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let report = run_scenario(&config, base).core()?;
    for p in &report.periods {
        println!(
            "{} ({}): alpha1*mu {:.4} {:?}, alpha2*beta {:.4} {:?}, rate {:.4} -> {:.4}",
            p.label,
            p.regime,
            p.loans_product,
            p.loans_stability.kind,
            p.crisis_product,
            p.crisis_stability.kind,
            p.start.rate,
            p.end.rate
        );
    }
    let rows = trajectory_rows(&report.trajectory);
    match &config.outputs.trajectory {
        Some(p) => out.table_at(&out.path("")?.join(p), TRAJECTORY_HEADER, &rows)?,
        None => {
            out.table("trajectory", TRAJECTORY_HEADER, &rows)?;
        }
    }
    let report_name = config.outputs.report.clone().unwrap_or_else(|| "scenario_report.json".into());
    out.json(&report_name.to_string_lossy(), &report)?;
    Ok(())
}

fn population(a: &PopulationArgs, g: &Global, out: &Output) -> anyhow::Result<()> {
    let seed = require_seed(g, "population generation")?;
    let params = ModelParams::new(a.mu, a.beta, 1.0, 1.0, a.i_min, a.i_max).core()?;
    let records = generate_synthetic_population(a.n, a.mu, a.beta, a.rate, &params, seed, a.year).core()?;
    let shares = year_shares(&records);
    if let Some(s) = shares.first() {
        println!("{} firms: hedge {:.4}, speculative {:.4}, ponzi {:.4}", records.len(), s.hedge, s.speculative, s.ponzi);
    }
    out.table("firms", FIRM_HEADER, &records)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
