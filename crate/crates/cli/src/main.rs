use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use binned_ssa::bench::{self, BenchError, BenchSpec, RateProfile, SweepOptions};
use binned_ssa::lint::{audit_dependency_graph, lint_model};
use binned_ssa::plot::{self, PlotError};
use binned_ssa::spatial::elf_ehrenberg_model;
use binned_ssa::{
    parse_model, run, run_ensemble, BinPolicy, DependencyGraph, Method, OutputMode, ParseError, RunConfig, SimError,
    SimModel, SpatialError,
};
use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ssa", version, about = "Exact stochastic simulation and reaction-generator benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory of a well-mixed model file.
    Simulate(SimulateArgs),
    /// Run independent realizations and report per-snapshot moments.
    Ensemble(EnsembleArgs),
    /// Simulate the spatial Elf–Ehrenberg model and write a final snapshot.
    Spatial(SpatialArgs),
    /// Time select+update cycles of one generator on a synthetic network.
    Benchmark(BenchmarkArgs),
    /// Parameter sweeps over bin width, bin count or network size.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Lint a model file and audit its dependency graph without simulating.
    Validate(ValidateArgs),
}

fn method_parser() -> impl clap::builder::TypedValueParser<Value = Method> {
    PossibleValuesParser::new(Method::ALL.map(Method::id)).map(|s| s.parse::<Method>().expect("listed id"))
}

#[derive(Args)]
struct MethodArgs {
    /// Event generator.
    #[arg(long, default_value = "nrm-bins", value_parser = method_parser())]
    method: Method,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fixed bin width in seconds (nrm-bins); default 16 × trailing mean step.
    #[arg(long)]
    width: Option<f64>,
    /// Fixed bin count (nrm-bins); default ⌈20·√active⌉.
    #[arg(long)]
    bins: Option<usize>,
}

impl MethodArgs {
    fn policy(&self) -> BinPolicy {
        BinPolicy { width: self.width, bins: self.bins, ..BinPolicy::default() }
    }

    fn print_config(&self, extra: &str) {
        eprintln!("config: method={} seed={} {} {extra}", self.method, self.seed, self.policy().describe());
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    run: MethodArgs,
    /// Final time in seconds.
    #[arg(long)]
    tfinal: f64,
    /// Snapshot interval; without it only the final state is written.
    #[arg(long)]
    dt: Option<f64>,
    /// Trajectory CSV (`t,<species>`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Counter file (`key=value` lines).
    #[arg(long)]
    counters: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000_000)]
    max_steps: u64,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    run: MethodArgs,
    #[arg(long)]
    tfinal: f64,
    #[arg(long)]
    dt: Option<f64>,
    /// Number of realizations; realization k uses seed ^ mix64(k).
    #[arg(long, short = 'n', default_value_t = 100)]
    realizations: u64,
    /// Moments CSV (`t,species,mean,variance,std_error`); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    counters: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpatialModelName {
    ElfEhrenberg,
}

#[derive(Args)]
struct SpatialArgs {
    /// Side of the periodic cubic domain, μm.
    #[arg(long)]
    domain: f64,
    /// Subvolume side, μm; must divide the domain.
    #[arg(long)]
    subvolume: f64,
    #[arg(long, value_enum, default_value = "elf-ehrenberg")]
    model: SpatialModelName,
    #[command(flatten)]
    run: MethodArgs,
    #[arg(long)]
    tfinal: f64,
    /// Seed of the initial enzyme placement.
    #[arg(long, default_value_t = 1)]
    placement_seed: u64,
    /// Snapshot CSV (`subvolume,species,count`, nonzero counts only); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    counters: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, default_value = "nrm-bins", value_parser = method_parser())]
    method: Method,
    /// Channel count.
    #[arg(long = "M")]
    channels: usize,
    /// Propensity updates per step, the fired channel included.
    #[arg(long, default_value_t = 10)]
    degree: usize,
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    #[arg(long, default_value_t = 1_000)]
    warmup: u64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    /// Append the result row to this CSV (header written when new).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCommon {
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    #[arg(long, default_value_t = 1_000)]
    warmup: u64,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 10)]
    degree: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Result table; stdout when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also draw the table as an SVG chart.
    #[arg(long)]
    plot: Option<PathBuf>,
}

impl SweepCommon {
    fn options(&self) -> SweepOptions {
        SweepOptions {
            steps: self.steps,
            warmup: self.warmup,
            repetitions: self.reps,
            out_degree: self.degree,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Fixed bin widths; rates sum to 1 so W is in mean steps.
    Width {
        #[arg(long = "M", default_value_t = 100_000)]
        channels: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0, std::f64::consts::SQRT_2, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0])]
        widths: Vec<f64>,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// Every (bin count, width) pair, both fixed.
    Grid {
        #[arg(long = "M", default_value_t = 100_000)]
        channels: usize,
        #[arg(long = "bin-counts", value_delimiter = ',', default_values_t = [100usize, 1_000, 10_000])]
        bin_counts: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 4.0, 16.0, 64.0])]
        widths: Vec<f64>,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// Per-step cost against M for several methods.
    Scaling {
        #[arg(long, value_delimiter = ',', default_values_t = [1_000usize, 10_000, 100_000])]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', value_parser = method_parser(),
              default_values_t = [Method::Direct, Method::Direct2d, Method::Direct3d, Method::CompositionRejection, Method::NrmHeap, Method::NrmBins])]
        methods: Vec<Method>,
        #[command(flatten)]
        common: SweepCommon,
    },
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Treat lint warnings as model errors.
    #[arg(long)]
    strict: bool,
}

/// Failure classes of the exit-code contract.
enum Failure {
    Usage(String),
    Model(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Model(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Model(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Model(e.to_string())
    }
}

impl From<SpatialError> for Failure {
    fn from(e: SpatialError) -> Self {
        match e {
            SpatialError::NonDivisibleDomain { .. } | SpatialError::InvalidMesh => Failure::Usage(e.to_string()),
            SpatialError::Model(_) => Failure::Model(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => Failure::Usage(e.to_string()),
            SimError::Model(_) => Failure::Model(e.to_string()),
            SimError::Corrupted(_) => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Sim(s) => s.into(),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<PlotError> for Failure {
    fn from(e: PlotError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| with_path(e, p))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn with_path(e: io::Error, p: &Path) -> io::Error {
    io::Error::new(e.kind(), format!("{}: {e}", p.display()))
}

fn load_model(path: &Path) -> Result<SimModel, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Model(format!("{}: {e}", path.display())))?;
    let file = parse_model(&text).map_err(|e| Failure::Model(format!("{}: {e}", path.display())))?;
    Ok(SimModel::new(file.network, file.initial))
}

fn write_counters(path: Option<&Path>, text: &str) -> io::Result<()> {
    if let Some(p) = path {
        std::fs::write(p, text).map_err(|e| with_path(e, p))?;
    }
    Ok(())
}

fn output_mode(dt: Option<f64>) -> OutputMode {
    dt.map_or(OutputMode::FinalOnly, OutputMode::Interval)
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let model = load_model(&a.model)?;
    a.run.print_config(&format!("tfinal={} model={}", a.tfinal, a.model.display()));
    let config = RunConfig {
        max_steps: a.max_steps,
        bin_policy: a.run.policy(),
        ..RunConfig::new(a.run.method, a.tfinal, a.run.seed).with_output(output_mode(a.dt))
    };
    let (trajectory, counters) = run(&model, &config)?;
    let mut out = output(a.out.as_deref())?;
    trajectory.write_csv(model.network.species(), &mut out)?;
    out.flush()?;
    write_counters(a.counters.as_deref(), &counters.to_key_values())?;
    eprintln!(
        "done: steps={} t={} termination={:?}",
        trajectory.steps, trajectory.final_time, trajectory.termination
    );
    Ok(())
}

fn ensemble(a: EnsembleArgs) -> Result<(), Failure> {
    let model = load_model(&a.model)?;
    a.run.print_config(&format!("tfinal={} realizations={}", a.tfinal, a.realizations));
    let config = RunConfig {
        bin_policy: a.run.policy(),
        ..RunConfig::new(a.run.method, a.tfinal, a.run.seed).with_output(output_mode(a.dt))
    };
    let stats = run_ensemble(&model, &config, a.realizations)?;
    let mut out = output(a.out.as_deref())?;
    stats.write_csv(model.network.species(), &mut out)?;
    out.flush()?;
    write_counters(a.counters.as_deref(), &stats.counters.to_key_values())?;
    eprintln!(
        "done: realizations={} steps={} truncated={} absorbed={}",
        stats.realizations, stats.counters.steps, stats.truncated, stats.absorbed
    );
    Ok(())
}

fn spatial(a: SpatialArgs) -> Result<(), Failure> {
    let SpatialModelName::ElfEhrenberg = a.model;
    let (model, initial) = elf_ehrenberg_model(a.domain, a.subvolume, a.placement_seed)?;
    a.run.print_config(&format!(
        "tfinal={} domain={} subvolume={} subvolumes={} channels={} placement_seed={}",
        a.tfinal,
        a.domain,
        a.subvolume,
        model.mesh.subvolume_count(),
        model.channel_count(),
        a.placement_seed
    ));
    let sim = SimModel::spatial(&model, initial);
    let config = RunConfig { bin_policy: a.run.policy(), ..RunConfig::new(a.run.method, a.tfinal, a.run.seed) };
    let (trajectory, counters) = run(&sim, &config)?;

    let mut out = output(a.out.as_deref())?;
    writeln!(out, "subvolume,species,count")?;
    let names = model.local.species();
    let s = names.len();
    for (i, &n) in trajectory.final_state.iter().enumerate() {
        if n > 0 {
            writeln!(out, "{},{},{n}", i / s, names[i % s])?;
        }
    }
    out.flush()?;
    write_counters(a.counters.as_deref(), &counters.to_key_values())?;
    let totals = model.species_totals(&trajectory.final_state);
    let totals: Vec<String> = names.iter().zip(totals).map(|(n, t)| format!("{n}={t}")).collect();
    eprintln!("done: steps={} totals {}", trajectory.steps, totals.join(" "));
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<(), Failure> {
    let spec = BenchSpec {
        method: a.method,
        channels: a.channels,
        out_degree: a.degree,
        steps: a.steps,
        warmup: a.warmup,
        seed: a.seed,
        repetitions: a.reps,
        profile: RateProfile::Unit,
        bin_policy: BinPolicy { width: a.width, bins: a.bins, ..BinPolicy::default() },
    };
    eprintln!(
        "config: method={} seed={} {} M={} degree={} steps={} warmup={} reps={}",
        spec.method,
        spec.seed,
        spec.bin_policy.describe(),
        spec.channels,
        spec.out_degree,
        spec.steps,
        spec.warmup,
        spec.repetitions
    );
    let result = bench::bench_generator(&spec)?;
    let row = result.csv_row();
    println!("{}", bench::BenchResult::CSV_HEADER);
    println!("{row}");
    if let Some(path) = &a.csv {
        let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
        let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| with_path(e, path))?;
        if fresh {
            writeln!(f, "{}", bench::BenchResult::CSV_HEADER)?;
        }
        writeln!(f, "{row}")?;
    }
    Ok(())
}

fn sweep(command: SweepCommand) -> Result<(), Failure> {
    let (name, table, common) = match command {
        SweepCommand::Width { channels, widths, common } => {
            eprintln!("config: method=nrm-bins seed={} M={channels} widths={widths:?} K=ceil(20*sqrt(active))", common.seed);
            ("width", bench::sweep_bin_width(channels, &widths, &common.options())?, common)
        }
        SweepCommand::Grid { channels, bin_counts, widths, common } => {
            eprintln!("config: method=nrm-bins seed={} M={channels} K={bin_counts:?} W={widths:?}", common.seed);
            ("grid", bench::sweep_bins_and_width(channels, &bin_counts, &widths, &common.options())?, common)
        }
        SweepCommand::Scaling { sizes, methods, common } => {
            let ids: Vec<&str> = methods.iter().map(|m| m.id()).collect();
            eprintln!(
                "config: methods={} seed={} M={sizes:?} {}",
                ids.join(","),
                common.seed,
                BinPolicy::default().describe()
            );
            ("scaling", bench::sweep_scaling(&methods, &sizes, &common.options())?, common)
        }
    };
    let mut out = output(common.csv.as_deref())?;
    table.write_csv(&mut out)?;
    out.flush()?;
    if let Some(svg) = &common.plot {
        let spec = plot::default_spec(name).expect("known sweep");
        let drawn = plot::plot_csv(&table.to_csv(), &spec)?;
        for w in &drawn.warnings {
            eprintln!("warning: {w}");
        }
        std::fs::write(svg, drawn.svg).map_err(|e| with_path(e, svg))?;
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<(), Failure> {
    let model = load_model(&a.model)?;
    let network = &model.network;
    eprintln!("config: validate model={} strict={}", a.model.display(), a.strict);
    let lints = lint_model(network, &model.initial);
    for l in &lints {
        println!("warning: {l}");
    }
    let graph = DependencyGraph::build(network);
    audit_dependency_graph(network, &graph).map_err(|e| Failure::Runtime(format!("dependency graph audit: {e}")))?;
    println!(
        "ok: {} species, {} channels, mean dependency out-degree {:.2}, {} warnings",
        network.species_count(),
        network.channel_count(),
        graph.mean_out_degree(),
        lints.len()
    );
    if a.strict && !lints.is_empty() {
        return Err(Failure::Model(format!("{} lint warnings", lints.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Ensemble(a) => ensemble(a),
        Command::Spatial(a) => spatial(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Sweep(c) => sweep(c),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
