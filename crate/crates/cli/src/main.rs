use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use minfilt::dataflow::NaiveAdders;
use minfilt::io::{self, parse_taps, ConfigError, SignalFormat, CONFIG_ENV_VAR};
use minfilt::streaming::convolve_parallel;
use minfilt::verify::{run_suite, KernelVariant, SuiteConfig};
use minfilt::{
    build_naive_graph, build_precompute_graph, build_winograd_graph, export_dot, precompute_taps,
    precompute_taps_factored, report, Arithmetic, Backend, BackendKind, Counting, DspBlockSpec,
    FixedFormat, Mode, Rational, RunConfig, ScalarValue, Signal, Structure, Taps3,
};

#[derive(Parser)]
#[command(name = "minfilt", version, about = "Two-output, three-tap minimal filtering toolkit")]
struct Cli {
    /// Configuration file; defaults to $MINFILT_CONFIG when set.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convolve a signal with three taps.
    Convolve(ConvolveArgs),
    /// Print the transformed taps s0..s3.
    Precompute(PrecomputeArgs),
    /// Area estimate as a resource report.
    Cost(CostArgs),
    /// DSP-block packing as a resource report.
    MapDsp(MapDspArgs),
    /// Write a dataflow graph in Graphviz format.
    Graph(GraphArgs),
    /// Run the seeded property suites.
    Verify(VerifyArgs),
    /// Time both evaluation modes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Fixed-point format `w,f[,policy[,rounding]]`; implies --backend fixed.
    #[arg(long, value_name = "FORMAT")]
    fixed: Option<FixedFormat>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Float64,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Naive,
    Winograd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    #[value(name = "raw_f64le")]
    RawF64le,
    #[value(name = "raw_i32le")]
    RawI32le,
}

impl From<FormatArg> for SignalFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => SignalFormat::Csv,
            FormatArg::Json => SignalFormat::Json,
            FormatArg::RawF64le => SignalFormat::RawF64le,
            FormatArg::RawI32le => SignalFormat::RawI32le,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StructureArg {
    Naive,
    Winograd,
}

impl From<StructureArg> for Structure {
    fn from(s: StructureArg) -> Self {
        match s {
            StructureArg::Naive => Structure::Naive,
            StructureArg::Winograd => Structure::Winograd,
        }
    }
}

#[derive(Args)]
struct ConvolveArgs {
    #[arg(long, value_name = "PATH")]
    signal: Option<PathBuf>,
    /// Encoding of the signal file.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Taps `h0,h1,h2`; integers, decimals or `p/q`.
    #[arg(long, allow_hyphen_values = true)]
    taps: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Encoding of the result file; defaults to the signal encoding.
    #[arg(long, value_enum)]
    out_format: Option<FormatArg>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct PrecomputeArgs {
    #[arg(long, allow_hyphen_values = true)]
    taps: Option<String>,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long, value_enum, default_value = "winograd")]
    structure: StructureArg,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    bits: u32,
    #[arg(long, requires = "add_coeff")]
    mul_coeff: Option<f64>,
    #[arg(long, requires = "mul_coeff")]
    add_coeff: Option<f64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MapDspArgs {
    #[arg(long, value_enum, default_value = "winograd")]
    structure: StructureArg,
    /// Block resources `multipliers,input_adders,output_adders`.
    #[arg(long, value_name = "M,I,O")]
    dsp: Option<DspBlockSpec>,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    bits: u32,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphArg {
    Winograd,
    Naive,
    Precompute,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, value_enum, default_value = "winograd")]
    which: GraphArg,
    /// Use chained two-input adders in the naive graph.
    #[arg(long)]
    two_input_adders: bool,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Largest magnitude drawn for tile and tap entries.
    #[arg(long, default_value_t = 1 << 15, value_parser = clap::value_parser!(i64).range(1..))]
    bound: i64,
    #[arg(long, hide = true, default_value = "reference")]
    mutant: KernelVariant,
}

#[derive(Args)]
struct BenchArgs {
    /// Signal length.
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(3..))]
    n: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    iterations: u64,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type CmdResult = Result<(), Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn load_run_config(explicit: Option<&Path>) -> Result<RunConfig, Failure> {
    let path = explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CONFIG_ENV_VAR).filter(|v| !v.is_empty()).map(PathBuf::from));
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => io::load_config(&p).map_err(|e| match e {
            ConfigError::Io { .. } => runtime(e),
            _ => usage(format!("{}: {e}", p.display())),
        }),
    }
}

fn resolve_backend(args: &BackendArgs, base: Backend) -> Result<Backend, Failure> {
    match (args.backend, args.fixed) {
        (Some(BackendArg::Exact), Some(_)) | (Some(BackendArg::Float64), Some(_)) => {
            Err(usage("--fixed conflicts with a non-fixed --backend"))
        }
        (_, Some(f)) => Ok(Backend::Fixed(f)),
        (Some(BackendArg::Exact), None) => Ok(Backend::Exact),
        (Some(BackendArg::Float64), None) => Ok(Backend::Float64),
        (Some(BackendArg::Fixed), None) => match base {
            Backend::Fixed(_) => Ok(base),
            _ => Ok(Backend::Fixed(FixedFormat::default())),
        },
        (None, None) => Ok(base),
    }
}

fn resolve_taps(flag: Option<&str>, cfg: &RunConfig) -> Result<[Rational; 3], Failure> {
    match flag {
        Some(text) => parse_taps(text).map_err(|e| usage(format!("--taps: {e}"))),
        None => cfg.taps.clone().ok_or_else(|| usage("--taps is required")),
    }
}

fn taps_in(backend: Backend, taps: &[Rational; 3]) -> Result<Taps3<ScalarValue>, Failure> {
    Taps3::from_rationals(&backend, taps).map_err(runtime)
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(runtime),
    }
}

fn cmd_convolve(args: ConvolveArgs, cfg: RunConfig) -> CmdResult {
    let backend = resolve_backend(&args.backend, cfg.backend)?;
    let mode = match args.mode {
        Some(ModeArg::Naive) => Mode::Naive,
        Some(ModeArg::Winograd) => Mode::Winograd,
        None => cfg.mode,
    };
    let (signal_path, format) = match (args.signal, &cfg.signal) {
        (Some(p), source) => (
            p,
            args.format
                .map(SignalFormat::from)
                .or(source.as_ref().map(|s| s.format))
                .unwrap_or_default(),
        ),
        (None, Some(source)) => (source.path.clone(), args.format.map(SignalFormat::from).unwrap_or(source.format)),
        (None, None) => return Err(usage("--signal is required")),
    };
    let taps = resolve_taps(args.taps.as_deref(), &cfg)?;
    let threads = args.threads.unwrap_or(cfg.threads);
    if threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    let out = args.out.or(cfg.outputs.result.clone());
    let out_format = args
        .out_format
        .map(SignalFormat::from)
        .unwrap_or(if cfg.outputs.result.is_some() && out.is_some() {
            cfg.outputs.result_format
        } else {
            format
        });

    let signal = io::load_signal(&signal_path, format, backend)
        .map_err(|e| runtime(format!("{}: {e}", signal_path.display())))?;
    let taps = taps_in(backend, &taps)?;
    let counting = Counting::new(backend);
    let result = convolve_parallel(&counting, &signal, &taps, mode, threads).map_err(runtime)?;
    let counts = counting.counts();
    let summary = format!(
        "samples={} outputs={} multiplications={} mode={mode} backend={backend}",
        signal.len(),
        result.outputs.len(),
        counts.multiplications
    );
    match out {
        Some(path) => {
            io::write_result(&result, &path, out_format).map_err(runtime)?;
            println!("{summary}");
        }
        None => {
            let bytes = io::encode_values(&result.outputs, out_format).map_err(runtime)?;
            std::io::stdout().write_all(&bytes).map_err(runtime)?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn cmd_precompute(args: PrecomputeArgs, cfg: RunConfig) -> CmdResult {
    let backend = resolve_backend(&args.backend, cfg.backend)?;
    let taps = taps_in(backend, &resolve_taps(args.taps.as_deref(), &cfg)?)?;
    let closed = precompute_taps(&backend, &taps).map_err(runtime)?;
    let staged = precompute_taps_factored(&backend, &taps).map_err(runtime)?;
    let line = |s: &[ScalarValue; 4]| s.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
    if closed != staged {
        return Err(runtime(format!(
            "precompute paths disagree: closed form {} vs factored {}",
            line(&closed.0),
            line(&staged.0)
        )));
    }
    println!("{}", line(&closed.0));
    Ok(())
}

fn cmd_cost(args: CostArgs, cfg: RunConfig) -> CmdResult {
    let model = match (args.mul_coeff, args.add_coeff) {
        (Some(m), Some(a)) => minfilt::AreaModel::new(m, a).map_err(usage)?,
        _ => cfg.area_model,
    };
    let r = report(args.structure.into(), args.bits, &model, &cfg.dsp_spec).map_err(usage)?;
    emit(args.out.or(cfg.outputs.report).as_deref(), &r.to_json())
}

fn cmd_map_dsp(args: MapDspArgs, cfg: RunConfig) -> CmdResult {
    let spec = args.dsp.unwrap_or(cfg.dsp_spec);
    let r = report(args.structure.into(), args.bits, &cfg.area_model, &spec).map_err(usage)?;
    emit(args.out.or(cfg.outputs.report).as_deref(), &r.to_json())
}

fn cmd_graph(args: GraphArgs) -> CmdResult {
    let graph = match args.which {
        GraphArg::Winograd => build_winograd_graph(),
        GraphArg::Naive if args.two_input_adders => build_naive_graph(NaiveAdders::TwoInputChain),
        GraphArg::Naive => build_naive_graph(NaiveAdders::ThreeInput),
        GraphArg::Precompute => build_precompute_graph(),
    };
    emit(args.out.as_deref(), &export_dot(&graph))
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let suite = SuiteConfig {
        bound: args.bound,
        kernel: args.mutant,
        ..SuiteConfig::new(args.trials, args.seed)
    };
    let outcomes = run_suite(&suite).map_err(runtime)?;
    for o in &outcomes {
        println!("{o}");
    }
    match outcomes.iter().find_map(|o| o.first_failure.as_ref().map(|c| (o.property, c))) {
        Some((property, c)) => Err(runtime(format!(
            "{property} failed at trial {}: {}",
            c.trial, c.description
        ))),
        None => Ok(()),
    }
}

fn cmd_bench(args: BenchArgs, cfg: RunConfig) -> CmdResult {
    let backend = match (args.backend.backend, args.backend.fixed) {
        (None, None) if cfg.backend.kind() == BackendKind::Exact => Backend::Float64,
        _ => resolve_backend(&args.backend, cfg.backend)?,
    };
    let threads = args.threads.unwrap_or(1).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut draw = || Rational::from_integer(rng.random_range(-128i64..=127).into());
    let samples = (0..args.n)
        .map(|_| backend.from_rational(&draw()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime)?;
    let signal = Signal::new(samples).map_err(runtime)?;
    let taps = taps_in(backend, &[draw(), draw(), draw()])?;
    println!("n={} iterations={} backend={backend} threads={threads}", args.n, args.iterations);
    for mode in [Mode::Naive, Mode::Winograd] {
        let start = Instant::now();
        let mut outputs = 0;
        for _ in 0..args.iterations {
            outputs += convolve_parallel(&backend, &signal, &taps, mode, threads)
                .map_err(runtime)?
                .outputs
                .len();
        }
        let ns = start.elapsed().as_nanos() as f64 / outputs as f64;
        println!("{:>8}: {ns:.1} ns/output", mode.to_string());
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let needs_config = !matches!(cli.command, Command::Graph(_) | Command::Verify(_));
    let cfg = if needs_config {
        load_run_config(cli.config.as_deref())?
    } else {
        RunConfig::default()
    };
    match cli.command {
        Command::Convolve(a) => cmd_convolve(a, cfg),
        Command::Precompute(a) => cmd_precompute(a, cfg),
        Command::Cost(a) => cmd_cost(a, cfg),
        Command::MapDsp(a) => cmd_map_dsp(a, cfg),
        Command::Graph(a) => cmd_graph(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a, cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
