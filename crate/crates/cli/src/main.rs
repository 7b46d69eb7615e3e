use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nea_core::lang::{parse_agent_program, Pad, Variant};
use nea_core::society::{self, metrics, sweep, Scenario, SocietyError};

#[derive(Parser)]
#[command(name = "nea", version, about = "Normative emotional agents: check programs, run societies")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse `.nea` files and report errors with positions.
    Check {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Run a scenario and write its trace and metrics.
    Run(RunArgs),
    /// Evaluate the compliance utilities over a grid.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Text,
    Structured,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, env = "NEA_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    ticks: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    decay_affect: Option<f64>,
    #[arg(long)]
    decay_relevance: Option<f64>,
    #[arg(long)]
    relevance_threshold: Option<f64>,
    #[arg(long)]
    deviation_threshold: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    trace_format: TraceFormat,
    /// Run agents of a tick on worker threads.
    #[arg(long)]
    parallel: bool,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario whose agents and norms supply the default grid.
    scenario: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    reb: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    frac: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    relevance: Option<Vec<f64>>,
    /// Starting mood as `pleasure,arousal`.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 0.0])]
    sigma: Vec<f64>,
    /// Pre-appraisal as `pleasure,arousal`; defaults to the first injected norm's.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pa: Option<Vec<f64>>,
    /// Also write the report here as `sweep.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| Failure::Runtime(format!("{}: {e}", path.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn check(paths: &[PathBuf]) -> Result<(), Failure> {
    let mut failed = 0;
    for p in paths {
        match std::fs::read_to_string(p) {
            Err(e) => {
                eprintln!("{}: {e}", p.display());
                failed += 1;
            }
            Ok(src) => match parse_agent_program(&src) {
                Ok(_) => println!("{}: ok", p.display()),
                Err(e) => {
                    eprintln!("{}:{e}", p.display());
                    failed += 1;
                }
            },
        }
    }
    if failed > 0 {
        return Err(Failure::Invalid(format!("{failed} of {} files failed", paths.len())));
    }
    Ok(())
}

fn load(path: &Path, o: &Overrides) -> Result<Scenario, Failure> {
    let mut sc = Scenario::load(path).map_err(|e| Failure::Invalid(e.to_string()))?;
    let c = &mut sc.config;
    if let Some(v) = o.seed {
        c.seed = v;
    }
    if let Some(v) = o.ticks {
        c.ticks = v;
    }
    let k = &mut c.knobs;
    for (slot, v) in [
        (&mut k.delta, o.delta),
        (&mut k.decay_affect, o.decay_affect),
        (&mut k.decay_relevance, o.decay_relevance),
        (&mut k.relevance_threshold, o.relevance_threshold),
        (&mut k.deviation_threshold, o.deviation_threshold),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    c.validate().map_err(|e| Failure::Invalid(e.to_string()))?;
    Ok(sc)
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let mut sc = load(&args.scenario, &args.overrides)?;
    sc.config.parallel |= args.parallel;
    let (trace_name, render): (&str, fn(&[_]) -> String) = match args.trace_format {
        TraceFormat::Text => ("trace.txt", society::trace_text),
        TraceFormat::Structured => ("trace.jsonl", society::trace_jsonl),
    };
    let trace_path = args.out.join(trace_name);
    let out = match society::run(&sc) {
        Ok(out) => out,
        Err(SocietyError::Fault { fault, trace }) => {
            write_atomic(&trace_path, render(&trace).as_bytes())?;
            return Err(Failure::Runtime(format!("{fault} (trace in {})", trace_path.display())));
        }
        Err(SocietyError::Config(e)) => return Err(Failure::Invalid(e.to_string())),
    };
    write_atomic(&trace_path, render(&out.trace).as_bytes())?;
    let mut csv = Vec::new();
    metrics::write_csv(&mut csv, &out.metrics).map_err(|e| Failure::Runtime(e.to_string()))?;
    let csv_path = args.out.join("metrics.csv");
    write_atomic(&csv_path, &csv)?;

    if args.verbose > 0 {
        print!("{}", society::trace_text(&out.trace));
    }
    let st = &out.state;
    let mood = st.mood();
    println!("ticks: {}  seed: {}", sc.config.ticks, sc.config.seed);
    println!("society mood: ({}, {})", mood.pleasure, mood.arousal);
    for a in &st.agents {
        let comply = a.decisions.iter().filter(|d| d.variant == Variant::Comply).count();
        let broke = a.decisions.len() - comply;
        let rels: Vec<String> = a.ag.nb.iter().map(|n| format!("{}={}", n.id, n.rel)).collect();
        let Pad { pleasure, arousal } = a.ta.sigma;
        println!(
            "{}: mood ({pleasure}, {arousal}) comply {comply} break {broke} {}",
            a.id,
            rels.join(" ")
        );
    }
    println!("wrote {} and {}", trace_path.display(), csv_path.display());
    Ok(())
}

fn pad_arg(v: &[f64]) -> Pad {
    Pad::new(v[0], v[1])
}

fn sweep_cmd(args: &SweepArgs) -> Result<(), Failure> {
    let scenario = match &args.scenario {
        Some(p) => Some(Scenario::load(p).map_err(|e| Failure::Invalid(e.to_string()))?),
        None => None,
    };
    let mut grid = scenario.as_ref().map(sweep::scenario_grid).unwrap_or_default();
    for (axis, given) in [
        (&mut grid.reb, &args.reb),
        (&mut grid.frac, &args.frac),
        (&mut grid.relevance, &args.relevance),
    ] {
        if let Some(v) = given {
            *axis = v.clone();
        }
    }
    let pa = match (&args.pa, &scenario) {
        (Some(v), _) => pad_arg(v),
        (None, Some(sc)) => sweep::scenario_pa(sc),
        (None, None) => Pad::new(0.5, 0.5),
    };
    let points = sweep::sweep(&grid, pad_arg(&args.sigma), pa);
    let mut csv = Vec::new();
    sweep::write_csv(&mut csv, &points).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::io::stdout().write_all(&csv).map_err(|e| Failure::Runtime(e.to_string()))?;
    if let Some(dir) = &args.out {
        write_atomic(&dir.join("sweep.csv"), &csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match &cli.cmd {
        Cmd::Check { paths } => check(paths),
        Cmd::Run(a) => run(a),
        Cmd::Sweep(a) => sweep_cmd(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Invalid(m) | Failure::Runtime(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
