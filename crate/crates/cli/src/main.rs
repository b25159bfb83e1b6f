use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cdm_evidence::batch_harness::{analyze_event, generate_synthetic, run_batch, tune_sweep};
use cdm_evidence::cdm_model::{parse_event_file, write_event_file, ColumnMap, EventFormat, EventSequence};
use cdm_evidence::config::{Pl0Policy, RunConfig};
use cdm_evidence::report::{write_analyze_outputs, write_batch_outputs};
use cdm_evidence::{Error, Result};

/// Evidence-based classification of conjunction events from CDM sequences.
#[derive(Parser, Debug)]
#[command(name = "cdm-evidence", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyse every prefix of each event in a file.
    Analyze(Common),
    /// Classify a set of events at fixed decision times.
    Batch(BatchArgs),
    /// Score the manoeuvre recommendation against labels over an a0 grid.
    Sweep(BatchArgs),
    /// Write a labelled synthetic dataset.
    Generate(GenerateArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Event file, or a directory of event files for batch runs.
    #[arg(long)]
    input: Option<PathBuf>,
    /// native-csv, native-json or kelvins-csv; inferred from the extension when absent.
    #[arg(long)]
    format: Option<String>,
    /// Column map for kelvins-csv input.
    #[arg(long)]
    column_map: Option<PathBuf>,
    #[arg(long)]
    n_cuts: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    poc0: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    t2: Option<f64>,
    #[arg(long)]
    a0: Option<f64>,
    /// "auto" or a number.
    #[arg(long)]
    pl0: Option<Pl0Policy>,
    #[arg(long)]
    poc_floor: Option<f64>,
    /// Comma-separated days before TCA, strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    decision_times: Option<Vec<f64>>,
    /// Comma-separated normalised area thresholds.
    #[arg(long, value_delimiter = ',')]
    a0_grid: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 or absent uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BatchArgs {
    #[command(flatten)]
    common: Common,
    /// Generate a synthetic dataset into the output directory and run on it.
    #[arg(long)]
    generate: bool,
    /// Number of synthetic events for --generate.
    #[arg(long)]
    events: Option<usize>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    events: Option<usize>,
}

const SYNTHETIC_FILE: &str = "synthetic_events.json";

fn resolve(c: &Common, events: Option<usize>) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let th = &mut cfg.thresholds;
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    set!(th.t1, c.t1);
    set!(th.t2, c.t2);
    set!(th.poc0, c.poc0);
    set!(th.a0, c.a0);
    set!(th.pl0, c.pl0);
    set!(th.poc_floor, c.poc_floor);
    set!(cfg.analysis.n_cuts, c.n_cuts);
    set!(cfg.analysis.delta, c.delta);
    set!(cfg.batch.decision_times, c.decision_times);
    set!(cfg.batch.a0_grid, c.a0_grid);
    set!(cfg.run.jobs, c.jobs);
    set!(cfg.synthetic.n_events, events);
    if let Some(seed) = c.seed {
        cfg.run.seed = seed;
        cfg.synthetic.seed = seed;
    }
    if c.input.is_some() {
        cfg.run.input = c.input.clone();
    }
    if c.format.is_some() {
        cfg.run.format = c.format.clone();
    }
    if c.column_map.is_some() {
        cfg.run.column_map = c.column_map.clone();
    }
    if c.out.is_some() {
        cfg.run.out = c.out.clone();
    }
    cfg.validate()?;
    if let Some(f) = &cfg.run.format {
        f.parse::<EventFormat>()?;
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.run.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn format_for(path: &Path, cfg: &RunConfig) -> Result<EventFormat> {
    if let Some(f) = &cfg.run.format {
        return f.parse();
    }
    if cfg.run.column_map.is_some() {
        return Ok(EventFormat::KelvinsCsv);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(EventFormat::NativeJson),
        Some("csv") => Ok(EventFormat::NativeCsv),
        _ => Err(Error::Config(format!(
            "cannot infer the format of {}; pass --format",
            path.display()
        ))),
    }
}

/// Reads the configured input file, or every .csv/.json file of a directory
/// in name order. Event ids must be unique across files.
fn load_events(cfg: &RunConfig) -> Result<Vec<EventSequence<f64>>> {
    let input = cfg
        .run
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("no input given; pass --input".into()))?;
    let map = cfg.run.column_map.as_deref().map(ColumnMap::from_file).transpose()?;
    let files = if input.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(input)
            .map_err(|source| Error::Io {
                path: input.display().to_string(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "json")))
            .collect();
        v.sort();
        if v.is_empty() {
            return Err(Error::Config(format!("{} holds no .csv or .json files", input.display())));
        }
        v
    } else {
        vec![input.clone()]
    };
    let mut events = Vec::new();
    let mut ids = std::collections::BTreeSet::new();
    for f in files {
        for ev in parse_event_file(&f, format_for(&f, cfg)?, map.as_ref())? {
            if !ids.insert(ev.event_id.clone()) {
                return Err(Error::Config(format!("event id {} appears more than once", ev.event_id)));
            }
            events.push(ev);
        }
    }
    if events.is_empty() {
        log::warn!("no events in {}", input.display());
    }
    Ok(events)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn cmd_analyze(c: &Common) -> Result<()> {
    let cfg = resolve(c, None)?;
    let events = load_events(&cfg)?;
    let p = cfg.pipeline();
    let analyses = install(&cfg, || events.iter().map(|e| analyze_event(e, &p)).collect::<Result<Vec<_>>>())??;
    let dir = out_dir(&cfg);
    create_dir(&dir)?;
    for path in write_analyze_outputs(&dir, &cfg, &analyses)? {
        log::info!("wrote {}", path.display());
    }
    for a in &analyses {
        if let Some(last) = a.prefixes.last() {
            println!(
                "{}: class {} ({}) at {} d",
                a.event_id, last.classification.class_id, last.classification.rule_path, last.t2tca
            );
        }
    }
    Ok(())
}

fn synthetic_or_input(cfg: &mut RunConfig, generate: bool) -> Result<Vec<EventSequence<f64>>> {
    if !generate {
        return load_events(cfg);
    }
    let events = generate_synthetic(&cfg.synthetic)?;
    let dir = out_dir(cfg);
    create_dir(&dir)?;
    let path = dir.join(SYNTHETIC_FILE);
    write_event_file(&path, &events, EventFormat::NativeJson)?;
    log::info!("wrote {}", path.display());
    cfg.run.input = Some(path);
    cfg.run.format = Some(EventFormat::NativeJson.to_string());
    Ok(events)
}

fn cmd_batch(a: &BatchArgs, sweep: bool) -> Result<()> {
    let mut cfg = resolve(&a.common, a.events)?;
    let events = synthetic_or_input(&mut cfg, a.generate)?;
    let p = cfg.pipeline();
    let (times, grid) = (cfg.batch.decision_times.clone(), cfg.batch.a0_grid.clone());
    let (report, rows) = install(&cfg, || {
        if sweep {
            tune_sweep(&events, &p, &times, &grid).map(|(r, s)| (r, Some(s)))
        } else {
            run_batch(&events, &p, &times, &grid).map(|r| (r, None))
        }
    })??;
    let dir = out_dir(&cfg);
    create_dir(&dir)?;
    for path in write_batch_outputs(&dir, &cfg, &report, rows.as_deref())? {
        log::info!("wrote {}", path.display());
    }
    for col in &report.columns {
        println!(
            "Td={} a0={}: total {} failed {} uncertain {} cam {}",
            col.decision_time, col.a0, col.total, col.failed, col.uncertain, col.cam
        );
    }
    if let Some(rows) = rows {
        for r in rows {
            println!(
                "Td={} a0={}: tp {} fp {} fn {} tn {}",
                r.decision_time, r.a0, r.tp, r.fp, r.fn_, r.tn
            );
        }
    }
    Ok(())
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let cfg = resolve(&a.common, a.events)?;
    let events = generate_synthetic(&cfg.synthetic)?;
    let dir = out_dir(&cfg);
    create_dir(&dir)?;
    let format = match &cfg.run.format {
        Some(f) => f.parse()?,
        None => EventFormat::NativeJson,
    };
    let name = match format {
        EventFormat::NativeCsv => "synthetic_events.csv",
        _ => SYNTHETIC_FILE,
    };
    let path = dir.join(name);
    write_event_file(&path, &events, format)?;
    println!("{} events written to {}", events.len(), path.display());
    Ok(())
}

/// Runs `f` on a pool of the configured size.
fn install<R: Send>(cfg: &RunConfig, f: impl FnOnce() -> R + Send) -> Result<R> {
    if cfg.run.jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Analyze(c) => cmd_analyze(c),
        Command::Batch(a) => cmd_batch(a, false),
        Command::Sweep(a) => cmd_batch(a, true),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
