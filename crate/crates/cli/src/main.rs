mod teach;

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufReader};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use qsrteach::concept::{ConceptRecord, ConceptStore};
use qsrteach::eval::run_checks;
use qsrteach::features::{FeatureKind, QuantizationConfig};
use qsrteach::miner::{mine, MineReport, MinerConfig};
use qsrteach::reenact::{plan, SearchConfig, SearchStrategy};
use qsrteach::scene::{
    generate_synthetic, load_demonstration, to_document_string, Demonstration, Frame, GeneratorParams, LoadOptions,
    ObjectId, RoleBinding, SyntheticKind,
};
use qsrteach::service::transport::{serve_lines, serve_tcp};

/// Teach a block-world agent primitive actions from demonstrations.
#[derive(Parser, Debug)]
#[command(name = "qsrteach", version)]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic demonstration.
    Record(RecordArgs),
    /// Mine patterns from demonstration files into a report.
    Mine(MineArgs),
    /// Ask yes/no questions on the terminal and write the learned concept.
    Teach(teach::TeachArgs),
    /// Plan a concept in a new scene and write the trace.
    Reenact(ReenactArgs),
    /// Run the session protocol over TCP or stdio.
    Serve(ServeArgs),
    /// Run the end-to-end fixture checks.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct RecordArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Number of frames (circle_around, translate_east).
    #[arg(long)]
    frames: Option<usize>,
    /// Orbit radius (circle_around).
    #[arg(long)]
    radius: Option<f64>,
    /// Number of blocks (build_row).
    #[arg(long)]
    blocks: Option<usize>,
    /// Orbit counterclockwise instead of clockwise (circle_around).
    #[arg(long)]
    counterclockwise: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum KindArg {
    CircleAround,
    BuildRow,
    TranslateEast,
}

impl From<KindArg> for SyntheticKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::CircleAround => SyntheticKind::CircleAround,
            KindArg::BuildRow => SyntheticKind::BuildRow,
            KindArg::TranslateEast => SyntheticKind::TranslateEast,
        }
    }
}

/// Miner and quantization settings shared by `mine` and `teach`.
#[derive(Args, Debug)]
pub struct MinerFlags {
    /// Miner configuration file (JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Quantization configuration file (JSON).
    #[arg(long)]
    quantization: Option<PathBuf>,
    /// Confidence threshold t; patterns with q >= t are kept.
    #[arg(long)]
    threshold: Option<f64>,
    /// Comma-separated feature kinds, e.g. MV,QTC_C3,CD.
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<String>>,
    /// Also mine the last-moved/current dynamic binding.
    #[arg(long)]
    dynamic: bool,
    /// Reject unknown keys in demonstration files.
    #[arg(long)]
    strict: bool,
}

impl MinerFlags {
    pub fn miner_config(&self) -> anyhow::Result<MinerConfig> {
        let mut cfg = match &self.config {
            Some(p) => serde_json::from_str(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
            None => MinerConfig::default(),
        };
        if let Some(t) = self.threshold {
            cfg.confidence_threshold = t;
        }
        if let Some(kinds) = &self.kinds {
            let kinds = kinds
                .iter()
                .map(|k| k.trim().parse::<FeatureKind>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| usage(e.to_string()))?;
            cfg = cfg.with_kinds(&kinds);
        }
        if self.dynamic {
            cfg.dynamic = true;
        }
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn quantization(&self) -> anyhow::Result<QuantizationConfig> {
        match &self.quantization {
            Some(p) => QuantizationConfig::from_json(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display()))),
            None => Ok(QuantizationConfig::default()),
        }
    }

    pub fn load_demos(&self, paths: &[PathBuf]) -> anyhow::Result<Vec<Demonstration>> {
        let opts = LoadOptions { strict: self.strict, ..Default::default() };
        paths
            .iter()
            .map(|p| load_demonstration(&read(p)?, &opts).with_context(|| format!("loading {}", p.display())))
            .collect()
    }
}

#[derive(Args, Debug)]
struct MineArgs {
    /// Demonstration files.
    #[arg(required = true)]
    demos: Vec<PathBuf>,
    #[command(flatten)]
    miner: MinerFlags,
    /// Where to write the JSON report.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args, Debug)]
struct ReenactArgs {
    /// Concept file written by `teach` or the concept store.
    concept: PathBuf,
    /// Scene file: {"roles": {...}, "frame": {...}} or a demonstration
    /// document, whose first frame is used.
    scene: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "beam")]
    strategy: StrategyArg,
    #[arg(long)]
    beam_width: Option<usize>,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    max_step: Option<f64>,
    #[arg(long)]
    max_expansions: Option<usize>,
    #[arg(long)]
    min_progress: Option<f64>,
    #[arg(long)]
    min_steps: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum StrategyArg {
    Beam,
    BestFirst,
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:7878", conflicts_with = "stdio")]
    listen: String,
    /// Serve a single session on stdin/stdout instead of TCP.
    #[arg(long)]
    stdio: bool,
    /// Concept store directory for save_concept/load_concept.
    #[arg(long)]
    store: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Also write the results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Bad flags or unreadable inputs; exits with status 2.
#[derive(Debug)]
pub struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

pub fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn record(args: &RecordArgs) -> anyhow::Result<()> {
    let mut params = GeneratorParams::default();
    if let Some(n) = args.frames {
        params.frames = n;
    }
    if let Some(r) = args.radius {
        params.radius = r;
    }
    if let Some(b) = args.blocks {
        params.blocks = b;
    }
    if args.counterclockwise {
        params.clockwise = false;
    }
    let demo = generate_synthetic(args.kind.into(), &params, args.seed).map_err(|e| usage(e.to_string()))?;
    write(&args.out, &(to_document_string(&demo) + "\n"))?;
    println!("wrote {} frames to {}", demo.frames.len(), args.out.display());
    Ok(())
}

fn mine_cmd(args: &MineArgs) -> anyhow::Result<()> {
    let cfg = args.miner.miner_config()?;
    let qcfg = args.miner.quantization()?;
    let demos = args.miner.load_demos(&args.demos)?;
    let patterns = mine(&demos, &cfg, &qcfg)?;
    let report = MineReport::new(&demos, &cfg, patterns);
    write(&args.report, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    for m in &report.patterns {
        println!("{:.3}  {}", m.q, m.pattern);
    }
    println!("{} patterns written to {}", report.patterns.len(), args.report.display());
    Ok(())
}

fn load_scene(path: &Path) -> anyhow::Result<(Frame, RoleBinding)> {
    let value: Value = serde_json::from_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if value.get("frames").is_some() {
        let demo = qsrteach::scene::load_demonstration_value(value, &LoadOptions::default())?;
        return Ok((demo.frames[0].clone(), demo.roles));
    }
    let frame: Frame = serde_json::from_value(value.get("frame").cloned().ok_or_else(|| usage("scene has no frame"))?)
        .map_err(|e| usage(format!("scene frame: {e}")))?;
    let roles: BTreeMap<String, ObjectId> =
        serde_json::from_value(value.get("roles").cloned().ok_or_else(|| usage("scene has no roles"))?)
            .map_err(|e| usage(format!("scene roles: {e}")))?;
    let descriptors: BTreeMap<ObjectId, String> = match value.get("descriptors") {
        Some(d) => serde_json::from_value(d.clone()).map_err(|e| usage(format!("scene descriptors: {e}")))?,
        None => BTreeMap::new(),
    };
    Ok((frame, RoleBinding { roles, descriptors }))
}

fn reenact(args: &ReenactArgs) -> anyhow::Result<()> {
    let mut cfg = SearchConfig {
        rng_seed: args.seed,
        strategy: match args.strategy {
            StrategyArg::Beam => SearchStrategy::Beam,
            StrategyArg::BestFirst => SearchStrategy::BestFirst,
        },
        ..Default::default()
    };
    if let Some(v) = args.beam_width {
        cfg.beam_width = v;
    }
    if let Some(v) = args.candidates {
        cfg.candidates_per_expansion = v;
    }
    if let Some(v) = args.max_step {
        cfg.max_step = v;
    }
    if let Some(v) = args.max_expansions {
        cfg.max_expansions = v;
    }
    if let Some(v) = args.min_progress {
        cfg.min_progress = v;
    }
    if let Some(v) = args.min_steps {
        cfg.min_steps = v;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let concept = ConceptRecord::from_json(&read(&args.concept)?).map_err(|e| usage(e.to_string()))?;
    let (scene, roles) = load_scene(&args.scene)?;
    let trace = plan(&scene, &concept, &roles, &cfg)?;
    let doc = trace.to_document(&concept.signature, &roles)?;
    write(&args.out, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    println!(
        "{} steps, {} expansions, {:.3} revolutions; trace written to {}",
        trace.steps.len(),
        trace.expansions,
        trace.swept_revolutions,
        args.out.display()
    );
    Ok(())
}

fn serve(args: &ServeArgs) -> anyhow::Result<()> {
    let store = match &args.store {
        Some(dir) => Some(Arc::new(Mutex::new(ConceptStore::open(dir)?))),
        None => None,
    };
    if args.stdio {
        let stdin = io::stdin();
        serve_lines(BufReader::new(stdin.lock()), io::stdout().lock(), "s1", store.as_ref(), now)?;
        return Ok(());
    }
    let listener =
        TcpListener::bind(&args.listen).map_err(|e| usage(format!("cannot listen on {}: {e}", args.listen)))?;
    eprintln!("listening on {}", listener.local_addr()?);
    serve_tcp(listener, store, now)?;
    Ok(())
}

fn eval(args: &EvalArgs) -> anyhow::Result<bool> {
    let results = run_checks();
    for r in &results {
        println!(
            "{} criterion {} {} ({}) [{:.2}s]",
            if r.passed { "PASS" } else { "FAIL" },
            r.criterion,
            r.name,
            r.detail,
            r.seconds
        );
    }
    if let Some(p) = &args.json {
        write(p, &(serde_json::to_string_pretty(&results)? + "\n"))?;
    }
    Ok(results.iter().all(|r| r.passed))
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Record(a) => record(a)?,
        Command::Mine(a) => mine_cmd(a)?,
        Command::Teach(a) => teach::run(a)?,
        Command::Reenact(a) => reenact(a)?,
        Command::Serve(a) => serve(a)?,
        Command::Eval(a) => return eval(a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
