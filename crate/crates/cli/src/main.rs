//! Command-line front end: configure a run, execute the evolutionary loop,
//! and export the Pareto front; score exported models on other datasets;
//! generate synthetic benchmark records.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use tagid::data::{
    builtin_system, generate_excitation, load_csv, save_csv, save_sidecar, Dataset, DatasetBundle,
    ExcitationKind, Role,
};
use tagid::error::{DataError, GrammarError, ModelError, QualityError};
use tagid::gp::{run, GpConfig, RunOptions};
use tagid::grammar::{builtin_grammar, parse_grammar_text, Grammar, BUILTIN_GRAMMAR_NAMES};
use tagid::model::{format_model, parse_equation, FittedModel};
use tagid::objectives::{quality, MetricForm};

const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "tagid", version)]
#[command(about = "Grammar-guided evolutionary identification of non-linear dynamical models")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Run the evolutionary identification loop and export the Pareto front
    Run(RunArgs),
    /// Score exported models on a dataset
    Score(ScoreArgs),
    /// Generate a synthetic benchmark record (systems s1..s4)
    Generate(GenerateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Load a previously written run.json; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in grammar name (narx, narmax, trig, full) or a grammar file path
    #[arg(long)]
    grammar: Option<String>,
    /// Estimation dataset (CSV with header k,u,y or u,y)
    #[arg(long)]
    data_est: Option<PathBuf>,
    /// Validation dataset used for the multi-objective fitness
    #[arg(long)]
    data_val: Option<PathBuf>,
    /// Held-out test dataset (adds pareto_test.csv)
    #[arg(long)]
    data_test: Option<PathBuf>,
    /// Population size M
    #[arg(long)]
    pop: Option<usize>,
    /// Breeding generations L
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    max_adjunctions: Option<usize>,
    /// Crossover probability
    #[arg(long)]
    pc: Option<f64>,
    /// Mutation probability
    #[arg(long)]
    pm: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for pareto.csv, models.txt, fronts_history.csv, run.json
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metric form: paper | conventional
    #[arg(long)]
    metric_form: Option<String>,
    /// Worker threads for fitness evaluation (>1 is not guaranteed
    /// bit-reproducible)
    #[arg(long)]
    threads: Option<usize>,
    /// Iterative least-squares budget for noise structures
    #[arg(long)]
    els_iters: Option<usize>,
    /// Relative coefficient tolerance for iterative least squares
    #[arg(long)]
    els_tol: Option<f64>,
    /// Override the transient count N_t of every loaded dataset
    #[arg(long)]
    nt: Option<usize>,
}

#[derive(Args)]
struct ScoreArgs {
    /// models.txt produced by `run` (lines of the form `id: y[k] = ...`)
    #[arg(long)]
    models: PathBuf,
    /// Dataset to score on
    #[arg(long)]
    data: PathBuf,
    /// Score a single model id instead of every line
    #[arg(long)]
    id: Option<usize>,
    #[arg(long, default_value = "paper")]
    metric_form: String,
    /// Override the dataset's transient count N_t
    #[arg(long)]
    nt: Option<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Synthetic system name: s1 | s2 | s3 | s4
    #[arg(long)]
    system: String,
    /// Record length
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (a .meta.toml sidecar is written next to it)
    #[arg(long)]
    out: PathBuf,
    /// Override the system's noise standard deviation
    #[arg(long)]
    noise_std: Option<f64>,
    /// Override the excitation amplitude
    #[arg(long)]
    amplitude: Option<f64>,
    /// Override the excitation kind: filtered-uniform | prbs
    #[arg(long)]
    excitation: Option<String>,
    /// Zero this many leading excitation samples (recorded as N_t)
    #[arg(long, default_value_t = 50)]
    zero_first: usize,
    /// Role recorded in the sidecar: estimation | validation | test
    #[arg(long, default_value = "estimation")]
    role: String,
    /// Sample rate recorded in the sidecar [Hz]
    #[arg(long, default_value_t = 1.0)]
    sample_rate: f64,
}

/// Reproducible run description; written as run.json and accepted back via
/// `run --config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunConfig {
    version: String,
    grammar: String,
    data_est: PathBuf,
    data_val: Option<PathBuf>,
    data_test: Option<PathBuf>,
    pop: usize,
    iters: usize,
    max_adjunctions: usize,
    pc: f64,
    pm: f64,
    seed: u64,
    els_iterations: usize,
    els_tol: f64,
    threads: usize,
    metric_form: MetricForm,
    nt: Option<usize>,
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Data(String),
    Divergence(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Divergence(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Divergence(m) => write!(f, "runtime divergence: {m}"),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::UnknownSystem(_) => CliError::Config(e.to_string()),
            DataError::Divergence { .. } => CliError::Divergence(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<GrammarError> for CliError {
    fn from(e: GrammarError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<QualityError> for CliError {
    fn from(e: QualityError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Commands::Run(args) => cmd_run(args),
        Commands::Score(args) => cmd_score(args),
        Commands::Generate(args) => cmd_generate(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn resolve_grammar(name_or_path: &str) -> Result<Grammar, CliError> {
    if BUILTIN_GRAMMAR_NAMES.contains(&name_or_path) {
        return Ok(builtin_grammar(name_or_path)?);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(CliError::Config(format!(
            "{name_or_path:?} is neither a built-in grammar ({}) nor a grammar file",
            BUILTIN_GRAMMAR_NAMES.join(", ")
        )));
    }
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_grammar_text(&text)?)
}

fn load_dataset(path: &Path, nt: Option<usize>) -> Result<Dataset, CliError> {
    let mut ds = load_csv(path)?;
    if let Some(n_t) = nt {
        if n_t >= ds.len() {
            return Err(CliError::Config(format!(
                "--nt {n_t} is not smaller than the record length {}",
                ds.len()
            )));
        }
        ds.n_t = n_t;
    }
    Ok(ds)
}

fn merge_run_config(args: RunArgs) -> Result<RunConfig, CliError> {
    let base: Option<RunConfig> = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
            )
        }
        None => None,
    };
    let defaults = GpConfig::default();
    let b = |f: fn(&RunConfig) -> Option<PathBuf>| base.as_ref().and_then(f);
    let grammar = args
        .grammar
        .or_else(|| base.as_ref().map(|c| c.grammar.clone()))
        .ok_or_else(|| CliError::Config("--grammar is required".into()))?;
    let data_est = args
        .data_est
        .or_else(|| base.as_ref().map(|c| c.data_est.clone()))
        .ok_or_else(|| CliError::Config("--data-est is required".into()))?;
    let metric_form = match args.metric_form {
        Some(s) => MetricForm::parse(&s)
            .ok_or_else(|| CliError::Config(format!("unknown metric form {s:?}")))?,
        None => base.as_ref().map(|c| c.metric_form).unwrap_or(MetricForm::Paper),
    };
    Ok(RunConfig {
        version: ENGINE_VERSION.to_string(),
        grammar,
        data_est,
        data_val: args.data_val.or_else(|| b(|c| c.data_val.clone())),
        data_test: args.data_test.or_else(|| b(|c| c.data_test.clone())),
        pop: args
            .pop
            .or_else(|| base.as_ref().map(|c| c.pop))
            .unwrap_or(defaults.population_size),
        iters: args
            .iters
            .or_else(|| base.as_ref().map(|c| c.iters))
            .unwrap_or(defaults.iterations),
        max_adjunctions: args
            .max_adjunctions
            .or_else(|| base.as_ref().map(|c| c.max_adjunctions))
            .unwrap_or(defaults.max_adjunctions),
        pc: args
            .pc
            .or_else(|| base.as_ref().map(|c| c.pc))
            .unwrap_or(defaults.p_c),
        pm: args
            .pm
            .or_else(|| base.as_ref().map(|c| c.pm))
            .unwrap_or(defaults.p_m),
        seed: args
            .seed
            .or_else(|| base.as_ref().map(|c| c.seed))
            .unwrap_or(defaults.rng_seed),
        els_iterations: args
            .els_iters
            .or_else(|| base.as_ref().map(|c| c.els_iterations))
            .unwrap_or(tagid::estimation::DEFAULT_ELS_ITERATIONS),
        els_tol: args
            .els_tol
            .or_else(|| base.as_ref().map(|c| c.els_tol))
            .unwrap_or(tagid::estimation::DEFAULT_ELS_TOL),
        threads: args
            .threads
            .or_else(|| base.as_ref().map(|c| c.threads))
            .unwrap_or(1),
        metric_form,
        nt: args.nt.or_else(|| base.as_ref().and_then(|c| c.nt)),
        out: args
            .out
            .or_else(|| b(|c| Some(c.out.clone())))
            .unwrap_or_else(|| PathBuf::from("tagid-out")),
    })
}

fn validate_run_config(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.pop == 0 {
        return Err(CliError::Config("--pop must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.pc) || !(0.0..=1.0).contains(&cfg.pm) {
        return Err(CliError::Config(
            "--pc and --pm must lie in [0, 1]".into(),
        ));
    }
    if cfg.threads == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    Ok(())
}

/// Removes files created so far when an export step fails.
struct ArtifactSet {
    written: Vec<PathBuf>,
}

impl ArtifactSet {
    fn write(&mut self, path: PathBuf, contents: &str) -> Result<(), CliError> {
        fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    fn discard(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let cfg = merge_run_config(args)?;
    validate_run_config(&cfg)?;
    let grammar = resolve_grammar(&cfg.grammar)?;
    let est = load_dataset(&cfg.data_est, cfg.nt)?;
    let val = cfg
        .data_val
        .as_deref()
        .map(|p| load_dataset(p, cfg.nt))
        .transpose()?;
    let test = cfg
        .data_test
        .as_deref()
        .map(|p| load_dataset(p, cfg.nt))
        .transpose()?;
    let bundle = DatasetBundle::new(est, val, test);

    // a constant fitness record can never be scored
    let k0 = bundle.fitness.n_t;
    let mean = bundle.fitness.y[k0..].iter().sum::<f64>() / (bundle.fitness.len() - k0) as f64;
    if bundle.fitness.y[k0..].iter().all(|v| (v - mean).abs() == 0.0) {
        return Err(CliError::Data(
            "fitness dataset output is constant over the scored range".into(),
        ));
    }

    let opts = RunOptions {
        gp: GpConfig {
            population_size: cfg.pop,
            iterations: cfg.iters,
            max_adjunctions: cfg.max_adjunctions,
            p_c: cfg.pc,
            p_m: cfg.pm,
            rng_seed: cfg.seed,
        },
        els_iterations: cfg.els_iterations,
        els_tol: cfg.els_tol,
        threads: cfg.threads,
        metric_form: cfg.metric_form,
    };

    eprintln!(
        "run: grammar={} M={} L={} seed={} threads={}",
        grammar.name, cfg.pop, cfg.iters, cfg.seed, cfg.threads
    );
    let result = run(&grammar, &bundle, &opts, |s| {
        eprintln!(
            "gen {:>4}  front {:>3}  best_rms_p {:>12.6e}  best_rms_s {:>12.6e}  min_p {}",
            s.generation, s.front_size, s.best_rms_p, s.best_rms_s, s.min_complexity
        );
    });

    fs::create_dir_all(&cfg.out)?;
    let mut artifacts = ArtifactSet {
        written: Vec::new(),
    };
    let out = export_all(&cfg, &bundle, &result, &mut artifacts);
    if out.is_err() {
        artifacts.discard();
    }
    out?;
    eprintln!(
        "done: {} front models written to {}",
        result.front.iter().filter(|i| i.fitted.is_some()).count(),
        cfg.out.display()
    );
    Ok(())
}

fn export_all(
    cfg: &RunConfig,
    bundle: &DatasetBundle,
    result: &tagid::gp::RunResult,
    artifacts: &mut ArtifactSet,
) -> Result<(), CliError> {
    // individuals whose estimation failed carry no usable model; they are
    // dropped from the exports
    let front: Vec<(usize, &FittedModel)> = result
        .front
        .iter()
        .filter_map(|i| i.fitted.as_ref())
        .enumerate()
        .collect();

    let mut pareto = String::from("id,complexity,rms_p,rms_s,bfr_p,bfr_s\n");
    for (id, fm) in &front {
        let q = quality(fm, &bundle.fitness, bundle.fitness.n_t, cfg.metric_form)?;
        pareto.push_str(&format!(
            "{},{},{},{},{},{}\n",
            id,
            fm.structure.complexity(),
            q.rms_p,
            q.rms_s,
            q.bfr_p,
            q.bfr_s
        ));
    }
    artifacts.write(cfg.out.join("pareto.csv"), &pareto)?;

    let mut models = format!(
        "# tagid {} pareto front: grammar={} seed={}\n# <id>: <equation>\n",
        ENGINE_VERSION, cfg.grammar, cfg.seed
    );
    for (id, fm) in &front {
        models.push_str(&format!("{}: {}\n", id, format_model(fm)));
    }
    artifacts.write(cfg.out.join("models.txt"), &models)?;

    let mut history =
        String::from("generation,front_size,best_rms_p,best_rms_s,min_complexity\n");
    for s in &result.history {
        history.push_str(&format!(
            "{},{},{},{},{}\n",
            s.generation, s.front_size, s.best_rms_p, s.best_rms_s, s.min_complexity
        ));
    }
    artifacts.write(cfg.out.join("fronts_history.csv"), &history)?;

    if let Some(test) = &bundle.test {
        let mut out = String::from("id,complexity,rms_p,rms_s,bfr_p,bfr_s\n");
        for (id, fm) in &front {
            let q = quality(fm, test, test.n_t, cfg.metric_form)?;
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                id,
                fm.structure.complexity(),
                q.rms_p,
                q.rms_s,
                q.bfr_p,
                q.bfr_s
            ));
        }
        artifacts.write(cfg.out.join("pareto_test.csv"), &out)?;
    }

    let json = serde_json::to_string_pretty(cfg)
        .map_err(|e| CliError::Config(format!("serializing run.json: {e}")))?;
    artifacts.write(cfg.out.join("run.json"), &(json + "\n"))?;
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<(), CliError> {
    let form = MetricForm::parse(&args.metric_form)
        .ok_or_else(|| CliError::Config(format!("unknown metric form {:?}", args.metric_form)))?;
    let data = load_dataset(&args.data, args.nt)?;
    let text = fs::read_to_string(&args.models)?;
    let mut scored = 0usize;
    println!("id,complexity,rms_p,rms_s,bfr_p,bfr_s");
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id_text, equation) = line.split_once(':').ok_or_else(|| {
            CliError::Data(format!(
                "{}:{}: expected `id: y[k] = ...`",
                args.models.display(),
                line_no + 1
            ))
        })?;
        let id: usize = id_text.trim().parse().map_err(|_| {
            CliError::Data(format!(
                "{}:{}: bad model id {id_text:?}",
                args.models.display(),
                line_no + 1
            ))
        })?;
        if let Some(want) = args.id {
            if id != want {
                continue;
            }
        }
        let fm = parse_equation(equation)?;
        let q = quality(&fm, &data, data.n_t, form)?;
        println!(
            "{},{},{},{},{},{}",
            id,
            fm.structure.complexity(),
            q.rms_p,
            q.rms_s,
            q.bfr_p,
            q.bfr_s
        );
        scored += 1;
    }
    if scored == 0 {
        return Err(CliError::Data(match args.id {
            Some(id) => format!("model id {id} not found in {}", args.models.display()),
            None => format!("no models found in {}", args.models.display()),
        }));
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let mut sys = builtin_system(&args.system)?;
    if args.n == 0 {
        return Err(CliError::Config("--n must be positive".into()));
    }
    if args.zero_first >= args.n {
        return Err(CliError::Config(
            "--zero-first must be smaller than --n".into(),
        ));
    }
    let role = Role::parse(&args.role)
        .ok_or_else(|| CliError::Config(format!("unknown role {:?}", args.role)))?;
    if let Some(a) = args.amplitude {
        sys.amplitude = a;
    }
    if let Some(kind) = &args.excitation {
        sys.excitation = ExcitationKind::parse(kind)
            .ok_or_else(|| CliError::Config(format!("unknown excitation kind {kind:?}")))?;
    }
    if let Some(s) = args.noise_std {
        sys.noise_std = s;
    }
    let u = generate_excitation(args.n, sys.amplitude, sys.excitation, args.seed, args.zero_first);
    let mut ds = tagid::data::simulate_truth(&sys, &u, args.seed ^ 0x9E37_79B9_7F4A_7C15)?;
    ds.n_t = args.zero_first;
    ds.role = role;
    ds.sample_rate_hz = args.sample_rate;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    save_csv(&ds, &args.out)?;
    save_sidecar(&args.out, role, args.zero_first, args.sample_rate)?;
    eprintln!(
        "wrote {} ({} samples, system {}, noise_std {})",
        args.out.display(),
        args.n,
        sys.name,
        sys.noise_std
    );
    Ok(())
}
