//! Command-line front end: `decompose`, `check` and `bench`.

pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::aig::{parse_aiger, parse_blif, write_aiger, write_blif, AigError, Circuit, FunctionCone, Gate, Var};
use crate::cnf::Lit;
use crate::engine::{
    check_fixed_partition, decompose_cone, extract_subfunctions, verify, EngineError, Objective, ObjectiveKind,
    Op, Partition, PoStatus, RunOptions, SearchOptions, Strategy, Verdict,
};
use crate::parallel;
use crate::qbf::DEFAULT_ITERATION_CAP;
use crate::sat::{Backend, Budget, SatStatus, Solver};

use report::{performance_table, po_table, quality_table, summary_line, summary_table, CircuitResult, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Parse { path: String, source: AigError },
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "bidec", version, about = "Optimum OR/AND/XOR bi-decomposition of circuit outputs")]
pub struct Cli {
    /// Repeat for more log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decompose every output of one circuit.
    Decompose {
        circuit: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check one given partition of one output.
    Check {
        circuit: PathBuf,
        output: String,
        /// Blocks as "A|B|C", variables comma separated, e.g. "a,b|c|d".
        partition: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Decompose every circuit in a directory and write report tables.
    Bench {
        corpus: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Read DIMACS on stdin and answer in competition format.
    #[command(hide = true)]
    DimacsSolve,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EmitFormat {
    Aiger,
    Blif,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

fn parse_op(s: &str) -> Result<Op, String> {
    s.parse()
}

fn parse_objective(s: &str) -> Result<ObjectiveKind, String> {
    s.parse()
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, default_value = "or", value_parser = parse_op)]
    pub op: Op,
    /// d (disjointness), b (balancedness) or db (weighted sum).
    #[arg(long, default_value = "db", value_parser = parse_objective)]
    pub objective: ObjectiveKind,
    #[arg(long, default_value_t = 1.0)]
    pub wd: f64,
    #[arg(long, default_value_t = 1.0)]
    pub wb: f64,
    #[arg(long, default_value = "hybrid", value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Seconds per SAT call inside the partition search.
    #[arg(long, default_value_t = 4.0)]
    pub qbf_timeout: f64,
    /// Seconds per circuit.
    #[arg(long, default_value_t = 6000.0)]
    pub circuit_timeout: f64,
    /// Worker threads for per-output parallelism; 0 uses all cores.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// "builtin" or the path of a DIMACS solver executable.
    #[arg(long, default_value = "builtin")]
    pub backend: String,
    /// Extra argument for an external backend (repeatable).
    #[arg(long = "backend-arg", allow_hyphen_values = true)]
    pub backend_args: Vec<String>,
    /// Write the decomposed network.
    #[arg(long, value_enum)]
    pub emit: Option<EmitFormat>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ReportFormat,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Conflict budget per SAT call (deterministic).
    #[arg(long)]
    pub conflicts: Option<u64>,
    /// Drop every wall-clock limit and print no timings; combine with
    /// --conflicts for bounded runs.
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long, default_value_t = DEFAULT_ITERATION_CAP)]
    pub iteration_cap: usize,
    /// Directory for report tables and emitted networks.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

impl Default for RunArgs {
    fn default() -> Self {
        RunArgs {
            op: Op::Or,
            objective: ObjectiveKind::WeightedSum,
            wd: 1.0,
            wb: 1.0,
            strategy: Strategy::Hybrid,
            qbf_timeout: 4.0,
            circuit_timeout: 6000.0,
            jobs: 1,
            backend: "builtin".into(),
            backend_args: Vec::new(),
            emit: None,
            format: ReportFormat::Csv,
            seed: 0,
            conflicts: None,
            deterministic: false,
            iteration_cap: DEFAULT_ITERATION_CAP,
            out_dir: None,
        }
    }
}

/// Validated settings for a run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub op: Op,
    pub objective: Objective,
    pub strategy: Strategy,
    pub call_budget: Budget,
    pub circuit_timeout: Option<Duration>,
    pub jobs: usize,
    pub backend: Backend,
    pub emit: Option<EmitFormat>,
    pub format: ReportFormat,
    pub iteration_cap: usize,
    pub timed: bool,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_args(a: &RunArgs) -> Result<Self, CliError> {
        let positive = |x: f64, flag: &str| {
            if x.is_finite() && x > 0.0 {
                Ok(Duration::from_secs_f64(x))
            } else {
                Err(CliError::Usage(format!("{flag} must be a positive number of seconds")))
            }
        };
        let qbf = positive(a.qbf_timeout, "--qbf-timeout")?;
        let circuit = positive(a.circuit_timeout, "--circuit-timeout")?;
        for (w, flag) in [(a.wd, "--wd"), (a.wb, "--wb")] {
            if !(0.0..=1.0).contains(&w) {
                return Err(CliError::Usage(format!("{flag} must lie in [0, 1]")));
            }
        }
        if a.conflicts == Some(0) {
            return Err(CliError::Usage("--conflicts must be positive".into()));
        }
        let objective = match a.objective {
            ObjectiveKind::WeightedSum => Objective::weighted(a.wd, a.wb),
            kind => Objective::new(kind),
        };
        let backend = if a.backend == "builtin" {
            Backend::Builtin { seed: a.seed }
        } else {
            Backend::External {
                program: PathBuf::from(&a.backend),
                args: a.backend_args.clone(),
            }
        };
        let call_budget = Budget {
            conflicts: a.conflicts,
            time: (!a.deterministic).then_some(qbf),
            deadline: None,
        };
        Ok(RunConfig {
            op: a.op,
            objective,
            strategy: a.strategy,
            call_budget,
            circuit_timeout: (!a.deterministic).then_some(circuit),
            jobs: a.jobs,
            backend,
            emit: a.emit,
            format: a.format,
            iteration_cap: a.iteration_cap,
            timed: !a.deterministic,
            out_dir: a.out_dir.clone(),
        })
    }

    fn run_options(&self, deadline: Option<Instant>) -> RunOptions {
        RunOptions {
            op: self.op,
            objective: self.objective,
            search: SearchOptions {
                strategy: self.strategy,
                call_budget: self.call_budget,
                deadline,
                iteration_cap: self.iteration_cap,
                backend: self.backend.clone(),
                ..SearchOptions::default()
            },
            verify_budget: Budget {
                conflicts: self.call_budget.conflicts.map(|c| c.saturating_mul(10)),
                time: self.call_budget.time.map(|t| t * 10),
                deadline: None,
            },
        }
    }

    fn weights(&self) -> (f64, f64) {
        match self.objective.kind {
            ObjectiveKind::WeightedSum => (self.objective.weight_d, self.objective.weight_b),
            _ => (1.0, 1.0),
        }
    }

    fn meta(&self) -> Vec<(String, String)> {
        let mut m = vec![
            ("op".to_string(), self.op.to_string()),
            ("objective".to_string(), self.objective.kind.to_string()),
            ("strategy".to_string(), self.strategy.to_string()),
        ];
        if self.objective.kind == ObjectiveKind::WeightedSum {
            m.push(("wd".into(), self.objective.weight_d.to_string()));
            m.push(("wb".into(), self.objective.weight_b.to_string()));
        }
        m
    }
}

pub fn load_circuit(path: &Path) -> Result<Circuit, CliError> {
    let data = fs::read(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let aiger = match ext {
        "aag" | "aig" => true,
        "blif" => false,
        _ => data.starts_with(b"aag") || data.starts_with(b"aig"),
    };
    let parsed = if aiger { parse_aiger(&data) } else { parse_blif(&data) };
    let mut c = parsed.map_err(|source| CliError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    if c.name.is_empty() || aiger {
        c.name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("circuit").to_string();
    }
    Ok(c)
}

/// Runs every output of `c` through the pipeline.
pub fn analyze_circuit(c: &Circuit, cfg: &RunConfig) -> CircuitResult {
    let start = Instant::now();
    let deadline = cfg.circuit_timeout.map(|t| start + t);
    let opts = cfg.run_options(deadline);
    let cones: Vec<(String, FunctionCone)> = c
        .outputs()
        .iter()
        .zip(c.cones())
        .map(|((name, _), cone)| (name.clone(), cone))
        .collect();
    let outputs = parallel::map(&cones, cfg.jobs, |(name, cone)| {
        let o = decompose_cone(name, cone, &opts);
        log::info!("{}/{}: {}", c.name, name, o.status.label());
        o
    });
    CircuitResult {
        name: c.name.clone(),
        inputs: c.num_inputs(),
        outputs,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Network with each decomposed output rebuilt as f_A op f_B, plus the
/// sub-functions as extra outputs `<name>_fa` and `<name>_fb`.
pub fn decomposed_network(c: &Circuit, r: &CircuitResult, op: Op) -> Result<Circuit, CliError> {
    let gate = match op {
        Op::Or => Gate::Or,
        Op::And => Gate::And,
        Op::Xor => Gate::Xor,
    };
    let cones = c.cones();
    let mut outs: Vec<(String, FunctionCone)> = Vec::new();
    let mut extra: Vec<(String, FunctionCone)> = Vec::new();
    for (o, cone) in r.outputs.iter().zip(cones) {
        match (&o.sub_functions, o.status) {
            (Some((fa, fb)), PoStatus::Decomposed) => {
                let g = FunctionCone::compose(gate, &[fa, fb]).map_err(EngineError::from)?;
                outs.push((o.name.clone(), g));
                extra.push((format!("{}_fa", o.name), fa.clone()));
                extra.push((format!("{}_fb", o.name), fb.clone()));
            }
            _ => outs.push((o.name.clone(), cone)),
        }
    }
    outs.extend(extra);
    let refs: Vec<(String, &FunctionCone)> = outs.iter().map(|(n, f)| (n.clone(), f)).collect();
    Ok(Circuit::from_cones(c.name.clone(), c.input_names().clone(), &refs).map_err(EngineError::from)?)
}

fn write_tables(tables: &[Table], format: ReportFormat, sink: &mut dyn Write) -> io::Result<()> {
    for (i, t) in tables.iter().enumerate() {
        if i > 0 && format == ReportFormat::Csv {
            writeln!(sink)?;
        }
        match format {
            ReportFormat::Csv => t.write_csv(sink)?,
            ReportFormat::Json => t.write_json(sink)?,
        }
    }
    Ok(())
}

fn save_table(dir: &Path, t: &Table, format: ReportFormat) -> io::Result<()> {
    let ext = match format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    };
    let mut f = io::BufWriter::new(fs::File::create(dir.join(format!("{}.{ext}", t.name)))?);
    match format {
        ReportFormat::Csv => t.write_csv(&mut f)?,
        ReportFormat::Json => t.write_json(&mut f)?,
    }
    f.flush()
}

fn emit_network(c: &Circuit, r: &CircuitResult, cfg: &RunConfig, dir: &Path) -> Result<PathBuf, CliError> {
    let net = decomposed_network(c, r, cfg.op)?;
    type Writer = fn(&Circuit, &mut dyn Write) -> Result<(), AigError>;
    let (ext, write): (&str, Writer) = match cfg.emit {
        Some(EmitFormat::Blif) => ("blif", write_blif),
        _ => ("aag", write_aiger),
    };
    let path = dir.join(format!("{}_dec.{ext}", c.name));
    let mut f = io::BufWriter::new(fs::File::create(&path)?);
    write(&net, &mut f).map_err(|e| match e {
        AigError::Io(w) => CliError::Io(io::Error::other(w.0)),
        other => CliError::Engine(EngineError::Aig(other)),
    })?;
    f.flush()?;
    Ok(path)
}

pub fn cmd_decompose(path: &Path, cfg: &RunConfig, out: &mut dyn Write) -> Result<CircuitResult, CliError> {
    let c = load_circuit(path)?;
    let r = analyze_circuit(&c, cfg);
    let results = std::slice::from_ref(&r);
    let meta = cfg.meta();
    let tables = [
        po_table(results, cfg.weights(), &meta),
        performance_table(results, cfg.timed, &meta),
    ];
    write_tables(&tables, cfg.format, out)?;
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
        for t in &tables {
            save_table(dir, t, cfg.format)?;
        }
    }
    if cfg.emit.is_some() {
        let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        let p = emit_network(&c, &r, cfg, &dir)?;
        log::info!("wrote {}", p.display());
    }
    Ok(r)
}

/// Parses "a,b|c|d" (the C block may be empty or omitted).
pub fn parse_partition_spec(spec: &str, f: &FunctionCone) -> Result<Partition, CliError> {
    let blocks: Vec<&str> = spec.split('|').collect();
    if !(2..=3).contains(&blocks.len()) {
        return Err(CliError::Usage(format!("partition {spec:?} must have the form A|B|C")));
    }
    let mut parsed: Vec<Vec<Var>> = Vec::new();
    for b in &blocks {
        let mut vs = Vec::new();
        for name in b.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let v = f
                .var_by_name(name)
                .ok_or_else(|| CliError::Usage(format!("unknown variable {name:?}")))?;
            vs.push(v);
        }
        parsed.push(vs);
    }
    parsed.resize(3, Vec::new());
    let mut p = Partition {
        xa: parsed[0].clone(),
        xb: parsed[1].clone(),
        xc: parsed[2].clone(),
        dropped: Vec::new(),
    };
    p.validate(f.support()).map_err(|e| CliError::Usage(e.to_string()))?;
    for block in [&mut p.xa, &mut p.xb, &mut p.xc] {
        block.sort();
    }
    Ok(p)
}

pub fn cmd_check(
    path: &Path,
    output: &str,
    spec: &str,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<Verdict, CliError> {
    let c = load_circuit(path)?;
    let idx = c
        .output_index(output)
        .ok_or_else(|| CliError::Usage(format!("no output named {output:?}")))?;
    let f = c.extract_cone(idx).map_err(EngineError::from)?;
    let p = parse_partition_spec(spec, &f)?;
    let r = check_fixed_partition(&f, &p, cfg.op, &cfg.call_budget, &cfg.backend)?;
    writeln!(out, "{}", r.verdict)?;
    match r.verdict {
        Verdict::Yes => {
            let (fa, fb) = extract_subfunctions(&f, &p, cfg.op)?;
            let v = verify(&f, &fa, &fb, cfg.op, &Budget::unlimited(), &cfg.backend)?;
            writeln!(out, "f_A = {fa}")?;
            writeln!(out, "f_B = {fb}")?;
            writeln!(out, "verify: {}", v.verdict)?;
        }
        Verdict::No => {
            if let Some(w) = r.witness {
                let labels = ["x", "x'", "x''", "x'''"];
                for (label, bits) in labels.iter().zip(w) {
                    let cells: Vec<String> = f
                        .support()
                        .iter()
                        .zip(bits)
                        .map(|(&v, b)| format!("{}={}", f.var_name(v), u8::from(b)))
                        .collect();
                    writeln!(out, "witness {label}: {}", cells.join(" "))?;
                }
            }
        }
        Verdict::Unknown => {}
    }
    Ok(r.verdict)
}

/// Files in `dir` with a circuit extension, sorted by name.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("aag" | "aig" | "blif"))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub struct BenchReport {
    pub results: Vec<CircuitResult>,
    pub tables: Vec<Table>,
    pub summary: String,
}

pub fn cmd_bench(dir: &Path, cfg: &RunConfig, out: &mut dyn Write) -> Result<BenchReport, CliError> {
    let mut all = Vec::new();
    for path in corpus_files(dir)? {
        match load_circuit(&path) {
            Ok(c) => {
                let r = analyze_circuit(&c, cfg);
                for o in &r.outputs {
                    if let (Some(res), true) = (&o.result, o.status == PoStatus::Decomposed) {
                        if res.best_k.is_some_and(|k| k > res.upper_bound) {
                            log::warn!("{}/{}: k exceeds the bootstrap bound", r.name, o.name);
                        }
                    }
                }
                if cfg.emit.is_some() && r.decomposed() > 0 {
                    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
                    fs::create_dir_all(&dir)?;
                    emit_network(&c, &r, cfg, &dir)?;
                }
                all.push(r);
            }
            Err(e) => log::error!("skipping {}: {e}", path.display()),
        }
    }
    let (kept, dropped): (Vec<CircuitResult>, Vec<CircuitResult>) = all.into_iter().partition(|r| r.decomposed() > 0);
    for r in &dropped {
        log::info!("{}: no decomposable outputs, left out of the tables", r.name);
    }
    let meta = cfg.meta();
    let mut everything = kept.clone();
    everything.extend(dropped);
    everything.sort_by(|a, b| a.name.cmp(&b.name));
    let tables = vec![
        quality_table(&kept, cfg.weights(), &meta),
        performance_table(&kept, cfg.timed, &meta),
        po_table(&kept, cfg.weights(), &meta),
        summary_table(&everything, &meta),
    ];
    let summary = summary_line(&tables[3]);
    let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    for t in &tables {
        save_table(&dir, t, cfg.format)?;
    }
    writeln!(out, "{summary}")?;
    Ok(BenchReport {
        results: kept,
        tables,
        summary,
    })
}

/// Reference DIMACS backend on stdin/stdout using the embedded solver.
pub fn cmd_dimacs_solve(input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    let mut solver = Solver::default();
    let mut clause: Vec<Lit> = Vec::new();
    let mut num_vars = 0u32;
    for line in input.lines() {
        let line = line?;
        let t = line.trim();
        if t.starts_with('c') || t.is_empty() || t.starts_with('%') {
            continue;
        }
        if let Some(rest) = t.strip_prefix('p') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            num_vars = parts.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
            continue;
        }
        for tok in t.split_whitespace() {
            let x: i64 = tok
                .parse()
                .map_err(|_| CliError::Usage(format!("bad DIMACS token {tok:?}")))?;
            match Lit::from_dimacs(x) {
                Some(l) => clause.push(l),
                None => {
                    solver.add_clause(&clause);
                    clause.clear();
                }
            }
        }
    }
    if !clause.is_empty() {
        solver.add_clause(&clause);
    }
    solver.ensure_vars(num_vars);
    match solver.solve(&[], &Budget::unlimited()) {
        SatStatus::Sat => {
            writeln!(out, "s SATISFIABLE")?;
            let vals: Vec<String> = (1..=solver.num_vars())
                .map(|v| {
                    let l = Lit::positive(v);
                    if solver.model_value(l) {
                        v.to_string()
                    } else {
                        format!("-{v}")
                    }
                })
                .collect();
            writeln!(out, "v {} 0", vals.join(" "))?;
        }
        SatStatus::Unsat => writeln!(out, "s UNSATISFIABLE")?,
        SatStatus::Unknown => writeln!(out, "s UNKNOWN")?,
    }
    Ok(())
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Entry point shared by the binary and the tests. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::Decompose { circuit, run } => {
            RunConfig::from_args(run).and_then(|cfg| cmd_decompose(circuit, &cfg, out).map(|_| ()))
        }
        Command::Check {
            circuit,
            output,
            partition,
            run,
        } => RunConfig::from_args(run).and_then(|cfg| cmd_check(circuit, output, partition, &cfg, out).map(|_| ())),
        Command::Bench { corpus, run } => {
            RunConfig::from_args(run).and_then(|cfg| cmd_bench(corpus, &cfg, out).map(|_| ()))
        }
        Command::DimacsSolve => {
            let stdin = io::stdin();
            cmd_dimacs_solve(&mut stdin.lock(), out)
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
