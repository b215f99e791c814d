use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use hens_core::error::{CaseError, DesignError, SolverError};
use hens_core::pipeline::{prepare, Prepared};
use hens_core::report::{render_convergence, render_stream_plot, tac_table};
use hens_core::solver::{write_lp_file, write_mps_file, Adapter, ModelFormat};
use hens_core::{load_case_file, CaseStudy, ConvergenceTrace, FitLibrary, ResultDocument, Solution, SolveStatus, SolverConfig};

const EXIT_GENERIC: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SCHEMA: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_SOLVER: u8 = 5;

#[derive(Parser)]
#[command(name = "hens", version, about = "Heat exchanger network synthesis with utilities as streams")]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit all surrogates of a case and write them to `fits.json`.
    Fit(CaseArgs),
    /// Write the MILP as an LP or MPS file.
    Build(BuildArgs),
    /// Solve the MILP and write `solution.json` and `trace.csv`.
    Solve(SolveArgs),
    /// Turn a solution into `result.json` and a cost table.
    Report(ReportArgs),
    /// Render `stream_plot.svg` (and `convergence.svg` when a trace is given).
    Plot(PlotArgs),
    /// fit, build, solve, report and plot in one go.
    RunAll(SolveArgs),
}

#[derive(Args)]
struct CaseArgs {
    /// Case file.
    #[arg(long = "case", value_name = "PATH")]
    case_flag: Option<PathBuf>,
    /// Case file, as an alternative to `--case`.
    #[arg(value_name = "CASE")]
    case_pos: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl CaseArgs {
    fn case_path(&self) -> Result<&Path, Usage> {
        self.case_flag
            .as_deref()
            .or(self.case_pos.as_deref())
            .ok_or(Usage("a case file is required (--case <path>)".into()))
    }

    fn load(&self) -> Result<CaseStudy> {
        let path = self.case_path()?;
        Ok(load_case_file(path)?)
    }
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Previously written fit library; fits are recomputed when omitted.
    #[arg(long)]
    fits: Option<PathBuf>,
    #[arg(long, default_value = "lp", value_parser = parse_format)]
    format: ModelFormat,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    build: BuildArgs,
    /// Solver adapter: cbc or highs (default from the case file).
    #[arg(long)]
    solver: Option<String>,
    /// Relative MIP gap.
    #[arg(long)]
    gap: Option<f64>,
    /// Time limit in seconds.
    #[arg(long = "time-limit")]
    time_limit: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Solve this many times and keep the fastest run.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Solution written by `solve`.
    #[arg(long)]
    solution: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Result document written by `report`.
    #[arg(long)]
    result: PathBuf,
    /// Convergence trace written by `solve`.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Bad command line usage that clap cannot catch.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// The solver proved the model infeasible.
#[derive(Debug)]
struct Infeasible(String);

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} is infeasible", self.0)
    }
}

impl std::error::Error for Infeasible {}

fn parse_format(s: &str) -> Result<ModelFormat, String> {
    match s.to_ascii_lowercase().as_str() {
        "lp" => Ok(ModelFormat::Lp),
        "mps" => Ok(ModelFormat::Mps),
        _ => Err(format!("unknown format `{s}` (expected lp or mps)")),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return EXIT_USAGE;
        }
        if cause.is::<Infeasible>() {
            return EXIT_INFEASIBLE;
        }
        if let Some(e) = cause.downcast_ref::<CaseError>() {
            return match e {
                CaseError::Infeasible { .. } => EXIT_INFEASIBLE,
                _ => EXIT_SCHEMA,
            };
        }
        if cause.is::<SolverError>() {
            return EXIT_SOLVER;
        }
        if let Some(DesignError::NoSolution(status)) = cause.downcast_ref::<DesignError>() {
            return if *status == SolveStatus::Infeasible { EXIT_INFEASIBLE } else { EXIT_SOLVER };
        }
    }
    EXIT_GENERIC
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn prepared(args: &BuildArgs) -> Result<Prepared> {
    let case = args.case.load()?;
    let fits = match &args.fits {
        Some(p) => Some(FitLibrary::load(p).with_context(|| format!("loading fits from {}", p.display()))?),
        None => None,
    };
    Ok(prepare(&case, fits)?)
}

fn cmd_fit(args: &CaseArgs) -> Result<()> {
    let case = args.load()?;
    let symbolic = hens_core::build_symbolic_model(&case);
    let fits = FitLibrary::build(&case, &symbolic)?;
    let path = args.out.join("fits.json");
    write(&path, &fits.to_json())?;
    println!("{} surrogates, worst rmse {:.3} % -> {}", fits.entries.len(), fits.worst_rmse(), path.display());
    Ok(())
}

fn build_model(args: &BuildArgs, p: &Prepared) -> Result<PathBuf> {
    fs::create_dir_all(&args.case.out)?;
    let path = match args.format {
        ModelFormat::Lp => args.case.out.join("model.lp"),
        ModelFormat::Mps => args.case.out.join("model.mps"),
    };
    match args.format {
        ModelFormat::Lp => write_lp_file(&p.model, &path)?,
        ModelFormat::Mps => write_mps_file(&p.model, &path)?,
    }
    Ok(path)
}

fn cmd_build(args: &BuildArgs) -> Result<()> {
    let p = prepared(args)?;
    let path = build_model(args, &p)?;
    println!(
        "{}: {} variables ({} binary), {} rows -> {}",
        p.case.name,
        p.model.num_vars(),
        p.model.num_binaries(),
        p.model.num_rows(),
        path.display()
    );
    Ok(())
}

fn solver_config(args: &SolveArgs, case: &CaseStudy) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::from_settings(&case.solver)?;
    if let Some(s) = &args.solver {
        cfg.adapter = s.parse::<Adapter>().map_err(|e| Usage(e.to_string()))?;
    }
    if let Some(g) = args.gap {
        cfg.rel_gap = g;
    }
    if let Some(t) = args.time_limit {
        cfg.time_limit = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    cfg.format = args.build.format;
    cfg.work_dir = Some(args.build.case.out.join("solver"));
    cfg.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(cfg)
}

fn run_solve(args: &SolveArgs, p: &Prepared) -> Result<(Solution, ConvergenceTrace)> {
    let cfg = solver_config(args, &p.case)?;
    let (sol, trace) = p.solve(&cfg, args.repeats)?;
    let out = &args.build.case.out;
    write(&out.join("solution.json"), &serde_json::to_string_pretty(&sol)?)?;
    write(&out.join("trace.csv"), &trace.to_csv())?;
    println!(
        "{}: {:?}, objective {}, gap {}, {:.1} s",
        p.case.name,
        sol.status,
        sol.objective.map_or("n/a".into(), |o| format!("{o:.2}")),
        sol.rel_gap.map_or("n/a".into(), |g| format!("{:.4} %", 100.0 * g)),
        sol.wall_time
    );
    if sol.status == SolveStatus::Infeasible {
        return Err(Infeasible(p.case.name.clone()).into());
    }
    Ok((sol, trace))
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let p = prepared(&args.build)?;
    run_solve(args, &p).map(|_| ())
}

fn write_report(out: &Path, doc: &ResultDocument) -> Result<()> {
    write(&out.join("result.json"), &doc.to_json())?;
    let table = tac_table(&doc.design);
    write(&out.join("tac.txt"), &table)?;
    print!("{table}");
    if let Some(g) = doc.tac_gap_pct {
        println!("MILP vs exact TAC: {g:.3} %{}", if doc.tac_flagged { " (flagged)" } else { "" });
    }
    for c in doc.validation.failures() {
        println!("check {} failed: {}", c.name, c.detail);
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let case = args.case.load()?;
    let text = fs::read_to_string(&args.solution).with_context(|| format!("reading {}", args.solution.display()))?;
    let sol: Solution = serde_json::from_str(&text).context("parsing solution")?;
    let symbolic = hens_core::build_symbolic_model(&case);
    let design = hens_core::hen::reconstruct(&case, &symbolic, &sol)?;
    let report = hens_core::hen::validate(&case, &design);
    write_report(&args.case.out, &ResultDocument::new(design, report))
}

fn write_plots(out: &Path, doc: &ResultDocument, trace: Option<&ConvergenceTrace>) -> Result<()> {
    write(&out.join("stream_plot.svg"), &render_stream_plot(&doc.design))?;
    if let Some(t) = trace.filter(|t| !t.is_empty()) {
        let title = format!("{}: convergence", doc.design.case);
        write(&out.join("convergence.svg"), &render_convergence(t, &title))?;
    }
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let text = fs::read_to_string(&args.result).with_context(|| format!("reading {}", args.result.display()))?;
    let doc = ResultDocument::from_json(&text).context("parsing result document")?;
    let trace = match &args.trace {
        Some(p) => {
            let csv = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(ConvergenceTrace::from_csv(&csv).map_err(|e| anyhow!("parsing trace: {e}"))?)
        }
        None => None,
    };
    write_plots(&args.out, &doc, trace.as_ref())
}

fn cmd_run_all(args: &SolveArgs) -> Result<()> {
    let out = &args.build.case.out;
    let p = prepared(&args.build)?;
    write(&out.join("fits.json"), &p.fits.to_json())?;
    build_model(&args.build, &p)?;
    let (sol, trace) = run_solve(args, &p)?;
    let doc = p.document(&sol)?;
    write_report(out, &doc)?;
    write_plots(out, &doc, Some(&trace))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Build(a) => cmd_build(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Report(a) => cmd_report(a),
        Command::Plot(a) => cmd_plot(a),
        Command::RunAll(a) => cmd_run_all(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
