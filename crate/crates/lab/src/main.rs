use std::path::PathBuf;
use std::process::ExitCode;

use bai_core::stopping::parse_threshold;
use bai_core::{CharacteristicTimes, DEFAULT_TOL};
use bai_lab::config::{parse_model, ConfigFile, InstanceSection};
use bai_lab::harness::{
    aggregate, lower_bound, lower_bound_relaxed, practical_lower_bound, run_experiment,
};
use bai_lab::io::{aggregates_csv, records_ndjson, sweep_csv, OutputDir};
use bai_lab::sweep::{ratio_sweep, Family};
use bai_lab::{sig4, validate, LabError, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bai",
    version,
    about = "Fixed-confidence best-arm identification experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic times, allocations and lower bounds of an instance.
    Times(TimesArgs),
    /// Replicated runs to stopping; writes run records and aggregates.
    Run(RunArgs),
    /// Balanced-time and T^(1/2) ratios to T* over an instance family.
    Sweep(SweepArgs),
    /// Structural self-checks of the solvers and the harness.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// TOML experiment file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// bernoulli | gaussian | poisson | exponential | pareto
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated arm means.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    means: Option<Vec<f64>>,
    /// Gaussian variance.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Pareto scale.
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Args)]
struct TimesArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Confidence levels for the lower bounds.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.01,0.001")]
    deltas: Vec<f64>,
    /// heuristic | deviational | deviational:<c>:<alpha>
    #[arg(long, default_value = "heuristic")]
    threshold: String,
    /// Also write times.csv into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Comma-separated policies: bcte, tasd, rr, t3c[:beta].
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    /// Runs per (policy, delta).
    #[arg(long)]
    runs: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// heuristic | deviational | deviational:<c>:<alpha>
    #[arg(long)]
    threshold: Option<String>,
    /// Rounds after which a run is abandoned as truncated.
    #[arg(long)]
    horizon_cap: Option<u64>,
    /// Record wall-clock time per step (output no longer reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long, env = "BAI_WORKERS")]
    workers: Option<usize>,
    /// Output directory (default: the config's output.directory, else ./results).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// mu1 | mu2 | worst
    #[arg(long, default_value = "mu1")]
    family: String,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "bernoulli,gaussian,poisson,exponential"
    )]
    models: Vec<String>,
    #[arg(long, default_value_t = 2)]
    kmin: usize,
    #[arg(long, default_value_t = 50)]
    kmax: usize,
    /// Gaussian variance.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Pareto scale.
    #[arg(long)]
    scale: Option<f64>,
    /// Write ratio_sweep.csv here instead of printing CSV to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, env = "BAI_WORKERS")]
    workers: Option<usize>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Config file (if any) with the instance flags applied on top.
fn load_config(args: &InstanceArgs) -> Result<ConfigFile> {
    let mut file = match &args.config {
        Some(path) => Some(ConfigFile::load(path)?),
        None => None,
    };
    if let Some(model) = &args.model {
        let means = match (&args.means, &file) {
            (Some(m), _) => m.clone(),
            (None, Some(f)) => f.instance.means.clone(),
            (None, None) => return Err(LabError::Config("--means is required".into())),
        };
        let instance = InstanceSection {
            model: model.clone(),
            sigma2: args.sigma2,
            scale: args.scale,
            means,
        };
        match &mut file {
            Some(f) => f.instance = instance,
            None => {
                file = Some(ConfigFile {
                    instance,
                    experiment: Default::default(),
                    output: Default::default(),
                })
            }
        }
    } else if let Some(f) = &mut file {
        if let Some(m) = &args.means {
            f.instance.means = m.clone();
        }
        if args.sigma2.is_some() {
            f.instance.sigma2 = args.sigma2;
        }
        if args.scale.is_some() {
            f.instance.scale = args.scale;
        }
    }
    file.ok_or_else(|| LabError::Config("give --config or --model and --means".into()))
}

fn vector(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| sig4(x)).collect();
    format!("({})", parts.join(", "))
}

fn cmd_times(args: TimesArgs) -> Result<()> {
    let file = load_config(&args.instance)?;
    let inst = file.instance()?;
    let threshold = parse_threshold(&args.threshold, Some(inst.num_arms()))?;
    let ct = CharacteristicTimes::compute(&inst, DEFAULT_TOL).map_err(LabError::Solver)?;
    let mut bounds = Vec::new();
    for &d in &args.deltas {
        bounds.push((
            d,
            lower_bound(&inst, d)?,
            lower_bound_relaxed(&inst, d)?,
            practical_lower_bound(&inst, d, &threshold)?,
        ));
    }
    println!("model    {}", inst.model().name());
    println!("means    {}", vector(inst.means()));
    println!("T*       {}", sig4(ct.t_star));
    println!("w*       {}", vector(ct.w_star.as_slice()));
    println!("T^1/2    {}", sig4(ct.t_beta));
    println!("T_lower  {}", sig4(ct.t_lower));
    println!("gamma    {}", sig4(ct.gamma));
    println!("w_lower  {}", vector(ct.w_lower.as_slice()));
    println!("threshold {threshold}");
    println!(
        "{:<8} {:>10} {:>10} {:>10}",
        "delta", "LB", "LB_relaxed", "PLB"
    );
    for (d, lb, lbr, plb) in &bounds {
        println!("{:<8} {:>10} {:>10} {:>10}", d, sig4(*lb), sig4(*lbr), plb);
    }
    if let Some(dir) = &args.out {
        let mut out = OutputDir::create(dir)?;
        let mut text = String::from("quantity,value\n");
        let mut row = |q: String, v: String| text.push_str(&format!("{q},{v}\n"));
        row("t_star".into(), ct.t_star.to_string());
        row("t_half".into(), ct.t_beta.to_string());
        row("t_lower".into(), ct.t_lower.to_string());
        row("gamma".into(), ct.gamma.to_string());
        for (i, w) in ct.w_star.as_slice().iter().enumerate() {
            row(format!("w_star_{i}"), w.to_string());
        }
        for (i, w) in ct.w_lower.as_slice().iter().enumerate() {
            row(format!("w_lower_{i}"), w.to_string());
        }
        for (d, lb, lbr, plb) in &bounds {
            row(format!("lb_{d}"), lb.to_string());
            row(format!("lb_relaxed_{d}"), lbr.to_string());
            row(format!("plb_{d}"), plb.to_string());
        }
        out.stage("times.csv", text.as_bytes())?;
        out.commit()?;
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut file = load_config(&args.instance)?;
    let e = &mut file.experiment;
    if args.policies.is_some() {
        e.policies = args.policies.clone();
    }
    if args.deltas.is_some() {
        e.deltas = args.deltas.clone();
    }
    e.n_runs = args.runs.or(e.n_runs);
    e.master_seed = args.seed.or(e.master_seed);
    e.threshold = args.threshold.clone().or(e.threshold.take());
    e.horizon_cap = args.horizon_cap.or(e.horizon_cap);
    if args.timing {
        e.timing = Some(true);
    }
    let cfg = file.experiment()?;
    let formats = file.formats()?;
    let dir = args
        .out
        .clone()
        .or(file.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let mut out = OutputDir::create(&dir)?;
    let records = run_experiment(&cfg, args.workers.unwrap_or_else(default_workers))?;
    let aggs = aggregate(&records);
    let policy_names: Vec<String> = cfg.policies.iter().map(ToString::to_string).collect();
    if formats.ndjson {
        out.stage("runs.ndjson", records_ndjson(&records)?.as_bytes())?;
    }
    if formats.csv {
        out.stage("aggregate.csv", &aggregates_csv(&aggs, &policy_names)?)?;
    }
    let mut effective = ConfigFile::effective(&cfg, &file.output);
    effective.output.directory = Some(dir.clone());
    out.stage("effective_config.toml", effective.to_toml()?.as_bytes())?;
    out.commit()?;
    println!(
        "{:<10} {:>8} {:>6} {:>10} {:>10} {:>8} {:>6}",
        "policy", "delta", "n", "mean_tau", "stderr", "error", "trunc"
    );
    for a in &aggs {
        println!(
            "{:<10} {:>8} {:>6} {:>10} {:>10} {:>8} {:>6}",
            a.policy,
            a.delta,
            a.n,
            sig4(a.mean_tau),
            sig4(a.stderr),
            sig4(a.error_rate),
            a.truncated
        );
    }
    println!("wrote {} records to {}", records.len(), dir.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let family: Family = args.family.parse()?;
    if args.kmin < 2 || args.kmax < args.kmin {
        return Err(LabError::Config("need 2 <= kmin <= kmax".into()));
    }
    let ks: Vec<usize> = (args.kmin..=args.kmax).collect();
    let mut rows = Vec::new();
    for name in &args.models {
        let lower = name.trim().to_ascii_lowercase();
        let model = match lower.as_str() {
            "gaussian" | "normal" => parse_model(&lower, args.sigma2, None)?,
            "pareto" => parse_model(&lower, None, args.scale)?,
            _ => parse_model(&lower, None, None)?,
        };
        let table = ratio_sweep(model, family, &ks)?;
        for d in &table.dropped {
            eprintln!("dropped {} K={}: {}", d.model, d.k, d.reason);
        }
        rows.extend(table.rows);
    }
    let csv = sweep_csv(&rows)?;
    match &args.out {
        Some(dir) => {
            let mut out = OutputDir::create(dir)?;
            out.stage("ratio_sweep.csv", &csv)?;
            out.commit()?;
            println!(
                "wrote {} rows to {}",
                rows.len(),
                dir.join("ratio_sweep.csv").display()
            );
        }
        None => print!("{}", String::from_utf8_lossy(&csv)),
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<()> {
    let outcomes = validate::run_all(args.workers.unwrap_or_else(default_workers));
    let mut failed = 0;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<42} {} [{:.2?}]", o.name, o.detail, o.elapsed);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        return Err(LabError::Runtime(format!(
            "{failed} of {} checks failed",
            outcomes.len()
        )));
    }
    println!("all {} checks passed", outcomes.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Times(a) => cmd_times(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
