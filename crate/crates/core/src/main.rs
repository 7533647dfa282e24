use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use feasikit::experiment::{
    inline_config, parse_config, run_batch, run_experiment, run_probes, write_probe_report, ConfigFile,
    ExperimentConfig, Outcome, ProblemSource,
};
use feasikit::solver::Mode;
use feasikit::{Error, Result};

const CONFIG_HELP: &str = "\
Config files are JSON. A batch file is {\"experiments\": [config, ...]}.

Defaults when a key is omitted:
  solver.schedule        {\"kind\": \"power\", \"r0\": 1.0, \"alpha_exp\": 2.0}
  solver.control         {\"kind\": \"full\"}
  solver.alpha           1.0
  solver.weights         {\"kind\": \"uniform\"}
  solver.epsilon_margin  0.001
  solver.max_iterations  100000
  solver.mode            EXPLORATORY
  solver.fix_tolerance   1e-14
  output.dir             out
  output.trace           trace.csv
  output.summary         summary.json

Exit codes for solve: 0 on FINITE_CONVERGENCE or TOL_REACHED, 2 on
BUDGET_EXHAUSTED, 1 on any error. probe exits 3 when a verdict fails.
Set FEASIKIT_LOG to error, warn, info or debug for log output.";

#[derive(Parser)]
#[command(name = "feasikit", version, about = "Overrelaxed simultaneous-cutter solver for convex feasibility problems")]
#[command(after_long_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver and write the trace CSV and summary JSON.
    Solve {
        config: PathBuf,
        /// Output directory (batch runs use one subdirectory per experiment).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Experiments run concurrently in a batch.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the mode (CERTIFIED_FINITE, CERTIFIED_ASYMPTOTIC, EXPLORATORY).
        #[arg(long)]
        mode: Option<Mode>,
        /// Override solver.max_iterations.
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
    },
    /// Run diagnostics only and write probe.json.
    Probe {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the schedule regime and the control's intermittency.
    Classify { config: PathBuf },
    /// Print the generated problem as an inline config.
    Generate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn configs(path: &Path) -> Result<(Vec<ExperimentConfig>, bool)> {
    Ok(match parse_config(path)? {
        ConfigFile::Single(c) => (vec![*c], false),
        ConfigFile::Batch(cs) => (cs, true),
    })
}

fn single(path: &Path) -> Result<ExperimentConfig> {
    match configs(path)? {
        (mut cs, false) => Ok(cs.remove(0)),
        _ => Err(Error::Validation(vec!["expected a single experiment, got a batch".into()])),
    }
}

fn echo(o: &Outcome) {
    let s = &o.summary;
    println!(
        "{}: {}{} after {} iterations, residual {:.3e}; trace {}, summary {}",
        s.name,
        s.status,
        s.k_star.map(|k| format!(" (k* = {k})")).unwrap_or_default(),
        s.iterations,
        s.final_residual,
        o.trace_path.display(),
        o.summary_path.display()
    );
    for q in &s.qf {
        match (&q.verdict, &q.error) {
            (Some(v), _) => println!("  {:?}: {}", q.kind, if v.pass { "PASS" } else { "FAIL" }),
            (None, Some(e)) => println!("  {:?}: not evaluated ({e})", q.kind),
            _ => {}
        }
    }
}

fn solve(
    path: &Path,
    out: Option<PathBuf>,
    jobs: usize,
    seed: Option<u64>,
    mode: Option<Mode>,
    max_iter: Option<usize>,
) -> Result<i32> {
    let (mut cs, batch) = configs(path)?;
    let mut used = HashSet::new();
    for (i, c) in cs.iter_mut().enumerate() {
        if let Some(s) = seed {
            c.seed = Some(s);
        }
        if let Some(m) = mode {
            c.solver.mode = m;
        }
        if let Some(k) = max_iter {
            c.solver.max_iterations = k;
        }
        if batch {
            let mut name = c.name.clone().unwrap_or_else(|| format!("exp-{i:03}"));
            if !used.insert(name.clone()) {
                name = format!("{name}-{i:03}");
            }
            c.name = Some(name.clone());
            c.output.dir = out.clone().unwrap_or_else(|| PathBuf::from("out")).join(name);
        } else if let Some(dir) = &out {
            c.output.dir = dir.clone();
        }
    }
    if !batch {
        let o = run_experiment(&cs[0])?;
        echo(&o);
        return Ok(o.exit_code());
    }
    let mut code = 0;
    let mut failed = false;
    for (c, r) in cs.iter().zip(run_batch(&cs, jobs)) {
        match r {
            Ok(o) => {
                echo(&o);
                code = code.max(o.exit_code());
            }
            Err(e) => {
                eprintln!("error[{}]: {}: {e}", e.kind(), c.name.as_deref().unwrap_or("?"));
                failed = true;
            }
        }
    }
    // an error outranks an exhausted budget
    Ok(if failed { 1 } else { code })
}

fn probe(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<i32> {
    let mut c = single(path)?;
    if let Some(s) = seed {
        c.seed = Some(s);
    }
    let entries = run_probes(&c)?;
    let dir = out.unwrap_or_else(|| c.output.dir.clone());
    let report = write_probe_report(&dir, &entries)?;
    let mut failed = false;
    for e in &entries {
        let verdict = match e.pass {
            Some(true) => "PASS",
            Some(false) => {
                failed = true;
                "FAIL"
            }
            None => "REPORT",
        };
        println!("{}: {verdict}", e.name);
    }
    println!("report written to {}", report.display());
    Ok(if failed { 3 } else { 0 })
}

fn classify(path: &Path) -> Result<i32> {
    for c in configs(path)?.0 {
        let name = c.name.clone().unwrap_or_else(|| "experiment".into());
        let regime = match c.solver.schedule.classify() {
            Ok(cl) => {
                let label = serde_json::to_value(cl.regime)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default();
                match cl.warning {
                    Some(w) => format!("{label} (warning: {w})"),
                    None => label,
                }
            }
            Err(e) => format!("UNCLASSIFIED ({e})"),
        };
        let control = c.solver.control.build(c.m())?;
        let s = control
            .minimal_intermittency(control.period())
            .map_or_else(|| "NONE".to_string(), |s| s.to_string());
        println!("{name}: regime {regime}; intermittency {s}");
    }
    Ok(0)
}

fn generate(path: &Path, seed: Option<u64>) -> Result<i32> {
    let mut c = single(path)?;
    if let Some(s) = seed {
        c.seed = Some(s);
    }
    if !matches!(c.problem, ProblemSource::Generator(_)) {
        return Err(Error::Validation(vec!["config has no generator".into()]));
    }
    let inline = inline_config(&c)?;
    let text = serde_json::to_string_pretty(&inline).map_err(|e| Error::Parse(e.to_string()))?;
    println!("{text}");
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FEASIKIT_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { config, out, jobs, seed, mode, max_iter } => {
            solve(&config, out, jobs, seed, mode, max_iter)
        }
        Command::Probe { config, out, seed } => probe(&config, out, seed),
        Command::Classify { config } => classify(&config),
        Command::Generate { config, seed } => generate(&config, seed),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(1)
        }
    }
}
