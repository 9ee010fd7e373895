//! Batch CLI: run one experiment, compare schemes side by side, tabulate
//! convergence bounds, or execute verification suites. One experiment per
//! invocation; all outputs are CSV/JSON-lines on disk plus a short stdout
//! summary.
//!
//! Exit codes: 0 success, 1 failed verification checks, 2 configuration or
//! usage error, 3 diverged run.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ecgrad::compressors::eps_bound;
use ecgrad::config::{load_source, ExperimentConfig, RawConfig, PRESET_NAMES};
use ecgrad::problems::{OracleMode, Scope};
use ecgrad::simulation::{compare, run, RunTrace};
use ecgrad::theory::{theorem_curves, BoundInputs, TheoremId};
use ecgrad::verify::{run_suite, SUITE_NAMES};
use ecgrad::{Error, Result};

const USAGE: &str = "\
usage: ecgrad <run|compare|bounds|verify> [options]

  run      execute one scheme, write trace.csv + resolved-config.cfg
  compare  execute every scheme in `schemes`, write per-scheme traces + summary.csv
  bounds   tabulate the bounds in `thms`, write one bounds-<thm>.csv each
  verify   run a verification suite by name (default: all), print a JSON-lines report

options:
  --config PATH|preset:NAME  experiment config (required except for verify)
  --out DIR                  output directory (default .)
  --seed N                   override the run seed
  --scheme STR               override the scheme (direct, ec:identity, ec:scaled:A,
                             ec:hessian, ec:diag, ec:bfgs)
  --compressor STR           override the compressor (exact, sign, rounding:D,
                             epsball:E, topk:K)
  --gamma-rule STR           override the step-size rule (1/L, 2/(mu+L), N/L, a number)
  --workers N                override the worker count
  --iters N                  override the iteration count
  --batch N|full             override the mini-batch size
";

fn main() -> ExitCode {
    if let Err(e) = cap_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Diverged { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

/// `ECGRAD_THREADS` caps the rayon pool (worker gradients are evaluated in
/// parallel; results are identical at any thread count).
fn cap_threads() -> Result<()> {
    if let Ok(v) = std::env::var("ECGRAD_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("ECGRAD_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::Config("ECGRAD_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("could not size the thread pool: {e}")))?;
    }
    Ok(())
}

struct Cli {
    config: Option<String>,
    out: PathBuf,
    /// `(config key, value)` pairs from override flags, applied in order.
    overrides: Vec<(&'static str, String)>,
    positional: Vec<String>,
}

fn parse_args(args: &[String]) -> Result<Cli> {
    let mut cli = Cli {
        config: None,
        out: PathBuf::from("."),
        overrides: Vec::new(),
        positional: Vec::new(),
    };
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let mut value_of = |flag: &str| -> Result<String> {
            it.next()
                .cloned()
                .ok_or_else(|| Error::Config(format!("{flag} needs a value")))
        };
        match arg.as_str() {
            "--config" => cli.config = Some(value_of("--config")?),
            "--out" => cli.out = PathBuf::from(value_of("--out")?),
            "--seed" => cli.overrides.push(("seed", value_of("--seed")?)),
            "--scheme" => cli.overrides.push(("scheme", value_of("--scheme")?)),
            "--compressor" => cli.overrides.push(("compressor", value_of("--compressor")?)),
            "--gamma-rule" => cli.overrides.push(("gamma_rule", value_of("--gamma-rule")?)),
            "--workers" => cli.overrides.push(("workers", value_of("--workers")?)),
            "--iters" => cli.overrides.push(("iters", value_of("--iters")?)),
            "--batch" => cli.overrides.push(("batch", value_of("--batch")?)),
            "--help" | "-h" => return Err(Error::Config(USAGE.into())),
            other if other.starts_with('-') => {
                return Err(Error::Config(format!("unknown flag `{other}`\n\n{USAGE}")))
            }
            other => cli.positional.push(other.into()),
        }
    }
    Ok(cli)
}

fn dispatch(args: &[String]) -> Result<ExitCode> {
    let Some(subcommand) = args.first() else {
        eprintln!("{USAGE}");
        return Ok(ExitCode::from(2));
    };
    let cli = parse_args(&args[1..])?;
    match subcommand.as_str() {
        "run" => cmd_run(&cli),
        "compare" => cmd_compare(&cli),
        "bounds" => cmd_bounds(&cli),
        "verify" => cmd_verify(&cli),
        other => Err(Error::Config(format!("unknown subcommand `{other}`\n\n{USAGE}"))),
    }
}

/// Load the config source, apply flag overrides, parse.
fn experiment(cli: &Cli) -> Result<ExperimentConfig> {
    let Some(source) = &cli.config else {
        return Err(Error::Config(format!(
            "this subcommand needs --config PATH (or preset:NAME; presets: {})",
            PRESET_NAMES.join(", ")
        )));
    };
    let mut raw = RawConfig::parse(&load_source(source)?)?;
    for (key, value) in &cli.overrides {
        raw.set(key, value);
    }
    ExperimentConfig::from_raw(&raw)
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    std::fs::create_dir_all(&cli.out)?;
    Ok(&cli.out)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn summary_line(trace: &RunTrace) -> String {
    let last = trace.final_row();
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into());
    format!(
        "{} + {}: k={} dist={} gap={} gradsq={:.6e} bits={}",
        trace.scheme_label,
        trace.compressor_label,
        last.k,
        opt(last.dist),
        opt(last.gap),
        last.gradsq,
        last.bits
    )
}

fn cmd_run(cli: &Cli) -> Result<ExitCode> {
    let config = experiment(cli)?;
    let problem = config.build_problem()?;
    let rc = config.run_config(&problem, config.scheme.clone())?;
    let trace = run(&problem, &rc)?;
    let dir = out_dir(cli)?;
    write(&dir.join("trace.csv"), &trace.to_csv())?;
    write(&dir.join("resolved-config.cfg"), &config.echo(rc.scheme.gamma))?;
    println!("{}", summary_line(&trace));
    Ok(ExitCode::SUCCESS)
}

/// File-name-safe scheme+compressor label (`ec:hessian` → `ec-hessian`).
fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '-' })
        .collect()
}

fn cmd_compare(cli: &Cli) -> Result<ExitCode> {
    let config = experiment(cli)?;
    let problem = config.build_problem()?;
    let configs = config
        .schemes
        .iter()
        .map(|kind| config.run_config(&problem, kind.clone()))
        .collect::<Result<Vec<_>>>()?;
    let comparison = compare(&problem, &configs)?;
    let dir = out_dir(cli)?;
    let gamma = configs[0].scheme.gamma;

    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut summary = String::from("label,final_dist,final_gap,floor_dist,floor_gap\n");
    for entry in &comparison.entries {
        write(
            &dir.join(format!("trace-{}.csv", sanitize(&entry.trace.scheme_label))),
            &entry.trace.to_csv(),
        )?;
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            entry.label,
            opt(entry.final_dist),
            opt(entry.final_gap),
            opt(entry.floor_dist),
            opt(entry.floor_gap),
        ));
        println!("{}", summary_line(&entry.trace));
    }
    write(&dir.join("summary.csv"), &summary)?;
    write(&dir.join("resolved-config.cfg"), &config.echo(gamma))?;
    for i in 0..comparison.entries.len() {
        for j in 0..comparison.entries.len() {
            if i == j {
                continue;
            }
            if let Some(r) = comparison.floor_ratio(i, j) {
                println!(
                    "floor_dist[{}] / floor_dist[{}] = {r:.3e}",
                    comparison.entries[i].label, comparison.entries[j].label
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bounds(cli: &Cli) -> Result<ExitCode> {
    let config = experiment(cli)?;
    if config.thms.is_empty() {
        return Err(Error::Config(
            "no bounds requested: set `thms = thm1,thm5,...` in the config".into(),
        ));
    }
    let problem = config.build_problem()?;
    let rc = config.run_config(&problem, config.scheme.clone())?;
    let constants = problem.constants()?;

    let x_star = problem
        .x_star()
        .ok_or_else(|| Error::Config("bound curves need a problem with a known optimum".into()))?;
    let f_star = problem.f_star().expect("known optimum implies known optimal value");
    let x0 = rc.x0.clone().unwrap_or_else(|| nalgebra::DVector::zeros(problem.dim()));

    let mut inputs = BoundInputs::from_constants(&constants);
    inputs.gamma = rc.scheme.gamma;
    inputs.eps = eps_bound(&config.compressor, problem.dim(), config.v_inf_cap).ok_or_else(|| {
        Error::Config(format!(
            "no worst-case error bound for `{}` without `v_inf_cap`",
            config.compressor.label()
        ))
    })?;
    inputs.x0_dist = (&x0 - &x_star).norm();
    inputs.f0_gap = problem.value(Scope::Full, &x0)? - f_star;
    inputs.k = config.iters;
    if let OracleMode::Stochastic(_) = rc.oracle {
        let v = problem.estimate_variances(&rc.oracle, &[x0.clone(), x_star.clone()], 256)?;
        inputs.sigma_sq = v.sigma_sq;
        inputs.sigma_h_sq = v.sigma_h_sq;
    }
    if config.thms.contains(&TheoremId::Thm7b) {
        inputs.beta = config
            .beta
            .ok_or_else(|| Error::Config("thm7b needs `beta = B` in the config".into()))?;
    }

    // the iteration grid the run subcommand would record on
    let grid: Vec<usize> = (0..=config.iters)
        .filter(|k| k % config.metrics_every == 0 || *k == config.iters)
        .collect();

    let dir = out_dir(cli)?;
    for id in &config.thms {
        let curves = theorem_curves(*id, &inputs)?;
        let mut csv = String::from("k");
        for (name, _) in &curves {
            if *name == "bound" {
                csv.push_str(",bound,floor");
            } else {
                csv.push_str(&format!(",{name},{name}_floor"));
            }
        }
        csv.push('\n');
        for &k in &grid {
            csv.push_str(&k.to_string());
            for (_, curve) in &curves {
                csv.push_str(&format!(",{},{}", curve.values[k], curve.floor));
            }
            csv.push('\n');
        }
        write(&dir.join(format!("bounds-{}.csv", id.label())), &csv)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(cli: &Cli) -> Result<ExitCode> {
    let suite = match cli.positional.as_slice() {
        [] => "all",
        [name] => name.as_str(),
        more => {
            return Err(Error::Config(format!(
                "verify takes one suite name, got {more:?} (suites: {}, all)",
                SUITE_NAMES.join(", ")
            )))
        }
    };
    let reports = run_suite(suite)?;
    let mut all_json = String::new();
    for report in &reports {
        all_json.push_str(&report.to_json_lines());
    }
    print!("{all_json}");
    if cli.out != Path::new(".") {
        let dir = out_dir(cli)?;
        write(&dir.join("verify-report.jsonl"), &all_json)?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        eprintln!("{failed} suite(s) failed");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
