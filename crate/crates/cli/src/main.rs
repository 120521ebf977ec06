use clap::Parser;
use overlap_core::{Params, Sample};
use overlap_lab::config::parse_activation;
use overlap_lab::{execute, resolve_out_dir, Command, ConfigError, ExperimentConfig, OUT_ENV};
use std::path::PathBuf;
use std::process::ExitCode;

fn pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((p(a)?, p(b)?))
}

/// Gradient-flow overlap experiments on a one-neuron network.
#[derive(Parser, Debug)]
#[command(version, allow_negative_numbers = true)]
struct Cli {
    /// Experiment to run; defaults to the config's `command`.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (beats OVERLAP_LAB_OUT and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// exp, sigmoid, softplus, gaussian or power.
    #[arg(long)]
    activation: Option<String>,
    /// Exponent for `--activation power`.
    #[arg(long)]
    q: Option<f64>,
    /// Start point `w,a`.
    #[arg(long, value_parser = pair, allow_hyphen_values = true)]
    theta0: Option<(f64, f64)>,
    /// Sample `x,y`; repeatable.
    #[arg(long = "sample", value_parser = pair, allow_hyphen_values = true)]
    samples: Vec<(f64, f64)>,
    /// One-point input; repeatable.
    #[arg(long = "x")]
    xs: Vec<f64>,
    /// Recipe A target `w,a`.
    #[arg(long, value_parser = pair, allow_hyphen_values = true)]
    target: Option<(f64, f64)>,
    /// Window `lo,hi` for minima curves.
    #[arg(long, value_parser = pair, allow_hyphen_values = true)]
    w_range: Option<(f64, f64)>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    sep_min: Option<f64>,
    /// Criterion expansion point.
    #[arg(long)]
    w: Option<f64>,
    /// Criterion sample input.
    #[arg(long)]
    x0: Option<f64>,
    /// Recipe B step count.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random instances per suite experiment.
    #[arg(long)]
    count: Option<usize>,
}

fn build(cli: &Cli) -> Result<(Command, ExperimentConfig, PathBuf), ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(a) = &cli.activation {
        cfg.activation = parse_activation(a, cli.q)?;
    }
    if let Some((w, a)) = cli.theta0 {
        cfg.theta0 = Some(Params::scalar(w, a));
    }
    if !cli.samples.is_empty() {
        cfg.samples = cli.samples.iter().map(|&(x, y)| Sample::scalar(x, y)).collect();
    }
    if !cli.xs.is_empty() {
        cfg.xs = cli.xs.clone();
    }
    if let Some((w, a)) = cli.target {
        cfg.target = Some(Params::scalar(w, a));
    }
    cfg.w_range = cli.w_range.or(cfg.w_range);
    cfg.grid = cli.grid.unwrap_or(cfg.grid);
    cfg.tol = cli.tol.unwrap_or(cfg.tol);
    cfg.sep_min = cli.sep_min.unwrap_or(cfg.sep_min);
    cfg.w = cli.w.unwrap_or(cfg.w);
    cfg.x0 = cli.x0.unwrap_or(cfg.x0);
    cfg.steps = cli.steps.unwrap_or(cfg.steps);
    cfg.seed = cli.seed.unwrap_or(cfg.seed);
    cfg.count = cli.count.unwrap_or(cfg.count);
    let command = cli.command.or(cfg.command).ok_or(ConfigError::Missing("command"))?;
    let env = std::env::var(OUT_ENV).ok();
    let out = resolve_out_dir(cli.out.as_deref(), env.as_deref(), cfg.out_dir.as_deref());
    Ok((command, cfg, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, cfg, out) = match build(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(command, &cfg, &out) {
        Ok(summary) => {
            for c in &summary.checks {
                let value = c.value.map(|v| format!(" value={v:e}")).unwrap_or_default();
                println!("{} {}{value} margin={:e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.margin);
            }
            println!("{} -> {}", command.name(), out.join("summary.json").display());
            ExitCode::from(if summary.verdict { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
