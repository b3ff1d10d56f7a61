use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use playground_core::mjcf::{dump_model, load_model_file};
use playground_core::scenario::{run_scenario, write_metrics, MetricsFormat, ScenarioConfig, SCENARIOS};

#[derive(Parser)]
#[command(name = "playground", version, about = "Run simulation scenarios and inspect MJCF models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario. Exit code 0 when its pass conditions hold, 1 when
    /// they do not, 2 on configuration or I/O errors.
    Run(RunArgs),
    /// Print the compiled form of an MJCF file.
    Inspect { mjcf: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// stack, incline, drop10ms, cradle, shake, scalingN or batchscale
    scenario: String,
    /// Use this MJCF instead of the built-in scene.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Timestep in seconds.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    steps: Option<u64>,
    /// Number of environments.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Metrics file; `-` writes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or jsonl; defaults to jsonl for `.jsonl` paths, else csv.
    #[arg(long)]
    format: Option<MetricsFormat>,
    /// Scenario parameter, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_kv)]
    params: Vec<(String, String)>,
    /// Add a wall-clock steps_per_sec column to the metrics.
    #[arg(long)]
    timing: bool,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(format!("expected KEY=VALUE, got {s:?}")),
    }
}

fn run(a: RunArgs) -> Result<bool, String> {
    if !SCENARIOS.contains(&a.scenario.as_str()) {
        return Err(format!(
            "unknown scenario {:?}; expected one of {}",
            a.scenario,
            SCENARIOS.join(", ")
        ));
    }
    let cfg = ScenarioConfig {
        scenario: a.scenario,
        model: a.model,
        h: a.h,
        steps: a.steps,
        batch: a.batch,
        seed: a.seed,
        workers: a.workers,
        params: a.params.into_iter().collect::<BTreeMap<_, _>>(),
        timing: a.timing,
    };
    let out = run_scenario(&cfg).map_err(|e| e.to_string())?;
    if let Some(path) = &a.out {
        let format = a.format.unwrap_or(if path.extension().is_some_and(|e| e == "jsonl") {
            MetricsFormat::Jsonl
        } else {
            MetricsFormat::Csv
        });
        let io = |e: std::io::Error| format!("{}: {e}", path.display());
        if path.as_os_str() == "-" {
            write_metrics(&out.records, format, cfg.timing, std::io::stdout().lock()).map_err(io)?;
        } else {
            let mut w = BufWriter::new(File::create(path).map_err(io)?);
            write_metrics(&out.records, format, cfg.timing, &mut w).map_err(io)?;
            w.flush().map_err(io)?;
        }
    }
    for (k, v) in &out.summary {
        eprintln!("{k} = {v:e}");
    }
    for (k, v) in &out.throughput {
        eprintln!("{k}: {v:.1}");
    }
    eprintln!("{} {}", cfg.scenario, if out.pass { "PASS" } else { "FAIL" });
    Ok(out.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(a) => run(a),
        Cmd::Inspect { mjcf } => load_model_file(&mjcf)
            .map(|m| {
                print!("{}", dump_model(&m));
                true
            })
            .map_err(|e| e.to_string()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
