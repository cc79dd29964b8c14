use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mimo_exposure::app::{run_single, run_sweep};
use mimo_exposure::compliance::traditional_boundary;
use mimo_exposure::config::{parse_percentiles, ConfigFile, Overrides};
use mimo_exposure::scenario::ScenarioKind;
use mimo_exposure::{Error, Result};

/// Statistical RF-exposure compliance distances for massive MIMO base stations.
#[derive(Debug, Parser)]
#[command(name = "mimo-exposure", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one campaign and write its artifacts.
    Run(RunArgs),
    /// Run every (scenario, K, D) cell and write the summary tables.
    Sweep(SweepArgs),
    /// Print the traditional compliance distance without simulating.
    Traditional(TraditionalArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration file, or a summary.json whose config echo to replay.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<ScenarioKind>,
    /// UEs per drop.
    #[arg(long)]
    k: Option<usize>,
    /// Drop duration, s.
    #[arg(long)]
    drop_duration: Option<f64>,
    #[arg(long)]
    duty: Option<f64>,
    #[arg(long)]
    windows: Option<usize>,
    /// Comma-separated list, e.g. 95,99.
    #[arg(long)]
    percentiles: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// azmin:azmax:azstep,elmin:elmax:elstep in degrees.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for window execution; 0 uses all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated scenarios, e.g. uma,umi.
    #[arg(long)]
    scenarios: Option<String>,
    /// Comma-separated UE counts.
    #[arg(long)]
    k_values: Option<String>,
    /// Comma-separated drop durations, s.
    #[arg(long)]
    drop_durations: Option<String>,
}

#[derive(Debug, Args)]
struct TraditionalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<ScenarioKind>,
    #[arg(long)]
    duty: Option<f64>,
}

fn load(path: &Option<PathBuf>) -> Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

fn overrides(a: &RunArgs) -> Result<Overrides> {
    Ok(Overrides {
        scenario: a.scenario,
        k: a.k,
        drop_duration: a.drop_duration,
        duty: a.duty,
        windows: a.windows,
        percentiles: a.percentiles.as_deref().map(parse_percentiles).transpose()?,
        seed: a.seed,
        grid: a.grid.clone(),
        out: a.out.clone(),
        threads: a.threads,
    })
}

fn csv_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Config {
                    key: key.to_string(),
                    reason: format!("cannot parse `{}`", v.trim()),
                })
        })
        .collect()
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run(a) => {
            let mut file = load(&a.config)?;
            overrides(&a)?.apply(&mut file);
            let cfg = file.resolve()?;
            let out = run_single(&cfg)?;
            for r in &out.summary.statistical {
                println!(
                    "{} p{}: r_CB = {:.2} m ({:.1}% of traditional {:.2} m), argmax az {} el {}",
                    out.summary.scenario,
                    r.percentile,
                    r.compliance_distance_m,
                    100.0 * r.ratio_to_traditional,
                    out.summary.traditional.compliance_distance_m,
                    r.argmax.azimuth_deg,
                    r.argmax.elevation_deg
                );
            }
            Ok(true)
        }
        Command::Sweep(a) => {
            let mut file = load(&a.run.config)?;
            overrides(&a.run)?.apply(&mut file);
            if let Some(s) = &a.scenarios {
                file.sweep.scenarios = Some(csv_list("sweep.scenarios", s)?);
            }
            if let Some(s) = &a.k_values {
                file.sweep.k = Some(csv_list("sweep.k", s)?);
            }
            if let Some(s) = &a.drop_durations {
                file.sweep.drop_durations = Some(csv_list("sweep.drop_durations", s)?);
            }
            let cfg = file.resolve()?;
            let report = run_sweep(&cfg)?;
            println!(
                "{} cells, {} failed; tables in {}",
                report.cells.len(),
                report.failures(),
                cfg.out_dir.display()
            );
            Ok(report.failures() == 0)
        }
        Command::Traditional(a) => {
            let mut file = load(&a.config)?;
            Overrides {
                scenario: a.scenario,
                duty: a.duty,
                ..Default::default()
            }
            .apply(&mut file);
            let cfg = file.resolve()?;
            let sim = &cfg.sim;
            let t = traditional_boundary(&sim.scenario, &sim.array, sim.duty_cycle)?;
            println!("{:.2} m", t.compliance_distance);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{first}");
            return ExitCode::from(1);
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            let msg = e.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
            eprintln!("error: {msg}");
            if e.is_config() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
