//! Campaign execution and artifact writing behind the command-line tool.
//!
//! Every artifact is a pure function of the resolved configuration, so
//! repeated runs write byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::antenna::{linear_to_db, max_gain};
use crate::beamforming::GainMap;
use crate::compliance::{
    boundary_ratio, far_field_distance, statistical_boundary, traditional_boundary_on, ComplianceResult,
};
use crate::config::{Artifact, ConfigFile, Format, RunConfig};
use crate::engine::{percentile_gain_map, percentile_of, run_campaign_with_threads, WindowSampleTensor};
use crate::error::{Error, Result};
use crate::scenario::{Direction, ScenarioKind};

/// Rounds to `decimals` places, mapping `-0` to `0`.
pub fn round_to(x: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (x * s).round() / s + 0.0
}

fn fixed(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.*}", decimals, round_to(x, decimals as i32));
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Label used in file and column names, e.g. `95` or `99.9`.
pub fn percentile_label(p: f64) -> String {
    format!("{p}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionOut {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl From<Direction> for DirectionOut {
    fn from(d: Direction) -> Self {
        DirectionOut {
            azimuth_deg: d.azimuth + 0.0,
            elevation_deg: d.elevation + 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraditionalOut {
    pub compliance_distance_m: f64,
    pub gain_dbi: f64,
    pub below_far_field: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercentileOut {
    pub percentile: f64,
    pub compliance_distance_m: f64,
    pub ratio_to_traditional: f64,
    pub argmax: DirectionOut,
    /// Peak of the percentile gain map, at `argmax`.
    pub gain_dbi: f64,
    /// Percentile of `G_A / G_max` over windows, at the CDF direction.
    pub normalized_power: f64,
    pub below_far_field: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub k: usize,
    pub drop_duration_s: f64,
    pub duty_cycle: f64,
    pub windows: usize,
    pub max_gain_dbi: f64,
    pub far_field_distance_m: f64,
    pub traditional: TraditionalOut,
    pub statistical: Vec<PercentileOut>,
    /// Direction of the CDF artifacts: the argmax of the highest percentile.
    pub cdf_direction: DirectionOut,
    pub median_gain_at_cdf_direction_dbi: f64,
    pub config: ConfigFile,
}

/// Everything a run computed, before rounding for output.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tensor: WindowSampleTensor,
    pub traditional: ComplianceResult,
    pub percentile_maps: Vec<GainMap>,
    pub statistical: Vec<ComplianceResult>,
    pub cdf_direction: Direction,
    pub summary: Summary,
}

/// Config echo without the output directory, thread count and sweep
/// lists, none of which influence a single run's artifacts.
pub fn reproducible_echo(cfg: &RunConfig) -> ConfigFile {
    let mut echo = cfg.echo();
    echo.output.dir = None;
    echo.simulation.threads = None;
    echo.sweep = Default::default();
    echo
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::config("output.dir", format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".write-test");
    fs::write(&probe, b"")
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| Error::config("output.dir", format!("{} is not writable: {e}", dir.display())))
}

/// Runs one campaign and computes all statistics without writing files.
pub fn compute(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let sim = &cfg.sim;
    let tensor = run_campaign_with_threads(sim, cfg.threads)?;
    let traditional = traditional_boundary_on(&sim.scenario, &sim.array, sim.duty_cycle, &sim.grid)?;
    let g_max = max_gain(&sim.array);

    let mut percentile_maps = Vec::new();
    let mut statistical = Vec::new();
    for &p in &sim.percentiles {
        percentile_maps.push(percentile_gain_map(&tensor, p)?);
        statistical.push(statistical_boundary(&tensor, p, &sim.scenario, &sim.array)?);
    }
    let highest = (0..sim.percentiles.len())
        .max_by(|&a, &b| sim.percentiles[a].total_cmp(&sim.percentiles[b]))
        .ok_or_else(|| Error::config("percentiles", "need at least one percentile"))?;
    let cdf_direction = statistical[highest].argmax;
    let at_dir = tensor.samples_at(cdf_direction)?;

    let mut rows = Vec::new();
    for ((&p, map), stat) in sim.percentiles.iter().zip(&percentile_maps).zip(&statistical) {
        let peak = map.get(stat.argmax).unwrap_or(0.0);
        let at_cdf = percentile_of(&mut at_dir.clone(), p)?;
        rows.push(PercentileOut {
            percentile: p,
            compliance_distance_m: round_to(stat.compliance_distance, 2),
            ratio_to_traditional: round_to(boundary_ratio(stat, &traditional)?, 4),
            argmax: stat.argmax.into(),
            gain_dbi: round_to(linear_to_db(peak), 2),
            normalized_power: round_to(at_cdf / g_max, 4),
            below_far_field: stat.below_far_field,
        });
    }
    let median = percentile_of(&mut at_dir.clone(), 50.0)?;

    let summary = Summary {
        scenario: sim.scenario.name,
        seed: sim.master_seed,
        k: sim.k_ues,
        drop_duration_s: sim.drop_duration,
        duty_cycle: sim.duty_cycle,
        windows: sim.n_windows,
        max_gain_dbi: round_to(linear_to_db(g_max), 2),
        far_field_distance_m: round_to(far_field_distance(&sim.array, &sim.scenario), 2),
        traditional: TraditionalOut {
            compliance_distance_m: round_to(traditional.compliance_distance, 2),
            gain_dbi: round_to(linear_to_db(sim.duty_cycle * g_max), 2),
            below_far_field: traditional.below_far_field,
        },
        statistical: rows,
        cdf_direction: cdf_direction.into(),
        median_gain_at_cdf_direction_dbi: round_to(linear_to_db(median), 2),
        config: reproducible_echo(cfg),
    };
    Ok(RunOutput {
        tensor,
        traditional,
        percentile_maps,
        statistical,
        cdf_direction,
        summary,
    })
}

/// Runs one campaign and writes its artifacts into `cfg.out_dir`.
pub fn run_single(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    prepare_dir(&cfg.out_dir)?;
    let out = compute(cfg)?;
    write_artifacts(cfg, &out)?;
    Ok(out)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

pub fn write_artifacts(cfg: &RunConfig, out: &RunOutput) -> Result<()> {
    let dir = &cfg.out_dir;
    if cfg.formats.contains(&Format::Json) {
        let mut json = serde_json::to_string_pretty(&out.summary)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        json.push('\n');
        write_file(dir, "summary.json", &json)?;
    }
    if cfg.wants(Artifact::GainMaps) {
        for (p, map) in cfg.sim.percentiles.iter().zip(&out.percentile_maps) {
            write_file(dir, &format!("gain_map_p{}.csv", percentile_label(*p)), &gain_map_csv(map))?;
        }
    }
    if cfg.wants(Artifact::Cdfs) {
        let samples = out.tensor.samples_at(out.cdf_direction)?;
        let g_max = max_gain(&cfg.sim.array);
        write_file(dir, "cdf_gain.csv", &cdf_csv(&samples, CdfMetric::Gain))?;
        let power: Vec<f64> = samples.iter().map(|g| g / g_max).collect();
        write_file(dir, "cdf_power.csv", &cdf_csv(&power, CdfMetric::NormalizedPower))?;
    }
    if cfg.wants(Artifact::Compliance) {
        write_file(dir, "compliance.csv", &compliance_csv(&cfg.sim.percentiles, &out.statistical, &out.traditional))?;
    }
    Ok(())
}

pub fn gain_map_csv(map: &GainMap) -> String {
    let mut s = String::from("azimuth_deg,elevation_deg,gain_linear,gain_dbi\n");
    for (dir, g) in map.grid.directions().zip(&map.values) {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fixed(dir.azimuth, 2),
            fixed(dir.elevation, 2),
            fixed(*g, 4),
            fixed(linear_to_db(*g), 2)
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfMetric {
    Gain,
    NormalizedPower,
}

/// Sorted samples with the empirical CDF `i / n`.
pub fn cdf_csv(samples: &[f64], metric: CdfMetric) -> String {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut s = String::from(match metric {
        CdfMetric::Gain => "gain_linear,gain_dbi,cdf\n",
        CdfMetric::NormalizedPower => "normalized_power,cdf\n",
    });
    for (i, v) in sorted.iter().enumerate() {
        let cdf = fixed((i + 1) as f64 / n, 4);
        let _ = match metric {
            CdfMetric::Gain => writeln!(s, "{},{},{}", fixed(*v, 4), fixed(linear_to_db(*v), 2), cdf),
            CdfMetric::NormalizedPower => writeln!(s, "{},{}", fixed(*v, 4), cdf),
        };
    }
    s
}

pub fn compliance_csv(percentiles: &[f64], stats: &[ComplianceResult], trad: &ComplianceResult) -> String {
    let mut s = String::from("azimuth_deg,elevation_deg");
    for p in percentiles {
        let _ = write!(s, ",r_p{}_m", percentile_label(*p));
    }
    s.push_str(",r_traditional_m\n");
    for (i, dir) in trad.distance_map.grid.directions().enumerate() {
        let _ = write!(s, "{},{}", fixed(dir.azimuth, 2), fixed(dir.elevation, 2));
        for st in stats {
            let _ = write!(s, ",{}", fixed(st.distance_map.values[i], 2));
        }
        let _ = writeln!(s, ",{}", fixed(trad.distance_map.values[i], 2));
    }
    s
}

/// Outcome of one sweep cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellOutcome {
    pub scenario: ScenarioKind,
    pub k: usize,
    pub drop_duration_s: f64,
    pub directory: String,
    /// Statistical distance per percentile, m; empty on failure.
    pub distances_m: Vec<f64>,
    pub traditional_m: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub percentiles: Vec<f64>,
    pub cells: Vec<CellOutcome>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

pub fn cell_dir_name(scenario: ScenarioKind, k: usize, drop_duration: f64) -> String {
    format!("{scenario}_k{k}_d{drop_duration}")
}

/// Runs every (scenario, K, D) cell in table order and writes
/// `table_I.csv` and `table_II.csv`. A failed cell is recorded and the
/// remaining cells still run.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepReport> {
    cfg.validate()?;
    prepare_dir(&cfg.out_dir)?;
    let mut cells = Vec::new();
    for &scenario in &cfg.sweep_scenarios {
        for &k in &cfg.sweep_k {
            for &d in &cfg.sweep_drop_durations {
                cells.push(run_cell(cfg, scenario, k, d));
            }
        }
    }
    let report = SweepReport {
        percentiles: cfg.sim.percentiles.clone(),
        cells,
    };
    write_file(&cfg.out_dir, "table_I.csv", &table_i_csv(&report))?;
    write_file(&cfg.out_dir, "table_II.csv", &table_ii_csv(&report))?;
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    json.push('\n');
    write_file(&cfg.out_dir, "sweep.json", &json)?;
    Ok(report)
}

fn run_cell(cfg: &RunConfig, scenario: ScenarioKind, k: usize, d: f64) -> CellOutcome {
    let name = cell_dir_name(scenario, k, d);
    log::info!("sweep cell {name}");
    let mut outcome = CellOutcome {
        scenario,
        k,
        drop_duration_s: d,
        directory: format!("cells/{name}"),
        distances_m: Vec::new(),
        traditional_m: f64::NAN,
        error: None,
    };
    let result = cfg.cell(scenario, k, d).and_then(|mut cell| {
        cell.out_dir = cfg.out_dir.join(PathBuf::from("cells").join(&name));
        run_single(&cell)
    });
    match result {
        Ok(out) => {
            outcome.distances_m = out.summary.statistical.iter().map(|r| r.compliance_distance_m).collect();
            outcome.traditional_m = out.summary.traditional.compliance_distance_m;
        }
        Err(e) => {
            log::error!("sweep cell {name} failed: {e}");
            outcome.error = Some(e.to_string());
        }
    }
    outcome
}

fn table_header(report: &SweepReport, prefix: &str, suffix: &str) -> String {
    let mut s = String::from("scenario,k,drop_duration_s");
    if prefix == "pct" {
        s.push_str(",r_traditional_m");
    }
    for p in &report.percentiles {
        let _ = write!(s, ",{prefix}_p{}{suffix}", percentile_label(*p));
    }
    s.push('\n');
    s
}

/// Absolute statistical distances, m. Failed cells read `NA`.
pub fn table_i_csv(report: &SweepReport) -> String {
    let mut s = table_header(report, "r", "_m");
    for c in &report.cells {
        let _ = write!(s, "{},{},{}", c.scenario, c.k, c.drop_duration_s);
        for i in 0..report.percentiles.len() {
            match c.distances_m.get(i) {
                Some(r) => {
                    let _ = write!(s, ",{}", fixed(*r, 2));
                }
                None => s.push_str(",NA"),
            }
        }
        s.push('\n');
    }
    s
}

/// Statistical distances as percent of the traditional distance at the
/// same duty cycle.
pub fn table_ii_csv(report: &SweepReport) -> String {
    let mut s = table_header(report, "pct", "");
    for c in &report.cells {
        let _ = write!(s, "{},{},{}", c.scenario, c.k, c.drop_duration_s);
        if c.error.is_some() {
            s.push_str(",NA");
        } else {
            let _ = write!(s, ",{}", fixed(c.traditional_m, 2));
        }
        for i in 0..report.percentiles.len() {
            match c.distances_m.get(i) {
                Some(r) if c.traditional_m > 0.0 => {
                    let _ = write!(s, ",{}", fixed(100.0 * r / c.traditional_m, 2));
                }
                _ => s.push_str(",NA"),
            }
        }
        s.push('\n');
    }
    s
}
