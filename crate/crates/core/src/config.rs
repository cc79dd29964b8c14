//! Run configuration: TOML file sections, command-line overrides and the
//! fully resolved form echoed into `summary.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::antenna::ArrayConfig;
use crate::beamforming::{AngularGrid, PowerIterationOptions};
use crate::engine::SimConfig;
use crate::error::{Error, Result};
use crate::scenario::{dbm_to_watts, default_scenario, ChannelStats, ScenarioKind, ScenarioParams};

/// `[scenario]`: the scenario name plus optional overrides of its constants.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: Option<ScenarioKind>,
    pub carrier_freq: Option<f64>,
    pub isd: Option<f64>,
    pub bs_height: Option<f64>,
    /// Transmit power in W. Takes precedence over `p_tx_dbm`.
    pub p_tx: Option<f64>,
    pub p_tx_dbm: Option<f64>,
    pub e_max: Option<f64>,
    pub min_2d_distance: Option<f64>,
    pub indoor_fraction: Option<f64>,
    pub floor_height: Option<f64>,
    pub floors_min: Option<u32>,
    pub floors_max: Option<u32>,
    pub ue_outdoor_height: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub asd_los: Option<f64>,
    pub asd_nlos: Option<f64>,
    pub zsd_los: Option<f64>,
    pub zsd_nlos: Option<f64>,
    pub k_factor_mean: Option<f64>,
    pub k_factor_std: Option<f64>,
    pub n_clusters_los: Option<usize>,
    pub n_clusters_nlos: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub spacing: Option<f64>,
    pub element_peak_gain: Option<f64>,
    pub hpbw: Option<f64>,
    pub backlobe_attenuation: Option<f64>,
    pub mechanical_downtilt: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub k: Option<usize>,
    pub drop_duration: Option<f64>,
    pub window: Option<f64>,
    pub duty: Option<f64>,
    pub windows: Option<usize>,
    pub percentiles: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub grid: Option<String>,
    pub threads: Option<usize>,
    pub eigen_tol: Option<f64>,
    pub eigen_max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub artifacts: Option<Vec<Artifact>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub scenarios: Option<Vec<ScenarioKind>>,
    pub k: Option<Vec<usize>>,
    pub drop_durations: Option<Vec<f64>>,
}

/// On-disk layout of a configuration file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub array: ArraySection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    GainMaps,
    Cdfs,
    Compliance,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub threads: usize,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub artifacts: Vec<Artifact>,
    pub sweep_scenarios: Vec<ScenarioKind>,
    pub sweep_k: Vec<usize>,
    pub sweep_drop_durations: Vec<f64>,
    /// Scenario overrides from the file, replayed on every sweep cell that
    /// uses the same scenario.
    pub scenario_overrides: ScenarioSection,
    pub channel_overrides: ChannelSection,
}

impl ConfigFile {
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| toml_error(text, &e))
    }

    /// Reads a TOML file, or a JSON file holding either a config or a
    /// `summary.json` with an embedded `config` object.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let mut value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
            serde_json::from_value(value).map_err(|e| Error::config(json_key(&e), one_line(&e.to_string())))
        } else {
            Self::parse_toml(&text)
        }
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let kind = self.scenario.name.unwrap_or(ScenarioKind::Uma);
        let scenario = scenario_with_overrides(kind, &self.scenario, &self.channel);
        let a = &self.array;
        let d = ArrayConfig::default();
        let array = ArrayConfig {
            rows: a.rows.unwrap_or(d.rows),
            cols: a.cols.unwrap_or(d.cols),
            spacing: a.spacing.unwrap_or(d.spacing),
            element_peak_gain: a.element_peak_gain.unwrap_or(d.element_peak_gain),
            hpbw: a.hpbw.unwrap_or(d.hpbw),
            backlobe_attenuation: a.backlobe_attenuation.unwrap_or(d.backlobe_attenuation),
            mechanical_downtilt: a.mechanical_downtilt.unwrap_or(d.mechanical_downtilt),
        };
        let s = &self.simulation;
        let base = SimConfig::new(scenario.clone());
        let grid = match &s.grid {
            Some(g) => AngularGrid::parse(g)?,
            None => AngularGrid::default(),
        };
        let eigen = PowerIterationOptions {
            tol: s.eigen_tol.unwrap_or(base.eigen.tol),
            max_iter: s.eigen_max_iter.unwrap_or(base.eigen.max_iter),
        };
        let sim = SimConfig {
            scenario,
            array,
            k_ues: s.k.unwrap_or(base.k_ues),
            drop_duration: s.drop_duration.unwrap_or(base.drop_duration),
            window: s.window.unwrap_or(base.window),
            duty_cycle: s.duty.unwrap_or(base.duty_cycle),
            n_windows: s.windows.unwrap_or(base.n_windows),
            grid,
            percentiles: s.percentiles.clone().unwrap_or(base.percentiles),
            master_seed: s.seed.unwrap_or(base.master_seed),
            eigen,
        };
        let o = &self.output;
        let w = &self.sweep;
        let cfg = RunConfig {
            sim,
            threads: s.threads.unwrap_or(0),
            out_dir: o.dir.clone().unwrap_or_else(|| PathBuf::from("results")),
            formats: o.formats.clone().unwrap_or_else(|| vec![Format::Csv, Format::Json]),
            artifacts: o
                .artifacts
                .clone()
                .unwrap_or_else(|| vec![Artifact::GainMaps, Artifact::Cdfs, Artifact::Compliance]),
            sweep_scenarios: w.scenarios.clone().unwrap_or_else(|| vec![ScenarioKind::Uma, ScenarioKind::Umi]),
            sweep_k: w.k.clone().unwrap_or_else(|| vec![1, 2, 5]),
            sweep_drop_durations: w.drop_durations.clone().unwrap_or_else(|| vec![1.0, 10.0, 60.0]),
            scenario_overrides: self.scenario.clone(),
            channel_overrides: self.channel.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn scenario_with_overrides(kind: ScenarioKind, o: &ScenarioSection, c: &ChannelSection) -> ScenarioParams {
    let mut p = default_scenario(kind);
    // overrides only apply to the scenario they were written for
    if o.name.unwrap_or(ScenarioKind::Uma) != kind {
        return p;
    }
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src {
                $dst = v;
            }
        };
    }
    set!(p.carrier_freq, o.carrier_freq);
    set!(p.isd, o.isd);
    set!(p.bs_height, o.bs_height);
    if let Some(dbm) = o.p_tx_dbm {
        p.p_tx = dbm_to_watts(dbm);
    }
    set!(p.p_tx, o.p_tx);
    set!(p.e_max, o.e_max);
    set!(p.min_2d_distance, o.min_2d_distance);
    set!(p.indoor_fraction, o.indoor_fraction);
    set!(p.floor_height, o.floor_height);
    set!(p.floors_min, o.floors_min);
    set!(p.floors_max, o.floors_max);
    set!(p.ue_outdoor_height, o.ue_outdoor_height);
    let ch: &mut ChannelStats = &mut p.channel;
    set!(ch.asd_los, c.asd_los);
    set!(ch.asd_nlos, c.asd_nlos);
    set!(ch.zsd_los, c.zsd_los);
    set!(ch.zsd_nlos, c.zsd_nlos);
    set!(ch.k_factor_mean, c.k_factor_mean);
    set!(ch.k_factor_std, c.k_factor_std);
    set!(ch.n_clusters_los, c.n_clusters_los);
    set!(ch.n_clusters_nlos, c.n_clusters_nlos);
    p
}

/// Command-line overrides; `None` keeps the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<ScenarioKind>,
    pub k: Option<usize>,
    pub drop_duration: Option<f64>,
    pub duty: Option<f64>,
    pub windows: Option<usize>,
    pub percentiles: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub grid: Option<String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, file: &mut ConfigFile) {
        if let Some(s) = self.scenario {
            if file.scenario.name.is_some_and(|n| n != s) {
                // overrides written for another scenario no longer apply
                file.scenario = ScenarioSection::default();
                file.channel = ChannelSection::default();
            }
            file.scenario.name = Some(s);
        }
        let sim = &mut file.simulation;
        if self.k.is_some() {
            sim.k = self.k;
        }
        if self.drop_duration.is_some() {
            sim.drop_duration = self.drop_duration;
        }
        if self.duty.is_some() {
            sim.duty = self.duty;
        }
        if self.windows.is_some() {
            sim.windows = self.windows;
        }
        if self.percentiles.is_some() {
            sim.percentiles = self.percentiles.clone();
        }
        if self.seed.is_some() {
            sim.seed = self.seed;
        }
        if self.grid.is_some() {
            sim.grid = self.grid.clone();
        }
        if self.threads.is_some() {
            sim.threads = self.threads;
        }
        if self.out.is_some() {
            file.output.dir = self.out.clone();
        }
    }
}

/// Parses a comma-separated percentile list such as `95,99`.
pub fn parse_percentiles(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::config("percentiles", format!("`{p}` is not a number")))
        })
        .collect()
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.formats.is_empty() {
            return Err(Error::config("output.formats", "at least one output format is required"));
        }
        if self.artifacts.is_empty() && !self.formats.contains(&Format::Json) {
            return Err(Error::config("output.artifacts", "no output artifact requested"));
        }
        if self.sweep_scenarios.is_empty() || self.sweep_k.is_empty() || self.sweep_drop_durations.is_empty() {
            return Err(Error::config("sweep", "sweep lists must be nonempty"));
        }
        Ok(())
    }

    pub fn wants(&self, artifact: Artifact) -> bool {
        self.formats.contains(&Format::Csv) && self.artifacts.contains(&artifact)
    }

    /// Configuration of one sweep cell.
    pub fn cell(&self, scenario: ScenarioKind, k: usize, drop_duration: f64) -> Result<RunConfig> {
        let mut c = self.clone();
        c.sim.scenario = scenario_with_overrides(scenario, &self.scenario_overrides, &self.channel_overrides);
        c.sim.k_ues = k;
        c.sim.drop_duration = drop_duration;
        c.scenario_overrides.name = Some(scenario);
        if self.scenario_overrides.name.unwrap_or(ScenarioKind::Uma) != scenario {
            c.scenario_overrides = ScenarioSection {
                name: Some(scenario),
                ..Default::default()
            };
            c.channel_overrides = ChannelSection::default();
        }
        c.validate()?;
        Ok(c)
    }

    /// Complete file form of this configuration; loading it back yields an
    /// identical [`RunConfig`].
    pub fn echo(&self) -> ConfigFile {
        let p = &self.sim.scenario;
        let ch = &p.channel;
        let a = &self.sim.array;
        let s = &self.sim;
        let g = &s.grid;
        ConfigFile {
            scenario: ScenarioSection {
                name: Some(p.name),
                carrier_freq: Some(p.carrier_freq),
                isd: Some(p.isd),
                bs_height: Some(p.bs_height),
                p_tx: Some(p.p_tx),
                p_tx_dbm: None,
                e_max: Some(p.e_max),
                min_2d_distance: Some(p.min_2d_distance),
                indoor_fraction: Some(p.indoor_fraction),
                floor_height: Some(p.floor_height),
                floors_min: Some(p.floors_min),
                floors_max: Some(p.floors_max),
                ue_outdoor_height: Some(p.ue_outdoor_height),
            },
            channel: ChannelSection {
                asd_los: Some(ch.asd_los),
                asd_nlos: Some(ch.asd_nlos),
                zsd_los: Some(ch.zsd_los),
                zsd_nlos: Some(ch.zsd_nlos),
                k_factor_mean: Some(ch.k_factor_mean),
                k_factor_std: Some(ch.k_factor_std),
                n_clusters_los: Some(ch.n_clusters_los),
                n_clusters_nlos: Some(ch.n_clusters_nlos),
            },
            array: ArraySection {
                rows: Some(a.rows),
                cols: Some(a.cols),
                spacing: Some(a.spacing),
                element_peak_gain: Some(a.element_peak_gain),
                hpbw: Some(a.hpbw),
                backlobe_attenuation: Some(a.backlobe_attenuation),
                mechanical_downtilt: Some(a.mechanical_downtilt),
            },
            simulation: SimulationSection {
                k: Some(s.k_ues),
                drop_duration: Some(s.drop_duration),
                window: Some(s.window),
                duty: Some(s.duty_cycle),
                windows: Some(s.n_windows),
                percentiles: Some(s.percentiles.clone()),
                seed: Some(s.master_seed),
                grid: Some(format!(
                    "{}:{}:{},{}:{}:{}",
                    g.az_min, g.az_max, g.az_step, g.el_min, g.el_max, g.el_step
                )),
                threads: Some(self.threads),
                eigen_tol: Some(s.eigen.tol),
                eigen_max_iter: Some(s.eigen.max_iter),
            },
            output: OutputSection {
                dir: Some(self.out_dir.clone()),
                formats: Some(self.formats.clone()),
                artifacts: Some(self.artifacts.clone()),
            },
            sweep: SweepSection {
                scenarios: Some(self.sweep_scenarios.clone()),
                k: Some(self.sweep_k.clone()),
                drop_durations: Some(self.sweep_drop_durations.clone()),
            },
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn json_key(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    msg.split('`').nth(1).unwrap_or("config").to_string()
}

/// Turns a TOML error into a config error naming `section.key`.
fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let message = one_line(e.message());
    let mut key = String::from("config");
    if let Some(span) = e.span() {
        let start = span.start.min(text.len());
        let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
        let line_end = text[start..].find('\n').map_or(text.len(), |i| start + i);
        let line = text[line_start..line_end].trim();
        let section = text[..line_start]
            .lines()
            .rev()
            .map(str::trim)
            .find(|l| l.starts_with('[') && l.ends_with(']'))
            .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
        let local = if line.starts_with('[') {
            Some(line.trim_matches(|c| c == '[' || c == ']').trim().to_string())
        } else {
            line.split_once('=').map(|(k, _)| k.trim().to_string())
        };
        key = match (section, local) {
            (Some(s), Some(k)) if !line.starts_with('[') => format!("{s}.{k}"),
            (_, Some(k)) => k,
            (Some(s), None) => s,
            (None, None) => key,
        };
    }
    if let Some(unknown) = message.strip_prefix("unknown field `").and_then(|m| m.split('`').next()) {
        if !key.ends_with(unknown) {
            key = format!("{key}.{unknown}");
        }
    }
    Error::config(key, message)
}
