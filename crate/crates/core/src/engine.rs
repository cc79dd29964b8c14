//! Monte Carlo campaign: 6-minute windows built from independent UE drops.
//!
//! Every window owns a ChaCha stream selected by `(master_seed,
//! window_index)`, so windows can run in any order or on any number of
//! threads and still assemble into the same tensor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna::{ArrayConfig, Beamformer};
use crate::beamforming::{
    argmax_with_ties, dominant_eigenvector, AngularGrid, GainMap, GridEvaluator, PatternAccumulator,
    PowerIterationOptions,
};
use crate::channel::{covariance_from_clusters, generate_clusters, SpatialCovariance};
use crate::error::{Error, Result};
use crate::scenario::{drop_ue, Direction, ScenarioParams};

/// Budget multiplier for the single retry after a non-converged eigen-solve.
const RETRY_BUDGET: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: ScenarioParams,
    pub array: ArrayConfig,
    /// UEs served simultaneously in every drop.
    pub k_ues: usize,
    /// Seconds.
    pub drop_duration: f64,
    /// Averaging window, seconds.
    pub window: f64,
    pub duty_cycle: f64,
    pub n_windows: usize,
    pub grid: AngularGrid,
    pub percentiles: Vec<f64>,
    pub master_seed: u64,
    pub eigen: PowerIterationOptions,
}

impl SimConfig {
    pub fn new(scenario: ScenarioParams) -> Self {
        SimConfig {
            scenario,
            array: ArrayConfig::default(),
            k_ues: 1,
            drop_duration: 60.0,
            window: 360.0,
            duty_cycle: 1.0,
            n_windows: 1000,
            grid: AngularGrid::default(),
            percentiles: vec![95.0, 99.0],
            master_seed: 1,
            eigen: PowerIterationOptions::default(),
        }
    }

    pub fn drops_per_window(&self) -> usize {
        (self.window / self.drop_duration).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.array.validate()?;
        self.grid.validate()?;
        if self.k_ues == 0 {
            return Err(Error::config("k", "need at least one UE per drop"));
        }
        if !(self.drop_duration.is_finite() && self.drop_duration > 0.0) {
            return Err(Error::config("drop_duration", "must be positive"));
        }
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(Error::config("window", "must be positive"));
        }
        let ratio = self.window / self.drop_duration;
        if ratio < 0.5 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::config(
                "drop_duration",
                format!("window {} s is not a multiple of the drop duration {} s", self.window, self.drop_duration),
            ));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(Error::config("duty", format!("must lie in (0, 1], got {}", self.duty_cycle)));
        }
        if self.n_windows == 0 {
            return Err(Error::config("windows", "need at least one window"));
        }
        if self.percentiles.is_empty() {
            return Err(Error::config("percentiles", "need at least one percentile"));
        }
        for &p in &self.percentiles {
            if !(p > 0.0 && p < 100.0) {
                return Err(Error::config("percentiles", format!("{p} is outside (0, 100)")));
            }
        }
        if self.percentiles.iter().any(|p| *p >= 99.0) && self.n_windows < 100 {
            return Err(Error::config(
                "windows",
                format!("{} windows are too few for percentiles >= 99 (need >= 100)", self.n_windows),
            ));
        }
        if self.eigen.tol.is_nan() || self.eigen.tol <= 0.0 || self.eigen.max_iter == 0 {
            return Err(Error::config("eigen", "tolerance and iteration budget must be positive"));
        }
        Ok(())
    }
}

/// Source of per-UE spatial covariances for one drop.
pub trait ChannelSource: Sync {
    fn covariance(&self, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<SpatialCovariance>;
}

/// UE dropping plus the clustered channel model of the scenario.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClusteredChannel;

impl ChannelSource for ClusteredChannel {
    fn covariance(&self, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<SpatialCovariance> {
        let ue = drop_ue(&cfg.scenario, rng)?;
        let clusters = generate_clusters(&cfg.scenario.channel, &ue, rng);
        Ok(covariance_from_clusters(&cfg.array, &clusters))
    }
}

pub fn window_rng(master_seed: u64, window_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(window_index as u64);
    rng
}

fn eigen_beamformer(cov: &SpatialCovariance, opts: &PowerIterationOptions) -> Result<Beamformer> {
    match dominant_eigenvector(cov, opts) {
        Ok(e) => Ok(e.beamformer),
        Err(Error::NoConvergence { .. }) => {
            let wider = PowerIterationOptions {
                max_iter: opts.max_iter.saturating_mul(RETRY_BUDGET),
                ..*opts
            };
            log::debug!("eigen-solve retry with {} iterations", wider.max_iter);
            dominant_eigenvector(cov, &wider).map(|e| e.beamformer)
        }
        Err(e) => Err(e),
    }
}

/// Reusable per-campaign state: the validated config and the grid geometry.
pub struct WindowSimulator<'a, S: ChannelSource = ClusteredChannel> {
    cfg: &'a SimConfig,
    evaluator: GridEvaluator,
    source: S,
}

impl<'a> WindowSimulator<'a, ClusteredChannel> {
    pub fn new(cfg: &'a SimConfig) -> Result<Self> {
        Self::with_source(cfg, ClusteredChannel)
    }
}

impl<'a, S: ChannelSource> WindowSimulator<'a, S> {
    pub fn with_source(cfg: &'a SimConfig, source: S) -> Result<Self> {
        cfg.validate()?;
        Ok(WindowSimulator {
            cfg,
            evaluator: GridEvaluator::new(&cfg.array, &cfg.grid),
            source,
        })
    }

    pub fn config(&self) -> &SimConfig {
        self.cfg
    }

    /// Time-averaged gain map of one window.
    pub fn window(&self, window_index: usize) -> Result<GainMap> {
        self.run(window_index, None)
    }

    /// Like [`Self::window`], also returning the beamformers of every drop.
    pub fn window_recorded(&self, window_index: usize) -> Result<(GainMap, Vec<Vec<Beamformer>>)> {
        let mut drops = Vec::new();
        let map = self.run(window_index, Some(&mut drops))?;
        Ok((map, drops))
    }

    fn run(&self, window_index: usize, mut record: Option<&mut Vec<Vec<Beamformer>>>) -> Result<GainMap> {
        let cfg = self.cfg;
        let mut rng = window_rng(cfg.master_seed, window_index);
        let n_drops = cfg.drops_per_window();
        let share = 1.0 / (n_drops * cfg.k_ues) as f64;
        let mut acc = PatternAccumulator::new(&cfg.array);
        for drop in 0..n_drops {
            let mut served = Vec::with_capacity(cfg.k_ues);
            for _ in 0..cfg.k_ues {
                let w = self
                    .source
                    .covariance(cfg, &mut rng)
                    .and_then(|cov| eigen_beamformer(&cov, &cfg.eigen))
                    .map_err(|e| Error::Drop {
                        window: window_index,
                        drop,
                        source: Box::new(e),
                    })?;
                acc.add(&w, share)?;
                if record.is_some() {
                    served.push(w);
                }
            }
            if let Some(r) = record.as_deref_mut() {
                r.push(served);
            }
        }
        Ok(self.evaluator.evaluate(&acc, cfg.duty_cycle))
    }

    /// All windows, evaluated on the current rayon pool and assembled by
    /// index.
    pub fn campaign(&self) -> Result<WindowSampleTensor> {
        let rows: Vec<Vec<f32>> = (0..self.cfg.n_windows)
            .into_par_iter()
            .map(|i| {
                self.window(i)
                    .map(|m| m.values.iter().map(|v| *v as f32).collect())
            })
            .collect::<Result<_>>()?;
        let mut samples = Vec::with_capacity(rows.len() * self.cfg.grid.len());
        for r in rows {
            samples.extend(r);
        }
        Ok(WindowSampleTensor {
            grid: self.cfg.grid.clone(),
            n_windows: self.cfg.n_windows,
            samples,
        })
    }
}

pub fn simulate_window(cfg: &SimConfig, window_index: usize) -> Result<GainMap> {
    if window_index >= cfg.n_windows {
        return Err(Error::config(
            "window_index",
            format!("{window_index} >= n_windows {}", cfg.n_windows),
        ));
    }
    WindowSimulator::new(cfg)?.window(window_index)
}

pub fn run_campaign(cfg: &SimConfig) -> Result<WindowSampleTensor> {
    WindowSimulator::new(cfg)?.campaign()
}

/// Runs the campaign on a dedicated pool of `threads` workers.
pub fn run_campaign_with_threads(cfg: &SimConfig, threads: usize) -> Result<WindowSampleTensor> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    pool.install(|| run_campaign(cfg))
}

/// Per-window time-averaged gains, `n_windows x grid.len()`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSampleTensor {
    pub grid: AngularGrid,
    pub n_windows: usize,
    pub samples: Vec<f32>,
}

impl WindowSampleTensor {
    pub fn from_maps(maps: &[GainMap]) -> Result<Self> {
        let first = maps.first().ok_or(Error::EmptyTensor)?;
        let mut samples = Vec::with_capacity(maps.len() * first.values.len());
        for m in maps {
            if m.grid != first.grid {
                return Err(Error::Dimension {
                    expected: first.values.len(),
                    got: m.values.len(),
                });
            }
            samples.extend(m.values.iter().map(|v| *v as f32));
        }
        Ok(WindowSampleTensor {
            grid: first.grid.clone(),
            n_windows: maps.len(),
            samples,
        })
    }

    pub fn row(&self, window: usize) -> &[f32] {
        let n = self.grid.len();
        &self.samples[window * n..(window + 1) * n]
    }

    /// Samples of one grid direction across all windows, in window order.
    pub fn column(&self, index: usize) -> Vec<f64> {
        let n = self.grid.len();
        (0..self.n_windows)
            .map(|w| f64::from(self.samples[w * n + index]))
            .collect()
    }

    pub fn samples_at(&self, dir: Direction) -> Result<Vec<f64>> {
        let i = self.grid.index_of(dir).ok_or(Error::OffGrid {
            azimuth: dir.azimuth,
            elevation: dir.elevation,
        })?;
        Ok(self.column(i))
    }
}

/// 1-based nearest-rank index `ceil(p/100 * n)`, clamped to `[1, n]`.
pub fn nearest_rank(p: f64, n: usize) -> usize {
    let r = (p * n as f64 / 100.0 - 1e-9).ceil();
    (r.max(1.0) as usize).min(n)
}

/// Nearest-rank percentile of `values` (unsorted).
pub fn percentile_of(values: &mut [f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyTensor);
    }
    if !(p > 0.0 && p < 100.0) {
        return Err(Error::Percentile(p));
    }
    let k = nearest_rank(p, values.len()) - 1;
    let (_, v, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*v)
}

pub fn percentile_gain_map(t: &WindowSampleTensor, p: f64) -> Result<GainMap> {
    if t.n_windows == 0 || t.samples.is_empty() {
        return Err(Error::EmptyTensor);
    }
    if !(p > 0.0 && p < 100.0) {
        return Err(Error::Percentile(p));
    }
    let values = (0..t.grid.len())
        .map(|i| percentile_of(&mut t.column(i), p))
        .collect::<Result<_>>()?;
    Ok(GainMap {
        grid: t.grid.clone(),
        values,
    })
}

pub fn argmax_direction(t: &WindowSampleTensor, p: f64) -> Result<Direction> {
    let m = percentile_gain_map(t, p)?;
    Ok(argmax_with_ties(&m.grid, &m.values))
}

/// Per-window `G_A(dir) / g_max`.
pub fn normalized_power_samples(t: &WindowSampleTensor, dir: Direction, g_max: f64) -> Result<Vec<f64>> {
    if g_max.is_nan() || g_max <= 0.0 {
        return Err(Error::config("g_max", "must be positive"));
    }
    Ok(t.samples_at(dir)?.into_iter().map(|g| g / g_max).collect())
}
