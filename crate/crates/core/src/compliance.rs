//! Far-field power density and compliance distances.

use std::f64::consts::PI;

use serde::Serialize;

use crate::antenna::{max_gain, ArrayConfig, Beamformer};
use crate::beamforming::{argmax_with_ties, drop_gain_map, AngularGrid, GainMap};
use crate::engine::{percentile_gain_map, WindowSampleTensor};
use crate::error::{Error, Result};
use crate::scenario::{Direction, ScenarioParams};

/// Free-space impedance, ohm.
pub const Z0: f64 = 120.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Statistical,
    Traditional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceResult {
    /// Percentile of the time-averaged gain; `None` for the traditional
    /// method.
    pub percentile: Option<f64>,
    /// Per-direction distance `r_p`, m.
    pub distance_map: GainMap,
    pub compliance_distance: f64,
    pub argmax: Direction,
    pub method: Method,
    /// The distance falls inside `2 D^2 / lambda` of the array.
    pub below_far_field: bool,
}

/// Power density `P G / (4 pi r^2)`, W/m².
pub fn power_density(p_tx: f64, gain: f64, r: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::NonPositiveDistance(r));
    }
    Ok(p_tx * gain / (4.0 * PI * r * r))
}

/// Electric field strength for a power density, V/m.
pub fn field_strength(density: f64) -> f64 {
    (density * Z0).sqrt()
}

/// Distance at which the field of `p_tx * gain_p` falls to `e_max`.
pub fn compliance_distance_at(p_tx: f64, gain_p: f64, e_max: f64) -> f64 {
    // Z0 / (4 pi) = 30 ohm
    (p_tx * gain_p.max(0.0) * 30.0).sqrt() / e_max
}

/// Far-field boundary `2 D^2 / lambda` of the array at the scenario carrier.
pub fn far_field_distance(array: &ArrayConfig, scenario: &ScenarioParams) -> f64 {
    let lambda = scenario.wavelength();
    let d = array.aperture(lambda);
    2.0 * d * d / lambda
}

fn boundary_from_gain(
    gains: &GainMap,
    scenario: &ScenarioParams,
    array: &ArrayConfig,
    percentile: Option<f64>,
    method: Method,
) -> ComplianceResult {
    let values: Vec<f64> = gains
        .values
        .iter()
        .map(|g| compliance_distance_at(scenario.p_tx, *g, scenario.e_max))
        .collect();
    let argmax = argmax_with_ties(&gains.grid, &values);
    let compliance_distance = values.iter().copied().fold(0.0, f64::max);
    let far = far_field_distance(array, scenario);
    let below_far_field = compliance_distance < far;
    if below_far_field {
        log::warn!(
            "{} compliance distance {:.2} m is inside the far-field distance {:.2} m",
            scenario.name,
            compliance_distance,
            far
        );
    }
    ComplianceResult {
        percentile,
        distance_map: GainMap {
            grid: gains.grid.clone(),
            values,
        },
        compliance_distance,
        argmax,
        method,
        below_far_field,
    }
}

/// Statistical compliance boundary from the p-percentile of the
/// time-averaged gain.
pub fn statistical_boundary(
    t: &WindowSampleTensor,
    p: f64,
    scenario: &ScenarioParams,
    array: &ArrayConfig,
) -> Result<ComplianceResult> {
    let gains = percentile_gain_map(t, p)?;
    Ok(boundary_from_gain(&gains, scenario, array, Some(p), Method::Statistical))
}

/// Static full-power boresight beam, scaled by the duty cycle.
pub fn traditional_boundary_on(
    scenario: &ScenarioParams,
    array: &ArrayConfig,
    duty_cycle: f64,
    grid: &AngularGrid,
) -> Result<ComplianceResult> {
    if !(duty_cycle > 0.0 && duty_cycle <= 1.0) {
        return Err(Error::config("duty", format!("must lie in (0, 1], got {duty_cycle}")));
    }
    let beam = Beamformer::matched(array, Direction::BORESIGHT);
    let map = drop_gain_map(array, &[beam], grid)?.scaled(duty_cycle);
    let mut result = boundary_from_gain(&map, scenario, array, None, Method::Traditional);
    result.compliance_distance = compliance_distance_at(scenario.p_tx, duty_cycle * max_gain(array), scenario.e_max);
    result.argmax = Direction::BORESIGHT;
    Ok(result)
}

pub fn traditional_boundary(
    scenario: &ScenarioParams,
    array: &ArrayConfig,
    duty_cycle: f64,
) -> Result<ComplianceResult> {
    traditional_boundary_on(scenario, array, duty_cycle, &AngularGrid::default())
}

/// Statistical distance as a fraction of the traditional one.
pub fn boundary_ratio(stat: &ComplianceResult, trad: &ComplianceResult) -> Result<f64> {
    if trad.compliance_distance.is_nan() || trad.compliance_distance <= 0.0 {
        return Err(Error::NonPositiveDistance(trad.compliance_distance));
    }
    Ok(stat.compliance_distance / trad.compliance_distance)
}
