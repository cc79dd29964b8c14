//! Element pattern and uniform planar array response.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Direction;

/// Unit-norm tolerance accepted by [`Beamformer::new`].
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Uniform planar array mounted in the vertical plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    /// dBi
    pub element_peak_gain: f64,
    /// Element half-power beamwidth, degrees.
    pub hpbw: f64,
    /// dB
    pub backlobe_attenuation: f64,
    /// Degrees, positive tilts the boresight below the horizon.
    pub mechanical_downtilt: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig {
            rows: 8,
            cols: 8,
            spacing: 0.5,
            element_peak_gain: 8.0,
            hpbw: 65.0,
            backlobe_attenuation: 30.0,
            mechanical_downtilt: 0.0,
        }
    }
}

impl ArrayConfig {
    pub fn n_elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::config("array.rows", "must be at least 1"));
        }
        if self.cols == 0 {
            return Err(Error::config("array.cols", "must be at least 1"));
        }
        for (key, v) in [
            ("array.spacing", self.spacing),
            ("array.hpbw", self.hpbw),
            ("array.backlobe_attenuation", self.backlobe_attenuation),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if !self.element_peak_gain.is_finite() {
            return Err(Error::config("array.element_peak_gain", "must be finite"));
        }
        if !(self.mechanical_downtilt.is_finite() && self.mechanical_downtilt.abs() < 90.0) {
            return Err(Error::config("array.mechanical_downtilt", "must lie in (-90, 90)"));
        }
        Ok(())
    }

    /// Largest array dimension in metres at the given wavelength.
    pub fn aperture(&self, wavelength: f64) -> f64 {
        self.rows.max(self.cols) as f64 * self.spacing * wavelength
    }

    /// Maps a direction from the site frame into the array frame, undoing
    /// the mechanical downtilt.
    pub fn to_array_frame(&self, dir: Direction) -> Direction {
        if self.mechanical_downtilt == 0.0 {
            return dir;
        }
        let (az, el) = (dir.azimuth.to_radians(), dir.elevation.to_radians());
        let tilt = self.mechanical_downtilt.to_radians();
        let (x, y, z) = (el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
        let xr = x * tilt.cos() - z * tilt.sin();
        let zr = x * tilt.sin() + z * tilt.cos();
        Direction::normalized(
            y.atan2(xr).to_degrees(),
            zr.clamp(-1.0, 1.0).asin().to_degrees(),
        )
    }

    /// Phase increments per column and per row, in radians, for a site-frame
    /// direction.
    pub(crate) fn phase_steps(&self, dir: Direction) -> (f64, f64) {
        let d = self.to_array_frame(dir);
        let (az, el) = (d.azimuth.to_radians(), d.elevation.to_radians());
        let k = 2.0 * PI * self.spacing;
        (k * az.sin() * el.cos(), k * el.sin())
    }
}

/// Maximum array gain: element count times the element peak gain (linear).
pub fn max_gain(cfg: &ArrayConfig) -> f64 {
    cfg.n_elements() as f64 * db_to_linear(cfg.element_peak_gain)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Parabolic element pattern, linear gain.
pub fn element_gain(cfg: &ArrayConfig, dir: Direction) -> f64 {
    let d = cfg.to_array_frame(dir);
    let floor = cfg.backlobe_attenuation;
    let horizontal = (12.0 * (d.azimuth / cfg.hpbw).powi(2)).min(floor);
    let vertical = (12.0 * (d.elevation / cfg.hpbw).powi(2)).min(floor);
    db_to_linear(cfg.element_peak_gain - (horizontal + vertical).min(floor))
}

/// Array response; entry `n * cols + m` belongs to column `m`, row `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(pub Vec<Complex64>);

impl SteeringVector {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }
}

pub fn steering_vector(cfg: &ArrayConfig, dir: Direction) -> SteeringVector {
    let (alpha, beta) = cfg.phase_steps(dir);
    SteeringVector(separable_phasors(cfg, alpha, beta))
}

pub(crate) fn separable_phasors(cfg: &ArrayConfig, alpha: f64, beta: f64) -> Vec<Complex64> {
    let horizontal: Vec<Complex64> = (0..cfg.cols)
        .map(|m| Complex64::cis(alpha * m as f64))
        .collect();
    let mut out = Vec::with_capacity(cfg.n_elements());
    for n in 0..cfg.rows {
        let v = Complex64::cis(beta * n as f64);
        out.extend(horizontal.iter().map(|h| h * v));
    }
    out
}

/// Unit-norm transmit weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    weights: Vec<Complex64>,
}

impl Beamformer {
    pub fn new(weights: Vec<Complex64>) -> Result<Self> {
        let norm = norm(&weights);
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NotUnitNorm { norm });
        }
        Ok(Beamformer { weights })
    }

    /// Scales `v` to unit norm.
    pub fn normalized(mut v: Vec<Complex64>) -> Result<Self> {
        let n = norm(&v);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NotUnitNorm { norm: n });
        }
        v.iter_mut().for_each(|c| *c /= n);
        Ok(Beamformer { weights: v })
    }

    /// Matched beamformer toward `dir`.
    pub fn matched(cfg: &ArrayConfig, dir: Direction) -> Self {
        let a = steering_vector(cfg, dir).0;
        let scale = (a.len() as f64).sqrt();
        Beamformer {
            weights: a.into_iter().map(|c| c / scale).collect(),
        }
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `a^H w`
pub(crate) fn inner(a: &[Complex64], w: &[Complex64]) -> Complex64 {
    a.iter().zip(w).map(|(x, y)| x.conj() * y).sum()
}

/// Beamforming gain of `w` toward `dir`, element pattern included.
pub fn beam_gain(cfg: &ArrayConfig, w: &Beamformer, dir: Direction) -> Result<f64> {
    if w.len() != cfg.n_elements() {
        return Err(Error::Dimension {
            expected: cfg.n_elements(),
            got: w.len(),
        });
    }
    let a = steering_vector(cfg, dir);
    Ok(element_gain(cfg, dir) * inner(a.as_slice(), w.weights()).norm_sqr())
}
