//! Deployment scenarios (urban macro / urban micro) and UE dropping.
//!
//! A single sector is simulated: UEs are dropped uniformly over the 120°
//! wedge facing the array boresight, out to the hexagonal cell circumradius
//! `isd / sqrt(3)`. Only the geometry of the BS→UE ray and the LOS state are
//! needed downstream; no path loss is computed because every served UE gets
//! the same share of the transmit power.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A direction in the array frame, in degrees.
///
/// `(0, 0)` is the array boresight. Elevation is negative below the
/// horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Direction {
    pub const BORESIGHT: Direction = Direction {
        azimuth: 0.0,
        elevation: 0.0,
    };

    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Direction { azimuth, elevation }
    }

    /// Builds a direction with the azimuth wrapped to [-180, 180) and the
    /// elevation clipped to [-90, 90].
    pub fn normalized(azimuth: f64, elevation: f64) -> Self {
        Direction {
            azimuth: wrap_azimuth(azimuth),
            elevation: elevation.clamp(-90.0, 90.0),
        }
    }

    pub fn is_valid(&self) -> bool {
        (-180.0..180.0).contains(&self.azimuth) && (-90.0..=90.0).contains(&self.elevation)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(az {:.2}°, el {:.2}°)", self.azimuth, self.elevation)
    }
}

pub fn wrap_azimuth(deg: f64) -> f64 {
    let w = (deg + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Uma,
    Umi,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Uma => "uma",
            ScenarioKind::Umi => "umi",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uma" => Ok(ScenarioKind::Uma),
            "umi" => Ok(ScenarioKind::Umi),
            other => Err(Error::config(
                "scenario",
                format!("unknown scenario `{other}` (expected uma or umi)"),
            )),
        }
    }
}

/// Simplified large-scale angular statistics of the clustered channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelStats {
    /// Azimuth spread of departure, degrees.
    pub asd_los: f64,
    pub asd_nlos: f64,
    /// Zenith spread of departure, degrees.
    pub zsd_los: f64,
    pub zsd_nlos: f64,
    /// Ricean K-factor statistics, dB.
    pub k_factor_mean: f64,
    pub k_factor_std: f64,
    pub n_clusters_los: usize,
    pub n_clusters_nlos: usize,
}

impl ChannelStats {
    pub fn for_scenario(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::Uma => ChannelStats {
                asd_los: 14.0,
                asd_nlos: 26.0,
                zsd_los: 3.0,
                zsd_nlos: 6.0,
                k_factor_mean: 9.0,
                k_factor_std: 3.5,
                n_clusters_los: 12,
                n_clusters_nlos: 20,
            },
            ScenarioKind::Umi => ChannelStats {
                asd_los: 17.0,
                asd_nlos: 26.0,
                zsd_los: 3.0,
                zsd_nlos: 7.0,
                k_factor_mean: 9.0,
                k_factor_std: 5.0,
                n_clusters_los: 12,
                n_clusters_nlos: 19,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("channel.asd_los", self.asd_los),
            ("channel.asd_nlos", self.asd_nlos),
            ("channel.zsd_los", self.zsd_los),
            ("channel.zsd_nlos", self.zsd_nlos),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(key, "angular spread must be finite and non-negative"));
            }
        }
        if !(self.k_factor_std.is_finite() && self.k_factor_std >= 0.0) {
            return Err(Error::config("channel.k_factor_std", "must be non-negative"));
        }
        if !self.k_factor_mean.is_finite() {
            return Err(Error::config("channel.k_factor_mean", "must be finite"));
        }
        if self.n_clusters_los == 0 {
            return Err(Error::config("channel.n_clusters_los", "need at least one cluster"));
        }
        if self.n_clusters_nlos == 0 {
            return Err(Error::config("channel.n_clusters_nlos", "need at least one cluster"));
        }
        Ok(())
    }
}

/// Deployment and exposure constants of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub name: ScenarioKind,
    /// Hz
    pub carrier_freq: f64,
    /// Inter-site distance, m.
    pub isd: f64,
    pub bs_height: f64,
    /// Maximum BS transmit power, W.
    pub p_tx: f64,
    /// Electric-field reference level, V/m.
    pub e_max: f64,
    pub min_2d_distance: f64,
    pub indoor_fraction: f64,
    pub floor_height: f64,
    pub floors_min: u32,
    pub floors_max: u32,
    pub ue_outdoor_height: f64,
    pub channel: ChannelStats,
}

pub fn default_scenario(kind: ScenarioKind) -> ScenarioParams {
    let (isd, bs_height, p_tx_dbm, min_2d) = match kind {
        ScenarioKind::Uma => (500.0, 25.0, 49.0, 35.0),
        ScenarioKind::Umi => (200.0, 10.0, 44.0, 10.0),
    };
    ScenarioParams {
        name: kind,
        carrier_freq: 2.0e9,
        isd,
        bs_height,
        p_tx: dbm_to_watts(p_tx_dbm),
        e_max: 61.0,
        min_2d_distance: min_2d,
        indoor_fraction: 0.8,
        floor_height: 3.0,
        floors_min: 4,
        floors_max: 8,
        ue_outdoor_height: 1.5,
        channel: ChannelStats::for_scenario(kind),
    }
}

impl ScenarioParams {
    /// Radius of the dropping wedge (hexagonal cell circumradius).
    pub fn cell_radius(&self) -> f64 {
        self.isd / 3f64.sqrt()
    }

    pub fn wavelength(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("scenario.carrier_freq", self.carrier_freq),
            ("scenario.isd", self.isd),
            ("scenario.bs_height", self.bs_height),
            ("scenario.p_tx", self.p_tx),
            ("scenario.e_max", self.e_max),
            ("scenario.floor_height", self.floor_height),
            ("scenario.ue_outdoor_height", self.ue_outdoor_height),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if !(self.min_2d_distance.is_finite() && self.min_2d_distance >= 0.0) {
            return Err(Error::config("scenario.min_2d_distance", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.indoor_fraction) {
            return Err(Error::config("scenario.indoor_fraction", "must lie in [0, 1]"));
        }
        if self.floors_min == 0 || self.floors_min > self.floors_max {
            return Err(Error::config(
                "scenario.floors_min",
                format!(
                    "need 1 <= floors_min <= floors_max, got {}..{}",
                    self.floors_min, self.floors_max
                ),
            ));
        }
        if self.cell_radius() <= self.min_2d_distance {
            return Err(Error::config(
                "scenario.isd",
                format!(
                    "cell radius {:.2} m does not exceed min_2d_distance {:.2} m",
                    self.cell_radius(),
                    self.min_2d_distance
                ),
            ));
        }
        self.channel.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UeLocation {
    /// Offset along boresight, m.
    pub x: f64,
    pub y: f64,
    pub height: f64,
    pub indoor: bool,
    pub distance_2d: f64,
    pub los: bool,
    pub los_direction: Direction,
}

/// Direction of the BS→UE ray for a UE at horizontal offset `(x, y)`.
pub fn los_direction(x: f64, y: f64, ue_height: f64, bs_height: f64) -> Direction {
    let d = x.hypot(y);
    Direction {
        azimuth: wrap_azimuth(y.atan2(x).to_degrees()),
        elevation: ((ue_height - bs_height) / d).atan().to_degrees(),
    }
}

/// 3GPP LOS probability for the scenario at 2D distance `distance_2d`.
pub fn los_probability(params: &ScenarioParams, distance_2d: f64, ue_height: f64) -> f64 {
    let d = distance_2d;
    let (d1, d2) = match params.name {
        ScenarioKind::Umi => (18.0, 36.0),
        ScenarioKind::Uma => (18.0, 63.0),
    };
    let base = (d1 / d).min(1.0) * (1.0 - (-d / d2).exp()) + (-d / d2).exp();
    let p = match params.name {
        ScenarioKind::Umi => base,
        ScenarioKind::Uma => {
            let c = if ue_height < 13.0 {
                0.0
            } else {
                ((ue_height - 13.0) / 10.0).powf(1.5) * 1.25e-6 * d.powi(3) * (-d / 150.0).exp()
            };
            base * (1.0 + c)
        }
    };
    p.clamp(0.0, 1.0)
}

/// Drops one UE uniformly over the sector wedge.
pub fn drop_ue<R: Rng + ?Sized>(params: &ScenarioParams, rng: &mut R) -> Result<UeLocation> {
    let radius = params.cell_radius();
    if radius <= params.min_2d_distance {
        return Err(Error::config(
            "scenario.isd",
            "cell radius does not exceed min_2d_distance",
        ));
    }
    let (x, y, d) = loop {
        let az = rng.random_range(-60.0..60.0f64).to_radians();
        let r = radius * rng.random::<f64>().sqrt();
        if r >= params.min_2d_distance {
            break (r * az.cos(), r * az.sin(), r);
        }
    };
    let indoor = rng.random::<f64>() < params.indoor_fraction;
    let height = if indoor {
        let floors = rng.random_range(params.floors_min..=params.floors_max);
        let floor = rng.random_range(1..=floors);
        params.floor_height * f64::from(floor - 1) + params.ue_outdoor_height
    } else {
        params.ue_outdoor_height
    };
    let los = rng.random::<f64>() < los_probability(params, d, height);
    Ok(UeLocation {
        x,
        y,
        height,
        indoor,
        distance_2d: d,
        los,
        los_direction: los_direction(x, y, height, params.bs_height),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scenario_constants() {
        let uma = default_scenario(ScenarioKind::Uma);
        assert_eq!(uma.bs_height, 25.0);
        assert_eq!(uma.isd, 500.0);
        assert!((uma.p_tx - 79.433).abs() < 1e-3);
        assert_eq!(uma.e_max, 61.0);
        let umi = default_scenario(ScenarioKind::Umi);
        assert_eq!(umi.bs_height, 10.0);
        assert_eq!(umi.isd, 200.0);
        assert!((umi.p_tx - 25.119).abs() < 1e-3);
        uma.validate().unwrap();
        umi.validate().unwrap();
    }

    #[test]
    fn los_geometry() {
        let outdoor = los_direction(100.0, 0.0, 1.5, 25.0);
        assert!((outdoor.elevation - (-13.23)).abs() < 0.01);
        let indoor = los_direction(200.0, 0.0, 22.5, 25.0);
        assert!((indoor.elevation - (-0.72)).abs() < 0.01);
        let up = los_direction(50.0, 0.0, 22.5, 10.0);
        assert!(up.elevation > 0.0);
        let side = los_direction(0.0, 50.0, 1.5, 10.0);
        assert!((side.azimuth - 90.0).abs() < 1e-12);
    }

    #[test]
    fn los_probability_values() {
        let umi = default_scenario(ScenarioKind::Umi);
        let uma = default_scenario(ScenarioKind::Uma);
        assert!((los_probability(&umi, 1.0, 1.5) - 1.0).abs() < 1e-12);
        assert!((los_probability(&umi, 36.0, 1.5) - 0.684).abs() < 5e-4);
        assert!((los_probability(&uma, 63.0, 1.5) - 0.548).abs() < 5e-4);
        // high-rise correction only raises the probability, capped at 1
        assert!(los_probability(&uma, 63.0, 22.5) >= los_probability(&uma, 63.0, 1.5));
        assert!(los_probability(&uma, 200.0, 22.5) <= 1.0);
    }

    #[test]
    fn degenerate_sector_rejected() {
        let mut p = default_scenario(ScenarioKind::Umi);
        p.min_2d_distance = 200.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(drop_ue(&p, &mut rng).unwrap_err().is_config());
        assert!(p.validate().is_err());
    }

    #[test]
    fn dropped_ue_invariants() {
        let p = default_scenario(ScenarioKind::Uma);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let ue = drop_ue(&p, &mut rng).unwrap();
            assert!(ue.distance_2d >= p.min_2d_distance);
            assert!(ue.distance_2d <= p.cell_radius() + 1e-9);
            if ue.indoor {
                let floor = (ue.height - 1.5) / 3.0;
                assert!((floor - floor.round()).abs() < 1e-12);
                assert!((0.0..=7.0).contains(&floor.round()));
            } else {
                assert_eq!(ue.height, 1.5);
            }
            let expected = ((ue.height - p.bs_height) / ue.distance_2d).atan().to_degrees();
            assert!((ue.los_direction.elevation - expected).abs() < 1e-12);
            assert!(ue.los_direction.azimuth.abs() <= 60.0);
        }
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_azimuth(180.0), -180.0);
        assert_eq!(wrap_azimuth(190.0), -170.0);
        assert_eq!(wrap_azimuth(-190.0), 170.0);
        assert!((-180.0..180.0).contains(&wrap_azimuth(-1e-18)));
        assert!((-180.0..180.0).contains(&wrap_azimuth(179.999_999_999_999_97)));
    }

    #[test]
    fn parse_kind() {
        assert_eq!("UMa".parse::<ScenarioKind>().unwrap(), ScenarioKind::Uma);
        assert!("rma".parse::<ScenarioKind>().is_err());
    }
}
