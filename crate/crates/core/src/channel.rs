//! Clustered angular channel model and per-UE spatial covariance.
//!
//! Each UE sees a Ricean mix of its LOS ray and `N_c` specular clusters
//! scattered around the LOS direction. The covariance is a weighted sum of
//! rank-one steering-vector outer products, stored in factored form so the
//! eigen-beamformer can work on the small Gram matrix of the factor instead
//! of the full 64x64 matrix.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::antenna::{element_gain, ArrayConfig};
use crate::linalg::HermitianMatrix;
use crate::scenario::{ChannelStats, Direction, UeLocation};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub directions: Vec<Direction>,
    /// Normalized to sum to one.
    pub powers: Vec<f64>,
    /// Linear Ricean K-factor, zero for NLOS.
    pub k_factor: f64,
    pub los_direction: Direction,
}

impl ClusterSet {
    pub fn is_valid(&self) -> bool {
        let sum: f64 = self.powers.iter().sum();
        self.directions.len() == self.powers.len()
            && !self.powers.is_empty()
            && self.powers.iter().all(|p| *p >= 0.0)
            && (sum - 1.0).abs() <= 1e-12
            && self.k_factor >= 0.0
    }
}

pub fn generate_clusters<R: Rng + ?Sized>(
    stats: &ChannelStats,
    ue: &UeLocation,
    rng: &mut R,
) -> ClusterSet {
    let (n, asd, zsd) = if ue.los {
        (stats.n_clusters_los, stats.asd_los, stats.zsd_los)
    } else {
        (stats.n_clusters_nlos, stats.asd_nlos, stats.zsd_nlos)
    };
    let los = ue.los_direction;
    let mut directions = Vec::with_capacity(n);
    let mut powers = Vec::with_capacity(n);
    for _ in 0..n {
        let dz: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        directions.push(Direction::normalized(
            los.azimuth + asd * dz,
            los.elevation + zsd * dy,
        ));
        powers.push(rng.sample::<f64, _>(Exp1));
    }
    let total: f64 = powers.iter().sum();
    if total > 0.0 {
        powers.iter_mut().for_each(|p| *p /= total);
    } else {
        powers.iter_mut().for_each(|p| *p = 1.0 / n as f64);
    }
    let k_factor = if ue.los {
        let x: f64 = rng.sample(StandardNormal);
        10f64.powf((stats.k_factor_mean + stats.k_factor_std * x) / 10.0)
    } else {
        0.0
    };
    ClusterSet {
        directions,
        powers,
        k_factor,
        los_direction: los,
    }
}

#[derive(Debug, Clone)]
struct RankOneTerm {
    weight: f64,
    col_step: f64,
    row_step: f64,
}

/// Spatial covariance `R = sum_i weight_i * a_i a_i^H` over steering
/// vectors `a_i` of the array.
#[derive(Debug, Clone)]
pub struct SpatialCovariance {
    rows: usize,
    cols: usize,
    terms: Vec<RankOneTerm>,
}

impl SpatialCovariance {
    /// Builds a covariance from weighted directions. Non-positive weights are
    /// dropped.
    pub fn from_directions(cfg: &ArrayConfig, terms: impl IntoIterator<Item = (f64, Direction)>) -> Self {
        let terms = terms
            .into_iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(weight, dir)| {
                let (col_step, row_step) = cfg.phase_steps(dir);
                RankOneTerm {
                    weight,
                    col_step,
                    row_step,
                }
            })
            .collect();
        SpatialCovariance {
            rows: cfg.rows,
            cols: cfg.cols,
            terms,
        }
    }

    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }

    /// Number of rank-one terms (an upper bound on the rank).
    pub fn rank_bound(&self) -> usize {
        self.terms.len()
    }

    pub fn trace(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum::<f64>() * self.dim() as f64
    }

    /// Column `i` of the factor `B` with `R = B B^H`.
    pub(crate) fn factor_column(&self, i: usize) -> Vec<Complex64> {
        let t = &self.terms[i];
        let s = t.weight.sqrt();
        let horizontal: Vec<Complex64> = (0..self.cols)
            .map(|m| Complex64::cis(t.col_step * m as f64) * s)
            .collect();
        let mut out = Vec::with_capacity(self.dim());
        for n in 0..self.rows {
            let v = Complex64::cis(t.row_step * n as f64);
            out.extend(horizontal.iter().map(|h| h * v));
        }
        out
    }

    pub(crate) fn factor(&self) -> Vec<Vec<Complex64>> {
        (0..self.terms.len()).map(|i| self.factor_column(i)).collect()
    }

    /// Gram matrix `B^H B` of the factor. It shares its nonzero spectrum
    /// with `R`.
    pub fn gram(&self) -> HermitianMatrix {
        let m = self.terms.len();
        // a_i^H a_j separates into a column sum times a row sum
        let phasors = |step: f64, n: usize| -> Vec<Complex64> {
            let s = Complex64::cis(step);
            let mut p = Complex64::new(1.0, 0.0);
            (0..n)
                .map(|_| {
                    let v = p;
                    p *= s;
                    v
                })
                .collect()
        };
        let horizontal: Vec<Vec<Complex64>> = self.terms.iter().map(|t| phasors(t.col_step, self.cols)).collect();
        let vertical: Vec<Vec<Complex64>> = self.terms.iter().map(|t| phasors(t.row_step, self.rows)).collect();
        let mut g = HermitianMatrix::zeros(m);
        for i in 0..m {
            for j in i..m {
                let h = crate::linalg::dot(&horizontal[i], &horizontal[j]);
                let v = crate::linalg::dot(&vertical[i], &vertical[j]);
                let val = h * v * (self.terms[i].weight * self.terms[j].weight).sqrt();
                g.set(i, j, val);
                g.set(j, i, val.conj());
            }
        }
        g
    }

    /// Dense `dim x dim` matrix.
    pub fn matrix(&self) -> HermitianMatrix {
        let mut r = HermitianMatrix::zeros(self.dim());
        for i in 0..self.terms.len() {
            r.add_outer(1.0, &self.factor_column(i));
        }
        r
    }

    /// `R x` through the factor.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.dim()];
        for i in 0..self.terms.len() {
            let b = self.factor_column(i);
            let c = crate::linalg::dot(&b, x);
            out.iter_mut().zip(&b).for_each(|(o, bi)| *o += bi * c);
        }
        out
    }
}

/// Ricean clustered covariance, element pattern included.
pub fn covariance_from_clusters(cfg: &ArrayConfig, clusters: &ClusterSet) -> SpatialCovariance {
    let k = clusters.k_factor;
    let norm = 1.0 / (k + 1.0);
    let los = (
        k * element_gain(cfg, clusters.los_direction) * norm,
        clusters.los_direction,
    );
    let scattered = clusters
        .directions
        .iter()
        .zip(&clusters.powers)
        .map(|(d, p)| (p * element_gain(cfg, *d) * norm, *d));
    SpatialCovariance::from_directions(cfg, std::iter::once(los).chain(scattered))
}
