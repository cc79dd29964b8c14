//! Eigen-beamforming and gain maps over an angular grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::antenna::{element_gain, ArrayConfig, Beamformer};
use crate::channel::SpatialCovariance;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, HermitianMatrix};
use crate::scenario::Direction;

const GRID_TOL: f64 = 1e-9;

/// Regular azimuth/elevation grid. Directions are enumerated row-major with
/// elevation as the outer index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularGrid {
    pub az_min: f64,
    pub az_max: f64,
    pub az_step: f64,
    pub el_min: f64,
    pub el_max: f64,
    pub el_step: f64,
}

impl Default for AngularGrid {
    fn default() -> Self {
        AngularGrid {
            az_min: -90.0,
            az_max: 90.0,
            az_step: 2.0,
            el_min: -45.0,
            el_max: 45.0,
            el_step: 1.0,
        }
    }
}

impl AngularGrid {
    pub fn new(az: (f64, f64, f64), el: (f64, f64, f64)) -> Result<Self> {
        let g = AngularGrid {
            az_min: az.0,
            az_max: az.1,
            az_step: az.2,
            el_min: el.0,
            el_max: el.1,
            el_step: el.2,
        };
        g.validate()?;
        Ok(g)
    }

    /// Whole sphere: azimuth [-180, 180 - step], elevation [-90, 90].
    pub fn full_sphere(az_step: f64, el_step: f64) -> Result<Self> {
        Self::new((-180.0, 180.0 - az_step, az_step), (-90.0, 90.0, el_step))
    }

    /// Parses `azmin:azmax:azstep,elmin:elmax:elstep`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::config("grid", format!("expected azmin:azmax:azstep,elmin:elmax:elstep, got `{s}`"));
        let (az, el) = s.split_once(',').ok_or_else(bad)?;
        let triple = |part: &str| -> Result<(f64, f64, f64)> {
            let v: Vec<f64> = part
                .split(':')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            match v[..] {
                [a, b, c] => Ok((a, b, c)),
                _ => Err(bad()),
            }
        };
        Self::new(triple(az)?, triple(el)?)
    }

    pub fn validate(&self) -> Result<()> {
        axis_len(self.az_min, self.az_max, self.az_step, "grid.az")?;
        axis_len(self.el_min, self.el_max, self.el_step, "grid.el")?;
        if self.az_min < -180.0 || self.az_max >= 180.0 {
            return Err(Error::config("grid.az", "azimuth must lie in [-180, 180)"));
        }
        if self.el_min < -90.0 || self.el_max > 90.0 {
            return Err(Error::config("grid.el", "elevation must lie in [-90, 90]"));
        }
        if self.index_of(Direction::BORESIGHT).is_none() {
            return Err(Error::config("grid", "grid must contain the boresight direction (0, 0)"));
        }
        Ok(())
    }

    pub fn n_az(&self) -> usize {
        ((self.az_max - self.az_min) / self.az_step).round() as usize + 1
    }

    pub fn n_el(&self) -> usize {
        ((self.el_max - self.el_min) / self.el_step).round() as usize + 1
    }

    pub fn len(&self) -> usize {
        self.n_az() * self.n_el()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn azimuth(&self, i: usize) -> f64 {
        self.az_min + i as f64 * self.az_step
    }

    pub fn elevation(&self, i: usize) -> f64 {
        self.el_min + i as f64 * self.el_step
    }

    pub fn direction(&self, index: usize) -> Direction {
        let n_az = self.n_az();
        Direction::new(self.azimuth(index % n_az), self.elevation(index / n_az))
    }

    pub fn directions(&self) -> impl Iterator<Item = Direction> + '_ {
        (0..self.len()).map(|i| self.direction(i))
    }

    pub fn index_of(&self, dir: Direction) -> Option<usize> {
        let ia = on_axis(dir.azimuth, self.az_min, self.az_step, self.n_az())?;
        let ie = on_axis(dir.elevation, self.el_min, self.el_step, self.n_el())?;
        Some(ie * self.n_az() + ia)
    }
}

fn axis_len(min: f64, max: f64, step: f64, key: &str) -> Result<usize> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::config(key, format!("step must be positive, got {step}")));
    }
    if !(min.is_finite() && max.is_finite() && max >= min) {
        return Err(Error::config(key, format!("need min <= max, got {min}..{max}")));
    }
    let n = (max - min) / step;
    if (n - n.round()).abs() > GRID_TOL * n.max(1.0) {
        return Err(Error::config(key, format!("range {min}..{max} is not a multiple of step {step}")));
    }
    Ok(n.round() as usize + 1)
}

fn on_axis(x: f64, min: f64, step: f64, n: usize) -> Option<usize> {
    let i = ((x - min) / step).round();
    if i < 0.0 || i >= n as f64 {
        return None;
    }
    let i = i as usize;
    ((min + i as f64 * step - x).abs() <= GRID_TOL).then_some(i)
}

/// Linear gain per grid direction.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMap {
    pub grid: AngularGrid,
    pub values: Vec<f64>,
}

impl GainMap {
    pub fn get(&self, dir: Direction) -> Option<f64> {
        self.grid.index_of(dir).map(|i| self.values[i])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Grid direction of the largest value. Ties go to the smaller |azimuth|,
    /// then the smaller |elevation|.
    pub fn argmax(&self) -> Direction {
        argmax_with_ties(&self.grid, &self.values)
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= s);
        self
    }
}

pub(crate) fn argmax_with_ties(grid: &AngularGrid, values: &[f64]) -> Direction {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        let b = values[best];
        if *v > b {
            best = i;
        } else if *v == b {
            let (d, db) = (grid.direction(i), grid.direction(best));
            let key = (d.azimuth.abs(), d.elevation.abs());
            let key_best = (db.azimuth.abs(), db.elevation.abs());
            if key < key_best {
                best = i;
            }
        }
    }
    grid.direction(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerIterationOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        PowerIterationOptions {
            tol: 1e-10,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DominantEigen {
    pub beamformer: Beamformer,
    pub eigenvalue: f64,
    /// Matrix-vector products spent in the final, successful run.
    pub iterations: usize,
    /// `||R w - lambda w||`
    pub residual: f64,
}

enum Outcome {
    Converged {
        u: Vec<Complex64>,
        lambda: f64,
        iterations: usize,
        residual: f64,
    },
    /// The start vector was annihilated by the matrix.
    Annihilated,
    Exhausted { iterations: usize, residual: f64 },
}

/// Single-vector power iteration on a Hermitian PSD operator.
///
/// With `gram_metric` the operator is the Gram matrix `G = B^H B` of a
/// factor of `R = B B^H`, and the iterate `u` stands for `w = B u`; the
/// Rayleigh quotient and residual are then evaluated for `w` against `R`.
fn iterate(
    op: &HermitianMatrix,
    start: &[Complex64],
    gram_metric: bool,
    scale: f64,
    opts: &PowerIterationOptions,
) -> Outcome {
    let n = op.dim();
    let s = norm(start);
    if s == 0.0 || !s.is_finite() {
        return Outcome::Annihilated;
    }
    let mut u: Vec<Complex64> = start.iter().map(|c| c / s).collect();
    let mut v = vec![Complex64::default(); n];
    let mut z = vec![Complex64::default(); n];
    op.matvec(&u, &mut v);
    let mut iterations = 1;
    if norm(&v) <= 1e-14 * scale {
        return Outcome::Annihilated;
    }
    loop {
        let (lambda, residual);
        if gram_metric {
            op.matvec(&v, &mut z);
            iterations += 1;
            let uv = dot(&u, &v).re;
            lambda = dot(&v, &v).re / uv;
            let mut acc = 0.0;
            for i in 0..n {
                let e = v[i] - u[i] * lambda;
                let ge = z[i] - v[i] * lambda;
                acc += (e.conj() * ge).re;
            }
            residual = (acc.max(0.0) / uv).sqrt();
        } else {
            lambda = dot(&u, &v).re;
            residual = u
                .iter()
                .zip(&v)
                .map(|(a, b)| (b - a * lambda).norm_sqr())
                .sum::<f64>()
                .sqrt();
        }
        if residual <= opts.tol * scale {
            return Outcome::Converged {
                u,
                lambda,
                iterations,
                residual,
            };
        }
        if iterations >= opts.max_iter {
            return Outcome::Exhausted {
                iterations,
                residual,
            };
        }
        let inv = 1.0 / norm(&v);
        if gram_metric {
            u.iter_mut().zip(&v).for_each(|(a, b)| *a = b * inv);
            v.iter_mut().zip(&z).for_each(|(a, b)| *a = b * inv);
        } else {
            u.iter_mut().zip(&v).for_each(|(a, b)| *a = b * inv);
            op.matvec(&u, &mut v);
            iterations += 1;
        }
    }
}

/// Deterministic restart vectors (golden-angle phases).
fn restart_vector(n: usize, attempt: usize) -> Vec<Complex64> {
    const GOLDEN: f64 = 2.399_963_229_728_653;
    (0..n)
        .map(|i| {
            let k = (i + 1) as f64 * (attempt + 1) as f64;
            Complex64::from_polar(1.0 + 0.5 * (0.7 * k).sin(), GOLDEN * k * k)
        })
        .collect()
}

const MAX_RESTARTS: usize = 3;

/// Dominant eigenpair of a dense Hermitian PSD matrix, started from the
/// normalized all-ones (boresight) vector.
pub fn dominant_eigenvector_dense(
    r: &HermitianMatrix,
    opts: &PowerIterationOptions,
) -> Result<DominantEigen> {
    let n = r.dim();
    let frob = r.frobenius_norm();
    if frob == 0.0 || n == 0 {
        return Err(Error::ZeroMatrix);
    }
    let lower_bound = frob / (n as f64).sqrt() * (1.0 - 1e-9);
    let mut start = vec![Complex64::new(1.0, 0.0); n];
    for attempt in 0..=MAX_RESTARTS {
        match iterate(r, &start, false, frob, opts) {
            Outcome::Converged {
                u,
                lambda,
                iterations,
                residual,
            } => {
                // lambda_max >= ||R||_F / sqrt(n); anything below is a
                // subdominant pair reached from a deficient start
                if lambda >= lower_bound || attempt == MAX_RESTARTS {
                    return Ok(DominantEigen {
                        beamformer: Beamformer::normalized(u)?,
                        eigenvalue: lambda,
                        iterations,
                        residual,
                    });
                }
                let mut next = restart_vector(n, attempt);
                let c = dot(&u, &next);
                next.iter_mut().zip(&u).for_each(|(x, ui)| *x -= ui * c);
                start = next;
            }
            Outcome::Annihilated => start = restart_vector(n, attempt),
            Outcome::Exhausted {
                iterations,
                residual,
            } => return Err(Error::NoConvergence { iterations, residual }),
        }
    }
    Err(Error::ZeroMatrix)
}

/// Dominant eigenvector of a factored covariance: the eigen-beamformer.
///
/// Runs the same iteration as [`dominant_eigenvector_dense`] from the
/// boresight start vector, carried out on the Gram matrix of the factor.
pub fn dominant_eigenvector(
    cov: &SpatialCovariance,
    opts: &PowerIterationOptions,
) -> Result<DominantEigen> {
    let gram = cov.gram();
    let m = gram.dim();
    let frob = gram.frobenius_norm();
    if m == 0 || frob == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let factor = cov.factor();
    let lower_bound = frob / (m as f64).sqrt() * (1.0 - 1e-9);
    // B^H a0 is the first power-iteration step from a0, expressed in the
    // factor coordinates
    let project = |x: &[Complex64]| -> Vec<Complex64> { factor.iter().map(|b| dot(b, x)).collect() };
    let mut start = project(&vec![Complex64::new(1.0, 0.0); cov.dim()]);
    for attempt in 0..=MAX_RESTARTS {
        match iterate(&gram, &start, true, frob, opts) {
            Outcome::Converged {
                u,
                lambda,
                iterations,
                residual,
            } => {
                if lambda >= lower_bound || attempt == MAX_RESTARTS {
                    let mut w = vec![Complex64::default(); cov.dim()];
                    for (b, ui) in factor.iter().zip(&u) {
                        w.iter_mut().zip(b).for_each(|(wi, bi)| *wi += bi * ui);
                    }
                    return Ok(DominantEigen {
                        beamformer: Beamformer::normalized(w)?,
                        eigenvalue: lambda,
                        iterations,
                        residual,
                    });
                }
                start = project(&restart_vector(cov.dim(), attempt));
                let g_u = {
                    let mut t = vec![Complex64::default(); m];
                    gram.matvec(&u, &mut t);
                    t
                };
                // remove the converged pair in the R-inner product
                let c = dot(&g_u, &start) / dot(&u, &g_u).re;
                start.iter_mut().zip(&u).for_each(|(x, ui)| *x -= ui * c);
            }
            Outcome::Annihilated => start = project(&restart_vector(cov.dim(), attempt)),
            Outcome::Exhausted {
                iterations,
                residual,
            } => return Err(Error::NoConvergence { iterations, residual }),
        }
    }
    Err(Error::ZeroMatrix)
}

/// Weighted sum of beamformer outer products `Q = sum_k c_k w_k w_k^H`,
/// which determines the averaged gain pattern `g_e(d) a(d)^H Q a(d)`.
#[derive(Debug, Clone)]
pub struct PatternAccumulator {
    rows: usize,
    cols: usize,
    /// Upper triangle of Q, row-major.
    q: Vec<Complex64>,
}

impl PatternAccumulator {
    pub fn new(cfg: &ArrayConfig) -> Self {
        let n = cfg.n_elements();
        PatternAccumulator {
            rows: cfg.rows,
            cols: cfg.cols,
            q: vec![Complex64::default(); n * n],
        }
    }

    pub fn add(&mut self, w: &Beamformer, weight: f64) -> Result<()> {
        let n = self.rows * self.cols;
        if w.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: w.len(),
            });
        }
        let w = w.weights();
        for i in 0..n {
            let wi = w[i] * weight;
            for (q, wj) in self.q[i * n + i..(i + 1) * n].iter_mut().zip(&w[i..]) {
                *q += wi * wj.conj();
            }
        }
        Ok(())
    }

    /// Lag coefficients `c[dm][dn]`, dm in 0..cols, dn in -(rows-1)..rows.
    fn lags(&self) -> Vec<Complex64> {
        let n = self.rows * self.cols;
        let span = 2 * self.rows - 1;
        let mut c = vec![Complex64::default(); self.cols * span];
        let off = self.rows as isize - 1;
        for i in 0..n {
            let (ri, ci) = ((i / self.cols) as isize, (i % self.cols) as isize);
            for j in i..n {
                let (rj, cj) = ((j / self.cols) as isize, (j % self.cols) as isize);
                let q = self.q[i * n + j];
                let (dm, dn) = (cj - ci, rj - ri);
                // Q_ij feeds lag (dm, dn); its conjugate feeds (-dm, -dn)
                if dm > 0 || (dm == 0 && i == j) {
                    c[dm as usize * span + (dn + off) as usize] += q;
                } else if dm < 0 {
                    c[(-dm) as usize * span + (off - dn) as usize] += q.conj();
                } else {
                    c[(dn + off) as usize] += q;
                    c[(off - dn) as usize] += q.conj();
                }
            }
        }
        c
    }
}

/// Precomputed per-direction array geometry for fast pattern evaluation.
#[derive(Debug, Clone)]
pub struct GridEvaluator {
    grid: AngularGrid,
    rows: usize,
    cols: usize,
    element: Vec<f64>,
    steps: Vec<(f64, f64)>,
}

impl GridEvaluator {
    pub fn new(cfg: &ArrayConfig, grid: &AngularGrid) -> Self {
        let dirs: Vec<Direction> = grid.directions().collect();
        GridEvaluator {
            grid: grid.clone(),
            rows: cfg.rows,
            cols: cfg.cols,
            element: dirs.iter().map(|d| element_gain(cfg, *d)).collect(),
            steps: dirs.iter().map(|d| cfg.phase_steps(*d)).collect(),
        }
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    /// Gain pattern of `acc` scaled by `scale`.
    pub fn evaluate(&self, acc: &PatternAccumulator, scale: f64) -> GainMap {
        let c = acc.lags();
        let span = 2 * self.rows - 1;
        let off = self.rows as isize - 1;
        let mut d = vec![Complex64::default(); self.cols];
        let mut last_row_step = f64::NAN;
        let mut values = Vec::with_capacity(self.steps.len());
        for (&(alpha, beta), g) in self.steps.iter().zip(&self.element) {
            if beta != last_row_step {
                // d[dm] = sum_dn c[dm][dn] e^{j beta dn}
                let step = Complex64::cis(beta);
                let mut phasors = vec![Complex64::default(); span];
                phasors[off as usize] = Complex64::new(1.0, 0.0);
                for k in 1..self.rows {
                    phasors[off as usize + k] = phasors[off as usize + k - 1] * step;
                    phasors[off as usize - k] = phasors[off as usize + k].conj();
                }
                for (dm, out) in d.iter_mut().enumerate() {
                    *out = c[dm * span..(dm + 1) * span]
                        .iter()
                        .zip(&phasors)
                        .map(|(a, b)| a * b)
                        .sum();
                }
                last_row_step = beta;
            }
            let step = Complex64::cis(alpha);
            let mut p = step;
            let mut q = d[0].re;
            for dm in d.iter().skip(1) {
                q += 2.0 * (dm * p).re;
                p *= step;
            }
            values.push((g * q).max(0.0) * scale);
        }
        GainMap {
            grid: self.grid.clone(),
            values,
        }
    }
}

/// Per-drop gain map with the transmit power split equally over the served
/// UEs.
pub fn drop_gain_map(
    cfg: &ArrayConfig,
    beamformers: &[Beamformer],
    grid: &AngularGrid,
) -> Result<GainMap> {
    if beamformers.is_empty() {
        return Err(Error::NoBeamformers);
    }
    let mut acc = PatternAccumulator::new(cfg);
    let share = 1.0 / beamformers.len() as f64;
    for w in beamformers {
        acc.add(w, share)?;
    }
    Ok(GridEvaluator::new(cfg, grid).evaluate(&acc, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::{beam_gain, max_gain, steering_vector};

    fn cfg() -> ArrayConfig {
        ArrayConfig::default()
    }

    #[test]
    fn default_grid_shape() {
        let g = AngularGrid::default();
        assert_eq!((g.n_az(), g.n_el()), (91, 91));
        assert_eq!(g.len(), 8281);
        let i = g.index_of(Direction::BORESIGHT).unwrap();
        assert_eq!(g.direction(i), Direction::BORESIGHT);
        assert_eq!(g.index_of(Direction::new(1.0, 0.0)), None);
        assert_eq!(g.direction(0), Direction::new(-90.0, -45.0));
        assert_eq!(g.direction(1), Direction::new(-88.0, -45.0));
    }

    #[test]
    fn grid_parse_and_validation() {
        let g = AngularGrid::parse("-60:60:2,-20:20:0.5").unwrap();
        assert_eq!((g.n_az(), g.n_el()), (61, 81));
        assert!(AngularGrid::parse("-60:60:7,-20:20:1").is_err());
        assert!(AngularGrid::parse("10:60:2,-20:20:1").is_err());
        assert!(AngularGrid::parse("-60:60:2").is_err());
        assert!(AngularGrid::parse("-60:60:0,-20:20:1").is_err());
        let s = AngularGrid::full_sphere(2.0, 1.0).unwrap();
        assert_eq!((s.n_az(), s.n_el()), (180, 181));
    }

    #[test]
    fn rank_one_eigenvector() {
        let c = cfg();
        let mut r = HermitianMatrix::zeros(64);
        let a = steering_vector(&c, Direction::BORESIGHT);
        r.add_outer(1.0, &a.0);
        let e = dominant_eigenvector_dense(&r, &PowerIterationOptions::default()).unwrap();
        let proj = crate::antenna::inner(&a.0, e.beamformer.weights()).norm_sqr();
        assert!((proj - 64.0).abs() < 1e-9);
        assert!((e.eigenvalue - 64.0).abs() < 1e-9);
    }

    #[test]
    fn identity_eigenvalue() {
        let e = dominant_eigenvector_dense(&HermitianMatrix::identity(16), &PowerIterationOptions::default())
            .unwrap();
        assert!((e.eigenvalue - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_matrix_rejected() {
        assert!(matches!(
            dominant_eigenvector_dense(&HermitianMatrix::zeros(8), &PowerIterationOptions::default()),
            Err(Error::ZeroMatrix)
        ));
        let empty = SpatialCovariance::from_directions(&cfg(), std::iter::empty());
        assert!(matches!(
            dominant_eigenvector(&empty, &PowerIterationOptions::default()),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn start_orthogonal_to_dominant_pair() {
        // diag(0, 1, 5) rotated so that the all-ones start has no component
        // along the dominant eigenvector e3 - e2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v1 = [1.0 / 3f64.sqrt(); 3];
        let v3 = [0.0, -s, s];
        let v2 = [2.0 / 6f64.sqrt(), -1.0 / 6f64.sqrt(), -1.0 / 6f64.sqrt()];
        let mut r = HermitianMatrix::zeros(3);
        let c = |v: &[f64; 3]| v.iter().map(|x| Complex64::new(*x, 0.0)).collect::<Vec<_>>();
        r.add_outer(0.5, &c(&v1));
        r.add_outer(1.0, &c(&v2));
        r.add_outer(5.0, &c(&v3));
        let e = dominant_eigenvector_dense(&r, &PowerIterationOptions::default()).unwrap();
        assert!((e.eigenvalue - 5.0).abs() < 1e-9);
    }

    #[test]
    fn non_convergence_reports_residual() {
        let c = cfg();
        let cov = SpatialCovariance::from_directions(
            &c,
            [(1.0, Direction::new(20.0, 0.0)), (0.999, Direction::new(-20.0, 0.0))],
        );
        let opts = PowerIterationOptions { tol: 1e-14, max_iter: 3 };
        match dominant_eigenvector(&cov, &opts) {
            Err(Error::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn factored_matches_dense() {
        let c = cfg();
        let cov = SpatialCovariance::from_directions(
            &c,
            [
                (2.0, Direction::new(10.0, -5.0)),
                (0.7, Direction::new(-35.0, 2.0)),
                (0.3, Direction::new(50.0, -12.0)),
            ],
        );
        let opts = PowerIterationOptions::default();
        let f = dominant_eigenvector(&cov, &opts).unwrap();
        let d = dominant_eigenvector_dense(&cov.matrix(), &opts).unwrap();
        assert!((f.eigenvalue - d.eigenvalue).abs() < 1e-8 * d.eigenvalue);
        let align = crate::antenna::inner(f.beamformer.weights(), d.beamformer.weights()).norm();
        assert!(align > 1.0 - 1e-9);
        // residual against the dense matrix
        let w = f.beamformer.weights();
        let rw = cov.apply(w);
        let res: f64 = rw
            .iter()
            .zip(w)
            .map(|(a, b)| (a - b * f.eigenvalue).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(res <= 1e-10 * cov.matrix().frobenius_norm() * 1.01);
    }

    #[test]
    fn scaling_invariance() {
        let c = cfg();
        let dirs = [(1.0, Direction::new(15.0, -3.0)), (0.4, Direction::new(-25.0, 5.0))];
        let a = dominant_eigenvector(&SpatialCovariance::from_directions(&c, dirs), &Default::default()).unwrap();
        let scaled = dirs.map(|(w, d)| (w * 37.5, d));
        let b = dominant_eigenvector(&SpatialCovariance::from_directions(&c, scaled), &Default::default()).unwrap();
        let align = crate::antenna::inner(a.beamformer.weights(), b.beamformer.weights()).norm();
        assert!((align - 1.0).abs() < 1e-9);
        assert!((b.eigenvalue / a.eigenvalue - 37.5).abs() < 1e-8);
    }

    fn brute_force_map(c: &ArrayConfig, ws: &[Beamformer], grid: &AngularGrid) -> Vec<f64> {
        grid.directions()
            .map(|d| ws.iter().map(|w| beam_gain(c, w, d).unwrap()).sum::<f64>() / ws.len() as f64)
            .collect()
    }

    #[test]
    fn drop_map_matches_brute_force() {
        let c = cfg();
        let grid = AngularGrid::parse("-90:90:6,-45:45:5").unwrap();
        let ws = vec![
            Beamformer::matched(&c, Direction::new(-20.0, -5.0)),
            Beamformer::matched(&c, Direction::new(30.0, 10.0)),
            Beamformer::normalized((0..64).map(|i| Complex64::cis(0.37 * (i * i) as f64)).collect()).unwrap(),
        ];
        let fast = drop_gain_map(&c, &ws, &grid).unwrap();
        let slow = brute_force_map(&c, &ws, &grid);
        for (a, b) in fast.values.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9 * max_gain(&c));
        }
    }

    #[test]
    fn drop_map_with_downtilt_matches_brute_force() {
        let c = ArrayConfig {
            mechanical_downtilt: 7.0,
            ..cfg()
        };
        let grid = AngularGrid::parse("-90:90:10,-45:45:5").unwrap();
        let ws = vec![Beamformer::matched(&c, Direction::new(12.0, -9.0))];
        let fast = drop_gain_map(&c, &ws, &grid).unwrap();
        let slow = brute_force_map(&c, &ws, &grid);
        for (a, b) in fast.values.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9 * max_gain(&c));
        }
    }

    #[test]
    fn matched_boresight_map_peak() {
        let c = cfg();
        let m = drop_gain_map(&c, &[Beamformer::matched(&c, Direction::BORESIGHT)], &AngularGrid::default()).unwrap();
        assert_eq!(m.argmax(), Direction::BORESIGHT);
        assert!((m.max() - 403.8).abs() < 0.05);
    }

    #[test]
    fn identical_beams_average_to_one() {
        let c = cfg();
        let grid = AngularGrid::parse("-90:90:6,-45:45:3").unwrap();
        let w = Beamformer::matched(&c, Direction::new(18.0, -6.0));
        let one = drop_gain_map(&c, std::slice::from_ref(&w), &grid).unwrap();
        let two = drop_gain_map(&c, &[w.clone(), w], &grid).unwrap();
        for (a, b) in one.values.iter().zip(&two.values) {
            assert!((a - b).abs() <= 1e-12 * max_gain(&c));
        }
    }

    #[test]
    fn orthogonal_pair_peak_is_halved() {
        let c = cfg();
        let grid = AngularGrid::default();
        // spacing 2/8 in sin(az) puts the two matched beams on each other's nulls
        let az = (0.25f64).asin().to_degrees();
        let ws = [
            Beamformer::matched(&c, Direction::BORESIGHT),
            Beamformer::matched(&c, Direction::new(az, 0.0)),
        ];
        let overlap = crate::antenna::inner(ws[0].weights(), ws[1].weights()).norm();
        assert!(overlap < 1e-12);
        let m = drop_gain_map(&c, &ws, &grid).unwrap();
        let peak = m.max();
        let slow = brute_force_map(&c, &ws, &grid);
        let slow_peak = slow.iter().copied().fold(0.0, f64::max);
        assert!((peak - slow_peak).abs() < 1e-9 * max_gain(&c));
        assert!(peak <= max_gain(&c) / 2.0 + 1e-9);
    }

    #[test]
    fn empty_beamformer_list() {
        assert!(matches!(
            drop_gain_map(&cfg(), &[], &AngularGrid::default()),
            Err(Error::NoBeamformers)
        ));
    }

    #[test]
    fn argmax_tie_break() {
        let grid = AngularGrid::parse("-4:4:2,-2:2:1").unwrap();
        let mut values = vec![0.0; grid.len()];
        for d in [Direction::new(-4.0, 0.0), Direction::new(2.0, -1.0), Direction::new(-2.0, 2.0)] {
            values[grid.index_of(d).unwrap()] = 1.0;
        }
        let m = GainMap { grid, values };
        assert_eq!(m.argmax(), Direction::new(2.0, -1.0));
    }
}
