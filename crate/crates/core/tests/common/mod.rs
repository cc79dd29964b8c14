//! Helpers shared by the integration tests.
#![allow(dead_code)]

use mimo_exposure::linalg::HermitianMatrix;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn to_nalgebra(m: &HermitianMatrix) -> DMatrix<Complex64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m.get(i, j))
}

pub fn from_nalgebra(m: &DMatrix<Complex64>) -> HermitianMatrix {
    let n = m.nrows();
    let data = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect();
    HermitianMatrix::from_row_major(n, data).expect("square matrix")
}

/// Eigenvalues in descending order with their eigenvectors.
pub fn dense_eigen(m: &HermitianMatrix) -> Vec<(f64, Vec<Complex64>)> {
    let eig = to_nalgebra(m).symmetric_eigen();
    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..m.dim())
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

pub fn complex_gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Hermitian PSD matrix `Q diag(lambda) Q^H` with a Haar-like random unitary.
pub fn psd_with_spectrum<R: Rng>(rng: &mut R, eigenvalues: &[f64]) -> HermitianMatrix {
    let n = eigenvalues.len();
    let q = complex_gaussian(rng, n, n).qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        eigenvalues.iter().map(|l| Complex64::new(*l, 0.0)),
    ));
    let m = &q * d * q.adjoint();
    // symmetrize away rounding
    let m = (&m + m.adjoint()).scale(0.5);
    from_nalgebra(&m)
}

/// `|<a, b>|` for unit vectors.
pub fn alignment(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm()
}

/// Random Hermitian PSD matrix of size `n` whose relative spectral gap
/// `(l1 - l2) / l1` is at least 1%. Alternates between a prescribed
/// spectrum and a Wishart-type `B B^H` draw, rejecting small gaps.
pub fn random_gapped_psd<R: Rng>(rng: &mut R, n: usize, case: usize) -> HermitianMatrix {
    if case.is_multiple_of(2) {
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let gap = if case.is_multiple_of(4) { 0.01 } else { rng.random_range(0.01..0.5) };
        let l2 = scale * (1.0 - gap);
        let mut eig = vec![scale, l2];
        eig.extend((2..n).map(|_| rng.random_range(0.0..l2)));
        return psd_with_spectrum(rng, &eig);
    }
    loop {
        let rank = rng.random_range(1..=n);
        let b = complex_gaussian(rng, n, rank);
        let m = from_nalgebra(&(&b * b.adjoint()));
        let eig = dense_eigen(&m);
        if eig.len() < 2 || eig[0].0 - eig[1].0 >= 0.01 * eig[0].0 {
            return m;
        }
    }
}
