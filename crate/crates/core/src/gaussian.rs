//! Gaussian distributions, their relative entropies, and the phase-space
//! covariance algebra of the Hadamard-splitter transmitter.
//!
//! Phase-space states use the interleaved mode layout `(q1, p1, q2, p2, ...)`
//! with the vacuum covariance equal to `I / 4`.

use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Covariance of the vacuum state, per quadrature.
pub const VACUUM_VARIANCE: f64 = 0.25;

/// Largest number of modes the Hadamard construction will build by default.
pub const DEFAULT_MAX_MODES: usize = 1024;

const SYMMETRY_TOL: f64 = 1e-12;
const PD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D {
    mean: f64,
    variance: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::Domain(format!(
                "gaussian needs finite mean and positive variance, got N({mean}, {variance})"
            )));
        }
        Ok(Gaussian1D { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (d * d / self.variance + (2.0 * std::f64::consts::PI * self.variance).ln())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }
}

/// An n-variate Gaussian with a validated symmetric positive-definite covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianVec {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianVec {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() || cov.nrows() != mean.len() {
            return Err(Error::Usage(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.is_empty() {
            return Err(Error::Usage("zero-dimensional gaussian".into()));
        }
        check_symmetric(&cov)?;
        factor(&cov)?;
        Ok(GaussianVec { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower-triangular Cholesky factor of the covariance.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        factor(&self.cov)
            .expect("validated at construction")
            .l()
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::Domain(format!(
                    "covariance not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Cholesky factorization that also rejects near-singular pivots.
fn factor(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let chol = Cholesky::new(m.clone())
        .ok_or_else(|| Error::Domain("covariance is not positive definite".into()))?;
    let l = chol.l_dirty();
    let min_pivot = (0..m.nrows()).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
    if min_pivot * min_pivot <= PD_TOL {
        return Err(Error::Domain(format!(
            "covariance is numerically singular (smallest squared pivot {:e})",
            min_pivot * min_pivot
        )));
    }
    Ok(chol)
}

/// `S(p2 || p1)` in nats for univariate Gaussians.
pub fn kl_gaussian_1d(p2: &Gaussian1D, p1: &Gaussian1D) -> f64 {
    let ratio = p2.variance / p1.variance;
    let d = p2.mean - p1.mean;
    // ratio - ln(ratio) - 1 loses all digits near ratio = 1 without this form.
    let var_term = if (ratio - 1.0).abs() < 1e-4 {
        let t = ratio - 1.0;
        t * t / 2.0 - t * t * t / 3.0 + t.powi(4) / 4.0
    } else {
        ratio - ratio.ln() - 1.0
    };
    (0.5 * var_term + d * d / (2.0 * p1.variance)).max(0.0)
}

/// `S(p2 || p1)` in nats for n-variate Gaussians, via Cholesky factors.
pub fn kl_gaussian_nd(p2: &GaussianVec, p1: &GaussianVec) -> Result<f64> {
    if p2.dim() != p1.dim() {
        return Err(Error::Usage(format!(
            "dimension mismatch: {} vs {}",
            p2.dim(),
            p1.dim()
        )));
    }
    let n = p1.dim() as f64;
    let l1 = factor(&p1.cov)?.l();
    let l2 = factor(&p2.cov)?.l();
    // tr(K1^-1 K2) = ||L1^-1 L2||_F^2
    let a = l1
        .solve_lower_triangular(&l2)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let trace = a.norm_squared();
    let logdet1: f64 = l1.diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let logdet2: f64 = l2.diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let du = &p2.mean - &p1.mean;
    let y = l1
        .solve_lower_triangular(&du)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let kl = 0.5 * (trace - (logdet2 - logdet1) - n) + 0.5 * y.norm_squared();
    Ok(kl.max(0.0))
}

/// Real form of the `2^k`-mode Hadamard unitary acting on interleaved
/// `(q, p)` pairs: `H_1 = I_2`, `H_2m = [[H_m, H_m], [H_m, -H_m]] / sqrt(2)`.
pub fn hadamard_real_form(k: u32) -> Result<DMatrix<f64>> {
    hadamard_real_form_bounded(k, DEFAULT_MAX_MODES)
}

pub fn hadamard_real_form_bounded(k: u32, max_modes: usize) -> Result<DMatrix<f64>> {
    if k >= usize::BITS - 2 || (1usize << k) > max_modes {
        return Err(Error::Resource(format!(
            "2^{k} modes exceeds the configured maximum of {max_modes}"
        )));
    }
    let mut h = DMatrix::<f64>::identity(2, 2);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..k {
        let m = h.nrows();
        let mut next = DMatrix::<f64>::zeros(2 * m, 2 * m);
        next.view_mut((0, 0), (m, m)).copy_from(&(&h * s));
        next.view_mut((0, m), (m, m)).copy_from(&(&h * s));
        next.view_mut((m, 0), (m, m)).copy_from(&(&h * s));
        next.view_mut((m, m), (m, m)).copy_from(&(&h * -s));
        h = next;
    }
    Ok(h)
}

/// A multimode Gaussian state in the interleaved `(q, p)` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl PhaseSpaceState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() || cov.nrows() != mean.len() || mean.len() % 2 != 0 || mean.is_empty()
        {
            return Err(Error::Usage(format!(
                "phase-space state needs a 2n mean and 2n x 2n covariance, got {} and {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        check_symmetric(&cov)?;
        factor(&cov)?;
        Ok(PhaseSpaceState { mean, cov })
    }

    pub fn vacuum(modes: usize) -> Self {
        PhaseSpaceState {
            mean: DVector::zeros(2 * modes),
            cov: DMatrix::identity(2 * modes, 2 * modes) * VACUUM_VARIANCE,
        }
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Displaces every mode's q-quadrature by `alpha`.
    pub fn displaced_q(mut self, alpha: f64) -> Self {
        for l in 0..self.modes() {
            self.mean[2 * l] += alpha;
        }
        self
    }
}

fn check_modes(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::Usage("entangled block needs at least one mode".into()));
    }
    if n > DEFAULT_MAX_MODES {
        return Err(Error::Resource(format!(
            "{n} modes exceeds the configured maximum of {DEFAULT_MAX_MODES}"
        )));
    }
    Ok(())
}

/// Covariance after spreading one squeezed vacuum (squeeze `r`) over `n`
/// modes with an equal splitter, in closed form.
pub fn entangled_block_cov_closed(n: usize, r: f64) -> Result<DMatrix<f64>> {
    check_modes(n)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("squeezing must be finite and >= 0, got {r}")));
    }
    let nf = n as f64;
    let (em, ep) = ((-2.0 * r).exp(), (2.0 * r).exp());
    let q_diag = (em + nf - 1.0) / (4.0 * nf);
    let p_diag = (ep + nf - 1.0) / (4.0 * nf);
    let q_off = (em - 1.0) / (4.0 * nf);
    let p_off = (ep - 1.0) / (4.0 * nf);
    let mut v = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for l in 0..n {
        for m in 0..n {
            let same = l == m;
            v[(2 * l, 2 * m)] = if same { q_diag } else { q_off };
            v[(2 * l + 1, 2 * m + 1)] = if same { p_diag } else { p_off };
        }
    }
    Ok(v)
}

/// Brute-force `H V Hᵀ` with `V = V_1 ⊕ I/4`, for `n` a power of two.
pub fn entangled_block_cov_oracle(n: usize, r: f64) -> Result<DMatrix<f64>> {
    check_modes(n)?;
    if !n.is_power_of_two() {
        return Err(Error::Usage(format!(
            "hadamard construction needs a power-of-two mode count, got {n}"
        )));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("squeezing must be finite and >= 0, got {r}")));
    }
    let h = hadamard_real_form(n.trailing_zeros())?;
    let mut v = DMatrix::<f64>::identity(2 * n, 2 * n) * VACUUM_VARIANCE;
    v[(0, 0)] = (-2.0 * r).exp() / 4.0;
    v[(1, 1)] = (2.0 * r).exp() / 4.0;
    Ok(&h * v * h.transpose())
}

/// Squeezed-vacuum block of `n` modes, each displaced by `alpha` in q.
pub fn entangled_block_state(n: usize, r: f64, alpha: f64) -> Result<PhaseSpaceState> {
    let cov = entangled_block_cov_closed(n, r)?;
    Ok(PhaseSpaceState::new(DVector::zeros(2 * n), cov)?.displaced_q(alpha))
}

/// Pure-loss channel of transmissivity `eta` acting on every mode.
pub fn apply_loss(state: &PhaseSpaceState, eta: f64) -> Result<PhaseSpaceState> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("transmissivity must lie in (0, 1], got {eta}")));
    }
    let dim = state.cov.nrows();
    let mean = &state.mean * eta.sqrt();
    let cov = &state.cov * eta + DMatrix::identity(dim, dim) * ((1.0 - eta) * VACUUM_VARIANCE);
    Ok(PhaseSpaceState { mean, cov })
}

/// Joint distribution of q-quadrature homodyne outcomes on every mode.
pub fn homodyne_marginal(state: &PhaseSpaceState) -> Result<GaussianVec> {
    let n = state.modes();
    let mean = DVector::from_fn(n, |l, _| state.mean[2 * l]);
    let cov = DMatrix::from_fn(n, n, |l, m| state.cov[(2 * l, 2 * m)]);
    GaussianVec::new(mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_1d_identical_is_zero() {
        let p = Gaussian1D::new(1.3, 0.7).unwrap();
        assert_eq!(kl_gaussian_1d(&p, &p), 0.0);
    }

    #[test]
    fn kl_1d_variance_ratio() {
        let p2 = Gaussian1D::new(0.0, 2.0).unwrap();
        let p1 = Gaussian1D::new(0.0, 1.0).unwrap();
        let expected = (2.0 - 2f64.ln() - 1.0) / 2.0;
        assert!((kl_gaussian_1d(&p2, &p1) - expected).abs() < 1e-15);
    }

    #[test]
    fn kl_1d_baseline_value() {
        let a = 101f64.sqrt();
        let p2 = Gaussian1D::new(0.85f64.sqrt() * a, 0.25).unwrap();
        let p1 = Gaussian1D::new(0.9f64.sqrt() * a, 0.25).unwrap();
        assert!((kl_gaussian_1d(&p2, &p1) - 0.1443).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_variance() {
        assert!(matches!(Gaussian1D::new(0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(Gaussian1D::new(0.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn kl_nd_unit_shift() {
        let cov = DMatrix::identity(2, 2) * 0.25;
        let p2 = GaussianVec::new(DVector::from_vec(vec![1.0, 0.0]), cov.clone()).unwrap();
        let p1 = GaussianVec::new(DVector::zeros(2), cov).unwrap();
        assert!((kl_gaussian_nd(&p2, &p1).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kl_nd_dimension_mismatch() {
        let a = GaussianVec::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let b = GaussianVec::new(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
        assert!(matches!(kl_gaussian_nd(&a, &b), Err(Error::Usage(_))));
    }

    #[test]
    fn singular_cov_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            GaussianVec::new(DVector::zeros(2), cov),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hadamard_small_cases() {
        assert_eq!(hadamard_real_form(0).unwrap(), DMatrix::identity(2, 2));
        let h = hadamard_real_form(1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            s, 0.0, s, 0.0,
            0.0, s, 0.0, s,
            s, 0.0, -s, 0.0,
            0.0, s, 0.0, -s,
        ]);
        assert!((h - expected).amax() < 1e-15);
    }

    #[test]
    fn hadamard_bound() {
        assert!(matches!(hadamard_real_form_bounded(5, 16), Err(Error::Resource(_))));
        assert!(hadamard_real_form_bounded(4, 16).is_ok());
    }

    #[test]
    fn closed_form_single_mode_and_vacuum() {
        let v = entangled_block_cov_closed(1, 0.7).unwrap();
        assert!((v[(0, 0)] - (-1.4f64).exp() / 4.0).abs() < 1e-15);
        assert!((v[(1, 1)] - 1.4f64.exp() / 4.0).abs() < 1e-15);
        let v = entangled_block_cov_closed(5, 0.0).unwrap();
        assert!((v - DMatrix::identity(10, 10) * 0.25).amax() < 1e-15);
        assert!(matches!(entangled_block_cov_closed(0, 0.1), Err(Error::Usage(_))));
    }

    #[test]
    fn oracle_requires_power_of_two() {
        assert!(matches!(entangled_block_cov_oracle(6, 0.1), Err(Error::Usage(_))));
        let v1 = entangled_block_cov_oracle(1, 0.4).unwrap();
        assert!((v1 - entangled_block_cov_closed(1, 0.4).unwrap()).amax() < 1e-15);
    }

    #[test]
    fn loss_affine_map() {
        let v = entangled_block_cov_closed(2, 0.5).unwrap();
        let s = PhaseSpaceState::new(DVector::zeros(4), v).unwrap();
        let out = apply_loss(&s, 0.9).unwrap();
        let expected = 0.9 * ((-1f64).exp() + 1.0) / 8.0 + 0.025;
        assert!((out.cov()[(0, 0)] - expected).abs() < 1e-15);
        assert!(matches!(apply_loss(&s, 0.0), Err(Error::Domain(_))));
        assert!(matches!(apply_loss(&s, 1.1), Err(Error::Domain(_))));
        assert_eq!(apply_loss(&s, 1.0).unwrap(), s);
    }

    #[test]
    fn loss_to_vacuum_limit() {
        let s = entangled_block_state(4, 1.2, 3.0).unwrap();
        let out = apply_loss(&s, 1e-14).unwrap();
        assert!((out.cov() - DMatrix::identity(8, 8) * 0.25).amax() < 1e-12);
        assert!(out.mean().amax() < 1e-6);
    }

    #[test]
    fn vacuum_marginal() {
        let g = homodyne_marginal(&PhaseSpaceState::vacuum(2)).unwrap();
        assert_eq!(g.mean(), &DVector::zeros(2));
        assert_eq!(g.cov(), &(DMatrix::identity(2, 2) * 0.25));
    }
}
