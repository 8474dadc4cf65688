//! Homodyne statistics of a displaced single-photon pulse after loss.

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_2_PI, SQRT_2};

use super::ChannelPair;

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("transmissivity must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// Density of the q-quadrature outcome for `D(alpha)|1>` sent through a
/// pure-loss channel of transmissivity `eta`.
///
/// Evaluated in the factored form `4 eta (x - alpha sqrt(eta))^2 + (1 - eta)`
/// of the polynomial prefactor, which makes nonnegativity exact.
pub fn dv_homodyne_pdf(x: f64, alpha: f64, eta: f64) -> f64 {
    let y = x - alpha * eta.sqrt();
    FRAC_2_PI.sqrt() * (-2.0 * y * y).exp() * (4.0 * eta * y * y + (1.0 - eta))
}

pub fn dv_homodyne_ln_pdf(x: f64, alpha: f64, eta: f64) -> f64 {
    let y = x - alpha * eta.sqrt();
    0.5 * FRAC_2_PI.ln() - 2.0 * y * y + (4.0 * eta * y * y + (1.0 - eta)).ln()
}

/// Cumulative distribution matching [`dv_homodyne_pdf`].
pub fn dv_homodyne_cdf(x: f64, alpha: f64, eta: f64) -> f64 {
    let y = x - alpha * eta.sqrt();
    let gauss_part = 0.5 * erfc(-SQRT_2 * y);
    let cdf = FRAC_2_PI.sqrt() * (-2.0 * y * y).exp() * (-y) * eta + gauss_part;
    cdf.clamp(0.0, 1.0)
}

pub fn dv_homodyne_pdf_checked(x: f64, alpha: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(dv_homodyne_pdf(x, alpha, eta))
}

pub fn dv_homodyne_cdf_checked(x: f64, alpha: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(dv_homodyne_cdf(x, alpha, eta))
}

/// Relative entropy between the post- and pre-change displaced-single-photon
/// homodyne densities, by adaptive quadrature.
pub fn cre_dv_homodyne(ch: &ChannelPair, alpha: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::Domain(format!("amplitude must be finite, got {alpha}")));
    }
    if ch.eta1() == ch.eta2() {
        return Ok(0.0);
    }
    let c1 = alpha * ch.eta1().sqrt();
    let c2 = alpha * ch.eta2().sqrt();
    // Both densities carry a exp(-2 y^2) envelope: 12 sigma with sigma = 1/2.
    let (lo, hi) = (c1.min(c2) - 6.0, c1.max(c2) + 6.0);
    let (e1, e2) = (ch.eta1(), ch.eta2());
    let integrand = |x: f64| {
        let p2 = dv_homodyne_pdf(x, alpha, e2);
        // p1 vanishes only on the lossless node at c1, a null set
        if p2 == 0.0 || dv_homodyne_pdf(x, alpha, e1) == 0.0 {
            return 0.0;
        }
        p2 * (dv_homodyne_ln_pdf(x, alpha, e2) - dv_homodyne_ln_pdf(x, alpha, e1))
    };
    let opts = QuadOptions {
        abs_tol: 1e-9,
        rel_tol: 0.0,
        max_intervals: 4000,
    };
    let ctx = |e: Error| e.context("displaced single-photon relative entropy");
    // A lossless pre-change channel puts an exact zero of the pre density at
    // c1. Substituting x = c1 -+ t^2 on each side turns the log singularity
    // into a continuous t ln t.
    let value = if e1 == 1.0 {
        let left = integrate(|t| 2.0 * t * integrand(c1 - t * t), 0.0, (c1 - lo).sqrt(), opts).map_err(ctx)?;
        let right = integrate(|t| 2.0 * t * integrand(c1 + t * t), 0.0, (hi - c1).sqrt(), opts).map_err(ctx)?;
        left.value + right.value
    } else {
        integrate(integrand, lo, hi, opts).map_err(ctx)?.value
    };
    Ok(value.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_vacuum_limit() {
        for &x in &[-1.0, 0.0, 0.3, 2.0] {
            let gauss = FRAC_2_PI.sqrt() * (-2.0 * x * x as f64).exp();
            assert!((dv_homodyne_pdf(x, 3.0, 0.0) - gauss).abs() < 1e-15);
        }
    }

    #[test]
    fn fock_node_at_center() {
        assert_eq!(dv_homodyne_pdf(0.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn expanded_polynomial_agrees() {
        for &(x, a, e) in &[(0.3, 10.0, 0.9), (-1.2, 2.0, 0.4), (4.0, 5.0, 0.3)] {
            let raw = FRAC_2_PI.sqrt()
                * (-2.0 * (x - a * f64::sqrt(e)).powi(2)).exp()
                * (4.0 * a * a * e * e + e * (4.0 * x * x - 1.0) - 8.0 * a * e.powf(1.5) * x + 1.0);
            let p = dv_homodyne_pdf(x, a, e);
            assert!((raw - p).abs() < 1e-12 * (1.0 + p), "{raw} vs {p}");
        }
    }

    #[test]
    fn cdf_center_and_tails() {
        let (a, e) = (10.0, 0.9);
        let c = a * f64::sqrt(e);
        assert!((dv_homodyne_cdf(c, a, e) - 0.5).abs() < 1e-15);
        assert!(dv_homodyne_cdf(c + 40.0, a, e) == 1.0);
        assert!(dv_homodyne_cdf(c - 40.0, a, e) == 0.0);
    }

    #[test]
    fn identical_channels_have_zero_cre() {
        let ch = ChannelPair::new(0.8, 0.8).unwrap();
        assert!(cre_dv_homodyne(&ch, 10.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn checked_variants_validate_eta() {
        assert!(matches!(dv_homodyne_pdf_checked(0.0, 1.0, 1.5), Err(Error::Domain(_))));
        assert!(matches!(dv_homodyne_cdf_checked(0.0, 1.0, -0.1), Err(Error::Domain(_))));
    }
}
