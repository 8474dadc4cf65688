use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use std::f64::consts::{LN_2, PI};

/// Shannon capacity (bits per pulse) of the binary-input AWGN channel seen by
/// a homodyne receiver on BPSK coherent states with `eta * n` received photons.
pub fn bpsk_awgn_capacity(eta: f64, n: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) || !(n >= 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!(
            "capacity needs eta in [0, 1] and finite n >= 0, got eta={eta}, n={n}"
        )));
    }
    let snr = eta * n;
    if snr == 0.0 {
        return Ok(0.0);
    }
    let var = 1.0 / (4.0 * snr);
    let sigma = var.sqrt();
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let integrand = |x: f64| {
        let d = x - 1.0;
        let t = 2.0 * x / var;
        // log(1 + e^-t) without overflow
        let softplus = (-t).max(0.0) + (-t.abs()).exp().ln_1p();
        norm * (-d * d / (2.0 * var)).exp() * softplus / LN_2
    };
    let r = integrate(integrand, 1.0 - 12.0 * sigma, 1.0 + 12.0 * sigma, QuadOptions::abs(1e-10))
        .map_err(|e| e.context("BPSK-AWGN capacity"))?;
    Ok((1.0 - r.value).clamp(0.0, 1.0))
}
