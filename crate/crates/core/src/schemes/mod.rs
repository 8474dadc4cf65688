//! Transmitter/receiver schemes: their receiver-output distributions before
//! and after a loss change, and the per-pulse relative entropy between them.

mod capacity;
mod dv;

pub use capacity::bpsk_awgn_capacity;
pub use dv::{
    cre_dv_homodyne, dv_homodyne_cdf, dv_homodyne_cdf_checked, dv_homodyne_ln_pdf,
    dv_homodyne_pdf, dv_homodyne_pdf_checked,
};

use crate::error::{Error, Result};
use crate::gaussian::{
    kl_gaussian_1d, kl_gaussian_nd, Gaussian1D, GaussianVec, DEFAULT_MAX_MODES, VACUUM_VARIANCE,
};
use nalgebra::{DMatrix, DVector};
use std::fmt;

/// Pre- and post-change transmissivities, `0 < eta2 <= eta1 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPair {
    eta1: f64,
    eta2: f64,
}

impl ChannelPair {
    pub fn new(eta1: f64, eta2: f64) -> Result<Self> {
        if !(eta2 > 0.0 && eta2 <= eta1 && eta1 <= 1.0) {
            return Err(Error::Domain(format!(
                "channel needs 0 < eta2 <= eta1 <= 1, got eta1={eta1}, eta2={eta2}"
            )));
        }
        Ok(ChannelPair { eta1, eta2 })
    }

    /// Channel whose transmissivity drops by the factor `eta_tap`.
    pub fn from_tap(eta1: f64, eta_tap: f64) -> Result<Self> {
        if !(eta_tap > 0.0 && eta_tap <= 1.0) {
            return Err(Error::Domain(format!("tap transmissivity must lie in (0, 1], got {eta_tap}")));
        }
        ChannelPair::new(eta1, eta1 * eta_tap)
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    pub fn eta2(&self) -> f64 {
        self.eta2
    }

    pub fn eta_tap(&self) -> f64 {
        self.eta2 / self.eta1
    }

    /// Same channel with the pre- and post-change transmissivity both `eta1`.
    pub fn unchanged(&self) -> Self {
        ChannelPair { eta1: self.eta1, eta2: self.eta1 }
    }

    fn amplitude_gap(&self) -> f64 {
        self.eta1.sqrt() - self.eta2.sqrt()
    }
}

/// Mean photon numbers per pulse: `n` classical (coherent) and `na` quantum
/// augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub n: f64,
    pub na: f64,
}

impl EnergyParams {
    pub fn new(n: f64, na: f64) -> Result<Self> {
        if !(n >= 0.0 && na >= 0.0) || !n.is_finite() || !na.is_finite() {
            return Err(Error::Domain(format!(
                "photon numbers must be finite and >= 0, got N={n}, Na={na}"
            )));
        }
        Ok(EnergyParams { n, na })
    }

    /// Squeeze parameter of a single-mode squeezed vacuum carrying `na` photons.
    pub fn squeeze(&self) -> f64 {
        squeeze_for_photons(self.na)
    }
}

/// `asinh(sqrt(photons))`, written through `ln_1p` so tiny photon numbers keep
/// full precision.
pub fn squeeze_for_photons(photons: f64) -> f64 {
    let x = photons.sqrt();
    (x + photons / (1.0 + (1.0 + photons).sqrt())).ln_1p()
}

/// Relative entropy that may be genuinely infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cre {
    Finite(f64),
    Infinite,
}

impl Cre {
    /// Numeric value, with `Infinite` mapped to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            Cre::Finite(v) => v,
            Cre::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Cre::Finite(v) => Some(v),
            Cre::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Cre::Infinite)
    }
}

impl fmt::Display for Cre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cre::Finite(v) => write!(f, "{v:.17e}"),
            Cre::Infinite => f.write_str("inf"),
        }
    }
}

/// Derivative that diverges at the origin of its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Derivative {
    Finite(f64),
    Diverges,
}

/// Homodyne variance of a squeezed pulse (squeeze `r`) after loss `eta`.
pub fn squeezed_variance(eta: f64, r: f64) -> f64 {
    (eta * (-2.0 * r).exp() + 1.0 - eta) * VACUUM_VARIANCE
}

/// Unaugmented coherent light with `N + Na` photons, homodyne receiver.
pub fn cre_coherent(ch: &ChannelPair, e: &EnergyParams) -> f64 {
    let gap = ch.amplitude_gap();
    2.0 * (e.n + e.na) * gap * gap
}

/// Displaced squeezed light with `N` coherent and `Na` squeezing photons.
pub fn cre_squeezed(ch: &ChannelPair, e: &EnergyParams) -> f64 {
    cre_squeezed_at(ch, e.n, e.squeeze())
}

/// [`cre_squeezed`] parametrized directly by the squeeze parameter `r`.
pub fn cre_squeezed_at(ch: &ChannelPair, n: f64, r: f64) -> f64 {
    let alpha = n.sqrt();
    let p2 = Gaussian1D::new(ch.eta2.sqrt() * alpha, squeezed_variance(ch.eta2, r))
        .expect("squeezed variance is positive");
    let p1 = Gaussian1D::new(ch.eta1.sqrt() * alpha, squeezed_variance(ch.eta1, r))
        .expect("squeezed variance is positive");
    kl_gaussian_1d(&p2, &p1)
}

/// Limit of [`cre_squeezed`] as the squeezing photon number grows without
/// bound: the variances tend to `(1 - eta_j) / 4`.
pub fn cre_squeezed_limit(ch: &ChannelPair, n: f64) -> Result<f64> {
    if ch.eta1 >= 1.0 {
        return Err(Error::Domain(
            "saturation limit diverges for a lossless pre-change channel".into(),
        ));
    }
    let ratio = (1.0 - ch.eta2) / (1.0 - ch.eta1);
    let gap = ch.amplitude_gap();
    Ok(0.5 * (ratio - ratio.ln() - 1.0) + 2.0 * n * gap * gap / (1.0 - ch.eta1))
}

/// Exact `dS/dNa` of [`cre_squeezed`]; diverges at `Na = 0`.
pub fn cre_squeezed_derivative(ch: &ChannelPair, e: &EnergyParams) -> Derivative {
    if e.na <= 0.0 {
        return Derivative::Diverges;
    }
    let r = e.squeeze();
    let (eta1, eta2) = (ch.eta1, ch.eta2);
    let v1 = squeezed_variance(eta1, r);
    let v2 = squeezed_variance(eta2, r);
    let decay = (-2.0 * r).exp();
    let gap = ch.amplitude_gap();
    // dS/dr, then divide by dNa/dr = 2 sinh r cosh r
    let mean_term = e.n * gap * gap * eta1 * decay / (4.0 * v1 * v1);
    let var_term = (v2 - v1) * (eta1 * v2 - eta2 * v1) * decay / (4.0 * v1 * v1 * v2);
    Derivative::Finite((mean_term + var_term) / (2.0 * r.sinh() * r.cosh()))
}

/// Augmentation photon number above which squeezing no longer beats spending
/// the same energy on the coherent amplitude.
pub fn squeezing_threshold(ch: &ChannelPair, n: f64) -> Result<f64> {
    if ch.eta1 >= 1.0 {
        return Err(Error::Domain("threshold undefined for a lossless pre-change channel".into()));
    }
    Ok(n * ch.eta1 / (1.0 - ch.eta1))
}

/// Block homodyne statistics of `n` coherent pulses (amplitude `alpha`)
/// sharing one squeezed vacuum (squeeze `s`) through an equal splitter, after
/// loss `eta`.
pub fn entangled_homodyne_stats(n: usize, s: f64, alpha: f64, eta: f64) -> Result<GaussianVec> {
    check_block(n)?;
    let nf = n as f64;
    let decay = (-2.0 * s).exp();
    let diag = eta * (decay + nf - 1.0) / (4.0 * nf) + (1.0 - eta) / 4.0;
    let off = eta * (decay - 1.0) / (4.0 * nf);
    let cov = DMatrix::from_fn(n, n, |l, m| if l == m { diag } else { off });
    let mean = DVector::from_element(n, eta.sqrt() * alpha);
    GaussianVec::new(mean, cov)
}

fn check_block(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::Usage("entangled block length must be >= 1".into()));
    }
    if n > DEFAULT_MAX_MODES {
        return Err(Error::Resource(format!(
            "block length {n} exceeds the configured maximum of {DEFAULT_MAX_MODES}"
        )));
    }
    Ok(())
}

/// Per-pulse relative entropy of the `n`-pulse entanglement-augmented scheme,
/// seeded with `n * Na` squeezing photons so each pulse carries `Na`.
pub fn cre_entangled(ch: &ChannelPair, e: &EnergyParams, n: usize) -> Result<f64> {
    check_block(n)?;
    let s = squeeze_for_photons(n as f64 * e.na);
    cre_entangled_fixed_seed(ch, e.n, s, n)
}

/// As [`cre_entangled`] with the seed squeeze parameter held at `s`.
pub fn cre_entangled_fixed_seed(ch: &ChannelPair, n_photons: f64, s: f64, n: usize) -> Result<f64> {
    check_block(n)?;
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("seed squeezing must be finite and >= 0, got {s}")));
    }
    let alpha = n_photons.sqrt();
    let p2 = entangled_homodyne_stats(n, s, alpha, ch.eta2)?;
    let p1 = entangled_homodyne_stats(n, s, alpha, ch.eta1)?;
    Ok(kl_gaussian_nd(&p2, &p1)? / n as f64)
}

/// Binary relative entropy in terms of the probability of outcome 1.
pub fn binary_kl(post_one: f64, pre_one: f64) -> Cre {
    fn term(p: f64, q: f64) -> Option<f64> {
        if p == 0.0 {
            Some(0.0)
        } else if q == 0.0 {
            None
        } else {
            Some(p * (p / q).ln())
        }
    }
    match (term(post_one, pre_one), term(1.0 - post_one, 1.0 - pre_one)) {
        (Some(a), Some(b)) => Cre::Finite((a + b).max(0.0)),
        _ => Cre::Infinite,
    }
}

/// Click probabilities `(pre, post)` of a Kennedy receiver nulling the
/// pre-change amplitude with `residual` photons left over.
///
/// The residual amplitude adds to the post-change displacement.
pub fn kennedy_click_probabilities(ch: &ChannelPair, e: &EnergyParams, residual: f64) -> (f64, f64) {
    let alpha = (e.n + e.na).sqrt();
    let amp = ch.amplitude_gap() * alpha + residual.sqrt();
    (-(-residual).exp_m1(), -(-amp * amp).exp_m1())
}

pub fn cre_kennedy(ch: &ChannelPair, e: &EnergyParams, residual: f64) -> Result<Cre> {
    if !(residual >= 0.0) || !residual.is_finite() {
        return Err(Error::Domain(format!("residual photons must be finite and >= 0, got {residual}")));
    }
    let (pre, post) = kennedy_click_probabilities(ch, e, residual);
    Ok(binary_kl(post, pre))
}

/// Single-photon probe with a single-photon detector: the click probability
/// is the transmissivity.
pub fn cre_single_photon_spd(ch: &ChannelPair) -> Cre {
    binary_kl(ch.eta2, ch.eta1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    CoherentHomodyne,
    SqueezedHomodyne,
    EntangledHomodyne { n: usize },
    KennedyReceiver { residual: f64 },
    /// `D(sqrt(N))|1>` with homodyne detection; the Fock photon is the
    /// augmentation, so `Na` is not consulted.
    SinglePhotonHomodyne,
    /// `|1>` with a single-photon detector; requires `N = 0`.
    SinglePhotonSpd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Unmodulated,
    Bpsk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme {
    pub kind: SchemeKind,
    pub energy: EnergyParams,
    pub modulation: Modulation,
}

impl Scheme {
    pub fn new(kind: SchemeKind, energy: EnergyParams, modulation: Modulation) -> Result<Self> {
        let s = Scheme { kind, energy, modulation };
        s.validate()?;
        Ok(s)
    }

    pub fn unmodulated(kind: SchemeKind, energy: EnergyParams) -> Result<Self> {
        Scheme::new(kind, energy, Modulation::Unmodulated)
    }

    pub fn validate(&self) -> Result<()> {
        EnergyParams::new(self.energy.n, self.energy.na)?;
        match self.kind {
            SchemeKind::EntangledHomodyne { n } => check_block(n)?,
            SchemeKind::KennedyReceiver { residual } if !(residual >= 0.0) || !residual.is_finite() => {
                return Err(Error::Domain(format!("residual photons must be finite and >= 0, got {residual}")))
            }
            SchemeKind::SinglePhotonSpd if self.energy.n != 0.0 => {
                return Err(Error::Usage(
                    "single-photon detection scheme carries no coherent pulse (N must be 0)".into(),
                ))
            }
            _ => {}
        }
        if self.modulation == Modulation::Bpsk
            && !matches!(self.kind, SchemeKind::CoherentHomodyne | SchemeKind::SqueezedHomodyne)
        {
            return Err(Error::Usage(format!(
                "BPSK modulation is supported for single-pulse Gaussian homodyne schemes only, not {}",
                self.kind_label()
            )));
        }
        Ok(())
    }

    fn kind_label(&self) -> String {
        match self.kind {
            SchemeKind::CoherentHomodyne => "coherent".into(),
            SchemeKind::SqueezedHomodyne => "squeezed".into(),
            SchemeKind::EntangledHomodyne { n } => format!("entangled-n{n}"),
            SchemeKind::KennedyReceiver { residual } => format!("kennedy-neps{residual}"),
            SchemeKind::SinglePhotonHomodyne => "dv-homodyne".into(),
            SchemeKind::SinglePhotonSpd => "dv-spd".into(),
        }
    }

    /// Short series label used in CSV output.
    pub fn label(&self) -> String {
        match self.modulation {
            Modulation::Unmodulated => self.kind_label(),
            Modulation::Bpsk => format!("{}-bpsk", self.kind_label()),
        }
    }

    /// Pulses consumed by one observation.
    pub fn block_len(&self) -> usize {
        match self.kind {
            SchemeKind::EntangledHomodyne { n } => n,
            _ => 1,
        }
    }

    /// Per-pulse relative entropy between the unmodulated post- and pre-change
    /// receiver outputs.
    pub fn cre(&self, ch: &ChannelPair) -> Result<Cre> {
        let e = &self.energy;
        Ok(match self.kind {
            SchemeKind::CoherentHomodyne => Cre::Finite(cre_coherent(ch, e)),
            SchemeKind::SqueezedHomodyne => Cre::Finite(cre_squeezed(ch, e)),
            SchemeKind::EntangledHomodyne { n } => Cre::Finite(cre_entangled(ch, e, n)?),
            SchemeKind::KennedyReceiver { residual } => cre_kennedy(ch, e, residual)?,
            SchemeKind::SinglePhotonHomodyne => Cre::Finite(cre_dv_homodyne(ch, e.n.sqrt())?),
            SchemeKind::SinglePhotonSpd => cre_single_photon_spd(ch),
        })
    }
}

/// A concrete sampling distribution for one receiver observation.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationModel {
    Gauss1(Gaussian1D),
    GaussN(GaussianVec),
    /// Equal-weight mixture of `N(+mean, variance)` and `N(-mean, variance)`.
    Mixture2 { mean: f64, variance: f64 },
    /// Outcome 1 (a click) with probability `p1`, outcome 0 with `p0`.
    Binary { p0: f64, p1: f64 },
    DvHomodyne { alpha: f64, eta: f64 },
}

impl ObservationModel {
    pub fn binary(p1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::Domain(format!("probability must lie in [0, 1], got {p1}")));
        }
        Ok(ObservationModel::Binary { p0: 1.0 - p1, p1 })
    }

    pub fn mixture2(mean: f64, variance: f64) -> Result<Self> {
        Gaussian1D::new(mean, variance)?;
        Ok(ObservationModel::Mixture2 { mean, variance })
    }

    pub fn dv_homodyne(alpha: f64, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) || !alpha.is_finite() {
            return Err(Error::Domain(format!(
                "displaced-photon model needs finite alpha and eta in [0, 1], got {alpha}, {eta}"
            )));
        }
        Ok(ObservationModel::DvHomodyne { alpha, eta })
    }

    /// Scalar entries per observation (block length for `GaussN`).
    pub fn dim(&self) -> usize {
        match self {
            ObservationModel::GaussN(g) => g.dim(),
            _ => 1,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ObservationModel::Gauss1(_) => "gauss1",
            ObservationModel::GaussN(_) => "gaussn",
            ObservationModel::Mixture2 { .. } => "mixture2",
            ObservationModel::Binary { .. } => "binary",
            ObservationModel::DvHomodyne { .. } => "dv-homodyne",
        }
    }
}

/// Receiver-output distributions `(pre, post)` for a scheme over a channel.
pub fn observation_models(
    s: &Scheme,
    ch: &ChannelPair,
) -> Result<(ObservationModel, ObservationModel)> {
    s.validate()?;
    let e = &s.energy;
    let model = |eta: f64| -> Result<ObservationModel> {
        let gauss = |alpha: f64, var: f64| -> Result<ObservationModel> {
            let mean = eta.sqrt() * alpha;
            match s.modulation {
                Modulation::Unmodulated => Ok(ObservationModel::Gauss1(Gaussian1D::new(mean, var)?)),
                Modulation::Bpsk => ObservationModel::mixture2(mean, var),
            }
        };
        match s.kind {
            SchemeKind::CoherentHomodyne => gauss((e.n + e.na).sqrt(), VACUUM_VARIANCE),
            SchemeKind::SqueezedHomodyne => gauss(e.n.sqrt(), squeezed_variance(eta, e.squeeze())),
            SchemeKind::EntangledHomodyne { n } => {
                let seed = squeeze_for_photons(n as f64 * e.na);
                Ok(ObservationModel::GaussN(entangled_homodyne_stats(n, seed, e.n.sqrt(), eta)?))
            }
            SchemeKind::SinglePhotonHomodyne => ObservationModel::dv_homodyne(e.n.sqrt(), eta),
            SchemeKind::SinglePhotonSpd => ObservationModel::binary(eta),
            SchemeKind::KennedyReceiver { .. } => unreachable!("handled below"),
        }
    };
    if let SchemeKind::KennedyReceiver { residual } = s.kind {
        let (pre, post) = kennedy_click_probabilities(ch, e, residual);
        return Ok((ObservationModel::binary(pre)?, ObservationModel::binary(post)?));
    }
    Ok((model(ch.eta1)?, model(ch.eta2)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> ChannelPair {
        ChannelPair::new(0.9, 0.85).unwrap()
    }

    fn energy(n: f64, na: f64) -> EnergyParams {
        EnergyParams::new(n, na).unwrap()
    }

    #[test]
    fn channel_validation() {
        assert!(ChannelPair::new(0.8, 0.9).is_err());
        assert!(ChannelPair::new(1.1, 0.9).is_err());
        assert!(ChannelPair::new(0.9, 0.0).is_err());
        let ch = ChannelPair::from_tap(0.9, 0.9).unwrap();
        assert!((ch.eta2() - 0.81).abs() < 1e-15);
        assert!((ch.eta_tap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn stable_squeeze() {
        for &na in &[0.0, 1e-12, 1e-3, 0.1, 5.0, 1e6] {
            let r = squeeze_for_photons(na);
            assert!((r.sinh().powi(2) - na).abs() <= 1e-12 * na.max(1e-300) + 1e-300, "{na}");
        }
        assert!((squeeze_for_photons(0.1) - 0.31).abs() < 5e-3);
    }

    #[test]
    fn coherent_baseline() {
        assert!((cre_coherent(&fig2(), &energy(100.0, 1.0)) - 0.1443).abs() < 1e-3);
        assert_eq!(cre_coherent(&fig2().unchanged(), &energy(100.0, 1.0)), 0.0);
        assert_eq!(cre_coherent(&fig2(), &energy(0.0, 0.0)), 0.0);
    }

    #[test]
    fn squeezed_reduces_to_coherent() {
        let a = cre_squeezed(&fig2(), &energy(100.0, 0.0));
        let b = cre_coherent(&fig2(), &energy(100.0, 0.0));
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn squeezing_boost_ratio() {
        let e = energy(100.0, 0.1);
        let ratio = cre_squeezed(&fig2(), &e) / cre_coherent(&fig2(), &e);
        assert!((ratio - 1.72).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn limit_matches_large_squeezing() {
        let lim = cre_squeezed_limit(&fig2(), 100.0).unwrap();
        assert!((cre_squeezed(&fig2(), &energy(100.0, 1e6)) - lim).abs() < 0.01 * lim);
        assert!((cre_squeezed(&fig2(), &energy(100.0, 1e8)) - lim).abs() < 1e-4);
        let same = fig2().unchanged();
        assert!((cre_squeezed_limit(&same, 100.0).unwrap() - cre_squeezed(&same, &energy(100.0, 1e8))).abs() < 1e-4);
        assert!(cre_squeezed_limit(&ChannelPair::new(1.0, 0.9).unwrap(), 1.0).is_err());
    }

    #[test]
    fn derivative_diverges_at_zero() {
        assert_eq!(cre_squeezed_derivative(&fig2(), &energy(100.0, 0.0)), Derivative::Diverges);
        match cre_squeezed_derivative(&fig2().unchanged(), &energy(100.0, 0.3)) {
            Derivative::Finite(d) => assert!(d.abs() < 1e-12),
            Derivative::Diverges => panic!("finite expected"),
        }
    }

    #[test]
    fn threshold_values() {
        // 1 - 0.9 is not representable, so allow a couple of ulps
        assert!((squeezing_threshold(&fig2(), 100.0).unwrap() - 900.0).abs() <= 4.0 * f64::EPSILON * 900.0);
        assert_eq!(squeezing_threshold(&fig2(), 0.0).unwrap(), 0.0);
        let ch = ChannelPair::new(0.5, 0.4).unwrap();
        assert!((squeezing_threshold(&ch, 100.0).unwrap() - 100.0).abs() < 1e-12);
        assert!(squeezing_threshold(&ChannelPair::new(1.0, 0.5).unwrap(), 1.0).is_err());
    }

    #[test]
    fn squeezing_stops_helping_past_threshold() {
        let th = squeezing_threshold(&fig2(), 100.0).unwrap();
        let e = energy(100.0, 2.0 * th);
        assert!(cre_squeezed(&fig2(), &e) < cre_coherent(&fig2(), &e));
    }

    #[test]
    fn entangled_single_mode_is_squeezed() {
        let e = energy(100.0, 0.37);
        let a = cre_entangled(&fig2(), &e, 1).unwrap();
        assert!((a - cre_squeezed(&fig2(), &e)).abs() < 1e-12);
        assert!(cre_entangled(&fig2().unchanged(), &e, 8).unwrap().abs() < 1e-12);
        assert!(matches!(cre_entangled(&fig2(), &e, 2048), Err(Error::Resource(_))));
    }

    #[test]
    fn fixed_seed_edges() {
        let z = cre_entangled_fixed_seed(&fig2(), 100.0, 0.0, 4).unwrap();
        assert!((z - cre_coherent(&fig2(), &energy(100.0, 0.0))).abs() < 1e-12);
        let s: f64 = 0.6;
        let one = cre_entangled_fixed_seed(&fig2(), 100.0, s, 1).unwrap();
        let sq = cre_squeezed(&fig2(), &energy(100.0, s.sinh().powi(2)));
        assert!((one - sq).abs() < 1e-12);
    }

    #[test]
    fn kennedy_sentinel_and_zero() {
        let e = energy(100.0, 1.0);
        assert_eq!(cre_kennedy(&fig2(), &e, 0.0).unwrap(), Cre::Infinite);
        assert_eq!(cre_kennedy(&fig2().unchanged(), &e, 0.0).unwrap(), Cre::Finite(0.0));
        let v = cre_kennedy(&fig2().unchanged(), &e, 0.3).unwrap().value();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn spd_values() {
        let ch = ChannelPair::new(0.9, 0.81).unwrap();
        assert!((cre_single_photon_spd(&ch).value() - 0.03661).abs() < 1e-5);
        assert_eq!(cre_single_photon_spd(&ch.unchanged()), Cre::Finite(0.0));
        assert_eq!(cre_single_photon_spd(&ChannelPair::new(1.0, 0.9).unwrap()), Cre::Infinite);
    }

    #[test]
    fn scheme_validation() {
        let e = energy(100.0, 1.0);
        assert!(Scheme::unmodulated(SchemeKind::SinglePhotonSpd, e).is_err());
        assert!(Scheme::new(SchemeKind::EntangledHomodyne { n: 2 }, e, Modulation::Bpsk).is_err());
        assert!(Scheme::new(SchemeKind::KennedyReceiver { residual: 0.1 }, e, Modulation::Bpsk).is_err());
        assert!(Scheme::unmodulated(SchemeKind::EntangledHomodyne { n: 0 }, e).is_err());
        assert!(Scheme::new(SchemeKind::SqueezedHomodyne, e, Modulation::Bpsk).is_ok());
    }

    #[test]
    fn model_shapes() {
        let e = energy(100.0, 1.0);
        let coh = Scheme::unmodulated(SchemeKind::CoherentHomodyne, e).unwrap();
        let (pre, post) = observation_models(&coh, &fig2()).unwrap();
        match (pre, post) {
            (ObservationModel::Gauss1(a), ObservationModel::Gauss1(b)) => {
                assert_eq!(a.variance(), 0.25);
                assert_eq!(b.variance(), 0.25);
                assert!((a.mean() - (0.9f64 * 101.0).sqrt()).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        let ken = Scheme::unmodulated(SchemeKind::KennedyReceiver { residual: 0.0 }, e).unwrap();
        let (pre, post) = observation_models(&ken, &fig2()).unwrap();
        assert_eq!(pre, ObservationModel::Binary { p0: 1.0, p1: 0.0 });
        assert!(matches!(post, ObservationModel::Binary { p1, .. } if p1 > 0.0));
        let bpsk = Scheme::new(SchemeKind::SqueezedHomodyne, e, Modulation::Bpsk).unwrap();
        assert!(matches!(observation_models(&bpsk, &fig2()).unwrap().0, ObservationModel::Mixture2 { .. }));
        let ent = Scheme::unmodulated(SchemeKind::EntangledHomodyne { n: 2 }, e).unwrap();
        assert_eq!(observation_models(&ent, &fig2()).unwrap().1.dim(), 2);
        let dv = Scheme::unmodulated(SchemeKind::SinglePhotonHomodyne, e).unwrap();
        assert_eq!(
            observation_models(&dv, &fig2()).unwrap().1,
            ObservationModel::DvHomodyne { alpha: 10.0, eta: 0.85 }
        );
    }
}
