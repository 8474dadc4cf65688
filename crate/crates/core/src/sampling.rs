//! Reproducible random variates for every observation model.
//!
//! A [`SeededStream`] names an independent ChaCha20 keystream: the master seed
//! fixes the key and the stream id selects one of its 2^64 nonces, so any
//! substream is reachable without generating its predecessors.

use crate::error::{Error, Result};
use crate::schemes::{dv_homodyne_cdf, dv_homodyne_pdf, ObservationModel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeededStream { master_seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derived stream for the `index`-th child task (a run, a sweep point).
    pub fn child(&self, index: u64) -> SeededStream {
        SeededStream {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(1))),
        }
    }
}

/// One receiver observation.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Real(f64),
    Block(Vec<f64>),
    /// `true` is outcome 1 (a click).
    Binary(bool),
}

const DV_BRACKET: f64 = 10.0;
const DV_MAX_DOUBLINGS: u32 = 50;
const DV_BISECT_WIDTH: f64 = 1e-6;
const DV_CDF_TOL: f64 = 1e-10;

/// Solves `F(x) = u` for the displaced single-photon homodyne CDF.
///
/// Bisection narrows the bracket to `1e-6`, then Newton steps (with the pdf as
/// the exact derivative) polish until `|F(x) - u| < 1e-10`, falling back to
/// bisection whenever a step would leave the bracket.
pub fn dv_inverse_cdf(u: f64, alpha: f64, eta: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("uniform variate must lie in (0, 1), got {u}")));
    }
    if !(0.0..=1.0).contains(&eta) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "displaced-photon inverse cdf needs finite alpha and eta in [0, 1], got {alpha}, {eta}"
        )));
    }
    let center = alpha * eta.sqrt();
    let f = |x: f64| dv_homodyne_cdf(x, alpha, eta) - u;
    let mut width = DV_BRACKET;
    let (mut lo, mut hi) = (center - width, center + width);
    let mut doublings = 0;
    while f(lo) > 0.0 || f(hi) < 0.0 {
        doublings += 1;
        if doublings > DV_MAX_DOUBLINGS {
            return Err(Error::Numerical(format!(
                "inverse cdf bracket for u={u} not found after {DV_MAX_DOUBLINGS} doublings"
            )));
        }
        width *= 2.0;
        lo = center - width;
        hi = center + width;
    }
    while hi - lo > DV_BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() < DV_CDF_TOL {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let fx = f(x);
        if fx.abs() < DV_CDF_TOL {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = dv_homodyne_pdf(x, alpha, eta);
        let newton = x - fx / slope;
        x = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
    }
    let fx = f(x);
    if fx.abs() < DV_CDF_TOL {
        Ok(x)
    } else {
        Err(Error::Numerical(format!(
            "inverse cdf for u={u} stalled at x={x} with residual {fx:e}"
        )))
    }
}

/// A sampler with any per-model factorization done up front.
#[derive(Debug, Clone)]
pub enum Sampler {
    Gauss1 { mean: f64, sd: f64 },
    GaussN { mean: DVector<f64>, factor: DMatrix<f64> },
    Mixture2 { mean: f64, sd: f64 },
    Binary { p1: f64 },
    DvHomodyne { alpha: f64, eta: f64 },
}

impl Sampler {
    pub fn new(model: &ObservationModel) -> Result<Self> {
        Ok(match model {
            ObservationModel::Gauss1(g) => Sampler::Gauss1 { mean: g.mean(), sd: g.variance().sqrt() },
            ObservationModel::GaussN(g) => Sampler::GaussN {
                mean: g.mean().clone(),
                factor: g.cholesky_factor(),
            },
            ObservationModel::Mixture2 { mean, variance } => Sampler::Mixture2 {
                mean: *mean,
                sd: variance.sqrt(),
            },
            ObservationModel::Binary { p1, .. } => Sampler::Binary { p1: *p1 },
            ObservationModel::DvHomodyne { alpha, eta } => Sampler::DvHomodyne { alpha: *alpha, eta: *eta },
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Sampler::GaussN { mean, .. } => mean.len(),
            _ => 1,
        }
    }

    /// Draws a scalar observation (outcome 1 maps to 1.0 for binary models).
    /// Panics on block models.
    pub fn draw_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(match self {
            Sampler::Gauss1 { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            Sampler::Mixture2 { mean, sd } => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * mean + sd * rng.sample::<f64, _>(StandardNormal)
            }
            Sampler::Binary { p1 } => {
                if rng.random::<f64>() < *p1 {
                    1.0
                } else {
                    0.0
                }
            }
            Sampler::DvHomodyne { alpha, eta } => {
                // open interval (0, 1)
                let u = loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break u;
                    }
                };
                dv_inverse_cdf(u, *alpha, *eta)?
            }
            Sampler::GaussN { .. } => panic!("block sampler used for a scalar draw"),
        })
    }

    /// Fills `out` with one block draw; `z` is scratch of the same length.
    pub fn draw_block<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], z: &mut [f64]) {
        let Sampler::GaussN { mean, factor } = self else {
            panic!("scalar sampler used for a block draw");
        };
        let n = mean.len();
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..n {
            let mut acc = mean[i];
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                acc += factor[(i, j)] * zj;
            }
            out[i] = acc;
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Observation> {
        Ok(match self {
            Sampler::GaussN { mean, .. } => {
                let n = mean.len();
                let mut out = vec![0.0; n];
                let mut z = vec![0.0; n];
                self.draw_block(rng, &mut out, &mut z);
                Observation::Block(out)
            }
            Sampler::Binary { .. } => Observation::Binary(self.draw_scalar(rng)? == 1.0),
            _ => Observation::Real(self.draw_scalar(rng)?),
        })
    }
}

/// Draws `count` observations from `model` on the given stream.
pub fn sample(model: &ObservationModel, stream: SeededStream, count: usize) -> Result<Vec<Observation>> {
    let sampler = Sampler::new(model)?;
    let mut rng = stream.rng();
    (0..count).map(|_| sampler.draw(&mut rng)).collect()
}
