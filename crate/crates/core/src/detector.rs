//! CUSUM quickest change detection.
//!
//! The decision statistic follows `G[k] = max(0, G[k-1] + l[k])`, where `l[k]`
//! is the log-likelihood ratio of the post- to the pre-change model. An alarm
//! is raised at the first `k` with `G[k] > h`.

use crate::error::{Error, Result};
use crate::sampling::{Observation, Sampler, SeededStream};
use crate::schemes::{observation_models, ChannelPair, ObservationModel, Scheme};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::f64::consts::PI;

/// Log-likelihood ratio evaluator for a fixed `(pre, post)` model pair.
#[derive(Debug, Clone)]
pub enum LlrKernel {
    Gauss1 {
        pre_mean: f64,
        pre_var: f64,
        post_mean: f64,
        post_var: f64,
    },
    GaussN {
        pre: BlockDensity,
        post: BlockDensity,
    },
    Mixture2 {
        pre_mean: f64,
        pre_var: f64,
        post_mean: f64,
        post_var: f64,
    },
    Binary {
        one: f64,
        zero: f64,
    },
    DvHomodyne {
        alpha: f64,
        pre_eta: f64,
        post_eta: f64,
    },
}

/// Gaussian block log-density with a cached Cholesky factor.
#[derive(Debug, Clone)]
pub struct BlockDensity {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
    log_norm: f64,
}

impl BlockDensity {
    fn new(g: &crate::gaussian::GaussianVec) -> Self {
        let factor = g.cholesky_factor();
        let n = g.dim() as f64;
        let logdet: f64 = factor.diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        BlockDensity {
            mean: g.mean().clone(),
            factor,
            log_norm: -0.5 * (n * (2.0 * PI).ln() + logdet),
        }
    }

    /// `ln p(x)`; `scratch` must have the block length.
    fn ln_pdf(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let n = self.mean.len();
        let mut quad = 0.0;
        for i in 0..n {
            let mut acc = x[i] - self.mean[i];
            for (j, yj) in scratch.iter().enumerate().take(i) {
                acc -= self.factor[(i, j)] * yj;
            }
            let y = acc / self.factor[(i, i)];
            scratch[i] = y;
            quad += y * y;
        }
        self.log_norm - 0.5 * quad
    }
}

fn gauss_ln(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (d * d / var + (2.0 * PI * var).ln())
}

fn mixture_ln(x: f64, mean: f64, var: f64) -> f64 {
    let a = gauss_ln(x, mean, var);
    let b = gauss_ln(x, -mean, var);
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln() - std::f64::consts::LN_2
}

fn binary_ratio(post: f64, pre: f64) -> f64 {
    match (post == 0.0, pre == 0.0) {
        (true, true) => 0.0,
        (false, true) => f64::INFINITY,
        (true, false) => f64::NEG_INFINITY,
        (false, false) => (post / pre).ln(),
    }
}

fn mismatch(pre: &ObservationModel, post: &ObservationModel) -> Error {
    Error::Usage(format!(
        "pre- and post-change models differ in kind or shape ({} vs {})",
        pre.kind_name(),
        post.kind_name()
    ))
}

impl LlrKernel {
    pub fn new(pre: &ObservationModel, post: &ObservationModel) -> Result<Self> {
        use ObservationModel as M;
        Ok(match (pre, post) {
            (M::Gauss1(a), M::Gauss1(b)) => LlrKernel::Gauss1 {
                pre_mean: a.mean(),
                pre_var: a.variance(),
                post_mean: b.mean(),
                post_var: b.variance(),
            },
            (M::GaussN(a), M::GaussN(b)) if a.dim() == b.dim() => LlrKernel::GaussN {
                pre: BlockDensity::new(a),
                post: BlockDensity::new(b),
            },
            (
                M::Mixture2 { mean: m1, variance: v1 },
                M::Mixture2 { mean: m2, variance: v2 },
            ) => LlrKernel::Mixture2 {
                pre_mean: *m1,
                pre_var: *v1,
                post_mean: *m2,
                post_var: *v2,
            },
            (M::Binary { p0: a0, p1: a1 }, M::Binary { p0: b0, p1: b1 }) => LlrKernel::Binary {
                one: binary_ratio(*b1, *a1),
                zero: binary_ratio(*b0, *a0),
            },
            (
                M::DvHomodyne { alpha: a1, eta: e1 },
                M::DvHomodyne { alpha: a2, eta: e2 },
            ) if a1 == a2 => LlrKernel::DvHomodyne {
                alpha: *a1,
                pre_eta: *e1,
                post_eta: *e2,
            },
            _ => return Err(mismatch(pre, post)),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            LlrKernel::GaussN { pre, .. } => pre.mean.len(),
            _ => 1,
        }
    }

    /// LLR of a scalar observation (binary outcomes encoded as 0.0 / 1.0).
    pub fn scalar(&self, x: f64) -> f64 {
        match self {
            LlrKernel::Gauss1 { pre_mean, pre_var, post_mean, post_var } => {
                gauss_ln(x, *post_mean, *post_var) - gauss_ln(x, *pre_mean, *pre_var)
            }
            LlrKernel::Mixture2 { pre_mean, pre_var, post_mean, post_var } => {
                mixture_ln(x, *post_mean, *post_var) - mixture_ln(x, *pre_mean, *pre_var)
            }
            LlrKernel::Binary { one, zero } => {
                if x != 0.0 {
                    *one
                } else {
                    *zero
                }
            }
            LlrKernel::DvHomodyne { alpha, pre_eta, post_eta } => {
                crate::schemes::dv_homodyne_ln_pdf(x, *alpha, *post_eta)
                    - crate::schemes::dv_homodyne_ln_pdf(x, *alpha, *pre_eta)
            }
            LlrKernel::GaussN { .. } => panic!("block kernel used for a scalar observation"),
        }
    }

    /// LLR of a block observation; `scratch` must have the block length.
    pub fn block(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        match self {
            LlrKernel::GaussN { pre, post } => post.ln_pdf(x, scratch) - pre.ln_pdf(x, scratch),
            _ => panic!("scalar kernel used for a block observation"),
        }
    }

    pub fn eval(&self, obs: &Observation) -> Result<f64> {
        match (self, obs) {
            (LlrKernel::GaussN { .. }, Observation::Block(x)) => {
                if x.len() != self.dim() {
                    return Err(Error::Usage(format!(
                        "block of length {} for a {}-variate model",
                        x.len(),
                        self.dim()
                    )));
                }
                let mut scratch = vec![0.0; x.len()];
                Ok(self.block(x, &mut scratch))
            }
            (LlrKernel::Binary { .. }, Observation::Binary(b)) => Ok(self.scalar(if *b { 1.0 } else { 0.0 })),
            (LlrKernel::GaussN { .. } | LlrKernel::Binary { .. }, _) | (_, Observation::Block(_) | Observation::Binary(_)) => {
                Err(Error::Usage(format!("observation {obs:?} does not fit the model pair")))
            }
            (_, Observation::Real(x)) => Ok(self.scalar(*x)),
        }
    }
}

/// `ln(P_post(obs) / P_pre(obs))`. Infinite when the pre-change model gives
/// the observation zero probability.
pub fn llr(obs: &Observation, pre: &ObservationModel, post: &ObservationModel) -> Result<f64> {
    LlrKernel::new(pre, post)?.eval(obs)
}

/// A sampler paired with a kernel: yields one LLR per observation.
#[derive(Debug, Clone)]
pub struct LlrSource {
    sampler: Sampler,
    kernel: LlrKernel,
    obs: Vec<f64>,
    scratch: Vec<f64>,
}

impl LlrSource {
    pub fn new(model: &ObservationModel, kernel: LlrKernel) -> Result<Self> {
        let sampler = Sampler::new(model)?;
        if sampler.dim() != kernel.dim() {
            return Err(Error::Usage(format!(
                "sampled model has dimension {} but the kernel expects {}",
                sampler.dim(),
                kernel.dim()
            )));
        }
        let n = sampler.dim();
        Ok(LlrSource {
            sampler,
            kernel,
            obs: vec![0.0; n],
            scratch: vec![0.0; n],
        })
    }

    pub fn next_llr<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        if let LlrKernel::GaussN { .. } = self.kernel {
            self.sampler.draw_block(rng, &mut self.obs, &mut self.scratch);
            Ok(self.kernel.block(&self.obs, &mut self.scratch))
        } else {
            let x = self.sampler.draw_scalar(rng)?;
            Ok(self.kernel.scalar(x))
        }
    }
}

/// Detector state after `k` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct CusumRun {
    k: u64,
    cumsum: f64,
    decision: f64,
    argmin_index: u64,
    min_cumsum: f64,
    alarm_time: Option<u64>,
    threshold: f64,
}

impl CusumRun {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(Error::Domain(format!("threshold must be >= 0, got {threshold}")));
        }
        Ok(CusumRun {
            k: 0,
            cumsum: 0.0,
            decision: 0.0,
            argmin_index: 0,
            min_cumsum: 0.0,
            alarm_time: None,
            threshold,
        })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// `S[k]`, the running sum of LLRs.
    pub fn cumsum(&self) -> f64 {
        self.cumsum
    }

    /// `G[k]`.
    pub fn decision(&self) -> f64 {
        self.decision
    }

    /// Index of the earliest minimum of `S[0..k-1]`.
    pub fn argmin_index(&self) -> u64 {
        self.argmin_index
    }

    pub fn alarm_time(&self) -> Option<u64> {
        self.alarm_time
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Maximum-likelihood change time: the step after the running minimum of
    /// the cumulative sum.
    pub fn ml_estimate(&self) -> u64 {
        self.argmin_index + 1
    }

    /// Consumes one LLR. Returns whether the alarm fired on this step.
    pub fn step(&mut self, l: f64) -> Result<bool> {
        if self.alarm_time.is_some() {
            return Err(Error::Usage("cannot step a CUSUM run after its alarm".into()));
        }
        if l.is_nan() {
            return Err(Error::Numerical(format!("NaN log-likelihood ratio at step {}", self.k + 1)));
        }
        // Extend the argmin window with S[k] before S[k+1] exists; strict
        // comparison keeps the earliest index on ties.
        if self.k > 0 && self.cumsum < self.min_cumsum {
            self.min_cumsum = self.cumsum;
            self.argmin_index = self.k;
        }
        self.k += 1;
        self.cumsum += l;
        self.decision = (self.decision + l).max(0.0);
        if self.decision > self.threshold {
            self.alarm_time = Some(self.k);
            return Ok(true);
        }
        Ok(false)
    }
}

/// Functional form of [`CusumRun::step`].
pub fn cusum_step(run: &CusumRun, l: f64) -> Result<CusumRun> {
    let mut next = run.clone();
    next.step(l)?;
    Ok(next)
}

/// Detection delay of a run that alarmed at or after the change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencyResult {
    pub n_c: u64,
    pub n_d: u64,
    pub tau: u64,
    pub ml_estimate: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionOutcome {
    Detected(LatencyResult),
    /// Alarm before the change point.
    FalseAlarm { n_d: u64, ml_estimate: u64 },
    /// No alarm by the horizon.
    NoAlarm { horizon: u64 },
}

impl DetectionOutcome {
    pub fn latency(&self) -> Option<u64> {
        match self {
            DetectionOutcome::Detected(r) => Some(r.tau),
            _ => None,
        }
    }
}

/// Pre-built sampling and scoring state for repeated detection runs.
#[derive(Debug, Clone)]
pub struct DetectionSetup {
    pre: LlrSource,
    post: LlrSource,
    block: u64,
}

impl DetectionSetup {
    pub fn new(scheme: &Scheme, ch: &ChannelPair) -> Result<Self> {
        let (pre_model, post_model) = observation_models(scheme, ch)?;
        let kernel = LlrKernel::new(&pre_model, &post_model)?;
        Ok(DetectionSetup {
            pre: LlrSource::new(&pre_model, kernel.clone())?,
            post: LlrSource::new(&post_model, kernel)?,
            block: scheme.block_len() as u64,
        })
    }

    pub fn block_len(&self) -> u64 {
        self.block
    }

    /// A source drawing pre-change observations, scored against the change.
    pub fn pre_source(&self) -> LlrSource {
        self.pre.clone()
    }

    /// One run with the change at pulse `n_c` (the first post-change pulse).
    /// Times are in pulses; a block alarms at its last pulse.
    pub fn run(&self, n_c: u64, horizon: u64, h: f64, stream: SeededStream) -> Result<DetectionOutcome> {
        let b = self.block;
        if n_c < 1 || n_c > horizon {
            return Err(Error::Usage(format!("change time {n_c} must lie in [1, {horizon}]")));
        }
        if (n_c - 1) % b != 0 {
            return Err(Error::Usage(format!(
                "change time {n_c} is not aligned to a block boundary of length {b}"
            )));
        }
        let mut pre = self.pre.clone();
        let mut post = self.post.clone();
        let mut rng = stream.rng();
        let mut run = CusumRun::new(h)?;
        let blocks = horizon / b;
        for blk in 0..blocks {
            let first_pulse = blk * b + 1;
            let l = if first_pulse < n_c {
                pre.next_llr(&mut rng)?
            } else {
                post.next_llr(&mut rng)?
            };
            if run.step(l)? {
                let n_d = run.k() * b;
                let ml_estimate = run.argmin_index() * b + 1;
                return Ok(if n_d >= n_c {
                    DetectionOutcome::Detected(LatencyResult {
                        n_c,
                        n_d,
                        tau: n_d - n_c,
                        ml_estimate,
                    })
                } else {
                    DetectionOutcome::FalseAlarm { n_d, ml_estimate }
                });
            }
        }
        Ok(DetectionOutcome::NoAlarm { horizon })
    }
}

pub fn run_detection(
    scheme: &Scheme,
    ch: &ChannelPair,
    n_c: u64,
    horizon: u64,
    h: f64,
    stream: SeededStream,
) -> Result<DetectionOutcome> {
    DetectionSetup::new(scheme, ch)?.run(n_c, horizon, h, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{Gaussian1D, GaussianVec};
    use crate::schemes::{EnergyParams, SchemeKind};

    #[test]
    fn identical_models_give_zero() {
        let m = ObservationModel::Gauss1(Gaussian1D::new(1.0, 0.3).unwrap());
        for &x in &[-2.0, 0.0, 1.0, 5.0] {
            assert_eq!(llr(&Observation::Real(x), &m, &m).unwrap(), 0.0);
        }
        let b = ObservationModel::binary(0.2).unwrap();
        assert_eq!(llr(&Observation::Binary(true), &b, &b).unwrap(), 0.0);
    }

    #[test]
    fn gauss_llr_hand_formula() {
        let (m1, m2, v) = (1.0, 1.4, 0.25);
        let pre = ObservationModel::Gauss1(Gaussian1D::new(m1, v).unwrap());
        let post = ObservationModel::Gauss1(Gaussian1D::new(m2, v).unwrap());
        for &x in &[-1.0, 0.7, 1.2, 3.0] {
            let expected = (x - m1) * (x - m1) / (2.0 * v) - (x - m2) * (x - m2) / (2.0 * v);
            assert!((llr(&Observation::Real(x), &pre, &post).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn kennedy_click_is_infinite() {
        let pre = ObservationModel::binary(0.0).unwrap();
        let post = ObservationModel::binary(0.3).unwrap();
        assert_eq!(llr(&Observation::Binary(true), &pre, &post).unwrap(), f64::INFINITY);
        let mut run = CusumRun::new(1e6).unwrap();
        assert!(run.step(f64::INFINITY).unwrap());
        assert_eq!(run.alarm_time(), Some(1));
    }

    #[test]
    fn block_dimension_mismatch() {
        let g = GaussianVec::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let m = ObservationModel::GaussN(g);
        assert!(matches!(
            llr(&Observation::Block(vec![0.0; 3]), &m, &m),
            Err(Error::Usage(_))
        ));
        assert!(matches!(llr(&Observation::Real(0.0), &m, &m), Err(Error::Usage(_))));
    }

    #[test]
    fn mismatched_kinds_rejected() {
        let a = ObservationModel::binary(0.1).unwrap();
        let b = ObservationModel::Gauss1(Gaussian1D::new(0.0, 1.0).unwrap());
        assert!(matches!(LlrKernel::new(&a, &b), Err(Error::Usage(_))));
    }

    #[test]
    fn zero_llr_never_alarms() {
        let mut run = CusumRun::new(0.5).unwrap();
        for _ in 0..1000 {
            assert!(!run.step(0.0).unwrap());
        }
        assert_eq!(run.decision(), 0.0);
    }

    #[test]
    fn unit_llr_alarm_time() {
        let mut run = CusumRun::new(5.0).unwrap();
        while !run.step(1.0).unwrap() {}
        assert_eq!(run.alarm_time(), Some(6));
        assert!(matches!(run.step(1.0), Err(Error::Usage(_))));
    }

    #[test]
    fn ml_estimate_after_dip() {
        let mut run = CusumRun::new(2.5).unwrap();
        for l in [1.0, -2.0, -1.0, 1.0, 1.0, 1.0] {
            run.step(l).unwrap();
        }
        // S = 0, 1, -1, -2, -1, 0, 1 -> minimum at index 3
        assert_eq!(run.argmin_index(), 3);
        assert_eq!(run.ml_estimate(), 4);
        assert_eq!(run.alarm_time(), Some(6));
    }

    #[test]
    fn functional_step_matches() {
        let run = CusumRun::new(3.0).unwrap();
        let next = cusum_step(&run, 0.7).unwrap();
        assert_eq!(next.k(), 1);
        assert_eq!(next.decision(), 0.7);
        assert_eq!(run.k(), 0);
    }

    #[test]
    fn block_alignment_enforced() {
        let e = EnergyParams::new(100.0, 0.1).unwrap();
        let s = Scheme::unmodulated(SchemeKind::EntangledHomodyne { n: 4 }, e).unwrap();
        let ch = ChannelPair::new(0.9, 0.85).unwrap();
        let st = SeededStream::new(1, 0);
        assert!(matches!(run_detection(&s, &ch, 1000, 5000, 8.0, st), Err(Error::Usage(_))));
        let out = run_detection(&s, &ch, 1001, 5000, 8.0, st).unwrap();
        if let DetectionOutcome::Detected(r) = out {
            assert_eq!(r.n_d % 4, 0);
            assert_eq!(r.tau, r.n_d - r.n_c);
        }
    }

    #[test]
    fn no_change_no_alarm() {
        let e = EnergyParams::new(100.0, 1.0).unwrap();
        let s = Scheme::unmodulated(SchemeKind::CoherentHomodyne, e).unwrap();
        let ch = ChannelPair::new(0.9, 0.9).unwrap();
        let out = run_detection(&s, &ch, 100, 2000, 5.0, SeededStream::new(3, 0)).unwrap();
        assert_eq!(out, DetectionOutcome::NoAlarm { horizon: 2000 });
    }
}
