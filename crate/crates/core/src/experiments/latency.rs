//! Monte-Carlo detection latency at a calibrated false-alarm rate.

use super::ScenarioConfig;
use crate::calibration::calibrate_threshold;
use crate::detector::{DetectionOutcome, DetectionSetup};
use crate::error::{Error, Result};
use crate::sampling::SeededStream;
use crate::schemes::{cre_coherent, cre_squeezed, ChannelPair, EnergyParams, Modulation, Scheme, SchemeKind};
use crate::table::Table;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencySettings {
    /// Target ARL to false alarm, in pulses.
    pub gamma: f64,
    pub calibration_runs: usize,
    pub runs: usize,
    pub n_c: u64,
    pub horizon: u64,
    /// Fixed threshold; calibration is skipped when set.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyStats {
    pub label: String,
    pub threshold: f64,
    /// Change time actually used (aligned to the block length).
    pub n_c: u64,
    pub outcomes: Vec<DetectionOutcome>,
    pub detected: usize,
    pub false_alarms: usize,
    pub no_alarms: usize,
    /// Mean delay over detected runs (NaN if none).
    pub mean_tau: f64,
    pub tau_se: f64,
}

impl LatencyStats {
    fn from_outcomes(label: String, threshold: f64, n_c: u64, outcomes: Vec<DetectionOutcome>) -> Self {
        let taus: Vec<f64> = outcomes.iter().filter_map(|o| o.latency()).map(|t| t as f64).collect();
        let false_alarms = outcomes.iter().filter(|o| matches!(o, DetectionOutcome::FalseAlarm { .. })).count();
        let no_alarms = outcomes.iter().filter(|o| matches!(o, DetectionOutcome::NoAlarm { .. })).count();
        let (mean_tau, tau_se) = mean_se(&taus);
        LatencyStats {
            label,
            threshold,
            n_c,
            detected: taus.len(),
            false_alarms,
            no_alarms,
            mean_tau,
            tau_se,
            outcomes,
        }
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&[
            "scheme", "threshold", "n_c", "runs", "detected", "false_alarms", "no_alarms", "mean_tau", "tau_se",
        ]);
        t.push(vec![
            self.label.as_str().into(),
            self.threshold.into(),
            self.n_c.into(),
            self.outcomes.len().into(),
            self.detected.into(),
            self.false_alarms.into(),
            self.no_alarms.into(),
            self.mean_tau.into(),
            self.tau_se.into(),
        ]);
        t
    }
}

pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Smallest change time `>= n_c` that starts a block.
pub fn aligned_change_time(n_c: u64, block: u64) -> u64 {
    (n_c - 1).div_ceil(block) * block + 1
}

/// Calibrates (unless a threshold is given) and then runs `settings.runs`
/// detections with the change at `n_c`.
pub fn measure_latency(
    scheme: &Scheme,
    ch: &ChannelPair,
    settings: &LatencySettings,
    stream: SeededStream,
) -> Result<LatencyStats> {
    let label = scheme.label();
    let threshold = match settings.threshold {
        Some(h) => h,
        None => {
            calibrate_threshold(scheme, ch, settings.gamma, settings.calibration_runs, stream.child(0))
                .map_err(|e| e.context(&format!("calibrating {label}")))?
                .threshold
        }
    };
    let setup = DetectionSetup::new(scheme, ch)?;
    let n_c = aligned_change_time(settings.n_c, setup.block_len());
    if n_c > settings.horizon {
        return Err(Error::Usage(format!("aligned change time {n_c} exceeds horizon {}", settings.horizon)));
    }
    let runs = stream.child(1);
    let outcomes = (0..settings.runs as u64)
        .into_par_iter()
        .map(|i| setup.run(n_c, settings.horizon, threshold, runs.child(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LatencyStats::from_outcomes(label, threshold, n_c, outcomes))
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Usage("regression needs two or more paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("regression abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Least-squares `y = c0 + c1 x + c2 x^2`.
fn quadratic_fit(xs: &[f64], ys: &[f64]) -> Result<[f64; 3]> {
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let phi = Vector3::new(1.0, x, x * x);
        a += phi * phi.transpose();
        b += phi * y;
    }
    let c = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("quadratic fit is singular".into()))?;
    Ok([c[0], c[1], c[2]])
}

/// Where the fitted curve through `(xs, ys)` meets `level`, inside the data
/// range; `None` if it does not.
pub fn fitted_crossing(xs: &[f64], ys: &[f64], level: f64) -> Result<Option<f64>> {
    let [c0, c1, c2] = quadratic_fit(xs, ys)?;
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let c0 = c0 - level;
    let roots: Vec<f64> = if c2.abs() < 1e-14 * (c1.abs() + c0.abs()) {
        vec![-c0 / c1]
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            vec![]
        } else {
            let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
            vec![q / c2, c0 / q]
        }
    };
    Ok(roots.into_iter().filter(|r| r.is_finite() && *r >= lo && *r <= hi).reduce(f64::min))
}

#[derive(Debug, Clone)]
pub struct Fig3Result {
    pub table: Table,
    pub slope_unmodulated: f64,
    pub slope_bpsk: f64,
}

/// `Na` values spread geometrically over `(0.01, 1]`.
pub fn fig3_na_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|i| 0.01 * 100f64.powf(i as f64 / points as f64)).collect()
}

/// Latency improvement of squeezing over coherent light at matched ARL.
///
/// Rows `na,s_ratio,tau_ratio,modulation,tau0,tau1,h0,h1,detected0,detected1`.
pub fn fig3(cfg: &ScenarioConfig) -> Result<Fig3Result> {
    let settings = cfg.latency_settings();
    let ch = cfg.channel;
    let root = SeededStream::new(cfg.seed, 3);
    let grid = fig3_na_grid(cfg.points);
    let mods = [Modulation::Unmodulated, Modulation::Bpsk];
    type Point = (f64, f64, [(LatencyStats, LatencyStats); 2]);
    let points: Vec<Point> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &na)| -> Result<Point> {
            let e = EnergyParams::new(cfg.energy.n, na)?;
            let s_ratio = cre_squeezed(&ch, &e) / cre_coherent(&ch, &e);
            let ps = root.child(i as u64);
            let pair = |m: usize| -> Result<(LatencyStats, LatencyStats)> {
                let ms = ps.child(m as u64);
                let coh = Scheme::new(SchemeKind::CoherentHomodyne, e, mods[m])?;
                let sq = Scheme::new(SchemeKind::SqueezedHomodyne, e, mods[m])?;
                Ok((
                    measure_latency(&coh, &ch, &settings, ms.child(0))?,
                    measure_latency(&sq, &ch, &settings, ms.child(1))?,
                ))
            };
            Ok((na, s_ratio, [pair(0)?, pair(1)?]))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        "na", "s_ratio", "tau_ratio", "modulation", "tau0", "tau1", "h0", "h1", "detected0", "detected1",
    ]);
    let mut slopes = [0.0; 2];
    for (m, slope) in slopes.iter_mut().enumerate() {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (na, s_ratio, stats) in &points {
            let (c, s) = &stats[m];
            let tau_ratio = c.mean_tau / s.mean_tau;
            table.push(vec![
                (*na).into(),
                (*s_ratio).into(),
                tau_ratio.into(),
                if m == 0 { "none" } else { "bpsk" }.into(),
                c.mean_tau.into(),
                s.mean_tau.into(),
                c.threshold.into(),
                s.threshold.into(),
                c.detected.into(),
                s.detected.into(),
            ]);
            if tau_ratio.is_finite() {
                xs.push(*s_ratio);
                ys.push(tau_ratio);
            }
        }
        *slope = ols_slope(&xs, &ys)?.0;
    }
    Ok(Fig3Result { table, slope_unmodulated: slopes[0], slope_bpsk: slopes[1] })
}

#[derive(Debug, Clone)]
pub struct Fig8Result {
    pub table: Table,
    pub r_grid: Vec<f64>,
    pub squeezed: Vec<LatencyStats>,
    pub squeezed_bpsk: Vec<LatencyStats>,
    pub coherent: LatencyStats,
    pub coherent_bpsk: LatencyStats,
    pub dv: LatencyStats,
    /// Squeezing (dB) where the fitted unmodulated latency curve meets the
    /// single-photon latency.
    pub crossover_db: Option<f64>,
    pub crossover_db_bpsk: Option<f64>,
}

impl Fig8Result {
    /// Coherent over single-photon mean latency.
    pub fn latency_ratio(&self) -> f64 {
        self.coherent.mean_tau / self.dv.mean_tau
    }
}

/// Squeeze parameters swept in the latency panel.
pub fn fig8_r_grid(points: usize) -> Vec<f64> {
    let r_max = 0.45;
    (0..points).map(|i| r_max * i as f64 / (points - 1) as f64).collect()
}

pub fn db_of_squeeze(r: f64) -> f64 {
    20.0 * r / std::f64::consts::LN_10
}

/// Latency versus squeezing for displaced squeezed light (with and without
/// BPSK), against coherent and displaced single-photon baselines.
///
/// Rows `r,series,tau,tau_se,threshold,detected`; baseline series repeat at
/// every `r`.
pub fn fig8b(cfg: &ScenarioConfig) -> Result<Fig8Result> {
    let settings = cfg.latency_settings();
    let ch = cfg.channel;
    let n = cfg.energy.n;
    let root = SeededStream::new(cfg.seed, 8);
    let r_grid = fig8_r_grid(cfg.points);
    let base = EnergyParams::new(n, cfg.energy.na)?;

    let coherent = measure_latency(&Scheme::new(SchemeKind::CoherentHomodyne, base, Modulation::Unmodulated)?, &ch, &settings, root.child(0))?;
    let coherent_bpsk = measure_latency(&Scheme::new(SchemeKind::CoherentHomodyne, base, Modulation::Bpsk)?, &ch, &settings, root.child(1))?;
    let dv = measure_latency(&Scheme::unmodulated(SchemeKind::SinglePhotonHomodyne, base)?, &ch, &settings, root.child(2))?;

    let sweep: Vec<(LatencyStats, LatencyStats)> = r_grid
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let e = EnergyParams::new(n, r.sinh().powi(2))?;
            let ps = root.child(10 + i as u64);
            Ok((
                measure_latency(&Scheme::new(SchemeKind::SqueezedHomodyne, e, Modulation::Unmodulated)?, &ch, &settings, ps.child(0))?,
                measure_latency(&Scheme::new(SchemeKind::SqueezedHomodyne, e, Modulation::Bpsk)?, &ch, &settings, ps.child(1))?,
            ))
        })
        .collect::<Result<_>>()?;
    let (squeezed, squeezed_bpsk): (Vec<_>, Vec<_>) = sweep.into_iter().unzip();

    let mut table = Table::new(&["r", "series", "tau", "tau_se", "threshold", "detected"]);
    for (i, &r) in r_grid.iter().enumerate() {
        for (name, s) in [
            ("squeezed", &squeezed[i]),
            ("squeezed-bpsk", &squeezed_bpsk[i]),
            ("coherent", &coherent),
            ("coherent-bpsk", &coherent_bpsk),
            ("dv-homodyne", &dv),
        ] {
            table.push(vec![
                r.into(),
                name.into(),
                s.mean_tau.into(),
                s.tau_se.into(),
                s.threshold.into(),
                s.detected.into(),
            ]);
        }
    }
    let db: Vec<f64> = r_grid.iter().map(|&r| db_of_squeeze(r)).collect();
    let crossing = |stats: &[LatencyStats]| {
        let taus: Vec<f64> = stats.iter().map(|s| s.mean_tau).collect();
        fitted_crossing(&db, &taus, dv.mean_tau)
    };
    let crossover_db = crossing(&squeezed)?;
    let crossover_db_bpsk = crossing(&squeezed_bpsk)?;
    Ok(Fig8Result {
        table,
        r_grid,
        squeezed,
        squeezed_bpsk,
        coherent,
        coherent_bpsk,
        dv,
        crossover_db,
        crossover_db_bpsk,
    })
}

/// A single scheme at the configured channel. Returns the per-run latency
/// rows `run,n_d,tau,ml_estimate` (detected runs only) and the summary.
///
/// With no change to detect (`eta1 == eta2`) no threshold can reach the ARL
/// target, so `ln(gamma)` stands in unless a threshold is given.
pub fn latency_custom(cfg: &ScenarioConfig) -> Result<(Table, LatencyStats)> {
    let scheme = cfg.scheme()?;
    let mut settings = cfg.latency_settings();
    if settings.threshold.is_none() && cfg.channel.eta1() == cfg.channel.eta2() {
        settings.threshold = Some(settings.gamma.ln());
    }
    let stats = measure_latency(&scheme, &cfg.channel, &settings, SeededStream::new(cfg.seed, 5))?;
    let mut table = Table::new(&["run", "n_d", "tau", "ml_estimate"]);
    for (i, o) in stats.outcomes.iter().enumerate() {
        if let DetectionOutcome::Detected(r) = o {
            table.push(vec![(i as u64).into(), r.n_d.into(), r.tau.into(), r.ml_estimate.into()]);
        }
    }
    Ok((table, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment() {
        assert_eq!(aligned_change_time(1000, 1), 1000);
        assert_eq!(aligned_change_time(1000, 8), 1001);
        assert_eq!(aligned_change_time(1001, 8), 1001);
        assert_eq!(aligned_change_time(1, 4), 1);
    }

    #[test]
    fn ols_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let (m, b) = ols_slope(&xs, &ys).unwrap();
        assert!((m - 2.0).abs() < 1e-12 && (b + 1.0).abs() < 1e-12);
        assert!(ols_slope(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn quadratic_crossing() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 70.0 - 12.0 * x + x * x).collect();
        // 70 - 12x + x^2 = 50  ->  x = 6 - 4 = 2
        let c = fitted_crossing(&xs, &ys, 50.0).unwrap().unwrap();
        assert!((c - 2.0).abs() < 1e-9);
        assert!(fitted_crossing(&xs, &ys, 100.0).unwrap().is_none());
    }

    #[test]
    fn grids() {
        let g = fig3_na_grid(30);
        assert_eq!(g.len(), 30);
        assert!(g[0] > 0.01 && (g[29] - 1.0).abs() < 1e-12);
        let r = fig8_r_grid(13);
        assert_eq!((r[0], r[12]), (0.0, 0.45));
    }

    #[test]
    fn fixed_threshold_runs() {
        let ch = ChannelPair::new(0.9, 0.85).unwrap();
        let s = Scheme::unmodulated(SchemeKind::CoherentHomodyne, EnergyParams::new(100.0, 1.0).unwrap()).unwrap();
        let settings = LatencySettings { gamma: 1e3, calibration_runs: 10, runs: 20, n_c: 50, horizon: 2000, threshold: Some(4.0) };
        let a = measure_latency(&s, &ch, &settings, SeededStream::new(1, 1)).unwrap();
        let b = measure_latency(&s, &ch, &settings, SeededStream::new(1, 1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.detected + a.false_alarms + a.no_alarms, 20);
    }
}
