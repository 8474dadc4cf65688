//! Monte-Carlo average run length (ARL) to false alarm over a threshold grid.
//!
//! Each run samples the pre-change model only and scores it against the
//! change. A single pass records the first crossing time of every threshold
//! in increasing order, so the per-run crossing vector is monotone and the
//! averaged table is monotone too.

use crate::detector::DetectionSetup;
use crate::error::{Error, Result};
use crate::sampling::SeededStream;
use crate::schemes::{ChannelPair, Scheme};
use crate::table::Table;
use rayon::prelude::*;

/// Grid points equally spaced in threshold.
pub const DEFAULT_GRID_POINTS: usize = 200;
/// Censoring fraction above which a grid point is flagged unreliable.
pub const UNRELIABLE_CENSOR_FRAC: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArlOptions {
    pub h_min: f64,
    pub h_max: f64,
    /// Number of grid points `L`.
    pub points: usize,
    /// Number of independent runs `M`.
    pub runs: usize,
    /// Observations per run before censoring.
    pub run_length: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArlTable {
    pub h_grid: Vec<f64>,
    /// Mean time (pulses) to first crossing of each threshold.
    pub gamma: Vec<f64>,
    /// Fraction of runs that never crossed each threshold.
    pub censor_frac: Vec<f64>,
    pub runs: usize,
    pub run_length: u64,
    pub scheme: Scheme,
    pub channel: ChannelPair,
}

impl ArlTable {
    /// More than half the runs never crossed `h_max`.
    pub fn censoring_warning(&self) -> bool {
        self.censor_frac.last().is_some_and(|&c| c > 0.5)
    }

    pub fn unreliable(&self) -> Vec<bool> {
        self.censor_frac.iter().map(|&c| c > UNRELIABLE_CENSOR_FRAC).collect()
    }

    /// Rows `h,gamma,censor_frac`, one per grid point.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["h", "gamma", "censor_frac"]);
        for ((h, g), c) in self.h_grid.iter().zip(&self.gamma).zip(&self.censor_frac) {
            t.push(vec![(*h).into(), (*g).into(), (*c).into()]);
        }
        t
    }

    pub fn to_csv(&self) -> String {
        self.to_table().to_csv_string()
    }
}

fn grid(h_min: f64, h_max: f64, points: usize) -> Vec<f64> {
    let step = (h_max - h_min) / (points - 1) as f64;
    (0..points)
        .map(|j| if j + 1 == points { h_max } else { h_min + step * j as f64 })
        .collect()
}

/// Runs `opts.runs` false-alarm runs and averages the crossing times.
pub fn estimate_arl(
    scheme: &Scheme,
    ch: &ChannelPair,
    opts: &ArlOptions,
    seed: SeededStream,
) -> Result<ArlTable> {
    if opts.points <= 1 {
        return Err(Error::Usage(format!("threshold grid needs at least 2 points, got {}", opts.points)));
    }
    if !(opts.h_min < opts.h_max) || !(opts.h_min >= 0.0) || !opts.h_max.is_finite() {
        return Err(Error::Usage(format!(
            "threshold range must satisfy 0 <= h_min < h_max, got [{}, {}]",
            opts.h_min, opts.h_max
        )));
    }
    if opts.runs < 1 || opts.run_length < 1 {
        return Err(Error::Usage("need at least one run of at least one observation".into()));
    }
    let setup = DetectionSetup::new(scheme, ch)?;
    let h_grid = grid(opts.h_min, opts.h_max, opts.points);
    let block = setup.block_len();
    let censor = opts.run_length * block;

    let per_run: Vec<Vec<u64>> = (0..opts.runs)
        .into_par_iter()
        .map(|i| single_pass(&setup, &h_grid, opts.run_length, seed.child(i as u64)))
        .collect::<Result<_>>()?;

    let m = opts.runs as f64;
    let mut gamma = vec![0.0; opts.points];
    let mut censored = vec![0usize; opts.points];
    // fixed run order keeps the floating-point sum reproducible
    for times in &per_run {
        for (j, &t) in times.iter().enumerate() {
            match t {
                0 => {
                    gamma[j] += censor as f64;
                    censored[j] += 1;
                }
                t => gamma[j] += t as f64,
            }
        }
    }
    for g in &mut gamma {
        *g /= m;
    }
    debug_assert!(gamma.windows(2).all(|w| w[0] <= w[1]));
    Ok(ArlTable {
        h_grid,
        gamma,
        censor_frac: censored.iter().map(|&c| c as f64 / m).collect(),
        runs: opts.runs,
        run_length: opts.run_length,
        scheme: *scheme,
        channel: *ch,
    })
}

/// First crossing time (pulses) of each threshold in one run; 0 = censored.
fn single_pass(setup: &DetectionSetup, h_grid: &[f64], run_length: u64, stream: SeededStream) -> Result<Vec<u64>> {
    let block = setup.block_len();
    let mut source = setup.pre_source();
    let mut rng = stream.rng();
    let mut times = vec![0u64; h_grid.len()];
    let mut g = 0.0f64;
    let mut j = 0;
    for k in 1..=run_length {
        let l = source.next_llr(&mut rng)?;
        g = (g + l).max(0.0);
        while j < h_grid.len() && g > h_grid[j] {
            times[j] = k * block;
            j += 1;
        }
        if j == h_grid.len() {
            break;
        }
    }
    debug_assert!(times[..j].windows(2).all(|w| w[0] <= w[1]));
    Ok(times)
}

/// Threshold whose ARL equals `gamma_target`, interpolating linearly in
/// `(h, ln gamma)` between bracketing grid points.
pub fn threshold_for_arl(table: &ArlTable, gamma_target: f64) -> Result<f64> {
    let lo = *table.gamma.first().expect("non-empty table");
    let hi = *table.gamma.last().expect("non-empty table");
    if !(gamma_target >= lo && gamma_target <= hi) {
        return Err(Error::Range { target: gamma_target, lo, hi });
    }
    let j = table
        .gamma
        .iter()
        .position(|&g| g >= gamma_target)
        .expect("target within range");
    if table.gamma[j] == gamma_target || j == 0 {
        return Ok(table.h_grid[j]);
    }
    let (g0, g1) = (table.gamma[j - 1].ln(), table.gamma[j].ln());
    let (h0, h1) = (table.h_grid[j - 1], table.h_grid[j]);
    let t = (gamma_target.ln() - g0) / (g1 - g0);
    Ok(h0 + t * (h1 - h0))
}

/// A threshold located for a target ARL together with the table it came from.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub threshold: f64,
    pub table: ArlTable,
}

/// Finds the threshold with ARL `gamma_target` (pulses).
///
/// A short pilot table over `[0, 4 ln(gamma)]` locates the threshold roughly;
/// the final table spans one unit of `h` either side (ARL grows about `e^h`).
pub fn calibrate_threshold(
    scheme: &Scheme,
    ch: &ChannelPair,
    gamma_target: f64,
    runs: usize,
    seed: SeededStream,
) -> Result<Calibration> {
    if !(gamma_target > 1.0) {
        return Err(Error::Usage(format!("target ARL must exceed 1, got {gamma_target}")));
    }
    let block = scheme.block_len() as f64;
    let run_length = ((20.0 * gamma_target / block).ceil() as u64).max(10);
    let pilot_opts = ArlOptions {
        h_min: 0.0,
        h_max: 4.0 * gamma_target.ln().max(1.0),
        points: DEFAULT_GRID_POINTS,
        runs: (runs / 10).max(20),
        run_length: ((4.0 * gamma_target / block).ceil() as u64).max(10),
    };
    let pilot = estimate_arl(scheme, ch, &pilot_opts, seed.child(0))?;
    let rough = match threshold_for_arl(&pilot, gamma_target) {
        Ok(h) => h,
        Err(Error::Range { lo, .. }) if gamma_target < lo => 0.0,
        Err(Error::Range { .. }) => pilot_opts.h_max,
        Err(e) => return Err(e),
    };
    let mut half_width = 1.0;
    for attempt in 1..=3u64 {
        let opts = ArlOptions {
            h_min: (rough - half_width).max(0.0),
            h_max: rough + half_width,
            points: DEFAULT_GRID_POINTS,
            runs,
            run_length,
        };
        let table = estimate_arl(scheme, ch, &opts, seed.child(attempt))?;
        match threshold_for_arl(&table, gamma_target) {
            Ok(threshold) => return Ok(Calibration { threshold, table }),
            Err(Error::Range { .. }) => half_width *= 3.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Numerical(format!(
        "no threshold found for ARL {gamma_target} with scheme {}",
        scheme.label()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{EnergyParams, SchemeKind};

    fn coherent() -> Scheme {
        Scheme::unmodulated(SchemeKind::CoherentHomodyne, EnergyParams::new(100.0, 1.0).unwrap()).unwrap()
    }

    fn table(gamma: Vec<f64>) -> ArlTable {
        let n = gamma.len();
        ArlTable {
            h_grid: (0..n).map(|i| i as f64).collect(),
            censor_frac: vec![0.0; n],
            gamma,
            runs: 1,
            run_length: 1,
            scheme: coherent(),
            channel: ChannelPair::new(0.9, 0.85).unwrap(),
        }
    }

    #[test]
    fn exact_grid_hit() {
        let t = table(vec![2.0, 5.0, 20.0, 100.0]);
        assert_eq!(threshold_for_arl(&t, 20.0).unwrap(), 2.0);
        assert_eq!(threshold_for_arl(&t, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn log_interpolation() {
        let t = table(vec![1.0, 10.0, 100.0]);
        let h = threshold_for_arl(&t, 10f64.sqrt() * 10.0).unwrap();
        assert!((h - 1.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_range() {
        let t = table(vec![2.0, 5.0]);
        match threshold_for_arl(&t, 6.0) {
            Err(Error::Range { lo, hi, .. }) => assert_eq!((lo, hi), (2.0, 5.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_validation() {
        let ch = ChannelPair::new(0.9, 0.85).unwrap();
        let opts = ArlOptions { h_min: 1.0, h_max: 2.0, points: 1, runs: 2, run_length: 10 };
        assert!(matches!(estimate_arl(&coherent(), &ch, &opts, SeededStream::new(0, 0)), Err(Error::Usage(_))));
        let opts = ArlOptions { h_min: 2.0, h_max: 1.0, points: 5, runs: 2, run_length: 10 };
        assert!(matches!(estimate_arl(&coherent(), &ch, &opts, SeededStream::new(0, 0)), Err(Error::Usage(_))));
    }

    #[test]
    fn degenerate_change_is_all_censored() {
        let ch = ChannelPair::new(0.9, 0.9).unwrap();
        let opts = ArlOptions { h_min: 0.1, h_max: 3.0, points: 10, runs: 5, run_length: 100 };
        let t = estimate_arl(&coherent(), &ch, &opts, SeededStream::new(0, 0)).unwrap();
        assert!(t.censor_frac.iter().all(|&c| c == 1.0));
        assert!(t.gamma.iter().all(|&g| g == 100.0));
        assert!(t.censoring_warning());
        assert!(t.unreliable().iter().all(|&u| u));
    }

    #[test]
    fn csv_layout() {
        let t = table(vec![1.5, 2.5]);
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("h,gamma,censor_frac"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 1.5, 0.0]);
    }
}
