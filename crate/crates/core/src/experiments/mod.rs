//! Scenario runners behind the `qcd` command line.
//!
//! Every runner returns [`Table`]s; writing them is left to the caller.
//! Sweep columns hold raw linear quantities (`na`, `s`, `eta1`, `r`).

pub mod config;
pub mod cre;
pub mod latency;

pub use config::Params;
pub use cre::{capacity_table, cmd_cre, cmd_root_rth, cre_figure, figure_layout, rth_table, CreSeries, Sweep, SweepVar};
pub use latency::{fig3, fig8b, latency_custom, measure_latency, ols_slope, Fig3Result, Fig8Result, LatencySettings, LatencyStats};

use crate::error::{Error, Result};
use crate::schemes::{ChannelPair, EnergyParams, Modulation, Scheme, SchemeKind};
use crate::table::Table;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// Prefix for environment variables that mirror command-line flags.
pub const ENV_PREFIX: &str = "QCD_";

pub const DESK_GAMMA: f64 = 1e4;
pub const FULL_SCALE_GAMMA: f64 = 2e6;
pub const DESK_RUNS: usize = 200;
pub const FULL_SCALE_RUNS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig7,
    Fig8,
    Custom,
}

impl ScenarioId {
    pub const FIGURES: [ScenarioId; 6] = [
        ScenarioId::Fig2,
        ScenarioId::Fig3,
        ScenarioId::Fig4,
        ScenarioId::Fig5,
        ScenarioId::Fig7,
        ScenarioId::Fig8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Fig2 => "fig2",
            ScenarioId::Fig3 => "fig3",
            ScenarioId::Fig4 => "fig4",
            ScenarioId::Fig5 => "fig5",
            ScenarioId::Fig7 => "fig7",
            ScenarioId::Fig8 => "fig8",
            ScenarioId::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "fig2" | "2" => ScenarioId::Fig2,
            "fig3" | "3" => ScenarioId::Fig3,
            "fig4" | "4" => ScenarioId::Fig4,
            "fig5" | "5" => ScenarioId::Fig5,
            "fig7" | "7" => ScenarioId::Fig7,
            "fig8" | "8" => ScenarioId::Fig8,
            "custom" => ScenarioId::Custom,
            other => {
                return Err(Error::Usage(format!(
                    "unknown scenario `{other}` (expected fig2, fig3, fig4, fig5, fig7, fig8 or custom)"
                )))
            }
        })
    }
}

/// Transmitter/receiver family named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeName {
    Coherent,
    Squeezed,
    Entangled,
    Kennedy,
    DvHomodyne,
    DvSpd,
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "coherent" => SchemeName::Coherent,
            "squeezed" => SchemeName::Squeezed,
            "entangled" => SchemeName::Entangled,
            "kennedy" => SchemeName::Kennedy,
            "dv-homodyne" | "dv" => SchemeName::DvHomodyne,
            "dv-spd" | "spd" => SchemeName::DvSpd,
            other => {
                return Err(Error::Usage(format!(
                    "unknown scheme `{other}` (expected coherent, squeezed, entangled, kennedy, dv-homodyne or dv-spd)"
                )))
            }
        })
    }
}

fn parse_modulation(s: &str) -> Result<Modulation> {
    match s.trim().to_ascii_lowercase().as_str() {
        "none" | "unmodulated" => Ok(Modulation::Unmodulated),
        "bpsk" => Ok(Modulation::Bpsk),
        other => Err(Error::Usage(format!("unknown modulation `{other}` (expected none or bpsk)"))),
    }
}

/// Fully resolved parameters for one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub scheme: SchemeName,
    pub modulation: Modulation,
    pub block: usize,
    pub neps: f64,
    pub energy: EnergyParams,
    pub channel: ChannelPair,
    /// Detection runs per point.
    pub runs: usize,
    /// Runs per ARL table during threshold calibration.
    pub calibration_runs: usize,
    pub horizon: u64,
    pub n_c: u64,
    /// Target ARL to false alarm, in pulses.
    pub gamma: f64,
    /// Skips calibration when set.
    pub threshold: Option<f64>,
    /// Sweep points (Na points for fig3, grid points for fig8 latency).
    pub points: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub paper_scale: bool,
}

struct Defaults {
    n: f64,
    na: f64,
    eta1: f64,
    eta_tap: Option<f64>,
    eta2: f64,
    points: usize,
}

fn defaults(id: ScenarioId) -> Defaults {
    let base = Defaults { n: 100.0, na: 1.0, eta1: 0.9, eta_tap: None, eta2: 0.85, points: 30 };
    match id {
        ScenarioId::Fig3 => Defaults { points: 30, ..base },
        ScenarioId::Fig7 => Defaults { n: 0.0, eta_tap: Some(0.9), eta2: 0.81, ..base },
        ScenarioId::Fig8 => Defaults { points: 13, ..base },
        _ => base,
    }
}

impl ScenarioConfig {
    /// Caption defaults for `id`, overridden by any keys present in `p`.
    pub fn from_params(id: ScenarioId, p: &Params) -> Result<Self> {
        let d = defaults(id);
        let paper_scale = p.flag("paper_scale")?;
        let n = p.get_or("n_photons", d.n)?;
        let na = p.get_or("na", d.na)?;
        let eta1 = p.get_or("eta1", d.eta1)?;
        let channel = match (p.get::<f64>("eta2")?, p.get::<f64>("eta_tap")?) {
            (Some(_), Some(_)) => return Err(Error::Usage("give either eta2 or eta_tap, not both".into())),
            (Some(e2), None) => ChannelPair::new(eta1, e2)?,
            (None, Some(tap)) => ChannelPair::from_tap(eta1, tap)?,
            (None, None) => match d.eta_tap {
                Some(tap) => ChannelPair::from_tap(eta1, tap)?,
                // keep the caption's tap ratio when only eta1 moves
                None if p.contains("eta1") => ChannelPair::from_tap(eta1, d.eta2 / d.eta1)?,
                None => ChannelPair::new(d.eta1, d.eta2)?,
            },
        };
        let default_runs = match (id, paper_scale) {
            (ScenarioId::Fig8, _) | (_, true) => FULL_SCALE_RUNS,
            _ => DESK_RUNS,
        };
        let cfg = ScenarioConfig {
            scenario: id,
            scheme: p.get_or("scheme", SchemeName::Coherent)?,
            modulation: p.raw("modulation").map(parse_modulation).transpose()?.unwrap_or(Modulation::Unmodulated),
            block: p.get_or("block", 8)?,
            neps: p.get_or("neps", 0.1)?,
            energy: EnergyParams::new(n, na)?,
            channel,
            runs: p.get_or("runs", default_runs)?,
            calibration_runs: p.get_or("calibration_runs", if paper_scale { 100 } else { DESK_RUNS })?,
            horizon: p.get_or("horizon", 5000)?,
            n_c: p.get_or("n_c", 1000)?,
            gamma: p.get_or("gamma", if paper_scale { FULL_SCALE_GAMMA } else { DESK_GAMMA })?,
            threshold: p.get("threshold")?,
            points: p.get_or("points", d.points)?,
            seed: p.get_or("seed", 0)?,
            out: p.raw("out").map(PathBuf::from),
            paper_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 || self.calibration_runs < 1 {
            return Err(Error::Usage("runs and calibration_runs must be >= 1".into()));
        }
        if self.n_c < 1 || self.n_c > self.horizon {
            return Err(Error::Usage(format!("n_c = {} must lie in [1, horizon = {}]", self.n_c, self.horizon)));
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(Error::Usage(format!("gamma must be finite and > 1, got {}", self.gamma)));
        }
        if let Some(h) = self.threshold {
            if !(h >= 0.0) || !h.is_finite() {
                return Err(Error::Usage(format!("threshold must be finite and >= 0, got {h}")));
            }
        }
        if self.points < 2 {
            return Err(Error::Usage("points must be >= 2".into()));
        }
        self.scheme()?;
        Ok(())
    }

    pub fn scheme_kind(&self) -> SchemeKind {
        match self.scheme {
            SchemeName::Coherent => SchemeKind::CoherentHomodyne,
            SchemeName::Squeezed => SchemeKind::SqueezedHomodyne,
            SchemeName::Entangled => SchemeKind::EntangledHomodyne { n: self.block },
            SchemeName::Kennedy => SchemeKind::KennedyReceiver { residual: self.neps },
            SchemeName::DvHomodyne => SchemeKind::SinglePhotonHomodyne,
            SchemeName::DvSpd => SchemeKind::SinglePhotonSpd,
        }
    }

    pub fn scheme(&self) -> Result<Scheme> {
        Scheme::new(self.scheme_kind(), self.energy, self.modulation)
    }

    pub fn latency_settings(&self) -> LatencySettings {
        LatencySettings {
            gamma: self.gamma,
            calibration_runs: self.calibration_runs,
            runs: self.runs,
            n_c: self.n_c,
            horizon: self.horizon,
            threshold: self.threshold,
        }
    }
}

/// Runs `f` on a rayon pool with `workers` threads (all cores if `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Usage("workers must be >= 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

/// Runs a figure scenario; fig8 yields two tables (`fig8a`, `fig8b`).
pub fn run_figure(cfg: &ScenarioConfig) -> Result<Vec<(String, Table)>> {
    let ctx = |e: Error| e.context(cfg.scenario.name());
    Ok(match cfg.scenario {
        ScenarioId::Fig2 | ScenarioId::Fig4 | ScenarioId::Fig5 | ScenarioId::Fig7 => {
            vec![(cfg.scenario.name().to_owned(), cre_figure(cfg).map_err(ctx)?)]
        }
        ScenarioId::Fig3 => vec![("fig3".into(), fig3(cfg).map_err(ctx)?.table)],
        ScenarioId::Fig8 => vec![
            ("fig8a".into(), cre_figure(cfg).map_err(ctx)?),
            ("fig8b".into(), fig8b(cfg).map_err(ctx)?.table),
        ],
        ScenarioId::Custom => {
            return Err(Error::Usage("`custom` is not a figure; use the latency or cre command".into()))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caption_defaults() {
        let p = Params::new();
        for id in [ScenarioId::Fig2, ScenarioId::Fig3, ScenarioId::Fig4, ScenarioId::Fig5, ScenarioId::Fig8] {
            let c = ScenarioConfig::from_params(id, &p).unwrap();
            assert_eq!(c.energy.n, 100.0);
            assert_eq!((c.channel.eta1(), c.channel.eta2()), (0.9, 0.85));
        }
        let c3 = ScenarioConfig::from_params(ScenarioId::Fig3, &p).unwrap();
        assert_eq!((c3.n_c, c3.horizon, c3.gamma, c3.runs, c3.points), (1000, 5000, 1e4, 200, 30));
        let c7 = ScenarioConfig::from_params(ScenarioId::Fig7, &p).unwrap();
        assert_eq!((c7.energy.n, c7.energy.na), (0.0, 1.0));
        assert!((c7.channel.eta_tap() - 0.9).abs() < 1e-15);
        let c8 = ScenarioConfig::from_params(ScenarioId::Fig8, &p).unwrap();
        assert_eq!(c8.runs, 500);
    }

    #[test]
    fn paper_scale_switch() {
        let mut p = Params::new();
        p.set("paper_scale", "true");
        let c = ScenarioConfig::from_params(ScenarioId::Fig3, &p).unwrap();
        assert_eq!((c.gamma, c.runs), (2e6, 500));
        p.set("gamma", 5e4);
        assert_eq!(ScenarioConfig::from_params(ScenarioId::Fig3, &p).unwrap().gamma, 5e4);
    }

    #[test]
    fn channel_overrides() {
        let mut p = Params::new();
        p.set("eta1", 0.8);
        let c = ScenarioConfig::from_params(ScenarioId::Fig2, &p).unwrap();
        assert!((c.channel.eta_tap() - 0.85 / 0.9).abs() < 1e-15);
        p.set("eta2", 0.7);
        assert_eq!(ScenarioConfig::from_params(ScenarioId::Fig2, &p).unwrap().channel.eta2(), 0.7);
        p.set("eta_tap", 0.9);
        assert!(ScenarioConfig::from_params(ScenarioId::Fig2, &p).is_err());
    }

    #[test]
    fn invalid_combinations() {
        let mut p = Params::new();
        p.set("scheme", "dv-spd");
        assert!(matches!(ScenarioConfig::from_params(ScenarioId::Custom, &p), Err(Error::Usage(_))));
        let mut p = Params::new();
        p.set("scheme", "entangled");
        p.set("modulation", "bpsk");
        assert!(matches!(ScenarioConfig::from_params(ScenarioId::Custom, &p), Err(Error::Usage(_))));
        let mut p = Params::new();
        p.set("n_c", 6000);
        assert!(ScenarioConfig::from_params(ScenarioId::Custom, &p).is_err());
        assert!("fig6".parse::<ScenarioId>().is_err());
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(matches!(with_workers(Some(0), || Ok(())), Err(Error::Usage(_))));
        assert_eq!(with_workers(Some(1), || Ok(rayon::current_num_threads())).unwrap(), 1);
    }
}
