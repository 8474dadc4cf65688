//! Relative-entropy sweeps, the squeezing-threshold root and capacity rows.

use super::{ScenarioConfig, ScenarioId};
use crate::error::{Error, Result};
use crate::schemes::{
    bpsk_awgn_capacity, cre_dv_homodyne, cre_entangled_fixed_seed, cre_squeezed_at, squeeze_for_photons,
    ChannelPair, Cre, EnergyParams, Scheme, SchemeKind,
};
use crate::table::{Cell, Table};
use rayon::prelude::*;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// Augmentation photons per pulse.
    Na,
    /// Seed squeeze parameter of the entangled source.
    S,
    /// Kennedy residual photons.
    Neps,
    /// Pre-change transmissivity, with the tap ratio held fixed.
    Eta1,
}

impl SweepVar {
    pub fn column(self) -> &'static str {
        match self {
            SweepVar::Na => "na",
            SweepVar::S => "s",
            SweepVar::Neps => "neps",
            SweepVar::Eta1 => "eta1",
        }
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "na" => Ok(SweepVar::Na),
            "s" => Ok(SweepVar::S),
            "neps" => Ok(SweepVar::Neps),
            "eta1" => Ok(SweepVar::Eta1),
            other => Err(Error::Usage(format!("unknown sweep variable `{other}` (expected na, s, neps or eta1)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

impl Sweep {
    /// `steps` equally spaced values from `from` to `to` inclusive.
    pub fn linear(var: SweepVar, from: f64, to: f64, steps: usize) -> Result<Self> {
        if steps < 1 || !from.is_finite() || !to.is_finite() || (steps > 1 && !(from < to)) {
            return Err(Error::Usage(format!(
                "sweep needs finite from < to and steps >= 1, got {from}..{to} in {steps} steps"
            )));
        }
        let values = if steps == 1 {
            vec![from]
        } else {
            let h = (to - from) / (steps - 1) as f64;
            (0..steps).map(|i| if i + 1 == steps { to } else { from + h * i as f64 }).collect()
        };
        let sweep = Sweep { var, values };
        sweep.check()?;
        Ok(sweep)
    }

    /// `eta1 = 10^(-dB/10)` for `steps` equally spaced losses in dB.
    pub fn loss_db(from_db: f64, to_db: f64, steps: usize) -> Result<Self> {
        let db = Sweep::linear(SweepVar::Na, from_db, to_db, steps)?;
        let sweep = Sweep {
            var: SweepVar::Eta1,
            values: db.values.iter().map(|d| 10f64.powf(-d / 10.0)).collect(),
        };
        sweep.check()?;
        Ok(sweep)
    }

    fn check(&self) -> Result<()> {
        let bad = |v: f64| match self.var {
            SweepVar::Eta1 => !(v > 0.0 && v <= 1.0),
            _ => !(v >= 0.0),
        };
        match self.values.iter().find(|&&v| bad(v)) {
            Some(v) => Err(Error::Usage(format!("sweep value {v} outside the domain of {}", self.var.column()))),
            None => Ok(()),
        }
    }
}

/// One curve of a relative-entropy plot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CreSeries {
    Scheme(SchemeKind),
    /// Entangled block of length `n` with the seed squeeze held at the sweep
    /// value (or derived from `Na` outside an `s` sweep).
    FixedSeed { n: usize },
}

impl CreSeries {
    /// Series name; a Kennedy series swept over `neps` drops its fixed residual.
    pub fn label(&self, energy: &EnergyParams, var: Option<SweepVar>) -> Result<String> {
        Ok(match self {
            CreSeries::Scheme(SchemeKind::KennedyReceiver { .. }) if var == Some(SweepVar::Neps) => "kennedy".into(),
            CreSeries::Scheme(kind) => Scheme::unmodulated(*kind, *energy)?.label(),
            CreSeries::FixedSeed { n } => format!("entangled-n{n}"),
        })
    }

    /// Value at one sweep point.
    pub fn eval(&self, energy: &EnergyParams, ch: &ChannelPair, at: Option<(SweepVar, f64)>) -> Result<Cre> {
        let mut e = *energy;
        let mut ch = *ch;
        let mut kind = match self {
            CreSeries::Scheme(k) => Some(*k),
            CreSeries::FixedSeed { .. } => None,
        };
        let mut seed = None;
        match at {
            Some((SweepVar::Na, x)) => e = EnergyParams::new(e.n, x)?,
            Some((SweepVar::Eta1, x)) => ch = ChannelPair::from_tap(x, ch.eta_tap())?,
            Some((SweepVar::Neps, x)) => {
                if let Some(SchemeKind::KennedyReceiver { .. }) = kind {
                    kind = Some(SchemeKind::KennedyReceiver { residual: x });
                }
            }
            Some((SweepVar::S, x)) => seed = Some(x),
            None => {}
        }
        match (self, kind, seed) {
            (CreSeries::FixedSeed { n }, _, s) => {
                let s = s.unwrap_or_else(|| squeeze_for_photons(*n as f64 * e.na));
                Ok(Cre::Finite(cre_entangled_fixed_seed(&ch, e.n, s, *n)?))
            }
            (_, Some(SchemeKind::SqueezedHomodyne), Some(s)) => Ok(Cre::Finite(cre_squeezed_at(&ch, e.n, s))),
            (_, Some(SchemeKind::EntangledHomodyne { n }), Some(s)) => {
                Ok(Cre::Finite(cre_entangled_fixed_seed(&ch, e.n, s, n)?))
            }
            (_, Some(k), _) => Scheme::unmodulated(k, e)?.cre(&ch),
            (_, None, _) => unreachable!("scheme series always carries a kind"),
        }
    }
}

/// Long-format table: `<sweep var>,series,cre` (or `series,cre` without a
/// sweep), sweep points outermost.
pub fn cmd_cre(series: &[CreSeries], energy: &EnergyParams, ch: &ChannelPair, sweep: Option<&Sweep>) -> Result<Table> {
    if series.is_empty() {
        return Err(Error::Usage("no series requested".into()));
    }
    let labels: Vec<String> = series.iter().map(|s| s.label(energy, sweep.map(|sw| sw.var))).collect::<Result<_>>()?;
    let points: Vec<Option<(SweepVar, f64)>> = match sweep {
        Some(sw) => sw.values.iter().map(|&x| Some((sw.var, x))).collect(),
        None => vec![None],
    };
    let values: Vec<Vec<Cre>> = points
        .par_iter()
        .map(|at| series.iter().map(|s| s.eval(energy, ch, *at)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut table = match sweep {
        Some(sw) => Table::new(&[sw.var.column(), "series", "cre"]),
        None => Table::new(&["series", "cre"]),
    };
    for (at, row) in points.iter().zip(values) {
        for (label, cre) in labels.iter().zip(row) {
            let mut cells: Vec<Cell> = Vec::with_capacity(3);
            if let Some((_, x)) = at {
                cells.push((*x).into());
            }
            cells.push(label.as_str().into());
            cells.push(cre.value().into());
            table.push(cells);
        }
    }
    Ok(table)
}

const BLOCKS: [usize; 8] = [2, 4, 8, 16, 32, 64, 128, 256];

fn kennedy(residual: f64) -> CreSeries {
    CreSeries::Scheme(SchemeKind::KennedyReceiver { residual })
}

/// Series and sweep of a relative-entropy figure.
pub fn figure_layout(id: ScenarioId) -> Result<(Vec<CreSeries>, Sweep)> {
    use SchemeKind::*;
    let coherent = CreSeries::Scheme(CoherentHomodyne);
    let squeezed = CreSeries::Scheme(SqueezedHomodyne);
    let ent8 = CreSeries::Scheme(EntangledHomodyne { n: 8 });
    Ok(match id {
        ScenarioId::Fig2 => {
            let mut s = vec![coherent, squeezed];
            s.extend(BLOCKS.iter().map(|&n| CreSeries::Scheme(EntangledHomodyne { n })));
            (s, Sweep::linear(SweepVar::Na, 0.0, 5.0, 101)?)
        }
        ScenarioId::Fig4 => (
            BLOCKS.iter().map(|&n| CreSeries::FixedSeed { n }).collect(),
            Sweep::linear(SweepVar::S, 0.0, 1.5, 61)?,
        ),
        ScenarioId::Fig5 => (
            vec![coherent, squeezed, ent8, kennedy(0.1), kennedy(0.01), kennedy(1e-3), kennedy(1e-4)],
            Sweep::loss_db(0.05, 3.0, 60)?,
        ),
        ScenarioId::Fig7 => (
            vec![
                coherent,
                squeezed,
                ent8,
                kennedy(1e-4),
                kennedy(1e-5),
                CreSeries::Scheme(SinglePhotonHomodyne),
                CreSeries::Scheme(SinglePhotonSpd),
            ],
            Sweep::loss_db(0.1, 2.0, 20)?,
        ),
        ScenarioId::Fig8 => (
            vec![coherent, CreSeries::Scheme(SinglePhotonHomodyne), squeezed, ent8],
            Sweep::loss_db(0.05, 3.0, 60)?,
        ),
        other => return Err(Error::Usage(format!("{other} has no relative-entropy layout"))),
    })
}

/// Relative-entropy table of a figure (fig8 gives panel a).
pub fn cre_figure(cfg: &ScenarioConfig) -> Result<Table> {
    let (series, sweep) = figure_layout(cfg.scenario)?;
    cmd_cre(&series, &cfg.energy, &cfg.channel, Some(&sweep))
}

const RTH_R_MAX: f64 = 3.0;
const RTH_TOL: f64 = 1e-9;

/// Squeeze parameter at which the displaced squeezed scheme (`N` coherent
/// photons) reaches `target`, by bisection on `r` in `[0, 3]`.
pub fn cmd_root_rth(ch: &ChannelPair, n: f64, target: f64) -> Result<f64> {
    let f = |r: f64| cre_squeezed_at(ch, n, r);
    let (lo_val, hi_val) = (f(0.0), f(RTH_R_MAX));
    if !(target >= lo_val && target <= hi_val) {
        return Err(Error::Range { target, lo: lo_val, hi: hi_val });
    }
    let (mut lo, mut hi) = (0.0, RTH_R_MAX);
    while hi - lo > RTH_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `target,r,na,squeezing_db`; the default target is the displaced
/// single-photon scheme at `alpha = sqrt(N)`.
pub fn rth_table(ch: &ChannelPair, n: f64, target: Option<f64>) -> Result<Table> {
    let target = match target {
        Some(t) => t,
        None => cre_dv_homodyne(ch, n.sqrt())?,
    };
    let r = cmd_root_rth(ch, n, target)?;
    let mut t = Table::new(&["target", "r", "na", "squeezing_db"]);
    let na = r.sinh().powi(2);
    t.push(vec![target.into(), r.into(), na.into(), (20.0 * r / std::f64::consts::LN_10).into()]);
    Ok(t)
}

/// `eta,n_photons,na,capacity,capacity_augmented,delta`: BPSK capacity at `N`
/// and at `N + Na`.
pub fn capacity_table(eta: f64, n: f64, na: f64) -> Result<Table> {
    if !(na >= 0.0) {
        return Err(Error::Usage(format!("augmentation photons must be >= 0, got {na}")));
    }
    let c0 = bpsk_awgn_capacity(eta, n)?;
    let c1 = bpsk_awgn_capacity(eta, n + na)?;
    let mut t = Table::new(&["eta", "n_photons", "na", "capacity", "capacity_augmented", "delta"]);
    t.push(vec![eta.into(), n.into(), na.into(), c0.into(), c1.into(), (c1 - c0).into()]);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{cre_coherent, cre_squeezed};

    fn fig2() -> (EnergyParams, ChannelPair) {
        (EnergyParams::new(100.0, 1.0).unwrap(), ChannelPair::new(0.9, 0.85).unwrap())
    }

    #[test]
    fn sweep_bounds() {
        assert!(Sweep::linear(SweepVar::Na, 1.0, 0.0, 5).is_err());
        assert!(Sweep::linear(SweepVar::Na, -1.0, 1.0, 5).is_err());
        assert!(Sweep::linear(SweepVar::Na, 0.0, 1.0, 0).is_err());
        assert!(Sweep::linear(SweepVar::Eta1, 0.5, 1.5, 3).is_err());
        let s = Sweep::linear(SweepVar::Na, 0.0, 5.0, 101).unwrap();
        assert_eq!(s.values[20], 1.0);
        assert_eq!(*s.values.last().unwrap(), 5.0);
        let l = Sweep::loss_db(0.0, 10.0, 2).unwrap();
        assert_eq!(l.values, vec![1.0, 0.1]);
    }

    #[test]
    fn single_point_table() {
        let (e, ch) = fig2();
        let t = cmd_cre(&[CreSeries::Scheme(SchemeKind::CoherentHomodyne)], &e, &ch, None).unwrap();
        assert_eq!(t.header(), ["series", "cre"]);
        assert_eq!(t.rows()[0][1].as_f64().unwrap(), cre_coherent(&ch, &e));
    }

    #[test]
    fn fig2_identity_at_na_one() {
        let (e, ch) = fig2();
        let (series, sweep) = figure_layout(ScenarioId::Fig2).unwrap();
        let t = cmd_cre(&series, &e, &ch, Some(&sweep)).unwrap();
        let row = t
            .rows()
            .iter()
            .find(|r| r[0].as_f64() == Some(1.0) && r[1].as_str() == Some("squeezed"))
            .unwrap();
        assert_eq!(row[2].as_f64().unwrap(), cre_squeezed(&ch, &e));
        assert_eq!(t.len(), 101 * 10);
    }

    #[test]
    fn s_sweep_squeezed_matches_direct() {
        let (e, ch) = fig2();
        let v = CreSeries::Scheme(SchemeKind::SqueezedHomodyne).eval(&e, &ch, Some((SweepVar::S, 0.4))).unwrap();
        assert_eq!(v.value(), cre_squeezed_at(&ch, 100.0, 0.4));
        let w = CreSeries::FixedSeed { n: 1 }.eval(&e, &ch, Some((SweepVar::S, 0.4))).unwrap();
        assert!((w.value() - v.value()).abs() < 1e-12);
    }

    #[test]
    fn rth_round_trip() {
        let (_, ch) = fig2();
        let target = cre_squeezed_at(&ch, 100.0, 1.0);
        assert!((cmd_root_rth(&ch, 100.0, target).unwrap() - 1.0).abs() < 1e-6);
        assert!(matches!(cmd_root_rth(&ch, 100.0, 100.0), Err(Error::Range { .. })));
        assert!(matches!(cmd_root_rth(&ch, 100.0, 0.01), Err(Error::Range { .. })));
    }
}
