use clap::{Args, Parser, Subcommand};
use qcd_core::calibration::{estimate_arl, ArlOptions};
use qcd_core::experiments::{
    capacity_table, cmd_cre, fig3, fig8b, latency_custom, rth_table, run_figure, with_workers, CreSeries, Params,
    ScenarioConfig, ScenarioId, Sweep, SweepVar,
};
use qcd_core::sampling::SeededStream;
use qcd_core::table::Table;
use qcd_core::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Quickest detection of optical channel loss changes.
///
/// Every flag can also be set through an environment variable named
/// `QCD_<FLAG>` (for example `QCD_SEED`, `QCD_N_PHOTONS`) or through a
/// `key = value` file passed with `--config`. Flags beat environment
/// variables, which beat the config file.
#[derive(Parser, Debug)]
#[command(name = "qcd", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master seed for every random stream
    #[arg(long, global = true, env = "QCD_SEED")]
    seed: Option<u64>,
    /// Output file (a directory for `figure`); stdout if omitted
    #[arg(long, global = true, env = "QCD_OUT")]
    out: Option<PathBuf>,
    /// Flat `key = value` parameter file
    #[arg(long, global = true, env = "QCD_CONFIG")]
    config: Option<PathBuf>,
    /// Full-scale runs: ARL 2e6 and 500 runs instead of desk-scale sizes
    #[arg(long, global = true, env = "QCD_PAPER_SCALE")]
    paper_scale: bool,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "QCD_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct SchemeArgs {
    /// coherent, squeezed, entangled, kennedy, dv-homodyne or dv-spd
    /// (comma-separated list for `cre`)
    #[arg(long, env = "QCD_SCHEME")]
    scheme: Option<String>,
    /// none or bpsk
    #[arg(long, env = "QCD_MODULATION")]
    modulation: Option<String>,
    /// Coherent photons per pulse N
    #[arg(long, env = "QCD_N_PHOTONS")]
    n_photons: Option<f64>,
    /// Augmentation photons per pulse Na
    #[arg(long, env = "QCD_NA")]
    na: Option<f64>,
    #[arg(long, env = "QCD_ETA1")]
    eta1: Option<f64>,
    #[arg(long, env = "QCD_ETA2")]
    eta2: Option<f64>,
    /// Post-change factor eta2 / eta1 (instead of --eta2)
    #[arg(long, env = "QCD_ETA_TAP")]
    eta_tap: Option<f64>,
    /// Entangled block length
    #[arg(long, env = "QCD_BLOCK")]
    block: Option<usize>,
    /// Kennedy residual photons
    #[arg(long, env = "QCD_NEPS")]
    neps: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct MonteCarloArgs {
    /// Detection runs per point
    #[arg(long, env = "QCD_RUNS")]
    runs: Option<usize>,
    /// Runs per ARL table while calibrating thresholds
    #[arg(long, env = "QCD_CALIBRATION_RUNS")]
    calibration_runs: Option<usize>,
    #[arg(long, env = "QCD_HORIZON")]
    horizon: Option<u64>,
    /// First post-change pulse
    #[arg(long, env = "QCD_N_C")]
    n_c: Option<u64>,
    /// Target ARL to false alarm (pulses)
    #[arg(long, env = "QCD_GAMMA")]
    gamma: Option<f64>,
    /// Fixed CUSUM threshold (skips calibration)
    #[arg(long, env = "QCD_THRESHOLD")]
    threshold: Option<f64>,
    /// Sweep points
    #[arg(long, env = "QCD_POINTS")]
    points: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relative entropy per pulse, optionally swept
    Cre {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// na, s, neps or eta1
        #[arg(long, env = "QCD_SWEEP")]
        sweep: Option<String>,
        #[arg(long, env = "QCD_FROM")]
        from: Option<f64>,
        #[arg(long, env = "QCD_TO")]
        to: Option<f64>,
        #[arg(long, env = "QCD_STEPS")]
        steps: Option<usize>,
    },
    /// Detection latency at a calibrated false-alarm rate
    Latency {
        /// fig3, fig8 or custom
        #[arg(long, env = "QCD_SCENARIO")]
        scenario: Option<String>,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[command(flatten)]
        mc: MonteCarloArgs,
    },
    /// Average run length to false alarm over a threshold grid
    Arl {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long, env = "QCD_H_MIN")]
        h_min: Option<f64>,
        #[arg(long, env = "QCD_H_MAX")]
        h_max: Option<f64>,
        /// Grid points L
        #[arg(long, env = "QCD_POINTS")]
        points: Option<usize>,
        /// Runs M
        #[arg(long, env = "QCD_RUNS")]
        runs: Option<usize>,
        /// Observations per run before censoring
        #[arg(long, env = "QCD_RUN_LENGTH")]
        run_length: Option<u64>,
    },
    /// Squeeze parameter at which squeezed light reaches a target relative entropy
    Rth {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Target relative entropy (default: the displaced single-photon scheme)
        #[arg(long, env = "QCD_TARGET")]
        target: Option<f64>,
    },
    /// BPSK homodyne channel capacity with and without augmentation photons
    Capacity {
        #[arg(long, env = "QCD_ETA")]
        eta: Option<f64>,
        #[arg(long, env = "QCD_N_PHOTONS")]
        n_photons: Option<f64>,
        #[arg(long, env = "QCD_NA")]
        na: Option<f64>,
    },
    /// Reproduce a figure's data (fig2, fig3, fig4, fig5, fig7, fig8)
    Figure {
        id: String,
        #[command(flatten)]
        mc: MonteCarloArgs,
    },
}

impl SchemeArgs {
    fn apply(&self, p: &mut Params) {
        p.set_opt("scheme", self.scheme.as_ref());
        p.set_opt("modulation", self.modulation.as_ref());
        p.set_opt("n_photons", self.n_photons);
        p.set_opt("na", self.na);
        p.set_opt("eta1", self.eta1);
        p.set_opt("eta2", self.eta2);
        p.set_opt("eta_tap", self.eta_tap);
        p.set_opt("block", self.block);
        p.set_opt("neps", self.neps);
    }
}

impl MonteCarloArgs {
    fn apply(&self, p: &mut Params) {
        p.set_opt("runs", self.runs);
        p.set_opt("calibration_runs", self.calibration_runs);
        p.set_opt("horizon", self.horizon);
        p.set_opt("n_c", self.n_c);
        p.set_opt("gamma", self.gamma);
        p.set_opt("threshold", self.threshold);
        p.set_opt("points", self.points);
    }
}

fn emit(table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => table.write_path(path),
        None => table.write_to(std::io::stdout().lock()),
    }
}

fn params(global: &Global) -> Result<Params> {
    let mut p = match &global.config {
        Some(path) => Params::load(path)?,
        None => Params::new(),
    };
    p.set_opt("seed", global.seed);
    p.set_opt("out", global.out.as_ref().map(|o| o.display().to_string()));
    p.set_opt("workers", global.workers);
    if global.paper_scale {
        p.set("paper_scale", true);
    }
    Ok(p)
}

fn scheme_list(p: &Params) -> Result<Vec<String>> {
    Ok(p.raw("scheme").unwrap_or("coherent").split(',').map(|s| s.trim().to_owned()).collect())
}

fn run(cli: Cli) -> Result<()> {
    let mut p = params(&cli.global)?;
    let workers = p.get::<usize>("workers")?;
    match cli.command {
        Command::Cre { scheme, sweep, from, to, steps } => {
            scheme.apply(&mut p);
            p.set_opt("sweep", sweep);
            p.set_opt("from", from);
            p.set_opt("to", to);
            p.set_opt("steps", steps);
            let mut series = Vec::new();
            let mut base = None;
            for name in scheme_list(&p)? {
                let mut q = p.clone();
                q.set("scheme", &name);
                let cfg = ScenarioConfig::from_params(ScenarioId::Custom, &q)?;
                series.push(CreSeries::Scheme(cfg.scheme_kind()));
                base.get_or_insert(cfg);
            }
            let cfg = base.expect("at least one scheme");
            let sweep = match p.raw("sweep") {
                None => None,
                Some(var) => {
                    let var: SweepVar = var.parse()?;
                    let from = p.get::<f64>("from")?.ok_or_else(|| Error::Usage("--sweep needs --from".into()))?;
                    let to = p.get::<f64>("to")?.ok_or_else(|| Error::Usage("--sweep needs --to".into()))?;
                    Some(Sweep::linear(var, from, to, p.get_or("steps", 21)?)?)
                }
            };
            let table = with_workers(workers, || cmd_cre(&series, &cfg.energy, &cfg.channel, sweep.as_ref()))?;
            emit(&table, cfg.out.as_deref())
        }
        Command::Latency { scenario, scheme, mc } => {
            scheme.apply(&mut p);
            mc.apply(&mut p);
            p.set_opt("scenario", scenario);
            let id: ScenarioId = p.raw("scenario").unwrap_or("custom").parse()?;
            let cfg = ScenarioConfig::from_params(id, &p)?;
            match id {
                ScenarioId::Fig3 => {
                    let r = with_workers(workers, || fig3(&cfg))?;
                    eprintln!("slope unmodulated = {:.4}, slope bpsk = {:.4}", r.slope_unmodulated, r.slope_bpsk);
                    emit(&r.table, cfg.out.as_deref())
                }
                ScenarioId::Fig8 => {
                    let r = with_workers(workers, || fig8b(&cfg))?;
                    eprintln!(
                        "crossover = {:?} dB (bpsk {:?} dB), coherent/dv latency ratio = {:.4}",
                        r.crossover_db,
                        r.crossover_db_bpsk,
                        r.latency_ratio()
                    );
                    emit(&r.table, cfg.out.as_deref())
                }
                ScenarioId::Custom => {
                    let (table, stats) = with_workers(workers, || latency_custom(&cfg))?;
                    stats.summary_table().write_to(std::io::stderr().lock())?;
                    emit(&table, cfg.out.as_deref())
                }
                other => Err(Error::Usage(format!("{other} is not a latency scenario (fig3, fig8 or custom)"))),
            }
        }
        Command::Arl { scheme, h_min, h_max, points, runs, run_length } => {
            scheme.apply(&mut p);
            p.set_opt("h_min", h_min);
            p.set_opt("h_max", h_max);
            p.set_opt("points", points);
            p.set_opt("runs", runs);
            p.set_opt("run_length", run_length);
            let cfg = ScenarioConfig::from_params(ScenarioId::Custom, &p)?;
            let opts = ArlOptions {
                h_min: p.get_or("h_min", 0.0)?,
                h_max: p.get_or("h_max", 10.0)?,
                points: p.get_or("points", 200)?,
                runs: cfg.runs,
                run_length: p.get_or("run_length", 100_000)?,
            };
            let scheme = cfg.scheme()?;
            let table = with_workers(workers, || {
                estimate_arl(&scheme, &cfg.channel, &opts, SeededStream::new(cfg.seed, 4))
            })?;
            if table.censoring_warning() {
                eprintln!("warning: more than half the runs never crossed h_max; raise --run-length");
            }
            emit(&table.to_table(), cfg.out.as_deref())
        }
        Command::Rth { scheme, target } => {
            scheme.apply(&mut p);
            p.set_opt("target", target);
            let cfg = ScenarioConfig::from_params(ScenarioId::Custom, &p)?;
            let table = rth_table(&cfg.channel, cfg.energy.n, p.get("target")?)?;
            emit(&table, cfg.out.as_deref())
        }
        Command::Capacity { eta, n_photons, na } => {
            p.set_opt("eta", eta);
            p.set_opt("n_photons", n_photons);
            p.set_opt("na", na);
            let table = capacity_table(p.get_or("eta", 0.9)?, p.get_or("n_photons", 100.0)?, p.get_or("na", 0.1)?)?;
            emit(&table, p.raw("out").map(Path::new))
        }
        Command::Figure { id, mc } => {
            mc.apply(&mut p);
            let id: ScenarioId = id.parse()?;
            let cfg = ScenarioConfig::from_params(id, &p)?;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let tables = with_workers(workers, || run_figure(&cfg))?;
            for (name, table) in tables {
                let path = dir.join(format!("{name}.csv"));
                table.write_path(&path)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qcd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
