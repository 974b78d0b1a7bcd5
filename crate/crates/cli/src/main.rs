//! `spinlabel`: branch tables, spectra, simulated datasets and inference runs from a TOML
//! configuration or a shipped preset.

mod error;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use spinlabel::config::{preset, NoiseConfig, RunConfig, TumbleConfig, PRESET_NAMES};
use spinlabel::deer::{Mode, Spectrum};
use spinlabel::inference::{simulate_dataset, Dataset, MeasurementMode};
use spinlabel::nitroxide::{
    branch_robustness_scan, branches_diagonalized, HamiltonianTerms, Isotope, IsotopeParams, NitroxideConfig,
};
use spinlabel::rotation::RotationAngles;
use spinlabel::units::to_mhz;

use crate::error::{CliError, EXIT_USAGE};
use crate::output::Run;

/// Thread count used when --threads is absent.
const THREADS_ENV: &str = "SPINLABEL_THREADS";

/// Preset used when neither --config nor --preset is given.
const DEFAULT_PRESET: &str = "fig2b";

#[derive(Parser, Debug)]
#[command(name = "spinlabel", version, about = "NV-center DEER simulation and spin-label distance inference")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Run configuration (TOML).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped configuration by name.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; 0 picks one per core. Falls back to SPINLABEL_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate energy-transition branches over polar angle and field.
    Branches(BranchesArgs),
    /// Compute the NV spectrum over an RF grid.
    Spectrum(SpectrumArgs),
    /// Simulate a measured dataset from a spectrum.
    SimulateData(SimulateArgs),
    /// Sample the posterior of the response-model parameters.
    Infer(InferArgs),
}

#[derive(Args, Debug)]
struct BranchesArgs {
    /// Polar angles in degrees as start:stop:step.
    #[arg(long)]
    theta: Option<String>,
    /// Comma-separated fields in mT.
    #[arg(long)]
    bz: Option<String>,
    #[arg(long, value_enum)]
    isotope: Option<IsotopeArg>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    noise: Option<Switch>,
    /// `off`, or `sigma=DEG[,nodes=N]`.
    #[arg(long)]
    tumble: Option<String>,
    /// RF grid in MHz as start:stop:count.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Spectrum CSV to sample from; computed from the configuration when absent.
    #[arg(long)]
    spectrum: Option<PathBuf>,
    /// Measurements per frequency.
    #[arg(long = "Nm")]
    nm: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<MeasurementArg>,
}

#[derive(Args, Debug)]
struct InferArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long = "burn-in")]
    burn_in: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum IsotopeArg {
    #[value(name = "N14")]
    N14,
    #[value(name = "N15")]
    N15,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Full,
    Reduced,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Switch {
    On,
    Off,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MeasurementArg {
    Ideal,
    Photon,
}

fn parse_triple(flag: &str, s: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::usage(format!("--{flag} expects start:stop:value, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    Ok((v[0], v[1], v[2]))
}

fn parse_tumble(s: &str, current: Option<&TumbleConfig>) -> Result<Option<TumbleConfig>, CliError> {
    if s == "off" {
        return Ok(None);
    }
    let mut sigma = None;
    let mut nodes = None;
    for item in s.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--tumble: expected key=value, got `{item}`")))?;
        match k.trim() {
            "sigma" => {
                sigma =
                    Some(v.trim().parse::<f64>().map_err(|_| CliError::usage(format!("--tumble: bad sigma `{v}`")))?)
            }
            "nodes" => {
                nodes =
                    Some(v.trim().parse::<usize>().map_err(|_| CliError::usage(format!("--tumble: bad nodes `{v}`")))?)
            }
            other => return Err(CliError::usage(format!("--tumble: unknown key `{other}`"))),
        }
    }
    let sigma = sigma.ok_or_else(|| CliError::usage("--tumble needs sigma=DEG"))?;
    let mut t = current.cloned().unwrap_or_else(|| TumbleConfig::new(sigma));
    t.sigma_deg = sigma;
    if let Some(n) = nodes {
        t.nodes = n;
    }
    Ok(Some(t))
}

fn load_config(g: &Global) -> Result<RunConfig, CliError> {
    let mut cfg = match (&g.config, &g.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            RunConfig::from_toml(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => preset(DEFAULT_PRESET)?,
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Applies the command's flags to the configuration and re-validates it, so the hash and
/// the recorded configuration describe exactly what ran.
fn apply_flags(cfg: &mut RunConfig, command: &Command) -> Result<(), CliError> {
    match command {
        Command::Branches(a) => {
            if let Some(t) = &a.theta {
                let (start, stop, step) = parse_triple("theta", t)?;
                cfg.branches.theta_start_deg = start;
                cfg.branches.theta_stop_deg = stop;
                cfg.branches.theta_step_deg = step;
            }
            if let Some(b) = &a.bz {
                cfg.branches.bz_mt = b
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| CliError::usage(format!("--bz expects comma-separated numbers, got `{b}`")))?;
            }
            if let Some(i) = a.isotope {
                cfg.branches.isotope = Some(match i {
                    IsotopeArg::N14 => Isotope::N14,
                    IsotopeArg::N15 => Isotope::N15,
                });
            }
        }
        Command::Spectrum(a) => {
            if let Some(m) = a.mode {
                cfg.model.mode = match m {
                    ModeArg::Full => Mode::Full,
                    ModeArg::Reduced => Mode::Reduced,
                };
            }
            match a.noise {
                Some(Switch::Off) => cfg.noise = None,
                Some(Switch::On) if cfg.noise.is_none() => cfg.noise = Some(NoiseConfig::default()),
                _ => {}
            }
            if let Some(t) = &a.tumble {
                cfg.tumble = parse_tumble(t, cfg.tumble.as_ref())?;
            }
            if let Some(g) = &a.grid {
                let (start, stop, count) = parse_triple("grid", g)?;
                if !(count >= 1.0 && count.fract() == 0.0) {
                    return Err(CliError::usage(format!("--grid: count must be a positive integer, got {count}")));
                }
                cfg.grid.start_mhz = start;
                cfg.grid.stop_mhz = stop;
                cfg.grid.count = count as usize;
            }
        }
        Command::SimulateData(a) => {
            if let Some(n) = a.nm {
                cfg.measurement.shots = n;
            }
            if let Some(m) = a.mode {
                cfg.measurement.mode = match m {
                    MeasurementArg::Ideal => MeasurementMode::Ideal,
                    MeasurementArg::Photon => MeasurementMode::Photon,
                };
            }
        }
        Command::Infer(a) => {
            if let Some(s) = a.steps {
                cfg.inference.steps = s;
            }
            if let Some(b) = a.burn_in {
                cfg.inference.burn_in = b;
            }
            if let Some(c) = a.chains {
                cfg.inference.chains = c;
            }
            if cfg.inference.steps <= cfg.inference.burn_in {
                return Err(CliError::usage(format!(
                    "--steps ({}) must exceed --burn-in ({})",
                    cfg.inference.steps, cfg.inference.burn_in
                )));
            }
        }
    }
    cfg.validate()?;
    Ok(())
}

fn cmd_branches(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut run = Run::start(out, "branches", cfg)?;
    let c = cfg.constants()?;
    let label = cfg.label(0)?;
    let isotope = cfg.branches.isotope.unwrap_or(label.isotope.isotope);
    let iso = IsotopeParams::of(isotope, &c);
    let grid = cfg.branches.theta_grid()?;
    let rows = branch_robustness_scan(&iso, &label.lande, &grid, &cfg.branches.bz_mt, &c)?;

    let mut s = String::new();
    let _ = writeln!(s, "# kind: branches");
    let _ = writeln!(s, "# isotope: {isotope}");
    let _ = writeln!(s, "# energy_diag_MHz: exact diagonalization at phi = 0");
    let _ = writeln!(s, "# config_hash: {}", run.hash);
    s.push_str("theta_deg,bz_mT,branch,energy_MHz,energy_diag_MHz\n");
    let mut diag_cache: Option<(f64, f64, spinlabel::nitroxide::BranchSet)> = None;
    for r in &rows {
        let fresh = !matches!(&diag_cache, Some((t, b, _)) if *t == r.theta && *b == r.bz);
        if fresh {
            let mut n = NitroxideConfig::new(iso, RotationAngles::new(r.theta, 0.0)?);
            n.lande = label.lande;
            diag_cache = Some((r.theta, r.bz, branches_diagonalized(&n, r.bz, &c, HamiltonianTerms::ALL)?));
        }
        let diag = diag_cache.as_ref().and_then(|(_, _, set)| set.get(r.label)).expect("same labels in both tables");
        // Degrees round-trip through radians; trim the last-bit noise from the printed angle.
        let theta_deg = (r.theta.to_degrees() * 1e9).round() / 1e9;
        let _ = writeln!(s, "{theta_deg},{},{},{},{}", r.bz, r.label, to_mhz(r.energy), to_mhz(diag));
    }
    run.write("branches.csv", &s)?;
    run.finish(vec![cfg.seed])
}

fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut run = Run::start(out, "spectrum", cfg)?;
    let mut s = cfg.spectrum()?;
    s.meta.config_hash = Some(run.hash.clone());
    run.write("spectrum.csv", &s.to_csv())?;
    run.finish(vec![cfg.seed])
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn cmd_simulate(cfg: &RunConfig, a: &SimulateArgs, out: &Path) -> Result<(), CliError> {
    let mut run = Run::start(out, "simulate-data", cfg)?;
    let spectrum = match &a.spectrum {
        Some(p) => Spectrum::from_csv(&read_text(p)?)?,
        None => cfg.spectrum()?,
    };
    let mm = cfg.measurement.model(spectrum.mean_value())?;
    let mut data = simulate_dataset(&spectrum, &mm, cfg.seed)?;
    data.config_hash = Some(run.hash.clone());
    run.write("dataset.csv", &data.to_csv())?;
    run.finish(vec![cfg.seed])
}

fn cmd_infer(cfg: &RunConfig, a: &InferArgs, out: &Path) -> Result<(), CliError> {
    let data = Dataset::from_csv(&read_text(&a.data)?)?;
    let baseline = cfg.inference.baseline.or(data.baseline).ok_or_else(|| {
        CliError::usage("the dataset carries no baseline; set inference.baseline in the configuration")
    })?;
    let mut run = Run::start(out, "infer", cfg)?;
    let (chains, mut summary) = cfg.infer(&data, baseline, cfg.seed)?;
    summary.config_hash = Some(run.hash.clone());
    for (k, chain) in chains.iter().enumerate() {
        run.write(&format!("chain-{k}.csv"), &chain.to_csv(Some(&run.hash)))?;
    }
    run.write("summary.json", &summary.to_json())?;
    let seeds = summary.seeds.clone();
    run.finish(seeds)?;
    if let Some(stall) = summary.stalls.first() {
        return Err(spinlabel::Error::Stall { window: stall.window, log_posterior: stall.log_posterior }.into());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = match cli.global.threads {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?,
            Err(_) => 0,
        },
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::usage(format!("--threads: {e}")))?;
    }
    if let Some(name) = &cli.global.preset {
        if !PRESET_NAMES.contains(&name.as_str()) {
            return Err(CliError::usage(format!("unknown preset `{name}`; available: {}", PRESET_NAMES.join(", "))));
        }
    }
    let mut cfg = load_config(&cli.global)?;
    apply_flags(&mut cfg, &cli.command)?;
    let out = &cli.global.out;
    match &cli.command {
        Command::Branches(_) => cmd_branches(&cfg, out),
        Command::Spectrum(_) => cmd_spectrum(&cfg, out),
        Command::SimulateData(a) => cmd_simulate(&cfg, a, out),
        Command::Infer(a) => cmd_infer(&cfg, a, out),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                std::process::exit(if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    EXIT_USAGE
                } else {
                    0
                });
            }
            let message =
                e.to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::usage(message).to_line());
            std::process::exit(EXIT_USAGE);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("{}", e.to_line());
        std::process::exit(e.exit);
    }
}
