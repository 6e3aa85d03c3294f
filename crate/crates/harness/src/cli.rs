//! Command-line front end.

use std::f64::consts::FRAC_PI_2;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use raa_core::array::{ElementPattern, FrontEnd, RaaConfig, UlaConfig};
use raa_core::beam::{
    angle_grid, resolution_table, write_pattern_csv, write_resolution_csv, BeamPattern,
};
use raa_core::sensing::{run_pipeline, write_dd_map_csv, write_estimates_csv, write_spectrum_csv};
use raa_core::signal::{
    data_removal, element_sum_response, probe_selection, read_tensor, synthesize_tensor,
    synthesize_time_domain_oracle, write_scenario_csv, write_tensor, OfdmConfig, PathParams,
    SelectionMatrix, SymbolGrid, TensorKind,
};

use crate::campaign::{
    centroid_rates, rates_csv, run_montecarlo, trial_paths, trial_seeds, CentroidSummary, Models,
    Receiver, ReceiverSummary,
};
use crate::config::{load_config, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::metrics::aoa_rmse;

#[derive(Debug, Parser)]
#[command(name = "raa-isac", version, about = "Ray antenna array ISAC simulator")]
pub struct Cli {
    /// Configuration file (INI sections).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in preset used when no config file is given.
    #[arg(long, global = true, default_value = "paper_table1")]
    pub preset: String,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArrayArg {
    Raa,
    Ula,
}

impl From<ArrayArg> for Receiver {
    fn from(a: ArrayArg) -> Self {
        match a {
            ArrayArg::Raa => Receiver::Raa,
            ArrayArg::Ula => Receiver::Ula,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Beam pattern magnitude over the observation angle.
    Beampattern {
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long, value_enum, default_value = "raa")]
        array: ArrayArg,
        /// Desired directions in degrees.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "0"
        )]
        theta_prime: Vec<f64>,
        /// Observation grid step in degrees.
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Angular resolution of both arrays over the desired direction.
    Resolution {
        #[arg(long = "M")]
        m: Option<usize>,
        /// Grid step in degrees.
        #[arg(long, default_value_t = 0.5)]
        step: f64,
    },
    /// Draws a scenario and writes the raw and data-removed tensors.
    Simulate {
        /// Swarm centroid in degrees; the first configured centroid by default.
        #[arg(long, allow_negative_numbers = true)]
        centroid: Option<f64>,
        #[arg(long, value_enum, default_value = "raa")]
        array: ArrayArg,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Runs the estimation chain on a stored tensor or a fresh scenario.
    Sense {
        /// Data-removed tensor written by `simulate`.
        #[arg(long, requires = "selection")]
        tensor: Option<PathBuf>,
        /// Selected ports, one per line after a `port` header.
        #[arg(long)]
        selection: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        centroid: Option<f64>,
        #[arg(long, value_enum, default_value = "raa")]
        array: ArrayArg,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Expected uplink rate per centroid.
    Rate,
    /// Full Monte Carlo campaign.
    Montecarlo,
    /// Time-domain and element-level consistency checks.
    OracleCheck,
}

/// Parses `argv` and runs the command; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Config from `--config` or `--preset`, then the `--seed` and `--out` overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::preset(&cli.preset)?,
    };
    if let Some(seed) = cli.seed {
        cfg.montecarlo.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Beampattern {
            m,
            array,
            theta_prime,
            step,
        } => beampattern(
            &cfg,
            m.unwrap_or(cfg.array.elements),
            *array,
            theta_prime,
            *step,
        ),
        Command::Resolution { m, step } => resolution(&cfg, m.unwrap_or(cfg.array.elements), *step),
        Command::Simulate {
            centroid,
            array,
            trial,
        } => simulate(&cfg, *centroid, (*array).into(), *trial),
        Command::Sense {
            tensor,
            selection,
            centroid,
            array,
            trial,
        } => match tensor {
            Some(t) => sense_file(
                &cfg,
                t,
                selection.as_deref().unwrap_or(Path::new("")),
                (*array).into(),
            ),
            None => sense_fresh(&cfg, *centroid, (*array).into(), *trial),
        },
        Command::Rate => rate(&cfg),
        Command::Montecarlo => {
            let manifest = run_montecarlo(&cfg, &cfg.output_dir)?;
            for f in &manifest.files {
                println!("wrote {}", f.display());
            }
            if !manifest.failures.is_empty() {
                eprintln!(
                    "{} trial(s) failed, see manifest.txt",
                    manifest.failures.len()
                );
            }
            Ok(())
        }
        Command::OracleCheck => oracle_check(),
    }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let f = File::create(&path)?;
    Ok((path, BufWriter::new(f)))
}

fn wavelength(cfg: &ExperimentConfig) -> f64 {
    cfg.ofdm_config().wavelength()
}

fn invalid(e: raa_core::Error) -> HarnessError {
    HarnessError::Validation(e.to_string())
}

fn beampattern(
    cfg: &ExperimentConfig,
    m: usize,
    array: ArrayArg,
    theta_prime: &[f64],
    step: f64,
) -> Result<()> {
    if !(step > 0.0) {
        return Err(HarnessError::Validation("step must be positive".into()));
    }
    let thetas = angle_grid(-FRAC_PI_2, FRAC_PI_2, step.to_radians());
    let lambda = wavelength(cfg);
    let pattern: Box<dyn BeamPattern> = match array {
        ArrayArg::Raa => {
            let a = &cfg.array;
            let el =
                ElementPattern::three_gpp(a.raa_peak_gain_db, a.raa_beamwidth_deg.to_radians());
            Box::new(RaaConfig::design(m, a.eta_max_deg.to_radians(), lambda, el).map_err(invalid)?)
        }
        ArrayArg::Ula => {
            let a = &cfg.array;
            let el =
                ElementPattern::three_gpp(a.ula_peak_gain_db, a.ula_beamwidth_deg.to_radians());
            Box::new(UlaConfig::new(m, lambda, el).map_err(invalid)?)
        }
    };
    let samples: Vec<_> = theta_prime
        .iter()
        .flat_map(|tp| pattern.samples(&thetas, tp.to_radians()))
        .collect();
    let (path, mut w) = create(&cfg.output_dir, "beampattern.csv")?;
    write_pattern_csv(&mut w, &samples)?;
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn resolution(cfg: &ExperimentConfig, m: usize, step: f64) -> Result<()> {
    if !(step > 0.0) {
        return Err(HarnessError::Validation("step must be positive".into()));
    }
    let lim = 90.0 - step;
    let grid = angle_grid(-lim.to_radians(), lim.to_radians(), step.to_radians());
    let rows = resolution_table(m, &grid).map_err(invalid)?;
    let (path, mut w) = create(&cfg.output_dir, "resolution.csv")?;
    write_resolution_csv(&mut w, &rows)?;
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

struct Shot {
    paths: Vec<PathParams>,
    selection: SelectionMatrix,
    grid: SymbolGrid,
    raw: raa_core::signal::SignalTensor,
}

fn shoot(
    cfg: &ExperimentConfig,
    models: &Models,
    centroid: Option<f64>,
    receiver: Receiver,
    trial: u64,
) -> Result<Shot> {
    let centroid = centroid.unwrap_or(cfg.scenario.centroids_deg[0]);
    let seeds = trial_seeds(cfg.montecarlo.seed, 0, trial);
    let paths = trial_paths(cfg, centroid, &seeds)?;
    let fe = models.front_end(receiver);
    let ofdm = &models.ofdm;
    let noise = models.noise;
    let selection = probe_selection(&paths, fe, ofdm, noise.then_some(seeds.probe_noise))?;
    let grid = SymbolGrid::qpsk(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power, seeds.symbols);
    let raw = synthesize_tensor(
        &paths,
        fe,
        ofdm,
        &selection,
        &grid,
        noise.then_some(seeds.tensor_noise),
    )?;
    Ok(Shot {
        paths,
        selection,
        grid,
        raw,
    })
}

fn write_selection(dir: &Path, sel: &SelectionMatrix) -> Result<PathBuf> {
    let (path, mut w) = create(dir, "selection.csv")?;
    writeln!(w, "port")?;
    for p in sel.ports() {
        writeln!(w, "{p}")?;
    }
    w.flush()?;
    Ok(path)
}

fn read_selection(path: &Path, num_ports: usize) -> Result<SelectionMatrix> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "port" => {}
        _ => {
            return Err(HarnessError::Runtime(format!(
                "{}: expected a 'port' header",
                path.display()
            )))
        }
    }
    let ports = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| {
                HarnessError::Runtime(format!("{} line {}: bad port '{l}'", path.display(), i + 1))
            })
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(SelectionMatrix::new(ports, num_ports)?)
}

fn simulate(
    cfg: &ExperimentConfig,
    centroid: Option<f64>,
    receiver: Receiver,
    trial: u64,
) -> Result<()> {
    let models = Models::build(cfg)?;
    let shot = shoot(cfg, &models, centroid, receiver, trial)?;
    let dir = &cfg.output_dir;
    let (scen, mut w) = create(dir, "scenario.csv")?;
    write_scenario_csv(&mut w, &shot.paths)?;
    w.flush()?;
    let sel = write_selection(dir, &shot.selection)?;
    let (raw, mut w) = create(dir, "tensor_raw.bin")?;
    write_tensor(&mut w, &shot.raw)?;
    w.flush()?;
    let (clean, mut w) = create(dir, "tensor_data_removed.bin")?;
    write_tensor(&mut w, &data_removal(&shot.raw, &shot.grid)?)?;
    w.flush()?;
    for p in [scen, sel, raw, clean] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn write_estimation(
    cfg: &ExperimentConfig,
    ofdm: &OfdmConfig,
    est: &raa_core::sensing::EstimationResult,
) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    let (e, mut w) = create(dir, "estimates.csv")?;
    write_estimates_csv(&mut w, est)?;
    w.flush()?;
    let (s, mut w) = create(dir, "music_spectrum.csv")?;
    write_spectrum_csv(&mut w, &est.music_spectrum)?;
    w.flush()?;
    let mut files = vec![e, s];
    for (k, map) in est.dd_maps.iter().enumerate() {
        let (p, mut w) = create(dir, &format!("dd_map_{k}.csv"))?;
        write_dd_map_csv(&mut w, map, ofdm)?;
        w.flush()?;
        files.push(p);
    }
    Ok(files)
}

fn sense_file(
    cfg: &ExperimentConfig,
    tensor: &Path,
    selection: &Path,
    receiver: Receiver,
) -> Result<()> {
    let models = Models::build(cfg)?;
    let fe = models.front_end(receiver);
    let y = read_tensor(&mut BufReader::new(File::open(tensor)?))?;
    if y.kind != TensorKind::DataRemoved {
        return Err(HarnessError::Runtime(
            "sense needs the data-removed tensor; the raw tensor lacks its symbols".into(),
        ));
    }
    let sel = read_selection(selection, fe.num_ports())?;
    let ofdm = OfdmConfig {
        subcarriers: y.subcarriers,
        symbols: y.symbols,
        rf_chains: y.chains,
        ..models.ofdm.clone()
    };
    let mut opts = models.options(receiver).clone();
    opts.keep_maps = true;
    let est = run_pipeline(&y, fe, &sel, &ofdm, models.source_count, &opts)?;
    for p in write_estimation(cfg, &ofdm, &est)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn sense_fresh(
    cfg: &ExperimentConfig,
    centroid: Option<f64>,
    receiver: Receiver,
    trial: u64,
) -> Result<()> {
    let models = Models::build(cfg)?;
    let shot = shoot(cfg, &models, centroid, receiver, trial)?;
    let yb = data_removal(&shot.raw, &shot.grid)?;
    let mut opts = models.options(receiver).clone();
    opts.keep_maps = true;
    let fe = models.front_end(receiver);
    let est = run_pipeline(
        &yb,
        fe,
        &shot.selection,
        &models.ofdm,
        models.source_count,
        &opts,
    )?;
    let (scen, mut w) = create(&cfg.output_dir, "scenario.csv")?;
    write_scenario_csv(&mut w, &shot.paths)?;
    w.flush()?;
    let mut files = write_estimation(cfg, &models.ofdm, &est)?;
    files.insert(0, scen);
    for p in files {
        println!("wrote {}", p.display());
    }
    let truth: Vec<f64> = shot.paths.iter().map(|p| p.aoa).collect();
    let rmse = aoa_rmse(&truth, &est.aoas).map(f64::to_degrees);
    println!(
        "detected {} of {}, AoA RMSE {}",
        est.detected_count,
        truth.len(),
        rmse.map_or("undefined".into(), |r| format!("{r:.4} deg"))
    );
    Ok(())
}

fn rate(cfg: &ExperimentConfig) -> Result<()> {
    let models = Models::build(cfg)?;
    let blank = ReceiverSummary {
        rmse_deg: None,
        missing_shots: 0.0,
        failures: 0,
    };
    let summaries = (0..cfg.scenario.centroids_deg.len())
        .map(|c| {
            Ok(CentroidSummary {
                centroid_deg: cfg.scenario.centroids_deg[c],
                raa: blank,
                ula: blank,
                rates: centroid_rates(cfg, &models, c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("rates.csv");
    fs::write(&path, rates_csv(&summaries))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Outcome of one consistency check.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
}

impl OracleCase {
    pub fn passed(&self) -> bool {
        self.error < self.tolerance
    }
}

const ORACLE_TOL: f64 = 1e-9;

fn small_ofdm(subcarriers: usize, symbols: usize, chains: usize) -> OfdmConfig {
    OfdmConfig {
        subcarriers,
        symbols,
        rf_chains: chains,
        ..OfdmConfig::table1()
    }
}

fn oracle_paths(count: usize, ofdm: &OfdmConfig) -> Vec<PathParams> {
    let all = [
        PathParams {
            gain: num_complex::Complex64::from_polar(1.0, 0.4),
            aoa: 0.21,
            delay: 0.37 * ofdm.cp_duration,
            doppler: 410.0,
            is_los: true,
        },
        PathParams {
            gain: num_complex::Complex64::from_polar(0.6, -1.1),
            aoa: -0.63,
            delay: 0.81 * ofdm.cp_duration,
            doppler: -260.0,
            is_los: false,
        },
    ];
    all[..count].to_vec()
}

/// Frequency-domain synthesis against the time-domain receiver, and the
/// closed-form port responses against explicit element sums.
pub fn oracle_suite() -> Result<Vec<OracleCase>> {
    let lambda = OfdmConfig::table1().wavelength();
    let raa4 = FrontEnd::Raa(RaaConfig::design(
        4,
        FRAC_PI_2,
        lambda,
        ElementPattern::raa_directional(),
    )?);
    let ula4 = FrontEnd::Ula(UlaConfig::with_codebook(
        4,
        6,
        lambda,
        ElementPattern::ula_wide(),
    )?);
    let mut cases = Vec::new();
    for (label, fe) in [("raa M=4", &raa4), ("ula M=4 N'=6", &ula4)] {
        for n_sc in [8, 16, 32] {
            for count in [1, 2] {
                let sel = SelectionMatrix::all(fe.num_ports());
                let ofdm = small_ofdm(n_sc, 2, sel.len());
                let paths = oracle_paths(count, &ofdm);
                let grid = SymbolGrid::qpsk(n_sc, 2, ofdm.tx_power, n_sc as u64 + count as u64);
                let freq = synthesize_tensor(&paths, fe, &ofdm, &sel, &grid, None)?;
                let time = synthesize_time_domain_oracle(&paths, fe, &ofdm, &sel, &grid)?;
                cases.push(OracleCase {
                    name: format!("time vs frequency, {label}, N_sc={n_sc}, {count} path(s)"),
                    error: freq.max_relative_error(&time),
                    tolerance: ORACLE_TOL,
                });
            }
        }
    }
    let thetas = angle_grid(-1.5, 1.5, 0.0137);
    let fronts = [
        (
            "raa M=128",
            FrontEnd::Raa(RaaConfig::design(
                128,
                FRAC_PI_2,
                lambda,
                ElementPattern::raa_directional(),
            )?),
        ),
        (
            "ula M=128",
            FrontEnd::Ula(UlaConfig::new(128, lambda, ElementPattern::ula_wide())?),
        ),
        (
            "ula M=128 N'=200",
            FrontEnd::Ula(UlaConfig::with_codebook(
                128,
                200,
                lambda,
                ElementPattern::ula_wide(),
            )?),
        ),
    ];
    for (label, fe) in &fronts {
        let mut worst: f64 = 0.0;
        for port in 0..fe.num_ports() {
            for &t in &thetas {
                let d = (fe.port_response(t, port) - element_sum_response(fe, t, port)).norm();
                worst = worst.max(d / fe.elements_per_port() as f64);
            }
        }
        cases.push(OracleCase {
            name: format!("closed form vs element sum, {label}"),
            error: worst,
            tolerance: ORACLE_TOL,
        });
    }
    Ok(cases)
}

fn oracle_check() -> Result<()> {
    let cases = oracle_suite()?;
    let mut failed = 0;
    for c in &cases {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        println!(
            "{tag} {}: max error {:.3e} (tol {:.0e})",
            c.name, c.error, c.tolerance
        );
        if !c.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(HarnessError::Runtime(format!(
            "{failed} oracle check(s) failed"
        )));
    }
    println!("all {} oracle checks passed", cases.len());
    Ok(())
}
