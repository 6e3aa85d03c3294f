//! Monte Carlo campaigns over a sweep of swarm centroids.
//!
//! Every trial draws its own scenario, probes and selects rays, synthesizes a
//! noisy tensor and runs the estimation chain on both the RAA and the ULA
//! benchmark. All randomness is derived from the master seed and the
//! `(centroid, trial)` position, so results do not depend on thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use raa_core::array::FrontEnd;
use raa_core::comms::{expected_rate, RateReport, SelectionPolicy};
use raa_core::sensing::{run_pipeline, EstimationResult, SensingOptions};
use raa_core::signal::{
    data_removal, make_swarm_scenario, probe_selection, synthesize_tensor, OfdmConfig, PathParams,
    SelectionMatrix, SymbolGrid,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::metrics::{average_missing_shots, match_estimates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Receiver {
    Raa,
    Ula,
}

impl Receiver {
    pub const ALL: [Receiver; 2] = [Receiver::Raa, Receiver::Ula];

    pub fn as_str(self) -> &'static str {
        match self {
            Receiver::Raa => "raa",
            Receiver::Ula => "ula",
        }
    }
}

/// Independent seeds of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub scenario: u64,
    pub probe_noise: u64,
    pub symbols: u64,
    pub tensor_noise: u64,
}

/// Seeds of trial `trial` at sweep position `centroid_idx`, drawn from a
/// ChaCha stream keyed by that position.
pub fn trial_seeds(master: u64, centroid_idx: usize, trial: u64) -> TrialSeeds {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((centroid_idx as u64) << 32) | (trial & 0xffff_ffff));
    TrialSeeds {
        scenario: rng.next_u64(),
        probe_noise: rng.next_u64(),
        symbols: rng.next_u64(),
        tensor_noise: rng.next_u64(),
    }
}

/// Seed of the rate trials at a sweep position.
pub fn rate_seed(master: u64, centroid_idx: usize) -> u64 {
    trial_seeds(master, centroid_idx, u32::MAX as u64).probe_noise
}

/// Front ends and numerology built once from a validated config.
#[derive(Debug, Clone)]
pub struct Models {
    pub ofdm: OfdmConfig,
    pub raa: FrontEnd,
    /// Benchmark ULA with the wide directional element.
    pub ula: FrontEnd,
    /// Benchmark ULA with the gain-matched isotropic element.
    pub ula_isotropic: FrontEnd,
    pub raa_options: SensingOptions,
    pub ula_options: SensingOptions,
    pub source_count: usize,
    pub noise: bool,
}

impl Models {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let raa = FrontEnd::Raa(cfg.raa()?);
        let ula = FrontEnd::Ula(cfg.ula_sensing()?);
        Ok(Self {
            ofdm: cfg.ofdm_config(),
            raa_options: cfg.sensing_options(&raa),
            ula_options: cfg.sensing_options(&ula),
            raa,
            ula,
            ula_isotropic: FrontEnd::Ula(cfg.ula_isotropic()?),
            source_count: cfg.source_count(),
            noise: cfg.montecarlo.noise,
        })
    }

    pub fn front_end(&self, receiver: Receiver) -> &FrontEnd {
        match receiver {
            Receiver::Raa => &self.raa,
            Receiver::Ula => &self.ula,
        }
    }

    pub fn options(&self, receiver: Receiver) -> &SensingOptions {
        match receiver {
            Receiver::Raa => &self.raa_options,
            Receiver::Ula => &self.ula_options,
        }
    }
}

/// Scenario of a trial.
pub fn trial_paths(
    cfg: &ExperimentConfig,
    centroid_deg: f64,
    seeds: &TrialSeeds,
) -> Result<Vec<PathParams>> {
    Ok(make_swarm_scenario(
        &cfg.swarm(centroid_deg),
        cfg.ofdm.cp_duration,
        seeds.scenario,
    )?)
}

/// Probe-based selection, synthesis, data removal and estimation for one
/// receiver.
pub fn sense_once(
    models: &Models,
    receiver: Receiver,
    paths: &[PathParams],
    seeds: &TrialSeeds,
) -> Result<(SelectionMatrix, EstimationResult)> {
    let fe = models.front_end(receiver);
    let ofdm = &models.ofdm;
    let noise = models.noise;
    let sel = probe_selection(paths, fe, ofdm, noise.then_some(seeds.probe_noise))?;
    let grid = SymbolGrid::qpsk(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power, seeds.symbols);
    let y = synthesize_tensor(
        paths,
        fe,
        ofdm,
        &sel,
        &grid,
        noise.then_some(seeds.tensor_noise),
    )?;
    let yb = data_removal(&y, &grid)?;
    let est = run_pipeline(
        &yb,
        fe,
        &sel,
        ofdm,
        models.source_count,
        models.options(receiver),
    )?;
    Ok((sel, est))
}

/// One receiver's result in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub centroid_idx: usize,
    pub centroid_deg: f64,
    pub trial: u64,
    pub receiver: Receiver,
    pub truth: Vec<PathParams>,
    pub selection: Vec<usize>,
    pub aoas: Vec<f64>,
    pub delays: Vec<f64>,
    pub dopplers: Vec<f64>,
    /// Set when the trial failed; it then counts as zero detections.
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn detected(&self) -> usize {
        self.aoas.len()
    }

    /// Optimal `(truth, estimate)` pairing and its squared angle error.
    pub fn matching(&self) -> Option<(f64, Vec<(usize, usize)>)> {
        let truth: Vec<f64> = self.truth.iter().map(|p| p.aoa).collect();
        match_estimates(&truth, &self.aoas)
    }
}

/// Runs one trial for both receivers. Failures are recorded, not returned.
pub fn run_trial(
    cfg: &ExperimentConfig,
    models: &Models,
    centroid_idx: usize,
    trial: u64,
) -> Vec<TrialRecord> {
    let centroid_deg = cfg.scenario.centroids_deg[centroid_idx];
    let seeds = trial_seeds(cfg.montecarlo.seed, centroid_idx, trial);
    let paths = trial_paths(cfg, centroid_deg, &seeds);
    Receiver::ALL
        .iter()
        .map(|&receiver| {
            let mut rec = TrialRecord {
                centroid_idx,
                centroid_deg,
                trial,
                receiver,
                truth: Vec::new(),
                selection: Vec::new(),
                aoas: Vec::new(),
                delays: Vec::new(),
                dopplers: Vec::new(),
                error: None,
            };
            let outcome = paths.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                rec.truth = p.clone();
                sense_once(models, receiver, p, &seeds).map_err(|e| e.to_string())
            });
            match outcome {
                Ok((sel, est)) => {
                    rec.selection = sel.ports().to_vec();
                    rec.aoas = est.aoas;
                    rec.delays = est.delays;
                    rec.dopplers = est.dopplers;
                }
                Err(e) => rec.error = Some(e),
            }
            rec
        })
        .collect()
}

/// Mean rate with its standard error, bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateStat {
    pub mean: f64,
    pub std_error: f64,
}

impl From<&RateReport> for RateStat {
    fn from(r: &RateReport) -> Self {
        Self {
            mean: r.rate,
            std_error: r.std_error,
        }
    }
}

/// Rates at one centroid for the RAA, the directional ULA and the isotropic ULA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentroidRates {
    pub raa: RateStat,
    pub ula_directional: RateStat,
    pub ula_isotropic: RateStat,
}

/// Expected rates over `cfg.montecarlo.rate_trials` scenario draws.
pub fn centroid_rates(
    cfg: &ExperimentConfig,
    models: &Models,
    centroid_idx: usize,
) -> Result<CentroidRates> {
    let centroid_deg = cfg.scenario.centroids_deg[centroid_idx];
    let master = cfg.montecarlo.seed;
    let sampler = |t: u64| {
        trial_paths(cfg, centroid_deg, &trial_seeds(master, centroid_idx, t)).map_err(core_err)
    };
    let policy = SelectionPolicy::Probe {
        noisy: models.noise,
    };
    let seed = rate_seed(master, centroid_idx);
    let trials = cfg.montecarlo.rate_trials;
    let run = |fe: &FrontEnd| -> Result<RateStat> {
        Ok(RateStat::from(&expected_rate(
            sampler,
            fe,
            &policy,
            &models.ofdm,
            trials,
            seed,
        )?))
    };
    Ok(CentroidRates {
        raa: run(&models.raa)?,
        ula_directional: run(&models.ula)?,
        ula_isotropic: run(&models.ula_isotropic)?,
    })
}

fn core_err(e: crate::error::HarnessError) -> raa_core::Error {
    match e {
        crate::error::HarnessError::Core(c) => c,
        other => raa_core::Error::InvalidConfig(other.to_string()),
    }
}

/// Aggregate of one receiver at one centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverSummary {
    /// Pooled over every matched pair of every trial; `None` without any detection.
    pub rmse_deg: Option<f64>,
    pub missing_shots: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSummary {
    pub centroid_deg: f64,
    pub raa: ReceiverSummary,
    pub ula: ReceiverSummary,
    pub rates: CentroidRates,
}

/// Summarizes the records of one receiver.
pub fn summarize(records: &[&TrialRecord], swarm_size: usize) -> ReceiverSummary {
    let (mut sq, mut n) = (0.0, 0usize);
    for r in records {
        if let Some((s, pairs)) = r.matching() {
            sq += s;
            n += pairs.len();
        }
    }
    let runs: Vec<(usize, usize)> = records
        .iter()
        .map(|r| {
            let truth = if r.truth.is_empty() {
                swarm_size
            } else {
                r.truth.len()
            };
            (truth, r.detected().min(truth))
        })
        .collect();
    ReceiverSummary {
        rmse_deg: (n > 0).then(|| (sq / n as f64).sqrt().to_degrees()),
        missing_shots: average_missing_shots(&runs),
        failures: records.iter().filter(|r| r.error.is_some()).count(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub summaries: Vec<CentroidSummary>,
    /// Sorted by centroid, trial, receiver.
    pub records: Vec<TrialRecord>,
}

/// Runs the sensing trials and the rate trials of every centroid.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let models = Models::build(cfg)?;
    let n_c = cfg.scenario.centroids_deg.len();
    let q = cfg.montecarlo.trials as u64;
    let jobs: Vec<(usize, u64)> = (0..n_c).flat_map(|c| (0..q).map(move |t| (c, t))).collect();
    let mut records: Vec<TrialRecord> = jobs
        .par_iter()
        .flat_map_iter(|&(c, t)| run_trial(cfg, &models, c, t))
        .collect();
    records.sort_by_key(|r| (r.centroid_idx, r.trial, r.receiver));
    let rates: Vec<CentroidRates> = (0..n_c)
        .map(|c| centroid_rates(cfg, &models, c))
        .collect::<Result<_>>()?;

    let summaries = (0..n_c)
        .map(|c| {
            let pick = |rx: Receiver| -> Vec<&TrialRecord> {
                records
                    .iter()
                    .filter(|r| r.centroid_idx == c && r.receiver == rx)
                    .collect()
            };
            CentroidSummary {
                centroid_deg: cfg.scenario.centroids_deg[c],
                raa: summarize(&pick(Receiver::Raa), cfg.scenario.swarm_size),
                ula: summarize(&pick(Receiver::Ula), cfg.scenario.swarm_size),
                rates: rates[c],
            }
        })
        .collect();
    Ok(CampaignResult { summaries, records })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(summaries: &[CentroidSummary]) -> String {
    let mut s =
        String::from("centroid_deg,rmse_raa_deg,rmse_ula_deg,eps_raa,eps_ula,rate_raa,rate_ula\n");
    for c in summaries {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            c.centroid_deg,
            opt(c.raa.rmse_deg),
            opt(c.ula.rmse_deg),
            c.raa.missing_shots,
            c.ula.missing_shots,
            c.rates.raa.mean,
            c.rates.ula_isotropic.mean
        );
    }
    s
}

pub fn rates_csv(summaries: &[CentroidSummary]) -> String {
    let mut s = String::from(
        "centroid_deg,rate_raa,stderr_raa,rate_ula_directional,stderr_ula_directional,\
         rate_ula_isotropic,stderr_ula_isotropic\n",
    );
    for c in summaries {
        let r = &c.rates;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            c.centroid_deg,
            r.raa.mean,
            r.raa.std_error,
            r.ula_directional.mean,
            r.ula_directional.std_error,
            r.ula_isotropic.mean,
            r.ula_isotropic.std_error
        );
    }
    s
}

/// One row per trial and receiver; estimates are placed next to the truth
/// they were matched to.
pub fn trials_csv(records: &[TrialRecord], swarm_size: usize) -> String {
    let mut s = String::from("trial,centroid_deg,receiver,status,detected,rmse_deg,selection");
    for k in 0..swarm_size {
        let _ = write!(
            s,
            ",truth_aoa_deg_{k},est_aoa_deg_{k},truth_delay_s_{k},est_delay_s_{k},\
             truth_doppler_hz_{k},est_doppler_hz_{k}"
        );
    }
    s.push('\n');
    for r in records {
        let matching = r.matching();
        let rmse = matching
            .as_ref()
            .map(|(sq, pairs)| (sq / pairs.len() as f64).sqrt().to_degrees());
        let status = match &r.error {
            None => "ok".to_string(),
            Some(e) => format!("\"error: {}\"", e.replace('"', "'")),
        };
        let sel: Vec<String> = r.selection.iter().map(usize::to_string).collect();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            r.trial,
            r.centroid_deg,
            r.receiver.as_str(),
            status,
            r.detected(),
            opt(rmse),
            sel.join(" ")
        );
        for k in 0..swarm_size {
            let est = matching
                .as_ref()
                .and_then(|(_, pairs)| pairs.iter().find(|p| p.0 == k))
                .map(|p| p.1);
            let truth = r.truth.get(k);
            let _ = write!(
                s,
                ",{},{},{},{},{},{}",
                opt(truth.map(|p| p.aoa.to_degrees())),
                opt(est.map(|j| r.aoas[j].to_degrees())),
                opt(truth.map(|p| p.delay)),
                opt(est.map(|j| r.delays[j])),
                opt(truth.map(|p| p.doppler)),
                opt(est.map(|j| r.dopplers[j]))
            );
        }
        s.push('\n');
    }
    s
}

/// Record of a finished campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<PathBuf>,
    pub version: String,
    /// Stage name and wall-clock seconds.
    pub timings: Vec<(String, f64)>,
    /// `centroid_deg trial receiver: message` for every failed trial.
    pub failures: Vec<String>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "config_sha256 = {}", self.config_hash);
        let _ = writeln!(s, "seed = {}", self.seed);
        for f in &self.files {
            let _ = writeln!(s, "file = {}", f.display());
        }
        for (stage, secs) in &self.timings {
            let _ = writeln!(s, "time_{stage}_s = {secs:.3}");
        }
        let _ = writeln!(s, "failures = {}", self.failures.len());
        for f in &self.failures {
            let _ = writeln!(s, "failure = {f}");
        }
        s
    }
}

/// Runs the campaign and writes `summary.csv`, `trials.csv`, `rates.csv`,
/// `config.ini` and `manifest.txt` into `out_dir`.
pub fn run_montecarlo(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let result = run_campaign(cfg)?;
    let compute = start.elapsed().as_secs_f64();

    fs::create_dir_all(out_dir)?;
    let write_start = Instant::now();
    let outputs = [
        ("summary.csv", summary_csv(&result.summaries)),
        (
            "trials.csv",
            trials_csv(&result.records, cfg.scenario.swarm_size),
        ),
        ("rates.csv", rates_csv(&result.summaries)),
        ("config.ini", cfg.to_ini()),
    ];
    let mut files = Vec::new();
    for (name, text) in outputs {
        let path = out_dir.join(name);
        fs::write(&path, text)?;
        files.push(path);
    }
    let failures = result
        .records
        .iter()
        .filter_map(|r| {
            r.error.as_ref().map(|e| {
                format!(
                    "{} {} {}: {e}",
                    r.centroid_deg,
                    r.trial,
                    r.receiver.as_str()
                )
            })
        })
        .collect();
    let mut manifest = RunManifest {
        config_hash: cfg.hash(),
        seed: cfg.montecarlo.seed,
        files,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timings: vec![("campaign".into(), compute)],
        failures,
    };
    let manifest_path = out_dir.join("manifest.txt");
    manifest.files.push(manifest_path.clone());
    manifest
        .timings
        .push(("write".into(), write_start.elapsed().as_secs_f64()));
    fs::write(&manifest_path, manifest.to_text())?;
    Ok(manifest)
}
