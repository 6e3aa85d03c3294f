//! Experiment configuration: INI-style sections of `key = value` pairs.
//!
//! An optional top-level `preset = paper_table1 | paper_desk` picks the base
//! values; every other key overrides one field. Unknown sections and keys are
//! rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;
use raa_core::array::{ElementPattern, FrontEnd, RaaConfig, UlaConfig};
use raa_core::sensing::{theta_grid, SensingOptions};
use raa_core::signal::{OfdmConfig, SwarmSpec};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const PRESETS: [&str; 2] = ["paper_table1", "paper_desk"];

const SECTIONS: [&str; 6] = [
    "array",
    "ofdm",
    "scenario",
    "pipeline",
    "montecarlo",
    "output",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ArraySettings {
    /// Elements per sULA, and elements of the benchmark ULA.
    pub elements: usize,
    /// Expected sULA count; checked against the designed orientations.
    pub sulas: Option<usize>,
    pub eta_max_deg: f64,
    pub codebook_size: usize,
    pub raa_peak_gain_db: f64,
    pub raa_beamwidth_deg: f64,
    pub ula_peak_gain_db: f64,
    pub ula_beamwidth_deg: f64,
    /// Gain of the isotropic ULA element used for the rate comparison.
    pub ula_isotropic_gain_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSettings {
    pub carrier_hz: f64,
    /// Optional bandwidth; must equal `N_sc * delta_f` when given.
    pub bandwidth_hz: Option<f64>,
    pub subcarriers: usize,
    pub symbols: usize,
    pub subcarrier_spacing: f64,
    pub cp_duration: f64,
    pub rf_chains: usize,
    pub snr_db: f64,
    pub tx_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSettings {
    pub centroids_deg: Vec<f64>,
    pub swarm_size: usize,
    pub spacing_deg: f64,
    pub delay_mean_s: f64,
    pub delay_var_s2: f64,
    pub doppler_mean_hz: f64,
    pub doppler_var_hz2: f64,
    pub gain_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSettings {
    pub grid_limit_deg: f64,
    pub grid_step_deg: f64,
    pub pad_p: usize,
    pub pad_q: usize,
    /// Defaults to the swarm size.
    pub source_count: Option<usize>,
    /// Defaults to a quarter of `asin(2/M)`.
    pub min_separation_deg: Option<f64>,
    pub min_prominence_db: Option<f64>,
    pub sector_gate_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSettings {
    pub trials: usize,
    pub rate_trials: usize,
    pub seed: u64,
    pub noise: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: String,
    pub array: ArraySettings,
    pub ofdm: OfdmSettings,
    pub scenario: ScenarioSettings,
    pub pipeline: PipelineSettings,
    pub montecarlo: MonteCarloSettings,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Full-scale system settings: 39 GHz, 120 kHz, 512 x 2048, 8 RF chains,
    /// M = 128, N = 201.
    pub fn paper_table1() -> Self {
        Self {
            preset: "paper_table1".into(),
            array: ArraySettings {
                elements: 128,
                sulas: Some(201),
                eta_max_deg: 90.0,
                codebook_size: 128,
                raa_peak_gain_db: 5.1335,
                raa_beamwidth_deg: 54.0,
                ula_peak_gain_db: 0.0,
                ula_beamwidth_deg: 180.0,
                ula_isotropic_gain_db: -2.816,
            },
            ofdm: OfdmSettings {
                carrier_hz: 39e9,
                bandwidth_hz: None,
                subcarriers: 512,
                symbols: 2048,
                subcarrier_spacing: 120e3,
                cp_duration: 0.67e-6,
                rf_chains: 8,
                snr_db: 20.0,
                tx_power: 1.0,
            },
            scenario: ScenarioSettings {
                centroids_deg: vec![0.0, 20.0, 40.0, 60.0],
                swarm_size: 5,
                spacing_deg: 0.5,
                delay_mean_s: 0.3e-6,
                delay_var_s2: 4e-16,
                doppler_mean_hz: 300.0,
                doppler_var_hz2: 6400.0,
                gain_magnitude: 1.0,
            },
            pipeline: PipelineSettings {
                grid_limit_deg: 89.9,
                grid_step_deg: 0.02,
                pad_p: 8,
                pad_q: 8,
                source_count: None,
                min_separation_deg: None,
                min_prominence_db: Some(raa_core::sensing::DEFAULT_MIN_PROMINENCE_DB),
                sector_gate_db: Some(raa_core::sensing::DEFAULT_SECTOR_GATE_DB),
            },
            montecarlo: MonteCarloSettings {
                trials: 20,
                rate_trials: 40,
                seed: 1,
                noise: true,
            },
            output_dir: PathBuf::from("results"),
        }
    }

    /// Table-I array and numerology on a 64 x 32 grid.
    pub fn paper_desk() -> Self {
        let mut cfg = Self::paper_table1();
        cfg.preset = "paper_desk".into();
        cfg.ofdm.subcarriers = 64;
        cfg.ofdm.symbols = 32;
        cfg
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper_table1" => Ok(Self::paper_table1()),
            "paper_desk" => Ok(Self::paper_desk()),
            other => Err(HarnessError::Validation(format!(
                "unknown preset '{other}', expected one of {}",
                PRESETS.join(", ")
            ))),
        }
    }

    /// Parses and validates a configuration text.
    pub fn from_str_validated(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| HarnessError::Parse {
            line: e.line,
            msg: e.msg.to_string(),
        })?;
        let preset = match ini.general_section().get("preset") {
            Some(p) => p.to_string(),
            None => "paper_table1".into(),
        };
        let mut cfg = Self::preset(&preset).map_err(|e| HarnessError::Parse {
            line: key_line(text, None, "preset"),
            msg: e.to_string(),
        })?;
        for (section, props) in ini.iter() {
            if let Some(name) = section.filter(|n| !SECTIONS.contains(n)) {
                return Err(HarnessError::Parse {
                    line: section_line(text, name),
                    msg: format!("unknown section [{name}]"),
                });
            }
            for (key, value) in props.iter() {
                if section.is_none() && key == "preset" {
                    continue;
                }
                cfg.apply(section, key, value)
                    .map_err(|msg| HarnessError::Parse {
                        line: key_line(text, section, key),
                        msg,
                    })?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(
        &mut self,
        section: Option<&str>,
        key: &str,
        v: &str,
    ) -> std::result::Result<(), String> {
        let a = &mut self.array;
        let o = &mut self.ofdm;
        let s = &mut self.scenario;
        let p = &mut self.pipeline;
        let m = &mut self.montecarlo;
        match (section.unwrap_or(""), key) {
            ("array", "M") => a.elements = num(v)?,
            ("array", "N") => a.sulas = Some(num(v)?),
            ("array", "eta_max_deg") => a.eta_max_deg = num(v)?,
            ("array", "codebook_size") => a.codebook_size = num(v)?,
            ("array", "raa_peak_gain_db") => a.raa_peak_gain_db = num(v)?,
            ("array", "raa_beamwidth_deg") => a.raa_beamwidth_deg = num(v)?,
            ("array", "ula_peak_gain_db") => a.ula_peak_gain_db = num(v)?,
            ("array", "ula_beamwidth_deg") => a.ula_beamwidth_deg = num(v)?,
            ("array", "ula_isotropic_gain_db") => a.ula_isotropic_gain_db = num(v)?,
            ("ofdm", "f_c") => o.carrier_hz = num(v)?,
            ("ofdm", "B") => o.bandwidth_hz = Some(num(v)?),
            ("ofdm", "N_sc") => o.subcarriers = num(v)?,
            ("ofdm", "M_sym") => o.symbols = num(v)?,
            ("ofdm", "delta_f") => o.subcarrier_spacing = num(v)?,
            ("ofdm", "T_cp") => o.cp_duration = num(v)?,
            ("ofdm", "N_RF") => o.rf_chains = num(v)?,
            ("ofdm", "Pt_over_sigma2_db") => o.snr_db = num(v)?,
            ("ofdm", "P_t") => o.tx_power = num(v)?,
            ("scenario", "centroids_deg") => s.centroids_deg = list(v)?,
            ("scenario", "swarm_size") => s.swarm_size = num(v)?,
            ("scenario", "spacing_deg") => s.spacing_deg = num(v)?,
            ("scenario", "delay_mean_s") => s.delay_mean_s = num(v)?,
            ("scenario", "delay_var_s2") => s.delay_var_s2 = num(v)?,
            ("scenario", "doppler_mean_hz") => s.doppler_mean_hz = num(v)?,
            ("scenario", "doppler_var_hz2") => s.doppler_var_hz2 = num(v)?,
            ("scenario", "gain_magnitude") => s.gain_magnitude = num(v)?,
            ("pipeline", "grid_limit_deg") => p.grid_limit_deg = num(v)?,
            ("pipeline", "grid_step_deg") => p.grid_step_deg = num(v)?,
            ("pipeline", "pad_p") => p.pad_p = num(v)?,
            ("pipeline", "pad_q") => p.pad_q = num(v)?,
            ("pipeline", "source_count") => p.source_count = optional(v)?,
            ("pipeline", "min_separation_deg") => p.min_separation_deg = optional(v)?,
            ("pipeline", "min_prominence_db") => p.min_prominence_db = optional(v)?,
            ("pipeline", "sector_gate_db") => p.sector_gate_db = optional(v)?,
            ("montecarlo", "Q") | ("montecarlo", "trials") => m.trials = num(v)?,
            ("montecarlo", "Q_r") | ("montecarlo", "rate_trials") => m.rate_trials = num(v)?,
            ("montecarlo", "seed") => m.seed = num(v)?,
            ("montecarlo", "noise") => m.noise = flag(v)?,
            ("output", "dir") => self.output_dir = PathBuf::from(v),
            ("", _) => return Err(format!("unknown top-level key '{key}'")),
            (name, _) => return Err(format!("unknown key '{key}' in [{name}]")),
        }
        Ok(())
    }

    /// Checks every cross-field invariant and builds each model once.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Validation(msg));
        let ofdm = self.ofdm_config();
        ofdm.validate()
            .map_err(|e| HarnessError::Validation(e.to_string()))?;
        if let Some(b) = self.ofdm.bandwidth_hz {
            let want = ofdm.bandwidth();
            if (b - want).abs() > 1e-6 * want {
                return bad(format!("B = {b} Hz must equal N_sc * delta_f = {want} Hz"));
            }
        }
        let raa = self.raa()?;
        if let Some(n) = self.array.sulas {
            if n != raa.num_sulas() {
                return bad(format!(
                    "N = {n} does not match the {} sULAs designed for M = {} and eta_max = {} deg",
                    raa.num_sulas(),
                    self.array.elements,
                    self.array.eta_max_deg
                ));
            }
        }
        let n_rf = self.ofdm.rf_chains;
        if n_rf > raa.num_sulas() {
            return bad(format!(
                "N_RF = {n_rf} exceeds the number of sULAs N = {}",
                raa.num_sulas()
            ));
        }
        if n_rf > self.array.codebook_size {
            return bad(format!(
                "N_RF = {n_rf} exceeds the codebook size N' = {}",
                self.array.codebook_size
            ));
        }
        self.ula_sensing()?;
        self.ula_isotropic()?;
        let sc = &self.scenario;
        if sc.centroids_deg.is_empty() {
            return bad("centroid sweep is empty".into());
        }
        if sc.swarm_size == 0 || sc.swarm_size > 16 {
            return bad(format!("swarm size {} outside 1..=16", sc.swarm_size));
        }
        for &c in &sc.centroids_deg {
            let half = (sc.swarm_size as f64 - 1.0) / 2.0 * sc.spacing_deg.abs();
            if !(c - half > -90.0 && c + half < 90.0) {
                return bad(format!(
                    "swarm around centroid {c} deg leaves (-90, 90) deg"
                ));
            }
        }
        if !(sc.delay_mean_s > 0.0 && sc.delay_mean_s < self.ofdm.cp_duration) {
            return bad(format!(
                "delay mean {} s must lie in (0, T_cp = {} s)",
                sc.delay_mean_s, self.ofdm.cp_duration
            ));
        }
        if !(sc.delay_var_s2 >= 0.0 && sc.doppler_var_hz2 >= 0.0) {
            return bad("delay and Doppler variances must be non-negative".into());
        }
        if !(sc.gain_magnitude > 0.0) {
            return bad("gain magnitude must be positive".into());
        }
        let pl = &self.pipeline;
        let sources = self.source_count();
        if sources == 0 || sources >= n_rf {
            return bad(format!(
                "source_count = {sources} must satisfy 1 <= source_count < N_RF = {n_rf}"
            ));
        }
        if !(pl.grid_step_deg > 0.0 && pl.grid_limit_deg > 0.0 && pl.grid_limit_deg < 90.0) {
            return bad("angle grid needs 0 < grid_limit_deg < 90 and a positive step".into());
        }
        if pl.pad_p == 0 || pl.pad_q == 0 {
            return bad("padding factors must be at least 1".into());
        }
        if ofdm.subcarriers * ofdm.symbols < n_rf {
            return bad(format!(
                "{} snapshots cannot estimate an {n_rf} x {n_rf} covariance",
                ofdm.subcarriers * ofdm.symbols
            ));
        }
        if self.montecarlo.trials == 0 {
            return bad("Q must be at least 1".into());
        }
        if self.montecarlo.rate_trials == 0 {
            return bad("Q_r must be at least 1".into());
        }
        Ok(())
    }

    pub fn ofdm_config(&self) -> OfdmConfig {
        let o = &self.ofdm;
        OfdmConfig {
            carrier_hz: o.carrier_hz,
            subcarriers: o.subcarriers,
            symbols: o.symbols,
            subcarrier_spacing: o.subcarrier_spacing,
            cp_duration: o.cp_duration,
            tx_power: o.tx_power,
            noise_var: 0.0,
            rf_chains: o.rf_chains,
        }
        .with_snr_db(o.snr_db)
    }

    pub fn raa(&self) -> Result<RaaConfig> {
        let a = &self.array;
        let pattern =
            ElementPattern::three_gpp(a.raa_peak_gain_db, a.raa_beamwidth_deg.to_radians());
        RaaConfig::design(
            a.elements,
            a.eta_max_deg.to_radians(),
            self.ofdm_config().wavelength(),
            pattern,
        )
        .map_err(|e| HarnessError::Validation(e.to_string()))
    }

    /// Benchmark ULA with the wide directional element, used for sensing.
    pub fn ula_sensing(&self) -> Result<UlaConfig> {
        let a = &self.array;
        self.ula_with(ElementPattern::three_gpp(
            a.ula_peak_gain_db,
            a.ula_beamwidth_deg.to_radians(),
        ))
    }

    /// Benchmark ULA with the gain-matched isotropic element.
    pub fn ula_isotropic(&self) -> Result<UlaConfig> {
        self.ula_with(ElementPattern::isotropic(self.array.ula_isotropic_gain_db))
    }

    fn ula_with(&self, pattern: ElementPattern) -> Result<UlaConfig> {
        UlaConfig::with_codebook(
            self.array.elements,
            self.array.codebook_size,
            self.ofdm_config().wavelength(),
            pattern,
        )
        .map_err(|e| HarnessError::Validation(e.to_string()))
    }

    pub fn source_count(&self) -> usize {
        self.pipeline
            .source_count
            .unwrap_or(self.scenario.swarm_size)
    }

    pub fn swarm(&self, centroid_deg: f64) -> SwarmSpec {
        let s = &self.scenario;
        SwarmSpec {
            centroid: centroid_deg.to_radians(),
            count: s.swarm_size,
            spacing: s.spacing_deg.to_radians(),
            delay_mean: s.delay_mean_s,
            delay_var: s.delay_var_s2,
            doppler_mean: s.doppler_mean_hz,
            doppler_var: s.doppler_var_hz2,
            gain_magnitude: s.gain_magnitude,
        }
    }

    pub fn sensing_options(&self, front_end: &FrontEnd) -> SensingOptions {
        let p = &self.pipeline;
        let mut opts = SensingOptions::defaults_for(front_end);
        let lim = p.grid_limit_deg.to_radians();
        opts.theta_grid = theta_grid(-lim, lim, p.grid_step_deg.to_radians());
        opts.pad_p = p.pad_p;
        opts.pad_q = p.pad_q;
        if let Some(sep) = p.min_separation_deg {
            opts.peaks.min_separation = sep.to_radians();
        }
        opts.peaks.min_prominence_db = p.min_prominence_db;
        opts.peaks.sector_gate_db = p.sector_gate_db;
        opts
    }

    /// Canonical text form; loading it reproduces this configuration.
    pub fn to_ini(&self) -> String {
        let a = &self.array;
        let o = &self.ofdm;
        let s = &self.scenario;
        let p = &self.pipeline;
        let m = &self.montecarlo;
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
        let mut t = String::new();
        let _ = writeln!(t, "preset = {}\n", self.preset);
        let _ = writeln!(t, "[array]");
        let _ = writeln!(t, "M = {}", a.elements);
        if let Some(n) = a.sulas {
            let _ = writeln!(t, "N = {n}");
        }
        let _ = writeln!(t, "eta_max_deg = {}", a.eta_max_deg);
        let _ = writeln!(t, "codebook_size = {}", a.codebook_size);
        let _ = writeln!(t, "raa_peak_gain_db = {}", a.raa_peak_gain_db);
        let _ = writeln!(t, "raa_beamwidth_deg = {}", a.raa_beamwidth_deg);
        let _ = writeln!(t, "ula_peak_gain_db = {}", a.ula_peak_gain_db);
        let _ = writeln!(t, "ula_beamwidth_deg = {}", a.ula_beamwidth_deg);
        let _ = writeln!(t, "ula_isotropic_gain_db = {}\n", a.ula_isotropic_gain_db);
        let _ = writeln!(t, "[ofdm]");
        let _ = writeln!(t, "f_c = {}", o.carrier_hz);
        if let Some(b) = o.bandwidth_hz {
            let _ = writeln!(t, "B = {b}");
        }
        let _ = writeln!(t, "N_sc = {}", o.subcarriers);
        let _ = writeln!(t, "M_sym = {}", o.symbols);
        let _ = writeln!(t, "delta_f = {}", o.subcarrier_spacing);
        let _ = writeln!(t, "T_cp = {}", o.cp_duration);
        let _ = writeln!(t, "N_RF = {}", o.rf_chains);
        let _ = writeln!(t, "Pt_over_sigma2_db = {}", o.snr_db);
        let _ = writeln!(t, "P_t = {}\n", o.tx_power);
        let _ = writeln!(t, "[scenario]");
        let centroids: Vec<String> = s.centroids_deg.iter().map(f64::to_string).collect();
        let _ = writeln!(t, "centroids_deg = {}", centroids.join(", "));
        let _ = writeln!(t, "swarm_size = {}", s.swarm_size);
        let _ = writeln!(t, "spacing_deg = {}", s.spacing_deg);
        let _ = writeln!(t, "delay_mean_s = {}", s.delay_mean_s);
        let _ = writeln!(t, "delay_var_s2 = {}", s.delay_var_s2);
        let _ = writeln!(t, "doppler_mean_hz = {}", s.doppler_mean_hz);
        let _ = writeln!(t, "doppler_var_hz2 = {}", s.doppler_var_hz2);
        let _ = writeln!(t, "gain_magnitude = {}\n", s.gain_magnitude);
        let _ = writeln!(t, "[pipeline]");
        let _ = writeln!(t, "grid_limit_deg = {}", p.grid_limit_deg);
        let _ = writeln!(t, "grid_step_deg = {}", p.grid_step_deg);
        let _ = writeln!(t, "pad_p = {}", p.pad_p);
        let _ = writeln!(t, "pad_q = {}", p.pad_q);
        let _ = writeln!(
            t,
            "source_count = {}",
            p.source_count.map_or("none".into(), |v| v.to_string())
        );
        let _ = writeln!(t, "min_separation_deg = {}", opt(p.min_separation_deg));
        let _ = writeln!(t, "min_prominence_db = {}", opt(p.min_prominence_db));
        let _ = writeln!(t, "sector_gate_db = {}\n", opt(p.sector_gate_db));
        let _ = writeln!(t, "[montecarlo]");
        let _ = writeln!(t, "Q = {}", m.trials);
        let _ = writeln!(t, "Q_r = {}", m.rate_trials);
        let _ = writeln!(t, "seed = {}", m.seed);
        let _ = writeln!(t, "noise = {}\n", m.noise);
        let _ = writeln!(t, "[output]");
        let _ = writeln!(t, "dir = {}", self.output_dir.display());
        t
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_ini().as_bytes()))
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_str_validated(&text)
}

/// First line (1-based) holding `key` inside `section`; 0 when not found.
fn key_line(text: &str, section: Option<&str>, key: &str) -> usize {
    let mut current: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = Some(name.trim().to_string());
            continue;
        }
        if current.as_deref() == section {
            if let Some((k, _)) = l.split_once(['=', ':']) {
                if k.trim() == key {
                    return i + 1;
                }
            }
        }
    }
    0
}

fn section_line(text: &str, section: &str) -> usize {
    text.lines()
        .position(|l| {
            l.trim()
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .is_some_and(|n| n.trim() == section)
        })
        .map_or(0, |i| i + 1)
}

fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    let v = v.trim();
    v.parse()
        .map_err(|_| format!("cannot parse '{v}' as a number"))
}

fn optional<T: std::str::FromStr>(v: &str) -> std::result::Result<Option<T>, String> {
    match v.trim() {
        "none" | "off" => Ok(None),
        other => num(other).map(Some),
    }
}

fn list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(num)
        .collect()
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("cannot parse '{other}' as a boolean")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_preset_values() {
        let cfg = ExperimentConfig::from_str_validated("preset = paper_table1\n").unwrap();
        let o = cfg.ofdm_config();
        assert_eq!(o.carrier_hz, 39e9);
        assert_eq!(o.subcarrier_spacing, 120e3);
        assert_eq!((o.subcarriers, o.symbols, o.rf_chains), (512, 2048, 8));
        assert_eq!(cfg.array.elements, 128);
        assert_eq!(cfg.raa().unwrap().num_sulas(), 201);
        assert!((o.snr_db() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn empty_file_is_the_default_preset() {
        assert_eq!(
            ExperimentConfig::from_str_validated("").unwrap(),
            ExperimentConfig::paper_table1()
        );
        let desk = ExperimentConfig::from_str_validated("preset = paper_desk").unwrap();
        assert_eq!(desk, ExperimentConfig::paper_desk());
        assert_eq!(
            (
                desk.ofdm.subcarriers,
                desk.ofdm.symbols,
                desk.montecarlo.trials
            ),
            (64, 32, 20)
        );
    }

    #[test]
    fn table_names_are_accepted() {
        let text = "[ofdm]\nf_c = 28e9\nB = 3.84e6\nN_sc = 32\nM_sym = 16\ndelta_f = 120e3\n\
                    T_cp = 0.67e-6\nN_RF = 6\nPt_over_sigma2_db = 10\n[array]\nM = 64\nN = 101\n";
        let cfg = ExperimentConfig::from_str_validated(text).unwrap();
        assert_eq!(cfg.ofdm.subcarriers, 32);
        assert_eq!(cfg.ofdm.rf_chains, 6);
        assert_eq!(cfg.raa().unwrap().num_sulas(), 101);
        assert!((cfg.ofdm_config().snr_db() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn rf_chains_above_sula_count_fail_validation() {
        let err = ExperimentConfig::from_str_validated("[ofdm]\nN_RF = 300\n").unwrap_err();
        match err {
            HarnessError::Validation(msg) => assert!(
                msg.contains("N_RF = 300") && msg.contains("N = 201"),
                "{msg}"
            ),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err =
            ExperimentConfig::from_str_validated("[ofdm]\nN_sc = 64\n\nbogus = 3\n").unwrap_err();
        match err {
            HarnessError::Parse { line, msg } => {
                assert_eq!(line, 4);
                assert!(msg.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
        let err =
            ExperimentConfig::from_str_validated("[ofdm]\nN_sc = 64\n[arrays]\n").unwrap_err();
        assert!(
            matches!(err, HarnessError::Parse { line: 3, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn bad_value_reports_its_line() {
        let err =
            ExperimentConfig::from_str_validated("[montecarlo]\nseed = 1\nQ = many\n").unwrap_err();
        assert!(
            matches!(err, HarnessError::Parse { line: 3, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn mismatched_bandwidth_and_sula_count() {
        assert!(ExperimentConfig::from_str_validated("[ofdm]\nB = 1e6\n").is_err());
        assert!(ExperimentConfig::from_str_validated("[array]\nN = 203\n").is_err());
        assert!(ExperimentConfig::from_str_validated("[montecarlo]\nQ = 0\n").is_err());
        assert!(ExperimentConfig::from_str_validated("[pipeline]\nsource_count = 8\n").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut cfg = ExperimentConfig::paper_desk();
        cfg.scenario.centroids_deg = vec![-12.5, 33.0];
        cfg.pipeline.sector_gate_db = None;
        cfg.pipeline.min_separation_deg = Some(0.1);
        cfg.montecarlo.noise = false;
        let back = ExperimentConfig::from_str_validated(&cfg.to_ini()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(ExperimentConfig::paper_table1().hash(), cfg.hash());
    }
}
