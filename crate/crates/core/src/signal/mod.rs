//! OFDM ISAC signal model: waveform numerology, multipath channel, symbol
//! grids, ray selection and the received spatial-frequency-time tensor.

mod io;
mod oracle;
mod scenario;
mod synth;

pub use io::{read_scenario_csv, read_tensor, write_scenario_csv, write_tensor, TENSOR_MAGIC};
pub use oracle::{
    element_sum_response, synthesize_time_domain_oracle, ORACLE_MAX_SUBCARRIERS, ORACLE_MAX_SYMBOLS,
};
pub use scenario::{make_swarm_scenario, SwarmSpec};
pub use synth::{
    data_removal, probe_selection, select_rays_energy, sweep_count, synthesize_probe,
    synthesize_tensor,
};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::wavelength;
use crate::error::{Error, Result};

/// OFDM numerology, power levels and RF chain count.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    pub carrier_hz: f64,
    pub subcarriers: usize,
    pub symbols: usize,
    pub subcarrier_spacing: f64,
    pub cp_duration: f64,
    pub tx_power: f64,
    /// Noise variance per antenna element per time sample.
    pub noise_var: f64,
    pub rf_chains: usize,
}

impl OfdmConfig {
    /// Full-scale settings: 39 GHz, 120 kHz spacing, 512 x 2048 grid, 8 RF chains,
    /// `P_t / sigma^2 = 20 dB`.
    pub fn table1() -> Self {
        Self {
            carrier_hz: 39e9,
            subcarriers: 512,
            symbols: 2048,
            subcarrier_spacing: 120e3,
            cp_duration: 0.67e-6,
            tx_power: 1.0,
            noise_var: 0.01,
            rf_chains: 8,
        }
    }

    /// Same numerology on a 64 x 32 grid.
    pub fn desk() -> Self {
        Self {
            subcarriers: 64,
            symbols: 32,
            ..Self::table1()
        }
    }

    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    /// Symbol duration including the cyclic prefix, `T_s = T + T_cp`.
    pub fn total_symbol_duration(&self) -> f64 {
        self.symbol_duration() + self.cp_duration
    }

    pub fn bandwidth(&self) -> f64 {
        self.subcarriers as f64 * self.subcarrier_spacing
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_hz)
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.tx_power / self.noise_var).log10()
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.noise_var = self.tx_power / 10f64.powf(snr_db / 10.0);
        self
    }

    /// Per-component variance of the post-FFT noise after combining
    /// `elements_per_port` elements: `M sigma^2 / N_sc`.
    pub fn tensor_noise_var(&self, elements_per_port: usize) -> f64 {
        elements_per_port as f64 * self.noise_var / self.subcarriers as f64
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier frequency", self.carrier_hz),
            ("subcarrier spacing", self.subcarrier_spacing),
            ("transmit power", self.tx_power),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.cp_duration >= 0.0) {
            return Err(Error::InvalidConfig(
                "CP duration must be non-negative".into(),
            ));
        }
        if !(self.noise_var >= 0.0) {
            return Err(Error::InvalidConfig(
                "noise variance must be non-negative".into(),
            ));
        }
        if self.subcarriers == 0 || self.symbols == 0 || self.rf_chains == 0 {
            return Err(Error::InvalidConfig(
                "subcarriers, symbols and RF chains must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One propagation path: complex gain, angle of arrival, delay and Doppler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub gain: Complex64,
    pub aoa: f64,
    pub delay: f64,
    pub doppler: f64,
    pub is_los: bool,
}

impl PathParams {
    /// Gain rotated by the Doppler phase accrued over the CP, `alpha e^{j 2pi f_D T_cp}`.
    pub fn cp_rotated_gain(&self, ofdm: &OfdmConfig) -> Complex64 {
        self.gain * Complex64::from_polar(1.0, 2.0 * PI * self.doppler * ofdm.cp_duration)
    }

    pub fn validate(&self, ofdm: &OfdmConfig) -> Result<()> {
        if !(self.delay >= 0.0 && self.delay < ofdm.cp_duration) {
            return Err(Error::Domain {
                what: "path delay",
                detail: format!(
                    "{} s must lie in [0, T_cp = {} s)",
                    self.delay, ofdm.cp_duration
                ),
            });
        }
        if !(self.aoa > -PI / 2.0 && self.aoa <= PI / 2.0) {
            return Err(Error::Domain {
                what: "path AoA",
                detail: format!("{} rad outside (-pi/2, pi/2]", self.aoa),
            });
        }
        Ok(())
    }
}

/// Communication symbols `d_pq`, stored subcarrier-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    pub subcarriers: usize,
    pub symbols: usize,
    data: Vec<Complex64>,
}

impl SymbolGrid {
    pub fn from_fn(
        subcarriers: usize,
        symbols: usize,
        f: impl Fn(usize, usize) -> Complex64,
    ) -> Self {
        let mut data = Vec::with_capacity(subcarriers * symbols);
        for p in 0..subcarriers {
            for q in 0..symbols {
                data.push(f(p, q));
            }
        }
        Self {
            subcarriers,
            symbols,
            data,
        }
    }

    /// Every symbol equal to `sqrt(P_t)`.
    pub fn constant(subcarriers: usize, symbols: usize, tx_power: f64) -> Self {
        let v = Complex64::new(tx_power.sqrt(), 0.0);
        Self::from_fn(subcarriers, symbols, |_, _| v)
    }

    /// Uniform QPSK symbols with `|d_pq|^2 = P_t` exactly.
    pub fn qpsk(subcarriers: usize, symbols: usize, tx_power: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = tx_power.sqrt();
        let mut data = Vec::with_capacity(subcarriers * symbols);
        for _ in 0..subcarriers * symbols {
            let k: u8 = rng.random_range(0..4);
            data.push(Complex64::from_polar(amp, PI / 4.0 + k as f64 * PI / 2.0));
        }
        Self {
            subcarriers,
            symbols,
            data,
        }
    }

    pub fn get(&self, p: usize, q: usize) -> Complex64 {
        self.data[p * self.symbols + q]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            subcarriers: self.subcarriers,
            symbols: self.symbols,
            data: self.data.iter().map(|&d| f(d)).collect(),
        }
    }
}

/// Ray selection network: which ports feed the RF chains, in chain order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMatrix {
    ports: Vec<usize>,
}

impl SelectionMatrix {
    pub fn new(ports: Vec<usize>, num_ports: usize) -> Result<Self> {
        if ports.is_empty() {
            return Err(Error::InvalidConfig(
                "selection must pick at least one port".into(),
            ));
        }
        let mut seen = vec![false; num_ports];
        for &p in &ports {
            if p >= num_ports {
                return Err(Error::InvalidConfig(format!(
                    "port {p} out of range for {num_ports} ports"
                )));
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidConfig(format!("port {p} selected twice")));
            }
        }
        Ok(Self { ports })
    }

    /// Every port, in order.
    pub fn all(num_ports: usize) -> Self {
        Self {
            ports: (0..num_ports).collect(),
        }
    }

    pub fn ports(&self) -> &[usize] {
        &self.ports
    }

    pub fn len(&self) -> usize {
        self.ports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ports.is_empty()
    }

    /// The 0/1 matrix `S` whose rows are unit vectors `e_{i_k}^T`.
    pub fn as_matrix(&self, num_ports: usize) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.ports.len(), num_ports);
        for (row, &p) in self.ports.iter().enumerate() {
            s[(row, p)] = 1.0;
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    Raw,
    DataRemoved,
}

/// Complex cube indexed `(chain, subcarrier, symbol)`.
///
/// Storage keeps each snapshot `Y[:, p, q]` contiguous; snapshots are ordered
/// subcarrier-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTensor {
    pub chains: usize,
    pub subcarriers: usize,
    pub symbols: usize,
    pub kind: TensorKind,
    data: Vec<Complex64>,
}

impl SignalTensor {
    pub fn zeros(chains: usize, subcarriers: usize, symbols: usize, kind: TensorKind) -> Self {
        Self {
            chains,
            subcarriers,
            symbols,
            kind,
            data: vec![Complex64::new(0.0, 0.0); chains * subcarriers * symbols],
        }
    }

    pub fn from_vec(
        chains: usize,
        subcarriers: usize,
        symbols: usize,
        kind: TensorKind,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != chains * subcarriers * symbols {
            return Err(Error::Dimension(format!(
                "{} samples for a {chains} x {subcarriers} x {symbols} tensor",
                data.len()
            )));
        }
        Ok(Self {
            chains,
            subcarriers,
            symbols,
            kind,
            data,
        })
    }

    fn offset(&self, p: usize, q: usize) -> usize {
        (p * self.symbols + q) * self.chains
    }

    pub fn get(&self, chain: usize, p: usize, q: usize) -> Complex64 {
        self.data[self.offset(p, q) + chain]
    }

    pub fn set(&mut self, chain: usize, p: usize, q: usize, v: Complex64) {
        let o = self.offset(p, q);
        self.data[o + chain] = v;
    }

    /// Snapshot vector `Y[:, p, q]`.
    pub fn snapshot(&self, p: usize, q: usize) -> &[Complex64] {
        let o = self.offset(p, q);
        &self.data[o..o + self.chains]
    }

    pub fn snapshot_mut(&mut self, p: usize, q: usize) -> &mut [Complex64] {
        let o = self.offset(p, q);
        let n = self.chains;
        &mut self.data[o..o + n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Per-chain energy summed over subcarriers and symbols.
    pub fn chain_energy(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.chains];
        for snap in self.data.chunks_exact(self.chains) {
            for (acc, v) in e.iter_mut().zip(snap) {
                *acc += v.norm_sqr();
            }
        }
        e
    }

    /// Element-wise sum with another tensor of the same shape.
    pub fn add(&self, other: &SignalTensor) -> Result<SignalTensor> {
        if (self.chains, self.subcarriers, self.symbols)
            != (other.chains, other.subcarriers, other.symbols)
        {
            return Err(Error::Dimension("tensor shapes differ".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            data,
            ..self.clone()
        })
    }

    /// Largest per-cell relative deviation from `reference`.
    pub fn max_relative_error(&self, reference: &SignalTensor) -> f64 {
        self.data
            .iter()
            .zip(&reference.data)
            .map(|(a, b)| (a - b).norm() / b.norm())
            .fold(0.0, f64::max)
    }
}
