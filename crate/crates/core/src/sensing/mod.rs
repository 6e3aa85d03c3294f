//! Target parameter estimation from the data-removed tensor: MUSIC for
//! angles, per-target zero-forcing, and a 2D periodogram for delay and
//! Doppler.

mod filter;
mod music;
mod periodogram;
mod subspace;

pub use filter::{spatial_filter, zf_vector};
pub use music::{
    default_theta_grid, find_peaks, music_spectrum, theta_grid, PeakOptions, SpectrumSample,
};
pub use periodogram::{map_peak_to_params, periodogram_2d, DelayDopplerMap};
pub use subspace::{
    covariance_evd, reshape_snapshots, sample_covariance, snapshot_column, unreshape_snapshots,
    SubspaceDecomposition,
};

use std::io::Write;

use rayon::prelude::*;

use crate::array::{FrontEnd, UlaConfig};
use crate::error::{Error, Result};
use crate::signal::{OfdmConfig, SelectionMatrix, SignalTensor, TensorKind};

/// Tunables of the estimation chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingOptions {
    pub theta_grid: Vec<f64>,
    /// `max_count` is replaced by the source count at run time.
    pub peaks: PeakOptions,
    pub pad_p: usize,
    pub pad_q: usize,
    pub keep_spectrum: bool,
    pub keep_maps: bool,
}

/// MUSIC peaks must rise this far above their separating valleys.
pub const DEFAULT_MIN_PROMINENCE_DB: f64 = 3.0;
/// Directions this far below the best selected-port gain are not searched.
pub const DEFAULT_SECTOR_GATE_DB: f64 = 6.0;

impl SensingOptions {
    /// 0.02 deg grid over (-89.9, 89.9) deg, peak separation a quarter of the
    /// RAA resolution `asin(2/M)`, 8x padding on both axes.
    pub fn defaults_for(front_end: &FrontEnd) -> Self {
        Self {
            theta_grid: default_theta_grid(),
            peaks: PeakOptions {
                max_count: 0,
                min_separation: front_end.nominal_resolution() / 4.0,
                min_prominence_db: Some(DEFAULT_MIN_PROMINENCE_DB),
                sector_gate_db: Some(DEFAULT_SECTOR_GATE_DB),
            },
            pad_p: 8,
            pad_q: 8,
            keep_spectrum: true,
            keep_maps: false,
        }
    }
}

/// Matched `(angle, delay, Doppler)` triples, one per detected target.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub aoas: Vec<f64>,
    pub delays: Vec<f64>,
    pub dopplers: Vec<f64>,
    pub detected_count: usize,
    pub eigenvalues: Vec<f64>,
    pub music_spectrum: Vec<SpectrumSample>,
    pub dd_maps: Vec<DelayDopplerMap>,
}

/// Runs the full estimation chain on a data-removed tensor.
///
/// The steps are: reshape, covariance and eigendecomposition, MUSIC over the
/// angle grid, peak picking, then for each angle a zero-forcing filter, a 2D
/// periodogram and its peak. Each angle carries the delay and Doppler found
/// in its own filtered map.
pub fn run_pipeline(
    y: &SignalTensor,
    front_end: &FrontEnd,
    sel: &SelectionMatrix,
    ofdm: &OfdmConfig,
    source_count: usize,
    opts: &SensingOptions,
) -> Result<EstimationResult> {
    if y.kind != TensorKind::DataRemoved {
        return Err(Error::InvalidConfig(
            "pipeline needs a data-removed tensor".into(),
        ));
    }
    if y.chains != sel.len() {
        return Err(Error::Dimension(format!(
            "tensor has {} chains, selection has {} ports",
            y.chains,
            sel.len()
        )));
    }
    if (y.subcarriers, y.symbols) != (ofdm.subcarriers, ofdm.symbols) {
        return Err(Error::Dimension(
            "tensor grid does not match OFDM settings".into(),
        ));
    }
    let snapshots = reshape_snapshots(y)?;
    let dec = covariance_evd(&snapshots, source_count)?;
    let spectrum = music_spectrum(&dec, front_end, sel, &opts.theta_grid);
    let peak_opts = PeakOptions {
        max_count: source_count,
        ..opts.peaks.clone()
    };
    let aoas = find_peaks(&spectrum, &peak_opts);

    let per_target: Vec<((f64, f64), DelayDopplerMap)> = (0..aoas.len())
        .into_par_iter()
        .map(|k| {
            let h = zf_vector(k, &aoas, front_end, sel)?;
            let yk = spatial_filter(y, &h)?;
            let map = periodogram_2d(&yk, opts.pad_p, opts.pad_q)?;
            let (p, q) = map.peak();
            Ok((map_peak_to_params(p, q, opts.pad_p, opts.pad_q, ofdm), map))
        })
        .collect::<Result<_>>()?;

    let (params, maps): (Vec<_>, Vec<_>) = per_target.into_iter().unzip();
    Ok(EstimationResult {
        detected_count: aoas.len(),
        aoas,
        delays: params.iter().map(|p| p.0).collect(),
        dopplers: params.iter().map(|p| p.1).collect(),
        eigenvalues: dec.eigenvalues,
        music_spectrum: if opts.keep_spectrum {
            spectrum
        } else {
            Vec::new()
        },
        dd_maps: if opts.keep_maps { maps } else { Vec::new() },
    })
}

/// The same chain on a ULA whose RF chains sit behind DFT codewords.
pub fn ula_hbf_pipeline(
    y: &SignalTensor,
    ula: &UlaConfig,
    sel: &SelectionMatrix,
    ofdm: &OfdmConfig,
    source_count: usize,
    opts: &SensingOptions,
) -> Result<EstimationResult> {
    run_pipeline(
        y,
        &FrontEnd::Ula(ula.clone()),
        sel,
        ofdm,
        source_count,
        opts,
    )
}

pub fn write_spectrum_csv<W: Write>(w: &mut W, spectrum: &[SpectrumSample]) -> Result<()> {
    writeln!(w, "theta_deg,power")?;
    for s in spectrum {
        writeln!(w, "{},{}", s.theta.to_degrees(), s.power)?;
    }
    Ok(())
}

pub fn write_dd_map_csv<W: Write>(
    w: &mut W,
    map: &DelayDopplerMap,
    ofdm: &OfdmConfig,
) -> Result<()> {
    writeln!(w, "delay_s,doppler_hz,power_db")?;
    for r in 0..map.rows() {
        for c in 0..map.cols() {
            let (tau, fd) = map_peak_to_params(r as f64, c as f64, map.pad_p, map.pad_q, ofdm);
            writeln!(
                w,
                "{},{},{}",
                tau,
                fd,
                10.0 * map.power[(r, c)].max(1e-300).log10()
            )?;
        }
    }
    Ok(())
}

pub fn write_estimates_csv<W: Write>(w: &mut W, est: &EstimationResult) -> Result<()> {
    writeln!(w, "target_id,aoa_deg,delay_s,doppler_hz")?;
    for k in 0..est.detected_count {
        writeln!(
            w,
            "{},{},{},{}",
            k,
            est.aoas[k].to_degrees(),
            est.delays[k],
            est.dopplers[k]
        )?;
    }
    Ok(())
}
