//! Time-domain reference receiver.
//!
//! Builds the CP-OFDM waveform sample by sample, delays it per path, applies
//! the per-symbol Doppler rotation, strips the CP and runs a direct DFT on
//! each symbol. Port outputs come from explicit element sums rather than the
//! Dirichlet closed form. Quadratic cost, so only small grids are accepted.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::synth::check_inputs;
use super::{OfdmConfig, PathParams, SelectionMatrix, SignalTensor, SymbolGrid, TensorKind};
use crate::array::FrontEnd;
use crate::error::{Error, Result};

pub const ORACLE_MAX_SUBCARRIERS: usize = 64;
pub const ORACLE_MAX_SYMBOLS: usize = 8;

/// Port output built from an explicit sum over the elements behind the port.
pub fn element_sum_response(front_end: &FrontEnd, theta: f64, port: usize) -> Complex64 {
    match front_end {
        FrontEnd::Raa(c) => {
            let zeta = theta - c.orientations[port];
            let k = 2.0 * PI / c.wavelength * zeta.sin();
            let amp = c.element_pattern.gain(zeta).sqrt();
            (0..c.elements_per_sula)
                .map(|m| {
                    let pos = c.base_offset + m as f64 * 0.5 * c.wavelength;
                    Complex64::from_polar(amp, k * pos)
                })
                .sum()
        }
        FrontEnd::Ula(c) => {
            let k = 2.0 * PI / c.wavelength;
            let amp = c.element_pattern.gain(theta).sqrt();
            let s = c.codeword_sines[port];
            (0..c.num_elements)
                .map(|m| {
                    let pos = m as f64 * c.element_spacing;
                    let w = Complex64::from_polar(1.0, k * pos * s);
                    w.conj() * Complex64::from_polar(amp, k * pos * theta.sin())
                })
                .sum()
        }
    }
}

/// Baseband transmit waveform at time `t`: every symbol's subcarrier sum under
/// its rectangular window of length `T_s`, phase referenced to the CP end.
fn waveform(t: f64, grid: &SymbolGrid, ofdm: &OfdmConfig) -> Complex64 {
    let ts = ofdm.total_symbol_duration();
    let mut x = Complex64::new(0.0, 0.0);
    for q in 0..grid.symbols {
        let start = q as f64 * ts;
        if t < start || t >= start + ts {
            continue;
        }
        let local = t - start - ofdm.cp_duration;
        for p in 0..grid.subcarriers {
            x += grid.get(p, q)
                * Complex64::from_polar(1.0, 2.0 * PI * p as f64 * ofdm.subcarrier_spacing * local);
        }
    }
    x
}

/// Noiseless received tensor computed through the time-domain chain.
pub fn synthesize_time_domain_oracle(
    paths: &[PathParams],
    front_end: &FrontEnd,
    ofdm: &OfdmConfig,
    sel: &SelectionMatrix,
    grid: &SymbolGrid,
) -> Result<SignalTensor> {
    if ofdm.subcarriers > ORACLE_MAX_SUBCARRIERS || ofdm.symbols > ORACLE_MAX_SYMBOLS {
        return Err(Error::InvalidConfig(format!(
            "time-domain oracle limited to {ORACLE_MAX_SUBCARRIERS} subcarriers x \
             {ORACLE_MAX_SYMBOLS} symbols, got {} x {}",
            ofdm.subcarriers, ofdm.symbols
        )));
    }
    check_inputs(paths, front_end, ofdm, sel, grid)?;
    let n_sc = ofdm.subcarriers;
    let ts = ofdm.total_symbol_duration();
    let dt = ofdm.symbol_duration() / n_sc as f64;

    let mut out = SignalTensor::zeros(sel.len(), n_sc, ofdm.symbols, TensorKind::Raw);
    for q in 0..ofdm.symbols {
        let t_ref = q as f64 * ts + ofdm.cp_duration;
        // combined time samples after CP removal, per chain
        let mut rx = vec![vec![Complex64::new(0.0, 0.0); n_sc]; sel.len()];
        for path in paths {
            let doppler = Complex64::from_polar(1.0, 2.0 * PI * path.doppler * t_ref);
            for (c, &port) in sel.ports().iter().enumerate() {
                let coef = path.gain * element_sum_response(front_end, path.aoa, port) * doppler;
                for (i, sample) in rx[c].iter_mut().enumerate() {
                    let t = t_ref + i as f64 * dt;
                    *sample += coef * waveform(t - path.delay, grid, ofdm);
                }
            }
        }
        for (c, samples) in rx.iter().enumerate() {
            for p in 0..n_sc {
                let bin: Complex64 = samples
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        s * Complex64::from_polar(1.0, -2.0 * PI * (p * i) as f64 / n_sc as f64)
                    })
                    .sum();
                out.set(c, p, q, bin / n_sc as f64);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ElementPattern, RaaConfig, UlaConfig};
    use crate::signal::synthesize_tensor;

    fn tiny(n_sc: usize, m_sym: usize) -> OfdmConfig {
        OfdmConfig {
            subcarriers: n_sc,
            symbols: m_sym,
            ..OfdmConfig::desk()
        }
    }

    fn raa4(lambda: f64) -> FrontEnd {
        FrontEnd::Raa(
            RaaConfig::design(4, 0.5 * PI, lambda, ElementPattern::raa_directional()).unwrap(),
        )
    }

    #[test]
    fn flat_channel_is_outer_product() {
        let ofdm = tiny(8, 2);
        let fe = raa4(ofdm.wavelength());
        let p = PathParams {
            gain: Complex64::new(0.5, 0.5),
            aoa: 0.2,
            delay: 0.0,
            doppler: 0.0,
            is_los: true,
        };
        let sel = SelectionMatrix::all(fe.num_ports());
        let grid = SymbolGrid::qpsk(8, 2, 1.0, 5);
        let y = synthesize_time_domain_oracle(&[p], &fe, &ofdm, &sel, &grid).unwrap();
        for (c, &k) in sel.ports().iter().enumerate() {
            let r = fe.port_response(p.aoa, k);
            for pp in 0..8 {
                for q in 0..2 {
                    let want = p.gain * r * grid.get(pp, q);
                    assert!((y.get(c, pp, q) - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn integer_sample_delay_gives_dft_shift() {
        let ofdm = tiny(64, 1);
        let fe = raa4(ofdm.wavelength());
        let k = 3;
        let p = PathParams {
            gain: Complex64::new(1.0, 0.0),
            aoa: 0.0,
            delay: k as f64 * ofdm.symbol_duration() / 64.0,
            doppler: 0.0,
            is_los: true,
        };
        let sel = SelectionMatrix::new(vec![1], fe.num_ports()).unwrap();
        let grid = SymbolGrid::constant(64, 1, 1.0);
        let y = synthesize_time_domain_oracle(&[p], &fe, &ofdm, &sel, &grid).unwrap();
        for pp in 0..64 {
            let ratio = y.get(0, pp, 0) / y.get(0, 0, 0);
            let want = Complex64::from_polar(1.0, -2.0 * PI * (pp * k) as f64 / 64.0);
            assert!((ratio - want).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_frequency_domain_model() {
        let ofdm = tiny(16, 2);
        let paths = [
            PathParams {
                gain: Complex64::from_polar(1.0, 0.4),
                aoa: 0.31,
                delay: 0.1234e-6,
                doppler: 812.5,
                is_los: true,
            },
            PathParams {
                gain: Complex64::from_polar(0.6, -2.0),
                aoa: -0.77,
                delay: 0.4321e-6,
                doppler: -230.0,
                is_los: false,
            },
        ];
        let grid = SymbolGrid::qpsk(16, 2, 1.0, 9);
        let raa = raa4(ofdm.wavelength());
        let ula = FrontEnd::Ula(
            UlaConfig::with_codebook(4, 6, ofdm.wavelength(), ElementPattern::ula_wide()).unwrap(),
        );
        for fe in [raa, ula] {
            let sel = SelectionMatrix::all(fe.num_ports());
            let fast = synthesize_tensor(&paths, &fe, &ofdm, &sel, &grid, None).unwrap();
            let slow = synthesize_time_domain_oracle(&paths, &fe, &ofdm, &sel, &grid).unwrap();
            assert!(fast.max_relative_error(&slow) < 1e-9);
        }
    }

    #[test]
    fn rejects_large_grids() {
        let ofdm = tiny(128, 2);
        let fe = raa4(ofdm.wavelength());
        let sel = SelectionMatrix::all(fe.num_ports());
        let grid = SymbolGrid::constant(128, 2, 1.0);
        assert!(synthesize_time_domain_oracle(&[], &fe, &ofdm, &sel, &grid).is_err());
    }
}
