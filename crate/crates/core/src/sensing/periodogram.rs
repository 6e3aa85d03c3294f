use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::OfdmConfig;

/// Squared-magnitude delay-Doppler map, rows indexed by delay bin `p'` and
/// columns by Doppler bin `q'`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayDopplerMap {
    pub pad_p: usize,
    pub pad_q: usize,
    pub power: DMatrix<f64>,
}

/// Unnormalized inverse DFT along subcarriers and forward DFT along symbols,
/// zero-padded by `pad_p` and `pad_q`.
///
/// A unit bi-exponential on exact bins peaks at `(N_sc M_sym)^2`; at pad 1 the
/// map sums to `N_sc M_sym` times the input energy.
pub fn periodogram_2d(
    yk: &DMatrix<Complex64>,
    pad_p: usize,
    pad_q: usize,
) -> Result<DelayDopplerMap> {
    if pad_p == 0 || pad_q == 0 {
        return Err(Error::InvalidConfig(
            "padding factors must be at least 1".into(),
        ));
    }
    let (n_sc, m_sym) = yk.shape();
    let (rows, cols) = (n_sc * pad_p, m_sym * pad_q);
    let mut grid = DMatrix::<Complex64>::zeros(rows, cols);
    grid.view_mut((0, 0), (n_sc, m_sym)).copy_from(yk);

    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(rows);
    // nalgebra is column-major: each column is one symbol across subcarriers
    for mut col in grid.column_iter_mut() {
        let mut buf: Vec<Complex64> = col.iter().copied().collect();
        ifft.process(&mut buf);
        col.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
    }
    let fft = planner.plan_fft_forward(cols);
    let mut buf = vec![Complex64::new(0.0, 0.0); cols];
    for r in 0..rows {
        for (c, v) in buf.iter_mut().enumerate() {
            *v = grid[(r, c)];
        }
        fft.process(&mut buf);
        for (c, v) in buf.iter().enumerate() {
            grid[(r, c)] = *v;
        }
    }
    Ok(DelayDopplerMap {
        pad_p,
        pad_q,
        power: grid.map(|v| v.norm_sqr()),
    })
}

impl DelayDopplerMap {
    /// Location of the largest cell, refined by a separable 3-point parabola
    /// with cyclic neighbours. Fractional bin indices.
    pub fn peak(&self) -> (f64, f64) {
        let (rows, cols) = self.power.shape();
        let (mut best, mut at) = (f64::NEG_INFINITY, (0, 0));
        for c in 0..cols {
            for r in 0..rows {
                let v = self.power[(r, c)];
                if v > best {
                    best = v;
                    at = (r, c);
                }
            }
        }
        let (r, c) = at;
        let refine = |lo: f64, mid: f64, hi: f64| {
            let den = lo - 2.0 * mid + hi;
            if den < 0.0 {
                (0.5 * (lo - hi) / den).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        };
        let dr = refine(
            self.power[((r + rows - 1) % rows, c)],
            best,
            self.power[((r + 1) % rows, c)],
        );
        let dc = refine(
            self.power[(r, (c + cols - 1) % cols)],
            best,
            self.power[(r, (c + 1) % cols)],
        );
        (r as f64 + dr, c as f64 + dc)
    }

    pub fn rows(&self) -> usize {
        self.power.nrows()
    }

    pub fn cols(&self) -> usize {
        self.power.ncols()
    }
}

/// Converts padded bin indices to `(delay, Doppler)`.
///
/// Doppler bins above half the padded grid wrap to negative frequencies.
pub fn map_peak_to_params(
    p_bin: f64,
    q_bin: f64,
    pad_p: usize,
    pad_q: usize,
    ofdm: &OfdmConfig,
) -> (f64, f64) {
    let rows = (pad_p * ofdm.subcarriers) as f64;
    let cols = (pad_q * ofdm.symbols) as f64;
    let delay = p_bin / (rows * ofdm.subcarrier_spacing);
    let q = if q_bin > cols / 2.0 {
        q_bin - cols
    } else {
        q_bin
    };
    let doppler = q / (cols * ofdm.total_symbol_duration());
    (delay, doppler)
}
