use std::f64::consts::PI;

use rayon::prelude::*;

use super::SubspaceDecomposition;
use crate::array::FrontEnd;
use crate::signal::SelectionMatrix;

const DENOMINATOR_FLOOR: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    pub theta: f64,
    pub power: f64,
    /// Manifold energy `||h(theta)||^2` over the selected ports.
    pub gain: f64,
}

/// MUSIC pseudo-spectrum `||h(theta)||^2 / (h^H E_n E_n^H h)` over `grid`.
///
/// The manifold `h(theta)` is the selected port responses; the numerator
/// normalizes away the port gain, which otherwise dominates outside the
/// sector covered by the selected ports.
pub fn music_spectrum(
    dec: &SubspaceDecomposition,
    front_end: &FrontEnd,
    sel: &SelectionMatrix,
    grid: &[f64],
) -> Vec<SpectrumSample> {
    grid.par_iter()
        .map(|&theta| {
            let h = front_end.steering(theta, sel.ports());
            let norm = h.norm_squared();
            let den = dec
                .noise_projection(h.as_slice())
                .max(DENOMINATOR_FLOOR * norm.max(1.0));
            SpectrumSample {
                theta,
                power: norm / den,
                gain: norm,
            }
        })
        .collect()
}

/// Uniform angle grid from `lo` to `hi` inclusive.
pub fn theta_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Default grid: 0.02 deg steps over (-89.9, 89.9) deg.
pub fn default_theta_grid() -> Vec<f64> {
    let deg = PI / 180.0;
    theta_grid(-89.9 * deg, 89.9 * deg, 0.02 * deg)
}

/// Rules for turning a spectrum into angle estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakOptions {
    pub max_count: usize,
    pub min_separation: f64,
    /// Minimum rise of a peak above the higher of the two valleys separating
    /// it from taller peaks (or the spectrum ends), in dB.
    pub min_prominence_db: Option<f64>,
    /// Angles where the selected ports collect more than this many dB less
    /// energy than their best direction are outside the observed sector.
    pub sector_gate_db: Option<f64>,
}

/// Local maxima refined by 3-point parabolic interpolation, accepted tallest
/// first subject to `min_separation`, at most `max_count`.
///
/// Returned angles are sorted ascending.
pub fn find_peaks(spectrum: &[SpectrumSample], opts: &PeakOptions) -> Vec<f64> {
    let gate = opts.sector_gate_db.map_or(0.0, |db| {
        let top = spectrum.iter().map(|s| s.gain).fold(0.0, f64::max);
        top * 10f64.powf(-db / 10.0)
    });
    let power: Vec<f64> = spectrum.iter().map(|s| s.power).collect();
    let min_ratio = opts
        .min_prominence_db
        .map_or(1.0, |db| 10f64.powf(db / 10.0));
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 1..spectrum.len().saturating_sub(1) {
        let (a, b, c) = (power[i - 1], power[i], power[i + 1]);
        if !(b > a && b > c) || !spectrum[i - 1..=i + 1].iter().all(|s| s.gain >= gate) {
            continue;
        }
        if opts.min_prominence_db.is_some() && b < min_ratio * prominence_base(&power, i) {
            continue;
        }
        let step = spectrum[i + 1].theta - spectrum[i].theta;
        let den = a - 2.0 * b + c;
        let shift = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
        let shift = shift.clamp(-0.5, 0.5);
        let height = b - 0.25 * (a - c) * shift;
        candidates.push((spectrum[i].theta + shift * step, height));
    }
    candidates.sort_by(|x, y| y.1.total_cmp(&x.1));
    let mut accepted: Vec<f64> = Vec::new();
    for (theta, _) in candidates {
        if accepted.len() == opts.max_count {
            break;
        }
        if accepted
            .iter()
            .all(|t| (t - theta).abs() >= opts.min_separation)
        {
            accepted.push(theta);
        }
    }
    accepted.sort_by(f64::total_cmp);
    accepted
}

/// Higher of the two valley minima around peak `i`, each taken up to the
/// nearest taller sample or the end of the spectrum.
fn prominence_base(power: &[f64], i: usize) -> f64 {
    let peak = power[i];
    let valley = |range: &mut dyn Iterator<Item = usize>| {
        let mut low = peak;
        for j in range {
            if power[j] > peak {
                break;
            }
            low = low.min(power[j]);
        }
        low
    };
    let left = valley(&mut (0..i).rev());
    let right = valley(&mut (i + 1..power.len()));
    left.max(right)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(f: impl Fn(f64) -> f64, grid: &[f64]) -> Vec<SpectrumSample> {
        grid.iter()
            .map(|&theta| SpectrumSample {
                theta,
                power: f(theta),
                gain: 1.0,
            })
            .collect()
    }

    fn opts(max_count: usize, min_separation: f64) -> PeakOptions {
        PeakOptions {
            max_count,
            min_separation,
            min_prominence_db: None,
            sector_gate_db: None,
        }
    }

    #[test]
    fn single_peak_refined_within_step() {
        let grid = theta_grid(-1.0, 1.0, 0.01);
        let s = samples(|t| 1.0 / ((t - 0.1234).powi(2) + 1e-4), &grid);
        let peaks = find_peaks(&s, &opts(5, 0.05));
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0] - 0.1234).abs() < 0.01);
    }

    #[test]
    fn close_peaks_keep_the_taller() {
        let grid = theta_grid(-1.0, 1.0, 0.001);
        let s = samples(
            |t| 2.0 / ((t - 0.10).powi(2) + 1e-6) + 1.0 / ((t - 0.12).powi(2) + 1e-6),
            &grid,
        );
        let peaks = find_peaks(&s, &opts(5, 0.05));
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0] - 0.10).abs() < 1e-3);
        assert_eq!(find_peaks(&s, &opts(5, 0.01)).len(), 2);
    }

    #[test]
    fn flat_spectrum_has_no_peaks() {
        let grid = theta_grid(-1.0, 1.0, 0.1);
        assert!(find_peaks(&samples(|_| 3.0, &grid), &opts(3, 0.0)).is_empty());
    }

    #[test]
    fn cap_limits_count() {
        let grid = theta_grid(0.0, 10.0, 0.01);
        let centers = [1.0, 3.0, 5.0, 7.0];
        let heights = [1.0, 1e-1, 1e-3, 1e-5];
        let f = |t: f64| {
            centers
                .iter()
                .zip(heights)
                .map(|(c, h)| h / ((t - c).powi(2) + 1e-2))
                .sum::<f64>()
        };
        let s = samples(f, &grid);
        assert_eq!(find_peaks(&s, &opts(2, 0.1)).len(), 2);
        assert_eq!(find_peaks(&s, &opts(4, 0.1)).len(), 3);
    }

    #[test]
    fn ripples_fail_prominence() {
        let grid = theta_grid(-1.0, 1.0, 0.001);
        let f = |t: f64| 1.0 / ((t - 0.3).powi(2) + 1e-4) * (1.0 + 0.05 * (200.0 * t).sin());
        let s = samples(f, &grid);
        assert!(find_peaks(&s, &opts(5, 0.01)).len() > 1);
        let strict = PeakOptions {
            min_prominence_db: Some(3.0),
            ..opts(5, 0.01)
        };
        let peaks = find_peaks(&s, &strict);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0] - 0.3).abs() < 0.01);
    }

    #[test]
    fn prominence_uses_higher_valley() {
        let p = [0.0, 5.0, 1.0, 10.0, 4.0, 4.5, 0.5];
        assert_eq!(prominence_base(&p, 1), 1.0);
        assert_eq!(prominence_base(&p, 5), 4.0);
        assert_eq!(prominence_base(&p, 3), 0.5);
    }

    #[test]
    fn grid_helper_is_inclusive() {
        let g = theta_grid(-1.0, 1.0, 0.5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let d = default_theta_grid();
        assert!((d[0].to_degrees() + 89.9).abs() < 1e-9);
        assert!((d[d.len() - 1].to_degrees() - 89.9).abs() < 1e-6);
    }
}
