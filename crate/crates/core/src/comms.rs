//! Uplink rate of the multi-path channel seen through the selected ports.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::FrontEnd;
use crate::error::{Error, Result};
use crate::signal::{probe_selection, OfdmConfig, PathParams, SelectionMatrix};

/// Equivalent channel `h_pq = S sum_l abar_l r(theta_l) e^{-j2pi p df tau_l} e^{j2pi f_D q T_s}`.
pub fn equivalent_channel(
    paths: &[PathParams],
    front_end: &FrontEnd,
    sel: &SelectionMatrix,
    ofdm: &OfdmConfig,
    p: usize,
    q: usize,
) -> DVector<Complex64> {
    let ts = ofdm.total_symbol_duration();
    let mut h = DVector::zeros(sel.len());
    for path in paths {
        let phase = -2.0 * PI * p as f64 * ofdm.subcarrier_spacing * path.delay
            + 2.0 * PI * path.doppler * q as f64 * ts;
        let w = path.cp_rotated_gain(ofdm) * Complex64::from_polar(1.0, phase);
        h += front_end.steering(path.aoa, sel.ports()) * w;
    }
    h
}

/// Per-cell SNR `||h_pq||^2 P_t / ((M / N_sc) sigma^2)` over the whole grid.
pub fn snr_grid(
    paths: &[PathParams],
    front_end: &FrontEnd,
    sel: &SelectionMatrix,
    ofdm: &OfdmConfig,
) -> Result<DMatrix<f64>> {
    ofdm.validate()?;
    let noise = ofdm.tensor_noise_var(front_end.elements_per_port());
    if !(noise > 0.0) {
        return Err(Error::InvalidConfig(
            "rate needs a positive noise variance".into(),
        ));
    }
    let ts = ofdm.total_symbol_duration();
    let coefs: Vec<(DVector<Complex64>, f64, f64)> = paths
        .iter()
        .map(|path| {
            (
                front_end.steering(path.aoa, sel.ports()) * path.cp_rotated_gain(ofdm),
                -2.0 * PI * ofdm.subcarrier_spacing * path.delay,
                2.0 * PI * path.doppler * ts,
            )
        })
        .collect();
    let cols: Vec<Vec<f64>> = (0..ofdm.symbols)
        .into_par_iter()
        .map(|q| {
            let mut h = DVector::<Complex64>::zeros(sel.len());
            (0..ofdm.subcarriers)
                .map(|p| {
                    h.fill(Complex64::new(0.0, 0.0));
                    for (c, wp, wq) in &coefs {
                        h.axpy(
                            Complex64::from_polar(1.0, wp * p as f64 + wq * q as f64),
                            c,
                            Complex64::new(1.0, 0.0),
                        );
                    }
                    h.norm_squared() * ofdm.tx_power / noise
                })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(ofdm.subcarriers, ofdm.symbols, |p, q| {
        cols[q][p]
    }))
}

/// Rate of one channel realization in bits/s/Hz, CP overhead included:
/// `(1 / (B T_s)) (1 / M_sym) sum_{p,q} log2(1 + snr_pq)`.
pub fn rate_from_snr(snr: &DMatrix<f64>, ofdm: &OfdmConfig) -> f64 {
    let bits: f64 = snr.iter().map(|s| (1.0 + s).log2()).sum();
    bits / ofdm.symbols as f64 / (ofdm.bandwidth() * ofdm.total_symbol_duration())
}

/// How the RF chains are assigned in each rate trial.
#[derive(Debug, Clone, PartialEq)]
pub enum SelectionPolicy {
    Fixed(SelectionMatrix),
    /// Energy selection on a full-port probe; noisy when a seed is supplied.
    Probe {
        noisy: bool,
    },
}

/// Monte Carlo rate estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Mean rate in bits/s/Hz.
    pub rate: f64,
    pub std_error: f64,
    pub per_trial: Vec<f64>,
    /// SNR grid of the first trial.
    pub per_subcarrier_snr: DMatrix<f64>,
    pub fingerprint: String,
}

/// Averages the rate over `trials` scenario draws.
///
/// `sampler(t)` returns the paths of trial `t`; the probe noise of trial `t`
/// is seeded with `seed + t`, so results do not depend on thread count.
pub fn expected_rate<F>(
    sampler: F,
    front_end: &FrontEnd,
    policy: &SelectionPolicy,
    ofdm: &OfdmConfig,
    trials: usize,
    seed: u64,
) -> Result<RateReport>
where
    F: Fn(u64) -> Result<Vec<PathParams>> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidConfig("rate needs at least one trial".into()));
    }
    let results: Vec<(f64, Option<DMatrix<f64>>)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let paths = sampler(t)?;
            let sel = match policy {
                SelectionPolicy::Fixed(s) => s.clone(),
                SelectionPolicy::Probe { noisy } => {
                    let noise = noisy.then_some(seed.wrapping_add(t));
                    probe_selection(&paths, front_end, ofdm, noise)?
                }
            };
            let snr = snr_grid(&paths, front_end, &sel, ofdm)?;
            let r = rate_from_snr(&snr, ofdm);
            Ok((r, (t == 0).then_some(snr)))
        })
        .collect::<Result<_>>()?;
    let per_trial: Vec<f64> = results.iter().map(|r| r.0).collect();
    let n = per_trial.len() as f64;
    let mean = per_trial.iter().sum::<f64>() / n;
    let std_error = if per_trial.len() > 1 {
        let var = per_trial.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let per_subcarrier_snr = results
        .into_iter()
        .find_map(|r| r.1)
        .expect("trial 0 present");
    Ok(RateReport {
        rate: mean,
        std_error,
        per_trial,
        per_subcarrier_snr,
        fingerprint: format!(
            "ports={} M={} N_sc={} M_sym={} snr_db={:.3}",
            front_end.num_ports(),
            front_end.elements_per_port(),
            ofdm.subcarriers,
            ofdm.symbols,
            ofdm.snr_db()
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ElementPattern, RaaConfig, UlaConfig};
    use crate::signal::{make_swarm_scenario, SwarmSpec};

    fn raa(ofdm: &OfdmConfig) -> FrontEnd {
        FrontEnd::Raa(
            RaaConfig::design(
                128,
                0.5 * PI,
                ofdm.wavelength(),
                ElementPattern::raa_directional(),
            )
            .unwrap(),
        )
    }

    fn small() -> OfdmConfig {
        OfdmConfig {
            subcarriers: 16,
            symbols: 8,
            ..OfdmConfig::desk()
        }
    }

    fn los(aoa: f64) -> PathParams {
        PathParams {
            gain: Complex64::from_polar(1.0, 0.7),
            aoa,
            delay: 0.2e-6,
            doppler: 310.0,
            is_los: true,
        }
    }

    #[test]
    fn single_path_channel() {
        let ofdm = small();
        let fe = raa(&ofdm);
        let sel = SelectionMatrix::new((98..106).collect(), fe.num_ports()).unwrap();
        let p = los(0.05);
        let h0 = equivalent_channel(&[p], &fe, &sel, &ofdm, 0, 0);
        let want = fe.steering(p.aoa, sel.ports()) * p.cp_rotated_gain(&ofdm);
        assert!((&h0 - &want).norm() < 1e-12 * want.norm());
        for (pp, q) in [(3, 1), (15, 7)] {
            let h = equivalent_channel(&[p], &fe, &sel, &ofdm, pp, q);
            assert!((h.norm() - h0.norm()).abs() < 1e-9 * h0.norm());
        }
    }

    #[test]
    fn channel_is_linear_in_paths() {
        let ofdm = small();
        let fe = raa(&ofdm);
        let sel = SelectionMatrix::new((96..104).collect(), fe.num_ports()).unwrap();
        let a = los(0.01);
        let b = PathParams {
            aoa: -0.02,
            delay: 0.5e-6,
            doppler: -90.0,
            ..los(0.0)
        };
        let both = equivalent_channel(&[a, b], &fe, &sel, &ofdm, 5, 3);
        let sum = equivalent_channel(&[a], &fe, &sel, &ofdm, 5, 3)
            + equivalent_channel(&[b], &fe, &sel, &ofdm, 5, 3);
        assert!((both - sum).norm() < 1e-9);
    }

    #[test]
    fn zero_gain_gives_zero_rate() {
        let ofdm = small();
        let fe = raa(&ofdm);
        let sel = SelectionMatrix::new(vec![100], fe.num_ports()).unwrap();
        let p = PathParams {
            gain: Complex64::new(0.0, 0.0),
            ..los(0.0)
        };
        let report = expected_rate(
            |_| Ok(vec![p]),
            &fe,
            &SelectionPolicy::Fixed(sel),
            &ofdm,
            3,
            0,
        )
        .unwrap();
        assert_eq!(report.rate, 0.0);
        assert!(report.per_subcarrier_snr.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn single_los_matches_scalar_evaluation() {
        let ofdm = small();
        let fe = raa(&ofdm);
        let sel = SelectionMatrix::new((97..105).collect(), fe.num_ports()).unwrap();
        let p = los(0.013);
        let report = expected_rate(
            |_| Ok(vec![p]),
            &fe,
            &SelectionPolicy::Fixed(sel.clone()),
            &ofdm,
            1,
            0,
        )
        .unwrap();
        let g: f64 = sel
            .ports()
            .iter()
            .map(|&k| fe.port_response(p.aoa, k).norm_sqr())
            .sum();
        let snr = g * ofdm.tx_power / (128.0 * ofdm.noise_var / ofdm.subcarriers as f64);
        let want = ofdm.subcarriers as f64 * (1.0 + snr).log2()
            / (ofdm.bandwidth() * ofdm.total_symbol_duration());
        assert!((report.rate / want - 1.0).abs() < 1e-12);
        assert_eq!(report.std_error, 0.0);
    }

    #[test]
    fn gain_scaling_scales_snr() {
        let ofdm = small();
        let fe = raa(&ofdm);
        let sel = SelectionMatrix::new((90..98).collect(), fe.num_ports()).unwrap();
        let paths = make_swarm_scenario(&SwarmSpec::five_uav(-0.05), ofdm.cp_duration, 7).unwrap();
        let scaled: Vec<PathParams> = paths
            .iter()
            .map(|p| PathParams {
                gain: p.gain * Complex64::new(0.0, 3.0),
                ..*p
            })
            .collect();
        let a = snr_grid(&paths, &fe, &sel, &ofdm).unwrap();
        let b = snr_grid(&scaled, &fe, &sel, &ofdm).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((y / x - 9.0).abs() < 1e-9);
        }
    }

    #[test]
    fn standard_error_shrinks_with_trials() {
        let ofdm = small();
        let fe = raa(&ofdm);
        let sampler =
            |t: u64| make_swarm_scenario(&SwarmSpec::five_uav(0.3), ofdm.cp_duration, 500 + t);
        let policy = SelectionPolicy::Probe { noisy: false };
        let se: Vec<f64> = [10, 40, 160]
            .iter()
            .map(|&q| {
                expected_rate(sampler, &fe, &policy, &ofdm, q, 1)
                    .unwrap()
                    .std_error
            })
            .collect();
        for w in se.windows(2) {
            assert!((w[0] / w[1] / 2.0 - 1.0).abs() < 0.3, "{se:?}");
        }
    }

    #[test]
    fn directional_raa_beats_isotropic_ula() {
        let ofdm = small();
        let fe_raa = raa(&ofdm);
        let fe_ula = FrontEnd::Ula(
            UlaConfig::new(128, ofdm.wavelength(), ElementPattern::isotropic_fair()).unwrap(),
        );
        let sampler = |t: u64| make_swarm_scenario(&SwarmSpec::five_uav(0.5), ofdm.cp_duration, t);
        let policy = SelectionPolicy::Probe { noisy: false };
        let r = expected_rate(sampler, &fe_raa, &policy, &ofdm, 10, 0).unwrap();
        let u = expected_rate(sampler, &fe_ula, &policy, &ofdm, 10, 0).unwrap();
        assert!(r.rate > u.rate, "{} vs {}", r.rate, u.rate);
    }
}
