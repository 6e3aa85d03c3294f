use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{OfdmConfig, PathParams, SelectionMatrix, SignalTensor, SymbolGrid, TensorKind};
use crate::array::FrontEnd;
use crate::error::{Error, Result};

pub(crate) fn check_inputs(
    paths: &[PathParams],
    front_end: &FrontEnd,
    ofdm: &OfdmConfig,
    sel: &SelectionMatrix,
    grid: &SymbolGrid,
) -> Result<()> {
    ofdm.validate()?;
    for p in paths {
        p.validate(ofdm)?;
    }
    let n = front_end.num_ports();
    if let Some(&bad) = sel.ports().iter().find(|&&p| p >= n) {
        return Err(Error::InvalidConfig(format!(
            "selected port {bad} out of range for {n} ports"
        )));
    }
    if (grid.subcarriers, grid.symbols) != (ofdm.subcarriers, ofdm.symbols) {
        return Err(Error::Dimension(format!(
            "symbol grid {} x {} does not match OFDM grid {} x {}",
            grid.subcarriers, grid.symbols, ofdm.subcarriers, ofdm.symbols
        )));
    }
    Ok(())
}

/// Additive noise for one subcarrier slice, written into `out` (`symbols x chains`).
struct NoiseSource {
    seed: u64,
    std: f64,
    /// Codeword sines when the combined noise must be formed element by element.
    element_level: Option<(usize, f64, Vec<f64>)>,
}

impl NoiseSource {
    fn new(seed: u64, front_end: &FrontEnd, ofdm: &OfdmConfig, sel: &SelectionMatrix) -> Self {
        let m = front_end.elements_per_port();
        let element_level = match front_end {
            FrontEnd::Ula(c) if !ula_codewords_orthogonal(c, sel) => Some((
                m,
                PI * c.spatial_factor(),
                sel.ports().iter().map(|&k| c.codeword_sines[k]).collect(),
            )),
            _ => None,
        };
        let per_component = match element_level {
            Some(_) => ofdm.noise_var / ofdm.subcarriers as f64,
            None => ofdm.tensor_noise_var(m),
        };
        Self {
            seed,
            std: (per_component / 2.0).sqrt(),
            element_level,
        }
    }

    fn fill(&self, p: usize, symbols: usize, chains: usize, out: &mut [Complex64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(p as u64);
        let normal = Normal::new(0.0, self.std).expect("finite noise std");
        let mut draw = || Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        match &self.element_level {
            None => {
                for v in out.iter_mut() {
                    *v += draw();
                }
            }
            Some((m, k, sines)) => {
                let mut z = vec![Complex64::new(0.0, 0.0); *m];
                for q in 0..symbols {
                    z.iter_mut().for_each(|v| *v = draw());
                    for (c, s) in sines.iter().enumerate() {
                        let acc: Complex64 = z
                            .iter()
                            .enumerate()
                            .map(|(i, zi)| Complex64::from_polar(1.0, -k * i as f64 * s) * zi)
                            .sum();
                        out[q * chains + c] += acc;
                    }
                }
            }
        }
    }
}

/// DFT codewords with sines on the `2/M` lattice are mutually orthogonal, so the
/// combined noise is independent per chain.
fn ula_codewords_orthogonal(c: &crate::array::UlaConfig, sel: &SelectionMatrix) -> bool {
    let m = c.num_elements as f64;
    let lattice = 2.0 / (m * c.spatial_factor());
    let sines: Vec<f64> = sel.ports().iter().map(|&k| c.codeword_sines[k]).collect();
    sines.iter().enumerate().all(|(i, a)| {
        sines[i + 1..].iter().all(|b| {
            let r = (a - b) / lattice;
            let frac = (r - r.round()).abs();
            frac < 1e-9 && (r.round() as i64).rem_euclid(m as i64) != 0
        })
    })
}

/// Received tensor `Y[:, p, q] = sum_l abar_l S r(theta_l) d_pq e^{-j2pi p df tau_l}
/// e^{j2pi f_D q T_s} + S Z_pq`.
///
/// Noise is `CN(0, M sigma^2 / N_sc)` per component and is omitted when
/// `noise_seed` is `None`. Each subcarrier slice draws from its own RNG stream,
/// so the output does not depend on thread scheduling.
pub fn synthesize_tensor(
    paths: &[PathParams],
    front_end: &FrontEnd,
    ofdm: &OfdmConfig,
    sel: &SelectionMatrix,
    grid: &SymbolGrid,
    noise_seed: Option<u64>,
) -> Result<SignalTensor> {
    check_inputs(paths, front_end, ofdm, sel, grid)?;
    let chains = sel.len();
    let (n_sc, m_sym) = (ofdm.subcarriers, ofdm.symbols);
    let ts = ofdm.total_symbol_duration();

    let coefs: Vec<Vec<Complex64>> = paths
        .iter()
        .map(|path| {
            let g = path.cp_rotated_gain(ofdm);
            sel.ports()
                .iter()
                .map(|&k| g * front_end.port_response(path.aoa, k))
                .collect()
        })
        .collect();
    let doppler_phase: Vec<Vec<Complex64>> = paths
        .iter()
        .map(|path| {
            (0..m_sym)
                .map(|q| Complex64::from_polar(1.0, 2.0 * PI * path.doppler * q as f64 * ts))
                .collect()
        })
        .collect();
    let noise = noise_seed.map(|s| NoiseSource::new(s, front_end, ofdm, sel));

    let mut tensor = SignalTensor::zeros(chains, n_sc, m_sym, TensorKind::Raw);
    tensor
        .as_mut_slice()
        .par_chunks_mut(m_sym * chains)
        .enumerate()
        .for_each(|(p, slice)| {
            for (l, path) in paths.iter().enumerate() {
                let delay = Complex64::from_polar(
                    1.0,
                    -2.0 * PI * p as f64 * ofdm.subcarrier_spacing * path.delay,
                );
                for q in 0..m_sym {
                    let w = delay * doppler_phase[l][q] * grid.get(p, q);
                    let snap = &mut slice[q * chains..(q + 1) * chains];
                    for (y, c) in snap.iter_mut().zip(&coefs[l]) {
                        *y += c * w;
                    }
                }
            }
            if let Some(n) = &noise {
                n.fill(p, m_sym, chains, slice);
            }
        });
    Ok(tensor)
}

/// Number of measurement slots needed to observe every port with `N_RF` chains.
pub fn sweep_count(num_ports: usize, rf_chains: usize) -> usize {
    num_ports.div_ceil(rf_chains.max(1))
}

/// Full-port probe: one symbol of constant `sqrt(P_t)` on every subcarrier,
/// observed on all ports. Stands in for the sequential port sweep.
pub fn synthesize_probe(
    paths: &[PathParams],
    front_end: &FrontEnd,
    ofdm: &OfdmConfig,
    noise_seed: Option<u64>,
) -> Result<SignalTensor> {
    let probe_cfg = OfdmConfig {
        symbols: 1,
        ..ofdm.clone()
    };
    let grid = SymbolGrid::constant(probe_cfg.subcarriers, 1, probe_cfg.tx_power);
    let sel = SelectionMatrix::all(front_end.num_ports());
    synthesize_tensor(paths, front_end, &probe_cfg, &sel, &grid, noise_seed)
}

/// Picks the `rf_chains` ports with the largest energy in a full-port probe.
///
/// Ties go to the port looking closer to boresight, then to the lower index.
/// The returned ports are in ascending index order.
pub fn select_rays_energy(
    full: &SignalTensor,
    rf_chains: usize,
    front_end: &FrontEnd,
) -> Result<SelectionMatrix> {
    let n = front_end.num_ports();
    if full.chains != n {
        return Err(Error::Dimension(format!(
            "probe has {} chains, front end has {n} ports",
            full.chains
        )));
    }
    if rf_chains == 0 || rf_chains > n {
        return Err(Error::InvalidConfig(format!(
            "cannot select {rf_chains} of {n} ports"
        )));
    }
    let energy = full.chain_energy();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        energy[b]
            .total_cmp(&energy[a])
            .then(
                front_end
                    .port_look_angle(a)
                    .total_cmp(&front_end.port_look_angle(b)),
            )
            .then(a.cmp(&b))
    });
    let mut chosen = order[..rf_chains].to_vec();
    chosen.sort_unstable();
    SelectionMatrix::new(chosen, n)
}

/// Probe followed by energy selection.
pub fn probe_selection(
    paths: &[PathParams],
    front_end: &FrontEnd,
    ofdm: &OfdmConfig,
    noise_seed: Option<u64>,
) -> Result<SelectionMatrix> {
    let probe = synthesize_probe(paths, front_end, ofdm, noise_seed)?;
    select_rays_energy(&probe, ofdm.rf_chains, front_end)
}

/// Divides every snapshot by its communication symbol.
pub fn data_removal(y: &SignalTensor, grid: &SymbolGrid) -> Result<SignalTensor> {
    if y.kind != TensorKind::Raw {
        return Err(Error::InvalidConfig(
            "data removal needs a raw tensor".into(),
        ));
    }
    if (grid.subcarriers, grid.symbols) != (y.subcarriers, y.symbols) {
        return Err(Error::Dimension("symbol grid does not match tensor".into()));
    }
    let mut out = y.clone();
    out.kind = TensorKind::DataRemoved;
    for p in 0..y.subcarriers {
        for q in 0..y.symbols {
            let d = grid.get(p, q);
            if d.norm() == 0.0 {
                return Err(Error::Domain {
                    what: "communication symbol",
                    detail: format!("d[{p}, {q}] is zero"),
                });
            }
            let inv = d.inv();
            out.snapshot_mut(p, q).iter_mut().for_each(|v| *v *= inv);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ElementPattern, RaaConfig, UlaConfig};
    use crate::signal::{make_swarm_scenario, SwarmSpec};
    use proptest::prelude::*;

    fn raa(m: usize, lambda: f64) -> FrontEnd {
        FrontEnd::Raa(
            RaaConfig::design(m, 0.5 * PI, lambda, ElementPattern::raa_directional()).unwrap(),
        )
    }

    fn path(aoa: f64, delay: f64, doppler: f64, gain: Complex64) -> PathParams {
        PathParams {
            gain,
            aoa,
            delay,
            doppler,
            is_los: true,
        }
    }

    fn wrap(x: f64) -> f64 {
        (x + PI).rem_euclid(2.0 * PI) - PI
    }

    #[test]
    fn first_cell_is_gain_times_response() {
        let ofdm = OfdmConfig::desk();
        let fe = raa(16, ofdm.wavelength());
        let p = path(0.1, 0.2e-6, 250.0, Complex64::new(0.6, -0.8));
        let sel = SelectionMatrix::new(vec![9, 10, 11, 12], fe.num_ports()).unwrap();
        let grid = SymbolGrid::qpsk(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power, 3);
        let y = synthesize_tensor(&[p], &fe, &ofdm, &sel, &grid, None).unwrap();
        let abar = p.cp_rotated_gain(&ofdm);
        for (c, &k) in sel.ports().iter().enumerate() {
            let want = abar * fe.port_response(p.aoa, k) * grid.get(0, 0);
            assert!((y.get(c, 0, 0) - want).norm() < 1e-12 * want.norm());
        }
    }

    #[test]
    fn phase_grows_linearly_in_frequency_and_time() {
        let ofdm = OfdmConfig::desk();
        let fe = raa(16, ofdm.wavelength());
        let p = path(0.05, 0.31e-6, 420.0, Complex64::new(1.0, 0.0));
        let sel = SelectionMatrix::new(vec![10], fe.num_ports()).unwrap();
        let grid = SymbolGrid::constant(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power);
        let y = synthesize_tensor(&[p], &fe, &ofdm, &sel, &grid, None).unwrap();
        let ts = ofdm.total_symbol_duration();
        let y0 = y.get(0, 0, 0);
        for pp in [1, 7, 40, 63] {
            for q in [0, 3, 31] {
                let got = (y.get(0, pp, q) / y0).arg();
                let want = -2.0 * PI * pp as f64 * ofdm.subcarrier_spacing * p.delay
                    + 2.0 * PI * p.doppler * q as f64 * ts;
                assert!(wrap(got - want).abs() < 1e-9, "p={pp} q={q}");
            }
        }
    }

    #[test]
    fn rejects_delay_beyond_cp() {
        let ofdm = OfdmConfig::desk();
        let fe = raa(8, ofdm.wavelength());
        let p = path(0.0, ofdm.cp_duration, 0.0, Complex64::new(1.0, 0.0));
        let sel = SelectionMatrix::all(fe.num_ports());
        let grid = SymbolGrid::constant(ofdm.subcarriers, ofdm.symbols, 1.0);
        assert!(synthesize_tensor(&[p], &fe, &ofdm, &sel, &grid, None).is_err());
    }

    #[test]
    fn noise_variance_matches_accumulated_element_noise() {
        let ofdm = OfdmConfig {
            subcarriers: 64,
            symbols: 200,
            ..OfdmConfig::desk()
        };
        let fe = raa(128, ofdm.wavelength());
        let sel = SelectionMatrix::new((0..8).collect(), fe.num_ports()).unwrap();
        let grid = SymbolGrid::constant(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power);
        let y = synthesize_tensor(&[], &fe, &ofdm, &sel, &grid, Some(11)).unwrap();
        let n = y.as_slice().len() as f64;
        assert!(n >= 1e5);
        let re = y.as_slice().iter().map(|v| v.re * v.re).sum::<f64>() / n;
        let im = y.as_slice().iter().map(|v| v.im * v.im).sum::<f64>() / n;
        let want = ofdm.tensor_noise_var(128);
        assert!(((re + im) / want - 1.0).abs() < 0.05);
        assert!((re / im - 1.0).abs() < 0.05);
    }

    #[test]
    fn ula_element_level_noise_matches_shortcut_variance() {
        let ofdm = OfdmConfig {
            subcarriers: 32,
            symbols: 100,
            ..OfdmConfig::desk()
        };
        let c = UlaConfig::with_codebook(16, 24, ofdm.wavelength(), ElementPattern::ula_wide())
            .unwrap();
        let fe = FrontEnd::Ula(c);
        let sel = SelectionMatrix::new(vec![3, 4, 5, 10], fe.num_ports()).unwrap();
        let grid = SymbolGrid::constant(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power);
        let y = synthesize_tensor(&[], &fe, &ofdm, &sel, &grid, Some(5)).unwrap();
        let n = y.as_slice().len() as f64;
        let var = y.as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
        assert!(
            (var / ofdm.tensor_noise_var(16) - 1.0).abs() < 0.05,
            "{var}"
        );
    }

    #[test]
    fn noise_is_deterministic_and_seed_sensitive() {
        let ofdm = OfdmConfig::desk();
        let fe = raa(32, ofdm.wavelength());
        let sel = SelectionMatrix::new(vec![1, 2, 3], fe.num_ports()).unwrap();
        let grid = SymbolGrid::qpsk(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power, 1);
        let paths = make_swarm_scenario(&SwarmSpec::five_uav(0.0), ofdm.cp_duration, 4).unwrap();
        let a = synthesize_tensor(&paths, &fe, &ofdm, &sel, &grid, Some(8)).unwrap();
        let b = synthesize_tensor(&paths, &fe, &ofdm, &sel, &grid, Some(8)).unwrap();
        let c = synthesize_tensor(&paths, &fe, &ofdm, &sel, &grid, Some(9)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn matched_sula_selected_first() {
        let ofdm = OfdmConfig::desk();
        let fe = raa(128, ofdm.wavelength());
        let FrontEnd::Raa(cfg) = &fe else {
            unreachable!()
        };
        for k in [0, 57, 100, 180] {
            let p = path(cfg.orientations[k], 0.1e-6, 0.0, Complex64::new(1.0, 0.0));
            let probe = synthesize_probe(&[p], &fe, &ofdm, None).unwrap();
            let sel = select_rays_energy(&probe, 1, &fe).unwrap();
            assert_eq!(sel.ports(), &[k]);
        }
    }

    #[test]
    fn selection_matches_sorted_response_magnitudes() {
        let ofdm = OfdmConfig::desk();
        let fe = raa(128, ofdm.wavelength());
        let theta = 0.3171;
        let p = path(theta, 0.2e-6, 100.0, Complex64::new(0.0, 1.0));
        let sel = probe_selection(&[p], &fe, &ofdm, None).unwrap();
        let mags: Vec<f64> = fe.full_response(theta).iter().map(|v| v.norm()).collect();
        let mut idx: Vec<usize> = (0..mags.len()).collect();
        idx.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]));
        let mut want = idx[..8].to_vec();
        want.sort_unstable();
        assert_eq!(sel.ports(), want.as_slice());
    }

    #[test]
    fn two_matched_paths_select_both() {
        let ofdm = OfdmConfig::desk();
        let fe = raa(64, ofdm.wavelength());
        let FrontEnd::Raa(cfg) = &fe else {
            unreachable!()
        };
        let (j, k) = (20, 61);
        let paths = [
            path(cfg.orientations[j], 0.1e-6, 0.0, Complex64::new(1.0, 0.0)),
            path(cfg.orientations[k], 0.3e-6, 50.0, Complex64::new(0.0, 1.0)),
        ];
        let probe = synthesize_probe(&paths, &fe, &ofdm, None).unwrap();
        assert_eq!(select_rays_energy(&probe, 2, &fe).unwrap().ports(), &[j, k]);
    }

    #[test]
    fn energy_ties_prefer_boresight() {
        let fe = raa(8, 1.0);
        let n = fe.num_ports();
        let probe =
            SignalTensor::from_vec(n, 1, 1, TensorKind::Raw, vec![Complex64::new(1.0, 0.0); n])
                .unwrap();
        let sel = select_rays_energy(&probe, 3, &fe).unwrap();
        let c = (n - 1) / 2;
        assert_eq!(sel.ports(), &[c - 1, c, c + 1]);
        assert_eq!(sweep_count(201, 8), 26);
    }

    #[test]
    fn data_removal_leaves_channel_only() {
        let ofdm = OfdmConfig::desk();
        let fe = raa(16, ofdm.wavelength());
        let p = path(-0.2, 0.15e-6, -300.0, Complex64::new(0.3, 0.4));
        let sel = SelectionMatrix::new(vec![2, 3, 4], fe.num_ports()).unwrap();
        let qpsk = SymbolGrid::qpsk(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power, 77);
        let ones = SymbolGrid::constant(ofdm.subcarriers, ofdm.symbols, 1.0);
        let y = synthesize_tensor(&[p], &fe, &ofdm, &sel, &qpsk, None).unwrap();
        let h = synthesize_tensor(&[p], &fe, &ofdm, &sel, &ones, None).unwrap();
        let ybar = data_removal(&y, &qpsk).unwrap();
        assert_eq!(ybar.kind, TensorKind::DataRemoved);
        assert!(ybar.max_relative_error(&h) < 1e-12);
        assert!(data_removal(&ybar, &qpsk).is_err());
    }

    #[test]
    fn data_removal_round_trip() {
        let ofdm = OfdmConfig::desk();
        let fe = raa(16, ofdm.wavelength());
        let paths = make_swarm_scenario(&SwarmSpec::five_uav(0.4), ofdm.cp_duration, 2).unwrap();
        let sel = SelectionMatrix::new(vec![5, 6, 7, 8], fe.num_ports()).unwrap();
        let d = SymbolGrid::qpsk(ofdm.subcarriers, ofdm.symbols, 2.0, 13);
        let inv = d.map(|v| v.conj() / 2.0);
        let y = synthesize_tensor(&paths, &fe, &ofdm, &sel, &d, Some(1)).unwrap();
        let mut once = data_removal(&y, &d).unwrap();
        once.kind = TensorKind::Raw;
        let back = data_removal(&once, &inv).unwrap();
        assert!(back.max_relative_error(&y) < 1e-12);
    }

    #[test]
    fn data_removal_rejects_zero_symbol() {
        let y = SignalTensor::zeros(1, 2, 2, TensorKind::Raw);
        let g = SymbolGrid::from_fn(2, 2, |p, q| Complex64::new((p + q) as f64, 0.0));
        assert!(data_removal(&y, &g).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn linear_in_paths(
            a1 in -1.4f64..1.4, a2 in -1.4f64..1.4,
            t1 in 0.0f64..0.66e-6, t2 in 0.0f64..0.66e-6,
            f1 in -500.0f64..500.0, f2 in -500.0f64..500.0,
            ph in 0.0f64..6.28,
        ) {
            let ofdm = OfdmConfig { subcarriers: 16, symbols: 4, ..OfdmConfig::desk() };
            let fe = raa(8, ofdm.wavelength());
            let sel = SelectionMatrix::all(fe.num_ports());
            let grid = SymbolGrid::qpsk(16, 4, 1.0, 0);
            let p1 = path(a1, t1, f1, Complex64::from_polar(1.0, ph));
            let p2 = path(a2, t2, f2, Complex64::from_polar(0.7, -ph));
            let both = synthesize_tensor(&[p1, p2], &fe, &ofdm, &sel, &grid, None).unwrap();
            let sum = synthesize_tensor(&[p1], &fe, &ofdm, &sel, &grid, None).unwrap()
                .add(&synthesize_tensor(&[p2], &fe, &ofdm, &sel, &grid, None).unwrap()).unwrap();
            let scale = both.as_slice().iter().map(|v| v.norm()).fold(0.0, f64::max);
            let err = both.as_slice().iter().zip(sum.as_slice())
                .map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-12 * scale);
        }
    }
}
