use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use raa_core::array::{ElementPattern, FrontEnd, RaaConfig, UlaConfig};
use raa_core::sensing::{run_pipeline, EstimationResult, SensingOptions};
use raa_core::signal::{
    data_removal, make_swarm_scenario, probe_selection, read_tensor, synthesize_tensor,
    write_tensor, OfdmConfig, PathParams, SwarmSpec, SymbolGrid,
};
use raa_core::Error;

fn raa(ofdm: &OfdmConfig) -> FrontEnd {
    FrontEnd::Raa(
        RaaConfig::design(
            128,
            FRAC_PI_2,
            ofdm.wavelength(),
            ElementPattern::raa_directional(),
        )
        .unwrap(),
    )
}

fn ula(ofdm: &OfdmConfig) -> FrontEnd {
    FrontEnd::Ula(UlaConfig::new(128, ofdm.wavelength(), ElementPattern::ula_wide()).unwrap())
}

fn sense(
    paths: &[PathParams],
    fe: &FrontEnd,
    ofdm: &OfdmConfig,
    sources: usize,
    noise: Option<u64>,
) -> raa_core::Result<EstimationResult> {
    let sel = probe_selection(paths, fe, ofdm, noise)?;
    let grid = SymbolGrid::qpsk(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power, 17);
    let y = synthesize_tensor(paths, fe, ofdm, &sel, &grid, noise.map(|s| s + 1))?;
    let yb = data_removal(&y, &grid)?;
    run_pipeline(
        &yb,
        fe,
        &sel,
        ofdm,
        sources,
        &SensingOptions::defaults_for(fe),
    )
}

fn target(aoa_deg: f64, delay: f64, doppler: f64) -> PathParams {
    PathParams {
        gain: Complex64::from_polar(1.0, 0.8),
        aoa: aoa_deg.to_radians(),
        delay,
        doppler,
        is_los: true,
    }
}

#[test]
fn single_target_end_to_end() {
    let ofdm = OfdmConfig::desk();
    let fe = raa(&ofdm);
    let path = target(23.4, 0.31e-6, 1250.0);
    let est = sense(&[path], &fe, &ofdm, 1, None).unwrap();
    assert_eq!(est.detected_count, 1);
    assert!((est.aoas[0] - path.aoa).abs() < 0.01f64.to_radians());
    let tau_bin = 1.0 / (8.0 * ofdm.subcarriers as f64 * ofdm.subcarrier_spacing);
    let fd_bin = 1.0 / (8.0 * ofdm.symbols as f64 * ofdm.total_symbol_duration());
    assert!((est.delays[0] - path.delay).abs() <= tau_bin);
    assert!((est.dopplers[0] - path.doppler).abs() <= fd_bin);
    assert_eq!(est.eigenvalues.len(), ofdm.rf_chains);
}

#[test]
fn well_separated_targets_in_noise() {
    let ofdm = OfdmConfig::desk();
    let fe = raa(&ofdm);
    let paths = [target(-2.0, 0.12e-6, 300.0), target(1.5, 0.5e-6, -900.0)];
    let est = sense(&paths, &fe, &ofdm, 2, Some(5)).unwrap();
    assert_eq!(est.detected_count, 2);
    let mut got = est.aoas.clone();
    got.sort_by(f64::total_cmp);
    assert!((got[0] - paths[0].aoa).abs() < 0.05f64.to_radians());
    assert!((got[1] - paths[1].aoa).abs() < 0.05f64.to_radians());
}

#[test]
fn same_seeds_give_identical_estimates() {
    let ofdm = OfdmConfig::desk();
    let fe = raa(&ofdm);
    let paths = make_swarm_scenario(&SwarmSpec::five_uav(0.3), ofdm.cp_duration, 9).unwrap();
    let a = sense(&paths, &fe, &ofdm, 5, Some(40)).unwrap();
    let b = sense(&paths, &fe, &ofdm, 5, Some(40)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn near_endfire_ula_does_not_panic() {
    let ofdm = OfdmConfig::desk();
    let fe = ula(&ofdm);
    let paths = make_swarm_scenario(
        &SwarmSpec::five_uav(85f64.to_radians()),
        ofdm.cp_duration,
        2,
    )
    .unwrap();
    match sense(&paths, &fe, &ofdm, 5, Some(3)) {
        Ok(est) => {
            assert!(est.detected_count <= 5);
            assert!(est.aoas.iter().all(|a| a.abs() < FRAC_PI_2));
        }
        Err(Error::Singular { .. }) => {}
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn stored_tensor_gives_the_same_estimates() {
    let ofdm = OfdmConfig::desk();
    let fe = raa(&ofdm);
    let paths = [target(-10.0, 0.2e-6, 600.0)];
    let sel = probe_selection(&paths, &fe, &ofdm, Some(1)).unwrap();
    let grid = SymbolGrid::qpsk(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power, 4);
    let y = synthesize_tensor(&paths, &fe, &ofdm, &sel, &grid, Some(2)).unwrap();
    let yb = data_removal(&y, &grid).unwrap();
    let mut bytes = Vec::new();
    write_tensor(&mut bytes, &yb).unwrap();
    let back = read_tensor(&mut bytes.as_slice()).unwrap();
    assert_eq!(back, yb);
    let opts = SensingOptions::defaults_for(&fe);
    assert_eq!(
        run_pipeline(&yb, &fe, &sel, &ofdm, 1, &opts).unwrap(),
        run_pipeline(&back, &fe, &sel, &ofdm, 1, &opts).unwrap()
    );
}

#[test]
fn raw_tensor_is_rejected() {
    let ofdm = OfdmConfig::desk();
    let fe = raa(&ofdm);
    let paths = [target(0.0, 0.2e-6, 0.0)];
    let sel = probe_selection(&paths, &fe, &ofdm, None).unwrap();
    let grid = SymbolGrid::constant(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power);
    let y = synthesize_tensor(&paths, &fe, &ofdm, &sel, &grid, None).unwrap();
    let opts = SensingOptions::defaults_for(&fe);
    assert!(run_pipeline(&y, &fe, &sel, &ofdm, 1, &opts).is_err());
}
