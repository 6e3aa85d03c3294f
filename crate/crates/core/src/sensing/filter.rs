use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::FrontEnd;
use crate::error::{Error, Result};
use crate::signal::{SelectionMatrix, SignalTensor};

const MAX_CONDITION: f64 = 1e12;

/// Zero-forcing combiner for target `k`: the manifold vector at `aoas[k]`
/// projected onto the orthogonal complement of the other targets' manifold
/// vectors, normalized to unit length.
pub fn zf_vector(
    k: usize,
    aoas: &[f64],
    front_end: &FrontEnd,
    sel: &SelectionMatrix,
) -> Result<DVector<Complex64>> {
    if k >= aoas.len() {
        return Err(Error::InvalidConfig(format!(
            "target {k} out of range for {} estimates",
            aoas.len()
        )));
    }
    let h = front_end.steering(aoas[k], sel.ports());
    let others: Vec<DVector<Complex64>> = aoas
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, &a)| front_end.steering(a, sel.ports()))
        .collect();
    let v = if others.is_empty() {
        h
    } else {
        let hk = DMatrix::from_columns(&others);
        let gram = hk.adjoint() * &hk;
        let sv = gram.singular_values();
        let cond = sv.max() / sv.min();
        if !(cond <= MAX_CONDITION) {
            return Err(Error::Singular { cond });
        }
        let coeffs = gram
            .lu()
            .solve(&(hk.adjoint() * &h))
            .ok_or(Error::Singular { cond })?;
        &h - &hk * coeffs
    };
    let norm = v.norm();
    if !(norm > 0.0) {
        return Err(Error::Singular {
            cond: f64::INFINITY,
        });
    }
    Ok(v.unscale(norm))
}

/// Beamformed slice `Y^k[p, q] = h^H Ybar[:, p, q]`, `N_sc x M_sym`.
pub fn spatial_filter(y: &SignalTensor, h: &DVector<Complex64>) -> Result<DMatrix<Complex64>> {
    if h.len() != y.chains {
        return Err(Error::Dimension(format!(
            "combiner of length {} for {} chains",
            h.len(),
            y.chains
        )));
    }
    Ok(DMatrix::from_fn(y.subcarriers, y.symbols, |p, q| {
        h.iter()
            .zip(y.snapshot(p, q))
            .map(|(w, v)| w.conj() * v)
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ElementPattern, RaaConfig};
    use crate::signal::{
        data_removal, synthesize_tensor, OfdmConfig, PathParams, SymbolGrid, TensorKind,
    };
    use std::f64::consts::PI;

    fn setup() -> (FrontEnd, SelectionMatrix, OfdmConfig) {
        let ofdm = OfdmConfig::desk();
        let fe = FrontEnd::Raa(
            RaaConfig::design(
                128,
                0.5 * PI,
                ofdm.wavelength(),
                ElementPattern::raa_directional(),
            )
            .unwrap(),
        );
        let sel = SelectionMatrix::new((96..104).collect(), fe.num_ports()).unwrap();
        (fe, sel, ofdm)
    }

    #[test]
    fn single_target_is_matched_filter() {
        let (fe, sel, _) = setup();
        let h = fe.steering(0.01, sel.ports());
        let zf = zf_vector(0, &[0.01], &fe, &sel).unwrap();
        assert!((zf.norm() - 1.0).abs() < 1e-14);
        assert!((zf - h.unscale(h.norm())).norm() < 1e-14);
    }

    #[test]
    fn cross_terms_vanish_at_exact_angles() {
        let (fe, sel, _) = setup();
        let deg = PI / 180.0;
        let aoas = [-1.0 * deg, -0.5 * deg, 0.0, 0.5 * deg, 1.0 * deg];
        for k in 0..aoas.len() {
            let zf = zf_vector(k, &aoas, &fe, &sel).unwrap();
            assert!((zf.norm() - 1.0).abs() < 1e-12);
            for (l, &a) in aoas.iter().enumerate() {
                let hl = fe.steering(a, sel.ports());
                let c = zf.dotc(&hl).norm();
                if l == k {
                    assert!(c > 1.0);
                } else {
                    assert!(c < 1e-10 * hl.norm(), "k={k} l={l} c={c}");
                }
            }
        }
    }

    #[test]
    fn duplicate_estimates_are_singular() {
        let (fe, sel, _) = setup();
        let err = zf_vector(0, &[0.0, 0.1, 0.1], &fe, &sel).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn filtered_tensor_suppresses_other_target() {
        let (fe, sel, ofdm) = setup();
        let p = |aoa: f64, delay: f64, doppler: f64| PathParams {
            gain: Complex64::new(1.0, 0.0),
            aoa,
            delay,
            doppler,
            is_los: false,
        };
        let a = p(0.0, 0.1e-6, 200.0);
        let b = p(0.5f64.to_radians(), 0.4e-6, 350.0);
        let grid = SymbolGrid::qpsk(ofdm.subcarriers, ofdm.symbols, ofdm.tx_power, 2);
        let synth = |paths: &[PathParams]| {
            data_removal(
                &synthesize_tensor(paths, &fe, &ofdm, &sel, &grid, None).unwrap(),
                &grid,
            )
            .unwrap()
        };
        let both = synth(&[a, b]);
        let only_b = synth(&[b]);
        let zf = zf_vector(0, &[a.aoa, b.aoa], &fe, &sel).unwrap();
        let leak = spatial_filter(&only_b, &zf).unwrap();
        let leak_energy: f64 = leak.iter().map(|v| v.norm_sqr()).sum();
        assert!(leak_energy < 1e-18 * only_b.energy());
        let filtered = spatial_filter(&both, &zf).unwrap();
        let only_a = spatial_filter(&synth(&[a]), &zf).unwrap();
        assert!((filtered - only_a).norm() < 1e-9 * only_b.energy().sqrt());
    }

    #[test]
    fn selector_and_zero_inputs() {
        let mut y = SignalTensor::zeros(3, 2, 2, TensorKind::DataRemoved);
        let mut e1 = DVector::zeros(3);
        e1[1] = Complex64::new(1.0, 0.0);
        assert!(spatial_filter(&y, &e1)
            .unwrap()
            .iter()
            .all(|v| v.norm() == 0.0));
        y.set(1, 1, 0, Complex64::new(2.0, -1.0));
        y.set(0, 1, 0, Complex64::new(5.0, 5.0));
        let out = spatial_filter(&y, &e1).unwrap();
        assert_eq!(out[(1, 0)], Complex64::new(2.0, -1.0));
        assert_eq!(out[(0, 0)], Complex64::new(0.0, 0.0));
    }
}
