use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::PathParams;
use crate::error::{Error, Result};

/// UAV swarm geometry and the Gaussian delay/Doppler statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmSpec {
    /// Mean AoA of the swarm (rad).
    pub centroid: f64,
    pub count: usize,
    /// AoA spacing between neighbouring UAVs (rad).
    pub spacing: f64,
    pub delay_mean: f64,
    /// Delay variance (s^2).
    pub delay_var: f64,
    pub doppler_mean: f64,
    /// Doppler variance (Hz^2).
    pub doppler_var: f64,
    /// Magnitude of every path gain; phases are uniform.
    pub gain_magnitude: f64,
}

impl SwarmSpec {
    /// Five UAVs 0.5 deg apart, Doppler mean 300 Hz, variances 4e-16 s^2 and 6400 Hz^2.
    pub fn five_uav(centroid: f64) -> Self {
        Self {
            centroid,
            count: 5,
            spacing: 0.5f64.to_radians(),
            delay_mean: 0.3e-6,
            delay_var: 4e-16,
            doppler_mean: 300.0,
            doppler_var: 6400.0,
            gain_magnitude: 1.0,
        }
    }

    /// AoAs `centroid + (k - (count - 1)/2) spacing`.
    pub fn aoas(&self) -> Vec<f64> {
        let mid = (self.count as f64 - 1.0) / 2.0;
        (0..self.count)
            .map(|k| self.centroid + (k as f64 - mid) * self.spacing)
            .collect()
    }
}

const MAX_RESAMPLES: usize = 10_000;

/// Draws one swarm realization; path 0 is flagged as line of sight.
///
/// Delays falling outside `(0, max_delay)` are redrawn. Zero variances give
/// the means exactly.
pub fn make_swarm_scenario(spec: &SwarmSpec, max_delay: f64, seed: u64) -> Result<Vec<PathParams>> {
    if spec.count == 0 {
        return Err(Error::InvalidConfig(
            "swarm must contain at least one UAV".into(),
        ));
    }
    let aoas = spec.aoas();
    if aoas.iter().any(|a| !(*a > -FRAC_PI_2 && *a < FRAC_PI_2)) {
        return Err(Error::Domain {
            what: "swarm AoA span",
            detail: format!(
                "[{:.4}, {:.4}] deg leaves (-90, 90) deg",
                aoas[0].to_degrees(),
                aoas[aoas.len() - 1].to_degrees()
            ),
        });
    }
    if !(spec.delay_mean >= 0.0 && spec.delay_mean < max_delay) {
        return Err(Error::Domain {
            what: "delay mean",
            detail: format!(
                "{} s must lie in [0, T_cp = {max_delay} s)",
                spec.delay_mean
            ),
        });
    }
    if !(spec.delay_var >= 0.0 && spec.doppler_var >= 0.0) {
        return Err(Error::InvalidConfig(
            "variances must be non-negative".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delay = Normal::new(spec.delay_mean, spec.delay_var.sqrt())
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let doppler = Normal::new(spec.doppler_mean, spec.doppler_var.sqrt())
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut paths = Vec::with_capacity(spec.count);
    for (k, aoa) in aoas.into_iter().enumerate() {
        let phase = rng.random_range(0.0..2.0 * PI);
        let tau = if spec.delay_var == 0.0 {
            spec.delay_mean
        } else {
            let mut draws = 0;
            loop {
                let t = delay.sample(&mut rng);
                if t > 0.0 && t < max_delay {
                    break t;
                }
                draws += 1;
                if draws >= MAX_RESAMPLES {
                    return Err(Error::Domain {
                        what: "delay distribution",
                        detail: "almost no mass inside (0, T_cp)".into(),
                    });
                }
            }
        };
        let f_d = doppler.sample(&mut rng);
        paths.push(PathParams {
            gain: Complex64::from_polar(spec.gain_magnitude, phase),
            aoa,
            delay: tau,
            doppler: f_d,
            is_los: k == 0,
        });
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    const T_CP: f64 = 0.67e-6;

    #[test]
    fn swarm_angles_follow_spacing() {
        let spec = SwarmSpec::five_uav(60f64.to_radians());
        let paths = make_swarm_scenario(&spec, T_CP, 1).unwrap();
        let deg: Vec<f64> = paths.iter().map(|p| p.aoa.to_degrees()).collect();
        for (d, e) in deg.iter().zip([59.0, 59.5, 60.0, 60.5, 61.0]) {
            assert!((d - e).abs() < 1e-9, "{deg:?}");
        }
        assert!(paths.iter().all(|p| (p.gain.norm() - 1.0).abs() < 1e-12));
        assert!(paths.iter().all(|p| p.delay > 0.0 && p.delay < T_CP));
        assert!(paths[0].is_los && !paths[1].is_los);
    }

    #[test]
    fn zero_variance_gives_means() {
        let spec = SwarmSpec {
            centroid: 0.0,
            count: 1,
            spacing: 0.3,
            delay_mean: 0.2e-6,
            delay_var: 0.0,
            doppler_mean: 150.0,
            doppler_var: 0.0,
            gain_magnitude: 1.0,
        };
        let p = make_swarm_scenario(&spec, T_CP, 9).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].aoa, p[0].delay, p[0].doppler), (0.0, 0.2e-6, 150.0));
    }

    #[test]
    fn doppler_sample_variance() {
        let spec = SwarmSpec {
            count: 10_000,
            spacing: 1e-5,
            ..SwarmSpec::five_uav(0.0)
        };
        let p = make_swarm_scenario(&spec, T_CP, 2024).unwrap();
        let n = p.len() as f64;
        let mean = p.iter().map(|x| x.doppler).sum::<f64>() / n;
        let var = p.iter().map(|x| (x.doppler - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / 6400.0 - 1.0).abs() < 0.05, "var {var}");
        assert!((mean - 300.0).abs() < 5.0);
    }

    #[test]
    fn rejects_invalid_swarms() {
        let spec = SwarmSpec::five_uav(89.5f64.to_radians());
        assert!(make_swarm_scenario(&spec, T_CP, 0).is_err());
        let spec = SwarmSpec {
            delay_mean: 1e-6,
            ..SwarmSpec::five_uav(0.0)
        };
        assert!(make_swarm_scenario(&spec, T_CP, 0).is_err());
    }

    #[test]
    fn reproducible_from_seed() {
        let spec = SwarmSpec::five_uav(0.2);
        assert_eq!(
            make_swarm_scenario(&spec, T_CP, 5).unwrap(),
            make_swarm_scenario(&spec, T_CP, 5).unwrap()
        );
        assert_ne!(
            make_swarm_scenario(&spec, T_CP, 5).unwrap(),
            make_swarm_scenario(&spec, T_CP, 6).unwrap()
        );
    }
}
