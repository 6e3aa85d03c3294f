//! Beam patterns and angular resolution of the RAA and the ULA benchmark.
//!
//! Resolution is half the null-to-null main-lobe width of the beam pattern at
//! a desired direction `theta'`. It is available both as a numeric null search
//! over the full pattern and in closed form.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use crate::array::{dirichlet_amplitude, RaaConfig, UlaConfig};
use crate::error::{Error, Result};

/// Tolerance used when checking the ULA sine domain and the equality case.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamPatternSample {
    pub theta: f64,
    pub theta_prime: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionReport {
    pub theta_prime: f64,
    pub left_null: f64,
    pub right_null: f64,
    pub resolution: f64,
    pub mainlobe_width: f64,
}

/// A beam pattern `G(theta, theta')` together with the signed kernel whose
/// sign changes mark its nulls.
pub trait BeamPattern {
    fn magnitude(&self, theta: f64, theta_prime: f64) -> f64;

    /// Real Dirichlet amplitude of the pattern; changes sign at every null.
    fn kernel(&self, theta: f64, theta_prime: f64) -> f64;

    /// Range of observation angles searched for nulls around `theta'`.
    fn search_limits(&self, theta_prime: f64) -> (f64, f64);

    /// Scan step small enough not to skip two adjacent nulls.
    fn scan_step(&self) -> f64;

    fn samples(&self, thetas: &[f64], theta_prime: f64) -> Vec<BeamPatternSample> {
        thetas
            .iter()
            .map(|&theta| BeamPatternSample {
                theta,
                theta_prime,
                magnitude: self.magnitude(theta, theta_prime),
            })
            .collect()
    }
}

/// `M sqrt(G(theta - theta')) |H_M(sin(theta - theta'))|`.
pub fn raa_beam_pattern(theta: f64, theta_prime: f64, cfg: &RaaConfig) -> f64 {
    let zeta = theta - theta_prime;
    let m = cfg.elements_per_sula;
    m as f64 * cfg.element_pattern.gain(zeta).sqrt() * dirichlet_amplitude(zeta.sin(), m).abs()
}

/// `M sqrt(G_ULA(theta)) |H_M(sin(theta) - sin(theta'))|` under MRT steering.
pub fn ula_beam_pattern(theta: f64, theta_prime: f64, cfg: &UlaConfig) -> f64 {
    let m = cfg.num_elements;
    let x = cfg.spatial_factor() * (theta.sin() - theta_prime.sin());
    m as f64 * cfg.element_pattern.gain(theta).sqrt() * dirichlet_amplitude(x, m).abs()
}

impl BeamPattern for RaaConfig {
    fn magnitude(&self, theta: f64, theta_prime: f64) -> f64 {
        raa_beam_pattern(theta, theta_prime, self)
    }

    fn kernel(&self, theta: f64, theta_prime: f64) -> f64 {
        dirichlet_amplitude((theta - theta_prime).sin(), self.elements_per_sula)
    }

    fn search_limits(&self, theta_prime: f64) -> (f64, f64) {
        (theta_prime - FRAC_PI_2, theta_prime + FRAC_PI_2)
    }

    fn scan_step(&self) -> f64 {
        0.25 / self.elements_per_sula as f64
    }
}

impl BeamPattern for UlaConfig {
    fn magnitude(&self, theta: f64, theta_prime: f64) -> f64 {
        ula_beam_pattern(theta, theta_prime, self)
    }

    fn kernel(&self, theta: f64, theta_prime: f64) -> f64 {
        let x = self.spatial_factor() * (theta.sin() - theta_prime.sin());
        dirichlet_amplitude(x, self.num_elements)
    }

    fn search_limits(&self, _theta_prime: f64) -> (f64, f64) {
        (-FRAC_PI_2, FRAC_PI_2)
    }

    fn scan_step(&self) -> f64 {
        0.25 / self.num_elements as f64
    }
}

/// Locates the first nulls either side of `theta'` and reports the resolution.
///
/// Nulls are bracketed by scanning the signed kernel outward from `theta'`
/// and refined by bisection. The element pattern is ignored while bracketing
/// but the full pattern must vanish (below `1e-9` of the peak) at the result.
pub fn resolution_numeric<P: BeamPattern + ?Sized>(
    pattern: &P,
    theta_prime: f64,
) -> Result<ResolutionReport> {
    let (lo, hi) = pattern.search_limits(theta_prime);
    let right = find_null(pattern, theta_prime, hi, "right")?;
    let left = find_null(pattern, theta_prime, lo, "left")?;
    let width = right - left;
    Ok(ResolutionReport {
        theta_prime,
        left_null: left,
        right_null: right,
        resolution: 0.5 * width,
        mainlobe_width: width,
    })
}

fn find_null<P: BeamPattern + ?Sized>(
    pattern: &P,
    theta_prime: f64,
    limit: f64,
    side: &'static str,
) -> Result<f64> {
    let dir = if limit > theta_prime { 1.0 } else { -1.0 };
    let step = pattern.scan_step();
    let k = |t: f64| pattern.kernel(t, theta_prime);
    let sign0 = k(theta_prime).signum();

    let mut a = theta_prime;
    let mut found = None;
    loop {
        let b = a + dir * step;
        let b = if dir * (b - limit) >= 0.0 { limit } else { b };
        let kb = k(b);
        if kb == 0.0 {
            found = Some(b);
            break;
        }
        if kb.signum() != sign0 {
            found = Some(bisect(&k, a, b));
            break;
        }
        if b == limit {
            // tangential null exactly at the edge of the domain
            if kb.abs() < 1e-12 {
                found = Some(b);
            }
            break;
        }
        a = b;
    }
    let null = found.ok_or(Error::NoNull { side, theta_prime })?;
    let peak = pattern.magnitude(theta_prime, theta_prime);
    if pattern.magnitude(null, theta_prime) >= 1e-9 * peak {
        return Err(Error::NoNull { side, theta_prime });
    }
    Ok(null)
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let sa = f(a).signum();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Closed-form RAA resolution `asin(2/M)`, independent of direction.
pub fn gamma_raa(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain {
            what: "array size",
            detail: format!("M = {m}; need M >= 2"),
        });
    }
    Ok((2.0 / m as f64).asin())
}

/// Closed-form ULA resolution
/// `asin(sin theta' + 2/M)/2 - asin(sin theta' - 2/M)/2`.
pub fn gamma_ula(m: usize, theta_prime: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain {
            what: "array size",
            detail: format!("M = {m}; need M >= 2"),
        });
    }
    let x = theta_prime.sin();
    let w = 2.0 / m as f64;
    if x.abs() > 1.0 - w + DOMAIN_SLACK {
        return Err(Error::Domain {
            what: "desired direction",
            detail: format!("sin(theta') = {x} outside [{}, {}]", -1.0 + w, 1.0 - w),
        });
    }
    Ok(0.5 * (x + w).clamp(-1.0, 1.0).asin() - 0.5 * (x - w).clamp(-1.0, 1.0).asin())
}

/// Largest `|theta'|` for which the ULA resolution formula applies.
pub fn ula_domain_limit(m: usize) -> f64 {
    (1.0 - 2.0 / m as f64).max(0.0).asin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub holds: bool,
    /// `(theta', gamma_ULA - gamma_RAA)` per grid point.
    pub margins: Vec<(f64, f64)>,
}

/// Checks `gamma_ULA(theta') >= gamma_RAA` on a grid, with equality only at 0.
pub fn resolution_dominance_check(m: usize, grid: &[f64]) -> Result<DominanceReport> {
    let raa = gamma_raa(m)?;
    let mut holds = true;
    let mut margins = Vec::with_capacity(grid.len());
    for &t in grid {
        let margin = gamma_ula(m, t)? - raa;
        let at_zero = t == 0.0;
        if margin < -DOMAIN_SLACK
            || (!at_zero && margin <= DOMAIN_SLACK)
            || (at_zero && margin.abs() > DOMAIN_SLACK)
        {
            holds = false;
        }
        margins.push((t, margin));
    }
    Ok(DominanceReport { holds, margins })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub convex: bool,
    /// `(x, d gamma/dx, d^2 gamma/dx^2)` by central differences.
    pub derivatives: Vec<(f64, f64, f64)>,
}

/// Step used for the finite-difference convexity check.
pub const CONVEXITY_STEP: f64 = 1e-5;

/// Finite-difference check that `x -> gamma_ULA(asin x)` is strictly convex
/// with its only stationary point at `x = 0`.
pub fn appendix_convexity_check(m: usize, xs: &[f64]) -> Result<ConvexityReport> {
    let w = 2.0 / m as f64;
    for &x in xs {
        if x.abs() + CONVEXITY_STEP >= 1.0 - w {
            return Err(Error::Domain {
                what: "convexity grid point",
                detail: format!("x = {x} not interior to (-1 + 2/M, 1 - 2/M)"),
            });
        }
    }
    let g = |x: f64| 0.5 * ((x + w).asin() - (x - w).asin());
    let h = CONVEXITY_STEP;
    let mut convex = true;
    let derivatives = xs
        .iter()
        .map(|&x| {
            let (gm, g0, gp) = (g(x - h), g(x), g(x + h));
            let d1 = (gp - gm) / (2.0 * h);
            let d2 = (gp - 2.0 * g0 + gm) / (h * h);
            // round-off floor of the first difference
            let noise = 1e-8 * g0.abs();
            let sign_ok = if x == 0.0 {
                d1.abs() <= noise
            } else {
                d1.abs() <= noise || d1.signum() == x.signum()
            };
            if !(d2 > 0.0) || !sign_ok {
                convex = false;
            }
            (x, d1, d2)
        })
        .collect();
    Ok(ConvexityReport {
        convex,
        derivatives,
    })
}

/// Uniform grid from `start` to `stop` inclusive.
pub fn angle_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// Writes `theta_deg,theta_prime_deg,magnitude_db` rows.
pub fn write_pattern_csv<W: Write>(
    out: &mut W,
    samples: &[BeamPatternSample],
) -> std::io::Result<()> {
    writeln!(out, "theta_deg,theta_prime_deg,magnitude_db")?;
    for s in samples {
        writeln!(
            out,
            "{:.6},{:.6},{:.6}",
            s.theta.to_degrees(),
            s.theta_prime.to_degrees(),
            20.0 * s.magnitude.max(1e-300).log10()
        )?;
    }
    Ok(())
}

/// One row of the resolution comparison table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionRow {
    pub theta_prime: f64,
    pub gamma_raa: f64,
    /// `None` outside the ULA formula's domain.
    pub gamma_ula: Option<f64>,
}

pub fn resolution_table(m: usize, grid: &[f64]) -> Result<Vec<ResolutionRow>> {
    let raa = gamma_raa(m)?;
    Ok(grid
        .iter()
        .map(|&t| ResolutionRow {
            theta_prime: t,
            gamma_raa: raa,
            gamma_ula: gamma_ula(m, t).ok(),
        })
        .collect())
}

/// Writes `theta_prime_deg,gamma_raa_rad,gamma_ula_rad` rows.
pub fn write_resolution_csv<W: Write>(out: &mut W, rows: &[ResolutionRow]) -> std::io::Result<()> {
    writeln!(out, "theta_prime_deg,gamma_raa_rad,gamma_ula_rad")?;
    for r in rows {
        let ula = r.gamma_ula.map(|g| format!("{g:.12}")).unwrap_or_default();
        writeln!(
            out,
            "{:.6},{:.12},{}",
            r.theta_prime.to_degrees(),
            r.gamma_raa,
            ula
        )?;
    }
    Ok(())
}
