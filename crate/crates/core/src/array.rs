//! Array geometries, element radiation patterns and array-response primitives
//! for the ray antenna array (RAA) and the conventional ULA benchmark.
//!
//! Angles are in radians, measured from the array boresight. All RAA element
//! spacing is half a wavelength; the first element of every sULA sits at the
//! base offset `D` from the origin.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Threshold on `|sin(pi x / 2)|` below which the Dirichlet kernel switches to
/// its analytic limit.
const KERNEL_SINGULAR_EPS: f64 = 1e-12;

/// Wavelength for a carrier frequency in Hz.
pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    /// 3GPP parabolic-in-dB pattern clamped at the front-to-back ratio.
    ThreeGpp,
    /// Constant gain in every direction.
    Isotropic,
}

/// Element radiation pattern, characterized in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementPattern {
    pub kind: PatternKind,
    pub peak_gain_db: f64,
    pub beamwidth_3db: f64,
    pub front_to_back_db: f64,
}

impl ElementPattern {
    pub const FRONT_TO_BACK_DB: f64 = 30.0;

    pub fn three_gpp(peak_gain_db: f64, beamwidth_3db: f64) -> Self {
        Self {
            kind: PatternKind::ThreeGpp,
            peak_gain_db,
            beamwidth_3db,
            front_to_back_db: Self::FRONT_TO_BACK_DB,
        }
    }

    pub fn isotropic(peak_gain_db: f64) -> Self {
        Self {
            kind: PatternKind::Isotropic,
            peak_gain_db,
            beamwidth_3db: 2.0 * PI,
            front_to_back_db: Self::FRONT_TO_BACK_DB,
        }
    }

    /// Directional RAA element: 5.1335 dB peak, 0.3*pi 3 dB beamwidth.
    pub fn raa_directional() -> Self {
        Self::three_gpp(5.1335, 0.3 * PI)
    }

    /// Wide ULA element: 0 dB peak, pi 3 dB beamwidth.
    pub fn ula_wide() -> Self {
        Self::three_gpp(0.0, PI)
    }

    /// Isotropic element with the same total power gain as the two above.
    pub fn isotropic_fair() -> Self {
        Self::isotropic(-2.816)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.peak_gain_db.is_finite() {
            return Err(Error::InvalidConfig(
                "element peak gain must be finite".into(),
            ));
        }
        if self.kind == PatternKind::ThreeGpp
            && !(self.beamwidth_3db > 0.0 && self.beamwidth_3db.is_finite())
        {
            return Err(Error::InvalidConfig(
                "element 3 dB beamwidth must be positive".into(),
            ));
        }
        if !(self.front_to_back_db >= 0.0) {
            return Err(Error::InvalidConfig(
                "front-to-back ratio must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Gain in dB at angle `theta` off the element boresight.
    pub fn gain_db(&self, theta: f64) -> f64 {
        match self.kind {
            PatternKind::Isotropic => self.peak_gain_db,
            PatternKind::ThreeGpp => {
                let off = wrap_angle(theta).abs();
                let ratio = off / self.beamwidth_3db;
                self.peak_gain_db - (12.0 * ratio * ratio).min(self.front_to_back_db)
            }
        }
    }

    /// Linear power gain at angle `theta` off the element boresight.
    pub fn gain(&self, theta: f64) -> f64 {
        10f64.powf(self.gain_db(theta) / 10.0)
    }

    pub fn peak_gain(&self) -> f64 {
        10f64.powf(self.peak_gain_db / 10.0)
    }

    /// Angle beyond which the front-to-back clamp is active.
    fn clamp_angle(&self) -> Option<f64> {
        match self.kind {
            PatternKind::Isotropic => None,
            PatternKind::ThreeGpp => {
                let a = self.beamwidth_3db * (self.front_to_back_db / 12.0).sqrt();
                (a < PI).then_some(a)
            }
        }
    }
}

/// Maps an angle into `(-pi, pi]`.
fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    } else if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

pub fn element_gain(theta: f64, pattern: &ElementPattern) -> f64 {
    pattern.gain(theta)
}

/// Integral of the linear element gain over `(-pi, pi]`.
pub fn total_power_gain(pattern: &ElementPattern) -> f64 {
    let f = |t: f64| pattern.gain(t);
    // the pattern is even; integrate [0, pi] piecewise around the clamp kink
    let half = match pattern.clamp_angle() {
        Some(a) => adaptive_simpson(&f, 0.0, a, 5e-10) + adaptive_simpson(&f, a, PI, 5e-10),
        None => adaptive_simpson(&f, 0.0, PI, 5e-10),
    };
    2.0 * half
}

/// Dirichlet kernel `e^{j pi (M-1) x / 2} sin(pi M x / 2) / (M sin(pi x / 2))`.
pub fn dirichlet_kernel(x: f64, m: usize) -> Complex64 {
    let phase = Complex64::from_polar(1.0, 0.5 * PI * (m as f64 - 1.0) * x);
    phase * dirichlet_amplitude(x, m)
}

/// Real (signed) amplitude of the Dirichlet kernel. Changes sign at each null.
pub fn dirichlet_amplitude(x: f64, m: usize) -> f64 {
    let mf = m as f64;
    let den = (0.5 * PI * x).sin();
    if den.abs() < KERNEL_SINGULAR_EPS {
        // L'Hopital: cos(pi M x / 2) / cos(pi x / 2)
        (0.5 * PI * mf * x).cos() / (0.5 * PI * x).cos()
    } else {
        (0.5 * PI * mf * x).sin() / (mf * den)
    }
}

/// Ray antenna array geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct RaaConfig {
    pub elements_per_sula: usize,
    /// Orientations `eta_n`, ordered by index `n = -(N-1)/2 ..= (N-1)/2`.
    pub orientations: Vec<f64>,
    pub base_offset: f64,
    pub wavelength: f64,
    pub element_pattern: ElementPattern,
    pub eta_max: f64,
}

impl RaaConfig {
    /// Builds an RAA with designed orientations and the minimum base offset.
    pub fn design(
        elements_per_sula: usize,
        eta_max: f64,
        wavelength: f64,
        element_pattern: ElementPattern,
    ) -> Result<Self> {
        let (_, orientations) = design_orientations(elements_per_sula, eta_max)?;
        let base_offset = min_base_offset(elements_per_sula, wavelength)?;
        let cfg = Self {
            elements_per_sula,
            orientations,
            base_offset,
            wavelength,
            element_pattern,
            eta_max,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_base_offset(mut self, base_offset: f64) -> Result<Self> {
        self.base_offset = base_offset;
        self.validate()?;
        Ok(self)
    }

    pub fn num_sulas(&self) -> usize {
        self.orientations.len()
    }

    /// Signed orientation index `n` of a port position in the vector.
    pub fn orientation_index(&self, port: usize) -> i64 {
        port as i64 - (self.num_sulas() as i64 - 1) / 2
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.elements_per_sula;
        if m < 2 {
            return Err(Error::InvalidConfig(format!(
                "elements per sULA must be at least 2, got {m}"
            )));
        }
        let n = self.num_sulas();
        if n % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "number of sULAs must be odd, got {n}"
            )));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidConfig("wavelength must be positive".into()));
        }
        self.element_pattern.validate()?;
        let c = (n - 1) / 2;
        if self.orientations[c] != 0.0 {
            return Err(Error::InvalidConfig("center orientation must be 0".into()));
        }
        for k in 1..=c {
            if self.orientations[c + k] != -self.orientations[c - k] {
                return Err(Error::InvalidConfig(
                    "orientations must be antisymmetric about the center".into(),
                ));
            }
        }
        if self.orientations.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "orientations must be strictly increasing".into(),
            ));
        }
        if self
            .orientations
            .iter()
            .any(|e| e.abs() > self.eta_max + 1e-12)
        {
            return Err(Error::InvalidConfig(format!(
                "orientation magnitude exceeds eta_max = {}",
                self.eta_max
            )));
        }
        let d_min = min_base_offset(m, self.wavelength)?;
        if self.base_offset < d_min * (1.0 - 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "base offset {} m below the half-wavelength separation bound {} m",
                self.base_offset, d_min
            )));
        }
        Ok(())
    }
}

/// Conventional ULA with a DFT codebook for hybrid beamforming.
#[derive(Debug, Clone, PartialEq)]
pub struct UlaConfig {
    pub num_elements: usize,
    pub element_spacing: f64,
    pub wavelength: f64,
    pub codebook_size: usize,
    /// `sin(phi_n)` of every codeword, ascending.
    pub codeword_sines: Vec<f64>,
    pub element_pattern: ElementPattern,
}

impl UlaConfig {
    /// Half-wavelength ULA with an `num_elements`-point DFT codebook.
    pub fn new(
        num_elements: usize,
        wavelength: f64,
        element_pattern: ElementPattern,
    ) -> Result<Self> {
        Self::with_codebook(num_elements, num_elements, wavelength, element_pattern)
    }

    pub fn with_codebook(
        num_elements: usize,
        codebook_size: usize,
        wavelength: f64,
        element_pattern: ElementPattern,
    ) -> Result<Self> {
        if num_elements < 1 || codebook_size < 1 {
            return Err(Error::InvalidConfig(
                "ULA needs at least one element and one codeword".into(),
            ));
        }
        let step = 2.0 / codebook_size as f64;
        let codeword_sines = (0..codebook_size).map(|n| -1.0 + step * n as f64).collect();
        let cfg = Self {
            num_elements,
            element_spacing: 0.5 * wavelength,
            wavelength,
            codebook_size,
            codeword_sines,
            element_pattern,
        };
        cfg.element_pattern.validate()?;
        Ok(cfg)
    }

    pub fn codeword_angles(&self) -> Vec<f64> {
        self.codeword_sines.iter().map(|s| s.asin()).collect()
    }

    /// Phase progression per element per unit of `sin(theta)`.
    pub(crate) fn spatial_factor(&self) -> f64 {
        2.0 * self.element_spacing / self.wavelength
    }
}

/// Reference-element response `b(zeta) = e^{j 2pi/lambda D sin zeta} sqrt(G(zeta))`.
pub fn sula_ref_response(zeta: f64, cfg: &RaaConfig) -> Complex64 {
    let phase = 2.0 * PI / cfg.wavelength * cfg.base_offset * zeta.sin();
    Complex64::from_polar(cfg.element_pattern.gain(zeta).sqrt(), phase)
}

/// Combined output of one sULA with orientation `eta` for a plane wave from `theta`.
pub fn sula_response(theta: f64, eta: f64, cfg: &RaaConfig) -> Complex64 {
    let zeta = theta - eta;
    let m = cfg.elements_per_sula;
    sula_ref_response(zeta, cfg) * dirichlet_kernel(zeta.sin(), m) * m as f64
}

/// Responses of all sULAs, ordered by orientation index.
pub fn raa_response_vector(theta: f64, cfg: &RaaConfig) -> Vec<Complex64> {
    cfg.orientations
        .iter()
        .map(|&eta| sula_response(theta, eta, cfg))
        .collect()
}

/// ULA steering vector `[e^{j pi (m-1) sin theta}]` (no element gain).
pub fn ula_response_vector(theta: f64, cfg: &UlaConfig) -> Vec<Complex64> {
    let k = PI * cfg.spatial_factor() * theta.sin();
    (0..cfg.num_elements)
        .map(|m| Complex64::from_polar(1.0, k * m as f64))
        .collect()
}

/// Number of sULAs and their orientations `n * asin(2/M)`.
///
/// The count formula `2 floor(eta_max / asin(2/M) + 1)` is always even; the
/// outermost positive-index sULA is dropped so the set stays odd and centered,
/// giving `2 floor(eta_max / asin(2/M)) + 1` (201 for `M = 128`).
pub fn design_orientations(m: usize, eta_max: f64) -> Result<(usize, Vec<f64>)> {
    if m < 2 {
        return Err(Error::Domain {
            what: "elements per sULA",
            detail: format!("M = {m} gives asin(2/M) with argument > 1; need M >= 2"),
        });
    }
    if !(eta_max > 0.0 && eta_max <= FRAC_PI_2 + 1e-15) {
        return Err(Error::Domain {
            what: "eta_max",
            detail: format!("{eta_max} not in (0, pi/2]"),
        });
    }
    let step = (2.0 / m as f64).asin();
    // small slack so that exact multiples (e.g. M = 4) survive rounding
    let half = (eta_max / step + 1e-9).floor() as i64;
    let formula = 2 * (half + 1);
    let n = (formula - 1) as usize;
    let orientations = (-half..=half).map(|k| k as f64 * step).collect();
    Ok((n, orientations))
}

/// Smallest base offset keeping all elements half a wavelength apart.
pub fn min_base_offset(m: usize, wavelength: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain {
            what: "elements per sULA",
            detail: format!("M = {m}; need M >= 2"),
        });
    }
    Ok(wavelength / (4.0 * (0.5 * (2.0 / m as f64).asin()).sin()))
}

/// DFT codebook `[a(phi_1), ..., a(phi_N')]`, one codeword per column.
pub fn dft_codebook(cfg: &UlaConfig) -> DMatrix<Complex64> {
    let k = PI * cfg.spatial_factor();
    DMatrix::from_fn(cfg.num_elements, cfg.codebook_size, |m, n| {
        Complex64::from_polar(1.0, k * m as f64 * cfg.codeword_sines[n])
    })
}

/// Receive front end feeding the RF chains: RAA sULA ports or ULA DFT codewords.
#[derive(Debug, Clone, PartialEq)]
pub enum FrontEnd {
    Raa(RaaConfig),
    Ula(UlaConfig),
}

impl FrontEnd {
    /// Ports available to the selection network (sULAs or codewords).
    pub fn num_ports(&self) -> usize {
        match self {
            FrontEnd::Raa(c) => c.num_sulas(),
            FrontEnd::Ula(c) => c.codebook_size,
        }
    }

    /// Antenna elements combined into each port; sets the noise accumulation.
    pub fn elements_per_port(&self) -> usize {
        match self {
            FrontEnd::Raa(c) => c.elements_per_sula,
            FrontEnd::Ula(c) => c.num_elements,
        }
    }

    /// Output of one port for a unit plane wave from `theta`.
    ///
    /// For the ULA this is `a(phi_k)^H (sqrt(G_ULA(theta)) a(theta))`, evaluated
    /// in closed form through the Dirichlet kernel.
    pub fn port_response(&self, theta: f64, port: usize) -> Complex64 {
        match self {
            FrontEnd::Raa(c) => sula_response(theta, c.orientations[port], c),
            FrontEnd::Ula(c) => {
                let m = c.num_elements;
                let x = c.spatial_factor() * (theta.sin() - c.codeword_sines[port]);
                dirichlet_kernel(x, m) * (m as f64 * c.element_pattern.gain(theta).sqrt())
            }
        }
    }

    pub fn full_response(&self, theta: f64) -> Vec<Complex64> {
        (0..self.num_ports())
            .map(|p| self.port_response(theta, p))
            .collect()
    }

    /// Equivalent steering vector `h_s(theta)` over the selected ports.
    pub fn steering(&self, theta: f64, ports: &[usize]) -> DVector<Complex64> {
        DVector::from_iterator(
            ports.len(),
            ports.iter().map(|&p| self.port_response(theta, p)),
        )
    }

    /// Angular distance of a port's look direction from boresight; used to
    /// break energy ties during selection.
    pub fn port_look_angle(&self, port: usize) -> f64 {
        match self {
            FrontEnd::Raa(c) => c.orientations[port].abs(),
            FrontEnd::Ula(c) => c.codeword_sines[port].asin().abs(),
        }
    }

    /// Natural angular resolution of the aperture, `asin(2/M)`.
    pub fn nominal_resolution(&self) -> f64 {
        (2.0 / self.elements_per_port().max(2) as f64).asin()
    }
}
