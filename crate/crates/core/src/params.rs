//! Physical configuration of the cavity, crystal and pump, and the length
//! scales derived from it.
//!
//! The pump amplitude is carried in threshold units: a plane-wave pump at
//! zero detuning and zero analysis frequency starts to oscillate at
//! `A_p = 1`. Frequencies and detunings are normalised to the cavity escape
//! rate, which therefore never appears explicitly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transverse profile of the pump in the crystal mid-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpProfile {
    /// Infinitely wide pump; every transverse wavevector is an independent OPO.
    Plane,
    /// `A_p exp(-|x|^2 / w_p^2)`.
    Gaussian { waist: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpoParams {
    /// Signal wavelength in vacuum (m).
    pub lambda_s: f64,
    /// Refractive index at the signal frequency.
    pub n_s: f64,
    /// Crystal length (m).
    pub l_c: f64,
    /// Rayleigh range of the cavity mode (m).
    #[serde(rename = "z_C")]
    pub z_c: f64,
    /// Pump waist (m). Must be absent when `plane_pump` is set.
    #[serde(default)]
    pub w_p: Option<f64>,
    #[serde(default)]
    pub plane_pump: bool,
    /// Peak pump amplitude in threshold units.
    #[serde(rename = "A_p")]
    pub a_p: f64,
    /// Cavity detuning normalised to the escape rate.
    #[serde(default)]
    pub detuning: f64,
    /// Analysis frequency normalised to the escape rate.
    #[serde(default)]
    pub omega_bar: f64,
    /// Focal length of the detection lens (m).
    pub f_lens: f64,
}

impl Default for OpoParams {
    /// 1.064 µm signal in a 1 cm crystal with `n_s = 2.12`, cavity Rayleigh
    /// range equal to the crystal length, plane pump at `A_p = 0.9`.
    fn default() -> Self {
        OpoParams {
            lambda_s: 1.064e-6,
            n_s: 2.12,
            l_c: 0.01,
            z_c: 0.01,
            w_p: None,
            plane_pump: true,
            a_p: 0.9,
            detuning: 0.0,
            omega_bar: 0.0,
            f_lens: 0.1,
        }
    }
}

impl OpoParams {
    pub fn pump(&self) -> PumpProfile {
        match self.w_p {
            Some(waist) if !self.plane_pump => PumpProfile::Gaussian { waist },
            _ => PumpProfile::Plane,
        }
    }

    pub fn is_plane_pump(&self) -> bool {
        matches!(self.pump(), PumpProfile::Plane)
    }

    /// Switch to a Gaussian pump of the given waist.
    pub fn with_gaussian_pump(mut self, waist: f64) -> Self {
        self.plane_pump = false;
        self.w_p = Some(waist);
        self
    }

    pub fn with_plane_pump(mut self) -> Self {
        self.plane_pump = true;
        self.w_p = None;
        self
    }

    pub fn with_pump_amplitude(mut self, a_p: f64) -> Self {
        self.a_p = a_p;
        self
    }

    /// Checks every invariant and hands the parameters back unchanged.
    pub fn validate(self) -> Result<Self> {
        let lengths = [
            ("lambda_s", self.lambda_s),
            ("l_c", self.l_c),
            ("z_C", self.z_c),
            ("f_lens", self.f_lens),
        ];
        for (field, value) in lengths {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPhysical { field, value });
            }
        }
        if !(self.n_s.is_finite() && self.n_s >= 1.0) {
            return Err(Error::NonPhysical {
                field: "n_s",
                value: self.n_s,
            });
        }
        for (field, value) in [("detuning", self.detuning), ("omega_bar", self.omega_bar)] {
            if !value.is_finite() {
                return Err(Error::NonPhysical { field, value });
            }
        }
        if !self.a_p.is_finite() || self.a_p < 0.0 {
            return Err(Error::NonPhysical {
                field: "A_p",
                value: self.a_p,
            });
        }
        if self.a_p >= 1.0 {
            return Err(Error::AboveThreshold(self.a_p));
        }
        match (self.plane_pump, self.w_p) {
            (true, Some(w)) => return Err(Error::AmbiguousPump(w)),
            (false, None) => {
                return Err(Error::NonPhysical {
                    field: "w_p",
                    value: f64::NAN,
                })
            }
            (false, Some(w)) if !(w.is_finite() && w > 0.0) => {
                return Err(Error::NonPhysical { field: "w_p", value: w })
            }
            _ => {}
        }
        Ok(self)
    }

    pub fn derive_scales(&self) -> DerivedScales {
        DerivedScales::from_params(self)
    }
}

/// Length scales shared by every other module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScales {
    /// Signal wavenumber inside the crystal (1/m).
    pub k_s: f64,
    /// Near-field coherence length `sqrt(lambda l_c / (pi n_s))` (m).
    pub l_coh: f64,
    /// Number of independently squeezable modes `w_p^2 / l_coh^2`; `None` for a plane pump.
    pub b: Option<f64>,
    /// Cavity waist implied by the Rayleigh range (m).
    pub w_c: f64,
    /// Far-field detection-plane scale `lambda f / (pi l_coh)` (m).
    pub r0: f64,
    /// Far-field coherence scale `1 / w_p` (1/m); `None` for a plane pump.
    pub q_coh: Option<f64>,
    /// Pump diffraction length `pi w_p^2 / (2 lambda)` (m), the length for
    /// which `b = 2 n_s z_p / l_c`.
    pub z_p: Option<f64>,
    /// Crystal length, kept alongside the scales it generates (m).
    pub l_c: f64,
    /// Wavevector-to-detection-plane factor `lambda f / (2 pi)` (m^2).
    pub far_map: f64,
}

impl DerivedScales {
    pub fn from_params(p: &OpoParams) -> Self {
        let k_s = 2.0 * PI * p.n_s / p.lambda_s;
        let l_coh = (p.lambda_s * p.l_c / (PI * p.n_s)).sqrt();
        let w_c = (p.lambda_s * p.z_c / PI).sqrt();
        let r0 = p.lambda_s * p.f_lens / (PI * l_coh);
        let waist = match p.pump() {
            PumpProfile::Gaussian { waist } => Some(waist),
            PumpProfile::Plane => None,
        };
        DerivedScales {
            k_s,
            l_coh,
            b: waist.map(|w| w * w / (l_coh * l_coh)),
            w_c,
            r0,
            q_coh: waist.map(|w| 1.0 / w),
            z_p: waist.map(|w| PI * w * w / (2.0 * p.lambda_s)),
            l_c: p.l_c,
            far_map: p.lambda_s * p.f_lens / (2.0 * PI),
        }
    }

    /// Phase-matching bandwidth `sqrt(2 k_s / l_c) = 2 / l_coh` (1/m).
    pub fn phase_matching_bandwidth(&self) -> f64 {
        (2.0 * self.k_s / self.l_c).sqrt()
    }

    /// Detection-plane position for a transverse wavevector behind the lens.
    pub fn q_to_detector(&self, q: f64) -> f64 {
        q * self.far_map
    }

    pub fn detector_to_q(&self, x: f64) -> f64 {
        x / self.far_map
    }
}
