//! Balanced homodyne detection of the cavity output.
//!
//! Detector and local-oscillator coordinates are always detection-plane
//! metres. In the near field the detection plane is an image of the crystal
//! at unit magnification; in the far field a lens of focal length `f` maps
//! the transverse wavevector `q` to the position `x = q λ f / 2π`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::iosolver::{analytic_uv_planepump, DensePair};
use crate::kernels::{Domain, Grid1D};
use crate::params::{DerivedScales, OpoParams};
use crate::quad;

/// Geometry of the photodiode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorShape {
    /// `|x| <= half_width`.
    Interval { half_width: f64 },
    /// Two pixels of width `pixel_width` centred at `±center_distance`.
    /// Where they overlap the covered area is their union.
    PixelPair { center_distance: f64, pixel_width: f64 },
    /// Disc of the given radius centred on the axis. On a one-dimensional
    /// grid it reduces to the interval `|x| <= radius`.
    Radial { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorMask {
    pub shape: DetectorShape,
    pub plane: Domain,
}

impl DetectorMask {
    pub fn new(shape: DetectorShape, plane: Domain) -> Result<Self> {
        let extents: &[(&'static str, f64)] = match shape {
            DetectorShape::Interval { half_width } => &[("half_width", half_width)],
            DetectorShape::PixelPair {
                center_distance,
                pixel_width,
            } => {
                if !(center_distance.is_finite() && center_distance >= 0.0) {
                    return Err(Error::NonPhysical {
                        field: "center_distance",
                        value: center_distance,
                    });
                }
                &[("pixel_width", pixel_width)]
            }
            DetectorShape::Radial { radius } => &[("radius", radius)],
        };
        for &(field, value) in extents {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPhysical { field, value });
            }
        }
        Ok(DetectorMask { shape, plane })
    }

    /// Whether the detection-plane position `x` is covered.
    pub fn contains(&self, x: f64) -> bool {
        let r = x.abs();
        match self.shape {
            DetectorShape::Interval { half_width } => r <= half_width,
            DetectorShape::Radial { radius } => r <= radius,
            DetectorShape::PixelPair {
                center_distance,
                pixel_width,
            } => (r - center_distance).abs() <= 0.5 * pixel_width,
        }
    }

    /// Largest covered distance from the axis.
    pub fn outer_edge(&self) -> f64 {
        match self.shape {
            DetectorShape::Interval { half_width } => half_width,
            DetectorShape::Radial { radius } => radius,
            DetectorShape::PixelPair {
                center_distance,
                pixel_width,
            } => center_distance + 0.5 * pixel_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoProfile {
    Plane {
        amplitude: f64,
    },
    /// `amplitude exp(-x^2 / waist^2)` in the detection plane.
    Gaussian {
        waist: f64,
        amplitude: f64,
    },
}

/// Local oscillator with a phase that is constant across the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOscillator {
    pub profile: LoProfile,
    pub phi_lo: f64,
}

impl LocalOscillator {
    pub fn plane(phi_lo: f64) -> Self {
        LocalOscillator {
            profile: LoProfile::Plane { amplitude: 1.0 },
            phi_lo,
        }
    }

    pub fn gaussian(waist: f64, phi_lo: f64) -> Self {
        LocalOscillator {
            profile: LoProfile::Gaussian { waist, amplitude: 1.0 },
            phi_lo,
        }
    }

    pub fn validate(self) -> Result<Self> {
        let (amplitude, waist) = match self.profile {
            LoProfile::Plane { amplitude } => (amplitude, 1.0),
            LoProfile::Gaussian { waist, amplitude } => (amplitude, waist),
        };
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::NonPhysical {
                field: "lo_amplitude",
                value: amplitude,
            });
        }
        if !(waist.is_finite() && waist > 0.0) {
            return Err(Error::NonPhysical {
                field: "lo_waist",
                value: waist,
            });
        }
        if !self.phi_lo.is_finite() {
            return Err(Error::NonPhysical {
                field: "phi_lo",
                value: self.phi_lo,
            });
        }
        Ok(self)
    }

    /// Real amplitude at detection-plane position `x` (phase excluded).
    pub fn amplitude(&self, x: f64) -> f64 {
        match self.profile {
            LoProfile::Plane { amplitude } => amplitude,
            LoProfile::Gaussian { waist, amplitude } => amplitude * (-x * x / (waist * waist)).exp(),
        }
    }

    /// The orthogonal quadrature.
    pub fn rotated(self) -> Self {
        LocalOscillator {
            phi_lo: self.phi_lo + FRAC_PI_2,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezingResult {
    /// Photocurrent noise normalised to shot noise.
    pub vn: f64,
    /// Normally ordered part, `vn - 1`.
    pub sn: f64,
    /// Detected LO photon number in grid units.
    pub shot: f64,
    /// LO phase used.
    pub quadrature: f64,
    pub meta: String,
}

impl SqueezingResult {
    fn new(vn: f64, shot: f64, lo: &LocalOscillator, meta: String) -> Self {
        SqueezingResult {
            vn,
            sn: vn - 1.0,
            shot,
            quadrature: lo.phi_lo,
            meta,
        }
    }
}

/// Detection-plane position of grid coordinate `c`.
fn detection_coordinate(c: f64, plane: Domain, s: &DerivedScales) -> f64 {
    match plane {
        Domain::Near => c,
        Domain::Far => s.q_to_detector(c),
    }
}

fn check_plane(det: &DetectorMask, g: &Grid1D) -> Result<()> {
    if det.plane != g.domain() {
        return Err(Error::PlaneMismatch(format!(
            "detector in the {} plane, grid in the {} plane",
            det.plane.name(),
            g.domain().name()
        )));
    }
    Ok(())
}

/// `sqrt(w_i) |α_i|` on covered points, zero elsewhere.
fn lo_mode(lo: &LocalOscillator, det: &DetectorMask, g: &Grid1D, s: &DerivedScales) -> Vec<f64> {
    g.points()
        .iter()
        .zip(g.weights())
        .map(|(&c, &w)| {
            let x = detection_coordinate(c, det.plane, s);
            if det.contains(x) {
                lo.amplitude(x) * w.sqrt()
            } else {
                0.0
            }
        })
        .collect()
}

/// `N = Σ_{i in det} |α_i|^2 w_i`.
pub fn shot_noise(lo: &LocalOscillator, det: &DetectorMask, g: &Grid1D, s: &DerivedScales) -> Result<f64> {
    check_plane(det, g)?;
    let n: f64 = lo_mode(lo, det, g, s).iter().map(|b| b * b).sum();
    if n == 0.0 {
        return Err(Error::EmptyDetector);
    }
    Ok(n)
}

/// Noise of the homodyne photocurrent for a dense transform, vacuum input.
///
/// The measured quadrature is `Σ_i β_i^* b_i + h.c.` with
/// `β_i = sqrt(w_i) α_i e^{iφ}`. Substituting the output operators, its
/// coefficient on the input field is `f = β^H U(Ω) + β^T V(-Ω)^*`, and the
/// vacuum variance normalised to shot noise is `|f|^2 / |β|^2`.
pub fn squeezing_numeric(
    pair: &DensePair,
    lo: &LocalOscillator,
    det: &DetectorMask,
    s: &DerivedScales,
) -> Result<SqueezingResult> {
    check_plane(det, &pair.grid)?;
    let modes = lo_mode(lo, det, &pair.grid, s);
    let shot: f64 = modes.iter().map(|b| b * b).sum();
    if shot == 0.0 {
        return Err(Error::EmptyDetector);
    }
    let vn = project(pair, &modes, lo.phi_lo) / shot;
    Ok(SqueezingResult::new(vn, shot, lo, describe(lo, det)))
}

fn project(pair: &DensePair, modes: &[f64], phi: f64) -> f64 {
    let phase = Complex64::from_polar(1.0, phi);
    let n = modes.len();
    let support: Vec<usize> = (0..n).filter(|&i| modes[i] != 0.0).collect();
    (0..n)
        .map(|j| {
            let f: Complex64 = support
                .iter()
                .map(|&i| {
                    let b = phase * modes[i];
                    b.conj() * pair.u[(i, j)] + b * pair.v_neg[(i, j)].conj()
                })
                .sum();
            f.norm_sqr()
        })
        .sum()
}

fn describe(lo: &LocalOscillator, det: &DetectorMask) -> String {
    let lo_text = match lo.profile {
        LoProfile::Plane { amplitude } => format!("lo=plane amplitude={amplitude}"),
        LoProfile::Gaussian { waist, amplitude } => {
            format!("lo=gaussian lo_waist={waist} amplitude={amplitude}")
        }
    };
    let det_text = match det.shape {
        DetectorShape::Interval { half_width } => format!("detector=interval half_width={half_width}"),
        DetectorShape::Radial { radius } => format!("detector=radial radius={radius}"),
        DetectorShape::PixelPair {
            center_distance,
            pixel_width,
        } => format!("detector=pixel_pair center_distance={center_distance} pixel_width={pixel_width}"),
    };
    format!("plane={} {det_text} {lo_text} phi_lo={}", det.plane.name(), lo.phi_lo)
}

/// `R(q) = |U(q, Ω) + e^{2iφ} V(q, -Ω)^*|^2` for a plane pump.
///
/// At `Δ = Ω̄ = 0` and `φ = π/2` this is `((1 - A_p σ)/(1 + A_p σ))^2` with
/// `σ = sinc(l_c q^2 / 2 k_s)`: the squeezed quadrature.
pub fn noise_density_planepump(q: f64, p: &OpoParams, s: &DerivedScales, phi_lo: f64) -> Result<f64> {
    let (u, _) = analytic_uv_planepump(q, p, s)?;
    let mirrored = OpoParams {
        omega_bar: -p.omega_bar,
        ..p.clone()
    };
    let (_, v_neg) = analytic_uv_planepump(q, &mirrored, s)?;
    Ok((u + Complex64::from_polar(1.0, 2.0 * phi_lo) * v_neg.conj()).norm_sqr())
}

/// Density at the detection-plane radius `r`, written through `u = r / r0`
/// so that the phase-matching factor is `sinc(u^2)`.
fn density_at_scaled_radius(u: f64, p: &OpoParams, s: &DerivedScales, phi_lo: f64) -> Result<f64> {
    noise_density_planepump(s.detector_to_q(u * s.r0), p, s, phi_lo)
}

const ANALYTIC_TOL: f64 = 1e-10;

/// Weighted average of the plane-pump density over `u in [u_lo, u_hi]`,
/// together with the integral of the weight. Panels break at the zeros of
/// `sinc(u^2)`.
fn averaged_density<W: Fn(f64) -> f64>(
    u_lo: f64,
    u_hi: f64,
    weight: W,
    p: &OpoParams,
    s: &DerivedScales,
    phi_lo: f64,
) -> Result<(f64, f64)> {
    // Surface the threshold error before integrating.
    let on_axis = density_at_scaled_radius(u_lo, p, s, phi_lo)?;
    if u_hi <= u_lo {
        return Ok((on_axis, 0.0));
    }
    let first = (u_lo * u_lo / PI).floor() as usize + 1;
    let last = (u_hi * u_hi / PI).floor() as usize;
    let breaks: Vec<f64> = (first..=last).map(|m| (m as f64 * PI).sqrt()).collect();
    let norm = quad::integrate_with_breaks(&weight, u_lo, u_hi, &breaks, ANALYTIC_TOL * u_hi);
    if norm == 0.0 {
        return Ok((on_axis, 0.0));
    }
    let numerator = quad::integrate_with_breaks(
        |u| weight(u) * density_at_scaled_radius(u, p, s, phi_lo).unwrap_or(f64::NAN),
        u_lo,
        u_hi,
        &breaks,
        ANALYTIC_TOL * norm,
    );
    if !numerator.is_finite() {
        return Err(Error::AtOrAboveThreshold {
            q: f64::NAN,
            denominator: 0.0,
        });
    }
    Ok((numerator / norm, norm))
}

/// Far-field spectrum of a plane-pump OPO seen by a disc of radius `r`
/// centred on the axis.
///
/// Each detection-plane point sees an independent mode, so the spectrum is
/// the LO-weighted average of the noise density over the disc.
pub fn spectrum_planepump_circular(
    r: f64,
    p: &OpoParams,
    s: &DerivedScales,
    lo: &LocalOscillator,
) -> Result<SqueezingResult> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::NonPhysical {
            field: "radius",
            value: r,
        });
    }
    let (vn, _) = averaged_density(
        0.0,
        r / s.r0,
        |u| {
            let a = lo.amplitude(u * s.r0);
            u * a * a
        },
        p,
        s,
        lo.phi_lo,
    )?;
    let shot = match lo.profile {
        LoProfile::Plane { amplitude } => PI * r * r * amplitude * amplitude,
        LoProfile::Gaussian { waist, amplitude } => {
            0.5 * PI * waist * waist * amplitude * amplitude * -(-2.0 * r * r / (waist * waist)).exp_m1()
        }
    };
    let det = DetectorMask {
        shape: DetectorShape::Radial { radius: r },
        plane: Domain::Far,
    };
    Ok(SqueezingResult::new(vn, shot, lo, describe(lo, &det)))
}

/// Plane-pump far-field spectrum for a one-dimensional detector, the
/// counterpart of [`spectrum_planepump_circular`] on a line. Radial masks
/// are taken as the interval `|x| <= radius`.
pub fn spectrum_planepump_far_1d(
    det: &DetectorMask,
    p: &OpoParams,
    s: &DerivedScales,
    lo: &LocalOscillator,
) -> Result<SqueezingResult> {
    if det.plane != Domain::Far {
        return Err(Error::PlaneMismatch(
            "analytic plane-pump spectra are far-field only".into(),
        ));
    }
    let (lo_edge, hi_edge) = match det.shape {
        DetectorShape::Interval { half_width } => (0.0, half_width),
        DetectorShape::Radial { radius } => (0.0, radius),
        DetectorShape::PixelPair {
            center_distance,
            pixel_width,
        } => (
            (center_distance - 0.5 * pixel_width).max(0.0),
            center_distance + 0.5 * pixel_width,
        ),
    };
    let (vn, norm) = averaged_density(
        lo_edge / s.r0,
        hi_edge / s.r0,
        |u| {
            let a = lo.amplitude(u * s.r0);
            a * a
        },
        p,
        s,
        lo.phi_lo,
    )?;
    // Both halves of the symmetric detector, in detection-plane metres.
    let shot = 2.0 * norm * s.r0;
    Ok(SqueezingResult::new(vn, shot, lo, describe(lo, det)))
}

/// Near-field interval `|x| <= half_width` with a plane LO, plane pump.
///
/// The detector's transform weights the density by `sin^2(q h) / q^2`:
/// `vn = 1 + (2 / π h) ∫_0^∞ (R(q) - 1) sin^2(q h) / q^2 dq`.
pub fn spectrum_planepump_interval_near(half_width: f64, p: &OpoParams, s: &DerivedScales, phi_lo: f64) -> Result<f64> {
    density_at_scaled_radius(0.0, p, s, phi_lo)?;
    // q = 2u / l_coh turns the phase-matching factor into sinc(u^2).
    let to_q = 2.0 / s.l_coh;
    let h = half_width;
    let integrand = |u: f64| {
        let q = u * to_q;
        let shape = if q * h < 1e-4 {
            h * h
        } else {
            let sq = (q * h).sin() / q;
            sq * sq
        };
        let r = noise_density_planepump(q, p, s, phi_lo).unwrap_or(f64::NAN);
        (r - 1.0) * shape * to_q
    };
    // R - 1 falls off as 1/u^2 and the detector factor as 1/u^2 beyond 1/(q h).
    let u_max = 60.0;
    let breaks: Vec<f64> = (1..=(u_max * u_max / PI) as usize)
        .map(|m| (m as f64 * PI).sqrt())
        .collect();
    let body = quad::integrate_with_breaks(integrand, 0.0, u_max, &breaks, 1e-12 * h);
    Ok(1.0 + 2.0 / (PI * h) * body)
}

/// Detector families whose single size parameter is swept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorFamily {
    /// The abscissa is the half-width.
    Interval,
    /// The abscissa is the radius.
    Radial,
    /// The abscissa is the pixel-centre distance from the axis.
    PixelPair { pixel_width: f64 },
}

impl DetectorFamily {
    pub fn mask(&self, size: f64, plane: Domain) -> Result<DetectorMask> {
        let shape = match *self {
            DetectorFamily::Interval => DetectorShape::Interval { half_width: size },
            DetectorFamily::Radial => DetectorShape::Radial { radius: size },
            DetectorFamily::PixelPair { pixel_width } => DetectorShape::PixelPair {
                center_distance: size,
                pixel_width,
            },
        };
        DetectorMask::new(shape, plane)
    }

    pub fn name(&self) -> &'static str {
        match self {
            DetectorFamily::Interval => "interval",
            DetectorFamily::Radial => "radial",
            DetectorFamily::PixelPair { .. } => "pixel_pair",
        }
    }
}

/// One row of a swept curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub abscissa: f64,
    pub vn_squeezed: f64,
    pub vn_antisqueezed: f64,
    pub shot: f64,
}

/// Spectra for every detector size in `sizes` (detection-plane metres), in
/// the LO quadrature and the one rotated by `π/2`. `abscissa_scale` divides
/// the sizes to give the reported abscissa.
pub fn sweep(
    pair: &DensePair,
    lo: &LocalOscillator,
    family: DetectorFamily,
    plane: Domain,
    sizes: &[f64],
    abscissa_scale: f64,
    s: &DerivedScales,
) -> Result<Vec<CurvePoint>> {
    sizes
        .par_iter()
        .map(|&size| {
            let det = family.mask(size, plane)?;
            let sq = squeezing_numeric(pair, lo, &det, s)?;
            let anti = squeezing_numeric(pair, &lo.rotated(), &det, s)?;
            Ok(CurvePoint {
                abscissa: size / abscissa_scale,
                vn_squeezed: sq.vn,
                vn_antisqueezed: anti.vn,
                shot: sq.shot,
            })
        })
        .collect()
}
