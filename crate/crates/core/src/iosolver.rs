//! Input/output transform of the cavity below threshold.
//!
//! The output field is `B_out(Ω) = U(Ω) B_in(Ω) + V(Ω) B_in†(-Ω)`. For a
//! plane pump every transverse wavevector pair `±q` is an independent
//! degenerate OPO and `U`, `V` are scalar functions of `q`; for a finite pump
//! they are dense operators obtained from one linear solve per frequency.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{sinc, CMatrix, Grid1D, KernelMatrix};
use crate::params::{DerivedScales, OpoParams};

/// Systems with a 1-norm condition number above this are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Closed-form `(U, V)` of a single plane-pump mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPair {
    params: OpoParams,
    scales: DerivedScales,
}

impl DiagonalPair {
    pub fn params(&self) -> &OpoParams {
        &self.params
    }

    pub fn scales(&self) -> &DerivedScales {
        &self.scales
    }

    /// `(U(q, Ω), V(q, Ω))` at the stored detuning and analysis frequency.
    pub fn at(&self, q: f64) -> Result<(Complex64, Complex64)> {
        analytic_uv_planepump(q, &self.params, &self.scales)
    }

    /// The same mode evaluated at `-Ω`.
    pub fn at_negative_frequency(&self, q: f64) -> Result<(Complex64, Complex64)> {
        let mut p = self.params.clone();
        p.omega_bar = -p.omega_bar;
        analytic_uv_planepump(q, &p, &self.scales)
    }
}

/// Dense `(U, V)` in weight-normalised form, on the grid of the kernel.
///
/// The operators act on `sqrt(w_i) B(x_i)`, whose commutators are the
/// identity, so the Bogoliubov conditions take their textbook form.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePair {
    pub u: CMatrix,
    pub v: CMatrix,
    /// `U(-Ω)`, needed by the symplectic condition and the noise spectrum.
    pub u_neg: CMatrix,
    /// `V(-Ω)`.
    pub v_neg: CMatrix,
    pub grid: Grid1D,
    pub detuning: f64,
    pub omega_bar: f64,
    /// 1-norm condition number of the system matrix (worst of `±Ω`).
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BogoliubovPair {
    Diagonal(DiagonalPair),
    Dense(DensePair),
}

impl BogoliubovPair {
    /// `(Δ, Ω̄)` the transform was computed at.
    pub fn at(&self) -> (f64, f64) {
        match self {
            BogoliubovPair::Diagonal(d) => (d.params.detuning, d.params.omega_bar),
            BogoliubovPair::Dense(d) => (d.detuning, d.omega_bar),
        }
    }

    pub fn as_dense(&self) -> Option<&DensePair> {
        match self {
            BogoliubovPair::Dense(d) => Some(d),
            BogoliubovPair::Diagonal(_) => None,
        }
    }
}

/// `a = 1 + iΔ + iΩ̄` and `ā = 1 - iΔ + iΩ̄`.
fn cavity_factors(detuning: f64, omega_bar: f64) -> (Complex64, Complex64) {
    (
        Complex64::new(1.0, detuning + omega_bar),
        Complex64::new(1.0, omega_bar - detuning),
    )
}

/// Plane-pump transform of the mode pair `±q`.
pub fn analytic_uv_planepump(q: f64, p: &OpoParams, s: &DerivedScales) -> Result<(Complex64, Complex64)> {
    let coupling = p.a_p * sinc(s.l_c * q * q / (2.0 * s.k_s));
    let (a, a_bar) = cavity_factors(p.detuning, p.omega_bar);
    let g2 = Complex64::new(coupling * coupling, 0.0);
    let denominator = a * a_bar - g2;
    if denominator.norm() < 1e-14 {
        return Err(Error::AtOrAboveThreshold {
            q,
            denominator: denominator.norm(),
        });
    }
    let numerator = a_bar * (2.0 - a) + g2;
    Ok((
        numerator / denominator,
        Complex64::new(2.0 * coupling, 0.0) / denominator,
    ))
}

pub fn diagonal_pair(p: &OpoParams) -> DiagonalPair {
    DiagonalPair {
        params: p.clone(),
        scales: p.derive_scales(),
    }
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves for `(U, V)` at one frequency.
///
/// Eliminating `B_in†` from the cavity equations gives
/// `M B_out = (2 - M) B_in + (2/ā) K B_in†` with `M = a I - ā⁻¹ K K̄`,
/// hence `U = 2 M⁻¹ - I` and `V = (2/ā) M⁻¹ K`.
fn solve_at(k: &CMatrix, detuning: f64, omega_bar: f64) -> Result<(CMatrix, CMatrix, f64)> {
    let n = k.nrows();
    let (a, a_bar) = cavity_factors(detuning, omega_bar);
    let kk = k * k.map(|z| z.conj());
    let m = CMatrix::identity(n, n) * a - kk / a_bar;
    let m_inv = m.clone().lu().try_inverse().ok_or(Error::SingularSystem {
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(&m) * one_norm(&m_inv);
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::SingularSystem { condition });
    }
    let u = &m_inv * Complex64::new(2.0, 0.0) - CMatrix::identity(n, n);
    let v = (&m_inv * k) * (Complex64::new(2.0, 0.0) / a_bar);
    Ok((u, v, condition))
}

/// Dense input/output transform for the kernel `k` at the detuning and
/// analysis frequency of `p`.
pub fn solve_io(k: &KernelMatrix, p: &OpoParams) -> Result<BogoliubovPair> {
    let kn = k.normalized();
    let (u, v, c_pos) = solve_at(&kn, p.detuning, p.omega_bar)?;
    let (u_neg, v_neg, c_neg) = if p.omega_bar == 0.0 {
        (u.clone(), v.clone(), c_pos)
    } else {
        solve_at(&kn, p.detuning, -p.omega_bar)?
    };
    Ok(BogoliubovPair::Dense(DensePair {
        u,
        v,
        u_neg,
        v_neg,
        grid: k.grid().clone(),
        detuning: p.detuning,
        omega_bar: p.omega_bar,
        condition: c_pos.max(c_neg),
    }))
}

/// `1 - ρ`, with `ρ` the largest singular value of the weight-normalised
/// kernel. `ρ = 1` is the oscillation threshold at `Δ = Ω̄ = 0`.
pub fn threshold_margin(k: &KernelMatrix) -> f64 {
    let kn = k.normalized();
    let rho = kn.singular_values().iter().copied().fold(0.0, f64::max);
    1.0 - rho
}

/// Max-norm residuals of the two Bogoliubov conditions,
/// `U(Ω)U(Ω)† - V(Ω)V(Ω)† - I` and `U(Ω)V(-Ω)ᵀ - V(Ω)U(-Ω)ᵀ`.
pub fn bogoliubov_residuals(d: &DensePair) -> (f64, f64) {
    let n = d.u.nrows();
    let max_abs = |m: CMatrix| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let unitarity = &d.u * d.u.adjoint() - &d.v * d.v.adjoint() - DMatrix::identity(n, n);
    let symplectic = &d.u * d.v_neg.transpose() - &d.v * d.u_neg.transpose();
    (max_abs(unitarity), max_abs(symplectic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_kernel_matrix, Domain};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn empty_cavity_at_zero_frequency() {
        let p = OpoParams::default().with_pump_amplitude(0.0);
        let s = p.derive_scales();
        let (u, v) = analytic_uv_planepump(3e4, &p, &s).unwrap();
        assert_eq!((u, v), (c(1.0), c(0.0)));
    }

    #[test]
    fn half_threshold_on_axis() {
        let p = OpoParams::default().with_pump_amplitude(0.5);
        let s = p.derive_scales();
        let (u, v) = analytic_uv_planepump(0.0, &p, &s).unwrap();
        assert_relative_eq!(u.re, 5.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(v.re, 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!((u.im, v.im), (0.0, 0.0));
    }

    #[test]
    fn threshold_mode_is_rejected() {
        let p = OpoParams {
            a_p: 1.0,
            ..OpoParams::default()
        };
        let s = p.derive_scales();
        assert!(matches!(
            analytic_uv_planepump(0.0, &p, &s),
            Err(Error::AtOrAboveThreshold { .. })
        ));
    }

    proptest! {
        #[test]
        fn modulus_identity_at_zero_detuning(
            a_p in 0.0f64..0.999,
            omega in -20.0f64..20.0,
            q_scaled in -10.0f64..10.0,
        ) {
            let p = OpoParams { omega_bar: omega, ..OpoParams::default().with_pump_amplitude(a_p) };
            let s = p.derive_scales();
            let q = q_scaled * s.phase_matching_bandwidth();
            let (u, v) = analytic_uv_planepump(q, &p, &s).unwrap();
            prop_assert!((u.norm_sqr() - v.norm_sqr() - 1.0).abs() < 1e-10 * u.norm_sqr().max(1.0));
        }
    }

    #[test]
    fn empty_cavity_dense_is_reflection() {
        let p = OpoParams::default().with_pump_amplitude(0.0);
        let p = OpoParams { omega_bar: 0.7, ..p };
        let s = p.derive_scales();
        let g = Grid1D::new(64, 4.0 * s.phase_matching_bandwidth(), Domain::Far).unwrap();
        let k = build_kernel_matrix(&g, &p, &s).unwrap();
        let pair = solve_io(&k, &p).unwrap();
        let d = pair.as_dense().unwrap();
        for i in 0..64 {
            assert_relative_eq!(d.u[(i, i)].norm(), 1.0, epsilon = 1e-14);
        }
        assert!(d.v.iter().all(|z| z.norm() == 0.0));
        assert_relative_eq!(threshold_margin(&k), 1.0);
    }

    #[test]
    fn plane_pump_dense_matches_analytic_on_even_modes() {
        let p = OpoParams {
            detuning: 0.5,
            omega_bar: 1.0,
            ..OpoParams::default()
        };
        let s = p.derive_scales();
        let g = Grid1D::new(64, 4.0 * s.phase_matching_bandwidth(), Domain::Far).unwrap();
        let k = build_kernel_matrix(&g, &p, &s).unwrap();
        let d = solve_io(&k, &p).unwrap().as_dense().unwrap().clone();
        for (i, &q) in g.points().iter().enumerate() {
            let (u, v) = analytic_uv_planepump(q, &p, &s).unwrap();
            let j = g.flip(i);
            // Even combination of columns i and flip(i).
            assert!((d.u[(i, i)] + d.u[(i, j)] - u).norm() < 1e-12 * u.norm());
            assert!((d.v[(i, i)] + d.v[(i, j)] - v).norm() < 1e-12 * v.norm());
        }
        let (r1, r2) = bogoliubov_residuals(&d);
        assert!(r1 < 1e-12 && r2 < 1e-12, "{r1} {r2}");
    }

    #[test]
    fn plane_pump_margin_is_distance_to_threshold() {
        let p = OpoParams::default();
        let s = p.derive_scales();
        let g = Grid1D::new(128, 0.01 / s.l_coh, Domain::Far).unwrap();
        let k = build_kernel_matrix(&g, &p, &s).unwrap();
        assert!((threshold_margin(&k) - 0.1).abs() < 1e-9);
    }

    #[test]
    fn gaussian_pump_residuals_and_margin() {
        let p0 = OpoParams::default();
        let s0 = p0.derive_scales();
        let g = Grid1D::new(128, 12.0 * s0.l_coh, Domain::Near).unwrap();
        let mut last = -1.0;
        for w in [4.0, 3.0, 2.0] {
            let p = OpoParams {
                omega_bar: 0.3,
                detuning: 0.2,
                ..p0.clone().with_gaussian_pump(w * s0.l_coh)
            };
            let s = p.derive_scales();
            let k = build_kernel_matrix(&g, &p, &s).unwrap();
            let margin = threshold_margin(&k);
            assert!(margin > last, "margin {margin} after {last}");
            last = margin;
            let d = solve_io(&k, &p).unwrap().as_dense().unwrap().clone();
            let (r1, r2) = bogoliubov_residuals(&d);
            assert!(r1 < 1e-10 && r2 < 1e-10, "{r1} {r2}");
        }
    }

    #[test]
    fn small_pump_changes_give_small_output_changes() {
        let p0 = OpoParams::default();
        let s0 = p0.derive_scales();
        let g = Grid1D::new(96, 9.0 * s0.l_coh, Domain::Near).unwrap();
        let solve = |a: f64| {
            let p = p0.clone().with_gaussian_pump(3.0 * s0.l_coh).with_pump_amplitude(a);
            let k = build_kernel_matrix(&g, &p, &p.derive_scales()).unwrap();
            solve_io(&k, &p).unwrap().as_dense().unwrap().clone()
        };
        let base = solve(0.8);
        let bumped = solve(0.808);
        let scale = base.u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let du = (&bumped.u - &base.u).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let dv = (&bumped.v - &base.v).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(du / scale < 0.1 && dv / scale < 0.1, "{du} {dv} {scale}");
    }

    #[test]
    fn thin_crystal_transform_is_local() {
        let p = OpoParams {
            l_c: 1e-6,
            ..OpoParams::default()
        };
        let s = p.derive_scales();
        let p = p.with_gaussian_pump(s.w_c);
        let g = Grid1D::new(128, 4.0 * s.w_c, Domain::Near).unwrap();
        let k = build_kernel_matrix(&g, &p, &s).unwrap();
        let d = solve_io(&k, &p).unwrap().as_dense().unwrap().clone();
        for m in [&d.u, &d.v] {
            let total: f64 = m.iter().map(|z| z.norm_sqr()).sum();
            let local: f64 = (0..128)
                .flat_map(|i| [(i, i), (i, g.flip(i))])
                .map(|(i, j)| m[(i, j)].norm_sqr())
                .sum::<f64>()
                - (0..128)
                    .filter(|&i| i == g.flip(i))
                    .map(|i| m[(i, i)].norm_sqr())
                    .sum::<f64>();
            let off = 1.0 - local / total;
            assert!(off < 0.01, "off-diagonal fraction {off}");
        }
    }
}
