//! Thick-crystal parametric coupling kernels.
//!
//! In the crystal image plane (near field) the pump couples the signal at
//! `x` to its conjugate at `x'` through
//!
//! ```text
//! K(x, x') = 1/2 [ A_p((x + x')/2) Δ(x - x') + A_p((x - x')/2) Δ(x + x') ]
//! ```
//!
//! where `Δ` is a delta function smeared over the coherence length by
//! diffraction inside the crystal. In the transverse-wavevector domain the
//! smearing becomes the phase-matching factor `sinc(δ l_c / 2)`.
//!
//! The two-dimensional closed forms are exposed as scalar functions. The
//! numerical model is one-dimensional: [`build_kernel_matrix`] evaluates the
//! far-field kernel directly and obtains the near-field kernel as its
//! discrete inverse transform, so the two are an exact transform pair.

mod grid;
pub mod special;

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use grid::{
    check_kernel_grid, CoherenceRegime, Domain, Grid1D, LOCAL_FAR_PHASE, LOCAL_STEP_RATIO, STEPS_PER_SCALE,
    WAISTS_PER_EXTENT,
};
pub use special::{si, sinc};

use crate::error::Result;
use crate::params::{DerivedScales, OpoParams, PumpProfile};

pub type CMatrix = DMatrix<Complex64>;

/// Smeared delta function of the near-field kernel at transverse distance
/// `r` (1/m^2): `(k_s / (2 pi l_c)) (pi/2 - Si(k_s r^2 / (2 l_c)))`.
pub fn delta_2d(r: f64, s: &DerivedScales) -> f64 {
    let u = (r / s.l_coh).powi(2);
    s.k_s / (2.0 * PI * s.l_c) * (FRAC_PI_2 - si(u))
}

/// Pump envelope `A_p exp(-|x|^2 / w_p^2)` in threshold units.
pub fn pump_envelope(x2: f64, p: &OpoParams) -> f64 {
    match p.pump() {
        PumpProfile::Plane => p.a_p,
        PumpProfile::Gaussian { waist } => p.a_p * (-x2 / (waist * waist)).exp(),
    }
}

/// Two-dimensional near-field kernel.
pub fn kint_near_2d(x: [f64; 2], x2: [f64; 2], p: &OpoParams, s: &DerivedScales) -> f64 {
    let sum = [x[0] + x2[0], x[1] + x2[1]];
    let diff = [x[0] - x2[0], x[1] - x2[1]];
    let norm2 = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
    let half2 = |v: [f64; 2]| 0.25 * norm2(v);
    0.5 * (pump_envelope(half2(sum), p) * delta_2d(norm2(diff).sqrt(), s)
        + pump_envelope(half2(diff), p) * delta_2d(norm2(sum).sqrt(), s))
}

/// Pump and signal wavenumbers with optional mismatch and walk-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMatchParams {
    /// Pump wavenumber (1/m).
    pub k_p: f64,
    /// Signal wavenumber (1/m).
    pub k_s: f64,
    /// Walk-off angle of the signal (rad).
    pub rho_s: [f64; 2],
    /// Walk-off angle of the pump (rad).
    pub rho_p: [f64; 2],
}

impl PhaseMatchParams {
    /// Exact collinear phase matching `k_p = 2 k_s`, no walk-off.
    pub fn collinear(s: &DerivedScales) -> Self {
        PhaseMatchParams {
            k_p: 2.0 * s.k_s,
            k_s: s.k_s,
            rho_s: [0.0; 2],
            rho_p: [0.0; 2],
        }
    }

    pub fn mismatch(&self) -> f64 {
        self.k_p - 2.0 * self.k_s
    }
}

/// Paraxial phase mismatch times half the crystal length, `δ(q, q') l_c / 2`.
pub fn phase_mismatch(q: [f64; 2], q2: [f64; 2], pm: &PhaseMatchParams, l_c: f64) -> f64 {
    let sum = [q[0] + q2[0], q[1] + q2[1]];
    let walk = (pm.rho_s[0] - pm.rho_p[0]) * sum[0] + (pm.rho_s[1] - pm.rho_p[1]) * sum[1];
    let sum2 = sum[0] * sum[0] + sum[1] * sum[1];
    let q_sq = q[0] * q[0] + q[1] * q[1];
    let q2_sq = q2[0] * q2[0] + q2[1] * q2[1];
    let delta = pm.mismatch() + walk - sum2 / (2.0 * pm.k_p) + (q_sq + q2_sq) / (2.0 * pm.k_s);
    delta * l_c / 2.0
}

/// Collinear one-dimensional phase-matching argument, `(l_c / 2 k_s) ((q - q')/2)^2`.
fn collinear_phase(q: f64, q2: f64, s: &DerivedScales) -> f64 {
    let d = 0.5 * (q - q2);
    s.l_c / (2.0 * s.k_s) * d * d
}

/// One-dimensional Fourier transform of the Gaussian pump,
/// `int dx/sqrt(2 pi) A_p(x) e^{-iqx} = A_p w_p/sqrt(2) exp(-q^2 w_p^2 / 4)`.
fn pump_spectrum_1d(q: f64, a_p: f64, waist: f64) -> f64 {
    a_p * waist / 2f64.sqrt() * (-0.25 * q * q * waist * waist).exp()
}

/// One-dimensional far-field kernel.
///
/// For a Gaussian pump this is the kernel density (m) that multiplies
/// `dq'` under the integral. For a plane pump the pump spectrum is a delta
/// function and the kernel is supported on `q' = ±q` only; the returned
/// value is then the even-mode coupling `A_p sinc(l_c q^2 / 2 k_s)` when
/// `|q'| = |q|` and zero elsewhere.
pub fn ktilde_far(q: f64, q2: f64, p: &OpoParams, s: &DerivedScales) -> f64 {
    match p.pump() {
        PumpProfile::Gaussian { waist } => {
            let first = pump_spectrum_1d(q + q2, p.a_p, waist) * sinc(collinear_phase(q, q2, s));
            let second = pump_spectrum_1d(q - q2, p.a_p, waist) * sinc(collinear_phase(q, -q2, s));
            (first + second) / (2.0 * (2.0 * PI).sqrt())
        }
        PumpProfile::Plane => {
            if q.abs() == q2.abs() {
                p.a_p * sinc(collinear_phase(q, -q, s))
            } else {
                0.0
            }
        }
    }
}

/// Quadrature-weighted kernel on a one-dimensional grid:
/// `entries[(i, j)] = K(x_i, x_j) w_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: CMatrix,
    grid: Grid1D,
    regime: CoherenceRegime,
}

impl KernelMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn regime(&self) -> CoherenceRegime {
        self.regime
    }

    /// `D^{1/2} K_w D^{-1/2}` with `D = diag(weights)`: the kernel acting on
    /// mode amplitudes `sqrt(w_i) B(x_i)`, which have unit commutators.
    pub fn normalized(&self) -> CMatrix {
        let w = self.grid.weights();
        CMatrix::from_fn(self.entries.nrows(), self.entries.ncols(), |i, j| {
            self.entries[(i, j)] * (w[i] / w[j]).sqrt()
        })
    }

    /// Unweighted kernel value `K(x_i, x_j)`.
    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)] / self.grid.weights()[j]
    }

    /// Largest deviation from the parity symmetries
    /// `K(x, x') = K(-x, x') = K(x, -x')`, relative to the largest entry.
    pub fn parity_defect(&self) -> f64 {
        let n = self.grid.len();
        let scale = self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let e = self.entries[(i, j)];
                worst = worst
                    .max((e - self.entries[(self.grid.flip(i), j)]).norm())
                    .max((e - self.entries[(i, self.grid.flip(j))]).norm());
            }
        }
        worst / scale
    }

    /// Largest deviation from `K(x, x') = K(x', x)`, relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.grid.len();
        let scale = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.value(i, j).norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.value(i, j) - self.value(j, i)).norm());
            }
        }
        worst / scale
    }
}

/// Unitary centred DFT on `n` points, `W[k][j] = exp(-2 pi i (k-c)(j-c)/n)/sqrt(n)`
/// with `c = (n-1)/2`. It is symmetric and `W^2` is the index flip.
pub fn centred_dft(n: usize) -> CMatrix {
    let modulus = 4 * n as i64;
    let norm = 1.0 / (n as f64).sqrt();
    let offset = |k: usize| 2 * k as i64 - n as i64 + 1;
    CMatrix::from_fn(n, n, |k, j| {
        // (k - c)(j - c) = offset(k) offset(j) / 4, reduced exactly modulo n.
        let m = (offset(k) * offset(j)).rem_euclid(modulus);
        let phase = -2.0 * PI * m as f64 / modulus as f64;
        Complex64::from_polar(norm, phase)
    })
}

fn far_matrix(grid: &Grid1D, p: &OpoParams, s: &DerivedScales) -> CMatrix {
    let q = grid.points();
    let dq = grid.step();
    let n = grid.len();
    match p.pump() {
        PumpProfile::Gaussian { .. } => {
            CMatrix::from_fn(n, n, |k, l| Complex64::new(ktilde_far(q[k], q[l], p, s) * dq, 0.0))
        }
        PumpProfile::Plane => {
            // The pump spectrum collapses to a Kronecker delta on q + q' = 0;
            // its 1/dq cancels the quadrature weight.
            let mut m = CMatrix::zeros(n, n);
            for k in 0..n {
                let coupling = 0.5 * p.a_p * sinc(collinear_phase(q[k], -q[k], s));
                m[(k, grid.flip(k))] += Complex64::new(coupling, 0.0);
                m[(k, k)] += Complex64::new(coupling, 0.0);
            }
            m
        }
    }
}

/// Discretises the coupling kernel on `grid`.
///
/// Far grids are filled directly from [`ktilde_far`]. Near grids are built
/// on the conjugate far grid and transformed back in both indices, so the
/// near and far matrices are exact discrete transform pairs.
pub fn build_kernel_matrix(grid: &Grid1D, p: &OpoParams, s: &DerivedScales) -> Result<KernelMatrix> {
    let regime = check_kernel_grid(grid, p, s)?;
    let entries = match grid.domain() {
        Domain::Far => far_matrix(grid, p, s),
        Domain::Near => {
            let far = far_matrix(&grid.conjugate(), p, s);
            let w_adj = centred_dft(grid.len()).adjoint();
            &w_adj * far * &w_adj
        }
    };
    Ok(KernelMatrix {
        entries,
        grid: grid.clone(),
        regime,
    })
}

/// Forward discrete transform of a near-field weighted kernel onto the
/// conjugate far grid: `W K W`.
pub fn near_to_far(near: &CMatrix) -> CMatrix {
    let w = centred_dft(near.nrows());
    &w * near * &w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scales() -> (OpoParams, DerivedScales) {
        let p = OpoParams::default();
        let s = p.derive_scales();
        (p, s)
    }

    #[test]
    fn delta_at_origin() {
        let (_, s) = scales();
        let expected = 1.0 / (2.0 * s.l_coh * s.l_coh);
        assert!((delta_2d(0.0, &s) - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn delta_first_zero() {
        let (_, s) = scales();
        let mut lo = 1.0;
        let mut hi = 1.6;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if delta_2d(mid * s.l_coh, &s) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 1.37).abs() <= 0.03, "first zero at {lo}");
    }

    #[test]
    fn delta_negligible_far_out() {
        let (_, s) = scales();
        // pi/2 - Si(u) is bounded by 1/u, so |Δ| l_coh^2 <= 1/(pi u) with u = 100.
        let scaled = delta_2d(10.0 * s.l_coh, &s).abs() * s.l_coh * s.l_coh;
        assert!(scaled < 1.0 / (100.0 * PI), "{scaled}");
        assert!(scaled < 0.01 * delta_2d(0.0, &s) * s.l_coh * s.l_coh);
    }

    #[test]
    fn near_kernel_2d_origin_and_symmetry() {
        let (p, s) = scales();
        let k0 = kint_near_2d([0.0; 2], [0.0; 2], &p, &s);
        assert!((k0 - p.a_p / (2.0 * s.l_coh * s.l_coh)).abs() / k0 < 1e-12);
        let pg = p.clone().with_gaussian_pump(5.0 * s.l_coh);
        let a = [0.7 * s.l_coh, -0.2 * s.l_coh];
        let b = [-1.1 * s.l_coh, 0.4 * s.l_coh];
        assert_eq!(kint_near_2d(a, b, &pg, &s), kint_near_2d(b, a, &pg, &s));
    }

    #[test]
    fn near_kernel_2d_vanishes_at_delta_zero() {
        let (p, s) = scales();
        // |x - x'| at the first zero of Δ, |x + x'| far outside the coherence area.
        let x = [20.0 * s.l_coh + 0.69 * s.l_coh, 0.0];
        let x2 = [20.0 * s.l_coh - 0.69 * s.l_coh, 0.0];
        let k = kint_near_2d(x, x2, &p, &s);
        assert!(k.abs() * s.l_coh * s.l_coh < 2e-3, "{}", k * s.l_coh * s.l_coh);
    }

    #[test]
    fn phase_mismatch_collinear() {
        let (_, s) = scales();
        let pm = PhaseMatchParams::collinear(&s);
        assert_eq!(phase_mismatch([3e4, -1e4], [3e4, -1e4], &pm, s.l_c), 0.0);
        let half = (2.0 * PI * s.k_s / s.l_c).sqrt();
        let v = phase_mismatch([half, 0.0], [-half, 0.0], &pm, s.l_c);
        assert!((v - PI).abs() < 1e-9);
        let q = [1.2e4, 3e3];
        let q2 = [-4e3, 7e3];
        let d = [q[0] - q2[0], q[1] - q2[1]];
        let expected = s.l_c / (2.0 * s.k_s) * (d[0] * d[0] + d[1] * d[1]) / 4.0;
        let got = phase_mismatch(q, q2, &pm, s.l_c);
        assert!((got - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn phase_mismatch_walk_off_term() {
        let (_, s) = scales();
        let mut pm = PhaseMatchParams::collinear(&s);
        pm.rho_s = [1e-3, 0.0];
        let q = [6e3, 0.0];
        let q2 = [4e3, 0.0];
        // Term-by-term evaluation of k_p - 2k_s + (rho_s - rho_p).(q+q') - |q+q'|^2/2k_p + (q^2+q'^2)/2k_s.
        let walk = 1e-3 * 1e4;
        let diffraction = -(1e4f64).powi(2) / (2.0 * pm.k_p) + (36e6 + 16e6) / (2.0 * s.k_s);
        let expected = (walk + diffraction) * s.l_c / 2.0;
        let got = phase_mismatch(q, q2, &pm, s.l_c);
        assert!((got - expected).abs() < 1e-12 * expected.abs().max(1.0));
        let shift = got - phase_mismatch(q, q2, &PhaseMatchParams::collinear(&s), s.l_c);
        assert!((shift - 0.05).abs() < 1e-9, "walk-off shift {shift}");
    }

    #[test]
    fn ktilde_plane_pump_diagonal() {
        let (p, s) = scales();
        assert_eq!(ktilde_far(0.0, 0.0, &p, &s), p.a_p);
        let q = 0.8 / s.l_coh;
        let expected = p.a_p * sinc(s.l_c * q * q / (2.0 * s.k_s));
        assert!((ktilde_far(q, q, &p, &s) - expected).abs() < 1e-15);
        assert!((ktilde_far(q, -q, &p, &s) - expected).abs() < 1e-15);
        assert_eq!(ktilde_far(q, 0.5 * q, &p, &s), 0.0);
    }

    #[test]
    fn dft_is_unitary_and_squares_to_flip() {
        for n in [5, 16] {
            let w = centred_dft(n);
            let id = &w * w.adjoint();
            let sq = &w * &w;
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((id[(i, j)] - Complex64::new(e, 0.0)).norm() < 1e-13);
                    let f = if i + j == n - 1 { 1.0 } else { 0.0 };
                    assert!((sq[(i, j)] - Complex64::new(f, 0.0)).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn plane_pump_far_matrix_is_diagonal_up_to_flip() {
        let (p, s) = scales();
        let g = Grid1D::new(64, 8.0 / s.l_coh, Domain::Far).unwrap();
        let k = build_kernel_matrix(&g, &p, &s).unwrap();
        let e = k.entries();
        for i in 0..64 {
            for j in 0..64 {
                if j != i && j != g.flip(i) {
                    assert_eq!(e[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
        assert!(k.parity_defect() < 1e-12);
    }

    #[test]
    fn zero_pump_gives_zero_matrix() {
        let (p, s) = scales();
        let p = p.with_pump_amplitude(0.0).with_gaussian_pump(4.0 * s.l_coh);
        let g = Grid1D::new(96, 12.0 * s.l_coh, Domain::Near).unwrap();
        let k = build_kernel_matrix(&g, &p, &s).unwrap();
        assert!(k.entries().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn gaussian_near_matrix_parity_symmetry_and_transform_pair() {
        let (p, s) = scales();
        let p = p.with_gaussian_pump(3.0 * s.l_coh);
        let g = Grid1D::new(256, 10.0 * s.l_coh, Domain::Near).unwrap();
        let near = build_kernel_matrix(&g, &p, &s).unwrap();
        assert!(near.parity_defect() < 1e-10);
        assert!(near.symmetry_defect() < 1e-10);
        let far = far_matrix(&g.conjugate(), &p, &s);
        let back = near_to_far(near.entries());
        let scale = far.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let err = (back - &far).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err / scale < 1e-8, "transform pair defect {}", err / scale);
    }

    /// `int sinc(a v^2) exp(i v d) dv`, from `sinc(y) = int_0^1 cos(y s) ds`
    /// and the Fresnel integral in `v`, mapped to `w = d^2 / (4 a s)`.
    fn sinc_chirp_transform(a: f64, d: f64) -> f64 {
        if d == 0.0 {
            // int_0^1 sqrt(pi/(a s)) cos(pi/4) ds
            return 2.0 * (PI / a).sqrt() * FRAC_PI_2.sin() * (0.5f64).sqrt();
        }
        // sqrt(pi/a) |d| / (2 sqrt a) int_{w0}^inf cos(pi/4 - w) w^{-3/2} dw
        let w0 = d * d / (4.0 * a);
        let phase = PI / 4.0;
        let g = |w: f64| (phase - w).cos() * w.powf(-1.5);
        let top = w0 + 4000.0 * PI;
        let breaks: Vec<f64> = (1..4000).map(|m| w0 + m as f64 * PI).collect();
        let body = crate::quad::integrate_with_breaks(g, w0, top, &breaks, 1e-13);
        // Leading integration-by-parts term of the remaining tail.
        let tail = (phase - top).sin() * top.powf(-1.5);
        (PI / a).sqrt() * d.abs() / (2.0 * a.sqrt()) * (body + tail)
    }

    #[test]
    fn near_matrix_matches_continuous_transform() {
        let (p, s) = scales();
        let w = 2.0 * s.l_coh;
        let p = p.with_gaussian_pump(w);
        // Twice the extent needed by the sizing rule keeps the periodic images
        // of the slowly decaying coherence factor away from the probed pairs.
        let g = Grid1D::new(512, 16.0 * s.l_coh, Domain::Near).unwrap();
        let k = build_kernel_matrix(&g, &p, &s).unwrap();
        let a = s.l_coh * s.l_coh / 16.0;
        // Continuous 1-D near kernel: (1/2) [A(X) D1(x - x') + A(x - x' / 2) D1(x + x')]
        // with D1(d) = G(d/2) / (4 pi).
        let d1 = |d: f64| sinc_chirp_transform(a, 0.5 * d) / (4.0 * PI);
        let x = g.points();
        let dx = g.step();
        let scale = k.entries().iter().map(|z| z.norm()).fold(0.0, f64::max) / dx;
        let mut worst: f64 = 0.0;
        for &(i, j) in &[
            (256, 256),
            (256, 258),
            (240, 280),
            (200, 256),
            (180, 340),
            (170, 250),
            (256, 300),
        ] {
            let (xi, xj) = (x[i], x[j]);
            let oracle = 0.5
                * (pump_envelope(0.25 * (xi + xj) * (xi + xj), &p) * d1(xi - xj)
                    + pump_envelope(0.25 * (xi - xj) * (xi - xj), &p) * d1(xi + xj));
            let got = k.entries()[(i, j)] / dx;
            worst = worst.max((got - oracle).norm() / scale);
        }
        assert!(worst < 1e-6, "continuous transform defect {worst:e}");
    }

    #[test]
    fn thin_crystal_near_kernel_is_local() {
        let p = OpoParams {
            l_c: 1e-4 * 0.01,
            ..OpoParams::default()
        };
        let s = p.derive_scales();
        let p = p.with_gaussian_pump(s.w_c);
        let g = Grid1D::new(128, 4.0 * s.w_c, Domain::Near).unwrap();
        let k = build_kernel_matrix(&g, &p, &s).unwrap();
        assert_eq!(k.regime(), CoherenceRegime::Local);
        let x = g.points();
        // Smooth even test fields come back multiplied pointwise by the pump:
        // one broad, one split into two narrow lobes at +-2 w.
        let broad: Vec<f64> = x.iter().map(|xi| (-xi * xi / (s.w_c * s.w_c)).exp()).collect();
        let lobes: Vec<f64> = x
            .iter()
            .map(|xi| {
                let d = (xi.abs() - 2.0 * s.w_c) / (0.25 * s.w_c);
                (-d * d).exp()
            })
            .collect();
        for f in [&broad, &lobes] {
            for i in 0..g.len() {
                let applied: Complex64 = (0..g.len()).map(|j| k.entries()[(i, j)] * f[j]).sum();
                let expected = pump_envelope(x[i] * x[i], &p) * f[i];
                assert!((applied - expected).norm() < 1e-3, "row {i}: {applied} vs {expected}");
            }
        }
    }
}
