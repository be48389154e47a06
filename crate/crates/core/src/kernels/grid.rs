use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{DerivedScales, OpoParams, PumpProfile};

/// Which transverse representation a grid lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Position in the crystal image plane (m).
    Near,
    /// Transverse wavevector (1/m).
    Far,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Near => "near",
            Domain::Far => "far",
        }
    }
}

/// Uniform midpoint grid on `[-L, L]`.
///
/// Points sit at cell centres, so the grid is symmetric under sign flip
/// for every `n` and `x_i = -x_{n-1-i}` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    n: usize,
    half_extent: f64,
    domain: Domain,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid1D {
    pub fn new(n: usize, half_extent: f64, domain: Domain) -> Result<Self> {
        if n < 2 {
            return Err(Error::GridTooCoarse(format!("n = {n} points")));
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::NonPhysical {
                field: "grid_half_extent",
                value: half_extent,
            });
        }
        let step = 2.0 * half_extent / n as f64;
        let centre = 0.5 * (n as f64 - 1.0);
        let points = (0..n).map(|i| (i as f64 - centre) * step).collect();
        Ok(Grid1D {
            n,
            half_extent,
            domain,
            points,
            weights: vec![step; n],
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the sign-flipped coordinate.
    pub fn flip(&self, i: usize) -> usize {
        self.n - 1 - i
    }

    /// The grid linked to this one by the discrete Fourier transform:
    /// same `n`, step `2 pi / (n step)`, opposite domain.
    pub fn conjugate(&self) -> Grid1D {
        let domain = match self.domain {
            Domain::Near => Domain::Far,
            Domain::Far => Domain::Near,
        };
        let half_extent = PI / self.step();
        Grid1D::new(self.n, half_extent, domain).expect("conjugate of a valid grid is valid")
    }
}

/// Resolution factor: structures must span at least this many grid steps.
pub const STEPS_PER_SCALE: f64 = 4.0;
/// Extent factor: the grid must reach this many pump or LO waists.
pub const WAISTS_PER_EXTENT: f64 = 3.0;
/// A near grid whose step exceeds this many coherence lengths treats the
/// coupling as local (thin-crystal regime).
pub const LOCAL_STEP_RATIO: f64 = 8.0;
/// Largest phase-matching argument across a far grid for it to count as local.
pub const LOCAL_FAR_PHASE: f64 = 0.05;

/// How the coherence-scale structure of the kernel relates to a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherenceRegime {
    /// The kernel structure is sampled by several points.
    Resolved,
    /// The kernel is narrower than the step and acts pointwise.
    Local,
}

/// Checks that `grid` resolves the pump envelope and the phase-matching
/// structure of the kernel.
pub fn check_kernel_grid(grid: &Grid1D, p: &OpoParams, s: &DerivedScales) -> Result<CoherenceRegime> {
    let step = grid.step();
    let extent = grid.half_extent();
    let regime = match grid.domain() {
        Domain::Near => {
            if step <= s.l_coh / STEPS_PER_SCALE {
                CoherenceRegime::Resolved
            } else if step >= LOCAL_STEP_RATIO * s.l_coh {
                CoherenceRegime::Local
            } else {
                return Err(Error::GridTooCoarse(format!(
                    "near step {step:.3e} m neither resolves l_coh = {:.3e} m (needs <= l_coh/{STEPS_PER_SCALE}) \
                     nor is local (needs >= {LOCAL_STEP_RATIO} l_coh)",
                    s.l_coh
                )));
            }
        }
        Domain::Far => {
            let band = s.phase_matching_bandwidth();
            let edge_phase = s.l_c / (2.0 * s.k_s) * extent * extent;
            if extent >= WAISTS_PER_EXTENT * band && step <= band / (2.0 * STEPS_PER_SCALE) {
                CoherenceRegime::Resolved
            } else if edge_phase <= LOCAL_FAR_PHASE {
                CoherenceRegime::Local
            } else {
                return Err(Error::GridTooCoarse(format!(
                    "far grid (L = {extent:.3e} 1/m, step {step:.3e} 1/m) does not cover {WAISTS_PER_EXTENT}x the \
                     phase-matching bandwidth {band:.3e} 1/m at step <= bandwidth/{}",
                    2.0 * STEPS_PER_SCALE
                )));
            }
        }
    };
    if let PumpProfile::Gaussian { waist } = p.pump() {
        let (scale, reach) = match grid.domain() {
            Domain::Near => (waist, WAISTS_PER_EXTENT * waist),
            Domain::Far => (1.0 / waist, WAISTS_PER_EXTENT * 2.0 / waist),
        };
        if step > scale / STEPS_PER_SCALE {
            return Err(Error::GridTooCoarse(format!(
                "{} step {step:.3e} does not resolve the pump scale {scale:.3e}",
                grid.domain().name()
            )));
        }
        if extent < reach {
            return Err(Error::GridTooCoarse(format!(
                "{} half-extent {extent:.3e} is smaller than the pump reach {reach:.3e}",
                grid.domain().name()
            )));
        }
    }
    Ok(regime)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_symmetric_and_weights_sum() {
        for n in [2, 7, 64, 301] {
            let g = Grid1D::new(n, 3.5e-4, Domain::Near).unwrap();
            for i in 0..n {
                assert_eq!(g.points()[i], -g.points()[g.flip(i)]);
            }
            assert!(g.points().windows(2).all(|w| w[0] < w[1]));
            let total: f64 = g.weights().iter().sum();
            assert!((total - 7e-4).abs() / 7e-4 < 1e-12);
        }
    }

    #[test]
    fn conjugate_round_trip() {
        let g = Grid1D::new(128, 1e-3, Domain::Near).unwrap();
        let c = g.conjugate();
        assert_eq!(c.domain(), Domain::Far);
        assert!((g.step() * c.step() * 128.0 - 2.0 * PI).abs() < 1e-9);
        let back = c.conjugate();
        assert!((back.half_extent() - g.half_extent()).abs() / g.half_extent() < 1e-12);
    }

    #[test]
    fn intermediate_step_is_rejected() {
        let p = OpoParams::default();
        let s = p.derive_scales();
        let g = Grid1D::new(64, 32.0 * s.l_coh, Domain::Near).unwrap();
        assert!(matches!(check_kernel_grid(&g, &p, &s), Err(Error::GridTooCoarse(_))));
        let fine = Grid1D::new(512, 32.0 * s.l_coh, Domain::Near).unwrap();
        assert_eq!(check_kernel_grid(&fine, &p, &s), Ok(CoherenceRegime::Resolved));
        let coarse = Grid1D::new(16, 128.0 * s.l_coh, Domain::Near).unwrap();
        assert_eq!(check_kernel_grid(&coarse, &p, &s), Ok(CoherenceRegime::Local));
    }

    #[test]
    fn wide_pump_on_small_grid_is_rejected() {
        let s0 = OpoParams::default().derive_scales();
        let p = OpoParams::default().with_gaussian_pump(100.0 * s0.l_coh);
        let s = p.derive_scales();
        let g = Grid1D::new(16, 4.0 * s.l_coh, Domain::Near).unwrap();
        assert!(matches!(check_kernel_grid(&g, &p, &s), Err(Error::GridTooCoarse(_))));
    }
}
