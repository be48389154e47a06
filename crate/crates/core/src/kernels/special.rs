//! Sine integral and the unnormalised sinc.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

/// Below this the power series is used, above it the continued fraction.
const SERIES_LIMIT: f64 = 6.0;

/// `sin(x) / x`, with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// Sine integral `Si(x) = int_0^x sin(u)/u du`.
pub fn si(x: f64) -> f64 {
    let t = x.abs();
    let value = if t <= SERIES_LIMIT {
        si_series(t)
    } else {
        si_continued_fraction(t)
    };
    value.copysign(x)
}

fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    // term = (-1)^n x^(2n+1) / (2n+1)!
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        term *= -x2 / ((2.0 * n + 2.0) * (2.0 * n + 3.0));
        n += 1.0;
        let contribution = term / (2.0 * n + 1.0);
        sum += contribution;
        if contribution.abs() <= 1e-17 * sum.abs().max(1e-300) {
            return sum;
        }
    }
}

/// Lentz evaluation of the continued fraction for `E1(i x)`, from which
/// `Si(x) = pi/2 + Im E1(i x)`.
fn si_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..10_000 {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < EPS {
            break;
        }
    }
    h *= Complex64::new(x.cos(), -x.sin());
    FRAC_PI_2 + h.im
}
