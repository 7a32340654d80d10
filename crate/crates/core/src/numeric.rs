//! Small numerical helpers shared across modules.

use alloc::vec::Vec;
use num_traits::Float;

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Angular frequency [rad/s] of a vacuum wavelength given in nm.
pub fn angular_frequency(lambda_nm: f64) -> f64 {
    2.0 * core::f64::consts::PI * SPEED_OF_LIGHT / (lambda_nm * 1e-9)
}

/// Vacuum wavelength [nm] of an angular frequency [rad/s].
pub fn wavelength_nm(omega: f64) -> f64 {
    2.0 * core::f64::consts::PI * SPEED_OF_LIGHT / omega * 1e9
}

/// Unnormalized sinc, `sin(x)/x`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Trapezoid weights for a monotone (possibly non-uniform) abscissa.
pub fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut w = alloc::vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = (xs[i + 1] - xs[i]).abs() * 0.5;
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Evenly spaced points including both ends.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n).map(|i| start + step * i as f64).collect()
        }
    }
}

/// Physicists' Hermite polynomial H_n(t) by the three-term recurrence.
pub fn hermite(n: usize, t: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * t;
    for k in 1..n {
        let h2 = 2.0 * t * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Normalized Hermite function `H_n(t) exp(-t^2/2) / sqrt(2^n n! sqrt(pi))`,
/// evaluated by the stable normalized recurrence.
pub fn hermite_function(n: usize, t: f64) -> f64 {
    let norm0 = core::f64::consts::PI.powf(-0.25);
    let mut p0 = norm0 * (-0.5 * t * t).exp();
    if n == 0 {
        return p0;
    }
    let mut p1 = core::f64::consts::SQRT_2 * t * p0;
    for k in 1..n {
        let kf = k as f64;
        let p2 = (2.0 / (kf + 1.0)).sqrt() * t * p1 - (kf / (kf + 1.0)).sqrt() * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Bisection on a bracketing interval; stops when the interval is below `x_tol`
/// and `|f| < f_tol`, or after `max_iter` halvings.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    f_tol: f64,
    max_iter: usize,
) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || ((hi - lo).abs() < x_tol && fm.abs() < f_tol) {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(mid)
}


/// `x` reduced to `[0, period)`.
pub fn wrap(x: f64, period: f64) -> f64 {
    let r = x - period * (x / period).floor();
    if r >= period {
        0.0
    } else {
        r
    }
}
