use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::numeric::erfc;
use num_traits::Float;

/// Error-function fit of one knife-edge plane,
/// `background + amplitude * erfc(s sqrt2 (x - x0) / w) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFit {
    pub w_um: f64,
    pub x0_um: f64,
    pub amplitude: f64,
    pub background: f64,
    pub r_squared: f64,
    pub sigma_w_um: f64,
    pub sigma_x0_um: f64,
    pub sigma_amplitude: f64,
    pub sigma_background: f64,
    /// +1 when the signal falls with increasing x.
    pub sign: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeWeighting {
    Uniform,
    /// Inverse-variance weights for shot-noise-limited count rates.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFitOptions {
    pub max_iterations: usize,
    /// Convergence on the largest relative parameter step.
    pub tolerance: f64,
    pub weighting: EdgeWeighting,
}

impl Default for EdgeFitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-8,
            weighting: EdgeWeighting::Poisson,
        }
    }
}

fn model(p: &Vector4<f64>, s: f64, x: f64) -> (f64, Vector4<f64>) {
    let (a, b, x0, w) = (p[0], p[1], p[2], p[3]);
    let u = s * core::f64::consts::SQRT_2 * (x - x0) / w;
    let e = 0.5 * erfc(u);
    let g = (-u * u).exp() / (core::f64::consts::PI.sqrt() * w);
    let jac = Vector4::new(e, 1.0, a * s * core::f64::consts::SQRT_2 * g, a * u * g);
    (b + a * e, jac)
}

fn initial_guess(pts: &[(f64, f64)], s: f64) -> Vector4<f64> {
    let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let amp = hi - lo;
    // Positions where the normalized signal crosses a level, on the
    // x-sorted data.
    let crossing = |level: f64| -> Option<f64> {
        let f = |y: f64| {
            let t = (y - lo) / amp;
            if s > 0.0 { t } else { 1.0 - t }
        };
        pts.windows(2).find_map(|w| {
            let (fa, fb) = (f(w[0].1) - level, f(w[1].1) - level);
            if fa >= 0.0 && fb < 0.0 {
                Some(w[0].0 + (w[1].0 - w[0].0) * fa / (fa - fb))
            } else {
                None
            }
        })
    };
    let span = pts[pts.len() - 1].0 - pts[0].0;
    let x0 = crossing(0.5).unwrap_or(pts[0].0 + 0.5 * span);
    // 84 % and 16 % points sit 0.995 w apart for an erfc edge.
    let w = match (crossing(0.841), crossing(0.159)) {
        (Some(a), Some(b)) if b > a => (b - a) / 0.995,
        _ => 0.25 * span,
    };
    Vector4::new(amp, lo, x0, w.max(1e-6 * span.abs()))
}

/// Damped Gauss-Newton (Levenberg-Marquardt) fit of an erfc edge profile to
/// `(x, signal)` points.
pub fn fit_edge_scan(points: &[(f64, f64)], options: &EdgeFitOptions) -> Result<EdgeFit> {
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!("edge fit needs at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::InvalidParameter("edge scan contains non-finite values".into()));
    }
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo >= 0.5 * hi.abs()) || hi - lo <= 0.0 {
        return Err(Error::DegenerateInput(format!(
            "edge scan does not span both asymptotes (signal {lo} to {hi})"
        )));
    }
    let n = pts.len();
    let third = (n / 3).max(1);
    let head: f64 = pts[..third].iter().map(|p| p.1).sum::<f64>() / third as f64;
    let tail: f64 = pts[n - third..].iter().map(|p| p.1).sum::<f64>() / third as f64;
    let s = if head >= tail { 1.0 } else { -1.0 };

    let floor = 1e-3 * hi.abs().max(lo.abs());
    let weights: Vec<f64> = pts
        .iter()
        .map(|&(_, y)| match options.weighting {
            EdgeWeighting::Uniform => 1.0,
            EdgeWeighting::Poisson => 1.0 / y.abs().max(floor),
        })
        .collect();
    let mut p = initial_guess(&pts, s);
    let ssr = |p: &Vector4<f64>| {
        pts.iter()
            .zip(&weights)
            .map(|(&(x, y), wt)| wt * (y - model(p, s, x).0).powi(2))
            .sum::<f64>()
    };
    let mut cost = ssr(&p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (&(x, y), wt) in pts.iter().zip(&weights) {
            let (f, j) = model(&p, s, x);
            jtj += j * j.transpose() * *wt;
            jtr += j * ((y - f) * wt);
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = jtj;
            for k in 0..4 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            if !(trial[3] > 0.0) {
                lambda *= 10.0;
                continue;
            }
            let c = ssr(&trial);
            if c <= cost {
                let scale = Vector4::new(p[0].abs(), p[0].abs(), p[3], p[3]);
                let rel = (0..4).map(|k| step[k].abs() / scale[k].max(1e-300)).fold(0.0, f64::max);
                p = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if rel < options.tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        // No damped step lowers the cost: the fit sits at a minimum.
        if !accepted {
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }

    let mean = pts.iter().map(|q| q.1).sum::<f64>() / n as f64;
    let sst: f64 = pts.iter().map(|q| (q.1 - mean).powi(2)).sum();
    let sse: f64 = pts.iter().map(|&(x, y)| (y - model(&p, s, x).0).powi(2)).sum();
    let r_squared = (1.0 - sse / sst).clamp(0.0, 1.0);
    let mut jtj = Matrix4::<f64>::zeros();
    for (&(x, _), wt) in pts.iter().zip(&weights) {
        let (_, j) = model(&p, s, x);
        jtj += j * j.transpose() * *wt;
    }
    let dof = (n as f64 - 4.0).max(1.0);
    let cov = jtj.try_inverse().map(|m| m * (cost / dof));
    let sd = |k: usize| cov.map_or(f64::NAN, |c| c[(k, k)].max(0.0).sqrt());
    Ok(EdgeFit {
        w_um: p[3],
        x0_um: p[2],
        amplitude: p[0],
        background: p[1],
        r_squared,
        sigma_w_um: sd(3),
        sigma_x0_um: sd(2),
        sigma_amplitude: sd(0),
        sigma_background: sd(1),
        sign: s,
        iterations,
    })
}
