use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};

use super::describe_counts;
use crate::error::{Error, Result};
use num_traits::Float;

/// Beam radius measured in one plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausticPoint {
    pub z_mm: f64,
    pub w_um: f64,
    pub sigma_w_um: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M2Fit {
    pub w0_um: f64,
    pub z0_mm: f64,
    pub m2: f64,
    pub lambda_nm: f64,
    pub z_r_mm: f64,
    /// Covariance of (w0 [um], z0 [mm], M²).
    pub covariance: [[f64; 3]; 3],
    pub planes: usize,
    /// Weighted sum of squared w² residuals.
    pub chi2: f64,
}

impl M2Fit {
    pub fn sigma_w0_um(&self) -> f64 {
        self.covariance[0][0].max(0.0).sqrt()
    }

    pub fn sigma_z0_mm(&self) -> f64 {
        self.covariance[1][1].max(0.0).sqrt()
    }

    pub fn sigma_m2(&self) -> f64 {
        self.covariance[2][2].max(0.0).sqrt()
    }

    /// Beam radius predicted at `z_mm`.
    pub fn width_at(&self, z_mm: f64) -> f64 {
        let d = (z_mm - self.z0_mm) / self.z_r_mm;
        self.w0_um * (1.0 + d * d).sqrt()
    }
}

/// Weighted least squares of `w² = a + b z + c z²`, from which waist,
/// waist position and M² follow. `sigma_w` enters as `2 w sigma_w` on w²;
/// without it all planes weigh equally and the covariance is scaled by the
/// residual variance.
pub fn fit_caustic(points: &[CausticPoint], lambda_nm: f64) -> Result<M2Fit> {
    if points.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "caustic fit needs at least 5 planes, got {}",
            points.len()
        )));
    }
    if !(lambda_nm > 0.0) {
        return Err(Error::InvalidParameter(format!("wavelength must be positive, got {lambda_nm}")));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !(p.w_um > 0.0) || !p.z_mm.is_finite() || p.sigma_w_um.is_some_and(|s| !(s > 0.0)))
    {
        return Err(Error::InvalidParameter(format!("invalid caustic point {p:?}")));
    }
    let weighted = points.iter().all(|p| p.sigma_w_um.is_some());
    let zbar = points.iter().map(|p| p.z_mm).sum::<f64>() / points.len() as f64;

    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    let rows: Vec<(Vector3<f64>, f64, f64)> = points
        .iter()
        .map(|p| {
            let z = p.z_mm - zbar;
            let wt = match (weighted, p.sigma_w_um) {
                (true, Some(s)) => 1.0 / (2.0 * p.w_um * s).powi(2),
                _ => 1.0,
            };
            (Vector3::new(1.0, z, z * z), p.w_um * p.w_um, wt)
        })
        .collect();
    for (r, y, wt) in &rows {
        ata += r * r.transpose() * *wt;
        aty += r * (*y * *wt);
    }
    let inv = ata
        .try_inverse()
        .ok_or_else(|| Error::DegenerateInput("caustic planes do not determine a parabola".into()))?;
    let coef = inv * aty;
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    if !(c > 0.0) {
        return Err(Error::FitRejected(format!("non-physical divergence: z² coefficient {c} <= 0")));
    }
    let w0_sq = a - b * b / (4.0 * c);
    if !(w0_sq > 0.0) {
        return Err(Error::FitRejected(format!("no real waist: b² - 4ac = {} >= 0", b * b - 4.0 * a * c)));
    }
    let chi2: f64 = rows.iter().map(|(r, y, wt)| wt * (y - r.dot(&coef)).powi(2)).sum();
    let n = points.len() as f64;
    let cov_abc = if weighted { inv } else { inv * (chi2 / (n - 3.0).max(1.0)) };

    let w0 = w0_sq.sqrt();
    let z0 = zbar - b / (2.0 * c);
    let k = core::f64::consts::PI / lambda_nm;
    let g = (a * c - b * b / 4.0).sqrt();
    let m2 = k * g;
    let z_r = w0 / c.sqrt();
    let jac = nalgebra::Matrix3::new(
        1.0 / (2.0 * w0),
        -b / (4.0 * c * w0),
        b * b / (8.0 * c * c * w0),
        0.0,
        -1.0 / (2.0 * c),
        b / (2.0 * c * c),
        k * c / (2.0 * g),
        -k * b / (4.0 * g),
        k * a / (2.0 * g),
    );
    let cov = jac * cov_abc * jac.transpose();
    let span = points.iter().map(|p| p.z_mm).fold(f64::NEG_INFINITY, f64::max)
        - points.iter().map(|p| p.z_mm).fold(f64::INFINITY, f64::min);
    if span <= z_r {
        return Err(Error::FitRejected(format!(
            "planes span {span} mm, less than the fitted Rayleigh range {z_r} mm"
        )));
    }
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = cov[(i, j)];
        }
    }
    Ok(M2Fit {
        w0_um: w0,
        z0_mm: z0,
        m2,
        lambda_nm,
        z_r_mm: z_r,
        covariance,
        planes: points.len(),
        chi2,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoCheck {
    pub pass: bool,
    pub inner: usize,
    pub outer: usize,
    pub diagnostic: String,
}

/// At least 5 planes within one Rayleigh range of the waist and at least 5
/// beyond two Rayleigh ranges.
pub fn iso_sampling_check(z_mm: &[f64], fit: &M2Fit) -> IsoCheck {
    let inner = z_mm.iter().filter(|z| (**z - fit.z0_mm).abs() <= fit.z_r_mm).count();
    let outer = z_mm.iter().filter(|z| (**z - fit.z0_mm).abs() >= 2.0 * fit.z_r_mm).count();
    let pass = inner >= 5 && outer >= 5;
    let mut diagnostic = describe_counts(inner, outer);
    if !pass {
        diagnostic.push_str(" (need >= 5 each)");
    }
    IsoCheck {
        pass,
        inner,
        outer,
        diagnostic,
    }
}
