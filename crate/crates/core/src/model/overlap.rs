use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::trapezoid_weights;
use num_traits::Float;

/// Sampled transverse intensity on a rectangular grid. `values` is row-major
/// with one row per `ys_um` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityGrid {
    pub xs_um: Vec<f64>,
    pub ys_um: Vec<f64>,
    pub values: Vec<f64>,
}

impl IntensityGrid {
    pub fn new(xs_um: Vec<f64>, ys_um: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != xs_um.len() * ys_um.len() {
            return Err(Error::InvalidParameter(alloc::format!(
                "grid has {} values for {}x{} points",
                values.len(),
                xs_um.len(),
                ys_um.len()
            )));
        }
        let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !monotone(&xs_um) || !monotone(&ys_um) {
            return Err(Error::InvalidParameter("grid axes must be strictly increasing".into()));
        }
        Ok(Self { xs_um, ys_um, values })
    }

    /// Samples `f(x, y)` on the tensor product of the two axes.
    pub fn from_fn(xs_um: Vec<f64>, ys_um: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(xs_um.len() * ys_um.len());
        for &y in &ys_um {
            for &x in &xs_um {
                values.push(f(x, y));
            }
        }
        Self { xs_um, ys_um, values }
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.xs_um.len() + ix]
    }

    fn same_geometry(&self, other: &IntensityGrid) -> bool {
        let close = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(p, q)| (p - q).abs() <= 1e-9 * (1.0 + p.abs()))
        };
        close(&self.xs_um, &other.xs_um) && close(&self.ys_um, &other.ys_um)
    }
}

/// Amplitude overlap of two measured intensity distributions assuming flat
/// phase: `integral sqrt(Ia Ib)` with both normalized to unit power.
pub fn intensity_overlap(a: &IntensityGrid, b: &IntensityGrid) -> Result<f64> {
    if !a.same_geometry(b) {
        return Err(Error::InvalidParameter("intensity grids differ in geometry".into()));
    }
    if a.values.iter().chain(&b.values).any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidParameter("intensity grids must be nonnegative".into()));
    }
    let wx = trapezoid_weights(&a.xs_um);
    let wy = trapezoid_weights(&a.ys_um);
    let mut pa = 0.0;
    let mut pb = 0.0;
    let mut cross = 0.0;
    for (iy, wyv) in wy.iter().enumerate() {
        for (ix, wxv) in wx.iter().enumerate() {
            let w = wxv * wyv;
            let va = a.value(ix, iy);
            let vb = b.value(ix, iy);
            pa += w * va;
            pb += w * vb;
            cross += w * (va * vb).sqrt();
        }
    }
    if pa <= 0.0 || pb <= 0.0 {
        return Err(Error::DegenerateInput("intensity grid has zero total power".into()));
    }
    Ok((cross / (pa * pb).sqrt()).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;

    fn gaussian(w: f64, dx: f64) -> impl Fn(f64, f64) -> f64 {
        move |x, y| (-2.0 * ((x - dx).powi(2) + y * y) / (w * w)).exp()
    }

    #[test]
    fn self_and_disjoint_overlap() {
        let xs = linspace(-10.0, 10.0, 81);
        let a = IntensityGrid::from_fn(xs.clone(), xs.clone(), gaussian(2.0, 0.0));
        assert!((intensity_overlap(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let left = IntensityGrid::from_fn(xs.clone(), xs.clone(), |x, _| if x < -1.0 { 1.0 } else { 0.0 });
        let right = IntensityGrid::from_fn(xs.clone(), xs.clone(), |x, _| if x > 1.0 { 1.0 } else { 0.0 });
        assert_eq!(intensity_overlap(&left, &right).unwrap(), 0.0);
    }

    #[test]
    fn half_waist_displacement() {
        // Oracle: dense midpoint quadrature of the analytic Gaussians, which
        // also agrees with exp(-d^2 / 2w^2) = exp(-1/8).
        let w = 2.0;
        let n = 2000;
        let h = 30.0 / n as f64;
        let (mut s, mut p) = (0.0, 0.0);
        for iy in 0..n {
            for ix in 0..n {
                let x = -15.0 + (ix as f64 + 0.5) * h;
                let y = -15.0 + (iy as f64 + 0.5) * h;
                let a = gaussian(w, 0.0)(x, y);
                let b = gaussian(w, w / 2.0)(x, y);
                s += (a * b).sqrt();
                p += a;
            }
        }
        let oracle = s / p;
        assert!((oracle - 0.882_496_902_584_595).abs() < 1e-9);

        let xs = linspace(-12.0, 12.0, 241);
        let a = IntensityGrid::from_fn(xs.clone(), xs.clone(), gaussian(w, 0.0));
        let b = IntensityGrid::from_fn(xs.clone(), xs.clone(), gaussian(w, w / 2.0));
        let v = intensity_overlap(&a, &b).unwrap();
        assert!((v - oracle).abs() < 1e-9, "{v}");
        assert_eq!(v, intensity_overlap(&b, &a).unwrap());
    }

    #[test]
    fn degenerate_inputs() {
        let xs = linspace(-1.0, 1.0, 5);
        let zero = IntensityGrid::from_fn(xs.clone(), xs.clone(), |_, _| 0.0);
        let one = IntensityGrid::from_fn(xs.clone(), xs.clone(), |_, _| 1.0);
        assert!(matches!(intensity_overlap(&zero, &one), Err(Error::DegenerateInput(_))));
        let other = IntensityGrid::from_fn(linspace(-2.0, 2.0, 5), xs, |_, _| 1.0);
        assert!(intensity_overlap(&one, &other).is_err());
    }
}
