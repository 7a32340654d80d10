use alloc::vec::Vec;

use super::{FieldLabel, ModeIndex, ModeTriplet};
use crate::numeric::{hermite_function, linspace, trapezoid_weights};
use num_traits::Float;

/// Hermite-Gauss parameters of one field. Waists are 1/e^2 intensity radii.
/// `center_y_um` shifts the mode along the depth direction, mimicking the
/// asymmetric index profile of a diffused waveguide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeProfile {
    pub waist_x_um: f64,
    pub waist_y_um: f64,
    pub center_y_um: f64,
}

impl ModeProfile {
    pub fn centered(waist_x_um: f64, waist_y_um: f64) -> Self {
        Self {
            waist_x_um,
            waist_y_um,
            center_y_um: 0.0,
        }
    }
}

/// Tensor-grid trapezoid quadrature over `extent_waists` times the largest
/// waist on each side of the mode centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub points: usize,
    pub extent_waists: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            points: 256,
            extent_waists: 4.0,
        }
    }
}

/// 1-D normalized Hermite-Gauss function with 1/e^2 intensity radius `w`.
pub(crate) fn hg_1d(n: u32, x: f64, w: f64) -> f64 {
    let t = core::f64::consts::SQRT_2 * x / w;
    (core::f64::consts::SQRT_2 / w).sqrt() * hermite_function(n as usize, t)
}

/// Per-field Hermite-Gauss product basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HGModeBasis {
    pub pump: ModeProfile,
    pub h: ModeProfile,
    pub v: ModeProfile,
}

impl HGModeBasis {
    pub fn new(pump: ModeProfile, h: ModeProfile, v: ModeProfile) -> crate::Result<Self> {
        for p in [pump, h, v] {
            if !(p.waist_x_um > 0.0 && p.waist_y_um > 0.0) || !p.center_y_um.is_finite() {
                return Err(crate::Error::InvalidParameter(alloc::format!(
                    "mode waists must be positive, got {p:?}"
                )));
            }
        }
        Ok(Self { pump, h, v })
    }

    pub fn profile(&self, field: FieldLabel) -> &ModeProfile {
        match field {
            FieldLabel::P => &self.pump,
            FieldLabel::H => &self.h,
            FieldLabel::V => &self.v,
        }
    }

    /// Real mode amplitude [1/um] at transverse position (x, y) [um].
    pub fn mode_function(&self, field: FieldLabel, mode: ModeIndex, x_um: f64, y_um: f64) -> f64 {
        let p = self.profile(field);
        hg_1d(mode.i, x_um, p.waist_x_um) * hg_1d(mode.j, y_um - p.center_y_um, p.waist_y_um)
    }

    /// Quadrature abscissae for the x and y axes.
    pub fn grid(&self, q: &Quadrature) -> (Vec<f64>, Vec<f64>) {
        let profiles = [self.pump, self.h, self.v];
        let wx = profiles.iter().map(|p| p.waist_x_um).fold(0.0, f64::max);
        let wy = profiles.iter().map(|p| p.waist_y_um).fold(0.0, f64::max);
        let cmin = profiles.iter().map(|p| p.center_y_um).fold(f64::INFINITY, f64::min);
        let cmax = profiles.iter().map(|p| p.center_y_um).fold(f64::NEG_INFINITY, f64::max);
        let xs = linspace(-q.extent_waists * wx, q.extent_waists * wx, q.points);
        let ys = linspace(cmin - q.extent_waists * wy, cmax + q.extent_waists * wy, q.points);
        (xs, ys)
    }

    /// Three-mode overlap `integral u_P u_H u_V dx dy`. The tensor grid is
    /// evaluated as a product of its two 1-D rules since the modes separate.
    pub fn overlap_integral(&self, triplet: &ModeTriplet, q: &Quadrature) -> f64 {
        let (xs, ys) = self.grid(q);
        let wx = trapezoid_weights(&xs);
        let wy = trapezoid_weights(&ys);
        let ix: f64 = xs
            .iter()
            .zip(&wx)
            .map(|(&x, &w)| {
                w * hg_1d(triplet.pump.i, x, self.pump.waist_x_um)
                    * hg_1d(triplet.h.i, x, self.h.waist_x_um)
                    * hg_1d(triplet.v.i, x, self.v.waist_x_um)
            })
            .sum();
        let iy: f64 = ys
            .iter()
            .zip(&wy)
            .map(|(&y, &w)| {
                w * hg_1d(triplet.pump.j, y - self.pump.center_y_um, self.pump.waist_y_um)
                    * hg_1d(triplet.h.j, y - self.h.center_y_um, self.h.waist_y_um)
                    * hg_1d(triplet.v.j, y - self.v.center_y_um, self.v.waist_y_um)
            })
            .sum();
        ix * iy
    }

    /// Relative conversion efficiency `|overlap|^2`, normalized to the
    /// all-fundamental triplet.
    pub fn triplet_overlap_efficiency(&self, triplet: &ModeTriplet, q: &Quadrature) -> f64 {
        let o = self.overlap_integral(triplet, q);
        let o0 = self.overlap_integral(&ModeTriplet::FUNDAMENTAL, q);
        (o * o) / (o0 * o0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric() -> HGModeBasis {
        HGModeBasis::new(
            ModeProfile::centered(1.2, 1.8),
            ModeProfile::centered(1.6, 2.6),
            ModeProfile::centered(1.7, 3.0),
        )
        .unwrap()
    }

    fn shifted() -> HGModeBasis {
        HGModeBasis::new(
            ModeProfile::centered(1.2, 1.5),
            ModeProfile { waist_x_um: 1.6, waist_y_um: 3.0, center_y_um: 1.0 },
            ModeProfile { waist_x_um: 1.7, waist_y_um: 5.0, center_y_um: 1.8 },
        )
        .unwrap()
    }

    /// Brute-force 2-D tensor trapezoid of a product of mode functions.
    fn quad2d(f: impl Fn(f64, f64) -> f64, half: f64, n: usize) -> f64 {
        let xs = linspace(-half, half, n);
        let w = trapezoid_weights(&xs);
        let mut s = 0.0;
        for (y, wy) in xs.iter().zip(&w) {
            for (x, wx) in xs.iter().zip(&w) {
                s += wx * wy * f(*x, *y);
            }
        }
        s
    }

    #[test]
    fn gram_matrix_is_identity() {
        let b = symmetric();
        let modes = [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)].map(|(i, j)| ModeIndex::new(i, j));
        for (a, ma) in modes.iter().enumerate() {
            for (c, mc) in modes.iter().enumerate() {
                let g = quad2d(
                    |x, y| b.mode_function(FieldLabel::V, *ma, x, y) * b.mode_function(FieldLabel::V, *mc, x, y),
                    4.0 * 3.0,
                    256,
                );
                let expect = if a == c { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-6, "G[{ma},{mc}] = {g}");
            }
        }
    }

    #[test]
    fn odd_mode_parity() {
        let b = symmetric();
        let m = ModeIndex::new(0, 1);
        for (x, y) in [(0.3, 0.7), (-1.1, 2.0), (0.0, 0.4)] {
            let u = b.mode_function(FieldLabel::H, m, x, y);
            assert!((u + b.mode_function(FieldLabel::H, m, x, -y)).abs() < 1e-15);
        }
    }

    #[test]
    fn efficiency_reference_and_parity() {
        let q = Quadrature::default();
        let b = symmetric();
        assert!((b.triplet_overlap_efficiency(&ModeTriplet::FUNDAMENTAL, &q) - 1.0).abs() < 1e-15);
        let odd = ModeTriplet::new(ModeIndex::FUNDAMENTAL, ModeIndex::FUNDAMENTAL, ModeIndex::new(0, 1));
        assert!(b.triplet_overlap_efficiency(&odd, &q) < 1e-20);
        // Displaced depth centers break the parity selection rule.
        assert!(shifted().triplet_overlap_efficiency(&odd, &q) > 0.1);
        // Width direction stays symmetric, so odd-in-x triplets remain dark.
        let odd_x = ModeTriplet::new(ModeIndex::FUNDAMENTAL, ModeIndex::FUNDAMENTAL, ModeIndex::new(1, 0));
        assert!(shifted().triplet_overlap_efficiency(&odd_x, &q) < 1e-20);
    }

    #[test]
    fn separable_overlap_matches_dense_2d_quadrature() {
        let b = shifted();
        let t = ModeTriplet::new(ModeIndex::new(0, 1), ModeIndex::new(1, 1), ModeIndex::new(1, 2));
        let dense = quad2d(
            |x, y| {
                b.mode_function(FieldLabel::P, t.pump, x, y)
                    * b.mode_function(FieldLabel::H, t.h, x, y)
                    * b.mode_function(FieldLabel::V, t.v, x, y)
            },
            25.0,
            801,
        );
        let fast = b.overlap_integral(&t, &Quadrature::default());
        assert!((dense - fast).abs() < 1e-7, "{dense} vs {fast}");
    }

    #[test]
    fn reflection_in_x_leaves_efficiency_unchanged() {
        let b = shifted();
        let t = ModeTriplet::new(ModeIndex::new(1, 0), ModeIndex::new(1, 1), ModeIndex::new(0, 1));
        let direct = quad2d(
            |x, y| {
                b.mode_function(FieldLabel::P, t.pump, x, y)
                    * b.mode_function(FieldLabel::H, t.h, x, y)
                    * b.mode_function(FieldLabel::V, t.v, x, y)
            },
            25.0,
            401,
        );
        let reflected = quad2d(
            |x, y| {
                b.mode_function(FieldLabel::P, t.pump, -x, y)
                    * b.mode_function(FieldLabel::H, t.h, -x, y)
                    * b.mode_function(FieldLabel::V, t.v, -x, y)
            },
            25.0,
            401,
        );
        assert!((direct * direct - reflected * reflected).abs() < 1e-12);
    }

    #[test]
    fn grid_doubling_changes_little() {
        let b = shifted();
        let coarse = Quadrature::default();
        let fine = Quadrature { points: 512, ..coarse };
        for t in [
            ModeTriplet::new(ModeIndex::FUNDAMENTAL, ModeIndex::FUNDAMENTAL, ModeIndex::new(0, 1)),
            ModeTriplet::new(ModeIndex::FUNDAMENTAL, ModeIndex::new(0, 2), ModeIndex::FUNDAMENTAL),
            ModeTriplet::new(ModeIndex::new(0, 1), ModeIndex::new(0, 1), ModeIndex::new(0, 2)),
        ] {
            let a = b.triplet_overlap_efficiency(&t, &coarse);
            let c = b.triplet_overlap_efficiency(&t, &fine);
            assert!((a - c).abs() < 1e-6, "{t}: {a} vs {c}");
        }
    }
}
