use alloc::format;
use alloc::vec::Vec;

use super::{mismatch, ModeTriplet, QpmGrating};
use crate::error::{Error, Result};
use crate::model::DispersionModel;
use crate::numeric::bisect;
use num_traits::Float;

/// Bracketing search along the degenerate diagonal `lambda_H = lambda_V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchWindow {
    pub min_nm: f64,
    pub max_nm: f64,
    pub prescan_step_nm: f64,
    pub tolerance_nm: f64,
    pub tolerance_rad_per_m: f64,
}

impl Default for SearchWindow {
    fn default() -> Self {
        Self {
            min_nm: 780.0,
            max_nm: 830.0,
            prescan_step_nm: 0.05,
            tolerance_nm: 1e-4,
            tolerance_rad_per_m: 1.0,
        }
    }
}

impl SearchWindow {
    /// Tolerances tight enough to generate noiseless synthetic data.
    pub fn exact() -> Self {
        Self {
            tolerance_nm: 1e-11,
            tolerance_rad_per_m: 1e-6,
            ..Self::default()
        }
    }
}

/// Degenerate phase-matching wavelength of `triplet` with the default window.
pub fn degenerate_pm_wavelength(dm: &DispersionModel, grating: &QpmGrating, triplet: &ModeTriplet) -> Result<f64> {
    degenerate_pm_wavelength_in(dm, grating, triplet, &SearchWindow::default())
}

/// Prescans the window for a sign change of the diagonal mismatch, then
/// bisects the first bracket found (shortest wavelength).
pub fn degenerate_pm_wavelength_in(
    dm: &DispersionModel,
    grating: &QpmGrating,
    triplet: &ModeTriplet,
    window: &SearchWindow,
) -> Result<f64> {
    let steps = ((window.max_nm - window.min_nm) / window.prescan_step_nm).ceil() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| (window.min_nm + k as f64 * window.prescan_step_nm).min(window.max_nm))
        .collect();
    let mut prev: Option<(f64, f64)> = None;
    for &l in &grid {
        let f = mismatch(dm, grating, triplet, l, l)?;
        if f == 0.0 {
            return Ok(l);
        }
        if let Some((lp, fp)) = prev {
            if fp.signum() != f.signum() {
                // A failed evaluation inside a valid bracket cannot happen:
                // both ends were evaluated above.
                let root = bisect(
                    |x| mismatch(dm, grating, triplet, x, x).unwrap_or(f64::NAN),
                    lp,
                    l,
                    window.tolerance_nm,
                    window.tolerance_rad_per_m,
                    400,
                );
                if let Some(r) = root {
                    return Ok(r);
                }
            }
        }
        prev = Some((l, f));
    }
    Err(Error::NotPhaseMatched {
        triplet: format!("{triplet}"),
        min_nm: window.min_nm,
        max_nm: window.max_nm,
    })
}

/// Distance [nm] between the degenerate phase-matching points of two bands.
pub fn band_separation(
    dm: &DispersionModel,
    grating: &QpmGrating,
    first: &ModeTriplet,
    second: &ModeTriplet,
) -> Result<f64> {
    let a = degenerate_pm_wavelength(dm, grating, first)?;
    let b = degenerate_pm_wavelength(dm, grating, second)?;
    Ok((a - b).abs())
}
