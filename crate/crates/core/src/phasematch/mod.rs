//! Quasi-phase-matched mismatch, sinc phase-matching amplitudes, degenerate
//! band positions, band maps, and calibration of the geometric dispersion
//! table from sum-frequency data.

mod bands;
mod calibrate;
mod degenerate;

pub use bands::{band_map, default_triplet_universe, triplet_universe, BandLayer, BandMap, GridSpec, SpectralGrid};
pub(crate) use bands::BulkGrid;
pub use calibrate::{
    calibrate, Calibration, CalibrationOptions, CalibrationParameter, LinearConstraint, ResidualRow, SfgObservation,
};
pub use degenerate::{band_separation, degenerate_pm_wavelength, degenerate_pm_wavelength_in, SearchWindow};

pub use crate::model::ModeTriplet;

use crate::error::{Error, Result};
use crate::model::{DispersionModel, FieldLabel, GeometricDispersionTable};
use crate::numeric::sinc;

/// Periodic poling of the nonlinear medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpmGrating {
    pub poling_period_um: f64,
    pub qpm_order: u32,
    pub length_mm: f64,
}

impl Default for QpmGrating {
    fn default() -> Self {
        Self {
            poling_period_um: 7.5,
            qpm_order: 1,
            length_mm: 1.0,
        }
    }
}

impl QpmGrating {
    pub fn new(poling_period_um: f64, qpm_order: u32, length_mm: f64) -> Result<Self> {
        if !(poling_period_um > 0.0) || !(length_mm > 0.0) || qpm_order < 1 {
            return Err(Error::InvalidParameter(alloc::format!(
                "invalid grating: period {poling_period_um} um, order {qpm_order}, length {length_mm} mm"
            )));
        }
        Ok(Self {
            poling_period_um,
            qpm_order,
            length_mm,
        })
    }

    /// Grating wavevector `2 pi n / period` [rad/m].
    pub fn grating_wavevector(&self) -> f64 {
        2.0 * core::f64::consts::PI * self.qpm_order as f64 / (self.poling_period_um * 1e-6)
    }

    pub fn length_m(&self) -> f64 {
        self.length_mm * 1e-3
    }
}

/// Pump wavelength fixed by energy conservation.
pub fn pump_wavelength_nm(lambda_h_nm: f64, lambda_v_nm: f64) -> f64 {
    1.0 / (1.0 / lambda_h_nm + 1.0 / lambda_v_nm)
}

/// Mode-dependent part of the mismatch, `dk_P - dk_H - dk_V - offset`.
pub fn correction_term(dk_pump: f64, dk_h: f64, dk_v: f64, global_offset: f64) -> f64 {
    dk_pump - dk_h - dk_v - global_offset
}

pub(crate) fn triplet_correction(table: &GeometricDispersionTable, triplet: &ModeTriplet) -> Result<f64> {
    Ok(correction_term(
        table.get(FieldLabel::P, triplet.pump)?,
        table.get(FieldLabel::H, triplet.h)?,
        table.get(FieldLabel::V, triplet.v)?,
        table.global_offset,
    ))
}

/// Bulk mismatch `k_P - k_H - k_V - K_G` [rad/m] without guided corrections.
pub fn bulk_mismatch(dm: &DispersionModel, grating: &QpmGrating, lambda_h_nm: f64, lambda_v_nm: f64) -> Result<f64> {
    let lp = pump_wavelength_nm(lambda_h_nm, lambda_v_nm);
    Ok(dm.bulk_wavevector(FieldLabel::P, lp)?
        - dm.bulk_wavevector(FieldLabel::H, lambda_h_nm)?
        - dm.bulk_wavevector(FieldLabel::V, lambda_v_nm)?
        - grating.grating_wavevector())
}

/// Phase mismatch [rad/m] of `triplet` at the given down-converted
/// wavelengths, including the table's global offset.
pub fn mismatch(
    dm: &DispersionModel,
    grating: &QpmGrating,
    triplet: &ModeTriplet,
    lambda_h_nm: f64,
    lambda_v_nm: f64,
) -> Result<f64> {
    let corr = triplet_correction(&dm.table, triplet)?;
    Ok(bulk_mismatch(dm, grating, lambda_h_nm, lambda_v_nm)? + corr)
}

/// Phase-matching amplitude `sinc(L dbeta / 2)`.
pub fn pm_amplitude(mismatch_rad_per_m: f64, length_m: f64) -> f64 {
    sinc(0.5 * length_m * mismatch_rad_per_m)
}
