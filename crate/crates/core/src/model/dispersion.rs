use alloc::collections::BTreeMap;
use alloc::format;

use super::{bulk_index, CrystalAxis, FieldLabel, ModeIndex, SellmeierModel};
use crate::error::{Error, Result};

/// Which crystal axis each field is polarized along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldAxes {
    pub pump: CrystalAxis,
    pub h: CrystalAxis,
    pub v: CrystalAxis,
}

impl FieldAxes {
    pub fn axis(&self, field: FieldLabel) -> CrystalAxis {
        match field {
            FieldLabel::P => self.pump,
            FieldLabel::H => self.h,
            FieldLabel::V => self.v,
        }
    }
}

impl Default for FieldAxes {
    /// Type-II y -> y + z, with H parallel to the crystal surface.
    fn default() -> Self {
        Self {
            pump: CrystalAxis::Y,
            h: CrystalAxis::Y,
            v: CrystalAxis::Z,
        }
    }
}

/// Frequency-independent geometric corrections `dk` [rad/m] per field and
/// mode, plus a global offset [rad/m] absorbing poling-period uncertainty.
///
/// The fundamental mode of every field carries zero correction; that gauge is
/// enforced on insertion.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeometricDispersionTable {
    entries: BTreeMap<(FieldLabel, ModeIndex), f64>,
    pub global_offset: f64,
}

impl GeometricDispersionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_offset(global_offset: f64) -> Self {
        Self {
            entries: BTreeMap::new(),
            global_offset,
        }
    }

    pub fn set(&mut self, field: FieldLabel, mode: ModeIndex, dk: f64) -> Result<()> {
        if !dk.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite correction for {mode}{field}")));
        }
        if mode.is_fundamental() {
            if dk != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "gauge fixes the correction of 00{field} to zero, got {dk}"
                )));
            }
            return Ok(());
        }
        self.entries.insert((field, mode), dk);
        Ok(())
    }

    pub fn with(mut self, field: FieldLabel, mode: ModeIndex, dk: f64) -> Result<Self> {
        self.set(field, mode, dk)?;
        Ok(self)
    }

    pub fn get(&self, field: FieldLabel, mode: ModeIndex) -> Result<f64> {
        if mode.is_fundamental() {
            return Ok(0.0);
        }
        self.entries
            .get(&(field, mode))
            .copied()
            .ok_or_else(|| Error::UnknownMode(format!("{mode}{field}")))
    }

    pub fn contains(&self, field: FieldLabel, mode: ModeIndex) -> bool {
        mode.is_fundamental() || self.entries.contains_key(&(field, mode))
    }

    /// Non-fundamental entries in (field, mode) order.
    pub fn entries(&self) -> impl Iterator<Item = (FieldLabel, ModeIndex, f64)> + '_ {
        self.entries.iter().map(|(&(f, m), &v)| (f, m, v))
    }
}

/// Bulk Sellmeier dispersion combined with the guided-mode corrections.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionModel {
    pub sellmeier: SellmeierModel,
    pub axes: FieldAxes,
    pub table: GeometricDispersionTable,
}

impl DispersionModel {
    pub fn new(sellmeier: SellmeierModel, axes: FieldAxes, table: GeometricDispersionTable) -> Self {
        Self { sellmeier, axes, table }
    }

    /// Bulk wavevector `2 pi n / lambda` [rad/m].
    pub fn bulk_wavevector(&self, field: FieldLabel, lambda_nm: f64) -> Result<f64> {
        let n = bulk_index(&self.sellmeier, self.axes.axis(field), lambda_nm)?;
        Ok(2.0 * core::f64::consts::PI * n / (lambda_nm * 1e-9))
    }

    /// Guided wavevector of `mode` [rad/m]: bulk part plus the tabulated
    /// geometric correction.
    pub fn guided_wavevector(&self, field: FieldLabel, mode: ModeIndex, lambda_nm: f64) -> Result<f64> {
        let dk = self.table.get(field, mode)?;
        Ok(self.bulk_wavevector(field, lambda_nm)? + dk)
    }
}
