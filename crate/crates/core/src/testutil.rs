//! Shared fixtures for unit tests.

use alloc::vec::Vec;

use crate::model::{DispersionModel, FieldAxes, GeometricDispersionTable, HGModeBasis, ModeProfile, ModeTriplet, SellmeierModel};
use crate::phasematch::{calibrate, Calibration, CalibrationOptions, CalibrationParameter, LinearConstraint, QpmGrating, SfgObservation};

/// Measured degenerate SFG processes: wavelength, V, H, P modes, efficiency.
pub const TABLE1: [(f64, &str, &str, &str, f64); 17] = [
    (793.10, "10", "10", "20", 10.0),
    (795.00, "00", "01", "01", 3.0),
    (796.60, "01", "01", "02", 3.0),
    (796.70, "10", "00", "10", 54.0),
    (797.10, "02", "01", "02", 3.0),
    (798.50, "02", "00", "01", 15.0),
    (798.70, "00", "10", "10", 23.0),
    (799.40, "00", "00", "00", 100.0),
    (800.10, "00", "02", "01", 13.0),
    (802.20, "02", "02", "02", 3.0),
    (804.40, "10", "01", "10", 3.0),
    (806.00, "01", "10", "10", 13.0),
    (806.80, "01", "00", "00", 40.0),
    (807.60, "00", "01", "00", 25.0),
    (811.50, "02", "00", "00", 12.0),
    (813.30, "00", "02", "00", 8.0),
    (815.00, "01", "01", "00", 20.0),
];

pub fn triplet(pump: &str, h: &str, v: &str) -> ModeTriplet {
    ModeTriplet::new(pump.parse().unwrap(), h.parse().unwrap(), v.parse().unwrap())
}

pub fn table1() -> Vec<SfgObservation> {
    TABLE1
        .iter()
        .map(|&(l, v, h, p, eff)| SfgObservation {
            lambda_nm: l,
            triplet: triplet(p, h, v),
            relative_efficiency_pct: Some(eff),
        })
        .collect()
}

pub fn tie_options() -> CalibrationOptions {
    let p = |s: &str| s.parse::<CalibrationParameter>().unwrap();
    CalibrationOptions {
        constraints: alloc::vec![LinearConstraint::tie(p("P10"), p("P01"))],
    }
}

pub fn calibrated() -> (DispersionModel, Calibration) {
    let initial = DispersionModel::new(SellmeierModel::ktp(), FieldAxes::default(), GeometricDispersionTable::new());
    let cal = calibrate(&table1(), &initial, &QpmGrating::default(), &tie_options()).unwrap();
    (cal.model.clone(), cal)
}

/// Mode basis with waists fitted to the tabulated relative efficiencies.
pub fn basis() -> HGModeBasis {
    let p = |wx: f64, wy: f64, cy: f64| ModeProfile {
        waist_x_um: wx,
        waist_y_um: wy,
        center_y_um: cy,
    };
    HGModeBasis::new(p(1.989, 1.5, 0.0), p(2.158, 3.063, 1.044), p(1.409, 5.0, 1.822)).unwrap()
}

pub fn pump_fundamental_triplets() -> Vec<ModeTriplet> {
    crate::phasematch::default_triplet_universe()
        .into_iter()
        .filter(|t| t.pump.is_fundamental())
        .collect()
}

/// Covers every pump-fundamental island of the calibrated model.
pub fn wide_grid(samples: usize) -> crate::phasematch::GridSpec {
    crate::phasematch::GridSpec {
        lambda_h_min_nm: 780.0,
        lambda_h_max_nm: 930.0,
        samples_h: samples,
        lambda_v_min_nm: 700.0,
        lambda_v_max_nm: 820.0,
        samples_v: samples,
    }
}
