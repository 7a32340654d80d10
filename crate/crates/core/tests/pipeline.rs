//! Calibration through joint spectrum through polarization, exercised via
//! the public API only.

use proptest::prelude::*;
use wgspdc_core::beam::{axis_order_weights, predict_m2, ScanDirection};
use wgspdc_core::model::{
    DispersionModel, FieldAxes, FieldLabel, GeometricDispersionTable, HGModeBasis, ModeProfile, ModeTriplet,
    SellmeierModel,
};
use wgspdc_core::phasematch::{
    band_map, calibrate, default_triplet_universe, degenerate_pm_wavelength, CalibrationOptions, GridSpec,
    LinearConstraint, QpmGrating, SfgObservation,
};
use wgspdc_core::polarization::{chsh_from_state, shih_alley_state, NoiseParams};
use wgspdc_core::spectra::{apply_filter, heralded_mode_weights, joint_spectrum, spatial_purity, PumpEnvelope, SpectralFilter};

// wavelength, V, H, P
const SFG: [(f64, &str, &str, &str); 17] = [
    (793.10, "10", "10", "20"),
    (795.00, "00", "01", "01"),
    (796.60, "01", "01", "02"),
    (796.70, "10", "00", "10"),
    (797.10, "02", "01", "02"),
    (798.50, "02", "00", "01"),
    (798.70, "00", "10", "10"),
    (799.40, "00", "00", "00"),
    (800.10, "00", "02", "01"),
    (802.20, "02", "02", "02"),
    (804.40, "10", "01", "10"),
    (806.00, "01", "10", "10"),
    (806.80, "01", "00", "00"),
    (807.60, "00", "01", "00"),
    (811.50, "02", "00", "00"),
    (813.30, "00", "02", "00"),
    (815.00, "01", "01", "00"),
];

fn model() -> DispersionModel {
    let obs: Vec<SfgObservation> = SFG
        .iter()
        .map(|&(l, v, h, p)| SfgObservation {
            lambda_nm: l,
            triplet: ModeTriplet::new(p.parse().unwrap(), h.parse().unwrap(), v.parse().unwrap()),
            relative_efficiency_pct: None,
        })
        .collect();
    let initial = DispersionModel::new(SellmeierModel::ktp(), FieldAxes::default(), GeometricDispersionTable::new());
    let options = CalibrationOptions {
        constraints: vec![LinearConstraint::tie("P10".parse().unwrap(), "P01".parse().unwrap())],
    };
    calibrate(&obs, &initial, &QpmGrating::default(), &options).unwrap().model
}

fn basis() -> HGModeBasis {
    let p = |wx, wy, cy| ModeProfile { waist_x_um: wx, waist_y_um: wy, center_y_um: cy };
    HGModeBasis::new(p(1.989, 1.5, 0.0), p(2.158, 3.063, 1.044), p(1.409, 5.0, 1.822)).unwrap()
}

fn wide(samples: usize) -> GridSpec {
    GridSpec {
        lambda_h_min_nm: 780.0,
        lambda_h_max_nm: 930.0,
        samples_h: samples,
        lambda_v_min_nm: 700.0,
        lambda_v_max_nm: 820.0,
        samples_v: samples,
    }
}

#[test]
fn calibrated_fundamental_and_band_map() {
    let dm = model();
    let g = QpmGrating::default();
    let l = degenerate_pm_wavelength(&dm, &g, &ModeTriplet::FUNDAMENTAL).unwrap();
    assert!((l - 799.4).abs() < 1.0, "{l}");
    let universe = default_triplet_universe();
    let map = band_map(&dm, &g, &universe, &GridSpec::square(790.0, 815.0, 64)).unwrap();
    assert_eq!(map.layers.len(), universe.len());
    assert!(map.layers.iter().all(|l| l.values.iter().all(|v| (0.0..=1.0).contains(v))));
    let fundamental = map.layer(&ModeTriplet::FUNDAMENTAL).unwrap();
    assert!(fundamental.max() > 0.9);
}

#[test]
fn coarse_filter_purifies_and_herald_narrows_modes() {
    let dm = model();
    let triplets: Vec<_> = default_triplet_universe().into_iter().filter(|t| t.pump.is_fundamental()).collect();
    let pump = PumpEnvelope::new(399.9, 1.0).unwrap();
    let js = joint_spectrum(&dm, &QpmGrating::default(), &pump, &basis(), &triplets, &wide(160)).unwrap();
    let unfiltered = spatial_purity(&js, &ModeTriplet::FUNDAMENTAL).unwrap();
    let filter = SpectralFilter::gaussian(800.0, 10.0, FieldLabel::H).unwrap();
    let filtered = spatial_purity(&apply_filter(&js, &filter), &ModeTriplet::FUNDAMENTAL).unwrap();
    assert!(filtered >= 0.95 && filtered > unfiltered, "{unfiltered} -> {filtered}");

    let heralded = heralded_mode_weights(&js, FieldLabel::V, Some(&filter)).unwrap();
    let free = heralded_mode_weights(&js, FieldLabel::V, None).unwrap();
    for dir in ScanDirection::ALL {
        let h = predict_m2(&axis_order_weights(&heralded, dir)).unwrap();
        let u = predict_m2(&axis_order_weights(&free, dir)).unwrap();
        assert!(h < 1.05 && u > h, "{dir}: {h} vs {u}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn filtered_weights_stay_normalized(center in 780.0f64..830.0, fwhm in 0.5f64..30.0) {
        let dm = model();
        let triplets: Vec<_> = default_triplet_universe().into_iter().filter(|t| t.pump.is_fundamental()).collect();
        let pump = PumpEnvelope::new(399.9, 1.0).unwrap();
        let js = joint_spectrum(&dm, &QpmGrating::default(), &pump, &basis(), &triplets, &wide(48)).unwrap();
        let filter = SpectralFilter::gaussian(center, fwhm, FieldLabel::H).unwrap();
        let weights = heralded_mode_weights(&js, FieldLabel::V, Some(&filter)).unwrap();
        let sum: f64 = weights.values().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(weights.values().all(|w| *w >= 0.0));
    }

    #[test]
    fn werner_chsh_is_linear(p in 0.0f64..=1.0) {
        let state = shih_alley_state(&NoiseParams { werner_p: p, ..NoiseParams::default() }).unwrap();
        prop_assert!((chsh_from_state(&state).s - p * 2.0 * 2f64.sqrt()).abs() < 1e-9);
    }
}
