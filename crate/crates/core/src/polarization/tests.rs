use super::*;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use nalgebra::Matrix4;
use num_complex::Complex64;
use proptest::prelude::*;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// Closed-form retarder matrices written out element by element.
fn hwp_oracle(theta: f64) -> [[Complex64; 2]; 2] {
    let (c2, s2) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    [[cx(c2, 0.0), cx(s2, 0.0)], [cx(s2, 0.0), cx(-c2, 0.0)]]
}

fn qwp_oracle(theta: f64) -> [[Complex64; 2]; 2] {
    let (c, s) = (theta.cos(), theta.sin());
    let off = cx(s * c, -s * c);
    [
        [cx(c * c, s * s), off],
        [off, cx(s * s, c * c)],
    ]
}

fn apply_dagger(m: [[Complex64; 2]; 2], v: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0].conj() * v[0] + m[1][0].conj() * v[1],
        m[0][1].conj() * v[0] + m[1][1].conj() * v[1],
    ]
}

fn pass_oracle(s: &AnalyzerSetting) -> [Complex64; 2] {
    let p = s.pol_deg.to_radians();
    let v = [cx(p.cos(), 0.0), cx(p.sin(), 0.0)];
    let v = apply_dagger(hwp_oracle(s.hwp_deg.to_radians()), v);
    apply_dagger(qwp_oracle(s.qwp_deg.to_radians()), v)
}

// Σ_{jk} φ_j* ρ_jk φ_k with φ the product pass state, by explicit loops.
fn prob_oracle(rho: &Matrix4<Complex64>, s1: &AnalyzerSetting, s2: &AnalyzerSetting) -> f64 {
    let a = pass_oracle(s1);
    let b = pass_oracle(s2);
    let phi = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let mut acc = cx(0.0, 0.0);
    for j in 0..4 {
        for k in 0..4 {
            acc += phi[j].conj() * rho[(j, k)] * phi[k];
        }
    }
    acc.re
}

fn inner(a: &Jones, b: &Jones) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

fn ideal(phase: f64) -> TwoPhotonPolState {
    shih_alley_state(&NoiseParams {
        phase_rad: phase,
        ..NoiseParams::default()
    })
    .unwrap()
}

fn werner(p: f64) -> TwoPhotonPolState {
    shih_alley_state(&NoiseParams {
        werner_p: p,
        ..NoiseParams::default()
    })
    .unwrap()
}

fn random_state(entries: &[f64]) -> TwoPhotonPolState {
    let g = Matrix4::from_fn(|r, k| cx(entries[2 * (4 * r + k)], entries[2 * (4 * r + k) + 1]));
    let m = g * g.adjoint();
    let tr = m.trace().re;
    let rho = m.map(|z| z / tr);
    let rho = (rho + rho.adjoint()).map(|z| z * 0.5);
    TwoPhotonPolState::new(rho).unwrap()
}

fn setting_strategy() -> impl Strategy<Value = AnalyzerSetting> {
    (-180.0..180.0f64, -180.0..180.0f64, -180.0..180.0f64)
        .prop_map(|(q, h, p)| AnalyzerSetting::new(q, h, p))
}

/// Coincidences with arm 1 fixed and arm 2 scanned in linear angle, or over
/// its half-wave plate behind a fixed quarter-wave plate.
fn scan(
    state: &TwoPhotonPolState,
    reference: AnalyzerSetting,
    arm2_qwp: Option<f64>,
) -> Vec<(f64, f64)> {
    (0..24)
        .map(|k| {
            let angle = k as f64 * 7.5;
            let s2 = match arm2_qwp {
                Some(q) => AnalyzerSetting::new(q, angle / 2.0, 0.0),
                None => AnalyzerSetting::linear(angle),
            };
            (scan_angle_deg(&s2), coincidence_prob(state, &reference, &s2))
        })
        .collect()
}

fn fitted(state: &TwoPhotonPolState, reference: AnalyzerSetting, arm2_qwp: Option<f64>) -> f64 {
    visibility(&scan(state, reference, arm2_qwp)).unwrap().visibility
}

const H: AnalyzerSetting = AnalyzerSetting {
    qwp_deg: 0.0,
    hwp_deg: 0.0,
    pol_deg: 0.0,
};
const D: AnalyzerSetting = AnalyzerSetting {
    qwp_deg: 45.0,
    hwp_deg: 22.5,
    pol_deg: 0.0,
};
const R: AnalyzerSetting = AnalyzerSetting {
    qwp_deg: 45.0,
    hwp_deg: 0.0,
    pol_deg: 0.0,
};

#[test]
fn projector_examples() {
    let h = analyzer_projector(&H);
    assert!((h[(0, 0)].re - 1.0).abs() < 1e-15 && h[(1, 1)].norm() < 1e-15);

    let d = D.pass_state();
    assert!((d[0].norm() - FRAC_1_SQRT_2).abs() < 1e-15);
    assert!((inner(&d, &d.map(|_| cx(FRAC_1_SQRT_2, 0.0))).norm() - 1.0).abs() < 1e-12);

    let r = R.pass_state();
    assert!((r[0].norm_sqr() - 0.5).abs() < 1e-12);
    let phase = r[1] / r[0];
    assert!((phase.re).abs() < 1e-12 && (phase.im.abs() - 1.0).abs() < 1e-12);
    let l = AnalyzerSetting::new(-45.0, 0.0, 0.0).pass_state();
    assert!(inner(&l, &r).norm() < 1e-12);
    assert!(R.stokes()[2].abs() > 1.0 - 1e-12);
}

#[test]
fn retarders_match_closed_forms() {
    for k in 0..13 {
        let th = (k as f64 * 17.0 - 90.0).to_radians();
        let h = retarder(th, PI);
        let q = retarder(th, PI / 2.0);
        let (ho, qo) = (hwp_oracle(th), qwp_oracle(th));
        for r in 0..2 {
            for c in 0..2 {
                assert!((h[(r, c)] - ho[r][c]).norm() < 1e-12);
                assert!((q[(r, c)] - qo[r][c]).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn coincidence_examples() {
    let psi = ideal(0.0);
    assert!(coincidence_prob(&psi, &H, &H).abs() < 1e-15);
    let v = AnalyzerSetting::new(0.0, 0.0, 90.0);
    assert!((coincidence_prob(&psi, &H, &v) - 0.5).abs() < 1e-12);
    for phase in [0.0, 0.4, PI / 2.0, PI] {
        let s = ideal(phase);
        let expect = prob_oracle(s.matrix(), &D, &D);
        assert!((coincidence_prob(&s, &D, &D) - expect).abs() < 1e-12);
        assert!((expect - 0.25 * (1.0 + phase.cos())).abs() < 1e-12);
    }
    assert!((coincidence_prob(&psi, &D, &D) - 0.5).abs() < 1e-12);
}

#[test]
fn state_examples() {
    let psi = ideal(0.0);
    assert!((psi.purity() - 1.0).abs() < 1e-12);
    let mixed = werner(0.0);
    assert!((mixed.purity() - 0.25).abs() < 1e-12);
    for reference in [H, D, R] {
        assert!(fitted(&mixed, reference, None).abs() < 1e-9);
    }
    assert!(matches!(
        shih_alley_state(&NoiseParams {
            contamination: 1.5,
            ..NoiseParams::default()
        }),
        Err(Error::InvalidState(_))
    ));
    assert!(matches!(
        shih_alley_state(&NoiseParams {
            werner_p: 1.2,
            ..NoiseParams::default()
        }),
        Err(Error::InvalidParameter(_))
    ));
    let mut bad = *psi.matrix();
    bad[(0, 1)] = cx(0.3, 0.0);
    assert!(TwoPhotonPolState::new(bad).is_err());
}

#[test]
fn double_pair_share_reaches_reported_range() {
    let base = NoiseParams {
        werner_p: 0.95,
        contamination: 0.03,
        ..NoiseParams::default()
    };
    let frac = |mu: f64| {
        double_pair_false_fraction(&NoiseParams {
            mean_pairs_per_pulse: mu,
            ..base
        })
        .unwrap()
    };
    assert_eq!(frac(0.0), 0.0);
    let mus: Vec<f64> = (0..200).map(|k| k as f64 * 5e-4).collect();
    let fr: Vec<f64> = mus.iter().map(|&m| frac(m)).collect();
    assert!(fr.windows(2).all(|w| w[1] > w[0]));
    let inside: Vec<f64> = mus
        .iter()
        .zip(&fr)
        .filter(|(_, f)| (0.25..=0.5).contains(*f))
        .map(|(m, _)| *m)
        .collect();
    assert!(!inside.is_empty());
    // Double pairs lower the H/V visibility of the otherwise fixed state.
    let mu = inside[inside.len() / 2];
    let with = shih_alley_state(&NoiseParams {
        mean_pairs_per_pulse: mu,
        ..base
    })
    .unwrap();
    let without = shih_alley_state(&base).unwrap();
    assert!(fitted(&with, H, None) < fitted(&without, H, None));
}

#[test]
fn visibility_examples() {
    let fit = visibility(&scan(&ideal(0.0), H, None)).unwrap();
    assert!((fit.visibility - 1.0).abs() < 1e-6);
    assert!(fit.residual_rms < 1e-12);
    for p in [0.9, 0.82, 0.5] {
        let w = werner(p);
        assert!((fitted(&w, H, None) - p).abs() < 1e-6);
        assert!((fitted(&w, D, None) - p).abs() < 1e-6);
        assert!((fitted(&w, R, Some(45.0)) - p).abs() < 1e-6);
    }
}

#[test]
fn visibility_preconditions() {
    let full = scan(&ideal(0.0), H, None);
    assert!(matches!(visibility(&full[..5]), Err(Error::InvalidParameter(_))));
    let narrow: Vec<(f64, f64)> = (0..10).map(|k| (k as f64 * 8.0, 1.0 + k as f64)).collect();
    assert!(matches!(visibility(&narrow), Err(Error::InvalidParameter(_))));
    let dup: Vec<(f64, f64)> = (0..12).map(|k| ((k % 3) as f64 * 60.0, 1.0)).collect();
    assert!(visibility(&dup).is_err());
}

#[test]
fn table_visibilities_with_tuned_noise() {
    // Two knobs: white noise sets the H/V contrast, the phase rotates the
    // coherence out of the linear D/A plane.
    let p = 0.86;
    let phase = (0.78f64 / 0.86).acos();
    let s = shih_alley_state(&NoiseParams {
        werner_p: p,
        phase_rad: phase,
        ..NoiseParams::default()
    })
    .unwrap();
    assert!((fitted(&s, H, None) - 0.86).abs() < 1e-6);
    assert!((fitted(&s, D, None) - 0.78).abs() < 1e-6);
    // Circular reference with the arm-2 quarter-wave plate at 0 deg.
    let vr = fitted(&s, R, Some(0.0));
    assert!((fitted(&s, R, Some(45.0)) - 0.86).abs() < 1e-6);
    assert!((vr - 0.78).abs() < 1e-6);
    assert!((vr - 0.73).abs() < 0.06);
}

#[test]
fn accidental_examples() {
    assert_eq!(accidental_rate(0.0, 5e4, 8e7).unwrap(), 0.0);
    assert_eq!(accidental_rate(1e4, 1e4, 1e8).unwrap(), 1.0);
    let full = accidental_rate(3e4, 2e4, 8e7).unwrap();
    let half = accidental_rate(3e4, 2e4, 4e7).unwrap();
    assert!((half - 2.0 * full).abs() < 1e-12);
    assert!(accidental_rate(1.0, 1.0, 0.0).is_err());
}

fn record(coinc: f64, singles: f64, power: Option<f64>) -> CountRecord {
    CountRecord {
        settings: [H, H],
        coincidences: coinc,
        singles_hz: [singles, singles],
        duration_s: 10.0,
        power_mw: power,
    }
}

#[test]
fn correction_identity_floor_and_warnings() {
    let recs = [record(100.0, 0.0, Some(0.25)), record(40.0, 0.0, Some(0.25))];
    let out = correct_counts(&recs, &CorrectionOptions::new(8e7)).unwrap();
    assert_eq!(out.records, recs.to_vec());
    assert!(out.warnings.is_empty());

    let recs = [record(3.0, 1e5, Some(0.25))];
    let out = correct_counts(&recs, &CorrectionOptions::new(8e7)).unwrap();
    assert_eq!(out.records[0].coincidences, 0.0);

    let recs = [record(100.0, 0.0, Some(0.2)), record(100.0, 0.0, None)];
    let mut opts = CorrectionOptions::new(8e7);
    opts.reference_power_mw = Some(0.25);
    let out = correct_counts(&recs, &opts).unwrap();
    assert!((out.records[0].coincidences - 125.0).abs() < 1e-9);
    assert_eq!(out.records[1].coincidences, 100.0);
    assert_eq!(out.warnings.len(), 1);
    opts.power_exponent = 2.0;
    let out = correct_counts(&recs, &opts).unwrap();
    assert!((out.records[0].coincidences - 156.25).abs() < 1e-9);
}

#[test]
fn accidental_subtraction_raises_visibility() {
    let state = werner(0.82);
    let settings: Vec<_> = (0..24)
        .map(|k| (D, AnalyzerSetting::linear(k as f64 * 7.5)))
        .collect();
    let sim = CountSimulation {
        pairs_per_setting: 2.0e5,
        duration_s: 180.0,
        singles_hz: [2.0e4, 2.0e4],
        power_mw: Some(0.25),
        pulse_rate_hz: Some(8.0e7),
        poisson: false,
    };
    let raw = simulate_counts(&state, &settings, &sim, 1).unwrap();
    let corrected = correct_counts(&raw, &CorrectionOptions::new(8.0e7)).unwrap().records;
    let v_raw = visibility_from_records(&raw, 2).unwrap().visibility;
    let v_cor = visibility_from_records(&corrected, 2).unwrap().visibility;
    assert!((v_cor - 0.82).abs() < 1e-9);
    let gain = 100.0 * (v_cor - v_raw);
    assert!((1.0..=2.0).contains(&gain), "gain {gain} points");
}

#[test]
fn chsh_examples() {
    let s = chsh_from_state(&ideal(0.0));
    assert!((s.s - 2.0 * SQRT_2).abs() < 1e-9);
    let singlet = chsh_from_state(&ideal(PI));
    assert!((singlet.s - 2.0 * SQRT_2).abs() < 1e-9);
    assert_eq!(singlet.negated_term, 1);
    let w = chsh_from_state(&werner(0.82));
    assert!((w.s - 2.0 * SQRT_2 * 0.82).abs() < 1e-9);
    assert!((w.s - 2.3193).abs() < 5e-5);
    assert!(chsh_from_state(&TwoPhotonPolState::maximally_mixed()).s.abs() < 1e-12);
}

#[test]
fn chsh_records_match_state() {
    let state = werner(0.82);
    let settings = chsh_settings(&ChshAngles::default());
    let mut sim = CountSimulation::new(1.0e5);
    sim.poisson = false;
    let recs = simulate_counts(&state, &settings, &sim, 0).unwrap();
    let r = chsh_from_records(&recs, &ChshAngles::default()).unwrap();
    assert!((r.s - chsh_from_state(&state).s).abs() < 1e-9);
    // Equivalent plate angles select the same analysis angles.
    let turned: Vec<CountRecord> = recs
        .iter()
        .map(|rec| {
            let mut rec = *rec;
            for s in rec.settings.iter_mut() {
                s.hwp_deg += 90.0;
                s.qwp_deg -= 180.0;
            }
            rec
        })
        .collect();
    let r2 = chsh_from_records(&turned, &ChshAngles::default()).unwrap();
    assert!((r2.s - r.s).abs() < 1e-9);
}

#[test]
fn chsh_simulated_within_three_sigma() {
    let state = werner(0.82);
    let analytic = chsh_from_state(&state).s;
    let settings = chsh_settings(&ChshAngles::default());
    let sim = CountSimulation::new(1.0e5);
    let mut inside = 0;
    for seed in 0..40 {
        let recs = simulate_counts(&state, &settings, &sim, seed).unwrap();
        let r = chsh_from_records(&recs, &ChshAngles::default()).unwrap();
        assert!(r.sigma > 0.0 && r.sigma < 0.01);
        if (r.s - analytic).abs() < 3.0 * r.sigma {
            inside += 1;
        }
    }
    assert!(inside >= 38, "{inside} of 40 runs within 3 sigma");
}

#[test]
fn chsh_missing_settings_listed() {
    let settings = chsh_settings(&ChshAngles::default());
    let mut sim = CountSimulation::new(1.0e3);
    sim.poisson = false;
    let mut recs = simulate_counts(&werner(0.9), &settings, &sim, 0).unwrap();
    recs.remove(5);
    match chsh_from_records(&recs, &ChshAngles::default()) {
        Err(Error::MissingSettings { missing }) => {
            assert_eq!(missing.len(), 1);
            assert!(missing[0].contains("a=0 b=67.5"), "{missing:?}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #[test]
    fn projectors_are_rank_one(s in setting_strategy()) {
        let p = analyzer_projector(&s);
        prop_assert!((p * p - p).iter().all(|z| z.norm() < 1e-12));
        prop_assert!((p.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outcomes_sum_to_one(
        entries in proptest::collection::vec(-1.0..1.0f64, 32),
        s1 in setting_strategy(),
        s2 in setting_strategy(),
    ) {
        let state = random_state(&entries);
        let o1 = AnalyzerSetting { pol_deg: s1.pol_deg + 90.0, ..s1 };
        let o2 = AnalyzerSetting { pol_deg: s2.pol_deg + 90.0, ..s2 };
        let total = coincidence_prob(&state, &s1, &s2)
            + coincidence_prob(&state, &s1, &o2)
            + coincidence_prob(&state, &o1, &s2)
            + coincidence_prob(&state, &o1, &o2);
        prop_assert!((total - 1.0).abs() < 1e-12);
        let oracle = prob_oracle(state.matrix(), &s1, &s2);
        prop_assert!((coincidence_prob(&state, &s1, &s2) - oracle).abs() < 1e-12);
    }

    #[test]
    fn noise_params_give_valid_states(
        p in 0.0..=1.0f64,
        eps in 0.0..=1.0f64,
        mu in 0.0..2.0f64,
        phase in -10.0..10.0f64,
    ) {
        let s = shih_alley_state(&NoiseParams {
            werner_p: p,
            contamination: eps,
            mean_pairs_per_pulse: mu,
            phase_rad: phase,
        }).unwrap();
        prop_assert!(s.validate().is_ok());
    }

    #[test]
    fn werner_visibility_in_every_basis(p in 0.05..=1.0f64) {
        let w = werner(p);
        prop_assert!((fitted(&w, H, None) - p).abs() < 1e-6);
        prop_assert!((fitted(&w, D, None) - p).abs() < 1e-6);
        prop_assert!((fitted(&w, R, Some(45.0)) - p).abs() < 1e-6);
    }

    #[test]
    fn werner_chsh_scales_with_p(p in 0.0..=1.0f64) {
        let s = chsh_from_state(&werner(p)).s;
        prop_assert!((s - 2.0 * SQRT_2 * p).abs() < 1e-9);
    }

    #[test]
    fn chsh_invariant_under_global_rotation(
        entries in proptest::collection::vec(-1.0..1.0f64, 32),
        delta in -90.0..90.0f64,
    ) {
        let state = random_state(&entries);
        let u = rotation(delta.to_radians());
        let rotated = state.transformed(&u, &u);
        let base = chsh_from_state(&state);
        let turned = chsh_from_state_with(&rotated, &ChshAngles::default().rotated(delta));
        prop_assert!((base.s - turned.s).abs() < 1e-9);
    }

    #[test]
    fn tsirelson_bound(entries in proptest::collection::vec(-1.0..1.0f64, 32)) {
        let s = chsh_from_state(&random_state(&entries)).s;
        prop_assert!(s <= 2.0 * SQRT_2 + 1e-9);
    }
}
