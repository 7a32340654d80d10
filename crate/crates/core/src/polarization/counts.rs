use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{coincidence_prob, AnalyzerSetting, TwoPhotonPolState};
use crate::error::{Error, Result};
use crate::numeric::wrap;

/// One counting interval at fixed analyzer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    pub settings: [AnalyzerSetting; 2],
    pub coincidences: f64,
    pub singles_hz: [f64; 2],
    pub duration_s: f64,
    pub power_mw: Option<f64>,
}

impl CountRecord {
    pub fn validate(&self) -> Result<()> {
        for s in &self.settings {
            s.validate()?;
        }
        if !(self.coincidences >= 0.0) || !self.coincidences.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coincidence count {} must be finite and >= 0",
                self.coincidences
            )));
        }
        if self.singles_hz.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter("singles rates must be finite and >= 0".into()));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "duration {} s must be positive",
                self.duration_s
            )));
        }
        if let Some(p) = self.power_mw {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidParameter(format!("pump power {p} mW must be positive")));
            }
        }
        Ok(())
    }
}

/// Accidental coincidence rate for uncorrelated detections in the same pulse.
pub fn accidental_rate(singles_1_hz: f64, singles_2_hz: f64, pulse_rate_hz: f64) -> Result<f64> {
    if !(pulse_rate_hz > 0.0) || !pulse_rate_hz.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "pulse rate {pulse_rate_hz} Hz must be positive"
        )));
    }
    Ok(singles_1_hz * singles_2_hz / pulse_rate_hz)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionOptions {
    pub pulse_rate_hz: f64,
    /// Power the coincidences are rescaled to; the mean record power if unset.
    pub reference_power_mw: Option<f64>,
    pub power_exponent: f64,
    pub subtract_accidentals: bool,
}

impl CorrectionOptions {
    pub fn new(pulse_rate_hz: f64) -> Self {
        CorrectionOptions {
            pulse_rate_hz,
            reference_power_mw: None,
            power_exponent: 1.0,
            subtract_accidentals: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedCounts {
    pub records: Vec<CountRecord>,
    pub reference_power_mw: Option<f64>,
    pub warnings: Vec<String>,
}

/// Removes accidentals (computed from the measured singles) and rescales the
/// remainder to a common pump power. Counts are floored at zero.
pub fn correct_counts(records: &[CountRecord], options: &CorrectionOptions) -> Result<CorrectedCounts> {
    if !options.power_exponent.is_finite() {
        return Err(Error::InvalidParameter("power exponent must be finite".into()));
    }
    for r in records {
        r.validate()?;
    }
    let mut warnings = Vec::new();
    let reference = match options.reference_power_mw {
        Some(p) if !(p > 0.0) || !p.is_finite() => {
            return Err(Error::InvalidParameter(format!("reference power {p} mW must be positive")))
        }
        Some(p) => Some(p),
        None => {
            let powers: Vec<f64> = records.iter().filter_map(|r| r.power_mw).collect();
            if powers.is_empty() {
                None
            } else {
                Some(powers.iter().sum::<f64>() / powers.len() as f64)
            }
        }
    };
    let mut out = Vec::with_capacity(records.len());
    for (k, r) in records.iter().enumerate() {
        let mut n = r.coincidences;
        if options.subtract_accidentals {
            let acc = accidental_rate(r.singles_hz[0], r.singles_hz[1], options.pulse_rate_hz)?;
            n = (n - acc * r.duration_s).max(0.0);
        }
        match (reference, r.power_mw) {
            (Some(p_ref), Some(p)) => n *= (p_ref / p).powf(options.power_exponent),
            _ => warnings.push(format!("record {k}: no pump power, drift correction skipped")),
        }
        let mut corrected = *r;
        corrected.coincidences = n;
        out.push(corrected);
    }
    Ok(CorrectedCounts {
        records: out,
        reference_power_mw: reference,
        warnings,
    })
}

/// Fringe angle of a setting. With the quarter-wave plate held fixed, or
/// aligned with the analyzed polarization, coincidences are sinusoidal in
/// twice this angle.
pub fn scan_angle_deg(setting: &AnalyzerSetting) -> f64 {
    2.0 * setting.hwp_deg - setting.pol_deg
}

/// Sinusoidal fringe fit `C(θ) = C0·(1 + V·cos(2(θ − θ0)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityFit {
    pub visibility: f64,
    pub sigma: f64,
    pub c0: f64,
    pub theta0_deg: f64,
    pub points: usize,
    pub residual_rms: f64,
}

/// Fits a fringe to `(angle_deg, counts)` pairs. The model is linear in
/// `(C0, C0·V·cos2θ0, C0·V·sin2θ0)`; points are weighted by Poisson
/// variance with a floor of one count.
pub fn visibility(scan: &[(f64, f64)]) -> Result<VisibilityFit> {
    if scan.iter().any(|(a, n)| !a.is_finite() || !n.is_finite()) {
        return Err(Error::InvalidParameter("non-finite scan point".into()));
    }
    let mut angles: Vec<f64> = scan.iter().map(|(a, _)| wrap(*a, 180.0)).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if angles.len() < 6 {
        return Err(Error::InvalidParameter(format!(
            "visibility fit needs at least 6 distinct angles, got {}",
            angles.len()
        )));
    }
    let lo = scan.iter().map(|(a, _)| *a).fold(f64::INFINITY, f64::min);
    let hi = scan.iter().map(|(a, _)| *a).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 90.0 - 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "scan spans {:.1} deg, half a fringe period (90 deg) is required",
            hi - lo
        )));
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for &(a, n) in scan {
        let t = 2.0 * a.to_radians();
        let row = Vector3::new(1.0, t.cos(), t.sin());
        let w = 1.0 / n.max(1.0);
        ata += row * row.transpose() * w;
        atb += row * (w * n);
    }
    let cov = ata
        .try_inverse()
        .ok_or_else(|| Error::DegenerateInput("singular fringe design".into()))?;
    let beta = cov * atb;
    let (c0, a, b) = (beta[0], beta[1], beta[2]);
    if !(c0 > 0.0) {
        return Err(Error::FitRejected(format!("fringe offset {c0} is not positive")));
    }
    let amp = a.hypot(b);
    let v = amp / c0;
    let grad = if amp > 0.0 {
        Vector3::new(-v / c0, a / (amp * c0), b / (amp * c0))
    } else {
        Vector3::new(0.0, 1.0 / c0, 0.0)
    };
    let var = (grad.transpose() * cov * grad)[(0, 0)].max(0.0);
    let residual_rms = (scan
        .iter()
        .map(|&(ang, n)| {
            let t = 2.0 * ang.to_radians();
            let r = n - (c0 + a * t.cos() + b * t.sin());
            r * r
        })
        .sum::<f64>()
        / scan.len() as f64)
        .sqrt();
    Ok(VisibilityFit {
        visibility: v,
        sigma: var.sqrt(),
        c0,
        theta0_deg: 0.5 * b.atan2(a).to_degrees(),
        points: scan.len(),
        residual_rms,
    })
}

/// Fringe fit over records in which arm `scan_arm` (1 or 2) is scanned.
pub fn visibility_from_records(records: &[CountRecord], scan_arm: usize) -> Result<VisibilityFit> {
    if scan_arm != 1 && scan_arm != 2 {
        return Err(Error::InvalidParameter(format!("scan arm must be 1 or 2, got {scan_arm}")));
    }
    let scan: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (scan_angle_deg(&r.settings[scan_arm - 1]), r.coincidences))
        .collect();
    visibility(&scan)
}

/// Parameters of a simulated counting run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountSimulation {
    /// Postselected pairs per analyzer basis pair; each outcome receives
    /// its probability share.
    pub pairs_per_setting: f64,
    pub duration_s: f64,
    pub singles_hz: [f64; 2],
    pub power_mw: Option<f64>,
    /// Adds accidentals at `S1·S2/f_rep` when set.
    pub pulse_rate_hz: Option<f64>,
    pub poisson: bool,
}

impl CountSimulation {
    pub fn new(pairs_per_setting: f64) -> Self {
        CountSimulation {
            pairs_per_setting,
            duration_s: 1.0,
            singles_hz: [0.0, 0.0],
            power_mw: None,
            pulse_rate_hz: None,
            poisson: true,
        }
    }
}

pub fn simulate_counts(
    state: &TwoPhotonPolState,
    settings: &[(AnalyzerSetting, AnalyzerSetting)],
    sim: &CountSimulation,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    if !(sim.pairs_per_setting >= 0.0) || !sim.pairs_per_setting.is_finite() {
        return Err(Error::InvalidParameter("pairs per setting must be finite and >= 0".into()));
    }
    let accidentals = match sim.pulse_rate_hz {
        Some(f) => accidental_rate(sim.singles_hz[0], sim.singles_hz[1], f)? * sim.duration_s,
        None => 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(settings.len());
    for (s1, s2) in settings {
        s1.validate()?;
        s2.validate()?;
        let mean = sim.pairs_per_setting * coincidence_prob(state, s1, s2) + accidentals;
        let n = if sim.poisson && mean > 0.0 {
            Poisson::new(mean)
                .map_err(|e| Error::InvalidParameter(format!("{e}")))?
                .sample(&mut rng)
        } else {
            mean
        };
        let record = CountRecord {
            settings: [*s1, *s2],
            coincidences: n,
            singles_hz: sim.singles_hz,
            duration_s: sim.duration_s,
            power_mw: sim.power_mw,
        };
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}
