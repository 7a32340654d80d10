use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use super::counts::CountRecord;
use super::{coincidence_prob, AnalyzerSetting, TwoPhotonPolState};
use crate::error::{Error, Result};
use crate::numeric::wrap;

const ANGLE_TOL_DEG: f64 = 1e-3;
const LINEAR_TOL: f64 = 1e-6;

/// Analyzer angles for arm 1 (`a`, `a'`) and arm 2 (`b`, `b'`), in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshAngles {
    pub a_deg: f64,
    pub a_prime_deg: f64,
    pub b_deg: f64,
    pub b_prime_deg: f64,
}

impl Default for ChshAngles {
    fn default() -> Self {
        ChshAngles {
            a_deg: 0.0,
            a_prime_deg: 45.0,
            b_deg: 22.5,
            b_prime_deg: 67.5,
        }
    }
}

impl ChshAngles {
    fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.a_deg, self.b_deg),
            (self.a_deg, self.b_prime_deg),
            (self.a_prime_deg, self.b_deg),
            (self.a_prime_deg, self.b_prime_deg),
        ]
    }

    pub fn rotated(&self, delta_deg: f64) -> Self {
        ChshAngles {
            a_deg: self.a_deg + delta_deg,
            a_prime_deg: self.a_prime_deg + delta_deg,
            b_deg: self.b_deg + delta_deg,
            b_prime_deg: self.b_prime_deg + delta_deg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub a_deg: f64,
    pub b_deg: f64,
    pub e: f64,
    pub sigma: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChshResult {
    /// E(a,b), E(a,b'), E(a',b), E(a',b').
    pub correlations: [Correlation; 4],
    pub s: f64,
    pub sigma: f64,
    /// Index of the correlation entering with a minus sign.
    pub negated_term: usize,
    pub violation_sigmas: Option<f64>,
}

/// The sixteen setting pairs (both outcomes of each basis) in the order
/// basis pair, arm-1 outcome, arm-2 outcome.
pub fn chsh_settings(angles: &ChshAngles) -> Vec<(AnalyzerSetting, AnalyzerSetting)> {
    let mut out = Vec::with_capacity(16);
    for (x, y) in angles.pairs() {
        for o1 in [0.0, 90.0] {
            for o2 in [0.0, 90.0] {
                out.push((AnalyzerSetting::linear(x + o1), AnalyzerSetting::linear(y + o2)));
            }
        }
    }
    out
}

/// Chooses the CHSH combination with the largest magnitude. The four
/// variants differ in which correlation carries the minus sign; ties keep
/// the conventional `E(a,b) − E(a,b') + E(a',b) + E(a',b')`.
fn combine(correlations: [Correlation; 4]) -> ChshResult {
    let mut best = (1usize, f64::NEG_INFINITY);
    for k in [1usize, 0, 2, 3] {
        let s: f64 = correlations
            .iter()
            .enumerate()
            .map(|(i, c)| if i == k { -c.e } else { c.e })
            .sum::<f64>()
            .abs();
        if s > best.1 + 1e-12 {
            best = (k, s);
        }
    }
    let sigma = correlations.iter().map(|c| c.sigma * c.sigma).sum::<f64>().sqrt();
    ChshResult {
        correlations,
        s: best.1,
        sigma,
        negated_term: best.0,
        violation_sigmas: if sigma > 0.0 { Some((best.1 - 2.0) / sigma) } else { None },
    }
}

pub fn chsh_from_state(state: &TwoPhotonPolState) -> ChshResult {
    chsh_from_state_with(state, &ChshAngles::default())
}

pub fn chsh_from_state_with(state: &TwoPhotonPolState, angles: &ChshAngles) -> ChshResult {
    let corr = angles.pairs().map(|(x, y)| {
        let mut e = 0.0;
        for (o1, s1) in [(0.0, 1.0), (90.0, -1.0)] {
            for (o2, s2) in [(0.0, 1.0), (90.0, -1.0)] {
                let p = coincidence_prob(
                    state,
                    &AnalyzerSetting::linear(x + o1),
                    &AnalyzerSetting::linear(y + o2),
                );
                e += s1 * s2 * p;
            }
        }
        Correlation {
            a_deg: x,
            b_deg: y,
            e,
            sigma: 0.0,
            total: 1.0,
        }
    });
    combine(corr)
}

/// Linear analysis angle in [0, 180) of a setting, or `None` if the
/// analyzer passes an elliptical state.
fn linear_angle(setting: &AnalyzerSetting) -> Option<f64> {
    let [s1, s2, s3] = setting.stokes();
    if s3.abs() > LINEAR_TOL {
        return None;
    }
    Some(wrap(0.5 * s2.atan2(s1).to_degrees(), 180.0))
}

fn same_angle(x: f64, y: f64) -> bool {
    let d = wrap(x - y, 180.0);
    d < ANGLE_TOL_DEG || 180.0 - d < ANGLE_TOL_DEG
}

fn sign_label(s: f64) -> &'static str {
    if s > 0.0 {
        "+"
    } else {
        "-"
    }
}

/// Evaluates S from counts. Records at the same setting are summed.
pub fn chsh_from_records(records: &[CountRecord], angles: &ChshAngles) -> Result<ChshResult> {
    let classified: Vec<(Option<f64>, Option<f64>, f64)> = records
        .iter()
        .map(|r| {
            r.validate()?;
            Ok((linear_angle(&r.settings[0]), linear_angle(&r.settings[1]), r.coincidences))
        })
        .collect::<Result<_>>()?;
    let mut missing: Vec<String> = Vec::new();
    let mut corr = Vec::with_capacity(4);
    for (x, y) in angles.pairs() {
        let mut n = [[0.0f64; 2]; 2];
        for (k1, (o1, s1)) in [(0.0, 1.0), (90.0, -1.0)].into_iter().enumerate() {
            for (k2, (o2, s2)) in [(0.0, 1.0), (90.0, -1.0)].into_iter().enumerate() {
                let mut found = false;
                for &(t1, t2, c) in &classified {
                    if let (Some(t1), Some(t2)) = (t1, t2) {
                        if same_angle(t1, x + o1) && same_angle(t2, y + o2) {
                            n[k1][k2] += c;
                            found = true;
                        }
                    }
                }
                if !found {
                    missing.push(format!(
                        "a={x} b={y} ({}{})",
                        sign_label(s1),
                        sign_label(s2)
                    ));
                }
            }
        }
        let total = n[0][0] + n[0][1] + n[1][0] + n[1][1];
        corr.push((x, y, n, total));
    }
    if !missing.is_empty() {
        return Err(Error::MissingSettings { missing });
    }
    let mut out = [Correlation {
        a_deg: 0.0,
        b_deg: 0.0,
        e: 0.0,
        sigma: 0.0,
        total: 0.0,
    }; 4];
    for (slot, (x, y, n, total)) in out.iter_mut().zip(corr) {
        if !(total > 0.0) {
            return Err(Error::DegenerateInput(format!("no coincidences for a={x} b={y}")));
        }
        let e = (n[0][0] + n[1][1] - n[0][1] - n[1][0]) / total;
        *slot = Correlation {
            a_deg: x,
            b_deg: y,
            e,
            sigma: ((1.0 - e * e).max(0.0) / total).sqrt(),
            total,
        };
    }
    Ok(combine(out))
}
