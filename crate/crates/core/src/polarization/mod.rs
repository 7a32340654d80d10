//! Postselected two-photon polarization states, wave-plate analyzers,
//! count corrections, visibility fits and CHSH evaluation.
//!
//! Conventions: Jones vectors are written in the {H, V} basis, retarder
//! fast-axis angles are measured from H, and the two-photon basis is ordered
//! {HH, HV, VH, VV} with arm 1 first. A photon meets the quarter-wave plate,
//! then the half-wave plate, then the polarizer, so the projected state is
//! `QWP† · HWP† · |pol⟩`.

mod chsh;
mod counts;

#[cfg(test)]
mod tests;

pub use chsh::{
    chsh_from_records, chsh_from_state, chsh_from_state_with, chsh_settings, ChshAngles,
    ChshResult, Correlation,
};
pub use counts::{
    accidental_rate, correct_counts, scan_angle_deg, simulate_counts, visibility,
    visibility_from_records, CorrectedCounts, CorrectionOptions, CountRecord, CountSimulation,
    VisibilityFit,
};

use alloc::format;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Matrix2, Matrix4, Vector2};
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};

pub type Jones = Vector2<Complex64>;
pub type Projector = Matrix2<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Density operator for a postselected photon pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonPolState {
    rho: Matrix4<Complex64>,
}

impl TwoPhotonPolState {
    pub fn new(rho: Matrix4<Complex64>) -> Result<Self> {
        let state = TwoPhotonPolState { rho };
        state.validate()?;
        Ok(state)
    }

    pub fn pure(psi: [Complex64; 4]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let mut rho = Matrix4::zeros();
        for r in 0..4 {
            for k in 0..4 {
                rho[(r, k)] = psi[r] * psi[k].conj() / norm;
            }
        }
        Self::new(rho)
    }

    pub fn maximally_mixed() -> Self {
        TwoPhotonPolState {
            rho: Matrix4::identity() * c(0.25),
        }
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    pub fn validate(&self) -> Result<()> {
        let rho = &self.rho;
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.rho + self.rho.adjoint()) * c(0.5);
        herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    /// Applies single-photon unitaries `u1` and `u2` to the two arms.
    pub fn transformed(&self, u1: &Matrix2<Complex64>, u2: &Matrix2<Complex64>) -> Self {
        let u = u1.kronecker(u2);
        TwoPhotonPolState {
            rho: u * self.rho * u.adjoint(),
        }
    }
}

/// Imperfections of the postselected state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Weight of the entangled component against white noise.
    pub werner_p: f64,
    /// Weight of incoherent same-polarization (HH, VV) pairs.
    pub contamination: f64,
    /// Mean number of pairs per pump pulse.
    pub mean_pairs_per_pulse: f64,
    pub phase_rad: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            werner_p: 1.0,
            contamination: 0.0,
            mean_pairs_per_pulse: 0.0,
            phase_rad: 0.0,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.werner_p) {
            return Err(Error::InvalidParameter(format!(
                "werner_p {} outside [0, 1]",
                self.werner_p
            )));
        }
        if !(self.contamination >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "contamination {} must be >= 0",
                self.contamination
            )));
        }
        if !(self.mean_pairs_per_pulse >= 0.0) || !self.mean_pairs_per_pulse.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mean pairs per pulse {} must be finite and >= 0",
                self.mean_pairs_per_pulse
            )));
        }
        if !self.phase_rad.is_finite() {
            return Err(Error::InvalidParameter("phase must be finite".into()));
        }
        Ok(())
    }

    /// Fraction of postselected coincidences in which the two detected
    /// photons come from different pairs of a double-pair pulse. Of the six
    /// photon pairings in a double pair, four are cross pairings; a single
    /// pair contributes one pairing and double pairs occur µ/2 times as often.
    pub fn double_pair_weight(&self) -> f64 {
        let mu = self.mean_pairs_per_pulse;
        2.0 * mu / (1.0 + 3.0 * mu)
    }
}

fn basis_projector(k: usize) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    m[(k, k)] = c(1.0);
    m
}

/// Builds `(|HV⟩ + e^{iφ}|VH⟩)/√2` degraded by white noise, same-polarization
/// contamination and cross-pair coincidences from double pairs.
pub fn shih_alley_state(noise: &NoiseParams) -> Result<TwoPhotonPolState> {
    noise.validate()?;
    let amp = FRAC_1_SQRT_2;
    let psi = [
        c(0.0),
        c(amp),
        Complex64::from_polar(amp, noise.phase_rad),
        c(0.0),
    ];
    let ideal = TwoPhotonPolState::pure(psi)?.rho;
    let white = Matrix4::<Complex64>::identity() * c(0.25);
    let same = (basis_projector(0) + basis_projector(3)) * c(0.5);
    let p = noise.werner_p;
    let eps = noise.contamination;
    let wd = noise.double_pair_weight();
    let single = (ideal * c(p) + white * c(1.0 - p)) * c(1.0 - eps) + same * c(eps);
    let rho = single * c(1.0 - wd) + white * c(wd);
    TwoPhotonPolState::new(rho)
}

/// Share of same-polarization coincidences in the H/V basis that come from
/// double pairs.
pub fn double_pair_false_fraction(noise: &NoiseParams) -> Result<f64> {
    let state = shih_alley_state(noise)?;
    let h = AnalyzerSetting::linear(0.0);
    let v = AnalyzerSetting::linear(90.0);
    let false_total = coincidence_prob(&state, &h, &h) + coincidence_prob(&state, &v, &v);
    if false_total <= 0.0 {
        return Ok(0.0);
    }
    Ok(0.5 * noise.double_pair_weight() / false_total)
}

/// Wave-plate and polarizer angles of one analyzer arm, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerSetting {
    pub qwp_deg: f64,
    pub hwp_deg: f64,
    pub pol_deg: f64,
}

impl AnalyzerSetting {
    pub fn new(qwp_deg: f64, hwp_deg: f64, pol_deg: f64) -> Self {
        AnalyzerSetting {
            qwp_deg,
            hwp_deg,
            pol_deg,
        }
    }

    /// Linear analysis at `angle_deg`: the half-wave plate rotates the
    /// polarizer axis and the quarter-wave plate is aligned with it.
    pub fn linear(angle_deg: f64) -> Self {
        AnalyzerSetting::new(angle_deg, angle_deg / 2.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.qwp_deg.is_finite() && self.hwp_deg.is_finite() && self.pol_deg.is_finite()) {
            return Err(Error::InvalidParameter("analyzer angles must be finite".into()));
        }
        Ok(())
    }

    /// State passed by the analyzer chain.
    pub fn pass_state(&self) -> Jones {
        let pol = self.pol_deg.to_radians();
        let out = Jones::new(c(pol.cos()), c(pol.sin()));
        let q = retarder(self.qwp_deg.to_radians(), PI / 2.0);
        let h = retarder(self.hwp_deg.to_radians(), PI);
        q.adjoint() * (h.adjoint() * out)
    }

    /// Stokes vector (s1, s2, s3) of the pass state.
    pub fn stokes(&self) -> [f64; 3] {
        let psi = self.pass_state();
        let (a, b) = (psi[0], psi[1]);
        let cross = a.conj() * b;
        [a.norm_sqr() - b.norm_sqr(), 2.0 * cross.re, 2.0 * cross.im]
    }
}

/// Jones matrix of a retarder with fast axis at `theta` from H.
pub fn retarder(theta: f64, retardance: f64) -> Matrix2<Complex64> {
    let (s, co) = theta.sin_cos();
    let rot = Matrix2::new(c(co), c(-s), c(s), c(co));
    let phase = Matrix2::new(c(1.0), c(0.0), c(0.0), Complex64::from_polar(1.0, retardance));
    rot * phase * rot.transpose()
}

/// Real rotation of the polarization plane by `theta`.
pub fn rotation(theta: f64) -> Matrix2<Complex64> {
    let (s, co) = theta.sin_cos();
    Matrix2::new(c(co), c(-s), c(s), c(co))
}

pub fn analyzer_projector(setting: &AnalyzerSetting) -> Projector {
    let psi = setting.pass_state();
    psi * psi.adjoint()
}

pub fn coincidence_prob(
    state: &TwoPhotonPolState,
    setting_1: &AnalyzerSetting,
    setting_2: &AnalyzerSetting,
) -> f64 {
    let p = analyzer_projector(setting_1).kronecker(&analyzer_projector(setting_2));
    (state.rho * p).trace().re.clamp(0.0, 1.0)
}
