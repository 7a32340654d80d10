use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{knife_transmission, mixture_transmission, predict_m2, KnifeEdgeScan, KnifeRecord, ScanDirection};
use crate::error::{Error, Result};
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub enum BeamProfile {
    /// Incoherent Hermite-Gauss mixture, power `weights[n]` in order `n`,
    /// all orders sharing the fundamental's radius.
    HermiteGauss { weights: Vec<f64> },
    /// Gaussian intensity that diverges `m2` times faster than a coherent
    /// beam of the same waist.
    PartiallyCoherent { m2: f64 },
}

/// One transverse axis of a beam around its waist.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamModel {
    pub lambda_nm: f64,
    pub w0_um: f64,
    pub z0_mm: f64,
    pub profile: BeamProfile,
}

impl BeamModel {
    pub fn gaussian(lambda_nm: f64, w0_um: f64, z0_mm: f64) -> Self {
        Self {
            lambda_nm,
            w0_um,
            z0_mm,
            profile: BeamProfile::PartiallyCoherent { m2: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_nm > 0.0) || !(self.w0_um > 0.0) || !self.z0_mm.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid beam model {self:?}")));
        }
        match &self.profile {
            BeamProfile::HermiteGauss { weights } => predict_m2(weights).map(|_| ()),
            BeamProfile::PartiallyCoherent { m2 } if *m2 >= 1.0 => Ok(()),
            BeamProfile::PartiallyCoherent { m2 } => {
                Err(Error::InvalidParameter(format!("M² must be at least 1, got {m2}")))
            }
        }
    }

    /// Second-moment beam quality factor.
    pub fn m2(&self) -> f64 {
        match &self.profile {
            BeamProfile::HermiteGauss { weights } => weights.iter().enumerate().map(|(n, p)| p * (2 * n + 1) as f64).sum(),
            BeamProfile::PartiallyCoherent { m2 } => *m2,
        }
    }

    /// Rayleigh range [mm] of the second-moment radius.
    pub fn rayleigh_range_mm(&self) -> f64 {
        core::f64::consts::PI * self.w0_um * self.w0_um / (self.lambda_nm * self.embedded_m2())
    }

    fn embedded_m2(&self) -> f64 {
        match &self.profile {
            BeamProfile::HermiteGauss { .. } => 1.0,
            BeamProfile::PartiallyCoherent { m2 } => *m2,
        }
    }

    /// Radius of the underlying Gaussian (the fundamental for a mixture).
    pub fn gaussian_radius_um(&self, z_mm: f64) -> f64 {
        let d = (z_mm - self.z0_mm) / self.rayleigh_range_mm();
        self.w0_um * (1.0 + d * d).sqrt()
    }

    /// Second-moment (1/e² equivalent) radius.
    pub fn second_moment_radius_um(&self, z_mm: f64) -> f64 {
        self.gaussian_radius_um(z_mm) * (self.m2() / self.embedded_m2()).sqrt()
    }

    /// Fraction of power past an edge at `x_um` for a beam centred at `xc_um`.
    pub fn transmission(&self, z_mm: f64, xc_um: f64, x_um: f64) -> f64 {
        let w = self.gaussian_radius_um(z_mm);
        match &self.profile {
            BeamProfile::HermiteGauss { weights } => mixture_transmission(weights, w, xc_um, x_um),
            BeamProfile::PartiallyCoherent { .. } => knife_transmission(w, xc_um, x_um),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum XSampling {
    Absolute(Vec<f64>),
    /// Offsets from the beam centre in units of the local second-moment radius.
    RelativeToWidth(Vec<f64>),
}

impl XSampling {
    pub fn len(&self) -> usize {
        match self {
            XSampling::Absolute(v) | XSampling::RelativeToWidth(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlan {
    pub z_mm: Vec<f64>,
    pub x: XSampling,
    pub center_x_um: f64,
    pub direction: ScanDirection,
    pub duration_s: f64,
    /// Count rate with the edge fully withdrawn.
    pub peak_rate_hz: f64,
    pub background_hz: f64,
}

impl ScanPlan {
    /// `points` edge positions evenly spread over `±half_span` local radii.
    pub fn relative(z_mm: Vec<f64>, points: usize, half_span: f64, direction: ScanDirection) -> Self {
        let x = crate::numeric::linspace(-half_span, half_span, points);
        Self {
            z_mm,
            x: XSampling::RelativeToWidth(x),
            center_x_um: 0.0,
            direction,
            duration_s: 1.0,
            peak_rate_hz: 1e4,
            background_hz: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.z_mm.is_empty() || self.x.len() < 8 {
            return Err(Error::InvalidParameter(format!(
                "scan plan needs at least one plane and 8 edge positions, got {} and {}",
                self.z_mm.len(),
                self.x.len()
            )));
        }
        if !(self.duration_s > 0.0) || !(self.peak_rate_hz >= 0.0) || !(self.background_hz >= 0.0) {
            return Err(Error::InvalidParameter("scan duration must be positive and rates nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanNoise {
    #[default]
    None,
    Poisson,
}

/// Knife-edge records for `beam` sampled on `plan`. Deterministic for a
/// given seed.
pub fn synth_scan(beam: &BeamModel, plan: &ScanPlan, noise: ScanNoise, seed: u64) -> Result<KnifeEdgeScan> {
    beam.validate()?;
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(plan.z_mm.len() * plan.x.len());
    for &z in &plan.z_mm {
        let xs: Vec<f64> = match &plan.x {
            XSampling::Absolute(v) => v.clone(),
            XSampling::RelativeToWidth(v) => {
                let w = beam.second_moment_radius_um(z);
                v.iter().map(|o| plan.center_x_um + o * w).collect()
            }
        };
        for x in xs {
            let t = beam.transmission(z, plan.center_x_um, x);
            let mean = (plan.peak_rate_hz * t + plan.background_hz) * plan.duration_s;
            let counts = match noise {
                ScanNoise::None => mean,
                ScanNoise::Poisson if mean > 0.0 => Poisson::new(mean)
                    .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?
                    .sample(&mut rng),
                ScanNoise::Poisson => 0.0,
            };
            records.push(KnifeRecord {
                z_mm: z,
                x_um: x,
                counts,
                duration_s: plan.duration_s,
                direction: plan.direction,
            });
        }
    }
    Ok(KnifeEdgeScan { records })
}
