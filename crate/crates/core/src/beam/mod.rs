//! Knife-edge beam profiling: edge-scan synthesis and fitting, caustic
//! (M²) fits, sampling checks and modal M² prediction.

mod caustic;
mod edge;
mod synth;

pub use caustic::{fit_caustic, iso_sampling_check, CausticPoint, IsoCheck, M2Fit};
pub use edge::{fit_edge_scan, EdgeFit, EdgeFitOptions, EdgeWeighting};
pub use synth::{synth_scan, BeamModel, BeamProfile, ScanNoise, ScanPlan, XSampling};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::model::ModeIndex;
use crate::numeric::{erfc, hermite_function};
use num_traits::Float;

/// Orientation of the knife edge. A vertical edge scans across the
/// waveguide width (mode index `i`), a horizontal edge across its depth
/// (mode index `j`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScanDirection {
    Horizontal,
    Vertical,
}

impl ScanDirection {
    pub const ALL: [ScanDirection; 2] = [ScanDirection::Horizontal, ScanDirection::Vertical];

    /// 1-D mode order along the scanned axis.
    pub fn order(self, mode: ModeIndex) -> u32 {
        match self {
            ScanDirection::Vertical => mode.i,
            ScanDirection::Horizontal => mode.j,
        }
    }
}

impl fmt::Display for ScanDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanDirection::Horizontal => "horizontal",
            ScanDirection::Vertical => "vertical",
        })
    }
}

impl core::str::FromStr for ScanDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "horizontal" | "h" => Ok(ScanDirection::Horizontal),
            "vertical" | "v" => Ok(ScanDirection::Vertical),
            other => Err(Error::InvalidParameter(format!("unknown scan direction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnifeRecord {
    pub z_mm: f64,
    pub x_um: f64,
    pub counts: f64,
    pub duration_s: f64,
    pub direction: ScanDirection,
}

impl KnifeRecord {
    pub fn rate(&self) -> f64 {
        self.counts / self.duration_s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnifeEdgeScan {
    pub records: Vec<KnifeRecord>,
}

impl KnifeEdgeScan {
    pub fn validate(&self) -> Result<()> {
        for (k, r) in self.records.iter().enumerate() {
            if !(r.counts >= 0.0) || !(r.duration_s > 0.0) || !r.z_mm.is_finite() || !r.x_um.is_finite() {
                return Err(Error::InvalidParameter(format!("scan record {k} is invalid: {r:?}")));
            }
        }
        Ok(())
    }

    /// Rate-vs-position points grouped by plane, in ascending z.
    pub fn planes(&self, direction: ScanDirection) -> Vec<(f64, Vec<(f64, f64)>)> {
        let mut by_z: BTreeMap<u64, (f64, Vec<(f64, f64)>)> = BTreeMap::new();
        for r in self.records.iter().filter(|r| r.direction == direction) {
            // Order-preserving key for finite floats.
            let bits = r.z_mm.to_bits();
            let key = if r.z_mm.is_sign_negative() { !bits } else { bits | (1 << 63) };
            by_z.entry(key).or_insert((r.z_mm, Vec::new())).1.push((r.x_um, r.rate()));
        }
        by_z.into_values().collect()
    }

    pub fn directions(&self) -> Vec<ScanDirection> {
        ScanDirection::ALL
            .into_iter()
            .filter(|d| self.records.iter().any(|r| r.direction == *d))
            .collect()
    }
}

/// Power fraction passing a knife edge at `x` for a Gaussian beam with
/// 1/e² radius `w` centred at `x0`.
pub fn knife_transmission(w: f64, x0: f64, x: f64) -> f64 {
    0.5 * erfc(core::f64::consts::SQRT_2 * (x - x0) / w)
}

/// `integral_t^inf phi_n(s)^2 ds` for the normalized Hermite function
/// `phi_n`, from `I_n = I_(n-1) + phi_(n-1) phi_n / sqrt(2n)`.
pub fn hermite_tail(n: usize, t: f64) -> f64 {
    let mut acc = 0.5 * erfc(t);
    let mut prev = hermite_function(0, t);
    for k in 1..=n {
        let cur = hermite_function(k, t);
        acc += prev * cur / (2.0 * k as f64).sqrt();
        prev = cur;
    }
    acc
}

/// Knife transmission for an incoherent Hermite-Gauss mixture sharing the
/// radius `w`; `weights[n]` is the power in order `n`.
pub fn mixture_transmission(weights: &[f64], w: f64, x0: f64, x: f64) -> f64 {
    let t = core::f64::consts::SQRT_2 * (x - x0) / w;
    weights.iter().enumerate().map(|(n, p)| p * hermite_tail(n, t)).sum()
}

/// M² of an incoherent Hermite-Gauss mixture with a common waist,
/// `sum p_n (2n + 1)`.
pub fn predict_m2(weights: &[f64]) -> Result<f64> {
    if let Some((n, p)) = weights.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidParameter(format!("mode weight p_{n} = {p} is negative or not finite")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!("mode weights sum to {total}, not 1")));
    }
    Ok(weights.iter().enumerate().map(|(n, p)| p * (2 * n + 1) as f64).sum())
}

/// Collapses 2-D transverse-mode weights to 1-D order weights along the
/// scanned axis.
pub fn axis_order_weights(modes: &BTreeMap<ModeIndex, f64>, direction: ScanDirection) -> Vec<f64> {
    let mut out = Vec::new();
    for (m, w) in modes {
        let n = direction.order(*m) as usize;
        if out.len() <= n {
            out.resize(n + 1, 0.0);
        }
        out[n] += w;
    }
    out
}

pub(crate) fn describe_counts(inner: usize, outer: usize) -> String {
    format!("inner={inner} outer={outer}")
}


/// Per-plane edge fits and the caustic fit of one scan direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanFit {
    pub direction: ScanDirection,
    pub planes: Vec<(f64, EdgeFit)>,
    pub caustic: M2Fit,
    pub iso: IsoCheck,
}

impl ScanFit {
    pub fn min_r_squared(&self) -> f64 {
        self.planes.iter().map(|(_, f)| f.r_squared).fold(1.0, f64::min)
    }
}

/// Fits every plane of `direction`, then the caustic through the fitted radii.
pub fn fit_scan(scan: &KnifeEdgeScan, direction: ScanDirection, lambda_nm: f64, options: &EdgeFitOptions) -> Result<ScanFit> {
    scan.validate()?;
    let planes = scan
        .planes(direction)
        .into_iter()
        .map(|(z, pts)| fit_edge_scan(&pts, options).map(|f| (z, f)))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<CausticPoint> = planes
        .iter()
        .map(|(z, f)| CausticPoint {
            z_mm: *z,
            w_um: f.w_um,
            sigma_w_um: (f.sigma_w_um > 0.0).then_some(f.sigma_w_um),
        })
        .collect();
    let caustic = fit_caustic(&points, lambda_nm)?;
    let zs: Vec<f64> = planes.iter().map(|(z, _)| *z).collect();
    let iso = iso_sampling_check(&zs, &caustic);
    Ok(ScanFit {
        direction,
        planes,
        caustic,
        iso,
    })
}
