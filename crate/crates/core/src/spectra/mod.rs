//! Pump envelope, joint spectral intensity, spectral filters, island
//! weights and spatial purity.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{DispersionModel, FieldLabel, HGModeBasis, ModeIndex, ModeTriplet, Quadrature};
use crate::numeric::{angular_frequency, bisect};
use crate::phasematch::{mismatch, BandLayer, BulkGrid, GridSpec, QpmGrating, SpectralGrid};
use num_traits::Float;

const FOUR_LN2: f64 = 4.0 * core::f64::consts::LN_2;

/// Gaussian pump spectrum. The FWHM is that of the intensity, converted
/// exactly to angular frequency at the band edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpEnvelope {
    pub center_nm: f64,
    pub fwhm_nm: f64,
}

impl Default for PumpEnvelope {
    fn default() -> Self {
        Self {
            center_nm: 399.9,
            fwhm_nm: 1.0,
        }
    }
}

impl PumpEnvelope {
    pub fn new(center_nm: f64, fwhm_nm: f64) -> Result<Self> {
        if !(center_nm > 0.0) || !(fwhm_nm > 0.0) || fwhm_nm >= 2.0 * center_nm {
            return Err(Error::InvalidParameter(format!(
                "invalid pump envelope: center {center_nm} nm, FWHM {fwhm_nm} nm"
            )));
        }
        Ok(Self { center_nm, fwhm_nm })
    }

    pub fn center_omega(&self) -> f64 {
        angular_frequency(self.center_nm)
    }

    pub fn fwhm_omega(&self) -> f64 {
        angular_frequency(self.center_nm - 0.5 * self.fwhm_nm) - angular_frequency(self.center_nm + 0.5 * self.fwhm_nm)
    }
}

/// Spectral amplitude `alpha(omega_H + omega_V)`, peak 1.
pub fn pump_amplitude(pump: &PumpEnvelope, omega_sum: f64) -> f64 {
    let d = (omega_sum - pump.center_omega()) / pump.fwhm_omega();
    (-0.5 * FOUR_LN2 * d * d).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterShape {
    Gaussian,
    Rectangular,
}

/// Intensity transmission filter on one down-converted arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFilter {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    pub shape: FilterShape,
    pub arm: FieldLabel,
}

impl SpectralFilter {
    pub fn new(center_nm: f64, fwhm_nm: f64, shape: FilterShape, arm: FieldLabel) -> Result<Self> {
        if arm == FieldLabel::P {
            return Err(Error::InvalidParameter("filters act on the H or V arm".into()));
        }
        if !(center_nm > 0.0) || !(fwhm_nm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid filter: center {center_nm} nm, FWHM {fwhm_nm} nm"
            )));
        }
        Ok(Self {
            center_nm,
            fwhm_nm,
            shape,
            arm,
        })
    }

    pub fn gaussian(center_nm: f64, fwhm_nm: f64, arm: FieldLabel) -> Result<Self> {
        Self::new(center_nm, fwhm_nm, FilterShape::Gaussian, arm)
    }

    pub fn transmission(&self, lambda_nm: f64) -> f64 {
        let d = lambda_nm - self.center_nm;
        match self.shape {
            FilterShape::Gaussian => (-FOUR_LN2 * d * d / (self.fwhm_nm * self.fwhm_nm)).exp(),
            FilterShape::Rectangular => {
                if d.abs() <= 0.5 * self.fwhm_nm {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Per-triplet pair-generation intensity over a (lambda_H, lambda_V) grid.
///
/// Filter transmissions are kept per axis and applied on read, so filters on
/// different arms commute exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrum {
    pub grid: SpectralGrid,
    /// Unfiltered layers, `eta |alpha|^2 |phi|^2`.
    pub layers: Vec<BandLayer>,
    /// Overlap efficiency applied to each layer.
    pub efficiencies: Vec<f64>,
    pub transmission_h: Vec<f64>,
    pub transmission_v: Vec<f64>,
    pub pump: PumpEnvelope,
    pub grating: QpmGrating,
}

impl JointSpectrum {
    pub fn triplets(&self) -> impl Iterator<Item = ModeTriplet> + '_ {
        self.layers.iter().map(|l| l.triplet)
    }

    pub fn is_filtered(&self) -> bool {
        self.transmission_h.iter().chain(&self.transmission_v).any(|t| *t != 1.0)
    }

    /// Layer `k` with filter transmissions applied.
    pub fn layer_values(&self, k: usize) -> Vec<f64> {
        let nh = self.grid.nh();
        self.layers[k]
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * (self.transmission_h[i % nh] * self.transmission_v[i / nh]))
            .collect()
    }

    /// Incoherent sum of all filtered layers.
    pub fn total(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.grid.len()];
        for k in 0..self.layers.len() {
            for (o, v) in out.iter_mut().zip(self.layer_values(k)) {
                *o += v;
            }
        }
        out
    }

    pub fn layer_integral(&self, k: usize) -> f64 {
        self.grid.integrate(&self.layer_values(k))
    }
}

/// Joint spectrum with overlap efficiencies from a mode basis.
pub fn joint_spectrum(
    dm: &DispersionModel,
    grating: &QpmGrating,
    pump: &PumpEnvelope,
    basis: &HGModeBasis,
    triplets: &[ModeTriplet],
    spec: &GridSpec,
) -> Result<JointSpectrum> {
    let q = Quadrature::default();
    let weighted: Vec<_> = triplets
        .iter()
        .map(|t| (*t, basis.triplet_overlap_efficiency(t, &q)))
        .collect();
    joint_spectrum_weighted(dm, grating, pump, &weighted, spec)
}

/// Joint spectrum with explicit per-triplet efficiencies.
pub fn joint_spectrum_weighted(
    dm: &DispersionModel,
    grating: &QpmGrating,
    pump: &PumpEnvelope,
    triplets: &[(ModeTriplet, f64)],
    spec: &GridSpec,
) -> Result<JointSpectrum> {
    if triplets.is_empty() {
        return Err(Error::InvalidParameter("joint spectrum needs at least one triplet".into()));
    }
    if let Some((t, e)) = triplets.iter().find(|(_, e)| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::InvalidParameter(format!("efficiency of {t} must be finite and nonnegative, got {e}")));
    }
    let grid = SpectralGrid::new(spec)?;
    let mut envelope = Vec::with_capacity(grid.len());
    for &wv in &grid.omega_v {
        for &wh in &grid.omega_h {
            envelope.push(pump_amplitude(pump, wh + wv).powi(2));
        }
    }
    // Far from the pump strip the envelope underflows to zero; the pump
    // wavelength there may lie outside the dispersion model's range.
    let bulk = BulkGrid::masked(dm, grating, grid, |k| envelope[k] > 0.0)?;
    let mut layers = Vec::with_capacity(triplets.len());
    for (t, eta) in triplets {
        let mut values = bulk.pm_intensity(dm, grating, t)?;
        for (v, a) in values.iter_mut().zip(&envelope) {
            *v *= eta * a;
        }
        layers.push(BandLayer { triplet: *t, values });
    }
    Ok(JointSpectrum {
        transmission_h: alloc::vec![1.0; bulk.grid.nh()],
        transmission_v: alloc::vec![1.0; bulk.grid.nv()],
        grid: bulk.grid,
        layers,
        efficiencies: triplets.iter().map(|(_, e)| *e).collect(),
        pump: *pump,
        grating: *grating,
    })
}

/// Multiplies every layer by the filter transmission along its arm.
pub fn apply_filter(js: &JointSpectrum, filter: &SpectralFilter) -> JointSpectrum {
    let mut out = js.clone();
    let (axis, t) = match filter.arm {
        FieldLabel::V => (&js.grid.lambda_v_nm, &mut out.transmission_v),
        _ => (&js.grid.lambda_h_nm, &mut out.transmission_h),
    };
    for (t, &l) in t.iter_mut().zip(axis) {
        *t *= filter.transmission(l);
    }
    out
}

/// Integrated intensity of each island, normalized to unit total.
pub fn island_weights(js: &JointSpectrum) -> Result<Vec<(ModeTriplet, f64)>> {
    let raw: Vec<f64> = (0..js.layers.len()).map(|k| js.layer_integral(k)).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateInput("joint spectrum carries no intensity".into()));
    }
    Ok(js.triplets().zip(raw).map(|(t, r)| (t, r / total)).collect())
}

/// Island weight of `target`; zero when the target has no layer.
pub fn spatial_purity(js: &JointSpectrum, target: &ModeTriplet) -> Result<f64> {
    Ok(island_weights(js)?
        .into_iter()
        .filter(|(t, _)| t == target)
        .map(|(_, w)| w)
        .sum())
}

/// Transverse-mode distribution of `arm` after an optional herald filter on
/// the conjugate arm.
pub fn heralded_mode_weights(
    js: &JointSpectrum,
    arm: FieldLabel,
    herald: Option<&SpectralFilter>,
) -> Result<BTreeMap<ModeIndex, f64>> {
    if arm == FieldLabel::P {
        return Err(Error::InvalidParameter("mode weights are defined for the H or V arm".into()));
    }
    if let Some(f) = herald {
        if f.arm == arm {
            return Err(Error::InvalidParameter(format!("herald filter acts on {arm}, the analyzed arm")));
        }
    }
    let filtered;
    let js = match herald {
        Some(f) => {
            filtered = apply_filter(js, f);
            &filtered
        }
        None => js,
    };
    let mut out = BTreeMap::new();
    for (t, w) in island_weights(js)? {
        *out.entry(t.mode(arm)).or_insert(0.0) += w;
    }
    Ok(out)
}

/// Point where the band of `triplet` crosses the pump centre line
/// `omega_H + omega_V = omega_P`, searched for `lambda_H` in the window.
pub fn island_center(
    dm: &DispersionModel,
    grating: &QpmGrating,
    pump: &PumpEnvelope,
    triplet: &ModeTriplet,
    lambda_h_min_nm: f64,
    lambda_h_max_nm: f64,
) -> Result<(f64, f64)> {
    let wp = pump.center_omega();
    let lv = |lh: f64| crate::numeric::wavelength_nm(wp - angular_frequency(lh));
    let f = |lh: f64| mismatch(dm, grating, triplet, lh, lv(lh)).unwrap_or(f64::NAN);
    let steps = ((lambda_h_max_nm - lambda_h_min_nm) / 0.05).ceil().max(1.0) as usize;
    let mut prev = (lambda_h_min_nm, f(lambda_h_min_nm));
    for k in 1..=steps {
        let l = (lambda_h_min_nm + k as f64 * 0.05).min(lambda_h_max_nm);
        let v = f(l);
        if v.is_finite() && prev.1.is_finite() && v.signum() != prev.1.signum() {
            if let Some(r) = bisect(f, prev.0, l, 1e-9, 1e-6, 200) {
                return Ok((r, lv(r)));
            }
        }
        prev = (l, v);
    }
    Err(Error::NotPhaseMatched {
        triplet: format!("{triplet}"),
        min_nm: lambda_h_min_nm,
        max_nm: lambda_h_max_nm,
    })
}
