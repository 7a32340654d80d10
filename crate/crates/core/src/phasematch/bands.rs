use alloc::format;
use alloc::vec::Vec;

use super::{pm_amplitude, pump_wavelength_nm, triplet_correction, ModeTriplet, QpmGrating};
use crate::error::{Error, Result};
use crate::model::{DispersionModel, FieldLabel, ModeIndex};
use crate::numeric::{angular_frequency, trapezoid_weights, wavelength_nm};
use num_traits::Float;

/// Axis ranges [nm] and sample counts of a (lambda_H, lambda_V) grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lambda_h_min_nm: f64,
    pub lambda_h_max_nm: f64,
    pub samples_h: usize,
    pub lambda_v_min_nm: f64,
    pub lambda_v_max_nm: f64,
    pub samples_v: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(790.0, 820.0, 512)
    }
}

impl GridSpec {
    pub fn square(min_nm: f64, max_nm: f64, samples: usize) -> Self {
        Self {
            lambda_h_min_nm: min_nm,
            lambda_h_max_nm: max_nm,
            samples_h: samples,
            lambda_v_min_nm: min_nm,
            lambda_v_max_nm: max_nm,
            samples_v: samples,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64, n: usize| lo > 0.0 && hi > lo && hi.is_finite() && n >= 2;
        if !ok(self.lambda_h_min_nm, self.lambda_h_max_nm, self.samples_h)
            || !ok(self.lambda_v_min_nm, self.lambda_v_max_nm, self.samples_v)
        {
            return Err(Error::InvalidParameter(format!("invalid grid {self:?}")));
        }
        Ok(())
    }
}

fn frequency_axis(min_nm: f64, max_nm: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let w_lo = angular_frequency(max_nm);
    let w_hi = angular_frequency(min_nm);
    // Ascending wavelength means descending frequency.
    let omega: Vec<f64> = (0..n)
        .map(|k| w_hi - (w_hi - w_lo) * k as f64 / (n - 1) as f64)
        .collect();
    let mut lambda: Vec<f64> = omega.iter().map(|&w| wavelength_nm(w)).collect();
    lambda[0] = min_nm;
    lambda[n - 1] = max_nm;
    (lambda, omega)
}

/// Grid uniform in angular frequency, labelled by vacuum wavelength.
///
/// Values on the grid are stored row-major with rows along lambda_V:
/// index `iv * samples_h + ih`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    pub lambda_h_nm: Vec<f64>,
    pub lambda_v_nm: Vec<f64>,
    pub omega_h: Vec<f64>,
    pub omega_v: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        spec.validate()?;
        let (lambda_h_nm, omega_h) = frequency_axis(spec.lambda_h_min_nm, spec.lambda_h_max_nm, spec.samples_h);
        let (lambda_v_nm, omega_v) = frequency_axis(spec.lambda_v_min_nm, spec.lambda_v_max_nm, spec.samples_v);
        Ok(Self {
            lambda_h_nm,
            lambda_v_nm,
            omega_h,
            omega_v,
        })
    }

    pub fn nh(&self) -> usize {
        self.lambda_h_nm.len()
    }

    pub fn nv(&self) -> usize {
        self.lambda_v_nm.len()
    }

    pub fn len(&self) -> usize {
        self.nh() * self.nv()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ih: usize, iv: usize) -> usize {
        iv * self.nh() + ih
    }

    /// Trapezoid integral over (omega_H, omega_V), rows first.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let wh = trapezoid_weights(&self.omega_h);
        let wv = trapezoid_weights(&self.omega_v);
        let nh = self.nh();
        let mut total = 0.0;
        for (iv, wv) in wv.iter().enumerate() {
            let row = &values[iv * nh..(iv + 1) * nh];
            let s: f64 = row.iter().zip(&wh).map(|(v, w)| v * w.abs()).sum();
            total += s * wv.abs();
        }
        total
    }

    /// Same integral with the loops exchanged.
    pub fn integrate_by_columns(&self, values: &[f64]) -> f64 {
        let wh = trapezoid_weights(&self.omega_h);
        let wv = trapezoid_weights(&self.omega_v);
        let nh = self.nh();
        let mut total = 0.0;
        for (ih, wh) in wh.iter().enumerate() {
            let s: f64 = wv.iter().enumerate().map(|(iv, w)| values[iv * nh + ih] * w.abs()).sum();
            total += s * wh.abs();
        }
        total
    }
}

/// Bulk mismatch precomputed on a grid; guided corrections are constants
/// per triplet and are added afterwards.
#[derive(Debug, Clone)]
pub(crate) struct BulkGrid {
    pub grid: SpectralGrid,
    pub bulk: Vec<f64>,
}

impl BulkGrid {
    pub fn new(dm: &DispersionModel, grating: &QpmGrating, spec: &GridSpec) -> Result<Self> {
        Self::masked(dm, grating, SpectralGrid::new(spec)?, |_| true)
    }

    /// Points rejected by `keep` are not evaluated; their intensity is zero.
    pub fn masked(
        dm: &DispersionModel,
        grating: &QpmGrating,
        grid: SpectralGrid,
        keep: impl Fn(usize) -> bool,
    ) -> Result<Self> {
        let kh = grid
            .lambda_h_nm
            .iter()
            .map(|&l| dm.bulk_wavevector(FieldLabel::H, l))
            .collect::<Result<Vec<_>>>()?;
        let kv = grid
            .lambda_v_nm
            .iter()
            .map(|&l| dm.bulk_wavevector(FieldLabel::V, l))
            .collect::<Result<Vec<_>>>()?;
        let kg = grating.grating_wavevector();
        let mut bulk = Vec::with_capacity(grid.len());
        for (iv, &lv) in grid.lambda_v_nm.iter().enumerate() {
            for (ih, &lh) in grid.lambda_h_nm.iter().enumerate() {
                if !keep(grid.index(ih, iv)) {
                    bulk.push(f64::NAN);
                    continue;
                }
                let kp = dm.bulk_wavevector(FieldLabel::P, pump_wavelength_nm(lh, lv))?;
                bulk.push(kp - kh[ih] - kv[iv] - kg);
            }
        }
        Ok(Self { grid, bulk })
    }

    /// `|pm_amplitude|^2` of one triplet on the grid.
    pub fn pm_intensity(&self, dm: &DispersionModel, grating: &QpmGrating, triplet: &ModeTriplet) -> Result<Vec<f64>> {
        let corr = triplet_correction(&dm.table, triplet)?;
        let l = grating.length_m();
        Ok(self
            .bulk
            .iter()
            .map(|b| if b.is_nan() { 0.0 } else { pm_amplitude(b + corr, l).powi(2) })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandLayer {
    pub triplet: ModeTriplet,
    pub values: Vec<f64>,
}

impl BandLayer {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandMap {
    pub grid: SpectralGrid,
    pub layers: Vec<BandLayer>,
}

impl BandMap {
    pub fn layer(&self, triplet: &ModeTriplet) -> Option<&BandLayer> {
        self.layers.iter().find(|l| l.triplet == *triplet)
    }

    /// Layers whose pump mode is `pump`.
    pub fn with_pump(&self, pump: ModeIndex) -> BandMap {
        BandMap {
            grid: self.grid.clone(),
            layers: self.layers.iter().filter(|l| l.triplet.pump == pump).cloned().collect(),
        }
    }
}

/// Squared phase-matching amplitude of each triplet over a wavelength grid.
pub fn band_map(dm: &DispersionModel, grating: &QpmGrating, triplets: &[ModeTriplet], spec: &GridSpec) -> Result<BandMap> {
    if triplets.is_empty() {
        return Err(Error::InvalidParameter("band map needs at least one triplet".into()));
    }
    let bulk = BulkGrid::new(dm, grating, spec)?;
    let layers = triplets
        .iter()
        .map(|t| {
            Ok(BandLayer {
                triplet: *t,
                values: bulk.pm_intensity(dm, grating, t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BandMap { grid: bulk.grid, layers })
}

/// Every combination of the given per-field mode sets.
pub fn triplet_universe(pump: &[ModeIndex], h: &[ModeIndex], v: &[ModeIndex]) -> Vec<ModeTriplet> {
    let mut out = Vec::with_capacity(pump.len() * h.len() * v.len());
    for &p in pump {
        for &a in h {
            for &b in v {
                out.push(ModeTriplet::new(p, a, b));
            }
        }
    }
    out
}

/// Pump modes 00, 01, 02, 10, 20 and down-converted modes 00, 01, 02, 10.
pub fn default_triplet_universe() -> Vec<ModeTriplet> {
    let m = ModeIndex::new;
    let pump = [m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(2, 0)];
    let dc = [m(0, 0), m(0, 1), m(0, 2), m(1, 0)];
    triplet_universe(&pump, &dc, &dc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FieldAxes, GeometricDispersionTable, SellmeierModel};
    use crate::numeric::bisect;
    use crate::phasematch::{degenerate_pm_wavelength, mismatch};
    use crate::testutil;
    use proptest::prelude::*;

    #[test]
    fn grid_is_uniform_in_frequency() {
        let g = SpectralGrid::new(&GridSpec::square(790.0, 820.0, 65)).unwrap();
        assert_eq!(g.lambda_h_nm[0], 790.0);
        assert_eq!(g.lambda_h_nm[64], 820.0);
        assert!(g.lambda_h_nm.windows(2).all(|w| w[1] > w[0]));
        let d0 = g.omega_h[0] - g.omega_h[1];
        for w in g.omega_h.windows(2) {
            assert!(((w[0] - w[1]) / d0 - 1.0).abs() < 1e-9);
        }
        assert!(SpectralGrid::new(&GridSpec::square(820.0, 790.0, 8)).is_err());
    }

    #[test]
    fn empty_triplet_list_rejected() {
        let (dm, _) = testutil::calibrated();
        assert!(band_map(&dm, &QpmGrating::default(), &[], &GridSpec::square(790.0, 820.0, 8)).is_err());
    }

    #[test]
    fn layer_peaks_on_phase_matching_curve() {
        let (dm, _) = testutil::calibrated();
        let g = QpmGrating::default();
        let map = band_map(&dm, &g, &[ModeTriplet::FUNDAMENTAL], &GridSpec::default()).unwrap();
        let layer = &map.layers[0];
        assert!(layer.values.iter().all(|v| (0.0..=1.0).contains(v)));
        // Grid spacing ~0.06 nm, slope ~3e3 rad/m/nm: a grid point lies within
        // |dbeta| ~ 100 rad/m of the curve, where sinc^2 > 0.999.
        assert!(layer.max() > 0.999, "{}", layer.max());
        let imax = layer.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let (ih, iv) = (imax % map.grid.nh(), imax / map.grid.nh());
        let db = mismatch(&dm, &g, &ModeTriplet::FUNDAMENTAL, map.grid.lambda_h_nm[ih], map.grid.lambda_v_nm[iv]).unwrap();
        assert!(db.abs() < 200.0);
    }

    #[test]
    fn pump_fundamental_subset_and_determinism() {
        let (dm, _) = testutil::calibrated();
        let g = QpmGrating::default();
        let triplets = default_triplet_universe();
        assert_eq!(triplets.len(), 80);
        let spec = GridSpec::square(790.0, 820.0, 48);
        let all = band_map(&dm, &g, &triplets, &spec).unwrap();
        let sub = all.with_pump(ModeIndex::FUNDAMENTAL);
        assert_eq!(sub.layers.len(), 16);
        for l in &sub.layers {
            assert_eq!(all.layer(&l.triplet).unwrap(), l);
        }
        let again = band_map(&dm, &g, &triplets, &spec).unwrap();
        assert_eq!(all, again);
    }

    #[test]
    fn diagonal_separation_of_first_two_bands() {
        let (dm, cal) = testutil::calibrated();
        let g = QpmGrating::default();
        let a = degenerate_pm_wavelength(&dm, &g, &ModeTriplet::FUNDAMENTAL).unwrap();
        let b = degenerate_pm_wavelength(&dm, &g, &testutil::triplet("00", "00", "01")).unwrap();
        assert!(((b - a) - 7.4).abs() <= 2.0 * cal.rms_nm, "{}", b - a);
    }

    fn diagonal_fwhm_nm(dm: &DispersionModel, g: &QpmGrating, t: &ModeTriplet) -> f64 {
        let l0 = degenerate_pm_wavelength(dm, g, t).unwrap();
        let f = |x: f64| pm_amplitude(mismatch(dm, g, t, x, x).unwrap(), g.length_m()).powi(2) - 0.5;
        // Diagonal slope ~5.5e3 rad/m/nm puts the half maximum ~0.5 nm and
        // the first null ~1.15 nm from the centre for L = 1 mm.
        let reach = 1.0 / g.length_mm;
        let hi = bisect(f, l0, l0 + reach, 1e-10, 1e-12, 200).unwrap();
        let lo = bisect(f, l0 - reach, l0, 1e-10, 1e-12, 200).unwrap();
        hi - lo
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn band_fwhm_halves_when_length_doubles(len in 0.5f64..4.0, which in 0usize..3) {
            let (dm, _) = testutil::calibrated();
            let t = [
                ModeTriplet::FUNDAMENTAL,
                testutil::triplet("00", "00", "01"),
                testutil::triplet("00", "01", "00"),
            ][which];
            let g1 = QpmGrating { length_mm: len, ..QpmGrating::default() };
            let g2 = QpmGrating { length_mm: 2.0 * len, ..QpmGrating::default() };
            let r = diagonal_fwhm_nm(&dm, &g1, &t) / diagonal_fwhm_nm(&dm, &g2, &t);
            prop_assert!((r - 2.0).abs() < 2e-3, "ratio {}", r);
        }
    }

    #[test]
    fn integrals_agree_in_both_orders() {
        let dm = DispersionModel::new(SellmeierModel::ktp(), FieldAxes::default(), GeometricDispersionTable::with_offset(-1.58e5));
        let map = band_map(&dm, &QpmGrating::default(), &[ModeTriplet::FUNDAMENTAL], &GridSpec::square(795.0, 805.0, 97)).unwrap();
        let a = map.grid.integrate(&map.layers[0].values);
        let b = map.grid.integrate_by_columns(&map.layers[0].values);
        assert!(a > 0.0);
        assert!(((a - b) / a).abs() < 1e-12);
    }
}
