use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use num_traits::Float;

/// Principal dielectric axis of a biaxial crystal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CrystalAxis {
    X,
    Y,
    Z,
}

impl fmt::Display for CrystalAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrystalAxis::X => "x",
            CrystalAxis::Y => "y",
            CrystalAxis::Z => "z",
        })
    }
}

impl FromStr for CrystalAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" => Ok(CrystalAxis::X),
            "y" | "Y" => Ok(CrystalAxis::Y),
            "z" | "Z" => Ok(CrystalAxis::Z),
            other => Err(Error::InvalidParameter(alloc::format!("unknown crystal axis {other:?}"))),
        }
    }
}

/// A single dispersive term of `n^2(lambda)`, lambda in um.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SellmeierTerm {
    /// `strength * lambda^2 / (lambda^2 - pole_um2)`
    Resonance { strength: f64, pole_um2: f64 },
    /// `strength / (lambda^2 - pole_um2)`
    Pole { strength: f64, pole_um2: f64 },
}

impl SellmeierTerm {
    fn eval(&self, l2: f64) -> f64 {
        match *self {
            SellmeierTerm::Resonance { strength, pole_um2 } => strength * l2 / (l2 - pole_um2),
            SellmeierTerm::Pole { strength, pole_um2 } => strength / (l2 - pole_um2),
        }
    }
}

/// `n^2 = constant + sum(terms) - ir_um2 * lambda^2` on `[min_um, max_um]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierCoefficients {
    pub constant: f64,
    pub terms: Vec<SellmeierTerm>,
    pub ir_um2: f64,
    pub min_um: f64,
    pub max_um: f64,
}

impl SellmeierCoefficients {
    pub fn index_um(&self, lambda_um: f64) -> Result<f64> {
        if !(lambda_um >= self.min_um && lambda_um <= self.max_um) {
            return Err(Error::OutOfRange {
                wavelength_um: lambda_um,
                min_um: self.min_um,
                max_um: self.max_um,
            });
        }
        let l2 = lambda_um * lambda_um;
        let n2 = self.constant + self.terms.iter().map(|t| t.eval(l2)).sum::<f64>() - self.ir_um2 * l2;
        if !(n2 > 1.0) || !n2.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!(
                "Sellmeier set gives n^2 = {n2} at {lambda_um} um"
            )));
        }
        Ok(n2.sqrt())
    }

    /// Checks the set over its validity range: `n > 1` everywhere, and reports
    /// whether the index decreases monotonically (normal dispersion).
    pub fn check_range(&self, samples: usize) -> Result<bool> {
        let samples = samples.max(2);
        let mut monotone = true;
        let mut prev = f64::INFINITY;
        for k in 0..samples {
            let l = self.min_um + (self.max_um - self.min_um) * k as f64 / (samples - 1) as f64;
            let n = self.index_um(l)?;
            if n > prev {
                monotone = false;
            }
            prev = n;
        }
        Ok(monotone)
    }
}

/// Bulk refractive index per crystal axis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SellmeierModel {
    pub source: String,
    pub axes: BTreeMap<CrystalAxis, SellmeierCoefficients>,
}

impl SellmeierModel {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            axes: BTreeMap::new(),
        }
    }

    pub fn with_axis(mut self, axis: CrystalAxis, coefficients: SellmeierCoefficients) -> Self {
        self.axes.insert(axis, coefficients);
        self
    }

    pub fn coefficients(&self, axis: CrystalAxis) -> Result<&SellmeierCoefficients> {
        self.axes
            .get(&axis)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("no Sellmeier coefficients for axis {axis}")))
    }

    /// Published KTP dispersion: z axis from Fradkin et al., Appl. Phys. Lett.
    /// 74, 914 (1999); y axis from König and Wong, Appl. Phys. Lett. 84, 1644
    /// (2004). The window 0.38-1.6 um covers the pump and the 800 nm band.
    pub fn ktp() -> Self {
        SellmeierModel::new("KTP: n_y Konig & Wong APL 84 1644 (2004); n_z Fradkin et al. APL 74 914 (1999)")
            .with_axis(
                CrystalAxis::Y,
                SellmeierCoefficients {
                    constant: 2.09930,
                    terms: alloc::vec![SellmeierTerm::Resonance {
                        strength: 0.922683,
                        pole_um2: 0.0467695,
                    }],
                    ir_um2: 0.0138408,
                    min_um: 0.38,
                    max_um: 1.6,
                },
            )
            .with_axis(
                CrystalAxis::Z,
                SellmeierCoefficients {
                    constant: 2.12725,
                    terms: alloc::vec![
                        SellmeierTerm::Resonance {
                            strength: 1.18431,
                            pole_um2: 0.0514852,
                        },
                        SellmeierTerm::Resonance {
                            strength: 0.6603,
                            pole_um2: 100.00507,
                        },
                    ],
                    ir_um2: 0.00968956,
                    min_um: 0.38,
                    max_um: 1.6,
                },
            )
    }
}

/// Bulk refractive index along `axis` at vacuum wavelength `lambda_nm`.
pub fn bulk_index(model: &SellmeierModel, axis: CrystalAxis, lambda_nm: f64) -> Result<f64> {
    model.coefficients(axis)?.index_um(lambda_nm * 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ktp_z_axis_at_800nm_matches_pinned_value() {
        // Independent double-precision evaluation of the published formula.
        let n = bulk_index(&SellmeierModel::ktp(), CrystalAxis::Z, 800.0).unwrap();
        assert!((n - 1.845_186_459_9).abs() < 1e-9, "n_z = {n}");
        let ny = bulk_index(&SellmeierModel::ktp(), CrystalAxis::Y, 800.0).unwrap();
        assert!((ny - 1.756_663_878_8).abs() < 1e-9, "n_y = {ny}");
    }

    #[test]
    fn degenerate_coefficients_give_sqrt_constant() {
        let c = SellmeierCoefficients {
            constant: 3.0,
            terms: alloc::vec![SellmeierTerm::Resonance { strength: 0.0, pole_um2: 0.01 }],
            ir_um2: 0.0,
            min_um: 0.4,
            max_um: 1.2,
        };
        let m = SellmeierModel::new("test").with_axis(CrystalAxis::X, c);
        let n = bulk_index(&m, CrystalAxis::X, 800.0).unwrap();
        assert_eq!(n, 3.0f64.sqrt());
    }

    #[test]
    fn deterministic_and_range_checked() {
        let a = SellmeierModel::ktp();
        let b = SellmeierModel::ktp();
        assert_eq!(
            bulk_index(&a, CrystalAxis::Y, 812.3).unwrap(),
            bulk_index(&b, CrystalAxis::Y, 812.3).unwrap()
        );
        match bulk_index(&a, CrystalAxis::Y, 2000.0) {
            Err(Error::OutOfRange { min_um, max_um, .. }) => {
                assert_eq!((min_um, max_um), (0.38, 1.6));
            }
            other => panic!("expected range error, got {other:?}"),
        }
        assert!(bulk_index(&a, CrystalAxis::X, 800.0).is_err());
    }

    #[test]
    fn ktp_is_normally_dispersive_in_window() {
        let m = SellmeierModel::ktp();
        for axis in [CrystalAxis::Y, CrystalAxis::Z] {
            assert!(m.coefficients(axis).unwrap().check_range(400).unwrap());
        }
    }
}
