//! Transverse-mode bookkeeping, bulk and guided dispersion, mode functions
//! and overlap integrals.

mod dispersion;
mod modes;
mod overlap;
mod sellmeier;

pub use dispersion::{DispersionModel, FieldAxes, GeometricDispersionTable};
pub use modes::{HGModeBasis, ModeProfile, Quadrature};
pub use overlap::{intensity_overlap, IntensityGrid};
pub use sellmeier::{bulk_index, CrystalAxis, SellmeierCoefficients, SellmeierModel, SellmeierTerm};

use core::fmt;
use core::str::FromStr;

use crate::error::Error;

/// One of the three interacting fields of a type-II process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldLabel {
    /// Pump, near 400 nm.
    P,
    /// Down-converted photon polarized parallel to the crystal surface.
    H,
    /// Down-converted photon polarized perpendicular to the surface.
    V,
}

impl FieldLabel {
    pub const ALL: [FieldLabel; 3] = [FieldLabel::P, FieldLabel::H, FieldLabel::V];

    pub fn as_char(self) -> char {
        match self {
            FieldLabel::P => 'P',
            FieldLabel::H => 'H',
            FieldLabel::V => 'V',
        }
    }
}

impl fmt::Display for FieldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for FieldLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "P" | "p" => Ok(FieldLabel::P),
            "H" | "h" => Ok(FieldLabel::H),
            "V" | "v" => Ok(FieldLabel::V),
            other => Err(Error::InvalidParameter(alloc::format!("unknown field label {other:?}"))),
        }
    }
}

/// Transverse mode label `ij`: `i` nodes across the waveguide width (x,
/// parallel to the crystal surface), `j` nodes along the depth (y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ModeIndex {
    pub i: u32,
    pub j: u32,
}

impl ModeIndex {
    pub const FUNDAMENTAL: ModeIndex = ModeIndex { i: 0, j: 0 };

    pub const fn new(i: u32, j: u32) -> Self {
        Self { i, j }
    }

    pub fn is_fundamental(self) -> bool {
        self.i == 0 && self.j == 0
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.i, self.j)
    }
}

impl FromStr for ModeIndex {
    type Err = Error;

    /// Parses the two-digit label used in mode tables, e.g. `"01"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let digits: alloc::vec::Vec<u32> = s.chars().filter_map(|c| c.to_digit(10)).collect();
        if digits.len() != 2 || s.chars().count() != 2 {
            return Err(Error::InvalidParameter(alloc::format!("mode label must be two digits, got {s:?}")));
        }
        Ok(ModeIndex::new(digits[0], digits[1]))
    }
}

/// Mode assignment of one down-conversion (or SFG) process
/// `pump -> h + v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeTriplet {
    pub pump: ModeIndex,
    pub h: ModeIndex,
    pub v: ModeIndex,
}

impl ModeTriplet {
    pub const FUNDAMENTAL: ModeTriplet = ModeTriplet {
        pump: ModeIndex::FUNDAMENTAL,
        h: ModeIndex::FUNDAMENTAL,
        v: ModeIndex::FUNDAMENTAL,
    };

    pub const fn new(pump: ModeIndex, h: ModeIndex, v: ModeIndex) -> Self {
        Self { pump, h, v }
    }

    pub fn mode(&self, field: FieldLabel) -> ModeIndex {
        match field {
            FieldLabel::P => self.pump,
            FieldLabel::H => self.h,
            FieldLabel::V => self.v,
        }
    }
}

impl fmt::Display for ModeTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}P->{}H+{}V", self.pump, self.h, self.v)
    }
}

impl FromStr for ModeTriplet {
    type Err = Error;

    /// Parses the `Display` form, `"00P->01H+00V"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::InvalidParameter(alloc::format!("malformed triplet {s:?}"));
        let (pump, rest) = s.trim().split_once("P->").ok_or_else(bad)?;
        let (h, v) = rest.split_once("H+").ok_or_else(bad)?;
        let v = v.strip_suffix('V').ok_or_else(bad)?;
        Ok(ModeTriplet::new(pump.parse()?, h.parse()?, v.parse()?))
    }
}
