use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use super::{bulk_mismatch, mismatch, ModeTriplet, QpmGrating};
use crate::error::{Error, Result};
use crate::model::{DispersionModel, FieldLabel, GeometricDispersionTable, ModeIndex};
use num_traits::Float;

/// One identified frequency-degenerate SFG process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfgObservation {
    pub lambda_nm: f64,
    pub triplet: ModeTriplet,
    pub relative_efficiency_pct: Option<f64>,
}

/// Unknown of the calibration: a geometric correction or the global offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CalibrationParameter {
    Correction(FieldLabel, ModeIndex),
    GlobalOffset,
}

impl fmt::Display for CalibrationParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationParameter::Correction(field, mode) => write!(f, "{field}{mode}"),
            CalibrationParameter::GlobalOffset => f.write_str("offset"),
        }
    }
}

impl core::str::FromStr for CalibrationParameter {
    type Err = Error;

    /// `"offset"` or a field letter followed by a mode label, e.g. `"P10"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("offset") {
            return Ok(CalibrationParameter::GlobalOffset);
        }
        let mut chars = s.chars();
        let field: FieldLabel = chars
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty parameter name".into()))?
            .encode_utf8(&mut [0u8; 4])
            .parse()?;
        let mode: ModeIndex = chars.as_str().parse()?;
        if mode.is_fundamental() {
            return Err(Error::InvalidParameter(format!("{s} is fixed to zero by the gauge")));
        }
        Ok(CalibrationParameter::Correction(field, mode))
    }
}

/// Exact side condition `sum(coefficient * parameter) = rhs` [rad/m].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(CalibrationParameter, f64)>,
    pub rhs: f64,
}

impl LinearConstraint {
    /// `first = second`.
    pub fn tie(first: CalibrationParameter, second: CalibrationParameter) -> Self {
        Self {
            terms: alloc::vec![(first, 1.0), (second, -1.0)],
            rhs: 0.0,
        }
    }

    /// `parameter = value`.
    pub fn fix(parameter: CalibrationParameter, value: f64) -> Self {
        Self {
            terms: alloc::vec![(parameter, 1.0)],
            rhs: value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationOptions {
    /// Needed whenever the observations leave directions of parameter space
    /// unresolved (the SFG data only fix differences between fields).
    pub constraints: Vec<LinearConstraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub observation: SfgObservation,
    /// Model mismatch at the measured wavelength.
    pub residual_rad_per_m: f64,
    /// Predicted minus measured degenerate wavelength, to first order.
    pub residual_nm: f64,
    /// Local slope of the diagonal mismatch [rad/m per nm].
    pub slope_rad_per_m_per_nm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub model: DispersionModel,
    pub parameters: Vec<(CalibrationParameter, f64)>,
    pub residuals: Vec<ResidualRow>,
    pub rms_nm: f64,
    pub rms_rad_per_m: f64,
    pub max_abs_nm: f64,
}

impl Calibration {
    pub fn table(&self) -> &GeometricDispersionTable {
        &self.model.table
    }
}

fn parameters_for(observations: &[SfgObservation], options: &CalibrationOptions) -> Vec<CalibrationParameter> {
    let mut set = BTreeSet::new();
    for o in observations {
        for field in FieldLabel::ALL {
            let mode = o.triplet.mode(field);
            if !mode.is_fundamental() {
                set.insert(CalibrationParameter::Correction(field, mode));
            }
        }
    }
    for c in &options.constraints {
        for (p, _) in &c.terms {
            if *p != CalibrationParameter::GlobalOffset {
                set.insert(*p);
            }
        }
    }
    let mut params: Vec<_> = set.into_iter().collect();
    params.push(CalibrationParameter::GlobalOffset);
    params
}

/// Sign with which a parameter enters the mismatch of `triplet`.
fn design_coefficient(p: &CalibrationParameter, triplet: &ModeTriplet) -> f64 {
    match *p {
        CalibrationParameter::GlobalOffset => -1.0,
        CalibrationParameter::Correction(field, mode) => {
            if triplet.mode(field) != mode {
                0.0
            } else if field == FieldLabel::P {
                1.0
            } else {
                -1.0
            }
        }
    }
}

/// Parameters with weight in the numerical null space of `m`.
fn unresolved(m: &DMatrix<f64>, params: &[CalibrationParameter]) -> Vec<String> {
    let p = m.ncols();
    // Pad so the SVD exposes a full set of right singular vectors.
    let rows = m.nrows().max(p);
    let mut padded = DMatrix::<f64>::zeros(rows, p);
    padded.view_mut((0, 0), (m.nrows(), p)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = smax * 1e-10 * rows as f64;
    let mut out = BTreeSet::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol {
            let row = vt.row(k);
            let norm = row.norm();
            for (c, v) in row.iter().enumerate() {
                if v.abs() > 1e-6 * norm {
                    out.insert(c);
                }
            }
        }
    }
    out.into_iter().map(|c| format!("{}", params[c])).collect()
}

/// Linear least-squares fit of the geometric dispersion table.
///
/// Each observation contributes `bulk(lambda) + dk_P - dk_H - dk_V - offset
/// = 0`; the bulk term is a known constant at the measured wavelength, so the
/// system is linear in the unknowns. Constraints are imposed exactly. The
/// Sellmeier model and field axes of `initial` are kept, its table is replaced.
pub fn calibrate(
    observations: &[SfgObservation],
    initial: &DispersionModel,
    grating: &QpmGrating,
    options: &CalibrationOptions,
) -> Result<Calibration> {
    if observations.is_empty() {
        return Err(Error::DegenerateInput("no SFG observations".into()));
    }
    let params = parameters_for(observations, options);
    let np = params.len();
    let m = observations.len();
    let nc = options.constraints.len();

    let mut a = DMatrix::<f64>::zeros(m, np);
    let mut b = DVector::<f64>::zeros(m);
    for (r, o) in observations.iter().enumerate() {
        for (c, p) in params.iter().enumerate() {
            a[(r, c)] = design_coefficient(p, &o.triplet);
        }
        b[r] = -bulk_mismatch(initial, grating, o.lambda_nm, o.lambda_nm)?;
    }
    let mut cm = DMatrix::<f64>::zeros(nc, np);
    let mut d = DVector::<f64>::zeros(nc);
    for (r, c) in options.constraints.iter().enumerate() {
        for (p, coef) in &c.terms {
            let col = params.iter().position(|q| q == p).expect("constraint parameters are registered");
            cm[(r, col)] += coef;
        }
        d[r] = c.rhs;
    }

    let mut stacked = DMatrix::<f64>::zeros(m + nc, np);
    stacked.view_mut((0, 0), (m, np)).copy_from(&a);
    stacked.view_mut((m, 0), (nc, np)).copy_from(&cm);
    let missing = unresolved(&stacked, &params);
    if !missing.is_empty() || m + nc < np {
        let unresolved = if missing.is_empty() {
            params.iter().map(|p| format!("{p}")).collect()
        } else {
            missing
        };
        return Err(Error::Underdetermined { unresolved });
    }

    let x = if nc == 0 {
        a.clone()
            .svd(true, true)
            .solve(&b, 1e-12)
            .map_err(|e| Error::DegenerateInput(e.into()))?
    } else {
        if cm.rank(1e-10) < nc {
            return Err(Error::InvalidParameter("calibration constraints are redundant".into()));
        }
        let n = np + nc;
        let mut kkt = DMatrix::<f64>::zeros(n, n);
        kkt.view_mut((0, 0), (np, np)).copy_from(&(a.transpose() * &a));
        kkt.view_mut((0, np), (np, nc)).copy_from(&cm.transpose());
        kkt.view_mut((np, 0), (nc, np)).copy_from(&cm);
        let mut rhs = DVector::<f64>::zeros(n);
        rhs.rows_mut(0, np).copy_from(&(a.transpose() * &b));
        rhs.rows_mut(np, nc).copy_from(&d);
        let sol = kkt
            .full_piv_lu()
            .solve(&rhs)
            .ok_or_else(|| Error::DegenerateInput("singular constrained system".into()))?;
        sol.rows(0, np).into_owned()
    };

    let mut table = GeometricDispersionTable::new();
    let mut parameters = Vec::with_capacity(np);
    for (p, v) in params.iter().zip(x.iter()) {
        match *p {
            CalibrationParameter::GlobalOffset => table.global_offset = *v,
            CalibrationParameter::Correction(field, mode) => table.set(field, mode, *v)?,
        }
        parameters.push((*p, *v));
    }
    let model = DispersionModel::new(initial.sellmeier.clone(), initial.axes, table);

    let h = 1e-3;
    let mut residuals = Vec::with_capacity(m);
    for o in observations {
        let t = &o.triplet;
        let l = o.lambda_nm;
        let r = mismatch(&model, grating, t, l, l)?;
        let slope = (mismatch(&model, grating, t, l + h, l + h)? - mismatch(&model, grating, t, l - h, l - h)?)
            / (2.0 * h);
        residuals.push(ResidualRow {
            observation: *o,
            residual_rad_per_m: r,
            residual_nm: -r / slope,
            slope_rad_per_m_per_nm: slope,
        });
    }
    let rms = |f: &dyn Fn(&ResidualRow) -> f64| {
        (residuals.iter().map(|r| f(r).powi(2)).sum::<f64>() / residuals.len() as f64).sqrt()
    };
    let rms_nm = rms(&|r| r.residual_nm);
    let rms_rad_per_m = rms(&|r| r.residual_rad_per_m);
    let max_abs_nm = residuals.iter().map(|r| r.residual_nm.abs()).fold(0.0, f64::max);
    Ok(Calibration {
        model,
        parameters,
        residuals,
        rms_nm,
        rms_rad_per_m,
        max_abs_nm,
    })
}
