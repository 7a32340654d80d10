//! Project configuration. One TOML file per project; physical keys carry
//! their unit in the name and unknown keys are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use wgspdc_core::beam::{BeamModel, BeamProfile, ScanDirection, ScanNoise};
use wgspdc_core::model::{
    CrystalAxis, DispersionModel, FieldAxes, FieldLabel, GeometricDispersionTable, HGModeBasis, ModeIndex,
    ModeProfile, SellmeierCoefficients, SellmeierModel, SellmeierTerm,
};
use wgspdc_core::phasematch::{
    CalibrationOptions, CalibrationParameter, GridSpec, LinearConstraint, QpmGrating, SpectralGrid,
};
use wgspdc_core::polarization::NoiseParams;
use wgspdc_core::spectra::{FilterShape, PumpEnvelope, SpectralFilter};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    #[serde(default)]
    pub seed: u64,
    pub dispersion: DispersionConfig,
    pub grating: GratingConfig,
    pub calibration: Option<CalibrationConfig>,
    pub pump: Option<PumpConfig>,
    pub modes: Option<ModesConfig>,
    pub bands: Option<BandsConfig>,
    pub jsa: Option<JsaConfig>,
    pub knife: Option<KnifeConfig>,
    pub bell: Option<BellConfig>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub sellmeier_file: PathBuf,
    /// Fitted table written by `calibrate`; needed by the spectral commands.
    pub table_file: Option<PathBuf>,
    pub pump_axis: Option<String>,
    pub h_axis: Option<String>,
    pub v_axis: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GratingConfig {
    pub poling_period_um: f64,
    pub qpm_order: u32,
    pub length_mm: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedParameter {
    pub parameter: String,
    pub value_rad_per_m: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub sfg_csv: PathBuf,
    #[serde(default)]
    pub ties: Vec<[String; 2]>,
    #[serde(default)]
    pub fixed: Vec<FixedParameter>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub center_nm: f64,
    pub fwhm_nm: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub waist_x_um: f64,
    pub waist_y_um: f64,
    #[serde(default)]
    pub center_y_um: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    pub pump: ProfileConfig,
    pub h: ProfileConfig,
    pub v: ProfileConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lambda_h_min_nm: f64,
    pub lambda_h_max_nm: f64,
    pub samples_h: usize,
    pub lambda_v_min_nm: f64,
    pub lambda_v_max_nm: f64,
    pub samples_v: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsConfig {
    pub grid: GridConfig,
    /// Pump modes to keep; every tabulated pump mode when absent.
    pub pump_modes: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub arm: String,
    pub center_nm: f64,
    pub fwhm_nm: f64,
    #[serde(default = "gaussian")]
    pub shape: String,
}

fn gaussian() -> String {
    "gaussian".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsaConfig {
    pub grid: GridConfig,
    pub pump_modes: Option<Vec<String>>,
    /// Applied to the exported spectrum and the purity summary.
    #[serde(default)]
    pub filters: Vec<FilterConfig>,
    /// Herald filter for the heralded mode-weight summary. The analyzed arm
    /// is the one it does not act on.
    pub herald: Option<FilterConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnifeConfig {
    pub lambda_nm: f64,
    pub w0_um: f64,
    #[serde(default)]
    pub z0_mm: f64,
    /// Partially coherent Gaussian. Exclusive with `mode_weights`.
    pub m2: Option<f64>,
    /// Incoherent Hermite-Gauss mixture; power per order.
    pub mode_weights: Option<Vec<f64>>,
    /// Absolute plane positions. Exclusive with `z_rayleigh`.
    pub z_mm: Option<Vec<f64>>,
    /// Plane offsets from the waist in Rayleigh ranges of the configured beam.
    pub z_rayleigh: Option<Vec<f64>>,
    pub points_per_plane: usize,
    pub half_span_widths: f64,
    pub directions: Vec<String>,
    pub duration_s: f64,
    pub peak_rate_hz: f64,
    #[serde(default)]
    pub background_hz: f64,
    #[serde(default = "poisson")]
    pub noise: String,
}

fn poisson() -> String {
    "poisson".into()
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub werner_p: f64,
    pub contamination: f64,
    pub mean_pairs_per_pulse: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellSimulationConfig {
    pub pairs_per_setting: f64,
    pub duration_s: f64,
    pub singles1_hz: f64,
    pub singles2_hz: f64,
    pub power_mw: Option<f64>,
    /// Adds `S1·S2/f_rep` accidentals to the simulated counts.
    pub accidentals: bool,
    #[serde(default = "poisson")]
    pub noise: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellConfig {
    /// Required whenever accidentals are simulated or subtracted.
    pub pulse_rate_hz: Option<f64>,
    pub reference_power_mw: Option<f64>,
    #[serde(default = "unit")]
    pub power_exponent: f64,
    #[serde(default = "yes")]
    pub subtract_accidentals: bool,
    pub noise: NoiseConfig,
    pub simulation: Option<BellSimulationConfig>,
}

fn unit() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SellmeierFile {
    source: String,
    axes: BTreeMap<String, SellmeierAxisFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SellmeierAxisFile {
    constant: f64,
    #[serde(default)]
    ir_um2: f64,
    min_um: f64,
    max_um: f64,
    #[serde(default)]
    terms: Vec<SellmeierTermFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SellmeierTermFile {
    kind: String,
    strength: f64,
    pole_um2: f64,
}

fn missing(section: &str) -> CliError {
    CliError::Config(format!("missing [{section}] section"))
}

fn core_config(e: wgspdc_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn parse_modes(labels: &[String]) -> CliResult<Vec<ModeIndex>> {
    labels.iter().map(|s| s.parse().map_err(core_config)).collect()
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> CliResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be >= 0, got {v}")))
    }
}

fn check_grid(spec: &GridSpec) -> CliResult<()> {
    SpectralGrid::new(spec).map(|_| ()).map_err(core_config)
}

pub fn parse_noise(name: &str) -> CliResult<ScanNoise> {
    match name.to_ascii_lowercase().as_str() {
        "poisson" => Ok(ScanNoise::Poisson),
        "none" => Ok(ScanNoise::None),
        other => Err(CliError::Config(format!("unknown noise model {other:?}, expected poisson or none"))),
    }
}

pub fn parse_field(s: &str) -> CliResult<FieldLabel> {
    s.parse().map_err(core_config)
}

pub fn load_sellmeier(path: &Path) -> CliResult<SellmeierModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: SellmeierFile = toml::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))?;
    let mut model = SellmeierModel::new(file.source);
    for (name, axis) in file.axes {
        let terms = axis
            .terms
            .iter()
            .map(|t| match t.kind.as_str() {
                "resonance" => Ok(SellmeierTerm::Resonance { strength: t.strength, pole_um2: t.pole_um2 }),
                "pole" => Ok(SellmeierTerm::Pole { strength: t.strength, pole_um2: t.pole_um2 }),
                other => Err(CliError::parse(path, format!("unknown term kind {other:?}"))),
            })
            .collect::<CliResult<Vec<_>>>()?;
        if !(axis.min_um > 0.0 && axis.max_um > axis.min_um) {
            return Err(CliError::parse(path, format!("axis {name}: invalid validity range")));
        }
        let coefficients = SellmeierCoefficients {
            constant: axis.constant,
            terms,
            ir_um2: axis.ir_um2,
            min_um: axis.min_um,
            max_um: axis.max_um,
        };
        let axis: CrystalAxis = name.parse().map_err(|e: wgspdc_core::Error| CliError::parse(path, e.to_string()))?;
        model = model.with_axis(axis, coefficients);
    }
    Ok(model)
}

impl ProjectConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new("")))
            .map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                other => other,
            })
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> CliResult<Self> {
        let mut cfg: ProjectConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks referenced input files and every value that can be checked
    /// without running a computation.
    pub fn validate(&self) -> CliResult<()> {
        let exists = |key: &str, p: &Path| {
            let p = self.resolve(p);
            if p.is_file() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{key}: file {} does not exist", p.display())))
            }
        };
        exists("dispersion.sellmeier_file", &self.dispersion.sellmeier_file)?;
        self.field_axes()?;
        self.grating()?;
        if let Some(c) = &self.calibration {
            exists("calibration.sfg_csv", &c.sfg_csv)?;
            self.calibration_options()?;
        }
        if self.pump.is_some() {
            self.pump()?;
        }
        if self.modes.is_some() {
            self.basis()?;
        }
        if let Some(b) = &self.bands {
            check_grid(&b.grid.spec())?;
            b.pump_modes.as_deref().map(parse_modes).transpose()?;
        }
        if let Some(j) = &self.jsa {
            check_grid(&j.grid.spec())?;
            j.pump_modes()?;
            for f in &j.filters {
                f.filter()?;
            }
            if let Some(h) = &j.herald {
                h.filter()?;
            }
        }
        if let Some(k) = &self.knife {
            k.beam()?;
            k.planes()?;
            k.directions()?;
            parse_noise(&k.noise)?;
            if k.points_per_plane < 8 {
                return Err(CliError::Config("knife.points_per_plane must be at least 8".into()));
            }
            positive("knife.half_span_widths", k.half_span_widths)?;
            positive("knife.duration_s", k.duration_s)?;
            nonnegative("knife.peak_rate_hz", k.peak_rate_hz)?;
            nonnegative("knife.background_hz", k.background_hz)?;
        }
        if let Some(b) = &self.bell {
            b.noise.params().validate().map_err(core_config)?;
            if let Some(f) = b.pulse_rate_hz {
                positive("bell.pulse_rate_hz", f)?;
            }
            if let Some(p) = b.reference_power_mw {
                positive("bell.reference_power_mw", p)?;
            }
            if !b.power_exponent.is_finite() {
                return Err(CliError::Config("bell.power_exponent must be finite".into()));
            }
            if let Some(s) = &b.simulation {
                nonnegative("bell.simulation.pairs_per_setting", s.pairs_per_setting)?;
                positive("bell.simulation.duration_s", s.duration_s)?;
                nonnegative("bell.simulation.singles1_hz", s.singles1_hz)?;
                nonnegative("bell.simulation.singles2_hz", s.singles2_hz)?;
                if let Some(p) = s.power_mw {
                    positive("bell.simulation.power_mw", p)?;
                }
                parse_noise(&s.noise)?;
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn sellmeier_path(&self) -> PathBuf {
        self.resolve(&self.dispersion.sellmeier_file)
    }

    pub fn field_axes(&self) -> CliResult<FieldAxes> {
        let d = &self.dispersion;
        let defaults = FieldAxes::default();
        let axis = |v: &Option<String>, fallback: CrystalAxis| match v {
            Some(s) => s.parse::<CrystalAxis>().map_err(core_config),
            None => Ok(fallback),
        };
        Ok(FieldAxes {
            pump: axis(&d.pump_axis, defaults.pump)?,
            h: axis(&d.h_axis, defaults.h)?,
            v: axis(&d.v_axis, defaults.v)?,
        })
    }

    /// Dispersion model with an empty correction table.
    pub fn bulk_model(&self) -> CliResult<DispersionModel> {
        let sellmeier = load_sellmeier(&self.sellmeier_path())?;
        Ok(DispersionModel::new(sellmeier, self.field_axes()?, GeometricDispersionTable::new()))
    }

    /// Fitted table location; `override_path` wins over the configured one.
    pub fn table_path(&self, override_path: Option<&Path>) -> CliResult<PathBuf> {
        let p = match (override_path, &self.dispersion.table_file) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(p)) => self.resolve(p),
            (None, None) => {
                return Err(CliError::Config(
                    "no calibrated dispersion table: run `wgspdc calibrate`, then set dispersion.table_file \
                     or pass --table"
                        .into(),
                ))
            }
        };
        if !p.is_file() {
            return Err(CliError::Config(format!(
                "calibrated dispersion table {} not found: run `wgspdc calibrate` first",
                p.display()
            )));
        }
        Ok(p)
    }

    pub fn grating(&self) -> CliResult<QpmGrating> {
        let g = self.grating;
        QpmGrating::new(g.poling_period_um, g.qpm_order, g.length_mm).map_err(core_config)
    }

    pub fn calibration(&self) -> CliResult<&CalibrationConfig> {
        self.calibration.as_ref().ok_or_else(|| missing("calibration"))
    }

    pub fn calibration_options(&self) -> CliResult<CalibrationOptions> {
        let c = self.calibration()?;
        let param = |s: &str| s.parse::<CalibrationParameter>().map_err(core_config);
        let mut constraints = Vec::new();
        for [a, b] in &c.ties {
            constraints.push(LinearConstraint::tie(param(a)?, param(b)?));
        }
        for f in &c.fixed {
            if !f.value_rad_per_m.is_finite() {
                return Err(CliError::Config(format!("fixed value of {} must be finite", f.parameter)));
            }
            constraints.push(LinearConstraint::fix(param(&f.parameter)?, f.value_rad_per_m));
        }
        Ok(CalibrationOptions { constraints })
    }

    pub fn sfg_path(&self) -> CliResult<PathBuf> {
        Ok(self.resolve(&self.calibration()?.sfg_csv))
    }

    pub fn pump(&self) -> CliResult<PumpEnvelope> {
        let p = self.pump.ok_or_else(|| missing("pump"))?;
        PumpEnvelope::new(p.center_nm, p.fwhm_nm).map_err(core_config)
    }

    pub fn basis(&self) -> CliResult<HGModeBasis> {
        let m = self.modes.ok_or_else(|| missing("modes"))?;
        let p = |c: ProfileConfig| ModeProfile {
            waist_x_um: c.waist_x_um,
            waist_y_um: c.waist_y_um,
            center_y_um: c.center_y_um,
        };
        HGModeBasis::new(p(m.pump), p(m.h), p(m.v)).map_err(core_config)
    }

    pub fn bands(&self) -> CliResult<(GridSpec, Option<Vec<ModeIndex>>)> {
        let b = self.bands.as_ref().ok_or_else(|| missing("bands"))?;
        let pumps = b.pump_modes.as_deref().map(parse_modes).transpose()?;
        Ok((b.grid.spec(), pumps))
    }

    pub fn jsa(&self) -> CliResult<&JsaConfig> {
        self.jsa.as_ref().ok_or_else(|| missing("jsa"))
    }

    pub fn knife(&self) -> CliResult<&KnifeConfig> {
        self.knife.as_ref().ok_or_else(|| missing("knife"))
    }

    pub fn bell(&self) -> CliResult<&BellConfig> {
        self.bell.as_ref().ok_or_else(|| missing("bell"))
    }
}

impl GridConfig {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            lambda_h_min_nm: self.lambda_h_min_nm,
            lambda_h_max_nm: self.lambda_h_max_nm,
            samples_h: self.samples_h,
            lambda_v_min_nm: self.lambda_v_min_nm,
            lambda_v_max_nm: self.lambda_v_max_nm,
            samples_v: self.samples_v,
        }
    }
}

impl JsaConfig {
    pub fn pump_modes(&self) -> CliResult<Option<Vec<ModeIndex>>> {
        self.pump_modes.as_deref().map(parse_modes).transpose()
    }
}

impl FilterConfig {
    pub fn filter(&self) -> CliResult<SpectralFilter> {
        let shape = match self.shape.to_ascii_lowercase().as_str() {
            "gaussian" => FilterShape::Gaussian,
            "rectangular" => FilterShape::Rectangular,
            other => return Err(CliError::Config(format!("unknown filter shape {other:?}"))),
        };
        SpectralFilter::new(self.center_nm, self.fwhm_nm, shape, parse_field(&self.arm)?).map_err(core_config)
    }
}

impl KnifeConfig {
    pub fn beam(&self) -> CliResult<BeamModel> {
        let profile = match (&self.m2, &self.mode_weights) {
            (Some(m2), None) => BeamProfile::PartiallyCoherent { m2: *m2 },
            (None, Some(w)) => BeamProfile::HermiteGauss { weights: w.clone() },
            _ => return Err(CliError::Config("knife: set exactly one of m2 and mode_weights".into())),
        };
        let beam = BeamModel {
            lambda_nm: self.lambda_nm,
            w0_um: self.w0_um,
            z0_mm: self.z0_mm,
            profile,
        };
        beam.validate().map_err(core_config)?;
        Ok(beam)
    }

    pub fn planes(&self) -> CliResult<Vec<f64>> {
        let z = match (&self.z_mm, &self.z_rayleigh) {
            (Some(z), None) => z.clone(),
            (None, Some(f)) => {
                let beam = self.beam()?;
                let zr = beam.rayleigh_range_mm();
                f.iter().map(|f| beam.z0_mm + f * zr).collect()
            }
            _ => return Err(CliError::Config("knife: set exactly one of z_mm and z_rayleigh".into())),
        };
        if z.is_empty() || z.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("knife planes must be finite and non-empty".into()));
        }
        Ok(z)
    }

    pub fn directions(&self) -> CliResult<Vec<ScanDirection>> {
        if self.directions.is_empty() {
            return Err(CliError::Config("knife.directions is empty".into()));
        }
        self.directions.iter().map(|d| d.parse().map_err(core_config)).collect()
    }
}

impl NoiseConfig {
    pub fn params(&self) -> NoiseParams {
        NoiseParams {
            werner_p: self.werner_p,
            contamination: self.contamination,
            mean_pairs_per_pulse: self.mean_pairs_per_pulse,
            phase_rad: self.phase_rad,
        }
    }
}

impl BellConfig {
    pub fn pulse_rate(&self, purpose: &str) -> CliResult<f64> {
        self.pulse_rate_hz.ok_or_else(|| {
            CliError::Config(format!("bell.pulse_rate_hz is required to {purpose}; it has no default"))
        })
    }
}
