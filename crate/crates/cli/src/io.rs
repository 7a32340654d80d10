//! CSV and TOML file formats. Every writer has a matching reader and
//! floats are written in shortest round-trip form.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wgspdc_core::beam::{KnifeEdgeScan, KnifeRecord, ScanDirection};
use wgspdc_core::model::{FieldLabel, GeometricDispersionTable, IntensityGrid, ModeIndex, ModeTriplet};
use wgspdc_core::phasematch::SfgObservation;
use wgspdc_core::polarization::{AnalyzerSetting, CountRecord};

use crate::error::{CliError, CliResult};

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line());
    match (e.kind(), line) {
        (csv::ErrorKind::Io(_), _) => CliError::parse(path, e.to_string()),
        (_, Some(l)) => CliError::parse(path, format!("line {l}: {}", describe(&e))),
        _ => CliError::parse(path, e.to_string()),
    }
}

fn describe(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    }
}

/// Reads every row of a headed CSV file. Each row is converted with `f`;
/// all errors name the offending line.
pub fn read_rows<R, T>(path: &Path, mut f: impl FnMut(R) -> Result<T, String>) -> CliResult<Vec<T>>
where
    R: DeserializeOwned,
{
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::parse(path, format!("{other:?}")),
        })?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: R = record
            .deserialize(Some(&headers))
            .map_err(|e| CliError::parse(path, format!("line {line}: {}", describe(&e))))?;
        out.push(f(row).map_err(|msg| CliError::parse(path, format!("line {line}: {msg}")))?);
    }
    Ok(out)
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn mode(s: &str) -> Result<ModeIndex, String> {
    s.parse().map_err(|e: wgspdc_core::Error| e.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
struct SfgRow {
    lambda_nm: f64,
    ij_v: String,
    ij_h: String,
    ij_p: String,
    rel_eff_pct: Option<f64>,
}

/// Identified degenerate SFG processes: wavelength, the V, H and pump mode
/// labels, and an optional relative efficiency.
pub fn read_sfg(path: &Path) -> CliResult<Vec<SfgObservation>> {
    let rows = read_rows(path, |r: SfgRow| {
        if !(r.lambda_nm > 0.0) || !r.lambda_nm.is_finite() {
            return Err(format!("wavelength {} nm is not positive", r.lambda_nm));
        }
        if let Some(e) = r.rel_eff_pct {
            if !(e >= 0.0) {
                return Err(format!("relative efficiency {e} is negative"));
            }
        }
        Ok(SfgObservation {
            lambda_nm: r.lambda_nm,
            triplet: ModeTriplet::new(mode(&r.ij_p)?, mode(&r.ij_h)?, mode(&r.ij_v)?),
            relative_efficiency_pct: r.rel_eff_pct,
        })
    })?;
    if rows.is_empty() {
        return Err(CliError::parse(path, "no observations"));
    }
    Ok(rows)
}

pub fn write_sfg(path: &Path, obs: &[SfgObservation]) -> CliResult<()> {
    write_rows(
        path,
        obs.iter().map(|o| SfgRow {
            lambda_nm: o.lambda_nm,
            ij_v: o.triplet.v.to_string(),
            ij_h: o.triplet.h.to_string(),
            ij_p: o.triplet.pump.to_string(),
            rel_eff_pct: o.relative_efficiency_pct,
        }),
    )
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    sellmeier_source: String,
    global_offset_rad_per_m: f64,
    #[serde(default)]
    correction: Vec<TableEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    field: String,
    mode: String,
    dk_rad_per_m: f64,
}

pub fn write_table(path: &Path, table: &GeometricDispersionTable, sellmeier_source: &str) -> CliResult<()> {
    let file = TableFile {
        sellmeier_source: sellmeier_source.to_string(),
        global_offset_rad_per_m: table.global_offset,
        correction: table
            .entries()
            .map(|(f, m, dk)| TableEntry {
                field: f.to_string(),
                mode: m.to_string(),
                dk_rad_per_m: dk,
            })
            .collect(),
    };
    let text = toml::to_string(&file).map_err(|e| CliError::parse(path, e.to_string()))?;
    write_text(path, &text)
}

/// Returns the table and the Sellmeier source it was fitted against.
pub fn read_table(path: &Path) -> CliResult<(GeometricDispersionTable, String)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: TableFile = toml::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))?;
    let mut table = GeometricDispersionTable::with_offset(file.global_offset_rad_per_m);
    for e in &file.correction {
        let field: FieldLabel = e.field.parse().map_err(|x: wgspdc_core::Error| CliError::parse(path, x.to_string()))?;
        let m = mode(&e.mode).map_err(|x| CliError::parse(path, x))?;
        table.set(field, m, e.dk_rad_per_m).map_err(|x| CliError::parse(path, x.to_string()))?;
    }
    Ok((table, file.sellmeier_source))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub lambda_h_nm: f64,
    pub lambda_v_nm: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub triplet: String,
    pub lambda_h_nm: f64,
    pub lambda_v_nm: f64,
    pub intensity: f64,
}

pub fn read_grid(path: &Path) -> CliResult<Vec<GridRow>> {
    read_rows(path, Ok)
}

pub fn read_layers(path: &Path) -> CliResult<Vec<LayerRow>> {
    read_rows(path, |r: LayerRow| {
        r.triplet.parse::<ModeTriplet>().map_err(|e| e.to_string())?;
        Ok(r)
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct KnifeRow {
    z_mm: f64,
    x_um: f64,
    counts: f64,
    duration_s: f64,
    direction: String,
}

pub fn write_scan(path: &Path, scan: &KnifeEdgeScan) -> CliResult<()> {
    write_rows(
        path,
        scan.records.iter().map(|r| KnifeRow {
            z_mm: r.z_mm,
            x_um: r.x_um,
            counts: r.counts,
            duration_s: r.duration_s,
            direction: r.direction.to_string(),
        }),
    )
}

pub fn read_scan(path: &Path) -> CliResult<KnifeEdgeScan> {
    let records = read_rows(path, |r: KnifeRow| {
        let direction: ScanDirection = r.direction.parse().map_err(|e: wgspdc_core::Error| e.to_string())?;
        if !(r.counts >= 0.0) || !(r.duration_s > 0.0) {
            return Err("counts must be >= 0 and duration positive".into());
        }
        Ok(KnifeRecord {
            z_mm: r.z_mm,
            x_um: r.x_um,
            counts: r.counts,
            duration_s: r.duration_s,
            direction,
        })
    })?;
    Ok(KnifeEdgeScan { records })
}

/// One fitted knife-edge plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneRow {
    pub direction: String,
    pub z_mm: f64,
    pub w_um: f64,
    pub sigma_w_um: f64,
    pub x0_um: f64,
    pub sigma_x0_um: f64,
    pub amplitude: f64,
    pub background: f64,
    pub r_squared: f64,
}

pub fn read_planes(path: &Path) -> CliResult<Vec<(ScanDirection, PlaneRow)>> {
    read_rows(path, |r: PlaneRow| {
        let d: ScanDirection = r.direction.parse().map_err(|e: wgspdc_core::Error| e.to_string())?;
        if !(r.w_um > 0.0) {
            return Err(format!("radius {} um is not positive", r.w_um));
        }
        Ok((d, r))
    })
}

/// Coincidence record columns. `power_mw` may be empty.
#[derive(Debug, Serialize, Deserialize)]
struct CountRow {
    qwp1_deg: f64,
    hwp1_deg: f64,
    pol1_deg: f64,
    qwp2_deg: f64,
    hwp2_deg: f64,
    pol2_deg: f64,
    coinc: f64,
    singles1_hz: f64,
    singles2_hz: f64,
    duration_s: f64,
    power_mw: Option<f64>,
}

pub fn write_counts(path: &Path, records: &[CountRecord]) -> CliResult<()> {
    write_rows(
        path,
        records.iter().map(|r| {
            let [a, b] = r.settings;
            CountRow {
                qwp1_deg: a.qwp_deg,
                hwp1_deg: a.hwp_deg,
                pol1_deg: a.pol_deg,
                qwp2_deg: b.qwp_deg,
                hwp2_deg: b.hwp_deg,
                pol2_deg: b.pol_deg,
                coinc: r.coincidences,
                singles1_hz: r.singles_hz[0],
                singles2_hz: r.singles_hz[1],
                duration_s: r.duration_s,
                power_mw: r.power_mw,
            }
        }),
    )
}

pub fn read_counts(path: &Path) -> CliResult<Vec<CountRecord>> {
    let records = read_rows(path, |r: CountRow| {
        let rec = CountRecord {
            settings: [
                AnalyzerSetting::new(r.qwp1_deg, r.hwp1_deg, r.pol1_deg),
                AnalyzerSetting::new(r.qwp2_deg, r.hwp2_deg, r.pol2_deg),
            ],
            coincidences: r.coinc,
            singles_hz: [r.singles1_hz, r.singles2_hz],
            duration_s: r.duration_s,
            power_mw: r.power_mw,
        };
        rec.validate().map_err(|e| e.to_string())?;
        Ok(rec)
    })?;
    if records.is_empty() {
        return Err(CliError::parse(path, "no count records"));
    }
    Ok(records)
}

#[derive(Debug, Serialize, Deserialize)]
struct IntensityRow {
    x_um: f64,
    y_um: f64,
    intensity: f64,
}

/// Transverse intensity map with rows in any order; the points must fill a
/// rectangular grid.
pub fn read_intensity(path: &Path) -> CliResult<IntensityGrid> {
    let rows = read_rows(path, |r: IntensityRow| Ok((r.x_um, r.y_um, r.intensity)))?;
    let axis = |pick: fn(&(f64, f64, f64)) -> f64| {
        let mut v: Vec<f64> = rows.iter().map(pick).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let xs = axis(|r| r.0);
    let ys = axis(|r| r.1);
    if xs.len() * ys.len() != rows.len() {
        return Err(CliError::parse(
            path,
            format!("{} points do not form a {}x{} grid", rows.len(), xs.len(), ys.len()),
        ));
    }
    let mut values = vec![f64::NAN; rows.len()];
    for (x, y, v) in &rows {
        let ix = xs.binary_search_by(|a| a.total_cmp(x)).unwrap_or(0);
        let iy = ys.binary_search_by(|a| a.total_cmp(y)).unwrap_or(0);
        values[iy * xs.len() + ix] = *v;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(CliError::parse(path, "duplicate grid points"));
    }
    IntensityGrid::new(xs, ys, values).map_err(|e| CliError::parse(path, e.to_string()))
}

pub fn write_intensity(path: &Path, grid: &IntensityGrid) -> CliResult<()> {
    let mut rows = Vec::with_capacity(grid.values.len());
    for (iy, &y) in grid.ys_um.iter().enumerate() {
        for (ix, &x) in grid.xs_um.iter().enumerate() {
            rows.push(IntensityRow { x_um: x, y_um: y, intensity: grid.value(ix, iy) });
        }
    }
    write_rows(path, rows)
}
