use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use wgspdc_core::beam::{axis_order_weights, predict_m2, ScanDirection};
use wgspdc_core::model::{DispersionModel, FieldLabel, IntensityGrid, ModeIndex, ModeTriplet};
use wgspdc_core::model::intensity_overlap;
use wgspdc_core::phasematch::{
    band_map, default_triplet_universe, degenerate_pm_wavelength, SpectralGrid,
};
use wgspdc_core::spectra::{
    apply_filter, heralded_mode_weights, island_weights, joint_spectrum, spatial_purity, SpectralFilter,
};

use crate::config::ProjectConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, GridRow, LayerRow};
use crate::manifest::ManifestBuilder;
use crate::report::{fmt, Report};
use crate::{Context, SpectralArgs};

/// Calibrated model: Sellmeier file plus the fitted table.
fn calibrated_model(cfg: &ProjectConfig, args: &SpectralArgs, m: &mut ManifestBuilder) -> CliResult<(DispersionModel, Vec<String>)> {
    let table_path = cfg.table_path(args.table.as_deref())?;
    let (table, source) = io::read_table(&table_path)?;
    let mut dm = cfg.bulk_model()?;
    let mut notes = Vec::new();
    if source != dm.sellmeier.source {
        notes.push(format!(
            "table was fitted against {source:?}, configured Sellmeier data is {:?}",
            dm.sellmeier.source
        ));
    }
    dm.table = table;
    m.input(&cfg.sellmeier_path()).input(&table_path);
    Ok((dm, notes))
}

/// Default universe restricted to `pumps` and to modes the table covers.
fn triplets(dm: &DispersionModel, pumps: Option<&[ModeIndex]>) -> CliResult<(Vec<ModeTriplet>, Vec<ModeTriplet>)> {
    let mut keep = Vec::new();
    let mut skipped = Vec::new();
    for t in default_triplet_universe() {
        if let Some(p) = pumps {
            if !p.contains(&t.pump) {
                continue;
            }
        }
        if FieldLabel::ALL.iter().all(|f| dm.table.contains(*f, t.mode(*f))) {
            keep.push(t);
        } else {
            skipped.push(t);
        }
    }
    if keep.is_empty() {
        return Err(CliError::Config("no triplet of the selected pump modes is covered by the table".into()));
    }
    Ok((keep, skipped))
}

fn pump_modes(args: &SpectralArgs, configured: Option<Vec<ModeIndex>>) -> CliResult<Option<Vec<ModeIndex>>> {
    match &args.pump_modes {
        Some(list) => list
            .iter()
            .map(|s| s.parse().map_err(|e: wgspdc_core::Error| CliError::Config(e.to_string())))
            .collect::<CliResult<Vec<_>>>()
            .map(Some),
        None => Ok(configured),
    }
}

fn dense(grid: &SpectralGrid, values: &[f64]) -> Vec<GridRow> {
    let mut out = Vec::with_capacity(values.len());
    for (iv, &lv) in grid.lambda_v_nm.iter().enumerate() {
        for (ih, &lh) in grid.lambda_h_nm.iter().enumerate() {
            out.push(GridRow { lambda_h_nm: lh, lambda_v_nm: lv, intensity: values[grid.index(ih, iv)] });
        }
    }
    out
}

fn sparse(grid: &SpectralGrid, triplet: &ModeTriplet, values: &[f64], threshold: f64, out: &mut Vec<LayerRow>) {
    let peak = values.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return;
    }
    let name = triplet.to_string();
    for (iv, &lv) in grid.lambda_v_nm.iter().enumerate() {
        for (ih, &lh) in grid.lambda_h_nm.iter().enumerate() {
            let v = values[grid.index(ih, iv)];
            if v >= threshold * peak {
                out.push(LayerRow { triplet: name.clone(), lambda_h_nm: lh, lambda_v_nm: lv, intensity: v });
            }
        }
    }
}

#[derive(Serialize)]
struct BandIndexRow {
    triplet: String,
    pump: String,
    degenerate_nm: Option<f64>,
    separation_from_fundamental_nm: Option<f64>,
    peak_intensity: f64,
}

pub fn bands(ctx: &Context, args: &SpectralArgs) -> CliResult<String> {
    let cfg = ctx.config()?;
    let mut m = ctx.manifest("bands");
    let (dm, notes) = calibrated_model(cfg, args, &mut m)?;
    let grating = cfg.grating()?;
    let (spec, configured) = cfg.bands()?;
    let pumps = pump_modes(args, configured)?;
    let (set, skipped) = triplets(&dm, pumps.as_deref())?;
    let map = band_map(&dm, &grating, &set, &spec)?;

    let mut total = vec![0.0; map.grid.len()];
    let mut layers = Vec::new();
    for l in &map.layers {
        for (t, v) in total.iter_mut().zip(&l.values) {
            *t += v;
        }
        sparse(&map.grid, &l.triplet, &l.values, args.threshold, &mut layers);
    }
    let fundamental = degenerate_pm_wavelength(&dm, &grating, &ModeTriplet::FUNDAMENTAL).ok();
    let mut index = Vec::new();
    for l in &map.layers {
        let deg = degenerate_pm_wavelength(&dm, &grating, &l.triplet).ok();
        index.push(BandIndexRow {
            triplet: l.triplet.to_string(),
            pump: l.triplet.pump.to_string(),
            degenerate_nm: deg,
            separation_from_fundamental_nm: deg.zip(fundamental).map(|(a, b)| (a - b).abs()),
            peak_intensity: l.max(),
        });
    }

    let total_path = ctx.out("bands_total.csv");
    io::write_rows(&total_path, dense(&map.grid, &total))?;
    let layers_path = ctx.out("bands_layers.csv");
    io::write_rows(&layers_path, &layers)?;
    let index_path = ctx.out("bands_index.csv");
    io::write_rows(&index_path, &index)?;

    let mut rep = Report::new("bands");
    rep.line("layers", map.layers.len()).line("layer_threshold", args.threshold);
    if let Some(p) = &pumps {
        rep.line("pump_modes", p.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","));
    }
    for n in &notes {
        rep.line("warning", n);
    }
    if !skipped.is_empty() {
        rep.line(
            "skipped_uncalibrated",
            skipped.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" "),
        );
    }
    let others = index.iter().filter(|r| r.triplet != ModeTriplet::FUNDAMENTAL.to_string());
    match fundamental {
        Some(f) => {
            rep.line("fundamental_degenerate_nm", fmt(f, 3));
            let nearest_00p = others
                .clone()
                .filter(|r| r.pump == "00")
                .filter_map(|r| r.separation_from_fundamental_nm.map(|s| (s, &r.triplet)))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((s, t)) = nearest_00p {
                rep.line("nearest_00P_band", format!("{t} at {} nm", fmt(s, 3)));
            }
            let close: Vec<String> = others
                .filter(|r| r.pump != "00")
                .filter_map(|r| r.separation_from_fundamental_nm.filter(|s| *s < 3.0).map(|s| format!("{} ({} nm)", r.triplet, fmt(s, 3))))
                .collect();
            rep.line("non_00P_bands_within_3nm", if close.is_empty() { "none".to_string() } else { close.join(", ") });
        }
        None => {
            rep.line("fundamental_degenerate_nm", "none in search window");
        }
    }
    let report_path = ctx.out("bands_report.txt");
    io::write_text(&report_path, rep.as_str())?;

    m.output(&total_path).output(&layers_path).output(&index_path).output(&report_path);
    m.finish(&ctx.out_dir)?;
    Ok(rep.as_str().to_string())
}

#[derive(Serialize)]
struct IslandRow {
    triplet: String,
    efficiency: f64,
    weight: f64,
    filtered_weight: f64,
}

#[derive(Serialize)]
struct ModeRow {
    arm: String,
    mode: String,
    unheralded_weight: f64,
    heralded_weight: Option<f64>,
}

fn m2_line(weights: &BTreeMap<ModeIndex, f64>) -> String {
    ScanDirection::ALL
        .iter()
        .map(|d| {
            let w = axis_order_weights(weights, *d);
            let m2 = predict_m2(&w).map(|v| fmt(v, 4)).unwrap_or_else(|e| e.to_string());
            format!("{d} {m2}")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn jsa(ctx: &Context, args: &SpectralArgs) -> CliResult<String> {
    let cfg = ctx.config()?;
    let mut m = ctx.manifest("jsa");
    let (dm, notes) = calibrated_model(cfg, args, &mut m)?;
    let grating = cfg.grating()?;
    let pump = cfg.pump()?;
    let basis = cfg.basis()?;
    let j = cfg.jsa()?;
    let pumps = pump_modes(args, j.pump_modes()?)?;
    let (set, skipped) = triplets(&dm, pumps.as_deref())?;
    let js = joint_spectrum(&dm, &grating, &pump, &basis, &set, &j.grid.spec())?;
    let filters = j.filters.iter().map(|f| f.filter()).collect::<CliResult<Vec<SpectralFilter>>>()?;
    let mut filtered = js.clone();
    for f in &filters {
        filtered = apply_filter(&filtered, f);
    }

    let open = island_weights(&js)?;
    let closed = island_weights(&filtered)?;
    let purity = spatial_purity(&filtered, &ModeTriplet::FUNDAMENTAL)?;
    let islands: Vec<IslandRow> = open
        .iter()
        .zip(&closed)
        .zip(&js.efficiencies)
        .map(|(((t, w), (_, fw)), e)| IslandRow { triplet: t.to_string(), efficiency: *e, weight: *w, filtered_weight: *fw })
        .collect();

    let mut layers = Vec::new();
    for k in 0..filtered.layers.len() {
        sparse(&filtered.grid, &filtered.layers[k].triplet, &filtered.layer_values(k), args.threshold, &mut layers);
    }
    let total_path = ctx.out("jsa_total.csv");
    io::write_rows(&total_path, dense(&filtered.grid, &filtered.total()))?;
    let layers_path = ctx.out("jsa_layers.csv");
    io::write_rows(&layers_path, &layers)?;
    let islands_path = ctx.out("jsa_islands.csv");
    io::write_rows(&islands_path, &islands)?;

    let mut rep = Report::new("joint spectrum");
    rep.line("islands", js.layers.len());
    for n in &notes {
        rep.line("warning", n);
    }
    if !skipped.is_empty() {
        rep.line("skipped_uncalibrated", skipped.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" "));
    }
    for f in &filters {
        rep.line("filter", format!("{} {} nm FWHM {} nm {:?}", f.arm, fmt(f.center_nm, 2), fmt(f.fwhm_nm, 2), f.shape));
    }
    rep.line("spatial_purity_00P->00H+00V", fmt(purity, 5));

    let mut modes = Vec::new();
    let herald = j.herald.as_ref().map(|h| h.filter()).transpose()?;
    let arms: Vec<FieldLabel> = match &herald {
        Some(h) => vec![if h.arm == FieldLabel::H { FieldLabel::V } else { FieldLabel::H }],
        None => vec![FieldLabel::H, FieldLabel::V],
    };
    rep.section("mode_weights");
    for arm in arms {
        let un = heralded_mode_weights(&js, arm, None)?;
        let he = herald.as_ref().map(|h| heralded_mode_weights(&js, arm, Some(h))).transpose()?;
        for (mode, w) in &un {
            modes.push(ModeRow {
                arm: arm.to_string(),
                mode: mode.to_string(),
                unheralded_weight: *w,
                heralded_weight: he.as_ref().map(|h| h.get(mode).copied().unwrap_or(0.0)),
            });
        }
        rep.line(&format!("{arm}_unheralded_predicted_m2"), m2_line(&un));
        if let (Some(h), Some(f)) = (&he, &herald) {
            rep.line(
                &format!("{arm}_heralded_predicted_m2"),
                format!("{} (herald {} {} nm FWHM {} nm)", m2_line(h), f.arm, fmt(f.center_nm, 2), fmt(f.fwhm_nm, 2)),
            );
        }
    }
    let modes_path = ctx.out("jsa_modes.csv");
    io::write_rows(&modes_path, &modes)?;
    rep.section("island_weights");
    for r in &islands {
        rep.line(&r.triplet, format!("{} filtered {}", fmt(r.weight, 5), fmt(r.filtered_weight, 5)));
    }
    let report_path = ctx.out("jsa_summary.txt");
    io::write_text(&report_path, rep.as_str())?;

    m.output(&total_path)
        .output(&layers_path)
        .output(&islands_path)
        .output(&modes_path)
        .output(&report_path);
    m.finish(&ctx.out_dir)?;
    Ok(rep.as_str().to_string())
}

pub fn overlap(ctx: &Context, first: &Path, second: &Path) -> CliResult<String> {
    let a: IntensityGrid = io::read_intensity(first)?;
    let b = io::read_intensity(second)?;
    let o = intensity_overlap(&a, &b)?;
    let mut rep = Report::new("intensity overlap");
    rep.line("first", crate::display(first))
        .line("second", crate::display(second))
        .line("grid", format!("{}x{}", a.xs_um.len(), a.ys_um.len()))
        .line("overlap", fmt(o, 6));
    let report_path = ctx.out("overlap_report.txt");
    io::write_text(&report_path, rep.as_str())?;
    let mut m = ctx.manifest("overlap");
    m.input(first).input(second).output(&report_path);
    m.finish(&ctx.out_dir)?;
    Ok(rep.as_str().to_string())
}
