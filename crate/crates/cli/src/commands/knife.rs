use std::path::Path;

use serde::Serialize;
use wgspdc_core::beam::{
    fit_caustic, fit_edge_scan, iso_sampling_check, synth_scan, BeamProfile, CausticPoint, EdgeFitOptions,
    KnifeEdgeScan, ScanDirection, ScanPlan,
};

use crate::config::parse_noise;
use crate::error::{CliError, CliResult};
use crate::io::{self, PlaneRow};
use crate::report::{fmt, pm, Report};
use crate::{Context, KnifeCommand};

pub fn run(ctx: &Context, cmd: &KnifeCommand) -> CliResult<String> {
    match cmd {
        KnifeCommand::Synth { m2, mode_weights } => synth(ctx, *m2, mode_weights.as_deref()),
        KnifeCommand::Fit { scan } => fit(ctx, scan),
        KnifeCommand::M2 { planes, lambda_nm } => m2(ctx, planes, *lambda_nm),
    }
}

fn synth(ctx: &Context, m2: Option<f64>, weights: Option<&[f64]>) -> CliResult<String> {
    let cfg = ctx.config()?;
    let k = cfg.knife()?;
    let mut beam = k.beam()?;
    if let Some(m2) = m2 {
        beam.profile = BeamProfile::PartiallyCoherent { m2 };
    }
    if let Some(w) = weights {
        beam.profile = BeamProfile::HermiteGauss { weights: w.to_vec() };
    }
    beam.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let planes = k.planes()?;
    let noise = parse_noise(&k.noise)?;
    let mut scan = KnifeEdgeScan::default();
    for (n, dir) in k.directions()?.into_iter().enumerate() {
        let mut plan = ScanPlan::relative(planes.clone(), k.points_per_plane, k.half_span_widths, dir);
        plan.duration_s = k.duration_s;
        plan.peak_rate_hz = k.peak_rate_hz;
        plan.background_hz = k.background_hz;
        let part = synth_scan(&beam, &plan, noise, ctx.seed.wrapping_add(n as u64))?;
        scan.records.extend(part.records);
    }
    let path = ctx.out("knife_scan.csv");
    io::write_scan(&path, &scan)?;

    let mut rep = Report::new("knife-edge synthesis");
    rep.line("seed", ctx.seed)
        .line("beam_m2", fmt(beam.m2(), 4))
        .line("w0_um", fmt(beam.w0_um, 3))
        .line("rayleigh_range_mm", fmt(beam.rayleigh_range_mm(), 3))
        .line("planes", planes.len())
        .line("records", scan.records.len());
    let mut m = ctx.manifest("knife synth");
    m.seed(ctx.seed).output(&path);
    m.finish(&ctx.out_dir)?;
    Ok(rep.as_str().to_string())
}

fn fit(ctx: &Context, scan_path: &Path) -> CliResult<String> {
    let scan = io::read_scan(scan_path)?;
    let mut rows = Vec::new();
    let mut rep = Report::new("knife-edge fits");
    for dir in scan.directions() {
        let fits = scan
            .planes(dir)
            .into_iter()
            .map(|(z, pts)| fit_edge_scan(&pts, &EdgeFitOptions::default()).map(|f| (z, f)))
            .collect::<Result<Vec<_>, _>>()?;
        let min_r2 = fits.iter().map(|(_, f)| f.r_squared).fold(1.0, f64::min);
        rep.line(&format!("{dir}_planes"), fits.len())
            .line(&format!("{dir}_min_r_squared"), fmt(min_r2, 6));
        for (z, e) in &fits {
            rows.push(PlaneRow {
                direction: dir.to_string(),
                z_mm: *z,
                w_um: e.w_um,
                sigma_w_um: e.sigma_w_um,
                x0_um: e.x0_um,
                sigma_x0_um: e.sigma_x0_um,
                amplitude: e.amplitude,
                background: e.background,
                r_squared: e.r_squared,
            });
        }
    }
    if rows.is_empty() {
        return Err(CliError::parse(scan_path, "scan has no records"));
    }
    let planes_path = ctx.out("knife_planes.csv");
    io::write_rows(&planes_path, &rows)?;
    let report_path = ctx.out("knife_fit_report.txt");
    io::write_text(&report_path, rep.as_str())?;
    let mut m = ctx.manifest("knife fit");
    m.input(scan_path).output(&planes_path).output(&report_path);
    m.finish(&ctx.out_dir)?;
    Ok(rep.as_str().to_string())
}

#[derive(Serialize)]
struct M2Row {
    direction: String,
    m2: f64,
    sigma_m2: f64,
    w0_um: f64,
    sigma_w0_um: f64,
    z0_mm: f64,
    sigma_z0_mm: f64,
    z_r_mm: f64,
    chi2: f64,
    iso_pass: bool,
}

fn m2(ctx: &Context, planes_path: &Path, lambda_nm: Option<f64>) -> CliResult<String> {
    let lambda = match lambda_nm {
        Some(l) => l,
        None => ctx
            .config
            .as_ref()
            .and_then(|c| c.knife.as_ref())
            .map(|k| k.lambda_nm)
            .ok_or_else(|| CliError::Config("wavelength unknown: pass --lambda-nm or configure [knife]".into()))?,
    };
    let planes = io::read_planes(planes_path)?;
    let mut rep = Report::new("beam quality");
    rep.line("lambda_nm", fmt(lambda, 2));
    let mut rows = Vec::new();
    for dir in ScanDirection::ALL {
        let pts: Vec<CausticPoint> = planes
            .iter()
            .filter(|(d, _)| *d == dir)
            .map(|(_, p)| CausticPoint {
                z_mm: p.z_mm,
                w_um: p.w_um,
                sigma_w_um: (p.sigma_w_um > 0.0).then_some(p.sigma_w_um),
            })
            .collect();
        if pts.is_empty() {
            continue;
        }
        let fit = fit_caustic(&pts, lambda)?;
        let zs: Vec<f64> = pts.iter().map(|p| p.z_mm).collect();
        let iso = iso_sampling_check(&zs, &fit);
        rep.section(&dir.to_string())
            .line("m2", pm(fit.m2, fit.sigma_m2(), 4))
            .line("w0_um", pm(fit.w0_um, fit.sigma_w0_um(), 3))
            .line("z0_mm", pm(fit.z0_mm, fit.sigma_z0_mm(), 3))
            .line("z_r_mm", fmt(fit.z_r_mm, 3))
            .line("chi2", fmt(fit.chi2, 4))
            .line("iso_sampling", format!("{} ({})", if iso.pass { "pass" } else { "FAIL" }, iso.diagnostic));
        rows.push(M2Row {
            direction: dir.to_string(),
            m2: fit.m2,
            sigma_m2: fit.sigma_m2(),
            w0_um: fit.w0_um,
            sigma_w0_um: fit.sigma_w0_um(),
            z0_mm: fit.z0_mm,
            sigma_z0_mm: fit.sigma_z0_mm(),
            z_r_mm: fit.z_r_mm,
            chi2: fit.chi2,
            iso_pass: iso.pass,
        });
    }
    if rows.is_empty() {
        return Err(CliError::parse(planes_path, "no fitted planes"));
    }
    let csv_path = ctx.out("knife_m2.csv");
    io::write_rows(&csv_path, &rows)?;
    let report_path = ctx.out("knife_m2_report.txt");
    io::write_text(&report_path, rep.as_str())?;
    let mut m = ctx.manifest("knife m2");
    m.input(planes_path).output(&csv_path).output(&report_path);
    m.finish(&ctx.out_dir)?;
    Ok(rep.as_str().to_string())
}
