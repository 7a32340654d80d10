use std::path::Path;

use serde::Serialize;
use wgspdc_core::phasematch::{calibrate, degenerate_pm_wavelength, ModeTriplet};

use crate::error::CliResult;
use crate::io;
use crate::report::{fmt, Report};
use crate::Context;

#[derive(Serialize)]
struct ResidualCsv {
    lambda_nm: f64,
    triplet: String,
    residual_rad_per_m: f64,
    residual_nm: f64,
    slope_rad_per_m_per_nm: f64,
}

pub fn run(ctx: &Context, sfg: Option<&Path>) -> CliResult<String> {
    let cfg = ctx.config()?;
    let sfg_path = match sfg {
        Some(p) => p.to_path_buf(),
        None => cfg.sfg_path()?,
    };
    let obs = io::read_sfg(&sfg_path)?;
    let initial = cfg.bulk_model()?;
    let grating = cfg.grating()?;
    let cal = calibrate(&obs, &initial, &grating, &cfg.calibration_options()?)?;

    let table_path = ctx.out("dispersion_table.toml");
    io::write_table(&table_path, cal.table(), &initial.sellmeier.source)?;
    let residual_path = ctx.out("calibration_residuals.csv");
    io::write_rows(
        &residual_path,
        cal.residuals.iter().map(|r| ResidualCsv {
            lambda_nm: r.observation.lambda_nm,
            triplet: r.observation.triplet.to_string(),
            residual_rad_per_m: r.residual_rad_per_m,
            residual_nm: r.residual_nm,
            slope_rad_per_m_per_nm: r.slope_rad_per_m_per_nm,
        }),
    )?;

    let mut rep = Report::new("calibration");
    rep.line("observations", obs.len())
        .line("sellmeier", &initial.sellmeier.source)
        .line("rms_nm", fmt(cal.rms_nm, 4))
        .line("rms_rad_per_m", fmt(cal.rms_rad_per_m, 2))
        .line("max_abs_nm", fmt(cal.max_abs_nm, 4));
    match degenerate_pm_wavelength(&cal.model, &grating, &ModeTriplet::FUNDAMENTAL) {
        Ok(l) => rep.line("fundamental_degenerate_nm", fmt(l, 3)),
        Err(e) => rep.line("fundamental_degenerate_nm", format!("none ({e})")),
    };
    rep.section("parameters_rad_per_m");
    for (p, v) in &cal.parameters {
        rep.line(&p.to_string(), fmt(*v, 3));
    }
    rep.section("residuals_nm");
    for r in &cal.residuals {
        rep.line(
            &format!("{} {}", fmt(r.observation.lambda_nm, 2), r.observation.triplet),
            fmt(r.residual_nm, 4),
        );
    }
    let report_path = ctx.out("calibration_report.txt");
    io::write_text(&report_path, rep.as_str())?;

    let mut m = ctx.manifest("calibrate");
    m.input(&cfg.sellmeier_path()).input(&sfg_path);
    m.output(&table_path).output(&residual_path).output(&report_path);
    m.finish(&ctx.out_dir)?;
    Ok(rep.as_str().to_string())
}
