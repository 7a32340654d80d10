use std::path::Path;

use serde::Serialize;
use wgspdc_core::beam::ScanNoise;
use wgspdc_core::polarization::{
    chsh_from_records, chsh_settings, correct_counts, shih_alley_state, simulate_counts, visibility_from_records,
    AnalyzerSetting, ChshAngles, CorrectionOptions, CountRecord, CountSimulation,
};

use crate::config::{parse_noise, BellConfig};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::report::{fmt, pm, Report};
use crate::{BellCommand, Context, Plan};

pub fn run(ctx: &Context, cmd: &BellCommand) -> CliResult<String> {
    match cmd {
        BellCommand::Simulate { plan } => simulate(ctx, *plan),
        BellCommand::Visibility { counts, raw } => visibility(ctx, counts, *raw),
        BellCommand::Chsh { counts, raw } => chsh(ctx, counts, *raw),
    }
}

/// Reference polarizations on arm 1, with the arm-2 quarter-wave plate
/// angle used for the scan (`None` for a co-rotated linear scan).
fn references() -> [(&'static str, AnalyzerSetting, Option<f64>); 6] {
    [
        ("H", AnalyzerSetting::linear(0.0), None),
        ("V", AnalyzerSetting::linear(90.0), None),
        ("D", AnalyzerSetting::linear(45.0), None),
        ("A", AnalyzerSetting::linear(135.0), None),
        ("R", AnalyzerSetting::new(45.0, 0.0, 0.0), Some(0.0)),
        ("L", AnalyzerSetting::new(-45.0, 0.0, 0.0), Some(0.0)),
    ]
}

const SCAN_STEPS: usize = 24;
const SCAN_STEP_DEG: f64 = 7.5;

fn reference_plan() -> Vec<(AnalyzerSetting, AnalyzerSetting)> {
    let mut out = Vec::new();
    for (_, reference, qwp) in references() {
        for k in 0..SCAN_STEPS {
            let angle = k as f64 * SCAN_STEP_DEG;
            let s2 = match qwp {
                Some(q) => AnalyzerSetting::new(q, angle / 2.0, 0.0),
                None => AnalyzerSetting::linear(angle),
            };
            out.push((reference, s2));
        }
    }
    out
}

/// Name of the reference polarization analyzed by `s`, if it is one of the six.
fn reference_name(s: &AnalyzerSetting) -> &'static str {
    let a = s.stokes();
    for (name, r, _) in references() {
        let b = r.stokes();
        if a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() > 1.0 - 1e-6 {
            return name;
        }
    }
    "other"
}

fn simulate(ctx: &Context, plan: Plan) -> CliResult<String> {
    let cfg = ctx.config()?;
    let bell = cfg.bell()?;
    let sim_cfg = bell
        .simulation
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [bell.simulation] section".into()))?;
    let state = shih_alley_state(&bell.noise.params())?;
    let settings = match plan {
        Plan::Chsh => chsh_settings(&ChshAngles::default()),
        Plan::References => reference_plan(),
    };
    let mut sim = CountSimulation::new(sim_cfg.pairs_per_setting);
    sim.duration_s = sim_cfg.duration_s;
    sim.singles_hz = [sim_cfg.singles1_hz, sim_cfg.singles2_hz];
    sim.power_mw = sim_cfg.power_mw;
    sim.poisson = parse_noise(&sim_cfg.noise)? == ScanNoise::Poisson;
    if sim_cfg.accidentals {
        sim.pulse_rate_hz = Some(bell.pulse_rate("simulate accidentals")?);
    }
    let records = simulate_counts(&state, &settings, &sim, ctx.seed)?;
    let path = ctx.out("bell_counts.csv");
    io::write_counts(&path, &records)?;

    let mut rep = Report::new("coincidence simulation");
    rep.line("seed", ctx.seed)
        .line("plan", format!("{plan:?}").to_lowercase())
        .line("records", records.len())
        .line("purity", fmt(state.purity(), 6))
        .line("double_pair_weight", fmt(bell.noise.params().double_pair_weight(), 6));
    let mut m = ctx.manifest("bell simulate");
    m.seed(ctx.seed).output(&path);
    m.finish(&ctx.out_dir)?;
    Ok(rep.as_str().to_string())
}

fn corrected(bell: Option<&BellConfig>, records: Vec<CountRecord>, raw: bool, rep: &mut Report) -> CliResult<Vec<CountRecord>> {
    if raw {
        rep.line("corrections", "none");
        return Ok(records);
    }
    let bell = bell.ok_or_else(|| {
        CliError::Config("count corrections need a [bell] section (or pass --raw)".into())
    })?;
    let pulse_rate = if bell.subtract_accidentals {
        bell.pulse_rate("subtract accidentals")?
    } else {
        0.0
    };
    let options = CorrectionOptions {
        pulse_rate_hz: pulse_rate,
        reference_power_mw: bell.reference_power_mw,
        power_exponent: bell.power_exponent,
        subtract_accidentals: bell.subtract_accidentals,
    };
    let out = correct_counts(&records, &options)?;
    rep.line(
        "corrections",
        format!(
            "accidentals {}, power exponent {}",
            if bell.subtract_accidentals { "subtracted" } else { "kept" },
            bell.power_exponent
        ),
    );
    if let Some(p) = out.reference_power_mw {
        rep.line("reference_power_mw", fmt(p, 4));
    }
    if !out.warnings.is_empty() {
        rep.line("warnings", out.warnings.len());
        rep.line("first_warning", &out.warnings[0]);
    }
    Ok(out.records)
}

#[derive(Serialize)]
struct VisibilityRow {
    reference: String,
    qwp1_deg: f64,
    hwp1_deg: f64,
    pol1_deg: f64,
    visibility: f64,
    sigma: f64,
    points: usize,
    theta0_deg: f64,
}

fn visibility(ctx: &Context, counts: &Path, raw: bool) -> CliResult<String> {
    let records = io::read_counts(counts)?;
    let mut rep = Report::new("fringe visibilities");
    let bell = ctx.config.as_ref().and_then(|c| c.bell.as_ref());
    let records = corrected(bell, records, raw, &mut rep)?;
    let mut groups: Vec<(AnalyzerSetting, Vec<CountRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(s, _)| *s == r.settings[0]) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.settings[0], vec![r])),
        }
    }
    let mut rows = Vec::new();
    rep.section("reference  visibility");
    for (s, g) in &groups {
        let fit = visibility_from_records(g, 2)?;
        let name = reference_name(s);
        rep.line(name, pm(fit.visibility, fit.sigma, 4));
        rows.push(VisibilityRow {
            reference: name.to_string(),
            qwp1_deg: s.qwp_deg,
            hwp1_deg: s.hwp_deg,
            pol1_deg: s.pol_deg,
            visibility: fit.visibility,
            sigma: fit.sigma,
            points: fit.points,
            theta0_deg: fit.theta0_deg,
        });
    }
    let csv_path = ctx.out("bell_visibility.csv");
    io::write_rows(&csv_path, &rows)?;
    let report_path = ctx.out("bell_visibility_report.txt");
    io::write_text(&report_path, rep.as_str())?;
    let mut m = ctx.manifest("bell visibility");
    m.input(counts).output(&csv_path).output(&report_path);
    m.finish(&ctx.out_dir)?;
    Ok(rep.as_str().to_string())
}

#[derive(Serialize)]
struct CorrelationRow {
    a_deg: f64,
    b_deg: f64,
    e: f64,
    sigma: f64,
    total: f64,
}

fn chsh(ctx: &Context, counts: &Path, raw: bool) -> CliResult<String> {
    let records = io::read_counts(counts)?;
    let mut rep = Report::new("CHSH");
    let bell = ctx.config.as_ref().and_then(|c| c.bell.as_ref());
    let records = corrected(bell, records, raw, &mut rep)?;
    let res = chsh_from_records(&records, &ChshAngles::default())?;
    rep.section("correlations");
    for c in &res.correlations {
        rep.line(&format!("E({}, {})", c.a_deg, c.b_deg), pm(c.e, c.sigma, 5));
    }
    rep.section("result")
        .line("S", pm(res.s, res.sigma, 5))
        .line("negated_term", res.negated_term + 1)
        .line(
            "violation_sigmas",
            res.violation_sigmas.map(|v| fmt(v, 2)).unwrap_or_else(|| "n/a".into()),
        );
    let csv_path = ctx.out("bell_chsh.csv");
    io::write_rows(
        &csv_path,
        res.correlations.iter().map(|c| CorrelationRow { a_deg: c.a_deg, b_deg: c.b_deg, e: c.e, sigma: c.sigma, total: c.total }),
    )?;
    let report_path = ctx.out("bell_chsh_report.txt");
    io::write_text(&report_path, rep.as_str())?;
    let mut m = ctx.manifest("bell chsh");
    m.input(counts).output(&csv_path).output(&report_path);
    m.finish(&ctx.out_dir)?;
    Ok(rep.as_str().to_string())
}
