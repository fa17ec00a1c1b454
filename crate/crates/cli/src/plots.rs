use std::fs;
use std::path::Path;

use plotters::prelude::*;
use serde::Deserialize;
use wishent::stats::{write_rows, FitResult, SweepRow};
use wishent::theory::{theory_rows, TheoryInputs};
use wishent::Beta;

use crate::error::CliError;
use crate::output::Outputs;
use crate::run::read_sweep;

const SIZE: (u32, u32) = (900, 600);

fn plot_err(e: impl std::fmt::Display) -> CliError {
    CliError::io("rendering plot", std::io::Error::other(e.to_string()))
}

fn span(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn padded(lo: f64, hi: f64) -> std::ops::Range<f64> {
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad)..(hi + pad)
}

#[derive(Deserialize)]
struct FitEntry {
    fit: FitResult,
}

#[derive(Deserialize)]
struct LocalG {
    g_slope: f64,
}

#[derive(Deserialize)]
struct ConditionalSummary {
    #[serde(rename = "g_R1")]
    g_r1: LocalG,
    #[serde(rename = "g_R2")]
    g_r2: LocalG,
}

#[derive(Deserialize)]
struct ScalingCsvRow {
    #[serde(rename = "N")]
    n: usize,
    n_log2_n: f64,
    #[serde(rename = "R0")]
    r0: f64,
    #[serde(rename = "invS2")]
    inv_s2: f64,
}

#[derive(Deserialize)]
struct BinRow {
    center: f64,
    #[serde(rename = "R1")]
    r1: f64,
    #[serde(rename = "R2")]
    r2: f64,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::io(format!("opening {}", path.display()), e))?;
    csv::Reader::from_reader(f)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::Core(wishent::Error::from(e)))
}

/// Render every plot whose inputs exist in `dir`; theory curves are added when
/// both a sweep and a conditional study are present.
pub fn report(dir: &Path, out: &mut Outputs) -> Result<(), CliError> {
    let sweep = dir.join("sweep.csv");
    let fit = dir.join("fit.json");
    let cond_json = dir.join("conditional.json");
    let cond_csv = dir.join("conditional.csv");
    let scaling = dir.join("scaling.csv");
    if ![&sweep, &cond_csv, &scaling].iter().any(|p| p.exists()) {
        return Err(CliError::Missing(format!(
            "{} holds none of sweep.csv, conditional.csv, scaling.csv",
            dir.display()
        )));
    }
    if sweep.exists() {
        let rows = read_sweep(&sweep)?;
        if rows.is_empty() {
            return Err(CliError::Missing(format!("{} has no rows", sweep.display())));
        }
        let fits: Option<std::collections::BTreeMap<String, FitEntry>> =
            if fit.exists() { Some(read_json(&fit)?) } else { None };
        let theory = if cond_json.exists() { theory_for(&rows, &read_json(&cond_json)?)? } else { None };
        if let Some(t) = &theory {
            let mut buf = Vec::new();
            write_rows(&mut buf, t)?;
            out.write("theory.csv", &buf)?;
        }
        let svg = sweep_svg(&rows, fits.as_ref(), theory.as_deref())?;
        out.write("sweep.svg", svg.as_bytes())?;
    }
    if scaling.exists() {
        let rows: Vec<ScalingCsvRow> = read_csv(&scaling)?;
        out.write("scaling.svg", scaling_svg(&rows)?.as_bytes())?;
    }
    if cond_csv.exists() {
        let rows: Vec<BinRow> = read_csv(&cond_csv)?;
        out.write("conditional.svg", conditional_svg(&rows)?.as_bytes())?;
    }
    Ok(())
}

/// Theory inputs from the deepest sweep point and the conditional slopes.
/// Returns `None` when the slopes have the wrong signs for the growth laws.
fn theory_for(rows: &[SweepRow], cond: &ConditionalSummary) -> Result<Option<Vec<SweepRow>>, CliError> {
    let deep = &rows[rows.len() - 1];
    if !(cond.g_r1.g_slope > 0.0 && cond.g_r2.g_slope < 0.0) {
        eprintln!("report: conditional slopes have unexpected signs, theory curves skipped");
        return Ok(None);
    }
    let beta = Beta::try_from(deep.beta)?;
    let inputs = TheoryInputs::new(deep.n, 0, beta, 0.25, deep.r0, deep.inv_s2, cond.g_r1.g_slope, cond.g_r2.g_slope);
    let ys: Vec<f64> = rows.iter().map(|r| r.y).collect();
    Ok(Some(theory_rows(&inputs, &ys)?))
}

fn sweep_svg(
    rows: &[SweepRow],
    fits: Option<&std::collections::BTreeMap<String, FitEntry>>,
    theory: Option<&[SweepRow]>,
) -> Result<String, CliError> {
    let mut s = String::new();
    {
        let root = SVGBackend::with_string(&mut s, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let (y_lo, y_hi) = span(rows.iter().map(|r| r.y).filter(|&y| y > 0.0));
        let (_, r_hi) = span(rows.iter().map(|r| r.r1 + r.r1_se));
        let mut chart = ChartBuilder::on(&root)
            .caption(format!("{} N={} beta={}", rows[0].protocol, rows[0].n, rows[0].beta), ("sans-serif", 22))
            .margin(15)
            .x_label_area_size(45)
            .y_label_area_size(60)
            .build_cartesian_2d((y_lo * 0.8..y_hi * 1.25).log_scale(), 0.0..(r_hi * 1.1).max(1e-3))
            .map_err(plot_err)?;
        chart.configure_mesh().x_desc("Y").y_desc("entropy (bits)").draw().map_err(plot_err)?;
        for (name, color, pick) in [
            ("R1", BLUE, (|r: &SweepRow| (r.r1, r.r1_se)) as fn(&SweepRow) -> (f64, f64)),
            ("R2", RED, |r: &SweepRow| (r.r2, r.r2_se)),
        ] {
            chart
                .draw_series(rows.iter().map(|r| {
                    let (v, e) = pick(r);
                    ErrorBar::new_vertical(r.y, v - e, v, v + e, color.filled(), 6)
                }))
                .map_err(plot_err)?;
            chart
                .draw_series(rows.iter().map(|r| Circle::new((r.y, pick(r).0), 3, color.filled())))
                .map_err(plot_err)?
                .label(format!("<{name}>"))
                .legend(move |(x, y)| Circle::new((x, y), 3, color.filled()));
            if let Some(f) = fits.and_then(|m| m.get(name)) {
                let k = 200;
                let pts: Vec<(f64, f64)> = (0..=k)
                    .map(|i| y_lo * (y_hi / y_lo).powf(i as f64 / k as f64))
                    .map(|y| (y, f.fit.eval(y)))
                    .filter(|p| p.1.is_finite())
                    .collect();
                chart
                    .draw_series(LineSeries::new(pts, color.stroke_width(2)))
                    .map_err(plot_err)?
                    .label(format!("{name} fit"))
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
            }
            if let Some(t) = theory {
                let pts: Vec<(f64, f64)> = t.iter().map(|r| (r.y, pick(r).0)).filter(|p| p.1.is_finite()).collect();
                chart
                    .draw_series(LineSeries::new(pts, color.mix(0.5).stroke_width(1)))
                    .map_err(plot_err)?
                    .label(format!("{name} theory"))
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.mix(0.5)));
            }
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .position(SeriesLabelPosition::UpperLeft)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(s)
}

fn scaling_svg(rows: &[ScalingCsvRow]) -> Result<String, CliError> {
    let mut s = String::new();
    {
        let root = SVGBackend::with_string(&mut s, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let (x_lo, x_hi) = span(rows.iter().map(|r| r.n_log2_n));
        let (_, v_hi) = span(rows.iter().flat_map(|r| [r.r0, r.inv_s2]));
        let mut chart = ChartBuilder::on(&root)
            .caption("deep-Y scaling", ("sans-serif", 22))
            .margin(15)
            .x_label_area_size(45)
            .y_label_area_size(60)
            .build_cartesian_2d(padded(x_lo, x_hi), 0.0..v_hi * 1.1)
            .map_err(plot_err)?;
        chart.configure_mesh().x_desc("N log2 N").draw().map_err(plot_err)?;
        for (name, color, pick) in [
            ("<R0>", BLUE, (|r: &ScalingCsvRow| r.r0) as fn(&ScalingCsvRow) -> f64),
            ("<1/S2>", RED, |r: &ScalingCsvRow| r.inv_s2),
        ] {
            chart
                .draw_series(LineSeries::new(rows.iter().map(|r| (r.n_log2_n, pick(r))), color.stroke_width(1)))
                .map_err(plot_err)?;
            chart
                .draw_series(rows.iter().map(|r| Circle::new((r.n_log2_n, pick(r)), 4, color.filled())))
                .map_err(plot_err)?
                .label(name)
                .legend(move |(x, y)| Circle::new((x, y), 4, color.filled()));
        }
        for r in rows {
            chart
                .draw_series(std::iter::once(Text::new(format!("N={}", r.n), (r.n_log2_n, r.r0), ("sans-serif", 12))))
                .map_err(plot_err)?;
        }
        chart.configure_series_labels().border_style(BLACK).background_style(WHITE.mix(0.8)).draw().map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(s)
}

fn conditional_svg(rows: &[BinRow]) -> Result<String, CliError> {
    let mut s = String::new();
    {
        let root = SVGBackend::with_string(&mut s, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let panels = root.split_evenly((1, 2));
        let (x_lo, x_hi) = span(rows.iter().map(|r| r.center));
        for (area, (name, color, pick)) in panels.iter().zip([
            ("<R1|S1>", BLUE, (|r: &BinRow| r.r1) as fn(&BinRow) -> f64),
            ("<R2|S1>", RED, |r: &BinRow| r.r2),
        ]) {
            let (v_lo, v_hi) = span(rows.iter().map(pick));
            let mut chart = ChartBuilder::on(area)
                .caption(name, ("sans-serif", 20))
                .margin(12)
                .x_label_area_size(40)
                .y_label_area_size(60)
                .build_cartesian_2d(padded(x_lo, x_hi), padded(v_lo, v_hi))
                .map_err(plot_err)?;
            chart.configure_mesh().x_desc("S1").draw().map_err(plot_err)?;
            chart
                .draw_series(rows.iter().map(|r| Circle::new((r.center, pick(r)), 3, color.filled())))
                .map_err(plot_err)?;
        }
        root.present().map_err(plot_err)?;
    }
    Ok(s)
}
