use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use wishent::complexity::complexity_of;
use wishent::dynamics::{
    direct_ensemble, dyson_ensemble, langevin_ensemble, Checkpoint, PathSpec, DEFAULT_V2,
};
use wishent::ensembles::{build_profile, sample_c, ProfileConfig};
use wishent::measures::{MeasureSet, BITS, R0_FLOOR};
use wishent::rng::{self, domain};
use wishent::schmidt::{self, Spectrum};
use wishent::stats::{
    conditional_by_trace, fit_growth_data, grid_for_ys, n_log2_n, read_rows, sample_point, scaling_report,
    trace_centered_gamma, y_supremum, ScalingMeasure, SweepConfig, SweepPoint, SweepRow,
};
use wishent::{Beta, YRoute};

use crate::args::{Command, ConditionalArgs, DynamicsArgs, Ensemble, FitArgs, SampleArgs, ScalingArgs, SweepArgs};
use crate::error::CliError;
use crate::output::Outputs;
use crate::plots;

pub const SWEEP_Y_FRACS: (f64, f64) = (1e-3, 0.95);

fn beta_of(b: u8) -> Result<Beta, CliError> {
    Beta::try_from(b).map_err(|_| CliError::Config(format!("key `beta`: must be 1 or 2, got {b}")))
}

fn check_gamma(g: f64) -> Result<(), CliError> {
    if g.is_finite() && g > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("key `gamma`: must be positive, got {g}")))
    }
}

fn check_ensemble(e: &Ensemble, min_samples: usize) -> Result<Beta, CliError> {
    if e.n == 0 {
        return Err(CliError::Config("key `N`: must be positive".into()));
    }
    if e.samples < min_samples {
        return Err(CliError::Config(format!("key `samples`: need at least {min_samples}, got {}", e.samples)));
    }
    beta_of(e.beta)
}

fn json_bytes<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| CliError::Config(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(wishent::Error::from)?;
    }
    w.into_inner().map_err(|e| CliError::io("buffering CSV", e.into_error()))
}

/// Execute `cmd`, writing into `out`. The caller discards `out` on error.
pub fn execute(cmd: &Command, out: &mut Outputs) -> Result<(), CliError> {
    match cmd {
        Command::Sample(a) => sample(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Dyson(a) => dynamics(a, true, out),
        Command::Langevin(a) => dynamics(a, false, out),
        Command::Conditional(a) => conditional(a, out),
        Command::Fit(a) => fit(a, out),
        Command::Scaling(a) => scaling(a, out),
        Command::Report(a) => {
            let dir = a.dir.clone().unwrap_or_else(|| out.dir().to_path_buf());
            plots::report(&dir, out)
        }
    }
}

#[derive(Serialize)]
struct MeasureRow {
    sample: u64,
    #[serde(rename = "R1")]
    r1: f64,
    #[serde(rename = "R2")]
    r2: f64,
    #[serde(rename = "R3")]
    r3: f64,
    #[serde(rename = "Rinf")]
    r_inf: f64,
    #[serde(rename = "R0")]
    r0: f64,
    #[serde(rename = "R0_floored")]
    r0_floored: bool,
    #[serde(rename = "S2")]
    s2: f64,
    #[serde(rename = "S3")]
    s3: f64,
}

fn sample(a: &SampleArgs, out: &mut Outputs) -> Result<(), CliError> {
    let e = &a.ensemble;
    let beta = check_ensemble(e, 1)?;
    check_gamma(a.gamma)?;
    let cfg = ProfileConfig { protocol: a.protocol, mu: a.mu, a: a.a, b: a.b, n: e.n, nu0: e.nu0, beta, gamma: a.gamma, seed: e.seed };
    let protocol = cfg.protocol()?;
    let profile = build_profile(protocol, e.n, e.nu0, beta)?;
    let y = complexity_of(protocol, e.n, e.nu0, beta, a.gamma, YRoute::Closed)?;
    let spectra = (0..e.samples as u64)
        .into_par_iter()
        .map(|i| {
            let c = sample_c(&profile, &mut rng::stream(e.seed, domain::SAMPLE, i));
            schmidt::schmidt_spectrum(&c).map_err(|err| err.with_sample(i))
        })
        .collect::<Result<Vec<Spectrum>, _>>()?;
    let mut buf = Vec::new();
    schmidt::write_spectra_csv(&mut buf, spectra.iter().enumerate().map(|(i, s)| (i as u64, s)))?;
    let ms: Vec<MeasureSet> = spectra.iter().map(MeasureSet::bits).collect();
    let rows: Vec<MeasureRow> = ms
        .iter()
        .enumerate()
        .map(|(i, m)| MeasureRow {
            sample: i as u64,
            r1: m.r1,
            r2: m.r2(),
            r3: m.renyi(3.0).unwrap_or(f64::NAN),
            r_inf: m.r_inf,
            r0: m.r0,
            r0_floored: m.r0_floored,
            s2: m.s2(),
            s3: m.s3(),
        })
        .collect();
    let point = SweepPoint::from_measures(protocol, y.y, &ms);
    let summary = json!({
        "profile": cfg,
        "Y": y.y,
        "M": y.m_count,
        "n": e.samples,
        "R1": point.r1,
        "R2": point.r2,
        "Rinf": point.r_inf,
        "order_violations": point.order_violations,
    });
    out.write("spectra.csv", &buf)?;
    out.write("measures.csv", &csv_bytes(&rows)?)?;
    out.write("sample.json", &json_bytes(&summary)?)?;
    Ok(())
}

fn geomspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![hi];
    }
    (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
}

fn sweep(a: &SweepArgs, out: &mut Outputs) -> Result<(), CliError> {
    let e = &a.ensemble;
    let beta = check_ensemble(e, 2)?;
    check_gamma(a.gamma)?;
    let grid = if a.grid.is_empty() {
        if a.y_points == 0 {
            return Err(CliError::Config("key `y_points`: must be positive".into()));
        }
        let sup = y_supremum(a.protocol, e.n, e.nu0, beta, a.gamma)?;
        let ys: Vec<f64> = geomspace(SWEEP_Y_FRACS.0, SWEEP_Y_FRACS.1, a.y_points).iter().map(|f| f * sup).collect();
        grid_for_ys(a.protocol, &ys, e.n, e.nu0, beta, a.gamma)?
    } else {
        let g: Vec<_> = a.grid.iter().map(|&p| a.protocol.with_param(p)).collect();
        for p in &g {
            p.validate().map_err(|err| CliError::Config(format!("key `grid`: {err}")))?;
        }
        g
    };
    let cfg = SweepConfig {
        grid,
        n: e.n,
        nu0: e.nu0,
        beta,
        gamma: a.gamma,
        n_samples: e.samples,
        seed: e.seed,
        base: BITS,
        r0_floor: R0_FLOOR,
        y_route: a.y_from,
    };
    let curve = wishent::stats::sweep(&cfg)?;
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    out.write("sweep.csv", &buf)?;
    Ok(())
}

#[derive(Serialize)]
struct CheckpointRow {
    #[serde(rename = "Y")]
    y: f64,
    paths: usize,
    #[serde(rename = "S2")]
    s2: f64,
    #[serde(rename = "S2_se")]
    s2_se: f64,
    #[serde(rename = "S3")]
    s3: f64,
    #[serde(rename = "S3_se")]
    s3_se: f64,
    #[serde(rename = "R2")]
    r2: f64,
    #[serde(rename = "R2_se")]
    r2_se: f64,
}

fn checkpoint_rows(cs: &[Checkpoint]) -> Vec<CheckpointRow> {
    cs.iter()
        .map(|c| CheckpointRow {
            y: c.y,
            paths: c.paths,
            s2: c.s2.mean,
            s2_se: c.s2.se,
            s3: c.s3.mean,
            s3_se: c.s3.se,
            r2: c.r2.mean,
            r2_se: c.r2.se,
        })
        .collect()
}

fn dynamics(a: &DynamicsArgs, dyson: bool, out: &mut Outputs) -> Result<(), CliError> {
    let e = &a.ensemble;
    let beta = check_ensemble(e, 2)?;
    check_gamma(a.gamma)?;
    let spec = PathSpec {
        n: e.n,
        nu0: e.nu0,
        beta,
        gamma: a.gamma,
        v2: DEFAULT_V2,
        checkpoints: a.checkpoints.clone(),
        paths: e.samples,
        seed: e.seed,
    };
    if dyson {
        if let Some(h) = a.step {
            if !(h.is_finite() && h > 0.0) {
                return Err(CliError::Config(format!("key `step`: must be positive, got {h}")));
            }
        }
        let run = dyson_ensemble(&spec, a.y_start, a.step)?;
        out.write("dyson.csv", &csv_bytes(&checkpoint_rows(&run.checkpoints))?)?;
        out.write("dyson.json", &json_bytes(&json!({ "failed_paths": run.failed, "rejections": run.rejections }))?)?;
    } else {
        let cs = langevin_ensemble(&spec)?;
        let direct = direct_ensemble(&spec)?;
        out.write("langevin.csv", &csv_bytes(&checkpoint_rows(&cs))?)?;
        out.write("direct.csv", &csv_bytes(&checkpoint_rows(&direct))?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BinRow {
    lo: f64,
    hi: f64,
    center: f64,
    width: f64,
    count: usize,
    #[serde(rename = "R1")]
    r1: f64,
    #[serde(rename = "R1_se")]
    r1_se: f64,
    #[serde(rename = "R2")]
    r2: f64,
    #[serde(rename = "R2_se")]
    r2_se: f64,
    density: f64,
    g_r1: f64,
    g_r2: f64,
    g0: f64,
}

fn conditional(a: &ConditionalArgs, out: &mut Outputs) -> Result<(), CliError> {
    let e = &a.ensemble;
    let beta = check_ensemble(e, 10_000)?;
    let gamma = if a.gamma.eq_ignore_ascii_case("auto") {
        trace_centered_gamma(e.n, e.nu0, beta)
    } else {
        let g: f64 = a.gamma.parse().map_err(|_| CliError::Config(format!("key `gamma`: expected a number or `auto`, got {:?}", a.gamma)))?;
        check_gamma(g)?;
        g
    };
    let c = conditional_by_trace(e.n, e.nu0, beta, gamma, e.samples, a.bins, e.seed, BITS)?;
    let rows: Vec<BinRow> = c
        .bins
        .iter()
        .enumerate()
        .map(|(i, b)| BinRow {
            lo: b.lo,
            hi: b.hi,
            center: b.center,
            width: b.width,
            count: b.count,
            r1: b.r1.mean,
            r1_se: b.r1.se,
            r2: b.r2.mean,
            r2_se: b.r2.se,
            density: b.density,
            g_r1: c.g_r1[i],
            g_r2: c.g_r2[i],
            g0: c.g0[i],
        })
        .collect();
    let summary = json!({
        "N": e.n,
        "nu0": e.nu0,
        "beta": e.beta,
        "gamma": gamma,
        "n": c.n_samples,
        "s1_mean": c.s1_mean,
        "slope_R1": c.slope_r1,
        "slope_R2": c.slope_r2,
        "g_R1": c.local_r1,
        "g_R2": c.local_r2,
        "g0": c.local_g0,
    });
    out.write("conditional.csv", &csv_bytes(&rows)?)?;
    out.write("conditional.json", &json_bytes(&summary)?)?;
    Ok(())
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::io(format!("opening {}", path.display()), e))?;
    let rows = read_rows(f)?;
    Ok(rows.into_iter().filter(|r| r.protocol != "theory").collect())
}

fn fit(a: &FitArgs, out: &mut Outputs) -> Result<(), CliError> {
    let which: Vec<&str> = match a.measure.to_ascii_uppercase().as_str() {
        "R1" => vec!["R1"],
        "R2" => vec!["R2"],
        "BOTH" => vec!["R1", "R2"],
        other => return Err(CliError::Config(format!("key `measure`: expected R1, R2 or both, got {other:?}"))),
    };
    let rows = read_sweep(&a.input)?;
    let y: Vec<f64> = rows.iter().map(|r| r.y).collect();
    let mut fits = BTreeMap::new();
    for m in which {
        let (r, se): (Vec<f64>, Vec<f64>) =
            rows.iter().map(|row| if m == "R1" { (row.r1, row.r1_se) } else { (row.r2, row.r2_se) }).unzip();
        let f = fit_growth_data(&y, &r, &se)?;
        let coverage = f.coverage(&y, &r, &se, 2.0);
        fits.insert(m, json!({ "fit": f, "coverage_2se": coverage }));
    }
    out.write("fit.json", &json_bytes(&fits)?)?;
    Ok(())
}

#[derive(Serialize)]
struct ScalingCsvRow {
    #[serde(rename = "N")]
    n: usize,
    n_log2_n: f64,
    #[serde(rename = "R0")]
    r0: f64,
    #[serde(rename = "R0_se")]
    r0_se: f64,
    #[serde(rename = "invS2")]
    inv_s2: f64,
    #[serde(rename = "invS2_se")]
    inv_s2_se: f64,
    n_floored: usize,
}

fn scaling(a: &ScalingArgs, out: &mut Outputs) -> Result<(), CliError> {
    let beta = beta_of(a.beta)?;
    if a.samples < 2 {
        return Err(CliError::Config(format!("key `samples`: need at least 2, got {}", a.samples)));
    }
    let point = a.protocol.with_param(a.param);
    point.validate().map_err(|e| CliError::Config(format!("key `param`: {e}")))?;
    let mut rows = Vec::new();
    let mut r0 = Vec::new();
    let mut inv = Vec::new();
    for &n in &a.ns {
        let ms = sample_point(point, n, a.nu0, beta, a.samples, a.seed, BITS, R0_FLOOR)?;
        let p = SweepPoint::from_measures(point, f64::NAN, &ms);
        rows.push(ScalingCsvRow {
            n,
            n_log2_n: n_log2_n(n),
            r0: p.r0.mean,
            r0_se: p.r0.se,
            inv_s2: p.inv_s2.mean,
            inv_s2_se: p.inv_s2.se,
            n_floored: p.n_floored,
        });
        r0.push((n, p.r0));
        inv.push((n, p.inv_s2));
    }
    let reports = json!({
        "R0": scaling_report(ScalingMeasure::R0, &r0)?,
        "invS2": scaling_report(ScalingMeasure::InvS2, &inv)?,
    });
    out.write("scaling.csv", &csv_bytes(&rows)?)?;
    out.write("scaling.json", &json_bytes(&reports)?)?;
    Ok(())
}
