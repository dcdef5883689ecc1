//! Subcommand bodies. Each returns the process exit status on success.

use crate::config::{parse_list, parse_pair, parse_zgrid, RunConfig};
use crate::model::{resolve, Model};
use serde::Serialize;
use std::path::{Path, PathBuf};
use swm_core::bm::{self, BMReport, DEFAULT_DEGREE, DEFAULT_RAYS};
use swm_core::eigen::{dirichlet_eigs, neumann_eigs};
use swm_core::golden;
use swm_core::io;
use swm_core::nevanlinna::{herglotzify, nevanlinna_report, NevanlinnaReport};
use swm_core::spectral::{
    oscillation_period, parseval_norm, round_trip, stieltjes_invert, stieltjes_invert_on, transform_forward,
    ParsevalReport, RoundTripReport, SpectralMeasure, TestFunction, DEFAULT_EPS,
};
use swm_core::weyl::{m_trace, SolutionSystem, MTrace};
use swm_core::{Complex64, Error, Result};

pub const MFUN_KEYS: &[&str] = &["model", "c", "zgrid", "tol", "gauge", "window", "npoints", "route", "out", "l", "a", "b"];
pub const EIG_KEYS: &[&str] = &["model", "c", "count", "out", "l", "a", "b"];
pub const MEASURE_KEYS: &[&str] = &["model", "c", "window", "npoints", "eps", "route", "out", "atoms_out", "l", "a", "b"];
pub const TRANSFORM_KEYS: &[&str] = &["model", "c", "f", "wmax", "dw", "xrange", "eps", "roundtrip", "route", "out", "l", "a", "b"];
pub const NEVANLINNA_KEYS: &[&str] = &["model", "c", "window", "npoints", "route", "seed", "out", "l", "a", "b"];
pub const BM_KEYS: &[&str] = &["pot0", "pot1", "c", "eps", "rays", "degree", "examples", "out", "l", "a", "b"];
pub const GOLDEN_KEYS: &[&str] = &["only", "out"];

fn model(cfg: &RunConfig) -> Result<Model> {
    let c = cfg.positive_or("c", 1.0)?;
    resolve(cfg.require("model")?, c, cfg)
}

fn out_path(cfg: &RunConfig, default: &str) -> PathBuf {
    PathBuf::from(cfg.str_or("out", default))
}

fn write(path: &Path, text: &str) -> Result<()> {
    io::write_atomic(path, text.as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn mfun(cfg: &RunConfig) -> Result<i32> {
    let m = model(cfg)?;
    let zs = parse_zgrid(cfg.require("zgrid")?)?;
    let tol = cfg.positive_or("tol", 1e-10)?;
    let trace = match cfg.str_or("gauge", "none") {
        "none" => m_trace(&m.sys, &m.pot, m.c, &zs, tol)?,
        "g=lambda" => {
            let samples: Result<Vec<(Complex64, Complex64)>> = if let Some(b) = m.bessel {
                zs.iter().map(|&z| Ok((z, b.herglotz_m(z)?))).collect()
            } else {
                let mf = m.m_route(cfg.str_or("route", "auto"))?;
                let window = parse_pair(cfg.str_or("window", "-5,60"))?;
                let meas = stieltjes_invert(mf.as_ref(), window, cfg.count_or("npoints", 1301)?, &DEFAULT_EPS)?;
                let h = herglotzify(&meas, Some(mf))?;
                zs.iter().map(|&z| Ok((z, h.mtilde(z)?))).collect()
            };
            MTrace {
                samples: samples?,
                convention: "Herglotz rescaling with g(z) = z/2".into(),
            }
        }
        other => return Err(Error::Invalid(format!("gauge must be 'none' or 'g=lambda', got '{other}'"))),
    };
    write(&out_path(cfg, "mfun.csv"), &io::mtrace_csv(&trace))?;
    Ok(0)
}

pub fn eig(cfg: &RunConfig) -> Result<i32> {
    let m = model(cfg)?;
    let count = cfg.count_or("count", 10)?;
    if count == 0 {
        return Err(Error::Invalid("count must be positive".into()));
    }
    let mu = dirichlet_eigs(&m.pot, m.c, count)?;
    let nu = neumann_eigs(&m.pot, m.c, count)?;
    write(&out_path(cfg, "eig.csv"), &io::eigen_csv(&mu.zeros, &nu.zeros))?;
    Ok(0)
}

fn schedule(cfg: &RunConfig) -> Result<Vec<f64>> {
    cfg.list_or("eps", &DEFAULT_EPS)
}

pub fn measure(cfg: &RunConfig) -> Result<i32> {
    let m = model(cfg)?;
    let mf = m.m_route(cfg.str_or("route", "auto"))?;
    let window = parse_pair(cfg.str_or("window", "0,50"))?;
    let meas = stieltjes_invert(mf.as_ref(), window, cfg.count_or("npoints", 201)?, &schedule(cfg)?)?;
    let out = out_path(cfg, "measure.csv");
    let atoms = cfg
        .get("atoms_out")
        .map(PathBuf::from)
        .unwrap_or_else(|| out.with_extension("atoms.json"));
    write(&out, &io::measure_csv(&meas))?;
    write(&atoms, &io::measure_atoms_json(&meas)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct TransformReport {
    model: String,
    f: String,
    norm_squared: f64,
    parseval: ParsevalReport,
    parseval_error: f64,
    round_trip: Option<RoundTripReport>,
}

fn test_function(spec: &str) -> Result<TestFunction> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("test function '{spec}' needs a kind prefix")))?;
    match kind {
        "indicator" => {
            let (lo, hi) = parse_pair(rest)?;
            TestFunction::indicator(lo, hi)
        }
        "csv" => {
            let mut rdr = csv::Reader::from_path(rest).map_err(|e| Error::Parse(e.to_string()))?;
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
                let v = parse_list(&rec.iter().collect::<Vec<_>>().join(","))?;
                if v.len() != 2 {
                    return Err(Error::Parse("test function table needs two columns x,f".into()));
                }
                xs.push(v[0]);
                ys.push(v[1]);
            }
            TestFunction::from_samples(xs, ys)
        }
        _ => Err(Error::Parse(format!("unknown test function kind '{kind}' (indicator, csv)"))),
    }
}

pub fn transform(cfg: &RunConfig) -> Result<i32> {
    let c = cfg.positive_or("c", 1.0)?;
    let m = resolve(cfg.str_or("model", "bessel:l=0"), c, cfg)?;
    let mf = m.m_route(cfg.str_or("route", "auto"))?;
    let fspec = cfg.str_or("f", "indicator:0,1");
    let f = test_function(fspec)?;
    let wmax = cfg.positive_or("wmax", 100.0)?;
    let dw = cfg.positive_or("dw", 0.05)?;
    let n = (wmax / dw).round() as usize;
    if n < 8 {
        return Err(Error::Invalid("wmax/dw must be at least 8".into()));
    }
    let grid: Vec<f64> = (1..=n).map(|i| (i as f64 * dw).powi(2)).collect();
    let meas = stieltjes_invert_on(mf.as_ref(), grid, &schedule(cfg)?)?;
    let h = transform_forward(&m.sys, &f, &meas)?;
    let p = parseval_norm(&meas, &h, Some(oscillation_period(&f, m.pot.a)))?;
    let (xs, ws) = f.nodes(8.0);
    let norm_squared: f64 = xs.iter().zip(&ws).map(|(x, w)| w * f.eval(*x).powi(2)).sum();
    let rt = match cfg.str_or("roundtrip", "true") {
        "true" => {
            let xr = match cfg.get("xrange") {
                Some(s) => parse_pair(s)?,
                None => (m.pot.a, 2.0 * f.support.1 - m.pot.a),
            };
            Some(round_trip(&m.sys, &meas, &f, &h, xr)?)
        }
        "false" => None,
        other => return Err(Error::Invalid(format!("roundtrip must be true or false, got '{other}'"))),
    };
    let report = TransformReport {
        model: m.label.clone(),
        f: fspec.into(),
        norm_squared,
        parseval_error: (p.total - norm_squared).abs(),
        parseval: p,
        round_trip: rt,
    };
    write(&out_path(cfg, "transform.json"), &io::to_json(&report)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct NevanlinnaOutput {
    model: String,
    seed: u64,
    window: (f64, f64),
    #[serde(flatten)]
    report: NevanlinnaReport,
}

pub fn nevanlinna(cfg: &RunConfig) -> Result<i32> {
    let m = model(cfg)?;
    let mf = m.m_route(cfg.str_or("route", "auto"))?;
    let window = parse_pair(cfg.str_or("window", "0,1e4"))?;
    let n = cfg.count_or("npoints", 400)?;
    if n < 16 {
        return Err(Error::Invalid("npoints must be at least 16".into()));
    }
    let grid: Vec<f64> = (0..n)
        .map(|i| window.0 + (window.1 - window.0) * (i as f64 / (n - 1) as f64).powi(2))
        .collect();
    let meas: SpectralMeasure = stieltjes_invert_on(mf.as_ref(), grid, &DEFAULT_EPS)?;
    let seed = cfg.count_or("seed", 0)? as u64;
    let report = nevanlinna_report(mf.as_ref(), &meas, seed)?;
    let out = NevanlinnaOutput {
        model: m.label,
        seed,
        window,
        report,
    };
    write(&out_path(cfg, "nevanlinna.json"), &io::to_json(&out)?)?;
    Ok(0)
}

pub fn bm(cfg: &RunConfig) -> Result<i32> {
    let eps = cfg.positive_or("eps", 0.1)?;
    let rays = cfg.list_or("rays", &DEFAULT_RAYS)?;
    let out = out_path(cfg, "bm.json");
    if cfg.str_or("examples", "false") == "true" {
        let ex = bm::run_examples(&rays, eps)?;
        write(&out, &io::to_json(&ex)?)?;
        return Ok(0);
    }
    let c = cfg.positive_or("c", 0.5)?;
    let degree = cfg.count_or("degree", DEFAULT_DEGREE)?;
    let p0 = resolve(cfg.require("pot0")?, c, cfg)?.pot;
    let p1 = resolve(cfg.require("pot1")?, c, cfg)?.pot;
    let s0 = SolutionSystem::numeric(&p0, c, 1e-11);
    let s1 = SolutionSystem::numeric(&p1, c, 1e-11);
    let report: BMReport = bm::compare(&p0, &p1, &s0, &s1, c, eps, &rays, degree)?;
    write(&out, &io::to_json(&report)?)?;
    Ok(0)
}

pub fn golden(cfg: &RunConfig) -> Result<i32> {
    let ids: Vec<usize> = match cfg.get("only") {
        None => (1..=golden::NAMES.len()).collect(),
        Some(s) => parse_list(s)?
            .into_iter()
            .map(|v| {
                if v.fract() == 0.0 && v >= 1.0 && v <= golden::NAMES.len() as f64 {
                    Ok(v as usize)
                } else {
                    Err(Error::Invalid(format!("no criterion {v}")))
                }
            })
            .collect::<Result<_>>()?,
    };
    let rows: Vec<golden::CriterionResult> = ids
        .iter()
        .map(|&id| {
            let r = golden::run(id).unwrap_or_else(|e| golden::CriterionResult {
                id,
                name: golden::NAMES[id - 1].to_string(),
                passed: false,
                measured: f64::NAN,
                tolerance: f64::NAN,
                detail: format!("error: {e}"),
                seconds: 0.0,
            });
            println!("{}", golden::format_row(&r));
            r
        })
        .collect();
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", rows.len() - failed);
    if let Some(p) = cfg.get("out") {
        write(Path::new(p), &io::to_json(&rows)?)?;
    }
    Ok(if failed == 0 { 0 } else { 1 })
}

