//! Model presets and potential sources.

use crate::config::{parse_num, RunConfig};
use std::path::Path;
use std::sync::Arc;
use swm_core::models::{BesselModel, LimitCircleSystem, SolitonModel};
use swm_core::schrodinger::{Potential, Tail};
use swm_core::spectral::MFn;
use swm_core::weyl::{singular_m, SolutionSystem};
use swm_core::{Complex64, Error, Result};

pub const TOL: f64 = 1e-10;

pub struct Model {
    pub label: String,
    pub pot: Potential,
    pub sys: SolutionSystem,
    pub c: f64,
    /// Closed-form Weyl function, when the preset has one.
    pub closed: Option<Arc<MFn>>,
    pub bessel: Option<BesselModel>,
}

impl Model {
    /// `M` through the solution system and the Weyl solution at infinity.
    pub fn numeric_m(&self) -> Arc<MFn> {
        let (sys, pot, c) = (self.sys.clone(), self.pot.clone(), self.c);
        Arc::new(move |z| singular_m(&sys, &pot, c, z, TOL))
    }

    /// `route` is `closed`, `numeric` or `auto` (closed when available).
    pub fn m_route(&self, route: &str) -> Result<Arc<MFn>> {
        match (route, &self.closed) {
            ("closed" | "auto", Some(m)) => Ok(m.clone()),
            ("closed", None) => Err(Error::Invalid(format!("model '{}' has no closed form", self.label))),
            ("numeric" | "auto", _) => Ok(self.numeric_m()),
            _ => Err(Error::Invalid(format!("route must be closed, numeric or auto, got '{route}'"))),
        }
    }
}

fn params(spec: &str) -> Result<Vec<(String, f64)>> {
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    spec.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("model parameter '{kv}' must be name=value")))?;
            Ok((k.trim().to_string(), parse_num(v)?))
        })
        .collect()
}

fn param(ps: &[(String, f64)], name: &str, default: Option<f64>) -> Result<f64> {
    ps.iter()
        .find(|p| p.0 == name)
        .map(|p| p.1)
        .or(default)
        .ok_or_else(|| Error::Parse(format!("model parameter '{name}' is required")))
}

fn check_names(ps: &[(String, f64)], names: &[&str]) -> Result<()> {
    match ps.iter().find(|p| !names.contains(&p.0.as_str())) {
        Some(p) => Err(Error::Parse(format!("unknown model parameter '{}'", p.0))),
        None => Ok(()),
    }
}

/// Resolves `bessel:l=`, `bessel+coulomb:l=,q1=`, `soliton:A=,v1=`,
/// `limitcircle:l=`, `expr:<q(x)>` or `csv:<path>`; the last two read the
/// strength from `l` and the interval from `a`, `b` in `cfg`.
pub fn resolve(spec: &str, c: f64, cfg: &RunConfig) -> Result<Model> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let numeric = |label: String, pot: Potential| Model {
        label,
        sys: SolutionSystem::numeric(&pot, c, TOL),
        pot,
        c,
        closed: None,
        bessel: None,
    };
    match kind {
        "bessel" => {
            let ps = params(rest)?;
            check_names(&ps, &["l"])?;
            let b = BesselModel::new(param(&ps, "l", None)?)?;
            Ok(Model {
                label: spec.into(),
                pot: b.potential()?,
                sys: SolutionSystem::bessel(b),
                c,
                closed: Some(Arc::new(move |z: Complex64| Ok(b.m(z)))),
                bessel: Some(b),
            })
        }
        "bessel+coulomb" => {
            let ps = params(rest)?;
            check_names(&ps, &["l", "q1"])?;
            let pot = Potential::coulomb(param(&ps, "l", None)?, param(&ps, "q1", Some(1.0))?)?;
            Ok(numeric(spec.into(), pot))
        }
        "soliton" => {
            let ps = params(rest)?;
            check_names(&ps, &["A", "v1"])?;
            let s = SolitonModel::real(param(&ps, "A", Some(1.0))?, param(&ps, "v1", Some(0.0))?)?;
            let s2 = s.clone();
            Ok(Model {
                label: spec.into(),
                pot: s.potential()?,
                sys: s.system(),
                c,
                closed: Some(Arc::new(move |z| s2.m(z))),
                bessel: None,
            })
        }
        "limitcircle" => {
            let ps = params(rest)?;
            check_names(&ps, &["l"])?;
            let pot = Potential::bessel(param(&ps, "l", None)?)?;
            let lc = LimitCircleSystem::new(&pot, 0.0, c)?;
            Ok(Model {
                label: spec.into(),
                sys: lc.system(),
                pot,
                c,
                closed: None,
                bessel: None,
            })
        }
        "expr" | "csv" => {
            let l = cfg.get("l").map(parse_num).transpose()?;
            let pot = if kind == "expr" {
                let a = cfg.num_or("a", 0.0)?;
                let b = cfg.num_or("b", f64::INFINITY)?;
                let tail = if b.is_finite() { Tail::Regular } else { Tail::LimitPointDecaying };
                Potential::from_expr(rest, a, b, l, tail)?
            } else {
                Potential::from_csv(Path::new(rest), l)?
            };
            Ok(numeric(spec.into(), pot))
        }
        _ => Err(Error::Parse(format!(
            "unknown model '{kind}' (bessel, bessel+coulomb, soliton, limitcircle, expr, csv)"
        ))),
    }
}
