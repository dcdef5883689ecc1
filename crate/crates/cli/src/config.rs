//! Flat `key = value` run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use swm_core::schrodinger::expr::Expr;
use swm_core::{Complex64, Error, Result};

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim(), allowed)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text, allowed)
    }

    pub fn set(&mut self, key: &str, value: &str, allowed: &[&str]) -> Result<()> {
        if !allowed.contains(&key) {
            return Err(Error::Invalid(format!("unknown key '{key}' (allowed: {})", allowed.join(", "))));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Invalid(format!("missing required key '{key}'")))
    }

    pub fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |v| parse_num(v).map_err(|e| keyed(key, e)))
    }

    pub fn positive_or(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.num_or(key, default)?;
        if !(v > 0.0) {
            return Err(Error::Invalid(format!("'{key}' must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn count_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("'{key}' must be a nonnegative integer, got '{v}'"))),
        }
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(v).map_err(|e| keyed(key, e)),
        }
    }
}

fn keyed(key: &str, e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{key}: {m}")),
        other => other,
    }
}

/// A real number, allowing `pi` arithmetic such as `2*pi/3`.
pub fn parse_num(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let e = Expr::parse(s).map_err(|_| Error::Parse(format!("not a number: '{s}'")))?;
    let (v0, v1) = (e.eval(0.5), e.eval(2.0));
    if v0 != v1 || !v0.is_finite() {
        return Err(Error::Parse(format!("not a constant: '{s}'")));
    }
    Ok(v0)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v: Result<Vec<f64>> = s.split(',').map(parse_num).collect();
    let v = v?;
    if v.is_empty() {
        return Err(Error::Parse("empty list".into()));
    }
    Ok(v)
}

pub fn parse_pair(s: &str) -> Result<(f64, f64)> {
    match parse_list(s)?.as_slice() {
        &[a, b] if a < b => Ok((a, b)),
        _ => Err(Error::Parse(format!("expected 'lo,hi' with lo < hi, got '{s}'"))),
    }
}

/// Complex grids:
/// `ray:angle,r0,r1,n` (log-spaced radii), `line:re0,im0,re1,im1,n`,
/// `rect:re0,re1,nre,im0,im1,nim`, `list:re,im;re,im;...`.
pub fn parse_zgrid(s: &str) -> Result<Vec<Complex64>> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("z-grid '{s}' needs a kind prefix")))?;
    let count = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Parse(format!("point count must be a positive integer, got {v}")))
        }
    };
    let frac = |k: usize, n: usize| if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
    let out: Vec<Complex64> = match kind {
        "ray" => {
            let p = parse_list(rest)?;
            if p.len() != 4 || !(p[1] > 0.0 && p[2] >= p[1]) {
                return Err(Error::Parse("ray needs angle,r0,r1,n with 0 < r0 <= r1".into()));
            }
            let n = count(p[3])?;
            (0..n)
                .map(|k| {
                    let r = p[1] * (p[2] / p[1]).powf(frac(k, n));
                    ray_point(r, p[0])
                })
                .collect()
        }
        "line" => {
            let p = parse_list(rest)?;
            if p.len() != 5 {
                return Err(Error::Parse("line needs re0,im0,re1,im1,n".into()));
            }
            let n = count(p[4])?;
            (0..n)
                .map(|k| {
                    let t = frac(k, n);
                    Complex64::new(p[0] + t * (p[2] - p[0]), p[1] + t * (p[3] - p[1]))
                })
                .collect()
        }
        "rect" => {
            let p = parse_list(rest)?;
            if p.len() != 6 {
                return Err(Error::Parse("rect needs re0,re1,nre,im0,im1,nim".into()));
            }
            let (nr, ni) = (count(p[2])?, count(p[5])?);
            let mut v = Vec::new();
            for j in 0..ni {
                for i in 0..nr {
                    v.push(Complex64::new(
                        p[0] + frac(i, nr) * (p[1] - p[0]),
                        p[3] + frac(j, ni) * (p[4] - p[3]),
                    ));
                }
            }
            v
        }
        "list" => rest
            .split(';')
            .map(|pt| match parse_list(pt)?.as_slice() {
                &[re, im] => Ok(Complex64::new(re, im)),
                _ => Err(Error::Parse(format!("list point '{pt}' must be re,im"))),
            })
            .collect::<Result<_>>()?,
        _ => return Err(Error::Parse(format!("unknown z-grid kind '{kind}'"))),
    };
    if out.is_empty() {
        return Err(Error::Parse("empty z-grid".into()));
    }
    Ok(out)
}

/// `r e^{i angle}` with exact axes for the angles `0`, `pi/2`, `pi`.
fn ray_point(r: f64, angle: f64) -> Complex64 {
    if angle == PI {
        Complex64::new(-r, 0.0)
    } else if angle == 0.5 * PI {
        Complex64::new(0.0, r)
    } else if angle == 0.0 {
        Complex64::new(r, 0.0)
    } else {
        Complex64::from_polar(r, angle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_lists() {
        assert_eq!(parse_num("1e4").unwrap(), 1e4);
        assert!((parse_num("2*pi/3").unwrap() - 2.0 * PI / 3.0).abs() < 1e-15);
        assert!(parse_num("x + 1").is_err());
        assert!(parse_num("abc").is_err());
        assert_eq!(parse_pair("0,50").unwrap(), (0.0, 50.0));
        assert!(parse_pair("5,1").is_err());
    }

    #[test]
    fn grids() {
        let g = parse_zgrid("ray:pi/2,1,1e4,40").unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], Complex64::new(0.0, 1.0));
        assert!((g[39].im - 1e4).abs() < 1e-9);
        let g = parse_zgrid("ray:pi,1,16,5").unwrap();
        assert_eq!(g[2], Complex64::new(-4.0, 0.0));
        assert_eq!(parse_zgrid("rect:0,1,2,1,2,3").unwrap().len(), 6);
        assert_eq!(parse_zgrid("list:-4,0;1,1").unwrap()[1], Complex64::new(1.0, 1.0));
        assert!(parse_zgrid("ray:1,2").is_err());
        assert!(parse_zgrid("spiral:1").is_err());
    }

    #[test]
    fn file_format() {
        let keys = ["model", "c"];
        let c = RunConfig::parse("# run\nmodel = bessel:l=0\n\nc=2 # anchor\n", &keys).unwrap();
        assert_eq!(c.get("model"), Some("bessel:l=0"));
        assert_eq!(c.num_or("c", 1.0).unwrap(), 2.0);
        assert!(RunConfig::parse("zgrid = x", &keys).is_err());
        assert!(RunConfig::parse("model", &keys).is_err());
    }
}
