use super::expr::Expr;
use crate::error::{Error, Result};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Behaviour of the right endpoint `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Finite regular endpoint with a Dirichlet condition.
    Regular,
    /// `b = +inf`, potential decaying (or bounded below) so that `b` is limit point.
    LimitPointDecaying,
}

/// Coefficient `q` of `-d^2/dx^2 + q` on `(a, b)`, stored as
/// `q(x) = l(l+1)/(x-a)^2 + qtilde(x)`.
#[derive(Clone)]
pub struct Potential {
    qtilde: RealFn,
    pub a: f64,
    pub b: f64,
    /// Singularity strength at `a`; `None` means a regular endpoint.
    pub l: Option<f64>,
    pub tail: Tail,
    /// Leading terms `[q_{-1}, q_0, ...]` of `qtilde` in powers of `x - a`.
    pub(crate) local: Vec<f64>,
    pub(crate) breakpoints: Vec<f64>,
    pub label: String,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("label", &self.label)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("l", &self.l)
            .field("tail", &self.tail)
            .finish()
    }
}

impl Potential {
    /// Builds a potential from the regular part `qtilde`; the local
    /// expansion at `a` is estimated from samples.
    pub fn from_qtilde<F>(label: &str, qtilde: F, a: f64, b: f64, l: Option<f64>, tail: Tail) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(a.is_finite() && b > a) {
            return Err(Error::Invalid(format!("bad interval ({a}, {b})")));
        }
        if let Some(l) = l {
            if !l.is_finite() {
                return Err(Error::Invalid("non-finite l".into()));
            }
            if l < -0.5 {
                return Err(Error::Unsupported(format!("l = {l} < -1/2")));
            }
        }
        if tail == Tail::Regular && !b.is_finite() {
            return Err(Error::Invalid("regular tail needs finite b".into()));
        }
        if tail == Tail::LimitPointDecaying && b.is_finite() {
            return Err(Error::Invalid("limit-point tail needs b = inf".into()));
        }
        let mut p = Potential {
            qtilde: Arc::new(qtilde),
            a,
            b,
            l,
            tail,
            local: Vec::new(),
            breakpoints: Vec::new(),
            label: label.to_string(),
        };
        p.local = p.estimate_local();
        Ok(p)
    }

    /// Builds a potential from the full coefficient `q`; with `l` given the
    /// centrifugal term is subtracted to obtain `qtilde`.
    pub fn from_q<F>(label: &str, q: F, a: f64, b: f64, l: Option<f64>, tail: Tail) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let c = l.map(|l| l * (l + 1.0)).unwrap_or(0.0);
        Self::from_qtilde(label, move |x| q(x) - c / ((x - a) * (x - a)), a, b, l, tail)
    }

    /// Pure Bessel potential `l(l+1)/x^2` on `(0, inf)`.
    pub fn bessel(l: f64) -> Result<Self> {
        Ok(Self::from_qtilde(&format!("bessel:l={l}"), |_| 0.0, 0.0, f64::INFINITY, Some(l), Tail::LimitPointDecaying)?
            .with_local(vec![0.0, 0.0]))
    }

    /// `l(l+1)/x^2 + q1/x` on `(0, inf)`.
    pub fn coulomb(l: f64, q1: f64) -> Result<Self> {
        Ok(Self::from_qtilde(
            &format!("bessel+coulomb:l={l},q1={q1}"),
            move |x| q1 / x,
            0.0,
            f64::INFINITY,
            Some(l),
            Tail::LimitPointDecaying,
        )?
        .with_local(vec![q1, 0.0]))
    }

    /// Parses an expression in `x` for the full potential.
    pub fn from_expr(src: &str, a: f64, b: f64, l: Option<f64>, tail: Tail) -> Result<Self> {
        let e = Expr::parse(src)?;
        Self::from_q(src, move |x| e.eval(x), a, b, l, tail)
    }

    /// Reads a tabulated potential from CSV with header `x,q`; linear
    /// interpolation, `b` is the last abscissa with a Dirichlet condition.
    pub fn from_csv(path: &Path, l: Option<f64>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "q" {
            return Err(Error::Parse("potential table needs header 'x,q'".into()));
        }
        let mut xs = Vec::new();
        let mut qs = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let x: f64 = rec[0].trim().parse().map_err(|_| Error::Parse(format!("bad x '{}'", &rec[0])))?;
            let q: f64 = rec[1].trim().parse().map_err(|_| Error::Parse(format!("bad q '{}'", &rec[1])))?;
            xs.push(x);
            qs.push(q);
        }
        Self::from_table(&path.display().to_string(), xs, qs, l)
    }

    pub fn from_table(label: &str, xs: Vec<f64>, qs: Vec<f64>, l: Option<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != qs.len() {
            return Err(Error::Invalid("potential table needs at least two rows".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) || qs.iter().any(|q| !q.is_finite()) {
            return Err(Error::Invalid("table abscissae must increase and values be finite".into()));
        }
        let a = xs[0];
        let b = *xs.last().unwrap();
        let xs2 = xs.clone();
        let interp = move |x: f64| {
            let i = xs2.partition_point(|&v| v <= x).clamp(1, xs2.len() - 1) - 1;
            let t = (x - xs2[i]) / (xs2[i + 1] - xs2[i]);
            qs[i] * (1.0 - t) + qs[i + 1] * t
        };
        let mut p = Self::from_q(label, interp, a, b, l, Tail::Regular)?;
        p.breakpoints = xs[1..xs.len() - 1].to_vec();
        Ok(p)
    }

    /// Overrides the local expansion of `qtilde` at `a`.
    pub fn with_local(mut self, coeffs: Vec<f64>) -> Self {
        self.local = coeffs;
        self
    }

    /// Points where `q` is not smooth; integration is split there.
    pub fn with_breakpoints(mut self, mut pts: Vec<f64>) -> Self {
        pts.retain(|&p| p > self.a && p < self.b);
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        self.breakpoints = pts;
        self
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn local_expansion(&self) -> &[f64] {
        &self.local
    }

    /// Effective singularity strength: regular endpoints behave like `l = 0`.
    pub fn strength(&self) -> f64 {
        self.l.unwrap_or(0.0)
    }

    pub fn qtilde(&self, x: f64) -> f64 {
        (self.qtilde)(x)
    }

    pub fn q(&self, x: f64) -> f64 {
        let s = x - self.a;
        match self.l {
            Some(l) if l != 0.0 => l * (l + 1.0) / (s * s) + (self.qtilde)(x),
            _ => (self.qtilde)(x),
        }
    }

    /// Returns a copy whose regular part is `qtilde + extra`.
    pub fn add<F>(&self, label: &str, extra: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let base = self.qtilde.clone();
        let mut p = self.clone();
        p.qtilde = Arc::new(move |x| base(x) + extra(x));
        p.label = label.to_string();
        p.local = p.estimate_local();
        p
    }

    fn estimate_local(&self) -> Vec<f64> {
        let span = if self.b.is_finite() { self.b - self.a } else { 1.0 };
        let h = 1e-3 * span.min(1.0);
        let g: Vec<f64> = (1..=3)
            .map(|k| {
                let s = k as f64 * h;
                s * (self.qtilde)(self.a + s)
            })
            .collect();
        if g.iter().any(|v| !v.is_finite()) {
            return vec![0.0, 0.0];
        }
        // quadratic through (h, g1), (2h, g2), (3h, g3)
        let qm1 = 3.0 * g[0] - 3.0 * g[1] + g[2];
        let q0 = (-5.0 * g[0] + 8.0 * g[1] - 3.0 * g[2]) / (2.0 * h);
        vec![qm1, q0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_expansion_of_coulomb_expression() {
        let p = Potential::from_expr("2/x^2 + 3/x + 1.5", 0.0, f64::INFINITY, Some(1.0), Tail::LimitPointDecaying).unwrap();
        let c = p.local_expansion();
        assert!((c[0] - 3.0).abs() < 1e-6, "{c:?}");
        assert!((c[1] - 1.5).abs() < 1e-4, "{c:?}");
        assert!((p.q(0.5) - (8.0 + 6.0 + 1.5)).abs() < 1e-12);
    }

    #[test]
    fn rejects_strong_attraction() {
        assert!(matches!(Potential::bessel(-0.75), Err(Error::Unsupported(_))));
    }

    #[test]
    fn table_interpolates() {
        let p = Potential::from_table("t", vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0], None).unwrap();
        assert_eq!(p.q(0.5), 1.0);
        assert_eq!(p.q(1.5), 1.0);
        assert_eq!(p.breakpoints(), &[1.0]);
        assert_eq!(p.b, 2.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("swm_pot_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("q.csv");
        std::fs::write(&path, "x,q\n0,1\n1,3\n").unwrap();
        let p = Potential::from_csv(&path, None).unwrap();
        assert!((p.q(0.25) - 1.5).abs() < 1e-15);
        std::fs::write(&path, "x,v\n0,1\n1,3\n").unwrap();
        assert!(Potential::from_csv(&path, None).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
