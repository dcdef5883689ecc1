//! Spectral measures by Stieltjes inversion, the spectral transform and its
//! inverse, norming constants, support classification and resolvent images.

use crate::error::{Error, Result};
use crate::quad::gl16;
use crate::roots::brent;
use crate::schrodinger::Potential;
use crate::weyl::{singular_m, weyl_solution_psi_many, SolutionSystem};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Scalar function of `z`, typically a (singular) Weyl function.
pub type MFn = dyn Fn(Complex64) -> Result<Complex64> + Send + Sync;

pub const DEFAULT_EPS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub atoms: Vec<(f64, f64)>,
    /// Grid points where the epsilon extrapolation did not settle.
    #[serde(default)]
    pub flagged: Vec<f64>,
}

impl SpectralMeasure {
    pub fn new(grid: Vec<f64>, density: Vec<f64>, atoms: Vec<(f64, f64)>) -> Result<Self> {
        if grid.len() != density.len() || grid.is_empty() {
            return Err(Error::Invalid("grid and density must be nonempty and of equal length".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("measure grid must be increasing".into()));
        }
        if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::Invalid("density must be finite and nonnegative".into()));
        }
        if atoms.iter().any(|a| !(a.1 > 0.0)) {
            return Err(Error::Invalid("atom masses must be positive".into()));
        }
        Ok(SpectralMeasure {
            grid,
            density,
            atoms,
            flagged: Vec::new(),
        })
    }

    /// Measure with a given density sampled on `grid`.
    pub fn from_density<F: Fn(f64) -> f64>(grid: Vec<f64>, f: F) -> Result<Self> {
        let d = grid.iter().map(|&l| f(l)).collect();
        Self::new(grid, d, Vec::new())
    }

    /// Quadrature weights reproducing `int g d rho_ac` from samples on the grid.
    pub fn weights(&self) -> Vec<f64> {
        let w = grid_weights(&self.grid);
        w.iter().zip(&self.density).map(|(a, b)| a * b).collect()
    }

    /// `int g d rho` for samples `g` on the grid plus values at the atoms.
    pub fn integrate(&self, g: &[f64], at_atoms: &[f64]) -> f64 {
        let ac: f64 = self.weights().iter().zip(g).map(|(w, v)| w * v).sum();
        ac + self.atoms.iter().zip(at_atoms).map(|(a, v)| a.1 * v).sum::<f64>()
    }
}

/// Weights of the piecewise-quadratic rule on an increasing grid.
pub fn grid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    if n < 2 {
        return w;
    }
    if n == 2 {
        let h = x[1] - x[0];
        return vec![0.5 * h, 0.5 * h];
    }
    let mut i = 0;
    while i + 2 < n {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let s = (h0 + h1) / 6.0;
        w[i] += s * (2.0 - h1 / h0);
        w[i + 1] += s * (h0 + h1) * (h0 + h1) / (h0 * h1);
        w[i + 2] += s * (2.0 - h0 / h1);
        i += 2;
    }
    if i + 1 < n {
        // last single interval: quadratic through the final three points
        let (a, b, c) = (x[n - 3], x[n - 2], x[n - 1]);
        let h = c - b;
        let wa = -h * h * h / (6.0 * (b - a) * (c - a));
        let wb = h * (h + 3.0 * (b - a)) / (6.0 * (b - a));
        let wc = h * (3.0 * (b - a) + 2.0 * h) / (6.0 * (c - a));
        w[n - 3] += wa;
        w[n - 2] += wb;
        w[n - 1] += wc;
    }
    w
}

fn check_schedule(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(Error::Invalid("epsilon schedule needs at least three entries".into()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) || eps.iter().any(|&e| e < 1e-6) {
        return Err(Error::Invalid("epsilon schedule must be decreasing and >= 1e-6".into()));
    }
    Ok(())
}

/// Quadratic extrapolation to `eps = 0` through the three smallest entries.
fn extrapolate(eps: &[f64], v: &[f64]) -> f64 {
    let n = eps.len();
    let (e, f) = (&eps[n - 3..], &v[n - 3..]);
    let mut s = 0.0;
    for i in 0..3 {
        let mut l = 1.0;
        for j in 0..3 {
            if j != i {
                l *= (0.0 - e[j]) / (e[i] - e[j]);
            }
        }
        s += l * f[i];
    }
    s
}

pub fn uniform_grid(window: (f64, f64), npoints: usize) -> Result<Vec<f64>> {
    if npoints < 2 || !(window.1 > window.0) {
        return Err(Error::Invalid("window needs lo < hi and at least two points".into()));
    }
    Ok((0..npoints)
        .map(|i| window.0 + (window.1 - window.0) * i as f64 / (npoints - 1) as f64)
        .collect())
}

struct Probe {
    lambda: f64,
    im: Vec<f64>,
    re_min: f64,
}

fn probe(m: &MFn, lambda: f64, eps: &[f64]) -> Result<Probe> {
    let mut im = Vec::with_capacity(eps.len());
    let mut re_min = 0.0;
    for &e in eps {
        let v = m(Complex64::new(lambda, e))?;
        im.push(v.im);
        re_min = v.re;
    }
    Ok(Probe { lambda, im, re_min })
}

/// Limit of `eps Im M(lambda + i eps)`.
fn atom_mass(m: &MFn, lambda: f64, eps: &[f64]) -> Result<Option<f64>> {
    let s: Result<Vec<f64>> = eps.iter().map(|&e| Ok(e * m(Complex64::new(lambda, e))?.im)).collect();
    let s = s?;
    let n = s.len();
    let last = s[n - 1];
    let mass = extrapolate(eps, &s);
    let spread = (s[n - 1] - s[n - 2]).abs() + (s[n - 2] - s[n - 3]).abs();
    Ok((mass > 1e-10 && last > 0.0 && spread < 0.05 * last).then_some(mass))
}

fn locate_atoms(m: &MFn, probes: &[Probe], eps: &[f64]) -> Result<Vec<(f64, f64)>> {
    let e_min = *eps.last().unwrap();
    let mut candidates = Vec::new();
    for w in probes.windows(2) {
        if w[0].re_min > 0.0 && w[1].re_min < 0.0 {
            candidates.push((w[0].lambda, w[1].lambda));
        }
    }
    for p in probes {
        let n = p.im.len();
        if p.im[n - 1] > 2.5 * p.im[n - 2] && p.im[n - 2] > 2.5 * p.im[n - 3] {
            candidates.push((p.lambda, p.lambda));
        }
    }
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let delta = 1e-3 * e_min;
    for (lo, hi) in candidates.into_iter().take(64) {
        let at = if lo == hi {
            lo
        } else {
            match brent(|l| Ok(m(Complex64::new(l, delta))?.re), lo, hi, 1e-12 * hi.abs().max(1.0)) {
                Ok(v) => v,
                Err(_) => continue,
            }
        };
        if atoms.iter().any(|a| (a.0 - at).abs() < 1e-8 * at.abs().max(1.0)) {
            continue;
        }
        let fine: Vec<f64> = [1e-4, 3e-5, 1e-5, 3e-6, 1e-6].iter().map(|s| s * e_min / 1e-3).collect();
        if let Some(mass) = atom_mass(m, at, &fine)? {
            atoms.push((at, mass));
        }
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(atoms)
}

/// Density `pi^{-1} lim Im M(lambda + i eps)` on a uniform grid, plus atoms.
pub fn stieltjes_invert(m: &MFn, window: (f64, f64), npoints: usize, eps: &[f64]) -> Result<SpectralMeasure> {
    stieltjes_invert_on(m, uniform_grid(window, npoints)?, eps)
}

/// As [`stieltjes_invert`] on an arbitrary increasing grid.
pub fn stieltjes_invert_on(m: &MFn, grid: Vec<f64>, eps: &[f64]) -> Result<SpectralMeasure> {
    check_schedule(eps)?;
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("grid must be nonempty and increasing".into()));
    }
    let probes: Result<Vec<Probe>> = grid.par_iter().map(|&l| probe(m, l, eps)).collect();
    let probes = probes?;
    let atoms = locate_atoms(m, &probes, eps)?;
    let mut density = Vec::with_capacity(grid.len());
    let mut flagged = Vec::new();
    for p in &probes {
        // continuous part only: remove the Poisson kernels of the atoms
        let v: Vec<f64> = p
            .im
            .iter()
            .zip(eps)
            .map(|(x, &e)| {
                let atom: f64 = atoms.iter().map(|a| a.1 * e / ((p.lambda - a.0).powi(2) + e * e)).sum();
                (x - atom) / PI
            })
            .collect();
        let n = eps.len();
        let d = extrapolate(eps, &v);
        let prev = if n > 3 { extrapolate(&eps[..n - 1], &v[..n - 1]) } else { v[n - 1] };
        let near_atom = atoms.iter().any(|a| (a.0 - p.lambda).abs() < 10.0 * eps[n - 1]);
        if !d.is_finite() || (d - prev).abs() > 0.05 * d.abs() + 1e-6 || near_atom {
            flagged.push(p.lambda);
        }
        density.push(if d.is_finite() { d.max(0.0) } else { 0.0 });
    }
    let mut out = SpectralMeasure::new(grid, density, atoms)?;
    out.flagged = flagged;
    Ok(out)
}

/// `lim (lambda0 - z) M(z)` along `z = lambda0 + i eps`.
pub fn norming_constant(m: &MFn, lambda0: f64) -> Result<f64> {
    let eps = [1e-3, 3e-4, 1e-4, 3e-5, 1e-5];
    let s: Result<Vec<f64>> = eps
        .iter()
        .map(|&e| {
            let z = Complex64::new(lambda0, e);
            Ok(((lambda0 - z) * m(z)?).re)
        })
        .collect();
    let s = s?;
    let v = extrapolate(&eps, &s);
    let n = s.len();
    if !(v > 1e-9) || (s[n - 1] - s[n - 2]).abs() > 1e-2 * v.abs() {
        return Err(Error::Rejected(format!(
            "lambda0 = {lambda0} is not an eigenvalue (residue limit {v:.3e})"
        )));
    }
    Ok(v)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportClassification {
    pub ac: Vec<f64>,
    pub singular: Vec<f64>,
    pub point: Vec<f64>,
    pub support: Vec<f64>,
    pub note: String,
}

/// Per-point classification of the boundary behaviour of `Im M`.
pub fn classify_supports(m: &MFn, window: (f64, f64), npoints: usize, eps: &[f64]) -> Result<SupportClassification> {
    let meas = stieltjes_invert(m, window, npoints, eps)?;
    let probes: Result<Vec<Probe>> = meas.grid.par_iter().map(|&l| probe(m, l, eps)).collect();
    let probes = probes?;
    let scale = meas.density.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let mut out = SupportClassification {
        ac: Vec::new(),
        singular: Vec::new(),
        point: meas.atoms.iter().map(|a| a.0).collect(),
        support: Vec::new(),
        note: "numerical evidence from a finite epsilon schedule, not a proof".into(),
    };
    for (p, &d) in probes.iter().zip(&meas.density) {
        if out.point.iter().any(|&a| (a - p.lambda).abs() < 1e-9 * a.abs().max(1.0)) {
            continue;
        }
        let n = p.im.len();
        let grows = (1..n).all(|k| p.im[k] >= 3.0 * p.im[k - 1].max(1e-300)) && p.im[n - 1] > 0.0;
        if grows {
            out.singular.push(p.lambda);
        } else if d > 1e-8 * scale.max(1.0) && !meas.flagged.contains(&p.lambda) {
            out.ac.push(p.lambda);
        }
    }
    out.support = out.ac.iter().chain(&out.singular).copied().collect();
    out.support.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Compactly supported test function on `[lo, hi]`, smooth between breakpoints.
#[derive(Clone)]
pub struct TestFunction {
    pub label: String,
    pub support: (f64, f64),
    pub breakpoints: Vec<f64>,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl TestFunction {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(label: &str, support: (f64, f64), f: F) -> Result<Self> {
        if !(support.1 > support.0) || !support.0.is_finite() || !support.1.is_finite() {
            return Err(Error::Invalid("test function support must be a finite interval".into()));
        }
        Ok(TestFunction {
            label: label.to_string(),
            support,
            breakpoints: Vec::new(),
            f: Arc::new(f),
        })
    }

    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        Self::new(&format!("chi[{lo},{hi}]"), (lo, hi), |_| 1.0)
    }

    /// Piecewise-linear interpolant of samples.
    pub fn from_samples(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("samples need increasing x and matching lengths".into()));
        }
        let support = (xs[0], *xs.last().unwrap());
        let bps = xs[1..xs.len() - 1].to_vec();
        let mut t = Self::new("samples", support, move |x| {
            let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
            let (x0, x1) = (xs[i - 1], xs[i]);
            ys[i - 1] + (ys[i] - ys[i - 1]) * (x - x0) / (x1 - x0)
        })?;
        if bps.len() <= 64 {
            t.breakpoints = bps;
        }
        Ok(t)
    }

    pub fn with_breakpoints(mut self, pts: Vec<f64>) -> Self {
        self.breakpoints = pts;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            0.0
        } else {
            (self.f)(x)
        }
    }

    /// Composite Gauss-Legendre nodes with about `per_unit` panels per unit length.
    pub fn nodes(&self, per_unit: f64) -> (Vec<f64>, Vec<f64>) {
        let mut cuts = vec![self.support.0];
        cuts.extend(self.breakpoints.iter().copied().filter(|&p| p > self.support.0 && p < self.support.1));
        cuts.push(self.support.1);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (t, w) = gl16();
        let (t, w) = (t.as_slice(), w.as_slice());
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for c in cuts.windows(2) {
            let len = c[1] - c[0];
            let n = ((len * per_unit).ceil() as usize).max(2);
            let h = len / n as f64;
            for k in 0..n {
                let a = c[0] + k as f64 * h;
                for (ti, wi) in t.iter().zip(w) {
                    xs.push(a + 0.5 * h * (ti + 1.0));
                    ws.push(0.5 * h * wi);
                }
            }
        }
        (xs, ws)
    }

    fn panels_for(&self, lambda_max: f64) -> f64 {
        (lambda_max.abs().sqrt() / 3.0).max(4.0)
    }
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("support", &self.support)
            .finish()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformedFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `(lambda0, fhat(lambda0))` at the atoms of the measure.
    pub atoms: Vec<(f64, f64)>,
}

fn hat_at(sys: &SolutionSystem, lambda: f64, xs: &[f64], fw: &[f64]) -> Result<f64> {
    let z = Complex64::new(lambda, 0.0);
    let mut s = 0.0;
    for (&x, &v) in xs.iter().zip(fw) {
        if v != 0.0 {
            s += sys.phi_at(z, x).map_err(|_| Error::Quadrature { lambda })?.u.re * v;
        }
    }
    Ok(s)
}

/// `fhat(lambda) = int phi(lambda, x) f(x) dx` on the grid and at the atoms.
pub fn transform_forward(sys: &SolutionSystem, f: &TestFunction, measure: &SpectralMeasure) -> Result<TransformedFunction> {
    let lmax = measure
        .grid
        .iter()
        .chain(measure.atoms.iter().map(|a| &a.0))
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let (xs, ws) = f.nodes(f.panels_for(lmax));
    let fw: Vec<f64> = xs.iter().zip(&ws).map(|(&x, &w)| f.eval(x) * w).collect();
    let values: Result<Vec<f64>> = measure.grid.par_iter().map(|&l| hat_at(sys, l, &xs, &fw)).collect();
    let atoms: Result<Vec<(f64, f64)>> = measure
        .atoms
        .iter()
        .map(|&(l, _)| Ok((l, hat_at(sys, l, &xs, &fw)?)))
        .collect();
    Ok(TransformedFunction {
        grid: measure.grid.clone(),
        values: values?,
        atoms: atoms?,
    })
}

/// `int phi(lambda, x) fhat(lambda) d rho(lambda)` over the grid and atoms.
pub fn transform_inverse(sys: &SolutionSystem, measure: &SpectralMeasure, fhat: &TransformedFunction, x: f64) -> Result<f64> {
    if fhat.grid.len() != measure.grid.len() {
        return Err(Error::Invalid("transformed function does not live on the measure grid".into()));
    }
    let w = measure.weights();
    let mut s = 0.0;
    for ((&l, &v), &wi) in measure.grid.iter().zip(&fhat.values).zip(&w) {
        if v != 0.0 && wi != 0.0 {
            s += wi * v * sys.phi_at(Complex64::new(l, 0.0), x)?.u.re;
        }
    }
    for (&(l, mass), &(_, v)) in measure.atoms.iter().zip(&fhat.atoms) {
        s += mass * v * sys.phi_at(Complex64::new(l, 0.0), x)?.u.re;
    }
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct ParsevalReport {
    pub head: f64,
    pub tail: f64,
    pub total: f64,
    pub cutoff: f64,
    pub tail_exponent: f64,
}

/// Integral over `[x0, x1]` of the quadratic through three consecutive nodes.
fn first_interval(h0: f64, h1: f64, f: [f64; 3]) -> f64 {
    h0 * (2.0 * h0 + 3.0 * h1) / (6.0 * (h0 + h1)) * f[0] + h0 * (h0 + 3.0 * h1) / (6.0 * h1) * f[1]
        - h0 * h0 * h0 / (6.0 * h1 * (h0 + h1)) * f[2]
}

/// Running integral of samples `g` on an increasing grid.
fn cumulative(x: &[f64], g: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let piece = if i + 2 < n {
            first_interval(x[i + 1] - x[i], x[i + 2] - x[i + 1], [g[i], g[i + 1], g[i + 2]])
        } else if i >= 1 {
            first_interval(x[i + 1] - x[i], x[i] - x[i - 1], [g[i + 1], g[i], g[i - 1]])
        } else {
            0.5 * (x[1] - x[0]) * (g[0] + g[1])
        };
        out[i + 1] = out[i] + piece;
    }
    out
}

/// Least squares `y = I - B x^{-s} - C x^{-2s}` for fixed `s`; returns `(I, residual)`.
fn tail_model(xs: &[f64], ys: &[f64], s: f64, two_terms: bool) -> Option<(f64, f64)> {
    let cols = if two_terms { 3 } else { 2 };
    let a = nalgebra::DMatrix::from_fn(xs.len(), cols, |i, j| match j {
        0 => 1.0,
        1 => -xs[i].powf(-s),
        _ => -xs[i].powf(-2.0 * s),
    });
    let b = nalgebra::DVector::from_column_slice(ys);
    let sol = a.clone().svd(true, true).solve(&b, 1e-15).ok()?;
    let r = (&a * &sol - &b).norm();
    Some((sol[0], r))
}

/// `||fhat||^2_rho` including a tail past the grid cutoff.
///
/// The running integral is sampled at points spaced by `period` in
/// `sqrt(lambda)` back from the cutoff, which locks the phase of the
/// oscillating part, and extrapolated by `I - B lambda^{-s} - C lambda^{-2s}`.
/// Without a period, or when fewer than six periods fit in the upper 60% of
/// the cutoff, the samples are the upper half of the grid and a single power
/// is fitted.
pub fn parseval_norm(measure: &SpectralMeasure, fhat: &TransformedFunction, period: Option<f64>) -> Result<ParsevalReport> {
    let g: Vec<f64> = fhat.values.iter().zip(&measure.density).map(|(v, d)| v * v * d).collect();
    let a2: Vec<f64> = fhat.atoms.iter().map(|a| a.1 * a.1).collect();
    let sq: Vec<f64> = fhat.values.iter().map(|v| v * v).collect();
    let head = measure.integrate(&sq, &a2);
    let n = measure.grid.len();
    let cutoff = measure.grid[n - 1];
    let plain = ParsevalReport {
        head,
        tail: 0.0,
        total: head,
        cutoff,
        tail_exponent: f64::NAN,
    };
    if n < 16 || cutoff <= 0.0 {
        return Ok(plain);
    }
    let cum = cumulative(&measure.grid, &g);
    let locked = period.filter(|&t| t > 0.0 && 0.6 * cutoff.sqrt() >= 5.0 * t);
    let (xs, ys, two) = match locked {
        Some(t) => {
            let wmax = cutoff.sqrt();
            let w0 = measure.grid.iter().copied().find(|&l| l > 0.0).unwrap_or(cutoff).sqrt();
            let lo = (0.4 * wmax).max(w0);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut w = wmax;
            while w >= lo {
                let lam = w * w;
                let i = measure.grid.partition_point(|&l| l < lam).clamp(1, n - 1);
                let (l0, l1) = (measure.grid[i - 1], measure.grid[i]);
                let u = (lam - l0) / (l1 - l0);
                xs.push(lam);
                ys.push(cum[i - 1] + u * (cum[i] - cum[i - 1]));
                w -= t;
            }
            (xs, ys, true)
        }
        _ => {
            let start = n / 2;
            (measure.grid[start..].to_vec(), cum[start..].to_vec(), false)
        }
    };
    if xs.len() < if two { 6 } else { 4 } {
        return Ok(plain);
    }
    let mut best = (f64::INFINITY, 0.5, head);
    let (mut lo, mut hi) = (0.05, 3.0);
    for _ in 0..4 {
        let step = (hi - lo) / 40.0;
        for k in 0..=40 {
            let s = lo + step * k as f64;
            if let Some((i_inf, r)) = tail_model(&xs, &ys, s, two) {
                if r < best.0 {
                    best = (r, s, i_inf);
                }
            }
        }
        lo = (best.1 - step).max(0.01);
        hi = best.1 + step;
    }
    let total = best.2 + (head - cum[n - 1]);
    if best.1 < 0.1 || !(total - head).is_finite() || (total - head).abs() > head.abs() {
        return Err(Error::NoConvergence(format!(
            "tail extrapolation past lambda = {cutoff} is unreliable (exponent {:.3}, tail {:.3e}); raise the cutoff",
            best.1,
            total - head
        )));
    }
    Ok(ParsevalReport {
        head,
        tail: total - head,
        total,
        cutoff,
        tail_exponent: best.1,
    })
}

/// Oscillation period in `sqrt(lambda)` of `fhat^2` for `f` supported up to `f.support.1`.
pub fn oscillation_period(f: &TestFunction, a: f64) -> f64 {
    2.0 * PI / (f.support.1 - a)
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport {
    pub relative_defect: f64,
    pub norm: f64,
    pub cutoff: f64,
}

/// `||U^{-1} U f - f|| / ||f||` over `[a, support.1 + extra]`.
pub fn round_trip(
    sys: &SolutionSystem,
    measure: &SpectralMeasure,
    f: &TestFunction,
    fhat: &TransformedFunction,
    x_range: (f64, f64),
) -> Result<RoundTripReport> {
    let lmax = measure.grid.last().copied().unwrap_or(1.0);
    let probe = TestFunction::new("range", x_range, |_| 1.0)?.with_breakpoints(vec![f.support.0, f.support.1]);
    let (xs, ws) = probe.nodes(probe.panels_for(lmax));
    let vals: Result<Vec<f64>> = xs.par_iter().map(|&x| transform_inverse(sys, measure, fhat, x)).collect();
    let vals = vals?;
    let mut err = 0.0;
    let mut norm = 0.0;
    for ((&x, &w), v) in xs.iter().zip(&ws).zip(vals) {
        let fx = f.eval(x);
        err += w * (v - fx).powi(2);
        norm += w * fx * fx;
    }
    Ok(RoundTripReport {
        relative_defect: (err / norm).sqrt(),
        norm: norm.sqrt(),
        cutoff: lmax,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventImageReport {
    pub z: Complex64,
    pub x: f64,
    pub max_rel_dev: f64,
    pub max_rel_dev_derivative: f64,
    pub max_rel_dev_z_derivative: f64,
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max) / scale
}

/// Transform of `y -> G(z, x, y)` against `phi(lambda, x)/(lambda - z)` on the
/// measure grid, with the `x`- and `z`-derivative variants.
pub fn resolvent_image_check(
    sys: &SolutionSystem,
    pot: &Potential,
    c: f64,
    grid: &[f64],
    z: Complex64,
    x: f64,
    y_max: f64,
) -> Result<ResolventImageReport> {
    if z.im != 0.0 {
        return Err(Error::Precondition("resolvent image check uses real z below the spectrum".into()));
    }
    let lmax = grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let range = TestFunction::new("G", (pot.a, y_max), |_| 1.0)?.with_breakpoints(vec![x]);
    let (ys, ws) = range.nodes(range.panels_for(lmax).max(8.0));
    let h = 1e-4 * z.norm().max(1.0);
    let kernels = |zz: Complex64| -> Result<(Vec<f64>, Vec<f64>)> {
        let psi = weyl_solution_psi_many(sys, pot, c, zz, &ys, 1e-11)?;
        let px = sys.phi_at(zz, x)?;
        let sx = weyl_solution_psi_many(sys, pot, c, zz, &[x], 1e-11)?[0];
        let mut g = Vec::with_capacity(ys.len());
        let mut gx = Vec::with_capacity(ys.len());
        for (&y, p) in ys.iter().zip(&psi) {
            if y > x {
                g.push((px.u * p.u).re);
                gx.push((px.du * p.u).re);
            } else {
                let py = sys.phi_at(zz, y)?;
                g.push((py.u * sx.u).re);
                gx.push((py.u * sx.du).re);
            }
        }
        Ok((g, gx))
    };
    let (g, gx) = kernels(z)?;
    let (gp, _) = kernels(z + Complex64::new(h, 0.0))?;
    let (gm, _) = kernels(z - Complex64::new(h, 0.0))?;
    let gz: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let rows: Result<Vec<[f64; 6]>> = grid
        .par_iter()
        .map(|&l| {
            let zl = Complex64::new(l, 0.0);
            let mut acc = [0.0; 3];
            for k in 0..ys.len() {
                let p = sys.phi_at(zl, ys[k])?.u.re * ws[k];
                acc[0] += p * g[k];
                acc[1] += p * gx[k];
                acc[2] += p * gz[k];
            }
            let pl = sys.phi_at(zl, x)?;
            let d = l - z.re;
            Ok([acc[0], pl.u.re / d, acc[1], pl.du.re / d, acc[2], pl.u.re / (d * d)])
        })
        .collect();
    let rows = rows?;
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    Ok(ResolventImageReport {
        z,
        x,
        max_rel_dev: max_rel(&col(0), &col(1)),
        max_rel_dev_derivative: max_rel(&col(2), &col(3)),
        max_rel_dev_z_derivative: max_rel(&col(4), &col(5)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EntireCheckReport {
    pub cr_residual: f64,
    pub conjugate_symmetry: f64,
    /// `|E(l + i e) - E(l - i e)| / |m_f(l + i e) - m_f(l - i e)|` at the window centre.
    pub jump_ratio: f64,
    pub im_on_axis: Vec<(f64, f64)>,
}

fn hat_complex(sys: &SolutionSystem, z: Complex64, xs: &[f64], fw: &[f64]) -> Result<Complex64> {
    let mut s = Complex64::new(0.0, 0.0);
    for (&x, &w) in xs.iter().zip(fw) {
        s += sys.phi_at(z, x)?.u * w;
    }
    Ok(s)
}

/// `m_f(z) = <f, (H - z)^{-1} f>` from the Green function.
fn m_f(sys: &SolutionSystem, pot: &Potential, c: f64, f: &TestFunction, z: Complex64) -> Result<Complex64> {
    let (ys, wy) = f.nodes(6.0);
    let psi = weyl_solution_psi_many(sys, pot, c, z, &ys, 1e-11)?;
    let (t, w) = gl16();
    let (t, w) = (t.as_slice(), w.as_slice());
    let mut total = Complex64::new(0.0, 0.0);
    for ((&y, &wyy), p) in ys.iter().zip(&wy).zip(&psi) {
        // inner integral of f phi over [support.0, y]
        let (a, len) = (f.support.0, y - f.support.0);
        let mut inner = Complex64::new(0.0, 0.0);
        for half in 0..2 {
            let a0 = a + 0.5 * len * half as f64;
            let h = 0.5 * len;
            for (ti, wi) in t.iter().zip(w) {
                let x = a0 + 0.5 * h * (ti + 1.0);
                inner += sys.phi_at(z, x)?.u * (f.eval(x) * 0.5 * h * wi);
            }
        }
        total += 2.0 * wyy * f.eval(y) * p.u * inner;
    }
    Ok(total)
}

/// `E_f(z) = m_f(z) - fhat(z)^2 M(z)` near the window: Cauchy-Riemann residual,
/// conjugate symmetry and continuity across the real axis.
pub fn ef_entire_check(
    sys: &SolutionSystem,
    pot: &Potential,
    c: f64,
    f: &TestFunction,
    window: (f64, f64),
) -> Result<EntireCheckReport> {
    let (xs, ws) = f.nodes(f.panels_for(window.1.abs() + 10.0));
    let fw: Vec<f64> = xs.iter().zip(&ws).map(|(&x, &w)| f.eval(x) * w).collect();
    let centre = 0.5 * (window.0 + window.1);
    for k in 0..=8 {
        let l = window.0 + (window.1 - window.0) * k as f64 / 8.0;
        if hat_complex(sys, Complex64::new(l, 0.0), &xs, &fw)?.norm() < 1e-8 {
            return Err(Error::Precondition(format!("fhat vanishes near lambda = {l} in the window")));
        }
    }
    let e = |z: Complex64| -> Result<(Complex64, Complex64)> {
        let mf = m_f(sys, pot, c, f, z)?;
        let fh = hat_complex(sys, z, &xs, &fw)?;
        let mm = singular_m(sys, pot, c, z, 1e-11)?;
        Ok((mf - fh * fh * mm, mf))
    };
    let r = 0.25 * (window.1 - window.0);
    let h = 1e-3 * r.max(1e-3);
    let mut cr: f64 = 0.0;
    let mut sym: f64 = 0.0;
    for k in 0..6 {
        let ang = PI * (k as f64 + 0.5) / 6.0;
        let z0 = Complex64::new(centre, 0.0) + Complex64::from_polar(r, ang);
        let (ex1, _) = e(z0 + h)?;
        let (ex0, _) = e(z0 - h)?;
        let (ey1, _) = e(z0 + Complex64::new(0.0, h))?;
        let (ey0, _) = e(z0 - Complex64::new(0.0, h))?;
        let dx = (ex1 - ex0) / (2.0 * h);
        let dy = (ey1 - ey0) / (2.0 * h);
        cr = cr.max((dx + Complex64::i() * dy).norm() / dx.norm().max(1e-300));
        let (ez, _) = e(z0)?;
        let (ec, _) = e(z0.conj())?;
        sym = sym.max((ec - ez.conj()).norm() / ez.norm().max(1e-300));
    }
    let eps = 1e-3;
    let (eu, mu) = e(Complex64::new(centre, eps))?;
    let (el, ml) = e(Complex64::new(centre, -eps))?;
    let jump_ratio = (eu - el).norm() / (mu - ml).norm().max(1e-300);
    let mut im_on_axis = Vec::new();
    for k in 0..5 {
        let l = window.0 + (window.1 - window.0) * k as f64 / 4.0;
        im_on_axis.push((l, e(Complex64::new(l, eps))?.0.im));
    }
    Ok(EntireCheckReport {
        cr_residual: cr,
        conjugate_symmetry: sym,
        jump_ratio,
        im_on_axis,
    })
}
