//! Generalized Nevanlinna diagnostics: negative squares of the Nevanlinna
//! kernel, the representation power `k`, integral representations, Herglotz
//! rescaling and growth/moment comparisons.

use crate::error::{Error, Result};
use crate::quad;
use crate::spectral::{grid_weights, SpectralMeasure, MFn};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

pub const ZERO_EIGEN: f64 = 1e-10;
/// Margin around the integrability boundary inside which tail fits are ambiguous.
pub const TAIL_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct KernelCount {
    pub kappa: usize,
    pub per_trial: Vec<usize>,
    pub note: String,
}

fn negative_count(m: &MFn, pts: &[Complex64]) -> Result<usize> {
    let vals: Result<Vec<Complex64>> = pts.iter().map(|&z| m(z)).collect();
    let vals = vals?;
    let n = pts.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(vals[i].im / pts[i].im, 0.0)
        } else {
            (vals[i] - vals[j].conj()) / (pts[i] - pts[j].conj())
        }
    });
    if k.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Overflow("non-finite Nevanlinna kernel entry".into()));
    }
    let eig = k.symmetric_eigenvalues();
    let scale = eig.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    Ok(eig.iter().filter(|&&e| e < -ZERO_EIGEN * scale).count())
}

fn validate_points(points: &[Complex64]) -> Result<()> {
    for (i, z) in points.iter().enumerate() {
        if z.im == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Invalid(format!("kernel point {z} is not off the real axis")));
        }
        for w in &points[..i] {
            if (z - w).norm() < 1e-12 * z.norm().max(1.0) {
                return Err(Error::Invalid(format!("kernel points repeat at {z}")));
            }
        }
    }
    Ok(())
}

fn conjugate_collision(points: &[Complex64]) -> bool {
    points.iter().enumerate().any(|(i, z)| {
        points[..i]
            .iter()
            .any(|w| (z - w.conj()).norm() < 1e-8 * z.norm().max(1.0))
    })
}

/// Resample `n` points with modulus in `[rmin, rmax]` (log-uniform) in both half-planes.
fn sample_points(rng: &mut ChaCha8Rng, n: usize, rmin: f64, rmax: f64) -> Vec<Complex64> {
    loop {
        let pts: Vec<Complex64> = (0..n)
            .map(|_| {
                let r = (rmin.ln() + rng.gen::<f64>() * (rmax / rmin).ln()).exp();
                let t = 0.1 + rng.gen::<f64>() * (std::f64::consts::PI - 0.2);
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                Complex64::from_polar(r, s * t)
            })
            .collect();
        if !conjugate_collision(&pts) {
            return pts;
        }
    }
}

/// Number of negative squares of `(M(z) - M(w)*)/(z - w*)`: the maximum over the
/// given point set and `trials - 1` resampled sets of the same size and spread.
pub fn kernel_negative_squares(m: &MFn, points: &[Complex64], trials: usize, seed: u64) -> Result<KernelCount> {
    if points.is_empty() || trials == 0 {
        return Err(Error::Invalid("need at least one point and one trial".into()));
    }
    validate_points(points)?;
    let rmin = points.iter().fold(f64::INFINITY, |a, z| a.min(z.norm()));
    let rmax = points.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(rmin * 1.0001);
    let sets: Vec<Vec<Complex64>> = (0..trials)
        .map(|t| {
            if t == 0 && !conjugate_collision(points) {
                points.to_vec()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                sample_points(&mut rng, points.len(), rmin, rmax)
            }
        })
        .collect();
    let counts: Result<Vec<usize>> = sets.par_iter().map(|p| negative_count(m, p)).collect();
    let counts = counts?;
    Ok(KernelCount {
        kappa: *counts.iter().max().unwrap(),
        per_trial: counts,
        note: "estimate: maximum over finite samples".into(),
    })
}

/// Default sample: `n` points spread over `1 <= |z| <= 30` in both half-planes.
pub fn default_points(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_points(&mut rng, n, 1.0, 30.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub from: f64,
    pub to: f64,
}

/// Weighted least-squares fit `density ~ C lambda^p` over the last decade of the grid.
pub fn fit_density_tail(measure: &SpectralMeasure) -> Option<TailFit> {
    let hi = *measure.grid.last()?;
    if hi <= 0.0 {
        return None;
    }
    let lo = (hi / 10.0).max(measure.grid.iter().copied().find(|&l| l > 0.0)?);
    let pts: Vec<(f64, f64)> = measure
        .grid
        .iter()
        .zip(&measure.density)
        .filter(|(l, d)| **l >= lo && **d > 0.0)
        .map(|(l, d)| (l.ln(), d.ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let (p, c) = weighted_line(&pts);
    Some(TailFit {
        exponent: p,
        coefficient: c.exp(),
        from: lo,
        to: hi,
    })
}

/// Least squares slope and intercept, weighting later points more.
fn weighted_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len();
    let mut sw = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (i, &(x, y)) in pts.iter().enumerate() {
        let w = 1.0 + i as f64 / n as f64;
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    (slope, (sy - slope * sx) / sw)
}

fn has_tail(measure: &SpectralMeasure) -> bool {
    let n = measure.density.len();
    let peak = measure.density.iter().cloned().fold(0.0f64, f64::max);
    n > 0 && measure.density[n - 1] > 1e-12 * peak.max(1e-300)
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalK {
    /// `None` when the tail exponent sits within the margin of a boundary.
    pub k: Option<usize>,
    pub tail: Option<TailFit>,
}

/// Smallest `k <= kmax` with `int (1 + lambda^2)^{-k-1} d rho < infinity`.
pub fn minimal_k(measure: &SpectralMeasure, kmax: usize) -> Result<MinimalK> {
    if !has_tail(measure) {
        return Ok(MinimalK { k: Some(0), tail: None });
    }
    let tail = fit_density_tail(measure)
        .ok_or_else(|| Error::Precondition("measure grid too short to fit a tail".into()))?;
    let p = tail.exponent;
    for k in 0..=kmax {
        let margin = p - 2.0 * k as f64 - 1.0;
        if margin.abs() < TAIL_MARGIN {
            return Ok(MinimalK { k: None, tail: Some(tail) });
        }
        if margin < 0.0 {
            return Ok(MinimalK { k: Some(k), tail: Some(tail) });
        }
    }
    Err(Error::NoConvergence(format!("no k <= {kmax} makes the tail exponent {p:.3} integrable")))
}

/// Upper bound `ceil((l + 1)/2)` for the representation power of perturbed Bessel operators.
pub fn bessel_k_bound(l: f64) -> Result<usize> {
    if !(l >= -0.5) || !l.is_finite() {
        return Err(Error::Invalid(format!("l = {l} < -1/2")));
    }
    Ok(((l + 1.0) / 2.0).ceil() as usize)
}

/// `floor(l/2 + 3/4)`, the number of negative squares of the Bessel Weyl function.
pub fn bessel_kappa(l: f64) -> Result<usize> {
    if !(l >= -0.5) || !l.is_finite() {
        return Err(Error::Invalid(format!("l = {l} < -1/2")));
    }
    Ok((l / 2.0 + 0.75).floor() as usize)
}

/// `kappa` from a minimal representation with polynomial degree `l` and top coefficient `a_l`.
pub fn kappa_from_representation(k: usize, l: usize, a_l: f64) -> usize {
    if l <= 2 * k {
        k
    } else if l % 2 == 0 || a_l > 0.0 {
        l / 2
    } else {
        l / 2 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GHat {
    /// `(1 + z^2)^k`
    Poly(usize),
    ExpZ,
    ExpZ2,
}

impl GHat {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match *self {
            GHat::Poly(k) => (z * z + 1.0).powi(k as i32),
            GHat::ExpZ => z.exp(),
            GHat::ExpZ2 => (z * z).exp(),
        }
    }

    fn name(&self) -> String {
        match self {
            GHat::Poly(k) => format!("(1+z^2)^{k}"),
            GHat::ExpZ => "exp(z)".into(),
            GHat::ExpZ2 => "exp(z^2)".into(),
        }
    }
}

fn kernel(lambda: f64, z: Complex64) -> Complex64 {
    (1.0 + z * lambda) / ((lambda - z) * (1.0 + lambda * lambda))
}

/// `ghat(z) int (1/(lambda - z) - lambda/(1 + lambda^2)) d rho(lambda)/ghat(lambda)`
/// over the grid and atoms, with a fitted power-law tail past the grid for polynomial `ghat`.
pub fn integral_representation(measure: &SpectralMeasure, ghat: GHat, z: Complex64) -> Result<Complex64> {
    let tail = if has_tail(measure) { fit_density_tail(measure) } else { None };
    if let (Some(t), GHat::Poly(k)) = (tail, ghat) {
        if t.exponent - 2.0 * k as f64 - 2.0 >= -1.0 {
            return Err(Error::Precondition(format!(
                "int (1+lambda^2)^-1 d rho / ghat diverges for ghat = {} (tail exponent {:.3})",
                ghat.name(),
                t.exponent
            )));
        }
    }
    if measure.grid.iter().any(|&l| Complex64::new(l, 0.0) == z) {
        return Err(Error::Pole(format!("z = {z} on the measure grid")));
    }
    let w = grid_weights(&measure.grid);
    let mut s = Complex64::new(0.0, 0.0);
    for ((&l, &d), &wi) in measure.grid.iter().zip(&measure.density).zip(&w) {
        let g = ghat.eval(Complex64::new(l, 0.0)).re;
        if g.is_finite() && g != 0.0 {
            s += kernel(l, z) * (wi * d / g);
        }
    }
    for &(l, mass) in &measure.atoms {
        s += kernel(l, z) * (mass / ghat.eval(Complex64::new(l, 0.0)).re);
    }
    if let (Some(t), GHat::Poly(k)) = (tail, ghat) {
        let hi = t.to;
        let tail_density = |l: f64| t.coefficient * l.powf(t.exponent) / (1.0 + l * l).powi(k as i32);
        let tl: Complex64 = quad::adaptive(
            |t: f64| {
                if t >= 1.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let s = 1.0 - t;
                let l = hi / (s * s);
                kernel(l, z) * (tail_density(l) * 2.0 * hi / (s * s * s))
            },
            0.0,
            1.0,
            1e-10,
            1e-15,
        )?;
        s += tl;
    }
    Ok(ghat.eval(z) * s)
}

/// Gauge `g(z) = z/2` with `Mtilde(z) = int e^{-lambda} d rho/(lambda - z)`.
#[derive(Clone)]
pub struct Herglotzified {
    pub total_mass: f64,
    pub min_im_on_grid: f64,
    mtilde: Arc<dyn Fn(Complex64) -> Result<Complex64> + Send + Sync>,
    m: Option<Arc<MFn>>,
}

impl Herglotzified {
    pub fn g(&self, z: Complex64) -> Complex64 {
        0.5 * z
    }

    pub fn mtilde(&self, z: Complex64) -> Result<Complex64> {
        (self.mtilde)(z)
    }

    /// Entire `f` with `Mtilde = e^{-2g} M + e^{-g} f`.
    pub fn f(&self, z: Complex64) -> Result<Complex64> {
        let m = self
            .m
            .as_ref()
            .ok_or_else(|| Error::Precondition("no Weyl function supplied".into()))?;
        let g = self.g(z);
        Ok(g.exp() * (self.mtilde(z)? - (-2.0 * g).exp() * m(z)?))
    }
}

impl std::fmt::Debug for Herglotzified {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Herglotzified")
            .field("total_mass", &self.total_mass)
            .field("min_im_on_grid", &self.min_im_on_grid)
            .finish()
    }
}

/// Rescale `rho` by `e^{-lambda}` to a finite measure and return its Stieltjes
/// transform, checked to be Herglotz on a 100-point upper half-plane grid.
pub fn herglotzify(measure: &SpectralMeasure, m: Option<Arc<MFn>>) -> Result<Herglotzified> {
    let lo = measure.grid[0].min(measure.atoms.first().map_or(f64::INFINITY, |a| a.0));
    let weighted: Vec<f64> = measure
        .grid
        .iter()
        .zip(&measure.density)
        .map(|(l, d)| d * (-l).exp())
        .collect();
    let n = weighted.len();
    let peak = weighted.iter().cloned().fold(0.0f64, f64::max);
    if n >= 8 && measure.grid[n - 1] > 0.0 && weighted[n - 1] > 1e-3 * peak.max(1e-300) {
        return Err(Error::Rejected(
            "e^{-lambda} d rho is not finite on the grid; try g(lambda) = lambda^2".into(),
        ));
    }
    let w = grid_weights(&measure.grid);
    let nodes: Vec<(f64, f64)> = measure
        .grid
        .iter()
        .zip(weighted.iter().zip(&w))
        .map(|(&l, (&d, &wi))| (l, d * wi))
        .chain(measure.atoms.iter().map(|&(l, mass)| (l, mass * (-l).exp())))
        .filter(|n| n.1 != 0.0)
        .collect();
    let total_mass: f64 = nodes.iter().map(|n| n.1).sum();
    let nodes = Arc::new(nodes);
    let nd = nodes.clone();
    let mtilde = Arc::new(move |z: Complex64| -> Result<Complex64> {
        if z.im == 0.0 && z.re >= lo {
            return Err(Error::Invalid(format!("z = {z} on the support")));
        }
        Ok(nd.iter().map(|&(l, wi)| wi / (l - z)).sum())
    });
    let mut min_im = f64::INFINITY;
    for i in 0..10 {
        for j in 0..10 {
            let z = Complex64::new(-20.0 + 40.0 * i as f64 / 9.0, 10f64.powf(-2.0 + 4.0 * j as f64 / 9.0));
            min_im = min_im.min(mtilde(z)?.im);
        }
    }
    if !(min_im > 0.0) {
        return Err(Error::NoConvergence(format!("rescaled transform not Herglotz (min Im {min_im:.3e})")));
    }
    Ok(Herglotzified {
        total_mass,
        min_im_on_grid: min_im,
        mtilde,
        m,
    })
}

fn log_space(y_range: (f64, f64), n: usize) -> Vec<f64> {
    let (a, b) = (y_range.0.ln(), y_range.1.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn fit_exponent(ys: &[f64], vals: &[f64]) -> f64 {
    let k = ys.len() / 2;
    let pts: Vec<(f64, f64)> = ys[k..]
        .iter()
        .zip(&vals[k..])
        .map(|(y, v)| (y.ln(), v.abs().max(1e-300).ln()))
        .collect();
    weighted_line(&pts).0
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthKappa {
    pub kappa: Option<usize>,
    pub exponent: f64,
    /// Limits of `-M(iy)/(iy)^{2 kappa - 1}` and `M(iy)/(iy)^{2 kappa + 1}`; `None` is infinite.
    pub lower_limit: Option<f64>,
    pub upper_limit: Option<f64>,
}

/// Classify the limit of `r(y)` as `y -> infinity` given its growth exponent `s`.
fn limit_of(s: f64, last: Complex64) -> (Option<f64>, bool) {
    if s > TAIL_MARGIN {
        (None, false)
    } else if s < -TAIL_MARGIN {
        (Some(0.0), true)
    } else {
        let real = last.im.abs() <= 0.05 * last.norm();
        (Some(last.re), real)
    }
}

/// `kappa` from the growth of `M(iy)` along the imaginary axis.
pub fn kappa_from_growth(m: &MFn, y_range: (f64, f64), kappa_max: usize) -> Result<GrowthKappa> {
    if !(y_range.0 > 0.0 && y_range.1 > y_range.0 * 10.0) {
        return Err(Error::Invalid("y range must be positive and span a decade".into()));
    }
    let ys = log_space(y_range, 24);
    let vals: Result<Vec<Complex64>> = ys.iter().map(|&y| m(Complex64::new(0.0, y))).collect();
    let vals = vals?;
    let abs: Vec<f64> = vals.iter().map(|v| v.norm()).collect();
    let s = fit_exponent(&ys, &abs);
    let y = *ys.last().unwrap();
    let iy = Complex64::new(0.0, y);
    let top = *vals.last().unwrap();
    for kappa in 0..=kappa_max {
        let e1 = 2.0 * kappa as f64 - 1.0;
        let e2 = 2.0 * kappa as f64 + 1.0;
        let (l1, ok1) = limit_of(s - e1, -top / iy.powf(e1));
        let (l2, ok2) = limit_of(s - e2, top / iy.powf(e2));
        let lower_ok = match l1 {
            None => true,
            Some(v) => ok1 && v > 0.0,
        };
        let upper_ok = l2.is_some() && ok2 && l2.unwrap() >= -1e-12;
        if lower_ok && upper_ok {
            return Ok(GrowthKappa {
                kappa: Some(kappa),
                exponent: s,
                lower_limit: l1,
                upper_limit: l2,
            });
        }
    }
    Ok(GrowthKappa {
        kappa: None,
        exponent: s,
        lower_limit: None,
        upper_limit: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentGrowthReport {
    pub k: usize,
    pub gamma: f64,
    pub density_exponent: f64,
    pub growth_exponent: f64,
    pub measure_side_finite: bool,
    pub growth_side_finite: bool,
    pub equivalent: bool,
}

/// Compare finiteness of `int d rho/(1 + |lambda|^{2k+gamma})` and
/// `int_1^inf (-1)^k Im M(iy)/y^{2k+gamma} dy` by tail exponents.
pub fn moment_growth_check(measure: &SpectralMeasure, m: &MFn, k: usize, gamma: f64) -> Result<MomentGrowthReport> {
    if !(0.0..2.0).contains(&gamma) {
        return Err(Error::Invalid(format!("gamma = {gamma} not in [0, 2)")));
    }
    let p = if has_tail(measure) {
        fit_density_tail(measure)
            .ok_or_else(|| Error::Precondition("measure grid too short to fit a tail".into()))?
            .exponent
    } else {
        f64::NEG_INFINITY
    };
    let ys = log_space((10.0, 1e6), 24);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let vals: Result<Vec<f64>> = ys.iter().map(|&y| Ok(sign * m(Complex64::new(0.0, y))?.im)).collect();
    let s = fit_exponent(&ys, &vals?);
    let kk = 2.0 * k as f64;
    let (measure_side, growth_side) = if gamma == 0.0 {
        (p - kk < -1.0, s - (kk - 1.0) <= TAIL_MARGIN)
    } else {
        (p - kk - gamma < -1.0, s - kk - gamma < -1.0)
    };
    Ok(MomentGrowthReport {
        k,
        gamma,
        density_exponent: p,
        growth_exponent: s,
        measure_side_finite: measure_side,
        growth_side_finite: growth_side,
        equivalent: measure_side == growth_side,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NevanlinnaReport {
    pub kappa: usize,
    pub k: Option<usize>,
    /// Fitted `a_0..a_d` with `d <= 2k + 1`.
    pub poly_coeffs: Vec<f64>,
    pub poly_fit: bool,
    pub kappa_from_representation: Option<usize>,
    pub moments_ok: Vec<bool>,
    pub growth_exponents: Vec<f64>,
    pub growth_kappa: Option<usize>,
    pub note: String,
}

/// Real polynomial part of the representation, fitted from `M - integral` on a circle.
pub fn fit_polynomial(measure: &SpectralMeasure, m: &MFn, k: usize) -> Result<Vec<f64>> {
    let deg = 2 * k + 1;
    let n = 4 * (deg + 1);
    let mut rows = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for j in 0..n {
        let z = Complex64::from_polar(2.0, std::f64::consts::PI * (j as f64 + 0.5) / n as f64);
        let e = m(z)? - integral_representation(measure, GHat::Poly(k), z)?;
        let powers: Vec<Complex64> = (0..=deg).map(|p| z.powi(p as i32)).collect();
        rows.push(powers.iter().map(|c| c.re).collect::<Vec<f64>>());
        rhs.push(e.re);
        rows.push(powers.iter().map(|c| c.im).collect::<Vec<f64>>());
        rhs.push(e.im);
    }
    let a = DMatrix::from_fn(rows.len(), deg + 1, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_vec(rhs);
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::NoConvergence(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}

/// Collect kernel, representation, growth and moment diagnostics for one Weyl function.
pub fn nevanlinna_report(m: &MFn, measure: &SpectralMeasure, seed: u64) -> Result<NevanlinnaReport> {
    let pts = default_points(30, seed);
    let kernel = kernel_negative_squares(m, &pts, 20, seed)?;
    let mk = minimal_k(measure, 6)?;
    let (poly, from_rep) = match mk.k {
        Some(k) => {
            let c = fit_polynomial(measure, m, k)?;
            let scale = c.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            let deg = c.iter().rposition(|v| v.abs() > 1e-6 * scale).unwrap_or(0);
            (c.clone(), Some(kappa_from_representation(k, deg, c[deg])))
        }
        None => (Vec::new(), None),
    };
    let growth = kappa_from_growth(m, (10.0, 1e6), 6)?;
    let mut moments_ok = Vec::new();
    for k in 0..=2 {
        moments_ok.push(moment_growth_check(measure, m, k, 1.0)?.equivalent);
    }
    Ok(NevanlinnaReport {
        kappa: kernel.kappa,
        k: mk.k,
        poly_coeffs: poly,
        poly_fit: true,
        kappa_from_representation: from_rep,
        moments_ok,
        growth_exponents: vec![growth.exponent],
        growth_kappa: growth.kappa,
        note: "kappa is a sampled estimate; polynomial coefficients are a least-squares fit".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BesselModel, SolitonModel};

    fn bessel(l: f64) -> Arc<MFn> {
        let b = BesselModel::new(l).unwrap();
        Arc::new(move |z| Ok(b.m(z)))
    }

    fn rho(l: f64, hi: f64, n: usize) -> SpectralMeasure {
        let b = BesselModel::new(l).unwrap();
        let grid: Vec<f64> = (0..n).map(|i| hi * (i as f64 / (n - 1) as f64).powi(2)).collect();
        SpectralMeasure::from_density(grid, |x| b.rho_density(x)).unwrap()
    }

    #[test]
    fn kernel_counts() {
        let pts = default_points(30, 7);
        for (l, want) in [(0.0, 0), (1.0, 1), (2.0, 1), (3.0, 2), (4.0, 2)] {
            let m = bessel(l);
            let k = kernel_negative_squares(m.as_ref(), &pts, 20, 11).unwrap();
            assert_eq!(k.kappa, want, "l = {l}: {:?}", k.per_trial);
            assert!(k.per_trial.iter().all(|&c| c == want));
            assert_eq!(bessel_kappa(l).unwrap(), want);
        }
    }

    #[test]
    fn kernel_rejects_real_points() {
        let m = bessel(0.0);
        assert!(kernel_negative_squares(m.as_ref(), &[Complex64::new(1.0, 0.0)], 1, 0).is_err());
    }

    #[test]
    fn minimal_k_for_bessel() {
        assert_eq!(minimal_k(&rho(0.0, 1e4, 400), 4).unwrap().k, Some(0));
        assert_eq!(minimal_k(&rho(1.0, 1e4, 400), 4).unwrap().k, Some(1));
        assert_eq!(minimal_k(&rho(2.0, 1e4, 400), 4).unwrap().k, Some(1));
        assert_eq!(minimal_k(&rho(3.0, 1e4, 400), 4).unwrap().k, Some(2));
        let finite = SpectralMeasure::new(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 0.0], vec![]).unwrap();
        assert_eq!(minimal_k(&finite, 4).unwrap().k, Some(0));
        // p = 1 sits on the boundary for k = 0
        let g: Vec<f64> = (1..200).map(|i| i as f64 * 10.0).collect();
        let edge = SpectralMeasure::from_density(g, |x| x).unwrap();
        assert_eq!(minimal_k(&edge, 4).unwrap().k, None);
    }

    #[test]
    fn k_bounds() {
        assert_eq!(bessel_k_bound(0.0).unwrap(), 1);
        assert_eq!(bessel_k_bound(1.0).unwrap(), 1);
        assert_eq!(bessel_k_bound(2.0).unwrap(), 2);
        assert!(bessel_k_bound(-1.0).is_err());
        assert_eq!(kappa_from_representation(1, 2, -1.0), 1);
        assert_eq!(kappa_from_representation(0, 3, 1.0), 1);
        assert_eq!(kappa_from_representation(0, 3, -1.0), 2);
    }

    #[test]
    fn representation_is_real_on_axis() {
        let m = bessel(1.0);
        let meas = rho(1.0, 1e4, 4000);
        for lam in [-3.0, -1.0, -0.2] {
            let z = Complex64::new(lam, 1e-9);
            let e = m(z).unwrap() - integral_representation(&meas, GHat::Poly(1), z).unwrap();
            assert!(e.im.abs() < 1e-6, "{lam}: {e}");
        }
        let z = Complex64::new(0.0, 1.0);
        assert!(integral_representation(&meas, GHat::Poly(1), z).unwrap().norm() < 1e-12);
        assert!(integral_representation(&meas, GHat::Poly(0), z).is_err());
        let m0 = bessel(0.0);
        let meas0 = rho(0.0, 1e4, 4000);
        let a = m0(Complex64::new(-1.0, 0.0)).unwrap() - integral_representation(&meas0, GHat::Poly(0), Complex64::new(-1.0, 0.0)).unwrap();
        let b = m0(Complex64::new(-4.0, 0.0)).unwrap() - integral_representation(&meas0, GHat::Poly(0), Complex64::new(-4.0, 0.0)).unwrap();
        assert!((a - b).norm() < 1e-5, "{a} {b}");
    }

    #[test]
    fn exp_ghat_integrable() {
        let meas = rho(0.0, 60.0, 2000);
        let v = integral_representation(&meas, GHat::ExpZ, Complex64::new(-1.0, 0.0)).unwrap();
        assert!(v.re.is_finite());
    }

    #[test]
    fn herglotz_rescaling() {
        let b = BesselModel::new(0.0).unwrap();
        let meas = rho(0.0, 60.0, 3000);
        let h = herglotzify(&meas, Some(bessel(0.0))).unwrap();
        let v = h.mtilde(Complex64::new(-1.0, 0.0)).unwrap();
        assert!((v.re - 0.136606).abs() < 1e-5, "{v}");
        assert!((h.total_mass - 0.282095).abs() < 1e-5);
        assert!(h.min_im_on_grid > 0.0);
        let z = Complex64::new(2.0, 0.7);
        assert!((h.mtilde(z).unwrap() - b.herglotz_m(z).unwrap()).norm() < 1e-5);
        let z = Complex64::new(3.0, 1.0);
        let f_exact = (0.5 * z).exp() * (b.herglotz_m(z).unwrap() - (-z).exp() * b.m(z));
        assert!((h.f(z).unwrap() - f_exact).norm() < 1e-4 * f_exact.norm().max(1.0));
        let grow = SpectralMeasure::from_density((0..50).map(|i| i as f64).collect(), |x| (2.0 * x).exp()).unwrap();
        assert!(herglotzify(&grow, None).is_err());
    }

    #[test]
    fn growth_kappa() {
        assert_eq!(kappa_from_growth(bessel(0.0).as_ref(), (10.0, 1e6), 4).unwrap().kappa, Some(0));
        assert_eq!(kappa_from_growth(bessel(1.0).as_ref(), (10.0, 1e6), 4).unwrap().kappa, Some(1));
        let s = SolitonModel::real(1.0, 0.0).unwrap();
        let g = kappa_from_growth(&move |z| s.m(z), (10.0, 1e6), 4).unwrap();
        assert_eq!(g.kappa, Some(1));
        assert!((g.exponent - 1.5).abs() < 0.05);
    }

    #[test]
    fn moment_growth() {
        let r0 = rho(0.0, 1e4, 400);
        let m0 = bessel(0.0);
        let a = moment_growth_check(&r0, m0.as_ref(), 0, 1.0).unwrap();
        assert!(!a.measure_side_finite && !a.growth_side_finite && a.equivalent);
        let b = moment_growth_check(&r0, m0.as_ref(), 0, 0.0).unwrap();
        assert!(!b.measure_side_finite && !b.growth_side_finite);
        let r1 = rho(1.0, 1e4, 400);
        let c = moment_growth_check(&r1, bessel(1.0).as_ref(), 1, 1.4).unwrap();
        assert!(c.measure_side_finite && c.growth_side_finite);
    }
}
