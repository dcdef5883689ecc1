//! Dirichlet/Neumann eigenvalues on `(a, c)`, counting functions, the
//! discreteness hypothesis report, the Krein product and Hadamard products
//! for `phi`.

use crate::error::{Error, Result};
use crate::roots::brent;
use crate::schrodinger::{pruefer_angle, regular_solution_phi, BoundaryCondition, Potential};
use crate::specfun::{hadamard_eval, ProductOptions, ZeroSequence};
use crate::weyl::SolutionSystem;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenData {
    pub c: f64,
    pub mu: ZeroSequence,
    pub nu: ZeroSequence,
    pub delta: Option<f64>,
}

impl EigenData {
    pub fn compute(pot: &Potential, c: f64, count: usize) -> Result<Self> {
        let mu = dirichlet_eigs(pot, c, count)?;
        let nu = neumann_eigs(pot, c, count)?;
        let delta = mu.weyl_fit().map(|(slope, _)| PI / slope);
        Ok(EigenData { c, mu, nu, delta })
    }
}

fn target(bc: BoundaryCondition, idx: usize) -> f64 {
    match bc {
        BoundaryCondition::Dirichlet => (idx + 1) as f64 * PI,
        BoundaryCondition::Neumann => (idx as f64 + 0.5) * PI,
    }
}

fn weyl_guess(pot: &Potential, c: f64, bc: BoundaryCondition, idx: usize) -> f64 {
    let l = pot.strength();
    let shift = match bc {
        BoundaryCondition::Dirichlet => (idx + 1) as f64 + 0.5 * l,
        BoundaryCondition::Neumann => idx as f64 + 0.5 * (l + 1.0),
    };
    let w = PI * shift / (c - pot.a);
    w * w
}

fn eigs(pot: &Potential, c: f64, count: usize, bc: BoundaryCondition) -> Result<ZeroSequence> {
    if !(c > pot.a && c <= pot.b) {
        return Err(Error::Invalid(format!("c = {c} outside ({}, {}]", pot.a, pot.b)));
    }
    if count == 0 {
        return ZeroSequence::new(Vec::new());
    }
    let angle = |z: f64| pruefer_angle(pot, z, c, ANGLE_TOL);
    let mut lower = -1.0;
    let first = target(bc, 0);
    let mut tries = 0;
    while angle(lower)? >= first {
        lower = 4.0 * lower - 1.0;
        tries += 1;
        if tries > 40 {
            return Err(Error::Bracket {
                index: 0,
                msg: "operator does not look bounded below".into(),
            });
        }
    }
    let roots: Result<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|idx| {
            let t = target(bc, idx);
            let f = |z: f64| angle(z).map(|v| v - t);
            let guess = weyl_guess(pot, c, bc, idx);
            let mut hi = 1.25 * guess + 10.0;
            let mut n = 0;
            while f(hi)? <= 0.0 {
                hi = 2.0 * hi + 10.0;
                n += 1;
                if n > 60 {
                    return Err(Error::Bracket {
                        index: idx,
                        msg: "no upper bracket".into(),
                    });
                }
            }
            let lo_try = 0.75 * guess - 10.0;
            let lo = if lo_try > lower && lo_try < hi && f(lo_try)? < 0.0 {
                lo_try
            } else {
                lower
            };
            let xtol = 1e-11 * lo.abs().max(hi.abs()).max(1.0);
            brent(f, lo, hi, xtol).map_err(|e| Error::Bracket {
                index: idx,
                msg: e.to_string(),
            })
        })
        .collect();
    let roots = roots?;
    ZeroSequence::new(roots).map_err(|e| Error::Bracket {
        index: 0,
        msg: format!("eigenvalues not strictly increasing: {e}"),
    })
}

/// First `count` Dirichlet eigenvalues `mu_1 < mu_2 < ...` on `(a, c)`.
pub fn dirichlet_eigs(pot: &Potential, c: f64, count: usize) -> Result<ZeroSequence> {
    eigs(pot, c, count, BoundaryCondition::Dirichlet)
}

/// First `count` Neumann eigenvalues `nu_0 < nu_1 < ...` on `(a, c)`.
pub fn neumann_eigs(pot: &Potential, c: f64, count: usize) -> Result<ZeroSequence> {
    eigs(pot, c, count, BoundaryCondition::Neumann)
}

/// `#{lambda <= r}`; `r` must not exceed the largest stored eigenvalue.
pub fn counting_function(eigs: &ZeroSequence, r: f64) -> Result<usize> {
    match eigs.zeros.last() {
        Some(&last) if r <= last => Ok(eigs.zeros.partition_point(|&v| v <= r)),
        _ => Err(Error::Precondition(format!(
            "R = {r} beyond the computed eigenvalues; compute more"
        ))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub r: f64,
    pub interlacing: bool,
    pub interlacing_failure: Option<usize>,
    /// Smallest `j` from which both gap inequalities hold.
    pub j0: Option<usize>,
    pub gap_failures: Vec<usize>,
    pub delta: Option<f64>,
}

/// Interlacing, gap inequalities with exponent `r`, and the fitted Weyl slope.
pub fn verify_hypothesis_ev(data: &EigenData, r: f64) -> Result<HypothesisReport> {
    let mu = &data.mu.zeros;
    let nu = &data.nu.zeros;
    let n = mu.len().min(nu.len());
    if n < 10 {
        return Err(Error::Precondition("need at least 10 eigenvalue pairs".into()));
    }
    let p = |v: f64| v.abs().powf(-r);
    let mut interlacing_failure = None;
    let mut gap_failures = Vec::new();
    for j in 1..=n {
        let m = mu[j - 1];
        let below = nu[j - 1];
        let above = nu.get(j).copied();
        let ordered = below < m && above.is_none_or(|a| m < a);
        if !ordered && interlacing_failure.is_none() {
            interlacing_failure = Some(j);
        }
        let g1 = m - below >= p(below) + p(m);
        let g2 = above.is_none_or(|a| a - m >= p(a) + p(m));
        if !(g1 && g2) {
            gap_failures.push(j);
        }
    }
    let j0 = match gap_failures.last() {
        None => Some(1),
        Some(&j) if j < n => Some(j + 1),
        _ => None,
    };
    Ok(HypothesisReport {
        r,
        interlacing: interlacing_failure.is_none(),
        interlacing_failure,
        j0,
        gap_failures,
        delta: data.mu.weyl_fit().map(|(s, _)| PI / s),
    })
}

fn flag_origin(seq: &ZeroSequence) -> Result<ZeroSequence> {
    let scale = seq.zeros.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if let Some(i) = seq.zeros.iter().position(|v| v.abs() < 1e-9 * scale) {
        let mut z = seq.zeros.clone();
        z[i] = 0.0;
        return ZeroSequence::with_zero_flag(z);
    }
    Ok(seq.clone())
}

fn ratio_product(data: &EigenData, z: Complex64) -> Result<Complex64> {
    let opts = ProductOptions::default();
    let num = hadamard_eval(&flag_origin(&data.nu)?, z, 1.0, opts)?;
    let den = hadamard_eval(&flag_origin(&data.mu)?, z, 1.0, opts)?;
    if den.norm() == 0.0 {
        return Err(Error::Pole(format!("z = {z} is a Dirichlet eigenvalue")));
    }
    Ok(num / den)
}

/// `m_-(z) = -C' prod (1 - z/nu_{j-1}) / (1 - z/mu_j)` with calibrated `C'`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KreinProduct {
    pub c_prime: f64,
    pub z0: f64,
}

impl KreinProduct {
    /// Matches the product to `m_- = -phi'/phi` from the ODE at real `z0`.
    pub fn calibrate(data: &EigenData, pot: &Potential, z0: f64) -> Result<Self> {
        let z = Complex64::new(z0, 0.0);
        let s = regular_solution_phi(pot, z, data.c, 1e-12)?;
        let m = -s.du / s.u;
        let p = ratio_product(data, z)?;
        Ok(KreinProduct {
            c_prime: (-m / p).re,
            z0,
        })
    }

    pub fn m_minus(&self, data: &EigenData, z: Complex64) -> Result<Complex64> {
        Ok(-self.c_prime * ratio_product(data, z)?)
    }
}

pub fn krein_m_minus(data: &EigenData, krein: &KreinProduct, z: Complex64) -> Result<Complex64> {
    krein.m_minus(data, z)
}

/// `phi(z,x) = phi(0,x) prod (1 - z/mu_j(x))`, `phi'(z,x) = phi'(0,x) prod (1 - z/nu_j(x))`.
pub fn phi_from_products(data: &EigenData, pot: &Potential, z: Complex64, x: f64) -> Result<(Complex64, Complex64)> {
    if (x - data.c).abs() > 1e-12 * x.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "eigenvalues were computed at c = {}, not at x = {x}",
            data.c
        )));
    }
    let opts = ProductOptions::default();
    let zero = Complex64::new(0.0, 0.0);
    let s0 = regular_solution_phi(pot, zero, x, 1e-12)?;
    let mu = flag_origin(&data.mu)?;
    let nu = flag_origin(&data.nu)?;
    // a vanishing value at z = 0 is replaced by its z-derivative
    let dz = |which: usize| -> Result<f64> {
        let h = 1e-4;
        let a = regular_solution_phi(pot, Complex64::new(h, 0.0), x, 1e-12)?;
        let b = regular_solution_phi(pot, Complex64::new(-h, 0.0), x, 1e-12)?;
        Ok(if which == 0 { (a.u - b.u).re } else { (a.du - b.du).re } / (2.0 * h))
    };
    let sp = if mu.zero_flag { dz(0)? } else { s0.u.re };
    let sd = if nu.zero_flag { dz(1)? } else { s0.du.re };
    Ok((hadamard_eval(&mu, z, sp, opts)?, hadamard_eval(&nu, z, sd, opts)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct CoronaReport {
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub min_raw: f64,
    /// `min (|z^{(l+1)/2} alpha| + |z^{l/2} beta|) e^{-|Im sqrt z|}` over points with `|Im sqrt z| >= 1`.
    pub min_normalized: f64,
    pub normalized_ok: bool,
    /// Minimum of the normalized sum over real `z >= 0` in the grid.
    pub real_axis_min: Option<f64>,
}

/// Fits `|alpha| + |beta| >= B exp(-A |z|^s)` over `zgrid`, where
/// `alpha = phi(z,c)`, `beta = phi'(z,c)`.
pub fn corona_bound_check(sys: &SolutionSystem, c: f64, l: f64, zgrid: &[Complex64], s: f64) -> Result<CoronaReport> {
    if !(s > 0.5) {
        return Err(Error::Precondition(format!("need s > 1/2, got {s}")));
    }
    if zgrid.is_empty() {
        return Err(Error::Invalid("empty z grid".into()));
    }
    let vals: Result<Vec<(Complex64, f64, f64)>> = zgrid
        .par_iter()
        .map(|&z| {
            let p = sys.phi_at(z, c)?;
            let raw = p.u.norm() + p.du.norm();
            let norm = (z.powf(0.5 * (l + 1.0)) * p.u).norm() + (z.powf(0.5 * l) * p.du).norm();
            Ok((z, raw, norm))
        })
        .collect();
    let vals = vals?;
    let nearest = vals
        .iter()
        .min_by(|x, y| x.0.norm().partial_cmp(&y.0.norm()).unwrap())
        .unwrap();
    let small: Vec<f64> = vals.iter().filter(|v| v.0.norm() <= 1.0).map(|v| v.1).collect();
    let b = if small.is_empty() {
        nearest.1.min(1.0)
    } else {
        small.iter().cloned().fold(f64::INFINITY, f64::min).min(1.0)
    };
    let mut a: f64 = 0.0;
    for v in &vals {
        let r = v.0.norm();
        if r > 0.0 && v.1 < b {
            a = a.max((b / v.1).ln() / r.powf(s));
        }
    }
    let mut min_normalized = f64::INFINITY;
    for v in &vals {
        let im = v.0.sqrt().im.abs();
        if im >= 1.0 {
            min_normalized = min_normalized.min(v.2 * (-im).exp());
        }
    }
    let real: Vec<f64> = vals.iter().filter(|v| v.0.im == 0.0 && v.0.re >= 0.0).map(|v| v.2).collect();
    Ok(CoronaReport {
        s,
        a,
        b,
        min_raw: vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min),
        min_normalized,
        normalized_ok: !min_normalized.is_finite() || min_normalized >= 0.49,
        real_axis_min: (!real.is_empty()).then(|| real.iter().cloned().fold(f64::INFINITY, f64::min)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::BesselModel;

    #[test]
    fn bessel_l0_spectra() {
        let p = Potential::bessel(0.0).unwrap();
        let mu = dirichlet_eigs(&p, 1.0, 3).unwrap();
        for (j, v) in mu.zeros.iter().enumerate() {
            let oracle = ((j + 1) as f64 * PI).powi(2);
            assert!((v - oracle).abs() < 1e-9 * oracle, "{v} vs {oracle}");
        }
        let nu = neumann_eigs(&p, 1.0, 2).unwrap();
        assert!((nu.zeros[0] - (PI / 2.0).powi(2)).abs() < 1e-9);
        assert!((nu.zeros[1] - (1.5 * PI).powi(2)).abs() < 1e-8);
    }

    #[test]
    fn bessel_l1_dirichlet() {
        let p = Potential::bessel(1.0).unwrap();
        let mu = dirichlet_eigs(&p, 1.0, 2).unwrap();
        assert!((mu.zeros[0] - 20.19072855642663).abs() < 1e-8);
        assert!((mu.zeros[1] - 59.67951594410942).abs() < 1e-8);
    }

    #[test]
    fn counting() {
        let zs = ZeroSequence::new((1..=12).map(|j| (j as f64 * PI).powi(2)).collect()).unwrap();
        assert_eq!(counting_function(&zs, 1000.0).unwrap(), 10);
        assert_eq!(counting_function(&zs, -5.0).unwrap(), 0);
        assert!(counting_function(&zs, 1e5).is_err());
    }

    #[test]
    fn hypothesis_report_bessel() {
        let p = Potential::bessel(0.0).unwrap();
        let data = EigenData::compute(&p, 1.0, 12).unwrap();
        let rep = verify_hypothesis_ev(&data, 1.0).unwrap();
        assert!(rep.interlacing);
        assert_eq!(rep.j0, Some(1));
        let mut merged = data.clone();
        merged.nu.zeros[4] = merged.mu.zeros[4];
        let rep = verify_hypothesis_ev(&merged, 1.0).unwrap();
        assert!(rep.gap_failures.contains(&5));
        let p1 = Potential::bessel(1.0).unwrap();
        let d1 = EigenData::compute(&p1, 1.0, 16).unwrap();
        let delta = verify_hypothesis_ev(&d1, 1.0).unwrap().delta.unwrap();
        assert!((delta - 1.0).abs() < 0.02, "{delta}");
    }

    #[test]
    fn krein_product_l0() {
        let p = Potential::bessel(0.0).unwrap();
        let data = EigenData::compute(&p, 1.0, 60).unwrap();
        let k = KreinProduct::calibrate(&data, &p, -2.0).unwrap();
        assert!((k.c_prime - 1.0).abs() < 1e-3, "{}", k.c_prime);
        let v = k.m_minus(&data, Complex64::new(-1.0, 0.0)).unwrap();
        assert!((v.re + 1.0 / 1f64.tanh()).abs() < 1e-4, "{v}");
        let v0 = k.m_minus(&data, Complex64::new(0.0, 0.0)).unwrap();
        assert!((v0.re + k.c_prime).abs() < 1e-14);
        assert!(k.m_minus(&data, Complex64::new(data.mu.zeros[0], 0.0)).is_err());
    }

    #[test]
    fn products_reproduce_phi() {
        let p = Potential::bessel(0.0).unwrap();
        let data = EigenData::compute(&p, 1.0, 120).unwrap();
        let (f, df) = phi_from_products(&data, &p, Complex64::new(-1.0, 0.0), 1.0).unwrap();
        assert!((f.re - 1f64.sinh()).abs() < 1e-3);
        assert!((df.re - 1f64.cosh()).abs() < 1e-3);
        let (f0, _) = phi_from_products(&data, &p, Complex64::new(0.0, 0.0), 1.0).unwrap();
        assert!((f0.re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn corona_l0() {
        let sys = SolutionSystem::bessel(BesselModel::new(0.0).unwrap());
        let mut grid = Vec::new();
        for i in 0..20 {
            for k in 0..12 {
                let r = 10f64.powf(-1.0 + 5.0 * i as f64 / 19.0);
                grid.push(Complex64::from_polar(r, PI * k as f64 / 11.0));
            }
        }
        grid.extend((0..=400).map(|i| Complex64::new(25.0 * i as f64, 0.0)));
        let rep = corona_bound_check(&sys, 1.0, 0.0, &grid, 0.75).unwrap();
        assert!(rep.normalized_ok, "{rep:?}");
        assert!(rep.real_axis_min.unwrap() >= 0.7, "{rep:?}");
        assert!(rep.a.is_finite() && rep.b > 0.0);
    }
}
