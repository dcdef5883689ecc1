//! Weyl functions: `m_+` by backward Riccati integration, the singular Weyl
//! function `M`, the Weyl solution `psi` and the Green function.

use crate::error::{Error, Result};
use crate::models::BesselModel;
use crate::ode::{self, OdeOptions};
use crate::schrodinger::{
    regular_solution_phi, second_solution_theta_numeric, Potential, SolutionSample, Tail,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type Evaluator = Arc<dyn Fn(Complex64, f64) -> Result<SolutionSample> + Send + Sync>;
pub type EntireFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Real entire gauge pair: `phi -> e^g phi`, `theta -> e^{-g} theta - f phi`.
#[derive(Clone)]
pub struct Gauge {
    pub g: EntireFn,
    pub f: EntireFn,
}

impl Gauge {
    pub fn new<G, F>(g: G, f: F) -> Self
    where
        G: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Gauge {
            g: Arc::new(g),
            f: Arc::new(f),
        }
    }

    /// `e^{-2g} M + e^{-g} f`.
    pub fn apply(&self, z: Complex64, m: Complex64) -> Complex64 {
        let g = (self.g)(z);
        (-2.0 * g).exp() * m + (-g).exp() * (self.f)(z)
    }
}

/// Fundamental system `(phi, theta)` with `W(theta, phi) = 1`.
#[derive(Clone)]
pub struct SolutionSystem {
    pub phi: Evaluator,
    pub theta: Evaluator,
    pub entire_theta: bool,
    pub gauge: Option<Gauge>,
    pub label: String,
}

impl SolutionSystem {
    pub fn new(label: &str, phi: Evaluator, theta: Evaluator, entire_theta: bool) -> Self {
        SolutionSystem {
            phi,
            theta,
            entire_theta,
            gauge: None,
            label: label.to_string(),
        }
    }

    /// ODE-based system: Frobenius-started `phi`, numeric `theta` anchored at `c`.
    pub fn numeric(pot: &Potential, c: f64, tol: f64) -> Self {
        let p1 = pot.clone();
        let p2 = pot.clone();
        SolutionSystem::new(
            &format!("numeric[{}]", pot.label),
            Arc::new(move |z, x| regular_solution_phi(&p1, z, x, tol)),
            Arc::new(move |z, x| second_solution_theta_numeric(&p2, z, c, x, tol)),
            false,
        )
    }

    /// Closed-form Bessel system.
    pub fn bessel(model: BesselModel) -> Self {
        SolutionSystem::new(
            &format!("bessel:l={}", model.l),
            Arc::new(move |z, x| {
                let (u, du) = model.phi(z, x)?;
                Ok(SolutionSample::new(z, x, u, du))
            }),
            Arc::new(move |z, x| {
                let (u, du) = model.theta(z, x)?;
                Ok(SolutionSample::new(z, x, u, du))
            }),
            true,
        )
    }

    pub fn with_gauge(mut self, gauge: Gauge) -> Self {
        self.gauge = Some(gauge);
        self
    }

    /// Gauged `phi`.
    pub fn phi_at(&self, z: Complex64, x: f64) -> Result<SolutionSample> {
        let mut s = (self.phi)(z, x)?;
        if let Some(g) = &self.gauge {
            let e = (g.g)(z).exp();
            s.u *= e;
            s.du *= e;
        }
        Ok(s)
    }

    /// Gauged `theta`.
    pub fn theta_at(&self, z: Complex64, x: f64) -> Result<SolutionSample> {
        let mut s = (self.theta)(z, x)?;
        if let Some(g) = &self.gauge {
            let p = (self.phi)(z, x)?;
            let e = (-(g.g)(z)).exp();
            let f = (g.f)(z);
            s.u = e * s.u - f * p.u;
            s.du = e * s.du - f * p.du;
        }
        Ok(s)
    }
}

/// `m_+` at `c` together with `(m_+(x), log(u_+(x)/u_+(c)))` at requested `x >= c`.
#[derive(Debug, Clone)]
pub struct PlusData {
    pub m: Complex64,
    pub points: Vec<(f64, Complex64, Complex64)>,
}

fn riccati_opts(tol: f64) -> OdeOptions {
    OdeOptions {
        rtol: tol * 1e-2,
        atol: tol * 1e-5,
        ..Default::default()
    }
}

fn wkb_start(pot: &Potential, z: Complex64, x: f64) -> Complex64 {
    let h = 1e-3 * x.abs().max(1.0);
    let q0 = pot.q(x);
    let qp = (pot.q(x + h) - pot.q(x - h)) / (2.0 * h);
    let qpp = (pot.q(x + h) - 2.0 * q0 + pot.q(x - h)) / (h * h);
    let k = (q0 - z).sqrt();
    let k1 = qp / (2.0 * k);
    let k2 = qpp / (2.0 * k) - qp * qp / (4.0 * k * k * k);
    let a2 = (-k2 / (2.0 * k) + 3.0 * k1 * k1 / (4.0 * k * k)) / (2.0 * k);
    -k - k1 / (2.0 * k) + a2
}

/// Integrates `(m, L)` backward from `x_far` through the sorted (descending) stops.
fn riccati_run(
    pot: &Potential,
    z: Complex64,
    x_far: f64,
    stops: &[f64],
    tol: f64,
) -> Result<Vec<(f64, Complex64, Complex64)>> {
    let opts = riccati_opts(tol);
    let mut y = [wkb_start(pot, z, x_far), Complex64::new(0.0, 0.0)];
    let mut x = x_far;
    let mut out = Vec::with_capacity(stops.len());
    for &s in stops {
        for (s0, s1) in crate::schrodinger::segments(pot, x, s) {
            y = ode::solve(
                |x, y: &[Complex64; 2]| [(pot.q(x) - z) - y[0] * y[0], y[0]],
                s0,
                y,
                s1,
                &opts,
                None,
            )
            .map_err(|e| match e {
                Error::StepUnderflow { x } => {
                    Error::Pole(format!("u_+(z) vanishes near x = {x} for z = {z}"))
                }
                other => other,
            })?;
        }
        x = s;
        out.push((s, y[0], y[1]));
    }
    Ok(out)
}

fn linear_run(pot: &Potential, z: Complex64, stops: &[f64], tol: f64) -> Result<Vec<(f64, Complex64, Complex64)>> {
    let mut y = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let mut x = pot.b;
    let mut out = Vec::new();
    let mut log_scale = Complex64::new(0.0, 0.0);
    for &s in stops {
        y = crate::schrodinger::propagate(pot, z, x, y, s, tol, |_, _, _| {}, None)?;
        let n = y[0].norm().max(y[1].norm());
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Overflow("u_+ lost scale".into()));
        }
        y[0] /= n;
        y[1] /= n;
        log_scale += n.ln();
        if y[0].norm() < 1e-14 * y[1].norm() {
            return Err(Error::Pole(format!("u_+(z, {s}) = 0 for z = {z}")));
        }
        out.push((s, y[1] / y[0], y[0].ln() + log_scale));
        x = s;
    }
    Ok(out)
}

/// `m_+` at `c` and along the points `xs >= c`.
pub fn m_plus_data(pot: &Potential, c: f64, z: Complex64, xs: &[f64], tol: f64) -> Result<PlusData> {
    if !(c > pot.a && c < pot.b) {
        return Err(Error::Invalid(format!("c = {c} outside ({}, {})", pot.a, pot.b)));
    }
    let mut stops: Vec<f64> = xs.iter().copied().filter(|&x| x > c).collect();
    if xs.iter().any(|&x| x < c || x > pot.b) {
        return Err(Error::Invalid("m_+ path points must lie in [c, b]".into()));
    }
    stops.sort_by(|a, b| b.partial_cmp(a).unwrap());
    stops.dedup();
    stops.push(c);
    let rows = match pot.tail {
        Tail::Regular => linear_run(pot, z, &stops, tol)?,
        Tail::LimitPointDecaying => {
            let top = stops[0];
            let k_inf = (-z).sqrt();
            let rek = k_inf.re.max(1e-12);
            if rek < 1e-9 {
                return Err(Error::Precondition(format!(
                    "z = {z} lies on the essential spectrum; m_+ needs Im z != 0 or z below it"
                )));
            }
            let mut span = (8.0 / k_inf.norm().min(1.0)).min(1e4);
            let mut prev: Option<Vec<(f64, Complex64, Complex64)>> = None;
            let mut result = None;
            for _ in 0..12 {
                let rows = riccati_run(pot, z, top + span, &stops, tol)?;
                if let Some(p) = &prev {
                    let mc = rows.last().unwrap().1;
                    let mp = p.last().unwrap().1;
                    if (mc - mp).norm() <= tol * mc.norm().max(1e-3) {
                        result = Some(rows);
                        break;
                    }
                }
                prev = Some(rows);
                span *= 2.0;
            }
            result.ok_or_else(|| Error::NoConvergence(format!("m_+ far-field matching at z = {z}")))?
        }
    };
    let (_, m, lc) = *rows.last().unwrap();
    let points = rows
        .iter()
        .map(|&(x, mx, lx)| (x, mx, lx - lc))
        .collect();
    Ok(PlusData { m, points })
}

/// `m_+(z) = u_+'(z,c)/u_+(z,c)`.
pub fn m_plus(pot: &Potential, c: f64, z: Complex64, tol: f64) -> Result<Complex64> {
    Ok(m_plus_data(pot, c, z, &[], tol)?.m)
}

/// `alpha, beta, gamma, delta` at the base point.
fn anchor_data(sys: &SolutionSystem, z: Complex64, c: f64) -> Result<[Complex64; 4]> {
    let p = sys.phi_at(z, c)?;
    let t = sys.theta_at(z, c)?;
    Ok([p.u, p.du, t.u, t.du])
}

fn assemble_m(d: &[Complex64; 4], mp: Complex64) -> Result<Complex64> {
    let [a, b, g, dd] = *d;
    let den = a * mp - b;
    if den.norm() < 1e-12 * (a.norm() * mp.norm() + b.norm()) {
        return Err(Error::NearPole("denominator of M vanishes; z too close to the real spectrum".into()));
    }
    Ok(-(g * mp - dd) / den)
}

/// Singular Weyl function `M(z) = -(gamma m_+ - delta)/(alpha m_+ - beta)`.
pub fn singular_m(sys: &SolutionSystem, pot: &Potential, c: f64, z: Complex64, tol: f64) -> Result<Complex64> {
    let mp = m_plus(pot, c, z, tol)?;
    // gauge enters through phi_at/theta_at
    assemble_m(&anchor_data(sys, z, c)?, mp)
}

/// Weyl solution `psi = theta + M phi`, square integrable near `b`.
pub fn weyl_solution_psi(
    sys: &SolutionSystem,
    pot: &Potential,
    c: f64,
    z: Complex64,
    x: f64,
    tol: f64,
) -> Result<SolutionSample> {
    Ok(weyl_solution_psi_many(sys, pot, c, z, &[x], tol)?.remove(0))
}

/// `psi` at several points sharing one `m_+` computation.
pub fn weyl_solution_psi_many(
    sys: &SolutionSystem,
    pot: &Potential,
    c: f64,
    z: Complex64,
    xs: &[f64],
    tol: f64,
) -> Result<Vec<SolutionSample>> {
    let right: Vec<f64> = xs.iter().copied().filter(|&x| x > c).collect();
    let data = m_plus_data(pot, c, z, &right, tol)?;
    let d = anchor_data(sys, z, c)?;
    let den = d[1] - data.m * d[0];
    if den.norm() < 1e-12 * (d[0].norm() * data.m.norm() + d[1].norm()) {
        return Err(Error::NearPole("W(u_+, phi) vanishes; z too close to the real spectrum".into()));
    }
    let psi_c = SolutionSample::new(z, c, 1.0 / den, data.m / den);
    xs.iter()
        .map(|&x| {
            if x > c {
                let &(_, mx, lx) = data
                    .points
                    .iter()
                    .find(|p| p.0 == x)
                    .expect("requested point present");
                let u = psi_c.u * lx.exp();
                Ok(SolutionSample::new(z, x, u, mx * u))
            } else if x == c {
                Ok(psi_c)
            } else {
                crate::schrodinger::integrate(pot, z, psi_c, x, tol.max(1e-13))
            }
        })
        .collect()
}

/// `G(z,x,y) = phi(z, min(x,y)) psi(z, max(x,y))`.
pub fn green_function(
    sys: &SolutionSystem,
    pot: &Potential,
    c: f64,
    z: Complex64,
    x: f64,
    y: f64,
    tol: f64,
) -> Result<Complex64> {
    let (lo, hi) = (x.min(y), x.max(y));
    let p = sys.phi_at(z, lo)?;
    let s = weyl_solution_psi(sys, pot, c, z, hi, tol)?;
    Ok(p.u * s.u)
}

/// Sampled map `z -> M(z)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MTrace {
    pub samples: Vec<(Complex64, Complex64)>,
    pub convention: String,
}

pub const BRANCH_CONVENTION: &str = "principal branches, cuts along the negative real axis";

/// Evaluates `M` over a grid of points in parallel; failed points abort.
pub fn m_trace(sys: &SolutionSystem, pot: &Potential, c: f64, zs: &[Complex64], tol: f64) -> Result<MTrace> {
    let samples: Result<Vec<_>> = zs
        .par_iter()
        .map(|&z| singular_m(sys, pot, c, z, tol).map(|m| (z, m)))
        .collect();
    Ok(MTrace {
        samples: samples?,
        convention: BRANCH_CONVENTION.to_string(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticSample {
    pub abs_z: f64,
    /// `|(M + theta/phi) sqrt(-z) phi^2|`.
    pub m_remainder: f64,
    /// `|2 sqrt(-z) phi psi - 1|`.
    pub diagonal_defect: f64,
    /// `|phi(x)/phi(x0) e^{-(x-x0) sqrt(-z)} - 1|`.
    pub growth_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RayReport {
    pub angle: f64,
    pub samples: Vec<AsymptoticSample>,
    pub m_remainder_max: f64,
    pub diagonal_within: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub x: f64,
    pub x0: f64,
    pub rays: Vec<RayReport>,
}

/// High-energy checks along rays `arg z = angle`, `|z|` log-spaced in `radii`.
#[allow(clippy::too_many_arguments)]
pub fn asymptotic_check(
    sys: &SolutionSystem,
    pot: &Potential,
    c: f64,
    rays: &[f64],
    radii: (f64, f64, usize),
    x: f64,
    x0: f64,
    tol: f64,
) -> Result<AsymptoticReport> {
    if rays.iter().all(|&a| (a.sin()).abs() < 1e-12) {
        return Err(Error::Precondition("need at least one nonreal ray".into()));
    }
    let (r0, r1, n) = radii;
    let mut out = Vec::new();
    for &angle in rays {
        let mut samples = Vec::new();
        for i in 0..n {
            let r = if n == 1 { r0 } else { r0 * (r1 / r0).powf(i as f64 / (n - 1) as f64) };
            let z = Complex64::from_polar(r, angle);
            let k = (-z).sqrt();
            let p = sys.phi_at(z, x)?;
            let psi = weyl_solution_psi(sys, pot, c, z, x, tol)?;
            let p0 = sys.phi_at(z, x0)?;
            // (M + theta/phi) phi^2 = psi phi
            samples.push(AsymptoticSample {
                abs_z: r,
                m_remainder: (psi.u * k * p.u).norm(),
                diagonal_defect: (2.0 * k * p.u * psi.u - 1.0).norm(),
                growth_defect: (p.u / p0.u * (-(x - x0) * k).exp() - 1.0).norm(),
            });
        }
        let m_remainder_max = samples.iter().map(|s| s.m_remainder).fold(0.0, f64::max);
        let diagonal_within = samples
            .iter()
            .filter(|s| s.abs_z >= 100.0)
            .all(|s| s.diagonal_defect <= 3.0 / s.abs_z.sqrt());
        out.push(RayReport {
            angle,
            samples,
            m_remainder_max,
            diagonal_within,
        });
    }
    Ok(AsymptoticReport { x, x0, rays: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cz(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free_half_line() -> Potential {
        Potential::from_qtilde("free", |_| 0.0, 0.0, f64::INFINITY, None, Tail::LimitPointDecaying).unwrap()
    }

    #[test]
    fn m_plus_free() {
        let p = free_half_line();
        assert!((m_plus(&p, 1.0, cz(-4.0, 0.0), 1e-11).unwrap() + 2.0).norm() < 1e-9);
        assert!((m_plus(&p, 0.3, cz(-1.0, 0.0), 1e-11).unwrap() + 1.0).norm() < 1e-9);
        let v = m_plus(&p, 1.0, cz(0.0, 1.0), 1e-11).unwrap();
        let oracle = Complex64::i() * cz(0.0, 1.0).sqrt();
        assert!((v - oracle).norm() < 1e-9);
        assert!((v.im - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn m_plus_regular_right_endpoint() {
        // u_+ = sinh(b - x) for z = -1 on (0, b) with u(b) = 0
        let p = Potential::from_qtilde("box", |_| 0.0, 0.0, 2.0, None, Tail::Regular).unwrap();
        let v = m_plus(&p, 1.0, cz(-1.0, 0.0), 1e-11).unwrap();
        assert!((v.re + 1.0 / 1f64.tanh()).abs() < 1e-9);
    }

    #[test]
    fn bessel_m_via_ode_route() {
        for &l in &[0.0, 1.0] {
            let model = BesselModel::new(l).unwrap();
            let sys = SolutionSystem::bessel(model);
            let pot = model.potential().unwrap();
            for &z in &[cz(-4.0, 0.0), cz(-1.0, 0.0), cz(3.0, 0.5), cz(-20.0, 40.0), cz(90.0, -0.1)] {
                let m = singular_m(&sys, &pot, 1.0, z, 1e-12).unwrap();
                let oracle = model.m(z);
                assert!((m - oracle).norm() < 1e-7 * oracle.norm(), "l={l} z={z}: {m} vs {oracle}");
            }
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let pot = Potential::coulomb(1.0, 1.0).unwrap();
        let sys = SolutionSystem::numeric(&pot, 1.0, 1e-11);
        let z = cz(2.0, 1.0);
        let a = singular_m(&sys, &pot, 1.0, z, 1e-11).unwrap();
        let b = singular_m(&sys, &pot, 1.0, z.conj(), 1e-11).unwrap();
        assert!((a - b.conj()).norm() < 1e-8 * a.norm());
    }

    #[test]
    fn psi_and_green_l0() {
        let model = BesselModel::new(0.0).unwrap();
        let sys = SolutionSystem::bessel(model);
        let pot = model.potential().unwrap();
        let z = cz(-1.0, 0.0);
        let psi = weyl_solution_psi(&sys, &pot, 0.5, z, 1.0, 1e-12).unwrap();
        assert!((psi.u.re - (-1f64).exp()).abs() < 1e-9);
        for &x in &[0.2, 0.5, 2.0, 5.0] {
            let s = weyl_solution_psi(&sys, &pot, 0.5, z, x, 1e-12).unwrap();
            assert!((s.u.re - (-x).exp()).abs() < 1e-9 * (1.0 + (-x).exp()), "x={x}");
            let p = sys.phi_at(z, x).unwrap();
            let w = s.u * p.du - s.du * p.u;
            assert!((w - 1.0).norm() < 1e-8);
        }
        let g = green_function(&sys, &pot, 0.5, z, 1.0, 1.0, 1e-12).unwrap();
        assert!((g.re - 0.432332358381694).abs() < 1e-9);
        let g1 = green_function(&sys, &pot, 0.5, cz(2.0, 1.0), 0.3, 1.4, 1e-12).unwrap();
        let g2 = green_function(&sys, &pot, 0.5, cz(2.0, 1.0), 1.4, 0.3, 1e-12).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn gauge_transforms_m() {
        let model = BesselModel::new(0.0).unwrap();
        let pot = model.potential().unwrap();
        let z = cz(1.0, 2.0);
        let plain = singular_m(&SolutionSystem::bessel(model), &pot, 1.0, z, 1e-12).unwrap();
        let gauge = Gauge::new(|z| 0.5 * z, |z| z * z - 1.0);
        let sys = SolutionSystem::bessel(model).with_gauge(gauge.clone());
        let gauged = singular_m(&sys, &pot, 1.0, z, 1e-12).unwrap();
        assert!((gauged - gauge.apply(z, plain)).norm() < 1e-9 * gauged.norm());
    }

    #[test]
    fn diagonal_asymptotics_l0() {
        let model = BesselModel::new(0.0).unwrap();
        let sys = SolutionSystem::bessel(model);
        let pot = model.potential().unwrap();
        let rep = asymptotic_check(&sys, &pot, 1.0, &[std::f64::consts::FRAC_PI_2], (100.0, 1e4, 5), 1.0, 0.5, 1e-11).unwrap();
        assert!(rep.rays[0].diagonal_within, "{rep:?}");
        for s in &rep.rays[0].samples {
            assert!(s.growth_defect < 0.05, "{s:?}");
        }
    }
}
