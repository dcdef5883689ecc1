use super::potential::Potential;
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, Trajectory};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Value and derivative of a solution of `tau u = z u` at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionSample {
    pub z: Complex64,
    pub x: f64,
    pub u: Complex64,
    pub du: Complex64,
}

impl SolutionSample {
    pub fn new(z: Complex64, x: f64, u: Complex64, du: Complex64) -> Self {
        SolutionSample { z, x, u, du }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

pub(crate) fn ode_opts(tol: f64) -> OdeOptions {
    OdeOptions {
        rtol: tol,
        atol: tol * 1e-6,
        ..Default::default()
    }
}

/// Splits `[x0, x1]` (either orientation) at the potential's breakpoints.
pub(crate) fn segments(pot: &Potential, x0: f64, x1: f64) -> Vec<(f64, f64)> {
    let (lo, hi) = (x0.min(x1), x0.max(x1));
    let mut cuts: Vec<f64> = pot
        .breakpoints()
        .iter()
        .copied()
        .filter(|&p| p > lo && p < hi)
        .collect();
    if x1 < x0 {
        cuts.reverse();
    }
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut s = x0;
    for c in cuts {
        out.push((s, c));
        s = c;
    }
    out.push((s, x1));
    out
}

/// Propagates `(u, u', extra...)` where `extra` supplies derivatives of the
/// auxiliary components (indices `2..N`). The state is rescaled so that the
/// leading pair starts at unit size; auxiliary components are scaled with it
/// and must therefore be linear in `u`.
pub(crate) fn propagate<const N: usize, F>(
    pot: &Potential,
    z: Complex64,
    x0: f64,
    y0: [Complex64; N],
    x1: f64,
    tol: f64,
    mut extra: F,
    mut traj: Option<&mut Trajectory<Complex64, N>>,
) -> Result<[Complex64; N]>
where
    F: FnMut(f64, &[Complex64; N], &mut [Complex64; N]),
{
    let scale = y0[0].norm().max(y0[1].norm());
    if scale == 0.0 || !scale.is_finite() {
        if scale == 0.0 {
            return Ok(y0);
        }
        return Err(Error::Overflow("non-finite initial data".into()));
    }
    let mut y = y0;
    for v in y.iter_mut() {
        *v /= scale;
    }
    let opts = ode_opts(tol);
    let zero = Complex64::new(0.0, 0.0);
    for (s0, s1) in segments(pot, x0, x1) {
        let rhs = |x: f64, y: &[Complex64; N]| {
            let mut d = [zero; N];
            d[0] = y[1];
            d[1] = (pot.q(x) - z) * y[0];
            if N > 2 {
                extra(x, y, &mut d);
            }
            d
        };
        y = ode::solve(rhs, s0, y, s1, &opts, traj.as_deref_mut())?;
    }
    if let Some(t) = traj {
        for v in t.ys.iter_mut().chain(t.fs.iter_mut()) {
            for c in v.iter_mut() {
                *c *= scale;
            }
        }
    }
    for v in y.iter_mut() {
        *v *= scale;
    }
    Ok(y)
}

/// Adaptive propagation of a solution from `init.x` to `to`.
pub fn integrate(pot: &Potential, z: Complex64, init: SolutionSample, to: f64, tol: f64) -> Result<SolutionSample> {
    check_inside(pot, init.x)?;
    check_inside(pot, to)?;
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let y = propagate(pot, z, init.x, [init.u, init.du], to, tol, |_, _, _| {}, None)?;
    Ok(SolutionSample::new(z, to, y[0], y[1]))
}

fn check_inside(pot: &Potential, x: f64) -> Result<()> {
    let ok = if pot.l.is_none() { x >= pot.a } else { x > pot.a };
    if !(ok && x <= pot.b && x.is_finite()) {
        return Err(Error::Invalid(format!("x = {x} outside ({}, {})", pot.a, pot.b)));
    }
    Ok(())
}

/// `(2l+1)!! = 2^{l+1} Gamma(l + 3/2) / sqrt(pi)`.
pub fn double_factorial(l: f64) -> f64 {
    2f64.powf(l + 1.0) * crate::specfun::gamma(l + 1.5) / std::f64::consts::PI.sqrt()
}

/// Frobenius start offset for the regular solution.
pub(crate) fn start_offset(pot: &Potential, z: Complex64, tol: f64, x: f64) -> f64 {
    let l = pot.strength();
    let mut d = 0.01f64.min(tol.powf(1.0 / (2.0 * l + 3.0)));
    d = d.min(0.25 * (x - pot.a));
    let zn = z.norm();
    if zn > 0.0 {
        d = d.min(0.5 / zn.sqrt());
    }
    d
}

/// Regular solution `u = sum c_k s^{l+1+k}` and its derivative at `s`.
pub(crate) fn frobenius(pot: &Potential, z: Complex64, s: f64) -> Result<(Complex64, Complex64)> {
    let l = pot.strength();
    let q = pot.local_expansion();
    let zero = Complex64::new(0.0, 0.0);
    let mut c = vec![Complex64::new(1.0 / double_factorial(l), 0.0)];
    let mut u = c[0];
    let mut du = c[0] * (l + 1.0);
    let mut sk = 1.0;
    for k in 1..400usize {
        let mut rhs = zero;
        // q_m multiplies c_{k-2-m}, m = -1, 0, ...
        for (i, &qm) in q.iter().enumerate() {
            let m = i as isize - 1;
            let idx = k as isize - 2 - m;
            if idx < 0 {
                continue;
            }
            rhs += qm * c[idx as usize];
        }
        if k >= 2 {
            rhs -= z * c[k - 2];
        }
        let ck = rhs / (k as f64 * (k as f64 + 2.0 * l + 1.0));
        c.push(ck);
        sk *= s;
        let tu = ck * sk;
        u += tu;
        du += ck * sk * (l + 1.0 + k as f64);
        if k > 4 && tu.norm() < 1e-18 * u.norm() && (c[k - 1] * sk / s).norm() < 1e-18 * u.norm() {
            let p = s.powf(l + 1.0);
            return Ok((u * p, du * (p / s)));
        }
    }
    Err(Error::NoConvergence(format!("Frobenius series at s = {s}")))
}

/// Start point and data of the regular solution near `a`.
pub(crate) fn phi_start(pot: &Potential, z: Complex64, tol: f64, x: f64) -> Result<(f64, Complex64, Complex64)> {
    if let Some(l) = pot.l {
        if l < -0.5 {
            return Err(Error::Unsupported(format!("l = {l} < -1/2")));
        }
        let d = start_offset(pot, z, tol, x);
        let (u, du) = frobenius(pot, z, d)?;
        Ok((pot.a + d, u, du))
    } else {
        Ok((pot.a, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)))
    }
}

/// Solution normalized by `phi ~ (x-a)^{l+1}/(2l+1)!!` near `a`.
pub fn regular_solution_phi(pot: &Potential, z: Complex64, x: f64, tol: f64) -> Result<SolutionSample> {
    check_inside(pot, x)?;
    let (x0, u0, du0) = phi_start(pot, z, tol, x)?;
    if x <= x0 {
        let (u, du) = frobenius(pot, z, x - pot.a)?;
        return Ok(SolutionSample::new(z, x, u, du));
    }
    let y = propagate(pot, z, x0, [u0, du0], x, tol, |_, _, _| {}, None)?;
    Ok(SolutionSample::new(z, x, y[0], y[1]))
}

/// Initial data of the numeric second solution at the anchor.
pub(crate) fn theta_anchor(alpha: Complex64, beta: Complex64) -> Result<(Complex64, Complex64)> {
    let d = alpha * alpha + beta * beta;
    let scale = alpha.norm_sqr() + beta.norm_sqr();
    if d.norm() < 1e-8 * scale {
        return Err(Error::NearPole(
            "alpha^2 + beta^2 nearly vanishes; reduce |Im z|".into(),
        ));
    }
    Ok((beta / d, -alpha / d))
}

/// Second solution with `theta(c) = beta/(alpha^2+beta^2)`,
/// `theta'(c) = -alpha/(alpha^2+beta^2)`, `alpha = phi(z,c)`, `beta = phi'(z,c)`.
pub fn second_solution_theta_numeric(
    pot: &Potential,
    z: Complex64,
    c: f64,
    x: f64,
    tol: f64,
) -> Result<SolutionSample> {
    let phi = regular_solution_phi(pot, z, c, tol)?;
    let (t, dt) = theta_anchor(phi.u, phi.du)?;
    integrate(pot, z, SolutionSample::new(z, c, t, dt), x, tol)
}

/// Lagrange bracket `W_x(u, v) = u v' - u' v`.
pub fn lagrange_bracket(u: &SolutionSample, v: &SolutionSample) -> Result<Complex64> {
    if (u.x - v.x).abs() > 1e-14 * u.x.abs().max(1.0) {
        return Err(Error::Invalid(format!("bracket at different points {} and {}", u.x, v.x)));
    }
    Ok(u.u * v.du - u.du * v.u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schrodinger::Tail;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn free() -> Potential {
        Potential::from_qtilde("free", |_| 0.0, 0.0, 10.0, None, Tail::Regular).unwrap()
    }

    #[test]
    fn integrate_trig_and_hyperbolic() {
        let p = free();
        let s = integrate(&p, c(1.0), SolutionSample::new(c(1.0), 0.0, c(0.0), c(1.0)), std::f64::consts::FRAC_PI_2, 1e-11).unwrap();
        assert!((s.u - 1.0).norm() < 1e-8 && s.du.norm() < 1e-8);
        let s = integrate(&p, c(-1.0), SolutionSample::new(c(-1.0), 0.0, c(0.0), c(1.0)), 1.0, 1e-11).unwrap();
        assert!((s.u.re - 1f64.sinh()).abs() < 1e-9 && (s.du.re - 1f64.cosh()).abs() < 1e-9);
    }

    #[test]
    fn integrate_inverse_square() {
        let p = Potential::from_q("2/x^2", |x| 2.0 / (x * x), 0.0, f64::INFINITY, Some(1.0), Tail::LimitPointDecaying).unwrap();
        let s = integrate(&p, c(0.0), SolutionSample::new(c(0.0), 0.1, c(0.01), c(0.2)), 1.0, 1e-10).unwrap();
        assert!((s.u - 1.0).norm() < 1e-6 && (s.du - 2.0).norm() < 1e-6);
    }

    #[test]
    fn phi_matches_bessel_closed_forms() {
        let p0 = Potential::bessel(0.0).unwrap();
        let s = regular_solution_phi(&p0, c(-1.0), 1.0, 1e-10).unwrap();
        assert!((s.u.re - 1f64.sinh()).abs() < 1e-8);
        let p1 = Potential::bessel(1.0).unwrap();
        let s = regular_solution_phi(&p1, c(0.0), 0.5, 1e-10).unwrap();
        assert!((s.u.re - 0.25 / 3.0).abs() < 1e-9);
        let s = regular_solution_phi(&p1, c(4.0), 1.0, 1e-10).unwrap();
        let oracle = (2f64.sin() / 2.0 - 2f64.cos()) / 4.0;
        assert!((s.u.re - oracle).abs() < 1e-8, "{} vs {}", s.u.re, oracle);
    }

    #[test]
    fn phi_is_real_for_real_z_and_conjugate_symmetric() {
        let p = Potential::coulomb(1.0, 1.0).unwrap();
        let s = regular_solution_phi(&p, c(3.0), 1.3, 1e-10).unwrap();
        assert_eq!(s.u.im, 0.0);
        let z = Complex64::new(2.0, 1.5);
        let a = regular_solution_phi(&p, z, 1.3, 1e-10).unwrap();
        let b = regular_solution_phi(&p, z.conj(), 1.3, 1e-10).unwrap();
        assert!((a.u - b.u.conj()).norm() < 1e-12 * a.u.norm());
    }

    #[test]
    fn numeric_theta_anchor_values() {
        let p = Potential::bessel(0.0).unwrap();
        let t = second_solution_theta_numeric(&p, c(1.0), 1.0, 1.0, 1e-10).unwrap();
        assert!((t.u.re - 1f64.cos()).abs() < 1e-8);
        assert!((t.du.re + 1f64.sin()).abs() < 1e-8);
        let phi = regular_solution_phi(&p, c(1.0), 1.0, 1e-10).unwrap();
        assert!((lagrange_bracket(&t, &phi).unwrap() - 1.0).norm() < 1e-9);
    }

    #[test]
    fn wronskian_constant_in_x() {
        let p = Potential::coulomb(1.0, 1.0).unwrap();
        let z = Complex64::new(3.0, 0.4);
        for &x in &[0.3, 1.0, 2.5] {
            let t = second_solution_theta_numeric(&p, z, 1.0, x, 1e-11).unwrap();
            let f = regular_solution_phi(&p, z, x, 1e-11).unwrap();
            assert!((lagrange_bracket(&t, &f).unwrap() - 1.0).norm() < 1e-7);
        }
    }

    #[test]
    fn bracket_rules() {
        let x = 0.7f64;
        let u = SolutionSample::new(c(0.0), x, c(x.sin()), c(x.cos()));
        let v = SolutionSample::new(c(0.0), x, c(x.cos()), c(-x.sin()));
        assert!((lagrange_bracket(&u, &v).unwrap() + 1.0).norm() < 1e-15);
        assert_eq!(lagrange_bracket(&u, &u).unwrap(), c(0.0));
        let w = SolutionSample::new(c(0.0), 0.8, c(1.0), c(1.0));
        assert!(lagrange_bracket(&u, &w).is_err());
    }

    #[test]
    fn lagrange_identity() {
        let p = Potential::coulomb(1.0, 1.0).unwrap();
        let (z, zh) = (Complex64::new(2.0, 1.0), Complex64::new(-1.0, 0.5));
        let (c0, x) = (0.5, 1.5);
        let u0 = regular_solution_phi(&p, z, c0, 1e-11).unwrap();
        let v0 = second_solution_theta_numeric(&p, zh, 1.0, c0, 1e-11).unwrap();
        // integrate both solutions and their product together
        let dz = z - zh;
        let y = propagate(
            &p,
            z,
            c0,
            [u0.u, u0.du, c(0.0)],
            x,
            1e-11,
            |_, _, _| {},
            None,
        )
        .unwrap();
        let v1 = integrate(&p, zh, v0, x, 1e-11).unwrap();
        let prod = crate::quad::adaptive(
            |s: f64| {
                let a = regular_solution_phi(&p, z, s, 1e-11).unwrap().u;
                let b = integrate(&p, zh, v0, s, 1e-11).unwrap().u;
                a * b
            },
            c0,
            x,
            1e-9,
            1e-12,
        )
        .unwrap();
        let u1 = SolutionSample::new(z, x, y[0], y[1]);
        let lhs = dz * prod;
        let rhs = lagrange_bracket(&u1, &v1).unwrap() - lagrange_bracket(&u0, &v0).unwrap();
        assert!((lhs - rhs).norm() < 1e-7 * rhs.norm().max(1.0), "{lhs} vs {rhs}");
    }
}
