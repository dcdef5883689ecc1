use super::potential::Potential;
use super::solve::{frobenius, segments, start_offset, BoundaryCondition};
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Scaled Prufer angle of the regular solution at `c`, with
/// `u = rho sin(t)/sqrt(k)`, `u' = rho cos(t)`, `k = max(1, |z|)`.
pub fn pruefer_angle(pot: &Potential, z: f64, c: f64, tol: f64) -> Result<f64> {
    if !(c > pot.a && c <= pot.b) {
        return Err(Error::Invalid(format!("c = {c} outside ({}, {}]", pot.a, pot.b)));
    }
    let k = z.abs().max(1.0);
    let sk = k.sqrt();
    let (x0, t0) = if pot.l.is_some() {
        let d = start_offset(pot, Complex64::new(z, 0.0), tol, c);
        let (u, du) = frobenius(pot, Complex64::new(z, 0.0), d)?;
        (pot.a + d, (sk * u.re).atan2(du.re))
    } else {
        (pot.a, 0.0)
    };
    let opts = OdeOptions {
        rtol: tol,
        atol: tol,
        ..Default::default()
    };
    let mut t = [t0];
    for (s0, s1) in segments(pot, x0, c) {
        t = ode::solve(
            |x, t: &[f64; 1]| {
                let (s, co) = t[0].sin_cos();
                [sk * co * co + (z - pot.q(x)) / sk * s * s]
            },
            s0,
            t,
            s1,
            &opts,
            None,
        )?;
    }
    Ok(t[0])
}

/// Zeros of `phi(z, .)` (Dirichlet) or `phi'(z, .)` (Neumann) in `(a, c)`.
pub fn pruefer_count(pot: &Potential, z: f64, c: f64, bc: BoundaryCondition) -> Result<usize> {
    let t = pruefer_angle(pot, z, c, 1e-10)?;
    let shifted = match bc {
        BoundaryCondition::Dirichlet => t / PI,
        BoundaryCondition::Neumann => t / PI + 0.5,
    };
    Ok((shifted.ceil() - 1.0).max(0.0) as usize)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KneserReport {
    pub satisfied: bool,
    #[serde(rename = "C")]
    pub c: f64,
    pub remainder_integrable: bool,
}

/// Fits the leading `-C/(x-a)^2` part of the negative part of `q` near `a`
/// and checks integrability of `(x-a) Q(x)` for the rest.
pub fn check_kneser(pot: &Potential, c: f64) -> Result<KneserReport> {
    if !pot.a.is_finite() || !(c > pot.a) {
        return Err(Error::Invalid("need finite a < c".into()));
    }
    let span = c - pot.a;
    let decades = 8;
    let per = 40;
    let pts: Vec<f64> = (0..=decades * per)
        .map(|i| span * 10f64.powf(-(decades as f64) + i as f64 / per as f64))
        .collect();
    let neg = |s: f64| (-pot.q(pot.a + s)).max(0.0) * s * s;
    let cfit = pts[..per].iter().map(|&s| neg(s)).fold(0.0f64, f64::max);
    let cfit = if cfit < 1e-12 { 0.0 } else { cfit };
    let critical = (cfit - 0.25).abs() <= 1e-9;
    let weight = |s: f64| if critical { s * (1.0 + (span / s).ln()) } else { s };
    // per-decade contributions of the weighted remainder, nearest to a first
    let mut contrib = Vec::with_capacity(decades);
    for d in 0..decades {
        let lo = pts[d * per];
        let hi = pts[(d + 1) * per];
        let v = crate::quad::panels(
            |s: f64| {
                let rem = ((-pot.q(pot.a + s)).max(0.0) - cfit / (s * s)).max(0.0);
                weight(s) * rem
            },
            lo,
            hi,
            4,
        );
        contrib.push(v);
    }
    let total: f64 = contrib.iter().sum();
    let remainder_integrable =
        total < 1e-12 || (contrib[0] <= 0.5 * contrib[1].max(1e-300) && contrib[0] < 1e-2 * total.max(1e-300)) || contrib[0] < 1e-8 * total;
    let satisfied = (cfit < 0.25 - 1e-9 || critical) && remainder_integrable;
    Ok(KneserReport {
        satisfied,
        c: cfit,
        remainder_integrable,
    })
}
