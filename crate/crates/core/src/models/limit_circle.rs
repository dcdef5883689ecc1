use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::schrodinger::{
    integrate, regular_solution_phi, second_solution_theta_numeric, segments, Potential, SolutionSample,
};
use crate::weyl::{singular_m, SolutionSystem};
use num_complex::Complex64;
use std::sync::Arc;

/// Entire system built from boundary Wronskians at a limit-circle endpoint,
/// anchored at the real solutions `phi0`, `theta0` of energy `lambda0`.
#[derive(Debug, Clone)]
pub struct LimitCircleSystem {
    pub pot: Potential,
    pub lambda0: f64,
    pub c: f64,
    pub phi0: (f64, f64),
    pub theta0: (f64, f64),
    pub tol: f64,
}

fn wr(u: (Complex64, Complex64), v: (Complex64, Complex64)) -> Complex64 {
    u.0 * v.1 - u.1 * v.0
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl LimitCircleSystem {
    pub fn new(pot: &Potential, lambda0: f64, c0: f64) -> Result<Self> {
        if let Some(l) = pot.l {
            if !(-0.5..0.5).contains(&l) {
                return Err(Error::Precondition(format!(
                    "l = {l} is not in the limit-circle range [-1/2, 1/2)"
                )));
            }
        }
        if !(c0 > pot.a && c0 < pot.b) {
            return Err(Error::Invalid(format!("c = {c0} outside ({}, {})", pot.a, pot.b)));
        }
        let tol = 1e-12;
        let z0 = c(lambda0);
        let p = regular_solution_phi(pot, z0, c0, tol)?;
        let t = second_solution_theta_numeric(pot, z0, c0, c0, tol)?;
        Ok(LimitCircleSystem {
            pot: pot.clone(),
            lambda0,
            c: c0,
            phi0: (p.u.re, p.du.re),
            theta0: (t.u.re, t.du.re),
            tol,
        })
    }

    fn probe_points(&self) -> Vec<f64> {
        let a = self.pot.a;
        if self.pot.l.is_none() {
            return vec![a];
        }
        let h = (self.c - a).min(1.0);
        [1e-2, 1e-3, 1e-4].iter().map(|s| a + s * h).collect()
    }

    /// `W_a(u, v)` for solutions of energies `z1`, `z2` given by their data at `c`,
    /// extrapolated from `W_x` at three points approaching `a`.
    pub fn boundary_wronskian(
        &self,
        z1: Complex64,
        u: (Complex64, Complex64),
        z2: Complex64,
        v: (Complex64, Complex64),
    ) -> Result<Complex64> {
        let opts = OdeOptions {
            rtol: self.tol,
            atol: self.tol * 1e-6,
            ..Default::default()
        };
        let pot = &self.pot;
        let mut y = [u.0, u.1, v.0, v.1];
        let mut x = self.c;
        let mut w = Vec::new();
        for s in self.probe_points() {
            for (s0, s1) in segments(pot, x, s) {
                y = ode::solve(
                    |x, y: &[Complex64; 4]| {
                        let q = pot.q(x);
                        [y[1], (q - z1) * y[0], y[3], (q - z2) * y[2]]
                    },
                    s0,
                    y,
                    s1,
                    &opts,
                    None,
                )?;
            }
            x = s;
            w.push(wr((y[0], y[1]), (y[2], y[3])));
        }
        if w.len() == 1 {
            return Ok(w[0]);
        }
        let (w1, w2, w3) = (w[0], w[1], w[2]);
        let d1 = w2 - w1;
        let d2 = w3 - w2;
        let scale = w3.norm().max(1.0);
        if d2.norm() <= 1e-13 * scale {
            return Ok(w3);
        }
        if d2.norm() > 0.9 * d1.norm() {
            return Err(Error::Rejected(format!(
                "boundary Wronskian does not converge as x -> a ({:.3e}, {:.3e}); endpoint is not limit circle",
                d1.norm(),
                d2.norm()
            )));
        }
        // W_x = W_a + A h^{p1} + B h^{p2} with the exponents of the Frobenius products
        let l = self.pot.strength();
        let hs: Vec<f64> = self.probe_points().iter().map(|x| x - self.pot.a).collect();
        let basis: [Box<dyn Fn(f64) -> f64>; 2] = if (1.0 - 2.0 * l - 2.0).abs() < 0.05 {
            [Box::new(|h: f64| h * h * h.ln() * h.ln()), Box::new(|h: f64| h * h * h.ln())]
        } else {
            let p1 = 1.0 - 2.0 * l;
            [Box::new(move |h: f64| h.powf(p1)), Box::new(|h: f64| h * h)]
        };
        let m = nalgebra::Matrix3::from_fn(|i, j| if j == 0 { 1.0 } else { basis[j - 1](hs[i]) });
        let lu = m.lu();
        let re = lu
            .solve(&nalgebra::Vector3::new(w1.re, w2.re, w3.re))
            .ok_or_else(|| Error::NoConvergence("singular extrapolation system".into()))?;
        let im = lu
            .solve(&nalgebra::Vector3::new(w1.im, w2.im, w3.im))
            .ok_or_else(|| Error::NoConvergence("singular extrapolation system".into()))?;
        Ok(Complex64::new(re[0], im[0]))
    }

    /// `[W_a(c, phi0), W_a(s, phi0), W_a(c, theta0), W_a(s, theta0)]` at `z`.
    pub fn anchor_wronskians(&self, z: Complex64) -> Result<[Complex64; 4]> {
        let z0 = c(self.lambda0);
        let cz = (c(1.0), c(0.0));
        let sz = (c(0.0), c(1.0));
        let p0 = (c(self.phi0.0), c(self.phi0.1));
        let t0 = (c(self.theta0.0), c(self.theta0.1));
        Ok([
            self.boundary_wronskian(z, cz, z0, p0)?,
            self.boundary_wronskian(z, sz, z0, p0)?,
            self.boundary_wronskian(z, cz, z0, t0)?,
            self.boundary_wronskian(z, sz, z0, t0)?,
        ])
    }

    /// `((phi, phi'), (theta, theta'))` at `c`.
    pub fn data_at_c(&self, z: Complex64) -> Result<[Complex64; 4]> {
        let [cp, sp, ct, st] = self.anchor_wronskians(z)?;
        Ok([-sp, cp, -st, ct])
    }

    fn at(&self, z: Complex64, x: f64, u: Complex64, du: Complex64) -> Result<SolutionSample> {
        let init = SolutionSample::new(z, self.c, u, du);
        if x == self.c {
            return Ok(init);
        }
        integrate(&self.pot, z, init, x, self.tol)
    }

    pub fn phi(&self, z: Complex64, x: f64) -> Result<SolutionSample> {
        let d = self.data_at_c(z)?;
        self.at(z, x, d[0], d[1])
    }

    pub fn theta(&self, z: Complex64, x: f64) -> Result<SolutionSample> {
        let d = self.data_at_c(z)?;
        self.at(z, x, d[2], d[3])
    }

    pub fn system(&self) -> SolutionSystem {
        let s1 = self.clone();
        let s2 = self.clone();
        SolutionSystem::new(
            &format!("limitcircle[{}]", self.pot.label),
            Arc::new(move |z, x| s1.phi(z, x)),
            Arc::new(move |z, x| s2.theta(z, x)),
            true,
        )
    }
}

/// Singular Weyl function of the limit-circle system.
pub fn lc_singular_m(sys: &LimitCircleSystem, z: Complex64) -> Result<Complex64> {
    singular_m(&sys.system(), &sys.pot, sys.c, z, 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::BesselModel;
    use crate::quad::gl16;
    use crate::weyl::weyl_solution_psi_many;

    #[test]
    fn reduces_to_bessel_phi() {
        for l in [0.0, 0.25, -0.3] {
            let pot = Potential::bessel(l).unwrap();
            let lc = LimitCircleSystem::new(&pot, 0.0, 1.0).unwrap();
            let model = BesselModel::new(l).unwrap();
            for z in [Complex64::new(2.0, 1.0), Complex64::new(-3.0, 0.0), Complex64::new(10.0, -4.0)] {
                for x in [0.5, 1.0, 1.7] {
                    let p = lc.phi(z, x).unwrap();
                    let (u, _) = model.phi(z, x).unwrap();
                    assert!((p.u - u).norm() < 1e-6 * u.norm().max(1.0), "l={l} z={z} x={x}: {} vs {u}", p.u);
                }
            }
        }
    }

    #[test]
    fn boundary_identities() {
        let pot = Potential::bessel(0.25).unwrap();
        let lc = LimitCircleSystem::new(&pot, 0.0, 1.0).unwrap();
        let z = Complex64::new(1.5, 2.0);
        let zh = Complex64::new(-0.7, 0.3);
        let d = lc.data_at_c(z).unwrap();
        let dh = lc.data_at_c(zh).unwrap();
        let th = (d[2], d[3]);
        let ph = (d[0], d[1]);
        let phh = (dh[0], dh[1]);
        let thh = (dh[2], dh[3]);
        assert!((lc.boundary_wronskian(z, th, zh, phh).unwrap() - 1.0).norm() < 1e-6);
        assert!(lc.boundary_wronskian(zh, phh, z, ph).unwrap().norm() < 1e-6);
        assert!(lc.boundary_wronskian(zh, thh, z, th).unwrap().norm() < 1e-6);
        assert!((wr(th, ph) - 1.0).norm() < 1e-9);
    }

    #[test]
    fn m_differs_from_bessel_by_entire_shift() {
        let l = 0.25;
        let pot = Potential::bessel(l).unwrap();
        let lc = LimitCircleSystem::new(&pot, 0.0, 1.0).unwrap();
        let model = BesselModel::new(l).unwrap();
        for z in [Complex64::new(0.0, 1.0), Complex64::new(-2.0, 0.5), Complex64::new(5.0, 3.0)] {
            let m = lc_singular_m(&lc, z).unwrap();
            let t = lc.theta(z, 1.0).unwrap();
            let (tu, tdu) = model.theta(z, 1.0).unwrap();
            let f = t.u * tdu - t.du * tu;
            let expected = model.m(z) + f;
            assert!((m - expected).norm() < 1e-6 * expected.norm(), "{z}: {m} vs {expected}");
        }
    }

    #[test]
    fn im_m_equals_norm_of_psi() {
        let pot = Potential::bessel(0.25).unwrap();
        let lc = LimitCircleSystem::new(&pot, 0.0, 1.0).unwrap();
        let sys = lc.system();
        let z = Complex64::new(0.0, 1.0);
        let m = lc_singular_m(&lc, z).unwrap();
        let (t, w) = gl16();
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        // (0, 1] through x = s^2
        for k in 0..8 {
            let (lo, hi) = (k as f64 / 8.0, (k + 1) as f64 / 8.0);
            for (ti, wi) in t.iter().zip(w) {
                let s = lo + (hi - lo) * 0.5 * (ti + 1.0);
                xs.push(s * s);
                ws.push(0.5 * (hi - lo) * wi * 2.0 * s);
            }
        }
        for k in 0..80 {
            let (lo, hi) = (1.0 + 0.5 * k as f64, 1.5 + 0.5 * k as f64);
            for (ti, wi) in t.iter().zip(w) {
                xs.push(lo + (hi - lo) * 0.5 * (ti + 1.0));
                ws.push(0.5 * (hi - lo) * wi);
            }
        }
        let psi = weyl_solution_psi_many(&sys, &pot, 1.0, z, &xs, 1e-11).unwrap();
        let norm: f64 = psi.iter().zip(&ws).map(|(p, w)| w * p.u.norm_sqr()).sum();
        assert!(m.im > 0.0);
        assert!((m.im - norm).abs() < 1e-3 * m.im, "{} vs {norm}", m.im);
    }

    #[test]
    fn rejects_limit_point_strength() {
        let pot = Potential::bessel(1.0).unwrap();
        assert!(LimitCircleSystem::new(&pot, 0.0, 1.0).is_err());
    }
}
