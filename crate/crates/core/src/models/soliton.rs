use crate::error::{Error, Result};
use crate::schrodinger::{Potential, SolutionSample, Tail};
use crate::weyl::SolutionSystem;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Explicit singular potential built from the triplet `(Lambda_1, Lambda_2, S)`
/// with `Lambda(0) = (v1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonModel {
    pub a: Complex64,
    pub v1: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolitonFields {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub s: f64,
    pub q: f64,
}

fn expm1_c(w: Complex64) -> Complex64 {
    if w.norm() < 1e-5 {
        w * (1.0 + w * (0.5 + w / 6.0))
    } else {
        w.exp() - 1.0
    }
}

/// `int_0^x e^{k t} dt`.
fn exp_integral(k: Complex64, x: f64) -> Complex64 {
    let w = k * x;
    if w.norm() < 1e-12 {
        return Complex64::new(x, 0.0);
    }
    expm1_c(w) / k
}

/// `(cos(sqrt z x), sin(sqrt z x)/sqrt z)`, entire in `z`.
fn trig_pair(z: Complex64, x: f64) -> (Complex64, Complex64) {
    let w = z.sqrt();
    let arg = w * x;
    if arg.norm() < 1e-4 {
        let t = z * x * x;
        return (1.0 - t * (0.5 - t / 24.0), x * (1.0 - t * (1.0 / 6.0 - t / 120.0)));
    }
    (arg.cos(), arg.sin() / w)
}

impl SolitonModel {
    pub fn new(a: Complex64, v1: f64) -> Result<Self> {
        if a.norm() == 0.0 || !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::Invalid("soliton parameter A must be nonzero and finite".into()));
        }
        if !v1.is_finite() {
            return Err(Error::Invalid("v1 must be finite".into()));
        }
        Ok(SolitonModel { a, v1 })
    }

    pub fn real(a: f64, v1: f64) -> Result<Self> {
        Self::new(Complex64::new(a, 0.0), v1)
    }

    pub fn fields(&self, x: f64) -> SolitonFields {
        let w = self.a.sqrt();
        let i = Complex64::i();
        let (co, si) = ((w * x).cos(), (w * x).sin());
        let v1 = self.v1;
        let lambda1 = v1 * co + w * si;
        let lambda2 = co - v1 * si / w;
        // Lambda_2 = p e^{iwx} + r e^{-iwx}
        let p = 0.5 - v1 / (2.0 * i * w);
        let r = 0.5 + v1 / (2.0 * i * w);
        let wc = w.conj();
        let s = p * p.conj() * exp_integral(i * (w - wc), x)
            + p * r.conj() * exp_integral(i * (w + wc), x)
            + r * p.conj() * exp_integral(-i * (w + wc), x)
            + r * r.conj() * exp_integral(-i * (w - wc), x);
        let s = s.re;
        let l2sq = lambda2.norm_sqr();
        let q = if x > 0.0 {
            2.0 * ((l2sq / s).powi(2) + 2.0 * (lambda1.conj() * lambda2).re / s)
        } else {
            f64::INFINITY
        };
        SolitonFields { lambda1, lambda2, s, q }
    }

    pub fn potential(&self) -> Result<Potential> {
        let m = *self;
        Potential::from_q(
            &format!("soliton:A={},v1={}", fmt_c(self.a), self.v1),
            move |x| m.fields(x).q,
            0.0,
            f64::INFINITY,
            Some(1.0),
            Tail::LimitPointDecaying,
        )
    }

    /// Rows `y` and `y'` of the transfer-matrix solution system.
    fn rows(&self, z: Complex64, x: f64) -> ([Complex64; 2], [Complex64; 2]) {
        let f = self.fields(x);
        let d = f.s * (z - self.a);
        let l2sq = f.lambda2.norm_sqr();
        let w = [
            [1.0 + f.lambda2.conj() * f.lambda1 / d, l2sq / d],
            [-f.lambda1.norm_sqr() / d, 1.0 - f.lambda1.conj() * f.lambda2 / d],
        ];
        let (cz, sz) = trig_pair(z, x);
        let t = [[cz, sz], [-z * sz, cz]];
        let row = |v: [Complex64; 2]| {
            [v[0] * t[0][0] + v[1] * t[1][0], v[0] * t[0][1] + v[1] * t[1][1]]
        };
        let r0 = [w[0][0], w[0][1]];
        let k = -l2sq / f.s;
        let r1 = [k * w[0][0] + w[1][0], k * w[0][1] + w[1][1]];
        (row(r0), row(r1))
    }

    fn raw(&self, z: Complex64, x: f64) -> [Complex64; 4] {
        let (y, dy) = self.rows(z, x);
        let ac = z - self.a.conj();
        let phi = (y[0] - self.v1 * y[1]) / ac;
        let dphi = (dy[0] - self.v1 * dy[1]) / ac;
        let am = z - self.a;
        [phi, dphi, -am * y[1], -am * dy[1]]
    }

    /// Removable singularities at `A`, `A*` are evaluated by a circle mean.
    fn eval(&self, z: Complex64, x: f64) -> [Complex64; 4] {
        let r = 0.05 * self.a.norm().max(1.0);
        let near = |p: Complex64| (z - p).norm() < 0.2 * r;
        if !(near(self.a) || near(self.a.conj())) {
            return self.raw(z, x);
        }
        let n = 32;
        let mut acc = [Complex64::new(0.0, 0.0); 4];
        for radius in [r, 1.7 * r, 0.6 * r] {
            let nodes: Vec<Complex64> = (0..n)
                .map(|k| z + Complex64::from_polar(radius, 2.0 * PI * (k as f64 + 0.5) / n as f64))
                .collect();
            let clear = nodes
                .iter()
                .all(|&p| (p - self.a).norm() > 0.3 * radius && (p - self.a.conj()).norm() > 0.3 * radius);
            if !clear {
                continue;
            }
            for p in nodes {
                let v = self.raw(p, x);
                for j in 0..4 {
                    acc[j] += v[j] / n as f64;
                }
            }
            return acc;
        }
        self.raw(z + 0.2 * r, x)
    }

    /// `(phi, phi', theta, theta')` at `(z, x)`.
    pub fn solutions(&self, z: Complex64, x: f64) -> Result<[Complex64; 4]> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Invalid(format!("soliton solutions need x > 0, got {x}")));
        }
        Ok(self.eval(z, x))
    }

    /// `M(z) = -(z - A)(z - A*)/(v1 - sqrt(-z))`, i.e. `i sqrt z + v1` with
    /// `Im sqrt z > 0` in the upper half-plane.
    pub fn m(&self, z: Complex64) -> Result<Complex64> {
        let den = self.v1 - (-z).sqrt();
        if den.norm() == 0.0 {
            return Err(Error::Pole(format!("M has a pole at z = {z}")));
        }
        Ok(-(z - self.a) * (z - self.a.conj()) / den)
    }

    /// Absolutely continuous density on `lambda > 0`.
    pub fn rho_density(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return 0.0;
        }
        let d = Complex64::new(lambda, 0.0);
        (d - self.a).norm_sqr() * lambda.sqrt() / ((self.v1 * self.v1 + lambda) * PI)
    }

    /// Point mass of the spectral measure at `-v1^2` when `v1 > 0`.
    pub fn atom(&self) -> Option<(f64, f64)> {
        (self.v1 > 0.0).then(|| {
            let z0 = -self.v1 * self.v1;
            (z0, 2.0 * self.v1 * (Complex64::new(z0, 0.0) - self.a).norm_sqr())
        })
    }

    pub fn system(&self) -> SolutionSystem {
        let m1 = *self;
        let m2 = *self;
        SolutionSystem::new(
            &format!("soliton:A={},v1={}", fmt_c(self.a), self.v1),
            Arc::new(move |z, x| {
                let v = m1.solutions(z, x)?;
                Ok(SolutionSample::new(z, x, v[0], v[1]))
            }),
            Arc::new(move |z, x| {
                let v = m2.solutions(z, x)?;
                Ok(SolutionSample::new(z, x, v[2], v[3]))
            }),
            true,
        )
    }
}

fn fmt_c(a: Complex64) -> String {
    if a.im == 0.0 {
        format!("{}", a.re)
    } else {
        format!("{}{:+}i", a.re, a.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    #[test]
    fn fields_closed_form() {
        let m = SolitonModel::real(1.0, 0.0).unwrap();
        let f = m.fields(PI / 4.0);
        assert!((f.s - 0.642699081698724).abs() < 1e-14);
        assert!((f.q - 4.322347951632681).abs() < 1e-12);
    }

    #[test]
    fn s_matches_quadrature() {
        for (a, v1) in [(Complex64::new(1.0, 1.0), 0.3), (Complex64::new(-2.0, 0.5), -1.0), (Complex64::new(3.0, 0.0), 2.0)] {
            let m = SolitonModel::new(a, v1).unwrap();
            let x = 1.3;
            let s: f64 = quad::adaptive(|t| m.fields(t).lambda2.norm_sqr(), 0.0, x, 1e-13, 1e-15).unwrap();
            assert!((m.fields(x).s - s).abs() < 1e-11 * s.max(1.0));
        }
    }

    #[test]
    fn structure_identity_complex_a() {
        let a = Complex64::new(1.0, 1.0);
        let m = SolitonModel::new(a, 0.4).unwrap();
        let f = m.fields(1.0);
        let lhs = (a - a.conj()) * f.s;
        let rhs = f.lambda1 * f.lambda2.conj() - f.lambda2 * f.lambda1.conj();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn singularity_at_origin() {
        for m in [SolitonModel::real(1.0, 0.0).unwrap(), SolitonModel::real(2.0, 0.7).unwrap()] {
            for x in [1e-3, 1e-2, 0.05] {
                let r = m.fields(x).q * x * x / 2.0;
                assert!((0.9..=1.1).contains(&r), "{r}");
            }
        }
    }

    #[test]
    fn m_value() {
        let m = SolitonModel::real(1.0, 0.0).unwrap();
        assert!((m.m(Complex64::new(-1.0, 0.0)).unwrap() - 4.0).norm() < 1e-14);
    }

    fn check_system(m: &SolitonModel, zs: &[Complex64]) {
        for &z in zs {
            for x in [0.3, 1.0, 2.2] {
                let v = m.solutions(z, x).unwrap();
                let w = v[2] * v[1] - v[3] * v[0];
                assert!((w - 1.0).norm() < 1e-9, "W = {w} at z = {z}, x = {x}");
                // ODE residual by central differences
                let h = 1e-4;
                let p = m.solutions(z, x + h).unwrap();
                let n = m.solutions(z, x - h).unwrap();
                let q = m.fields(x).q;
                for (k, dk) in [(0, 1), (2, 3)] {
                    let d2 = (p[k] - 2.0 * v[k] + n[k]) / (h * h);
                    let res = -d2 + (q - z) * v[k];
                    assert!(res.norm() < 1e-5 * (1.0 + v[k].norm() * (q.abs() + z.norm())), "residual {res}");
                    let d1 = (p[k] - n[k]) / (2.0 * h);
                    assert!((d1 - v[dk]).norm() < 1e-6 * (1.0 + v[dk].norm()));
                }
            }
        }
    }

    #[test]
    fn wronskian_and_residual() {
        let zs = [
            Complex64::new(-1.0, 0.0),
            Complex64::new(2.0, 1.5),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0 + 1e-6, 0.0),
            Complex64::new(10.0, -3.0),
        ];
        check_system(&SolitonModel::real(1.0, 0.0).unwrap(), &zs);
        check_system(&SolitonModel::real(2.0, 0.5).unwrap(), &zs);
        let c = SolitonModel::new(Complex64::new(1.0, 1.0), 0.2).unwrap();
        check_system(&c, &[Complex64::new(1.0, 1.0), Complex64::new(1.0, -1.0), Complex64::new(0.5, 2.0)]);
    }

    #[test]
    fn phi_real_on_real_axis() {
        let m = SolitonModel::real(1.5, 0.3).unwrap();
        for z in [-2.0, 0.7, 1.5, 4.0] {
            let v = m.solutions(Complex64::new(z, 0.0), 0.8).unwrap();
            for c in v {
                assert!(c.im.abs() < 1e-10 * (1.0 + c.re.abs()));
            }
        }
    }

    #[test]
    fn numeric_m_matches_closed_form() {
        use crate::weyl::singular_m;
        for m in [SolitonModel::real(1.0, 0.0).unwrap(), SolitonModel::real(2.0, 0.5).unwrap()] {
            let pot = m.potential().unwrap();
            let sys = m.system();
            for z in [Complex64::new(2.0, 1.0), Complex64::new(-1.0, 0.5), Complex64::new(30.0, -0.1), Complex64::new(-50.0, 20.0)] {
                let num = singular_m(&sys, &pot, 1.0, z, 1e-10).unwrap();
                let exact = m.m(z).unwrap();
                assert!((num - exact).norm() < 1e-6 * exact.norm(), "{z}: {num} vs {exact}");
            }
        }
    }
}
