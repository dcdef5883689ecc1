use crate::error::{Error, Result};
use crate::schrodinger::{double_factorial, Potential};
use crate::specfun::{bessel_j, bessel_series, bessel_y, gamma, incomplete_gamma_upper, log_series};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Squared-argument threshold `|z| x^2` beyond which the Hankel form is used.
const SERIES_LIMIT: f64 = 400.0;

/// Unperturbed Bessel operator `-d^2/dx^2 + l(l+1)/x^2` on `(0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselModel {
    pub l: f64,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl BesselModel {
    pub fn new(l: f64) -> Result<Self> {
        if !l.is_finite() || l < -0.5 {
            return Err(Error::Unsupported(format!("Bessel model needs l >= -1/2, got {l}")));
        }
        Ok(BesselModel { l })
    }

    pub fn nu(&self) -> f64 {
        self.l + 0.5
    }

    /// `l + 1/2` is a nonnegative integer (logarithmic branch).
    pub fn integer_order(&self) -> Option<u32> {
        let nu = self.nu();
        (nu == nu.round()).then_some(nu as u32)
    }

    pub fn potential(&self) -> Result<Potential> {
        Potential::bessel(self.l)
    }

    /// `(phi_l(z,x), phi_l'(z,x))`.
    pub fn phi(&self, z: Complex64, x: f64) -> Result<(Complex64, Complex64)> {
        check_x(x)?;
        let l = self.l;
        let nu = self.nu();
        if z.norm() * x * x <= SERIES_LIMIT {
            let t = 0.25 * z * x * x;
            let df = double_factorial(l);
            let s0 = bessel_series(nu, t)?;
            let s1 = bessel_series(nu + 1.0, t)?;
            let xl = x.powf(l);
            let u = x * xl * s0 / df;
            let du = xl * ((l + 1.0) * s0 - 0.5 * z * x * x * s1 / (nu + 1.0)) / df;
            return Ok((u, du));
        }
        let sz = z.sqrt();
        let w = sz * x;
        let pre = z.powf(-0.5 * nu) * (0.5 * PI).sqrt();
        let jn = bessel_j(nu, w)?;
        let jm = bessel_j(nu - 1.0, w)?;
        let u = pre * x.sqrt() * jn;
        let du = pre * x.sqrt() * (sz * jm - l * jn / x);
        Ok((u, du))
    }

    /// `(theta_l(z,x), theta_l'(z,x))`, entire in `z`.
    pub fn theta(&self, z: Complex64, x: f64) -> Result<(Complex64, Complex64)> {
        check_x(x)?;
        let l = self.l;
        let nu = self.nu();
        let series = z.norm() * x * x <= SERIES_LIMIT;
        match self.integer_order() {
            None if series => {
                let t = 0.25 * z * x * x;
                let k = (0.5 * PI).sqrt() * 2f64.powf(nu) / (gamma(1.0 - nu) * (nu * PI).sin());
                let s0 = bessel_series(-nu, t)?;
                let s1 = bessel_series(1.0 - nu, t)?;
                let xl = x.powf(-l);
                let u = k * xl * s0;
                let du = k * xl / x * (-l * s0 - 0.5 * z * x * x * s1 / (1.0 - nu));
                Ok((u, du))
            }
            None => {
                let sz = z.sqrt();
                let w = sz * x;
                let pre = z.powf(0.5 * nu) * (0.5 * PI).sqrt() / (nu * PI).sin();
                let j0 = bessel_j(-nu, w)?;
                let j1 = bessel_j(-nu - 1.0, w)?;
                let u = pre * x.sqrt() * j0;
                let du = pre * x.sqrt() * (sz * j1 + (l + 1.0) * j0 / x);
                Ok((u, du))
            }
            Some(n) if series => theta_log_series(n, z, x),
            Some(n) => {
                let sz = z.sqrt();
                let w = sz * x;
                let lz = z.ln() / PI;
                let nn = n as f64;
                let b0 = bessel_y(nn, w)? - lz * bessel_j(nn, w)?;
                let b1 = bessel_y(nn - 1.0, w)? - lz * bessel_j(nn - 1.0, w)?;
                let pre = -z.powf(0.5 * nn) * (0.5 * PI).sqrt();
                let u = pre * x.sqrt() * b0;
                let du = pre * x.sqrt() * (sz * b1 - l * b0 / x);
                Ok((u, du))
            }
        }
    }

    /// Singular Weyl function `M_l(z)`.
    pub fn m(&self, z: Complex64) -> Complex64 {
        let nu = self.nu();
        match self.integer_order() {
            None => -(-z).powf(nu) / (nu * PI).sin(),
            Some(n) => -z.powi(n as i32) * (-z).ln() / PI,
        }
    }

    /// Density `lambda^{l+1/2}/pi` of the spectral measure on `[0, inf)`.
    pub fn rho_density(&self, lambda: f64) -> f64 {
        if lambda < 0.0 {
            0.0
        } else {
            lambda.powf(self.nu()) / PI
        }
    }

    /// Herglotz function of the measure `e^{-lambda} d rho_l`.
    pub fn herglotz_m(&self, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 && z.re >= 0.0 {
            return Err(Error::Invalid(format!("z = {z} on the support [0, inf)")));
        }
        let nu = self.nu();
        let g = incomplete_gamma_upper(-nu, -z)?;
        Ok(gamma(nu + 1.0) / PI * (-z).powf(nu) * (-z).exp() * g)
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Invalid(format!("Bessel model needs x > 0, got {x}")));
    }
    Ok(())
}

/// Logarithmic branch with the `log z` terms cancelled analytically.
fn theta_log_series(n: u32, z: Complex64, x: f64) -> Result<(Complex64, Complex64)> {
    let nn = n as f64;
    let h = 0.5 * x;
    let t = z * h * h;
    let lh = h.ln();
    let fact = gamma(nn + 1.0);
    let s0 = bessel_series(nn, t)?;
    let s1 = bessel_series(nn + 1.0, t)?;
    let sx = -s1 * z * h / (nn + 1.0);
    let (a, b) = log_series(n, t)?;
    let zn = z.powi(n as i32);
    let hn = h.powi(n as i32);
    let mut poly = c(0.0);
    let mut dpoly = c(0.0);
    for k in 0..n as usize {
        let ck = gamma(nn - k as f64) / gamma(k as f64 + 1.0);
        let p = 2 * k as i32 - n as i32;
        let term = ck * z.powi(k as i32) * h.powi(p);
        poly += term;
        dpoly += term * (p as f64) / x;
    }
    let g = -(2.0 / PI) * lh * zn * hn * s0 / fact + poly / PI + zn * hn * a / PI;
    let dg = -(2.0 / PI) * zn * hn / fact * (s0 / x + lh * nn * s0 / x + lh * sx)
        + dpoly / PI
        + zn * hn * (nn * a + 2.0 * b) / (PI * x);
    let k = (0.5 * PI).sqrt();
    let sq = x.sqrt();
    Ok((k * sq * g, k * (0.5 * g / sq + sq * dg)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schrodinger::{lagrange_bracket, SolutionSample};

    fn cz(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn l0_closed_forms() {
        let m = BesselModel::new(0.0).unwrap();
        for &z in &[cz(-1.0, 0.0), cz(4.0, 0.0), cz(3.0, 2.0), cz(900.0, 5.0), cz(-2.0, 0.3)] {
            for &x in &[0.1, 1.0, 1.7] {
                let sz = z.sqrt();
                let (p, dp) = m.phi(z, x).unwrap();
                let (t, dt) = m.theta(z, x).unwrap();
                let sc = 1.0 + p.norm().max(t.norm());
                assert!((p - (sz * x).sin() / sz).norm() < 1e-12 * sc * (1.0 + sz.norm()), "{z} {x}");
                assert!((dp - (sz * x).cos()).norm() < 1e-12 * sc * (1.0 + sz.norm()));
                assert!((t - (sz * x).cos()).norm() < 1e-12 * sc * (1.0 + sz.norm()), "{z} {x} {t}");
                assert!((dt + sz * (sz * x).sin()).norm() < 1e-11 * sc * (1.0 + sz.norm()));
            }
        }
        let (p, _) = m.phi(cz(-1.0, 0.0), 1.0).unwrap();
        assert!((p.re - 1f64.sinh()).abs() < 1e-14);
        let (t, _) = m.theta(cz(4.0, 0.0), PI / 2.0).unwrap();
        assert!((t.re + 1.0).abs() < 1e-14);
    }

    #[test]
    fn l1_phi_values() {
        let m = BesselModel::new(1.0).unwrap();
        let (p, _) = m.phi(cz(4.0, 0.0), 1.0).unwrap();
        let oracle = (2f64.sin() / 2.0 - 2f64.cos()) / 4.0;
        assert!((p.re - oracle).abs() < 1e-14);
        let (p, _) = m.phi(cz(0.0, 0.0), 0.5).unwrap();
        assert!((p.re - 0.25 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn wronskian_is_one() {
        for &l in &[-0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.3, 3.0, 4.0] {
            let m = BesselModel::new(l).unwrap();
            for &z in &[cz(-3.0, 0.0), cz(0.0, 0.0), cz(5.0, 1.0), cz(-20.0, -7.0), cz(80.0, 0.5), cz(2e3, 30.0)] {
                for &x in &[0.2, 1.0, 2.0] {
                    let (p, dp) = m.phi(z, x).unwrap();
                    let (t, dt) = m.theta(z, x).unwrap();
                    let u = SolutionSample::new(z, x, t, dt);
                    let v = SolutionSample::new(z, x, p, dp);
                    let w = lagrange_bracket(&u, &v).unwrap();
                    let sc = (t.norm() * dp.norm()).max(dt.norm() * p.norm()).max(1.0);
                    assert!((w - 1.0).norm() < 1e-10 * sc, "l={l} z={z} x={x} W={w}");
                }
            }
        }
    }

    #[test]
    fn theta_continuous_across_switch() {
        for &l in &[0.0, 0.5, 1.0, 2.3] {
            let m = BesselModel::new(l).unwrap();
            for &arg in &[0.3f64, 1.5, 3.0] {
                let x = 1.0;
                let r = SERIES_LIMIT;
                let zi = Complex64::from_polar(r * (1.0 - 1e-12), arg);
                let zo = Complex64::from_polar(r * (1.0 + 1e-12), arg);
                let (a, da) = m.theta(zi, x).unwrap();
                let (b, db) = m.theta(zo, x).unwrap();
                assert!((a - b).norm() < 1e-9 * a.norm().max(1.0), "l={l} arg={arg} {a} {b}");
                assert!((da - db).norm() < 1e-9 * da.norm().max(1.0));
                let (a, _) = m.phi(zi, x).unwrap();
                let (b, _) = m.phi(zo, x).unwrap();
                assert!((a - b).norm() < 1e-9 * a.norm().max(1e-3));
            }
        }
    }

    #[test]
    fn weyl_function_values() {
        assert!((BesselModel::new(0.0).unwrap().m(cz(-4.0, 0.0)) + 2.0).norm() < 1e-14);
        assert!((BesselModel::new(1.0).unwrap().m(cz(-1.0, 0.0)) - 1.0).norm() < 1e-14);
        assert!(BesselModel::new(0.5).unwrap().m(cz(-1.0, 0.0)).norm() < 1e-15);
        assert!((BesselModel::new(0.0).unwrap().rho_density(4.0) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn psi_is_decaying_combination() {
        // theta + M phi must decay like e^{-sqrt(-z) x}
        for &l in &[0.0, 0.5, 1.0, 2.3] {
            let m = BesselModel::new(l).unwrap();
            let z = cz(-4.0, 1.0);
            let mm = m.m(z);
            let psi = |x: f64| {
                let (p, _) = m.phi(z, x).unwrap();
                let (t, _) = m.theta(z, x).unwrap();
                t + mm * p
            };
            let r = (psi(8.0) / psi(6.0)).norm();
            let expect = (-2.0 * (-z).sqrt().re).exp();
            assert!((r / expect - 1.0).abs() < 0.2, "l={l} ratio {r} vs {expect}");
        }
    }

    #[test]
    fn herglotz_matches_quadrature() {
        let m = BesselModel::new(0.0).unwrap();
        let v = m.herglotz_m(cz(-1.0, 0.0)).unwrap();
        let q: f64 = crate::quad::adaptive_to_infinity(
            |lam: f64| lam.sqrt() * (-lam).exp() / (PI * (lam + 1.0)),
            0.0,
            1e-12,
            1e-14,
        )
        .unwrap();
        assert!((v.re - q).abs() < 1e-9, "{v} vs {q}");
        assert!((v.re - 0.136606).abs() < 1e-6);
        assert!(m.herglotz_m(cz(0.0, 1.0)).unwrap().im > 0.0);
    }
}
