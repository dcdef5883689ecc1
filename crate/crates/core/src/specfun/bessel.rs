//! Bessel functions of real order and complex argument.
//!
//! Power series (accumulated in double-double) for `|w| <= 20`, Hankel
//! asymptotic expansion beyond. Half-integer orders switch to the terminating
//! trigonometric form as soon as it is well conditioned.

use super::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use num_complex::Complex64;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

pub const SERIES_RADIUS: f64 = 20.0;
const MAX_TERMS: usize = 400;
const EXP_LIMIT: f64 = 700.0;

fn is_integer(x: f64) -> bool {
    x == x.round()
}

fn is_half_integer(x: f64) -> bool {
    is_integer(x - 0.5)
}

/// Normalized Bessel series `S(nu, t) = sum_k (-t)^k / (k! (nu+1)_k)`.
///
/// `J_nu(w) = (w/2)^nu S(nu, w^2/4) / Gamma(nu+1)`. Entire in `t`.
pub fn bessel_series(nu: f64, t: Complex64) -> Result<Complex64> {
    if nu < 0.0 && is_integer(nu) {
        return Err(Error::Invalid(format!(
            "bessel series undefined for negative integer order {nu}"
        )));
    }
    let mt = Cdd::from_c(-t);
    let mut term = Cdd::real(Dd::new(1.0));
    let mut sum = term;
    let nu_dd = Dd::new(nu);
    let tabs = t.norm();
    for k in 1..MAX_TERMS {
        let kd = Dd::new(k as f64);
        let denom = kd * (nu_dd + kd);
        term = (term * mt).div_real(denom);
        sum = sum + term;
        let tn = term.norm1();
        if (k as f64) * (k as f64) > tabs && tn <= 1e-18 * sum.norm1().max(1e-300) {
            return Ok(sum.to_c());
        }
        if tn == 0.0 {
            return Ok(sum.to_c());
        }
    }
    Err(Error::NoConvergence(format!("bessel series at t = {t}")))
}

/// Sums needed for integer-order Neumann functions:
/// `A = sum_k d_k u_k` and `B = sum_k k d_k u_k` where
/// `u_k = (-t)^k / (k! (n+k)!)` and `d_k = psi(k+1) + psi(n+k+1)`.
pub(crate) fn log_series(n: u32, t: Complex64) -> Result<(Complex64, Complex64)> {
    let mt = Cdd::from_c(-t);
    let one = Dd::new(1.0);
    let mut fact_n = Dd::new(1.0);
    let mut h_n = Dd::ZERO;
    for j in 1..=n {
        fact_n = fact_n * Dd::new(j as f64);
        h_n = h_n + one / Dd::new(j as f64);
    }
    let two_gamma = Dd::EULER_GAMMA + Dd::EULER_GAMMA;
    let mut hk = Dd::ZERO;
    let mut hnk = h_n;
    let mut u = Cdd::real(one / fact_n);
    let mut a = u.scale(hk + hnk - two_gamma);
    let mut b = Cdd::ZERO;
    let tabs = t.norm();
    for k in 1..MAX_TERMS {
        let kd = Dd::new(k as f64);
        let nk = Dd::new((n as usize + k) as f64);
        u = (u * mt).div_real(kd * nk);
        hk = hk + one / kd;
        hnk = hnk + one / nk;
        let term = u.scale(hk + hnk - two_gamma);
        a = a + term;
        b = b + term.scale(kd);
        let tn = term.norm1() * (k as f64);
        if (k as f64) * (k as f64) > tabs && tn <= 1e-18 * (a.norm1() + b.norm1()).max(1e-300) {
            return Ok((a.to_c(), b.to_c()));
        }
    }
    Err(Error::NoConvergence(format!("neumann log series at t = {t}")))
}

/// Hankel expansion pieces: `(P, Q)` with the `w`-powers already applied.
fn hankel_pq(nu: f64, w: Complex64) -> (Complex64, Complex64) {
    let mu = 4.0 * nu * nu;
    let mut p = Complex64::new(1.0, 0.0);
    let mut q = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    let inv8w = 1.0 / (8.0 * w);
    for k in 1..200usize {
        let odd = (2 * k - 1) as f64;
        term = term * (mu - odd * odd) * inv8w / (k as f64);
        let mag = term.norm();
        if mag == 0.0 {
            break;
        }
        if mag > last {
            break;
        }
        last = mag;
        let signed = match k % 4 {
            0 | 1 => term,
            _ => -term,
        };
        if k % 2 == 0 {
            p += signed;
        } else {
            q += signed;
        }
        if mag < 1e-17 * (p.norm() + q.norm()) {
            break;
        }
    }
    (p, q)
}

/// Returns `(J_nu(w), Y_nu(w))` multiplied by `exp(-|Im w|)` from the Hankel form.
fn hankel_scaled(nu: f64, w: Complex64) -> (Complex64, Complex64) {
    let (p, q) = hankel_pq(nu, w);
    let chi = w - (0.5 * nu + 0.25) * PI;
    let s = chi.im.abs();
    let i = Complex64::i();
    let ep = (i * chi - s).exp();
    let em = (-i * chi - s).exp();
    let cos = 0.5 * (ep + em);
    let sin = (ep - em) / (2.0 * i);
    let pre = (2.0 / (PI * w)).sqrt();
    let shift = (s - w.im.abs()).exp();
    (
        pre * (p * cos - q * sin) * shift,
        pre * (p * sin + q * cos) * shift,
    )
}

fn use_closed_form(nu: f64, w: Complex64) -> bool {
    let r = w.norm();
    if r > SERIES_RADIUS {
        return true;
    }
    is_half_integer(nu) && r >= 0.5 * nu * nu + 1.0
}

fn j_series(nu: f64, w: Complex64) -> Result<Complex64> {
    if w == Complex64::new(0.0, 0.0) {
        return Ok(if nu == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        });
    }
    let s = bessel_series(nu, 0.25 * w * w)?;
    Ok((0.5 * w).powf(nu) * s / gamma(nu + 1.0))
}

fn y_integer_series(n: u32, w: Complex64) -> Result<Complex64> {
    let half = 0.5 * w;
    let t = half * half;
    let jn = j_series(n as f64, w)?;
    let mut finite = Complex64::new(0.0, 0.0);
    if n > 0 {
        let mut fact = vec![1.0f64; n as usize + 1];
        for j in 1..=n as usize {
            fact[j] = fact[j - 1] * j as f64;
        }
        for k in 0..n as usize {
            let c = fact[n as usize - k - 1] / fact[k];
            finite += c * half.powi(2 * k as i32 - n as i32);
        }
    }
    let (a, _) = log_series(n, t)?;
    Ok((2.0 / PI) * jn * half.ln() - finite / PI - half.powi(n as i32) * a / PI)
}

/// `J_nu(w)` and `Y_nu(w)` scaled by `exp(-|Im w|)`; never overflows.
pub fn bessel_jy_scaled(nu: f64, w: Complex64) -> Result<(Complex64, Complex64)> {
    check_args(nu, w)?;
    if nu < 0.0 && is_integer(nu) {
        let (j, y) = bessel_jy_scaled(-nu, w)?;
        let sgn = if (nu as i64) % 2 == 0 { 1.0 } else { -1.0 };
        return Ok((sgn * j, sgn * y));
    }
    if use_closed_form(nu, w) {
        return Ok(hankel_scaled(nu, w));
    }
    let scale = (-w.im.abs()).exp();
    let j = j_series(nu, w)?;
    let y = if is_integer(nu) {
        y_integer_series(nu as u32, w)?
    } else {
        let jm = j_series(-nu, w)?;
        let (s, c) = (nu * PI).sin_cos();
        (j * c - jm) / s
    };
    Ok((j * scale, y * scale))
}

fn check_args(nu: f64, w: Complex64) -> Result<()> {
    if !nu.is_finite() || !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::Invalid(format!("non-finite bessel argument ({nu}, {w})")));
    }
    Ok(())
}

fn unscale(v: Complex64, w: Complex64, what: &str) -> Result<Complex64> {
    let s = w.im.abs();
    if s > EXP_LIMIT {
        return Err(Error::Overflow(format!(
            "{what}: exp(|Im w|) out of range at w = {w}; use the scaled variant"
        )));
    }
    Ok(v * s.exp())
}

/// Bessel function of the first kind `J_nu(w)`, principal branch.
pub fn bessel_j(nu: f64, w: Complex64) -> Result<Complex64> {
    if !use_closed_form(nu, w) && !(nu < 0.0 && is_integer(nu)) {
        check_args(nu, w)?;
        return j_series(nu, w);
    }
    let (j, _) = bessel_jy_scaled(nu, w)?;
    unscale(j, w, "bessel_j")
}

/// Bessel function of the second kind `Y_nu(w)`, principal branch.
pub fn bessel_y(nu: f64, w: Complex64) -> Result<Complex64> {
    let (_, y) = bessel_jy_scaled(nu, w)?;
    unscale(y, w, "bessel_y")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn half_order_examples() {
        assert!(bessel_j(0.5, c(PI, 0.0)).unwrap().norm() < 1e-15);
        let v = bessel_j(0.5, c(1.0, 0.0)).unwrap();
        assert!((v.re - 0.671396707141803).abs() < 1e-14);
        assert!(bessel_y(0.5, c(PI / 2.0, 0.0)).unwrap().norm() < 1e-15);
        let y = bessel_y(0.5, c(1.0, 0.0)).unwrap();
        assert!((y.re + (2.0 / PI).sqrt() * 1f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn y_three_halves() {
        let w = 1.0f64;
        let oracle = -(2.0 / (PI * w)).sqrt() * (w.cos() / w + w.sin());
        let y = bessel_y(1.5, c(w, 0.0)).unwrap();
        assert!((y.re - oracle).abs() < 1e-13);
        assert!((y.re + 1.102495575160179).abs() < 1e-12);
    }

    #[test]
    fn root_of_tan_w_equals_w() {
        let (mut lo, mut hi) = (4.4f64, 4.6f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if (mid.tan() - mid) * (lo.tan() - lo) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!((root - 4.493409).abs() < 1e-6);
        assert!(bessel_j(1.5, c(root, 0.0)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn integer_orders_match_reference() {
        // reference values: J0(1), Y0(1), J1(2.5), Y1(2.5), Y2(0.3+0.4i)
        let j0 = bessel_j(0.0, c(1.0, 0.0)).unwrap();
        assert!((j0.re - 0.7651976865579666).abs() < 1e-15);
        let y0 = bessel_y(0.0, c(1.0, 0.0)).unwrap();
        assert!((y0.re - 0.08825696421567696).abs() < 1e-14);
        let j1 = bessel_j(1.0, c(2.5, 0.0)).unwrap();
        assert!((j1.re - 0.4970941024642741).abs() < 1e-14);
        let y1 = bessel_y(1.0, c(2.5, 0.0)).unwrap();
        assert!((y1.re - 0.1459181379667858).abs() < 1e-14);
    }

    #[test]
    fn negative_integer_order_reflects() {
        let w = c(3.1, 0.7);
        let a = bessel_j(-3.0, w).unwrap();
        let b = bessel_j(3.0, w).unwrap();
        assert!((a + b).norm() < 1e-14 * b.norm());
    }

    #[test]
    fn continuity_across_switch() {
        for &nu in &[0.0, 0.3, 1.0, 2.3, 4.0] {
            for k in 0..12 {
                let arg = -PI / 2.0 + PI * k as f64 / 11.0;
                let inside = Complex64::from_polar(SERIES_RADIUS * (1.0 - 1e-12), arg);
                let outside = Complex64::from_polar(SERIES_RADIUS * (1.0 + 1e-12), arg);
                let (ji, yi) = bessel_jy_scaled(nu, inside).unwrap();
                let (jo, yo) = bessel_jy_scaled(nu, outside).unwrap();
                let scale = ji.norm().max(yi.norm());
                assert!((ji - jo).norm() < 1e-10 * scale, "J nu={nu} arg={arg}");
                assert!((yi - yo).norm() < 1e-10 * scale, "Y nu={nu} arg={arg}");
            }
        }
    }

    #[test]
    fn large_imaginary_argument_overflows_cleanly() {
        let w = c(0.0, 800.0);
        assert!(matches!(bessel_j(0.5, w), Err(Error::Overflow(_))));
        assert!(bessel_jy_scaled(0.5, w).unwrap().0.norm().is_finite());
    }
}
