use crate::error::{Error, Result};
use num_complex::Complex64;
use statrs::function::gamma::gamma;

const MAX_ITER: usize = 2000;
const TINY: f64 = 1e-300;
const EULER: f64 = 0.577_215_664_901_532_9;

/// Upper incomplete gamma function `Gamma(a, w)` for real `a`, complex `w`
/// off the negative real axis.
pub fn incomplete_gamma_upper(a: f64, w: Complex64) -> Result<Complex64> {
    if !a.is_finite() || !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::Invalid(format!("non-finite incomplete gamma argument ({a}, {w})")));
    }
    let zero = Complex64::new(0.0, 0.0);
    let nonpos_int = a <= 0.0 && a == a.round();
    if w == zero {
        if a > 0.0 {
            return Ok(Complex64::new(gamma(a), 0.0));
        }
        return Err(Error::Pole(format!("Gamma({a}, 0) is infinite")));
    }
    if w.im == 0.0 && w.re < 0.0 && a != a.round() {
        return Err(Error::Invalid(format!("Gamma({a}, w) evaluated on the branch cut at w = {w}")));
    }
    if w.norm() > (a + 4.0).max(6.0) {
        return continued_fraction(a, w);
    }
    if nonpos_int {
        return negative_integer(-a as u32, w);
    }
    Ok(gamma(a) - lower_series(a, w)?)
}

fn lower_series(a: f64, w: Complex64) -> Result<Complex64> {
    let mut term = Complex64::new(1.0 / a, 0.0);
    let mut sum = term;
    for k in 1..MAX_ITER {
        term = term * w / (a + k as f64);
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            return Ok(sum * (a * w.ln() - w).exp());
        }
    }
    Err(Error::NoConvergence(format!("incomplete gamma series at ({a}, {w})")))
}

fn continued_fraction(a: f64, w: Complex64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let mut b = w + 1.0 - a;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = one / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.norm() < TINY {
            d = Complex64::new(TINY, 0.0);
        }
        c = b + an / c;
        if c.norm() < TINY {
            c = Complex64::new(TINY, 0.0);
        }
        d = one / d;
        let del = d * c;
        h *= del;
        if (del - one).norm() < 1e-16 {
            return Ok(h * (a * w.ln() - w).exp());
        }
    }
    Err(Error::NoConvergence(format!("incomplete gamma continued fraction at ({a}, {w})")))
}

fn exp_integral_e1(w: Complex64) -> Result<Complex64> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..MAX_ITER {
        term = -term * w / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.norm() < 1e-17 * sum.norm().max(1e-300) {
            return Ok(-EULER - w.ln() - sum);
        }
    }
    Err(Error::NoConvergence(format!("E1 series at {w}")))
}

fn negative_integer(n: u32, w: Complex64) -> Result<Complex64> {
    // Gamma(-n, w) = (-1)^n / n! [E1(w) - e^{-w} sum_{k<n} (-1)^k k! / w^{k+1}]
    let e1 = exp_integral_e1(w)?;
    let mut s = Complex64::new(0.0, 0.0);
    let mut fact = 1.0;
    for k in 0..n {
        if k > 0 {
            fact *= k as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * fact / w.powi(k as i32 + 1);
    }
    let nfact: f64 = (1..=n).map(|j| j as f64).product();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign / nfact * (e1 - (-w).exp() * s))
}
