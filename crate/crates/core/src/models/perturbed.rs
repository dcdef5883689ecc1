use crate::error::{Error, Result};
use crate::quad;
use crate::schrodinger::{Potential, Tail};

const DECADES: usize = 12;

/// Per-decade integrals of `w(x) |qtilde(x)|` over `[10^{-k-1}, 10^{-k}]`, `k = 0..12`.
fn decade_weights<F: Fn(f64) -> f64>(qtilde: &F, weight: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..DECADES)
        .map(|k| {
            let hi = 10f64.powi(-(k as i32));
            quad::panels(|x: f64| weight(x) * qtilde(x).abs(), 0.1 * hi, hi, 6)
        })
        .collect()
}

/// `l(l+1)/x^2 + qtilde` on `(0, inf)`; with `validate` the weighted
/// integrability of `qtilde` near `0` is checked first.
pub fn perturbed_bessel<F>(l: f64, label: &str, qtilde: F, validate: bool) -> Result<Potential>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if !l.is_finite() || l < -0.5 {
        return Err(Error::Unsupported(format!("l = {l} < -1/2")));
    }
    if validate {
        let critical = l == -0.5;
        let (name, c) = if critical {
            ("x (1 - log x)", decade_weights(&qtilde, |x| x * (1.0 - x.ln())))
        } else {
            ("x", decade_weights(&qtilde, |x| x))
        };
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Rejected(format!("weighted perturbation {name}|qtilde| is not finite near 0")));
        }
        let total: f64 = c.iter().sum();
        let last = c[DECADES - 1];
        let earlier = c[DECADES - 4];
        if total > 0.0 && last > 1e-12 * total && last > 0.5 * earlier {
            return Err(Error::Rejected(format!(
                "{name}|qtilde(x)| is not integrable near 0: decade contributions {:.3e} -> {:.3e} do not decay",
                earlier, last
            )));
        }
    }
    Potential::from_qtilde(
        &format!("bessel+{label}:l={l}"),
        qtilde,
        0.0,
        f64::INFINITY,
        Some(l),
        Tail::LimitPointDecaying,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ErrorKind;

    #[test]
    fn integrability_rules() {
        assert!(perturbed_bessel(1.0, "coulomb", |x| 1.0 / x, true).is_ok());
        let e = perturbed_bessel(1.0, "inv-square", |x| 1.0 / (x * x), true).unwrap_err();
        assert_eq!(e.kind(), ErrorKind::Precondition);
        assert!(e.to_string().contains("x|qtilde"));
        assert!(perturbed_bessel(-0.5, "const", |_| 1.0, true).is_ok());
        let e = perturbed_bessel(-0.5, "inv-square", |x| 1.0 / (x * x), true).unwrap_err();
        assert!(e.to_string().contains("log"));
        // x^{-1.5}: x * x^{-1.5} integrable
        assert!(perturbed_bessel(0.0, "p", |x| x.powf(-1.5), true).is_ok());
    }

    #[test]
    fn unvalidated_accepts_anything() {
        assert!(perturbed_bessel(1.0, "inv-square", |x| 1.0 / (x * x), false).is_ok());
    }
}
