use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Increasing sequence of real zeros (eigenvalues).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSequence {
    pub zeros: Vec<f64>,
    /// Allows one zero at the origin; its factor `1 - z/0` is replaced by `z`.
    pub zero_flag: bool,
}

impl ZeroSequence {
    pub fn new(zeros: Vec<f64>) -> Result<Self> {
        Self::build(zeros, false)
    }

    pub fn with_zero_flag(zeros: Vec<f64>) -> Result<Self> {
        Self::build(zeros, true)
    }

    fn build(zeros: Vec<f64>, zero_flag: bool) -> Result<Self> {
        if zeros.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite zero".into()));
        }
        if zeros.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("zeros must be strictly increasing".into()));
        }
        Ok(ZeroSequence { zeros, zero_flag })
    }

    pub fn count(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Least-squares fit `sqrt(zeta_j) ~ slope*j + offset` over the upper half.
    pub fn weyl_fit(&self) -> Option<(f64, f64)> {
        let n = self.zeros.len();
        if n < 8 {
            return None;
        }
        let pts: Vec<(f64, f64)> = (n / 2..n)
            .filter(|&i| self.zeros[i] > 0.0)
            .map(|i| ((i + 1) as f64, self.zeros[i].sqrt()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        let offset = (sy - slope * sx) / m;
        if slope > 0.0 {
            Some((slope, offset))
        } else {
            None
        }
    }

    /// `(sum 1/zeta_j, sum 1/zeta_j^2)` over `j > n` from the Weyl fit.
    pub fn tail_sums(&self, n: usize) -> (f64, f64) {
        let Some((a, b)) = self.weyl_fit() else {
            return (0.0, 0.0);
        };
        let explicit = 20_000usize;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for j in (n + 1)..=(n + explicit) {
            let r = a * j as f64 + b;
            let lam = r * r;
            s1 += 1.0 / lam;
            s2 += 1.0 / (lam * lam);
        }
        // Euler-Maclaurin remainder from j = n + explicit + 1/2 onwards
        let r0 = a * ((n + explicit) as f64 + 0.5) + b;
        s1 += 1.0 / (a * r0);
        s2 += 1.0 / (3.0 * a * r0 * r0 * r0);
        (s1, s2)
    }
}

/// Truncation and tail handling for [`hadamard_eval`].
#[derive(Debug, Clone, Copy)]
pub struct ProductOptions {
    pub truncation: usize,
    pub tail: bool,
}

impl Default for ProductOptions {
    fn default() -> Self {
        ProductOptions {
            truncation: usize::MAX,
            tail: true,
        }
    }
}

/// `scale * prod_{j<=J} (1 - z/zeta_j)` times the exponential tail estimate
/// `exp(-z S1 - z^2 S2 / 2)` for the factors beyond `J`.
pub fn hadamard_eval(
    zeros: &ZeroSequence,
    z: Complex64,
    scale: f64,
    opts: ProductOptions,
) -> Result<Complex64> {
    if zeros.is_empty() {
        return Err(Error::Invalid("empty zero sequence".into()));
    }
    let n = opts.truncation.min(zeros.count());
    let mut log_sum = Complex64::new(0.0, 0.0);
    let mut prefactor = Complex64::new(scale, 0.0);
    let mut seen_origin = false;
    for &zeta in &zeros.zeros[..n] {
        if zeta == 0.0 {
            if !zeros.zero_flag || seen_origin {
                return Err(Error::Invalid(
                    "zero at the origin without the replacement flag".into(),
                ));
            }
            seen_origin = true;
            prefactor *= z;
            continue;
        }
        let f = Complex64::new(1.0, 0.0) - z / zeta;
        if f == Complex64::new(0.0, 0.0) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        log_sum += f.ln();
    }
    if opts.tail && n == zeros.count() {
        let (s1, s2) = zeros.tail_sums(n);
        log_sum += -z * s1 - 0.5 * z * z * s2;
    }
    let v = prefactor * log_sum.exp();
    if z.im == 0.0 {
        return Ok(Complex64::new(v.re, 0.0));
    }
    Ok(v)
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub excluded: bool,
    pub value: f64,
    pub bound: f64,
    pub a: f64,
    pub b: f64,
    pub satisfied: bool,
}

/// Checks `|prod (1 - z/zeta_j)| >= B exp(-A |z|^s)` outside the discs
/// `|z - zeta_j| < |zeta_j|^{-r}`, with `(A, B)` calibrated on a ring grid.
pub fn product_lower_bound_check(
    zeros: &ZeroSequence,
    z: Complex64,
    r: f64,
    s: f64,
) -> Result<LowerBoundReport> {
    if !(r > 0.0) || !(s > 0.0 && s < 1.0) {
        return Err(Error::Precondition(format!("need r > 0 and 0 < s < 1, got r={r}, s={s}")));
    }
    let in_disc = |p: Complex64| {
        zeros
            .zeros
            .iter()
            .any(|&zj| zj != 0.0 && (p - zj).norm() < zj.abs().powf(-r))
    };
    let opts = ProductOptions::default();
    let rmax = zeros.zeros.last().map(|v| v.abs()).unwrap_or(1.0).max(1.0);
    let mut a: f64 = 0.0;
    let b = 1.0;
    let rings = 24;
    let angles = 32;
    for i in 0..rings {
        let radius = rmax.powf((i + 1) as f64 / rings as f64);
        for k in 0..angles {
            let th = std::f64::consts::PI * (k as f64 + 0.5) / angles as f64 * 2.0;
            let p = Complex64::from_polar(radius, th);
            if in_disc(p) {
                continue;
            }
            let v = hadamard_eval(zeros, p, 1.0, opts)?.norm();
            if v > 0.0 {
                a = a.max(-(v / b).ln() / radius.powf(s));
            }
        }
    }
    let excluded = in_disc(z);
    let value = hadamard_eval(zeros, z, 1.0, opts)?.norm();
    let bound = b * (-a * z.norm().powf(s)).exp();
    Ok(LowerBoundReport {
        excluded,
        value,
        bound,
        a,
        b,
        satisfied: excluded || value >= bound,
    })
}
