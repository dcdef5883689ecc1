//! Gauss-Legendre panels and adaptive Gauss-Kronrod quadrature.

use crate::error::{Error, Result};
use crate::ode::Scalar;
use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Cached 16-point rule used for panel quadrature.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(16))
}

/// Fixed Gauss-Legendre quadrature over equal panels.
pub fn panels<T: Scalar, F: FnMut(f64) -> T>(mut f: F, a: f64, b: f64, npanels: usize) -> T {
    let (x, w) = gl16();
    let h = (b - a) / npanels as f64;
    let mut s = T::default();
    for p in 0..npanels {
        let c = a + (p as f64 + 0.5) * h;
        for i in 0..x.len() {
            s = s + f(c + 0.5 * h * x[i]) * (0.5 * h * w[i]);
        }
    }
    s
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<T: Scalar, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).magnitude())
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[a, b]`.
pub fn adaptive<T: Scalar, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    rtol: f64,
    atol: f64,
) -> Result<T> {
    if a == b {
        return Ok(T::default());
    }
    let mut intervals: Vec<(f64, f64, T, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    intervals.push((a, b, v, e));
    for _ in 0..4000 {
        let mut total = T::default();
        let mut err = 0.0;
        let mut worst = 0;
        for (i, iv) in intervals.iter().enumerate() {
            total = total + iv.2;
            err += iv.3;
            if iv.3 > intervals[worst].3 {
                worst = i;
            }
        }
        if err <= atol.max(rtol * total.magnitude()) {
            return Ok(total);
        }
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() < 1e-15 * lo.abs().max(hi.abs()).max(1e-300) {
            return Err(Error::NoConvergence(format!("quadrature interval collapsed near {mid}")));
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    Err(Error::NoConvergence(format!("adaptive quadrature on [{a}, {b}]")))
}

/// Adaptive quadrature over `[a, inf)` through `x = a + t/(1-t)`.
pub fn adaptive_to_infinity<T: Scalar, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    rtol: f64,
    atol: f64,
) -> Result<T> {
    adaptive(
        |t: f64| {
            if t >= 1.0 {
                return T::default();
            }
            let s = 1.0 - t;
            f(a + t / s) * (1.0 / (s * s))
        },
        0.0,
        1.0,
        rtol,
        atol,
    )
}
