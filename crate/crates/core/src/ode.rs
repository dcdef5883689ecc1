//! Dormand-Prince 5(4) integrator over fixed-size real or complex states,
//! with step recording for cubic Hermite dense output.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

pub trait Scalar:
    Copy + Default + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_init: Option<f64>,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol,
            ..Default::default()
        }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
            h_init: None,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin<T: Scalar, const N: usize>(y: &[T; N], h: f64, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        for i in 0..N {
            out[i] = out[i] + k[i] * (h * c);
        }
    }
    out
}

/// Accepted steps `(x, y, y')` recorded for dense output.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Scalar, const N: usize> {
    pub xs: Vec<f64>,
    pub ys: Vec<[T; N]>,
    pub fs: Vec<[T; N]>,
}

impl<T: Scalar, const N: usize> Default for Trajectory<T, N> {
    fn default() -> Self {
        Trajectory {
            xs: Vec::new(),
            ys: Vec::new(),
            fs: Vec::new(),
        }
    }
}

impl<T: Scalar, const N: usize> Trajectory<T, N> {
    fn push(&mut self, x: f64, y: [T; N], f: [T; N]) {
        self.xs.push(x);
        self.ys.push(y);
        self.fs.push(f);
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        let a = *self.xs.first()?;
        let b = *self.xs.last()?;
        Some((a.min(b), a.max(b)))
    }

    /// Cubic Hermite interpolation between recorded steps.
    pub fn eval(&self, x: f64) -> Option<[T; N]> {
        let n = self.xs.len();
        if n < 2 {
            return None;
        }
        let increasing = self.xs[n - 1] > self.xs[0];
        let (lo, hi) = self.range()?;
        if x < lo - 1e-14 * lo.abs().max(1.0) || x > hi + 1e-14 * hi.abs().max(1.0) {
            return None;
        }
        let idx = if increasing {
            self.xs.partition_point(|&v| v <= x)
        } else {
            self.xs.partition_point(|&v| v >= x)
        };
        let i = idx.clamp(1, n - 1) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let mut out = [T::default(); N];
        for k in 0..N {
            out[k] = self.ys[i][k] * h00
                + self.fs[i][k] * (h * h10)
                + self.ys[i + 1][k] * h01
                + self.fs[i + 1][k] * (h * h11);
        }
        Some(out)
    }
}

fn err_norm<T: Scalar, const N: usize>(
    err: &[T; N],
    y0: &[T; N],
    y1: &[T; N],
    opts: &OdeOptions,
) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y0[i].magnitude().max(y1[i].magnitude());
        m = m.max(err[i].magnitude() / sc);
    }
    m
}

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction).
pub fn solve<T, const N: usize, F>(
    mut f: F,
    x0: f64,
    y0: [T; N],
    x1: f64,
    opts: &OdeOptions,
    mut traj: Option<&mut Trajectory<T, N>>,
) -> Result<[T; N]>
where
    T: Scalar,
    F: FnMut(f64, &[T; N]) -> [T; N],
{
    if x0 == x1 {
        return Ok(y0);
    }
    let dir = if x1 > x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    if let Some(t) = traj.as_deref_mut() {
        t.push(x, y, k1);
    }
    let mut h = match opts.h_init {
        Some(h) => h.abs().min(span),
        None => initial_step(&y, &k1, span, opts),
    } * dir;
    for _ in 0..opts.max_steps {
        let remaining = x1 - x;
        let last = (h.abs() >= remaining.abs()) || remaining.abs() <= 1e-15 * x.abs().max(1.0);
        if last {
            h = remaining;
        }
        let k2 = f(x + C2 * h, &lin(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &lin(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * h, &lin(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            x + C5 * h,
            &lin(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            x + h,
            &lin(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let yn = lin(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(x + h, &yn);
        let mut e = [T::default(); N];
        for i in 0..N {
            e[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * h;
        }
        let en = err_norm(&e, &y, &yn, opts);
        if !en.is_finite() {
            h *= 0.2;
            if h.abs() < 1e-14 * x.abs().max(1e-3) {
                return Err(Error::StepUnderflow { x });
            }
            continue;
        }
        if en <= 1.0 {
            x = if last { x1 } else { x + h };
            y = yn;
            k1 = k7;
            if let Some(t) = traj.as_deref_mut() {
                t.push(x, y, k1);
            }
            if last {
                return Ok(y);
            }
            let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            h *= (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
            if h.abs() < 1e-14 * x.abs().max(1e-3) {
                return Err(Error::StepUnderflow { x });
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "step budget exhausted integrating from {x0} to {x1} (reached {x})"
    )))
}

fn initial_step<T: Scalar, const N: usize>(
    y: &[T; N],
    f: &[T; N],
    span: f64,
    opts: &OdeOptions,
) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].magnitude();
        d0 = d0.max(y[i].magnitude() / sc);
        d1 = d1.max(f[i].magnitude() / sc);
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-12 * span)
}
