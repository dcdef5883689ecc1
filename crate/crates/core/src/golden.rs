//! Reproduction suite: one check per acceptance criterion, each reporting the
//! measured quantity against its tolerance.

use crate::bm;
use crate::eigen::dirichlet_eigs;
use crate::error::Result;
use crate::models::{lc_singular_m, BesselModel, LimitCircleSystem, SolitonModel};
use crate::nevanlinna::{bessel_k_bound, bessel_kappa, default_points, herglotzify, kernel_negative_squares, minimal_k};
use crate::quad::{self, gl16};
use crate::schrodinger::Potential;
use crate::spectral::{
    norming_constant, oscillation_period, parseval_norm, resolvent_image_check, round_trip, stieltjes_invert,
    stieltjes_invert_on, transform_forward, SpectralMeasure, TestFunction, DEFAULT_EPS,
};
use crate::weyl::{singular_m, weyl_solution_psi_many, SolutionSystem};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
}

pub const NAMES: [&str; 12] = [
    "Bessel m-function, ODE route vs closed form",
    "Stieltjes inversion of Bessel M_l",
    "Coulomb l=1 eigenvalue asymptotics",
    "Wronskian suite",
    "Nevanlinna kernel negative squares",
    "Representation power bound",
    "Soliton golden",
    "Parseval and round trip",
    "Herglotz rescaling",
    "Limit-circle Im M(i) = |psi|^2",
    "Borg-Marchenko evidence",
    "Resolvent image identity",
];

struct Outcome {
    passed: bool,
    measured: f64,
    tolerance: f64,
    detail: String,
}

fn cz(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Run criterion `id` (1-based).
pub fn run(id: usize) -> Result<CriterionResult> {
    let t = Instant::now();
    let o = match id {
        1 => c1()?,
        2 => c2()?,
        3 => c3()?,
        4 => c4()?,
        5 => c5()?,
        6 => c6()?,
        7 => c7()?,
        8 => c8()?,
        9 => c9()?,
        10 => c10()?,
        11 => c11()?,
        12 => c12()?,
        _ => return Err(crate::Error::Invalid(format!("no criterion {id}"))),
    };
    Ok(CriterionResult {
        id,
        name: NAMES[id - 1].to_string(),
        passed: o.passed,
        measured: o.measured,
        tolerance: o.tolerance,
        detail: o.detail,
        seconds: t.elapsed().as_secs_f64(),
    })
}

/// Every criterion; failures to evaluate are reported as failed rows.
pub fn run_all() -> Vec<CriterionResult> {
    (1..=12)
        .map(|id| {
            run(id).unwrap_or_else(|e| CriterionResult {
                id,
                name: NAMES[id - 1].to_string(),
                passed: false,
                measured: f64::NAN,
                tolerance: f64::NAN,
                detail: format!("error: {e}"),
                seconds: 0.0,
            })
        })
        .collect()
}

pub fn format_row(r: &CriterionResult) -> String {
    format!(
        "[{}] {:>2} {:<44} measured {:.3e} tol {:.1e} ({:.1}s) {}",
        if r.passed { "PASS" } else { "FAIL" },
        r.id,
        r.name,
        r.measured,
        r.tolerance,
        r.seconds,
        r.detail
    )
}

/// 50 points with `|z| <= 100`, `|Im z| >= 0.1`.
pub fn criterion1_points() -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut out = Vec::new();
    while out.len() < 50 {
        let r = (0.2f64.ln() + rng.gen::<f64>() * (100.0f64 / 0.2).ln()).exp();
        let a = -PI + 2.0 * PI * rng.gen::<f64>();
        let z = Complex64::from_polar(r, a);
        if z.im.abs() >= 0.1 {
            out.push(z);
        }
    }
    out
}

fn c1() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for l in [0.0, 1.0] {
        let model = BesselModel::new(l)?;
        let pot = model.potential()?;
        let sys = SolutionSystem::bessel(model);
        for z in criterion1_points() {
            let m = singular_m(&sys, &pot, 1.0, z, 1e-11)?;
            let e = model.m(z);
            worst = worst.max((m - e).norm() / e.norm());
        }
    }
    Ok(Outcome {
        passed: worst <= 1e-6,
        measured: worst,
        tolerance: 1e-6,
        detail: "max relative error, l in {0,1}, 50 points".into(),
    })
}

fn c2() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for l in [0.0, 1.0, 2.0] {
        let model = BesselModel::new(l)?;
        let m = move |z: Complex64| Ok(model.m(z));
        let meas = stieltjes_invert(&m, (0.5, 50.0), 100, &DEFAULT_EPS)?;
        for (lam, d) in meas.grid.iter().zip(&meas.density) {
            let e = lam.powf(l + 0.5) / PI;
            worst = worst.max((d - e).abs() / e);
        }
    }
    Ok(Outcome {
        passed: worst <= 1e-3,
        measured: worst,
        tolerance: 1e-3,
        detail: "max relative density error on [0.5, 50], l in {0,1,2}".into(),
    })
}

/// `sqrt(mu_j) - pi (j + 1/2)` for `j = 1..=40` (counting from one).
pub fn coulomb_defects() -> Result<Vec<f64>> {
    let pot = Potential::coulomb(1.0, 1.0)?;
    let mu = dirichlet_eigs(&pot, 1.0, 40)?;
    Ok(mu
        .zeros
        .iter()
        .enumerate()
        .map(|(i, m)| (m.sqrt() - PI * ((i + 1) as f64 + 0.5)).abs())
        .collect())
}

fn c3() -> Result<Outcome> {
    let d = coulomb_defects()?;
    let tail = &d[19..];
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    let worst = tail.iter().cloned().fold(0.0, f64::max);
    Ok(Outcome {
        passed: decreasing && worst < 0.05,
        measured: worst,
        tolerance: 0.05,
        detail: format!("max defect for j >= 20, decreasing: {decreasing}, j = 40: {:.4e}", d[39]),
    })
}

fn wronskian(sys: &SolutionSystem, z: Complex64, x: f64) -> Result<f64> {
    let p = sys.phi_at(z, x)?;
    let t = sys.theta_at(z, x)?;
    Ok((t.u * p.du - t.du * p.u - 1.0).norm())
}

pub const WRONSKIAN_Z: [(f64, f64); 5] = [(-3.0, 0.0), (2.0, 1.0), (-1.0, -2.0), (10.0, 0.5), (0.0, 0.5)];
pub const WRONSKIAN_X: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

fn c4() -> Result<Outcome> {
    let mut closed: f64 = 0.0;
    let mut systems = Vec::new();
    for l in [0.0, 1.0, 2.0, 0.25, -0.3] {
        systems.push(SolutionSystem::bessel(BesselModel::new(l)?));
    }
    systems.push(SolitonModel::real(1.0, 0.0)?.system());
    systems.push(SolitonModel::real(1.0, 1.0)?.system());
    for s in &systems {
        for &(a, b) in &WRONSKIAN_Z {
            for &x in &WRONSKIAN_X {
                closed = closed.max(wronskian(s, cz(a, b), x)?);
            }
        }
    }
    let mut numeric: f64 = 0.0;
    let pot = Potential::coulomb(1.0, 1.0)?;
    let lc_pot = Potential::bessel(0.25)?;
    let lc = LimitCircleSystem::new(&lc_pot, 0.0, 1.0)?;
    for s in [SolutionSystem::numeric(&pot, 1.0, 1e-11), lc.system()] {
        for &(a, b) in &WRONSKIAN_Z {
            for &x in &WRONSKIAN_X {
                numeric = numeric.max(wronskian(&s, cz(a, b), x)?);
            }
        }
    }
    Ok(Outcome {
        passed: closed <= 1e-9 && numeric <= 1e-6,
        measured: closed,
        tolerance: 1e-9,
        detail: format!("closed-form max {closed:.2e} (tol 1e-9), numeric/limit-circle max {numeric:.2e} (tol 1e-6)"),
    })
}

fn c5() -> Result<Outcome> {
    let pts = default_points(30, 7);
    let mut mismatches = 0;
    let mut detail = Vec::new();
    for l in [0.0, 1.0, 2.0, 3.0, 4.0] {
        let model = BesselModel::new(l)?;
        let m = move |z: Complex64| Ok(model.m(z));
        let k = kernel_negative_squares(&m, &pts, 20, 11)?;
        let want = bessel_kappa(l)?;
        let stable = k.per_trial.iter().all(|&c| c == want);
        if k.kappa != want || !stable {
            mismatches += 1;
        }
        detail.push(format!("l={l}: {}", k.kappa));
    }
    Ok(Outcome {
        passed: mismatches == 0,
        measured: mismatches as f64,
        tolerance: 0.0,
        detail: detail.join(", "),
    })
}

/// Bessel measure with the closed-form density on `[0, hi]`, quadratically graded grid.
pub fn bessel_measure(l: f64, hi: f64, n: usize) -> Result<SpectralMeasure> {
    let model = BesselModel::new(l)?;
    let grid: Vec<f64> = (0..n).map(|i| hi * (i as f64 / (n - 1) as f64).powi(2)).collect();
    SpectralMeasure::from_density(grid, |x| model.rho_density(x))
}

fn c6() -> Result<Outcome> {
    let mut ok = true;
    let mut detail = Vec::new();
    for l in [0.0, 1.0, 2.0, 3.0] {
        let k = minimal_k(&bessel_measure(l, 1e4, 400)?, 6)?.k;
        let bound = bessel_k_bound(l)?;
        let good = match k {
            Some(k) => k <= bound && (l != 0.0 || k < bound),
            None => false,
        };
        ok &= good;
        detail.push(format!("l={l}: k_min={k:?} bound={bound}"));
    }
    Ok(Outcome {
        passed: ok,
        measured: if ok { 0.0 } else { 1.0 },
        tolerance: 0.0,
        detail: detail.join(", "),
    })
}

fn soliton_residual(m: &SolitonModel, z: Complex64, x: f64) -> Result<f64> {
    let h = 1e-4;
    let v = m.solutions(z, x)?;
    let p = m.solutions(z, x + h)?;
    let n = m.solutions(z, x - h)?;
    let q = m.fields(x).q;
    let mut worst: f64 = 0.0;
    for k in [0, 2] {
        let d2 = (p[k] - 2.0 * v[k] + n[k]) / (h * h);
        let res = -d2 + (q - z) * v[k];
        worst = worst.max(res.norm() / (1.0 + v[k].norm() * (q.abs() + z.norm())));
    }
    Ok(worst)
}

fn c7() -> Result<Outcome> {
    let mut residual: f64 = 0.0;
    let zero = SolitonModel::real(1.0, 0.0)?;
    let one = SolitonModel::real(1.0, 1.0)?;
    for m in [&zero, &one] {
        for &(a, b) in &WRONSKIAN_Z {
            for x in [0.3, 1.0, 2.2] {
                residual = residual.max(soliton_residual(m, cz(a, b), x)?);
            }
        }
    }
    let m_at = zero.m(cz(-1.0, 0.0))?;
    let mfun = move |z: Complex64| one.m(z);
    let nc = norming_constant(&mfun, -1.0)?;
    let meas = stieltjes_invert(&mfun, (-3.0, 3.0), 61, &DEFAULT_EPS)?;
    let atom_ok = meas.atoms.len() == 1 && (meas.atoms[0].0 + 1.0).abs() < 1e-8 && (meas.atoms[0].1 - 8.0).abs() < 1e-3;
    // outside [1e-3, 25] the integrand is below 1e-16
    let phi2: f64 = quad::adaptive(
        |x: f64| one.solutions(cz(-1.0, 0.0), x).map(|v| v[0].re * v[0].re).unwrap_or(f64::NAN),
        1e-3,
        25.0,
        1e-13,
        1e-16,
    )?;
    let nc_err = (phi2 - 0.125).abs();
    let passed = residual <= 1e-6 && (m_at.re - 4.0).abs() < 1e-9 && (nc - 8.0).abs() < 1e-6 && atom_ok && nc_err <= 1e-6;
    Ok(Outcome {
        passed,
        measured: nc_err,
        tolerance: 1e-6,
        detail: format!(
            "residual {residual:.1e}, M(-1) = {:.12}, residue {:.9}, atom {:?}, int phi^2 = {phi2:.10}",
            m_at.re,
            -nc,
            meas.atoms
        ),
    })
}

/// Parseval total and round-trip defect for `l = 0`, `f = chi[0,1]`, cutoff `lambda = w_max^2`.
pub fn parseval_round_trip(w_max: f64) -> Result<(crate::spectral::ParsevalReport, f64)> {
    let b = BesselModel::new(0.0)?;
    let sys = SolutionSystem::bessel(b);
    let n = (w_max / 0.05).round() as usize;
    let grid: Vec<f64> = (1..=n).map(|i| (i as f64 * 0.05).powi(2)).collect();
    let m = move |z: Complex64| Ok(b.m(z));
    let meas = stieltjes_invert_on(&m, grid, &DEFAULT_EPS)?;
    let f = TestFunction::indicator(0.0, 1.0)?;
    let h = transform_forward(&sys, &f, &meas)?;
    let p = parseval_norm(&meas, &h, Some(oscillation_period(&f, 0.0)))?;
    let r = round_trip(&sys, &meas, &f, &h, (0.0, 2.0))?;
    Ok((p, r.relative_defect))
}

fn c8() -> Result<Outcome> {
    let (p, defect) = parseval_round_trip(100.0)?;
    let perr = (p.total - 1.0).abs();
    Ok(Outcome {
        passed: perr <= 1e-4 && defect <= 1e-3,
        measured: defect,
        tolerance: 1e-3,
        detail: format!(
            "Parseval |norm^2 - 1| = {perr:.2e} (tol 1e-4, cutoff {:.0e}, tail {:.3e}); round-trip defect {defect:.3e} (tol 1e-3, bounded below by sqrt(tail))",
            p.cutoff, p.tail
        ),
    })
}

pub fn herglotz_test_points() -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..10).map(|i| cz(-0.5 - i as f64, 0.0)).collect();
    v.extend((0..10).map(|i| cz(-4.0 + 1.5 * i as f64, 0.5 + 0.25 * i as f64)));
    v
}

fn c9() -> Result<Outcome> {
    let b = BesselModel::new(0.0)?;
    let meas = bessel_measure(0.0, 60.0, 3000)?;
    let h = herglotzify(&meas, None)?;
    let mut worst: f64 = 0.0;
    for z in herglotz_test_points() {
        worst = worst.max((h.mtilde(z)? - b.herglotz_m(z)?).norm());
    }
    Ok(Outcome {
        passed: worst <= 1e-5 && h.min_im_on_grid > 0.0,
        measured: worst,
        tolerance: 1e-5,
        detail: format!(
            "Mtilde(-1) = {:.6}, min Im on 100-point grid {:.2e}",
            h.mtilde(cz(-1.0, 0.0))?.re,
            h.min_im_on_grid
        ),
    })
}

/// `(Im M(i), int |psi(i, x)|^2 dx)` for the limit-circle system with `l = 0.25`.
pub fn limit_circle_norm() -> Result<(f64, f64)> {
    let pot = Potential::bessel(0.25)?;
    let lc = LimitCircleSystem::new(&pot, 0.0, 1.0)?;
    let sys = lc.system();
    let z = cz(0.0, 1.0);
    let m = lc_singular_m(&lc, z)?;
    let (t, w) = gl16();
    let mut xs = Vec::new();
    let mut ws = Vec::new();
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
    let psi = weyl_solution_psi_many(&sys, &pot, 1.0, z, &xs, 1e-11)?;
    let norm: f64 = psi.iter().zip(&ws).map(|(p, w)| w * p.u.norm_sqr()).sum();
    Ok((m.im, norm))
}

fn c10() -> Result<Outcome> {
    let (im, norm) = limit_circle_norm()?;
    let rel = (im - norm).abs() / im;
    Ok(Outcome {
        passed: rel <= 1e-3,
        measured: rel,
        tolerance: 1e-3,
        detail: format!("Im M(i) = {im:.8}, int |psi|^2 = {norm:.8}"),
    })
}

fn c11() -> Result<Outcome> {
    let ex = bm::run_examples(&bm::DEFAULT_RAYS, 0.1)?;
    let verdicts = ex.iter().all(|e| e.report.verdict == e.expected);
    let eq = &ex[0].report;
    let slopes_ok = eq.decay_fit.iter().all(|s| s.map_or(true, |v| v <= eq.threshold));
    let detail = ex
        .iter()
        .map(|e| {
            let s: Vec<String> = e
                .report
                .decay_fit
                .iter()
                .map(|v| v.map_or("-inf".into(), |v| format!("{v:.2}")))
                .collect();
            format!("{}: {:?} slopes [{}]", e.name, e.report.verdict, s.join(", "))
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome {
        passed: verdicts && slopes_ok,
        measured: if verdicts && slopes_ok { 0.0 } else { 1.0 },
        tolerance: 0.0,
        detail,
    })
}

fn c12() -> Result<Outcome> {
    let model = BesselModel::new(0.0)?;
    let sys = SolutionSystem::bessel(model);
    let pot = model.potential()?;
    let grid: Vec<f64> = (0..=50).map(|i| 20.0 * i as f64).collect();
    let r = resolvent_image_check(&sys, &pot, 1.0, &grid, cz(-1.0, 0.0), 1.0, 40.0)?;
    Ok(Outcome {
        passed: r.max_rel_dev <= 1e-3,
        measured: r.max_rel_dev,
        tolerance: 1e-3,
        detail: format!(
            "x-derivative {:.2e}, z-derivative {:.2e}",
            r.max_rel_dev_derivative, r.max_rel_dev_z_derivative
        ),
    })
}
