//! Fast invariant checks run by `jcwigner selftest`.

use std::f64::consts::FRAC_2_PI;

use jcwigner::oracle::{oracle_evolve, oracle_wigner_auto, DEFAULT_HEADROOM};
use jcwigner::{
    analytic_coherent_wigner, analytic_thermal_wigner, evolve, grid_integral, inversion, make_coherent, make_fock,
    make_thermal, rabi_coefficients, wigner_grid, wigner_point, AtomPrep, Complex64, GridSpec, ModelParams,
};

use crate::config::{preset, PRESET_NAMES};
use crate::run::initial_field;

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

type Check = fn() -> jcwigner::Result<(bool, String)>;

fn rabi_limit() -> jcwigner::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in [0usize, 1, 5] {
        let s = make_fock(n, n + 3)?;
        for i in 0..=200 {
            let t = 0.1 * i as f64;
            let inv = inversion(&s, &AtomPrep::excited(), &ModelParams::resonant(t)?)?;
            worst = worst.max((inv - (2.0 * ((n + 1) as f64).sqrt() * t).cos()).abs());
        }
    }
    Ok((worst < 1e-12, format!("max deviation {worst:.3e}")))
}

fn rabi_unitarity() -> jcwigner::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for &delta in &[-2.0, 0.0, 0.7] {
        for i in 0..=24 {
            let p = ModelParams::new(delta, 0.5 * i as f64)?;
            for n in 0..200 {
                worst = worst.max((rabi_coefficients(n, &p).norm() - 1.0).abs());
            }
        }
    }
    Ok((worst < 1e-12, format!("max | |r|^2 + q^2 - 1 | = {worst:.3e}")))
}

fn fock_origins() -> jcwigner::Result<(bool, String)> {
    let w0 = wigner_point(&make_fock(0, 3)?.density(), c(0.0, 0.0))?;
    let w1 = wigner_point(&make_fock(1, 3)?.density(), c(0.0, 0.0))?;
    let err = (w0 - FRAC_2_PI).abs().max((w1 + FRAC_2_PI).abs());
    Ok((err < 1e-14, format!("W_0(0) = {w0:.16}, W_1(0) = {w1:.16}")))
}

fn gaussian_anchors() -> jcwigner::Result<(bool, String)> {
    let alpha0 = c(0.8, -0.6);
    let coh = make_coherent(alpha0, 40)?.density().into_owned();
    let th = make_thermal(0.5, 80)?.density().into_owned();
    let mut worst: f64 = 0.0;
    for i in 0..7 {
        for j in 0..7 {
            let a = c(-1.5 + 0.5 * i as f64, -1.5 + 0.5 * j as f64);
            worst = worst.max((wigner_point(&coh, a)? - analytic_coherent_wigner(alpha0, a)).abs());
            worst = worst.max((wigner_point(&th, a)? - analytic_thermal_wigner(0.5, a)).abs());
        }
    }
    Ok((worst < 1e-10, format!("max deviation {worst:.3e}")))
}

fn oracle_evolution() -> jcwigner::Result<(bool, String)> {
    let s = make_coherent(c(1.1, 0.4), 30)?;
    let atom = AtomPrep::new(c(0.6, 0.0), Complex64::from_polar(0.8, -0.9))?;
    let p = ModelParams::new(0.9, 5.3)?;
    let ours = evolve(&s, &atom, &p)?;
    let exact = oracle_evolve(&s, &atom, &p, DEFAULT_HEADROOM)?;
    let d = (&ours.rho_f - &exact.rho_f).iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok((d < 1e-9, format!("max entrywise difference {d:.3e}")))
}

fn oracle_parity() -> jcwigner::Result<(bool, String)> {
    let s = make_coherent(c(1.1, 0.4), 30)?;
    let atom = AtomPrep::new(c(0.6, 0.0), Complex64::from_polar(0.8, -0.9))?;
    let rho = evolve(&s, &atom, &ModelParams::new(0.9, 5.3)?)?.rho_f;
    let mut worst: f64 = 0.0;
    for &a in &[c(0.0, 0.0), c(0.9, 0.2), c(-1.0, 0.5), c(0.3, -1.4)] {
        worst = worst.max((wigner_point(&rho, a)? - oracle_wigner_auto(&rho, a)?).abs());
    }
    Ok((worst < 1e-6, format!("max deviation {worst:.3e}")))
}

fn preset_conservation() -> jcwigner::Result<(bool, String)> {
    let mut worst_drift: f64 = 0.0;
    let mut worst_integral: f64 = 0.0;
    let mut worst_bound: f64 = 0.0;
    for name in PRESET_NAMES {
        let s = preset(name).expect("preset");
        let rho0 = initial_field(&s).map_err(|e| jcwigner::Error::InvalidState(e.to_string()))?;
        let gt = s.snapshot_times.last().copied().unwrap_or(0.0);
        let ev = evolve(&rho0, &s.atom_prep(), &ModelParams::new(s.detuning, gt)?)?;
        worst_drift = worst_drift.max((ev.trace() - rho0.trace()).abs());
        let grid = wigner_grid(&ev.rho_f, &s.grid_spec().with_step(0.1)?)?;
        worst_integral = worst_integral.max((grid_integral(&grid) - 1.0).abs());
        worst_bound = worst_bound.max(grid.max_abs() - FRAC_2_PI);
    }
    let ok = worst_drift < 1e-10 && worst_integral < 2e-3 && worst_bound <= 1e-9;
    Ok((
        ok,
        format!("trace drift {worst_drift:.3e}, |integral - 1| {worst_integral:.3e}, max|W| - 2/pi {worst_bound:.3e}"),
    ))
}

fn vacuum_grid() -> jcwigner::Result<(bool, String)> {
    let rho = make_fock(0, 3)?.density().into_owned();
    let grid = wigner_grid(&rho, &GridSpec::new(c(0.0, 0.0), 4.0, 0.05)?)?;
    let (at, max) = grid.argmax();
    let ok = at == c(0.0, 0.0) && (max - FRAC_2_PI).abs() < 1e-15 && (grid_integral(&grid) - 1.0).abs() < 1e-9;
    Ok((ok, format!("max {max:.16} at {at}")))
}

const CHECKS: [(&str, Check); 8] = [
    ("rabi-limit", rabi_limit),
    ("rabi-unitarity", rabi_unitarity),
    ("fock-origin-values", fock_origins),
    ("gaussian-anchors", gaussian_anchors),
    ("oracle-evolution", oracle_evolution),
    ("oracle-parity", oracle_parity),
    ("preset-conservation", preset_conservation),
    ("vacuum-grid", vacuum_grid),
];

pub fn run_all() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(name, f)| match f() {
            Ok((passed, detail)) => CheckResult { name, passed, detail },
            Err(e) => CheckResult {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for r in super::run_all() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
