//! Closed-form Jaynes-Cummings evolution of the reduced field.
//!
//! Time is the dimensionless `gt` and detuning is `Δ/g`; the coupling is 1.
//! Given an uncorrelated initial state `ρ_f(0) ⊗ |ψ_atom⟩⟨ψ_atom|`, the field
//! after tracing out the atom is the sum of two branch blocks
//! `ρ_aa = ⟨a|ρ|a⟩` and `ρ_bb = ⟨b|ρ|b⟩`, each an entrywise map of `ρ_f(0)`
//! with `±1` index shifts weighted by the Rabi coefficients `r_n`, `q_n`.
//!
//! Boundary convention: the coefficient pair at `n = −1` is the closed form
//! itself evaluated at `Ω_{−1} = |Δ|`, i.e. `q_{−1} = 0`, `r_{−1} = e^{−iΔt/2}`.
//! It is the (uncoupled) free phase of `|b, 0⟩` relative to the rotating
//! frame of the coupled doublets, and reduces to `r_{−1} = 1` on resonance.
//! Reads of `ρ(0)` outside `0..=nmax` are zero.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::FieldState;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Trace drift beyond which the evolution reports a truncation leak.
pub const LEAK_TOLERANCE: f64 = 1e-8;

/// Detuning `Δ/g` and dimensionless time `gt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    detuning: f64,
    time: f64,
}

impl ModelParams {
    pub fn new(detuning: f64, time: f64) -> Result<Self> {
        if !detuning.is_finite() {
            return Err(Error::param("detuning", "must be finite"));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::param("time", format!("must be finite and >= 0, got {time}")));
        }
        Ok(Self { detuning, time })
    }

    /// Resonant (`Δ = 0`) parameters at time `gt`.
    pub fn resonant(time: f64) -> Result<Self> {
        Self::new(0.0, time)
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Coupling in dimensionless units.
    pub fn coupling(&self) -> f64 {
        1.0
    }

    pub fn at_time(&self, time: f64) -> Result<Self> {
        Self::new(self.detuning, time)
    }
}

/// Initial atomic amplitudes `C_a(0)`, `C_b(0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomPrep {
    c_a: Complex64,
    c_b: Complex64,
}

impl AtomPrep {
    /// Normalization tolerance on `|C_a|² + |C_b|²`.
    pub const NORM_TOLERANCE: f64 = 1e-12;

    pub fn new(c_a: Complex64, c_b: Complex64) -> Result<Self> {
        let norm = c_a.norm_sqr() + c_b.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(Error::param(
                "atom",
                format!("|C_a|² + |C_b|² must equal 1, got {norm}"),
            ));
        }
        Ok(Self { c_a, c_b })
    }

    /// Atom in the excited state `|a⟩`.
    pub fn excited() -> Self {
        Self {
            c_a: Complex64::new(1.0, 0.0),
            c_b: ZERO,
        }
    }

    /// Atom in the ground state `|b⟩`.
    pub fn ground() -> Self {
        Self {
            c_a: ZERO,
            c_b: Complex64::new(1.0, 0.0),
        }
    }

    pub fn c_a(&self) -> Complex64 {
        self.c_a
    }

    pub fn c_b(&self) -> Complex64 {
        self.c_b
    }
}

/// Rabi coefficients of the doublet `{|a,n⟩, |b,n+1⟩}` at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiCoeffs {
    pub n: i64,
    /// `r_n = cos(Ω_n t/2) − i(Δ/Ω_n) sin(Ω_n t/2)`
    pub r: Complex64,
    /// `q_n = (2g√(n+1)/Ω_n) sin(Ω_n t/2)`
    pub q: f64,
    /// `Ω_n = √(Δ² + 4g²(n+1))`
    pub omega: f64,
}

impl RabiCoeffs {
    /// `|r_n|² + q_n²`, identically 1.
    pub fn norm(&self) -> f64 {
        self.r.norm_sqr() + self.q * self.q
    }
}

fn rabi_at(n: i64, params: &ModelParams) -> RabiCoeffs {
    debug_assert!(n >= -1);
    let delta = params.detuning;
    let g = params.coupling();
    let photons = (n + 1) as f64;
    let omega = (delta * delta + 4.0 * g * g * photons).sqrt();
    if omega == 0.0 {
        // resonant boundary sentinel
        return RabiCoeffs {
            n,
            r: Complex64::new(1.0, 0.0),
            q: 0.0,
            omega,
        };
    }
    let (s, c) = (0.5 * omega * params.time).sin_cos();
    RabiCoeffs {
        n,
        r: Complex64::new(c, -(delta / omega) * s),
        q: 2.0 * g * photons.sqrt() / omega * s,
        omega,
    }
}

/// Rabi coefficients for photon number `n`.
pub fn rabi_coefficients(n: usize, params: &ModelParams) -> RabiCoeffs {
    rabi_at(n as i64, params)
}

/// The `n = −1` boundary pair: `q = 0`, `r = e^{−iΔt/2}` (1 on resonance).
pub fn boundary_coefficients(params: &ModelParams) -> RabiCoeffs {
    rabi_at(-1, params)
}

/// Coefficients for `n = −1 ..= nmax + 1`.
#[derive(Clone, Debug)]
struct RabiTable {
    r: Vec<Complex64>,
    q: Vec<f64>,
}

impl RabiTable {
    fn new(nmax: usize, params: &ModelParams) -> Self {
        let (r, q) = (-1..=nmax as i64 + 1)
            .map(|n| {
                let c = rabi_at(n, params);
                (c.r, c.q)
            })
            .unzip();
        Self { r, q }
    }

    #[inline]
    fn r(&self, n: isize) -> Complex64 {
        self.r[(n + 1) as usize]
    }

    #[inline]
    fn q(&self, n: isize) -> f64 {
        self.q[(n + 1) as usize]
    }
}

/// Zero-extended read access to `ρ(0)`.
struct Initial<'a> {
    rho: &'a DMatrix<Complex64>,
    dim: isize,
}

impl Initial<'_> {
    #[inline]
    fn at(&self, n: isize, m: isize) -> Complex64 {
        if n < 0 || m < 0 || n >= self.dim || m >= self.dim {
            ZERO
        } else {
            self.rho[(n as usize, m as usize)]
        }
    }
}

struct Weights {
    pa: f64,
    pb: f64,
    /// `i C_a C_b*`
    iab: Complex64,
    /// `i C_b C_a*`
    iba: Complex64,
}

impl Weights {
    fn new(atom: &AtomPrep) -> Self {
        Self {
            pa: atom.c_a.norm_sqr(),
            pb: atom.c_b.norm_sqr(),
            iab: I * atom.c_a * atom.c_b.conj(),
            iba: I * atom.c_b * atom.c_a.conj(),
        }
    }
}

/// `(⟨n|ρ_aa|m⟩, ⟨n|ρ_bb|m⟩)` at time `t`.
#[inline]
fn branch_entry(rho: &Initial<'_>, tab: &RabiTable, w: &Weights, n: isize, m: isize) -> (Complex64, Complex64) {
    let (rn, rm) = (tab.r(n), tab.r(m));
    let (qn, qm) = (tab.q(n), tab.q(m));
    let (rn1, rm1) = (tab.r(n - 1), tab.r(m - 1));
    let (qn1, qm1) = (tab.q(n - 1), tab.q(m - 1));

    let aa = rn * rm.conj() * w.pa * rho.at(n, m)
        + rho.at(n + 1, m + 1) * (w.pb * qn * qm)
        + w.iab * rn * qm * rho.at(n, m + 1)
        - w.iba * qn * rm.conj() * rho.at(n + 1, m);

    let bb = rm1 * rn1.conj() * w.pb * rho.at(n, m)
        + rho.at(n - 1, m - 1) * (w.pa * qn1 * qm1)
        - w.iab * qn1 * rm1 * rho.at(n - 1, m)
        + w.iba * rn1.conj() * qm1 * rho.at(n, m - 1);

    (aa, bb)
}

/// Branch blocks `ρ_aa`, `ρ_bb` and the reduced field `ρ_f = ρ_aa + ρ_bb` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolvedField {
    pub rho_aa: DMatrix<Complex64>,
    pub rho_bb: DMatrix<Complex64>,
    pub rho_f: DMatrix<Complex64>,
    pub time: f64,
}

impl EvolvedField {
    pub fn nmax(&self) -> usize {
        self.rho_f.nrows() - 1
    }

    pub fn trace_aa(&self) -> f64 {
        diag_sum(&self.rho_aa)
    }

    pub fn trace_bb(&self) -> f64 {
        diag_sum(&self.rho_bb)
    }

    pub fn trace(&self) -> f64 {
        diag_sum(&self.rho_f)
    }

    /// `Tr ρ_aa − Tr ρ_bb`.
    pub fn inversion(&self) -> f64 {
        self.trace_aa() - self.trace_bb()
    }

    /// `Tr(ρ_f²)`.
    pub fn purity(&self) -> f64 {
        self.rho_f.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Reduced field as a validated [`FieldState`].
    pub fn field_state(&self, eps_tail: f64) -> Result<FieldState> {
        FieldState::from_density(self.rho_f.clone(), eps_tail)
    }
}

/// Diagonal sum in fixed index order.
fn diag_sum(m: &DMatrix<Complex64>) -> f64 {
    (0..m.nrows()).map(|n| m[(n, n)].re).sum()
}

fn check_input(rho0: &FieldState) -> Result<()> {
    if rho0.nmax() < 2 {
        return Err(Error::param("nmax", format!("evolution needs nmax >= 2, got {}", rho0.nmax())));
    }
    Ok(())
}

fn check_leak(initial_trace: f64, evolved_trace: f64, nmax: usize) -> Result<()> {
    let drift = (evolved_trace - initial_trace).abs();
    if drift > LEAK_TOLERANCE {
        return Err(Error::TruncationLeak { drift, nmax });
    }
    Ok(())
}

fn hermitian_from_upper(dim: usize, upper: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    for (n, row) in upper.iter().enumerate() {
        out[(n, n)] = Complex64::new(row[0].re, 0.0);
        for (k, v) in row.iter().enumerate().skip(1) {
            let m = n + k;
            out[(n, m)] = *v;
            out[(m, n)] = v.conj();
        }
    }
    out
}

/// Evolves the reduced field with the general closed form, valid for mixed inputs.
///
/// Only the upper triangle is evaluated; the lower one is its mirror, so every
/// output block is exactly hermitian.
pub fn evolve_branches(rho0: &FieldState, atom: &AtomPrep, params: &ModelParams) -> Result<EvolvedField> {
    check_input(rho0)?;
    let density = rho0.density();
    let dim = density.nrows();
    let tab = RabiTable::new(dim - 1, params);
    let w = Weights::new(atom);
    let init = Initial {
        rho: &density,
        dim: dim as isize,
    };

    let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..dim)
        .into_par_iter()
        .map(|n| {
            (n..dim)
                .map(|m| branch_entry(&init, &tab, &w, n as isize, m as isize))
                .unzip()
        })
        .collect();
    let (upper_aa, upper_bb): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let rho_aa = hermitian_from_upper(dim, &upper_aa);
    let rho_bb = hermitian_from_upper(dim, &upper_bb);
    let rho_f = &rho_aa + &rho_bb;

    let evolved = EvolvedField {
        rho_aa,
        rho_bb,
        rho_f,
        time: params.time,
    };
    check_leak(rho0.trace(), evolved.trace(), dim - 1)?;
    Ok(evolved)
}

/// Fast path for diagonal initial fields: only the main diagonal and the first
/// off-diagonal band can be populated.
pub fn evolve_field_diagonal(p0: &FieldState, atom: &AtomPrep, params: &ModelParams) -> Result<EvolvedField> {
    check_input(p0)?;
    if !p0.is_diagonal() {
        return Err(Error::param("field", "diagonal fast path requires a diagonal initial field"));
    }
    let p = p0.populations();
    let dim = p.len();
    let tab = RabiTable::new(dim - 1, params);
    let w = Weights::new(atom);
    let pop = |n: isize| -> f64 {
        if n < 0 || n >= dim as isize {
            0.0
        } else {
            p[n as usize]
        }
    };

    let mut rho_aa = DMatrix::from_element(dim, dim, ZERO);
    let mut rho_bb = DMatrix::from_element(dim, dim, ZERO);
    for n in 0..dim {
        let ni = n as isize;
        let aa = tab.r(ni).norm_sqr() * w.pa * pop(ni) + w.pb * tab.q(ni).powi(2) * pop(ni + 1);
        let bb = tab.r(ni - 1).norm_sqr() * w.pb * pop(ni) + w.pa * tab.q(ni - 1).powi(2) * pop(ni - 1);
        rho_aa[(n, n)] = Complex64::new(aa, 0.0);
        rho_bb[(n, n)] = Complex64::new(bb, 0.0);
        if n + 1 < dim {
            // band m = n + 1
            let aa_band = -w.iba * tab.q(ni) * tab.r(ni + 1).conj() * pop(ni + 1);
            let bb_band = w.iba * tab.r(ni - 1).conj() * tab.q(ni) * pop(ni);
            rho_aa[(n, n + 1)] = aa_band;
            rho_aa[(n + 1, n)] = aa_band.conj();
            rho_bb[(n, n + 1)] = bb_band;
            rho_bb[(n + 1, n)] = bb_band.conj();
        }
    }
    let rho_f = &rho_aa + &rho_bb;
    let evolved = EvolvedField {
        rho_aa,
        rho_bb,
        rho_f,
        time: params.time,
    };
    check_leak(p0.trace(), evolved.trace(), dim - 1)?;
    Ok(evolved)
}

/// Evolves with the diagonal fast path when the input allows it.
pub fn evolve(rho0: &FieldState, atom: &AtomPrep, params: &ModelParams) -> Result<EvolvedField> {
    if rho0.is_diagonal() {
        evolve_field_diagonal(rho0, atom, params)
    } else {
        evolve_branches(rho0, atom, params)
    }
}

/// Atomic inversion `Tr ρ_aa − Tr ρ_bb`, from the diagonal of the branch blocks.
pub fn inversion(rho0: &FieldState, atom: &AtomPrep, params: &ModelParams) -> Result<f64> {
    check_input(rho0)?;
    let density = rho0.density();
    let dim = density.nrows();
    inversion_with(&density, dim, rho0.trace(), atom, params)
}

fn inversion_with(
    density: &DMatrix<Complex64>,
    dim: usize,
    initial_trace: f64,
    atom: &AtomPrep,
    params: &ModelParams,
) -> Result<f64> {
    let tab = RabiTable::new(dim - 1, params);
    let w = Weights::new(atom);
    let init = Initial {
        rho: density,
        dim: dim as isize,
    };
    let (mut tr_aa, mut tr_bb) = (0.0, 0.0);
    for n in 0..dim as isize {
        let (aa, bb) = branch_entry(&init, &tab, &w, n, n);
        tr_aa += aa.re;
        tr_bb += bb.re;
    }
    check_leak(initial_trace, tr_aa + tr_bb, dim - 1)?;
    Ok(tr_aa - tr_bb)
}

/// Inversion at every time in `times` (which must be nondecreasing).
pub fn inversion_series(
    rho0: &FieldState,
    atom: &AtomPrep,
    detuning: f64,
    times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::param("times", "time samples must be nondecreasing"));
    }
    if times.is_empty() {
        return Ok(Vec::new());
    }
    check_input(rho0)?;
    let density = rho0.density();
    let dim = density.nrows();
    let trace = rho0.trace();
    times
        .par_iter()
        .map(|&t| {
            let params = ModelParams::new(detuning, t)?;
            Ok((t, inversion_with(&density, dim, trace, atom, &params)?))
        })
        .collect()
}

/// Inversion from photon-number populations alone:
///
/// `Σ_m [(|C_a r_m|² − |C_b r_{m−1}|²) p_m + |C_b q_m|² p_{m+1} − |C_a q_{m−1}|² p_{m−1}]`
///
/// Exact when the initial field is diagonal or the atom starts in a basis state;
/// otherwise it omits the atom-field interference terms.
pub fn inversion_from_populations(p: &[f64], atom: &AtomPrep, params: &ModelParams) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let tab = RabiTable::new(p.len() - 1, params);
    let (pa, pb) = (atom.c_a.norm_sqr(), atom.c_b.norm_sqr());
    let pop = |n: isize| -> f64 {
        if n < 0 || n >= p.len() as isize {
            0.0
        } else {
            p[n as usize]
        }
    };
    (0..p.len() as isize)
        .map(|m| {
            (pa * tab.r(m).norm_sqr() - pb * tab.r(m - 1).norm_sqr()) * pop(m)
                + pb * tab.q(m).powi(2) * pop(m + 1)
                - pa * tab.q(m - 1).powi(2) * pop(m - 1)
        })
        .sum()
}

/// Joint amplitudes `C_{a,n}(t)`, `C_{b,n}(t)` for a pure initial field, with
/// the global phases `e^{±iΔt/2}` dropped.
pub fn evolve_amplitudes(
    f: &DVector<Complex64>,
    atom: &AtomPrep,
    params: &ModelParams,
) -> (DVector<Complex64>, DVector<Complex64>) {
    let dim = f.len();
    let tab = RabiTable::new(dim.saturating_sub(1), params);
    let amp = |n: isize| -> Complex64 {
        if n < 0 || n >= dim as isize {
            ZERO
        } else {
            f[n as usize]
        }
    };
    let ca = DVector::from_fn(dim, |n, _| {
        let n = n as isize;
        atom.c_a * amp(n) * tab.r(n) - I * atom.c_b * amp(n + 1) * tab.q(n)
    });
    let cb = DVector::from_fn(dim, |n, _| {
        let n = n as isize;
        atom.c_b * amp(n) * tab.r(n - 1).conj() - I * atom.c_a * amp(n - 1) * tab.q(n - 1)
    });
    (ca, cb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_coherent, make_fock, make_thermal, CatParity, make_cat};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coefficients_at_time_zero() {
        let p = ModelParams::new(1.3, 0.0).unwrap();
        for n in 0..20 {
            let rc = rabi_coefficients(n, &p);
            assert_eq!(rc.r, c(1.0, 0.0));
            assert_eq!(rc.q, 0.0);
        }
    }

    #[test]
    fn resonant_ground_doublet() {
        for &t in &[0.3, 1.0, 2.7] {
            let rc = rabi_coefficients(0, &ModelParams::resonant(t).unwrap());
            assert_eq!(rc.omega, 2.0);
            assert!((rc.r - c(t.cos(), 0.0)).norm() < 1e-15);
            assert!((rc.q - t.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn detuned_frequency() {
        let rc = rabi_coefficients(0, &ModelParams::new(3.0, 0.4).unwrap());
        assert!((rc.omega - 13f64.sqrt()).abs() < 1e-15);
        assert!(rc.omega >= 2.0);
    }

    #[test]
    fn boundary_pair() {
        let p = ModelParams::new(0.8, 1.7).unwrap();
        let b = boundary_coefficients(&p);
        assert_eq!(b.q, 0.0);
        assert!((b.r - Complex64::from_polar(1.0, -0.8 * 1.7 / 2.0)).norm() < 1e-15);
        let b0 = boundary_coefficients(&ModelParams::resonant(1.7).unwrap());
        assert_eq!((b0.r, b0.q), (c(1.0, 0.0), 0.0));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0.0, -1.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0).is_err());
        assert!(ModelParams::new(0.0, f64::INFINITY).is_err());
        assert!(AtomPrep::new(c(0.8f64.sqrt(), 0.0), c(0.0, 0.0)).is_err());
        assert!(AtomPrep::new(c(0.6, 0.0), c(0.0, 0.8)).is_ok());
    }

    #[test]
    fn identity_at_time_zero() {
        let s = make_coherent(Complex64::from_polar(1.1, 0.4), 25).unwrap();
        let atom = AtomPrep::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let ev = evolve_branches(&s, &atom, &ModelParams::new(0.7, 0.0).unwrap()).unwrap();
        let rho0 = s.density();
        for n in 0..rho0.nrows() {
            for m in 0..rho0.nrows() {
                assert!((ev.rho_f[(n, m)] - rho0[(n, m)]).norm() < 1e-16);
            }
        }
        assert!((ev.trace_aa() - 0.36).abs() < 1e-12);
    }

    #[test]
    fn vacuum_excited_two_state_block() {
        let s = make_fock(0, 4).unwrap();
        for &t in &[0.0, 0.4, 1.3, 2.9] {
            let ev = evolve_branches(&s, &AtomPrep::excited(), &ModelParams::resonant(t).unwrap()).unwrap();
            // hand-expanded: ρ_00 = cos² t, ρ_11 = sin² t
            assert!((ev.rho_f[(0, 0)].re - t.cos().powi(2)).abs() < 1e-15);
            assert!((ev.rho_f[(1, 1)].re - t.sin().powi(2)).abs() < 1e-15);
            for n in 2..5 {
                assert_eq!(ev.rho_f[(n, n)], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn fock_rabi_inversion() {
        for n in [0usize, 1, 5] {
            let s = make_fock(n, n + 2).unwrap();
            for i in 0..=200 {
                let t = 0.1 * i as f64;
                let inv = inversion(&s, &AtomPrep::excited(), &ModelParams::resonant(t).unwrap()).unwrap();
                let expect = (2.0 * ((n + 1) as f64).sqrt() * t).cos();
                assert!((inv - expect).abs() < 1e-12, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn inversion_is_one_at_start() {
        let s = make_coherent(c(1.0, 0.0), 20).unwrap();
        let inv = inversion(&s, &AtomPrep::excited(), &ModelParams::resonant(0.0).unwrap()).unwrap();
        assert!((inv - 1.0).abs() < 1e-15);
    }

    #[test]
    fn excited_atom_keeps_diagonal_field_diagonal() {
        let s = make_thermal(1.0, 35).unwrap();
        let p = s.populations();
        let params = ModelParams::new(0.3, 2.2).unwrap();
        let ev = evolve_field_diagonal(&s, &AtomPrep::excited(), &params).unwrap();
        for n in 0..p.len() {
            for m in 0..p.len() {
                if n != m {
                    assert_eq!(ev.rho_f[(n, m)], c(0.0, 0.0));
                }
            }
            let rn = rabi_coefficients(n, &params).r.norm_sqr();
            let qn1 = if n == 0 { 0.0 } else { rabi_coefficients(n - 1, &params).q.powi(2) };
            let pn1 = if n == 0 { 0.0 } else { p[n - 1] };
            assert!((ev.rho_f[(n, n)].re - (rn * p[n] + qn1 * pn1)).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_fast_path_matches_general_path() {
        let s = make_thermal(1.0, 35).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let atom = AtomPrep::new(c(h, 0.0), c(h, 0.0)).unwrap();
        for &(delta, t) in &[(0.0, 1.0), (0.9, 1.0), (-1.7, 6.3)] {
            let params = ModelParams::new(delta, t).unwrap();
            let fast = evolve_field_diagonal(&s, &atom, &params).unwrap();
            let full = evolve_branches(&s, &atom, &params).unwrap();
            let diff = (&fast.rho_f - &full.rho_f).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12, "delta={delta} t={t}: {diff}");
            let diff_aa = (&fast.rho_aa - &full.rho_aa).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(diff_aa < 1e-12);
        }
    }

    #[test]
    fn diagonal_fast_path_identity_and_rejection() {
        let s = make_thermal(0.5, 30).unwrap();
        let ev = evolve_field_diagonal(&s, &AtomPrep::excited(), &ModelParams::resonant(0.0).unwrap()).unwrap();
        assert_eq!(ev.rho_f, *s.density());
        let coh = make_coherent(c(1.0, 0.0), 20).unwrap();
        assert!(evolve_field_diagonal(&coh, &AtomPrep::excited(), &ModelParams::resonant(1.0).unwrap()).is_err());
    }

    #[test]
    fn leak_is_reported() {
        // Fock |3> padded by the bare minimum, then pushed past the cutoff by
        // building an under-padded state by hand.
        let mut rho = DMatrix::from_element(3, 3, c(0.0, 0.0));
        rho[(2, 2)] = c(1.0, 0.0);
        let s = FieldState::from_density(rho, 1e-10).unwrap();
        let err = evolve_branches(&s, &AtomPrep::excited(), &ModelParams::resonant(0.5).unwrap()).unwrap_err();
        assert!(matches!(err, Error::TruncationLeak { .. }));
        let err = inversion(&s, &AtomPrep::excited(), &ModelParams::resonant(0.5).unwrap()).unwrap_err();
        assert!(matches!(err, Error::TruncationLeak { .. }));
    }

    #[test]
    fn series_edge_cases() {
        let s = make_coherent(c(1.0, 0.0), 20).unwrap();
        let atom = AtomPrep::excited();
        assert!(inversion_series(&s, &atom, 0.0, &[]).unwrap().is_empty());
        let one = inversion_series(&s, &atom, 0.0, &[2.5]).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].1, inversion(&s, &atom, &ModelParams::resonant(2.5).unwrap()).unwrap());
        assert!(inversion_series(&s, &atom, 0.0, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn series_is_pointwise_inversion() {
        let s = make_cat(c(1.5, 0.2), 0.4, CatParity::Even, 30).unwrap();
        let atom = AtomPrep::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let times: Vec<f64> = (0..50).map(|i| 0.2 * i as f64).collect();
        let series = inversion_series(&s, &atom, 0.4, &times).unwrap();
        for (t, v) in series {
            let direct = inversion(&s, &atom, &ModelParams::new(0.4, t).unwrap()).unwrap();
            assert_eq!(v, direct);
        }
    }

    #[test]
    fn populations_form_agrees_when_exact() {
        let s = make_coherent(Complex64::from_polar(1.4, 0.3), 30).unwrap();
        let p = s.populations();
        for atom in [AtomPrep::excited(), AtomPrep::ground()] {
            for &t in &[0.5, 3.3, 9.1] {
                let params = ModelParams::new(0.6, t).unwrap();
                let a = inversion(&s, &atom, &params).unwrap();
                let b = inversion_from_populations(&p, &atom, &params);
                assert!((a - b).abs() < 1e-12);
            }
        }
        let th = make_thermal(1.0, 35).unwrap();
        let atom = AtomPrep::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let params = ModelParams::new(-0.4, 4.0).unwrap();
        let a = inversion(&th, &atom, &params).unwrap();
        let b = inversion_from_populations(&th.populations(), &atom, &params);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn amplitudes_reproduce_branch_blocks() {
        let s = make_cat(Complex64::from_polar(1.2, 0.9), 0.3, CatParity::Odd, 30).unwrap();
        let atom = AtomPrep::new(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let params = ModelParams::new(1.1, 3.7).unwrap();
        let ev = evolve_branches(&s, &atom, &params).unwrap();
        let (ca, cb) = evolve_amplitudes(s.amplitudes().unwrap(), &atom, &params);
        for n in 0..ca.len() {
            for m in 0..ca.len() {
                assert!((ev.rho_aa[(n, m)] - ca[n] * ca[m].conj()).norm() < 1e-13);
                assert!((ev.rho_bb[(n, m)] - cb[n] * cb[m].conj()).norm() < 1e-13);
            }
        }
        let direct: f64 = ca.iter().zip(cb.iter()).map(|(a, b)| a.norm_sqr() - b.norm_sqr()).sum();
        assert!((direct - ev.inversion()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn coefficient_norm_is_one(n in 0usize..500, delta in -10.0..10.0f64, t in 0.0..100.0f64) {
            let rc = rabi_coefficients(n, &ModelParams::new(delta, t).unwrap());
            prop_assert!((rc.norm() - 1.0).abs() < 1e-12);
            prop_assert!(rc.omega >= 2.0);
        }

        #[test]
        fn resonant_r_is_real(n in 0usize..500, t in 0.0..100.0f64) {
            prop_assert_eq!(rabi_coefficients(n, &ModelParams::resonant(t).unwrap()).r.im, 0.0);
        }

        #[test]
        fn evolution_conserves_trace_and_hermiticity(
            r in 0.0..2.0f64, th in 0.0..std::f64::consts::TAU,
            ca in 0.0..1.0f64, phase in 0.0..std::f64::consts::TAU,
            delta in -2.0..2.0f64, t in 0.0..15.0f64,
        ) {
            let s = make_coherent(Complex64::from_polar(r, th), 32).unwrap();
            let atom = AtomPrep::new(c(ca.sqrt(), 0.0), Complex64::from_polar((1.0 - ca).sqrt(), phase)).unwrap();
            let ev = evolve_branches(&s, &atom, &ModelParams::new(delta, t).unwrap()).unwrap();
            prop_assert!((ev.trace() - s.trace()).abs() < 1e-10);
            prop_assert!(ev.purity() <= 1.0 + 1e-10);
            let dim = ev.rho_f.nrows();
            for n in 0..dim {
                for m in 0..dim {
                    prop_assert_eq!(ev.rho_f[(n, m)], ev.rho_f[(m, n)].conj());
                    prop_assert_eq!(ev.rho_aa[(n, m)], ev.rho_aa[(m, n)].conj());
                }
            }
            let inv = ev.inversion();
            prop_assert!(inv.abs() <= 1.0 + 1e-10);
            let diag_inv: f64 = (0..dim).map(|n| ev.rho_aa[(n, n)].re - ev.rho_bb[(n, n)].re).sum();
            prop_assert!((diag_inv - inv).abs() < 1e-14);
        }
    }
}
