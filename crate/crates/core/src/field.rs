//! Initial cavity-field states on a truncated Fock basis.
//!
//! Every constructor takes a [`Truncation`] (cutoff plus tail tolerance).
//! [`choose_truncation`] picks the smallest cutoff whose discarded probability
//! lies below the tolerance and pads it by [`TRUNCATION_PAD`], so the
//! evolution's `n ± 1` reads never land on clipped mass.

use std::borrow::Cow;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::ln_factorial;

/// Default discarded-probability tolerance.
pub const DEFAULT_EPS_TAIL: f64 = 1e-10;
/// Extra Fock levels added beyond the tail criterion.
pub const TRUNCATION_PAD: usize = 2;

const VACUUM_ALPHA: f64 = 1e-14;
/// Largest accepted tail tolerance.
pub const MAX_EPS_TAIL: f64 = 1e-3;

/// Parity of a Schrödinger cat `N(|α₀⟩ ± e^{iφ}|−α₀⟩)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CatParity {
    /// `+` branch; even photon numbers at `φ = 0`.
    Even,
    /// `−` branch; odd photon numbers at `φ = 0`.
    Odd,
}

impl CatParity {
    pub fn sign(self) -> f64 {
        match self {
            CatParity::Even => 1.0,
            CatParity::Odd => -1.0,
        }
    }
}

/// Parameters a field state originates from.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Coherent { alpha: Complex64 },
    Cat { alpha: Complex64, phi: f64, parity: CatParity },
    Thermal { nbar: f64 },
    Fock { n: usize },
}

impl FieldSpec {
    /// Coherent amplitude `α₀` for coherent and cat states.
    pub fn alpha(&self) -> Option<Complex64> {
        match *self {
            FieldSpec::Coherent { alpha } | FieldSpec::Cat { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Checks the constructor preconditions for this spec.
    pub fn validate(&self) -> Result<()> {
        match *self {
            FieldSpec::Coherent { alpha } | FieldSpec::Cat { alpha, .. } => {
                if !(alpha.re.is_finite() && alpha.im.is_finite()) {
                    return Err(Error::param("alpha", "must be finite"));
                }
                if let FieldSpec::Cat { phi, .. } = *self {
                    if !phi.is_finite() {
                        return Err(Error::param("phi", "must be finite"));
                    }
                }
                Ok(())
            }
            FieldSpec::Thermal { nbar } => {
                if !(nbar.is_finite() && nbar >= 0.0) {
                    Err(Error::param("nbar", format!("must be finite and >= 0, got {nbar}")))
                } else {
                    Ok(())
                }
            }
            FieldSpec::Fock { .. } => Ok(()),
        }
    }
}

/// Fock-basis cutoff together with the tolerated discarded probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub nmax: usize,
    pub eps_tail: f64,
}

impl Truncation {
    pub fn new(nmax: usize) -> Self {
        Self {
            nmax,
            eps_tail: DEFAULT_EPS_TAIL,
        }
    }

    pub fn with_tail(nmax: usize, eps_tail: f64) -> Self {
        Self { nmax, eps_tail }
    }

    /// Basis dimension `nmax + 1`.
    pub fn dim(&self) -> usize {
        self.nmax + 1
    }
}

impl From<usize> for Truncation {
    fn from(nmax: usize) -> Self {
        Truncation::new(nmax)
    }
}

fn check_eps(eps_tail: f64) -> Result<()> {
    if eps_tail > 0.0 && eps_tail <= MAX_EPS_TAIL {
        Ok(())
    } else {
        Err(Error::param(
            "eps_tail",
            format!("must lie in (0, {MAX_EPS_TAIL}], got {eps_tail}"),
        ))
    }
}

/// Photon-number probabilities of a spec, in the form needed for tail sums.
enum Distribution {
    Point(usize),
    Geometric { ratio: f64 },
    /// Poisson weights with mean `lambda`, reweighted by `weight(n)`
    /// (identically 1 for coherent states).
    Poisson { lambda: f64, cat: Option<(f64, f64, f64)> },
}

impl Distribution {
    fn of(spec: &FieldSpec) -> Result<Self> {
        Ok(match *spec {
            FieldSpec::Fock { n } => Distribution::Point(n),
            FieldSpec::Thermal { nbar } => Distribution::Geometric {
                ratio: nbar / (1.0 + nbar),
            },
            FieldSpec::Coherent { alpha } => Distribution::Poisson {
                lambda: alpha.norm_sqr(),
                cat: None,
            },
            FieldSpec::Cat { alpha, phi, parity } => {
                let lambda = alpha.norm_sqr();
                let norm_sq = cat_norm_sq_inverse(lambda, phi, parity)?;
                Distribution::Poisson {
                    lambda,
                    cat: Some((norm_sq, phi, parity.sign())),
                }
            }
        })
    }

    /// Discarded probability `Σ_{n>nmax} p_n`.
    fn tail_above(&self, nmax: usize) -> f64 {
        match *self {
            Distribution::Point(n) => {
                if n > nmax {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Geometric { ratio } => {
                if ratio == 0.0 {
                    0.0
                } else {
                    ratio.powf(nmax as f64 + 1.0)
                }
            }
            Distribution::Poisson { lambda, cat } => {
                if lambda == 0.0 {
                    return 0.0;
                }
                // Sum the tail from far out inward so small terms are not swamped.
                let upper = poisson_upper_bound(lambda).max(nmax + 1);
                let ln_lambda = lambda.ln();
                let mut tail = 0.0;
                for n in (nmax + 1..=upper).rev() {
                    let ln_p = -lambda + n as f64 * ln_lambda - ln_factorial(n);
                    let mut p = ln_p.exp();
                    if let Some((norm_sq, phi, sign)) = cat {
                        p *= norm_sq * cat_branch_weight(n, phi, sign);
                    }
                    tail += p;
                }
                tail
            }
        }
    }

    fn smallest_nmax(&self, eps_tail: f64) -> usize {
        match *self {
            Distribution::Point(n) => n,
            Distribution::Geometric { ratio } => {
                if ratio == 0.0 {
                    return 0;
                }
                // ratio^(N+1) < eps  <=>  N + 1 > ln eps / ln ratio
                let guess = (eps_tail.ln() / ratio.ln()).floor().max(1.0) as usize - 1;
                let mut n = guess.saturating_sub(2);
                while self.tail_above(n) >= eps_tail {
                    n += 1;
                }
                n
            }
            Distribution::Poisson { lambda, .. } => {
                if lambda == 0.0 {
                    return 0;
                }
                let mut n = lambda.floor() as usize;
                while self.tail_above(n) >= eps_tail {
                    n += 1;
                }
                n
            }
        }
    }
}

/// Index beyond which Poisson(`lambda`) probabilities are far below `1e-300`.
fn poisson_upper_bound(lambda: f64) -> usize {
    (lambda + 40.0 * lambda.sqrt() + 60.0).ceil() as usize
}

/// `|1 ± e^{iφ}(−1)^n|²`
fn cat_branch_weight(n: usize, phi: f64, sign: f64) -> f64 {
    let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
    let s = sign * parity;
    // |1 + s e^{iφ}|² = 2 + 2 s cos φ
    2.0 + 2.0 * s * phi.cos()
}

/// `N² = 1 / (2(1 ± e^{−2|α₀|²} cos φ))`, evaluated with `expm1` so the odd cat
/// stays accurate as `|α₀| → 0`.
fn cat_norm_sq_inverse(lambda: f64, phi: f64, parity: CatParity) -> Result<f64> {
    let sc = parity.sign() * phi.cos();
    let denom = if lambda < VACUUM_ALPHA * VACUUM_ALPHA {
        2.0 * (1.0 + sc)
    } else {
        2.0 * ((1.0 + sc) + sc * (-2.0 * lambda).exp_m1())
    };
    if !(denom > 1e-300) || !denom.is_finite() {
        return Err(Error::param(
            "alpha",
            format!("cat normalization is singular (norm² denominator {denom:e})"),
        ));
    }
    Ok(1.0 / denom)
}

/// Cat normalization `N = 1/√(2(1 ± e^{−2|α₀|²} cos φ))`.
pub fn cat_normalization(alpha: Complex64, phi: f64, parity: CatParity) -> Result<f64> {
    Ok(cat_norm_sq_inverse(alpha.norm_sqr(), phi, parity)?.sqrt())
}

/// Smallest padded cutoff whose discarded probability is below `eps_tail`.
pub fn choose_truncation(spec: &FieldSpec, eps_tail: f64) -> Result<Truncation> {
    check_eps(eps_tail)?;
    spec.validate()?;
    let dist = Distribution::of(spec)?;
    let nmax = dist.smallest_nmax(eps_tail) + TRUNCATION_PAD;
    Ok(Truncation::with_tail(nmax, eps_tail))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Pure,
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Pure(DVector<Complex64>),
    Mixed(DMatrix<Complex64>),
}

/// A field state on the truncated basis `|0⟩ … |nmax⟩`.
///
/// Immutable once constructed.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    repr: Repr,
    spec: Option<FieldSpec>,
    eps_tail: f64,
}

impl FieldState {
    /// Wraps a pure amplitude vector. The norm must be within `eps_tail` of 1.
    pub fn from_amplitudes(amplitudes: DVector<Complex64>, eps_tail: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidState("empty amplitude vector".into()));
        }
        let state = Self {
            repr: Repr::Pure(amplitudes),
            spec: None,
            eps_tail,
        };
        state.check_trace()?;
        Ok(state)
    }

    /// Wraps a density matrix. It must be square and exactly hermitian, with
    /// real nonnegative diagonal and trace within `eps_tail` of 1.
    pub fn from_density(matrix: DMatrix<Complex64>, eps_tail: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dim = matrix.nrows();
        for n in 0..dim {
            let d = matrix[(n, n)];
            if d.im != 0.0 || d.re < -1e-15 {
                return Err(Error::InvalidState(format!(
                    "diagonal entry {n} is not real and nonnegative: {d}"
                )));
            }
            for m in n + 1..dim {
                if matrix[(n, m)] != matrix[(m, n)].conj() {
                    return Err(Error::InvalidState(format!("not hermitian at ({n}, {m})")));
                }
            }
        }
        let state = Self {
            repr: Repr::Mixed(matrix),
            spec: None,
            eps_tail,
        };
        state.check_trace()?;
        Ok(state)
    }

    fn with_spec(mut self, spec: FieldSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    fn check_trace(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > self.eps_tail.max(1e-14) {
            return Err(Error::InvalidState(format!(
                "trace {tr} differs from 1 by more than {:e}",
                self.eps_tail
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> FieldKind {
        match self.repr {
            Repr::Pure(_) => FieldKind::Pure,
            Repr::Mixed(_) => FieldKind::Mixed,
        }
    }

    pub fn nmax(&self) -> usize {
        self.dim() - 1
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Pure(v) => v.len(),
            Repr::Mixed(m) => m.nrows(),
        }
    }

    pub fn eps_tail(&self) -> f64 {
        self.eps_tail
    }

    pub fn spec(&self) -> Option<&FieldSpec> {
        self.spec.as_ref()
    }

    pub fn amplitudes(&self) -> Option<&DVector<Complex64>> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Mixed(_) => None,
        }
    }

    /// The density matrix, materialized as `f f†` for pure states.
    pub fn density(&self) -> Cow<'_, DMatrix<Complex64>> {
        match &self.repr {
            Repr::Mixed(m) => Cow::Borrowed(m),
            Repr::Pure(f) => Cow::Owned(outer(f)),
        }
    }

    /// Mixed-state copy with `ρ_nm = f_n conj(f_m)`.
    pub fn to_density(&self) -> FieldState {
        FieldState {
            repr: Repr::Mixed(self.density().into_owned()),
            spec: self.spec.clone(),
            eps_tail: self.eps_tail,
        }
    }

    /// Photon-number populations `ρ_nn`.
    pub fn populations(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Pure(f) => f.iter().map(|c| c.norm_sqr()).collect(),
            Repr::Mixed(m) => (0..m.nrows()).map(|n| m[(n, n)].re).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.populations().iter().sum()
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        match &self.repr {
            Repr::Pure(f) => {
                let t: f64 = f.iter().map(|c| c.norm_sqr()).sum();
                t * t
            }
            Repr::Mixed(m) => m.iter().map(|c| c.norm_sqr()).sum(),
        }
    }

    /// True when every off-diagonal element is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        match &self.repr {
            Repr::Pure(f) => f.iter().filter(|c| **c != Complex64::new(0.0, 0.0)).count() <= 1,
            Repr::Mixed(m) => {
                let dim = m.nrows();
                (0..dim).all(|n| (0..dim).all(|k| n == k || m[(n, k)] == Complex64::new(0.0, 0.0)))
            }
        }
    }

    /// Mean photon number `Σ n ρ_nn`.
    pub fn mean_photon_number(&self) -> f64 {
        self.populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

fn outer(f: &DVector<Complex64>) -> DMatrix<Complex64> {
    let dim = f.len();
    DMatrix::from_fn(dim, dim, |n, m| {
        if n == m {
            Complex64::new(f[n].norm_sqr(), 0.0)
        } else {
            f[n] * f[m].conj()
        }
    })
}

/// Mixed-state copy of a pure state.
pub fn to_density(state: &FieldState) -> FieldState {
    state.to_density()
}

fn truncation_error(spec: &FieldSpec, trunc: Truncation, discarded: f64) -> Error {
    let required = choose_truncation(spec, trunc.eps_tail)
        .map(|t| t.nmax)
        .unwrap_or(usize::MAX);
    Error::Truncation {
        nmax: trunc.nmax,
        discarded,
        eps_tail: trunc.eps_tail,
        required,
    }
}

/// `ln|α₀ⁿ/√(n!)|` plus the phase `nθ`, assembled so that no factorial is formed.
fn coherent_log_terms(alpha: Complex64, n: usize) -> (f64, f64) {
    let r = alpha.norm();
    let ln_mag = if n == 0 {
        0.0
    } else {
        n as f64 * r.ln() - 0.5 * ln_factorial(n)
    };
    (ln_mag, n as f64 * alpha.arg())
}

fn renormalize(mut f: DVector<Complex64>) -> Result<DVector<Complex64>> {
    let norm: f64 = f.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidState("amplitude vector has zero norm".into()));
    }
    f.unscale_mut(norm);
    Ok(f)
}

/// Coherent state `f_n = e^{−|α₀|²/2} α₀ⁿ/√(n!)`, renormalized on the truncated basis.
pub fn make_coherent(alpha: Complex64, trunc: impl Into<Truncation>) -> Result<FieldState> {
    let trunc = trunc.into();
    check_eps(trunc.eps_tail)?;
    let spec = FieldSpec::Coherent { alpha };
    spec.validate()?;
    let discarded = Distribution::of(&spec)?.tail_above(trunc.nmax);
    if discarded >= trunc.eps_tail {
        return Err(truncation_error(&spec, trunc, discarded));
    }
    let half_lambda = 0.5 * alpha.norm_sqr();
    let f = if alpha.norm() < VACUUM_ALPHA {
        DVector::from_fn(trunc.dim(), |n, _| Complex64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0))
    } else {
        DVector::from_fn(trunc.dim(), |n, _| {
            let (ln_mag, phase) = coherent_log_terms(alpha, n);
            Complex64::from_polar((ln_mag - half_lambda).exp(), phase)
        })
    };
    let f = renormalize(f)?;
    Ok(FieldState::from_amplitudes(f, trunc.eps_tail)?.with_spec(spec))
}

/// Schrödinger cat `N(|α₀⟩ ± e^{iφ}|−α₀⟩)`:
/// `f_n = N e^{−|α₀|²/2} α₀ⁿ (1 ± e^{iφ}(−1)ⁿ)/√(n!)`, renormalized on the truncated basis.
pub fn make_cat(
    alpha: Complex64,
    phi: f64,
    parity: CatParity,
    trunc: impl Into<Truncation>,
) -> Result<FieldState> {
    let trunc = trunc.into();
    check_eps(trunc.eps_tail)?;
    let spec = FieldSpec::Cat { alpha, phi, parity };
    spec.validate()?;
    let norm = cat_normalization(alpha, phi, parity)?;
    let discarded = Distribution::of(&spec)?.tail_above(trunc.nmax);
    if discarded >= trunc.eps_tail {
        return Err(truncation_error(&spec, trunc, discarded));
    }
    let rel = Complex64::from_polar(parity.sign(), phi);
    let f = if alpha.norm() < VACUUM_ALPHA {
        let f0 = Complex64::new(1.0, 0.0) + rel;
        if f0.norm() < 1e-12 {
            return Err(Error::param("alpha", "odd cat of the vacuum has zero norm"));
        }
        DVector::from_fn(trunc.dim(), |n, _| if n == 0 { f0 } else { Complex64::new(0.0, 0.0) })
    } else {
        let half_lambda = 0.5 * alpha.norm_sqr();
        let ln_norm = norm.ln();
        DVector::from_fn(trunc.dim(), |n, _| {
            let branch = if n % 2 == 0 {
                Complex64::new(1.0, 0.0) + rel
            } else {
                Complex64::new(1.0, 0.0) - rel
            };
            if branch.norm() < 1e-15 {
                return Complex64::new(0.0, 0.0);
            }
            let (ln_mag, phase) = coherent_log_terms(alpha, n);
            Complex64::from_polar((ln_norm + ln_mag - half_lambda).exp(), phase) * branch
        })
    };
    let f = renormalize(f)?;
    Ok(FieldState::from_amplitudes(f, trunc.eps_tail)?.with_spec(spec))
}

/// Thermal state `p_n = n̄ⁿ/(1+n̄)^{n+1}`, strictly diagonal.
///
/// The discarded tail is not renormalized away; it stays inside the trace
/// tolerance.
pub fn make_thermal(nbar: f64, trunc: impl Into<Truncation>) -> Result<FieldState> {
    let trunc = trunc.into();
    check_eps(trunc.eps_tail)?;
    let spec = FieldSpec::Thermal { nbar };
    spec.validate()?;
    let dist = Distribution::of(&spec)?;
    let discarded = dist.tail_above(trunc.nmax);
    if discarded >= trunc.eps_tail {
        return Err(truncation_error(&spec, trunc, discarded));
    }
    let ln_base = -(1.0 + nbar).ln();
    let ln_ratio = if nbar > 0.0 { (nbar / (1.0 + nbar)).ln() } else { f64::NEG_INFINITY };
    let dim = trunc.dim();
    let mut rho = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for n in 0..dim {
        let p = if n == 0 {
            ln_base.exp()
        } else if nbar == 0.0 {
            0.0
        } else {
            (ln_base + n as f64 * ln_ratio).exp()
        };
        rho[(n, n)] = Complex64::new(p, 0.0);
    }
    Ok(FieldState::from_density(rho, trunc.eps_tail)?.with_spec(spec))
}

/// Fock state `|n⟩`; requires `n ≤ nmax − 2` so the evolution can move it up by one.
pub fn make_fock(n: usize, trunc: impl Into<Truncation>) -> Result<FieldState> {
    let trunc = trunc.into();
    check_eps(trunc.eps_tail)?;
    if n + TRUNCATION_PAD > trunc.nmax {
        return Err(Error::param(
            "n",
            format!("Fock index {n} needs nmax >= {}, got {}", n + TRUNCATION_PAD, trunc.nmax),
        ));
    }
    let f = DVector::from_fn(trunc.dim(), |k, _| Complex64::new(if k == n { 1.0 } else { 0.0 }, 0.0));
    Ok(FieldState::from_amplitudes(f, trunc.eps_tail)?.with_spec(FieldSpec::Fock { n }))
}

/// Builds any spec at its automatically chosen truncation.
pub fn make_field(spec: &FieldSpec, eps_tail: f64) -> Result<FieldState> {
    let trunc = choose_truncation(spec, eps_tail)?;
    make_field_at(spec, trunc)
}

/// Builds any spec at an explicit truncation.
pub fn make_field_at(spec: &FieldSpec, trunc: Truncation) -> Result<FieldState> {
    match *spec {
        FieldSpec::Coherent { alpha } => make_coherent(alpha, trunc),
        FieldSpec::Cat { alpha, phi, parity } => make_cat(alpha, phi, parity, trunc),
        FieldSpec::Thermal { nbar } => make_thermal(nbar, trunc),
        FieldSpec::Fock { n } => make_fock(n, trunc),
    }
}
