//! Brute-force reference paths, sharing no code with the closed-form evolution
//! or the Laguerre series.
//!
//! * [`oracle_evolve`] propagates the joint atom-field density matrix with the
//!   exact propagator of each coupled doublet `{|a,n⟩, |b,n+1⟩}`, obtained by
//!   numerically diagonalizing its 2×2 interaction-picture Hamiltonian
//!   `[[Δ/2, g√(n+1)], [g√(n+1), −Δ/2]]`. `|b,0⟩` is uncoupled with energy `−Δ/2`.
//! * [`oracle_wigner`] evaluates `W(α) = (2/π) Tr[D(−α) ρ D(α) Π]` with the
//!   displacement operator built by a Taylor scaling-and-squaring matrix
//!   exponential on an enlarged truncated basis.

use std::f64::consts::FRAC_2_PI;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{AtomPrep, ModelParams};
use crate::field::FieldState;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Extra Fock levels the evolution oracle adds beyond the input cutoff.
pub const DEFAULT_HEADROOM: usize = 10;

/// Joint density matrix on `{|a,0⟩ … |a,N⟩, |b,0⟩ … |b,N⟩}`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    pub matrix: DMatrix<Complex64>,
    pub nmax: usize,
}

impl JointState {
    #[inline]
    pub fn index_a(&self, n: usize) -> usize {
        n
    }

    #[inline]
    pub fn index_b(&self, n: usize) -> usize {
        self.nmax + 1 + n
    }

    pub fn trace(&self) -> f64 {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Field blocks `⟨a|ρ|a⟩` and `⟨b|ρ|b⟩`.
    pub fn branches(&self) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let d = self.nmax + 1;
        (
            self.matrix.view((0, 0), (d, d)).into_owned(),
            self.matrix.view((d, d), (d, d)).into_owned(),
        )
    }

    /// Populations of `|a⟩` and `|b⟩`.
    pub fn atomic_populations(&self) -> (f64, f64) {
        let d = self.nmax + 1;
        let pa = (0..d).map(|n| self.matrix[(n, n)].re).sum();
        let pb = (d..2 * d).map(|n| self.matrix[(n, n)].re).sum();
        (pa, pb)
    }
}

/// Oracle output: the joint state plus its reductions, restricted to the
/// input's cutoff where noted.
#[derive(Clone, Debug)]
pub struct OracleEvolution {
    pub joint: JointState,
    /// `⟨a|ρ|a⟩` on the input basis `0..=nmax`.
    pub rho_aa: DMatrix<Complex64>,
    /// `⟨b|ρ|b⟩` on the input basis.
    pub rho_bb: DMatrix<Complex64>,
    /// Partial trace over the atom on the input basis.
    pub rho_f: DMatrix<Complex64>,
    /// `P_a − P_b` over the full working basis.
    pub inversion: f64,
}

/// Exact propagator `exp(−iHt)` of one doublet, from its eigendecomposition.
pub fn doublet_propagator(n: usize, params: &ModelParams) -> Matrix2<Complex64> {
    let half_delta = 0.5 * params.detuning();
    let coupling = params.coupling() * ((n + 1) as f64).sqrt();
    let h = Matrix2::new(half_delta, coupling, coupling, -half_delta);
    let eig = SymmetricEigen::new(h);
    let t = params.time();
    let mut u = Matrix2::from_element(ZERO);
    for j in 0..2 {
        let phase = Complex64::from_polar(1.0, -eig.eigenvalues[j] * t);
        let v = eig.eigenvectors.column(j);
        for r in 0..2 {
            for c in 0..2 {
                u[(r, c)] += phase * (v[r] * v[c]);
            }
        }
    }
    u
}

fn joint_propagator(nmax: usize, params: &ModelParams) -> DMatrix<Complex64> {
    let d = nmax + 1;
    let mut u = DMatrix::from_element(2 * d, 2 * d, ZERO);
    let half_delta = 0.5 * params.detuning();
    let t = params.time();
    // |b,0⟩ is uncoupled
    u[(d, d)] = Complex64::from_polar(1.0, half_delta * t);
    for n in 0..d {
        let ia = n;
        if n + 1 < d {
            let ib = d + n + 1;
            let block = doublet_propagator(n, params);
            u[(ia, ia)] = block[(0, 0)];
            u[(ia, ib)] = block[(0, 1)];
            u[(ib, ia)] = block[(1, 0)];
            u[(ib, ib)] = block[(1, 1)];
        } else {
            // |a,N⟩ loses its partner at the cutoff; the headroom keeps it empty.
            u[(ia, ia)] = Complex64::from_polar(1.0, -half_delta * t);
        }
    }
    u
}

/// Exact joint evolution of `ρ_f(0) ⊗ |ψ_atom⟩⟨ψ_atom|` on a basis enlarged by `headroom`.
pub fn oracle_evolve(
    rho0: &FieldState,
    atom: &AtomPrep,
    params: &ModelParams,
    headroom: usize,
) -> Result<OracleEvolution> {
    let field = rho0.density();
    let d_in = field.nrows();
    let nmax = d_in - 1 + headroom;
    let d = nmax + 1;
    let amps = [atom.c_a(), atom.c_b()];
    let mut joint0 = DMatrix::from_element(2 * d, 2 * d, ZERO);
    for (s, cs) in amps.iter().enumerate() {
        for (s2, cs2) in amps.iter().enumerate() {
            let w = cs * cs2.conj();
            for n in 0..d_in {
                for m in 0..d_in {
                    joint0[(s * d + n, s2 * d + m)] = w * field[(n, m)];
                }
            }
        }
    }
    let u = joint_propagator(nmax, params);
    let evolved = &u * joint0 * u.adjoint();
    let joint = JointState { matrix: evolved, nmax };
    let (aa_full, bb_full) = joint.branches();
    let (pa, pb) = joint.atomic_populations();
    let rho_aa = aa_full.view((0, 0), (d_in, d_in)).into_owned();
    let rho_bb = bb_full.view((0, 0), (d_in, d_in)).into_owned();
    let rho_f = &rho_aa + &rho_bb;
    Ok(OracleEvolution {
        joint,
        rho_aa,
        rho_bb,
        rho_f,
        inversion: pa - pb,
    })
}

/// Taylor order of the matrix-exponential core.
pub const TAYLOR_ORDER: usize = 18;

/// `exp(A)` by scaling and squaring: `A` is scaled by `2^-s` so its 1-norm is
/// at most 1/2, a degree-`order` Taylor polynomial is evaluated by Horner's
/// rule, and the result is squared `s + extra_squarings` times (with the
/// scaling adjusted to match).
pub fn expm_taylor(a: &DMatrix<f64>, order: usize, extra_squarings: u32) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = (0..n).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let base = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let squarings = base + extra_squarings;
    let scaled = a / 2f64.powi(squarings as i32);
    let eye = DMatrix::<f64>::identity(n, n);
    let mut t = eye.clone();
    for k in (1..=order).rev() {
        t = &eye + (&scaled * t) / k as f64;
    }
    for _ in 0..squarings {
        t = &t * &t;
    }
    t
}

pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    expm_taylor(a, TAYLOR_ORDER, 0)
}

/// Displacement operator `D(β) = exp(β a† − β* a)` on the truncated basis `0..dim`.
///
/// The real generator `|β|(a† − a)` is exponentiated and the phase of `β` is
/// applied as `D(β)_{mn} = e^{i(m−n) arg β} D(|β|)_{mn}`.
pub fn displacement(beta: Complex64, dim: usize) -> DMatrix<Complex64> {
    let r = beta.norm();
    let theta = beta.arg();
    let mut gen = DMatrix::<f64>::zeros(dim, dim);
    for n in 0..dim.saturating_sub(1) {
        let s = ((n + 1) as f64).sqrt() * r;
        gen[(n + 1, n)] = s;
        gen[(n, n + 1)] = -s;
    }
    let real = expm(&gen);
    DMatrix::from_fn(dim, dim, |m, n| {
        let v = real[(m, n)];
        if v == 0.0 {
            ZERO
        } else {
            Complex64::from_polar(1.0, (m as f64 - n as f64) * theta) * v
        }
    })
}

/// Highest Fock index with a nonzero row or column.
pub fn support(rho: &DMatrix<Complex64>) -> usize {
    let dim = rho.nrows();
    (0..dim)
        .rev()
        .find(|&n| (0..dim).any(|m| rho[(n, m)] != ZERO || rho[(m, n)] != ZERO))
        .unwrap_or(0)
}

/// Minimum headroom `|α|² + 6|α| + 10` beyond the state's support.
pub fn required_headroom(alpha: Complex64) -> usize {
    let r = alpha.norm();
    (r * r + 6.0 * r + 10.0).ceil() as usize
}

/// Headroom that also covers the spread `|α|√(2n+1)` of displaced high Fock states.
pub fn recommended_headroom(alpha: Complex64, support: usize) -> usize {
    let r = alpha.norm();
    let spread = (r * r + 4.0 * r * ((support + 1) as f64).sqrt() + 10.0).ceil() as usize;
    required_headroom(alpha).max(spread) + DEFAULT_HEADROOM
}

/// `W(α) = (2/π) Tr[D(−α) ρ D(α) Π]` with the displacement built on `0..=work_nmax`.
pub fn oracle_wigner(rho: &DMatrix<Complex64>, alpha: Complex64, work_nmax: usize) -> Result<f64> {
    if !rho.is_square() || rho.nrows() == 0 {
        return Err(Error::InvalidState("density matrix must be square and non-empty".into()));
    }
    let s = support(rho);
    let required = s + required_headroom(alpha);
    if work_nmax < required {
        return Err(Error::InsufficientHeadroom {
            have: work_nmax,
            required,
        });
    }
    let dim = work_nmax + 1;
    let d = displacement(-alpha, dim);
    let cols = d.columns(0, s + 1);
    let block = rho.view((0, 0), (s + 1, s + 1));
    let moved = cols * block * cols.adjoint();
    let mut re = 0.0;
    let mut im = 0.0;
    for k in 0..dim {
        let v = moved[(k, k)];
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        re += sign * v.re;
        im += sign * v.im;
    }
    if im.abs() > 1e-10 {
        return Err(Error::InvalidState(format!("parity expectation has imaginary part {im:e}")));
    }
    Ok(FRAC_2_PI * re)
}

/// [`oracle_wigner`] on a basis sized by [`recommended_headroom`].
pub fn oracle_wigner_auto(rho: &DMatrix<Complex64>, alpha: Complex64) -> Result<f64> {
    let s = support(rho);
    oracle_wigner(rho, alpha, s + recommended_headroom(alpha, s))
}
