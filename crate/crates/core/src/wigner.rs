//! Wigner function of a truncated field density matrix via the Laguerre series
//!
//! ```text
//! W(α) = (2/π) e^{−2|α|²} [ Σ_m (−1)^m L_m(4|α|²) ρ_mm
//!        + Σ_{m>n} (−1)^n √(n!/m!) L_n^{m−n}(4|α|²) 2 Re{(2α)^{m−n} ρ_nm} ]
//! ```
//!
//! Each term's magnitude prefactor `e^{−2|α|²} √(n!/m!) |2α|^{m−n}` is formed in
//! the log domain together with the Laguerre sweep's running scale, then
//! exponentiated once. Terms are accumulated with compensated summation in a
//! fixed order, so a node's value does not depend on how a grid is scheduled.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::special::{half_ln_factorials, CompensatedSum, LaguerreSweep};

pub use crate::special::laguerre_assoc;

/// Largest number of grid intervals per axis.
pub const MAX_GRID_INTERVALS: f64 = 4096.0;
/// Default grid spacing.
pub const DEFAULT_STEP: f64 = 0.05;

/// Square sampling grid in the α plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    center: Complex64,
    half_width: f64,
    step: f64,
}

impl GridSpec {
    pub fn new(center: Complex64, half_width: f64, step: f64) -> Result<Self> {
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::param("center", "must be finite"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::param("half_width", format!("must be > 0, got {half_width}")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::param("step", format!("must be > 0, got {step}")));
        }
        if 2.0 * half_width / step > MAX_GRID_INTERVALS {
            return Err(Error::param(
                "step",
                format!("2·half_width/step = {} exceeds {MAX_GRID_INTERVALS}", 2.0 * half_width / step),
            ));
        }
        Ok(Self {
            center,
            half_width,
            step,
        })
    }

    /// Default extent for a state: `max(4, |α₀| + 3)` for coherent and cat
    /// states, `4 + 2√n̄` for thermal states, `max(4, √n + 3)` for Fock states;
    /// centered at the origin with step 0.05.
    pub fn default_for(spec: &FieldSpec) -> Self {
        let half_width = match *spec {
            FieldSpec::Coherent { alpha } | FieldSpec::Cat { alpha, .. } => (alpha.norm() + 3.0).max(4.0),
            FieldSpec::Thermal { nbar } => 4.0 + 2.0 * nbar.sqrt(),
            FieldSpec::Fock { n } => ((n as f64).sqrt() + 3.0).max(4.0),
        };
        Self {
            center: Complex64::new(0.0, 0.0),
            half_width,
            step: DEFAULT_STEP,
        }
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn with_step(self, step: f64) -> Result<Self> {
        Self::new(self.center, self.half_width, step)
    }

    /// Number of steps from the center to the outermost node.
    pub fn half_nodes(&self) -> usize {
        (self.half_width / self.step + 1e-9).floor() as usize
    }

    /// Nodes per axis, `2K + 1`.
    pub fn nodes_per_axis(&self) -> usize {
        2 * self.half_nodes() + 1
    }

    /// Offset of node `i` along either axis from the center.
    #[inline]
    pub fn offset(&self, i: usize) -> f64 {
        (i as f64 - self.half_nodes() as f64) * self.step
    }

    /// Phase-space point at column `ix` (Re α) and row `iy` (Im α).
    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(self.center.re + self.offset(ix), self.center.im + self.offset(iy))
    }
}

/// Wigner samples on a [`GridSpec`], row-major with rows along Im α.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub nmax_used: usize,
}

impl WignerGrid {
    pub fn nodes_per_axis(&self) -> usize {
        self.spec.nodes_per_axis()
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nodes_per_axis() + ix]
    }

    /// `(α, W(α))` for every node, rows of increasing Im α.
    pub fn iter(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        let n = self.nodes_per_axis();
        (0..n).flat_map(move |iy| (0..n).map(move |ix| (self.spec.node(ix, iy), self.get(ix, iy))))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Node with the largest value.
    pub fn argmax(&self) -> (Complex64, f64) {
        self.iter()
            .fold((Complex64::new(0.0, 0.0), f64::NEG_INFINITY), |best, (a, w)| if w > best.1 { (a, w) } else { best })
    }
}

/// Precomputed series data for one density matrix.
#[derive(Clone, Debug)]
pub struct WignerEvaluator {
    nmax: usize,
    diag: Vec<f64>,
    /// Hermitian part `(ρ_nm + conj ρ_mn)/2` of the band `m = n + k`, indexed `[k][n]`.
    bands: Vec<Vec<Complex64>>,
    half_ln_fact: Vec<f64>,
}

impl WignerEvaluator {
    /// Prepares the series for `rho`, which must be square with a real diagonal
    /// (to within 1e-12) and trace within 1e-8 of 1.
    pub fn new(rho: &DMatrix<Complex64>) -> Result<Self> {
        if !rho.is_square() || rho.nrows() == 0 {
            return Err(Error::InvalidState("density matrix must be square and non-empty".into()));
        }
        let dim = rho.nrows();
        let nmax = dim - 1;
        let mut diag = Vec::with_capacity(dim);
        for n in 0..dim {
            let d = rho[(n, n)];
            if d.im.abs() > 1e-12 {
                return Err(Error::InvalidState(format!("diagonal entry {n} has imaginary part {}", d.im)));
            }
            diag.push(d.re);
        }
        let trace: f64 = diag.iter().sum();
        if !((trace - 1.0).abs() <= 1e-8) {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1 by more than 1e-8")));
        }
        let mut bands: Vec<Vec<Complex64>> = (1..dim)
            .map(|k| (0..dim - k).map(|n| (rho[(n, n + k)] + rho[(n + k, n)].conj()) * 0.5).collect())
            .collect();
        while bands.last().is_some_and(|b| b.iter().all(|c| *c == Complex64::new(0.0, 0.0))) {
            bands.pop();
        }
        Ok(Self {
            nmax,
            diag,
            bands,
            half_ln_fact: half_ln_factorials(nmax),
        })
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    /// Highest populated off-diagonal band.
    pub fn bandwidth(&self) -> usize {
        self.bands.len()
    }

    /// `W(α)`.
    pub fn eval(&self, alpha: Complex64) -> Result<f64> {
        let r2 = alpha.norm_sqr();
        let x = 4.0 * r2;
        let gauss = -2.0 * r2;
        let mut acc = CompensatedSum::new();

        let mut sweep = LaguerreSweep::new(0, x);
        for (n, &p) in self.diag.iter().enumerate() {
            if p != 0.0 {
                let (l, scale) = sweep.value();
                let term = l * p * (gauss + scale).exp();
                if !term.is_finite() {
                    return Err(Error::NumericalOverflow { n, m: n });
                }
                acc.add(if n % 2 == 0 { term } else { -term });
            }
            sweep.advance();
        }

        if r2 > 0.0 {
            let ln_two_r = (2.0 * r2.sqrt()).ln();
            let theta = alpha.arg();
            for (band, coeffs) in self.bands.iter().enumerate() {
                let k = band + 1;
                let phase = Complex64::from_polar(1.0, k as f64 * theta);
                let ln_k = gauss + k as f64 * ln_two_r;
                let mut sweep = LaguerreSweep::new(k, x);
                for (n, &c) in coeffs.iter().enumerate() {
                    if c != Complex64::new(0.0, 0.0) {
                        let m = n + k;
                        let (l, scale) = sweep.value();
                        let ln_w = ln_k + self.half_ln_fact[n] - self.half_ln_fact[m] + scale;
                        let term = 2.0 * l * (phase * c).re * ln_w.exp();
                        if !term.is_finite() {
                            return Err(Error::NumericalOverflow { n, m });
                        }
                        acc.add(if n % 2 == 0 { term } else { -term });
                    }
                    sweep.advance();
                }
            }
        }
        Ok(FRAC_2_PI * acc.value())
    }
}

/// `W(α)` of `rho` at a single point.
pub fn wigner_point(rho: &DMatrix<Complex64>, alpha: Complex64) -> Result<f64> {
    WignerEvaluator::new(rho)?.eval(alpha)
}

/// Single-sum form for a diagonal state,
/// `W(α) = (2/π) e^{−2|α|²} Σ_n (−1)ⁿ L_n(4|α|²) p_n`.
pub fn wigner_diagonal(populations: &[f64], alpha: Complex64) -> f64 {
    let r2 = alpha.norm_sqr();
    let mut sweep = LaguerreSweep::new(0, 4.0 * r2);
    let mut acc = CompensatedSum::new();
    for (n, &p) in populations.iter().enumerate() {
        let (l, scale) = sweep.value();
        let term = p * l * (scale - 2.0 * r2).exp();
        acc.add(if n % 2 == 0 { term } else { -term });
        sweep.advance();
    }
    FRAC_2_PI * acc.value()
}

/// Whether grid nodes are evaluated on the rayon pool or on the calling thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Parallelism {
    Serial,
    #[default]
    Parallel,
}

/// `W` at every node of `spec`, evaluated in parallel.
pub fn wigner_grid(rho: &DMatrix<Complex64>, spec: &GridSpec) -> Result<WignerGrid> {
    wigner_grid_with(rho, spec, Parallelism::Parallel)
}

pub fn wigner_grid_with(rho: &DMatrix<Complex64>, spec: &GridSpec, mode: Parallelism) -> Result<WignerGrid> {
    let eval = WignerEvaluator::new(rho)?;
    let n = spec.nodes_per_axis();
    let row = |iy: usize| -> Result<Vec<f64>> { (0..n).map(|ix| eval.eval(spec.node(ix, iy))).collect() };
    let rows: Vec<Vec<f64>> = match mode {
        Parallelism::Serial => (0..n).map(row).collect::<Result<_>>()?,
        Parallelism::Parallel => (0..n).into_par_iter().map(row).collect::<Result<_>>()?,
    };
    Ok(WignerGrid {
        spec: *spec,
        values: rows.into_iter().flatten().collect(),
        nmax_used: eval.nmax(),
    })
}

/// Midpoint-rule integral `Σ W · step²`.
pub fn grid_integral(grid: &WignerGrid) -> f64 {
    let s: CompensatedSum = grid.values.iter().copied().collect();
    s.value() * grid.spec.step * grid.spec.step
}

/// Integrated negative part `Σ max(0, −W) · step²`.
pub fn negativity_volume(grid: &WignerGrid) -> f64 {
    let s: CompensatedSum = grid.values.iter().map(|w| (-w).max(0.0)).collect();
    s.value() * grid.spec.step * grid.spec.step
}

/// `(2/π) e^{−2|α−α₀|²}`
pub fn analytic_coherent_wigner(alpha0: Complex64, alpha: Complex64) -> f64 {
    FRAC_2_PI * (-2.0 * (alpha - alpha0).norm_sqr()).exp()
}

/// `(2/(π(1+2n̄))) e^{−2|α|²/(1+2n̄)}`
pub fn analytic_thermal_wigner(nbar: f64, alpha: Complex64) -> f64 {
    let s = 1.0 + 2.0 * nbar;
    2.0 / (PI * s) * (-2.0 * alpha.norm_sqr() / s).exp()
}

/// A grid node and its value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub location: Complex64,
    pub value: f64,
}

/// Two-lobe structure of a cat-like Wigner function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatSignature {
    /// Largest W within radius 1 of `+α₀`.
    pub peak_plus: Peak,
    /// Largest W within radius 1 of `−α₀`.
    pub peak_minus: Peak,
    /// Largest-magnitude W within radius 0.5 of the origin.
    pub fringe_extremum: Peak,
    /// Sign of `fringe_extremum` (−1, 0 or 1).
    pub fringe_sign: i8,
}

pub const PEAK_RADIUS: f64 = 1.0;
pub const FRINGE_RADIUS: f64 = 0.5;

fn region_best(
    grid: &WignerGrid,
    center: Complex64,
    radius: f64,
    better: impl Fn(f64, f64) -> bool,
) -> Option<Peak> {
    let mut best: Option<Peak> = None;
    for (a, w) in grid.iter() {
        if (a - center).norm() <= radius + 1e-12 && best.map_or(true, |b| better(w, b.value)) {
            best = Some(Peak { location: a, value: w });
        }
    }
    best
}

/// Peaks near `±α₀` and the interference extremum near the origin.
pub fn cat_signature(grid: &WignerGrid, alpha0: Complex64) -> Result<CatSignature> {
    let missing = |what: &str| Error::param("grid", format!("no grid node within the {what} region"));
    let peak_plus = region_best(grid, alpha0, PEAK_RADIUS, |a, b| a > b).ok_or_else(|| missing("+α₀"))?;
    let peak_minus = region_best(grid, -alpha0, PEAK_RADIUS, |a, b| a > b).ok_or_else(|| missing("−α₀"))?;
    let fringe = region_best(grid, Complex64::new(0.0, 0.0), FRINGE_RADIUS, |a, b| a.abs() > b.abs())
        .ok_or_else(|| missing("origin"))?;
    let fringe_sign = if fringe.value > 0.0 {
        1
    } else if fringe.value < 0.0 {
        -1
    } else {
        0
    };
    Ok(CatSignature {
        peak_plus,
        peak_minus,
        fringe_extremum: fringe,
        fringe_sign,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{choose_truncation, make_cat, make_coherent, make_fock, make_thermal, CatParity};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_origin() {
        let rho = make_fock(0, 4).unwrap().to_density();
        assert!((wigner_point(&rho.density(), c(0.0, 0.0)).unwrap() - FRAC_2_PI).abs() < 1e-15);
    }

    #[test]
    fn single_photon_origin() {
        let rho = make_fock(1, 4).unwrap().to_density();
        assert!((wigner_point(&rho.density(), c(0.0, 0.0)).unwrap() + FRAC_2_PI).abs() < 1e-15);
    }

    #[test]
    fn fock_one_profile() {
        // W_1(α) = (2/π) e^{−2|α|²} (4|α|² − 1)
        let rho = make_fock(1, 4).unwrap().density().into_owned();
        for &a in &[c(0.3, 0.1), c(-1.0, 0.7), c(0.0, 2.0)] {
            let expect = FRAC_2_PI * (-2.0 * a.norm_sqr()).exp() * (4.0 * a.norm_sqr() - 1.0);
            assert!((wigner_point(&rho, a).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn coherent_peak_value() {
        let alpha0 = Complex64::from_polar(1.7, -0.6);
        let t = choose_truncation(&FieldSpec::Coherent { alpha: alpha0 }, 1e-12).unwrap();
        let rho = make_coherent(alpha0, t).unwrap().density().into_owned();
        assert!((wigner_point(&rho, alpha0).unwrap() - FRAC_2_PI).abs() < 1e-10);
    }

    #[test]
    fn coherent_matches_closed_form_on_grid() {
        // far from alpha0 the truncated tail still shows at 1e-9, so cut off generously
        let alpha0 = c(1.1, 0.5);
        let rho = make_coherent(alpha0, 40).unwrap().density().into_owned();
        let spec = GridSpec::new(alpha0, 2.0, 0.1).unwrap();
        assert_eq!(spec.nodes_per_axis(), 41);
        let g = wigner_grid(&rho, &spec).unwrap();
        for (a, w) in g.iter() {
            assert!((w - analytic_coherent_wigner(alpha0, a)).abs() < 1e-10, "at {a}");
        }
    }

    #[test]
    fn thermal_matches_closed_form() {
        for &nbar in &[0.0, 0.5, 1.0, 3.0] {
            let t = choose_truncation(&FieldSpec::Thermal { nbar }, 1e-13).unwrap();
            let rho = make_thermal(nbar, t).unwrap().density().into_owned();
            for &a in &[c(0.0, 0.0), c(0.4, -0.3), c(1.5, 1.0), c(-2.5, 0.2)] {
                let w = wigner_point(&rho, a).unwrap();
                assert!((w - analytic_thermal_wigner(nbar, a)).abs() < 1e-10, "nbar={nbar} a={a}");
            }
        }
        assert!((analytic_thermal_wigner(1.0, c(0.0, 0.0)) - 2.0 / (3.0 * PI)).abs() < 1e-16);
        assert_eq!(analytic_thermal_wigner(0.0, c(0.3, 0.2)), analytic_coherent_wigner(c(0.0, 0.0), c(0.3, 0.2)));
    }

    #[test]
    fn thermal_closed_form_matches_stationary_series() {
        // (2/(π(1+n̄))) e^{−2|α|²} Σ (−n̄/(1+n̄))^m L_m(4|α|²), summed directly
        for &nbar in &[0.2f64, 1.0, 2.5, 5.0] {
            for &a in &[c(0.0, 0.0), c(0.5, 0.5), c(1.2, -0.4), c(2.0, 0.0)] {
                let x = 4.0 * a.norm_sqr();
                let ratio = -nbar / (1.0 + nbar);
                let mut s = 0.0;
                for m in 0..2000 {
                    s += ratio.powi(m) * laguerre_assoc(m as usize, 0, x);
                }
                let series = 2.0 / (PI * (1.0 + nbar)) * (-2.0 * a.norm_sqr()).exp() * s;
                assert!((series - analytic_thermal_wigner(nbar, a)).abs() < 1e-10, "nbar={nbar} a={a}");
            }
        }
    }

    #[test]
    fn one_node_grid() {
        let rho = make_fock(0, 4).unwrap().density().into_owned();
        let spec = GridSpec::new(c(0.0, 0.0), 0.01, 0.05).unwrap();
        let g = wigner_grid(&rho, &spec).unwrap();
        assert_eq!(g.values.len(), 1);
        assert!((g.values[0] - FRAC_2_PI).abs() < 1e-15);
    }

    #[test]
    fn coherent_argmax_near_centroid() {
        let alpha0 = c(1.0, 0.0);
        let spec = GridSpec::default_for(&FieldSpec::Coherent { alpha: alpha0 });
        let rho = make_coherent(alpha0, 20).unwrap().density().into_owned();
        let g = wigner_grid(&rho, &spec).unwrap();
        let (loc, _) = g.argmax();
        assert!((loc - alpha0).norm() <= spec.step() + 1e-12);
    }

    #[test]
    fn grid_rejects_bad_specs() {
        assert!(GridSpec::new(c(0.0, 0.0), 0.0, 0.1).is_err());
        assert!(GridSpec::new(c(0.0, 0.0), 1.0, 0.0).is_err());
        assert!(GridSpec::new(c(0.0, 0.0), 10.0, 0.001).is_err());
        assert!(GridSpec::new(c(0.0, 0.0), 2.048, 0.001).is_ok());
    }

    #[test]
    fn vacuum_integral_and_negativity() {
        let rho = make_fock(0, 4).unwrap().density().into_owned();
        let g = wigner_grid(&rho, &GridSpec::new(c(0.0, 0.0), 6.0, 0.05).unwrap()).unwrap();
        assert!((grid_integral(&g) - 1.0).abs() < 1e-3);
        assert_eq!(negativity_volume(&g), 0.0);
    }

    #[test]
    fn thermal_integral_and_negativity() {
        let rho = make_thermal(1.0, 35).unwrap().density().into_owned();
        let g = wigner_grid(&rho, &GridSpec::default_for(&FieldSpec::Thermal { nbar: 1.0 })).unwrap();
        assert!((grid_integral(&g) - 1.0).abs() < 1e-3);
        assert!(negativity_volume(&g) < 1e-12);
    }

    #[test]
    fn cat_signatures_at_start() {
        let alpha0 = c(5f64.sqrt(), 0.0);
        let spec = GridSpec::default_for(&FieldSpec::Coherent { alpha: alpha0 });
        let even = make_cat(alpha0, 0.0, CatParity::Even, 40).unwrap().density().into_owned();
        let sig = cat_signature(&wigner_grid(&even, &spec).unwrap(), alpha0).unwrap();
        assert!((sig.fringe_extremum.value - FRAC_2_PI).abs() < 1e-9);
        assert_eq!(sig.fringe_sign, 1);
        assert!((sig.peak_plus.location - alpha0).norm() <= spec.step());
        assert!((sig.peak_minus.location + alpha0).norm() <= spec.step());

        let odd = make_cat(alpha0, 0.0, CatParity::Odd, 40).unwrap().density().into_owned();
        let g = wigner_grid(&odd, &spec).unwrap();
        let sig = cat_signature(&g, alpha0).unwrap();
        assert!((sig.fringe_extremum.value + FRAC_2_PI).abs() < 1e-9);
        assert_eq!(sig.fringe_sign, -1);
        assert!(negativity_volume(&g) > 0.0);
    }

    #[test]
    fn coherent_has_no_mirror_peak() {
        let alpha0 = c(5f64.sqrt(), 0.0);
        let rho = make_coherent(alpha0, 30).unwrap().density().into_owned();
        let g = wigner_grid(&rho, &GridSpec::default_for(&FieldSpec::Coherent { alpha: alpha0 })).unwrap();
        let sig = cat_signature(&g, alpha0).unwrap();
        assert!(sig.peak_minus.value < 0.05 * FRAC_2_PI);
    }

    #[test]
    fn serial_and_parallel_grids_are_bitwise_equal() {
        let rho = make_cat(c(1.3, 0.8), 0.5, CatParity::Odd, 30).unwrap().density().into_owned();
        let spec = GridSpec::new(c(0.1, -0.2), 3.0, 0.1).unwrap();
        let a = wigner_grid_with(&rho, &spec, Parallelism::Serial).unwrap();
        let b = wigner_grid_with(&rho, &spec, Parallelism::Parallel).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn large_cutoff_far_from_origin_stays_finite() {
        // thermal n̄ = 20 needs a cutoff in the hundreds; the Laguerre sweep
        // would overflow without rescaling far from the origin
        let t = choose_truncation(&FieldSpec::Thermal { nbar: 20.0 }, 1e-10).unwrap();
        assert!(t.nmax > 400);
        let rho = make_thermal(20.0, t).unwrap().density().into_owned();
        for &a in &[c(0.0, 0.0), c(3.0, 1.0), c(8.0, 0.0), c(12.0, 12.0)] {
            let w = wigner_point(&rho, a).unwrap();
            assert!((w - analytic_thermal_wigner(20.0, a)).abs() < 1e-10, "a={a}: {w}");
        }
    }

    #[test]
    fn rejects_invalid_matrices() {
        let mut m = DMatrix::from_element(3, 3, c(0.0, 0.0));
        m[(0, 0)] = c(0.5, 0.0);
        assert!(wigner_point(&m, c(0.0, 0.0)).is_err());
        m[(0, 0)] = c(1.0, 1e-6);
        assert!(wigner_point(&m, c(0.0, 0.0)).is_err());
        assert!(wigner_point(&DMatrix::from_element(2, 3, c(0.0, 0.0)), c(0.0, 0.0)).is_err());
    }

    fn random_density(seed: &[f64], dim: usize) -> DMatrix<Complex64> {
        let g = DMatrix::from_fn(dim, dim, |i, j| {
            let k = (i * dim + j) % seed.len();
            c(seed[k] * ((i + 1) as f64).sin(), seed[(k + 1) % seed.len()] * ((j + 2) as f64).cos())
        });
        let rho = &g * g.adjoint();
        let tr: f64 = (0..dim).map(|n| rho[(n, n)].re).sum();
        let mut rho = rho.unscale(tr);
        for n in 0..dim {
            rho[(n, n)].im = 0.0;
            for m in n + 1..dim {
                rho[(m, n)] = rho[(n, m)].conj();
            }
        }
        rho
    }

    proptest! {
        #[test]
        fn parity_identity_at_origin(seed in prop::collection::vec(-1.0..1.0f64, 8), dim in 1usize..25) {
            let rho = random_density(&seed, dim);
            let w = wigner_point(&rho, c(0.0, 0.0)).unwrap();
            let parity: f64 = (0..dim).map(|n| if n % 2 == 0 { rho[(n, n)].re } else { -rho[(n, n)].re }).sum();
            prop_assert!((w - FRAC_2_PI * parity).abs() < 1e-12);
        }

        #[test]
        fn bounded_by_two_over_pi(seed in prop::collection::vec(-1.0..1.0f64, 8), dim in 1usize..25, re in -4.0..4.0f64, im in -4.0..4.0f64) {
            let rho = random_density(&seed, dim);
            let w = wigner_point(&rho, c(re, im)).unwrap();
            prop_assert!(w.abs() <= FRAC_2_PI + 1e-9);
        }

        #[test]
        fn adjoint_gives_bitwise_same_value(seed in prop::collection::vec(-1.0..1.0f64, 8), dim in 1usize..20, re in -3.0..3.0f64, im in -3.0..3.0f64) {
            let mut rho = random_density(&seed, dim);
            // perturb the lower triangle so ρ† differs from ρ as stored
            if dim > 1 {
                rho[(1, 0)] += c(1e-3, -2e-3);
            }
            let a = wigner_point(&rho, c(re, im)).unwrap();
            let b = wigner_point(&rho.adjoint(), c(re, im)).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }

        #[test]
        fn diagonal_single_sum_agrees(nbar in 0.0..3.0f64, re in -3.0..3.0f64, im in -3.0..3.0f64) {
            let rho = make_thermal(nbar, choose_truncation(&FieldSpec::Thermal { nbar }, 1e-10).unwrap()).unwrap();
            let a = c(re, im);
            let full = wigner_point(&rho.density(), a).unwrap();
            let single = wigner_diagonal(&rho.populations(), a);
            prop_assert!((full - single).abs() < 1e-12);
        }
    }
}
