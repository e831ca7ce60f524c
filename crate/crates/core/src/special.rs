//! Overflow-safe special functions: log-factorials, associated Laguerre
//! polynomials (plain and exponent-scaled), and compensated summation.

/// `ln(n!)` via the log-gamma function.
#[inline]
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

/// Half log-factorials `ln(√(j!))` for `j = 0..=nmax`.
pub fn half_ln_factorials(nmax: usize) -> Vec<f64> {
    (0..=nmax).map(|j| 0.5 * ln_factorial(j)).collect()
}

/// Associated Laguerre polynomial `L_n^k(x)` by the three-term upward recurrence
///
/// ```text
/// L_0^k = 1,  L_1^k = 1 + k - x,
/// (j+1) L_{j+1}^k = (2j + 1 + k - x) L_j^k - (j + k) L_{j-1}^k
/// ```
///
/// Evaluated in ordinary arithmetic; for large `n` and `x` the value may leave
/// the double range, in which case [`LaguerreSweep`] should be used instead.
pub fn laguerre_assoc(n: usize, k: usize, x: f64) -> f64 {
    let kf = k as f64;
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + kf - x;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - x) * cur - (jf + kf) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

const RESCALE_THRESHOLD: f64 = 1e150;
// 2^-500: exact power of two, so rescaling introduces no rounding.
const RESCALE_FACTOR: f64 = 3.054936363499605e-151;
const RESCALE_LOG: f64 = 500.0 * std::f64::consts::LN_2;

/// Streams `L_0^k(x), L_1^k(x), …` for fixed `k` and `x` as `(mantissa, log_scale)`
/// pairs with `L_n^k(x) = mantissa · exp(log_scale)`.
///
/// The recurrence state is rescaled by an exact power of two whenever it grows
/// past `1e150`, so the sweep never overflows; callers fold `log_scale` into
/// their own log-domain prefactors.
#[derive(Clone, Debug)]
pub struct LaguerreSweep {
    k: f64,
    x: f64,
    j: usize,
    prev: f64,
    cur: f64,
    log_scale: f64,
}

impl LaguerreSweep {
    pub fn new(k: usize, x: f64) -> Self {
        Self {
            k: k as f64,
            x,
            j: 0,
            prev: 0.0,
            cur: 1.0,
            log_scale: 0.0,
        }
    }

    /// Current degree.
    pub fn degree(&self) -> usize {
        self.j
    }

    /// `(mantissa, log_scale)` for the current degree.
    #[inline]
    pub fn value(&self) -> (f64, f64) {
        (self.cur, self.log_scale)
    }

    /// Advances to the next degree.
    #[inline]
    pub fn advance(&mut self) {
        let jf = self.j as f64;
        let next = if self.j == 0 {
            1.0 + self.k - self.x
        } else {
            ((2.0 * jf + 1.0 + self.k - self.x) * self.cur - (jf + self.k) * self.prev) / (jf + 1.0)
        };
        self.prev = self.cur;
        self.cur = next;
        self.j += 1;
        if self.cur.abs() > RESCALE_THRESHOLD {
            self.cur *= RESCALE_FACTOR;
            self.prev *= RESCALE_FACTOR;
            self.log_scale += RESCALE_LOG;
        }
    }
}

/// Neumaier's compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescale_factor_is_two_to_minus_500() {
        assert_eq!(RESCALE_FACTOR, 2f64.powi(-500));
    }

    #[test]
    fn laguerre_base_cases() {
        for &k in &[0usize, 1, 3, 7] {
            for &x in &[0.0, 0.5, 2.0, 11.0] {
                assert_eq!(laguerre_assoc(0, k, x), 1.0);
                assert_eq!(laguerre_assoc(1, k, x), 1.0 + k as f64 - x);
            }
        }
        assert_eq!(laguerre_assoc(1, 0, 0.3), 0.7);
    }

    #[test]
    fn laguerre_l2_at_two() {
        // (x^2 - 4x + 2) / 2 at x = 2
        assert!((laguerre_assoc(2, 0, 2.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn laguerre_matches_explicit_sum() {
        // L_n^k(x) = sum_i (-1)^i C(n+k, n-i) x^i / i!
        fn explicit(n: usize, k: usize, x: f64) -> f64 {
            let mut s = 0.0;
            for i in 0..=n {
                let ln_binom = ln_factorial(n + k) - ln_factorial(n - i) - ln_factorial(k + i);
                let mag = (ln_binom - ln_factorial(i)).exp() * x.powi(i as i32);
                s += if i % 2 == 0 { mag } else { -mag };
            }
            s
        }
        for n in 0..8 {
            for k in 0..5 {
                for &x in &[0.0, 0.25, 1.0, 3.5] {
                    let a = laguerre_assoc(n, k, x);
                    let b = explicit(n, k, x);
                    assert!((a - b).abs() <= 1e-11 * (1.0 + b.abs()), "n={n} k={k} x={x}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn laguerre_at_zero_is_binomial() {
        // L_n^k(0) = C(n+k, n)
        for n in 0..30 {
            for k in 0..6 {
                let expect = (ln_factorial(n + k) - ln_factorial(n) - ln_factorial(k)).exp();
                let got = laguerre_assoc(n, k, 0.0);
                assert!((got - expect).abs() <= 1e-10 * expect, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn sweep_matches_plain_recurrence() {
        for &k in &[0usize, 2, 9] {
            for &x in &[0.0, 1.7, 40.0] {
                let mut sweep = LaguerreSweep::new(k, x);
                for n in 0..60 {
                    let (m, s) = sweep.value();
                    assert_eq!(sweep.degree(), n);
                    let plain = laguerre_assoc(n, k, x);
                    assert!((m * s.exp() - plain).abs() <= 1e-12 * (1.0 + plain.abs()));
                    sweep.advance();
                }
            }
        }
    }

    #[test]
    fn sweep_survives_overflowing_range() {
        // L_600(4000) and L_300^3(2500) overflow a double; reference logs from 60-digit arithmetic
        for &(n, k, x, ln_ref) in &[
            (600usize, 0usize, 4000.0, 1625.5951664674888),
            (300, 3, 2500.0, 890.376_113_172_106_5),
        ] {
            let mut sweep = LaguerreSweep::new(k, x);
            for _ in 0..n {
                sweep.advance();
            }
            let (m, s) = sweep.value();
            assert!(m.is_finite() && m > 0.0 && s > 0.0);
            let ln_got = m.ln() + s;
            assert!(((ln_got - ln_ref) / ln_ref).abs() < 1e-12, "{ln_got} vs {ln_ref}");
        }
    }

    #[test]
    fn ln_factorial_small_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-14);
        assert!((ln_factorial(20) - 2432902008176640000f64.ln()).abs() < 1e-12);
        // beyond the f64 range of n!
        assert!(ln_factorial(171).is_finite());
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let vals = [1e16, 1.0, -1e16, 1.0];
        let s: CompensatedSum = vals.iter().copied().collect();
        assert_eq!(s.value(), 2.0);
    }
}
