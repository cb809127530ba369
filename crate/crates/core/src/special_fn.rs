//! Special functions, combinatorics and log-domain probability helpers.

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;
const EPS: f64 = f64::EPSILON;
const FPMIN: f64 = f64::MIN_POSITIVE / EPS;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of `|Γ(x)|` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let s = (std::f64::consts::PI * x).sin().abs();
        return std::f64::consts::PI.ln() - s.ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Lower incomplete gamma function `γ(s, x) = ∫₀ˣ t^(s-1) e^(-t) dt` (not regularized).
///
/// Series for `x < s + 1`, Lentz continued fraction for the upper tail otherwise.
/// `x = +∞` returns `Γ(s)`.
pub fn lower_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("incomplete gamma needs s > 0, got {s}")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!("incomplete gamma needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(ln_gamma(s).exp());
    }
    if x < s + 1.0 {
        gamma_series(s, x)
    } else {
        Ok((ln_gamma(s).exp() - upper_gamma_cf(s, x)?).max(0.0))
    }
}

fn gamma_series(s: f64, x: f64) -> Result<f64> {
    let mut ap = s;
    let mut term = 1.0 / s;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            return Ok(sum * (s * x.ln() - x).exp());
        }
    }
    Err(Error::NonConvergence(format!(
        "incomplete gamma series at s={s}, x={x}"
    )))
}

/// Upper incomplete gamma `Γ(s, x)` by modified Lentz, valid for `x >= s + 1`.
fn upper_gamma_cf(s: f64, x: f64) -> Result<f64> {
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok((s * x.ln() - x).exp() * h);
        }
    }
    Err(Error::NonConvergence(format!(
        "incomplete gamma continued fraction at s={s}, x={x}"
    )))
}

/// Largest `n` for which [`binomial_coefficient`] runs exactly in 128-bit integers.
pub const EXACT_BINOMIAL_MAX_N: u64 = 100;

/// `n choose k`. Exact for `n <= 100`, log-domain above that.
pub fn binomial_coefficient(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("binomial coefficient needs k <= n, got ({n}, {k})")));
    }
    if n <= EXACT_BINOMIAL_MAX_N {
        Ok(exact_binomial(n, k).expect("fits in u128 for n <= 100") as f64)
    } else {
        Ok(ln_binomial(n, k).exp())
    }
}

/// `ln(n choose k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if n <= EXACT_BINOMIAL_MAX_N {
        return (exact_binomial(n, k).expect("fits in u128 for n <= 100") as f64).ln();
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn exact_binomial(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc == C(n, i) here, so the division is exact
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// Count of stage-outcome sequences `(S_1, ..., S_k)` with `S_1..S_{k-1} >= 0`,
/// `S_k >= 1` and total `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompositionCount {
    Exact(u128),
    /// Above `u128` range; value from the log-gamma route.
    Approximate(f64),
}

impl CompositionCount {
    pub fn as_f64(self) -> f64 {
        match self {
            CompositionCount::Exact(v) => v as f64,
            CompositionCount::Approximate(v) => v,
        }
    }

    pub fn exact(self) -> Option<u128> {
        match self {
            CompositionCount::Exact(v) => Some(v),
            CompositionCount::Approximate(_) => None,
        }
    }
}

/// `(n + k - 2)! / ((n - 1)! (k - 1)!)`, i.e. `C(n + k - 2, k - 1)`.
///
/// Exact while the running product fits in `u128`; switches to a floating estimate
/// beyond that.
pub fn composition_count(n: u64, k: u64) -> Result<CompositionCount> {
    if n == 0 || k == 0 {
        return Err(Error::domain(format!("composition count needs n, k >= 1, got ({n}, {k})")));
    }
    let top = n + k - 2;
    let pick = k - 1;
    match exact_binomial(top, pick) {
        Some(v) => Ok(CompositionCount::Exact(v)),
        None => Ok(CompositionCount::Approximate(
            (ln_gamma(top as f64 + 1.0) - ln_gamma(pick as f64 + 1.0) - ln_gamma((n - 1) as f64 + 1.0))
                .exp(),
        )),
    }
}

/// `x * ln(y)` with the convention `0 * ln(0) = 0`.
pub fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `ln(n choose s) + s ln p + (n - s) ln(1 - p)`, with `p` and `1 - p` given separately
/// so that neither is formed by cancellation.
pub fn ln_binomial_pmf(n: u64, s: u64, p: f64, q: f64) -> f64 {
    ln_binomial(n, s) + xlny(s as f64, p) + xlny((n - s) as f64, q)
}

/// `ln(sum(exp(v)))` over the slice; `-inf` for an empty slice or all `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let mut acc = NeumaierSum::default();
    for v in values {
        acc.add((v - max).exp());
    }
    max + acc.total().ln()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}
