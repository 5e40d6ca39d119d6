use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const SHIFT: f64 = 10.0;

// Stirling series coefficients B_{2j} / (2j (2j-1)).
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

fn stirling_tail(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in STIRLING.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma needs a positive argument, got {x}");
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let mut x = x;
    let mut prod = 1.0;
    while x < SHIFT {
        prod *= x;
        x += 1.0;
    }
    let base = (x - 0.5) * x.ln() - x + HALF_LN_2PI + stirling_tail(x);
    base - prod.ln()
}

fn log_poch_large(a: f64, b: f64) -> f64 {
    // lnG(a+b) - lnG(a) for a >= SHIFT, arranged to avoid cancellation.
    let c = a + b;
    (a - 0.5) * (b / a).ln_1p() + b * c.ln() - b + (stirling_tail(c) - stirling_tail(a))
}

/// log of the rising factorial (a)_b = Γ(a+b)/Γ(a).
///
/// Exactly zero when `b == 0`.
pub fn log_pochhammer(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("log_pochhammer: a must be positive, got {a}")));
    }
    if !(a + b > 0.0) {
        return Err(Error::Domain(format!("log_pochhammer: a + b must be positive, got {}", a + b)));
    }
    Ok(log_poch(a, b))
}

/// Unchecked variant of [`log_pochhammer`] for internal hot loops.
pub(crate) fn log_poch(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    // Short integer products are exact enough to take directly.
    if b.fract() == 0.0 && b > 0.0 && b <= 8.0 {
        let mut p = 1.0;
        let mut t = a;
        for _ in 0..b as usize {
            p *= t;
            t += 1.0;
        }
        return p.ln();
    }
    if a >= SHIFT {
        return log_poch_large(a, b);
    }
    let steps = (SHIFT - a).ceil();
    if b.abs() < 1.0 {
        // Small increments: ln_1p keeps relative accuracy as b → 0.
        let mut acc = 0.0;
        let mut i = 0.0;
        while i < steps {
            acc -= (b / (a + i)).ln_1p();
            i += 1.0;
        }
        return log_poch_large(a + steps, b) + acc;
    }
    let mut ratio = 1.0;
    let mut i = 0.0;
    while i < steps {
        ratio *= (a + i) / (a + b + i);
        i += 1.0;
    }
    log_poch_large(a + steps, b) + ratio.ln()
}

/// log of the binomial coefficient C(n, k).
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    log_poch((n - k + 1) as f64, k as f64) - log_poch(1.0, k as f64)
}

/// `x * ln(y)` with the convention 0 · ln 0 = 0.
pub fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// log of the Binomial(n, p) mass at k.
pub fn ln_binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    ln_binomial(n, k) + xlny(k as f64, p) + xlny((n - k) as f64, 1.0 - p)
}

/// log Σ exp(t_i) by max shift.
pub fn log_sum_exp(terms: &[f64]) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::Empty("log_sum_exp needs at least one term"));
    }
    Ok(lse(terms))
}

pub(crate) fn lse(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + s.ln()
}

/// Normalizes log weights in place so that their exponentials sum to one.
pub fn normalize_log_weights(w: &mut [f64]) -> Result<()> {
    let total = log_sum_exp(w)?;
    if total == f64::NEG_INFINITY {
        return Err(Error::ZeroWeights);
    }
    for x in w.iter_mut() {
        *x -= total;
    }
    Ok(())
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::new();
        for x in iter {
            k.add(x);
        }
        k
    }
}
