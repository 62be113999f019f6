//! Exact counts of self-nested and general unordered trees with bounded
//! height and outdegree.
//!
//! Both families exclude the single-vertex tree.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

pub type BigCount = BigUint;

/// `C(n, k)` for a big `n` and small `k`.
pub fn binomial(n: &BigUint, k: u64) -> BigUint {
    if BigUint::from(k) > *n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    // The product of i consecutive integers is divisible by i!.
    for i in 1..=k {
        acc *= n - BigUint::from(k) + BigUint::from(i);
        acc /= BigUint::from(i);
    }
    acc
}

fn small_binomial(n: u64, k: u64) -> BigUint {
    binomial(&BigUint::from(n), k)
}

/// Self-nested trees of height exactly `H` and outdegree at most `d`:
/// `∏_{i=1}^{H} C(d + H - i, H - i + 1)`.
pub fn count_self_nested_eq(height: u64, degree: u64) -> BigCount {
    (1..=height)
        .map(|i| small_binomial(degree + height - i, height - i + 1))
        .product()
}

/// Unordered trees of height at most `H` and outdegree at most `d`:
/// `u_H(d) - 1` with `u_0 = 1` and `u_H = C(u_{H-1} + d, d)`.
pub fn count_unordered_le(height: u64, degree: u64) -> BigCount {
    let mut u = BigUint::one();
    for _ in 0..height {
        u = binomial(&(u + BigUint::from(degree)), degree);
    }
    u - BigUint::one()
}

/// Share of self-nested trees among trees of height at most `H` and
/// outdegree at most `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyCell {
    pub height: u64,
    pub degree: u64,
    pub numerator: BigCount,
    pub denominator: BigCount,
    pub value: f64,
}

pub fn self_nested_frequency(height: u64, degree: u64) -> FrequencyCell {
    let numerator: BigUint = (1..=height).map(|h| count_self_nested_eq(h, degree)).sum();
    let denominator = count_unordered_le(height, degree);
    let value = ratio(&numerator, &denominator);
    FrequencyCell {
        height,
        degree,
        numerator,
        denominator,
        value,
    }
}

/// Cells for `H` in `min_height..=max_height` (outer) and `d` in
/// `min_degree..=max_degree` (inner).
pub fn frequency_table(
    min_height: u64,
    max_height: u64,
    min_degree: u64,
    max_degree: u64,
) -> Vec<FrequencyCell> {
    let mut cells = Vec::new();
    for h in min_height..=max_height {
        for d in min_degree..=max_degree {
            cells.push(self_nested_frequency(h, d));
        }
    }
    cells
}

/// `num / den` as a double, accurate even when both exceed `f64::MAX`.
pub fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    if den.is_zero() {
        return f64::NAN;
    }
    if num.is_zero() {
        return 0.0;
    }
    // Scale so the integer quotient carries about 64 significant bits.
    let shift = (den.bits() + 64).saturating_sub(num.bits());
    let q = (num << shift) / den;
    let q = q.to_f64().unwrap_or(f64::INFINITY);
    q * 2f64.powi(-(shift as i32))
}

/// Natural logarithm of a big integer.
pub fn ln_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        if let Some(x) = n.to_f64() {
            return x.ln();
        }
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().expect("64-bit mantissa");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `log #T^sn_{=H,≤d} = -H log Γ(d) + Σ_{j=0}^{H-1} Σ_{k=2}^{d} log(j + k)`,
/// with each inner sum written as `log Γ(j + d + 1) - log Γ(j + 2)`.
pub fn log_count_self_nested(height: u64, degree: u64) -> f64 {
    let (h, d) = (height as f64, degree as f64);
    let inner: f64 = (0..height)
        .map(|j| {
            let j = j as f64;
            libm::lgamma(j + d + 1.0) - libm::lgamma(j + 2.0)
        })
        .sum();
    -h * libm::lgamma(d) + inner
}

/// `(d+H)²/2 log(d+H) - H²/2 log H - d²/2 log d - H d log d`, the leading
/// behaviour of [`log_count_self_nested`] as `H` and `d` grow together.
pub fn asymptotic_equivalent(height: u64, degree: u64) -> f64 {
    let (h, d) = (height as f64, degree as f64);
    (d + h).powi(2) / 2.0 * (d + h).ln() - h * h / 2.0 * h.ln() - d * d / 2.0 * d.ln()
        - h * d * d.ln()
}
