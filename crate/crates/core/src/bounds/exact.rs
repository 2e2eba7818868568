//! Exact expectations under uniform multinomial labels.
//!
//! Only the counts of labels 1 and 2 matter to the small-k attack, so the
//! multinomial collapses to a trinomial over (label 1, label 2, other):
//!
//! `P(N₁ = a, N₂ = b) = n! / (a! b! c!) · (m-2)^c / m^n`, with `c = n - a - b`.
//!
//! All sums are over exact integers with a single final division, so the
//! results do not depend on summation order.

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};

use crate::error::Result;
use crate::oracle::check_params;

fn big(x: usize) -> BigUint {
    BigUint::from(x)
}

fn rational(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `E[f(N₁, N₂)]` for `(N₁, …, N_m) ~ Multinomial(n; 1/m, …, 1/m)`.
pub fn trinomial_expectation(n: usize, m: usize, f: impl Fn(usize, usize) -> u64) -> Result<BigRational> {
    check_params(n.max(1), m)?;
    let other = big(m - 2);
    let mut other_pow = Vec::with_capacity(n + 1);
    let mut p = BigUint::one();
    for _ in 0..=n {
        other_pow.push(p.clone());
        p *= &other;
    }

    let mut total = BigUint::zero();
    let mut choose_a = BigUint::one(); // C(n, a)
    for a in 0..=n {
        let rest = n - a;
        let mut inner = BigUint::zero();
        let mut choose_b = BigUint::one(); // C(rest, b)
        for b in 0..=rest {
            let c = rest - b;
            // (m - 2)^c vanishes for m = 2 unless c = 0
            if !(m == 2 && c > 0) {
                let v = f(a, b);
                if v != 0 {
                    inner += &choose_b * &other_pow[c] * v;
                }
            }
            choose_b = choose_b * big(rest - b) / big(b + 1);
        }
        total += &choose_a * inner;
        choose_a = choose_a * big(n - a) / big(a + 1);
    }
    Ok(rational(total, big(m).pow(n as u32)))
}

/// `E[N₁·1{N₁ ≥ n/m} + N₂·1{N₁ < n/m}]`: expected number of positions the
/// single-query attack gets right.
pub fn exact_k1_correct_count(n: usize, m: usize) -> Result<BigRational> {
    trinomial_expectation(n, m, |a, b| if a * m >= n { a as u64 } else { b as u64 })
}

/// Exact average accuracy of the single-query attack under uniform labels.
pub fn exact_small_k1_accuracy(n: usize, m: usize) -> Result<BigRational> {
    Ok(exact_k1_correct_count(n, m)? / BigRational::from_integer(BigInt::from(n)))
}

/// `E[max{N₁, N₂}]` for `Multinomial(n'; 1/m, …, 1/m)`.
pub fn exact_max_pair_expectation(n_prime: usize, m: usize) -> Result<BigRational> {
    trinomial_expectation(n_prime, m, |a, b| a.max(b) as u64)
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `value - base ≥ coef·√radicand`, exactly.
fn excess_at_least(value: &BigRational, base: &BigRational, coef: &BigRational, radicand: &BigRational) -> bool {
    let d = value - base;
    !d.is_negative() && &d * &d >= coef * coef * radicand
}

/// `value - base ≤ coef·√radicand`, exactly.
fn excess_at_most(value: &BigRational, base: &BigRational, coef: &BigRational, radicand: &BigRational) -> bool {
    let d = value - base;
    !d.is_positive() || &d * &d <= coef * coef * radicand
}

/// `E[N₁·1{N₁ ≥ n/m} + N₂·1{N₁ < n/m}] ≥ n/m + (1/4)·√(n/m)`.
pub fn lemma_k1_holds(n: usize, m: usize) -> Result<bool> {
    let e = exact_k1_correct_count(n, m)?;
    Ok(excess_at_least(&e, &ratio(n, m), &ratio(1, 4), &ratio(n, m)))
}

/// `E[max{N₁, N₂}] ≥ n'/m + (1/4)·√(n'/m)`.
pub fn lemma_max_pair_holds(n_prime: usize, m: usize) -> Result<bool> {
    let e = exact_max_pair_expectation(n_prime, m)?;
    Ok(excess_at_least(
        &e,
        &ratio(n_prime, m),
        &ratio(1, 4),
        &ratio(n_prime, m),
    ))
}

/// The single-query attack's exact accuracy checked against the small-k
/// lower bound and the single-query ceiling.
#[derive(Clone, Debug)]
pub struct SandwichCheck {
    pub accuracy: BigRational,
    /// `1/m + (1/8)√(1/(mn)) ≤ accuracy`
    pub lower_holds: bool,
    /// `accuracy ≤ 1/m + (1/2)√(1/(n(m-1)))`
    pub upper_holds: bool,
}

pub fn sandwich_k1(n: usize, m: usize) -> Result<SandwichCheck> {
    let accuracy = exact_small_k1_accuracy(n, m)?;
    let base = ratio(1, m);
    let lower_holds = excess_at_least(&accuracy, &base, &ratio(1, 8), &ratio(1, m * n));
    let upper_holds = excess_at_most(&accuracy, &base, &ratio(1, 2), &ratio(1, n * (m - 1)));
    Ok(SandwichCheck {
        accuracy,
        lower_holds,
        upper_holds,
    })
}

/// `E|Y - np|` for `Y ~ Bin(n, p)`, `p` rational in `[0, 1]`.
pub fn binomial_mad(n: usize, p: Ratio<u64>) -> BigRational {
    let (num, den) = (*p.numer(), *p.denom());
    assert!(num <= den, "p must lie in [0, 1]");
    let (a, b) = (BigUint::from(num), BigUint::from(den - num));
    // pmf numerator C(n,y)·num^y·(den-num)^(n-y); |y - np|·den = |y·den - n·num|
    let mut b_pow = Vec::with_capacity(n + 1);
    let mut p_b = BigUint::one();
    for _ in 0..=n {
        b_pow.push(p_b.clone());
        p_b *= &b;
    }
    let mut total = BigUint::zero();
    let mut choose = BigUint::one();
    let mut a_pow = BigUint::one();
    let center = n as u128 * u128::from(num);
    for y in 0..=n {
        let dev = (y as u128 * u128::from(den)).abs_diff(center);
        if dev != 0 {
            total += &choose * &a_pow * &b_pow[n - y] * BigUint::from(dev);
        }
        choose = choose * big(n - y) / big(y + 1);
        a_pow *= &a;
    }
    let denom = BigUint::from(den).pow(n as u32 + 1);
    rational(total, denom)
}

#[derive(Clone, Debug)]
pub struct MadCheck {
    /// `1/n ≤ p ≤ 1 - 1/n`
    pub applicable: bool,
    pub mad: BigRational,
    /// `E|Y - np| ≥ √(np(1-p)/2)`, evaluated exactly.
    pub holds: bool,
}

/// Mean absolute deviation of a binomial against its lower bound
/// `√(np(1-p)/2)`.
pub fn mad_binomial_lower(n: usize, p: Ratio<u64>) -> MadCheck {
    let p_big = BigRational::new(BigInt::from(*p.numer()), BigInt::from(*p.denom()));
    let one = BigRational::one();
    let inv_n = ratio(1, n.max(1));
    let applicable = n >= 1 && p_big >= inv_n && p_big <= &one - &inv_n;
    let mad = binomial_mad(n, p);
    let variance_half = ratio(n, 2) * &p_big * (&one - &p_big);
    let holds = &mad * &mad >= variance_half;
    MadCheck { applicable, mad, holds }
}
