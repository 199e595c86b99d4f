//! Counting machinery behind the closed-form propagator.
//!
//! A length-`t` path is a triple of bit strings `(w1, w2, w3)`; its coin
//! product depends only on `w1_1`, `w2_t`, the parity of
//! `ι((w1 ⊕ S w1) · w2)` and `ι(w1 ⊕ w2 ⊕ w3) mod 4`. The functions here count
//! triples by those statistics without enumerating them.

mod bitstring;
mod closed;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

use crate::error::CombinatoricsError;
use crate::walk::{product_phase_word, Amplitude, Chirality};

pub use bitstring::{BitPermutation, BitString, WeightClass};
pub use closed::{krawtchouk_row, ClosedForm};

/// Default cap on the number of string triples a brute-force sum may visit.
/// Admits every site up to `t = 8` (at most `C(8,4)³ = 343000` triples).
pub const DEFAULT_BUDGET: u128 = 1 << 20;

/// Source of binomial coefficients, direct or tabulated.
pub(crate) trait Binomial {
    /// `C(n, k)`, zero unless `0 <= k <= n`.
    fn binom(&self, n: i64, k: i64) -> BigInt;
}

pub(crate) struct Direct;

impl Binomial for Direct {
    fn binom(&self, n: i64, k: i64) -> BigInt {
        if n < 0 || k < 0 || k > n {
            return BigInt::zero();
        }
        let k = k.min(n - k) as u64;
        let n = n as u64;
        let mut acc = BigUint::one();
        for i in 0..k {
            acc *= n - i;
            acc /= i + 1;
        }
        BigInt::from_biguint(Sign::Plus, acc)
    }
}

/// Pascal's triangle up to row `max`.
pub(crate) struct Binomials {
    rows: Vec<Vec<BigInt>>,
}

impl Binomials {
    pub(crate) fn new(max: usize) -> Self {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(max + 1);
        for n in 0..=max {
            let mut row = vec![BigInt::one(); n + 1];
            for k in 1..n {
                row[k] = &rows[n - 1][k - 1] + &rows[n - 1][k];
            }
            rows.push(row);
        }
        Binomials { rows }
    }
}

impl Binomial for Binomials {
    fn binom(&self, n: i64, k: i64) -> BigInt {
        if n < 0 || k < 0 || k > n {
            return BigInt::zero();
        }
        match self.rows.get(n as usize) {
            Some(row) => row[k as usize].clone(),
            None => Direct.binom(n, k),
        }
    }
}

fn to_unsigned(v: BigInt) -> BigUint {
    v.to_biguint().expect("counting functions are non-negative")
}

fn theta(x: i64) -> i64 {
    i64::from(x >= 0)
}

fn sign_pow(e: i64) -> i64 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

pub(crate) fn dfunc_with(b: &impl Binomial, t: i64, p: i64, m: i64, n: i64) -> BigInt {
    if 0 <= n && n <= m && m <= t && n <= p {
        b.binom(m, n) * b.binom(t - m, p - n)
    } else {
        BigInt::zero()
    }
}

/// Size of one class in the split of `v ⊕ B(t, H)`:
/// `C(m, n)·C(t-m, p-n)` when `0 <= n <= m <= t` and `n <= p`, else 0.
pub fn dfunc(t: i64, p: i64, m: i64, n: i64) -> BigUint {
    to_unsigned(dfunc_with(&Direct, t, p, m, n))
}

pub(crate) fn compositions_with(b: &impl Binomial, k: i64, n: i64) -> BigInt {
    if k >= n && n > 0 {
        b.binom(k - 1, n - 1)
    } else if k == 0 && n == 0 {
        BigInt::one()
    } else {
        BigInt::zero()
    }
}

/// Number of compositions of `k` into `n` positive parts.
pub fn compositions(k: i64, n: i64) -> BigUint {
    to_unsigned(compositions_with(&Direct, k, n))
}

/// Integer part of `f(K, H)`: `Σ_n (-1)^n D(t, r̄t + (-1)^r̄ H, rt + (-1)^r K, n)`
/// with `r = θ(K - H)`.
pub(crate) fn f_integer_with(b: &impl Binomial, t: i64, k: i64, h: i64) -> BigInt {
    let r = theta(k - h);
    let rb = 1 - r;
    let p = rb * t + sign_pow(rb) * h;
    let m = r * t + sign_pow(r) * k;
    let top = k.min(h).min(t - k).min(t - h);
    let mut acc = BigInt::zero();
    for n in 0..=top {
        let d = dfunc_with(b, t, p, m, n);
        if n % 2 == 0 {
            acc += d;
        } else {
            acc -= d;
        }
    }
    acc
}

/// `Σ_{w ∈ B(t,H)} (c·i)^{ι(v ⊕ w)}` for any `v` with `ι(v) = K`.
pub fn f_sum(t: u64, k: u64, h: u64, c: Chirality) -> Result<Amplitude, CombinatoricsError> {
    for count in [k, h] {
        if count > t {
            return Err(CombinatoricsError::CountOutOfRange { t, count });
        }
    }
    let value = f_integer_with(&Direct, t as i64, k as i64, h as i64);
    Ok(Amplitude::from(value).rotate(c.turns(k.abs_diff(h))))
}

pub(crate) fn u_count_with(b: &impl Binomial, t: i64, k: i64, a: u8, ap: u8, n: i64) -> BigInt {
    let both_one = i64::from(a & ap);
    let both_zero = i64::from((1 - a) & (1 - ap));
    compositions_with(b, k, n + both_one) * compositions_with(b, t - k, n + both_zero)
}

/// Number of `v` with `ι(v) = K`, `v_1 = a`, `v_t = a'` and `ι(v ⊕ Sv) = 2n`.
pub fn u_count(t: u64, k: u64, a: u8, ap: u8, n: i64) -> BigUint {
    to_unsigned(u_count_with(&Direct, t as i64, k as i64, a & 1, ap & 1, n))
}

/// Shape parameters `(κ, η, γ)` of one alternating class sum.
#[allow(clippy::too_many_arguments)]
pub(crate) fn w_params(t: i64, k1: i64, k2: i64, s: u8, a: u8, ap: u8, b: u8, j: i64) -> (i64, i64, i64) {
    let r = theta(k1 - k2);
    let rb = 1 - r;
    let (s, a, ap, b) = (i64::from(s), i64::from(a), i64::from(ap), i64::from(b));
    let sb = 1 - s;
    let kappa = (r ^ sb) * k2 + sign_pow(sb) * (rb * k1 - j) - (sb ^ ap) * b;
    let eta = sb * (t - 1) + sign_pow(sb) * (k1 - ap);
    let gamma = (s ^ a) * (sb ^ ap);
    (kappa, eta, gamma)
}

/// Alternating count `w^{(s)}_{aa'b}(n, J)` of `w2` bits in the `s`-zone of `w1`
/// (`s = 1`: positions where `w1` is set), signed by how many of them sit on a
/// run boundary of `w1`.
#[allow(clippy::too_many_arguments)]
pub fn w_factor(t: u64, k1: u64, k2: u64, s: u8, a: u8, ap: u8, b: u8, n: i64, j: i64) -> BigInt {
    let (kappa, eta, gamma) = w_params(t as i64, k1 as i64, k2 as i64, s & 1, a & 1, ap & 1, b & 1, j);
    let flip = gamma * i64::from(b & 1);
    let mut acc = BigInt::zero();
    for k in 0..=(n - gamma) {
        let d = dfunc_with(&Direct, eta, kappa, n - gamma, k);
        if (k + flip) % 2 == 0 {
            acc += d;
        } else {
            acc -= d;
        }
    }
    acc
}

/// Parameters of one coefficient `c_ab(K1, K2, K3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CoefficientQuery {
    pub t: u64,
    pub k: [u64; 3],
    pub a: u8,
    pub b: u8,
    pub chirality: Chirality,
}

impl CoefficientQuery {
    fn validate(&self) -> Result<(), CombinatoricsError> {
        for &count in &self.k {
            if count > self.t {
                return Err(CombinatoricsError::CountOutOfRange { t: self.t, count });
            }
        }
        Ok(())
    }
}

/// Closed-form coefficient `c_ab`. Defined for `t >= 2`.
pub fn c_coefficient(q: &CoefficientQuery) -> Result<Amplitude, CombinatoricsError> {
    q.validate()?;
    let engine = ClosedForm::new(q.t, q.chirality)?;
    Ok(engine.coefficient(q.k, q.a, q.b))
}

fn triple_count(t: u64, k: [u64; 3]) -> u128 {
    k.iter().map(|&ki| num_integer::binomial(t as u128, ki as u128)).product()
}

/// All four `c_ab` by enumerating every string triple with the given set-bit
/// counts and bucketing its factorized coin product by `(a, b)` and phase.
pub fn coefficients_bruteforce(
    t: u64,
    k: [u64; 3],
    c: Chirality,
    budget: u128,
) -> Result<[[Amplitude; 2]; 2], CombinatoricsError> {
    for &count in &k {
        if count > t {
            return Err(CombinatoricsError::CountOutOfRange { t, count });
        }
    }
    if t == 0 {
        return Err(CombinatoricsError::ZeroLength);
    }
    let size = triple_count(t, k);
    if size > budget {
        return Err(CombinatoricsError::BudgetExceeded { size, budget });
    }
    let tt = t as usize;
    let class = |ki: u64| WeightClass::new(tt, ki as usize);
    let third: Vec<u64> = class(k[2])?.collect();
    // counts[a][b][phase]
    let mut counts = [[[0u64; 4]; 2]; 2];
    for w1 in class(k[0])? {
        for w2 in class(k[1])? {
            for &w3 in &third {
                let (q, a, b) = product_phase_word(t as u32, w1, w2, w3, c);
                counts[a as usize][b as usize][q.value() as usize] += 1;
            }
        }
    }
    Ok(counts.map(|row| {
        row.map(|n| {
            let re = n[0] as i128 - n[2] as i128;
            let im = n[1] as i128 - n[3] as i128;
            Amplitude::gaussian(re, im)
        })
    }))
}

/// Coefficient `c_ab` as the literal sum over admissible string triples.
/// Valid for every `t >= 1`.
pub fn c_coefficient_bruteforce(q: &CoefficientQuery, budget: u128) -> Result<Amplitude, CombinatoricsError> {
    q.validate()?;
    let all = coefficients_bruteforce(q.t, q.k, q.chirality, budget)?;
    Ok(all[q.a as usize & 1][q.b as usize & 1].clone())
}
