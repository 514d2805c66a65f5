//! Integer, modular and valuation primitives.
//!
//! Everything public here works on [`BigInt`]; the enumeration kernels keep
//! their own machine-word copies of the few routines they need in hot loops.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Trial-division primality test. Adequate for the desk-scale primes used
/// throughout the crate.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub(crate) fn ensure_prime(q: u64) -> Result<()> {
    if is_prime(q) {
        Ok(())
    } else {
        Err(Error::NotPrime(q))
    }
}

/// `q^e` as a big integer.
pub fn big_pow(q: u64, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(q), e as usize)
}

/// `q^e` in machine words, `None` on overflow.
pub fn checked_pow(q: u64, e: u32) -> Option<u64> {
    q.checked_pow(e)
}

/// Non-negative remainder of `m` modulo `n`.
pub fn mod_floor(m: &BigInt, n: &BigInt) -> BigInt {
    m.mod_floor(n)
}

/// Prime factorization by trial division, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// All positive divisors of `n`, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factorize(n) {
        let len = ds.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds.sort_unstable();
    ds
}

/// A q-adic exponent; `Infinite` is the valuation of zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(u32),
    Infinite,
}

impl Exponent {
    pub fn finite(self) -> Option<u32> {
        match self {
            Exponent::Finite(e) => Some(e),
            Exponent::Infinite => None,
        }
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Exponent::Finite(a), Exponent::Finite(b)) => a.cmp(b),
            (Exponent::Finite(_), Exponent::Infinite) => Ordering::Less,
            (Exponent::Infinite, Exponent::Finite(_)) => Ordering::Greater,
            (Exponent::Infinite, Exponent::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for Exponent {
    type Output = Exponent;
    fn add(self, rhs: Exponent) -> Exponent {
        match (self, rhs) {
            (Exponent::Finite(a), Exponent::Finite(b)) => Exponent::Finite(a + b),
            _ => Exponent::Infinite,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(e) => write!(f, "{e}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

/// The exact q-adic valuation of an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Valuation {
    pub prime: u64,
    pub exponent: Exponent,
}

/// `v_q(m)`, with `Exponent::Infinite` for `m = 0`.
pub fn valuation(m: &BigInt, q: u64) -> Result<Valuation> {
    ensure_prime(q)?;
    if m.is_zero() {
        return Ok(Valuation {
            prime: q,
            exponent: Exponent::Infinite,
        });
    }
    let qb = BigInt::from(q);
    let mut rest = m.abs();
    let mut e = 0u32;
    loop {
        let (quot, rem) = rest.div_rem(&qb);
        if !rem.is_zero() {
            break;
        }
        rest = quot;
        e += 1;
    }
    Ok(Valuation {
        prime: q,
        exponent: Exponent::Finite(e),
    })
}

/// Number of cube roots of a residue in `F_q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeRootCount {
    pub prime: u64,
    /// The target reduced into `[0, q)`.
    pub target: u64,
    pub count: u32,
}

/// `#{r in F_q : r^3 = c}` by enumerating the field.
pub fn cube_root_count(q: u64, c: &BigInt) -> Result<CubeRootCount> {
    ensure_prime(q)?;
    let target = residue_u64(c, q);
    let count = (0..q)
        .filter(|&r| mul_mod(mul_mod(r, r, q), r, q) == target)
        .count() as u32;
    Ok(CubeRootCount {
        prime: q,
        target,
        count,
    })
}

pub(crate) fn residue_u64(c: &BigInt, q: u64) -> u64 {
    let r = c.mod_floor(&BigInt::from(q));
    u64::try_from(r).expect("residue fits the modulus")
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// All `u mod q^precision` with `u^3 = c (mod q^precision)`, ascending.
///
/// For `q != 3` the roots mod `q` lift uniquely (the derivative `3u^2` is a
/// unit), so this is Newton iteration. `q = 3` is handed to
/// [`cube_roots_3adic`], where lifting is not unique.
pub fn hensel_cube_roots(q: u64, c: &BigInt, precision: u32) -> Result<Vec<BigInt>> {
    ensure_prime(q)?;
    if precision == 0 {
        return Err(Error::Parameter("precision must be at least 1".into()));
    }
    let qb = BigInt::from(q);
    if c.mod_floor(&qb).is_zero() {
        return Err(Error::Parameter(format!("{q} divides the target {c}")));
    }
    if q == 3 {
        return cube_roots_3adic(c, precision);
    }
    let base: Vec<u64> = {
        let t = residue_u64(c, q);
        (1..q)
            .filter(|&r| mul_mod(mul_mod(r, r, q), r, q) == t)
            .collect()
    };
    let modulus = big_pow(q, precision);
    let three = BigInt::from(3);
    let mut roots = Vec::with_capacity(base.len());
    for r in base {
        let mut u = BigInt::from(r);
        let mut level = 1u32;
        while level < precision {
            level = (2 * level).min(precision);
            let m = big_pow(q, level);
            let f = (&u * &u * &u - c).mod_floor(&m);
            let df = (&three * &u * &u).mod_floor(&m);
            let inv = mod_inverse(&df, &m).expect("3u^2 is a unit for q != 3");
            u = (&u - f * inv).mod_floor(&m);
        }
        roots.push(u.mod_floor(&modulus));
    }
    roots.sort();
    Ok(roots)
}

/// Cube roots of a unit `c` modulo `3^precision`, found by lifting every
/// root digit by digit.
///
/// Modulo 3 there is exactly one root; from `3^2` on there are three roots
/// when `c = ±1 (mod 9)` and none otherwise.
pub fn cube_roots_3adic(c: &BigInt, precision: u32) -> Result<Vec<BigInt>> {
    if precision == 0 {
        return Err(Error::Parameter("precision must be at least 1".into()));
    }
    let three = BigInt::from(3);
    if c.mod_floor(&three).is_zero() {
        return Err(Error::Parameter(format!("3 divides the target {c}")));
    }
    let mut roots = vec![c.mod_floor(&three)];
    let mut step = three.clone();
    for _ in 1..precision {
        let next_mod = &step * &three;
        let target = c.mod_floor(&next_mod);
        let mut lifted = Vec::new();
        for u in &roots {
            for t in 0..3u32 {
                let cand = u + &step * t;
                if (&cand * &cand * &cand).mod_floor(&next_mod) == target {
                    lifted.push(cand);
                }
            }
        }
        roots = lifted;
        step = next_mod;
    }
    roots.sort();
    Ok(roots)
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let g = a.extended_gcd(m);
    if g.gcd.is_one() {
        Some(g.x.mod_floor(m))
    } else if (-&g.gcd).is_one() {
        Some((-g.x).mod_floor(m))
    } else {
        None
    }
}

/// Machine-word q-adic valuation of a nonzero value.
#[inline]
pub(crate) fn val_u64(mut m: u64, q: u64) -> u32 {
    debug_assert!(m != 0);
    let mut e = 0;
    while m.is_multiple_of(q) {
        m /= q;
        e += 1;
    }
    e
}
