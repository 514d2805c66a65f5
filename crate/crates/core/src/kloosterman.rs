//! Local and global Kloosterman-type sums.
//!
//! `K_q(q^v, q^r)` sums, over `(a, b) mod q^(v+2r)` and over overorders `R`
//! of index `q^r` of `R(a, b)`, the local weight
//! `Σ_{t ≤ v} q^t a_R(q^t) W_R(q^(v-t))`. The weight depends only on the
//! splitting type of the transformed form mod `q`, so the scan records a
//! census of types per stratum `β` and the value is read off the census.
//!
//! The scan kernel works with machine words modulo `q^(2r+1)`; the pair
//! budget keeps every intermediate product far below `2^64`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{checked_pow, divisors, ensure_prime, factorize, mod_floor, val_u64};
use crate::cubic::{
    is_primitive_at, local_weight, splitting_type, w_coefficient, SignedConstant, SplittingType,
    TypeTable,
};
use crate::error::{Error, Result};
use crate::overorders::global_overorders;

/// Default upper bound on the number of `(a, b)` pairs a single scan may visit.
pub const DEFAULT_PAIR_BUDGET: u128 = 300_000_000;

/// Resource limits for a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanConfig {
    pub pair_budget: u128,
    pub workers: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            pair_budget: DEFAULT_PAIR_BUDGET,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl ScanConfig {
    pub fn with_workers(self, workers: usize) -> Self {
        ScanConfig {
            workers: workers.max(1),
            ..self
        }
    }

    pub fn with_budget(self, pair_budget: u128) -> Self {
        ScanConfig {
            pair_budget,
            ..self
        }
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::Parameter(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(job))
    }
}

/// Local prime `q`, exponents `v, r` and the fixed constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocalKey {
    pub q: u64,
    pub v: u32,
    pub r: u32,
    pub c: SignedConstant,
}

impl LocalKey {
    pub fn new(q: u64, v: u32, r: u32, c: SignedConstant) -> Result<Self> {
        ensure_prime(q)?;
        Ok(LocalKey { q, v, r, c })
    }
}

impl fmt::Display for LocalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "K_{}({}^{}, {}^{}) with c={}",
            self.q, self.q, self.v, self.q, self.r, self.c
        )
    }
}

/// Which residue box a scan walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanPath {
    /// All `(a, b) mod q^(v+2r)`.
    Full,
    /// `(a, b) mod q^(2r+1)` times the replication factor `q^(2(v-1))`; needs `v >= 1`.
    Reduced,
}

/// Counts of `(a, b, R)` triples by stratum `β` and splitting type of the
/// transformed form, already scaled to the full box `q^(v+2r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalCensus {
    pub key: LocalKey,
    pub counts: Vec<[u128; 6]>,
}

impl LocalCensus {
    pub fn count(&self, beta: u32, t: SplittingType) -> u128 {
        self.counts
            .get(beta as usize)
            .map_or(0, |row| row[t.index()])
    }

    pub fn stratum_total(&self, beta: u32) -> u128 {
        self.counts
            .get(beta as usize)
            .map_or(0, |row| row.iter().sum())
    }

    pub fn total(&self) -> u128 {
        self.counts.iter().flatten().sum()
    }

    /// `Σ census * local weight`.
    pub fn value(&self) -> i128 {
        let LocalKey { q, v, .. } = self.key;
        self.counts
            .iter()
            .flat_map(|row| {
                SplittingType::ALL
                    .iter()
                    .map(move |&t| row[t.index()] as i128 * local_weight(t, q, v) as i128)
            })
            .sum()
    }
}

fn pow_or_resource(q: u64, e: u32, label: &str, budget: u128) -> Result<u64> {
    checked_pow(q, e).ok_or_else(|| Error::Resource {
        label: label.to_string(),
        pairs: u128::MAX,
        budget,
    })
}

/// Census of a local key along the chosen path.
pub fn local_census(key: &LocalKey, path: ScanPath, cfg: &ScanConfig) -> Result<LocalCensus> {
    let LocalKey { q, v, r, c } = *key;
    ensure_prime(q)?;
    let label = key.to_string();
    let (box_exp, replication_exp) = match path {
        ScanPath::Full => (v + 2 * r, 0),
        ScanPath::Reduced => {
            if v == 0 {
                return Err(Error::Parameter(
                    "the reduced path needs v >= 1".to_string(),
                ));
            }
            (2 * r + 1, 2 * (v - 1))
        }
    };
    let n = pow_or_resource(q, box_exp, &label, cfg.pair_budget)?;
    let pairs = n as u128 * n as u128;
    if pairs > cfg.pair_budget {
        return Err(Error::Resource {
            label,
            pairs,
            budget: cfg.pair_budget,
        });
    }
    let m3 = pow_or_resource(q, 2 * r + 1, &label, cfg.pair_budget)?;
    let cm = mod_floor(&c.value(), &BigInt::from(m3));
    let cm: u64 = cm.try_into().expect("reduced constant fits a word");
    let kernel = Kernel::new(q, r, m3, cm, n);
    let mut counts = cfg.run(|| {
        (0..n)
            .into_par_iter()
            .fold(
                || kernel.empty(),
                |mut acc, a| {
                    kernel.scan_a(a, &mut acc);
                    acc
                },
            )
            .reduce(|| kernel.empty(), merge)
    })?;
    let replication = (q as u128).pow(replication_exp);
    for row in counts.iter_mut() {
        for x in row.iter_mut() {
            *x *= replication;
        }
    }
    Ok(LocalCensus { key: *key, counts })
}

fn merge(mut x: Vec<[u128; 6]>, y: Vec<[u128; 6]>) -> Vec<[u128; 6]> {
    for (rx, ry) in x.iter_mut().zip(y) {
        for (a, b) in rx.iter_mut().zip(ry) {
            *a += b;
        }
    }
    x
}

struct Kernel {
    q: u64,
    r: u32,
    m3: u64,
    c: u64,
    n: u64,
    table: Option<TypeTable>,
}

impl Kernel {
    fn new(q: u64, r: u32, m3: u64, c: u64, n: u64) -> Self {
        let table = (q <= 31).then(|| TypeTable::new(q));
        Kernel {
            q,
            r,
            m3,
            c,
            n,
            table,
        }
    }

    fn empty(&self) -> Vec<[u128; 6]> {
        vec![[0; 6]; (self.r / 3 + 1) as usize]
    }

    fn classify(&self, c: [u64; 4]) -> SplittingType {
        match &self.table {
            Some(t) => t.get(c),
            None => crate::cubic::classify_residual(self.q, c),
        }
    }

    /// Adds every overorder of every `R(a, b)`, `b` in the box, to `acc`.
    fn scan_a(&self, a: u64, acc: &mut [[u128; 6]]) {
        let (q, r, m3) = (self.q as u128, self.r, self.m3 as u128);
        let a3 = a as u128 % m3;
        let c = self.c as u128;
        let pw = |e: u32| q.pow(e);
        for beta in 0..=r / 3 {
            let (qb, m2, me) = (pw(beta), pw(r - beta), pw(2 * r - 3 * beta));
            let tmod = pw(r - 2 * beta);
            let c3 = u64::from(r == 3 * beta);
            for u in 0..tmod {
                // a + 3u ≡ 0 (mod q^β); its next digit is -c2.
                let x1 = (a3 + 3 * u) % (qb * q);
                if !x1.is_multiple_of(qb) {
                    continue;
                }
                let c2 = ((q - x1 / qb) % q) as u64;
                let s2 = (3 * u * u + 2 * a3 * u) % m3;
                let s3 = (u * u % m3 * u + a3 * u % m3 * u + c) % m3;
                // 3u² + 2au + b ≡ 0 (mod q^(r-β)) fixes b mod q^(r-β).
                let b0 = (m2 - s2 % m2) % m2;
                // Writing b = b0 + q^(r-β) t, the last congruence is linear in t.
                let rem = (s3 + u * b0) % me;
                if !rem.is_multiple_of(m2) {
                    continue;
                }
                let rhs = (tmod - (rem / m2) % tmod) % tmod;
                let g = gcd_pow(u, tmod, q);
                if !rhs.is_multiple_of(g) {
                    continue;
                }
                let step = tmod / g;
                let t0 = if step == 1 {
                    0
                } else {
                    rhs / g % step * inverse_mod(u / g % step, step) % step
                };
                let mut b = b0 + m2 * t0;
                let stride = m2 * step;
                let row = &mut acc[beta as usize];
                while b < self.n as u128 {
                    let b3 = b % m3;
                    let x2 = (s2 + b3) % m3;
                    let x3 = (s3 + u * b3) % m3;
                    debug_assert!(x2.is_multiple_of(m2) && x3.is_multiple_of(me));
                    let c1 = (x2 / m2 % q) as u64;
                    let c0 = ((q - x3 / me % q) % q) as u64;
                    row[self.classify([c3, c2, c1, c0]).index()] += 1;
                    b += stride;
                }
            }
        }
    }
}

// gcd(u, q^e) for a prime power modulus; u = 0 gives the modulus itself.
fn gcd_pow(mut u: u128, modulus: u128, q: u128) -> u128 {
    if u == 0 {
        return modulus;
    }
    let mut g = 1;
    while u.is_multiple_of(q) && g < modulus {
        u /= q;
        g *= q;
    }
    g
}

fn inverse_mod(x: u128, m: u128) -> u128 {
    let (mut r0, mut r1) = (m as i128, x as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    debug_assert_eq!(r0, 1, "{x} is not invertible mod {m}");
    t0.rem_euclid(m as i128) as u128
}

/// `K_q(q^v, q^r)` by the full scan over `(a, b) mod q^(v+2r)`.
pub fn local_k_full(key: &LocalKey, cfg: &ScanConfig) -> Result<BigInt> {
    Ok(local_census(key, ScanPath::Full, cfg)?.value().into())
}

/// `K_q(q^v, q^r)` from `(a, b) mod q^(2r+1)` and the replication factor; `v >= 1`.
pub fn local_k_reduced(key: &LocalKey, cfg: &ScanConfig) -> Result<BigInt> {
    Ok(local_census(key, ScanPath::Reduced, cfg)?.value().into())
}

/// The default path: reduced for `v >= 2`, full otherwise.
pub fn default_path(v: u32) -> ScanPath {
    if v >= 2 {
        ScanPath::Reduced
    } else {
        ScanPath::Full
    }
}

/// `K_q(q^v, q^r)`.
pub fn local_k(key: &LocalKey, cfg: &ScanConfig) -> Result<BigInt> {
    Ok(local_census(key, default_path(key.v), cfg)?.value().into())
}

/// Exact values keyed by [`LocalKey`].
pub type KloostermanTable = BTreeMap<LocalKey, BigInt>;

/// Table over `v <= vmax`, `r <= rmax`; each entry is computed independently.
pub fn kloosterman_table(
    q: u64,
    c: SignedConstant,
    vmax: u32,
    rmax: u32,
    cfg: &ScanConfig,
) -> Vec<(LocalKey, Result<BigInt>)> {
    let mut out = Vec::new();
    for v in 0..=vmax {
        for r in 0..=rmax {
            let key = LocalKey { q, v, r, c };
            out.push((key, local_k(&key, cfg)));
        }
    }
    out
}

/// `K(n, f) = Π_q K_q(q^(v_q(n)), q^(v_q(f)))`.
pub fn global_k(n: u64, f: u64, c: SignedConstant, cfg: &ScanConfig) -> Result<BigInt> {
    if n == 0 || f == 0 {
        return Err(Error::Parameter("n and f must be positive".into()));
    }
    let mut primes: Vec<u64> = factorize(n * f).into_iter().map(|(q, _)| q).collect();
    primes.sort_unstable();
    let mut total = BigInt::from(1);
    for q in primes {
        let v = val_u64(n, q);
        let r = val_u64(f, q);
        total *= local_k(&LocalKey::new(q, v, r, c)?, cfg)?;
    }
    Ok(total)
}

/// `Σ_{d | n} d^w a_R(d) W_R(n/d)` for the order of the integral form `form`,
/// with `w = 1` when `weighted` and `w = 0` otherwise.
pub fn divisor_sum(form: &crate::cubic::BinaryCubicForm, n: u64, weighted: bool) -> i128 {
    let mut total = 0i128;
    for d in divisors(n) {
        let fd = factorize(d);
        if fd.iter().any(|&(_, e)| e >= 2) {
            continue;
        }
        if fd.iter().any(|&(q, _)| is_primitive_at(form, q)) {
            continue;
        }
        let w: i128 = factorize(n / d)
            .iter()
            .map(|&(q, e)| w_coefficient(splitting_type(form, q), e) as i128)
            .product();
        total += if weighted { d as i128 * w } else { w };
    }
    total
}

/// `K(n, f)` straight from its definition: every `(a, b) mod n f^2`, every
/// global overorder of index `f` found by a Hermite-normal-form coset scan,
/// and the divisor sum of `a_R` and `W_R`.
pub fn global_k_direct(n: u64, f: u64, c: SignedConstant, cfg: &ScanConfig) -> Result<BigInt> {
    if n == 0 || f == 0 {
        return Err(Error::Parameter("n and f must be positive".into()));
    }
    let m = n
        .checked_mul(f)
        .and_then(|x| x.checked_mul(f))
        .ok_or_else(|| Error::Parameter("n f^2 overflows".into()))?;
    let pairs = m as u128 * m as u128;
    if pairs > cfg.pair_budget {
        return Err(Error::Resource {
            label: format!("K({n}, {f}) direct"),
            pairs,
            budget: cfg.pair_budget,
        });
    }
    let cv = c.value();
    let total: i128 = cfg.run(|| {
        (0..m)
            .into_par_iter()
            .map(|a| {
                let a = BigInt::from(a);
                (0..m)
                    .map(|b| {
                        global_overorders(&a, &BigInt::from(b), &cv, f)
                            .iter()
                            .map(|form| divisor_sum(form, n, true))
                            .sum::<i128>()
                    })
                    .sum::<i128>()
            })
            .sum()
    })?;
    Ok(total.into())
}

/// Outcome of a periodicity scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicityOutcome {
    pub classes: u64,
    pub lifts: u64,
    pub mismatches: Vec<(u64, u64, u64, u64)>,
}

impl PeriodicityOutcome {
    pub fn pass(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares the inner sum `Σ_R Σ_{d|n} a_R(d) W_R(n/d)` at every `(a, b) mod n f^2`
/// with its value at the lifts `(a + n f^2 i, b + n f^2 j)`, `0 <= i, j < m`.
pub fn periodicity_scan(
    n: u64,
    f: u64,
    c: SignedConstant,
    multiplier: u64,
    cfg: &ScanConfig,
) -> Result<PeriodicityOutcome> {
    if multiplier < 2 {
        return Err(Error::Parameter("multiplier must be at least 2".into()));
    }
    let m = n * f * f;
    let pairs = (m as u128 * multiplier as u128).pow(2);
    if pairs > cfg.pair_budget {
        return Err(Error::Resource {
            label: format!("periodicity n={n} f={f} m={multiplier}"),
            pairs,
            budget: cfg.pair_budget,
        });
    }
    let cv = c.value();
    let inner = |a: u64, b: u64| -> i128 {
        global_overorders(&BigInt::from(a), &BigInt::from(b), &cv, f)
            .iter()
            .map(|form| divisor_sum(form, n, false))
            .sum()
    };
    let mismatches: Vec<(u64, u64, u64, u64)> = cfg.run(|| {
        (0..m)
            .into_par_iter()
            .flat_map_iter(|a| {
                let inner = &inner;
                (0..m).flat_map(move |b| {
                    let base = inner(a, b);
                    (0..multiplier).flat_map(move |i| {
                        (0..multiplier).filter_map(move |j| {
                            let (la, lb) = (a + m * i, b + m * j);
                            (inner(la, lb) != base).then_some((a, b, la, lb))
                        })
                    })
                })
            })
            .collect()
    })?;
    Ok(PeriodicityOutcome {
        classes: m * m,
        lifts: m * m * multiplier * multiplier,
        mismatches,
    })
}

/// Whether the inner sum is periodic modulo `n f^2`.
pub fn periodicity_check(
    n: u64,
    f: u64,
    c: SignedConstant,
    multiplier: u64,
    cfg: &ScanConfig,
) -> Result<bool> {
    Ok(periodicity_scan(n, f, c, multiplier, cfg)?.pass())
}

/// Number of cube roots of the constant mod `q`, i.e. `n_q(c)`.
pub fn cube_roots_of_constant(q: u64, c: &SignedConstant) -> Result<u32> {
    Ok(crate::arith::cube_root_count(q, &c.value())?.count)
}

/// `v_q(c)` helper for strata that depend on whether `q` divides the constant.
pub fn constant_is_unit(q: u64, c: &SignedConstant) -> bool {
    !c.value().is_multiple_of(&BigInt::from(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubic::{BinaryCubicForm, Sign};
    use crate::overorders::{enumerate_overorders, solve_system};

    fn sc(p: u64, k: u32, sign: Sign) -> SignedConstant {
        SignedConstant::new(p, k, sign).unwrap()
    }

    fn cfg() -> ScanConfig {
        ScanConfig::default()
    }

    fn k(q: u64, v: u32, r: u32, c: SignedConstant) -> i128 {
        let key = LocalKey::new(q, v, r, c).unwrap();
        i128::try_from(local_k(&key, &cfg()).unwrap()).unwrap()
    }

    /// Reference value by the slow route: solve_system per pair, act, classify.
    fn k_reference(q: u64, v: u32, r: u32, c: SignedConstant) -> i128 {
        let n = q.pow(v + 2 * r) as i64;
        let mut total = 0i128;
        for a in 0..n {
            for b in 0..n {
                let f = BinaryCubicForm::monogenic(&a.into(), &b.into(), &c.value());
                for o in enumerate_overorders(&f, &c, q, r).unwrap() {
                    total += local_weight(splitting_type(&o.form, q), q, v) as i128;
                }
            }
        }
        total
    }

    #[test]
    fn trivial_key() {
        assert_eq!(k(7, 0, 0, sc(5, 1, Sign::Plus)), 1);
    }

    #[test]
    fn appendix_small_values() {
        assert_eq!(k(3, 1, 0, sc(5, 1, Sign::Plus)), -3);
        assert_eq!(k(2, 1, 0, sc(5, 1, Sign::Plus)), -2);
        assert_eq!(k(2, 1, 0, sc(7, 2, Sign::Minus)), -2);
    }

    #[test]
    fn kernel_agrees_with_reference() {
        for (q, v, r) in [
            (2, 0, 1),
            (2, 1, 1),
            (2, 2, 1),
            (3, 1, 1),
            (3, 0, 2),
            (5, 1, 0),
            (5, 0, 1),
            (2, 0, 3),
        ] {
            for c in [
                sc(5, 1, Sign::Plus),
                sc(3, 2, Sign::Minus),
                sc(2, 1, Sign::Plus),
            ] {
                let key = LocalKey::new(q, v, r, c).unwrap();
                let fast = local_census(&key, ScanPath::Full, &cfg()).unwrap().value();
                assert_eq!(fast, k_reference(q, v, r, c), "{key}");
            }
        }
    }

    #[test]
    fn q3_row_explicit() {
        // 3^(2v-2) (1 + 3·[2|v] + 4 g_v)
        let c = sc(5, 1, Sign::Plus);
        for v in 1..=5u32 {
            let g = w_coefficient(SplittingType::S3, v) as i128;
            let even = i128::from(v % 2 == 0);
            let expected = 3i128.pow(2 * v - 2) * (1 + 3 * even + 4 * g);
            assert_eq!(k(3, v, 0, c), expected, "v={v}");
        }
    }

    #[test]
    fn q2_row_explicit() {
        // 2^(2v-2) (1_{2|v} + 2 g_v)
        let c = sc(5, 1, Sign::Plus);
        for v in 1..=6u32 {
            let g = w_coefficient(SplittingType::S3, v) as i128;
            let even = i128::from(v % 2 == 0);
            assert_eq!(
                k(2, v, 0, c),
                2i128.pow(2 * v - 2) * (even + 2 * g),
                "v={v}"
            );
        }
    }

    #[test]
    fn reduced_agrees_with_full() {
        let grid: &[(u64, u32, u32)] = &[(2, 6, 2), (3, 4, 2), (5, 3, 1)];
        for &(q, vmax, rmax) in grid {
            for v in 1..=vmax {
                for r in 0..=rmax {
                    let key = LocalKey::new(q, v, r, sc(7, 1, Sign::Minus)).unwrap();
                    let full = local_k_full(&key, &cfg()).unwrap();
                    let red = local_k_reduced(&key, &cfg()).unwrap();
                    assert_eq!(full, red, "{key}");
                }
            }
        }
    }

    #[test]
    fn column_zero_is_overorder_census() {
        for (q, r) in [(2u64, 2u32), (3, 1), (5, 1)] {
            let c = sc(7, 1, Sign::Plus);
            let m = q.pow(2 * r) as i64;
            let mut count = 0i128;
            for a in 0..m {
                for b in 0..m {
                    count += solve_system(&a.into(), &b.into(), &c, q, r, 2 * r)
                        .unwrap()
                        .len() as i128;
                }
            }
            assert_eq!(k(q, 0, r, c), count);
        }
    }

    #[test]
    fn coprime_column_counts() {
        // (q-1) q^(2r-1) + n Σ_{β=1}^{⌊r/3⌋} q^(2r+β)
        for (q, c) in [
            (5u64, sc(7, 1, Sign::Plus)),
            (7, sc(2, 1, Sign::Plus)),
            (7, sc(13, 1, Sign::Minus)),
        ] {
            let n = cube_roots_of_constant(q, &c).unwrap() as i128;
            let qi = q as i128;
            for r in 1..=4u32 {
                if q.pow(2 * r) > 20_000 {
                    continue;
                }
                let extra: i128 = (1..=r / 3).map(|b| qi.pow(2 * r + b)).sum();
                assert_eq!(
                    k(q, 0, r, c),
                    (qi - 1) * qi.pow(2 * r - 1) + n * extra,
                    "q={q} r={r}"
                );
            }
        }
    }

    #[test]
    fn q7_r3_census_without_cube_roots() {
        let c = sc(2, 1, Sign::Plus);
        assert_eq!(cube_roots_of_constant(7, &c).unwrap(), 0);
        // The box has 7^12 pairs, but the kernel only visits solutions.
        let key = LocalKey::new(7, 0, 3, c).unwrap();
        let census = local_census(&key, ScanPath::Full, &cfg().with_budget(u128::MAX)).unwrap();
        assert_eq!(census.value(), 100_842);
    }

    #[test]
    fn q2_column_strata() {
        let c = sc(5, 1, Sign::Plus);
        for r in 1..=5u32 {
            let key = LocalKey::new(2, 0, r, c).unwrap();
            let census = local_census(&key, ScanPath::Full, &cfg()).unwrap();
            assert_eq!(census.stratum_total(0), 1 << (2 * r - 1), "r={r}");
            for beta in 1..=r / 3 {
                assert_eq!(
                    census.stratum_total(beta),
                    1 << (2 * r + beta),
                    "r={r} beta={beta}"
                );
            }
        }
    }

    #[test]
    fn q3_column_strata() {
        for c in [
            sc(5, 1, Sign::Plus),
            sc(17, 1, Sign::Plus),
            sc(19, 1, Sign::Minus),
        ] {
            let v = c.value();
            let d9 = {
                let m = mod_floor(&v, &BigInt::from(9));
                m == BigInt::from(1) || m == BigInt::from(8)
            };
            for r in 1..=4u32 {
                let key = LocalKey::new(3, 0, r, c).unwrap();
                let census = local_census(&key, ScanPath::Full, &cfg()).unwrap();
                assert_eq!(census.stratum_total(0), 2 * 3u128.pow(2 * r - 1));
                if r >= 3 {
                    assert_eq!(census.stratum_total(1), 3u128.pow(2 * r + 1));
                }
                for beta in 2..=r / 3 {
                    let expected = if d9 { 3u128.pow(2 * r + beta + 1) } else { 0 };
                    assert_eq!(census.stratum_total(beta), expected);
                }
            }
        }
    }

    #[test]
    fn q2_stratified_census_positive_v() {
        let c = sc(5, 1, Sign::Plus);
        for (v, r) in [
            (1u32, 1u32),
            (2, 1),
            (1, 2),
            (2, 2),
            (1, 3),
            (2, 3),
            (3, 3),
            (1, 4),
        ] {
            let key = LocalKey::new(2, v, r, c).unwrap();
            let census = local_census(&key, default_path(v), &cfg()).unwrap();
            let e = |x: u32| 1u128 << x;
            use SplittingType::*;
            for beta in 0..=r / 3 {
                let get = |t| census.count(beta, t);
                if r > 3 * beta && beta == 0 {
                    let base = e(2 * v + 2 * r - 3);
                    assert_eq!(get(Zero), base, "v={v} r={r}");
                    assert_eq!(get(S1cube), base);
                    assert_eq!(get(S11sq), e(2 * v + 2 * r - 2));
                    assert_eq!(get(S111) + get(S12) + get(S3), 0);
                } else if r > 3 * beta {
                    let base = e(2 * v + 2 * r + beta - 3);
                    for t in [Zero, S1cube, S111, S12] {
                        assert_eq!(get(t), base, "v={v} r={r} beta={beta} {t}");
                    }
                    assert_eq!(get(S11sq), e(2 * v + 2 * r + beta - 1));
                    assert_eq!(get(S3), 0);
                } else {
                    let base = e(2 * v + 7 * beta - 2);
                    for t in [S1cube, S12, S3, S11sq] {
                        assert_eq!(get(t), base, "v={v} r={r} beta={beta} {t}");
                    }
                    assert_eq!(get(S111), 0);
                }
            }
        }
    }

    #[test]
    fn sign_independence_small_grid() {
        for q in [2u64, 3, 5] {
            for (v, r) in [(0, 1), (1, 1), (2, 0), (2, 1)] {
                if q == 5 && v + 2 * r > 4 {
                    continue;
                }
                let plus = k(q, v, r, sc(7, 1, Sign::Plus));
                let minus = k(q, v, r, sc(7, 1, Sign::Minus));
                assert_eq!(plus, minus, "q={q} v={v} r={r}");
            }
        }
    }

    #[test]
    fn global_examples() {
        let c = sc(5, 1, Sign::Plus);
        assert_eq!(global_k(1, 1, c, &cfg()).unwrap(), BigInt::from(1));
        assert_eq!(global_k(6, 1, c, &cfg()).unwrap(), BigInt::from(6));
        assert_eq!(global_k_direct(6, 1, c, &cfg()).unwrap(), BigInt::from(6));
        assert_eq!(global_k_direct(2, 1, c, &cfg()).unwrap(), BigInt::from(-2));
        assert_eq!(
            global_k_direct(1, 2, c, &cfg()).unwrap(),
            BigInt::from(k(2, 0, 1, c))
        );
    }

    #[test]
    fn euler_factorization_small() {
        for c in [sc(5, 1, Sign::Plus), sc(7, 1, Sign::Minus)] {
            for (n, f) in [(4, 1), (12, 1), (3, 2), (5, 3), (1, 6), (2, 5)] {
                assert_eq!(
                    global_k_direct(n, f, c, &cfg()).unwrap(),
                    global_k(n, f, c, &cfg()).unwrap(),
                    "n={n} f={f}"
                );
            }
        }
    }

    #[test]
    fn periodicity_examples() {
        assert!(periodicity_check(2, 1, sc(5, 1, Sign::Plus), 2, &cfg()).unwrap());
        assert!(periodicity_check(3, 1, sc(5, 1, Sign::Plus), 3, &cfg()).unwrap());
        assert!(periodicity_check(2, 2, sc(3, 1, Sign::Plus), 2, &cfg()).unwrap());
    }

    #[test]
    fn budget_is_enforced() {
        let key = LocalKey::new(2, 10, 5, sc(5, 1, Sign::Plus)).unwrap();
        let err = local_k_full(&key, &cfg().with_budget(1000)).unwrap_err();
        assert!(matches!(err, Error::Resource { .. }));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let key = LocalKey::new(3, 2, 2, sc(5, 1, Sign::Plus)).unwrap();
        let base = local_census(&key, ScanPath::Full, &cfg().with_workers(1)).unwrap();
        for w in [2, 4, 16] {
            assert_eq!(
                local_census(&key, ScanPath::Full, &cfg().with_workers(w)).unwrap(),
                base
            );
        }
    }
}
