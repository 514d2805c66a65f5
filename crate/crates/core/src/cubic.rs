//! Binary cubic forms and their local invariants.
//!
//! A form `c3 x^3 + c2 x^2 y + c1 x y^2 + c0 y^3` is stored as the array
//! `[c3, c2, c1, c0]`, i.e. indexed by the power of `y`. The cubic order
//! `R(a, b)` generated by a root of `X^3 - a X^2 + b X - c` corresponds to the
//! form `(1, -a, b, -c)`; every other sign convention in the crate is derived
//! from this one.

use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{big_pow, ensure_prime, residue_u64};
use crate::error::{Error, Result};

/// Sign of the fixed constant `±p^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn as_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Sign> {
        match s {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            other => Err(Error::Parameter(format!("unknown sign {other:?}"))),
        }
    }
}

/// The determinant constant `c = sign * p^k` of a contributing class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignedConstant {
    pub p: u64,
    pub k: u32,
    pub sign: Sign,
}

impl SignedConstant {
    pub fn new(p: u64, k: u32, sign: Sign) -> Result<Self> {
        ensure_prime(p)?;
        Ok(SignedConstant { p, k, sign })
    }

    pub fn value(&self) -> BigInt {
        let m = big_pow(self.p, self.k);
        match self.sign {
            Sign::Plus => m,
            Sign::Minus => -m,
        }
    }

    pub fn with_sign(self, sign: Sign) -> Self {
        SignedConstant { sign, ..self }
    }
}

impl fmt::Display for SignedConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}^{}", self.sign, self.p, self.k)
    }
}

/// An integral binary cubic form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCubicForm {
    coeffs: [BigInt; 4],
}

impl BinaryCubicForm {
    pub fn new(c3: BigInt, c2: BigInt, c1: BigInt, c0: BigInt) -> Self {
        BinaryCubicForm {
            coeffs: [c3, c2, c1, c0],
        }
    }

    pub fn from_i64(c3: i64, c2: i64, c1: i64, c0: i64) -> Self {
        Self::new(c3.into(), c2.into(), c1.into(), c0.into())
    }

    /// The form `(1, -a, b, -c)` of the monogenic order `Z[X]/(X^3 - aX^2 + bX - c)`.
    pub fn monogenic(a: &BigInt, b: &BigInt, c: &BigInt) -> Self {
        Self::new(BigInt::one(), -a, b.clone(), -c)
    }

    /// Recovers `(a, b, c)` from a form `(1, -a, b, -c)`.
    pub fn monogenic_params(&self) -> Option<(BigInt, BigInt, BigInt)> {
        if !self.coeffs[0].is_one() {
            return None;
        }
        Some((-&self.coeffs[1], self.coeffs[2].clone(), -&self.coeffs[3]))
    }

    pub fn coeffs(&self) -> &[BigInt; 4] {
        &self.coeffs
    }

    pub fn to_rational(&self) -> RationalCubicForm {
        RationalCubicForm {
            coeffs: self.coeffs.clone().map(BigRational::from_integer),
        }
    }

    pub fn disc(&self) -> BigInt {
        form_disc(&self.coeffs)
    }

    /// Coefficients reduced into `[0, q)`.
    pub fn reduce(&self, q: u64) -> [u64; 4] {
        [
            residue_u64(&self.coeffs[0], q),
            residue_u64(&self.coeffs[1], q),
            residue_u64(&self.coeffs[2], q),
            residue_u64(&self.coeffs[3], q),
        ]
    }
}

impl fmt::Display for BinaryCubicForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [c3, c2, c1, c0] = &self.coeffs;
        write!(f, "({c3}, {c2}, {c1}, {c0})")
    }
}

/// A binary cubic form with rational coefficients; the result of acting by
/// a non-unimodular matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalCubicForm {
    coeffs: [BigRational; 4],
}

impl RationalCubicForm {
    pub fn new(coeffs: [BigRational; 4]) -> Self {
        RationalCubicForm { coeffs }
    }

    pub fn coeffs(&self) -> &[BigRational; 4] {
        &self.coeffs
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    pub fn to_integral(&self) -> Option<BinaryCubicForm> {
        if !self.is_integral() {
            return None;
        }
        Some(BinaryCubicForm {
            coeffs: self.coeffs.clone().map(|c| c.to_integer()),
        })
    }

    pub fn disc(&self) -> BigRational {
        form_disc(&self.coeffs)
    }
}

fn form_disc<T>(c: &[T; 4]) -> T
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T> + std::ops::Sub<Output = T>,
{
    let [a, b, cc, d] = c.clone();
    let t = |n: i32| (0..n).fold(T::zero(), |acc, _| acc + T::one());
    b.clone() * b.clone() * cc.clone() * cc.clone()
        - t(4) * a.clone() * cc.clone() * cc.clone() * cc.clone()
        - t(4) * b.clone() * b.clone() * b.clone() * d.clone()
        - t(27) * a.clone() * a.clone() * d.clone() * d.clone()
        + t(18) * a * b * cc * d
}

/// `Pol(a, b, c) = a^2 b^2 - 4 b^3 - 4 a^3 c + 18 a b c - 27 c^2`, the
/// discriminant of `X^3 - a X^2 + b X - c`.
pub fn discriminant(a: &BigInt, b: &BigInt, c: &BigInt) -> BigInt {
    let a2 = a * a;
    let b2 = b * b;
    &a2 * &b2 - 4 * &b2 * b - 4 * &a2 * a * c + 18 * a * b * c - 27 * c * c
}

/// An integral 2x2 matrix with nonzero determinant, rows `[[g11, g12], [g21, g22]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GL2Matrix {
    rows: [[BigInt; 2]; 2],
}

impl GL2Matrix {
    pub fn new(g11: BigInt, g12: BigInt, g21: BigInt, g22: BigInt) -> Result<Self> {
        let m = GL2Matrix {
            rows: [[g11, g12], [g21, g22]],
        };
        if m.det().is_zero() {
            return Err(Error::Parameter("singular matrix".into()));
        }
        Ok(m)
    }

    pub fn from_i64(g11: i64, g12: i64, g21: i64, g22: i64) -> Result<Self> {
        Self::new(g11.into(), g12.into(), g21.into(), g22.into())
    }

    pub fn identity() -> Self {
        GL2Matrix {
            rows: [
                [BigInt::one(), BigInt::zero()],
                [BigInt::zero(), BigInt::one()],
            ],
        }
    }

    pub fn entries(&self) -> &[[BigInt; 2]; 2] {
        &self.rows
    }

    pub fn det(&self) -> BigInt {
        let [[a, b], [c, d]] = &self.rows;
        a * d - b * c
    }

    pub fn mul(&self, other: &GL2Matrix) -> GL2Matrix {
        let [[a, b], [c, d]] = &self.rows;
        let [[e, f], [g, h]] = &other.rows;
        GL2Matrix {
            rows: [
                [a * e + b * g, a * f + b * h],
                [c * e + d * g, c * f + d * h],
            ],
        }
    }
}

// Binary forms of degree d as coefficient vectors indexed by the power of y.
fn form_mul<T>(lhs: &[T], rhs: &[T]) -> Vec<T>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
{
    let mut out = vec![T::zero(); lhs.len() + rhs.len() - 1];
    for (i, l) in lhs.iter().enumerate() {
        for (j, r) in rhs.iter().enumerate() {
            out[i + j] = out[i + j].clone() + l.clone() * r.clone();
        }
    }
    out
}

/// `f(l1, l2)` for linear forms `l1, l2` given as `[x-coeff, y-coeff]`.
fn substitute<T>(f: &[T; 4], l1: [T; 2], l2: [T; 2]) -> [T; 4]
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    let mut p1 = vec![vec![T::one()]];
    let mut p2 = vec![vec![T::one()]];
    for i in 0..3 {
        p1.push(form_mul(&p1[i], &l1));
        p2.push(form_mul(&p2[i], &l2));
    }
    let mut out: [T; 4] = std::array::from_fn(|_| T::zero());
    for (j, c) in f.iter().enumerate() {
        let term = form_mul(&p1[3 - j], &p2[j]);
        for (i, t) in term.into_iter().enumerate() {
            out[i] = out[i].clone() + c.clone() * t;
        }
    }
    out
}

/// The numerator `f((x, y) adj(g))`; then `f^g` is this divided by `det(g)^2`.
fn act_numerator(f: &[BigInt; 4], g: &GL2Matrix) -> [BigInt; 4] {
    let [[g11, g12], [g21, g22]] = g.entries().clone();
    substitute(f, [g22, -g21], [-g12, g11])
}

/// The right action `f^g (x, y) = det(g) f((x, y) g^{-1})` on rational forms.
pub fn act(f: &RationalCubicForm, g: &GL2Matrix) -> RationalCubicForm {
    let [[g11, g12], [g21, g22]] = g.entries().clone();
    let r = BigRational::from_integer;
    let det2 = r(g.det().pow(2));
    let num = substitute(&f.coeffs, [r(g22), -r(g21)], [-r(g12), r(g11)]);
    RationalCubicForm {
        coeffs: num.map(|c| c / det2.clone()),
    }
}

/// The action on an integral form; the result is in general only rational.
pub fn act_integral(f: &BinaryCubicForm, g: &GL2Matrix) -> RationalCubicForm {
    let det2 = g.det().pow(2);
    let num = act_numerator(&f.coeffs, g);
    RationalCubicForm {
        coeffs: num.map(|c| BigRational::new(c, det2.clone())),
    }
}

/// `f^g` when it is integral, `None` otherwise. Exact integer arithmetic on
/// the common denominator `det(g)^2`.
pub fn act_to_integral(f: &BinaryCubicForm, g: &GL2Matrix) -> Option<BinaryCubicForm> {
    let det2 = g.det().pow(2);
    let num = act_numerator(&f.coeffs, g);
    let mut out: [BigInt; 4] = Default::default();
    for (o, c) in out.iter_mut().zip(num) {
        let (quot, rem) = c.div_rem(&det2);
        if !rem.is_zero() {
            return None;
        }
        *o = quot;
    }
    Some(BinaryCubicForm { coeffs: out })
}

/// Whether `q` fails to divide some coefficient; at `q` this is the
/// Gorenstein property of the associated ring.
pub fn is_primitive_at(f: &BinaryCubicForm, q: u64) -> bool {
    let qb = BigInt::from(q);
    f.coeffs.iter().any(|c| !c.mod_floor(&qb).is_zero())
}

/// Rational root test: `X^3 - aX^2 + bX - c` is irreducible over `Q` iff no
/// `±p^t` with `0 <= t <= k` is a root.
pub fn is_contributing(a: &BigInt, b: &BigInt, c: &SignedConstant) -> bool {
    let value = c.value();
    let eval = |x: &BigInt| x * x * x - a * x * x + b * x - &value;
    (0..=c.k).all(|t| {
        let pt = big_pow(c.p, t);
        !eval(&pt).is_zero() && !eval(&-pt).is_zero()
    })
}

/// Factorization pattern of a cubic form over `F_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SplittingType {
    /// Three distinct linear factors.
    S111,
    /// Linear times irreducible quadratic.
    S12,
    /// Irreducible cubic.
    S3,
    /// Square of a linear factor times a different linear factor.
    S11sq,
    /// Cube of a linear factor.
    S1cube,
    /// The form vanishes identically.
    Zero,
}

impl SplittingType {
    pub const ALL: [SplittingType; 6] = [
        SplittingType::S111,
        SplittingType::S12,
        SplittingType::S3,
        SplittingType::S11sq,
        SplittingType::S1cube,
        SplittingType::Zero,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            SplittingType::S111 => "(1,1,1)",
            SplittingType::S12 => "(1,2)",
            SplittingType::S3 => "(3)",
            SplittingType::S11sq => "(1,1^2)",
            SplittingType::S1cube => "(1^3)",
            SplittingType::Zero => "0",
        }
    }
}

impl fmt::Display for SplittingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Splitting type of `f mod q`.
pub fn splitting_type(f: &BinaryCubicForm, q: u64) -> SplittingType {
    classify_residual(q, f.reduce(q))
}

/// Classifies a form with coefficients already reduced into `[0, q)` by
/// locating its zeros on the `q + 1` points of `P^1(F_q)` with multiplicity.
pub fn classify_residual(q: u64, c: [u64; 4]) -> SplittingType {
    if c.iter().all(|&x| x == 0) {
        return SplittingType::Zero;
    }
    // Dehomogenize at y = 1: P(t) = c3 t^3 + c2 t^2 + c1 t + c0, low degree first.
    let mut poly: Vec<u64> = vec![c[3], c[2], c[1], c[0]];
    while poly.last() == Some(&0) {
        poly.pop();
    }
    let mut mults: Vec<u32> = Vec::with_capacity(3);
    let at_infinity = 4 - poly.len() as u32;
    if at_infinity > 0 {
        mults.push(at_infinity);
    }
    for t in 0..q {
        if poly.len() <= 1 {
            break;
        }
        let mut m = 0;
        while poly.len() > 1 && eval_mod(&poly, t, q) == 0 {
            poly = deflate(&poly, t, q);
            m += 1;
        }
        if m > 0 {
            mults.push(m);
        }
    }
    let linear: u32 = mults.iter().sum();
    match (linear, mults.len()) {
        (3, 3) => SplittingType::S111,
        (3, 2) => SplittingType::S11sq,
        (3, 1) => SplittingType::S1cube,
        (1, _) => SplittingType::S12,
        (0, _) => SplittingType::S3,
        _ => unreachable!("a cubic cannot have exactly two linear factors"),
    }
}

fn eval_mod(poly: &[u64], t: u64, q: u64) -> u64 {
    poly.iter().rev().fold(0u64, |acc, &c| (acc * t + c) % q)
}

// Divide by (T - t), assuming t is a root.
fn deflate(poly: &[u64], t: u64, q: u64) -> Vec<u64> {
    let n = poly.len() - 1;
    let mut out = vec![0u64; n];
    let mut carry = 0u64;
    for i in (1..=n).rev() {
        carry = (carry * t + poly[i]) % q;
        out[i - 1] = carry;
    }
    out
}

/// Lookup table of splitting types over `F_q`, indexed by reduced coefficients.
#[derive(Debug, Clone)]
pub struct TypeTable {
    q: u64,
    table: Vec<SplittingType>,
}

impl TypeTable {
    pub fn new(q: u64) -> Self {
        let n = (q * q * q * q) as usize;
        let mut table = Vec::with_capacity(n);
        for idx in 0..n as u64 {
            let c0 = idx % q;
            let c1 = (idx / q) % q;
            let c2 = (idx / (q * q)) % q;
            let c3 = idx / (q * q * q);
            table.push(classify_residual(q, [c3, c2, c1, c0]));
        }
        TypeTable { q, table }
    }

    #[inline]
    pub fn get(&self, c: [u64; 4]) -> SplittingType {
        let q = self.q;
        self.table[(((c[0] * q + c[1]) * q + c[2]) * q + c[3]) as usize]
    }
}

/// `W_R(q^v)`: coefficient of `x^v` in the local Euler-factor ratio of the
/// splitting type.
pub fn w_coefficient(t: SplittingType, v: u32) -> i64 {
    if v == 0 {
        return 1;
    }
    match t {
        SplittingType::S111 => v as i64 + 1,
        SplittingType::S12 => i64::from(v.is_multiple_of(2)),
        SplittingType::S3 => match v % 3 {
            0 => 1,
            1 => -1,
            _ => 0,
        },
        SplittingType::S11sq => 1,
        SplittingType::S1cube | SplittingType::Zero => 0,
    }
}

/// `a_R(q^t)`: 1 for `t = 0`; for `t = 1` it is 1 exactly when the ring is not
/// Gorenstein at `q`, i.e. the form is not primitive there; 0 for `t >= 2`.
pub fn a_coefficient(f: &BinaryCubicForm, q: u64, t: u32) -> i64 {
    match t {
        0 => 1,
        1 => i64::from(!is_primitive_at(f, q)),
        _ => 0,
    }
}

/// Local weight `sum_{t <= v} q^t a_R(q^t) W_R(q^{v-t})` of an order whose
/// form reduces to splitting type `t` at `q`.
pub fn local_weight(t: SplittingType, q: u64, v: u32) -> i64 {
    let mut w = w_coefficient(t, v);
    if v >= 1 && t == SplittingType::Zero {
        w += q as i64 * w_coefficient(t, v - 1);
    }
    w
}

/// Number of divisors of `n`.
pub fn divisor_count(n: u64) -> u64 {
    crate::arith::factorize(n)
        .iter()
        .map(|&(_, e)| e as u64 + 1)
        .product()
}

/// Helper used by tests and the book: `Disc(f)` for a monogenic triple
/// agrees with `Pol`.
pub fn monogenic_disc(a: &BigInt, b: &BigInt, c: &BigInt) -> BigInt {
    BinaryCubicForm::monogenic(a, b, c).disc()
}

/// Sign of `Pol`, used by the analytic residue branch.
pub fn pol_sign(a: &BigInt, b: &BigInt, c: &BigInt) -> i32 {
    let d = discriminant(a, b, c);
    if d.is_positive() {
        1
    } else if d.is_negative() {
        -1
    } else {
        0
    }
}
