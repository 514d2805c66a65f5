//! Overorders of index `q^r` of the monogenic order `R(a, b)`.
//!
//! Two independent routes produce the same set of cosets: [`solve_system`]
//! reads them off the three congruences in `(β, u)`, and [`oracle_enumerate`]
//! acts by every lower-triangular coset representative and keeps the
//! integral results.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::{big_pow, divisors, ensure_prime, factorize};
use crate::cubic::{act_to_integral, BinaryCubicForm, GL2Matrix, SignedConstant};
use crate::error::{Error, Result};

/// A right coset `g_{β,u} K` with `g_{β,u} = [[q^β, 0], [u q^β, q^(r-β)]]`.
///
/// `u` is the rescaled variable of the congruence system, reduced mod
/// `q^(r-2β)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CosetRep {
    pub beta: u32,
    pub u: BigInt,
    pub r: u32,
}

impl CosetRep {
    pub fn matrix(&self, q: u64) -> GL2Matrix {
        let qb = big_pow(q, self.beta);
        GL2Matrix::new(
            qb.clone(),
            BigInt::zero(),
            &self.u * &qb,
            big_pow(q, self.r - self.beta),
        )
        .expect("coset representatives are nonsingular")
    }
}

impl fmt::Display for CosetRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(beta={}, u={}, r={})", self.beta, self.u, self.r)
    }
}

/// A lower-triangular representative `[[q^β', 0], [u', q^(r-β')]]`, `u' mod q^(r-β')`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IwasawaRep {
    pub beta: u32,
    pub u: BigInt,
    pub r: u32,
}

impl IwasawaRep {
    pub fn matrix(&self, q: u64) -> GL2Matrix {
        GL2Matrix::new(
            big_pow(q, self.beta),
            BigInt::zero(),
            self.u.clone(),
            big_pow(q, self.r - self.beta),
        )
        .expect("coset representatives are nonsingular")
    }
}

/// An overorder of index `q^r` together with its transformed integral form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overorder {
    pub parent: BinaryCubicForm,
    pub rep: CosetRep,
    pub form: BinaryCubicForm,
    pub q: u64,
    pub r: u32,
}

/// All `Σ_{β'} q^(r-β')` lower-triangular coset representatives of level `r`.
pub fn coset_reps(q: u64, r: u32) -> Result<Vec<IwasawaRep>> {
    ensure_prime(q)?;
    let mut reps = Vec::new();
    for beta in 0..=r {
        let m = big_pow(q, r - beta);
        let mut u = BigInt::zero();
        while u < m {
            reps.push(IwasawaRep {
                beta,
                u: u.clone(),
                r,
            });
            u += 1;
        }
    }
    Ok(reps)
}

/// Solutions `(β, u)` of
///
/// ```text
/// a + 3u              ≡ 0  (mod q^β)
/// 3u² + 2au + b       ≡ 0  (mod q^(r-β))
/// u³ + au² + bu + c   ≡ 0  (mod q^(2r-3β))
/// ```
///
/// with `3β ≤ r` and `u mod q^(r-2β)`. The residues `a, b` need only be
/// known modulo `q^precision` with `precision >= 2r`.
pub fn solve_system(
    a: &BigInt,
    b: &BigInt,
    c: &SignedConstant,
    q: u64,
    r: u32,
    precision: u32,
) -> Result<Vec<CosetRep>> {
    ensure_prime(q)?;
    if precision < 2 * r {
        return Err(Error::Precision {
            needed: 2 * r,
            given: precision,
        });
    }
    let modulus = big_pow(q, 2 * r);
    let a = a.mod_floor(&modulus);
    let b = b.mod_floor(&modulus);
    let cv = c.value().mod_floor(&modulus);
    let small = (|| {
        Some((
            modulus.to_i128()?,
            a.to_i128()?,
            b.to_i128()?,
            cv.to_i128()?,
        ))
    })();
    match small {
        Some((m, a, b, cv)) if m < 1 << 36 => Ok(solve_small(a, b, cv, q as i128, r)),
        _ => Ok(solve_big(&a, &b, &cv, q, r)),
    }
}

fn solve_small(a: i128, b: i128, c: i128, q: i128, r: u32) -> Vec<CosetRep> {
    let pow = |e: u32| q.pow(e);
    let mut out = Vec::new();
    for beta in (0..=r).take_while(|beta| 3 * beta <= r) {
        let (m1, m2, m3) = (pow(beta), pow(r - beta), pow(2 * r - 3 * beta));
        for u in 0..pow(r - 2 * beta) {
            if (a + 3 * u) % m1 != 0 {
                continue;
            }
            if (3 * u * u + 2 * a * u + b) % m2 != 0 {
                continue;
            }
            if (u * u % m3 * u + a * u % m3 * u + b * u + c) % m3 != 0 {
                continue;
            }
            out.push(CosetRep {
                beta,
                u: BigInt::from(u),
                r,
            });
        }
    }
    out
}

fn solve_big(a: &BigInt, b: &BigInt, c: &BigInt, q: u64, r: u32) -> Vec<CosetRep> {
    let mut out = Vec::new();
    for beta in (0..=r).take_while(|beta| 3 * beta <= r) {
        let (m1, m2, m3) = (
            big_pow(q, beta),
            big_pow(q, r - beta),
            big_pow(q, 2 * r - 3 * beta),
        );
        let range = big_pow(q, r - 2 * beta);
        let mut u = BigInt::zero();
        while u < range {
            let three = BigInt::from(3);
            let two = BigInt::from(2);
            let u2: BigInt = &u * &u;
            let ok = (a + &three * &u).is_multiple_of(&m1)
                && (&three * &u2 + &two * a * &u + b).is_multiple_of(&m2)
                && (&u2 * &u + a * &u2 + b * &u + c).is_multiple_of(&m3);
            if ok {
                out.push(CosetRep {
                    beta,
                    u: u.clone(),
                    r,
                });
            }
            u += 1;
        }
    }
    out
}

fn check_monogenic(f: &BinaryCubicForm, c: &SignedConstant) -> Result<(BigInt, BigInt)> {
    let (a, b, cf) = f
        .monogenic_params()
        .ok_or_else(|| Error::Parameter(format!("{f} is not of the form (1, -a, b, -c)")))?;
    if cf != c.value() {
        return Err(Error::Parameter(format!(
            "{f} has constant {cf}, expected {}",
            c.value()
        )));
    }
    Ok((a, b))
}

/// Overorders of index `q^r` of `R(f)` from the congruence system.
pub fn enumerate_overorders(
    f: &BinaryCubicForm,
    c: &SignedConstant,
    q: u64,
    r: u32,
) -> Result<Vec<Overorder>> {
    let (a, b) = check_monogenic(f, c)?;
    let sols = solve_system(&a, &b, c, q, r, 2 * r)?;
    sols.into_iter()
        .map(|rep| {
            let form = integral_action(f, &rep.matrix(q)).ok_or_else(|| {
                Error::Consistency(format!(
                    "solution {rep} of the system gives a non-integral form for {f} at q={q}"
                ))
            })?;
            Ok(Overorder {
                parent: f.clone(),
                rep,
                form,
                q,
                r,
            })
        })
        .collect()
}

/// Overorders of index `q^r` by scanning every lower-triangular coset
/// representative and testing integrality of `f^g` exactly.
pub fn oracle_enumerate(
    f: &BinaryCubicForm,
    c: &SignedConstant,
    q: u64,
    r: u32,
) -> Result<Vec<Overorder>> {
    check_monogenic(f, c)?;
    let mut out = Vec::new();
    for rep in coset_reps(q, r)? {
        let g = rep.matrix(q);
        let Some(form) = integral_action(f, &g) else {
            continue;
        };
        let qb = big_pow(q, rep.beta);
        let (u, rem) = rep.u.div_rem(&qb);
        if !rem.is_zero() || 3 * rep.beta > r {
            return Err(Error::Consistency(format!(
                "integral coset (beta'={}, u'={}) at q={q}, r={r} violates 3β ≤ r, v_q(u) ≥ β",
                rep.beta, rep.u
            )));
        }
        out.push(Overorder {
            parent: f.clone(),
            rep: CosetRep {
                beta: rep.beta,
                u,
                r,
            },
            form,
            q,
            r,
        });
    }
    Ok(out)
}

/// `f^g` when integral. Uses 128-bit arithmetic when a magnitude bound shows
/// it cannot overflow, exact big integers otherwise.
pub fn integral_action(f: &BinaryCubicForm, g: &GL2Matrix) -> Option<BinaryCubicForm> {
    let bits = |x: &BigInt| x.bits();
    let cb = f.coeffs().iter().map(bits).max().unwrap_or(0);
    let eb = g.entries().iter().flatten().map(bits).max().unwrap_or(0);
    if cb + 3 * eb + 6 >= 126 {
        return act_to_integral(f, g);
    }
    let fc = f.coeffs().clone().map(|x| x.to_i128().unwrap());
    let [[g11, g12], [g21, g22]] = g
        .entries()
        .clone()
        .map(|row| row.map(|x| x.to_i128().unwrap()));
    let det = g11 * g22 - g12 * g21;
    let det2 = det * det;
    // f(g22 x - g21 y, -g12 x + g11 y), expanded by the binomial theorem.
    let l1 = [g22, -g21];
    let l2 = [-g12, g11];
    let mut p1 = [[0i128; 4]; 4];
    let mut p2 = [[0i128; 4]; 4];
    p1[0][0] = 1;
    p2[0][0] = 1;
    for i in 1..4 {
        for j in 0..i {
            p1[i][j] += p1[i - 1][j] * l1[0];
            p1[i][j + 1] += p1[i - 1][j] * l1[1];
            p2[i][j] += p2[i - 1][j] * l2[0];
            p2[i][j + 1] += p2[i - 1][j] * l2[1];
        }
    }
    let mut out = [0i128; 4];
    for (j, coef) in fc.iter().enumerate() {
        let (a, b) = (&p1[3 - j], &p2[j]);
        for s in 0..=(3 - j) {
            for t in 0..=j {
                out[s + t] += coef * a[s] * b[t];
            }
        }
    }
    if out.iter().any(|x| x % det2 != 0) {
        return None;
    }
    let [c3, c2, c1, c0] = out.map(|x| BigInt::from(x / det2));
    Some(BinaryCubicForm::new(c3, c2, c1, c0))
}

/// Normalized coset set `{(β, u mod q^(r-2β))}` of a list of overorders.
pub fn coset_set(orders: &[Overorder], q: u64) -> std::collections::BTreeSet<(u32, BigInt)> {
    orders
        .iter()
        .map(|o| {
            let m = big_pow(q, o.r - 2 * o.rep.beta);
            (o.rep.beta, o.rep.u.mod_floor(&m))
        })
        .collect()
}

/// Hermite representatives `[[d1, 0], [u, d2]]` with `d1 d2 = f`, `0 <= u < d2`,
/// naming every sublattice of index `f` in `Z^2`.
pub fn global_coset_reps(f: u64) -> Vec<GL2Matrix> {
    let mut out = Vec::new();
    for d1 in divisors(f) {
        let d2 = f / d1;
        for u in 0..d2 {
            out.push(
                GL2Matrix::from_i64(d1 as i64, 0, u as i64, d2 as i64).expect("positive diagonal"),
            );
        }
    }
    out
}

/// Transformed forms of all overorders of index exactly `f` of `R(a, b)`
/// with constant `c`, by a global coset scan.
pub fn global_overorders(a: &BigInt, b: &BigInt, c: &BigInt, f: u64) -> Vec<BinaryCubicForm> {
    let parent = BinaryCubicForm::monogenic(a, b, c);
    global_coset_reps(f)
        .iter()
        .filter_map(|g| integral_action(&parent, g))
        .collect()
}

/// Product over `q^e || f` of the local overorder counts from the system.
pub fn local_product_count(a: &BigInt, b: &BigInt, c: &SignedConstant, f: u64) -> Result<usize> {
    let mut total = 1usize;
    for (q, e) in factorize(f) {
        total *= solve_system(a, b, c, q, e, 2 * e)?.len();
    }
    Ok(total)
}

/// `v_q(u q^β) >= β` for the pre-rescaled coordinate; always true by construction
/// of [`CosetRep`] and kept as an explicit check for tests.
pub fn satisfies_restriction(rep: &CosetRep, q: u64) -> bool {
    let pre = &rep.u * big_pow(q, rep.beta);
    3 * rep.beta <= rep.r
        && (pre.is_zero() || {
            let mut m = pre.abs();
            let qb = BigInt::from(q);
            let mut e = 0;
            while m.is_multiple_of(&qb) {
                m /= &qb;
                e += 1;
            }
            e >= rep.beta
        })
}

/// The order's own coset at level 0.
pub fn identity_rep() -> CosetRep {
    CosetRep {
        beta: 0,
        u: BigInt::zero(),
        r: 0,
    }
}

/// Convenience: `(1, -a, b, -c)` for small integers.
pub fn monogenic_form(a: i64, b: i64, c: &SignedConstant) -> BinaryCubicForm {
    BinaryCubicForm::monogenic(&BigInt::from(a), &BigInt::from(b), &c.value())
}
