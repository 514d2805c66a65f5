//! Floating-point companions to the exact machinery: the smoothing kernel
//! `F`, its Mellin transform and the residue constants at `s = 0`.
//!
//! Everything here is `f64`. Integrals are computed by adaptive Simpson
//! quadrature after the substitution `y = e^t`, which turns
//! `e^{-y-1/y} dy/y` into `e^{-2 cosh t} dt`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::report::MatchReport;

/// Half-width of the `t`-interval used for integrals of `e^{-x cosh t}`.
pub const T_MAX: f64 = 8.0;
/// Default absolute tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// An accepted quadrature result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
}

/// Adaptive Simpson quadrature with an absolute tolerance and a cap on the
/// number of integrand evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub tolerance: f64,
    pub node_budget: usize,
    pub max_depth: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            tolerance: DEFAULT_TOLERANCE,
            node_budget: 2_000_000,
            max_depth: 48,
        }
    }
}

struct Simpson<'a, F> {
    f: &'a F,
    nodes: usize,
    budget: usize,
    max_depth: u32,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Numeric(format!(
                "quadrature node budget {} exhausted",
                self.budget
            )));
        }
        let y = (self.f)(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Numeric(format!("integrand is not finite at {x}")))
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<(f64, f64)> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let h = (b - a) / 12.0;
        let left = h * (fa + 4.0 * flm + fm);
        let right = h * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok((left + right + delta / 15.0, delta.abs() / 15.0));
        }
        if depth >= self.max_depth {
            return Err(Error::Numeric(format!(
                "quadrature did not reach tolerance {tol:e} on [{a}, {b}]"
            )));
        }
        let (l, el) = self.refine(a, m, fa, flm, fm, left, tol / 2.0, depth + 1)?;
        let (r, er) = self.refine(m, b, fm, frm, fb, right, tol / 2.0, depth + 1)?;
        Ok((l + r, el + er))
    }
}

impl Quadrature {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Quadrature {
            tolerance,
            ..Quadrature::default()
        }
    }

    /// Integrates `f` over `[a, b]`. The interval is first cut into a few
    /// equal panels so that narrow peaks are not missed by the initial
    /// three-point rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Estimate> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Numeric("integration limits must be finite".into()));
        }
        if a == b {
            return Ok(Estimate {
                value: 0.0,
                error: 0.0,
                nodes: 0,
            });
        }
        const PANELS: usize = 16;
        let mut s = Simpson {
            f: &f,
            nodes: 0,
            budget: self.node_budget,
            max_depth: self.max_depth,
        };
        let width = (b - a) / PANELS as f64;
        let tol = self.tolerance / PANELS as f64;
        let mut value = 0.0;
        let mut error = 0.0;
        let mut lo = a;
        let mut flo = s.eval(lo)?;
        for i in 1..=PANELS {
            let hi = if i == PANELS { b } else { a + width * i as f64 };
            let fhi = s.eval(hi)?;
            let fm = s.eval(0.5 * (lo + hi))?;
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
            let (v, e) = s.refine(lo, hi, flo, fm, fhi, whole, tol, 0)?;
            value += v;
            error += e;
            lo = hi;
            flo = fhi;
        }
        if error > self.tolerance {
            return Err(Error::Numeric(format!(
                "error estimate {error:e} exceeds tolerance {:e}",
                self.tolerance
            )));
        }
        Ok(Estimate {
            value,
            error,
            nodes: s.nodes,
        })
    }
}

/// `K_ν(x) = ∫_0^∞ e^{-x cosh t} cosh(νt) dt`, the modified Bessel function
/// of the second kind, for real order and `x > 0`.
pub fn k_bessel(nu: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Parameter(format!("K_nu(x) needs x > 0, got {x}")));
    }
    let q = Quadrature::with_tolerance(1e-13);
    Ok(
        q.integrate(|t| (-x * t.cosh()).exp() * (nu * t).cosh(), 0.0, T_MAX)?
            .value,
    )
}

/// `2 K_0(2) = ∫_{-∞}^{∞} e^{-2 cosh t} dt`, the normalizer of `F`.
pub fn normalizer() -> Result<f64> {
    let q = Quadrature::with_tolerance(1e-13);
    Ok(q.integrate(density, -T_MAX, T_MAX)?.value)
}

fn density(t: f64) -> f64 {
    (-2.0 * t.cosh()).exp()
}

/// Precomputed normalizer, so that repeated evaluations of `F` inside an
/// outer integral share one value.
#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    norm: f64,
    inner: Quadrature,
}

impl Kernel {
    pub fn new() -> Result<Self> {
        Ok(Kernel {
            norm: normalizer()?,
            inner: Quadrature::with_tolerance(1e-13),
        })
    }

    /// `2 K_0(2)`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `F(x) = (1/(2K_0(2))) ∫_x^∞ e^{-y-1/y} dy/y`.
    pub fn f(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        let lo = x.ln();
        if lo >= T_MAX {
            return Ok(0.0);
        }
        if lo <= -T_MAX {
            return Ok(1.0 - self.one_minus_f(x)?);
        }
        Ok(self.inner.integrate(density, lo, T_MAX)?.value / self.norm)
    }

    /// `1 - F(x)`, integrated from the other end so that it keeps full
    /// relative accuracy for small `x`.
    pub fn one_minus_f(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        let hi = x.ln();
        if hi <= -T_MAX {
            return Ok(0.0);
        }
        if hi >= T_MAX {
            return Ok(1.0 - self.f(x)?);
        }
        Ok(self.inner.integrate(density, -T_MAX, hi)?.value / self.norm)
    }

    /// The Mellin transform `F̃(z) = ∫_0^∞ F(u) u^{z-1} du`, continued to
    /// every real `z ≠ 0` through
    /// `F̃(z) = 1/z - ∫_0^1 (1-F(u)) u^{z-1} du + ∫_1^∞ F(u) u^{z-1} du`.
    pub fn mellin(&self, z: f64) -> Result<f64> {
        if z == 0.0 || !z.is_finite() {
            return Err(Error::Parameter(format!("Mellin transform at z = {z}")));
        }
        let outer = Quadrature::default();
        // u = e^s; both tails decay like exp(-e^{|s|}).
        let cell = std::cell::RefCell::new(None::<Error>);
        let guard = |r: Result<f64>| -> f64 {
            r.unwrap_or_else(|e| {
                cell.borrow_mut().get_or_insert(e);
                0.0
            })
        };
        let lower = outer.integrate(
            |s| guard(self.one_minus_f(s.exp())) * (z * s).exp(),
            -5.0,
            0.0,
        );
        let upper = outer.integrate(|s| guard(self.f(s.exp())) * (z * s).exp(), 0.0, 5.0);
        if let Some(e) = cell.into_inner() {
            return Err(e);
        }
        Ok(1.0 / z - lower?.value + upper?.value)
    }
}

/// `F(x)` with a freshly computed normalizer.
pub fn kernel_f(x: f64) -> Result<f64> {
    Kernel::new()?.f(x)
}

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "F(x) needs finite x > 0, got {x}"
        )))
    }
}

/// `F̃(z) = K_z(2) / (z K_0(2))`, the closed form of the Mellin transform.
pub fn mellin_closed(z: f64) -> Result<f64> {
    Ok(k_bessel(z, 2.0)? / (z * k_bessel(0.0, 2.0)?))
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

/// Numeric checks on `F̃`: the residue at `z = 0`, oddness, and agreement
/// of the Mellin integral with the Bessel closed form.
pub fn mellin_residue_check() -> Result<MatchReport> {
    let kernel = Kernel::new()?;
    let mut report = MatchReport::new("verify analytic mellin");
    for z in [1e-2, 1e-3, 1e-4] {
        let v = z * kernel.mellin(z)?;
        report.push(
            format!("z*Ft(z) at z={z:e}"),
            "1 (tol 1e-2)",
            fmt(v),
            (v - 1.0).abs() < 1e-2,
        );
    }
    for z in [0.5, 1.5] {
        let plus = kernel.mellin(z)?;
        let minus = kernel.mellin(-z)?;
        report.push(
            format!("Ft({z})+Ft(-{z})"),
            "0 (tol 1e-6)",
            fmt(plus + minus),
            (plus + minus).abs() < 1e-6,
        );
        let closed = mellin_closed(-z)?;
        report.push(
            format!("Ft(-{z}) vs K_z(2)/(-z K_0(2))"),
            fmt(closed),
            fmt(minus),
            (closed - minus).abs() < 1e-6,
        );
    }
    let direct = k_bessel(1.0, 2.0)? / k_bessel(0.0, 2.0)?;
    let mellin = kernel.mellin(1.0)?;
    report.push(
        "Ft(1) vs K_1(2)/K_0(2)",
        fmt(direct),
        fmt(mellin),
        (direct - mellin).abs() < 1e-6,
    );
    Ok(report)
}

/// Bounds `0 < F(x) < e^{-x}/(2K_0(2))` and `0 < 1-F(x) < e^{-1/x}/(2K_0(2))`,
/// the limit `F(10^-4) > 0.999` and strict decrease on a grid.
pub fn kernel_bounds_check() -> Result<MatchReport> {
    let kernel = Kernel::new()?;
    let norm = kernel.norm();
    let mut report = MatchReport::new("verify analytic kernel");
    for x in [0.5, 1.0, 2.0, 5.0] {
        let v = kernel.f(x)?;
        let bound = (-x).exp() / norm;
        report.push(
            format!("0<F({x})<e^-x/2K0(2)"),
            format!("(0, {})", fmt(bound)),
            fmt(v),
            0.0 < v && v < bound,
        );
    }
    for x in [0.2, 0.5, 1.0] {
        let v = kernel.one_minus_f(x)?;
        let bound = (-1.0 / x).exp() / norm;
        report.push(
            format!("0<1-F({x})<e^-1/x/2K0(2)"),
            format!("(0, {})", fmt(bound)),
            fmt(v),
            0.0 < v && v < bound,
        );
    }
    let near_zero = kernel.f(1e-4)?;
    report.push(
        "F(1e-4)>0.999",
        "> 0.999",
        fmt(near_zero),
        near_zero > 0.999,
    );
    let grid: Vec<f64> = (1..=40).map(|i| 0.125 * i as f64).collect();
    let values = grid
        .iter()
        .map(|&x| kernel.f(x))
        .collect::<Result<Vec<_>>>()?;
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    report.push(
        "F decreasing on 0.125..5",
        "strictly decreasing",
        if decreasing {
            "strictly decreasing"
        } else {
            "not monotone"
        },
        decreasing,
    );
    Ok(report)
}

const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];
const EM_CUTOFF: f64 = 20.0;

/// Euler–Maclaurin sum for `ζ(σ)` without the pole term `N^{1-σ}/(σ-1)`.
fn zeta_regular_part(sigma: f64) -> f64 {
    let n = EM_CUTOFF;
    let mut sum: f64 = (1..EM_CUTOFF as u32).map(|m| (m as f64).powf(-sigma)).sum();
    sum += 0.5 * n.powf(-sigma);
    // rising factorial σ(σ+1)...(σ+2j-2) / (2j)!
    let mut coef = sigma;
    let mut fact = 2.0;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let j = j as f64 + 1.0;
        sum += b / fact * coef * n.powf(-sigma - 2.0 * j + 1.0);
        coef *= (sigma + 2.0 * j - 1.0) * (sigma + 2.0 * j);
        fact *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
    }
    sum
}

/// The Riemann zeta function at a real argument `σ ≠ 1`, accurate to about
/// machine precision for `σ > -8`.
pub fn zeta(sigma: f64) -> Result<f64> {
    if sigma == 1.0 || !sigma.is_finite() {
        return Err(Error::Parameter(format!("zeta at {sigma}")));
    }
    Ok(zeta_regular_part(sigma) + EM_CUTOFF.powf(1.0 - sigma) / (sigma - 1.0))
}

/// `s ζ(1+s)`, which is analytic at `s = 0` with value 1.
pub fn zeta_pole_removed(s: f64) -> f64 {
    s * zeta_regular_part(1.0 + s) + EM_CUTOFF.powf(-s)
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Sign of the discriminant polynomial at the archimedean point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolSign {
    Positive,
    Negative,
}

impl std::str::FromStr for PolSign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "pos" | "positive" => Ok(PolSign::Positive),
            "-" | "neg" | "negative" => Ok(PolSign::Negative),
            other => Err(Error::Parameter(format!("unknown Pol sign {other:?}"))),
        }
    }
}

/// `(1 - p^{-s(k+1)})/(1 - p^{-s}) · (1 - p^{-s(k+2)})/(1 - p^{-2s})`.
pub fn p_factor(p: u64, k: u32, s: f64) -> f64 {
    let l = (p as f64).ln();
    let one_minus = |e: f64| -(-e * s * l).exp_m1();
    one_minus(k as f64 + 1.0) / one_minus(1.0) * one_minus(k as f64 + 2.0) / one_minus(2.0)
}

/// The product whose `s → 0` limit is the residue constant, at `s > 0`.
/// Each ratio of a pole of Gamma against a pole of zeta is written through
/// `Γ(1+x)` and `x ζ(1+x)`.
pub fn h_residue_product(p: u64, k: u32, branch: PolSign, s: f64) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::Parameter(format!(
            "residue product needs s > 0, got {s}"
        )));
    }
    let zetas = zeta(2.0 * s)? * zeta(3.0 * s)?;
    let poles = zeta_pole_removed(s) * zeta_pole_removed(2.0 * s);
    let h = match branch {
        PolSign::Positive => {
            // Γ(s/2)^2 / (ζ(s+1) ζ(2s+1)) = 8 Γ(1+s/2)^2 / (Z(s) Z(2s))
            let g = gamma(1.0 + s / 2.0);
            let ratio = 8.0 * g * g / poles;
            let tail = gamma((1.0 - s) / 2.0);
            PI.powf(1.5 * (1.0 - 2.0 * s)) * ratio / (tail * tail)
        }
        PolSign::Negative => {
            // Γ(s) / (ζ(s+1) ζ(2s+1)) = 2s Γ(1+s) / (Z(s) Z(2s))
            let ratio = 2.0 * s * gamma(1.0 + s) / poles;
            PI.powf(0.5 * (1.0 - 2.0 * s)) * ratio / gamma(1.0 - s)
        }
    };
    Ok(p_factor(p, k, s) * zetas * h)
}

/// Linear Richardson extrapolation from `s = 10^-3` and `s = 10^-4`.
pub fn richardson<F: Fn(f64) -> Result<f64>>(f: F) -> Result<f64> {
    let coarse = f(1e-3)?;
    let fine = f(1e-4)?;
    let v = (10.0 * fine - coarse) / 9.0;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric("extrapolated value is not finite".into()))
    }
}

/// Two rounds of Richardson extrapolation from `s = 10^-3, 10^-4, 10^-5`,
/// removing the linear and quadratic terms.
pub fn richardson2<F: Fn(f64) -> Result<f64>>(f: F) -> Result<f64> {
    let (a, b, c) = (f(1e-3)?, f(1e-4)?, f(1e-5)?);
    let r1 = (10.0 * b - a) / 9.0;
    let r2 = (10.0 * c - b) / 9.0;
    Ok((100.0 * r2 - r1) / 99.0)
}

/// Prime used for the `p`-dependent factor; the limit does not depend on it.
pub const RESIDUE_PRIME: u64 = 5;

/// The limit as `s → 0` of the residue product, for a given prime.
pub fn h_residue_constant_at(p: u64, k: u32, branch: PolSign) -> Result<f64> {
    richardson(|s| h_residue_product(p, k, branch, s))
}

/// `(k+1)(k+2)√π` for `Pol > 0`, `0` for `Pol < 0`.
pub fn h_residue_constant(k: u32, branch: PolSign) -> Result<f64> {
    h_residue_constant_at(RESIDUE_PRIME, k, branch)
}

/// Residue constants for `k`, together with the `p`-factor limit
/// `(k+1)(k+2)/2`.
pub fn residue_check(k: u32) -> Result<MatchReport> {
    let mut report = MatchReport::new("verify analytic residue").param("k", k);
    let kk = ((k + 1) * (k + 2)) as f64;
    let target = kk * PI.sqrt();
    let pos = h_residue_constant(k, PolSign::Positive)?;
    report.push(
        "H residue, Pol>0",
        fmt(target),
        fmt(pos),
        ((pos - target) / target).abs() < 1e-3,
    );
    let neg = h_residue_constant(k, PolSign::Negative)?;
    report.push("H residue, Pol<0", fmt(0.0), fmt(neg), neg.abs() < 1e-3);
    for p in [2u64, 5, 7] {
        let lim = richardson2(|s| Ok(p_factor(p, k, s)))?;
        report.push(
            format!("p-factor limit p={p}"),
            fmt(kk / 2.0),
            fmt(lim),
            (lim - kk / 2.0).abs() < 1e-6,
        );
    }
    Ok(report)
}

/// Everything checked by `verify analytic`.
pub fn analytic_report(k: u32) -> Result<MatchReport> {
    let mut report = MatchReport::new("verify analytic").param("k", k);
    report.absorb("kernel: ", kernel_bounds_check()?);
    report.absorb("mellin: ", mellin_residue_check()?);
    report.absorb("residue: ", residue_check(k)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zeta_fixtures() {
        assert!(close(zeta(2.0).unwrap(), PI * PI / 6.0, 1e-13));
        assert!(close(zeta(3.0).unwrap(), 1.2020569031595942, 1e-13));
        assert!(close(zeta(0.0).unwrap(), -0.5, 1e-13));
        assert!(close(zeta(0.5).unwrap(), -1.4603545088095868, 1e-12));
        assert!(close(zeta(-1.0).unwrap(), -1.0 / 12.0, 1e-12));
        assert!(close(zeta_pole_removed(0.0), 1.0, 1e-15));
        // s ζ(1+s) = 1 + γ s + O(s^2)
        let euler_gamma = 0.5772156649015329;
        assert!(close(
            (zeta_pole_removed(1e-6) - 1.0) / 1e-6,
            euler_gamma,
            1e-5
        ));
    }

    #[test]
    fn gamma_fixtures() {
        assert!(close(gamma(0.5), PI.sqrt(), 1e-13));
        assert!(close(gamma(5.0), 24.0, 1e-11));
        assert!(close(gamma(1.0 / 3.0), 2.678938534707747, 1e-12));
    }

    #[test]
    fn bessel_fixtures() {
        assert!(close(
            k_bessel(0.0, 2.0).unwrap(),
            0.11389387274953344,
            1e-12
        ));
        assert!(close(
            k_bessel(1.0, 2.0).unwrap(),
            0.13986588181652243,
            1e-12
        ));
        // K_{1/2}(x) = sqrt(π/(2x)) e^{-x}
        let half = (PI / 4.0).sqrt() * (-2.0f64).exp();
        assert!(close(k_bessel(0.5, 2.0).unwrap(), half, 1e-12));
    }

    #[test]
    fn quadrature_reports_failure() {
        let q = Quadrature {
            tolerance: 1e-14,
            node_budget: 50,
            max_depth: 48,
        };
        assert!(matches!(
            q.integrate(|x| x.sin(), 0.0, 3.0),
            Err(Error::Numeric(_))
        ));
        let ok = Quadrature::default()
            .integrate(|x| x * x, 0.0, 3.0)
            .unwrap();
        assert!(close(ok.value, 9.0, 1e-12) && ok.error <= 1e-10);
    }

    #[test]
    fn kernel_bounds_hold() {
        let r = kernel_bounds_check().unwrap();
        assert!(r.pass, "{:#?}", r.failures().collect::<Vec<_>>());
        assert!(kernel_f(-1.0).is_err());
        let k = Kernel::new().unwrap();
        assert!(close(
            k.f(1.0).unwrap() + k.one_minus_f(1.0).unwrap(),
            1.0,
            1e-12
        ));
        // F(x) + F(1/x) = 1 by the symmetry t -> -t of the density.
        assert!(close(
            k.f(0.3).unwrap() + k.f(1.0 / 0.3).unwrap(),
            1.0,
            1e-12
        ));
    }

    #[test]
    fn mellin_checks_pass() {
        let r = mellin_residue_check().unwrap();
        assert!(r.pass, "{:#?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn residue_constants() {
        let six_root_pi = 6.0 * PI.sqrt();
        let pos = h_residue_constant(1, PolSign::Positive).unwrap();
        assert!(((pos - six_root_pi) / six_root_pi).abs() < 1e-3, "{pos}");
        let neg = h_residue_constant(1, PolSign::Negative).unwrap();
        assert!(neg.abs() < 1e-3, "{neg}");
        let k0 = h_residue_constant(0, PolSign::Positive).unwrap();
        assert!(
            ((k0 - 2.0 * PI.sqrt()) / (2.0 * PI.sqrt())).abs() < 1e-3,
            "{k0}"
        );
        for p in [2, 3, 11] {
            let v = h_residue_constant_at(p, 2, PolSign::Positive).unwrap();
            assert!(((v - 12.0 * PI.sqrt()) / (12.0 * PI.sqrt())).abs() < 1e-3);
        }
        for k in 0..5 {
            let r = residue_check(k).unwrap();
            assert!(r.pass, "k={k} {:#?}", r.failures().collect::<Vec<_>>());
        }
    }
}
