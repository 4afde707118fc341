//! The difference operator `Delta_c f = f(z+c) - f(z)`, difference-quotient
//! proximity, the explicit one- and n-dimensional difference-quotient
//! bounds, and the difference second-main-theorem ledger.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{identically_zero, Expr, MeromorphicMap};
use crate::nevanlinna::{
    count_points_1d, integrated_counting, proximity, DivisorOracle, Target,
};
use crate::quad::{ball_integral, sphere_integral, IntegralEstimate, QuadConfig};

/// Parameters echoed with every bound check.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundParams {
    pub r: f64,
    /// `s` (one variable) or `R` (several variables).
    pub outer_radius: f64,
    pub delta: f64,
    pub shift_re: f64,
    pub shift_im: f64,
    pub dim: usize,
}

/// Outcome of one inequality evaluation. `holds` is
/// `lhs <= rhs + lhs_err + rhs_err`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub params: BoundParams,
    pub margin: f64,
    pub holds: bool,
    pub lhs_err: f64,
    pub rhs_err: f64,
}

impl BoundReport {
    fn new(lhs: f64, rhs: f64, lhs_err: f64, rhs_err: f64, params: BoundParams) -> BoundReport {
        BoundReport {
            lhs,
            rhs,
            margin: rhs - lhs,
            holds: lhs <= rhs + lhs_err + rhs_err,
            lhs_err,
            rhs_err,
            params,
        }
    }
}

/// Second-main-theorem bookkeeping at one radius.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SmtLedger {
    pub r: f64,
    /// `m(r,f) + sum_j m(r, 1/(f - a_j))`.
    pub lhs: f64,
    #[serde(rename = "two_T")]
    pub two_t: f64,
    /// `2 N(r,f) - N(r, Delta_c f) + N(r, 1/Delta_c f)`.
    pub n_delta: f64,
    /// `two_T - n_delta - lhs`; may dip negative on the exceptional set.
    pub slack: f64,
    pub err: f64,
}

/// `q(delta)` and the constant `C` of the n-dimensional bound.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HolderParams {
    pub delta: f64,
    pub q: u32,
    pub c: f64,
    pub c_err: f64,
}

/// Ratio row for the shift-invariance check.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ShiftRow {
    pub r: f64,
    pub t_shifted: f64,
    pub t_base: f64,
    pub ratio: f64,
    pub n_shifted: f64,
    pub n_enlarged: f64,
    /// `N(r, f(z+c)) <= N(r+|c|, f) + tol` row-wise.
    pub counting_inequality_ok: bool,
}

/// `Delta_c f` as a meromorphic map:
/// numerator `f1(z+c) f0(z) - f1(z) f0(z+c)`, denominator `f0(z+c) f0(z)`.
/// Errors with `IdenticallyZero` when the numerator vanishes on a sampled
/// grid, i.e. `f` is `c`-periodic.
pub fn delta_map(f: &MeromorphicMap, c: &[Complex64]) -> Result<MeromorphicMap> {
    let n = f.dimension();
    if c.len() != n {
        return Err(Error::InvalidArgument(format!(
            "shift has {} components, map has dimension {n}",
            c.len()
        )));
    }
    let f0s = f.denominator().shift(c);
    let f1s = f.numerator().shift(c);
    let numerator = Expr::sub(
        Expr::mul(f1s, f.denominator().clone()),
        Expr::mul(f.numerator().clone(), f0s.clone()),
    );
    let denominator = Expr::mul(f0s, f.denominator().clone());
    if identically_zero(&numerator, n) || delta_cancels(f, c) {
        return Err(Error::IdenticallyZero);
    }
    MeromorphicMap::new(n, denominator, numerator)
}

/// Relative cancellation test: `|f(z+c) - f(z)|` tiny against `|f|` scale
/// at every probe point marks the difference identically zero.
fn delta_cancels(f: &MeromorphicMap, c: &[Complex64]) -> bool {
    let pts = crate::expr::probe_points(f.dimension(), 24, 0xd1f_f00d);
    let mut decided = 0usize;
    let mut all_tiny = true;
    for z in &pts {
        let zc: Vec<Complex64> = z.iter().zip(c).map(|(a, b)| a + b).collect();
        let (a, b) = match (f.eval_logmag(z), f.eval_logmag(&zc)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        if a.is_zero() && b.is_zero() {
            continue;
        }
        decided += 1;
        let scale = a.log_abs.max(b.log_abs);
        let (va, vb) = match (a.to_complex(), b.to_complex()) {
            (Some(x), Some(y)) => (x, y),
            _ => {
                // Too large to subtract directly: compare in the log domain.
                if (a.log_abs - b.log_abs).abs() > 1e-9 {
                    all_tiny = false;
                }
                continue;
            }
        };
        if (vb - va).norm().ln() > scale + (1e-9f64).ln() {
            all_tiny = false;
        }
    }
    decided > 0 && all_tiny
}

/// `int log^+ |f(z+c)/f(z)| d sigma_n`, evaluated entirely in the
/// log-magnitude domain.
pub fn diff_quotient_proximity(
    f: &MeromorphicMap,
    c: &[Complex64],
    r: f64,
    cfg: &QuadConfig,
) -> Result<IntegralEstimate> {
    let n = f.dimension();
    if c.len() != n {
        return Err(Error::InvalidArgument(format!(
            "shift has {} components, map has dimension {n}",
            c.len()
        )));
    }
    let c = c.to_vec();
    let f = f.clone();
    sphere_integral(
        move |z| {
            let zc: Vec<Complex64> = z.iter().zip(&c).map(|(a, b)| a + b).collect();
            let base = match f.eval_logmag(z) {
                Ok(lm) => lm,
                Err(Error::DivisionByZero) => return f64::NAN,
                Err(_) => return f64::NAN,
            };
            let shifted = match f.eval_logmag(&zc) {
                Ok(lm) => lm,
                Err(Error::DivisionByZero) => return f64::INFINITY,
                Err(_) => return f64::NAN,
            };
            if base.is_zero() {
                return f64::INFINITY;
            }
            if shifted.is_zero() {
                return 0.0;
            }
            (shifted.log_abs - base.log_abs).max(0.0)
        },
        n,
        r,
        cfg,
    )
}

/// Explicit one-dimensional difference-quotient bound:
///
/// ```text
/// int log^+|f(z+c)/f(z)| sigma_1
///   <= 8 pi |c|^d / (d (1-d) r^d) * (n(s,f) + n(s,1/f))
///    + 4 pi |c| / ((1-d)(s-r-|c|)) * (s/(s-r))^(1-d) * (m(s,f) + m(s,1/f))
/// ```
///
/// for all `r > 0`, `s > r + |c|` and `d = delta` in `(0,1)`.
pub fn lemma1_bound(
    f: &MeromorphicMap,
    r: f64,
    s: f64,
    c: Complex64,
    delta: f64,
    cfg: &QuadConfig,
) -> Result<BoundReport> {
    if f.dimension() != 1 {
        return Err(Error::InvalidArgument(
            "the one-dimensional bound requires a one-variable map".into(),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument("delta must lie in (0,1)".into()));
    }
    let c_abs = c.norm();
    if !(s > r + c_abs) {
        return Err(Error::InvalidArgument(format!(
            "need s > r + |c| (s = {s}, r = {r}, |c| = {c_abs})"
        )));
    }
    let lhs = diff_quotient_proximity(f, &[c], r, cfg)?;

    let poles = count_points_1d(f, Target::Infinity, s, cfg)?;
    let zeros = count_points_1d(f, Target::zero(), s, cfg)?;
    let m_inf = proximity(f, Target::Infinity, s, cfg)?;
    let m_zero = proximity(f, Target::zero(), s, cfg)?;

    let pi = std::f64::consts::PI;
    let count_term = 8.0 * pi * c_abs.powf(delta) / (delta * (1.0 - delta) * r.powf(delta))
        * (poles.count + zeros.count) as f64;
    let prox_factor = 4.0 * pi * c_abs / ((1.0 - delta) * (s - r - c_abs))
        * (s / (s - r)).powf(1.0 - delta);
    let prox_term = prox_factor * (m_inf.value + m_zero.value);
    let rhs = count_term + prox_term;
    let rhs_err = prox_factor * (m_inf.abs_error_estimate + m_zero.abs_error_estimate)
        + (poles.winding_residual + zeros.winding_residual) * 1e-9;

    Ok(BoundReport::new(
        lhs.value,
        rhs,
        lhs.abs_error_estimate,
        rhs_err,
        BoundParams {
            r,
            outer_radius: s,
            delta,
            shift_re: c.re,
            shift_im: c.im,
            dim: 1,
        },
    ))
}

/// `q(delta) = floor(1/(1 - sqrt(delta))) >= 2` and the constant
/// `C = int_{B_{n-1}(1)} (1 - |xi|^2)^(-delta q / (2(q-1))) d rho_{n-1}`.
pub fn holder_params(delta: f64, n: usize, cfg: &QuadConfig) -> Result<HolderParams> {
    if !(delta > 0.25 && delta < 1.0) {
        return Err(Error::InvalidArgument("delta must lie in (1/4, 1)".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "the Hoelder constant concerns dimensions n >= 2".into(),
        ));
    }
    let q = (1.0 / (1.0 - delta.sqrt())).floor() as u32;
    debug_assert!(q >= 2);
    let exponent = -delta * q as f64 / (2.0 * (q as f64 - 1.0));
    let est = ball_integral(
        move |xi| {
            let s: f64 = xi.iter().map(|z| z.norm_sqr()).sum();
            (1.0 - s).powf(exponent)
        },
        n - 1,
        1.0,
        cfg,
    )?;
    Ok(HolderParams {
        delta,
        q,
        c: est.value,
        c_err: est.abs_error_estimate,
    })
}

/// Explicit n-dimensional difference-quotient bound along the single
/// coordinate shift `c~_j`:
///
/// ```text
/// int log^+|f(z+c~_j)/f(z)| sigma_n
///   <= 8 pi |c_j|^d C / (d(1-d)) (R/r)^(2n-2) n_f(R,inf,0) / r^d
///    + 4 pi |c_j| / (1-d) (R/r)^(2n-2) (R/(R-(r+|c_j|))) (R/(R-r))^(1-d)
///      m_f(R,inf,0) / sqrt(R^2 - r^2)
/// ```
///
/// for all `R > r + |c_j| > |c_j|`. `n_f(R,inf,0)` comes from the supplied
/// counting oracle unless both components carry non-vanishing certificates
/// (then it is zero).
#[allow(clippy::too_many_arguments)]
pub fn lemma_nd_bound(
    f: &MeromorphicMap,
    r: f64,
    big_r: f64,
    j: usize,
    c_j: Complex64,
    delta: f64,
    cfg: &QuadConfig,
    count_oracle: Option<DivisorOracle<'_>>,
) -> Result<BoundReport> {
    let n = f.dimension();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "the n-dimensional bound requires dimension >= 2".into(),
        ));
    }
    if j == 0 || j > n {
        return Err(Error::InvalidArgument(format!("coordinate {j} out of 1..={n}")));
    }
    if !(delta > 0.25 && delta < 1.0) {
        return Err(Error::InvalidArgument("delta must lie in (1/4, 1)".into()));
    }
    let c_abs = c_j.norm();
    if !(big_r > r + c_abs && r + c_abs > c_abs) {
        return Err(Error::InvalidArgument(format!(
            "need R > r + |c_j| > |c_j| (R = {big_r}, r = {r}, |c_j| = {c_abs})"
        )));
    }
    let mut shift = vec![Complex64::new(0.0, 0.0); n];
    shift[j - 1] = c_j;
    let lhs = diff_quotient_proximity(f, &shift, r, cfg)?;

    let holder = holder_params(delta, n, cfg)?;
    let counts = if f.numerator().is_nonvanishing() && f.denominator().is_nonvanishing() {
        0.0
    } else {
        match count_oracle {
            Some(oracle) => oracle(big_r),
            None => return Err(Error::NeedsDivisorOracle),
        }
    };
    let m_inf = proximity(f, Target::Infinity, big_r, cfg)?;
    let m_zero = proximity(f, Target::zero(), big_r, cfg)?;
    let m_total = m_inf.value + m_zero.value;

    let pi = std::f64::consts::PI;
    let ratio_pow = (big_r / r).powi(2 * n as i32 - 2);
    let count_term = 8.0 * pi * c_abs.powf(delta) * holder.c / (delta * (1.0 - delta))
        * ratio_pow
        * counts
        / r.powf(delta);
    let prox_factor = 4.0 * pi * c_abs / (1.0 - delta)
        * ratio_pow
        * (big_r / (big_r - (r + c_abs)))
        * (big_r / (big_r - r)).powf(1.0 - delta)
        / (big_r * big_r - r * r).sqrt();
    let rhs = count_term + prox_factor * m_total;
    let rhs_err = prox_factor * (m_inf.abs_error_estimate + m_zero.abs_error_estimate)
        + count_term / holder.c.max(1e-300) * holder.c_err;

    Ok(BoundReport::new(
        lhs.value,
        rhs,
        lhs.abs_error_estimate,
        rhs_err,
        BoundParams {
            r,
            outer_radius: big_r,
            delta,
            shift_re: c_j.re,
            shift_im: c_j.im,
            dim: n,
        },
    ))
}

/// Difference second-main-theorem ledger at radius `r`:
/// `lhs = m(r,f) + sum_j m(r, 1/(f-a_j))`, `two_T = 2 T(r,f)`,
/// `n_delta = 2N(r,f) - N(r, Delta_c f) + N(r, 1/Delta_c f)`, and
/// `slack = two_T - n_delta - lhs`. No attempt is made to compute the
/// `o(.)` term; on the exceptional set the slack may be negative.
pub fn smt_ledger(
    f: &MeromorphicMap,
    c: &[Complex64],
    targets: &[Complex64],
    r: f64,
    cfg: &QuadConfig,
) -> Result<SmtLedger> {
    if targets.len() < 2 {
        return Err(Error::InvalidArgument(
            "the second main theorem needs q >= 2 distinct finite targets".into(),
        ));
    }
    for (i, a) in targets.iter().enumerate() {
        for b in &targets[i + 1..] {
            if (a - b).norm() < 1e-12 {
                return Err(Error::InvalidArgument("targets must be distinct".into()));
            }
        }
    }
    let delta = delta_map(f, c)?;

    let mut err = 0.0;
    let m_inf = proximity(f, Target::Infinity, r, cfg)?;
    err += m_inf.abs_error_estimate;
    let mut lhs = m_inf.value;
    for &a in targets {
        let m_a = proximity(f, Target::Value(a), r, cfg)?;
        lhs += m_a.value;
        err += m_a.abs_error_estimate;
    }

    let n_f = integrated_counting(f, Target::Infinity, r, cfg, None)?;
    let two_t = 2.0 * (m_inf.value + n_f.value);
    err += 2.0 * n_f.abs_error_estimate;

    let n_delta_poles = integrated_counting(&delta, Target::Infinity, r, cfg, None)?;
    let n_delta_zeros = integrated_counting(&delta, Target::zero(), r, cfg, None)?;
    err += n_delta_poles.abs_error_estimate + n_delta_zeros.abs_error_estimate;
    let n_delta = 2.0 * n_f.value - n_delta_poles.value + n_delta_zeros.value;

    Ok(SmtLedger {
        r,
        lhs,
        two_t,
        n_delta,
        slack: two_t - n_delta - lhs,
        err,
    })
}

/// Shift invariance of the characteristic: rows
/// `(r, T(r, f(z+c)) / T(r, f))` over the grid, each row also asserting the
/// counting inequality `N(r, f(z+c)) <= N(r + |c|, f) + tol`.
pub fn shift_characteristic_check(
    f: &MeromorphicMap,
    c: &[Complex64],
    r_grid: &[f64],
    cfg: &QuadConfig,
) -> Result<Vec<ShiftRow>> {
    let shifted = f.shifted(c)?;
    let c_abs = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tol = 1e-6;
    r_grid
        .iter()
        .map(|&r| {
            let base = crate::nevanlinna::characteristic(f, r, cfg)?;
            let shift_row = crate::nevanlinna::characteristic(&shifted, r, cfg)?;
            let n_enlarged = integrated_counting(f, Target::Infinity, r + c_abs, cfg, None)?;
            Ok(ShiftRow {
                r,
                t_shifted: shift_row.t,
                t_base: base.t,
                ratio: shift_row.t / base.t,
                n_shifted: shift_row.n,
                n_enlarged: n_enlarged.value,
                counting_inequality_ok: shift_row.n <= n_enlarged.value + tol,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn map1(f1: &str) -> MeromorphicMap {
        MeromorphicMap::entire(1, parse_expr(f1).unwrap()).unwrap()
    }

    fn map1_ratio(f0: &str, f1: &str) -> MeromorphicMap {
        MeromorphicMap::new(1, parse_expr(f0).unwrap(), parse_expr(f1).unwrap()).unwrap()
    }

    fn c1(re: f64, im: f64) -> Vec<Complex64> {
        vec![Complex64::new(re, im)]
    }

    #[test]
    fn delta_of_square() {
        // Delta_1 z^2 = 2z + 1.
        let f = map1("z1^2");
        let d = delta_map(&f, &c1(1.0, 0.0)).unwrap();
        for x in [0.3, -1.7, 2.4] {
            let z = [Complex64::new(x, 0.5)];
            let got = d.eval(&z).unwrap();
            let expect = 2.0 * z[0] + 1.0;
            assert!((got - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn delta_of_exponential() {
        // Delta_c e^z = e^z (e^c - 1).
        let f = map1("exp(z1)");
        let c = Complex64::new(0.7, 0.2);
        let d = delta_map(&f, &[c]).unwrap();
        let z = [Complex64::new(0.4, -0.9)];
        let expect = z[0].exp() * (c.exp() - 1.0);
        assert!((d.eval(&z).unwrap() - expect).norm() < 1e-12);
    }

    #[test]
    fn delta_detects_periodicity() {
        // e^{2 pi i z} has period 1.
        let f = MeromorphicMap::entire(
            1,
            parse_expr("exp(6.283185307179586i * z1)").unwrap(),
        )
        .unwrap();
        assert!(matches!(
            delta_map(&f, &c1(1.0, 0.0)),
            Err(Error::IdenticallyZero)
        ));
    }

    #[test]
    fn diff_quotient_constant_cases() {
        let cfg = QuadConfig::default();
        // Quotient of e^z under a real shift c is the constant e^c.
        let f = map1("exp(z1)");
        let est = diff_quotient_proximity(&f, &c1(2.0, 0.0), 5.0, &cfg).unwrap();
        assert!((est.value - 2.0).abs() < 1e-9, "got {}", est.value);

        // Periodic map: quotient is 1, integral 0.
        let f = MeromorphicMap::entire(
            1,
            parse_expr("exp(6.283185307179586i * z1)").unwrap(),
        )
        .unwrap();
        let est = diff_quotient_proximity(&f, &c1(1.0, 0.0), 3.0, &cfg).unwrap();
        assert!(est.value.abs() < 1e-12, "got {}", est.value);
    }

    #[test]
    fn diff_quotient_of_gaussian_exponential() {
        // f = e^{z^2}, c = 1: the quotient is e^{2z+1}, so the proximity is
        // m(r, e^{2z+1}) = (1/2pi) int (2 r cos t + 1)^+ dt.
        let cfg = QuadConfig::default();
        let f = map1("exp(z1^2)");
        let r = 3.0;
        let est = diff_quotient_proximity(&f, &c1(1.0, 0.0), r, &cfg).unwrap();
        let theta0 = (-1.0 / (2.0 * r)).acos();
        let expect = (2.0 * r * theta0.sin() + theta0) / std::f64::consts::PI;
        assert!(
            (est.value - expect).abs() < 1e-6,
            "got {} expected {expect}",
            est.value
        );
    }

    #[test]
    fn lemma1_closed_form_case() {
        // f = e^z, c = 1, r = 5, s = 12, delta = 1/2: lhs = 1 and
        // rhs = 32 sqrt(12/7) with no counting term.
        let cfg = QuadConfig::default();
        let f = map1("exp(z1)");
        let report = lemma1_bound(&f, 5.0, 12.0, Complex64::new(1.0, 0.0), 0.5, &cfg).unwrap();
        assert!((report.lhs - 1.0).abs() < 1e-7);
        let expect_rhs = 32.0 * (12.0f64 / 7.0).sqrt();
        assert!(
            (report.rhs - expect_rhs).abs() < 1e-4,
            "rhs {} expected {expect_rhs}",
            report.rhs
        );
        assert!(report.holds);
    }

    #[test]
    fn lemma1_rational_case() {
        let cfg = QuadConfig::default();
        let f = map1_ratio("z1 + 1", "z1 - 1");
        let report = lemma1_bound(&f, 3.0, 10.0, Complex64::new(1.0, 0.0), 0.5, &cfg).unwrap();
        assert!(report.holds, "margin {}", report.margin);
        assert!(report.margin > 0.0);
    }

    #[test]
    fn lemma1_rejects_bad_radii() {
        let cfg = QuadConfig::default();
        let f = map1("exp(z1)");
        assert!(lemma1_bound(&f, 5.0, 5.5, Complex64::new(1.0, 0.0), 0.5, &cfg).is_err());
    }

    #[test]
    fn holder_constants() {
        let cfg = QuadConfig::default();
        let h = holder_params(0.5, 2, &cfg).unwrap();
        assert_eq!(h.q, 3);
        assert!((h.c - 1.6).abs() < 1e-4, "C = {}", h.c);
        let h = holder_params(0.26, 2, &cfg).unwrap();
        assert_eq!(h.q, 2);
    }

    #[test]
    fn smt_ledger_exponential() {
        // f = e^z, c = i pi: Delta f = -2 e^z, all N-terms vanish.
        let cfg = QuadConfig::default();
        let f = map1("exp(z1)");
        let ledger = smt_ledger(
            &f,
            &c1(0.0, std::f64::consts::PI),
            &[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            4.0,
            &cfg,
        )
        .unwrap();
        assert!(ledger.n_delta.abs() < 1e-9, "n_delta {}", ledger.n_delta);
        assert!((ledger.slack - (ledger.two_t - ledger.lhs)).abs() < 1e-12);
    }

    #[test]
    fn smt_ledger_rejects_periodic() {
        let cfg = QuadConfig::default();
        let f = MeromorphicMap::entire(
            1,
            parse_expr("exp(6.283185307179586i * z1)").unwrap(),
        )
        .unwrap();
        assert!(matches!(
            smt_ledger(
                &f,
                &c1(1.0, 0.0),
                &[Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)],
                2.0,
                &cfg
            ),
            Err(Error::IdenticallyZero)
        ));
    }

    #[test]
    fn shift_check_counting_inequality() {
        let cfg = QuadConfig::default();
        let f = map1_ratio("z1 + 1", "z1 - 1");
        let rows = shift_characteristic_check(&f, &c1(1.0, 0.0), &[5.0, 10.0, 20.0], &cfg).unwrap();
        for row in rows {
            assert!(row.counting_inequality_ok, "row at r={}", row.r);
            assert!(row.ratio.is_finite());
        }
    }
}
