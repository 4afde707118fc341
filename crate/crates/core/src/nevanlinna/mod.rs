//! Proximity, counting and characteristic functions, growth-order and
//! hyper-order estimation, and the Jensen / first-main-theorem residuals.

pub mod divisor;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, MeromorphicMap};
use crate::quad::{self, IntegralEstimate, QuadConfig};
use divisor::{winding_with_jitter, DivisorData, DivisorKey};

/// A target value on the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Infinity,
    Value(Complex64),
}

impl Target {
    pub fn zero() -> Target {
        Target::Value(Complex64::new(0.0, 0.0))
    }

    pub fn describe(&self) -> String {
        match self {
            Target::Infinity => "infinity".to_string(),
            Target::Value(a) => format!("{}+{}i", a.re, a.im),
        }
    }
}

/// Per-radius characteristic data.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ProfileRow {
    pub r: f64,
    pub m: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub err: f64,
}

/// Table `r -> (m, N, T)` for one map and one target.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NevanlinnaProfile {
    pub f_id: String,
    pub target: String,
    pub rows: Vec<ProfileRow>,
}

impl NevanlinnaProfile {
    /// CSV with header `r,m,N,T,err`, floats at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,m,N,T,err\r\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\r\n",
                fmt17(row.r),
                fmt17(row.m),
                fmt17(row.n),
                fmt17(row.t),
                fmt17(row.err)
            ));
        }
        out
    }
}

/// 17 significant digits: round-trips every f64 exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Result of a divisor count on `|z| = r`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DivisorCount {
    pub r: f64,
    pub target: String,
    pub count: i64,
    pub winding_residual: f64,
}

/// Growth-exponent fit: the estimate plus the root-mean-square residual of
/// the underlying regression.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GrowthFit {
    pub exponent: f64,
    pub fit_residual: f64,
}

/// The component whose zeros are the `a`-divisor of `f`: `f1 - a f0` for
/// finite `a`, `f0` for `a = infinity`.
pub(crate) fn divisor_component(f: &MeromorphicMap, target: Target) -> Expr {
    match target {
        Target::Infinity => f.denominator().clone(),
        Target::Value(a) => {
            if a.re == 0.0 && a.im == 0.0 {
                f.numerator().clone()
            } else {
                Expr::sub(
                    f.numerator().clone(),
                    Expr::mul(Expr::constant(a), f.denominator().clone()),
                )
            }
        }
    }
}

/// Proximity function: `m(r, f)` for the infinite target, and
/// `m(r, 1/(f-a))` for a finite one. The integrand is evaluated in the
/// log-magnitude domain, so doubly exponential moduli are exact.
pub fn proximity(
    f: &MeromorphicMap,
    target: Target,
    r: f64,
    cfg: &QuadConfig,
) -> Result<IntegralEstimate> {
    let n = f.dimension();
    match target {
        Target::Infinity => {
            let num = f.numerator().clone();
            let den = f.denominator().clone();
            quad::sphere_integral(
                move |z| log_plus_ratio(&num, &den, z),
                n,
                r,
                cfg,
            )
        }
        Target::Value(a) => {
            let g = divisor_component(f, Target::Value(a));
            let den = f.denominator().clone();
            // log^+ 1/|f-a| = log^+ (|f0| / |f1 - a f0|)
            quad::sphere_integral(move |z| log_plus_ratio(&den, &g, z), n, r, cfg)
        }
    }
}

/// `max(0, log|num/den|)` with divisor hits mapped to infinities that the
/// quadrature jitter rule absorbs.
fn log_plus_ratio(num: &Expr, den: &Expr, z: &[Complex64]) -> f64 {
    let num_lm = match num.eval_logmag(z) {
        Ok(lm) => lm,
        Err(_) => return f64::NAN,
    };
    let den_lm = match den.eval_logmag(z) {
        Ok(lm) => lm,
        Err(_) => return f64::NAN,
    };
    if den_lm.is_zero() {
        return f64::INFINITY;
    }
    if num_lm.is_zero() {
        return 0.0;
    }
    (num_lm.log_abs - den_lm.log_abs).max(0.0)
}

/// `int log|f| d sigma_n` (both signs), used by the Jensen identities.
fn mean_log_modulus(f: &MeromorphicMap, r: f64, cfg: &QuadConfig) -> Result<IntegralEstimate> {
    let num = f.numerator().clone();
    let den = f.denominator().clone();
    quad::sphere_integral(
        move |z| {
            let a = match num.eval_logmag(z) {
                Ok(lm) => lm,
                Err(_) => return f64::NAN,
            };
            let b = match den.eval_logmag(z) {
                Ok(lm) => lm,
                Err(_) => return f64::NAN,
            };
            if a.is_zero() {
                return f64::NEG_INFINITY;
            }
            if b.is_zero() {
                return f64::INFINITY;
            }
            a.log_abs - b.log_abs
        },
        f.dimension(),
        r,
        cfg,
    )
}

/// Count of `a`-points of `f` (with multiplicity) inside `|z| < r`,
/// one variable, by the argument principle. A divisor point on the contour
/// itself is dodged by nudging the radius.
pub fn count_points_1d(
    f: &MeromorphicMap,
    target: Target,
    r: f64,
    cfg: &QuadConfig,
) -> Result<DivisorCount> {
    if f.dimension() != 1 {
        return Err(Error::InvalidArgument(
            "count_points_1d requires a one-variable map".into(),
        ));
    }
    let g = divisor_component(f, target);
    let gp = g.derivative(1);
    let (count, winding_residual, _) = winding_with_jitter(&g, &gp, r, cfg)?;
    Ok(DivisorCount {
        r,
        target: target.describe(),
        count,
        winding_residual,
    })
}

/// Oracle supplying exact counting data `n_f(t, a)` for maps whose divisor
/// cannot be located numerically (dimension >= 2 test corpus).
pub type DivisorOracle<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

pub(crate) fn divisor_data(f: &MeromorphicMap, target: Target, r: f64, cfg: &QuadConfig) -> Result<std::sync::Arc<DivisorData>> {
    let key = DivisorKey::from_target(&target);
    if let Some(hit) = f.divisor_cache.lookup(&key, r) {
        return Ok(hit);
    }
    let g = divisor_component(f, target);
    let data = std::sync::Arc::new(divisor::locate_divisor(&g, r, cfg)?);
    f.divisor_cache.store(key, data.clone());
    Ok(data)
}

/// Integrated counting function `N(r)` for the given target, with the
/// paper's base-point convention extended by the classical rule that a
/// divisor point at the origin contributes `n(0) log r`.
///
/// One variable: evaluated from the located divisor (the adaptively refined
/// Stieltjes sum). Higher dimensions: zero when the divisor component
/// carries a syntactic non-vanishing certificate, via the Jensen identity
/// when the opposite divisor is empty, and from `divisor_oracle` otherwise.
pub fn integrated_counting(
    f: &MeromorphicMap,
    target: Target,
    r: f64,
    cfg: &QuadConfig,
    divisor_oracle: Option<DivisorOracle<'_>>,
) -> Result<IntegralEstimate> {
    if let Some(oracle) = divisor_oracle {
        return Ok(stieltjes_of_oracle(oracle, r, cfg));
    }
    if f.dimension() == 1 {
        let data = divisor_data(f, target, r, cfg)?;
        return Ok(IntegralEstimate {
            value: data.integrated_counting(r),
            abs_error_estimate: data.err + 1e-12,
            nodes_used: data.roots.len(),
            refined: true,
        });
    }
    // Dimension >= 2.
    let g = divisor_component(f, target);
    if g.is_nonvanishing() {
        return Ok(IntegralEstimate {
            value: 0.0,
            abs_error_estimate: 0.0,
            nodes_used: 0,
            refined: false,
        });
    }
    let opposite = match target {
        Target::Infinity => f.numerator().clone(),
        Target::Value(_) => f.denominator().clone(),
    };
    if opposite.is_nonvanishing() {
        // Jensen: N(r, 1/(f-a)) - N(r, f-a) = int log|f-a| - log|f(0)-a|.
        let shifted = match target {
            Target::Infinity => f.clone(),
            Target::Value(a) => f.minus_constant(a)?,
        };
        let origin = vec![Complex64::new(0.0, 0.0); f.dimension()];
        let at0 = shifted.eval_logmag(&origin)?;
        if at0.is_zero() || !at0.log_abs.is_finite() {
            return Err(Error::InvalidArgument(
                "Jensen-based counting needs the map regular at the origin".into(),
            ));
        }
        let mean = mean_log_modulus(&shifted, r, cfg)?;
        let value = match target {
            // zeros empty: N(r, f) = log|f(0)| - int log|f|
            Target::Infinity => at0.log_abs - mean.value,
            // poles empty: N(r, 1/(f-a)) = int log|f-a| - log|f(0)-a|
            Target::Value(_) => mean.value - at0.log_abs,
        };
        return Ok(IntegralEstimate {
            value,
            abs_error_estimate: mean.abs_error_estimate,
            nodes_used: mean.nodes_used,
            refined: mean.refined,
        });
    }
    Err(Error::NeedsDivisorOracle)
}

/// Trapezoid in `log t` of a continuous counting oracle, doubled until the
/// Stieltjes sum stabilises.
fn stieltjes_of_oracle(oracle: DivisorOracle<'_>, r: f64, cfg: &QuadConfig) -> IntegralEstimate {
    let t_min = r * 1e-6;
    let span = (r / t_min).ln();
    let level = |k: usize| -> f64 {
        let n = 64usize << k;
        let h = span / n as f64;
        let mut vals = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let t = t_min * (h * j as f64).exp();
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            vals.push(w * oracle(t));
        }
        quad::pairwise_sum(&vals) * h
    };
    let mut estimate = level(0);
    let mut err = f64::INFINITY;
    let mut nodes = 65usize;
    for k in 1..=cfg.max_refinement_levels.min(12) {
        let next = level(k as usize);
        nodes += (64usize << k) + 1;
        err = (next - estimate).abs();
        estimate = next;
        if err <= cfg.rel_tol * estimate.abs().max(1.0) {
            break;
        }
    }
    IntegralEstimate {
        value: estimate,
        abs_error_estimate: if err.is_finite() { err } else { 0.0 },
        nodes_used: nodes,
        refined: true,
    }
}

/// One characteristic row: `m`, `N`, and `T = m + N` at radius `r`.
pub fn characteristic(f: &MeromorphicMap, r: f64, cfg: &QuadConfig) -> Result<ProfileRow> {
    let m = proximity(f, Target::Infinity, r, cfg)?;
    let n = integrated_counting(f, Target::Infinity, r, cfg, None)?;
    Ok(ProfileRow {
        r,
        m: m.value,
        n: n.value,
        t: m.value + n.value,
        err: m.abs_error_estimate + n.abs_error_estimate,
    })
}

/// Characteristic profile over an increasing radius grid.
pub fn profile(
    f: &MeromorphicMap,
    r_grid: &[f64],
    cfg: &QuadConfig,
) -> Result<NevanlinnaProfile> {
    if r_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "radius grid must be strictly increasing".into(),
        ));
    }
    if let Some(&r_max) = r_grid.last() {
        if f.dimension() == 1 {
            // Warm the divisor cache at the largest radius so every row
            // reuses the same located divisor.
            let _ = divisor_data(f, Target::Infinity, r_max, cfg)?;
        }
    }
    let rows = r_grid
        .iter()
        .map(|&r| characteristic(f, r, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(NevanlinnaProfile {
        f_id: format!("({}) / ({})", f.numerator(), f.denominator()),
        target: "function".into(),
        rows,
    })
}

/// `|N(r, 1/f) - N(r, f) - int log|f| sigma_n + log|f(0)||`; zero up to
/// quadrature error for every map with full divisor knowledge.
pub fn jensen_residual(f: &MeromorphicMap, r: f64, cfg: &QuadConfig) -> Result<f64> {
    let (f, _offset) = recenter(f, &[Target::zero(), Target::Infinity], cfg)?;
    let n_zero = integrated_counting(&f, Target::zero(), r, cfg, None)?;
    let n_pole = integrated_counting(&f, Target::Infinity, r, cfg, None)?;
    let mean = mean_log_modulus(&f, r, cfg)?;
    let origin = vec![Complex64::new(0.0, 0.0); f.dimension()];
    let at0 = f.eval_logmag(&origin)?;
    Ok((n_zero.value - n_pole.value - mean.value + at0.log_abs).abs())
}

/// First-main-theorem residual at a finite target:
/// `|T(r, f-a) - m(r, 1/(f-a)) - N(r, 1/(f-a)) + log 1/|f(0)-a||`.
///
/// The identity is exact for `T(r, f-a)` (for `a = 0` this is `T(r, f)`);
/// for other targets `T(r, f)` differs from it by a bounded term, so the
/// exact form is the one that can be asserted to quadrature accuracy.
pub fn fmt_residual(f: &MeromorphicMap, a: Complex64, r: f64, cfg: &QuadConfig) -> Result<f64> {
    let (f, _offset) = recenter(f, &[Target::Value(a), Target::Infinity], cfg)?;
    let shifted = f.minus_constant(a)?;
    let m_shifted = proximity(&shifted, Target::Infinity, r, cfg)?;
    let n_pole = integrated_counting(&f, Target::Infinity, r, cfg, None)?;
    let t = m_shifted.value + n_pole.value;
    let m_a = proximity(&f, Target::Value(a), r, cfg)?;
    let n_a = integrated_counting(&f, Target::Value(a), r, cfg, None)?;
    let origin = vec![Complex64::new(0.0, 0.0); f.dimension()];
    let lm0 = shifted.eval_logmag(&origin)?;
    // log 1/|f(0)-a| = -log|f(0)-a|
    Ok((t - m_a.value - n_a.value - lm0.log_abs).abs())
}

/// Recenter `z -> z + z*` so the origin avoids the listed targets (and the
/// indeterminacy set), choosing `z*` of smallest modulus on a search grid.
/// Returns the (possibly unchanged) map and the offset used.
pub fn recenter(
    f: &MeromorphicMap,
    targets: &[Target],
    _cfg: &QuadConfig,
) -> Result<(MeromorphicMap, Vec<Complex64>)> {
    let n = f.dimension();
    let zero_offset = vec![Complex64::new(0.0, 0.0); n];
    if origin_regular(f, targets) {
        return Ok((f.clone(), zero_offset));
    }
    // Grid search over first-coordinate offsets of growing modulus; the
    // first hit is (approximately) the smallest usable |z*|.
    for k in 1..=80u32 {
        let radius = 0.05 * f64::from(k);
        for j in 0..12u32 {
            let angle = 0.37 + std::f64::consts::TAU * f64::from(j) / 12.0;
            let mut offset = zero_offset.clone();
            offset[0] = Complex64::from_polar(radius, angle);
            if let Ok(shifted) = f.shifted(&offset) {
                if origin_regular(&shifted, targets) {
                    return Ok((shifted, offset));
                }
            }
        }
    }
    Err(Error::InvalidArgument(
        "could not find a regular base point near the origin".into(),
    ))
}

fn origin_regular(f: &MeromorphicMap, targets: &[Target]) -> bool {
    let origin = vec![Complex64::new(0.0, 0.0); f.dimension()];
    let margin = -20.7; // ln(1e-9)
    for target in targets {
        let g = divisor_component(f, *target);
        let lm = match g.eval_logmag(&origin) {
            Ok(lm) => lm,
            Err(_) => return false,
        };
        if lm.is_zero() {
            return false;
        }
        // Reject near-cancellation relative to the component scale.
        let scale = match target {
            Target::Infinity => f.denominator().eval_logmag(&origin).map(|l| l.log_abs),
            Target::Value(_) => {
                let a = f.numerator().eval_logmag(&origin).map(|l| l.log_abs);
                let b = f.denominator().eval_logmag(&origin).map(|l| l.log_abs);
                match (a, b) {
                    (Ok(x), Ok(y)) => Ok(x.max(y)),
                    _ => Err(Error::Overflow),
                }
            }
        };
        match scale {
            Ok(s) if s.is_finite() => {
                if lm.log_abs - s < margin {
                    return false;
                }
            }
            Ok(_) => {}
            Err(_) => return false,
        }
    }
    true
}

fn regression_intercept(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    if sxx < 1e-12 * (1.0 + mean_x * mean_x) * n {
        // No leverage: report the plain mean.
        let rms = (ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum::<f64>() / n).sqrt();
        return (mean_y, rms);
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let p = intercept + slope * x;
            (y - p) * (y - p)
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (intercept, rms)
}

/// Finite-radius growth exponent fits. The local slope of `log T` against
/// `log r` converges to the order like `rho + kappa / T`, so the estimator
/// regresses consecutive-row slopes against `1/T` and reports the
/// intercept; this removes the leading transient that a raw slope fit
/// keeps at desk-scale radii.
pub fn estimate_order(profile: &NevanlinnaProfile) -> Result<GrowthFit> {
    growth_fit(profile, 1.0, false)
}

/// Hyper-order fit: slopes of `log log T` against `log r` regressed on
/// `1/log T`. Rows with `T >= e^3` are preferred to suppress the
/// `log log` transient, falling back to `T >= e` when fewer than eight
/// rows qualify.
pub fn estimate_hyper_order(profile: &NevanlinnaProfile) -> Result<GrowthFit> {
    growth_fit(profile, std::f64::consts::E, true)
}

fn growth_fit(profile: &NevanlinnaProfile, threshold: f64, hyper: bool) -> Result<GrowthFit> {
    let qualifying: Vec<&ProfileRow> = profile
        .rows
        .iter()
        .filter(|row| row.t >= threshold)
        .collect();
    if qualifying.len() < 8 {
        return Err(Error::InsufficientGrowth {
            kind: if hyper { "hyper-order" } else { "order" },
            needed: 8,
            threshold,
        });
    }
    let rows: Vec<&ProfileRow> = if hyper {
        let strict: Vec<&ProfileRow> = qualifying
            .iter()
            .copied()
            .filter(|row| row.t >= std::f64::consts::E.powi(3))
            .collect();
        if strict.len() >= 8 {
            strict
        } else {
            qualifying
        }
    } else {
        qualifying
    };
    // Top half of the surviving grid.
    let half = rows.len() / 2;
    let rows = &rows[half.saturating_sub(1)..];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for pair in rows.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (ya, yb) = if hyper {
            (a.t.ln().ln(), b.t.ln().ln())
        } else {
            (a.t.ln(), b.t.ln())
        };
        let dx = b.r.ln() - a.r.ln();
        if dx <= 0.0 {
            continue;
        }
        let slope = (yb - ya) / dx;
        let x = if hyper {
            0.5 * (1.0 / a.t.ln() + 1.0 / b.t.ln())
        } else {
            0.5 * (1.0 / a.t + 1.0 / b.t)
        };
        xs.push(x);
        ys.push(slope);
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientGrowth {
            kind: if hyper { "hyper-order" } else { "order" },
            needed: 8,
            threshold,
        });
    }
    let (intercept, rms) = regression_intercept(&xs, &ys);
    Ok(GrowthFit {
        exponent: intercept,
        fit_residual: rms,
    })
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

    #[test]
    fn proximity_of_exponential() {
        // m(r, e^z) = r/pi; at r = pi the value is exactly 1.
        let cfg = QuadConfig::default();
        let f = map1("exp(z1)");
        let m = proximity(&f, Target::Infinity, std::f64::consts::PI, &cfg).unwrap();
        assert!((m.value - 1.0).abs() < 1e-6, "got {}", m.value);
    }

    #[test]
    fn proximity_of_identity_and_constant() {
        let cfg = QuadConfig::default();
        let f = map1("z1");
        let m = proximity(&f, Target::Infinity, std::f64::consts::E, &cfg).unwrap();
        assert!((m.value - 1.0).abs() < 1e-9);
        let f = map1("5");
        let m = proximity(&f, Target::Infinity, 7.3, &cfg).unwrap();
        assert!((m.value - 5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn count_points_matches_roots() {
        let cfg = QuadConfig::default();
        let f = map1("z1^3 - 1");
        let c = count_points_1d(&f, Target::zero(), 2.0, &cfg).unwrap();
        assert_eq!(c.count, 3);
        let c = count_points_1d(&f, Target::zero(), 0.5, &cfg).unwrap();
        assert_eq!(c.count, 0);
        // poles of 1/((z-1) z): two inside |z| = 2
        let f = map1_ratio("(z1 - 1) * z1", "1");
        let c = count_points_1d(&f, Target::Infinity, 2.0, &cfg).unwrap();
        assert_eq!(c.count, 2);
    }

    #[test]
    fn integrated_counting_closed_forms() {
        let cfg = QuadConfig::default();
        // N(r, target 0) of z - a0 is log(r/|a0|).
        for (a, r) in [(0.5, 2.0), (1.0 / 3.0, 2.0), (0.5, std::f64::consts::E)] {
            let f = map1(&format!("z1 - {a}"));
            let n = integrated_counting(&f, Target::zero(), r, &cfg, None).unwrap();
            assert!(
                (n.value - (r / a).ln()).abs() < 1e-9,
                "a={a} r={r}: got {}",
                n.value
            );
        }
        // Entire function: no poles.
        let f = map1("exp(z1)");
        let n = integrated_counting(&f, Target::Infinity, 5.0, &cfg, None).unwrap();
        assert_eq!(n.value, 0.0);
        // Single pole at 1: N(e) = 1.
        let f = map1_ratio("z1 - 1", "1");
        let n = integrated_counting(&f, Target::Infinity, std::f64::consts::E, &cfg, None).unwrap();
        assert!((n.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn characteristic_examples() {
        let cfg = QuadConfig::default();
        let f = map1("z1");
        let row = characteristic(&f, std::f64::consts::E, &cfg).unwrap();
        assert!((row.m - 1.0).abs() < 1e-9);
        assert_eq!(row.n, 0.0);
        assert!((row.t - 1.0).abs() < 1e-9);

        let f = map1("exp(z1)");
        let row = characteristic(&f, std::f64::consts::PI, &cfg).unwrap();
        assert!((row.t - 1.0).abs() < 1e-6);

        // No zeros or poles in the unit disk: N = 0, T = m.
        let f = map1_ratio("z1 - 3", "z1 - 2");
        let row = characteristic(&f, 1.0, &cfg).unwrap();
        assert_eq!(row.n, 0.0);
        assert!((row.t - row.m).abs() < 1e-15);
    }

    #[test]
    fn jensen_residual_closed_form_corpus() {
        let cfg = QuadConfig::default();
        for f in [
            map1("z1 - 0.5"),
            map1("exp(z1)"),
            map1_ratio("z1 - 0.3333333333333333", "z1 - 0.5"),
        ] {
            let res = jensen_residual(&f, 2.0, &cfg).unwrap();
            assert!(res < 1e-6, "jensen residual {res}");
        }
    }

    #[test]
    fn fmt_residual_closed_form_corpus() {
        let cfg = QuadConfig::default();
        let targets = [Complex64::new(0.0, 0.0), Complex64::new(0.75, 0.0)];
        for f in [
            map1("z1 - 0.5"),
            map1("exp(z1)"),
            map1_ratio("z1 - 0.3333333333333333", "z1 - 0.5"),
        ] {
            for a in targets {
                let res = fmt_residual(&f, a, 2.0, &cfg).unwrap();
                assert!(res < 1e-6, "fmt residual {res} at target {a}");
            }
        }
    }

    #[test]
    fn jensen_recenters_irregular_base_point() {
        let cfg = QuadConfig::default();
        // f(0) = 0 for z: needs a recenter, then the identity is exact.
        let f = map1("z1");
        let res = jensen_residual(&f, 2.0, &cfg).unwrap();
        assert!(res < 1e-6, "residual {res}");
    }

    #[test]
    fn order_fits() {
        let cfg = QuadConfig::default();
        let f = map1("exp(z1)");
        let grid: Vec<f64> = (0..16)
            .map(|k| 5.0 * (50.0f64 / 5.0).powf(k as f64 / 15.0))
            .collect();
        let p = profile(&f, &grid, &cfg).unwrap();
        let order = estimate_order(&p).unwrap();
        assert!(
            (order.exponent - 1.0).abs() < 0.05,
            "order {}",
            order.exponent
        );
        let hyper = estimate_hyper_order(&p).unwrap();
        assert!(hyper.exponent.abs() < 0.1, "hyper {}", hyper.exponent);

        // Rational: order 0.
        let f = map1_ratio("z1 + 1.3", "z1 - 1.2");
        let p = profile(&f, &grid, &cfg).unwrap();
        let order = estimate_order(&p).unwrap();
        assert!(order.exponent.abs() < 0.05, "order {}", order.exponent);
    }

    #[test]
    fn insufficient_growth_is_an_error() {
        let f = map1("0.5");
        let grid: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let cfg = QuadConfig::default();
        let p = profile(&f, &grid, &cfg).unwrap();
        assert!(matches!(
            estimate_order(&p),
            Err(Error::InsufficientGrowth { .. })
        ));
    }

    #[test]
    fn profile_monotone_and_csv() {
        let cfg = QuadConfig::default();
        let f = map1("exp(z1)");
        let grid = [1.0, 2.0, 4.0, 8.0];
        let p = profile(&f, &grid, &cfg).unwrap();
        for w in p.rows.windows(2) {
            assert!(w[1].t >= w[0].t - 2.0 * (w[0].err + w[1].err));
        }
        let csv = p.to_csv();
        assert!(csv.starts_with("r,m,N,T,err\r\n"));
        assert_eq!(csv.matches("\r\n").count(), 5);
        let json = serde_json::to_string(&p).unwrap();
        let back: NevanlinnaProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }
}
