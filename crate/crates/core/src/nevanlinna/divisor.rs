//! Argument-principle root counting and divisor localisation in one
//! variable.
//!
//! `N(r)` is the Riemann-Stieltjes integral of `n(t)/t`; since `n(t)` is an
//! integer-valued non-decreasing step function, the integral is evaluated by
//! adaptively refining a logarithmic radius grid: intervals on which the
//! winding count does not change contribute exactly, and intervals carrying a
//! jump are narrowed by bisection until Newton polishing can pin the root
//! moduli, validated against the bracketing winding counts. A divisor point
//! at the origin contributes `n(0) log r` (the classical convention), which
//! keeps counting well defined for maps whose divisor passes through `0`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::{pairwise_sum, QuadConfig};

/// Located divisor data for one target: root moduli with multiplicities in
/// `(t_floor, up_to)`, plus the multiplicity sitting at (or numerically
/// indistinguishable from) the origin.
#[derive(Debug, Clone)]
pub struct DivisorData {
    pub origin_mult: i64,
    /// Sorted by modulus: `(modulus, multiplicity, location)`.
    pub roots: Vec<(f64, i64, Complex64)>,
    pub err: f64,
    pub up_to: f64,
}

impl DivisorData {
    /// `N(r)` from the located divisor: `n(0) log r + sum m_k log(r/|z_k|)`.
    pub fn integrated_counting(&self, r: f64) -> f64 {
        let mut total = self.origin_mult as f64 * r.ln();
        for &(modulus, mult, _) in &self.roots {
            if modulus < r {
                total += mult as f64 * (r / modulus).ln();
            }
        }
        total
    }

    /// `n(t)`: total multiplicity with modulus at most `t`.
    pub fn count_at(&self, t: f64) -> i64 {
        self.origin_mult
            + self
                .roots
                .iter()
                .filter(|(m, _, _)| *m <= t)
                .map(|(_, mult, _)| *mult)
                .sum::<i64>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum DivisorKey {
    Infinity,
    Value(u64, u64),
}

impl DivisorKey {
    pub(crate) fn from_target(t: &crate::nevanlinna::Target) -> DivisorKey {
        match t {
            crate::nevanlinna::Target::Infinity => DivisorKey::Infinity,
            crate::nevanlinna::Target::Value(a) => DivisorKey::Value(a.re.to_bits(), a.im.to_bits()),
        }
    }
}

#[derive(Debug, Default)]
pub struct DivisorCache {
    inner: Mutex<HashMap<DivisorKey, Arc<DivisorData>>>,
}

impl DivisorCache {
    pub(crate) fn lookup(&self, key: &DivisorKey, r: f64) -> Option<Arc<DivisorData>> {
        let map = self.inner.lock().unwrap();
        map.get(key).filter(|d| d.up_to >= r).cloned()
    }

    pub(crate) fn store(&self, key: DivisorKey, data: Arc<DivisorData>) {
        let mut map = self.inner.lock().unwrap();
        match map.get(&key) {
            Some(existing) if existing.up_to >= data.up_to => {}
            _ => {
                map.insert(key, data);
            }
        }
    }
}

/// Winding number of `g` along `|z| = radius`:
/// `(1/2 pi i) \oint g'/g dz`, trapezoid with dyadic refinement until the
/// estimate sits within 0.1 of an integer and has stabilised.
/// Magnitudes are handled through log-magnitude ratios, so doubly
/// exponential components stay finite.
pub fn winding_number(
    g: &Expr,
    gp: &Expr,
    radius: f64,
    cfg: &QuadConfig,
) -> Result<(i64, f64, usize)> {
    let tau = std::f64::consts::TAU;
    let integrand = |theta: f64| -> Option<Complex64> {
        let z = Complex64::from_polar(radius, theta);
        let lm_g = g.eval_logmag(&[z]).ok()?;
        let lm_gp = gp.eval_logmag(&[z]).ok()?;
        if lm_g.is_zero() {
            return None;
        }
        if lm_gp.is_zero() {
            return Some(Complex64::new(0.0, 0.0));
        }
        let ratio = lm_gp.div(lm_g).ok()?.to_complex()?;
        let v = z * ratio;
        if v.re.is_finite() && v.im.is_finite() {
            Some(v)
        } else {
            None
        }
    };
    let eval_level = |n: usize, offset: f64| -> (Vec<f64>, Vec<f64>) {
        let step = tau / n as f64;
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for k in 0..n {
            let theta = offset + step * k as f64;
            let v = integrand(theta)
                .or_else(|| integrand(theta + 0.5 * step))
                .or_else(|| integrand(theta + 0.25 * step))
                .unwrap_or(Complex64::new(0.0, 0.0));
            re.push(v.re);
            im.push(v.im);
        }
        (re, im)
    };

    let mut n = cfg.circle_nodes.max(128);
    let (re, im) = eval_level(n, 0.0);
    let mut sum = Complex64::new(pairwise_sum(&re), pairwise_sum(&im));
    let mut nodes = n;
    let mut prev = sum / n as f64;
    let mut prev_delta = f64::INFINITY;
    let max_total_nodes = 1usize << 22;
    loop {
        let step = tau / n as f64;
        let (re, im) = eval_level(n, 0.5 * step);
        sum += Complex64::new(pairwise_sum(&re), pairwise_sum(&im));
        nodes += n;
        n *= 2;
        let w = sum / n as f64;
        let nearest = w.re.round();
        let residual = (w - Complex64::new(nearest, 0.0)).norm();
        let delta = (w - prev).norm();
        prev = w;
        if residual < 0.1 && delta < 0.05 {
            return Ok((nearest as i64, residual, nodes));
        }
        // A divisor point on (or vanishingly near) the contour makes the
        // trapezoid stall; bail out so a radius nudge can take over.
        if nodes >= (1 << 16) && delta > 0.5 * prev_delta {
            return Err(Error::WindingAmbiguous { residual, radius });
        }
        prev_delta = delta;
        if nodes > max_total_nodes {
            return Err(Error::WindingAmbiguous { residual, radius });
        }
    }
}

/// Winding with radius nudges when a divisor point sits on (or too close
/// to) the contour.
pub fn winding_with_jitter(
    g: &Expr,
    gp: &Expr,
    radius: f64,
    cfg: &QuadConfig,
) -> Result<(i64, f64, usize)> {
    let base = cfg.jitter_radius.max(1e-9);
    let mut last = Err(Error::WindingAmbiguous { residual: 1.0, radius });
    for factor in [0.0, base, -base, 1e-6, 1e-4, -1e-4] {
        let r_try = radius * (1.0 + factor);
        match winding_number(g, gp, r_try, cfg) {
            Ok(ok) => return Ok(ok),
            Err(e) => last = Err(e),
        }
    }
    last
}

pub(crate) fn newton_polish(g: &Expr, gp: &Expr, start: Complex64, scale: f64) -> Option<Complex64> {
    let mut z = start;
    for _ in 0..96 {
        let lm_g = g.eval_logmag(&[z]).ok()?;
        if lm_g.is_zero() {
            return Some(z);
        }
        let lm_gp = gp.eval_logmag(&[z]).ok()?;
        if lm_gp.is_zero() {
            return None;
        }
        let step = lm_g.div(lm_gp).ok()?.to_complex()?;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        z -= step;
        if step.norm() <= 1e-14 * (z.norm() + scale) {
            return Some(z);
        }
        if z.norm() > 1e6 * (scale + 1.0) {
            return None;
        }
    }
    None
}

/// Multiplicity of an isolated root: winding of `g` on a small circle.
pub(crate) fn multiplicity_at(g: &Expr, gp: &Expr, center: Complex64, radius: f64, cfg: &QuadConfig) -> Option<i64> {
    let tau = std::f64::consts::TAU;
    let mut n = 64usize;
    let mut prev: Option<Complex64> = None;
    while n <= 4096 {
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for k in 0..n {
            let theta = tau * k as f64 / n as f64;
            let dz = Complex64::from_polar(radius, theta);
            let z = center + dz;
            let v = (|| {
                let lm_g = g.eval_logmag(&[z]).ok()?;
                let lm_gp = gp.eval_logmag(&[z]).ok()?;
                if lm_g.is_zero() {
                    return None;
                }
                if lm_gp.is_zero() {
                    return Some(Complex64::new(0.0, 0.0));
                }
                let ratio = lm_gp.div(lm_g).ok()?.to_complex()?;
                Some(dz * ratio)
            })()
            .unwrap_or(Complex64::new(0.0, 0.0));
            re.push(v.re);
            im.push(v.im);
        }
        let w = Complex64::new(pairwise_sum(&re), pairwise_sum(&im)) / n as f64;
        let nearest = w.re.round();
        let residual = (w - Complex64::new(nearest, 0.0)).norm();
        if residual < 0.1 {
            if let Some(p) = prev {
                if (w - p).norm() < 0.05 {
                    return Some(nearest as i64);
                }
            }
            prev = Some(w);
        } else {
            prev = None;
        }
        n *= 2;
        let _ = cfg;
    }
    None
}

/// Try to account for the `jump` roots inside the annulus `a < |z| < b` by
/// polishing Newton iterates seeded on the mid circle. Returns the roots
/// `(modulus, multiplicity, location)` when the multiplicities add up.
fn resolve_annulus(
    g: &Expr,
    gp: &Expr,
    a: f64,
    b: f64,
    jump: i64,
    cfg: &QuadConfig,
) -> Option<Vec<(f64, i64, Complex64)>> {
    let mid = (a * b).sqrt();
    let seeds = 96usize;
    let mut roots: Vec<Complex64> = Vec::new();
    let dedup_tol = 1e-8 * (mid + 1.0);
    for ring in [1.0, 0.9, 1.1] {
        for k in 0..seeds {
            let theta = std::f64::consts::TAU * (k as f64 + 0.31) / seeds as f64;
            let start = Complex64::from_polar(mid * ring, theta);
            if let Some(z) = newton_polish(g, gp, start, mid) {
                let m = z.norm();
                if m >= a * (1.0 + 1e-12) && m <= b * (1.0 - 1e-12) {
                    if !roots.iter().any(|r| (r - z).norm() < dedup_tol) {
                        roots.push(z);
                    }
                }
            }
        }
        if !roots.is_empty() {
            break;
        }
    }
    if roots.is_empty() {
        return None;
    }
    roots.sort_by(|x, y| {
        x.norm()
            .total_cmp(&y.norm())
            .then(x.re.total_cmp(&y.re))
            .then(x.im.total_cmp(&y.im))
    });
    let min_gap = roots
        .windows(2)
        .map(|w| (w[0] - w[1]).norm())
        .fold(f64::INFINITY, f64::min);
    let ring_radius = (1e-5 * (mid + 1.0)).min(min_gap * 0.25).min((b - a) * 0.25);
    let ring_radius = if ring_radius > 0.0 { ring_radius } else { 1e-5 * (mid + 1.0) };
    let mut out = Vec::with_capacity(roots.len());
    let mut total = 0i64;
    for z in roots {
        let mult = multiplicity_at(g, gp, z, ring_radius, cfg)?;
        if mult <= 0 {
            return None;
        }
        total += mult;
        out.push((z.norm(), mult, z));
    }
    if total == jump {
        Some(out)
    } else {
        None
    }
}

/// Locate the divisor of `g` inside `|z| < r` (one variable).
pub fn locate_divisor(g: &Expr, r: f64, cfg: &QuadConfig) -> Result<DivisorData> {
    let gp = g.derivative(1);
    let t_floor = r * 1e-9;
    let (n_floor, _, _) = winding_with_jitter(g, &gp, t_floor, cfg)?;
    let (n_top, _, _) = winding_with_jitter(g, &gp, r, cfg)?;

    let mut roots: Vec<(f64, i64, Complex64)> = Vec::new();
    let mut err = 0.0f64;
    // Interval stack: (a, n(a), b, n(b)) with a jump inside.
    let mut stack: Vec<(f64, i64, f64, i64)> = Vec::new();
    if n_top > n_floor {
        stack.push((t_floor, n_floor, r, n_top));
    }
    let iso_width = 0.05; // log-width below which Newton takes over
    let giveup_width = 1e-9;
    while let Some((a, na, b, nb)) = stack.pop() {
        let jump = nb - na;
        debug_assert!(jump > 0);
        let width = (b / a).ln();
        if width <= iso_width {
            if let Some(found) = resolve_annulus(g, &gp, a, b, jump, cfg) {
                roots.extend(found);
                continue;
            }
        }
        if width <= giveup_width {
            // Accept the bracket midpoint; the contribution error per unit
            // of multiplicity is at most half the log-width.
            let mid = (a * b).sqrt();
            roots.push((mid, jump, Complex64::from_polar(mid, 0.0)));
            err += jump as f64 * width * 0.5;
            continue;
        }
        let mid = (a * b).sqrt();
        let (nm, _, _) = winding_with_jitter(g, &gp, mid, cfg)?;
        let nm = nm.clamp(na, nb);
        if nm > na {
            stack.push((a, na, mid, nm));
        }
        if nb > nm {
            stack.push((mid, nm, b, nb));
        }
    }
    roots.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.re.total_cmp(&y.2.re)).then(x.2.im.total_cmp(&y.2.im)));
    Ok(DivisorData {
        origin_mult: n_floor,
        roots,
        err,
        up_to: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn winding_counts_cube_roots() {
        let cfg = QuadConfig::default();
        let g = parse_expr("z1^3 - 1").unwrap();
        let gp = g.derivative(1);
        let (count, residual, _) = winding_number(&g, &gp, 2.0, &cfg).unwrap();
        assert_eq!(count, 3);
        assert!(residual < 0.1);
        let (count, _, _) = winding_number(&g, &gp, 0.5, &cfg).unwrap();
        assert_eq!(count, 0);
    }

    #[test]
    fn winding_handles_huge_moduli() {
        // exp(z^2) - based expressions stay finite through logmag ratios.
        let cfg = QuadConfig::default();
        let g = parse_expr("exp(z1^2) * (z1 - 1)").unwrap();
        let gp = g.derivative(1);
        let (count, _, _) = winding_number(&g, &gp, 10.0, &cfg).unwrap();
        assert_eq!(count, 1);
    }

    #[test]
    fn locate_simple_divisor() {
        let cfg = QuadConfig::default();
        let g = parse_expr("(z1 - 0.5) * (z1 + 0.25i)").unwrap();
        let data = locate_divisor(&g, 2.0, &cfg).unwrap();
        assert_eq!(data.origin_mult, 0);
        let moduli: Vec<f64> = data.roots.iter().map(|r| r.0).collect();
        assert_eq!(data.roots.len(), 2);
        assert!((moduli[0] - 0.25).abs() < 1e-10);
        assert!((moduli[1] - 0.5).abs() < 1e-10);
        let expected = (2.0f64 / 0.5).ln() + (2.0f64 / 0.25).ln();
        assert!((data.integrated_counting(2.0) - expected).abs() < 1e-9);
    }

    #[test]
    fn locate_equal_modulus_roots() {
        // Three cube roots of -5 share the same modulus.
        let cfg = QuadConfig::default();
        let g = parse_expr("z1^3 + 5").unwrap();
        let data = locate_divisor(&g, 3.0, &cfg).unwrap();
        assert_eq!(data.roots.iter().map(|r| r.1).sum::<i64>(), 3);
        let m = 5f64.powf(1.0 / 3.0);
        for (modulus, _, _) in &data.roots {
            assert!((modulus - m).abs() < 1e-9);
        }
    }

    #[test]
    fn locate_origin_divisor() {
        // exp(z) - 1 vanishes at 0 and at 2 pi i k.
        let cfg = QuadConfig::default();
        let g = parse_expr("exp(z1) - 1").unwrap();
        let data = locate_divisor(&g, 8.0, &cfg).unwrap();
        assert_eq!(data.origin_mult, 1);
        assert_eq!(data.roots.len(), 2); // +-2 pi i
        for (modulus, mult, _) in &data.roots {
            assert!((modulus - std::f64::consts::TAU).abs() < 1e-9);
            assert_eq!(*mult, 1);
        }
    }

    #[test]
    fn locate_multiple_root() {
        let cfg = QuadConfig::default();
        let g = parse_expr("(z1 - 0.5)^2").unwrap();
        let data = locate_divisor(&g, 1.0, &cfg).unwrap();
        assert_eq!(data.roots.len(), 1);
        assert_eq!(data.roots[0].1, 2);
    }
}
