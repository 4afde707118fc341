//! Deterministic quadrature over circles, spheres and balls.
//!
//! The sphere measure `sigma_n` has total mass one on the boundary of the
//! ball of radius `r`; the ball measure `rho_n` is Lebesgue measure
//! normalised so that the ball of radius `r` in `C^n` has mass `r^{2n}`.
//! Sphere integrals for `n >= 2` are reduced to circle integrals over the
//! fibers of radius `p_r(w) = sqrt(r^2 - |w|^2)`, the outer ball integral
//! running over `w` in the ball of `C^{n-1}`.
//!
//! All estimates are bit-reproducible for a fixed [`QuadConfig`]: random
//! streams are derived per sample index from the configured seed, parallel
//! work writes into indexed buffers, and every reduction uses a fixed-shape
//! pairwise summation tree, so the results do not depend on thread count.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tuning knobs for every quadrature routine in the crate.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QuadConfig {
    /// Initial node count on a circle (>= 64).
    pub circle_nodes: usize,
    /// Dyadic refinement levels before giving up.
    pub max_refinement_levels: u32,
    /// Relative tolerance for successive-refinement agreement.
    pub rel_tol: f64,
    /// Radius nudge, as a fraction of `r`, used when a divisor sits on the
    /// integration contour (in `[0, 1e-3]`).
    pub jitter_radius: f64,
    /// Monte Carlo samples for outer ball integrals in dimension >= 3.
    pub mc_samples: usize,
    /// Seed for all Monte Carlo streams.
    pub rng_seed: u64,
    /// Number of equal-measure radial shells used to stratify samples.
    pub stratification_levels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            circle_nodes: 256,
            max_refinement_levels: 16,
            rel_tol: 1e-6,
            jitter_radius: 1e-9,
            mc_samples: 20_000,
            rng_seed: 42,
            stratification_levels: 16,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.circle_nodes < 64 {
            return Err(Error::InvalidArgument("circle_nodes must be >= 64".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("rel_tol must be positive".into()));
        }
        if !(0.0..=1e-3).contains(&self.jitter_radius) {
            return Err(Error::InvalidArgument(
                "jitter_radius must lie in [0, 1e-3]".into(),
            ));
        }
        if self.mc_samples < 1000 {
            return Err(Error::InvalidArgument(
                "mc_samples must be >= 1000 for dimensions >= 3".into(),
            ));
        }
        Ok(())
    }

    pub fn with_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}

/// Value and error bookkeeping for one integral.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub nodes_used: usize,
    pub refined: bool,
}

/// Fixed-shape pairwise summation; the result depends only on the slice
/// contents, never on thread scheduling.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        let mut s = 0.0;
        for x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Replace non-finite node values, and isolated spikes exceeding a
/// thousand times the median magnitude, by re-evaluating half a
/// sub-interval away. Zeros and poles on the contour form a measure-zero
/// event, so the induced quadrature error stays `O(h log h)`.
fn sanitize_nodes<F: Fn(f64) -> f64>(g: &F, thetas: &[f64], values: &mut [f64], h: f64) {
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).map(f64::abs).collect();
    let median = if finite.is_empty() {
        0.0
    } else {
        let mid = finite.len() / 2;
        finite.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
        finite[mid]
    };
    let threshold = if median > 0.0 { 1e3 * median } else { f64::INFINITY };
    let spike_budget = (values.len() / 64).max(4);
    let spikes = values
        .iter()
        .filter(|v| v.is_finite() && v.abs() > threshold)
        .count();
    let jitter_spikes = spikes <= spike_budget;

    for (i, v) in values.iter_mut().enumerate() {
        let bad = !v.is_finite() || (jitter_spikes && v.abs() > threshold);
        if !bad {
            continue;
        }
        let mut replacement = g(thetas[i] + 0.5 * h);
        if !replacement.is_finite() {
            replacement = g(thetas[i] + 0.25 * h);
        }
        if !replacement.is_finite() {
            replacement = g(thetas[i] - 0.25 * h);
        }
        if replacement.is_finite() && (!jitter_spikes || replacement.abs() <= 10.0 * threshold) {
            *v = replacement;
        } else if replacement.is_finite() {
            *v = replacement;
        } else {
            *v = 0.0;
        }
    }
}

fn eval_circle_level<F: Fn(f64) -> f64 + Sync>(g: &F, n: usize, offset: f64, step: f64) -> Vec<f64> {
    let thetas: Vec<f64> = (0..n).map(|k| offset + step * k as f64).collect();
    let mut values: Vec<f64> = if n >= 4096 {
        thetas.par_iter().map(|&t| g(t)).collect()
    } else {
        thetas.iter().map(|&t| g(t)).collect()
    };
    sanitize_nodes(g, &thetas, &mut values, step);
    values
}

/// `(1/2pi) \int_0^{2pi} g(theta) d theta` by the periodic trapezoid rule
/// with dyadic refinement until two successive levels agree to `rel_tol`.
pub fn circle_integral<F>(g: F, r: f64, cfg: &QuadConfig) -> Result<IntegralEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("circle radius must be positive".into()));
    }
    cfg.validate()?;
    let tau = std::f64::consts::TAU;

    let mut n = cfg.circle_nodes;
    let step = tau / n as f64;
    let values = eval_circle_level(&g, n, 0.0, step);
    let mut sum = pairwise_sum(&values);
    let mut estimate = sum / n as f64;
    let mut err = f64::INFINITY;
    let mut nodes_used = n;
    let mut refined = false;

    for level in 0..cfg.max_refinement_levels {
        // New midpoints interleave with existing nodes.
        let step = tau / n as f64;
        let mid_values = eval_circle_level(&g, n, 0.5 * step, step);
        let mid_sum = pairwise_sum(&mid_values);
        nodes_used += n;
        n *= 2;
        sum += mid_sum;
        let next = sum / n as f64;
        err = (next - estimate).abs();
        estimate = next;
        refined = true;
        let scale = estimate.abs().max(1.0);
        if err <= cfg.rel_tol * scale {
            return Ok(IntegralEstimate {
                value: estimate,
                abs_error_estimate: err,
                nodes_used,
                refined,
            });
        }
        if level + 1 == cfg.max_refinement_levels && err > 10.0 * cfg.rel_tol * scale {
            return Err(Error::NoConvergence {
                disagreement: err,
                levels: cfg.max_refinement_levels,
            });
        }
    }
    Ok(IntegralEstimate {
        value: estimate,
        abs_error_estimate: if err.is_finite() { err } else { 0.0 },
        nodes_used,
        refined,
    })
}

/// Quintic smoothstep with vanishing first derivatives at both ends; the
/// pullback regularises integrable endpoint singularities of radial
/// integrands so the midpoint rule converges at a useful rate.
fn smoothstep(t: f64) -> (f64, f64) {
    let s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    (s, ds)
}

/// Midpoint rule for `\int_a^b f(u) du` through the smoothstep pullback,
/// refined dyadically. Endpoints are never evaluated.
fn radial_integral<F>(f: &F, a: f64, b: f64, rel_tol: f64, max_levels: u32, init: usize) -> (f64, f64, usize)
where
    F: Fn(f64) -> f64,
{
    let span = b - a;
    let level_value = |n: usize| -> f64 {
        let mut vals = Vec::with_capacity(n);
        for k in 0..n {
            let t = (k as f64 + 0.5) / n as f64;
            let (s, ds) = smoothstep(t);
            let u = a + span * s;
            let mut v = f(u) * ds;
            if !v.is_finite() {
                let t2 = (k as f64 + 0.75) / n as f64;
                let (s2, ds2) = smoothstep(t2);
                v = f(a + span * s2) * ds2;
            }
            vals.push(if v.is_finite() { v } else { 0.0 });
        }
        span * pairwise_sum(&vals) / n as f64
    };

    let mut n = init.max(16);
    let mut estimate = level_value(n);
    let mut nodes = n;
    let mut err = f64::INFINITY;
    for _ in 0..max_levels {
        n *= 2;
        let next = level_value(n);
        nodes += n;
        err = (next - estimate).abs();
        estimate = next;
        if err <= rel_tol * estimate.abs().max(1.0) {
            break;
        }
    }
    (estimate, if err.is_finite() { err } else { 0.0 }, nodes)
}

/// `\int_{B_n(r)} h d rho_n` where `rho_n` gives the ball total mass
/// `r^{2n}`. Dimension 1 uses a deterministic polar product rule; higher
/// dimensions use seeded stratified Monte Carlo over radial shells.
pub fn ball_integral<F>(h: F, n: usize, r: f64, cfg: &QuadConfig) -> Result<IntegralEstimate>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    if n == 0 {
        // The 0-dimensional ball is a point of mass one.
        return Ok(IntegralEstimate {
            value: h(&[]),
            abs_error_estimate: 0.0,
            nodes_used: 1,
            refined: false,
        });
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("ball radius must be positive".into()));
    }
    cfg.validate()?;
    if n == 1 {
        ball_integral_polar(&h, r, cfg)
    } else {
        ball_integral_mc(&h, n, r, cfg)
    }
}

/// Dimension-1 ball integral: `(1/2pi) \int_0^{2pi} \int_0^{r^2}
/// h(sqrt(u) e^{i phi}) du d phi`, inner integral adaptive in `u`, outer by
/// the circle rule.
fn ball_integral_polar<F>(h: &F, r: f64, cfg: &QuadConfig) -> Result<IntegralEstimate>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    let u_max = r * r;
    let inner_tol = cfg.rel_tol * 0.5;
    let inner_nodes = std::sync::atomic::AtomicUsize::new(0);
    let inner_err = |phi: f64| -> (f64, f64) {
        let f = |u: f64| {
            let w = Complex64::from_polar(u.max(0.0).sqrt(), phi);
            h(&[w])
        };
        let (v, e, nodes) = radial_integral(&f, 0.0, u_max, inner_tol, cfg.max_refinement_levels, 64);
        inner_nodes.fetch_add(nodes, std::sync::atomic::Ordering::Relaxed);
        (v, e)
    };
    let errs = std::sync::Mutex::new(Vec::<f64>::new());
    let outer = circle_integral(
        |phi| {
            let (v, e) = inner_err(phi);
            errs.lock().unwrap().push(e);
            v
        },
        r,
        cfg,
    )?;
    let inner_err_mean = {
        let errs = errs.lock().unwrap();
        if errs.is_empty() {
            0.0
        } else {
            errs.iter().sum::<f64>() / errs.len() as f64
        }
    };
    Ok(IntegralEstimate {
        value: outer.value,
        abs_error_estimate: outer.abs_error_estimate + inner_err_mean,
        nodes_used: inner_nodes.into_inner(),
        refined: outer.refined,
    })
}

/// Deterministic uniform sample in the ball of `C^n` (real dimension 2n):
/// radius `r * V^(1/2n)` with `V` stratified over shells, direction from
/// normalised Gaussians. Each sample derives its own stream from the seed
/// and its index, so the result is independent of scheduling.
fn ball_sample(n: usize, r: f64, seed: u64, stratum: usize, strata: usize, index: u64) -> Vec<Complex64> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mix = seed
        ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index + 1))
        ^ ((stratum as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9));
    let mut rng = ChaCha8Rng::seed_from_u64(mix);
    let v_lo = stratum as f64 / strata as f64;
    let v_hi = (stratum + 1) as f64 / strata as f64;
    let v: f64 = rng.random_range(v_lo..v_hi);
    let radius = r * v.powf(1.0 / (2.0 * n as f64));
    let mut dir: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        dir[0] = 1.0;
    } else {
        for x in &mut dir {
            *x /= norm;
        }
    }
    (0..n)
        .map(|j| Complex64::new(radius * dir[2 * j], radius * dir[2 * j + 1]))
        .collect()
}

fn ball_integral_mc<F>(h: &F, n: usize, r: f64, cfg: &QuadConfig) -> Result<IntegralEstimate>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    let strata = cfg.stratification_levels.max(1);
    let per = (cfg.mc_samples / strata).max(1);
    let total = strata * per;
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| {
            let stratum = i / per;
            let z = ball_sample(n, r, cfg.rng_seed, stratum, strata, i as u64);
            let v = h(&z);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        })
        .collect();
    let mass = r.powi(2 * n as i32);
    let mean = pairwise_sum(&values) / total as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (total.saturating_sub(1).max(1)) as f64;
    let std_err = (var / total as f64).sqrt();
    Ok(IntegralEstimate {
        value: mass * mean,
        abs_error_estimate: mass * std_err,
        nodes_used: total,
        refined: false,
    })
}

/// `\int_{\partial B_n(r)} h d sigma_n` via fiber integration: for `n = 1`
/// this is the circle rule; for `n >= 2`,
/// `r^{2-2n} \int_{B_{n-1}(r)} [circle integral at radius p_r(w)] d rho_{n-1}(w)`
/// with `p_r(w) = sqrt(r^2 - |w|^2)`, the fiber running along the last
/// coordinate.
pub fn sphere_integral<F>(h: F, n: usize, r: f64, cfg: &QuadConfig) -> Result<IntegralEstimate>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    if n == 0 {
        return Err(Error::InvalidArgument("sphere dimension must be >= 1".into()));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("sphere radius must be positive".into()));
    }
    cfg.validate()?;
    if n == 1 {
        return circle_integral(
            |theta| {
                let z = [Complex64::from_polar(r, theta)];
                h(&z)
            },
            r,
            cfg,
        );
    }

    let inner_cfg = QuadConfig {
        circle_nodes: 64,
        max_refinement_levels: cfg.max_refinement_levels,
        rel_tol: cfg.rel_tol * 0.5,
        ..cfg.clone()
    };
    let inner = |w: &[Complex64]| -> f64 {
        let w_norm_sq: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        let p_sq = r * r - w_norm_sq;
        if p_sq <= 0.0 {
            return 0.0;
        }
        let p = p_sq.sqrt();
        let mut z = Vec::with_capacity(w.len() + 1);
        z.extend_from_slice(w);
        z.push(Complex64::new(0.0, 0.0));
        let res = circle_integral(
            |theta| {
                let mut zz = z.clone();
                *zz.last_mut().unwrap() = Complex64::from_polar(p, theta);
                h(&zz)
            },
            p,
            &inner_cfg,
        );
        match res {
            Ok(est) => est.value,
            Err(_) => f64::NAN,
        }
    };
    let outer = ball_integral(inner, n - 1, r, cfg)?;
    let scale = r.powi(2 - 2 * n as i32);
    Ok(IntegralEstimate {
        value: scale * outer.value,
        abs_error_estimate: scale * outer.abs_error_estimate,
        nodes_used: outer.nodes_used,
        refined: outer.refined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_total_measure_one() {
        let cfg = QuadConfig::default();
        for r in [0.5, 1.0, 10.0] {
            let est = circle_integral(|_| 1.0, r, &cfg).unwrap();
            assert!((est.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_log_singularity_mean_value() {
        // (1/2pi) int log|r e^{i t} - a| dt = log r for |a| < r.
        let cfg = QuadConfig::default();
        let r = 2.0;
        let a = Complex64::new(0.7, 0.4);
        let est = circle_integral(
            |t| (Complex64::from_polar(r, t) - a).norm().ln(),
            r,
            &cfg,
        )
        .unwrap();
        assert!(
            (est.value - r.ln()).abs() < 3.0 * est.abs_error_estimate.max(1e-9),
            "got {} expected {}",
            est.value,
            r.ln()
        );
    }

    #[test]
    fn circle_positive_part_of_cosine() {
        // (1/2pi) int (r cos t)^+ dt = r/pi; with r = pi the value is 1.
        let cfg = QuadConfig::default();
        let r = std::f64::consts::PI;
        let est = circle_integral(|t| (r * t.cos()).max(0.0), r, &cfg).unwrap();
        assert!((est.value - 1.0).abs() < 1e-6, "got {}", est.value);
    }

    #[test]
    fn ball_measure_and_closed_forms() {
        let cfg = QuadConfig::default();
        // rho-measure of the 1-dim ball of radius 2 is 4.
        let est = ball_integral(|_| 1.0, 1, 2.0, &cfg).unwrap();
        assert!((est.value - 4.0).abs() < 4e-6, "got {}", est.value);

        // int_0^1 (1-u)^(-3/8) du = 1.6 under u = |xi|^2.
        let est = ball_integral(
            |z| (1.0 - z[0].norm_sqr()).powf(-3.0 / 8.0),
            1,
            1.0,
            &cfg,
        )
        .unwrap();
        assert!((est.value - 1.6).abs() < 1e-5, "got {}", est.value);

        // int_0^1 u du = 1/2.
        let est = ball_integral(|z| z[0].norm_sqr(), 1, 1.0, &cfg).unwrap();
        assert!((est.value - 0.5).abs() < 1e-6, "got {}", est.value);
    }

    #[test]
    fn sphere_normalization() {
        let cfg = QuadConfig::default();
        for n in [1usize, 2, 3] {
            for r in [0.5, 1.0, 10.0] {
                let est = sphere_integral(|_| 1.0, n, r, &cfg).unwrap();
                assert!(
                    (est.value - 1.0).abs() < 1e-6,
                    "n={n} r={r}: got {}",
                    est.value
                );
            }
        }
    }

    #[test]
    fn sphere_coordinate_symmetry() {
        // |z1|^2/|z|^2 averages to 1/2 on the boundary of B_2(r).
        let cfg = QuadConfig::default();
        let est = sphere_integral(
            |z| z[0].norm_sqr() / (z[0].norm_sqr() + z[1].norm_sqr()),
            2,
            3.0,
            &cfg,
        )
        .unwrap();
        assert!((est.value - 0.5).abs() < 1e-5, "got {}", est.value);
    }

    #[test]
    fn refinement_error_shrinks() {
        // Deeper refinement must not report a larger error estimate.
        let loose = QuadConfig { rel_tol: 1e-3, ..Default::default() };
        let tight = QuadConfig { rel_tol: 1e-9, ..Default::default() };
        let g = |t: f64| (2.0 * t.cos()).max(0.0) + (t.sin() + 0.3).abs();
        let a = circle_integral(g, 1.0, &loose).unwrap();
        let b = circle_integral(g, 1.0, &tight).unwrap();
        assert!(b.nodes_used > a.nodes_used);
        assert!(b.abs_error_estimate <= a.abs_error_estimate);
    }

    #[test]
    fn mc_is_seed_deterministic() {
        let cfg = QuadConfig::default();
        let a = ball_integral(|z| z[0].re * z[0].re + z[1].norm_sqr(), 2, 1.5, &cfg).unwrap();
        let b = ball_integral(|z| z[0].re * z[0].re + z[1].norm_sqr(), 2, 1.5, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn no_convergence_is_reported() {
        // A pathological integrand that never settles: fresh white noise at
        // every node, amplitude 1.
        use std::sync::atomic::{AtomicU64, Ordering};
        let state = AtomicU64::new(1);
        let cfg = QuadConfig {
            max_refinement_levels: 3,
            rel_tol: 1e-12,
            ..Default::default()
        };
        let res = circle_integral(
            |_| {
                let s = state.fetch_add(1, Ordering::Relaxed);
                let x = s.wrapping_mul(0x9e3779b97f4a7c15);
                (x >> 11) as f64 / (1u64 << 53) as f64
            },
            1.0,
            &cfg,
        );
        assert!(matches!(res, Err(Error::NoConvergence { .. })));
    }
}
