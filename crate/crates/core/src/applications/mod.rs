//! Forward-invariance checking of pre-images under translations, the
//! periodicity dichotomy, and degree analysis of first-order partial
//! difference equations rational in the unknown.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{identically_zero, Expr, MeromorphicMap};
use crate::nevanlinna::divisor::{multiplicity_at, newton_polish};
use crate::nevanlinna::{
    characteristic, count_points_1d, divisor_component, estimate_hyper_order, profile, Target,
};
use crate::quad::QuadConfig;

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BoxRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl BoxRegion {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<BoxRegion> {
        if !(re_min < re_max && im_min < im_max) {
            return Err(Error::InvalidArgument("degenerate box".into()));
        }
        Ok(BoxRegion {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let eps = 1e-9 * (1.0 + self.diameter());
        z.re >= self.re_min - eps
            && z.re <= self.re_max + eps
            && z.im >= self.im_min - eps
            && z.im <= self.im_max + eps
    }

    pub fn diameter(&self) -> f64 {
        ((self.re_max - self.re_min).powi(2) + (self.im_max - self.im_min).powi(2)).sqrt()
    }

    pub fn circumradius(&self) -> f64 {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_min, self.im_max),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }

    fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    fn seeds(&self, per_axis: usize) -> Vec<Complex64> {
        // Slight irrational offset keeps seeds off symmetry axes where
        // Newton can stall on saddle points.
        let mut out = Vec::with_capacity(per_axis * per_axis);
        for i in 0..per_axis {
            for j in 0..per_axis {
                let fx = (i as f64 + 0.382) / per_axis as f64;
                let fy = (j as f64 + 0.618) / per_axis as f64;
                out.push(Complex64::new(
                    self.re_min + fx * (self.re_max - self.re_min),
                    self.im_min + fy * (self.im_max - self.im_min),
                ));
            }
        }
        out
    }
}

impl std::fmt::Display for BoxRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Re in [{}, {}], Im in [{}, {}]",
            self.re_min, self.re_max, self.im_min, self.im_max
        )
    }
}

/// One located pre-image with its forward-orbit status.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PreimagePoint {
    pub re: f64,
    pub im: f64,
    pub multiplicity: i64,
    pub forward_hit: bool,
}

/// Finite-region certificate for forward invariance of `f^{-1}({a})` under
/// `z -> z + c`. The check is restricted to the stated box: the pre-image
/// set is infinite, so this is a certificate, not a proof.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InvarianceReport {
    pub target_re: f64,
    pub target_im: f64,
    pub region: String,
    pub points: Vec<PreimagePoint>,
    pub violations: Vec<String>,
}

impl InvarianceReport {
    pub fn all_forward_invariant(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PeriodicityReport {
    pub is_periodic: bool,
    /// Largest observed relative deviation `|f(z+c)/f(z) - 1|` on the grid,
    /// computed from log-magnitude differences so huge moduli stay safe.
    pub max_dev: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub enum PicardVerdict {
    /// Hypotheses and conclusion agree (or a hypothesis fails).
    Consistent,
    /// All pre-images invariant, non-periodic, hyper-order >= 2/3: growth
    /// escapes the dichotomy.
    GrowthEscape,
    /// All pre-images invariant, non-periodic, yet hyper-order < 2/3:
    /// numerical or theoretical inconsistency.
    Contradiction,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PicardReport {
    pub verdict: PicardVerdict,
    pub invariance: Vec<InvarianceReport>,
    pub periodicity: PeriodicityReport,
    pub hyper_order: f64,
    pub hyper_order_residual: f64,
}

/// Locate the `a`-points of `f` in a box: Newton iteration on the divisor
/// component from a seed grid, deduplication at `1e-8`, multiplicities by
/// winding on a small circle around each root. The total multiplicity is
/// cross-checked against the contour count on an enclosing disk whenever
/// the box is centred at the origin.
pub fn find_preimages_1d(
    f: &MeromorphicMap,
    a: Target,
    region: BoxRegion,
    cfg: &QuadConfig,
) -> Result<Vec<(Complex64, i64)>> {
    if f.dimension() != 1 {
        return Err(Error::InvalidArgument(
            "pre-image search requires a one-variable map".into(),
        ));
    }
    let g = divisor_component(f, a);
    let gp = g.derivative(1);
    let scale = region.circumradius().max(1.0);
    let seeds = region.seeds(56);
    let polished: Vec<Complex64> = seeds
        .par_iter()
        .filter_map(|&s| newton_polish(&g, &gp, s, scale))
        .collect();
    let mut roots: Vec<Complex64> = Vec::new();
    for z in polished {
        if !region.contains(z) {
            continue; // NewtonStall / drift out of the box: per-seed, not fatal
        }
        if !roots.iter().any(|r| (r - z).norm() < 1e-8) {
            roots.push(z);
        }
    }
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let min_gap = roots
        .windows(2)
        .map(|w| (w[0] - w[1]).norm())
        .fold(f64::INFINITY, f64::min)
        .min(
            // also compare non-adjacent pairs cheaply via sorted-by-re gaps
            f64::INFINITY,
        );
    let mut out = Vec::with_capacity(roots.len());
    for z in roots {
        let ring = (1e-4f64).min(0.25 * min_gap).max(1e-9);
        let mult = multiplicity_at(&g, &gp, z, ring, cfg)
            .filter(|m| *m > 0)
            .ok_or(Error::WindingAmbiguous {
                residual: 1.0,
                radius: ring,
            })?;
        out.push((z, mult));
    }

    // Consistency check against the argument principle on an enclosing disk.
    if region.center().norm() < 1e-12 * scale {
        let disk = count_points_1d(f, a, region.circumradius() * (1.0 + 1e-7), cfg);
        if let Ok(disk) = disk {
            let total: i64 = out.iter().map(|(_, m)| m).sum();
            if total > disk.count {
                return Err(Error::InvalidArgument(format!(
                    "located multiplicity {total} exceeds the enclosing-disk count {}",
                    disk.count
                )));
            }
        }
    }
    Ok(out)
}

/// Check that every `a`-point `z0` in the box maps to an `a`-point of at
/// least the same multiplicity at `z0 + c` (multiset inclusion).
pub fn forward_invariance_check(
    f: &MeromorphicMap,
    c: Complex64,
    a: Target,
    region: BoxRegion,
    cfg: &QuadConfig,
) -> Result<InvarianceReport> {
    let preimages = find_preimages_1d(f, a, region, cfg)?;
    let g = divisor_component(f, a);
    let gp = g.derivative(1);
    let scale = region.circumradius().max(1.0);
    let (target_re, target_im) = match a {
        Target::Infinity => (f64::INFINITY, 0.0),
        Target::Value(v) => (v.re, v.im),
    };
    let mut points = Vec::with_capacity(preimages.len());
    let mut violations = Vec::new();
    for (z0, mult) in preimages {
        let w = z0 + c;
        let hit = match newton_polish(&g, &gp, w, scale) {
            Some(zs) if (zs - w).norm() <= 1e-6 * (1.0 + w.norm()) => {
                let ring = 1e-4f64.min(1e-2 * (1.0 + w.norm()));
                match multiplicity_at(&g, &gp, zs, ring, cfg) {
                    Some(m) if m >= mult => true,
                    Some(m) => {
                        violations.push(format!(
                            "{z0} has multiplicity {mult} but {w} carries only {m}"
                        ));
                        false
                    }
                    None => {
                        violations.push(format!("multiplicity at {w} could not be resolved"));
                        false
                    }
                }
            }
            _ => {
                violations.push(format!("{w} is not an a-point (image of pre-image {z0})"));
                false
            }
        };
        points.push(PreimagePoint {
            re: z0.re,
            im: z0.im,
            multiplicity: mult,
            forward_hit: hit,
        });
    }
    Ok(InvarianceReport {
        target_re,
        target_im,
        region: region.to_string(),
        points,
        violations,
    })
}

/// Maximum relative deviation `|f(z+c)/f(z) - 1|` over the sample grid,
/// assembled from log-magnitude differences. Periodic means `< 1e-9`.
pub fn periodicity_test(
    f: &MeromorphicMap,
    c: &[Complex64],
    sample_grid: &[Vec<Complex64>],
    _cfg: &QuadConfig,
) -> PeriodicityReport {
    let mut max_dev: f64 = 0.0;
    for z in sample_grid {
        let zc: Vec<Complex64> = z.iter().zip(c).map(|(a, b)| a + b).collect();
        let (base, shifted) = match (f.eval_logmag(z), f.eval_logmag(&zc)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue, // divisor hit: measure-zero, skip the sample
        };
        if base.is_zero() && shifted.is_zero() {
            continue;
        }
        if base.is_zero() || shifted.is_zero() {
            max_dev = f64::INFINITY;
            continue;
        }
        let ratio = LogRatio {
            log_abs: shifted.log_abs - base.log_abs,
            phase: crate::expr::wrap_phase(shifted.phase - base.phase),
        };
        let dev = ratio.distance_from_one();
        max_dev = max_dev.max(dev);
    }
    PeriodicityReport {
        is_periodic: max_dev < 1e-9,
        max_dev,
    }
}

struct LogRatio {
    log_abs: f64,
    phase: f64,
}

impl LogRatio {
    fn distance_from_one(&self) -> f64 {
        if self.log_abs > 700.0 {
            return f64::MAX;
        }
        let q = Complex64::from_polar(self.log_abs.exp(), self.phase);
        (q - Complex64::new(1.0, 0.0)).norm()
    }
}

/// Default sample grid for the periodicity test: a deterministic lattice
/// over the box.
pub fn periodicity_grid(region: BoxRegion, per_axis: usize) -> Vec<Vec<Complex64>> {
    region.seeds(per_axis).into_iter().map(|z| vec![z]).collect()
}

/// Run the full Picard dichotomy: three forward-invariance checks, the
/// periodicity test, and a hyper-order estimate over an internal radius
/// grid.
pub fn picard_verdict(
    f: &MeromorphicMap,
    c: Complex64,
    targets: [Target; 3],
    region: BoxRegion,
    cfg: &QuadConfig,
) -> Result<PicardReport> {
    let invariance: Vec<InvarianceReport> = targets
        .iter()
        .map(|&a| forward_invariance_check(f, c, a, region, cfg))
        .collect::<Result<Vec<_>>>()?;
    let all_invariant = invariance.iter().all(|r| r.all_forward_invariant());

    let periodicity = periodicity_test(f, &[c], &periodicity_grid(region, 9), cfg);

    let grid: Vec<f64> = (0..20)
        .map(|k| 3.0 * (20.0f64 / 3.0).powf(k as f64 / 19.0))
        .collect();
    let (hyper_order, hyper_order_residual) = match profile(f, &grid, cfg)
        .and_then(|p| estimate_hyper_order(&p))
    {
        Ok(fit) => (fit.exponent, fit.fit_residual),
        // Too little growth for a fit means hyper-order zero.
        Err(Error::InsufficientGrowth { .. }) => (0.0, 0.0),
        Err(e) => return Err(e),
    };

    let verdict = if !all_invariant || periodicity.is_periodic {
        PicardVerdict::Consistent
    } else if hyper_order >= 2.0 / 3.0 {
        PicardVerdict::GrowthEscape
    } else {
        PicardVerdict::Contradiction
    };
    Ok(PicardReport {
        verdict,
        invariance,
        periodicity,
        hyper_order,
        hyper_order_residual,
    })
}

/// `R(z, u)`: a rational function of `u` whose coefficients are expressions
/// in `z`. Coefficient index is the power of `u`.
#[derive(Debug, Clone)]
pub struct RationalInU {
    pub numerator: Vec<Expr>,
    pub denominator: Vec<Expr>,
    pub n: usize,
}

impl RationalInU {
    pub fn new(n: usize, numerator: Vec<Expr>, denominator: Vec<Expr>) -> Result<RationalInU> {
        let numerator = trim_poly(numerator, n);
        let denominator = trim_poly(denominator, n);
        if denominator.is_empty() {
            return Err(Error::DegenerateRational);
        }
        if numerator.is_empty() {
            return Err(Error::InvalidArgument(
                "numerator is identically zero".into(),
            ));
        }
        Ok(RationalInU {
            numerator,
            denominator,
            n,
        })
    }

    /// Evaluate the coefficient polynomials at `z`.
    fn coeffs_at(&self, z: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let num = self
            .numerator
            .iter()
            .map(|e| e.eval(z))
            .collect::<Result<Vec<_>>>()?;
        let den = self
            .denominator
            .iter()
            .map(|e| e.eval(z))
            .collect::<Result<Vec<_>>>()?;
        Ok((num, den))
    }

    /// Value `R(z, u)`.
    pub fn eval(&self, z: &[Complex64], u: Complex64) -> Result<Complex64> {
        let (num, den) = self.coeffs_at(z)?;
        let nv = horner(&num, u);
        let dv = horner(&den, u);
        if dv.re == 0.0 && dv.im == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let v = nv / dv;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow)
        }
    }

    /// Every coefficient expression, numerator then denominator.
    pub fn coefficients(&self) -> impl Iterator<Item = &Expr> {
        self.numerator.iter().chain(self.denominator.iter())
    }
}

fn horner(coeffs: &[Complex64], u: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * u + c;
    }
    acc
}

fn trim_poly(mut coeffs: Vec<Expr>, n: usize) -> Vec<Expr> {
    while let Some(last) = coeffs.last() {
        if identically_zero(last, n) {
            coeffs.pop();
        } else {
            break;
        }
    }
    coeffs
}

fn trim_numeric(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let scale = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(1e-300);
    while let Some(last) = v.last() {
        if last.norm() <= tol {
            v.pop();
        } else {
            break;
        }
    }
    v
}

/// Degree of the numeric GCD of two complex polynomials, by the Euclidean
/// remainder sequence with a relative cut-off.
fn numeric_gcd_degree(p: &[Complex64], q: &[Complex64]) -> usize {
    let mut a = trim_numeric(p.to_vec());
    let mut b = trim_numeric(q.to_vec());
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if b.is_empty() {
            return a.len().saturating_sub(1);
        }
        if b.len() == 1 {
            return 0;
        }
        // a mod b
        let mut r = a.clone();
        let bl = *b.last().unwrap();
        let scale_a = r.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while r.len() >= b.len() {
            let factor = *r.last().unwrap() / bl;
            let offset = r.len() - b.len();
            for (i, bc) in b.iter().enumerate() {
                let idx = offset + i;
                let sub = factor * bc;
                r[idx] -= sub;
            }
            r.pop();
            // Remove accumulated round-off in the leading positions.
            while let Some(last) = r.last() {
                if last.norm() <= 1e-11 * scale_a.max(1e-300) && r.len() > 1 {
                    r.pop();
                } else {
                    break;
                }
            }
            if r.len() < b.len() {
                break;
            }
        }
        let r = trim_numeric_with(r, scale_a);
        a = b;
        b = r;
    }
}

fn trim_numeric_with(mut v: Vec<Complex64>, scale: f64) -> Vec<Complex64> {
    let tol = 1e-11 * scale.max(1e-300);
    while let Some(last) = v.last() {
        if last.norm() <= tol {
            v.pop();
        } else {
            break;
        }
    }
    v
}

/// `deg_u R` after common-factor normalisation: the generic value of
/// `max(deg num, deg den) - deg gcd` at sampled points `z`.
pub fn degree_in_u(rational: &RationalInU) -> Result<usize> {
    let pts = crate::expr::probe_points(rational.n, 9, 0xde6_0001);
    let mut best: Option<usize> = None;
    let mut any_den = false;
    for z in &pts {
        let Ok((num, den)) = rational.coeffs_at(z) else {
            continue;
        };
        let num = trim_numeric(num);
        let den = trim_numeric(den);
        if den.is_empty() {
            continue;
        }
        any_den = true;
        if num.is_empty() {
            continue;
        }
        let raw = num.len().max(den.len()) - 1;
        let gcd = numeric_gcd_degree(&num, &den);
        let deg = raw.saturating_sub(gcd);
        best = Some(best.map_or(deg, |b| b.max(deg)));
    }
    if !any_den {
        return Err(Error::DegenerateRational);
    }
    best.ok_or(Error::DegenerateRational)
}

/// Compose `R(z, f(z))` into a meromorphic map. Requires coefficients to be
/// holomorphic-safe and `R` to be in lowest terms.
pub fn compose(rational: &RationalInU, f: &MeromorphicMap) -> Result<MeromorphicMap> {
    if rational.n != f.dimension() {
        return Err(Error::InvalidArgument(
            "rational coefficients and map have different dimensions".into(),
        ));
    }
    for coeff in rational.coefficients() {
        if !coeff.is_holomorphic_safe() {
            return Err(Error::InvalidArgument(
                "composition requires holomorphic-safe coefficients".into(),
            ));
        }
    }
    // Common factors in u would inflate both divisors of the composition.
    let pts = crate::expr::probe_points(rational.n, 7, 0xc0_fac7);
    for z in &pts {
        if let Ok((num, den)) = rational.coeffs_at(z) {
            let num = trim_numeric(num);
            let den = trim_numeric(den);
            if !num.is_empty() && !den.is_empty() && numeric_gcd_degree(&num, &den) > 0 {
                return Err(Error::InvalidArgument(
                    "numerator and denominator share a factor in u; cancel it first".into(),
                ));
            }
        }
    }
    let d = rational.numerator.len().max(rational.denominator.len()) - 1;
    let build = |coeffs: &[Expr]| -> Expr {
        let mut acc = Expr::zero();
        for (k, coeff) in coeffs.iter().enumerate() {
            let term = Expr::mul(
                coeff.clone(),
                Expr::mul(
                    Expr::int_pow(f.numerator().clone(), k as i32),
                    Expr::int_pow(f.denominator().clone(), (d - k) as i32),
                ),
            );
            acc = Expr::add(acc, term);
        }
        acc
    };
    MeromorphicMap::new(f.dimension(), build(&rational.denominator), build(&rational.numerator))
}

/// Ratio row for the Valiron-Mohon'ko identity.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VmRow {
    pub r: f64,
    pub t_composed: f64,
    pub t_base: f64,
    /// `T(r, R(z,f)) / (deg_u R * T(r, f))`.
    pub ratio: f64,
    /// `max_j T(r, coeff_j)`: the `O(phi(r))` budget.
    pub coeff_t_max: f64,
}

/// `T(r, R(z, f)) = deg_u(R) T(r, f) + O(phi(r))`: ratio rows over the grid
/// plus the coefficient-growth bound.
pub fn valiron_mohonko_check(
    rational: &RationalInU,
    f: &MeromorphicMap,
    r_grid: &[f64],
    cfg: &QuadConfig,
) -> Result<Vec<VmRow>> {
    let deg = degree_in_u(rational)?;
    if deg == 0 {
        return Err(Error::InvalidArgument("degree in u is zero".into()));
    }
    let composed = compose(rational, f)?;
    let coeff_maps: Vec<MeromorphicMap> = rational
        .coefficients()
        .map(|e| MeromorphicMap::entire(f.dimension(), e.clone()))
        .collect::<Result<Vec<_>>>()?;
    r_grid
        .iter()
        .map(|&r| {
            let base = characteristic(f, r, cfg)?;
            let comp = characteristic(&composed, r, cfg)?;
            let coeff_t_max = coeff_maps
                .iter()
                .map(|m| characteristic(m, r, cfg).map(|row| row.t))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(VmRow {
                r,
                t_composed: comp.t,
                t_base: base.t,
                ratio: comp.t / (deg as f64 * base.t),
                coeff_t_max,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub enum RiccatiVerdict {
    /// Solution confirmed; degree and growth agree with the degree-one
    /// conclusion (or a hypothesis fails).
    Consistent,
    /// Admissible slow-growth solution of an equation of degree != 1.
    Inconsistent,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RiccatiReport {
    pub degree: usize,
    pub max_residual: f64,
    /// Rows `(r, max_j T(r, coeff_j) / T(r, w))`.
    pub admissibility: Vec<(f64, f64)>,
    pub hyper_order: f64,
    pub admissible: bool,
    pub verdict: RiccatiVerdict,
}

/// Analyse a candidate solution `w` of `w(z+c) = R(z, w(z))`: verify the
/// functional equation on a random grid (an exact equation should hit
/// machine precision), then report degree, admissibility ratios,
/// hyper-order, and the degree-one verdict.
pub fn riccati_analysis(
    rational: &RationalInU,
    w: &MeromorphicMap,
    c: &[Complex64],
    r_grid: &[f64],
    cfg: &QuadConfig,
) -> Result<RiccatiReport> {
    if rational.n != w.dimension() || c.len() != w.dimension() {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    let tol = 1e-8;
    let pts = crate::expr::probe_points(w.dimension(), 100, cfg.rng_seed ^ 0x71cc);
    let mut max_residual: f64 = 0.0;
    let mut evaluated = 0usize;
    for z in &pts {
        let zc: Vec<Complex64> = z.iter().zip(c).map(|(a, b)| a + b).collect();
        let (lhs, wz) = match (w.eval(&zc), w.eval(z)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let rhs = match rational.eval(z, wz) {
            Ok(v) => v,
            Err(_) => continue,
        };
        evaluated += 1;
        let res = (lhs - rhs).norm() / (1.0 + lhs.norm() + rhs.norm());
        max_residual = max_residual.max(res);
    }
    if evaluated < 20 {
        return Err(Error::InvalidArgument(
            "could not evaluate the functional equation on enough sample points".into(),
        ));
    }
    if max_residual >= tol {
        return Err(Error::NotASolution {
            residual: max_residual,
            tol,
        });
    }
    let degree = degree_in_u(rational)?;
    let coeff_maps: Vec<MeromorphicMap> = rational
        .coefficients()
        .filter(|e| e.is_holomorphic_safe())
        .map(|e| MeromorphicMap::entire(w.dimension(), e.clone()))
        .collect::<Result<Vec<_>>>()?;
    let admissibility: Vec<(f64, f64)> = r_grid
        .iter()
        .map(|&r| {
            let t_w = characteristic(w, r, cfg)?.t;
            let coeff_t = coeff_maps
                .iter()
                .map(|m| characteristic(m, r, cfg).map(|row| row.t))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((r, coeff_t / t_w.max(1e-12)))
        })
        .collect::<Result<Vec<_>>>()?;
    let hyper_order = match profile(w, r_grid, cfg).and_then(|p| estimate_hyper_order(&p)) {
        Ok(fit) => fit.exponent,
        Err(Error::InsufficientGrowth { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    let admissible = admissibility
        .last()
        .map(|&(_, ratio)| ratio < 0.1)
        .unwrap_or(false);
    let verdict = if admissible && hyper_order < 2.0 / 3.0 && degree != 1 {
        RiccatiVerdict::Inconsistent
    } else {
        RiccatiVerdict::Consistent
    };
    Ok(RiccatiReport {
        degree,
        max_residual,
        admissibility,
        hyper_order,
        admissible,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn map1(f1: &str) -> MeromorphicMap {
        MeromorphicMap::entire(1, parse_expr(f1).unwrap()).unwrap()
    }

    fn target(re: f64, im: f64) -> Target {
        Target::Value(Complex64::new(re, im))
    }

    #[test]
    fn preimages_of_square() {
        let cfg = QuadConfig::default();
        let f = map1("z1^2");
        let region = BoxRegion::new(-2.0, 2.0, -2.0, 2.0).unwrap();
        let pts = find_preimages_1d(&f, target(1.0, 0.0), region, &cfg).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().all(|(_, m)| *m == 1));
        let mut res: Vec<f64> = pts.iter().map(|(z, _)| z.re).collect();
        res.sort_by(f64::total_cmp);
        assert!((res[0] + 1.0).abs() < 1e-9 && (res[1] - 1.0).abs() < 1e-9);

        // Double root at the origin.
        let pts = find_preimages_1d(&f, target(0.0, 0.0), region, &cfg).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].1, 2);
        assert!(pts[0].0.norm() < 1e-9);
    }

    #[test]
    fn invariance_of_periodic_map() {
        let cfg = QuadConfig::default();
        let f = map1("exp(6.283185307179586i * z1)");
        let region = BoxRegion::new(-1.5, 1.5, -1.0, 1.0).unwrap();
        let report = forward_invariance_check(
            &f,
            Complex64::new(1.0, 0.0),
            target(1.0, 0.0),
            region,
            &cfg,
        )
        .unwrap();
        assert!(report.all_forward_invariant());
        assert!(!report.points.is_empty());
    }

    #[test]
    fn invariance_violated_for_plain_exponential() {
        // Pre-images of 1 under e^z are 2 pi i k; adding 1 lands where
        // e^z = e != 1.
        let cfg = QuadConfig::default();
        let f = map1("exp(z1)");
        let region = BoxRegion::new(-1.0, 1.0, -7.0, 7.0).unwrap();
        let report = forward_invariance_check(
            &f,
            Complex64::new(1.0, 0.0),
            target(1.0, 0.0),
            region,
            &cfg,
        )
        .unwrap();
        assert!(!report.all_forward_invariant());
        assert!(!report.violations.is_empty());
    }

    #[test]
    fn periodicity_examples() {
        let cfg = QuadConfig::default();
        let region = BoxRegion::new(-2.0, 2.0, -2.0, 2.0).unwrap();
        let grid = periodicity_grid(region, 8);

        let f = map1("exp(6.283185307179586i * z1)");
        let rep = periodicity_test(&f, &[Complex64::new(1.0, 0.0)], &grid, &cfg);
        assert!(rep.is_periodic, "max_dev {}", rep.max_dev);

        let f = map1("exp(z1)");
        let rep = periodicity_test(&f, &[Complex64::new(1.0, 0.0)], &grid, &cfg);
        assert!(!rep.is_periodic);
        assert!((rep.max_dev - (std::f64::consts::E - 1.0)).abs() < 1e-9);

        let f = map1("exp(exp(z1))");
        let rep = periodicity_test(&f, &[Complex64::new(3f64.ln(), 0.0)], &grid, &cfg);
        assert!(!rep.is_periodic);
    }

    #[test]
    fn degree_examples() {
        // (u + e^{z1}) / (u^2 + 1) has degree 2.
        let r = RationalInU::new(
            1,
            vec![parse_expr("exp(z1)").unwrap(), Expr::one()],
            vec![Expr::one(), Expr::zero(), Expr::one()],
        )
        .unwrap();
        assert_eq!(degree_in_u(&r).unwrap(), 2);

        // Moebius: degree 1.
        let r = RationalInU::new(
            1,
            vec![parse_expr("2").unwrap(), parse_expr("1").unwrap()],
            vec![parse_expr("1").unwrap(), parse_expr("3").unwrap()],
        )
        .unwrap();
        assert_eq!(degree_in_u(&r).unwrap(), 1);

        // (u^2 - 1)/(u - 1) -> 1 after cancellation.
        let r = RationalInU::new(
            1,
            vec![Expr::real(-1.0), Expr::zero(), Expr::one()],
            vec![Expr::real(-1.0), Expr::one()],
        )
        .unwrap();
        assert_eq!(degree_in_u(&r).unwrap(), 1);
    }

    #[test]
    fn degree_invariant_under_common_coefficient_scaling() {
        let scale = parse_expr("exp(z1)").unwrap();
        let r1 = RationalInU::new(
            1,
            vec![Expr::one(), Expr::one()],
            vec![Expr::one(), Expr::zero(), Expr::one()],
        )
        .unwrap();
        let r2 = RationalInU::new(
            1,
            r1.numerator.iter().map(|e| Expr::mul(scale.clone(), e.clone())).collect(),
            r1.denominator.iter().map(|e| Expr::mul(scale.clone(), e.clone())).collect(),
        )
        .unwrap();
        assert_eq!(degree_in_u(&r1).unwrap(), degree_in_u(&r2).unwrap());
    }

    #[test]
    fn degenerate_rational_rejected() {
        assert!(matches!(
            RationalInU::new(1, vec![Expr::one()], vec![Expr::zero()]),
            Err(Error::DegenerateRational)
        ));
    }

    #[test]
    fn riccati_rejects_non_solution() {
        // w = e^z with e^c = 2 does not satisfy w(z+c) = w^2.
        let cfg = QuadConfig::default();
        let w = map1("exp(z1)");
        let r = RationalInU::new(1, vec![Expr::zero(), Expr::zero(), Expr::one()], vec![Expr::one()]).unwrap();
        let grid = [4.0, 8.0, 16.0];
        let res = riccati_analysis(&r, &w, &[Complex64::new(2f64.ln(), 0.0)], &grid, &cfg);
        assert!(matches!(res, Err(Error::NotASolution { .. })));
    }

    #[test]
    fn riccati_constant_fixed_point() {
        let cfg = QuadConfig::default();
        let w = map1("5");
        let r = RationalInU::new(1, vec![Expr::zero(), Expr::one()], vec![Expr::one()]).unwrap();
        let grid = [2.0, 4.0, 8.0];
        let rep = riccati_analysis(&r, &w, &[Complex64::new(1.0, 0.0)], &grid, &cfg).unwrap();
        assert_eq!(rep.degree, 1);
        assert_eq!(rep.verdict, RiccatiVerdict::Consistent);
    }
}
