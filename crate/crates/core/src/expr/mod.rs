//! Expression trees for holomorphic functions of `n` complex variables.
//!
//! The grammar is deliberately small: variables, complex constants, field
//! arithmetic, `exp`, and integer powers. That covers every map the rest of
//! the crate needs (rational functions, `e^z`, `exp(exp(z))`, products and
//! shifts thereof) while keeping symbolic differentiation total and
//! log-magnitude evaluation exact for doubly exponential moduli.

mod parse;

pub use parse::{parse_complex, parse_complex_list, parse_expr};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

const LN_F64_MAX: f64 = 709.782712893384;

/// A node of an immutable expression tree. Subtrees are shared via `Arc`,
/// so cloning and rewriting (shift, derivative) are cheap and evaluation is
/// safe to run from many threads at once.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Coordinate `z_j`, 1-based index.
    Var(usize),
    Const(Complex64),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Exp(Arc<Expr>),
    /// Integer power, possibly negative.
    IntPow(Arc<Expr>, i32),
}

/// `log|w|` and `arg(w)` of a complex value `w`, kept separately so that
/// moduli like `|exp(exp(z))|` never have to be materialised as floats.
///
/// `log_abs = -inf` encodes `w = 0`; the phase is then conventionally `0`.
/// Phase is wrapped to `(-pi, pi]` at every combination step and is
/// best-effort only: all accuracy guarantees are on `log_abs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMag {
    pub log_abs: f64,
    pub phase: f64,
}

impl LogMag {
    pub const ZERO: LogMag = LogMag {
        log_abs: f64::NEG_INFINITY,
        phase: 0.0,
    };

    pub fn from_complex(w: Complex64) -> LogMag {
        if w.re == 0.0 && w.im == 0.0 {
            LogMag::ZERO
        } else {
            LogMag {
                log_abs: w.norm().ln(),
                phase: w.arg(),
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    /// The complex value `exp(log_abs + i*phase)`, if it fits in an `f64`.
    pub fn to_complex(&self) -> Option<Complex64> {
        if self.is_zero() {
            return Some(Complex64::new(0.0, 0.0));
        }
        if self.log_abs > LN_F64_MAX {
            return None;
        }
        let modulus = self.log_abs.exp();
        Some(Complex64::from_polar(modulus, self.phase))
    }

    pub fn mul(self, other: LogMag) -> LogMag {
        if self.is_zero() || other.is_zero() {
            return LogMag::ZERO;
        }
        LogMag {
            log_abs: self.log_abs + other.log_abs,
            phase: wrap_phase(self.phase + other.phase),
        }
    }

    pub fn div(self, other: LogMag) -> Result<LogMag> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(LogMag::ZERO);
        }
        Ok(LogMag {
            log_abs: self.log_abs - other.log_abs,
            phase: wrap_phase(self.phase - other.phase),
        })
    }

    fn neg(self) -> LogMag {
        if self.is_zero() {
            return LogMag::ZERO;
        }
        LogMag {
            log_abs: self.log_abs,
            phase: wrap_phase(self.phase + std::f64::consts::PI),
        }
    }

    fn powi(self, k: i32) -> Result<LogMag> {
        if self.is_zero() {
            return match k.cmp(&0) {
                std::cmp::Ordering::Greater => Ok(LogMag::ZERO),
                std::cmp::Ordering::Equal => Ok(LogMag::from_complex(Complex64::new(1.0, 0.0))),
                std::cmp::Ordering::Less => Err(Error::DivisionByZero),
            };
        }
        Ok(LogMag {
            log_abs: self.log_abs * f64::from(k),
            phase: wrap_phase(self.phase * f64::from(k)),
        })
    }

    /// `self + sign*other`, rescaled by the larger modulus so that no
    /// intermediate overflows: with `M = max(log_abs)` both addends have
    /// modulus at most one after dividing by `e^M`.
    fn add_signed(self, other: LogMag, sign: f64) -> Result<LogMag> {
        if self.is_zero() && other.is_zero() {
            return Err(Error::IndeterminatePhase);
        }
        if self.is_zero() {
            return Ok(if sign < 0.0 { other.neg() } else { other });
        }
        if other.is_zero() {
            return Ok(self);
        }
        let m = self.log_abs.max(other.log_abs);
        let a = Complex64::from_polar((self.log_abs - m).exp(), self.phase);
        let b = Complex64::from_polar((other.log_abs - m).exp(), other.phase);
        let s = a + sign * b;
        if s.re == 0.0 && s.im == 0.0 {
            return Ok(LogMag::ZERO);
        }
        Ok(LogMag {
            log_abs: m + s.norm().ln(),
            phase: s.arg(),
        })
    }
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let y = x.rem_euclid(tau);
    if y > std::f64::consts::PI {
        y - tau
    } else {
        y
    }
}

impl Expr {
    pub fn var(j: usize) -> Expr {
        Expr::Var(j)
    }

    pub fn constant(c: Complex64) -> Expr {
        Expr::Const(c)
    }

    pub fn real(x: f64) -> Expr {
        Expr::Const(Complex64::new(x, 0.0))
    }

    pub fn one() -> Expr {
        Expr::real(1.0)
    }

    pub fn zero() -> Expr {
        Expr::real(0.0)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), _) if *x == Complex64::new(0.0, 0.0) => b,
            (_, Expr::Const(y)) if *y == Complex64::new(0.0, 0.0) => a,
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            _ => Expr::Add(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (_, Expr::Const(y)) if *y == Complex64::new(0.0, 0.0) => a,
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
            _ => Expr::Sub(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match (&a, &b) {
            (Expr::Const(x), _) if *x == zero => Expr::zero(),
            (_, Expr::Const(y)) if *y == zero => Expr::zero(),
            (Expr::Const(x), _) if *x == one => b,
            (_, Expr::Const(y)) if *y == one => a,
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            _ => Expr::Mul(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match &b {
            Expr::Const(y) if *y == Complex64::new(1.0, 0.0) => a,
            _ => Expr::Div(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match &a {
            Expr::Const(x) => Expr::Const(-x),
            _ => Expr::Neg(Arc::new(a)),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::Exp(Arc::new(a))
    }

    pub fn int_pow(a: Expr, k: i32) -> Expr {
        match k {
            0 => Expr::one(),
            1 => a,
            _ => Expr::IntPow(Arc::new(a), k),
        }
    }

    /// Largest variable index appearing in the tree (0 for constants).
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Var(j) => *j,
            Expr::Const(_) => 0,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Expr::Neg(a) | Expr::Exp(a) => a.max_var(),
            Expr::IntPow(a, _) => a.max_var(),
        }
    }

    /// True when the tree contains no division and no negative integer
    /// power, hence evaluates to a holomorphic (entire) function.
    pub fn is_holomorphic_safe(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Const(_) => true,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.is_holomorphic_safe() && b.is_holomorphic_safe()
            }
            Expr::Div(_, _) => false,
            Expr::Neg(a) | Expr::Exp(a) => a.is_holomorphic_safe(),
            Expr::IntPow(a, k) => *k >= 0 && a.is_holomorphic_safe(),
        }
    }

    /// Syntactic certificate that the expression never vanishes: nonzero
    /// constants, `exp` of anything, and products/powers/negations of such.
    pub fn is_nonvanishing(&self) -> bool {
        match self {
            Expr::Const(c) => !(c.re == 0.0 && c.im == 0.0),
            Expr::Exp(_) => true,
            Expr::Mul(a, b) => a.is_nonvanishing() && b.is_nonvanishing(),
            Expr::Div(a, b) => a.is_nonvanishing() && b.is_nonvanishing(),
            Expr::Neg(a) => a.is_nonvanishing(),
            Expr::IntPow(a, _) => a.is_nonvanishing(),
            _ => false,
        }
    }

    /// Exact recursive evaluation at `z`.
    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        let v = self.eval_inner(z)?;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow)
        }
    }

    fn eval_inner(&self, z: &[Complex64]) -> Result<Complex64> {
        match self {
            Expr::Var(j) => z.get(j - 1).copied().ok_or(Error::DimensionMismatch {
                expected: *j,
                got: z.len(),
            }),
            Expr::Const(c) => Ok(*c),
            Expr::Add(a, b) => Ok(a.eval_inner(z)? + b.eval_inner(z)?),
            Expr::Sub(a, b) => Ok(a.eval_inner(z)? - b.eval_inner(z)?),
            Expr::Mul(a, b) => Ok(a.eval_inner(z)? * b.eval_inner(z)?),
            Expr::Div(a, b) => {
                let num = a.eval_inner(z)?;
                let den = b.eval_inner(z)?;
                if den.re == 0.0 && den.im == 0.0 {
                    return Err(Error::DivisionByZero);
                }
                Ok(num / den)
            }
            Expr::Neg(a) => Ok(-a.eval_inner(z)?),
            Expr::Exp(a) => {
                let w = a.eval_inner(z)?;
                if w.re > LN_F64_MAX {
                    return Err(Error::Overflow);
                }
                Ok(w.exp())
            }
            Expr::IntPow(a, k) => {
                let base = a.eval_inner(z)?;
                if *k < 0 && base.re == 0.0 && base.im == 0.0 {
                    return Err(Error::DivisionByZero);
                }
                Ok(base.powi(*k))
            }
        }
    }

    /// Evaluation in the log-magnitude domain. For `exp(g)` this returns
    /// `(Re g, Im g wrapped)` without ever forming `exp(g)`, so the modulus
    /// of `exp(exp(z))` is exact even where `eval` overflows.
    pub fn eval_logmag(&self, z: &[Complex64]) -> Result<LogMag> {
        match self {
            Expr::Var(j) => {
                let v = z.get(j - 1).copied().ok_or(Error::DimensionMismatch {
                    expected: *j,
                    got: z.len(),
                })?;
                Ok(LogMag::from_complex(v))
            }
            Expr::Const(c) => Ok(LogMag::from_complex(*c)),
            Expr::Add(a, b) => a.eval_logmag(z)?.add_signed(b.eval_logmag(z)?, 1.0),
            Expr::Sub(a, b) => a.eval_logmag(z)?.add_signed(b.eval_logmag(z)?, -1.0),
            Expr::Mul(a, b) => Ok(a.eval_logmag(z)?.mul(b.eval_logmag(z)?)),
            Expr::Div(a, b) => a.eval_logmag(z)?.div(b.eval_logmag(z)?),
            Expr::Neg(a) => Ok(a.eval_logmag(z)?.neg()),
            Expr::Exp(a) => {
                let inner = a.eval_logmag(z)?;
                let w = inner.to_complex().ok_or(Error::Overflow)?;
                Ok(LogMag {
                    log_abs: w.re,
                    phase: wrap_phase(w.im),
                })
            }
            Expr::IntPow(a, k) => a.eval_logmag(z)?.powi(*k),
        }
    }

    /// Substitute `z_j -> z_j + c_j` throughout, so that
    /// `shift(e, c).eval(z) == e.eval(z + c)`.
    pub fn shift(&self, c: &[Complex64]) -> Expr {
        match self {
            Expr::Var(j) => {
                let off = c.get(j - 1).copied().unwrap_or(Complex64::new(0.0, 0.0));
                if off.re == 0.0 && off.im == 0.0 {
                    Expr::Var(*j)
                } else {
                    Expr::add(Expr::Var(*j), Expr::Const(off))
                }
            }
            Expr::Const(v) => Expr::Const(*v),
            Expr::Add(a, b) => Expr::add(a.shift(c), b.shift(c)),
            Expr::Sub(a, b) => Expr::sub(a.shift(c), b.shift(c)),
            Expr::Mul(a, b) => Expr::mul(a.shift(c), b.shift(c)),
            Expr::Div(a, b) => Expr::div(a.shift(c), b.shift(c)),
            Expr::Neg(a) => Expr::neg(a.shift(c)),
            Expr::Exp(a) => Expr::exp(a.shift(c)),
            Expr::IntPow(a, k) => Expr::int_pow(a.shift(c), *k),
        }
    }

    /// Split into a holomorphic-safe numerator/denominator pair so that
    /// `self = num/den` pointwise. Fails when a division sits inside `exp`,
    /// which has no such decomposition.
    pub fn to_ratio(&self) -> Result<(Expr, Expr)> {
        match self {
            Expr::Var(_) | Expr::Const(_) => Ok((self.clone(), Expr::one())),
            Expr::Add(a, b) => {
                let (na, da) = a.to_ratio()?;
                let (nb, db) = b.to_ratio()?;
                Ok((
                    Expr::add(Expr::mul(na, db.clone()), Expr::mul(nb, da.clone())),
                    Expr::mul(da, db),
                ))
            }
            Expr::Sub(a, b) => {
                let (na, da) = a.to_ratio()?;
                let (nb, db) = b.to_ratio()?;
                Ok((
                    Expr::sub(Expr::mul(na, db.clone()), Expr::mul(nb, da.clone())),
                    Expr::mul(da, db),
                ))
            }
            Expr::Mul(a, b) => {
                let (na, da) = a.to_ratio()?;
                let (nb, db) = b.to_ratio()?;
                Ok((Expr::mul(na, nb), Expr::mul(da, db)))
            }
            Expr::Div(a, b) => {
                let (na, da) = a.to_ratio()?;
                let (nb, db) = b.to_ratio()?;
                Ok((Expr::mul(na, db), Expr::mul(da, nb)))
            }
            Expr::Neg(a) => {
                let (na, da) = a.to_ratio()?;
                Ok((Expr::neg(na), da))
            }
            Expr::Exp(a) => {
                if a.is_holomorphic_safe() {
                    Ok((self.clone(), Expr::one()))
                } else {
                    Err(Error::InvalidMap(
                        "exp of a non-entire argument has no rational decomposition".into(),
                    ))
                }
            }
            Expr::IntPow(a, k) => {
                let (na, da) = a.to_ratio()?;
                if *k >= 0 {
                    Ok((Expr::int_pow(na, *k), Expr::int_pow(da, *k)))
                } else {
                    Ok((Expr::int_pow(da, -*k), Expr::int_pow(na, -*k)))
                }
            }
        }
    }

    /// Symbolic partial derivative with respect to `z_j` (1-based).
    pub fn derivative(&self, j: usize) -> Expr {
        match self {
            Expr::Var(i) => {
                if *i == j {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Const(_) => Expr::zero(),
            Expr::Add(a, b) => Expr::add(a.derivative(j), b.derivative(j)),
            Expr::Sub(a, b) => Expr::sub(a.derivative(j), b.derivative(j)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.derivative(j), (**b).clone()),
                Expr::mul((**a).clone(), b.derivative(j)),
            ),
            Expr::Div(a, b) => {
                // (u'v - uv') / v^2
                let num = Expr::sub(
                    Expr::mul(a.derivative(j), (**b).clone()),
                    Expr::mul((**a).clone(), b.derivative(j)),
                );
                Expr::div(num, Expr::int_pow((**b).clone(), 2))
            }
            Expr::Neg(a) => Expr::neg(a.derivative(j)),
            Expr::Exp(a) => Expr::mul(a.derivative(j), Expr::exp((**a).clone())),
            Expr::IntPow(a, k) => Expr::mul(
                Expr::mul(Expr::real(f64::from(*k)), Expr::int_pow((**a).clone(), k - 1)),
                a.derivative(j),
            ),
        }
    }
}

fn fmt_complex(c: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.im == 0.0 {
        if c.re < 0.0 {
            write!(f, "({})", c.re)
        } else {
            write!(f, "{}", c.re)
        }
    } else if c.re == 0.0 {
        if c.im < 0.0 {
            write!(f, "({}i)", c.im)
        } else {
            write!(f, "{}i", c.im)
        }
    } else {
        write!(
            f,
            "({}{}{}i)",
            c.re,
            if c.im < 0.0 { "-" } else { "+" },
            c.im.abs()
        )
    }
}

impl fmt::Display for Expr {
    /// Renders a string the parser accepts back. Conservative with
    /// parentheses; round-tripping is covered by property tests.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(j) => write!(f, "z{j}"),
            Expr::Const(c) => fmt_complex(*c, f),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::IntPow(a, k) => {
                if *k < 0 {
                    write!(f, "({a})^({k})")
                } else {
                    write!(f, "({a})^{k}")
                }
            }
        }
    }
}

/// A meromorphic map `f = f1/f0 : C^n -> P^1` given by a pair of
/// holomorphic-safe components with `f0` not identically zero.
#[derive(Debug)]
pub struct MeromorphicMap {
    n: usize,
    f0: Expr,
    f1: Expr,
    /// `f0(0) != 0` and `f1(0) != 0`, recorded at construction.
    base_regular: bool,
    pub(crate) divisor_cache: crate::nevanlinna::divisor::DivisorCache,
}

impl Clone for MeromorphicMap {
    fn clone(&self) -> Self {
        MeromorphicMap {
            n: self.n,
            f0: self.f0.clone(),
            f1: self.f1.clone(),
            base_regular: self.base_regular,
            divisor_cache: Default::default(),
        }
    }
}

impl PartialEq for MeromorphicMap {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.f0 == other.f0 && self.f1 == other.f1
    }
}

impl MeromorphicMap {
    pub fn new(n: usize, f0: Expr, f1: Expr) -> Result<Self> {
        if n == 0 || n > 9 {
            return Err(Error::InvalidMap(format!("dimension {n} outside 1..=9")));
        }
        if !f0.is_holomorphic_safe() || !f1.is_holomorphic_safe() {
            return Err(Error::InvalidMap(
                "components must be holomorphic-safe (no division, no negative powers)".into(),
            ));
        }
        let max_var = f0.max_var().max(f1.max_var());
        if max_var > n {
            return Err(Error::InvalidMap(format!(
                "component uses z{max_var} but dimension is {n}"
            )));
        }
        // Probabilistic non-degeneracy check for f0 (the paper's f0 != 0).
        if identically_zero(&f0, n) {
            return Err(Error::InvalidMap("f0 is identically zero on a sampled grid".into()));
        }
        let origin = vec![Complex64::new(0.0, 0.0); n];
        let base_regular = match (f0.eval_logmag(&origin), f1.eval_logmag(&origin)) {
            (Ok(a), Ok(b)) => !a.is_zero() && !b.is_zero(),
            _ => false,
        };
        Ok(MeromorphicMap {
            n,
            f0,
            f1,
            base_regular,
            divisor_cache: Default::default(),
        })
    }

    /// An entire function `f1` viewed as the map `(1, f1)`.
    pub fn entire(n: usize, f1: Expr) -> Result<Self> {
        MeromorphicMap::new(n, Expr::one(), f1)
    }

    /// Build a map from a single (possibly rational) expression by
    /// decomposing it into a holomorphic numerator/denominator pair.
    pub fn from_expr(n: usize, e: &Expr) -> Result<Self> {
        let (num, den) = e.to_ratio()?;
        MeromorphicMap::new(n, den, num)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn denominator(&self) -> &Expr {
        &self.f0
    }

    pub fn numerator(&self) -> &Expr {
        &self.f1
    }

    pub fn is_base_regular(&self) -> bool {
        self.base_regular
    }

    /// Value `f(z) = f1(z)/f0(z)`.
    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        let num = self.f1.eval(z)?;
        let den = self.f0.eval(z)?;
        if den.re == 0.0 && den.im == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let v = num / den;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow)
        }
    }

    /// `log|f(z)|` with the two components evaluated in the log domain.
    pub fn eval_logmag(&self, z: &[Complex64]) -> Result<LogMag> {
        self.f1.eval_logmag(z)?.div(self.f0.eval_logmag(z)?)
    }

    /// The composed map `f(z + c)`, components shifted symbolically.
    pub fn shifted(&self, c: &[Complex64]) -> Result<Self> {
        MeromorphicMap::new(self.n, self.f0.shift(c), self.f1.shift(c))
    }

    /// The map `f - a` as a pair `(f0, f1 - a*f0)`.
    pub fn minus_constant(&self, a: Complex64) -> Result<Self> {
        let g = if a.re == 0.0 && a.im == 0.0 {
            self.f1.clone()
        } else {
            Expr::sub(self.f1.clone(), Expr::mul(Expr::Const(a), self.f0.clone()))
        };
        MeromorphicMap::new(self.n, self.f0.clone(), g)
    }

    /// The map `f^2` as `(f0^2, f1^2)`.
    pub fn squared(&self) -> Result<Self> {
        MeromorphicMap::new(
            self.n,
            Expr::int_pow(self.f0.clone(), 2),
            Expr::int_pow(self.f1.clone(), 2),
        )
    }
}

/// Deterministic pseudo-random sample points used by the probabilistic
/// identity checks (f0 != 0, delta f != 0, common-factor tests).
pub(crate) fn probe_points(n: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                .collect()
        })
        .collect()
}

pub(crate) fn identically_zero(e: &Expr, n: usize) -> bool {
    let pts = probe_points(n, 24, 0x5eed_cafe);
    pts.iter().all(|z| match e.eval_logmag(z) {
        Ok(lm) => lm.is_zero() || lm.log_abs < -60.0,
        Err(Error::IndeterminatePhase) => true,
        Err(_) => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_simple_roots() {
        // z1^2 + 1 at z = i
        let e = Expr::add(Expr::int_pow(Expr::var(1), 2), Expr::one());
        let v = e.eval(&[c(0.0, 1.0)]).unwrap();
        assert!(v.norm() < 1e-15);

        // exp(z1) at 0
        let e = Expr::exp(Expr::var(1));
        assert_eq!(e.eval(&[c(0.0, 0.0)]).unwrap(), c(1.0, 0.0));

        // z1*z2 - 2 at (1+i, 1-i)
        let e = Expr::sub(Expr::mul(Expr::var(1), Expr::var(2)), Expr::real(2.0));
        let v = e.eval(&[c(1.0, 1.0), c(1.0, -1.0)]).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn eval_division_by_zero() {
        let e = Expr::div(Expr::one(), Expr::var(1));
        assert_eq!(e.eval(&[c(0.0, 0.0)]), Err(Error::DivisionByZero));
    }

    #[test]
    fn eval_overflow_switches_to_logmag() {
        // exp(exp(z1)) at z = 20 overflows eval but not eval_logmag.
        let e = Expr::exp(Expr::exp(Expr::var(1)));
        assert_eq!(e.eval(&[c(20.0, 0.0)]), Err(Error::Overflow));
        let lm = e.eval_logmag(&[c(20.0, 0.0)]).unwrap();
        // log|exp(exp(20))| = e^20
        let expected = 20f64.exp();
        assert!((lm.log_abs - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn logmag_exp_phase() {
        // exp(z1) at i*pi: modulus 1, phase pi.
        let e = Expr::exp(Expr::var(1));
        let lm = e.eval_logmag(&[c(0.0, std::f64::consts::PI)]).unwrap();
        assert!(lm.log_abs.abs() < 1e-15);
        assert!((lm.phase - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn logmag_rescaled_addition() {
        // exp(z1) + exp(z1) at 1000: log_abs = 1000 + ln 2.
        let e = Expr::add(Expr::exp(Expr::var(1)), Expr::exp(Expr::var(1)));
        let lm = e.eval_logmag(&[c(1000.0, 0.0)]).unwrap();
        assert!((lm.log_abs - (1000.0 + std::f64::consts::LN_2)).abs() < 1e-10);
    }

    #[test]
    fn logmag_indeterminate_phase() {
        let e = Expr::add(Expr::zero(), Expr::zero());
        // constant folding collapses this; build the node by hand
        let e = match e {
            Expr::Const(_) => Expr::Add(Arc::new(Expr::zero()), Arc::new(Expr::zero())),
            other => other,
        };
        assert_eq!(e.eval_logmag(&[]), Err(Error::IndeterminatePhase));
    }

    #[test]
    fn shift_substitutes() {
        // (z1+1)^2 = shift(z1^2, 1)
        let e = Expr::int_pow(Expr::var(1), 2);
        let s = e.shift(&[c(1.0, 0.0)]);
        for x in [c(0.3, -0.2), c(-1.0, 2.0)] {
            let lhs = s.eval(&[x]).unwrap();
            let rhs = e.eval(&[x + c(1.0, 0.0)]).unwrap();
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn derivative_rules() {
        // d/dz1 z1^3 = 3 z1^2
        let e = Expr::int_pow(Expr::var(1), 3);
        let d = e.derivative(1);
        let z = [c(1.3, -0.4)];
        let expect = 3.0 * z[0] * z[0];
        assert!((d.eval(&z).unwrap() - expect).norm() < 1e-13);

        // d/dz2 exp(z1 z2) = z1 exp(z1 z2)
        let e = Expr::exp(Expr::mul(Expr::var(1), Expr::var(2)));
        let d = e.derivative(2);
        let z = [c(0.7, 0.1), c(-0.2, 0.5)];
        let expect = z[0] * (z[0] * z[1]).exp();
        assert!((d.eval(&z).unwrap() - expect).norm() < 1e-13);

        // d/dz1 (z1-1) exp(z1) = z1 exp(z1)
        let e = Expr::mul(Expr::sub(Expr::var(1), Expr::one()), Expr::exp(Expr::var(1)));
        let d = e.derivative(1);
        let z = [c(0.4, 0.9)];
        let expect = z[0] * z[0].exp();
        assert!((d.eval(&z).unwrap() - expect).norm() < 1e-13);
    }

    #[test]
    fn map_requires_holomorphic_safe() {
        let bad = Expr::div(Expr::one(), Expr::var(1));
        assert!(MeromorphicMap::new(1, Expr::one(), bad).is_err());
        let bad = Expr::int_pow(Expr::var(1), -2);
        assert!(MeromorphicMap::new(1, bad, Expr::one()).is_err());
    }

    #[test]
    fn map_rejects_zero_denominator() {
        assert!(MeromorphicMap::new(1, Expr::zero(), Expr::one()).is_err());
    }

    #[test]
    fn base_regularity_flag() {
        let f = MeromorphicMap::new(1, Expr::one(), Expr::var(1)).unwrap();
        assert!(!f.is_base_regular()); // f1(0) = 0
        let f = MeromorphicMap::new(
            1,
            Expr::one(),
            Expr::sub(Expr::var(1), Expr::real(0.5)),
        )
        .unwrap();
        assert!(f.is_base_regular());
    }
}
