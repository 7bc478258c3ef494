//! Truncated power series at 0 with exact or floating complex coefficients.
//!
//! A [`TaylorSeries`] stores `a_0..a_K` for an explicit order `K`. The scalar
//! kind is fixed at construction: [`Cq`] (a pair of big rationals) or
//! [`C64`]. Binary operations reject mixed kinds and truncate to the smaller
//! order.
//!
//! ```
//! use circlecalc::series::TaylorSeries;
//!
//! // exp(z + z^2/2 + z^4/4) = 1 + z + z^2 + 2/3 z^3 + 2/3 z^4 + ...
//! let h = TaylorSeries::from_ratios(&[(0, 1), (1, 1), (1, 2), (0, 1), (1, 4)]);
//! let f = h.exp().unwrap();
//! let expected = TaylorSeries::from_ratios(&[(1, 1), (1, 1), (1, 1), (2, 3), (2, 3)]);
//! assert_eq!(f, expected);
//! ```

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::Generators;

fn times_int<T: Scalar>(a: &T, n: i64) -> T {
    a.clone() * T::from_ratio(n, 1)
}

/// Exact complex scalar: real and imaginary parts are big rationals.
pub type Cq = Complex<BigRational>;
/// Floating complex scalar.
pub type C64 = Complex64;

/// Coefficient tolerance used when comparing float series.
pub const FLOAT_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SeriesError {
    #[error("scalar kinds differ ({0:?} vs {1:?})")]
    KindMismatch(ScalarKind, ScalarKind),
    #[error("constant term must be {expected}, found {found}")]
    ConstantTerm { expected: &'static str, found: String },
    #[error("N must be at least 1")]
    ZeroIndex,
    #[error("bad series json: {0}")]
    Json(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Rational,
    Float,
}

/// Field operations shared by both scalar kinds.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_ratio(n: i64, d: i64) -> Self;
    fn to_c64(&self) -> C64;
}

impl Scalar for Cq {
    fn from_ratio(n: i64, d: i64) -> Self {
        Complex::new(BigRational::new(n.into(), d.into()), BigRational::zero())
    }
    fn to_c64(&self) -> C64 {
        C64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }
}

impl Scalar for C64 {
    fn from_ratio(n: i64, d: i64) -> Self {
        C64::new(n as f64 / d as f64, 0.0)
    }
    fn to_c64(&self) -> C64 {
        *self
    }
}


pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // to_f64 gives up on huge numerators/denominators; scale down first.
        let n = r.numer().bits() as i64;
        let d = r.denom().bits() as i64;
        let shift = (n - d).clamp(-1000, 1000);
        let scaled = if shift >= 0 {
            r / BigRational::from_integer(BigInt::one() << shift as usize)
        } else {
            r * BigRational::from_integer(BigInt::one() << (-shift) as usize)
        };
        scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
    })
}

/// Real rational scalar as an exact complex number.
pub fn cq(n: i64, d: i64) -> Cq {
    Cq::from_ratio(n, d)
}

/// Exact complex scalar from a big rational real part.
pub fn cq_real(r: BigRational) -> Cq {
    Complex::new(r, BigRational::zero())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coeffs {
    Rational(Vec<Cq>),
    Float(Vec<C64>),
}

/// Truncated power series `a_0 + a_1 z + ... + a_K z^K`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorSeries {
    coeffs: Coeffs,
}

macro_rules! both {
    ($s:expr, $v:ident => $body:expr) => {
        match &$s.coeffs {
            Coeffs::Rational($v) => TaylorSeries::rational($body),
            Coeffs::Float($v) => TaylorSeries::float($body),
        }
    };
}

macro_rules! both_try {
    ($s:expr, $v:ident => $body:expr) => {
        match &$s.coeffs {
            Coeffs::Rational($v) => Ok(TaylorSeries::rational($body?)),
            Coeffs::Float($v) => Ok(TaylorSeries::float($body?)),
        }
    };
}

macro_rules! pair_try {
    ($a:expr, $b:expr, ($x:ident, $y:ident) => $body:expr) => {
        match (&$a.coeffs, &$b.coeffs) {
            (Coeffs::Rational($x), Coeffs::Rational($y)) => Ok(TaylorSeries::rational($body)),
            (Coeffs::Float($x), Coeffs::Float($y)) => Ok(TaylorSeries::float($body)),
            _ => Err(SeriesError::KindMismatch($a.kind(), $b.kind())),
        }
    };
}

impl TaylorSeries {
    pub fn rational(coeffs: Vec<Cq>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least a constant term");
        TaylorSeries { coeffs: Coeffs::Rational(coeffs) }
    }

    pub fn float(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least a constant term");
        TaylorSeries { coeffs: Coeffs::Float(coeffs) }
    }

    /// Rational series with real coefficients `n/d`.
    pub fn from_ratios(c: &[(i64, i64)]) -> Self {
        Self::rational(c.iter().map(|&(n, d)| cq(n, d)).collect())
    }

    /// Float series with real coefficients.
    pub fn from_reals(c: &[f64]) -> Self {
        Self::float(c.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zero(kind: ScalarKind, order: usize) -> Self {
        match kind {
            ScalarKind::Rational => Self::rational(vec![Cq::zero(); order + 1]),
            ScalarKind::Float => Self::float(vec![C64::zero(); order + 1]),
        }
    }

    pub fn one(kind: ScalarKind, order: usize) -> Self {
        let mut s = Self::zero(kind, order);
        match &mut s.coeffs {
            Coeffs::Rational(v) => v[0] = Cq::one(),
            Coeffs::Float(v) => v[0] = C64::one(),
        }
        s
    }

    pub fn order(&self) -> usize {
        self.len() - 1
    }

    fn len(&self) -> usize {
        match &self.coeffs {
            Coeffs::Rational(v) => v.len(),
            Coeffs::Float(v) => v.len(),
        }
    }

    pub fn kind(&self) -> ScalarKind {
        match &self.coeffs {
            Coeffs::Rational(_) => ScalarKind::Rational,
            Coeffs::Float(_) => ScalarKind::Float,
        }
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.coeffs
    }

    pub fn as_rational(&self) -> Option<&[Cq]> {
        match &self.coeffs {
            Coeffs::Rational(v) => Some(v),
            Coeffs::Float(_) => None,
        }
    }

    pub fn as_float(&self) -> Option<&[C64]> {
        match &self.coeffs {
            Coeffs::Float(v) => Some(v),
            Coeffs::Rational(_) => None,
        }
    }

    /// Coefficient `a_n` as a float; zero beyond the order.
    pub fn coeff(&self, n: usize) -> C64 {
        match &self.coeffs {
            Coeffs::Rational(v) => v.get(n).map(Scalar::to_c64).unwrap_or_default(),
            Coeffs::Float(v) => v.get(n).copied().unwrap_or_default(),
        }
    }

    pub fn to_float(&self) -> TaylorSeries {
        self.clone().into_float_kind()
    }

    fn into_float_kind(self) -> TaylorSeries {
        match self.coeffs {
            Coeffs::Rational(v) => TaylorSeries::float(v.iter().map(Scalar::to_c64).collect()),
            Coeffs::Float(_) => self,
        }
    }

    /// Keep coefficients up to `order` (pads with zeros when longer).
    pub fn truncate(&self, order: usize) -> TaylorSeries {
        both!(self, v => resize(v, order + 1))
    }

    pub fn add(&self, other: &TaylorSeries) -> Result<TaylorSeries, SeriesError> {
        pair_try!(self, other, (a, b) => zip_with(a, b, |x, y| x + y))
    }

    pub fn sub(&self, other: &TaylorSeries) -> Result<TaylorSeries, SeriesError> {
        pair_try!(self, other, (a, b) => zip_with(a, b, |x, y| x - y))
    }

    pub fn neg(&self) -> TaylorSeries {
        both!(self, v => v.iter().cloned().map(|x| -x).collect())
    }

    /// Multiply every coefficient by the real rational `n/d`.
    pub fn scale_ratio(&self, n: i64, d: i64) -> TaylorSeries {
        match &self.coeffs {
            Coeffs::Rational(v) => {
                let c = cq(n, d);
                TaylorSeries::rational(v.iter().map(|x| x.clone() * c.clone()).collect())
            }
            Coeffs::Float(v) => {
                let c = n as f64 / d as f64;
                TaylorSeries::float(v.iter().map(|x| x * c).collect())
            }
        }
    }

    /// Multiply every coefficient by a float scalar; the result is float.
    pub fn scale_c64(&self, c: C64) -> TaylorSeries {
        let f = self.to_float();
        TaylorSeries::float(f.as_float().unwrap().iter().map(|x| x * c).collect())
    }

    /// Cauchy product truncated to the smaller order.
    pub fn mul(&self, other: &TaylorSeries) -> Result<TaylorSeries, SeriesError> {
        pair_try!(self, other, (a, b) => mul_g(a, b))
    }

    /// `f^n` for `n >= 0` by repeated squaring.
    pub fn pow(&self, mut n: u64) -> TaylorSeries {
        let mut base = self.clone();
        let mut acc = TaylorSeries::one(self.kind(), self.order());
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base).unwrap();
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base).unwrap();
            }
        }
        acc
    }

    /// `exp(h)` for `h(0) = 0` via `n g_n = sum_k k h_k g_{n-k}`.
    pub fn exp(&self) -> Result<TaylorSeries, SeriesError> {
        self.require_constant(false)?;
        both_try!(self, v => Ok::<_, SeriesError>(exp_g(v)))
    }

    /// Inverse of [`TaylorSeries::exp`] on series with `f(0) = 1`.
    pub fn log(&self) -> Result<TaylorSeries, SeriesError> {
        self.require_constant(true)?;
        both_try!(self, v => Ok::<_, SeriesError>(log_g(v)))
    }

    /// Reciprocal of a series with `f(0) = 1`.
    pub fn recip(&self) -> Result<TaylorSeries, SeriesError> {
        self.require_constant(true)?;
        both_try!(self, v => Ok::<_, SeriesError>(recip_g(v)))
    }

    /// `f(z^N)` at the same order.
    pub fn compose_zn(&self, n: u64) -> TaylorSeries {
        assert!(n >= 1, "compose_zn needs N >= 1");
        both!(self, v => compose_g(v, n as usize))
    }

    /// `f(c z)` for a scalar `c` of the same kind.
    pub fn scale_arg(&self, c: &TaylorScalar) -> Result<TaylorSeries, SeriesError> {
        match (&self.coeffs, c) {
            (Coeffs::Rational(v), TaylorScalar::Rational(c)) => {
                let mut p = Cq::one();
                let mut out = Vec::with_capacity(v.len());
                for a in v {
                    out.push(a.clone() * p.clone());
                    p = p * c.clone();
                }
                Ok(TaylorSeries::rational(out))
            }
            (Coeffs::Float(v), TaylorScalar::Float(c)) => {
                let mut p = C64::one();
                let mut out = Vec::with_capacity(v.len());
                for a in v {
                    out.push(a * p);
                    p *= c;
                }
                Ok(TaylorSeries::float(out))
            }
            _ => Err(SeriesError::KindMismatch(self.kind(), c.kind())),
        }
    }

    /// `Tr_N h = N * sum_{N | n} a_n z^n`, indices kept in place.
    pub fn trace_n(&self, n: u64) -> TaylorSeries {
        assert!(n >= 1, "trace_n needs N >= 1");
        let n = n as usize;
        both!(self, v => v
            .iter()
            .enumerate()
            .map(|(i, a)| if i % n == 0 { times_int(a, n as i64) } else { Zero::zero() })
            .collect())
    }

    /// `prod_{zeta^N = 1} f(zeta z)`, computed as `exp(Tr_N log f)`.
    pub fn mult_trace(&self, n: u64) -> Result<TaylorSeries, SeriesError> {
        self.log()?.trace_n(n).exp()
    }

    /// Largest coefficient gap between `f(z^N)^N` and `prod f(zeta z)`.
    pub fn feq_residual(&self, n: u64) -> Result<f64, SeriesError> {
        let lhs = self.compose_zn(n).pow(n);
        let rhs = self.mult_trace(n)?;
        lhs.max_abs_diff(&rhs)
    }

    /// `prod_{N in S, N <= K} alpha(z^N)`; exact at order `K`.
    pub fn psi_s_product(&self, s: &Generators) -> Result<TaylorSeries, SeriesError> {
        self.require_constant(true)?;
        let k = self.order() as u64;
        let mut acc = TaylorSeries::one(self.kind(), self.order());
        for n in s.enumerate(k.max(1)) {
            acc = acc.mul(&self.compose_zn(n))?;
        }
        Ok(acc)
    }

    /// `exp(sum_d (-1)^{|d|} log f(z^{prod N_i^{d_i}}))`.
    pub fn phi_s(&self, s: &Generators) -> Result<TaylorSeries, SeriesError> {
        let l = self.log()?;
        let mut acc = TaylorSeries::zero(self.kind(), self.order());
        for (sign, n) in s.subset_products() {
            let t = l.compose_zn(n);
            acc = if sign > 0 { acc.add(&t)? } else { acc.sub(&t)? };
        }
        acc.exp()
    }

    /// Delete log-coefficients at indices divisible by some generator.
    pub fn omega_s(&self, s: &Generators) -> Result<TaylorSeries, SeriesError> {
        let l = self.log()?;
        let gens = s.as_slice();
        let kill = |i: usize| gens.iter().any(|&g| i % g as usize == 0);
        let l = both!(l, v => v.iter().enumerate().map(|(i, a)| if kill(i) { Zero::zero() } else { a.clone() }).collect());
        l.exp()
    }

    /// Maximum absolute coefficient difference up to the common order.
    pub fn max_abs_diff(&self, other: &TaylorSeries) -> Result<f64, SeriesError> {
        match (&self.coeffs, &other.coeffs) {
            (Coeffs::Rational(a), Coeffs::Rational(b)) => Ok(a
                .iter()
                .zip(b)
                .map(|(x, y)| (x.clone() - y.clone()).to_c64().norm())
                .fold(0.0, f64::max)),
            (Coeffs::Float(a), Coeffs::Float(b)) => {
                Ok(a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
            }
            _ => Err(SeriesError::KindMismatch(self.kind(), other.kind())),
        }
    }

    /// Exact equality for rational series, `FLOAT_TOL` for float ones, up
    /// to the common order.
    pub fn approx_eq(&self, other: &TaylorSeries) -> bool {
        match (&self.coeffs, &other.coeffs) {
            (Coeffs::Rational(a), Coeffs::Rational(b)) => a.iter().zip(b).all(|(x, y)| x == y),
            _ => self
                .to_float()
                .max_abs_diff(&other.to_float())
                .map(|d| d <= FLOAT_TOL)
                .unwrap_or(false),
        }
    }

    /// Evaluate the truncated polynomial at a complex point.
    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::zero();
        for i in (0..self.len()).rev() {
            acc = acc * z + self.coeff(i);
        }
        acc
    }

    fn require_constant(&self, one: bool) -> Result<(), SeriesError> {
        let ok = match &self.coeffs {
            Coeffs::Rational(v) => {
                if one {
                    v[0] == Cq::one()
                } else {
                    v[0].is_zero()
                }
            }
            Coeffs::Float(v) => {
                let target = if one { 1.0 } else { 0.0 };
                (v[0] - target).norm() <= FLOAT_TOL
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SeriesError::ConstantTerm {
                expected: if one { "1" } else { "0" },
                found: format!("{}", self.coeff(0)),
            })
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SeriesJson::from(self)).expect("series json")
    }

    pub fn from_json(s: &str) -> Result<TaylorSeries, SeriesError> {
        let j: SeriesJson = serde_json::from_str(s).map_err(|e| SeriesError::Json(e.to_string()))?;
        j.try_into()
    }
}

/// A scalar tagged with its kind, for arguments like `f(cz)`.
#[derive(Clone, Debug, PartialEq)]
pub enum TaylorScalar {
    Rational(Cq),
    Float(C64),
}

impl TaylorScalar {
    pub fn kind(&self) -> ScalarKind {
        match self {
            TaylorScalar::Rational(_) => ScalarKind::Rational,
            TaylorScalar::Float(_) => ScalarKind::Float,
        }
    }
}

fn resize<S: Scalar>(v: &[S], len: usize) -> Vec<S> {
    let mut out: Vec<S> = v.iter().take(len).cloned().collect();
    out.resize(len, S::zero());
    out
}

fn zip_with<S: Scalar>(a: &[S], b: &[S], f: impl Fn(S, S) -> S) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| f(x.clone(), y.clone())).collect()
}

fn mul_g<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let n = a.len().min(b.len());
    let mut out = vec![S::zero(); n];
    for (i, x) in a.iter().take(n).enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().take(n - i).enumerate() {
            if y.is_zero() {
                continue;
            }
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

fn exp_g<S: Scalar>(h: &[S]) -> Vec<S> {
    let mut g = vec![S::zero(); h.len()];
    g[0] = S::one();
    for n in 1..h.len() {
        let mut acc = S::zero();
        for k in 1..=n {
            if h[k].is_zero() || g[n - k].is_zero() {
                continue;
            }
            acc = acc + S::from_ratio(k as i64, 1) * h[k].clone() * g[n - k].clone();
        }
        g[n] = acc / S::from_ratio(n as i64, 1);
    }
    g
}

fn log_g<S: Scalar>(f: &[S]) -> Vec<S> {
    let mut h = vec![S::zero(); f.len()];
    for n in 1..f.len() {
        let mut acc = S::zero();
        for k in 1..n {
            if h[k].is_zero() || f[n - k].is_zero() {
                continue;
            }
            acc = acc + S::from_ratio(k as i64, 1) * h[k].clone() * f[n - k].clone();
        }
        h[n] = f[n].clone() - acc / S::from_ratio(n as i64, 1);
    }
    h
}

fn recip_g<S: Scalar>(f: &[S]) -> Vec<S> {
    let mut g = vec![S::zero(); f.len()];
    g[0] = S::one();
    for n in 1..f.len() {
        let mut acc = S::zero();
        for k in 1..=n {
            if f[k].is_zero() {
                continue;
            }
            acc = acc + f[k].clone() * g[n - k].clone();
        }
        g[n] = -acc;
    }
    g
}

fn compose_g<S: Scalar>(v: &[S], n: usize) -> Vec<S> {
    let mut out = vec![S::zero(); v.len()];
    for (i, a) in v.iter().enumerate() {
        match i.checked_mul(n) {
            Some(j) if j < v.len() => out[j] = a.clone(),
            _ => break,
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    order: usize,
    kind: ScalarKind,
    coeffs: Vec<[serde_json::Value; 2]>,
}

impl From<&TaylorSeries> for SeriesJson {
    fn from(s: &TaylorSeries) -> Self {
        let coeffs = match &s.coeffs {
            Coeffs::Rational(v) => v
                .iter()
                .map(|c| [c.re.to_string().into(), c.im.to_string().into()])
                .collect(),
            Coeffs::Float(v) => v.iter().map(|c| [c.re.into(), c.im.into()]).collect(),
        };
        SeriesJson { order: s.order(), kind: s.kind(), coeffs }
    }
}

impl TryFrom<SeriesJson> for TaylorSeries {
    type Error = SeriesError;

    fn try_from(j: SeriesJson) -> Result<Self, SeriesError> {
        if j.coeffs.len() != j.order + 1 {
            return Err(SeriesError::Json(format!(
                "order {} needs {} coefficients, got {}",
                j.order,
                j.order + 1,
                j.coeffs.len()
            )));
        }
        match j.kind {
            ScalarKind::Rational => {
                let parse = |v: &serde_json::Value| -> Result<BigRational, SeriesError> {
                    let s = match v {
                        serde_json::Value::String(s) => s.clone(),
                        serde_json::Value::Number(n) if n.is_i64() => n.to_string(),
                        other => return Err(SeriesError::Json(format!("expected \"p/q\", got {other}"))),
                    };
                    BigRational::from_str(&s).map_err(|e| SeriesError::Json(format!("{s}: {e}")))
                };
                let v = j
                    .coeffs
                    .iter()
                    .map(|[re, im]| Ok(Complex::new(parse(re)?, parse(im)?)))
                    .collect::<Result<Vec<_>, SeriesError>>()?;
                Ok(TaylorSeries::rational(v))
            }
            ScalarKind::Float => {
                let parse = |v: &serde_json::Value| {
                    v.as_f64().ok_or_else(|| SeriesError::Json(format!("expected number, got {v}")))
                };
                let v = j
                    .coeffs
                    .iter()
                    .map(|[re, im]| Ok(C64::new(parse(re)?, parse(im)?)))
                    .collect::<Result<Vec<_>, SeriesError>>()?;
                Ok(TaylorSeries::float(v))
            }
        }
    }
}

/// Index of the first coefficient whose denominator is divisible by `p`.
pub fn first_non_integral(v: &[Cq], p: u64) -> Option<usize> {
    let p = BigInt::from(p);
    v.iter().position(|c| {
        [&c.re, &c.im]
            .iter()
            .any(|r| !num_integer::Integer::gcd(r.denom(), &p).is_one())
    })
}

/// `true` when every coefficient is a real rational.
pub fn is_real(v: &[Cq]) -> bool {
    v.iter().all(|c| c.im.is_zero())
}

/// Absolute value of a rational as f64.
pub fn ratio_abs_f64(r: &BigRational) -> f64 {
    ratio_to_f64(&r.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(k: usize, order: usize) -> TaylorSeries {
        let mut c = vec![(0, 1); order + 1];
        c[k] = (1, 1);
        TaylorSeries::from_ratios(&c)
    }

    #[test]
    fn add_cancels() {
        let a = TaylorSeries::from_ratios(&[(1, 1), (1, 1)]);
        let b = TaylorSeries::from_ratios(&[(1, 1), (-1, 1)]);
        assert_eq!(a.add(&b).unwrap(), TaylorSeries::from_ratios(&[(2, 1), (0, 1)]));
    }

    #[test]
    fn add_truncates_to_common_order() {
        let a = TaylorSeries::from_ratios(&[(1, 1), (2, 1), (3, 1)]);
        let b = TaylorSeries::from_ratios(&[(1, 1), (1, 1), (0, 1)]);
        assert_eq!(a.add(&b).unwrap(), TaylorSeries::from_ratios(&[(2, 1), (3, 1), (3, 1)]));
        let c = TaylorSeries::from_ratios(&[(1, 1), (1, 1)]);
        assert_eq!(a.add(&c).unwrap().order(), 1);
    }

    #[test]
    fn mixed_kinds_rejected() {
        let a = TaylorSeries::from_ratios(&[(1, 1)]);
        let b = TaylorSeries::from_reals(&[1.0]);
        assert!(matches!(a.mul(&b), Err(SeriesError::KindMismatch(..))));
    }

    #[test]
    fn geometric_telescope() {
        let k = 6;
        let g = TaylorSeries::from_ratios(&vec![(1, 1); k + 1]);
        let mut one_minus_z = vec![(0, 1); k + 1];
        one_minus_z[0] = (1, 1);
        one_minus_z[1] = (-1, 1);
        let p = TaylorSeries::from_ratios(&one_minus_z).mul(&g).unwrap();
        assert_eq!(p, TaylorSeries::one(ScalarKind::Rational, k));
    }

    #[test]
    fn binomial_square() {
        let a = TaylorSeries::from_ratios(&[(1, 1), (1, 1), (0, 1)]);
        assert_eq!(a.pow(2), TaylorSeries::from_ratios(&[(1, 1), (2, 1), (1, 1)]));
    }

    #[test]
    fn exp_of_scalar_multiple() {
        let k = 8;
        let h = z(1, k).scale_ratio(3, 1);
        let f = h.exp().unwrap();
        let mut fact = 1i64;
        let mut pow = 1i64;
        for n in 0..=k {
            if n > 0 {
                fact *= n as i64;
                pow *= 3;
            }
            assert_eq!(f.as_rational().unwrap()[n], cq(pow, fact));
        }
    }

    #[test]
    fn exp_rejects_constant() {
        let h = TaylorSeries::from_ratios(&[(1, 1), (1, 1)]);
        assert!(h.exp().is_err());
        assert!(TaylorSeries::from_ratios(&[(2, 1)]).log().is_err());
    }

    #[test]
    fn log_of_linear_factor() {
        let k = 10;
        let f = TaylorSeries::from_ratios(&[(1, 1), (-2, 3)]).truncate(k);
        let l = f.log().unwrap();
        let mut pow = BigRational::one();
        for n in 1..=k {
            pow *= BigRational::new(2.into(), 3.into());
            let want = -pow.clone() / BigRational::from_integer((n as i64).into());
            assert_eq!(l.as_rational().unwrap()[n], cq_real(want));
        }
    }

    #[test]
    fn compose_examples() {
        let f = TaylorSeries::from_ratios(&[(1, 1), (1, 1), (0, 1), (0, 1)]);
        assert_eq!(f.compose_zn(3), TaylorSeries::from_ratios(&[(1, 1), (0, 1), (0, 1), (1, 1)]));
        let g = TaylorSeries::from_ratios(&[(1, 1), (1, 1), (1, 1), (0, 1)]);
        assert_eq!(g.compose_zn(2), TaylorSeries::from_ratios(&[(1, 1), (0, 1), (1, 1), (0, 1)]));
        assert_eq!(g.compose_zn(1), g);
    }

    #[test]
    fn trace_examples() {
        let all = TaylorSeries::from_ratios(&[(1, 1); 5]);
        assert_eq!(
            all.trace_n(2),
            TaylorSeries::from_ratios(&[(2, 1), (0, 1), (2, 1), (0, 1), (2, 1)])
        );
        assert_eq!(all.trace_n(1), all);
        assert_eq!(z(1, 4).trace_n(2), TaylorSeries::zero(ScalarKind::Rational, 4));
    }

    #[test]
    fn mult_trace_of_exponential_is_one() {
        let f = z(1, 12).scale_ratio(5, 7).exp().unwrap();
        assert_eq!(f.mult_trace(2).unwrap(), TaylorSeries::one(ScalarKind::Rational, 12));
    }

    #[test]
    fn feq_residual_examples() {
        let k = 40;
        for n in 2..5u64 {
            let mut c = vec![(0, 1); k + 1];
            let mut p = 1usize;
            while p <= k {
                c[p] = (3, 2);
                p *= n as usize;
            }
            let f = TaylorSeries::from_ratios(&c).exp().unwrap();
            assert_eq!(f.feq_residual(n).unwrap(), 0.0);
        }
        let e = z(1, 6).exp().unwrap();
        assert!(e.feq_residual(2).unwrap() >= 1.0 - 1e-15);
        assert_eq!(TaylorSeries::one(ScalarKind::Rational, 6).feq_residual(3).unwrap(), 0.0);
    }

    #[test]
    fn phi_s_single_generator_is_quotient() {
        let s = Generators::new(&[3]).unwrap();
        let f = TaylorSeries::from_ratios(&[(1, 1), (2, 1), (-1, 3), (5, 2), (0, 1), (1, 7), (1, 1)]);
        let want = f.mul(&f.compose_zn(3).recip().unwrap()).unwrap();
        assert_eq!(f.phi_s(&s).unwrap(), want);
    }

    #[test]
    fn phi_s_two_generators() {
        let s = Generators::new(&[2, 3]).unwrap();
        let f = TaylorSeries::from_ratios(&[(1, 1), (1, 2), (-1, 3), (5, 2), (1, 1), (1, 7), (1, 1), (2, 1)]);
        let num = f.compose_zn(6).mul(&f).unwrap();
        let den = f.compose_zn(2).mul(&f.compose_zn(3)).unwrap();
        assert_eq!(f.phi_s(&s).unwrap(), num.mul(&den.recip().unwrap()).unwrap());
    }

    #[test]
    fn omega_kills_divisible_indices() {
        let s = Generators::new(&[2]).unwrap();
        let f = z(2, 8).exp().unwrap();
        assert_eq!(f.omega_s(&s).unwrap(), TaylorSeries::one(ScalarKind::Rational, 8));
    }

    #[test]
    fn json_round_trip() {
        let f = TaylorSeries::from_ratios(&[(1, 1), (-2, 3), (7, 5)]);
        let back = TaylorSeries::from_json(&f.to_json()).unwrap();
        assert_eq!(f, back);
        assert!(f.to_json().contains("\"-2/3\""));
        let g = TaylorSeries::from_reals(&[1.0, 0.25]);
        assert_eq!(TaylorSeries::from_json(&g.to_json()).unwrap(), g);
        assert!(TaylorSeries::from_json(r#"{"order":2,"kind":"float","coeffs":[[1,0]]}"#).is_err());
    }

    #[test]
    fn huge_rationals_convert() {
        let big = BigRational::new(BigInt::from(3) << 2000usize, BigInt::from(7) << 1999usize);
        assert!((ratio_to_f64(&big) - 6.0 / 7.0).abs() < 1e-15);
    }
}
