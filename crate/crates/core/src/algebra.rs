//! The monoid generated by rotations `[zeta]` and the maps `phi_N(z) = z^N`,
//! its rational semigroup ring, and the actions of both on measures, series
//! and mass functions.
//!
//! Elements are kept in the normal form `[zeta] phi_N` with `zeta` a rational
//! angle in turns; composition follows `phi_N [zeta] = [zeta^N] phi_N`.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cyclo::frac;
use crate::fourier::{Angle, MeasureExpr};
use crate::mass::MassFunction;
use crate::series::{cq_real, Cq, TaylorScalar, TaylorSeries, C64};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AlgebraError {
    #[error("generator {0} is smaller than 2")]
    SmallGenerator(u64),
    #[error("generators {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("no generators given")]
    Empty,
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Series(#[from] crate::series::SeriesError),
}

/// Pairwise coprime generators `N_1, ..., N_s >= 2` of a multiplicative
/// monoid `S`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct Generators(Vec<u64>);

impl TryFrom<Vec<u64>> for Generators {
    type Error = AlgebraError;
    fn try_from(v: Vec<u64>) -> Result<Self, AlgebraError> {
        Generators::new(&v)
    }
}

impl From<Generators> for Vec<u64> {
    fn from(g: Generators) -> Vec<u64> {
        g.0
    }
}

impl Generators {
    pub fn new(gens: &[u64]) -> Result<Self, AlgebraError> {
        if gens.is_empty() {
            return Err(AlgebraError::Empty);
        }
        for (i, &a) in gens.iter().enumerate() {
            if a < 2 {
                return Err(AlgebraError::SmallGenerator(a));
            }
            for &b in &gens[i + 1..] {
                if a.gcd(&b) != 1 {
                    return Err(AlgebraError::NotCoprime(a, b));
                }
            }
        }
        Ok(Generators(gens.to_vec()))
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn largest(&self) -> u64 {
        *self.0.iter().max().unwrap()
    }

    /// All products `N_1^{v_1} ... N_s^{v_s} <= bound`, sorted.
    pub fn enumerate(&self, bound: u64) -> Vec<u64> {
        let mut out = vec![1u64];
        for &g in &self.0 {
            let mut next = Vec::new();
            for &m in &out {
                let mut x = m;
                loop {
                    next.push(x);
                    match x.checked_mul(g) {
                        Some(y) if y <= bound => x = y,
                        _ => break,
                    }
                }
            }
            out = next;
        }
        out.retain(|&m| m <= bound);
        out.sort_unstable();
        out
    }

    /// Pairs `((-1)^{|d|}, prod_{i in d} N_i)` over all subsets `d`.
    pub fn subset_products(&self) -> Vec<(i32, u64)> {
        let s = self.0.len();
        (0..1u32 << s)
            .map(|mask| {
                let mut sign = 1;
                let mut prod = 1u64;
                for (i, &g) in self.0.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        sign = -sign;
                        prod *= g;
                    }
                }
                (sign, prod)
            })
            .collect()
    }

    /// `sum_{N in S} 1/N = prod 1/(1 - 1/N_i)`.
    pub fn reciprocal_sum(&self) -> f64 {
        self.0.iter().map(|&g| 1.0 / (1.0 - 1.0 / g as f64)).product()
    }

    /// Upper bound for `sum_{N in S, N > cutoff} 1/N`.
    pub fn reciprocal_tail(&self, cutoff: u64) -> f64 {
        let head: f64 = self.enumerate(cutoff).iter().map(|&n| 1.0 / n as f64).sum();
        (self.reciprocal_sum() - head).max(0.0)
    }
}

/// Exact count of `S` up to `x` with the two analytic bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountBounds {
    pub x: f64,
    pub count: usize,
    pub lower: f64,
    pub upper: f64,
    pub a1: f64,
}

impl CountBounds {
    pub fn holds(&self) -> bool {
        self.lower <= self.count as f64 && self.count as f64 <= self.upper
    }
}

/// Constant `a_1` for `M(x) <= a_1 (1 + log^s x)`, fixed by the value at
/// `x = N_1^s` with `N_1` the largest generator.
pub fn calibrate_a1(s: &Generators) -> f64 {
    let rank = s.rank() as i32;
    let x0 = (s.largest() as f64).powi(rank);
    let count = s.enumerate(x0.round() as u64).len() as f64;
    count / (1.0 + x0.ln().powi(rank))
}

/// `|S ∩ [1, x]|` between `s^{-s} log_{N_1}^s x` and `a_1 (1 + log^s x)`.
pub fn count_bounds(s: &Generators, x: f64) -> CountBounds {
    assert!(x >= 1.0, "count_bounds needs x >= 1");
    let rank = s.rank() as i32;
    let count = s.enumerate(x.floor() as u64).len();
    let n1 = s.largest() as f64;
    let lower = (rank as f64).powi(-rank) * (x.ln() / n1.ln()).powi(rank);
    let a1 = calibrate_a1(s);
    let upper = a1 * (1.0 + x.ln().powi(rank));
    CountBounds { x, count, lower, upper, a1 }
}

/// `[e^{2 pi i rot}] phi_pow`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonoidElem {
    pub pow: u64,
    pub rot: Rational64,
}

impl MonoidElem {
    pub fn new(rot: Rational64, pow: u64) -> Self {
        assert!(pow >= 1);
        MonoidElem { pow, rot: frac(rot) }
    }

    pub fn identity() -> Self {
        MonoidElem::new(Rational64::zero(), 1)
    }

    pub fn rotation(rot: Rational64) -> Self {
        MonoidElem::new(rot, 1)
    }

    pub fn phi(n: u64) -> Self {
        MonoidElem::new(Rational64::zero(), n)
    }

    /// `([zeta] phi_N)([eta] phi_M) = [zeta eta^N] phi_{NM}`.
    pub fn compose(&self, other: &MonoidElem) -> MonoidElem {
        MonoidElem::new(self.rot + other.rot * Rational64::from(self.pow as i64), self.pow * other.pow)
    }
}

impl fmt::Display for MonoidElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rot.is_zero(), self.pow) {
            (true, 1) => write!(f, "1"),
            (true, n) => write!(f, "φ_{n}"),
            (false, 1) => write!(f, "[{}]", self.rot),
            (false, n) => write!(f, "[{}]φ_{n}", self.rot),
        }
    }
}

/// Finite rational combination of monoid elements.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlgebraElem {
    terms: BTreeMap<MonoidElem, BigRational>,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

impl AlgebraElem {
    pub fn zero() -> Self {
        AlgebraElem::default()
    }

    pub fn one() -> Self {
        AlgebraElem::from_elem(MonoidElem::identity())
    }

    pub fn from_elem(g: MonoidElem) -> Self {
        AlgebraElem::from_terms([(g, BigRational::one())])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (MonoidElem, BigRational)>) -> Self {
        let mut out = AlgebraElem::zero();
        for (g, c) in terms {
            out.push(g, c);
        }
        out
    }

    fn push(&mut self, g: MonoidElem, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(g).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&g);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonoidElem, &BigRational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &AlgebraElem) -> AlgebraElem {
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.push(*g, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &AlgebraElem) -> AlgebraElem {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> AlgebraElem {
        AlgebraElem::from_terms(self.terms.iter().map(|(g, x)| (*g, x * c)))
    }

    pub fn mul(&self, other: &AlgebraElem) -> AlgebraElem {
        let mut out = AlgebraElem::zero();
        for (g, a) in &self.terms {
            for (h, b) in &other.terms {
                out.push(g.compose(h), a * b);
            }
        }
        out
    }

    /// `phi_N`.
    pub fn phi(n: u64) -> Self {
        AlgebraElem::from_elem(MonoidElem::phi(n))
    }

    /// `[e^{2 pi i q}]`.
    pub fn rotation(q: Rational64) -> Self {
        AlgebraElem::from_elem(MonoidElem::rotation(q))
    }

    /// `Tr_N = sum_{zeta^N = 1} [zeta]`.
    pub fn trace(n: u64) -> Self {
        AlgebraElem::from_terms(
            (0..n as i64).map(|k| (MonoidElem::rotation(Rational64::new(k, n as i64)), BigRational::one())),
        )
    }

    /// `e_N = Tr_N / N`.
    pub fn e(n: u64) -> Self {
        AlgebraElem::trace(n).scale(&rat(1, n as i64))
    }

    /// `Phi_S = prod (1 - phi_{N_i})`.
    pub fn phi_s(s: &Generators) -> Self {
        s.as_slice()
            .iter()
            .fold(AlgebraElem::one(), |acc, &g| acc.mul(&AlgebraElem::one().sub(&AlgebraElem::phi(g))))
    }

    /// `Omega_S = prod (1 - e_{N_i})`.
    pub fn omega_s(s: &Generators) -> Self {
        s.as_slice()
            .iter()
            .fold(AlgebraElem::one(), |acc, &g| acc.mul(&AlgebraElem::one().sub(&AlgebraElem::e(g))))
    }

    pub fn to_json(&self) -> String {
        let v: Vec<TermJson> = self
            .terms
            .iter()
            .map(|(g, c)| TermJson { coef: c.to_string(), rot: g.rot.to_string(), pow: g.pow })
            .collect();
        serde_json::to_string(&v).expect("algebra json")
    }

    pub fn from_json(s: &str) -> Result<Self, String> {
        let v: Vec<TermJson> = serde_json::from_str(s).map_err(|e| e.to_string())?;
        let mut out = AlgebraElem::zero();
        for t in v {
            let c: BigRational = t.coef.parse().map_err(|e| format!("{}: {e:?}", t.coef))?;
            let r: Rational64 = t.rot.parse().map_err(|e| format!("{}: {e:?}", t.rot))?;
            if t.pow == 0 {
                return Err("pow must be positive".into());
            }
            out.push(MonoidElem::new(r, t.pow), c);
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    coef: String,
    rot: String,
    pow: u64,
}

impl fmt::Display for AlgebraElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (g, c)) in self.terms.iter().enumerate() {
            let (sign, mag) = if c.is_negative() { ("-", -c.clone()) } else { ("+", c.clone()) };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag.is_one() {
                write!(f, "{g}")?;
            } else {
                write!(f, "{mag}·{g}")?;
            }
        }
        Ok(())
    }
}

/// Objects the monoid acts on.
#[derive(Clone, Debug)]
pub enum Object {
    Measure(MeasureExpr),
    /// Additive analytic function such as `h_mu`, acted on linearly.
    Additive(TaylorSeries),
    /// Function with `f(0) = 1`, acted on through `log`.
    Multiplicative(TaylorSeries),
    Mass(MassFunction),
}

fn turns(q: Rational64) -> Angle {
    Angle::Turns(q)
}

/// `e^{2 pi i q}` in the kind of `like`; exact when `4q` is an integer.
fn root_scalar(q: Rational64, like: &TaylorSeries) -> (TaylorSeries, TaylorScalar) {
    let q = frac(q);
    if like.as_rational().is_some() {
        let quarter = q * Rational64::from(4);
        if quarter.is_integer() {
            let z = |a: i64, b: i64| Cq::new(rat(a, 1), rat(b, 1));
            let c = match quarter.to_integer() {
                0 => z(1, 0),
                1 => z(0, 1),
                2 => z(-1, 0),
                _ => z(0, -1),
            };
            return (like.clone(), TaylorScalar::Rational(c));
        }
    }
    let t = std::f64::consts::TAU * q.to_f64().unwrap();
    (like.to_float(), TaylorScalar::Float(C64::from_polar(1.0, t)))
}

/// `h(e^{2 pi i q} z)`.
fn rotate_series(h: &TaylorSeries, q: Rational64) -> TaylorSeries {
    let (base, c) = root_scalar(q, h);
    base.scale_arg(&c).expect("kinds agree")
}

/// Left push `N_* h`: `a_n -> a_{nN}`, order `K / N`.
fn push_series(h: &TaylorSeries, n: u64) -> TaylorSeries {
    let n = n as usize;
    let k = h.order() / n;
    match h.as_rational() {
        Some(v) => TaylorSeries::rational((0..=k).map(|i| v[i * n].clone()).collect()),
        None => TaylorSeries::float((0..=k).map(|i| h.coeff(i * n)).collect()),
    }
}

fn scale_series(h: &TaylorSeries, c: &BigRational) -> TaylorSeries {
    match h.as_rational() {
        Some(v) => TaylorSeries::rational(v.iter().map(|x| x * cq_real(c.clone())).collect()),
        None => h.scale_c64(C64::new(crate::series::ratio_to_f64(c), 0.0)),
    }
}

fn add_series(a: Option<TaylorSeries>, b: TaylorSeries) -> TaylorSeries {
    match a {
        None => b,
        Some(a) => {
            let (a, b) = if a.kind() == b.kind() { (a, b) } else { (a.to_float(), b.to_float()) };
            let k = a.order().min(b.order());
            a.truncate(k).add(&b.truncate(k)).unwrap()
        }
    }
}

fn right_one(x: &Object, g: &MonoidElem) -> Result<Object, AlgebraError> {
    Ok(match x {
        Object::Measure(m) => Object::Measure(m.clone().rotate(turns(-g.rot)).pull(g.pow)),
        Object::Additive(h) => Object::Additive(rotate_series(h, g.rot).compose_zn(g.pow)),
        Object::Multiplicative(f) => Object::Additive(rotate_series(&f.log()?, g.rot).compose_zn(g.pow)),
        Object::Mass(m) => Object::Mass(m.act_rotation(&turns(g.rot)).act_pull(g.pow)),
    })
}

fn left_one(g: &MonoidElem, x: &Object) -> Result<Object, AlgebraError> {
    Ok(match x {
        Object::Measure(m) => Object::Measure(m.clone().push(g.pow).rotate(turns(g.rot))),
        Object::Additive(h) => Object::Additive(rotate_series(&push_series(h, g.pow), -g.rot)),
        Object::Multiplicative(f) => Object::Additive(rotate_series(&push_series(&f.log()?, g.pow), -g.rot)),
        Object::Mass(m) => Object::Mass(m.act_push(g.pow).act_rotation(&turns(-g.rot))),
    })
}

fn combine(x: &Object, parts: Vec<(BigRational, Object)>) -> Result<Object, AlgebraError> {
    match x {
        Object::Measure(_) => Ok(Object::Measure(MeasureExpr::lin_comb(
            parts
                .into_iter()
                .map(|(c, o)| match o {
                    Object::Measure(m) => (crate::series::ratio_to_f64(&c), m),
                    _ => unreachable!(),
                })
                .collect(),
        ))),
        Object::Mass(m0) => {
            let mut acc = MassFunction::zero_like(m0);
            for (c, o) in parts {
                if let Object::Mass(m) = o {
                    acc = acc.add(&m.scale(crate::series::ratio_to_f64(&c)));
                }
            }
            Ok(Object::Mass(acc))
        }
        Object::Additive(h) | Object::Multiplicative(h) => {
            let mut acc = None;
            for (c, o) in parts {
                if let Object::Additive(s) = o {
                    acc = Some(add_series(acc, scale_series(&s, &c)));
                }
            }
            let sum = acc.unwrap_or_else(|| TaylorSeries::zero(h.kind(), h.order()));
            if matches!(x, Object::Multiplicative(_)) {
                Ok(Object::Multiplicative(sum.exp()?))
            } else {
                Ok(Object::Additive(sum))
            }
        }
    }
}

/// Right action `x · a` by pullback, extended linearly (multiplicatively
/// for functions with value 1 at 0).
pub fn act_right(x: &Object, a: &AlgebraElem) -> Result<Object, AlgebraError> {
    let parts = a
        .terms()
        .map(|(g, c)| Ok((c.clone(), right_one(x, g)?)))
        .collect::<Result<Vec<_>, AlgebraError>>()?;
    combine(x, parts)
}

/// Left action `a · x` by pushforward.
pub fn act_left(a: &AlgebraElem, x: &Object) -> Result<Object, AlgebraError> {
    let parts = a
        .terms()
        .map(|(g, c)| Ok((c.clone(), left_one(g, x)?)))
        .collect::<Result<Vec<_>, AlgebraError>>()?;
    combine(x, parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn enumerate_examples() {
        let s = Generators::new(&[2, 3]).unwrap();
        assert_eq!(s.enumerate(10), vec![1, 2, 3, 4, 6, 8, 9]);
        assert_eq!(Generators::new(&[2]).unwrap().enumerate(8), vec![1, 2, 4, 8]);
        assert_eq!(s.enumerate(1), vec![1]);
    }

    #[test]
    fn generators_validated() {
        assert_eq!(Generators::new(&[2, 4]), Err(AlgebraError::NotCoprime(2, 4)));
        assert_eq!(Generators::new(&[1]), Err(AlgebraError::SmallGenerator(1)));
        assert_eq!(Generators::new(&[]), Err(AlgebraError::Empty));
    }

    #[test]
    fn count_small_cases() {
        let s = Generators::new(&[2, 3]).unwrap();
        let c = count_bounds(&s, 10.0);
        assert_eq!(c.count, 7);
        assert!(c.holds());
        let c1 = count_bounds(&s, 1.0);
        assert_eq!(c1.count, 1);
        assert!(c1.holds());
        let c2 = count_bounds(&s, 1024.0);
        // (1/4) (log_3 1024)^2
        let want = 0.25 * (10.0 * 2f64.ln() / 3f64.ln()).powi(2);
        assert!((c2.lower - want).abs() < 1e-12);
        assert!(c2.holds());
    }

    #[test]
    fn reciprocal_tail_is_consistent() {
        let s = Generators::new(&[2, 3]).unwrap();
        assert!((s.reciprocal_sum() - 3.0).abs() < 1e-15);
        let direct: f64 = s.enumerate(1 << 40).iter().filter(|&&n| n > 100).map(|&n| 1.0 / n as f64).sum();
        assert!(s.reciprocal_tail(100) >= direct - 1e-12);
    }

    #[test]
    fn relation_phi_rotation() {
        let lhs = AlgebraElem::phi(2).mul(&AlgebraElem::rotation(q(1, 4)));
        let rhs = AlgebraElem::rotation(q(1, 2)).mul(&AlgebraElem::phi(2));
        assert_eq!(lhs, rhs);
        assert_eq!(AlgebraElem::phi(2).mul(&AlgebraElem::phi(3)), AlgebraElem::phi(6));
        assert_eq!(AlgebraElem::phi(3).mul(&AlgebraElem::phi(2)), AlgebraElem::phi(6));
    }

    #[test]
    fn e_n_idempotent() {
        for n in 1..9 {
            let e = AlgebraElem::e(n);
            assert_eq!(e.mul(&e), e);
        }
    }

    #[test]
    fn builders_expand() {
        let s = Generators::new(&[2]).unwrap();
        assert_eq!(AlgebraElem::phi_s(&s), AlgebraElem::one().sub(&AlgebraElem::phi(2)));
        let want = AlgebraElem::one().sub(
            &AlgebraElem::rotation(q(0, 1)).add(&AlgebraElem::rotation(q(1, 2))).scale(&rat(1, 2)),
        );
        assert_eq!(AlgebraElem::omega_s(&s), want);
    }

    #[test]
    fn phi_s_times_e_i() {
        let s = Generators::new(&[2, 3, 5]).unwrap();
        let phi = AlgebraElem::phi_s(&s);
        for (i, &ni) in s.as_slice().iter().enumerate() {
            let mut rhs = AlgebraElem::e(ni).sub(&AlgebraElem::phi(ni));
            for (j, &nj) in s.as_slice().iter().enumerate() {
                if j != i {
                    rhs = rhs.mul(&AlgebraElem::one().sub(&AlgebraElem::phi(nj)));
                }
            }
            assert_eq!(phi.mul(&AlgebraElem::e(ni)), rhs);
        }
    }

    #[test]
    fn display_and_json() {
        let a = AlgebraElem::from_terms([
            (MonoidElem::new(q(1, 6), 12), rat(3, 2)),
            (MonoidElem::identity(), rat(-1, 1)),
        ]);
        assert_eq!(a.to_string(), "-1 + 3/2·[1/6]φ_12");
        assert_eq!(AlgebraElem::from_json(&a.to_json()).unwrap(), a);
    }
}
