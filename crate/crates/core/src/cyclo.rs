//! Exact finite sums of roots of unity with rational weights.
//!
//! A [`RootSum`] is a formal combination `sum_q w_q e^{2 pi i q}` over
//! rational `q mod 1`. Different formal sums can denote the same complex
//! number (`1 + w + w^2 = 0` for a cube root `w`), so equality reduces both
//! sides to a canonical basis of the cyclotomic field first.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::series::{ratio_to_f64, C64};

/// Reduce a rational angle (in turns) into `[0, 1)`.
pub fn frac(q: Rational64) -> Rational64 {
    let f = q - q.floor();
    if f < Rational64::zero() {
        f + Rational64::one()
    } else {
        f
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RootSum {
    terms: BTreeMap<Rational64, BigRational>,
}

impl RootSum {
    pub fn zero() -> Self {
        RootSum::default()
    }

    /// `w * e^{2 pi i q}`.
    pub fn root(q: Rational64, w: BigRational) -> Self {
        let mut s = RootSum::zero();
        s.push(q, w);
        s
    }

    pub fn real(w: BigRational) -> Self {
        RootSum::root(Rational64::zero(), w)
    }

    fn push(&mut self, q: Rational64, w: BigRational) {
        if w.is_zero() {
            return;
        }
        let q = frac(q);
        let e = self.terms.entry(q).or_insert_with(BigRational::zero);
        *e += w;
        if e.is_zero() {
            self.terms.remove(&q);
        }
    }

    pub fn add(&self, other: &RootSum) -> RootSum {
        let mut out = self.clone();
        for (q, w) in &other.terms {
            out.push(*q, w.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> RootSum {
        let mut out = RootSum::zero();
        for (q, w) in &self.terms {
            out.push(*q, w * c);
        }
        out
    }

    /// Multiply by `e^{2 pi i r}`.
    pub fn rotate(&self, r: Rational64) -> RootSum {
        let mut out = RootSum::zero();
        for (q, w) in &self.terms {
            out.push(*q + r, w.clone());
        }
        out
    }

    pub fn is_formally_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_c64(&self) -> C64 {
        self.terms
            .iter()
            .map(|(q, w)| {
                let t = std::f64::consts::TAU * q.to_f64().unwrap();
                C64::from_polar(ratio_to_f64(w), t)
            })
            .sum()
    }

    /// Least common denominator of the angles.
    pub fn conductor(&self) -> u64 {
        self.terms.keys().fold(1u64, |acc, q| acc.lcm(&(*q.denom() as u64)))
    }

    /// Coordinates in the canonical basis of `Q(zeta_n)` for the conductor.
    pub fn canonical(&self) -> (u64, BTreeMap<u64, BigRational>) {
        let n = self.conductor();
        (n, self.canonical_at(n))
    }

    /// Canonical coordinates in `Q(zeta_n)`; `n` must be a multiple of the
    /// conductor.
    pub fn canonical_at(&self, n: u64) -> BTreeMap<u64, BigRational> {
        assert_eq!(n % self.conductor(), 0, "conductor must divide n");
        let mut v: BTreeMap<u64, BigRational> = BTreeMap::new();
        for (q, w) in &self.terms {
            let e = (*q.numer() as u64) * (n / *q.denom() as u64);
            add_to(&mut v, e % n, w.clone());
        }
        for (p, a) in factor(n) {
            let pa = p.pow(a);
            let m = n / pa;
            // t = 1 mod p^a, 0 mod m: shifts only the p-component of an exponent.
            let t = if m == 1 { 1 } else { m * mod_inverse(m % pa, pa) % n };
            let step = pa / p * t % n;
            let mut next = BTreeMap::new();
            for (e, w) in v {
                let k = (e % pa) / (pa / p);
                if p == 2 {
                    if k == 1 {
                        add_to(&mut next, (e + n - step) % n, -w);
                    } else {
                        add_to(&mut next, e, w);
                    }
                } else if k == 0 {
                    for j in 1..p {
                        add_to(&mut next, (e + j * step) % n, -w.clone());
                    }
                } else {
                    add_to(&mut next, e, w);
                }
            }
            v = next;
        }
        v
    }

    /// Exact equality of the complex numbers the two sums denote.
    pub fn value_eq(&self, other: &RootSum) -> bool {
        let diff = self.add(&other.scale(&-BigRational::one()));
        diff.canonical().1.is_empty()
    }
}

fn add_to(v: &mut BTreeMap<u64, BigRational>, e: u64, w: BigRational) {
    let x = v.entry(e).or_insert_with(BigRational::zero);
    *x += w;
    if x.is_zero() {
        v.remove(&e);
    }
}

fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut a = 0;
            while n % p == 0 {
                n /= p;
                a += 1;
            }
            out.push((p, a));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    let e = BigInt::from(a).extended_gcd(&BigInt::from(m));
    let x = e.x.mod_floor(&BigInt::from(m));
    debug_assert!(e.gcd.is_one() || m == 1);
    x.abs().to_u64().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }
    fn w(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn full_orbit_vanishes() {
        for n in 2..40 {
            let mut s = RootSum::zero();
            for k in 0..n {
                s = s.add(&RootSum::root(r(k, n), w(1)));
            }
            assert!(s.value_eq(&RootSum::zero()), "n = {n}");
        }
    }

    #[test]
    fn shifted_partial_orbits() {
        // e^{2 pi i/12} (1 + w + w^2) with w a cube root of unity.
        let mut s = RootSum::zero();
        for k in 0..3 {
            s = s.add(&RootSum::root(r(1, 12) + r(k, 3), w(5)));
        }
        assert!(s.value_eq(&RootSum::zero()));
        assert!(!RootSum::root(r(1, 12), w(1)).value_eq(&RootSum::zero()));
    }

    #[test]
    fn minus_one_is_half_turn() {
        let a = RootSum::root(r(1, 2), w(1));
        let b = RootSum::real(w(-1));
        assert!(a.value_eq(&b));
        // i + (-i) = 0 and i^2 = -1 expressed additively.
        let c = RootSum::root(r(1, 4), w(1)).add(&RootSum::root(r(3, 4), w(1)));
        assert!(c.value_eq(&RootSum::zero()));
    }

    #[test]
    fn canonical_form_matches_float_value() {
        let s = RootSum::root(r(1, 7), w(3))
            .add(&RootSum::root(r(2, 15), w(-2)))
            .add(&RootSum::root(r(0, 1), w(1)));
        let (n, v) = s.canonical();
        let mut z = C64::new(0.0, 0.0);
        for (e, c) in v {
            z += C64::from_polar(ratio_to_f64(&c), std::f64::consts::TAU * e as f64 / n as f64);
        }
        assert!((z - s.to_c64()).norm() < 1e-12);
    }

    #[test]
    fn basis_size_is_totient() {
        // Canonicalising every n-th root gives vectors inside a phi(n)-dimensional basis.
        for n in [12u64, 30, 36, 105] {
            let mut support = std::collections::BTreeSet::new();
            for k in 0..n {
                let v = RootSum::root(r(k as i64, n as i64), w(1)).canonical_at(n);
                support.extend(v.keys().copied());
            }
            let phi = (1..=n).filter(|k| k.gcd(&n) == 1).count();
            assert_eq!(support.len(), phi, "n = {n}");
        }
    }
}
