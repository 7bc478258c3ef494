//! Big Witt vectors over a Q-algebra, stored as power series `P` with
//! `P(0) = 1`.
//!
//! Witt addition is multiplication of series. The ghost map
//! `P -> -z P'/P` turns Witt multiplication into the coefficientwise
//! product, so `P ⊙ Q` is computed as `unghost(ghost P * ghost Q)`.
//!
//! ```
//! use circlecalc::witt::WittVec;
//!
//! let e2 = WittVec::artin_hasse(2, 40);
//! assert!(e2.p_integral_check(2).pass);
//!
//! // The Hadamard square of the ghost of E_2 is the ghost of its negative.
//! let sq = e2.mul(&e2).unwrap();
//! assert_eq!(sq, e2.neg());
//! ```

use num_traits::{One, Zero};
use serde::Serialize;

use crate::algebra::Generators;
use crate::fourier::{FourierWindow, MeasureError, MeasureExpr};
use crate::mass::MassFunction;
use crate::series::{cq, first_non_integral, Cq, ScalarKind, SeriesError, TaylorScalar, TaylorSeries, C64};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WittError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("ghost vector needs a zero constant term")]
    GhostConstant,
}

/// Element of `1 + T Λ[[T]]` truncated at order `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct WittVec {
    series: TaylorSeries,
}

/// Ghost components `w_1..w_K`, stored as a series with zero constant term.
#[derive(Clone, Debug, PartialEq)]
pub struct GhostVec {
    series: TaylorSeries,
}

impl GhostVec {
    pub fn new(series: TaylorSeries) -> Result<Self, WittError> {
        if series.coeff(0) != C64::zero() {
            return Err(WittError::GhostConstant);
        }
        Ok(GhostVec { series })
    }

    pub fn series(&self) -> &TaylorSeries {
        &self.series
    }

    /// `w_n` for `1 <= n <= K`.
    pub fn component(&self, n: usize) -> C64 {
        self.series.coeff(n)
    }

    pub fn add(&self, other: &GhostVec) -> Result<GhostVec, WittError> {
        Ok(GhostVec { series: self.series.add(&other.series)? })
    }

    /// Coefficientwise product.
    pub fn hadamard(&self, other: &GhostVec) -> Result<GhostVec, WittError> {
        let k = self.series.order().min(other.series.order());
        let series = match (self.series.as_rational(), other.series.as_rational()) {
            (Some(a), Some(b)) => TaylorSeries::rational((0..=k).map(|i| &a[i] * &b[i]).collect()),
            (None, None) => TaylorSeries::float((0..=k).map(|i| self.series.coeff(i) * other.series.coeff(i)).collect()),
            _ => return Err(SeriesError::KindMismatch(self.series.kind(), other.series.kind()).into()),
        };
        Ok(GhostVec { series })
    }
}

/// Result of checking that no denominator is divisible by `p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PIntegralReport {
    pub p: u64,
    pub order: usize,
    /// First index whose coefficient has a denominator divisible by `p`.
    pub first_failure: Option<usize>,
    pub pass: bool,
}

/// Which of `E_N` and its Witt negative is idempotent under `⊙`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdempotencyReport {
    pub n: u64,
    pub order: usize,
    pub e_is_idempotent: bool,
    pub neg_e_is_idempotent: bool,
    /// `E_N ⊙ E_N = ⊖E_N`, equivalently `mu * mu = -mu` for the lacunary
    /// premeasure with `w(mu) = E_N`.
    pub square_is_negative: bool,
}

/// Deviations in the correspondence between operations on measures and on
/// their Witt images.
#[derive(Clone, Debug, Serialize)]
pub struct CorrespondenceReport {
    pub n: u64,
    pub push_vs_frobenius: f64,
    pub pull_vs_verschiebung: f64,
    pub rotation_vs_teichmuller: f64,
    pub pass: bool,
}

impl WittVec {
    pub fn new(series: TaylorSeries) -> Result<Self, WittError> {
        let c0_ok = match series.as_rational() {
            Some(v) => v[0] == Cq::one(),
            None => series.coeff(0) == C64::new(1.0, 0.0),
        };
        if !c0_ok {
            return Err(SeriesError::ConstantTerm { expected: "1", found: format!("{}", series.coeff(0)) }.into());
        }
        Ok(WittVec { series })
    }

    /// The zero of `W`, the series 1.
    pub fn one(kind: ScalarKind, order: usize) -> Self {
        WittVec { series: TaylorSeries::one(kind, order) }
    }

    pub fn series(&self) -> &TaylorSeries {
        &self.series
    }

    pub fn order(&self) -> usize {
        self.series.order()
    }

    pub fn kind(&self) -> ScalarKind {
        self.series.kind()
    }

    pub fn to_float(&self) -> WittVec {
        WittVec { series: self.series.to_float() }
    }

    /// `P ⊕ Q = P Q`.
    pub fn add(&self, other: &WittVec) -> Result<WittVec, WittError> {
        Ok(WittVec { series: self.series.mul(&other.series)? })
    }

    /// `⊖P = 1 / P`.
    pub fn neg(&self) -> WittVec {
        WittVec { series: self.series.recip().expect("constant term 1") }
    }

    pub fn sub(&self, other: &WittVec) -> Result<WittVec, WittError> {
        self.add(&other.neg())
    }

    /// `n`-fold sum `P^n`.
    pub fn times(&self, n: u64) -> WittVec {
        WittVec { series: self.series.pow(n) }
    }

    /// `-z P'/P`.
    pub fn ghost(&self) -> GhostVec {
        let l = self.series.log().expect("constant term 1");
        let series = match l.as_rational() {
            Some(v) => TaylorSeries::rational(v.iter().enumerate().map(|(n, c)| c * cq(-(n as i64), 1)).collect()),
            None => TaylorSeries::float((0..=l.order()).map(|n| l.coeff(n) * -(n as f64)).collect()),
        };
        GhostVec { series }
    }

    /// Inverse of [`WittVec::ghost`]: `exp(-sum w_n z^n / n)`.
    pub fn unghost(w: &GhostVec) -> WittVec {
        let s = &w.series;
        let l = match s.as_rational() {
            Some(v) => TaylorSeries::rational(
                v.iter()
                    .enumerate()
                    .map(|(n, c)| if n == 0 { Cq::zero() } else { c * cq(-1, n as i64) })
                    .collect(),
            ),
            None => TaylorSeries::float(
                (0..=s.order()).map(|n| if n == 0 { C64::zero() } else { -s.coeff(n) / n as f64 }).collect(),
            ),
        };
        WittVec { series: l.exp().expect("zero constant term") }
    }

    /// Witt product through the ghost map.
    pub fn mul(&self, other: &WittVec) -> Result<WittVec, WittError> {
        Ok(WittVec::unghost(&self.ghost().hadamard(&other.ghost())?))
    }

    /// Teichmüller element `[a] = 1 - a T`.
    pub fn teichmuller(a: &TaylorScalar, order: usize) -> WittVec {
        let series = match a {
            TaylorScalar::Rational(a) => {
                let mut v = vec![Cq::zero(); order + 1];
                v[0] = Cq::one();
                if order >= 1 {
                    v[1] = -a.clone();
                }
                TaylorSeries::rational(v)
            }
            TaylorScalar::Float(a) => {
                let mut v = vec![C64::zero(); order + 1];
                v[0] = C64::new(1.0, 0.0);
                if order >= 1 {
                    v[1] = -a;
                }
                TaylorSeries::float(v)
            }
        };
        WittVec { series }
    }

    /// `P(a z)`, which equals `[a] ⊙ P`.
    pub fn scale_arg(&self, a: &TaylorScalar) -> Result<WittVec, WittError> {
        Ok(WittVec { series: self.series.scale_arg(a)? })
    }

    /// `F_N P`, defined by `F_N(P)(z^N) = prod_{zeta^N = 1} P(zeta z)`.
    /// Order drops to `K / N`.
    pub fn frobenius(&self, n: u64) -> WittVec {
        let t = self.series.mult_trace(n).expect("constant term 1");
        let n = n as usize;
        let k = self.order() / n;
        let series = match t.as_rational() {
            Some(v) => TaylorSeries::rational((0..=k).map(|i| v[i * n].clone()).collect()),
            None => TaylorSeries::float((0..=k).map(|i| t.coeff(i * n)).collect()),
        };
        WittVec { series }
    }

    /// `V_N P = P(z^N)`, known exactly up to order `(K + 1) N - 1`.
    pub fn verschiebung(&self, n: u64) -> WittVec {
        let k = (self.order() + 1) * n as usize - 1;
        WittVec { series: self.series.truncate(k).compose_zn(n) }
    }

    /// `E_N = exp(sum_k z^{N^k} / N^k)` over the rationals.
    pub fn artin_hasse(n: u64, order: usize) -> WittVec {
        let mut v = vec![Cq::zero(); order + 1];
        let mut p = 1u64;
        while (p as usize) <= order {
            v[p as usize] = cq(1, p as i64);
            p = match p.checked_mul(n) {
                Some(q) => q,
                None => break,
            };
        }
        WittVec { series: TaylorSeries::rational(v).exp().expect("zero constant term") }
    }

    /// `E_S = exp(sum_{N in S} z^N / N)`, with `1 ∈ S`.
    pub fn artin_hasse_s(s: &Generators, order: usize) -> WittVec {
        let mut v = vec![Cq::zero(); order + 1];
        for m in s.enumerate(order as u64) {
            v[m as usize] = cq(1, m as i64);
        }
        WittVec { series: TaylorSeries::rational(v).exp().expect("zero constant term") }
    }

    /// Whether every coefficient lies in `Z_(p)`.
    pub fn p_integral_check(&self, p: u64) -> PIntegralReport {
        let first_failure = match self.series.as_rational() {
            Some(v) => first_non_integral(v, p),
            None => Some(0),
        };
        PIntegralReport { p, order: self.order(), first_failure, pass: first_failure.is_none() }
    }

    /// `w(mu) = exp(-sum_{n >= 1} c_n z^n / n)` from a Fourier window; its
    /// ghost components are the `c_n`.
    pub fn from_window(c: &FourierWindow, order: usize) -> WittVec {
        let k = order.min(c.half_width());
        let mut w = vec![C64::zero(); k + 1];
        for (n, slot) in w.iter_mut().enumerate().skip(1) {
            *slot = c.get(n as i64);
        }
        WittVec::unghost(&GhostVec { series: TaylorSeries::float(w) })
    }

    pub fn from_measure(mu: &MeasureExpr, order: usize, tol: f64) -> Result<WittVec, WittError> {
        Ok(WittVec::from_window(&mu.fourier(order, tol)?, order))
    }

    pub fn from_mass(mu: &MassFunction, order: usize) -> WittVec {
        let w = (0..=order as i64).map(|n| if n == 0 { C64::zero() } else { mu.measure_coeff(n) }).collect();
        WittVec::unghost(&GhostVec { series: TaylorSeries::float(w) })
    }

    /// Rows `(n, coefficient, ghost component)` for display.
    pub fn table(&self) -> Vec<(usize, C64, C64)> {
        let g = self.ghost();
        (0..=self.order()).map(|n| (n, self.series.coeff(n), g.component(n))).collect()
    }

    /// Drop coefficients above `order`.
    pub fn truncate_to(&self, order: usize) -> WittVec {
        WittVec { series: self.series.truncate(order.min(self.order())) }
    }

    pub fn max_abs_diff(&self, other: &WittVec) -> f64 {
        self.series.to_float().max_abs_diff(&other.series.to_float()).expect("float kinds")
    }
}

/// Decide by exact arithmetic which of `E_N`, `⊖E_N` is idempotent.
pub fn resolve_idempotent(n: u64, order: usize) -> IdempotencyReport {
    let e = WittVec::artin_hasse(n, order);
    let ne = e.neg();
    let sq = e.mul(&e).expect("same kind");
    IdempotencyReport {
        n,
        order,
        e_is_idempotent: sq == e,
        neg_e_is_idempotent: ne.mul(&ne).expect("same kind") == ne,
        square_is_negative: sq == ne,
    }
}

/// Check `w(N_* mu) = F_N w(mu)`, `w(N N^* mu) = V_N w(mu)` and
/// `w([zeta^{-1}]_* mu) = [zeta] ⊙ w(mu)` for `zeta = e^{2 pi i rot}`.
pub fn correspondence_suite(
    mu: &MeasureExpr,
    n: u64,
    rot: num_rational::Rational64,
    order: usize,
    tol: f64,
) -> Result<CorrespondenceReport, WittError> {
    use crate::fourier::Angle;
    let w = WittVec::from_measure(mu, order, tol)?;
    let push = WittVec::from_measure(&mu.clone().push(n), order / n as usize, tol)?;
    let push_vs_frobenius = push.max_abs_diff(&w.frobenius(n));
    let v = w.verschiebung(n);
    let pulled = mu.clone().pull(n).scale(n as f64);
    let pull = WittVec::from_measure(&pulled, v.order(), tol)?;
    let pull_vs_verschiebung = pull.max_abs_diff(&v);
    let rotated = mu.clone().rotate(Angle::Turns(-rot));
    let zeta = C64::from_polar(1.0, std::f64::consts::TAU * num_traits::ToPrimitive::to_f64(&rot).unwrap());
    let rhs = WittVec::teichmuller(&TaylorScalar::Float(zeta), order).mul(&w)?;
    let rotation_vs_teichmuller = WittVec::from_measure(&rotated, order, tol)?.max_abs_diff(&rhs);
    // Coefficients of w grow at most like binomials of the window bound, so
    // compare on a relative scale.
    let scale = w.series.to_float().as_float().unwrap().iter().map(|c| c.norm()).fold(1.0, f64::max);
    let bound = 1e-9 * scale.max(v.series.as_float().map_or(1.0, |s| s.iter().map(|c| c.norm()).fold(1.0, f64::max)));
    let pass = push_vs_frobenius <= bound && pull_vs_verschiebung <= bound && rotation_vs_teichmuller <= bound;
    Ok(CorrespondenceReport { n, push_vs_frobenius, pull_vs_verschiebung, rotation_vs_teichmuller, pass })
}

/// Counts of failed identities over a batch of random vectors.
#[derive(Clone, Debug, Serialize)]
pub struct IdentitySuiteReport {
    pub order: usize,
    pub samples: usize,
    pub seed: u64,
    pub failures: Vec<(String, usize)>,
    pub pass: bool,
}

fn random_vec(rng: &mut rand_chacha::ChaCha8Rng, order: usize) -> WittVec {
    use rand::Rng;
    let mut v = vec![Cq::zero(); order + 1];
    v[0] = Cq::one();
    for c in v.iter_mut().skip(1) {
        if rng.gen_bool(0.5) {
            *c = cq(rng.gen_range(-3..=3), rng.gen_range(1..=3));
        }
    }
    WittVec { series: TaylorSeries::rational(v) }
}

/// Ring axioms, ghost compatibility and the Frobenius/Verschiebung
/// relations, exactly over the rationals on `samples` random vectors.
pub fn identity_suite(order: usize, samples: usize, seed: u64) -> IdentitySuiteReport {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut failed: std::collections::BTreeMap<&'static str, usize> = Default::default();
    let mut check = |name: &'static str, ok: bool| {
        if !ok {
            *failed.entry(name).or_default() += 1;
        }
    };
    let zero = WittVec::one(ScalarKind::Rational, order);
    let unit = WittVec::teichmuller(&TaylorScalar::Rational(Cq::one()), order);
    for _ in 0..samples {
        let (a, b, c) = (random_vec(&mut rng, order), random_vec(&mut rng, order), random_vec(&mut rng, order));
        let ab = a.mul(&b).unwrap();
        check("add_commutative", a.add(&b).unwrap() == b.add(&a).unwrap());
        check("add_inverse", a.add(&a.neg()).unwrap() == zero);
        check("mul_commutative", ab == b.mul(&a).unwrap());
        check("mul_associative", ab.mul(&c).unwrap() == a.mul(&b.mul(&c).unwrap()).unwrap());
        check("mul_unit", a.mul(&unit).unwrap() == a);
        check("distributive", a.mul(&b.add(&c).unwrap()).unwrap() == ab.add(&a.mul(&c).unwrap()).unwrap());
        check("ghost_additive", a.add(&b).unwrap().ghost() == a.ghost().add(&b.ghost()).unwrap());
        check("ghost_multiplicative", ab.ghost() == a.ghost().hadamard(&b.ghost()).unwrap());
        let n = rng.gen_range(2..=3u64);
        let m = rng.gen_range(2..=3u64);
        let ff = a.frobenius(n).frobenius(m);
        let f = a.frobenius(n * m);
        let o = ff.order().min(f.order());
        check("frobenius_compose", ff.truncate_to(o) == f.truncate_to(o));
        check("verschiebung_compose", a.verschiebung(n).verschiebung(m) == a.verschiebung(n * m));
        let small = a.truncate_to(order.min(8));
        check("frobenius_verschiebung", small.verschiebung(n).frobenius(n) == small.times(n));
        let q = if n == 2 { 3 } else { 2 };
        let x = small.verschiebung(q).frobenius(n);
        let y = small.frobenius(n).verschiebung(q);
        let o = x.order().min(y.order());
        check("coprime_commute", x.truncate_to(o) == y.truncate_to(o));
        let t = TaylorScalar::Rational(cq(rng.gen_range(-4..=4), rng.gen_range(1..=5)));
        check("teichmuller_scaling", WittVec::teichmuller(&t, order).mul(&a).unwrap() == a.scale_arg(&t).unwrap());
    }
    let failures: Vec<(String, usize)> = failed.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    IdentitySuiteReport { order, samples, seed, pass: failures.is_empty(), failures }
}
