//! Circle measures as expression trees with Fourier coefficients
//! `c_n(mu) = ∫ zeta^{-n} dmu`.
//!
//! Leaves are Haar measure, point masses, trigonometric densities and
//! digit-Bernoulli measures. Inner nodes rotate, push forward along
//! `z -> z^N`, pull back along it, or take real linear combinations.
//! Coefficients are computed by structural recursion: a push reads
//! `c_{nN}` of its input, a pull reads `c_{n/N}` when `N | n` and is zero
//! otherwise.
//!
//! ```
//! use circlecalc::fourier::MeasureExpr;
//!
//! // Uniform measure on {w, w^2, w^4} with w = e^{2 pi i / 7}.
//! let mu = MeasureExpr::orbit(&[(1, 7), (2, 7), (4, 7)]);
//! let report = mu.invariance_check(2, 32, 1e-12).unwrap();
//! assert!(report.pass);
//! ```

use std::f64::consts::{PI, TAU};

use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cyclo::{frac, RootSum};
use crate::series::{TaylorSeries, C64};

/// Largest half-width a push is allowed to request from its input.
pub const MAX_HALF_WIDTH: usize = 1_000_000;
const ROUNDING: f64 = 1e-15;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MeasureError {
    #[error("tolerance must be positive")]
    NonPositiveTol,
    #[error("digit weights must be non-negative and sum to 1 (base {0})")]
    InvalidWeights(u32),
    #[error("invalid node: {0}")]
    Invalid(String),
    #[error("half-width {0} exceeds the coefficient budget")]
    TooLarge(usize),
    #[error("tree has no exact evaluation: {0}")]
    NotExact(&'static str),
    #[error("tree is not purely atomic")]
    NotAtomic,
    #[error("windows differ in half-width ({0} vs {1})")]
    WidthMismatch(usize, usize),
    #[error("coefficient sequence exceeds the bound {0}")]
    Unbounded(f64),
    #[error("tolerance {wanted} unattainable; best bound {achieved}")]
    Tolerance { wanted: f64, achieved: f64 },
    #[error("point must lie in the open unit disc")]
    OutsideDisc,
}

/// A point of the circle given as a fraction of a full turn (exact) or in
/// radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Angle {
    Turns(#[serde(with = "ratio_str")] Rational64),
    Radians(f64),
}

mod ratio_str {
    use num_rational::Rational64;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational64, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|e| serde::de::Error::custom(format!("{s}: {e:?}")))
    }
}

impl Angle {
    pub fn turns(n: i64, d: i64) -> Angle {
        Angle::Turns(Rational64::new(n, d))
    }

    /// Position in `[0, 1)` turns.
    pub fn turns_f64(&self) -> f64 {
        match self {
            Angle::Turns(q) => frac(*q).to_f64().unwrap(),
            Angle::Radians(t) => (t / TAU).rem_euclid(1.0),
        }
    }

    pub fn radians(&self) -> f64 {
        TAU * self.turns_f64()
    }

    pub fn neg(&self) -> Angle {
        match self {
            Angle::Turns(q) => Angle::Turns(frac(-*q)),
            Angle::Radians(t) => Angle::Radians(-t),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Angle::Turns(q) => frac(*q).is_zero(),
            Angle::Radians(t) => *t == 0.0,
        }
    }

    /// `e^{-i n theta}` with exact angle reduction for rational turns.
    fn char_at(&self, n: i64) -> C64 {
        let t = match self {
            Angle::Turns(q) => frac(*q * Rational64::from(n)).to_f64().unwrap(),
            Angle::Radians(t) => (t * n as f64 / TAU).rem_euclid(1.0),
        };
        C64::from_polar(1.0, -TAU * t)
    }

    pub fn unit(&self) -> C64 {
        C64::from_polar(1.0, self.radians())
    }
}

/// A real measure on the circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasureExpr {
    /// `mass` times normalized Haar measure.
    Haar { mass: f64 },
    /// Point mass `weight * delta_angle`.
    Atom { angle: Angle, weight: f64 },
    /// Real density with Fourier coefficients `c_0..c_K` (`c_{-n}` is the
    /// conjugate of `c_n`, all others vanish).
    Density { coeffs: Vec<C64> },
    /// Law of `sum_k d_k base^{-k}` (in turns) for i.i.d. digits with the
    /// given probabilities.
    DigitBernoulli { base: u32, weights: Vec<f64> },
    /// Pushforward under rotation by `angle`.
    Rotate { angle: Angle, inner: Box<MeasureExpr> },
    /// Pushforward under `z -> z^n`.
    Push { n: u64, inner: Box<MeasureExpr> },
    /// Averaged pullback under `z -> z^n`.
    Pull { n: u64, inner: Box<MeasureExpr> },
    LinComb { terms: Vec<(f64, MeasureExpr)> },
}

/// Coefficients `c_{-K}..c_K` with a certified absolute error per entry.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierWindow {
    half_width: usize,
    values: Vec<C64>,
    errors: Vec<f64>,
}

impl FourierWindow {
    pub fn new(values: Vec<C64>, errors: Vec<f64>) -> Self {
        assert_eq!(values.len(), errors.len());
        assert_eq!(values.len() % 2, 1, "window length must be odd");
        FourierWindow { half_width: values.len() / 2, values, errors }
    }

    /// Window of `nu -> f(nu)` for `|nu| <= k` with zero error.
    pub fn from_fn(k: usize, f: impl Fn(i64) -> C64) -> Self {
        let values = (-(k as i64)..=k as i64).map(f).collect::<Vec<_>>();
        let n = values.len();
        FourierWindow::new(values, vec![0.0; n])
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn get(&self, nu: i64) -> C64 {
        self.values[(nu + self.half_width as i64) as usize]
    }

    pub fn err(&self, nu: i64) -> f64 {
        self.errors[(nu + self.half_width as i64) as usize]
    }

    pub fn max_err(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        -(self.half_width as i64)..=self.half_width as i64
    }

    /// `max |c_{-n} - conj(c_n)|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.indices().map(|n| (self.get(-n) - self.get(n).conj()).norm()).fold(0.0, f64::max)
    }

    /// Largest `|a_n - b_n|` over the common range.
    pub fn max_diff(&self, other: &FourierWindow) -> f64 {
        let k = self.half_width.min(other.half_width) as i64;
        (-k..=k).map(|n| (self.get(n) - other.get(n)).norm()).fold(0.0, f64::max)
    }

    /// Coefficientwise product, the Fourier side of convolution.
    pub fn convolve(&self, other: &FourierWindow) -> Result<FourierWindow, MeasureError> {
        if self.half_width != other.half_width {
            return Err(MeasureError::WidthMismatch(self.half_width, other.half_width));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        let errors = self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.errors.iter().zip(&other.errors))
            .map(|((a, b), (ea, eb))| a.norm() * eb + b.norm() * ea + ea * eb)
            .collect();
        Ok(FourierWindow::new(values, errors))
    }

    /// Rows `(nu, re, im, err)`.
    pub fn rows(&self) -> impl Iterator<Item = (i64, f64, f64, f64)> + '_ {
        self.indices().map(|n| {
            let c = self.get(n);
            (n, c.re, c.im, self.err(n))
        })
    }
}

/// Result of comparing `c_n` with `c_{nN}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub n: u64,
    pub max_deviation: f64,
    pub error_bound: f64,
    pub pass: bool,
}

fn idx(k: usize, nu: i64) -> usize {
    (nu + k as i64) as usize
}

impl MeasureExpr {
    pub fn haar(mass: f64) -> Self {
        MeasureExpr::Haar { mass }
    }

    pub fn atom(angle: Angle, weight: f64) -> Self {
        MeasureExpr::Atom { angle, weight }
    }

    /// Point mass at `e^{2 pi i n/d}`.
    pub fn atom_turns(n: i64, d: i64, weight: f64) -> Self {
        MeasureExpr::atom(Angle::turns(n, d), weight)
    }

    /// Uniform probability measure on the listed rational angles.
    pub fn orbit(points: &[(i64, i64)]) -> Self {
        let w = 1.0 / points.len() as f64;
        MeasureExpr::lin_comb(points.iter().map(|&(n, d)| (1.0, MeasureExpr::atom_turns(n, d, w))).collect())
    }

    pub fn density(coeffs: Vec<C64>) -> Self {
        MeasureExpr::Density { coeffs }
    }

    pub fn digit_bernoulli(base: u32, weights: Vec<f64>) -> Self {
        MeasureExpr::DigitBernoulli { base, weights }
    }

    pub fn rotate(self, angle: Angle) -> Self {
        if angle.is_zero() {
            return self;
        }
        MeasureExpr::Rotate { angle, inner: Box::new(self) }
    }

    pub fn push(self, n: u64) -> Self {
        if n == 1 {
            return self;
        }
        MeasureExpr::Push { n, inner: Box::new(self) }
    }

    pub fn pull(self, n: u64) -> Self {
        if n == 1 {
            return self;
        }
        MeasureExpr::Pull { n, inner: Box::new(self) }
    }

    pub fn lin_comb(terms: Vec<(f64, MeasureExpr)>) -> Self {
        MeasureExpr::LinComb { terms }
    }

    pub fn scale(self, a: f64) -> Self {
        MeasureExpr::lin_comb(vec![(a, self)])
    }

    pub fn minus(self, other: MeasureExpr) -> Self {
        MeasureExpr::lin_comb(vec![(1.0, self), (-1.0, other)])
    }

    /// `Tr_N mu = sum_{zeta^N = 1} [zeta]_* mu`.
    pub fn trace(self, n: u64) -> Self {
        MeasureExpr::lin_comb(
            (0..n as i64).map(|k| (1.0, self.clone().rotate(Angle::turns(k, n as i64)))).collect(),
        )
    }

    /// Check digit weights, exponents and density reality throughout.
    pub fn validate(&self) -> Result<(), MeasureError> {
        match self {
            MeasureExpr::Haar { mass } if !mass.is_finite() => Err(MeasureError::Invalid("mass".into())),
            MeasureExpr::Atom { weight, .. } if !weight.is_finite() => {
                Err(MeasureError::Invalid("weight".into()))
            }
            MeasureExpr::Density { coeffs } => {
                if coeffs.is_empty() || coeffs[0].im != 0.0 {
                    Err(MeasureError::Invalid("density needs a real c_0".into()))
                } else {
                    Ok(())
                }
            }
            MeasureExpr::DigitBernoulli { base, weights } => {
                let ok = *base >= 2
                    && weights.len() == *base as usize
                    && weights.iter().all(|&p| p >= 0.0 && p.is_finite())
                    && (weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
                if ok {
                    Ok(())
                } else {
                    Err(MeasureError::InvalidWeights(*base))
                }
            }
            MeasureExpr::Rotate { inner, .. } => inner.validate(),
            MeasureExpr::Push { n, inner } | MeasureExpr::Pull { n, inner } => {
                if *n == 0 {
                    Err(MeasureError::Invalid("exponent must be positive".into()))
                } else {
                    inner.validate()
                }
            }
            MeasureExpr::LinComb { terms } => terms.iter().try_for_each(|(_, m)| m.validate()),
            _ => Ok(()),
        }
    }

    /// `mu(T)`.
    pub fn total_mass(&self) -> f64 {
        match self {
            MeasureExpr::Haar { mass } => *mass,
            MeasureExpr::Atom { weight, .. } => *weight,
            MeasureExpr::Density { coeffs } => coeffs[0].re,
            MeasureExpr::DigitBernoulli { .. } => 1.0,
            MeasureExpr::Rotate { inner, .. }
            | MeasureExpr::Push { inner, .. }
            | MeasureExpr::Pull { inner, .. } => inner.total_mass(),
            MeasureExpr::LinComb { terms } => terms.iter().map(|(a, m)| a * m.total_mass()).sum(),
        }
    }

    /// Upper bound for the total variation, hence for every `|c_n|`.
    pub fn variation_bound(&self) -> f64 {
        match self {
            MeasureExpr::Haar { mass } => mass.abs(),
            MeasureExpr::Atom { weight, .. } => weight.abs(),
            MeasureExpr::Density { coeffs } => {
                coeffs[0].re.abs() + 2.0 * coeffs[1..].iter().map(|c| c.norm()).sum::<f64>()
            }
            MeasureExpr::DigitBernoulli { .. } => 1.0,
            MeasureExpr::Rotate { inner, .. }
            | MeasureExpr::Push { inner, .. }
            | MeasureExpr::Pull { inner, .. } => inner.variation_bound(),
            MeasureExpr::LinComb { terms } => terms.iter().map(|(a, m)| a.abs() * m.variation_bound()).sum(),
        }
    }

    /// Certified window `c_{-K}..c_K` with every error at most `tol`.
    pub fn fourier(&self, k: usize, tol: f64) -> Result<FourierWindow, MeasureError> {
        if !(tol > 0.0) {
            return Err(MeasureError::NonPositiveTol);
        }
        self.validate()?;
        let (values, errors) = self.window(k, tol)?;
        Ok(FourierWindow::new(values, errors))
    }

    fn window(&self, k: usize, tol: f64) -> Result<(Vec<C64>, Vec<f64>), MeasureError> {
        let len = 2 * k + 1;
        let ki = k as i64;
        Ok(match self {
            MeasureExpr::Haar { mass } => {
                let mut v = vec![C64::zero(); len];
                v[k] = C64::new(*mass, 0.0);
                (v, vec![0.0; len])
            }
            MeasureExpr::Atom { angle, weight } => (
                (-ki..=ki).map(|n| angle.char_at(n) * *weight).collect(),
                vec![ROUNDING * weight.abs(); len],
            ),
            MeasureExpr::Density { coeffs } => {
                let c = |n: i64| -> C64 {
                    let m = n.unsigned_abs() as usize;
                    match coeffs.get(m) {
                        Some(c) if n >= 0 => *c,
                        Some(c) => c.conj(),
                        None => C64::zero(),
                    }
                };
                ((-ki..=ki).map(c).collect(), vec![0.0; len])
            }
            MeasureExpr::DigitBernoulli { base, weights } => digit_window(*base, weights, k, tol),
            MeasureExpr::Rotate { angle, inner } => {
                let (v, e) = inner.window(k, tol)?;
                ((-ki..=ki).map(|n| v[idx(k, n)] * angle.char_at(n)).collect(), e)
            }
            MeasureExpr::Push { n, inner } => {
                let wide = k.checked_mul(*n as usize).filter(|&w| w <= MAX_HALF_WIDTH);
                let wide = wide.ok_or(MeasureError::TooLarge(k.saturating_mul(*n as usize)))?;
                let (v, e) = inner.window(wide, tol)?;
                let n = *n as i64;
                (
                    (-ki..=ki).map(|m| v[idx(wide, m * n)]).collect(),
                    (-ki..=ki).map(|m| e[idx(wide, m * n)]).collect(),
                )
            }
            MeasureExpr::Pull { n, inner } => {
                let narrow = k / *n as usize;
                let (v, e) = inner.window(narrow, tol)?;
                let n = *n as i64;
                let pick = |m: i64| if m % n == 0 { Some(idx(narrow, m / n)) } else { None };
                (
                    (-ki..=ki).map(|m| pick(m).map_or(C64::zero(), |i| v[i])).collect(),
                    (-ki..=ki).map(|m| pick(m).map_or(0.0, |i| e[i])).collect(),
                )
            }
            MeasureExpr::LinComb { terms } => {
                let weight: f64 = terms.iter().map(|(a, _)| a.abs()).sum::<f64>().max(1.0);
                let mut v = vec![C64::zero(); len];
                let mut e = vec![0.0; len];
                for (a, m) in terms {
                    let (vi, ei) = m.window(k, tol / weight)?;
                    for j in 0..len {
                        v[j] += vi[j] * *a;
                        e[j] += ei[j] * a.abs();
                    }
                }
                (v, e)
            }
        })
    }

    /// Exact window as sums of roots of unity. Needs every atom angle and
    /// rotation in rational turns and no densities or digit measures.
    pub fn fourier_exact(&self, k: usize) -> Result<Vec<RootSum>, MeasureError> {
        let ki = k as i64;
        let len = 2 * k + 1;
        Ok(match self {
            MeasureExpr::Haar { mass } => {
                let mut v = vec![RootSum::zero(); len];
                v[k] = RootSum::real(exact_real(*mass)?);
                v
            }
            MeasureExpr::Atom { angle: Angle::Turns(q), weight } => {
                let w = exact_real(*weight)?;
                (-ki..=ki).map(|n| RootSum::root(-*q * Rational64::from(n), w.clone())).collect()
            }
            MeasureExpr::Atom { .. } => return Err(MeasureError::NotExact("atom angle in radians")),
            MeasureExpr::Density { .. } => return Err(MeasureError::NotExact("density")),
            MeasureExpr::DigitBernoulli { .. } => return Err(MeasureError::NotExact("digit measure")),
            MeasureExpr::Rotate { angle: Angle::Turns(r), inner } => {
                let v = inner.fourier_exact(k)?;
                (-ki..=ki).map(|n| v[idx(k, n)].rotate(-*r * Rational64::from(n))).collect()
            }
            MeasureExpr::Rotate { .. } => return Err(MeasureError::NotExact("rotation in radians")),
            MeasureExpr::Push { n, inner } => {
                let wide = k * *n as usize;
                let v = inner.fourier_exact(wide)?;
                (-ki..=ki).map(|m| v[idx(wide, m * *n as i64)].clone()).collect()
            }
            MeasureExpr::Pull { n, inner } => {
                let narrow = k / *n as usize;
                let v = inner.fourier_exact(narrow)?;
                let n = *n as i64;
                (-ki..=ki)
                    .map(|m| if m % n == 0 { v[idx(narrow, m / n)].clone() } else { RootSum::zero() })
                    .collect()
            }
            MeasureExpr::LinComb { terms } => {
                let mut v = vec![RootSum::zero(); len];
                for (a, m) in terms {
                    let a = exact_real(*a)?;
                    for (j, c) in m.fourier_exact(k)?.into_iter().enumerate() {
                        v[j] = v[j].add(&c.scale(&a));
                    }
                }
                v
            }
        })
    }

    /// `max_{|n| <= K} |c_n - c_{nN}|`; passes when within the certified
    /// error plus `tol`.
    pub fn invariance_check(&self, n: u64, k: usize, tol: f64) -> Result<InvarianceReport, MeasureError> {
        let w = self.fourier(k * n as usize, tol)?;
        let n_i = n as i64;
        let mut dev = 0.0f64;
        let mut bound = 0.0f64;
        for m in -(k as i64)..=k as i64 {
            dev = dev.max((w.get(m) - w.get(m * n_i)).norm());
            bound = bound.max(w.err(m) + w.err(m * n_i));
        }
        Ok(InvarianceReport { n, max_deviation: dev, error_bound: bound, pass: dev <= tol + bound })
    }

    /// `h_mu = c_0 + 2 sum c_n z^n` to order `K`.
    pub fn herglotz_series(&self, k: usize, tol: f64) -> Result<TaylorSeries, MeasureError> {
        let w = self.fourier(k, tol)?;
        Ok(TaylorSeries::float(
            (0..=k as i64).map(|n| if n == 0 { w.get(0) } else { w.get(n) * 2.0 }).collect(),
        ))
    }

    /// `K_mu = (h_mu + mu(T)) / 2`.
    pub fn cauchy_series(&self, k: usize, tol: f64) -> Result<TaylorSeries, MeasureError> {
        let w = self.fourier(k, tol)?;
        Ok(TaylorSeries::float((0..=k as i64).map(|n| w.get(n)).collect()))
    }

    /// `G_mu = (1 / pi i) sum_{n >= 1} c_n / n z^n`.
    pub fn g_series(&self, k: usize, tol: f64) -> Result<TaylorSeries, MeasureError> {
        let w = self.fourier(k, tol)?;
        let pi_i = C64::new(0.0, PI);
        Ok(TaylorSeries::float(
            (0..=k as i64).map(|n| if n == 0 { C64::zero() } else { w.get(n) / (pi_i * n as f64) }).collect(),
        ))
    }

    /// `f_mu = exp(-h_mu)` split as `e^{-c_0}` times a series with value 1
    /// at 0.
    pub fn f_mu_series(&self, k: usize, tol: f64) -> Result<(f64, TaylorSeries), MeasureError> {
        let h = self.herglotz_series(k, tol)?;
        let c0 = h.coeff(0).re;
        let mut v: Vec<C64> = (0..=k).map(|n| -h.coeff(n)).collect();
        v[0] = C64::zero();
        let f = TaylorSeries::float(v).exp().expect("zero constant term");
        Ok(((-c0).exp(), f))
    }

    /// `mu[0, 2 pi y)` for `y` in `[0, 1]`, with an error bound.
    pub fn cdf(&self, y: f64, tol: f64) -> (f64, f64) {
        let y = y.clamp(0.0, 1.0);
        match self {
            MeasureExpr::Haar { mass } => (mass * y, 0.0),
            MeasureExpr::Atom { angle, weight } => {
                let q = angle.turns_f64();
                (if q < y { *weight } else { 0.0 }, 0.0)
            }
            MeasureExpr::Density { coeffs } => {
                let mut acc = coeffs[0].re * y;
                for (n, c) in coeffs.iter().enumerate().skip(1) {
                    let a = TAU * n as f64;
                    let e = C64::from_polar(1.0, a * y) - 1.0;
                    acc += 2.0 * (c * e / C64::new(0.0, a)).re;
                }
                (acc, ROUNDING * coeffs.len() as f64)
            }
            MeasureExpr::DigitBernoulli { base, weights } => digit_cdf(*base, weights, y, tol),
            MeasureExpr::Rotate { angle, inner } => {
                let a = angle.neg().turns_f64();
                inner.arc(a, a + y, tol)
            }
            MeasureExpr::Push { n, inner } => {
                let nf = *n as f64;
                let mut acc = 0.0;
                let mut err = 0.0;
                for k in 0..*n {
                    let (v, e) = inner.arc(k as f64 / nf, (k as f64 + y) / nf, tol);
                    acc += v;
                    err += e;
                }
                (acc, err)
            }
            MeasureExpr::Pull { n, inner } => {
                let nf = *n as f64;
                if y >= 1.0 {
                    return (inner.total_mass(), 0.0);
                }
                let ny = nf * y;
                let (v, e) = inner.cdf(ny.fract(), tol);
                ((ny.floor() * inner.total_mass() + v) / nf, e / nf)
            }
            MeasureExpr::LinComb { terms } => terms.iter().fold((0.0, 0.0), |(v, e), (a, m)| {
                let (vi, ei) = m.cdf(y, tol);
                (v + a * vi, e + a.abs() * ei)
            }),
        }
    }

    /// Mass of the arc from `a` to `b` turns, `0 <= a <= 1`, `a <= b <= a + 1`.
    fn arc(&self, a: f64, b: f64, tol: f64) -> (f64, f64) {
        let (fa, ea) = self.cdf(a, tol);
        if b <= 1.0 {
            let (fb, eb) = self.cdf(b, tol);
            (fb - fa, ea + eb)
        } else {
            let (fb, eb) = self.cdf(b - 1.0, tol);
            (self.total_mass() - fa + fb, ea + eb)
        }
    }

    /// `∫ x dmu` where `x` in `[0, 1)` is the angle in turns.
    fn moment(&self, tol: f64) -> (f64, f64) {
        match self {
            MeasureExpr::Haar { mass } => (mass / 2.0, 0.0),
            MeasureExpr::Atom { angle, weight } => (weight * angle.turns_f64(), 0.0),
            MeasureExpr::Density { coeffs } => {
                let mut acc = coeffs[0].re / 2.0;
                for (n, c) in coeffs.iter().enumerate().skip(1) {
                    acc += c.im / (PI * n as f64);
                }
                (acc, ROUNDING * coeffs.len() as f64)
            }
            MeasureExpr::DigitBernoulli { base, weights } => {
                let mean: f64 = weights.iter().enumerate().map(|(d, p)| d as f64 * p).sum();
                (mean / (*base as f64 - 1.0), ROUNDING)
            }
            MeasureExpr::Rotate { angle, inner } => {
                let a = angle.turns_f64();
                let (m, e) = inner.moment(tol);
                if a == 0.0 {
                    return (m, e);
                }
                let mass = inner.total_mass();
                let (f, ef) = inner.cdf(1.0 - a, tol);
                (m + a * mass - (mass - f), e + ef)
            }
            MeasureExpr::Push { n, inner } => {
                let nf = *n as f64;
                let (m, mut err) = inner.moment(tol);
                let mut acc = nf * m;
                err *= nf;
                for k in 1..*n {
                    let (v, e) = inner.arc(k as f64 / nf, (k + 1) as f64 / nf, tol);
                    acc -= k as f64 * v;
                    err += k as f64 * e;
                }
                (acc, err)
            }
            MeasureExpr::Pull { n, inner } => {
                let nf = *n as f64;
                let (m, e) = inner.moment(tol);
                ((m + inner.total_mass() * (nf - 1.0) / 2.0) / nf, e / nf)
            }
            MeasureExpr::LinComb { terms } => terms.iter().fold((0.0, 0.0), |(v, e), (a, m)| {
                let (vi, ei) = m.moment(tol);
                (v + a * vi, e + a.abs() * ei)
            }),
        }
    }

    /// `mu_0 = ∫ muhat dlambda = mu(T) - ∫ x dmu`, with an error bound.
    pub fn mu0(&self, tol: f64) -> (f64, f64) {
        let (m, e) = self.moment(tol);
        (self.total_mass() - m, e)
    }

    /// Fourier window of the mass function `theta -> mu[0, theta)`:
    /// `(c_n(mu) - mu(T)) / (2 pi i n)` off zero and `mu_0` at zero.
    pub fn muhat_fourier(&self, k: usize, tol: f64) -> Result<FourierWindow, MeasureError> {
        let w = self.fourier(k, tol)?;
        let total = self.total_mass();
        let (m0, e0) = self.mu0(tol);
        let mut values = Vec::with_capacity(2 * k + 1);
        let mut errors = Vec::with_capacity(2 * k + 1);
        for n in w.indices() {
            if n == 0 {
                values.push(C64::new(m0, 0.0));
                errors.push(e0);
            } else {
                let d = C64::new(0.0, TAU * n as f64);
                values.push((w.get(n) - total) / d);
                errors.push(w.err(n) / d.norm());
            }
        }
        Ok(FourierWindow::new(values, errors))
    }

    /// Atoms `(angle, weight)` of a purely atomic tree, unmerged.
    pub fn atoms(&self) -> Result<Vec<(Angle, f64)>, MeasureError> {
        Ok(match self {
            MeasureExpr::Atom { angle, weight } => vec![(*angle, *weight)],
            MeasureExpr::Haar { mass } if *mass == 0.0 => vec![],
            MeasureExpr::Rotate { angle, inner } => inner
                .atoms()?
                .into_iter()
                .map(|(a, w)| (add_angles(&a, angle), w))
                .collect(),
            MeasureExpr::Push { n, inner } => {
                inner.atoms()?.into_iter().map(|(a, w)| (mul_angle(&a, *n), w)).collect()
            }
            MeasureExpr::Pull { n, inner } => {
                let mut out = Vec::new();
                for (a, w) in inner.atoms()? {
                    for k in 0..*n {
                        out.push((pull_angle(&a, *n, k), w / *n as f64));
                    }
                }
                out
            }
            MeasureExpr::LinComb { terms } => {
                let mut out = Vec::new();
                for (c, m) in terms {
                    out.extend(m.atoms()?.into_iter().map(|(a, w)| (a, c * w)));
                }
                out
            }
            _ => return Err(MeasureError::NotAtomic),
        })
    }

    /// Split an atomic measure into positive and negative parts after
    /// merging atoms at equal angles.
    pub fn jordan_parts(&self) -> Result<(MeasureExpr, MeasureExpr), MeasureError> {
        let merged = merge_atoms(self.atoms()?);
        let pos = merged.iter().filter(|(_, w)| *w > 0.0).map(|(a, w)| (1.0, MeasureExpr::atom(*a, *w)));
        let neg = merged.iter().filter(|(_, w)| *w < 0.0).map(|(a, w)| (1.0, MeasureExpr::atom(*a, -*w)));
        Ok((MeasureExpr::lin_comb(pos.collect()), MeasureExpr::lin_comb(neg.collect())))
    }

    /// `h_mu(z)` with an error bound at most `tol`.
    pub fn eval_herglotz(&self, z: C64, tol: f64) -> Result<(C64, f64), MeasureError> {
        if z.norm() >= 1.0 {
            return Err(MeasureError::OutsideDisc);
        }
        Ok(match self {
            MeasureExpr::Haar { mass } => (C64::new(*mass, 0.0), 0.0),
            MeasureExpr::Atom { angle, weight } => {
                let zeta = angle.unit();
                ((zeta + z) / (zeta - z) * *weight, 0.0)
            }
            MeasureExpr::Density { coeffs } => {
                let mut acc = coeffs[0];
                let mut p = C64::new(1.0, 0.0);
                for c in &coeffs[1..] {
                    p *= z;
                    acc += c * p * 2.0;
                }
                (acc, ROUNDING * coeffs.len() as f64)
            }
            MeasureExpr::DigitBernoulli { .. } => {
                let r = z.norm();
                // |c_n| <= 1, so the tail past K is at most 2 r^{K+1} / (1 - r).
                let k = if r == 0.0 {
                    0
                } else {
                    ((tol * (1.0 - r) / 4.0).ln() / r.ln()).ceil().max(0.0) as usize
                };
                if k > MAX_HALF_WIDTH / 4 {
                    let achieved = 2.0 * r.powi(MAX_HALF_WIDTH as i32 / 4 + 1) / (1.0 - r);
                    return Err(MeasureError::Tolerance { wanted: tol, achieved });
                }
                let w = self.fourier(k, tol / 4.0)?;
                let mut acc = w.get(0);
                let mut p = C64::new(1.0, 0.0);
                let mut err = w.err(0);
                for n in 1..=k as i64 {
                    p *= z;
                    acc += w.get(n) * p * 2.0;
                    err += 2.0 * w.err(n) * p.norm();
                }
                (acc, err.min(tol / 2.0) + 2.0 * r.powi(k as i32 + 1) / (1.0 - r))
            }
            MeasureExpr::Rotate { angle, inner } => inner.eval_herglotz(z * angle.unit().conj(), tol)?,
            MeasureExpr::Pull { n, inner } => inner.eval_herglotz(z.powu(*n as u32), tol)?,
            MeasureExpr::Push { n, inner } => {
                let nf = *n as f64;
                let w = C64::from_polar(z.norm().powf(1.0 / nf), z.arg() / nf);
                let mut acc = C64::zero();
                let mut err = 0.0f64;
                for k in 0..*n {
                    let root = C64::from_polar(1.0, TAU * k as f64 / nf);
                    let (v, e) = inner.eval_herglotz(root * w, tol)?;
                    acc += v;
                    err = err.max(e);
                }
                (acc / nf, err)
            }
            MeasureExpr::LinComb { terms } => {
                let weight: f64 = terms.iter().map(|(a, _)| a.abs()).sum::<f64>().max(1.0);
                let mut acc = C64::zero();
                let mut err = 0.0;
                for (a, m) in terms {
                    let (v, e) = m.eval_herglotz(z, tol / weight)?;
                    acc += v * *a;
                    err += e * a.abs();
                }
                (acc, err)
            }
        })
    }
}

fn exact_real(x: f64) -> Result<BigRational, MeasureError> {
    BigRational::from_float(x).ok_or(MeasureError::NotExact("non-finite weight"))
}

fn add_angles(a: &Angle, b: &Angle) -> Angle {
    match (a, b) {
        (Angle::Turns(p), Angle::Turns(q)) => Angle::Turns(frac(*p + *q)),
        _ => Angle::Radians(a.radians() + b.radians()),
    }
}

fn mul_angle(a: &Angle, n: u64) -> Angle {
    match a {
        Angle::Turns(q) => Angle::Turns(frac(*q * Rational64::from(n as i64))),
        Angle::Radians(t) => Angle::Radians(t * n as f64),
    }
}

fn pull_angle(a: &Angle, n: u64, k: u64) -> Angle {
    match a {
        Angle::Turns(q) => Angle::Turns((frac(*q) + Rational64::from(k as i64)) / Rational64::from(n as i64)),
        Angle::Radians(_) => Angle::Radians((a.radians() + TAU * k as f64) / n as f64),
    }
}

/// Merge atoms at equal angles (exactly for rational turns, within 1e-12
/// turns otherwise) and drop zero weights. Sorted by angle.
pub fn merge_atoms(atoms: Vec<(Angle, f64)>) -> Vec<(Angle, f64)> {
    let mut v: Vec<(Angle, f64)> = atoms;
    v.sort_by(|a, b| a.0.turns_f64().partial_cmp(&b.0.turns_f64()).unwrap());
    let mut out: Vec<(Angle, f64)> = Vec::new();
    for (a, w) in v {
        if let Some(last) = out.last_mut() {
            let same = match (&last.0, &a) {
                (Angle::Turns(p), Angle::Turns(q)) => frac(*p) == frac(*q),
                _ => (last.0.turns_f64() - a.turns_f64()).abs() < 1e-12,
            };
            if same {
                last.1 += w;
                continue;
            }
        }
        out.push((a, w));
    }
    out.retain(|(_, w)| *w != 0.0);
    out
}

/// `P(t) = sum_d p_d e^{-2 pi i d t}`.
fn digit_char(weights: &[f64], t: f64) -> C64 {
    weights
        .iter()
        .enumerate()
        .filter(|(_, p)| **p != 0.0)
        .map(|(d, p)| C64::from_polar(*p, -TAU * (d as f64 * t).rem_euclid(1.0)))
        .sum()
}

/// Depth `D` with `exp(2 pi |nu| m N^{-D} / (N - 1)) - 1 <= tol`, where
/// `m = sum d p_d`; returns the depth and the certified bound.
pub fn digit_depth(base: u32, weights: &[f64], nu: usize, tol: f64) -> (usize, f64) {
    let mean: f64 = weights.iter().enumerate().map(|(d, p)| d as f64 * p).sum();
    let n = base as f64;
    if mean == 0.0 || nu == 0 {
        return (0, 0.0);
    }
    let mut d = 0usize;
    loop {
        let s = TAU * nu as f64 * mean * n.powi(-(d as i32)) / (n - 1.0);
        let bound = s.exp_m1();
        if bound <= tol || d > 2000 {
            return (d, bound);
        }
        d += 1;
    }
}

fn digit_window(base: u32, weights: &[f64], k: usize, tol: f64) -> (Vec<C64>, Vec<f64>) {
    let (depth, bound) = digit_depth(base, weights, k, tol);
    let n = base as f64;
    let ki = k as i64;
    let mut values = vec![C64::zero(); 2 * k + 1];
    for nu in 0..=ki {
        let mut c = C64::new(1.0, 0.0);
        let mut scale = 1.0;
        for _ in 0..depth {
            scale *= n;
            c *= digit_char(weights, nu as f64 / scale);
        }
        values[idx(k, nu)] = c;
        values[idx(k, -nu)] = c.conj();
    }
    let err = bound + ROUNDING * (depth as f64 + 1.0);
    (values, vec![err; 2 * k + 1])
}

/// `P(X < y)` for `X = sum d_k N^{-k}`, by reading off digits of `y`.
fn digit_cdf(base: u32, weights: &[f64], y: f64, tol: f64) -> (f64, f64) {
    if y >= 1.0 {
        return (1.0, 0.0);
    }
    let n = base as f64;
    let mut acc = 0.0;
    let mut w = 1.0;
    let mut y = y;
    for _ in 0..200 {
        if w <= tol * 1e-3 {
            break;
        }
        let b = ((y * n).floor() as usize).min(base as usize - 1);
        acc += w * weights[..b].iter().sum::<f64>();
        w *= weights[b];
        y = y * n - b as f64;
    }
    (acc, w + ROUNDING * 200.0)
}

/// Report of the three coefficient conditions characterising invariant
/// special measures. The square-summability verdict is a heuristic.
#[derive(Clone, Debug, Serialize)]
pub struct SpecialCoefficientsReport {
    pub hermitian_defect: f64,
    pub invariance_defect: f64,
    pub partial_sums: Vec<f64>,
    pub tail_ratio: f64,
    pub hermitian: bool,
    pub invariant: bool,
    pub square_summable: bool,
}

/// Check Hermitian symmetry, `c_{nN} = c_n`, and square-summability of
/// the coefficients of `exp(-eps sum_{n >= 1} c_n z^n)`.
///
/// `bound` caps `|c_n|`; larger values are rejected as unbounded. The
/// verdict on square-summability compares the growth over the last half of
/// the partial sums against their total.
pub fn special_coefficients_check(
    c: &FourierWindow,
    n: u64,
    eps: f64,
    bound: f64,
    tol: f64,
) -> Result<SpecialCoefficientsReport, MeasureError> {
    let k = c.half_width() as i64;
    if c.indices().any(|m| c.get(m).norm() > bound) {
        return Err(MeasureError::Unbounded(bound));
    }
    let hermitian_defect = c.hermitian_defect();
    let n_i = n as i64;
    let invariance_defect = (-(k / n_i)..=k / n_i)
        .map(|m| (c.get(m * n_i) - c.get(m)).norm())
        .fold(0.0, f64::max);
    let mut h: Vec<C64> = (0..=k).map(|m| if m == 0 { C64::zero() } else { -c.get(m) * eps }).collect();
    h[0] = C64::zero();
    let b = TaylorSeries::float(h).exp().expect("zero constant term");
    let mut partial_sums = Vec::with_capacity(k as usize + 1);
    let mut acc = 0.0;
    for m in 0..=k as usize {
        acc += b.coeff(m).norm_sqr();
        partial_sums.push(acc);
    }
    let total = *partial_sums.last().unwrap();
    let half = partial_sums[partial_sums.len() / 2];
    let tail_ratio = if total > 0.0 { (total - half) / total } else { 0.0 };
    Ok(SpecialCoefficientsReport {
        hermitian_defect,
        invariance_defect,
        partial_sums,
        tail_ratio,
        hermitian: hermitian_defect <= tol,
        invariant: invariance_defect <= tol,
        square_summable: tail_ratio < 0.05,
    })
}
