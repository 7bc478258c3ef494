//! Cumulative mass functions `muhat(theta) = mu[0, theta)` and premeasures.
//!
//! A [`MassFunction`] is stored as
//!
//! ```text
//! muhat(theta) = L theta / 2pi + sum_j w_j [theta > theta_j] + S(theta) - S(0)
//! ```
//!
//! where `L` is the mass not carried by jumps and `S` is a real periodic
//! function with an absolutely convergent Fourier series, built from
//! trigonometric polynomials, lacunary sine series and the maps `z -> z^N`.
//! Every evaluation returns a certified error bound.
//!
//! ```
//! use circlecalc::mass::MassFunction;
//!
//! let ah = MassFunction::artin_hasse(2);
//! let (v, err) = ah.eval(std::f64::consts::FRAC_PI_2, 1e-12).unwrap();
//! assert!((v + 1.0 / std::f64::consts::PI).abs() <= err + 1e-15);
//! ```

use std::f64::consts::{PI, TAU};

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::Generators;
use crate::cyclo::frac;
use crate::fourier::{merge_atoms, Angle, FourierWindow, MeasureError, MeasureExpr};
use crate::series::{TaylorSeries, C64};

const ROUNDING: f64 = 1e-15;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MassError {
    #[error("tolerance must be positive")]
    NonPositiveTol,
    #[error("tolerance {wanted} unattainable; best bound {achieved}")]
    Tolerance { wanted: f64, achieved: f64 },
    #[error("operation needs a premeasure without jumps")]
    NotSmoothPremeasure,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("point must lie in the open unit disc")]
    OutsideDisc,
    #[error("quadrature did not converge: estimate {0}")]
    Quadrature(f64),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Real periodic function with absolutely summable Fourier coefficients.
/// Angles are in turns. The mean is irrelevant and reported as zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SmoothExpr {
    /// `sum_{n >= 1} 2 Re(c_n e^{2 pi i n x})`; `coeffs[0]` is ignored.
    Trig { coeffs: Vec<C64> },
    /// `-(1/pi) sum_{k >= 0} N^{-k} sin(2 pi N^k x)`.
    Lacunary { base: u64 },
    /// `S(N x) / N`.
    Pull { n: u64, inner: Box<SmoothExpr> },
    /// `sum_k S((x + k) / N)`.
    Push { n: u64, inner: Box<SmoothExpr> },
    /// `S(x + a)`.
    Rotate { angle: Angle, inner: Box<SmoothExpr> },
    /// `sum_{N in S} S(N x) / N`.
    Psi { gens: Generators, inner: Box<SmoothExpr> },
    LinComb { terms: Vec<(f64, SmoothExpr)> },
}

/// Smallest cutoff `c` with `bound * sum_{N in S, N > c} 1/N <= target`.
fn psi_cutoff(gens: &Generators, bound: f64, target: f64) -> Result<u64, MassError> {
    if bound == 0.0 {
        return Ok(1);
    }
    let mut c = 1u64;
    loop {
        let tail = bound * (gens.reciprocal_tail(c) + 4.0 * ROUNDING);
        if tail <= target {
            return Ok(c);
        }
        if c > 1 << 60 {
            return Err(MassError::Tolerance { wanted: target, achieved: tail });
        }
        c *= 2;
    }
}

impl SmoothExpr {
    /// Upper bound for `sum_{n != 0} |c_n|`, hence for `sup |S|`.
    pub fn abs_sum(&self) -> f64 {
        match self {
            SmoothExpr::Trig { coeffs } => 2.0 * coeffs.iter().skip(1).map(|c| c.norm()).sum::<f64>(),
            SmoothExpr::Lacunary { base } => *base as f64 / ((*base as f64 - 1.0) * PI),
            SmoothExpr::Pull { n, inner } => inner.abs_sum() / *n as f64,
            SmoothExpr::Push { n, inner } => inner.abs_sum() * *n as f64,
            SmoothExpr::Rotate { inner, .. } => inner.abs_sum(),
            SmoothExpr::Psi { gens, inner } => inner.abs_sum() * gens.reciprocal_sum(),
            SmoothExpr::LinComb { terms } => terms.iter().map(|(a, s)| a.abs() * s.abs_sum()).sum(),
        }
    }

    /// `c_n(S)` for `n != 0`; zero at `n = 0`.
    pub fn coeff(&self, n: i64) -> C64 {
        if n < 0 {
            return self.coeff(-n).conj();
        }
        if n == 0 {
            return C64::zero();
        }
        match self {
            SmoothExpr::Trig { coeffs } => coeffs.get(n as usize).copied().unwrap_or_default(),
            SmoothExpr::Lacunary { base } => {
                let b = *base as i64;
                let mut m = n;
                let mut scale = 1.0;
                while m % b == 0 {
                    m /= b;
                    scale /= b as f64;
                }
                if m == 1 {
                    C64::new(0.0, scale / TAU)
                } else {
                    C64::zero()
                }
            }
            SmoothExpr::Pull { n: k, inner } => {
                let k = *k as i64;
                if n % k == 0 {
                    inner.coeff(n / k) / k as f64
                } else {
                    C64::zero()
                }
            }
            SmoothExpr::Push { n: k, inner } => inner.coeff(n * *k as i64) * *k as f64,
            SmoothExpr::Rotate { angle, inner } => inner.coeff(n) * char_turns(angle, n),
            SmoothExpr::Psi { gens, inner } => gens
                .enumerate(n as u64)
                .into_iter()
                .filter(|&m| n as u64 % m == 0)
                .map(|m| inner.coeff(n / m as i64) / m as f64)
                .sum(),
            SmoothExpr::LinComb { terms } => terms.iter().map(|(a, s)| s.coeff(n) * *a).sum(),
        }
    }

    /// `S(x)` at `x` turns with an error bound at most `tol`.
    pub fn eval(&self, x: f64, tol: f64) -> Result<(f64, f64), MassError> {
        let x = x.rem_euclid(1.0);
        Ok(match self {
            SmoothExpr::Trig { coeffs } => {
                let mut acc = 0.0;
                for (n, c) in coeffs.iter().enumerate().skip(1) {
                    acc += 2.0 * (c * C64::from_polar(1.0, TAU * (n as f64 * x).rem_euclid(1.0))).re;
                }
                (acc, ROUNDING * coeffs.len() as f64 * (1.0 + self.abs_sum()))
            }
            SmoothExpr::Lacunary { base } => {
                let b = *base as f64;
                let mut acc = 0.0;
                let mut scale = 1.0;
                let mut y = x;
                let mut k = 0;
                // Tail after the current term: scale / ((b - 1) pi).
                while scale / ((b - 1.0) * PI) > tol / 2.0 {
                    acc -= scale * (TAU * y).sin() / PI;
                    scale /= b;
                    y = (y * b).rem_euclid(1.0);
                    k += 1;
                    if k > 2000 {
                        return Err(MassError::Tolerance { wanted: tol, achieved: scale });
                    }
                }
                (acc, scale / ((b - 1.0) * PI) + ROUNDING * (k as f64 + 1.0))
            }
            SmoothExpr::Pull { n, inner } => {
                let nf = *n as f64;
                let (v, e) = inner.eval((x * nf).rem_euclid(1.0), tol * nf)?;
                (v / nf, e / nf)
            }
            SmoothExpr::Push { n, inner } => {
                let nf = *n as f64;
                let mut acc = 0.0;
                let mut err = 0.0;
                for k in 0..*n {
                    let (v, e) = inner.eval((x + k as f64) / nf, tol / nf)?;
                    acc += v;
                    err += e;
                }
                (acc, err)
            }
            SmoothExpr::Rotate { angle, inner } => inner.eval(x + angle.turns_f64(), tol)?,
            SmoothExpr::Psi { gens, inner } => {
                let cut = psi_cutoff(gens, inner.abs_sum(), tol / 2.0)?;
                let inner_tol = tol / (2.0 * gens.reciprocal_sum());
                let mut acc = 0.0;
                let mut err = inner.abs_sum() * (gens.reciprocal_tail(cut) + 4.0 * ROUNDING);
                for m in gens.enumerate(cut) {
                    let mf = m as f64;
                    let (v, e) = inner.eval((x * mf).rem_euclid(1.0), inner_tol * mf)?;
                    acc += v / mf;
                    err += e / mf;
                }
                (acc, err)
            }
            SmoothExpr::LinComb { terms } => {
                let weight = terms.iter().map(|(a, _)| a.abs()).sum::<f64>().max(1.0);
                let mut acc = 0.0;
                let mut err = 0.0;
                for (a, s) in terms {
                    let (v, e) = s.eval(x, tol / weight)?;
                    acc += a * v;
                    err += a.abs() * e;
                }
                (acc, err)
            }
        })
    }

    /// Bound for `|2 pi i n c_n|`, the coefficients of the induced measure.
    fn measure_coeff_bound(&self) -> Option<f64> {
        match self {
            SmoothExpr::Trig { coeffs } => Some(
                coeffs.iter().enumerate().skip(1).map(|(n, c)| TAU * n as f64 * c.norm()).fold(0.0, f64::max),
            ),
            SmoothExpr::Lacunary { .. } => Some(1.0),
            SmoothExpr::Pull { inner, .. }
            | SmoothExpr::Push { inner, .. }
            | SmoothExpr::Rotate { inner, .. } => inner.measure_coeff_bound(),
            SmoothExpr::Psi { .. } => None,
            SmoothExpr::LinComb { terms } => {
                terms.iter().map(|(a, s)| s.measure_coeff_bound().map(|b| a.abs() * b)).sum()
            }
        }
    }

    /// `sum_{n >= 1} 2 (2 pi i n c_n) z^n`, the Herglotz transform of the
    /// measure `S' dtheta / 2pi`, with an error bound.
    pub fn eval_herglotz(&self, z: C64, tol: f64) -> Result<(C64, f64), MassError> {
        let r = z.norm();
        if r >= 1.0 {
            return Err(MassError::OutsideDisc);
        }
        Ok(match self {
            SmoothExpr::Trig { coeffs } => {
                let mut acc = C64::zero();
                let mut p = C64::new(1.0, 0.0);
                for (n, c) in coeffs.iter().enumerate().skip(1) {
                    p *= z;
                    acc += c * C64::new(0.0, 2.0 * TAU * n as f64) * p;
                }
                (acc, ROUNDING * coeffs.len() as f64)
            }
            SmoothExpr::Lacunary { base } => {
                let mut acc = C64::zero();
                let mut w = z;
                let mut k = 0;
                loop {
                    acc -= w * 2.0;
                    let next = w.powu(*base as u32);
                    let tail = 2.0 * next.norm() / (1.0 - r);
                    w = next;
                    k += 1;
                    if tail <= tol || k > 200 {
                        break (acc, tail + ROUNDING * k as f64);
                    }
                }
            }
            SmoothExpr::Pull { n, inner } => inner.eval_herglotz(z.powu(*n as u32), tol)?,
            SmoothExpr::Push { n, inner } => {
                let nf = *n as f64;
                let w = C64::from_polar(r.powf(1.0 / nf), z.arg() / nf);
                let mut acc = C64::zero();
                let mut err = 0.0f64;
                for k in 0..*n {
                    let (v, e) = inner.eval_herglotz(w * C64::from_polar(1.0, TAU * k as f64 / nf), tol)?;
                    acc += v;
                    err = err.max(e);
                }
                (acc / nf, err)
            }
            SmoothExpr::Rotate { angle, inner } => inner.eval_herglotz(z * angle.unit(), tol)?,
            SmoothExpr::Psi { gens, inner } => {
                let b = inner
                    .measure_coeff_bound()
                    .ok_or_else(|| MassError::Unsupported("nested psi in a Herglotz evaluation".into()))?;
                // |h(w)| <= 2b|w| / (1 - |w|) and sum_{m > c} r^m <= r^{c+1} / (1 - r).
                let mut cut = 1u64;
                let tail = |c: u64| 2.0 * b * r.powf(c as f64 + 1.0) / (1.0 - r).powi(2);
                while tail(cut) > tol / 2.0 {
                    cut *= 2;
                    if cut > 1 << 40 {
                        return Err(MassError::Tolerance { wanted: tol, achieved: tail(cut) });
                    }
                }
                let terms = gens.enumerate(cut);
                let mut acc = C64::zero();
                let mut err = tail(cut);
                for m in &terms {
                    let (v, e) = inner.eval_herglotz(z.powu(*m as u32), tol / (2.0 * terms.len() as f64))?;
                    acc += v;
                    err += e;
                }
                (acc, err)
            }
            SmoothExpr::LinComb { terms } => {
                let weight = terms.iter().map(|(a, _)| a.abs()).sum::<f64>().max(1.0);
                let mut acc = C64::zero();
                let mut err = 0.0;
                for (a, s) in terms {
                    let (v, e) = s.eval_herglotz(z, tol / weight)?;
                    acc += v * *a;
                    err += a.abs() * e;
                }
                (acc, err)
            }
        })
    }
}

/// `e^{2 pi i n a}`.
fn char_turns(a: &Angle, n: i64) -> C64 {
    let t = match a {
        Angle::Turns(q) => frac(*q * Rational64::from(n)).to_f64().unwrap(),
        Angle::Radians(t) => (t * n as f64 / TAU).rem_euclid(1.0),
    };
    C64::from_polar(1.0, TAU * t)
}

/// `a > b` as positions in `[0, 1)` turns, exact for rational turns.
fn angle_gt(a: &Angle, b: &Angle) -> bool {
    match (a, b) {
        (Angle::Turns(p), Angle::Turns(q)) => frac(*p) > frac(*q),
        _ => a.turns_f64() > b.turns_f64(),
    }
}

fn angle_eq(a: &Angle, b: &Angle) -> bool {
    match (a, b) {
        (Angle::Turns(p), Angle::Turns(q)) => frac(*p) == frac(*q),
        _ => (a.turns_f64() - b.turns_f64()).abs() < 1e-12,
    }
}

fn shift(a: &Angle, b: &Angle, sign: f64) -> Angle {
    match (a, b) {
        (Angle::Turns(p), Angle::Turns(q)) => {
            Angle::Turns(frac(if sign > 0.0 { *p + *q } else { *p - *q }))
        }
        _ => Angle::Radians(a.radians() + sign * b.radians()),
    }
}

/// Arcs of the circle, counterclockwise and half-open.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arc {
    /// `[start, end)`, wrapping through 0 when `end < start`; empty when
    /// the endpoints agree.
    HalfOpen { start: Angle, end: Angle },
    Point(Angle),
    Full,
}

impl Arc {
    pub fn new(start: Angle, end: Angle) -> Arc {
        Arc::HalfOpen { start, end }
    }

    /// Length with the whole circle normalized to 1.
    pub fn length(&self) -> f64 {
        match self {
            Arc::HalfOpen { start, end } => match (start, end) {
                (Angle::Turns(a), Angle::Turns(b)) => frac(*b - *a).to_f64().unwrap(),
                _ => (end.turns_f64() - start.turns_f64()).rem_euclid(1.0),
            },
            Arc::Point(_) => 0.0,
            Arc::Full => 1.0,
        }
    }
}

/// `theta -> mu[0, theta)` for a real measure or premeasure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassFunction {
    total_mass: f64,
    jumps: Vec<(Angle, f64)>,
    smooth: Option<SmoothExpr>,
}

/// Outcome of checking `muhat(eta^N) = sum_{zeta^N = 1} muhat(zeta eta) - c_0`.
#[derive(Clone, Debug, Serialize)]
pub struct FunctionalEqReport {
    pub n: u64,
    pub max_residual: f64,
    pub c0_from_mu0: f64,
    pub c0_from_sum: f64,
    pub skipped: Vec<f64>,
    pub checked: usize,
    pub error_bound: f64,
    pub pass: bool,
}

/// Scaled radial values `(1 - r)/2 Re h(r eta)` along `r_k = 1 - 2^{-k}`.
#[derive(Clone, Debug, Serialize)]
pub struct RadialReport {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Last value, when the last three differences each shrank by a factor
    /// of at least 0.6.
    pub limit: Option<f64>,
    pub limit_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub r: f64,
    pub integral: f64,
    pub closed_form: f64,
    pub quadrature_error: f64,
    pub min_sample: f64,
    pub odd_defect: f64,
    pub pass: bool,
}

impl MassFunction {
    pub fn new(total_mass: f64, jumps: Vec<(Angle, f64)>, smooth: Option<SmoothExpr>) -> Self {
        MassFunction { total_mass, jumps: merge_atoms(jumps), smooth }
    }

    /// `m theta / 2pi`.
    pub fn haar(m: f64) -> Self {
        MassFunction::new(m, vec![], None)
    }

    /// Premeasure with no atoms and no linear part.
    pub fn premeasure(smooth: SmoothExpr) -> Self {
        MassFunction::new(0.0, vec![], Some(smooth))
    }

    /// `-(1/pi) sum_k N^{-k} sin(N^k theta)`, whose Herglotz transform is
    /// `-2 sum_k z^{N^k}`.
    pub fn artin_hasse(n: u64) -> Self {
        MassFunction::premeasure(SmoothExpr::Lacunary { base: n })
    }

    /// `-sin(theta) / pi`.
    pub fn neg_sine() -> Self {
        MassFunction::premeasure(SmoothExpr::Trig { coeffs: vec![C64::zero(), C64::new(0.0, 1.0 / TAU)] })
    }

    pub fn zero_like(_: &MassFunction) -> Self {
        MassFunction::haar(0.0)
    }

    /// Mass function of a tree of atoms, Haar measures and densities.
    pub fn from_measure(mu: &MeasureExpr) -> Result<Self, MassError> {
        Ok(match mu {
            MeasureExpr::Haar { mass } => MassFunction::haar(*mass),
            MeasureExpr::Atom { angle, weight } => MassFunction::new(*weight, vec![(*angle, *weight)], None),
            MeasureExpr::Density { coeffs } => {
                let s = coeffs
                    .iter()
                    .enumerate()
                    .map(|(n, c)| if n == 0 { C64::zero() } else { c / C64::new(0.0, TAU * n as f64) })
                    .collect();
                MassFunction::new(coeffs[0].re, vec![], Some(SmoothExpr::Trig { coeffs: s }))
            }
            MeasureExpr::DigitBernoulli { .. } => {
                return Err(MassError::Unsupported("digit measures have no absolutely convergent mass function".into()))
            }
            MeasureExpr::Rotate { angle, inner } => MassFunction::from_measure(inner)?.act_rotation(&angle.neg()),
            MeasureExpr::Push { n, inner } => MassFunction::from_measure(inner)?.act_push(*n),
            MeasureExpr::Pull { n, inner } => MassFunction::from_measure(inner)?.act_pull(*n),
            MeasureExpr::LinComb { terms } => {
                let mut acc = MassFunction::haar(0.0);
                for (a, m) in terms {
                    acc = acc.add(&MassFunction::from_measure(m)?.scale(*a));
                }
                acc
            }
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn jumps(&self) -> &[(Angle, f64)] {
        &self.jumps
    }

    pub fn smooth(&self) -> Option<&SmoothExpr> {
        self.smooth.as_ref()
    }

    /// Mass outside the jumps and the smooth part: the Haar component.
    fn linear(&self) -> f64 {
        self.total_mass - self.jumps.iter().map(|(_, w)| w).sum::<f64>()
    }

    /// Atoms of the underlying measure; the smooth part has none.
    pub fn atoms(&self) -> Vec<(Angle, f64)> {
        self.jumps.clone()
    }

    pub fn add(&self, other: &MassFunction) -> MassFunction {
        let mut jumps = self.jumps.clone();
        jumps.extend(other.jumps.iter().copied());
        let smooth = match (&self.smooth, &other.smooth) {
            (None, s) | (s, None) => s.clone(),
            (Some(a), Some(b)) => Some(SmoothExpr::LinComb { terms: vec![(1.0, a.clone()), (1.0, b.clone())] }),
        };
        MassFunction::new(self.total_mass + other.total_mass, jumps, smooth)
    }

    pub fn scale(&self, a: f64) -> MassFunction {
        MassFunction::new(
            a * self.total_mass,
            self.jumps.iter().map(|(t, w)| (*t, a * w)).collect(),
            self.smooth.clone().map(|s| SmoothExpr::LinComb { terms: vec![(a, s)] }),
        )
    }

    pub fn sub(&self, other: &MassFunction) -> MassFunction {
        self.add(&other.scale(-1.0))
    }

    /// `muhat(theta)` with `theta` reduced into `[0, 2pi)`; the error is at
    /// most `tol`.
    pub fn eval(&self, theta: f64, tol: f64) -> Result<(f64, f64), MassError> {
        self.eval_at(&Angle::Radians(theta), tol)
    }

    pub fn eval_at(&self, a: &Angle, tol: f64) -> Result<(f64, f64), MassError> {
        if !(tol > 0.0) {
            return Err(MassError::NonPositiveTol);
        }
        let x = a.turns_f64();
        let mut v = self.linear() * x;
        for (t, w) in &self.jumps {
            if angle_gt(a, t) {
                v += w;
            }
        }
        let mut err = ROUNDING * (1.0 + self.jumps.len() as f64);
        if let Some(s) = &self.smooth {
            let (sx, ex) = s.eval(x, 0.45 * tol)?;
            let (s0, e0) = s.eval(0.0, 0.45 * tol)?;
            v += sx - s0;
            err += ex + e0;
        }
        Ok((v, err))
    }

    /// `mu(C)`.
    pub fn arc_measure(&self, c: &Arc, tol: f64) -> Result<(f64, f64), MassError> {
        match c {
            Arc::Full => Ok((self.total_mass, 0.0)),
            Arc::Point(a) => {
                Ok((self.jumps.iter().filter(|(t, _)| angle_eq(t, a)).map(|(_, w)| w).sum(), 0.0))
            }
            Arc::HalfOpen { start, end } => {
                let (fa, ea) = self.eval_at(start, tol / 2.0)?;
                let (fb, eb) = self.eval_at(end, tol / 2.0)?;
                if angle_gt(start, end) {
                    Ok((self.total_mass - fa + fb, ea + eb))
                } else {
                    Ok((fb - fa, ea + eb))
                }
            }
        }
    }

    /// `theta -> muhat(theta + alpha) - muhat(alpha)`: the mass function of
    /// the measure rotated by `-alpha`.
    pub fn act_rotation(&self, alpha: &Angle) -> MassFunction {
        if alpha.is_zero() {
            return self.clone();
        }
        MassFunction::new(
            self.total_mass,
            self.jumps.iter().map(|(t, w)| (shift(t, alpha, -1.0), *w)).collect(),
            self.smooth.clone().map(|s| SmoothExpr::Rotate { angle: *alpha, inner: Box::new(s) }),
        )
    }

    /// Mass function of the averaged pullback `N^* mu`.
    pub fn act_pull(&self, n: u64) -> MassFunction {
        if n == 1 {
            return self.clone();
        }
        let mut jumps = Vec::with_capacity(self.jumps.len() * n as usize);
        for (t, w) in &self.jumps {
            for k in 0..n {
                let a = match t {
                    Angle::Turns(q) => Angle::Turns((frac(*q) + Rational64::from(k as i64)) / Rational64::from(n as i64)),
                    _ => Angle::Radians((t.radians() + TAU * k as f64) / n as f64),
                };
                jumps.push((a, w / n as f64));
            }
        }
        MassFunction::new(
            self.total_mass,
            jumps,
            self.smooth.clone().map(|s| SmoothExpr::Pull { n, inner: Box::new(s) }),
        )
    }

    /// Mass function of the pushforward `N_* mu`.
    pub fn act_push(&self, n: u64) -> MassFunction {
        if n == 1 {
            return self.clone();
        }
        let jumps = self
            .jumps
            .iter()
            .map(|(t, w)| {
                let a = match t {
                    Angle::Turns(q) => Angle::Turns(frac(*q * Rational64::from(n as i64))),
                    _ => Angle::Radians(t.radians() * n as f64),
                };
                (a, *w)
            })
            .collect();
        MassFunction::new(
            self.total_mass,
            jumps,
            self.smooth.clone().map(|s| SmoothExpr::Push { n, inner: Box::new(s) }),
        )
    }

    /// Sum of the `N` rotations by `N`-th roots of unity.
    pub fn act_trace(&self, n: u64) -> MassFunction {
        (0..n as i64).fold(MassFunction::haar(0.0), |acc, k| {
            acc.add(&self.act_rotation(&Angle::turns(k, n as i64)))
        })
    }

    /// `muhat . Phi_S = sum_d (-1)^{|d|} muhat . phi_{prod d}`.
    pub fn phi_s(&self, s: &Generators) -> MassFunction {
        s.subset_products()
            .into_iter()
            .fold(MassFunction::haar(0.0), |acc, (sign, p)| acc.add(&self.act_pull(p).scale(sign as f64)))
    }

    /// `muhat . prod_i (1 - e_{N_i})` with `e_N = Tr_N / N`.
    pub fn omega_s(&self, s: &Generators) -> MassFunction {
        let mut acc = self.clone();
        for &n in s.as_slice() {
            acc = acc.sub(&acc.act_trace(n).scale(1.0 / n as f64));
        }
        acc
    }

    /// `sum_{N in S} sigmahat . phi_N` for a premeasure without jumps.
    pub fn psi_s(&self, s: &Generators, tol: f64) -> Result<MassFunction, MassError> {
        if !(tol > 0.0) {
            return Err(MassError::NonPositiveTol);
        }
        if self.total_mass != 0.0 || !self.jumps.is_empty() {
            return Err(MassError::NotSmoothPremeasure);
        }
        let Some(inner) = &self.smooth else {
            return Ok(self.clone());
        };
        psi_cutoff(s, inner.abs_sum(), tol / 2.0)?;
        Ok(MassFunction::premeasure(SmoothExpr::Psi { gens: s.clone(), inner: Box::new(inner.clone()) }))
    }

    /// `mu_0 = ∫ muhat dlambda`.
    pub fn mu0(&self, tol: f64) -> Result<(f64, f64), MassError> {
        let mut v = self.linear() / 2.0;
        for (t, w) in &self.jumps {
            v += w * (1.0 - t.turns_f64());
        }
        let mut err = ROUNDING * (1.0 + self.jumps.len() as f64);
        if let Some(s) = &self.smooth {
            let (s0, e0) = s.eval(0.0, tol)?;
            v -= s0;
            err += e0;
        }
        Ok((v, err))
    }

    /// `c_n(mu)` of the underlying measure or premeasure.
    pub fn measure_coeff(&self, n: i64) -> C64 {
        if n == 0 {
            return C64::new(self.total_mass, 0.0);
        }
        let mut c: C64 = self.jumps.iter().map(|(t, w)| char_turns(t, -n) * *w).sum();
        if let Some(s) = &self.smooth {
            c += s.coeff(n) * C64::new(0.0, TAU * n as f64);
        }
        c
    }

    /// Fourier window of `muhat` itself.
    pub fn muhat_fourier(&self, k: usize, tol: f64) -> Result<FourierWindow, MassError> {
        let (m0, e0) = self.mu0(tol)?;
        let total = self.total_mass;
        let ki = k as i64;
        let values: Vec<C64> = (-ki..=ki)
            .map(|n| {
                if n == 0 {
                    C64::new(m0, 0.0)
                } else {
                    (self.measure_coeff(n) - total) / C64::new(0.0, TAU * n as f64)
                }
            })
            .collect();
        let mut errors = vec![ROUNDING; 2 * k + 1];
        errors[k] = e0;
        Ok(FourierWindow::new(values, errors))
    }

    /// `h_mu = mu(T) + 2 sum_{n >= 1} c_n(mu) z^n` to order `K`.
    pub fn herglotz_premeasure(&self, k: usize) -> TaylorSeries {
        TaylorSeries::float(
            (0..=k as i64).map(|n| if n == 0 { self.measure_coeff(0) } else { self.measure_coeff(n) * 2.0 }).collect(),
        )
    }

    /// `h_mu(z)` for `|z| < 1`.
    pub fn eval_herglotz(&self, z: C64, tol: f64) -> Result<(C64, f64), MassError> {
        if z.norm() >= 1.0 {
            return Err(MassError::OutsideDisc);
        }
        let mut v = C64::new(self.linear(), 0.0);
        for (t, w) in &self.jumps {
            let zeta = t.unit();
            v += (zeta + z) / (zeta - z) * *w;
        }
        let mut err = ROUNDING * (1.0 + self.jumps.len() as f64) / (1.0 - z.norm());
        if let Some(s) = &self.smooth {
            let (hs, e) = s.eval_herglotz(z, tol)?;
            v += hs;
            err += e;
        }
        Ok((v, err))
    }

    /// Residual of `muhat(N theta) = sum_k muhat(theta + 2 pi k/N) - c_0`
    /// over `grid`, with `c_0` taken as `(N - 1) mu_0` and compared with
    /// `sum_k muhat(2 pi k / N)`. Grid points where any of the evaluation
    /// points meets a jump are skipped and listed.
    pub fn functional_eq_check(&self, n: u64, grid: &[f64], tol: f64) -> Result<FunctionalEqReport, MassError> {
        if !(tol > 0.0) {
            return Err(MassError::NonPositiveTol);
        }
        let nf = n as f64;
        let each = tol / (4.0 * (nf + 2.0));
        let (m0, e_m0) = self.mu0(each)?;
        let c0_from_mu0 = (nf - 1.0) * m0;
        let mut c0_from_sum = 0.0;
        let mut err_sum = 0.0;
        for k in 0..n {
            let (v, e) = self.eval(TAU * k as f64 / nf, each)?;
            c0_from_sum += v;
            err_sum += e;
        }
        let near_jump = |theta: f64| {
            let x = (theta / TAU).rem_euclid(1.0);
            self.jumps.iter().any(|(t, _)| {
                let d = (x - t.turns_f64()).abs();
                d.min(1.0 - d) < 1e-9
            })
        };
        let mut skipped = Vec::new();
        let mut max_residual = 0.0f64;
        let mut max_err = 0.0f64;
        let mut checked = 0;
        for &theta in grid {
            let pts: Vec<f64> = (0..n).map(|k| theta + TAU * k as f64 / nf).collect();
            if near_jump(nf * theta) || pts.iter().any(|&p| near_jump(p)) {
                skipped.push(theta);
                continue;
            }
            let (lhs, mut err) = self.eval(nf * theta, each)?;
            let mut rhs = -c0_from_mu0;
            for p in pts {
                let (v, e) = self.eval(p, each)?;
                rhs += v;
                err += e;
            }
            max_residual = max_residual.max((lhs - rhs).abs());
            max_err = max_err.max(err + (nf - 1.0) * e_m0);
            checked += 1;
        }
        let c0_gap = (c0_from_mu0 - c0_from_sum).abs();
        let error_bound = max_err.max((nf - 1.0) * e_m0 + err_sum);
        Ok(FunctionalEqReport {
            n,
            max_residual,
            c0_from_mu0,
            c0_from_sum,
            skipped,
            checked,
            error_bound,
            pass: max_residual <= tol && c0_gap <= tol,
        })
    }
}

/// Scaled radial values `(1 - r_k)/2 Re h(r_k eta)` for `r_k = 1 - 2^{-k}`.
///
/// `h` returns a value and an error bound for a requested tolerance.
pub fn radial_atom<F>(h: F, eta: &Angle, ks: std::ops::RangeInclusive<u32>) -> Result<RadialReport, MassError>
where
    F: Fn(C64, f64) -> Result<(C64, f64), MassError>,
{
    let mut radii = Vec::new();
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for k in ks {
        let r = 1.0 - 0.5f64.powi(k as i32);
        let (v, e) = h(eta.unit() * r, 1e-9)?;
        let s = (1.0 - r) / 2.0;
        radii.push(r);
        values.push(s * v.re);
        errors.push(s * e);
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut limit = None;
    let mut limit_error = f64::INFINITY;
    if diffs.len() >= 4 {
        let tail = &diffs[diffs.len() - 4..];
        let decays = tail.windows(2).all(|w| w[1] <= 0.6 * w[0] + 1e-15);
        if decays {
            let last = *diffs.last().unwrap();
            limit = values.last().copied();
            limit_error = 1.5 * last + errors.last().unwrap();
        }
    }
    Ok(RadialReport { radii, values, errors, limit, limit_error })
}

/// `psi_r(theta) = r (1 - r^2) sin(theta) / |e^{i theta} - r|^4`.
pub fn psi_kernel(r: f64, theta: f64) -> f64 {
    let d = (C64::from_polar(1.0, theta) - r).norm_sqr();
    r * (1.0 - r * r) * theta.sin() / (d * d)
}

/// Compare `∫_0^pi psi_r` with `2r / (1 - r^2)` and check positivity on
/// `[0, pi]` and oddness on samples.
pub fn kernel_psi_check(r: f64, tol: f64) -> Result<KernelReport, MassError> {
    if !(0.0 < r && r < 1.0) {
        return Err(MassError::Unsupported("kernel radius must lie in (0, 1)".into()));
    }
    // The kernel peaks near theta ~ 1 - r; split there so each piece is smooth at scale.
    let w = (1.0 - r).max(1e-6);
    let mut cuts = vec![0.0];
    let mut c = w;
    while c < PI {
        cuts.push(c);
        c *= 4.0;
    }
    cuts.push(PI);
    let mut integral = 0.0;
    let mut qerr = 0.0;
    for pair in cuts.windows(2) {
        let out = quadrature::double_exponential::integrate(
            |t| psi_kernel(r, t),
            pair[0],
            pair[1],
            tol / cuts.len() as f64,
        );
        integral += out.integral;
        qerr += out.error_estimate;
    }
    if !qerr.is_finite() || qerr > 10.0 * tol {
        return Err(MassError::Quadrature(qerr));
    }
    let closed_form = 2.0 * r / (1.0 - r * r);
    let samples: Vec<f64> = (0..=1000).map(|i| PI * i as f64 / 1000.0).collect();
    let min_sample = samples.iter().map(|&t| psi_kernel(r, t)).fold(f64::INFINITY, f64::min);
    let odd_defect = samples
        .iter()
        .map(|&t| (psi_kernel(r, -t) + psi_kernel(r, t)).abs())
        .fold(0.0, f64::max);
    let pass = (integral - closed_form).abs() <= tol * closed_form.max(1.0) && min_sample >= 0.0 && odd_defect <= 1e-12 * closed_form.max(1.0);
    Ok(KernelReport { r, integral, closed_form, quadrature_error: qerr, min_sample, odd_defect, pass })
}
