//! Entropy functions `kappa`, the kappa-entropy of finite and Cantor-type
//! subsets of the circle, kappa-variation estimates for premeasures and
//! growth profiles of analytic functions.
//!
//! Arc lengths are normalized so the whole circle has length 1; angles are
//! in turns.
//!
//! ```
//! use circlecalc::kappa::{CantorDesc, Kappa};
//!
//! let cantor = CantorDesc::new(3, vec![0, 2]).unwrap();
//! let e = cantor.entropy(&Kappa::gamma(1.0).unwrap(), 1e-12).unwrap();
//! assert!((e.value - (1.0 + 3.0 * 3f64.ln())).abs() < 1e-10);
//! ```

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::gamma::{gamma, gamma_ur};

use crate::series::C64;

/// Partial sums beyond this are taken as divergence.
pub const DIVERGENCE_CEILING: f64 = 1e6;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KappaError {
    #[error("gamma must be finite and non-negative, got {0}")]
    BadGamma(f64),
    #[error("power exponent must lie in (0, 1], got {0}")]
    BadPower(f64),
    #[error("argument {0} outside [0, 1]")]
    Domain(f64),
    #[error("cannot parse kappa spec {0:?}; use gamma=<g> or power=<a>")]
    Parse(String),
    #[error("invalid digit set: {0}")]
    Digits(String),
    #[error("no certificate after {levels} levels (partial sum {partial})")]
    NoCertificate { levels: usize, partial: f64 },
    #[error("evaluation failed: {0}")]
    Eval(String),
}

/// Concave entropy function with `kappa(0) = 0` and `kappa(1) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Kappa {
    /// `Gamma(g+1)^{-1} ∫_0^x |log t|^g dt`.
    Gamma(f64),
    /// `x^a`.
    Power(f64),
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Gamma(g) => write!(f, "gamma={g}"),
            Kappa::Power(a) => write!(f, "power={a}"),
        }
    }
}

impl FromStr for Kappa {
    type Err = KappaError;
    fn from_str(s: &str) -> Result<Self, KappaError> {
        let bad = || KappaError::Parse(s.to_string());
        let (key, val) = s.split_once('=').ok_or_else(bad)?;
        let v: f64 = val.trim().parse().map_err(|_| bad())?;
        match key.trim() {
            "gamma" => Kappa::gamma(v),
            "power" => Kappa::power(v),
            _ => Err(bad()),
        }
    }
}

fn is_small_int(g: f64) -> bool {
    g.fract() == 0.0 && g <= 170.0
}

impl Kappa {
    pub fn gamma(g: f64) -> Result<Kappa, KappaError> {
        if g.is_finite() && g >= 0.0 {
            Ok(Kappa::Gamma(g))
        } else {
            Err(KappaError::BadGamma(g))
        }
    }

    pub fn power(a: f64) -> Result<Kappa, KappaError> {
        if a > 0.0 && a <= 1.0 {
            Ok(Kappa::Power(a))
        } else {
            Err(KappaError::BadPower(a))
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, KappaError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(KappaError::Domain(x));
        }
        Ok(self.at(x))
    }

    /// `kappa(x)` for `x` already known to lie in `[0, 1]`.
    fn at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match *self {
            Kappa::Power(a) => x.powf(a),
            Kappa::Gamma(g) if is_small_int(g) => {
                let l = -x.ln();
                let mut term = 1.0;
                let mut acc = 1.0;
                for nu in 1..=g as u32 {
                    term *= l / nu as f64;
                    acc += term;
                }
                x * acc
            }
            Kappa::Gamma(g) => gamma_ur(g + 1.0, -x.ln()),
        }
    }

    /// Upper bound for `kappa(y)` given `L = log(1/y)`, valid for `L > g`.
    fn upper_from_log(&self, l: f64) -> f64 {
        match *self {
            Kappa::Power(a) => (-a * l).exp(),
            Kappa::Gamma(g) => (-l).exp() * l.powf(g) * l / (l - g) / gamma(g + 1.0),
        }
    }
}

/// Finite subset of the circle as sorted distinct angles in `[0, 1)` turns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteCircleSet {
    points: Vec<f64>,
}

impl FiniteCircleSet {
    pub fn new(points: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = points.into_iter().map(|t| t.rem_euclid(1.0)).map(|t| if t >= 1.0 { 0.0 } else { t }).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        if v.len() > 1 && v[0] + 1.0 - v[v.len() - 1] <= 1e-12 {
            v.pop();
        }
        FiniteCircleSet { points: v }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Lengths of the complementary arcs.
    pub fn gaps(&self) -> Vec<f64> {
        match self.points.len() {
            0 => vec![],
            1 => vec![1.0],
            n => {
                let mut g: Vec<f64> = self.points.windows(2).map(|w| w[1] - w[0]).collect();
                g.push(self.points[0] + 1.0 - self.points[n - 1]);
                g
            }
        }
    }

    /// `sum_I kappa(|I|)` over the complementary arcs; 0 for the empty set.
    pub fn entropy(&self, k: &Kappa) -> f64 {
        self.gaps().into_iter().map(|g| k.at(g.min(1.0))).sum()
    }

    /// `phi_N^{-1}(E)`: all `N`-th roots of every point.
    pub fn preimage(&self, n: u64) -> FiniteCircleSet {
        let nf = n as f64;
        FiniteCircleSet::new(self.points.iter().flat_map(|&t| (0..n).map(move |k| (t + k as f64) / nf)))
    }

    /// `phi_N(E ∩ [k/N, (k+1)/N])`.
    pub fn image(&self, n: u64, k: u64) -> FiniteCircleSet {
        let nf = n as f64;
        let (lo, hi) = (k as f64 / nf, (k + 1) as f64 / nf);
        let eps = 1e-12;
        let on_arc = |t: f64| (t >= lo - eps && t <= hi + eps) || (k + 1 == n && t <= eps);
        FiniteCircleSet::new(self.points.iter().copied().filter(|&t| on_arc(t)).map(|t| t * nf))
    }

    pub fn union(&self, other: &FiniteCircleSet) -> FiniteCircleSet {
        FiniteCircleSet::new(self.points.iter().chain(&other.points).copied())
    }
}

/// Cantor-type set `{ sum_k d_k N^{-k} : d_k in D }`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CantorDesc {
    base: u32,
    digits: Vec<u32>,
}

/// Certified entropy of a Cantor-type set.
#[derive(Clone, Debug, Serialize)]
pub struct CantorEntropy {
    pub value: f64,
    pub error_bound: f64,
    pub levels: usize,
    pub partial_sums: Vec<f64>,
    /// False when the partial sums passed [`DIVERGENCE_CEILING`].
    pub carleson: bool,
}

impl CantorDesc {
    pub fn new(base: u32, mut digits: Vec<u32>) -> Result<Self, KappaError> {
        digits.sort_unstable();
        digits.dedup();
        if base < 2 {
            return Err(KappaError::Digits("base must be at least 2".into()));
        }
        if digits.is_empty() || digits.len() >= base as usize {
            return Err(KappaError::Digits("need 1 <= |D| < N".into()));
        }
        if digits.iter().any(|&d| d >= base) {
            return Err(KappaError::Digits("digits must be below the base".into()));
        }
        Ok(CantorDesc { base, digits })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// Smallest and largest point of the set, in turns.
    fn extremes(&self) -> (f64, f64) {
        let n1 = self.base as f64 - 1.0;
        (self.digits[0] as f64 / n1, *self.digits.last().unwrap() as f64 / n1)
    }

    /// Scaled gaps `d_{i+1} - d_i + m - M` between neighbouring children of
    /// a cylinder; a level-`n` gap has length `N^{-n}` times one of these.
    fn child_gaps(&self) -> Vec<f64> {
        let (m, mx) = self.extremes();
        self.digits
            .windows(2)
            .map(|w| w[1] as f64 - w[0] as f64 + m - mx)
            .filter(|&g| g > 1e-12)
            .collect()
    }

    /// Gap between the largest and the smallest point across 0.
    fn wrap_gap(&self) -> f64 {
        let (m, mx) = self.extremes();
        1.0 + m - mx
    }

    /// Extreme points of all depth-`n` cylinders; its entropy increases to
    /// the entropy of the set.
    pub fn truncation(&self, depth: u32) -> FiniteCircleSet {
        let (m, mx) = self.extremes();
        let nf = self.base as f64;
        let mut lefts = vec![0.0f64];
        let mut scale = 1.0;
        for _ in 0..depth {
            scale /= nf;
            lefts = lefts.iter().flat_map(|&a| self.digits.iter().map(move |&d| a + d as f64 * scale)).collect();
        }
        FiniteCircleSet::new(lefts.iter().flat_map(|&a| [a + scale * m, a + scale * mx]))
    }

    /// `sum_I kappa(|I|)` over all complementary arcs, with a certified tail.
    pub fn entropy(&self, k: &Kappa, tol: f64) -> Result<CantorEntropy, KappaError> {
        let nf = self.base as f64;
        let dn = self.digits.len() as f64;
        let gaps = self.child_gaps();
        let wrap = self.wrap_gap();
        let mut value = if wrap > 1e-12 { k.at(wrap.min(1.0)) } else { 0.0 };
        let mut partial_sums = vec![value];
        if gaps.is_empty() {
            return Ok(CantorEntropy { value, error_bound: 0.0, levels: 0, partial_sums, carleson: true });
        }
        let gmax = gaps.iter().copied().fold(0.0, f64::max);
        let max_levels = 20_000;
        for n in 1..=max_levels {
            // Level n: |D|^{n-1} cylinders, each with the gaps N^{-n} g.
            let log_count = (n as f64 - 1.0) * dn.ln();
            let term: f64 = gaps
                .iter()
                .map(|&g| {
                    let log_y = g.ln() - n as f64 * nf.ln();
                    match k {
                        Kappa::Power(a) => (log_count + a * log_y).exp(),
                        _ => log_count.exp() * k.at(log_y.exp()),
                    }
                })
                .sum();
            value += term;
            partial_sums.push(value);
            if value > DIVERGENCE_CEILING {
                return Ok(CantorEntropy { value, error_bound: f64::INFINITY, levels: n, partial_sums, carleson: false });
            }
            if let Some(tail) = self.tail_bound(k, n, gmax, term) {
                if tail <= tol {
                    return Ok(CantorEntropy { value, error_bound: tail, levels: n, partial_sums, carleson: true });
                }
            }
        }
        Err(KappaError::NoCertificate { levels: max_levels, partial: value })
    }

    /// Bound for the levels after `n`, given the level-`n` term.
    fn tail_bound(&self, k: &Kappa, n: usize, gmax: f64, term: f64) -> Option<f64> {
        let nf = self.base as f64;
        let dn = self.digits.len() as f64;
        match *k {
            Kappa::Power(a) => {
                let rho = dn / nf.powf(a);
                (rho < 1.0).then(|| term * rho / (1.0 - rho))
            }
            Kappa::Gamma(g) => {
                // Level j terms are at most |D|^{j-1} sum_i u(N^{-j} g_i) with
                // u the upper bound for kappa; consecutive ratios of these are
                // at most (|D|/N)(1 + log N / L)^g with L = log(N^j / gmax).
                let j = n + 1;
                let l = j as f64 * nf.ln() - gmax.ln();
                if l <= g + 1.0 {
                    return None;
                }
                let rho = dn / nf * (1.0 + nf.ln() / l).powf(g);
                if rho >= 1.0 {
                    return None;
                }
                let count = self.child_gaps().len() as f64;
                let first = dn.powi(n as i32) * count * k.upper_from_log(l);
                Some(first / (1.0 - rho))
            }
        }
    }
}

/// Sums over one dyadic partition.
#[derive(Clone, Debug, Serialize)]
pub struct VariationLevel {
    pub k: u32,
    pub offset: f64,
    pub abs_sum: f64,
    pub kappa_sum: f64,
    pub ratio: f64,
    pub error_bound: f64,
}

/// `sum_j |mu(C_j)|` and the ratio to `sum_j kappa(|C_j|)` over the `2^k`
/// arcs `[(j + o)/2^k, (j + 1 + o)/2^k)`. These are lower estimates of the
/// kappa-variation norm.
///
/// `muhat` evaluates `mu[0, x)` at `x` turns in `[0, 1)` with an error.
pub fn variation_estimate<F, E>(
    muhat: F,
    total_mass: f64,
    k: &Kappa,
    levels: std::ops::RangeInclusive<u32>,
    offsets: &[f64],
) -> Result<Vec<VariationLevel>, KappaError>
where
    F: Fn(f64) -> Result<(f64, f64), E>,
    E: fmt::Display,
{
    let mut out = Vec::new();
    for level in levels {
        let m = 1u64 << level;
        let len = 1.0 / m as f64;
        for &off in offsets {
            let off = off.rem_euclid(1.0);
            let pts: Vec<(f64, f64)> = (0..=m)
                .map(|j| {
                    let x = (j as f64 + off) * len;
                    let (v, e) = if x >= 1.0 {
                        let (v, e) = muhat(x - 1.0).map_err(|e| KappaError::Eval(e.to_string()))?;
                        (v + total_mass, e)
                    } else {
                        muhat(x).map_err(|e| KappaError::Eval(e.to_string()))?
                    };
                    Ok((v, e))
                })
                .collect::<Result<_, KappaError>>()?;
            let abs_sum: f64 = pts.windows(2).map(|w| (w[1].0 - w[0].0).abs()).sum();
            let error_bound: f64 = pts.iter().map(|p| 2.0 * p.1).sum();
            let kappa_sum = m as f64 * k.at(len);
            out.push(VariationLevel { k: level, offset: off, abs_sum, kappa_sum, ratio: abs_sum / kappa_sum, error_bound });
        }
    }
    Ok(out)
}

/// Worst case of `mu(C) - a kappa(|C|)` over sampled arcs. Advisory.
#[derive(Clone, Debug, Serialize)]
pub struct BoundedReport {
    pub a: f64,
    pub samples: usize,
    pub worst_margin: f64,
    pub worst_arc: (f64, f64),
    pub pass: bool,
}

/// Sample arcs at random and short arcs near points of small period under
/// doubling and tripling, and check `mu(C) <= a kappa(|C|)`.
///
/// `arc` returns `mu[x, x + len)` for `x` in `[0, 1)` turns.
pub fn kappa_bounded_check<F, E>(arc: F, k: &Kappa, a: f64, samples: usize, seed: u64) -> Result<BoundedReport, KappaError>
where
    F: Fn(f64, f64) -> Result<f64, E>,
    E: fmt::Display,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_arc = (0.0, 0.0);
    let mut test = |x: f64, len: f64| -> Result<(), KappaError> {
        let v = arc(x, len).map_err(|e| KappaError::Eval(e.to_string()))?;
        let margin = v - a * k.at(len);
        if margin > worst {
            worst = margin;
            worst_arc = (x, len);
        }
        Ok(())
    };
    let anchors = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 5.0, 2.0 / 5.0, 1.0 / 7.0, 3.0 / 7.0, 1.0 / 9.0, 1.0 / 15.0];
    let mut used = 0;
    'outer: for depth in 4..=30 {
        let len = 0.5f64.powi(depth);
        for &x in &anchors {
            for &shift in &[0.0, -0.5, -1.0] {
                if used >= samples / 2 {
                    break 'outer;
                }
                test((x + shift * len).rem_euclid(1.0), len)?;
                used += 1;
            }
        }
    }
    while used < samples {
        let x: f64 = rng.gen();
        let len = if rng.gen_bool(0.5) { rng.gen::<f64>() } else { 0.5f64.powf(rng.gen_range(1.0..30.0)) };
        test(x, len)?;
        used += 1;
    }
    Ok(BoundedReport { a, samples: used, worst_margin: worst, worst_arc, pass: worst <= 0.0 })
}

/// `sup_theta Re h(r e^{i theta})` against `|log(1 - r)|^g`.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthRow {
    pub r: f64,
    pub sup_re: f64,
    pub error_bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthProfile {
    pub gamma: f64,
    pub rows: Vec<GrowthRow>,
    /// No new high of the ratio over the second half of the schedule.
    /// Advisory.
    pub bounded: bool,
    /// Every ratio exceeds the previous one.
    pub increasing: bool,
    /// Radius at which evaluation failed, if any; rows stop there.
    pub failed_at: Option<f64>,
}

/// Growth profile of `h` over `radii`, with the supremum taken over
/// `thetas` equally spaced angles starting at 0.
pub fn growth_class_check<F, E>(h: F, g: f64, radii: &[f64], thetas: usize) -> GrowthProfile
where
    F: Fn(C64) -> Result<(C64, f64), E>,
{
    let mut rows = Vec::new();
    let mut failed_at = None;
    'radii: for &r in radii {
        let mut sup = f64::NEG_INFINITY;
        let mut err = 0.0f64;
        for i in 0..thetas.max(1) {
            let theta = std::f64::consts::TAU * i as f64 / thetas.max(1) as f64;
            match h(C64::from_polar(r, theta)) {
                Ok((v, e)) => {
                    if v.re > sup {
                        sup = v.re;
                    }
                    err = err.max(e);
                }
                Err(_) => {
                    failed_at = Some(r);
                    break 'radii;
                }
            }
        }
        let denom = (1.0 - r).ln().abs().powf(g);
        rows.push(GrowthRow { r, sup_re: sup, error_bound: err, ratio: sup / denom });
    }
    let ratios: Vec<f64> = rows.iter().map(|row| row.ratio).collect();
    let half = ratios.len() / 2;
    let first_max = ratios[..half.max(1).min(ratios.len())].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let last_max = ratios[half..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bounded = !ratios.is_empty() && last_max <= first_max + 1e-12;
    let increasing = ratios.len() >= 2 && ratios.windows(2).all(|w| w[1] > w[0]);
    GrowthProfile { gamma: g, rows, bounded, increasing, failed_at }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_closed_forms() {
        let k1 = Kappa::gamma(1.0).unwrap();
        assert!((k1.eval(0.5).unwrap() - 0.846_573_590_279_972_6).abs() < 1e-15);
        let k0 = Kappa::gamma(0.0).unwrap();
        assert_eq!(k0.eval(0.3).unwrap(), 0.3);
        for g in [0.0, 0.5, 1.0, 2.5, 3.0] {
            assert_eq!(Kappa::gamma(g).unwrap().eval(1.0).unwrap(), 1.0);
            assert_eq!(Kappa::gamma(g).unwrap().eval(0.0).unwrap(), 0.0);
        }
        assert!(k1.eval(1.5).is_err());
    }

    #[test]
    fn parse_specs() {
        assert_eq!("gamma=1".parse::<Kappa>().unwrap(), Kappa::Gamma(1.0));
        assert_eq!("power=0.7".parse::<Kappa>().unwrap(), Kappa::Power(0.7));
        assert!("power=1.5".parse::<Kappa>().is_err());
        assert!("beta=1".parse::<Kappa>().is_err());
        let p = Kappa::power(0.7).unwrap();
        assert!((p.eval(0.5).unwrap() - 2f64.powf(-0.7)).abs() < 1e-15);
    }

    #[test]
    fn finite_entropies() {
        let k1 = Kappa::gamma(1.0).unwrap();
        assert_eq!(FiniteCircleSet::new([0.3]).entropy(&k1), 1.0);
        for n in 2..10 {
            let roots = FiniteCircleSet::new((0..n).map(|k| k as f64 / n as f64));
            assert!((roots.entropy(&Kappa::Gamma(0.0)) - 1.0).abs() < 1e-14);
            assert!((roots.entropy(&k1) - (1.0 + (n as f64).ln())).abs() < 1e-12);
        }
        let anti = FiniteCircleSet::new([0.1, 0.6]);
        assert!((anti.entropy(&k1) - 1.693_147_180_559_945).abs() < 1e-12);
        assert_eq!(FiniteCircleSet::new([]).entropy(&k1), 0.0);
    }

    #[test]
    fn preimage_and_image() {
        let e = FiniteCircleSet::new([0.0]);
        assert_eq!(e.preimage(2).points(), &[0.0, 0.5]);
        let f = FiniteCircleSet::new([0.1, 0.2, 0.7]);
        assert_eq!(f.image(2, 0).len(), 2);
        assert_eq!(f.image(2, 1).len(), 1);
    }

    #[test]
    fn cantor_series_and_truncations() {
        let c = CantorDesc::new(3, vec![0, 2]).unwrap();
        let k1 = Kappa::gamma(1.0).unwrap();
        let e = c.entropy(&k1, 1e-12).unwrap();
        let closed = 1.0 + 3.0 * 3f64.ln();
        assert!((e.value - closed).abs() <= 1e-11, "{} vs {closed}", e.value);
        let mut prev = 0.0;
        for depth in 0..10 {
            let t = c.truncation(depth).entropy(&k1);
            assert!(t >= prev - 1e-12 && t <= closed + 1e-12);
            prev = t;
        }
        // The gap left at depth 9 is at most the cylinder term 2^9 kappa(3^-9).
        assert!(closed - prev <= 512.0 * k1.eval(3f64.powi(-9)).unwrap() + 1e-12);
    }

    #[test]
    fn single_point_cantor() {
        let c = CantorDesc::new(5, vec![0]).unwrap();
        assert_eq!(c.entropy(&Kappa::Gamma(1.0), 1e-12).unwrap().value, 1.0);
    }

    #[test]
    fn power_divergence() {
        let c = CantorDesc::new(3, vec![0, 2]).unwrap();
        let crit = 2f64.ln() / 3f64.ln();
        let below = c.entropy(&Kappa::power(crit - 0.05).unwrap(), 1e-9).unwrap();
        assert!(!below.carleson);
        let above = c.entropy(&Kappa::power(crit + 0.05).unwrap(), 1e-9).unwrap();
        assert!(above.carleson);
    }

    #[test]
    fn growth_of_constant_vanishes() {
        let p = growth_class_check(|_| Ok::<_, ()>((C64::new(1.0, 0.0), 0.0)), 1.0, &[0.9, 0.99, 0.999], 8);
        assert!(p.rows.windows(2).all(|w| w[1].ratio < w[0].ratio));
        assert!(p.bounded);
    }
}
