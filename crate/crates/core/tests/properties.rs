use std::f64::consts::TAU;

use circlecalc::algebra::{AlgebraElem, Generators};
use circlecalc::fourier::{Angle, MeasureExpr};
use circlecalc::kappa::{FiniteCircleSet, Kappa};
use circlecalc::mass::{MassFunction, SmoothExpr};
use circlecalc::series::{cq, Cq, ScalarKind, TaylorScalar, TaylorSeries, C64};
use circlecalc::witt::WittVec;
use num_rational::Rational64;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn unit_series(coeffs: Vec<(i64, i64)>) -> TaylorSeries {
    let mut v = vec![Cq::one()];
    v.extend(coeffs.into_iter().map(|(n, d)| cq(n, d)));
    TaylorSeries::rational(v)
}

fn small_ratios(len: usize) -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((-3i64..=3, 1i64..=4), len)
}

fn atoms() -> impl Strategy<Value = Vec<(i64, i64, f64)>> {
    prop::collection::vec((0i64..30, 1i64..=30, -2.0f64..2.0), 1..5)
}

fn atomic(a: &[(i64, i64, f64)]) -> MeasureExpr {
    MeasureExpr::lin_comb(a.iter().map(|&(n, d, w)| (1.0, MeasureExpr::atom_turns(n % d, d, w))).collect())
}

fn trig(c: &[(f64, f64)]) -> SmoothExpr {
    let mut coeffs = vec![C64::zero()];
    coeffs.extend(c.iter().map(|&(a, b)| C64::new(a, b)));
    SmoothExpr::Trig { coeffs }
}

/// `muhat` extended by `muhat(theta + 2 pi) = muhat(theta) + mu(T)`.
fn quasi(m: &MassFunction, theta: f64) -> f64 {
    let k = (theta / TAU).floor();
    m.eval(theta - k * TAU, 1e-13).unwrap().0 + k * m.total_mass()
}

/// `quasi` at a rational angle, exact about which side of a jump it lies.
fn quasi_turns(m: &MassFunction, q: Rational64) -> f64 {
    let k = q.floor();
    m.eval_at(&Angle::Turns(q - k), 1e-13).unwrap().0 + k.to_integer() as f64 * m.total_mass()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exp_log_round_trip(c in small_ratios(10)) {
        let f = unit_series(c);
        prop_assert_eq!(f.log().unwrap().exp().unwrap(), f);
    }

    #[test]
    fn log_turns_products_into_sums(a in small_ratios(8), b in small_ratios(8)) {
        let (f, g) = (unit_series(a), unit_series(b));
        let lhs = f.mul(&g).unwrap().log().unwrap();
        prop_assert_eq!(lhs, f.log().unwrap().add(&g.log().unwrap()).unwrap());
    }

    #[test]
    fn reciprocal_and_powers(c in small_ratios(9), n in 2u64..5, m in 2u64..4) {
        let f = unit_series(c);
        prop_assert_eq!(f.mul(&f.recip().unwrap()).unwrap(), TaylorSeries::one(ScalarKind::Rational, 9));
        prop_assert_eq!(f.compose_zn(n).compose_zn(m), f.compose_zn(n * m));
        prop_assert_eq!(f.pow(n).mul(&f).unwrap(), f.pow(n + 1));
    }

    #[test]
    fn multiplicative_trace_of_order_two(c in small_ratios(3)) {
        // f(z) f(-z) = exp(Tr_2 log f)
        let f = unit_series(c).truncate(12);
        let t = f.mult_trace(2).unwrap();
        let direct = f.mul(&f.scale_arg(&TaylorScalar::Rational(cq(-1, 1))).unwrap()).unwrap();
        prop_assert_eq!(t, direct);
    }

    #[test]
    fn phi_inverts_psi(c in small_ratios(6)) {
        let s = Generators::new(&[2, 3]).unwrap();
        let f = unit_series(c).truncate(24);
        prop_assert_eq!(f.psi_s_product(&s).unwrap().phi_s(&s).unwrap(), f);
    }

    #[test]
    fn push_pull_on_windows(a in atoms(), n in 2u64..9) {
        let mu = atomic(&a);
        let w = mu.fourier(32, 1e-13).unwrap();
        let back = mu.clone().pull(n).push(n).fourier(32, 1e-13).unwrap();
        prop_assert!(w.max_diff(&back) <= 1e-12);
        let pulled = mu.clone().pull(n).fourier(32, 1e-13).unwrap();
        for nu in -32i64..=32 {
            let want = if nu % n as i64 == 0 { w.get(nu / n as i64) } else { C64::zero() };
            prop_assert!((pulled.get(nu) - want).norm() <= 1e-12);
        }
    }

    #[test]
    fn rotation_commutes_with_push(a in atoms(), n in 2u64..7, r in 0i64..12) {
        let mu = atomic(&a);
        let rot = Angle::turns(r, 12);
        let lhs = mu.clone().rotate(rot).push(n).fourier(24, 1e-13).unwrap();
        let rhs = mu.push(n).rotate(Angle::turns(r * n as i64, 12)).fourier(24, 1e-13).unwrap();
        prop_assert!(lhs.max_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn mass_push_pull_is_identity(c in prop::collection::vec((-0.2f64..0.2, -0.2f64..0.2), 1..5),
                                  a in atoms(), n in 2u64..6) {
        let mu = MassFunction::from_measure(&atomic(&a)).unwrap().add(&MassFunction::premeasure(trig(&c)));
        let back = mu.act_pull(n).act_push(n);
        for j in 0..64 {
            let theta = TAU * (j as f64 + 0.413) / 64.0;
            let (x, ex) = mu.eval(theta, 1e-13).unwrap();
            let (y, ey) = back.eval(theta, 1e-13).unwrap();
            prop_assert!((x - y).abs() <= ex + ey + 1e-12);
        }
    }

    #[test]
    fn convolution_formula(a in atoms(), b in atoms(), theta in 0.0f64..TAU) {
        // (mu * nu)^(theta) = sum_j w_j (muhat(theta - t_j) - muhat(-t_j)) for atomic nu.
        let mu = atomic(&a);
        let nu = atomic(&b);
        let conv: Vec<(f64, MeasureExpr)> = a
            .iter()
            .flat_map(|&(n1, d1, w1)| b.iter().map(move |&(n2, d2, w2)| {
                (1.0, MeasureExpr::atom_turns((n1 % d1) * d2 + (n2 % d2) * d1, d1 * d2, w1 * w2))
            }))
            .collect();
        let conv = MassFunction::from_measure(&MeasureExpr::lin_comb(conv)).unwrap();
        let muhat = MassFunction::from_measure(&mu).unwrap();
        let mut want = 0.0;
        for (t, w) in nu.atoms().unwrap() {
            let Angle::Turns(q) = t else { unreachable!() };
            want += w * (quasi(&muhat, theta - t.radians()) - quasi_turns(&muhat, -q));
        }
        let got = conv.eval(theta, 1e-13).unwrap().0;
        prop_assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
        let wm = mu.fourier(16, 1e-13).unwrap();
        let wn = nu.fourier(16, 1e-13).unwrap();
        let prod = wm.convolve(&wn).unwrap();
        let direct = MeasureExpr::lin_comb(
            a.iter().flat_map(|&(n1, d1, w1)| b.iter().map(move |&(n2, d2, w2)| {
                (1.0, MeasureExpr::atom_turns((n1 % d1) * d2 + (n2 % d2) * d1, d1 * d2, w1 * w2))
            })).collect(),
        ).fourier(16, 1e-13).unwrap();
        prop_assert!(prod.max_diff(&direct) <= 1e-11);
    }

    #[test]
    fn kappa_axioms(g in 0.0f64..4.0, x in 0.0f64..1.0, y in 0.0f64..1.0, alpha in 1.0f64..50.0) {
        let k = Kappa::gamma(g).unwrap();
        let f = |t: f64| k.eval(t).unwrap();
        let eps = 1e-12;
        prop_assert!(f(x) + eps >= x);
        prop_assert!(f(x.min(y)) <= f(x.max(y)) + eps);
        prop_assert!(f((x + y) / 2.0) + eps >= (f(x) + f(y)) / 2.0);
        if x + y <= 1.0 {
            prop_assert!(f(x + y) <= f(x) + f(y) + eps);
        }
        prop_assert!(f(x / alpha) + eps >= f(x) / alpha);
    }

    #[test]
    fn kappa_monotone_in_gamma(d in 0.0f64..3.0, step in 0.05f64..2.0, x in 0.001f64..0.999) {
        let lo = Kappa::gamma(d).unwrap().eval(x).unwrap();
        let hi = Kappa::gamma(d + step).unwrap().eval(x).unwrap();
        prop_assert!(lo < hi, "{lo} !< {hi}");
    }

    #[test]
    fn entropy_grows_under_inclusion(e in prop::collection::vec(0.0f64..1.0, 1..10),
                                     extra in prop::collection::vec(0.0f64..1.0, 1..6),
                                     g in 0.0f64..3.0) {
        let k = Kappa::gamma(g).unwrap();
        let small = FiniteCircleSet::new(e.iter().copied());
        let big = small.union(&FiniteCircleSet::new(extra.iter().copied()));
        prop_assert!(small.entropy(&k) <= big.entropy(&k) + 1e-12);
    }

    #[test]
    fn transform_bounds(e in prop::collection::vec(0.0f64..1.0, 1..10), n in 2u64..9, g in 0.0f64..3.0) {
        let k = Kappa::gamma(g).unwrap();
        let set = FiniteCircleSet::new(e);
        let ke = set.entropy(&k);
        let kp = set.preimage(n).entropy(&k);
        prop_assert!(ke <= kp + 1e-12 && kp <= n as f64 * ke + 1e-12);
        for j in 0..n {
            prop_assert!(set.image(n, j).entropy(&k) <= 2.0 * n as f64 * ke + 1e-12);
        }
    }

    #[test]
    fn witt_ring_axioms(a in small_ratios(8), b in small_ratios(8), c in small_ratios(8)) {
        let w = |v| WittVec::new(unit_series(v)).unwrap();
        let (a, b, c) = (w(a), w(b), w(c));
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(&ab, &b.mul(&a).unwrap());
        prop_assert_eq!(a.mul(&b.add(&c).unwrap()).unwrap(), ab.add(&a.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(ab.mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.add(&a.neg()).unwrap(), WittVec::one(ScalarKind::Rational, 8));
        let unit = WittVec::teichmuller(&TaylorScalar::Rational(Cq::one()), 8);
        prop_assert_eq!(a.mul(&unit).unwrap(), a.clone());
    }

    #[test]
    fn ghost_is_a_ring_homomorphism(a in small_ratios(8), b in small_ratios(8)) {
        let w = |v| WittVec::new(unit_series(v)).unwrap();
        let (a, b) = (w(a), w(b));
        prop_assert_eq!(a.add(&b).unwrap().ghost(), a.ghost().add(&b.ghost()).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap().ghost(), a.ghost().hadamard(&b.ghost()).unwrap());
        prop_assert_eq!(WittVec::unghost(&a.ghost()), a);
    }

    #[test]
    fn frobenius_verschiebung_relations(a in small_ratios(12), n in 2u64..4) {
        let a = WittVec::new(unit_series(a)).unwrap();
        prop_assert_eq!(a.verschiebung(n).frobenius(n), a.times(n));
        let fv = a.verschiebung(5).frobenius(n);
        let vf = a.frobenius(n).verschiebung(5);
        let o = fv.order().min(vf.order());
        prop_assert_eq!(fv.truncate_to(o), vf.truncate_to(o));
    }

    #[test]
    fn teichmuller_scales(a in small_ratios(8), p in -5i64..=5, q in 1i64..=5) {
        let v = WittVec::new(unit_series(a)).unwrap();
        let t = TaylorScalar::Rational(cq(p, q));
        prop_assert_eq!(WittVec::teichmuller(&t, 8).mul(&v).unwrap(), v.scale_arg(&t).unwrap());
    }

    #[test]
    fn monoid_relations(p in 0i64..12, n in 2u64..7, m in 2u64..7) {
        let q = num_rational::Rational64::new(p, 12);
        let lhs = AlgebraElem::phi(n).mul(&AlgebraElem::rotation(q));
        let rhs = AlgebraElem::rotation(q * num_rational::Rational64::from(n as i64)).mul(&AlgebraElem::phi(n));
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(AlgebraElem::phi(n).mul(&AlgebraElem::phi(m)), AlgebraElem::phi(n * m));
        let e = AlgebraElem::e(n);
        prop_assert_eq!(e.mul(&e), e);
    }
}
