//! Property tests for the series ring and the exterior calculus.

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qfk_core::exterior::{ChartMap, Form, VectorField};
use qfk_core::series::{invert_map, Series, VarSet};
use std::sync::Arc;

const ORDER: u32 = 6;

fn coeff() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

/// Random series on the paired chart (z1, z2, zt1, zt2), degree ≤ ORDER.
fn series2() -> impl Strategy<Value = Series> {
    let vars = VarSet::base(2);
    proptest::collection::vec(((0u8..3, 0u8..3, 0u8..3, 0u8..3), coeff()), 1..10).prop_map(
        move |terms| {
            let list: Vec<(Vec<u8>, C64)> = terms
                .into_iter()
                .map(|((a, b, c, d), k)| (vec![a, b, c, d], k))
                .collect();
            Series::from_terms(&vars, ORDER, &list)
        },
    )
}

/// Random series with unit constant term (for reciprocal).
fn unit_series2() -> impl Strategy<Value = Series> {
    series2().prop_map(|s| {
        let one = Series::one(&s.vars, s.order);
        let small = s.scale(C64::new(0.3, 0.0));
        let mut shifted = small.clone();
        shifted.coeffs.remove(&qfk_core::series::Expo::zeros(4));
        one.add(&shifted).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn ring_axioms(a in series2(), b in series2(), c in series2()) {
        // associativity of addition
        let lhs = a.add(&b).unwrap().add(&c).unwrap();
        let rhs = a.add(&b.add(&c).unwrap()).unwrap();
        prop_assert!(lhs.residual_vs(&rhs) < 1e-12);
        // commutativity of multiplication
        let ab = a.mul(&b).unwrap();
        let ba = b.mul(&a).unwrap();
        prop_assert!(ab.residual_vs(&ba) < 1e-12);
        // distributivity
        let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
        let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(lhs.residual_vs(&rhs) < 1e-12);
    }

    #[test]
    fn derivatives_commute(a in series2()) {
        let lhs = a.derivative(0).derivative(2);
        let rhs = a.derivative(2).derivative(0);
        prop_assert!(lhs.residual_vs(&rhs) == 0.0);
    }

    #[test]
    fn reciprocal_inverts(a in unit_series2()) {
        let r = a.reciprocal().unwrap();
        let prod = a.mul(&r).unwrap();
        let one = Series::one(&a.vars, a.order);
        prop_assert!(prod.residual_vs(&one) < 1e-12);
    }

    #[test]
    fn bar_swap_involution(a in series2()) {
        let back = a.bar_swap().unwrap().bar_swap().unwrap();
        prop_assert!(back.residual_vs(&a) == 0.0);
    }

    #[test]
    fn invert_map_round_trip(p in proptest::collection::vec(coeff(), 6)) {
        // F = x + small quadratic perturbation in two variables
        let xy = VarSet::graded(&["x", "y"]);
        let w = VarSet::graded(&["w1", "w2"]);
        let x = Series::variable(&xy, ORDER, 0);
        let y = Series::variable(&xy, ORDER, 1);
        let quad = [
            x.mul(&x).unwrap(),
            x.mul(&y).unwrap(),
            y.mul(&y).unwrap(),
        ];
        let mut f = vec![x.clone(), y.clone()];
        for (i, fi) in f.iter_mut().enumerate() {
            for (j, q) in quad.iter().enumerate() {
                *fi = fi.add(&q.scale(p[3 * i + j].scale(0.3))).unwrap();
            }
        }
        let g = invert_map(&f, &w).unwrap();
        // F ∘ G = id through the truncation order
        for (i, fi) in f.iter().enumerate() {
            let comp = fi.compose(&g).unwrap();
            let id = Series::variable(&w, ORDER, i);
            prop_assert!(comp.residual_vs(&id) < 1e-10);
        }
    }
}

trait ScaleExt {
    fn scale(self, k: f64) -> C64;
}
impl ScaleExt for C64 {
    fn scale(self, k: f64) -> C64 {
        self * k
    }
}

/// Random 1-form on the paired chart.
fn one_form2() -> impl Strategy<Value = Form> {
    proptest::collection::vec((0usize..4, series2()), 1..4).prop_map(|terms| {
        let vars = VarSet::base(2);
        let mut f = Form::zero(&vars, 1, ORDER);
        for (idx, s) in terms {
            f = f.add(&Form::one_form_term(s, idx)).unwrap();
        }
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(80))]

    #[test]
    fn d_squared_zero(s in series2(), alpha in one_form2()) {
        let dd0 = Form::from_function(&s).d().unwrap().d().unwrap();
        prop_assert!(dd0.max_norm() < 1e-12);
        let dd1 = alpha.d().unwrap().d().unwrap();
        prop_assert!(dd1.max_norm() < 1e-12);
    }

    #[test]
    fn leibniz_rule(alpha in one_form2(), beta in one_form2()) {
        // d(α∧β) = dα∧β − α∧dβ for 1-forms
        let lhs = alpha.wedge(&beta).unwrap().d().unwrap();
        let rhs = alpha
            .d()
            .unwrap()
            .wedge(&beta)
            .unwrap()
            .sub(&alpha.wedge(&beta.d().unwrap()).unwrap())
            .unwrap();
        prop_assert!(lhs.residual_vs(&rhs) < 1e-11);
    }

    #[test]
    fn lie_leibniz_on_wedge(alpha in one_form2(), beta in one_form2(), comp in series2()) {
        // L_X(α∧β) = (L_X α)∧β + α∧(L_X β)
        let vars = VarSet::base(2);
        let x = VectorField::new(&vars).with(0, comp.clone()).with(3, comp);
        let lhs = alpha.wedge(&beta).unwrap().lie_derivative(&x).unwrap();
        let rhs = alpha
            .lie_derivative(&x)
            .unwrap()
            .wedge(&beta)
            .unwrap()
            .add(&alpha.wedge(&beta.lie_derivative(&x).unwrap()).unwrap())
            .unwrap();
        prop_assert!(lhs.residual_vs(&rhs) < 1e-10);
    }

    #[test]
    fn pullback_functoriality(p in proptest::collection::vec(coeff(), 4), alpha in one_form_c()) {
        // (m2 ∘ m1)^* = m1^* ∘ m2^* on composable polynomial maps
        let a = VarSet::graded(&["a1", "a2"]);
        let b = VarSet::graded(&["b1", "b2"]);
        let c = VarSet::graded(&["c1", "c2"]);
        let m1 = perturbed_identity(&a, &b, p[0], p[1]);
        let m2 = perturbed_identity(&b, &c, p[2], p[3]);
        let composed = m2.after(&m1).unwrap();
        let lhs = composed.pullback(&alpha).unwrap();
        let rhs = m1.pullback(&m2.pullback(&alpha).unwrap()).unwrap();
        prop_assert!(lhs.residual_vs(&rhs) < 1e-10);
    }
}

/// Chart map x_i ↦ x_i + ε_i x_1 x_2 between two-variable charts.
fn perturbed_identity(src: &Arc<VarSet>, dst: &Arc<VarSet>, e1: C64, e2: C64) -> ChartMap {
    let x1 = Series::variable(src, ORDER, 0);
    let x2 = Series::variable(src, ORDER, 1);
    let cross = x1.mul(&x2).unwrap();
    ChartMap {
        source: Arc::clone(src),
        target: Arc::clone(dst),
        comps: vec![
            x1.add(&cross.scale(e1 * 0.5)).unwrap(),
            x2.add(&cross.scale(e2 * 0.5)).unwrap(),
        ],
    }
}

/// Random 1-form on the chart (c1, c2).
fn one_form_c() -> impl Strategy<Value = Form> {
    proptest::collection::vec(
        (
            0usize..2,
            proptest::collection::vec(((0u8..3, 0u8..3), coeff()), 1..6),
        ),
        1..3,
    )
    .prop_map(|terms| {
        let vars = VarSet::graded(&["c1", "c2"]);
        let mut f = Form::zero(&vars, 1, ORDER);
        for (idx, coeffs) in terms {
            let list: Vec<(Vec<u8>, C64)> = coeffs
                .into_iter()
                .map(|((a, b), k)| (vec![a, b], k))
                .collect();
            let s = Series::from_terms(&vars, ORDER, &list);
            f = f.add(&Form::one_form_term(s, idx)).unwrap();
        }
        f
    })
}
