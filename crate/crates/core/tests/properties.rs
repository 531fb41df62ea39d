use incidence_core::compile::{classify_addition, classify_multiplication, relabel, Case};
use incidence_core::field::{embed, find_quadratic_root, make_field, FieldSpec, Scalar};
use incidence_core::proj::{cross_ratio, framed_coordinate, incident, join, meet, point_at_coordinate, x_position, Ext, Framing, PLine, PPoint};
use incidence_core::slp::{bit_size, decompose, equivalence_check, eval_program, find_witness, num_vars, solves, Poly};
use num_bigint::BigInt;
use proptest::prelude::*;

fn fields() -> Vec<FieldSpec> {
    vec![
        make_field(7, 1).unwrap(),
        make_field(3, 2).unwrap(),
        make_field(2, 8).unwrap(),
        make_field(5, 3).unwrap(),
        FieldSpec::rationals(),
    ]
}

// Finite fields index their elements; the rationals take n/d with small d.
fn elem(f: &FieldSpec, raw: i64) -> Scalar {
    match f.order() {
        Some(q) => f.element(raw.unsigned_abs() as u128 % q),
        None => {
            let d = 1 + raw.rem_euclid(5);
            f.from_fraction(&BigInt::from(raw / 5), &BigInt::from(d)).unwrap()
        }
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(10_000))]

    #[test]
    fn field_axioms(which in 0usize..5, a in any::<i64>(), b in any::<i64>(), c in any::<i64>()) {
        let f = &fields()[which];
        let (a, b, c) = (elem(f, a), elem(f, b), elem(f, c));
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert!((&a + &(-&a)).is_zero());
        match a.inv() {
            Some(i) => prop_assert!((&a * &i).is_one()),
            None => prop_assert!(a.is_zero()),
        }
    }
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn embedding_is_a_ring_map(tower in 0usize..3, x in any::<i64>(), y in any::<i64>()) {
        let (p, k, big) = [(3, 2, 4), (2, 2, 6), (5, 1, 3)][tower];
        let (src, dst) = (make_field(p, k).unwrap(), make_field(p, big).unwrap());
        let (x, y) = (elem(&src, x), elem(&src, y));
        let e = |v: &Scalar| embed(v, &dst).unwrap();
        prop_assert_eq!(e(&(&x * &y)), &e(&x) * &e(&y));
        prop_assert_eq!(e(&(&x + &y)), &e(&x) + &e(&y));
        prop_assert_eq!(x == y, e(&x) == e(&y));
    }

    #[test]
    fn make_field_is_pure(p in prop::sample::select(vec![2u64, 3, 5, 7, 11]), k in 1usize..7) {
        let a = make_field(p, k).unwrap();
        let b = make_field(p, k).unwrap();
        prop_assert_eq!(serde_json::to_vec(&a.to_json()).unwrap(), serde_json::to_vec(&b.to_json()).unwrap());
    }

    #[test]
    fn quadratic_roots_substitute_to_zero(which in 0usize..5, c0 in any::<i64>(), c1 in any::<i64>()) {
        let f = &fields()[which];
        let (c0, c1) = (elem(f, c0), elem(f, c1));
        if let Some(r) = find_quadratic_root(&c0, &c1, f) {
            prop_assert!((&(&r * &r) + &(&(&c1 * &r) + &c0)).is_zero());
        }
    }

    #[test]
    fn relabel_is_an_involution(which in 0usize..5, v in any::<i64>(), l in any::<[i64; 4]>()) {
        let f = &fields()[which];
        let [s1, s2, t1, t2] = l.map(|x| elem(f, x));
        prop_assume!(s1 != s2 && t1 != t2);
        let v = elem(f, v);
        let w = relabel(&v, (&s1, &s2), (&t1, &t2));
        prop_assert_eq!(relabel(&w, (&t1, &t2), (&s1, &s2)), v);
    }
}

fn point(f: &FieldSpec, c: [i64; 3]) -> Option<PPoint> {
    let [x, y, z] = c.map(|v| elem(f, v));
    PPoint::new(x, y, z).ok()
}

proptest! {
    #![proptest_config(config(10_000))]

    #[test]
    fn join_meet_duality(which in 0usize..5, c in any::<[[i64; 3]; 4]>()) {
        let f = &fields()[which];
        let pts: Option<Vec<PPoint>> = c.iter().map(|&v| point(f, v)).collect();
        let Some(pts) = pts else { return Ok(()) };
        let (Ok(l), Ok(m)) = (join(&pts[0], &pts[1]), join(&pts[2], &pts[3])) else { return Ok(()) };
        prop_assume!(l != m);
        let x = meet(&l, &m).unwrap();
        prop_assert!(incident(&x, &l) && incident(&x, &m));
    }
}

fn horizontal(f: &FieldSpec, c: &Scalar) -> PLine {
    PLine::new(f.zero(), f.one(), -c).unwrap()
}

fn project(center: &PPoint, p: &PPoint, target: &PLine) -> PPoint {
    meet(&join(center, p).unwrap(), target).unwrap()
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn perspectivity_fixes_p3(which in 0usize..5, a in any::<i64>(), b in any::<i64>(), y in any::<[i64; 2]>()) {
        let f = &fields()[which];
        let (a, b) = (elem(f, a), elem(f, b));
        let (yx, yy) = (elem(f, y[0]), elem(f, y[1]));
        prop_assume!(a != b && yy != a && yy != b);
        let p3 = PPoint::new(f.one(), f.zero(), f.zero()).unwrap();
        prop_assert_eq!(project(&PPoint::affine(yx, yy), &p3, &horizontal(f, &b)), p3);
    }

    #[test]
    fn cross_ratio_survives_projection(which in 0usize..5, c in any::<[i64; 2]>(), xs in any::<[i64; 4]>(), center in any::<[i64; 2]>()) {
        let f = &fields()[which];
        let (a, b) = (elem(f, c[0]), elem(f, c[1]));
        let (cx, cy) = (elem(f, center[0]), elem(f, center[1]));
        prop_assume!(a != b && cy != a && cy != b);
        let xs = xs.map(|x| elem(f, x));
        let distinct = (0..4).all(|i| (0..i).all(|j| xs[i] != xs[j]));
        prop_assume!(distinct);
        let x = PPoint::affine(cx, cy);
        let target = horizontal(f, &b);
        let before: Vec<Ext> = xs.iter().map(|v| Ext::Finite(v.clone())).collect();
        let after: Vec<Ext> = xs
            .iter()
            .map(|v| Ext::Finite(x_position(&project(&x, &PPoint::affine(v.clone(), a.clone()), &target)).unwrap()))
            .collect();
        prop_assert_eq!(
            cross_ratio(&before[0], &before[1], &before[2], &before[3]).unwrap(),
            cross_ratio(&after[0], &after[1], &after[2], &after[3]).unwrap()
        );
    }

    #[test]
    fn framing_round_trip_and_relabel(which in 0usize..5, raw in any::<[i64; 7]>()) {
        let f = &fields()[which];
        let [c, u1, u2, s1, s2, v, w] = raw.map(|x| elem(f, x));
        prop_assume!(u1 != u2 && s1 != s2);
        let line = horizontal(f, &c);
        let (p1, p2) = (PPoint::affine(u1, c.clone()), PPoint::affine(u2, c.clone()));
        let fr = Framing::new(line.clone(), s1.clone(), p1.clone(), s2.clone(), p2.clone()).unwrap();
        prop_assert_eq!(framed_coordinate(&fr, &point_at_coordinate(&fr, &v)).unwrap(), Ext::Finite(v));

        // reading the same point under {0, -1} negates its {0, 1} coordinate
        let q = PPoint::affine(w, c);
        let zero_one = Framing::new(line.clone(), f.zero(), p1.clone(), f.one(), p2.clone()).unwrap();
        let zero_neg = Framing::new(line.clone(), f.zero(), p1.clone(), -&f.one(), p2.clone()).unwrap();
        let (a, b) = (framed_coordinate(&zero_one, &q).unwrap(), framed_coordinate(&zero_neg, &q).unwrap());
        match (a, b) {
            (Ext::Finite(a), Ext::Finite(b)) => prop_assert_eq!(b, -&a),
            (a, b) => prop_assert_eq!(a, b),
        }
        if let Ext::Finite(old) = framed_coordinate(&fr, &q).unwrap() {
            let moved = relabel(&old, (&s1, &s2), (&f.zero(), &f.one()));
            prop_assert_eq!(framed_coordinate(&zero_one, &q).unwrap(), Ext::Finite(moved));
        }
    }
}

fn system_strategy() -> impl Strategy<Value = Vec<Poly>> {
    let term = ((0u32..=3, 0u32..=3, 0u32..=3), -9i64..=9).prop_filter("degree", |((a, b, c), _)| a + b + c <= 3);
    let poly = prop::collection::vec(term, 1..6).prop_map(|terms| {
        let mut p = Poly::zero();
        for ((a, b, c), k) in terms {
            p.add_term(vec![a, b, c], BigInt::from(k));
        }
        p
    });
    prop::collection::vec(poly, 1..4)
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn program_solves_exactly_where_the_system_does(polys in system_strategy(), which in 0usize..4, raw in any::<[i64; 3]>()) {
        let f = [make_field(5, 1).unwrap(), make_field(7, 1).unwrap(), make_field(3, 2).unwrap(), FieldSpec::rationals()][which].clone();
        let n = num_vars(&polys);
        let prog = decompose(&polys, n);
        let point: Vec<Scalar> = raw.iter().take(n).map(|&v| elem(&f, v)).collect();
        let (_, residuals) = eval_program(&prog, &f, &point);
        prop_assert_eq!(residuals.iter().all(Scalar::is_zero), solves(&polys, &f, &point));
    }

    #[test]
    fn decomposition_is_structural_and_linear(polys in system_strategy()) {
        let prog = decompose(&polys, num_vars(&polys));
        prop_assert!(prog.validate().is_ok());
        prop_assert!(equivalence_check(&polys, &prog));
        // each monomial costs at most its degree in products plus a constant
        prop_assert!((prog.equations.len() as u64) <= 8 * bit_size(&polys) + 16);
    }

    #[test]
    fn found_witnesses_are_solutions(polys in system_strategy(), p in prop::sample::select(vec![2u64, 3, 5])) {
        let f = make_field(p, 1).unwrap();
        if let Some(w) = find_witness(&polys, &f, 1_000_000).unwrap() {
            let prog = decompose(&polys, num_vars(&polys));
            prop_assert!(eval_program(&prog, &f, &w).1.iter().all(Scalar::is_zero));
        }
    }
}

// Case predicates written out directly, for ordered operands (x, y) and result c.
fn direct_cases(f: &FieldSpec, x: &Scalar, y: &Scalar, c: &Scalar, j: Option<&Scalar>) -> Vec<Case> {
    let s = |v: &[i64]| v.iter().map(|&k| f.from_i64(k)).collect::<Vec<_>>();
    let out = |v: &Scalar, set: &[Scalar]| !set.contains(v);
    let mut cases = Vec::new();
    match j {
        None => {
            if x.is_one() && out(y, &s(&[0, 1])) && out(c, &s(&[0, 1, -1])) {
                cases.push(Case::OnePlus);
            }
            if x.is_zero() && out(y, &s(&[-1, 0, 1, 2])) && out(c, &s(&[-1, 0, 1, 2])) {
                cases.push(Case::ZeroPlus);
            }
        }
        Some(j) => {
            let zoj = [f.zero(), f.one(), j.clone()];
            if x.is_one() && out(y, &zoj) && out(c, &zoj) {
                cases.push(Case::Char2OnePlus);
            }
            if x.is_zero() && out(y, &[f.zero(), f.one(), j.clone(), j * j]) && out(c, &[f.one(), j.clone()]) {
                cases.push(Case::Char2ZeroPlus);
            }
        }
    }
    cases
}

#[test]
fn dispatch_is_total_and_exclusive() {
    let f4 = make_field(2, 2).unwrap();
    let j4 = find_quadratic_root(&f4.one(), &f4.one(), &f4).unwrap();
    for (f, j) in [(make_field(5, 1).unwrap(), None), (make_field(7, 1).unwrap(), None), (f4, Some(j4))] {
        let els: Vec<Scalar> = f.elements().collect();
        let zo = [f.zero(), f.one()];
        for a in &els {
            for b in &els {
                for c in &els {
                    let generic = [a, b, c].iter().all(|v| !zo.contains(v));
                    let tag = classify_addition(a, b, c, j.as_ref());
                    let mut fired: Vec<(Case, bool)> = Vec::new();
                    if generic {
                        fired.push((Case::Generic, false));
                    }
                    fired.extend(direct_cases(&f, a, b, c, j.as_ref()).into_iter().map(|k| (k, false)));
                    fired.extend(direct_cases(&f, b, a, c, j.as_ref()).into_iter().map(|k| (k, true)));
                    assert!(fired.len() <= 1, "{a} + {b} = {c}: {fired:?}");
                    match fired.first() {
                        Some(&(case, swapped)) => assert_eq!((tag.case, tag.swapped), (case, swapped), "{a} + {b} = {c}"),
                        None => assert_eq!(tag.case, Case::Translate, "{a} + {b} = {c}"),
                    }
                    let m = classify_multiplication(a, b, c);
                    assert_eq!(m.case == Case::Generic, generic);
                }
            }
        }
    }
}
