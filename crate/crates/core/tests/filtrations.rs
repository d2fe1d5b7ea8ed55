use surfbraid::finite::{SubgroupDescription, TwoQuotient, WordOracle};
use surfbraid::presentations::{abelian_image_is_zero, catalog, Family, Presentation};
use surfbraid::series::*;
use surfbraid::words::{commutator, left_normed, w, Word};

fn p2k() -> Presentation {
    catalog(Family::P2KReduced, 2, None).unwrap()
}

#[test]
fn serie_examples() {
    let ctx = SplitContext::klein(1).unwrap();
    let g2 = serie_generators(&ctx, &pi1k_lcs, 2).unwrap();
    let (_, l2, _) = g2.descriptions(&ctx);
    let expected = ctx.describe("L2", vec![w("a[2]^2"), w("a[2]*b[2]*a[2]^-1*b[2]^-1")]);
    for stage in 2..=5 {
        let q = TwoQuotient::new(&ctx.fiber_group(), stage).unwrap();
        assert_eq!(compare_descriptions(&l2, &expected, Oracle::Tower(&q)).unwrap(), Comparison::EqualInOracle);
    }
    let g3 = serie_generators(&ctx, &pi1k_lcs, 3).unwrap();
    assert_eq!(g3.k, vec![w("a[2]^-4")]);
    assert!(matches!(serie_generators(&ctx, &pi1k_lcs, 1), Err(surfbraid::Error::DepthUnsupported(1))));
}

#[test]
fn lcs_recursion_matches_closure() {
    let p = p2k();
    for stage in 2..=5 {
        let q = TwoQuotient::new(&p, stage).unwrap();
        for n in 2..=4 {
            let serie = p2k_lcs_from_serie(n).unwrap();
            let closure = lcs_closure(&p, n);
            assert_eq!(
                compare_descriptions(&serie, &closure, Oracle::Tower(&q)).unwrap(),
                Comparison::EqualInOracle,
                "stage {stage} n {n}"
            );
            let img = q.subgroup_image(&closure).unwrap();
            assert!(q.subgroup_le(&img, &q.lower_central_subgroup(n)) && q.subgroup_le(&q.lower_central_subgroup(n), &img));
        }
    }
}

#[test]
fn l_equals_wtilde() {
    let ctx = SplitContext::klein(1).unwrap();
    let f = p2k_fiber();
    for stage in 2..=5 {
        let q = TwoQuotient::new(&ctx.fiber_group(), stage).unwrap();
        for n in 2..=4 {
            let (_, l, _) = serie_generators(&ctx, &pi1k_lcs, n).unwrap().descriptions(&ctx);
            let wt = ctx.describe("W", wn_tilde(n, &f).unwrap());
            assert_eq!(compare_descriptions(&l, &wt, Oracle::Tower(&q)).unwrap(), Comparison::EqualInOracle);
        }
    }
}

#[test]
fn wtilde_chain_is_strict() {
    let ctx = SplitContext::klein(1).unwrap();
    let f = p2k_fiber();
    let q = TwoQuotient::new(&ctx.fiber_group(), 3).unwrap();
    let w2 = ctx.describe("W2", wn_tilde(2, &f).unwrap());
    let w3 = ctx.describe("W3", wn_tilde(3, &f).unwrap());
    assert_eq!(compare_descriptions(&w3, &w2, Oracle::Tower(&q)).unwrap(), Comparison::AStrictlyInB);
    assert_eq!(compare_descriptions(&w2, &w3, Oracle::Tower(&q)).unwrap(), Comparison::BStrictlyInA);
    let img = q.subgroup_image(&w3).unwrap();
    assert!(!q.subgroup_contains(&img, &w("a[2]^2")).unwrap());
}

#[test]
fn claimed_generators_have_zero_abelian_image() {
    let p = p2k();
    for n in 2..=4 {
        for g in gamma_p2k_claimed(n).unwrap().all_words() {
            assert!(abelian_image_is_zero(&p, &g), "n={n}: {g}");
        }
    }
    // b₂² survives in the abelianization, so it is not in the W̃₂ closure
    assert!(!abelian_image_is_zero(&p, &w("b[2]^2")));
}

#[test]
fn gamma2_descriptions_contain_listed_powers() {
    let p = p2k();
    let q = TwoQuotient::new(&p, 2).unwrap();
    assert_eq!(q.order(), 16);
    let img = q.subgroup_image(&gamma2_p2k_claimed(2).unwrap()).unwrap();
    assert!(q.subgroup_contains(&img, &w("b[2]^2")).unwrap());
    for depth in 3..=5 {
        let q = TwoQuotient::new(&p, depth).unwrap();
        for n in 2..=depth {
            let img = q.subgroup_image(&gamma2_p2k_claimed(n).unwrap()).unwrap();
            let k = q.kernel_to_stage(n);
            assert!(q.subgroup_le(&img, &k) && q.subgroup_le(&k, &img), "depth {depth} n {n}");
        }
    }
}

#[test]
fn elm_chain_and_extremes() {
    let f = p2k_fiber();
    for m in 2..=4 {
        let top = elm_generators(m, m, None, &f).unwrap();
        assert_eq!(top, surfbraid::nilpotent::basic_commutators(&f, m));
        for l in 1..m {
            let big = elm_generators(l, m, None, &f).unwrap();
            let small = elm_generators(l + 1, m, None, &f).unwrap();
            assert!(small.iter().all(|x| big.contains(x)), "l={l} m={m}");
        }
    }
    assert!(elm_generators(0, 2, None, &f).is_err());
}

#[test]
fn corollary_commutators_drop_a_level() {
    let f = p2k_fiber();
    let free = Presentation::free("H", f.clone());
    let q = TwoQuotient::new(&free, 5).unwrap();
    for m in 1..=3 {
        for l in 1..=m {
            let target = SubgroupDescription::normal("E", &free, elm_generators(l + 1, m + 1, None, &f).unwrap());
            let img = q.subgroup_image(&target).unwrap();
            for x in elm_generators(l, m, None, &f).unwrap() {
                for h in free.generator_words() {
                    assert!(q.subgroup_contains(&img, &commutator(&x, &h)).unwrap(), "l={l} m={m} x={x}");
                }
            }
        }
    }
}

#[test]
fn lemaprinc_instances() {
    let f = p2k_fiber();
    let free = Presentation::free("H", f.clone());
    let q = TwoQuotient::new(&free, 4).unwrap();
    let (a, b) = (w("a[2]"), w("b[2]"));
    assert!(lemaprinc_check(std::slice::from_ref(&a), &b, 1, 0, None, &f, &q).unwrap());
    assert!(lemaprinc_check(std::slice::from_ref(&a), &b, 2, 0, None, &f, &q).unwrap());
    assert!(lemaprinc_check(&[a.clone(), b.clone()], &a, 3, 0, None, &f, &q).unwrap());
    assert!(lemaprinc_check(std::slice::from_ref(&b), &a.mul(&b), 3, 1, Some(std::slice::from_ref(&b)), &f, &q).unwrap());
    assert!(lemaprinc_check(&[a.clone(), b.clone()], &a, 3, 1, Some(std::slice::from_ref(&b)), &f, &q).unwrap());
    assert!(lemaprinc_check(std::slice::from_ref(&b), &a, 3, 1, None, &f, &q).is_err());
    // the m = 2 difference is [x,x,y]
    let d = commutator(&a.pow(2), &b).mul(&commutator(&a, &b).pow(2).inverse());
    let e23 = q.subgroup_image(&SubgroupDescription::normal("E23", &free, elm_generators(2, 3, None, &f).unwrap())).unwrap();
    assert!(q.subgroup_contains(&e23, &d).unwrap());
    assert!(q.subgroup_contains(&e23, &left_normed(&[a.clone(), a.clone(), b.clone()])).unwrap());
}

#[test]
fn l_generators_normal_under_fiber() {
    let ctx = SplitContext::klein(1).unwrap();
    let q = TwoQuotient::new(&ctx.fiber_group(), 5).unwrap();
    for n in 2..=3 {
        let (_, l, _) = serie_generators(&ctx, &pi1k_lcs, n).unwrap().descriptions(&ctx);
        let img = q.subgroup_image(&l).unwrap();
        for g in &l.normal_generators {
            for h in ctx.fiber_words() {
                assert!(q.subgroup_contains(&img, &g.conj_by(&h)).unwrap());
            }
        }
    }
}

#[test]
fn klein_families_agree() {
    for n in 1..=2 {
        let ctx = SplitContext::klein(n).unwrap();
        let base = |i: usize| if n == 1 { pi1k_lcs(i) } else { Vec::new() };
        let q = TwoQuotient::new(&ctx.fiber_group(), 4).unwrap();
        for m in 2..=4 {
            let fam = klein_series_families(n, m).unwrap();
            let (_, _, v) = serie_generators(&ctx, &base, m).unwrap().descriptions(&ctx);
            let y = ctx.describe("Y", fam.y.clone());
            let z = ctx.describe("Z", fam.z.clone());
            let zt = ctx.describe("Zt", fam.ztilde.clone());
            let vz = compare_descriptions(&v, &zt, Oracle::Tower(&q)).unwrap();
            assert!(matches!(vz, Comparison::EqualInOracle | Comparison::AStrictlyInB), "n={n} m={m}: {vz:?}");
            assert_eq!(compare_descriptions(&y, &z, Oracle::Tower(&q)).unwrap(), Comparison::EqualInOracle);
            assert_eq!(compare_descriptions(&z, &zt, Oracle::Tower(&q)).unwrap(), Comparison::EqualInOracle);
        }
    }
    let f2 = klein_series_families(2, 2).unwrap();
    assert_eq!(f2.y.len(), 2 + 3);
    let f3 = klein_series_families(2, 3).unwrap();
    assert!(f3.ztilde.contains(&w("D[1]^2")));
}

#[test]
fn acima_up_to_five() {
    for m in 2..=5 {
        let rep = acima_check(2, m).unwrap();
        assert!(!rep.is_empty());
        assert!(rep.all_hold(), "m={m}");
    }
}

#[test]
fn separation_reports() {
    let p = p2k();
    let els = vec![w("a[2]"), w("b[2]^2"), w("a[2]*b[2]*a[2]^-1*b[2]^-1"), w("a[2]*b[2]*a[2]^-1*b[2]"), Word::empty()];
    let rep = residual_separation(&p, &els, FiltrationFamily::gamma2(), 4).unwrap();
    let at: Vec<Option<usize>> = rep.entries.iter().map(|e| e.separated_at).collect();
    assert_eq!(at, vec![Some(2), Some(3), Some(3), Some(3), None]);
    assert!(rep.entries[4].trivial);
    assert!(rep.all_separated());
    assert!(rep.grade.starts_with("evidence"));
    let rep = residual_separation(&p, &els[..2], FiltrationFamily::gamma2(), 3).unwrap();
    assert_eq!(rep.entries[0].separated_at, Some(2));
    let lc = residual_separation(&p, &els, FiltrationFamily::lower_central(), 4).unwrap();
    assert!(lc.all_separated());
    let bad = FiltrationFamily { kind: FiltrationKind::GammaP, p: Some(3) };
    assert!(residual_separation(&p, &els, bad, 2).is_err());
}

#[test]
fn comparison_needs_shared_ambient() {
    let p = p2k();
    let other = catalog(Family::Pi1K, 1, None).unwrap();
    let q = TwoQuotient::new(&p, 2).unwrap();
    let a = SubgroupDescription::normal("A", &p, vec![w("a[2]")]);
    let b = SubgroupDescription::normal("B", &other, vec![w("a[1]")]);
    assert!(compare_descriptions(&a, &b, Oracle::Tower(&q)).is_err());
    let model = q.to_finite_model(1 << 12).unwrap();
    let c = SubgroupDescription::normal("C", &p, vec![w("b[2]")]);
    assert_eq!(compare_descriptions(&a, &c, Oracle::Finite(&model)).unwrap(), Comparison::Incomparable);
    assert!(q.is_trivial(&w("a[2]^2")).unwrap());
}
