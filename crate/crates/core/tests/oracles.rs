use std::collections::HashMap;

use proptest::prelude::*;
use surfbraid::finite::*;
use surfbraid::nilpotent::{nilpotent_quotient, witt_rank, FreeNilpotent};
use surfbraid::presentations::*;
use surfbraid::snf::{smith_normal_form, AbelianInvariants, IntMatrix};
use surfbraid::words::{w, Letter, Symbol, Word};

fn s3() -> Presentation {
    Presentation::from_relators("S3", vec![Symbol::plain("a"), Symbol::plain("b")], vec![w("a^2"), w("b^2"), w("(a*b)^3")]).unwrap()
}

fn transposition(n: usize, i: usize) -> Perm {
    let mut p: Perm = (0..n as u32).collect();
    p.swap(i - 1, i);
    p
}

/// σ_i ↦ (i, i+1); every other generator ↦ 1.
fn symmetric_image(p: &Presentation, n: usize) -> FiniteModel {
    let id: Perm = (0..n as u32).collect();
    let images =
        p.generators.iter().map(|g| if g.name() == "s" { transposition(n, g.indices()[0] as usize) } else { id.clone() }).collect();
    FiniteModel::new("Sn", p.generators.clone(), images, 1000).unwrap()
}

#[test]
fn catalog_relators_die_in_symmetric_group() {
    for n in 2..=5 {
        for fam in [Family::BnT, Family::BnK] {
            let p = catalog(fam, n, None).unwrap();
            let m = symmetric_image(&p, n);
            for r in &p.relators {
                assert!(m.is_trivial(r).unwrap(), "{fam:?} n={n}: {r}");
            }
        }
        for g in 3..=4 {
            let p = catalog(Family::BnNg, n, Some(g)).unwrap();
            let m = symmetric_image(&p, n);
            assert!(p.relators.iter().all(|r| m.is_trivial(r).unwrap()));
        }
    }
}

#[test]
fn abelianizations() {
    for n in 2..=5 {
        assert_eq!(abelianization(&catalog(Family::BnT, n, None).unwrap()), AbelianInvariants::new(2, &[2]));
        assert_eq!(abelianization(&catalog(Family::BnK, n, None).unwrap()), AbelianInvariants::new(1, &[2, 2]));
    }
    assert_eq!(abelianization(&catalog(Family::P2KReduced, 2, None).unwrap()), AbelianInvariants::new(2, &[2, 2]));
}

/// The single-relation model `2(a₁+…+a_g) = 2(n−1)σ` gives `ℤ^g ⊕ ℤ₂`; the full
/// presentation also forces `σ² = 1`, dropping the free rank by one.
#[test]
fn higher_genus_abelianization() {
    for n in 2..=3usize {
        for g in 3..=4usize {
            let mut row: Vec<i64> = vec![2; g];
            row.push(-2 * (n as i64 - 1));
            let single = AbelianInvariants::of_relation_matrix(&IntMatrix::from_rows(&[row]));
            assert_eq!(single, AbelianInvariants::new(g, &[2]));
            let full = abelianization(&catalog(Family::BnNg, n, Some(g)).unwrap());
            assert_eq!(full, AbelianInvariants::new(g - 1, &[2, 2]), "n={n} g={g}");
        }
    }
}

#[test]
fn derived_instances_vanish_in_abelianization() {
    let bt = catalog(Family::BnT, 5, None).unwrap();
    let model = TorusMetabelianModel::new(5);
    let to_torus: HashMap<Symbol, Word> =
        bt.generators.iter().map(|g| (g.clone(), if g.name() == "s" { w("s") } else { Word::gen(g.clone()) })).collect();
    let inst = derived_relation_instances(5, &[-1, 0, 1], &[-1, 0, 1], None).unwrap();
    assert!(!inst.is_empty());
    for x in &inst {
        assert!(abelian_image_is_zero(&bt, &x.expanded), "{}", x.label);
        let img = surfbraid::words::substitute(&x.expanded, &to_torus).unwrap();
        assert_eq!(model.eval(&img).unwrap(), model.identity(), "{}", x.label);
    }
}

#[test]
fn torus_quotient_receives_b5t() {
    let bt = catalog(Family::BnT, 5, None).unwrap();
    let model = TorusMetabelianModel::new(5);
    let images: HashMap<Symbol, Word> =
        bt.generators.iter().map(|g| (g.clone(), if g.name() == "s" { w("s") } else { Word::gen(g.clone()) })).collect();
    let rep =
        check_homomorphism(
            &bt,
            &images,
            |x| {
                if model.eval(x).unwrap() == model.identity() {
                    Verdict::Trivial
                } else {
                    Verdict::NonTrivial
                }
            },
        )
        .unwrap();
    assert!(rep.all_trivial());
    assert_eq!(model.order(model.eval(&w("s")).unwrap()), Some(10));
    assert_eq!(model.order(model.eval(&w("s^2")).unwrap()), Some(5));
}

#[test]
fn layer_one_is_abelianization() {
    for (fam, n, g) in
        [(Family::BnK, 3, None), (Family::BnT, 3, None), (Family::P2KReduced, 2, None), (Family::Pi1K, 1, None), (Family::BnNg, 2, Some(3))]
    {
        let p = catalog(fam, n, g).unwrap();
        let rep = nilpotent_quotient(&p, 2).unwrap();
        assert_eq!(rep.layers[0], abelianization(&p), "{fam:?}");
    }
}

#[test]
fn layers_stabilize() {
    for (fam, n, g) in [(Family::BnK, 3, None), (Family::BnK, 4, None), (Family::BnNg, 3, Some(3)), (Family::BnK, 2, None)] {
        let rep = nilpotent_quotient(&catalog(fam, n, g).unwrap(), 3).unwrap();
        if let Some(k) = rep.layers.iter().position(|l| l.is_trivial()) {
            assert!(rep.layers[k..].iter().all(|l| l.is_trivial()), "{fam:?} {n}");
        }
    }
}

#[test]
fn klein_collapse_layers() {
    let l2 = |n| nilpotent_quotient(&catalog(Family::BnK, n, None).unwrap(), 3).unwrap().layers[1].clone();
    assert!(!l2(2).is_trivial());
    assert!(l2(3).is_trivial());
    assert!(l2(4).is_trivial());
    let b3n3 = nilpotent_quotient(&catalog(Family::BnNg, 3, Some(3)).unwrap(), 3).unwrap();
    assert!(b3n3.layers[1].is_trivial());
}

#[test]
fn free_layers_are_witt() {
    let f = Presentation::free("F", vec![Symbol::plain("a"), Symbol::plain("b")]);
    let rep = nilpotent_quotient(&f, 3).unwrap();
    let ranks: Vec<usize> = rep.layers.iter().map(|l| l.free_rank).collect();
    assert_eq!(ranks, vec![2, 1, 2]);
    assert!(rep.layers.iter().all(|l| l.torsion.is_empty()));
    let f3 = Presentation::free("F", vec![Symbol::plain("a"), Symbol::plain("b"), Symbol::plain("c")]);
    let rep = nilpotent_quotient(&f3, 4).unwrap();
    for (k, l) in rep.layers.iter().enumerate() {
        assert_eq!(l.free_rank, witt_rank(3, k + 1));
    }
}

#[test]
fn coset_enumeration() {
    let t = todd_coxeter(&s3(), &[w("a")], 100).unwrap();
    assert_eq!(t.index(), 3);
    assert!(t.relators_close(&s3()).unwrap());
    let t1 = todd_coxeter(&s3(), &[], 100).unwrap();
    assert_eq!(t1.index(), 6);
    // index = |image| / |stabilizer of the base coset|
    let model = t.to_model("coset action", 100).unwrap();
    let stab = generated_by_stabilizer(&model);
    assert_eq!(model.order as usize / stab, t.index());
    let p = catalog(Family::BnK, 3, None).unwrap().with_relators("q", &[w("a"), w("b"), w("s[1]^2"), w("s[2]^2")]).unwrap();
    let t = todd_coxeter(&p, &[], 1000).unwrap();
    assert_eq!(t.index(), 6);
}

fn generated_by_stabilizer(m: &FiniteModel) -> usize {
    // elements of the image fixing point 0, by closure from the identity
    let id: Perm = (0..m.degree() as u32).collect();
    let mut seen = std::collections::HashSet::from([id.clone()]);
    let mut stack = vec![id];
    while let Some(x) = stack.pop() {
        for g in &m.images {
            let y = perm_mul(&x, g);
            if seen.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    seen.iter().filter(|p| p[0] == 0).count()
}

#[test]
fn schreier_subgroup_of_s3() {
    let t = todd_coxeter(&s3(), &[w("a")], 100).unwrap();
    let sub = reidemeister_schreier(&t, &s3()).unwrap();
    assert_eq!(abelianization(&sub), AbelianInvariants::new(0, &[2]));
}

#[test]
fn hom_count_matches_brute_force() {
    let p = catalog(Family::Pi1K, 1, None).unwrap();
    let found = hom_search(&p, 3).unwrap().len();
    let s3: Vec<Perm> = vec![vec![0, 1, 2], vec![1, 0, 2], vec![0, 2, 1], vec![2, 1, 0], vec![1, 2, 0], vec![2, 0, 1]];
    let mut count = 0;
    for a in &s3 {
        for b in &s3 {
            // b·a·b⁻¹ = a⁻¹ in left-to-right composition
            if perm_mul(&perm_mul(b, a), &perm_inverse(b)) == perm_inverse(a) {
                count += 1;
            }
        }
    }
    assert_eq!(found, count);
    assert_eq!(found, 18);
}

#[test]
fn tower_goldens() {
    let orders =
        |fam, n| -> Vec<usize> { two_quotient_tower(&catalog(fam, n, None).unwrap(), 5).unwrap().iter().map(|q| q.order_log2()).collect() };
    assert_eq!(orders(Family::P2KReduced, 2), vec![0, 4, 9, 16, 26]);
    assert_eq!(orders(Family::Pi1K, 1), vec![0, 2, 4, 6, 8]);
}

/// Stage 3 is `G/⟨⟨x⁴, [x²,y], [x,y]², [[x,y],z]⟩⟩`; count it by coset enumeration.
#[test]
fn tower_stage_three_by_enumeration() {
    for (fam, n, expect) in [(Family::P2KReduced, 2, 512usize), (Family::Pi1K, 1, 16), (Family::BnK, 2, 64)] {
        let p = catalog(fam, n, None).unwrap();
        let gens = p.generator_words();
        let mut extra = Vec::new();
        for x in &gens {
            extra.push(x.pow(4));
            for y in &gens {
                let xy = surfbraid::words::commutator(x, y);
                extra.push(surfbraid::words::commutator(&x.pow(2), y));
                extra.push(xy.pow(2));
                for z in &gens {
                    extra.push(surfbraid::words::commutator(&xy, z));
                }
            }
        }
        let q = p.with_relators("stage3", &extra).unwrap();
        let t = todd_coxeter(&q, &[], 1 << 16).unwrap();
        assert_eq!(t.index(), expect, "{fam:?}");
        assert_eq!(TwoQuotient::new(&p, 3).unwrap().order() as usize, expect);
    }
}

#[test]
fn tower_surjects_between_stages() {
    let p = catalog(Family::P2KReduced, 2, None).unwrap();
    let t = two_quotient_tower(&p, 4).unwrap();
    for pair in t.windows(2) {
        assert!(pair[1].projects_onto(&pair[0]));
    }
    // squares and commutators of the stage kernel die one stage further
    let q4 = &t[3];
    let k = q4.kernel_to_stage(2);
    for x in ["a[2]^2", "b[2]^2", "a[2]*b[2]*a[2]^-1*b[2]^-1"] {
        assert!(q4.subgroup_contains(&k, &w(x)).unwrap());
        assert!(t[2].is_trivial(&w(x).pow(4)).unwrap());
    }
}

#[test]
fn overflow_is_reported() {
    let z = Presentation::free("Z", vec![Symbol::plain("a")]);
    assert!(matches!(todd_coxeter(&z, &[], 50), Err(surfbraid::Error::Overflow(_))));
}

/// Independent truncated Magnus expansion: `a ↦ 1+X`, `b ↦ 1+Y` in
/// `ℤ⟨X,Y⟩` modulo degree `> c`.
fn magnus_is_one(x: &Word, c: usize) -> bool {
    type Poly = HashMap<Vec<u8>, i128>;
    let mul = |p: &Poly, q: &Poly| -> Poly {
        let mut out = Poly::new();
        for (u, a) in p {
            for (v, b) in q {
                if u.len() + v.len() <= c {
                    *out.entry([u.clone(), v.clone()].concat()).or_insert(0) += a * b;
                }
            }
        }
        out.retain(|_, v| *v != 0);
        out
    };
    let letter = |i: u8, sign: i8| -> Poly {
        let mut p = Poly::from([(vec![], 1)]);
        let mut power = vec![];
        for k in 1..=c {
            power.push(i);
            let coeff = if sign > 0 {
                if k == 1 {
                    1
                } else {
                    0
                }
            } else if k % 2 == 1 {
                -1
            } else {
                1
            };
            if coeff != 0 {
                p.insert(power.clone(), coeff);
            }
        }
        p
    };
    let mut acc = Poly::from([(vec![], 1)]);
    for l in x.letters() {
        let i = if l.sym.name() == "a" { 0 } else { 1 };
        acc = mul(&acc, &letter(i, l.exp));
    }
    acc == Poly::from([(vec![], 1)])
}

fn matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1..4usize, 1..4usize).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-6i64..=6, c), r))
}

proptest! {
    #[test]
    fn snf_ignores_row_and_column_order(rows in matrix(), seed in any::<u64>()) {
        let mut permuted = rows.clone();
        let r = permuted.len();
        permuted.rotate_left((seed as usize) % r);
        let c = permuted[0].len();
        let shift = (seed as usize / 7) % c;
        for row in permuted.iter_mut() {
            row.rotate_left(shift);
        }
        let a = AbelianInvariants::of_relation_matrix(&IntMatrix::from_rows(&rows));
        let b = AbelianInvariants::of_relation_matrix(&IntMatrix::from_rows(&permuted));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn snf_diagonal_divides(rows in matrix()) {
        let d = smith_normal_form(&IntMatrix::from_rows(&rows)).diagonal;
        for pair in d.windows(2) {
            if pair[0] != 0.into() {
                prop_assert!((&pair[1] % &pair[0]) == 0.into());
            }
        }
    }

    #[test]
    fn nil_reduce_matches_series(v in prop::collection::vec((0..2usize, any::<bool>()), 0..=8)) {
        let syms = [Symbol::plain("a"), Symbol::plain("b")];
        let x = Word::from_letters(v.into_iter().map(|(i, p)| Letter::new(syms[i].clone(), if p { 1 } else { -1 })).collect());
        let f = FreeNilpotent::new(&syms, 3).unwrap();
        let via_coordinates = f.reduce(&x).unwrap().is_identity();
        prop_assert_eq!(via_coordinates, magnus_is_one(&x, 3));
    }

    #[test]
    fn nil_coordinates_respect_products(
        u in prop::collection::vec((0..3usize, any::<bool>()), 0..=8),
        v in prop::collection::vec((0..3usize, any::<bool>()), 0..=8),
    ) {
        let syms = [Symbol::plain("a"), Symbol::plain("b"), Symbol::plain("c")];
        let word = |v: Vec<(usize, bool)>| Word::from_letters(v.into_iter().map(|(i, p)| Letter::new(syms[i].clone(), if p { 1 } else { -1 })).collect());
        let (x, y) = (word(u), word(v));
        let f = FreeNilpotent::new(&syms, 4).unwrap();
        let (ex, ey) = (f.reduce(&x).unwrap(), f.reduce(&y).unwrap());
        prop_assert_eq!(f.mul(&ex, &ey), f.reduce(&x.concat(&y)).unwrap());
        prop_assert_eq!(f.reduce(&x.inverse()).unwrap(), f.inverse(&ex));
        prop_assert_eq!(f.reduce(&f.to_word(&ex)).unwrap(), ex);
    }
}

#[test]
fn squaring_a_is_an_endomorphism_of_the_klein_group() {
    let p = catalog(Family::Pi1K, 1, None).unwrap();
    let solver = |x: &Word| match surfbraid::klein::normal_form(1, x) {
        Ok(nf) if nf.is_identity() => Verdict::Trivial,
        Ok(_) => Verdict::NonTrivial,
        Err(_) => Verdict::Indeterminate,
    };
    let identity: HashMap<Symbol, Word> = p.generators.iter().map(|g| (g.clone(), Word::gen(g.clone()))).collect();
    assert!(check_homomorphism(&p, &identity, solver).unwrap().all_trivial());
    // b a² b⁻¹ = a⁻², so the relator image a²·b·a²·b⁻¹ dies
    let mut squared = identity.clone();
    squared.insert(Symbol::new("a", &[1]), w("a[1]^2"));
    let rep = check_homomorphism(&p, &squared, solver).unwrap();
    assert!(rep.all_trivial(), "{:?}", rep.entries);
    let mut broken = identity;
    broken.insert(Symbol::new("b", &[1]), w("a[1]"));
    assert!(!check_homomorphism(&p, &broken, solver).unwrap().all_trivial());
}
