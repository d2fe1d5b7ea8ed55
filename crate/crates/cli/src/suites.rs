//! Named verification suites.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use surfbraid::finite::{hom_search, todd_coxeter, FiniteModel, TwoQuotient, WordOracle};
use surfbraid::klein::{self, corrupted_section, section_splits, solver, verify_section_with};
use surfbraid::nilpotent::NilpotentQuotient;
use surfbraid::presentations::{abelian_image_is_zero, catalog, derived_relation_instances, Family, Presentation, TorusMetabelianModel};
use surfbraid::series::{
    acima_check, compare_descriptions, gamma2_p2k_claimed, gamma_p2k_claimed, lcs_closure, p2k_lcs_from_serie, residual_separation,
    Comparison, FiltrationFamily, Oracle,
};
use surfbraid::words::{colchete_rhs, commutator, free_reduce, substitute, w, Letter, Symbol, Word};
use surfbraid::{CheckReport, Error, Result};

pub const SUITES: [&str; 12] = [
    "colchete",
    "section",
    "action",
    "center",
    "gammaP2",
    "gamma2P2",
    "klein-collapse",
    "klein-derived",
    "torus-derived",
    "bnT1-instances",
    "nonorientable",
    "separation",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Indeterminate => "INDETERMINATE",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Claim {
    pub id: String,
    pub verdict: Verdict,
    pub ms: u64,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub bounds: BTreeMap<String, Value>,
    pub claims: Vec<Claim>,
}

impl SuiteResult {
    pub fn all_pass(&self) -> bool {
        self.claims.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn claim(&self, id: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.id == id)
    }
}

/// Command-line bounds; `None` means the suite default.
#[derive(Clone, Copy, Debug, Default)]
pub struct Bounds {
    pub max_cosets: Option<usize>,
    pub class: Option<usize>,
    pub depth: Option<usize>,
    pub seed: Option<u64>,
}

/// Outcome of one claim check: holds, plus an optional witness.
type Check = Result<(bool, Option<String>)>;

struct Runner {
    name: String,
    bounds: BTreeMap<String, Value>,
    claims: Vec<Claim>,
}

impl Runner {
    fn new(name: &str) -> Self {
        Runner { name: name.into(), bounds: BTreeMap::new(), claims: Vec::new() }
    }

    fn bound(&mut self, key: &str, v: impl Into<Value>) {
        self.bounds.insert(key.into(), v.into());
    }

    fn claim(&mut self, id: impl Into<String>, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let out = f();
        let ms = start.elapsed().as_millis() as u64;
        let (verdict, witness) = match out {
            Ok((true, w)) => (Verdict::Pass, w),
            Ok((false, w)) => (Verdict::Fail, Some(w.unwrap_or_else(|| "claim does not hold".into()))),
            Err(e @ (Error::Overflow(_) | Error::IncompleteTable | Error::DepthUnsupported(_) | Error::ClassUnsupported(_))) => {
                (Verdict::Indeterminate, Some(e.to_string()))
            }
            Err(e) => (Verdict::Fail, Some(e.to_string())),
        };
        self.claims.push(Claim { id: id.into(), verdict, ms, witness });
    }

    fn report(&mut self, id: impl Into<String>, rep: Result<CheckReport>) {
        self.claim(id, || {
            let rep = rep?;
            let bad: Vec<String> = rep
                .failures()
                .map(|e| format!("{}{}", e.label, e.witness.as_ref().map(|w| format!(": {w}")).unwrap_or_default()))
                .collect();
            Ok((bad.is_empty(), (!bad.is_empty()).then(|| bad.join("; "))))
        });
    }

    fn finish(mut self) -> SuiteResult {
        self.claims.sort_by(|a, b| a.id.cmp(&b.id));
        SuiteResult { suite: self.name, bounds: self.bounds, claims: self.claims }
    }
}

pub fn run_suite(name: &str, b: &Bounds) -> Option<SuiteResult> {
    let r = match name {
        "colchete" => colchete(b),
        "section" => section(b),
        "action" => action(b),
        "center" => center(b),
        "gammaP2" => gamma_p2(b),
        "gamma2P2" => gamma2_p2(b),
        "klein-collapse" => klein_collapse(b),
        "klein-derived" => klein_derived(b),
        "torus-derived" => torus_derived(b),
        "bnT1-instances" => bnt1_instances(b),
        "nonorientable" => nonorientable(b),
        "separation" => separation(b),
        _ => return None,
    };
    Some(r)
}

fn words_up_to(len: usize) -> Vec<Word> {
    let letters: Vec<Letter> =
        ["a", "b"].iter().flat_map(|s| [Letter::new(Symbol::plain(s), 1), Letter::new(Symbol::plain(s), -1)]).collect();
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..len {
        layer = layer
            .iter()
            .flat_map(|x| {
                letters
                    .iter()
                    .filter(move |l| x.letters().last() != Some(&l.inverse()))
                    .map(move |l| x.concat(&Word::from_letters(vec![l.clone()])))
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn random_word(rng: &mut ChaCha8Rng, len: usize) -> Word {
    let syms = [Symbol::plain("a"), Symbol::plain("b"), Symbol::plain("c")];
    Word::from_letters((0..len).map(|_| Letter::new(syms[rng.gen_range(0..3)].clone(), if rng.gen() { 1 } else { -1 })).collect())
}

fn colchete(b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("colchete");
    let seed = b.seed.unwrap_or(0);
    r.bound("word_length", 3);
    r.bound("seed", seed);
    let ws = words_up_to(3);
    for n in 1..=4u32 {
        r.claim(format!("colchete-n{n}"), || {
            for x in &ws {
                for y in &ws {
                    if commutator(&x.pow(1 << n), y) != colchete_rhs(x, y, n) {
                        return Ok((false, Some(format!("x={x} y={y}"))));
                    }
                }
            }
            Ok((true, None))
        });
    }
    r.claim("itercomm-n1", || {
        let (a, bb) = (w("a"), w("b"));
        let rhs = commutator(&a, &commutator(&a, &bb)).mul(&commutator(&a, &bb).pow(2));
        Ok((commutator(&a.pow(2), &bb) == rhs, None))
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Word> = (0..256)
        .map(|_| {
            let len = rng.gen_range(0..=64);
            random_word(&mut rng, len)
        })
        .collect();
    r.claim("reduce-idempotent", || {
        let bad = samples.iter().find(|x| free_reduce(&free_reduce(x)) != free_reduce(x));
        Ok((bad.is_none(), bad.map(|x| x.to_string())))
    });
    r.claim("reduce-inverse", || {
        let bad = samples.iter().find(|x| !x.mul(&x.inverse()).is_empty());
        Ok((bad.is_none(), bad.map(|x| x.to_string())))
    });
    let images: HashMap<Symbol, Word> = ["a", "b", "c"].iter().map(|s| (Symbol::plain(s), random_word(&mut rng, 3))).collect();
    r.claim("substitute-reduction", || {
        for x in &samples {
            if substitute(&free_reduce(x), &images)? != substitute(x, &images)? {
                return Ok((false, Some(x.to_string())));
            }
        }
        Ok((true, None))
    });
    r.finish()
}

fn levels(b: &Bounds, default: usize, max: usize) -> usize {
    b.depth.unwrap_or(default).clamp(1, max)
}

fn section(b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("section");
    let top = levels(b, 3, klein::MAX_LEVEL - 1);
    r.bound("levels", top);
    for n in 1..=top {
        r.report(format!("section-n{n}"), klein::verify_section(n));
        r.claim(format!("section-splits-n{n}"), || Ok((section_splits(n), None)));
    }
    r.claim("corrupted-section-rejected-n2", || {
        let rep = verify_section_with(2, &corrupted_section(2))?;
        let fails: Vec<String> = rep.failures().map(|e| e.label.clone()).collect();
        let caught = fails.iter().any(|l| l.starts_with("(2)"));
        Ok((caught, Some(format!("failing relations: {}", fails.join("; ")))))
    });
    r.finish()
}

fn action(b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("action");
    let top = levels(b, 3, klein::MAX_LEVEL - 1);
    r.bound("levels", top);
    for n in 1..=top {
        r.report(format!("action-n{n}"), klein::verify_action(n));
    }
    r.finish()
}

fn center(b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("center");
    let top = levels(b, 3, klein::MAX_LEVEL);
    r.bound("levels", top);
    for n in 1..=top {
        r.report(format!("center-n{n}"), klein::verify_central(n));
    }
    r.claim("negative-control-b2sq-a2", || {
        let c = commutator(&w("b[2]^2"), &w("a[2]"));
        let nf = solver().normal_form(2, &c)?;
        Ok((!nf.is_identity(), Some(nf.to_string())))
    });
    r.finish()
}

fn p2k() -> Presentation {
    catalog(Family::P2KReduced, 2, None).expect("catalog")
}

fn tower_depth(b: &Bounds, default: usize) -> usize {
    b.depth.unwrap_or(default).clamp(2, 7)
}

fn gamma_p2(b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("gammaP2");
    let depth = tower_depth(b, 5).max(4);
    r.bound("tower_depth", depth);
    let p = p2k();
    for stage in 3..=depth {
        let q = match TwoQuotient::new(&p, stage) {
            Ok(q) => q,
            Err(e) => {
                r.claim(format!("tower-stage{stage}"), || Err(e));
                continue;
            }
        };
        for n in 2..=3 {
            if stage < n + 1 {
                continue;
            }
            r.claim(format!("gamma-n{n}-stage{stage}"), || {
                let c = compare_descriptions(&gamma_p2k_claimed(n)?, &lcs_closure(&p, n), Oracle::Tower(&q))?;
                Ok((c == Comparison::EqualInOracle, Some(format!("{c:?}"))))
            });
            r.claim(format!("serie-n{n}-stage{stage}"), || {
                let c = compare_descriptions(&p2k_lcs_from_serie(n)?, &lcs_closure(&p, n), Oracle::Tower(&q))?;
                Ok((c == Comparison::EqualInOracle, Some(format!("{c:?}"))))
            });
        }
    }
    r.finish()
}

fn gamma2_p2(b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("gamma2P2");
    let depth = tower_depth(b, 5).max(3);
    r.bound("tower_depth", depth);
    let p = p2k();
    let max_cosets = b.max_cosets.unwrap_or(1 << 16);
    r.bound("max_cosets", max_cosets);
    r.claim("stage2-order-16", || {
        let q = TwoQuotient::new(&p, 2)?;
        Ok((q.order() == 16, Some(format!("order {}", q.order()))))
    });
    // G/G²[G,G] and the next stage from explicit relators, by coset enumeration
    for stage in 2..=3 {
        r.claim(format!("stage{stage}-order-by-enumeration"), || {
            let t = todd_coxeter(&p.with_relators("stage", &stage_relators(&p, stage))?, &[], max_cosets)?;
            let q = TwoQuotient::new(&p, stage)?;
            Ok((t.index() as u128 == q.order(), Some(format!("{} cosets", t.index()))))
        });
    }
    for stage in 2..=depth {
        let q = match TwoQuotient::new(&p, stage) {
            Ok(q) => q,
            Err(e) => {
                r.claim(format!("tower-stage{stage}"), || Err(e));
                continue;
            }
        };
        for n in 2..=3.min(stage) {
            r.claim(format!("gamma2-n{n}-stage{stage}"), || {
                let img = q.subgroup_image(&gamma2_p2k_claimed(n)?)?;
                let k = q.kernel_to_stage(n);
                let c = Comparison::of(q.subgroup_le(&img, &k), q.subgroup_le(&k, &img));
                Ok((c == Comparison::EqualInOracle, Some(format!("{c:?}, 2^{} vs 2^{}", img.order_log2(), k.order_log2()))))
            });
        }
    }
    r.finish()
}

/// Relators cutting `G` down to `G/γ²_k` for `k ∈ {2, 3}`.
fn stage_relators(p: &Presentation, k: usize) -> Vec<Word> {
    let gens = p.generator_words();
    let mut out = Vec::new();
    for x in &gens {
        out.push(x.pow(if k == 2 { 2 } else { 4 }));
        for y in &gens {
            let xy = commutator(x, y);
            if k == 2 {
                out.push(xy);
                continue;
            }
            out.push(commutator(&x.pow(2), y));
            out.push(xy.pow(2));
            for z in &gens {
                out.push(commutator(&xy, z));
            }
        }
    }
    out
}

/// Trivial in the abelianization, in the class-`c` quotient and in every
/// permutation image of degree at most `degree`.
fn battery(p: &Presentation, x: &Word, class: usize, degree: usize, models: &[FiniteModel]) -> Check {
    if !abelian_image_is_zero(p, x) {
        return Ok((false, Some("nonzero abelian image".into())));
    }
    let nq = NilpotentQuotient::new(p, class)?;
    if !nq.is_trivial(x)? {
        return Ok((false, Some(format!("nontrivial at class {class}"))));
    }
    if let Some(m) = models.iter().find(|m| !m.is_trivial(x).unwrap_or(false)) {
        return Ok((false, Some(format!("nontrivial in a degree-{} image of order {}", m.degree(), m.order))));
    }
    Ok((true, Some(format!("necessary conditions only: abelianization, class {class}, {} images of degree <= {degree}", models.len()))))
}

fn klein_collapse(b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("klein-collapse");
    let class = b.class.unwrap_or(3);
    r.bound("class", class);
    r.bound("hom_degree", 4);
    r.bound("grade", "necessary-condition");
    for (n, trivial) in [(2, false), (3, true), (4, true)] {
        r.claim(format!("layer2-B{n}K-{}", if trivial { "trivial" } else { "nontrivial" }), || {
            let q = NilpotentQuotient::new(&catalog(Family::BnK, n, None)?, class)?;
            let l = q.layer(2);
            Ok((l.is_trivial() == trivial, Some(format!("{l:?}"))))
        });
    }
    for n in [3usize, 4] {
        let p = catalog(Family::BnK, n, None).expect("catalog");
        r.claim(format!("s2inv-s1-abelian-zero-B{n}K"), || Ok((abelian_image_is_zero(&p, &w("s[2]^-1*s[1]")), None)));
        let q = match p.with_relators(&format!("B{n}(K)/<s1=s2>"), &[w("s[1]*s[2]^-1")]) {
            Ok(q) => q,
            Err(e) => {
                r.claim(format!("quotient-B{n}K"), || Err(e));
                continue;
            }
        };
        let models = hom_search(&q, 4).unwrap_or_default();
        let models: Vec<FiniteModel> = models.into_iter().filter(|m| !m.is_abelian()).collect();
        r.claim(format!("no-nonabelian-image-B{n}K"), || Ok((models.is_empty(), Some(format!("{} nonabelian images", models.len())))));
        for (label, x) in [
            ("s1-s2", "s[1]*s[2]*s[1]^-1*s[2]^-1"),
            ("a-s1", "a*s[1]*a^-1*s[1]^-1"),
            ("b-s1", "b*s[1]*b^-1*s[1]^-1"),
            ("b-a", "b*a*b^-1*a^-1"),
        ] {
            r.claim(format!("quotient-B{n}K-{label}-trivial"), || battery(&q, &w(x), class, 4, &models));
        }
    }
    r.finish()
}

fn derived_length(m: &FiniteModel) -> Option<usize> {
    let model = m.clone();
    let mut gens = model.images.clone();
    let mut len = 0;
    let mut size = model.order as usize;
    loop {
        if size == 1 {
            return Some(len);
        }
        let elems = closure(&gens, model.degree());
        let mut next = Vec::new();
        for x in &elems {
            for y in &elems {
                use surfbraid::finite::{perm_inverse, perm_mul};
                next.push(perm_mul(&perm_mul(&perm_mul(x, y), &perm_inverse(x)), &perm_inverse(y)));
            }
        }
        next.sort();
        next.dedup();
        let new_size = closure(&next, model.degree()).len();
        if new_size == size {
            return None;
        }
        gens = next;
        size = new_size;
        len += 1;
    }
}

fn closure(gens: &[Vec<u32>], degree: usize) -> Vec<Vec<u32>> {
    use surfbraid::finite::perm_mul;
    let id: Vec<u32> = (0..degree as u32).collect();
    let mut seen = std::collections::HashSet::from([id.clone()]);
    let mut stack = vec![id];
    while let Some(p) = stack.pop() {
        for g in gens {
            let q = perm_mul(&p, g);
            if seen.insert(q.clone()) {
                stack.push(q);
            }
        }
    }
    seen.into_iter().collect()
}

fn klein_derived(_b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("klein-derived");
    let degree = 4;
    r.bound("hom_degree", degree);
    r.bound("grade", "necessary-condition");
    // a metabelian image of B_n(K) factors through B_n(K)/B_n(K)'' = B_n(K)^Ab
    for (n, collapses) in [(4usize, false), (5, true)] {
        r.claim(format!("metabelian-images-abelian-B{n}K"), || {
            let p = catalog(Family::BnK, n, None)?;
            let models = hom_search(&p, degree)?;
            let meta: Vec<&FiniteModel> = models.iter().filter(|m| !m.is_abelian() && derived_length(m).is_some_and(|l| l <= 2)).collect();
            let holds = meta.is_empty() == collapses;
            Ok((holds, Some(format!("{} images, {} nonabelian metabelian", models.len(), meta.len()))))
        });
    }
    r.claim("sigma-cosets-agree-B5K", || {
        let p = catalog(Family::BnK, 5, None)?;
        let models = hom_search(&p, degree)?;
        for m in models.iter().filter(|m| derived_length(m).is_some_and(|l| l <= 2)) {
            for i in 1..4 {
                let x = Word::g("s", &[i]).mul(&Word::g("s", &[i + 1]).inverse());
                if !m.is_trivial(&x)? {
                    return Ok((false, Some(format!("{x} survives"))));
                }
            }
        }
        Ok((true, None))
    });
    r.finish()
}

fn torus_images(p: &Presentation) -> HashMap<Symbol, Word> {
    p.generators.iter().map(|g| (g.clone(), if g.name() == "s" { w("s") } else { Word::gen(g.clone()) })).collect()
}

fn torus_derived(b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("torus-derived");
    let n = b.depth.unwrap_or(5).clamp(3, 12);
    r.bound("n", n);
    let model = TorusMetabelianModel::new(n);
    r.claim(format!("sigma-order-{}", 2 * n), || {
        let ord = model.order(model.eval(&w("s"))?);
        Ok((ord == Some(2 * n as u64), Some(format!("{ord:?}"))))
    });
    r.claim(format!("relators-B{n}T-trivial"), || {
        let p = catalog(Family::BnT, n, None)?;
        let images = torus_images(&p);
        for rel in &p.relators {
            let img = substitute(rel, &images)?;
            if model.eval(&img)? != model.identity() {
                return Ok((false, Some(rel.to_string())));
            }
        }
        Ok((true, None))
    });
    r.claim("model-relators-trivial", || {
        let p = catalog(Family::TorusMetabelian, n, None)?;
        Ok((p.relators.iter().all(|x| model.eval(x).map(|e| e == model.identity()).unwrap_or(false)), None))
    });
    r.finish()
}

fn bnt1_instances(b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("bnT1-instances");
    let n = 5;
    let class = b.class.unwrap_or(2);
    r.bound("n", n);
    r.bound("k_range", json!([-1, 0, 1]));
    r.bound("m_range", json!([-1, 0, 1]));
    r.bound("class", class);
    r.bound("grade", "necessary-condition");
    let p = catalog(Family::BnT, n, None).expect("catalog");
    let inst = match derived_relation_instances(n, &[-1, 0, 1], &[-1, 0, 1], None) {
        Ok(i) => i,
        Err(e) => {
            r.claim("instances", || Err(e));
            return r.finish();
        }
    };
    let model = TorusMetabelianModel::new(n);
    let images = torus_images(&p);
    let nq = NilpotentQuotient::new(&p, class);
    let mut families: Vec<u8> = inst.iter().map(|x| x.family).collect();
    families.sort();
    families.dedup();
    for fam in families {
        r.claim(format!("family-{fam}"), || {
            let nq = nq.as_ref().map_err(Clone::clone)?;
            let mut count = 0;
            for x in inst.iter().filter(|x| x.family == fam) {
                count += 1;
                if !abelian_image_is_zero(&p, &x.expanded) {
                    return Ok((false, Some(format!("{}: nonzero abelian image", x.label))));
                }
                if model.eval(&substitute(&x.expanded, &images)?)? != model.identity() {
                    return Ok((false, Some(format!("{}: nontrivial in the metabelian model", x.label))));
                }
                if !nq.is_trivial(&x.expanded)? {
                    return Ok((false, Some(format!("{}: nontrivial at class {class}", x.label))));
                }
            }
            Ok((true, Some(format!("{count} instances"))))
        });
    }
    r.finish()
}

fn nonorientable(b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("nonorientable");
    let class = b.class.unwrap_or(3);
    r.bound("class", class);
    for g in [3usize, 4] {
        r.claim(format!("layer2-B3N{g}-trivial"), || {
            let q = NilpotentQuotient::new(&catalog(Family::BnNg, 3, Some(g))?, class)?;
            let l = q.layer(2);
            Ok((l.is_trivial(), Some(format!("{l:?}"))))
        });
    }
    for n in [3usize, 4] {
        r.claim(format!("s-cosets-agree-B{n}N3"), || {
            let p = catalog(Family::BnNg, n, Some(3))?;
            let q = NilpotentQuotient::new(&p, class)?;
            Ok((q.is_trivial(&w("s[1]*s[2]^-1"))?, None))
        });
    }
    r.finish()
}

fn separation(b: &Bounds) -> SuiteResult {
    let mut r = Runner::new("separation");
    let depth = b.depth.unwrap_or(4).clamp(2, 6);
    r.bound("tower_depth", depth);
    r.bound("acima_m_max", 5);
    r.bound("grade", "evidence");
    let p = p2k();
    let elements =
        [("a2", "a[2]"), ("b2sq", "b[2]^2"), ("comm-a2-b2", "a[2]*b[2]*a[2]^-1*b[2]^-1"), ("a2-b2-a2inv-b2", "a[2]*b[2]*a[2]^-1*b[2]")];
    let words: Vec<Word> = elements.iter().map(|(_, x)| w(x)).collect();
    let rep = residual_separation(&p, &words, FiltrationFamily::gamma2(), depth);
    for (i, (label, _)) in elements.iter().enumerate() {
        r.claim(format!("separate-{label}"), || {
            let rep = rep.as_ref().map_err(Clone::clone)?;
            let e = &rep.entries[i];
            Ok((
                e.separated_at.is_some(),
                Some(match e.separated_at {
                    Some(k) => format!("outside gamma2_{k}"),
                    None => format!("not separated within depth {depth}"),
                }),
            ))
        });
    }
    for m in 2..=5 {
        r.report(format!("acima-m{m}"), acima_check(2, m));
    }
    r.finish()
}
