//! Filtrations of semidirect products and the explicit subgroup families used
//! to describe them, compared through finite oracles.
//!
//! Infinite generating families such as `{x^{2^{n−i}} : x ∈ Γ_i(H)}` are
//! represented by their instances on basic commutators of weight exactly `i`;
//! inside a finite 2-group oracle the normal closures agree. Equalities are
//! only ever asserted at oracle resolution.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::{hom_search, perm_inverse, perm_mul, subgroup_image, FiniteModel, Perm, SubgroupDescription, TwoQuotient, WordOracle};
use crate::klein::solver;
use crate::nilpotent::{basic_commutators, NilpotentQuotient};
use crate::presentations::{catalog, pure_generators, Family, Presentation};
use crate::report::CheckReport;
use crate::words::{commutator, left_normed, Symbol, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FiltrationKind {
    LowerCentral,
    Derived,
    GammaP,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiltrationFamily {
    pub kind: FiltrationKind,
    /// Required for `GammaP`; only 2 is supported.
    pub p: Option<u32>,
}

impl FiltrationFamily {
    pub fn lower_central() -> Self {
        FiltrationFamily { kind: FiltrationKind::LowerCentral, p: None }
    }
    pub fn derived() -> Self {
        FiltrationFamily { kind: FiltrationKind::Derived, p: None }
    }
    pub fn gamma2() -> Self {
        FiltrationFamily { kind: FiltrationKind::GammaP, p: Some(2) }
    }
}

fn pow2(k: usize) -> i64 {
    1i64 << k
}

fn dedup(words: Vec<Word>) -> Vec<Word> {
    let mut seen = HashSet::new();
    words.into_iter().map(|w| w.reduced()).filter(|w| !w.is_empty() && seen.insert(w.clone())).collect()
}

// ---------------------------------------------------------------------------
// Split contexts and the filtration recursion

type ActFn = dyn Fn(&Word, &Word) -> Result<Word> + Send + Sync;

/// `H ⋊ G` with `H` free on `fiber`, `G` generated by `base_generators`, and
/// `act(g, h) = φ(g)(h)`.
pub struct SplitContext {
    pub label: String,
    pub fiber: Vec<Symbol>,
    pub base_generators: Vec<Word>,
    act: Box<ActFn>,
}

impl std::fmt::Debug for SplitContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitContext").field("label", &self.label).field("fiber", &self.fiber).finish()
    }
}

impl SplitContext {
    /// `P_{n+1}(K) = F_{n+1} ⋊ s(P_n(K))`; base words are over `P_n(K)`
    /// generators and fiber words over `a_{n+1}, b_{n+1}, D_1..D_{n−1}`.
    pub fn klein(n: usize) -> Result<Self> {
        let s = solver();
        if n == 0 || n + 1 > s.max_level() {
            return Err(Error::BadLevel(n));
        }
        let mut fiber = vec![Symbol::new("a", &[n as i64 + 1]), Symbol::new("b", &[n as i64 + 1])];
        fiber.extend((1..n).map(|j| Symbol::new("D", &[j as i64])));
        Ok(SplitContext {
            label: format!("P{}(K) fiber", n + 1),
            fiber,
            base_generators: pure_generators(n).into_iter().map(Word::gen).collect(),
            act: Box::new(move |g, h| solver().act(n, g, h)),
        })
    }

    /// `π₁(K) = ⟨a₁⟩ ⋊ ⟨b₁⟩` with `b₁` inverting `a₁`.
    pub fn pi1k() -> Self {
        let a1 = Symbol::new("a", &[1]);
        let b1 = Symbol::new("b", &[1]);
        SplitContext {
            label: "Pi1(K)".into(),
            fiber: vec![a1],
            base_generators: vec![Word::gen(b1.clone())],
            act: Box::new(move |g, h| {
                let flips = g.exponent_sum(&b1);
                Ok(if flips % 2 == 0 { h.reduced() } else { h.inverse().reduced() })
            }),
        }
    }

    pub fn act(&self, g: &Word, h: &Word) -> Result<Word> {
        (self.act)(g, h)
    }

    /// `H` as a free group.
    pub fn fiber_group(&self) -> Presentation {
        Presentation::free(&self.label, self.fiber.clone())
    }

    pub fn fiber_words(&self) -> Vec<Word> {
        self.fiber.iter().cloned().map(Word::gen).collect()
    }

    /// `⟨⟨words⟩⟩_H`.
    pub fn describe(&self, label: &str, words: Vec<Word>) -> SubgroupDescription {
        SubgroupDescription::normal(label, &self.fiber_group(), words)
    }
}

/// Normal generators of `K_n`, `L_n` and `V_n`.
#[derive(Clone, Debug)]
pub struct SerieGenerators {
    pub n: usize,
    pub k: Vec<Word>,
    pub l: Vec<Word>,
    pub v: Vec<Word>,
}

impl SerieGenerators {
    pub fn descriptions(&self, ctx: &SplitContext) -> (SubgroupDescription, SubgroupDescription, SubgroupDescription) {
        (
            ctx.describe(&format!("K_{}", self.n), self.k.clone()),
            ctx.describe(&format!("L_{}", self.n), self.l.clone()),
            ctx.describe(&format!("V_{}", self.n), self.v.clone()),
        )
    }
}

/// Generators of `K_n`, `L_n`, `V_n` from the recursion
/// `L_n = ⟨⟨K_n, φ(g)(w)·w⁻¹, [h,w]⟩⟩`, `V_n = ⟨⟨φ(g)(w)·w⁻¹, [h,w]⟩⟩`
/// with `g` over base generators, `h` over fiber generators and `w` over the
/// previous generators; `K_n` uses `g` from `base_lcs(n−1)`.
pub fn serie_generators(ctx: &SplitContext, base_lcs: &dyn Fn(usize) -> Vec<Word>, n: usize) -> Result<SerieGenerators> {
    if !(2..=6).contains(&n) {
        return Err(Error::DepthUnsupported(n));
    }
    let letters = ctx.fiber_words();
    let mut l_prev = letters.clone();
    let mut v_prev = letters.clone();
    let mut k_cur = Vec::new();
    for step in 2..=n {
        let mut k = Vec::new();
        for g in base_lcs(step - 1) {
            for h in &letters {
                k.push(ctx.act(&g, h)?.mul(&h.inverse()));
            }
        }
        let k = dedup(k);
        let grow = |prev: &[Word]| -> Result<Vec<Word>> {
            let mut out = Vec::new();
            for w in prev {
                for g in &ctx.base_generators {
                    out.push(ctx.act(g, w)?.mul(&w.inverse()));
                }
                for h in &letters {
                    out.push(commutator(h, w));
                }
            }
            Ok(out)
        };
        let mut l = k.clone();
        l.extend(grow(&l_prev)?);
        let v = dedup(grow(&v_prev)?);
        l_prev = dedup(l);
        v_prev = v;
        k_cur = k;
    }
    Ok(SerieGenerators { n, k: k_cur, l: l_prev, v: v_prev })
}

/// `Γ_i(s(π₁(K))) = ⟨(a₁a₂)^{2^{i−1}}⟩`, written over `P_1(K)`.
pub fn pi1k_lcs(i: usize) -> Vec<Word> {
    vec![Word::g("a", &[1]).pow(pow2(i.saturating_sub(1)))]
}

// ---------------------------------------------------------------------------
// P_2(K) families

/// The free factor `⟨a₂, b₂⟩` of `P_2(K)`.
pub fn p2k_fiber() -> Vec<Symbol> {
    vec![Symbol::new("a", &[2]), Symbol::new("b", &[2])]
}

/// `{a^{2^{n−1}}} ∪ {x^{2^{n−i}} : x basic of weight i, 2 ≤ i ≤ n}` where `a`
/// is the first fiber letter.
pub fn wn_tilde(n: usize, fiber: &[Symbol]) -> Result<Vec<Word>> {
    if n < 2 || fiber.is_empty() {
        return Err(Error::BadParameters(format!("wn_tilde needs n >= 2, got {n}")));
    }
    let mut out = vec![Word::gen(fiber[0].clone()).pow(pow2(n - 1))];
    for i in 2..=n {
        for x in basic_commutators(fiber, i) {
            out.push(x.pow(pow2(n - i)));
        }
    }
    Ok(dedup(out))
}

fn p2k() -> Presentation {
    catalog(Family::P2KReduced, 2, None).expect("catalog entry")
}

fn a1a2() -> Word {
    Word::g("a", &[1]).mul(&Word::g("a", &[2]))
}

fn b2b1() -> Word {
    Word::g("b", &[2]).mul(&Word::g("b", &[1]))
}

/// `Γ_n(G)` as the normal closure of all brackets `[x₁,[x₂,…,x_n]]` of
/// generators.
pub fn lcs_closure(p: &Presentation, n: usize) -> SubgroupDescription {
    let gens = p.generator_words();
    let words = if n <= 1 {
        gens.clone()
    } else {
        sequences(&gens, n)
            .into_iter()
            .filter(|s| s[n - 1] != s[n - 2])
            .map(|s| left_normed(&s.iter().map(|&i| gens[i].clone()).collect::<Vec<_>>()))
            .collect()
    };
    SubgroupDescription::normal(&format!("Gamma_{n}({}) closure", p.label), p, dedup(words))
}

/// `⟨⟨W̃_n⟩⟩_H ⋊ ⟨(a₁a₂)^{2^{n−1}}⟩` inside `P_2(K)`.
pub fn gamma_p2k_claimed(n: usize) -> Result<SubgroupDescription> {
    let fiber = p2k_fiber();
    Ok(SubgroupDescription::split(
        &format!("Gamma_{n}(P2(K)) claimed"),
        &p2k(),
        wn_tilde(n, &fiber)?,
        fiber.into_iter().map(Word::gen).collect(),
        vec![a1a2().pow(pow2(n - 1))],
    ))
}

/// `⟨⟨W̃_n, b₂^{2^{n−1}}⟩⟩_H ⋊ ⟨(a₁a₂)^{2^{n−1}}, (b₂b₁)^{2^{n−1}}⟩`.
pub fn gamma2_p2k_claimed(n: usize) -> Result<SubgroupDescription> {
    let fiber = p2k_fiber();
    let mut words = wn_tilde(n, &fiber)?;
    words.push(Word::gen(fiber[1].clone()).pow(pow2(n - 1)));
    Ok(SubgroupDescription::split(
        &format!("gamma2_{n}(P2(K)) claimed"),
        &p2k(),
        words,
        fiber.into_iter().map(Word::gen).collect(),
        vec![a1a2().pow(pow2(n - 1)), b2b1().pow(pow2(n - 1))],
    ))
}

/// `L_n ⋊ Γ_n(s(π₁(K)))` from the recursion, inside `P_2(K)`.
pub fn p2k_lcs_from_serie(n: usize) -> Result<SubgroupDescription> {
    let ctx = SplitContext::klein(1)?;
    let gens = serie_generators(&ctx, &pi1k_lcs, n)?;
    let fiber = p2k_fiber();
    Ok(SubgroupDescription::split(
        &format!("L_{n} x Gamma_{n}(G)"),
        &p2k(),
        gens.l,
        fiber.into_iter().map(Word::gen).collect(),
        vec![a1a2().pow(pow2(n - 1))],
    ))
}

// ---------------------------------------------------------------------------
// Commutator families in the fiber

fn sequences(alphabet: &[Word], len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|s| (0..alphabet.len()).map(move |x| [s.clone(), vec![x]].concat())).collect();
    }
    out
}

/// Generators of `E_{l,m}` (or `Ẽ_{l,m}` when `a` is absent).
///
/// Without `a`: basic commutators of weight `i` raised to `2^{m−i}`. With `a`:
/// brackets `[x₁,…,x_i]` over fiber letters and the generators of `a`; one with
/// `c` entries from `a` is raised to `2^{m−i−min(c, m−i)}`.
pub fn elm_generators(l: usize, m: usize, a: Option<&[Word]>, fiber: &[Symbol]) -> Result<Vec<Word>> {
    if l == 0 || l > m {
        return Err(Error::BadParameters(format!("need 1 <= l <= m, got l={l} m={m}")));
    }
    let mut out = Vec::new();
    for i in l..=m {
        match a {
            None => {
                for x in basic_commutators(fiber, i) {
                    out.push(x.pow(pow2(m - i)));
                }
            }
            Some(a) => {
                let mut alphabet: Vec<Word> = fiber.iter().cloned().map(Word::gen).collect();
                let split = alphabet.len();
                alphabet.extend(a.iter().cloned());
                for seq in sequences(&alphabet, i) {
                    if i >= 2 && seq[seq.len() - 1] == seq[seq.len() - 2] {
                        continue;
                    }
                    let c = seq.iter().filter(|&&x| x >= split).count();
                    let xs: Vec<Word> = seq.iter().map(|&x| alphabet[x].clone()).collect();
                    out.push(left_normed(&xs).pow(pow2(m - i - c.min(m - i))));
                }
            }
        }
    }
    Ok(dedup(out))
}

/// Generator instances of the families attached to the fiber of `P_{n+1}(K)`,
/// over its free basis.
#[derive(Clone, Debug)]
pub struct KleinFamilies {
    pub n: usize,
    pub m: usize,
    /// `D_j^{2^{m−2}}`.
    pub a_pow: Vec<Word>,
    pub y: Vec<Word>,
    pub z: Vec<Word>,
    pub ztilde: Vec<Word>,
}

fn d_letters(n: usize) -> Vec<Word> {
    (1..=n).map(|j| Word::g("D", &[j as i64])).collect()
}

/// Brackets of length `i` with exactly `c ≥ need` entries from `a_set`, raised
/// to `2^{e(c)}`.
fn marked_brackets(letters: &[Word], a_set: &[Word], i: usize, exponent: &dyn Fn(usize) -> Option<usize>) -> Vec<Word> {
    let mut alphabet = letters.to_vec();
    let split = alphabet.len();
    alphabet.extend(a_set.iter().cloned());
    let mut out = Vec::new();
    for seq in sequences(&alphabet, i) {
        if seq[i - 1] == seq[i - 2] {
            continue;
        }
        let c = seq.iter().filter(|&&x| x >= split).count();
        if let Some(e) = exponent(c) {
            let xs: Vec<Word> = seq.iter().map(|&x| alphabet[x].clone()).collect();
            out.push(left_normed(&xs).pow(pow2(e)));
        }
    }
    out
}

pub fn klein_series_families(n: usize, m: usize) -> Result<KleinFamilies> {
    if m < 2 {
        return Err(Error::BadParameters(format!("families start at m = 2, got {m}")));
    }
    let s = solver();
    let ctx = SplitContext::klein(n)?;
    let letters = ctx.fiber_words();
    let ds = d_letters(n);
    let basis = |w: Word| s.fiber_reduce(n, &w);
    let a_pow: Vec<Word> = ds.iter().map(|d| d.pow(pow2(m - 2))).collect();
    let gamma2: Vec<Word> = basic_commutators(&ctx.fiber, 2);
    // Y_1 = H; Y_k = ⟨A^{2^{k−2}}, [Y_i, Y_j] : i + j = k⟩
    let mut ys: Vec<Vec<Word>> = vec![Vec::new(), letters.clone()];
    for k in 2..=m {
        let mut gens: Vec<Word> = ds.iter().map(|d| d.pow(pow2(k - 2))).collect();
        if k == 2 {
            gens.extend(gamma2.iter().cloned());
        } else {
            for i in 1..=k / 2 {
                for x in &ys[i] {
                    for y in &ys[k - i] {
                        gens.push(commutator(x, y));
                    }
                }
            }
        }
        ys.push(dedup(gens));
    }
    // Z_2 = Z̃_2 = ⟨D_j, Γ₂(H)⟩; Z_k = ⟨⟨x² : x ∈ Z_{k−1}⟩ ∪ X_k⟩⟩
    let mut z: Vec<Word> = ds.iter().cloned().chain(gamma2.iter().cloned()).collect();
    for k in 3..=m {
        let mut next: Vec<Word> = z.iter().map(|x| x.pow(2)).collect();
        for i in 2..=k {
            next.extend(marked_brackets(&letters, &ds, i, &|c| (c >= k - i).then_some(0)));
        }
        z = dedup(next);
    }
    let mut ztilde = a_pow.clone();
    if m == 2 {
        ztilde.extend(gamma2.iter().cloned());
    } else {
        for i in 2..=m {
            ztilde.extend(marked_brackets(&letters, &ds, i, &|c| Some(m - i - c.min(m - i))));
        }
    }
    let conv = |ws: Vec<Word>| -> Result<Vec<Word>> { Ok(dedup(ws.into_iter().map(basis).collect::<Result<Vec<_>>>()?)) };
    Ok(KleinFamilies { n, m, a_pow: conv(a_pow)?, y: conv(ys[m].clone())?, z: conv(z)?, ztilde: conv(ztilde)? })
}

/// Every generator of `Z̃_m` lies in `γ²_{⌈m/2⌉}(H)`, checked in the free
/// 2-tower stage of that depth.
pub fn acima_check(n: usize, m: usize) -> Result<CheckReport> {
    let fam = klein_series_families(n, m)?;
    let ctx = SplitContext::klein(n)?;
    let depth = m.div_ceil(2);
    let q = TwoQuotient::new(&ctx.fiber_group(), depth)?;
    let mut rep = CheckReport::new(&format!("Ztilde_{m} in gamma2_{depth}(H), H free of rank {}", n + 1));
    for g in &fam.ztilde {
        rep.push(g.to_string(), q.is_trivial(g)?, None);
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Comparison

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparison {
    EqualInOracle,
    AStrictlyInB,
    BStrictlyInA,
    Incomparable,
}

/// Finite oracles for subgroup comparison.
#[derive(Clone, Copy, Debug)]
pub enum Oracle<'a> {
    Tower(&'a TwoQuotient),
    Finite(&'a FiniteModel),
}

impl Comparison {
    pub fn of(a_in_b: bool, b_in_a: bool) -> Self {
        match (a_in_b, b_in_a) {
            (true, true) => Comparison::EqualInOracle,
            (true, false) => Comparison::AStrictlyInB,
            (false, true) => Comparison::BStrictlyInA,
            (false, false) => Comparison::Incomparable,
        }
    }
}

pub fn compare_descriptions(a: &SubgroupDescription, b: &SubgroupDescription, oracle: Oracle<'_>) -> Result<Comparison> {
    if a.ambient.generators != b.ambient.generators {
        return Err(Error::OracleMismatch(format!("{} vs {}", a.ambient.label, b.ambient.label)));
    }
    match oracle {
        Oracle::Tower(q) => {
            let (sa, sb) = (q.subgroup_image(a)?, q.subgroup_image(b)?);
            Ok(Comparison::of(q.subgroup_le(&sa, &sb), q.subgroup_le(&sb, &sa)))
        }
        Oracle::Finite(m) => {
            let (sa, sb) = (subgroup_image(m, a)?, subgroup_image(m, b)?);
            Ok(Comparison::of(sa.elements.is_subset(&sb.elements), sb.elements.is_subset(&sa.elements)))
        }
    }
}

/// `[x^{2^e}, y] ≡ [x, y]^{2^e}` modulo `E_{i+1,m+1}` (or `Ẽ` when `a` is
/// absent), with `x = [x₁,…,x_i]` and `e = m − i − k`; decided in `oracle`,
/// a tower stage of the free group on `fiber`.
pub fn lemaprinc_check(
    xs: &[Word],
    y: &Word,
    m: usize,
    k: usize,
    a: Option<&[Word]>,
    fiber: &[Symbol],
    oracle: &TwoQuotient,
) -> Result<bool> {
    let i = xs.len();
    if i == 0 || i > m || k > m - i {
        return Err(Error::BadParameters(format!("need 1 <= i <= m and k <= m - i (i={i}, m={m}, k={k})")));
    }
    if a.is_none() && k > 0 {
        return Err(Error::BadParameters("k > 0 needs entries from A".into()));
    }
    let e = pow2(m - i - k);
    let x = left_normed(xs);
    let lhs = commutator(&x.pow(e), y);
    let rhs = commutator(&x, y).pow(e);
    let quotient = lhs.mul(&rhs.inverse()).reduced();
    if quotient.is_empty() {
        return Ok(true);
    }
    let gens = elm_generators(i + 1, m + 1, a, fiber)?;
    let desc = SubgroupDescription::normal("E", &Presentation::free("H", fiber.to_vec()), gens);
    let img = oracle.subgroup_image(&desc)?;
    oracle.subgroup_contains(&img, &quotient)
}

// ---------------------------------------------------------------------------
// Separation

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationEntry {
    pub element: Word,
    /// First stage whose oracle sees the element as nontrivial.
    pub separated_at: Option<usize>,
    /// The element is the identity as a free word.
    pub trivial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub group: String,
    pub family: FiltrationFamily,
    pub depth: usize,
    pub grade: String,
    pub entries: Vec<SeparationEntry>,
}

impl SeparationReport {
    pub fn all_separated(&self) -> bool {
        self.entries.iter().all(|e| e.trivial || e.separated_at.is_some())
    }
}

fn derived_length(model: &FiniteModel) -> usize {
    let degree = model.degree();
    let mut current: HashSet<Perm> = generated_by(degree, &model.images);
    let mut len = 0;
    while current.len() > 1 {
        let elems: Vec<&Perm> = current.iter().collect();
        let mut comms = Vec::new();
        for x in &elems {
            for y in &elems {
                comms.push(perm_mul(&perm_mul(&perm_mul(x, y), &perm_inverse(x)), &perm_inverse(y)));
            }
        }
        let next = generated_by(degree, &comms);
        if next.len() == current.len() {
            return usize::MAX;
        }
        current = next;
        len += 1;
    }
    len
}

fn generated_by(degree: usize, gens: &[Perm]) -> HashSet<Perm> {
    let id: Perm = (0..degree as u32).collect();
    let mut seen = HashSet::from([id.clone()]);
    let mut stack = vec![id];
    while let Some(p) = stack.pop() {
        for g in gens {
            let q = perm_mul(&p, g);
            if seen.insert(q.clone()) {
                stack.push(q);
            }
        }
    }
    seen
}

/// For each element, the first filtration stage `k ≤ depth` with the element
/// outside the `k`-th term, as seen by finite oracles: tower stages for `γ²`,
/// nilpotent quotients (class ≤ 4) for `Γ`, and permutation images of degree
/// ≤ 4 for the derived series. Evidence only: a miss proves nothing.
pub fn residual_separation(p: &Presentation, elements: &[Word], family: FiltrationFamily, depth: usize) -> Result<SeparationReport> {
    let mut entries: Vec<SeparationEntry> =
        elements.iter().map(|w| SeparationEntry { element: w.clone(), separated_at: None, trivial: w.reduced().is_empty() }).collect();
    let grade = match family.kind {
        FiltrationKind::GammaP => {
            if family.p != Some(2) {
                return Err(Error::BadParameters("only p = 2 is supported".into()));
            }
            for k in 1..=depth {
                let q = TwoQuotient::new(p, k)?;
                for e in entries.iter_mut().filter(|e| e.separated_at.is_none() && !e.trivial) {
                    if !q.is_trivial(&e.element)? {
                        e.separated_at = Some(k);
                    }
                }
            }
            "evidence: mod-2 tower stages G/gamma2_k"
        }
        FiltrationKind::LowerCentral => {
            for k in 2..=depth.min(5) {
                let q = NilpotentQuotient::new(p, k - 1)?;
                for e in entries.iter_mut().filter(|e| e.separated_at.is_none() && !e.trivial) {
                    if !q.is_trivial(&e.element)? {
                        e.separated_at = Some(k);
                    }
                }
            }
            "evidence: nilpotent quotients G/Gamma_k"
        }
        FiltrationKind::Derived => {
            let models = hom_search(p, 4)?;
            for m in &models {
                let len = derived_length(m);
                if len == usize::MAX || len > depth {
                    continue;
                }
                for e in entries.iter_mut().filter(|e| !e.trivial) {
                    if !m.is_trivial(&e.element)? && e.separated_at.is_none_or(|s| len < s) {
                        e.separated_at = Some(len);
                    }
                }
            }
            "evidence: solvable permutation images of degree <= 4"
        }
    };
    Ok(SeparationReport { group: p.label.clone(), family, depth, grade: grade.into(), entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::w;

    #[test]
    fn wn_tilde_small() {
        let f = p2k_fiber();
        assert_eq!(wn_tilde(2, &f).unwrap(), vec![w("a[2]^2"), w("a[2]*b[2]*a[2]^-1*b[2]^-1")]);
        let g3 = wn_tilde(3, &f).unwrap();
        assert_eq!(g3.len(), 1 + 1 + 2);
        assert!(wn_tilde(1, &f).is_err());
    }

    #[test]
    fn pi1k_recursion() {
        let ctx = SplitContext::pi1k();
        let abelian_base = |i: usize| if i == 1 { vec![w("b[1]")] } else { Vec::new() };
        let g = serie_generators(&ctx, &abelian_base, 3).unwrap();
        let a1 = Symbol::new("a", &[1]);
        let exps: Vec<i64> = g.l.iter().map(|x| x.exponent_sum(&a1).abs()).collect();
        assert_eq!(exps, vec![4]);
    }

    #[test]
    fn k3_is_a2_fourth() {
        let ctx = SplitContext::klein(1).unwrap();
        let g = serie_generators(&ctx, &pi1k_lcs, 3).unwrap();
        assert_eq!(g.k, vec![w("a[2]^-4")]);
    }

    #[test]
    fn elm_small() {
        let f = p2k_fiber();
        assert_eq!(elm_generators(2, 2, None, &f).unwrap(), basic_commutators(&f, 2));
        assert!(elm_generators(3, 2, None, &f).is_err());
    }
}
