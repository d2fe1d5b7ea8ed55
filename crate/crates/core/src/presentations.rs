//! Finitely presented groups: the surface braid catalog, relation checking,
//! abelianization and the derived-subgroup generators of `B_n(T)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snf::{AbelianInvariants, IntMatrix};
use crate::words::{commutator, substitute, Symbol, Word};

/// A relation `lhs = rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub lhs: Word,
    pub rhs: Word,
}

impl Relation {
    pub fn new(lhs: Word, rhs: Word) -> Self {
        Relation { lhs, rhs }
    }

    /// `lhs·rhs⁻¹`, reduced.
    pub fn relator(&self) -> Word {
        self.lhs.mul(&self.rhs.inverse())
    }
}

/// Generators plus relators; relations are kept for printing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub label: String,
    pub generators: Vec<Symbol>,
    pub relations: Vec<Relation>,
    pub relators: Vec<Word>,
}

impl Presentation {
    /// Builds a presentation, checking that every relation uses declared symbols.
    pub fn new(label: &str, generators: Vec<Symbol>, relations: Vec<Relation>) -> Result<Self> {
        for r in &relations {
            for s in r.lhs.symbols().into_iter().chain(r.rhs.symbols()) {
                if !generators.contains(&s) {
                    return Err(Error::UnmappedSymbol(s.to_string()));
                }
            }
        }
        let relators = relations.iter().map(Relation::relator).collect();
        Ok(Presentation { label: label.to_string(), generators, relations, relators })
    }

    /// Presentation with relators given directly.
    pub fn from_relators(label: &str, generators: Vec<Symbol>, relators: Vec<Word>) -> Result<Self> {
        let relations = relators.into_iter().map(|r| Relation::new(r, Word::empty())).collect();
        Presentation::new(label, generators, relations)
    }

    /// The free group on the given symbols.
    pub fn free(label: &str, generators: Vec<Symbol>) -> Self {
        Presentation { label: label.to_string(), generators, relations: Vec::new(), relators: Vec::new() }
    }

    /// A copy with extra relators appended.
    pub fn with_relators(&self, label: &str, extra: &[Word]) -> Result<Self> {
        let mut relations = self.relations.clone();
        relations.extend(extra.iter().map(|w| Relation::new(w.clone(), Word::empty())));
        Presentation::new(label, self.generators.clone(), relations)
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generator_words(&self) -> Vec<Word> {
        self.generators.iter().cloned().map(Word::gen).collect()
    }

    /// Exponent-sum matrix (relators × generators).
    pub fn exponent_matrix(&self) -> IntMatrix {
        let mut m = IntMatrix::zeros(self.relators.len(), self.generators.len());
        for (i, r) in self.relators.iter().enumerate() {
            for (j, g) in self.generators.iter().enumerate() {
                m.set(i, j, BigInt::from(r.exponent_sum(g)));
            }
        }
        m
    }

    /// Text form: `group`, `gens:` and `rel:` lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("group {}\n", self.label);
        let gens: Vec<String> = self.generators.iter().map(|g| g.to_string()).collect();
        out.push_str(&format!("gens: {}\n", gens.join(", ")));
        for r in &self.relations {
            if r.rhs.is_empty() {
                out.push_str(&format!("rel: {}\n", r.lhs));
            } else {
                out.push_str(&format!("rel: {} = {}\n", r.lhs, r.rhs));
            }
        }
        out
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Presentation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut label = None;
        let mut gens = None;
        let mut relations = Vec::new();
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            if let Some(rest) = line.strip_prefix("group") {
                label = Some(rest.trim().to_string());
            } else if let Some(rest) = line.strip_prefix("gens:") {
                let mut list = Vec::new();
                for item in split_top_level(rest) {
                    let w: Word = item.parse()?;
                    match w.letters() {
                        [l] if l.exp == 1 => list.push(l.sym.clone()),
                        _ => return Err(Error::Parse(format!("bad generator {item:?}"))),
                    }
                }
                gens = Some(list);
            } else if let Some(rest) = line.strip_prefix("rel:") {
                let mut sides = rest.splitn(2, '=');
                let lhs: Word = sides.next().unwrap_or("").parse()?;
                let rhs: Word = match sides.next() {
                    Some(r) => r.parse()?,
                    None => Word::empty(),
                };
                relations.push(Relation::new(lhs, rhs));
            } else {
                return Err(Error::Parse(format!("unrecognised line {line:?}")));
            }
        }
        let label = label.ok_or_else(|| Error::Parse("missing 'group' line".into()))?;
        let gens = gens.ok_or_else(|| Error::Parse("missing 'gens:' line".into()))?;
        Presentation::new(&label, gens, relations)
    }
}

/// Splits on commas that are not inside brackets.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() {
        out.push(last);
    }
    out
}

// ---------------------------------------------------------------------------
// Catalog

/// Presentation families available from [`catalog`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    PnT,
    PnK,
    BnT,
    BnK,
    BnNg,
    P2KReduced,
    Pi1K,
    TorusMetabelian,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "PnT" => Family::PnT,
            "PnK" => Family::PnK,
            "BnT" => Family::BnT,
            "BnK" => Family::BnK,
            "BnNg" => Family::BnNg,
            "P2K_reduced" | "P2KReduced" => Family::P2KReduced,
            "Pi1K" => Family::Pi1K,
            "TorusMetabelian" => Family::TorusMetabelian,
            _ => return Err(Error::BadParameters(format!("unknown family {s:?}"))),
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Surface {
    Torus,
    Klein,
}

fn sym_a(i: i64) -> Word {
    Word::g("a", &[i])
}
fn sym_b(i: i64) -> Word {
    Word::g("b", &[i])
}
fn sigma(i: i64) -> Word {
    Word::g("s", &[i])
}

/// `C_{i,j}` with `C_{i,i}` the empty word.
pub fn c_word(i: i64, j: i64) -> Word {
    if i == j {
        Word::empty()
    } else {
        Word::g("C", &[i, j])
    }
}

fn prod(ws: &[Word]) -> Word {
    ws.iter().fold(Word::empty(), |acc, w| acc.mul(w))
}

fn inv(w: &Word) -> Word {
    w.inverse()
}

/// Generators `a_1..a_n, b_1..b_n, C_{i,j}` (i<j, lexicographic).
pub fn pure_generators(n: usize) -> Vec<Symbol> {
    let n = n as i64;
    let mut g: Vec<Symbol> = (1..=n).map(|i| Symbol::new("a", &[i])).collect();
    g.extend((1..=n).map(|i| Symbol::new("b", &[i])));
    for i in 1..=n {
        for j in i + 1..=n {
            g.push(Symbol::new("C", &[i, j]));
        }
    }
    g
}

/// Relations of `P_n(M)` tagged with their family number `1..=8`.
fn pure_relations_tagged(n: usize, surface: Surface) -> Vec<(u8, Relation)> {
    let mut starts = Vec::new();
    let n = n as i64;
    let (a, b, c) = (sym_a, sym_b, c_word);
    let mut rels = Vec::new();
    // (1)
    starts.push(rels.len());
    for i in 1..=n {
        for j in i + 1..=n {
            rels.push(Relation::new(a(i).mul(&a(j)), a(j).mul(&a(i))));
        }
    }
    // (2)
    starts.push(rels.len());
    for i in 1..=n {
        for j in i + 1..=n {
            rels.push(Relation::new(prod(&[inv(&a(i)), b(j), a(i)]), prod(&[b(j), a(j), inv(&c(i, j)), c(i + 1, j), inv(&a(j))])));
        }
    }
    // (3)
    starts.push(rels.len());
    for i in 1..=n {
        for j in 1..=n {
            for k in j + 1..=n {
                let lhs = prod(&[inv(&a(i)), c(j, k), a(i)]);
                if (i < j) || (k < i) {
                    rels.push(Relation::new(lhs, c(j, k)));
                } else if j <= i && i < k {
                    let rhs = prod(&[a(k), inv(&c(i + 1, k)), c(i, k), inv(&a(k)), c(j, k), inv(&c(i, k)), c(i + 1, k)]);
                    rels.push(Relation::new(lhs, rhs));
                }
            }
        }
    }
    // (4)
    starts.push(rels.len());
    for i in 1..=n {
        for l in i + 1..=n {
            for j in 1..=n {
                for k in j + 1..=n {
                    let lhs = prod(&[inv(&c(i, l)), c(j, k), c(i, l)]);
                    if (l < j) || (j <= i && l < k) {
                        rels.push(Relation::new(lhs, c(j, k)));
                    } else if i < j && j <= l && l < k {
                        let rhs = prod(&[c(i, k), inv(&c(l + 1, k)), c(l, k), inv(&c(i, k)), c(j, k), inv(&c(l, k)), c(l + 1, k)]);
                        rels.push(Relation::new(lhs, rhs));
                    }
                }
            }
        }
    }
    // (5)
    starts.push(rels.len());
    for i in 1..=n {
        let (lhs, rhs) = match surface {
            Surface::Torus => (
                prod(&(i + 1..=n).map(|j| inv(&c(i, j)).mul(&c(i + 1, j))).collect::<Vec<_>>()),
                prod(&[a(i), b(i), c(1, i), inv(&a(i)), inv(&b(i))]),
            ),
            Surface::Klein => (
                prod(&(i + 1..=n).map(|j| c(i, j).mul(&inv(&c(i + 1, j)))).collect::<Vec<_>>()),
                prod(&[b(i), c(1, i), inv(&a(i)), inv(&b(i)), inv(&a(i))]),
            ),
        };
        rels.push(Relation::new(lhs, rhs));
    }
    // (6)
    starts.push(rels.len());
    for i in 1..=n {
        for j in i + 1..=n {
            let rhs = match surface {
                Surface::Torus => b(i).mul(&b(j)),
                Surface::Klein => prod(&[b(i), b(j), c(i, j), inv(&c(i + 1, j))]),
            };
            rels.push(Relation::new(b(j).mul(&b(i)), rhs));
        }
    }
    // (7)
    starts.push(rels.len());
    for i in 1..=n {
        for j in i + 1..=n {
            let t = c(i, j).mul(&inv(&c(i + 1, j)));
            let t = match surface {
                Surface::Torus => t,
                Surface::Klein => inv(&t),
            };
            rels.push(Relation::new(prod(&[inv(&b(i)), a(j), b(i)]), prod(&[a(j), b(j), t, inv(&b(j))])));
        }
    }
    // (8)
    starts.push(rels.len());
    for i in 1..=n {
        for j in 1..=n {
            for k in j + 1..=n {
                let lhs = prod(&[inv(&b(i)), c(j, k), b(i)]);
                if (i < j) || (k < i) {
                    rels.push(Relation::new(lhs, c(j, k)));
                } else if j <= i && i < k {
                    let t = c(i, k).mul(&inv(&c(i + 1, k)));
                    let t = match surface {
                        Surface::Torus => t,
                        Surface::Klein => inv(&t),
                    };
                    let rhs = prod(&[c(i + 1, k), inv(&c(i, k)), c(j, k), b(k), t, inv(&b(k))]);
                    rels.push(Relation::new(lhs, rhs));
                }
            }
        }
    }
    let mut out = Vec::with_capacity(rels.len());
    for (f, r) in rels.into_iter().enumerate() {
        let fam = starts.iter().rposition(|&s| s <= f).expect("tagged") as u8 + 1;
        out.push((fam, r));
    }
    out
}

fn pure_relations(n: usize, surface: Surface) -> Vec<Relation> {
    pure_relations_tagged(n, surface).into_iter().map(|(_, r)| r).collect()
}

/// Relations of `P_n(K)` with their family numbers.
pub fn pnk_relations(n: usize) -> Vec<(u8, Relation)> {
    pure_relations_tagged(n, Surface::Klein)
}

fn full_braid_relations(n: usize, surface: Surface) -> Vec<Relation> {
    let n = n as i64;
    let (a, b, s) = (Word::g("a", &[]), Word::g("b", &[]), sigma);
    let mut rels = Vec::new();
    for i in 1..=n - 2 {
        rels.push(Relation::new(prod(&[s(i), s(i + 1), s(i)]), prod(&[s(i + 1), s(i), s(i + 1)])));
    }
    for i in 1..n {
        for j in i + 2..n {
            rels.push(Relation::new(s(j).mul(&s(i)), s(i).mul(&s(j))));
        }
    }
    for j in 2..n {
        rels.push(Relation::new(a.mul(&s(j)), s(j).mul(&a)));
    }
    for j in 2..n {
        rels.push(Relation::new(b.mul(&s(j)), s(j).mul(&b)));
    }
    if n >= 2 {
        rels.push(Relation::new(prod(&[inv(&b), s(1), a.clone()]), prod(&[s(1), a.clone(), s(1), inv(&b), s(1)])));
        let t = prod(&[s(1), a.clone(), s(1)]);
        rels.push(Relation::new(a.mul(&t), t.mul(&a)));
        let (l, r) = match surface {
            Surface::Torus => {
                let t = prod(&[inv(&s(1)), b.clone(), inv(&s(1))]);
                (b.mul(&t), t.mul(&b))
            }
            Surface::Klein => (b.mul(&prod(&[inv(&s(1)), b.clone(), s(1)])), prod(&[inv(&s(1)), b.clone(), inv(&s(1))]).mul(&b)),
        };
        rels.push(Relation::new(l, r));
    }
    let lhs = full_twist_word(n);
    let rhs = match surface {
        Surface::Torus => prod(&[b.clone(), a.clone(), inv(&b), inv(&a)]),
        Surface::Klein => prod(&[b.clone(), inv(&a), inv(&b), inv(&a)]),
    };
    rels.push(Relation::new(lhs, rhs));
    rels
}

/// `σ₁σ₂⋯σ_{n−2}σ²_{n−1}σ_{n−2}⋯σ₁` (empty for n = 1).
fn full_twist_word(n: i64) -> Word {
    if n < 2 {
        return Word::empty();
    }
    let up: Vec<Word> = (1..n).map(sigma).collect();
    let down: Vec<Word> = (1..n).rev().map(sigma).collect();
    prod(&up).mul(&prod(&down))
}

fn bel_relations(n: usize, g: usize) -> Vec<Relation> {
    let n = n as i64;
    let g = g as i64;
    let s = sigma;
    let ar = |r: i64| Word::g("a", &[r]);
    let mut rels = Vec::new();
    for i in 1..=n - 2 {
        rels.push(Relation::new(prod(&[s(i), s(i + 1), s(i)]), prod(&[s(i + 1), s(i), s(i + 1)])));
    }
    for i in 1..n {
        for j in i + 2..n {
            rels.push(Relation::new(s(j).mul(&s(i)), s(i).mul(&s(j))));
        }
    }
    for r in 1..=g {
        for i in 2..n {
            rels.push(Relation::new(ar(r).mul(&s(i)), s(i).mul(&ar(r))));
        }
    }
    if n >= 2 {
        for r in 1..=g {
            rels.push(Relation::new(prod(&[inv(&s(1)), ar(r), inv(&s(1)), ar(r)]), prod(&[ar(r), inv(&s(1)), ar(r), s(1)])));
        }
        for r in 1..=g {
            for q in 1..r {
                rels.push(Relation::new(prod(&[inv(&s(1)), ar(q), s(1), ar(r)]), prod(&[ar(r), inv(&s(1)), ar(q), s(1)])));
            }
        }
    }
    let squares = prod(&(1..=g).map(|r| ar(r).pow(2)).collect::<Vec<_>>());
    rels.push(Relation::new(squares, full_twist_word(n)));
    rels
}

/// The catalog of presentations. `g` is the genus for `BnNg` only.
pub fn catalog(family: Family, n: usize, g: Option<usize>) -> Result<Presentation> {
    if n == 0 {
        return Err(Error::BadParameters("n must be at least 1".into()));
    }
    match family {
        Family::PnT | Family::PnK => {
            let (surface, tag) = if family == Family::PnT { (Surface::Torus, "T") } else { (Surface::Klein, "K") };
            Presentation::new(&format!("P{n}({tag})"), pure_generators(n), pure_relations(n, surface))
        }
        Family::BnT | Family::BnK => {
            let (surface, tag) = if family == Family::BnT { (Surface::Torus, "T") } else { (Surface::Klein, "K") };
            let mut gens = vec![Symbol::plain("a"), Symbol::plain("b")];
            gens.extend((1..n as i64).map(|i| Symbol::new("s", &[i])));
            Presentation::new(&format!("B{n}({tag})"), gens, full_braid_relations(n, surface))
        }
        Family::BnNg => {
            let g = g.ok_or_else(|| Error::BadParameters("BnNg needs a genus g".into()))?;
            if g < 3 {
                return Err(Error::BadParameters(format!("genus {g} < 3")));
            }
            let mut gens: Vec<Symbol> = (1..n as i64).map(|i| Symbol::new("s", &[i])).collect();
            gens.extend((1..=g as i64).map(|r| Symbol::new("a", &[r])));
            Presentation::new(&format!("B{n}(N{g})"), gens, bel_relations(n, g))
        }
        Family::P2KReduced => {
            let (a1, a2, b1, b2) = (sym_a(1), sym_a(2), sym_b(1), sym_b(2));
            let gens = vec![Symbol::new("a", &[1]), Symbol::new("a", &[2]), Symbol::new("b", &[1]), Symbol::new("b", &[2])];
            let rels = vec![
                Relation::new(prod(&[inv(&a1), a2.clone(), a1.clone()]), a2.clone()),
                Relation::new(prod(&[inv(&a1), b2.clone(), a1.clone()]), prod(&[inv(&a2), b2.clone(), inv(&a2)])),
                Relation::new(prod(&[inv(&b1), a2.clone(), b1.clone()]), prod(&[a2.clone(), b2.clone(), inv(&a2), inv(&b2), inv(&a2)])),
                Relation::new(prod(&[inv(&b1), b2.clone(), b1.clone()]), prod(&[a2.clone(), b2.clone(), a2.clone()])),
                Relation::new(prod(&[inv(&b2), a2.clone(), b2.clone(), a2.clone()]), prod(&[b1.clone(), inv(&a1), inv(&b1), inv(&a1)])),
            ];
            Presentation::new("P2(K)_reduced", gens, rels)
        }
        Family::Pi1K => Presentation::new(
            "Pi1(K)",
            vec![Symbol::new("a", &[1]), Symbol::new("b", &[1])],
            vec![Relation::new(sym_a(1).mul(&sym_b(1)), sym_b(1).mul(&inv(&sym_a(1))))],
        ),
        Family::TorusMetabelian => {
            if n < 2 {
                return Err(Error::BadParameters("TorusMetabelian needs n >= 2".into()));
            }
            let (s, a, b) = (Word::g("s", &[]), Word::g("a", &[]), Word::g("b", &[]));
            let rels = vec![
                Relation::new(commutator(&a, &s), Word::empty()),
                Relation::new(commutator(&b, &s), Word::empty()),
                Relation::new(s.pow(2 * n as i64), Word::empty()),
                Relation::new(commutator(&b, &a), s.pow(-2)),
            ];
            Presentation::new(&format!("TorusMetabelian({n})"), vec![Symbol::plain("s"), Symbol::plain("a"), Symbol::plain("b")], rels)
        }
    }
}

// ---------------------------------------------------------------------------
// Homomorphisms and abelianization

/// Three-valued oracle answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Trivial,
    NonTrivial,
    Indeterminate,
}

/// Per-relator verdicts of [`check_homomorphism`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomReport {
    pub entries: Vec<HomEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomEntry {
    pub relator: Word,
    pub image: Word,
    pub verdict: Verdict,
}

impl HomReport {
    pub fn all_trivial(&self) -> bool {
        self.entries.iter().all(|e| e.verdict == Verdict::Trivial)
    }
}

/// Checks each relator of `src` under `images` with the given triviality oracle.
pub fn check_homomorphism<F>(src: &Presentation, images: &HashMap<Symbol, Word>, oracle: F) -> Result<HomReport>
where
    F: Fn(&Word) -> Verdict,
{
    for g in &src.generators {
        if !images.contains_key(g) {
            return Err(Error::UnmappedSymbol(g.to_string()));
        }
    }
    let mut entries = Vec::new();
    for r in &src.relators {
        let image = substitute(r, images)?;
        let verdict = oracle(&image);
        entries.push(HomEntry { relator: r.clone(), image, verdict });
    }
    Ok(HomReport { entries })
}

/// Invariant factors of `G/[G,G]`.
pub fn abelianization(p: &Presentation) -> AbelianInvariants {
    AbelianInvariants::of_relation_matrix(&p.exponent_matrix())
}

/// Exponent-sum vector of `w` over the generators of `p`.
pub fn exponent_vector(p: &Presentation, w: &Word) -> Vec<i64> {
    p.generators.iter().map(|g| w.exponent_sum(g)).collect()
}

/// Decides whether `w` is trivial in `G^Ab` (exact).
pub fn abelian_image_is_zero(p: &Presentation, w: &Word) -> bool {
    let v = exponent_vector(p, w);
    if v.iter().all(|&x| x == 0) {
        return true;
    }
    // v lies in the row lattice iff appending it leaves the invariants unchanged
    let base = p.exponent_matrix();
    let mut m = IntMatrix::zeros(base.rows() + 1, base.cols());
    for i in 0..base.rows() {
        for j in 0..base.cols() {
            m.set(i, j, base.get(i, j).clone());
        }
    }
    for (j, x) in v.iter().enumerate() {
        m.set(base.rows(), j, BigInt::from(*x));
    }
    AbelianInvariants::of_relation_matrix(&m) == AbelianInvariants::of_relation_matrix(&base)
}

// ---------------------------------------------------------------------------
// Generators of the derived subgroup of B_n(T)

fn bkam(k: i64, m: i64, core: &Word) -> Word {
    let (a, b) = (Word::g("a", &[]), Word::g("b", &[]));
    prod(&[b.pow(k), a.pow(m), core.clone(), a.pow(-m), b.pow(-k)])
}

/// Expands `b[k,m]`, `d[k,m]`, `a[k,m]`, `theta[i,k,m]` or `rho[i,k,m]`
/// into a word over the generators of `B_n(T)`.
pub fn expand_derived_generator(sym: &Symbol, n: usize) -> Result<Word> {
    let (a, b, s) = (Word::g("a", &[]), Word::g("b", &[]), sigma);
    let idx = sym.indices();
    let bad = || Error::BadParameters(format!("unknown derived generator {sym}"));
    let check_i = |i: i64| {
        if i < 1 || i > n as i64 - 1 {
            Err(Error::BadParameters(format!("index {i} outside 1..={}", n as i64 - 1)))
        } else {
            Ok(())
        }
    };
    match (sym.name(), idx) {
        ("b", &[k, m]) => Ok(bkam(k, m, &b).mul(&b.inverse())),
        ("d", &[k, m]) => {
            check_i(1)?;
            Ok(bkam(k, m, &prod(&[s(1), b.clone(), inv(&s(1))])).mul(&b.inverse()))
        }
        ("a", &[k, m]) => {
            check_i(1)?;
            Ok(bkam(k, m, &prod(&[s(1), a.clone(), inv(&s(1)), inv(&a)])))
        }
        ("theta", &[i, k, m]) => {
            check_i(i)?;
            Ok(bkam(k, m, &s(i).mul(&inv(&s(1)))))
        }
        ("rho", &[i, k, m]) => {
            check_i(i)?;
            Ok(bkam(k, m, &s(1).mul(&s(i))))
        }
        _ => Err(bad()),
    }
}

/// One instance of a relation of the derived-subgroup presentation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivedInstance {
    /// Family number (1..=9; the two parity families share the label 8).
    pub family: u8,
    pub label: String,
    /// Relator `lhs⁻¹·rhs` over the derived generators.
    pub symbolic: Word,
    /// The same relator expanded over `a, b, s[i]`.
    pub expanded: Word,
}

fn th(i: i64, k: i64, m: i64) -> Word {
    Word::g("theta", &[i, k, m])
}
fn rh(i: i64, k: i64, m: i64) -> Word {
    Word::g("rho", &[i, k, m])
}
fn bd(k: i64, m: i64) -> Word {
    Word::g("b", &[k, m])
}
fn dd(k: i64, m: i64) -> Word {
    Word::g("d", &[k, m])
}
fn ad(k: i64, m: i64) -> Word {
    Word::g("a", &[k, m])
}

/// Expands every derived-generator symbol of `w`.
pub fn expand_derived_word(w: &Word, n: usize) -> Result<Word> {
    let mut images = HashMap::new();
    for s in w.symbols() {
        images.insert(s.clone(), expand_derived_generator(&s, n)?);
    }
    substitute(w, &images)
}

/// Relation instances of the derived-subgroup presentation of `B_n(T)` for
/// `k ∈ k_range`, `m ∈ m_range`. Families (1) and (2) use `i ∈ i_range`
/// (default `1..=n−2`), family (2) additionally `j ∈ i_range ∪ {n−1}` with
/// `j − i ≥ 2`.
pub fn derived_relation_instances(n: usize, k_range: &[i64], m_range: &[i64], i_range: Option<&[i64]>) -> Result<Vec<DerivedInstance>> {
    if n < 3 {
        return Err(Error::BadParameters("derived relation instances need n >= 3".into()));
    }
    let nn = n as i64;
    let default_i: Vec<i64> = (1..=nn - 2).collect();
    let i_range = i_range.unwrap_or(&default_i);
    let mut out = Vec::new();
    let mut push = |family: u8, label: String, lhs: Word, rhs: Word| -> Result<()> {
        let symbolic = lhs.inverse().mul(&rhs);
        let expanded = expand_derived_word(&symbolic, n)?;
        out.push(DerivedInstance { family, label, symbolic, expanded });
        Ok(())
    };
    for &k in k_range {
        for &m in m_range {
            for &i in i_range {
                if i < 1 || i + 1 > nn - 1 {
                    continue;
                }
                push(
                    1,
                    format!("1a i={i} k={k} m={m}"),
                    prod(&[th(i, k, m), rh(i + 1, k, m), th(i, k, m)]),
                    prod(&[th(i + 1, k, m), rh(i, k, m), th(i + 1, k, m)]),
                )?;
                push(
                    1,
                    format!("1b i={i} k={k} m={m}"),
                    prod(&[rh(i, k, m), th(i + 1, k, m), rh(i, k, m)]),
                    prod(&[rh(i + 1, k, m), th(i, k, m), rh(i + 1, k, m)]),
                )?;
                for j in i + 2..nn {
                    push(2, format!("2a i={i} j={j} k={k} m={m}"), th(i, k, m).mul(&rh(j, k, m)), th(j, k, m).mul(&rh(i, k, m)))?;
                    push(2, format!("2b i={i} j={j} k={k} m={m}"), rh(i, k, m).mul(&th(j, k, m)), rh(j, k, m).mul(&th(i, k, m)))?;
                }
            }
            for j in 2..nn {
                push(3, format!("3a j={j} k={k} m={m}"), ad(k, m), th(j, k, m).inverse().mul(&th(j, k, m + 1)))?;
                push(3, format!("3b j={j} k={k} m={m}"), ad(k, m), rh(j, k, m).mul(&rh(j, k, m + 1).inverse()))?;
                push(4, format!("4a j={j} k={k} m={m}"), bd(k, m).mul(&th(j, k + 1, m)), th(j, k, m).mul(&dd(k, m)))?;
                push(4, format!("4b j={j} k={k} m={m}"), dd(k, m).mul(&rh(j, k + 1, m)), rh(j, k, m).mul(&bd(k, m)))?;
            }
            push(
                5,
                format!("5a k={k} m={m}"),
                prod(&[bd(k - 1, m).inverse(), ad(k - 1, m), bd(k - 1, m + 1), rh(1, k, m + 1).inverse(), ad(k, m).inverse()]),
                Word::empty(),
            )?;
            push(
                5,
                format!("5b k={k} m={m}"),
                prod(&[dd(k - 1, m).inverse(), rh(1, k - 1, m), rh(1, k - 1, m + 1).inverse(), dd(k - 1, m + 1), rh(1, k, m).inverse()]),
                Word::empty(),
            )?;
            push(6, format!("6a k={k} m={m}"), ad(k, m + 1).mul(&rh(1, k, m + 2)), ad(k, m).mul(&rh(1, k, m + 1)))?;
            push(6, format!("6b k={k} m={m}"), rh(1, k, m).mul(&ad(k, m + 1)), ad(k, m).mul(&rh(1, k, m + 1)))?;
            push(
                7,
                format!("7a k={k} m={m}"),
                prod(&[bd(k, m), rh(1, k + 1, m).inverse(), dd(k + 1, m)]),
                prod(&[rh(1, k, m).inverse(), dd(k, m), bd(k + 1, m)]),
            )?;
            push(
                7,
                format!("7b k={k} m={m}"),
                prod(&[bd(k, m), rh(1, k + 1, m).inverse(), dd(k + 1, m)]),
                prod(&[dd(k, m), bd(k + 1, m), rh(1, k + 2, m).inverse()]),
            )?;
            // parity families: ascending letters θ at odd i, descending θ at even i
            let zig = |first_theta_odd: bool| {
                let pick = |i: i64, theta: bool| if theta { th(i, k, m) } else { rh(i, k, m) };
                let mut ws = Vec::new();
                for i in 1..nn {
                    ws.push(pick(i, (i % 2 == 1) == first_theta_odd));
                }
                for i in (1..nn).rev() {
                    ws.push(pick(i, (i % 2 == 0) == first_theta_odd));
                }
                prod(&ws)
            };
            push(8, format!("8a k={k} m={m}"), zig(true), bd(k, m).mul(&bd(k, m + 1).inverse()))?;
            push(8, format!("8b k={k} m={m}"), zig(false), prod(&[dd(k, m), ad(k + 1, m), dd(k, m + 1).inverse(), ad(k, m).inverse()]))?;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Exact model of the metabelian torus quotient

/// Element `a^i b^j s^k` of `⟨s,a,b : [a,s]=[b,s]=s^{2n}=1, [b,a]=s^{-2}⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusMetabelianElement {
    pub a: i64,
    pub b: i64,
    /// Exponent of the central `s`, reduced modulo `2n`.
    pub s: i64,
}

/// Normal-form arithmetic for the metabelian torus quotient.
#[derive(Clone, Copy, Debug)]
pub struct TorusMetabelianModel {
    pub n: i64,
}

impl TorusMetabelianModel {
    pub fn new(n: usize) -> Self {
        TorusMetabelianModel { n: n as i64 }
    }

    pub fn identity(&self) -> TorusMetabelianElement {
        TorusMetabelianElement { a: 0, b: 0, s: 0 }
    }

    /// Uses `b^j a^i = a^i b^j s^{-2ij}`.
    pub fn mul(&self, x: TorusMetabelianElement, y: TorusMetabelianElement) -> TorusMetabelianElement {
        let s = (x.s + y.s - 2 * x.b * y.a).rem_euclid(2 * self.n);
        TorusMetabelianElement { a: x.a + y.a, b: x.b + y.b, s }
    }

    pub fn inverse(&self, x: TorusMetabelianElement) -> TorusMetabelianElement {
        // (a^i b^j s^k)^{-1} = s^{-k} b^{-j} a^{-i} = a^{-i} b^{-j} s^{-k - 2ij}
        let s = (-x.s - 2 * x.a * x.b).rem_euclid(2 * self.n);
        TorusMetabelianElement { a: -x.a, b: -x.b, s }
    }

    fn letter(&self, sym: &Symbol) -> Result<TorusMetabelianElement> {
        let e = self.identity();
        match sym.name() {
            "a" => Ok(TorusMetabelianElement { a: 1, ..e }),
            "b" => Ok(TorusMetabelianElement { b: 1, ..e }),
            "s" => Ok(TorusMetabelianElement { s: 1, ..e }),
            _ => Err(Error::UnmappedSymbol(sym.to_string())),
        }
    }

    /// Evaluates a word in `s, a, b`. Indexed `s[i]` symbols map to `s`,
    /// which is the natural map from `B_n(T)`.
    pub fn eval(&self, w: &Word) -> Result<TorusMetabelianElement> {
        let mut x = self.identity();
        for l in w.letters() {
            let mut y = self.letter(&l.sym)?;
            if l.exp < 0 {
                y = self.inverse(y);
            }
            x = self.mul(x, y);
        }
        Ok(x)
    }

    /// Order of an element (`None` if infinite).
    pub fn order(&self, x: TorusMetabelianElement) -> Option<u64> {
        if x.a != 0 || x.b != 0 {
            return None;
        }
        let mut y = x;
        let mut k = 1;
        while y != self.identity() {
            y = self.mul(y, x);
            k += 1;
        }
        Some(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::w;

    #[test]
    fn pi1k() {
        let p = catalog(Family::Pi1K, 1, None).unwrap();
        assert_eq!(p.relators, vec![w("a[1]*b[1]*a[1]*b[1]^-1")]);
        assert_eq!(abelianization(&p), AbelianInvariants::new(1, &[2]));
    }

    #[test]
    fn p1k_matches_pi1k() {
        let p = catalog(Family::PnK, 1, None).unwrap();
        assert_eq!(p.relators.len(), 1);
        assert_eq!(p.relators[0], w("a[1]*b[1]*a[1]*b[1]^-1"));
    }

    #[test]
    fn p2k_reduced() {
        let p = catalog(Family::P2KReduced, 2, None).unwrap();
        assert_eq!(p.relators.len(), 5);
        assert!(p.relators.contains(&w("b[2]^-1*a[2]*b[2]*a[2]*a[1]*b[1]*a[1]*b[1]^-1")));
        assert_eq!(abelianization(&p), AbelianInvariants::new(2, &[2, 2]));
    }

    #[test]
    fn bnk3() {
        let p = catalog(Family::BnK, 3, None).unwrap();
        assert_eq!(p.generators.len(), 4);
        assert!(p.relators.contains(&w("s[1]*s[2]*s[2]*s[1]*a*b*a*b^-1")));
        assert_eq!(abelianization(&p), AbelianInvariants::new(1, &[2, 2]));
        let t = catalog(Family::BnT, 3, None).unwrap();
        assert_eq!(abelianization(&t), AbelianInvariants::new(2, &[2]));
    }

    #[test]
    fn bad_genus() {
        assert!(matches!(catalog(Family::BnNg, 3, Some(2)), Err(Error::BadParameters(_))));
        assert!(matches!(catalog(Family::BnNg, 3, None), Err(Error::BadParameters(_))));
    }

    #[test]
    fn text_round_trip() {
        for (f, n) in [(Family::PnK, 3), (Family::BnK, 3), (Family::P2KReduced, 2)] {
            let p = catalog(f, n, None).unwrap();
            let q: Presentation = p.to_text().parse().unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn derived_generators() {
        let s = |t: &str| -> Symbol {
            let x = w(t);
            x.letters()[0].sym.clone()
        };
        assert!(expand_derived_generator(&s("b[0,0]"), 3).unwrap().is_empty());
        assert!(expand_derived_generator(&s("theta[1,0,0]"), 3).unwrap().is_empty());
        assert_eq!(expand_derived_generator(&s("rho[2,0,0]"), 3).unwrap(), w("s[1]*s[2]"));
        assert!(expand_derived_generator(&s("rho[3,0,0]"), 3).is_err());
    }

    #[test]
    fn derived_relation_example() {
        let inst = derived_relation_instances(5, &[0], &[0], None).unwrap();
        let r3 = inst.iter().find(|x| x.label == "3a j=2 k=0 m=0").unwrap();
        let expect = w("(s[1]*a*s[1]^-1*a^-1)^-1*(s[2]*s[1]^-1)^-1*a*s[2]*s[1]^-1*a^-1").reduced();
        assert_eq!(r3.expanded, expect);
    }

    #[test]
    fn torus_metabelian_model() {
        let m = TorusMetabelianModel::new(5);
        let p = catalog(Family::TorusMetabelian, 5, None).unwrap();
        for r in &p.relators {
            assert_eq!(m.eval(r).unwrap(), m.identity());
        }
        assert_eq!(m.order(m.eval(&w("s")).unwrap()), Some(10));
    }
}
