//! Word problem for the pure braid groups `P_n(K)` of the Klein bottle.
//!
//! `P_{n+1}(K)` splits as `F ⋊ s(P_n(K))` with `F = π₁(K∖{x₁..x_n})` free of
//! rank `n+1`. An element is stored as `s(g)·h` with `g` normalized one level
//! down and `h` a reduced word over the basis `{a_{n+1}, b_{n+1}, D_1..D_{n−1}}`.
//! The action is `φ(g)(h) = s(g)⁻¹·h·s(g)`, so `φ(uv) = φ(v)∘φ(u)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presentations::{c_word, pnk_relations, pure_generators};
use crate::report::CheckReport;
use crate::words::{commutator, invert_codes, push_code, substitute, substitute_partial, Alphabet, Code, Symbol, Word};

/// Deepest level handled by the shared solver.
pub const MAX_LEVEL: usize = 5;

/// Largest total fiber length a normal form may reach before
/// [`Error::Overflow`]; the action has exponential growth.
pub const FIBER_LIMIT: usize = 1 << 22;

fn a(i: usize) -> Word {
    Word::g("a", &[i as i64])
}
fn b(i: usize) -> Word {
    Word::g("b", &[i as i64])
}
fn d(j: usize) -> Word {
    Word::g("D", &[j as i64])
}

fn prod(ws: &[Word]) -> Word {
    ws.iter().fold(Word::empty(), |acc, w| acc.mul(w))
}

/// Accepts `a1`, `b3`, `C12` as shorthand for `a[1]`, `b[3]`, `C[1,2]`.
pub fn canonical_symbol(s: &Symbol) -> Symbol {
    if !s.indices().is_empty() {
        return s.clone();
    }
    let name = s.name();
    let (head, digits) = name.split_at(1);
    if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
        return s.clone();
    }
    match head {
        "a" | "b" => Symbol::new(head, &[digits.parse().unwrap_or(0)]),
        "C" if digits.len() == 2 => {
            let v: Vec<i64> = digits.bytes().map(|c| (c - b'0') as i64).collect();
            Symbol::new("C", &v)
        }
        _ => s.clone(),
    }
}

fn canonical_word(w: &Word) -> Word {
    Word::from_letters(w.letters().iter().map(|l| crate::words::Letter::new(canonical_symbol(&l.sym), l.exp)).collect())
}

// ---------------------------------------------------------------------------
// Section and action

/// Images of the `P_n(K)` generators under the section into `P_{n+1}(K)`.
pub fn section_images(n: usize) -> Vec<(Symbol, Word)> {
    pure_generators(n)
        .into_iter()
        .map(|g| {
            let idx = g.indices();
            let image = match (g.name(), idx) {
                ("a", [i]) if *i as usize == n => a(n).mul(&a(n + 1)),
                ("b", [i]) if *i as usize == n => b(n + 1).mul(&b(n)),
                ("C", [i, j]) if *j as usize == n => {
                    let i = *i;
                    prod(&[c_word(i, n as i64), c_word(i, n as i64 + 1), c_word(n as i64, n as i64 + 1).inverse()])
                }
                _ => Word::gen(g.clone()),
            };
            (g, image)
        })
        .collect()
}

fn section_map(n: usize) -> HashMap<Symbol, Word> {
    section_images(n).into_iter().collect()
}

/// Helper words of the action of `P_n(K)` on the fiber of `P_{n+1}(K)`,
/// written over `Y = {a_{n+1}, b_{n+1}, D_1..D_n}`.
struct Helpers {
    n: usize,
}

impl Helpers {
    fn a(&self) -> Word {
        a(self.n + 1)
    }
    fn b(&self) -> Word {
        b(self.n + 1)
    }
    /// `C_{j,n+1} = D_n⁻¹⋯D_j⁻¹`, empty for `j = n+1`.
    fn c(&self, j: usize) -> Word {
        prod(&(j..=self.n).rev().map(|t| d(t).inverse()).collect::<Vec<_>>())
    }
    fn alpha(&self, i: usize, j: usize) -> Word {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => Word::empty(),
            std::cmp::Ordering::Equal => self.c(j + 1).inverse().mul(&self.a()),
            std::cmp::Ordering::Greater => self.c(i + 1).inverse().mul(&self.c(i)),
        }
    }
    fn beta(&self, i: usize, j: usize) -> Word {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => Word::empty(),
            std::cmp::Ordering::Equal => self.b().mul(&self.c(i)),
            std::cmp::Ordering::Greater => prod(&[self.b(), self.c(i), self.c(i + 1).inverse(), self.b().inverse()]),
        }
    }
    fn delta(&self, i: usize, j: usize, k: usize) -> Word {
        if k < j || i > j {
            Word::empty()
        } else if k == j {
            self.c(j + 1).inverse().mul(&self.c(i))
        } else {
            self.c(k + 1).inverse().mul(&self.c(k))
        }
    }
}

fn conj(x: &Word, y: &Word) -> Word {
    prod(&[x.clone(), y.clone(), x.inverse()]).reduced()
}

/// The action of each `s(x)`, `x` a generator of `P_n(K)`, on the fiber
/// generators `Y = {a_{n+1}, b_{n+1}, D_1..D_n}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionTable {
    pub n: usize,
    pub fiber: Vec<Symbol>,
    /// `(x, [φ(x)(y) for y in fiber])`.
    pub entries: Vec<(Symbol, Vec<Word>)>,
}

impl ActionTable {
    pub fn image(&self, base: &Symbol, y: &Symbol) -> Option<&Word> {
        let col = self.fiber.iter().position(|s| s == y)?;
        self.entries.iter().find(|(x, _)| x == base).map(|(_, imgs)| &imgs[col])
    }
}

pub fn action_table(n: usize) -> Result<ActionTable> {
    if n == 0 {
        return Err(Error::BadLevel(n));
    }
    let h = Helpers { n };
    let (ya, yb) = (h.a(), h.b());
    let mut fiber = vec![Symbol::new("a", &[n as i64 + 1]), Symbol::new("b", &[n as i64 + 1])];
    fiber.extend((1..=n).map(|j| Symbol::new("D", &[j as i64])));
    let mut entries = Vec::new();
    for x in pure_generators(n) {
        let idx: Vec<usize> = x.indices().iter().map(|&v| v as usize).collect();
        let mut imgs = Vec::with_capacity(n + 2);
        match (x.name(), idx.as_slice()) {
            ("a", &[i]) if i < n => {
                imgs.push(ya.clone());
                imgs.push(prod(&[yb.clone(), ya.clone(), d(i), ya.inverse()]));
                for j in 1..=n {
                    imgs.push(conj(&h.alpha(i, j), &d(j)));
                }
            }
            ("b", &[i]) if i < n => {
                let ci = h.c(i);
                imgs.push(prod(&[ya.clone(), yb.clone(), ci.clone(), d(i), ci.inverse(), yb.inverse()]));
                imgs.push(prod(&[yb.clone(), ci.clone(), d(i).inverse(), ci.inverse()]));
                for j in 1..=n {
                    let dj = if j == i { d(j).inverse() } else { d(j) };
                    imgs.push(conj(&h.beta(i, j), &dj));
                }
            }
            ("C", &[i, k]) if k < n => {
                imgs.push(ya.clone());
                imgs.push(yb.clone());
                for j in 1..=n {
                    imgs.push(conj(&h.delta(i, j, k), &d(j)));
                }
            }
            ("a", _) => {
                imgs.push(ya.clone());
                imgs.push(prod(&[ya.inverse(), yb.clone(), ya.clone(), d(n)]));
                for j in 1..=n {
                    imgs.push(conj(&ya.inverse().mul(&h.alpha(n, j)), &d(j)));
                }
            }
            ("b", _) => {
                imgs.push(prod(&[d(n), yb.inverse(), ya.clone(), yb.clone()]));
                imgs.push(yb.mul(&d(n).inverse()));
                for j in 1..n {
                    imgs.push(conj(&yb.inverse(), &d(j)));
                }
                imgs.push(d(n).inverse());
            }
            ("C", &[i, _]) => {
                let t = h.c(n).mul(&h.c(i).inverse());
                imgs.push(conj(&t, &ya));
                imgs.push(conj(&t, &yb));
                for j in 1..=n {
                    imgs.push(conj(&t.mul(&h.delta(i, j, n)), &d(j)));
                }
            }
            _ => unreachable!("pure generators are a, b, C"),
        }
        entries.push((x, imgs.into_iter().map(|w| w.reduced()).collect()));
    }
    Ok(ActionTable { n, fiber, entries })
}

// ---------------------------------------------------------------------------
// Free group automorphisms on integer codes

fn apply_images(images: &[Vec<Code>], w: &[Code]) -> Vec<Code> {
    let mut out = Vec::with_capacity(w.len());
    for &c in w {
        let img = &images[c.unsigned_abs() as usize - 1];
        if c > 0 {
            for &x in img {
                push_code(&mut out, x);
            }
        } else {
            for &x in img.iter().rev() {
                push_code(&mut out, -x);
            }
        }
    }
    out
}

fn concat(u: &[Code], v: &[Code]) -> Vec<Code> {
    let mut out = u.to_vec();
    for &c in v {
        push_code(&mut out, c);
    }
    out
}

#[derive(Clone, Debug)]
struct FoldEdge {
    from: usize,
    to: usize,
    /// Generator index of the (positive) label.
    k: usize,
    /// Word over the preimage basis carried by the edge.
    tau: Vec<Code>,
}

/// Inverse of the automorphism `x_i ↦ images[i]` by Stallings folding.
///
/// The graph starts as a bouquet of petals spelling the images; edge labels
/// `tau` carry the preimage, so every closed path at the base vertex reads
/// `φ(τ)`. Folding ends in the standard rose, whose loops give `φ⁻¹(x_k)`.
/// The result is checked in both directions.
pub fn invert_automorphism(images: &[Vec<Code>]) -> Option<Vec<Vec<Code>>> {
    let r = images.len();
    let mut edges: Vec<Option<FoldEdge>> = Vec::new();
    let mut nv = 1;
    for (i, img) in images.iter().enumerate() {
        if img.is_empty() {
            return None;
        }
        let mut cur = 0;
        for (pos, &c) in img.iter().enumerate() {
            let next = if pos + 1 == img.len() {
                0
            } else {
                nv += 1;
                nv - 1
            };
            let tau = if pos == 0 { vec![i as Code + 1] } else { Vec::new() };
            let k = c.unsigned_abs() as usize - 1;
            let e =
                if c > 0 { FoldEdge { from: cur, to: next, k, tau } } else { FoldEdge { from: next, to: cur, k, tau: invert_codes(&tau) } };
            edges.push(Some(e));
            cur = next;
        }
    }
    // half-edge at a vertex: (edge, outgoing?)
    let tau_out = |e: &FoldEdge, out: bool| if out { e.tau.clone() } else { invert_codes(&e.tau) };
    loop {
        let mut found = None;
        'search: for v in 0..nv {
            let mut seen: HashMap<(usize, bool), usize> = HashMap::new();
            for (id, e) in edges.iter().enumerate() {
                let Some(e) = e else { continue };
                for out in [true, false] {
                    let at = if out { e.from } else { e.to };
                    if at != v {
                        continue;
                    }
                    if let Some(&other) = seen.get(&(e.k, out)) {
                        if other != id {
                            found = Some((v, other, id, out));
                            break 'search;
                        }
                    } else {
                        seen.insert((e.k, out), id);
                    }
                }
            }
        }
        let Some((_, id1, id2, out)) = found else { break };
        let (mut h1, mut h2) = ((id1, out), (id2, out));
        let far = |edges: &[Option<FoldEdge>], (id, out): (usize, bool)| {
            let e = edges[id].as_ref().expect("live");
            if out {
                e.to
            } else {
                e.from
            }
        };
        let (w1, w2) = (far(&edges, h1), far(&edges, h2));
        if w1 == w2 {
            // a rank-reducing fold: the images are not a basis
            return None;
        }
        if w2 == 0 {
            std::mem::swap(&mut h1, &mut h2);
        }
        let (w1, w2) = (far(&edges, h1), far(&edges, h2));
        let t1 = tau_out(edges[h1.0].as_ref().unwrap(), h1.1);
        let t2 = tau_out(edges[h2.0].as_ref().unwrap(), h2.1);
        let g = concat(&invert_codes(&t1), &t2);
        let g_inv = invert_codes(&g);
        for e in edges.iter_mut().flatten() {
            if e.from == w2 {
                e.tau = concat(&g, &e.tau);
            }
            if e.to == w2 {
                e.tau = concat(&e.tau, &g_inv);
            }
        }
        edges[h2.0] = None;
        for e in edges.iter_mut().flatten() {
            if e.from == w2 {
                e.from = w1;
            }
            if e.to == w2 {
                e.to = w1;
            }
        }
    }
    let mut inv = vec![None; r];
    for e in edges.iter().flatten() {
        if e.from != 0 || e.to != 0 || inv[e.k].is_some() {
            return None;
        }
        inv[e.k] = Some(e.tau.clone());
    }
    let inv: Vec<Vec<Code>> = inv.into_iter().collect::<Option<_>>()?;
    let id_ok = (0..r).all(|k| {
        let x = vec![k as Code + 1];
        apply_images(images, &apply_images(&inv, &x)) == x && apply_images(&inv, &apply_images(images, &x)) == x
    });
    id_ok.then_some(inv)
}

// ---------------------------------------------------------------------------
// Solver

/// Normal form of an element of `P_n(K)`: `(fiber | base)` nested down to
/// `b₁^k·a₁^l` at level 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SemidirectElement {
    Base { k: i64, l: i64 },
    Split { level: usize, fiber: Word, base: Box<SemidirectElement> },
}

impl SemidirectElement {
    pub fn level(&self) -> usize {
        match self {
            SemidirectElement::Base { .. } => 1,
            SemidirectElement::Split { level, .. } => *level,
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            SemidirectElement::Base { k, l } => *k == 0 && *l == 0,
            SemidirectElement::Split { fiber, base, .. } => fiber.is_empty() && base.is_identity(),
        }
    }

    /// A word over the `P_level(K)` generators representing this element,
    /// `s(base)·fiber` with `D_j = C_{j,level}⁻¹·C_{j+1,level}`.
    pub fn to_word(&self) -> Word {
        match self {
            SemidirectElement::Base { k, l } => b(1).pow(*k).mul(&a(1).pow(*l)),
            SemidirectElement::Split { level, fiber, base } => {
                let top = *level as i64;
                let mut images = HashMap::new();
                for j in 1..top - 1 {
                    images.insert(Symbol::new("D", &[j]), c_word(j, top).inverse().mul(&c_word(j + 1, top)));
                }
                apply_section(level - 1, &base.to_word()).mul(&substitute_partial(fiber, &images))
            }
        }
    }
}

impl fmt::Display for SemidirectElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemidirectElement::Base { k, l } => write!(f, "{}", b(1).pow(*k).mul(&a(1).pow(*l))),
            SemidirectElement::Split { fiber, base, .. } => write!(f, "({fiber} | {base})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Flat {
    k: i64,
    l: i64,
    /// `fibers[t]` lives at level `t+2`.
    fibers: Vec<Vec<Code>>,
}

/// How a generator of `P_{n+1}(K)` splits as `s(β)·η`.
#[derive(Clone, Debug)]
struct Decomp {
    base: Option<usize>,
    eta: Vec<Code>,
}

/// Precomputed data for the action of `P_n(K)` on the fiber of `P_{n+1}(K)`.
#[derive(Clone, Debug)]
struct LevelData {
    table: ActionTable,
    basis: Alphabet,
    /// Per generator of `P_n(K)`: images of the basis letters under φ(x), φ(x⁻¹).
    fwd: Vec<Vec<Vec<Code>>>,
    inv: Vec<Vec<Vec<Code>>>,
    /// Per generator of `P_{n+1}(K)`.
    decomp: Vec<Decomp>,
    /// `D_n` over the basis.
    d_top: Vec<Code>,
}

impl LevelData {
    fn new(n: usize) -> Result<Self> {
        let table = action_table(n)?;
        let mut syms = vec![Symbol::new("a", &[n as i64 + 1]), Symbol::new("b", &[n as i64 + 1])];
        syms.extend((1..n).map(|j| Symbol::new("D", &[j as i64])));
        let basis = Alphabet::new(&syms);
        let h = Helpers { n };
        // D_n⁻¹ = C_1·D_1⋯D_{n−1} with C_1 = b⁻¹·a·b·a
        let c1 = prod(&[h.b().inverse(), h.a(), h.b(), h.a()]);
        let d_top_word = prod(&[c1, prod(&(1..n).map(d).collect::<Vec<_>>())]).inverse().reduced();
        let d_top = basis.encode(&d_top_word)?;
        let mut data = LevelData { table, basis, fwd: Vec::new(), inv: Vec::new(), decomp: Vec::new(), d_top };
        for (x, imgs) in data.table.entries.clone() {
            let images = imgs[..n + 1].iter().map(|w| data.y_codes(w)).collect::<Result<Vec<_>>>()?;
            let inverse = invert_automorphism(&images)
                .ok_or_else(|| Error::OracleMismatch(format!("could not invert the action of {x} at level {n}")))?;
            data.fwd.push(images);
            data.inv.push(inverse);
        }
        let base_index: HashMap<Symbol, usize> = pure_generators(n).into_iter().enumerate().map(|(i, s)| (s, i)).collect();
        for g in pure_generators(n + 1) {
            let idx: Vec<usize> = g.indices().iter().map(|&v| v as usize).collect();
            let top = *idx.iter().max().expect("indexed");
            let dec = if top == n + 1 {
                let eta = match (g.name(), idx.as_slice()) {
                    ("a", _) => h.a(),
                    ("b", _) => h.b(),
                    (_, &[i, _]) => h.c(i),
                    _ => unreachable!(),
                };
                Decomp { base: None, eta: data.y_codes(&eta)? }
            } else {
                let eta = if top < n {
                    Word::empty()
                } else {
                    match (g.name(), idx.as_slice()) {
                        ("a", _) => h.a().inverse(),
                        ("b", _) => d(n).mul(&h.b().inverse()),
                        (_, &[i, _]) => h.c(n).mul(&h.c(i).inverse()),
                        _ => unreachable!(),
                    }
                };
                Decomp { base: Some(base_index[&g]), eta: data.y_codes(&eta)? }
            };
            data.decomp.push(dec);
        }
        Ok(data)
    }

    /// A word over `Y` rewritten over the free basis.
    fn y_codes(&self, w: &Word) -> Result<Vec<Code>> {
        let n = self.table.n;
        let mut out = Vec::new();
        for l in w.letters() {
            let part = if l.sym == Symbol::new("D", &[n as i64]) {
                self.d_top.clone()
            } else {
                vec![self.basis.encode(&Word::gen(l.sym.clone()))?[0]]
            };
            let part = if l.exp > 0 { part } else { invert_codes(&part) };
            for c in part {
                push_code(&mut out, c);
            }
        }
        Ok(out)
    }
}

/// Exact solver for `P_n(K)`, `1 ≤ n ≤ max_level`.
#[derive(Clone, Debug)]
pub struct KleinSolver {
    max_level: usize,
    /// `levels[n-1]` holds the action of `P_n(K)`.
    levels: Vec<LevelData>,
    /// `gen_index[L-1]` maps generators of `P_L(K)`.
    gen_index: Vec<HashMap<Symbol, usize>>,
}

impl KleinSolver {
    pub fn new(max_level: usize) -> Result<Self> {
        if max_level == 0 || max_level > 8 {
            return Err(Error::BadLevel(max_level));
        }
        let levels = (1..max_level).map(LevelData::new).collect::<Result<Vec<_>>>()?;
        let gen_index = (1..=max_level).map(|l| pure_generators(l).into_iter().enumerate().map(|(i, s)| (s, i)).collect()).collect();
        Ok(KleinSolver { max_level, levels, gen_index })
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.max_level {
            return Err(Error::BadLevel(level));
        }
        Ok(())
    }

    fn mul_gen(&self, e: &mut Flat, level: usize, g: usize, sign: i8) {
        if level == 1 {
            if g == 0 {
                e.l += sign as i64;
            } else {
                e.k += sign as i64;
                e.l = -e.l;
            }
            return;
        }
        let data = &self.levels[level - 2];
        let dec = &data.decomp[g];
        let t = level - 2;
        if sign > 0 {
            if let Some(bg) = dec.base {
                self.mul_gen(e, level - 1, bg, 1);
                e.fibers[t] = apply_images(&data.fwd[bg], &e.fibers[t]);
            }
            for &c in &dec.eta {
                push_code(&mut e.fibers[t], c);
            }
        } else {
            for &c in dec.eta.iter().rev() {
                push_code(&mut e.fibers[t], -c);
            }
            if let Some(bg) = dec.base {
                e.fibers[t] = apply_images(&data.inv[bg], &e.fibers[t]);
                self.mul_gen(e, level - 1, bg, -1);
            }
        }
    }

    fn flat(&self, level: usize, w: &Word) -> Result<Flat> {
        self.check_level(level)?;
        let mut e = Flat { k: 0, l: 0, fibers: vec![Vec::new(); level - 1] };
        for l in w.letters() {
            let s = canonical_symbol(&l.sym);
            let g = *self.gen_index[level - 1].get(&s).ok_or_else(|| Error::UnmappedSymbol(s.to_string()))?;
            self.mul_gen(&mut e, level, g, l.exp);
            if e.fibers.iter().map(Vec::len).sum::<usize>() > FIBER_LIMIT {
                return Err(Error::Overflow(FIBER_LIMIT));
            }
        }
        Ok(e)
    }

    pub fn normal_form(&self, level: usize, w: &Word) -> Result<SemidirectElement> {
        let e = self.flat(level, w)?;
        let mut out = SemidirectElement::Base { k: e.k, l: e.l };
        for (t, h) in e.fibers.iter().enumerate() {
            out = SemidirectElement::Split { level: t + 2, fiber: self.levels[t].basis.decode(h), base: Box::new(out) };
        }
        Ok(out)
    }

    pub fn is_trivial(&self, level: usize, w: &Word) -> Result<bool> {
        let e = self.flat(level, w)?;
        Ok(e.k == 0 && e.l == 0 && e.fibers.iter().all(Vec::is_empty))
    }

    pub fn equal(&self, level: usize, u: &Word, v: &Word) -> Result<bool> {
        Ok(self.flat(level, u)? == self.flat(level, v)?)
    }

    /// Applies `φ(g)` (a word over `P_n(K)` generators, read left to right) to
    /// a fiber word over `Y`; the result is over the free basis.
    pub fn act(&self, n: usize, g: &Word, h: &Word) -> Result<Word> {
        self.check_level(n + 1)?;
        let data = &self.levels[n - 1];
        let mut codes = data.y_codes(h)?;
        for l in g.letters() {
            let s = canonical_symbol(&l.sym);
            let x = *self.gen_index[n - 1].get(&s).ok_or_else(|| Error::UnmappedSymbol(s.to_string()))?;
            codes = apply_images(if l.exp > 0 { &data.fwd[x] } else { &data.inv[x] }, &codes);
        }
        Ok(data.basis.decode(&codes))
    }

    /// A fiber word over `Y` reduced over the free basis.
    pub fn fiber_reduce(&self, n: usize, h: &Word) -> Result<Word> {
        self.check_level(n + 1)?;
        let data = &self.levels[n - 1];
        Ok(data.basis.decode(&data.y_codes(h)?))
    }

    pub fn table(&self, n: usize) -> Result<&ActionTable> {
        self.check_level(n + 1)?;
        Ok(&self.levels[n - 1].table)
    }
}

/// Solver shared across calls, covering levels `1..=MAX_LEVEL`.
pub fn solver() -> &'static KleinSolver {
    static SOLVER: OnceLock<KleinSolver> = OnceLock::new();
    SOLVER.get_or_init(|| KleinSolver::new(MAX_LEVEL).expect("action tables invert"))
}

pub fn normal_form(n: usize, w: &Word) -> Result<SemidirectElement> {
    solver().normal_form(n, w)
}

pub fn is_trivial(n: usize, w: &Word) -> Result<bool> {
    solver().is_trivial(n, w)
}

// ---------------------------------------------------------------------------
// Verification

/// Every relator of `P_level(K)` normalizes to the identity.
pub fn verify_relators(level: usize) -> Result<CheckReport> {
    let s = solver();
    let mut rep = CheckReport::new(&format!("relators of P{level}(K)"));
    for (fam, rel) in pnk_relations(level) {
        let r = rel.relator();
        let nf = s.normal_form(level, &r)?;
        let ok = nf.is_identity();
        rep.push(format!("({fam}) {} = {}", rel.lhs, rel.rhs), ok, (!ok).then(|| nf.to_string()));
    }
    Ok(rep)
}

/// The section as given, with `a_n ↦ a_n` substituted (negative control).
pub fn corrupted_section(n: usize) -> Vec<(Symbol, Word)> {
    section_images(n)
        .into_iter()
        .map(|(g, img)| if g == Symbol::new("a", &[n as i64]) { (g.clone(), Word::gen(g)) } else { (g, img) })
        .collect()
}

/// Images of all `P_n(K)` relations under `images` are trivial in `P_{n+1}(K)`.
pub fn verify_section_with(n: usize, images: &[(Symbol, Word)]) -> Result<CheckReport> {
    let s = solver();
    let map: HashMap<Symbol, Word> = images.iter().cloned().collect();
    let mut rep = CheckReport::new(&format!("section P{n}(K) -> P{}(K)", n + 1));
    for (fam, rel) in pnk_relations(n) {
        let img = substitute(&rel.relator(), &map)?;
        let nf = s.normal_form(n + 1, &img)?;
        let ok = nf.is_identity();
        rep.push(format!("({fam}) {} = {}", rel.lhs, rel.rhs), ok, (!ok).then(|| nf.to_string()));
    }
    Ok(rep)
}

pub fn verify_section(n: usize) -> Result<CheckReport> {
    verify_section_with(n, &section_images(n))
}

/// `p_*∘s` is the identity on generators, where `p_*` deletes index-`(n+1)` letters.
pub fn section_splits(n: usize) -> bool {
    let top = n as i64 + 1;
    section_images(n).into_iter().all(|(g, img)| {
        let kept: Vec<_> = img.letters().iter().filter(|l| !l.sym.indices().contains(&top)).cloned().collect();
        Word::from_letters(kept).reduced() == Word::gen(g)
    })
}

/// Invertibility of each `φ(x)`, compatibility of the listed `D_n` images with
/// the surface relation, and `φ` respecting every relation of `P_n(K)`.
pub fn verify_action(n: usize) -> Result<CheckReport> {
    let s = solver();
    s.check_level(n + 1)?;
    let data = &s.levels[n - 1];
    let mut rep = CheckReport::new(&format!("action of P{n}(K)"));
    let basis: Vec<Vec<Code>> = (1..=n as Code + 1).map(|c| vec![c]).collect();
    for ((x, _), (fwd, inv)) in data.table.entries.iter().zip(data.fwd.iter().zip(&data.inv)) {
        let ok = basis.iter().all(|y| apply_images(inv, &apply_images(fwd, y)) == *y && apply_images(fwd, &apply_images(inv, y)) == *y);
        rep.push(format!("phi({}) invertible", x), ok, None);
    }
    // listed φ(x)(D_n) against (φ(x)(C_1)·φ(x)(D_1)⋯φ(x)(D_{n−1}))⁻¹
    let h = Helpers { n };
    let c1 = prod(&[h.b().inverse(), h.a(), h.b(), h.a()]);
    let rel = prod(&[c1, prod(&(1..n).map(d).collect::<Vec<_>>())]).inverse();
    for (x, imgs) in &data.table.entries {
        let listed = data.y_codes(&imgs[n + 1])?;
        let derived = apply_images(&data.fwd[s.gen_index[n - 1][x]], &data.y_codes(&rel)?);
        let ok = listed == derived;
        rep.push(
            format!("phi({x})(D[{n}]) consistent"),
            ok,
            (!ok).then(|| format!("{} vs {}", data.basis.decode(&listed), data.basis.decode(&derived))),
        );
    }
    for (fam, rel) in pnk_relations(n) {
        let r = rel.relator();
        let mut bad = None;
        for y in &data.basis.symbols().to_vec() {
            let img = s.act(n, &r, &Word::gen(y.clone()))?;
            if img != Word::gen(y.clone()) {
                bad = Some(format!("{y} -> {img}"));
                break;
            }
        }
        rep.push(format!("({fam}) {} = {} respected", rel.lhs, rel.rhs), bad.is_none(), bad);
    }
    Ok(rep)
}

/// `(b_n⋯b_1)²`.
pub fn center_witness(n: usize) -> Word {
    prod(&(1..=n).rev().map(b).collect::<Vec<_>>()).pow(2)
}

/// Centrality of the witness plus two helper identities of `P_n(K)`.
pub fn verify_central(n: usize) -> Result<CheckReport> {
    let s = solver();
    let z = center_witness(n);
    let mut rep = CheckReport::new(&format!("centre of P{n}(K)"));
    for g in pure_generators(n) {
        let c = commutator(&z, &Word::gen(g.clone()));
        let nf = s.normal_form(n, &c)?;
        rep.push(format!("[{z}, {g}] = 1"), nf.is_identity(), (!nf.is_identity()).then(|| nf.to_string()));
    }
    let ni = n as i64;
    for i in 1..n {
        let ii = i as i64;
        let lhs = prod(&[c_word(1, ni), a(n).inverse(), b(i)]);
        let rhs = prod(&[c_word(ii + 1, ni), b(i), c_word(ii, ni).inverse(), c_word(1, ni), a(n).inverse()]);
        rep.push(format!("{lhs} = {rhs}"), s.equal(n, &lhs, &rhs)?, None);
        let lhs = prod(&[b(n), c_word(ii + 1, ni), b(i)]);
        let rhs = prod(&[b(i), b(n), c_word(ii, ni)]);
        rep.push(format!("{lhs} = {rhs}"), s.equal(n, &lhs, &rhs)?, None);
    }
    Ok(rep)
}

/// Rewrites `w` by the section (useful for the homomorphism property).
pub fn apply_section(n: usize, w: &Word) -> Word {
    substitute_partial(&canonical_word(w), &section_map(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::w;

    #[test]
    fn shorthand_symbols() {
        assert_eq!(canonical_symbol(&Symbol::plain("a1")), Symbol::new("a", &[1]));
        assert_eq!(canonical_symbol(&Symbol::plain("C12")), Symbol::new("C", &[1, 2]));
        assert_eq!(canonical_symbol(&Symbol::plain("x")), Symbol::plain("x"));
    }

    #[test]
    fn level_one_law() {
        let s = solver();
        assert!(s.is_trivial(1, &w("a[1]*b[1]*a[1]*b[1]^-1")).unwrap());
        assert_eq!(s.normal_form(1, &w("a[1]*b[1]")).unwrap(), SemidirectElement::Base { k: 1, l: -1 });
    }

    #[test]
    fn small_action() {
        let t = action_table(1).unwrap();
        let x = Symbol::new("a", &[1]);
        let s = solver();
        let img = s.fiber_reduce(1, t.image(&x, &Symbol::new("b", &[2])).unwrap()).unwrap();
        assert_eq!(img, w("a[2]^-1*a[2]^-1*b[2]"));
    }

    #[test]
    fn small_level_identities() {
        assert!(is_trivial(2, &w("a1*a2*a1^-1*a2^-1")).unwrap());
        assert!(is_trivial(2, &w("b2^-1*a2*b2*a2*a1*b1*a1*b1^-1")).unwrap());
        assert!(!is_trivial(2, &w("b2")).unwrap());
    }

    #[test]
    fn inversion_roundtrip() {
        // a ↦ b·a·b⁻¹, b ↦ b·a
        let f = vec![vec![2, 1, -2], vec![2, 1]];
        let g = invert_automorphism(&f).unwrap();
        assert_eq!(apply_images(&f, &apply_images(&g, &[1])), vec![1]);
        assert_eq!(apply_images(&f, &apply_images(&g, &[2])), vec![2]);
        // abelianizes to a determinant-2 matrix
        assert!(invert_automorphism(&[vec![2, 1, -2, 1], vec![2, 1]]).is_none());
    }
}
