//! Finite quotients: coset enumeration, Reidemeister–Schreier rewriting,
//! homomorphisms into small symmetric groups, and the mod-2 lower central
//! tower `G/γ²_i(G)`.
//!
//! Tower stages are polycyclic 2-groups. The free group maps into the units of
//! `ℤ⟨⟨X⟩⟩` modulo the ideal of terms `c·X_w` with `v₂(c) + |w| ≥ i`; the
//! induced filtration is the lower exponent-2 central series, which is checked
//! at construction by comparing layer ranks against Witt's formula.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nilpotent::{basic_commutators, witt_rank};
use crate::presentations::Presentation;
use crate::words::{Alphabet, Code, Symbol, Word};

/// Permutation of `0..n` in one-line notation, acting on the right.
pub type Perm = Vec<u32>;

/// `p` then `q`.
pub fn perm_mul(p: &[u32], q: &[u32]) -> Perm {
    p.iter().map(|&x| q[x as usize]).collect()
}

pub fn perm_inverse(p: &[u32]) -> Perm {
    let mut out = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        out[x as usize] = i as u32;
    }
    out
}

fn perm_identity(n: usize) -> Perm {
    (0..n as u32).collect()
}

/// Anything that can decide triviality of words in some quotient.
pub trait WordOracle {
    fn oracle_name(&self) -> String;
    fn is_trivial(&self, w: &Word) -> Result<bool>;
}

// ---------------------------------------------------------------------------
// Permutation models

/// A finite quotient given by permutation images of the generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteModel {
    pub label: String,
    pub generators: Vec<Symbol>,
    pub images: Vec<Perm>,
    inverses: Vec<Perm>,
    pub order: u64,
}

#[derive(Serialize, Deserialize)]
struct FiniteModelJson {
    label: String,
    order: u64,
    /// 1-based one-line images.
    generators: std::collections::BTreeMap<String, Vec<u32>>,
}

impl Serialize for FiniteModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let generators =
            self.generators.iter().zip(&self.images).map(|(g, p)| (g.to_string(), p.iter().map(|x| x + 1).collect())).collect();
        FiniteModelJson { label: self.label.clone(), order: self.order, generators }.serialize(s)
    }
}

impl FiniteModel {
    /// Builds a model; the order is computed by closing the generated group
    /// (at most `limit` elements).
    pub fn new(label: &str, generators: Vec<Symbol>, images: Vec<Perm>, limit: usize) -> Result<Self> {
        if generators.len() != images.len() {
            return Err(Error::BadParameters("one image per generator required".into()));
        }
        let degree = images.first().map_or(1, Vec::len);
        let order = group_order(&images, degree, limit)?;
        let inverses = images.iter().map(|p| perm_inverse(p)).collect();
        Ok(FiniteModel { label: label.to_string(), generators, images, inverses, order })
    }

    pub fn degree(&self) -> usize {
        self.images.first().map_or(1, Vec::len)
    }

    pub fn eval(&self, w: &Word) -> Result<Perm> {
        let mut p = perm_identity(self.degree());
        for l in w.letters() {
            let i = self.generators.iter().position(|g| *g == l.sym).ok_or_else(|| Error::UnmappedSymbol(l.sym.to_string()))?;
            let q = if l.exp > 0 { &self.images[i] } else { &self.inverses[i] };
            p = perm_mul(&p, q);
        }
        Ok(p)
    }

    /// Is the image group abelian?
    pub fn is_abelian(&self) -> bool {
        self.images.iter().enumerate().all(|(i, p)| self.images[i + 1..].iter().all(|q| perm_mul(p, q) == perm_mul(q, p)))
    }
}

impl WordOracle for FiniteModel {
    fn oracle_name(&self) -> String {
        format!("{} (order {})", self.label, self.order)
    }

    fn is_trivial(&self, w: &Word) -> Result<bool> {
        let p = self.eval(w)?;
        Ok(p.iter().enumerate().all(|(i, &x)| i as u32 == x))
    }
}

fn group_order(gens: &[Perm], degree: usize, limit: usize) -> Result<u64> {
    let id = perm_identity(degree);
    let mut seen: HashSet<Perm> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(id.clone());
    queue.push_back(id);
    while let Some(p) = queue.pop_front() {
        for g in gens {
            let q = perm_mul(&p, g);
            if seen.insert(q.clone()) {
                if seen.len() > limit {
                    return Err(Error::Overflow(limit));
                }
                queue.push_back(q);
            }
        }
    }
    Ok(seen.len() as u64)
}

// ---------------------------------------------------------------------------
// Subgroup descriptions

/// Optional semidirect split of a description: the normal generators are
/// closed under conjugation by `fiber_generators` only, then `base` is adjoined.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub fiber_generators: Vec<Word>,
    pub base: Vec<Word>,
}

/// A subgroup given by generators of a normal closure, optionally split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupDescription {
    pub label: String,
    pub ambient: Presentation,
    pub normal_generators: Vec<Word>,
    pub split: Option<Split>,
}

impl SubgroupDescription {
    /// `⟨⟨gens⟩⟩` in the whole ambient group.
    pub fn normal(label: &str, ambient: &Presentation, gens: Vec<Word>) -> Self {
        SubgroupDescription { label: label.to_string(), ambient: ambient.clone(), normal_generators: gens, split: None }
    }

    /// `⟨⟨fiber⟩⟩_H · ⟨base⟩` with `H = ⟨fiber_generators⟩`.
    pub fn split(label: &str, ambient: &Presentation, fiber: Vec<Word>, fiber_generators: Vec<Word>, base: Vec<Word>) -> Self {
        SubgroupDescription {
            label: label.to_string(),
            ambient: ambient.clone(),
            normal_generators: fiber,
            split: Some(Split { fiber_generators, base }),
        }
    }

    /// All generator words, fiber part first.
    pub fn all_words(&self) -> Vec<Word> {
        let mut out = self.normal_generators.clone();
        if let Some(s) = &self.split {
            out.extend(s.base.iter().cloned());
        }
        out
    }
}

/// Image of a description in a permutation model, as an explicit element set.
#[derive(Clone, Debug)]
pub struct PermSubgroup {
    pub elements: HashSet<Perm>,
}

impl PermSubgroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, model: &FiniteModel, w: &Word) -> Result<bool> {
        Ok(self.elements.contains(&model.eval(w)?))
    }
}

fn close_under_conjugation(seed: Vec<Perm>, conj: &[Perm]) -> Vec<Perm> {
    let mut seen: HashSet<Perm> = seed.iter().cloned().collect();
    let mut out = seed.clone();
    let mut queue: VecDeque<Perm> = seed.into();
    let conj_inv: Vec<Perm> = conj.iter().map(|c| perm_inverse(c)).collect();
    while let Some(p) = queue.pop_front() {
        for (c, ci) in conj.iter().zip(&conj_inv) {
            for q in [perm_mul(&perm_mul(ci, &p), c), perm_mul(&perm_mul(c, &p), ci)] {
                if seen.insert(q.clone()) {
                    out.push(q.clone());
                    queue.push_back(q);
                }
            }
        }
    }
    out
}

fn generated(degree: usize, gens: &[Perm]) -> HashSet<Perm> {
    let id = perm_identity(degree);
    let mut seen = HashSet::new();
    seen.insert(id.clone());
    let mut queue = VecDeque::from([id]);
    while let Some(p) = queue.pop_front() {
        for g in gens {
            let q = perm_mul(&p, g);
            if seen.insert(q.clone()) {
                queue.push_back(q);
            }
        }
    }
    seen
}

/// Normal closure (or split closure) of a description inside a permutation model.
pub fn subgroup_image(model: &FiniteModel, desc: &SubgroupDescription) -> Result<PermSubgroup> {
    if desc.ambient.generators != model.generators {
        return Err(Error::OracleMismatch(format!("{} vs {}", desc.ambient.label, model.label)));
    }
    let seed = desc.normal_generators.iter().map(|w| model.eval(w)).collect::<Result<Vec<_>>>()?;
    let conj = match &desc.split {
        Some(s) => s.fiber_generators.iter().map(|w| model.eval(w)).collect::<Result<Vec<_>>>()?,
        None => model.images.clone(),
    };
    let mut gens = close_under_conjugation(seed, &conj);
    if let Some(s) = &desc.split {
        for w in &s.base {
            gens.push(model.eval(w)?);
        }
    }
    Ok(PermSubgroup { elements: generated(model.degree(), &gens) })
}

// ---------------------------------------------------------------------------
// Coset enumeration

const NONE: u32 = u32::MAX;

/// Coset table: `table[c][2i]` is `c·x_i`, `table[c][2i+1]` is `c·x_i⁻¹`.
#[derive(Clone, Debug)]
pub struct CosetTable {
    pub generators: Vec<Symbol>,
    pub subgroup: Vec<Word>,
    pub table: Vec<Vec<u32>>,
    pub complete: bool,
}

fn code_col(c: Code) -> usize {
    if c > 0 {
        2 * (c as usize - 1)
    } else {
        2 * ((-c) as usize - 1) + 1
    }
}

struct Enumerator {
    ncols: usize,
    table: Vec<Vec<u32>>,
    forward: Vec<u32>,
    live: usize,
    max: usize,
    queue: VecDeque<u32>,
}

impl Enumerator {
    fn new(ncols: usize, max: usize) -> Self {
        Enumerator { ncols, table: vec![vec![NONE; ncols]], forward: vec![0], live: 1, max, queue: VecDeque::new() }
    }

    fn alive(&self, c: u32) -> bool {
        self.forward[c as usize] == c
    }

    fn rep(&mut self, mut c: u32) -> u32 {
        let mut root = c;
        while self.forward[root as usize] != root {
            root = self.forward[root as usize];
        }
        while self.forward[c as usize] != root {
            let next = self.forward[c as usize];
            self.forward[c as usize] = root;
            c = next;
        }
        root
    }

    fn define(&mut self, c: u32, x: usize) -> Result<u32> {
        if self.live >= self.max {
            return Err(Error::Overflow(self.max));
        }
        let d = self.table.len() as u32;
        self.table.push(vec![NONE; self.ncols]);
        self.forward.push(d);
        self.live += 1;
        self.table[c as usize][x] = d;
        self.table[d as usize][x ^ 1] = c;
        Ok(d)
    }

    fn merge(&mut self, k: u32, l: u32) {
        let (k, l) = (self.rep(k), self.rep(l));
        if k == l {
            return;
        }
        let (k, l) = if k < l { (k, l) } else { (l, k) };
        self.forward[l as usize] = k;
        self.live -= 1;
        self.queue.push_back(l);
    }

    fn coincidence(&mut self, a: u32, b: u32) {
        self.merge(a, b);
        while let Some(e) = self.queue.pop_front() {
            for x in 0..self.ncols {
                let f = self.table[e as usize][x];
                if f == NONE {
                    continue;
                }
                if self.table[f as usize][x ^ 1] == e {
                    self.table[f as usize][x ^ 1] = NONE;
                }
                let (e1, f1) = (self.rep(e), self.rep(f));
                let t = self.table[e1 as usize][x];
                if t != NONE {
                    self.merge(f1, t);
                } else {
                    let s = self.table[f1 as usize][x ^ 1];
                    if s != NONE {
                        self.merge(e1, s);
                    } else {
                        self.table[e1 as usize][x] = f1;
                        self.table[f1 as usize][x ^ 1] = e1;
                    }
                }
            }
        }
    }

    fn scan_and_fill(&mut self, c: u32, w: &[usize]) -> Result<()> {
        if w.is_empty() {
            return Ok(());
        }
        let (mut f, mut b) = (c, c);
        let (mut i, mut j) = (0usize, w.len() as isize - 1);
        loop {
            while (i as isize) <= j && self.table[f as usize][w[i]] != NONE {
                f = self.table[f as usize][w[i]];
                i += 1;
            }
            if i as isize > j {
                if f != b {
                    self.coincidence(f, b);
                }
                return Ok(());
            }
            while j >= i as isize && self.table[b as usize][w[j as usize] ^ 1] != NONE {
                b = self.table[b as usize][w[j as usize] ^ 1];
                j -= 1;
            }
            if j < i as isize {
                self.coincidence(f, b);
                return Ok(());
            }
            if i as isize == j {
                self.table[f as usize][w[i]] = b;
                self.table[b as usize][w[i] ^ 1] = f;
                return Ok(());
            }
            self.define(f, w[i])?;
        }
    }
}

/// HLT coset enumeration of `⟨subgroup⟩` in `p`, with first-free numbering.
pub fn todd_coxeter(p: &Presentation, subgroup: &[Word], max_cosets: usize) -> Result<CosetTable> {
    let alphabet = Alphabet::new(&p.generators);
    let ncols = 2 * p.generators.len();
    let to_cols = |w: &Word| -> Result<Vec<usize>> { Ok(alphabet.encode(&w.reduced())?.into_iter().map(code_col).collect()) };
    let relators = p.relators.iter().map(to_cols).collect::<Result<Vec<_>>>()?;
    let subs = subgroup.iter().map(to_cols).collect::<Result<Vec<_>>>()?;
    let mut e = Enumerator::new(ncols, max_cosets.max(1));
    for s in &subs {
        e.scan_and_fill(0, s)?;
    }
    let mut c = 0u32;
    while (c as usize) < e.table.len() {
        for r in &relators {
            if !e.alive(c) {
                break;
            }
            e.scan_and_fill(c, r)?;
        }
        if e.alive(c) {
            for x in 0..ncols {
                if e.table[c as usize][x] == NONE {
                    e.define(c, x)?;
                }
            }
        }
        c += 1;
    }
    // renumber live cosets in breadth-first order from the subgroup coset
    let mut order = vec![NONE; e.table.len()];
    let mut list = vec![0u32];
    order[0] = 0;
    let mut k = 0;
    while k < list.len() {
        let c = list[k] as usize;
        for x in 0..ncols {
            let d = e.rep(e.table[c][x]) as usize;
            if order[d] == NONE {
                order[d] = list.len() as u32;
                list.push(d as u32);
            }
        }
        k += 1;
    }
    let mut table = Vec::with_capacity(list.len());
    for &c in &list {
        let row = (0..ncols)
            .map(|x| {
                let d = e.rep(e.table[c as usize][x]);
                order[d as usize]
            })
            .collect();
        table.push(row);
    }
    Ok(CosetTable { generators: p.generators.clone(), subgroup: subgroup.to_vec(), table, complete: true })
}

impl CosetTable {
    pub fn index(&self) -> usize {
        self.table.len()
    }

    /// Permutation action of each generator on the cosets.
    pub fn permutations(&self) -> Vec<Perm> {
        (0..self.generators.len()).map(|i| self.table.iter().map(|row| row[2 * i]).collect()).collect()
    }

    pub fn to_model(&self, label: &str, limit: usize) -> Result<FiniteModel> {
        FiniteModel::new(label, self.generators.clone(), self.permutations(), limit)
    }

    /// Does every relator close from every coset?
    pub fn relators_close(&self, p: &Presentation) -> Result<bool> {
        let alphabet = Alphabet::new(&self.generators);
        for r in &p.relators {
            let cols: Vec<usize> = alphabet.encode(r)?.into_iter().map(code_col).collect();
            for c in 0..self.index() {
                let end = cols.iter().fold(c as u32, |d, &x| self.table[d as usize][x]);
                if end as usize != c {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Presentation of the subgroup on Schreier generators `t[c,i]` (coset `c`,
/// generator `i`, both 1-based), one for each edge outside a BFS spanning tree.
pub fn reidemeister_schreier(t: &CosetTable, p: &Presentation) -> Result<Presentation> {
    if !t.complete {
        return Err(Error::IncompleteTable);
    }
    let m = t.index();
    let r = t.generators.len();
    let mut tree = HashSet::new();
    let mut seen = vec![false; m];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(c) = queue.pop_front() {
        for x in 0..2 * r {
            let d = t.table[c][x] as usize;
            if !seen[d] {
                seen[d] = true;
                // store the tree edge in its positive orientation
                if x % 2 == 0 {
                    tree.insert((c, x / 2));
                } else {
                    tree.insert((d, x / 2));
                }
                queue.push_back(d);
            }
        }
    }
    let sym = |c: usize, i: usize| Symbol::new("t", &[c as i64 + 1, i as i64 + 1]);
    let mut gens = Vec::new();
    for c in 0..m {
        for i in 0..r {
            if !tree.contains(&(c, i)) {
                gens.push(sym(c, i));
            }
        }
    }
    let alphabet = Alphabet::new(&t.generators);
    let mut relators = Vec::new();
    for rel in &p.relators {
        let codes = alphabet.encode(rel)?;
        for c in 0..m {
            let mut cur = c;
            let mut out = Word::empty();
            for &code in &codes {
                let x = code_col(code);
                let next = t.table[cur][x] as usize;
                let (from, i, sign) = if x.is_multiple_of(2) { (cur, x / 2, 1) } else { (next, x / 2, -1) };
                if !tree.contains(&(from, i)) {
                    out = out.mul(&Word::gen(sym(from, i)).pow(sign));
                }
                cur = next;
            }
            relators.push(out);
        }
    }
    relators.sort();
    relators.dedup();
    relators.retain(|w| !w.is_empty());
    Presentation::from_relators(&format!("{} subgroup", p.label), gens, relators)
}

// ---------------------------------------------------------------------------
// Homomorphism search

fn all_perms(d: usize) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut cur: Vec<u32> = Vec::new();
    let mut used = vec![false; d];
    fn rec(d: usize, cur: &mut Vec<u32>, used: &mut [bool], out: &mut Vec<Perm>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for x in 0..d {
            if !used[x] {
                used[x] = true;
                cur.push(x as u32);
                rec(d, cur, used, out);
                cur.pop();
                used[x] = false;
            }
        }
    }
    rec(d, &mut cur, &mut used, &mut out);
    out
}

/// Every homomorphism into `S_degree`, in lexicographic order of the images.
pub fn hom_search(p: &Presentation, degree: usize) -> Result<Vec<FiniteModel>> {
    if degree == 0 || degree > 6 {
        return Err(Error::BadParameters(format!("degree {degree} outside 1..=6")));
    }
    let alphabet = Alphabet::new(&p.generators);
    let r = p.generators.len();
    let coded = p.relators.iter().map(|w| alphabet.encode(w)).collect::<Result<Vec<_>>>()?;
    // relators become checkable once their largest generator is assigned
    let mut by_level: Vec<Vec<Vec<Code>>> = vec![Vec::new(); r];
    for c in coded {
        if let Some(top) = c.iter().map(|x| x.unsigned_abs() as usize - 1).max() {
            by_level[top].push(c);
        }
    }
    let perms = all_perms(degree);
    let inverses: Vec<Perm> = perms.iter().map(|p| perm_inverse(p)).collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    fn holds(rel: &[Code], chosen: &[usize], perms: &[Perm], inverses: &[Perm], d: usize) -> bool {
        (0..d as u32).all(|start| {
            let end = rel.iter().fold(start, |x, &c| {
                let k = chosen[c.unsigned_abs() as usize - 1];
                if c > 0 {
                    perms[k][x as usize]
                } else {
                    inverses[k][x as usize]
                }
            });
            end == start
        })
    }
    fn rec(level: usize, chosen: &mut Vec<usize>, ctx: (&[Vec<Vec<Code>>], &[Perm], &[Perm], usize), out: &mut Vec<Vec<usize>>) {
        let (by_level, perms, inverses, d) = ctx;
        if level == by_level.len() {
            out.push(chosen.clone());
            return;
        }
        for k in 0..perms.len() {
            chosen.push(k);
            if by_level[level].iter().all(|rel| holds(rel, chosen, perms, inverses, d)) {
                rec(level + 1, chosen, ctx, out);
            }
            chosen.pop();
        }
    }
    let mut found = Vec::new();
    rec(0, &mut chosen, (&by_level, &perms, &inverses, degree), &mut found);
    for (n, f) in found.into_iter().enumerate() {
        let images = f.iter().map(|&k| perms[k].clone()).collect();
        out.push(FiniteModel::new(&format!("{} -> S{degree} #{n}", p.label), p.generators.clone(), images, 1000)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Mod-2 Magnus ring

type Elem = Vec<i64>;

/// Units of `ℤ⟨⟨X_1..X_r⟩⟩` modulo terms of weight `v₂(c) + |w| ≥ n`;
/// only the non-constant part is stored.
#[derive(Clone, Debug)]
struct Ring {
    rank: usize,
    n: usize,
    /// Start of degree `d` (1-based) inside the flat coefficient vector.
    offsets: Vec<usize>,
    size: usize,
}

impl Ring {
    fn new(rank: usize, n: usize) -> Self {
        let mut offsets = vec![0; n.max(1) + 1];
        let mut size = 0;
        for d in 1..n {
            offsets[d] = size;
            size += rank.pow(d as u32);
        }
        if n >= 1 {
            offsets[n.max(1)] = size;
        }
        Ring { rank, n, offsets, size }
    }

    fn block(&self, d: usize) -> std::ops::Range<usize> {
        self.offsets[d]..self.offsets[d] + self.rank.pow(d as u32)
    }

    fn mask(&self, d: usize) -> i64 {
        (1i64 << (self.n - d)) - 1
    }

    fn normalize(&self, a: &mut Elem) {
        for d in 1..self.n {
            let m = self.mask(d);
            for x in &mut a[self.block(d)] {
                *x &= m;
            }
        }
    }

    fn one(&self) -> Elem {
        vec![0; self.size]
    }

    /// Non-constant part of `(1+a)(1+b)` is `a + b + ab`; this returns `ab`.
    fn pure_mul(&self, a: &Elem, b: &Elem) -> Elem {
        let mut out = vec![0; self.size];
        let nz: Vec<Vec<(usize, i64)>> = (0..self.n)
            .map(|d| {
                if d == 0 {
                    return Vec::new();
                }
                let r = self.block(d);
                b[r.clone()].iter().enumerate().filter(|(_, &y)| y != 0).map(|(i, &y)| (i, y)).collect()
            })
            .collect();
        for da in 1..self.n {
            let ra = self.block(da);
            for (ia, &x) in a[ra].iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for db in 1..self.n - da {
                    let stride = self.rank.pow(db as u32);
                    let base = self.offsets[da + db] + ia * stride;
                    for &(ib, y) in &nz[db] {
                        out[base + ib] += x * y;
                    }
                }
            }
        }
        out
    }

    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        let mut out = self.pure_mul(a, b);
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o += x + y;
        }
        self.normalize(&mut out);
        out
    }

    fn inverse(&self, a: &Elem) -> Elem {
        // (1+a)⁻¹ − 1 = Σ_{t≥1} (−a)^t
        let mut out = vec![0; self.size];
        let mut pow = a.clone();
        for t in 1..self.n {
            let s = if t % 2 == 1 { -1 } else { 1 };
            for (o, p) in out.iter_mut().zip(&pow) {
                *o += s * p;
            }
            pow = self.pure_mul(&pow, a);
            self.normalize(&mut pow);
        }
        self.normalize(&mut out);
        out
    }

    fn commutator(&self, a: &Elem, b: &Elem) -> Elem {
        let ab = self.mul(a, b);
        let ba = self.mul(b, a);
        self.mul(&ab, &self.inverse(&ba))
    }

    fn pow2(&self, a: &Elem, e: u32) -> Elem {
        let mut x = a.clone();
        for _ in 0..e {
            x = self.mul(&x, &x);
        }
        x
    }

    fn letter(&self, g: usize, sign: i8) -> Elem {
        let mut out = self.one();
        if self.n <= 1 {
            return out;
        }
        let mut idx = 0;
        for d in 1..self.n {
            idx = idx * self.rank + g;
            let s = if sign > 0 {
                if d == 1 {
                    1
                } else {
                    0
                }
            } else if d % 2 == 1 {
                -1
            } else {
                1
            };
            out[self.offsets[d] + idx] = s;
        }
        self.normalize(&mut out);
        out
    }

    /// Smallest weight `|w| + v₂(c)` over nonzero coefficients.
    fn level(&self, a: &Elem) -> Option<usize> {
        let mut best: Option<usize> = None;
        for d in 1..self.n {
            for &x in &a[self.block(d)] {
                if x != 0 {
                    let w = d + x.trailing_zeros() as usize;
                    if best.is_none_or(|b| w < b) {
                        best = Some(w);
                    }
                }
            }
        }
        best
    }

    fn symbol_len(&self, k: usize) -> usize {
        (1..=k).map(|d| self.rank.pow(d as u32)).sum()
    }

    /// Leading symbol at weight `k` of an element of weight ≥ k.
    fn symbol(&self, a: &Elem, k: usize) -> Bits {
        let mut bits = Bits::zeros(self.symbol_len(k));
        let mut pos = 0;
        for d in 1..=k.min(self.n - 1) {
            for &x in &a[self.block(d)] {
                if (x >> (k - d)) & 1 == 1 {
                    bits.set(pos);
                }
                pos += 1;
            }
        }
        bits
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn zeros(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn get(&self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }
    fn xor(&mut self, o: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a ^= b;
        }
    }
    fn lowest(&self) -> Option<usize> {
        self.0.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

#[derive(Clone, Debug)]
struct PcRow {
    elem: Elem,
    inv: Elem,
    sym: Bits,
    pivot: usize,
    level: usize,
    /// Counts towards the quotient (complement rows in canonical-key echelons).
    marked: bool,
}

/// Per-weight echelon of leading symbols; a polycyclic generating sequence
/// when closed under squares and commutators.
#[derive(Clone, Debug)]
struct Pcs {
    levels: Vec<Vec<PcRow>>,
}

impl Pcs {
    fn new(ring: &Ring) -> Self {
        Pcs { levels: vec![Vec::new(); ring.n] }
    }

    fn rank(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    fn rows(&self) -> impl Iterator<Item = &PcRow> {
        self.levels.iter().flatten()
    }

    /// Reduces `g` as far as possible; returns the remainder and its level
    /// (`None` when `g` sifted to the identity).
    fn reduce(&self, ring: &Ring, mut g: Elem, marks: &mut Vec<usize>) -> (Elem, Option<(usize, Bits)>) {
        while let Some(k) = ring.level(&g) {
            let mut sym = ring.symbol(&g, k);
            for row in &self.levels[k] {
                if sym.get(row.pivot) {
                    sym.xor(&row.sym);
                    g = ring.mul(&g, &row.inv);
                    if row.marked {
                        marks.push(row.pivot + (k << 32));
                    }
                }
            }
            if sym.lowest().is_some() {
                return (g, Some((k, sym)));
            }
        }
        (g, None)
    }

    fn contains(&self, ring: &Ring, g: &Elem) -> bool {
        self.reduce(ring, g.clone(), &mut Vec::new()).1.is_none()
    }

    /// Sifts and inserts; returns the new row element if one was added.
    fn insert(&mut self, ring: &Ring, g: Elem, marked: bool) -> Option<Elem> {
        let (g, rest) = self.reduce(ring, g, &mut Vec::new());
        let (k, sym) = rest?;
        let pivot = sym.lowest().expect("nonzero symbol");
        let level = &mut self.levels[k];
        let at = level.partition_point(|r| r.pivot < pivot);
        let inv = ring.inverse(&g);
        level.insert(at, PcRow { elem: g.clone(), inv, sym, pivot, level: k, marked });
        Some(g)
    }

    /// Closes under squares, mutual commutators and commutators with `conj`.
    fn close(&mut self, ring: &Ring, seed: Vec<Elem>, conj: &[Elem]) {
        let mut work = seed;
        while let Some(s) = work.pop() {
            let Some(r) = self.insert(ring, s, false) else { continue };
            let lr = ring.level(&r).unwrap_or(ring.n);
            if lr + 1 < ring.n {
                work.push(ring.mul(&r, &r));
            }
            for c in conj {
                if lr + 1 < ring.n {
                    work.push(ring.commutator(&r, c));
                }
            }
            let others: Vec<Elem> =
                self.rows().filter(|row| row.level + lr < ring.n && row.elem != r).map(|row| row.elem.clone()).collect();
            for o in others {
                work.push(ring.commutator(&r, &o));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Tower stages

/// The finite 2-group `G/γ²_n(G)` as a polycyclic quotient of the free group's
/// Magnus image.
#[derive(Clone, Debug)]
pub struct TwoQuotient {
    pub label: String,
    pub stage: usize,
    pub generators: Vec<Symbol>,
    alphabet: Alphabet,
    ring: Ring,
    gens: Vec<Elem>,
    /// Free-group basis rows `b_ℓ^{2^{k-|ℓ|}}` per weight `k`.
    free_rows: Vec<Vec<Elem>>,
    normal: Pcs,
    keyed: Pcs,
    order_log2: usize,
}

impl TwoQuotient {
    pub fn new(p: &Presentation, stage: usize) -> Result<Self> {
        if stage == 0 {
            return Err(Error::BadParameters("tower stages start at 1".into()));
        }
        if stage > 7 {
            return Err(Error::DepthUnsupported(stage));
        }
        let r = p.generators.len();
        let ring = Ring::new(r, stage);
        let alphabet = Alphabet::new(&p.generators);
        let gens: Vec<Elem> = (0..r).map(|g| ring.letter(g, 1)).collect();
        let mut q = TwoQuotient {
            label: format!("{}/gamma2_{stage}", p.label),
            stage,
            generators: p.generators.clone(),
            alphabet,
            ring: ring.clone(),
            gens: gens.clone(),
            free_rows: vec![Vec::new(); stage],
            normal: Pcs::new(&ring),
            keyed: Pcs::new(&ring),
            order_log2: 0,
        };
        // free-group layers, checked for independence
        for k in 1..stage {
            let mut check = Pcs::new(&ring);
            let mut expected = 0;
            for j in 1..=k {
                expected += witt_rank(r, j);
                for b in basic_commutators(&p.generators, j) {
                    let e = ring.pow2(&q.eval(&b)?, (k - j) as u32);
                    if ring.level(&e) != Some(k) || check.insert(&ring, e.clone(), false).is_none() {
                        return Err(Error::OracleMismatch(format!("Magnus layer {k} is not faithful")));
                    }
                    q.free_rows[k].push(e);
                }
            }
            debug_assert_eq!(q.free_rows[k].len(), expected);
        }
        let seed = p.relators.iter().map(|w| q.eval(w)).collect::<Result<Vec<_>>>()?;
        q.normal.close(&ring, seed, &gens);
        q.keyed = q.normal.clone();
        for k in 1..stage {
            for e in q.free_rows[k].clone() {
                if q.keyed.insert(&ring, e, true).is_some() {
                    q.order_log2 += 1;
                }
            }
        }
        Ok(q)
    }

    fn eval(&self, w: &Word) -> Result<Elem> {
        let mut x = self.ring.one();
        for l in w.letters() {
            let g = self.alphabet.index_of(&l.sym).ok_or_else(|| Error::UnmappedSymbol(l.sym.to_string()))?;
            x = self.ring.mul(&x, &self.ring.letter(g, l.exp));
        }
        Ok(x)
    }

    /// `log₂` of the order.
    pub fn order_log2(&self) -> usize {
        self.order_log2
    }

    pub fn order(&self) -> u128 {
        1u128 << self.order_log2
    }

    /// Unique key of the image of `w`: exponents over the complement rows.
    pub fn key(&self, w: &Word) -> Result<Vec<usize>> {
        Ok(self.key_of(self.eval(w)?))
    }

    fn key_of(&self, g: Elem) -> Vec<usize> {
        let mut marks = Vec::new();
        let (_, rest) = self.keyed.reduce(&self.ring, g, &mut marks);
        debug_assert!(rest.is_none(), "every word lies in the free image");
        marks.sort_unstable();
        marks
    }

    /// Regular permutation representation (at most `limit` points).
    pub fn to_finite_model(&self, limit: usize) -> Result<FiniteModel> {
        if self.order() > limit as u128 {
            return Err(Error::Overflow(limit));
        }
        let mut index: HashMap<Vec<usize>, u32> = HashMap::new();
        let mut reps = vec![self.ring.one()];
        index.insert(self.key_of(self.ring.one()), 0);
        let mut images = vec![Vec::new(); self.gens.len()];
        let mut i = 0;
        while i < reps.len() {
            for (g, img) in self.gens.iter().zip(images.iter_mut()) {
                let h = self.ring.mul(&reps[i], g);
                let key = self.key_of(h.clone());
                let next = index.len() as u32;
                let j = *index.entry(key).or_insert_with(|| {
                    reps.push(h);
                    next
                });
                img.push(j);
            }
            i += 1;
        }
        FiniteModel::new(&self.label, self.generators.clone(), images, limit)
    }

    /// Checks that this stage maps onto `prev` (one stage shallower).
    pub fn projects_onto(&self, prev: &TwoQuotient) -> bool {
        if prev.stage + 1 != self.stage || prev.generators != self.generators {
            return false;
        }
        let project = |a: &Elem| -> Elem {
            let mut out = prev.ring.one();
            for d in 1..prev.ring.n {
                let (src, dst) = (self.ring.block(d), prev.ring.block(d));
                out[dst].copy_from_slice(&a[src]);
            }
            prev.ring.normalize(&mut out);
            out
        };
        self.normal.rows().all(|row| prev.normal.contains(&prev.ring, &project(&row.elem))) && self.order_log2 >= prev.order_log2
    }

    fn check_ambient(&self, desc: &SubgroupDescription) -> Result<()> {
        if desc.ambient.generators != self.generators {
            return Err(Error::OracleMismatch(format!("{} vs {}", desc.ambient.label, self.label)));
        }
        Ok(())
    }

    /// Image of a description.
    pub fn subgroup_image(&self, desc: &SubgroupDescription) -> Result<PcSubgroup> {
        self.check_ambient(desc)?;
        let mut pcs = self.normal.clone();
        let seed = desc.normal_generators.iter().map(|w| self.eval(w)).collect::<Result<Vec<_>>>()?;
        match &desc.split {
            None => pcs.close(&self.ring, seed, &self.gens),
            Some(s) => {
                let conj = s.fiber_generators.iter().map(|w| self.eval(w)).collect::<Result<Vec<_>>>()?;
                pcs.close(&self.ring, seed, &conj);
                let base = s.base.iter().map(|w| self.eval(w)).collect::<Result<Vec<_>>>()?;
                pcs.close(&self.ring, base, &[]);
            }
        }
        Ok(self.wrap(pcs, &desc.label))
    }

    /// The image of `γ²_n(G)`, i.e. the kernel onto stage `n`.
    pub fn kernel_to_stage(&self, n: usize) -> PcSubgroup {
        let mut pcs = self.normal.clone();
        let seed: Vec<Elem> = self.free_rows.iter().skip(n.max(1)).flatten().cloned().collect();
        pcs.close(&self.ring, seed, &self.gens);
        self.wrap(pcs, &format!("gamma2_{n}"))
    }

    /// `Γ_n` of this quotient by iterating `Γ_{k+1} = ⟨⟨[s, x]⟩⟩` over a
    /// generating sequence `s` of `Γ_k` and generators `x`.
    pub fn lower_central_subgroup(&self, n: usize) -> PcSubgroup {
        let mut cur = self.keyed.clone();
        for _ in 1..n.max(1) {
            let mut next = self.normal.clone();
            let mut seed = Vec::new();
            for row in cur.rows() {
                for x in &self.gens {
                    seed.push(self.ring.commutator(&row.elem, x));
                }
            }
            next.close(&self.ring, seed, &self.gens);
            cur = next;
        }
        self.wrap(cur, &format!("Gamma_{n}"))
    }

    /// The whole group.
    pub fn whole(&self) -> PcSubgroup {
        self.wrap(self.keyed.clone(), "whole")
    }

    fn wrap(&self, pcs: Pcs, label: &str) -> PcSubgroup {
        let order_log2 = pcs.rank() - self.normal.rank();
        PcSubgroup { label: label.to_string(), pcs, order_log2 }
    }

    pub fn subgroup_contains(&self, s: &PcSubgroup, w: &Word) -> Result<bool> {
        Ok(s.pcs.contains(&self.ring, &self.eval(w)?))
    }

    /// `a ⊆ b`.
    pub fn subgroup_le(&self, a: &PcSubgroup, b: &PcSubgroup) -> bool {
        a.pcs.rows().all(|row| b.pcs.contains(&self.ring, &row.elem))
    }
}

impl WordOracle for TwoQuotient {
    fn oracle_name(&self) -> String {
        format!("{} (order 2^{})", self.label, self.order_log2)
    }

    fn is_trivial(&self, w: &Word) -> Result<bool> {
        Ok(self.normal.contains(&self.ring, &self.eval(w)?))
    }
}

/// A subgroup of a tower stage, held as the polycyclic sequence of its preimage.
#[derive(Clone, Debug)]
pub struct PcSubgroup {
    pub label: String,
    pcs: Pcs,
    order_log2: usize,
}

impl PcSubgroup {
    pub fn order_log2(&self) -> usize {
        self.order_log2
    }
}

/// Stages `1..=depth` of `G/γ²_i(G)`, each checked to project onto the previous.
pub fn two_quotient_tower(p: &Presentation, depth: usize) -> Result<Vec<TwoQuotient>> {
    let mut out: Vec<TwoQuotient> = Vec::new();
    for i in 1..=depth {
        let q = TwoQuotient::new(p, i)?;
        if let Some(prev) = out.last() {
            if !q.projects_onto(prev) {
                return Err(Error::OracleMismatch(format!("stage {i} does not project onto stage {}", i - 1)));
            }
        }
        out.push(q);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentations::{catalog, Family};
    use crate::words::w;

    fn cyclic4() -> Presentation {
        Presentation::from_relators("Z4", vec![Symbol::plain("a")], vec![w("a^4")]).unwrap()
    }

    fn s3() -> Presentation {
        Presentation::from_relators("S3", vec![Symbol::plain("a"), Symbol::plain("b")], vec![w("a^2"), w("b^2"), w("(a*b)^3")]).unwrap()
    }

    #[test]
    fn coset_counts() {
        let t = todd_coxeter(&cyclic4(), &[w("a^2")], 100).unwrap();
        assert_eq!(t.index(), 2);
        let t = todd_coxeter(&s3(), &[w("a")], 100).unwrap();
        assert_eq!(t.index(), 3);
        assert!(t.relators_close(&s3()).unwrap());
        let t = todd_coxeter(&s3(), &[], 100).unwrap();
        assert_eq!(t.index(), 6);
    }

    #[test]
    fn overflow_on_infinite() {
        let z = Presentation::free("Z", vec![Symbol::plain("a")]);
        assert_eq!(todd_coxeter(&z, &[], 50).unwrap_err(), Error::Overflow(50));
    }

    #[test]
    fn schreier_rewriting() {
        let t = todd_coxeter(&cyclic4(), &[w("a^2")], 100).unwrap();
        let q = reidemeister_schreier(&t, &cyclic4()).unwrap();
        assert_eq!(q.rank(), 1);
        assert_eq!(crate::presentations::abelianization(&q), crate::snf::AbelianInvariants::new(0, &[2]));
        let t = todd_coxeter(&s3(), &[w("a")], 100).unwrap();
        let q = reidemeister_schreier(&t, &s3()).unwrap();
        assert_eq!(q.rank(), 3 * 2 - 3 + 1);
        assert_eq!(crate::presentations::abelianization(&q), crate::snf::AbelianInvariants::new(0, &[2]));
    }

    #[test]
    fn homs_pi1k() {
        let p = catalog(Family::Pi1K, 1, None).unwrap();
        assert_eq!(hom_search(&p, 1).unwrap().len(), 1);
        assert_eq!(hom_search(&p, 3).unwrap().len(), 18);
    }

    #[test]
    fn tower_of_z2() {
        let p = Presentation::from_relators("Z2", vec![Symbol::plain("a")], vec![w("a^2")]).unwrap();
        let orders: Vec<u128> = two_quotient_tower(&p, 4).unwrap().iter().map(|q| q.order()).collect();
        assert_eq!(orders, vec![1, 2, 2, 2]);
    }

    #[test]
    fn free_tower_orders() {
        // |F/γ²_3| for rank 2: layers 2 + (2 + 1)
        let f = Presentation::free("F2", vec![Symbol::plain("a"), Symbol::plain("b")]);
        let t = two_quotient_tower(&f, 3).unwrap();
        assert_eq!(t[2].order_log2(), 5);
    }

    #[test]
    fn permutation_model_agrees() {
        let p = catalog(Family::Pi1K, 1, None).unwrap();
        let q = TwoQuotient::new(&p, 3).unwrap();
        let m = q.to_finite_model(1 << 12).unwrap();
        assert_eq!(m.order as u128, q.order());
        for r in &p.relators {
            assert!(m.is_trivial(r).unwrap());
        }
        for x in ["a[1]^2", "b[1]^2", "a[1]*b[1]", "a[1]^4"] {
            assert_eq!(m.is_trivial(&w(x)).unwrap(), q.is_trivial(&w(x)).unwrap(), "{x}");
        }
    }
}
