//! Free nilpotent groups and class-bounded nilpotent quotients.
//!
//! Elements of `F/Γ_{c+1}(F)` are stored as truncated Magnus series
//! (`x ↦ 1 + X`), which is a faithful representation. Coordinates are read
//! off over the Lyndon basis: each Lyndon word is bracketed by its standard
//! factorization and realized as an iterated group commutator.

use std::collections::HashMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presentations::Presentation;
use crate::snf::{AbelianInvariants, IntMatrix};
use crate::words::{commutator, Alphabet, Symbol, Word};

pub const MAX_CLASS: usize = 4;

/// Truncated non-commutative power series with integer coefficients.
/// `parts[d]` holds the degree-`d` coefficients indexed by words in base `rank`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    rank: usize,
    parts: Vec<Vec<i128>>,
}

impl Series {
    pub fn one(rank: usize, c: usize) -> Self {
        let mut parts: Vec<Vec<i128>> = (0..=c).map(|d| vec![0; rank.pow(d as u32)]).collect();
        parts[0][0] = 1;
        Series { rank, parts }
    }

    pub fn class(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn part(&self, d: usize) -> &[i128] {
        &self.parts[d]
    }

    pub fn is_one(&self) -> bool {
        self.parts[1..].iter().all(|p| p.iter().all(|&x| x == 0))
    }

    /// Smallest positive degree with a nonzero coefficient.
    pub fn leading_degree(&self) -> Option<usize> {
        (1..self.parts.len()).find(|&d| self.parts[d].iter().any(|&x| x != 0))
    }

    pub fn mul(&self, other: &Series) -> Series {
        let c = self.class();
        let r = self.rank;
        let mut out = Series::one(r, c);
        out.parts[0][0] = 0;
        for d in 0..=c {
            for i in 0..=d {
                let j = d - i;
                let (a, b) = (&self.parts[i], &other.parts[j]);
                let stride = b.len();
                let dst = &mut out.parts[d];
                for (ia, &x) in a.iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    let base = ia * stride;
                    for (ib, &y) in b.iter().enumerate() {
                        if y != 0 {
                            dst[base + ib] += x * y;
                        }
                    }
                }
            }
        }
        out
    }

    /// Right multiplication by `x_g^{±1}`.
    pub fn mul_letter(&self, g: usize, sign: i32) -> Series {
        let c = self.class();
        let r = self.rank;
        let mut out = self.clone();
        let mut term = self.clone();
        for k in 1..=c {
            // term ← term·(∓x_g), accumulating the geometric series for x⁻¹
            let mut next = Series::one(r, c);
            next.parts[0][0] = 0;
            for d in 1..=c {
                let (src, dst) = (&term.parts[d - 1], &mut next.parts[d]);
                for (i, &x) in src.iter().enumerate() {
                    if x != 0 {
                        dst[i * r + g] = x;
                    }
                }
            }
            if sign > 0 {
                for d in 1..=c {
                    for (o, t) in out.parts[d].iter_mut().zip(&next.parts[d]) {
                        *o += t;
                    }
                }
                break;
            }
            let s = if k % 2 == 1 { -1 } else { 1 };
            for d in 1..=c {
                for (o, t) in out.parts[d].iter_mut().zip(&next.parts[d]) {
                    *o += s * t;
                }
            }
            term = next;
        }
        out
    }

    pub fn inverse(&self) -> Series {
        let c = self.class();
        let mut x = self.clone();
        x.parts[0][0] = 0;
        // (1+X)⁻¹ = Σ (−X)^k
        let mut out = Series::one(self.rank, c);
        let mut pow = Series::one(self.rank, c);
        for k in 1..=c {
            pow = pow.mul(&x);
            let s = if k % 2 == 1 { -1 } else { 1 };
            for d in 1..=c {
                for (o, t) in out.parts[d].iter_mut().zip(&pow.parts[d]) {
                    *o += s * t;
                }
            }
        }
        out
    }

    pub fn pow(&self, k: i64) -> Series {
        let mut base = if k < 0 { self.inverse() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Series::one(self.rank, self.class());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn commutator(&self, other: &Series) -> Series {
        self.mul(other).mul(&self.inverse()).mul(&other.inverse())
    }
}

/// Lyndon words of length `len` over `rank` letters, in lexicographic order.
pub fn lyndon_words(rank: usize, len: usize) -> Vec<Vec<usize>> {
    // Duval's generation algorithm
    let mut out = Vec::new();
    if rank == 0 || len == 0 {
        return out;
    }
    let mut w: Vec<usize> = vec![0];
    loop {
        if w.len() == len {
            out.push(w.clone());
        }
        let m = w.len();
        while w.len() < len {
            let x = w[w.len() - m];
            w.push(x);
        }
        while w.last() == Some(&(rank - 1)) {
            w.pop();
        }
        match w.last_mut() {
            Some(x) => *x += 1,
            None => break,
        }
    }
    out
}

/// Number of Lyndon words of length `k` over `r` letters (Witt's formula).
pub fn witt_rank(r: usize, k: usize) -> usize {
    let mut total: i128 = 0;
    for d in 1..=k {
        if k.is_multiple_of(d) {
            total += mobius(d) as i128 * (r as i128).pow((k / d) as u32);
        }
    }
    (total / k as i128) as usize
}

fn mobius(mut n: usize) -> i32 {
    let mut m = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            m = -m;
        }
        p += 1;
    }
    if n > 1 {
        m = -m;
    }
    m
}

/// Standard factorization `w = uv` with `v` the longest proper Lyndon suffix.
fn standard_split(w: &[usize]) -> usize {
    (1..w.len()).find(|&i| is_lyndon(&w[i..])).expect("Lyndon word of length ≥ 2 has a Lyndon suffix")
}

fn is_lyndon(w: &[usize]) -> bool {
    !w.is_empty() && (1..w.len()).all(|i| w[i..] > *w)
}

/// Basic commutators of exactly `weight` over `symbols`: Lyndon words
/// bracketed by standard factorization, as group commutators.
pub fn basic_commutators(symbols: &[Symbol], weight: usize) -> Vec<Word> {
    fn bracket(w: &[usize], symbols: &[Symbol], memo: &mut HashMap<Vec<usize>, Word>) -> Word {
        if let Some(x) = memo.get(w) {
            return x.clone();
        }
        let out = if w.len() == 1 {
            Word::gen(symbols[w[0]].clone())
        } else {
            let i = standard_split(w);
            let u = bracket(&w[..i], symbols, memo);
            let v = bracket(&w[i..], symbols, memo);
            commutator(&u, &v)
        };
        memo.insert(w.to_vec(), out.clone());
        out
    }
    let mut memo = HashMap::new();
    lyndon_words(symbols.len(), weight).iter().map(|w| bracket(w, symbols, &mut memo)).collect()
}

/// One element of the Lyndon basis.
#[derive(Clone, Debug)]
pub struct BasisElement {
    pub lyndon: Vec<usize>,
    /// Iterated group commutator over the alphabet.
    pub word: Word,
    series: Series,
}

impl BasisElement {
    pub fn weight(&self) -> usize {
        self.lyndon.len()
    }
}

/// A point of `F/Γ_{c+1}(F)` in collected coordinates: `∏ b_ℓ^{e_ℓ}` over the
/// basis ordered by weight, then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NilElement {
    pub class_bound: usize,
    /// `coordinates[k-1]` are the exponents of the weight-`k` basis elements.
    pub coordinates: Vec<Vec<i128>>,
}

impl NilElement {
    pub fn is_identity(&self) -> bool {
        self.coordinates.iter().all(|v| v.iter().all(|&x| x == 0))
    }

    pub fn weight_coordinates(&self, k: usize) -> &[i128] {
        &self.coordinates[k - 1]
    }
}

/// The free nilpotent group of class `c` on an alphabet.
#[derive(Clone, Debug)]
pub struct FreeNilpotent {
    alphabet: Alphabet,
    class: usize,
    /// `basis[k-1]`: Lyndon basis of weight `k`.
    basis: Vec<Vec<BasisElement>>,
    /// Position of each Lyndon word (as a base-`rank` index) inside its weight.
    lookup: Vec<HashMap<usize, usize>>,
}

impl FreeNilpotent {
    pub fn new(symbols: &[Symbol], c: usize) -> Result<Self> {
        if c == 0 || c > MAX_CLASS + 1 {
            return Err(Error::ClassUnsupported(c));
        }
        if symbols.is_empty() {
            return Err(Error::BadParameters("free nilpotent group needs at least one generator".into()));
        }
        let alphabet = Alphabet::new(symbols);
        let r = symbols.len();
        let mut basis: Vec<Vec<BasisElement>> = Vec::new();
        let mut words_by_lyndon: HashMap<Vec<usize>, (Word, Series)> = HashMap::new();
        for k in 1..=c {
            let mut level = Vec::new();
            for lw in lyndon_words(r, k) {
                let (word, series) = if k == 1 {
                    let s = Series::one(r, c).mul_letter(lw[0], 1);
                    (Word::gen(symbols[lw[0]].clone()), s)
                } else {
                    let i = standard_split(&lw);
                    let (u, su) = &words_by_lyndon[&lw[..i].to_vec()];
                    let (v, sv) = &words_by_lyndon[&lw[i..].to_vec()];
                    (commutator(u, v), su.commutator(sv))
                };
                words_by_lyndon.insert(lw.clone(), (word.clone(), series.clone()));
                level.push(BasisElement { lyndon: lw, word, series });
            }
            basis.push(level);
        }
        let lookup = basis.iter().map(|level| level.iter().enumerate().map(|(p, b)| (word_index(&b.lyndon, r), p)).collect()).collect();
        Ok(FreeNilpotent { alphabet, class: c, basis, lookup })
    }

    pub fn rank(&self) -> usize {
        self.alphabet.len()
    }

    pub fn class(&self) -> usize {
        self.class
    }

    pub fn symbols(&self) -> &[Symbol] {
        self.alphabet.symbols()
    }

    pub fn basis(&self, weight: usize) -> &[BasisElement] {
        &self.basis[weight - 1]
    }

    pub fn identity_series(&self) -> Series {
        Series::one(self.rank(), self.class)
    }

    pub fn series(&self, w: &Word) -> Result<Series> {
        let mut s = self.identity_series();
        for l in w.letters() {
            let g = self.alphabet.index_of(&l.sym).ok_or_else(|| Error::UnmappedSymbol(l.sym.to_string()))?;
            s = s.mul_letter(g, l.exp as i32);
        }
        Ok(s)
    }

    /// Coordinates over the weight-`k` basis of a degree-`k` Lie polynomial.
    pub fn lie_coordinates(&self, part: &[i128], k: usize) -> Vec<i128> {
        let mut p = part.to_vec();
        let mut out = vec![0; self.basis[k - 1].len()];
        while let Some(idx) = p.iter().position(|&x| x != 0) {
            let pos = *self.lookup[k - 1].get(&idx).expect("minimal word of a Lie polynomial is Lyndon");
            let coef = p[idx];
            out[pos] = coef;
            for (x, y) in p.iter_mut().zip(self.basis[k - 1][pos].series.part(k)) {
                *x -= coef * y;
            }
        }
        out
    }

    /// Leading weight and coordinates of a non-identity element.
    pub fn leading(&self, s: &Series) -> Option<(usize, Vec<i128>)> {
        let k = s.leading_degree()?;
        Some((k, self.lie_coordinates(s.part(k), k)))
    }

    pub fn coordinates(&self, s: &Series) -> NilElement {
        let mut coords: Vec<Vec<i128>> = self.basis.iter().map(|l| vec![0; l.len()]).collect();
        let mut cur = s.clone();
        while let Some((k, v)) = self.leading(&cur) {
            for (pos, &e) in v.iter().enumerate() {
                if e != 0 {
                    cur = self.basis[k - 1][pos].series.pow(-(e as i64)).mul(&cur);
                }
            }
            coords[k - 1] = v;
        }
        NilElement { class_bound: self.class, coordinates: coords }
    }

    pub fn reduce(&self, w: &Word) -> Result<NilElement> {
        Ok(self.coordinates(&self.series(w)?))
    }

    pub fn to_series(&self, x: &NilElement) -> Series {
        let mut s = self.identity_series();
        for (k, v) in x.coordinates.iter().enumerate() {
            for (pos, &e) in v.iter().enumerate() {
                if e != 0 {
                    s = s.mul(&self.basis[k][pos].series.pow(e as i64));
                }
            }
        }
        s
    }

    /// A word representing `x`: the ordered product of basis commutator powers.
    pub fn to_word(&self, x: &NilElement) -> Word {
        let mut out = Word::empty();
        for (k, v) in x.coordinates.iter().enumerate() {
            for (pos, &e) in v.iter().enumerate() {
                if e != 0 {
                    out = out.mul(&self.basis[k][pos].word.pow(e as i64));
                }
            }
        }
        out
    }

    pub fn mul(&self, x: &NilElement, y: &NilElement) -> NilElement {
        self.coordinates(&self.to_series(x).mul(&self.to_series(y)))
    }

    pub fn inverse(&self, x: &NilElement) -> NilElement {
        self.coordinates(&self.to_series(x).inverse())
    }
}

fn word_index(w: &[usize], r: usize) -> usize {
    w.iter().fold(0, |acc, &x| acc * r + x)
}

/// Default alphabet for a word: its symbols in sorted order.
fn alphabet_for(w: &Word, rank: usize) -> Result<Vec<Symbol>> {
    let mut syms = w.symbols();
    syms.sort();
    syms.dedup();
    if syms.len() > rank {
        return Err(Error::BadParameters(format!("word uses {} symbols, rank is {rank}", syms.len())));
    }
    let mut k = 0;
    while syms.len() < rank {
        let s = Symbol::new("_pad", &[k]);
        k += 1;
        syms.push(s);
    }
    Ok(syms)
}

/// Collected coordinates of `w` in the free nilpotent group of class `c`,
/// over the sorted symbols of `w` (padded to `rank`).
pub fn nil_reduce(w: &Word, rank: usize, c: usize) -> Result<NilElement> {
    FreeNilpotent::new(&alphabet_for(w, rank)?, c)?.reduce(w)
}

/// Result of [`lcs_weight`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    Exact(usize),
    AboveBound,
}

/// Largest `c ≤ cmax` with `w ∈ Γ_c(F)`.
pub fn lcs_weight(w: &Word, rank: usize, cmax: usize) -> Result<Weight> {
    let f = FreeNilpotent::new(&alphabet_for(w, rank)?, cmax)?;
    Ok(match f.series(w)?.leading_degree() {
        Some(k) => Weight::Exact(k),
        None => Weight::AboveBound,
    })
}

// ---------------------------------------------------------------------------
// Nilpotent quotients

#[derive(Clone, Debug)]
struct Row {
    elem: Series,
    lead: Vec<i128>,
    pivot: usize,
}

/// A normal subgroup of `F/Γ_{c+1}(F)` kept as a sifted generating sequence:
/// per weight, leading coordinates form an echelon basis of `(N∩Γ_k)Γ_{k+1}/Γ_{k+1}`.
#[derive(Clone, Debug)]
pub struct NilpotentQuotient {
    free: FreeNilpotent,
    levels: Vec<Vec<Row>>,
}

impl NilpotentQuotient {
    /// `G/Γ_{c+1}(G)` for a presentation.
    pub fn new(p: &Presentation, c: usize) -> Result<Self> {
        if c == 0 || c > MAX_CLASS {
            return Err(Error::ClassUnsupported(c));
        }
        if p.generators.is_empty() {
            return Err(Error::BadParameters("presentation has no generators".into()));
        }
        let free = FreeNilpotent::new(&p.generators, c)?;
        let mut q = NilpotentQuotient { free, levels: vec![Vec::new(); c] };
        let gens: Vec<Series> = (0..q.free.rank()).map(|g| q.free.identity_series().mul_letter(g, 1)).collect();
        // relators and their iterated commutators with generators up to depth c−1
        let mut seed = Vec::new();
        let mut frontier: Vec<Series> = p.relators.iter().map(|r| q.free.series(r)).collect::<Result<Vec<_>>>()?;
        for depth in 0..c {
            seed.extend(frontier.iter().cloned());
            if depth + 1 == c {
                break;
            }
            let mut next = Vec::new();
            for s in &frontier {
                if s.is_one() {
                    continue;
                }
                for x in &gens {
                    next.push(x.commutator(s));
                }
            }
            frontier = next;
        }
        q.close(seed, &gens);
        Ok(q)
    }

    fn close(&mut self, seed: Vec<Series>, gens: &[Series]) {
        let mut work = seed;
        while let Some(s) = work.pop() {
            for added in self.sift_insert(s) {
                for x in gens {
                    work.push(added.commutator(x));
                }
                for level in &self.levels {
                    for row in level {
                        if row.elem != added {
                            work.push(added.commutator(&row.elem));
                        }
                    }
                }
            }
        }
    }

    /// Sifts `s`; returns every element that became a new echelon row.
    fn sift_insert(&mut self, mut s: Series) -> Vec<Series> {
        let mut added = Vec::new();
        loop {
            let Some((k, mut v)) = self.free.leading(&s) else { return added };
            let level = &mut self.levels[k - 1];
            let mut i = 0;
            loop {
                let Some(p) = v.iter().position(|&x| x != 0) else { break };
                while i < level.len() && level[i].pivot < p {
                    i += 1;
                }
                if i == level.len() || level[i].pivot > p {
                    // new pivot column
                    if v[p] < 0 {
                        s = s.inverse();
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                    level.insert(i, Row { elem: s.clone(), lead: v, pivot: p });
                    added.push(s);
                    return added;
                }
                // Euclid between s and the row at pivot p
                loop {
                    let d = level[i].lead[p];
                    let q = v[p].div_euclid(d);
                    if q != 0 {
                        s = s.mul(&level[i].elem.pow(-(q as i64)));
                        for (x, y) in v.iter_mut().zip(&level[i].lead) {
                            *x -= q * y;
                        }
                    }
                    if v[p] == 0 {
                        break;
                    }
                    // remainder is smaller than the pivot: swap roles
                    let old = std::mem::replace(&mut level[i], Row { elem: s.clone(), lead: v.clone(), pivot: p });
                    added.push(s);
                    s = old.elem;
                    v = old.lead;
                }
            }
            // s now lies in Γ_{k+1}
        }
    }

    pub fn class(&self) -> usize {
        self.free.class()
    }

    pub fn free(&self) -> &FreeNilpotent {
        &self.free
    }

    /// Is `w` trivial in `G/Γ_{c+1}(G)`?
    pub fn is_trivial(&self, w: &Word) -> Result<bool> {
        let mut s = self.free.series(w)?;
        while let Some((k, mut v)) = self.free.leading(&s) {
            for row in &self.levels[k - 1] {
                let p = row.pivot;
                if v[p] == 0 {
                    continue;
                }
                if v[..p].iter().any(|&x| x != 0) || v[p] % row.lead[p] != 0 {
                    return Ok(false);
                }
                let q = v[p] / row.lead[p];
                s = s.mul(&row.elem.pow(-(q as i64)));
                for (x, y) in v.iter_mut().zip(&row.lead) {
                    *x -= q * y;
                }
            }
            if v.iter().any(|&x| x != 0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Invariants of `Γ_k(G)/Γ_{k+1}(G)`.
    pub fn layer(&self, k: usize) -> AbelianInvariants {
        let w = self.free.basis(k).len();
        let rows = &self.levels[k - 1];
        let mut m = IntMatrix::zeros(rows.len(), w);
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.lead.iter().enumerate() {
                m.set(i, j, BigInt::from(x));
            }
        }
        AbelianInvariants::of_relation_matrix(&m)
    }

    pub fn report(&self) -> NilQuotientReport {
        NilQuotientReport { class: self.class(), layers: (1..=self.class()).map(|k| self.layer(k)).collect() }
    }
}

/// Layers `Γ_k(G)/Γ_{k+1}(G)` for `k = 1..=c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NilQuotientReport {
    pub class: usize,
    pub layers: Vec<AbelianInvariants>,
}

pub fn nilpotent_quotient(p: &Presentation, c: usize) -> Result<NilQuotientReport> {
    Ok(NilpotentQuotient::new(p, c)?.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::w;

    #[test]
    fn lyndon_counts() {
        for r in 1..4 {
            for k in 1..6 {
                let ws = lyndon_words(r, k);
                assert_eq!(ws.len(), witt_rank(r, k), "r={r} k={k}");
                assert!(ws.iter().all(|x| is_lyndon(x)));
                assert!(ws.windows(2).all(|p| p[0] < p[1]));
            }
        }
    }

    #[test]
    fn reduce_examples() {
        assert!(nil_reduce(&w("a*a^-1"), 2, 3).unwrap().is_identity());
        let x = nil_reduce(&w("a*b*a^-1*b^-1"), 2, 2).unwrap();
        assert_eq!(x.coordinates, vec![vec![0, 0], vec![1]]);
        let x = nil_reduce(&w("(a*b*a^-1*b^-1)^2"), 2, 3).unwrap();
        assert_eq!(x.coordinates[0], vec![0, 0]);
        assert_eq!(x.coordinates[1], vec![2]);
    }

    #[test]
    fn weights() {
        assert_eq!(lcs_weight(&w("a"), 2, 4).unwrap(), Weight::Exact(1));
        assert_eq!(lcs_weight(&w("a*b*a^-1*b^-1"), 2, 4).unwrap(), Weight::Exact(2));
        let abb = crate::words::left_normed(&[w("a"), w("a"), w("b")]);
        assert_eq!(lcs_weight(&abb, 2, 4).unwrap(), Weight::Exact(3));
        assert_eq!(lcs_weight(&abb, 2, 2).unwrap(), Weight::AboveBound);
    }

    #[test]
    fn group_ops_round_trip() {
        let f = FreeNilpotent::new(&[Symbol::plain("a"), Symbol::plain("b")], 3).unwrap();
        let x = f.reduce(&w("a*b^2*a^-1*b")).unwrap();
        let y = f.reduce(&w("b*a*b*a^-3")).unwrap();
        assert_eq!(f.mul(&x, &y), f.reduce(&w("a*b^2*a^-1*b*b*a*b*a^-3")).unwrap());
        assert!(f.mul(&x, &f.inverse(&x)).is_identity());
    }
}
