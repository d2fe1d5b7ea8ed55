//! Free-group words over named, indexed generator symbols.
//!
//! A [`Word`] is a plain sequence of signed letters. Most operations return
//! freely reduced words; [`Word::concat`] and the parser keep the letters as
//! given so that text round-trips exactly.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A generator name with up to three integer indices, e.g. `C[1,2]`.
///
/// Ordering is lexicographic on `(name, indices)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    name: Arc<str>,
    indices: Vec<i64>,
}

impl Symbol {
    pub fn new(name: &str, indices: &[i64]) -> Self {
        Symbol { name: Arc::from(name), indices: indices.to_vec() }
    }

    pub fn plain(name: &str) -> Self {
        Symbol::new(name, &[])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn index(&self, k: usize) -> Option<i64> {
        self.indices.get(k).copied()
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.indices.is_empty() {
            f.write_str("[")?;
            for (k, i) in self.indices.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{i}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let w: Word = text.parse().map_err(serde::de::Error::custom)?;
        match w.letters() {
            [l] if l.exp == 1 => Ok(l.sym.clone()),
            _ => Err(serde::de::Error::custom(format!("not a single symbol: {text}"))),
        }
    }
}

/// One signed letter of a word.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Letter {
    pub sym: Symbol,
    /// Either `1` or `-1`.
    pub exp: i8,
}

impl Letter {
    pub fn new(sym: Symbol, exp: i8) -> Self {
        debug_assert!(exp == 1 || exp == -1);
        Letter { sym, exp }
    }

    pub fn inverse(&self) -> Letter {
        Letter { sym: self.sym.clone(), exp: -self.exp }
    }

    fn cancels(&self, other: &Letter) -> bool {
        self.exp == -other.exp && self.sym == other.sym
    }
}

/// A sequence of signed letters; the empty word is the identity.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Word { letters: Vec::new() }
    }

    /// Builds a word from letters without reducing.
    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word { letters }
    }

    /// The one-letter word `sym`.
    pub fn gen(sym: Symbol) -> Self {
        Word { letters: vec![Letter::new(sym, 1)] }
    }

    /// Shorthand for `Word::gen(Symbol::new(name, indices))`.
    pub fn g(name: &str, indices: &[i64]) -> Self {
        Word::gen(Symbol::new(name, indices))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|p| !p[0].cancels(&p[1]))
    }

    pub fn reduced(&self) -> Word {
        free_reduce(self)
    }

    /// Letter-wise concatenation, no reduction.
    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word { letters }
    }

    /// Reduced product.
    pub fn mul(&self, other: &Word) -> Word {
        let mut out = free_reduce(self).letters;
        for l in &other.letters {
            push_reduced(&mut out, l.clone());
        }
        Word { letters: out }
    }

    /// Formal inverse (reduced iff `self` is).
    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(Letter::inverse).collect() }
    }

    /// Reduced integer power; negative exponents use the inverse.
    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let base = free_reduce(&base);
        let mut out = Word::empty();
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// Conjugate `u·self·u⁻¹`, reduced.
    pub fn conj_by(&self, u: &Word) -> Word {
        u.mul(self).mul(&u.inverse())
    }

    /// Distinct symbols in order of first occurrence.
    pub fn symbols(&self) -> Vec<Symbol> {
        let mut seen = Vec::new();
        for l in &self.letters {
            if !seen.contains(&l.sym) {
                seen.push(l.sym.clone());
            }
        }
        seen
    }

    /// Exponent sum of `sym`.
    pub fn exponent_sum(&self, sym: &Symbol) -> i64 {
        self.letters.iter().filter(|l| &l.sym == sym).map(|l| l.exp as i64).sum()
    }
}

impl std::ops::Mul for &Word {
    type Output = Word;
    fn mul(self, rhs: &Word) -> Word {
        Word::mul(self, rhs)
    }
}

impl std::ops::Mul for Word {
    type Output = Word;
    fn mul(self, rhs: Word) -> Word {
        Word::mul(&self, &rhs)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            write!(f, "{}", l.sym)?;
            if l.exp < 0 {
                f.write_str("^-1")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

fn push_reduced(out: &mut Vec<Letter>, l: Letter) {
    if out.last().is_some_and(|last| last.cancels(&l)) {
        out.pop();
    } else {
        out.push(l);
    }
}

/// The unique freely reduced form of `w`.
pub fn free_reduce(w: &Word) -> Word {
    let mut out = Vec::with_capacity(w.letters.len());
    for l in &w.letters {
        push_reduced(&mut out, l.clone());
    }
    Word { letters: out }
}

/// `[x, y] = x·y·x⁻¹·y⁻¹`, reduced.
pub fn commutator(x: &Word, y: &Word) -> Word {
    x.mul(y).mul(&x.inverse()).mul(&y.inverse())
}

/// Right-nested bracket `[x₁,[x₂,…,[x_{n−1},x_n]]]`.
///
/// # Panics
/// On an empty sequence.
pub fn left_normed(xs: &[Word]) -> Word {
    let (last, rest) = xs.split_last().expect("left_normed needs at least one word");
    rest.iter().rev().fold(free_reduce(last), |acc, x| commutator(x, &acc))
}

/// Applies the homomorphism given by `images`, then reduces.
pub fn substitute(w: &Word, images: &HashMap<Symbol, Word>) -> Result<Word> {
    let mut out = Vec::new();
    for l in &w.letters {
        let img = images.get(&l.sym).ok_or_else(|| Error::UnmappedSymbol(l.sym.to_string()))?;
        if l.exp > 0 {
            for m in &img.letters {
                push_reduced(&mut out, m.clone());
            }
        } else {
            for m in img.letters.iter().rev() {
                push_reduced(&mut out, m.inverse());
            }
        }
    }
    Ok(Word { letters: out })
}

/// Like [`substitute`], leaving unmapped symbols unchanged.
pub fn substitute_partial(w: &Word, images: &HashMap<Symbol, Word>) -> Word {
    let mut out = Vec::new();
    for l in &w.letters {
        match images.get(&l.sym) {
            Some(img) if l.exp > 0 => {
                for m in &img.letters {
                    push_reduced(&mut out, m.clone());
                }
            }
            Some(img) => {
                for m in img.letters.iter().rev() {
                    push_reduced(&mut out, m.inverse());
                }
            }
            None => push_reduced(&mut out, l.clone()),
        }
    }
    Word { letters: out }
}

/// Right-hand side of the expansion of `[x^{2^n}, y]` into iterated brackets:
/// `[x,x,x²,…,x^{2^{n−1}},y] · ∏_{j=0}^{n−1} [x^{2^j},…,x^{2^{n−1}},y]²`.
///
/// # Panics
/// If `n == 0`.
pub fn colchete_rhs(x: &Word, y: &Word, n: u32) -> Word {
    assert!(n >= 1, "colchete_rhs needs n >= 1");
    let mut syms = x.symbols();
    for s in y.symbols() {
        if !syms.contains(&s) {
            syms.push(s);
        }
    }
    let alpha = Alphabet::new(&syms);
    let (x, y) = (alpha.encode(x).expect("own symbols"), alpha.encode(y).expect("own symbols"));
    let powers: Vec<Vec<Code>> = (0..n).map(|j| code_pow(&x, 1 << j)).collect();
    let nest = |outer: &[Vec<Code>]| {
        let mut acc = y.clone();
        reduce_codes(&mut acc);
        for u in outer.iter().rev() {
            acc = code_commutator(u, &acc);
        }
        acc
    };
    let mut head = vec![x.clone()];
    head.extend(powers.iter().cloned());
    let mut out = nest(&head);
    for j in 0..n as usize {
        let b = nest(&powers[j..]);
        for c in b.iter().chain(&b) {
            push_code(&mut out, *c);
        }
    }
    alpha.decode(&out)
}

fn code_pow(x: &[Code], k: usize) -> Vec<Code> {
    let mut out = Vec::with_capacity(x.len() * k);
    for _ in 0..k {
        for c in x {
            push_code(&mut out, *c);
        }
    }
    out
}

fn code_commutator(x: &[Code], y: &[Code]) -> Vec<Code> {
    let mut out = Vec::with_capacity(2 * (x.len() + y.len()));
    let (xi, yi) = (invert_codes(x), invert_codes(y));
    for c in x.iter().chain(y).chain(&xi).chain(&yi) {
        push_code(&mut out, *c);
    }
    out
}

// ---------------------------------------------------------------------------
// Parsing

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at byte {}", self.pos))
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn int(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.src.get(self.pos), Some(b'-') | Some(b'+')) {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok().and_then(|s| s.parse().ok()).ok_or_else(|| self.err("expected integer"))
    }

    fn expr(&mut self) -> Result<Vec<Letter>> {
        let mut out = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            out.extend(self.factor()?);
        }
        Ok(out)
    }

    fn factor(&mut self) -> Result<Vec<Letter>> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let k = self.int()?;
            let unit: Vec<Letter> = if k < 0 { base.iter().rev().map(Letter::inverse).collect() } else { base };
            let mut out = Vec::with_capacity(unit.len() * k.unsigned_abs() as usize);
            for _ in 0..k.unsigned_abs() {
                out.extend(unit.iter().cloned());
            }
            Ok(out)
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Vec<Letter>> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(Vec::new())
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
                let mut indices = Vec::new();
                if self.peek() == Some(b'[') {
                    self.pos += 1;
                    indices.push(self.int()?);
                    while self.peek() == Some(b',') {
                        self.pos += 1;
                        indices.push(self.int()?);
                    }
                    self.expect(b']')?;
                }
                if indices.len() > 3 {
                    return Err(self.err("at most three indices"));
                }
                Ok(vec![Letter::new(Symbol { name: Arc::from(name), indices }, 1)])
            }
            _ => Err(self.err("expected generator, '1' or '('")),
        }
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Parses `name`, `name[i,j]`, `^k`, `*`, parentheses and `1`.
    /// Letters are kept exactly as written (no reduction).
    fn from_str(s: &str) -> Result<Word> {
        let mut p = Parser { src: s.as_bytes(), pos: 0 };
        if p.peek().is_none() {
            return Ok(Word::empty());
        }
        let letters = p.expr()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input"));
        }
        Ok(Word { letters })
    }
}

/// Parses a word, panicking on malformed input. Intended for literals.
pub fn w(s: &str) -> Word {
    s.parse().unwrap_or_else(|e| panic!("bad word literal {s:?}: {e}"))
}

// ---------------------------------------------------------------------------
// Integer-coded words used by the heavy engines.

/// Letter `±(i+1)` stands for generator `i` with sign.
pub type Code = i32;

/// Freely reduces an integer-coded word in place.
pub fn reduce_codes(w: &mut Vec<Code>) {
    let mut n = 0;
    for i in 0..w.len() {
        let c = w[i];
        if n > 0 && w[n - 1] == -c {
            n -= 1;
        } else {
            w[n] = c;
            n += 1;
        }
    }
    w.truncate(n);
}

/// Appends `c` to a reduced coded word, cancelling if possible.
pub fn push_code(w: &mut Vec<Code>, c: Code) {
    if w.last() == Some(&-c) {
        w.pop();
    } else {
        w.push(c);
    }
}

pub fn invert_codes(w: &[Code]) -> Vec<Code> {
    w.iter().rev().map(|c| -c).collect()
}

/// Bijection between symbols and generator indices.
#[derive(Clone, Debug, Default)]
pub struct Alphabet {
    symbols: Vec<Symbol>,
    lookup: HashMap<Symbol, usize>,
}

impl Alphabet {
    pub fn new(symbols: &[Symbol]) -> Self {
        let lookup = symbols.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Alphabet { symbols: symbols.to_vec(), lookup }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn index_of(&self, s: &Symbol) -> Option<usize> {
        self.lookup.get(s).copied()
    }

    pub fn encode(&self, w: &Word) -> Result<Vec<Code>> {
        w.letters
            .iter()
            .map(|l| {
                let i = self.index_of(&l.sym).ok_or_else(|| Error::UnmappedSymbol(l.sym.to_string()))?;
                Ok(if l.exp > 0 { i as Code + 1 } else { -(i as Code + 1) })
            })
            .collect()
    }

    pub fn decode(&self, w: &[Code]) -> Word {
        Word { letters: w.iter().map(|&c| Letter::new(self.symbols[(c.unsigned_abs() - 1) as usize].clone(), c.signum() as i8)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_examples() {
        assert_eq!(free_reduce(&w("a*a^-1*b")), w("b"));
        assert_eq!(free_reduce(&Word::empty()), Word::empty());
        assert_eq!(free_reduce(&w("a*b*b^-1*a^-1*c")), w("c"));
    }

    #[test]
    fn commutator_examples() {
        assert!(commutator(&w("a"), &w("a")).is_empty());
        assert_eq!(commutator(&w("a"), &w("b")), w("a*b*a^-1*b^-1"));
        assert_eq!(commutator(&w("a*b"), &w("b")), w("a*b*b*b^-1*a^-1*b^-1").reduced());
        assert_eq!(commutator(&w("a*b"), &w("b")), w("a*b*a^-1*b^-1"));
    }

    #[test]
    fn left_normed_examples() {
        assert_eq!(left_normed(&[w("a")]), w("a"));
        assert_eq!(left_normed(&[w("a"), w("b")]), commutator(&w("a"), &w("b")));
        assert_eq!(left_normed(&[w("a"), w("a"), w("b")]), commutator(&w("a"), &commutator(&w("a"), &w("b"))));
    }

    #[test]
    fn substitute_examples() {
        let mut m = HashMap::new();
        m.insert(Symbol::plain("a"), w("x"));
        m.insert(Symbol::plain("b"), w("y"));
        assert_eq!(substitute(&w("a*b"), &m).unwrap(), w("x*y"));
        m.insert(Symbol::plain("a"), w("x*y"));
        assert_eq!(substitute(&w("a^-1"), &m).unwrap(), w("y^-1*x^-1"));
        assert!(matches!(substitute(&w("c"), &m), Err(Error::UnmappedSymbol(_))));
        let mut phi = HashMap::new();
        phi.insert(Symbol::new("b", &[2]), w("a[2]^-2*b[2]"));
        assert_eq!(substitute(&w("b[2]"), &phi).unwrap(), w("a[2]^-1*a[2]^-1*b[2]"));
    }

    #[test]
    fn colchete_examples() {
        let (a, b) = (w("a"), w("b"));
        let n1 = commutator(&a, &commutator(&a, &b)).mul(&commutator(&a, &b).pow(2));
        assert_eq!(colchete_rhs(&a, &b, 1), n1);
        assert!(colchete_rhs(&Word::empty(), &b, 2).is_empty());
        assert_eq!(colchete_rhs(&a, &b, 2), commutator(&a.pow(4), &b));
    }

    #[test]
    fn text_round_trip() {
        for s in ["b[2]^-1*a[2]*b[2]*a[2]", "1", "theta[1,-2,3]*s", "C[1,2]^-1"] {
            assert_eq!(w(s).to_string(), s);
        }
        assert_eq!(w(" a ^ 2 * ( b * c )^-1 "), w("a*a*c^-1*b^-1"));
        assert!("a[1".parse::<Word>().is_err());
        assert!("a**b".parse::<Word>().is_err());
    }

    #[test]
    fn symbol_order() {
        let mut v = [Symbol::new("b", &[1]), Symbol::new("a", &[2]), Symbol::new("a", &[1, 3]), Symbol::plain("a")];
        v.sort();
        let names: Vec<String> = v.iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["a", "a[1,3]", "a[2]", "b[1]"]);
    }

    #[test]
    fn codes() {
        let alpha = Alphabet::new(&[Symbol::plain("a"), Symbol::plain("b")]);
        let c = alpha.encode(&w("a*b^-1")).unwrap();
        assert_eq!(c, vec![1, -2]);
        assert_eq!(alpha.decode(&c), w("a*b^-1"));
        let mut x = vec![1, 2, -2, -1, 2];
        reduce_codes(&mut x);
        assert_eq!(x, vec![2]);
    }
}
