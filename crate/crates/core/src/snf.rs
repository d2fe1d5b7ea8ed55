//! Smith normal form over arbitrary-precision integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Dense row-major integer matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, entries: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows<T: Into<BigInt> + Copy>(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = IntMatrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v.into());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Determinant by fraction-free elimination (square matrices only).
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            let Some(p) = (k..n).find(|&i| !a.get(i, k).is_zero()) else {
                return BigInt::zero();
            };
            if p != k {
                a.swap_rows(p, k);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j)) / &prev;
                    a.set(i, j, v);
                }
            }
            prev = a.get(k, k).clone();
        }
        sign * a.get(n - 1, n - 1)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += q * row[src]
    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        for j in 0..self.cols {
            let v = self.get(src, j) * q;
            if !v.is_zero() {
                let e = &mut self.entries[dst * self.cols + j];
                *e += v;
            }
        }
    }

    /// col[dst] += q * col[src]
    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        for i in 0..self.rows {
            let v = self.get(i, src) * q;
            if !v.is_zero() {
                let e = &mut self.entries[i * self.cols + dst];
                *e += v;
            }
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let e = &mut self.entries[r * self.cols + j];
            *e = -std::mem::take(e);
        }
    }
}

/// Result of [`smith_normal_form`]: `left · m · right` is diagonal with
/// entries `diagonal` (length `min(rows, cols)`).
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub diagonal: Vec<BigInt>,
    pub left: IntMatrix,
    pub right: IntMatrix,
}

/// Smith normal form with unimodular transforms.
pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut left = IntMatrix::identity(rows);
    let mut right = IntMatrix::identity(cols);
    let dim = rows.min(cols);
    let mut t = 0;
    'outer: while t < dim {
        loop {
            // smallest nonzero entry of the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    let v = a.get(i, j);
                    if !v.is_zero() && best.is_none_or(|(bi, bj)| v.abs() < a.get(bi, bj).abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break 'outer };
            a.swap_rows(t, pi);
            left.swap_rows(t, pi);
            a.swap_cols(t, pj);
            right.swap_cols(t, pj);
            let p = a.get(t, t).clone();
            let mut clean = true;
            for i in t + 1..rows {
                if a.get(i, t).is_zero() {
                    continue;
                }
                let q = -a.get(i, t).div_floor(&p);
                a.add_row(i, t, &q);
                left.add_row(i, t, &q);
                if !a.get(i, t).is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                if a.get(t, j).is_zero() {
                    continue;
                }
                let q = -a.get(t, j).div_floor(&p);
                a.add_col(j, t, &q);
                right.add_col(j, t, &q);
                if !a.get(t, j).is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // the pivot must divide the whole trailing block
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !a.get(i, j).is_multiple_of(&p)));
            if let Some(i) = bad {
                let one = BigInt::one();
                a.add_row(t, i, &one);
                left.add_row(t, i, &one);
                continue;
            }
            if p.is_negative() {
                a.negate_row(t);
                left.negate_row(t);
            }
            break;
        }
        t += 1;
    }
    let diagonal = (0..dim).map(|i| a.get(i, i).clone()).collect();
    SmithForm { diagonal, left, right }
}

/// Finitely generated abelian group `ℤ^free_rank ⊕ ⨁ ℤ/torsion[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbelianInvariants {
    pub free_rank: usize,
    /// Invariant factors ≥ 2, each dividing the next.
    #[serde(with = "bigint_list")]
    pub torsion: Vec<BigInt>,
}

impl AbelianInvariants {
    pub fn new(free_rank: usize, torsion: &[i64]) -> Self {
        AbelianInvariants { free_rank, torsion: torsion.iter().map(|&t| BigInt::from(t)).collect() }
    }

    pub fn trivial() -> Self {
        AbelianInvariants { free_rank: 0, torsion: Vec::new() }
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    /// Invariants of `ℤ^generators / rowspan(relations)`.
    pub fn of_relation_matrix(m: &IntMatrix) -> Self {
        let snf = smith_normal_form(m);
        let mut torsion = Vec::new();
        let mut rank = 0;
        for d in &snf.diagonal {
            if !d.is_zero() {
                rank += 1;
                if !d.is_one() {
                    torsion.push(d.clone());
                }
            }
        }
        AbelianInvariants { free_rank: m.cols - rank, torsion }
    }

    /// Order of the torsion part (product of invariant factors).
    pub fn torsion_order(&self) -> BigInt {
        self.torsion.iter().product()
    }
}

/// JSON numbers when they fit in `i64`, decimal strings otherwise.
mod bigint_list {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Small(i64),
        Big(String),
    }

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let reprs: Vec<Repr> = v.iter().map(|x| i64::try_from(x).map(Repr::Small).unwrap_or_else(|_| Repr::Big(x.to_string()))).collect();
        reprs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let reprs = Vec::<Repr>::deserialize(d)?;
        reprs
            .into_iter()
            .map(|r| match r {
                Repr::Small(x) => Ok(BigInt::from(x)),
                Repr::Big(t) => t.parse().map_err(serde::de::Error::custom),
            })
            .collect()
    }
}

impl std::fmt::Display for AbelianInvariants {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t: Vec<String> = self.torsion.iter().map(|x| x.to_string()).collect();
        write!(f, "free_rank={} torsion=[{}]", self.free_rank, t.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(m: &IntMatrix) -> Vec<i64> {
        smith_normal_form(m).diagonal.iter().map(|d| i64::try_from(d).unwrap()).collect()
    }

    fn check_transforms(m: &IntMatrix) {
        let s = smith_normal_form(m);
        let prod = s.left.mul(m).mul(&s.right);
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let expect = if i == j { s.diagonal[i].clone() } else { BigInt::zero() };
                assert_eq!(prod.get(i, j), &expect);
            }
        }
        assert!(s.left.determinant().abs().is_one());
        assert!(s.right.determinant().abs().is_one());
        for w in s.diagonal.windows(2) {
            assert!(w[1].is_zero() || w[1].is_multiple_of(&w[0]));
        }
    }

    #[test]
    fn examples() {
        assert_eq!(diag(&IntMatrix::identity(2)), vec![1, 1]);
        assert_eq!(diag(&IntMatrix::from_rows(&[vec![2, 0], vec![0, 0]])), vec![2, 0]);
        let m = IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]);
        assert_eq!(diag(&m), vec![2, 4]);
        assert_eq!(m.determinant(), BigInt::from(-8));
        check_transforms(&m);
    }

    #[test]
    fn divisibility_fixup() {
        let m = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]);
        assert_eq!(diag(&m), vec![1, 6]);
        check_transforms(&m);
        let m = IntMatrix::from_rows(&[vec![4, 6, 0], vec![6, 9, 3], vec![0, 3, 12], vec![1, 1, 1]]);
        check_transforms(&m);
    }

    #[test]
    fn invariants() {
        let m = IntMatrix::from_rows(&[vec![2, 0, 0], vec![0, 2, 0]]);
        assert_eq!(AbelianInvariants::of_relation_matrix(&m), AbelianInvariants::new(1, &[2, 2]));
        assert_eq!(AbelianInvariants::new(1, &[2, 2]).to_string(), "free_rank=1 torsion=[2,2]");
        let empty = IntMatrix::zeros(0, 2);
        assert_eq!(AbelianInvariants::of_relation_matrix(&empty), AbelianInvariants::new(2, &[]));
    }
}
