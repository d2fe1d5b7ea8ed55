//! Benchmark inputs shared by the criterion targets.

use surfbraid::presentations::{catalog, Family, Presentation};
use surfbraid::words::{w, Word};

pub fn p2k() -> Presentation {
    catalog(Family::P2KReduced, 2, None).expect("catalog")
}

pub fn bnk(n: usize) -> Presentation {
    catalog(Family::BnK, n, None).expect("catalog")
}

/// A word in `P_3(K)` whose normal form has a few thousand letters.
pub fn long_klein_word() -> Word {
    w("b[1]*b[2]*b[1]^-1*a[2]^-1*a[1]*b[3]*a[3]^-1").pow(3)
}
