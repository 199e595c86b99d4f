//! The Weyl walk: coin matrices for both chiralities, exact unitarity checks,
//! the one-step update, and the closed form of long transition-matrix products.

mod amplitude;
mod evolve;
mod matrix;
mod state;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::combinatorics::BitString;
use crate::error::WalkError;
use crate::lattice::{step_codec, step_vector, StepIndex};

pub use amplitude::{Amplitude, QuarterTurns};
pub use evolve::{evolve, evolve_with_table, step, step_with_table, Evolution};
pub use matrix::{SpinMatrix, Spinor};
pub use state::WalkState;

/// Selects `ζ = (1 + i)/4` (`Plus`) or `ζ = (1 - i)/4` (`Minus`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chirality {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Chirality {
    pub const BOTH: [Chirality; 2] = [Chirality::Plus, Chirality::Minus];

    pub fn sign(self) -> i64 {
        match self {
            Chirality::Plus => 1,
            Chirality::Minus => -1,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Chirality::Plus => Chirality::Minus,
            Chirality::Minus => Chirality::Plus,
        }
    }

    /// `ζ = (1 + c·i)/4`.
    pub fn zeta(self) -> Amplitude {
        Amplitude::new(1, self.sign(), 2)
    }

    /// `(c·i)^p` as a power of `i`.
    pub fn turns(self, p: u64) -> QuarterTurns {
        QuarterTurns::new(self.sign() * (p % 4) as i64)
    }
}

impl fmt::Display for Chirality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chirality::Plus => "+",
            Chirality::Minus => "-",
        })
    }
}

impl FromStr for Chirality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+" | "plus" | "+1" => Ok(Chirality::Plus),
            "-" | "minus" | "-1" => Ok(Chirality::Minus),
            other => Err(format!("chirality must be '+' or '-', got {other:?}")),
        }
    }
}

/// `B_{ab}`.
pub fn b_matrix(a: u8, b: u8) -> SpinMatrix {
    SpinMatrix::from_integers(b_integers(a, b))
}

pub(crate) fn b_integers(a: u8, b: u8) -> [[i64; 2]; 2] {
    match (a & 1, b & 1) {
        (0, 0) => [[1, 0], [-1, 0]],
        (1, 0) => [[0, -1], [0, 1]],
        (0, 1) => [[1, 0], [1, 0]],
        _ => [[0, 1], [0, 1]],
    }
}

/// Coin matrix `A_{h_l}` as tabulated for the walk: `ζ*` times an integer
/// matrix for `l > 0`, `ζ` times one for `l < 0`.
pub fn transition_matrix(l: StepIndex, c: Chirality) -> SpinMatrix {
    let pattern: [[i64; 2]; 2] = match l.value() {
        1 => [[1, 0], [1, 0]],
        2 => [[0, 1], [0, 1]],
        3 => [[0, -1], [0, 1]],
        4 => [[1, 0], [-1, 0]],
        -1 => [[0, -1], [0, 1]],
        -2 => [[1, 0], [-1, 0]],
        -3 => [[1, 0], [1, 0]],
        _ => [[0, 1], [0, 1]],
    };
    let zeta = c.zeta();
    let factor = if l.value() > 0 { zeta.conj() } else { zeta };
    SpinMatrix::from_integers(pattern).scale(&factor)
}

/// The eight coin matrices of one walk, indexed by [`StepIndex::ordinal`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionTable {
    chirality: Chirality,
    matrices: [SpinMatrix; 8],
}

impl TransitionTable {
    pub fn weyl(c: Chirality) -> Self {
        TransitionTable { chirality: c, matrices: StepIndex::ALL.map(|l| transition_matrix(l, c)) }
    }

    pub fn chirality(&self) -> Chirality {
        self.chirality
    }

    pub fn matrix(&self, l: StepIndex) -> &SpinMatrix {
        &self.matrices[l.ordinal()]
    }

    pub fn set(&mut self, l: StepIndex, m: SpinMatrix) {
        self.matrices[l.ordinal()] = m;
    }

    pub fn iter(&self) -> impl Iterator<Item = (StepIndex, &SpinMatrix)> {
        StepIndex::ALL.into_iter().map(move |l| (l, self.matrix(l)))
    }
}

/// Which of the two unitarity products failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UnitaritySide {
    /// `Σ A_{h'}† A_h` over `h - h' = g` (columns of `W` orthonormal).
    DaggerLeft,
    /// `Σ A_h A_{h'}†` over `h - h' = g` (rows of `W` orthonormal).
    DaggerRight,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitarityDefect {
    pub side: UnitaritySide,
    pub displacement: [i64; 3],
    pub sum: SpinMatrix,
}

/// First violated unitarity condition of `W = Σ_h T_h ⊗ A_h`, if any.
///
/// `W†W = Σ_g T_g ⊗ Σ_{h-h'=g} A_{h'}†A_h` must be the identity, which means
/// the `g = 0` block is `I` and every other block vanishes; likewise for `WW†`.
pub fn unitarity_defect(table: &TransitionTable) -> Option<UnitarityDefect> {
    for side in [UnitaritySide::DaggerLeft, UnitaritySide::DaggerRight] {
        let mut blocks: BTreeMap<[i64; 3], SpinMatrix> = BTreeMap::new();
        for (h, a) in table.iter() {
            for (hp, ap) in table.iter() {
                let (vh, vhp) = (step_vector(h), step_vector(hp));
                let g = [vh[0] - vhp[0], vh[1] - vhp[1], vh[2] - vhp[2]];
                let term = match side {
                    UnitaritySide::DaggerLeft => &ap.adjoint() * a,
                    UnitaritySide::DaggerRight => a * &ap.adjoint(),
                };
                let entry = blocks.entry(g).or_default();
                *entry = &*entry + &term;
            }
        }
        for (g, sum) in blocks {
            let expected = if g == [0, 0, 0] { SpinMatrix::identity() } else { SpinMatrix::zero() };
            if sum != expected {
                return Some(UnitarityDefect { side, displacement: g, sum });
            }
        }
    }
    None
}

/// True when the coin table of chirality `c` defines a unitary walk.
pub fn verify_unitarity(c: Chirality) -> bool {
    unitarity_defect(&TransitionTable::weyl(c)).is_none()
}

/// Factorized product `(-1)^sign · i^turns · B_{ab}` of `t` reduced coin matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProductForm {
    /// `+1` or `-1`.
    pub sign: i8,
    /// Power of `i` contributed by `(c·i)^{ι(w1 ⊕ w2 ⊕ w3)}`.
    pub quarter_turns: QuarterTurns,
    pub b_index: (u8, u8),
}

impl ProductForm {
    /// Sign and `i`-power combined.
    pub fn phase(&self) -> QuarterTurns {
        let s = if self.sign < 0 { QuarterTurns::new(2) } else { QuarterTurns::ZERO };
        self.quarter_turns + s
    }

    pub fn to_matrix(&self) -> SpinMatrix {
        b_matrix(self.b_index.0, self.b_index.1).rotate(self.phase())
    }
}

/// Product `Ã_t ⋯ Ã_1` of reduced coin matrices `Ã = A/ζ*` whose codes are the
/// columns of the three strings, in closed form.
pub fn closed_matrix_product(
    w1: &BitString,
    w2: &BitString,
    w3: &BitString,
    c: Chirality,
) -> Result<ProductForm, WalkError> {
    let t = w1.len();
    if t == 0 || w2.len() != t || w3.len() != t {
        return Err(WalkError::StringLengths(w1.len(), w2.len(), w3.len()));
    }
    let boundaries = w1.xor(&w1.shift());
    let sign_bits = boundaries.and(w2).iota();
    let turns = w1.xor(w2).xor(w3).iota();
    Ok(ProductForm {
        sign: if sign_bits.is_multiple_of(2) { 1 } else { -1 },
        quarter_turns: c.turns(turns),
        b_index: (w1.get(0) as u8, w2.get(t - 1) as u8),
    })
}

/// Word-level [`closed_matrix_product`] for strings of length `1..=64`.
/// Returns `(phase, a, b)` with the sign folded into the phase.
#[inline]
pub(crate) fn product_phase_word(t: u32, w1: u64, w2: u64, w3: u64, c: Chirality) -> (QuarterTurns, u8, u8) {
    let shifted = (w1 >> 1) | ((w1 & 1) << (t - 1));
    let sign_bits = ((w1 ^ shifted) & w2).count_ones() as i64;
    let turns = (w1 ^ w2 ^ w3).count_ones() as i64;
    let q = QuarterTurns::new(2 * sign_bits + c.sign() * turns);
    (q, (w1 & 1) as u8, ((w2 >> (t - 1)) & 1) as u8)
}

/// Reduced coin matrix `Ã_{b1b2b3} = (c·i)^{b1⊕b2⊕b3} B_{b1b2}` for a step.
pub fn reduced_transition_matrix(l: StepIndex, c: Chirality) -> SpinMatrix {
    let code = step_codec(l);
    b_matrix(code.b1, code.b2).rotate(c.turns(code.parity() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{decode, StepCode};

    fn l(v: i8) -> StepIndex {
        StepIndex::new(v).unwrap()
    }

    #[test]
    fn transition_examples() {
        let plus = Chirality::Plus;
        assert_eq!(
            transition_matrix(l(1), plus),
            SpinMatrix::from_integers([[1, 0], [1, 0]]).scale(&Amplitude::new(1, -1, 2))
        );
        assert_eq!(
            transition_matrix(l(-4), plus),
            SpinMatrix::from_integers([[0, 1], [0, 1]]).scale(&Amplitude::new(1, 1, 2))
        );
        for s in StepIndex::ALL {
            assert_eq!(transition_matrix(s, Chirality::Minus), transition_matrix(s, plus).conj());
        }
    }

    #[test]
    fn reduced_matrices_match_encoding() {
        for c in Chirality::BOTH {
            let inv_zeta_star = c.zeta().conj();
            for s in StepIndex::ALL {
                let expected = reduced_transition_matrix(s, c).scale(&inv_zeta_star);
                assert_eq!(transition_matrix(s, c), expected, "{s} {c}");
            }
        }
        // ζ/ζ* = c·i ties the phase to the chirality.
        for c in Chirality::BOTH {
            let z = c.zeta();
            assert_eq!(z, z.conj().rotate(c.turns(1)));
        }
    }

    #[test]
    fn b_matrix_products() {
        assert_eq!(b_matrix(0, 0), SpinMatrix::from_integers([[1, 0], [-1, 0]]));
        assert_eq!(b_matrix(1, 1), SpinMatrix::from_integers([[0, 1], [0, 1]]));
        assert_eq!(&b_matrix(0, 1) * &b_matrix(1, 0), b_matrix(1, 1).neg());
        for a in 0..2u8 {
            for b in 0..2u8 {
                for c in 0..2u8 {
                    for d in 0..2u8 {
                        let lhs = &b_matrix(a, b) * &b_matrix(c, d);
                        let mut rhs = b_matrix(c, b);
                        if (c ^ a) & (d ^ b) == 1 {
                            rhs = rhs.neg();
                        }
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn unitarity_holds_for_both_chiralities() {
        assert!(verify_unitarity(Chirality::Plus));
        assert!(verify_unitarity(Chirality::Minus));
    }

    #[test]
    fn corrupted_tables_are_not_unitary() {
        let mut table = TransitionTable::weyl(Chirality::Plus);
        table.set(l(1), SpinMatrix::zero());
        let defect = unitarity_defect(&table).unwrap();
        let expected = if defect.displacement == [0, 0, 0] { SpinMatrix::identity() } else { SpinMatrix::zero() };
        assert_ne!(defect.sum, expected);
        assert!(StepIndex::ALL.iter().any(|h| {
            let v = h.vector();
            let g = defect.displacement;
            StepIndex::ALL.iter().any(|hp| {
                let w = hp.vector();
                g == [v[0] - w[0], v[1] - w[1], v[2] - w[2]]
            })
        }));

        let mut table = TransitionTable::weyl(Chirality::Plus);
        let mut m = table.matrix(l(3)).clone();
        m[(0, 1)] = -&m[(0, 1)];
        table.set(l(3), m);
        assert!(unitarity_defect(&table).is_some());
    }

    fn literal(w1: &BitString, w2: &BitString, w3: &BitString, c: Chirality) -> SpinMatrix {
        let mut acc = SpinMatrix::identity();
        for k in 0..w1.len() {
            let code = StepCode::new(w1.get(k) as u8, w2.get(k) as u8, w3.get(k) as u8).unwrap();
            acc = &reduced_transition_matrix(decode(code), c) * &acc;
        }
        acc
    }

    #[test]
    fn product_examples() {
        let s = |x: &str| x.parse::<BitString>().unwrap();
        let f = closed_matrix_product(&s("0"), &s("1"), &s("1"), Chirality::Plus).unwrap();
        assert_eq!((f.sign, f.quarter_turns, f.b_index), (1, QuarterTurns::ZERO, (0, 1)));

        let f = closed_matrix_product(&s("00"), &s("11"), &s("11"), Chirality::Plus).unwrap();
        assert_eq!((f.sign, f.quarter_turns, f.b_index), (1, QuarterTurns::ZERO, (0, 1)));
        assert_eq!(f.to_matrix(), &b_matrix(0, 1) * &b_matrix(0, 1));

        assert!(closed_matrix_product(&s("00"), &s("1"), &s("11"), Chirality::Plus).is_err());
        let e = BitString::zeros(0);
        assert!(closed_matrix_product(&e, &e, &e, Chirality::Plus).is_err());
    }

    #[test]
    fn product_form_exhaustive_small() {
        for t in 1..=4usize {
            for c in Chirality::BOTH {
                for bits in 0u64..(1 << (3 * t)) {
                    let w1 = BitString::from_word(t, bits & ((1 << t) - 1));
                    let w2 = BitString::from_word(t, (bits >> t) & ((1 << t) - 1));
                    let w3 = BitString::from_word(t, bits >> (2 * t));
                    let f = closed_matrix_product(&w1, &w2, &w3, c).unwrap();
                    assert_eq!(f.to_matrix(), literal(&w1, &w2, &w3, c));
                    let (q, a, b) = product_phase_word(
                        t as u32,
                        w1.as_word().unwrap(),
                        w2.as_word().unwrap(),
                        w3.as_word().unwrap(),
                        c,
                    );
                    assert_eq!((q, (a, b)), (f.phase(), f.b_index));
                }
            }
        }
    }
}
