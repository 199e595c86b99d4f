use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul};

use super::amplitude::{Amplitude, QuarterTurns};

/// Two-component coin spinor `(up, down)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Spinor(pub [Amplitude; 2]);

impl Spinor {
    pub fn new(up: Amplitude, down: Amplitude) -> Self {
        Spinor([up, down])
    }

    pub fn up() -> Self {
        Spinor([Amplitude::one(), Amplitude::zero()])
    }

    pub fn down() -> Self {
        Spinor([Amplitude::zero(), Amplitude::one()])
    }

    /// Basis spinor `e_j`.
    pub fn basis(j: usize) -> Self {
        if j == 0 {
            Self::up()
        } else {
            Self::down()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Amplitude::is_zero)
    }

    pub fn norm_sqr(&self) -> Amplitude {
        &self.0[0].norm_sqr() + &self.0[1].norm_sqr()
    }

    pub fn conj(&self) -> Self {
        Spinor([self.0[0].conj(), self.0[1].conj()])
    }
}

impl Add for &Spinor {
    type Output = Spinor;

    fn add(self, rhs: &Spinor) -> Spinor {
        Spinor([&self.0[0] + &rhs.0[0], &self.0[1] + &rhs.0[1]])
    }
}

/// A 2×2 matrix of exact amplitudes.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct SpinMatrix(pub [[Amplitude; 2]; 2]);

impl SpinMatrix {
    pub fn zero() -> Self {
        SpinMatrix::default()
    }

    pub fn identity() -> Self {
        Self::from_integers([[1, 0], [0, 1]])
    }

    pub fn from_integers(m: [[i64; 2]; 2]) -> Self {
        SpinMatrix(m.map(|row| row.map(Amplitude::from)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(Amplitude::is_zero)
    }

    pub fn scale(&self, s: &Amplitude) -> Self {
        SpinMatrix(self.0.clone().map(|row| row.map(|a| &a * s)))
    }

    pub fn rotate(&self, q: QuarterTurns) -> Self {
        SpinMatrix(self.0.clone().map(|row| row.map(|a| a.rotate(q))))
    }

    pub fn neg(&self) -> Self {
        SpinMatrix(self.0.clone().map(|row| row.map(|a| -a)))
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        SpinMatrix(self.0.clone().map(|row| row.map(|a| a.conj())))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        SpinMatrix([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn apply(&self, v: &Spinor) -> Spinor {
        let m = &self.0;
        Spinor([&(&m[0][0] * &v.0[0]) + &(&m[0][1] * &v.0[1]), &(&m[1][0] * &v.0[0]) + &(&m[1][1] * &v.0[1])])
    }

    pub fn column(&self, j: usize) -> Spinor {
        Spinor([self.0[0][j].clone(), self.0[1][j].clone()])
    }

    pub fn from_columns(c0: &Spinor, c1: &Spinor) -> Self {
        SpinMatrix([[c0.0[0].clone(), c1.0[0].clone()], [c0.0[1].clone(), c1.0[1].clone()]])
    }

    /// Largest numerator size among the entries, in bits.
    pub fn bits(&self) -> u64 {
        self.0.iter().flatten().map(Amplitude::bits).max().unwrap_or(0)
    }
}

impl Index<(usize, usize)> for SpinMatrix {
    type Output = Amplitude;

    fn index(&self, (i, j): (usize, usize)) -> &Amplitude {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for SpinMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Amplitude {
        &mut self.0[i][j]
    }
}

impl Add for &SpinMatrix {
    type Output = SpinMatrix;

    fn add(self, rhs: &SpinMatrix) -> SpinMatrix {
        let mut out = SpinMatrix::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = &self.0[i][j] + &rhs.0[i][j];
            }
        }
        out
    }
}

impl Mul for &SpinMatrix {
    type Output = SpinMatrix;

    fn mul(self, rhs: &SpinMatrix) -> SpinMatrix {
        let mut out = SpinMatrix::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = &(&self.0[i][0] * &rhs.0[0][j]) + &(&self.0[i][1] * &rhs.0[1][j]);
            }
        }
        out
    }
}

impl fmt::Debug for SpinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1])
    }
}
