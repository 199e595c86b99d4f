//! Geometry of the body-centered-cubic lattice.
//!
//! Sites are integer triples whose coordinates share one parity, so the vertex
//! set is `2Z³ ∪ (2Z³ + (1,1,1))`. The eight generators are the diagonal
//! vectors `±h_1 … ±h_4`, each carrying a three-bit code that drives all of the
//! string combinatorics in [`crate::combinatorics`].

use std::fmt;
use std::ops::{Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::LatticeError;

/// A lattice site. All three coordinates have the same parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 3]", into = "[i64; 3]")]
pub struct Site([i64; 3]);

impl Site {
    pub const ORIGIN: Site = Site([0, 0, 0]);

    pub fn new(x1: i64, x2: i64, x3: i64) -> Result<Self, LatticeError> {
        Self::try_from([x1, x2, x3])
    }

    pub fn coords(&self) -> [i64; 3] {
        self.0
    }

    /// 0 for the even sublattice, 1 for the odd one.
    pub fn parity(&self) -> u8 {
        self.0[0].rem_euclid(2) as u8
    }

    /// Translate by an integer vector. The vector must keep the parity
    /// invariant, which holds for any displacement between two sites.
    pub fn offset(&self, d: [i64; 3]) -> Result<Self, LatticeError> {
        Self::new(self.0[0] + d[0], self.0[1] + d[1], self.0[2] + d[2])
    }

    /// `self - other` as a plain integer vector.
    pub fn displacement_from(&self, other: &Site) -> [i64; 3] {
        [self.0[0] - other.0[0], self.0[1] - other.0[1], self.0[2] - other.0[2]]
    }

    pub(crate) fn shifted_unchecked(&self, d: [i64; 3]) -> Site {
        Site([self.0[0] + d[0], self.0[1] + d[1], self.0[2] + d[2]])
    }
}

impl TryFrom<[i64; 3]> for Site {
    type Error = LatticeError;

    fn try_from(x: [i64; 3]) -> Result<Self, Self::Error> {
        let p = x[0].rem_euclid(2);
        if x[1].rem_euclid(2) != p || x[2].rem_euclid(2) != p {
            return Err(LatticeError::MixedParity(x));
        }
        Ok(Site(x))
    }
}

impl From<Site> for [i64; 3] {
    fn from(s: Site) -> Self {
        s.0
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for Site {
    type Err = LatticeError;

    /// Parses `x1,x2,x3` with optional whitespace.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(LatticeError::Parse(s.to_string()));
        }
        let mut x = [0i64; 3];
        for (slot, part) in x.iter_mut().zip(&parts) {
            *slot = part.parse().map_err(|_| LatticeError::Parse(s.to_string()))?;
        }
        Site::try_from(x)
    }
}

/// One of the eight generators `h_{±1} … h_{±4}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepIndex(i8);

impl StepIndex {
    /// All generators in table order: `h_1..h_4` then `h_{-1}..h_{-4}`.
    pub const ALL: [StepIndex; 8] = [
        StepIndex(1),
        StepIndex(2),
        StepIndex(3),
        StepIndex(4),
        StepIndex(-1),
        StepIndex(-2),
        StepIndex(-3),
        StepIndex(-4),
    ];

    pub fn new(l: i8) -> Result<Self, LatticeError> {
        if l == 0 || l.unsigned_abs() > 4 {
            return Err(LatticeError::InvalidStep(l));
        }
        Ok(StepIndex(l))
    }

    pub fn value(self) -> i8 {
        self.0
    }

    /// Position of this generator in [`StepIndex::ALL`].
    pub fn ordinal(self) -> usize {
        let base = (self.0.unsigned_abs() - 1) as usize;
        if self.0 > 0 {
            base
        } else {
            base + 4
        }
    }

    pub fn inverse(self) -> StepIndex {
        StepIndex(-self.0)
    }

    pub fn vector(self) -> [i64; 3] {
        step_vector(self)
    }

    pub fn code(self) -> StepCode {
        step_codec(self)
    }
}

impl Neg for StepIndex {
    type Output = StepIndex;

    fn neg(self) -> StepIndex {
        self.inverse()
    }
}

impl fmt::Display for StepIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.0)
    }
}

const GENERATORS: [[i64; 3]; 4] = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]];

/// Generator vector `h_l`, with `h_{-l} = -h_l`.
pub fn step_vector(l: StepIndex) -> [i64; 3] {
    let h = GENERATORS[(l.0.unsigned_abs() - 1) as usize];
    if l.0 > 0 {
        h
    } else {
        [-h[0], -h[1], -h[2]]
    }
}

/// Three-bit generator code `b1 b2 b3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StepCode {
    pub b1: u8,
    pub b2: u8,
    pub b3: u8,
}

impl StepCode {
    pub fn new(b1: u8, b2: u8, b3: u8) -> Result<Self, LatticeError> {
        if b1 > 1 || b2 > 1 || b3 > 1 {
            return Err(LatticeError::InvalidCode([b1, b2, b3]));
        }
        Ok(StepCode { b1, b2, b3 })
    }

    pub fn bits(&self) -> [u8; 3] {
        [self.b1, self.b2, self.b3]
    }

    /// `b1 ⊕ b2 ⊕ b3`.
    pub fn parity(&self) -> u8 {
        self.b1 ^ self.b2 ^ self.b3
    }

    fn packed(&self) -> usize {
        ((self.b1 << 2) | (self.b2 << 1) | self.b3) as usize
    }

    pub fn decode(self) -> StepIndex {
        decode(self)
    }
}

impl fmt::Display for StepCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.b1, self.b2, self.b3)
    }
}

// Indexed by `StepIndex::ordinal`.
const CODES: [[u8; 3]; 8] = [
    [0, 1, 1], // h1
    [1, 1, 0], // h2
    [1, 0, 1], // h3
    [0, 0, 0], // h4
    [1, 0, 0], // h-1
    [0, 0, 1], // h-2
    [0, 1, 0], // h-3
    [1, 1, 1], // h-4
];

// Indexed by the packed code b1b2b3.
const DECODE: [i8; 8] = [4, -2, -3, 1, -1, 3, 2, -4];

pub fn step_codec(l: StepIndex) -> StepCode {
    let [b1, b2, b3] = CODES[l.ordinal()];
    StepCode { b1, b2, b3 }
}

pub fn decode(code: StepCode) -> StepIndex {
    StepIndex(DECODE[code.packed()])
}

/// Step multiplicities `n[l]` of a path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct StepCountQuadruple {
    counts: [u64; 8],
}

impl StepCountQuadruple {
    pub fn count(&self, l: StepIndex) -> u64 {
        self.counts[l.ordinal()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `Σ_l (n_l - n_{-l}) h_l`.
    pub fn displacement(&self) -> [i64; 3] {
        let mut d = [0i64; 3];
        for l in StepIndex::ALL {
            let h = step_vector(l);
            let n = self.count(l) as i64;
            for i in 0..3 {
                d[i] += n * h[i];
            }
        }
        d
    }

    fn record(&mut self, l: StepIndex) {
        self.counts[l.ordinal()] += 1;
    }
}

/// Walk `steps` from `start`, returning the endpoint and the step multiplicities.
pub fn path_endpoint<I>(start: Site, steps: I) -> (Site, StepCountQuadruple)
where
    I: IntoIterator<Item = StepIndex>,
{
    let mut counts = StepCountQuadruple::default();
    let mut x = start.coords();
    for l in steps {
        let h = step_vector(l);
        for i in 0..3 {
            x[i] += h[i];
        }
        counts.record(l);
    }
    (Site(x), counts)
}

/// Set-bit counts `(K1, K2, K3)` of the three code strings of any length-`t`
/// path between two sites. The strings carry the codes of the matrices that
/// get multiplied, i.e. of the inverse steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StringCounts {
    pub t: u64,
    pub k: [u64; 3],
}

impl StringCounts {
    pub fn k1(&self) -> u64 {
        self.k[0]
    }
    pub fn k2(&self) -> u64 {
        self.k[1]
    }
    pub fn k3(&self) -> u64 {
        self.k[2]
    }
}

/// `None` when `from` lies outside the time-`t` past cone of `to`.
pub fn string_counts(from: &Site, to: &Site, t: u64) -> Option<StringCounts> {
    let d = to.displacement_from(from);
    let t_signed = i64::try_from(t).ok()?;
    let half = |num: i64| -> Option<u64> {
        if num < 0 || num % 2 != 0 {
            return None;
        }
        let k = (num / 2) as u64;
        (k <= t).then_some(k)
    };
    Some(StringCounts { t, k: [half(t_signed + d[2])?, half(t_signed - d[0])?, half(t_signed - d[1])?] })
}

/// Displacements `x - x'` reachable in exactly `t` steps, in lexicographic order.
pub fn cone_displacements(t: u64) -> Vec<[i64; 3]> {
    let t = t as i64;
    let range: Vec<i64> = (0..=t).map(|j| -t + 2 * j).collect();
    let mut out = Vec::with_capacity(range.len().pow(3));
    for &a in &range {
        for &b in &range {
            for &c in &range {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Sites `x'` from which `x` is reachable in exactly `t` steps, sorted.
pub fn past_causal_cone(x: &Site, t: u64) -> Vec<Site> {
    let mut cone: Vec<Site> =
        cone_displacements(t).into_iter().map(|d| x.shifted_unchecked([-d[0], -d[1], -d[2]])).collect();
    cone.sort();
    cone
}

impl Sub for Site {
    type Output = [i64; 3];

    fn sub(self, rhs: Site) -> [i64; 3] {
        self.displacement_from(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn l(v: i8) -> StepIndex {
        StepIndex::new(v).unwrap()
    }

    fn site(x: [i64; 3]) -> Site {
        Site::try_from(x).unwrap()
    }

    #[test]
    fn generator_vectors() {
        assert_eq!(step_vector(l(1)), [1, 1, 1]);
        assert_eq!(step_vector(l(4)), [-1, -1, 1]);
        assert_eq!(step_vector(l(-2)), [-1, 1, 1]);
        for s in StepIndex::ALL {
            let h = step_vector(s);
            let g = step_vector(-s);
            assert_eq!(h.map(|v| -v), g);
        }
    }

    #[test]
    fn codec_table_and_bijection() {
        assert_eq!(step_codec(l(1)).to_string(), "011");
        assert_eq!(step_codec(l(-4)).to_string(), "111");
        assert_eq!(decode(StepCode::new(0, 0, 0).unwrap()), l(4));
        let mut seen = BTreeSet::new();
        for s in StepIndex::ALL {
            let c = step_codec(s);
            assert_eq!(decode(c), s);
            seen.insert(c.packed());
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(StepIndex::new(0).is_err());
        assert!(StepIndex::new(5).is_err());
        assert!(StepCode::new(2, 0, 0).is_err());
        assert!(matches!(Site::new(1, 0, 0), Err(LatticeError::MixedParity(_))));
        assert!(Site::new(-1, 1, 3).is_ok());
        assert!("1,2".parse::<Site>().is_err());
        assert_eq!("-1, -1,1".parse::<Site>().unwrap(), site([-1, -1, 1]));
    }

    #[test]
    fn endpoint_examples() {
        let (x, n) = path_endpoint(Site::ORIGIN, []);
        assert_eq!(x, Site::ORIGIN);
        assert_eq!(n.total(), 0);

        let (x, n) = path_endpoint(Site::ORIGIN, [l(1), l(1)]);
        assert_eq!(x, site([2, 2, 2]));
        assert_eq!(n.count(l(1)), 2);

        let (x, n) = path_endpoint(Site::ORIGIN, [l(1), l(-1)]);
        assert_eq!(x, Site::ORIGIN);
        assert_eq!((n.count(l(1)), n.count(l(-1))), (1, 1));
        assert_eq!(n.displacement(), [0, 0, 0]);
    }

    #[test]
    fn string_count_examples() {
        let k = string_counts(&Site::ORIGIN, &Site::ORIGIN, 2).unwrap();
        assert_eq!(k.k, [1, 1, 1]);
        let k = string_counts(&Site::ORIGIN, &site([3, 3, 3]), 3).unwrap();
        assert_eq!(k.k, [3, 0, 0]);
        assert!(string_counts(&Site::ORIGIN, &site([2, 0, 0]), 1).is_none());
        assert!(string_counts(&Site::ORIGIN, &site([4, 0, 0]), 2).is_none());
        assert!(string_counts(&Site::ORIGIN, &site([1, 1, 1]), 2).is_none());
    }

    #[test]
    fn cone_examples() {
        assert_eq!(past_causal_cone(&Site::ORIGIN, 0), vec![Site::ORIGIN]);
        let one: BTreeSet<_> = past_causal_cone(&Site::ORIGIN, 1).into_iter().collect();
        let expected: BTreeSet<_> = StepIndex::ALL.iter().map(|&s| site(step_vector(s).map(|v| -v))).collect();
        assert_eq!(one, expected);

        // Endpoints of all 64 two-step paths ending at the origin.
        let mut two = BTreeSet::new();
        for a in StepIndex::ALL {
            for b in StepIndex::ALL {
                let (end, _) = path_endpoint(Site::ORIGIN, [a, b]);
                two.insert(site(end.coords().map(|v| -v)));
            }
        }
        assert_eq!(two.len(), 27);
        let cone: BTreeSet<_> = past_causal_cone(&Site::ORIGIN, 2).into_iter().collect();
        assert_eq!(cone, two);
    }

    #[test]
    fn cone_matches_string_counts_on_a_box() {
        let x = site([1, -1, 3]);
        for t in 0..=8u64 {
            let cone: BTreeSet<_> = past_causal_cone(&x, t).into_iter().collect();
            assert_eq!(cone.len() as u64, (t + 1).pow(3));
            let r = t as i64 + 2;
            for a in -r..=r {
                for b in -r..=r {
                    for c in -r..=r {
                        let Ok(xp) = x.offset([a, b, c]) else { continue };
                        assert_eq!(string_counts(&xp, &x, t).is_some(), cone.contains(&xp), "t={t} x'={xp}");
                    }
                }
            }
        }
    }

    fn all_sequences(t: usize) -> Vec<Vec<StepIndex>> {
        let mut out = vec![vec![]];
        for _ in 0..t {
            out = out
                .into_iter()
                .flat_map(|seq| {
                    StepIndex::ALL.into_iter().map(move |s| {
                        let mut next = seq.clone();
                        next.push(s);
                        next
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn inverse_codes_count_string_bits() {
        let start = site([0, 2, -2]);
        for t in 0..=6usize {
            for seq in all_sequences(t) {
                let (end, counts) = path_endpoint(start, seq.iter().copied());
                let d = end.displacement_from(&start);
                assert_eq!(counts.displacement(), d);
                assert_eq!(counts.total(), t as u64);
                assert!(d.iter().all(|x| x.rem_euclid(2) == (t % 2) as i64));

                let k = string_counts(&start, &end, t as u64).expect("endpoint is in the cone");
                let mut bits = [0u64; 3];
                for s in &seq {
                    let c = step_codec(s.inverse()).bits();
                    for j in 0..3 {
                        bits[j] += c[j] as u64;
                    }
                }
                assert_eq!(bits, k.k);

                // Forward codes count the complementary signs.
                let mut fwd = [0u64; 3];
                for s in &seq {
                    let c = step_codec(*s).bits();
                    for j in 0..3 {
                        fwd[j] += c[j] as u64;
                    }
                }
                let t = t as i64;
                assert_eq!(fwd[0] as i64, (t - d[2]) / 2);
                assert_eq!(fwd[1] as i64, (t + d[0]) / 2);
                assert_eq!(fwd[2] as i64, (t + d[1]) / 2);
            }
        }
    }
}
