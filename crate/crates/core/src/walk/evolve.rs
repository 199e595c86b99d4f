//! Step-operator evolution.
//!
//! Internally every amplitude of a state shares one power-of-two denominator,
//! so a step is pure Gaussian-integer arithmetic: the coin table is scaled to
//! integer entries and the shared exponent grows by the scale. Numerators run
//! in `i128` while a magnitude bound proves the next step cannot overflow,
//! after which the evolution continues in `BigInt`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rustc_hash::FxHashMap;

use crate::lattice::{step_vector, Site, StepIndex};

use super::amplitude::Amplitude;
use super::matrix::Spinor;
use super::state::WalkState;
use super::{Chirality, TransitionTable};

trait Lane: Clone + Sized {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn from_big(v: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn trailing_zeros(&self) -> Option<u64>;
    fn shr_assign(&mut self, k: u32);
    /// Bit length of `|self|`.
    fn bits(&self) -> u64;
    fn add_square_to(&self, acc: &mut SquareSum);
    /// `m * v` over the Gaussian integers. Callers guarantee the result fits.
    fn gauss_mul(m: (i64, i64), v: &[Self; 2]) -> [Self; 2];
    /// `acc ± v`. Callers guarantee the result fits.
    fn add_signed(acc: &mut [Self; 2], v: &[Self; 2], negate: bool);
}

/// Largest bit length an `i128` lane may reach after a step.
const SMALL_LANE_BITS: u64 = 126;

impl Lane for i128 {
    fn zero() -> Self {
        0
    }

    fn is_zero(&self) -> bool {
        *self == 0
    }

    fn from_big(v: &BigInt) -> Option<Self> {
        v.to_i128()
    }

    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }

    fn trailing_zeros(&self) -> Option<u64> {
        (*self != 0).then(|| i128::trailing_zeros(*self) as u64)
    }

    fn shr_assign(&mut self, k: u32) {
        *self >>= k;
    }

    fn bits(&self) -> u64 {
        128 - self.unsigned_abs().leading_zeros() as u64
    }

    fn add_square_to(&self, acc: &mut SquareSum) {
        let v = self.unsigned_abs();
        let (hi, lo) = ((v >> 64) as u64, v as u64);
        let wide = |a: u64, b: u64| a as u128 * b as u128;
        acc.add_at(wide(lo, lo), 0);
        acc.add_at(wide(hi, lo), 1);
        acc.add_at(wide(hi, lo), 1);
        acc.add_at(wide(hi, hi), 2);
    }

    #[inline]
    fn gauss_mul(m: (i64, i64), v: &[Self; 2]) -> [Self; 2] {
        // Scaled Weyl coins have unit parts; avoid wide multiplies for them.
        #[inline(always)]
        fn times(m: i64, v: i128) -> i128 {
            match m {
                0 => 0,
                1 => v,
                -1 => -v,
                _ => m as i128 * v,
            }
        }
        [times(m.0, v[0]) - times(m.1, v[1]), times(m.0, v[1]) + times(m.1, v[0])]
    }

    #[inline]
    fn add_signed(acc: &mut [Self; 2], v: &[Self; 2], negate: bool) {
        if negate {
            acc[0] -= v[0];
            acc[1] -= v[1];
        } else {
            acc[0] += v[0];
            acc[1] += v[1];
        }
    }
}

impl Lane for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn from_big(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }

    fn to_big(&self) -> BigInt {
        self.clone()
    }

    fn trailing_zeros(&self) -> Option<u64> {
        BigInt::trailing_zeros(self)
    }

    fn shr_assign(&mut self, k: u32) {
        *self >>= k;
    }

    fn bits(&self) -> u64 {
        BigInt::bits(self)
    }

    fn add_square_to(&self, acc: &mut SquareSum) {
        acc.big += self * self;
    }

    fn gauss_mul(m: (i64, i64), v: &[Self; 2]) -> [Self; 2] {
        [&v[0] * m.0 - &v[1] * m.1, &v[1] * m.0 + &v[0] * m.1]
    }

    fn add_signed(acc: &mut [Self; 2], v: &[Self; 2], negate: bool) {
        if negate {
            acc[0] -= &v[0];
            acc[1] -= &v[1];
        } else {
            acc[0] += &v[0];
            acc[1] += &v[1];
        }
    }
}

/// Exact sum of squares: 64-bit limbs for `i128` lanes plus a `BigInt` part.
#[derive(Default)]
struct SquareSum {
    limbs: [u64; 6],
    big: BigInt,
}

impl SquareSum {
    /// Adds `v · 2^(64·limb)`.
    fn add_at(&mut self, v: u128, limb: usize) {
        let mut carry = v;
        let mut k = limb;
        while carry != 0 {
            let sum = self.limbs[k] as u128 + (carry as u64) as u128;
            self.limbs[k] = sum as u64;
            carry = (carry >> 64) + (sum >> 64);
            k += 1;
        }
    }

    fn total(self) -> BigInt {
        let small = self.limbs.iter().rev().fold(<BigInt as Zero>::zero(), |acc, &l| (acc << 64u32) + BigInt::from(l));
        small + self.big
    }
}

/// Spinor numerators: `[up.re, up.im]`, `[down.re, down.im]`.
type LaneSpinor<T> = [[T; 2]; 2];

struct ScaledMove {
    offset: [i64; 3],
    /// Nonzero entries as `(row, product, negate)`: the entry times the
    /// source spinor component is `±products[product]`.
    terms: Vec<(usize, usize, bool)>,
}

struct ScaledTable {
    shift: u32,
    /// Bound on the bit growth of any output component in one step.
    growth_bits: u64,
    /// Distinct `(gaussian, column)` products formed once per source site,
    /// with gaussians normalized up to sign.
    products: Vec<((i64, i64), usize)>,
    moves: Vec<ScaledMove>,
}

/// `g` or `-g`, whichever has its first nonzero part positive, and whether
/// `g` was negated.
fn normalize_sign(g: (i64, i64)) -> ((i64, i64), bool) {
    if g.0 < 0 || (g.0 == 0 && g.1 < 0) {
        ((-g.0, -g.1), true)
    } else {
        (g, false)
    }
}

impl ScaledTable {
    fn new(table: &TransitionTable) -> Self {
        let shift = table
            .iter()
            .flat_map(|(_, m)| m.0.iter().flatten().map(Amplitude::log2_den).collect::<Vec<_>>())
            .max()
            .unwrap_or(0);
        let mut products: Vec<((i64, i64), usize)> = Vec::new();
        let mut growth: u64 = 0;
        let moves = StepIndex::ALL
            .iter()
            .map(|&l| {
                let h = step_vector(l);
                let m = table.matrix(l);
                let mut terms = Vec::new();
                for i in 0..2 {
                    for j in 0..2 {
                        let a = m[(i, j)].mul_pow2(shift);
                        debug_assert_eq!(a.log2_den(), 0);
                        if a.is_zero() {
                            continue;
                        }
                        let g = (
                            a.re().to_i64().expect("coin entries fit in i64 after scaling"),
                            a.im().to_i64().expect("coin entries fit in i64 after scaling"),
                        );
                        // Each target receives at most one contribution per move.
                        growth += g.0.unsigned_abs() + g.1.unsigned_abs();
                        let (norm, negate) = normalize_sign(g);
                        let p = products.iter().position(|&x| x == (norm, j)).unwrap_or_else(|| {
                            products.push((norm, j));
                            products.len() - 1
                        });
                        terms.push((i, p, negate));
                    }
                }
                ScaledMove { offset: [-h[0], -h[1], -h[2]], terms }
            })
            .collect();
        ScaledTable { shift, growth_bits: 64 - growth.leading_zeros() as u64, products, moves }
    }

    fn form_products<T: Lane>(&self, spin: &LaneSpinor<T>, out: &mut Vec<[T; 2]>) {
        out.clear();
        out.extend(self.products.iter().map(|&(g, j)| T::gauss_mul(g, &spin[j])));
    }
}

fn zero_spinor<T: Lane>() -> LaneSpinor<T> {
    [[T::zero(), T::zero()], [T::zero(), T::zero()]]
}

fn spinor_is_zero<T: Lane>(s: &LaneSpinor<T>) -> bool {
    s.iter().flatten().all(Lane::is_zero)
}

/// Spinors on the box `origin + 2·[0, dims)`, row-major.
#[derive(Clone)]
struct Dense<T> {
    origin: [i64; 3],
    dims: [usize; 3],
    cells: Vec<LaneSpinor<T>>,
}

/// A sparse support switches to a dense box once the box holds at most this
/// many cells per populated site.
const DENSE_FILL: usize = 16;
const DENSE_MIN_CELLS: usize = 1 << 12;

impl<T: Lane> Dense<T> {
    /// Dense box around `sites`, or `None` when the box would be too sparse.
    fn try_from_sparse(sites: &FxHashMap<Site, LaneSpinor<T>>) -> Option<Self> {
        let first = sites.keys().next()?.coords();
        let (mut lo, mut hi) = (first, first);
        for s in sites.keys() {
            let c = s.coords();
            for k in 0..3 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        let mut dims = [0usize; 3];
        let mut volume = 1usize;
        for k in 0..3 {
            let span = usize::try_from((hi[k] - lo[k]) / 2 + 1).ok()?;
            dims[k] = span;
            volume = volume.checked_mul(span + 1)?;
        }
        if volume > DENSE_MIN_CELLS.max(DENSE_FILL * sites.len()) {
            return None;
        }
        let mut grid = Dense { origin: lo, dims, cells: vec![zero_spinor(); dims[0] * dims[1] * dims[2]] };
        for (s, v) in sites {
            let i = grid.index(s);
            grid.cells[i] = v.clone();
        }
        Some(grid)
    }

    fn index(&self, s: &Site) -> usize {
        let c = s.coords();
        let i: [usize; 3] = std::array::from_fn(|k| ((c[k] - self.origin[k]) / 2) as usize);
        (i[0] * self.dims[1] + i[1]) * self.dims[2] + i[2]
    }

    fn site(&self, idx: usize) -> Site {
        let i2 = idx % self.dims[2];
        let i1 = (idx / self.dims[2]) % self.dims[1];
        let i0 = idx / (self.dims[1] * self.dims[2]);
        let o = self.origin;
        Site::ORIGIN.shifted_unchecked([o[0] + 2 * i0 as i64, o[1] + 2 * i1 as i64, o[2] + 2 * i2 as i64])
    }

    /// Scatter into the box grown by one cell per axis; move offsets
    /// `-h ∈ {±1}³` land on cell `i + (1 - h)/2`. Works a row at a time so
    /// every term is a slice-wide add.
    fn step(&self, table: &ScaledTable) -> Self {
        let dims = self.dims.map(|d| d + 1);
        let shifts: Vec<usize> = table
            .moves
            .iter()
            .map(|m| {
                let d = m.offset.map(|o| ((1 + o) / 2) as usize);
                (d[0] * dims[1] + d[1]) * dims[2] + d[2]
            })
            .collect();
        let mut cells = vec![zero_spinor::<T>(); dims[0] * dims[1] * dims[2]];
        let [n0, n1, n2] = self.dims;
        let mut prods: Vec<Vec<[T; 2]>> = vec![vec![[T::zero(), T::zero()]; n2]; table.products.len()];
        for i0 in 0..n0 {
            for i1 in 0..n1 {
                let src_row = (i0 * n1 + i1) * n2;
                let src = &self.cells[src_row..src_row + n2];
                if src.iter().all(spinor_is_zero) {
                    continue;
                }
                for (row, &(g, j)) in prods.iter_mut().zip(&table.products) {
                    for (out, spin) in row.iter_mut().zip(src) {
                        *out = T::gauss_mul(g, &spin[j]);
                    }
                }
                let dst_row = (i0 * dims[1] + i1) * dims[2];
                for (mv, shift) in table.moves.iter().zip(&shifts) {
                    let dst = &mut cells[dst_row + shift..dst_row + shift + n2];
                    for &(i, p, negate) in &mv.terms {
                        for (out, v) in dst.iter_mut().zip(&prods[p]) {
                            T::add_signed(&mut out[i], v, negate);
                        }
                    }
                }
            }
        }
        Dense { origin: self.origin.map(|o| o - 1), dims, cells }
    }
}

#[derive(Clone)]
enum Cells<T> {
    Sparse(FxHashMap<Site, LaneSpinor<T>>),
    Dense(Dense<T>),
}

impl<T: Lane> Cells<T> {
    fn for_each(&self, mut f: impl FnMut(&T)) {
        let mut visit = |s: &LaneSpinor<T>| s.iter().flatten().for_each(&mut f);
        match self {
            Cells::Sparse(m) => m.values().for_each(&mut visit),
            Cells::Dense(d) => d.cells.iter().for_each(&mut visit),
        }
    }

    fn for_each_mut(&mut self, mut f: impl FnMut(&mut T)) {
        let mut visit = |s: &mut LaneSpinor<T>| s.iter_mut().flatten().for_each(&mut f);
        match self {
            Cells::Sparse(m) => m.values_mut().for_each(&mut visit),
            Cells::Dense(d) => d.cells.iter_mut().for_each(&mut visit),
        }
    }

    /// Populated sites with their spinors.
    fn entries(&self) -> Box<dyn Iterator<Item = (Site, &LaneSpinor<T>)> + '_> {
        match self {
            Cells::Sparse(m) => Box::new(m.iter().map(|(s, v)| (*s, v))),
            Cells::Dense(d) => {
                Box::new(d.cells.iter().enumerate().filter(|(_, v)| !spinor_is_zero(v)).map(|(i, v)| (d.site(i), v)))
            }
        }
    }

    fn map<U: Lane>(&self, f: impl Fn(&T) -> U) -> Cells<U> {
        let conv =
            |v: &LaneSpinor<T>| -> LaneSpinor<U> { std::array::from_fn(|i| std::array::from_fn(|j| f(&v[i][j]))) };
        match self {
            Cells::Sparse(m) => Cells::Sparse(m.iter().map(|(k, v)| (*k, conv(v))).collect()),
            Cells::Dense(d) => {
                Cells::Dense(Dense { origin: d.origin, dims: d.dims, cells: d.cells.iter().map(conv).collect() })
            }
        }
    }
}

#[derive(Clone)]
struct Scaled<T> {
    log2_den: u32,
    /// Largest bit length among the numerators.
    max_bits: u64,
    cells: Cells<T>,
}

impl<T: Lane> Scaled<T> {
    fn from_state(state: &WalkState) -> Option<Self> {
        let log2_den = state.iter().flat_map(|(_, s)| s.0.iter().map(Amplitude::log2_den)).max().unwrap_or(0);
        let mut sites = FxHashMap::default();
        for (site, spinor) in state {
            let mut lanes: LaneSpinor<T> = zero_spinor();
            for (slot, a) in lanes.iter_mut().zip(&spinor.0) {
                let k = log2_den - a.log2_den();
                slot[0] = T::from_big(&(a.re() << k))?;
                slot[1] = T::from_big(&(a.im() << k))?;
            }
            sites.insert(*site, lanes);
        }
        let mut out = Scaled { log2_den, max_bits: 0, cells: Cells::Sparse(sites) };
        out.update_max_bits();
        Some(out)
    }

    fn convert<U: Lane>(&self) -> Scaled<U> {
        Scaled {
            log2_den: self.log2_den,
            max_bits: self.max_bits,
            cells: self.cells.map(|x| U::from_big(&x.to_big()).expect("widening")),
        }
    }

    fn update_max_bits(&mut self) {
        let mut max = 0;
        self.cells.for_each(|x| max = max.max(x.bits()));
        self.max_bits = max;
    }

    /// Whether a step fits lanes holding at most `limit` bits.
    fn step_fits(&self, table: &ScaledTable, limit: u64) -> bool {
        self.max_bits + table.growth_bits <= limit
    }

    fn sparse_step(sites: &FxHashMap<Site, LaneSpinor<T>>, table: &ScaledTable) -> FxHashMap<Site, LaneSpinor<T>> {
        let mut next: FxHashMap<Site, LaneSpinor<T>> =
            FxHashMap::with_capacity_and_hasher(sites.len() * 2 + 8, Default::default());
        let mut prods = Vec::with_capacity(table.products.len());
        for (site, spin) in sites {
            table.form_products(spin, &mut prods);
            for mv in &table.moves {
                let out = next.entry(site.shifted_unchecked(mv.offset)).or_insert_with(zero_spinor);
                for &(i, p, negate) in &mv.terms {
                    T::add_signed(&mut out[i], &prods[p], negate);
                }
            }
        }
        next.retain(|_, s| !spinor_is_zero(s));
        next
    }

    fn step(&self, table: &ScaledTable) -> Self {
        let cells = match &self.cells {
            Cells::Dense(d) => Cells::Dense(d.step(table)),
            Cells::Sparse(m) => match Dense::try_from_sparse(m) {
                Some(d) => Cells::Dense(d.step(table)),
                None => Cells::Sparse(Self::sparse_step(m, table)),
            },
        };
        let mut out = Scaled { log2_den: self.log2_den + table.shift, max_bits: 0, cells };
        out.reduce();
        out
    }

    /// Divide out the largest common power of two and refresh `max_bits`.
    fn reduce(&mut self) {
        let (mut common, mut max) = (u64::MAX, 0);
        self.cells.for_each(|x| {
            if let Some(tz) = x.trailing_zeros() {
                common = common.min(tz);
                max = max.max(x.bits());
            }
        });
        if common == u64::MAX {
            self.log2_den = 0;
            self.max_bits = 0;
            return;
        }
        let k = common.min(self.log2_den as u64) as u32;
        if k > 0 {
            self.cells.for_each_mut(|x| x.shr_assign(k));
            self.log2_den -= k;
        }
        self.max_bits = max - k as u64;
    }

    fn to_state(&self) -> WalkState {
        let sites: BTreeMap<Site, Spinor> = self
            .cells
            .entries()
            .map(|(site, s)| {
                let amp = |c: &[T; 2]| Amplitude::new(c[0].to_big(), c[1].to_big(), self.log2_den);
                (site, Spinor::new(amp(&s[0]), amp(&s[1])))
            })
            .collect();
        WalkState::from_map_unchecked(sites)
    }

    fn norm_sqr(&self) -> Amplitude {
        let mut acc = SquareSum::default();
        self.cells.for_each(|x| {
            if !x.is_zero() {
                x.add_square_to(&mut acc);
            }
        });
        Amplitude::new(acc.total(), 0, 2 * self.log2_den)
    }
}

enum Lanes {
    Small(Scaled<i128>),
    Big(Scaled<BigInt>),
}

/// An evolution in progress under a fixed coin table.
pub struct Evolution {
    table: ScaledTable,
    lanes: Lanes,
    steps: u64,
}

impl Evolution {
    /// # Panics
    /// If a scaled coin entry does not fit in `i64` (never the case for the
    /// Weyl tables or small perturbations of them).
    pub fn new(state: &WalkState, table: &TransitionTable) -> Self {
        let lanes = match Scaled::<i128>::from_state(state) {
            Some(s) => Lanes::Small(s),
            None => Lanes::Big(Scaled::from_state(state).expect("BigInt lanes accept any state")),
        };
        Evolution { table: ScaledTable::new(table), lanes, steps: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// True once numerators have outgrown `i128`.
    pub fn is_wide(&self) -> bool {
        matches!(self.lanes, Lanes::Big(_))
    }

    pub fn advance(&mut self) {
        self.lanes = match &self.lanes {
            Lanes::Small(s) if s.step_fits(&self.table, SMALL_LANE_BITS) => Lanes::Small(s.step(&self.table)),
            Lanes::Small(s) => Lanes::Big(s.convert::<BigInt>().step(&self.table)),
            Lanes::Big(s) => Lanes::Big(s.step(&self.table)),
        };
        self.steps += 1;
    }

    pub fn run(mut self, t: u64) -> Self {
        for _ in 0..t {
            self.advance();
        }
        self
    }

    pub fn state(&self) -> WalkState {
        match &self.lanes {
            Lanes::Small(s) => s.to_state(),
            Lanes::Big(s) => s.to_state(),
        }
    }

    /// Exact `Σ_x ⟨ψ_x|ψ_x⟩` of the current state.
    pub fn norm_sqr(&self) -> Amplitude {
        match &self.lanes {
            Lanes::Small(s) => s.norm_sqr(),
            Lanes::Big(s) => s.norm_sqr(),
        }
    }
}

/// One application of the walk operator.
pub fn step(state: &WalkState, c: Chirality) -> WalkState {
    step_with_table(state, &TransitionTable::weyl(c))
}

pub fn step_with_table(state: &WalkState, table: &TransitionTable) -> WalkState {
    evolve_with_table(state, 1, table)
}

/// `t` applications of the walk operator.
pub fn evolve(state: &WalkState, t: u64, c: Chirality) -> WalkState {
    evolve_with_table(state, t, &TransitionTable::weyl(c))
}

pub fn evolve_with_table(state: &WalkState, t: u64, table: &TransitionTable) -> WalkState {
    if t == 0 {
        return state.clone();
    }
    Evolution::new(state, table).run(t).state()
}
