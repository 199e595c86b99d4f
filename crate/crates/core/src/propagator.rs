//! Three independent evaluations of the `t`-step propagator
//! `P(x', x, t) = ⟨x| W^t |x'⟩` and propagator-based evolution.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{coefficients_bruteforce, ClosedForm, DEFAULT_BUDGET};
use crate::error::{CombinatoricsError, FloatOverflow};
use crate::lattice::{cone_displacements, string_counts, Site, StepIndex};
use crate::walk::{
    b_matrix, evolve, evolve_with_table, transition_matrix, Amplitude, Chirality, SpinMatrix, Spinor, TransitionTable,
    WalkState,
};

/// `t`-step transition amplitudes from `from` to `to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Propagator {
    pub from: Site,
    pub to: Site,
    pub t: u64,
    pub chirality: Chirality,
    pub matrix: SpinMatrix,
}

impl Propagator {
    pub fn is_zero(&self) -> bool {
        self.matrix.is_zero()
    }

    /// Nearest double-precision view of each entry.
    pub fn to_float(&self) -> Result<[[Complex64; 2]; 2], FloatOverflow> {
        to_float(&self.matrix)
    }
}

pub fn to_float(m: &SpinMatrix) -> Result<[[Complex64; 2]; 2], FloatOverflow> {
    let entry = |i: usize, j: usize| -> Result<Complex64, FloatOverflow> {
        let (re, im) = m[(i, j)].to_f64()?;
        Ok(Complex64::new(re, im))
    };
    Ok([[entry(0, 0)?, entry(0, 1)?], [entry(1, 0)?, entry(1, 1)?]])
}

/// Which evaluation produced a propagator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    ClosedForm,
    BruteForce,
    Step,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::ClosedForm, Engine::BruteForce, Engine::Step];

    pub fn name(self) -> &'static str {
        match self {
            Engine::ClosedForm => "closed-form",
            Engine::BruteForce => "brute-force",
            Engine::Step => "step",
        }
    }
}

fn displacement_for(t: u64, k: [u64; 3]) -> [i64; 3] {
    let (t, k) = (t as i64, k.map(|v| v as i64));
    [t - 2 * k[1], t - 2 * k[2], 2 * k[0] - t]
}

/// `(ζ*)^t · Σ_ab c_ab B_ab`.
fn assemble(t: u64, c: Chirality, coeffs: &[[Amplitude; 2]; 2]) -> SpinMatrix {
    let scale = c.zeta().conj().pow(t);
    let mut m = SpinMatrix::zero();
    for a in 0..2u8 {
        for b in 0..2u8 {
            let cab = &coeffs[a as usize][b as usize];
            if !cab.is_zero() {
                m = &m + &b_matrix(a, b).scale(cab);
            }
        }
    }
    m.scale(&scale)
}

/// Direct evaluation for `t <= 1`, where the closed form does not apply.
fn short_time(d: [i64; 3], t: u64, c: Chirality) -> SpinMatrix {
    match t {
        0 if d == [0, 0, 0] => SpinMatrix::identity(),
        1 => StepIndex::ALL
            .into_iter()
            .find(|l| l.vector() == [-d[0], -d[1], -d[2]])
            .map(|l| transition_matrix(l, c))
            .unwrap_or_else(SpinMatrix::zero),
        _ => SpinMatrix::zero(),
    }
}

fn propagator(from: Site, to: Site, t: u64, c: Chirality, matrix: SpinMatrix) -> Propagator {
    Propagator { from, to, t, chirality: c, matrix }
}

/// Closed-form propagator. Total in `t`; zero off the causal cone.
pub fn propagator_closed_form(from: &Site, to: &Site, t: u64, c: Chirality) -> Propagator {
    let matrix = match string_counts(from, to, t) {
        None => SpinMatrix::zero(),
        Some(_) if t < 2 => short_time(to.displacement_from(from), t, c),
        Some(k) => {
            let engine = ClosedForm::new(t, c).expect("t >= 2");
            assemble(t, c, &engine.coefficients(k.k))
        }
    };
    propagator(*from, *to, t, c, matrix)
}

/// Propagator as a sum over every constrained string triple, with the default
/// enumeration budget.
pub fn propagator_brute_force(from: &Site, to: &Site, t: u64, c: Chirality) -> Result<Propagator, CombinatoricsError> {
    propagator_brute_force_with_budget(from, to, t, c, DEFAULT_BUDGET)
}

pub fn propagator_brute_force_with_budget(
    from: &Site,
    to: &Site,
    t: u64,
    c: Chirality,
    budget: u128,
) -> Result<Propagator, CombinatoricsError> {
    let matrix = match string_counts(from, to, t) {
        None => SpinMatrix::zero(),
        Some(_) if t == 0 => SpinMatrix::identity(),
        Some(k) => assemble(t, c, &coefficients_bruteforce(t, k.k, c, budget)?),
    };
    Ok(propagator(*from, *to, t, c, matrix))
}

/// Propagator as a sum over all `8^t` step sequences, multiplying transition
/// matrices literally. Subject to `8^t <= budget`.
pub fn propagator_path_enumeration(
    from: &Site,
    to: &Site,
    t: u64,
    c: Chirality,
    budget: u128,
) -> Result<Propagator, CombinatoricsError> {
    let size = 8u128.checked_pow(t as u32).unwrap_or(u128::MAX);
    if t > 40 || size > budget {
        return Err(CombinatoricsError::BudgetExceeded { size, budget });
    }
    let target = to.displacement_from(from);
    let mats: Vec<([i64; 3], SpinMatrix)> = StepIndex::ALL
        .into_iter()
        .map(|l| {
            let v = l.vector();
            ([-v[0], -v[1], -v[2]], transition_matrix(l, c))
        })
        .collect();
    // Depth-first over sequences; `acc` is the product of matrices so far,
    // later steps multiplying on the left.
    fn walk(
        depth: u64,
        pos: [i64; 3],
        acc: &SpinMatrix,
        target: [i64; 3],
        mats: &[([i64; 3], SpinMatrix)],
        out: &mut SpinMatrix,
    ) {
        if depth == 0 {
            if pos == target {
                *out = &*out + acc;
            }
            return;
        }
        for (mv, m) in mats {
            let next = [pos[0] + mv[0], pos[1] + mv[1], pos[2] + mv[2]];
            // Prune positions that can no longer reach the target.
            let rem = depth as i64 - 1;
            if (0..3).any(|i| (target[i] - next[i]).abs() > rem) {
                continue;
            }
            walk(depth - 1, next, &(m * acc), target, mats, out);
        }
    }
    let mut total = SpinMatrix::zero();
    walk(t, [0, 0, 0], &SpinMatrix::identity(), target, &mats, &mut total);
    Ok(propagator(*from, *to, t, c, total))
}

/// Propagator read off the walk operator: evolve each basis spinor at `from`
/// and take its value at `to` as a column.
pub fn propagator_from_evolution(from: &Site, to: &Site, t: u64, c: Chirality) -> Propagator {
    let col = |j: usize| evolve(&WalkState::delta(*from, Spinor::basis(j)), t, c).spinor(to);
    let matrix = SpinMatrix::from_columns(&col(0), &col(1));
    propagator(*from, *to, t, c, matrix)
}

/// Propagators for every displacement in the `t`-step cone, keyed by
/// `x - x'`. Translation invariance makes one table serve every source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagatorTable {
    t: u64,
    chirality: Chirality,
    entries: BTreeMap<[i64; 3], SpinMatrix>,
}

impl PropagatorTable {
    /// Closed-form table. Profiles are shared across `K3` and `(K1, K2)`
    /// groups are evaluated in parallel.
    pub fn closed_form(t: u64, c: Chirality) -> Self {
        let entries = if t < 2 {
            cone_displacements(t).into_iter().map(|d| (d, short_time(d, t, c))).collect()
        } else {
            let engine = ClosedForm::new(t, c).expect("t >= 2");
            let pairs: Vec<(u64, u64)> = (0..=t).flat_map(|k1| (0..=t).map(move |k2| (k1, k2))).collect();
            pairs
                .into_par_iter()
                .flat_map_iter(|(k1, k2)| {
                    let p = engine.profiles(k1, k2);
                    (0..=t)
                        .map(|k3| {
                            let m = assemble(t, c, &engine.coefficients_from(&p, k3));
                            (displacement_for(t, [k1, k2, k3]), m)
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        };
        PropagatorTable { t, chirality: c, entries }
    }

    /// Brute-force table; every site must fit the budget.
    pub fn brute_force(t: u64, c: Chirality, budget: u128) -> Result<Self, CombinatoricsError> {
        let entries = cone_displacements(t)
            .into_par_iter()
            .map(|d| {
                let to = Site::ORIGIN.shifted_unchecked(d);
                propagator_brute_force_with_budget(&Site::ORIGIN, &to, t, c, budget).map(|p| (d, p.matrix))
            })
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        Ok(PropagatorTable { t, chirality: c, entries })
    }

    /// Table extracted from two evolutions of basis spinors at the origin.
    pub fn from_evolution(t: u64, c: Chirality) -> Self {
        Self::from_evolution_with_table(t, &TransitionTable::weyl(c))
    }

    pub fn from_evolution_with_table(t: u64, table: &TransitionTable) -> Self {
        let c = table.chirality();
        let [up, down] = [0, 1].map(|j| evolve_with_table(&WalkState::delta(Site::ORIGIN, Spinor::basis(j)), t, table));
        let entries = cone_displacements(t)
            .into_iter()
            .map(|d| {
                let x = Site::ORIGIN.shifted_unchecked(d);
                (d, SpinMatrix::from_columns(&up.spinor(&x), &down.spinor(&x)))
            })
            .collect();
        PropagatorTable { t, chirality: c, entries }
    }

    pub fn build(engine: Engine, t: u64, c: Chirality, budget: u128) -> Result<Self, CombinatoricsError> {
        match engine {
            Engine::ClosedForm => Ok(Self::closed_form(t, c)),
            Engine::BruteForce => Self::brute_force(t, c, budget),
            Engine::Step => Ok(Self::from_evolution(t, c)),
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn chirality(&self) -> Chirality {
        self.chirality
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Matrix for displacement `x - x'`; `None` off the cone.
    pub fn get(&self, displacement: &[i64; 3]) -> Option<&SpinMatrix> {
        self.entries.get(displacement)
    }

    pub fn propagator(&self, from: &Site, to: &Site) -> Propagator {
        let matrix = self.get(&to.displacement_from(from)).cloned().unwrap_or_else(SpinMatrix::zero);
        propagator(*from, *to, self.t, self.chirality, matrix)
    }

    /// Entries in lexicographic displacement order.
    pub fn iter(&self) -> impl Iterator<Item = (&[i64; 3], &SpinMatrix)> {
        self.entries.iter()
    }

    /// `Σ_x P†P` over the cone; the identity for a unitary walk.
    pub fn completeness_sum(&self) -> SpinMatrix {
        self.entries.values().fold(SpinMatrix::zero(), |acc, m| &acc + &(&m.adjoint() * m))
    }
}

/// State evolution through the closed-form propagator:
/// `ψ_x(t) = Σ_{x'} P(x', x, t) ψ_{x'}(0)`.
pub fn convolve(s: &WalkState, t: u64, c: Chirality) -> WalkState {
    if s.is_empty() {
        return WalkState::new();
    }
    convolve_with_table(s, &PropagatorTable::closed_form(t, c))
}

/// [`convolve`] against a prebuilt table. Sources and displacements are
/// visited in lexicographic order.
pub fn convolve_with_table(s: &WalkState, table: &PropagatorTable) -> WalkState {
    let mut acc: BTreeMap<Site, Spinor> = BTreeMap::new();
    for (src, psi) in s {
        for (d, m) in table.iter() {
            if m.is_zero() {
                continue;
            }
            let v = m.apply(psi);
            let slot = acc.entry(src.shifted_unchecked(*d)).or_default();
            *slot = &*slot + &v;
        }
    }
    acc.retain(|_, v| !v.is_zero());
    WalkState::from_map_unchecked(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::step;
    use proptest::prelude::*;

    fn site(x: [i64; 3]) -> Site {
        Site::try_from(x).unwrap()
    }

    fn corner(t: u64) -> SpinMatrix {
        b_matrix(1, 0).scale(&Chirality::Plus.zeta().pow(t))
    }

    #[test]
    fn one_step_examples() {
        let c = Chirality::Plus;
        let h1 = StepIndex::new(1).unwrap();
        let to = site([-1, -1, -1]);
        let expected = transition_matrix(h1, c);
        assert_eq!(expected, SpinMatrix::from_integers([[1, 0], [1, 0]]).scale(&c.zeta().conj()));
        assert_eq!(propagator_brute_force(&Site::ORIGIN, &to, 1, c).unwrap().matrix, expected);
        assert_eq!(propagator_closed_form(&Site::ORIGIN, &to, 1, c).matrix, expected);
        assert_eq!(propagator_from_evolution(&Site::ORIGIN, &to, 1, c).matrix, expected);
    }

    #[test]
    fn two_step_corner() {
        let c = Chirality::Plus;
        let to = site([2, 2, 2]);
        let expected = SpinMatrix::from_integers([[0, -1], [0, 1]]).scale(&Amplitude::new(0, 1, 3));
        assert_eq!(corner(2), expected);
        assert_eq!(propagator_brute_force(&Site::ORIGIN, &to, 2, c).unwrap().matrix, expected);
        assert_eq!(propagator_closed_form(&Site::ORIGIN, &to, 2, c).matrix, expected);
        assert_eq!(propagator_path_enumeration(&Site::ORIGIN, &to, 2, c, DEFAULT_BUDGET).unwrap().matrix, expected);
    }

    #[test]
    fn off_cone_is_exactly_zero() {
        let c = Chirality::Minus;
        for t in 0..=4 {
            let far = site([2 * t as i64 + 2, 0, 0]);
            assert!(propagator_closed_form(&Site::ORIGIN, &far, t, c).is_zero());
            assert!(propagator_brute_force(&Site::ORIGIN, &far, t, c).unwrap().is_zero());
        }
        let odd = site([1, 1, 1]);
        assert!(propagator_closed_form(&Site::ORIGIN, &odd, 2, c).is_zero());
    }

    #[test]
    fn zero_steps() {
        let c = Chirality::Plus;
        assert_eq!(propagator_closed_form(&Site::ORIGIN, &Site::ORIGIN, 0, c).matrix, SpinMatrix::identity());
        assert!(propagator_closed_form(&Site::ORIGIN, &site([2, 0, 0]), 0, c).is_zero());
        assert_eq!(propagator_brute_force(&Site::ORIGIN, &Site::ORIGIN, 0, c).unwrap().matrix, SpinMatrix::identity());
    }

    #[test]
    fn corner_at_long_times() {
        for t in [3u64, 10, 57, 200] {
            let to = site([t as i64; 3]);
            assert_eq!(propagator_closed_form(&Site::ORIGIN, &to, t, Chirality::Plus).matrix, corner(t), "t={t}");
        }
    }

    #[test]
    fn dispatch_boundary_agrees_with_evolution() {
        for c in Chirality::BOTH {
            for t in 0..=3 {
                let table = PropagatorTable::from_evolution(t, c);
                for (d, m) in table.iter() {
                    let to = site(*d);
                    assert_eq!(&propagator_closed_form(&Site::ORIGIN, &to, t, c).matrix, m, "t={t} d={d:?}");
                }
            }
        }
    }

    #[test]
    fn tables_agree_up_to_five_steps() {
        for c in Chirality::BOTH {
            for t in 0..=5 {
                let closed = PropagatorTable::closed_form(t, c);
                assert_eq!(closed, PropagatorTable::from_evolution(t, c), "t={t}");
                assert_eq!(closed, PropagatorTable::brute_force(t, c, DEFAULT_BUDGET).unwrap(), "t={t}");
                assert_eq!(closed.completeness_sum(), SpinMatrix::identity());
            }
        }
    }

    #[test]
    fn path_enumeration_confirms_the_string_bijection() {
        for c in Chirality::BOTH {
            for t in 0..=4u64 {
                let closed = PropagatorTable::closed_form(t, c);
                for (d, m) in closed.iter() {
                    let p = propagator_path_enumeration(&Site::ORIGIN, &site(*d), t, c, DEFAULT_BUDGET).unwrap();
                    assert_eq!(&p.matrix, m);
                }
            }
        }
        assert!(propagator_path_enumeration(&Site::ORIGIN, &Site::ORIGIN, 8, Chirality::Plus, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn float_view_examples() {
        let m = SpinMatrix::identity().scale(&Amplitude::new(1, -1, 2));
        let f = to_float(&m).unwrap();
        assert_eq!(f[0][0], Complex64::new(0.25, -0.25));
        assert_eq!(to_float(&SpinMatrix::zero()).unwrap(), [[Complex64::new(0.0, 0.0); 2]; 2]);
        let f = to_float(&corner(2)).unwrap();
        assert_eq!(f[0][1], Complex64::new(0.0, -0.125));
        assert_eq!(f[1][1], Complex64::new(0.0, 0.125));
    }

    #[test]
    fn convolve_examples() {
        let c = Chirality::Plus;
        let s = WalkState::delta(site([2, 0, 0]), Spinor::new(Amplitude::one(), Amplitude::i()));
        assert_eq!(convolve(&s, 0, c), s);
        assert_eq!(convolve(&s, 1, c), step(&s, c));
        assert_eq!(convolve(&s, 6, c), evolve(&s, 6, c));
        assert!(convolve(&WalkState::new(), 3, c).is_empty());
    }

    fn arb_state() -> impl Strategy<Value = WalkState> {
        let entry = (prop::array::uniform3(-3i64..=3), prop::array::uniform4(-3i64..=3)).prop_map(|(x, v)| {
            let x = [2 * x[0], 2 * x[1], 2 * x[2]];
            (site(x), Spinor::new(Amplitude::gaussian(v[0], v[1]), Amplitude::gaussian(v[2], v[3])))
        });
        prop::collection::vec(entry, 1..4).prop_map(|e| {
            let map: BTreeMap<Site, Spinor> = e.into_iter().filter(|(_, s)| !s.is_zero()).collect();
            WalkState::from_map_unchecked(map)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn convolve_matches_evolve(s in arb_state(), t in 0u64..=7, plus in any::<bool>()) {
            let c = if plus { Chirality::Plus } else { Chirality::Minus };
            prop_assert_eq!(convolve(&s, t, c), evolve(&s, t, c));
        }

        #[test]
        fn conjugation_and_translation(d in prop::array::uniform3(-4i64..=4), src in prop::array::uniform3(-5i64..=5), t in 0u64..=6) {
            let from = site(src.map(|v| 2 * v));
            let to = site([d[0] * 2, d[1] * 2, d[2] * 2].map(|v| v + (t as i64 % 2)));
            let to = site(std::array::from_fn(|i| to.coords()[i] + from.coords()[i]));
            let plus = propagator_closed_form(&from, &to, t, Chirality::Plus);
            let minus = propagator_closed_form(&from, &to, t, Chirality::Minus);
            prop_assert_eq!(minus.matrix, plus.matrix.conj());
            let shift = [1, 1, 1];
            let moved = propagator_closed_form(&from.shifted_unchecked(shift), &to.shifted_unchecked(shift), t, Chirality::Plus);
            prop_assert_eq!(moved.matrix, plus.matrix);
        }
    }
}
