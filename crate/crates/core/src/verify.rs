//! Property suites cross-checking the counting identities, the product
//! formula and the propagator engines against direct enumeration.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::combinatorics::{
    coefficients_bruteforce, dfunc, f_sum, u_count, BitString, ClosedForm, WeightClass, DEFAULT_BUDGET,
};
use crate::lattice::{cone_displacements, decode, Site, StepCode, StepIndex};
use crate::propagator::{propagator_closed_form, PropagatorTable};
use crate::walk::{
    b_integers, closed_matrix_product, unitarity_defect, Amplitude, Chirality, Evolution, SpinMatrix, Spinor,
    TransitionTable, WalkState,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    WeightSplit,
    PhaseSum,
    BoundaryParity,
    BoundaryCount,
    Coefficients,
    MatrixProduct,
    Unitarity,
    Symmetry,
    TripleEngine,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::WeightSplit,
        Suite::PhaseSum,
        Suite::BoundaryParity,
        Suite::BoundaryCount,
        Suite::Coefficients,
        Suite::MatrixProduct,
        Suite::Unitarity,
        Suite::Symmetry,
        Suite::TripleEngine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::WeightSplit => "weight-split",
            Suite::PhaseSum => "phase-sum",
            Suite::BoundaryParity => "boundary-parity",
            Suite::BoundaryCount => "boundary-count",
            Suite::Coefficients => "coefficients",
            Suite::MatrixProduct => "matrix-product",
            Suite::Unitarity => "unitarity",
            Suite::Symmetry => "symmetry",
            Suite::TripleEngine => "triple-engine",
        }
    }

    /// The identity a suite exercises.
    pub fn description(self) -> &'static str {
        match self {
            Suite::WeightSplit => "overlap classes of v ⊕ B(t,H): sizes D(t,H,K,n), constant weight",
            Suite::PhaseSum => "phase sum over B(t,H) equals f(K,H)",
            Suite::BoundaryParity => "ι(v ⊕ Sv) is even and at most 2·min(K, t-K)",
            Suite::BoundaryCount => "strings by endpoints and run boundaries counted by u_aa'(n)",
            Suite::Coefficients => "closed-form c_ab equals the sum over string triples",
            Suite::MatrixProduct => "factorized coin product equals the literal product",
            Suite::Unitarity => "unitarity conditions, norm conservation, t-step completeness",
            Suite::Symmetry => "chirality conjugation and translation invariance",
            Suite::TripleEngine => "closed form, string enumeration and step operator agree",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Quick,
    Full,
}

/// Limits per suite at one scale.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub split_t: u32,
    pub phase_t: u32,
    pub phase_samples: usize,
    pub boundary_t: u32,
    pub coefficient_t: u64,
    pub product_exhaustive_t: usize,
    pub product_samples: usize,
    pub product_long_t: usize,
    pub norm_states: usize,
    pub norm_t: u64,
    pub completeness_t: u64,
    pub symmetry_samples: usize,
    pub symmetry_t: u64,
    pub engine_t: u64,
}

impl Scale {
    pub fn limits(self) -> Limits {
        match self {
            Scale::Full => Limits {
                split_t: 10,
                phase_t: 12,
                phase_samples: 20,
                boundary_t: 12,
                coefficient_t: 8,
                product_exhaustive_t: 4,
                product_samples: 100_000,
                product_long_t: 32,
                norm_states: 50,
                norm_t: 50,
                completeness_t: 12,
                symmetry_samples: 1000,
                symmetry_t: 10,
                engine_t: 8,
            },
            Scale::Quick => Limits {
                split_t: 7,
                phase_t: 8,
                phase_samples: 5,
                boundary_t: 9,
                coefficient_t: 5,
                product_exhaustive_t: 3,
                product_samples: 2000,
                product_long_t: 32,
                norm_states: 5,
                norm_t: 16,
                completeness_t: 6,
                symmetry_samples: 100,
                symmetry_t: 6,
                engine_t: 4,
            },
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub scale: Scale,
    pub seed: u64,
    /// Negate the coin matrix of this step in every table the suites build.
    pub fault: Option<StepIndex>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { scale: Scale::Full, seed: 0, fault: None }
    }
}

impl VerifyConfig {
    pub fn table(&self, c: Chirality) -> TransitionTable {
        let mut table = TransitionTable::weyl(c);
        if let Some(l) = self.fault {
            table.set(l, table.matrix(l).neg());
        }
        table
    }

    fn rng(&self, suite: Suite) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ (suite as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

/// Counts checks and stops at the first counterexample.
struct Tally(u64);

impl Tally {
    fn ensure(&mut self, ok: bool, counterexample: impl FnOnce() -> Value) -> Result<(), Value> {
        self.0 += 1;
        if ok {
            Ok(())
        } else {
            Err(counterexample())
        }
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> SuiteReport {
    let mut tally = Tally(0);
    let limits = cfg.scale.limits();
    let outcome = match suite {
        Suite::WeightSplit => weight_split(&mut tally, &limits),
        Suite::PhaseSum => phase_sum(&mut tally, &limits, &mut cfg.rng(suite)),
        Suite::BoundaryParity => boundary_parity(&mut tally, &limits),
        Suite::BoundaryCount => boundary_count(&mut tally, &limits),
        Suite::Coefficients => coefficients(&mut tally, &limits),
        Suite::MatrixProduct => matrix_product(&mut tally, &limits, cfg, &mut cfg.rng(suite)),
        Suite::Unitarity => unitarity(&mut tally, &limits, cfg, &mut cfg.rng(suite)),
        Suite::Symmetry => symmetry(&mut tally, &limits, cfg, &mut cfg.rng(suite)),
        Suite::TripleEngine => triple_engine(&mut tally, &limits, cfg),
    };
    SuiteReport { suite, passed: outcome.is_ok(), checks: tally.0, counterexample: outcome.err() }
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<SuiteReport> {
    Suite::ALL.iter().map(|&s| run_suite(s, cfg)).collect()
}

fn bits_str(t: u32, w: u64) -> String {
    BitString::from_word(t as usize, w).to_string()
}

fn weight_split(tally: &mut Tally, limits: &Limits) -> Result<(), Value> {
    for t in 0..=limits.split_t {
        for v in 0..(1u64 << t) {
            let k = v.count_ones() as i64;
            for h in 0..=t {
                let mut sizes = vec![0u64; t as usize + 1];
                for w in WeightClass::new(t as usize, h as usize).expect("t <= 64") {
                    let n = (v & w).count_ones() as i64;
                    let weight = (v ^ w).count_ones() as i64;
                    tally.ensure(
                        weight == k + h as i64 - 2 * n,
                        || json!({"t": t, "v": bits_str(t, v), "w": bits_str(t, w), "overlap": n, "weight": weight}),
                    )?;
                    sizes[n as usize] += 1;
                }
                let total: u64 = sizes.iter().sum();
                tally.ensure(
                    total == num_integer::binomial(t as u64, h as u64),
                    || json!({"t": t, "v": bits_str(t, v), "H": h, "total": total}),
                )?;
                for (n, &size) in sizes.iter().enumerate() {
                    let expected = dfunc(t as i64, h as i64, k, n as i64);
                    tally.ensure(expected == size.into(), || {
                        json!({"t": t, "v": bits_str(t, v), "H": h, "n": n, "size": size, "D": expected.to_string()})
                    })?;
                }
            }
        }
    }
    Ok(())
}

fn random_weight(rng: &mut ChaCha8Rng, t: u32, k: u32) -> u64 {
    index::sample(rng, t as usize, k as usize).into_iter().fold(0u64, |acc, p| acc | (1 << p))
}

/// `Σ_j counts[j] · (c·i)^j` for counts indexed by weight mod 4.
fn phase_total(counts: &[i64; 4], c: Chirality) -> Amplitude {
    let mut acc = Amplitude::zero();
    for (j, &n) in counts.iter().enumerate() {
        acc += &Amplitude::from(n).rotate(c.turns(j as u64));
    }
    acc
}

fn phase_sum(tally: &mut Tally, limits: &Limits, rng: &mut ChaCha8Rng) -> Result<(), Value> {
    for t in 0..=limits.phase_t {
        for k in 0..=t {
            for h in 0..=t {
                for _ in 0..limits.phase_samples {
                    let v = random_weight(rng, t, k);
                    let mut counts = [0i64; 4];
                    for w in WeightClass::new(t as usize, h as usize).expect("t <= 64") {
                        counts[((v ^ w).count_ones() % 4) as usize] += 1;
                    }
                    for c in Chirality::BOTH {
                        let direct = phase_total(&counts, c);
                        let formula = f_sum(t as u64, k as u64, h as u64, c).expect("counts within t");
                        tally.ensure(direct == formula, || {
                            json!({"t": t, "v": bits_str(t, v), "H": h, "chirality": c,
                                   "enumerated": direct.to_string(), "formula": formula.to_string()})
                        })?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn boundaries(t: u32, v: u64) -> u32 {
    if t == 0 {
        return 0;
    }
    let shifted = (v >> 1) | ((v & 1) << (t - 1));
    (v ^ shifted).count_ones()
}

fn boundary_parity(tally: &mut Tally, limits: &Limits) -> Result<(), Value> {
    for t in 0..=limits.boundary_t {
        for v in 0..(1u64 << t) {
            let k = v.count_ones();
            let b = boundaries(t, v);
            tally.ensure(
                b.is_multiple_of(2) && b <= 2 * k.min(t - k),
                || json!({"t": t, "v": bits_str(t, v), "boundaries": b}),
            )?;
        }
    }
    Ok(())
}

fn boundary_count(tally: &mut Tally, limits: &Limits) -> Result<(), Value> {
    for t in 1..=limits.boundary_t {
        let n_len = t as usize / 2 + 2;
        // counts[k][a][a'][n]
        let mut counts =
            vec![[[vec![0u64; n_len], vec![0u64; n_len]], [vec![0u64; n_len], vec![0u64; n_len]]]; t as usize + 1];
        for v in 0..(1u64 << t) {
            let (a, ap) = ((v & 1) as usize, ((v >> (t - 1)) & 1) as usize);
            counts[v.count_ones() as usize][a][ap][boundaries(t, v) as usize / 2] += 1;
        }
        for k in 0..=t {
            let mut total = BigInt::from(0);
            for a in 0..2u8 {
                for ap in 0..2u8 {
                    for (n, &direct) in counts[k as usize][a as usize][ap as usize].iter().enumerate() {
                        let u = u_count(t as u64, k as u64, a, ap, n as i64);
                        tally.ensure(u == direct.into(), || {
                            json!({"t": t, "K": k, "a": a, "a'": ap, "n": n,
                                   "enumerated": direct, "formula": u.to_string()})
                        })?;
                        total += BigInt::from(u);
                    }
                }
            }
            let expected = num_integer::binomial(t as u64, k as u64);
            tally.ensure(
                total == expected.into(),
                || json!({"t": t, "K": k, "sum": total.to_string(), "binomial": expected}),
            )?;
        }
    }
    Ok(())
}

fn coefficients(tally: &mut Tally, limits: &Limits) -> Result<(), Value> {
    for t in 2..=limits.coefficient_t {
        for c in Chirality::BOTH {
            let engine = ClosedForm::new(t, c).expect("t >= 2");
            for k1 in 0..=t {
                for k2 in 0..=t {
                    let profiles = engine.profiles(k1, k2);
                    for k3 in 0..=t {
                        let k = [k1, k2, k3];
                        let closed = engine.coefficients_from(&profiles, k3);
                        let brute = coefficients_bruteforce(t, k, c, DEFAULT_BUDGET).expect("t <= 8 fits the budget");
                        tally.ensure(closed == brute, || {
                            json!({"t": t, "K": k, "chirality": c,
                                   "closed_form": format!("{closed:?}"), "enumerated": format!("{brute:?}")})
                        })?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Gaussian-integer 2×2 matrix.
type Small = [[(i64, i64); 2]; 2];

fn small_mul(x: &Small, y: &Small) -> Small {
    let mut out = [[(0, 0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let (a, b) = x[i][k];
                let (c, d) = y[k][j];
                out[i][j].0 += a * c - b * d;
                out[i][j].1 += a * d + b * c;
            }
        }
    }
    out
}

fn small_identity() -> Small {
    [[(1, 0), (0, 0)], [(0, 0), (1, 0)]]
}

/// `A / ζ*` for every table entry, as Gaussian integers. `None` if a faulty
/// table leaves the Gaussian integers.
fn reduced_table(table: &TransitionTable) -> Option<[Small; 8]> {
    let c = table.chirality();
    let inv = &c.zeta() * &Amplitude::from(8);
    let mut out = [[[(0, 0); 2]; 2]; 8];
    for (l, m) in table.iter() {
        let r = m.scale(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let e = &r[(i, j)];
                if e.log2_den() != 0 {
                    return None;
                }
                out[l.ordinal()][i][j] = (e.re().to_i64()?, e.im().to_i64()?);
            }
        }
    }
    Some(out)
}

fn literal_product(reduced: &[Small; 8], w: [&BitString; 3]) -> Small {
    let mut acc = small_identity();
    for k in 0..w[0].len() {
        let code = StepCode::new(w[0].get(k) as u8, w[1].get(k) as u8, w[2].get(k) as u8).expect("bits");
        acc = small_mul(&reduced[decode(code).ordinal()], &acc);
    }
    acc
}

fn factorized_product(w: [&BitString; 3], c: Chirality) -> Small {
    let form = closed_matrix_product(w[0], w[1], w[2], c).expect("equal non-zero lengths");
    let b = b_integers(form.b_index.0, form.b_index.1);
    let rotate = |x: i64| match form.phase().value() {
        0 => (x, 0),
        1 => (0, x),
        2 => (-x, 0),
        _ => (0, -x),
    };
    [[rotate(b[0][0]), rotate(b[0][1])], [rotate(b[1][0]), rotate(b[1][1])]]
}

fn matrix_product(tally: &mut Tally, limits: &Limits, cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(), Value> {
    for c in Chirality::BOTH {
        let table = cfg.table(c);
        let reduced = reduced_table(&table);
        tally.ensure(
            reduced.is_some(),
            || json!({"chirality": c, "error": "coin table is not ζ* times a Gaussian-integer matrix"}),
        )?;
        let reduced = reduced.expect("checked");
        let compare = |w: [&BitString; 3], tally: &mut Tally| -> Result<(), Value> {
            let lit = literal_product(&reduced, w);
            let fact = factorized_product(w, c);
            tally.ensure(lit == fact, || {
                json!({"chirality": c, "w1": w[0].to_string(), "w2": w[1].to_string(), "w3": w[2].to_string(),
                       "literal": format!("{lit:?}"), "factorized": format!("{fact:?}")})
            })
        };
        for t in 1..=limits.product_exhaustive_t {
            for code in 0..(1u64 << (3 * t)) {
                let mask = (1u64 << t) - 1;
                let w: [BitString; 3] = std::array::from_fn(|s| BitString::from_word(t, (code >> (s * t)) & mask));
                compare([&w[0], &w[1], &w[2]], tally)?;
            }
        }
        let t = limits.product_long_t;
        for _ in 0..limits.product_samples {
            let w: [BitString; 3] = std::array::from_fn(|_| BitString::from_word(t, rng.gen()));
            compare([&w[0], &w[1], &w[2]], tally)?;
        }
    }
    Ok(())
}

fn random_amplitude(rng: &mut ChaCha8Rng) -> Amplitude {
    Amplitude::new(rng.gen_range(-64i64..=64), rng.gen_range(-64i64..=64), rng.gen_range(0..6))
}

/// Up to four sites with even coordinates in `[-4, 4]`, nonzero.
fn random_state(rng: &mut ChaCha8Rng) -> WalkState {
    let mut s = WalkState::new();
    for _ in 0..rng.gen_range(1..=4) {
        let x = Site::new(2 * rng.gen_range(-2..=2), 2 * rng.gen_range(-2..=2), 2 * rng.gen_range(-2..=2))
            .expect("even coordinates");
        s.insert(x, Spinor::new(random_amplitude(rng), random_amplitude(rng))).expect("one sublattice");
    }
    if s.is_empty() {
        s.insert(Site::ORIGIN, Spinor::up()).expect("empty state");
    }
    s
}

fn unitarity(tally: &mut Tally, limits: &Limits, cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(), Value> {
    for c in Chirality::BOTH {
        let table = cfg.table(c);
        let defect = unitarity_defect(&table);
        tally.ensure(defect.is_none(), || {
            let d = defect.as_ref().expect("failed check");
            json!({"chirality": c, "side": d.side, "displacement": d.displacement, "block": format!("{:?}", d.sum)})
        })?;
    }
    for i in 0..limits.norm_states {
        let c = if i % 2 == 0 { Chirality::Plus } else { Chirality::Minus };
        let s = random_state(rng);
        let norm = s.norm_sqr();
        let mut ev = Evolution::new(&s, &cfg.table(c));
        for t in 1..=limits.norm_t {
            ev.advance();
            let now = ev.norm_sqr();
            tally.ensure(now == norm, || {
                json!({"chirality": c, "t": t, "state": crate::wire::state_to_entries(&s),
                       "initial": norm.to_string(), "evolved": now.to_string()})
            })?;
        }
    }
    for t in 0..=limits.completeness_t {
        for c in Chirality::BOTH {
            let sum = PropagatorTable::closed_form(t, c).completeness_sum();
            tally
                .ensure(sum == SpinMatrix::identity(), || json!({"chirality": c, "t": t, "sum": format!("{sum:?}")}))?;
        }
    }
    Ok(())
}

fn random_site(rng: &mut ChaCha8Rng, parity: i64) -> Site {
    let coord = |rng: &mut ChaCha8Rng| 2 * rng.gen_range(-10i64..=10) + parity;
    Site::new(coord(rng), coord(rng), coord(rng)).expect("uniform parity")
}

fn symmetry(tally: &mut Tally, limits: &Limits, cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<(), Value> {
    for _ in 0..limits.symmetry_samples {
        let t = rng.gen_range(0..=limits.symmetry_t);
        let parity = rng.gen_range(0..2);
        let from = random_site(rng, parity);
        // Mostly inside the cone, occasionally just outside it.
        let d: [i64; 3] = std::array::from_fn(|_| 2 * rng.gen_range(-1..=t as i64 + 1) - t as i64);
        let to = from.offset(d).expect("parity shift by t");
        let plus = propagator_closed_form(&from, &to, t, Chirality::Plus);
        let minus = propagator_closed_form(&from, &to, t, Chirality::Minus);
        tally.ensure(
            minus.matrix == plus.matrix.conj(),
            || json!({"check": "conjugation", "from": from, "to": to, "t": t}),
        )?;
        let shift = if rng.gen_bool(0.5) { [1, 1, 1] } else { std::array::from_fn(|_| 2 * rng.gen_range(-50i64..=50)) };
        let (from2, to2) = (from.offset(shift).expect("shift"), to.offset(shift).expect("shift"));
        let c = if rng.gen_bool(0.5) { Chirality::Plus } else { Chirality::Minus };
        let reference = if c == Chirality::Plus { &plus } else { &minus };
        let table = cfg.table(c);
        let col = |j: usize| {
            let mut ev = Evolution::new(&WalkState::delta(from2, Spinor::basis(j)), &table);
            for _ in 0..t {
                ev.advance();
            }
            ev.state().spinor(&to2)
        };
        let moved = SpinMatrix::from_columns(&col(0), &col(1));
        tally.ensure(moved == reference.matrix, || {
            json!({"check": "translation", "from": from, "to": to, "shift": shift, "t": t, "chirality": c,
                   "closed_form": format!("{:?}", reference.matrix), "step_operator_shifted": format!("{moved:?}")})
        })?;
    }
    Ok(())
}

fn triple_engine(tally: &mut Tally, limits: &Limits, cfg: &VerifyConfig) -> Result<(), Value> {
    for t in 0..=limits.engine_t {
        for c in Chirality::BOTH {
            let closed = PropagatorTable::closed_form(t, c);
            let brute = PropagatorTable::brute_force(t, c, DEFAULT_BUDGET).expect("t <= 8 fits the budget");
            let step = PropagatorTable::from_evolution_with_table(t, &cfg.table(c));
            for d in cone_displacements(t) {
                let (a, b, s) = (closed.get(&d), brute.get(&d), step.get(&d));
                tally.ensure(a == b && b == s, || {
                    json!({"t": t, "chirality": c, "displacement": d,
                           "closed_form": format!("{a:?}"), "brute_force": format!("{b:?}"), "step": format!("{s:?}")})
                })?;
            }
        }
    }
    Ok(())
}
