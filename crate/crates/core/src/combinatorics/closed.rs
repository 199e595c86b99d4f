use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::CombinatoricsError;
use crate::walk::{Amplitude, Chirality};

use super::{f_integer_with, u_count_with, w_params, Binomials};

/// Krawtchouk values `K_κ(x; N) = Σ_k (-1)^k C(x,k) C(N-x, κ-k)` for
/// `κ = 0..=N`. Requires `0 <= x <= N`.
pub fn krawtchouk_row(n: i64, x: i64) -> Vec<BigInt> {
    assert!(0 <= x && x <= n, "krawtchouk_row needs 0 <= x <= N");
    let len = n as usize + 1;
    let mut row: Vec<BigInt> = Vec::with_capacity(len);
    row.push(BigInt::from(1));
    if len > 1 {
        row.push(BigInt::from(n - 2 * x));
    }
    for k in 1..n {
        let next = BigInt::from(n - 2 * x) * &row[k as usize] - BigInt::from(n - k + 1) * &row[k as usize - 1];
        let (q, r) = (&next / (k + 1), &next % (k + 1));
        debug_assert!(r.is_zero());
        row.push(q);
    }
    row
}

/// Alternating sums `w^{(s)}` for every `κ` at once: `Σ_k (-1)^k D(η, κ, m, k)`.
/// `None` when every value vanishes.
fn alternating_row(eta: i64, m: i64) -> Option<Vec<BigInt>> {
    (m >= 0 && m <= eta).then(|| krawtchouk_row(eta, m))
}

/// Closed-form coefficient engine for one `(t, chirality)`.
///
/// A coefficient factors as `c_ab(K1,K2,K3) = Σ_τ g_ab(τ) · f(τ, K3)` where the
/// profile `g_ab` depends only on `(K1, K2)` and collects `Σ u·w⁽⁰⁾·w⁽¹⁾` over
/// all `(a', n, J)` with `τ = |K1-K2| + 2J`. Profiles are built from
/// Krawtchouk rows; rows of `f` are memoized per `K3`.
pub struct ClosedForm {
    t: u64,
    chirality: Chirality,
    binom: Binomials,
    f_rows: Vec<OnceLock<Vec<BigInt>>>,
}

/// Interference profiles `g_ab(τ)` for one `(K1, K2)`, indexed `[a][b][τ]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profiles(pub [[Vec<BigInt>; 2]; 2]);

impl ClosedForm {
    pub fn new(t: u64, chirality: Chirality) -> Result<Self, CombinatoricsError> {
        if t < 2 {
            return Err(CombinatoricsError::TooShort(t));
        }
        Ok(ClosedForm {
            t,
            chirality,
            binom: Binomials::new(t as usize),
            f_rows: (0..=t).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn chirality(&self) -> Chirality {
        self.chirality
    }

    /// Integer parts of `f(τ, K3)` for `τ = 0..=t`.
    fn f_row(&self, k3: u64) -> &[BigInt] {
        self.f_rows[k3 as usize].get_or_init(|| {
            let t = self.t as i64;
            (0..=t).map(|tau| f_integer_with(&self.binom, t, tau, k3 as i64)).collect()
        })
    }

    pub fn profiles(&self, k1: u64, k2: u64) -> Profiles {
        let t = self.t as i64;
        let (k1, k2) = (k1 as i64, k2 as i64);
        let base = (k1 - k2).abs();
        let j_max = k1.max(k2);
        let n_max = k1.min(t - k1) + 1;
        let mut out: [[Vec<BigInt>; 2]; 2] = Default::default();
        for a in 0..2u8 {
            for b in 0..2u8 {
                out[a as usize][b as usize] = vec![BigInt::zero(); self.t as usize + 1];
            }
        }
        for a in 0..2u8 {
            for ap in 0..2u8 {
                for n in 0..=n_max {
                    let u = u_count_with(&self.binom, t, k1, a, ap, n);
                    if u.is_zero() {
                        continue;
                    }
                    // Rows and sign flips for s = 0, 1; κ still depends on (b, J).
                    let mut rows = Vec::with_capacity(2);
                    for s in 0..2u8 {
                        let (_, eta, gamma) = w_params(t, k1, k2, s, a, ap, 0, 0);
                        rows.push((alternating_row(eta, n - gamma), eta, gamma));
                    }
                    let (Some(row0), eta0, gamma0) = &rows[0] else { continue };
                    let (Some(row1), eta1, gamma1) = &rows[1] else { continue };
                    for b in 0..2u8 {
                        let flip = (gamma0 + gamma1) * i64::from(b) % 2 == 1;
                        let g = &mut out[a as usize][b as usize];
                        for j in 0..=j_max {
                            let (kappa0, _, _) = w_params(t, k1, k2, 0, a, ap, b, j);
                            let (kappa1, _, _) = w_params(t, k1, k2, 1, a, ap, b, j);
                            if kappa0 < 0 || kappa0 > *eta0 || kappa1 < 0 || kappa1 > *eta1 {
                                continue;
                            }
                            let w0 = &row0[kappa0 as usize];
                            let w1 = &row1[kappa1 as usize];
                            if w0.is_zero() || w1.is_zero() {
                                continue;
                            }
                            let tau = base + 2 * j;
                            debug_assert!(tau <= t, "nonzero class beyond string length");
                            if tau > t {
                                continue;
                            }
                            let term = &u * w0 * w1;
                            if flip {
                                g[tau as usize] -= term;
                            } else {
                                g[tau as usize] += term;
                            }
                        }
                    }
                }
            }
        }
        Profiles(out)
    }

    /// `Σ_τ g(τ) f(τ, K3)` with the phase `(c·i)^{|τ-K3|}` applied per term.
    pub fn fold(&self, profile: &[BigInt], k3: u64) -> Amplitude {
        let row = self.f_row(k3);
        // Accumulators for phases 1, i, -1, -i.
        let mut acc: [BigInt; 4] = Default::default();
        for (tau, (g, f)) in profile.iter().zip(row).enumerate() {
            if g.is_zero() || f.is_zero() {
                continue;
            }
            let q = self.chirality.turns((tau as u64).abs_diff(k3)).value() as usize;
            acc[q] += g * f;
        }
        let [p0, p1, p2, p3] = acc;
        Amplitude::gaussian(p0 - p2, p1 - p3)
    }

    pub fn coefficient(&self, k: [u64; 3], a: u8, b: u8) -> Amplitude {
        let p = self.profiles(k[0], k[1]);
        self.fold(&p.0[a as usize & 1][b as usize & 1], k[2])
    }

    /// All four coefficients, indexed `[a][b]`.
    pub fn coefficients(&self, k: [u64; 3]) -> [[Amplitude; 2]; 2] {
        let p = self.profiles(k[0], k[1]);
        self.coefficients_from(&p, k[2])
    }

    pub fn coefficients_from(&self, p: &Profiles, k3: u64) -> [[Amplitude; 2]; 2] {
        let fold = |a: usize, b: usize| self.fold(&p.0[a][b], k3);
        [[fold(0, 0), fold(0, 1)], [fold(1, 0), fold(1, 1)]]
    }
}
