//! Lossless JSON encodings of amplitudes, states and propagators.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{FloatOverflow, WireError};
use crate::lattice::Site;
use crate::propagator::Propagator;
use crate::walk::{Amplitude, Chirality, SpinMatrix, Spinor, WalkState};

/// `(re + im·i) / 2^log2_den` with decimal integer strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactAmplitude {
    pub re: String,
    pub im: String,
    pub log2_den: u32,
}

impl From<&Amplitude> for ExactAmplitude {
    fn from(a: &Amplitude) -> Self {
        ExactAmplitude { re: a.re().to_string(), im: a.im().to_string(), log2_den: a.log2_den() }
    }
}

fn parse_int(s: &str) -> Result<BigInt, WireError> {
    s.trim().parse().map_err(|_| WireError::Integer(s.to_string()))
}

impl TryFrom<&ExactAmplitude> for Amplitude {
    type Error = WireError;

    fn try_from(e: &ExactAmplitude) -> Result<Self, WireError> {
        Ok(Amplitude::new(parse_int(&e.re)?, parse_int(&e.im)?, e.log2_den))
    }
}

/// One site of a state file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateEntry {
    pub x: [i64; 3],
    pub up: ExactAmplitude,
    pub down: ExactAmplitude,
}

pub fn state_to_entries(s: &WalkState) -> Vec<StateEntry> {
    s.iter().map(|(x, v)| StateEntry { x: x.coords(), up: (&v.0[0]).into(), down: (&v.0[1]).into() }).collect()
}

pub fn state_from_entries(entries: &[StateEntry]) -> Result<WalkState, WireError> {
    let mut seen = BTreeSet::new();
    let mut state = WalkState::new();
    for e in entries {
        let x = Site::try_from(e.x)?;
        if !seen.insert(x) {
            return Err(WireError::DuplicateSite(x));
        }
        let spinor = Spinor::new(Amplitude::try_from(&e.up)?, Amplitude::try_from(&e.down)?);
        state.insert(x, spinor)?;
    }
    Ok(state)
}

/// Parses a JSON array of [`StateEntry`].
pub fn parse_state(json: &str) -> Result<WalkState, WireError> {
    let entries: Vec<StateEntry> = serde_json::from_str(json)?;
    state_from_entries(&entries)
}

pub fn write_state(s: &WalkState) -> String {
    serde_json::to_string_pretty(&state_to_entries(s)).expect("state entries serialize")
}

/// `[re, im]` pairs in double precision.
pub type FloatMatrix = [[[f64; 2]; 2]; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorRecord {
    pub t: u64,
    pub chirality: Chirality,
    pub from: [i64; 3],
    pub to: [i64; 3],
    pub entries: [[ExactAmplitude; 2]; 2],
    pub float_view: FloatMatrix,
}

fn float_view(m: &SpinMatrix) -> Result<FloatMatrix, FloatOverflow> {
    let f = crate::propagator::to_float(m)?;
    Ok(f.map(|row| row.map(|z| [z.re, z.im])))
}

impl PropagatorRecord {
    pub fn new(p: &Propagator) -> Result<Self, FloatOverflow> {
        let m = &p.matrix;
        Ok(PropagatorRecord {
            t: p.t,
            chirality: p.chirality,
            from: p.from.coords(),
            to: p.to.coords(),
            entries: [[(&m[(0, 0)]).into(), (&m[(0, 1)]).into()], [(&m[(1, 0)]).into(), (&m[(1, 1)]).into()]],
            float_view: float_view(m)?,
        })
    }

    pub fn to_propagator(&self) -> Result<Propagator, WireError> {
        let e = |i: usize, j: usize| Amplitude::try_from(&self.entries[i][j]);
        Ok(Propagator {
            from: Site::try_from(self.from)?,
            to: Site::try_from(self.to)?,
            t: self.t,
            chirality: self.chirality,
            matrix: SpinMatrix([[e(0, 0)?, e(0, 1)?], [e(1, 0)?, e(1, 1)?]]),
        })
    }
}

/// One row of an evolved distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub x: [i64; 3],
    pub up: ExactAmplitude,
    pub down: ExactAmplitude,
    pub probability: ExactAmplitude,
    pub probability_float: f64,
}

pub fn distribution(s: &WalkState) -> Result<Vec<DistributionRow>, FloatOverflow> {
    s.iter()
        .map(|(x, v)| {
            let p = v.norm_sqr();
            Ok(DistributionRow {
                x: x.coords(),
                up: (&v.0[0]).into(),
                down: (&v.0[1]).into(),
                probability_float: p.to_f64()?.0,
                probability: (&p).into(),
            })
        })
        .collect()
}

/// CSV view: `x1,x2,x3,up_re,up_im,down_re,down_im,probability`.
pub fn distribution_csv(s: &WalkState) -> Result<String, FloatOverflow> {
    let mut out = String::from("x1,x2,x3,up_re,up_im,down_re,down_im,probability\n");
    for (x, v) in s {
        let [x1, x2, x3] = x.coords();
        let (ur, ui) = v.0[0].to_f64()?;
        let (dr, di) = v.0[1].to_f64()?;
        let p = v.norm_sqr().to_f64()?.0;
        out.push_str(&format!("{x1},{x2},{x3},{ur:e},{ui:e},{dr:e},{di:e},{p:e}\n"));
    }
    Ok(out)
}

/// CSV view of propagator records, one row per record.
pub fn propagators_csv(records: &[PropagatorRecord]) -> String {
    let mut out = String::from("t,chirality,from1,from2,from3,to1,to2,to3");
    for i in 0..2 {
        for j in 0..2 {
            out.push_str(&format!(",p{i}{j}_re,p{i}{j}_im"));
        }
    }
    out.push('\n');
    for r in records {
        let [f1, f2, f3] = r.from;
        let [t1, t2, t3] = r.to;
        out.push_str(&format!("{},{},{f1},{f2},{f3},{t1},{t2},{t3}", r.t, r.chirality));
        for row in &r.float_view {
            for [re, im] in row {
                out.push_str(&format!(",{re:e},{im:e}"));
            }
        }
        out.push('\n');
    }
    out
}
