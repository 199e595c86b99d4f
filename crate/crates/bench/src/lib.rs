//! Inputs shared by the benchmarks.

use weylqw_core::{Amplitude, Site, Spinor, WalkState};

/// Target site with string counts `(⌊t/2⌋, ⌈t/2⌉, ⌊t/2⌋)`, deep inside the cone.
pub fn centre(t: u64) -> Site {
    let r = (t % 2) as i64;
    Site::new(r, -r, r).expect("coordinates share a parity")
}

/// Far corner of the cone, reached by a single path.
pub fn corner(t: u64) -> Site {
    let t = t as i64;
    Site::new(t, t, t).expect("coordinates share a parity")
}

/// Normalized point source with both spin components populated.
pub fn point_source() -> WalkState {
    let half = Amplitude::new(1, 1, 1);
    WalkState::delta(Site::ORIGIN, Spinor::new(half.clone(), half))
}
