use std::collections::BTreeMap;

use crate::error::WalkError;
use crate::lattice::Site;

use super::amplitude::Amplitude;
use super::matrix::Spinor;

/// Sparse walker state: site → coin spinor.
///
/// Zero spinors are never stored and the support lies on a single sublattice.
/// Iteration is in lexicographic site order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WalkState {
    sites: BTreeMap<Site, Spinor>,
}

impl WalkState {
    pub fn new() -> Self {
        Self::default()
    }

    /// A single spinor at `site`.
    pub fn delta(site: Site, spinor: Spinor) -> Self {
        let mut s = Self::new();
        s.insert(site, spinor).expect("an empty state accepts any site");
        s
    }

    pub fn from_entries<I>(entries: I) -> Result<Self, WalkError>
    where
        I: IntoIterator<Item = (Site, Spinor)>,
    {
        let mut s = Self::new();
        for (site, spinor) in entries {
            s.insert(site, spinor)?;
        }
        Ok(s)
    }

    /// Sets the spinor at `site`, replacing any previous value. A zero spinor
    /// removes the site.
    pub fn insert(&mut self, site: Site, spinor: Spinor) -> Result<(), WalkError> {
        if let Some(p) = self.parity() {
            if site.parity() != p {
                return Err(WalkError::MixedSupport(site));
            }
        }
        if spinor.is_zero() {
            self.sites.remove(&site);
        } else {
            self.sites.insert(site, spinor);
        }
        Ok(())
    }

    pub(crate) fn from_map_unchecked(sites: BTreeMap<Site, Spinor>) -> Self {
        debug_assert!(sites.values().all(|s| !s.is_zero()));
        WalkState { sites }
    }

    pub fn get(&self, site: &Site) -> Option<&Spinor> {
        self.sites.get(site)
    }

    /// Spinor at `site`, zero when unpopulated.
    pub fn spinor(&self, site: &Site) -> Spinor {
        self.sites.get(site).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, &Spinor)> {
        self.sites.iter()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Sublattice of the support, if any.
    pub fn parity(&self) -> Option<u8> {
        self.sites.keys().next().map(Site::parity)
    }

    /// `Σ_x ⟨ψ_x|ψ_x⟩`, exactly.
    pub fn norm_sqr(&self) -> Amplitude {
        self.sites.values().map(Spinor::norm_sqr).sum()
    }

    pub fn conj(&self) -> Self {
        WalkState { sites: self.sites.iter().map(|(k, v)| (*k, v.conj())).collect() }
    }
}

impl<'a> IntoIterator for &'a WalkState {
    type Item = (&'a Site, &'a Spinor);
    type IntoIter = std::collections::btree_map::Iter<'a, Site, Spinor>;

    fn into_iter(self) -> Self::IntoIter {
        self.sites.iter()
    }
}
