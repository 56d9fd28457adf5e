//! Particle configurations and hard-core validity.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::lattice::{Region, Site};
use crate::shape::Shape;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub occupied: BTreeSet<Site>,
    /// Ambient window; empty when unspecified.
    #[serde(default)]
    pub window: Region,
}

impl Configuration {
    pub fn new(occupied: impl IntoIterator<Item = Site>) -> Self {
        Configuration { occupied: occupied.into_iter().collect(), window: Region::new() }
    }

    pub fn with_window(mut self, window: Region) -> Self {
        self.window = window;
        self
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.occupied.contains(s)
    }

    /// Number of anchors inside a region.
    pub fn count_in(&self, region: &Region) -> usize {
        if self.occupied.len() < region.len() {
            self.occupied.iter().filter(|s| region.contains(s)).count()
        } else {
            region.iter().filter(|s| self.occupied.contains(s)).count()
        }
    }
}

/// No two anchors differ by an exclusion displacement.
pub fn is_valid(shape: &Shape, x: &Configuration) -> bool {
    is_valid_set(shape, &x.occupied)
}

pub fn is_valid_set(shape: &Shape, occ: &BTreeSet<Site>) -> bool {
    occ.iter().all(|&a| shape.conflicts_of(a).all(|b| b == a || !occ.contains(&b)))
}

/// First overlapping pair, if any.
pub fn first_overlap(shape: &Shape, occ: &BTreeSet<Site>) -> Option<(Site, Site)> {
    for &a in occ {
        for b in shape.conflicts_of(a) {
            if b != a && occ.contains(&b) {
                return Some((a.min(b), a.max(b)));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::PeriodicGraph;

    #[test]
    fn basic_validity() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, Shape::staircase_descriptor(3)).unwrap();
        assert!(is_valid(&s, &Configuration::default()));
        assert!(!is_valid(&s, &Configuration::new([Site::xy(0, 0), Site::xy(1, 0)])));
        let patch: Vec<Site> = [(0, 0), (2, 1), (-2, -1), (-3, 2), (3, -2), (1, -3), (-1, 3)]
            .iter()
            .map(|&(x, y)| Site::xy(x, y))
            .collect();
        assert!(is_valid(&s, &Configuration::new(patch)));
    }
}
