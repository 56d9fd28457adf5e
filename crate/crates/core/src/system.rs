//! A model with its ground states, and configurations that agree with a ground state off a finite region.

use std::collections::BTreeSet;

use crate::config::is_valid_set;
use crate::error::{Error, Result};
use crate::ground::{mu_and_reff, GroundData, GroundState};
use crate::lattice::{PeriodicGraph, Region, Site, V3};
use crate::rational::Q;
use crate::shape::Shape;

#[derive(Clone, Debug)]
pub struct System {
    pub g: PeriodicGraph,
    pub shape: Shape,
    pub grounds: Vec<GroundData>,
    pub r2: u32,
    pub mu: Q,
    pub r_eff: u32,
    pub rho_max: Q,
}

/// Largest graph distance between two anchors whose particles overlap.
pub fn overlap_reach(g: &PeriodicGraph, shape: &Shape) -> Result<u32> {
    let mut best = 0;
    for c in 0..g.num_cells() {
        let a = Site::new([0; 3], c as u16);
        for b in shape.conflicts_of(a) {
            best = best.max(g.distance(a, b)?);
        }
    }
    Ok(best)
}

/// Smallest coarse-graining radius with `R2 >= R0`, `R2 > overlap reach`, `R2 >= R1`.
pub fn minimal_r2(g: &PeriodicGraph, shape: &Shape, r0: u32, r1: u32) -> Result<u32> {
    Ok(r0.max(r1).max(overlap_reach(g, shape)? + 1))
}

impl System {
    pub fn new(g: PeriodicGraph, shape: Shape, ground_states: Vec<GroundState>, r2: u32) -> Result<System> {
        if ground_states.is_empty() {
            return Err(Error::InvalidGroundState("no ground states".into()));
        }
        let grounds = ground_states
            .into_iter()
            .map(|gs| GroundData::new(&g, &shape, gs))
            .collect::<Result<Vec<_>>>()?;
        let (mu, r_eff) = mu_and_reff(&g, &grounds)?;
        let rho_max = grounds[0].gs.density(&g);
        for d in &grounds {
            if d.gs.density(&g) != rho_max {
                return Err(Error::InvalidGroundState("ground states with different densities".into()));
            }
        }
        Ok(System { g, shape, grounds, r2, mu, r_eff, rho_max })
    }

    pub fn ground(&self, k: usize) -> &GroundState {
        &self.grounds[k].gs
    }

    /// Radius around a modified region inside which particles are classified.
    pub fn zone_pad(&self) -> i32 {
        let a = self.shape.reach();
        let r = self.r_eff as i32;
        self.r2 as i32 + 5 * r + 3 * a + 6
    }

    /// Extra margin beyond the zone so that classified cells are exact.
    pub fn frame_pad(&self) -> i32 {
        self.zone_pad() + self.r2 as i32 + 2 * self.r_eff as i32 + 2 * self.shape.reach() + 6
    }

    /// Whether `s` is an anchor of ground state `k`.
    pub fn in_ground(&self, k: usize, s: &Site) -> bool {
        self.grounds[k].gs.contains(s)
    }
}

/// `X = (L^base \ region) ∪ inside`, with `inside ⊆ region`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Patch {
    pub base: usize,
    pub region: Region,
    pub inside: BTreeSet<Site>,
}

impl Patch {
    pub fn ground(base: usize) -> Patch {
        Patch { base, region: Region::new(), inside: BTreeSet::new() }
    }

    pub fn new(base: usize, region: Region, inside: impl IntoIterator<Item = Site>) -> Result<Patch> {
        let inside: BTreeSet<Site> = inside.into_iter().collect();
        if let Some(s) = inside.iter().find(|s| !region.contains(s)) {
            return Err(Error::InvalidConfiguration(format!("{s:?} lies outside the modified region")));
        }
        Ok(Patch { base, region, inside })
    }

    pub fn contains(&self, sys: &System, s: &Site) -> bool {
        if self.region.contains(s) {
            self.inside.contains(s)
        } else {
            sys.in_ground(self.base, s)
        }
    }

    pub fn particles_in_box(&self, sys: &System, lo: V3, hi: V3) -> BTreeSet<Site> {
        let mut out: BTreeSet<Site> =
            sys.ground(self.base).sites_in_box(&sys.g, lo, hi).into_iter().filter(|s| !self.region.contains(s)).collect();
        out.extend(self.inside.iter().filter(|s| (0..3).all(|i| s.t[i] >= lo[i] && s.t[i] <= hi[i])));
        out
    }

    /// Hard-core validity; only pairs near the region need checking.
    pub fn is_valid(&self, sys: &System) -> bool {
        if self.region.is_empty() {
            return true;
        }
        let (lo, hi) = sys.g.bounding_box(&self.region, 2 * sys.shape.exclusion_reach() + 2);
        is_valid_set(&sys.shape, &self.particles_in_box(sys, lo, hi))
    }

    /// Particles inside the region.
    pub fn count(&self) -> usize {
        self.inside.len()
    }
}
