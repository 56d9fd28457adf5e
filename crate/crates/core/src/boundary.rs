//! The `#` boundary condition on a finite region and exact partition functions under it.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::correct::{Classifier, Label};
use crate::enumerate::{bits, independent_sets, ConflictGraph, Counter, PartitionResult};
use crate::error::{Error, Result};
use crate::lattice::{Region, Site, Window, V3};
use crate::system::{Patch, System};
use crate::voronoi::Voronoi;

fn in_box(s: &Site, lo: V3, hi: V3) -> bool {
    (0..3).all(|i| s.t[i] >= lo[i] && s.t[i] <= hi[i])
}

/// Sites of Λ at graph distance at most `depth` from its complement.
pub fn rim(sys: &System, lambda: &Region, depth: u32) -> Region {
    let (_, outer) = sys.g.boundaries(lambda);
    let mut dist: std::collections::HashMap<Site, u32> = outer.iter().map(|s| (*s, 0)).collect();
    let mut queue: VecDeque<Site> = outer.into_iter().collect();
    let mut out = Region::new();
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        if d >= depth {
            continue;
        }
        for n in sys.g.neighbors(s) {
            if lambda.contains(&n) && !dist.contains_key(&n) {
                dist.insert(n, d + 1);
                out.insert(n);
                queue.push_back(n);
            }
        }
    }
    out
}

/// Precomputed geometry for repeated boundary-condition checks on one window.
pub struct OmegaCheck {
    lambda: Region,
    inner: Region,
    lo: V3,
    hi: V3,
    zone: (V3, V3),
    win: Arc<Window>,
}

impl OmegaCheck {
    pub fn new(sys: &System, lambda: &Region) -> OmegaCheck {
        let g = &sys.g;
        let (lo, hi) = g.bounding_box(lambda, sys.frame_pad());
        let zone = g.bounding_box(lambda, sys.zone_pad());
        let (inner, _) = g.boundaries(lambda);
        OmegaCheck { lambda: lambda.clone(), inner, lo, hi, zone, win: Arc::new(Window::boxed(g, lo, hi)) }
    }

    /// Every particle whose cell comes within distance one of Λ^c is (#, R2)-correct,
    /// with `#` the patch's base ground state.
    pub fn check(&self, sys: &System, patch: &Patch) -> Result<bool> {
        let lambda = &self.lambda;
        if lambda.is_empty() {
            return Ok(patch.inside.is_empty());
        }
        if !patch.region.is_subset(lambda) {
            return Err(Error::InvalidBoundary("modified region leaves the window".into()));
        }
        let parts = patch.particles_in_box(sys, self.lo, self.hi);
        let vor = Voronoi::on_window_open(&sys.shape, &parts, self.win.clone());
        let near = |s: &Site| !lambda.contains(s) || self.inner.contains(s);
        let mut order = Vec::new();
        for (p, x) in vor.particles.iter().enumerate() {
            if !in_box(x, self.zone.0, self.zone.1) {
                continue;
            }
            let cell = vor
                .cell(p)
                .map_err(|_| Error::RadiusInsufficient(format!("cell of {x:?} not resolved")))?;
            if cell.iter().any(|&i| near(&vor.win.sites[i as usize])) {
                order.push((!lambda.contains(x), p));
            }
        }
        order.sort();
        let mut c = Classifier::new(&vor, &sys.grounds, sys.r2);
        for (_, p) in order {
            match c.label(p) {
                Label::RCorrect(k) if k == patch.base => {}
                Label::Unknown => {
                    return Err(Error::RadiusInsufficient(format!(
                        "particle {:?} could not be classified",
                        vor.particles[p]
                    )))
                }
                _ => return Ok(false),
            }
        }
        Ok(true)
    }
}

pub fn in_omega(sys: &System, patch: &Patch, lambda: &Region) -> Result<bool> {
    OmegaCheck::new(sys, lambda).check(sys, patch)
}

#[derive(Clone, Debug)]
pub struct XiOptions {
    /// Largest number of free sites.
    pub cap: usize,
    /// Largest number of candidate configurations examined.
    pub limit: usize,
    /// Fix the rim of depth R2 + 1 to the ground state (sound under the boundary condition).
    pub forced: bool,
    /// Keep the admissible configurations.
    pub keep: bool,
}

impl Default for XiOptions {
    fn default() -> Self {
        XiOptions { cap: 64, limit: 2_000_000, forced: true, keep: false }
    }
}

#[derive(Clone, Debug)]
pub struct SharpPartition {
    /// Coefficient k counts admissible configurations with k particles anchored in Λ.
    pub poly: PartitionResult,
    pub configurations: Vec<Patch>,
    pub examined: usize,
    pub free_sites: usize,
    /// |L^# ∩ Λ|.
    pub ground_count: usize,
}

/// Exact `Ξ^#(Λ)` by enumerating the free sites and filtering by the boundary condition.
pub fn xi_sharp(sys: &System, sharp: usize, lambda: &Region, opts: &XiOptions) -> Result<SharpPartition> {
    let ground_in: BTreeSet<Site> = sys.ground(sharp).sites_in(lambda);
    let fixed = if opts.forced { rim(sys, lambda, sys.r2 + 1) } else { Region::new() };
    let free: Region = lambda.difference(&fixed).copied().collect();
    let forced_in: BTreeSet<Site> = ground_in.iter().filter(|s| fixed.contains(s)).copied().collect();
    let candidates: Vec<Site> = free
        .iter()
        .filter(|c| {
            sys.shape
                .conflicts_of(**c)
                .all(|b| b == **c || free.contains(&b) || !(if lambda.contains(&b) { forced_in.contains(&b) } else { sys.in_ground(sharp, &b) }))
        })
        .copied()
        .collect();
    if candidates.len() > opts.cap {
        return Err(Error::WindowTooLarge { sites: candidates.len(), cap: opts.cap });
    }
    let cg = ConflictGraph::new(&sys.shape, &candidates, None, opts.cap)?;
    let sets = independent_sets(&cg, cg.full_mask(), opts.limit)?;
    let check = OmegaCheck::new(sys, lambda);
    let threads = crate::threads().min(sets.len().max(1));
    let chunk = sets.len().div_ceil(threads).max(1);
    let results: Vec<Result<Vec<Patch>>> = std::thread::scope(|sc| {
        let handles: Vec<_> = sets
            .chunks(chunk)
            .map(|part| {
                let (check, forced_in, ground_in, cg) = (&check, &forced_in, &ground_in, &cg);
                sc.spawn(move || {
                    let mut ok = Vec::new();
                    for m in part {
                        let mut inside = forced_in.clone();
                        inside.extend(bits(*m).map(|i| cg.sites[i]));
                        let patch = Patch { base: sharp, region: lambda.clone(), inside };
                        if patch.inside == *ground_in || check.check(sys, &patch)? {
                            ok.push(patch);
                        }
                    }
                    Ok(ok)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut coeffs: Vec<BigUint> = Vec::new();
    let mut configurations = Vec::new();
    for r in results {
        for patch in r? {
            let k = patch.inside.len();
            if coeffs.len() <= k {
                coeffs.resize(k + 1, BigUint::zero());
            }
            coeffs[k] += 1u32;
            if opts.keep {
                configurations.push(patch);
            }
        }
    }
    Ok(SharpPartition {
        poly: PartitionResult { coeffs },
        configurations,
        examined: sets.len(),
        free_sites: candidates.len(),
        ground_count: ground_in.len(),
    })
}

/// Ξ with the exterior frozen to `L^#` and no further constraint.
pub fn xi_frozen(sys: &System, sharp: usize, lambda: &Region, cap: usize) -> Result<PartitionResult> {
    let candidates: Vec<Site> = lambda
        .iter()
        .filter(|c| sys.shape.conflicts_of(**c).all(|b| lambda.contains(&b) || !sys.in_ground(sharp, &b)))
        .copied()
        .collect();
    let cg = ConflictGraph::new(&sys.shape, &candidates, None, cap)?;
    let mut counter = Counter::new(&cg);
    Ok(PartitionResult { coeffs: (*counter.poly(cg.full_mask())).clone() })
}
