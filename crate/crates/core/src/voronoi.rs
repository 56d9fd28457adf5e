//! Discrete Voronoi cells by multi-source BFS, keeping every tie.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use num_rational::Ratio;
use serde::Serialize;
use smallvec::SmallVec;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::lattice::{PeriodicGraph, Region, Site, Window};
use crate::rational::Q;
use crate::shape::Shape;

pub type Owners = SmallVec<[u32; 4]>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VoronoiCell {
    pub owner: Site,
    pub sites: Region,
}

/// All cells of a finite configuration on a box window.
#[derive(Clone, Debug)]
pub struct Voronoi {
    pub win: Arc<Window>,
    pub particles: Vec<Site>,
    pub pindex: HashMap<Site, u32>,
    pub dist: Vec<u32>,
    pub owners: Vec<Owners>,
    pub cells: Vec<Vec<u32>>,
    pub unbounded: Vec<bool>,
    /// Per site: distance and owners agree with the untruncated configuration.
    /// `None` when nothing lies outside the window.
    pub exact: Option<Vec<bool>>,
}

fn merge(into: &mut Owners, from: &Owners) {
    for &o in from {
        if let Err(pos) = into.binary_search(&o) {
            into.insert(pos, o);
        }
    }
}

impl Voronoi {
    /// Window is the translation bounding box of all supports padded by `margin`.
    pub fn new(g: &PeriodicGraph, shape: &Shape, particles: &BTreeSet<Site>, margin: i32) -> Voronoi {
        let mut cover = Region::new();
        for &p in particles {
            cover.extend(shape.support_of(p));
        }
        let win = if cover.is_empty() {
            Window::from_sites(g, [])
        } else {
            let (lo, hi) = g.bounding_box(&cover, margin);
            Window::boxed(g, lo, hi)
        };
        Voronoi::on_window(shape, particles, win)
    }

    /// Particles whose support leaves the window are dropped as sources and flagged unbounded.
    pub fn on_window(shape: &Shape, particles: &BTreeSet<Site>, win: impl Into<Arc<Window>>) -> Voronoi {
        let win: Arc<Window> = win.into();
        let particles: Vec<Site> = particles.iter().copied().collect();
        let pindex: HashMap<Site, u32> = particles.iter().enumerate().map(|(i, &s)| (s, i as u32)).collect();
        let n = win.len();
        let mut dist = vec![u32::MAX; n];
        let mut owners: Vec<Owners> = vec![Owners::new(); n];
        let mut unbounded = vec![false; particles.len()];
        let mut frontier: Vec<usize> = Vec::new();
        for (pi, &p) in particles.iter().enumerate() {
            for s in shape.support_of(p) {
                match win.get(&s) {
                    Some(i) => {
                        if dist[i] != 0 {
                            dist[i] = 0;
                            frontier.push(i);
                        }
                        let o: Owners = SmallVec::from_slice(&[pi as u32]);
                        merge(&mut owners[i], &o);
                    }
                    None => unbounded[pi] = true,
                }
            }
        }
        let mut k = 0u32;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &i in &frontier {
                for jj in 0..win.nbrs[i].len() {
                    let j = win.nbrs[i][jj] as usize;
                    if dist[j] == u32::MAX {
                        dist[j] = k + 1;
                        owners[j] = owners[i].clone();
                        next.push(j);
                    } else if dist[j] == k + 1 {
                        let (a, b) = if i < j {
                            let (l, r) = owners.split_at_mut(j);
                            (&mut r[0], &l[i])
                        } else {
                            let (l, r) = owners.split_at_mut(i);
                            (&mut l[j], &r[0])
                        };
                        merge(a, b);
                    }
                }
            }
            frontier = next;
            k += 1;
        }
        let mut cells = vec![Vec::new(); particles.len()];
        for (i, os) in owners.iter().enumerate() {
            for &o in os {
                cells[o as usize].push(i as u32);
                if win.border[i] {
                    unbounded[o as usize] = true;
                }
            }
        }
        Voronoi { win, particles, pindex, dist, owners, cells, unbounded, exact: None }
    }

    /// For a window cut out of an infinite configuration. Sites closer to the
    /// window edge than to their nearest support are untrusted, and so is every
    /// particle whose cell touches or borders such a site.
    pub fn on_window_open(shape: &Shape, particles: &BTreeSet<Site>, win: impl Into<Arc<Window>>) -> Voronoi {
        let mut v = Voronoi::on_window(shape, particles, win);
        for u in v.unbounded.iter_mut() {
            *u = false;
        }
        for (pi, &p) in v.particles.iter().enumerate() {
            if shape.support_of(p).any(|s| v.win.get(&s).is_none()) {
                v.unbounded[pi] = true;
            }
        }
        let border: Vec<usize> = (0..v.win.len()).filter(|&i| v.win.border[i]).collect();
        let bd = v.win.bfs(&border, u32::MAX);
        let exact: Vec<bool> = (0..v.win.len()).map(|i| bd[i] != u32::MAX && bd[i] + 1 > v.dist[i] && v.dist[i] != u32::MAX).collect();
        for (pi, cell) in v.cells.iter().enumerate() {
            let bad = cell.iter().any(|&i| {
                let i = i as usize;
                !exact[i] || v.win.border[i] || v.win.nbrs[i].iter().any(|&j| !exact[j as usize])
            });
            if bad {
                v.unbounded[pi] = true;
            }
        }
        v.exact = Some(exact);
        v
    }

    fn site_ok(&self, i: usize) -> bool {
        self.exact.as_ref().is_none_or(|e| e[i])
    }

    pub fn index_of(&self, x: &Site) -> Result<usize> {
        self.pindex
            .get(x)
            .map(|&i| i as usize)
            .ok_or_else(|| Error::InvalidConfiguration(format!("{x:?} is not an occupied site")))
    }

    pub fn is_bounded(&self, p: usize) -> bool {
        !self.unbounded[p]
    }

    pub fn cell(&self, p: usize) -> Result<&[u32]> {
        if self.unbounded[p] {
            Err(Error::UnboundedCell)
        } else {
            Ok(&self.cells[p])
        }
    }

    pub fn cell_region(&self, p: usize) -> Result<Region> {
        Ok(self.cell(p)?.iter().map(|&i| self.win.sites[i as usize]).collect())
    }

    /// Sum over the cell of 1 / (number of cells sharing the site).
    pub fn inv_density(&self, p: usize) -> Result<Q> {
        let mut acc = Ratio::from_integer(0i64);
        for &i in self.cell(p)? {
            acc += Ratio::new(1, self.owners[i as usize].len() as i64);
        }
        Ok(acc)
    }

    pub fn local_density(&self, p: usize) -> Result<Q> {
        Ok(self.inv_density(p)?.recip())
    }

    /// Particles whose cells lie within distance `r` of the cell of `p` (includes `p`).
    pub fn r_neighbors(&self, p: usize, r: u32) -> Result<Vec<usize>> {
        let cell = self.cell(p)?;
        let mut found: BTreeSet<usize> = BTreeSet::new();
        let mut depth: HashMap<u32, u32> = cell.iter().map(|&i| (i, 0)).collect();
        let mut frontier: Vec<u32> = cell.to_vec();
        for &i in cell {
            found.extend(self.owners[i as usize].iter().map(|&o| o as usize));
        }
        for k in 1..=r {
            let mut next = Vec::new();
            for &i in &frontier {
                if self.win.border[i as usize] {
                    return Err(Error::UnboundedCell);
                }
                for &j in &self.win.nbrs[i as usize] {
                    if let std::collections::hash_map::Entry::Vacant(e) = depth.entry(j) {
                        if !self.site_ok(j as usize) {
                            return Err(Error::UnboundedCell);
                        }
                        e.insert(k);
                        next.push(j);
                        found.extend(self.owners[j as usize].iter().map(|&o| o as usize));
                    }
                }
            }
            frontier = next;
        }
        Ok(found.into_iter().collect())
    }

    pub fn neighbors(&self, p: usize) -> Result<Vec<usize>> {
        self.r_neighbors(p, 1)
    }

    pub fn voronoi_cell(&self, p: usize) -> Result<VoronoiCell> {
        Ok(VoronoiCell { owner: self.particles[p], sites: self.cell_region(p)? })
    }

    /// Union of all bounded cells.
    pub fn covered(&self) -> usize {
        self.owners.iter().filter(|o| !o.is_empty()).count()
    }
}

pub fn voronoi_cell(g: &PeriodicGraph, shape: &Shape, x: &Configuration, site: Site, margin: i32) -> Result<VoronoiCell> {
    let v = Voronoi::new(g, shape, &x.occupied, margin);
    let p = v.index_of(&site)?;
    v.voronoi_cell(p)
}

pub fn local_density(g: &PeriodicGraph, shape: &Shape, x: &Configuration, site: Site, margin: i32) -> Result<Q> {
    let v = Voronoi::new(g, shape, &x.occupied, margin);
    let p = v.index_of(&site)?;
    v.local_density(p)
}

pub fn neighbors(g: &PeriodicGraph, shape: &Shape, x: &Configuration, site: Site, margin: i32) -> Result<BTreeSet<Site>> {
    r_neighbors(g, shape, x, site, 1, margin)
}

pub fn r_neighbors(
    g: &PeriodicGraph,
    shape: &Shape,
    x: &Configuration,
    site: Site,
    r: u32,
    margin: i32,
) -> Result<BTreeSet<Site>> {
    let v = Voronoi::new(g, shape, &x.occupied, margin);
    let p = v.index_of(&site)?;
    Ok(v.r_neighbors(p, r)?.into_iter().map(|i| v.particles[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::shape::ShapeDescriptor;

    fn lattice_patch(gens: [[i32; 2]; 2], radius: i32) -> BTreeSet<Site> {
        let mut out = BTreeSet::new();
        for a in -radius..=radius {
            for b in -radius..=radius {
                out.insert(Site::xy(a * gens[0][0] + b * gens[1][0], a * gens[0][1] + b * gens[1][1]));
            }
        }
        out
    }

    #[test]
    fn staircase_ground_state_cell() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, Shape::staircase_descriptor(3)).unwrap();
        let x = lattice_patch([[2, 1], [-3, 2]], 6);
        let v = Voronoi::new(&g, &s, &x, 2);
        let p = v.index_of(&Site::xy(0, 0)).unwrap();
        assert_eq!(v.cell(p).unwrap().len(), 9);
        assert_eq!(v.local_density(p).unwrap(), q(1, 7));
        assert_eq!(v.neighbors(p).unwrap().len(), 7);
    }

    #[test]
    fn four_staircase_density() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, Shape::staircase_descriptor(4)).unwrap();
        let x = lattice_patch([[2, 2], [-4, 2]], 6);
        let v = Voronoi::new(&g, &s, &x, 2);
        let p = v.index_of(&Site::xy(0, 0)).unwrap();
        assert_eq!(v.local_density(p).unwrap(), q(1, 12));
    }

    #[test]
    fn disk_ground_state_cell() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, ShapeDescriptor::DiskRadius(q(5, 2))).unwrap();
        let x = lattice_patch([[5, 1], [-3, 4]], 5);
        let x: BTreeSet<Site> = x.into_iter().collect();
        let v = Voronoi::new(&g, &s, &x, 2);
        let p = v.index_of(&Site::xy(0, 0)).unwrap();
        assert_eq!(v.cell(p).unwrap().len(), 27);
        assert_eq!(v.local_density(p).unwrap(), q(1, 23));
    }

    #[test]
    fn isolated_particle_is_its_own_neighbor() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, Shape::staircase_descriptor(3)).unwrap();
        let x = Configuration::new([Site::xy(0, 0)]);
        // A lone particle's cell is the whole window, hence unbounded.
        assert_eq!(neighbors(&g, &s, &x, Site::xy(0, 0), 3).unwrap_err(), Error::UnboundedCell);
    }

    #[test]
    fn pair_bisects_window() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, ShapeDescriptor::Polyomino(vec![[0, 0, 0]])).unwrap();
        let x: BTreeSet<Site> = [Site::xy(0, 0), Site::xy(6, 0)].into_iter().collect();
        let v = Voronoi::new(&g, &s, &x, 3);
        let a = v.cells[0].len();
        let b = v.cells[1].len();
        assert_eq!(a, b);
    }
}
