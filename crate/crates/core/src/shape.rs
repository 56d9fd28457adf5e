//! Particle shapes: discrete supports and exclusion sets.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{vneg, vsub, PeriodicGraph, Site, V3};
use crate::rational::{fmt_q, parse_q, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ShapeDescriptor {
    /// Support offsets relative to the anchor (same cell class).
    Polyomino(Vec<V3>),
    /// Open disk of the given radius around the anchor position.
    DiskRadius(Q),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DescriptorRepr {
    Polyomino(Vec<Vec<i32>>),
    DiskRadius(String),
}

impl Serialize for ShapeDescriptor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ShapeDescriptor::Polyomino(v) => {
                DescriptorRepr::Polyomino(v.iter().map(|o| o.to_vec()).collect()).serialize(s)
            }
            ShapeDescriptor::DiskRadius(r) => DescriptorRepr::DiskRadius(fmt_q(r)).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ShapeDescriptor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match DescriptorRepr::deserialize(d)? {
            DescriptorRepr::Polyomino(v) => {
                let mut out = Vec::new();
                for o in v {
                    if o.is_empty() || o.len() > 3 {
                        return Err(serde::de::Error::custom("polyomino offset must have 1..=3 entries"));
                    }
                    let mut t = [0i32; 3];
                    t[..o.len()].copy_from_slice(&o);
                    out.push(t);
                }
                Ok(ShapeDescriptor::Polyomino(out))
            }
            DescriptorRepr::DiskRadius(r) => {
                Ok(ShapeDescriptor::DiskRadius(parse_q(&r).map_err(serde::de::Error::custom)?))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Shape {
    pub descriptor: ShapeDescriptor,
    /// Support sites per anchor cell class, relative to a zero translation.
    pub support: Vec<Vec<Site>>,
    /// Per anchor cell: (other cell, translation difference) pairs that overlap, including self.
    pub exclusion: Vec<Vec<(u16, V3)>>,
    excl_set: HashSet<(u16, u16, V3)>,
    /// Largest graph distance between two overlapping anchors.
    pub diameter: u32,
}

impl Shape {
    pub fn build(g: &PeriodicGraph, descriptor: ShapeDescriptor) -> Result<Shape> {
        let nc = g.num_cells();
        let mut support = Vec::with_capacity(nc);
        match &descriptor {
            ShapeDescriptor::Polyomino(offsets) => {
                if offsets.iter().any(|o| o[g.dim..].iter().any(|&x| x != 0)) {
                    return Err(Error::InvalidShape("offset exceeds lattice dimension".into()));
                }
                if !offsets.contains(&[0, 0, 0]) {
                    return Err(Error::InvalidShape("support must contain the anchor offset 0".into()));
                }
                for c in 0..nc {
                    let set: BTreeSet<Site> = offsets.iter().map(|&o| Site::new(o, c as u16)).collect();
                    support.push(set.into_iter().collect::<Vec<_>>());
                }
            }
            ShapeDescriptor::DiskRadius(r) => {
                if *r <= Q::from_integer(0) {
                    return Err(Error::InvalidShape("radius must be positive".into()));
                }
                let r2 = r * r;
                let bound = translation_bound(g, r2.to_f64_lossy());
                for c in 0..nc {
                    let anchor = Site::new([0, 0, 0], c as u16);
                    let mut v = Vec::new();
                    for t in box_iter(g.dim, bound) {
                        for c2 in 0..nc {
                            let s = Site::new(t, c2 as u16);
                            if g.dist2(anchor, s) < r2 {
                                v.push(s);
                            }
                        }
                    }
                    v.sort();
                    support.push(v);
                }
            }
        }
        for sup in &support {
            if !induces_connected(g, sup) {
                return Err(Error::DisconnectedSupport);
            }
        }
        let mut exclusion = vec![Vec::new(); nc];
        match &descriptor {
            ShapeDescriptor::Polyomino(_) => {
                for c in 0..nc {
                    let mut set = BTreeSet::new();
                    for a in &support[c] {
                        for b in &support[c] {
                            // anchor y = x + (a - b) puts b of y onto a of x
                            set.insert((c as u16, vsub(a.t, b.t)));
                        }
                    }
                    exclusion[c] = set.into_iter().collect();
                }
            }
            ShapeDescriptor::DiskRadius(r) => {
                let lim = Q::from_integer(4) * r * r;
                let bound = translation_bound(g, lim.to_f64_lossy());
                for c in 0..nc {
                    let anchor = Site::new([0, 0, 0], c as u16);
                    for t in box_iter(g.dim, bound) {
                        for c2 in 0..nc {
                            let s = Site::new(t, c2 as u16);
                            if g.dist2(anchor, s) < lim {
                                exclusion[c].push((c2 as u16, t));
                            }
                        }
                    }
                    exclusion[c].sort();
                }
            }
        }
        let mut excl_set = HashSet::new();
        let mut diameter = 0;
        for c in 0..nc {
            for &(c2, t) in &exclusion[c] {
                excl_set.insert((c as u16, c2, t));
                diameter = diameter.max(g.distance(Site::new([0, 0, 0], c as u16), Site::new(t, c2))?);
            }
        }
        for &(a, b, t) in &excl_set {
            debug_assert!(excl_set.contains(&(b, a, vneg(t))));
        }
        Ok(Shape { descriptor, support, exclusion, excl_set, diameter })
    }

    /// The n-staircase `{(x, y) : x, y >= 0, x + y <= n - 1}` on Z^2.
    pub fn staircase_descriptor(n: i32) -> ShapeDescriptor {
        let mut v = Vec::new();
        for x in 0..n {
            for y in 0..n - x {
                v.push([x, y, 0]);
            }
        }
        ShapeDescriptor::Polyomino(v)
    }

    pub fn support_of(&self, x: Site) -> impl Iterator<Item = Site> + '_ {
        self.support[x.cell as usize].iter().map(move |s| s.shift(x.t))
    }

    pub fn support_size(&self, cell: u16) -> usize {
        self.support[cell as usize].len()
    }

    /// True when particles anchored at `a` and `b` overlap (also for a == b).
    pub fn overlaps(&self, a: Site, b: Site) -> bool {
        self.excl_set.contains(&(a.cell, b.cell, vsub(b.t, a.t)))
    }

    /// Anchors overlapping a particle at `x`, including `x`.
    pub fn conflicts_of(&self, x: Site) -> impl Iterator<Item = Site> + '_ {
        self.exclusion[x.cell as usize].iter().map(move |&(c, t)| Site::new(crate::lattice::vadd(x.t, t), c))
    }

    /// Largest translation coordinate occurring in any support.
    pub fn reach(&self) -> i32 {
        self.support.iter().flatten().flat_map(|s| s.t.iter().map(|x| x.abs())).max().unwrap_or(0)
    }

    /// Largest translation coordinate of an exclusion displacement.
    pub fn exclusion_reach(&self) -> i32 {
        self.exclusion.iter().flatten().flat_map(|(_, t)| t.iter().map(|x| x.abs())).max().unwrap_or(0)
    }

    pub fn exclusion_len(&self, cell: u16) -> usize {
        self.exclusion[cell as usize].len()
    }
}

trait LossyF64 {
    fn to_f64_lossy(&self) -> f64;
}

impl LossyF64 for Q {
    fn to_f64_lossy(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Translation box radius outside which every site is farther than sqrt(r2) from the cell origin.
fn translation_bound(g: &PeriodicGraph, r2: f64) -> i32 {
    let lam = g.min_translation_norm2().max(1e-9);
    (r2 / lam).sqrt().ceil() as i32 + 2
}

fn box_iter(dim: usize, b: i32) -> Vec<V3> {
    let mut out = Vec::new();
    let r = |i: usize| if i < dim { -b..=b } else { 0..=0 };
    for x in r(0) {
        for y in r(1) {
            for z in r(2) {
                out.push([x, y, z]);
            }
        }
    }
    out
}

fn induces_connected(g: &PeriodicGraph, sites: &[Site]) -> bool {
    if sites.is_empty() {
        return false;
    }
    let set: HashSet<Site> = sites.iter().copied().collect();
    let mut seen = HashSet::from([sites[0]]);
    let mut queue = VecDeque::from([sites[0]]);
    while let Some(s) = queue.pop_front() {
        for n in g.neighbors(s) {
            if set.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == set.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn staircase_supports() {
        let g = PeriodicGraph::z2();
        for n in 3..=5 {
            let s = Shape::build(&g, Shape::staircase_descriptor(n)).unwrap();
            assert_eq!(s.support[0].len() as i32, n * (n + 1) / 2);
        }
    }

    #[test]
    fn disk_support_and_exclusion() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, ShapeDescriptor::DiskRadius(q(5, 2))).unwrap();
        assert_eq!(s.support[0].len(), 21);
        // Squared distances 1..=24 excluded, 25 allowed.
        assert!(s.overlaps(Site::xy(0, 0), Site::xy(4, 2)));
        assert!(!s.overlaps(Site::xy(0, 0), Site::xy(5, 0)));
        assert!(!s.overlaps(Site::xy(0, 0), Site::xy(3, 4)));
        let mut norms: Vec<i32> = s.exclusion[0].iter().map(|(_, t)| t[0] * t[0] + t[1] * t[1]).collect();
        norms.sort();
        norms.dedup();
        assert_eq!(norms.len(), 13); // 0 plus the 12 excluded shells
    }

    #[test]
    fn staircase_overlap() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, Shape::staircase_descriptor(3)).unwrap();
        assert!(s.overlaps(Site::xy(0, 0), Site::xy(1, 0)));
        assert!(!s.overlaps(Site::xy(0, 0), Site::xy(2, 1)));
        assert_eq!(s.diameter, 4);
    }

    #[test]
    fn disconnected_polyomino_rejected() {
        let g = PeriodicGraph::z2();
        let r = Shape::build(&g, ShapeDescriptor::Polyomino(vec![[0, 0, 0], [2, 0, 0]]));
        assert_eq!(r.unwrap_err(), Error::DisconnectedSupport);
    }

    #[test]
    fn descriptor_json() {
        let d: ShapeDescriptor = serde_json::from_str(r#"{"disk_radius":"5/2"}"#).unwrap();
        assert_eq!(d, ShapeDescriptor::DiskRadius(q(5, 2)));
        let p: ShapeDescriptor = serde_json::from_str(r#"{"polyomino":[[0,0],[1,0]]}"#).unwrap();
        assert_eq!(p, ShapeDescriptor::Polyomino(vec![[0, 0, 0], [1, 0, 0]]));
    }

    #[test]
    fn disks_on_skew_lattices() {
        let g = PeriodicGraph::triangular();
        let s = Shape::build(&g, ShapeDescriptor::DiskRadius(q(11, 10))).unwrap();
        assert_eq!(s.support[0].len(), 7);
        let h = PeriodicGraph::honeycomb();
        let s = Shape::build(&h, ShapeDescriptor::DiskRadius(q(3, 5))).unwrap();
        // Nearest-neighbour distance is 1/sqrt(3) < 3/5.
        assert_eq!(s.support[0].len(), 4);
        assert_eq!(s.support[1].len(), 4);
    }
}
