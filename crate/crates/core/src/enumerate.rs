//! Exact enumeration of hard-core configurations: independence polynomials
//! of conflict graphs with at most 128 candidate sites.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::lattice::{Region, Site, V3};
use crate::shape::Shape;

pub const DEFAULT_SITE_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundarySpec {
    Free,
    /// Periodic identification by the given translation periods.
    Torus(V3),
    /// Exterior fixed to ground state `label`.
    Ground(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionResult {
    /// coeffs[k] = number of admissible configurations with k particles in the window.
    pub coeffs: Vec<BigUint>,
}

impl PartitionResult {
    pub fn k_max(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn top(&self) -> &BigUint {
        self.coeffs.last().expect("non-empty polynomial")
    }

    pub fn eval(&self, z: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z + BigRational::from_integer(BigInt::from(c.clone()));
        }
        acc
    }

    pub fn total(&self) -> BigUint {
        self.coeffs.iter().sum()
    }

    pub fn to_json(&self) -> Value {
        let m: BTreeMap<String, String> =
            self.coeffs.iter().enumerate().map(|(k, c)| (k.to_string(), c.to_string())).collect();
        json!({ "coeffs": m })
    }

    pub fn from_counts(counts: &[u64]) -> Self {
        PartitionResult { coeffs: counts.iter().map(|&c| BigUint::from(c)).collect() }
    }
}

/// Conflict graph on candidate sites (bit i = sites[i]).
#[derive(Clone, Debug)]
pub struct ConflictGraph {
    pub sites: Vec<Site>,
    /// Closed neighbourhoods (each includes its own bit).
    pub nbhd: Vec<u128>,
}

fn wrap(t: V3, periods: V3) -> V3 {
    let mut w = t;
    for i in 0..3 {
        if periods[i] > 0 {
            w[i] = t[i].rem_euclid(periods[i]);
        }
    }
    w
}

impl ConflictGraph {
    /// Candidates are `sites`; `periods` (if given) identifies translations modulo each positive period.
    /// Sites that conflict with their own periodic image are dropped.
    pub fn new(shape: &Shape, sites: &[Site], periods: Option<V3>, cap: usize) -> Result<Self> {
        let mut usable: Vec<Site> = Vec::new();
        for &s in sites {
            let ok = match periods {
                None => true,
                Some(p) => shape.conflicts_of(s).all(|b| b == s || Site::new(wrap(b.t, p), b.cell) != wrap_site(s, p)),
            };
            if ok {
                usable.push(match periods {
                    Some(p) => wrap_site(s, p),
                    None => s,
                });
            }
        }
        usable.sort();
        usable.dedup();
        if usable.len() > cap.min(128) {
            return Err(Error::WindowTooLarge { sites: usable.len(), cap: cap.min(128) });
        }
        let index: HashMap<Site, usize> = usable.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut nbhd = vec![0u128; usable.len()];
        for (i, &s) in usable.iter().enumerate() {
            nbhd[i] |= 1u128 << i;
            for b in shape.conflicts_of(s) {
                let b = match periods {
                    Some(p) => wrap_site(b, p),
                    None => b,
                };
                if let Some(&j) = index.get(&b) {
                    nbhd[i] |= 1u128 << j;
                    nbhd[j] |= 1u128 << i;
                }
            }
        }
        Ok(ConflictGraph { sites: usable, nbhd })
    }

    pub fn full_mask(&self) -> u128 {
        if self.sites.len() == 128 {
            u128::MAX
        } else {
            (1u128 << self.sites.len()) - 1
        }
    }

    pub fn config_of(&self, mask: u128) -> Configuration {
        Configuration::new(bits(mask).map(|i| self.sites[i]))
    }
}

fn wrap_site(s: Site, p: V3) -> Site {
    Site::new(wrap(s.t, p), s.cell)
}

pub fn bits(mut m: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

/// Memoized independence polynomial restricted to an available set.
pub struct Counter<'a> {
    g: &'a ConflictGraph,
    memo: HashMap<u128, Rc<Vec<BigUint>>>,
    alpha: HashMap<u128, u32>,
}

fn add_into(acc: &mut Vec<BigUint>, p: &[BigUint], shift: usize) {
    if acc.len() < p.len() + shift {
        acc.resize(p.len() + shift, BigUint::zero());
    }
    for (k, c) in p.iter().enumerate() {
        acc[k + shift] += c;
    }
}

impl<'a> Counter<'a> {
    pub fn new(g: &'a ConflictGraph) -> Self {
        Counter { g, memo: HashMap::new(), alpha: HashMap::new() }
    }

    pub fn poly(&mut self, avail: u128) -> Rc<Vec<BigUint>> {
        if avail == 0 {
            return Rc::new(vec![BigUint::one()]);
        }
        if let Some(p) = self.memo.get(&avail) {
            return p.clone();
        }
        let v = avail.trailing_zeros() as usize;
        let skip = self.poly(avail & !(1u128 << v));
        let take = self.poly(avail & !self.g.nbhd[v]);
        let mut acc = (*skip).clone();
        add_into(&mut acc, &take, 1);
        let rc = Rc::new(acc);
        self.memo.insert(avail, rc.clone());
        rc
    }

    /// Size of a maximum independent set within `avail`.
    pub fn alpha(&mut self, avail: u128) -> u32 {
        if avail == 0 {
            return 0;
        }
        if let Some(&a) = self.alpha.get(&avail) {
            return a;
        }
        let v = avail.trailing_zeros() as usize;
        let a = self.alpha(avail & !(1u128 << v)).max(1 + self.alpha(avail & !self.g.nbhd[v]));
        self.alpha.insert(avail, a);
        a
    }

    /// All maximum independent sets of `avail`, at most `limit` of them.
    pub fn maximizers(&mut self, avail: u128, limit: usize) -> Vec<u128> {
        let mut out = Vec::new();
        let target = self.alpha(avail);
        self.collect_max(avail, target, 0, &mut out, limit);
        out
    }

    fn collect_max(&mut self, avail: u128, need: u32, chosen: u128, out: &mut Vec<u128>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if need == 0 {
            out.push(chosen);
            return;
        }
        if avail == 0 || self.alpha(avail) < need {
            return;
        }
        let v = avail.trailing_zeros() as usize;
        let rest = avail & !self.g.nbhd[v];
        if self.alpha(rest) + 1 >= need {
            self.collect_max(rest, need - 1, chosen | (1u128 << v), out, limit);
        }
        let skip = avail & !(1u128 << v);
        if self.alpha(skip) >= need {
            self.collect_max(skip, need, chosen, out, limit);
        }
    }
}

/// Every independent set within `avail`; errors once more than `limit` are found.
pub fn independent_sets(g: &ConflictGraph, avail: u128, limit: usize) -> Result<Vec<u128>> {
    let mut out = Vec::new();
    fn rec(g: &ConflictGraph, avail: u128, chosen: u128, out: &mut Vec<u128>, limit: usize) -> bool {
        if avail == 0 {
            out.push(chosen);
            return out.len() <= limit;
        }
        let v = avail.trailing_zeros() as usize;
        rec(g, avail & !g.nbhd[v], chosen | (1u128 << v), out, limit) && rec(g, avail & !(1u128 << v), chosen, out, limit)
    }
    if !rec(g, avail, 0, &mut out, limit) {
        return Err(Error::CapExceeded(format!("more than {limit} configurations")));
    }
    Ok(out)
}

/// Exact Xi for free or periodic boundaries.
pub fn partition_function(shape: &Shape, window: &Region, boundary: &BoundarySpec, cap: usize) -> Result<PartitionResult> {
    let sites: Vec<Site> = window.iter().copied().collect();
    let g = match boundary {
        BoundarySpec::Free => ConflictGraph::new(shape, &sites, None, cap)?,
        BoundarySpec::Torus(p) => ConflictGraph::new(shape, &sites, Some(*p), cap)?,
        BoundarySpec::Ground(_) => {
            return Err(Error::InvalidBoundary("ground-state boundaries need the model context".into()))
        }
    };
    let mut c = Counter::new(&g);
    let p = c.poly(g.full_mask());
    Ok(PartitionResult { coeffs: (*p).clone() })
}

#[derive(Clone, Debug)]
pub struct MaxDensity {
    pub k_max: usize,
    pub packings: Vec<Configuration>,
    /// Exact number of maximal packings (may exceed the listed ones).
    pub count: BigUint,
    pub rho: BigRational,
}

pub const DEFAULT_PACKING_LIMIT: usize = 10_000;

pub fn max_density(shape: &Shape, window: &Region, periods: Option<V3>, cap: usize) -> Result<MaxDensity> {
    let sites: Vec<Site> = window.iter().copied().collect();
    if sites.is_empty() {
        return Ok(MaxDensity {
            k_max: 0,
            packings: vec![Configuration::default()],
            count: BigUint::one(),
            rho: BigRational::zero(),
        });
    }
    let g = ConflictGraph::new(shape, &sites, periods, cap)?;
    let mut c = Counter::new(&g);
    let full = g.full_mask();
    let poly = c.poly(full);
    let k_max = poly.len() - 1;
    let packings = c.maximizers(full, DEFAULT_PACKING_LIMIT).into_iter().map(|m| g.config_of(m)).collect();
    Ok(MaxDensity {
        k_max,
        packings,
        count: poly[k_max].clone(),
        rho: BigRational::new(BigInt::from(k_max), BigInt::from(window.len())),
    })
}

pub fn box_region(lo: V3, hi: V3, cells: usize) -> Region {
    let mut r = Region::new();
    for x in lo[0]..=hi[0] {
        for y in lo[1]..=hi[1] {
            for z in lo[2]..=hi[2] {
                for c in 0..cells {
                    r.insert(Site::new([x, y, z], c as u16));
                }
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::is_valid;
    use crate::lattice::PeriodicGraph;
    use crate::rational::bigi;
    use crate::shape::ShapeDescriptor;

    #[test]
    fn single_site_particles_factorize() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, ShapeDescriptor::Polyomino(vec![[0, 0, 0]])).unwrap();
        let w = box_region([0, 0, 0], [2, 0, 0], 1);
        let p = partition_function(&s, &w, &BoundarySpec::Free, 64).unwrap();
        assert_eq!(p, PartitionResult::from_counts(&[1, 3, 3, 1]));
        assert_eq!(p.eval(&bigi(2)), bigi(27));
    }

    #[test]
    fn staircase_torus_density() {
        let g = PeriodicGraph::z2();
        let s3 = Shape::build(&g, Shape::staircase_descriptor(3)).unwrap();
        let w = box_region([0, 0, 0], [6, 6, 0], 1);
        let m = max_density(&s3, &w, Some([7, 7, 0]), 64).unwrap();
        assert_eq!(m.k_max, 7);
        assert_eq!(m.rho, crate::rational::big(1, 7));
        assert_eq!(m.count, BigUint::from(14u32));
        for p in &m.packings {
            assert!(p.len() == 7);
        }
        let s4 = Shape::build(&g, Shape::staircase_descriptor(4)).unwrap();
        let w = box_region([0, 0, 0], [5, 5, 0], 1);
        let m = max_density(&s4, &w, Some([6, 6, 0]), 64).unwrap();
        assert_eq!(m.rho, crate::rational::big(1, 12));
        assert_eq!(m.count, BigUint::from(12u32));
    }

    #[test]
    fn empty_window() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, Shape::staircase_descriptor(3)).unwrap();
        assert_eq!(max_density(&s, &Region::new(), None, 64).unwrap().k_max, 0);
    }

    #[test]
    fn cap_is_enforced() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, Shape::staircase_descriptor(3)).unwrap();
        let w = box_region([0, 0, 0], [9, 9, 0], 1);
        assert!(matches!(
            partition_function(&s, &w, &BoundarySpec::Free, 64),
            Err(Error::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn maximizers_are_valid() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, Shape::staircase_descriptor(3)).unwrap();
        let w = box_region([0, 0, 0], [5, 4, 0], 1);
        let m = max_density(&s, &w, None, 64).unwrap();
        assert_eq!(BigUint::from(m.packings.len()), m.count);
        for p in &m.packings {
            assert!(is_valid(&s, p));
            assert_eq!(p.len(), m.k_max);
        }
    }
}
