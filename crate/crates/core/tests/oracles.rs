//! Independent brute-force oracles for the search and counting routines.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use hardcore::enumerate::{box_region, independent_sets, ConflictGraph, Counter};
use hardcore::expansion::{log_series, ursell, PolymerSystem};
use hardcore::lattice::{PeriodicGraph, Site};
use hardcore::local::{max_local_configs, DEFAULT_LOCAL_BUDGET};
use hardcore::shape::{Shape, ShapeDescriptor};
use hardcore::voronoi::Voronoi;

fn br(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Every configuration in a radius-5 ball around the origin, scored by the Voronoi cell of the origin.
#[test]
fn local_optimum_matches_naive_ball_enumeration() {
    let g = PeriodicGraph::z2();
    let s = Shape::build(&g, Shape::staircase_descriptor(3)).unwrap();
    let o = Site::xy(0, 0);
    let excl: BTreeSet<Site> = s.conflicts_of(o).collect();
    let cand: Vec<Site> = g.ball(o, 5).into_iter().filter(|x| !excl.contains(x)).collect();
    let cg = ConflictGraph::new(&s, &cand, None, 128).unwrap();
    let sets = independent_sets(&cg, cg.full_mask(), 1_000_000).unwrap();
    let mut values = BTreeSet::new();
    for m in &sets {
        let mut p: BTreeSet<Site> = (0..cand.len()).filter(|i| m >> i & 1 == 1).map(|i| cand[i]).collect();
        p.insert(o);
        let v = Voronoi::new(&g, &s, &p, 2);
        if let Ok(x) = v.inv_density(v.index_of(&o).unwrap()) {
            values.insert(x);
        }
    }
    let mut it = values.into_iter();
    let (best, second) = (it.next().unwrap(), it.next().unwrap());
    let l = max_local_configs(&g, &s, 12, DEFAULT_LOCAL_BUDGET).unwrap();
    assert_eq!(best, l.optimum);
    assert_eq!(Some(second - best), l.gap);
}

fn naive_poly(shape: &Shape, sites: &[Site]) -> Vec<u64> {
    let n = sites.len();
    let mut out = vec![0u64; n + 1];
    for m in 0u32..(1 << n) {
        let chosen: Vec<Site> = (0..n).filter(|i| m >> i & 1 == 1).map(|i| sites[i]).collect();
        let ok = chosen.iter().enumerate().all(|(i, a)| chosen[i + 1..].iter().all(|b| !shape.overlaps(*a, *b)));
        if ok {
            out[chosen.len()] += 1;
        }
    }
    while out.len() > 1 && *out.last().unwrap() == 0 {
        out.pop();
    }
    out
}

#[test]
fn independence_polynomial_matches_subset_enumeration() {
    let g = PeriodicGraph::z2();
    for shape in [
        Shape::build(&g, Shape::staircase_descriptor(2)).unwrap(),
        Shape::build(&g, ShapeDescriptor::Polyomino(vec![[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])).unwrap(),
    ] {
        for (w, h) in [(3, 3), (4, 3), (4, 4)] {
            let sites: Vec<Site> = box_region([0, 0, 0], [w - 1, h - 1, 0], 1).into_iter().collect();
            let cg = ConflictGraph::new(&shape, &sites, None, 128).unwrap();
            let mut c = Counter::new(&cg);
            let poly: Vec<u64> = c.poly(cg.full_mask()).iter().map(|x| x.try_into().unwrap()).collect();
            assert_eq!(poly, naive_poly(&shape, &sites), "{w}x{h}");
            assert_eq!(c.alpha(cg.full_mask()) as usize, poly.len() - 1);
            assert_eq!(c.maximizers(cg.full_mask(), usize::MAX).len() as u64, *poly.last().unwrap());
        }
    }
}

#[test]
fn ursell_closed_forms() {
    let complete = |m: usize| vec![vec![true; m]; m];
    let mut fact = 1i64;
    for m in 1..=6usize {
        if m > 1 {
            fact *= m as i64 - 1;
        }
        let sign = if m % 2 == 1 { 1 } else { -1 };
        assert_eq!(ursell(&complete(m)).unwrap(), BigInt::from(sign * fact), "K{m}");
    }
    // A path is a tree: only itself is a connected spanning subgraph.
    let path: Vec<Vec<bool>> = (0..5).map(|i| (0..5).map(|j| (i as i32 - j as i32).abs() <= 1).collect()).collect();
    assert_eq!(ursell(&path).unwrap(), BigInt::from(1));
    let mut split = complete(4);
    for i in 0..2 {
        for j in 2..4 {
            split[i][j] = false;
            split[j][i] = false;
        }
    }
    assert_eq!(ursell(&split).unwrap(), BigInt::zero());
}

fn polymer_system() -> impl Strategy<Value = (Vec<i64>, Vec<bool>)> {
    (1usize..=4).prop_flat_map(|n| (prop::collection::vec(-3i64..=3, n), prop::collection::vec(any::<bool>(), n * (n - 1) / 2)))
}

fn build(weights: &[i64], edges: &[bool]) -> PolymerSystem {
    let n = weights.len();
    let mut inc = vec![vec![false; n]; n];
    let mut k = 0;
    for i in 0..n {
        inc[i][i] = true;
        for j in i + 1..n {
            inc[i][j] = edges[k];
            inc[j][i] = edges[k];
            k += 1;
        }
    }
    PolymerSystem::new(weights.iter().map(|&w| br(w, 5)).collect(), inc).unwrap()
}

/// Coefficients in t of the partition function with every weight scaled by t.
fn graded_partition(ps: &PolymerSystem) -> Vec<BigRational> {
    let n = ps.weights.len();
    let mut out = vec![BigRational::zero(); n + 1];
    for m in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| m >> i & 1 == 1).collect();
        if idx.iter().enumerate().all(|(a, &i)| idx[a + 1..].iter().all(|&j| !ps.incompat[i][j])) {
            out[idx.len()] += idx.iter().fold(BigRational::one(), |acc, &i| acc * &ps.weights[i]);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The cluster series is the Taylor expansion of log of the partition function.
    #[test]
    fn cluster_terms_are_log_partition((w, e) in polymer_system()) {
        let ps = build(&w, &e);
        let p = graded_partition(&ps);
        let logs = log_series(&p, 4).unwrap();
        let terms = ps.cluster_terms(4).unwrap();
        prop_assert_eq!(&logs[1..], &terms[..]);
        prop_assert_eq!(ps.partition().unwrap(), p.iter().fold(BigRational::zero(), |a, b| a + b));
    }
}

#[test]
fn inverse_densities_of_ground_state_equal_optimum() {
    let g = PeriodicGraph::z2();
    let s = Shape::build(&g, Shape::staircase_descriptor(3)).unwrap();
    let l = max_local_configs(&g, &s, 12, DEFAULT_LOCAL_BUDGET).unwrap();
    let periods = [(2, 1), (-3, 2)];
    let mut p = BTreeSet::new();
    for a in -6..=6 {
        for b in -6..=6 {
            p.insert(Site::xy(a * periods[0].0 + b * periods[1].0, a * periods[0].1 + b * periods[1].1));
        }
    }
    let v = Voronoi::new(&g, &s, &p, 0);
    let mut seen: BTreeMap<bool, usize> = BTreeMap::new();
    for (i, x) in v.particles.iter().enumerate() {
        if x.t[0].abs() <= 8 && x.t[1].abs() <= 8 {
            *seen.entry(v.inv_density(i).unwrap() == l.optimum).or_default() += 1;
        }
    }
    assert_eq!(seen.get(&false), None);
    assert!(seen[&true] > 10);
}
