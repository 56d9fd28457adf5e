mod common;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hardcore::constants::ModelConstants;
use hardcore::contour::{canonical_config, extract_gfcs, Frame};
use hardcore::corpus::random_patch;
use hardcore::enumerate::{box_region, PartitionResult};
use hardcore::ground::point_group;
use hardcore::montecarlo::Sampler;
use hardcore::rational::{fmt_big, parse_big};
use hardcore::system::{Patch, System};
use hardcore::voronoi::Voronoi;

fn staircase() -> &'static (System, ModelConstants) {
    static S: OnceLock<(System, ModelConstants)> = OnceLock::new();
    S.get_or_init(|| common::system("staircase3"))
}

fn patch(seed: u64) -> Patch {
    let (sys, _) = staircase();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = (seed % sys.grounds.len() as u64) as usize;
    random_patch(sys, base, 2, &mut rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_patches_are_valid_and_round_trip(seed in any::<u64>()) {
        let (sys, _) = staircase();
        let p = patch(seed);
        prop_assert!(p.is_valid(sys));
        for g in extract_gfcs(sys, &p).unwrap() {
            let xi = canonical_config(sys, &g).unwrap();
            prop_assert_eq!(extract_gfcs(sys, &xi).unwrap(), vec![g]);
        }
    }

    #[test]
    fn contours_follow_period_translations(seed in any::<u64>(), a in -2i32..=2, b in -2i32..=2) {
        let (sys, _) = staircase();
        let p = patch(seed);
        let periods = sys.ground(p.base).periods();
        let v: [i32; 3] = std::array::from_fn(|i| a * periods[0][i] + b * periods[1][i]);
        let moved = Patch {
            base: p.base,
            region: p.region.iter().map(|s| s.shift(v)).collect(),
            inside: p.inside.iter().map(|s| s.shift(v)).collect(),
        };
        let mut want: Vec<_> = extract_gfcs(sys, &p).unwrap().iter().map(|g| g.shift(v)).collect();
        let mut got = extract_gfcs(sys, &moved).unwrap();
        want.sort();
        got.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn voronoi_cells_contain_supports_and_share_sites_fairly(seed in any::<u64>()) {
        let (sys, _) = staircase();
        let p = patch(seed);
        let frame = Frame::new(sys, &p).unwrap();
        let v: &Voronoi = &frame.vor;
        let mut total = num_rational::Ratio::from_integer(0i64);
        let mut bounded = 0;
        for (i, x) in v.particles.iter().enumerate() {
            if !v.is_bounded(i) {
                continue;
            }
            bounded += 1;
            let cell = v.cell_region(i).unwrap();
            prop_assert!(sys.shape.support_of(*x).all(|s| cell.contains(&s)));
            let inv = v.inv_density(i).unwrap();
            prop_assert!(inv >= num_rational::Ratio::from_integer(sys.shape.support_size(x.cell) as i64));
            total += inv;
        }
        prop_assert!(bounded > 0);
        prop_assert!(total <= num_rational::Ratio::from_integer(v.covered() as i64));
    }

    #[test]
    fn point_group_preserves_validity(seed in any::<u64>()) {
        let (sys, _) = staircase();
        let p = patch(seed);
        let (lo, hi) = sys.g.bounding_box(&p.region, 6);
        let x = p.particles_in_box(sys, lo, hi);
        for iso in point_group(&sys.g, &sys.shape) {
            let y = iso.map_config(&x);
            prop_assert_eq!(y.len(), x.len());
            let ok = y.iter().all(|a| y.iter().all(|b| a == b || !sys.shape.overlaps(*a, *b)));
            prop_assert!(ok);
        }
    }

    #[test]
    fn rationals_print_and_parse_back(n in -10_000i64..10_000, d in 1i64..10_000) {
        let x = BigRational::new(BigInt::from(n), BigInt::from(d));
        prop_assert_eq!(parse_big(&fmt_big(&x)).unwrap(), x);
    }

    #[test]
    fn horner_matches_term_sum(c in prop::collection::vec(0u64..1000, 1..8), zn in -20i64..20, zd in 1i64..9) {
        let p = PartitionResult::from_counts(&c);
        let z = BigRational::new(zn.into(), zd.into());
        let direct = c.iter().enumerate().fold(BigRational::zero(), |acc, (k, &a)| acc + BigRational::from_integer(a.into()) * num_traits::pow(z.clone(), k));
        prop_assert_eq!(p.eval(&z), direct);
    }

    #[test]
    fn sampler_kernel_is_stochastic_and_reversible(w in 1i32..=3, h in 1i32..=2, zn in 1i64..6, zd in 1i64..6) {
        let sys = common::monomers();
        let lambda = box_region([0, 0, 0], [w - 1, h - 1, 0], 1);
        let z = BigRational::new(zn.into(), zd.into());
        let s = Sampler::new(&sys, 0, &lambda, 1.0, 0, None).unwrap();
        let states = s.admissible(64).unwrap();
        prop_assert_eq!(states.len(), 1usize << (w * h));
        for x in &states {
            let row = s.kernel(x, &z);
            prop_assert!(row.values().fold(BigRational::zero(), |a, b| a + b).is_one());
            for (y, p) in &row {
                let back = s.kernel(y, &z).get(x).cloned().unwrap_or_else(BigRational::zero);
                let lhs = num_traits::pow(z.clone(), x.len()) * p;
                let rhs = num_traits::pow(z.clone(), y.len()) * back;
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}

#[test]
fn sampler_stays_consistent_and_admissible() {
    let (sys, _) = staircase();
    let lambda = box_region([0, 0, 0], [9, 9, 0], 1);
    let mut s = Sampler::new(sys, 0, &lambda, 3.0, 9, None).unwrap();
    let mut sizes = BTreeSet::new();
    for _ in 0..2000 {
        s.sweep();
        sizes.insert(s.count());
    }
    assert!(s.is_consistent(sys));
    assert!(sizes.len() > 1);
}

#[test]
fn tiny_fugacity_empties_the_window() {
    let sys = common::monomers();
    let lambda = box_region([0, 0, 0], [5, 5, 0], 1);
    let o = hardcore::montecarlo::run(&sys, 0, &lambda, &hardcore::montecarlo::RunOptions::new(1e-9, 2000, 4)).unwrap();
    assert!(o.density.mean < 1e-3, "{:?}", o.density);
}
