mod common;

use std::collections::BTreeSet;

use hardcore::boundary::{xi_sharp, XiOptions};
use hardcore::contour::{canonical_config, compatible, extract_gfcs, peierls_check, Frame};
use hardcore::corpus::small_rational;
use hardcore::enumerate::box_region;
use hardcore::lattice::Region;
use hardcore::system::Patch;

#[test]
fn ground_state_has_no_contours() {
    let (sys, _) = common::system("staircase3");
    for k in 0..sys.grounds.len() {
        assert!(extract_gfcs(&sys, &Patch::ground(k)).unwrap().is_empty());
    }
}

#[test]
fn vacancy_gives_one_contour_that_round_trips() {
    let (sys, c) = common::system("staircase3");
    let x0 = sys.ground(0).motif[0];
    let patch = Patch::new(0, Region::from([x0]), []).unwrap();
    let frame = Frame::new(&sys, &patch).unwrap();
    let gs = frame.gfcs().unwrap();
    assert_eq!(gs.len(), 1);
    let g = &gs[0];
    assert_eq!(g.exterior, 0);
    assert!(g.support.contains(&x0));
    assert!(!g.internal.contains(&x0));
    let xi = canonical_config(&sys, g).unwrap();
    assert_eq!(extract_gfcs(&sys, &xi).unwrap(), gs);
    let vol = frame.effective_volume(g);
    assert_eq!(vol, Frame::new(&sys, &xi).unwrap().effective_volume(g));
    assert!(peierls_check(g, &vol, small_rational(&c.rho0).unwrap()).holds);
}

#[test]
fn distant_vacancies_give_compatible_contours() {
    let (sys, _) = common::system("staircase3");
    let gs0 = sys.ground(0);
    let far = gs0.sites_in_box(&sys.g, [30, 0, 0], [40, 10, 0]).into_iter().next().unwrap();
    let x0 = gs0.motif[0];
    let patch = Patch::new(0, Region::from([x0, far]), []).unwrap();
    let found = extract_gfcs(&sys, &patch).unwrap();
    assert_eq!(found.len(), 2);
    assert!(compatible(&sys.g, &found[0], &found[1]).unwrap());
    for g in &found {
        let back = extract_gfcs(&sys, &canonical_config(&sys, g).unwrap()).unwrap();
        assert_eq!(back, vec![g.clone()]);
    }
}

#[test]
fn every_incorrect_particle_has_a_density_dip_nearby() {
    let (sys, c) = common::system("staircase3");
    let x0 = sys.ground(0).motif[0];
    let patch = Patch::new(0, Region::from([x0]), []).unwrap();
    let frame = Frame::new(&sys, &patch).unwrap();
    let bad = frame.r_incorrect();
    assert!(!bad.is_empty());
    for p in bad {
        let x = frame.vor.particles[p];
        let (_, d, inv) = frame.dip_witness(&x, c.s0, c.epsilon).unwrap();
        assert!(d <= c.s0);
        assert!(inv >= sys.rho_max.recip() + c.epsilon);
    }
}

#[test]
fn rim_forcing_does_not_change_the_partition_function() {
    let (sys, _) = common::system("staircase3");
    for w in [6, 7, 8] {
        let lambda = box_region([0, 0, 0], [w - 1, w - 1, 0], 1);
        let forced = xi_sharp(&sys, 0, &lambda, &XiOptions { cap: 128, ..Default::default() }).unwrap();
        let free = xi_sharp(&sys, 0, &lambda, &XiOptions { cap: 128, forced: false, ..Default::default() }).unwrap();
        assert_eq!(forced.poly, free.poly, "{w}x{w}");
        assert!(free.examined >= forced.examined);
    }
}

#[test]
fn monomer_window_admits_only_the_central_vacancy() {
    // A vacancy is allowed only where its whole contour support stays inside the window.
    let sys = common::monomers();
    let lambda = box_region([0, 0, 0], [6, 6, 0], 1);
    let x = xi_sharp(&sys, 0, &lambda, &XiOptions { cap: 128, keep: true, ..Default::default() }).unwrap();
    assert_eq!(x.ground_count, 49);
    assert_eq!(x.poly.k_max(), 49);
    assert_eq!(x.poly.total(), 2u32.into());
    let vacancy: BTreeSet<_> = x.configurations.iter().filter(|p| p.inside.len() == 48).flat_map(|p| lambda.difference(&p.inside).copied()).collect();
    assert_eq!(vacancy.into_iter().map(|s| (s.t[0], s.t[1])).collect::<Vec<_>>(), vec![(3, 3)]);
}
