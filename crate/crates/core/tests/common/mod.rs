#![allow(dead_code)]

use std::path::PathBuf;

use hardcore::assumption::{verify_assumption, AssumptionParams, Mode};
use hardcore::constants::{build_system, compute_constants, ModelConstants};
use hardcore::ground::GroundState;
use hardcore::intlat::IntLattice;
use hardcore::lattice::{PeriodicGraph, Site};
use hardcore::model::Model;
use hardcore::shape::{Shape, ShapeDescriptor};
use hardcore::system::System;

pub fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(format!("{name}.json"))
}

pub fn model(name: &str) -> Model {
    Model::load(&model_path(name)).unwrap()
}

pub fn system(name: &str) -> (System, ModelConstants) {
    let m = model(name);
    let r = verify_assumption(&m, &AssumptionParams::for_model(&m, Mode::PaperCompat)).unwrap();
    let c = compute_constants(&m, &r, Mode::PaperCompat).unwrap();
    (build_system(&m, &r, &c).unwrap(), c)
}

/// Single-site particles with all of Z^2 as the ground state.
pub fn monomers() -> System {
    let g = PeriodicGraph::z2();
    let shape = Shape::build(&g, ShapeDescriptor::Polyomino(vec![[0, 0, 0]])).unwrap();
    let gs = GroundState::new(IntLattice::from_generators(2, &[[1, 0, 0], [0, 1, 0]]).unwrap(), [Site::xy(0, 0)]);
    System::new(g, shape, vec![gs], 1).unwrap()
}
