//! Finite-radius verification of the six-item assumption on a model.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::is_valid_set;
use crate::error::{Error, Result};
use crate::ground::{
    detect_slide, discover, extension_json, is_blocked, orbit_classes, point_group, ground_state_orbit, Discovery,
    Extension, GroundData, GroundState, Isometry,
};
use crate::intlat::mat_vec;
use crate::lattice::{PeriodicGraph, Site, V3};
use crate::local::{max_local_configs, LocalOptima};
use crate::model::Model;
use crate::rational::{fmt_q, Q};
use crate::shape::Shape;
use crate::voronoi::Voronoi;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Model-file overrides reproduce printed constants.
    PaperCompat,
    /// Everything computed, with the tightest values the searches certify.
    Best,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "paper-compat" | "paper" => Ok(Mode::PaperCompat),
            "best" | "best-available" => Ok(Mode::Best),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ItemResult {
    pub verdict: Verdict,
    pub summary: String,
    pub witness: Value,
}

fn item(verdict: Verdict, summary: impl Into<String>, witness: Value) -> ItemResult {
    ItemResult { verdict, summary: summary.into(), witness }
}

#[derive(Clone, Debug)]
pub struct AssumptionParams {
    pub radius: u32,
    pub budget: u64,
    pub mode: Mode,
    /// Random simply connected regions sampled for boundary connectivity.
    pub samples: usize,
    pub sample_size: usize,
    pub seed: u64,
}

impl AssumptionParams {
    pub fn for_model(model: &Model, mode: Mode) -> AssumptionParams {
        AssumptionParams {
            radius: model.file.search.radius,
            budget: model.budget(),
            mode,
            samples: 40,
            sample_size: 40,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub mode: Mode,
    pub items: Vec<ItemResult>,
    pub r0: Option<u32>,
    pub r1: Option<u32>,
    pub s1: Option<u32>,
    pub epsilon: Option<Q>,
    /// Second-best minus best inverse local density.
    pub gap: Option<Q>,
    pub local: LocalOptima,
    pub discovery: Discovery,
    pub ground_states: Vec<GroundState>,
    pub isometries: Vec<Isometry>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.verdict == Verdict::Pass)
    }

    pub fn ground_state_count(&self) -> usize {
        self.ground_states.len()
    }

    pub fn to_json(&self, dim: usize) -> Value {
        let site = |s: &Site| s.t[..dim].to_vec();
        json!({
            "mode": if self.mode == Mode::Best { "best" } else { "paper-compat" },
            "items": self.items.iter().enumerate().map(|(i, r)| json!({
                "item": i + 1,
                "verdict": r.verdict.name(),
                "summary": r.summary,
                "witness": r.witness,
            })).collect::<Vec<_>>(),
            "derived": {
                "R0": self.r0,
                "R1": self.r1,
                "S1": self.s1,
                "epsilon": self.epsilon.map(|e| fmt_q(&e)),
                "gap": self.gap.map(|e| fmt_q(&e)),
            },
            "ground_state_count": self.ground_states.len(),
            "optimum_inverse_density": fmt_q(&self.local.optimum),
            "maximal_local_configs": self.local.optima.iter().zip(&self.discovery.extensions).map(|(z, e)| json!({
                "particles": z.occupied.iter().map(site).collect::<Vec<_>>(),
                "extension": extension_json(e, dim),
            })).collect::<Vec<_>>(),
            "search_radius": self.local.radius,
            "nodes": self.local.nodes,
        })
    }
}

/// Smallest r for which both boundaries of every sampled simply connected region are r-connected.
pub fn boundary_connectivity(g: &PeriodicGraph, samples: usize, size: usize, seed: u64) -> Option<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 1;
    for _ in 0..samples {
        let region = g.random_simply_connected(&mut rng, size);
        let (inner, outer) = g.boundaries(&region);
        let r = (1..=8).find(|&r| g.is_r_connected(&inner, r) && g.is_r_connected(&outer, r))?;
        worst = worst.max(r);
    }
    Some(worst)
}

/// Isometry group used for orbits: the validated point group plus model generators.
pub fn isometry_group(model: &Model) -> Result<Vec<Isometry>> {
    let mut isos = point_group(&model.graph, &model.shape);
    for extra in model.extra_isometries()? {
        if !isos.contains(&extra) {
            isos.push(extra);
        }
    }
    Ok(isos)
}

/// Pairs of neighbouring particles that could both be correct for different ground states.
fn seamless_merges(g: &PeriodicGraph, shape: &Shape, data: &[GroundData]) -> Result<(usize, Option<Value>)> {
    let mut checked = 0;
    for (a, da) in data.iter().enumerate() {
        for &x in &da.gs.motif {
            let Some(nx) = da.neighbors_of(&x) else { continue };
            for &y in nx.iter().filter(|&&y| y != x) {
                for (b, db) in data.iter().enumerate() {
                    if b == a || !db.gs.contains(&y) {
                        continue;
                    }
                    let Some(ny) = db.neighbors_of(&y) else { continue };
                    checked += 1;
                    if !ny.contains(&x) {
                        continue;
                    }
                    let union: BTreeSet<Site> = nx.union(&ny).copied().collect();
                    if !is_valid_set(shape, &union) {
                        continue;
                    }
                    let vor = Voronoi::new(g, shape, &union, 2 * shape.reach() + 8);
                    let same = |gd: &GroundData, p: Site| -> bool {
                        match (vor.index_of(&p).and_then(|i| vor.cell_region(i)), gd.cell_of(&p)) {
                            (Ok(c), Some(r)) => c == r.sites,
                            _ => false,
                        }
                    };
                    if same(da, x) && same(db, y) {
                        return Ok((checked, Some(json!({"ground_states": [a, b], "x": x.t, "y": y.t}))));
                    }
                }
            }
        }
    }
    Ok((checked, None))
}

/// Images of `w` under the linear parts of the group.
fn witness_orbit(isos: &[Isometry], w: V3) -> BTreeSet<V3> {
    isos.iter().map(|i| mat_vec(&i.linear, w)).collect()
}

pub fn verify_assumption(model: &Model, params: &AssumptionParams) -> Result<AssumptionReport> {
    let g = &model.graph;
    let shape = &model.shape;
    let isos = isometry_group(model)?;
    let local = max_local_configs(g, shape, params.radius, params.budget)?;
    let mut discovery = discover(g, shape, &local, &isos)?;
    if let Some(hand) = model.hand_ground_states()? {
        discovery.seeds = hand.clone();
        discovery.ground_states = ground_state_orbit(&hand, &isos, g.dim)?;
    }
    let mut items = Vec::new();
    let paper = model.paper();

    let r0 = boundary_connectivity(g, params.samples, params.sample_size, params.seed);
    items.push(match r0 {
        Some(r) => item(Verdict::Pass, format!("boundaries of {} sampled regions are {r}-connected", params.samples), json!({"R0": r})),
        None => item(Verdict::Fail, "a sampled boundary is not 8-connected", Value::Null),
    });

    let mut slide = None;
    for s in &discovery.seeds {
        if let Some(sl) = detect_slide(g, shape, s)? {
            slide = Some(sl);
            break;
        }
    }
    items.push(match (&slide, discovery.ground_states.is_empty()) {
        (Some(sl), _) => item(
            Verdict::Fail,
            "a half-space of a ground state slides by a non-period vector at maximal density",
            json!({"ground_state": sl.ground_state.to_json(), "normal_period": sl.normal_period[..g.dim].to_vec(), "shift": sl.shift[..g.dim].to_vec()}),
        ),
        (None, true) => item(Verdict::Inconclusive, "no periodic ground state found", Value::Null),
        (None, false) => item(
            Verdict::Pass,
            format!("{} ground states, no sliding family", discovery.ground_states.len()),
            json!({"count": discovery.ground_states.len()}),
        ),
    });

    let classes = orbit_classes(&discovery.ground_states, &isos, g.dim)?;
    items.push(match classes.len() {
        0 => item(Verdict::Inconclusive, "no ground states", Value::Null),
        1 => item(Verdict::Pass, format!("one orbit under {} isometries and translations", isos.len()), json!({"isometries": isos.len()})),
        k => item(Verdict::Inconclusive, format!("{k} orbits; no connecting isometry found"), json!({"orbits": k})),
    });

    let pending = discovery.extensions.iter().filter(|e| matches!(e, Extension::Inconclusive(_))).count();
    let lattices = discovery.extensions.iter().filter(|e| matches!(e, Extension::Lattice(_))).count();
    let dense = discovery.seeds.iter().all(|s| s.density(g) == local.rho_loc);
    items.push(if pending > 0 {
        item(Verdict::Inconclusive, format!("{pending} optima neither extend nor are blocked"), Value::Null)
    } else if lattices == 0 || discovery.seeds.is_empty() || !dense {
        item(Verdict::Fail, "no optimum extends to a packing of the local optimum density", Value::Null)
    } else {
        item(
            Verdict::Pass,
            format!("maximal density {} reached by {} extendable optima", fmt_q(&local.rho_loc), lattices),
            json!({"rho_max": fmt_q(&local.rho_loc)}),
        )
    });

    let data = discovery
        .ground_states
        .iter()
        .map(|gs| GroundData::new(g, shape, gs.clone()))
        .collect::<Result<Vec<_>>>()?;
    items.push(if slide.is_some() {
        item(Verdict::Inconclusive, "skipped: ground states slide", Value::Null)
    } else {
        match seamless_merges(g, shape, &data)? {
            (n, None) => item(Verdict::Pass, format!("{n} neighbour pairs cannot merge across ground states"), json!({"pairs": n})),
            (_, Some(w)) => item(Verdict::Fail, "two ground states merge seamlessly", w),
        }
    });

    let gap = local.gap;
    let (mut r1, mut s1, mut epsilon) = (None, None, None);
    let blocked: Vec<(usize, Site, u32)> = discovery
        .extensions
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match e {
            Extension::Blocked { witness, distance } => Some((i, *witness, *distance)),
            _ => None,
        })
        .collect();
    let sixth = if pending > 0 || gap.is_none() {
        item(Verdict::Inconclusive, "optima not classified or no second value found", Value::Null)
    } else {
        let gap = gap.unwrap();
        match params.mode {
            Mode::Best => {
                r1 = Some(0);
                s1 = Some(blocked.iter().map(|b| b.2).max().unwrap_or(0));
                epsilon = Some(gap);
                item(
                    Verdict::Pass,
                    "every non-optimal particle, or a blocked particle near an optimal one, has a density dip",
                    json!({"witnesses": blocked.iter().map(|b| json!({"optimum": b.0, "at": b.1.t[..g.dim].to_vec(), "distance": b.2})).collect::<Vec<_>>()}),
                )
            }
            Mode::PaperCompat => {
                let eps = model.paper_epsilon()?.unwrap_or(gap);
                r1 = Some(paper.r1.unwrap_or(0));
                epsilon = Some(eps);
                let center = Site::new([0; 3], local.center_cell);
                let mut worst = 0;
                let mut missing = None;
                if let Some(w) = model.paper_witness()? {
                    let orbit = witness_orbit(&isos, w);
                    for &(i, _, _) in &blocked {
                        let z = &local.optima[i].occupied;
                        let hit = orbit
                            .iter()
                            .map(|v| center.shift(*v))
                            .filter(|y| is_blocked(g, shape, &local.optima, z, center, *y))
                            .map(|y| g.distance(center, y))
                            .collect::<Result<Vec<u32>>>()?;
                        match hit.into_iter().min() {
                            Some(d) => worst = worst.max(d),
                            None => missing = Some(i),
                        }
                    }
                } else {
                    worst = blocked.iter().map(|b| b.2).max().unwrap_or(0);
                }
                s1 = Some(worst);
                if let Some(i) = missing {
                    item(Verdict::Fail, format!("stated witness does not block optimum {i}"), json!({"optimum": i}))
                } else if eps > gap {
                    item(Verdict::Fail, format!("stated epsilon {} exceeds the certified gap {}", fmt_q(&eps), fmt_q(&gap)), Value::Null)
                } else {
                    item(Verdict::Pass, "stated witness and epsilon certified", json!({"S1": worst, "epsilon": fmt_q(&eps)}))
                }
            }
        }
    };
    items.push(sixth);

    Ok(AssumptionReport {
        mode: params.mode,
        items,
        r0,
        r1,
        s1,
        epsilon,
        gap,
        local,
        ground_states: discovery.ground_states.clone(),
        discovery,
        isometries: isos,
    })
}
