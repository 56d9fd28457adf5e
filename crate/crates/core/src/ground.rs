//! Periodic ground states, reference cells, isometries and ground-state discovery.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_rational::Ratio;
use serde_json::{json, Value};

use crate::config::{is_valid_set, Configuration};
use crate::error::{Error, Result};
use crate::intlat::{mat_vec, IntLattice};
use crate::lattice::{vadd, vsub, PeriodicGraph, Region, Site, Window, V3};
use crate::local::LocalOptima;
use crate::rational::{fmt_q, Q};
use crate::shape::Shape;
use crate::voronoi::Voronoi;

/// `L = motif + lattice`, with motif translations reduced modulo the lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundState {
    pub lattice: IntLattice,
    pub motif: Vec<Site>,
}

impl GroundState {
    pub fn new(lattice: IntLattice, motif: impl IntoIterator<Item = Site>) -> Self {
        let set: BTreeSet<Site> = motif.into_iter().map(|m| Site::new(lattice.reduce(m.t), m.cell)).collect();
        GroundState { lattice, motif: set.into_iter().collect() }
    }

    /// Bravais packing through `anchor` generated by `gens`.
    pub fn bravais(dim: usize, gens: &[V3], anchor: Site) -> Result<Self> {
        Ok(GroundState::new(IntLattice::from_generators(dim, gens)?, [anchor]))
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.motif.binary_search(&Site::new(self.lattice.reduce(s.t), s.cell)).is_ok()
    }

    /// Motif element and period with `x = m + p`.
    pub fn locate(&self, x: &Site) -> Option<(usize, V3)> {
        let r = Site::new(self.lattice.reduce(x.t), x.cell);
        self.motif.binary_search(&r).ok().map(|i| (i, vsub(x.t, r.t)))
    }

    pub fn periods(&self) -> Vec<V3> {
        self.lattice.basis()
    }

    pub fn translate(&self, v: V3) -> GroundState {
        GroundState::new(self.lattice.clone(), self.motif.iter().map(|m| m.shift(v)))
    }

    pub fn density(&self, g: &PeriodicGraph) -> Q {
        Ratio::new(self.motif.len() as i64, self.lattice.index() * g.num_cells() as i64)
    }

    pub fn sites_in(&self, region: &Region) -> BTreeSet<Site> {
        region.iter().filter(|s| self.contains(s)).copied().collect()
    }

    pub fn sites_in_box(&self, g: &PeriodicGraph, lo: V3, hi: V3) -> BTreeSet<Site> {
        let mut out = BTreeSet::new();
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    for c in 0..g.num_cells() {
                        let s = Site::new([x, y, z], c as u16);
                        if self.contains(&s) {
                            out.insert(s);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self, shape: &Shape) -> Result<()> {
        for m in &self.motif {
            for y in shape.conflicts_of(*m) {
                if y != *m && self.contains(&y) {
                    return Err(Error::InvalidGroundState(format!("particles at {m:?} and {y:?} overlap")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let d = self.lattice.dim;
        json!({
            "periods": self.lattice.rows.iter().map(|r| r[..d].to_vec()).collect::<Vec<_>>(),
            "motif": self.motif.iter().map(|m| json!({"t": m.t[..d].to_vec(), "cell": m.cell})).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReferenceCell {
    pub owner: Site,
    pub sites: Region,
    pub weights: BTreeMap<Site, Q>,
}

impl ReferenceCell {
    pub fn total(&self) -> Q {
        self.weights.values().sum()
    }

    pub fn shift(&self, v: V3) -> ReferenceCell {
        ReferenceCell {
            owner: self.owner.shift(v),
            sites: self.sites.iter().map(|s| s.shift(v)).collect(),
            weights: self.weights.iter().map(|(s, w)| (s.shift(v), *w)).collect(),
        }
    }
}

/// A ground state with its reference cells and neighbour sets, one per motif element.
#[derive(Clone, Debug)]
pub struct GroundData {
    pub gs: GroundState,
    pub cells: Vec<ReferenceCell>,
    pub nbrs: Vec<Vec<Site>>,
    /// (site cell, site translation minus owner translation, motif index, weight).
    cover: HashMap<u16, Vec<(V3, usize, Q)>>,
}

fn patch(g: &PeriodicGraph, gs: &GroundState, center: V3, pad: i32) -> (Window, BTreeSet<Site>) {
    let mut lo = [0; 3];
    let mut hi = [0; 3];
    for i in 0..g.dim {
        lo[i] = center[i] - pad;
        hi[i] = center[i] + pad;
    }
    let win = Window::boxed(g, lo, hi);
    let parts = win.sites.iter().filter(|s| gs.contains(s)).copied().collect();
    (win, parts)
}

impl GroundData {
    pub fn new(g: &PeriodicGraph, shape: &Shape, gs: GroundState) -> Result<Self> {
        gs.validate(shape)?;
        let span = gs.lattice.rows.iter().flat_map(|r| r.iter().map(|x| x.abs())).max().unwrap_or(1);
        let mut cells = Vec::new();
        let mut nbrs = Vec::new();
        for m in &gs.motif {
            let mut pad = 2 * span + 3 * shape.reach() + 4;
            let (cell, nb) = loop {
                let (win, parts) = patch(g, &gs, m.t, pad);
                let v = Voronoi::on_window_open(shape, &parts, win);
                let p = v.index_of(m)?;
                match (v.cell_region(p), v.neighbors(p)) {
                    (Ok(sites), Ok(nb)) => {
                        let weights = v.cell(p)?
                            .iter()
                            .map(|&i| (v.win.sites[i as usize], Ratio::new(1, v.owners[i as usize].len() as i64)))
                            .collect();
                        let nb: Vec<Site> = nb.into_iter().map(|i| v.particles[i]).collect();
                        break (ReferenceCell { owner: *m, sites, weights }, nb);
                    }
                    _ if pad < 64 * (span + shape.reach() + 2) => pad *= 2,
                    _ => return Err(Error::UnboundedCell),
                }
            };
            cells.push(cell);
            nbrs.push(nb);
        }
        let mut cover: HashMap<u16, Vec<(V3, usize, Q)>> = HashMap::new();
        for (mi, c) in cells.iter().enumerate() {
            for (s, w) in &c.weights {
                cover.entry(s.cell).or_default().push((vsub(s.t, c.owner.t), mi, *w));
            }
        }
        Ok(GroundData { gs, cells, nbrs, cover })
    }

    /// Reference cell of a ground-state particle.
    pub fn cell_of(&self, x: &Site) -> Option<ReferenceCell> {
        let (i, p) = self.gs.locate(x)?;
        Some(self.cells[i].shift(p))
    }

    /// N_L(x) for x in the ground state.
    pub fn neighbors_of(&self, x: &Site) -> Option<BTreeSet<Site>> {
        let (i, p) = self.gs.locate(x)?;
        Some(self.nbrs[i].iter().map(|s| s.shift(p)).collect())
    }

    /// Ground-state particles whose reference cell contains `site`, with the weight there.
    pub fn coverers(&self, site: &Site) -> Vec<(Site, Q)> {
        let mut out = Vec::new();
        if let Some(v) = self.cover.get(&site.cell) {
            for &(off, mi, w) in v {
                let x = Site::new(vsub(site.t, off), self.gs.motif[mi].cell);
                if self.gs.contains(&x) && self.gs.locate(&x).map(|(i, _)| i) == Some(mi) {
                    out.push((x, w));
                }
            }
        }
        out
    }

    pub fn inv_density(&self) -> Q {
        self.cells.iter().map(|c| c.total()).sum::<Q>() / Q::from_integer(self.cells.len() as i64)
    }
}

pub fn reference_cells(g: &PeriodicGraph, shape: &Shape, gs: &GroundState) -> Result<Vec<ReferenceCell>> {
    Ok(GroundData::new(g, shape, gs.clone())?.cells)
}

/// Smallest reference weight and largest owner-to-cell distance.
pub fn mu_and_reff(g: &PeriodicGraph, data: &[GroundData]) -> Result<(Q, u32)> {
    let mut mu: Option<Q> = None;
    let mut reff = 0;
    for d in data {
        for c in &d.cells {
            for (s, w) in &c.weights {
                mu = Some(mu.map_or(*w, |m: Q| m.min(*w)));
                reff = reff.max(g.distance(c.owner, *s)?);
            }
        }
    }
    Ok((mu.ok_or_else(|| Error::InvalidGroundState("no ground states".into()))?, reff))
}

/// Affine lattice map `(t, c) -> (M t + cell_shift[c], cell_perm[c])` with its action on anchors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Isometry {
    pub linear: [[i32; 3]; 3],
    pub cell_perm: Vec<u16>,
    pub cell_shift: Vec<V3>,
    /// Image anchor of a particle at (0, c); filled by `validate`.
    pub anchor_image: Vec<Site>,
}

fn ident3() -> [[i32; 3]; 3] {
    [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
}

impl Isometry {
    pub fn linear(g: &PeriodicGraph, m: [[i32; 3]; 3]) -> Isometry {
        let nc = g.num_cells();
        Isometry {
            linear: m,
            cell_perm: (0..nc as u16).collect(),
            cell_shift: vec![[0; 3]; nc],
            anchor_image: Vec::new(),
        }
    }

    pub fn identity(g: &PeriodicGraph) -> Isometry {
        Isometry::linear(g, ident3())
    }

    pub fn map_site(&self, s: Site) -> Site {
        let c = s.cell as usize;
        Site::new(vadd(mat_vec(&self.linear, s.t), self.cell_shift[c]), self.cell_perm[c])
    }

    pub fn map_anchor(&self, a: Site) -> Site {
        self.anchor_image[a.cell as usize].shift(mat_vec(&self.linear, a.t))
    }

    pub fn map_config(&self, x: &BTreeSet<Site>) -> BTreeSet<Site> {
        x.iter().map(|&a| self.map_anchor(a)).collect()
    }

    pub fn map_ground_state(&self, gs: &GroundState) -> Result<GroundState> {
        Ok(GroundState::new(gs.lattice.map_linear(&self.linear)?, gs.motif.iter().map(|&m| self.map_anchor(m))))
    }

    /// Checks the map is a Euclidean isometry and graph automorphism that sends supports to supports.
    pub fn validate(mut self, g: &PeriodicGraph, shape: &Shape) -> Result<Isometry> {
        let nc = g.num_cells();
        if self.cell_perm.len() != nc || self.cell_shift.len() != nc {
            return Err(Error::InvalidIsometry("cell permutation has wrong length".into()));
        }
        let mut seen = vec![false; nc];
        for &c in &self.cell_perm {
            if c as usize >= nc || std::mem::replace(&mut seen[c as usize], true) {
                return Err(Error::InvalidIsometry("cell map is not a permutation".into()));
            }
        }
        let m = &self.linear;
        for i in 0..3 {
            for j in 0..3 {
                if (i >= g.dim || j >= g.dim) && m[i][j] != (i == j) as i32 {
                    return Err(Error::InvalidIsometry("linear part exceeds the dimension".into()));
                }
            }
        }
        let sample: Vec<Site> = (0..nc).flat_map(|c| g.ball(Site::new([0; 3], c as u16), 2)).collect();
        for (i, &a) in sample.iter().enumerate() {
            for &b in &sample[i + 1..] {
                if g.dist2(a, b) != g.dist2(self.map_site(a), self.map_site(b)) {
                    return Err(Error::InvalidIsometry("map does not preserve Euclidean distances".into()));
                }
            }
        }
        for &(i, j, t) in &g.edges {
            let a = self.map_site(Site::new([0; 3], i));
            let b = self.map_site(Site::new(t, j));
            if !g.neighbors(a).any(|n| n == b) {
                return Err(Error::InvalidIsometry("map is not a graph automorphism".into()));
            }
        }
        let mut images = Vec::with_capacity(nc);
        for c in 0..nc {
            let img: BTreeSet<Site> = shape.support_of(Site::new([0; 3], c as u16)).map(|s| self.map_site(s)).collect();
            let lo = *img.iter().next().unwrap();
            let mut found = None;
            for c2 in 0..nc {
                let base: BTreeSet<Site> = shape.support_of(Site::new([0; 3], c2 as u16)).collect();
                let b0 = *base.iter().next().unwrap();
                if b0.cell != lo.cell {
                    continue;
                }
                let d = vsub(lo.t, b0.t);
                if base.iter().map(|s| s.shift(d)).collect::<BTreeSet<_>>() == img {
                    found = Some(Site::new(d, c2 as u16));
                    break;
                }
            }
            match found {
                Some(a) => images.push(a),
                None => return Err(Error::InvalidIsometry("map does not send supports to supports".into())),
            }
        }
        self.anchor_image = images;
        Ok(self)
    }

    pub fn to_json(&self, dim: usize) -> Value {
        json!({
            "linear": self.linear[..dim].iter().map(|r| r[..dim].to_vec()).collect::<Vec<_>>(),
            "cell_perm": self.cell_perm,
            "cell_shift": self.cell_shift.iter().map(|t| t[..dim].to_vec()).collect::<Vec<_>>(),
        })
    }
}

/// Species-preserving point-group elements. Multi-site cells only get the identity.
pub fn point_group(g: &PeriodicGraph, shape: &Shape) -> Vec<Isometry> {
    let d = g.dim;
    if g.num_cells() > 1 {
        return vec![Isometry::identity(g).validate(g, shape).expect("identity is valid")];
    }
    let n = d * d;
    let mut out = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let mut m = ident3();
        let mut c = code;
        for i in 0..d {
            for j in 0..d {
                m[i][j] = (c % 3) as i32 - 1;
                c /= 3;
            }
        }
        if let Ok(iso) = Isometry::linear(g, m).validate(g, shape) {
            out.push(iso);
        }
    }
    out
}

/// Closure of the seeds under the isometries and lattice translations.
pub fn ground_state_orbit(seeds: &[GroundState], isos: &[Isometry], dim: usize) -> Result<Vec<GroundState>> {
    let mut seen: BTreeSet<GroundState> = BTreeSet::new();
    let mut queue: VecDeque<GroundState> = VecDeque::new();
    for s in seeds {
        if seen.insert(s.clone()) {
            queue.push_back(s.clone());
        }
    }
    while let Some(gs) = queue.pop_front() {
        let mut next = Vec::new();
        for iso in isos {
            next.push(iso.map_ground_state(&gs)?);
        }
        for i in 0..dim {
            let mut e = [0; 3];
            e[i] = 1;
            next.push(gs.translate(e));
        }
        for n in next {
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// Orbit representatives under isometries and translations; one entry per class.
pub fn orbit_classes(all: &[GroundState], isos: &[Isometry], dim: usize) -> Result<Vec<Vec<GroundState>>> {
    let mut left: BTreeSet<GroundState> = all.iter().cloned().collect();
    let mut out = Vec::new();
    while let Some(first) = left.iter().next().cloned() {
        let orbit = ground_state_orbit(&[first], isos, dim)?;
        for o in &orbit {
            left.remove(o);
        }
        out.push(orbit);
    }
    Ok(out)
}

/// Cell of `y` in the configuration `x` (which must contain `y`).
fn cell_in(g: &PeriodicGraph, shape: &Shape, x: &BTreeSet<Site>, y: Site) -> Option<Region> {
    let v = Voronoi::new(g, shape, x, 2 * shape.reach() + 8);
    let p = v.index_of(&y).ok()?;
    v.cell_region(p).ok()
}

/// True if some particle of `extra` has its support within distance 1 of `cell`.
fn touches(g: &PeriodicGraph, shape: &Shape, cell: &Region, extra: impl Iterator<Item = Site>) -> bool {
    let (_, ext) = g.boundaries(cell);
    extra.into_iter().any(|p| shape.support_of(p).any(|s| cell.contains(&s) || ext.contains(&s)))
}

/// How an optimal local configuration relates to periodic packings.
#[derive(Clone, Debug)]
pub enum Extension {
    /// Generates a Bravais packing with matching neighbourhood.
    Lattice(GroundState),
    /// `witness` cannot itself sit in an optimal configuration.
    Blocked { witness: Site, distance: u32 },
    Inconclusive(String),
}

#[derive(Clone, Debug)]
pub struct Discovery {
    pub optima: Vec<Configuration>,
    pub extensions: Vec<Extension>,
    pub seeds: Vec<GroundState>,
    pub ground_states: Vec<GroundState>,
}

/// Optimal neighbourhood of `y` (translated from the optima list) compatible with `x`.
fn optimal_placements(optima: &[Configuration], center: Site, y: Site) -> Vec<BTreeSet<Site>> {
    optima
        .iter()
        .map(|z| z.occupied.iter().map(|s| s.shift(vsub(y.t, center.t))).collect())
        .collect()
}

/// Whether no optimal neighbourhood of `y` containing `center` is consistent with `z`.
pub fn is_blocked(g: &PeriodicGraph, shape: &Shape, optima: &[Configuration], z: &BTreeSet<Site>, center: Site, y: Site) -> bool {
    // Optima are only known around anchors of the centre's class.
    if y.cell != center.cell || !z.contains(&y) {
        return false;
    }
    for place in optimal_placements(optima, center, y) {
        if !place.contains(&center) {
            continue;
        }
        let union: BTreeSet<Site> = z.union(&place).copied().collect();
        if !is_valid_set(shape, &union) {
            continue;
        }
        let Some(cell) = cell_in(g, shape, &place, y) else { return false };
        if touches(g, shape, &cell, union.difference(&place).copied()) {
            continue;
        }
        return false;
    }
    true
}

/// Nearest `y` in `z` such that no optimal neighbourhood of `y` is consistent with `z`.
pub fn non_extendable_witness(
    g: &PeriodicGraph,
    shape: &Shape,
    optima: &[Configuration],
    z: &BTreeSet<Site>,
    center: Site,
) -> Result<Option<(Site, u32)>> {
    let mut cands: Vec<(u32, Site)> =
        z.iter().filter(|&&y| y != center).map(|&y| Ok((g.distance(center, y)?, y))).collect::<Result<_>>()?;
    cands.sort();
    Ok(cands.into_iter().find(|&(_, y)| is_blocked(g, shape, optima, z, center, y)).map(|(d, y)| (y, d)))
}

/// Extends every optimum to a Bravais packing or certifies it non-extendable, then closes the orbit.
pub fn discover(g: &PeriodicGraph, shape: &Shape, local: &LocalOptima, isos: &[Isometry]) -> Result<Discovery> {
    let center = Site::new([0; 3], local.center_cell);
    let mut extensions = Vec::new();
    let mut seeds: Vec<GroundState> = Vec::new();
    for z in &local.optima {
        extensions.push(extend_one(g, shape, local, z, center)?);
        if let Some(Extension::Lattice(gs)) = extensions.last() {
            if !seeds.contains(gs) {
                seeds.push(gs.clone());
            }
        }
    }
    let ground_states = ground_state_orbit(&seeds, isos, g.dim)?;
    Ok(Discovery { optima: local.optima.clone(), extensions, seeds, ground_states })
}

fn extend_one(g: &PeriodicGraph, shape: &Shape, local: &LocalOptima, z: &Configuration, center: Site) -> Result<Extension> {
    if g.num_cells() == 1 {
        let gens: Vec<V3> = z.occupied.iter().filter(|&&y| y != center).map(|y| vsub(y.t, center.t)).collect();
        if let Ok(lat) = IntLattice::from_generators(g.dim, &gens) {
            if Q::from_integer(lat.index()) == local.optimum {
                let gs = GroundState::new(lat, [center]);
                if gs.validate(shape).is_ok() {
                    let data = GroundData::new(g, shape, gs.clone())?;
                    if data.neighbors_of(&center) == Some(z.occupied.clone()) {
                        return Ok(Extension::Lattice(gs));
                    }
                }
            }
        }
    }
    match non_extendable_witness(g, shape, &local.optima, &z.occupied, center)? {
        Some((w, d)) => Ok(Extension::Blocked { witness: w, distance: d }),
        None => Ok(Extension::Inconclusive("neither a Bravais packing nor blocked".into())),
    }
}

/// A half-space of a ground state translated by a non-period vector, still a maximal packing.
#[derive(Clone, Debug)]
pub struct Slide {
    pub ground_state: GroundState,
    pub normal_period: V3,
    pub shift: V3,
}

/// Looks for sliding: splits L along a period direction and shifts one side.
pub fn detect_slide(g: &PeriodicGraph, shape: &Shape, gs: &GroundState) -> Result<Option<Slide>> {
    if gs.motif.len() != 1 || g.num_cells() != 1 || g.dim != 2 {
        return Ok(None);
    }
    let data = GroundData::new(g, shape, gs.clone())?;
    let target = data.inv_density();
    let r = shape.exclusion_reach() + 1;
    let rows = gs.lattice.basis();
    // Candidate period pairs: HNF basis and a few unimodular variants.
    let mut pairs: Vec<(V3, V3)> = Vec::new();
    let (a, b) = (rows[0], rows[1]);
    for k in -2..=2 {
        let b2 = vadd(b, [a[0] * k, a[1] * k, 0]);
        let a2 = vadd(a, [b[0] * k, b[1] * k, 0]);
        pairs.push((a, b2));
        pairs.push((b, a2));
    }
    let m = gs.motif[0];
    for (u, v) in pairs {
        let det = u[0] * v[1] - u[1] * v[0];
        if det == 0 {
            continue;
        }
        // Coordinates along u: particles m + i u + j v with i >= 0 are moved.
        for sx in -r..=r {
            for sy in -r..=r {
                let s = [sx, sy, 0];
                if gs.lattice.contains(s) {
                    continue;
                }
                // Valid iff no exclusion vector equals s + a u + b v with a >= 1.
                let crosses = shape.exclusion[m.cell as usize].iter().any(|&(_, e)| {
                    let w = vsub(e, s);
                    let an = w[0] * v[1] - w[1] * v[0];
                    let bn = u[0] * w[1] - u[1] * w[0];
                    an % det == 0 && bn % det == 0 && an / det >= 1
                });
                if crosses {
                    continue;
                }
                // Two rows of particles on each side of the inspected ones.
                let span = 4;
                let mut x = BTreeSet::new();
                for i in -span..=span {
                    for j in -span..=span {
                        let p = Site::new(
                            vadd(m.t, [i * u[0] + j * v[0], i * u[1] + j * v[1], 0]),
                            m.cell,
                        );
                        x.insert(if i >= 0 { p.shift(s) } else { p });
                    }
                }
                debug_assert!(is_valid_set(shape, &x));
                // Interface particles near the middle must keep the optimal density.
                let vor = Voronoi::new(g, shape, &x, 2);
                let mut ok = true;
                for i in -1..=0 {
                    for j in -1..=1 {
                        let p = Site::new(vadd(m.t, [i * u[0] + j * v[0], i * u[1] + j * v[1], 0]), m.cell);
                        let p = if i >= 0 { p.shift(s) } else { p };
                        let idx = vor.index_of(&p)?;
                        match vor.inv_density(idx) {
                            Ok(d) if d == target => {}
                            _ => ok = false,
                        }
                    }
                }
                if ok {
                    return Ok(Some(Slide { ground_state: gs.clone(), normal_period: u, shift: s }));
                }
            }
        }
    }
    Ok(None)
}

pub fn extension_json(e: &Extension, dim: usize) -> Value {
    match e {
        Extension::Lattice(gs) => json!({"kind": "lattice", "ground_state": gs.to_json()}),
        Extension::Blocked { witness, distance } => {
            json!({"kind": "blocked", "witness": witness.t[..dim].to_vec(), "distance": distance})
        }
        Extension::Inconclusive(m) => json!({"kind": "inconclusive", "reason": m}),
    }
}

pub fn cell_json(c: &ReferenceCell, dim: usize) -> Value {
    json!({
        "owner": c.owner.t[..dim].to_vec(),
        "sites": c.weights.iter().map(|(s, w)| json!({"t": s.t[..dim].to_vec(), "cell": s.cell, "weight": fmt_q(w)})).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::shape::ShapeDescriptor;

    fn staircase(n: i32) -> (PeriodicGraph, Shape) {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, Shape::staircase_descriptor(n)).unwrap();
        (g, s)
    }

    #[test]
    fn staircase_reference_cell_weights() {
        let (g, s) = staircase(3);
        let gs = GroundState::bravais(2, &[[2, 1, 0], [-3, 2, 0]], Site::xy(0, 0)).unwrap();
        let cells = reference_cells(&g, &s, &gs).unwrap();
        assert_eq!(cells[0].total(), q(7, 1));
        let shared: Vec<Q> = cells[0].weights.values().filter(|w| **w != q(1, 1)).copied().collect();
        assert_eq!(shared, vec![q(1, 3); 3]);
        let data = GroundData::new(&g, &s, gs).unwrap();
        assert_eq!(mu_and_reff(&g, &[data]).unwrap(), (q(1, 3), 3));
    }

    #[test]
    fn staircase_group_is_swap() {
        let (g, s) = staircase(3);
        let grp = point_group(&g, &s);
        assert_eq!(grp.len(), 2);
        let disk = Shape::build(&g, ShapeDescriptor::DiskRadius(q(5, 2))).unwrap();
        assert_eq!(point_group(&g, &disk).len(), 8);
    }

    #[test]
    fn orbit_counts_cosets() {
        let (g, s) = staircase(3);
        let gs = GroundState::bravais(2, &[[2, 1, 0], [-3, 2, 0]], Site::xy(0, 0)).unwrap();
        let orbit = ground_state_orbit(&[gs], &point_group(&g, &s), 2).unwrap();
        assert_eq!(orbit.len(), 14);
    }

    #[test]
    fn invalid_isometry_rejected() {
        let (g, s) = staircase(3);
        let inv = Isometry::linear(&g, [[-1, 0, 0], [0, -1, 0], [0, 0, 1]]);
        assert!(matches!(inv.validate(&g, &s), Err(Error::InvalidIsometry(_))));
        let shear = Isometry::linear(&g, [[1, 1, 0], [0, 1, 0], [0, 0, 1]]);
        assert!(matches!(shear.validate(&g, &s), Err(Error::InvalidIsometry(_))));
    }

    #[test]
    fn squares_slide() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, ShapeDescriptor::Polyomino(vec![[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])).unwrap();
        let gs = GroundState::bravais(2, &[[2, 0, 0], [0, 2, 0]], Site::xy(0, 0)).unwrap();
        assert!(detect_slide(&g, &s, &gs).unwrap().is_some());
        let (g, s) = staircase(3);
        let gs = GroundState::bravais(2, &[[2, 1, 0], [-3, 2, 0]], Site::xy(0, 0)).unwrap();
        assert!(detect_slide(&g, &s, &gs).unwrap().is_none());
    }
}
