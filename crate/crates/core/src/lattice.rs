//! Periodic graphs, sites, regions and finite windows.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use lru::LruCache;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::intlat::IntLattice;
use crate::rational::{parse_q, q, Q};

/// Integer translation coefficients; unused trailing entries are zero.
pub type V3 = [i32; 3];

pub fn vadd(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn vsub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn vneg(a: V3) -> V3 {
    [-a[0], -a[1], -a[2]]
}

/// A vertex of the infinite graph: fundamental-cell site `cell` translated by `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub t: V3,
    pub cell: u16,
}

impl Site {
    pub fn new(t: V3, cell: u16) -> Self {
        Site { t, cell }
    }
    pub fn xy(x: i32, y: i32) -> Self {
        Site { t: [x, y, 0], cell: 0 }
    }
    pub fn shift(&self, d: V3) -> Site {
        Site { t: vadd(self.t, d), cell: self.cell }
    }
}

pub type Region = BTreeSet<Site>;

pub const DEFAULT_DISTANCE_CACHE: usize = 1 << 16;

pub struct PeriodicGraph {
    pub name: String,
    pub dim: usize,
    pub basis: Vec<Vec<Q>>,
    pub cell_sites: Vec<Vec<Q>>,
    pub edges: Vec<(u16, u16, V3)>,
    /// Ambient metric; squared length of v is v^T gram v.
    pub gram: Vec<Vec<Q>>,
    pub r0: Option<u32>,
    pub isoperimetric: Option<Q>,
    adj: Vec<Vec<(u16, V3)>>,
    dist_cache: Mutex<LruCache<(u16, u16, V3), u32>>,
    ball_cache: Mutex<HashMap<(u16, u32), Arc<Vec<Site>>>>,
}

impl Clone for PeriodicGraph {
    fn clone(&self) -> Self {
        let cap = self.dist_cache.lock().unwrap().cap();
        let mut g = PeriodicGraph::build(
            &self.name,
            self.dim,
            self.basis.clone(),
            self.cell_sites.clone(),
            self.edges.clone(),
            Some(self.gram.clone()),
        )
        .expect("clone of a validated graph");
        g.r0 = self.r0;
        g.isoperimetric = self.isoperimetric;
        g.set_cache_capacity(cap.get());
        g
    }
}

impl std::fmt::Debug for PeriodicGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicGraph")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("cells", &self.cell_sites.len())
            .field("edges", &self.edges.len())
            .finish()
    }
}

/// JSON form of a graph definition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub dimension: usize,
    pub basis: Vec<Vec<serde_json::Value>>,
    pub cell_sites: Vec<Vec<serde_json::Value>>,
    pub edges: Vec<(u16, u16, Vec<i32>)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<serde_json::Value>>>,
}

fn value_to_q(v: &serde_json::Value) -> Result<Q> {
    match v {
        serde_json::Value::Number(n) => parse_q(&n.to_string()),
        serde_json::Value::String(s) => parse_q(s),
        _ => Err(Error::Parse(format!("expected a rational, got {v}"))),
    }
}

fn identity(d: usize) -> Vec<Vec<Q>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { q(1, 1) } else { q(0, 1) }).collect())
        .collect()
}

fn det(m: &[Vec<Q>]) -> Q {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => Q::zero(),
    }
}

impl PeriodicGraph {
    pub fn build(
        name: &str,
        dim: usize,
        basis: Vec<Vec<Q>>,
        cell_sites: Vec<Vec<Q>>,
        edges: Vec<(u16, u16, V3)>,
        gram: Option<Vec<Vec<Q>>>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGraph(format!("dimension {dim} not in 1..=3")));
        }
        if basis.len() != dim || basis.iter().any(|b| b.len() != dim) {
            return Err(Error::InvalidGraph("basis must be d vectors of length d".into()));
        }
        if det(&basis).is_zero() {
            return Err(Error::InvalidGraph("basis vectors are linearly dependent".into()));
        }
        if cell_sites.is_empty() || cell_sites.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidGraph("cell sites must be non-empty d-vectors".into()));
        }
        let gram = gram.unwrap_or_else(|| identity(dim));
        if gram.len() != dim || gram.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidGraph("gram matrix has wrong shape".into()));
        }
        let nc = cell_sites.len();
        let mut set: HashSet<(u16, u16, V3)> = HashSet::new();
        for &(i, j, t) in &edges {
            if i as usize >= nc || j as usize >= nc {
                return Err(Error::InvalidGraph(format!("edge ({i},{j}) out of range")));
            }
            if t[dim..].iter().any(|&x| x != 0) {
                return Err(Error::InvalidGraph("edge translation exceeds dimension".into()));
            }
            if i == j && t == [0, 0, 0] {
                return Err(Error::InvalidGraph("self loop".into()));
            }
            set.insert((i, j, t));
        }
        for &(i, j, t) in &set {
            if !set.contains(&(j, i, vneg(t))) {
                return Err(Error::InvalidGraph(format!(
                    "edge set not symmetric: ({i},{j},{t:?}) lacks its reverse"
                )));
            }
        }
        let mut edges: Vec<(u16, u16, V3)> = set.into_iter().collect();
        edges.sort();
        let mut adj = vec![Vec::new(); nc];
        for &(i, j, t) in &edges {
            adj[i as usize].push((j, t));
        }
        let g = PeriodicGraph {
            name: name.to_string(),
            dim,
            basis,
            cell_sites,
            edges,
            gram,
            r0: None,
            isoperimetric: None,
            adj,
            dist_cache: Mutex::new(LruCache::new(NonZeroUsize::new(DEFAULT_DISTANCE_CACHE).unwrap())),
            ball_cache: Mutex::new(HashMap::new()),
        };
        g.check_connected()?;
        Ok(g)
    }

    fn check_connected(&self) -> Result<()> {
        // Spanning tree on the quotient graph; cycle translations must generate Z^d.
        let nc = self.cell_sites.len();
        let mut pot: Vec<Option<V3>> = vec![None; nc];
        pot[0] = Some([0, 0, 0]);
        let mut queue = VecDeque::from([0u16]);
        while let Some(c) = queue.pop_front() {
            let p = pot[c as usize].unwrap();
            for &(j, t) in &self.adj[c as usize] {
                if pot[j as usize].is_none() {
                    pot[j as usize] = Some(vadd(p, t));
                    queue.push_back(j);
                }
            }
        }
        if pot.iter().any(|p| p.is_none()) {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        let cycles: Vec<V3> = self
            .edges
            .iter()
            .map(|&(i, j, t)| vsub(vadd(pot[i as usize].unwrap(), t), pot[j as usize].unwrap()))
            .collect();
        match IntLattice::from_generators(self.dim, &cycles) {
            Ok(l) if l.index() == 1 => Ok(()),
            _ => Err(Error::InvalidGraph("graph is not connected".into())),
        }
    }

    pub fn from_file(f: &GraphFile) -> Result<Self> {
        let conv = |rows: &Vec<Vec<serde_json::Value>>| -> Result<Vec<Vec<Q>>> {
            rows.iter().map(|r| r.iter().map(value_to_q).collect()).collect()
        };
        let edges = f
            .edges
            .iter()
            .map(|(i, j, t)| {
                let mut v = [0i32; 3];
                if t.len() != f.dimension {
                    return Err(Error::InvalidGraph("edge translation has wrong length".into()));
                }
                v[..t.len()].copy_from_slice(t);
                Ok((*i, *j, v))
            })
            .collect::<Result<Vec<_>>>()?;
        let gram = match &f.gram {
            Some(g) => Some(conv(g)?),
            None => None,
        };
        PeriodicGraph::build("custom", f.dimension, conv(&f.basis)?, conv(&f.cell_sites)?, edges, gram)
    }

    pub fn to_file(&self) -> GraphFile {
        let conv = |rows: &Vec<Vec<Q>>| -> Vec<Vec<serde_json::Value>> {
            rows.iter()
                .map(|r| r.iter().map(|x| serde_json::Value::String(crate::rational::fmt_q(x))).collect())
                .collect()
        };
        GraphFile {
            dimension: self.dim,
            basis: conv(&self.basis),
            cell_sites: conv(&self.cell_sites),
            edges: self.edges.iter().map(|&(i, j, t)| (i, j, t[..self.dim].to_vec())).collect(),
            gram: Some(conv(&self.gram)),
        }
    }

    pub fn z2() -> Self {
        let mut g = Self::zd(2);
        g.name = "Z2".into();
        g.r0 = Some(2);
        g.isoperimetric = Some(q(1, 16));
        g
    }

    pub fn z3() -> Self {
        let mut g = Self::zd(3);
        g.name = "Z3".into();
        g
    }

    fn zd(d: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..d {
            let mut e = [0i32; 3];
            e[i] = 1;
            edges.push((0, 0, e));
            edges.push((0, 0, vneg(e)));
        }
        PeriodicGraph::build(&format!("Z{d}"), d, identity(d), vec![vec![q(0, 1); d]], edges, None).unwrap()
    }

    /// Triangular lattice in skew coordinates (basis at 60 degrees).
    pub fn triangular() -> Self {
        let dirs = [[1, 0, 0], [0, 1, 0], [-1, 1, 0]];
        let mut edges = Vec::new();
        for d in dirs {
            edges.push((0, 0, d));
            edges.push((0, 0, vneg(d)));
        }
        let gram = vec![vec![q(1, 1), q(1, 2)], vec![q(1, 2), q(1, 1)]];
        let mut g =
            PeriodicGraph::build("triangular", 2, identity(2), vec![vec![q(0, 1), q(0, 1)]], edges, Some(gram))
                .unwrap();
        g.r0 = Some(1);
        g
    }

    /// Honeycomb: two sites per rhombic cell of the triangular lattice.
    pub fn honeycomb() -> Self {
        let mut edges = Vec::new();
        for t in [[0, 0, 0], [-1, 0, 0], [0, -1, 0]] {
            edges.push((0, 1, t));
            edges.push((1, 0, vneg(t)));
        }
        let gram = vec![vec![q(1, 1), q(1, 2)], vec![q(1, 2), q(1, 1)]];
        let mut g = PeriodicGraph::build(
            "honeycomb",
            2,
            identity(2),
            vec![vec![q(0, 1), q(0, 1)], vec![q(1, 3), q(1, 3)]],
            edges,
            Some(gram),
        )
        .unwrap();
        g.r0 = Some(3);
        g
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "Z2" => Ok(Self::z2()),
            "Z3" => Ok(Self::z3()),
            "triangular" => Ok(Self::triangular()),
            "honeycomb" => Ok(Self::honeycomb()),
            _ => Err(Error::InvalidGraph(format!("unknown preset {name:?}"))),
        }
    }

    pub fn set_cache_capacity(&mut self, cap: usize) {
        let cap = NonZeroUsize::new(cap.max(1)).unwrap();
        self.dist_cache.lock().unwrap().resize(cap);
    }

    pub fn num_cells(&self) -> usize {
        self.cell_sites.len()
    }

    pub fn degree(&self, cell: u16) -> usize {
        self.adj[cell as usize].len()
    }

    /// Maximal coordination number.
    pub fn chi(&self) -> usize {
        (0..self.num_cells()).map(|c| self.degree(c as u16)).max().unwrap_or(0)
    }

    pub fn neighbors(&self, s: Site) -> impl Iterator<Item = Site> + '_ {
        self.adj[s.cell as usize].iter().map(move |&(c, t)| Site { t: vadd(s.t, t), cell: c })
    }

    pub fn adjacency(&self, cell: u16) -> &[(u16, V3)] {
        &self.adj[cell as usize]
    }

    /// Ambient position in exact coordinates.
    pub fn position(&self, s: Site) -> Vec<Q> {
        let mut p = self.cell_sites[s.cell as usize].clone();
        for i in 0..self.dim {
            for k in 0..self.dim {
                p[k] += self.basis[i][k] * Q::from_integer(s.t[i] as i64);
            }
        }
        p
    }

    pub fn norm2(&self, v: &[Q]) -> Q {
        let mut acc = Q::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += v[i] * self.gram[i][j] * v[j];
            }
        }
        acc
    }

    pub fn dist2(&self, a: Site, b: Site) -> Q {
        let pa = self.position(a);
        let pb = self.position(b);
        let d: Vec<Q> = pa.iter().zip(&pb).map(|(x, y)| *y - *x).collect();
        self.norm2(&d)
    }

    /// Smallest eigenvalue lower bound of the translation Gram matrix (float, for search radii only).
    pub fn min_translation_norm2(&self) -> f64 {
        let d = self.dim;
        let mut m = vec![vec![0f64; d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = Q::zero();
                for a in 0..d {
                    for b in 0..d {
                        acc += self.basis[i][a] * self.gram[a][b] * self.basis[j][b];
                    }
                }
                m[i][j] = acc.to_f64().unwrap();
            }
        }
        // Gershgorin lower bound, floored away from zero by the smallest diagonal share.
        let mut lb = f64::INFINITY;
        for i in 0..d {
            let off: f64 = (0..d).filter(|&j| j != i).map(|j| m[i][j].abs()).sum();
            lb = lb.min(m[i][i] - off);
        }
        if lb <= 0.0 {
            // Fall back to a power-iteration free bound via the determinant.
            let tr: f64 = (0..d).map(|i| m[i][i]).sum();
            let detm = match d {
                1 => m[0][0],
                2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
                _ => {
                    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
                }
            };
            lb = detm / tr.powi(d as i32 - 1);
        }
        lb
    }

    /// Shortest path length; memoized by (cell pair, translation difference).
    pub fn distance(&self, a: Site, b: Site) -> Result<u32> {
        if a == b {
            return Ok(0);
        }
        let key = (a.cell, b.cell, vsub(b.t, a.t));
        if let Some(&d) = self.dist_cache.lock().unwrap().get(&key) {
            return Ok(d);
        }
        let origin = Site { t: [0, 0, 0], cell: a.cell };
        let target = Site { t: key.2, cell: b.cell };
        let mut seen: HashSet<Site> = HashSet::from([origin]);
        let mut frontier = vec![origin];
        let mut d = 0u32;
        let limit = 1u32 << 20;
        while !frontier.is_empty() && d < limit {
            d += 1;
            let mut next = Vec::new();
            for s in frontier {
                for n in self.neighbors(s) {
                    if n == target {
                        self.dist_cache.lock().unwrap().put(key, d);
                        return Ok(d);
                    }
                    if seen.insert(n) {
                        next.push(n);
                    }
                }
            }
            frontier = next;
        }
        Err(Error::Disconnected)
    }

    /// Sites within distance r of (cell, origin), with their distances, in BFS order.
    pub fn ball_offsets(&self, cell: u16, r: u32) -> Arc<Vec<Site>> {
        if let Some(b) = self.ball_cache.lock().unwrap().get(&(cell, r)) {
            return b.clone();
        }
        let origin = Site { t: [0, 0, 0], cell };
        let mut seen: HashSet<Site> = HashSet::from([origin]);
        let mut out = vec![origin];
        let mut frontier = vec![origin];
        for _ in 0..r {
            let mut next = Vec::new();
            for s in frontier {
                for n in self.neighbors(s) {
                    if seen.insert(n) {
                        next.push(n);
                        out.push(n);
                    }
                }
            }
            frontier = next;
        }
        let arc = Arc::new(out);
        self.ball_cache.lock().unwrap().insert((cell, r), arc.clone());
        arc
    }

    pub fn ball(&self, center: Site, r: u32) -> Region {
        self.ball_offsets(center.cell, r).iter().map(|s| s.shift(center.t)).collect()
    }

    /// Interior and exterior vertex boundaries.
    pub fn boundaries(&self, region: &Region) -> (Region, Region) {
        let mut interior = Region::new();
        let mut exterior = Region::new();
        for &s in region {
            for n in self.neighbors(s) {
                if !region.contains(&n) {
                    interior.insert(s);
                    exterior.insert(n);
                }
            }
        }
        (interior, exterior)
    }

    /// Components of `s` where consecutive steps are at distance <= r; ordered by minimum site.
    pub fn connected_components(&self, s: &Region, r: u32) -> Vec<Region> {
        let mut left: BTreeSet<Site> = s.clone();
        let mut out = Vec::new();
        while let Some(&start) = left.iter().next() {
            left.remove(&start);
            let mut comp = Region::from([start]);
            let mut stack = vec![start];
            while let Some(x) = stack.pop() {
                if r == 1 {
                    for n in self.neighbors(x) {
                        if left.remove(&n) {
                            comp.insert(n);
                            stack.push(n);
                        }
                    }
                } else {
                    for o in self.ball_offsets(x.cell, r).iter() {
                        let n = o.shift(x.t);
                        if left.remove(&n) {
                            comp.insert(n);
                            stack.push(n);
                        }
                    }
                }
            }
            out.push(comp);
        }
        out.sort_by_key(|c| *c.iter().next().unwrap());
        out
    }

    /// Empty sets count as connected.
    pub fn is_r_connected(&self, s: &Region, r: u32) -> bool {
        self.connected_components(s, r).len() <= 1
    }

    /// Translation bounding box of a region, padded.
    pub fn bounding_box(&self, region: &Region, pad: i32) -> (V3, V3) {
        let mut lo = [i32::MAX; 3];
        let mut hi = [i32::MIN; 3];
        for s in region {
            for i in 0..3 {
                lo[i] = lo[i].min(s.t[i]);
                hi[i] = hi[i].max(s.t[i]);
            }
        }
        for i in 0..3 {
            if i < self.dim {
                lo[i] -= pad;
                hi[i] += pad;
            } else {
                lo[i] = 0;
                hi[i] = 0;
            }
        }
        (lo, hi)
    }

    /// Complement components inside the padded box that do not reach its border.
    pub fn holes(&self, region: &Region) -> Vec<Region> {
        if region.is_empty() {
            return Vec::new();
        }
        let (lo, hi) = self.bounding_box(region, 2);
        let win = Window::boxed(self, lo, hi);
        let mut seen = vec![false; win.len()];
        let mut holes = Vec::new();
        for start in 0..win.len() {
            if seen[start] || region.contains(&win.sites[start]) {
                continue;
            }
            let mut comp = Vec::new();
            let mut touches = false;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                comp.push(win.sites[i]);
                touches |= win.border[i];
                for &j in &win.nbrs[i] {
                    let j = j as usize;
                    if !seen[j] && !region.contains(&win.sites[j]) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            if !touches {
                holes.push(comp.into_iter().collect());
            }
        }
        holes
    }

    pub fn is_simply_connected(&self, region: &Region) -> bool {
        self.is_r_connected(region, 1) && self.holes(region).is_empty()
    }

    /// Random connected region grown from the origin with holes filled.
    pub fn random_simply_connected<R: Rng>(&self, rng: &mut R, size: usize) -> Region {
        let start = Site { t: [0, 0, 0], cell: rng.gen_range(0..self.num_cells()) as u16 };
        let mut region = Region::from([start]);
        while region.len() < size {
            let (_, ext) = self.boundaries(&region);
            let ext: Vec<Site> = ext.into_iter().collect();
            let pick = *ext.choose(rng).unwrap();
            region.insert(pick);
        }
        for h in self.holes(&region) {
            region.extend(h);
        }
        region
    }
}

/// A finite set of sites with a dense index and neighbour table.
#[derive(Clone, Debug)]
pub struct Window {
    pub sites: Vec<Site>,
    pub index: HashMap<Site, u32>,
    pub nbrs: Vec<SmallVec<[u32; 8]>>,
    /// Has a graph neighbour outside the window.
    pub border: Vec<bool>,
}

impl Window {
    pub fn from_sites(g: &PeriodicGraph, sites: impl IntoIterator<Item = Site>) -> Self {
        let mut sites: Vec<Site> = sites.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        sites.shrink_to_fit();
        let index: HashMap<Site, u32> = sites.iter().enumerate().map(|(i, &s)| (s, i as u32)).collect();
        let mut nbrs = Vec::with_capacity(sites.len());
        let mut border = Vec::with_capacity(sites.len());
        for &s in &sites {
            let mut v = SmallVec::new();
            let mut b = false;
            for n in g.neighbors(s) {
                match index.get(&n) {
                    Some(&j) => v.push(j),
                    None => b = true,
                }
            }
            nbrs.push(v);
            border.push(b);
        }
        Window { sites, index, nbrs, border }
    }

    /// All sites whose translations lie in the inclusive box `[lo, hi]`.
    pub fn boxed(g: &PeriodicGraph, lo: V3, hi: V3) -> Self {
        let mut sites = Vec::new();
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    for c in 0..g.num_cells() {
                        sites.push(Site { t: [x, y, z], cell: c as u16 });
                    }
                }
            }
        }
        Window::from_sites(g, sites)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn get(&self, s: &Site) -> Option<usize> {
        self.index.get(s).map(|&i| i as usize)
    }

    /// BFS distances from a set of sources (u32::MAX = unreachable).
    pub fn bfs(&self, sources: &[usize], limit: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(i) = queue.pop_front() {
            let d = dist[i];
            if d >= limit {
                continue;
            }
            for &j in &self.nbrs[i] {
                let j = j as usize;
                if dist[j] == u32::MAX {
                    dist[j] = d + 1;
                    queue.push_back(j);
                }
            }
        }
        dist
    }
}
