//! Exhaustive search for the local configurations minimizing the inverse
//! local density of a particle at the origin.
//!
//! Sites are grouped in shells by their distance k to the central support.
//! A candidate anchor y can take a shell-k site out of the central cell only if
//! d(supp y, supp 0) <= 2k - 1, and can tie with the centre there only if that
//! distance is <= 2k. Deciding candidates in increasing order of that distance
//! therefore finalizes shells one by one. The cell closes at the first shell that
//! is entirely taken by other particles.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_rational::Ratio;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::lattice::{PeriodicGraph, Site, Window};
use crate::rational::Q;
use crate::shape::Shape;

#[derive(Clone, Debug)]
struct Cand {
    site: Site,
    /// (site id, distance from this candidate's support) for tracked sites it can reach in time.
    infl: Vec<(u32, u32)>,
    conflicts: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct LocalLeaf {
    pub value: Q,
    /// N(0): the centre and every particle whose cell is within distance 1 of its cell.
    pub neighborhood: Vec<Site>,
    pub closure_shell: u32,
}

#[derive(Clone, Debug)]
pub struct LocalOptima {
    pub center_cell: u16,
    /// Minimal inverse local density.
    pub optimum: Q,
    pub rho_loc: Q,
    pub optima: Vec<Configuration>,
    pub second: Option<Q>,
    pub gap: Option<Q>,
    /// Distinct neighbourhoods found per value up to the final cutoff.
    pub values: BTreeMap<Q, usize>,
    pub radius: u32,
    pub cutoff: Q,
    pub nodes: u64,
}

pub struct LocalSearch<'a> {
    center: Site,
    support_size: usize,
    sites: Vec<Site>,
    shell: Vec<u32>,
    shell_sizes: Vec<u32>,
    /// Sites of positive shell in processing order.
    order: Vec<u32>,
    kmax: u32,
    nbrs: Vec<Vec<u32>>,
    cands: Vec<Cand>,
    /// Per site: (candidate, distance) sorted by candidate.
    site_infl: Vec<Vec<(u32, u32)>>,
    radius: u32,
    _shape: std::marker::PhantomData<&'a Shape>,
}

struct State {
    chosen: Vec<bool>,
    /// Chosen, forbidden or overlapping a chosen particle.
    unavail: Vec<u32>,
    excl: Vec<u32>,
    ties: Vec<u32>,
    pot_strict: Vec<u32>,
    pot_tie: Vec<u32>,
    excl_in_shell: Vec<u32>,
    /// Per shell: sum of the optimistic site contributions.
    shell_lb: Vec<f64>,
    nodes: u64,
}

type Found = BTreeMap<Q, BTreeSet<Vec<Site>>>;

impl<'a> LocalSearch<'a> {
    pub fn new(g: &PeriodicGraph, shape: &'a Shape, center_cell: u16, radius: u32) -> Result<Self> {
        let center = Site::new([0, 0, 0], center_cell);
        let sigma0: BTreeSet<Site> = shape.support_of(center).collect();
        let excl0: BTreeSet<Site> = shape.conflicts_of(center).collect();
        let reach = shape
            .support
            .iter()
            .flat_map(|s| s.iter())
            .map(|s| s.t.iter().map(|x| x.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        // Anchors inside the radius are candidates; the closest outsider bounds the trackable shells.
        let inner = g.ball(center, radius);
        let outer_ring = g.ball(center, radius + 1 + 4 * reach as u32 + 2);
        let pad = (radius as i32) + 8 * reach + 8;
        let win = centered_box(g, pad);
        let sources0: Vec<usize> = sigma0.iter().map(|s| win.get(s).unwrap()).collect();
        let d0 = win.bfs(&sources0, u32::MAX - 1);
        let delta_of = |y: Site| -> u32 {
            shape.support_of(y).map(|s| d0[win.get(&s).expect("window covers supports")]).min().unwrap()
        };
        let mut delta_out = u32::MAX;
        for &y in &outer_ring {
            if !inner.contains(&y) && !excl0.contains(&y) {
                delta_out = delta_out.min(delta_of(y));
            }
        }
        // Shell k is final once all candidates with delta <= 2k are decided.
        let kmax = if delta_out == u32::MAX { radius } else { delta_out / 2 };
        if kmax == 0 {
            return Err(Error::RadiusInsufficient(format!("radius {radius} tracks no shell")));
        }
        let mut sites = Vec::new();
        let mut shell = Vec::new();
        let mut id: HashMap<usize, u32> = HashMap::new();
        for (i, &d) in d0.iter().enumerate() {
            if d <= kmax {
                id.insert(i, sites.len() as u32);
                sites.push(win.sites[i]);
                shell.push(d);
            }
        }
        let mut shell_sizes = vec![0u32; kmax as usize + 1];
        for &k in &shell {
            shell_sizes[k as usize] += 1;
        }
        let mut nbrs = vec![Vec::new(); sites.len()];
        for (&wi, &si) in &id {
            for &j in &win.nbrs[wi] {
                if let Some(&sj) = id.get(&(j as usize)) {
                    nbrs[si as usize].push(sj);
                }
            }
        }
        let mut cand_sites: Vec<(u32, Site)> = inner
            .iter()
            .filter(|y| !excl0.contains(y))
            .map(|&y| (delta_of(y), y))
            .filter(|&(d, _)| d < 2 * kmax)
            .collect();
        cand_sites.sort();
        let cindex: HashMap<Site, u32> = cand_sites.iter().enumerate().map(|(i, &(_, s))| (s, i as u32)).collect();
        let mut cands = Vec::with_capacity(cand_sites.len());
        let mut site_infl = vec![Vec::new(); sites.len()];
        for (ci, &(_, y)) in cand_sites.iter().enumerate() {
            let src: Vec<usize> = shape.support_of(y).map(|s| win.get(&s).unwrap()).collect();
            let dy = win.bfs(&src, kmax);
            let mut infl = Vec::new();
            for (&wi, &si) in &id {
                let d = dy[wi];
                if d != u32::MAX && d <= shell[si as usize] {
                    infl.push((si, d));
                    site_infl[si as usize].push((ci as u32, d));
                }
            }
            infl.sort();
            let mut conflicts: Vec<u32> = shape
                .conflicts_of(y)
                .filter_map(|z| cindex.get(&z).copied())
                .filter(|&j| j as usize != ci)
                .collect();
            conflicts.sort();
            cands.push(Cand { site: y, infl, conflicts });
        }
        let mut order: Vec<u32> = (0..sites.len() as u32).filter(|&l| shell[l as usize] > 0).collect();
        order.sort_by_key(|&l| (shell[l as usize], sites[l as usize]));
        for v in site_infl.iter_mut() {
            v.sort();
        }
        Ok(LocalSearch {
            center,
            order,
            support_size: sigma0.len(),
            sites,
            shell,
            shell_sizes,
            kmax,
            nbrs,
            cands,
            site_infl,
            radius,
            _shape: std::marker::PhantomData,
        })
    }

    pub fn kmax(&self) -> u32 {
        self.kmax
    }

    pub fn num_candidates(&self) -> usize {
        self.cands.len()
    }

    fn f(st: &State, shell: u32, l: usize) -> f64 {
        if st.excl[l] > 0 || st.pot_strict[l] > 0 {
            return 0.0;
        }
        if shell == 0 {
            return 1.0;
        }
        1.0 / (1 + st.ties[l] + st.pot_tie[l]) as f64
    }

    fn bump(&self, st: &mut State, l: u32, strict: bool, pot: bool, up: bool) {
        let l = l as usize;
        let before = Self::f(st, self.shell[l], l);
        let was_excl = st.excl[l] > 0;
        let c = match (pot, strict) {
            (true, true) => &mut st.pot_strict[l],
            (true, false) => &mut st.pot_tie[l],
            (false, true) => &mut st.excl[l],
            (false, false) => &mut st.ties[l],
        };
        if up {
            *c += 1;
        } else {
            *c -= 1;
        }
        let now_excl = st.excl[l] > 0;
        if was_excl != now_excl {
            let k = self.shell[l] as usize;
            if now_excl {
                st.excl_in_shell[k] += 1;
            } else {
                st.excl_in_shell[k] -= 1;
            }
        }
        st.shell_lb[self.shell[l] as usize] += Self::f(st, self.shell[l], l) - before;
    }

    fn pot(&self, st: &mut State, c: usize, up: bool) {
        for &(l, d) in &self.cands[c].infl {
            self.bump(st, l, d < self.shell[l as usize], true, up);
        }
    }

    fn block(&self, st: &mut State, c: usize) {
        st.unavail[c] += 1;
        if st.unavail[c] == 1 {
            self.pot(st, c, false);
        }
    }

    fn unblock(&self, st: &mut State, c: usize) {
        st.unavail[c] -= 1;
        if st.unavail[c] == 0 {
            self.pot(st, c, true);
        }
    }

    fn include(&self, st: &mut State, c: usize) {
        self.block(st, c);
        st.chosen[c] = true;
        for &(l, d) in &self.cands[c].infl {
            self.bump(st, l, d < self.shell[l as usize], false, true);
        }
        for &j in &self.cands[c].conflicts {
            self.block(st, j as usize);
        }
    }

    fn exclude(&self, st: &mut State, c: usize) {
        for &j in &self.cands[c].conflicts {
            self.unblock(st, j as usize);
        }
        for &(l, d) in &self.cands[c].infl {
            self.bump(st, l, d < self.shell[l as usize], false, false);
        }
        st.chosen[c] = false;
        self.unblock(st, c);
    }

    fn exact_value(&self, st: &State, closure: u32) -> Q {
        let mut v = Q::from_integer(0);
        for l in 0..self.sites.len() {
            if self.shell[l] < closure && st.excl[l] == 0 {
                v += Ratio::new(1, 1 + st.ties[l] as i64);
            }
        }
        v
    }

    /// Sites in or next to the central cell.
    fn owner_probes(&self, st: &State, closure: u32) -> Vec<usize> {
        let mut probe: BTreeSet<usize> = BTreeSet::new();
        for l in 0..self.sites.len() {
            if self.shell[l] < closure && st.excl[l] == 0 {
                probe.insert(l);
                probe.extend(self.nbrs[l].iter().map(|&m| m as usize));
            }
        }
        probe.into_iter().collect()
    }

    fn min_chosen(&self, st: &State, l: usize) -> u32 {
        self.site_infl[l].iter().filter(|&&(c, _)| st.chosen[c as usize]).map(|&(_, d)| d).min().unwrap_or(u32::MAX)
    }

    /// Decide every undecided candidate that could own a probe site, so that N(0) is exact.
    fn resolve(&self, st: &mut State, probes: &[usize], i: usize, closure: u32, value: Q, ctx: &mut Ctx) -> Result<()> {
        st.nodes += 1;
        if st.nodes > ctx.budget {
            return Err(Error::BudgetExceeded(format!("local search exceeded {} nodes", ctx.budget)));
        }
        let Some(&l) = probes.get(i) else {
            let n = self.neighborhood(st, probes);
            ctx.closures.insert(n.clone(), closure);
            ctx.found.entry(value).or_default().insert(n);
            return Ok(());
        };
        let m = self.min_chosen(st, l).min(self.shell[l]);
        let open = self.site_infl[l].iter().find(|&&(c, d)| d <= m && self.available(st, c)).map(|&(c, _)| c as usize);
        let Some(c) = open else {
            return self.resolve(st, probes, i + 1, closure, value, ctx);
        };
        self.include(st, c);
        let r = self.resolve(st, probes, i, closure, value, ctx);
        self.exclude(st, c);
        r?;
        self.block(st, c);
        let r = self.resolve(st, probes, i, closure, value, ctx);
        self.unblock(st, c);
        r
    }

    fn neighborhood(&self, st: &State, probe: &[usize]) -> Vec<Site> {
        let mut out: BTreeSet<Site> = BTreeSet::from([self.center]);
        for &l in probe {
            let d0 = self.shell[l];
            let best = self.site_infl[l]
                .iter()
                .filter(|&&(c, _)| st.chosen[c as usize])
                .map(|&(_, d)| d)
                .min();
            if let Some(best) = best {
                for &(c, d) in &self.site_infl[l] {
                    if st.chosen[c as usize] && d == best && d <= d0 {
                        out.insert(self.cands[c as usize].site);
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    fn fresh_state(&self) -> State {
        let n = self.sites.len();
        let mut st = State {
            chosen: vec![false; self.cands.len()],
            unavail: vec![0; self.cands.len()],
            excl: vec![0; n],
            ties: vec![0; n],
            pot_strict: vec![0; n],
            pot_tie: vec![0; n],
            excl_in_shell: vec![0; self.kmax as usize + 1],
            shell_lb: vec![0.0; self.kmax as usize + 1],
            nodes: 0,
        };
        for c in 0..self.cands.len() {
            for &(l, d) in &self.cands[c].infl {
                if d < self.shell[l as usize] {
                    st.pot_strict[l as usize] += 1;
                } else {
                    st.pot_tie[l as usize] += 1;
                }
            }
        }
        for l in 0..n {
            st.shell_lb[self.shell[l] as usize] += Self::f(&st, self.shell[l], l);
        }
        st
    }

    /// Distinct neighbourhoods of all closed local configurations with inverse density <= cutoff.
    pub fn leaves(&self, cutoff: Q, budget: u64) -> Result<(Vec<LocalLeaf>, u64)> {
        let mut st = self.fresh_state();
        let cut = *cutoff.numer() as f64 / *cutoff.denom() as f64 + 1e-9;
        let mut found: Found = BTreeMap::new();
        let mut closures: HashMap<Vec<Site>, u32> = HashMap::new();
        let mut ctx = Ctx { cut, cutoff, budget, found: &mut found, closures: &mut closures };
        self.rec(&mut st, 0, &mut ctx)?;
        let nodes = st.nodes;
        let mut out = Vec::new();
        for (v, set) in found {
            for n in set {
                let k = closures[&n];
                out.push(LocalLeaf { value: v, neighborhood: n, closure_shell: k });
            }
        }
        Ok((out, nodes))
    }

    /// Shells below `k` are counted by every closure still reachable.
    fn lb(&self, st: &State, pos: usize) -> f64 {
        let k = self.order.get(pos).map_or(self.kmax + 1, |&l| self.shell[l as usize]) as usize;
        st.shell_lb[..k.min(st.shell_lb.len())].iter().sum()
    }

    fn available(&self, st: &State, c: u32) -> bool {
        st.unavail[c as usize] == 0
    }

    fn rec(&self, st: &mut State, pos: usize, ctx: &mut Ctx) -> Result<()> {
        st.nodes += 1;
        if st.nodes > ctx.budget {
            return Err(Error::BudgetExceeded(format!("local search exceeded {} nodes", ctx.budget)));
        }
        if self.lb(st, pos) > ctx.cut {
            return Ok(());
        }
        // A shell just completed: closed if every one of its sites is taken.
        if pos > 0 {
            let prev = self.shell[self.order[pos - 1] as usize];
            let new_shell = pos == self.order.len() || self.shell[self.order[pos] as usize] != prev;
            if new_shell && st.excl_in_shell[prev as usize] == self.shell_sizes[prev as usize] {
                let value = self.exact_value(st, prev);
                if value <= ctx.cutoff {
                    let probes = self.owner_probes(st, prev);
                    return self.resolve(st, &probes, 0, prev, value, ctx);
                }
                return Ok(());
            }
        }
        if pos == self.order.len() {
            return Err(Error::RadiusInsufficient(format!(
                "cell does not close within {} shells at radius {}",
                self.kmax, self.radius
            )));
        }
        let l = self.order[pos] as usize;
        let k = self.shell[l];
        if st.excl[l] > 0 {
            return self.rec(st, pos + 1, ctx);
        }
        let strict: Vec<u32> = self.site_infl[l]
            .iter()
            .filter(|&&(c, d)| d < k && self.available(st, c))
            .map(|&(c, _)| c)
            .collect();
        // Taken: branch on the first chosen excluder.
        for &c in &strict {
            self.include(st, c as usize);
            let r = self.rec(st, pos + 1, ctx);
            self.exclude(st, c as usize);
            r?;
            // Later branches forbid this excluder.
            self.block(st, c as usize);
        }
        // Free: every excluder forbidden.
        let ties: Vec<u32> = self.site_infl[l]
            .iter()
            .filter(|&&(c, d)| d == k && self.available(st, c))
            .map(|&(c, _)| c)
            .collect();
        let r = self.ties_rec(st, pos, &ties, 0, ctx);
        for &c in &strict {
            self.unblock(st, c as usize);
        }
        r
    }

    fn ties_rec(&self, st: &mut State, pos: usize, ties: &[u32], i: usize, ctx: &mut Ctx) -> Result<()> {
        if self.lb(st, pos) > ctx.cut {
            return Ok(());
        }
        if i == ties.len() {
            return self.rec(st, pos + 1, ctx);
        }
        let c = ties[i] as usize;
        if st.unavail[c] > 0 {
            return self.ties_rec(st, pos, ties, i + 1, ctx);
        }
        self.include(st, c);
        let r = self.ties_rec(st, pos, ties, i + 1, ctx);
        self.exclude(st, c);
        r?;
        self.block(st, c);
        let r = self.ties_rec(st, pos, ties, i + 1, ctx);
        self.unblock(st, c);
        r
    }

    /// Optimum, all optimal neighbourhoods and the gap to the next value.
    pub fn optimize(&self, budget: u64) -> Result<LocalOptima> {
        let mut cutoff = Q::from_integer(self.support_size as i64 + 1);
        let mut nodes = 0;
        loop {
            let (leaves, n) = self.leaves(cutoff, budget)?;
            nodes += n;
            let mut by_value: BTreeMap<Q, Vec<Vec<Site>>> = BTreeMap::new();
            for l in leaves {
                by_value.entry(l.value).or_default().push(l.neighborhood);
            }
            if by_value.len() >= 2 || cutoff > Q::from_integer(self.support_size as i64 * 64 + 64) {
                let mut it = by_value.iter();
                let (best, opt) =
                    it.next().ok_or_else(|| Error::RadiusInsufficient("no closed local configuration".into()))?;
                let second = it.next().map(|(v, _)| *v);
                return Ok(LocalOptima {
                    center_cell: self.center.cell,
                    optimum: *best,
                    rho_loc: best.recip(),
                    optima: opt.iter().map(|n| Configuration::new(n.iter().copied())).collect(),
                    second,
                    gap: second.map(|s| s - best),
                    values: by_value.iter().map(|(v, s)| (*v, s.len())).collect(),
                    radius: self.radius,
                    cutoff,
                    nodes,
                });
            }
            cutoff += Q::from_integer(1);
        }
    }
}

struct Ctx<'f> {
    cut: f64,
    cutoff: Q,
    budget: u64,
    found: &'f mut Found,
    closures: &'f mut HashMap<Vec<Site>, u32>,
}

fn centered_box(g: &PeriodicGraph, pad: i32) -> Window {
    let mut lo = [0i32; 3];
    let mut hi = [0i32; 3];
    for i in 0..g.dim {
        lo[i] = -pad;
        hi[i] = pad;
    }
    Window::boxed(g, lo, hi)
}

pub const DEFAULT_LOCAL_BUDGET: u64 = 2_000_000_000;

/// Best over all anchor cell classes.
pub fn max_local_configs(g: &PeriodicGraph, shape: &Shape, radius: u32, budget: u64) -> Result<LocalOptima> {
    let mut best: Option<LocalOptima> = None;
    for c in 0..g.num_cells() {
        let s = LocalSearch::new(g, shape, c as u16, radius)?;
        let r = s.optimize(budget)?;
        best = match best {
            None => Some(r),
            Some(b) if r.optimum < b.optimum => Some(r),
            Some(b) => Some(b),
        };
    }
    Ok(best.expect("at least one cell"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn three_staircase_optima() {
        let g = PeriodicGraph::z2();
        let s = Shape::build(&g, Shape::staircase_descriptor(3)).unwrap();
        let r = max_local_configs(&g, &s, 12, DEFAULT_LOCAL_BUDGET).unwrap();
        assert_eq!(r.optimum, q(7, 1));
        assert_eq!(r.optima.len(), 2);
        assert_eq!(r.gap, Some(q(1, 3)));
    }
}
