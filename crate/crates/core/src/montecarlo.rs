//! Grand-canonical Metropolis sampling with a frozen ground-state collar.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lattice::{Region, Site, Window};
use crate::system::System;

const INSERT: usize = 0;
const DELETE: usize = 1;
const NONE: u32 = u32::MAX;

/// Sampler for `z^{|X ∩ Λ|}` on configurations agreeing with `L^#` on the collar.
#[derive(Clone, Debug)]
pub struct Sampler {
    win: Window,
    /// Frame indices of Λ, in site order.
    lambda: Vec<u32>,
    /// Frame index to position in `lambda`.
    slot: Vec<u32>,
    /// Overlapping anchors among Λ and the collar.
    conflicts: Vec<Vec<u32>>,
    occ: Vec<bool>,
    /// Occupied anchors overlapping each site.
    blocked: Vec<u32>,
    particles: Vec<u32>,
    ppos: Vec<u32>,
    /// Ground states containing each Λ site.
    grounds_at: Vec<Vec<u16>>,
    num_grounds: usize,
    sharp: usize,
    z: f64,
    seed: u64,
    sweeps: u64,
    proposed: [u64; 3],
    accepted: [u64; 3],
}

fn min1(x: f64) -> f64 {
    x.min(1.0)
}

fn qmin1(x: BigRational) -> BigRational {
    if x > BigRational::one() {
        BigRational::one()
    } else {
        x
    }
}

impl Sampler {
    /// Λ starts in the ground state `sharp`; the collar has width `collar` (default `R2 + 2 r_eff`).
    pub fn new(sys: &System, sharp: usize, lambda: &Region, z: f64, seed: u64, collar: Option<u32>) -> Result<Sampler> {
        if sharp >= sys.grounds.len() {
            return Err(Error::Precondition(format!("ground state {sharp} does not exist")));
        }
        if lambda.is_empty() {
            return Err(Error::Precondition("empty window".into()));
        }
        if !(z >= 0.0 && z.is_finite()) {
            return Err(Error::Precondition("fugacity must be finite and non-negative".into()));
        }
        let need = sys.r2 + 2 * sys.r_eff;
        let width = collar.unwrap_or(need);
        if width < need {
            return Err(Error::Precondition(format!("collar width {width} below R2 + 2 r_eff = {need}")));
        }
        let pad = width as i32 + 2 * sys.shape.exclusion_reach() + 2;
        let (lo, hi) = sys.g.bounding_box(lambda, pad);
        let win = Window::boxed(&sys.g, lo, hi);
        let n = win.len();
        let lam_idx: Vec<usize> = lambda.iter().map(|s| win.get(s).expect("window covers the region")).collect();
        let dist = win.bfs(&lam_idx, width);
        let mut slot = vec![NONE; n];
        for (k, &i) in lam_idx.iter().enumerate() {
            slot[i] = k as u32;
        }
        let live = |i: usize| dist[i] != u32::MAX;
        let mut conflicts = vec![Vec::new(); n];
        for i in 0..n {
            if !live(i) {
                continue;
            }
            let s = win.sites[i];
            for b in sys.shape.conflicts_of(s) {
                if b == s {
                    continue;
                }
                if let Some(j) = win.get(&b) {
                    if live(j) {
                        conflicts[i].push(j as u32);
                    }
                }
            }
        }
        let mut occ = vec![false; n];
        for i in 0..n {
            if live(i) && sys.in_ground(sharp, &win.sites[i]) {
                occ[i] = true;
            }
        }
        let mut blocked = vec![0u32; n];
        for i in 0..n {
            if occ[i] {
                for &j in &conflicts[i] {
                    blocked[j as usize] += 1;
                }
            }
        }
        let mut particles = Vec::new();
        let mut ppos = vec![NONE; n];
        for &i in &lam_idx {
            if occ[i] {
                ppos[i] = particles.len() as u32;
                particles.push(i as u32);
            }
        }
        let grounds_at = lam_idx
            .iter()
            .map(|&i| (0..sys.grounds.len()).filter(|&k| sys.in_ground(k, &win.sites[i])).map(|k| k as u16).collect())
            .collect();
        Ok(Sampler {
            win,
            lambda: lam_idx.iter().map(|&i| i as u32).collect(),
            slot,
            conflicts,
            occ,
            blocked,
            particles,
            ppos,
            grounds_at,
            num_grounds: sys.grounds.len(),
            sharp,
            z,
            seed,
            sweeps: 0,
            proposed: [0; 3],
            accepted: [0; 3],
        })
    }

    pub fn volume(&self) -> usize {
        self.lambda.len()
    }

    pub fn count(&self) -> usize {
        self.particles.len()
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    pub fn sites(&self) -> Vec<Site> {
        self.lambda.iter().map(|&i| self.win.sites[i as usize]).collect()
    }

    /// Particles in Λ.
    pub fn particles(&self) -> BTreeSet<Site> {
        self.particles.iter().map(|&i| self.win.sites[i as usize]).collect()
    }

    /// Collar particles.
    pub fn collar(&self) -> BTreeSet<Site> {
        (0..self.win.len()).filter(|&i| self.occ[i] && self.slot[i] == NONE).map(|i| self.win.sites[i]).collect()
    }

    /// Occupied Λ positions, sorted.
    pub fn state(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.particles.iter().map(|&i| self.slot[i as usize]).collect();
        v.sort_unstable();
        v
    }

    pub fn degree(&self, i: usize) -> usize {
        self.win.nbrs[i].len()
    }

    fn place(&mut self, i: usize) {
        self.occ[i] = true;
        for k in 0..self.conflicts[i].len() {
            self.blocked[self.conflicts[i][k] as usize] += 1;
        }
        self.ppos[i] = self.particles.len() as u32;
        self.particles.push(i as u32);
    }

    fn remove(&mut self, i: usize) {
        self.occ[i] = false;
        for k in 0..self.conflicts[i].len() {
            self.blocked[self.conflicts[i][k] as usize] -= 1;
        }
        let p = self.ppos[i] as usize;
        let last = self.particles.pop().expect("particle present");
        if last as usize != i {
            self.particles[p] = last;
            self.ppos[last as usize] = p as u32;
        }
        self.ppos[i] = NONE;
    }

    fn overlaps(&self, a: usize, b: usize) -> bool {
        self.conflicts[a].contains(&(b as u32))
    }

    /// One proposal. Returns the move kind and whether it was accepted.
    pub fn step(&mut self, rng: &mut impl Rng) -> (usize, bool) {
        let kind = rng.gen_range(0..3);
        self.proposed[kind] += 1;
        let vol = self.lambda.len() as f64;
        let n = self.particles.len();
        let ok = match kind {
            INSERT => {
                let i = self.lambda[rng.gen_range(0..self.lambda.len())] as usize;
                let a = min1(self.z * vol / (n + 1) as f64);
                let u: f64 = rng.gen();
                if !self.occ[i] && self.blocked[i] == 0 && u < a {
                    self.place(i);
                    true
                } else {
                    false
                }
            }
            DELETE => {
                if n == 0 {
                    false
                } else {
                    let i = self.particles[rng.gen_range(0..n)] as usize;
                    let a = min1(n as f64 / (self.z * vol));
                    let u: f64 = rng.gen();
                    if u < a {
                        self.remove(i);
                        true
                    } else {
                        false
                    }
                }
            }
            _ => {
                if n == 0 {
                    false
                } else {
                    let i = self.particles[rng.gen_range(0..n)] as usize;
                    let d = self.win.nbrs[i].len();
                    let j = self.win.nbrs[i][rng.gen_range(0..d)] as usize;
                    let u: f64 = rng.gen();
                    let free = self.slot[j] != NONE
                        && !self.occ[j]
                        && self.blocked[j] == u32::from(self.overlaps(i, j));
                    if free && u < min1(d as f64 / self.degree(j) as f64) {
                        self.remove(i);
                        self.place(j);
                        true
                    } else {
                        false
                    }
                }
            }
        };
        if ok {
            self.accepted[kind] += 1;
        }
        (kind, ok)
    }

    /// `|Λ|` proposals drawn from the stream keyed by `(seed, sweep)`.
    pub fn sweep(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.sweeps);
        for _ in 0..self.lambda.len() {
            self.step(&mut rng);
        }
        self.sweeps += 1;
    }

    pub fn acceptance(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = if self.proposed[k] == 0 { 0.0 } else { self.accepted[k] as f64 / self.proposed[k] as f64 };
        }
        out
    }

    /// Whether the current configuration is hard-core valid and the collar untouched.
    pub fn is_consistent(&self, sys: &System) -> bool {
        for i in 0..self.win.len() {
            if self.slot[i] == NONE && !self.conflicts[i].is_empty() && self.occ[i] != sys.in_ground(self.sharp, &self.win.sites[i]) {
                return false;
            }
            if self.occ[i] && self.conflicts[i].iter().any(|&j| self.occ[j as usize]) {
                return false;
            }
        }
        true
    }

    fn free_in(&self, occ: &BTreeSet<u32>, i: usize, ignore: Option<usize>) -> bool {
        !occ.contains(&(i as u32))
            && self.conflicts[i].iter().all(|&j| {
                let j = j as usize;
                Some(j) == ignore || if self.slot[j] == NONE { !self.occ[j] } else { !occ.contains(&(j as u32)) }
            })
    }

    /// All collar-compatible configurations of Λ as sorted position lists, up to `limit`.
    pub fn admissible(&self, limit: usize) -> Result<Vec<Vec<u32>>> {
        let cand: Vec<usize> = self
            .lambda
            .iter()
            .map(|&i| i as usize)
            .filter(|&i| self.conflicts[i].iter().all(|&j| self.slot[j as usize] != NONE || !self.occ[j as usize]))
            .collect();
        let mut out = Vec::new();
        let mut chosen: Vec<usize> = Vec::new();
        fn rec(s: &Sampler, cand: &[usize], k: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<u32>>, limit: usize) -> bool {
            if k == cand.len() {
                if out.len() >= limit {
                    return false;
                }
                let mut v: Vec<u32> = chosen.iter().map(|&i| s.slot[i]).collect();
                v.sort_unstable();
                out.push(v);
                return true;
            }
            if !rec(s, cand, k + 1, chosen, out, limit) {
                return false;
            }
            let i = cand[k];
            if chosen.iter().all(|&c| !s.overlaps(c, i)) {
                chosen.push(i);
                let ok = rec(s, cand, k + 1, chosen, out, limit);
                chosen.pop();
                return ok;
            }
            true
        }
        if !rec(self, &cand, 0, &mut chosen, &mut out, limit) {
            return Err(Error::BudgetExceeded(format!("more than {limit} admissible configurations")));
        }
        out.sort();
        Ok(out)
    }

    /// Exact one-step transition probabilities out of `state` (positions in Λ), self-loop included.
    pub fn kernel(&self, state: &[u32], z: &BigRational) -> BTreeMap<Vec<u32>, BigRational> {
        let occ: BTreeSet<u32> = state.iter().map(|&k| self.lambda[k as usize]).collect();
        let vol = BigRational::from_integer(self.lambda.len().into());
        let n = occ.len();
        let nq = BigRational::from_integer(n.into());
        let third = BigRational::new(1.into(), 3.into());
        let mut out: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        let mut add = |key: BTreeSet<u32>, p: BigRational| {
            let mut v: Vec<u32> = key.iter().map(|&i| self.slot[i as usize]).collect();
            v.sort_unstable();
            *out.entry(v).or_insert_with(BigRational::zero) += p;
        };
        let mut moved = BigRational::zero();
        for &i in &self.lambda {
            let i = i as usize;
            if self.free_in(&occ, i, None) {
                let a = if z.is_zero() { BigRational::zero() } else { qmin1(z * &vol / BigRational::from_integer((n + 1).into())) };
                let p = &third / &vol * a;
                let mut next = occ.clone();
                next.insert(i as u32);
                moved += &p;
                add(next, p);
            }
        }
        if n > 0 {
            for &i in &occ {
                let a = if z.is_zero() { BigRational::one() } else { qmin1(&nq / (z * &vol)) };
                let p = &third / &nq * a;
                let mut next = occ.clone();
                next.remove(&i);
                moved += &p;
                add(next, p);
                let i = i as usize;
                let d = self.degree(i);
                for &j in &self.win.nbrs[i] {
                    let j = j as usize;
                    if self.slot[j] == NONE || !self.free_in(&occ, j, Some(i)) {
                        continue;
                    }
                    let a = qmin1(BigRational::new(d.into(), self.degree(j).into()));
                    let p = &third / &nq / BigRational::from_integer(d.into()) * a;
                    let mut next = occ.clone();
                    next.remove(&(i as u32));
                    next.insert(j as u32);
                    moved += &p;
                    add(next, p);
                }
            }
        }
        add(occ, BigRational::one() - moved);
        out
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub z: f64,
    pub sweeps: u64,
    /// Sweeps discarded before measuring.
    pub burn_in: u64,
    pub seed: u64,
    pub batches: usize,
    /// Record the particle count every this many sweeps; 0 disables.
    pub trace_every: u64,
    pub collar: Option<u32>,
}

impl RunOptions {
    pub fn new(z: f64, sweeps: u64, seed: u64) -> RunOptions {
        RunOptions { z, sweeps, burn_in: sweeps / 10, seed, batches: 20, trace_every: 0, collar: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub err: f64,
}

fn batch_estimate(values: &[f64]) -> Estimate {
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0) } else { 0.0 };
    Estimate { mean, err: (var / b).sqrt() }
}

#[derive(Clone, Debug)]
pub struct Observables {
    pub z: f64,
    pub seed: u64,
    pub sweeps: u64,
    pub burn_in: u64,
    pub sites: Vec<Site>,
    pub occupancy: Vec<f64>,
    pub density: Estimate,
    /// Largest minus second largest share of occupancy on a ground-state sublattice.
    pub order_parameter: Estimate,
    /// Share of the mean occupancy carried by each ground state's sites.
    pub shares: Vec<f64>,
    /// Mean occupancy of Λ sites on and off `L^#`.
    pub on_ground: f64,
    pub off_ground: f64,
    pub acceptance: [f64; 3],
    /// `(sweep, particles in Λ)`.
    pub trace: Vec<(u64, usize)>,
    pub final_particles: BTreeSet<Site>,
    pub collar: BTreeSet<Site>,
}

fn shares(occ: &[f64], grounds_at: &[Vec<u16>], k: usize) -> Vec<f64> {
    let total: f64 = occ.iter().sum();
    let mut s = vec![0.0; k];
    for (o, gs) in occ.iter().zip(grounds_at) {
        for &g in gs {
            s[g as usize] += o;
        }
    }
    if total > 0.0 {
        for v in &mut s {
            *v /= total;
        }
    }
    s
}

fn order_of(shares: &[f64]) -> f64 {
    let mut v = shares.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    match v.len() {
        0 => 0.0,
        1 => v[0],
        _ => v[0] - v[1],
    }
}

pub fn run(sys: &System, sharp: usize, lambda: &Region, opts: &RunOptions) -> Result<Observables> {
    let mut s = Sampler::new(sys, sharp, lambda, opts.z, opts.seed, opts.collar)?;
    let batches = opts.batches.max(1);
    if opts.sweeps < batches as u64 {
        return Err(Error::Precondition(format!("need at least {batches} measured sweeps")));
    }
    for _ in 0..opts.burn_in {
        s.sweep();
    }
    s.proposed = [0; 3];
    s.accepted = [0; 3];
    let vol = s.volume();
    let per = opts.sweeps / batches as u64;
    let mut total = vec![0u64; vol];
    let mut dens = Vec::new();
    let mut orders = Vec::new();
    let mut trace = Vec::new();
    let mut measured = 0u64;
    for b in 0..batches {
        let len = if b + 1 == batches { opts.sweeps - per * (batches as u64 - 1) } else { per };
        let mut acc = vec![0u64; vol];
        let mut n_sum = 0u64;
        for _ in 0..len {
            s.sweep();
            for &i in &s.particles {
                acc[s.slot[i as usize] as usize] += 1;
            }
            n_sum += s.particles.len() as u64;
            measured += 1;
            if opts.trace_every > 0 && measured % opts.trace_every == 0 {
                trace.push((s.sweeps, s.particles.len()));
            }
        }
        dens.push(n_sum as f64 / (len as f64 * vol as f64));
        let occ: Vec<f64> = acc.iter().map(|&c| c as f64 / len as f64).collect();
        orders.push(order_of(&shares(&occ, &s.grounds_at, s.num_grounds)));
        for (t, a) in total.iter_mut().zip(&acc) {
            *t += a;
        }
    }
    let occupancy: Vec<f64> = total.iter().map(|&c| c as f64 / opts.sweeps as f64).collect();
    let sh = shares(&occupancy, &s.grounds_at, s.num_grounds);
    let mut on = (0.0, 0usize);
    let mut off = (0.0, 0usize);
    for (o, gs) in occupancy.iter().zip(&s.grounds_at) {
        let t = if gs.contains(&(sharp as u16)) { &mut on } else { &mut off };
        t.0 += o;
        t.1 += 1;
    }
    let mut order = batch_estimate(&orders);
    order.mean = order_of(&sh);
    Ok(Observables {
        z: opts.z,
        seed: opts.seed,
        sweeps: opts.sweeps,
        burn_in: opts.burn_in,
        sites: s.sites(),
        occupancy,
        density: batch_estimate(&dens),
        order_parameter: order,
        shares: sh,
        on_ground: if on.1 == 0 { 0.0 } else { on.0 / on.1 as f64 },
        off_ground: if off.1 == 0 { 0.0 } else { off.0 / off.1 as f64 },
        acceptance: s.acceptance(),
        trace,
        final_particles: s.particles(),
        collar: s.collar(),
    })
}

impl Observables {
    pub fn to_json(&self) -> Value {
        let occ: Vec<Value> = self.sites.iter().zip(&self.occupancy).map(|(s, o)| json!({"site": [s.t[0], s.t[1], s.t[2], s.cell], "mean": o})).collect();
        json!({
            "z": self.z,
            "seed": self.seed,
            "sweeps": self.sweeps,
            "burn_in": self.burn_in,
            "density": self.density,
            "order_parameter": self.order_parameter,
            "shares": self.shares,
            "on_ground": self.on_ground,
            "off_ground": self.off_ground,
            "acceptance": {"insert": self.acceptance[0], "delete": self.acceptance[1], "translate": self.acceptance[2]},
            "occupancy": occ,
        })
    }

    pub fn trace_csv(&self) -> String {
        let mut s = String::from("sweep,particles\n");
        for (t, n) in &self.trace {
            s.push_str(&format!("{t},{n}\n"));
        }
        s
    }
}

/// Boltzmann weights `z^n / Σ` of the admissible configurations.
pub fn exact_weights(states: &[Vec<u32>], z: &BigRational) -> Vec<f64> {
    let w: Vec<BigRational> = states.iter().map(|s| num_traits::pow(z.clone(), s.len())).collect();
    let total: BigRational = w.iter().fold(BigRational::zero(), |a, b| a + b);
    w.iter().map(|x| (x / &total).to_f64().unwrap_or(f64::NAN)).collect()
}

/// Per-state visit frequencies after every sweep, with batch-means errors.
pub fn state_frequencies(sampler: &mut Sampler, states: &[Vec<u32>], sweeps: u64, batches: usize) -> Result<Vec<Estimate>> {
    let index: BTreeMap<&Vec<u32>, usize> = states.iter().enumerate().map(|(k, s)| (s, k)).collect();
    let per = (sweeps / batches as u64).max(1);
    let mut rows = Vec::new();
    for _ in 0..batches {
        let mut c = vec![0u64; states.len()];
        for _ in 0..per {
            sampler.sweep();
            let st = sampler.state();
            let k = *index.get(&st).ok_or_else(|| Error::InvalidConfiguration("sampler left the admissible set".into()))?;
            c[k] += 1;
        }
        rows.push(c.iter().map(|&x| x as f64 / per as f64).collect::<Vec<f64>>());
    }
    Ok((0..states.len()).map(|k| batch_estimate(&rows.iter().map(|r| r[k]).collect::<Vec<_>>())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::box_region;
    use crate::ground::GroundState;
    use crate::intlat::IntLattice;
    use crate::lattice::PeriodicGraph;
    use crate::shape::Shape;

    fn monomers() -> System {
        let g = PeriodicGraph::z2();
        let shape = Shape::build(&g, crate::shape::ShapeDescriptor::Polyomino(vec![[0, 0, 0]])).unwrap();
        let gs = GroundState::new(IntLattice::from_generators(2, &[[1, 0, 0], [0, 1, 0]]).unwrap(), [Site::xy(0, 0)]);
        System::new(g, shape, vec![gs], 1).unwrap()
    }

    #[test]
    fn two_site_window_matches_exact_weights() {
        let sys = monomers();
        let lam = box_region([0, 0, 0], [1, 0, 0], 1);
        let mut s = Sampler::new(&sys, 0, &lam, 1.0, 3, None).unwrap();
        let states = s.admissible(16).unwrap();
        assert_eq!(states.len(), 4);
        let exact = exact_weights(&states, &BigRational::one());
        let est = state_frequencies(&mut s, &states, 100_000, 20).unwrap();
        for (e, x) in est.iter().zip(&exact) {
            assert!((e.mean - x).abs() <= 3.0 * e.err.max(1e-3), "{e:?} vs {x}");
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let sys = monomers();
        let lam = box_region([0, 0, 0], [3, 3, 0], 1);
        let mut a = Sampler::new(&sys, 0, &lam, 0.7, 11, None).unwrap();
        let mut b = a.clone();
        for _ in 0..50 {
            a.sweep();
            b.sweep();
        }
        assert_eq!(a.state(), b.state());
    }
}
