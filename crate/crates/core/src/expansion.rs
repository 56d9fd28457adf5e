//! Contour weights, Ursell functions, polymer sums and the truncated pressure series.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::boundary::{xi_sharp, OmegaCheck, SharpPartition, XiOptions};
use crate::contour::{canonical_config, extract_gfcs, supports_apart, Gfc};
use crate::error::{Error, Result};
use crate::lattice::{PeriodicGraph, Region, Site, V3};
use crate::rational::{big_to_f64, fmt_big, to_big};
use crate::system::{Patch, System};

fn zpow(z: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(z.clone(), e as usize)
    } else {
        num_traits::pow(z.recip(), (-e) as usize)
    }
}

/// `z^(|X| - |L ∩ support|)` times the hole ratios `Xi^{label}(H) / Xi^{ext}(H)`.
pub fn gfc_weight(sys: &System, gfc: &Gfc, z: &BigRational, opts: &XiOptions) -> Result<BigRational> {
    let ground = sys.ground(gfc.exterior).sites_in(&gfc.support).len() as i64;
    let mut w = zpow(z, gfc.internal.len() as i64 - ground);
    for (hole, label) in &gfc.holes {
        if *label == gfc.exterior {
            continue;
        }
        let num = xi_sharp(sys, *label, hole, opts)?.poly.eval(z);
        let den = xi_sharp(sys, gfc.exterior, hole, opts)?.poly.eval(z);
        w = w * num / den;
    }
    Ok(w)
}

/// Weight as a function of z: exponent and hole polynomials.
#[derive(Clone, Debug)]
pub struct SymbolicWeight {
    pub exponent: i64,
    pub holes: Vec<(SharpPartition, SharpPartition)>,
}

impl SymbolicWeight {
    pub fn new(sys: &System, gfc: &Gfc, opts: &XiOptions) -> Result<SymbolicWeight> {
        let ground = sys.ground(gfc.exterior).sites_in(&gfc.support).len() as i64;
        let mut holes = Vec::new();
        for (hole, label) in &gfc.holes {
            if *label != gfc.exterior {
                holes.push((xi_sharp(sys, *label, hole, opts)?, xi_sharp(sys, gfc.exterior, hole, opts)?));
            }
        }
        Ok(SymbolicWeight { exponent: gfc.internal.len() as i64 - ground, holes })
    }

    pub fn eval(&self, z: &BigRational) -> BigRational {
        let mut w = zpow(z, self.exponent);
        for (num, den) in &self.holes {
            w = w * num.poly.eval(z) / den.poly.eval(z);
        }
        w
    }
}

/// Ursell function of a tuple given its incompatibility matrix:
/// the signed count of connected spanning subgraphs.
pub fn ursell(incompat: &[Vec<bool>]) -> Result<BigInt> {
    let m = incompat.len();
    if m > 6 {
        return Err(Error::CapExceeded(format!("Ursell function of a {m}-tuple")));
    }
    if m <= 1 {
        return Ok(BigInt::from(m as i64));
    }
    let edges: Vec<(usize, usize)> =
        (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).filter(|&(i, j)| incompat[i][j]).collect();
    let mut total = 0i64;
    for mask in 0u32..(1 << edges.len()) {
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        let mut parts = m;
        for (k, &(i, j)) in edges.iter().enumerate() {
            if mask >> k & 1 == 1 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                    parts -= 1;
                }
            }
        }
        if parts == 1 {
            total += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        }
    }
    Ok(BigInt::from(total))
}

/// A finite polymer system: weights and a symmetric incompatibility relation (reflexive).
#[derive(Clone, Debug)]
pub struct PolymerSystem {
    pub weights: Vec<BigRational>,
    pub incompat: Vec<Vec<bool>>,
}

impl PolymerSystem {
    pub fn new(weights: Vec<BigRational>, incompat: Vec<Vec<bool>>) -> Result<PolymerSystem> {
        let n = weights.len();
        if incompat.len() != n || incompat.iter().any(|r| r.len() != n) {
            return Err(Error::Precondition("incompatibility matrix has the wrong shape".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if incompat[i][j] != incompat[j][i] || (i == j && !incompat[i][i]) {
                    return Err(Error::Precondition("incompatibility must be symmetric and reflexive".into()));
                }
            }
        }
        Ok(PolymerSystem { weights, incompat })
    }

    /// Sum over pairwise compatible subfamilies of the product of weights.
    pub fn partition(&self) -> Result<BigRational> {
        let n = self.weights.len();
        if n > 24 {
            return Err(Error::CapExceeded(format!("{n} polymers")));
        }
        fn rec(s: &PolymerSystem, i: usize, chosen: &mut Vec<usize>) -> BigRational {
            if i == s.weights.len() {
                return BigRational::one();
            }
            let mut acc = rec(s, i + 1, chosen);
            if chosen.iter().all(|&j| !s.incompat[i][j]) {
                chosen.push(i);
                acc += &s.weights[i] * rec(s, i + 1, chosen);
                chosen.pop();
            }
            acc
        }
        Ok(rec(self, 0, &mut Vec::new()))
    }

    /// Terms of the cluster series by tuple length: `(1/m!) sum over ordered m-tuples of phi * prod w`.
    pub fn cluster_terms(&self, max_len: usize) -> Result<Vec<BigRational>> {
        let n = self.weights.len();
        if n == 0 {
            return Ok(vec![BigRational::zero(); max_len]);
        }
        let mut out = Vec::new();
        let mut fact = BigInt::one();
        for m in 1..=max_len {
            fact *= BigInt::from(m as i64);
            let mut sum = BigRational::zero();
            let mut idx = vec![0usize; m];
            loop {
                let mat: Vec<Vec<bool>> = idx.iter().map(|&a| idx.iter().map(|&b| self.incompat[a][b]).collect()).collect();
                let phi = ursell(&mat)?;
                if !phi.is_zero() {
                    let mut p = BigRational::from_integer(phi);
                    for &a in &idx {
                        p *= &self.weights[a];
                    }
                    sum += p;
                }
                let mut k = 0;
                while k < m {
                    idx[k] += 1;
                    if idx[k] < n {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == m {
                    break;
                }
            }
            out.push(sum / BigRational::from_integer(fact.clone()));
        }
        Ok(out)
    }
}

/// Taylor coefficients of `log(P(t))` up to degree `max_deg`, for `P(0) = 1`.
pub fn log_series(p: &[BigRational], max_deg: usize) -> Result<Vec<BigRational>> {
    if p.first().is_none_or(|c| !c.is_one()) {
        return Err(Error::Precondition("series must start with 1".into()));
    }
    let coef = |k: usize| p.get(k).cloned().unwrap_or_else(BigRational::zero);
    // l' = p' / p, so k l_k = k p_k - sum_{j<k} j l_j p_{k-j}.
    let mut l = vec![BigRational::zero(); max_deg + 1];
    for k in 1..=max_deg {
        let mut acc = BigRational::from_integer(BigInt::from(k)) * coef(k);
        for j in 1..k {
            acc -= BigRational::from_integer(BigInt::from(j)) * &l[j] * coef(k - j);
        }
        l[k] = acc / BigRational::from_integer(BigInt::from(k));
    }
    Ok(l)
}

/// Type-# contours of admissible configurations on Λ, each valid on its own under the boundary condition.
pub fn window_gfcs(sys: &System, sharp: usize, lambda: &Region, opts: &XiOptions) -> Result<(SharpPartition, Vec<Gfc>)> {
    let mut o = opts.clone();
    o.keep = true;
    let part = xi_sharp(sys, sharp, lambda, &o)?;
    let ground = sys.ground(sharp).sites_in(lambda);
    let check = OmegaCheck::new(sys, lambda);
    let mut found: BTreeSet<Gfc> = BTreeSet::new();
    for p in &part.configurations {
        if p.inside == ground {
            continue;
        }
        for g in extract_gfcs(sys, p)? {
            if g.exterior != sharp || found.contains(&g) {
                continue;
            }
            let xi = canonical_config(sys, &g)?;
            if xi.region.is_subset(lambda) && check.check(sys, &xi)? {
                found.insert(g);
            }
        }
    }
    Ok((part, found.into_iter().collect()))
}

/// Both sides of the polymer representation of `Xi^#(Λ) / z^{|L ∩ Λ|}`.
#[derive(Clone, Debug)]
pub struct PolymerIdentity {
    pub z: BigRational,
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub contours: usize,
    pub configurations: usize,
}

impl PolymerIdentity {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

pub fn polymer_identity(sys: &System, sharp: usize, lambda: &Region, zs: &[BigRational], opts: &XiOptions) -> Result<Vec<PolymerIdentity>> {
    let (part, gfcs) = window_gfcs(sys, sharp, lambda, opts)?;
    let weights = gfcs.iter().map(|g| SymbolicWeight::new(sys, g, opts)).collect::<Result<Vec<_>>>()?;
    let incompat: Vec<Vec<bool>> =
        gfcs.iter().map(|a| gfcs.iter().map(|b| !supports_apart(&sys.g, &a.support, &b.support)).collect()).collect();
    let mut out = Vec::new();
    for z in zs {
        let lhs = part.poly.eval(z) / zpow(z, part.ground_count as i64);
        let ps = PolymerSystem::new(weights.iter().map(|w| w.eval(z)).collect(), incompat.clone())?;
        out.push(PolymerIdentity {
            z: z.clone(),
            lhs,
            rhs: ps.partition()?,
            contours: gfcs.len(),
            configurations: part.configurations.len(),
        });
    }
    Ok(out)
}

/// Contours up to translation, with a flag telling whether the list is provably complete.
#[derive(Clone, Debug)]
pub struct GfcCatalogue {
    pub sharp: usize,
    pub max_volume: usize,
    /// One representative per translation class by periods of the ground state.
    pub classes: Vec<Gfc>,
    pub complete: bool,
}

/// Contour volumes are at least the smallest particle support.
pub fn volume_floor(sys: &System) -> usize {
    (0..sys.g.num_cells()).map(|c| sys.shape.support_size(c as u16)).min().unwrap_or(1)
}

fn canonical_shift(sys: &System, sharp: usize, gfc: &Gfc) -> Gfc {
    let lat = &sys.ground(sharp).lattice;
    let first = *gfc.support.iter().next().expect("non-empty support");
    let v: V3 = std::array::from_fn(|i| lat.reduce(first.t)[i] - first.t[i]);
    gfc.shift(v)
}

/// Contours of volume at most `max_volume` found by scanning local perturbations of `L^#`:
/// every single deletion and every valid single insertion in one motif period.
pub fn enumerate_gfcs(sys: &System, sharp: usize, max_volume: usize) -> Result<GfcCatalogue> {
    if max_volume < volume_floor(sys) {
        return Ok(GfcCatalogue { sharp, max_volume, classes: Vec::new(), complete: true });
    }
    let gs = sys.ground(sharp);
    let mut seen: BTreeSet<Gfc> = BTreeSet::new();
    let mut patches = Vec::new();
    for m in &gs.motif {
        patches.push(Patch::new(sharp, Region::from([*m]), [])?);
        for y in sys.g.ball(*m, sys.shape.exclusion_reach() as u32 + 1) {
            if gs.contains(&y) {
                continue;
            }
            let blockers: Region = sys.shape.conflicts_of(y).filter(|b| gs.contains(b)).collect();
            let mut region = blockers.clone();
            region.insert(y);
            patches.push(Patch::new(sharp, region, [y])?);
        }
    }
    for p in patches {
        if !p.is_valid(sys) {
            continue;
        }
        for g in extract_gfcs(sys, &p)? {
            if g.exterior == sharp && g.volume() <= max_volume {
                seen.insert(canonical_shift(sys, sharp, &g));
            }
        }
    }
    Ok(GfcCatalogue { sharp, max_volume, classes: seen.into_iter().collect(), complete: false })
}

/// Truncated high-fugacity series for the pressure and a bound on what was dropped.
#[derive(Clone, Debug)]
pub struct TruncatedPressure {
    pub z: BigRational,
    /// `rho_max` times the pivoted cluster sum at a reference site.
    pub series: BigRational,
    /// Cluster contributions with `m >= 2` bounded from the enumerated classes; infinite when the bound does not converge.
    pub cluster_tail: f64,
    /// Classes of volume above the catalogue limit, from the exponential decay estimate.
    pub volume_tail: f64,
    pub max_cluster: usize,
}

impl TruncatedPressure {
    pub fn tail_bound(&self) -> f64 {
        self.cluster_tail + self.volume_tail
    }

    pub fn to_json(&self) -> Value {
        let f = |x: f64| if x.is_finite() { json!(x) } else { json!("inf") };
        json!({
            "z": fmt_big(&self.z),
            "series": fmt_big(&self.series),
            "series_float": big_to_f64(&self.series),
            "tail_bound": f(self.tail_bound()),
            "cluster_tail": f(self.cluster_tail),
            "volume_tail": f(self.volume_tail),
            "max_cluster": self.max_cluster,
        })
    }
}

/// Translates of the catalogue classes by periods of `L^#` whose supports lie within `reach` of `lambda`.
fn instances_near(sys: &System, cat: &GfcCatalogue, lambda: Site, reach: u32) -> Result<Vec<Gfc>> {
    let lat = &sys.ground(cat.sharp).lattice;
    let mut out = Vec::new();
    let ball = sys.g.ball(lambda, reach);
    let mut shifts: BTreeSet<V3> = BTreeSet::new();
    for g in &cat.classes {
        shifts.clear();
        for s in &g.support {
            for b in &ball {
                let v: V3 = std::array::from_fn(|i| b.t[i] - s.t[i]);
                if b.cell == s.cell && lat.contains(v) {
                    shifts.insert(v);
                }
            }
        }
        for v in &shifts {
            out.push(g.shift(*v));
        }
    }
    Ok(out)
}

/// `rho_max * sum_{m <= M} (1/m!) sum over tuples with lambda in the union of phi / |union ∩ L| prod w`.
pub fn truncated_pressure(
    sys: &System,
    cat: &GfcCatalogue,
    z: &BigRational,
    max_cluster: usize,
    tau_z: f64,
    force: bool,
    opts: &XiOptions,
) -> Result<TruncatedPressure> {
    if !cat.complete && !force {
        return Err(Error::IncompleteEnumeration);
    }
    if max_cluster > 6 {
        return Err(Error::CapExceeded(format!("clusters of length {max_cluster}")));
    }
    let gs = sys.ground(cat.sharp);
    let lambda = gs.motif[0];
    let diam = cat.classes.iter().map(|g| g.volume()).max().unwrap_or(0) as u32;
    let inst = if max_cluster == 0 { Vec::new() } else { instances_near(sys, cat, lambda, diam * max_cluster as u32 + 1)? };
    let weights = inst.iter().map(|g| gfc_weight(sys, g, z, opts)).collect::<Result<Vec<_>>>()?;
    let n = inst.len();
    let incompat: Vec<Vec<bool>> =
        inst.iter().map(|a| inst.iter().map(|b| !supports_apart(&sys.g, &a.support, &b.support)).collect()).collect();
    let mut series = BigRational::zero();
    let mut fact = BigInt::one();
    let top = if n == 0 { 0 } else { max_cluster };
    for m in 1..=top {
        fact *= BigInt::from(m as i64);
        let mut idx = vec![0usize; m];
        loop {
            let union: Region = idx.iter().flat_map(|&a| inst[a].support.iter().copied()).collect();
            if union.contains(&lambda) {
                let mat: Vec<Vec<bool>> = idx.iter().map(|&a| idx.iter().map(|&b| incompat[a][b]).collect()).collect();
                let phi = ursell(&mat)?;
                if !phi.is_zero() {
                    let pivot = gs.sites_in(&union).len() as i64;
                    let mut p = BigRational::new(phi, BigInt::from(pivot));
                    for &a in &idx {
                        p *= &weights[a];
                    }
                    series += p / BigRational::from_integer(fact.clone());
                }
            }
            let mut k = 0;
            while k < m {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == m {
                break;
            }
        }
    }
    let series = series * to_big(&sys.rho_max);
    let chi = sys.g.chi() as f64;
    // Kotecky-Preiss style control of the dropped cluster lengths.
    let mass: f64 = inst
        .iter()
        .zip(&weights)
        .filter(|(g, _)| g.support.contains(&lambda) || sys.g.neighbors(lambda).any(|n| g.support.contains(&n)))
        .map(|(g, w)| big_to_f64(&w.abs()) * (chi * g.volume() as f64).exp())
        .sum();
    let cluster_tail = if n == 0 {
        0.0
    } else if mass < 1.0 {
        mass.powi(max_cluster as i32 + 1) / (1.0 - mass)
    } else {
        f64::INFINITY
    };
    let decay = tau_z - chi;
    let volume_tail = if decay > 0.0 {
        let v = cat.max_volume as f64 + 1.0;
        (-decay * v).exp() / (1.0 - (-decay).exp())
    } else {
        f64::INFINITY
    };
    Ok(TruncatedPressure { z: z.clone(), series, cluster_tail, volume_tail, max_cluster })
}

/// Per-volume decay rate of contour weights at fugacity z, `mu (rho_max - rho0) log z - varsigma chi`.
pub fn decay_rate(mu: f64, rho_gap: f64, varsigma: f64, chi: f64, z: f64) -> f64 {
    mu * rho_gap * z.ln() - varsigma * chi
}

/// Exact finite-volume free energy per site relative to the ground state: `(1/|Λ|) log(Xi / z^{|L ∩ Λ|})`.
pub fn finite_volume_excess(part: &SharpPartition, z: &BigRational, volume: usize) -> f64 {
    let ratio = part.poly.eval(z) / zpow(z, part.ground_count as i64);
    crate::rational::ln_big(&ratio) / volume as f64
}

/// Intersection estimate slack: `mu^-1 |inner boundary| - ||L ∩ Λ| - rho_max |Λ||` (non-negative when it holds).
pub fn intersection_slack(sys: &System, sharp: usize, lambda: &Region) -> BigRational {
    let (inner, _) = sys.g.boundaries(lambda);
    let count = BigRational::from_integer(BigInt::from(sys.ground(sharp).sites_in(lambda).len()));
    let expected = to_big(&sys.rho_max) * BigRational::from_integer(BigInt::from(lambda.len()));
    to_big(&sys.mu.recip()) * BigRational::from_integer(BigInt::from(inner.len())) - (count - expected).abs()
}

pub fn catalogue_json(cat: &GfcCatalogue, g: &PeriodicGraph) -> Value {
    let vols: BTreeMap<usize, usize> = cat.classes.iter().fold(BTreeMap::new(), |mut m, c| {
        *m.entry(c.volume()).or_default() += 1;
        m
    });
    json!({
        "ground_state": cat.sharp,
        "max_volume": cat.max_volume,
        "complete": cat.complete,
        "classes": cat.classes.len(),
        "volumes": vols,
        "contours": cat.classes.iter().map(|c| c.to_json(g.dim)).collect::<Vec<_>>(),
    })
}

/// Truncated series against the exact finite-volume pressure on one window.
#[derive(Clone, Debug)]
pub struct PressureComparison {
    pub volume: usize,
    pub ground_count: usize,
    /// `p - (|L ∩ Λ| / |Λ|) log z`.
    pub excess: f64,
    /// The excess rescaled by `rho_max^-1 |Λ| / |L ∩ Λ|`.
    pub scaled: f64,
    pub series: f64,
    pub cluster_tail: f64,
    /// `mu^-1 |inner boundary| / |Λ|`.
    pub boundary_term: f64,
    pub configurations: usize,
}

impl PressureComparison {
    pub fn difference(&self) -> f64 {
        (self.series - self.scaled).abs()
    }

    pub fn allowance(&self) -> f64 {
        self.cluster_tail + self.boundary_term
    }

    pub fn holds(&self) -> bool {
        self.difference() <= self.allowance()
    }

    pub fn to_json(&self) -> Value {
        let f = |x: f64| if x.is_finite() { json!(x) } else { json!("inf") };
        json!({
            "volume": self.volume,
            "ground_count": self.ground_count,
            "configurations": self.configurations,
            "excess": self.excess,
            "scaled_excess": self.scaled,
            "series": self.series,
            "difference": self.difference(),
            "cluster_tail": f(self.cluster_tail),
            "boundary_term": self.boundary_term,
            "holds": self.holds(),
        })
    }
}

pub fn compare_pressure(sys: &System, sharp: usize, lambda: &Region, tp: &TruncatedPressure, opts: &XiOptions) -> Result<PressureComparison> {
    let part = xi_sharp(sys, sharp, lambda, opts)?;
    let volume = lambda.len();
    let excess = finite_volume_excess(&part, &tp.z, volume);
    let rho = big_to_f64(&to_big(&sys.rho_max));
    let scaled = if part.ground_count == 0 { 0.0 } else { excess / rho * volume as f64 / part.ground_count as f64 };
    let (inner, _) = sys.g.boundaries(lambda);
    let boundary_term = big_to_f64(&to_big(&sys.mu.recip())) * inner.len() as f64 / volume as f64;
    Ok(PressureComparison {
        volume,
        ground_count: part.ground_count,
        excess,
        scaled,
        series: big_to_f64(&tp.series),
        cluster_tail: tp.cluster_tail,
        boundary_term,
        configurations: part.poly.total().try_into().unwrap_or(usize::MAX),
    })
}
