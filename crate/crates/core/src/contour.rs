//! Gaunt-Fisher configurations: extraction, canonical configurations, effective volume, Peierls checks.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde_json::{json, Value};

use crate::correct::{Classifier, Label};
use crate::error::{Error, Result};
use crate::lattice::{PeriodicGraph, Region, Site, Window, V3};
use crate::rational::{fmt_q, Q};
use crate::system::{Patch, System};
use crate::voronoi::Voronoi;

/// Support, internal configuration and labels of the complement components.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gfc {
    pub support: Region,
    pub internal: BTreeSet<Site>,
    pub exterior: usize,
    /// Holes ordered by their smallest site.
    pub holes: Vec<(Region, usize)>,
}

fn site_json(s: &Site, dim: usize) -> Value {
    json!({"t": s.t[..dim].to_vec(), "cell": s.cell})
}

impl Gfc {
    /// Support together with all holes.
    pub fn int(&self) -> Region {
        let mut r = self.support.clone();
        for (h, _) in &self.holes {
            r.extend(h.iter().copied());
        }
        r
    }

    pub fn volume(&self) -> usize {
        self.support.len()
    }

    /// Same contour moved by a translation.
    pub fn shift(&self, v: V3) -> Gfc {
        Gfc {
            support: self.support.iter().map(|s| s.shift(v)).collect(),
            internal: self.internal.iter().map(|s| s.shift(v)).collect(),
            exterior: self.exterior,
            holes: self.holes.iter().map(|(h, k)| (h.iter().map(|s| s.shift(v)).collect(), *k)).collect(),
        }
    }

    pub fn to_json(&self, dim: usize) -> Value {
        json!({
            "support": self.support.iter().map(|s| site_json(s, dim)).collect::<Vec<_>>(),
            "internal": self.internal.iter().map(|s| site_json(s, dim)).collect::<Vec<_>>(),
            "exterior": self.exterior,
            "holes": self.holes.iter().map(|(h, k)| json!({
                "label": k,
                "sites": h.iter().map(|s| site_json(s, dim)).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// A classified window around the modified region of a patch.
pub struct Frame<'a> {
    pub sys: &'a System,
    pub patch: Patch,
    pub vor: Voronoi,
    pub labels: Vec<Label>,
    pub zone: (V3, V3),
}

fn in_box(s: &Site, lo: V3, hi: V3) -> bool {
    (0..3).all(|i| s.t[i] >= lo[i] && s.t[i] <= hi[i])
}

impl<'a> Frame<'a> {
    pub fn new(sys: &'a System, patch: &Patch) -> Result<Frame<'a>> {
        let g = &sys.g;
        let focus: Region = if patch.region.is_empty() {
            Region::from([Site::new([0; 3], 0)])
        } else {
            patch.region.clone()
        };
        let (lo, hi) = g.bounding_box(&focus, sys.frame_pad());
        let zone = g.bounding_box(&focus, sys.zone_pad());
        let settled = g.bounding_box(&focus, sys.zone_pad() - sys.r_eff as i32 - sys.shape.reach() - 2);
        let win = Window::boxed(g, lo, hi);
        let parts = patch.particles_in_box(sys, lo, hi);
        let vor = Voronoi::on_window_open(&sys.shape, &parts, win);
        let mut c = Classifier::new(&vor, &sys.grounds, sys.r2);
        let mut labels = vec![Label::RCorrect(patch.base); vor.particles.len()];
        for (p, x) in vor.particles.iter().enumerate() {
            if !in_box(x, zone.0, zone.1) {
                continue;
            }
            let l = c.label(p);
            if l == Label::Unknown {
                return Err(Error::RadiusInsufficient(format!("particle {x:?} could not be classified")));
            }
            if !in_box(x, settled.0, settled.1) && l != Label::RCorrect(patch.base) {
                return Err(Error::RadiusInsufficient(format!("defect reaches the classification margin at {x:?}")));
            }
            labels[p] = l;
        }
        Ok(Frame { sys, patch: patch.clone(), vor, labels, zone })
    }

    pub fn label_of(&self, x: &Site) -> Option<Label> {
        self.vor.pindex.get(x).map(|&p| self.labels[p as usize])
    }

    pub fn r_incorrect(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&p| self.labels[p].is_r_incorrect()).collect()
    }

    /// Union of the cells of all R2-incorrect particles.
    pub fn incorrect_cover(&self) -> Result<Region> {
        let mut u = Region::new();
        for p in self.r_incorrect() {
            u.extend(self.vor.cell_region(p)?);
        }
        Ok(u)
    }

    /// Label shared by the correct particles whose cells meet `touch`.
    fn lining_label(&self, touch: &BTreeSet<Site>) -> Result<usize> {
        let mut found = BTreeSet::new();
        for s in touch {
            let i = self
                .vor
                .win
                .get(s)
                .ok_or_else(|| Error::RadiusInsufficient(format!("{s:?} is outside the frame")))?;
            for &o in &self.vor.owners[i] {
                match self.labels[o as usize] {
                    Label::RCorrect(k) => {
                        found.insert(k);
                    }
                    l => {
                        return Err(Error::InconsistentLabels(format!(
                            "site {s:?} next to a contour is owned by a particle labelled {}",
                            l.name()
                        )))
                    }
                }
            }
        }
        match found.len() {
            1 => Ok(*found.iter().next().unwrap()),
            0 => Err(Error::InconsistentLabels("complement component with no correct particle".into())),
            _ => Err(Error::InconsistentLabels(format!("complement component lined by ground states {found:?}"))),
        }
    }

    pub fn gfcs(&self) -> Result<Vec<Gfc>> {
        let g = &self.sys.g;
        let cover = self.incorrect_cover()?;
        let mut out = Vec::new();
        for support in g.connected_components(&cover, 1) {
            let holes = g.holes(&support);
            let in_hole: BTreeSet<Site> = holes.iter().flatten().copied().collect();
            let mut ext_touch = BTreeSet::new();
            let mut hole_touch: Vec<BTreeSet<Site>> = vec![BTreeSet::new(); holes.len()];
            for s in &support {
                for n in g.neighbors(*s) {
                    if support.contains(&n) {
                        continue;
                    }
                    if in_hole.contains(&n) {
                        let j = holes.iter().position(|h| h.contains(&n)).unwrap();
                        hole_touch[j].insert(n);
                    } else {
                        ext_touch.insert(n);
                    }
                }
            }
            let exterior = self.lining_label(&ext_touch)?;
            let mut labelled = Vec::new();
            for (h, t) in holes.into_iter().zip(hole_touch.iter()) {
                labelled.push((h, self.lining_label(t)?));
            }
            labelled.sort_by_key(|(h, _)| *h.iter().next().unwrap());
            let internal = self.vor.particles.iter().filter(|x| support.contains(x)).copied().collect();
            out.push(Gfc { support, internal, exterior, holes: labelled });
        }
        Ok(out)
    }

    /// Effective volume of a contour evaluated on this frame's configuration.
    pub fn effective_volume(&self, gfc: &Gfc) -> EffectiveVolume {
        let mut per_site = BTreeMap::new();
        let mut value = Q::from_integer(0);
        for lam in &gfc.support {
            let mut term = Q::from_integer(1);
            for (k, d) in self.sys.grounds.iter().enumerate() {
                for (x, w) in d.coverers(lam) {
                    if self.label_of(&x) == Some(Label::RCorrect(k)) {
                        term -= w;
                    }
                }
            }
            value += term;
            per_site.insert(*lam, term);
        }
        EffectiveVolume { value, per_site }
    }

    /// A particle within `s0` of the R2-incorrect particle `x` whose inverse local density exceeds the optimum by `eps`.
    pub fn dip_witness(&self, x: &Site, s0: u32, eps: Q) -> Result<(Site, u32, Q)> {
        match self.label_of(x) {
            Some(l) if l.is_r_incorrect() => {}
            Some(_) => return Err(Error::Precondition(format!("{x:?} is not R2-incorrect"))),
            None => return Err(Error::Precondition(format!("{x:?} is not a particle"))),
        }
        let target = self.sys.rho_max.recip() + eps;
        let ball = self.sys.g.ball(*x, s0);
        let mut best: Option<(u32, Site, Q)> = None;
        for (p, y) in self.vor.particles.iter().enumerate() {
            if !ball.contains(y) {
                continue;
            }
            let Ok(inv) = self.vor.inv_density(p) else { continue };
            if inv >= target {
                let d = self.sys.g.distance(*x, *y)?;
                if best.as_ref().is_none_or(|b| (d, *y) < (b.0, b.1)) {
                    best = Some((d, *y, inv));
                }
            }
        }
        best.map(|(d, y, inv)| (y, d, inv)).ok_or_else(|| Error::NoWitness(format!("no density dip within {s0} of {x:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectiveVolume {
    pub value: Q,
    pub per_site: BTreeMap<Site, Q>,
}

/// Contours of a patch configuration.
pub fn extract_gfcs(sys: &System, patch: &Patch) -> Result<Vec<Gfc>> {
    Frame::new(sys, patch)?.gfcs()
}

/// The contour with every complement component filled by its labelled ground state.
pub fn canonical_config(sys: &System, gfc: &Gfc) -> Result<Patch> {
    let mut inside = gfc.internal.clone();
    for (h, k) in &gfc.holes {
        inside.extend(h.iter().filter(|s| sys.in_ground(*k, s)).copied());
    }
    let p = Patch { base: gfc.exterior, region: gfc.int(), inside };
    if !p.is_valid(sys) {
        return Err(Error::R2TooSmall("canonical configuration has overlapping particles".into()));
    }
    Ok(p)
}

pub fn effective_volume(sys: &System, gfc: &Gfc) -> Result<EffectiveVolume> {
    let xi = canonical_config(sys, gfc)?;
    Ok(Frame::new(sys, &xi)?.effective_volume(gfc))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeierlsCheck {
    pub holds: bool,
    pub lhs: usize,
    pub rhs: Q,
}

pub fn peierls_check(gfc: &Gfc, volume: &EffectiveVolume, rho0: Q) -> PeierlsCheck {
    let rhs = rho0 * volume.value;
    let lhs = gfc.internal.len();
    PeierlsCheck { holds: Q::from_integer(lhs as i64) <= rhs, lhs, rhs }
}

/// Supports at graph distance greater than one.
pub fn compatible(g: &PeriodicGraph, a: &Gfc, b: &Gfc) -> Result<bool> {
    if a.exterior != b.exterior {
        return Err(Error::DifferentExteriorLabels);
    }
    Ok(supports_apart(g, &a.support, &b.support))
}

pub fn supports_apart(g: &PeriodicGraph, a: &Region, b: &Region) -> bool {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    !small.iter().any(|s| large.contains(s) || g.neighbors(*s).any(|n| large.contains(&n)))
}

pub fn volume_json(v: &EffectiveVolume) -> Value {
    json!({
        "value": fmt_q(&v.value),
        "sites": v.per_site.len(),
        "below_one": v.per_site.values().filter(|w| **w < Ratio::from_integer(1)).count(),
    })
}
