//! Randomized defect configurations and the contour round-trip audit.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::contour::{canonical_config, peierls_check, Frame};
use crate::error::{Error, Result};
use crate::lattice::{Region, Site};
use crate::rational::{fmt_q, Q};
use crate::system::{Patch, System};

/// Whether `s` can be added to the patch without overlap.
fn fits(sys: &System, patch: &Patch, s: Site) -> bool {
    !patch.contains(sys, &s) && sys.shape.conflicts_of(s).all(|b| b == s || !patch.contains(sys, &b))
}

/// Ground state `base` with random deletions, insertions and a random sequential fill on a small box.
/// Redrawn until it differs from the ground state.
pub fn random_patch(sys: &System, base: usize, radius: i32, rng: &mut impl Rng) -> Patch {
    loop {
        let p = draw_patch(sys, base, radius, rng);
        if p.inside != sys.ground(base).sites_in(&p.region) {
            return p;
        }
    }
}

fn draw_patch(sys: &System, base: usize, radius: i32, rng: &mut impl Rng) -> Patch {
    let g = &sys.g;
    let mut c = [0; 3];
    for v in c.iter_mut().take(g.dim) {
        *v = rng.gen_range(-3..=3);
    }
    let mut lo = c;
    let mut hi = c;
    for i in 0..g.dim {
        lo[i] -= rng.gen_range(0..=radius);
        hi[i] += rng.gen_range(0..=radius);
    }
    let region: Region = crate::enumerate::box_region(lo, hi, g.num_cells());
    let mut patch = Patch { base, region: region.clone(), inside: sys.ground(base).sites_in(&region) };
    let p_del = rng.gen_range(0.1..0.7);
    patch.inside.retain(|_| !rng.gen_bool(p_del));
    let mut sites: Vec<Site> = region.iter().copied().collect();
    let tries = rng.gen_range(0..=sites.len() / 4);
    for _ in 0..tries {
        let s = sites[rng.gen_range(0..sites.len())];
        if fits(sys, &patch, s) {
            patch.inside.insert(s);
        }
    }
    if rng.gen_bool(0.5) {
        let p_fill = rng.gen_range(0.2..1.0);
        sites.shuffle(rng);
        for s in sites {
            if rng.gen_bool(p_fill) && fits(sys, &patch, s) {
                patch.inside.insert(s);
            }
        }
    }
    patch
}

#[derive(Clone, Debug, Default)]
pub struct RoundTripReport {
    pub trials: usize,
    /// Configurations with at least one contour.
    pub defective: usize,
    pub contours: usize,
    pub largest_support: usize,
    /// Round trip differs.
    pub mismatches: Vec<String>,
    /// Peierls inequality violated.
    pub peierls_failures: Vec<String>,
    /// Effective volume differs between the configuration and the canonical one.
    pub volume_mismatches: Vec<String>,
    /// Extraction errors, by trial.
    pub errors: Vec<String>,
}

impl RoundTripReport {
    pub fn round_trip_ok(&self) -> bool {
        self.mismatches.is_empty() && self.errors.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "trials": self.trials,
            "defective": self.defective,
            "contours": self.contours,
            "largest_support": self.largest_support,
            "mismatches": self.mismatches,
            "peierls_failures": self.peierls_failures,
            "volume_mismatches": self.volume_mismatches,
            "errors": self.errors,
        })
    }
}

pub fn small_rational(x: &BigRational) -> Result<Q> {
    match (x.numer().to_i64(), x.denom().to_i64()) {
        (Some(n), Some(d)) => Ok(Q::new(n, d)),
        _ => Err(Error::Precondition(format!("{x} does not fit machine integers"))),
    }
}

/// Extract, rebuild each contour's canonical configuration, re-extract; also Peierls and effective volume.
pub fn round_trip(sys: &System, trials: usize, seed: u64, radius: i32, rho0: Q) -> RoundTripReport {
    let mut rep = RoundTripReport { trials, ..Default::default() };
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let base = rng.gen_range(0..sys.grounds.len());
        let patch = random_patch(sys, base, radius, &mut rng);
        if let Err(e) = check_one(sys, &patch, rho0, t, &mut rep) {
            rep.errors.push(format!("trial {t}: {e}"));
        }
    }
    rep
}

fn check_one(sys: &System, patch: &Patch, rho0: Q, t: usize, rep: &mut RoundTripReport) -> Result<()> {
    let frame = Frame::new(sys, patch)?;
    let gammas = frame.gfcs()?;
    if !gammas.is_empty() {
        rep.defective += 1;
    }
    for (k, gamma) in gammas.iter().enumerate() {
        rep.contours += 1;
        rep.largest_support = rep.largest_support.max(gamma.volume());
        let xi = canonical_config(sys, gamma)?;
        let fx = Frame::new(sys, &xi)?;
        let back = fx.gfcs()?;
        if back.len() != 1 || back[0] != *gamma {
            rep.mismatches.push(format!("trial {t} contour {k}: re-extraction gave {} contours", back.len()));
            continue;
        }
        let on_x = frame.effective_volume(gamma);
        let on_xi = fx.effective_volume(gamma);
        if on_x != on_xi {
            rep.volume_mismatches.push(format!("trial {t} contour {k}: {} vs {}", fmt_q(&on_x.value), fmt_q(&on_xi.value)));
        }
        let p = peierls_check(gamma, &on_xi, rho0);
        if !p.holds {
            rep.peierls_failures.push(format!("trial {t} contour {k}: {} > {}", p.lhs, fmt_q(&p.rhs)));
        }
    }
    Ok(())
}
