//! #-correctness and (#, R2)-correctness of particles.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::config::Configuration;
use crate::error::Result;
use crate::ground::GroundData;
use crate::lattice::{PeriodicGraph, Site};
use crate::shape::Shape;
use crate::voronoi::Voronoi;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Not #-correct for any ground state.
    Incorrect,
    /// #-correct but some R2-neighbour is not.
    Correct(usize),
    /// (#, R2)-correct.
    RCorrect(usize),
    /// Cells near the particle were not resolved inside the window.
    Unknown,
}

impl Label {
    /// Member of the R2-incorrect set.
    pub fn is_r_incorrect(&self) -> bool {
        matches!(self, Label::Incorrect | Label::Correct(_))
    }

    pub fn name(&self) -> String {
        match self {
            Label::Incorrect => "incorrect".into(),
            Label::Correct(k) => format!("correct:{k}"),
            Label::RCorrect(k) => format!("rcorrect:{k}"),
            Label::Unknown => "unknown".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sharp {
    Unknown,
    No,
    Yes(usize),
}

/// Memoised per-particle classification on one Voronoi diagram.
pub struct Classifier<'a> {
    vor: &'a Voronoi,
    grounds: &'a [GroundData],
    r2: u32,
    sharp: Vec<Option<Sharp>>,
}

impl<'a> Classifier<'a> {
    pub fn new(vor: &'a Voronoi, grounds: &'a [GroundData], r2: u32) -> Self {
        Classifier { vor, grounds, r2, sharp: vec![None; vor.particles.len()] }
    }

    fn unresolved(&self) -> Sharp {
        // With nothing outside the window an escaping cell is genuinely infinite,
        // and an infinite cell never matches a reference cell.
        if self.vor.exact.is_some() {
            Sharp::Unknown
        } else {
            Sharp::No
        }
    }

    fn sharp(&mut self, p: usize) -> Sharp {
        if let Some(s) = self.sharp[p] {
            return s;
        }
        let x = self.vor.particles[p];
        let homes: Vec<usize> = (0..self.grounds.len()).filter(|&k| self.grounds[k].gs.contains(&x)).collect();
        let s = if homes.is_empty() {
            Sharp::No
        } else {
            match self.vor.neighbors(p) {
                Err(_) => self.unresolved(),
                Ok(nb) => {
                    let nb: BTreeSet<Site> = nb.into_iter().map(|i| self.vor.particles[i]).collect();
                    homes
                        .into_iter()
                        .find(|&k| self.grounds[k].neighbors_of(&x).as_ref() == Some(&nb))
                        .map_or(Sharp::No, Sharp::Yes)
                }
            }
        };
        self.sharp[p] = Some(s);
        s
    }

    pub fn label(&mut self, p: usize) -> Label {
        let own = self.sharp(p);
        let rn = match self.vor.r_neighbors(p, self.r2) {
            Ok(rn) => rn,
            Err(_) => {
                return match (own, self.vor.exact.is_some()) {
                    (Sharp::No, _) => Label::Incorrect,
                    (Sharp::Yes(k), false) => Label::Correct(k),
                    _ => Label::Unknown,
                };
            }
        };
        let mut unknown = false;
        let mut common: Option<usize> = None;
        let mut broken = false;
        for q in rn {
            match self.sharp(q) {
                Sharp::Unknown => unknown = true,
                Sharp::No => broken = true,
                Sharp::Yes(k) => match common {
                    None => common = Some(k),
                    Some(c) if c != k => broken = true,
                    _ => {}
                },
            }
        }
        match own {
            Sharp::No => Label::Incorrect,
            Sharp::Unknown => Label::Unknown,
            Sharp::Yes(k) => {
                if broken {
                    Label::Correct(k)
                } else if unknown {
                    Label::Unknown
                } else {
                    Label::RCorrect(k)
                }
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorrectnessReport {
    pub labels: BTreeMap<Site, Label>,
    pub correct_sets: BTreeMap<usize, BTreeSet<Site>>,
    pub incorrect: BTreeSet<Site>,
    pub unknown: BTreeSet<Site>,
}

impl CorrectnessReport {
    pub fn from_labels(labels: BTreeMap<Site, Label>) -> Self {
        let mut r = CorrectnessReport { labels, ..Default::default() };
        for (s, l) in &r.labels {
            match l {
                Label::RCorrect(k) => {
                    r.correct_sets.entry(*k).or_default().insert(*s);
                }
                Label::Unknown => {
                    r.unknown.insert(*s);
                }
                _ => {
                    r.incorrect.insert(*s);
                }
            }
        }
        r
    }

    pub fn to_json(&self, dim: usize) -> Value {
        let site = |s: &Site| json!({"t": s.t[..dim].to_vec(), "cell": s.cell});
        json!({
            "labels": self.labels.iter().map(|(s, l)| json!({"site": site(s), "label": l.name()})).collect::<Vec<_>>(),
            "correct_sets": self.correct_sets.iter().map(|(k, v)| (k.to_string(), Value::from(v.iter().map(site).collect::<Vec<_>>()))).collect::<serde_json::Map<_, _>>(),
            "incorrect": self.incorrect.iter().map(site).collect::<Vec<_>>(),
            "unknown": self.unknown.iter().map(site).collect::<Vec<_>>(),
        })
    }
}

/// Labels every particle of a finite configuration (nothing outside it).
pub fn classify(
    g: &PeriodicGraph,
    shape: &Shape,
    x: &Configuration,
    grounds: &[GroundData],
    r2: u32,
    margin: i32,
) -> Result<CorrectnessReport> {
    let vor = Voronoi::new(g, shape, &x.occupied, margin.max(r2 as i32 + 2));
    let mut c = Classifier::new(&vor, grounds, r2);
    let labels = (0..vor.particles.len()).map(|p| (vor.particles[p], c.label(p))).collect();
    Ok(CorrectnessReport::from_labels(labels))
}
