//! Model files: lattice, particle shape, optional ground states, isometries and search settings.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::ground::{GroundState, Isometry};
use crate::intlat::IntLattice;
use crate::lattice::{GraphFile, PeriodicGraph, Site, V3};
use crate::rational::{parse_q, Q};
use crate::shape::{Shape, ShapeDescriptor};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LatticeSpec {
    Preset(String),
    Inline(GraphFile),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SiteSpec {
    pub t: Vec<i32>,
    #[serde(default)]
    pub cell: u16,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundStateSpec {
    pub periods: Vec<Vec<i32>>,
    pub motif: Vec<SiteSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchSpec {
    /// Radius of the maximal-local-configuration search.
    pub radius: u32,
    #[serde(default)]
    pub budget: Option<u64>,
}

/// Values a model fixes so that printed constants can be reproduced exactly.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PaperCompat {
    #[serde(default)]
    pub r2: Option<u32>,
    #[serde(default)]
    pub ground_state_count: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<String>,
    #[serde(default)]
    pub r1: Option<u32>,
    /// Offset of the particle whose density dips, relative to the centre.
    #[serde(default)]
    pub witness: Option<Vec<i32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(default)]
    pub name: String,
    pub lattice: LatticeSpec,
    pub shape: ShapeDescriptor,
    #[serde(default)]
    pub ground_states: Option<Vec<GroundStateSpec>>,
    /// Linear parts of extra isometry generators.
    #[serde(default)]
    pub isometries: Option<Vec<Vec<Vec<i32>>>>,
    #[serde(default)]
    pub isoperimetric: Option<String>,
    pub search: SearchSpec,
    #[serde(default)]
    pub paper_compat: Option<PaperCompat>,
}

fn pad3(v: &[i32], path: &str) -> Result<V3> {
    if v.is_empty() || v.len() > 3 {
        return Err(Error::Schema { path: path.into(), message: "expected 1 to 3 integers".into() });
    }
    let mut t = [0; 3];
    t[..v.len()].copy_from_slice(v);
    Ok(t)
}

/// A loaded and validated model.
#[derive(Clone, Debug)]
pub struct Model {
    pub file: ModelFile,
    pub graph: PeriodicGraph,
    pub shape: Shape,
}

impl Model {
    pub fn from_json(text: &str) -> Result<Model> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Model::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Model> {
        let file: ModelFile = serde_path_to_error(value)?;
        Model::new(file)
    }

    pub fn load(path: &Path) -> Result<Model> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Model::from_json(&text)
    }

    pub fn new(file: ModelFile) -> Result<Model> {
        let graph = match &file.lattice {
            LatticeSpec::Preset(name) => PeriodicGraph::preset(name)?,
            LatticeSpec::Inline(f) => PeriodicGraph::from_file(f)?,
        };
        if let ShapeDescriptor::Polyomino(v) = &file.shape {
            if v.iter().any(|o| o[graph.dim..].iter().any(|&x| x != 0)) {
                return Err(Error::Schema { path: "shape.polyomino".into(), message: "offset exceeds the lattice dimension".into() });
            }
        }
        let shape = Shape::build(&graph, file.shape.clone())?;
        let m = Model { file, graph, shape };
        m.hand_ground_states()?;
        m.extra_isometries()?;
        if let Some(e) = m.paper_epsilon()? {
            if e <= Q::from_integer(0) {
                return Err(Error::Schema { path: "paper_compat.epsilon".into(), message: "must be positive".into() });
            }
        }
        Ok(m)
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn paper(&self) -> PaperCompat {
        self.file.paper_compat.clone().unwrap_or_default()
    }

    pub fn paper_epsilon(&self) -> Result<Option<Q>> {
        match self.file.paper_compat.as_ref().and_then(|p| p.epsilon.as_ref()) {
            Some(s) => Ok(Some(parse_q(s).map_err(|e| Error::Schema { path: "paper_compat.epsilon".into(), message: e.to_string() })?)),
            None => Ok(None),
        }
    }

    pub fn paper_witness(&self) -> Result<Option<V3>> {
        match self.file.paper_compat.as_ref().and_then(|p| p.witness.as_ref()) {
            Some(w) => Ok(Some(pad3(w, "paper_compat.witness")?)),
            None => Ok(None),
        }
    }

    pub fn isoperimetric(&self) -> Result<Option<Q>> {
        match &self.file.isoperimetric {
            Some(s) => Ok(Some(parse_q(s).map_err(|e| Error::Schema { path: "isoperimetric".into(), message: e.to_string() })?)),
            None if matches!(&self.file.lattice, LatticeSpec::Preset(p) if p.eq_ignore_ascii_case("z2")) => {
                Ok(Some(Q::new(1, 16)))
            }
            None => Ok(None),
        }
    }

    /// Hand-entered ground states, validated against the shape.
    pub fn hand_ground_states(&self) -> Result<Option<Vec<GroundState>>> {
        let Some(specs) = &self.file.ground_states else { return Ok(None) };
        let mut out = Vec::new();
        for (i, s) in specs.iter().enumerate() {
            let path = format!("ground_states[{i}]");
            let periods = s.periods.iter().map(|p| pad3(p, &format!("{path}.periods"))).collect::<Result<Vec<_>>>()?;
            let lat = IntLattice::from_generators(self.graph.dim, &periods)
                .map_err(|e| Error::Schema { path: format!("{path}.periods"), message: e.to_string() })?;
            let mut motif = Vec::new();
            for m in &s.motif {
                if m.cell as usize >= self.graph.num_cells() {
                    return Err(Error::Schema { path: format!("{path}.motif"), message: "cell index out of range".into() });
                }
                motif.push(Site::new(pad3(&m.t, &format!("{path}.motif"))?, m.cell));
            }
            let gs = GroundState::new(lat, motif);
            gs.validate(&self.shape)?;
            out.push(gs);
        }
        Ok(Some(out))
    }

    pub fn extra_isometries(&self) -> Result<Vec<Isometry>> {
        let Some(list) = &self.file.isometries else { return Ok(Vec::new()) };
        let d = self.graph.dim;
        let mut out = Vec::new();
        for (k, m) in list.iter().enumerate() {
            if m.len() != d || m.iter().any(|r| r.len() != d) {
                return Err(Error::Schema { path: format!("isometries[{k}]"), message: format!("expected a {d}x{d} matrix") });
            }
            let mut lin = [[0, 0, 0], [0, 1, 0], [0, 0, 1]];
            for i in 0..3 {
                for j in 0..3 {
                    lin[i][j] = if i < d && j < d { m[i][j] } else { (i == j) as i32 };
                }
            }
            out.push(Isometry::linear(&self.graph, lin).validate(&self.graph, &self.shape)?);
        }
        Ok(out)
    }

    pub fn budget(&self) -> u64 {
        self.file.search.budget.unwrap_or(crate::local::DEFAULT_LOCAL_BUDGET)
    }
}

/// Deserializes while tracking the JSON path of the first error.
fn serde_path_to_error(value: Value) -> Result<ModelFile> {
    for key in ["lattice", "shape", "search"] {
        if value.get(key).is_none() {
            return Err(Error::Schema { path: key.into(), message: "missing field".into() });
        }
    }
    for key in ["lattice", "shape", "search", "ground_states", "isometries", "paper_compat"] {
        if let Some(v) = value.get(key) {
            let probe = match key {
                "lattice" => serde_json::from_value::<LatticeSpec>(v.clone()).err(),
                "shape" => serde_json::from_value::<ShapeDescriptor>(v.clone()).err(),
                "search" => serde_json::from_value::<SearchSpec>(v.clone()).err(),
                "ground_states" => serde_json::from_value::<Option<Vec<GroundStateSpec>>>(v.clone()).err(),
                "isometries" => serde_json::from_value::<Option<Vec<Vec<Vec<i32>>>>>(v.clone()).err(),
                _ => serde_json::from_value::<Option<PaperCompat>>(v.clone()).err(),
            };
            if let Some(e) = probe {
                return Err(Error::Schema { path: key.into(), message: e.to_string() });
            }
        }
    }
    serde_json::from_value(value).map_err(|e| Error::Schema { path: "$".into(), message: e.to_string() })
}
