//! Command-line front end.

use std::collections::BTreeSet;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::assumption::{verify_assumption, AssumptionParams, Mode};
use crate::boundary::{xi_sharp, XiOptions};
use crate::config::{first_overlap, Configuration};
use crate::constants::{build_system, compute_constants, ModelConstants};
use crate::contour::{canonical_config, extract_gfcs, peierls_check, volume_json, Frame};
use crate::corpus::{round_trip, small_rational};
use crate::correct::classify;
use crate::enumerate::box_region;
use crate::error::{Error, Result};
use crate::expansion::{catalogue_json, compare_pressure, decay_rate, enumerate_gfcs, truncated_pressure};
use crate::lattice::{Region, Site};
use crate::model::Model;
use crate::montecarlo::{run, RunOptions};
use crate::rational::{big_to_f64, fmt_big, fmt_q, parse_big, to_big};
use crate::svg::{Layer, Scene};
use crate::system::{Patch, System};
use crate::voronoi::Voronoi;

#[derive(Parser, Debug)]
#[command(name = "hardcore", version, about = "Hard-core lattice particles: ground states, contours, exact partition functions, expansion and sampling")]
pub struct Cli {
    /// Emit machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArg {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ModeArg {
    /// paper-compat or best.
    #[arg(long, default_value = "paper-compat")]
    pub mode: Mode,
}

#[derive(Args, Debug, Clone)]
pub struct WindowArg {
    /// Box window WxH anchored at the origin.
    #[arg(long = "box", default_value = "12x12")]
    pub window: String,
    /// Index of the boundary ground state.
    #[arg(long = "ground-state", default_value_t = 0)]
    pub ground_state: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Model file operations.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Voronoi cells of a finite configuration.
    Voronoi {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        config: PathBuf,
    },
    /// Exact local densities of a finite configuration.
    Density {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        config: PathBuf,
        /// Restrict to one particle, e.g. 3,-4 or 3,-4:1 for cell 1.
        #[arg(long, allow_hyphen_values = true)]
        site: Option<String>,
    },
    /// Correctness labels of every particle.
    Classify {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        mode: ModeArg,
        #[arg(long)]
        config: PathBuf,
    },
    /// Contour extraction and the round-trip audit.
    Gfc {
        #[command(subcommand)]
        action: GfcAction,
    },
    /// Check the ground-state assumption and derive R0, R1, S1, epsilon.
    VerifyAssumption {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        mode: ModeArg,
    },
    /// Exact constants up to the fugacity threshold.
    Constants {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        mode: ModeArg,
    },
    /// Exact partition function under the ground-state boundary condition.
    Xi {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        mode: ModeArg,
        #[command(flatten)]
        window: WindowArg,
        /// Fugacities at which to evaluate, e.g. 1,10,1/2.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        z: Vec<String>,
        /// Largest number of free sites.
        #[arg(long, default_value_t = 64)]
        cap: usize,
    },
    /// Truncated high-fugacity pressure series.
    Expansion {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        mode: ModeArg,
        #[command(flatten)]
        window: WindowArg,
        #[arg(long)]
        z: String,
        #[arg(long = "max-volume", default_value_t = 30)]
        max_volume: usize,
        #[arg(long = "max-cluster", default_value_t = 1)]
        max_cluster: usize,
        /// Accept an incomplete contour catalogue.
        #[arg(long)]
        force: bool,
        /// Skip the exact comparison window.
        #[arg(long = "no-compare")]
        no_compare: bool,
    },
    /// Metropolis sampling with a frozen ground-state collar.
    Mc {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        mode: ModeArg,
        #[command(flatten)]
        window: WindowArg,
        #[arg(long)]
        z: f64,
        #[arg(long, default_value_t = 10_000)]
        sweeps: u64,
        #[arg(long = "burn-in")]
        burn_in: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Full observables including per-site occupancy.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Particle-count time series.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Snapshot of the final configuration.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Draw a configuration as SVG.
    Render {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overlay contour supports (needs the assumption to pass).
        #[arg(long)]
        contours: bool,
        #[command(flatten)]
        mode: ModeArg,
    },
}

#[derive(Subcommand, Debug)]
pub enum ModelAction {
    /// Parse and validate a model file.
    Validate {
        #[command(flatten)]
        model: ModelArg,
    },
}

#[derive(Subcommand, Debug)]
pub enum GfcAction {
    /// Contours of a patch configuration.
    Extract {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        mode: ModeArg,
        #[arg(long)]
        config: PathBuf,
    },
    /// Round trip, Peierls and effective-volume audit on random configurations.
    Check {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        mode: ModeArg,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Half-width of the perturbed box.
        #[arg(long, default_value_t = 3)]
        radius: i32,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SiteIn {
    Coords(Vec<i32>),
    Full {
        t: Vec<i32>,
        #[serde(default)]
        cell: u16,
    },
}

/// A finite configuration, or a patch of ground state `base` when `base` is given.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    particles: Vec<SiteIn>,
    #[serde(default)]
    base: Option<usize>,
    #[serde(default)]
    region: Option<Vec<SiteIn>>,
    /// `[lo, hi]` corners of a box region.
    #[serde(default, rename = "box")]
    boxed: Option<[Vec<i32>; 2]>,
}

enum Input {
    Finite(Configuration),
    Patch(Patch),
}

fn to_site(s: &SiteIn, dim: usize) -> Result<Site> {
    let (t, cell) = match s {
        SiteIn::Coords(v) => (v, 0),
        SiteIn::Full { t, cell } => (t, *cell),
    };
    if t.len() != dim {
        return Err(Error::Schema { path: "particles".into(), message: format!("expected {dim} coordinates, got {}", t.len()) });
    }
    let mut a = [0; 3];
    a[..dim].copy_from_slice(t);
    Ok(Site::new(a, cell))
}

fn pad(v: &[i32], dim: usize) -> Result<[i32; 3]> {
    if v.len() != dim {
        return Err(Error::Schema { path: "box".into(), message: format!("expected {dim} coordinates") });
    }
    let mut a = [0; 3];
    a[..dim].copy_from_slice(v);
    Ok(a)
}

fn read_input(model: &Model, path: &Path) -> Result<Input> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let f: ConfigFile = serde_json::from_str(&text).map_err(|e| Error::Schema { path: path.display().to_string(), message: e.to_string() })?;
    let dim = model.graph.dim;
    let cells = model.graph.num_cells();
    let particles = f.particles.iter().map(|s| to_site(s, dim)).collect::<Result<BTreeSet<_>>>()?;
    if let Some(s) = particles.iter().find(|s| s.cell as usize >= cells) {
        return Err(Error::Schema { path: "particles".into(), message: format!("cell index {} out of range", s.cell) });
    }
    if let Some((a, b)) = first_overlap(&model.shape, &particles) {
        return Err(Error::InvalidConfiguration(format!("particles at {:?} and {:?} overlap", a.t, b.t)));
    }
    let Some(base) = f.base else {
        return Ok(Input::Finite(Configuration::new(particles)));
    };
    let mut region: Region = match &f.region {
        Some(r) => r.iter().map(|s| to_site(s, dim)).collect::<Result<_>>()?,
        None => Region::new(),
    };
    if let Some([lo, hi]) = &f.boxed {
        region.extend(box_region(pad(lo, dim)?, pad(hi, dim)?, cells));
    }
    Ok(Input::Patch(Patch::new(base, region, particles)?))
}

fn parse_window(w: &WindowArg, model: &Model) -> Result<Region> {
    let bad = || Error::Parse(format!("window must look like 12x12, got {:?}", w.window));
    let dims: Vec<i32> = w.window.split('x').map(|p| p.trim().parse::<i32>().map_err(|_| bad())).collect::<Result<_>>()?;
    let dim = model.graph.dim;
    if dims.len() != dim || dims.iter().any(|&d| d <= 0) {
        return Err(bad());
    }
    let mut hi = [0; 3];
    for i in 0..dim {
        hi[i] = dims[i] - 1;
    }
    Ok(box_region([0; 3], hi, model.graph.num_cells()))
}

pub fn parse_site(s: &str, dim: usize) -> Result<Site> {
    let (coords, cell) = match s.split_once(':') {
        Some((c, k)) => (c, k.trim().parse::<u16>().map_err(|_| Error::Parse(format!("bad cell in {s:?}")))?),
        None => (s, 0),
    };
    let v: Vec<i32> = coords.split(',').map(|p| p.trim().parse::<i32>().map_err(|_| Error::Parse(format!("bad site {s:?}")))).collect::<Result<_>>()?;
    to_site(&SiteIn::Full { t: v, cell }, dim)
}

struct Pipeline {
    model: Model,
    constants: ModelConstants,
    sys: System,
}

fn pipeline(model: Model, mode: Mode) -> Result<Pipeline> {
    let report = verify_assumption(&model, &AssumptionParams::for_model(&model, mode))?;
    let constants = compute_constants(&model, &report, mode)?;
    let sys = build_system(&model, &report, &constants)?;
    Ok(Pipeline { model, constants, sys })
}

fn site_json(s: &Site, dim: usize) -> Value {
    if s.cell == 0 {
        json!(s.t[..dim].to_vec())
    } else {
        json!({"t": s.t[..dim].to_vec(), "cell": s.cell})
    }
}

fn check_ground(p: &Pipeline, k: usize) -> Result<()> {
    if k >= p.sys.grounds.len() {
        return Err(Error::Precondition(format!("ground state {k} does not exist ({} available)", p.sys.grounds.len())));
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn execute(cmd: &Command) -> Result<Value> {
    match cmd {
        Command::Model { action: ModelAction::Validate { model } } => {
            let m = Model::load(&model.model)?;
            let g = &m.graph;
            let cells = 0..g.num_cells();
            Ok(json!({
                "valid": true,
                "name": m.name(),
                "dimension": g.dim,
                "cells": g.num_cells(),
                "chi": g.chi(),
                "support_sizes": cells.clone().map(|c| m.shape.support_size(c as u16)).collect::<Vec<_>>(),
                "exclusion_sizes": cells.map(|c| m.shape.exclusion_len(c as u16)).collect::<Vec<_>>(),
                "hand_ground_states": m.hand_ground_states()?.map(|v| v.len()),
                "extra_isometries": m.extra_isometries()?.len(),
            }))
        }
        Command::Voronoi { model, config } => {
            let m = Model::load(&model.model)?;
            let Input::Finite(x) = read_input(&m, config)? else {
                return Err(Error::Precondition("voronoi expects a finite configuration (no base)".into()));
            };
            let dim = m.graph.dim;
            let vor = Voronoi::new(&m.graph, &m.shape, &x.occupied, m.shape.reach() + 2);
            let cells: Vec<Value> = (0..vor.particles.len())
                .map(|p| {
                    let bounded = vor.is_bounded(p);
                    json!({
                        "particle": site_json(&vor.particles[p], dim),
                        "bounded": bounded,
                        "cell": if bounded { json!(vor.cell_region(p).map(|r| r.iter().map(|s| site_json(s, dim)).collect::<Vec<_>>()).unwrap_or_default()) } else { Value::Null },
                        "inverse_density": vor.inv_density(p).ok().map(|q| fmt_q(&q)),
                        "neighbors": vor.neighbors(p).ok().map(|v| v.iter().map(|&i| site_json(&vor.particles[i], dim)).collect::<Vec<_>>()),
                    })
                })
                .collect();
            Ok(json!({"particles": vor.particles.len(), "cells": cells}))
        }
        Command::Density { model, config, site } => {
            let m = Model::load(&model.model)?;
            let Input::Finite(x) = read_input(&m, config)? else {
                return Err(Error::Precondition("density expects a finite configuration (no base)".into()));
            };
            let dim = m.graph.dim;
            let vor = Voronoi::new(&m.graph, &m.shape, &x.occupied, m.shape.reach() + 2);
            let targets: Vec<usize> = match site {
                Some(s) => vec![vor.index_of(&parse_site(s, dim)?)?],
                None => (0..vor.particles.len()).collect(),
            };
            let mut out = Vec::new();
            for p in targets {
                let d = if site.is_some() { Some(vor.local_density(p)?) } else { vor.local_density(p).ok() };
                out.push(json!({"particle": site_json(&vor.particles[p], dim), "density": d.map(|q| fmt_q(&q))}));
            }
            Ok(json!({"densities": out}))
        }
        Command::Classify { model, mode, config } => {
            let p = pipeline(Model::load(&model.model)?, mode.mode)?;
            let dim = p.model.graph.dim;
            match read_input(&p.model, config)? {
                Input::Finite(x) => {
                    let rep = classify(&p.sys.g, &p.sys.shape, &x, &p.sys.grounds, p.sys.r2, p.sys.r2 as i32 + 2)?;
                    Ok(rep.to_json(dim))
                }
                Input::Patch(patch) => {
                    check_ground(&p, patch.base)?;
                    let f = Frame::new(&p.sys, &patch)?;
                    let labels: Vec<Value> = f
                        .vor
                        .particles
                        .iter()
                        .enumerate()
                        .filter(|(_, x)| (0..3).all(|i| x.t[i] >= f.zone.0[i] && x.t[i] <= f.zone.1[i]))
                        .map(|(k, x)| json!({"site": site_json(x, dim), "label": f.labels[k].name()}))
                        .collect();
                    let incorrect: Vec<Value> = f.r_incorrect().iter().map(|&k| site_json(&f.vor.particles[k], dim)).collect();
                    Ok(json!({"r2": p.sys.r2, "labels": labels, "incorrect": incorrect}))
                }
            }
        }
        Command::Gfc { action: GfcAction::Extract { model, mode, config } } => {
            let p = pipeline(Model::load(&model.model)?, mode.mode)?;
            let Input::Patch(patch) = read_input(&p.model, config)? else {
                return Err(Error::Precondition("gfc extract expects a patch (give base and region)".into()));
            };
            check_ground(&p, patch.base)?;
            if !patch.is_valid(&p.sys) {
                return Err(Error::InvalidConfiguration("patch overlaps the surrounding ground state".into()));
            }
            let dim = p.model.graph.dim;
            let rho0 = small_rational(&p.constants.rho0)?;
            let frame = Frame::new(&p.sys, &patch)?;
            let mut out = Vec::new();
            for g in frame.gfcs()? {
                let v = frame.effective_volume(&g);
                let back = canonical_config(&p.sys, &g).and_then(|xi| extract_gfcs(&p.sys, &xi));
                let round_trip = matches!(&back, Ok(b) if b.len() == 1 && b[0] == g);
                let pc = peierls_check(&g, &v, rho0);
                let mut j = g.to_json(dim);
                j["effective_volume"] = volume_json(&v);
                j["peierls"] = json!({"holds": pc.holds, "particles": pc.lhs, "bound": fmt_q(&pc.rhs)});
                j["round_trip"] = json!(round_trip);
                out.push(j);
            }
            Ok(json!({"contours": out}))
        }
        Command::Gfc { action: GfcAction::Check { model, mode, trials, seed, radius } } => {
            let p = pipeline(Model::load(&model.model)?, mode.mode)?;
            let rep = round_trip(&p.sys, *trials, *seed, *radius, small_rational(&p.constants.rho0)?);
            let mut j = rep.to_json();
            j["seed"] = json!(seed);
            j["passed"] = json!(rep.round_trip_ok() && rep.peierls_failures.is_empty() && rep.volume_mismatches.is_empty());
            Ok(j)
        }
        Command::VerifyAssumption { model, mode } => {
            let m = Model::load(&model.model)?;
            let r = verify_assumption(&m, &AssumptionParams::for_model(&m, mode.mode))?;
            let mut j = r.to_json(m.graph.dim);
            j["passed"] = json!(r.passed());
            Ok(j)
        }
        Command::Constants { model, mode } => {
            let m = Model::load(&model.model)?;
            let r = verify_assumption(&m, &AssumptionParams::for_model(&m, mode.mode))?;
            Ok(compute_constants(&m, &r, mode.mode)?.to_json())
        }
        Command::Xi { model, mode, window, z, cap } => {
            let p = pipeline(Model::load(&model.model)?, mode.mode)?;
            check_ground(&p, window.ground_state)?;
            let lambda = parse_window(window, &p.model)?;
            let zs = z.iter().map(|s| parse_big(s)).collect::<Result<Vec<_>>>()?;
            let part = xi_sharp(&p.sys, window.ground_state, &lambda, &XiOptions { cap: *cap, ..Default::default() })?;
            let values: Vec<Value> = zs
                .iter()
                .map(|z| {
                    let xi = part.poly.eval(z);
                    json!({"z": fmt_big(z), "xi": fmt_big(&xi), "ratio": fmt_big(&(xi / num_traits::pow(z.clone(), part.ground_count)))})
                })
                .collect();
            Ok(json!({
                "window": lambda.len(),
                "ground_count": part.ground_count,
                "free_sites": part.free_sites,
                "examined": part.examined,
                "coefficients": part.poly.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "k_max": part.poly.k_max(),
                "top": part.poly.top().to_string(),
                "values": values,
            }))
        }
        Command::Expansion { model, mode, window, z, max_volume, max_cluster, force, no_compare } => {
            let p = pipeline(Model::load(&model.model)?, mode.mode)?;
            check_ground(&p, window.ground_state)?;
            let zq = parse_big(z)?;
            let zf = big_to_f64(&zq);
            let c = &p.constants;
            let gap = big_to_f64(&(to_big(&c.rho_max) - &c.rho0));
            let tau_z = decay_rate(big_to_f64(&to_big(&c.mu)), gap, big_to_f64(&to_big(&c.varsigma)), c.chi as f64, zf);
            let opts = XiOptions::default();
            let cat = enumerate_gfcs(&p.sys, window.ground_state, *max_volume)?;
            let tp = truncated_pressure(&p.sys, &cat, &zq, *max_cluster, tau_z, *force, &opts)?;
            let mut j = tp.to_json();
            j["catalogue"] = catalogue_json(&cat, &p.sys.g);
            j["compared_exact"] = if *no_compare {
                Value::Null
            } else {
                let lambda = parse_window(window, &p.model)?;
                compare_pressure(&p.sys, window.ground_state, &lambda, &tp, &opts)?.to_json()
            };
            Ok(j)
        }
        Command::Mc { model, mode, window, z, sweeps, burn_in, seed, out, csv, svg } => {
            let p = pipeline(Model::load(&model.model)?, mode.mode)?;
            check_ground(&p, window.ground_state)?;
            let lambda = parse_window(window, &p.model)?;
            let mut opts = RunOptions::new(*z, *sweeps, *seed);
            if let Some(b) = burn_in {
                opts.burn_in = *b;
            }
            opts.trace_every = if csv.is_some() { 1.max(sweeps / 1000) } else { 0 };
            let obs = run(&p.sys, window.ground_state, &lambda, &opts)?;
            if let Some(path) = out {
                write_file(path, &serde_json::to_string_pretty(&obs.to_json()).expect("serializable"))?;
            }
            if let Some(path) = csv {
                write_file(path, &obs.trace_csv())?;
            }
            if let Some(path) = svg {
                let scene = Scene {
                    g: &p.sys.g,
                    shape: &p.sys.shape,
                    frame: lambda.clone(),
                    layers: vec![Layer { name: "collar".into(), sites: obs.collar.clone(), fill: "#999999".into() }],
                    particles: obs.final_particles.clone(),
                    title: format!("z = {z}, {} sweeps", sweeps),
                };
                write_file(path, &scene.render())?;
            }
            let mut j = obs.to_json();
            if let Some(o) = j.as_object_mut() {
                o.remove("occupancy");
            }
            Ok(j)
        }
        Command::Render { model, config, out, contours, mode } => {
            let m = Model::load(&model.model)?;
            if m.graph.dim != 2 {
                return Err(Error::Precondition("rendering needs a two-dimensional lattice".into()));
            }
            let input = read_input(&m, config)?;
            let (particles, frame, patch) = match input {
                Input::Finite(x) => {
                    let (lo, hi) = m.graph.bounding_box(&x.occupied, m.shape.reach() + 1);
                    (x.occupied, box_region(lo, hi, m.graph.num_cells()), None)
                }
                Input::Patch(patch) => {
                    let (lo, hi) = m.graph.bounding_box(&patch.region, 2 * m.shape.reach() + 4);
                    (BTreeSet::new(), box_region(lo, hi, m.graph.num_cells()), Some(patch))
                }
            };
            let mut layers = Vec::new();
            let mut particles = particles;
            let mut count = 0;
            let p = if *contours || patch.is_some() { Some(pipeline(m.clone(), mode.mode)?) } else { None };
            if let (Some(patch), Some(p)) = (&patch, &p) {
                check_ground(p, patch.base)?;
                let (lo, hi) = m.graph.bounding_box(&patch.region, 2 * m.shape.reach() + 4);
                particles = patch.particles_in_box(&p.sys, lo, hi);
                layers.push(Layer { name: "region".into(), sites: patch.region.clone(), fill: "#ffd966".into() });
            }
            if *contours {
                let p = p.as_ref().expect("pipeline built");
                let patch = match &patch {
                    Some(x) => x.clone(),
                    None => Patch { base: 0, region: frame.clone(), inside: particles.clone() },
                };
                for g in Frame::new(&p.sys, &patch)?.gfcs()? {
                    count += 1;
                    layers.push(Layer { name: format!("contour{count}"), sites: g.support, fill: "#e15759".into() });
                }
            }
            let scene = Scene { g: &m.graph, shape: &m.shape, frame, layers, particles, title: m.name().to_string() };
            let text = scene.render();
            write_file(out, &text)?;
            Ok(json!({"written": out.display().to_string(), "bytes": text.len(), "contours": count}))
        }
    }
}

fn colour() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stdout().is_terminal()
}

fn human(v: &Value) -> String {
    let bold = colour();
    let mut s = String::new();
    match v.as_object() {
        Some(map) => {
            for (k, val) in map {
                let text = match val {
                    Value::String(x) => x.clone(),
                    other => other.to_string(),
                };
                if bold {
                    s.push_str(&format!("\x1b[1m{k}\x1b[0m: {text}\n"));
                } else {
                    s.push_str(&format!("{k}: {text}\n"));
                }
            }
        }
        None => s.push_str(&format!("{v}\n")),
    }
    s
}

/// Parses `argv`, runs the command and prints its output. Returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    crate::set_threads(cli.threads);
    match execute(&cli.command) {
        Ok(v) => {
            let text = if cli.json { format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable")) } else { human(&v) };
            let _ = std::io::stdout().write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let obj = json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            eprintln!("{obj}");
            1
        }
    }
}
