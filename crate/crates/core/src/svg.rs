//! SVG snapshots of configurations on two-dimensional lattices.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::lattice::{PeriodicGraph, Region, Site};
use crate::shape::Shape;

/// A set of sites drawn in one colour.
pub struct Layer {
    pub name: String,
    pub sites: Region,
    pub fill: String,
}

pub struct Scene<'a> {
    pub g: &'a PeriodicGraph,
    pub shape: &'a Shape,
    /// Sites drawn as faint dots.
    pub frame: Region,
    pub layers: Vec<Layer>,
    pub particles: BTreeSet<Site>,
    pub title: String,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn xy(g: &PeriodicGraph, s: Site) -> (f64, f64) {
    let p = g.position(s);
    let f = |i: usize| p.get(i).map_or(0.0, |q| *q.numer() as f64 / *q.denom() as f64);
    (f(0), -f(1))
}

const PALETTE: [&str; 8] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f"];

impl Scene<'_> {
    pub fn render(&self) -> String {
        let unit = 14.0;
        let mut pts: Vec<(f64, f64)> = self.frame.iter().map(|s| xy(self.g, *s)).collect();
        for l in &self.layers {
            pts.extend(l.sites.iter().map(|s| xy(self.g, *s)));
        }
        for p in &self.particles {
            pts.extend(self.shape.support_of(*p).map(|s| xy(self.g, s)));
        }
        if pts.is_empty() {
            pts.push((0.0, 0.0));
        }
        let minx = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) - 1.0;
        let maxx = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) + 1.0;
        let miny = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) - 1.0;
        let maxy = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) + 1.0;
        let (w, h) = ((maxx - minx) * unit, (maxy - miny) * unit);
        let at = |s: Site| {
            let (x, y) = xy(self.g, s);
            ((x - minx) * unit, (y - miny) * unit)
        };
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"#);
        let _ = writeln!(out, "<title>{}</title>", escape(&self.title));
        let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
        let _ = writeln!(out, r##"<g fill="#cccccc">"##);
        for s in &self.frame {
            let (x, y) = at(*s);
            let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="1.5"/>"#);
        }
        out.push_str("</g>\n");
        for l in &self.layers {
            let _ = writeln!(out, r#"<g id="{}" fill="{}" fill-opacity="0.35">"#, escape(&l.name), escape(&l.fill));
            for s in &l.sites {
                let (x, y) = at(*s);
                let _ = writeln!(out, r#"<rect x="{:.1}" y="{:.1}" width="{unit:.1}" height="{unit:.1}"/>"#, x - unit / 2.0, y - unit / 2.0);
            }
            out.push_str("</g>\n");
        }
        out.push_str("<g id=\"particles\">\n");
        for (k, p) in self.particles.iter().enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            let _ = writeln!(out, r#"<g fill="{colour}">"#);
            for s in self.shape.support_of(*p) {
                let (x, y) = at(s);
                let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="{:.1}"/>"#, unit * 0.4);
            }
            let (x, y) = at(*p);
            let _ = writeln!(out, r##"<circle cx="{x:.1}" cy="{y:.1}" r="{:.1}" fill="#000000"/>"##, unit * 0.15);
            out.push_str("</g>\n");
        }
        out.push_str("</g>\n</svg>\n");
        out
    }
}
