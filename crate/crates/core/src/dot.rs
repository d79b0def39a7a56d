//! Graphviz rendering. Action vertices are boxes, observation vertices are
//! ellipses; an optional coloring fills vertices green, red or gray.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::closure::Color;
use crate::graph::{Kind, PGraph, VertexId};

#[derive(Debug, Clone, Default)]
pub struct DotStyle<'a> {
    pub name: &'a str,
    pub coloring: Option<&'a BTreeMap<VertexId, Color>>,
    /// Drawn with a double border.
    pub marked: Option<&'a BTreeSet<VertexId>>,
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn fill(color: Color) -> &'static str {
    match color {
        Color::Green => "palegreen",
        Color::Red => "lightcoral",
        Color::Gray => "lightgray",
    }
}

pub fn to_dot(g: &PGraph, style: &DotStyle<'_>) -> String {
    let name = if style.name.is_empty() {
        "pgraph"
    } else {
        style.name
    };
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(name));
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  __start [shape=point];");
    for (v, kind) in g.vertices() {
        let mut attrs = vec![format!(
            "shape={}",
            match kind {
                Kind::Action => "box",
                Kind::Observation => "ellipse",
            }
        )];
        if let Some(color) = style.coloring.and_then(|c| c.get(v)) {
            attrs.push(format!("style=filled, fillcolor={}", fill(*color)));
        }
        if style.marked.is_some_and(|m| m.contains(v)) {
            attrs.push("peripheries=2".to_owned());
        }
        let _ = writeln!(out, "  {} [{}];", quote(v.as_str()), attrs.join(", "));
    }
    for v in g.initial() {
        let _ = writeln!(out, "  __start -> {};", quote(v.as_str()));
    }
    for (src, dst, labels) in g.edges() {
        let names: Vec<&str> = labels.iter().map(|l| l.name()).collect();
        let _ = writeln!(
            out,
            "  {} -> {} [label={}];",
            quote(src.as_str()),
            quote(dst.as_str()),
            quote(&names.join(", "))
        );
    }
    out.push_str("}\n");
    out
}
