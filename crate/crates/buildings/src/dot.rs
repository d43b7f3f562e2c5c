use std::fmt::Write;

use buildings_core::btree::{LatticeVertex, TreeBall};

fn label(v: &LatticeVertex) -> String {
    let b: Vec<String> = v
        .digits()
        .iter()
        .map(|&(e, d)| {
            if e == 0 {
                format!("{d}")
            } else {
                format!("{d}π^{e}")
            }
        })
        .collect();
    let b = if b.is_empty() {
        "0".to_string()
    } else {
        b.join("+")
    };
    format!("({}, {})", v.level(), b)
}

/// Graphviz rendering of a tree ball; the base vertex is boxed.
pub fn tree_to_dot(ball: &TreeBall) -> String {
    let mut out = String::from("graph tree {\n  node [shape=ellipse];\n");
    for (i, v) in ball.vertices.iter().enumerate() {
        let shape = if v.depth() == 0 { ", shape=box" } else { "" };
        let _ = writeln!(out, "  v{i} [label=\"{}\"{shape}];", label(v));
    }
    for &(a, b) in &ball.edges {
        let _ = writeln!(out, "  v{a} -- v{b};");
    }
    out.push_str("}\n");
    out
}
