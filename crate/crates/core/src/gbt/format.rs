//! Plain-text model file.
//!
//! ```text
//! tempocast-gbt 1
//! width <usize>
//! base_score <f64>
//! shrinkage <f64>
//! subsample_fraction <f64>
//! max_depth <usize>
//! min_samples_leaf <usize>
//! seed <u64>
//! weak_count <usize>
//! trees <count>
//! tree <index> <node count>
//! S <feature> <threshold>
//! L <value>
//! ...
//! end
//! ```
//!
//! Nodes are listed in preorder. Reals use the shortest decimal text that
//! parses back to the same `f64`, so a model survives a write/read cycle
//! bit for bit.

use std::io::{BufRead, Write};

use super::tree::{Node, Tree};
use super::{GbtError, GbtModel, GbtParams};

pub const MODEL_MAGIC: &str = "tempocast-gbt 1";

pub fn write_model<W: Write>(model: &GbtModel, sink: W) -> Result<(), GbtError> {
    let mut out = std::io::BufWriter::new(sink);
    let p = model.params();
    writeln!(out, "{MODEL_MAGIC}")?;
    writeln!(out, "width {}", model.width())?;
    writeln!(out, "base_score {}", model.base_score())?;
    writeln!(out, "shrinkage {}", model.shrinkage())?;
    writeln!(out, "subsample_fraction {}", p.subsample_fraction)?;
    writeln!(out, "max_depth {}", p.max_depth)?;
    writeln!(out, "min_samples_leaf {}", p.min_samples_leaf)?;
    writeln!(out, "seed {}", p.seed)?;
    writeln!(out, "weak_count {}", p.weak_count)?;
    writeln!(out, "trees {}", model.trees().len())?;
    for (i, tree) in model.trees().iter().enumerate() {
        writeln!(out, "tree {} {}", i, tree.nodes().len())?;
        for node in tree.nodes() {
            match *node {
                Node::Split { feature, threshold, .. } => writeln!(out, "S {feature} {threshold}")?,
                Node::Leaf { value } => writeln!(out, "L {value}")?,
            }
        }
    }
    writeln!(out, "end")?;
    out.flush()?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String, GbtError> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> GbtError {
        GbtError::Format { line: self.line, message: message.into() }
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, GbtError> {
        let l = self.next()?;
        let value = l.strip_prefix(key).and_then(|rest| rest.strip_prefix(' ')).ok_or_else(|| self.err(format!("expected `{key} <value>`")))?;
        value.parse().map_err(|_| self.err(format!("bad value for {key}: {value:?}")))
    }
}

pub fn read_model<R: BufRead>(source: R) -> Result<GbtModel, GbtError> {
    let mut lines = Lines { inner: source.lines(), line: 0 };
    if lines.next()? != MODEL_MAGIC {
        return Err(lines.err(format!("expected `{MODEL_MAGIC}`")));
    }
    let width: usize = lines.field("width")?;
    let base_score: f64 = lines.field("base_score")?;
    let shrinkage = lines.field("shrinkage")?;
    let subsample_fraction = lines.field("subsample_fraction")?;
    let max_depth = lines.field("max_depth")?;
    let min_samples_leaf = lines.field("min_samples_leaf")?;
    let seed = lines.field("seed")?;
    let weak_count = lines.field("weak_count")?;
    let params = GbtParams { weak_count, shrinkage, subsample_fraction, max_depth, min_samples_leaf, seed };
    let count: usize = lines.field("trees")?;

    let mut trees = Vec::with_capacity(count);
    for i in 0..count {
        let header = lines.next()?;
        let mut parts = header.split(' ');
        let (Some("tree"), Some(idx), Some(size), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(lines.err("expected `tree <index> <nodes>`"));
        };
        if idx.parse::<usize>().ok() != Some(i) {
            return Err(lines.err(format!("expected tree {i}")));
        }
        let size: usize = size.parse().map_err(|_| lines.err("bad node count"))?;
        let mut nodes = Vec::with_capacity(size);
        for _ in 0..size {
            let l = lines.next()?;
            let parts: Vec<&str> = l.split(' ').collect();
            let node = match parts[..] {
                ["S", f, t] => Node::Split {
                    feature: f.parse().map_err(|_| lines.err("bad feature index"))?,
                    threshold: t.parse().map_err(|_| lines.err("bad threshold"))?,
                    right: 0,
                },
                ["L", v] => Node::Leaf { value: v.parse().map_err(|_| lines.err("bad leaf value"))? },
                _ => return Err(lines.err("expected `S <feature> <threshold>` or `L <value>`")),
            };
            nodes.push(node);
        }
        trees.push(Tree::from_preorder(nodes, width).map_err(|e| lines.err(e.to_string()))?);
    }
    if lines.next()? != "end" {
        return Err(lines.err("expected `end`"));
    }
    GbtModel::from_parts(width, base_score, params, trees)
}
