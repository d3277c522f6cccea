//! Plain-text model format.
//!
//! ```text
//! drought-impact-ensemble v1
//! base_score,0.5
//! eta,0.3
//! trees,2
//! tree,0,3
//! 0,-1,split,4,-0.8125,L,12.75,86.5
//! 1,0,leaf,-,-,-,0.731,20.25
//! 2,0,leaf,-,-,-,-0.4,66.25
//! ...
//! ```
//!
//! Node rows are `id,parent,type,feature,threshold,default,weight,cover`. For
//! split rows the weight column carries the split gain. Among the rows sharing
//! a parent, the first is the left child. Floats are written in shortest
//! round-trip form, so a reloaded model predicts bit-identically.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Ensemble, Node, Tree};
use crate::error::{Error, Result};

const MAGIC: &str = "drought-impact-ensemble v1";

pub fn write_ensemble(e: &Ensemble) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "base_score,{}", e.base_score).unwrap();
    writeln!(s, "eta,{}", e.eta).unwrap();
    writeln!(s, "trees,{}", e.trees.len()).unwrap();
    for (t, tree) in e.trees.iter().enumerate() {
        let mut parent = vec![-1i64; tree.nodes().len()];
        for (id, n) in tree.nodes().iter().enumerate() {
            if let Node::Split { left, right, .. } = n {
                parent[*left] = id as i64;
                parent[*right] = id as i64;
            }
        }
        writeln!(s, "tree,{t},{}", tree.nodes().len()).unwrap();
        for (id, n) in tree.nodes().iter().enumerate() {
            match n {
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    gain,
                    cover,
                    ..
                } => {
                    let d = if *default_left { "L" } else { "R" };
                    writeln!(
                        s,
                        "{id},{},split,{feature},{threshold},{d},{gain},{cover}",
                        parent[id]
                    )
                    .unwrap();
                }
                Node::Leaf { weight, cover } => {
                    writeln!(s, "{id},{},leaf,-,-,-,{weight},{cover}", parent[id]).unwrap();
                }
            }
        }
    }
    s
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::invalid(format!("model line {line}: {msg}"))
}

fn field<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| bad(line, format!("bad {what} {s:?}")))
}

fn keyed<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (n, l) = lines.next().ok_or_else(|| bad(0, format!("missing {key}")))?;
    l.strip_prefix(key)
        .and_then(|r| r.strip_prefix(','))
        .map(|v| (n, v))
        .ok_or_else(|| bad(n, format!("expected {key}")))
}

pub fn parse_ensemble(text: &str) -> Result<Ensemble> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(bad(1, format!("expected header {MAGIC:?}"))),
    }
    let (n, v) = keyed(&mut lines, "base_score")?;
    let base_score: f64 = field(n, v, "base_score")?;
    let (n, v) = keyed(&mut lines, "eta")?;
    let eta: f64 = field(n, v, "eta")?;
    let (n, v) = keyed(&mut lines, "trees")?;
    let n_trees: usize = field(n, v, "tree count")?;
    let mut trees = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let (n, v) = keyed(&mut lines, "tree")?;
        let (idx, count) = v.split_once(',').ok_or_else(|| bad(n, "expected tree,<index>,<nodes>"))?;
        if field::<usize>(n, idx, "tree index")? != t {
            return Err(bad(n, format!("expected tree {t}")));
        }
        let count: usize = field(n, count, "node count")?;
        let mut nodes = Vec::with_capacity(count);
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); count];
        for id in 0..count {
            let (n, l) = lines.next().ok_or_else(|| bad(0, "truncated tree"))?;
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 8 {
                return Err(bad(n, "node rows have 8 fields"));
            }
            if field::<usize>(n, f[0], "node id")? != id {
                return Err(bad(n, format!("expected node {id}")));
            }
            let parent: i64 = field(n, f[1], "parent")?;
            if id == 0 && parent != -1 || id > 0 && !(0..id as i64).contains(&parent) {
                return Err(bad(n, "parent must precede its children"));
            }
            if parent >= 0 {
                children[parent as usize].push(id);
            }
            let cover: f64 = field(n, f[7], "cover")?;
            nodes.push(match f[2] {
                "split" => Node::Split {
                    feature: field(n, f[3], "feature")?,
                    threshold: field(n, f[4], "threshold")?,
                    default_left: match f[5] {
                        "L" => true,
                        "R" => false,
                        d => return Err(bad(n, format!("bad default {d:?}"))),
                    },
                    left: 0,
                    right: 0,
                    gain: field(n, f[6], "gain")?,
                    cover,
                },
                "leaf" => Node::Leaf {
                    weight: field(n, f[6], "weight")?,
                    cover,
                },
                other => return Err(bad(n, format!("unknown node type {other:?}"))),
            });
        }
        for (id, node) in nodes.iter_mut().enumerate() {
            match (node, children[id].as_slice()) {
                (Node::Split { left, right, .. }, &[l, r]) => {
                    *left = l;
                    *right = r;
                }
                (Node::Leaf { .. }, []) => {}
                _ => return Err(bad(0, format!("tree {t} node {id} has a malformed child list"))),
            }
        }
        trees.push(Tree::new(nodes));
    }
    Ok(Ensemble::new(base_score, eta, trees))
}

pub fn save_ensemble(path: &Path, e: &Ensemble) -> Result<()> {
    fs::write(path, write_ensemble(e)).map_err(|err| Error::io(path, err))
}

pub fn load_ensemble(path: &Path) -> Result<Ensemble> {
    let text = fs::read_to_string(path).map_err(|err| Error::io(path, err))?;
    parse_ensemble(&text).map_err(|err| match err {
        Error::Invalid(msg) => Error::invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boost::{train, TrainConfig};
    use crate::matrix::Matrix;

    #[test]
    fn round_trip_is_bit_exact() {
        let rows: Vec<[f64; 2]> = (0..60)
            .map(|i| [(i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() / 3.0])
            .collect();
        let labels: Vec<bool> = rows.iter().map(|r| r[0] + r[1] > 0.1).collect();
        let data = Matrix::from_rows(&rows, 2);
        let cfg = TrainConfig { n_rounds: 5, max_depth: 3, ..Default::default() };
        let e = train(&data, &labels, &cfg).unwrap();
        let text = write_ensemble(&e);
        let back = parse_ensemble(&text).unwrap();
        assert_eq!(back, e);
        assert_eq!(write_ensemble(&back), text);
        for r in data.rows() {
            assert_eq!(back.margin(r).to_bits(), e.margin(r).to_bits());
        }
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_ensemble("nope").is_err());
        let orphan = format!("{MAGIC}\nbase_score,0.5\neta,0.3\ntrees,1\ntree,0,1\n0,-1,split,0,1,L,1,1\n");
        assert!(parse_ensemble(&orphan).is_err());
    }
}
