//! Network datasets: GML reading and writing, hop-count dissimilarities.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Undirected labelled graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphDataset {
    pub name: String,
    /// GML node ids, in file order.
    pub ids: Vec<i64>,
    /// Optional display names (GML `label` when a `value` is also present).
    pub names: Vec<Option<String>>,
    /// Class of every node.
    pub classes: Vec<String>,
    /// Edges as `(i, j)` node positions with `i < j`, sorted, no duplicates.
    pub edges: Vec<(usize, usize)>,
}

impl GraphDataset {
    /// Builds a dataset, normalizing edges (drops self-loops and duplicates).
    pub fn new(
        name: &str,
        ids: Vec<i64>,
        names: Vec<Option<String>>,
        classes: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = ids.len();
        if names.len() != n || classes.len() != n {
            return Err(Error::InvalidArgument("node attribute lengths differ".into()));
        }
        if ids.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::InvalidArgument("duplicate node ids".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("edge ({a}, {b}) references a missing node")));
            }
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
        Ok(Self { name: name.to_string(), ids, names, classes, edges: set.into_iter().collect() })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Class of each node as an index into the sorted distinct class names.
    pub fn class_indices(&self) -> (Vec<usize>, Vec<String>) {
        let names: Vec<String> = self.classes.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let idx = self.classes.iter().map(|c| names.binary_search(c).expect("class present")).collect();
        (idx, names)
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Connected components as sorted node lists, largest first (ties by
    /// smallest member).
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.len()];
        let mut comps = Vec::new();
        for s in 0..self.len() {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut k = 0;
            while k < comp.len() {
                for &v in &adj[comp[k]] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
                k += 1;
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        comps
    }

    /// Induced subgraph on `nodes` (kept in the given order).
    pub fn subgraph(&self, nodes: &[usize]) -> Self {
        let pos: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(p, &v)| (v, p)).collect();
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter_map(|(a, b)| Some((*pos.get(a)?, *pos.get(b)?)))
            .collect();
        Self::new(
            &self.name,
            nodes.iter().map(|&v| self.ids[v]).collect(),
            nodes.iter().map(|&v| self.names[v].clone()).collect(),
            nodes.iter().map(|&v| self.classes[v].clone()).collect(),
            edges,
        )
        .expect("subgraph of a valid graph")
    }

    pub fn largest_component(&self) -> Self {
        match self.components().first() {
            Some(c) => self.subgraph(c),
            None => self.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Key(String),
    Number(String),
    Str(String),
    Open,
    Close,
}

fn tokenize(text: &str, path: &str) -> Result<Vec<(Token, usize)>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    let err = |line: usize, msg: &str| Error::Parse { path: path.to_string(), line, msg: msg.to_string() };
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '[' => {
                out.push((Token::Open, line));
                chars.next();
            }
            ']' => {
                out.push((Token::Close, line));
                chars.next();
            }
            '"' => {
                let start = line;
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\n') => {
                            line += 1;
                            s.push('\n');
                        }
                        Some(c) => s.push(c),
                        None => return Err(err(start, "unterminated string")),
                    }
                }
                out.push((Token::Str(s), start));
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || matches!(c, '-' | '+' | '.') {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((Token::Number(s), line));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((Token::Key(s), line));
            }
            other => return Err(err(line, &format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

#[derive(Debug)]
enum Value {
    Scalar(String),
    List(Vec<(String, Value, usize)>),
}

fn parse_list(tokens: &[(Token, usize)], pos: &mut usize, path: &str, closing: bool) -> Result<Vec<(String, Value, usize)>> {
    let mut items = Vec::new();
    while *pos < tokens.len() {
        let (tok, line) = &tokens[*pos];
        match tok {
            Token::Close if closing => {
                *pos += 1;
                return Ok(items);
            }
            Token::Key(k) => {
                *pos += 1;
                let Some((v, _)) = tokens.get(*pos) else {
                    return Err(Error::Parse { path: path.into(), line: *line, msg: format!("key `{k}` has no value") });
                };
                let value = match v {
                    Token::Open => {
                        *pos += 1;
                        Value::List(parse_list(tokens, pos, path, true)?)
                    }
                    Token::Number(s) | Token::Str(s) => {
                        *pos += 1;
                        Value::Scalar(s.clone())
                    }
                    _ => {
                        return Err(Error::Parse { path: path.into(), line: *line, msg: format!("key `{k}` has no value") })
                    }
                };
                items.push((k.clone(), value, *line));
            }
            _ => return Err(Error::Parse { path: path.into(), line: *line, msg: "expected a key".into() }),
        }
    }
    if closing {
        let line = tokens.last().map_or(1, |t| t.1);
        return Err(Error::Parse { path: path.into(), line, msg: "missing `]`".into() });
    }
    Ok(items)
}

fn scalar<'a>(items: &'a [(String, Value, usize)], key: &str) -> Option<&'a str> {
    items.iter().find_map(|(k, v, _)| match v {
        Value::Scalar(s) if k == key => Some(s.as_str()),
        _ => None,
    })
}

/// Parses GML text. `path` only labels diagnostics.
pub fn parse_gml(text: &str, path: &str, name: &str) -> Result<GraphDataset> {
    let tokens = tokenize(text, path)?;
    let mut pos = 0;
    let top = parse_list(&tokens, &mut pos, path, false)?;
    let graph = top
        .iter()
        .find_map(|(k, v, _)| match v {
            Value::List(items) if k == "graph" => Some(items),
            _ => None,
        })
        .ok_or_else(|| Error::Parse { path: path.into(), line: 1, msg: "no `graph` block".into() })?;

    let mut ids = Vec::new();
    let mut names = Vec::new();
    let mut classes = Vec::new();
    let mut index: BTreeMap<i64, usize> = BTreeMap::new();
    for (key, value, line) in graph {
        let (Value::List(items), "node") = (value, key.as_str()) else { continue };
        let err = |msg: String| Error::Parse { path: path.into(), line: *line, msg };
        let id = scalar(items, "id").ok_or_else(|| err("node without `id`".into()))?;
        let id: i64 = id.parse().map_err(|_| err(format!("node id `{id}` is not an integer")))?;
        if index.insert(id, ids.len()).is_some() {
            return Err(err(format!("duplicate node id {id}")));
        }
        let label = scalar(items, "label").map(str::to_string);
        let (name, class) = match (scalar(items, "value"), label) {
            (Some(v), label) => (label, v.to_string()),
            (None, Some(l)) => (None, l),
            (None, None) => return Err(err(format!("node {id} has neither `value` nor `label`"))),
        };
        ids.push(id);
        names.push(name);
        classes.push(class);
    }
    let mut edges = Vec::new();
    for (key, value, line) in graph {
        let (Value::List(items), "edge") = (value, key.as_str()) else { continue };
        let err = |msg: String| Error::Parse { path: path.into(), line: *line, msg };
        let end = |k: &str| -> Result<usize> {
            let raw = scalar(items, k).ok_or_else(|| err(format!("edge without `{k}`")))?;
            let id: i64 = raw.parse().map_err(|_| err(format!("edge {k} `{raw}` is not an integer")))?;
            index.get(&id).copied().ok_or_else(|| err(format!("edge {k} {id} is not a node")))
        };
        let a = end("source")?;
        let b = end("target")?;
        edges.push((a, b));
    }
    GraphDataset::new(name, ids, names, classes, edges)
}

pub fn load_gml(path: &Path) -> Result<GraphDataset> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let name = path.file_stem().map_or_else(|| "graph".to_string(), |s| s.to_string_lossy().into_owned());
    parse_gml(&text, &path.display().to_string(), &name)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "'"))
}

pub fn to_gml(g: &GraphDataset) -> String {
    let mut out = String::from("graph\n[\n  directed 0\n");
    for i in 0..g.len() {
        let _ = writeln!(out, "  node\n  [\n    id {}", g.ids[i]);
        if let Some(name) = &g.names[i] {
            let _ = writeln!(out, "    label {}", quote(name));
            let _ = writeln!(out, "    value {}", quote(&g.classes[i]));
        } else {
            let _ = writeln!(out, "    label {}", quote(&g.classes[i]));
        }
        out.push_str("  ]\n");
    }
    for &(a, b) in &g.edges {
        let _ = writeln!(out, "  edge\n  [\n    source {}\n    target {}\n  ]", g.ids[a], g.ids[b]);
    }
    out.push_str("]\n");
    out
}

pub fn save_gml(g: &GraphDataset, path: &Path) -> Result<()> {
    std::fs::write(path, to_gml(g)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Symmetric, nonnegative, zero-diagonal target distances.
#[derive(Clone, Debug, PartialEq)]
pub struct Dissimilarity {
    pub ids: Vec<String>,
    matrix: Array2<f64>,
}

impl Dissimilarity {
    pub fn new(ids: Vec<String>, matrix: Array2<f64>) -> Result<Self> {
        if matrix.dim() != (ids.len(), ids.len()) {
            return Err(Error::InvalidArgument(format!(
                "{} ids for a {:?} matrix",
                ids.len(),
                matrix.dim()
            )));
        }
        for ((i, j), &v) in matrix.indexed_iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!("entry ({i}, {j}) = {v} is not a dissimilarity")));
            }
            if (i == j && v != 0.0) || v != matrix[[j, i]] {
                return Err(Error::InvalidArgument(format!("entry ({i}, {j}) breaks symmetry or zero diagonal")));
            }
        }
        Ok(Self { ids, matrix })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            matrix: Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| self.matrix[[idx[a], idx[b]]]),
        }
    }
}

/// Breadth-first hop counts between all node pairs.
pub fn graph_distances(g: &GraphDataset) -> Result<Dissimilarity> {
    let comps = g.components();
    if comps.len() > 1 {
        return Err(Error::Disconnected { n_components: comps.len(), sizes: comps.iter().map(Vec::len).collect() });
    }
    let n = g.len();
    let adj = g.adjacency();
    let mut m = Array2::zeros((n, n));
    let mut hops = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        hops.iter_mut().for_each(|h| *h = usize::MAX);
        hops[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if hops[w] == usize::MAX {
                    hops[w] = hops[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        for t in 0..n {
            m[[s, t]] = hops[t] as f64;
        }
    }
    Dissimilarity::new(g.ids.iter().map(i64::to_string).collect(), m)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
graph [
  directed 1
  node [ id 1 label "a" value 0 ]
  node [ id 2 label "b" value 1 ]
  edge [ source 1 target 2 ]
  edge [ source 2 target 1 weight 3.5 ]
]
"#;

    fn path_graph(n: usize) -> GraphDataset {
        GraphDataset::new(
            "path",
            (0..n as i64).collect(),
            vec![None; n],
            vec!["x".into(); n],
            (1..n).map(|i| (i - 1, i)),
        )
        .unwrap()
    }

    #[test]
    fn minimal_gml() {
        let g = parse_gml(TOY, "toy.gml", "toy").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.edges, vec![(0, 1)]);
        assert_eq!(g.classes, vec!["0", "1"]);
        assert_eq!(g.names, vec![Some("a".to_string()), Some("b".to_string())]);
    }

    #[test]
    fn label_used_without_value() {
        let g = parse_gml("graph [ node [ id 0 label \"c\" ] ]", "x", "x").unwrap();
        assert_eq!(g.classes, vec!["c"]);
        assert_eq!(g.names, vec![None]);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let missing_id = "graph [\n  node [ label \"a\" ]\n]";
        match parse_gml(missing_id, "f.gml", "f") {
            Err(Error::Parse { line, path, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(path, "f.gml");
            }
            other => panic!("{other:?}"),
        }
        let dangling = "graph [\n node [ id 1 label \"a\" ]\n\n edge [ source 1 target 9 ]\n]";
        match parse_gml(dangling, "f.gml", "f") {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 4);
                assert!(msg.contains('9'));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_gml(Path::new("/nonexistent/x.gml")), Err(Error::Io { .. })));
    }

    #[test]
    fn roundtrip() {
        let g = parse_gml(TOY, "toy.gml", "toy").unwrap();
        let again = parse_gml(&to_gml(&g), "again", "toy").unwrap();
        assert_eq!(g, again);
        let p = path_graph(4);
        assert_eq!(parse_gml(&to_gml(&p), "p", "path").unwrap(), p);
    }

    #[test]
    fn distances_examples() {
        let d = graph_distances(&path_graph(3)).unwrap();
        assert_eq!(d.matrix()[[0, 2]], 2.0);
        let complete = GraphDataset::new(
            "k4",
            (0..4).collect(),
            vec![None; 4],
            vec!["x".into(); 4],
            (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))),
        )
        .unwrap();
        let d = graph_distances(&complete).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(d.matrix()[[i, j]], if i == j { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn disconnected_graph_is_reported() {
        let g = GraphDataset::new("two", vec![0, 1, 2], vec![None; 3], vec!["x".into(); 3], [(0, 1)]).unwrap();
        match graph_distances(&g) {
            Err(Error::Disconnected { n_components, sizes }) => {
                assert_eq!(n_components, 2);
                assert_eq!(sizes, vec![2, 1]);
            }
            other => panic!("{other:?}"),
        }
        let big = g.largest_component();
        assert_eq!(big.ids, vec![0, 1]);
        assert!(graph_distances(&big).is_ok());
    }

    #[test]
    fn self_loops_and_duplicates_are_dropped() {
        let g = GraphDataset::new("g", vec![0, 1], vec![None; 2], vec!["x".into(); 2], [(0, 0), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edges, vec![(0, 1)]);
    }
}
