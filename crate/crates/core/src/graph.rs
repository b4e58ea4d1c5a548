//! The graph of all untwisting choices between two Mori fibre spaces.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::degrees::{degree_of_system, SarkisovDegree};
use crate::error::{Error, Result};
use crate::fan::Fan;
use crate::linalg::IntMatrix;
use crate::mmp::DEFAULT_STEP_CAP;
use crate::toric::{MonomialLinearSystem, ToricMoriFibreSpace};
use crate::untwist::{
    factorize_partial, is_square_isomorphism, square_certificate, untwist_choices, untwist_with_choice, Choice,
    FactorizeOptions, LinkSubtype, Policy, SarkisovLink, ToricBirationalMap,
};

/// Vertices are marked models: the fan together with the fibre lattice, or the
/// destination itself.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKey {
    Model { fan: Fan, fibre: IntMatrix },
    Destination,
}

impl VertexKey {
    pub fn of(xs: &ToricMoriFibreSpace) -> VertexKey {
        VertexKey::Model {
            fan: xs.total.fan().clone(),
            fibre: xs.fibre_lattice(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphVertex {
    pub id: usize,
    pub key: VertexKey,
    pub model: ToricMoriFibreSpace,
    /// Degree of the residual map from this vertex.
    pub degree: SarkisovDegree,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub choice: Choice,
    pub link: SarkisovLink,
    /// Base isomorphism between the link target and the stored vertex model.
    pub certificate: IntMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SarkisovGraph {
    pub map: ToricBirationalMap,
    pub system: MonomialLinearSystem,
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<GraphEdge>,
    pub source: usize,
    pub destination: Option<usize>,
    /// Why exploration stopped early, if it did.
    pub partial: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphCaps {
    pub max_depth: usize,
    pub max_vertices: usize,
    pub max_mmp_steps: usize,
}

impl Default for GraphCaps {
    fn default() -> Self {
        GraphCaps {
            max_depth: 16,
            max_vertices: 512,
            max_mmp_steps: DEFAULT_STEP_CAP,
        }
    }
}

impl SarkisovGraph {
    fn residual(&self, v: usize) -> ToricBirationalMap {
        if Some(v) == self.destination {
            return ToricBirationalMap::identity(self.map.target.clone());
        }
        ToricBirationalMap {
            matrix: self.map.matrix.clone(),
            source: self.vertices[v].model.clone(),
            target: self.map.target.clone(),
        }
    }

    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = &GraphEdge> {
        self.edges.iter().filter(move |e| e.from == v)
    }

    /// All source-to-destination paths as edge index lists, in canonical order.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let Some(dest) = self.destination else { return out };
        let mut stack = vec![self.source];
        let mut path = Vec::new();
        self.dfs(dest, &mut stack, &mut path, &mut out);
        out
    }

    fn dfs(&self, dest: usize, stack: &mut Vec<usize>, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let v = *stack.last().unwrap();
        if v == dest {
            out.push(path.clone());
            return;
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.from != v || stack.contains(&e.to) {
                continue;
            }
            stack.push(e.to);
            path.push(i);
            self.dfs(dest, stack, path, out);
            path.pop();
            stack.pop();
        }
    }
}

/// Explores every untwisting choice breadth-first from the source of `map`.
pub fn build_graph(map: &ToricBirationalMap, h_target: &MonomialLinearSystem, caps: &GraphCaps) -> Result<SarkisovGraph> {
    let mut g = SarkisovGraph {
        map: map.clone(),
        system: h_target.clone(),
        vertices: Vec::new(),
        edges: Vec::new(),
        source: 0,
        destination: None,
        partial: None,
    };
    let mut index: BTreeMap<VertexKey, usize> = BTreeMap::new();
    let source_key = if is_square_isomorphism(map) {
        VertexKey::Destination
    } else {
        VertexKey::of(&map.source)
    };
    let source_degree = degree_of_system(&map.source, &map.pull_back(h_target)?)?;
    if source_key == VertexKey::Destination {
        g.destination = Some(0);
    }
    g.vertices.push(GraphVertex {
        id: 0,
        key: source_key.clone(),
        model: map.source.clone(),
        degree: source_degree,
        depth: 0,
    });
    index.insert(source_key, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        if Some(v) == g.destination {
            continue;
        }
        if g.vertices[v].depth >= caps.max_depth {
            g.partial = Some(format!("depth cap {} reached", caps.max_depth));
            continue;
        }
        let residual = g.residual(v);
        for choice in untwist_choices(&residual, h_target)? {
            let (link, next) = untwist_with_choice(&residual, h_target, Some(choice), None, caps.max_mmp_steps)?;
            let key = if is_square_isomorphism(&next) {
                VertexKey::Destination
            } else {
                VertexKey::of(&next.source)
            };
            let to = match index.get(&key) {
                Some(&id) => id,
                None => {
                    if g.vertices.len() >= caps.max_vertices {
                        g.partial = Some(format!("vertex cap {} reached", caps.max_vertices));
                        return Ok(g);
                    }
                    let id = g.vertices.len();
                    let degree = degree_of_system(&next.source, &next.pull_back(h_target)?)?;
                    if key == VertexKey::Destination {
                        g.destination = Some(id);
                    }
                    g.vertices.push(GraphVertex {
                        id,
                        key: key.clone(),
                        model: next.source.clone(),
                        degree,
                        depth: g.vertices[v].depth + 1,
                    });
                    index.insert(key, id);
                    queue.push_back(id);
                    id
                }
            };
            let stored = ToricBirationalMap {
                matrix: crate::linalg::identity(map.source.total.dim()),
                source: link.target.clone(),
                target: g.vertices[to].model.clone(),
            };
            let certificate = square_certificate(&stored)
                .ok_or_else(|| Error::InternalInvariantViolation(format!("merged vertex {to} has no square isomorphism")))?;
            g.edges.push(GraphEdge {
                from: v,
                to,
                choice,
                link,
                certificate,
            });
        }
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphReport {
    pub vertices: usize,
    pub edges: usize,
    pub paths: usize,
    pub policy_runs: usize,
}

fn fail(msg: String) -> Error {
    Error::GraphVerification(msg)
}

/// Checks the unique source and destination, replays every path through the
/// engine, and checks that every engine run's links are edges.
pub fn verify_graph(g: &SarkisovGraph) -> Result<GraphReport> {
    if let Some(why) = &g.partial {
        return Err(fail(format!("graph is partial: {why}")));
    }
    let dest = g.destination.ok_or_else(|| fail("no destination vertex".into()))?;
    let n = g.vertices.len();
    let mut indeg = vec![0usize; n];
    let mut outdeg = vec![0usize; n];
    for e in &g.edges {
        indeg[e.to] += 1;
        outdeg[e.from] += 1;
    }
    let sources: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    if sources != vec![g.source] {
        return Err(fail(format!("vertices without incoming edges: {sources:?}")));
    }
    let sinks: Vec<usize> = (0..n).filter(|&v| outdeg[v] == 0).collect();
    if sinks != vec![dest] {
        return Err(fail(format!("vertices without outgoing edges: {sinks:?}")));
    }
    check_cycles(g)?;
    let paths = g.paths();
    for (p, path) in paths.iter().enumerate() {
        let mut current = g.map.clone();
        for &ei in path {
            let e = &g.edges[ei];
            let (link, next) = untwist_with_choice(&current, &g.system, Some(e.choice), None, DEFAULT_STEP_CAP)
                .map_err(|err| fail(format!("path {p}: edge {ei} does not replay: {err}")))?;
            if link != e.link {
                return Err(fail(format!("path {p}: edge {ei} replays to a different link")));
            }
            current = next;
        }
        if !is_square_isomorphism(&current) {
            return Err(fail(format!("path {p} does not end in a square isomorphism")));
        }
    }
    let edge_set: Vec<(usize, &SarkisovLink)> = g.edges.iter().map(|e| (e.from, &e.link)).collect();
    let keys: BTreeMap<&VertexKey, usize> = g.vertices.iter().map(|v| (&v.key, v.id)).collect();
    let mut runs = 0;
    for policy in policies(g) {
        // an index beyond the choices at some stage ends the run early; its links so far still count
        let seq = match factorize_partial(&g.map, &g.system, &FactorizeOptions { policy: policy.clone(), ..Default::default() }) {
            (Some(s), None | Some(Error::InvalidInput(_))) => s,
            (_, Some(e)) => return Err(fail(format!("policy {policy:?} failed: {e}"))),
            (None, None) => unreachable!(),
        };
        runs += 1;
        let mut at = g.source;
        for (i, link) in seq.links.iter().enumerate() {
            if !edge_set.contains(&(at, link)) {
                return Err(fail(format!("policy {policy:?}: link {i} from vertex {at} is not an edge")));
            }
            let key = if is_square_isomorphism(&seq.residuals[i]) {
                VertexKey::Destination
            } else {
                VertexKey::of(&seq.residuals[i].source)
            };
            at = *keys
                .get(&key)
                .ok_or_else(|| fail(format!("policy {policy:?}: link {i} ends outside the graph")))?;
        }
    }
    Ok(GraphReport {
        vertices: n,
        edges: g.edges.len(),
        paths: paths.len(),
        policy_runs: runs,
    })
}

fn policies(g: &SarkisovGraph) -> Vec<Policy> {
    let widest = g
        .edges
        .iter()
        .filter_map(|e| match e.choice {
            Choice::Extraction(k) => Some(k + 1),
            _ => None,
        })
        .max()
        .unwrap_or(1);
    let mut out = vec![Policy::First, Policy::Scaling(None)];
    out.extend((1..=widest).map(Policy::Index));
    out
}

/// Any directed cycle must consist of IVb links only.
fn check_cycles(g: &SarkisovGraph) -> Result<()> {
    let strict: Vec<&GraphEdge> = g
        .edges
        .iter()
        .filter(|e| e.link.subtype != Some(LinkSubtype::IVb))
        .collect();
    let n = g.vertices.len();
    let mut state = vec![0u8; n];
    fn visit(v: usize, edges: &[&GraphEdge], state: &mut [u8]) -> bool {
        state[v] = 1;
        for e in edges.iter().filter(|e| e.from == v) {
            if state[e.to] == 1 || (state[e.to] == 0 && !visit(e.to, edges, state)) {
                return false;
            }
        }
        state[v] = 2;
        true
    }
    let has_strict_cycle = (0..n).any(|v| state[v] == 0 && !visit(v, &strict, &mut state));
    if has_strict_cycle {
        return Err(fail("cycle through a strictly decreasing edge".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Structured,
}

pub fn export_graph(g: &SarkisovGraph, format: ExportFormat) -> String {
    match format {
        ExportFormat::Structured => serde_json::to_string_pretty(g).expect("graph serializes") + "\n",
        ExportFormat::Dot => {
            let mut s = String::from("digraph sarkisov {\n");
            for v in &g.vertices {
                let mut label = format!(
                    "v{}: {} rays over dim {}\\n{}",
                    v.id,
                    v.model.total.ray_count(),
                    v.model.base.dim(),
                    v.degree
                );
                if v.id == g.source {
                    label.push_str("\\nsource");
                }
                if Some(v.id) == g.destination {
                    label.push_str("\\ndestination");
                }
                let _ = writeln!(s, "  v{} [label=\"{label}\"];", v.id);
            }
            for e in &g.edges {
                let _ = writeln!(
                    s,
                    "  v{} -> v{} [label=\"{} {} -> {}\"];",
                    e.from,
                    e.to,
                    e.link.label(),
                    g.vertices[e.from].degree,
                    g.vertices[e.to].degree
                );
            }
            s.push_str("}\n");
            s
        }
    }
}
