use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::ui::{enumerate_actions, Action, Fingerprint, UiState};

#[derive(Clone, Debug)]
pub struct UtgNode {
    pub fingerprint: Fingerprint,
    /// First state observed with this fingerprint.
    pub exemplar: UiState,
    pub actions: Vec<Action>,
    pub explored: Vec<bool>,
}

impl UtgNode {
    pub fn unexplored(&self) -> impl Iterator<Item = (usize, &Action)> {
        self.actions.iter().enumerate().filter(|(i, _)| !self.explored[*i])
    }

    pub fn unexplored_count(&self) -> usize {
        self.explored.iter().filter(|e| !**e).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UtgEdge {
    pub from: usize,
    /// Index into the source node's action list.
    pub action: usize,
    pub to: usize,
}

/// Directed multigraph of observed transitions. Nodes are numbered in
/// discovery order and edges in insertion order.
#[derive(Clone, Debug, Default)]
pub struct UiTransitionGraph {
    nodes: Vec<UtgNode>,
    index: HashMap<Fingerprint, usize>,
    edges: Vec<UtgEdge>,
    edge_set: HashSet<(usize, usize, usize)>,
    out: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl UiTransitionGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a state and returns its node index.
    pub fn add_state(&mut self, state: &UiState) -> usize {
        let fp = state.fingerprint();
        if let Some(&i) = self.index.get(&fp) {
            return i;
        }
        let actions = enumerate_actions(state);
        self.nodes.push(UtgNode {
            fingerprint: fp,
            exemplar: state.clone(),
            explored: vec![false; actions.len()],
            actions,
        });
        self.out.push(Vec::new());
        self.incoming.push(Vec::new());
        self.index.insert(fp, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    pub fn record_transition(&mut self, s: &UiState, a: &Action, s_new: &UiState) -> Result<()> {
        let from = self.add_state(s);
        let action = self.nodes[from]
            .actions
            .iter()
            .position(|x| x.kind == a.kind && x.target_element == a.target_element)
            .ok_or_else(|| Error::InvalidAction(format!("{} on `{}` is not enumerable in {}", a.kind, a.target_element, s.fingerprint())))?;
        let to = self.add_state(s_new);
        self.nodes[from].explored[action] = true;
        if self.edge_set.insert((from, action, to)) {
            self.edges.push(UtgEdge { from, action, to });
            self.out[from].push(self.edges.len() - 1);
            self.incoming[to].push(self.edges.len() - 1);
        }
        Ok(())
    }

    pub fn node_index(&self, fp: Fingerprint) -> Option<usize> {
        self.index.get(&fp).copied()
    }

    pub fn nodes(&self) -> &[UtgNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[UtgEdge] {
        &self.edges
    }

    pub fn edge_action(&self, e: &UtgEdge) -> &Action {
        &self.nodes[e.from].actions[e.action]
    }

    pub fn explored_count(&self) -> usize {
        self.nodes.iter().map(|n| n.explored.len() - n.unexplored_count()).sum()
    }

    /// Hop distance from every node to `to`, following edges backwards.
    fn distances_to(&self, to: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.nodes.len()];
        dist[to] = Some(0);
        let mut queue = VecDeque::from([to]);
        while let Some(n) = queue.pop_front() {
            let d = dist[n].expect("queued nodes have a distance");
            for &e in &self.incoming[n] {
                let from = self.edges[e].from;
                if dist[from].is_none() {
                    dist[from] = Some(d + 1);
                    queue.push_back(from);
                }
            }
        }
        dist
    }

    /// Minimal-hop path as edge indices. Among equally short paths the one
    /// whose edge indices are lexicographically smallest is returned.
    /// `None` means unreachable; `Some(vec![])` means `from == to`.
    pub fn shortest_path_edges(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let dist = self.distances_to(to);
        let mut d = dist[from]?;
        let mut path = Vec::with_capacity(d);
        let mut at = from;
        while d > 0 {
            let e = *self.out[at]
                .iter()
                .find(|&&e| dist[self.edges[e].to] == Some(d - 1))
                .expect("a node at distance d has an edge to distance d-1");
            path.push(e);
            at = self.edges[e].to;
            d -= 1;
        }
        Some(path)
    }

    pub fn shortest_path(&self, from: Fingerprint, to: Fingerprint) -> Result<Option<Vec<Action>>> {
        let f = self.node_index(from).ok_or_else(|| Error::InvalidState(format!("{from} is not in the graph")))?;
        let t = self.node_index(to).ok_or_else(|| Error::InvalidState(format!("{to} is not in the graph")))?;
        Ok(self
            .shortest_path_edges(f, t)
            .map(|p| p.iter().map(|&e| self.edge_action(&self.edges[e]).clone()).collect()))
    }

    /// Nodes reachable from `from`, including itself.
    pub fn reachable(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            for &e in &self.out[n] {
                let t = self.edges[e].to;
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph utg {\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let fp = n.fingerprint.to_string();
            let _ = writeln!(s, "  n{i} [label=\"{} ({})\"];", &fp[..8], n.unexplored_count());
        }
        for e in &self.edges {
            let a = self.edge_action(e);
            let _ = writeln!(s, "  n{} -> n{} [label=\"{}@{}\"];", e.from, e.to, a.kind, a.target_element);
        }
        s.push_str("}\n");
        s
    }
}
