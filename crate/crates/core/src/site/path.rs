//! Dijkstra shortest paths over a transition graph.
//!
//! Ties are broken deterministically: the frontier pops the smallest `(distance, node id)` and a
//! distance is only replaced by a strictly smaller one, with out-edges scanned by ascending target
//! id and then insertion order.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use super::graph::{NavEdge, NodeId, TransitionGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {dest} is unreachable from node {start}")]
    NoPath { start: NodeId, dest: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Minimal-weight edge sequence from `start` to `dest`; empty when they are equal.
pub fn shortest_path(graph: &TransitionGraph, start: NodeId, dest: NodeId) -> Result<Vec<NavEdge>, PathError> {
    for id in [start, dest] {
        if graph.node(id).is_none() {
            return Err(PathError::UnknownNode(id));
        }
    }
    if start == dest {
        return Ok(Vec::new());
    }

    let mut adjacency: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, e) in graph.edges.iter().enumerate() {
        adjacency.entry(e.source).or_default().push(i);
    }
    for list in adjacency.values_mut() {
        list.sort_by_key(|&i| (graph.edges[i].target, i));
    }

    let mut dist: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut via: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut done: BTreeSet<NodeId> = BTreeSet::new();
    let mut heap = BinaryHeap::new();
    dist.insert(start, 0.0);
    heap.push(Reverse((Dist(0.0), start)));

    while let Some(Reverse((Dist(d), node))) = heap.pop() {
        if !done.insert(node) {
            continue;
        }
        if node == dest {
            break;
        }
        for &i in adjacency.get(&node).map(Vec::as_slice).unwrap_or(&[]) {
            let edge = &graph.edges[i];
            let candidate = d + edge.weight;
            if done.contains(&edge.target) {
                continue;
            }
            if dist.get(&edge.target).is_none_or(|&old| candidate < old) {
                dist.insert(edge.target, candidate);
                via.insert(edge.target, i);
                heap.push(Reverse((Dist(candidate), edge.target)));
            }
        }
    }

    if !via.contains_key(&dest) {
        return Err(PathError::NoPath { start, dest });
    }
    let mut path = Vec::new();
    let mut node = dest;
    while node != start {
        let edge = &graph.edges[via[&node]];
        path.push(edge.clone());
        node = edge.source;
    }
    path.reverse();
    Ok(path)
}

pub fn path_weight(path: &[NavEdge]) -> f64 {
    path.iter().map(|e| e.weight).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::ElementRef;
    use crate::site::graph::{Affordance, AffordanceKind};
    use alloc::format;

    fn graph(n: usize, edges: &[(NodeId, NodeId)]) -> TransitionGraph {
        let mut g = TransitionGraph::with_start("http://t.test/0");
        for i in 1..n {
            g.add_node(format!("http://t.test/{}", i));
        }
        for (k, &(a, b)) in edges.iter().enumerate() {
            let affordance = Affordance { kind: AffordanceKind::Anchor, locator: ElementRef::id(format!("e{}", k)), label: format!("to {}", b) };
            g.add_edge(a, b, affordance);
        }
        g
    }

    #[test]
    fn trivial_and_direct() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert!(shortest_path(&g, 1, 1).unwrap().is_empty());
        let p = shortest_path(&g, 0, 2).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].source, p[0].target), (0, 2));
    }

    #[test]
    fn errors() {
        let g = graph(3, &[(0, 1)]);
        assert_eq!(shortest_path(&g, 0, 2), Err(PathError::NoPath { start: 0, dest: 2 }));
        assert_eq!(shortest_path(&g, 0, 9), Err(PathError::UnknownNode(9)));
    }

    #[test]
    fn ties_prefer_smaller_ids() {
        let g = graph(4, &[(0, 2), (0, 1), (2, 3), (1, 3)]);
        let p = shortest_path(&g, 0, 3).unwrap();
        assert_eq!(p.iter().map(|e| e.target).collect::<Vec<_>>(), [1, 3]);
    }

    #[test]
    fn weights_respected() {
        let mut g = graph(3, &[(0, 2), (0, 1), (1, 2)]);
        g.edges[0].weight = 5.0;
        assert_eq!(shortest_path(&g, 0, 2).unwrap().len(), 2);
    }
}
