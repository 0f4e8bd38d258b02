use std::collections::VecDeque;

use super::{sort_reals, GeometricGraph};
use crate::scalar::Real;

/// BFS hop distances from `source`; `None` for unreachable nodes.
fn bfs<T: Real>(g: &GeometricGraph<T>, source: usize, removed: &[bool]) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.n()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u].unwrap() + 1;
        for &w in g.neighbors(u) {
            if !removed[w] && dist[w].is_none() {
                dist[w] = Some(next);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// All-pairs hop distances.
pub fn hop_distances<T: Real>(g: &GeometricGraph<T>) -> Vec<Vec<Option<usize>>> {
    let none = vec![false; g.n()];
    (0..g.n()).map(|s| bfs(g, s, &none)).collect()
}

/// For each node `i`, the sorted distances `‖x_i − x_j‖` over all `j ≠ i`
/// within `k` hops.
pub fn khop_distance_multisets<T: Real>(g: &GeometricGraph<T>, k: usize) -> Vec<Vec<T>> {
    let hops = hop_distances(g);
    hops.iter()
        .enumerate()
        .map(|(i, row)| {
            let mut ds: Vec<T> =
                row.iter().enumerate().filter(|&(j, h)| j != i && h.is_some_and(|h| h <= k)).map(|(j, _)| g.distance(i, j)).collect();
            sort_reals(&mut ds);
            ds
        })
        .collect()
}

/// `G^k`: same nodes and positions, an edge between every pair at hop
/// distance `1..=k`. Node features are kept; edge features are dropped since
/// new edges have none.
pub fn power_graph<T: Real>(g: &GeometricGraph<T>, k: usize) -> GeometricGraph<T> {
    let k = k.max(1);
    let neighbors: Vec<Vec<usize>> = hop_distances(g)
        .into_iter()
        .enumerate()
        .map(|(i, row)| row.into_iter().enumerate().filter(|&(j, h)| j != i && h.is_some_and(|h| h <= k)).map(|(j, _)| j).collect())
        .collect();
    GeometricGraph::from_parts(g.d(), neighbors, g.positions_flat().to_vec(), g.node_features_raw().cloned(), None)
}

/// Connected components, each sorted, ordered by smallest member.
pub fn connected_components<T: Real>(g: &GeometricGraph<T>) -> Vec<Vec<usize>> {
    let none = vec![false; g.n()];
    let mut assigned = vec![false; g.n()];
    let mut out = Vec::new();
    for s in 0..g.n() {
        if assigned[s] {
            continue;
        }
        let comp: Vec<usize> = bfs(g, s, &none).into_iter().enumerate().filter_map(|(j, h)| h.map(|_| j)).collect();
        for &j in &comp {
            assigned[j] = true;
        }
        out.push(comp);
    }
    out
}

pub fn is_connected<T: Real>(g: &GeometricGraph<T>) -> bool {
    connected_components(g).len() <= 1
}

/// Largest hop distance, or `None` if the graph is disconnected.
pub fn diameter<T: Real>(g: &GeometricGraph<T>) -> Option<usize> {
    let mut best = 0;
    for row in hop_distances(g) {
        for h in row {
            best = best.max(h?);
        }
    }
    Some(best)
}

/// Vertex `k`-connectivity: more than `k` nodes, and deleting any set of
/// fewer than `k` nodes leaves the graph connected. Exhaustive over vertex
/// subsets, so only meant for small graphs.
pub fn is_k_connected<T: Real>(g: &GeometricGraph<T>, k: usize) -> bool {
    let n = g.n();
    if n <= k {
        return false;
    }
    let mut removed = vec![false; n];
    (0..k).all(|size| subsets_keep_connected(g, &mut removed, 0, size))
}

fn subsets_keep_connected<T: Real>(g: &GeometricGraph<T>, removed: &mut [bool], start: usize, left: usize) -> bool {
    if left == 0 {
        let Some(source) = removed.iter().position(|r| !r) else {
            return true;
        };
        let reach = bfs(g, source, removed);
        return (0..g.n()).all(|j| removed[j] || reach[j].is_some());
    }
    for v in start..g.n() {
        removed[v] = true;
        let ok = subsets_keep_connected(g, removed, v + 1, left - 1);
        removed[v] = false;
        if !ok {
            return false;
        }
    }
    true
}
