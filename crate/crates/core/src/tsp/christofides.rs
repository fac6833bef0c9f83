use super::{Tour, TspInstance};
use crate::{Error, Result};

/// Odd-vertex sets up to this size are matched exactly by enumeration.
pub const EXACT_MATCHING_MAX: usize = 10;

/// Christofides-style tour: Prim MST, minimum-weight perfect matching on the
/// odd-degree vertices, Euler circuit, shortcut.
pub fn christofides_like(instance: &TspInstance) -> Result<Tour> {
    christofides_with_info(instance).map(|(t, _)| t)
}

/// As [`christofides_like`], also reporting whether the matching was exact
/// (the 1.5-approximation guarantee on metric instances needs it).
pub fn christofides_with_info(instance: &TspInstance) -> Result<(Tour, bool)> {
    let k = instance.k();
    if k < 3 {
        return Err(Error::CityCount {
            k,
            min: 3,
            max: super::MAX_CITIES,
        });
    }
    let w = instance.weights();
    let mut edges = prim_mst(w);
    let mut degree = vec![0usize; k];
    for &(a, b) in &edges {
        degree[a] += 1;
        degree[b] += 1;
    }
    let odd: Vec<usize> = (0..k).filter(|&v| degree[v] % 2 == 1).collect();
    let exact = odd.len() <= EXACT_MATCHING_MAX;
    let matching = if exact {
        exact_matching(w, &odd)
    } else {
        greedy_matching(w, &odd)
    };
    edges.extend(matching);
    let circuit = euler_circuit(k, &edges);
    let mut seen = vec![false; k];
    let order: Vec<usize> = circuit
        .into_iter()
        .filter(|&v| !std::mem::replace(&mut seen[v], true))
        .collect();
    Ok((Tour::from_order(instance, order)?, exact))
}

fn prim_mst(w: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let k = w.len();
    let mut in_tree = vec![false; k];
    let mut dist = vec![f64::INFINITY; k];
    let mut parent = vec![usize::MAX; k];
    dist[0] = 0.0;
    let mut edges = Vec::with_capacity(k - 1);
    for _ in 0..k {
        // strict < keeps the lowest index on ties
        let mut u = usize::MAX;
        for v in 0..k {
            if !in_tree[v] && (u == usize::MAX || dist[v] < dist[u]) {
                u = v;
            }
        }
        in_tree[u] = true;
        if parent[u] != usize::MAX {
            edges.push((parent[u], u));
        }
        for v in 0..k {
            if !in_tree[v] && w[u][v] < dist[v] {
                dist[v] = w[u][v];
                parent[v] = u;
            }
        }
    }
    edges
}

fn exact_matching(w: &[Vec<f64>], vertices: &[usize]) -> Vec<(usize, usize)> {
    fn recurse(
        w: &[Vec<f64>],
        left: &mut Vec<usize>,
        cur: &mut Vec<(usize, usize)>,
        cost: f64,
        best: &mut (f64, Vec<(usize, usize)>),
    ) {
        if cost >= best.0 {
            return;
        }
        if left.is_empty() {
            *best = (cost, cur.clone());
            return;
        }
        let a = left.remove(0);
        for idx in 0..left.len() {
            let b = left.remove(idx);
            cur.push((a, b));
            recurse(w, left, cur, cost + w[a][b], best);
            cur.pop();
            left.insert(idx, b);
        }
        left.insert(0, a);
    }
    let mut best = (f64::INFINITY, Vec::new());
    recurse(w, &mut vertices.to_vec(), &mut Vec::new(), 0.0, &mut best);
    best.1
}

fn greedy_matching(w: &[Vec<f64>], vertices: &[usize]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, &a) in vertices.iter().enumerate() {
        for &b in &vertices[i + 1..] {
            pairs.push((a, b));
        }
    }
    pairs.sort_by(|p, q| w[p.0][p.1].total_cmp(&w[q.0][q.1]).then(p.cmp(q)));
    let mut used = vec![false; w.len()];
    let mut out = Vec::new();
    for (a, b) in pairs {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            out.push((a, b));
        }
    }
    out
}

/// Hierholzer's algorithm on a connected multigraph with all degrees even,
/// starting at vertex 0 and always taking the lowest-numbered free edge.
fn euler_circuit(k: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for (id, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, id));
        adj[b].push((a, id));
    }
    for list in &mut adj {
        list.sort();
        list.reverse(); // pop() yields the smallest neighbour
    }
    let mut used = vec![false; edges.len()];
    let mut stack = vec![0usize];
    let mut circuit = Vec::with_capacity(edges.len() + 1);
    while let Some(&v) = stack.last() {
        let mut advanced = false;
        while let Some((u, id)) = adj[v].pop() {
            if !used[id] {
                used[id] = true;
                stack.push(u);
                advanced = true;
                break;
            }
        }
        if !advanced {
            circuit.push(stack.pop().unwrap());
        }
    }
    circuit.reverse();
    circuit
}
