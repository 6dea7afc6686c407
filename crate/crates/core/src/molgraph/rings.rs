//! Smallest set of smallest rings.
//!
//! Horton's candidate construction: for every root vertex and every edge
//! (x, y) the cycle root→x, x-y, y→root built from one fixed shortest-path
//! tree per root. Candidates are sorted by length and greedily kept when
//! their edge set is independent over GF(2) of those already kept, which
//! yields a minimum cycle basis.

use super::Bond;

pub(crate) fn sssr(n: usize, bonds: &[Bond], adj: &[Vec<(usize, usize)>]) -> Vec<Vec<usize>> {
    let core = two_core(n, adj);
    let core_edges: Vec<usize> = (0..bonds.len())
        .filter(|&b| core[bonds[b].a] && core[bonds[b].b])
        .collect();
    if core_edges.is_empty() {
        return Vec::new();
    }
    let core_nodes: Vec<usize> = (0..n).filter(|&v| core[v]).collect();
    let n_comp = count_components(&core_nodes, adj, &core);
    let target = core_edges.len() + n_comp - core_nodes.len();
    if target == 0 {
        return Vec::new();
    }

    let words = bonds.len().div_ceil(64);
    let mut candidates: Vec<(Vec<usize>, Vec<u64>)> = Vec::new();
    for &root in &core_nodes {
        let (dist, parent) = bfs(root, n, adj, &core);
        for &e in &core_edges {
            let (x, y) = (bonds[e].a, bonds[e].b);
            if dist[x] == usize::MAX || dist[y] == usize::MAX {
                continue;
            }
            // x and y must be reached without going through each other
            if parent[x] == Some((y, e)) || parent[y] == Some((x, e)) {
                continue;
            }
            let px = path_to_root(x, &parent);
            let py = path_to_root(y, &parent);
            // disjoint apart from the root
            if px.iter().rev().skip(1).any(|v| py.contains(v)) {
                continue;
            }
            let mut cycle: Vec<usize> = px.iter().rev().copied().collect();
            cycle.extend(py.iter().take(py.len() - 1).copied());
            // cycle now runs root .. x, y .. (next to root)
            let mut edges = vec![0u64; words];
            for w in 0..cycle.len() {
                let (a, b) = (cycle[w], cycle[(w + 1) % cycle.len()]);
                let bi = adj[a]
                    .iter()
                    .find(|(nb, _)| *nb == b)
                    .map(|&(_, bi)| bi)
                    .expect("consecutive cycle atoms are bonded");
                edges[bi / 64] |= 1 << (bi % 64);
            }
            if cycle.len() >= 3 {
                candidates.push((cycle, edges));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.1.cmp(&b.1)));
    candidates.dedup_by(|a, b| a.1 == b.1);

    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new(); // (pivot bit, reduced vector)
    let mut rings = Vec::new();
    for (cycle, edges) in candidates {
        let mut v = edges.clone();
        for (pivot, row) in &basis {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (x, r) in v.iter_mut().zip(row) {
                    *x ^= r;
                }
            }
        }
        let Some(pivot) = first_bit(&v) else {
            continue;
        };
        // keep rows fully reduced on their pivot
        for (_, row) in basis.iter_mut() {
            if row[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (x, r) in row.iter_mut().zip(&v) {
                    *x ^= r;
                }
            }
        }
        basis.push((pivot, v));
        rings.push(canonical_cycle(cycle));
        if rings.len() == target {
            break;
        }
    }
    rings
}

fn first_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Rotates a cycle to start at its smallest atom, walking towards the
/// smaller of the two neighbours.
fn canonical_cycle(mut c: Vec<usize>) -> Vec<usize> {
    let k = (0..c.len()).min_by_key(|&i| c[i]).unwrap();
    c.rotate_left(k);
    if c.len() > 2 && c[c.len() - 1] < c[1] {
        c[1..].reverse();
    }
    c
}

fn two_core(n: usize, adj: &[Vec<(usize, usize)>]) -> Vec<bool> {
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&v| deg[v] <= 1).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &(w, _) in &adj[v] {
            if alive[w] {
                deg[w] -= 1;
                if deg[w] <= 1 {
                    stack.push(w);
                }
            }
        }
    }
    alive
}

fn count_components(nodes: &[usize], adj: &[Vec<(usize, usize)>], keep: &[bool]) -> usize {
    let mut seen = vec![false; keep.len()];
    let mut count = 0;
    for &s in nodes {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &(w, _) in &adj[v] {
                if keep[w] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

type Parent = Option<(usize, usize)>;

fn bfs(
    root: usize,
    n: usize,
    adj: &[Vec<(usize, usize)>],
    keep: &[bool],
) -> (Vec<usize>, Vec<Parent>) {
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![None; n];
    let mut queue = std::collections::VecDeque::new();
    dist[root] = 0;
    queue.push_back(root);
    while let Some(v) = queue.pop_front() {
        for &(w, bi) in &adj[v] {
            if keep[w] && dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                parent[w] = Some((v, bi));
                queue.push_back(w);
            }
        }
    }
    (dist, parent)
}

/// `v, parent(v), ..., root`
fn path_to_root(mut v: usize, parent: &[Parent]) -> Vec<usize> {
    let mut path = vec![v];
    while let Some((p, _)) = parent[v] {
        path.push(p);
        v = p;
    }
    path
}

#[cfg(test)]
mod tests {
    use crate::molgraph::parse_smiles;

    fn ring_sizes(s: &str) -> Vec<usize> {
        let m = parse_smiles(s).unwrap();
        let mut v: Vec<usize> = m.rings().iter().map(Vec::len).collect();
        v.sort();
        v
    }

    #[test]
    fn simple_systems() {
        assert_eq!(ring_sizes("CCO"), Vec::<usize>::new());
        assert_eq!(ring_sizes("C1CC1"), vec![3]);
        assert_eq!(ring_sizes("c1ccc2ccccc2c1"), vec![6, 6]);
        assert_eq!(ring_sizes("C1CC2CCC1C2"), vec![5, 5]); // norbornane
        assert_eq!(ring_sizes("C1CCC2(CC1)CCCC2"), vec![5, 6]); // spiro
    }

    #[test]
    fn cubane_and_adamantane() {
        assert_eq!(ring_sizes("C12C3C4C1C5C2C3C45"), vec![4, 4, 4, 4, 4]);
        assert_eq!(ring_sizes("C1C2CC3CC1CC(C2)C3"), vec![6, 6, 6]);
    }

    #[test]
    fn steroid_core() {
        assert_eq!(ring_sizes("C1CCC2C(C1)CCC1C2CCC2CCCC12"), vec![5, 6, 6, 6]);
    }

    #[test]
    fn rings_are_cycles() {
        let m = parse_smiles("c1ccc2c(c1)[nH]c1ccccc12").unwrap();
        for r in m.rings() {
            for w in 0..r.len() {
                assert!(m.bond_between(r[w], r[(w + 1) % r.len()]).is_some());
            }
        }
    }
}
