//! Compact adjacency structures shared by the graph algorithms.

/// Compressed adjacency over nodes `0..n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<u64>,
}

impl Adjacency {
    /// Builds from `(source, target, weight)` arcs. Parallel arcs are merged
    /// by summing weights; neighbour lists come out sorted.
    pub fn from_arcs(n: usize, arcs: impl IntoIterator<Item = (u32, u32, u64)>) -> Self {
        let mut arcs: Vec<(u32, u32, u64)> = arcs.into_iter().collect();
        arcs.sort_unstable_by_key(|&(s, t, _)| (s, t));
        let mut merged: Vec<(u32, u32, u64)> = Vec::with_capacity(arcs.len());
        for (s, t, w) in arcs {
            match merged.last_mut() {
                Some(last) if last.0 == s && last.1 == t => last.2 += w,
                _ => merged.push((s, t, w)),
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for &(s, _, _) in &merged {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Adjacency {
            offsets,
            targets: merged.iter().map(|a| a.1).collect(),
            weights: merged.iter().map(|a| a.2).collect(),
        }
    }

    /// Symmetrized projection: `w(u,v) = w(u→v) + w(v→u)`, self-loops dropped.
    pub fn undirected(n: usize, edges: impl IntoIterator<Item = (u32, u32, u64)>) -> Self {
        let arcs = edges
            .into_iter()
            .filter(|(s, t, _)| s != t)
            .flat_map(|(s, t, w)| [(s, t, w), (t, s, w)]);
        Self::from_arcs(n, arcs)
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn weights(&self, v: usize) -> &[u64] {
        &self.weights[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn strength(&self, v: usize) -> u64 {
        self.weights(v).iter().sum()
    }

    pub fn arcs(&self, v: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.neighbors(v)
            .iter()
            .zip(self.weights(v))
            .map(|(&t, &w)| (t as usize, w))
    }

    pub fn reversed(&self) -> Self {
        let arcs = (0..self.node_count())
            .flat_map(|v| self.arcs(v).map(move |(t, w)| (t as u32, v as u32, w)));
        Self::from_arcs(self.node_count(), arcs)
    }
}

/// Connected components of an undirected adjacency, each sorted ascending,
/// ordered by size descending then smallest member.
pub fn components(adj: &Adjacency) -> Vec<Vec<u32>> {
    let n = adj.node_count();
    let mut label = vec![u32::MAX; n];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != u32::MAX {
            continue;
        }
        let id = out.len() as u32;
        let mut members = vec![start as u32];
        label[start] = id;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &u in adj.neighbors(v) {
                if label[u as usize] == u32::MAX {
                    label[u as usize] = id;
                    members.push(u);
                    stack.push(u as usize);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    out
}

/// Strongly connected components (iterative Tarjan), same ordering as [`components`].
pub fn strong_components(adj: &Adjacency) -> Vec<Vec<u32>> {
    let n = adj.node_count();
    let mut index = vec![u32::MAX; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0u32;
    // (node, next neighbour position)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != u32::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root as u32);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let nbrs = adj.neighbors(v);
            if *pos < nbrs.len() {
                let u = nbrs[*pos] as usize;
                *pos += 1;
                if index[u] == u32::MAX {
                    index[u] = counter;
                    low[u] = counter;
                    counter += 1;
                    stack.push(u as u32);
                    on_stack[u] = true;
                    call.push((u, 0));
                } else if on_stack[u] {
                    low[v] = low[v].min(index[u]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w as usize] = false;
                        comp.push(w);
                        if w as usize == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_parallel_arcs() {
        let adj = Adjacency::from_arcs(3, [(0, 1, 2), (0, 1, 3), (2, 0, 1)]);
        assert_eq!(adj.neighbors(0), &[1]);
        assert_eq!(adj.weights(0), &[5]);
        assert_eq!(adj.degree(1), 0);
    }

    #[test]
    fn undirected_symmetrizes_and_drops_loops() {
        let adj = Adjacency::undirected(2, [(0, 1, 2), (1, 0, 1), (0, 0, 9)]);
        assert_eq!(adj.weights(0), &[3]);
        assert_eq!(adj.weights(1), &[3]);
    }

    #[test]
    fn weak_components_sorted_by_size() {
        let adj = Adjacency::undirected(6, [(0, 1, 1), (3, 4, 1), (4, 5, 1)]);
        let comps = components(&adj);
        assert_eq!(comps, vec![vec![3, 4, 5], vec![0, 1], vec![2]]);
    }

    #[test]
    fn strong_components_of_cycle_plus_tail() {
        let adj = Adjacency::from_arcs(4, [(0, 1, 1), (1, 2, 1), (2, 0, 1), (2, 3, 1)]);
        let comps = strong_components(&adj);
        assert_eq!(comps, vec![vec![0, 1, 2], vec![3]]);
    }
}
