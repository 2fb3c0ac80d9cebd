//! Directed graphs over 1-based node indices.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;

use crate::minilang::NodeIdx;

/// Directed graph stored as parent sets; acyclicity is checked, not
/// enforced.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dag {
    parents: Vec<BTreeSet<NodeIdx>>,
}

impl Dag {
    pub fn new(node_count: usize) -> Dag {
        Dag {
            parents: alloc::vec![BTreeSet::new(); node_count],
        }
    }

    pub fn from_parent_sets(parents: Vec<BTreeSet<NodeIdx>>) -> Dag {
        Dag { parents }
    }

    pub fn node_count(&self) -> usize {
        self.parents.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeIdx> {
        1..=self.parents.len()
    }

    pub fn parents(&self, child: NodeIdx) -> &BTreeSet<NodeIdx> {
        &self.parents[child - 1]
    }

    pub fn children(&self, parent: NodeIdx) -> Vec<NodeIdx> {
        self.nodes()
            .filter(|&c| self.parents(c).contains(&parent))
            .collect()
    }

    pub fn add_edge(&mut self, parent: NodeIdx, child: NodeIdx) {
        self.parents[child - 1].insert(parent);
    }

    pub fn remove_edge(&mut self, parent: NodeIdx, child: NodeIdx) -> bool {
        self.parents[child - 1].remove(&parent)
    }

    pub fn has_edge(&self, parent: NodeIdx, child: NodeIdx) -> bool {
        self.parents[child - 1].contains(&parent)
    }

    /// All edges as (parent, child), sorted.
    pub fn edges(&self) -> Vec<(NodeIdx, NodeIdx)> {
        let mut out: Vec<_> = self
            .nodes()
            .flat_map(|c| self.parents(c).iter().map(move |&p| (p, c)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(BTreeSet::len).sum()
    }

    /// A topological order, or `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<NodeIdx>> {
        let n = self.node_count();
        let mut indegree: Vec<usize> = self.parents.iter().map(BTreeSet::len).collect();
        let mut children: Vec<Vec<NodeIdx>> = alloc::vec![Vec::new(); n];
        for (p, c) in self.edges() {
            children[p - 1].push(c);
        }
        let mut ready: BTreeSet<NodeIdx> = self.nodes().filter(|&k| indegree[k - 1] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(k) = ready.pop_first() {
            order.push(k);
            for &c in &children[k - 1] {
                indegree[c - 1] -= 1;
                if indegree[c - 1] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Edges of one directed cycle, found deterministically (smallest start
    /// node, smallest successors first), or `None` if acyclic.
    pub fn find_cycle(&self) -> Option<Vec<(NodeIdx, NodeIdx)>> {
        let n = self.node_count();
        let mut children: Vec<Vec<NodeIdx>> = alloc::vec![Vec::new(); n];
        for (p, c) in self.edges() {
            children[p - 1].push(c);
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = alloc::vec![0u8; n];
        for start in self.nodes() {
            if state[start - 1] != 0 {
                continue;
            }
            let mut stack: Vec<(NodeIdx, usize)> = alloc::vec![(start, 0)];
            state[start - 1] = 1;
            while let Some(&mut (k, ref mut next)) = stack.last_mut() {
                if let Some(&c) = children[k - 1].get(*next) {
                    *next += 1;
                    match state[c - 1] {
                        0 => {
                            state[c - 1] = 1;
                            stack.push((c, 0));
                        }
                        1 => {
                            let from = stack.iter().position(|&(v, _)| v == c).unwrap();
                            let path: Vec<NodeIdx> = stack[from..].iter().map(|&(v, _)| v).collect();
                            let mut cycle: Vec<_> = path.windows(2).map(|w| (w[0], w[1])).collect();
                            cycle.push((*path.last().unwrap(), c));
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[k - 1] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// `nodes` together with all their ancestors.
    pub fn ancestral_closure(&self, nodes: &BTreeSet<NodeIdx>) -> BTreeSet<NodeIdx> {
        let mut out = nodes.clone();
        let mut queue: VecDeque<NodeIdx> = nodes.iter().copied().collect();
        while let Some(k) = queue.pop_front() {
            for &p in self.parents(k) {
                if out.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        out
    }

    /// The graph with every edge leaving a node of `sources` removed.
    pub fn without_outgoing(&self, sources: &BTreeSet<NodeIdx>) -> Dag {
        Dag {
            parents: self
                .parents
                .iter()
                .map(|ps| ps.difference(sources).copied().collect())
                .collect(),
        }
    }

    /// Whether every path between `x` and `y` is blocked by `z`, decided on
    /// the moralized ancestral graph of `x ∪ y ∪ z`.
    pub fn d_separated(&self, x: &BTreeSet<NodeIdx>, y: &BTreeSet<NodeIdx>, z: &BTreeSet<NodeIdx>) -> bool {
        if x.iter().any(|k| y.contains(k)) {
            return false;
        }
        let mut seed = x.clone();
        seed.extend(y.iter().copied());
        seed.extend(z.iter().copied());
        let keep = self.ancestral_closure(&seed);
        let n = self.node_count();
        let mut adj: Vec<BTreeSet<NodeIdx>> = alloc::vec![BTreeSet::new(); n];
        for &c in &keep {
            let ps: Vec<NodeIdx> = self.parents(c).iter().copied().collect();
            for (a, &p) in ps.iter().enumerate() {
                adj[p - 1].insert(c);
                adj[c - 1].insert(p);
                for &q in &ps[a + 1..] {
                    adj[p - 1].insert(q);
                    adj[q - 1].insert(p);
                }
            }
        }
        let mut seen: BTreeSet<NodeIdx> = x.iter().copied().filter(|k| !z.contains(k)).collect();
        let mut queue: VecDeque<NodeIdx> = seen.iter().copied().collect();
        while let Some(k) = queue.pop_front() {
            if y.contains(&k) {
                return false;
            }
            for &m in &adj[k - 1] {
                if !z.contains(&m) && seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(n: usize, edges: &[(NodeIdx, NodeIdx)]) -> Dag {
        let mut g = Dag::new(n);
        for &(p, c) in edges {
            g.add_edge(p, c);
        }
        g
    }

    fn set(v: &[NodeIdx]) -> BTreeSet<NodeIdx> {
        v.iter().copied().collect()
    }

    #[test]
    fn cycles() {
        assert!(dag(3, &[(1, 2), (2, 3)]).find_cycle().is_none());
        let g = dag(3, &[(1, 2), (2, 3), (3, 1)]);
        assert!(!g.is_acyclic());
        assert_eq!(g.find_cycle().unwrap(), [(1, 2), (2, 3), (3, 1)]);
    }

    #[test]
    fn d_separation_basics() {
        let chain = dag(3, &[(1, 2), (2, 3)]);
        assert!(chain.d_separated(&set(&[1]), &set(&[3]), &set(&[2])));
        assert!(!chain.d_separated(&set(&[1]), &set(&[3]), &set(&[])));
        let collider = dag(3, &[(1, 3), (2, 3)]);
        assert!(collider.d_separated(&set(&[1]), &set(&[2]), &set(&[])));
        assert!(!collider.d_separated(&set(&[1]), &set(&[2]), &set(&[3])));
        let fork = dag(3, &[(1, 2), (1, 3)]);
        assert!(fork.d_separated(&set(&[2]), &set(&[3]), &set(&[1])));
    }

    #[test]
    fn topological_order_respects_edges() {
        let g = dag(4, &[(3, 1), (1, 2), (4, 2)]);
        let order = g.topological_order().unwrap();
        let pos = |k| order.iter().position(|&v| v == k).unwrap();
        for (p, c) in g.edges() {
            assert!(pos(p) < pos(c));
        }
    }
}
