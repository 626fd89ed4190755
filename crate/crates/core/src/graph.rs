//! Per-task modification gain graph.
//!
//! Nodes are the recorded architectures of one task; every edge joins 1-hop
//! neighbors and is stored in both directions with negated labels. The graph
//! is a view over the store's performance records and is rebuilt, never edited.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::Result;
use crate::space::{DesignSpace, DesignTuple, Modification};
use crate::store::{ArchId, KnowledgeStore};

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSample {
    pub from: DesignTuple,
    pub to: DesignTuple,
    pub gain: f64,
}

#[derive(Debug, Clone)]
pub struct GainGraph {
    task_id: String,
    space: Arc<DesignSpace>,
    nodes: BTreeMap<ArchId, DesignTuple>,
    index: HashMap<DesignTuple, ArchId>,
    /// Sorted by neighbor id.
    adjacency: BTreeMap<ArchId, Vec<(ArchId, f64)>>,
    edge_count: usize,
}

impl PartialEq for GainGraph {
    fn eq(&self, other: &Self) -> bool {
        self.task_id == other.task_id
            && self.space == other.space
            && self.nodes == other.nodes
            && self.adjacency == other.adjacency
    }
}

impl GainGraph {
    pub fn build(store: &KnowledgeStore, task_id: &str) -> Result<Self> {
        let t = store.task_index(task_id)?;
        let gains = store.derive_gains(task_id)?;
        let mut nodes = BTreeMap::new();
        let mut adjacency: BTreeMap<ArchId, Vec<(ArchId, f64)>> = BTreeMap::new();
        for rec in store.perf_records(t) {
            nodes.insert(rec.arch, store.tuple(rec.arch).clone());
            adjacency.insert(rec.arch, Vec::new());
        }
        for g in &gains {
            adjacency.get_mut(&g.from).expect("recorded").push((g.to, g.gain));
            adjacency.get_mut(&g.to).expect("recorded").push((g.from, -g.gain));
        }
        for list in adjacency.values_mut() {
            list.sort_by_key(|&(b, _)| b);
        }
        let index = nodes.iter().map(|(&a, t)| (t.clone(), a)).collect();
        Ok(Self {
            task_id: task_id.to_string(),
            space: store.space().clone(),
            nodes,
            index,
            adjacency,
            edge_count: gains.len(),
        })
    }

    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn space(&self) -> &Arc<DesignSpace> {
        &self.space
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Unordered edge count.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains(&self, theta: &DesignTuple) -> bool {
        self.index.contains_key(theta)
    }

    pub fn adjacency(&self, arch: ArchId) -> &[(ArchId, f64)] {
        self.adjacency.get(&arch).map(Vec::as_slice).unwrap_or(&[])
    }

    fn edge(&self, a: ArchId, b: ArchId) -> Option<f64> {
        let list = self.adjacency.get(&a)?;
        list.binary_search_by_key(&b, |&(n, _)| n).ok().map(|i| list[i].1)
    }

    /// Signed gain `from -> to` if both endpoints are recorded.
    pub fn gain(&self, from: &DesignTuple, to: &DesignTuple) -> Option<f64> {
        let a = *self.index.get(from)?;
        let b = *self.index.get(to)?;
        self.edge(a, b)
    }

    /// Recorded gain (or `None`) for every 1-hop modification of `theta`.
    pub fn local_gains(&self, theta: &DesignTuple) -> Result<BTreeMap<Modification, Option<f64>>> {
        let from = self.index.get(theta).copied();
        Ok(self
            .space
            .neighbors(theta)?
            .into_iter()
            .map(|(m, nb)| {
                let g = from.and_then(|a| self.index.get(&nb).and_then(|&b| self.edge(a, b)));
                (m, g)
            })
            .collect())
    }

    /// Canonical edges, optionally followed by their reverse orientation.
    pub fn edge_samples(&self, directionized: bool) -> Vec<EdgeSample> {
        let mut out = Vec::with_capacity(self.edge_count * if directionized { 2 } else { 1 });
        for (a, list) in &self.adjacency {
            for &(b, g) in list.iter().filter(|(b, _)| b > a) {
                let (ta, tb) = (&self.nodes[a], &self.nodes[&b]);
                out.push(EdgeSample {
                    from: ta.clone(),
                    to: tb.clone(),
                    gain: g,
                });
                if directionized {
                    out.push(EdgeSample {
                        from: tb.clone(),
                        to: ta.clone(),
                        gain: -g,
                    });
                }
            }
        }
        out
    }

    /// `from_arch,to_arch,gain` edge list in canonical direction.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::from("from_arch,to_arch,gain\n");
        for (a, list) in &self.adjacency {
            for &(b, g) in list.iter().filter(|(b, _)| b > a) {
                let _ = writeln!(out, "{a},{b},{g}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(space: &str, records: &str) -> KnowledgeStore {
        KnowledgeStore::ingest(Arc::new(DesignSpace::parse(space).unwrap()), records).unwrap()
    }

    #[test]
    fn single_dimension_triangle() {
        let s = store(
            "act: [relu, prelu, swish]",
            "task_id,act,performance\nt,relu,0.1\nt,prelu,0.2\nt,swish,0.4\n",
        );
        let g = GainGraph::build(&s, "t").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 3));
        let samples = g.edge_samples(true);
        assert_eq!(samples.len(), 6);
        for pair in samples.chunks(2) {
            assert_eq!(pair[0].gain + pair[1].gain, 0.0);
            assert_eq!(pair[0].from, pair[1].to);
        }
        assert_eq!(g.edge_samples(false).len(), 3);
    }

    #[test]
    fn degenerate_and_hypercube() {
        let s = store("act: [relu, prelu]", "task_id,act,performance\nt,relu,0.1\n");
        let g = GainGraph::build(&s, "t").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
        assert!(g.edge_samples(true).is_empty());

        let s = store(
            "a: [x, y]\nb: [p, q]",
            "task_id,a,b,performance\nt,x,p,1\nt,x,q,2\nt,y,p,3\nt,y,q,5\n",
        );
        let g = GainGraph::build(&s, "t").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 4));
        assert_eq!(g.edge_count(), s.derive_gains("t").unwrap().len());
        assert_eq!(GainGraph::build(&s, "t").unwrap(), g);
        assert!(g.to_edge_list().starts_with("from_arch,to_arch,gain\n0,1,1\n"));
    }

    #[test]
    fn local_gain_coverage() {
        let s = store(
            "a: [x, y, z]\nb: [p, q]",
            "task_id,a,b,performance\nt,x,p,1\nt,y,p,3\nt,x,q,0.5\nu,z,q,1\n",
        );
        let g = GainGraph::build(&s, "t").unwrap();
        let theta = DesignTuple::new(vec![0, 0]);
        let local = g.local_gains(&theta).unwrap();
        let keys: Vec<_> = local.keys().copied().collect();
        let expected: Vec<_> = s.space().neighbors(&theta).unwrap().into_iter().map(|(m, _)| m).collect();
        assert_eq!(keys, expected);
        // x->y recorded, x->z not, p->q recorded
        assert_eq!(local[&expected[0]], Some(2.0));
        assert_eq!(local[&expected[1]], None);
        assert_eq!(local[&expected[2]], Some(-0.5));

        let unrecorded = DesignTuple::new(vec![2, 1]);
        assert!(g.local_gains(&unrecorded).unwrap().values().all(Option::is_none));
    }

    #[test]
    fn unknown_task() {
        let s = store("act: [relu, prelu]", "task_id,act,performance\nt,relu,0.1\n");
        assert!(GainGraph::build(&s, "nope").is_err());
    }
}
