//! Bounded simple-path enumeration and k-hop reachability. Both walk the
//! graph in either edge direction through the materialized inverse edges.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};

/// Entity-free relation sequence of a path, e.g. a rule body.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationPath(pub Vec<RelationId>);

impl RelationPath {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A simple path. Each step is a triple in traversal orientation, so an
/// inverse step `(u, r^-1, v)` stands for the stored fact `(v, r, u)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    steps: Vec<Triple>,
}

impl Path {
    pub fn steps(&self) -> &[Triple] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn start(&self) -> EntityId {
        self.steps[0].head
    }

    pub fn end(&self) -> EntityId {
        self.steps[self.steps.len() - 1].tail
    }

    pub fn relations(&self) -> RelationPath {
        RelationPath(self.steps.iter().map(|s| s.relation).collect())
    }

    /// Entities visited in order, including both endpoints.
    pub fn entities(&self) -> Vec<EntityId> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(self.start());
        out.extend(self.steps.iter().map(|s| s.tail));
        out
    }

    fn sort_key(&self) -> (usize, Vec<RelationId>, Vec<EntityId>) {
        (self.len(), self.relations().0, self.entities())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathLimits {
    pub max_hops: usize,
    pub max_paths: usize,
}

impl Default for PathLimits {
    fn default() -> Self {
        PathLimits {
            max_hops: 3,
            max_paths: 100,
        }
    }
}

/// Hop distances from `source` out to `radius`, over both edge directions.
pub fn bounded_distances(graph: &KnowledgeGraph, source: EntityId, radius: usize) -> HashMap<EntityId, usize> {
    let mut dist = HashMap::new();
    dist.insert(source, 0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        if d == radius {
            continue;
        }
        for &(_, v) in graph.outgoing(u) {
            if let Entry::Vacant(slot) = dist.entry(v) {
                slot.insert(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All simple paths from `from` to `to` with at most `limits.max_hops`
/// steps, ordered by length, then relation ids, then entity ids, and
/// truncated to `limits.max_paths`.
///
/// When `exclude_relation` is `Some(r)`, the single edge `(from, r, to)` is
/// not reported; it is the fact being predicted.
pub fn enumerate_paths(
    graph: &KnowledgeGraph,
    from: EntityId,
    to: EntityId,
    limits: PathLimits,
    exclude_relation: Option<RelationId>,
) -> Result<Vec<Path>> {
    graph.check_entity(from)?;
    graph.check_entity(to)?;
    let mut found = Vec::new();
    if from == to || limits.max_hops == 0 {
        return Ok(found);
    }
    // distances to the target prune branches that cannot close in time
    let to_target = bounded_distances(graph, to, limits.max_hops - 1);
    let mut steps = Vec::with_capacity(limits.max_hops);
    let mut on_path = HashSet::from([from]);
    extend(
        graph,
        from,
        to,
        limits.max_hops,
        exclude_relation,
        &to_target,
        &mut steps,
        &mut on_path,
        &mut found,
    );
    found.sort_by_cached_key(Path::sort_key);
    found.truncate(limits.max_paths);
    Ok(found)
}

#[allow(clippy::too_many_arguments)]
fn extend(
    graph: &KnowledgeGraph,
    at: EntityId,
    to: EntityId,
    max_hops: usize,
    exclude_relation: Option<RelationId>,
    to_target: &HashMap<EntityId, usize>,
    steps: &mut Vec<Triple>,
    on_path: &mut HashSet<EntityId>,
    found: &mut Vec<Path>,
) {
    let remaining = max_hops - steps.len();
    for &(relation, next) in graph.outgoing(at) {
        if next == to {
            if steps.is_empty() && exclude_relation == Some(relation) {
                continue;
            }
            let mut path = steps.clone();
            path.push(Triple::new(at, relation, next));
            found.push(Path { steps: path });
            continue;
        }
        if remaining <= 1 || on_path.contains(&next) {
            continue;
        }
        match to_target.get(&next) {
            Some(&d) if d < remaining => {}
            _ => continue,
        }
        steps.push(Triple::new(at, relation, next));
        on_path.insert(next);
        extend(
            graph,
            next,
            to,
            max_hops,
            exclude_relation,
            to_target,
            steps,
            on_path,
            found,
        );
        on_path.remove(&next);
        steps.pop();
    }
}

/// True iff `a` and `b` are joined by a path of at most `k` edges.
pub fn k_hop_reachable(graph: &KnowledgeGraph, a: EntityId, b: EntityId, k: usize) -> Result<bool> {
    graph.check_entity(a)?;
    graph.check_entity(b)?;
    Ok(bounded_distances(graph, a, k).contains_key(&b))
}

/// Fraction of unordered distinct pairs in `entities` that are k-hop
/// reachable. Duplicate ids are ignored.
pub fn pairwise_reachability_fraction(graph: &KnowledgeGraph, entities: &[EntityId], k: usize) -> Result<f64> {
    let mut distinct: Vec<EntityId> = entities.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::TooFewEntities(distinct.len()));
    }
    for &e in &distinct {
        graph.check_entity(e)?;
    }
    let mut reachable = 0usize;
    for (i, &a) in distinct.iter().enumerate() {
        let ball = bounded_distances(graph, a, k);
        reachable += distinct[i + 1..].iter().filter(|b| ball.contains_key(b)).count();
    }
    let pairs = distinct.len() * (distinct.len() - 1) / 2;
    Ok(reachable as f64 / pairs as f64)
}
