//! Imprimitivity systems coming from normal subgroups, and the actions they
//! induce on quotient graphs.

use thiserror::Error;

use crate::action::{graph_perm, ActionError, GroupAction};
use crate::graph::{quotient_by_partition, GraphError, PartitionProjection, QuotientMode, SerreGraph, VertexPartition};
use crate::group::{GroupError, PermGroup};
use crate::perm::Perm;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImprimError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("subgroup is not normal in the acting group")]
    NotNormal,
    #[error("partition is not invariant: generator {generator} splits block {block}")]
    NotInvariant { generator: usize, block: usize },
}

/// `v ∼ w` iff some `k ∈ K` sends `v` to `w`.
pub fn imprimitivity_from_normal(a: &GroupAction, k: &PermGroup) -> Result<VertexPartition, ImprimError> {
    if !a.group().is_normal(k)? {
        return Err(ImprimError::NotNormal);
    }
    let n = a.graph().num_vertices();
    let mut label = vec![usize::MAX; n];
    for v in 0..n {
        if label[v] == usize::MAX {
            for w in a.vertex_orbit_under(k, v) {
                label[w] = v;
            }
        }
    }
    Ok(VertexPartition::from_labels(&label))
}

/// First generator and block violating invariance, if any.
pub fn invariance_failure(a: &GroupAction, p: &VertexPartition) -> Option<(usize, usize)> {
    for (i, g) in a.group().generators().iter().enumerate() {
        for (b, block) in p.blocks().iter().enumerate() {
            let target = p.block_of(a.act_vertex(g, block[0]));
            if block.iter().any(|&v| p.block_of(a.act_vertex(g, v)) != target) {
                return Some((i, b));
            }
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct QuotientAction {
    pub graph: SerreGraph,
    pub projection: PartitionProjection,
    pub action: GroupAction,
    pub kernel: PermGroup,
}

/// The action `g·[v] = [g·v]` on the simple quotient graph, with its kernel.
pub fn induced_quotient_action(a: &GroupAction, p: &VertexPartition) -> Result<QuotientAction, ImprimError> {
    let g = a.graph();
    if !p.covers(g.num_vertices()) {
        return Err(GraphError::PartitionMismatch("partition does not cover the vertex set".into()).into());
    }
    if let Some((generator, block)) = invariance_failure(a, p) {
        return Err(ImprimError::NotInvariant { generator, block });
    }
    let (q, proj) = quotient_by_partition(g, p, QuotientMode::Simple)?;
    let images: Vec<Perm> = a
        .group()
        .generators()
        .iter()
        .map(|x| {
            let vmap: Vec<usize> = (0..q.num_vertices()).map(|b| p.block_of(a.act_vertex(x, p.blocks()[b][0]))).collect();
            let dmap: Vec<usize> = (0..q.num_darts())
                .map(|d| q.dart_between(vmap[q.iota(d)], vmap[q.tau(d)]).expect("invariant partition maps edges to edges"))
                .collect();
            graph_perm(&q, &vmap, &dmap).expect("block maps are bijective")
        })
        .collect();
    let action = GroupAction::new(a.group().clone(), q.clone(), images)?;
    let kernel = action.kernel()?;
    Ok(QuotientAction { graph: q, projection: proj, action, kernel })
}
