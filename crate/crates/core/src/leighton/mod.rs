//! Degree refinement, common finite covers and the gluing of hat covers.

use thiserror::Error;

use crate::aut::AutError;
use crate::gos::GosError;
use crate::graph::{GraphError, VertexId};
use crate::group::GroupError;

mod cover;
mod gos_cover;
mod hat;
mod oracle;
mod refine;

pub use cover::{common_cover_graphs, verify_common_cover, CommonCover, MAX_COVER_VERTICES};
pub use gos_cover::{common_cover_gos, gos_decoration, GosCommonCover, GosDecoration};
pub use hat::{
    all_subgroups, assemble_hat_ball, characteristic_core, check_hat_conditions, verify_and_glue_hat, BallCheck,
    HatBall, HatClause, HatConditionReport, HatCoverData, HatEdge, HatEdgePiece, HatGluing, HatVertex,
    HatVertexPiece, HatViolation,
};
pub use oracle::{brute_force_common_cover, find_covering, ORACLE_CANDIDATE_CAP};
pub use refine::{degree_refinement, refinement_preserved, RefinementProfile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LeightonError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Aut(#[from] AutError),
    #[error(transparent)]
    Gos(#[from] GosError),
    #[error("graph is not connected")]
    NotConnected,
    #[error("NoCommonCover: {0}")]
    NoCommonCover(String),
    #[error("search bound exceeded: {0}")]
    SearchBoundExceeded(String),
    #[error("AmbiguousLocalSymmetry: the star of vertex {vertex} in input {input} has a nontrivial automorphism")]
    AmbiguousLocalSymmetry { input: usize, vertex: VertexId },
    #[error("invalid hat cover data: {0}")]
    InvalidHatData(String),
    #[error("NotFree: {group} does not act freely on the space of {vertex}")]
    NotFree { vertex: String, group: &'static str },
    #[error("VertexSpaceCommonCovers fails at {0}")]
    CommonCoverViolated(String),
    #[error("NotNormal: Q̂ is not normal in Q at {0}")]
    NotNormal(String),
    #[error("GluingMismatch at edge {0}")]
    GluingMismatch(String),
}
