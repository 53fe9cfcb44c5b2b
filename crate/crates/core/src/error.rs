use thiserror::Error;

use crate::graph::{Label, VertexId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid token {0:?}: must be non-empty and contain no whitespace")]
    InvalidToken(String),

    #[error("duplicate vertex {0}")]
    DuplicateVertex(VertexId),

    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(VertexId, VertexId),

    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),

    #[error("label {0} is not in the hierarchy")]
    LabelNotInHierarchy(Label),

    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),

    #[error("invalid mapping: {0}")]
    InvalidMapping(String),

    #[error("component is empty")]
    EmptyComponent,

    #[error("component is not connected")]
    Disconnected,

    #[error("component has {vertices} vertices, above the cap of {cap}")]
    ComponentTooLarge { vertices: usize, cap: usize },

    #[error("canonical code search exceeded {0} partial states")]
    SearchBudgetExceeded(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("graph has {vertices} vertices, fewer than k = {k}")]
    GraphSmallerThanK { vertices: usize, k: usize },

    #[error("graph has {vertices} vertices, above the automorphism search cap of {cap}")]
    GraphTooLarge { vertices: usize, cap: usize },

    #[error("partition does not cover vertex {0}")]
    PartitionDoesNotCover(VertexId),

    #[error("partition is not a valid cover: {0}")]
    InvalidPartition(String),

    #[error("expected a {expected} partition, got {found}")]
    PartitionKindMismatch { expected: String, found: String },

    #[error("relation between classes {0} and {1} is not uniform")]
    InconsistentReduction(usize, usize),

    #[error("l = {required} is unsatisfiable: only {available} distinct sensitive values exist")]
    Unsatisfiable { required: usize, available: usize },

    #[error("unknown party {0}")]
    UnknownParty(String),

    #[error("malformed contribution: {0}")]
    MalformedContribution(String),

    #[error("node {node} has conflicting values for attribute {key}")]
    ConflictingAttribute { node: VertexId, key: String },

    #[error("node {node} is missing attribute {key}")]
    MissingAttribute { node: VertexId, key: String },

    #[error("query refused: {0}")]
    QueryRefused(String),

    #[error("wrong adversary knowledge: expected {expected}")]
    WrongKnowledgeKind { expected: &'static str },

    #[error("knowledge does not locate any class")]
    ClassNotFound,

    #[error("truncation must keep 8, 16 or 24 bits, got {0}")]
    InvalidTruncation(u8),

    #[error("invalid key: {0}")]
    InvalidKey(String),

    #[error("invalid address {0:?}")]
    InvalidAddress(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("serialization: {0}")]
    Serialization(String),
}
