//! Anonymization of labeled social networks: neighborhood k-anonymity,
//! l-diversity over equivalence classes, collaborative merging across
//! parties, attack simulation and IPv4 address anonymization.

pub mod addr;
pub mod adversary;
pub mod collab;
pub mod dfs_code;
pub mod error;
pub mod generate;
pub mod graph;
pub mod hierarchy;
pub mod kanon;
pub mod ldiv;
pub mod naive;
pub mod neighborhood;
pub mod partition;

pub use addr::{AnonScheme, Ipv4Address, Token};
pub use adversary::{AdversaryKnowledge, AttackResult, UtilityMetrics};
pub use collab::{CollabNetwork, CollabStore, PartyId, PartyNetwork, Privacy, UserQuery};
pub use dfs_code::DfsCode;
pub use error::{Error, Result};
pub use graph::{Label, SensitiveValue, SocialNetwork, VertexId};
pub use hierarchy::LabelHierarchy;
pub use kanon::{AnonymizationReport, KAnonConfig};
pub use ldiv::{DiversityReport, LDivConfig};
pub use naive::{AnonymizationMapping, Pseudonym};
pub use neighborhood::{Neighborhood, NeighborhoodCode, Radius};
pub use partition::{EquivalencePartition, PartitionKind, ReductionNetwork};
