//! Screen transition graphs: crawling, storage and shortest paths.

mod crawl;
mod graph;
mod path;
pub mod url;

pub use crawl::{crawl, CrawlError, CrawlFailure, CrawlLimits, CrawlReport};
pub use graph::{
    check_version, Affordance, AffordanceKind, GraphError, NavEdge, NodeId, PageNode, TransitionGraph,
    GRAPH_SCHEMA_VERSION,
};
pub use path::{path_weight, shortest_path, PathError};
