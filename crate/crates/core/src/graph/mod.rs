//! Graph operators over the topology store: hybrid traversal, pattern
//! planning and matching, a join-based matcher and shortest paths.

pub mod emulate;
pub mod path;
pub mod pattern;
pub mod traverse;

pub use emulate::match_by_joins;
pub use path::shortest_path;
pub use pattern::{
    estimate_plan, match_pattern, plan_pattern, Element, EdgeOrientation, GraphRelation, MatchPlan, MatchRow, MatchStats,
    Pattern, PatternEdge, PatternVertex, PlanOptions, PredicateClass, Restrictions, Step, TraversalOrder,
};
pub use traverse::{hybrid_traverse, Item, OperandSet, TraversalQueue};
