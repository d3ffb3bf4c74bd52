//! Cost formulas for hybrid traversal, pattern matching and cross-model
//! joins. Costs are in abstract units of `cpu` (one function call or
//! predicate evaluation) and `io` (one record read from storage).

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostConstants {
    pub io: f64,
    pub cpu: f64,
    /// Records per block.
    pub block: f64,
    /// Buffer pool capacity in records.
    pub buffer: f64,
}

impl Default for CostConstants {
    fn default() -> Self {
        CostConstants {
            io: 100.0,
            cpu: 1.0,
            block: 100.0,
            buffer: 1e6,
        }
    }
}

impl CostConstants {
    pub fn validate(&self) -> crate::Result<()> {
        for (name, v) in [("io", self.io), ("cpu", self.cpu), ("block", self.block), ("buffer", self.buffer)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::schema(format!("cost constant {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// The four operand combinations of a hybrid traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraversalCase {
    /// V×I: vertex records to nids via nidMap.
    VertexToNid,
    /// I×V: nids to vertex records via vertexMap and a tid fetch.
    NidToVertex,
    /// I×I: source nids to adjacent nids.
    NidToNid,
    /// I×E: source nids to incident edge records.
    NidToEdge,
}

impl fmt::Display for TraversalCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraversalCase::VertexToNid => "V×I",
            TraversalCase::NidToVertex => "I×V",
            TraversalCase::NidToNid => "I×I",
            TraversalCase::NidToEdge => "I×E",
        })
    }
}

/// Cost of one traversal over `sources` first operands. `avg_degree` is
/// |E|/|V| and only matters for the adjacency cases.
pub fn cost_traverse(case: TraversalCase, sources: f64, avg_degree: f64, c: &CostConstants) -> f64 {
    match case {
        TraversalCase::VertexToNid => sources * c.cpu,
        TraversalCase::NidToVertex => sources * (c.cpu + c.io),
        TraversalCase::NidToNid => sources * avg_degree * c.cpu,
        TraversalCase::NidToEdge => sources * avg_degree * (2.0 * c.cpu + c.io),
    }
}

/// Pattern matching cost: attribute evaluation for pushed predicates,
/// traversal work, and post-filtering of deferred predicates.
///
/// `alpha`/`beta` count pushed vertex/edge predicates; `vertices`/`edges`
/// are the record counts each pushed predicate has to scan.
pub fn cost_match(
    alpha: f64,
    vertices: f64,
    beta: f64,
    edges: f64,
    traversal: f64,
    result_estimate: f64,
    c: &CostConstants,
) -> f64 {
    (alpha * vertices + beta * edges) * (c.io + c.cpu) + traversal + result_estimate * c.cpu
}

/// Where join operands live, which decides the I/O term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JoinPlacement {
    /// Both operands already resident (intermediate results).
    InMemory,
    /// Both operands must be read but fit in the buffer pool.
    BothFit,
    /// Only the left operand fits; the right one is re-read per left block.
    LeftFits,
}

impl fmt::Display for JoinPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JoinPlacement::InMemory => "in-memory",
            JoinPlacement::BothFit => "both-fit",
            JoinPlacement::LeftFits => "left-fits",
        })
    }
}

pub fn choose_placement(n_left: f64, n_right: f64, resident: bool, c: &CostConstants) -> JoinPlacement {
    if resident {
        JoinPlacement::InMemory
    } else if n_left + n_right <= c.buffer {
        JoinPlacement::BothFit
    } else {
        JoinPlacement::LeftFits
    }
}

fn join_io(n_left: f64, n_right: f64, placement: JoinPlacement, c: &CostConstants) -> f64 {
    match placement {
        JoinPlacement::InMemory => 0.0,
        JoinPlacement::BothFit => (n_left / c.block + n_right / c.block) * c.io,
        JoinPlacement::LeftFits => (n_left / c.block + n_left * n_right / c.block) * c.io,
    }
}

/// Nested-loop cross-model join cost.
pub fn cost_join(n_left: f64, n_right: f64, placement: JoinPlacement, c: &CostConstants) -> f64 {
    join_io(n_left, n_right, placement, c) + n_left * n_right * c.cpu
}

/// Single-equality joins run as hash joins: same I/O term, linear CPU term.
pub fn cost_hash_join(n_left: f64, n_right: f64, placement: JoinPlacement, c: &CostConstants) -> f64 {
    join_io(n_left, n_right, placement, c) + (n_left + n_right) * c.cpu
}

/// Estimated cost and output cardinality of a plan node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub cost: f64,
    pub rows: f64,
}

impl Estimate {
    pub fn new(cost: f64, rows: f64) -> Self {
        Estimate {
            cost: cost.max(0.0),
            rows: rows.max(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: CostConstants = CostConstants {
        io: 100.0,
        cpu: 1.0,
        block: 100.0,
        buffer: 1e6,
    };

    #[test]
    fn traversal_formulas() {
        assert_eq!(cost_traverse(TraversalCase::VertexToNid, 5.0, 0.0, &C), 5.0);
        assert_eq!(cost_traverse(TraversalCase::NidToNid, 10.0, 100.0 / 20.0, &C), 50.0);
        assert_eq!(cost_traverse(TraversalCase::NidToEdge, 2.0, 3.0, &C), 612.0);
        assert_eq!(cost_traverse(TraversalCase::NidToVertex, 2.0, 3.0, &C), 202.0);
    }

    #[test]
    fn match_formula() {
        assert_eq!(cost_match(0.0, 10.0, 0.0, 50.0, 123.0, 0.0, &C), 123.0);
        assert_eq!(cost_match(1.0, 10.0, 0.0, 50.0, 0.0, 0.0, &C), 1010.0);
        assert_eq!(cost_match(0.0, 10.0, 0.0, 50.0, 0.0, 7.0, &C), 7.0);
    }

    #[test]
    fn join_formulas() {
        assert_eq!(cost_join(3.0, 4.0, JoinPlacement::InMemory, &C), 12.0);
        let both = cost_join(3.0, 4.0, JoinPlacement::BothFit, &C);
        assert!((both - (12.0 + (0.03 + 0.04) * 100.0)).abs() < 1e-9);
        let c = CostConstants { block: 5.0, ..C };
        assert!((cost_join(2.0, 10.0, JoinPlacement::LeftFits, &c) - 460.0).abs() < 1e-9);
    }

    #[test]
    fn placement_by_buffer() {
        let c = CostConstants { buffer: 10.0, ..C };
        assert_eq!(choose_placement(3.0, 4.0, true, &c), JoinPlacement::InMemory);
        assert_eq!(choose_placement(3.0, 4.0, false, &c), JoinPlacement::BothFit);
        assert_eq!(choose_placement(3.0, 40.0, false, &c), JoinPlacement::LeftFits);
    }
}
