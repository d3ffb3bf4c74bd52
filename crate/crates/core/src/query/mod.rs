//! Query language front end, optimizer and executor.

pub mod ast;
pub mod join;
pub mod lexer;
pub mod logical;
pub mod optimizer;
pub mod parser;
pub mod physical;

pub use ast::{Analyze, AnalyzeOp, Query, SelectItem, Source, Statement};
pub use logical::{build_logical_plan, Gcdi, LogicalPlan};
pub use parser::{parse, parse_query};
