//! Planning over p-graphs with stipulations on what an observer may infer.

pub mod cli;
pub mod closure;
pub mod dot;
pub mod graph;
pub mod labelmap;
pub mod observer;
pub mod ops;
pub mod planning;
pub mod scenario;
pub mod stipulation;

pub use graph::{Execution, Kind, Label, PGraph, VertexId};
