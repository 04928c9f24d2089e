//! Dataflow schedule modeling and search for CNN convolution loop-nests on a
//! two-level memory hierarchy with an application-managed local buffer.

pub mod baselines;
pub mod case_study;
pub mod error;
pub mod layer;
pub mod optimizer;
pub mod oracle;
pub mod report;
pub mod schedule;
pub mod space;

pub use error::{Error, Result};
pub use layer::{builtin_suite, parse_layer_suite, LayerShape, LayerSuite, Precisions};
pub use optimizer::{Model, SearchConfig, SearchResult};
pub use schedule::{ideal_traffic, Array, Axis, BufferingAssignment, Schedule, Tiles, TrafficReport};
