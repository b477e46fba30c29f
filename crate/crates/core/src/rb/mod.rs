//! Reduced basis spaces: POD, residual estimators and the greedy.

mod greedy;
mod pod;
mod problem;
mod space;

pub use greedy::{greedy, greedy_theta, GreedyOptions, GreedyStop, GreedyTrace};
pub use pod::{pod, pod_size, EuclideanFactor, MetricFactor, PodResult};
pub use problem::AffineProblem;
pub use space::{OnlineSolution, ReducedSpace, RieszTable, SpaceBuilder};
