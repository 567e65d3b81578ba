//! Maximum likelihood estimation for the exponential random bipartite graph
//! model of affiliation networks, where the event and actor degree sequences
//! are the sufficient statistic.
//!
//! Event `i` carries parameter `α_i`, actor `j` carries `β_j`, and edges are
//! independent with `P(x_ij = 1) = e^{α_i+β_j} / (1 + e^{α_i+β_j})`. The last
//! actor is the reference, `β_n = 0`.
//!
//! ```
//! use bipbeta::{fit, infer, BipartiteGraph, FitConfig};
//!
//! let g = BipartiteGraph::from_rows(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 0]]).unwrap();
//! let result = fit(&g, &FitConfig::default()).unwrap();
//! assert!(result.converged);
//! let inference = infer(&result.theta_hat, 0.95).unwrap();
//! assert_eq!(inference.se_alpha.len(), 3);
//! ```

pub mod error;
pub mod experiments;
pub mod fisher_inverse;
pub mod graph;
pub mod inference;
pub mod io;
pub mod likelihood;
pub mod sampler;
pub mod solver;

pub use error::{Error, Result};
pub use fisher_inverse::{build_s, exact_inverse_oracle, inverse_approx_error, ApproxInverse};
pub use graph::{degrees, prune_zero_degree, BipartiteGraph, DegreeSequence, ParameterVector};
pub use inference::{confidence_interval, contrast_se, infer, plugin_covariance, Side};
pub use likelihood::{edge_probability, fisher_info, log_likelihood, score, FisherInfo};
pub use sampler::{make_scenario, sample_graph, LKind, Scenario};
pub use solver::{
    existence_precheck, fit, newton_step, preconditioned_newton_direction, Existence, FitConfig,
    FitResult, Init, Method,
};
