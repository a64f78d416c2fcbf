//! Center-level election forensics.
//!
//! The crate works on voting-center records (geography, channel, petition
//! signatures and per-event tallies) and provides:
//!
//! * [`ingest`]: the data model, CSV loading, event joins, signature matching
//!   and declarative stratification.
//! * [`metrics`]: per-center ratios `k` (sí votes per signature), `s`
//!   (signatures per vote), `k_max = 1/s` and opposition-share deltas.
//! * [`correlation`]: Pearson machinery, channel × `s` correlation grids,
//!   moving-window correlation series, per-geography aggregates and `r★`.
//! * [`significance`]: two-sample Kolmogorov–Smirnov, permutation test for
//!   `r★`, subsample-mean Monte Carlo, skewness and normal fitting.
//! * [`audit`]: hot/cold audit representativeness, stem-and-leaf rendering,
//!   in/out county comparisons and registry-growth regression.
//! * [`synth`]: honest and forced-linear synthetic elections plus detector
//!   power estimation.
//!
//! Numerical primitives in [`stats`] and the ratio/correlation records are
//! generic over the floating-point type through [`Scalar`]; the `*64`
//! aliases below fix them to `f64`, which is what the dataset-level pipeline
//! and the CLI use.

// `!(x > 0.0)` is used on purpose so NaN falls on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod correlation;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod significance;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use ingest::{CenterId, CenterRecord, Channel, Dataset, EventId, EventTally, GeoLevel, GeoPath, Predicate};
pub use rng::RngSpec;
pub use scalar::Scalar;
pub use significance::TestResult;

pub type CenterMetrics64 = metrics::CenterMetrics<f64>;
pub type CenterMetrics32 = metrics::CenterMetrics<f32>;
pub type MetricsTable64 = metrics::MetricsTable<f64>;
pub type WindowSeries64 = correlation::WindowSeries<f64>;
pub type WindowSeries32 = correlation::WindowSeries<f32>;
pub type GeoAggregate64 = correlation::GeoAggregate<f64>;
pub type GeoAggregate32 = correlation::GeoAggregate<f32>;
pub type Table1Grid64 = correlation::Table1<f64>;
pub type MedianSplit64 = correlation::MedianSplit<f64>;
pub type OlsFit64 = stats::OlsFit<f64>;
pub type NormalFit64 = stats::NormalFit<f64>;
pub type Ecdf64 = stats::Ecdf<f64>;
pub type Histogram64 = stats::Histogram<f64>;
