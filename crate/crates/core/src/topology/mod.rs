//! Fixed points, orbits, and the decomposition of the periodic region into
//! families indexed by psi.

pub mod classify;
pub mod contour;
pub mod fixed_points;
pub mod index_set;
pub mod orbit;

pub use classify::{aperiodic_measure, classify_cells, hypothesis_h, CellLabel, ClassificationGrid, HypothesisReport};
pub use contour::{contour_integral, contour_period, trace_level_curve, ContourOpts, LevelCurve};
pub use fixed_points::{find_fixed_points, CriticalKind, CriticalPoint, FixedPointScan};
pub use index_set::{build_index_set, Endpoint, EndpointSource, IndexSet, OrbitFamily};
pub use orbit::{trace_orbit, OrbitKind, OrbitTrace, TraceCaps};
