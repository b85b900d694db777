//! Monte Carlo laboratory for random interlacements on transient lattices.
//!
//! The crate is organized in four layers:
//!
//! * [`lattice`] — the graph layer: `Z^d` sites, adjacency, balls, boxes,
//!   boundaries, translations.
//! * [`potential`] — discrete potential theory: heat kernels, Green function,
//!   escape probabilities, equilibrium measure and capacity, all with
//!   truncation-error intervals, plus independent Monte Carlo oracles.
//! * [`interlace`] — exact sampling of the interlacement point process
//!   restricted to finite windows: Poisson counts, entrance/exit pairs,
//!   conditioned walks, random walk bridges, the structured decomposition
//!   and the plain trace sampler.
//! * [`vacancy`] — vacant-set geometry: component labeling, the bridge-free
//!   decomposition, connectivity checks, bridge rerouting, trifurcation
//!   census and Burton-Keane density diagnostics.
//!
//! The [`harness`] module holds the experiment runner, statistics helpers,
//! configuration and persistence used by the `rilab` binary.

pub mod harness;
pub mod interlace;
pub mod lattice;
pub mod potential;
pub mod vacancy;
