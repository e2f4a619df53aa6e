//! Synthetic Fog-RAN instances: BS layout, user drop, connectivity, and
//! per-user Zipf demand.

mod demand;
mod fgi;
mod topology;

pub use demand::{
    aggregate_popularity, zipf_preferences, BackhaulDelay, DemandModel, GammaSpec,
    PopularityAggregates,
};
pub use fgi::{load_instance, read_instance, save_instance, write_instance, FGI_VERSION};
pub use topology::{build_grid_topology, Layout, NetworkInstance, Point, TopologyParams};
