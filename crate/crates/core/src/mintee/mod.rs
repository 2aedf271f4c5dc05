//! The MINTEE sampler: a ladder of MINT chains with growing temperature and
//! shrinking batches, linked by equi-energy jumps.

mod ladder;
mod ring;
mod sampler;

pub use ladder::{build_ladder, LadderConfig};
pub use ring::{ring_index, EnergyRings, RingEntry, RingView};
pub use sampler::{
    chain_rng, default_energy_floor, ee_log_ratio, energy_estimate, pilot_min_energy, run_mintee, truncated_log_density,
    ChainStats, MinteeChain, MinteeRun,
};
