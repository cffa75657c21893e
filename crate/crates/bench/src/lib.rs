//! Shared fixtures for the benchmarks.

use mimo_ee::network::realize;
use mimo_ee::{ChannelRealization, NetworkConfig};

/// Default network with `users` per cell over `cells` cells, drawn from `seed`.
pub fn fixture(users: usize, cells: usize, seed: u64) -> (NetworkConfig, ChannelRealization) {
    let mut cfg = NetworkConfig::default().with_users(users);
    cfg.cell_count = cells;
    let (_, real) = realize(&cfg, seed).expect("default network is valid");
    (cfg, real)
}

/// First seed from `start` whose draw is feasible for `pipeline`.
pub fn feasible_fixture(
    pipeline: mimo_ee::Pipeline,
    users: usize,
    cells: usize,
    start: u64,
) -> (NetworkConfig, ChannelRealization) {
    (start..start + 50)
        .map(|s| fixture(users, cells, s))
        .find(|(cfg, real)| pipeline.run(real, cfg).is_feasible())
        .expect("a feasible draw within 50 seeds")
}
