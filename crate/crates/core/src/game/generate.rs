use super::{dense_entries, GameKind, PotentialGame, DEFAULT_MAX_ENTRIES};
use crate::error::Result;
use crate::rng::SplitMix64;

/// Identical-interest game with `Φ(a) ~ Beta(1/2, 1/2)` i.i.d. and `u_i = Φ`.
///
/// Draws are taken in flat-index order from a SplitMix64 stream seeded with
/// `seed`. `phi_max = 1`, the supremum of the Beta support.
pub fn make_identical_interest(num_agents: usize, num_actions: usize, seed: u64) -> Result<PotentialGame> {
    make_identical_interest_capped(num_agents, num_actions, seed, DEFAULT_MAX_ENTRIES)
}

pub fn make_identical_interest_capped(
    num_agents: usize,
    num_actions: usize,
    seed: u64,
    cap: usize,
) -> Result<PotentialGame> {
    let entries = dense_entries(num_agents, num_actions, cap)?;
    let mut rng = SplitMix64::new(seed);
    let potential: Vec<f64> = (0..entries).map(|_| rng.next_arcsine()).collect();
    PotentialGame::assemble(
        num_agents,
        num_actions,
        potential,
        Vec::new(),
        1.0,
        seed,
        GameKind::IdenticalInterest,
        cap,
    )
}

/// Potential game with agent-specific dummy terms.
///
/// With `Φ0(a) ~ Beta(1/2, 1/2)` and `c_i(a_-i) ~ Uniform[0, 1/2)`:
/// `u_i(a) = (Φ0(a) + c_i(a_-i)) / (3/2)`, stored potential `Φ0 / (3/2)`,
/// `phi_max = 2/3`. The stream draws all of `Φ0` in flat order, then
/// `c_0, ..., c_{N-1}`, each over opponent profiles in row-major order.
pub fn make_general_potential(num_agents: usize, num_actions: usize, seed: u64) -> Result<PotentialGame> {
    make_general_potential_capped(num_agents, num_actions, seed, DEFAULT_MAX_ENTRIES)
}

pub fn make_general_potential_capped(
    num_agents: usize,
    num_actions: usize,
    seed: u64,
    cap: usize,
) -> Result<PotentialGame> {
    const SCALE: f64 = 1.5;
    let entries = dense_entries(num_agents, num_actions, cap)?;
    let mut rng = SplitMix64::new(seed);
    let raw: Vec<f64> = (0..entries).map(|_| rng.next_arcsine()).collect();
    let opponent_profiles = entries / num_actions;

    let mut utilities = Vec::with_capacity(num_agents);
    for agent in 0..num_agents {
        let dummy: Vec<f64> = (0..opponent_profiles).map(|_| 0.5 * rng.next_open01()).collect();
        let stride = num_actions.pow((num_agents - 1 - agent) as u32);
        let u: Vec<f64> = (0..entries)
            .map(|flat| {
                // drop agent's digit: (high part) * stride + (low part)
                let high = flat / (stride * num_actions);
                let low = flat % stride;
                let c = dummy[high * stride + low];
                (raw[flat] + c) / SCALE
            })
            .collect();
        utilities.push(u);
    }
    let potential = raw.into_iter().map(|v| v / SCALE).collect();
    PotentialGame::assemble(
        num_agents,
        num_actions,
        potential,
        utilities,
        1.0 / SCALE,
        seed,
        GameKind::GeneralPotential,
        cap,
    )
}
