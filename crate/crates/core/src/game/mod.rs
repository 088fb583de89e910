//! Finite potential games stored as dense tensors.
//!
//! A joint action `a = (a_0, ..., a_{N-1})` maps to the flat index
//! `sum_i a_i * |A|^(N-1-i)`: row-major order with agent 0 on the
//! slowest-varying axis and agent `N-1` contiguous.

mod generate;
mod io;

pub use generate::{
    make_general_potential, make_general_potential_capped, make_identical_interest,
    make_identical_interest_capped,
};
pub use io::{
    decode_game, decode_game_capped, encode_game, read_game, summary, write_game, GAME_FORMAT_VERSION,
    GAME_MAGIC,
};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::policy::JointPolicy;

/// Default limit on `|A|^N`.
pub const DEFAULT_MAX_ENTRIES: usize = 1 << 24;

/// Generator that produced a game. Stored in the serialized header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameKind {
    IdenticalInterest,
    GeneralPotential,
    Custom,
}

impl GameKind {
    pub fn tag(self) -> u8 {
        match self {
            GameKind::IdenticalInterest => 0,
            GameKind::GeneralPotential => 1,
            GameKind::Custom => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(GameKind::IdenticalInterest),
            1 => Some(GameKind::GeneralPotential),
            2 => Some(GameKind::Custom),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GameKind::IdenticalInterest => "identical",
            GameKind::GeneralPotential => "general",
            GameKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone)]
enum Utilities {
    /// Every agent's utility equals the potential tensor.
    Shared,
    PerAgent(Vec<Arc<[f64]>>),
}

/// N-agent game over a shared action set with a dense potential tensor and
/// one dense utility tensor per agent.
#[derive(Debug, Clone)]
pub struct PotentialGame {
    num_agents: usize,
    num_actions: usize,
    potential: Arc<[f64]>,
    utilities: Utilities,
    phi_max: f64,
    seed: u64,
    kind: GameKind,
}

/// Number of dense entries `|A|^N`, or a capacity error.
pub fn dense_entries(num_agents: usize, num_actions: usize, cap: usize) -> Result<usize> {
    if num_agents == 0 || num_actions == 0 {
        return Err(Error::InvalidParameter(format!(
            "games need at least one agent and one action (got N = {num_agents}, |A| = {num_actions})"
        )));
    }
    let mut entries: u128 = 1;
    for _ in 0..num_agents {
        entries = entries.saturating_mul(num_actions as u128);
        if entries > cap as u128 {
            break;
        }
    }
    if entries > cap as u128 {
        // Report the exact count when it fits.
        let exact = (num_actions as u128).checked_pow(num_agents as u32).unwrap_or(u128::MAX);
        return Err(Error::Capacity {
            num_agents,
            num_actions,
            entries: exact,
            cap,
        });
    }
    Ok(entries as usize)
}

impl PotentialGame {
    /// Builds a game from explicit tensors. `utilities` must hold `N` tensors,
    /// or be empty to declare an identical-interest game (`u_i = Φ`).
    pub fn from_tensors(
        num_agents: usize,
        num_actions: usize,
        potential: Vec<f64>,
        utilities: Vec<Vec<f64>>,
        phi_max: f64,
    ) -> Result<Self> {
        Self::assemble(
            num_agents,
            num_actions,
            potential,
            utilities,
            phi_max,
            0,
            GameKind::Custom,
            DEFAULT_MAX_ENTRIES,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        num_agents: usize,
        num_actions: usize,
        potential: Vec<f64>,
        utilities: Vec<Vec<f64>>,
        phi_max: f64,
        seed: u64,
        kind: GameKind,
        cap: usize,
    ) -> Result<Self> {
        let entries = dense_entries(num_agents, num_actions, cap)?;
        if potential.len() != entries {
            return Err(Error::DimensionMismatch(format!(
                "potential has {} entries, expected {entries}",
                potential.len()
            )));
        }
        if !(phi_max.is_finite() && phi_max >= 0.0) {
            return Err(Error::InvalidParameter(format!("phi_max must be finite and >= 0, got {phi_max}")));
        }
        if let Some((idx, v)) = potential
            .iter()
            .enumerate()
            .find(|(_, &v)| !(0.0..=phi_max).contains(&v))
        {
            return Err(Error::InvalidParameter(format!(
                "potential entry {idx} = {v} outside [0, {phi_max}]"
            )));
        }
        let potential: Arc<[f64]> = potential.into();
        let utilities = if utilities.is_empty() {
            if potential.iter().any(|&v| v > 1.0) {
                return Err(Error::InvalidParameter(
                    "identical-interest utilities must lie in [0, 1]".into(),
                ));
            }
            Utilities::Shared
        } else {
            if utilities.len() != num_agents {
                return Err(Error::DimensionMismatch(format!(
                    "{} utility tensors for {num_agents} agents",
                    utilities.len()
                )));
            }
            for (i, u) in utilities.iter().enumerate() {
                if u.len() != entries {
                    return Err(Error::DimensionMismatch(format!(
                        "utility tensor {i} has {} entries, expected {entries}",
                        u.len()
                    )));
                }
                if let Some((idx, v)) = u.iter().enumerate().find(|(_, &v)| !(0.0..=1.0).contains(&v)) {
                    return Err(Error::InvalidParameter(format!(
                        "utility u_{i} entry {idx} = {v} outside [0, 1]"
                    )));
                }
            }
            if utilities.iter().all(|u| u[..] == potential[..]) {
                Utilities::Shared
            } else {
                Utilities::PerAgent(utilities.into_iter().map(Arc::from).collect())
            }
        };
        Ok(Self {
            num_agents,
            num_actions,
            potential,
            utilities,
            phi_max,
            seed,
            kind,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_entries(&self) -> usize {
        self.potential.len()
    }

    pub fn phi_max(&self) -> f64 {
        self.phi_max
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn utility(&self, agent: usize) -> &[f64] {
        assert!(agent < self.num_agents, "agent {agent} out of range");
        match &self.utilities {
            Utilities::Shared => &self.potential,
            Utilities::PerAgent(us) => &us[agent],
        }
    }

    /// True when every agent's utility tensor is the potential itself.
    pub fn is_identical_interest(&self) -> bool {
        matches!(self.utilities, Utilities::Shared)
    }

    /// Stride of agent `agent`'s axis in the flat layout.
    pub fn stride(&self, agent: usize) -> usize {
        self.num_actions.pow((self.num_agents - 1 - agent) as u32)
    }

    pub fn flat_index(&self, actions: &[usize]) -> usize {
        debug_assert_eq!(actions.len(), self.num_agents);
        actions
            .iter()
            .fold(0, |acc, &a| acc * self.num_actions + a)
    }

    pub fn joint_action(&self, mut flat: usize) -> Vec<usize> {
        let mut actions = vec![0; self.num_agents];
        for slot in actions.iter_mut().rev() {
            *slot = flat % self.num_actions;
            flat /= self.num_actions;
        }
        actions
    }

    pub(crate) fn check_policy(&self, policy: &JointPolicy) -> Result<()> {
        if policy.num_agents() != self.num_agents || policy.num_actions() != self.num_actions {
            return Err(Error::DimensionMismatch(format!(
                "policy is {}x{}, game is {}x{}",
                policy.num_agents(),
                policy.num_actions(),
                self.num_agents,
                self.num_actions
            )));
        }
        Ok(())
    }

    /// Bases (flat indices with `a_agent = 0`) of every fiber along `agent`'s axis,
    /// in row-major order of the opponent profile.
    pub(crate) fn fiber_bases(&self, agent: usize) -> impl Iterator<Item = usize> + '_ {
        let stride = self.stride(agent);
        let block = stride * self.num_actions;
        let outer = self.num_entries() / block;
        (0..outer).flat_map(move |o| (0..stride).map(move |inner| o * block + inner))
    }
}

/// First unilateral deviation that breaks the potential identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialViolation {
    pub agent: usize,
    pub action: usize,
    pub alt_action: usize,
    /// Opponents' actions in agent order with `agent` removed.
    pub opponents: Vec<usize>,
    /// `|(u_i(a, a_-i) - u_i(a', a_-i)) - (Φ(a, a_-i) - Φ(a', a_-i))|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCheck {
    pub holds: bool,
    pub max_residual: f64,
    pub first_violation: Option<PotentialViolation>,
}

/// Scans every `(i, a_i, a_i', a_-i)` for the unilateral-deviation identity.
///
/// For a fixed `(i, a_-i)` the worst pair maximizes `d(a) - d(a')` with
/// `d = u_i - Φ` along the fiber, so the scan is linear in the tensor size.
pub fn check_potential_property(game: &PotentialGame, tol: f64) -> PotentialCheck {
    let mut max_residual = 0.0_f64;
    let mut first_violation = None;
    let n_act = game.num_actions();
    for agent in 0..game.num_agents() {
        let stride = game.stride(agent);
        let u = game.utility(agent);
        let phi = game.potential();
        for base in game.fiber_bases(agent) {
            let (mut lo, mut hi) = ((0, f64::INFINITY), (0, f64::NEG_INFINITY));
            for a in 0..n_act {
                let idx = base + a * stride;
                let d = u[idx] - phi[idx];
                if d < lo.1 {
                    lo = (a, d);
                }
                if d > hi.1 {
                    hi = (a, d);
                }
            }
            let residual = hi.1 - lo.1;
            max_residual = max_residual.max(residual);
            if residual > tol && first_violation.is_none() {
                let mut opponents = game.joint_action(base);
                opponents.remove(agent);
                first_violation = Some(PotentialViolation {
                    agent,
                    action: hi.0,
                    alt_action: lo.0,
                    opponents,
                    residual,
                });
            }
        }
    }
    PotentialCheck {
        holds: first_violation.is_none(),
        max_residual,
        first_violation,
    }
}

/// `Σ_a T(a) Π_i π_i(a_i)` by contracting the last axis first.
pub(crate) fn contract(tensor: &[f64], policy: &JointPolicy) -> f64 {
    let n_act = policy.num_actions();
    let mut current: Vec<f64> = Vec::new();
    let mut src: &[f64] = tensor;
    for agent in (0..policy.num_agents()).rev() {
        let p = policy.prob_row(agent);
        current = src
            .chunks_exact(n_act)
            .map(|row| row.iter().zip(&p).map(|(t, q)| t * q).sum())
            .collect();
        src = &current;
    }
    debug_assert_eq!(current.len(), 1);
    current.first().copied().unwrap_or(0.0)
}

/// `Φ(π) = E_{a ~ π} Φ(a)`.
pub fn expected_potential(game: &PotentialGame, policy: &JointPolicy) -> Result<f64> {
    game.check_policy(policy)?;
    Ok(contract(game.potential(), policy))
}

/// `u_i(π) = E_{a ~ π} u_i(a)`.
pub fn expected_utility(game: &PotentialGame, agent: usize, policy: &JointPolicy) -> Result<f64> {
    game.check_policy(policy)?;
    if agent >= game.num_agents() {
        return Err(Error::InvalidParameter(format!(
            "agent {agent} out of range for {} agents",
            game.num_agents()
        )));
    }
    Ok(contract(game.utility(agent), policy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_custom() -> PotentialGame {
        // 2x2 coordination game with u_i = Φ.
        PotentialGame::from_tensors(2, 2, vec![1.0, 0.0, 0.0, 0.5], vec![], 1.0).unwrap()
    }

    #[test]
    fn flat_index_round_trip() {
        let g = make_identical_interest(3, 4, 1).unwrap();
        for flat in 0..g.num_entries() {
            assert_eq!(g.flat_index(&g.joint_action(flat)), flat);
        }
        assert_eq!(g.flat_index(&[1, 0, 0]), 16);
        assert_eq!(g.stride(0), 16);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn capacity_error_names_sizes() {
        let err = dense_entries(25, 20, DEFAULT_MAX_ENTRIES).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("16777216"), "{msg}");
        assert!(msg.contains("20^25"), "{msg}");
        assert!(matches!(err, Error::Capacity { .. }));
        assert!(make_identical_interest_capped(2, 5, 0, 24).is_err());
        assert!(make_identical_interest_capped(2, 5, 0, 25).is_ok());
    }

    #[test]
    fn rejects_out_of_range_entries() {
        assert!(PotentialGame::from_tensors(1, 2, vec![0.5, 1.5], vec![], 1.0).is_err());
        assert!(PotentialGame::from_tensors(1, 2, vec![0.5, 0.5], vec![vec![0.5, 1.2]], 1.0).is_err());
        assert!(PotentialGame::from_tensors(2, 2, vec![0.5; 3], vec![], 1.0).is_err());
    }

    #[test]
    fn point_mass_policy_picks_the_cell() {
        let g = tiny_custom();
        let pol = JointPolicy::from_probs(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!((expected_potential(&g, &pol).unwrap() - 0.5).abs() < 1e-12);
        assert!((expected_utility(&g, 1, &pol).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_policy_averages_the_tensor() {
        let g = make_identical_interest(3, 3, 11).unwrap();
        let pol = JointPolicy::uniform(3, 3);
        let mean = g.potential().iter().sum::<f64>() / 27.0;
        assert!((expected_potential(&g, &pol).unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_hand_sum() {
        let g = PotentialGame::from_tensors(2, 2, vec![0.1, 0.7, 0.4, 0.9], vec![], 1.0).unwrap();
        let pol = JointPolicy::from_probs(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let hand = 0.1 * 0.3 * 0.6 + 0.7 * 0.3 * 0.4 + 0.4 * 0.7 * 0.6 + 0.9 * 0.7 * 0.4;
        assert!((expected_potential(&g, &pol).unwrap() - hand).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = tiny_custom();
        let pol = JointPolicy::uniform(3, 2);
        assert!(matches!(expected_potential(&g, &pol), Err(Error::DimensionMismatch(_))));
        assert!(expected_utility(&g, 5, &JointPolicy::uniform(2, 2)).is_err());
    }

    #[test]
    fn perturbed_utility_breaks_the_identity() {
        let g = make_identical_interest(2, 3, 4).unwrap();
        let phi = g.potential().to_vec();
        let mut u0 = phi.clone();
        // keep the entry inside [0, 1]
        u0[4] = if u0[4] > 0.5 { u0[4] - 1e-3 } else { u0[4] + 1e-3 };
        let bad = PotentialGame::from_tensors(2, 3, phi.clone(), vec![u0, phi], 1.0).unwrap();
        let check = check_potential_property(&bad, 1e-12);
        assert!(!check.holds);
        let v = check.first_violation.unwrap();
        assert!((v.residual - 1e-3).abs() < 1e-9, "{v:?}");
        assert!(check_potential_property(&g, 1e-12).holds);
    }
}
