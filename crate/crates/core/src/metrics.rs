//! Marginalized utilities, best responses, equilibrium gaps and the
//! regularized potential.

use crate::error::{Error, Result};
use crate::game::{expected_potential, expected_utility, PotentialGame};
use crate::policy::{entropy, log_sum_exp, normalize_log_row, JointPolicy, PROB_FLOOR};

/// `r_i^π(a) = E_{a_-i ~ π_-i} u_i(a, a_-i)` for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalUtility {
    pub values: Vec<f64>,
}

impl MarginalUtility {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `⟨r, π_i⟩` for a log-probability row.
    pub fn inner(&self, log_p: &[f64]) -> f64 {
        self.values.iter().zip(log_p).map(|(r, l)| r * l.exp()).sum()
    }
}

/// Result of one pass over the tensors: `Φ(π)` and `r_i^π` for every agent.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub potential: f64,
    pub marginals: Vec<MarginalUtility>,
}

struct Level {
    phi: f64,
    /// Contracted utility of agents above this level (`j < k`).
    above: Vec<f64>,
    /// Leave-one-out vectors of agents at or below this level, `n * |A|` long.
    vecs: Vec<f64>,
}

struct SweepCtx<'a> {
    game: &'a PotentialGame,
    probs: Vec<Vec<f64>>,
    shared: bool,
}

impl SweepCtx<'_> {
    fn block(&self, k: usize, base: usize, levels: &mut [Level]) {
        let n = self.game.num_agents();
        let m = self.game.num_actions();
        let (out, rest) = levels.split_first_mut().unwrap();
        if k == n - 1 {
            let p = &self.probs[k];
            let row = &self.game.potential()[base..base + m];
            out.phi = dot(row, p);
            if !self.shared {
                for j in 0..k {
                    out.above[j] = dot(&self.game.utility(j)[base..base + m], p);
                }
            }
            out.vecs[k * m..(k + 1) * m].copy_from_slice(&self.game.utility(k)[base..base + m]);
            return;
        }
        let stride = self.game.stride(k);
        out.phi = 0.0;
        out.above[..k].iter_mut().for_each(|v| *v = 0.0);
        out.vecs[k * m..].iter_mut().for_each(|v| *v = 0.0);
        for a in 0..m {
            self.block(k + 1, base + a * stride, rest);
            let child = &rest[0];
            let w = self.probs[k][a];
            out.phi += w * child.phi;
            if self.shared {
                out.vecs[k * m + a] = child.phi;
            } else {
                for j in 0..k {
                    out.above[j] += w * child.above[j];
                }
                out.vecs[k * m + a] = child.above[k];
            }
            for (o, c) in out.vecs[(k + 1) * m..].iter_mut().zip(&child.vecs[(k + 1) * m..]) {
                *o += w * c;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Probabilities below this are treated as zero inside the sweep. Their
/// contributions sit ~130 orders of magnitude below the rounding error of the
/// sums they enter, while multiplying them would produce subnormals, which
/// are slow on common hardware.
const SWEEP_FLUSH: f64 = 1.4916681462400413e-154;

fn flushed_probs(policy: &JointPolicy) -> Vec<Vec<f64>> {
    let mut probs = policy.probs();
    for p in probs.iter_mut().flatten() {
        if *p < SWEEP_FLUSH {
            *p = 0.0;
        }
    }
    probs
}

/// Computes `Φ(π)` and every `r_i^π` in one pass over the tensors.
///
/// The pass contracts axes recursively from the last agent to the first;
/// agent `k`'s marginal is read off at level `k` before its own probability
/// weights are applied, so each cell is visited once for all agents. The
/// summation tree is fixed by the layout, which makes the result independent
/// of how the outer loop is partitioned.
pub fn sweep(game: &PotentialGame, policy: &JointPolicy) -> Result<Sweep> {
    game.check_policy(policy)?;
    let n = game.num_agents();
    let m = game.num_actions();
    let ctx = SweepCtx {
        game,
        probs: flushed_probs(policy),
        shared: game.is_identical_interest(),
    };
    let mut levels: Vec<Level> = (0..n)
        .map(|_| Level {
            phi: 0.0,
            above: vec![0.0; n],
            vecs: vec![0.0; n * m],
        })
        .collect();
    ctx.block(0, 0, &mut levels);
    let top = &levels[0];
    Ok(Sweep {
        potential: top.phi,
        marginals: top
            .vecs
            .chunks_exact(m)
            .map(|c| MarginalUtility { values: c.to_vec() })
            .collect(),
    })
}

pub fn marginalized_utility(game: &PotentialGame, agent: usize, policy: &JointPolicy) -> Result<MarginalUtility> {
    if agent >= game.num_agents() {
        return Err(Error::InvalidParameter(format!("agent {agent} out of range")));
    }
    Ok(sweep(game, policy)?.marginals.swap_remove(agent))
}

pub fn marginalized_utilities(game: &PotentialGame, policy: &JointPolicy) -> Result<Vec<MarginalUtility>> {
    Ok(sweep(game, policy)?.marginals)
}

/// Log-probabilities of the entropy-regularized best response
/// `π*(a) ∝ exp(r(a)/τ)`. For `τ = 0` this is a point mass on the first
/// maximizer, with the other entries at the probability floor.
pub fn best_response_log(r: &[f64], tau: f64) -> Vec<f64> {
    assert!(tau >= 0.0, "tau must be nonnegative");
    if tau == 0.0 {
        let best = argmax(r);
        let mut l = vec![PROB_FLOOR.ln(); r.len()];
        l[best] = 0.0;
        normalize_log_row(&mut l);
        return l;
    }
    let mut l: Vec<f64> = r.iter().map(|v| v / tau).collect();
    normalize_log_row(&mut l);
    l
}

/// Probabilities of [`best_response_log`].
pub fn best_response(r: &[f64], tau: f64) -> Vec<f64> {
    best_response_log(r, tau).into_iter().map(f64::exp).collect()
}

/// First index of the maximum.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// `u_{i,τ}(π) = u_i(π) + τ H(π_i)`.
pub fn regularized_utility(game: &PotentialGame, agent: usize, policy: &JointPolicy, tau: f64) -> Result<f64> {
    check_tau(tau, false)?;
    Ok(expected_utility(game, agent, policy)? + tau * entropy(policy.log_row(agent)))
}

/// `Φ_τ(π) = Φ(π) + τ Σ_i H(π_i)`.
pub fn regularized_potential(game: &PotentialGame, policy: &JointPolicy, tau: f64) -> Result<f64> {
    check_tau(tau, false)?;
    Ok(expected_potential(game, policy)? + tau * policy.total_entropy())
}

/// Agent's NE-gap term `max_a r(a) - ⟨r, π_i⟩`.
pub fn ne_gap_term(r: &MarginalUtility, log_p: &[f64]) -> f64 {
    (r.max() - r.inner(log_p)).max(0.0)
}

/// Agent's QRE-gap term `τ LSE(r/τ) - ⟨r, π_i⟩ - τ H(π_i)`, the regularized
/// utility of the best response minus the current one.
pub fn qre_gap_term(r: &MarginalUtility, log_p: &[f64], tau: f64) -> f64 {
    let scaled: Vec<f64> = r.values.iter().map(|v| v / tau).collect();
    (tau * log_sum_exp(&scaled) - r.inner(log_p) - tau * entropy(log_p)).max(0.0)
}

pub fn ne_gap(game: &PotentialGame, policy: &JointPolicy) -> Result<f64> {
    let s = sweep(game, policy)?;
    Ok(s.marginals
        .iter()
        .enumerate()
        .map(|(i, r)| ne_gap_term(r, policy.log_row(i)))
        .fold(0.0, f64::max))
}

pub fn qre_gap(game: &PotentialGame, policy: &JointPolicy, tau: f64) -> Result<f64> {
    check_tau(tau, true)?;
    let s = sweep(game, policy)?;
    Ok(s.marginals
        .iter()
        .enumerate()
        .map(|(i, r)| qre_gap_term(r, policy.log_row(i), tau))
        .fold(0.0, f64::max))
}

fn check_tau(tau: f64, strictly_positive: bool) -> Result<()> {
    let ok = tau.is_finite() && if strictly_positive { tau > 0.0 } else { tau >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "tau must be {} and finite, got {tau}",
            if strictly_positive { "> 0" } else { ">= 0" }
        )))
    }
}

/// Every metric at one iterate, derived from a single sweep.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub potential: f64,
    pub phi_tau: f64,
    pub entropies: Vec<f64>,
    pub ne_gap: f64,
    /// Regularized gap at `τ`; equals `ne_gap` when `τ = 0`.
    pub qre_gap: f64,
    pub marginals: Vec<MarginalUtility>,
}

pub fn evaluate(game: &PotentialGame, policy: &JointPolicy, tau: f64) -> Result<Evaluation> {
    check_tau(tau, false)?;
    let s = sweep(game, policy)?;
    let entropies: Vec<f64> = policy.log_rows().iter().map(|l| entropy(l)).collect();
    let mut ne = 0.0_f64;
    let mut qre = 0.0_f64;
    for (i, r) in s.marginals.iter().enumerate() {
        let l = policy.log_row(i);
        let ne_i = ne_gap_term(r, l);
        ne = ne.max(ne_i);
        qre = qre.max(if tau > 0.0 { qre_gap_term(r, l, tau) } else { ne_i });
    }
    Ok(Evaluation {
        potential: s.potential,
        phi_tau: s.potential + tau * entropies.iter().sum::<f64>(),
        entropies,
        ne_gap: ne,
        qre_gap: qre,
        marginals: s.marginals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{make_general_potential, make_identical_interest};
    use crate::policy::kl;
    use crate::rng::SplitMix64;

    pub(crate) fn random_policy(rng: &mut SplitMix64, n: usize, m: usize) -> JointPolicy {
        let rows = (0..n)
            .map(|_| (0..m).map(|_| 4.0 * rng.next_open01() - 2.0).collect())
            .collect();
        JointPolicy::from_log_weights(rows).unwrap()
    }

    #[test]
    fn point_mass_opponent_reads_the_slice() {
        let g = make_general_potential(2, 3, 8).unwrap();
        let pol = JointPolicy::from_probs(&[vec![1.0 / 3.0; 3], vec![0.0, 1.0, 0.0]]).unwrap();
        let r = marginalized_utility(&g, 0, &pol).unwrap();
        for a in 0..3 {
            assert!((r.values[a] - g.utility(0)[g.flat_index(&[a, 1])]).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_opponents_average_the_slice() {
        let g = make_general_potential(3, 2, 2).unwrap();
        let pol = JointPolicy::uniform(3, 2);
        let r = marginalized_utility(&g, 1, &pol).unwrap();
        for a in 0..2 {
            let mut sum = 0.0;
            for x in 0..2 {
                for z in 0..2 {
                    sum += g.utility(1)[g.flat_index(&[x, a, z])];
                }
            }
            assert!((r.values[a] - sum / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_potential_matches_contraction() {
        let mut rng = SplitMix64::new(3);
        for (n, m) in [(1, 4), (2, 3), (3, 3), (4, 2)] {
            let g = make_general_potential(n, m, 5).unwrap();
            let pol = random_policy(&mut rng, n, m);
            let s = sweep(&g, &pol).unwrap();
            assert!((s.potential - expected_potential(&g, &pol).unwrap()).abs() < 1e-14);
            for i in 0..n {
                let u = expected_utility(&g, i, &pol).unwrap();
                assert!((s.marginals[i].inner(pol.log_row(i)) - u).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn best_response_examples() {
        let br = best_response(&[0.3, 0.3, 0.3], 1.0);
        assert!(br.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        let br = best_response(&[1.0, 0.0], 1.0);
        let e = std::f64::consts::E;
        assert!((br[0] - e / (1.0 + e)).abs() < 1e-15);
        assert!((br[0] - 0.731_059).abs() < 1e-6 && (br[1] - 0.268_941).abs() < 1e-6);
        let br = best_response(&[0.2, 0.9, 0.9], 0.0);
        assert!((br[1] - 1.0).abs() < 1e-15);
        assert_eq!(argmax(&[0.2, 0.9, 0.9]), 1);
        assert!(br[0] < 1e-299 && br[2] < 1e-299);
    }

    #[test]
    fn regularized_utility_and_potential_examples() {
        let g = make_identical_interest(2, 4, 1).unwrap();
        let pol = JointPolicy::uniform(2, 4);
        let u = expected_utility(&g, 0, &pol).unwrap();
        let tau = 0.3;
        assert_eq!(regularized_utility(&g, 0, &pol, 0.0).unwrap(), u);
        assert!((regularized_utility(&g, 0, &pol, tau).unwrap() - (u + tau * 4f64.ln())).abs() < 1e-14);
        let phi = expected_potential(&g, &pol).unwrap();
        assert_eq!(regularized_potential(&g, &pol, 0.0).unwrap(), phi);
        assert!((regularized_potential(&g, &pol, tau).unwrap() - (phi + tau * 2.0 * 4f64.ln())).abs() < 1e-14);
        assert!(regularized_potential(&g, &pol, -1.0).is_err());
    }

    #[test]
    fn regularized_deviation_identity() {
        let mut rng = SplitMix64::new(77);
        for _ in 0..50 {
            let g = make_general_potential(3, 3, rng.next_u64()).unwrap();
            let pol = random_policy(&mut rng, 3, 3);
            let alt = random_policy(&mut rng, 3, 3);
            for i in 0..3 {
                let dev = pol.with_log_row(i, alt.log_row(i).to_vec());
                let tau = 0.2;
                let du = regularized_utility(&g, i, &pol, tau).unwrap() - regularized_utility(&g, i, &dev, tau).unwrap();
                let dp = regularized_potential(&g, &pol, tau).unwrap() - regularized_potential(&g, &dev, tau).unwrap();
                assert!((du - dp).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn qre_gap_requires_positive_tau() {
        let g = make_identical_interest(1, 2, 0).unwrap();
        assert!(qre_gap(&g, &JointPolicy::uniform(1, 2), 0.0).is_err());
    }

    #[test]
    fn qre_gap_vanishes_at_best_response_fixed_point() {
        // For N = 1 the best response does not move r, so it is a QRE.
        let g = make_identical_interest(1, 5, 9).unwrap();
        let tau = 0.05;
        let r = marginalized_utility(&g, 0, &JointPolicy::uniform(1, 5)).unwrap();
        let pol = JointPolicy::from_log_weights(vec![best_response_log(&r.values, tau)]).unwrap();
        assert!(qre_gap(&g, &pol, tau).unwrap() <= 1e-10);
    }

    #[test]
    fn qre_term_equals_scaled_kl_to_best_response() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..200 {
            let g = make_general_potential(2, 4, rng.next_u64()).unwrap();
            let pol = random_policy(&mut rng, 2, 4);
            let tau = 0.01 + rng.next_open01();
            let s = sweep(&g, &pol).unwrap();
            for i in 0..2 {
                let star = best_response_log(&s.marginals[i].values, tau);
                let term = qre_gap_term(&s.marginals[i], pol.log_row(i), tau);
                assert!((term - tau * kl(pol.log_row(i), &star)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ne_gap_zero_at_potential_maximizer() {
        let g = make_identical_interest(3, 4, 21).unwrap();
        let best = argmax(g.potential());
        let joint = g.joint_action(best);
        let rows: Vec<Vec<f64>> = joint
            .iter()
            .map(|&a| (0..4).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
            .collect();
        let pol = JointPolicy::from_probs(&rows).unwrap();
        assert!(ne_gap(&g, &pol).unwrap() <= 1e-12);
    }

    #[test]
    fn gaps_are_nonnegative_and_sandwiched() {
        let mut rng = SplitMix64::new(6);
        for _ in 0..200 {
            let g = make_general_potential(3, 3, rng.next_u64()).unwrap();
            let pol = random_policy(&mut rng, 3, 3);
            let tau = 1e-3 + rng.next_open01();
            let ne = ne_gap(&g, &pol).unwrap();
            let qre = qre_gap(&g, &pol, tau).unwrap();
            assert!(ne >= 0.0 && qre >= 0.0);
            assert!(ne <= qre + tau * 3f64.ln() + 1e-12);
        }
    }

    #[test]
    fn best_response_preserves_argmax() {
        let mut rng = SplitMix64::new(8);
        for _ in 0..100 {
            let r: Vec<f64> = (0..6).map(|_| rng.next_open01()).collect();
            for tau in [1e-3, 0.1, 1.0, 10.0] {
                assert_eq!(argmax(&best_response(&r, tau)), argmax(&r));
            }
        }
    }

    #[test]
    fn evaluate_agrees_with_standalone_metrics() {
        let mut rng = SplitMix64::new(10);
        let g = make_general_potential(3, 4, 2).unwrap();
        let pol = random_policy(&mut rng, 3, 4);
        let ev = evaluate(&g, &pol, 0.1).unwrap();
        assert!((ev.qre_gap - qre_gap(&g, &pol, 0.1).unwrap()).abs() < 1e-15);
        assert!((ev.ne_gap - ne_gap(&g, &pol).unwrap()).abs() < 1e-15);
        assert!((ev.phi_tau - regularized_potential(&g, &pol, 0.1).unwrap()).abs() < 1e-13);
        let ev0 = evaluate(&g, &pol, 0.0).unwrap();
        assert_eq!(ev0.qre_gap, ev0.ne_gap);
    }
}
