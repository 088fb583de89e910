//! Reference computations that share no code path with the production
//! sweep or the closed-form update: nested-loop enumeration, Fisher-form
//! natural gradient with an explicit pseudo-inverse, finite differences and
//! simplex grid search. Intended for tests at small scale.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::PotentialGame;
use crate::metrics::MarginalUtility;
use crate::policy::{JointPolicy, SoftmaxParams};

/// Largest tensor the enumeration oracles accept.
pub const ORACLE_MAX_ENTRIES: usize = 1 << 16;
pub const FISHER_MAX_AGENTS: usize = 3;
pub const FISHER_MAX_ACTIONS: usize = 16;
pub const PINV_CUTOFF: f64 = 1e-12;
pub const FD_STEP: f64 = 1e-6;

fn check_scale(game: &PotentialGame) -> Result<()> {
    if game.num_entries() > ORACLE_MAX_ENTRIES {
        return Err(Error::OracleScale(format!(
            "{} entries exceeds {ORACLE_MAX_ENTRIES}",
            game.num_entries()
        )));
    }
    Ok(())
}

fn check_dims(game: &PotentialGame, probs: &[Vec<f64>]) -> Result<()> {
    if probs.len() != game.num_agents() || probs.iter().any(|r| r.len() != game.num_actions()) {
        return Err(Error::DimensionMismatch("policy does not match game".into()));
    }
    Ok(())
}

/// `Π_{j ≠ skip} p_j(a_j)` for the joint action at `flat`.
fn weight(game: &PotentialGame, probs: &[Vec<f64>], flat: usize, skip: Option<usize>) -> f64 {
    game.joint_action(flat)
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .map(|(j, &a)| probs[j][a])
        .product()
}

/// `r_i(a) = Σ_{a_-i} u_i(a, a_-i) Π_{j≠i} π_j(a_j)` by direct enumeration.
pub fn naive_marginal_probs(game: &PotentialGame, agent: usize, probs: &[Vec<f64>]) -> Result<MarginalUtility> {
    check_scale(game)?;
    check_dims(game, probs)?;
    let mut values = vec![0.0; game.num_actions()];
    let u = game.utility(agent);
    for (flat, &v) in u.iter().enumerate() {
        let own = game.joint_action(flat)[agent];
        values[own] += v * weight(game, probs, flat, Some(agent));
    }
    Ok(MarginalUtility { values })
}

pub fn naive_marginal(game: &PotentialGame, agent: usize, policy: &JointPolicy) -> Result<MarginalUtility> {
    naive_marginal_probs(game, agent, &policy.probs())
}

/// `E_{a ~ p} u_i(a)` by direct enumeration.
pub fn naive_expected_utility(game: &PotentialGame, agent: usize, probs: &[Vec<f64>]) -> Result<f64> {
    check_scale(game)?;
    check_dims(game, probs)?;
    Ok(game
        .utility(agent)
        .iter()
        .enumerate()
        .map(|(flat, v)| v * weight(game, probs, flat, None))
        .sum())
}

/// `max_i max_a [u_i(e_a, π_-i) - u_i(π)]`, each term from a full enumeration.
pub fn pure_deviation_gap(game: &PotentialGame, policy: &JointPolicy) -> Result<f64> {
    let probs = policy.probs();
    let mut gap = 0.0_f64;
    for agent in 0..game.num_agents() {
        let base = naive_expected_utility(game, agent, &probs)?;
        for a in 0..game.num_actions() {
            let mut dev = probs.clone();
            dev[agent] = (0..game.num_actions()).map(|b| if a == b { 1.0 } else { 0.0 }).collect();
            gap = gap.max(naive_expected_utility(game, agent, &dev)? - base);
        }
    }
    Ok(gap)
}

fn shannon(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

fn softmax_probs(theta: &[f64]) -> Vec<f64> {
    let m = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = theta.iter().map(|t| (t - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

fn params_probs(params: &SoftmaxParams) -> Vec<Vec<f64>> {
    params.rows().iter().map(|r| softmax_probs(r)).collect()
}

fn check_fisher_scale(game: &PotentialGame, params: &SoftmaxParams) -> Result<()> {
    if game.num_agents() > FISHER_MAX_AGENTS || game.num_actions() > FISHER_MAX_ACTIONS {
        return Err(Error::OracleScale(format!(
            "Fisher oracle supports N <= {FISHER_MAX_AGENTS}, |A| <= {FISHER_MAX_ACTIONS}"
        )));
    }
    if params.num_agents() != game.num_agents() || params.num_actions() != game.num_actions() {
        return Err(Error::DimensionMismatch("parameters do not match game".into()));
    }
    check_scale(game)
}

/// `u_{i,τ}(softmax(θ))` from full enumeration.
pub fn regularized_utility_at(game: &PotentialGame, params: &SoftmaxParams, agent: usize, tau: f64) -> Result<f64> {
    let probs = params_probs(params);
    Ok(naive_expected_utility(game, agent, &probs)? + tau * shannon(&probs[agent]))
}

/// Closed-form `∇_{θ_i} u_{i,τ} = diag(π_i)(g - ⟨π_i, g⟩)` with `g = r_i - τ log π_i`.
pub fn analytic_gradient(game: &PotentialGame, params: &SoftmaxParams, agent: usize, tau: f64) -> Result<Vec<f64>> {
    check_fisher_scale(game, params)?;
    let probs = params_probs(params);
    let r = naive_marginal_probs(game, agent, &probs)?;
    let p = &probs[agent];
    let g: Vec<f64> = r.values.iter().zip(p).map(|(rv, pv)| rv - tau * pv.ln()).collect();
    let mean: f64 = g.iter().zip(p).map(|(a, b)| a * b).sum();
    Ok(p.iter().zip(&g).map(|(pv, gv)| pv * (gv - mean)).collect())
}

/// Central differences of [`regularized_utility_at`] in `θ_i`.
pub fn finite_difference_gradient(
    game: &PotentialGame,
    params: &SoftmaxParams,
    agent: usize,
    tau: f64,
    step: f64,
) -> Result<Vec<f64>> {
    check_fisher_scale(game, params)?;
    let mut grad = Vec::with_capacity(game.num_actions());
    for b in 0..game.num_actions() {
        let shifted = |delta: f64| {
            let mut theta = params.rows().to_vec();
            theta[agent][b] += delta;
            SoftmaxParams::new(theta)
        };
        let plus = regularized_utility_at(game, &shifted(step)?, agent, tau)?;
        let minus = regularized_utility_at(game, &shifted(-step)?, agent, tau)?;
        grad.push((plus - minus) / (2.0 * step));
    }
    Ok(grad)
}

/// `F = E[∇ log π ∇ log πᵀ] = diag(π) - π πᵀ`.
pub fn fisher_matrix(p: &[f64]) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::from_fn(n, n, |i, j| if i == j { p[i] - p[i] * p[j] } else { -p[i] * p[j] })
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix via eigendecomposition,
/// dropping eigenvalues below `cutoff`.
pub fn symmetric_pinv(m: &DMatrix<f64>, cutoff: f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let inv = eig.eigenvalues.map(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

#[derive(Debug, Clone)]
pub struct FisherStep {
    pub policy: JointPolicy,
    pub params: SoftmaxParams,
    /// Largest `‖analytic - fd‖_∞ / ‖analytic‖_∞` over agents.
    pub gradient_rel_error: f64,
}

/// `θ_i ← θ_i + η F_i^† ∇_{θ_i} u_{i,τ}` for every agent, evaluated at the
/// same `θ`.
pub fn fisher_npg_step(game: &PotentialGame, params: &SoftmaxParams, eta: f64, tau: f64) -> Result<FisherStep> {
    check_fisher_scale(game, params)?;
    let probs = params_probs(params);
    let mut theta = params.rows().to_vec();
    let mut worst = 0.0_f64;
    for agent in 0..game.num_agents() {
        let grad = analytic_gradient(game, params, agent, tau)?;
        let fd = finite_difference_gradient(game, params, agent, tau, FD_STEP)?;
        let scale = grad.iter().chain(&fd).map(|v| v.abs()).fold(0.0, f64::max);
        let diff = grad.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if scale > 1e-9 {
            worst = worst.max(diff / scale);
        }
        let step = symmetric_pinv(&fisher_matrix(&probs[agent]), PINV_CUTOFF) * DVector::from_vec(grad);
        for (t, s) in theta[agent].iter_mut().zip(step.iter()) {
            *t += eta * s;
        }
    }
    let params = SoftmaxParams::new(theta)?;
    Ok(FisherStep {
        policy: JointPolicy::softmax(&params),
        params,
        gradient_rel_error: worst,
    })
}

/// Best regularized utility of `agent` over a barycentric grid of spacing
/// `resolution`, minus the current value. Supports `|A| <= 3`.
pub fn grid_gap(game: &PotentialGame, agent: usize, policy: &JointPolicy, tau: f64, resolution: f64) -> Result<f64> {
    let m = game.num_actions();
    if m > 3 {
        return Err(Error::OracleScale(format!("grid search needs |A| <= 3, got {m}")));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidParameter(format!("bad grid resolution {resolution}")));
    }
    let probs = policy.probs();
    let r = naive_marginal_probs(game, agent, &probs)?;
    let objective = |p: &[f64]| -> f64 { r.values.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + tau * shannon(p) };
    let current = objective(&probs[agent]);
    let steps = (1.0 / resolution).round() as usize;
    let h = 1.0 / steps as f64;
    let mut best = f64::NEG_INFINITY;
    match m {
        1 => best = objective(&[1.0]),
        2 => {
            for k in 0..=steps {
                let x = k as f64 * h;
                best = best.max(objective(&[x, 1.0 - x]));
            }
        }
        _ => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let (x, y) = (i as f64 * h, j as f64 * h);
                    best = best.max(objective(&[x, y, (1.0 - x - y).max(0.0)]));
                }
            }
        }
    }
    Ok(best - current)
}
