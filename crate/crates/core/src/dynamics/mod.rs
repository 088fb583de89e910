//! Learning dynamics: independent entropy-regularized NPG, its unregularized
//! (multiplicative weights) limit, and projected gradient ascent with direct
//! parameterization.

mod bounds;
mod simplex;

pub use bounds::{
    corollary_iteration_estimate, kl_sum_bound, theorem1_rhs, BoundCheck, Check, TheoremAudit,
};
pub use simplex::project_to_simplex;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::PotentialGame;
use crate::metrics::{best_response_log, evaluate, sweep, Evaluation, MarginalUtility};
use crate::policy::{jeffrey, normalize_log_row, JointPolicy, PROB_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Entropy-regularized natural policy gradient, `τ > 0`.
    Npg,
    /// Multiplicative weights update, the `τ = 0` limit of the NPG update.
    Mwu,
    /// Projected gradient ascent on the simplex, unregularized.
    PgDirect,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Npg => "npg",
            Method::Mwu => "mwu",
            Method::PgDirect => "pg",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "npg" => Ok(Method::Npg),
            "mwu" => Ok(Method::Mwu),
            "pg" | "pg_direct" => Ok(Method::PgDirect),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// Resolved per method: [`default_learning_rate`] for NPG/MWU and
    /// [`default_pg_learning_rate`] for PG.
    Auto,
    Fixed(f64),
}

impl FromStr for StepSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(StepSize::Auto);
        }
        s.parse::<f64>()
            .map(StepSize::Fixed)
            .map_err(|e| Error::InvalidParameter(format!("bad step size {s:?}: {e}")))
    }
}

/// `1 / (2 (min{√N, 2 Φ_max} + τ))`.
pub fn default_learning_rate(num_agents: usize, phi_max: f64, tau: f64) -> f64 {
    1.0 / (2.0 * ((num_agents as f64).sqrt().min(2.0 * phi_max) + tau))
}

/// `1 / (2 N |A|)`, the direct-parameterization PG step.
pub fn default_pg_learning_rate(num_agents: usize, num_actions: usize) -> f64 {
    1.0 / (2.0 * num_agents as f64 * num_actions as f64)
}

/// `τ = ε / (2 log |A|)`, which makes an ε/2-QRE an ε-NE.
pub fn tau_for_epsilon_ne(epsilon: f64, num_actions: usize) -> Result<f64> {
    if num_actions < 2 {
        return Err(Error::InvalidParameter("need |A| >= 2 (log |A| = 0)".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    Ok(epsilon / (2.0 * (num_actions as f64).ln()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub tau: f64,
    pub eta: StepSize,
    pub max_iters: usize,
    pub seed: u64,
    /// Every iteration up to `dense_prefix` is logged, then every `log_every`-th.
    pub log_every: usize,
    pub dense_prefix: usize,
    pub monotonicity_check: bool,
    pub monotonicity_tol: f64,
    pub stop_qre_gap: Option<f64>,
}

impl RunConfig {
    pub fn new(method: Method, tau: f64, max_iters: usize) -> Self {
        Self {
            method,
            tau,
            eta: StepSize::Auto,
            max_iters,
            seed: 0,
            log_every: 10,
            dense_prefix: 1000,
            monotonicity_check: method == Method::Npg,
            monotonicity_tol: 1e-9,
            stop_qre_gap: None,
        }
    }

    pub fn npg(tau: f64, max_iters: usize) -> Self {
        Self::new(Method::Npg, tau, max_iters)
    }

    pub fn mwu(max_iters: usize) -> Self {
        Self::new(Method::Mwu, 0.0, max_iters)
    }

    pub fn pg_direct(max_iters: usize) -> Self {
        Self::new(Method::PgDirect, 0.0, max_iters)
    }

    pub fn with_eta(mut self, eta: StepSize) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn resolve_eta(&self, game: &PotentialGame) -> f64 {
        match self.eta {
            StepSize::Fixed(eta) => eta,
            StepSize::Auto => match self.method {
                Method::Npg | Method::Mwu => default_learning_rate(game.num_agents(), game.phi_max(), self.tau),
                Method::PgDirect => default_pg_learning_rate(game.num_agents(), game.num_actions()),
            },
        }
    }

    pub fn validate(&self, game: &PotentialGame) -> Result<f64> {
        let tau = self.tau;
        match self.method {
            Method::Npg if !(tau > 0.0 && tau.is_finite()) => {
                return Err(Error::InvalidParameter(format!("npg needs tau > 0, got {tau}")))
            }
            Method::Mwu | Method::PgDirect if tau != 0.0 => {
                return Err(Error::InvalidParameter(format!("{} is unregularized; tau must be 0", self.method)))
            }
            _ => {}
        }
        let eta = self.resolve_eta(game);
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be > 0, got {eta}")));
        }
        if eta * tau > 1.0 {
            return Err(Error::InvalidParameter(format!("eta * tau = {} exceeds 1", eta * tau)));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidParameter("log_every must be positive".into()));
        }
        Ok(eta)
    }

    fn logs(&self, t: usize) -> bool {
        t <= self.dense_prefix || t % self.log_every == 0
    }
}

fn check_step(eta: f64, tau: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta must be > 0, got {eta}")));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be >= 0, got {tau}")));
    }
    if eta * tau > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "eta * tau = {} > 1 puts a negative exponent on the current policy",
            eta * tau
        )));
    }
    Ok(())
}

/// `log π_i' = (1 - ητ) log π_i + η r_i - LSE`, for every agent from the same
/// marginals.
pub fn npg_update(policy: &JointPolicy, marginals: &[MarginalUtility], eta: f64, tau: f64) -> JointPolicy {
    let keep = 1.0 - eta * tau;
    let rows = policy
        .log_rows()
        .iter()
        .zip(marginals)
        .map(|(lp, r)| {
            let mut next: Vec<f64> = if keep == 0.0 {
                r.values.iter().map(|v| eta * v).collect()
            } else {
                lp.iter().zip(&r.values).map(|(l, v)| keep * l + eta * v).collect()
            };
            normalize_log_row(&mut next);
            next
        })
        .collect();
    JointPolicy::from_normalized_rows(rows)
}

/// One simultaneous independent NPG step.
pub fn npg_step(game: &PotentialGame, policy: &JointPolicy, eta: f64, tau: f64) -> Result<JointPolicy> {
    check_step(eta, tau)?;
    let s = sweep(game, policy)?;
    Ok(npg_update(policy, &s.marginals, eta, tau))
}

/// One multiplicative-weights step (`τ = 0`).
pub fn mwu_step(game: &PotentialGame, policy: &JointPolicy, eta: f64) -> Result<JointPolicy> {
    npg_step(game, policy, eta, 0.0)
}

/// `π_i' = Proj_Δ(π_i + η r_i)`; zeros are floored before returning to log space.
pub fn pg_direct_update(policy: &JointPolicy, marginals: &[MarginalUtility], eta: f64) -> JointPolicy {
    let rows = (0..policy.num_agents())
        .map(|i| {
            let y: Vec<f64> = policy
                .prob_row(i)
                .iter()
                .zip(&marginals[i].values)
                .map(|(p, r)| p + eta * r)
                .collect();
            let mut l: Vec<f64> = project_to_simplex(&y).iter().map(|x| x.max(PROB_FLOOR).ln()).collect();
            normalize_log_row(&mut l);
            l
        })
        .collect();
    JointPolicy::from_normalized_rows(rows)
}

pub fn pg_direct_step(game: &PotentialGame, policy: &JointPolicy, eta: f64) -> Result<JointPolicy> {
    check_step(eta, 0.0)?;
    let s = sweep(game, policy)?;
    Ok(pg_direct_update(policy, &s.marginals, eta))
}

/// One logged iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub iter: usize,
    pub phi_tau: f64,
    pub ne_gap: f64,
    pub qre_gap: f64,
    /// `J(π^(t+1), π^(t))`; NaN for projected PG.
    pub jeffrey_step: f64,
    /// Mean of `ne_gap^(s)` over `s = 1..=t` (the gap itself at `t = 0`).
    pub avg_ne_gap: f64,
    pub avg_qre_gap: f64,
}

/// JSON has no NaN; non-finite values are written as `null` and read back as NaN.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Run-level quantities measured over every iteration, logged or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub tau: f64,
    pub eta: f64,
    pub default_eta: f64,
    pub num_agents: usize,
    pub num_actions: usize,
    pub phi_max: f64,
    pub seed: u64,
    pub iterations: usize,
    pub stopped_early: bool,
    /// NPG with `η` at most the default step; the premise of the monotonicity
    /// lemma and the convergence theorem.
    pub theorem_premise: bool,
    pub phi_tau_initial: f64,
    pub phi_tau_final: f64,
    /// `max_i ‖log π_i^(0) - log π_i^*(0)‖_∞`; NaN when `τ = 0`.
    #[serde(with = "nan_as_null")]
    pub initial_log_gap: f64,
    #[serde(with = "nan_as_null")]
    pub avg_qre_gap: f64,
    #[serde(with = "nan_as_null")]
    pub avg_ne_gap: f64,
    #[serde(with = "nan_as_null")]
    pub best_qre_gap: f64,
    pub best_qre_iter: usize,
    pub final_ne_gap: f64,
    pub final_qre_gap: f64,
    /// `Σ_{t<T} J(π^(t+1), π^(t))`; NaN for projected PG.
    #[serde(with = "nan_as_null")]
    pub jeffrey_sum: f64,
    /// `min_t [Φ_τ^(t+1) - Φ_τ^(t) - J/(2η)]`; NaN when no step was taken or for PG.
    #[serde(with = "nan_as_null")]
    pub monotone_min_slack: f64,
    /// `max_t [ne_gap - qre_gap - τ log |A|]`.
    #[serde(with = "nan_as_null")]
    pub sandwich_max: f64,
}

#[derive(Debug, Clone)]
pub struct IterateLog {
    pub records: Vec<IterateRecord>,
    pub summary: RunSummary,
    pub final_policy: JointPolicy,
}

/// Runs `config.max_iters` steps from uniform policies.
///
/// Every iteration costs one sweep, which yields both the metrics of
/// `π^(t)` and the marginals driving the update. With
/// `monotonicity_check` and the step-size premise in force, a step whose
/// regularized-potential increase falls short of `J/(2η)` by more than the
/// tolerance aborts the run.
pub fn run(game: &PotentialGame, config: &RunConfig) -> Result<IterateLog> {
    let eta = config.validate(game)?;
    let tau = config.tau;
    let n = game.num_agents();
    let m = game.num_actions();
    let default_eta = match config.method {
        Method::PgDirect => default_pg_learning_rate(n, m),
        _ => default_learning_rate(n, game.phi_max(), tau),
    };
    let premise = config.method == Method::Npg && eta <= default_eta * (1.0 + 1e-12);
    let log_m = (m as f64).ln();

    let mut policy = JointPolicy::uniform(n, m);
    let mut ev: Evaluation = evaluate(game, &policy, tau)?;
    let initial_log_gap = if tau > 0.0 {
        ev.marginals
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let star = best_response_log(&r.values, tau);
                policy
                    .log_row(i)
                    .iter()
                    .zip(&star)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    } else {
        f64::NAN
    };
    let phi_tau_initial = ev.phi_tau;

    let mut records = Vec::new();
    let (mut sum_qre, mut sum_ne) = (0.0, 0.0);
    let (mut best_qre, mut best_qre_iter) = (f64::INFINITY, 0);
    let mut jeffrey_sum = 0.0;
    let mut min_slack = f64::INFINITY;
    let mut sandwich_max = f64::NEG_INFINITY;
    let mut t = 0;
    loop {
        let next = match config.method {
            Method::Npg | Method::Mwu => npg_update(&policy, &ev.marginals, eta, tau),
            Method::PgDirect => pg_direct_update(&policy, &ev.marginals, eta),
        };
        let j = match config.method {
            Method::PgDirect => f64::NAN,
            _ => jeffrey(&next, &policy),
        };
        if t > 0 {
            sum_qre += ev.qre_gap;
            sum_ne += ev.ne_gap;
        }
        let (avg_ne, avg_qre) = if t == 0 {
            (ev.ne_gap, ev.qre_gap)
        } else {
            (sum_ne / t as f64, sum_qre / t as f64)
        };
        if ev.qre_gap < best_qre {
            best_qre = ev.qre_gap;
            best_qre_iter = t;
        }
        sandwich_max = sandwich_max.max(ev.ne_gap - ev.qre_gap - tau * log_m);
        let stop = t == config.max_iters || config.stop_qre_gap.is_some_and(|thr| ev.qre_gap <= thr);
        if stop || config.logs(t) {
            records.push(IterateRecord {
                iter: t,
                phi_tau: ev.phi_tau,
                ne_gap: ev.ne_gap,
                qre_gap: ev.qre_gap,
                jeffrey_step: j,
                avg_ne_gap: avg_ne,
                avg_qre_gap: avg_qre,
            });
        }
        if stop {
            break;
        }
        jeffrey_sum += j;
        let next_ev = evaluate(game, &next, tau)?;
        if config.method != Method::PgDirect {
            let required = j / (2.0 * eta);
            let slack = next_ev.phi_tau - ev.phi_tau - required;
            min_slack = min_slack.min(slack);
            if config.monotonicity_check && premise && slack < -config.monotonicity_tol {
                return Err(Error::MonotonicityViolation {
                    t,
                    phi_before: ev.phi_tau,
                    phi_after: next_ev.phi_tau,
                    jeffrey: j,
                    required,
                });
            }
        }
        policy = next;
        ev = next_ev;
        t += 1;
    }

    let iterations = t;
    let avg = |s: f64| if iterations == 0 { f64::NAN } else { s / iterations as f64 };
    let summary = RunSummary {
        method: config.method,
        tau,
        eta,
        default_eta,
        num_agents: n,
        num_actions: m,
        phi_max: game.phi_max(),
        seed: config.seed,
        iterations,
        stopped_early: t < config.max_iters,
        theorem_premise: premise,
        phi_tau_initial,
        phi_tau_final: ev.phi_tau,
        initial_log_gap,
        avg_qre_gap: avg(sum_qre),
        avg_ne_gap: avg(sum_ne),
        best_qre_gap: best_qre,
        best_qre_iter,
        final_ne_gap: ev.ne_gap,
        final_qre_gap: ev.qre_gap,
        jeffrey_sum: if config.method == Method::PgDirect { f64::NAN } else { jeffrey_sum },
        monotone_min_slack: if min_slack.is_finite() { min_slack } else { f64::NAN },
        sandwich_max,
    };
    Ok(IterateLog {
        records,
        summary,
        final_policy: policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{make_general_potential, make_identical_interest};
    use crate::metrics::{best_response_log, marginalized_utilities};
    use crate::rng::SplitMix64;

    fn random_policy(rng: &mut SplitMix64, n: usize, m: usize) -> JointPolicy {
        JointPolicy::from_log_weights(
            (0..n).map(|_| (0..m).map(|_| 3.0 * rng.next_open01()).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn learning_rate_examples() {
        assert!((default_learning_rate(4, 1.0, 0.01) - 1.0 / 4.02).abs() < 1e-15);
        assert!((default_learning_rate(4, 1.0, 0.01) - 0.248_756_2).abs() < 1e-7);
        assert!((default_learning_rate(100, 0.1, 0.0) - 2.5).abs() < 1e-15);
        assert!((default_learning_rate(1, 1.0, 1.0) - 0.25).abs() < 1e-15);
        assert!((default_pg_learning_rate(4, 20) - 0.006_25).abs() < 1e-15);
    }

    #[test]
    fn tau_for_epsilon_examples() {
        assert!((tau_for_epsilon_ne(0.1, 20).unwrap() - 0.016_690_5).abs() < 1e-7);
        assert!((tau_for_epsilon_ne(2.0 * 7f64.ln(), 7).unwrap() - 1.0).abs() < 1e-15);
        assert!(tau_for_epsilon_ne(0.1, 1).is_err());
    }

    #[test]
    fn unit_eta_tau_gives_best_response() {
        let mut rng = SplitMix64::new(1);
        let g = make_general_potential(3, 4, 2).unwrap();
        let pol = random_policy(&mut rng, 3, 4);
        let tau = 0.25;
        let next = npg_step(&g, &pol, 1.0 / tau, tau).unwrap();
        let rs = marginalized_utilities(&g, &pol).unwrap();
        for i in 0..3 {
            let star = best_response_log(&rs[i].values, tau);
            for (a, b) in next.log_row(i).iter().zip(&star) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mwu_with_constant_marginals_is_a_fixed_point() {
        let mut rng = SplitMix64::new(4);
        let pol = random_policy(&mut rng, 2, 5);
        let flat = vec![MarginalUtility { values: vec![0.3; 5] }; 2];
        let next = npg_update(&pol, &flat, 0.7, 0.0);
        for i in 0..2 {
            for (a, b) in next.log_row(i).iter().zip(pol.log_row(i)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let g = PotentialGame::from_tensors(2, 2, vec![0.5; 4], vec![], 1.0).unwrap();
        let p = JointPolicy::from_probs(&[vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        let q = mwu_step(&g, &p, 0.3).unwrap();
        assert!((q.prob_row(0)[0] - 0.2).abs() < 1e-14);
        let q = pg_direct_step(&g, &p, 0.3).unwrap();
        assert!((q.prob_row(1)[0] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn rejects_negative_exponent() {
        let g = make_identical_interest(2, 2, 0).unwrap();
        let p = JointPolicy::uniform(2, 2);
        assert!(matches!(npg_step(&g, &p, 2.0, 1.0), Err(Error::InvalidParameter(_))));
        assert!(npg_step(&g, &p, 1.0, 1.0).is_ok());
    }

    #[test]
    fn update_is_independent_of_agent_order() {
        let mut rng = SplitMix64::new(11);
        let g = make_general_potential(3, 3, 7).unwrap();
        let pol = random_policy(&mut rng, 3, 3);
        let rs = marginalized_utilities(&g, &pol).unwrap();
        let together = npg_update(&pol, &rs, 0.2, 0.1);
        // agent i's new row depends only on (π_i, r_i): scrambling the other
        // rows and permuting the remaining marginals leaves it untouched
        let other = random_policy(&mut rng, 3, 3);
        for i in 0..3 {
            let mixed = other.with_log_row(i, pol.log_row(i).to_vec());
            let mut rs2 = marginalized_utilities(&g, &other).unwrap();
            rs2[i] = rs[i].clone();
            let single = npg_update(&mixed, &rs2, 0.2, 0.1);
            for (a, b) in single.log_row(i).iter().zip(together.log_row(i)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_iterations_logs_the_uniform_start() {
        let g = make_identical_interest(3, 5, 2).unwrap();
        let tau = 0.01;
        let log = run(&g, &RunConfig::npg(tau, 0)).unwrap();
        assert_eq!(log.records.len(), 1);
        let phi_uniform = g.potential().iter().sum::<f64>() / 125.0;
        let expected = phi_uniform + tau * 3.0 * 5f64.ln();
        assert!((log.records[0].phi_tau - expected).abs() < 1e-12);
        assert_eq!(log.summary.iterations, 0);
    }

    #[test]
    fn npg_run_is_monotone_and_converges_on_a_small_game() {
        let g = make_general_potential(3, 4, 5).unwrap();
        let log = run(&g, &RunConfig::npg(0.1, 3000)).unwrap();
        let s = &log.summary;
        assert!(s.theorem_premise);
        assert!(s.monotone_min_slack >= -1e-9);
        assert!(s.final_qre_gap < 1e-6, "{s:?}");
        assert!(log.records.windows(2).all(|w| w[1].phi_tau >= w[0].phi_tau - 1e-12));
    }

    #[test]
    fn cadence_and_early_stop() {
        let g = make_identical_interest(2, 3, 5).unwrap();
        let mut cfg = RunConfig::npg(0.1, 1205);
        cfg.dense_prefix = 10;
        cfg.log_every = 100;
        let log = run(&g, &cfg).unwrap();
        let iters: Vec<usize> = log.records.iter().map(|r| r.iter).collect();
        assert_eq!(&iters[..11], &(0..=10).collect::<Vec<_>>()[..]);
        assert_eq!(iters[11], 100);
        assert_eq!(*iters.last().unwrap(), 1205);
        cfg.stop_qre_gap = Some(1e-3);
        let early = run(&g, &cfg).unwrap();
        assert!(early.summary.stopped_early);
        assert!(early.summary.final_qre_gap <= 1e-3);
    }

    #[test]
    fn method_tau_consistency() {
        let g = make_identical_interest(2, 2, 0).unwrap();
        assert!(run(&g, &RunConfig::npg(0.0, 1)).is_err());
        assert!(run(&g, &RunConfig::new(Method::Mwu, 0.1, 1)).is_err());
        assert!(run(&g, &RunConfig::mwu(5)).is_ok());
        let pg = run(&g, &RunConfig::pg_direct(5)).unwrap();
        assert!(pg.records[0].jeffrey_step.is_nan());
        assert!((pg.summary.eta - 0.125).abs() < 1e-15);
    }

    #[test]
    fn oversized_step_skips_the_monotonicity_assertion() {
        let g = make_identical_interest(2, 4, 3).unwrap();
        let base = default_learning_rate(2, 1.0, 0.05);
        let cfg = RunConfig::npg(0.05, 50).with_eta(StepSize::Fixed(10.0 * base));
        let log = run(&g, &cfg).unwrap();
        assert!(!log.summary.theorem_premise);
    }
}
