//! Run-level certificates: monotone improvement of `Φ_τ`, the averaged
//! QRE-gap bound, the summed-Jeffrey bound, the uniform-initialization
//! distance bound and the NE/QRE gap sandwich.

use super::{IterateRecord, Method, RunSummary};

/// Right-hand side of the averaged QRE-gap bound,
/// `2/(ητT) (τ D0 + sqrt(2ηT (Φ_τ^(T) - Φ_τ^(0))))`.
pub fn theorem1_rhs(eta: f64, tau: f64, iterations: usize, initial_log_gap: f64, phi_initial: f64, phi_final: f64) -> f64 {
    let t = iterations as f64;
    let gain = (phi_final - phi_initial).max(0.0);
    2.0 / (eta * tau * t) * (tau * initial_log_gap + (2.0 * eta * t * gain).sqrt())
}

/// `2η (Φ_τ^(T) - Φ_τ^(0))`, which bounds the summed Jeffrey steps.
pub fn kl_sum_bound(eta: f64, phi_initial: f64, phi_final: f64) -> f64 {
    2.0 * eta * (phi_final - phi_initial)
}

/// Smallest `T` with `4/(τηT) + (2/τ) sqrt(2 Φ_max/(ηT)) ≤ ε`, the explicit
/// form of the uniform-initialization iteration count.
pub fn corollary_iteration_estimate(eta: f64, tau: f64, phi_max: f64, epsilon: f64) -> f64 {
    let a = 4.0 / (tau * eta);
    let b = 2.0 / tau * (2.0 * phi_max / eta).sqrt();
    let x = (-b + (b * b + 4.0 * a * epsilon).sqrt()) / (2.0 * a);
    (1.0 / (x * x)).ceil()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    Pass { lhs: f64, rhs: f64 },
    Fail { lhs: f64, rhs: f64 },
    NotApplicable(String),
}

impl Check {
    fn compare(lhs: f64, rhs: f64) -> Self {
        if lhs <= rhs {
            Check::Pass { lhs, rhs }
        } else {
            Check::Fail { lhs, rhs }
        }
    }

    pub fn failed(&self) -> bool {
        matches!(self, Check::Fail { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub check: Check,
}

/// All certificates for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremAudit {
    pub checks: Vec<BoundCheck>,
    pub avg_qre_gap: f64,
    pub theorem1_rhs: f64,
    /// Iterations the explicit uniform-start bound needs to certify the
    /// measured average gap.
    pub corollary_iterations: f64,
}

pub const MONOTONE_TOL: f64 = 1e-9;
pub const SANDWICH_TOL: f64 = 1e-10;

impl TheoremAudit {
    /// Evaluates every check from the run summary and its logged rows.
    /// Values present in the rows (first/last `Φ_τ`, final running average)
    /// take precedence over the summary.
    pub fn evaluate(summary: &RunSummary, records: &[IterateRecord]) -> Self {
        let phi0 = records.first().map_or(summary.phi_tau_initial, |r| r.phi_tau);
        let phi_t = records.last().map_or(summary.phi_tau_final, |r| r.phi_tau);
        let avg = records
            .last()
            .filter(|r| r.iter > 0)
            .map_or(summary.avg_qre_gap, |r| r.avg_qre_gap);
        let iterations = summary.iterations;
        let npg = summary.method == Method::Npg;
        let mut checks = Vec::new();
        let mut rhs = f64::NAN;
        let mut corollary = f64::NAN;

        let gate = || -> Option<String> {
            if !npg {
                Some(format!("{} is unregularized", summary.method))
            } else if !summary.theorem_premise {
                Some(format!(
                    "eta = {} exceeds the step-size premise {}",
                    summary.eta, summary.default_eta
                ))
            } else if iterations == 0 {
                Some("no iterations".to_string())
            } else {
                None
            }
        };

        let monotone = match gate() {
            Some(reason) => Check::NotApplicable(reason),
            None => {
                let worst_logged = records
                    .windows(2)
                    .map(|w| w[1].phi_tau - w[0].phi_tau)
                    .fold(f64::INFINITY, f64::min);
                let slack = summary.monotone_min_slack.min(worst_logged);
                Check::compare(-slack, MONOTONE_TOL)
            }
        };
        checks.push(BoundCheck { name: "monotone", check: monotone });

        let theorem1 = match gate() {
            Some(reason) => Check::NotApplicable(reason),
            None => {
                rhs = theorem1_rhs(summary.eta, summary.tau, iterations, summary.initial_log_gap, phi0, phi_t);
                corollary = corollary_iteration_estimate(summary.eta, summary.tau, summary.phi_max, avg);
                Check::compare(avg, rhs)
            }
        };
        checks.push(BoundCheck { name: "theorem1", check: theorem1 });

        let kl_sum = match gate() {
            Some(reason) => Check::NotApplicable(reason),
            None => {
                let tol = 2.0 * summary.eta * iterations as f64 * MONOTONE_TOL;
                Check::compare(summary.jeffrey_sum, kl_sum_bound(summary.eta, phi0, phi_t) + tol)
            }
        };
        checks.push(BoundCheck { name: "kl_sum", check: kl_sum });

        let initial = if npg {
            Check::compare(summary.initial_log_gap, 2.0 / summary.tau)
        } else {
            Check::NotApplicable(format!("{} is unregularized", summary.method))
        };
        checks.push(BoundCheck { name: "corollary_initial", check: initial });

        let sandwich = if npg {
            let log_m = (summary.num_actions as f64).ln();
            let logged = records
                .iter()
                .map(|r| r.ne_gap - r.qre_gap - summary.tau * log_m)
                .fold(f64::NEG_INFINITY, f64::max);
            Check::compare(summary.sandwich_max.max(logged), SANDWICH_TOL)
        } else {
            Check::NotApplicable(format!("{} is unregularized", summary.method))
        };
        checks.push(BoundCheck { name: "sandwich", check: sandwich });

        Self {
            checks,
            avg_qre_gap: avg,
            theorem1_rhs: rhs,
            corollary_iterations: corollary,
        }
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name).map(|c| &c.check)
    }

    pub fn any_failed<'a>(&self, mut enabled: impl FnMut(&'a str) -> bool) -> bool {
        self.checks.iter().any(|c| enabled(c.name) && c.check.failed())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corollary_estimate_meets_its_target() {
        let (eta, tau, phi_max, eps) = (0.2487, 0.01, 1.0, 0.05);
        let t = corollary_iteration_estimate(eta, tau, phi_max, eps);
        let bound = |t: f64| 4.0 / (tau * eta * t) + 2.0 / tau * (2.0 * phi_max / (eta * t)).sqrt();
        assert!(bound(t) <= eps * (1.0 + 1e-12));
        assert!(bound(t - 1.0) > eps);
    }

    #[test]
    fn theorem1_rhs_by_hand() {
        let rhs = theorem1_rhs(0.25, 0.5, 4, 1.0, 0.0, 2.0);
        let expected = 2.0 / (0.25 * 0.5 * 4.0) * (0.5 + (2.0f64 * 0.25 * 4.0 * 2.0).sqrt());
        assert!((rhs - expected).abs() < 1e-15);
    }
}
