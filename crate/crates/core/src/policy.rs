//! Product policies stored in log space, plus entropies and divergences.

use crate::error::{Error, Result};
use crate::numfmt::sig17;

/// Smallest probability written when a policy is serialized or built from
/// probabilities containing exact zeros.
pub const PROB_FLOOR: f64 = 1e-300;

/// `log Σ exp(x)`, shifted by the maximum.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Subtracts the log-normalizer in place.
pub fn normalize_log_row(row: &mut [f64]) {
    let z = log_sum_exp(row);
    row.iter_mut().for_each(|x| *x -= z);
}

/// Unconstrained softmax logits `θ_i`, one row per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxParams {
    theta: Vec<Vec<f64>>,
}

impl SoftmaxParams {
    pub fn new(theta: Vec<Vec<f64>>) -> Result<Self> {
        check_rows(&theta)?;
        if theta.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("softmax logits must be finite".into()));
        }
        Ok(Self { theta })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.theta
    }

    pub fn num_agents(&self) -> usize {
        self.theta.len()
    }

    pub fn num_actions(&self) -> usize {
        self.theta[0].len()
    }
}

fn check_rows(rows: &[Vec<f64>]) -> Result<()> {
    let Some(first) = rows.first() else {
        return Err(Error::InvalidParameter("need at least one agent".into()));
    };
    if first.is_empty() {
        return Err(Error::InvalidParameter("need at least one action".into()));
    }
    if rows.iter().any(|r| r.len() != first.len()) {
        return Err(Error::DimensionMismatch("ragged policy rows".into()));
    }
    Ok(())
}

/// `π = π_1 × ... × π_N`, stored as `log π_i`. Every row is normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPolicy {
    log_probs: Vec<Vec<f64>>,
}

impl JointPolicy {
    pub fn uniform(num_agents: usize, num_actions: usize) -> Self {
        assert!(num_agents > 0 && num_actions > 0, "empty policy");
        let l = -(num_actions as f64).ln();
        Self {
            log_probs: vec![vec![l; num_actions]; num_agents],
        }
    }

    /// Builds a policy from unnormalized log-weights; each row is normalized.
    pub fn from_log_weights(mut rows: Vec<Vec<f64>>) -> Result<Self> {
        check_rows(&rows)?;
        for row in &mut rows {
            if row.iter().any(|v| v.is_nan() || *v == f64::INFINITY) || row.iter().all(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("log-weights must be finite".into()));
            }
            for v in row.iter_mut() {
                *v = v.max(PROB_FLOOR.ln());
            }
            normalize_log_row(row);
        }
        Ok(Self { log_probs: rows })
    }

    /// Builds a policy from nonnegative weights. Zeros are raised to
    /// [`PROB_FLOOR`] before taking logs; rows are renormalized.
    pub fn from_probs(rows: &[Vec<f64>]) -> Result<Self> {
        check_rows(rows)?;
        let mut logs = Vec::with_capacity(rows.len());
        for row in rows {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || row.iter().all(|&p| p == 0.0) {
                return Err(Error::InvalidParameter(format!("invalid probability row {row:?}")));
            }
            let mut l: Vec<f64> = row.iter().map(|p| p.max(PROB_FLOOR).ln()).collect();
            normalize_log_row(&mut l);
            logs.push(l);
        }
        Ok(Self { log_probs: logs })
    }

    /// `π_i(a) = exp(θ_i(a)) / Σ exp(θ_i)`.
    pub fn softmax(params: &SoftmaxParams) -> Self {
        let log_probs = params
            .rows()
            .iter()
            .map(|row| {
                let mut l = row.clone();
                normalize_log_row(&mut l);
                l
            })
            .collect();
        Self { log_probs }
    }

    pub fn num_agents(&self) -> usize {
        self.log_probs.len()
    }

    pub fn num_actions(&self) -> usize {
        self.log_probs[0].len()
    }

    pub fn log_row(&self, agent: usize) -> &[f64] {
        &self.log_probs[agent]
    }

    pub fn log_rows(&self) -> &[Vec<f64>] {
        &self.log_probs
    }

    pub fn prob_row(&self, agent: usize) -> Vec<f64> {
        self.log_probs[agent].iter().map(|l| l.exp()).collect()
    }

    pub fn probs(&self) -> Vec<Vec<f64>> {
        (0..self.num_agents()).map(|i| self.prob_row(i)).collect()
    }

    /// Copy with agent `agent`'s row replaced by normalized `log_row`.
    pub fn with_log_row(&self, agent: usize, mut log_row: Vec<f64>) -> Self {
        assert_eq!(log_row.len(), self.num_actions());
        normalize_log_row(&mut log_row);
        let mut next = self.clone();
        next.log_probs[agent] = log_row;
        next
    }

    pub(crate) fn from_normalized_rows(log_probs: Vec<Vec<f64>>) -> Self {
        Self { log_probs }
    }

    /// `Σ_i H(π_i)`.
    pub fn total_entropy(&self) -> f64 {
        self.log_probs.iter().map(|r| entropy(r)).sum()
    }

    /// One row per agent, comma-separated probabilities with 17 significant
    /// digits, floored at [`PROB_FLOOR`].
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.log_probs {
            let line: Vec<String> = row.iter().map(|l| sig17(l.exp().max(PROB_FLOOR))).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                line.split(',')
                    .map(|f| {
                        f.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::InvalidParameter(format!("bad probability {f:?}: {e}")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_probs(&rows)
    }
}

/// Shannon entropy of a row given as log-probabilities.
pub fn entropy(log_p: &[f64]) -> f64 {
    -log_p.iter().map(|&l| l.exp() * l).sum::<f64>()
}

/// `KL(p ‖ q)` from log-probability rows.
pub fn kl(log_p: &[f64], log_q: &[f64]) -> f64 {
    debug_assert_eq!(log_p.len(), log_q.len());
    log_p.iter().zip(log_q).map(|(&lp, &lq)| lp.exp() * (lp - lq)).sum()
}

/// `KL(p ‖ q) + KL(q ‖ p) = Σ (p - q)(log p - log q)`; every term is nonnegative.
pub fn jeffrey_row(log_p: &[f64], log_q: &[f64]) -> f64 {
    debug_assert_eq!(log_p.len(), log_q.len());
    log_p
        .iter()
        .zip(log_q)
        .map(|(&lp, &lq)| (lp.exp() - lq.exp()) * (lp - lq))
        .sum()
}

/// KL divergence between product policies, additive over agents.
pub fn kl_joint(p: &JointPolicy, q: &JointPolicy) -> f64 {
    p.log_rows().iter().zip(q.log_rows()).map(|(a, b)| kl(a, b)).sum()
}

/// Jeffrey divergence `J(π, π')` between product policies.
pub fn jeffrey(p: &JointPolicy, q: &JointPolicy) -> f64 {
    p.log_rows()
        .iter()
        .zip(q.log_rows())
        .map(|(a, b)| jeffrey_row(a, b))
        .sum()
}

/// `½ Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LN4: f64 = 1.386_294_361_119_890_6;

    #[test]
    fn uniform_rows() {
        let p = JointPolicy::uniform(2, 4);
        for i in 0..2 {
            for q in p.prob_row(i) {
                assert!((q - 0.25).abs() < 1e-15);
            }
            assert!((entropy(p.log_row(i)) - LN4).abs() < 1e-12);
        }
        let single = JointPolicy::uniform(1, 1);
        assert_eq!(single.prob_row(0), vec![1.0]);
    }

    #[test]
    fn softmax_examples() {
        let p = JointPolicy::softmax(&SoftmaxParams::new(vec![vec![0.0, 3f64.ln()]]).unwrap());
        let r0 = p.prob_row(0);
        assert!((r0[0] - 0.25).abs() < 1e-15 && (r0[1] - 0.75).abs() < 1e-15);
        let c = JointPolicy::softmax(&SoftmaxParams::new(vec![vec![2.0; 3]]).unwrap());
        for q in c.prob_row(0) {
            assert!((q - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn entropy_examples() {
        let u = JointPolicy::uniform(1, 20);
        assert!((entropy(u.log_row(0)) - 20f64.ln()).abs() < 1e-12);
        assert!((20f64.ln() - 2.995_732).abs() < 1e-6);
        let p = JointPolicy::from_probs(&[vec![0.25, 0.75]]).unwrap();
        let expected = 0.25 * 4f64.ln() + 0.75 * (4.0f64 / 3.0).ln();
        assert!((entropy(p.log_row(0)) - expected).abs() < 1e-15);
        assert!((expected - 0.562_335).abs() < 1e-6);
        let point = JointPolicy::from_probs(&[vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(entropy(point.log_row(0)).abs() < 1e-290);
    }

    #[test]
    fn kl_examples() {
        let p = JointPolicy::from_probs(&[vec![0.5, 0.5]]).unwrap();
        let q = JointPolicy::from_probs(&[vec![0.25, 0.75]]).unwrap();
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((kl(p.log_row(0), q.log_row(0)) - expected).abs() < 1e-15);
        assert!((expected - 0.143_841).abs() < 1e-6);
        assert_eq!(kl(p.log_row(0), p.log_row(0)), 0.0);
        let j = jeffrey(&p, &q);
        let j2 = kl(p.log_row(0), q.log_row(0)) + kl(q.log_row(0), p.log_row(0));
        assert!((j - j2).abs() < 1e-15);
    }

    #[test]
    fn csv_format_is_plain_decimal() {
        let p = JointPolicy::from_probs(&[vec![0.25, 0.75], vec![1.0, 0.0]]).unwrap();
        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        let first: Vec<f64> = lines[0].split(',').map(|f| f.parse().unwrap()).collect();
        assert!((first[0] - 0.25).abs() < 1e-15 && (first[1] - 0.75).abs() < 1e-15);
        assert!(lines[1].starts_with("1,1.00000000000") && lines[1].ends_with("e-300"));
        let back = JointPolicy::from_csv(&csv).unwrap();
        for (a, b) in back.prob_row(0).iter().zip(p.prob_row(0)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(JointPolicy::from_probs(&[vec![0.5, -0.1]]).is_err());
        assert!(JointPolicy::from_probs(&[vec![0.0, 0.0]]).is_err());
        assert!(JointPolicy::from_probs(&[vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(SoftmaxParams::new(vec![vec![f64::NAN]]).is_err());
        assert!(JointPolicy::from_log_weights(vec![]).is_err());
    }

    fn logits(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-8.0f64..8.0, n)
    }

    proptest! {
        #[test]
        fn softmax_is_shift_invariant(x in logits(6), c in -50.0f64..50.0) {
            let a = JointPolicy::softmax(&SoftmaxParams::new(vec![x.clone()]).unwrap());
            let b = JointPolicy::softmax(&SoftmaxParams::new(vec![x.iter().map(|v| v + c).collect()]).unwrap());
            for (p, q) in a.prob_row(0).iter().zip(b.prob_row(0)) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }

        #[test]
        fn rows_stay_normalized(x in logits(7), y in logits(7)) {
            let p = JointPolicy::from_log_weights(vec![x, y]).unwrap();
            for i in 0..2 {
                prop_assert!(log_sum_exp(p.log_row(i)).abs() < 1e-12);
            }
        }

        #[test]
        fn pinsker_bound(x in logits(5), y in logits(5)) {
            let p = JointPolicy::from_log_weights(vec![x]).unwrap();
            let q = JointPolicy::from_log_weights(vec![y]).unwrap();
            let tv = total_variation(&p.prob_row(0), &q.prob_row(0));
            let d = kl(p.log_row(0), q.log_row(0));
            prop_assert!(d >= -1e-15);
            prop_assert!(tv <= (d / 2.0).sqrt() + 1e-12);
        }

        #[test]
        fn log_policy_gap_is_at_most_twice_the_logit_gap(x in logits(8), y in logits(8)) {
            let p = JointPolicy::from_log_weights(vec![x.clone()]).unwrap();
            let q = JointPolicy::from_log_weights(vec![y.clone()]).unwrap();
            let lhs = p.log_row(0).iter().zip(q.log_row(0)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let rhs = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(lhs <= 2.0 * rhs + 1e-12);
        }

        #[test]
        fn jeffrey_is_symmetric_and_nonnegative(x in logits(4), y in logits(4)) {
            let p = JointPolicy::from_log_weights(vec![x]).unwrap();
            let q = JointPolicy::from_log_weights(vec![y]).unwrap();
            prop_assert!(jeffrey(&p, &q) >= 0.0);
            prop_assert!((jeffrey(&p, &q) - jeffrey(&q, &p)).abs() < 1e-12);
        }

        #[test]
        fn csv_round_trip(x in logits(5), y in logits(5)) {
            let p = JointPolicy::from_log_weights(vec![x, y]).unwrap();
            let back = JointPolicy::from_csv(&p.to_csv()).unwrap();
            for i in 0..2 {
                for (a, b) in p.prob_row(i).iter().zip(back.prob_row(i)) {
                    prop_assert!((a - b).abs() <= 1e-13 * a);
                }
            }
        }
    }
}
