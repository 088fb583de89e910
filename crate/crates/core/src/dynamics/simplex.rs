/// Euclidean projection onto the probability simplex (sort-based).
///
/// With `u` sorted descending, `ρ` is the largest `j` such that
/// `u_j - (Σ_{k≤j} u_k - 1)/j > 0`; the result is `max(y - θ, 0)` with
/// `θ = (Σ_{k≤ρ} u_k - 1)/ρ`.
pub fn project_to_simplex(y: &[f64]) -> Vec<f64> {
    assert!(!y.is_empty(), "empty vector");
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}
