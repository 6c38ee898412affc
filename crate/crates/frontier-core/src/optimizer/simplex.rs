//! Euclidean projection onto the probability simplex.

/// Projects `v` onto `{ x : x >= 0, sum(x) = 1 }` by the sorting algorithm.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    debug_assert!(n > 0);
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    let mut rho = 0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
            rho = j + 1;
        }
    }
    debug_assert!(rho > 0);
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}
