//! Composite Simpson rule on uniform nodes.

/// Nodes and weights of the composite Simpson rule on `[a, b]` with `n` (odd) points.
pub fn simpson_rule(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(
        n >= 3 && n % 2 == 1,
        "simpson rule needs an odd point count >= 3"
    );
    let last = (n - 1) as f64;
    let h = (b - a) / last;
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    // Built from the midpoint so that nodes of a symmetric interval mirror exactly.
    let nodes = (0..n)
        .map(|k| mid + half * ((2 * k) as f64 - last) / last)
        .collect();
    let weights = (0..n)
        .map(|k| {
            let w = if k == 0 || k == n - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect();
    (nodes, weights)
}

/// Integrates `f` over `[a, b]` with `n` (odd) Simpson points.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = simpson_rule(a, b, n);
    nodes.iter().zip(&weights).map(|(&x, &w)| w * f(x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_cubics_exactly() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 7);
        let exact = (16.0 / 4.0 - 4.0 + 2.0) - (1.0 / 4.0 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn symmetric_nodes() {
        let (nodes, _) = simpson_rule(-3.0, 3.0, 1025);
        for k in 0..nodes.len() {
            assert_eq!(nodes[k], -nodes[nodes.len() - 1 - k]);
        }
    }
}
