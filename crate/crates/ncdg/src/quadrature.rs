//! Gauss–Legendre quadrature rules and Legendre–Gauss–Lobatto point sets on [-1, 1].

use crate::error::{Error, Result};

/// Legendre polynomial P_n and its derivative at `x`, by the three-term recurrence.
fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for m in 1..n {
        let m = m as f64;
        let p_next = ((2.0 * m + 1.0) * x * p - m * p_prev) / (m + 1.0);
        p_prev = p;
        p = p_next;
    }
    // (1 - x^2) P_n' = n (P_{n-1} - x P_n)
    let dp = if (1.0 - x * x).abs() > 1e-14 {
        n as f64 * (p_prev - x * p) / (1.0 - x * x)
    } else {
        // endpoint value: P_n'(±1) = ±^{n+1} n(n+1)/2
        let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        sign * n as f64 * (n as f64 + 1.0) / 2.0
    };
    (p, dp)
}

/// n-point Gauss–Legendre rule on [-1, 1]; exact for polynomials of degree <= 2n-1.
///
/// Roots of P_n by Newton iteration from the Chebyshev-like initial guess,
/// symmetrized so the rule is exactly even about the origin.
pub fn gauss_legendre_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Config("gauss_legendre_rule requires n >= 1".into()));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // the guess above starts from the positive end
        points[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        points[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Ok((points, weights))
}

/// k+1 Legendre–Gauss–Lobatto nodes on [-1, 1]: the endpoints plus the roots of P_k'.
pub fn lgl_nodes(k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Config("lgl_nodes requires degree k >= 1".into()));
    }
    let n = k + 1;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[k] = 1.0;
    // Interior nodes: Newton on (1-x^2) P_k'(x), whose derivative is -k(k+1) P_k(x).
    for i in 1..k {
        let mut x = -(std::f64::consts::PI * i as f64 / k as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(k, x);
            let f = (1.0 - x * x) * dp;
            let df = -(k as f64) * (k as f64 + 1.0) * p;
            let dx = f / df;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
    }
    // enforce exact symmetry
    for i in 0..n / 2 {
        let avg = 0.5 * (nodes[i] - nodes[n - 1 - i]);
        nodes[i] = avg;
        nodes[n - 1 - i] = -avg;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_rule_for_n1() {
        let (p, w) = gauss_legendre_rule(1).unwrap();
        assert_eq!(p, vec![0.0]);
        assert_eq!(w, vec![2.0]);
    }

    #[test]
    fn two_point_rule_matches_legendre_roots() {
        // roots of P_2 = (3x^2-1)/2, i.e. +-1/sqrt(3)
        let (p, w) = gauss_legendre_rule(2).unwrap();
        assert!((p[0] + 0.5773502691896257).abs() < 1e-15);
        assert!((p[1] - 0.5773502691896257).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!((w[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_point_rule_integrates_quartic() {
        // integral of x^4 over [-1,1] is 2/5
        let (p, w) = gauss_legendre_rule(3).unwrap();
        let quad: f64 = p.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((quad - 0.4).abs() < 1e-14);
    }

    #[test]
    fn rules_are_exact_up_to_degree_2n_minus_1() {
        for n in 1..=10 {
            let (p, w) = gauss_legendre_rule(n).unwrap();
            assert!(w.iter().all(|&w| w > 0.0));
            let wsum: f64 = w.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13);
            for d in 0..=(2 * n - 1) {
                let quad: f64 = p.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
                assert!(
                    (quad - exact).abs() < 1e-13,
                    "n={n} monomial degree {d}: {quad} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn zero_point_rule_rejected() {
        assert!(gauss_legendre_rule(0).is_err());
        assert!(lgl_nodes(0).is_err());
    }

    #[test]
    fn lgl_low_orders() {
        assert_eq!(lgl_nodes(1).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(lgl_nodes(2).unwrap(), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn lgl_interior_nodes_are_roots_of_derivative() {
        // k=4: interior nodes are the roots of P_4'
        let nodes = lgl_nodes(4).unwrap();
        for &x in &nodes[1..4] {
            let (_, dp) = legendre_and_deriv(4, x);
            assert!(dp.abs() < 1e-12, "P_4'({x}) = {dp}");
        }
        // closed form: roots of 35x^3 - 15x are 0, +-sqrt(3/7)
        assert!((nodes[1] + (3.0f64 / 7.0).sqrt()).abs() < 1e-14);
        assert!(nodes[2].abs() < 1e-15);
        assert!((nodes[3] - (3.0f64 / 7.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn lgl_nodes_sorted_and_symmetric() {
        for k in 1..=10 {
            let nodes = lgl_nodes(k).unwrap();
            assert_eq!(nodes.len(), k + 1);
            assert_eq!(nodes[0], -1.0);
            assert_eq!(nodes[k], 1.0);
            for i in 0..k {
                assert!(nodes[i] < nodes[i + 1]);
                assert!((nodes[i] + nodes[k - i]).abs() < 1e-15);
            }
        }
    }
}
