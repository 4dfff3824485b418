//! Checks the closed-form marginal likelihood and group prior against a
//! direct numerical integration over the edge probabilities, with
//! highest-common-group computed from plain member sets.

use hiercp_core::enumerate::log_weights;
use hiercp_core::generator::erdos_renyi;
use hiercp_core::Graph;

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre(points: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(points);
    for i in 0..points {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (points as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=points {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            deriv = points as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / deriv;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `sum_g P(g | k=2) * integral over (w0, w1) of prod_pairs Bernoulli`.
fn brute_force_evidence(graph: &Graph, quad: &[(f64, f64)]) -> f64 {
    let n = graph.num_nodes();
    let mut total = 0.0;
    for code in 0u32..(1 << n) {
        let in_group = |u: usize| code >> u & 1 == 1;
        let size = (0..n).filter(|&u| in_group(u)).count();
        let prior = 1.0 / ((n + 1) as f64 * binomial(n, size));
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let h = usize::from(in_group(u) && in_group(v));
                pairs.push((h, graph.has_edge(u, v)));
            }
        }
        let mut integral = 0.0;
        for &(w0, c0) in quad {
            for &(w1, c1) in quad {
                let omega = [w0, w1];
                let lik: f64 = pairs
                    .iter()
                    .map(|&(h, e)| if e { omega[h] } else { 1.0 - omega[h] })
                    .product();
                integral += c0 * c1 * lik;
            }
        }
        total += prior * integral;
    }
    total
}

#[test]
fn quadrature_nodes_integrate_polynomials() {
    let quad = gauss_legendre(24);
    let integral: f64 = quad
        .iter()
        .map(|&(x, w)| w * x.powi(20) * (1.0 - x).powi(5))
        .sum();
    // B(21, 6) = 20! 5! / 26!
    let exact = 1.0 / (21.0 * 22.0 * 23.0 * 24.0 * 25.0 * 26.0 / 120.0);
    assert!((integral - exact).abs() / exact < 1e-12);
}

#[test]
fn closed_form_matches_integration() {
    let quad = gauss_legendre(24);
    let mut cases: Vec<Graph> = vec![
        Graph::from_edges(4, vec![(0, 1), (1, 2), (2, 3)]).0,
        Graph::from_edges(5, vec![(0, 1), (0, 2), (1, 2), (2, 3), (3, 4)]).0,
        Graph::from_edges(3, vec![]).0,
    ];
    for (i, n) in (2..=9).enumerate() {
        cases.push(erdos_renyi(n, 0.45, 100 + i as u64).unwrap());
    }
    for graph in &cases {
        let weights = log_weights(graph, 2).unwrap();
        let closed: f64 = weights.iter().map(|w| w.exp()).sum();
        let oracle = brute_force_evidence(graph, &quad);
        let rel = (closed - oracle).abs() / oracle;
        assert!(
            rel < 1e-9,
            "n = {}: {closed} vs {oracle}",
            graph.num_nodes()
        );
    }
}
