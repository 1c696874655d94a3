//! Independent reference computations checked against the library.

mod common;

use nalgebra::DMatrix;

use cgtrack::algorithms::{Accounting, Algorithm, AlgorithmParams, Simulation};
use cgtrack::compressors::CompressorSpec;
use cgtrack::costs::{AgentCost, CostSpec, CostSuite};
use cgtrack::graph::{generate_network, ring, spectral_gap, Network};
use cgtrack::harness::initial_state;
use cgtrack::linalg::AgentMatrix;

fn sigma_by_svd(net: &Network) -> f64 {
    let n = net.n;
    let m = DMatrix::from_row_slice(n, n, &net.w) - DMatrix::from_element(n, n, 1.0 / n as f64);
    m.singular_values().max()
}

#[test]
fn spectral_norm_matches_svd() {
    for seed in 0..40 {
        let n = 3 + (seed as usize % 15);
        let density = [0.2, 0.4, 0.7, 1.0][seed as usize % 4];
        let net = generate_network(n, density, seed).unwrap();
        let oracle = sigma_by_svd(&net);
        assert!((net.sigma - oracle).abs() <= 1e-8, "n={n} seed={seed}: {} vs {oracle}", net.sigma);
    }
}

#[test]
fn ring_spectrum_in_closed_form() {
    for n in 3..30 {
        let net = ring(n).unwrap();
        let expected = (1..n)
            .map(|k| (0.5 + 0.5 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).abs())
            .fold(0.0, f64::max);
        assert!((net.sigma - expected).abs() <= 1e-9, "n={n}: {} vs {expected}", net.sigma);
        let eig = DMatrix::from_row_slice(n, n, &net.w).symmetric_eigenvalues();
        let mut brute: Vec<f64> = eig.iter().copied().collect();
        brute.sort_by(f64::total_cmp);
        let mut closed: Vec<f64> = (0..n).map(|k| 0.5 + 0.5 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
        closed.sort_by(f64::total_cmp);
        for (a, b) in brute.iter().zip(&closed) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn metropolis_weights_by_hand() {
    for seed in 0..20 {
        let net = generate_network(8, 0.4, seed).unwrap();
        let n = net.n;
        let deg: Vec<usize> = (0..n).map(|i| net.edges.iter().filter(|e| e[0] == i).count()).collect();
        let lazy = net.w.iter().enumerate().any(|(idx, &w)| idx / n != idx % n && w > 0.0 && {
            let (i, j) = (idx / n, idx % n);
            (w - 1.0 / (1.0 + deg[i].max(deg[j]) as f64)).abs() > 1e-15
        });
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let linked = net.edges.contains(&[j, i]);
                let mut expected = if linked { 1.0 / (1.0 + deg[i].max(deg[j]) as f64) } else { 0.0 };
                if lazy {
                    expected *= 0.5;
                }
                assert_eq!(net.weight(i, j), expected, "seed {seed}: W[{i}][{j}]");
            }
        }
    }
}

#[test]
fn spectral_gap_of_trivial_matrices() {
    let n = 5;
    let avg = vec![1.0 / n as f64; n * n];
    assert!(spectral_gap(&avg, n).unwrap() < 1e-12);
    let mut id = vec![0.0; n * n];
    (0..n).for_each(|i| id[i * n + i] = 1.0);
    assert!((spectral_gap(&id, n).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn pl_constant_by_eigendecomposition() {
    for seed in 0..10 {
        let spec = CostSpec { rank_deficit: (seed % 3) as usize, ..CostSpec::quadratic(6, 5, seed) };
        let suite = CostSuite::generate(&spec).unwrap();
        let mut gram = DMatrix::<f64>::zeros(5, 5);
        for a in &suite.agents {
            let AgentCost::Quadratic { rows, mat, .. } = a else { unreachable!() };
            let m = DMatrix::from_row_slice(*rows, 5, mat);
            gram += m.transpose() * m;
        }
        gram /= suite.n as f64;
        let eig = gram.symmetric_eigenvalues();
        let nu = eig.iter().copied().filter(|&e| e > 1e-9).fold(f64::INFINITY, f64::min);
        assert!((suite.nu_pl.unwrap() - nu).abs() <= 1e-10 * nu.max(1.0));
        let l = suite.agents.iter().map(|a| a.analytic_lipschitz(5)).fold(0.0, f64::max);
        assert!((suite.l_f - l).abs() <= 1e-12);
    }
}

/// Plain DGT written densely with matrices, as an oracle for the agent-level code.
#[test]
fn dgt_matches_dense_recursion() {
    let n = 6;
    let d = 4;
    let net = generate_network(n, 0.5, 3).unwrap();
    let suite = CostSuite::generate(&CostSpec::logistic(n, d, 3)).unwrap();
    let x0 = initial_state(n, d, 1.0, 3);
    let (eta, gamma) = (0.05, 0.7);
    let mut sim = Simulation::new(
        Algorithm::Dgt,
        net.clone(),
        suite.clone(),
        CompressorSpec::identity(),
        AlgorithmParams::new(eta, gamma),
        &x0,
        0,
        Accounting::default(),
    )
    .unwrap();
    let w = DMatrix::from_row_slice(n, n, &net.w);
    let mix = DMatrix::identity(n, n) * (1.0 - gamma) + w * gamma;
    let grads = |x: &DMatrix<f64>| {
        DMatrix::from_fn(n, d, |i, t| suite.grad(i, &x.row(i).iter().copied().collect::<Vec<_>>()).unwrap()[t])
    };
    let mut x = DMatrix::from_row_slice(n, d, x0.as_slice());
    let mut g = grads(&x);
    let mut y = g.clone();
    for _ in 0..100 {
        let x_new = &mix * &x - &y * eta;
        let g_new = grads(&x_new);
        y = &mix * &y + &g_new - &g;
        x = x_new;
        g = g_new;
        sim.step().unwrap();
    }
    let as_matrix = |m: &AgentMatrix| DMatrix::from_row_slice(n, d, m.as_slice());
    assert!((as_matrix(&sim.x()) - &x).amax() < 1e-12);
    assert!((as_matrix(&sim.y()) - &y).amax() < 1e-12);
}
