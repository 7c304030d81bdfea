use minsky_core::estimation::{fit_tail, Tail};
use minsky_core::network::{
    expected_failures, failure_cascade_indexed, fit_percolation, generate_network, DegreeModel, TradeNetwork,
};
use minsky_core::rng::{stream_with_offset, Stream};
use rand::seq::index::sample;
use rand::Rng;

fn trade_credit_model() -> DegreeModel {
    DegreeModel { pareto_exponent: 1.3, mean_degree: 35.5, max_degree: 10_000 }
}

#[test]
fn large_network_is_reproducible() {
    let a = generate_network(10_000, &trade_credit_model(), 11).unwrap();
    let b = generate_network(10_000, &trade_credit_model(), 11).unwrap();
    let ea: Vec<_> = a.edges().collect();
    let eb: Vec<_> = b.edges().collect();
    assert_eq!(ea, eb);
    let c = generate_network(10_000, &trade_credit_model(), 12).unwrap();
    assert_ne!(ea, c.edges().collect::<Vec<_>>());
}

#[test]
fn in_degree_tail_follows_pareto_exponent() {
    let net = generate_network(10_000, &trade_credit_model(), 5).unwrap();
    let degrees: Vec<f64> = net.in_degrees().into_iter().filter(|&d| d > 0).map(|d| d as f64).collect();
    let mean = net.edge_count() as f64 / net.node_count() as f64;
    assert!((mean / 35.5 - 1.0).abs() <= 0.1, "mean in-degree {mean}");
    let fit = fit_tail(&degrees, Tail::Upper, 35.5f64.ln()).unwrap();
    assert!((fit.slope + 1.3).abs() <= 0.15, "slope {}", fit.slope);
    assert!(fit.r_squared > 0.95, "R2 {}", fit.r_squared);
}

#[test]
fn weights_are_log_uniform_in_range() {
    let net = generate_network(2_000, &trade_credit_model(), 3).unwrap();
    let logs: Vec<f64> = net.edges().map(|(_, _, w)| w.log10()).collect();
    assert!(logs.iter().all(|&l| (0.0..=4.0).contains(&l)));
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    assert!((mean - 2.0).abs() < 0.05, "mean log10 weight {mean}");
}

const REPS: u64 = 300;

/// Mean final failure count when one random ponzi firm fails, over `REPS`
/// independent status draws on each of the given networks.
fn mean_failures(nets: &[TradeNetwork], density: f64) -> f64 {
    let mut total = 0usize;
    let mut runs = 0usize;
    for (g, net) in nets.iter().enumerate() {
        let n = net.node_count();
        let k = ((density * n as f64).round() as usize).max(1);
        for rep in 0..REPS {
            let mut rng = stream_with_offset(1000 + g as u64, Stream::Statuses, rep + (density * 1e4) as u64 * REPS);
            let ponzi = sample(&mut rng, n, k).into_vec();
            let mut susceptible = vec![false; n];
            for &i in &ponzi {
                susceptible[i] = true;
            }
            let first = ponzi[rng.random_range(0..k)];
            let rounds = failure_cascade_indexed(net, &susceptible, &[first]);
            total += 1 + rounds.iter().map(Vec::len).sum::<usize>();
            runs += 1;
        }
    }
    total as f64 / runs as f64
}

#[test]
fn percolation_fit_predicts_held_out_densities() {
    let model = DegreeModel { pareto_exponent: 2.5, mean_degree: 4.0, max_degree: 499 };
    let nets: Vec<TradeNetwork> = (1..=4).map(|s| generate_network(500, &model, s).unwrap()).collect();

    let sweep: Vec<(f64, f64)> =
        (1..=30).map(|k| k as f64 * 0.02).map(|rho| (rho, mean_failures(&nets, rho))).collect();
    let low = sweep[0].1;
    let high = sweep.last().unwrap().1;
    assert!(high > 50.0 * low, "no sharp increase: {low} -> {high}");

    // train on the even grid below the knee, hold out the interleaved odd points
    let train: Vec<&(f64, f64)> = sweep.iter().filter(|(rho, _)| *rho <= 0.161).collect();
    let densities: Vec<f64> = train.iter().map(|p| p.0).collect();
    let failures: Vec<f64> = train.iter().map(|p| p.1).collect();
    let params = fit_percolation(&densities, &failures).unwrap();
    assert!(params.rho_c > 0.161, "rho_c {}", params.rho_c);

    for rho in [0.03, 0.05, 0.07, 0.09, 0.11, 0.13, 0.15] {
        let simulated = mean_failures(&nets, rho);
        let predicted = expected_failures(rho, &params).unwrap();
        let rel = (predicted / simulated - 1.0).abs();
        assert!(rel <= 0.15, "rho {rho}: predicted {predicted}, simulated {simulated}, fit {params:?}");
    }
}
