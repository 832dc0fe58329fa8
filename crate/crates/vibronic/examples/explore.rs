// Scratch exploration of the pulse dynamics used to calibrate defaults.

use rayon::prelude::*;
use std::time::Instant;
use vibronic::dynamics::{evolve_pure, IntegratorConfig};
use vibronic::hilbert::{basis_state, BasisSpec};
use vibronic::measures::state_probabilities;
use vibronic::model::{ModelParams, PulseProtocol};

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn log2_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp2())
        .collect()
}

fn main() {
    let t0 = Instant::now();

    // N=1 from X, full curve
    let vs = log2_grid(-7.0, 1.0, 48);
    let params = ModelParams::resonant(1, 1.0);
    let basis = BasisSpec::new(1, 40).unwrap();
    let pts: Vec<(f64, f64)> = vs
        .par_iter()
        .map(|&v| {
            let protocol = PulseProtocol::up_down_linear(v, 1.0).unwrap();
            let initial = basis_state(&basis, 1, 0).unwrap();
            let times = vec![0.0, protocol.duration()];
            let traj = evolve_pure(
                &initial,
                &params,
                &protocol,
                &IntegratorConfig::pure_default(),
                &times,
            )
            .unwrap();
            let probs = state_probabilities(traj.pure_states().unwrap().last().unwrap());
            (v, probs.ground())
        })
        .collect();
    println!("== N=1 from X: final P(Y) ==");
    for (v, py) in &pts {
        println!("v={v:.5} log2v={:+.3}  P(Y)={py:.4}", v.log2());
    }

    // cutoff convergence for N=15 at the slowest relevant v
    println!("\n== N=15 cutoff convergence at v=0.03 ==");
    let mut prev: Option<Vec<f64>> = None;
    for n_max in [40usize, 56, 64, 72] {
        let t1 = Instant::now();
        let params = ModelParams::resonant(15, 1.0);
        let basis = BasisSpec::new(15, n_max).unwrap();
        let protocol = PulseProtocol::up_down_linear(0.03, 1.0).unwrap();
        let initial = basis_state(&basis, -15, 0).unwrap();
        let times = vec![0.0, protocol.duration()];
        let traj = evolve_pure(&initial, &params, &protocol, &IntegratorConfig::pure_default(), &times).unwrap();
        let probs = state_probabilities(traj.pure_states().unwrap().last().unwrap())
            .probs()
            .to_vec();
        if let Some(p) = &prev {
            let delta = p.iter().zip(&probs).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            println!("n_max={n_max}: delta from previous = {delta:.3e}  [t={:?}]", t1.elapsed());
        } else {
            println!("n_max={n_max}: baseline  [t={:?}]", t1.elapsed());
        }
        prev = Some(probs);
    }

    println!("[total {:?}]", t0.elapsed());
}
