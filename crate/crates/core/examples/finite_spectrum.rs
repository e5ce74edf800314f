//! Full two-excitation spectrum of a finite modulated array in the
//! hard-core pair basis, with the quantities used to classify states.

use biphoton::finite::{build_pair_hamiltonian, joint_probability, solve_dense, state_records};
use biphoton::lattice::{build_uniform, ModelParams};
use num_complex::Complex64;

pub fn run_example() -> anyhow::Result<()> {
    let n = 30;
    let array = build_uniform(&ModelParams::default().with_n_qubits(n))?;
    let h = build_pair_hamiltonian(&array)?;
    println!("N = {n}: pair sector dimension {}", h.nrows());

    let spectrum = solve_dense(&array)?;
    let trace: Complex64 = spectrum.pair_energies().sum();
    println!(
        "sum of pair energies {:.10} (expected -i {})",
        trace,
        n * (n - 1)
    );

    let records = state_records(&spectrum, 0.0, 0.5, 5)?;
    let mut by_gamma: Vec<_> = records.iter().collect();
    by_gamma.sort_by(|a, b| a.decay_rate.total_cmp(&b.decay_rate));
    println!("{:>5} {:>12} {:>12} {:>8} {:>6}", "index", "Re eps", "Gamma", "T", "bound");
    for r in by_gamma.iter().take(8) {
        println!(
            "{:>5} {:>12.6} {:>12.3e} {:>8.2} {:>6.3}",
            r.index, r.energy.re, r.decay_rate, r.tilt, r.bound_weight
        );
    }

    // Joint probability of the most bound state, summed along diagonals.
    let v = records
        .iter()
        .max_by(|a, b| a.bound_weight.total_cmp(&b.bound_weight))
        .map(|r| r.index)
        .unwrap_or(0);
    let p = joint_probability(&spectrum.basis, &spectrum.state(v));
    let profile: Vec<f64> = (1..6)
        .map(|d| (0..n - d).map(|j| p[[j, j + d]] + p[[j + d, j]]).sum())
        .collect();
    println!("state {v}: weight at distance 1..5 = {profile:.3?}");
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
