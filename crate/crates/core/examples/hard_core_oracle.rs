//! The hard-core pair basis against two bosons with a large on-site
//! energy: the lowest N(N−1)/2 bosonic levels converge to the pair spectrum.

use biphoton::eig::eigvals_dense;
use biphoton::finite::{bosonic_oracle_spectrum, build_pair_hamiltonian};
use biphoton::lattice::{build_uniform, ModelParams};

pub fn run_example() -> anyhow::Result<()> {
    for n in [4, 5, 6] {
        let array = build_uniform(&ModelParams::default().with_n_qubits(n).with_phi0(0.4))?;
        let hard = eigvals_dense(&build_pair_hamiltonian(&array)?.view())?;
        for chi in [1e2, 1e4, 1e6] {
            let soft = bosonic_oracle_spectrum(&array, chi)?;
            let worst = hard
                .iter()
                .zip(soft.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            println!("N = {n}, chi = {chi:>7.0e}: largest deviation {worst:.2e}");
        }
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
