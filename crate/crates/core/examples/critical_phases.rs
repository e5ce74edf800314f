//! Modulation phases at which both ends of a finite chain look alike, and
//! the inversion symmetry of the pair Hamiltonian that appears there.

use std::f64::consts::PI;

use biphoton::finite::{build_pair_hamiltonian, PairBasis};
use biphoton::interface::{critical_phases, inversion_defect, inversion_spectrum_check};
use biphoton::lattice::{build_uniform, ModelParams};

pub fn run_example() -> anyhow::Result<()> {
    for n in [99, 100, 101] {
        match critical_phases(n) {
            Ok(r) => println!("N = {n}: phi0/pi = {:?}", r.iter().map(|x| x / PI).collect::<Vec<_>>()),
            Err(e) => println!("N = {n}: {e}"),
        }
    }

    // N = 16 has the same roots as N = 100.
    let n = 16;
    let basis = PairBasis::new(n);
    let roots = critical_phases(n)?;
    for phi0 in [roots[0], roots[0] + 0.3] {
        let h = build_pair_hamiltonian(&build_uniform(&ModelParams::default().with_n_qubits(n).with_phi0(phi0))?)?;
        println!(
            "phi0 = {:.6}: commutator {:.1e}, sector spectra differ by {:.1e}",
            phi0,
            inversion_defect(&h, &basis),
            inversion_spectrum_check(&h, &basis)?
        );
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
