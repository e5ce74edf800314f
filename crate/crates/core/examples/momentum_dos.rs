//! Wave-vector-resolved density of two-excitation states for a finite
//! array, compared with the Bloch bound-state bands.
//!
//! The states come from a shift-invert scan along the bound-band energies,
//! so no full diagonalisation is needed.

use biphoton::bloch::DEFAULT_DELTA0;
use biphoton::chern::BandWindow;
use biphoton::dos::{dos, k_axis, reference_ridges, ridge_check, CellRange, DosSettings};
use biphoton::lattice::{build_uniform, ModelParams};
use biphoton::shift_invert::{cover_segment, ArnoldiOptions};

pub fn run_example() -> anyhow::Result<()> {
    let n = 120;
    let params = ModelParams::default().with_n_qubits(n).with_trunc(40);
    let array = build_uniform(&params)?;

    let ks = k_axis(41);
    let reference = reference_ridges(&params, 0.0, &ks, DEFAULT_DELTA0, &BandWindow::default())?;
    let lo = reference.iter().map(|r| r[0]).fold(f64::INFINITY, f64::min) - 0.005;
    let hi = reference.iter().map(|r| r[1]).fold(f64::NEG_INFINITY, f64::max) + 0.005;

    let spectrum = cover_segment(&array, 2.0 * lo, 2.0 * hi, -0.02, &ArnoldiOptions::new(30), 1e-9, 100)?;
    println!("{} pair states with E in [{lo:.4}, {hi:.4}]", spectrum.len());

    let cells = CellRange { offset: 4, count: 30 };
    let mut settings = DosSettings::auto(4e-3, 10, cells, lo, hi)?;
    settings.n_k = ks.len();
    let grid = dos(&spectrum, &array, &settings)?;
    let check = ridge_check(&grid, &reference, 0.005)?;
    println!(
        "ridge deviation from the two upper bands: {:.4} and {:.4} (3 sigma + dE = {:.4}), {} of {} K points outside",
        check.max_deviation[0],
        check.max_deviation[1],
        check.tolerance,
        check.failures,
        ks.len()
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
