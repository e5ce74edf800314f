//! Bound-state bands of the infinite modulated chain.
//!
//! Solves the center-of-mass Bloch problem on a few K points, prints every
//! eigenvalue with bound probability above 0.25, and compares the far-apart
//! pairs at K = 0 with sums of single-excitation energies.

use std::f64::consts::PI;

use biphoton::bloch::{band_solve, build_bloch_matrix, scattering_energy, DEFAULT_DELTA0};
use biphoton::chern::{bound_points, BandWindow};
use biphoton::lattice::ModelParams;

pub fn run_example() -> anyhow::Result<()> {
    let params = ModelParams::default().with_trunc(40);
    let window = BandWindow::default();

    println!("{:>8} {:>3} {:>12} {:>12} {:>8}", "K/pi", "#", "Re E", "Im E", "P");
    for i in 0..=6 {
        let k = -PI / 3.0 + i as f64 * PI / 9.0;
        let bound = bound_points(&params, k, 0.0, DEFAULT_DELTA0, &window)?;
        for b in &bound {
            println!(
                "{:>8.4} {:>3} {:>12.6} {:>12.2e} {:>8.4}",
                k / PI,
                b.band_index,
                b.energy.re,
                b.energy.im,
                b.bound_probability
            );
        }
    }

    // Scattering states: small bound probability, energies close to the
    // continuum spanned by pairs of single-excitation energies.
    let block = build_bloch_matrix(&params, 0.0, 0.0)?;
    let points = band_solve(&block, DEFAULT_DELTA0)?;
    let continuum: Vec<f64> = (0..2000)
        .map(|i| 4.0 * PI / 3.0 * (i as f64 + 0.5) / 2000.0)
        .filter_map(|kappa| scattering_energy(&params, 0.0, kappa).ok())
        .flatten()
        .map(|e| e.re)
        .collect();
    let scattering: Vec<_> = points
        .iter()
        .filter(|p| p.bound_probability < 0.25 && p.energy.re.abs() < 5.0 && p.energy.im.abs() < 0.05)
        .collect();
    let worst = scattering
        .iter()
        .map(|p| {
            continuum
                .iter()
                .map(|e| (e - p.energy.re).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    println!(
        "K = 0: {} scattering states, farthest {:.2e} from the two-excitation continuum",
        scattering.len(),
        worst
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
