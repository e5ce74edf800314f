//! Chern numbers of the three bound-state bands over the (K, φ₀) torus.
//!
//! Uses a modest truncation and grid so it finishes in seconds; the link
//! method still lands on the integers.

use biphoton::bloch::DEFAULT_DELTA0;
use biphoton::chern::{chern_numbers, sweep_torus, BandWindow, TorusGrid};
use biphoton::lattice::ModelParams;

pub fn run_example() -> anyhow::Result<()> {
    let params = ModelParams::default().with_trunc(30);
    let window = BandWindow::default();
    let data = sweep_torus(&params, TorusGrid::new(18, 18)?, &window, DEFAULT_DELTA0)?;
    let results = chern_numbers(&data, &window)?;

    for r in &results {
        println!(
            "band {}: link {:+} (flux {:+.6}), continuum {:+.4} over {} plaquettes, {} filled points",
            r.band, r.link_chern, r.link_flux, r.continuum_chern, r.continuum_plaquettes, r.filled_points
        );
    }
    let links: Vec<i64> = results.iter().map(|r| r.link_chern).collect();
    anyhow::ensure!(links == [-1, 2, -1], "unexpected link Chern numbers {links:?}");
    anyhow::ensure!(links.iter().sum::<i64>() == 0);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
