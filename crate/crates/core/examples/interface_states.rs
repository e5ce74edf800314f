//! Long-lived states at the junction of two arrays with opposite
//! modulation phase, and the bound states pinned to the outer edges.

use biphoton::interface::{interface_ansatz, search_interface, InterfaceCriteria, SearchOptions};
use biphoton::lattice::ModelParams;

pub fn run_example() -> anyhow::Result<()> {
    let params = ModelParams::default().with_n_qubits(90);
    let ia = interface_ansatz(&params)?;
    println!(
        "single-excitation ingredients: interface {:.6}, left half {:.6}",
        ia.eps_interface, ia.eps_left
    );

    let opts = SearchOptions {
        edge_segment: Some((5.45, 5.90)),
        ..SearchOptions::default()
    };
    let found = search_interface(&params, &InterfaceCriteria::default(), &opts)?;
    let s = &found.interface_state;
    println!(
        "interface state: eps = {:.8}, Gamma = {:.3e}, T = {:.2}, fidelity {:.3} (symmetric {:.3})",
        s.energy,
        s.decay_rate,
        s.tilt,
        s.fidelity.unwrap_or(f64::NAN),
        found.symmetric_fidelity
    );

    if let Some(edge) = &found.edge {
        let (lo, hi) = edge
            .bound_edge
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), e| (a.min(e.decay_rate), b.max(e.decay_rate)));
        println!("{} bound edge states, Gamma in [{lo:.2e}, {hi:.2e}]", edge.bound_edge.len());
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
