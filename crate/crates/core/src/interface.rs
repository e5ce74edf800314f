//! Interface geometry: long-lived interface states, bound edge states, the
//! antisymmetric product ansatz and the critical modulation phases.

use std::f64::consts::TAU;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use num_complex::Complex64;
use serde::Serialize;

use crate::eig::{eig_dense, eigvals_dense, multiset_distance, EigResult};
use crate::error::{Error, Result};
use crate::finite::{bound_weight, tilted_degree, PairBasis, TwoExSpectrum, DEFAULT_TILT};
use crate::lattice::{build_interface, build_uniform, reduce_phase, ModelParams, QubitArray};
use crate::shift_invert::{cover_segment, eigs_near, ArnoldiOptions, PairResolvent};

/// Single-excitation eigenpairs, most subradiant (smallest `−Im ε`) first.
pub fn single_excitation_spectrum(array: &QubitArray) -> Result<EigResult> {
    let r = eig_dense(&array.kernel_matrix().view())?;
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| (-r.values[a].im).total_cmp(&(-r.values[b].im)).then(a.cmp(&b)));
    Ok(EigResult {
        values: order.iter().map(|&i| r.values[i]).collect(),
        vectors: r.vectors.select(Axis(1), &order),
        residuals: order.iter().map(|&i| r.residuals[i]).collect(),
    })
}

/// Pair state built from two single-excitation states.
#[derive(Clone, Debug)]
pub struct AnsatzState {
    pub c: Array1<Complex64>,
    pub f: Array1<Complex64>,
    pub psi: Array1<Complex64>,
}

fn product_state(
    c: &ArrayView1<Complex64>,
    f: &ArrayView1<Complex64>,
    sign: f64,
) -> Result<AnsatzState> {
    if c.len() != f.len() {
        return Err(Error::InvalidParam("c and f must have the same length".into()));
    }
    let basis = PairBasis::new(c.len());
    let mut psi = Array1::from_iter(
        basis
            .pairs()
            .iter()
            .map(|&(j, l)| c[j - 1] * f[l - 1] + sign * c[l - 1] * f[j - 1]),
    );
    let nrm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        * f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(nrm > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::InvalidParam(
            "ansatz vanishes: c and f are proportional".into(),
        ));
    }
    psi.mapv_inplace(|z| z / nrm);
    Ok(AnsatzState {
        c: c.to_owned(),
        f: f.to_owned(),
        psi,
    })
}

/// `ψ_{j,l} ∝ c_j f_l − c_l f_j` for `j < l`, normalised.
pub fn build_ansatz(c: &ArrayView1<Complex64>, f: &ArrayView1<Complex64>) -> Result<AnsatzState> {
    product_state(c, f, -1.0)
}

/// The symmetric counterpart `c_j f_l + c_l f_j`, for comparison.
pub fn build_symmetric_ansatz(
    c: &ArrayView1<Complex64>,
    f: &ArrayView1<Complex64>,
) -> Result<AnsatzState> {
    product_state(c, f, 1.0)
}

/// `|⟨a|x⟩|²` for unit vectors.
pub fn fidelity(a: &ArrayView1<Complex64>, x: &ArrayView1<Complex64>) -> f64 {
    a.iter().zip(x).map(|(p, q)| p.conj() * q).sum::<Complex64>().norm_sqr()
}

/// Ingredients of the interface ansatz for one array size.
#[derive(Clone, Debug)]
pub struct InterfaceAnsatz {
    pub ansatz: AnsatzState,
    pub symmetric: AnsatzState,
    /// Most subradiant single-excitation energy of the full interface array.
    pub eps_interface: Complex64,
    /// Most subradiant single-excitation energy of the standalone left half.
    pub eps_left: Complex64,
}

impl InterfaceAnsatz {
    /// Pair-energy estimate `ε_c + ε_f`.
    pub fn energy_guess(&self) -> Complex64 {
        self.eps_interface + self.eps_left
    }
}

/// `c`: most subradiant state of the interface array; `f`: most subradiant
/// state of a standalone array of the left `N/2` sites, zero elsewhere.
pub fn interface_ansatz(params: &ModelParams) -> Result<InterfaceAnsatz> {
    let full = build_interface(params)?;
    let n = full.len();
    let left = build_uniform(&params.clone().with_phi0(0.0).with_n_qubits(n / 2))?;
    let sc = single_excitation_spectrum(&full)?;
    let sl = single_excitation_spectrum(&left)?;
    let c = sc.vectors.column(0).to_owned();
    let mut f = Array1::<Complex64>::zeros(n);
    f.slice_mut(ndarray::s![..n / 2]).assign(&sl.vectors.column(0));
    Ok(InterfaceAnsatz {
        ansatz: build_ansatz(&c.view(), &f.view())?,
        symmetric: build_symmetric_ansatz(&c.view(), &f.view())?,
        eps_interface: sc.values[0],
        eps_left: sl.values[0],
    })
}

/// Thresholds for classifying states of an interface array.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterfaceCriteria {
    /// Long-lived states: `Γ` below this.
    pub gamma_long: f64,
    /// Edge states: `|T| > tilt_fraction · N`.
    pub tilt_fraction: f64,
    pub tilt_g: f64,
    /// Edge states must be bound: weight on `l − j ≤ bound_cutoff` above `min_bound_weight`.
    pub bound_cutoff: usize,
    pub min_bound_weight: f64,
    /// Bound edge states must lie in this range of per-excitation energy.
    pub edge_energy: (f64, f64),
}

impl Default for InterfaceCriteria {
    fn default() -> Self {
        Self {
            gamma_long: 1e-6,
            tilt_fraction: 0.25,
            tilt_g: DEFAULT_TILT,
            bound_cutoff: 5,
            min_bound_weight: 0.5,
            edge_energy: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// One classified state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateSummary {
    pub index: usize,
    pub energy: Complex64,
    pub decay_rate: f64,
    pub tilt: f64,
    pub bound_weight: f64,
    pub fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterfaceClasses {
    /// Most subradiant among the supplied states.
    pub most_subradiant: Option<StateSummary>,
    pub long_lived: Vec<StateSummary>,
    pub bound_edge: Vec<StateSummary>,
    /// Highest antisymmetric-ansatz fidelity, when an ansatz is given.
    pub best_ansatz_match: Option<StateSummary>,
}

/// Sort the states of `spectrum` into the classes above.
pub fn find_interface_states(
    spectrum: &TwoExSpectrum,
    criteria: &InterfaceCriteria,
    ansatz: Option<&AnsatzState>,
) -> Result<InterfaceClasses> {
    let n = spectrum.basis.n_sites() as f64;
    let summaries: Vec<StateSummary> = (0..spectrum.len())
        .map(|v| {
            let s = spectrum.state(v);
            let e = spectrum.pair_energies()[v];
            Ok(StateSummary {
                index: v,
                energy: e,
                decay_rate: -e.im,
                tilt: tilted_degree(&spectrum.basis, &s, criteria.tilt_g),
                bound_weight: bound_weight(&spectrum.basis, &s, criteria.bound_cutoff)?,
                fidelity: ansatz.map(|a| fidelity(&a.psi.view(), &s)),
            })
        })
        .collect::<Result<_>>()?;
    let most_subradiant = summaries
        .iter()
        .min_by(|a, b| a.decay_rate.total_cmp(&b.decay_rate))
        .cloned();
    let long_lived = summaries
        .iter()
        .filter(|s| s.decay_rate < criteria.gamma_long)
        .cloned()
        .collect();
    let (lo, hi) = criteria.edge_energy;
    let bound_edge = summaries
        .iter()
        .filter(|s| {
            let e = s.energy.re / 2.0;
            s.tilt.abs() > criteria.tilt_fraction * n
                && s.bound_weight > criteria.min_bound_weight
                && e >= lo
                && e <= hi
        })
        .cloned()
        .collect();
    let best_ansatz_match = summaries
        .iter()
        .filter(|s| s.fidelity.is_some())
        .max_by(|a, b| a.fidelity.unwrap().total_cmp(&b.fidelity.unwrap()))
        .cloned();
    Ok(InterfaceClasses {
        most_subradiant,
        long_lived,
        bound_edge,
        best_ansatz_match,
    })
}

/// Settings of the targeted interface-array search.
#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// States computed around the ansatz energy.
    pub nev_interface: usize,
    /// States per disk when scanning for bound edge states.
    pub nev_edge: usize,
    /// Pair-energy segment scanned for bound edge states, and its imaginary offset.
    pub edge_segment: Option<(f64, f64)>,
    pub edge_offset: f64,
    pub residual_tol: f64,
    pub max_disks: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            nev_interface: 10,
            nev_edge: 30,
            edge_segment: None,
            edge_offset: -0.03,
            residual_tol: 1e-9,
            max_disks: 200,
        }
    }
}

/// Result of the targeted search for one array size.
#[derive(Clone, Debug, Serialize)]
pub struct InterfaceSearch {
    pub n: usize,
    pub energy_guess: Complex64,
    /// State with the highest antisymmetric-ansatz fidelity.
    pub interface_state: StateSummary,
    /// Fidelity of the symmetric combination with the same state.
    pub symmetric_fidelity: f64,
    pub near_guess: InterfaceClasses,
    pub edge: Option<InterfaceClasses>,
}

/// Locate the interface state near the ansatz energy and, optionally, the
/// bound edge states along a pair-energy segment.
pub fn search_interface(
    params: &ModelParams,
    criteria: &InterfaceCriteria,
    opts: &SearchOptions,
) -> Result<InterfaceSearch> {
    let array = build_interface(params)?;
    let ia = interface_ansatz(params)?;
    let guess = ia.energy_guess();
    let r = PairResolvent::new(&array, Complex64::new(guess.re, 0.0))?;
    let near = eigs_near(&r, &ArnoldiOptions::new(opts.nev_interface), opts.residual_tol)?;
    let classes = find_interface_states(&near, criteria, Some(&ia.ansatz))?;
    let best = classes
        .best_ansatz_match
        .clone()
        .ok_or_else(|| Error::Solver("no states found near the ansatz energy".into()))?;
    let symmetric_fidelity = fidelity(&ia.symmetric.psi.view(), &near.state(best.index));
    let edge = match opts.edge_segment {
        None => None,
        Some((a, b)) => {
            let s = cover_segment(
                &array,
                a,
                b,
                opts.edge_offset,
                &ArnoldiOptions::new(opts.nev_edge),
                opts.residual_tol,
                opts.max_disks,
            )?;
            Some(find_interface_states(&s, criteria, None)?)
        }
    };
    Ok(InterfaceSearch {
        n: array.len(),
        energy_guess: guess,
        interface_state: best,
        symmetric_fidelity,
        near_guess: classes,
        edge,
    })
}

/// Difference of the nearest-neighbour displacements at the two ends of a
/// uniform array of `n` qubits (sites 1, 2 and N−1, N), up to the factor δ.
pub fn edge_mismatch(n: usize, phi0: f64) -> f64 {
    let c = |j: f64| (TAU * j / 3.0 + phi0).cos();
    let nf = n as f64;
    (c(2.0) - c(1.0)) - (c(nf) - c(nf - 1.0))
}

/// Phases in `[0, 2π)` at which both ends of an `n`-site array look alike,
/// found by sign-change bracketing and bisection.
pub fn critical_phases(n: usize) -> Result<Vec<f64>> {
    if n < 4 {
        return Err(Error::InvalidParam(format!("need N >= 4, got {n}")));
    }
    const SAMPLES: usize = 3600;
    let g = |x: f64| edge_mismatch(n, x);
    let xs: Vec<f64> = (0..=SAMPLES).map(|i| TAU * i as f64 / SAMPLES as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    if vals.iter().all(|v| v.abs() < 1e-12) {
        return Err(Error::InvalidParam(format!(
            "every phase is critical for N = {n} (N ≡ 2 mod 3)"
        )));
    }
    let mut roots: Vec<f64> = Vec::new();
    for i in 0..SAMPLES {
        let (a, b) = (xs[i], xs[i + 1]);
        let (fa, fb) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb > 0.0 || fb == 0.0 {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (a, b, fa);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = g(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    let mut out: Vec<f64> = Vec::new();
    for r in roots.into_iter().map(reduce_phase) {
        let dup = out
            .iter()
            .any(|&q: &f64| (q - r).abs() < 1e-9 || (TAU - (q - r).abs()) < 1e-9);
        if !dup {
            out.push(r);
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    Ok(out)
}

/// Largest change of `H₂` under `(j, l) → (N+1−l, N+1−j)`.
pub fn inversion_defect(h: &Array2<Complex64>, basis: &PairBasis) -> f64 {
    let p = basis.inversion_permutation();
    let mut worst: f64 = 0.0;
    for r in 0..h.nrows() {
        for c in 0..h.ncols() {
            worst = worst.max((h[[p[r], p[c]]] - h[[r, c]]).norm());
        }
    }
    worst
}

/// Blocks of `H₂` on the even and odd subspaces of the inversion.
pub fn inversion_sectors(h: &Array2<Complex64>, basis: &PairBasis) -> (Array2<Complex64>, Array2<Complex64>) {
    let p = basis.inversion_permutation();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // Each sector vector has at most two entries: (index, coefficient) pairs.
    let mut even: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut odd: Vec<Vec<(usize, f64)>> = Vec::new();
    for i in 0..p.len() {
        match p[i].cmp(&i) {
            std::cmp::Ordering::Equal => even.push(vec![(i, 1.0)]),
            std::cmp::Ordering::Greater => {
                even.push(vec![(i, r), (p[i], r)]);
                odd.push(vec![(i, r), (p[i], -r)]);
            }
            std::cmp::Ordering::Less => {}
        }
    }
    let project = |q: &[Vec<(usize, f64)>]| {
        Array2::from_shape_fn((q.len(), q.len()), |(a, b)| {
            let mut s = Complex64::new(0.0, 0.0);
            for &(i, x) in &q[a] {
                for &(j, y) in &q[b] {
                    s += h[[i, j]] * (x * y);
                }
            }
            s
        })
    };
    (project(&even), project(&odd))
}

/// Spectral form of the inversion test: the even and odd sector spectra
/// together reproduce the full spectrum only if `H₂` commutes with the
/// inversion. Returns the multiset distance.
pub fn inversion_spectrum_check(h: &Array2<Complex64>, basis: &PairBasis) -> Result<f64> {
    let full = eigvals_dense(&h.view())?;
    let (e, o) = inversion_sectors(h, basis);
    let mut parts = eigvals_dense(&e.view())?.to_vec();
    parts.extend(eigvals_dense(&o.view())?.iter());
    Ok(multiset_distance(full.as_slice().unwrap(), &parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use crate::finite::{build_pair_hamiltonian, solve_dense};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_excitation_trace_and_order() {
        let a = build_interface(&ModelParams::default().with_n_qubits(40)).unwrap();
        let g = a.kernel_matrix();
        assert!(g.diag().iter().all(|z| (z - c(0.0, -1.0)).norm() == 0.0));
        let s = single_excitation_spectrum(&a).unwrap();
        let tr: Complex64 = s.values.sum();
        assert!((tr - c(0.0, -40.0)).norm() < 1e-10);
        for w in s.values.as_slice().unwrap().windows(2) {
            assert!(-w[0].im <= -w[1].im);
        }
    }

    #[test]
    fn interface_state_sits_at_the_junction() {
        let a = build_interface(&ModelParams::default().with_n_qubits(150)).unwrap();
        let s = single_excitation_spectrum(&a).unwrap();
        let v = s.vectors.column(0);
        let near: f64 = (70..80).map(|i| v[i].norm_sqr()).sum();
        assert!(near > 0.5, "weight near the junction {near}");
        assert!(-s.values[0].im < 1e-9);
    }

    #[test]
    fn ansatz_examples() {
        let n = 6;
        let e = |i: usize| {
            let mut v = Array1::<Complex64>::zeros(n);
            v[i] = c(1.0, 0.0);
            v
        };
        let a = build_ansatz(&e(0).view(), &e(1).view()).unwrap();
        let b = PairBasis::new(n);
        let i12 = b.index_of(1, 2).unwrap();
        assert!((a.psi[i12].norm() - 1.0).abs() < 1e-15);
        assert!(a.psi.iter().enumerate().all(|(i, z)| i == i12 || z.norm() == 0.0));
        assert!(build_ansatz(&e(2).view(), &e(2).view()).is_err());
        let f = e(3).mapv(|z| z * c(0.0, 2.0));
        assert!(build_ansatz(&e(3).view(), &f.view()).is_err());
    }

    #[test]
    fn critical_phases_for_n100() {
        let r = critical_phases(100).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - 5.0 * PI / 6.0).abs() < 1e-10);
        assert!((r[1] - 11.0 * PI / 6.0).abs() < 1e-10);
        assert!((r[0] / TAU - (0.4 + 1.0 / 60.0)).abs() < 1e-10);
        assert!(critical_phases(101).is_err());
    }

    #[test]
    fn roots_shift_with_size() {
        // Adding one cell leaves the roots unchanged; other sizes move them by
        // multiples of 2π/3 (and possibly π).
        let a = critical_phases(100).unwrap();
        let b = critical_phases(103).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        let c = critical_phases(99).unwrap();
        assert_eq!(c.len(), 2);
        assert!(((c[1] - c[0]) - PI).abs() < 1e-10);
    }

    #[test]
    fn inversion_symmetry_only_at_critical_phase() {
        let n = 16; // 16 ≡ 1 (mod 3), same roots as N = 100
        for phi0 in critical_phases(n).unwrap() {
            let a = build_uniform(&ModelParams::default().with_n_qubits(n).with_phi0(phi0)).unwrap();
            let h = build_pair_hamiltonian(&a).unwrap();
            let b = PairBasis::new(n);
            assert!(inversion_defect(&h, &b) < 1e-12);
            assert!(inversion_spectrum_check(&h, &b).unwrap() < 1e-8);
        }
        let a = build_uniform(&ModelParams::default().with_n_qubits(n).with_phi0(1.0)).unwrap();
        let h = build_pair_hamiltonian(&a).unwrap();
        let b = PairBasis::new(n);
        assert!(inversion_defect(&h, &b) > 1e-3);
        assert!(inversion_spectrum_check(&h, &b).unwrap() > 1e-4);
    }

    #[test]
    fn antisymmetric_ansatz_beats_symmetric() {
        let p = ModelParams::default().with_n_qubits(60);
        let ia = interface_ansatz(&p).unwrap();
        let s = solve_dense(&build_interface(&p).unwrap()).unwrap();
        let cls = find_interface_states(&s, &InterfaceCriteria::default(), Some(&ia.ansatz)).unwrap();
        let best = cls.best_ansatz_match.unwrap();
        let sym = fidelity(&ia.symmetric.psi.view(), &s.state(best.index));
        assert!(best.fidelity.unwrap() > 0.8);
        assert!(best.fidelity.unwrap() > sym);
        assert!((best.energy - ia.energy_guess()).norm() < 1e-3);
    }

    #[test]
    fn targeted_search_agrees_with_dense() {
        let p = ModelParams::default().with_n_qubits(40);
        let dense = solve_dense(&build_interface(&p).unwrap()).unwrap();
        let found = search_interface(&p, &InterfaceCriteria::default(), &SearchOptions::default()).unwrap();
        let e = found.interface_state.energy;
        assert!(dense.pair_energies().iter().any(|f| (f - e).norm() < 1e-9));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ansatz_is_normalized_and_antisymmetric(seed in any::<u64>(), n in 4usize..12) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || Array1::from_shape_fn(n, |_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let cv = draw();
            let fv = draw();
            let a = build_ansatz(&cv.view(), &fv.view()).unwrap();
            let nrm: f64 = a.psi.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((nrm - 1.0).abs() < 1e-12);
            // Swapping the roles of c and f flips the sign of every amplitude.
            let b = build_ansatz(&fv.view(), &cv.view()).unwrap();
            for (x, y) in a.psi.iter().zip(b.psi.iter()) {
                prop_assert!((x + y).norm() < 1e-12);
            }
            // Proportional inputs are rejected.
            let scaled = cv.mapv(|z| z * c(0.3, -1.2));
            prop_assert!(build_ansatz(&cv.view(), &scaled.view()).is_err());
        }

        #[test]
        fn critical_roots_solve_the_equation(n in 4usize..400) {
            match critical_phases(n) {
                Ok(r) => {
                    prop_assert_eq!(r.len(), 2);
                    for x in r {
                        prop_assert!(edge_mismatch(n, x).abs() < 1e-12);
                        prop_assert!((0.0..TAU).contains(&x));
                    }
                }
                Err(_) => prop_assert_eq!(n % 3, 2),
            }
        }
    }
}
