//! Hard-core two-excitation sector of a finite array.
//!
//! States `|j;l⟩` with `1 ≤ j < l ≤ N` span the sector. The Hamiltonian moves
//! one excitation at a time with the single-excitation kernel `G`; moves onto
//! the occupied partner site are absent because that configuration is not in
//! the basis.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use num_complex::Complex64;

use crate::eig::{eig_dense, EigResult};
use crate::error::{Error, Result};
use crate::lattice::QubitArray;

/// Default tilt factor of the tilted degree.
pub const DEFAULT_TILT: f64 = 0.5;

/// Largest array accepted by the bosonic oracle.
pub const ORACLE_MAX_N: usize = 8;

/// Lexicographic enumeration of pairs `(j, l)`, `1 ≤ j < l ≤ N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairBasis {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairBasis {
    pub fn new(n: usize) -> Self {
        let pairs = (1..=n)
            .flat_map(|j| (j + 1..=n).map(move |l| (j, l)))
            .collect();
        Self { n, pairs }
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, index: usize) -> (usize, usize) {
        self.pairs[index]
    }

    /// Row of the unordered pair `{j, l}`; `None` for `j == l` or out-of-range sites.
    pub fn index_of(&self, j: usize, l: usize) -> Option<usize> {
        let (j, l) = if j < l { (j, l) } else { (l, j) };
        if j == l || j == 0 || l > self.n {
            return None;
        }
        Some((j - 1) * (2 * self.n - j) / 2 + (l - j - 1))
    }

    /// Permutation taking the row of `(j, l)` to the row of `(N+1−l, N+1−j)`.
    pub fn inversion_permutation(&self) -> Vec<usize> {
        let m = self.n + 1;
        self.pairs
            .iter()
            .map(|&(j, l)| self.index_of(m - l, m - j).expect("mirror pair exists"))
            .collect()
    }

    /// Pair amplitudes as a symmetric N×N matrix with zero diagonal.
    pub fn to_matrix(&self, state: &ArrayView1<Complex64>) -> Array2<Complex64> {
        let mut m = Array2::zeros((self.n, self.n));
        for (&(j, l), &a) in self.pairs.iter().zip(state) {
            m[[j - 1, l - 1]] = a;
            m[[l - 1, j - 1]] = a;
        }
        m
    }

    /// Upper-triangle entries of a site matrix, in basis order.
    pub fn from_matrix(&self, m: &ArrayView2<Complex64>) -> Array1<Complex64> {
        Array1::from_iter(self.pairs.iter().map(|&(j, l)| m[[j - 1, l - 1]]))
    }
}

/// Dense hard-core pair Hamiltonian `H₂` of an array with at least 4 qubits.
pub fn build_pair_hamiltonian(array: &QubitArray) -> Result<Array2<Complex64>> {
    let n = array.len();
    if n < 4 {
        return Err(Error::InvalidParam(format!(
            "two-excitation sector needs N >= 4, got {n}"
        )));
    }
    let g = array.kernel_matrix();
    let basis = PairBasis::new(n);
    let d = basis.len();
    let mut h = Array2::<Complex64>::zeros((d, d));
    for (col, &(j, l)) in basis.pairs().iter().enumerate() {
        for a in 1..=n {
            if a != l {
                let row = basis.index_of(a, l).unwrap();
                h[[row, col]] += g[[a - 1, j - 1]];
            }
            if a != j {
                let row = basis.index_of(a, j).unwrap();
                h[[row, col]] += g[[a - 1, l - 1]];
            }
        }
    }
    Ok(h)
}

/// `H₂ψ` without forming `H₂`: on the matrix form `Ψ` it is `GΨ + ΨGᵀ`
/// restricted to the upper triangle.
pub fn apply_pair_hamiltonian(
    basis: &PairBasis,
    g: &ArrayView2<Complex64>,
    state: &ArrayView1<Complex64>,
) -> Array1<Complex64> {
    let psi = basis.to_matrix(state);
    let gp = g.dot(&psi);
    let out = &gp + &gp.t();
    basis.from_matrix(&out.view())
}

/// Eigenvalues of the literal two-boson Hamiltonian with on-site energy
/// `chi` on doubly occupied sites, including those states.
pub fn bosonic_oracle_spectrum(array: &QubitArray, chi: f64) -> Result<Array1<Complex64>> {
    let n = array.len();
    if n > ORACLE_MAX_N {
        return Err(Error::InvalidParam(format!(
            "bosonic oracle is limited to N <= {ORACLE_MAX_N}, got {n}"
        )));
    }
    let g = array.kernel_matrix();
    // Orthonormal symmetric basis of the two-boson space inside C^N ⊗ C^N.
    let mut states: Vec<Array1<Complex64>> = Vec::new();
    for j in 0..n {
        for l in j..n {
            let mut v = Array1::<Complex64>::zeros(n * n);
            if j == l {
                v[j * n + j] = Complex64::new(1.0, 0.0);
            } else {
                let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                v[j * n + l] = s;
                v[l * n + j] = s;
            }
            states.push(v);
        }
    }
    // Two-body operator: G ⊗ 1 + 1 ⊗ G, plus chi on |jj⟩.
    let apply = |v: &Array1<Complex64>| -> Array1<Complex64> {
        let mut out = Array1::<Complex64>::zeros(n * n);
        for a in 0..n {
            for b in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    acc += g[[a, c]] * v[c * n + b] + g[[b, c]] * v[a * n + c];
                }
                if a == b {
                    acc += chi * v[a * n + a];
                }
                out[a * n + b] = acc;
            }
        }
        out
    };
    let d = states.len();
    let images: Vec<Array1<Complex64>> = states.iter().map(apply).collect();
    let h = Array2::from_shape_fn((d, d), |(r, c)| {
        states[r]
            .iter()
            .zip(images[c].iter())
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
    });
    crate::eig::eigvals_dense(&h.view())
}

/// Eigenpairs of `H₂` (all of them, or a targeted subset).
#[derive(Clone, Debug)]
pub struct TwoExSpectrum {
    pub basis: PairBasis,
    pub eig: EigResult,
    /// True when `eig` holds the whole spectrum.
    pub complete: bool,
}

impl TwoExSpectrum {
    pub fn len(&self) -> usize {
        self.eig.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eig.is_empty()
    }

    /// Pair energies `ε_v`.
    pub fn pair_energies(&self) -> &Array1<Complex64> {
        &self.eig.values
    }

    /// Per-excitation energies `E_v = ε_v / 2`, the convention of the Bloch bands.
    pub fn per_excitation_energies(&self) -> Array1<Complex64> {
        self.eig.values.mapv(|e| e / 2.0)
    }

    /// `Γ_v = −Im ε_v`.
    pub fn decay_rates(&self) -> Array1<f64> {
        self.eig.values.mapv(|e| -e.im)
    }

    pub fn state(&self, v: usize) -> ArrayView1<'_, Complex64> {
        self.eig.vectors.column(v)
    }

    /// Index of the state with the smallest decay rate.
    pub fn most_subradiant(&self) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| {
            (-self.eig.values[a].im).total_cmp(&(-self.eig.values[b].im))
        })
    }
}

/// Full dense diagonalisation of the pair sector.
pub fn solve_dense(array: &QubitArray) -> Result<TwoExSpectrum> {
    let h = build_pair_hamiltonian(array)?;
    let eig = eig_dense(&h.view())?;
    Ok(TwoExSpectrum {
        basis: PairBasis::new(array.len()),
        eig,
        complete: true,
    })
}

/// `T = Σ g (j + l − N − 1) |ψ_{j,l}|²`.
pub fn tilted_degree(basis: &PairBasis, state: &ArrayView1<Complex64>, g: f64) -> f64 {
    let m = (basis.n_sites() + 1) as f64;
    basis
        .pairs()
        .iter()
        .zip(state)
        .map(|(&(j, l), a)| g * ((j + l) as f64 - m) * a.norm_sqr())
        .sum()
}

/// `|ψ_{j,l}|²` as an N×N matrix, mirrored across the diagonal for display.
pub fn joint_probability(basis: &PairBasis, state: &ArrayView1<Complex64>) -> Array2<f64> {
    let n = basis.n_sites();
    let mut p = Array2::zeros((n, n));
    for (&(j, l), a) in basis.pairs().iter().zip(state) {
        let w = a.norm_sqr();
        p[[j - 1, l - 1]] = w;
        p[[l - 1, j - 1]] = w;
    }
    p
}

/// Weight on pairs with `l − j ≤ delta0`.
pub fn bound_weight(basis: &PairBasis, state: &ArrayView1<Complex64>, delta0: usize) -> Result<f64> {
    if delta0 < 1 {
        return Err(Error::InvalidParam("bound-weight cutoff must be >= 1".into()));
    }
    Ok(basis
        .pairs()
        .iter()
        .zip(state)
        .filter(|(&(j, l), _)| l - j <= delta0)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Mirror image of a state under `(j, l) → (N+1−l, N+1−j)`.
pub fn invert_state(basis: &PairBasis, state: &ArrayView1<Complex64>) -> Array1<Complex64> {
    let perm = basis.inversion_permutation();
    let mut out = Array1::zeros(state.len());
    for (i, &p) in perm.iter().enumerate() {
        out[p] = state[i];
    }
    out
}

/// `H₂` relabelled by the inversion permutation.
pub fn invert_operator(basis: &PairBasis, h: &ArrayView2<Complex64>) -> Array2<Complex64> {
    let perm = basis.inversion_permutation();
    h.select(Axis(0), &perm).select(Axis(1), &perm)
}

/// One exported row per eigenstate.
#[derive(Clone, Debug, PartialEq)]
pub struct StateRecord {
    pub phi0: f64,
    pub index: usize,
    pub energy: Complex64,
    pub decay_rate: f64,
    pub tilt: f64,
    pub bound_weight: f64,
}

pub fn state_records(
    spectrum: &TwoExSpectrum,
    phi0: f64,
    g: f64,
    delta0: usize,
) -> Result<Vec<StateRecord>> {
    (0..spectrum.len())
        .map(|v| {
            let s = spectrum.state(v);
            Ok(StateRecord {
                phi0,
                index: v,
                energy: spectrum.eig.values[v],
                decay_rate: -spectrum.eig.values[v].im,
                tilt: tilted_degree(&spectrum.basis, &s, g),
                bound_weight: bound_weight(&spectrum.basis, &s, delta0)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::multiset_distance;
    use crate::lattice::{build_interface, build_uniform, ModelParams};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn array(n: usize, delta: f64, phi0: f64) -> QubitArray {
        build_uniform(&ModelParams::default().with_n_qubits(n).with_delta(delta).with_phi0(phi0)).unwrap()
    }

    fn unit(len: usize, at: usize) -> Array1<Complex64> {
        let mut v = Array1::zeros(len);
        v[at] = c(1.0, 0.0);
        v
    }

    #[test]
    fn basis_indexing() {
        let b = PairBasis::new(7);
        assert_eq!(b.len(), 21);
        for (i, &(j, l)) in b.pairs().iter().enumerate() {
            assert_eq!(b.index_of(j, l), Some(i));
            assert_eq!(b.index_of(l, j), Some(i));
        }
        assert_eq!(b.index_of(3, 3), None);
        assert_eq!(b.index_of(3, 8), None);
    }

    #[test]
    fn diagonal_and_single_move() {
        let a = array(6, 0.0, 0.0);
        let h = build_pair_hamiltonian(&a).unwrap();
        for i in 0..h.nrows() {
            assert_abs_diff_eq!((h[[i, i]] - c(0.0, -2.0)).norm(), 0.0, epsilon = 1e-15);
        }
        let b = PairBasis::new(6);
        let el = h[[b.index_of(1, 3).unwrap(), b.index_of(2, 3).unwrap()]];
        let want = c(0.0, -1.0) * c(0.0, 0.3).exp();
        assert_abs_diff_eq!((el - want).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_small_arrays() {
        assert!(build_pair_hamiltonian(&array(3, 0.1, 0.0)).is_err());
        assert!(bosonic_oracle_spectrum(&array(9, 0.1, 0.0), 1.0).is_err());
    }

    #[test]
    fn matrix_free_product_matches_dense() {
        let a = array(9, 0.1, 0.7);
        let h = build_pair_hamiltonian(&a).unwrap();
        let b = PairBasis::new(9);
        let g = a.kernel_matrix();
        let x = Array1::from_shape_fn(b.len(), |i| c((i as f64).sin(), (i as f64 * 0.3).cos()));
        let y = apply_pair_hamiltonian(&b, &g.view(), &x.view());
        let z = h.dot(&x);
        assert!((&y - &z).iter().all(|d| d.norm() < 1e-12));
    }

    #[test]
    fn oracle_two_sites_free_bosons() {
        // No interaction: the two-boson spectrum is every pairwise sum of the
        // single-particle eigenvalues λ_a + λ_b with a ≤ b.
        let p = ModelParams::default().with_n_qubits(2);
        let a = build_uniform(&p).unwrap();
        let got = bosonic_oracle_spectrum(&a, 0.0).unwrap();
        let s = c(0.0, -1.0);
        let t = c(0.0, -1.0) * c(0.0, 0.3 * (a.z(2) - a.z(1))).exp();
        let (l1, l2) = (s + t, s - t);
        let want = [l1 + l1, l1 + l2, l2 + l2];
        assert!(multiset_distance(got.as_slice().unwrap(), &want) < 1e-12);
    }

    #[test]
    fn oracle_hard_core_limit() {
        for n in [4, 5, 6] {
            let a = array(n, 0.1, 0.4);
            let hard = crate::eig::eigvals_dense(&build_pair_hamiltonian(&a).unwrap().view()).unwrap();
            let soft = bosonic_oracle_spectrum(&a, 1e6).unwrap();
            let m = n * (n - 1) / 2;
            for k in 0..m {
                assert!((hard[k] - soft[k]).norm() < 1e-4, "N={n} k={k}");
            }
            for k in m..soft.len() {
                assert!((soft[k].re - 1e6).abs() < 10.0);
            }
        }
    }

    #[test]
    fn tilted_degree_examples() {
        let b = PairBasis::new(100);
        let s = unit(b.len(), b.index_of(2, 3).unwrap());
        assert_abs_diff_eq!(tilted_degree(&b, &s.view(), 0.5), -48.0);
        let s = unit(b.len(), b.index_of(1, 2).unwrap());
        assert_abs_diff_eq!(tilted_degree(&b, &s.view(), 0.5), -49.0);
        let mut s = Array1::zeros(b.len());
        s[b.index_of(4, 9).unwrap()] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        s[b.index_of(92, 97).unwrap()] = c(0.0, std::f64::consts::FRAC_1_SQRT_2);
        assert_abs_diff_eq!(tilted_degree(&b, &s.view(), 0.5), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bound_weight_examples() {
        let b = PairBasis::new(10);
        let s = unit(b.len(), b.index_of(1, 5).unwrap());
        assert_eq!(bound_weight(&b, &s.view(), 3).unwrap(), 0.0);
        assert_eq!(bound_weight(&b, &s.view(), 9).unwrap(), 1.0);
        assert!(bound_weight(&b, &s.view(), 0).is_err());
    }

    #[test]
    fn small_array_spectrum_sum_rules() {
        let a = array(12, 0.1, 0.0);
        let s = solve_dense(&a).unwrap();
        let n = 12.0;
        let tr: Complex64 = s.pair_energies().sum();
        assert!((tr - c(0.0, -n * (n - 1.0))).norm() < 1e-8 * n * (n - 1.0));
        assert!(s.decay_rates().iter().all(|&g| g >= -1e-9));
        for v in 0..s.len() {
            let nrm: f64 = s.state(v).iter().map(|z| z.norm_sqr()).sum();
            assert_abs_diff_eq!(nrm, 1.0, epsilon = 1e-12);
            let jp = joint_probability(&s.basis, &s.state(v));
            assert_abs_diff_eq!(jp.sum() / 2.0, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn interface_bound_state_hugs_diagonal() {
        // Bulk bound states of the 30-site array: most weight within 5 sites.
        let a = build_interface(&ModelParams::default().with_n_qubits(30)).unwrap();
        let s = solve_dense(&a).unwrap();
        let best = (0..s.len())
            .map(|v| bound_weight(&s.basis, &s.state(v), 5).unwrap())
            .fold(0.0, f64::max);
        assert!(best > 0.5);
    }

    #[test]
    fn state_records_are_consistent() {
        let a = array(6, 0.1, 0.2);
        let s = solve_dense(&a).unwrap();
        let rows = state_records(&s, 0.2, DEFAULT_TILT, 5).unwrap();
        assert_eq!(rows.len(), 15);
        assert_eq!(rows[3].decay_rate, -s.pair_energies()[3].im);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn inversion_flips_tilt(n in 4usize..16, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b = PairBasis::new(n);
            let mut s = Array1::from_shape_fn(b.len(), |_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let nrm = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            s.mapv_inplace(|z| z / nrm);
            let t = tilted_degree(&b, &s.view(), 0.5);
            let ti = tilted_degree(&b, &invert_state(&b, &s.view()).view(), 0.5);
            prop_assert!((t + ti).abs() < 1e-12);
        }

        #[test]
        fn bound_weight_is_monotone(n in 4usize..14, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b = PairBasis::new(n);
            let mut s = Array1::from_shape_fn(b.len(), |_| c(rng.gen_range(-1.0..1.0), 0.0));
            let nrm = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            s.mapv_inplace(|z| z / nrm);
            let mut last = 0.0;
            for d0 in 1..n {
                let w = bound_weight(&b, &s.view(), d0).unwrap();
                prop_assert!(w + 1e-15 >= last && w <= 1.0 + 1e-12);
                last = w;
            }
            prop_assert!((last - 1.0).abs() < 1e-12);
        }

        #[test]
        fn passivity(n in 4usize..9, delta in 0.0..0.49f64, phi0 in 0.0..6.28f64, phi in 0.0..3.1f64) {
            let p = ModelParams::default().with_n_qubits(n).with_delta(delta).with_phi0(phi0).with_phi(phi);
            let s = solve_dense(&build_uniform(&p).unwrap()).unwrap();
            prop_assert!(s.decay_rates().iter().all(|&g| g >= -1e-9));
        }
    }
}
