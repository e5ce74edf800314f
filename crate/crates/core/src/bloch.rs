//! Center-of-mass Bloch problem of the infinite modulated chain.
//!
//! A two-excitation state with center-of-mass momentum `K` is expanded over
//! relative distances `Δ = 1..L` and the sublattice `n ∈ {1,2,3}` of the left
//! excitation. The matrix `M(K, φ₀)` couples those amplitudes; its eigenvalues
//! give `2E = eig(−iΓ₀M)`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use crate::eig::{cmp_complex, eig_dense, eigvals_dense};
use crate::error::{Error, Result};
use crate::lattice::{modulated_position, ModelParams, PERIOD};

/// Smallest accepted truncation `L`.
pub const MIN_TRUNC: usize = 10;

/// Default distance cutoff of the bound probability.
pub const DEFAULT_DELTA0: usize = 5;

/// Reciprocal lattice vector of the three-site cell.
pub const RECIPROCAL: f64 = 2.0 * PI / 3.0;

/// Distance below which `r = e^{3i(φ±k)}` counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;

/// 1 iff `x ≡ 0 (mod 3)`, with the mathematical modulus.
#[inline]
pub fn selector_f(x: i64) -> u8 {
    u8::from(x.rem_euclid(PERIOD as i64) == 0)
}

/// Row of basis state `(Δ, n)`, both 1-based.
#[inline]
pub fn bloch_index(delta: usize, n: usize) -> usize {
    (delta - 1) * PERIOD + (n - 1)
}

/// Inverse of [`bloch_index`].
#[inline]
pub fn bloch_label(row: usize) -> (usize, usize) {
    (row / PERIOD + 1, row % PERIOD + 1)
}

/// `M(K, φ₀)` with its labels.
#[derive(Clone, Debug)]
pub struct BlochBlock {
    pub k: f64,
    pub phi0: f64,
    pub trunc: usize,
    pub gamma0: f64,
    pub matrix: Array2<Complex64>,
}

impl BlochBlock {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn index_of(&self, delta: usize, n: usize) -> Option<usize> {
        (1..=self.trunc)
            .contains(&delta)
            .then_some(())
            .filter(|_| (1..=PERIOD).contains(&n))
            .map(|_| bloch_index(delta, n))
    }

    /// `−iΓ₀M / 2`, whose eigenvalues are the per-excitation energies.
    pub fn energy_operator(&self) -> Array2<Complex64> {
        let s = Complex64::new(0.0, -self.gamma0 / 2.0);
        self.matrix.mapv(|m| s * m)
    }
}

/// Assemble `M(K, φ₀)` for truncation `params.trunc`.
///
/// `K` may lie outside the reduced zone; the spectrum is periodic with
/// period 2π/3.
pub fn build_bloch_matrix(params: &ModelParams, k: f64, phi0: f64) -> Result<BlochBlock> {
    params.check()?;
    let l = params.trunc;
    if l < MIN_TRUNC {
        return Err(Error::InvalidParam(format!(
            "trunc >= {MIN_TRUNC} required, got {l}"
        )));
    }
    if !k.is_finite() || !phi0.is_finite() {
        return Err(Error::InvalidParam("K and phi0 must be finite".into()));
    }
    let li = l as i64;
    // Positions for every index the four terms can reach: 1−L ..= 3+2L.
    let lo = 1 - li;
    let hi = PERIOD as i64 + 2 * li;
    let zs: Vec<f64> = (lo..=hi)
        .map(|x| modulated_position(x, params.delta, phi0))
        .collect();
    let z = |x: i64| zs[(x - lo) as usize];
    let phase = |d: f64| Complex64::from_polar(1.0, 0.5 * k * d + params.phi * d.abs());

    let dim = PERIOD * l;
    let mut m = Array2::<Complex64>::zeros((dim, dim));
    for dp in 1..=li {
        for np in 1..=PERIOD as i64 {
            let row = bloch_index(dp as usize, np as usize);
            for d in 1..=li {
                for n in 1..=PERIOD as i64 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    if selector_f(n - np) == 1 {
                        acc += phase(z(n + d) - z(n + dp));
                    }
                    if selector_f(n + d - np) == 1 {
                        acc += phase(z(n) - z(n + d + dp));
                    }
                    if selector_f(np + dp - n) == 1 {
                        acc += phase(z(n + d) - z(n - dp));
                    }
                    if selector_f(n + d - dp - np) == 1 {
                        acc += phase(z(n) - z(n + d - dp));
                    }
                    m[[row, bloch_index(d as usize, n as usize)]] = acc;
                }
            }
        }
    }
    Ok(BlochBlock {
        k,
        phi0,
        trunc: l,
        gamma0: params.gamma0,
        matrix: m,
    })
}

/// One eigenpair of the Bloch problem.
#[derive(Clone, Debug)]
pub struct BandPoint {
    pub k: f64,
    pub phi0: f64,
    pub band_index: usize,
    /// Per-excitation energy `E`.
    pub energy: Complex64,
    pub bound_probability: f64,
    pub vector: Array1<Complex64>,
}

/// Weight of `u` on `Δ ≤ delta0`, all three sublattices.
pub fn bound_probability(u: &ArrayView1<Complex64>, delta0: usize) -> f64 {
    let rows = (PERIOD * delta0).min(u.len());
    u.iter().take(rows).map(|z| z.norm_sqr()).sum()
}

/// `Σ_n |u_{Δ,n}|²` for `Δ = 1 ..= L`.
pub fn distance_profile(u: &ArrayView1<Complex64>) -> Vec<f64> {
    u.as_slice()
        .map(|s| s.to_vec())
        .unwrap_or_else(|| u.to_vec())
        .chunks(PERIOD)
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// Least-squares line through `(x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn log_linear_fit(x: &[f64], y: &[f64]) -> Result<LogLinearFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::InvalidParam("need at least 3 matching points".into()));
    }
    if y.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParam("log fit needs positive values".into()));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LogLinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Exponential fit of the weight at relative distance `Δ ≤ max_delta`.
///
/// With `block > 1` the profile is first summed over consecutive groups of
/// `block` distances, which removes the oscillation a zone-edge state shows
/// on top of its envelope; `x` is then the centre of each group.
pub fn decay_fit(u: &ArrayView1<Complex64>, max_delta: usize, block: usize) -> Result<LogLinearFit> {
    let prof = distance_profile(u);
    if block == 0 || max_delta > prof.len() {
        return Err(Error::InvalidParam(format!(
            "need 1 <= block and max_delta <= {}",
            prof.len()
        )));
    }
    let groups = max_delta / block;
    let x: Vec<f64> = (0..groups)
        .map(|g| (g * block) as f64 + (block as f64 + 1.0) / 2.0)
        .collect();
    let y: Vec<f64> = (0..groups)
        .map(|g| prof[g * block..(g + 1) * block].iter().sum())
        .collect();
    log_linear_fit(&x, &y)
}

/// All `3L` eigenpairs, ascending in `Re E`.
pub fn band_solve(block: &BlochBlock, delta0: usize) -> Result<Vec<BandPoint>> {
    if delta0 < 1 {
        return Err(Error::InvalidParam("delta0 >= 1 required".into()));
    }
    let eig = eig_dense(&block.energy_operator().view())?;
    Ok(eig
        .values
        .iter()
        .zip(eig.vectors.columns())
        .enumerate()
        .map(|(m, (&e, u))| BandPoint {
            k: block.k,
            phi0: block.phi0,
            band_index: m,
            energy: e,
            bound_probability: bound_probability(&u, delta0),
            vector: u.to_owned(),
        })
        .collect())
}

/// Sorted per-excitation energies only.
pub fn band_energies(block: &BlochBlock) -> Result<Array1<Complex64>> {
    eigvals_dense(&block.energy_operator().view())
}

/// Diagonal `e^{iK(z_n + z_{n+Δ})/2}` over the basis.
///
/// Multiplying an eigenvector by it removes the position-dependent Bloch
/// phases, giving a representative that is exactly periodic under
/// `K → K + 2π/3`.
pub fn periodic_gauge_phases(params: &ModelParams, k: f64, phi0: f64, trunc: usize) -> Array1<Complex64> {
    Array1::from_iter((0..PERIOD * trunc).map(|row| {
        let (d, n) = bloch_label(row);
        let (n, d) = (n as i64, d as i64);
        let s = modulated_position(n, params.delta, phi0) + modulated_position(n + d, params.delta, phi0);
        Complex64::from_polar(1.0, 0.5 * k * s)
    }))
}

/// Geometric tail `Σ_{m≥1} r^m = r / (1 − r)` for `r = e^{iθ}`.
fn tail(theta: f64) -> std::result::Result<Complex64, ()> {
    let r = Complex64::from_polar(1.0, theta);
    if (r - 1.0).norm() < RESONANCE_TOL {
        return Err(());
    }
    Ok(r / (Complex64::new(1.0, 0.0) - r))
}

/// 3×3 single-excitation Bloch Hamiltonian at momentum `k`.
pub fn single_excitation_block(params: &ModelParams, k: f64) -> Result<Array2<Complex64>> {
    params.check()?;
    let cell = PERIOD as f64;
    let right = tail(cell * (params.phi + k)).map_err(|_| Error::Resonance { k })?;
    let left = tail(cell * (params.phi - k)).map_err(|_| Error::Resonance { k })?;
    let z: Vec<f64> = (1..=PERIOD as i64).map(|n| params.position(n)).collect();
    let mi = Complex64::new(0.0, -params.gamma0);
    Ok(Array2::from_shape_fn((PERIOD, PERIOD), |(a, b)| {
        // Images z_b + 3m: m ≥ 1 lie to the right of z_a, m ≤ −1 to the left.
        let d = z[b] - z[a];
        let own = Complex64::from_polar(1.0, params.phi * d.abs());
        let r = Complex64::from_polar(1.0, params.phi * d) * right;
        let l = Complex64::from_polar(1.0, -params.phi * d) * left;
        mi * (own + r + l)
    }))
}

/// The three single-excitation branch energies at `k`, sorted.
pub fn single_excitation_dispersion(params: &ModelParams, k: f64) -> Result<[Complex64; 3]> {
    let h = single_excitation_block(params, k)?;
    let v = eigvals_dense(&h.view())?;
    Ok([v[0], v[1], v[2]])
}

/// Scattering estimates `[ε_a((K+κ)/2) + ε_b((K−κ)/2)] / 2` for all nine
/// branch pairs `(a, b)`, sorted.
pub fn scattering_energy(params: &ModelParams, k: f64, kappa: f64) -> Result<Vec<Complex64>> {
    let e1 = single_excitation_dispersion(params, 0.5 * (k + kappa))?;
    let e2 = single_excitation_dispersion(params, 0.5 * (k - kappa))?;
    let mut out: Vec<Complex64> = e1
        .iter()
        .flat_map(|a| e2.iter().map(move |b| 0.5 * (a + b)))
        .collect();
    out.sort_by(cmp_complex);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::multiset_distance;
    use crate::lattice::build_uniform;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn at_trunc(trunc: usize) -> ModelParams {
        ModelParams::default().with_trunc(trunc)
    }

    #[test]
    fn selector_examples() {
        assert_eq!(selector_f(0), 1);
        assert_eq!(selector_f(4), 0);
        assert_eq!(selector_f(-6), 1);
        assert_eq!(selector_f(-3), 1);
        assert_eq!(selector_f(-1), 0);
    }

    #[test]
    fn index_map_round_trips() {
        for row in 0..30 {
            let (d, n) = bloch_label(row);
            assert_eq!(bloch_index(d, n), row);
        }
        let b = build_bloch_matrix(&at_trunc(10), 0.1, 0.0).unwrap();
        assert_eq!(b.dim(), 30);
        assert_eq!(b.index_of(10, 3), Some(29));
        assert_eq!(b.index_of(11, 1), None);
    }

    #[test]
    fn rejects_short_truncation() {
        assert!(build_bloch_matrix(&at_trunc(9), 0.0, 0.0).is_err());
    }

    #[test]
    fn entries_are_sums_of_unimodular_terms() {
        let b = build_bloch_matrix(&at_trunc(12), 0.37, 1.1).unwrap();
        for z in b.matrix.iter() {
            let r = z.norm();
            assert!(r <= 4.0 + 1e-12);
        }
        // Diagonal: two zero-distance terms plus possible others.
        let d = b.matrix[[0, 0]];
        assert!(d.norm() > 0.0);
    }

    #[test]
    fn unmodulated_entries_depend_on_integer_distances() {
        // At δ = 0 every term distance is an integer, so each entry is a sum of
        // phases e^{i(K/2 d + φ|d|)} with integer d: the entry is reproduced by
        // rebuilding at K shifted by 4π, which changes each phase by 2π d.
        let p = at_trunc(10).with_delta(0.0);
        let a = build_bloch_matrix(&p, 0.2, 0.0).unwrap();
        let b = build_bloch_matrix(&p, 0.2 + 4.0 * PI, 0.0).unwrap();
        assert!((&a.matrix - &b.matrix).iter().all(|z| z.norm() < 1e-11));
        let c = build_bloch_matrix(&p, 0.2, 2.0).unwrap();
        assert!((&a.matrix - &c.matrix).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn zone_periodicity_l60() {
        let p = at_trunc(60);
        for &k in &[-0.3, 0.0, 0.5] {
            let a = band_energies(&build_bloch_matrix(&p, k, 0.9).unwrap()).unwrap();
            let b = band_energies(&build_bloch_matrix(&p, k + RECIPROCAL, 0.9).unwrap()).unwrap();
            assert!(multiset_distance(a.as_slice().unwrap(), b.as_slice().unwrap()) < 1e-6);
        }
    }

    #[test]
    fn inversion_symmetry_at_zero_phase() {
        let p = at_trunc(30);
        let a = band_energies(&build_bloch_matrix(&p, 0.41, 0.0).unwrap()).unwrap();
        let b = band_energies(&build_bloch_matrix(&p, -0.41, 0.0).unwrap()).unwrap();
        assert!(multiset_distance(a.as_slice().unwrap(), b.as_slice().unwrap()) < 1e-8);
    }

    #[test]
    fn band_points_are_normalized_probabilities() {
        let b = build_bloch_matrix(&at_trunc(20), 0.3, 0.5).unwrap();
        let pts = band_solve(&b, DEFAULT_DELTA0).unwrap();
        assert_eq!(pts.len(), 60);
        for p in &pts {
            let n: f64 = p.vector.iter().map(|z| z.norm_sqr()).sum();
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-12);
            assert!((0.0..=1.0 + 1e-12).contains(&p.bound_probability));
            let mut last = 0.0;
            for d0 in 1..=20 {
                let w = bound_probability(&p.vector.view(), d0);
                assert!(w + 1e-15 >= last);
                last = w;
            }
        }
    }

    #[test]
    fn periodic_gauge_closes_the_zone() {
        // u(K + G) and the gauge-fixed u(K) agree up to one global phase.
        let p = at_trunc(20);
        let k = -PI / 3.0;
        let phi0 = 0.8;
        let pick = |k: f64| {
            let pts = band_solve(&build_bloch_matrix(&p, k, phi0).unwrap(), 5).unwrap();
            let best = pts
                .into_iter()
                .filter(|q| q.bound_probability > 0.25 && q.energy.re > 1.0 && q.energy.re < 4.0)
                .max_by(|a, b| a.energy.re.total_cmp(&b.energy.re))
                .unwrap();
            &periodic_gauge_phases(&p, k, phi0, 20) * &best.vector
        };
        let a = pick(k);
        let b = pick(k + RECIPROCAL);
        let ov: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
        assert_abs_diff_eq!(ov.norm(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn uniform_dispersion_folds_single_band() {
        let p = ModelParams::default().with_delta(0.0);
        let k = 0.27;
        let got = single_excitation_dispersion(&p, k).unwrap();
        let single = |q: f64| 0.3f64.sin() / (q.cos() - 0.3f64.cos());
        // The cell is three sites, so site momenta k + 2πs/3 fold onto k.
        let mut want: Vec<Complex64> = (0..3)
            .map(|s| Complex64::new(single(k + RECIPROCAL * s as f64), 0.0))
            .collect();
        want.sort_by(cmp_complex);
        assert!(multiset_distance(&got, &want) < 1e-10);
    }

    #[test]
    fn dispersion_trace_and_resonance() {
        let p = ModelParams::default();
        let h = single_excitation_block(&p, 0.1).unwrap();
        let e = single_excitation_dispersion(&p, 0.1).unwrap();
        let s: Complex64 = e.iter().sum();
        assert!((s - h.diag().sum()).norm() < 1e-12);
        assert!(matches!(
            single_excitation_dispersion(&p, -0.3),
            Err(Error::Resonance { .. })
        ));
    }

    #[test]
    fn dispersion_matches_long_chain() {
        // Interior eigenvalues of a 300-site chain sit on the Bloch branches.
        let p = ModelParams::default().with_n_qubits(300);
        let a = build_uniform(&p).unwrap();
        let ev = crate::eig::eigvals_dense(&a.kernel_matrix().view()).unwrap();
        let ks: Vec<f64> = (0..=4000).map(|i| -PI / 3.0 + 2.0 * PI / 3.0 * i as f64 / 4000.0).collect();
        let branch: Vec<f64> = ks
            .iter()
            .filter_map(|&k| single_excitation_dispersion(&p, k).ok())
            .flat_map(|e| e.into_iter().map(|z| z.re))
            .collect();
        let mut checked = 0;
        for e in ev.iter().filter(|e| -e.im < 1e-3 && e.re.abs() < 2.0) {
            let dist = branch.iter().map(|b| (b - e.re).abs()).fold(f64::INFINITY, f64::min);
            assert!(dist < 1e-2, "eigenvalue {e} is {dist} from the branches");
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn exact_exponential_fits_perfectly() {
        let l = 30;
        let u = Array1::from_shape_fn(3 * l, |i| {
            let d = (i / 3 + 1) as f64;
            Complex64::new((-0.2 * d).exp(), 0.0)
        });
        let f = decay_fit(&u.view(), 30, 1).unwrap();
        assert!((f.slope + 0.4).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let g = decay_fit(&u.view(), 30, 6).unwrap();
        assert!((g.slope + 0.4).abs() < 1e-12);
        assert!(decay_fit(&u.view(), 31, 1).is_err());
        assert!(log_linear_fit(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn bound_bands_decay_at_the_zone_edge() {
        let p = at_trunc(60);
        let pts = band_solve(&build_bloch_matrix(&p, PI / 3.0, 0.0).unwrap(), DEFAULT_DELTA0).unwrap();
        let bound: Vec<_> = pts
            .iter()
            .filter(|q| q.bound_probability > 0.25 && q.energy.re > 1.0 && q.energy.re < 4.0)
            .collect();
        assert_eq!(bound.len(), 3);
        for q in bound {
            let f = decay_fit(&q.vector.view(), 48, 6).unwrap();
            assert!(f.slope < 0.0 && f.r_squared > 0.98, "{f:?}");
        }
    }

    #[test]
    fn scattering_examples() {
        let p = ModelParams::default();
        let k = 0.4;
        let at0 = scattering_energy(&p, k, 0.0).unwrap();
        let e = single_excitation_dispersion(&p, k / 2.0).unwrap();
        for z in e {
            assert!(at0.iter().any(|w| (w - z).norm() < 1e-12));
        }
        let a = scattering_energy(&p, 0.3, 0.2).unwrap();
        let b = scattering_energy(&p, -0.3, 0.2).unwrap();
        assert!(multiset_distance(&a, &b) < 1e-9);
    }

    #[test]
    fn scattering_states_lie_on_the_continuum() {
        let p = at_trunc(60);
        let pts = band_solve(&build_bloch_matrix(&p, 0.0, 0.0).unwrap(), 5).unwrap();
        let mut cont = Vec::new();
        for i in 0..2000 {
            let kappa = 4.0 * PI / 3.0 * (i as f64 + 0.5) / 2000.0;
            if let Ok(v) = scattering_energy(&p, 0.0, kappa) {
                cont.extend(v.into_iter().map(|z| z.re));
            }
        }
        let mut checked = 0;
        for q in pts.iter().filter(|q| q.bound_probability < 0.25 && q.energy.re.abs() < 5.0 && q.energy.im.abs() < 0.05) {
            let dist = cont.iter().map(|c| (c - q.energy.re).abs()).fold(f64::INFINITY, f64::min);
            assert!(dist < 5e-2, "E = {} off the continuum by {dist}", q.energy);
            checked += 1;
        }
        assert!(checked > 20);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn full_turn_phase_is_identity(k in -1.0..1.0f64, phi0 in 0.0..6.2f64) {
            let p = at_trunc(12);
            let a = build_bloch_matrix(&p, k, phi0).unwrap();
            let b = build_bloch_matrix(&p, k, phi0 + 2.0 * PI).unwrap();
            prop_assert!((&a.matrix - &b.matrix).iter().all(|z| z.norm() < 1e-12));
        }

        #[test]
        fn zone_periodicity(k in -1.05..1.05f64, phi0 in 0.0..6.28f64) {
            let p = at_trunc(30);
            let a = band_energies(&build_bloch_matrix(&p, k, phi0).unwrap()).unwrap();
            let b = band_energies(&build_bloch_matrix(&p, k + RECIPROCAL, phi0).unwrap()).unwrap();
            prop_assert!(multiset_distance(a.as_slice().unwrap(), b.as_slice().unwrap()) < 1e-6);
        }
    }
}
