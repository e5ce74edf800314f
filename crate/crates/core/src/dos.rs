//! Center-of-mass Fourier transform of finite-array pair states and the
//! wave-vector-resolved density of states.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::chern::{bound_points, BandWindow};
use crate::error::{Error, Result};
use crate::finite::{PairBasis, TwoExSpectrum};
use crate::lattice::{ModelParams, QubitArray, PERIOD};

/// Window of unit cells `m = offset .. offset + count` entering the transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CellRange {
    pub offset: usize,
    pub count: usize,
}

impl CellRange {
    /// Check that every referenced pair `(3m+n−s, 3m+n)` lies in the array.
    pub fn check(&self, n_sites: usize, s_max: usize) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParam("at least one unit cell required".into()));
        }
        let first = PERIOD * self.offset + 1;
        let last = PERIOD * (self.offset + self.count - 1) + PERIOD;
        if first <= s_max {
            return Err(Error::OutOfBounds(format!(
                "site {first} minus distance {s_max} falls before the array"
            )));
        }
        if last > n_sites {
            return Err(Error::OutOfBounds(format!(
                "cells reach site {last} but the array has {n_sites}"
            )));
        }
        Ok(())
    }
}

/// `Ψ_{s,n}(K) = Σ_m ψ_{3m+n−s, 3m+n} e^{iK(z_{3m+n} + z_{3m+n−s})/2}`.
pub fn com_fourier(
    basis: &PairBasis,
    state: &ArrayView1<Complex64>,
    array: &QubitArray,
    s: usize,
    n: usize,
    k: f64,
    cells: CellRange,
) -> Result<Complex64> {
    if s == 0 || !(1..=PERIOD).contains(&n) {
        return Err(Error::InvalidParam("need s >= 1 and n in 1..=3".into()));
    }
    cells.check(array.len(), s)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for m in cells.offset..cells.offset + cells.count {
        let r = PERIOD * m + n;
        let j = r - s;
        let idx = basis.index_of(j, r).expect("checked range");
        let ph = 0.5 * k * (array.z(r) + array.z(j));
        acc += state[idx] * Complex64::from_polar(1.0, ph);
    }
    Ok(acc)
}

/// Broadening and sampling of the density of states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DosSettings {
    pub sigma: f64,
    pub s_max: usize,
    pub cells: CellRange,
    pub n_k: usize,
    pub e_axis: Vec<f64>,
}

impl DosSettings {
    /// Energy axis spanning `[lo − 10σ, hi + 10σ]` at spacing σ/4.
    pub fn auto(sigma: f64, s_max: usize, cells: CellRange, lo: f64, hi: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParam("sigma > 0 required".into()));
        }
        let a = lo - 10.0 * sigma;
        let b = hi + 10.0 * sigma;
        let step = sigma / 4.0;
        let n = ((b - a) / step).ceil() as usize + 1;
        Ok(Self {
            sigma,
            s_max,
            cells,
            n_k: 201,
            e_axis: (0..n).map(|i| a + step * i as f64).collect(),
        })
    }
}

/// `F(E, K)` on a grid, rows indexed by energy.
#[derive(Clone, Debug, Serialize)]
pub struct DosGrid {
    pub e_axis: Vec<f64>,
    pub k_axis: Vec<f64>,
    #[serde(skip)]
    pub f: Array2<f64>,
    pub sigma: f64,
    pub s_max: usize,
    pub cells: CellRange,
}

impl DosGrid {
    pub fn e_step(&self) -> f64 {
        if self.e_axis.len() < 2 {
            0.0
        } else {
            self.e_axis[1] - self.e_axis[0]
        }
    }

    /// Energy maximising `F(·, K_i)` within `[lo, hi]`.
    pub fn ridge(&self, k_index: usize, lo: f64, hi: f64) -> Option<f64> {
        self.e_axis
            .iter()
            .enumerate()
            .filter(|(_, e)| **e >= lo && **e <= hi)
            .max_by(|a, b| self.f[[a.0, k_index]].total_cmp(&self.f[[b.0, k_index]]))
            .map(|(_, e)| *e)
    }
}

/// Uniform axis over the reduced zone `[−π/3, π/3]`.
pub fn k_axis(n_k: usize) -> Vec<f64> {
    if n_k == 1 {
        return vec![0.0];
    }
    (0..n_k)
        .map(|i| -PI / 3.0 + 2.0 * PI / 3.0 * i as f64 / (n_k - 1) as f64)
        .collect()
}

/// `Σ_{s ≤ s_max, n} |Ψ_{s,n}(K)|²` for every `K` in `ks`.
pub fn fourier_weight(
    basis: &PairBasis,
    state: &ArrayView1<Complex64>,
    array: &QubitArray,
    s_max: usize,
    cells: CellRange,
    ks: &[f64],
) -> Result<Vec<f64>> {
    cells.check(array.len(), s_max)?;
    // Amplitude and centre of mass of every referenced pair.
    let mut terms: Vec<Vec<(Complex64, f64)>> = Vec::new();
    for s in 1..=s_max {
        for n in 1..=PERIOD {
            terms.push(
                (cells.offset..cells.offset + cells.count)
                    .map(|m| {
                        let r = PERIOD * m + n;
                        let j = r - s;
                        let idx = basis.index_of(j, r).expect("checked range");
                        (state[idx], 0.5 * (array.z(r) + array.z(j)))
                    })
                    .collect(),
            );
        }
    }
    Ok(ks
        .iter()
        .map(|&k| {
            terms
                .iter()
                .map(|t| {
                    t.iter()
                        .map(|(a, c)| a * Complex64::from_polar(1.0, k * c))
                        .sum::<Complex64>()
                        .norm_sqr()
                })
                .sum()
        })
        .collect())
}

/// `F(E, K) = Σ_v exp(−(E − Re E_v)² / 2σ²) Σ_{s,n} |Ψ_{s,n}^{(v)}(K)|²` with
/// per-excitation energies `E_v = ε_v / 2`.
pub fn dos(spectrum: &TwoExSpectrum, array: &QubitArray, settings: &DosSettings) -> Result<DosGrid> {
    if !(settings.sigma > 0.0) {
        return Err(Error::InvalidParam("sigma > 0 required".into()));
    }
    settings.cells.check(array.len(), settings.s_max)?;
    let ks = k_axis(settings.n_k);
    let energies = spectrum.per_excitation_energies();
    let weights: Vec<Vec<f64>> = (0..spectrum.len())
        .into_par_iter()
        .map(|v| {
            fourier_weight(
                &spectrum.basis,
                &spectrum.state(v),
                array,
                settings.s_max,
                settings.cells,
                &ks,
            )
        })
        .collect::<Result<_>>()?;
    let ne = settings.e_axis.len();
    let mut f = Array2::<f64>::zeros((ne, ks.len()));
    let two_s2 = 2.0 * settings.sigma * settings.sigma;
    for (v, w) in weights.iter().enumerate() {
        let ev = energies[v].re;
        for (ie, e) in settings.e_axis.iter().enumerate() {
            let g = (-(e - ev).powi(2) / two_s2).exp();
            if g < 1e-300 {
                continue;
            }
            for (ik, wk) in w.iter().enumerate() {
                f[[ie, ik]] += g * wk;
            }
        }
    }
    Ok(DosGrid {
        e_axis: settings.e_axis.clone(),
        k_axis: ks,
        f,
        sigma: settings.sigma,
        s_max: settings.s_max,
        cells: settings.cells,
    })
}

/// Per-K ridge energies compared against a reference dispersion. Returns the
/// largest deviation.
pub fn ridge_deviation(grid: &DosGrid, reference: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for (i, &e) in reference.iter().enumerate() {
        worst = worst.max((grid.ridge(i, lo, hi)? - e).abs());
    }
    Some(worst)
}

/// Energies of the two highest bound bands at every `K` in `ks`, the
/// dispersions the DOS ridges should follow.
pub fn reference_ridges(
    params: &ModelParams,
    phi0: f64,
    ks: &[f64],
    delta0: usize,
    window: &BandWindow,
) -> Result<Vec<[f64; 2]>> {
    ks.par_iter()
        .map(|&k| {
            let pts = bound_points(params, k, phi0, delta0, window)?;
            let n = pts.len();
            if n < 2 {
                return Err(Error::BandSelection(format!(
                    "{n} bound states at K = {k}, need at least 2"
                )));
            }
            Ok([pts[n - 2].energy.re, pts[n - 1].energy.re])
        })
        .collect()
}

/// Ridge positions against the reference dispersions, band by band.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RidgeCheck {
    /// Allowed deviation `3σ + ΔE`.
    pub tolerance: f64,
    pub max_deviation: [f64; 2],
    /// K points where either ridge misses its band by more than the tolerance.
    pub failures: usize,
    pub ridges: Vec<[f64; 2]>,
}

/// Locate each ridge within the range of its reference band padded by `pad`.
pub fn ridge_check(grid: &DosGrid, reference: &[[f64; 2]], pad: f64) -> Result<RidgeCheck> {
    if reference.len() != grid.k_axis.len() {
        return Err(Error::InvalidParam(format!(
            "{} reference points for {} K values",
            reference.len(),
            grid.k_axis.len()
        )));
    }
    let tolerance = 3.0 * grid.sigma + grid.e_step();
    let mut ranges = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for r in reference {
        for b in 0..2 {
            ranges[b].0 = ranges[b].0.min(r[b] - pad);
            ranges[b].1 = ranges[b].1.max(r[b] + pad);
        }
    }
    let mut out = RidgeCheck {
        tolerance,
        max_deviation: [0.0; 2],
        failures: 0,
        ridges: Vec::with_capacity(reference.len()),
    };
    for (i, r) in reference.iter().enumerate() {
        let mut pos = [f64::NAN; 2];
        let mut bad = false;
        for b in 0..2 {
            let x = grid.ridge(i, ranges[b].0, ranges[b].1).ok_or_else(|| {
                Error::InvalidParam("energy axis does not cover the reference bands".into())
            })?;
            let d = (x - r[b]).abs();
            out.max_deviation[b] = out.max_deviation[b].max(d);
            bad |= d > tolerance;
            pos[b] = x;
        }
        out.failures += bad as usize;
        out.ridges.push(pos);
    }
    Ok(out)
}

/// Gaussian profile of a single state; useful for checking broadening.
pub fn single_state_profile(e_axis: &[f64], ev: f64, sigma: f64) -> Array1<f64> {
    Array1::from_iter(e_axis.iter().map(|e| (-(e - ev).powi(2) / (2.0 * sigma * sigma)).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{band_solve, build_bloch_matrix};
    use crate::eig::EigResult;
    use crate::lattice::{build_uniform, ModelParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup(n: usize) -> (QubitArray, PairBasis) {
        let a = build_uniform(&ModelParams::default().with_n_qubits(n)).unwrap();
        (a, PairBasis::new(n))
    }

    fn single(basis: &PairBasis, state: Array1<Complex64>, e: Complex64) -> TwoExSpectrum {
        let d = state.len();
        TwoExSpectrum {
            basis: basis.clone(),
            eig: EigResult {
                values: Array1::from(vec![e]),
                vectors: state.into_shape_with_order((d, 1)).unwrap(),
                residuals: Array1::zeros(1),
            },
            complete: false,
        }
    }

    #[test]
    fn single_pair_has_flat_magnitude() {
        let (a, b) = setup(30);
        let mut s = Array1::zeros(b.len());
        s[b.index_of(7, 10).unwrap()] = c(0.6, 0.8);
        let cells = CellRange { offset: 1, count: 5 };
        let m0 = com_fourier(&b, &s.view(), &a, 3, 1, 0.0, cells).unwrap();
        for k in [-1.0, -0.3, 0.4, 1.0] {
            let m = com_fourier(&b, &s.view(), &a, 3, 1, k, cells).unwrap();
            assert!((m.norm() - m0.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_momentum_is_a_plain_sum() {
        let (a, b) = setup(24);
        let s = Array1::from_shape_fn(b.len(), |i| c(i as f64, -(i as f64)));
        let cells = CellRange { offset: 1, count: 4 };
        let got = com_fourier(&b, &s.view(), &a, 2, 3, 0.0, cells).unwrap();
        let want: Complex64 = (1..5).map(|m| s[b.index_of(3 * m + 1, 3 * m + 3).unwrap()]).sum();
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn bounds_are_checked() {
        let (a, b) = setup(30);
        let s = Array1::zeros(b.len());
        assert!(com_fourier(&b, &s.view(), &a, 4, 1, 0.0, CellRange { offset: 0, count: 3 }).is_err());
        assert!(com_fourier(&b, &s.view(), &a, 1, 1, 0.0, CellRange { offset: 2, count: 9 }).is_err());
    }

    #[test]
    fn bloch_state_peaks_at_its_momentum() {
        // Embed a Bloch bound state into the pair basis and transform it back.
        let p = ModelParams::default().with_trunc(30);
        let k0 = 0.6;
        let pts = band_solve(&build_bloch_matrix(&p, k0, 0.0).unwrap(), 5).unwrap();
        let u = &pts
            .iter()
            .filter(|q| q.bound_probability > 0.25 && q.energy.re > 1.0 && q.energy.re < 4.0)
            .max_by(|x, y| x.energy.re.total_cmp(&y.energy.re))
            .unwrap()
            .vector;
        let (a, b) = setup(150);
        let mut s = Array1::<Complex64>::zeros(b.len());
        for m in 0..45 {
            for d in 1..=30 {
                for n in 1..=3 {
                    let j = 3 * m + n;
                    let l = j + d;
                    if l > 150 {
                        continue;
                    }
                    let ph = 0.5 * k0 * (a.z(j) + a.z(l));
                    s[b.index_of(j, l).unwrap()] += u[(d - 1) * 3 + n - 1] * Complex64::from_polar(1.0, ph);
                }
            }
        }
        let ks = k_axis(101);
        let cells = CellRange { offset: 10, count: 25 };
        let w = fourier_weight(&b, &s.view(), &a, 10, cells, &ks).unwrap();
        let (imax, _) = w.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap();
        // Conjugated convention: amplitude phase e^{+iK₀X} peaks at K = −K₀.
        assert!((ks[imax].abs() - k0).abs() < 0.03, "peak at {}", ks[imax]);
    }

    #[test]
    fn one_state_gives_a_gaussian() {
        let (a, b) = setup(30);
        let mut s = Array1::zeros(b.len());
        s[b.index_of(10, 12).unwrap()] = c(1.0, 0.0);
        let sp = single(&b, s, c(5.0, -0.1));
        let cells = CellRange { offset: 3, count: 4 };
        let st = DosSettings::auto(1e-3, 3, cells, 2.49, 2.51).unwrap();
        let g = dos(&sp, &a, &st).unwrap();
        let prof = single_state_profile(&g.e_axis, 2.5, 1e-3);
        for (ie, p) in prof.iter().enumerate() {
            assert!((g.f[[ie, 17]] - p).abs() < 1e-12);
        }
        assert!(g.f.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn broadening_changes_width_not_position() {
        let (a, b) = setup(30);
        let mut s = Array1::zeros(b.len());
        s[b.index_of(10, 12).unwrap()] = c(1.0, 0.0);
        let sp = single(&b, s, c(5.0, 0.0));
        let cells = CellRange { offset: 3, count: 4 };
        let width = |sigma: f64| {
            let st = DosSettings::auto(sigma, 3, cells, 2.45, 2.55).unwrap();
            let g = dos(&sp, &a, &st).unwrap();
            let peak = g.ridge(0, 2.4, 2.6).unwrap();
            let max = g.f.column(0).iter().cloned().fold(0.0, f64::max);
            let above = g.f.column(0).iter().filter(|x| **x > max / 2.0).count() as f64 * g.e_step();
            (peak, above)
        };
        let (p1, w1) = width(1e-3);
        let (p2, w2) = width(2e-3);
        assert!((p1 - 2.5).abs() < 1e-9 && (p2 - 2.5).abs() < 1e-9);
        assert!((w2 / w1 - 2.0).abs() < 0.1);
    }

    #[test]
    fn quadratic_in_amplitude() {
        let (a, b) = setup(30);
        let s = Array1::from_shape_fn(b.len(), |i| c((i as f64).cos(), 0.1));
        let cells = CellRange { offset: 2, count: 5 };
        let ks = k_axis(11);
        let w1 = fourier_weight(&b, &s.view(), &a, 4, cells, &ks).unwrap();
        let s3 = s.mapv(|z| z * 3.0);
        let w3 = fourier_weight(&b, &s3.view(), &a, 4, cells, &ks).unwrap();
        for (x, y) in w1.iter().zip(&w3) {
            assert!((y - 9.0 * x).abs() < 1e-9 * y.abs().max(1.0));
        }
    }
}
