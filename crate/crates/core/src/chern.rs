//! Chern numbers of the bound-state bands over the (K, φ₀) torus.
//!
//! Two estimates are produced per band:
//!
//! * `link_chern` uses the plaquette link method on eigenvectors taken in the
//!   K-periodic gauge (see [`periodic_gauge_phases`]), so the torus closes
//!   exactly and the result is an integer.
//! * `continuum_chern` integrates the plaquette Berry flux of eigenvectors in
//!   the position-phase basis over the open rectangle
//!   `[−π/3, π/3] × [0, 2π)`. That basis is not periodic in K, so the value
//!   approaches but need not equal an integer.
//!
//! The lowest band exists only for |K| above about 0.19π. Inside that gap the
//! band is extended by copying the nearest identified vector along K in the
//! same φ₀ column, which contributes no flux and closes the surface.

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bloch::{band_solve, build_bloch_matrix, periodic_gauge_phases, BandPoint, RECIPROCAL};
use crate::error::{Error, Result};
use crate::lattice::ModelParams;

/// Overlaps below this magnitude abort the link computation.
pub const MIN_LINK_OVERLAP: f64 = 1e-12;

/// Candidates kept per grid point for fills: bound probability above this.
pub const CANDIDATE_FLOOR: f64 = 0.1;

/// Selection rule for bound states: `P > p_th` and `e_min < Re E < e_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandWindow {
    pub p_th: f64,
    pub e_min: f64,
    pub e_max: f64,
}

impl Default for BandWindow {
    fn default() -> Self {
        Self {
            p_th: 0.25,
            e_min: 1.0,
            e_max: 4.0,
        }
    }
}

impl BandWindow {
    pub fn with_threshold(mut self, p_th: f64) -> Self {
        self.p_th = p_th;
        self
    }

    fn in_energy(&self, e: Complex64) -> bool {
        e.re > self.e_min && e.re < self.e_max
    }
}

/// Uniform `n_k × n_phi` grid; `K_i = −π/3 + (2π/3) i / n_k`, `φ_j = 2π j / n_phi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TorusGrid {
    pub n_k: usize,
    pub n_phi: usize,
}

impl TorusGrid {
    pub fn new(n_k: usize, n_phi: usize) -> Result<Self> {
        if n_k < 2 || n_phi < 2 {
            return Err(Error::InvalidParam("torus grid needs at least 2x2 points".into()));
        }
        Ok(Self { n_k, n_phi })
    }

    pub fn k(&self, i: usize) -> f64 {
        -PI / 3.0 + RECIPROCAL * i as f64 / self.n_k as f64
    }

    pub fn phi0(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi as f64
    }

    pub fn len(&self) -> usize {
        self.n_k * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn flat(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }
}

/// One eigenpair retained from the sweep.
/// Eigenpairs of `M(K, φ₀)` selected by `window`, ascending in `Re E`.
pub fn bound_points(
    params: &ModelParams,
    k: f64,
    phi0: f64,
    delta0: usize,
    window: &BandWindow,
) -> Result<Vec<BandPoint>> {
    let mut pts: Vec<BandPoint> = band_solve(&build_bloch_matrix(params, k, phi0)?, delta0)?
        .into_iter()
        .filter(|p| p.bound_probability > window.p_th && window.in_energy(p.energy))
        .collect();
    pts.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re));
    Ok(pts)
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub energy: Complex64,
    pub bound_probability: f64,
    pub vector: Array1<Complex64>,
}

/// Bound-state candidates at every grid point, row-major in (K, φ₀).
#[derive(Clone, Debug)]
pub struct TorusData {
    pub params: ModelParams,
    pub grid: TorusGrid,
    pub delta0: usize,
    pub points: Vec<Vec<Candidate>>,
}

/// Diagonalise `M(K, φ₀)` on every grid point, keeping eigenpairs inside the
/// energy window with bound probability above [`CANDIDATE_FLOOR`].
///
/// Runs on the current rayon pool; the output order does not depend on it.
pub fn sweep_torus(
    params: &ModelParams,
    grid: TorusGrid,
    window: &BandWindow,
    delta0: usize,
) -> Result<TorusData> {
    let points = (0..grid.len())
        .into_par_iter()
        .map(|f| {
            let (i, j) = (f / grid.n_phi, f % grid.n_phi);
            let block = build_bloch_matrix(params, grid.k(i), grid.phi0(j))?;
            Ok(band_solve(&block, delta0)?
                .into_iter()
                .filter(|p| p.bound_probability > CANDIDATE_FLOOR && window.in_energy(p.energy))
                .map(|p| Candidate {
                    energy: p.energy,
                    bound_probability: p.bound_probability,
                    vector: p.vector,
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TorusData {
        params: params.clone(),
        grid,
        delta0,
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Passed the bound-state selection.
    Identified,
    /// Best remaining candidate below threshold.
    FilledMaxP,
    /// Copied from the nearest identified point along K.
    FilledNearestK,
}

/// Branch of the lowest band; the two upper bands are `Single`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Single,
    NegativeK,
    PositiveK,
}

#[derive(Clone, Debug)]
pub struct SurfacePoint {
    pub energy: Complex64,
    pub bound_probability: f64,
    /// Eigenvector in the position-phase basis at momentum `source_k`.
    pub vector: Array1<Complex64>,
    pub source_k: f64,
    pub origin: Origin,
    pub branch: Branch,
}

/// One bound band sampled on the torus grid.
#[derive(Clone, Debug)]
pub struct BandSurface {
    /// 1 = bottom, 2 = middle, 3 = top.
    pub band: usize,
    pub grid: TorusGrid,
    pub p_th: f64,
    pub points: Vec<SurfacePoint>,
}

impl BandSurface {
    pub fn at(&self, i: usize, j: usize) -> &SurfacePoint {
        &self.points[self.grid.flat(i, j)]
    }

    pub fn mask(&self, i: usize, j: usize) -> bool {
        self.at(i, j).origin == Origin::Identified
    }

    pub fn filled_points(&self) -> usize {
        self.points.iter().filter(|p| p.origin != Origin::Identified).count()
    }

    /// Multiply every stored eigenvector by a phase; used by gauge tests.
    pub fn regauge(&mut self, phases: &[f64]) {
        for (p, &t) in self.points.iter_mut().zip(phases) {
            let w = Complex64::from_polar(1.0, t);
            p.vector.mapv_inplace(|z| z * w);
        }
    }
}

fn point(c: &Candidate, k: f64, origin: Origin, branch: Branch) -> SurfacePoint {
    SurfacePoint {
        energy: c.energy,
        bound_probability: c.bound_probability,
        vector: c.vector.clone(),
        source_k: k,
        origin,
        branch,
    }
}

/// Assign bound states to the bottom, middle and top surfaces.
pub fn select_bound_bands(data: &TorusData, window: &BandWindow) -> Result<[BandSurface; 3]> {
    let grid = data.grid;
    let mut slots: [Vec<Option<SurfacePoint>>; 3] =
        std::array::from_fn(|_| vec![None; grid.len()]);
    let mut any_three = false;

    for i in 0..grid.n_k {
        let k = grid.k(i);
        for j in 0..grid.n_phi {
            let f = grid.flat(i, j);
            let cands = &data.points[f];
            let mut bound: Vec<&Candidate> = cands
                .iter()
                .filter(|c| c.bound_probability > window.p_th && window.in_energy(c.energy))
                .collect();
            if bound.len() > 4 {
                return Err(Error::BandSelection(format!(
                    "{} bound candidates at K={k:.6}, phi0={:.6}; threshold too low",
                    bound.len(),
                    grid.phi0(j)
                )));
            }
            bound.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re));
            let branch = if k < 0.0 { Branch::NegativeK } else { Branch::PositiveK };
            match bound.len() {
                n @ (3 | 4) => {
                    any_three = true;
                    let top3 = &bound[n - 3..];
                    slots[0][f] = Some(point(top3[0], k, Origin::Identified, branch));
                    slots[1][f] = Some(point(top3[1], k, Origin::Identified, Branch::Single));
                    slots[2][f] = Some(point(top3[2], k, Origin::Identified, Branch::Single));
                }
                2 => {
                    slots[1][f] = Some(point(bound[0], k, Origin::Identified, Branch::Single));
                    slots[2][f] = Some(point(bound[1], k, Origin::Identified, Branch::Single));
                }
                _ => {
                    // Isolated miss of an upper band: the two most bound
                    // candidates, ordered by energy.
                    let mut best: Vec<&Candidate> = cands.iter().collect();
                    best.sort_by(|a, b| b.bound_probability.total_cmp(&a.bound_probability));
                    best.truncate(2);
                    if best.len() < 2 {
                        return Err(Error::BandSelection(format!(
                            "no candidates to fill the upper bands at K={k:.6}, phi0={:.6}",
                            grid.phi0(j)
                        )));
                    }
                    best.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re));
                    for (s, c) in [1, 2].into_iter().zip(best) {
                        let origin = if c.bound_probability > window.p_th {
                            Origin::Identified
                        } else {
                            Origin::FilledMaxP
                        };
                        slots[s][f] = Some(point(c, k, origin, Branch::Single));
                    }
                }
            }
        }
    }
    if !any_three {
        return Err(Error::BandSelection(
            "three bound bands are not identifiable anywhere on the grid".into(),
        ));
    }

    // Lowest band: nearest identified point along K (circular), per column.
    let bottom = &mut slots[0];
    for j in 0..grid.n_phi {
        let have: Vec<usize> = (0..grid.n_k).filter(|&i| bottom[grid.flat(i, j)].is_some()).collect();
        if have.is_empty() {
            return Err(Error::BandSelection(format!(
                "lowest band absent for the whole column phi0={:.6}",
                grid.phi0(j)
            )));
        }
        for i in 0..grid.n_k {
            if bottom[grid.flat(i, j)].is_some() {
                continue;
            }
            let dist = |h: usize| {
                let d = (i + grid.n_k - h) % grid.n_k;
                d.min(grid.n_k - d)
            };
            let h = *have.iter().min_by_key(|&&h| (dist(h), h)).unwrap();
            let mut p = bottom[grid.flat(h, j)].clone().unwrap();
            p.origin = Origin::FilledNearestK;
            bottom[grid.flat(i, j)] = Some(p);
        }
    }

    let [a, b, c] = slots;
    let mk = |band: usize, v: Vec<Option<SurfacePoint>>| BandSurface {
        band,
        grid,
        p_th: window.p_th,
        points: v.into_iter().map(|p| p.expect("every grid point assigned")).collect(),
    };
    Ok([mk(1, a), mk(2, b), mk(3, c)])
}

/// Result for one band.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChernResult {
    pub band: usize,
    pub link_chern: i64,
    /// Total link flux / 2π before rounding.
    pub link_flux: f64,
    pub continuum_chern: f64,
    /// Plaquettes entering the continuum estimate.
    pub continuum_plaquettes: usize,
    pub grid: (usize, usize),
    pub trunc: usize,
    pub p_th: f64,
    pub filled_points: usize,
    pub min_link_overlap: f64,
}

fn unit_link(a: &Array1<Complex64>, b: &Array1<Complex64>) -> (Complex64, f64) {
    let s: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let r = s.norm();
    (s / r, r)
}

/// Plaquette fluxes from four corner vectors ordered counter-clockwise.
fn plaquette(
    corners: [&Array1<Complex64>; 4],
    at: (usize, usize),
    min_seen: &mut f64,
) -> Result<f64> {
    let mut prod = Complex64::new(1.0, 0.0);
    for e in 0..4 {
        let (u, r) = unit_link(corners[e], corners[(e + 1) % 4]);
        if !(r >= MIN_LINK_OVERLAP) {
            return Err(Error::LinkOverlap {
                k_index: at.0,
                phi_index: at.1,
                overlap: r,
            });
        }
        *min_seen = min_seen.min(r);
        prod *= u;
    }
    Ok(prod.arg())
}

/// Link-variable fluxes on the closed torus, periodic gauge. Entry `(i, j)`
/// is the plaquette with lower-left corner `(K_i, φ_j)`.
pub fn link_fluxes(surface: &BandSurface, params: &ModelParams) -> Result<(Vec<f64>, f64)> {
    let g = surface.grid;
    let trunc = surface.points[0].vector.len() / 3;
    let u: Vec<Array1<Complex64>> = (0..g.len())
        .map(|f| {
            let p = &surface.points[f];
            let phi0 = g.phi0(f % g.n_phi);
            &periodic_gauge_phases(params, p.source_k, phi0, trunc) * &p.vector
        })
        .collect();
    let mut min_seen = f64::INFINITY;
    let mut fluxes = Vec::with_capacity(g.len());
    for i in 0..g.n_k {
        let i1 = (i + 1) % g.n_k;
        for j in 0..g.n_phi {
            let j1 = (j + 1) % g.n_phi;
            let c = [
                &u[g.flat(i, j)],
                &u[g.flat(i1, j)],
                &u[g.flat(i1, j1)],
                &u[g.flat(i, j1)],
            ];
            fluxes.push(plaquette(c, (i, j), &mut min_seen)?);
        }
    }
    Ok((fluxes, min_seen))
}

/// Berry flux integrated over the open rectangle in the position-phase basis.
/// Plaquettes touching a nearest-K fill are skipped. Returns the per-plaquette
/// field (`NaN` where skipped) and the count used.
pub fn continuum_fluxes(surface: &BandSurface, params: &ModelParams) -> Result<(Vec<f64>, usize)> {
    let g = surface.grid;
    let trunc = surface.points[0].vector.len() / 3;
    let usable = |i: usize, j: usize| surface.at(i, j).origin != Origin::FilledNearestK;
    // Column K = +π/3 from the column K = −π/3 by the zone translation.
    let edge: Vec<Array1<Complex64>> = (0..g.n_phi)
        .map(|j| {
            let p = surface.at(0, j);
            let phi0 = g.phi0(j);
            let a = periodic_gauge_phases(params, g.k(0), phi0, trunc);
            let b = periodic_gauge_phases(params, g.k(0) + RECIPROCAL, phi0, trunc);
            Array1::from_iter(p.vector.iter().zip(a.iter().zip(b.iter())).map(|(v, (x, y))| v * x / y))
        })
        .collect();
    let vec_at = |i: usize, j: usize| -> &Array1<Complex64> {
        let j = j % g.n_phi;
        if i == g.n_k {
            &edge[j]
        } else {
            &surface.at(i, j).vector
        }
    };
    let mut min_seen = f64::INFINITY;
    let mut field = Vec::with_capacity(g.len());
    let mut used = 0;
    for i in 0..g.n_k {
        for j in 0..g.n_phi {
            let j1 = (j + 1) % g.n_phi;
            let ok = usable(i, j) && usable(i, j1) && usable((i + 1) % g.n_k, j) && usable((i + 1) % g.n_k, j1);
            if !ok {
                field.push(f64::NAN);
                continue;
            }
            let c = [vec_at(i, j), vec_at(i + 1, j), vec_at(i + 1, j1), vec_at(i, j1)];
            field.push(plaquette(c, (i, j), &mut min_seen)?);
            used += 1;
        }
    }
    Ok((field, used))
}

/// Link-method integer for one band.
pub fn chern_link(surface: &BandSurface, params: &ModelParams) -> Result<(i64, f64, f64)> {
    let (fl, min_seen) = link_fluxes(surface, params)?;
    let total = fl.iter().sum::<f64>() / (2.0 * PI);
    Ok((total.round() as i64, total, min_seen))
}

/// Open-rectangle Berry-flux estimate for one band.
pub fn chern_continuum(surface: &BandSurface, params: &ModelParams) -> Result<(f64, usize)> {
    let (fl, used) = continuum_fluxes(surface, params)?;
    let total = fl.iter().filter(|x| !x.is_nan()).sum::<f64>() / (2.0 * PI);
    Ok((total, used))
}

/// Both estimates for all three bands.
pub fn chern_numbers(data: &TorusData, window: &BandWindow) -> Result<[ChernResult; 3]> {
    let surfaces = select_bound_bands(data, window)?;
    let mut out = Vec::with_capacity(3);
    for s in &surfaces {
        let (link, flux, min_link) = chern_link(s, &data.params)?;
        let (cont, used) = chern_continuum(s, &data.params)?;
        out.push(ChernResult {
            band: s.band,
            link_chern: link,
            link_flux: flux,
            continuum_chern: cont,
            continuum_plaquettes: used,
            grid: (s.grid.n_k, s.grid.n_phi),
            trunc: data.params.trunc,
            p_th: window.p_th,
            filled_points: s.filled_points(),
            min_link_overlap: min_link,
        });
    }
    Ok(out.try_into().expect("three bands"))
}

/// Berry curvature `F = flux / (ΔK Δφ₀)` at plaquette centres, periodic gauge.
pub fn curvature_field(surface: &BandSurface, params: &ModelParams) -> Result<Vec<(f64, f64, f64)>> {
    let g = surface.grid;
    let (fl, _) = link_fluxes(surface, params)?;
    let dk = RECIPROCAL / g.n_k as f64;
    let dp = 2.0 * PI / g.n_phi as f64;
    Ok((0..g.len())
        .map(|f| {
            let (i, j) = (f / g.n_phi, f % g.n_phi);
            (g.k(i) + dk / 2.0, g.phi0(j) + dp / 2.0, fl[f] / (dk * dp))
        })
        .collect())
}
