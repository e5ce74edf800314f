//! Run configuration, experiment orchestration and artifact export.
//!
//! A config file is flat `key = value` text. `#` starts a comment, lists are
//! comma-separated, optional ranges accept `none`, and keys that are absent
//! keep their defaults. [`RunConfig::emit`] writes every key in a fixed order
//! and [`RunConfig::parse`] reads that text back to an equal config.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `experiment` | none | `bands`, `chern`, `finite`, `dos`, `interface`, `critical-phase` |
//! | `gamma0`, `phi`, `delta` | 1, 0.3, 0.1 | model parameters |
//! | `trunc` | 70 | relative-distance truncation `L` of the Bloch problem |
//! | `delta0` | 5 | bound-probability cutoff `Δ₀` |
//! | `phi0` | 0 | list of modulation phases |
//! | `n` | 100 | list of array sizes |
//! | `geometry` | uniform | `uniform` or `interface` (finite arrays) |
//! | `n_k`, `n_phi` | 48, 48 | Chern torus grid |
//! | `band_k_points` | 201 | K samples of the band export |
//! | `p_th`, `e_min`, `e_max` | 0.25, 1, 4 | bound-state selection window |
//! | `tilt_g` | 0.5 | weight `g` of the tilted degree |
//! | `gamma_long` | 1e-6 | long-lived threshold on `Γ` |
//! | `tilt_fraction` | 0.25 | edge states need `\|T\| > fraction · N` |
//! | `bound_cutoff`, `min_bound_weight` | 5, 0.5 | edge states must be bound |
//! | `edge_e_range` | -inf, inf | per-excitation energy range of edge states |
//! | `solver` | dense | `dense` or `targeted` (shift-invert) |
//! | `dense_max_n` | 160 | largest N accepted by the dense solver |
//! | `nev`, `nev_segment` | 10, 30 | targeted states per shift |
//! | `segment_e` | none | per-excitation energy segment for targeted scans |
//! | `segment_offset_e` | -0.015 | imaginary offset of the scan, per excitation |
//! | `residual_tol`, `max_disks` | 1e-9, 200 | targeted-solver controls |
//! | `dos_sigma`, `dos_s_max` | 0.001, 10 | broadening and largest pair distance |
//! | `dos_cells`, `dos_cell_offset` | 50, 10 | unit cells in the transform |
//! | `dos_n_k` | 201 | K samples of the DOS |
//! | `dos_e_range` | none | per-excitation energy axis; `none` derives it from the bands |
//! | `curvature` | false | also export the Berry curvature |
//! | `inversion_check` | false | test inversion symmetry at the critical phases |
//! | `export_vectors` | false | also export bound Bloch eigenvectors |
//! | `workers` | 1 | worker threads |
//! | `out` | out | output directory |

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bloch::{band_solve, build_bloch_matrix, MIN_TRUNC};
use crate::chern::{
    bound_points, chern_numbers, curvature_field, select_bound_bands, sweep_torus, BandWindow,
    TorusGrid,
};
use crate::dos::{dos, k_axis, reference_ridges, ridge_check, CellRange, DosSettings};
use crate::error::{Error, Result};
use crate::export::{csv_text, json_text, matrix_csv_text, write_artifacts, Artifact, Cell, Sci};
use crate::finite::{build_pair_hamiltonian, solve_dense, state_records, PairBasis, TwoExSpectrum};
use crate::interface::{
    critical_phases, find_interface_states, interface_ansatz, inversion_defect,
    inversion_spectrum_check, search_interface, InterfaceCriteria, SearchOptions, StateSummary,
};
use crate::lattice::{build_interface, build_uniform, GeometryKind, ModelParams, QubitArray};
use crate::shift_invert::{cover_segment, ArnoldiOptions};

pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Padding around the reference bands when searching for DOS ridges.
const RIDGE_PAD: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Bands,
    Chern,
    Finite,
    Dos,
    Interface,
    CriticalPhase,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Bands,
        Experiment::Chern,
        Experiment::Finite,
        Experiment::Dos,
        Experiment::Interface,
        Experiment::CriticalPhase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Bands => "bands",
            Experiment::Chern => "chern",
            Experiment::Finite => "finite",
            Experiment::Dos => "dos",
            Experiment::Interface => "interface",
            Experiment::CriticalPhase => "critical-phase",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Dense,
    Targeted,
}

/// Everything a run needs. Model parameters per task come from
/// [`RunConfig::model`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub gamma0: f64,
    pub phi: f64,
    pub delta: f64,
    pub trunc: usize,
    pub delta0: usize,
    pub phi0: Vec<f64>,
    pub n: Vec<usize>,
    pub geometry: GeometryKind,
    pub n_k: usize,
    pub n_phi: usize,
    pub band_k_points: usize,
    pub window: BandWindow,
    pub criteria: InterfaceCriteria,
    pub solver: Solver,
    pub dense_max_n: usize,
    pub nev: usize,
    pub nev_segment: usize,
    pub segment_e: Option<(f64, f64)>,
    pub segment_offset_e: f64,
    pub residual_tol: f64,
    pub max_disks: usize,
    pub dos_sigma: f64,
    pub dos_s_max: usize,
    pub dos_cells: usize,
    pub dos_cell_offset: usize,
    pub dos_n_k: usize,
    pub dos_e_range: Option<(f64, f64)>,
    pub curvature: bool,
    pub inversion_check: bool,
    pub export_vectors: bool,
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            experiment: None,
            gamma0: p.gamma0,
            phi: p.phi,
            delta: p.delta,
            trunc: p.trunc,
            delta0: crate::bloch::DEFAULT_DELTA0,
            phi0: vec![0.0],
            n: vec![p.n_qubits],
            geometry: GeometryKind::Uniform,
            n_k: 48,
            n_phi: 48,
            band_k_points: 201,
            window: BandWindow::default(),
            criteria: InterfaceCriteria::default(),
            solver: Solver::Dense,
            dense_max_n: 160,
            nev: 10,
            nev_segment: 30,
            segment_e: None,
            segment_offset_e: -0.015,
            residual_tol: 1e-9,
            max_disks: 200,
            dos_sigma: 1e-3,
            dos_s_max: 10,
            dos_cells: 50,
            dos_cell_offset: 10,
            dos_n_k: 201,
            dos_e_range: None,
            curvature: false,
            inversion_check: false,
            export_vectors: false,
            workers: 1,
            out: PathBuf::from("out"),
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("cannot parse '{value}' for key '{key}'"))
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(key, v))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| num(key, x.trim())).collect()
}

fn pair(key: &str, v: &str) -> Result<(f64, f64)> {
    match list::<f64>(key, v)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(bad(key, v)),
    }
}

fn opt_pair(key: &str, v: &str) -> Result<Option<(f64, f64)>> {
    if v == "none" {
        Ok(None)
    } else {
        pair(key, v).map(Some)
    }
}

fn show_list<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn show_pair(p: (f64, f64)) -> String {
    format!("{}, {}", p.0, p.1)
}

fn show_opt_pair(p: Option<(f64, f64)>) -> String {
    p.map_or_else(|| "none".to_string(), show_pair)
}

impl RunConfig {
    /// Parameters of one task.
    pub fn model(&self, n: usize, phi0: f64) -> ModelParams {
        ModelParams::default()
            .with_gamma0(self.gamma0)
            .with_phi(self.phi)
            .with_delta(self.delta)
            .with_trunc(self.trunc)
            .with_n_qubits(n)
            .with_phi0(phi0)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", lineno + 1)));
            }
            c.set(k, v)?;
        }
        Ok(c)
    }

    fn set(&mut self, k: &str, v: &str) -> Result<()> {
        match k {
            "experiment" => {
                self.experiment = match v {
                    "" | "none" => None,
                    _ => Some(v.parse()?),
                }
            }
            "gamma0" => self.gamma0 = num(k, v)?,
            "phi" => self.phi = num(k, v)?,
            "delta" => self.delta = num(k, v)?,
            "trunc" => self.trunc = num(k, v)?,
            "delta0" => self.delta0 = num(k, v)?,
            "phi0" => self.phi0 = list(k, v)?,
            "n" => self.n = list(k, v)?,
            "geometry" => {
                self.geometry = match v {
                    "uniform" => GeometryKind::Uniform,
                    "interface" => GeometryKind::Interface,
                    _ => return Err(bad(k, v)),
                }
            }
            "n_k" => self.n_k = num(k, v)?,
            "n_phi" => self.n_phi = num(k, v)?,
            "band_k_points" => self.band_k_points = num(k, v)?,
            "p_th" => self.window.p_th = num(k, v)?,
            "e_min" => self.window.e_min = num(k, v)?,
            "e_max" => self.window.e_max = num(k, v)?,
            "tilt_g" => self.criteria.tilt_g = num(k, v)?,
            "gamma_long" => self.criteria.gamma_long = num(k, v)?,
            "tilt_fraction" => self.criteria.tilt_fraction = num(k, v)?,
            "bound_cutoff" => self.criteria.bound_cutoff = num(k, v)?,
            "min_bound_weight" => self.criteria.min_bound_weight = num(k, v)?,
            "edge_e_range" => self.criteria.edge_energy = pair(k, v)?,
            "solver" => {
                self.solver = match v {
                    "dense" => Solver::Dense,
                    "targeted" => Solver::Targeted,
                    _ => return Err(bad(k, v)),
                }
            }
            "dense_max_n" => self.dense_max_n = num(k, v)?,
            "nev" => self.nev = num(k, v)?,
            "nev_segment" => self.nev_segment = num(k, v)?,
            "segment_e" => self.segment_e = opt_pair(k, v)?,
            "segment_offset_e" => self.segment_offset_e = num(k, v)?,
            "residual_tol" => self.residual_tol = num(k, v)?,
            "max_disks" => self.max_disks = num(k, v)?,
            "dos_sigma" => self.dos_sigma = num(k, v)?,
            "dos_s_max" => self.dos_s_max = num(k, v)?,
            "dos_cells" => self.dos_cells = num(k, v)?,
            "dos_cell_offset" => self.dos_cell_offset = num(k, v)?,
            "dos_n_k" => self.dos_n_k = num(k, v)?,
            "dos_e_range" => self.dos_e_range = opt_pair(k, v)?,
            "curvature" => self.curvature = num(k, v)?,
            "inversion_check" => self.inversion_check = num(k, v)?,
            "export_vectors" => self.export_vectors = num(k, v)?,
            "workers" => self.workers = num(k, v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(Error::Config(format!("unknown key '{k}'"))),
        }
        Ok(())
    }

    /// Every key, one per line, in a fixed order.
    pub fn emit(&self) -> String {
        let c = &self.criteria;
        let lines = [
            (
                "experiment",
                self.experiment.map_or_else(|| "none".to_string(), |e| e.to_string()),
            ),
            ("gamma0", self.gamma0.to_string()),
            ("phi", self.phi.to_string()),
            ("delta", self.delta.to_string()),
            ("trunc", self.trunc.to_string()),
            ("delta0", self.delta0.to_string()),
            ("phi0", show_list(&self.phi0)),
            ("n", show_list(&self.n)),
            (
                "geometry",
                match self.geometry {
                    GeometryKind::Uniform => "uniform",
                    GeometryKind::Interface => "interface",
                }
                .to_string(),
            ),
            ("n_k", self.n_k.to_string()),
            ("n_phi", self.n_phi.to_string()),
            ("band_k_points", self.band_k_points.to_string()),
            ("p_th", self.window.p_th.to_string()),
            ("e_min", self.window.e_min.to_string()),
            ("e_max", self.window.e_max.to_string()),
            ("tilt_g", c.tilt_g.to_string()),
            ("gamma_long", c.gamma_long.to_string()),
            ("tilt_fraction", c.tilt_fraction.to_string()),
            ("bound_cutoff", c.bound_cutoff.to_string()),
            ("min_bound_weight", c.min_bound_weight.to_string()),
            ("edge_e_range", show_pair(c.edge_energy)),
            (
                "solver",
                match self.solver {
                    Solver::Dense => "dense",
                    Solver::Targeted => "targeted",
                }
                .to_string(),
            ),
            ("dense_max_n", self.dense_max_n.to_string()),
            ("nev", self.nev.to_string()),
            ("nev_segment", self.nev_segment.to_string()),
            ("segment_e", show_opt_pair(self.segment_e)),
            ("segment_offset_e", self.segment_offset_e.to_string()),
            ("residual_tol", self.residual_tol.to_string()),
            ("max_disks", self.max_disks.to_string()),
            ("dos_sigma", self.dos_sigma.to_string()),
            ("dos_s_max", self.dos_s_max.to_string()),
            ("dos_cells", self.dos_cells.to_string()),
            ("dos_cell_offset", self.dos_cell_offset.to_string()),
            ("dos_n_k", self.dos_n_k.to_string()),
            ("dos_e_range", show_opt_pair(self.dos_e_range)),
            ("curvature", self.curvature.to_string()),
            ("inversion_check", self.inversion_check.to_string()),
            ("export_vectors", self.export_vectors.to_string()),
            ("workers", self.workers.to_string()),
            ("out", self.out.display().to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// All violated preconditions; empty when the config can run.
    pub fn validate(&self) -> Vec<String> {
        let mut v: Vec<String> = Vec::new();
        let Some(exp) = self.experiment else {
            v.push("no experiment selected".into());
            return v;
        };
        let mut push = |m: String| {
            if !v.contains(&m) {
                v.push(m);
            }
        };
        for m in self.model(self.n.first().copied().unwrap_or(1), 0.0).violations() {
            push(m);
        }
        if self.trunc < MIN_TRUNC {
            push(format!("trunc ≥ {MIN_TRUNC} required"));
        }
        if self.phi0.is_empty() {
            push("phi0 list is empty".into());
        }
        if self.phi0.iter().any(|x| !x.is_finite()) {
            push("phi0 must be finite".into());
        }
        if self.n.is_empty() {
            push("n list is empty".into());
        }
        if self.workers == 0 {
            push("workers ≥ 1 required".into());
        }
        if self.delta0 == 0 {
            push("delta0 ≥ 1 required".into());
        }
        let w = &self.window;
        if !(w.p_th > 0.0 && w.p_th < 1.0) {
            push("p_th in (0, 1) required".into());
        }
        if !(w.e_min < w.e_max) {
            push("e_min < e_max required".into());
        }
        let c = &self.criteria;
        if !(c.gamma_long > 0.0) || !(c.tilt_fraction > 0.0) || !(c.tilt_g.is_finite()) {
            push("gamma_long > 0, tilt_fraction > 0 and finite tilt_g required".into());
        }
        if c.bound_cutoff == 0 {
            push("bound_cutoff ≥ 1 required".into());
        }
        if self.nev == 0 || self.nev_segment == 0 || !(self.residual_tol > 0.0) || self.max_disks == 0 {
            push("nev, nev_segment, max_disks ≥ 1 and residual_tol > 0 required".into());
        }
        if let Some((a, b)) = self.segment_e {
            if !(a < b) {
                push("segment_e needs lo < hi".into());
            }
        }
        if let Some((a, b)) = self.dos_e_range {
            if !(a < b) {
                push("dos_e_range needs lo < hi".into());
            }
        }
        let min_n = match exp {
            Experiment::Interface => 8,
            _ => 4,
        };
        let sized = !matches!(exp, Experiment::Bands | Experiment::Chern);
        if sized {
            for &n in &self.n {
                if n < min_n {
                    push(format!("n ≥ {min_n} required for {exp}"));
                }
            }
        }
        let dense_sized = matches!(exp, Experiment::Finite | Experiment::Dos | Experiment::Interface);
        if dense_sized && self.solver == Solver::Dense {
            if self.n.iter().any(|&n| n > self.dense_max_n) {
                push(format!("n ≤ dense_max_n = {} required by the dense solver", self.dense_max_n));
            }
        }
        if matches!(exp, Experiment::Finite | Experiment::Dos)
            && self.solver == Solver::Targeted
            && self.segment_e.is_none()
        {
            push("segment_e required by the targeted solver".into());
        }
        match exp {
            Experiment::Chern => {
                if self.n_k < 2 || self.n_phi < 2 {
                    push("n_k, n_phi ≥ 2 required".into());
                }
            }
            Experiment::Bands => {
                if self.band_k_points == 0 {
                    push("band_k_points ≥ 1 required".into());
                }
            }
            Experiment::Interface => {
                if self.n.iter().any(|n| n % 2 != 0) {
                    push("interface arrays need even n".into());
                }
            }
            Experiment::Finite => {
                if self.geometry == GeometryKind::Interface && self.n.iter().any(|n| n % 2 != 0) {
                    push("interface arrays need even n".into());
                }
            }
            Experiment::Dos => {
                if !(self.dos_sigma > 0.0) {
                    push("dos_sigma > 0 required".into());
                }
                if self.dos_n_k == 0 || self.dos_s_max == 0 {
                    push("dos_n_k, dos_s_max ≥ 1 required".into());
                }
                let cells = CellRange {
                    offset: self.dos_cell_offset,
                    count: self.dos_cells,
                };
                for &n in &self.n {
                    if let Err(e) = cells.check(n, self.dos_s_max) {
                        push(format!("dos cells invalid for n = {n}: {e}"));
                    }
                }
            }
            Experiment::CriticalPhase => {}
        }
        v
    }

    fn array(&self, n: usize, phi0: f64) -> Result<QubitArray> {
        let p = self.model(n, phi0);
        match self.geometry {
            GeometryKind::Uniform => build_uniform(&p),
            GeometryKind::Interface => build_interface(&p),
        }
    }

    fn spectrum(&self, array: &QubitArray) -> Result<TwoExSpectrum> {
        match (self.solver, self.segment_e) {
            (Solver::Targeted, Some((a, b))) => cover_segment(
                array,
                2.0 * a,
                2.0 * b,
                2.0 * self.segment_offset_e,
                &ArnoldiOptions::new(self.nev_segment),
                self.residual_tol,
                self.max_disks,
            ),
            (Solver::Targeted, None) => Err(Error::Config("segment_e required".into())),
            (Solver::Dense, _) => solve_dense(array),
        }
    }
}

/// Files written by a successful run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
}

/// A failed run with its process exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunFailure {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunFailure {}

fn failure(e: Error) -> RunFailure {
    let code = match e {
        Error::InvalidParam(_) | Error::Config(_) | Error::OutOfBounds(_) => EXIT_INVALID,
        Error::Io(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_SOLVER,
    };
    RunFailure {
        code,
        message: e.to_string(),
    }
}

/// Validate, compute every artifact, then write them to `config.out`.
/// Nothing is written unless the computation succeeds.
pub fn run(config: &RunConfig) -> std::result::Result<RunOutcome, RunFailure> {
    let artifacts = compute(config)?;
    let files = write_artifacts(&config.out, &artifacts).map_err(failure)?;
    Ok(RunOutcome { files })
}

/// The artifacts of a run, without touching the file system.
pub fn compute(config: &RunConfig) -> std::result::Result<Vec<Artifact>, RunFailure> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(RunFailure {
            code: EXIT_INVALID,
            message: violations.join("; "),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| RunFailure {
            code: EXIT_SOLVER,
            message: e.to_string(),
        })?;
    let exp = config.experiment.expect("validated");
    pool.install(|| match exp {
        Experiment::Bands => run_bands(config),
        Experiment::Chern => run_chern(config),
        Experiment::Finite => run_finite(config),
        Experiment::Dos => run_dos(config),
        Experiment::Interface => run_interface(config),
        Experiment::CriticalPhase => run_critical(config),
    })
    .map_err(failure)
}

#[derive(Serialize)]
struct ParamsOut {
    gamma0: Sci,
    phi: Sci,
    delta: Sci,
    trunc: usize,
    delta0: usize,
}

impl ParamsOut {
    fn of(c: &RunConfig) -> Self {
        Self {
            gamma0: Sci(c.gamma0),
            phi: Sci(c.phi),
            delta: Sci(c.delta),
            trunc: c.trunc,
            delta0: c.delta0,
        }
    }
}

#[derive(Serialize)]
struct BandWindowOut {
    /// Bound bands counted from the top: 3 is the highest.
    band: usize,
    k_points: usize,
    re_e_min: Sci,
    re_e_max: Sci,
    p_min: Sci,
}

#[derive(Serialize)]
struct BandsOut {
    phi0: Sci,
    bound_count_min: usize,
    bound_count_max: usize,
    bands: Vec<BandWindowOut>,
}

#[derive(Serialize)]
struct VectorOut {
    k: Sci,
    phi0: Sci,
    band_index: usize,
    re: Vec<Sci>,
    im: Vec<Sci>,
}

fn run_bands(c: &RunConfig) -> Result<Vec<Artifact>> {
    let ks = k_axis(c.band_k_points);
    let tasks: Vec<(f64, f64)> = c
        .phi0
        .iter()
        .flat_map(|&p| ks.iter().map(move |&k| (p, k)))
        .collect();
    let params = c.model(c.n[0], 0.0);
    let solved = tasks
        .par_iter()
        .map(|&(p, k)| {
            let all = band_solve(&build_bloch_matrix(&params, k, p)?, c.delta0)?;
            let bound = bound_points(&params, k, p, c.delta0, &c.window)?;
            Ok((all, bound))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut vectors = Vec::new();
    let mut summary = Vec::new();
    for (pi, &p) in c.phi0.iter().enumerate() {
        let mut count = (usize::MAX, 0usize);
        let mut win = [(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, 0usize); 3];
        for (ki, &k) in ks.iter().enumerate() {
            let (all, bound) = &solved[pi * ks.len() + ki];
            for b in all {
                rows.push(vec![
                    Cell::from(k),
                    Cell::from(p),
                    Cell::from(b.band_index),
                    Cell::from(b.energy.re),
                    Cell::from(b.energy.im),
                    Cell::from(b.bound_probability),
                ]);
            }
            count = (count.0.min(bound.len()), count.1.max(bound.len()));
            for (from_top, b) in bound.iter().rev().take(3).enumerate() {
                let w = &mut win[2 - from_top];
                w.0 = w.0.min(b.energy.re);
                w.1 = w.1.max(b.energy.re);
                w.2 = w.2.min(b.bound_probability);
                w.3 += 1;
                if c.export_vectors {
                    vectors.push(VectorOut {
                        k: Sci(k),
                        phi0: Sci(p),
                        band_index: b.band_index,
                        re: b.vector.iter().map(|z| Sci(z.re)).collect(),
                        im: b.vector.iter().map(|z| Sci(z.im)).collect(),
                    });
                }
            }
        }
        summary.push(BandsOut {
            phi0: Sci(p),
            bound_count_min: count.0,
            bound_count_max: count.1,
            bands: win
                .iter()
                .enumerate()
                .map(|(i, w)| BandWindowOut {
                    band: i + 1,
                    k_points: w.3,
                    re_e_min: Sci(w.0),
                    re_e_max: Sci(w.1),
                    p_min: Sci(w.2),
                })
                .collect(),
        });
    }

    #[derive(Serialize)]
    struct Report {
        params: ParamsOut,
        window: BandWindow,
        k_points: usize,
        energy_convention: &'static str,
        phases: Vec<BandsOut>,
    }
    let mut out = vec![
        Artifact::new(
            "bands.csv",
            csv_text(&["K", "phi0", "band_index", "ReE", "ImE", "P_bound"], rows),
        ),
        Artifact::new(
            "bands.json",
            json_text(&Report {
                params: ParamsOut::of(c),
                window: c.window,
                k_points: ks.len(),
                energy_convention: "per-excitation E = eps/2",
                phases: summary,
            })?,
        ),
    ];
    if c.export_vectors {
        out.push(Artifact::new("bands_vectors.json", json_text(&vectors)?));
    }
    Ok(out)
}

fn run_chern(c: &RunConfig) -> Result<Vec<Artifact>> {
    let params = c.model(c.n[0], 0.0);
    let grid = TorusGrid::new(c.n_k, c.n_phi)?;
    let data = sweep_torus(&params, grid, &c.window, c.delta0)?;
    let results = chern_numbers(&data, &c.window)?;

    #[derive(Serialize)]
    struct BandOut {
        band: usize,
        link_chern: i64,
        continuum_chern: Sci,
        grid: [usize; 2],
        #[serde(rename = "L")]
        trunc: usize,
        #[serde(rename = "P_th")]
        p_th: Sci,
        filled_points: usize,
        link_flux: Sci,
        continuum_plaquettes: usize,
        min_link_overlap: Sci,
    }
    #[derive(Serialize)]
    struct Report {
        params: ParamsOut,
        bands: Vec<BandOut>,
    }
    let report = Report {
        params: ParamsOut::of(c),
        bands: results
            .iter()
            .map(|r| BandOut {
                band: r.band,
                link_chern: r.link_chern,
                continuum_chern: Sci(r.continuum_chern),
                grid: [r.grid.0, r.grid.1],
                trunc: r.trunc,
                p_th: Sci(r.p_th),
                filled_points: r.filled_points,
                link_flux: Sci(r.link_flux),
                continuum_plaquettes: r.continuum_plaquettes,
                min_link_overlap: Sci(r.min_link_overlap),
            })
            .collect(),
    };
    let mut out = vec![Artifact::new("chern.json", json_text(&report)?)];
    if c.curvature {
        let surfaces = select_bound_bands(&data, &c.window)?;
        let mut rows = Vec::new();
        for s in &surfaces {
            for (k, p, f) in curvature_field(s, &params)? {
                rows.push(vec![Cell::from(k), Cell::from(p), Cell::from(s.band), Cell::from(f)]);
            }
        }
        out.push(Artifact::new("curvature.csv", csv_text(&["K", "phi0", "band", "F"], rows)));
    }
    Ok(out)
}

fn phases_for(c: &RunConfig) -> Vec<f64> {
    match c.geometry {
        GeometryKind::Uniform => c.phi0.clone(),
        GeometryKind::Interface => vec![0.0],
    }
}

#[derive(Serialize)]
struct StateOut {
    #[serde(rename = "ReE")]
    re_e: Sci,
    #[serde(rename = "ImE")]
    im_e: Sci,
    #[serde(rename = "Γ")]
    gamma: Sci,
    #[serde(rename = "T")]
    tilt: Sci,
    bound_weight: Sci,
    fidelity_vs_ansatz: Option<Sci>,
}

impl StateOut {
    fn of(s: &StateSummary) -> Self {
        Self {
            re_e: Sci(s.energy.re / 2.0),
            im_e: Sci(s.energy.im / 2.0),
            gamma: Sci(s.decay_rate),
            tilt: Sci(s.tilt),
            bound_weight: Sci(s.bound_weight),
            fidelity_vs_ansatz: s.fidelity.map(Sci),
        }
    }
}

fn run_finite(c: &RunConfig) -> Result<Vec<Artifact>> {
    let phases = phases_for(c);
    let tasks: Vec<(usize, f64)> = c
        .n
        .iter()
        .flat_map(|&n| phases.iter().map(move |&p| (n, p)))
        .collect();
    let solved = tasks
        .par_iter()
        .map(|&(n, p)| {
            let a = c.array(n, p)?;
            let s = c.spectrum(&a)?;
            let recs = state_records(&s, p, c.criteria.tilt_g, c.criteria.bound_cutoff)?;
            Ok((s, recs))
        })
        .collect::<Result<Vec<_>>>()?;

    #[derive(Serialize)]
    struct RunOut {
        n: usize,
        phi0: Sci,
        states: usize,
        complete: bool,
        trace_re: Option<Sci>,
        trace_im: Option<Sci>,
        trace_expected_im: Sci,
        most_subradiant: Option<StateOut>,
    }
    let mut out = Vec::new();
    let mut runs = Vec::new();
    for (ni, &n) in c.n.iter().enumerate() {
        let mut rows = Vec::new();
        for (pi, &p) in phases.iter().enumerate() {
            let (s, recs) = &solved[ni * phases.len() + pi];
            for r in recs {
                rows.push(vec![
                    Cell::from(r.phi0),
                    Cell::from(r.index),
                    Cell::from(r.energy.re),
                    Cell::from(r.energy.im),
                    Cell::from(r.decay_rate),
                    Cell::from(r.tilt),
                    Cell::from(r.bound_weight),
                ]);
            }
            let tr: Complex64 = s.pair_energies().sum();
            let best = s.most_subradiant().map(|v| {
                let r = &recs[v];
                StateOut::of(&StateSummary {
                    index: v,
                    energy: r.energy,
                    decay_rate: r.decay_rate,
                    tilt: r.tilt,
                    bound_weight: r.bound_weight,
                    fidelity: None,
                })
            });
            runs.push(RunOut {
                n,
                phi0: Sci(p),
                states: s.len(),
                complete: s.complete,
                trace_re: s.complete.then_some(Sci(tr.re)),
                trace_im: s.complete.then_some(Sci(tr.im)),
                trace_expected_im: Sci(-c.gamma0 * (n * (n - 1)) as f64),
                most_subradiant: best,
            });
        }
        out.push(Artifact::new(
            format!("finite_N{n}.csv"),
            csv_text(
                &["phi0", "state_index", "Re_eps", "Im_eps", "Gamma", "T", "bound_weight"],
                rows,
            ),
        ));
    }

    #[derive(Serialize)]
    struct Report {
        params: ParamsOut,
        energy_convention: &'static str,
        runs: Vec<RunOut>,
    }
    out.push(Artifact::new(
        "finite.json",
        json_text(&Report {
            params: ParamsOut::of(c),
            energy_convention: "CSV holds pair energies eps; E = eps/2 per excitation",
            runs,
        })?,
    ));
    Ok(out)
}

fn run_dos(c: &RunConfig) -> Result<Vec<Artifact>> {
    #[derive(Serialize)]
    struct DosOut {
        n: usize,
        phi0: Sci,
        sigma: Sci,
        s_max: usize,
        cells: usize,
        cell_offset: usize,
        states: usize,
        e_points: usize,
        k_points: usize,
        ridge_tolerance: Sci,
        ridge_max_deviation: [Sci; 2],
        ridge_failures: usize,
        file: String,
    }
    let mut out = Vec::new();
    let mut reports = Vec::new();
    let cells = CellRange {
        offset: c.dos_cell_offset,
        count: c.dos_cells,
    };
    for &n in &c.n {
        for (pi, &p) in c.phi0.iter().enumerate() {
            let array = c.array(n, p)?;
            let ks = k_axis(c.dos_n_k);
            let reference = reference_ridges(&c.model(n, p), p, &ks, c.delta0, &c.window)?;
            let (lo, hi) = match c.dos_e_range {
                Some(r) => r,
                None => reference.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, r| {
                    (acc.0.min(r[0] - RIDGE_PAD), acc.1.max(r[1] + RIDGE_PAD))
                }),
            };
            let mut settings = DosSettings::auto(c.dos_sigma, c.dos_s_max, cells, lo, hi)?;
            settings.n_k = c.dos_n_k;
            let spectrum = c.spectrum(&array)?;
            let grid = dos(&spectrum, &array, &settings)?;
            let check = ridge_check(&grid, &reference, RIDGE_PAD)?;
            let name = format!("dos_N{n}_p{pi}.csv");
            out.push(Artifact::new(
                name.clone(),
                matrix_csv_text("E\\K", &grid.e_axis, &grid.k_axis, |r, k| grid.f[[r, k]]),
            ));
            out.push(Artifact::new(
                format!("ridges_N{n}_p{pi}.csv"),
                csv_text(
                    &["K", "band2", "ridge2", "band3", "ridge3"],
                    grid.k_axis.iter().enumerate().map(|(i, &k)| {
                        vec![
                            Cell::from(k),
                            Cell::from(reference[i][0]),
                            Cell::from(check.ridges[i][0]),
                            Cell::from(reference[i][1]),
                            Cell::from(check.ridges[i][1]),
                        ]
                    }),
                ),
            ));
            reports.push(DosOut {
                n,
                phi0: Sci(p),
                sigma: Sci(grid.sigma),
                s_max: grid.s_max,
                cells: grid.cells.count,
                cell_offset: grid.cells.offset,
                states: spectrum.len(),
                e_points: grid.e_axis.len(),
                k_points: grid.k_axis.len(),
                ridge_tolerance: Sci(check.tolerance),
                ridge_max_deviation: [Sci(check.max_deviation[0]), Sci(check.max_deviation[1])],
                ridge_failures: check.failures,
                file: name,
            });
        }
    }
    #[derive(Serialize)]
    struct Report {
        params: ParamsOut,
        energy_convention: &'static str,
        runs: Vec<DosOut>,
    }
    out.push(Artifact::new(
        "dos.json",
        json_text(&Report {
            params: ParamsOut::of(c),
            energy_convention: "per-excitation E = eps/2",
            runs: reports,
        })?,
    ));
    Ok(out)
}

#[derive(Serialize)]
struct LabelledState {
    kind: &'static str,
    #[serde(flatten)]
    state: StateOut,
}

fn run_interface(c: &RunConfig) -> Result<Vec<Artifact>> {
    #[derive(Serialize)]
    struct InterfaceOut {
        #[serde(rename = "N")]
        n: usize,
        params: ParamsOut,
        energy_guess_re: Sci,
        energy_guess_im: Sci,
        symmetric_fidelity: Sci,
        interface_states: Vec<LabelledState>,
        critical_phases: Vec<Sci>,
    }
    let opts = SearchOptions {
        nev_interface: c.nev,
        nev_edge: c.nev_segment,
        edge_segment: c.segment_e.map(|(a, b)| (2.0 * a, 2.0 * b)),
        edge_offset: 2.0 * c.segment_offset_e,
        residual_tol: c.residual_tol,
        max_disks: c.max_disks,
    };
    let reports = c
        .n
        .par_iter()
        .map(|&n| {
            let p = c.model(n, 0.0);
            let (guess, sym, near, edge) = match c.solver {
                Solver::Targeted => {
                    let s = search_interface(&p, &c.criteria, &opts)?;
                    (s.energy_guess, s.symmetric_fidelity, s.near_guess, s.edge)
                }
                Solver::Dense => {
                    let ia = interface_ansatz(&p)?;
                    let sp = solve_dense(&build_interface(&p)?)?;
                    let cls = find_interface_states(&sp, &c.criteria, Some(&ia.ansatz))?;
                    let best = cls.best_ansatz_match.as_ref().expect("non-empty spectrum");
                    let sym = crate::interface::fidelity(&ia.symmetric.psi.view(), &sp.state(best.index));
                    (ia.energy_guess(), sym, cls.clone(), Some(cls))
                }
            };
            let mut states = Vec::new();
            if let Some(b) = &near.best_ansatz_match {
                states.push(LabelledState {
                    kind: "best_ansatz",
                    state: StateOut::of(b),
                });
            }
            for s in &near.long_lived {
                states.push(LabelledState {
                    kind: "long_lived",
                    state: StateOut::of(s),
                });
            }
            if let Some(e) = &edge {
                for s in &e.bound_edge {
                    states.push(LabelledState {
                        kind: "bound_edge",
                        state: StateOut::of(s),
                    });
                }
            }
            Ok(InterfaceOut {
                n,
                params: ParamsOut::of(c),
                energy_guess_re: Sci(guess.re / 2.0),
                energy_guess_im: Sci(guess.im / 2.0),
                symmetric_fidelity: Sci(sym),
                interface_states: states,
                critical_phases: critical_phases(n).map(|r| r.into_iter().map(Sci).collect()).unwrap_or_default(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![Artifact::new("interface.json", json_text(&reports)?)])
}

fn run_critical(c: &RunConfig) -> Result<Vec<Artifact>> {
    #[derive(Serialize)]
    struct Inversion {
        phi0: Sci,
        commutator_defect: Sci,
        sector_spectrum_distance: Sci,
    }
    #[derive(Serialize)]
    struct CriticalOut {
        #[serde(rename = "N")]
        n: usize,
        every_phase_critical: bool,
        critical_phases: Vec<Sci>,
        critical_phases_over_2pi: Vec<Sci>,
        inversion: Vec<Inversion>,
        control: Option<Inversion>,
    }
    let check = |n: usize, phi0: f64| -> Result<Inversion> {
        let a = build_uniform(&c.model(n, phi0))?;
        let h = build_pair_hamiltonian(&a)?;
        let b = PairBasis::new(n);
        Ok(Inversion {
            phi0: Sci(phi0),
            commutator_defect: Sci(inversion_defect(&h, &b)),
            sector_spectrum_distance: Sci(inversion_spectrum_check(&h, &b)?),
        })
    };
    let mut reports = Vec::new();
    for &n in &c.n {
        let (roots, all) = match critical_phases(n) {
            Ok(r) => (r, false),
            Err(_) if n % 3 == 2 => (Vec::new(), true),
            Err(e) => return Err(e),
        };
        let mut inversion = Vec::new();
        let mut control = None;
        if c.inversion_check && !roots.is_empty() && n <= c.dense_max_n {
            for &r in &roots {
                inversion.push(check(n, r)?);
            }
            control = Some(check(n, roots[0] + PI / 4.0)?);
        }
        reports.push(CriticalOut {
            n,
            every_phase_critical: all,
            critical_phases_over_2pi: roots.iter().map(|r| Sci(r / (2.0 * PI))).collect(),
            critical_phases: roots.into_iter().map(Sci).collect(),
            inversion,
            control,
        });
    }
    Ok(vec![Artifact::new("critical_phases.json", json_text(&reports)?)])
}
