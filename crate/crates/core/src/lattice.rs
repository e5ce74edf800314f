//! Qubit geometries and the photon-mediated coupling kernel.
//!
//! Qubits are indexed from 1. The modulated chain places qubit `j` at
//! `z_j = j + δ cos(2πj/3 + φ₀)` in units of the mean spacing; the interface
//! geometry uses phase 0 on the left half and π on the right half.

use std::f64::consts::{PI, TAU};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of qubits per unit cell. The Bloch index maps assume this value.
pub const PERIOD: usize = 3;

/// Largest admissible modulation amplitude (positions stay strictly ordered).
pub const MAX_DELTA: f64 = 0.5;

/// Reduce an angle to `[0, 2π)`.
pub fn reduce_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Physical and numerical parameters shared by every builder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Single-qubit radiative rate Γ₀.
    pub gamma0: f64,
    /// Waveguide phase per unit spacing, φ = ω₀d/c.
    pub phi: f64,
    /// Modulation amplitude δ in units of the spacing.
    pub delta: f64,
    phi0: f64,
    /// Modulation period; only 3 is supported.
    pub beta: usize,
    /// Number of qubits in a finite array.
    pub n_qubits: usize,
    /// Truncation of the relative-distance basis in the Bloch problem.
    pub trunc: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            gamma0: 1.0,
            phi: 0.3,
            delta: 0.1,
            phi0: 0.0,
            beta: PERIOD,
            n_qubits: 100,
            trunc: 70,
        }
    }
}

impl ModelParams {
    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn with_phi0(mut self, phi0: f64) -> Self {
        self.phi0 = reduce_phase(phi0);
        self
    }

    pub fn set_phi0(&mut self, phi0: f64) {
        self.phi0 = reduce_phase(phi0);
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_gamma0(mut self, gamma0: f64) -> Self {
        self.gamma0 = gamma0;
        self
    }

    pub fn with_n_qubits(mut self, n: usize) -> Self {
        self.n_qubits = n;
        self
    }

    pub fn with_trunc(mut self, trunc: usize) -> Self {
        self.trunc = trunc;
        self
    }

    /// Every violated invariant, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            v.push("gamma0 > 0 required".to_string());
        }
        if !self.phi.is_finite() {
            v.push("phi must be finite".to_string());
        }
        if !(self.delta >= 0.0 && self.delta < MAX_DELTA) {
            v.push("delta < 0.5 required (and delta >= 0)".to_string());
        }
        if !self.phi0.is_finite() {
            v.push("phi0 must be finite".to_string());
        }
        if self.beta != PERIOD {
            v.push("beta = 3 required".to_string());
        }
        if self.n_qubits == 0 {
            v.push("n_qubits > 0 required".to_string());
        }
        if self.trunc == 0 {
            v.push("trunc > 0 required".to_string());
        }
        v
    }

    pub fn check(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(msg) => Err(Error::InvalidParam(msg)),
        }
    }

    /// Sublattice offsets `δ cos(2πr/3 + φ₀)` for `r = j mod 3`.
    pub(crate) fn offsets(&self, phase: f64) -> [f64; PERIOD] {
        let mut o = [0.0; PERIOD];
        for (r, slot) in o.iter_mut().enumerate() {
            *slot = self.delta * (TAU * r as f64 / PERIOD as f64 + phase).cos();
        }
        o
    }

    /// Position of qubit `j` on the infinite modulated chain (any integer `j`).
    pub fn position(&self, j: i64) -> f64 {
        modulated_position(j, self.delta, self.phi0)
    }
}

/// `j + δ cos(2πj/3 + φ₀)`, evaluated from `j mod 3` so that equivalent
/// sublattice sites share a bit-identical offset.
pub fn modulated_position(j: i64, delta: f64, phase: f64) -> f64 {
    let r = j.rem_euclid(PERIOD as i64) as f64;
    j as f64 + delta * (TAU * r / PERIOD as f64 + phase).cos()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeometryKind {
    Uniform,
    Interface,
}

/// Ordered qubit positions of a finite array.
#[derive(Clone, Debug)]
pub struct QubitArray {
    positions: Vec<f64>,
    kind: GeometryKind,
    params: ModelParams,
}

impl QubitArray {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Positions `z_1..z_N`, stored at indices `0..N`.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Position of qubit `j` (1-based).
    pub fn z(&self, j: usize) -> f64 {
        self.positions[j - 1]
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Dense single-excitation matrix `G[a][b] = −iΓ₀ e^{iφ|z_a − z_b|}`.
    pub fn kernel_matrix(&self) -> Array2<Complex64> {
        let n = self.len();
        let z = &self.positions;
        Array2::from_shape_fn((n, n), |(a, b)| coupling_kernel(&self.params, z[a], z[b]))
    }
}

fn check_geometry(params: &ModelParams) -> Result<()> {
    params.check()?;
    if params.n_qubits == 0 {
        return Err(Error::InvalidParam("n_qubits > 0 required".into()));
    }
    Ok(())
}

/// Uniformly modulated chain with the phase `φ₀` stored in `params`.
pub fn build_uniform(params: &ModelParams) -> Result<QubitArray> {
    check_geometry(params)?;
    let off = params.offsets(params.phi0);
    let positions = (1..=params.n_qubits)
        .map(|j| j as f64 + off[j % PERIOD])
        .collect();
    Ok(QubitArray {
        positions,
        kind: GeometryKind::Uniform,
        params: params.clone(),
    })
}

/// Two segments joined between qubits N/2 and N/2+1: phase 0 on the left,
/// phase π on the right. The stored `φ₀` is not used.
pub fn build_interface(params: &ModelParams) -> Result<QubitArray> {
    check_geometry(params)?;
    let n = params.n_qubits;
    if n % 2 != 0 {
        return Err(Error::InvalidParam(format!(
            "interface geometry needs an even qubit count, got {n}"
        )));
    }
    let left = params.offsets(0.0);
    let right = params.offsets(PI);
    let positions = (1..=n)
        .map(|j| {
            let off = if j <= n / 2 { left } else { right };
            j as f64 + off[j % PERIOD]
        })
        .collect();
    Ok(QubitArray {
        positions,
        kind: GeometryKind::Interface,
        params: params.clone(),
    })
}

/// Photon-mediated amplitude `−iΓ₀ e^{iφ|z_a − z_b|}`.
#[inline]
pub fn coupling_kernel(params: &ModelParams, z_a: f64, z_b: f64) -> Complex64 {
    let d = (z_a - z_b).abs();
    let (s, c) = (params.phi * d).sin_cos();
    // −i(c + i s) = s − i c
    Complex64::new(params.gamma0 * s, -params.gamma0 * c)
}
