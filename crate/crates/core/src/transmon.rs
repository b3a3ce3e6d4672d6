//! Charge-basis transmon eigensolver.
//!
//! `H = 4 E_C n² − E_J cos φ` with the offset charge fixed to zero. In the
//! charge basis `|n⟩`, `n = −N..N`, the Hamiltonian is tridiagonal: `4 E_C n²`
//! on the diagonal and `−E_J/2` coupling `|n⟩ ↔ |n ± 1⟩`. Energies are kept in
//! GHz (`E/h`) so `ν_q = E₁ − E₀` directly.

use std::f64::consts::PI;

use crate::coupling::CapCoeffs;
use crate::error::{Error, Result};
use crate::tridiag::symmetric_tridiagonal_eigen;

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;

pub const DEFAULT_CUTOFF: usize = 20;
pub const EXTENDED_CUTOFF: usize = 40;
pub const MIN_CUTOFF: usize = 5;
const INVERT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmonSpec {
    /// Charging energy `E_C/h` (GHz).
    pub ec: f64,
    /// Josephson energy `E_J/h` (GHz).
    pub ej: f64,
    /// Charge basis spans `n = −cutoff..cutoff`.
    pub cutoff: usize,
}

impl TransmonSpec {
    /// Spec with the default cutoff, extended when `E_J/E_C > 100`.
    pub fn new(ec: f64, ej: f64) -> Self {
        TransmonSpec {
            ec,
            ej,
            cutoff: default_cutoff(ec, ej),
        }
    }

    pub fn with_cutoff(ec: f64, ej: f64, cutoff: usize) -> Self {
        TransmonSpec { ec, ej, cutoff }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ec.is_finite() && self.ec > 0.0) {
            return Err(Error::invalid("ec", format!("{} must be > 0", self.ec)));
        }
        if !(self.ej.is_finite() && self.ej >= 0.0) {
            return Err(Error::invalid("ej", format!("{} must be >= 0", self.ej)));
        }
        if self.cutoff < MIN_CUTOFF {
            return Err(Error::invalid(
                "cutoff",
                format!("{} must be >= {MIN_CUTOFF}", self.cutoff),
            ));
        }
        Ok(())
    }

    fn diagonal(&self) -> Vec<f64> {
        let n = self.cutoff as i64;
        (-n..=n).map(|k| 4.0 * self.ec * (k * k) as f64).collect()
    }

    fn off_diagonal(&self) -> Vec<f64> {
        vec![-0.5 * self.ej; 2 * self.cutoff]
    }
}

fn default_cutoff(ec: f64, ej: f64) -> usize {
    if ej > 100.0 * ec {
        EXTENDED_CUTOFF
    } else {
        DEFAULT_CUTOFF
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmonSolution {
    /// All eigenenergies (GHz), ascending. Degenerate at `E_J = 0`.
    pub energies: Vec<f64>,
    /// `E₁ − E₀` (GHz).
    pub nu_q: f64,
    /// `|⟨0|n|1⟩|`.
    pub n01: f64,
}

impl TransmonSolution {
    /// `(E₂ − E₁) − (E₁ − E₀)`.
    pub fn anharmonicity(&self) -> f64 {
        (self.energies[2] - self.energies[1]) - (self.energies[1] - self.energies[0])
    }
}

pub fn solve(spec: &TransmonSpec) -> Result<TransmonSolution> {
    spec.validate()?;
    let eig = symmetric_tridiagonal_eigen(&spec.diagonal(), &spec.off_diagonal(), true)?;
    let n = spec.cutoff as i64;
    let (psi0, psi1) = (eig.vector(0), eig.vector(1));
    let matrix_element: f64 = (-n..=n)
        .zip(psi0.iter().zip(psi1))
        .map(|(k, (a, b))| k as f64 * a * b)
        .sum();
    let nu_q = eig.values[1] - eig.values[0];
    Ok(TransmonSolution {
        energies: eig.values,
        nu_q,
        n01: matrix_element.abs(),
    })
}

/// Qubit frequency only (no eigenvectors).
pub fn qubit_frequency(spec: &TransmonSpec) -> Result<f64> {
    spec.validate()?;
    let eig = symmetric_tridiagonal_eigen(&spec.diagonal(), &spec.off_diagonal(), false)?;
    Ok(eig.values[1] - eig.values[0])
}

/// Asymptotic transmon frequency `sqrt(8 E_J E_C) − E_C`.
pub fn asymptotic_frequency(ec: f64, ej: f64) -> f64 {
    (8.0 * ej * ec).sqrt() - ec
}

/// Asymptotic matrix element `(E_J / 8E_C)^(1/4) / √2`.
pub fn asymptotic_n01(ec: f64, ej: f64) -> f64 {
    (ej / (8.0 * ec)).powf(0.25) / 2f64.sqrt()
}

/// Find `E_J` such that the qubit frequency equals `nu_q_target` at charging
/// energy `ec`, by bracketed false position on the monotone map `E_J ↦ ν_q`.
/// The bracket starts at half and one and a half times the asymptotic
/// estimate `(ν + E_C)² / 8E_C` and widens upward as needed.
pub fn invert_ej(ec: f64, nu_q_target: f64) -> Result<f64> {
    let fail = |reason: String| Error::InvertEj {
        ec,
        target: nu_q_target,
        reason,
    };
    if !(ec.is_finite() && ec > 0.0) {
        return Err(fail("E_C must be > 0".into()));
    }
    if !(nu_q_target.is_finite() && nu_q_target > 0.0) {
        return Err(fail("target must be > 0".into()));
    }
    // ν_q → 4 E_C as E_J → 0⁺
    let floor = 4.0 * ec;
    if nu_q_target <= floor {
        return Err(fail(format!(
            "target below the E_J -> 0 floor 4 E_C = {floor} GHz"
        )));
    }

    let guess = (nu_q_target + ec).powi(2) / (8.0 * ec);
    let mut hi = 1.5 * guess;
    let mut cutoff = default_cutoff(ec, hi);
    let nu = |ej: f64, cutoff: usize| qubit_frequency(&TransmonSpec::with_cutoff(ec, ej, cutoff));
    let mut expansions = 0;
    while nu(hi, cutoff)? < nu_q_target {
        hi *= 2.0;
        cutoff = default_cutoff(ec, hi);
        expansions += 1;
        if expansions > 40 {
            return Err(fail("no upper bracket found".into()));
        }
    }
    let mut lo = 0.5 * guess;
    if nu(lo, cutoff)? > nu_q_target {
        lo = 0.0;
    }
    let mut f_lo = nu(lo, cutoff)? - nu_q_target;
    let mut f_hi = nu(hi, cutoff)? - nu_q_target;

    // Illinois false position; bisect when the secant leaves the bracket
    let mut last_side = 0i8;
    for _ in 0..INVERT_MAX_ITER {
        let mut mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        let f = nu(mid, cutoff)? - nu_q_target;
        if f.abs() < 1e-11 || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
            f_lo = f;
            if last_side < 0 {
                f_hi *= 0.5;
            }
            last_side = -1;
        } else {
            hi = mid;
            f_hi = f;
            if last_side > 0 {
                f_lo *= 0.5;
            }
            last_side = 1;
        }
    }
    Err(fail(format!(
        "root search did not converge in {INVERT_MAX_ITER} iterations"
    )))
}

/// Charging energy `E_C/h` (GHz) from the capacitance coefficients (fF).
pub fn charging_energy(cap: &CapCoeffs) -> Result<f64> {
    cap.validate()?;
    let c_sigma = cap.total_capacitance();
    if !(c_sigma.is_finite() && c_sigma > 0.0) {
        return Err(Error::invalid(
            "capacitance",
            format!("C_sigma = {c_sigma} fF"),
        ));
    }
    Ok(charging_energy_from_total(c_sigma))
}

/// `e² / (2 C h)` in GHz for `c_sigma_ff` in fF.
pub fn charging_energy_from_total(c_sigma_ff: f64) -> f64 {
    let e = ELEMENTARY_CHARGE;
    e * e / (2.0 * c_sigma_ff * 1e-15 * PLANCK) * 1e-9
}

/// Symmetric two-junction SQUID.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquidSpec {
    /// Maximum Josephson energy (GHz).
    pub ej_max: f64,
    /// Flux in units of the flux quantum.
    pub flux: f64,
}

/// `E_J = E_J,max |cos(π Φ/Φ₀)|`.
pub fn ej_of_flux(s: &SquidSpec) -> f64 {
    s.ej_max * (PI * s.flux).cos().abs()
}
