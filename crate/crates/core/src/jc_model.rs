//! Single-excitation Jaynes-Cummings model of the qubit-resonator system.
//!
//! All frequencies are in GHz. Decay rates (`kappa`, `1/T1`) are ordinary
//! frequencies, so the dressed-mode linewidths are full widths at half
//! maximum directly comparable to `kappa`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Physical parameters of the coupled system plus detector scale/background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcParams {
    /// Resonator frequency (GHz).
    pub nu_r: f64,
    /// Qubit frequency (GHz).
    pub nu_q: f64,
    /// Coupling strength (GHz).
    pub g: f64,
    /// Photon escape rate (GHz).
    pub kappa: f64,
    /// Qubit relaxation time (µs).
    pub t1: f64,
    /// Detector scale.
    pub amp: f64,
    /// Detector background.
    pub bg: f64,
}

impl JcParams {
    pub fn validate(&self) -> Result<()> {
        fn check(name: &'static str, v: f64, ok: bool, rule: &str) -> Result<()> {
            if v.is_finite() && ok {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} violates {rule}")))
            }
        }
        check("nu_r", self.nu_r, self.nu_r > 0.0, "nu_r > 0")?;
        check("nu_q", self.nu_q, self.nu_q >= 0.0, "nu_q >= 0")?;
        check("g", self.g, self.g >= 0.0, "g >= 0")?;
        check("kappa", self.kappa, self.kappa > 0.0, "kappa > 0")?;
        check("t1", self.t1, self.t1 > 0.0, "t1 > 0")?;
        check("amp", self.amp, self.amp > 0.0, "amp > 0")?;
        check("bg", self.bg, self.bg >= 0.0, "bg >= 0")?;
        Ok(())
    }

    /// Qubit-resonator detuning `nu_q - nu_r`.
    pub fn detuning(&self) -> f64 {
        self.nu_q - self.nu_r
    }

    /// Qubit decay rate `1/T1` in GHz.
    pub fn qubit_decay(&self) -> f64 {
        t1_rate(self.t1)
    }
}

/// `1/T1` in GHz for `t1` in µs.
pub fn t1_rate(t1_us: f64) -> f64 {
    1e-3 / t1_us
}

/// Dressed-mode frequencies, photon weights and linewidths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedModes {
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

impl DressedModes {
    pub fn splitting(&self) -> f64 {
        self.nu_plus - self.nu_minus
    }
}

/// Diagonalize the single-excitation block of the coupled Hamiltonian.
///
/// `w±` is the photon (`|1↓⟩`) probability of each dressed state; it is
/// evaluated in a cancellation-free form so that `w+ + w- = 1` to rounding
/// and swapping `nu_r` with `nu_q` swaps the weights exactly.
pub fn dressed_modes(p: &JcParams) -> Result<DressedModes> {
    p.validate()?;
    let delta = p.detuning();
    if p.g == 0.0 && delta == 0.0 {
        return Err(Error::DegenerateDressedBasis);
    }
    Ok(dressed_modes_unchecked(
        p.nu_r,
        p.nu_q,
        p.g,
        p.kappa,
        p.qubit_decay(),
    ))
}

pub(crate) fn dressed_modes_unchecked(
    nu_r: f64,
    nu_q: f64,
    g: f64,
    kappa: f64,
    qubit_decay: f64,
) -> DressedModes {
    let delta = nu_q - nu_r;
    let half = 0.5 * delta;
    let r = half.hypot(g);
    let split = (4.0 * g * g + delta * delta).sqrt();
    let center = nu_r + nu_q;
    // photon weight of the qubit-like state: g^2 / (2R (R + |Δ|/2))
    let small = g * g / (2.0 * r * (r + half.abs()));
    let large = (r + half.abs()) / (2.0 * r);
    let (w_plus, w_minus) = if delta > 0.0 {
        (small, large)
    } else if delta < 0.0 {
        (large, small)
    } else {
        (0.5, 0.5)
    };
    let width = |w: f64| w * kappa + (1.0 - w) * qubit_decay;
    DressedModes {
        nu_plus: 0.5 * (center + split),
        nu_minus: 0.5 * (center - split),
        w_plus,
        w_minus,
        gamma_plus: width(w_plus),
        gamma_minus: width(w_minus),
    }
}

/// Complex Lorentzian `(1 - i (nu - nu0) / (gamma/2))^-1`.
pub fn lorentzian(nu: f64, nu0: f64, gamma: f64) -> Complex64 {
    Complex64::new(1.0, -(nu - nu0) / (0.5 * gamma)).inv()
}

/// Transmitted power at `nu` for the given dressed modes and detector scale.
pub fn transmission_at(modes: &DressedModes, amp: f64, bg: f64, nu: f64) -> f64 {
    let s = modes.w_plus * lorentzian(nu, modes.nu_plus, modes.gamma_plus)
        + modes.w_minus * lorentzian(nu, modes.nu_minus, modes.gamma_minus);
    bg + amp * s.norm_sqr()
}

/// A sampled transmission curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    freqs: Vec<f64>,
    values: Vec<f64>,
}

impl SpectrumTrace {
    pub fn new(freqs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if freqs.len() != values.len() {
            return Err(Error::invalid(
                "values",
                format!("length {} != {} frequencies", values.len(), freqs.len()),
            ));
        }
        check_increasing(&freqs)?;
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(
                "values",
                format!("{v} is not a finite value >= 0"),
            ));
        }
        Ok(SpectrumTrace { freqs, values })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs.iter().copied().zip(self.values.iter().copied())
    }
}

pub(crate) fn check_increasing(freqs: &[f64]) -> Result<()> {
    if let Some(f) = freqs.iter().find(|f| !f.is_finite()) {
        return Err(Error::invalid("freqs", format!("{f} is not finite")));
    }
    if let Some(w) = freqs.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "freqs",
            format!("not strictly increasing ({} then {})", w[0], w[1]),
        ));
    }
    Ok(())
}

/// Low-power transmission `B + A |Σ± w± l(ν, ν±, γ±)|²` on a frequency grid.
pub fn transmission(p: &JcParams, freqs: &[f64]) -> Result<SpectrumTrace> {
    check_increasing(freqs)?;
    let modes = dressed_modes(p)?;
    let values = freqs
        .iter()
        .map(|&nu| transmission_at(&modes, p.amp, p.bg, nu))
        .collect();
    SpectrumTrace::new(freqs.to_vec(), values)
}

/// Lowest-order dispersive pull of the resonator-like mode, `g²/(ν_r − ν_q)`.
///
/// The resonator-like dressed mode sits near `ν_r + dispersive_shift(p)`: a
/// qubit below the resonator pushes it up. Only valid far from resonance;
/// rejected when `|Δ| <= 3g`.
pub fn dispersive_shift(p: &JcParams) -> Result<f64> {
    p.validate()?;
    let delta = p.detuning();
    if p.g == 0.0 {
        return Ok(0.0);
    }
    if delta.abs() <= 3.0 * p.g {
        return Err(Error::DispersiveInvalid {
            detuning: delta.abs(),
            limit: 3.0 * p.g,
        });
    }
    Ok(p.g * p.g / -delta)
}

/// Frequency of the dressed mode with the larger photon weight.
pub fn resonator_like_frequency(modes: &DressedModes) -> f64 {
    if modes.w_plus >= modes.w_minus {
        modes.nu_plus
    } else {
        modes.nu_minus
    }
}
