//! Fit pipelines: per-spectrum parameter extraction, flux-scan averaging,
//! the sinusoidal `g(x)` fit and the one-parameter height fit of `g(y)`.

use std::f64::consts::PI;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{self, CapacitanceGrid, GeometryParams};
use crate::error::{Error, Result};
use crate::jc_model::{dressed_modes_unchecked, t1_rate, transmission_at, JcParams, SpectrumTrace};
use crate::lm::{lm_minimize, numerical_jacobian, robust_covariance, LmOptions, LmReport};

/// Outcome of a fit: named values with 1-σ standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub converged: bool,
    /// Normal matrix singular at the solution (some sigmas infinite).
    #[serde(default)]
    pub singular: bool,
    /// Optimum sits on a search boundary.
    #[serde(default)]
    pub at_bound: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub params: IndexMap<String, f64>,
    pub sigmas: IndexMap<String, f64>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.sigmas.get(name).copied()
    }

    fn from_parts(
        names: &[&str],
        values: &[f64],
        sigmas: &[f64],
        rep: &LmReport,
        singular: bool,
    ) -> Self {
        FitResult {
            converged: rep.converged(),
            singular,
            at_bound: false,
            iterations: rep.iterations,
            residual_norm: rep.residual_norm,
            params: names
                .iter()
                .map(|n| n.to_string())
                .zip(values.iter().copied())
                .collect(),
            sigmas: names
                .iter()
                .map(|n| n.to_string())
                .zip(sigmas.iter().copied())
                .collect(),
        }
    }
}

/// Names of the free parameters of [`fit_spectrum`], in order.
pub const SPECTRUM_PARAMS: [&str; 6] = ["amp", "bg", "g", "kappa", "nu_r", "nu_q"];

fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u
    } else {
        u.exp().ln_1p()
    }
}

fn softplus_inv(g: f64) -> f64 {
    if g > 30.0 {
        g
    } else {
        g.exp_m1().ln()
    }
}

// natural order: amp, bg, g, kappa, nu_r, nu_q, with both frequencies taken
// relative to `center` so difference steps are absolute, not scaled by ~ν
fn spectrum_residuals(
    trace: &SpectrumTrace,
    natural: &[f64],
    decay: f64,
    center: f64,
) -> Option<Vec<f64>> {
    let [amp, bg, g, kappa, dr, dq] = <[f64; 6]>::try_from(natural).ok()?;
    let (nu_r, nu_q) = (center + dr, center + dq);
    // the model is even in g, so negative probes are harmless
    if !(kappa > 0.0) || (g == 0.0 && nu_r == nu_q) {
        return None;
    }
    let modes = dressed_modes_unchecked(nu_r, nu_q, g, kappa, decay);
    Some(
        trace
            .iter()
            .map(|(nu, y)| transmission_at(&modes, amp, bg, nu) - y)
            .collect(),
    )
}

fn to_natural(u: &[f64]) -> [f64; 6] {
    [u[0], u[1], softplus(u[2]), u[3].exp(), u[4], u[5]]
}

/// Fit the low-power transmission model with `A, B, g, κ, ν_r, ν_q` free and
/// `T1` (µs) held fixed.
///
/// `g ≥ 0` and `κ > 0` are enforced by fitting `softplus⁻¹(g)` and `ln κ`.
/// Residuals are weighted uniformly; reported sigmas are
/// heteroscedasticity-consistent standard errors of the natural parameters,
/// so they stay calibrated under noise proportional to the signal.
///
/// When the weaker dressed peak is not significant against the residual
/// noise, `g` and `ν_q` are not separately identifiable: their sigmas are set
/// infinite and the result is flagged `singular`.
pub fn fit_spectrum(trace: &SpectrumTrace, init: &JcParams, t1_fixed: f64) -> Result<FitResult> {
    let start = [init.amp, init.bg, init.g, init.kappa, init.nu_r, init.nu_q];
    if start.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("initial parameters must be finite".into()));
    }
    if !(t1_fixed.is_finite() && t1_fixed > 0.0) {
        return Err(Error::invalid("t1", format!("{t1_fixed} must be > 0")));
    }
    if !(init.kappa > 0.0) {
        return Err(Error::invalid("kappa", "initial kappa must be > 0"));
    }
    if trace.len() < SPECTRUM_PARAMS.len() + 1 {
        return Err(Error::Fit(format!(
            "{} points cannot constrain 6 parameters",
            trace.len()
        )));
    }
    let span = trace.freqs()[trace.len() - 1] - trace.freqs()[0];
    if !(span > 4.0 * init.g) {
        return Err(Error::Fit(format!(
            "trace span {span} GHz does not cover both peaks (needs > 4 g = {} GHz)",
            4.0 * init.g
        )));
    }
    let decay = t1_rate(t1_fixed);
    let center = 0.5 * (trace.freqs()[0] + trace.freqs()[trace.len() - 1]);
    let g0 = init.g.max(1e-6);
    let u0 = [
        init.amp,
        init.bg,
        softplus_inv(g0),
        init.kappa.ln(),
        init.nu_r - center,
        init.nu_q - center,
    ];
    // the qubit-like peak can be as narrow as 1/T1
    let opts = LmOptions {
        diff_step: 1e-6,
        ..LmOptions::default()
    };
    let rep = lm_minimize(
        |u| spectrum_residuals(trace, &to_natural(u), decay, center),
        &u0,
        &opts,
    )?;
    let offsets = to_natural(&rep.params);
    let f = |p: &[f64]| spectrum_residuals(trace, p, decay, center);
    let jac = numerical_jacobian(&f, &offsets, trace.len(), opts.diff_step);
    let (sigmas, singular) = match jac.zip(f(&offsets)) {
        Some((jac, r)) => {
            let (cov, singular) = robust_covariance(&jac, &r);
            (
                (0..6).map(|j| cov[(j, j)].sqrt()).collect::<Vec<_>>(),
                singular,
            )
        }
        None => (vec![f64::INFINITY; 6], true),
    };
    let mut natural = offsets;
    natural[4] += center;
    natural[5] += center;
    let mut sigmas = sigmas;
    let hidden = weaker_peak_hidden(trace, &natural, decay, rep.residual_norm);
    if hidden {
        // g and ν_q only enter through one visible peak
        sigmas[2] = f64::INFINITY;
        sigmas[5] = f64::INFINITY;
    }
    Ok(FitResult::from_parts(
        &SPECTRUM_PARAMS,
        &natural,
        &sigmas,
        &rep,
        singular || rep.singular || hidden,
    ))
}

// The weaker dressed peak is undetectable when its height `A w²`, summed in
// quadrature over the samples within its linewidth, stays below three times
// the rms residual.
fn weaker_peak_hidden(trace: &SpectrumTrace, natural: &[f64], decay: f64, rnorm: f64) -> bool {
    let [amp, _, g, kappa, nu_r, nu_q] = <[f64; 6]>::try_from(natural).expect("six parameters");
    if g == 0.0 {
        return true;
    }
    let modes = dressed_modes_unchecked(nu_r, nu_q, g, kappa, decay);
    let (w, gamma) = if modes.w_plus < modes.w_minus {
        (modes.w_plus, modes.gamma_plus)
    } else {
        (modes.w_minus, modes.gamma_minus)
    };
    let n = trace.len();
    let df = (trace.freqs()[n - 1] - trace.freqs()[0]) / (n - 1) as f64;
    let samples = (gamma / df).max(1.0);
    let rms = rnorm / (n as f64).sqrt();
    amp.abs() * w * w * samples.sqrt() < 3.0 * rms
}

/// Data-driven starting point for [`fit_spectrum`].
///
/// `B` from the trace edges, `ν` and height of the tallest peak, the
/// strongest separate local maximum as the second peak, photon weights from
/// the square roots of the peak heights, then `ν_r = Σ w ν`,
/// `ν_q = ν₊ + ν₋ − ν_r`, `g = sqrt(w₊ w₋) |ν₊ − ν₋|` and `κ` from the FWHM of
/// the taller peak. With a single peak the qubit is placed well below it.
pub fn initial_guess(trace: &SpectrumTrace, t1: f64) -> Result<JcParams> {
    let n = trace.len();
    if n < 8 {
        return Err(Error::Fit(format!(
            "{n} points are too few for an initial guess"
        )));
    }
    let f = trace.freqs();
    let smooth = moving_average(trace.values(), if n >= 40 { 5 } else { 1 });
    let edge = (n / 20).max(2);
    let mut edges: Vec<f64> = smooth[..edge]
        .iter()
        .chain(&smooth[n - edge..])
        .copied()
        .collect();
    edges.sort_by(f64::total_cmp);
    let bg = edges[edges.len() / 2].max(0.0);

    let i1 = argmax(&smooth);
    let h1 = smooth[i1] - bg;
    if !(h1 > 0.0) {
        return Err(Error::Fit("no peak above background".into()));
    }
    let fwhm1 = fwhm(f, &smooth, i1, bg);

    let window = 3;
    let second = (window..n - window)
        .filter(|&j| (f[j] - f[i1]).abs() > 1.5 * fwhm1)
        .filter(|&j| (j - window..=j + window).all(|k| smooth[k] <= smooth[j]))
        .filter(|&j| smooth[j] - bg > 0.05 * h1)
        .filter(|&j| {
            let (a, b) = if j < i1 { (j, i1) } else { (i1, j) };
            let dip = smooth[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
            dip - bg < 0.8 * (smooth[j] - bg)
        })
        .max_by(|&a, &b| smooth[a].total_cmp(&smooth[b]));

    let decay = t1_rate(t1);
    Ok(match second {
        Some(i2) => {
            let h2 = smooth[i2] - bg;
            let (s1, s2) = (h1.sqrt(), h2.sqrt());
            let (w1, w2) = (s1 / (s1 + s2), s2 / (s1 + s2));
            let nu_r = w1 * f[i1] + w2 * f[i2];
            let nu_q = f[i1] + f[i2] - nu_r;
            let g = (w1 * w2).sqrt() * (f[i2] - f[i1]).abs();
            let kappa = ((fwhm1 - (1.0 - w1) * decay) / w1).max(0.25 * fwhm1);
            JcParams {
                nu_r,
                nu_q: nu_q.max(0.0),
                g,
                kappa,
                t1,
                amp: (s1 + s2).powi(2),
                bg,
            }
        }
        None => JcParams {
            nu_r: f[i1],
            nu_q: (f[i1] - 5.0 * fwhm1).max(0.0),
            g: 0.25 * fwhm1,
            kappa: fwhm1,
            t1,
            amp: h1,
            bg,
        },
    })
}

fn moving_average(v: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn fwhm(f: &[f64], v: &[f64], peak: usize, bg: f64) -> f64 {
    let half = bg + 0.5 * (v[peak] - bg);
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = peak;
        for i in range {
            if v[i] < half {
                let t = (v[prev] - half) / (v[prev] - v[i]);
                return Some(f[prev] + t * (f[i] - f[prev]));
            }
            prev = i;
        }
        None
    };
    let left = cross(&mut (0..peak).rev());
    let right = cross(&mut (peak + 1..v.len()));
    let step = (f[f.len() - 1] - f[0]) / (f.len() - 1) as f64;
    match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (f[peak] - l),
        (None, Some(r)) => 2.0 * (r - f[peak]),
        (None, None) => 4.0 * step,
    }
    .max(2.0 * step)
}

/// Per-flux fits and their aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxScanResult {
    pub entries: Vec<FluxScanEntry>,
    /// Number of converged fits entering the aggregates.
    pub n_converged: usize,
    pub means: IndexMap<String, f64>,
    /// Sample standard deviations over converged fits.
    pub stds: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxScanEntry {
    pub flux: f64,
    pub fit: std::result::Result<FitResult, String>,
}

impl FluxScanEntry {
    pub fn converged(&self) -> bool {
        matches!(&self.fit, Ok(f) if f.converged)
    }
}

/// Parameters aggregated over a flux scan.
pub const FLUX_AGGREGATE_PARAMS: [&str; 5] = ["amp", "bg", "g", "kappa", "nu_r"];

/// Fit every trace of a flux scan and average the converged fits.
///
/// Each trace is seeded from its own data ([`initial_guess`]), falling back
/// to `init` when no guess can be formed. Fits run in parallel; aggregation
/// is in input order.
pub fn fit_flux_scan(
    traces: &[(f64, SpectrumTrace)],
    init: &JcParams,
    t1_fixed: f64,
) -> Result<FluxScanResult> {
    if traces.len() < 3 {
        return Err(Error::Fit(format!(
            "flux scan needs >= 3 traces, got {}",
            traces.len()
        )));
    }
    let entries: Vec<FluxScanEntry> = traces
        .par_iter()
        .map(|(flux, trace)| {
            let seed = initial_guess(trace, t1_fixed).unwrap_or(*init);
            FluxScanEntry {
                flux: *flux,
                fit: fit_spectrum(trace, &seed, t1_fixed).map_err(|e| e.to_string()),
            }
        })
        .collect();
    let good: Vec<&FitResult> = entries
        .iter()
        .filter_map(|e| e.fit.as_ref().ok().filter(|f| f.converged))
        .collect();
    if good.len() < 3 {
        return Err(Error::Fit(format!(
            "only {} of {} flux-scan fits converged",
            good.len(),
            entries.len()
        )));
    }
    let mut means = IndexMap::new();
    let mut stds = IndexMap::new();
    for name in FLUX_AGGREGATE_PARAMS {
        let vals: Vec<f64> = good.iter().map(|f| f.params[name]).collect();
        let (mean, std) = mean_std(&vals);
        means.insert(name.to_string(), mean);
        stds.insert(name.to_string(), std);
    }
    Ok(FluxScanResult {
        n_converged: good.len(),
        entries,
        means,
        stds,
    })
}

/// Mean and sample standard deviation; exactly `(x, 0)` for identical inputs.
pub fn mean_std(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let pivot = vals[0];
    let shift = vals.iter().map(|v| v - pivot).sum::<f64>() / n;
    let mean = pivot + shift;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = vals.iter().map(|v| (v - pivot - shift).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

// Sums run in a fixed order so results do not depend on how points arrive.
fn canonical_order(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v = points.to_vec();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

/// Names of the [`fit_gx`] parameters.
pub const GX_PARAMS: [&str; 2] = ["g_max", "x0"];

/// Fit `g(Δx) = g_max sin(π (Δx + x0) / l_r)` to `(Δx, g)` points.
///
/// Reported with `g_max ≥ 0` and `x0` in `(−l_r, l_r]`.
pub fn fit_gx(points: &[(f64, f64)], l_r: f64) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::Fit(format!(
            "g(x) fit needs >= 2 points, got {}",
            points.len()
        )));
    }
    if !(l_r.is_finite() && l_r > 0.0) {
        return Err(Error::invalid("l_r", format!("{l_r} must be > 0")));
    }
    if points
        .iter()
        .any(|(x, g)| !(x.is_finite() && g.is_finite()))
    {
        return Err(Error::Fit("non-finite point".into()));
    }
    let sorted = canonical_order(points);
    let points = &sorted[..];
    let k = PI / l_r;
    // linear least squares in g_max for each trial offset
    let best = (0..4000)
        .map(|i| -l_r + (i as f64 + 0.5) * (2.0 * l_r / 4000.0))
        .map(|x0| {
            let (sg, ss) = points.iter().fold((0.0, 0.0), |(sg, ss), &(dx, g)| {
                let s = (k * (dx + x0)).sin();
                (sg + g * s, ss + s * s)
            });
            let amp = if ss > 0.0 { sg / ss } else { 0.0 };
            let rss: f64 = points
                .iter()
                .map(|&(dx, g)| (g - amp * (k * (dx + x0)).sin()).powi(2))
                .sum();
            (rss, amp, x0)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    let rep = lm_minimize(
        |p| {
            Some(
                points
                    .iter()
                    .map(|&(dx, g)| p[0] * (k * (dx + p[1])).sin() - g)
                    .collect(),
            )
        },
        &[best.1, best.2],
        &LmOptions::default(),
    )?;
    let (mut g_max, mut x0) = (rep.params[0], rep.params[1]);
    if g_max < 0.0 {
        g_max = -g_max;
        x0 += l_r;
    }
    x0 = x0.rem_euclid(2.0 * l_r);
    if x0 > l_r {
        x0 -= 2.0 * l_r;
    }
    Ok(FitResult::from_parts(
        &GX_PARAMS,
        &[g_max, x0],
        &rep.sigmas,
        &rep,
        rep.singular,
    ))
}

/// Height fit of measured `(y, g)` points against the capacitance-grid
/// coupling model at fixed `x`, with `z` (µm) the only free parameter.
///
/// A coarse scan over the grid's `z` planes brackets the minimum, golden
/// section refines it, and a final parabola through the last three points
/// polishes it. A minimum on the grid's `z` boundary is flagged `at_bound`
/// and reported as not converged.
pub fn fit_gy(
    points: &[(f64, f64)],
    grid: &CapacitanceGrid,
    geom: &GeometryParams,
    x: f64,
) -> Result<FitResult> {
    if points.is_empty() {
        return Err(Error::Fit("g(y) fit needs at least one point".into()));
    }
    let m = coupling::mode_shape(x, geom)?;
    let (z_lo, z_hi) = grid.z_range();
    for &(y, _) in points {
        let (y0, y1) = grid.y_range();
        if !(y0..=y1).contains(&y) {
            return Err(Error::OutOfBounds {
                axis: "y",
                value: y,
                lo: y0,
                hi: y1,
                unit: "um",
            });
        }
    }
    let sorted = canonical_order(points);
    let points = &sorted[..];
    let model = |z: f64| -> Result<Vec<f64>> {
        points
            .par_iter()
            .map(|&(y, _)| Ok(m * coupling::coupling_factors(y, z, grid, geom)?.g_antinode))
            .collect()
    };
    let sse = |z: f64| -> Result<f64> {
        Ok(model(z)?
            .iter()
            .zip(points)
            .map(|(p, (_, g))| (p - g).powi(2))
            .sum())
    };

    let planes = grid.z_axis();
    let mut evals = 0;
    let mut best = (f64::INFINITY, 0usize);
    for (i, &z) in planes.iter().enumerate() {
        let s = sse(z)?;
        evals += 1;
        if s < best.0 {
            best = (s, i);
        }
    }
    let lo_i = best.1.saturating_sub(1);
    let hi_i = (best.1 + 1).min(planes.len() - 1);
    let (mut a, mut b) = (planes[lo_i], planes[hi_i]);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (sse(c)?, sse(d)?);
    evals += 2;
    while b - a > 1e-7 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sse(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sse(d)?;
        }
        evals += 1;
    }
    let (mut z, mut s) = if fc <= fd { (c, fc) } else { (d, fd) };
    // parabola through (a, mid, b)
    let mid = 0.5 * (a + b);
    let (fa, fm, fb) = (sse(a)?, sse(mid)?, sse(b)?);
    evals += 3;
    let denom = fa - 2.0 * fm + fb;
    if denom > 0.0 {
        let zq = mid + 0.5 * (b - a) * 0.5 * (fa - fb) / denom;
        if (a..=b).contains(&zq) {
            let sq = sse(zq)?;
            evals += 1;
            if sq < s {
                z = zq;
                s = sq;
            }
        }
    }
    let tol = 1e-5 * (z_hi - z_lo);
    let at_bound = z - z_lo < tol || z_hi - z < tol;

    // standard error from the local linearization
    let h = 1e-3_f64.min(0.25 * (z_hi - z_lo));
    let (zp, zm) = ((z + h).min(z_hi), (z - h).max(z_lo));
    let (gp, gm) = (model(zp)?, model(zm)?);
    let sens: f64 = gp
        .iter()
        .zip(&gm)
        .map(|(p, q)| ((p - q) / (zp - zm)).powi(2))
        .sum();
    let dof = (points.len().saturating_sub(1)).max(1) as f64;
    let sigma = if sens > 0.0 {
        (s / dof / sens).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(FitResult {
        converged: !at_bound,
        singular: sens <= 0.0,
        at_bound,
        iterations: evals,
        residual_norm: s.sqrt(),
        params: IndexMap::from([("z".to_string(), z)]),
        sigmas: IndexMap::from([("z".to_string(), sigma)]),
    })
}
