//! Synthetic measurement campaigns.
//!
//! Flux sweeps at the bare resonator frequency, the single-frequency
//! resonance search, resonant y-scans with detector and encoder noise, the
//! full x/y campaign feeding the fit pipelines, and the conversion of
//! resonator phase noise into probe displacement noise.
//!
//! Every random draw comes from a ChaCha stream keyed by `(seed, stream)`,
//! where the stream index identifies the simulated position, so serial and
//! parallel runs produce identical data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::coupling::{self, CapacitanceGrid, GeometryParams, SurrogateGeometry};
use crate::error::{Error, Result};
use crate::fitting::{self, FitResult};
use crate::jc_model::{
    dressed_modes_unchecked, lorentzian, t1_rate, transmission_at, JcParams, SpectrumTrace,
};
use crate::transmon::{self, SquidSpec, TransmonSpec};

/// Everything needed to simulate measurements at arbitrary probe positions.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub geom: GeometryParams,
    pub grid: CapacitanceGrid,
    /// `flux` acts as a constant offset added to every swept flux value.
    pub squid: SquidSpec,
    /// Charging energy (GHz) replacing the grid-derived value.
    pub ec_override: Option<f64>,
    /// Photon escape rate (GHz).
    pub kappa: f64,
    /// Qubit relaxation time (µs).
    pub t1: f64,
    pub amp: f64,
    pub bg: f64,
    /// Standard deviation of the multiplicative detector noise.
    pub noise_frac: f64,
    /// Encoder white noise (µm).
    pub encoder_sigma: f64,
    /// Encoder drift (µm per 100 µm traveled).
    pub encoder_drift: f64,
    pub seed: u64,
}

impl ScanConfig {
    /// Demo configuration: surrogate grid, `ν_r = 8 GHz`, SQUID tuned to a
    /// 12.1 GHz maximum at `E_C = 388 MHz`, `κ = 13 MHz`, `T1 = 2.6 µs`,
    /// 1 % detector noise and the positioner's encoder figures.
    pub fn demo(seed: u64) -> Result<Self> {
        let grid = coupling::surrogate_grid(&SurrogateGeometry::default())?;
        Ok(ScanConfig {
            geom: GeometryParams::default(),
            grid,
            squid: SquidSpec {
                ej_max: transmon::invert_ej(0.388, 12.1)?,
                flux: 0.0,
            },
            ec_override: None,
            kappa: 0.013,
            t1: 2.6,
            amp: 57.0,
            bg: 0.2,
            noise_frac: 0.01,
            encoder_sigma: 0.4,
            encoder_drift: 1.8,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.geom.validate()?;
        let checks = [
            ("kappa", self.kappa, self.kappa > 0.0),
            ("t1", self.t1, self.t1 > 0.0),
            ("amp", self.amp, self.amp > 0.0),
            ("bg", self.bg, self.bg >= 0.0),
            ("noise_frac", self.noise_frac, self.noise_frac >= 0.0),
            (
                "encoder_sigma",
                self.encoder_sigma,
                self.encoder_sigma >= 0.0,
            ),
            ("encoder_drift", self.encoder_drift, true),
            ("ej_max", self.squid.ej_max, self.squid.ej_max > 0.0),
        ];
        for (name, v, ok) in checks {
            if !(v.is_finite() && ok) {
                return Err(Error::invalid(name, format!("{v} out of range")));
            }
        }
        if let Some(ec) = self.ec_override {
            if !(ec.is_finite() && ec > 0.0) {
                return Err(Error::invalid("ec_override", format!("{ec} must be > 0")));
            }
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    /// Along the resonator from its midpoint (µm).
    pub x: f64,
    /// Across the resonator (µm).
    pub y: f64,
    /// Height (µm).
    pub z: f64,
}

/// Physics at one probe position, independent of flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionPhysics {
    pub ec: f64,
    /// Coupling (GHz), evaluated with the qubit at `ν_r`.
    pub g: f64,
    pub beta: f64,
    pub n01: f64,
}

pub fn position_physics(cfg: &ScanConfig, pos: Position) -> Result<PositionPhysics> {
    let m = coupling::mode_shape(pos.x, &cfg.geom)?;
    match cfg.ec_override {
        None => {
            let f = coupling::coupling_factors(pos.y, pos.z, &cfg.grid, &cfg.geom)?;
            Ok(PositionPhysics {
                ec: f.ec,
                g: m * f.g_antinode,
                beta: f.beta,
                n01: f.n01,
            })
        }
        Some(ec) => {
            let caps = coupling::interpolate(&cfg.grid, pos.y, pos.z)?;
            let ej = transmon::invert_ej(ec, cfg.geom.nu_r)?;
            let n01 = transmon::solve(&TransmonSpec::new(ec, ej))?.n01;
            let beta = coupling::beta(&caps);
            Ok(PositionPhysics {
                ec,
                g: m * cfg.geom.coupling_prefactor() * cfg.geom.nu_r * beta * n01,
                beta,
                n01,
            })
        }
    }
}

/// Qubit frequency at a given swept flux.
pub fn qubit_frequency_at_flux(cfg: &ScanConfig, ec: f64, flux: f64) -> Result<f64> {
    let ej = transmon::ej_of_flux(&SquidSpec {
        ej_max: cfg.squid.ej_max,
        flux: flux + cfg.squid.flux,
    });
    transmon::qubit_frequency(&TransmonSpec::new(ec, ej))
}

/// Transmitted power at `nu`; an uncoupled qubit leaves the bare resonator.
pub fn coupled_transmission(p: &JcParams, nu: f64) -> f64 {
    if p.g == 0.0 {
        return p.bg + p.amp * lorentzian(nu, p.nu_r, p.kappa).norm_sqr();
    }
    let modes = dressed_modes_unchecked(p.nu_r, p.nu_q, p.g, p.kappa, t1_rate(p.t1));
    transmission_at(&modes, p.amp, p.bg, nu)
}

fn noisy(value: f64, frac: f64, rng: &mut ChaCha8Rng) -> f64 {
    if frac == 0.0 {
        return value;
    }
    let n: f64 = StandardNormal.sample(rng);
    (value * (1.0 + frac * n)).max(0.0)
}

/// Transmission at `ν_r` versus flux.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSweepTrace {
    pub fluxes: Vec<f64>,
    pub values: Vec<f64>,
}

/// Sweep the flux over `[range.0, range.1]` in `steps` intervals
/// (`steps + 1` samples) and record the transmission at `ν_r`.
pub fn simulate_flux_sweep(
    cfg: &ScanConfig,
    pos: Position,
    range: (f64, f64),
    steps: usize,
    stream: u64,
) -> Result<FluxSweepTrace> {
    cfg.validate()?;
    if steps == 0 || !(range.1 > range.0) {
        return Err(Error::invalid(
            "flux range",
            format!("{range:?} with {steps} steps"),
        ));
    }
    let phys = position_physics(cfg, pos)?;
    let mut rng = cfg.rng(stream);
    let mut fluxes = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let flux = range.0 + (range.1 - range.0) * i as f64 / steps as f64;
        let nu_q = qubit_frequency_at_flux(cfg, phys.ec, flux)?;
        let p = JcParams {
            nu_r: cfg.geom.nu_r,
            nu_q,
            g: phys.g,
            kappa: cfg.kappa,
            t1: cfg.t1,
            amp: cfg.amp,
            bg: cfg.bg,
        };
        fluxes.push(flux);
        values.push(noisy(
            coupled_transmission(&p, cfg.geom.nu_r),
            cfg.noise_frac,
            &mut rng,
        ));
    }
    Ok(FluxSweepTrace { fluxes, values })
}

/// Default dip threshold as a fraction of the trace median.
pub const DEFAULT_DIP_FRACTION: f64 = 0.5;

/// Fraction of the dip depth, above its floor, used to refine the dip position.
pub const DIP_FLOOR_FRACTION: f64 = 0.02;

/// Flux of the deepest transmission dip. Only local minima below
/// `threshold_frac × median` count; ties go to the lower flux.
///
/// The position is refined by the depth-weighted centroid of the contiguous
/// samples within [`DIP_FLOOR_FRACTION`] of the dip depth above its floor.
/// Strong coupling leaves a flat floor several steps wide where noise alone
/// picks the deepest sample; the floor's centroid stays put. Higher up the
/// walls the curvature of `ν_q(Φ)` makes the dip lopsided, hence the low cut.
pub fn find_resonance(trace: &FluxSweepTrace, threshold_frac: f64) -> Result<f64> {
    let v = &trace.values;
    let n = v.len();
    if n < 3 || trace.fluxes.len() != n {
        return Err(Error::NoDip(format!("trace of {n} samples is too short")));
    }
    let mut sorted = v.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[n / 2];
    let threshold = threshold_frac * median;
    let mut best: Option<usize> = None;
    for i in 0..n {
        let left = i == 0 || v[i] <= v[i - 1];
        let right = i == n - 1 || v[i] <= v[i + 1];
        if left && right && v[i] < threshold && best.is_none_or(|b| v[i] < v[b]) {
            best = Some(i);
        }
    }
    let i = best.ok_or_else(|| {
        Error::NoDip(format!(
            "no local minimum below {threshold} (median {median})"
        ))
    })?;
    let level = v[i] + DIP_FLOOR_FRACTION * (median - v[i]);
    let lo = (0..i).rev().take_while(|&k| v[k] < level).last().unwrap_or(i);
    let hi = (i + 1..n).take_while(|&k| v[k] < level).last().unwrap_or(i);
    let (mut sw, mut swf) = (0.0, 0.0);
    for (vk, fk) in v[lo..=hi].iter().zip(&trace.fluxes[lo..=hi]) {
        let w = level - vk;
        sw += w;
        swf += w * (fk - trace.fluxes[i]);
    }
    Ok(trace.fluxes[i] + swf / sw)
}

/// Fluxes in `[0, 1)` where the qubit crosses `ν_r`, from the SQUID model and
/// `E_J` inversion. Empty when `ν_r` is out of the tuning range.
pub fn predicted_crossings(cfg: &ScanConfig, ec: f64) -> Result<Vec<f64>> {
    let ej = match transmon::invert_ej(ec, cfg.geom.nu_r) {
        Ok(ej) => ej,
        Err(_) => return Ok(Vec::new()),
    };
    if ej > cfg.squid.ej_max {
        return Ok(Vec::new());
    }
    let base = (ej / cfg.squid.ej_max).acos() / std::f64::consts::PI;
    let mut out: Vec<f64> = [base, 1.0 - base]
        .iter()
        .map(|f| (f - cfg.squid.flux).rem_euclid(1.0))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// How the qubit is brought into resonance at each y-scan position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tuning {
    /// Flux sweep over half a period at `ν_r`, then [`find_resonance`]. Falls
    /// back to analytic tuning where no dip clears the threshold.
    Protocol { sweep_steps: usize },
    /// Set the flux that puts `ν_q` exactly at `ν_r`.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TunedBy {
    Protocol,
    Analytic,
}

/// One resonant spectrum of a y-scan with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct YScanPoint {
    pub y_true: f64,
    /// Encoder reading.
    pub y_recorded: f64,
    pub flux: f64,
    pub tuned_by: TunedBy,
    pub stream: u64,
    /// Parameters the spectrum was generated from.
    pub truth: JcParams,
    pub trace: SpectrumTrace,
}

fn analytic_flux(cfg: &ScanConfig, ec: f64) -> Result<f64> {
    predicted_crossings(cfg, ec)?
        .into_iter()
        .find(|f| *f <= 0.5)
        .or(predicted_crossings(cfg, ec)?.first().copied())
        .ok_or_else(|| {
            Error::NoDip(format!(
                "nu_r = {} GHz outside the qubit tuning range",
                cfg.geom.nu_r
            ))
        })
}

/// Resonant spectra along `ys` at fixed `x`, `z`.
///
/// Position `i` draws from stream `stream_base + i`. The recorded `y` carries
/// an encoder bias of `encoder_drift` µm per 100 µm traveled from `ys[0]`
/// plus white noise `encoder_sigma`.
pub fn simulate_y_scan(
    cfg: &ScanConfig,
    x: f64,
    ys: &[f64],
    z: f64,
    freqs: &[f64],
    tuning: Tuning,
    stream_base: u64,
) -> Result<Vec<YScanPoint>> {
    cfg.validate()?;
    crate::jc_model::check_increasing(freqs)?;
    if freqs.is_empty() {
        return Err(Error::invalid("freqs", "empty frequency grid"));
    }
    let y_start = ys.first().copied().unwrap_or(0.0);
    ys.par_iter()
        .enumerate()
        .map(|(i, &y)| {
            let stream = stream_base + i as u64;
            let pos = Position { x, y, z };
            let phys = position_physics(cfg, pos)?;
            let (flux, tuned_by) = match tuning {
                Tuning::Analytic => (analytic_flux(cfg, phys.ec)?, TunedBy::Analytic),
                Tuning::Protocol { sweep_steps } => {
                    // sweep noise uses a stream disjoint from the spectrum's
                    let sweep =
                        simulate_flux_sweep(cfg, pos, (0.0, 0.5), sweep_steps, stream | (1 << 63))?;
                    match find_resonance(&sweep, DEFAULT_DIP_FRACTION) {
                        Ok(f) => (f, TunedBy::Protocol),
                        Err(_) => (analytic_flux(cfg, phys.ec)?, TunedBy::Analytic),
                    }
                }
            };
            let nu_q = qubit_frequency_at_flux(cfg, phys.ec, flux)?;
            let truth = JcParams {
                nu_r: cfg.geom.nu_r,
                nu_q,
                g: phys.g,
                kappa: cfg.kappa,
                t1: cfg.t1,
                amp: cfg.amp,
                bg: cfg.bg,
            };
            let mut rng = cfg.rng(stream);
            let values = freqs
                .iter()
                .map(|&nu| noisy(coupled_transmission(&truth, nu), cfg.noise_frac, &mut rng))
                .collect();
            let trace = SpectrumTrace::new(freqs.to_vec(), values)?;
            let mut y_recorded = y + cfg.encoder_drift * (y - y_start).abs() / 100.0;
            if cfg.encoder_sigma > 0.0 {
                let n: f64 = StandardNormal.sample(&mut rng);
                y_recorded += cfg.encoder_sigma * n;
            }
            Ok(YScanPoint {
                y_true: y,
                y_recorded,
                flux,
                tuned_by,
                stream,
                truth,
                trace,
            })
        })
        .collect()
}

/// Fit every spectrum of a y-scan, seeding each from its own data.
pub fn fit_y_scan(points: &[YScanPoint], t1: f64) -> Vec<Result<FitResult>> {
    points
        .par_iter()
        .map(|p| {
            let guess = fitting::initial_guess(&p.trace, t1)?;
            fitting::fit_spectrum(&p.trace, &guess, t1)
        })
        .collect()
}

/// Layout of a full x/y campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    /// Scan displacements `Δx` (µm); absolute positions are `geom.x0 + Δx`.
    pub dx: Vec<f64>,
    pub ys: Vec<f64>,
    /// True probe height (µm).
    pub z: f64,
    /// Half-width of the spectrum window around `ν_r` (GHz).
    pub span: f64,
    pub points: usize,
    pub tuning: Tuning,
}

impl CampaignSpec {
    /// Five x positions 600 µm apart, y from −150 to 150 µm in 10 µm steps,
    /// `z = 11 µm`.
    pub fn demo() -> Self {
        CampaignSpec {
            dx: (0..5).map(|i| 600.0 * i as f64).collect(),
            ys: (0..31).map(|i| -150.0 + 10.0 * i as f64).collect(),
            z: 11.0,
            span: 0.45,
            points: 901,
            tuning: Tuning::Protocol { sweep_steps: 1000 },
        }
    }

    pub fn freqs(&self, nu_r: f64) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|i| nu_r - self.span + 2.0 * self.span * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// One x position of a campaign.
#[derive(Debug, Clone)]
pub struct CampaignRow {
    pub dx: f64,
    pub x: f64,
    pub scan: Vec<YScanPoint>,
    pub fits: Vec<std::result::Result<FitResult, String>>,
    /// Largest converged fitted `g` along the scan.
    pub g_max_fit: f64,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub rows: Vec<CampaignRow>,
    pub gx_fit: FitResult,
    /// Index of the row used for the height fit.
    pub gy_row: usize,
    pub gy_fit: FitResult,
}

/// Simulate and analyse a full campaign: y-scans at every `Δx`, spectrum
/// fits, the `g_max(Δx)` fit and the height fit of the strongest y-scan.
pub fn run_campaign(cfg: &ScanConfig, spec: &CampaignSpec) -> Result<CampaignResult> {
    if spec.dx.len() < 2 {
        return Err(Error::Config(
            "campaign needs at least two x positions".into(),
        ));
    }
    if spec.ys.is_empty() {
        return Err(Error::Config(
            "campaign needs at least one y position".into(),
        ));
    }
    let freqs = spec.freqs(cfg.geom.nu_r);
    let stride = spec.ys.len() as u64;
    let mut rows = Vec::with_capacity(spec.dx.len());
    for (k, &dx) in spec.dx.iter().enumerate() {
        let x = cfg.geom.position(dx);
        let scan = simulate_y_scan(
            cfg,
            x,
            &spec.ys,
            spec.z,
            &freqs,
            spec.tuning,
            k as u64 * stride,
        )?;
        let fits: Vec<_> = fit_y_scan(&scan, cfg.t1)
            .into_iter()
            .map(|r| r.map_err(|e| e.to_string()))
            .collect();
        let g_max_fit = fits
            .iter()
            .filter_map(|f| f.as_ref().ok().filter(|f| f.converged))
            .filter_map(|f| f.value("g"))
            .fold(f64::NEG_INFINITY, f64::max);
        if !g_max_fit.is_finite() {
            return Err(Error::Fit(format!(
                "no converged spectrum fit at dx = {dx} um"
            )));
        }
        rows.push(CampaignRow {
            dx,
            x,
            scan,
            fits,
            g_max_fit,
        });
    }
    let gx_points: Vec<(f64, f64)> = rows.iter().map(|r| (r.dx, r.g_max_fit)).collect();
    let gx_fit = fitting::fit_gx(&gx_points, cfg.geom.l_r)?;
    let x0_fit = gx_fit.params["x0"];
    let gy_row = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.g_max_fit.total_cmp(&b.1.g_max_fit))
        .map(|(i, _)| i)
        .unwrap();
    let row = &rows[gy_row];
    let gy_points: Vec<(f64, f64)> = row
        .scan
        .iter()
        .zip(&row.fits)
        .filter_map(|(p, f)| {
            let f = f.as_ref().ok().filter(|f| f.converged)?;
            Some((p.y_recorded, f.value("g")?))
        })
        .filter(|(y, _)| cfg.grid.contains(*y, cfg.grid.z_range().0))
        .collect();
    let gy_fit = fitting::fit_gy(&gy_points, &cfg.grid, &cfg.geom, row.dx + x0_fit)?;
    Ok(CampaignResult {
        rows,
        gx_fit,
        gy_row,
        gy_fit,
    })
}

/// Convert resonator phase noise into probe displacement noise, bin by bin.
///
/// The phase of the transmitted signal varies at line center as
/// `dφ/dν = 2/κ`, so frequency noise is `φ κ/2` and displacement noise is
/// that divided by `|dν_r/dz|`. Units: `kappa` in GHz, `slope` in GHz/µm,
/// result in µm per unit phase.
pub fn vibration_to_displacement(phase_noise: &[f64], kappa: f64, slope: f64) -> Result<Vec<f64>> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::invalid("kappa", format!("{kappa} must be > 0")));
    }
    if !slope.is_finite() || slope == 0.0 {
        return Err(Error::invalid(
            "slope",
            format!("{slope} must be finite and non-zero"),
        ));
    }
    let half = kappa / 2.0;
    let s = slope.abs();
    Ok(phase_noise.iter().map(|p| p * half / s).collect())
}

/// Local slope `dν_r/dz` of a tabulated `ν_r(z)` curve, from the table
/// segment containing `z`.
pub fn slope_from_table(zs: &[f64], nus: &[f64], z: f64) -> Result<f64> {
    if zs.len() < 2 || zs.len() != nus.len() {
        return Err(Error::invalid(
            "table",
            "needs >= 2 matching (z, nu_r) rows",
        ));
    }
    if zs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("table", "z must be strictly ascending"));
    }
    if !(zs[0]..=zs[zs.len() - 1]).contains(&z) {
        return Err(Error::OutOfBounds {
            axis: "z",
            value: z,
            lo: zs[0],
            hi: zs[zs.len() - 1],
            unit: "um",
        });
    }
    let i = zs.partition_point(|&v| v <= z).clamp(1, zs.len() - 1) - 1;
    Ok((nus[i + 1] - nus[i]) / (zs[i + 1] - zs[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(seed: u64) -> ScanConfig {
        let mut cfg = ScanConfig::demo(seed).unwrap();
        cfg.noise_frac = 0.0;
        cfg.encoder_sigma = 0.0;
        cfg.encoder_drift = 0.0;
        cfg
    }

    #[test]
    fn centered_probe_gives_flat_sweep() {
        let cfg = quiet(1);
        let pos = Position {
            x: 3330.0,
            y: 0.0,
            z: 11.0,
        };
        let tr = simulate_flux_sweep(&cfg, pos, (0.0, 1.0), 200, 0).unwrap();
        for v in &tr.values {
            assert!((v - (cfg.bg + cfg.amp)).abs() < 1e-10);
        }
        assert!(find_resonance(&tr, DEFAULT_DIP_FRACTION).is_err());
    }

    #[test]
    fn sweep_symmetric_in_flux() {
        let cfg = quiet(1);
        let pos = Position {
            x: 2116.0,
            y: 40.0,
            z: 11.0,
        };
        let a = simulate_flux_sweep(&cfg, pos, (-0.5, 0.5), 100, 0).unwrap();
        let n = a.values.len();
        for i in 0..n {
            assert!((a.values[i] - a.values[n - 1 - i]).abs() < 1e-9 * a.values[i].max(1.0));
        }
        let b = simulate_flux_sweep(&cfg, pos, (0.5, 1.5), 100, 0).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            assert!((u - v).abs() < 1e-9 * u.max(1.0));
        }
    }

    #[test]
    fn find_resonance_tie_goes_low() {
        let tr = FluxSweepTrace {
            fluxes: (0..9).map(|i| i as f64 * 0.1).collect(),
            values: vec![1.0, 1.0, 0.1, 1.0, 1.0, 1.0, 0.1, 1.0, 1.0],
        };
        assert!((find_resonance(&tr, 0.5).unwrap() - 0.2).abs() < 1e-12);
        let flat = FluxSweepTrace {
            fluxes: (0..9).map(|i| i as f64).collect(),
            values: vec![1.0; 9],
        };
        assert!(find_resonance(&flat, 0.5).is_err());
    }

    #[test]
    fn vibration_chain() {
        let out = vibration_to_displacement(&[0.0, 0.0], 0.013, 0.002).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
        assert!(vibration_to_displacement(&[1.0], 0.013, 0.0).is_err());
        assert!(vibration_to_displacement(&[1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn slope_table() {
        let zs = [10.0, 20.0, 30.0];
        let nus = [8.0, 7.9, 7.85];
        assert!((slope_from_table(&zs, &nus, 15.0).unwrap() + 0.01).abs() < 1e-12);
        assert!((slope_from_table(&zs, &nus, 30.0).unwrap() + 0.005).abs() < 1e-12);
        assert!(slope_from_table(&zs, &nus, 31.0).is_err());
    }
}
