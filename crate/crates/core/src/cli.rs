//! Command-line front end.
//!
//! Every command reads an optional TOML run configuration, applies
//! `--set section.key=value` overrides, validates inputs and the output
//! location, then writes its results, an `effective_config.toml` echo of the
//! fully resolved configuration and a `manifest.toml` with SHA-256 hashes of
//! every output into `--out`.
//!
//! Exit status: 0 on success, 1 on a runtime error (unreadable or malformed
//! data, failed computation), 2 on a usage error (bad arguments,
//! configuration or units), 3 when a fit did not converge (the partial
//! report is still written).

use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::coupling::{self, CapacitanceGrid, GeometryParams, SurrogateGeometry};
use crate::error::{Error, Result};
use crate::fitting::{self, FitResult};
use crate::io::{self, Manifest, ManifestPosition, OutputDir, Table, CONFIG_ECHO_FILE};
use crate::jc_model::{self, JcParams, SpectrumTrace};
use crate::scan_sim::{self, CampaignSpec, Position, ScanConfig, Tuning};
use crate::transmon::{self, SquidSpec};
use crate::units::{parse_quantity, Dimension};

#[derive(Debug, Parser)]
#[command(
    name = "scanqubit",
    version,
    about = "Scanning transmon simulation and fitting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Random seed; when given more than once the last value wins.
    #[arg(long, global = true, action = ArgAction::Append, value_name = "N")]
    pub seed: Vec<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Validate the configuration and inputs, print the effective
    /// configuration and exit without writing files.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Input file (trace for fit-spectrum, points for fit-gx/fit-gy, phase
    /// noise for vibration).
    #[arg(long, global = true, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set spectrum.g=25MHz`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Synthesize a transmission spectrum.
    SimulateSpectrum,
    /// Fit a transmission spectrum.
    FitSpectrum,
    /// Simulate a single-frequency flux sweep and locate the resonance.
    FluxSweep,
    /// Run a full synthetic x/y campaign and its fits.
    Scan,
    /// Fit the sinusoidal g(x) profile.
    FitGx,
    /// Fit the probe height to a g(y) scan.
    FitGy,
    /// Convert phase noise into displacement noise.
    Vibration,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SimulateSpectrum => "simulate-spectrum",
            Command::FitSpectrum => "fit-spectrum",
            Command::FluxSweep => "flux-sweep",
            Command::Scan => "scan",
            Command::FitGx => "fit-gx",
            Command::FitGy => "fit-gy",
            Command::Vibration => "vibration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub nu_r: String,
    pub nu_q: String,
    pub g: String,
    pub kappa: String,
    pub t1: String,
    pub amp: f64,
    pub bg: f64,
    pub start: String,
    pub stop: String,
    pub points: usize,
    pub noise_frac: f64,
    /// Seed fit-spectrum from these parameters instead of the data.
    pub init_from_config: bool,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            nu_r: "8.342GHz".into(),
            nu_q: "8.339GHz".into(),
            g: "20MHz".into(),
            kappa: "14MHz".into(),
            t1: "2.6us".into(),
            amp: 57.0,
            bg: 0.2,
            start: "8.192GHz".into(),
            stop: "8.492GHz".into(),
            points: 601,
            noise_frac: 0.0,
            init_from_config: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub l_r: String,
    pub x0: String,
    pub z_c: String,
    pub nu_r: String,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            l_r: "7872um".into(),
            x0: "930um".into(),
            z_c: "50ohm".into(),
            nu_r: "8GHz".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Capacitance grid file; the surrogate is generated when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    pub misalignment_deg: f64,
    pub pitch: String,
    pub y_min: String,
    pub y_max: String,
    pub z_min: String,
    pub z_max: String,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            file: None,
            misalignment_deg: 3.0,
            pitch: "1um".into(),
            y_min: "-150um".into(),
            y_max: "150um".into(),
            z_min: "5um".into(),
            z_max: "25um".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QubitSection {
    /// `E_J,max` is chosen so the qubit reaches `nu_q_max` at `ec_ref`,
    /// unless `ej_max` is given.
    pub ec_ref: String,
    pub nu_q_max: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ej_max: Option<String>,
    pub flux_offset: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ec_override: Option<String>,
}

impl Default for QubitSection {
    fn default() -> Self {
        QubitSection {
            ec_ref: "388MHz".into(),
            nu_q_max: "12.1GHz".into(),
            ej_max: None,
            flux_offset: 0.0,
            ec_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementSection {
    pub kappa: String,
    pub t1: String,
    pub amp: f64,
    pub bg: f64,
    pub noise_frac: f64,
    pub encoder_sigma: String,
    /// µm per 100 µm traveled.
    pub encoder_drift: f64,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        MeasurementSection {
            kappa: "13MHz".into(),
            t1: "2.6us".into(),
            amp: 57.0,
            bg: 0.2,
            noise_frac: 0.01,
            encoder_sigma: "0.4um".into(),
            encoder_drift: 1.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluxSweepSection {
    /// Along the resonator from its midpoint.
    pub x: String,
    pub y: String,
    pub z: String,
    pub flux_min: f64,
    pub flux_max: f64,
    pub steps: usize,
    pub threshold: f64,
}

impl Default for FluxSweepSection {
    fn default() -> Self {
        FluxSweepSection {
            x: "2116um".into(),
            y: "50um".into(),
            z: "11um".into(),
            flux_min: 0.0,
            flux_max: 1.0,
            steps: 1000,
            threshold: scan_sim::DEFAULT_DIP_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignSection {
    /// Scan displacements; positions are `geometry.x0 + dx`.
    pub dx: Vec<String>,
    pub y_min: String,
    pub y_max: String,
    pub y_step: String,
    pub z: String,
    pub span: String,
    pub points: usize,
    /// `protocol` or `analytic`.
    pub tuning: String,
    pub sweep_steps: usize,
}

impl Default for CampaignSection {
    fn default() -> Self {
        CampaignSection {
            dx: ["0um", "600um", "1200um", "1800um", "2400um"]
                .map(String::from)
                .to_vec(),
            y_min: "-150um".into(),
            y_max: "150um".into(),
            y_step: "10um".into(),
            z: "11um".into(),
            span: "450MHz".into(),
            points: 901,
            tuning: "protocol".into(),
            sweep_steps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitGySection {
    /// Along the resonator from its midpoint.
    pub x: String,
}

impl Default for FitGySection {
    fn default() -> Self {
        FitGySection { x: "3330um".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VibrationSection {
    pub kappa: String,
    /// `dν_r/dz`, e.g. `-2MHz/um`. Ignored when `slope_table` is given.
    pub slope: String,
    /// Table with `z_<unit>` and `nu_r_<unit>` columns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_table: Option<PathBuf>,
    /// Height at which the table slope is evaluated.
    pub z: String,
    /// White phase noise level used when no input spectrum is given (rad).
    pub white_level: f64,
    pub bins: usize,
}

impl Default for VibrationSection {
    fn default() -> Self {
        VibrationSection {
            kappa: "13MHz".into(),
            slope: "-2MHz/um".into(),
            slope_table: None,
            z: "11um".into(),
            white_level: 1e-3,
            bins: 100,
        }
    }
}

/// Run configuration as read from TOML; every field has a default, so the
/// deserialized value is already fully resolved.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub spectrum: SpectrumSection,
    pub geometry: GeometrySection,
    pub grid: GridSection,
    pub qubit: QubitSection,
    pub measurement: MeasurementSection,
    pub flux_sweep: FluxSweepSection,
    pub campaign: CampaignSection,
    pub fit_gy: FitGySection,
    pub vibration: VibrationSection,
}

fn freq(s: &str) -> Result<f64> {
    parse_quantity(s, Dimension::Frequency)
}

fn len(s: &str) -> Result<f64> {
    parse_quantity(s, Dimension::Length)
}

fn time(s: &str) -> Result<f64> {
    parse_quantity(s, Dimension::Time)
}

impl RunConfig {
    /// Parse TOML text, apply `key=value` overrides and reject unknown keys.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn jc_params(&self) -> Result<JcParams> {
        let s = &self.spectrum;
        let p = JcParams {
            nu_r: freq(&s.nu_r)?,
            nu_q: freq(&s.nu_q)?,
            g: freq(&s.g)?,
            kappa: freq(&s.kappa)?,
            t1: time(&s.t1)?,
            amp: s.amp,
            bg: s.bg,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn spectrum_freqs(&self) -> Result<Vec<f64>> {
        let s = &self.spectrum;
        let (a, b) = (freq(&s.start)?, freq(&s.stop)?);
        if s.points == 0 {
            return Err(Error::Config(
                "spectrum.points: frequency grid is empty".into(),
            ));
        }
        if s.points == 1 {
            return Ok(vec![a]);
        }
        if !(b > a) {
            return Err(Error::Config(format!(
                "spectrum.stop ({b} GHz) must exceed spectrum.start ({a} GHz)"
            )));
        }
        Ok((0..s.points)
            .map(|i| a + (b - a) * i as f64 / (s.points - 1) as f64)
            .collect())
    }

    pub fn geometry(&self) -> Result<GeometryParams> {
        let g = &self.geometry;
        let geom = GeometryParams {
            l_r: len(&g.l_r)?,
            x0: len(&g.x0)?,
            z_c: parse_quantity(&g.z_c, Dimension::Resistance)?,
            nu_r: freq(&g.nu_r)?,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn grid(&self) -> Result<CapacitanceGrid> {
        let g = &self.grid;
        match &g.file {
            Some(path) => CapacitanceGrid::parse(&io::read_text(path)?),
            None => coupling::surrogate_grid(&SurrogateGeometry {
                misalignment_deg: g.misalignment_deg,
                pitch: len(&g.pitch)?,
                y_range: (len(&g.y_min)?, len(&g.y_max)?),
                z_range: (len(&g.z_min)?, len(&g.z_max)?),
                ..SurrogateGeometry::default()
            }),
        }
    }

    pub fn scan_config(&self) -> Result<ScanConfig> {
        let q = &self.qubit;
        let m = &self.measurement;
        let ej_max = match &q.ej_max {
            Some(s) => freq(s)?,
            None => transmon::invert_ej(freq(&q.ec_ref)?, freq(&q.nu_q_max)?)?,
        };
        let cfg = ScanConfig {
            geom: self.geometry()?,
            grid: self.grid()?,
            squid: SquidSpec {
                ej_max,
                flux: q.flux_offset,
            },
            ec_override: q.ec_override.as_deref().map(freq).transpose()?,
            kappa: freq(&m.kappa)?,
            t1: time(&m.t1)?,
            amp: m.amp,
            bg: m.bg,
            noise_frac: m.noise_frac,
            encoder_sigma: len(&m.encoder_sigma)?,
            encoder_drift: m.encoder_drift,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn campaign(&self) -> Result<CampaignSpec> {
        let c = &self.campaign;
        let dx = c.dx.iter().map(|s| len(s)).collect::<Result<Vec<_>>>()?;
        let (lo, hi, step) = (len(&c.y_min)?, len(&c.y_max)?, len(&c.y_step)?);
        if !(step > 0.0 && hi >= lo) {
            return Err(Error::Config(
                "campaign: need y_step > 0 and y_max >= y_min".into(),
            ));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let tuning = match c.tuning.as_str() {
            "protocol" => Tuning::Protocol {
                sweep_steps: c.sweep_steps,
            },
            "analytic" => Tuning::Analytic,
            other => {
                return Err(Error::Config(format!(
                    "campaign.tuning: expected `protocol` or `analytic`, found `{other}`"
                )))
            }
        };
        if c.points < 2 {
            return Err(Error::Config("campaign.points must be >= 2".into()));
        }
        Ok(CampaignSpec {
            dx,
            ys: (0..n).map(|i| lo + step * i as f64).collect(),
            z: len(&c.z)?,
            span: freq(&c.span)?,
            points: c.points,
            tuning,
        })
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not KEY=VALUE")))?;
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for p in path {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Process exit status for an error: usage errors get 2, everything else 1.
pub fn error_exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Quantity { .. } => 2,
        _ => 1,
    }
}

/// Result of a command: the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: u8,
}

impl Outcome {
    const OK: Outcome = Outcome { exit_code: 0 };
    const NOT_CONVERGED: Outcome = Outcome { exit_code: 3 };

    fn from_fit(fit: &FitResult) -> Self {
        if fit.converged {
            Outcome::OK
        } else {
            Outcome::NOT_CONVERGED
        }
    }
}

/// Parse arguments and run; warnings go to stderr.
pub fn run_args<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    run(&cli)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let text = match &cli.config {
        Some(p) => io::read_text(p)?,
        None => String::new(),
    };
    let mut cfg = RunConfig::from_toml(&text, &cli.overrides)?;
    if cli.seed.len() > 1 {
        eprintln!(
            "warning: --seed given {} times; using the last value {}",
            cli.seed.len(),
            cli.seed[cli.seed.len() - 1]
        );
    }
    if let Some(&s) = cli.seed.last() {
        cfg.seed = s;
    }
    if let Some(p) = &cli.input {
        cfg.input = Some(p.clone());
    }
    let job = prepare(cli.command, &cfg)?;
    check_output_dir(&cli.out)?;
    let echo = cfg.to_toml()?;
    if cli.dry_run {
        print!("{echo}");
        return Ok(Outcome::OK);
    }
    let mut out = OutputDir::create(&cli.out)?;
    out.write(CONFIG_ECHO_FILE, &echo)?;
    let mut manifest = Manifest {
        command: cli.command.name().to_string(),
        seed: cfg.seed,
        ..Manifest::default()
    };
    let outcome = job.execute(&cfg, &mut out, &mut manifest)?;
    out.finish(manifest)?;
    Ok(outcome)
}

fn check_output_dir(dir: &Path) -> Result<()> {
    if dir.exists() && !dir.is_dir() {
        return Err(Error::Config(format!(
            "{} exists and is not a directory",
            dir.display()
        )));
    }
    Ok(())
}

fn required_input(cfg: &RunConfig, what: &str) -> Result<PathBuf> {
    let p = cfg
        .input
        .clone()
        .ok_or_else(|| Error::Config(format!("{what}: no input file (use --input or `input`)")))?;
    if !p.is_file() {
        return Err(Error::Config(format!(
            "input file {} not found",
            p.display()
        )));
    }
    Ok(p)
}

/// A command with all inputs parsed and validated, ready to run.
enum Job {
    SimulateSpectrum {
        params: JcParams,
        freqs: Vec<f64>,
    },
    FitSpectrum {
        trace: SpectrumTrace,
        init: Option<JcParams>,
        t1: f64,
    },
    FluxSweep {
        scan: Box<ScanConfig>,
        pos: Position,
    },
    Scan {
        scan: Box<ScanConfig>,
        spec: CampaignSpec,
    },
    FitGx {
        points: Vec<(f64, f64)>,
        l_r: f64,
    },
    FitGy {
        points: Vec<(f64, f64)>,
        grid: CapacitanceGrid,
        geom: GeometryParams,
        x: f64,
    },
    Vibration {
        axis: (String, Vec<f64>),
        phase: Vec<f64>,
        kappa: f64,
        slope: f64,
    },
}

fn prepare(cmd: Command, cfg: &RunConfig) -> Result<Job> {
    Ok(match cmd {
        Command::SimulateSpectrum => Job::SimulateSpectrum {
            params: cfg.jc_params()?,
            freqs: cfg.spectrum_freqs()?,
        },
        Command::FitSpectrum => {
            let path = required_input(cfg, "fit-spectrum")?;
            let trace = io::parse_trace(&io::read_text(&path)?)?;
            let init = if cfg.spectrum.init_from_config {
                Some(cfg.jc_params()?)
            } else {
                None
            };
            Job::FitSpectrum {
                trace,
                init,
                t1: time(&cfg.spectrum.t1)?,
            }
        }
        Command::FluxSweep => {
            let f = &cfg.flux_sweep;
            if f.steps == 0 || !(f.flux_max > f.flux_min) {
                return Err(Error::Config(
                    "flux_sweep: need steps > 0 and flux_max > flux_min".into(),
                ));
            }
            Job::FluxSweep {
                scan: Box::new(cfg.scan_config()?),
                pos: Position {
                    x: len(&f.x)?,
                    y: len(&f.y)?,
                    z: len(&f.z)?,
                },
            }
        }
        Command::Scan => Job::Scan {
            scan: Box::new(cfg.scan_config()?),
            spec: cfg.campaign()?,
        },
        Command::FitGx => {
            let path = required_input(cfg, "fit-gx")?;
            Job::FitGx {
                points: io::parse_points(
                    &io::read_text(&path)?,
                    ("dx", Dimension::Length),
                    ("g", Dimension::Frequency),
                )?,
                l_r: cfg.geometry()?.l_r,
            }
        }
        Command::FitGy => {
            let path = required_input(cfg, "fit-gy")?;
            Job::FitGy {
                points: io::parse_points(
                    &io::read_text(&path)?,
                    ("y", Dimension::Length),
                    ("g", Dimension::Frequency),
                )?,
                grid: cfg.grid()?,
                geom: cfg.geometry()?,
                x: len(&cfg.fit_gy.x)?,
            }
        }
        Command::Vibration => {
            let v = &cfg.vibration;
            let slope = match &v.slope_table {
                Some(p) => {
                    let t = Table::parse(&io::read_text(p)?)?;
                    let zs = t.quantity_column("z", Dimension::Length)?;
                    let nus = t.quantity_column("nu_r", Dimension::Frequency)?;
                    scan_sim::slope_from_table(&zs, &nus, len(&v.z)?)?
                }
                None => parse_quantity(&v.slope, Dimension::FrequencyPerLength)?,
            };
            let (axis, phase) = match &cfg.input {
                Some(_) => {
                    let path = required_input(cfg, "vibration")?;
                    let t = Table::parse(&io::read_text(&path)?)?;
                    let phase = t.column("phase_rad").ok_or_else(|| {
                        Error::Config("vibration input needs a `phase_rad` column".into())
                    })?;
                    let name = t
                        .columns
                        .iter()
                        .find(|c| *c != "phase_rad")
                        .cloned()
                        .unwrap_or_else(|| "bin".into());
                    let axis = t
                        .column(&name)
                        .unwrap_or_else(|| (0..phase.len()).map(|i| i as f64).collect());
                    ((name, axis), phase)
                }
                None => (
                    ("bin".to_string(), (0..v.bins).map(|i| i as f64).collect()),
                    vec![v.white_level; v.bins],
                ),
            };
            Job::Vibration {
                axis,
                phase,
                kappa: freq(&v.kappa)?,
                slope,
            }
        }
    })
}

fn spectrum_truth(p: &JcParams) -> indexmap::IndexMap<String, f64> {
    [
        ("amp", p.amp),
        ("bg", p.bg),
        ("g_ghz", p.g),
        ("kappa_ghz", p.kappa),
        ("nu_r_ghz", p.nu_r),
        ("nu_q_ghz", p.nu_q),
        ("t1_us", p.t1),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn noisy_trace(p: &JcParams, freqs: &[f64], noise: f64, seed: u64) -> Result<SpectrumTrace> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let clean = jc_model::transmission(p, freqs)?;
    if noise == 0.0 {
        return Ok(clean);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let values = clean
        .values()
        .iter()
        .map(|v| {
            let n: f64 = StandardNormal.sample(&mut rng);
            (v * (1.0 + noise * n)).max(0.0)
        })
        .collect();
    SpectrumTrace::new(freqs.to_vec(), values)
}

fn fit_params_from(fit: &FitResult, t1: f64) -> Option<JcParams> {
    Some(JcParams {
        amp: fit.value("amp")?,
        bg: fit.value("bg")?,
        g: fit.value("g")?,
        kappa: fit.value("kappa")?,
        nu_r: fit.value("nu_r")?,
        nu_q: fit.value("nu_q")?,
        t1,
    })
}

impl Job {
    fn execute(
        self,
        cfg: &RunConfig,
        out: &mut OutputDir,
        manifest: &mut Manifest,
    ) -> Result<Outcome> {
        match self {
            Job::SimulateSpectrum { params, freqs } => {
                if cfg.spectrum.noise_frac < 0.0 {
                    return Err(Error::Config("spectrum.noise_frac must be >= 0".into()));
                }
                let trace = noisy_trace(&params, &freqs, cfg.spectrum.noise_frac, cfg.seed)?;
                out.write("trace.csv", &io::write_trace(&trace))?;
                manifest.truth = spectrum_truth(&params);
                Ok(Outcome::OK)
            }
            Job::FitSpectrum { trace, init, t1 } => {
                let init = match init {
                    Some(p) => p,
                    None => fitting::initial_guess(&trace, t1)?,
                };
                let fit = fitting::fit_spectrum(&trace, &init, t1)?;
                out.write("fit_report.toml", &io::write_fit_report(&fit)?)?;
                if let Some(p) = fit_params_from(&fit, t1) {
                    let mut t = Table::new(["frequency_GHz", "data", "model"]);
                    for (f, v) in trace.iter() {
                        t.push(vec![f, v, scan_sim::coupled_transmission(&p, f)]);
                    }
                    out.write("fit_curve.csv", &t.to_text())?;
                }
                Ok(Outcome::from_fit(&fit))
            }
            Job::FluxSweep { scan, pos } => {
                let f = &cfg.flux_sweep;
                let sweep = scan_sim::simulate_flux_sweep(
                    &scan,
                    pos,
                    (f.flux_min, f.flux_max),
                    f.steps,
                    0,
                )?;
                let mut t = Table::new(["flux", "transmission"]);
                for (x, v) in sweep.fluxes.iter().zip(&sweep.values) {
                    t.push(vec![*x, *v]);
                }
                out.write("flux_sweep.csv", &t.to_text())?;
                let phys = scan_sim::position_physics(&scan, pos)?;
                let found = scan_sim::find_resonance(&sweep, f.threshold);
                let report = ResonanceReport {
                    found: found.is_ok(),
                    flux: found.as_ref().ok().copied(),
                    message: found.as_ref().err().map(|e| e.to_string()),
                    step: (f.flux_max - f.flux_min) / f.steps as f64,
                    predicted_crossings: scan_sim::predicted_crossings(&scan, phys.ec)?,
                    g_ghz: phys.g,
                    ec_ghz: phys.ec,
                };
                out.write(
                    "resonance.toml",
                    &toml::to_string(&report).map_err(|e| Error::Config(e.to_string()))?,
                )?;
                Ok(Outcome::OK)
            }
            Job::Scan { scan, spec } => write_campaign(&scan, &spec, out, manifest),
            Job::FitGx { points, l_r } => {
                let fit = fitting::fit_gx(&points, l_r)?;
                out.write("gx_fit.toml", &io::write_fit_report(&fit)?)?;
                let (g_max, x0) = (fit.params["g_max"], fit.params["x0"]);
                let mut t = Table::new(["dx_um", "g_GHz", "model_GHz"]);
                for (dx, g) in &points {
                    t.push(vec![
                        *dx,
                        *g,
                        g_max * (std::f64::consts::PI * (dx + x0) / l_r).sin(),
                    ]);
                }
                out.write("gx_curve.csv", &t.to_text())?;
                Ok(Outcome::from_fit(&fit))
            }
            Job::FitGy {
                points,
                grid,
                geom,
                x,
            } => {
                let fit = fitting::fit_gy(&points, &grid, &geom, x)?;
                out.write("gy_fit.toml", &io::write_fit_report(&fit)?)?;
                let z = fit.params["z"];
                let mut t = Table::new(["y_um", "g_GHz", "model_GHz"]);
                for (y, g) in &points {
                    let m = coupling::g_of_position(x, *y, z, &grid, &geom).unwrap_or(f64::NAN);
                    t.push(vec![*y, *g, m]);
                }
                out.write("gy_curve.csv", &t.to_text())?;
                Ok(Outcome::from_fit(&fit))
            }
            Job::Vibration {
                axis,
                phase,
                kappa,
                slope,
            } => {
                let disp = scan_sim::vibration_to_displacement(&phase, kappa, slope)?;
                let mut t = Table::new([axis.0.as_str(), "phase_rad", "displacement_um"]);
                for ((a, p), d) in axis.1.iter().zip(&phase).zip(&disp) {
                    t.push(vec![*a, *p, *d]);
                }
                out.write("displacement.csv", &t.to_text())?;
                manifest.truth.insert("slope_ghz_per_um".into(), slope);
                manifest.truth.insert("kappa_ghz".into(), kappa);
                Ok(Outcome::OK)
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct ResonanceReport {
    found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    flux: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    step: f64,
    predicted_crossings: Vec<f64>,
    g_ghz: f64,
    ec_ghz: f64,
}

#[derive(Debug, Serialize)]
struct CampaignReport {
    g_max_ghz: f64,
    g_max_sigma_ghz: f64,
    x0_um: f64,
    x0_sigma_um: f64,
    z_um: f64,
    z_sigma_um: f64,
    gx_converged: bool,
    gy_converged: bool,
    gy_at_bound: bool,
    gy_dx_um: f64,
    spectra: usize,
    spectra_converged: usize,
    truth: CampaignTruth,
}

#[derive(Debug, Serialize)]
struct CampaignTruth {
    x0_um: f64,
    z_um: f64,
    /// Largest antinode coupling over the scanned y values.
    g_max_sampled_ghz: f64,
}

fn write_campaign(
    scan: &ScanConfig,
    spec: &CampaignSpec,
    out: &mut OutputDir,
    manifest: &mut Manifest,
) -> Result<Outcome> {
    let res = scan_sim::run_campaign(scan, spec)?;
    let mut gmax = Table::new(["dx_um", "x_um", "g_max_fit_GHz", "g_max_model_GHz"]);
    let (g_max, x0) = (res.gx_fit.params["g_max"], res.gx_fit.params["x0"]);
    let mut n_conv = 0;
    let mut n_total = 0;
    let mut g_sampled: f64 = 0.0;
    for (k, row) in res.rows.iter().enumerate() {
        let mut gy = Table::new([
            "y_true_um",
            "y_recorded_um",
            "flux",
            "g_true_GHz",
            "g_fit_GHz",
            "g_sigma_GHz",
            "converged",
        ]);
        for (j, (p, fit)) in row.scan.iter().zip(&row.fits).enumerate() {
            let file = format!("traces/x{k}_y{j:03}.csv");
            out.write(&file, &io::write_trace(&p.trace))?;
            let (g, s, c) = match fit {
                Ok(f) => (
                    f.value("g").unwrap_or(f64::NAN),
                    f.sigma("g").unwrap_or(f64::NAN),
                    f.converged,
                ),
                Err(_) => (f64::NAN, f64::NAN, false),
            };
            n_total += 1;
            n_conv += usize::from(c);
            let m = coupling::mode_shape(row.x, &scan.geom)?;
            if m > 0.0 {
                g_sampled = g_sampled.max(p.truth.g / m);
            }
            gy.push(vec![
                p.y_true,
                p.y_recorded,
                p.flux,
                p.truth.g,
                g,
                s,
                f64::from(u8::from(c)),
            ]);
            manifest.positions.push(ManifestPosition {
                file,
                x_um: row.x,
                y_um: p.y_true,
                y_recorded_um: p.y_recorded,
                z_um: spec.z,
                flux: p.flux,
                stream: p.stream,
                nu_r_ghz: p.truth.nu_r,
                nu_q_ghz: p.truth.nu_q,
                g_ghz: p.truth.g,
                kappa_ghz: p.truth.kappa,
                t1_us: p.truth.t1,
                amp: p.truth.amp,
                bg: p.truth.bg,
            });
        }
        out.write(&format!("gy_x{k}.csv"), &gy.to_text())?;
        gmax.push(vec![
            row.dx,
            row.x,
            row.g_max_fit,
            g_max * (std::f64::consts::PI * (row.dx + x0) / scan.geom.l_r).sin(),
        ]);
    }
    out.write("gmax_vs_dx.csv", &gmax.to_text())?;
    out.write("gx_fit.toml", &io::write_fit_report(&res.gx_fit)?)?;
    out.write("gy_fit.toml", &io::write_fit_report(&res.gy_fit)?)?;

    let row = &res.rows[res.gy_row];
    let x_fit = row.dx + x0;
    let z = res.gy_fit.params["z"];
    let mut model = Table::new(["y_um", "g_model_GHz"]);
    for &y in &spec.ys {
        if let Ok(g) = coupling::g_of_position(x_fit, y, z, &scan.grid, &scan.geom) {
            model.push(vec![y, g]);
        }
    }
    out.write("gy_model.csv", &model.to_text())?;

    let report = CampaignReport {
        g_max_ghz: g_max,
        g_max_sigma_ghz: res.gx_fit.sigmas["g_max"],
        x0_um: x0,
        x0_sigma_um: res.gx_fit.sigmas["x0"],
        z_um: z,
        z_sigma_um: res.gy_fit.sigmas["z"],
        gx_converged: res.gx_fit.converged,
        gy_converged: res.gy_fit.converged,
        gy_at_bound: res.gy_fit.at_bound,
        gy_dx_um: row.dx,
        spectra: n_total,
        spectra_converged: n_conv,
        truth: CampaignTruth {
            x0_um: scan.geom.x0,
            z_um: spec.z,
            g_max_sampled_ghz: g_sampled,
        },
    };
    out.write(
        "report.toml",
        &toml::to_string(&report).map_err(|e| Error::Config(e.to_string()))?,
    )?;
    manifest.truth.insert("x0_um".into(), scan.geom.x0);
    manifest.truth.insert("z_um".into(), spec.z);
    manifest.truth.insert("nu_r_ghz".into(), scan.geom.nu_r);
    manifest
        .truth
        .insert("ej_max_ghz".into(), scan.squid.ej_max);
    Ok(if res.gx_fit.converged && res.gy_fit.converged {
        Outcome::OK
    } else {
        Outcome::NOT_CONVERGED
    })
}
