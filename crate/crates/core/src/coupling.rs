//! Position-dependent coupling strength.
//!
//! `g(x, y, z) = 2 e sqrt(2 Z_c / h) m(x) ν_r β(y, z) n₀₁(y, z, ν_r)`, with the
//! voltage-division factor `β` and the charging energy taken from five
//! capacitance coefficients tabulated on a `(y, z)` grid.
//!
//! Positions are in µm. `x` is measured along the resonator from its
//! midpoint, so `m(x) = |sin(π x / l_r)|` vanishes at the central voltage
//! node and reaches one at the antinodes at `x = ±l_r/2`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::transmon::{self, TransmonSpec, ELEMENTARY_CHARGE, PLANCK};

/// Capacitance coefficients (fF): islands `a`, `b` to the center pin `p`, to
/// ground `g`, and island to island.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapCoeffs {
    pub c_ap: f64,
    pub c_bp: f64,
    pub c_ag: f64,
    pub c_bg: f64,
    pub c_ab: f64,
}

impl CapCoeffs {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_ap", self.c_ap),
            ("c_bp", self.c_bp),
            ("c_ag", self.c_ag),
            ("c_bg", self.c_bg),
            ("c_ab", self.c_ab),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("{v} fF must be > 0")));
            }
        }
        Ok(())
    }

    pub fn c_a_sigma(&self) -> f64 {
        self.c_ap + self.c_ag
    }

    pub fn c_b_sigma(&self) -> f64 {
        self.c_bp + self.c_bg
    }

    /// `C_Σ = C_ab + (1/C_aΣ + 1/C_bΣ)⁻¹`.
    pub fn total_capacitance(&self) -> f64 {
        let (a, b) = (self.c_a_sigma(), self.c_b_sigma());
        self.c_ab + a * b / (a + b)
    }

    /// Exchange the labels of the two islands.
    pub fn swapped(&self) -> Self {
        CapCoeffs {
            c_ap: self.c_bp,
            c_bp: self.c_ap,
            c_ag: self.c_bg,
            c_bg: self.c_ag,
            c_ab: self.c_ab,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        CapCoeffs {
            c_ap: s * self.c_ap,
            c_bp: s * self.c_bp,
            c_ag: s * self.c_ag,
            c_bg: s * self.c_bg,
            c_ab: s * self.c_ab,
        }
    }

    fn as_array(&self) -> [f64; 5] {
        [self.c_ap, self.c_bp, self.c_ag, self.c_bg, self.c_ab]
    }

    fn from_array(a: [f64; 5]) -> Self {
        CapCoeffs {
            c_ap: a[0],
            c_bp: a[1],
            c_ag: a[2],
            c_bg: a[3],
            c_ab: a[4],
        }
    }
}

/// Voltage-division factor
/// `β = |C_ap C_bg − C_bp C_ag| / (C_ab (C_aΣ + C_bΣ) + C_aΣ C_bΣ)`.
pub fn beta(c: &CapCoeffs) -> f64 {
    let (a, b) = (c.c_a_sigma(), c.c_b_sigma());
    (c.c_ap * c.c_bg - c.c_bp * c.c_ag).abs() / (c.c_ab * (a + b) + a * b)
}

/// Resonator geometry and line parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryParams {
    /// Resonator length (µm).
    pub l_r: f64,
    /// Offset of the scan's `Δx` origin from the resonator midpoint (µm).
    pub x0: f64,
    /// Characteristic line impedance (Ω).
    pub z_c: f64,
    /// Resonator frequency (GHz).
    pub nu_r: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams {
            l_r: 7872.0,
            x0: 930.0,
            z_c: 50.0,
            nu_r: 8.0,
        }
    }
}

impl GeometryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_r.is_finite() && self.l_r > 0.0) {
            return Err(Error::invalid("l_r", format!("{} must be > 0", self.l_r)));
        }
        if !(self.z_c.is_finite() && self.z_c > 0.0) {
            return Err(Error::invalid("z_c", format!("{} must be > 0", self.z_c)));
        }
        if !(self.nu_r.is_finite() && self.nu_r > 0.0) {
            return Err(Error::invalid("nu_r", format!("{} must be > 0", self.nu_r)));
        }
        if !self.x0.is_finite() {
            return Err(Error::invalid("x0", "must be finite"));
        }
        Ok(())
    }

    /// Position from the midpoint for a scan displacement `dx`.
    pub fn position(&self, dx: f64) -> f64 {
        dx + self.x0
    }

    /// `2 e sqrt(2 Z_c / h)`: maps `ν_r β n₀₁` to `g` at `m = 1`.
    pub fn coupling_prefactor(&self) -> f64 {
        2.0 * ELEMENTARY_CHARGE * (2.0 * self.z_c / PLANCK).sqrt()
    }
}

/// Sinusoidal mode-shape factor `|sin(π x / l_r)|` for `|x| <= l_r/2`.
pub fn mode_shape(x: f64, geom: &GeometryParams) -> Result<f64> {
    let half = 0.5 * geom.l_r;
    if !(x.abs() <= half) {
        return Err(Error::OutOfBounds {
            axis: "x",
            value: x,
            lo: -half,
            hi: half,
            unit: "um",
        });
    }
    Ok((PI * x / geom.l_r).sin().abs())
}

/// Five capacitance coefficients tabulated on a rectangular `(y, z)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitanceGrid {
    y_axis: Vec<f64>,
    z_axis: Vec<f64>,
    // row-major: index iy * nz + iz
    coeffs: Vec<CapCoeffs>,
}

impl CapacitanceGrid {
    pub fn new(y_axis: Vec<f64>, z_axis: Vec<f64>, coeffs: Vec<CapCoeffs>) -> Result<Self> {
        for (name, axis) in [("y_axis", &y_axis), ("z_axis", &z_axis)] {
            if axis.len() < 2 {
                return Err(Error::invalid(name, "needs at least two nodes"));
            }
            if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid(
                    name,
                    "must be finite and strictly ascending",
                ));
            }
        }
        if coeffs.len() != y_axis.len() * z_axis.len() {
            return Err(Error::invalid(
                "coeffs",
                format!(
                    "{} entries for a {}x{} grid",
                    coeffs.len(),
                    y_axis.len(),
                    z_axis.len()
                ),
            ));
        }
        for c in &coeffs {
            c.validate()?;
        }
        Ok(CapacitanceGrid {
            y_axis,
            z_axis,
            coeffs,
        })
    }

    /// Uniform grid `min + i * pitch` along both axes, filled by `f(y, z)`.
    pub fn from_fn(
        y: UniformAxis,
        z: UniformAxis,
        mut f: impl FnMut(f64, f64) -> CapCoeffs,
    ) -> Result<Self> {
        let y_axis = y.values();
        let z_axis = z.values();
        let mut coeffs = Vec::with_capacity(y_axis.len() * z_axis.len());
        for &yv in &y_axis {
            for &zv in &z_axis {
                coeffs.push(f(yv, zv));
            }
        }
        Self::new(y_axis, z_axis, coeffs)
    }

    pub fn y_axis(&self) -> &[f64] {
        &self.y_axis
    }

    pub fn z_axis(&self) -> &[f64] {
        &self.z_axis
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.y_axis[0], *self.y_axis.last().unwrap())
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.z_axis[0], *self.z_axis.last().unwrap())
    }

    pub fn node(&self, iy: usize, iz: usize) -> &CapCoeffs {
        &self.coeffs[iy * self.z_axis.len() + iz]
    }

    pub fn contains(&self, y: f64, z: f64) -> bool {
        let (y0, y1) = self.y_range();
        let (z0, z1) = self.z_range();
        (y0..=y1).contains(&y) && (z0..=z1).contains(&z)
    }

    /// Serialize in the documented text grid format. Requires uniform axes.
    pub fn to_text(&self) -> Result<String> {
        let y = UniformAxis::detect(&self.y_axis)
            .ok_or_else(|| Error::invalid("y_axis", "not uniform"))?;
        let z = UniformAxis::detect(&self.z_axis)
            .ok_or_else(|| Error::invalid("z_axis", "not uniform"))?;
        let mut out = format!(
            "y_min={},y_pitch={},y_count={},z_min={},z_pitch={},z_count={},units=um\n",
            y.min, y.pitch, y.count, z.min, z.pitch, z.count
        );
        for c in &self.coeffs {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.c_ap, c.c_bp, c.c_ag, c.c_bg, c.c_ab
            );
        }
        Ok(out)
    }

    /// Parse the text grid format.
    ///
    /// The first non-comment line defines the axes:
    /// `y_min=<f>,y_pitch=<f>,y_count=<n>,z_min=<f>,z_pitch=<f>,z_count=<n>,units=um`
    /// (keys in any order, all required, `units` may be `um`, `nm` or `mm`).
    /// It is followed by exactly `y_count * z_count` node lines
    /// `c_ap,c_bp,c_ag,c_bg,c_ab` in fF, ordered by `y` then `z` (`z` varies
    /// fastest). Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let perr = |line: usize, reason: String| Error::Parse {
            what: "capacitance grid",
            line,
            reason,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| perr(1, "missing header".into()))?;
        let (y, z) = parse_grid_header(header).map_err(|r| perr(hline, r))?;
        let total = y
            .count
            .checked_mul(z.count)
            .filter(|&n| n <= 50_000_000)
            .ok_or_else(|| perr(hline, "grid too large".into()))?;
        let mut coeffs = Vec::with_capacity(total.min(1 << 20));
        let mut last_line = hline;
        for (ln, line) in lines {
            last_line = ln;
            if coeffs.len() == total {
                return Err(perr(ln, format!("more than {total} node lines")));
            }
            let mut vals = [0.0; 5];
            let mut fields = line.split(',');
            for (k, slot) in vals.iter_mut().enumerate() {
                let f = fields
                    .next()
                    .ok_or_else(|| perr(ln, format!("expected 5 values, found {k}")))?;
                *slot = f
                    .trim()
                    .parse()
                    .map_err(|_| perr(ln, format!("`{}` is not a number", f.trim())))?;
            }
            if fields.next().is_some() {
                return Err(perr(ln, "expected 5 values, found more".into()));
            }
            let c = CapCoeffs::from_array(vals);
            c.validate().map_err(|e| perr(ln, e.to_string()))?;
            coeffs.push(c);
        }
        if coeffs.len() != total {
            return Err(perr(
                last_line,
                format!("expected {total} node lines, found {}", coeffs.len()),
            ));
        }
        Self::new(y.values(), z.values(), coeffs).map_err(|e| perr(hline, e.to_string()))
    }
}

fn parse_grid_header(header: &str) -> std::result::Result<(UniformAxis, UniformAxis), String> {
    let mut fields = std::collections::HashMap::new();
    for item in header.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format!("header field `{}` is not key=value", item.trim()))?;
        let k = k.trim();
        if fields.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(format!("duplicate header key `{k}`"));
        }
    }
    let scale = match fields.remove("units").as_deref() {
        Some("um") | Some("µm") => 1.0,
        Some("nm") => 1e-3,
        Some("mm") => 1e3,
        Some(u) => return Err(format!("unknown length unit `{u}`")),
        None => return Err("missing header key `units`".into()),
    };
    let mut take_f = |k: &str| -> std::result::Result<f64, String> {
        let v = fields
            .remove(k)
            .ok_or_else(|| format!("missing header key `{k}`"))?;
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("`{k}={v}` is not a finite number"))
    };
    let y_min = take_f("y_min")? * scale;
    let y_pitch = take_f("y_pitch")? * scale;
    let z_min = take_f("z_min")? * scale;
    let z_pitch = take_f("z_pitch")? * scale;
    let mut take_n = |k: &str| -> std::result::Result<usize, String> {
        let v = fields
            .remove(k)
            .ok_or_else(|| format!("missing header key `{k}`"))?;
        v.parse::<usize>()
            .map_err(|_| format!("`{k}={v}` is not a count"))
    };
    let y_count = take_n("y_count")?;
    let z_count = take_n("z_count")?;
    if let Some(k) = fields.keys().next() {
        return Err(format!("unknown header key `{k}`"));
    }
    let y = UniformAxis::new(y_min, y_pitch, y_count).map_err(|e| e.to_string())?;
    let z = UniformAxis::new(z_min, z_pitch, z_count).map_err(|e| e.to_string())?;
    Ok((y, z))
}

/// A uniform axis `min + i * pitch`, `i = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformAxis {
    pub min: f64,
    pub pitch: f64,
    pub count: usize,
}

impl UniformAxis {
    pub fn new(min: f64, pitch: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && pitch.is_finite() && pitch > 0.0) {
            return Err(Error::invalid("axis", format!("min {min}, pitch {pitch}")));
        }
        if count < 2 {
            return Err(Error::invalid("axis", format!("count {count} < 2")));
        }
        Ok(UniformAxis { min, pitch, count })
    }

    /// Axis spanning `[min, max]` at the given pitch (count rounded).
    pub fn spanning(min: f64, max: f64, pitch: f64) -> Result<Self> {
        let count = ((max - min) / pitch).round() as usize + 1;
        Self::new(min, pitch, count)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.min + i as f64 * self.pitch)
            .collect()
    }

    pub fn max(&self) -> f64 {
        self.min + (self.count - 1) as f64 * self.pitch
    }

    fn detect(axis: &[f64]) -> Option<Self> {
        let pitch = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
        let cand = UniformAxis::new(axis[0], pitch, axis.len()).ok()?;
        (cand.values() == axis).then_some(cand)
    }
}

// (lower index, fraction) for bilinear weights
fn locate(axis: &[f64], v: f64) -> (usize, f64) {
    let n = axis.len();
    let i = axis.partition_point(|&a| a <= v).clamp(1, n - 1) - 1;
    let t = (v - axis[i]) / (axis[i + 1] - axis[i]);
    (i, t)
}

/// Bilinear interpolation of every coefficient at `(y, z)`. No extrapolation.
pub fn interpolate(grid: &CapacitanceGrid, y: f64, z: f64) -> Result<CapCoeffs> {
    let (y0, y1) = grid.y_range();
    let (z0, z1) = grid.z_range();
    if !(y0..=y1).contains(&y) {
        return Err(Error::OutOfBounds {
            axis: "y",
            value: y,
            lo: y0,
            hi: y1,
            unit: "um",
        });
    }
    if !(z0..=z1).contains(&z) {
        return Err(Error::OutOfBounds {
            axis: "z",
            value: z,
            lo: z0,
            hi: z1,
            unit: "um",
        });
    }
    let (iy, ty) = locate(&grid.y_axis, y);
    let (iz, tz) = locate(&grid.z_axis, z);
    let c00 = grid.node(iy, iz).as_array();
    let c01 = grid.node(iy, iz + 1).as_array();
    let c10 = grid.node(iy + 1, iz).as_array();
    let c11 = grid.node(iy + 1, iz + 1).as_array();
    let mut out = [0.0; 5];
    for k in 0..5 {
        let lo = (1.0 - tz) * c00[k] + tz * c01[k];
        let hi = (1.0 - tz) * c10[k] + tz * c11[k];
        out[k] = (1.0 - ty) * lo + ty * hi;
    }
    Ok(CapCoeffs::from_array(out))
}

/// Intermediate quantities of the coupling calculation at one `(y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingFactors {
    pub caps: CapCoeffs,
    pub beta: f64,
    /// Charging energy (GHz).
    pub ec: f64,
    /// Josephson energy bringing the qubit to `ν_r` (GHz).
    pub ej: f64,
    pub n01: f64,
    /// Coupling at the mode antinode, `m(x) = 1` (GHz).
    pub g_antinode: f64,
}

/// Everything in `g(x, y, z)` except the mode shape.
pub fn coupling_factors(
    y: f64,
    z: f64,
    grid: &CapacitanceGrid,
    geom: &GeometryParams,
) -> Result<CouplingFactors> {
    geom.validate()?;
    let caps = interpolate(grid, y, z)?;
    let cell = |source: Error| Error::CouplingCell {
        y,
        z,
        source: Box::new(source),
    };
    let ec = transmon::charging_energy(&caps).map_err(cell)?;
    let ej = transmon::invert_ej(ec, geom.nu_r).map_err(cell)?;
    let sol = transmon::solve(&TransmonSpec::new(ec, ej)).map_err(cell)?;
    let b = beta(&caps);
    Ok(CouplingFactors {
        caps,
        beta: b,
        ec,
        ej,
        n01: sol.n01,
        g_antinode: geom.coupling_prefactor() * geom.nu_r * b * sol.n01,
    })
}

/// Coupling strength (GHz) at probe position `(x, y, z)`.
pub fn g_of_position(
    x: f64,
    y: f64,
    z: f64,
    grid: &CapacitanceGrid,
    geom: &GeometryParams,
) -> Result<f64> {
    let m = mode_shape(x, geom)?;
    Ok(m * coupling_factors(y, z, grid, geom)?.g_antinode)
}

/// Analytic capacitance surrogate used for tests and synthetic campaigns.
///
/// Not a field solution. Each island couples to the center pin through a
/// Poisson-kernel smoothed overlap with the pin strip and to ground through
/// the complementary overlap, both falling as `1 / (z + z_offset)`; the
/// islands also see a fixed chip-frame ground and a mutual capacitance. The
/// islands are rotated in-plane by `misalignment_deg` about the probe
/// center. By construction `c_ap(y, z) == c_bp(-y, z)` and every coefficient
/// strictly decreases with `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateGeometry {
    /// Island extent across the resonator (µm).
    pub island_width: f64,
    /// Island extent along the resonator (µm).
    pub island_length: f64,
    /// Gap between the islands (µm).
    pub island_gap: f64,
    /// Center pin width (µm).
    pub pin_width: f64,
    /// Gap between pin and ground planes (µm).
    pub cpw_gap: f64,
    /// In-plane rotation of the qubit chip (degrees).
    pub misalignment_deg: f64,
    /// Pin coupling per µm of smoothed overlap at `z + z_offset = 10 µm` (fF/µm).
    pub pin_strength: f64,
    /// Ground-plane coupling per µm of smoothed overlap at 10 µm (fF/µm).
    pub ground_strength: f64,
    /// Island-to-frame capacitance (fF).
    pub frame_capacitance: f64,
    /// `z`-independent part of the island-island capacitance (fF).
    pub mutual_capacitance: f64,
    /// `z`-dependent part of the island-island capacitance at 10 µm (fF).
    pub mutual_z_part: f64,
    pub z_offset: f64,
    pub y_range: (f64, f64),
    pub z_range: (f64, f64),
    pub pitch: f64,
}

impl Default for SurrogateGeometry {
    fn default() -> Self {
        SurrogateGeometry {
            island_width: 70.0,
            island_length: 300.0,
            island_gap: 30.0,
            pin_width: 10.0,
            cpw_gap: 6.0,
            misalignment_deg: 3.0,
            pin_strength: 5.09,
            ground_strength: 0.404,
            frame_capacitance: 5.0,
            mutual_capacitance: 26.96,
            mutual_z_part: 8.59,
            z_offset: 4.0,
            y_range: (-150.0, 150.0),
            z_range: (5.0, 25.0),
            pitch: 1.0,
        }
    }
}

const STRIPS: usize = 8;

impl SurrogateGeometry {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("island_width", self.island_width),
            ("island_length", self.island_length),
            ("island_gap", self.island_gap),
            ("pin_width", self.pin_width),
            ("cpw_gap", self.cpw_gap),
            ("pin_strength", self.pin_strength),
            ("ground_strength", self.ground_strength),
            ("frame_capacitance", self.frame_capacitance),
            ("mutual_capacitance", self.mutual_capacitance),
            ("mutual_z_part", self.mutual_z_part),
            ("pitch", self.pitch),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("{v} must be > 0")));
            }
        }
        if !(self.z_offset >= 0.0 && self.z_range.0 > 0.0) {
            return Err(Error::invalid("z_range", "must be positive"));
        }
        if !(self.misalignment_deg.abs() < 45.0) {
            return Err(Error::invalid("misalignment_deg", "must be below 45"));
        }
        Ok(())
    }

    /// Coefficients at a single `(y, z)`.
    pub fn coeffs_at(&self, y: f64, z: f64) -> CapCoeffs {
        let theta = self.misalignment_deg.to_radians();
        let (s, c) = theta.sin_cos();
        let inner = 0.5 * self.island_gap * c;
        let outer = (0.5 * self.island_gap + self.island_width) * c;
        let height = z + self.z_offset;
        let decay = 10.0 / height;
        let half_pin = 0.5 * self.pin_width;
        let half_slot = half_pin + self.cpw_gap;

        // island a occupies [y - outer, y - inner] (+ strip shift), b mirrors it
        let mut pin = [0.0; 2];
        let mut gnd = [0.0; 2];
        for k in 0..STRIPS / 2 {
            let xi = ((k as f64 + 0.5) / STRIPS as f64) * self.island_length;
            let shift = xi * s;
            for (side, sign) in [(0, -1.0), (1, 1.0)] {
                let mut p = 0.0;
                let mut q = 0.0;
                for sh in [shift, -shift] {
                    let (u1, u2) = if sign < 0.0 {
                        (y + (-outer + sh), y + (-inner + sh))
                    } else {
                        (y + (inner - sh), y + (outer - sh))
                    };
                    p += strip_overlap(u1, u2, half_pin, height);
                    q += (u2 - u1) - strip_overlap(u1, u2, half_slot, height);
                }
                pin[side] += p;
                gnd[side] += q;
            }
        }
        let norm = 1.0 / STRIPS as f64;
        CapCoeffs {
            c_ap: self.pin_strength * pin[0] * norm * decay,
            c_bp: self.pin_strength * pin[1] * norm * decay,
            c_ag: self.frame_capacitance + self.ground_strength * gnd[0] * norm * decay,
            c_bg: self.frame_capacitance + self.ground_strength * gnd[1] * norm * decay,
            c_ab: self.mutual_capacitance + self.mutual_z_part * decay.sqrt(),
        }
    }
}

// ∫_{u1}^{u2} of the Poisson-smoothed indicator of [-h, h] at height z.
fn strip_overlap(u1: f64, u2: f64, h: f64, z: f64) -> f64 {
    let prim = |t: f64| atan_primitive(t + h, z) - atan_primitive(t - h, z);
    (prim(u2) - prim(u1)) / PI
}

// ∫ atan(t / z) dt, even in t
fn atan_primitive(t: f64, z: f64) -> f64 {
    let a = t.abs();
    a * (a / z).atan() - 0.5 * z * (a * a + z * z).ln()
}

/// Generate a capacitance grid from the analytic surrogate.
pub fn surrogate_grid(geom: &SurrogateGeometry) -> Result<CapacitanceGrid> {
    geom.validate()?;
    let y = UniformAxis::spanning(geom.y_range.0, geom.y_range.1, geom.pitch)?;
    let z = UniformAxis::spanning(geom.z_range.0, geom.z_range.1, geom.pitch)?;
    CapacitanceGrid::from_fn(y, z, |yv, zv| geom.coeffs_at(yv, zv))
}
