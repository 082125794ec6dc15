//! Distributed-spring soil model: p-y curves, secant stiffness and
//! secant-proportional dashpots (a nonlinear Kelvin-Voigt element per node
//! and horizontal direction).

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use crate::csvio;
use crate::error::{Error, Result};

pub const PY_HEADER: [&str; 3] = ["depth_m", "y_m", "p_Npm"];

/// Below this displacement the secant stiffness takes its origin limit.
pub const Y_TOL: f64 = 1e-9;

/// Lateral resistance curve at one depth (depth positive down from mudline).
#[derive(Debug, Clone, PartialEq)]
pub struct PYCurve {
    pub depth: f64,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
}

impl PYCurve {
    pub fn new(depth: f64, y: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if y.len() != p.len() || y.len() < 2 {
            return Err(Error::Config(format!(
                "p-y curve at depth {depth} m needs at least two (y, p) points"
            )));
        }
        if y[0] != 0.0 || p[0] != 0.0 {
            return Err(Error::Config(format!(
                "p-y curve at depth {depth} m must start at the origin"
            )));
        }
        if y.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "p-y curve at depth {depth} m: y must be strictly increasing"
            )));
        }
        if p.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config(format!(
                "p-y curve at depth {depth} m: p must be non-decreasing"
            )));
        }
        Ok(Self { depth, y, p })
    }

    /// p for y >= 0, piecewise linear, flat beyond the last point.
    fn resistance_abs(&self, y_abs: f64) -> f64 {
        let n = self.y.len();
        if y_abs >= self.y[n - 1] {
            return self.p[n - 1];
        }
        let i = self.y.partition_point(|&v| v <= y_abs).clamp(1, n - 1);
        let s = (y_abs - self.y[i - 1]) / (self.y[i] - self.y[i - 1]);
        self.p[i - 1] + s * (self.p[i] - self.p[i - 1])
    }

    fn initial_slope(&self) -> f64 {
        self.p[1] / self.y[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PYCurveSet {
    curves: Vec<PYCurve>,
}

impl PYCurveSet {
    pub fn new(curves: Vec<PYCurve>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::Config("p-y curve set is empty".into()));
        }
        if curves.windows(2).any(|w| w[1].depth <= w[0].depth) {
            return Err(Error::Config(
                "p-y curve depths must be strictly increasing".into(),
            ));
        }
        Ok(Self { curves })
    }

    pub fn curves(&self) -> &[PYCurve] {
        &self.curves
    }

    /// Reads the long-format CSV: rows grouped by depth, each group sorted by y.
    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        let rows = csvio::read_numeric(reader, source, &PY_HEADER)?;
        Self::from_rows(rows, source)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let rows = csvio::read_numeric_path(path, &PY_HEADER)?;
        Self::from_rows(rows, &path.display().to_string())
    }

    fn from_rows(rows: csvio::NumericRows, source: &str) -> Result<Self> {
        let mut curves = Vec::new();
        let mut current: Option<(u64, f64, Vec<f64>, Vec<f64>)> = None;
        let finish = |c: (u64, f64, Vec<f64>, Vec<f64>)| {
            PYCurve::new(c.1, c.2, c.3).map_err(|e| Error::Parse {
                path: source.to_string(),
                line: c.0,
                message: e.to_string(),
            })
        };
        for (line, v) in rows.rows {
            let (depth, y, p) = (v[0], v[1], v[2]);
            match current.as_mut() {
                Some(c) if c.1 == depth => {
                    c.2.push(y);
                    c.3.push(p);
                }
                _ => {
                    if let Some(c) = current.take() {
                        curves.push(finish(c)?);
                    }
                    current = Some((line, depth, vec![y], vec![p]));
                }
            }
        }
        if let Some(c) = current.take() {
            curves.push(finish(c)?);
        }
        Self::new(curves).map_err(|e| Error::Parse {
            path: source.to_string(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "{}", PY_HEADER.join(","))?;
        for c in &self.curves {
            for (y, p) in c.y.iter().zip(&c.p) {
                writeln!(
                    out,
                    "{},{},{}",
                    csvio::fmt_f64(c.depth),
                    csvio::fmt_f64(*y),
                    csvio::fmt_f64(*p)
                )?;
            }
        }
        Ok(())
    }

    /// Bracketing curves and the interpolation weight of the upper one;
    /// depths outside the table clamp to the end curves.
    fn bracket(&self, depth: f64) -> (&PYCurve, &PYCurve, f64) {
        let n = self.curves.len();
        if n == 1 || depth <= self.curves[0].depth {
            return (&self.curves[0], &self.curves[0], 0.0);
        }
        if depth >= self.curves[n - 1].depth {
            return (&self.curves[n - 1], &self.curves[n - 1], 0.0);
        }
        let i = self
            .curves
            .partition_point(|c| c.depth <= depth)
            .clamp(1, n - 1);
        let (a, b) = (&self.curves[i - 1], &self.curves[i]);
        (a, b, (depth - a.depth) / (b.depth - a.depth))
    }

    fn initial_slope(&self, depth: f64) -> f64 {
        let (a, b, s) = self.bracket(depth);
        a.initial_slope() + s * (b.initial_slope() - a.initial_slope())
    }
}

/// Soil resistance per unit length, odd in y.
pub fn lateral_resistance(curves: &PYCurveSet, depth: f64, y: f64) -> f64 {
    let (a, b, s) = curves.bracket(depth);
    let y_abs = y.abs();
    let pa = a.resistance_abs(y_abs);
    let pb = b.resistance_abs(y_abs);
    (pa + s * (pb - pa)).copysign(y)
}

/// Secant spring coefficient `p(y) * l_s / y`, taking the initial tangent
/// as the limit near the origin.
pub fn secant_stiffness(curves: &PYCurveSet, depth: f64, y: f64, strip_length: f64) -> f64 {
    if y.abs() <= Y_TOL {
        curves.initial_slope(depth) * strip_length
    } else {
        lateral_resistance(curves, depth, y) * strip_length / y
    }
}

/// Dashpot coefficient `K_s * beta_s / (pi * f_load)`.
pub fn damping_coefficient(secant_stiffness: f64, beta_s: f64, f_load: f64) -> Result<f64> {
    if !(f_load > 0.0) {
        return Err(Error::Config(format!(
            "f_load must be positive, got {f_load} Hz"
        )));
    }
    Ok(secant_stiffness * beta_s / (PI * f_load))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoilNodeConfig {
    pub elevation: f64,
    /// Depth below mudline, positive down.
    pub depth: f64,
    pub strip_length: f64,
    pub beta_s: f64,
    pub f_load: f64,
}

impl SoilNodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.strip_length > 0.0 && self.beta_s >= 0.0 && self.f_load > 0.0) {
            return Err(Error::Config(format!("invalid soil node {self:?}")));
        }
        Ok(())
    }
}

/// `count` equally spaced nodes from the pile tip up to the mudline; end
/// nodes carry half a strip so the strips tile the embedded length.
pub fn soil_nodes(
    mudline: f64,
    tip: f64,
    count: usize,
    beta_s: f64,
    f_load: f64,
) -> Result<Vec<SoilNodeConfig>> {
    if count < 2 || !(mudline > tip) {
        return Err(Error::Config(format!(
            "need at least two soil nodes over a positive embedded length (count {count}, tip {tip} m, mudline {mudline} m)"
        )));
    }
    let spacing = (mudline - tip) / (count - 1) as f64;
    let nodes: Vec<SoilNodeConfig> = (0..count)
        .map(|i| {
            let elevation = if i == count - 1 {
                mudline
            } else {
                tip + spacing * i as f64
            };
            let end = i == 0 || i == count - 1;
            SoilNodeConfig {
                elevation,
                depth: mudline - elevation,
                strip_length: if end { 0.5 * spacing } else { spacing },
                beta_s,
                f_load,
            }
        })
        .collect();
    for n in &nodes {
        n.validate()?;
    }
    Ok(nodes)
}

/// Checks that strip lengths add up to the embedded length.
pub fn check_strip_coverage(nodes: &[SoilNodeConfig], embedded_length: f64) -> Result<()> {
    let total: f64 = nodes.iter().map(|n| n.strip_length).sum();
    if (total - embedded_length).abs() > 1e-9 * embedded_length.max(1.0) {
        return Err(Error::Config(format!(
            "soil strips cover {total} m but the embedded length is {embedded_length} m"
        )));
    }
    Ok(())
}

/// Reaction on the pile in one horizontal direction: spring `p(y) l_s`
/// plus the dashpot `C_s(y) y_dot`, both opposing the motion.
pub fn soil_reaction_force(curves: &PYCurveSet, cfg: &SoilNodeConfig, y: f64, y_dot: f64) -> f64 {
    let spring = lateral_resistance(curves, cfg.depth, y) * cfg.strip_length;
    let k_s = secant_stiffness(curves, cfg.depth, y, cfg.strip_length);
    let c_s = k_s * cfg.beta_s / (PI * cfg.f_load);
    -(spring + c_s * y_dot)
}

/// Reaction with the spring and dashpot coefficients frozen at a reference
/// displacement; used when linearizing about an equilibrium.
pub fn frozen_reaction_force(secant: f64, damping: f64, y: f64, y_dot: f64) -> f64 {
    -(secant * y + damping * y_dot)
}
